//! Medication-history entries as captured on the intake screen.
//!
//! Fields hold what the user typed; [`Validator::validate`] decides whether
//! an entry is acceptable and [`reconstruct_common_form`] maps an accepted
//! entry back onto the terminology at the most specific level its data
//! supports.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::compile::{CompiledTerminology, MedListId};

/// Month + year, written `mm/yyyy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MonthYear {
    pub year: u16,
    pub month: u8,
}

impl PartialOrd for MonthYear {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MonthYear {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.year, self.month).cmp(&(other.year, other.month))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("'{0}' is not a month/year (expected mm/yyyy)")]
pub struct BadMonthYear(pub String);

impl FromStr for MonthYear {
    type Err = BadMonthYear;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadMonthYear(s.to_owned());
        let (m, y) = s.trim().split_once('/').ok_or_else(bad)?;
        let digits = |p: &str, lens: &[usize]| lens.contains(&p.len()) && p.bytes().all(|b| b.is_ascii_digit());
        if !digits(m, &[1, 2]) || !digits(y, &[4]) {
            return Err(bad());
        }
        let month: u8 = m.parse().map_err(|_| bad())?;
        let year: u16 = y.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) || year < 1000 {
            return Err(bad());
        }
        Ok(MonthYear { year, month })
    }
}

impl fmt::Display for MonthYear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}/{:04}", self.month, self.year)
    }
}

/// A dose amount as entered. Accepts a JSON string or number; kept as text
/// so that bad input can be reported instead of rejected outright.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmountInput(pub String);

impl AmountInput {
    /// The amount as a normalized positive decimal, if it is one.
    pub fn value(&self) -> Option<Decimal> {
        let s = self.0.trim();
        if !crate::compile::is_plain_decimal(s) {
            return None;
        }
        let v = Decimal::from_str(s).ok()?.normalize();
        (v > Decimal::ZERO).then_some(v)
    }
}

impl From<&str> for AmountInput {
    fn from(s: &str) -> Self {
        AmountInput(s.to_owned())
    }
}

impl Serialize for AmountInput {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for AmountInput {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Text(s) => AmountInput(s),
            Raw::Number(n) => AmountInput(n.to_string()),
        })
    }
}

/// One medication-history row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MedicationHistoryEntry {
    pub patient_ref: String,
    pub med_list_id: Option<MedListId>,
    pub med_name: String,
    pub dose_amt: Option<AmountInput>,
    pub dose_units: Option<String>,
    pub frequency_code: Option<String>,
    /// `mm/yyyy`
    pub begin_date: Option<String>,
    pub current: bool,
    /// `mm/yyyy`
    pub end_date: Option<String>,
    pub prescriber_note: Option<String>,
    pub effectiveness_note: Option<String>,
    pub none_reported: bool,
}

/// A dose-frequency sig term such as `bid` / "Twice Daily".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoseFrequencyTerm {
    pub code: String,
    pub display: String,
}

const DEFAULT_FREQUENCIES: [(&str, &str); 10] = [
    ("qd", "once a day"),
    ("qam", "Once a day, in the morning"),
    ("qpm", "Once a day, in the evening"),
    ("qhs", "Once a day, before bed"),
    ("bid", "Twice Daily"),
    ("tid", "Three times daily"),
    ("qid", "Four times daily"),
    ("qod", "Every other day"),
    ("prn", "As Required"),
    ("mdu", "As Directed"),
];

/// The default ten dose-frequency terms, in display order.
pub fn frequency_vocabulary() -> Vec<DoseFrequencyTerm> {
    FrequencyVocabulary::default().terms().to_vec()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyVocabulary {
    terms: Vec<DoseFrequencyTerm>,
}

impl Default for FrequencyVocabulary {
    fn default() -> Self {
        FrequencyVocabulary {
            terms: DEFAULT_FREQUENCIES
                .iter()
                .map(|(code, display)| DoseFrequencyTerm {
                    code: (*code).to_owned(),
                    display: (*display).to_owned(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabularyError {
    #[error("line {0}: expected 'code<TAB>display'")]
    BadLine(usize),
    #[error("line {line}: code '{code}' is already defined")]
    Duplicate { line: usize, code: String },
}

impl FrequencyVocabulary {
    pub fn terms(&self) -> &[DoseFrequencyTerm] {
        &self.terms
    }

    pub fn get(&self, code: &str) -> Option<&DoseFrequencyTerm> {
        self.terms.iter().find(|t| t.code == code)
    }

    /// Append a term; returns `false` if the code already exists.
    pub fn push(&mut self, term: DoseFrequencyTerm) -> bool {
        if self.get(&term.code).is_some() {
            return false;
        }
        self.terms.push(term);
        true
    }

    /// Append terms from `code<TAB>display` lines (blank lines and `#`
    /// comments skipped).
    pub fn extend_from_text(&mut self, text: &str) -> Result<(), VocabularyError> {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (code, display) = line.split_once('\t').ok_or(VocabularyError::BadLine(i + 1))?;
            let (code, display) = (code.trim(), display.trim());
            if code.is_empty() || display.is_empty() {
                return Err(VocabularyError::BadLine(i + 1));
            }
            if !self.push(DoseFrequencyTerm {
                code: code.to_owned(),
                display: display.to_owned(),
            }) {
                return Err(VocabularyError::Duplicate {
                    line: i + 1,
                    code: code.to_owned(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Required,
    /// "None reported" is checked, so the field must be empty.
    MustBeEmptyWhenNoneReported,
    /// Current medications have no end date.
    DisabledWhenCurrent,
    PositiveDecimal,
    MonthYear,
    UnknownFrequency,
    EndBeforeBegin,
    Blank,
    /// The id is not in the compiled medication list.
    UnknownMedication,
    /// The body names a different patient than the request path.
    PatientMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: Rule,
}

impl Violation {
    pub fn new(field: &str, rule: Rule) -> Self {
        Violation {
            field: field.to_owned(),
            rule,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}", self.field, self.rule)
    }
}

/// Entry validation against a frequency vocabulary.
#[derive(Debug, Clone, Default)]
pub struct Validator {
    pub vocabulary: FrequencyVocabulary,
}

impl Validator {
    pub fn new(vocabulary: FrequencyVocabulary) -> Self {
        Validator { vocabulary }
    }

    /// Every rule the entry breaks, in field order. Never fails on content.
    pub fn validate(&self, e: &MedicationHistoryEntry) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if e.none_reported {
            let filled = [
                ("med_list_id", e.med_list_id.is_some()),
                ("med_name", !e.med_name.is_empty()),
                ("dose_amt", e.dose_amt.is_some()),
                ("dose_units", e.dose_units.is_some()),
                ("frequency_code", e.frequency_code.is_some()),
                ("begin_date", e.begin_date.is_some()),
                ("current", e.current),
                ("end_date", e.end_date.is_some()),
                ("prescriber_note", e.prescriber_note.is_some()),
                ("effectiveness_note", e.effectiveness_note.is_some()),
            ];
            out.extend(
                filled
                    .iter()
                    .filter(|(_, set)| *set)
                    .map(|(field, _)| Violation::new(field, Rule::MustBeEmptyWhenNoneReported)),
            );
        } else {
            if e.med_name.trim().is_empty() {
                out.push(Violation::new("med_name", Rule::Required));
            }
            if let Some(amt) = &e.dose_amt {
                if amt.value().is_none() {
                    out.push(Violation::new("dose_amt", Rule::PositiveDecimal));
                }
            }
            if e.dose_units.as_deref().is_some_and(|u| u.trim().is_empty()) {
                out.push(Violation::new("dose_units", Rule::Blank));
            }
            if let Some(code) = &e.frequency_code {
                if self.vocabulary.get(code).is_none() {
                    out.push(Violation::new("frequency_code", Rule::UnknownFrequency));
                }
            }
            let begin = match &e.begin_date {
                None => {
                    out.push(Violation::new("begin_date", Rule::Required));
                    None
                }
                Some(s) => match s.parse::<MonthYear>() {
                    Ok(d) => Some(d),
                    Err(_) => {
                        out.push(Violation::new("begin_date", Rule::MonthYear));
                        None
                    }
                },
            };
            if let Some(end) = &e.end_date {
                if e.current {
                    out.push(Violation::new("end_date", Rule::DisabledWhenCurrent));
                } else {
                    match end.parse::<MonthYear>() {
                        Err(_) => out.push(Violation::new("end_date", Rule::MonthYear)),
                        Ok(end) if begin.is_some_and(|b| end < b) => {
                            out.push(Violation::new("end_date", Rule::EndBeforeBegin))
                        }
                        Ok(_) => {}
                    }
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// [`Validator::validate`] with the default frequency vocabulary.
pub fn validate_entry(entry: &MedicationHistoryEntry) -> Result<(), Vec<Violation>> {
    Validator::default().validate(entry)
}

/// How specifically an entry maps onto the terminology. Ordered from least
/// to most specific.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Level {
    Unmapped,
    NameOnly,
    FullForm,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Unmapped => "UNMAPPED",
            Level::NameOnly => "NAME_ONLY",
            Level::FullForm => "FULL_FORM",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingLevel {
    pub level: Level,
    pub matched_rxcui: Option<String>,
    pub matched_rxaui: Option<String>,
}

impl MappingLevel {
    pub fn unmapped() -> Self {
        MappingLevel {
            level: Level::Unmapped,
            matched_rxcui: None,
            matched_rxaui: None,
        }
    }
}

/// Map an entry to a common form when medication, amount and units match
/// one exactly; otherwise to the medication alone; otherwise nothing.
pub fn reconstruct_common_form(entry: &MedicationHistoryEntry, terminology: &CompiledTerminology) -> MappingLevel {
    let Some(id) = entry.med_list_id else {
        return MappingLevel::unmapped();
    };
    let Some(med) = terminology.medication(id) else {
        return MappingLevel::unmapped();
    };
    let amount = entry.dose_amt.as_ref().and_then(AmountInput::value);
    let units = entry.dose_units.as_deref().map(|u| u.trim().to_uppercase());
    if let (Some(amount), Some(units)) = (amount, units) {
        if let Some(form) = terminology
            .common_forms(id)
            .iter()
            .find(|f| f.dose_amt == amount && f.dose_units == units)
        {
            return MappingLevel {
                level: Level::FullForm,
                matched_rxcui: Some(form.rxcui.clone()),
                matched_rxaui: Some(form.rxaui.clone()),
            };
        }
    }
    MappingLevel {
        level: Level::NameOnly,
        matched_rxcui: Some(med.rxcui.clone()),
        matched_rxaui: Some(med.rxaui.clone()),
    }
}

/// Convenience for code that already holds a med id.
pub fn med_entry(id: MedListId, name: &str, amount: &str, units: &str, begin: &str) -> MedicationHistoryEntry {
    MedicationHistoryEntry {
        med_list_id: Some(id),
        med_name: name.to_owned(),
        dose_amt: (!amount.is_empty()).then(|| AmountInput::from(amount)),
        dose_units: (!units.is_empty()).then(|| units.to_owned()),
        begin_date: Some(begin.to_owned()),
        ..Default::default()
    }
}

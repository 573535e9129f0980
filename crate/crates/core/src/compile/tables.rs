//! The three production tables and their on-disk form.
//!
//! A compiled data directory holds `med_list.tsv`, `med_list_common.tsv`,
//! `med_list_dose.tsv` (tab-separated, UTF-8, one header row each) and a
//! `manifest.json` with the release label and row counts.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::strength::is_plain_decimal;

pub const MED_LIST_FILE: &str = "med_list.tsv";
pub const MED_LIST_COMMON_FILE: &str = "med_list_common.tsv";
pub const MED_LIST_DOSE_FILE: &str = "med_list_dose.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TABLE_FORMAT: &str = "rxhistory-tables/1";

/// Surrogate key of a row in `med_list`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MedListId(pub u32);

impl fmt::Display for MedListId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for MedListId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(MedListId)
    }
}

/// One concise medication name (generic ingredient or brand).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedListEntry {
    pub med_list_id: MedListId,
    pub med_name: String,
    pub rxcui: String,
    pub rxaui: String,
    pub is_brand: bool,
    /// Atom of the single generic behind a brand, if there is exactly one.
    pub generic_rxaui: Option<String>,
}

/// One commonly prescribed dosage of a medication, e.g.
/// `aripiprazole 10 MG [Abilify]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonFormEntry {
    pub med_list_id: MedListId,
    pub common_form: String,
    pub dose_amt: Decimal,
    pub dose_units: String,
    pub rxcui: String,
    pub rxaui: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DoseUnitEntry {
    pub med_list_id: MedListId,
    pub dose_units: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrityError {
    #[error("duplicate med_list_id {0}")]
    DuplicateId(MedListId),
    #[error("duplicate med_name '{0}' (names are unique ignoring case)")]
    DuplicateName(String),
    #[error("{table} row has an empty {column}")]
    EmptyField { table: &'static str, column: &'static str },
    #[error("{table}.{column} contains a tab or line break: {value:?}")]
    ControlCharacter {
        table: &'static str,
        column: &'static str,
        value: String,
    },
    #[error("med_list_id {id} has generic_rxaui but is not a brand")]
    GenericOnNonBrand { id: MedListId },
    #[error("{table} references unknown med_list_id {id}")]
    DanglingKey { table: &'static str, id: MedListId },
    #[error("dose_amt {amount} of '{form}' is not positive")]
    NonPositiveDose { form: String, amount: Decimal },
    #[error("duplicate common form '{form}' for med_list_id {id}")]
    DuplicateForm { id: MedListId, form: String },
    #[error("duplicate dose unit '{units}' for med_list_id {id}")]
    DuplicateUnit { id: MedListId, units: String },
    #[error("common form '{form}' uses unit '{units}' missing from med_list_dose for med_list_id {id}")]
    UnitNotListed { id: MedListId, form: String, units: String },
}

/// The compiled, immutable terminology: `med_list`, `med_list_common` and
/// `med_list_dose`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledTerminology {
    med_list: Vec<MedListEntry>,
    med_list_common: Vec<CommonFormEntry>,
    med_list_dose: Vec<DoseUnitEntry>,
    version_tag: String,
    by_id: HashMap<MedListId, usize>,
    form_ranges: HashMap<MedListId, Range<usize>>,
    unit_ranges: HashMap<MedListId, Range<usize>>,
}

fn check_text(table: &'static str, column: &'static str, value: &str, allow_empty: bool) -> Result<(), IntegrityError> {
    if !allow_empty && value.trim().is_empty() {
        return Err(IntegrityError::EmptyField { table, column });
    }
    if value.contains(['\t', '\n', '\r']) {
        return Err(IntegrityError::ControlCharacter {
            table,
            column,
            value: value.to_owned(),
        });
    }
    Ok(())
}

fn ranges<T>(rows: &[T], key: impl Fn(&T) -> MedListId) -> HashMap<MedListId, Range<usize>> {
    let mut out: HashMap<MedListId, Range<usize>> = HashMap::new();
    for (i, row) in rows.iter().enumerate() {
        out.entry(key(row)).and_modify(|r| r.end = i + 1).or_insert(i..i + 1);
    }
    out
}

impl CompiledTerminology {
    /// Assemble and check the three tables. Rows may come in any order; they
    /// are stored sorted (`med_list` by id, forms by id, units, amount).
    pub fn new(
        mut med_list: Vec<MedListEntry>,
        mut med_list_common: Vec<CommonFormEntry>,
        mut med_list_dose: Vec<DoseUnitEntry>,
        version_tag: impl Into<String>,
    ) -> Result<Self, IntegrityError> {
        med_list.sort_by_key(|m| m.med_list_id);
        med_list_common.sort_by(|a, b| {
            (a.med_list_id, &a.dose_units, a.dose_amt, &a.common_form).cmp(&(
                b.med_list_id,
                &b.dose_units,
                b.dose_amt,
                &b.common_form,
            ))
        });
        med_list_dose.sort();

        let mut by_id = HashMap::with_capacity(med_list.len());
        let mut names = HashSet::with_capacity(med_list.len());
        for (i, m) in med_list.iter().enumerate() {
            if by_id.insert(m.med_list_id, i).is_some() {
                return Err(IntegrityError::DuplicateId(m.med_list_id));
            }
            check_text("med_list", "med_name", &m.med_name, false)?;
            check_text("med_list", "rxcui", &m.rxcui, false)?;
            check_text("med_list", "rxaui", &m.rxaui, false)?;
            if !names.insert(m.med_name.to_uppercase()) {
                return Err(IntegrityError::DuplicateName(m.med_name.clone()));
            }
            match &m.generic_rxaui {
                Some(_) if !m.is_brand => return Err(IntegrityError::GenericOnNonBrand { id: m.med_list_id }),
                Some(g) => check_text("med_list", "generic_rxaui", g, false)?,
                None => {}
            }
        }

        let mut units = HashSet::with_capacity(med_list_dose.len());
        for d in &med_list_dose {
            if !by_id.contains_key(&d.med_list_id) {
                return Err(IntegrityError::DanglingKey {
                    table: "med_list_dose",
                    id: d.med_list_id,
                });
            }
            check_text("med_list_dose", "dose_units", &d.dose_units, false)?;
            if !units.insert((d.med_list_id, d.dose_units.as_str())) {
                return Err(IntegrityError::DuplicateUnit {
                    id: d.med_list_id,
                    units: d.dose_units.clone(),
                });
            }
        }

        let mut forms = HashSet::with_capacity(med_list_common.len());
        for c in &med_list_common {
            if !by_id.contains_key(&c.med_list_id) {
                return Err(IntegrityError::DanglingKey {
                    table: "med_list_common",
                    id: c.med_list_id,
                });
            }
            check_text("med_list_common", "common_form", &c.common_form, false)?;
            check_text("med_list_common", "dose_units", &c.dose_units, false)?;
            check_text("med_list_common", "rxcui", &c.rxcui, false)?;
            check_text("med_list_common", "rxaui", &c.rxaui, false)?;
            if c.dose_amt <= Decimal::ZERO {
                return Err(IntegrityError::NonPositiveDose {
                    form: c.common_form.clone(),
                    amount: c.dose_amt,
                });
            }
            if !forms.insert((c.med_list_id, c.common_form.as_str())) {
                return Err(IntegrityError::DuplicateForm {
                    id: c.med_list_id,
                    form: c.common_form.clone(),
                });
            }
            if !units.contains(&(c.med_list_id, c.dose_units.as_str())) {
                return Err(IntegrityError::UnitNotListed {
                    id: c.med_list_id,
                    form: c.common_form.clone(),
                    units: c.dose_units.clone(),
                });
            }
        }
        for c in &mut med_list_common {
            c.dose_amt = c.dose_amt.normalize();
        }

        let form_ranges = ranges(&med_list_common, |c| c.med_list_id);
        let unit_ranges = ranges(&med_list_dose, |d| d.med_list_id);
        Ok(CompiledTerminology {
            med_list,
            med_list_common,
            med_list_dose,
            version_tag: version_tag.into(),
            by_id,
            form_ranges,
            unit_ranges,
        })
    }

    pub fn med_list(&self) -> &[MedListEntry] {
        &self.med_list
    }

    pub fn med_list_common(&self) -> &[CommonFormEntry] {
        &self.med_list_common
    }

    pub fn med_list_dose(&self) -> &[DoseUnitEntry] {
        &self.med_list_dose
    }

    pub fn version_tag(&self) -> &str {
        &self.version_tag
    }

    pub fn is_empty(&self) -> bool {
        self.med_list.is_empty()
    }

    pub fn medication(&self, id: MedListId) -> Option<&MedListEntry> {
        self.by_id.get(&id).map(|&i| &self.med_list[i])
    }

    /// Forms of one medication ordered by dose units, then dose amount.
    pub fn common_forms(&self, id: MedListId) -> &[CommonFormEntry] {
        self.form_ranges
            .get(&id)
            .map_or(&[][..], |r| &self.med_list_common[r.clone()])
    }

    /// Distinct dose units of one medication, ascending.
    pub fn dose_units(&self, id: MedListId) -> &[DoseUnitEntry] {
        self.unit_ranges
            .get(&id)
            .map_or(&[][..], |r| &self.med_list_dose[r.clone()])
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format: TABLE_FORMAT.to_owned(),
            version_tag: self.version_tag.clone(),
            med_list_rows: self.med_list.len(),
            med_list_common_rows: self.med_list_common.len(),
            med_list_dose_rows: self.med_list_dose.len(),
        }
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version_tag: String,
    pub med_list_rows: usize,
    pub med_list_common_rows: usize,
    pub med_list_dose_rows: usize,
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("unsupported table format '{0}' (expected {TABLE_FORMAT})")]
    UnsupportedFormat(String),
    #[error("{file}: {source}")]
    Tsv { file: &'static str, source: csv::Error },
    #[error("{file}: bad value in row {row}: {why}")]
    BadValue {
        file: &'static str,
        row: usize,
        why: String,
    },
    #[error("{file}: manifest declares {expected} rows, found {found}")]
    RowCount {
        file: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("tables are inconsistent: {0}")]
    Integrity(#[from] IntegrityError),
}

#[derive(Serialize, Deserialize)]
struct CommonRow {
    med_list_id: MedListId,
    common_form: String,
    dose_amt: String,
    dose_units: String,
    rxcui: String,
    rxaui: String,
}

fn tsv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(w)
}

fn tsv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(true)
        .from_reader(r)
}

fn read_rows<T: serde::de::DeserializeOwned>(file: &'static str, r: impl Read) -> Result<Vec<T>, TableError> {
    tsv_reader(r)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|source| TableError::Tsv { file, source })
}

fn check_count(file: &'static str, expected: usize, found: usize) -> Result<(), TableError> {
    if expected == found {
        Ok(())
    } else {
        Err(TableError::RowCount { file, expected, found })
    }
}

impl CompiledTerminology {
    /// Write the three tables and the manifest into `dir` (created if needed).
    pub fn write_tables(&self, dir: &Path) -> Result<(), TableError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| TableError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;

        let path = dir.join(MED_LIST_FILE);
        let mut w = tsv_writer(BufWriter::new(File::create(&path).map_err(io_err(&path))?));
        if self.med_list.is_empty() {
            w.write_record(["med_list_id", "med_name", "rxcui", "rxaui", "is_brand", "generic_rxaui"])
                .map_err(|source| TableError::Tsv {
                    file: MED_LIST_FILE,
                    source,
                })?;
        }
        for m in &self.med_list {
            w.serialize(m).map_err(|source| TableError::Tsv {
                file: MED_LIST_FILE,
                source,
            })?;
        }
        w.flush().map_err(io_err(&path))?;

        let path = dir.join(MED_LIST_COMMON_FILE);
        let mut w = tsv_writer(BufWriter::new(File::create(&path).map_err(io_err(&path))?));
        if self.med_list_common.is_empty() {
            w.write_record(["med_list_id", "common_form", "dose_amt", "dose_units", "rxcui", "rxaui"])
                .map_err(|source| TableError::Tsv {
                    file: MED_LIST_COMMON_FILE,
                    source,
                })?;
        }
        for c in &self.med_list_common {
            w.serialize(CommonRow {
                med_list_id: c.med_list_id,
                common_form: c.common_form.clone(),
                dose_amt: c.dose_amt.to_string(),
                dose_units: c.dose_units.clone(),
                rxcui: c.rxcui.clone(),
                rxaui: c.rxaui.clone(),
            })
            .map_err(|source| TableError::Tsv {
                file: MED_LIST_COMMON_FILE,
                source,
            })?;
        }
        w.flush().map_err(io_err(&path))?;

        let path = dir.join(MED_LIST_DOSE_FILE);
        let mut w = tsv_writer(BufWriter::new(File::create(&path).map_err(io_err(&path))?));
        if self.med_list_dose.is_empty() {
            w.write_record(["med_list_id", "dose_units"])
                .map_err(|source| TableError::Tsv {
                    file: MED_LIST_DOSE_FILE,
                    source,
                })?;
        }
        for d in &self.med_list_dose {
            w.serialize(d).map_err(|source| TableError::Tsv {
                file: MED_LIST_DOSE_FILE,
                source,
            })?;
        }
        w.flush().map_err(io_err(&path))?;

        let path = dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(&self.manifest())?;
        json.push('\n');
        std::fs::write(&path, json).map_err(io_err(&path))?;
        Ok(())
    }

    /// Load a compiled data directory, checking the manifest and every table
    /// invariant.
    pub fn read_tables(dir: &Path) -> Result<Self, TableError> {
        let open = |name: &str| {
            let path = dir.join(name);
            File::open(&path).map_err(|source| TableError::Io { path, source })
        };
        Self::from_readers(
            open(MANIFEST_FILE)?,
            open(MED_LIST_FILE)?,
            open(MED_LIST_COMMON_FILE)?,
            open(MED_LIST_DOSE_FILE)?,
        )
    }

    pub fn from_readers(
        manifest: impl Read,
        med_list: impl Read,
        med_list_common: impl Read,
        med_list_dose: impl Read,
    ) -> Result<Self, TableError> {
        let manifest: Manifest = serde_json::from_reader(manifest)?;
        if manifest.format != TABLE_FORMAT {
            return Err(TableError::UnsupportedFormat(manifest.format));
        }
        let meds: Vec<MedListEntry> = read_rows(MED_LIST_FILE, med_list)?;
        let common: Vec<CommonRow> = read_rows(MED_LIST_COMMON_FILE, med_list_common)?;
        let dose: Vec<DoseUnitEntry> = read_rows(MED_LIST_DOSE_FILE, med_list_dose)?;
        check_count(MED_LIST_FILE, manifest.med_list_rows, meds.len())?;
        check_count(MED_LIST_COMMON_FILE, manifest.med_list_common_rows, common.len())?;
        check_count(MED_LIST_DOSE_FILE, manifest.med_list_dose_rows, dose.len())?;

        let common = common
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let bad = |why: &str| TableError::BadValue {
                    file: MED_LIST_COMMON_FILE,
                    row: i + 1,
                    why: why.to_owned(),
                };
                if !is_plain_decimal(&row.dose_amt) {
                    return Err(bad("dose_amt is not a plain decimal"));
                }
                let dose_amt = Decimal::from_str(&row.dose_amt).map_err(|_| bad("dose_amt out of range"))?;
                Ok(CommonFormEntry {
                    med_list_id: row.med_list_id,
                    common_form: row.common_form,
                    dose_amt,
                    dose_units: row.dose_units,
                    rxcui: row.rxcui,
                    rxaui: row.rxaui,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(meds, common, dose, manifest.version_tag)?)
    }
}

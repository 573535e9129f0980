//! Turns parsed RRF rows into the production tables.
//!
//! Pipeline: source filter, suppressions, strength extraction for
//! common-form atoms, name linking via `has_ingredient`, brand flags and
//! `tradename_of` resolution, then the distinct dose-unit table.

mod names;
mod strength;
mod suppress;
mod tables;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use rust_decimal::Decimal;
use serde::Serialize;
use thiserror::Error;

use crate::rrf::{AttributeRow, ConceptRow, RelationshipRow};

pub use names::{resolve_med_names, resolve_tradenames};
pub(crate) use strength::is_plain_decimal;
pub use strength::{extract_strength, UnparseableStrength};
pub use suppress::{apply_suppressions, DenyList, SuppressionCounts};
pub use tables::{
    CommonFormEntry, CompiledTerminology, DoseUnitEntry, IntegrityError, Manifest, MedListEntry, MedListId, TableError,
    MANIFEST_FILE, MED_LIST_COMMON_FILE, MED_LIST_DOSE_FILE, MED_LIST_FILE, TABLE_FORMAT,
};

use names::{clean_text, link_names, tradename_map, AtomIndex};

pub const RXN_STRENGTH: &str = "RXN_STRENGTH";

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

/// Term-type and source selections used by the compiler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileOptions {
    /// Term types whose atoms become common forms.
    pub form_ttys: BTreeSet<String>,
    /// Term types that can serve as a concise medication name.
    pub name_ttys: BTreeSet<String>,
    /// Term types flagged as brand names.
    pub brand_ttys: BTreeSet<String>,
    /// Term types of "Brand of" records, always suppressed.
    pub brand_of_ttys: BTreeSet<String>,
    /// Accepted `sab` values; empty accepts every source.
    pub sources: BTreeSet<String>,
    pub version_tag: String,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            form_ttys: set(&["SCDC", "SBDC"]),
            name_ttys: set(&["IN", "PIN", "MIN", "BN"]),
            brand_ttys: set(&["BN", "SBD", "SBDC", "SBDF", "SBDG", "BPCK"]),
            brand_of_ttys: set(&["BD"]),
            sources: set(&["RXNORM"]),
            version_tag: "unversioned".to_owned(),
        }
    }
}

impl CompileOptions {
    pub fn accepts_source(&self, sab: &str) -> bool {
        self.sources.is_empty() || self.sources.contains(sab)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrengthFailure {
    pub rxaui: String,
    pub common_form: String,
    pub reason: String,
}

/// Counters describing one compilation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CompileReport {
    pub input_concepts: usize,
    pub other_sources: usize,
    pub suppression: SuppressionCounts,
    pub form_atoms: usize,
    pub forms_without_strength: usize,
    pub strength_failures: Vec<StrengthFailure>,
    pub forms_without_name: usize,
    pub medications: usize,
    pub common_forms: usize,
    pub dose_units: usize,
    pub brands_with_generic: usize,
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(
        "stage {stage}: 0 common forms ({concepts} concepts read, {form_atoms} form atoms, \
         {with_strength} with a usable strength, {linked} linked to a medication name)"
    )]
    NoCommonForms {
        stage: &'static str,
        concepts: usize,
        form_atoms: usize,
        with_strength: usize,
        linked: usize,
    },
    #[error("stage {stage}: {source}")]
    Integrity {
        stage: &'static str,
        #[source]
        source: IntegrityError,
    },
}

#[derive(Debug, Clone)]
pub struct Compilation {
    pub terminology: CompiledTerminology,
    pub report: CompileReport,
}

/// Run the whole pipeline.
pub fn compile(
    concepts: &[ConceptRow],
    relationships: &[RelationshipRow],
    attributes: &[AttributeRow],
    deny_list: &DenyList,
    options: &CompileOptions,
) -> Result<Compilation, CompileError> {
    let mut report = CompileReport {
        input_concepts: concepts.len(),
        ..Default::default()
    };

    let sourced: Vec<&ConceptRow> = concepts.iter().filter(|c| options.accepts_source(&c.sab)).collect();
    report.other_sources = concepts.len() - sourced.len();
    let all_atoms = AtomIndex::new(sourced.iter().copied());
    let (kept, suppression) = apply_suppressions(sourced.iter().copied(), deny_list, &options.brand_of_ttys);
    report.suppression = suppression;
    let index = AtomIndex::new(kept.iter().copied());

    // strengths keyed by atom, falling back to concept-level attributes
    let mut by_aui: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let mut by_cui: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for attr in attributes.iter().filter(|a| a.atn == RXN_STRENGTH) {
        if attr.rxaui.is_empty() {
            by_cui.entry(&attr.rxcui).or_default().insert(&attr.atv);
        } else {
            by_aui.entry(&attr.rxaui).or_default().insert(&attr.atv);
        }
    }

    let mut strengths: HashMap<&str, (Decimal, String)> = HashMap::new();
    let mut forms: Vec<&ConceptRow> = Vec::new();
    for form in kept.iter().copied().filter(|c| options.form_ttys.contains(&c.tty)) {
        report.form_atoms += 1;
        let values = by_aui
            .get(form.rxaui.as_str())
            .or_else(|| by_cui.get(form.rxcui.as_str()));
        let Some(values) = values else {
            report.forms_without_strength += 1;
            continue;
        };
        let parsed = if values.len() > 1 {
            Err(format!("{} distinct strengths", values.len()))
        } else {
            let atv = values.first().expect("non-empty");
            match extract_strength(atv) {
                Ok((amt, _)) if amt <= Decimal::ZERO => Err(format!("non-positive strength '{atv}'")),
                Ok(s) => Ok(s),
                Err(e) => Err(e.to_string()),
            }
        };
        match parsed {
            Ok(s) => {
                strengths.insert(form.rxaui.as_str(), s);
                forms.push(form);
            }
            Err(reason) => {
                warn!("excluding common form {} '{}': {reason}", form.rxaui, form.term);
                report.strength_failures.push(StrengthFailure {
                    rxaui: form.rxaui.clone(),
                    common_form: form.term.clone(),
                    reason,
                });
            }
        }
    }

    let links = link_names(&index, &forms, relationships, options);
    let linked: BTreeSet<&str> = links.form_links.iter().map(|(_, f)| f.rxaui.as_str()).collect();
    report.forms_without_name = forms.len() - linked.len();

    let tradenames = tradename_map(relationships, &all_atoms, options);
    let mut med_list = links.entries;
    for med in med_list.iter_mut().filter(|m| m.is_brand) {
        med.generic_rxaui = tradenames
            .get(&med.rxaui)
            .filter(|g| index.get(g).is_some_and(|a| !options.brand_ttys.contains(&a.tty)))
            .cloned();
    }
    report.brands_with_generic = med_list.iter().filter(|m| m.generic_rxaui.is_some()).count();

    // (med, common_form) -> entry; the smallest atom id wins on duplicates
    let mut common: BTreeMap<(MedListId, String), CommonFormEntry> = BTreeMap::new();
    for (id, form) in &links.form_links {
        let (amt, units) = &strengths[form.rxaui.as_str()];
        let entry = CommonFormEntry {
            med_list_id: *id,
            common_form: clean_text(&form.term),
            dose_amt: *amt,
            dose_units: clean_text(units),
            rxcui: form.rxcui.clone(),
            rxaui: form.rxaui.clone(),
        };
        common
            .entry((*id, entry.common_form.clone()))
            .and_modify(|e| {
                if entry.rxaui < e.rxaui {
                    *e = entry.clone();
                }
            })
            .or_insert(entry);
    }
    let common: Vec<CommonFormEntry> = common.into_values().collect();
    if common.is_empty() {
        return Err(CompileError::NoCommonForms {
            stage: "common_forms",
            concepts: concepts.len(),
            form_atoms: report.form_atoms,
            with_strength: forms.len(),
            linked: linked.len(),
        });
    }
    let dose: BTreeSet<DoseUnitEntry> = common
        .iter()
        .map(|c| DoseUnitEntry {
            med_list_id: c.med_list_id,
            dose_units: c.dose_units.clone(),
        })
        .collect();

    report.medications = med_list.len();
    report.common_forms = common.len();
    report.dose_units = dose.len();
    let terminology = CompiledTerminology::new(med_list, common, dose.into_iter().collect(), &options.version_tag)
        .map_err(|source| CompileError::Integrity {
            stage: "assemble",
            source,
        })?;
    Ok(Compilation { terminology, report })
}

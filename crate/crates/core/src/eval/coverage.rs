use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::compile::CompiledTerminology;

/// Substrings marking supplements and OTC products that a prescription
/// terminology is not expected to carry.
pub const DEFAULT_SUPPLEMENT_PATTERNS: &[&str] = &[
    "omega-3",
    "omega 3",
    "fatty acid",
    "fish oil",
    "vitamin",
    "nicotine",
    "supplement",
    "probiotic",
    "melatonin",
    "glucosamine",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NonMatchClass {
    /// A known name is a prefix of this one or the reverse, e.g. an
    /// extended-release suffix.
    NamingVariation,
    SupplementOrOtc,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonMatch {
    pub name: String,
    pub class: NonMatchClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub total: usize,
    pub matched: usize,
    /// `matched / total`, 0 for an empty list.
    pub rate: f64,
    pub non_matches: Vec<NonMatch>,
}

impl CoverageReport {
    pub fn count(&self, class: NonMatchClass) -> usize {
        self.non_matches.iter().filter(|n| n.class == class).count()
    }
}

/// Comparison key: surrounding whitespace dropped, case folded.
pub fn match_key(name: &str) -> String {
    name.trim().to_uppercase()
}

/// Exact case-insensitive name matcher over a terminology's medication list.
#[derive(Debug, Clone)]
pub struct CoverageMatcher {
    known: HashSet<String>,
    sorted: Vec<String>,
    patterns: Vec<String>,
}

impl CoverageMatcher {
    pub fn new<'a>(names: impl IntoIterator<Item = &'a str>, patterns: &[&str]) -> Self {
        let known: HashSet<String> = names.into_iter().map(match_key).filter(|k| !k.is_empty()).collect();
        let mut sorted: Vec<String> = known.iter().cloned().collect();
        sorted.sort();
        CoverageMatcher {
            known,
            sorted,
            patterns: patterns.iter().map(|p| match_key(p)).collect(),
        }
    }

    pub fn for_terminology(terminology: &CompiledTerminology) -> Self {
        Self::new(
            terminology.med_list().iter().map(|m| m.med_name.as_str()),
            DEFAULT_SUPPLEMENT_PATTERNS,
        )
    }

    pub fn matches(&self, name: &str) -> bool {
        self.known.contains(&match_key(name))
    }

    pub fn classify(&self, name: &str) -> NonMatchClass {
        let key = match_key(name);
        if !key.is_empty() && (self.known_prefix_of(&key) || self.extends_to_known(&key)) {
            NonMatchClass::NamingVariation
        } else if self.patterns.iter().any(|p| key.contains(p.as_str())) {
            NonMatchClass::SupplementOrOtc
        } else {
            NonMatchClass::Other
        }
    }

    fn known_prefix_of(&self, key: &str) -> bool {
        key.char_indices()
            .skip(1)
            .map(|(i, _)| &key[..i])
            .any(|p| self.known.contains(p))
    }

    fn extends_to_known(&self, key: &str) -> bool {
        let at = self.sorted.partition_point(|k| k.as_str() <= key);
        self.sorted.get(at).is_some_and(|k| k.starts_with(key))
    }

    pub fn report<S: AsRef<str>>(&self, legacy_names: &[S]) -> CoverageReport {
        let mut matched = 0;
        let mut non_matches = Vec::new();
        for name in legacy_names.iter().map(AsRef::as_ref) {
            if self.matches(name) {
                matched += 1;
            } else {
                non_matches.push(NonMatch {
                    name: name.to_owned(),
                    class: self.classify(name),
                });
            }
        }
        let total = legacy_names.len();
        CoverageReport {
            total,
            matched,
            rate: if total == 0 { 0.0 } else { matched as f64 / total as f64 },
            non_matches,
        }
    }
}

/// Share of legacy names found in the terminology's medication list, with
/// every miss classified.
pub fn match_coverage<S: AsRef<str>>(legacy_names: &[S], terminology: &CompiledTerminology) -> CoverageReport {
    CoverageMatcher::for_terminology(terminology).report(legacy_names)
}

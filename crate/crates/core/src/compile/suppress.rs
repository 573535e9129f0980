use std::collections::BTreeSet;
use std::io::{self, Read};

use serde::Serialize;

use crate::rrf::ConceptRow;

/// Case-insensitive substring patterns for names that must never reach the
/// production tables (non-human products and similar).
///
/// Text form: one pattern per line; blank lines and `#` comments ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DenyList {
    patterns: Vec<String>,
}

impl DenyList {
    pub fn new<I, S>(patterns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let patterns = patterns
            .into_iter()
            .map(|p| p.as_ref().trim().to_uppercase())
            .filter(|p| !p.is_empty())
            .collect();
        DenyList { patterns }
    }

    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().filter(|l| !l.trim_start().starts_with('#')))
    }

    pub fn from_reader(mut r: impl Read) -> io::Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Ok(Self::parse(&text))
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// The first pattern contained in `name`, if any.
    pub fn matching_pattern(&self, name: &str) -> Option<&str> {
        let folded = name.to_uppercase();
        self.patterns
            .iter()
            .find(|p| folded.contains(p.as_str()))
            .map(String::as_str)
    }
}

/// How many atoms each suppression rule removed. An atom is counted once,
/// under the first rule that hits it (flag, then "Brand of", then deny-list).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SuppressionCounts {
    pub suppressed_flag: usize,
    pub brand_of: usize,
    pub deny_listed: usize,
}

impl SuppressionCounts {
    pub fn total(&self) -> usize {
        self.suppressed_flag + self.brand_of + self.deny_listed
    }
}

/// Drop atoms carrying a suppress flag, "Brand of" term types, or a
/// deny-listed term string.
pub fn apply_suppressions<'a>(
    candidates: impl IntoIterator<Item = &'a ConceptRow>,
    deny_list: &DenyList,
    brand_of_ttys: &BTreeSet<String>,
) -> (Vec<&'a ConceptRow>, SuppressionCounts) {
    let mut counts = SuppressionCounts::default();
    let kept = candidates
        .into_iter()
        .filter(|row| {
            if row.is_suppressed() {
                counts.suppressed_flag += 1;
                false
            } else if brand_of_ttys.contains(&row.tty) {
                counts.brand_of += 1;
                false
            } else if deny_list.matching_pattern(&row.term).is_some() {
                counts.deny_listed += 1;
                false
            } else {
                true
            }
        })
        .collect();
    (kept, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(tty: &str, term: &str, suppress: char) -> ConceptRow {
        ConceptRow {
            rxcui: "1".into(),
            rxaui: "2".into(),
            sab: "RXNORM".into(),
            tty: tty.into(),
            term: term.into(),
            suppress,
        }
    }

    fn bd() -> BTreeSet<String> {
        ["BD".to_owned()].into()
    }

    #[test]
    fn obsolete_flag_removed() {
        let rows = [row("IN", "oldmed", 'O'), row("IN", "sertraline", 'N')];
        let (kept, counts) = apply_suppressions(&rows, &DenyList::default(), &bd());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].term, "sertraline");
        assert_eq!(counts.suppressed_flag, 1);
    }

    #[test]
    fn deny_list_is_case_insensitive_substring() {
        let rows = [row("BN", "Flea Shampoo", 'N'), row("BN", "Zoloft", 'N')];
        let deny = DenyList::parse("# non-human\nshampoo\n\n");
        assert_eq!(deny.len(), 1);
        let (kept, counts) = apply_suppressions(&rows, &deny, &bd());
        assert_eq!(kept.iter().map(|r| r.term.as_str()).collect::<Vec<_>>(), ["Zoloft"]);
        assert_eq!(counts.deny_listed, 1);
    }

    #[test]
    fn empty_deny_list_only_flag_and_tty() {
        let rows = [
            row("BD", "Sertraline Brand of Zoloft", 'N'),
            row("IN", "x", 'E'),
            row("BN", "Flea Shampoo", 'N'),
        ];
        let (kept, counts) = apply_suppressions(&rows, &DenyList::default(), &bd());
        assert_eq!(kept.len(), 1);
        assert_eq!(
            counts,
            SuppressionCounts {
                suppressed_flag: 1,
                brand_of: 1,
                deny_listed: 0
            }
        );
        assert_eq!(counts.total(), 2);
    }
}

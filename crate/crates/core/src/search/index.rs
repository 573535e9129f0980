use std::collections::HashMap;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};

use crate::compile::{CompiledTerminology, MedListId};

pub const DEFAULT_SUGGEST_LIMIT: usize = 12;
/// Queries shorter than this (after trimming) return nothing.
pub const MIN_QUERY_CHARS: usize = 2;

/// Case folding used for both ordering and matching.
pub fn fold(s: &str) -> String {
    s.to_uppercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Suggestion {
    pub med_list_id: MedListId,
    pub med_name: String,
}

/// Immutable auto-complete index over the medication names.
///
/// Entries are kept in case-folded name order. A posting list per folded
/// character bigram narrows each query to the names containing its rarest
/// bigram; those candidates are then checked with a plain substring test,
/// so matching is unanchored.
#[derive(Debug, Clone)]
pub struct SearchIndex {
    entries: Vec<Suggestion>,
    folded: Vec<String>,
    bigrams: HashMap<(char, char), Vec<u32>>,
    built_at: SystemTime,
}

impl SearchIndex {
    pub fn build(terminology: &CompiledTerminology) -> Self {
        Self::from_entries(terminology.med_list().iter().map(|m| Suggestion {
            med_list_id: m.med_list_id,
            med_name: m.med_name.clone(),
        }))
    }

    pub fn from_entries(entries: impl IntoIterator<Item = Suggestion>) -> Self {
        let mut rows: Vec<(String, Suggestion)> = entries.into_iter().map(|s| (fold(&s.med_name), s)).collect();
        rows.sort_by(|a, b| (&a.0, a.1.med_list_id).cmp(&(&b.0, b.1.med_list_id)));

        let mut bigrams: HashMap<(char, char), Vec<u32>> = HashMap::new();
        for (i, (folded, _)) in rows.iter().enumerate() {
            let i = i as u32;
            let mut chars = folded.chars();
            let Some(mut prev) = chars.next() else { continue };
            for c in chars {
                let list = bigrams.entry((prev, c)).or_default();
                if list.last() != Some(&i) {
                    list.push(i);
                }
                prev = c;
            }
        }
        let (folded, entries) = rows.into_iter().unzip();
        SearchIndex {
            entries,
            folded,
            bigrams,
            built_at: SystemTime::now(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All entries in index order.
    pub fn entries(&self) -> &[Suggestion] {
        &self.entries
    }

    pub fn built_at(&self) -> SystemTime {
        self.built_at
    }

    /// Up to `limit` names containing `query` anywhere, ignoring case, in
    /// index order. Queries under two characters match nothing.
    pub fn suggest(&self, query: &str, limit: usize) -> Vec<Suggestion> {
        let query = query.trim();
        if query.chars().count() < MIN_QUERY_CHARS || limit == 0 {
            return Vec::new();
        }
        let needle = fold(query);
        let chars: Vec<char> = needle.chars().collect();
        let mut rarest: Option<&Vec<u32>> = None;
        for pair in chars.windows(2) {
            match self.bigrams.get(&(pair[0], pair[1])) {
                None => return Vec::new(),
                Some(list) if rarest.is_none_or(|r| list.len() < r.len()) => rarest = Some(list),
                Some(_) => {}
            }
        }
        let Some(candidates) = rarest else {
            return Vec::new();
        };
        let single_bigram = chars.len() == 2;
        candidates
            .iter()
            .map(|&i| i as usize)
            .filter(|&i| single_bigram || self.folded[i].contains(&needle))
            .take(limit)
            .map(|i| self.entries[i].clone())
            .collect()
    }
}

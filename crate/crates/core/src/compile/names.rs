//! Linking common forms to concise medication names, and brands to generics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::rrf::{ConceptRow, RelationshipRow};

use super::tables::{MedListEntry, MedListId};
use super::CompileOptions;

pub(crate) const HAS_INGREDIENT: &str = "has_ingredient";
pub(crate) const TRADENAME_OF: &str = "tradename_of";

/// Atom lookup by atom id and by concept id.
pub(crate) struct AtomIndex<'a> {
    by_aui: HashMap<&'a str, &'a ConceptRow>,
    by_cui: HashMap<&'a str, Vec<&'a ConceptRow>>,
}

impl<'a> AtomIndex<'a> {
    pub(crate) fn new(atoms: impl IntoIterator<Item = &'a ConceptRow>) -> Self {
        let mut by_aui = HashMap::new();
        let mut by_cui: HashMap<&str, Vec<&ConceptRow>> = HashMap::new();
        for atom in atoms {
            by_aui.entry(atom.rxaui.as_str()).or_insert(atom);
            by_cui.entry(atom.rxcui.as_str()).or_default().push(atom);
        }
        AtomIndex { by_aui, by_cui }
    }

    pub(crate) fn get(&self, rxaui: &str) -> Option<&'a ConceptRow> {
        self.by_aui.get(rxaui).copied()
    }

    /// Atoms a relationship endpoint refers to: the named atom when the row is
    /// atom-level, otherwise every atom of the concept.
    pub(crate) fn endpoint(&self, rxcui: &str, rxaui: &str) -> Vec<&'a ConceptRow> {
        if rxaui.is_empty() {
            self.by_cui.get(rxcui).cloned().unwrap_or_default()
        } else {
            self.by_aui.get(rxaui).map(|a| vec![*a]).unwrap_or_default()
        }
    }
}

/// Map each brand atom to its generic atom when exactly one generic exists.
///
/// `tradename_of` rows are read as `brand tradename_of generic` (atom 2 is
/// the brand). Brands with several generics, as with multi-ingredient OTC
/// products, stay unmapped.
pub fn resolve_tradenames(
    relationships: &[RelationshipRow],
    concepts: &[ConceptRow],
    options: &CompileOptions,
) -> BTreeMap<String, String> {
    let index = AtomIndex::new(concepts.iter().filter(|c| options.accepts_source(&c.sab)));
    tradename_map(relationships, &index, options)
}

pub(crate) fn tradename_map(
    relationships: &[RelationshipRow],
    index: &AtomIndex<'_>,
    options: &CompileOptions,
) -> BTreeMap<String, String> {
    let mut candidates: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for rel in relationships.iter().filter(|r| r.rela == TRADENAME_OF) {
        let brands = index.endpoint(&rel.rxcui2, &rel.rxaui2);
        let generics = index.endpoint(&rel.rxcui1, &rel.rxaui1);
        for brand in brands.iter().filter(|a| options.brand_ttys.contains(&a.tty)) {
            let set = candidates.entry(brand.rxaui.as_str()).or_default();
            set.extend(
                generics
                    .iter()
                    .filter(|g| !options.brand_ttys.contains(&g.tty))
                    .map(|g| g.rxaui.as_str()),
            );
        }
    }
    candidates
        .into_iter()
        .filter_map(|(brand, generics)| {
            let mut it = generics.into_iter();
            match (it.next(), it.next()) {
                (Some(g), None) => Some((brand.to_owned(), g.to_owned())),
                _ => None,
            }
        })
        .collect()
}

/// Result of linking forms to names.
pub(crate) struct NameLinks<'a> {
    pub entries: Vec<MedListEntry>,
    /// `(medication, form atom)`; sorted, no duplicates.
    pub form_links: Vec<(MedListId, &'a ConceptRow)>,
}

/// Collapse internal tabs and line breaks so names fit the TSV contract.
pub(crate) fn clean_text(s: &str) -> String {
    if s.contains(['\t', '\n', '\r']) {
        s.replace(['\t', '\n', '\r'], " ")
    } else {
        s.to_owned()
    }
}

pub(crate) fn link_names<'a>(
    index: &AtomIndex<'a>,
    forms: &[&'a ConceptRow],
    relationships: &[RelationshipRow],
    options: &CompileOptions,
) -> NameLinks<'a> {
    let form_set: HashSet<&str> = forms.iter().map(|f| f.rxaui.as_str()).collect();

    // (folded name) -> name atoms, and (name atom, form atom) pairs
    let mut groups: BTreeMap<String, BTreeMap<&str, &'a ConceptRow>> = BTreeMap::new();
    let mut pairs: Vec<(&'a ConceptRow, &'a ConceptRow)> = Vec::new();
    for rel in relationships.iter().filter(|r| r.rela == HAS_INGREDIENT) {
        let form_side: Vec<_> = index
            .endpoint(&rel.rxcui2, &rel.rxaui2)
            .into_iter()
            .filter(|a| form_set.contains(a.rxaui.as_str()))
            .collect();
        if form_side.is_empty() {
            continue;
        }
        for name in index
            .endpoint(&rel.rxcui1, &rel.rxaui1)
            .into_iter()
            .filter(|a| options.name_ttys.contains(&a.tty))
        {
            groups
                .entry(clean_text(&name.term).to_uppercase())
                .or_default()
                .insert(name.rxaui.as_str(), name);
            for form in &form_side {
                pairs.push((name, form));
            }
        }
    }

    let mut id_of_atom: HashMap<&str, MedListId> = HashMap::new();
    let mut entries = Vec::with_capacity(groups.len());
    for (i, atoms) in groups.values().enumerate() {
        let id = MedListId(i as u32 + 1);
        // smallest atom id represents a case-variant group
        let (_, rep) = atoms.iter().next().expect("groups are never empty");
        for aui in atoms.keys() {
            id_of_atom.insert(aui, id);
        }
        entries.push(MedListEntry {
            med_list_id: id,
            med_name: clean_text(&rep.term),
            rxcui: rep.rxcui.clone(),
            rxaui: rep.rxaui.clone(),
            is_brand: options.brand_ttys.contains(&rep.tty),
            generic_rxaui: None,
        });
    }

    let mut form_links: Vec<(MedListId, &ConceptRow)> = pairs
        .into_iter()
        .map(|(name, form)| (id_of_atom[name.rxaui.as_str()], form))
        .collect();
    form_links.sort_by(|a, b| (a.0, &a.1.rxaui).cmp(&(b.0, &b.1.rxaui)));
    form_links.dedup_by(|a, b| a.0 == b.0 && a.1.rxaui == b.1.rxaui);
    NameLinks { entries, form_links }
}

/// Concise medication names referenced by at least one common-form atom,
/// numbered from 1 in case-insensitive name order.
///
/// Works on the raw rows: no suppression or strength filtering is applied
/// here (see [`super::compile`] for the full pipeline).
pub fn resolve_med_names(
    concepts: &[ConceptRow],
    relationships: &[RelationshipRow],
    options: &CompileOptions,
) -> Vec<MedListEntry> {
    let atoms: Vec<&ConceptRow> = concepts.iter().filter(|c| options.accepts_source(&c.sab)).collect();
    let index = AtomIndex::new(atoms.iter().copied());
    let forms: Vec<&ConceptRow> = atoms
        .iter()
        .copied()
        .filter(|c| options.form_ttys.contains(&c.tty))
        .collect();
    link_names(&index, &forms, relationships, options).entries
}

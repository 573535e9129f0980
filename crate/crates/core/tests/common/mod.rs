#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rxhistory_core::compile::{compile, Compilation, CompileOptions, CompiledTerminology, DenyList, MedListId};
use rxhistory_core::rrf::{Release, SourceDialect};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_deny_list() -> DenyList {
    DenyList::parse(&std::fs::read_to_string(fixture_dir().join("deny_list.txt")).unwrap())
}

pub fn fixture_release(dialect: SourceDialect) -> Release {
    let sub = match dialect {
        SourceDialect::Umls => "umls",
        SourceDialect::RxnormNative => "rxnorm",
    };
    Release::read_dir(&fixture_dir().join(sub), dialect).unwrap()
}

pub fn compile_release(release: &Release) -> Compilation {
    compile(
        &release.concepts,
        &release.relationships,
        &release.attributes,
        &fixture_deny_list(),
        &CompileOptions::default(),
    )
    .unwrap()
}

pub fn compile_fixture() -> Compilation {
    compile_release(&fixture_release(SourceDialect::RxnormNative))
}

pub fn id_of(t: &CompiledTerminology, name: &str) -> MedListId {
    t.med_list()
        .iter()
        .find(|m| m.med_name == name)
        .unwrap_or_else(|| panic!("{name} not in med_list"))
        .med_list_id
}

/// `(med_name, common_form, dose_amt, dose_units)` rows of one medication.
pub fn form_rows(t: &CompiledTerminology, name: &str) -> Vec<(String, String, String, String)> {
    let id = id_of(t, name);
    t.common_forms(id)
        .iter()
        .map(|f| {
            (
                name.to_owned(),
                f.common_form.clone(),
                f.dose_amt.to_string(),
                f.dose_units.clone(),
            )
        })
        .collect()
}

const SYLLABLES: &[&str] = &[
    "ab", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu", "pa", "qui", "ra", "se", "ti", "vo", "xa", "ze", "ol",
    "am", "ex", "in", "or", "ul", "pr", "st", "tr", "cl", "ph", "zi",
];

/// `n` distinct drug-like names, some with a second word, mixed case.
pub fn synthetic_names(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let parts = rng.random_range(2..=5);
        let mut name: String = (0..parts).map(|_| *SYLLABLES.choose(&mut rng).unwrap()).collect();
        if rng.random_bool(0.2) {
            name.push(' ');
            name.push_str(["ER", "XR", "HCl", "Plus", "PM"].choose(&mut rng).unwrap());
        }
        if rng.random_bool(0.5) {
            let mut c = name.chars();
            name = c.next().unwrap().to_uppercase().chain(c).collect();
        }
        if seen.insert(name.to_uppercase()) {
            out.push(name);
        }
    }
    out
}

//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use common::{call, compile_fixture, data_dir, get_json, post_json};
use rxhistory_core::capture::{
    frequency_vocabulary, med_entry, reconstruct_common_form, Level, MedicationHistoryEntry,
};
use rxhistory_core::compile::{CompiledTerminology, MedListId};
use rxhistory_core::eval::{branching_factors, match_coverage, LatencySummary, NonMatchClass, StructureMetrics};
use rxhistory_core::search::{
    trips_for_session, CacheState, MedDetail, SearchIndex, Suggestion, TerminologyStore, DEFAULT_SUGGEST_LIMIT,
};
use rxhistory_service::CommonFormsResponse;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
type TableRows = [(&'static str, &'static [(&'static str, &'static str, &'static str)]); 2];

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

const SYLLABLES: &[&str] = &[
    "ab", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu", "pa", "qui", "ra", "se", "ti", "vo", "xa", "ze", "ol",
    "am", "ex", "in", "or", "ul", "pr", "st", "tr", "cl", "ph", "zi",
];

fn synthetic_names(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let parts = rng.random_range(2..=6);
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

fn index_of(names: &[String]) -> SearchIndex {
    SearchIndex::from_entries(names.iter().enumerate().map(|(i, n)| Suggestion {
        med_list_id: MedListId(i as u32 + 1),
        med_name: n.clone(),
    }))
}

fn subset(t: &CompiledTerminology, names: &[&str]) -> CompiledTerminology {
    let ids: Vec<MedListId> = t
        .med_list()
        .iter()
        .filter(|m| names.contains(&m.med_name.as_str()))
        .map(|m| m.med_list_id)
        .collect();
    CompiledTerminology::new(
        t.med_list()
            .iter()
            .filter(|m| ids.contains(&m.med_list_id))
            .cloned()
            .collect(),
        t.med_list_common()
            .iter()
            .filter(|c| ids.contains(&c.med_list_id))
            .cloned()
            .collect(),
        t.med_list_dose()
            .iter()
            .filter(|d| ids.contains(&d.med_list_id))
            .cloned()
            .collect(),
        "subset",
    )
    .unwrap()
}

fn table_reproduction() -> Outcome {
    let start = Instant::now();
    let t = compile_fixture();
    let elapsed = start.elapsed();
    let expected: TableRows = [
        (
            "Abilify",
            &[
                ("aripiprazole 2 MG [Abilify]", "2", "MG"),
                ("aripiprazole 5 MG [Abilify]", "5", "MG"),
                ("aripiprazole 10 MG [Abilify]", "10", "MG"),
                ("aripiprazole 15 MG [Abilify]", "15", "MG"),
                ("aripiprazole 20 MG [Abilify]", "20", "MG"),
                ("aripiprazole 30 MG [Abilify]", "30", "MG"),
                ("aripiprazole 1 MG/ML [Abilify]", "1", "MG/ML"),
                ("aripiprazole 7.5 MG/ML [Abilify]", "7.5", "MG/ML"),
            ],
        ),
        (
            "Zoloft",
            &[
                ("Sertraline 25 MG [Zoloft]", "25", "MG"),
                ("Sertraline 50 MG [Zoloft]", "50", "MG"),
                ("Sertraline 100 MG [Zoloft]", "100", "MG"),
                ("Sertraline 20 MG/ML [Zoloft]", "20", "MG/ML"),
            ],
        ),
    ];
    for (name, rows) in expected {
        let med = t
            .med_list()
            .iter()
            .find(|m| m.med_name == name)
            .ok_or(format!("{name} missing"))?;
        let got: Vec<(String, String, String)> = t
            .common_forms(med.med_list_id)
            .iter()
            .map(|f| (f.common_form.clone(), f.dose_amt.to_string(), f.dose_units.clone()))
            .collect();
        let want: Vec<(String, String, String)> = rows
            .iter()
            .map(|(f, a, u)| ((*f).into(), (*a).into(), (*u).into()))
            .collect();
        check!(got == want, "{name}: got {got:?}");
    }
    check!(elapsed < Duration::from_secs(1), "compile took {elapsed:?}");
    Ok(format!(
        "8 + 4 rows exact, compile {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn brute_force(names: &[String], query: &str) -> Vec<String> {
    let q = query.trim();
    if q.chars().count() < 2 {
        return Vec::new();
    }
    let q = q.to_uppercase();
    let mut hits: Vec<(String, &String)> = names
        .iter()
        .filter(|n| n.to_uppercase().contains(&q))
        .map(|n| (n.to_uppercase(), n))
        .collect();
    hits.sort();
    hits.into_iter()
        .take(DEFAULT_SUGGEST_LIMIT)
        .map(|(_, n)| n.clone())
        .collect()
}

fn search_contract() -> Outcome {
    let start = Instant::now();
    let names = synthetic_names(1000, 7);
    let index = index_of(&names);
    let mut queries = BTreeSet::new();
    for n in &names {
        let chars: Vec<char> = n.chars().collect();
        for len in 2..=6 {
            for w in chars.windows(len) {
                queries.insert(w.iter().collect::<String>());
            }
        }
    }
    check!(queries.len() >= 5000, "only {} distinct queries", queries.len());
    let (mut capped, mut short) = (0, 0);
    for q in queries.iter().map(String::as_str).chain(["a", "Z", " x ", ""]) {
        let got: Vec<String> = index
            .suggest(q, DEFAULT_SUGGEST_LIMIT)
            .into_iter()
            .map(|s| s.med_name)
            .collect();
        let want = brute_force(&names, q);
        check!(got == want, "query {q:?}: got {got:?}, want {want:?}");
        capped += usize::from(got.len() == DEFAULT_SUGGEST_LIMIT);
        short += usize::from(q.trim().chars().count() < 2);
    }
    check!(capped > 0, "no query reached the result cap");
    let elapsed = start.elapsed();
    check!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "{} queries equal the oracle ({capped} capped at {DEFAULT_SUGGEST_LIMIT}, {short} below 2 chars), {:.1} s",
        queries.len() + 4,
        elapsed.as_secs_f64()
    ))
}

struct CountingStore {
    inner: CompiledTerminology,
    fetches: AtomicU64,
}

impl TerminologyStore for CountingStore {
    fn fetch_med_list(&self) -> SearchIndex {
        self.fetches.fetch_add(1, Ordering::SeqCst);
        self.inner.fetch_med_list()
    }

    fn fetch_med_detail(&self, id: MedListId) -> Option<MedDetail> {
        self.fetches.fetch_add(1, Ordering::SeqCst);
        self.inner.fetch_med_detail(id)
    }
}

fn round_trips() -> Outcome {
    let t = compile_fixture();
    let ids: Vec<MedListId> = t.med_list().iter().map(|m| m.med_list_id).collect();
    check!(ids.len() >= 10, "fixture has only {} medications", ids.len());
    let mut counts = Vec::new();
    for n in 1..=10u64 {
        let store = CountingStore {
            inner: t.clone(),
            fetches: AtomicU64::new(0),
        };
        let cache = CacheState::default();
        for id in &ids[..n as usize] {
            let prefix: String = t.medication(*id).unwrap().med_name.chars().take(3).collect();
            check!(
                cache
                    .suggest(&store, &prefix, DEFAULT_SUGGEST_LIMIT)
                    .iter()
                    .any(|s| s.med_list_id == *id),
                "{prefix} does not find {id}"
            );
            cache.common_forms_for(&store, *id).map_err(|e| e.to_string())?;
            cache.dose_units_for(&store, *id).map_err(|e| e.to_string())?;
        }
        let trips = cache.trip_count();
        check!(trips == 2 + (n - 1), "n={n}: {trips} trips");
        check!(trips == trips_for_session(n), "n={n}: bound function disagrees");
        check!(
            store.fetches.load(Ordering::SeqCst) == trips,
            "n={n}: store saw a different count"
        );
        counts.push(trips.to_string());
    }
    Ok(format!("n=1..10 -> {}", counts.join(",")))
}

fn structural_metrics() -> Outcome {
    let m = StructureMetrics::from_counts(18_694, 42_000, 2.52, 1.18).map_err(|e| e.to_string())?;
    check!(
        (m.cache_reduction - 0.555).abs() <= 0.005,
        "cache_reduction {}",
        m.cache_reduction
    );
    check!(
        (m.entropy_flat_bits - 15.36).abs() <= 0.01,
        "flat {}",
        m.entropy_flat_bits
    );
    check!(
        (m.entropy_factored_bits - 15.76).abs() <= 0.01,
        "factored {}",
        m.entropy_factored_bits
    );
    let tables = subset(&compile_fixture(), &["Abilify", "Zoloft"]);
    let (bf_forms, bf_units) = branching_factors(&tables).map_err(|e| e.to_string())?;
    // (8 + 4) / 2 forms and (2 + 2) / 2 units per medication
    check!(bf_forms == 6.0 && bf_units == 2.0, "fixture bf {bf_forms}/{bf_units}");
    Ok(format!(
        "reduction {:.4}, flat {:.3} bits, factored {:.3} bits, fixture bf {bf_forms}/{bf_units}",
        m.cache_reduction, m.entropy_flat_bits, m.entropy_factored_bits
    ))
}

fn coverage() -> Outcome {
    let t = compile_fixture();
    let known: Vec<&str> = t.med_list().iter().map(|m| m.med_name.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(93);
    let mut legacy = Vec::new();
    for i in 0..93 {
        let name = known[i % known.len()];
        let varied: String = name
            .chars()
            .map(|c| {
                if rng.random_bool(0.5) {
                    c.to_ascii_uppercase()
                } else {
                    c.to_ascii_lowercase()
                }
            })
            .collect();
        legacy.push(varied);
    }
    legacy.extend(
        [
            "Omega-3 fatty acids",
            "Vitamin D3",
            "Fish oil 1000",
            "Abilify Discmelt",
            "Zolo",
            "Qwertyx",
            "Lorbexin",
        ]
        .map(String::from),
    );
    let report = match_coverage(&legacy, &t);
    let folded: HashSet<String> = known.iter().map(|n| n.trim().to_uppercase()).collect();
    let oracle = legacy
        .iter()
        .filter(|l| folded.contains(&l.trim().to_uppercase()))
        .count();
    check!(report.total == 100, "total {}", report.total);
    check!(
        report.matched == 93 && oracle == 93,
        "matched {} oracle {oracle}",
        report.matched
    );
    check!(report.rate == 0.93, "rate {}", report.rate);
    check!(format!("{:.1}%", report.rate * 100.0) == "93.0%", "rendered rate");
    check!(
        report.non_matches.len() == 7,
        "{} non-matches listed",
        report.non_matches.len()
    );
    let by_class = [
        NonMatchClass::NamingVariation,
        NonMatchClass::SupplementOrOtc,
        NonMatchClass::Other,
    ]
    .map(|c| report.count(c));
    check!(by_class.iter().sum::<usize>() == 7, "classes {by_class:?}");
    check!(by_class == [2, 3, 2], "classes {by_class:?}");
    Ok(format!(
        "93/100 = 93.0%, non-matches naming/supplement/other = {}/{}/{}",
        by_class[0], by_class[1], by_class[2]
    ))
}

fn latency() -> Outcome {
    let names = synthetic_names(20_000, 20);
    let start = Instant::now();
    let index = index_of(&names);
    let build = start.elapsed();
    check!(index.len() == 20_000, "index holds {}", index.len());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut samples = Vec::with_capacity(20_000);
    for _ in 0..20_000 {
        let q = loop {
            let name: Vec<char> = names.choose(&mut rng).unwrap().chars().collect();
            let len = rng.random_range(2..=name.len().min(6));
            let from = rng.random_range(0..=name.len() - len);
            let q: String = name[from..from + len].iter().collect();
            if q.trim().chars().count() >= 2 {
                break q;
            }
        };
        let t0 = Instant::now();
        let hits = index.suggest(&q, DEFAULT_SUGGEST_LIMIT);
        samples.push(t0.elapsed());
        check!(!hits.is_empty(), "{q} found nothing");
    }
    let s = LatencySummary::from_durations(&samples).unwrap();
    check!(s.p99_ms < 10.0, "p99 {:.3} ms", s.p99_ms);
    check!(build < Duration::from_secs(1), "build {build:?}");
    Ok(format!(
        "p50 {:.3} ms, p99 {:.3} ms, max {:.3} ms over {} queries; build {:.1} ms",
        s.p50_ms,
        s.p99_ms,
        s.max_ms,
        s.samples,
        build.as_secs_f64() * 1e3
    ))
}

fn mapping_floor() -> Outcome {
    let t = compile_fixture();
    let mut full = 0;
    for f in t.med_list_common() {
        let name = &t.medication(f.med_list_id).unwrap().med_name;
        let e = med_entry(f.med_list_id, name, &f.dose_amt.to_string(), &f.dose_units, "06/2010");
        let m = reconstruct_common_form(&e, &t);
        check!(m.level == Level::FullForm, "{}: {}", f.common_form, m.level);
        check!(
            m.matched_rxaui.as_deref() == Some(f.rxaui.as_str()),
            "{}: wrong atom",
            f.common_form
        );
        full += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let amounts = ["", "0", "-1", "2.50", "7.5", "abc", "1e3", "999", " 10 "];
    let units = ["", "MG", "mg", "MG/ML", "Other Units", "puffs"];
    let mut partial = 0;
    for m in t.med_list() {
        for _ in 0..50 {
            let mut e = med_entry(
                m.med_list_id,
                &m.med_name,
                amounts.choose(&mut rng).unwrap(),
                units.choose(&mut rng).unwrap(),
                "06/2010",
            );
            if rng.random_bool(0.3) {
                e.dose_amt = None;
            }
            let level = reconstruct_common_form(&e, &t).level;
            check!(level >= Level::NameOnly, "{}: {level}", m.med_name);
            partial += 1;
        }
    }
    Ok(format!(
        "{full} forms FULL_FORM, {partial} partial entries >= NAME_ONLY"
    ))
}

async fn api_contract() -> Outcome {
    let dir = data_dir();
    let t = compile_fixture();
    let (app, _) = common::app(dir.path());
    let cache = CacheState::default();
    let mut checked = 0;

    for q in ["ab", "zo", "PM", "ine", "x"] {
        let (_, body) = get_json(&app, &format!("/medications?q={q}")).await;
        let direct = serde_json::to_value(SearchIndex::build(&t).suggest(q, DEFAULT_SUGGEST_LIMIT)).unwrap();
        check!(body == direct, "/medications?q={q}");
        checked += 1;
    }
    for m in t.med_list() {
        let id = m.med_list_id;
        let (_, body) = get_json(&app, &format!("/medications/{id}/common-forms")).await;
        let direct = CommonFormsResponse::new(&t.fetch_med_detail(id).unwrap());
        check!(body == serde_json::to_value(direct).unwrap(), "common-forms {id}");
        let (_, body) = get_json(&app, &format!("/medications/{id}/dose-units")).await;
        check!(body == json!(cache.dose_units_for(&t, id).unwrap()), "dose-units {id}");
        checked += 2;
    }
    let (_, body) = get_json(&app, "/frequencies").await;
    check!(
        body == serde_json::to_value(frequency_vocabulary()).unwrap(),
        "/frequencies"
    );
    checked += 1;

    let abilify = t.med_list().iter().find(|m| m.med_name == "Abilify").unwrap();
    let posted = json!({
        "med_list_id": abilify.med_list_id.0, "med_name": "Abilify", "dose_amt": "10", "dose_units": "MG",
        "frequency_code": "qd", "begin_date": "03/2011", "current": true
    });
    let (status, created) = post_json(&app, "/patients/acc/medication-history", &posted.to_string()).await;
    check!(status.as_u16() == 201, "POST returned {status}");
    let mut entry: MedicationHistoryEntry = serde_json::from_value(posted).unwrap();
    entry.patient_ref = "acc".into();
    check!(
        created["mapping"] == serde_json::to_value(reconstruct_common_form(&entry, &t)).unwrap(),
        "POST mapping differs from the library"
    );
    check!(
        created["mapping"]["level"] == "FULL_FORM",
        "POST mapping {}",
        created["mapping"]
    );
    let (_, before) = call(&app, axum::http::Method::GET, "/patients/acc/medication-history", None).await;
    drop(app);

    let (app, _) = common::app(dir.path());
    let (status, after) = call(&app, axum::http::Method::GET, "/patients/acc/medication-history", None).await;
    check!(
        status.as_u16() == 200 && before == after,
        "history changed across restart"
    );
    let records: serde_json::Value = serde_json::from_slice(&after).unwrap();
    check!(records.as_array().map(Vec::len) == Some(1), "{records}");
    check!(
        records[0]["entry"] == serde_json::to_value(&entry).unwrap(),
        "stored entry differs"
    );
    checked += 2;
    Ok(format!(
        "{checked} endpoint bodies equal library calls; POST/restart/GET durable"
    ))
}

fn main() -> ExitCode {
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("table reproduction", Box::new(table_reproduction)),
        ("search contract", Box::new(search_contract)),
        ("round-trip bound", Box::new(round_trips)),
        ("structural metrics", Box::new(structural_metrics)),
        ("coverage harness", Box::new(coverage)),
        ("latency property", Box::new(latency)),
        ("mapping floor", Box::new(mapping_floor)),
        ("API contract", Box::new(|| runtime.block_on(api_contract()))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

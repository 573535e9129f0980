use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::coverage::{match_coverage, CoverageReport, NonMatchClass};
use super::metrics::{LatencySummary, StructureMetrics};
use crate::capture::{med_entry, reconstruct_common_form, validate_entry, Level, MedicationHistoryEntry};
use crate::compile::CompiledTerminology;
use crate::search::{trips_for_session, SearchIndex, DEFAULT_SUGGEST_LIMIT};

/// Round-trip figures of the original networked deployment, shown for
/// comparison only.
pub const REFERENCE_TRIP_MS: (u32, u32) = (200, 500);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexibilitySection {
    pub entries: usize,
    pub invalid_entries: usize,
    pub none_reported: usize,
    /// Every level is present, zero when unused.
    pub levels: BTreeMap<Level, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSection {
    /// Absent when the terminology is empty.
    pub structure: Option<StructureMetrics>,
    /// Absent when no samples were taken.
    pub suggest_latency: Option<LatencySummary>,
    /// `(n, trips)` for a cold-cache session entering `n` medications.
    pub round_trips: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegritySection {
    /// Common forms rebuilt from (medication, amount, units).
    pub checked: usize,
    /// Of those, how many mapped back at the full-form level.
    pub full_form: usize,
    pub pass_rate: f64,
    /// Forms sharing medication, amount and units with another form, so the
    /// rebuilt entry cannot tell them apart.
    pub ambiguous: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourFactorReport {
    pub version_tag: String,
    pub flexibility: FlexibilitySection,
    pub speed: SpeedSection,
    pub integrity: IntegritySection,
    pub coverage: CoverageReport,
}

fn flexibility(terminology: &CompiledTerminology, entries: &[MedicationHistoryEntry]) -> FlexibilitySection {
    let mut levels: BTreeMap<Level, usize> = [Level::Unmapped, Level::NameOnly, Level::FullForm]
        .into_iter()
        .map(|l| (l, 0))
        .collect();
    let mut invalid_entries = 0;
    for e in entries {
        if validate_entry(e).is_err() {
            invalid_entries += 1;
            continue;
        }
        *levels.entry(reconstruct_common_form(e, terminology).level).or_default() += 1;
    }
    FlexibilitySection {
        entries: entries.len(),
        invalid_entries,
        none_reported: entries.iter().filter(|e| e.none_reported).count(),
        levels,
    }
}

/// Rebuild an entry from every common form and map it back.
pub fn integrity_round_trip(terminology: &CompiledTerminology) -> IntegritySection {
    let mut keys: HashMap<(u32, String, String), usize> = HashMap::new();
    for f in terminology.med_list_common() {
        *keys
            .entry((f.med_list_id.0, f.dose_amt.to_string(), f.dose_units.clone()))
            .or_default() += 1;
    }
    let mut full_form = 0;
    for f in terminology.med_list_common() {
        let name = terminology
            .medication(f.med_list_id)
            .map_or("", |m| m.med_name.as_str());
        let entry = med_entry(f.med_list_id, name, &f.dose_amt.to_string(), &f.dose_units, "01/2000");
        if reconstruct_common_form(&entry, terminology).level == Level::FullForm {
            full_form += 1;
        }
    }
    let checked = terminology.med_list_common().len();
    IntegritySection {
        checked,
        full_form,
        pass_rate: if checked == 0 {
            0.0
        } else {
            full_form as f64 / checked as f64
        },
        ambiguous: keys.values().filter(|&&n| n > 1).sum(),
    }
}

/// Assemble all four sections. Any input may be empty.
pub fn build_report<S: AsRef<str>>(
    terminology: &CompiledTerminology,
    captured_entries: &[MedicationHistoryEntry],
    legacy_names: &[S],
    latency_samples: &[Duration],
) -> FourFactorReport {
    FourFactorReport {
        version_tag: terminology.version_tag().to_owned(),
        flexibility: flexibility(terminology, captured_entries),
        speed: SpeedSection {
            structure: StructureMetrics::of(terminology).ok(),
            suggest_latency: LatencySummary::from_durations(latency_samples),
            round_trips: (1..=10).map(|n| (n, trips_for_session(n))).collect(),
        },
        integrity: integrity_round_trip(terminology),
        coverage: match_coverage(legacy_names, terminology),
    }
}

/// Queries a user would type: the first 2 to 5 characters of each name.
pub fn typed_prefixes(index: &SearchIndex) -> Vec<String> {
    index
        .entries()
        .iter()
        .flat_map(|s| {
            let chars: Vec<char> = s.med_name.chars().collect();
            (2..=5.min(chars.len())).map(move |n| chars[..n].iter().collect::<String>())
        })
        .collect()
}

/// Wall-clock time of one `suggest` call per query.
pub fn time_suggestions(index: &SearchIndex, queries: &[String]) -> Vec<Duration> {
    queries
        .iter()
        .map(|q| {
            let start = Instant::now();
            std::hint::black_box(index.suggest(q, DEFAULT_SUGGEST_LIMIT));
            start.elapsed()
        })
        .collect()
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

impl FourFactorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Medication terminology evaluation ({})", self.version_tag);

        let f = &self.flexibility;
        let _ = writeln!(s, "\n1. Flexibility");
        let _ = writeln!(s, "  captured entries: {}", f.entries);
        let _ = writeln!(s, "  invalid entries: {}", f.invalid_entries);
        let _ = writeln!(s, "  none reported: {}", f.none_reported);
        for (level, n) in &f.levels {
            let _ = writeln!(s, "  {level}: {n}");
        }

        let sp = &self.speed;
        let _ = writeln!(s, "\n2. Speed");
        match &sp.structure {
            Some(m) => {
                let _ = writeln!(s, "  medications: {}", m.n_medications);
                let _ = writeln!(s, "  common forms: {}", m.n_common_forms);
                let _ = writeln!(s, "  branching factor (forms): {:.2}", m.bf_forms);
                let _ = writeln!(s, "  branching factor (units): {:.2}", m.bf_units);
                let _ = writeln!(s, "  search cache reduction: {}", pct(m.cache_reduction));
                let _ = writeln!(s, "  entropy flat: {:.2} bits", m.entropy_flat_bits);
                let _ = writeln!(s, "  entropy factored: {:.2} bits", m.entropy_factored_bits);
            }
            None => {
                let _ = writeln!(s, "  structure: empty terminology");
            }
        }
        match &sp.suggest_latency {
            Some(l) => {
                let _ = writeln!(
                    s,
                    "  suggest latency over {} queries: p50 {:.3} ms, p95 {:.3} ms, p99 {:.3} ms, max {:.3} ms",
                    l.samples, l.p50_ms, l.p95_ms, l.p99_ms, l.max_ms
                );
            }
            None => {
                let _ = writeln!(s, "  suggest latency: not measured");
            }
        }
        let trips: Vec<String> = sp.round_trips.iter().map(|(n, t)| format!("{n}:{t}")).collect();
        let _ = writeln!(s, "  round trips per session (n:trips): {}", trips.join(" "));
        let _ = writeln!(
            s,
            "  reference network round trip: {} ms average, {} ms max (original deployment, not measured here)",
            REFERENCE_TRIP_MS.0, REFERENCE_TRIP_MS.1
        );

        let i = &self.integrity;
        let _ = writeln!(s, "\n3. Data integrity");
        let _ = writeln!(
            s,
            "  common-form round trip: {}/{} ({})",
            i.full_form,
            i.checked,
            pct(i.pass_rate)
        );
        let _ = writeln!(s, "  forms sharing amount and units: {}", i.ambiguous);

        let c = &self.coverage;
        let _ = writeln!(s, "\n4. Coverage");
        let _ = writeln!(s, "  matched: {}/{} ({})", c.matched, c.total, pct(c.rate));
        for class in [
            NonMatchClass::NamingVariation,
            NonMatchClass::SupplementOrOtc,
            NonMatchClass::Other,
        ] {
            let label = match class {
                NonMatchClass::NamingVariation => "naming variation",
                NonMatchClass::SupplementOrOtc => "supplement or OTC",
                NonMatchClass::Other => "other",
            };
            let _ = writeln!(s, "  {label}: {}", c.count(class));
        }
        s
    }
}

//! Flexibility, speed, data integrity and coverage of a compiled terminology.

mod coverage;
mod metrics;
mod report;

pub use coverage::{
    match_coverage, match_key, CoverageMatcher, CoverageReport, NonMatch, NonMatchClass, DEFAULT_SUPPLEMENT_PATTERNS,
};
pub use metrics::{
    branching_factors, branching_factors_from_counts, cache_reduction, cache_reduction_from_counts, entropy_bits,
    entropy_comparison, entropy_comparison_from_counts, percentile, EmptyTerminology, EntropyComparison,
    InvalidDistribution, LatencySummary, StructureMetrics,
};
pub use report::{
    build_report, integrity_round_trip, time_suggestions, typed_prefixes, FlexibilitySection, FourFactorReport,
    IntegritySection, SpeedSection, REFERENCE_TRIP_MS,
};

//! Medication-history capture backed by a restructured RxNorm extract.
//!
//! * [`rrf`] reads UMLS / RxNorm release files.
//! * [`compile`] builds the `med_list`, `med_list_common` and `med_list_dose`
//!   production tables from parsed rows.
//! * [`search`] serves auto-complete and the per-medication lookups with
//!   server-side caching and round-trip accounting.
//! * [`capture`] validates medication-history entries and maps them back to
//!   the terminology.
//! * [`eval`] computes coverage, structure and speed figures.

pub mod capture;
pub mod compile;
pub mod eval;
pub mod rrf;
pub mod search;

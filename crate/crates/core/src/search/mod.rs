//! Auto-complete and per-medication lookups.

mod cache;
mod index;

pub use cache::{
    trips_for_session, CacheState, Clock, ManualClock, MedDetail, SystemClock, TerminologyStore, UnknownMedication,
    DEFAULT_CACHE_TTL, OTHER_UNITS, UNKNOWN_OPTION,
};
pub use index::{fold, SearchIndex, Suggestion, DEFAULT_SUGGEST_LIMIT, MIN_QUERY_CHARS};

//! Server-side caches in front of the terminology tables.
//!
//! One search cache (the whole medication list) and one cache per selected
//! medication (its common forms and dose units, fetched together). Every
//! fill goes to the backing store once and bumps the round-trip counter, so
//! a session entering `n` distinct medications on a cold cache costs
//! `2 + (n - 1)` trips.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, PoisonError};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::index::{SearchIndex, Suggestion};
use crate::compile::{CommonFormEntry, CompiledTerminology, MedListEntry, MedListId};

pub const DEFAULT_CACHE_TTL: Duration = Duration::from_secs(2 * 60 * 60);
/// Placeholder appended to every medication's unit list.
pub const OTHER_UNITS: &str = "Other Units";
/// Placeholder closing every common-form list.
pub const UNKNOWN_OPTION: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unknown medication {0}")]
pub struct UnknownMedication(pub MedListId);

/// Source of "now" for expiry checks.
pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock {
    origin: Instant,
    offset: Mutex<Duration>,
}

impl Default for ManualClock {
    fn default() -> Self {
        ManualClock {
            origin: Instant::now(),
            offset: Mutex::new(Duration::ZERO),
        }
    }
}

impl ManualClock {
    pub fn advance(&self, by: Duration) {
        *self.offset.lock().unwrap_or_else(PoisonError::into_inner) += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Instant {
        self.origin + *self.offset.lock().unwrap_or_else(PoisonError::into_inner)
    }
}

/// Everything the modal popup and unit dropdown need for one medication.
#[derive(Debug, Clone, PartialEq)]
pub struct MedDetail {
    pub medication: MedListEntry,
    /// Ordered by dose units, then dose amount.
    pub common_forms: Vec<CommonFormEntry>,
    /// Distinct units ascending, then [`OTHER_UNITS`].
    pub dose_units: Vec<String>,
}

impl MedDetail {
    /// Label of the trailing "dosage not known" option.
    pub fn unknown_option(&self) -> &'static str {
        UNKNOWN_OPTION
    }
}

/// The backing store the caches are filled from.
pub trait TerminologyStore {
    fn fetch_med_list(&self) -> SearchIndex;
    fn fetch_med_detail(&self, id: MedListId) -> Option<MedDetail>;
}

impl TerminologyStore for CompiledTerminology {
    fn fetch_med_list(&self) -> SearchIndex {
        SearchIndex::build(self)
    }

    fn fetch_med_detail(&self, id: MedListId) -> Option<MedDetail> {
        let medication = self.medication(id)?.clone();
        let mut dose_units: Vec<String> = self.dose_units(id).iter().map(|d| d.dose_units.clone()).collect();
        dose_units.push(OTHER_UNITS.to_owned());
        Some(MedDetail {
            medication,
            common_forms: self.common_forms(id).to_vec(),
            dose_units,
        })
    }
}

#[derive(Default)]
struct Slots {
    search: Option<(Instant, Arc<SearchIndex>)>,
    meds: HashMap<MedListId, (Instant, Arc<MedDetail>)>,
}

/// Search and per-medication caches with a time-to-live and a count of
/// backing-store fetches.
///
/// Fills happen under the cache lock, so concurrent readers either see a
/// complete entry or wait for it, and a miss is fetched exactly once.
pub struct CacheState {
    ttl: Duration,
    clock: Arc<dyn Clock>,
    slots: Mutex<Slots>,
    trips: AtomicU64,
}

impl std::fmt::Debug for CacheState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CacheState")
            .field("ttl", &self.ttl)
            .field("trips", &self.trip_count())
            .finish_non_exhaustive()
    }
}

impl Default for CacheState {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_TTL)
    }
}

impl CacheState {
    pub fn new(ttl: Duration) -> Self {
        Self::with_clock(ttl, Arc::new(SystemClock))
    }

    pub fn with_clock(ttl: Duration, clock: Arc<dyn Clock>) -> Self {
        CacheState {
            ttl,
            clock,
            slots: Mutex::default(),
            trips: AtomicU64::new(0),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    /// Number of backing-store fetches so far.
    pub fn trip_count(&self) -> u64 {
        self.trips.load(Ordering::SeqCst)
    }

    /// Drop every cached entry; the trip counter is kept.
    pub fn clear(&self) {
        *self.lock() = Slots::default();
    }

    fn lock(&self) -> MutexGuard<'_, Slots> {
        self.slots.lock().unwrap_or_else(PoisonError::into_inner)
    }

    fn fresh(&self, stored_at: Instant, now: Instant) -> bool {
        now.saturating_duration_since(stored_at) < self.ttl
    }

    fn trip(&self) {
        self.trips.fetch_add(1, Ordering::SeqCst);
    }

    /// The cached medication list, fetched on a miss.
    pub fn search_index(&self, store: &impl TerminologyStore) -> Arc<SearchIndex> {
        let now = self.clock.now();
        let mut slots = self.lock();
        if let Some((at, index)) = &slots.search {
            if self.fresh(*at, now) {
                return index.clone();
            }
        }
        self.trip();
        let index = Arc::new(store.fetch_med_list());
        slots.search = Some((now, index.clone()));
        index
    }

    pub fn suggest(&self, store: &impl TerminologyStore, query: &str, limit: usize) -> Vec<Suggestion> {
        self.search_index(store).suggest(query, limit)
    }

    fn detail(&self, store: &impl TerminologyStore, id: MedListId) -> Result<Arc<MedDetail>, UnknownMedication> {
        let now = self.clock.now();
        let mut slots = self.lock();
        if let Some((at, detail)) = slots.meds.get(&id) {
            if self.fresh(*at, now) {
                return Ok(detail.clone());
            }
        }
        self.trip();
        match store.fetch_med_detail(id) {
            Some(detail) => {
                let detail = Arc::new(detail);
                slots.meds.insert(id, (now, detail.clone()));
                Ok(detail)
            }
            None => {
                slots.meds.remove(&id);
                Err(UnknownMedication(id))
            }
        }
    }

    /// Common forms of one medication, ordered by units then amount. The
    /// list is closed by [`MedDetail::unknown_option`].
    pub fn common_forms_for(
        &self,
        store: &impl TerminologyStore,
        id: MedListId,
    ) -> Result<Arc<MedDetail>, UnknownMedication> {
        self.detail(store, id)
    }

    /// Units selectable for one medication, ending with [`OTHER_UNITS`].
    /// Shares the per-medication fetch with [`Self::common_forms_for`].
    pub fn dose_units_for(
        &self,
        store: &impl TerminologyStore,
        id: MedListId,
    ) -> Result<Vec<String>, UnknownMedication> {
        self.detail(store, id).map(|d| d.dose_units.clone())
    }
}

/// Backing-store round trips for a cold-cache session entering `n` distinct
/// medications: one search-cache fill, then one medication fetch each.
pub fn trips_for_session(n: u64) -> u64 {
    if n == 0 {
        0
    } else {
        2 + (n - 1)
    }
}

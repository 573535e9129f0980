use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::Utc;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use rxhistory_core::capture::{
    reconstruct_common_form, DoseFrequencyTerm, FrequencyVocabulary, MappingLevel, MedicationHistoryEntry, Rule,
    Validator, Violation,
};
use rxhistory_core::compile::{CommonFormEntry, CompiledTerminology, MedListId};
use rxhistory_core::search::{CacheState, MedDetail, Suggestion, UNKNOWN_OPTION};

use crate::journal::{Journal, StoredEntryRecord};

/// Shared, read-mostly service state.
pub struct AppState {
    pub terminology: CompiledTerminology,
    pub cache: CacheState,
    pub validator: Validator,
    pub journal: Journal,
    pub suggest_limit: usize,
}

impl AppState {
    pub fn new(
        terminology: CompiledTerminology,
        cache: CacheState,
        vocabulary: FrequencyVocabulary,
        journal: Journal,
        suggest_limit: usize,
    ) -> Self {
        AppState {
            terminology,
            cache,
            validator: Validator::new(vocabulary),
            journal,
            suggest_limit,
        }
    }
}

type Shared = Arc<AppState>;

/// One row of the modal popup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonFormView {
    pub med_list_id: MedListId,
    pub med_name: String,
    pub common_form: String,
    #[serde(with = "rust_decimal::serde::float")]
    pub dose_amt: Decimal,
    pub dose_units: String,
    pub rxcui: String,
    pub rxaui: String,
}

impl CommonFormView {
    pub fn new(med_name: &str, f: &CommonFormEntry) -> Self {
        CommonFormView {
            med_list_id: f.med_list_id,
            med_name: med_name.to_owned(),
            common_form: f.common_form.clone(),
            dose_amt: f.dose_amt,
            dose_units: f.dose_units.clone(),
            rxcui: f.rxcui.clone(),
            rxaui: f.rxaui.clone(),
        }
    }
}

/// Body of `GET /medications/{id}/common-forms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonFormsResponse {
    pub med_list_id: MedListId,
    pub med_name: String,
    /// Ordered by dose units, then dose amount.
    pub common_forms: Vec<CommonFormView>,
    /// Label of the closing "dosage not known" choice.
    pub unknown_option: String,
}

impl CommonFormsResponse {
    pub fn new(detail: &MedDetail) -> Self {
        let name = &detail.medication.med_name;
        CommonFormsResponse {
            med_list_id: detail.medication.med_list_id,
            med_name: name.clone(),
            common_forms: detail
                .common_forms
                .iter()
                .map(|f| CommonFormView::new(name, f))
                .collect(),
            unknown_option: UNKNOWN_OPTION.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedResponse {
    pub record_id: Uuid,
    pub mapping: MappingLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationsResponse {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorResponse { error: message.into() })).into_response()
}

fn parse_id(raw: &str) -> Option<MedListId> {
    raw.parse().ok()
}

fn bad_id(raw: &str) -> Response {
    error(StatusCode::BAD_REQUEST, format!("'{raw}' is not a medication id"))
}

async fn suggestions(State(s): State<Shared>, Query(params): Query<HashMap<String, String>>) -> Response {
    let Some(q) = params.get("q") else {
        return error(StatusCode::BAD_REQUEST, "missing query parameter 'q'");
    };
    let found: Vec<Suggestion> = s.cache.suggest(&s.terminology, q, s.suggest_limit);
    Json(found).into_response()
}

async fn common_forms(State(s): State<Shared>, Path(raw): Path<String>) -> Response {
    let Some(id) = parse_id(&raw) else {
        return bad_id(&raw);
    };
    match s.cache.common_forms_for(&s.terminology, id) {
        Ok(detail) => Json(CommonFormsResponse::new(&detail)).into_response(),
        Err(e) => error(StatusCode::NOT_FOUND, e.to_string()),
    }
}

async fn dose_units(State(s): State<Shared>, Path(raw): Path<String>) -> Response {
    let Some(id) = parse_id(&raw) else {
        return bad_id(&raw);
    };
    match s.cache.dose_units_for(&s.terminology, id) {
        Ok(units) => Json(units).into_response(),
        Err(e) => error(StatusCode::NOT_FOUND, e.to_string()),
    }
}

async fn frequencies(State(s): State<Shared>) -> Json<Vec<DoseFrequencyTerm>> {
    Json(s.validator.vocabulary.terms().to_vec())
}

async fn post_entry(State(s): State<Shared>, Path(patient): Path<String>, body: Bytes) -> Response {
    let parsed = serde_json::from_slice::<serde_json::Value>(&body).and_then(|v| match v {
        serde_json::Value::Object(_) => serde_json::from_value::<MedicationHistoryEntry>(v),
        _ => Err(serde::de::Error::custom("expected a JSON object")),
    });
    let mut entry = match parsed {
        Ok(e) => e,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid entry: {e}")),
    };
    let mut violations = Vec::new();
    if entry.patient_ref.is_empty() {
        entry.patient_ref = patient;
    } else if entry.patient_ref != patient {
        violations.push(Violation::new("patient_ref", Rule::PatientMismatch));
    }
    if let Err(v) = s.validator.validate(&entry) {
        violations.extend(v);
    }
    if let Some(id) = entry.med_list_id {
        if s.terminology.medication(id).is_none() {
            violations.push(Violation::new("med_list_id", Rule::UnknownMedication));
        }
    }
    if !violations.is_empty() {
        return (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(ViolationsResponse { violations }),
        )
            .into_response();
    }

    let mapping = reconstruct_common_form(&entry, &s.terminology);
    let record = StoredEntryRecord {
        record_id: Uuid::new_v4(),
        recorded_at: Utc::now(),
        entry,
        mapping: mapping.clone(),
    };
    let record_id = record.record_id;
    let state = s.clone();
    match tokio::task::spawn_blocking(move || state.journal.append(record)).await {
        Ok(Ok(())) => (StatusCode::CREATED, Json(CreatedResponse { record_id, mapping })).into_response(),
        Ok(Err(e)) => {
            log::error!("journal append failed: {e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, "could not store entry")
        }
        Err(e) => {
            log::error!("journal task failed: {e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, "could not store entry")
        }
    }
}

async fn list_entries(State(s): State<Shared>, Path(patient): Path<String>) -> Json<Vec<StoredEntryRecord>> {
    Json(s.journal.for_patient(&patient))
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let uri = req.uri().clone();
    let start = Instant::now();
    let res = next.run(req).await;
    log::info!(
        "{method} {uri} {} {}us",
        res.status().as_u16(),
        start.elapsed().as_micros()
    );
    res
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/medications", get(suggestions))
        .route("/medications/{id}/common-forms", get(common_forms))
        .route("/medications/{id}/dose-units", get(dose_units))
        .route("/frequencies", get(frequencies))
        .route(
            "/patients/{patient_ref}/medication-history",
            get(list_entries).post(post_entry),
        )
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

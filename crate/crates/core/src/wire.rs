//! JSON documents exchanged on the northbound (applications) and southbound
//! (providers) APIs, plus the scenario, catalog and metrics documents.
//!
//! Parsing is strict: unknown fields are rejected, the schema version must be
//! [`SCHEMA_VERSION`], and domain invariants are checked with the offending
//! field named. Emission is canonical: object keys sorted, no whitespace,
//! integral numbers without a fraction and every other number in shortest
//! round-trip form, so equal values always produce identical bytes.

use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};
use thiserror::Error;

use crate::catalog::Catalog;
use crate::domain::{
    AdmissionPlan, LinkClass, LinkProfile, NetworkSlice, ProviderOffer, ResourceDescriptor,
    ResourceKind, SatelliteProfile,
};
use crate::error::InvariantViolation;
use crate::sim::{ArrivalProcess, ScenarioSpec};

pub const SCHEMA_VERSION: &str = "aerofed/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WireError {
    #[error("malformed document at byte {offset}: {message}")]
    MalformedDocument { offset: usize, message: String },
    #[error("unsupported schema version `{0}`")]
    UnsupportedVersion(String),
    #[error(transparent)]
    InvariantViolation(#[from] InvariantViolation),
}

impl WireError {
    fn malformed(offset: usize, message: impl Into<String>) -> Self {
        WireError::MalformedDocument {
            offset,
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            WireError::MalformedDocument { .. } => "MalformedDocument",
            WireError::UnsupportedVersion(_) => "UnsupportedVersion",
            WireError::InvariantViolation(_) => "InvariantViolation",
        }
    }
}

/// A typed value with a JSON document form.
pub trait Document: Sized {
    type Record: Serialize + DeserializeOwned;

    fn to_record(&self) -> Self::Record;
    fn from_record(record: Self::Record) -> Result<Self, WireError>;
}

pub fn parse<T: Document>(bytes: &[u8]) -> Result<T, WireError> {
    parse_envelope(bytes)?;
    let record: T::Record = serde_json::from_slice(bytes).map_err(|e| located(bytes, &e))?;
    T::from_record(record)
}

pub fn emit<T: Document>(value: &T) -> Vec<u8> {
    to_canonical_bytes(&value.to_record())
}

/// Canonical JSON text of any serializable value.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("document records serialize to JSON");
    let mut out = String::new();
    write_canonical(&value, &mut out);
    out
}

pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    to_canonical_string(value).into_bytes()
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push(':');
                write_canonical(&map[key], out);
            }
            out.push('}');
        }
    }
}

/// Integral floats below 2^53 print as integers; the rest use the shortest
/// decimal that round-trips.
fn write_number(n: &Number, out: &mut String) {
    if let Some(f) = n.as_f64().filter(|_| n.is_f64()) {
        if f.fract() == 0.0 && f.abs() < 9_007_199_254_740_992.0 {
            out.push_str(&(f as i64).to_string());
            return;
        }
    }
    out.push_str(&n.to_string());
}

/// Checks syntax and schema version; returns the parsed tree.
fn parse_envelope(bytes: &[u8]) -> Result<Value, WireError> {
    if let Err(e) = std::str::from_utf8(bytes) {
        return Err(WireError::malformed(e.valid_up_to(), "input is not UTF-8"));
    }
    let value: Value = serde_json::from_slice(bytes).map_err(|e| located(bytes, &e))?;
    let Value::Object(map) = &value else {
        return Err(WireError::malformed(0, "document must be a JSON object"));
    };
    match map.get("schema_version") {
        Some(Value::String(v)) if v == SCHEMA_VERSION => Ok(value),
        Some(Value::String(v)) => Err(WireError::UnsupportedVersion(v.clone())),
        Some(_) => Err(WireError::malformed(0, "schema_version must be a string")),
        None => Err(WireError::malformed(0, "missing schema_version")),
    }
}

/// Converts a serde_json error into a byte-offset error. Errors raised after
/// the syntax pass carry no position and map to offset 0.
fn located(bytes: &[u8], err: &serde_json::Error) -> WireError {
    let (line, column) = (err.line(), err.column());
    let offset = if line == 0 {
        0
    } else {
        let line_start: usize = bytes
            .split(|&b| b == b'\n')
            .take(line - 1)
            .map(|l| l.len() + 1)
            .sum();
        (line_start + column.saturating_sub(1)).min(bytes.len())
    };
    WireError::malformed(offset, err.to_string())
}

fn check_version(version: &str) -> Result<(), WireError> {
    if version == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(WireError::UnsupportedVersion(version.to_owned()))
    }
}

fn non_negative_int(value: i64, field: &str) -> Result<u64, InvariantViolation> {
    u64::try_from(value).map_err(|_| InvariantViolation::new(field, "must be >= 0"))
}

// ---------------------------------------------------------------------------
// Slices

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceRecord {
    pub slice_id: String,
    pub ue_count: i64,
    pub per_ue_request_rate_files_per_s: f64,
    pub file_size_bytes: i64,
    pub catalog_size_files: i64,
    pub zipf_exponent: f64,
    pub delay_requirement_s: f64,
}

impl From<&NetworkSlice> for SliceRecord {
    fn from(s: &NetworkSlice) -> Self {
        Self {
            slice_id: s.slice_id.clone(),
            ue_count: s.ue_count.into(),
            per_ue_request_rate_files_per_s: s.per_ue_request_rate,
            file_size_bytes: s.file_size_bytes as i64,
            catalog_size_files: s.catalog_size_files as i64,
            zipf_exponent: s.zipf_exponent,
            delay_requirement_s: s.delay_requirement_s,
        }
    }
}

impl TryFrom<SliceRecord> for NetworkSlice {
    type Error = InvariantViolation;

    fn try_from(r: SliceRecord) -> Result<Self, Self::Error> {
        let ue_count = u32::try_from(r.ue_count)
            .ok()
            .filter(|&u| u > 0)
            .ok_or_else(|| {
                InvariantViolation::new("ue_count", "must be a positive 32-bit integer")
            })?;
        let slice = NetworkSlice {
            slice_id: r.slice_id,
            ue_count,
            per_ue_request_rate: r.per_ue_request_rate_files_per_s,
            file_size_bytes: non_negative_int(r.file_size_bytes, "file_size_bytes")?,
            catalog_size_files: non_negative_int(r.catalog_size_files, "catalog_size_files")?,
            zipf_exponent: r.zipf_exponent,
            delay_requirement_s: r.delay_requirement_s,
        };
        slice.validate()?;
        Ok(slice)
    }
}

fn slices_from_records(records: Vec<SliceRecord>) -> Result<Vec<NetworkSlice>, InvariantViolation> {
    let mut seen = BTreeSet::new();
    let mut slices = Vec::with_capacity(records.len());
    for r in records {
        let s = NetworkSlice::try_from(r)?;
        if !seen.insert(s.slice_id.clone()) {
            return Err(InvariantViolation::new(
                "slice_id",
                format!("duplicate slice id `{}`", s.slice_id),
            ));
        }
        slices.push(s);
    }
    Ok(slices)
}

// ---------------------------------------------------------------------------
// Northbound: requests and decisions

/// An application's request for admission of a set of slices.
#[derive(Debug, Clone, PartialEq)]
pub struct FederationRequest {
    pub request_id: String,
    pub slices: Vec<NetworkSlice>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestRecord {
    pub schema_version: String,
    pub request_id: String,
    pub slices: Vec<SliceRecord>,
}

impl Document for FederationRequest {
    type Record = RequestRecord;

    fn to_record(&self) -> RequestRecord {
        RequestRecord {
            schema_version: SCHEMA_VERSION.into(),
            request_id: self.request_id.clone(),
            slices: self.slices.iter().map(SliceRecord::from).collect(),
        }
    }

    fn from_record(r: RequestRecord) -> Result<Self, WireError> {
        check_version(&r.schema_version)?;
        if r.request_id.is_empty() {
            return Err(InvariantViolation::new("request_id", "must not be empty").into());
        }
        Ok(Self {
            request_id: r.request_id,
            slices: slices_from_records(r.slices)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionStatus {
    Allocated,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServedSlice {
    pub slice_id: String,
    pub cache_bytes: u64,
    pub satellite_rate_bps: f64,
}

/// Answer to a [`FederationRequest`].
#[derive(Debug, Clone, PartialEq)]
pub struct FederationDecision {
    pub request_id: String,
    pub status: DecisionStatus,
    pub objective: Option<usize>,
    pub served: Vec<ServedSlice>,
    pub rejection_reason: Option<String>,
}

impl FederationDecision {
    pub fn allocated(request_id: &str, plan: &AdmissionPlan) -> Self {
        Self {
            request_id: request_id.to_owned(),
            status: DecisionStatus::Allocated,
            objective: Some(plan.objective),
            served: plan
                .served
                .iter()
                .map(|id| ServedSlice {
                    slice_id: id.clone(),
                    cache_bytes: plan.cache_alloc.get(id).copied().unwrap_or(0),
                    satellite_rate_bps: plan.rate_alloc.get(id).copied().unwrap_or(0.0),
                })
                .collect(),
            rejection_reason: None,
        }
    }

    pub fn rejected(request_id: &str, reason: impl Into<String>) -> Self {
        Self {
            request_id: request_id.to_owned(),
            status: DecisionStatus::Rejected,
            objective: None,
            served: Vec::new(),
            rejection_reason: Some(reason.into()),
        }
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        match self.status {
            DecisionStatus::Allocated => {
                let objective = self.objective.ok_or_else(|| {
                    InvariantViolation::new("objective", "required when allocated")
                })?;
                if objective != self.served.len() {
                    return Err(InvariantViolation::new(
                        "objective",
                        "must equal the number of served slices",
                    ));
                }
                if self.rejection_reason.is_some() {
                    return Err(InvariantViolation::new(
                        "rejection_reason",
                        "only allowed when rejected",
                    ));
                }
                let mut ids = BTreeSet::new();
                for s in &self.served {
                    if !ids.insert(s.slice_id.as_str()) {
                        return Err(InvariantViolation::new("served", "duplicate slice id"));
                    }
                    if !(s.satellite_rate_bps.is_finite() && s.satellite_rate_bps >= 0.0) {
                        return Err(InvariantViolation::new(
                            "satellite_rate_bps",
                            "must be finite and >= 0",
                        ));
                    }
                }
                Ok(())
            }
            DecisionStatus::Rejected => {
                if self.objective.is_some() {
                    return Err(InvariantViolation::new(
                        "objective",
                        "not allowed when rejected",
                    ));
                }
                if !self.served.is_empty() {
                    return Err(InvariantViolation::new(
                        "served",
                        "must be empty when rejected",
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRecord {
    pub schema_version: String,
    pub request_id: String,
    pub status: DecisionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<usize>,
    pub served: Vec<ServedSlice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_reason: Option<String>,
}

impl Document for FederationDecision {
    type Record = DecisionRecord;

    fn to_record(&self) -> DecisionRecord {
        DecisionRecord {
            schema_version: SCHEMA_VERSION.into(),
            request_id: self.request_id.clone(),
            status: self.status,
            objective: self.objective,
            served: self.served.clone(),
            rejection_reason: self.rejection_reason.clone(),
        }
    }

    fn from_record(r: DecisionRecord) -> Result<Self, WireError> {
        check_version(&r.schema_version)?;
        let d = Self {
            request_id: r.request_id,
            status: r.status,
            objective: r.objective,
            served: r.served,
            rejection_reason: r.rejection_reason,
        };
        d.validate()?;
        Ok(d)
    }
}

// ---------------------------------------------------------------------------
// Southbound: provider offers

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceRecord {
    pub resource_id: String,
    pub kind: ResourceKind,
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_class: Option<LinkClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one_way_propagation_delay_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfferRecord {
    pub schema_version: String,
    pub offer_id: String,
    pub provider_id: String,
    pub price: f64,
    pub resources: Vec<ResourceRecord>,
}

/// Resources inherit the provider of the offer that carries them.
impl Document for ProviderOffer {
    type Record = OfferRecord;

    fn to_record(&self) -> OfferRecord {
        OfferRecord {
            schema_version: SCHEMA_VERSION.into(),
            offer_id: self.offer_id.clone(),
            provider_id: self.provider_id.clone(),
            price: self.price,
            resources: self
                .resources
                .iter()
                .map(|r| ResourceRecord {
                    resource_id: r.resource_id.clone(),
                    kind: r.kind,
                    capacity: r.capacity,
                    link_class: r.link_profile.map(|p| p.link_class),
                    one_way_propagation_delay_s: r
                        .link_profile
                        .map(|p| p.one_way_propagation_delay_s),
                })
                .collect(),
        }
    }

    fn from_record(r: OfferRecord) -> Result<Self, WireError> {
        check_version(&r.schema_version)?;
        let mut resources = Vec::with_capacity(r.resources.len());
        for res in r.resources {
            let link_profile = match (res.link_class, res.one_way_propagation_delay_s) {
                (Some(link_class), delay) => Some(LinkProfile {
                    link_class,
                    one_way_propagation_delay_s: delay.unwrap_or(0.0),
                }),
                (None, Some(_)) => {
                    return Err(InvariantViolation::new(
                        "one_way_propagation_delay_s",
                        "requires link_class",
                    )
                    .into())
                }
                (None, None) => None,
            };
            resources.push(ResourceDescriptor {
                resource_id: res.resource_id,
                provider_id: r.provider_id.clone(),
                kind: res.kind,
                capacity: res.capacity,
                link_profile,
            });
        }
        let offer = ProviderOffer {
            offer_id: r.offer_id,
            provider_id: r.provider_id,
            resources,
            price: r.price,
        };
        offer.validate()?;
        Ok(offer)
    }
}

// ---------------------------------------------------------------------------
// Acknowledgements and errors (serve mode)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfferAck {
    pub schema_version: String,
    pub offer_id: String,
    pub accepted: bool,
}

impl OfferAck {
    pub fn new(offer_id: &str, accepted: bool) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            offer_id: offer_id.to_owned(),
            accepted,
        }
    }
}

/// Asks the engine to tear down an allocated request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleaseRecord {
    pub schema_version: String,
    pub release_request_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleaseAck {
    pub schema_version: String,
    pub request_id: String,
    pub released: bool,
}

impl ReleaseAck {
    pub fn new(request_id: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            request_id: request_id.to_owned(),
            released: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorDocument {
    pub schema_version: String,
    pub error: String,
    pub message: String,
}

impl ErrorDocument {
    pub fn new(error: &str, message: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            error: error.to_owned(),
            message: message.into(),
        }
    }
}

/// Any document a client may send to the engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    Offer(ProviderOffer),
    Request(FederationRequest),
    Release(String),
}

/// Parses one inbound document, telling kinds apart by their id field.
pub fn parse_inbound(bytes: &[u8]) -> Result<Inbound, WireError> {
    let value = parse_envelope(bytes)?;
    let map = value.as_object().expect("envelope is an object");
    if map.contains_key("offer_id") {
        parse::<ProviderOffer>(bytes).map(Inbound::Offer)
    } else if map.contains_key("request_id") {
        parse::<FederationRequest>(bytes).map(Inbound::Request)
    } else if map.contains_key("release_request_id") {
        let r: ReleaseRecord = serde_json::from_slice(bytes).map_err(|e| located(bytes, &e))?;
        Ok(Inbound::Release(r.release_request_id))
    } else {
        Err(WireError::malformed(
            0,
            "expected an offer (offer_id), a request (request_id) or a release (release_request_id)",
        ))
    }
}

// ---------------------------------------------------------------------------
// Scenario

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteRecord {
    pub round_trip_delay_s: f64,
    pub bandwidth_bps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRecord {
    pub schema_version: String,
    pub seed: u64,
    pub duration_s: f64,
    pub satellite: SatelliteRecord,
    pub cache_budget_bytes: u64,
    #[serde(default)]
    pub cached_hit_delay_s: f64,
    pub slices: Vec<SliceRecord>,
    pub arrival_process: ArrivalProcess,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_cache_budget_bytes: Option<Vec<u64>>,
}

impl Document for ScenarioSpec {
    type Record = ScenarioRecord;

    fn to_record(&self) -> ScenarioRecord {
        ScenarioRecord {
            schema_version: SCHEMA_VERSION.into(),
            seed: self.seed,
            duration_s: self.duration_s,
            satellite: SatelliteRecord {
                round_trip_delay_s: self.satellite.round_trip_delay_s,
                bandwidth_bps: self.satellite.bandwidth_bps,
            },
            cache_budget_bytes: self.cache_budget_bytes,
            cached_hit_delay_s: self.cached_hit_delay_s,
            slices: self.slices.iter().map(SliceRecord::from).collect(),
            arrival_process: self.arrival_process,
            sweep_cache_budget_bytes: self.sweep.clone(),
        }
    }

    fn from_record(r: ScenarioRecord) -> Result<Self, WireError> {
        check_version(&r.schema_version)?;
        let spec = ScenarioSpec {
            seed: r.seed,
            duration_s: r.duration_s,
            satellite: SatelliteProfile {
                round_trip_delay_s: r.satellite.round_trip_delay_s,
                bandwidth_bps: r.satellite.bandwidth_bps,
            },
            cache_budget_bytes: r.cache_budget_bytes,
            cached_hit_delay_s: r.cached_hit_delay_s,
            slices: slices_from_records(r.slices)?,
            arrival_process: r.arrival_process,
            sweep: r.sweep_cache_budget_bytes,
        };
        spec.validate()?;
        Ok(spec)
    }
}

// ---------------------------------------------------------------------------
// Catalog dump

#[derive(Debug, Clone, Serialize)]
pub struct CatalogDump {
    pub schema_version: String,
    pub entries: Vec<CatalogEntryDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntryDump {
    pub resource_id: String,
    pub provider_id: String,
    pub kind: ResourceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_class: Option<LinkClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub one_way_propagation_delay_s: Option<f64>,
    pub acquired_capacity: f64,
    pub reserved_capacity: f64,
    pub free_capacity: f64,
    pub reservations: Vec<ReservationDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReservationDump {
    pub reservation_id: String,
    pub holder_id: String,
    pub amount: f64,
}

pub fn catalog_dump(catalog: &Catalog) -> CatalogDump {
    CatalogDump {
        schema_version: SCHEMA_VERSION.into(),
        entries: catalog
            .entries()
            .map(|e| CatalogEntryDump {
                resource_id: e.resource.resource_id.clone(),
                provider_id: e.resource.provider_id.clone(),
                kind: e.resource.kind,
                link_class: e.resource.link_class(),
                one_way_propagation_delay_s: e
                    .resource
                    .link_profile
                    .map(|p| p.one_way_propagation_delay_s),
                acquired_capacity: e.acquired_capacity,
                reserved_capacity: e.reserved_capacity(),
                free_capacity: e.free_capacity(),
                reservations: e
                    .reservations()
                    .map(|(id, share)| ReservationDump {
                        reservation_id: id.to_string(),
                        holder_id: share.holder_id.clone(),
                        amount: share.amount,
                    })
                    .collect(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{GB, MBPS};

    const MINIMAL_REQUEST: &str = r#"{"request_id":"r1","schema_version":"aerofed/1","slices":[{"catalog_size_files":10000,"delay_requirement_s":1,"file_size_bytes":200000,"per_ue_request_rate_files_per_s":2,"slice_id":"s0","ue_count":15,"zipf_exponent":0}]}"#;

    #[test]
    fn minimal_request_parses() {
        let r: FederationRequest = parse(MINIMAL_REQUEST.as_bytes()).unwrap();
        assert_eq!(r.request_id, "r1");
        assert_eq!(r.slices.len(), 1);
        assert_eq!(r.slices[0].aggregate_demand(), 48e6);
        assert_eq!(emit(&r), MINIMAL_REQUEST.as_bytes());
    }

    #[test]
    fn negative_ue_count_names_field() {
        let doc = MINIMAL_REQUEST.replace("\"ue_count\":15", "\"ue_count\":-1");
        match parse::<FederationRequest>(doc.as_bytes()) {
            Err(WireError::InvariantViolation(v)) => assert_eq!(v.field, "ue_count"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_version_rejected() {
        let doc = MINIMAL_REQUEST.replace("aerofed/1", "aerofed/9");
        assert_eq!(
            parse::<FederationRequest>(doc.as_bytes()),
            Err(WireError::UnsupportedVersion("aerofed/9".into()))
        );
    }

    #[test]
    fn unknown_top_level_field_rejected() {
        let doc = MINIMAL_REQUEST.replacen('{', r#"{"extra":1,"#, 1);
        assert!(matches!(
            parse::<FederationRequest>(doc.as_bytes()),
            Err(WireError::MalformedDocument { .. })
        ));
    }

    #[test]
    fn syntax_error_reports_offset() {
        let doc = br#"{"schema_version":"aerofed/1",]"#;
        match parse::<FederationRequest>(doc) {
            Err(WireError::MalformedDocument { offset, .. }) => assert_eq!(offset, 30),
            other => panic!("unexpected {other:?}"),
        }
        let doc = b"{\n  \"a\": 1,\n  oops\n}";
        match parse::<FederationRequest>(doc) {
            Err(WireError::MalformedDocument { offset, .. }) => assert_eq!(doc[offset], b'o'),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse::<FederationRequest>(&[0xff, 0xfe]),
            Err(WireError::MalformedDocument { offset: 0, .. })
        ));
    }

    #[test]
    fn duplicate_slice_ids_rejected() {
        let slice = r#"{"catalog_size_files":1,"delay_requirement_s":1,"file_size_bytes":1,"per_ue_request_rate_files_per_s":1,"slice_id":"a","ue_count":1,"zipf_exponent":0}"#;
        let doc = format!(
            r#"{{"request_id":"r","schema_version":"aerofed/1","slices":[{slice},{slice}]}}"#
        );
        match parse::<FederationRequest>(doc.as_bytes()) {
            Err(WireError::InvariantViolation(v)) => assert_eq!(v.field, "slice_id"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(to_canonical_string(&48e6), "48000000");
        assert_eq!(to_canonical_string(&0.25), "0.25");
        assert_eq!(to_canonical_string(&-0.0), "0");
        assert_eq!(to_canonical_string(&(1.0 / 3.0)), "0.3333333333333333");
        assert_eq!(to_canonical_string(&u64::MAX), "18446744073709551615");
    }

    #[test]
    fn decision_document_shape() {
        let mut plan = AdmissionPlan::empty();
        plan.served.insert("a".into());
        plan.cache_alloc.insert("a".into(), 2 * GB);
        plan.rate_alloc.insert("a".into(), 0.0);
        plan.objective = 1;
        let d = FederationDecision::allocated("r", &plan);
        let text = String::from_utf8(emit(&d)).unwrap();
        assert_eq!(
            text,
            r#"{"objective":1,"request_id":"r","schema_version":"aerofed/1","served":[{"cache_bytes":2000000000,"satellite_rate_bps":0,"slice_id":"a"}],"status":"allocated"}"#
        );
        assert_eq!(parse::<FederationDecision>(text.as_bytes()).unwrap(), d);

        let rej = FederationDecision::rejected("r", "insufficient resources");
        let text = emit(&rej);
        assert_eq!(parse::<FederationDecision>(&text).unwrap(), rej);
    }

    #[test]
    fn inconsistent_decision_rejected() {
        let doc = r#"{"objective":2,"request_id":"r","schema_version":"aerofed/1","served":[],"status":"allocated"}"#;
        assert!(matches!(
            parse::<FederationDecision>(doc.as_bytes()),
            Err(WireError::InvariantViolation(_))
        ));
    }

    #[test]
    fn offer_round_trip() {
        let offer = ProviderOffer {
            offer_id: "o1".into(),
            provider_id: "geo-sat".into(),
            resources: vec![
                ResourceDescriptor::link("sat", "geo-sat", LinkClass::Sa2g, 112.0 * MBPS, 0.125),
                ResourceDescriptor::storage("cache", "geo-sat", 32 * GB),
            ],
            price: 3.5,
        };
        let bytes = emit(&offer);
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            r#"{"offer_id":"o1","price":3.5,"provider_id":"geo-sat","resources":[{"capacity":112000000,"kind":"communication","link_class":"SA2G","one_way_propagation_delay_s":0.125,"resource_id":"sat"},{"capacity":32000000000,"kind":"storage","resource_id":"cache"}],"schema_version":"aerofed/1"}"#
        );
        assert_eq!(parse::<ProviderOffer>(&bytes).unwrap(), offer);
        assert_eq!(parse_inbound(&bytes).unwrap(), Inbound::Offer(offer));
    }

    #[test]
    fn inbound_dispatch() {
        assert!(matches!(
            parse_inbound(MINIMAL_REQUEST.as_bytes()),
            Ok(Inbound::Request(_))
        ));
        assert_eq!(
            parse_inbound(br#"{"release_request_id":"r1","schema_version":"aerofed/1"}"#),
            Ok(Inbound::Release("r1".into()))
        );
        assert!(matches!(
            parse_inbound(br#"{"schema_version":"aerofed/1"}"#),
            Err(WireError::MalformedDocument { .. })
        ));
    }

    #[test]
    fn catalog_dump_lists_reservations() {
        let mut c = Catalog::new();
        c.deposit(&ProviderOffer {
            offer_id: "o".into(),
            provider_id: "p".into(),
            resources: vec![ResourceDescriptor::storage("disk", "p", 10)],
            price: 0.0,
        })
        .unwrap();
        c.reserve("req", &[crate::catalog::Demand::storage(4.0)])
            .unwrap();
        let text = to_canonical_string(&catalog_dump(&c));
        assert_eq!(
            text,
            r#"{"entries":[{"acquired_capacity":10,"free_capacity":6,"kind":"storage","provider_id":"p","reservations":[{"amount":4,"holder_id":"req","reservation_id":"res-0"}],"reserved_capacity":4,"resource_id":"disk"}],"schema_version":"aerofed/1"}"#
        );
    }
}

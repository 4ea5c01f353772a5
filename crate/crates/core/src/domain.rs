//! Shared vocabulary: resources, slices, plans and the quantities they carry.
//!
//! Every quantity is stored in base units: bytes for storage, bits per second
//! for bandwidth and seconds for delay. Decimal prefixes are used throughout
//! (1 MB = 10^6 bytes, 1 GB = 10^9 bytes, 1 Mbps = 10^6 bit/s); conversion for
//! display happens at the edges only.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::InvariantViolation;

/// Bytes in one decimal megabyte.
pub const MB: u64 = 1_000_000;
/// Bytes in one decimal gigabyte.
pub const GB: u64 = 1_000_000_000;
/// Bits per second in one decimal megabit per second.
pub const MBPS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Processing,
    Storage,
    Communication,
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ResourceKind::Processing => "processing",
            ResourceKind::Storage => "storage",
            ResourceKind::Communication => "communication",
        };
        f.write_str(s)
    }
}

/// Link classes of the aeronautical network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkClass {
    /// Inter-aerial link between aircraft.
    #[serde(rename = "IAL")]
    Ial,
    /// Inter-satellite link.
    #[serde(rename = "ISL")]
    Isl,
    /// Direct air-to-ground link.
    #[serde(rename = "DA2G")]
    Da2g,
    /// Satellite link toward the ground gateway.
    #[serde(rename = "SA2G")]
    Sa2g,
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LinkClass::Ial => "IAL",
            LinkClass::Isl => "ISL",
            LinkClass::Da2g => "DA2G",
            LinkClass::Sa2g => "SA2G",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub link_class: LinkClass,
    pub one_way_propagation_delay_s: f64,
}

/// A unit of processing, storage or communication capacity owned by a provider.
///
/// `capacity` is in compute units, bytes or bits per second depending on `kind`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceDescriptor {
    pub resource_id: String,
    pub provider_id: String,
    pub kind: ResourceKind,
    pub capacity: f64,
    pub link_profile: Option<LinkProfile>,
}

impl ResourceDescriptor {
    pub fn storage(resource_id: &str, provider_id: &str, bytes: u64) -> Self {
        Self {
            resource_id: resource_id.to_owned(),
            provider_id: provider_id.to_owned(),
            kind: ResourceKind::Storage,
            capacity: bytes as f64,
            link_profile: None,
        }
    }

    pub fn processing(resource_id: &str, provider_id: &str, units: f64) -> Self {
        Self {
            resource_id: resource_id.to_owned(),
            provider_id: provider_id.to_owned(),
            kind: ResourceKind::Processing,
            capacity: units,
            link_profile: None,
        }
    }

    pub fn link(
        resource_id: &str,
        provider_id: &str,
        class: LinkClass,
        bandwidth_bps: f64,
        one_way_delay_s: f64,
    ) -> Self {
        Self {
            resource_id: resource_id.to_owned(),
            provider_id: provider_id.to_owned(),
            kind: ResourceKind::Communication,
            capacity: bandwidth_bps,
            link_profile: Some(LinkProfile {
                link_class: class,
                one_way_propagation_delay_s: one_way_delay_s,
            }),
        }
    }

    pub fn link_class(&self) -> Option<LinkClass> {
        self.link_profile.map(|p| p.link_class)
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.resource_id.is_empty() {
            return Err(InvariantViolation::new("resource_id", "must not be empty"));
        }
        if !(self.capacity.is_finite() && self.capacity >= 0.0) {
            return Err(InvariantViolation::new(
                "capacity",
                "must be finite and >= 0",
            ));
        }
        match (self.kind, &self.link_profile) {
            (ResourceKind::Communication, None) => Err(InvariantViolation::new(
                "link_class",
                "communication resources require a link profile",
            )),
            (ResourceKind::Communication, Some(p)) => {
                if p.one_way_propagation_delay_s.is_finite() && p.one_way_propagation_delay_s >= 0.0
                {
                    Ok(())
                } else {
                    Err(InvariantViolation::new(
                        "one_way_propagation_delay_s",
                        "must be finite and >= 0",
                    ))
                }
            }
            (_, Some(_)) => Err(InvariantViolation::new(
                "link_class",
                "only communication resources carry a link profile",
            )),
            (_, None) => Ok(()),
        }
    }
}

/// A group of UEs with identical traffic and one delay requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSlice {
    pub slice_id: String,
    pub ue_count: u32,
    pub per_ue_request_rate: f64,
    pub file_size_bytes: u64,
    pub catalog_size_files: u64,
    pub zipf_exponent: f64,
    pub delay_requirement_s: f64,
}

impl NetworkSlice {
    /// Aggregate demand `U·λ·S·8` in bits per second.
    pub fn aggregate_demand(&self) -> f64 {
        aggregate_demand(self)
    }

    /// Bytes needed to cache the whole catalog.
    pub fn catalog_bytes(&self) -> u64 {
        self.catalog_size_files.saturating_mul(self.file_size_bytes)
    }

    /// Bits in one file.
    pub fn file_bits(&self) -> f64 {
        self.file_size_bytes as f64 * 8.0
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.slice_id.is_empty() {
            return Err(InvariantViolation::new("slice_id", "must not be empty"));
        }
        if self.ue_count == 0 {
            return Err(InvariantViolation::new("ue_count", "must be positive"));
        }
        if !(self.per_ue_request_rate.is_finite() && self.per_ue_request_rate >= 0.0) {
            return Err(InvariantViolation::new(
                "per_ue_request_rate_files_per_s",
                "must be finite and >= 0",
            ));
        }
        if self.file_size_bytes == 0 {
            return Err(InvariantViolation::new(
                "file_size_bytes",
                "must be positive",
            ));
        }
        if self.catalog_size_files == 0 {
            return Err(InvariantViolation::new(
                "catalog_size_files",
                "must be positive",
            ));
        }
        if self
            .catalog_size_files
            .checked_mul(self.file_size_bytes)
            .is_none()
        {
            return Err(InvariantViolation::new(
                "catalog_size_files",
                "catalog bytes overflow",
            ));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return Err(InvariantViolation::new(
                "zipf_exponent",
                "must be finite and >= 0",
            ));
        }
        if !(self.delay_requirement_s.is_finite() && self.delay_requirement_s > 0.0) {
            return Err(InvariantViolation::new(
                "delay_requirement_s",
                "must be finite and > 0",
            ));
        }
        if !self.aggregate_demand().is_finite() {
            return Err(InvariantViolation::new(
                "per_ue_request_rate_files_per_s",
                "aggregate demand overflows",
            ));
        }
        Ok(())
    }
}

/// Aggregate demand of a slice in bits per second.
pub fn aggregate_demand(slice: &NetworkSlice) -> f64 {
    slice.ue_count as f64 * slice.per_ue_request_rate * slice.file_bits()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteProfile {
    pub round_trip_delay_s: f64,
    pub bandwidth_bps: f64,
}

impl SatelliteProfile {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if !(self.round_trip_delay_s.is_finite() && self.round_trip_delay_s >= 0.0) {
            return Err(InvariantViolation::new(
                "round_trip_delay_s",
                "must be finite and >= 0",
            ));
        }
        if !(self.bandwidth_bps.is_finite() && self.bandwidth_bps >= 0.0) {
            return Err(InvariantViolation::new(
                "bandwidth_bps",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

/// Output of the admission optimizer.
///
/// Both allocation maps carry an entry for every served slice, zero included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdmissionPlan {
    pub served: BTreeSet<String>,
    pub cache_alloc: BTreeMap<String, u64>,
    pub rate_alloc: BTreeMap<String, f64>,
    pub objective: usize,
}

impl AdmissionPlan {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Satellite rate summed in slice-id order.
    pub fn total_rate(&self) -> f64 {
        self.rate_alloc.values().fold(0.0, |a, b| a + b)
    }

    pub fn total_cache(&self) -> u64 {
        self.cache_alloc.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderOffer {
    pub offer_id: String,
    pub provider_id: String,
    pub resources: Vec<ResourceDescriptor>,
    pub price: f64,
}

impl ProviderOffer {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.offer_id.is_empty() {
            return Err(InvariantViolation::new("offer_id", "must not be empty"));
        }
        if self.resources.is_empty() {
            return Err(InvariantViolation::new(
                "resources",
                "offer must carry at least one resource",
            ));
        }
        if !(self.price.is_finite() && self.price >= 0.0) {
            return Err(InvariantViolation::new("price", "must be finite and >= 0"));
        }
        let mut seen = BTreeSet::new();
        for r in &self.resources {
            r.validate()?;
            if !seen.insert(r.resource_id.as_str()) {
                return Err(InvariantViolation::new(
                    "resource_id",
                    "duplicated within offer",
                ));
            }
        }
        Ok(())
    }
}

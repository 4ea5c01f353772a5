//! Resource catalog: the ledger of acquired resources and their reservations.
//!
//! Quantities are divisible. Storage demands draw from any storage resource,
//! communication demands may be narrowed to a link class, and a multi-demand
//! reservation is all-or-nothing.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::domain::{LinkClass, ProviderOffer, ResourceDescriptor, ResourceKind};
use crate::error::InvariantViolation;

/// Relative slack accepted when a fungible demand is spread over several entries
/// and the float sum of their free capacities lands a few ulps short.
const FILL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReservationId(pub u64);

impl fmt::Display for ReservationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "res-{}", self.0)
    }
}

/// A request for `amount` of one resource kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demand {
    pub kind: ResourceKind,
    pub amount: f64,
    pub link_class: Option<LinkClass>,
}

impl Demand {
    pub fn storage(bytes: f64) -> Self {
        Self {
            kind: ResourceKind::Storage,
            amount: bytes,
            link_class: None,
        }
    }

    pub fn link(class: LinkClass, bps: f64) -> Self {
        Self {
            kind: ResourceKind::Communication,
            amount: bps,
            link_class: Some(class),
        }
    }

    pub fn processing(units: f64) -> Self {
        Self {
            kind: ResourceKind::Processing,
            amount: units,
            link_class: None,
        }
    }

    fn matches(&self, resource: &ResourceDescriptor) -> bool {
        resource.kind == self.kind
            && match self.link_class {
                None => true,
                Some(class) => resource.link_class() == Some(class),
            }
    }
}

impl fmt::Display for Demand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.link_class {
            Some(class) => write!(f, "{}({}) {}", self.kind, class, self.amount),
            None => write!(f, "{} {}", self.kind, self.amount),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Availability {
    pub available: bool,
    pub free_capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservationShare {
    pub holder_id: String,
    pub amount: f64,
    pub kind: ResourceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub resource: ResourceDescriptor,
    pub acquired_capacity: f64,
    reserved_capacity: f64,
    reservations: BTreeMap<ReservationId, ReservationShare>,
}

impl CatalogEntry {
    fn new(resource: ResourceDescriptor) -> Self {
        Self {
            acquired_capacity: resource.capacity,
            resource,
            reserved_capacity: 0.0,
            reservations: BTreeMap::new(),
        }
    }

    pub fn reserved_capacity(&self) -> f64 {
        self.reserved_capacity
    }

    pub fn free_capacity(&self) -> f64 {
        (self.acquired_capacity - self.reserved_capacity).max(0.0)
    }

    pub fn reservations(&self) -> impl Iterator<Item = (&ReservationId, &ReservationShare)> {
        self.reservations.iter()
    }

    fn recompute_reserved(&mut self) {
        self.reserved_capacity = self
            .reservations
            .values()
            .map(|s| s.amount)
            .fold(0.0, |a, b| a + b);
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ReservationRecord {
    holder_id: String,
    resources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("resource `{0}` already present in the catalog")]
    DuplicateResource(String),
    #[error("invalid offer: {0}")]
    InvalidOffer(#[from] InvariantViolation),
    #[error("invalid demand #{index}: amount must be finite and >= 0")]
    InvalidDemand { index: usize },
    #[error("insufficient resources for demand #{index} ({demand}): {free} free")]
    InsufficientResources {
        index: usize,
        demand: Demand,
        free: f64,
    },
    #[error("unknown reservation {0}")]
    UnknownReservation(ReservationId),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    entries: BTreeMap<String, CatalogEntry>,
    reservations: BTreeMap<ReservationId, ReservationRecord>,
    next_reservation: u64,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    pub fn entry(&self, resource_id: &str) -> Option<&CatalogEntry> {
        self.entries.get(resource_id)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, resource_id: &str) -> bool {
        self.entries.contains_key(resource_id)
    }

    pub fn live_reservations(&self) -> impl Iterator<Item = ReservationId> + '_ {
        self.reservations.keys().copied()
    }

    pub fn holder(&self, id: ReservationId) -> Option<&str> {
        self.reservations.get(&id).map(|r| r.holder_id.as_str())
    }

    /// Adds every resource of `offer` with nothing reserved. Either all
    /// resources are added or none.
    pub fn deposit(&mut self, offer: &ProviderOffer) -> Result<Vec<String>, CatalogError> {
        offer.validate()?;
        if let Some(dup) = offer
            .resources
            .iter()
            .find(|r| self.entries.contains_key(&r.resource_id))
        {
            return Err(CatalogError::DuplicateResource(dup.resource_id.clone()));
        }
        let ids = offer
            .resources
            .iter()
            .map(|r| r.resource_id.clone())
            .collect();
        for r in &offer.resources {
            self.entries
                .insert(r.resource_id.clone(), CatalogEntry::new(r.clone()));
        }
        Ok(ids)
    }

    pub fn acquired(&self, kind: ResourceKind, link_class: Option<LinkClass>) -> f64 {
        let probe = Demand {
            kind,
            amount: 0.0,
            link_class,
        };
        self.matching(&probe)
            .map(|e| e.acquired_capacity)
            .fold(0.0, |a, b| a + b)
    }

    pub fn free(&self, kind: ResourceKind, link_class: Option<LinkClass>) -> f64 {
        let probe = Demand {
            kind,
            amount: 0.0,
            link_class,
        };
        self.matching(&probe)
            .map(CatalogEntry::free_capacity)
            .fold(0.0, |a, b| a + b)
    }

    pub fn check_availability(&self, query: &Demand) -> Availability {
        let free_capacity = self.free(query.kind, query.link_class);
        Availability {
            available: free_capacity >= query.amount,
            free_capacity,
        }
    }

    /// Reserves every demand under one id, or nothing at all.
    pub fn reserve(
        &mut self,
        holder_id: &str,
        demands: &[Demand],
    ) -> Result<ReservationId, CatalogError> {
        // Free capacity per entry as seen by this reservation so far.
        let mut scratch: BTreeMap<&str, f64> = BTreeMap::new();
        let mut shares: Vec<(String, f64, ResourceKind)> = Vec::new();

        for (index, demand) in demands.iter().enumerate() {
            if !(demand.amount.is_finite() && demand.amount >= 0.0) {
                return Err(CatalogError::InvalidDemand { index });
            }
            let mut remaining = demand.amount;
            let mut free_seen = 0.0;
            for entry in self.matching(demand) {
                let free = scratch
                    .entry(entry.resource.resource_id.as_str())
                    .or_insert_with(|| entry.free_capacity());
                free_seen += *free;
                if remaining <= 0.0 {
                    continue;
                }
                let take = remaining.min(*free);
                if take > 0.0 {
                    *free -= take;
                    remaining -= take;
                    shares.push((entry.resource.resource_id.clone(), take, demand.kind));
                }
            }
            if remaining > FILL_TOLERANCE * demand.amount {
                return Err(CatalogError::InsufficientResources {
                    index,
                    demand: *demand,
                    free: free_seen,
                });
            }
        }

        let id = ReservationId(self.next_reservation);
        self.next_reservation += 1;
        let mut touched: Vec<String> = Vec::new();
        for (resource_id, amount, kind) in shares {
            let entry = self
                .entries
                .get_mut(&resource_id)
                .expect("share refers to a catalog entry");
            entry
                .reservations
                .entry(id)
                .and_modify(|s| s.amount += amount)
                .or_insert_with(|| ReservationShare {
                    holder_id: holder_id.to_owned(),
                    amount,
                    kind,
                });
            entry.recompute_reserved();
            if !touched.contains(&resource_id) {
                touched.push(resource_id);
            }
        }
        self.reservations.insert(
            id,
            ReservationRecord {
                holder_id: holder_id.to_owned(),
                resources: touched,
            },
        );
        Ok(id)
    }

    pub fn release(&mut self, id: ReservationId) -> Result<(), CatalogError> {
        let record = self
            .reservations
            .remove(&id)
            .ok_or(CatalogError::UnknownReservation(id))?;
        for resource_id in record.resources {
            if let Some(entry) = self.entries.get_mut(&resource_id) {
                entry.reservations.remove(&id);
                entry.recompute_reserved();
            }
        }
        Ok(())
    }

    fn matching<'a>(&'a self, demand: &'a Demand) -> impl Iterator<Item = &'a CatalogEntry> + 'a {
        self.entries
            .values()
            .filter(move |e| demand.matches(&e.resource))
    }
}

//! The federation engine: application processor, resource distributor,
//! catalog, SDN controller and negotiator wired into one request path.
//!
//! A request flows
//!
//! ```text
//! ApplicationProcessor -> ResourceDistributor -> Catalog (availability)
//!     -> SdnController (solve) -> ResourceDistributor -> Catalog (reserve)
//!     -> ApplicationProcessor (decision)
//! ```
//!
//! and short-circuits back to the application processor when the catalog has
//! nothing to offer. Requests are handled one at a time in arrival order and
//! every step is appended to a time-ordered event log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError, Demand, ReservationId};
use crate::domain::{AdmissionPlan, LinkClass, ProviderOffer, ResourceKind, SatelliteProfile};
use crate::negotiator::{AcquisitionStrategy, NegotiationError, Negotiator};
use crate::optimizer::{self, AdmissionProblem};
use crate::wire::{FederationDecision, FederationRequest};

/// Gap inserted between log events that would otherwise share a timestamp.
const LOG_TICK_S: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Block {
    ApplicationProcessor,
    ResourceDistributor,
    Catalog,
    SdnController,
    Negotiator,
}

impl Block {
    pub fn as_str(self) -> &'static str {
        match self {
            Block::ApplicationProcessor => "ApplicationProcessor",
            Block::ResourceDistributor => "ResourceDistributor",
            Block::Catalog => "Catalog",
            Block::SdnController => "SdnController",
            Block::Negotiator => "Negotiator",
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEvent {
    pub seq: u64,
    pub time_s: f64,
    pub block: Block,
    /// Request or offer the event belongs to.
    pub subject: String,
    pub event: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum LifecycleState {
    Received,
    AvailabilityChecked,
    Optimizing,
    Allocated,
    Rejected,
    Responded,
}

impl LifecycleState {
    fn may_follow(self, prev: LifecycleState) -> bool {
        use LifecycleState::*;
        matches!(
            (prev, self),
            (Received, AvailabilityChecked)
                | (AvailabilityChecked, Optimizing)
                | (AvailabilityChecked, Rejected)
                | (Optimizing, Allocated)
                | (Allocated, Responded)
                | (Rejected, Responded)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pending,
    Allocated(AdmissionPlan),
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestLifecycle {
    pub request_id: String,
    pub request: FederationRequest,
    history: Vec<(LifecycleState, f64)>,
    pub outcome: Outcome,
    pub reservation: Option<ReservationId>,
    pub released: bool,
}

impl RequestLifecycle {
    fn new(request: FederationRequest, time: f64) -> Self {
        Self {
            request_id: request.request_id.clone(),
            request,
            history: vec![(LifecycleState::Received, time)],
            outcome: Outcome::Pending,
            reservation: None,
            released: false,
        }
    }

    pub fn state(&self) -> LifecycleState {
        self.history.last().expect("history starts at Received").0
    }

    /// Every state visited with the simulated time it was entered.
    pub fn history(&self) -> &[(LifecycleState, f64)] {
        &self.history
    }

    fn holds_allocation(&self) -> bool {
        self.reservation.is_some() && !self.released
    }

    fn advance(&mut self, next: LifecycleState, time: f64) {
        let prev = self.state();
        assert!(
            next.may_follow(prev),
            "illegal lifecycle transition {prev:?} -> {next:?}"
        );
        self.history.push((next, time));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Link class of the backhaul the SDN controller allocates.
    pub backhaul: LinkClass,
    pub cached_hit_delay_s: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            backhaul: LinkClass::Sa2g,
            cached_hit_delay_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FederationError {
    #[error("offer `{0}` was already submitted")]
    DuplicateOffer(String),
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("unknown request `{0}`")]
    UnknownRequest(String),
    #[error("request `{0}` holds no allocation")]
    NotAllocated(String),
    #[error(transparent)]
    Negotiation(#[from] NegotiationError),
    #[error("reservation failed: {0}")]
    Reservation(#[from] CatalogError),
}

impl FederationError {
    /// Short machine-readable tag used in error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            FederationError::DuplicateOffer(_) => "DuplicateOffer",
            FederationError::MalformedRequest(_) => "MalformedRequest",
            FederationError::UnknownRequest(_) => "UnknownRequest",
            FederationError::NotAllocated(_) => "NotAllocated",
            FederationError::Negotiation(_) => "NegotiationFailed",
            FederationError::Reservation(_) => "InsufficientResources",
        }
    }
}

pub struct FederationEngine {
    catalog: Catalog,
    negotiator: Negotiator,
    config: EngineConfig,
    log: Vec<LogEvent>,
    clock: f64,
    requests: BTreeMap<String, RequestLifecycle>,
    offers_seen: BTreeSet<String>,
}

impl FederationEngine {
    pub fn new(strategy: Box<dyn AcquisitionStrategy>, config: EngineConfig) -> Self {
        Self {
            catalog: Catalog::new(),
            negotiator: Negotiator::new(strategy),
            config,
            log: Vec::new(),
            clock: 0.0,
            requests: BTreeMap::new(),
            offers_seen: BTreeSet::new(),
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn event_log(&self) -> &[LogEvent] {
        &self.log
    }

    pub fn lifecycle(&self, request_id: &str) -> Option<&RequestLifecycle> {
        self.requests.get(request_id)
    }

    pub fn spent(&self) -> f64 {
        self.negotiator.spent()
    }

    /// Moves simulated time forward; earlier times are ignored.
    pub fn advance_to(&mut self, time_s: f64) {
        if time_s > self.clock {
            self.clock = time_s;
        }
    }

    fn log(&mut self, block: Block, subject: &str, event: impl Into<String>) -> f64 {
        let time_s = match self.log.last() {
            Some(last) if last.time_s >= self.clock => last.time_s + LOG_TICK_S,
            _ => self.clock,
        };
        self.clock = time_s;
        self.log.push(LogEvent {
            seq: self.log.len() as u64,
            time_s,
            block,
            subject: subject.to_owned(),
            event: event.into(),
        });
        time_s
    }

    /// Offers arrive over the southbound API and go through the negotiator;
    /// accepted ones are deposited in the catalog.
    pub fn submit_offer(&mut self, offer: &ProviderOffer) -> Result<bool, FederationError> {
        if self.offers_seen.contains(&offer.offer_id) {
            return Err(FederationError::DuplicateOffer(offer.offer_id.clone()));
        }
        let id = offer.offer_id.as_str();
        self.log(
            Block::Negotiator,
            id,
            format!("offer received price={}", offer.price),
        );
        let outcome = self
            .negotiator
            .negotiate(std::slice::from_ref(offer), &mut self.catalog)?;
        self.offers_seen.insert(offer.offer_id.clone());
        let accepted = !outcome.accepted.is_empty();
        if accepted {
            self.log(
                Block::Negotiator,
                id,
                format!("offer accepted via {}", self.negotiator.strategy_name()),
            );
            let resources: Vec<&str> = offer
                .resources
                .iter()
                .map(|r| r.resource_id.as_str())
                .collect();
            self.log(
                Block::Catalog,
                id,
                format!("deposited {}", resources.join(",")),
            );
        } else {
            self.log(
                Block::Negotiator,
                id,
                format!("offer declined via {}", self.negotiator.strategy_name()),
            );
        }
        Ok(accepted)
    }

    fn backhaul_profile(&self) -> SatelliteProfile {
        let class = Some(self.config.backhaul);
        let round_trip_delay_s = self
            .catalog
            .entries()
            .filter(|e| e.resource.link_class() == class && e.free_capacity() > 0.0)
            .filter_map(|e| e.resource.link_profile)
            .map(|p| 2.0 * p.one_way_propagation_delay_s)
            .fold(0.0, f64::max);
        SatelliteProfile {
            round_trip_delay_s,
            bandwidth_bps: self.catalog.free(ResourceKind::Communication, class),
        }
    }

    pub fn handle_request(
        &mut self,
        request: &FederationRequest,
    ) -> Result<FederationDecision, FederationError> {
        let rid = request.request_id.clone();
        if rid.is_empty() {
            return Err(FederationError::MalformedRequest("empty request_id".into()));
        }
        // An id may be reused once it no longer holds resources.
        if self
            .requests
            .get(&rid)
            .is_some_and(RequestLifecycle::holds_allocation)
        {
            return Err(FederationError::MalformedRequest(format!(
                "request `{rid}` still holds an allocation"
            )));
        }
        let mut ids = BTreeSet::new();
        for s in &request.slices {
            s.validate()
                .map_err(|e| FederationError::MalformedRequest(e.to_string()))?;
            if !ids.insert(s.slice_id.as_str()) {
                return Err(FederationError::MalformedRequest(format!(
                    "duplicate slice `{}`",
                    s.slice_id
                )));
            }
        }

        let t = self.log(
            Block::ApplicationProcessor,
            &rid,
            format!("request received slices={}", request.slices.len()),
        );
        let mut life = RequestLifecycle::new(request.clone(), t);

        // Gross demand: everything over the backhaul, or every catalog cached.
        let gross = [
            Demand::link(
                self.config.backhaul,
                request
                    .slices
                    .iter()
                    .map(|s| s.aggregate_demand())
                    .fold(0.0, |a, b| a + b),
            ),
            Demand::storage(
                request
                    .slices
                    .iter()
                    .map(|s| s.catalog_bytes() as f64)
                    .fold(0.0, |a, b| a + b),
            ),
        ];
        self.log(Block::ResourceDistributor, &rid, "verify availability");
        let checks: Vec<_> = gross
            .iter()
            .map(|d| (d, self.catalog.check_availability(d)))
            .collect();
        let summary: Vec<String> = checks
            .iter()
            .map(|(d, a)| {
                format!(
                    "{}({}) free={}",
                    d.kind,
                    d.link_class.map_or("any".into(), |c| c.to_string()),
                    a.free_capacity
                )
            })
            .collect();
        let t = self.log(
            Block::Catalog,
            &rid,
            format!("availability {}", summary.join(" ")),
        );
        life.advance(LifecycleState::AvailabilityChecked, t);

        let nothing_needed = gross.iter().all(|d| d.amount == 0.0);
        let something_free = checks
            .iter()
            .any(|(d, a)| d.amount > 0.0 && a.free_capacity > 0.0);
        if !(nothing_needed || something_free) {
            let (demand, avail) = checks
                .iter()
                .find(|(d, _)| d.amount > 0.0)
                .expect("some demand is positive");
            let reason = format!(
                "InsufficientResources: {} requested, {} free",
                demand, avail.free_capacity
            );
            life.advance(LifecycleState::Rejected, t);
            life.outcome = Outcome::Rejected(reason.clone());
            let t = self.log(Block::ApplicationProcessor, &rid, "responded rejected");
            life.advance(LifecycleState::Responded, t);
            self.requests.insert(rid.clone(), life);
            return Ok(FederationDecision::rejected(&rid, reason));
        }

        life.advance(LifecycleState::Optimizing, t);
        let problem = AdmissionProblem {
            slices: request.slices.clone(),
            satellite: self.backhaul_profile(),
            cache_budget_bytes: self.catalog.free(ResourceKind::Storage, None).floor() as u64,
            cached_hit_delay_s: self.config.cached_hit_delay_s,
        };
        let plan = optimizer::solve(&problem)
            .map_err(|e| FederationError::MalformedRequest(e.to_string()))?;
        self.log(
            Block::SdnController,
            &rid,
            format!(
                "solved objective={} rate_bps={} cache_bytes={}",
                plan.objective,
                plan.total_rate(),
                plan.total_cache()
            ),
        );

        self.log(Block::ResourceDistributor, &rid, "reserve allocation");
        let demands = [
            Demand::link(self.config.backhaul, plan.total_rate()),
            Demand::storage(plan.total_cache() as f64),
        ];
        let reservation = self.catalog.reserve(&rid, &demands)?;
        let t = self.log(Block::Catalog, &rid, format!("reserved {reservation}"));
        life.advance(LifecycleState::Allocated, t);
        life.reservation = Some(reservation);
        life.outcome = Outcome::Allocated(plan.clone());

        let t = self.log(
            Block::ApplicationProcessor,
            &rid,
            format!("responded allocated objective={}", plan.objective),
        );
        life.advance(LifecycleState::Responded, t);
        self.requests.insert(rid.clone(), life);
        Ok(FederationDecision::allocated(&rid, &plan))
    }

    /// Returns an allocated request's resources to the catalog.
    pub fn release_request(&mut self, request_id: &str) -> Result<(), FederationError> {
        let life = self
            .requests
            .get(request_id)
            .ok_or_else(|| FederationError::UnknownRequest(request_id.to_owned()))?;
        let reservation = match (life.reservation, life.released) {
            (Some(r), false) => r,
            _ => return Err(FederationError::NotAllocated(request_id.to_owned())),
        };
        self.log(Block::ResourceDistributor, request_id, "release allocation");
        self.catalog.release(reservation)?;
        self.log(
            Block::Catalog,
            request_id,
            format!("released {reservation}"),
        );
        self.requests
            .get_mut(request_id)
            .expect("checked above")
            .released = true;
        Ok(())
    }

    /// Block sequence logged for one subject, in log order.
    pub fn blocks_for(&self, subject: &str) -> Vec<Block> {
        self.log
            .iter()
            .filter(|e| e.subject == subject)
            .map(|e| e.block)
            .collect()
    }
}

impl fmt::Debug for FederationEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FederationEngine")
            .field("catalog", &self.catalog)
            .field("negotiator", &self.negotiator)
            .field("config", &self.config)
            .field("requests", &self.requests.len())
            .field("log_len", &self.log.len())
            .finish()
    }
}

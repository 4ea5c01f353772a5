//! Resource federation for aeronautical edge computing.
//!
//! The crate models an on-board federation engine that acquires processing,
//! storage and communication resources from providers, keeps them in a
//! catalog, and admits network slices by splitting an on-board cache and a
//! shared satellite link between them. A discrete-event simulator replays
//! traffic through the resulting plans.

pub mod catalog;
pub mod domain;
pub mod error;
pub mod federation;
pub mod negotiator;
pub mod optimizer;
pub mod sim;
pub mod wire;

pub use catalog::{Availability, Catalog, CatalogError, Demand, ReservationId};
pub use domain::{
    aggregate_demand, AdmissionPlan, LinkClass, LinkProfile, NetworkSlice, ProviderOffer,
    ResourceDescriptor, ResourceKind, SatelliteProfile, GB, MB, MBPS,
};
pub use error::InvariantViolation;
pub use federation::{Block, EngineConfig, FederationEngine, FederationError, LifecycleState};
pub use negotiator::{negotiate, AcceptAll, AcquisitionStrategy, BudgetGreedy, Negotiator};
pub use optimizer::{
    hit_ratio, is_served, per_request_delay, solve, solve_brute_force, subset_feasible,
    AdmissionProblem, DelayModel, OptimizerError,
};
pub use sim::{ArrivalProcess, ScenarioSpec, SimMetrics};
pub use wire::{emit, parse, FederationDecision, FederationRequest, WireError};

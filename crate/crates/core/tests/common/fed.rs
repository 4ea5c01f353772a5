//! Randomized offer/request/release sequences against the federation engine.

use aerofed_core::optimizer::DelayModel;
use aerofed_core::wire::DecisionStatus;
use aerofed_core::wire::FederationRequest;
use aerofed_core::{
    is_served, AcceptAll, BudgetGreedy, Catalog, EngineConfig, FederationEngine, LinkClass,
    NetworkSlice, ProviderOffer, ResourceDescriptor, ResourceKind, GB, MBPS,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;

pub const FLOW: &str = r"^ApplicationProcessor ResourceDistributor Catalog( SdnController ResourceDistributor Catalog)? ApplicationProcessor$";

const TOL: f64 = 1e-6;

fn offer(rng: &mut ChaCha8Rng, n: usize) -> ProviderOffer {
    let provider = format!("p{}", rng.random_range(0..3));
    let id = format!("o{n}");
    let mut resources = Vec::new();
    if rng.random_bool(0.7) {
        resources.push(ResourceDescriptor::link(
            &format!("{id}-sat"),
            &provider,
            LinkClass::Sa2g,
            rng.random_range(0.0..100.0) * MBPS,
            rng.random_range(0.05..0.3),
        ));
    }
    if rng.random_bool(0.7) {
        resources.push(ResourceDescriptor::storage(
            &format!("{id}-disk"),
            &provider,
            rng.random_range(0..8 * GB),
        ));
    }
    if rng.random_bool(0.3) {
        resources.push(ResourceDescriptor::link(
            &format!("{id}-ial"),
            &provider,
            LinkClass::Ial,
            50.0 * MBPS,
            0.001,
        ));
    }
    if resources.is_empty() || rng.random_bool(0.2) {
        resources.push(ResourceDescriptor::processing(
            &format!("{id}-cpu"),
            &provider,
            rng.random_range(1.0..64.0),
        ));
    }
    ProviderOffer {
        offer_id: id,
        provider_id: provider,
        resources,
        price: rng.random_range(0.0..5.0),
    }
}

fn request(rng: &mut ChaCha8Rng, n: usize) -> FederationRequest {
    let count = rng.random_range(0..=6);
    let slices = (0..count)
        .map(|i| NetworkSlice {
            slice_id: format!("r{n}-s{i}"),
            ue_count: rng.random_range(1..=15),
            per_ue_request_rate: [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)],
            file_size_bytes: 200_000,
            catalog_size_files: rng.random_range(1..=5_000),
            zipf_exponent: [0.0, 0.8][rng.random_range(0..2)],
            delay_requirement_s: rng.random_range(0.2..2.0),
        })
        .collect();
    FederationRequest {
        request_id: format!("r{n}"),
        slices,
    }
}

/// Per-entry bookkeeping: acquired = reserved + free and reserved is the sum of shares.
pub fn check_conservation(catalog: &Catalog) -> Result<(), String> {
    for e in catalog.entries() {
        let shares: f64 = e.reservations().map(|(_, s)| s.amount).sum();
        let scale = e.acquired_capacity.max(1.0);
        if (shares - e.reserved_capacity()).abs() > TOL * scale {
            return Err(format!(
                "{}: shares {shares} != reserved {}",
                e.resource.resource_id,
                e.reserved_capacity()
            ));
        }
        if e.reserved_capacity() > e.acquired_capacity * (1.0 + 1e-9) + TOL {
            return Err(format!("{}: over-reserved", e.resource.resource_id));
        }
        let sum = e.reserved_capacity() + e.free_capacity();
        if (sum - e.acquired_capacity).abs() > TOL * scale {
            return Err(format!(
                "{}: reserved + free {sum} != acquired {}",
                e.resource.resource_id, e.acquired_capacity
            ));
        }
    }
    Ok(())
}

fn kind_totals(catalog: &Catalog) -> [f64; 3] {
    [
        ResourceKind::Processing,
        ResourceKind::Storage,
        ResourceKind::Communication,
    ]
    .map(|k| catalog.acquired(k, None))
}

/// What a sequence exercised.
#[derive(Debug, Default, Clone, Copy)]
pub struct SequenceStats {
    pub offers: usize,
    pub allocated: usize,
    pub rejected: usize,
    pub released: usize,
    pub resubmitted: usize,
}

/// Handles one request and checks the flow, capacity and side-effect rules.
/// Returns whether it was allocated.
fn submit_request(
    engine: &mut FederationEngine,
    req: &FederationRequest,
    flow: &Regex,
    stats: &mut SequenceStats,
) -> Result<bool, String> {
    let before = engine.catalog().clone();
    let bandwidth = before.free(ResourceKind::Communication, Some(LinkClass::Sa2g));
    let storage = before.free(ResourceKind::Storage, None);
    let rtt = before
        .entries()
        .filter(|e| e.resource.link_class() == Some(LinkClass::Sa2g) && e.free_capacity() > 0.0)
        .filter_map(|e| e.resource.link_profile)
        .map(|p| 2.0 * p.one_way_propagation_delay_s)
        .fold(0.0, f64::max);
    let logged = engine.event_log().len();
    let d = engine.handle_request(req).map_err(|e| e.to_string())?;
    let blocks: Vec<&str> = engine.event_log()[logged..]
        .iter()
        .filter(|e| e.subject == req.request_id)
        .map(|e| e.block.as_str())
        .collect();
    let line = blocks.join(" ");
    if !flow.is_match(&line) {
        return Err(format!("{}: flow `{line}`", req.request_id));
    }
    match d.status {
        DecisionStatus::Rejected => {
            stats.rejected += 1;
            if engine.catalog() != &before {
                return Err(format!("{}: rejection mutated the catalog", req.request_id));
            }
            if line.contains("SdnController") {
                return Err(format!("{}: rejected after optimizing", req.request_id));
            }
            Ok(false)
        }
        DecisionStatus::Allocated => {
            let rate: f64 = d.served.iter().map(|s| s.satellite_rate_bps).sum();
            let cache: u64 = d.served.iter().map(|s| s.cache_bytes).sum();
            if rate > bandwidth * (1.0 + 1e-9) + TOL || cache as f64 > storage {
                return Err(format!("{}: plan exceeds free capacity", req.request_id));
            }
            let model = DelayModel {
                round_trip_delay_s: rtt,
                cached_hit_delay_s: 0.0,
            };
            for s in &d.served {
                let slice = req
                    .slices
                    .iter()
                    .find(|x| x.slice_id == s.slice_id)
                    .ok_or("unknown slice")?;
                if !is_served(slice, s.cache_bytes, s.satellite_rate_bps, &model) {
                    return Err(format!(
                        "{}: {} not actually served",
                        req.request_id, s.slice_id
                    ));
                }
            }
            let freed = before.free(ResourceKind::Storage, None)
                - engine.catalog().free(ResourceKind::Storage, None);
            if (freed - cache as f64).abs() > TOL * storage.max(1.0) {
                return Err(format!(
                    "{}: reserved storage {freed} != plan {cache}",
                    req.request_id
                ));
            }
            stats.allocated += 1;
            Ok(true)
        }
    }
}

/// Runs one random sequence and checks every invariant along the way.
pub fn run_sequence(seed: u64) -> Result<SequenceStats, String> {
    let mut rng = crate::common::rng(seed);
    let flow = Regex::new(FLOW).expect("flow regex");
    let mut engine = if rng.random_bool(0.5) {
        FederationEngine::new(Box::new(AcceptAll), EngineConfig::default())
    } else {
        FederationEngine::new(
            Box::new(BudgetGreedy::new(rng.random_range(0.0..12.0))),
            EngineConfig::default(),
        )
    };
    let mut stats = SequenceStats::default();
    let mut deposited = [0.0f64; 3];
    let mut allocated: Vec<FederationRequest> = Vec::new();
    let steps = rng.random_range(3..12);
    for step in 0..steps {
        engine.advance_to(step as f64 * rng.random_range(0.0..2.0));
        match rng.random_range(0..10) {
            0..=3 => {
                let o = offer(&mut rng, step);
                let before = kind_totals(engine.catalog());
                let accepted = engine.submit_offer(&o).map_err(|e| e.to_string())?;
                stats.offers += 1;
                let after = kind_totals(engine.catalog());
                if !accepted && after != before {
                    return Err(format!("declined offer {} changed the catalog", o.offer_id));
                }
                if accepted {
                    for r in &o.resources {
                        let i = match r.kind {
                            ResourceKind::Processing => 0,
                            ResourceKind::Storage => 1,
                            ResourceKind::Communication => 2,
                        };
                        deposited[i] += r.capacity;
                    }
                }
            }
            4..=7 => {
                let req = request(&mut rng, step);
                if submit_request(&mut engine, &req, &flow, &mut stats)? {
                    allocated.push(req);
                }
            }
            _ => {
                if allocated.is_empty() {
                    continue;
                }
                let req = allocated.swap_remove(rng.random_range(0..allocated.len()));
                let rid = req.request_id.as_str();
                let held = engine
                    .lifecycle(rid)
                    .and_then(|l| l.reservation)
                    .ok_or("missing reservation")?;
                engine.release_request(rid).map_err(|e| e.to_string())?;
                stats.released += 1;
                if engine.catalog().holder(held).is_some() {
                    return Err(format!("{rid}: reservation survived release"));
                }
                // A released id may be submitted again against the residual catalog.
                if rng.random_bool(0.5) {
                    stats.resubmitted += 1;
                    if submit_request(&mut engine, &req, &flow, &mut stats)? {
                        allocated.push(req);
                    }
                }
            }
        }
        check_conservation(engine.catalog())?;
        let totals = kind_totals(engine.catalog());
        for (t, d) in totals.iter().zip(deposited) {
            if (t - d).abs() > TOL * d.max(1.0) {
                return Err(format!("acquired {t} != deposited {d}"));
            }
        }
    }
    let log = engine.event_log();
    if !log.windows(2).all(|w| w[0].time_s < w[1].time_s) {
        return Err("log times not strictly increasing".into());
    }
    for req in allocated {
        engine
            .release_request(&req.request_id)
            .map_err(|e| e.to_string())?;
    }
    for e in engine.catalog().entries() {
        if e.reserved_capacity() != 0.0 {
            return Err(format!(
                "{}: capacity still reserved after releasing all",
                e.resource.resource_id
            ));
        }
    }
    Ok(stats)
}

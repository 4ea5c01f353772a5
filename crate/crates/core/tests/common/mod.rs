#![allow(dead_code)]

pub mod docs;
pub mod fed;

use aerofed_core::{AdmissionProblem, NetworkSlice, SatelliteProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn validation_slice(id: &str) -> NetworkSlice {
    NetworkSlice {
        slice_id: id.to_owned(),
        ue_count: 15,
        per_ue_request_rate: 2.0,
        file_size_bytes: 200_000,
        catalog_size_files: 10_000,
        zipf_exponent: 0.0,
        delay_requirement_s: 1.0,
    }
}

pub fn validation_slices(n: usize) -> Vec<NetworkSlice> {
    (0..n)
        .map(|i| validation_slice(&format!("slice-{i:02}")))
        .collect()
}

pub fn validation_problem(cache_bytes: u64, bandwidth_bps: f64) -> AdmissionProblem {
    AdmissionProblem::new(
        validation_slices(30),
        SatelliteProfile {
            round_trip_delay_s: 0.25,
            bandwidth_bps,
        },
        cache_bytes,
    )
}

/// Random admission problem with at most `max_slices` slices. Some slices
/// share parameters so the interchangeable-slice search path is exercised.
pub fn random_problem(rng: &mut ChaCha8Rng, max_slices: usize) -> AdmissionProblem {
    let n = rng.random_range(0..=max_slices);
    let mut slices: Vec<NetworkSlice> = Vec::with_capacity(n);
    for i in 0..n {
        let slice = if i > 0 && rng.random_bool(0.25) {
            let mut twin = slices[rng.random_range(0..i)].clone();
            twin.slice_id = format!("s{i}");
            twin
        } else {
            NetworkSlice {
                slice_id: format!("s{i}"),
                ue_count: rng.random_range(1..=20),
                per_ue_request_rate: rng.random_range(0.1..3.0),
                file_size_bytes: rng.random_range(1..=10) * 100_000,
                catalog_size_files: rng.random_range(1..=40),
                zipf_exponent: [0.0, 0.8, 1.2][rng.random_range(0..3)],
                delay_requirement_s: rng.random_range(0.3..2.0),
            }
        };
        slices.push(slice);
    }
    let demand: f64 = slices.iter().map(|s| s.aggregate_demand()).sum();
    let storage: u64 = slices.iter().map(|s| s.catalog_bytes()).sum();
    let bandwidth_bps = rng.random_range(0.0..=1.0) * demand * 0.8;
    let cache = (rng.random_range(0.0..=1.0) * storage as f64 * 0.8) as u64;
    let mut p = AdmissionProblem::new(
        slices,
        SatelliteProfile {
            round_trip_delay_s: rng.random_range(0.02..0.6),
            bandwidth_bps,
        },
        cache,
    );
    if rng.random_bool(0.2) {
        p.cached_hit_delay_s = rng.random_range(0.0..0.05);
    }
    p
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Re-checks every plan invariant without going through the solver.
pub fn check_plan(
    problem: &AdmissionProblem,
    plan: &aerofed_core::AdmissionPlan,
) -> Result<(), String> {
    use aerofed_core::is_served;
    if plan.objective != plan.served.len() {
        return Err(format!(
            "objective {} != |served| {}",
            plan.objective,
            plan.served.len()
        ));
    }
    for key in plan.cache_alloc.keys().chain(plan.rate_alloc.keys()) {
        if !plan.served.contains(key) {
            return Err(format!("allocation for unserved slice {key}"));
        }
    }
    let cache: u64 = plan.cache_alloc.values().sum();
    if cache > problem.cache_budget_bytes {
        return Err(format!(
            "cache {cache} over budget {}",
            problem.cache_budget_bytes
        ));
    }
    let rate: f64 = plan.rate_alloc.values().sum();
    if rate > problem.satellite.bandwidth_bps * (1.0 + 1e-9) {
        return Err(format!(
            "rate {rate} over bandwidth {}",
            problem.satellite.bandwidth_bps
        ));
    }
    let model = problem.delay_model();
    for id in &plan.served {
        let slice = problem
            .slices
            .iter()
            .find(|s| &s.slice_id == id)
            .ok_or_else(|| format!("served unknown slice {id}"))?;
        let c = plan.cache_alloc.get(id).copied().unwrap_or(0);
        let r = plan.rate_alloc.get(id).copied().unwrap_or(0.0);
        if c > slice.catalog_bytes() {
            return Err(format!("{id}: cache {c} beyond catalog"));
        }
        if !is_served(slice, c, r, &model) {
            return Err(format!("{id}: not served at cache {c} rate {r}"));
        }
    }
    Ok(())
}

//! Random well-formed wire documents.

use aerofed_core::sim::ArrivalProcess;
use aerofed_core::wire::{DecisionStatus, FederationDecision, FederationRequest, ServedSlice};
use aerofed_core::{
    LinkClass, NetworkSlice, ProviderOffer, ResourceDescriptor, SatelliteProfile, ScenarioSpec,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const ID_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789-_.";

pub fn id(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(1..=12);
    let mut s: String = (0..len)
        .map(|_| ID_CHARS[rng.random_range(0..ID_CHARS.len())] as char)
        .collect();
    if rng.random_bool(0.05) {
        s.push_str("\u{e9}\"\\\n");
    }
    s
}

/// Non-negative finite float drawn from several awkward shapes.
pub fn float(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..6) {
        0 => 0.0,
        1 => rng.random_range(0..1_000_000u64) as f64,
        2 => rng.random::<f64>(),
        3 => rng.random::<f64>() * 10f64.powi(rng.random_range(-12..15)),
        4 => f64::from_bits(rng.random_range(1..1u64 << 52)),
        _ => 9_007_199_254_740_992.0 * rng.random_range(1.0..4.0),
    }
}

fn positive_float(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let f = float(rng);
        if f > 0.0 {
            return f;
        }
    }
}

pub fn slice(rng: &mut ChaCha8Rng, slice_id: String) -> NetworkSlice {
    NetworkSlice {
        slice_id,
        ue_count: rng.random_range(1..=100_000),
        per_ue_request_rate: rng.random::<f64>() * 50.0,
        file_size_bytes: rng.random_range(1..=1u64 << 30),
        catalog_size_files: rng.random_range(1..=1u64 << 20),
        zipf_exponent: [0.0, 0.5, 1.0, 1.2, rng.random::<f64>() * 3.0][rng.random_range(0..5)],
        delay_requirement_s: positive_float(rng).min(1e6),
    }
}

fn slices(rng: &mut ChaCha8Rng) -> Vec<NetworkSlice> {
    let n = rng.random_range(0..6);
    (0..n)
        .map(|i| {
            let sid = format!("{}-{i}", id(rng));
            slice(rng, sid)
        })
        .collect()
}

pub fn request(rng: &mut ChaCha8Rng) -> FederationRequest {
    FederationRequest {
        request_id: id(rng),
        slices: slices(rng),
    }
}

pub fn offer(rng: &mut ChaCha8Rng) -> ProviderOffer {
    let provider = id(rng);
    let n = rng.random_range(1..5);
    let resources = (0..n)
        .map(|i| {
            let rid = format!("{}-{i}", id(rng));
            match rng.random_range(0..3) {
                0 => ResourceDescriptor::storage(&rid, &provider, rng.random_range(0..1u64 << 50)),
                1 => ResourceDescriptor::processing(&rid, &provider, float(rng)),
                _ => {
                    let class = [
                        LinkClass::Ial,
                        LinkClass::Isl,
                        LinkClass::Da2g,
                        LinkClass::Sa2g,
                    ][rng.random_range(0..4)];
                    ResourceDescriptor::link(&rid, &provider, class, float(rng), float(rng))
                }
            }
        })
        .collect();
    ProviderOffer {
        offer_id: id(rng),
        provider_id: provider,
        resources,
        price: float(rng),
    }
}

pub fn decision(rng: &mut ChaCha8Rng) -> FederationDecision {
    let request_id = id(rng);
    if rng.random_bool(0.3) {
        return FederationDecision::rejected(
            &request_id,
            format!("InsufficientResources: {}", id(rng)),
        );
    }
    let n = rng.random_range(0..6);
    let served: Vec<ServedSlice> = (0..n)
        .map(|i| ServedSlice {
            slice_id: format!("{}-{i}", id(rng)),
            cache_bytes: rng.random_range(0..1u64 << 53),
            satellite_rate_bps: float(rng),
        })
        .collect();
    FederationDecision {
        request_id,
        status: DecisionStatus::Allocated,
        objective: Some(served.len()),
        served,
        rejection_reason: None,
    }
}

pub fn scenario(rng: &mut ChaCha8Rng) -> ScenarioSpec {
    ScenarioSpec {
        seed: rng.random(),
        duration_s: positive_float(rng).min(1e9),
        satellite: SatelliteProfile {
            round_trip_delay_s: float(rng),
            bandwidth_bps: float(rng),
        },
        cache_budget_bytes: rng.random(),
        cached_hit_delay_s: if rng.random_bool(0.5) {
            0.0
        } else {
            float(rng)
        },
        slices: slices(rng),
        arrival_process: if rng.random_bool(0.5) {
            ArrivalProcess::Deterministic
        } else {
            ArrivalProcess::Poisson
        },
        sweep: rng
            .random_bool(0.5)
            .then(|| (0..rng.random_range(1..5)).map(|_| rng.random()).collect()),
    }
}

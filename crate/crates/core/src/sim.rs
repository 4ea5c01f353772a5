//! Discrete-event replay of per-UE file requests through an admission plan.
//!
//! Only admitted slices generate traffic. Every request draws a file from the
//! slice's Zipf popularity; ranks within the cached prefix are hits served
//! after the cached-hit delay, the rest are fetched over the satellite in one
//! round trip plus the transmission time at the slice's allocated rate. There
//! is no queueing: each slice's share of the link is a fluid pipe running at
//! its allocated rate whenever at least one transfer is in flight.
//!
//! Randomness comes from ChaCha8, one stream per slice, so a seed fixes the
//! whole event stream and sweep rows are independent.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AdmissionPlan, NetworkSlice, SatelliteProfile, GB, MBPS};
use crate::error::InvariantViolation;
use crate::optimizer::{self, cached_files, AdmissionProblem, OptimizerError, Popularity};

pub const RNG_ALGORITHM: &str = "ChaCha8Rng";
pub const DEFAULT_DURATION_S: f64 = 100.0;
pub const CSV_HEADER: &str =
    "cache_budget_bytes,approach,served_slices,mean_delay_s,satellite_utilization";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalProcess {
    /// Each UE requests every `1/λ` seconds; UEs of a slice are phase-shifted
    /// so the slice's aggregate stream is evenly spaced.
    Deterministic,
    /// Exponential inter-request gaps per UE.
    Poisson,
}

/// A complete, seedable experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub duration_s: f64,
    pub satellite: SatelliteProfile,
    pub cache_budget_bytes: u64,
    pub cached_hit_delay_s: f64,
    pub slices: Vec<NetworkSlice>,
    pub arrival_process: ArrivalProcess,
    pub sweep: Option<Vec<u64>>,
}

impl ScenarioSpec {
    /// The aircraft validation setup: 30 slices of 15 UEs, 2 files/s per UE,
    /// 0.2 MB files, 10000-file catalogs with uniform popularity, 1 s delay
    /// requirement, and a GEO link of 250 ms round trip and 112 Mbps.
    pub fn validation() -> Self {
        let slices = (0..30)
            .map(|i| NetworkSlice {
                slice_id: format!("slice-{i:02}"),
                ue_count: 15,
                per_ue_request_rate: 2.0,
                file_size_bytes: 200_000,
                catalog_size_files: 10_000,
                zipf_exponent: 0.0,
                delay_requirement_s: 1.0,
            })
            .collect();
        Self {
            seed: 1,
            duration_s: DEFAULT_DURATION_S,
            satellite: SatelliteProfile {
                round_trip_delay_s: 0.25,
                bandwidth_bps: 112.0 * MBPS,
            },
            cache_budget_bytes: 32 * GB,
            cached_hit_delay_s: 0.0,
            slices,
            arrival_process: ArrivalProcess::Deterministic,
            sweep: None,
        }
    }

    pub fn problem(&self) -> AdmissionProblem {
        AdmissionProblem {
            slices: self.slices.clone(),
            satellite: self.satellite,
            cache_budget_bytes: self.cache_budget_bytes,
            cached_hit_delay_s: self.cached_hit_delay_s,
        }
    }

    pub fn with_cache(&self, cache_budget_bytes: u64) -> Self {
        Self {
            cache_budget_bytes,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(InvariantViolation::new(
                "duration_s",
                "must be finite and > 0",
            ));
        }
        self.satellite.validate()?;
        if !(self.cached_hit_delay_s.is_finite() && self.cached_hit_delay_s >= 0.0) {
            return Err(InvariantViolation::new(
                "cached_hit_delay_s",
                "must be finite and >= 0",
            ));
        }
        let mut ids = BTreeSet::new();
        for s in &self.slices {
            s.validate()?;
            if !ids.insert(s.slice_id.as_str()) {
                return Err(InvariantViolation::new(
                    "slice_id",
                    format!("duplicate slice id `{}`", s.slice_id),
                ));
            }
        }
        if matches!(&self.sweep, Some(v) if v.is_empty()) {
            return Err(InvariantViolation::new(
                "sweep_cache_budget_bytes",
                "must not be empty",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceMetrics {
    pub slice_id: String,
    pub admitted: bool,
    pub cache_bytes: u64,
    pub allocated_rate_bps: f64,
    pub offered_requests: u64,
    pub hits: u64,
    pub misses: u64,
    pub mean_delay_s: f64,
    pub peak_satellite_rate_bps: f64,
    pub satellite_busy_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimMetrics {
    pub rng_algorithm: String,
    pub seed: u64,
    pub duration_s: f64,
    pub cache_budget_bytes: u64,
    pub analytical_objective: usize,
    pub served_slice_count: usize,
    pub mean_delay_s: f64,
    pub satellite_utilization: f64,
    pub slices: Vec<SliceMetrics>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(#[from] InvariantViolation),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Arrival {
    time: f64,
    slice: usize,
    ue: u32,
}

impl Eq for Arrival {}

// Reversed for a min-heap on time; ties go to the lower slice, then UE.
impl Ord for Arrival {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.slice.cmp(&self.slice))
            .then_with(|| other.ue.cmp(&self.ue))
    }
}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-slice state while the simulation runs.
struct Flow<'a> {
    slice: &'a NetworkSlice,
    popularity: Popularity,
    cached: u64,
    rate: f64,
    rng: ChaCha8Rng,
    gap: Option<Exp<f64>>,
    offered: u64,
    hits: u64,
    misses: u64,
    delay_sum: f64,
    busy: f64,
    busy_open: Option<(f64, f64)>,
}

impl Flow<'_> {
    fn record_transfer(&mut self, start: f64, end: f64, horizon: f64) {
        let (start, end) = (start.min(horizon), end.min(horizon));
        match &mut self.busy_open {
            Some((_, open_end)) if start <= *open_end => *open_end = open_end.max(end),
            _ => {
                self.close_busy();
                self.busy_open = Some((start, end));
            }
        }
    }

    fn close_busy(&mut self) {
        if let Some((s, e)) = self.busy_open.take() {
            self.busy += e - s;
        }
    }
}

/// Solves the scenario's admission problem and replays its traffic.
pub fn run(scenario: &ScenarioSpec) -> Result<SimMetrics, SimError> {
    scenario.validate()?;
    let plan = optimizer::solve(&scenario.problem())?;
    Ok(replay(scenario, &plan))
}

/// Replays the scenario's traffic through a given plan.
pub fn replay(scenario: &ScenarioSpec, plan: &AdmissionPlan) -> SimMetrics {
    let horizon = scenario.duration_s;
    let rtt = scenario.satellite.round_trip_delay_s;
    let mut flows: Vec<Option<Flow>> = Vec::with_capacity(scenario.slices.len());
    let mut queue = BinaryHeap::new();

    for (index, slice) in scenario.slices.iter().enumerate() {
        if !plan.served.contains(&slice.slice_id) {
            flows.push(None);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(index as u64);
        let lambda = slice.per_ue_request_rate;
        let gap = match scenario.arrival_process {
            ArrivalProcess::Poisson if lambda > 0.0 => {
                Some(Exp::new(lambda).expect("positive rate"))
            }
            _ => None,
        };
        let mut flow = Flow {
            slice,
            popularity: Popularity::for_slice(slice),
            cached: cached_files(
                plan.cache_alloc.get(&slice.slice_id).copied().unwrap_or(0),
                slice,
            ),
            rate: plan.rate_alloc.get(&slice.slice_id).copied().unwrap_or(0.0),
            rng,
            gap,
            offered: 0,
            hits: 0,
            misses: 0,
            delay_sum: 0.0,
            busy: 0.0,
            busy_open: None,
        };
        if lambda > 0.0 {
            for ue in 0..slice.ue_count {
                let first = match &flow.gap {
                    Some(exp) => exp.sample(&mut flow.rng),
                    None => ue as f64 / (slice.ue_count as f64 * lambda),
                };
                if first < horizon {
                    queue.push(Arrival {
                        time: first,
                        slice: index,
                        ue,
                    });
                }
            }
        }
        flows.push(Some(flow));
    }

    while let Some(Arrival { time, slice, ue }) = queue.pop() {
        let flow = flows[slice]
            .as_mut()
            .expect("arrivals only for admitted slices");
        flow.offered += 1;
        let rank = flow.popularity.rank_for(flow.rng.random::<f64>());
        if rank <= flow.cached {
            flow.hits += 1;
            flow.delay_sum += scenario.cached_hit_delay_s;
        } else {
            flow.misses += 1;
            let transmit = flow.slice.file_bits() / flow.rate;
            flow.delay_sum += rtt + transmit;
            flow.record_transfer(time + rtt, time + rtt + transmit, horizon);
        }
        let next = time
            + match &flow.gap {
                Some(exp) => exp.sample(&mut flow.rng),
                None => 1.0 / flow.slice.per_ue_request_rate,
            };
        if next < horizon {
            queue.push(Arrival {
                time: next,
                slice,
                ue,
            });
        }
    }

    let mut slices = Vec::with_capacity(flows.len());
    let (mut served, mut offered_total, mut delay_total, mut link_bits) = (0, 0u64, 0.0, 0.0);
    for (slice, flow) in scenario.slices.iter().zip(flows) {
        let Some(mut flow) = flow else {
            slices.push(SliceMetrics {
                slice_id: slice.slice_id.clone(),
                admitted: false,
                cache_bytes: 0,
                allocated_rate_bps: 0.0,
                offered_requests: 0,
                hits: 0,
                misses: 0,
                mean_delay_s: 0.0,
                peak_satellite_rate_bps: 0.0,
                satellite_busy_s: 0.0,
            });
            continue;
        };
        flow.close_busy();
        let mean = if flow.offered > 0 {
            flow.delay_sum / flow.offered as f64
        } else {
            0.0
        };
        if mean <= slice.delay_requirement_s {
            served += 1;
        }
        offered_total += flow.offered;
        delay_total += flow.delay_sum;
        link_bits += flow.rate * flow.busy;
        slices.push(SliceMetrics {
            slice_id: slice.slice_id.clone(),
            admitted: true,
            cache_bytes: plan.cache_alloc.get(&slice.slice_id).copied().unwrap_or(0),
            allocated_rate_bps: flow.rate,
            offered_requests: flow.offered,
            hits: flow.hits,
            misses: flow.misses,
            mean_delay_s: mean,
            peak_satellite_rate_bps: if flow.busy > 0.0 { flow.rate } else { 0.0 },
            satellite_busy_s: flow.busy,
        });
    }

    let capacity_bits = scenario.satellite.bandwidth_bps * horizon;
    SimMetrics {
        rng_algorithm: RNG_ALGORITHM.into(),
        seed: scenario.seed,
        duration_s: horizon,
        cache_budget_bytes: scenario.cache_budget_bytes,
        analytical_objective: plan.objective,
        served_slice_count: served,
        mean_delay_s: if offered_total > 0 {
            delay_total / offered_total as f64
        } else {
            0.0
        },
        satellite_utilization: if capacity_bits > 0.0 {
            link_bits / capacity_bits
        } else {
            0.0
        },
        slices,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// Cache plus satellite.
    Aec,
    /// Satellite only.
    Baseline,
}

impl Approach {
    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Aec => "aec",
            Approach::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cache_budget_bytes: u64,
    pub approach: Approach,
    pub analytical_objective: usize,
    pub simulated_served: usize,
    pub mean_delay_s: f64,
    pub satellite_utilization: f64,
}

/// One AEC row and one baseline row per cache budget, in input order.
pub fn sweep(scenario: &ScenarioSpec, cache_budgets: &[u64]) -> Result<Vec<SweepRow>, SimError> {
    if cache_budgets.is_empty() {
        return Err(
            InvariantViolation::new("sweep_cache_budget_bytes", "must not be empty").into(),
        );
    }
    scenario.validate()?;
    let rows: Vec<Result<[SweepRow; 2], SimError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cache_budgets
            .iter()
            .map(|&cache| scope.spawn(move || sweep_point(scenario, cache)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(2 * rows.len());
    for pair in rows {
        out.extend(pair?);
    }
    Ok(out)
}

fn sweep_point(scenario: &ScenarioSpec, cache: u64) -> Result<[SweepRow; 2], SimError> {
    let aec = run(&scenario.with_cache(cache))?;
    let problem = scenario.with_cache(cache).problem().baseline();
    let baseline_plan = optimizer::solve(&problem)?;
    let baseline = replay(&scenario.with_cache(0), &baseline_plan);
    let row = |approach, m: SimMetrics| SweepRow {
        cache_budget_bytes: cache,
        approach,
        analytical_objective: m.analytical_objective,
        simulated_served: m.served_slice_count,
        mean_delay_s: m.mean_delay_s,
        satellite_utilization: m.satellite_utilization,
    };
    Ok([row(Approach::Aec, aec), row(Approach::Baseline, baseline)])
}

/// Sweep for the scenario's own list of cache budgets.
pub fn sweep_scenario(scenario: &ScenarioSpec) -> Result<Vec<SweepRow>, SimError> {
    let budgets = scenario.sweep.as_deref().ok_or_else(|| {
        InvariantViolation::new("sweep_cache_budget_bytes", "scenario has no sweep")
    })?;
    sweep(scenario, budgets)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.cache_budget_bytes,
            r.approach.as_str(),
            r.simulated_served,
            r.mean_delay_s,
            r.satellite_utilization
        )
        .expect("writing to a String cannot fail");
    }
    out
}

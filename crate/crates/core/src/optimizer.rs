//! Slice admission: choose which slices to serve and split the on-board cache
//! and the satellite bandwidth between them so that the number of served
//! slices is maximal.
//!
//! Traffic is fluid and deterministic. A request for a cached file is answered
//! locally after `cached_hit_delay_s`; a miss costs one satellite round trip
//! plus the file's transmission time at the slice's allocated rate. A slice is
//! served when its miss traffic fits in its rate and its mean delay meets the
//! slice requirement.
//!
//! For a fixed subset of slices the cache is water-filled one file at a time
//! toward the slice whose minimum required rate drops the most per byte.
//! Slices of different file sizes are balanced by a knapsack over cache units,
//! with a greedy and single-file swap fallback when that table would be too
//! large. [`solve`] searches over subsets
//! using the fact that slices with identical parameters are interchangeable;
//! [`solve_brute_force`] enumerates every subset and serves as its oracle.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::domain::{AdmissionPlan, NetworkSlice, SatelliteProfile};
use crate::error::InvariantViolation;

/// Largest instance accepted by [`solve_brute_force`].
pub const BRUTE_FORCE_LIMIT: usize = 12;

const REFINEMENT_ROUNDS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionProblem {
    pub slices: Vec<NetworkSlice>,
    pub satellite: SatelliteProfile,
    pub cache_budget_bytes: u64,
    pub cached_hit_delay_s: f64,
}

impl AdmissionProblem {
    pub fn new(
        slices: Vec<NetworkSlice>,
        satellite: SatelliteProfile,
        cache_budget_bytes: u64,
    ) -> Self {
        Self {
            slices,
            satellite,
            cache_budget_bytes,
            cached_hit_delay_s: 0.0,
        }
    }

    /// The same problem with the cache taken away: satellite-only admission.
    pub fn baseline(&self) -> Self {
        Self {
            cache_budget_bytes: 0,
            ..self.clone()
        }
    }

    pub fn delay_model(&self) -> DelayModel {
        DelayModel {
            round_trip_delay_s: self.satellite.round_trip_delay_s,
            cached_hit_delay_s: self.cached_hit_delay_s,
        }
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        self.satellite.validate()?;
        if !(self.cached_hit_delay_s.is_finite() && self.cached_hit_delay_s >= 0.0) {
            return Err(
                InvariantViolation::new("cached_hit_delay_s", "must be finite and >= 0").into(),
            );
        }
        let mut ids = std::collections::BTreeSet::new();
        for s in &self.slices {
            s.validate()?;
            if !ids.insert(s.slice_id.as_str()) {
                return Err(OptimizerError::DuplicateSlice(s.slice_id.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Invalid(#[from] InvariantViolation),
    #[error("slice id `{0}` appears more than once")]
    DuplicateSlice(String),
    #[error("unknown slice `{0}`")]
    UnknownSlice(String),
    #[error("brute force limited to {limit} slices, got {got}")]
    ProblemTooLarge { got: usize, limit: usize },
    #[error("delay undefined: misses occur but the satellite rate is zero")]
    UndefinedDelay,
}

/// Delay parameters shared by every slice of a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    pub round_trip_delay_s: f64,
    pub cached_hit_delay_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBreakdown {
    pub hit_delay_s: f64,
    /// Infinite when the rate is zero; only meaningful if misses occur.
    pub miss_delay_s: f64,
    pub mean_delay_s: f64,
}

/// Zipf popularity of one catalog, with cumulative sums for `alpha > 0`.
#[derive(Debug, Clone)]
pub struct Popularity {
    catalog_size: u64,
    /// `cumulative[m]` = probability mass of the `m` most popular files.
    cumulative: Option<Vec<f64>>,
}

impl Popularity {
    pub fn new(catalog_size: u64, zipf_exponent: f64) -> Self {
        if zipf_exponent == 0.0 {
            return Self {
                catalog_size,
                cumulative: None,
            };
        }
        let weights: Vec<f64> = (1..=catalog_size)
            .map(|i| (i as f64).powf(-zipf_exponent))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut cumulative = Vec::with_capacity(weights.len() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc / total);
        }
        Self {
            catalog_size,
            cumulative: Some(cumulative),
        }
    }

    pub fn for_slice(slice: &NetworkSlice) -> Self {
        Self::new(slice.catalog_size_files, slice.zipf_exponent)
    }

    pub fn catalog_size(&self) -> u64 {
        self.catalog_size
    }

    pub fn is_uniform(&self) -> bool {
        self.cumulative.is_none()
    }

    /// Probability mass of the `files` most popular files.
    pub fn mass_of_top(&self, files: u64) -> f64 {
        let m = files.min(self.catalog_size);
        match &self.cumulative {
            None => m as f64 / self.catalog_size as f64,
            Some(c) => c[m as usize],
        }
    }

    /// Probability of the file with 1-based popularity rank `rank`.
    pub fn probability(&self, rank: u64) -> f64 {
        if rank == 0 || rank > self.catalog_size {
            return 0.0;
        }
        match &self.cumulative {
            None => 1.0 / self.catalog_size as f64,
            Some(c) => c[rank as usize] - c[rank as usize - 1],
        }
    }

    /// Maps a uniform draw in `[0, 1)` to a 1-based file rank.
    pub fn rank_for(&self, u: f64) -> u64 {
        match &self.cumulative {
            None => ((u * self.catalog_size as f64) as u64).min(self.catalog_size - 1) + 1,
            Some(c) => {
                // First rank whose cumulative mass exceeds u.
                let idx = c[1..].partition_point(|&p| p <= u);
                (idx as u64 + 1).min(self.catalog_size)
            }
        }
    }
}

/// Whole files of `slice` that fit in `cache_bytes`.
pub fn cached_files(cache_bytes: u64, slice: &NetworkSlice) -> u64 {
    cache_bytes.min(slice.catalog_bytes()) / slice.file_size_bytes
}

/// Fraction of requests answered from a cache of `cache_bytes` holding the
/// most popular files of the slice's catalog.
pub fn hit_ratio(cache_bytes: u64, slice: &NetworkSlice) -> f64 {
    Popularity::for_slice(slice).mass_of_top(cached_files(cache_bytes, slice))
}

fn mean_delay(hit: f64, rate: f64, bits: f64, model: &DelayModel) -> f64 {
    if hit >= 1.0 {
        return model.cached_hit_delay_s;
    }
    let miss = model.round_trip_delay_s + bits / rate;
    hit * model.cached_hit_delay_s + (1.0 - hit) * miss
}

pub fn per_request_delay(
    slice: &NetworkSlice,
    cache_bytes: u64,
    rate_bps: f64,
    model: &DelayModel,
) -> Result<DelayBreakdown, OptimizerError> {
    delay_at_hit(slice, hit_ratio(cache_bytes, slice), rate_bps, model)
}

fn delay_at_hit(
    slice: &NetworkSlice,
    hit: f64,
    rate_bps: f64,
    model: &DelayModel,
) -> Result<DelayBreakdown, OptimizerError> {
    if hit < 1.0 && rate_bps <= 0.0 {
        return Err(OptimizerError::UndefinedDelay);
    }
    let miss_delay_s = if rate_bps > 0.0 {
        model.round_trip_delay_s + slice.file_bits() / rate_bps
    } else {
        f64::INFINITY
    };
    Ok(DelayBreakdown {
        hit_delay_s: model.cached_hit_delay_s,
        miss_delay_s,
        mean_delay_s: mean_delay(hit, rate_bps, slice.file_bits(), model),
    })
}

/// Serving predicate at a known hit ratio.
///
/// A slice without demand issues no requests and is trivially served.
fn served_at_hit(
    slice: &NetworkSlice,
    demand: f64,
    hit: f64,
    rate: f64,
    model: &DelayModel,
) -> bool {
    if demand == 0.0 {
        return true;
    }
    if hit >= 1.0 {
        return model.cached_hit_delay_s <= slice.delay_requirement_s;
    }
    rate > 0.0
        && rate >= (1.0 - hit) * demand
        && mean_delay(hit, rate, slice.file_bits(), model) <= slice.delay_requirement_s
}

pub fn is_served(
    slice: &NetworkSlice,
    cache_bytes: u64,
    rate_bps: f64,
    model: &DelayModel,
) -> bool {
    served_at_hit(
        slice,
        slice.aggregate_demand(),
        hit_ratio(cache_bytes, slice),
        rate_bps,
        model,
    )
}

/// Per-slice precomputation used by the feasibility routine.
#[derive(Debug, Clone)]
struct SliceModel {
    slice: NetworkSlice,
    popularity: Popularity,
    demand: f64,
    model: DelayModel,
}

impl SliceModel {
    fn new(slice: &NetworkSlice, model: DelayModel) -> Self {
        Self {
            popularity: Popularity::for_slice(slice),
            demand: slice.aggregate_demand(),
            slice: slice.clone(),
            model,
        }
    }

    fn max_files(&self) -> u64 {
        self.slice.catalog_size_files
    }

    fn hit(&self, files: u64) -> f64 {
        self.popularity.mass_of_top(files)
    }

    /// Rate the slice needs when it satisfies only the stability constraint.
    fn stability_rate(&self, files: u64) -> f64 {
        (1.0 - self.hit(files)) * self.demand
    }

    /// Smallest rate at which the slice is served with `files` cached, or
    /// infinity if no rate works.
    fn min_rate(&self, files: u64) -> f64 {
        if self.demand == 0.0 {
            return 0.0;
        }
        let hit = self.hit(files);
        if hit >= 1.0 {
            return if self.model.cached_hit_delay_s <= self.slice.delay_requirement_s {
                0.0
            } else {
                f64::INFINITY
            };
        }
        let miss = 1.0 - hit;
        let slack = self.slice.delay_requirement_s
            - hit * self.model.cached_hit_delay_s
            - miss * self.model.round_trip_delay_s;
        if slack <= 0.0 {
            return f64::INFINITY;
        }
        let mut rate = (miss * self.demand).max(miss * self.slice.file_bits() / slack);
        // The closed form can land a few ulps short of the predicate.
        for _ in 0..64 {
            if served_at_hit(&self.slice, self.demand, hit, rate, &self.model) {
                return rate;
            }
            rate = rate.next_up();
        }
        f64::INFINITY
    }

    fn stability_binds(&self, files: u64) -> bool {
        self.min_rate(files) == self.stability_rate(files)
    }

    /// Priority (rate saved per byte) and length of the next run of files
    /// that all save the same amount, starting from `files` cached.
    fn next_run(&self, files: u64) -> Option<(f64, u64)> {
        let k = self.max_files();
        if files >= k || self.demand == 0.0 {
            return None;
        }
        let bytes = self.slice.file_size_bytes as f64;
        let here = self.min_rate(files);
        if here.is_infinite() {
            // Cache is what makes this slice servable at all: take it up to
            // the first file count with a finite rate.
            let first_finite =
                first_true(files + 1, k, |m| self.min_rate(m).is_finite()).unwrap_or(k);
            return Some((f64::INFINITY, first_finite - files));
        }
        if self.popularity.is_uniform() && self.stability_binds(files) {
            let last = last_true_from(files, k, |m| self.stability_binds(m));
            if last > files {
                let per_file = self.demand / self.popularity.catalog_size() as f64;
                return Some((per_file / bytes, last - files));
            }
        }
        let saving = here - self.min_rate(files + 1);
        if saving > 0.0 {
            Some((saving / bytes, 1))
        } else {
            None
        }
    }
}

/// Smallest `m` in `[lo, hi]` with `pred(m)`, assuming `pred` is monotone false→true.
fn first_true(lo: u64, hi: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    if lo > hi || !pred(hi) {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    while a < b {
        let mid = a + (b - a) / 2;
        if pred(mid) {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    Some(a)
}

/// Largest `m` in `[lo, hi]` such that `pred` holds on all of `[lo, m]`,
/// assuming `pred(lo)` and a true→false monotone shape.
fn last_true_from(lo: u64, hi: u64, pred: impl Fn(u64) -> bool) -> u64 {
    let (mut a, mut b) = (lo, hi);
    while a < b {
        let mid = a + (b - a).div_ceil(2);
        if pred(mid) {
            a = mid;
        } else {
            b = mid - 1;
        }
    }
    a
}

type ParamKey = (u64, u64, u32, u64, u64, u64);

/// Orders slices by traffic parameters only, so interchangeable slices sort
/// together and feasibility never depends on slice names.
fn param_key(s: &NetworkSlice) -> ParamKey {
    (
        s.file_size_bytes,
        s.catalog_size_files,
        s.ue_count,
        s.per_ue_request_rate.to_bits(),
        s.zipf_exponent.to_bits(),
        s.delay_requirement_s.to_bits(),
    )
}

/// Allocations certifying that a subset of slices can be served together.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetAllocation {
    pub cache_alloc: BTreeMap<String, u64>,
    pub rate_alloc: BTreeMap<String, f64>,
    pub total_rate: f64,
}

/// A problem with per-slice models built once.
struct Prepared<'a> {
    problem: &'a AdmissionProblem,
    models: Vec<SliceModel>,
}

#[derive(Debug, PartialEq)]
struct HeapItem {
    priority: f64,
    position: usize,
    run: u64,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.position.cmp(&self.position))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Prepared<'a> {
    fn new(problem: &'a AdmissionProblem) -> Self {
        let model = problem.delay_model();
        Self {
            problem,
            models: problem
                .slices
                .iter()
                .map(|s| SliceModel::new(s, model))
                .collect(),
        }
    }

    /// Best-case rate of one slice: alone, with the whole cache.
    fn lower_bound(&self, idx: usize) -> f64 {
        let m = &self.models[idx];
        // With hits slower than a round trip, more cache can raise the rate.
        if m.model.cached_hit_delay_s > m.model.round_trip_delay_s {
            return 0.0;
        }
        let files = m
            .max_files()
            .min(self.problem.cache_budget_bytes / m.slice.file_size_bytes);
        m.min_rate(files)
    }

    fn feasible(&self, subset: &[usize]) -> Option<SubsetAllocation> {
        let mut order: Vec<usize> = subset.to_vec();
        order.sort_by(|&a, &b| {
            let (sa, sb) = (&self.models[a].slice, &self.models[b].slice);
            param_key(sa)
                .cmp(&param_key(sb))
                .then_with(|| sa.slice_id.cmp(&sb.slice_id))
        });
        let models: Vec<&SliceModel> = order.iter().map(|&i| &self.models[i]).collect();
        let files = self.allocate(&models);

        let rates: Vec<f64> = models
            .iter()
            .zip(&files)
            .map(|(m, &f)| m.min_rate(f))
            .collect();
        if rates.iter().any(|r| r.is_infinite()) {
            return None;
        }
        let total_rate: f64 = rates.iter().fold(0.0, |a, b| a + b);
        if total_rate > self.problem.satellite.bandwidth_bps {
            return None;
        }
        let mut cache_alloc = BTreeMap::new();
        let mut rate_alloc = BTreeMap::new();
        for ((m, &f), &r) in models.iter().zip(&files).zip(&rates) {
            let bytes = f * m.slice.file_size_bytes;
            if !is_served(&m.slice, bytes, r, &m.model) {
                return None;
            }
            cache_alloc.insert(m.slice.slice_id.clone(), bytes);
            rate_alloc.insert(m.slice.slice_id.clone(), r);
        }
        Some(SubsetAllocation {
            cache_alloc,
            rate_alloc,
            total_rate,
        })
    }

    /// Files cached per slice, minimising the summed minimum rate.
    ///
    /// While hits are no slower than a round trip, each slice's minimum rate
    /// is convex in its cached file count, so among slices sharing a file
    /// size the greedy order is optimal at every budget. Groups of different
    /// file sizes are then combined by an exact knapsack over cache units.
    fn allocate(&self, models: &[&SliceModel]) -> Vec<u64> {
        let budget = self.problem.cache_budget_bytes;
        let model = self.problem.delay_model();
        let convex = model.cached_hit_delay_s <= model.round_trip_delay_s;
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (position, m) in models.iter().enumerate() {
            match groups.last_mut() {
                Some(g)
                    if convex && models[g[0]].slice.file_size_bytes == m.slice.file_size_bytes =>
                {
                    g.push(position)
                }
                _ => groups.push(vec![position]),
            }
        }
        if convex && groups.len() <= 1 {
            let all: Vec<usize> = (0..models.len()).collect();
            return greedy(models, &all, budget).0;
        }
        match knapsack(models, &groups, budget, convex) {
            Some(files) => files,
            None => {
                let all: Vec<usize> = (0..models.len()).collect();
                let (mut files, left) = greedy(models, &all, budget);
                refine(models, &mut files, left);
                files
            }
        }
    }

    fn plan(&self, alloc: SubsetAllocation) -> AdmissionPlan {
        AdmissionPlan {
            served: alloc.cache_alloc.keys().cloned().collect(),
            objective: alloc.cache_alloc.len(),
            cache_alloc: alloc.cache_alloc,
            rate_alloc: alloc.rate_alloc,
        }
    }
}

/// Water-fills `budget` bytes over the slices at `positions`, largest rate
/// saving per byte first. Returns the files per slice (indexed like
/// `models`) and the unused bytes.
fn greedy(models: &[&SliceModel], positions: &[usize], mut budget: u64) -> (Vec<u64>, u64) {
    let mut files = vec![0u64; models.len()];
    let mut heap = BinaryHeap::new();
    for &position in positions {
        if let Some((priority, run)) = models[position].next_run(0) {
            heap.push(HeapItem {
                priority,
                position,
                run,
            });
        }
    }
    while let Some(HeapItem { position, run, .. }) = heap.pop() {
        let m = models[position];
        let size = m.slice.file_size_bytes;
        let grant = run.min(budget / size);
        if grant == 0 {
            continue;
        }
        files[position] += grant;
        budget -= grant * size;
        if let Some((priority, run)) = m.next_run(files[position]) {
            heap.push(HeapItem {
                priority,
                position,
                run,
            });
        }
    }
    (files, budget)
}

/// Upper bound on knapsack table updates before falling back to the greedy.
const KNAPSACK_WORK_LIMIT: u64 = 20_000_000;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact split of the cache between groups of slices, each group described
/// by its best summed rate for every file count. `None` when the table would
/// be too large.
fn knapsack(
    models: &[&SliceModel],
    groups: &[Vec<usize>],
    budget: u64,
    convex: bool,
) -> Option<Vec<u64>> {
    let sizes: Vec<u64> = groups
        .iter()
        .map(|g| models[g[0]].slice.file_size_bytes)
        .collect();
    let caps: Vec<u64> = groups
        .iter()
        .zip(&sizes)
        .map(|(g, &s)| {
            let catalog: u64 = g.iter().map(|&p| models[p].max_files()).sum();
            catalog.min(budget / s)
        })
        .collect();
    let unit = sizes.iter().fold(0, |a, &s| gcd(a, s));
    let used: u64 = caps.iter().zip(&sizes).map(|(&n, &s)| n * s).sum();
    let units = budget.min(used) / unit;
    let work = caps.iter().try_fold(0u64, |acc, &n| {
        acc.checked_add((units + 1).checked_mul(n + 1)?)
    })?;
    if work > KNAPSACK_WORK_LIMIT {
        return None;
    }

    // Per group: the summed rate after each added file, and for convex groups
    // the order in which files go to members.
    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(groups.len());
    let mut traces: Vec<Vec<usize>> = Vec::with_capacity(groups.len());
    for (g, &cap) in groups.iter().zip(&caps) {
        if !convex {
            let m = models[g[0]];
            curves.push((0..=cap).map(|f| m.min_rate(f)).collect());
            traces.push(Vec::new());
            continue;
        }
        let trace = greedy_trace(models, g, cap);
        let mut files = vec![0u64; models.len()];
        let total = |files: &[u64]| {
            g.iter()
                .map(|&p| models[p].min_rate(files[p]))
                .fold(0.0, |a, b| a + b)
        };
        let mut curve = vec![total(&files)];
        for &p in &trace {
            files[p] += 1;
            curve.push(total(&files));
        }
        curves.push(curve);
        traces.push(trace);
    }

    let mut best = vec![0.0f64; units as usize + 1];
    let mut choices: Vec<Vec<u32>> = Vec::with_capacity(groups.len());
    for (curve, &size) in curves.iter().zip(&sizes) {
        let step = (size / unit) as usize;
        let mut next = vec![f64::INFINITY; best.len()];
        let mut choice = vec![0u32; best.len()];
        for u in 0..best.len() {
            let most = (curve.len() - 1).min(u / step);
            for (n, &c) in curve.iter().enumerate().take(most + 1) {
                let v = best[u - n * step] + c;
                if v < next[u] {
                    next[u] = v;
                    choice[u] = n as u32;
                }
            }
        }
        best = next;
        choices.push(choice);
    }

    let mut files = vec![0u64; models.len()];
    let mut u = units as usize;
    for (g, ((choice, trace), &size)) in groups
        .iter()
        .zip(choices.iter().zip(&traces).zip(&sizes))
        .rev()
    {
        let n = choice[u] as usize;
        u -= n * (size / unit) as usize;
        if convex {
            for &p in &trace[..n] {
                files[p] += 1;
            }
        } else {
            files[g[0]] = n as u64;
        }
    }
    Some(files)
}

/// The greedy's file-by-file placement over one group, up to `cap` files.
fn greedy_trace(models: &[&SliceModel], positions: &[usize], cap: u64) -> Vec<usize> {
    let mut files = vec![0u64; models.len()];
    let mut trace = Vec::new();
    let mut heap = BinaryHeap::new();
    for &position in positions {
        if let Some((priority, run)) = models[position].next_run(0) {
            heap.push(HeapItem {
                priority,
                position,
                run,
            });
        }
    }
    while let Some(HeapItem { position, run, .. }) = heap.pop() {
        let grant = run.min(cap - trace.len() as u64);
        if grant == 0 {
            break;
        }
        files[position] += grant;
        trace.extend(std::iter::repeat_n(position, grant as usize));
        if let Some((priority, run)) = models[position].next_run(files[position]) {
            heap.push(HeapItem {
                priority,
                position,
                run,
            });
        }
    }
    trace
}

/// Single-file swaps between slices while any swap lowers the total rate.
fn refine(models: &[&SliceModel], files: &mut [u64], mut budget: u64) {
    for _ in 0..REFINEMENT_ROUNDS {
        let mut best: Option<(f64, usize, usize, u64)> = None;
        for (a, ma) in models.iter().enumerate() {
            if files[a] == 0 {
                continue;
            }
            let loss = ma.min_rate(files[a] - 1) - ma.min_rate(files[a]);
            if !loss.is_finite() {
                continue;
            }
            let freed = budget + ma.slice.file_size_bytes;
            for (b, mb) in models.iter().enumerate() {
                if a == b || files[b] >= mb.max_files() {
                    continue;
                }
                let add = (mb.max_files() - files[b]).min(freed / mb.slice.file_size_bytes);
                if add == 0 {
                    continue;
                }
                let gain = mb.min_rate(files[b]) - mb.min_rate(files[b] + add);
                let delta = gain - loss;
                if delta.is_nan() {
                    continue;
                }
                let tol = 1e-9 * gain.abs().max(loss.abs()).max(1.0);
                if delta > tol && best.is_none_or(|(d, ..)| delta > d) {
                    best = Some((delta, a, b, add));
                }
            }
        }
        let Some((_, a, b, add)) = best else { return };
        files[a] -= 1;
        budget += models[a].slice.file_size_bytes;
        files[b] += add;
        budget -= add * models[b].slice.file_size_bytes;
    }
}

/// `true` if `(rate_a, ids_a)` beats `(rate_b, ids_b)`: lower total rate,
/// then lexicographically smaller sorted id list.
fn better(rate_a: f64, ids_a: &[&str], rate_b: f64, ids_b: &[&str]) -> bool {
    let tol = 1e-9 * rate_a.abs().max(rate_b.abs()).max(1.0);
    if rate_a < rate_b - tol {
        true
    } else if rate_a > rate_b + tol {
        false
    } else {
        ids_a < ids_b
    }
}

struct Best<'a> {
    ids: Vec<&'a str>,
    alloc: SubsetAllocation,
}

impl<'a> Best<'a> {
    fn offer(slot: &mut Option<Best<'a>>, ids: Vec<&'a str>, alloc: SubsetAllocation) {
        let replace = match slot {
            None => true,
            Some(b) => better(alloc.total_rate, &ids, b.alloc.total_rate, &b.ids),
        };
        if replace {
            *slot = Some(Best { ids, alloc });
        }
    }
}

fn sorted_ids<'a>(prepared: &'a Prepared<'_>, subset: &[usize]) -> Vec<&'a str> {
    let mut ids: Vec<&str> = subset
        .iter()
        .map(|&i| prepared.models[i].slice.slice_id.as_str())
        .collect();
    ids.sort_unstable();
    ids
}

/// Cache and rate allocation for serving exactly `subset`, if one exists.
pub fn subset_feasible(
    problem: &AdmissionProblem,
    subset: &[&str],
) -> Result<Option<SubsetAllocation>, OptimizerError> {
    problem.validate()?;
    let mut indices = Vec::with_capacity(subset.len());
    for id in subset {
        let idx = problem
            .slices
            .iter()
            .position(|s| s.slice_id == *id)
            .ok_or_else(|| OptimizerError::UnknownSlice((*id).to_owned()))?;
        if indices.contains(&idx) {
            return Err(OptimizerError::DuplicateSlice((*id).to_owned()));
        }
        indices.push(idx);
    }
    Ok(Prepared::new(problem).feasible(&indices))
}

/// Maximum-admission plan. Ties go to the lowest total satellite rate, then to
/// the lexicographically smallest set of slice ids.
pub fn solve(problem: &AdmissionProblem) -> Result<AdmissionPlan, OptimizerError> {
    problem.validate()?;
    if problem.slices.is_empty() {
        return Ok(AdmissionPlan::empty());
    }
    let prepared = Prepared::new(problem);

    // Interchangeable slices form one class; members are listed by id.
    let mut classes: BTreeMap<ParamKey, Vec<usize>> = BTreeMap::new();
    for (i, s) in problem.slices.iter().enumerate() {
        classes.entry(param_key(s)).or_default().push(i);
    }
    let classes: Vec<(Vec<usize>, f64)> = classes
        .into_values()
        .map(|mut members| {
            members.sort_by(|&a, &b| problem.slices[a].slice_id.cmp(&problem.slices[b].slice_id));
            let bound = prepared.lower_bound(members[0]);
            (members, bound)
        })
        .collect();

    let bandwidth = problem.satellite.bandwidth_bps;
    for target in (0..=problem.slices.len()).rev() {
        let mut best: Option<Best> = None;
        let mut counts = vec![0usize; classes.len()];
        search_counts(
            &classes,
            0,
            target,
            0.0,
            bandwidth,
            &mut counts,
            &mut |counts| {
                let subset: Vec<usize> = classes
                    .iter()
                    .zip(counts)
                    .flat_map(|((members, _), &n)| members[..n].iter().copied())
                    .collect();
                if let Some(alloc) = prepared.feasible(&subset) {
                    Best::offer(&mut best, sorted_ids(&prepared, &subset), alloc);
                }
            },
        );
        if let Some(b) = best {
            return Ok(prepared.plan(b.alloc));
        }
    }
    unreachable!("the empty subset is always feasible")
}

/// Enumerates per-class counts summing to `remaining`, pruning branches whose
/// summed best-case rates already exceed the bandwidth.
fn search_counts(
    classes: &[(Vec<usize>, f64)],
    class: usize,
    remaining: usize,
    bound: f64,
    bandwidth: f64,
    counts: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if class == classes.len() {
        if remaining == 0 {
            visit(counts);
        }
        return;
    }
    let rest = &classes[class + 1..];
    let capacity_after: usize = rest.iter().map(|(m, _)| m.len()).sum();
    let cheapest_after = rest.iter().map(|(_, b)| *b).fold(f64::INFINITY, f64::min);
    let (members, per_slice) = &classes[class];
    let lo = remaining.saturating_sub(capacity_after);
    let hi = remaining.min(members.len());
    let limit = bandwidth * (1.0 + 1e-9);
    for n in (lo..=hi).rev() {
        let b = if n == 0 {
            bound
        } else {
            bound + n as f64 * per_slice
        };
        let left = remaining - n;
        let lookahead = if left == 0 {
            b
        } else {
            b + left as f64 * cheapest_after
        };
        if b > limit || lookahead > limit {
            continue;
        }
        counts[class] = n;
        search_counts(
            classes,
            class + 1,
            remaining - n,
            b,
            bandwidth,
            counts,
            visit,
        );
    }
    counts[class] = 0;
}

/// Exhaustive oracle: every subset, largest first, same tie-breaking as [`solve`].
pub fn solve_brute_force(problem: &AdmissionProblem) -> Result<AdmissionPlan, OptimizerError> {
    let n = problem.slices.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(OptimizerError::ProblemTooLarge {
            got: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    problem.validate()?;
    let prepared = Prepared::new(problem);
    let mut by_id: Vec<usize> = (0..n).collect();
    by_id.sort_by(|&a, &b| problem.slices[a].slice_id.cmp(&problem.slices[b].slice_id));

    for size in (0..=n).rev() {
        let mut best: Option<Best> = None;
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let subset: Vec<usize> = (0..n)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| by_id[b])
                .collect();
            if let Some(alloc) = prepared.feasible(&subset) {
                Best::offer(&mut best, sorted_ids(&prepared, &subset), alloc);
            }
        }
        if let Some(b) = best {
            return Ok(prepared.plan(b.alloc));
        }
    }
    unreachable!("the empty subset is always feasible")
}

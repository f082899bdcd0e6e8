//! Seeded Monte Carlo realization of scenario outcomes.
//!
//! Outcomes are independent Bernoulli draws unless they share an exclusive
//! group, in which case one categorical draw realizes at most one member.
//! A realized outcome costs its effective magnitude (see
//! [`risk::effective_magnitude`]), so the expected episode cost equals the
//! analytic cumulative penalty.
//!
//! Episode `i` draws from its own ChaCha8 stream `i` under the run seed, and
//! episodes are aggregated in fixed-size chunks merged in chunk order. The
//! estimate is therefore bit-identical for any number of worker threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::risk::{self, effective_magnitude};
use crate::scalar::Scalar;
use crate::scenario::{ActionAlternative, Scenario};
use crate::valuation;

/// Episodes per aggregation chunk.
pub const DEFAULT_CHUNK_SIZE: usize = 8192;

/// Consistency threshold on `|z|`.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationEstimate<T> {
    pub n: u64,
    pub mean: T,
    pub stderr: T,
    pub ci95: [T; 2],
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationOptions {
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
    pub chunk_size: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            workers: None,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

impl SimulationOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers: Some(workers),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode<T> {
    /// Indices into the action's outcome list, ascending.
    pub realized: Vec<usize>,
    pub cost: T,
}

/// Random stream of episode `index` under `seed`.
pub fn episode_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw plan for one action: independent outcomes and exclusive groups.
struct Plan {
    independent: Vec<(usize, f64)>,
    groups: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
}

impl Plan {
    fn new<T: Scalar>(action: &ActionAlternative<T>) -> Self {
        let mut independent = Vec::new();
        let mut group_index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut groups: Vec<Vec<(usize, f64)>> = Vec::new();
        for (i, o) in action.outcomes.iter().enumerate() {
            let p = o.probability.value().as_f64();
            match o.exclusive_group.as_deref() {
                None => independent.push((i, p)),
                Some(g) => {
                    let slot = *group_index.entry(g).or_insert_with(|| {
                        groups.push(Vec::new());
                        groups.len() - 1
                    });
                    groups[slot].push((i, p));
                }
            }
        }
        let cost = action
            .outcomes
            .iter()
            .map(|o| effective_magnitude(o).as_f64())
            .collect();
        Self {
            independent,
            groups,
            cost,
        }
    }

    /// Calls `hit` for every realized outcome, in draw order.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, mut hit: impl FnMut(usize)) {
        for &(i, p) in &self.independent {
            if rng.random::<f64>() < p {
                hit(i);
            }
        }
        for group in &self.groups {
            let u = rng.random::<f64>();
            let mut acc = 0.0;
            for &(i, p) in group {
                acc += p;
                if u < acc {
                    hit(i);
                    break;
                }
            }
        }
    }
}

/// Realizes one episode of `action`.
pub fn sample_episode<T: Scalar, R: Rng + ?Sized>(action: &ActionAlternative<T>, rng: &mut R) -> Episode<T> {
    let plan = Plan::new(action);
    let mut realized = Vec::new();
    let mut cost = 0.0;
    plan.draw(rng, |i| {
        realized.push(i);
        cost += plan.cost[i];
    });
    realized.sort_unstable();
    Episode {
        realized,
        cost: T::lit(cost),
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb, nn) = (self.n as f64, other.n as f64, n as f64);
        Moments {
            n,
            mean: self.mean + d * nb / nn,
            m2: self.m2 + other.m2 + d * d * na * nb / nn,
        }
    }
}

/// Runs `work` over `[0, n)` in chunk order; per-chunk results come back in
/// that order whatever the worker count.
fn chunked<R: Send>(n: u64, options: &SimulationOptions, work: impl Fn(u64, u64) -> R + Sync + Send) -> Result<Vec<R>> {
    let size = options.chunk_size.max(1) as u64;
    let chunks: Vec<(u64, u64)> = (0..n.div_ceil(size))
        .map(|c| (c * size, ((c + 1) * size).min(n)))
        .collect();
    let run = || chunks.par_iter().map(|&(a, b)| work(a, b)).collect::<Vec<R>>();
    match options.workers {
        None => Ok(run()),
        Some(0) => Err(Error::InvalidArgument("workers must be at least 1".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

pub fn simulate<T: Scalar>(action: &ActionAlternative<T>, n: u64, seed: u64) -> Result<SimulationEstimate<T>> {
    simulate_with(action, n, seed, &SimulationOptions::default())
}

/// Mean episode cost over `n` episodes with its standard error; `n = 1`
/// reports a standard error of 0.
pub fn simulate_with<T: Scalar>(
    action: &ActionAlternative<T>,
    n: u64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<SimulationEstimate<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("trial count must be at least 1".into()));
    }
    let plan = Plan::new(action);
    let parts = chunked(n, options, |a, b| {
        let mut m = Moments::default();
        for i in a..b {
            let mut rng = episode_rng(seed, i);
            let mut cost = 0.0;
            plan.draw(&mut rng, |k| cost += plan.cost[k]);
            m.push(cost);
        }
        m
    })?;
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let stderr = if total.n > 1 {
        (total.m2 / (total.n - 1) as f64).sqrt() / (total.n as f64).sqrt()
    } else {
        0.0
    };
    Ok(SimulationEstimate {
        n: total.n,
        mean: T::lit(total.mean),
        stderr: T::lit(stderr),
        ci95: [T::lit(total.mean - 1.96 * stderr), T::lit(total.mean + 1.96 * stderr)],
        seed,
    })
}

/// `z = (empirical − analytic) / stderr`, passing when `|z| ≤ 4`. A zero
/// standard error passes only on exact agreement.
pub fn compare_estimate<T: Scalar>(analytic: T, estimate: &SimulationEstimate<T>) -> (f64, bool) {
    let diff = estimate.mean.as_f64() - analytic.as_f64();
    let se = estimate.stderr.as_f64();
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    (z, z.abs() <= Z_THRESHOLD)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow<T> {
    pub action: String,
    pub analytic: T,
    pub empirical: SimulationEstimate<T>,
    pub z_score: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport<T> {
    pub rows: Vec<ConsistencyRow<T>>,
    pub pass: bool,
}

pub fn consistency_check<T: Scalar>(scenario: &Scenario<T>, n: u64, seed: u64) -> Result<ConsistencyReport<T>> {
    consistency_check_with(scenario, n, seed, &SimulationOptions::default())
}

/// Simulates every action of the decision view of `scenario` (see
/// [`risk::prepare`]) and compares it with the analytic cumulative penalty.
pub fn consistency_check_with<T: Scalar>(
    scenario: &Scenario<T>,
    n: u64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<ConsistencyReport<T>> {
    let prepared = risk::prepare(scenario)?;
    let mut rows = Vec::with_capacity(prepared.actions.len());
    for action in &prepared.actions {
        let analytic = risk::cumulative_risk(action).penalty;
        let empirical = simulate_with(action, n, seed, options)?;
        let (z_score, pass) = compare_estimate(analytic, &empirical);
        rows.push(ConsistencyRow {
            action: action.id.clone(),
            analytic,
            empirical,
            z_score,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ConsistencyReport { rows, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartyExposure<T> {
    pub action: String,
    pub n: u64,
    pub seed: u64,
    /// Mean realized magnitude per party; parties without outcomes show 0.
    pub per_party: BTreeMap<String, T>,
    /// Mean episode cost over all outcomes.
    pub mean: T,
    /// Outcomes naming no party; their cost is in `mean` only.
    pub unassigned: Vec<String>,
}

pub fn party_exposure<T: Scalar>(scenario: &Scenario<T>, action: &str, n: u64, seed: u64) -> Result<PartyExposure<T>> {
    party_exposure_with(scenario, action, n, seed, &SimulationOptions::default())
}

/// Empirical expected harm per party under `action`. Uses the same episode
/// streams as [`simulate_with`].
///
/// Realized harm follows the true attributes: fatality modifiers apply
/// even to attributes the fairness policy withholds from the decision.
pub fn party_exposure_with<T: Scalar>(
    scenario: &Scenario<T>,
    action: &str,
    n: u64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<PartyExposure<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("trial count must be at least 1".into()));
    }
    let prepared = valuation::effective_scenario(scenario);
    let act = prepared.require_action(action)?;
    let plan = Plan::new(act);

    let mut slots: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &prepared.parties {
        let next = slots.len();
        slots.entry(p.id.as_str()).or_insert(next);
    }
    // slot of each outcome's party, None when unassigned
    let owner: Vec<Option<usize>> = act
        .outcomes
        .iter()
        .map(|o| o.affected_party.as_deref().and_then(|id| slots.get(id).copied()))
        .collect();
    let width = slots.len();

    let parts = chunked(n, options, |a, b| {
        let mut sums = vec![0.0; width];
        let mut total = 0.0;
        for i in a..b {
            let mut rng = episode_rng(seed, i);
            plan.draw(&mut rng, |k| {
                total += plan.cost[k];
                if let Some(s) = owner[k] {
                    sums[s] += plan.cost[k];
                }
            });
        }
        (sums, total)
    })?;
    let mut sums = vec![0.0; width];
    let mut total = 0.0;
    for (chunk_sums, chunk_total) in parts {
        for (acc, x) in sums.iter_mut().zip(chunk_sums) {
            *acc += x;
        }
        total += chunk_total;
    }
    let nf = n as f64;
    let per_party = slots
        .iter()
        .map(|(id, &s)| (id.to_string(), T::lit(sums[s] / nf)))
        .collect();
    let unassigned = act
        .outcomes
        .iter()
        .zip(&owner)
        .filter(|(_, o)| o.is_none())
        .map(|(o, _)| o.id.clone())
        .collect();
    Ok(PartyExposure {
        action: act.id.clone(),
        n,
        seed,
        per_party,
        mean: T::lit(total / nf),
        unassigned,
    })
}

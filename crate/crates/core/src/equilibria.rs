//! Nash and welfare-efficient effort solvers, equilibrium payoff reporting,
//! and the linking-cost thresholds of the equilibrium set.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::atlas::nonisomorphic_graphs;
use crate::error::{Error, Result};
use crate::model::{
    best_response_effort, payoff_on, EffortProfile, GameParams, IntentProfile, Network,
};
use crate::structure::{classify, star_center, Label};
use crate::verifier::SupportSearch;

/// Residual tolerance for effort solutions.
pub const SOLVER_TOL: f64 = 1e-10;

/// Iteration budget of the clipped best-response fallback.
pub const MAX_BR_ITERATIONS: usize = 10_000;

/// Sweep budget of the efficient-effort coordinate ascent.
pub const MAX_ASCENT_SWEEPS: usize = 1_000_000;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortSolution {
    pub efforts: EffortProfile,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm gap to the solver's fixed-point map.
    pub residual: f64,
    /// Some component sits at a bound of the effort box.
    pub capped: bool,
}

/// Largest adjacency eigenvalue by power iteration on `A + I` from the
/// all-ones vector. The shift keeps bipartite graphs from oscillating.
pub fn spectral_radius(network: &Network) -> f64 {
    let n = network.n();
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w: Vec<f64> = (0..n).map(|i| v[i] + network.neighbor_sum(i, &v)).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next = norm - 1.0;
        v = w.into_iter().map(|x| x / norm).collect();
        let done = (next - estimate).abs() <= POWER_TOL * next.abs().max(1.0);
        estimate = next;
        if done {
            break;
        }
    }
    estimate.max(0.0)
}

fn check_size(params: &GameParams, network: &Network) -> Result<()> {
    if network.n() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            found: network.n(),
        });
    }
    Ok(())
}

fn is_capped(params: &GameParams, x: &[f64]) -> bool {
    x.iter()
        .any(|&v| v <= params.effort_min + 1e-12 || v >= params.effort_max - 1e-12)
}

fn nash_residual(params: &GameParams, network: &Network, x: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| (x[i] - best_response_effort(params, network.neighbor_sum(i, x))).abs())
        .fold(0.0, f64::max)
}

/// Equilibrium efforts on a fixed network.
///
/// When `(lambda / beta) * rho(G) < 1` and the interior solution of
/// `[I - (lambda / beta) G] x = (theta / beta) 1` lies in the effort box, that
/// solution is returned directly. Otherwise the clipped best-response map is
/// iterated from the all-minimum profile, which climbs monotonically to the
/// least fixed point.
pub fn nash_efforts(params: &GameParams, network: &Network) -> Result<EffortSolution> {
    check_size(params, network)?;
    let n = params.n;
    let ratio = params.lambda / params.beta;
    if ratio * spectral_radius(network) < 1.0 {
        let system = DMatrix::from_fn(n, n, |i, j| {
            let identity = if i == j { 1.0 } else { 0.0 };
            identity - if network.has_link(i, j) { ratio } else { 0.0 }
        });
        let rhs = DVector::from_element(n, params.theta / params.beta);
        if let Some(x) = system.lu().solve(&rhs) {
            let inside = x
                .iter()
                .all(|&v| v >= params.effort_min && v <= params.effort_max);
            if inside {
                let x: Vec<f64> = x.iter().copied().collect();
                let residual = nash_residual(params, network, &x);
                return Ok(EffortSolution {
                    capped: is_capped(params, &x),
                    efforts: EffortProfile::from_clipped(x),
                    converged: residual <= SOLVER_TOL,
                    iterations: 0,
                    residual,
                });
            }
        }
    }

    let mut x = vec![params.effort_min; n];
    for iteration in 1..=MAX_BR_ITERATIONS {
        let next: Vec<f64> = (0..n)
            .map(|i| best_response_effort(params, network.neighbor_sum(i, &x)))
            .collect();
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if change <= SOLVER_TOL / 10.0 {
            let residual = nash_residual(params, network, &x);
            return Ok(EffortSolution {
                capped: is_capped(params, &x),
                efforts: EffortProfile::from_clipped(x),
                converged: residual <= SOLVER_TOL,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::NonContraction {
        iterations: MAX_BR_ITERATIONS,
        residual: nash_residual(params, network, &x),
    })
}

/// Total gross welfare `sum_i (theta x_i - beta/2 x_i^2 + lambda x_i sum_{k in N_i} x_k)`.
pub fn gross_welfare(params: &GameParams, network: &Network, x: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| {
            params.theta * x[i] - params.beta / 2.0 * x[i] * x[i]
                + params.lambda * x[i] * network.neighbor_sum(i, x)
        })
        .sum()
}

fn ascent_update(params: &GameParams, network: &Network, x: &[f64], i: usize) -> f64 {
    params.clip((params.theta + 2.0 * params.lambda * network.neighbor_sum(i, x)) / params.beta)
}

fn coordinate_ascent(params: &GameParams, network: &Network, start: f64) -> (Vec<f64>, usize, bool) {
    let n = params.n;
    let mut x = vec![start; n];
    for sweep in 1..=MAX_ASCENT_SWEEPS {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let updated = ascent_update(params, network, &x, i);
            change = change.max((updated - x[i]).abs());
            x[i] = updated;
        }
        if change < SOLVER_TOL {
            return (x, sweep, true);
        }
    }
    (x, MAX_ASCENT_SWEEPS, false)
}

/// Welfare-maximizing efforts on a fixed network within the effort box.
///
/// Cyclic coordinate ascent with the exact per-coordinate maximizer
/// `clip((theta + 2 lambda sum_{k in N_i} x_k) / beta)`, run from both corners
/// of the box; the higher-welfare end point is returned. When
/// `beta I - 2 lambda G` is positive definite both runs meet at
/// `theta (beta I - 2 lambda G)^{-1} 1`; otherwise welfare grows without bound
/// in the interior and the ascent climbs to the cap.
pub fn efficient_efforts(params: &GameParams, network: &Network) -> Result<EffortSolution> {
    check_size(params, network)?;
    let (low, low_sweeps, low_ok) = coordinate_ascent(params, network, params.effort_min);
    let (high, high_sweeps, high_ok) = coordinate_ascent(params, network, params.effort_max);
    let (x, converged) = if gross_welfare(params, network, &high) > gross_welfare(params, network, &low) + 1e-12 {
        (high, high_ok)
    } else {
        (low, low_ok)
    };
    let residual = (0..x.len())
        .map(|i| (x[i] - ascent_update(params, network, &x, i)).abs())
        .fold(0.0, f64::max);
    Ok(EffortSolution {
        capped: is_capped(params, &x),
        efforts: EffortProfile::from_clipped(x),
        converged: converged && residual <= SOLVER_TOL,
        iterations: low_sweeps + high_sweeps,
        residual,
    })
}

/// Single-sponsor orientation minimizing the largest number of links any
/// agent pays for.
///
/// Links are first assigned greedily (the endpoint with fewer sponsored links
/// pays; ties go to the lower-degree endpoint, then the lower index), then
/// sponsorship is shifted along directed paths from a most-loaded agent to one
/// carrying at least two fewer links until no such path exists, which is the
/// optimality condition for min-max orientations.
pub fn balanced_sponsorship(network: &Network) -> IntentProfile {
    let n = network.n();
    let mut intents = IntentProfile::empty(n);
    let mut count = vec![0usize; n];
    for (i, j) in network.edges() {
        let key = |v: usize| (count[v], network.degree(v), v);
        let sponsor = if key(j) < key(i) { j } else { i };
        let target = i + j - sponsor;
        intents.set(sponsor, target, true);
        count[sponsor] += 1;
    }
    loop {
        let max = count.iter().copied().max().unwrap_or(0);
        let mut improved = false;
        for u in (0..n).filter(|&u| count[u] == max) {
            // breadth-first search along sponsored links
            let mut parent = vec![usize::MAX; n];
            parent[u] = u;
            let mut queue = std::collections::VecDeque::from([u]);
            let mut found = None;
            while let Some(v) = queue.pop_front() {
                if count[v] + 2 <= max {
                    found = Some(v);
                    break;
                }
                for w in crate::model::bits(intents.row(v)) {
                    if parent[w] == usize::MAX {
                        parent[w] = v;
                        queue.push_back(w);
                    }
                }
            }
            if let Some(mut v) = found {
                count[u] -= 1;
                count[v] += 1;
                while v != u {
                    let p = parent[v];
                    intents.set(p, v, false);
                    intents.set(v, p, true);
                    v = p;
                }
                improved = true;
                break;
            }
        }
        if !improved {
            return intents;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPayoffReport {
    pub per_agent: Vec<f64>,
    pub group_average: f64,
    pub sponsorship: IntentProfile,
}

impl EquilibriumPayoffReport {
    /// `(center, periphery)` payoffs when `network` is a star.
    pub fn star_pair(&self, network: &Network) -> Option<(f64, f64)> {
        let c = star_center(network)?;
        let leaf = (0..network.n()).find(|&v| v != c)?;
        Some((self.per_agent[c], self.per_agent[leaf]))
    }
}

/// Per-agent payoffs at `efforts` with each link of `network` paid once.
/// Without an explicit sponsorship, [`balanced_sponsorship`] is used; on a star
/// it makes every peripheral agent sponsor its link to the center.
pub fn equilibrium_payoffs(
    params: &GameParams,
    network: &Network,
    efforts: &EffortProfile,
    sponsorship: Option<&IntentProfile>,
) -> Result<EquilibriumPayoffReport> {
    check_size(params, network)?;
    if efforts.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            found: efforts.len(),
        });
    }
    let sponsorship = match sponsorship {
        Some(s) => {
            let single = s.reciprocated_count() == 0;
            if s.n() != params.n || !single || crate::model::realize_network(s) != *network {
                return Err(Error::SponsorshipMismatch);
            }
            s.clone()
        }
        None => balanced_sponsorship(network),
    };
    let per_agent: Vec<f64> = (0..params.n)
        .map(|i| payoff_on(params, efforts.as_slice(), network, &sponsorship, i).total)
        .collect();
    let group_average = per_agent.iter().sum::<f64>() / params.n as f64;
    Ok(EquilibriumPayoffReport {
        per_agent,
        group_average,
        sponsorship,
    })
}

/// Group-average payoff of the complete network at Nash efforts under
/// balanced sponsorship; the benchmark for relative efficiency.
pub fn complete_network_benchmark(params: &GameParams) -> Result<f64> {
    let g = Network::complete(params.n);
    let x = nash_efforts(params, &g)?.efforts;
    Ok(equilibrium_payoffs(params, &g, &x, None)?.group_average)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    /// Number of grid intervals scanned before bisection.
    pub grid_points: usize,
    /// Absolute precision of each bisected switch point.
    pub precision: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            grid_points: 400,
            precision: 1e-6,
        }
    }
}

/// Range of linking costs over which one architecture is supportable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportWindow {
    pub network: Network,
    pub label: Label,
    /// Lowest cost at which the network becomes supportable.
    pub enters_at: Option<f64>,
    /// First cost above `enters_at` at which it stops being supportable.
    pub leaves_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostThresholds {
    /// Below this cost only the complete network is supportable.
    pub kappa1: f64,
    /// Above this cost the complete network is not supportable.
    pub kappa2: f64,
    /// Network whose entry determines `kappa1`.
    pub kappa1_network: Option<Network>,
    pub search_interval: (f64, f64),
    pub grid_points: usize,
    pub precision: f64,
    pub windows: Vec<SupportWindow>,
}

/// Default architecture list: empty, star and complete, plus every
/// non-isomorphic graph when `n <= 5`.
pub fn default_architectures(n: usize) -> Result<Vec<Network>> {
    crate::verifier::enumeration_candidates(n, n <= 5, &[])
}

/// Bisects the switch point of `pred` in `[lo, hi]` where `pred(lo) != pred(hi)`.
fn bisect(
    mut lo: f64,
    mut hi: f64,
    precision: f64,
    pred: impl Fn(f64) -> Result<bool>,
) -> Result<f64> {
    let at_lo = pred(lo)?;
    while hi - lo > precision / 2.0 {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Cost at which supportability of `network` flips inside `[lo, hi]`.
pub fn supportability_switch(params: &GameParams, network: &Network, lo: f64, hi: f64, precision: f64) -> Result<f64> {
    let search = SupportSearch::new(params, network)?;
    let pred = |k: f64| Ok(search.search(k)?.sponsorship.is_some());
    if pred(lo)? == pred(hi)? {
        return Err(Error::BracketFailure {
            architecture: format!("{:?}", classify(network).label),
            detail: format!("same verdict at both ends of [{lo}, {hi}]"),
        });
    }
    bisect(lo, hi, precision, pred)
}

/// Linking-cost thresholds of the equilibrium set.
///
/// Every architecture is scanned on a uniform grid over `[0, K]`, where `K`
/// exceeds the value any agent draws from all of its links (above `K` only
/// the empty network can be supported). Switch points are refined by
/// bisection. The empty network must be non-decreasing in supportability and
/// the complete network non-increasing; a violation on the grid is reported as
/// a bracket failure.
pub fn cost_thresholds(
    params: &GameParams,
    architectures: Option<&[Network]>,
    options: ThresholdOptions,
) -> Result<CostThresholds> {
    let n = params.n;
    let mut list = match architectures {
        Some(a) => a.to_vec(),
        None => default_architectures(n)?,
    };
    for required in [Network::empty(n), Network::complete(n)] {
        if !list.contains(&required) {
            list.push(required);
        }
    }
    let searches: Vec<SupportSearch> = list
        .iter()
        .map(|g| SupportSearch::new(params, g))
        .collect::<Result<_>>()?;
    let upper = searches
        .iter()
        .map(SupportSearch::max_link_value)
        .fold(0.0, f64::max)
        + 1.0;
    let steps = options.grid_points.max(2);
    let grid: Vec<f64> = (0..=steps).map(|g| upper * g as f64 / steps as f64).collect();

    let mut windows = Vec::with_capacity(list.len());
    let mut kappa1: Option<(f64, Network)> = None;
    let mut kappa2 = None;
    for search in &searches {
        let pred = |k: f64| Ok(search.search(k)?.sponsorship.is_some());
        let verdicts: Vec<bool> = grid.iter().map(|&k| pred(k)).collect::<Result<_>>()?;
        let label = classify(search.network()).label;
        let monotone_violation = match label {
            Label::Empty => verdicts.windows(2).any(|w| w[0] && !w[1]),
            Label::Complete => verdicts.windows(2).any(|w| !w[0] && w[1]),
            _ => false,
        };
        if monotone_violation {
            return Err(Error::BracketFailure {
                architecture: format!("{label:?}"),
                detail: format!("verdicts on the grid over [0, {upper}] change direction"),
            });
        }
        let enter = verdicts.iter().position(|&v| v);
        let enters_at = match enter {
            None => None,
            Some(0) => Some(0.0),
            Some(g) => Some(bisect(grid[g - 1], grid[g], options.precision, pred)?),
        };
        let leaves_at = match enter {
            None => None,
            Some(e) => match verdicts[e..].iter().position(|&v| !v) {
                None => None,
                Some(off) => {
                    let g = e + off;
                    Some(bisect(grid[g - 1], grid[g], options.precision, pred)?)
                }
            },
        };
        if label == Label::Complete {
            kappa2 = leaves_at;
        } else if let Some(k) = enters_at {
            if kappa1.as_ref().is_none_or(|(best, _)| k < *best) {
                kappa1 = Some((k, search.network().clone()));
            }
        }
        windows.push(SupportWindow {
            network: search.network().clone(),
            label,
            enters_at,
            leaves_at,
        });
    }
    let (kappa1, kappa1_network) = match kappa1 {
        Some((k, g)) => (k, Some(g)),
        None => (upper, None),
    };
    Ok(CostThresholds {
        kappa1,
        kappa2: kappa2.unwrap_or(upper),
        kappa1_network,
        search_interval: (0.0, upper),
        grid_points: steps,
        precision: options.precision,
        windows,
    })
}

/// Non-isomorphic graphs on `n` nodes, re-exported for callers building
/// custom architecture lists.
pub fn all_architectures(n: usize) -> Result<Vec<Network>> {
    nonisomorphic_graphs(n)
}

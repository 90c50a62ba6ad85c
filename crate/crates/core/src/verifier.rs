//! Exact Nash verification by exhaustive deviation search, and the search for
//! link sponsorships that support a network as an equilibrium.
//!
//! Payoffs are strictly concave in own effort, so for every alternative intent
//! set the best effort deviation is the clipped best response to the resulting
//! neighborhood. Enumerating all `2^(n-1)` intent sets per agent therefore
//! covers every joint effort and link deviation.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{canonical_form, nonisomorphic_graphs, MAX_ATLAS_N};
use crate::equilibria::nash_efforts;
use crate::error::{Error, Result};
use crate::model::{
    best_response_effort, bits, EffortProfile, GameParams, IntentProfile, Network, StrategyProfile,
};

/// Gains at or below this count as non-improving.
pub const DEVIATION_TOL: f64 = 1e-9;

/// Largest group the deviation enumerator accepts.
pub const MAX_VERIFY_N: usize = 16;

/// Largest group the sponsorship search accepts.
pub const MAX_SUPPORT_N: usize = 9;

/// Node budget of the sponsorship search.
pub const ORIENTATION_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub agent: usize,
    /// Targets the deviating agent initiates to, sorted.
    pub intents: Vec<usize>,
    pub effort: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub is_nash: bool,
    /// Most profitable deviation found; the trivial non-deviation is excluded,
    /// so at an equilibrium this reports the least costly alternative.
    pub worst_deviation: Option<Deviation>,
    pub checked_deviations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NESupportReport {
    pub network: Network,
    pub supportable: bool,
    pub witness: Option<StrategyProfile>,
    pub orientations_tried: u64,
}

fn gross(params: &GameParams, x: f64, neighbor_sum: f64) -> f64 {
    params.theta * x - params.beta / 2.0 * x * x + params.lambda * x * neighbor_sum
}

/// Effort sums for every subset of agents, indexed by bitmask.
fn subset_sums(efforts: &[f64]) -> Vec<f64> {
    let n = efforts.len();
    let mut sums = vec![0.0; 1 << n];
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + efforts[low];
    }
    sums
}

/// Submasks of `set` in increasing numeric order, starting with 0.
fn submasks(set: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(0u32);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == set {
            None
        } else {
            Some(((cur | !set).wrapping_add(1)) & set)
        };
        Some(cur)
    })
}

fn check_profile(params: &GameParams, profile: &StrategyProfile) -> Result<()> {
    if profile.n() != params.n || profile.efforts.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            found: profile.n(),
        });
    }
    if params.n > MAX_VERIFY_N {
        return Err(Error::TooManyAgents {
            n: params.n,
            limit: MAX_VERIFY_N,
        });
    }
    Ok(())
}

/// Checks every unilateral deviation of every agent.
pub fn verify_nash(params: &GameParams, profile: &StrategyProfile) -> Result<DeviationReport> {
    check_profile(params, profile)?;
    let n = params.n;
    let x = profile.efforts.as_slice();
    let sums = subset_sums(x);
    let all = (1u32 << n) - 1;
    let mut worst: Option<Deviation> = None;
    let mut checked = 0u64;
    for i in 0..n {
        let own = profile.intents.row(i);
        let incoming = profile.intents.incoming(i);
        let current =
            gross(params, x[i], sums[(own | incoming) as usize]) - params.kappa * own.count_ones() as f64;
        for t in submasks(all & !(1 << i)) {
            checked += 1;
            let s = sums[(t | incoming) as usize];
            let effort = best_response_effort(params, s);
            if t == own && (effort - x[i]).abs() <= 1e-12 {
                continue;
            }
            let gain = gross(params, effort, s) - params.kappa * t.count_ones() as f64 - current;
            if worst.as_ref().is_none_or(|w| gain > w.gain) {
                worst = Some(Deviation {
                    agent: i,
                    intents: bits(t).collect(),
                    effort,
                    gain,
                });
            }
        }
    }
    let is_nash = worst.as_ref().is_none_or(|w| w.gain <= DEVIATION_TOL);
    Ok(DeviationReport {
        is_nash,
        worst_deviation: worst,
        checked_deviations: checked,
    })
}

/// One possible sponsorship set of an agent with the payoff data needed to
/// test it at any linking cost.
#[derive(Debug, Clone)]
struct Candidate {
    own: u32,
    count: f64,
    current_gross: f64,
    /// Best gross deviation payoff for each number of initiated links.
    frontier: Vec<f64>,
}

impl Candidate {
    fn stable_at(&self, kappa: f64) -> bool {
        let current = self.current_gross - kappa * self.count;
        let best = self
            .frontier
            .iter()
            .enumerate()
            .map(|(k, g)| g - kappa * k as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        best - current <= DEVIATION_TOL
    }
}

/// Precomputed sponsorship search for one network at its Nash efforts. The
/// precomputation does not depend on the linking cost, so one instance can be
/// queried at many values of kappa.
#[derive(Debug, Clone)]
pub struct SupportSearch {
    params: GameParams,
    network: Network,
    efforts: EffortProfile,
    edges: Vec<(usize, usize)>,
    candidates: Vec<Vec<Candidate>>,
}

/// Result of one sponsorship search.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub sponsorship: Option<IntentProfile>,
    pub orientations_tried: u64,
}

struct Dfs<'a> {
    feasible: &'a [Vec<u32>],
    edges: &'a [(usize, usize)],
    preferred: &'a [usize],
    own: Vec<u32>,
    incoming: Vec<u32>,
    nodes: u64,
    leaves: u64,
}

impl Dfs<'_> {
    /// Smallest and largest consistent sponsorship count, or None when none fits.
    fn bounds(&self, v: usize) -> Option<(u32, u32)> {
        let (own, inc) = (self.own[v], self.incoming[v]);
        self.feasible[v]
            .iter()
            .filter(|&&s| s & own == own && s & inc == 0)
            .map(|s| s.count_ones())
            .fold(None, |acc, c| match acc {
                None => Some((c, c)),
                Some((lo, hi)) => Some((lo.min(c), hi.max(c))),
            })
    }

    fn consistent(&self) -> bool {
        let total = self.edges.len() as u32;
        let (mut lo_sum, mut hi_sum) = (0u32, 0u32);
        for v in 0..self.feasible.len() {
            match self.bounds(v) {
                Some((lo, hi)) => {
                    lo_sum += lo;
                    hi_sum += hi;
                }
                None => return false,
            }
        }
        lo_sum <= total && total <= hi_sum
    }

    fn run(&mut self, depth: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > ORIENTATION_BUDGET {
            return Err(Error::BudgetExceeded {
                budget: ORIENTATION_BUDGET,
                tried: self.leaves,
            });
        }
        if depth == self.edges.len() {
            self.leaves += 1;
            // every agent's sponsorship set is fully assigned and was checked
            return Ok(true);
        }
        let (i, j) = self.edges[depth];
        let first = self.preferred[depth];
        let order = if first == i { [i, j] } else { [j, i] };
        for sponsor in order {
            let target = if sponsor == i { j } else { i };
            self.own[sponsor] |= 1 << target;
            self.incoming[target] |= 1 << sponsor;
            if self.consistent() && self.run(depth + 1)? {
                return Ok(true);
            }
            self.own[sponsor] &= !(1 << target);
            self.incoming[target] &= !(1 << sponsor);
        }
        Ok(false)
    }
}

impl SupportSearch {
    /// Fixes efforts at the Nash efforts of `network` and tabulates, for every
    /// agent and every split of its links into sponsored and received, the
    /// best deviation payoff by number of initiated links.
    pub fn new(params: &GameParams, network: &Network) -> Result<Self> {
        if network.n() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                found: network.n(),
            });
        }
        if params.n > MAX_SUPPORT_N {
            return Err(Error::TooManyAgents {
                n: params.n,
                limit: MAX_SUPPORT_N,
            });
        }
        let solution = nash_efforts(params, network)?;
        if !solution.converged {
            return Err(Error::NonContraction {
                iterations: solution.iterations,
                residual: solution.residual,
            });
        }
        let n = params.n;
        let x = solution.efforts.as_slice();
        let sums = subset_sums(x);
        let all = (1u32 << n) - 1;
        let candidates = (0..n)
            .map(|i| {
                let nbrs = network.neighbor_mask(i);
                let others = all & !(1 << i);
                submasks(nbrs)
                    .map(|own| {
                        let incoming = nbrs & !own;
                        let mut frontier = vec![f64::NEG_INFINITY; n];
                        for t in submasks(others) {
                            let s = sums[(t | incoming) as usize];
                            let g = gross(params, best_response_effort(params, s), s);
                            let k = t.count_ones() as usize;
                            if g > frontier[k] {
                                frontier[k] = g;
                            }
                        }
                        Candidate {
                            own,
                            count: own.count_ones() as f64,
                            current_gross: gross(params, x[i], sums[nbrs as usize]),
                            frontier,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(SupportSearch {
            params: *params,
            network: network.clone(),
            efforts: solution.efforts,
            edges: network.edges(),
            candidates,
        })
    }

    pub fn efforts(&self) -> &EffortProfile {
        &self.efforts
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Largest gain any agent could get by dropping all of its links, an
    /// upper bound on the cost at which this network stays supportable.
    pub fn max_link_value(&self) -> f64 {
        let x = self.efforts.as_slice();
        (0..self.params.n)
            .map(|i| {
                let s = self.network.neighbor_sum(i, x);
                let with = gross(&self.params, best_response_effort(&self.params, s), s);
                let without = gross(&self.params, best_response_effort(&self.params, 0.0), 0.0);
                with - without
            })
            .fold(0.0, f64::max)
    }

    fn greedy_sponsor(&self, (i, j): (usize, usize)) -> usize {
        if self.network.degree(j) < self.network.degree(i) {
            j
        } else {
            i
        }
    }

    /// Finds a single-sponsor orientation at linking cost `kappa` under which
    /// no agent has a profitable deviation.
    pub fn search(&self, kappa: f64) -> Result<SearchOutcome> {
        let n = self.params.n;
        let feasible: Vec<Vec<u32>> = self
            .candidates
            .iter()
            .map(|cands| cands.iter().filter(|c| c.stable_at(kappa)).map(|c| c.own).collect())
            .collect();
        let mut tried = 0u64;
        let to_profile = |own: &[u32]| {
            IntentProfile::from_rows(own.to_vec()).expect("orientation rows are valid")
        };
        if feasible.iter().any(|f| f.is_empty()) {
            return Ok(SearchOutcome {
                sponsorship: None,
                orientations_tried: tried,
            });
        }
        let sets: Vec<HashSet<u32>> = feasible.iter().map(|f| f.iter().copied().collect()).collect();

        // warm starts: lower-degree endpoint sponsors, then the balanced orientation
        let greedy = {
            let mut own = vec![0u32; n];
            for &(i, j) in &self.edges {
                let s = self.greedy_sponsor((i, j));
                own[s] |= 1 << (i + j - s);
            }
            own
        };
        let balanced: Vec<u32> = {
            let b = crate::equilibria::balanced_sponsorship(&self.network);
            (0..n).map(|i| b.row(i)).collect()
        };
        for own in [greedy, balanced] {
            tried += 1;
            if (0..n).all(|i| sets[i].contains(&own[i])) {
                return Ok(SearchOutcome {
                    sponsorship: Some(to_profile(&own)),
                    orientations_tried: tried,
                });
            }
        }

        let preferred: Vec<usize> = self.edges.iter().map(|&e| self.greedy_sponsor(e)).collect();
        let mut dfs = Dfs {
            feasible: &feasible,
            edges: &self.edges,
            preferred: &preferred,
            own: vec![0; n],
            incoming: vec![0; n],
            nodes: 0,
            leaves: 0,
        };
        let found = dfs.consistent() && dfs.run(0)?;
        tried += dfs.leaves;
        Ok(SearchOutcome {
            sponsorship: found.then(|| to_profile(&dfs.own)),
            orientations_tried: tried,
        })
    }

    /// Supportability at the search's own linking cost, as a report.
    pub fn report(&self, kappa: f64) -> Result<NESupportReport> {
        let outcome = self.search(kappa)?;
        let witness = outcome
            .sponsorship
            .map(|intents| StrategyProfile::new(self.efforts.clone(), intents))
            .transpose()?;
        Ok(NESupportReport {
            network: self.network.clone(),
            supportable: witness.is_some(),
            witness,
            orientations_tried: outcome.orientations_tried,
        })
    }
}

/// Whether some single-sponsor orientation, with efforts at the network's Nash
/// efforts, is a Nash equilibrium.
pub fn ne_supportable(params: &GameParams, network: &Network) -> Result<NESupportReport> {
    let report = SupportSearch::new(params, network)?.report(params.kappa)?;
    if let Some(w) = &report.witness {
        debug_assert!(verify_nash(params, w)?.is_nash, "witness fails verification");
    }
    Ok(report)
}

/// Candidate networks for enumeration: the full atlas for `n <= 5`, otherwise
/// empty, star and complete plus `extra`, deduplicated up to isomorphism.
pub fn enumeration_candidates(n: usize, all_graphs: bool, extra: &[Network]) -> Result<Vec<Network>> {
    let mut list = if n <= 5 || all_graphs {
        nonisomorphic_graphs(n)?
    } else {
        vec![Network::empty(n), Network::star(n, 0), Network::complete(n)]
    };
    list.extend(extra.iter().cloned());
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(list.len());
    for g in list {
        if g.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.n(),
            });
        }
        // labeled graphs beyond the atlas are only deduplicated exactly
        let key = if n <= MAX_ATLAS_N {
            canonical_form(&g)?.edges()
        } else {
            g.edges()
        };
        if seen.insert(key) {
            out.push(g);
        }
    }
    Ok(out)
}

/// One supportability report per candidate network.
pub fn enumerate_ne_networks(params: &GameParams, extra: &[Network]) -> Result<Vec<NESupportReport>> {
    let candidates = enumeration_candidates(params.n, false, extra)?;
    enumerate_over(params, &candidates)
}

pub fn enumerate_over(params: &GameParams, candidates: &[Network]) -> Result<Vec<NESupportReport>> {
    candidates.par_iter().map(|g| ne_supportable(params, g)).collect()
}

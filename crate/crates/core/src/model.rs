//! Domain types and the payoff engine.
//!
//! Agent `i` earns
//!
//! ```text
//! pi_i = theta x_i - (beta / 2) x_i^2 + lambda x_i * sum_{k in N_i(G)} x_k - kappa * initiated_i
//! ```
//!
//! where `G` is the undirected network realized from the directed intent
//! matrix: a link `{i, j}` exists as soon as either endpoint initiates it, and
//! only initiators pay `kappa`.
//!
//! Agents are indexed from 0 here. External file formats use 1-based IDs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard upper bound on group size for the bitset representation.
pub const MAX_AGENTS: usize = 32;

/// Absolute tolerance for internal floating comparisons.
pub const EPS: f64 = 1e-9;

/// Parameters of the linear-quadratic payoff plus the effort box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub theta: f64,
    pub beta: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub n: usize,
    #[serde(default = "default_effort_min")]
    pub effort_min: f64,
    #[serde(default = "default_effort_max")]
    pub effort_max: f64,
}

fn default_effort_min() -> f64 {
    0.0
}

fn default_effort_max() -> f64 {
    20.0
}

impl GameParams {
    /// Builds validated parameters with the default effort box `[0, 20]`.
    pub fn new(theta: f64, beta: f64, lambda: f64, kappa: f64, n: usize) -> Result<Self> {
        let params = GameParams {
            theta,
            beta,
            lambda,
            kappa,
            n,
            effort_min: default_effort_min(),
            effort_max: default_effort_max(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_bounds(mut self, effort_min: f64, effort_max: f64) -> Result<Self> {
        self.effort_min = effort_min;
        self.effort_max = effort_max;
        self.validate()?;
        Ok(self)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be positive and finite, got {v}")))
            }
        };
        positive("theta", self.theta)?;
        positive("beta", self.beta)?;
        positive("lambda", self.lambda)?;
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::invalid(
                "kappa",
                format!("must be non-negative and finite, got {}", self.kappa),
            ));
        }
        if self.n < 2 || self.n > MAX_AGENTS {
            return Err(Error::invalid(
                "n",
                format!("must lie in 2..={MAX_AGENTS}, got {}", self.n),
            ));
        }
        if !(self.effort_min.is_finite() && self.effort_min >= 0.0) {
            return Err(Error::invalid("effort_min", "must be non-negative and finite"));
        }
        if !(self.effort_max.is_finite() && self.effort_min < self.effort_max) {
            return Err(Error::invalid(
                "effort_max",
                format!(
                    "must be finite and exceed effort_min ({} >= {})",
                    self.effort_min, self.effort_max
                ),
            ));
        }
        Ok(())
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.effort_min, self.effort_max)
    }

    /// Best response to an empty neighborhood, `theta / beta` clipped to the box.
    pub fn isolated_effort(&self) -> f64 {
        best_response_effort(self, 0.0)
    }
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::AgentOutOfRange { index: idx, n });
        }
    }
    if i == j {
        return Err(Error::invalid("pair", format!("self-link ({i}, {i}) is not allowed")));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_AGENTS {
        return Err(Error::invalid("n", format!("must lie in 1..={MAX_AGENTS}, got {n}")));
    }
    Ok(())
}

/// Directed initiation matrix. Bit `j` of row `i` means agent `i` initiates a link to `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "IntentsJson", into = "IntentsJson")]
pub struct IntentProfile {
    n: usize,
    rows: Vec<u32>,
}

impl IntentProfile {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_AGENTS, "group size {n} exceeds {MAX_AGENTS}");
        IntentProfile { n, rows: vec![0; n] }
    }

    /// Builds a profile from 0-based `(initiator, target)` pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        check_n(n)?;
        let mut profile = IntentProfile::empty(n);
        for &(i, j) in pairs {
            check_pair(n, i, j)?;
            profile.rows[i] |= 1 << j;
        }
        Ok(profile)
    }

    /// Builds a profile from per-agent target bitmasks; diagonal bits are rejected.
    pub fn from_rows(rows: Vec<u32>) -> Result<Self> {
        let n = rows.len();
        check_n(n)?;
        let valid = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        for (i, &row) in rows.iter().enumerate() {
            if row & !valid != 0 {
                return Err(Error::AgentOutOfRange { index: 32 - row.leading_zeros() as usize - 1, n });
            }
            if row & (1 << i) != 0 {
                return Err(Error::invalid("intents", format!("agent {i} initiates a link to itself")));
            }
        }
        Ok(IntentProfile { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn initiates(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        assert!(i != j && i < self.n && j < self.n, "invalid intent ({i}, {j})");
        if on {
            self.rows[i] |= 1 << j;
        } else {
            self.rows[i] &= !(1 << j);
        }
    }

    /// Targets of agent `i` as a bitmask.
    pub fn row(&self, i: usize) -> u32 {
        self.rows[i]
    }

    pub fn set_row(&mut self, i: usize, row: u32) {
        assert!(row & (1 << i) == 0, "agent {i} cannot target itself");
        self.rows[i] = row;
    }

    /// Agents initiating a link to `i`, as a bitmask.
    pub fn incoming(&self, i: usize) -> u32 {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, row)| *row >> i & 1 == 1)
            .fold(0, |acc, (j, _)| acc | 1 << j)
    }

    /// Number of links initiated by `i`.
    pub fn initiated_count(&self, i: usize) -> usize {
        self.rows[i].count_ones() as usize
    }

    pub fn total_initiations(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn transpose(&self) -> IntentProfile {
        let mut t = IntentProfile::empty(self.n);
        for i in 0..self.n {
            for j in bits(self.rows[i]) {
                t.rows[j] |= 1 << i;
            }
        }
        t
    }

    /// Elementwise OR of two profiles of equal size.
    pub fn union(&self, other: &IntentProfile) -> Result<IntentProfile> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(IntentProfile {
            n: self.n,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect(),
        })
    }

    /// 0-based `(initiator, target)` pairs in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| bits(self.rows[i]).map(move |j| (i, j)))
            .collect()
    }

    /// Number of links initiated by both endpoints.
    pub fn reciprocated_count(&self) -> usize {
        (0..self.n)
            .map(|i| bits(self.rows[i]).filter(|&j| j > i && self.initiates(j, i)).count())
            .sum()
    }
}

/// Undirected simple graph stored as symmetric adjacency bitmasks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "NetworkJson", into = "NetworkJson")]
pub struct Network {
    n: usize,
    rows: Vec<u32>,
}

impl Network {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_AGENTS, "group size {n} exceeds {MAX_AGENTS}");
        Network { n, rows: vec![0; n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Network::empty(n);
        let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        for i in 0..n {
            g.rows[i] = all & !(1 << i);
        }
        g
    }

    pub fn star(n: usize, center: usize) -> Self {
        assert!(center < n, "center {center} out of range");
        let mut g = Network::empty(n);
        for j in (0..n).filter(|&j| j != center) {
            g.add_link(center, j);
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Network::empty(n);
        if n >= 3 {
            for i in 0..n {
                g.add_link(i, (i + 1) % n);
            }
        } else if n == 2 {
            g.add_link(0, 1);
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let mut g = Network::empty(n);
        for i in 1..n {
            g.add_link(i - 1, i);
        }
        g
    }

    /// Builds a network from 0-based undirected edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        check_n(n)?;
        let mut g = Network::empty(n);
        for &(i, j) in edges {
            check_pair(n, i, j)?;
            g.add_link(i, j);
        }
        Ok(g)
    }

    /// Builds a network from adjacency bitmasks, checking symmetry and the diagonal.
    pub fn from_rows(rows: Vec<u32>) -> Result<Self> {
        let n = rows.len();
        check_n(n)?;
        for i in 0..n {
            if rows[i] >> i & 1 == 1 {
                return Err(Error::invalid("adjacency", format!("self-loop at {i}")));
            }
            if n < 32 && rows[i] >> n != 0 {
                return Err(Error::invalid("adjacency", format!("row {i} references agents >= {n}")));
            }
            for j in bits(rows[i]) {
                if rows[j] >> i & 1 == 0 {
                    return Err(Error::invalid(
                        "adjacency",
                        format!("asymmetric entry ({i}, {j})"),
                    ));
                }
            }
        }
        Ok(Network { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_link(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn add_link(&mut self, i: usize, j: usize) {
        assert!(i != j, "self-loop at {i}");
        self.rows[i] |= 1 << j;
        self.rows[j] |= 1 << i;
    }

    pub fn remove_link(&mut self, i: usize, j: usize) {
        self.rows[i] &= !(1 << j);
        self.rows[j] &= !(1 << i);
    }

    /// Neighbor set of `i` as a bitmask.
    pub fn neighbor_mask(&self, i: usize) -> u32 {
        self.rows[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> {
        bits(self.rows[i])
    }

    pub fn degree(&self, i: usize) -> usize {
        self.rows[i].count_ones() as usize
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn link_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn max_links(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Undirected edges `(i, j)` with `i < j`, lexicographically ordered.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| bits(self.rows[i]).filter(move |&j| j > i).map(move |j| (i, j)))
            .collect()
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Network {
        assert_eq!(perm.len(), self.n);
        let mut g = Network::empty(self.n);
        for (i, j) in self.edges() {
            g.add_link(perm[i], perm[j]);
        }
        g
    }

    /// Upper-triangle adjacency as a bit string, row-major over pairs `i < j`.
    pub fn upper_bits(&self) -> u64 {
        assert!(self.n <= 11, "upper-triangle code needs n <= 11");
        let mut code = 0u64;
        let mut pos = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_link(i, j) {
                    code |= 1 << pos;
                }
                pos += 1;
            }
        }
        code
    }

    pub fn from_upper_bits(n: usize, code: u64) -> Network {
        assert!(n <= 11, "upper-triangle code needs n <= 11");
        let mut g = Network::empty(n);
        let mut pos = 0;
        for i in 0..n {
            for j in i + 1..n {
                if code >> pos & 1 == 1 {
                    g.add_link(i, j);
                }
                pos += 1;
            }
        }
        g
    }

    /// Effort sum over the neighbors of `i`.
    pub fn neighbor_sum(&self, i: usize, efforts: &[f64]) -> f64 {
        mask_sum(self.rows[i], efforts)
    }
}

/// Iterates the set bit positions of `mask` in increasing order.
pub fn bits(mut mask: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let j = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(j)
        }
    })
}

/// Sum of `values[j]` over the bits `j` set in `mask`.
pub fn mask_sum(mask: u32, values: &[f64]) -> f64 {
    bits(mask).map(|j| values[j]).sum()
}

/// Effort vector checked against the effort box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EffortProfile(Vec<f64>);

impl EffortProfile {
    pub fn new(efforts: Vec<f64>, params: &GameParams) -> Result<Self> {
        if efforts.len() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                found: efforts.len(),
            });
        }
        for (agent, &value) in efforts.iter().enumerate() {
            if !(value >= params.effort_min - EPS && value <= params.effort_max + EPS) {
                return Err(Error::EffortOutOfBounds {
                    agent,
                    value,
                    min: params.effort_min,
                    max: params.effort_max,
                });
            }
        }
        Ok(EffortProfile(efforts))
    }

    pub fn constant(value: f64, params: &GameParams) -> Result<Self> {
        EffortProfile::new(vec![value; params.n], params)
    }

    /// Wraps values already produced inside the box by a solver or simulator.
    pub(crate) fn from_clipped(efforts: Vec<f64>) -> Self {
        EffortProfile(efforts)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for EffortProfile {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Joint effort and intent choice of all agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub efforts: EffortProfile,
    pub intents: IntentProfile,
}

impl StrategyProfile {
    pub fn new(efforts: EffortProfile, intents: IntentProfile) -> Result<Self> {
        if efforts.len() != intents.n() {
            return Err(Error::DimensionMismatch {
                expected: intents.n(),
                found: efforts.len(),
            });
        }
        Ok(StrategyProfile { efforts, intents })
    }

    pub fn n(&self) -> usize {
        self.intents.n()
    }

    pub fn network(&self) -> Network {
        realize_network(&self.intents)
    }

    fn check(&self, params: &GameParams) -> Result<()> {
        for found in [self.efforts.len(), self.intents.n()] {
            if found != params.n {
                return Err(Error::DimensionMismatch {
                    expected: params.n,
                    found,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffBreakdown {
    pub own_benefit: f64,
    pub effort_cost: f64,
    pub spillover: f64,
    pub link_cost: f64,
    pub total: f64,
}

impl PayoffBreakdown {
    pub fn compute(params: &GameParams, effort: f64, neighbor_sum: f64, initiated: usize) -> Self {
        let own_benefit = params.theta * effort;
        let effort_cost = params.beta / 2.0 * effort * effort;
        let spillover = params.lambda * effort * neighbor_sum;
        let link_cost = params.kappa * initiated as f64;
        PayoffBreakdown {
            own_benefit,
            effort_cost,
            spillover,
            link_cost,
            total: own_benefit - effort_cost + spillover - link_cost,
        }
    }

    pub fn zero() -> Self {
        PayoffBreakdown {
            own_benefit: 0.0,
            effort_cost: 0.0,
            spillover: 0.0,
            link_cost: 0.0,
            total: 0.0,
        }
    }
}

/// A link exists whenever at least one endpoint initiates it.
pub fn realize_network(intents: &IntentProfile) -> Network {
    let n = intents.n();
    let mut rows = intents.rows.clone();
    for i in 0..n {
        for j in bits(intents.rows[i]) {
            rows[j] |= 1 << i;
        }
    }
    Network { n, rows }
}

/// Payoff of agent `i` with neighbors taken from the realized network.
pub fn payoff(params: &GameParams, profile: &StrategyProfile, i: usize) -> Result<PayoffBreakdown> {
    profile.check(params)?;
    if i >= params.n {
        return Err(Error::AgentOutOfRange { index: i, n: params.n });
    }
    let network = profile.network();
    Ok(payoff_on(params, profile.efforts.as_slice(), &network, &profile.intents, i))
}

/// Payoffs of all agents.
pub fn payoffs(params: &GameParams, profile: &StrategyProfile) -> Result<Vec<PayoffBreakdown>> {
    profile.check(params)?;
    let network = profile.network();
    Ok((0..params.n)
        .map(|i| payoff_on(params, profile.efforts.as_slice(), &network, &profile.intents, i))
        .collect())
}

/// Payoff with a pre-realized network; no dimension checks.
pub(crate) fn payoff_on(
    params: &GameParams,
    efforts: &[f64],
    network: &Network,
    intents: &IntentProfile,
    i: usize,
) -> PayoffBreakdown {
    PayoffBreakdown::compute(
        params,
        efforts[i],
        network.neighbor_sum(i, efforts),
        intents.initiated_count(i),
    )
}

pub fn total_welfare(params: &GameParams, profile: &StrategyProfile) -> Result<f64> {
    Ok(payoffs(params, profile)?.iter().map(|p| p.total).sum())
}

/// `clip((theta + lambda * s) / beta)`.
pub fn best_response_effort(params: &GameParams, neighbor_effort_sum: f64) -> f64 {
    params.clip((params.theta + params.lambda * neighbor_effort_sum) / params.beta)
}

/// Net value of a link between two agents: `lambda x_i x_j - kappa`.
pub fn link_benefit(params: &GameParams, x_i: f64, x_j: f64) -> f64 {
    params.lambda * (x_i * x_j) - params.kappa
}

/// Architecture labels used by the treatment presets and frequency reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String")]
pub enum Architecture {
    Empty,
    Star,
    Complete,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Empty, Architecture::Star, Architecture::Complete];

    /// Canonical representative; the star is centered on agent 0.
    pub fn network(self, n: usize) -> Network {
        match self {
            Architecture::Empty => Network::empty(n),
            Architecture::Star => Network::star(n, 0),
            Architecture::Complete => Network::complete(n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Empty => "Empty",
            Architecture::Star => "Star",
            Architecture::Complete => "Complete",
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "empty" => Ok(Architecture::Empty),
            "star" => Ok(Architecture::Star),
            "complete" => Ok(Architecture::Complete),
            other => Err(Error::invalid("architecture", format!("unknown architecture `{other}`"))),
        }
    }
}

impl TryFrom<String> for Architecture {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

// JSON shapes: 1-based IDs on the wire.

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<NetworkJson> for Network {
    type Error = Error;

    fn try_from(json: NetworkJson) -> Result<Self> {
        let mut edges = Vec::with_capacity(json.edges.len());
        for (k, [i, j]) in json.edges.into_iter().enumerate() {
            if i == 0 || j == 0 {
                return Err(Error::format(format!("edges[{k}]"), "agent IDs are 1-based"));
            }
            edges.push((i - 1, j - 1));
        }
        Network::from_edges(json.n, &edges)
    }
}

impl From<Network> for NetworkJson {
    fn from(g: Network) -> Self {
        NetworkJson {
            n: g.n,
            edges: g.edges().into_iter().map(|(i, j)| [i + 1, j + 1]).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct IntentsJson {
    n: usize,
    intents: Vec<[usize; 2]>,
}

impl TryFrom<IntentsJson> for IntentProfile {
    type Error = Error;

    fn try_from(json: IntentsJson) -> Result<Self> {
        let mut pairs = Vec::with_capacity(json.intents.len());
        for (k, [i, j]) in json.intents.into_iter().enumerate() {
            if i == 0 || j == 0 {
                return Err(Error::format(format!("intents[{k}]"), "agent IDs are 1-based"));
            }
            pairs.push((i - 1, j - 1));
        }
        IntentProfile::from_pairs(json.n, &pairs)
    }
}

impl From<IntentProfile> for IntentsJson {
    fn from(p: IntentProfile) -> Self {
        IntentsJson {
            n: p.n,
            intents: p.pairs().into_iter().map(|(i, j)| [i + 1, j + 1]).collect(),
        }
    }
}

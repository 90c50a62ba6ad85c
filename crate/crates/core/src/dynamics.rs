//! Repeated-game simulator with behavioral effort and linking rules.
//!
//! Each period every agent chooses an effort and an intent row simultaneously
//! from the previous period's state. Period 1 has no lags; efforts come from
//! the rule's initial distribution and link rules read those initial efforts
//! against an empty lagged network.
//!
//! Random draws follow a fixed order so a seed fully determines a session:
//! per period, one initial or noise draw per agent in index order, then for
//! each agent in index order one uniform per partner for stochastic link rules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    best_response_effort, bits, mask_sum, payoff_on, realize_network, EffortProfile, GameParams,
    IntentProfile, Network, PayoffBreakdown,
};

/// Session random generator.
pub type SessionRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialEffort {
    Constant {
        value: f64,
    },
    /// Uniform over the effort bounds.
    Uniform,
    /// `theta / beta`, the best response with no neighbors.
    #[default]
    EmptyBestResponse,
}

/// `x_t = b0 x_{t-1} + b1 BR(neighbors_{t-1}) + b2 sum(non-neighbors_{t-1}) + noise`, clipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortRule {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub initial: InitialEffort,
}

impl EffortRule {
    pub fn new(b0: f64, b1: f64, b2: f64, noise_sd: f64) -> Result<Self> {
        let rule = EffortRule {
            b0,
            b1,
            b2,
            noise_sd,
            initial: InitialEffort::default(),
        };
        rule.validate()?;
        Ok(rule)
    }

    /// Pure myopic best response without noise.
    pub fn myopic() -> Self {
        EffortRule {
            b0: 0.0,
            b1: 1.0,
            b2: 0.0,
            noise_sd: 0.0,
            initial: InitialEffort::default(),
        }
    }

    /// Estimated coefficients of the treatment's effort model, without noise.
    pub fn preset(treatment: &str) -> Result<Self> {
        let (b0, b1, b2) = match treatment {
            "N5_LowCost" => (0.090, 0.966, 0.085),
            "N5_HighCost" => (0.161, 0.900, 0.036),
            "N9_LowCost1" => (0.089, 0.455, 0.019),
            "N9_HighCost" => (0.298, 0.763, 0.018),
            "N9_LowCost2" => (0.324, 0.376, 0.014),
            other => return Err(Error::UnknownTreatment(other.to_string())),
        };
        EffortRule::new(b0, b1, b2, 0.0)
    }

    pub fn with_noise(mut self, noise_sd: f64) -> Result<Self> {
        self.noise_sd = noise_sd;
        self.validate()?;
        Ok(self)
    }

    pub fn with_initial(mut self, initial: InitialEffort) -> Self {
        self.initial = initial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("b0", self.b0), ("b1", self.b1), ("b2", self.b2)] {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::invalid("noise_sd", "must be finite and non-negative"));
        }
        if let InitialEffort::Constant { value } = self.initial {
            if !value.is_finite() {
                return Err(Error::invalid("initial.value", "must be finite"));
            }
        }
        Ok(())
    }

    fn initial_effort(&self, params: &GameParams, rng: &mut SessionRng) -> f64 {
        match self.initial {
            InitialEffort::Constant { value } => params.clip(value),
            InitialEffort::Uniform => {
                let u: f64 = rng.random();
                params.effort_min + u * (params.effort_max - params.effort_min)
            }
            InitialEffort::EmptyBestResponse => params.isolated_effort(),
        }
    }
}

/// Log-odds coefficients of the link-choice logit. Regressors are the lagged
/// own intent toward the partner, the partner's and own lagged effort, whether
/// the partner ranked above or below the middle band of the group by lagged
/// effort, and the treatment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticCoefficients {
    pub intercept: f64,
    pub lagged_link: f64,
    pub partner_effort: f64,
    #[serde(default)]
    pub above_median: f64,
    #[serde(default)]
    pub below_median: f64,
    #[serde(default)]
    pub own_effort: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub linking_cost: f64,
    #[serde(default)]
    pub large_group: f64,
}

impl LogisticCoefficients {
    /// Estimates with own and partner effort, lambda, cost and group size.
    pub fn benefit_components() -> Self {
        LogisticCoefficients {
            intercept: 0.342f64.ln(),
            lagged_link: 2.800f64.ln(),
            partner_effort: 1.083f64.ln(),
            above_median: 0.0,
            below_median: 0.0,
            own_effort: 1.004f64.ln(),
            lambda: 5.827f64.ln(),
            linking_cost: 0.909f64.ln(),
            large_group: 0.623f64.ln(),
        }
    }

    /// Rank-based estimates from the sample of the treatment's group size,
    /// with that treatment's dummy folded into the intercept.
    pub fn relative_position(treatment: &str) -> Result<Self> {
        let (constant, lagged, partner, above, below, dummy) = match treatment {
            "N5_LowCost" => (0.873, 2.176, 1.035, 1.158, 0.903, 1.0),
            "N5_HighCost" => (0.873, 2.176, 1.035, 1.158, 0.903, 0.820),
            "N9_LowCost1" => (0.363, 2.993, 1.046, 1.326, 0.921, 1.0),
            "N9_HighCost" => (0.363, 2.993, 1.046, 1.326, 0.921, 0.755),
            "N9_LowCost2" => (0.363, 2.993, 1.046, 1.326, 0.921, 1.326),
            other => return Err(Error::UnknownTreatment(other.to_string())),
        };
        Ok(LogisticCoefficients {
            intercept: f64::ln(constant * dummy),
            lagged_link: f64::ln(lagged),
            partner_effort: f64::ln(partner),
            above_median: f64::ln(above),
            below_median: f64::ln(below),
            own_effort: 0.0,
            lambda: 0.0,
            linking_cost: 0.0,
            large_group: 0.0,
        })
    }

    /// Same as [`relative_position`](Self::relative_position) but from the
    /// pooled sample of all treatments.
    pub fn relative_position_pooled(treatment: &str) -> Result<Self> {
        let dummy = match treatment {
            "N5_LowCost" => 1.0,
            "N5_HighCost" => 0.828,
            "N9_LowCost1" => 0.547,
            "N9_HighCost" => 0.412,
            "N9_LowCost2" => 0.725,
            other => return Err(Error::UnknownTreatment(other.to_string())),
        };
        Ok(LogisticCoefficients {
            intercept: f64::ln(0.687 * dummy),
            lagged_link: 2.794f64.ln(),
            partner_effort: 1.047f64.ln(),
            above_median: 1.281f64.ln(),
            below_median: 0.926f64.ln(),
            own_effort: 0.0,
            lambda: 0.0,
            linking_cost: 0.0,
            large_group: 0.0,
        })
    }

    fn constant_part(&self, params: &GameParams) -> f64 {
        let large = if params.n > 5 { 1.0 } else { 0.0 };
        self.intercept + self.lambda * params.lambda + self.linking_cost * params.kappa + self.large_group * large
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.intercept,
            self.lagged_link,
            self.partner_effort,
            self.above_median,
            self.below_median,
            self.own_effort,
            self.lambda,
            self.linking_cost,
            self.large_group,
        ];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("coefficients", "must be finite"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkRule {
    /// Initiate to `j` when `lambda * x_i * x_j > kappa`, with `x_i` the agent's
    /// own myopic best response this period and `x_j` the partner's lag.
    BestResponseLinks,
    /// Initiate to `j` when `lambda * x_i * x_j > kappa` at lagged efforts.
    BenefitThreshold,
    /// Initiate to the `k` partners with the highest lagged effort.
    RankTop { k: usize },
    LogisticChoice(LogisticCoefficients),
    /// Always initiate to the listed agents (1-based IDs).
    Frozen { targets: Vec<usize> },
}

impl LinkRule {
    pub fn validate(&self, params: &GameParams, agent: usize) -> Result<()> {
        match self {
            LinkRule::RankTop { k } if *k >= params.n => Err(Error::invalid(
                "k",
                format!("{k} exceeds the {} possible partners", params.n - 1),
            )),
            LinkRule::Frozen { targets } => {
                for &t in targets {
                    if t == 0 || t > params.n || t == agent + 1 {
                        return Err(Error::invalid(
                            "targets",
                            format!("target {t} is not another agent of 1..={}", params.n),
                        ));
                    }
                }
                Ok(())
            }
            LinkRule::LogisticChoice(c) => c.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub effort_rule: EffortRule,
    pub link_rule: LinkRule,
}

impl AgentPolicy {
    /// Myopic effort on a fixed network; agent `i` initiates to every
    /// neighbor with a higher index so each link has one sponsor.
    pub fn frozen_on(network: &Network, effort_rule: EffortRule) -> Vec<AgentPolicy> {
        (0..network.n())
            .map(|i| AgentPolicy {
                effort_rule,
                link_rule: LinkRule::Frozen {
                    targets: network.neighbors(i).filter(|&j| j > i).map(|j| j + 1).collect(),
                },
            })
            .collect()
    }

    pub fn uniform(n: usize, policy: AgentPolicy) -> Vec<AgentPolicy> {
        vec![policy; n]
    }
}

/// Middle band of effort ranks used as the reference category: the median
/// rank for groups under 9, three ranks around the median otherwise.
pub fn median_band(n: usize) -> (usize, usize) {
    let width = if n < 9 { 1 } else { 3 };
    let lo = n.div_ceil(2).saturating_sub((width - 1) / 2).max(1);
    (lo, lo + width - 1)
}

/// Competition rank by effort, 1 for the highest; ties share the better rank.
pub fn effort_ranks(efforts: &[f64]) -> Vec<usize> {
    efforts
        .iter()
        .map(|&x| 1 + efforts.iter().filter(|&&y| y > x).count())
        .collect()
}

/// Effort for one agent and period.
pub fn step_effort(
    rule: &EffortRule,
    own_lag: f64,
    neighbor_lag_sum: f64,
    non_neighbor_lag_sum: f64,
    params: &GameParams,
    rng: &mut SessionRng,
) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let linear = rule.b0 * own_lag
        + rule.b1 * best_response_effort(params, neighbor_lag_sum)
        + rule.b2 * non_neighbor_lag_sum;
    params.clip(linear + rule.noise_sd * z)
}

/// What an agent sees when choosing links: last period's efforts, intents
/// and network. In period 1 the efforts are the initial draws and the
/// intents are absent.
#[derive(Debug, Clone, Copy)]
pub struct LinkState<'a> {
    pub agent: usize,
    pub efforts: &'a [f64],
    pub intents: Option<&'a IntentProfile>,
    pub network: &'a Network,
}

/// Intent row for one agent and period.
pub fn step_links(rule: &LinkRule, state: LinkState<'_>, params: &GameParams, rng: &mut SessionRng) -> u32 {
    let i = state.agent;
    let n = params.n;
    let x = state.efforts;
    let partners = (0..n).filter(move |&j| j != i);
    let mut row = 0u32;
    match rule {
        LinkRule::BestResponseLinks => {
            let own = best_response_effort(params, state.network.neighbor_sum(i, x));
            for j in partners {
                if params.lambda * own * x[j] > params.kappa {
                    row |= 1 << j;
                }
            }
        }
        LinkRule::BenefitThreshold => {
            for j in partners {
                if params.lambda * (x[i] * x[j]) - params.kappa > 0.0 {
                    row |= 1 << j;
                }
            }
        }
        LinkRule::RankTop { k } => {
            let mut order: Vec<usize> = partners.collect();
            // stable sort keeps lower indices first among equal efforts
            order.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
            for &j in order.iter().take(*k) {
                row |= 1 << j;
            }
        }
        LinkRule::LogisticChoice(c) => {
            let base = c.constant_part(params);
            let ranks = effort_ranks(x);
            let (lo, hi) = median_band(n);
            for j in partners {
                let z = match state.intents {
                    // period 1: no lags, intercept only
                    None => base,
                    Some(lagged) => {
                        let linked = if lagged.initiates(i, j) { 1.0 } else { 0.0 };
                        let above = if ranks[j] < lo { 1.0 } else { 0.0 };
                        let below = if ranks[j] > hi { 1.0 } else { 0.0 };
                        base + c.lagged_link * linked
                            + c.partner_effort * x[j]
                            + c.own_effort * x[i]
                            + c.above_median * above
                            + c.below_median * below
                    }
                };
                let p = 1.0 / (1.0 + (-z).exp());
                let u: f64 = rng.random();
                if u < p {
                    row |= 1 << j;
                }
            }
        }
        LinkRule::Frozen { targets } => {
            for &t in targets {
                row |= 1 << (t - 1);
            }
        }
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub intents: IntentProfile,
    pub network: Network,
    pub efforts: EffortProfile,
    pub payoffs: Vec<PayoffBreakdown>,
}

impl PeriodRecord {
    fn new(params: &GameParams, intents: IntentProfile, efforts: Vec<f64>) -> Self {
        let network = realize_network(&intents);
        let payoffs = (0..params.n)
            .map(|i| payoff_on(params, &efforts, &network, &intents, i))
            .collect();
        PeriodRecord {
            intents,
            network,
            efforts: EffortProfile::from_clipped(efforts),
            payoffs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: u64,
    pub params: GameParams,
    pub seed: u64,
    pub periods: Vec<PeriodRecord>,
}

impl SessionRecord {
    pub fn period_count(&self) -> usize {
        self.periods.len()
    }

    /// Checks stored networks and payoffs against recomputation from the
    /// stored decisions; payoffs must match bit for bit.
    pub fn replay_matches(&self) -> bool {
        self.periods.iter().all(|p| {
            let again = PeriodRecord::new(&self.params, p.intents.clone(), p.efforts.as_slice().to_vec());
            again.network == p.network
                && again
                    .payoffs
                    .iter()
                    .zip(&p.payoffs)
                    .all(|(a, b)| a.total.to_bits() == b.total.to_bits()
                        && a.own_benefit.to_bits() == b.own_benefit.to_bits()
                        && a.effort_cost.to_bits() == b.effort_cost.to_bits()
                        && a.spillover.to_bits() == b.spillover.to_bits()
                        && a.link_cost.to_bits() == b.link_cost.to_bits())
        })
    }
}

fn check_policies(params: &GameParams, policies: &[AgentPolicy]) -> Result<()> {
    params.validate()?;
    if policies.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            found: policies.len(),
        });
    }
    for (i, p) in policies.iter().enumerate() {
        p.effort_rule.validate()?;
        p.link_rule.validate(params, i)?;
    }
    Ok(())
}

/// Simulates one session of `periods` periods.
pub fn run_session(params: &GameParams, policies: &[AgentPolicy], periods: usize, seed: u64) -> Result<SessionRecord> {
    run_session_with_id(params, policies, periods, seed, 0)
}

fn run_session_with_id(
    params: &GameParams,
    policies: &[AgentPolicy],
    periods: usize,
    seed: u64,
    session_id: u64,
) -> Result<SessionRecord> {
    check_policies(params, policies)?;
    if periods == 0 {
        return Err(Error::invalid("periods", "must be at least 1"));
    }
    let n = params.n;
    let all = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
    let mut rng = SessionRng::seed_from_u64(seed);
    let mut records: Vec<PeriodRecord> = Vec::with_capacity(periods);

    let initial: Vec<f64> = policies
        .iter()
        .map(|p| p.effort_rule.initial_effort(params, &mut rng))
        .collect();
    let empty = Network::empty(n);
    let rows = (0..n)
        .map(|i| {
            let state = LinkState {
                agent: i,
                efforts: &initial,
                intents: None,
                network: &empty,
            };
            step_links(&policies[i].link_rule, state, params, &mut rng)
        })
        .collect();
    records.push(PeriodRecord::new(params, IntentProfile::from_rows(rows)?, initial));

    for _ in 1..periods {
        let last = records.last().expect("at least one period");
        let x = last.efforts.as_slice();
        let efforts: Vec<f64> = (0..n)
            .map(|i| {
                let nbrs = last.network.neighbor_mask(i);
                let others = all & !nbrs & !(1 << i);
                step_effort(
                    &policies[i].effort_rule,
                    x[i],
                    mask_sum(nbrs, x),
                    mask_sum(others, x),
                    params,
                    &mut rng,
                )
            })
            .collect();
        let rows = (0..n)
            .map(|i| {
                let state = LinkState {
                    agent: i,
                    efforts: x,
                    intents: Some(&last.intents),
                    network: &last.network,
                };
                step_links(&policies[i].link_rule, state, params, &mut rng)
            })
            .collect();
        records.push(PeriodRecord::new(params, IntentProfile::from_rows(rows)?, efforts));
    }
    Ok(SessionRecord {
        session_id,
        params: *params,
        seed,
        periods: records,
    })
}

/// Independent sessions in parallel; replication `r` uses seed `base_seed + r`
/// and session id `r`. Results are ordered by replication.
pub fn batch_run(
    params: &GameParams,
    policies: &[AgentPolicy],
    periods: usize,
    replications: usize,
    base_seed: u64,
) -> Result<Vec<SessionRecord>> {
    if replications == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    check_policies(params, policies)?;
    (0..replications as u64)
        .into_par_iter()
        .map(|r| run_session_with_id(params, policies, periods, base_seed.wrapping_add(r), r))
        .collect()
}

/// Effort-model regressors of agent `i` given the previous period: own lag,
/// best response to neighbors' lags, sum of non-neighbors' lags.
pub(crate) fn regressors(params: &GameParams, prev: &PeriodRecord, i: usize) -> [f64; 3] {
    let n = params.n;
    let x = prev.efforts.as_slice();
    let nbrs = prev.network.neighbor_mask(i);
    let all = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
    let others = all & !nbrs & !(1 << i);
    [
        x[i],
        best_response_effort(params, mask_sum(nbrs, x)),
        bits(others).map(|k| x[k]).sum(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params5(kappa: f64) -> GameParams {
        GameParams::new(10.0, 4.0, 0.4, kappa, 5).unwrap()
    }

    fn rng() -> SessionRng {
        SessionRng::seed_from_u64(7)
    }

    #[test]
    fn step_effort_examples() {
        let p = params5(1.0);
        let br = EffortRule::myopic();
        assert!((step_effort(&br, 10.0, 40.0, 0.0, &p, &mut rng()) - 6.5).abs() < 1e-12);

        let inertia = EffortRule::new(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(step_effort(&inertia, 7.0, 3.0, 9.0, &p, &mut rng()), 7.0);

        let preset = EffortRule::preset("N5_LowCost").unwrap();
        let x = 10.0 / 2.4;
        let out = step_effort(&preset, x, 4.0 * x, 0.0, &p, &mut rng());
        assert!((out - (0.090 + 0.966) * x).abs() < 1e-12);
        assert!((out - 4.400).abs() < 1e-3);
    }

    #[test]
    fn conformity_term_pushes_up() {
        let p = params5(1.0);
        let with = EffortRule::new(0.2, 0.7, 0.05, 0.0).unwrap();
        let without = EffortRule::new(0.2, 0.7, 0.0, 0.0).unwrap();
        for (own, nb, non) in [(3.0, 5.0, 7.0), (0.0, 0.0, 0.0), (9.0, 12.0, 1.0)] {
            assert!(step_effort(&with, own, nb, non, &p, &mut rng()) >= step_effort(&without, own, nb, non, &p, &mut rng()));
        }
    }

    #[test]
    fn benefit_threshold_links() {
        let p = GameParams::new(10.0, 4.0, 0.25, 1.0, 3).unwrap();
        let x = [6.1, 10.6, 2.1];
        let g = Network::empty(3);
        let state = LinkState {
            agent: 0,
            efforts: &x,
            intents: None,
            network: &g,
        };
        assert_eq!(step_links(&LinkRule::BenefitThreshold, state, &p, &mut rng()), 0b110);

        let zeros = [0.0; 3];
        let state = LinkState { efforts: &zeros, ..state };
        assert_eq!(step_links(&LinkRule::BenefitThreshold, state, &p, &mut rng()), 0);
    }

    #[test]
    fn rank_top_breaks_ties_by_index() {
        let p = params5(1.0);
        let x = [9.0, 5.0, 3.0, 3.0, 1.0];
        let g = Network::empty(5);
        let state = LinkState {
            agent: 0,
            efforts: &x,
            intents: None,
            network: &g,
        };
        assert_eq!(step_links(&LinkRule::RankTop { k: 2 }, state, &p, &mut rng()), 0b0110);
        assert_eq!(step_links(&LinkRule::RankTop { k: 4 }, state, &p, &mut rng()), 0b11110);
    }

    #[test]
    fn median_bands() {
        assert_eq!(median_band(5), (3, 3));
        assert_eq!(median_band(9), (4, 6));
        assert_eq!(effort_ranks(&[1.0, 5.0, 5.0, 2.0]), vec![4, 1, 1, 3]);
    }

    #[test]
    fn logistic_presets_are_log_odds() {
        let c = LogisticCoefficients::benefit_components();
        assert!((c.lagged_link.exp() - 2.800).abs() < 1e-12);
        assert!((c.intercept.exp() - 0.342).abs() < 1e-12);
        let c = LogisticCoefficients::relative_position("N9_HighCost").unwrap();
        assert!((c.intercept.exp() - 0.363 * 0.755).abs() < 1e-12);
        assert!(LogisticCoefficients::relative_position("N4").is_err());
    }

    #[test]
    fn myopic_dynamics_on_frozen_complete_network() {
        let p = params5(1.0);
        let policies = AgentPolicy::frozen_on(&Network::complete(5), EffortRule::myopic());
        let rec = run_session(&p, &policies, 200, 1).unwrap();
        let last = rec.periods.last().unwrap();
        assert_eq!(last.network, Network::complete(5));
        assert!(last.efforts.as_slice().iter().all(|&x| (x - 10.0 / 2.4).abs() < 1e-6));
        assert!(rec.replay_matches());
    }

    #[test]
    fn single_period_is_cold_start() {
        let p = params5(1.0);
        let policy = AgentPolicy {
            effort_rule: EffortRule::myopic(),
            link_rule: LinkRule::BenefitThreshold,
        };
        let rec = run_session(&p, &AgentPolicy::uniform(5, policy), 1, 3).unwrap();
        assert_eq!(rec.period_count(), 1);
        let first = &rec.periods[0];
        assert!(first.efforts.as_slice().iter().all(|&x| x == 2.5));
        // 0.4 * 2.5 * 2.5 = 2.5 > 1: everyone links to everyone
        assert_eq!(first.intents.total_initiations(), 20);
    }

    #[test]
    fn seeds_determine_sessions() {
        let p = params5(1.0);
        let policy = AgentPolicy {
            effort_rule: EffortRule::preset("N5_HighCost").unwrap().with_noise(0.5).unwrap(),
            link_rule: LinkRule::LogisticChoice(LogisticCoefficients::relative_position("N5_HighCost").unwrap()),
        };
        let policies = AgentPolicy::uniform(5, policy);
        let a = run_session(&p, &policies, 30, 11).unwrap();
        let b = run_session(&p, &policies, 30, 11).unwrap();
        let c = run_session(&p, &policies, 30, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn batch_seeds_and_noiseless_replications() {
        let p = params5(1.0);
        let policy = AgentPolicy {
            effort_rule: EffortRule::preset("N5_LowCost").unwrap(),
            link_rule: LinkRule::RankTop { k: 2 },
        };
        let policies = AgentPolicy::uniform(5, policy);
        let batch = batch_run(&p, &policies, 10, 3, 100).unwrap();
        assert_eq!(batch.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![100, 101, 102]);
        assert_eq!(batch[0].periods, batch[2].periods);
        assert!(batch_run(&p, &policies, 10, 0, 100).is_err());
    }

    #[test]
    fn invalid_policies_are_rejected() {
        let p = params5(1.0);
        let bad = AgentPolicy {
            effort_rule: EffortRule::myopic(),
            link_rule: LinkRule::RankTop { k: 5 },
        };
        assert!(run_session(&p, &AgentPolicy::uniform(5, bad), 3, 0).is_err());
        assert!(EffortRule::new(0.0, 1.0, 0.0, -1.0).is_err());
        assert!(run_session(&p, &AgentPolicy::uniform(4, AgentPolicy {
            effort_rule: EffortRule::myopic(),
            link_rule: LinkRule::BenefitThreshold,
        }), 3, 0).is_err());
    }
}

//! Outcome metrics over simulated sessions and pooled estimation of the
//! effort model.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{regressors, PeriodRecord, SessionRecord};
use crate::equilibria::{complete_network_benchmark, nash_efforts};
use crate::error::{Error, Result};
use crate::model::{bits, Architecture, GameParams, Network};
use crate::structure::{distance_to_star, link_distance, stats};

/// Period range, 1-based and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    All,
    Last(usize),
    Range(usize, usize),
}

impl Window {
    pub const LAST10: Window = Window::Last(10);

    /// Concrete `(first, last)` for a session of `periods` periods.
    pub fn resolve(self, periods: usize) -> Result<(usize, usize)> {
        let (a, b) = match self {
            Window::All => (1, periods),
            Window::Last(k) => {
                if k == 0 || k > periods {
                    return Err(Error::InvalidWindow(format!(
                        "last {k} periods of a {periods}-period session"
                    )));
                }
                (periods - k + 1, periods)
            }
            Window::Range(a, b) => (a, b),
        };
        if a == 0 || a > b || b > periods {
            return Err(Error::InvalidWindow(format!(
                "periods {a}-{b} outside 1-{periods}"
            )));
        }
        Ok((a, b))
    }

    fn slice(self, record: &SessionRecord) -> Result<&[PeriodRecord]> {
        let (a, b) = self.resolve(record.periods.len())?;
        Ok(&record.periods[a - 1..b])
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::All => write!(f, "all"),
            Window::Last(k) => write!(f, "last{k}"),
            Window::Range(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidWindow(format!("cannot parse `{s}` (use all, lastK or a-b)"));
        let t = s.trim().to_ascii_lowercase();
        if t == "all" {
            return Ok(Window::All);
        }
        if let Some(k) = t.strip_prefix("last") {
            return k.parse().map(Window::Last).map_err(|_| bad());
        }
        match t.split_once('-') {
            Some((a, b)) => Ok(Window::Range(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            )),
            None => t.parse().map(|a| Window::Range(a, a)).map_err(|_| bad()),
        }
    }
}

impl Serialize for Window {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_records(records: &[SessionRecord]) -> Result<&GameParams> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidWindow("no records to analyze".into()))?;
    for r in records {
        if r.params.n != first.params.n {
            return Err(Error::DimensionMismatch {
                expected: first.params.n,
                found: r.params.n,
            });
        }
    }
    Ok(&first.params)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Sample standard deviation; 0 for fewer than two values.
fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values.iter().copied());
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub avg_effort: f64,
    pub avg_payoff: f64,
    /// `avg_payoff` over the complete-network equilibrium group average.
    pub relative_efficiency: f64,
    pub benchmark_payoff: f64,
    pub window: (usize, usize),
}

/// Averages over agents, periods in the window and records. The benchmark is
/// the complete-network equilibrium payoff under `params`.
pub fn efficiency_report(records: &[SessionRecord], params: &GameParams, window: Window) -> Result<EfficiencyReport> {
    check_records(records)?;
    let benchmark = complete_network_benchmark(params)?;
    let mut efforts = Vec::new();
    let mut payoffs = Vec::new();
    let mut resolved = (0, 0);
    for r in records {
        resolved = window.resolve(r.periods.len())?;
        for p in window.slice(r)? {
            efforts.push(p.efforts.mean());
            payoffs.push(mean(p.payoffs.iter().map(|b| b.total)));
        }
    }
    let avg_payoff = mean(payoffs);
    Ok(EfficiencyReport {
        avg_effort: mean(efforts),
        avg_payoff,
        relative_efficiency: avg_payoff / benchmark,
        benchmark_payoff: benchmark,
        window: resolved,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEntry {
    pub architecture: Architecture,
    pub exact: f64,
    pub within_two: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub window: (usize, usize),
    pub periods: usize,
    pub entries: Vec<FrequencyEntry>,
}

impl FrequencyReport {
    pub fn get(&self, architecture: Architecture) -> &FrequencyEntry {
        self.entries
            .iter()
            .find(|e| e.architecture == architecture)
            .expect("every architecture is reported")
    }
}

/// Link distance to the nearest instance of `architecture`; stars may be
/// centered anywhere.
pub fn architecture_distance(network: &Network, architecture: Architecture) -> usize {
    match architecture {
        Architecture::Star => distance_to_star(network),
        other => link_distance(network, &other.network(network.n())).expect("same size"),
    }
}

/// Share of window periods whose network is each architecture, exactly and
/// up to two links.
pub fn frequency_report(records: &[SessionRecord], window: Window) -> Result<FrequencyReport> {
    check_records(records)?;
    let mut counts = [(0usize, 0usize); 3];
    let mut periods = 0;
    let mut resolved = (0, 0);
    for r in records {
        resolved = window.resolve(r.periods.len())?;
        for p in window.slice(r)? {
            periods += 1;
            for (slot, arch) in counts.iter_mut().zip(Architecture::ALL) {
                let d = architecture_distance(&p.network, arch);
                slot.0 += (d == 0) as usize;
                slot.1 += (d <= 2) as usize;
            }
        }
    }
    let entries = Architecture::ALL
        .iter()
        .zip(counts)
        .map(|(&architecture, (exact, near))| FrequencyEntry {
            architecture,
            exact: exact as f64 / periods as f64,
            within_two: near as f64 / periods as f64,
        })
        .collect();
    Ok(FrequencyReport {
        window: resolved,
        periods,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDiagnostics {
    /// Absent links with `lambda x_i x_j > kappa`, per period.
    pub avg_profitable_missing: f64,
    /// Those as a share of absent links.
    pub profitable_missing_share: f64,
    /// Initiated links with `lambda x_i x_j < kappa`, per period; counted per
    /// sponsor, so a reciprocated link can count twice.
    pub avg_unprofitable_existing: f64,
    /// Those as a share of initiations.
    pub unprofitable_existing_share: f64,
    /// Links initiated by both endpoints as a share of realized links.
    pub reciprocated_share: f64,
}

/// Per-period link counts and shares, averaged over the window. Shares skip
/// periods where their denominator is zero.
pub fn link_diagnostics(record: &SessionRecord, window: Window) -> Result<LinkDiagnostics> {
    let params = &record.params;
    let n = params.n;
    let mut missing_counts = Vec::new();
    let mut missing_shares = Vec::new();
    let mut bad_counts = Vec::new();
    let mut bad_shares = Vec::new();
    let mut recip_shares = Vec::new();
    for p in window.slice(record)? {
        let x = p.efforts.as_slice();
        let benefit = |i: usize, j: usize| params.lambda * (x[i] * x[j]);
        let (mut missing, mut profitable) = (0usize, 0usize);
        for i in 0..n {
            for j in i + 1..n {
                if !p.network.has_link(i, j) {
                    missing += 1;
                    profitable += (benefit(i, j) > params.kappa) as usize;
                }
            }
        }
        let (mut initiated, mut unprofitable) = (0usize, 0usize);
        for i in 0..n {
            for j in bits(p.intents.row(i)) {
                initiated += 1;
                unprofitable += (benefit(i, j) < params.kappa) as usize;
            }
        }
        missing_counts.push(profitable as f64);
        if missing > 0 {
            missing_shares.push(profitable as f64 / missing as f64);
        }
        bad_counts.push(unprofitable as f64);
        if initiated > 0 {
            bad_shares.push(unprofitable as f64 / initiated as f64);
        }
        let links = p.network.link_count();
        if links > 0 {
            recip_shares.push(p.intents.reciprocated_count() as f64 / links as f64);
        }
    }
    Ok(LinkDiagnostics {
        avg_profitable_missing: mean(missing_counts),
        profitable_missing_share: mean(missing_shares),
        avg_unprofitable_existing: mean(bad_counts),
        unprofitable_existing_share: mean(bad_shares),
        reciprocated_share: mean(recip_shares),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub residual_sum_squares: f64,
    pub observation_count: usize,
}

/// Pooled least squares without intercept of effort on own lagged effort, the
/// best response to neighbors' lagged efforts, and the sum of non-neighbors'
/// lagged efforts, over every agent and every period after the first.
pub fn fit_effort_model(records: &[SessionRecord]) -> Result<FitResult> {
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    let mut rows: Vec<([f64; 3], f64)> = Vec::new();
    for r in records {
        for pair in r.periods.windows(2) {
            for i in 0..r.params.n {
                let z = regressors(&r.params, &pair[0], i);
                let y = pair[1].efforts[i];
                let v = Vector3::from(z);
                xtx += v * v.transpose();
                xty += v * y;
                rows.push((z, y));
            }
        }
    }
    if rows.len() < 3 {
        return Err(Error::RankDeficient);
    }
    let eig = SymmetricEigen::new(xtx).eigenvalues;
    let largest = eig.max();
    if !(largest > 0.0) || eig.min() <= largest * 1e-12 {
        return Err(Error::RankDeficient);
    }
    let b = xtx.lu().solve(&xty).ok_or(Error::RankDeficient)?;
    let rss = rows
        .iter()
        .map(|(z, y)| (y - (b[0] * z[0] + b[1] * z[1] + b[2] * z[2])).powi(2))
        .sum();
    Ok(FitResult {
        b0: b[0],
        b1: b[1],
        b2: b[2],
        residual_sum_squares: rss,
        observation_count: rows.len(),
    })
}

/// Network, effort and payoff measures of one period or their averages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryFields {
    pub link_count: f64,
    pub link_fraction: f64,
    pub avg_degree: f64,
    pub min_degree: f64,
    pub max_degree: f64,
    pub clustering: f64,
    pub avg_effort: f64,
    pub avg_payoff: f64,
    pub relative_efficiency: f64,
    /// Average equilibrium effort on the period's realized network.
    pub nash_effort_on_network: f64,
}

impl SummaryFields {
    pub const NAMES: [&'static str; 10] = [
        "link_count",
        "link_fraction",
        "avg_degree",
        "min_degree",
        "max_degree",
        "clustering",
        "avg_effort",
        "avg_payoff",
        "relative_efficiency",
        "nash_effort_on_network",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.link_count,
            self.link_fraction,
            self.avg_degree,
            self.min_degree,
            self.max_degree,
            self.clustering,
            self.avg_effort,
            self.avg_payoff,
            self.relative_efficiency,
            self.nash_effort_on_network,
        ]
    }

    fn from_values(v: [f64; 10]) -> Self {
        SummaryFields {
            link_count: v[0],
            link_fraction: v[1],
            avg_degree: v[2],
            min_degree: v[3],
            max_degree: v[4],
            clustering: v[5],
            avg_effort: v[6],
            avg_payoff: v[7],
            relative_efficiency: v[8],
            nash_effort_on_network: v[9],
        }
    }

    fn mean_and_sd(rows: &[SummaryFields]) -> (SummaryFields, SummaryFields) {
        let mut means = [0.0; 10];
        let mut sds = [0.0; 10];
        for k in 0..10 {
            let col: Vec<f64> = rows.iter().map(|r| r.values()[k]).collect();
            means[k] = mean(col.iter().copied());
            sds[k] = std_dev(&col);
        }
        (SummaryFields::from_values(means), SummaryFields::from_values(sds))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub session_id: u64,
    /// Means over the window's periods.
    pub mean: SummaryFields,
    /// Standard deviations over the window's periods.
    pub std_dev: SummaryFields,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentSummary {
    pub window: (usize, usize),
    pub groups: Vec<GroupSummary>,
    /// Mean of the group means.
    pub mean: SummaryFields,
    /// Standard deviation of the group means across groups.
    pub std_dev: SummaryFields,
}

fn period_fields(params: &GameParams, benchmark: f64, p: &PeriodRecord) -> Result<SummaryFields> {
    let s = stats(&p.network);
    let avg_payoff = mean(p.payoffs.iter().map(|b| b.total));
    let nash = nash_efforts(params, &p.network)?.efforts.mean();
    Ok(SummaryFields {
        link_count: s.link_count as f64,
        link_fraction: s.link_fraction,
        avg_degree: s.avg_degree,
        min_degree: s.min_degree as f64,
        max_degree: s.max_degree as f64,
        clustering: s.clustering,
        avg_effort: p.efforts.mean(),
        avg_payoff,
        relative_efficiency: avg_payoff / benchmark,
        nash_effort_on_network: nash,
    })
}

/// Each group's measures are averaged over the window, then summarized across
/// groups. Equilibrium efforts on the realized network are averaged over
/// agents within a period, then over periods.
pub fn treatment_summary(records: &[SessionRecord], params: &GameParams, window: Window) -> Result<TreatmentSummary> {
    check_records(records)?;
    let benchmark = complete_network_benchmark(params)?;
    let mut groups = Vec::with_capacity(records.len());
    let mut resolved = (0, 0);
    for r in records {
        resolved = window.resolve(r.periods.len())?;
        let rows = window
            .slice(r)?
            .iter()
            .map(|p| period_fields(&r.params, benchmark, p))
            .collect::<Result<Vec<_>>>()?;
        let (mean, std_dev) = SummaryFields::mean_and_sd(&rows);
        groups.push(GroupSummary {
            session_id: r.session_id,
            mean,
            std_dev,
        });
    }
    let group_means: Vec<SummaryFields> = groups.iter().map(|g| g.mean).collect();
    let (mean, std_dev) = SummaryFields::mean_and_sd(&group_means);
    Ok(TreatmentSummary {
        window: resolved,
        groups,
        mean,
        std_dev,
    })
}

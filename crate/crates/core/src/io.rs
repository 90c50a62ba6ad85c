//! Scenario configuration and session persistence.
//!
//! A session is stored as `session_NNNN.csv`, one row per agent and period,
//! next to a `session_NNNN.json` sidecar with the parameters, seed and format
//! version. Agent IDs in files are 1-based and floats use the shortest
//! representation that parses back to the same value.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::TreatmentSummary;
use crate::dynamics::{
    AgentPolicy, EffortRule, InitialEffort, LinkRule, LogisticCoefficients, PeriodRecord, SessionRecord,
};
use crate::error::{Error, Result};
use crate::model::{
    realize_network, Architecture, EffortProfile, GameParams, IntentProfile, Network, PayoffBreakdown,
};
use crate::treatment::Treatment;

pub const FORMAT_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 12] = [
    "session_id",
    "period",
    "agent",
    "effort",
    "initiated_ids",
    "neighbor_ids",
    "degree",
    "payoff_total",
    "own_benefit",
    "effort_cost",
    "spillover",
    "link_cost",
];

/// Field-by-field overrides of a treatment's parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub theta: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub n: Option<usize>,
    pub effort_min: Option<f64>,
    pub effort_max: Option<f64>,
}

impl ParamOverrides {
    fn apply(&self, base: Option<GameParams>) -> Result<GameParams> {
        let missing = |field: &str| Error::invalid(format!("params.{field}"), "required without a treatment");
        let p = GameParams {
            theta: self.theta.or(base.map(|b| b.theta)).ok_or_else(|| missing("theta"))?,
            beta: self.beta.or(base.map(|b| b.beta)).ok_or_else(|| missing("beta"))?,
            lambda: self.lambda.or(base.map(|b| b.lambda)).ok_or_else(|| missing("lambda"))?,
            kappa: self.kappa.or(base.map(|b| b.kappa)).ok_or_else(|| missing("kappa"))?,
            n: self.n.or(base.map(|b| b.n)).ok_or_else(|| missing("n"))?,
            effort_min: self.effort_min.or(base.map(|b| b.effort_min)).unwrap_or(0.0),
            effort_max: self.effort_max.or(base.map(|b| b.effort_max)).unwrap_or(20.0),
        };
        p.validate().map_err(|e| prefix("params", e))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EffortSpec {
    /// Estimated coefficients of a treatment, by default the scenario's.
    Preset {
        treatment: Option<String>,
        #[serde(default)]
        noise_sd: f64,
        #[serde(default)]
        initial: InitialEffort,
    },
    Myopic {
        #[serde(default)]
        noise_sd: f64,
        #[serde(default)]
        initial: InitialEffort,
    },
    Custom {
        b0: f64,
        b1: f64,
        b2: f64,
        #[serde(default)]
        noise_sd: f64,
        #[serde(default)]
        initial: InitialEffort,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkSpec {
    BestResponseLinks,
    BenefitThreshold,
    RankTop { k: usize },
    /// Rank-based logit estimates of a treatment, by default the scenario's.
    LogisticPreset {
        treatment: Option<String>,
        #[serde(default)]
        pooled: bool,
    },
    /// Logit estimates on link-benefit components.
    LogisticBenefit,
    LogisticChoice(LogisticCoefficients),
    Frozen { targets: Vec<usize> },
    /// Every agent keeps its links of a fixed architecture, each link
    /// sponsored by its lower-indexed endpoint.
    FrozenNetwork { architecture: Architecture },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    #[serde(default)]
    pub effort: EffortSpec,
    #[serde(default)]
    pub links: LinkSpec,
}

impl PolicySpec {
    pub fn resolve(&self, treatment: Option<&str>, params: &GameParams, agent: usize) -> Result<AgentPolicy> {
        let need = |given: &Option<String>, field: &str| -> Result<String> {
            given
                .clone()
                .or(treatment.map(str::to_string))
                .ok_or_else(|| Error::invalid(field, "no treatment to take the preset from"))
        };
        let effort_rule = match &self.effort {
            EffortSpec::Preset {
                treatment: t,
                noise_sd,
                initial,
            } => EffortRule::preset(&need(t, "effort.treatment")?)?
                .with_noise(*noise_sd)
                .map_err(|e| prefix("effort", e))?
                .with_initial(*initial),
            EffortSpec::Myopic { noise_sd, initial } => EffortRule::myopic()
                .with_noise(*noise_sd)
                .map_err(|e| prefix("effort", e))?
                .with_initial(*initial),
            EffortSpec::Custom {
                b0,
                b1,
                b2,
                noise_sd,
                initial,
            } => EffortRule::new(*b0, *b1, *b2, *noise_sd)
                .map_err(|e| prefix("effort", e))?
                .with_initial(*initial),
        };
        effort_rule.validate().map_err(|e| prefix("effort", e))?;
        let link_rule = match &self.links {
            LinkSpec::BestResponseLinks => LinkRule::BestResponseLinks,
            LinkSpec::BenefitThreshold => LinkRule::BenefitThreshold,
            LinkSpec::RankTop { k } => LinkRule::RankTop { k: *k },
            LinkSpec::LogisticPreset { treatment: t, pooled } => {
                let name = need(t, "links.treatment")?;
                LinkRule::LogisticChoice(if *pooled {
                    LogisticCoefficients::relative_position_pooled(&name)?
                } else {
                    LogisticCoefficients::relative_position(&name)?
                })
            }
            LinkSpec::LogisticBenefit => LinkRule::LogisticChoice(LogisticCoefficients::benefit_components()),
            LinkSpec::LogisticChoice(c) => LinkRule::LogisticChoice(*c),
            LinkSpec::Frozen { targets } => LinkRule::Frozen {
                targets: targets.clone(),
            },
            LinkSpec::FrozenNetwork { architecture } => {
                let g = architecture.network(params.n);
                LinkRule::Frozen {
                    targets: g.neighbors(agent).filter(|&j| j > agent).map(|j| j + 1).collect(),
                }
            }
        };
        link_rule.validate(params, agent).map_err(|e| prefix("links", e))?;
        Ok(AgentPolicy {
            effort_rule,
            link_rule,
        })
    }
}

impl Default for EffortSpec {
    fn default() -> Self {
        EffortSpec::Preset {
            treatment: None,
            noise_sd: 0.0,
            initial: InitialEffort::default(),
        }
    }
}

impl Default for LinkSpec {
    fn default() -> Self {
        LinkSpec::LogisticPreset {
            treatment: None,
            pooled: false,
        }
    }
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOverride {
    /// 1-based agent ID.
    pub id: usize,
    #[serde(flatten)]
    pub policy: PolicySpec,
}

/// Scenario file as written by users.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub treatment: Option<String>,
    #[serde(default)]
    pub params: ParamOverrides,
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub agents: Vec<AgentOverride>,
    pub periods: Option<usize>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub treatment: Option<String>,
    pub params: GameParams,
    pub policies: Vec<AgentPolicy>,
    pub periods: usize,
    pub replications: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn prefix(path: &str, e: Error) -> Error {
    match e {
        Error::InvalidParams { field, reason } => Error::InvalidParams {
            field: format!("{path}.{field}"),
            reason,
        },
        other => other,
    }
}

impl ScenarioFile {
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let base = match &self.treatment {
            Some(name) => Some(Treatment::by_name(name)?.params),
            None => None,
        };
        let params = self.params.apply(base)?;
        let name = self.treatment.as_deref();
        let default = self.policy.clone().unwrap_or_default();
        let mut policies = (0..params.n)
            .map(|i| default.resolve(name, &params, i).map_err(|e| prefix("policy", e)))
            .collect::<Result<Vec<_>>>()?;
        for (k, o) in self.agents.iter().enumerate() {
            let path = format!("agents[{k}]");
            if o.id == 0 || o.id > params.n {
                return Err(Error::invalid(
                    format!("{path}.id"),
                    format!("{} is not an agent of 1..={}", o.id, params.n),
                ));
            }
            policies[o.id - 1] = o.policy.resolve(name, &params, o.id - 1).map_err(|e| prefix(&path, e))?;
        }
        let periods = self.periods.unwrap_or(30);
        if periods == 0 {
            return Err(Error::invalid("periods", "must be at least 1"));
        }
        let replications = self.replications.unwrap_or(1);
        if replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        Ok(ScenarioConfig {
            treatment: self.treatment.clone(),
            params,
            policies,
            periods,
            replications,
            seed: self.seed.unwrap_or(0),
            out: self.out.clone(),
        })
    }
}

/// Parses a scenario from TOML, or JSON when `json` is set.
pub fn parse_scenario(text: &str, json: bool, origin: &str) -> Result<ScenarioConfig> {
    let file: ScenarioFile = if json {
        serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?
    };
    file.resolve()
}

/// Reads a scenario file; `.json` files are parsed as JSON, anything else as TOML.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_scenario(&text, json, &path.display().to_string())
}

/// Reads a policy file: a single policy table, applied to every agent.
pub fn load_policy(path: &Path, treatment: Option<&str>, params: &GameParams) -> Result<Vec<AgentPolicy>> {
    let text = fs::read_to_string(path)?;
    let origin = path.display().to_string();
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let spec: PolicySpec = if json {
        serde_json::from_str(&text).map_err(|e| Error::format(&origin, e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| Error::format(&origin, e.to_string()))?
    };
    (0..params.n).map(|i| spec.resolve(treatment, params, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    session_id: u64,
    seed: u64,
    periods: usize,
    params: GameParams,
}

fn ids(mask: u32) -> String {
    crate::model::bits(mask)
        .map(|j| (j + 1).to_string())
        .collect::<Vec<_>>()
        .join(":")
}

fn parse_ids(field: &str, n: usize) -> std::result::Result<u32, String> {
    if field.is_empty() {
        return Ok(0);
    }
    let mut mask = 0u32;
    for part in field.split(':') {
        let id: usize = part.parse().map_err(|_| format!("bad agent ID `{part}`"))?;
        if id == 0 || id > n {
            return Err(format!("agent ID {id} outside 1..={n}"));
        }
        mask |= 1 << (id - 1);
    }
    Ok(mask)
}

pub fn record_stem(session_id: u64) -> String {
    format!("session_{session_id:04}")
}

/// Writes the CSV and sidecar of `record` into `dir`; returns the CSV path.
pub fn write_record(record: &SessionRecord, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let stem = record_stem(record.session_id);
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(CSV_HEADER)?;
    for (t, p) in record.periods.iter().enumerate() {
        for i in 0..record.params.n {
            let b = &p.payoffs[i];
            w.write_record([
                record.session_id.to_string(),
                (t + 1).to_string(),
                (i + 1).to_string(),
                p.efforts[i].to_string(),
                ids(p.intents.row(i)),
                ids(p.network.neighbor_mask(i)),
                p.network.degree(i).to_string(),
                b.total.to_string(),
                b.own_benefit.to_string(),
                b.effort_cost.to_string(),
                b.spillover.to_string(),
                b.link_cost.to_string(),
            ])?;
        }
    }
    w.flush()?;
    let sidecar = Sidecar {
        format_version: FORMAT_VERSION,
        session_id: record.session_id,
        seed: record.seed,
        periods: record.periods.len(),
        params: record.params,
    };
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(csv_path)
}

/// Reads a session from its CSV path; the sidecar is the same stem with `.json`.
pub fn read_record(csv_path: &Path) -> Result<SessionRecord> {
    let origin = csv_path.display().to_string();
    let side_path = csv_path.with_extension("json");
    let side_text = fs::read_to_string(&side_path)?;
    let raw: serde_json::Value = serde_json::from_str(&side_text)?;
    let version = raw.get("format_version").and_then(|v| v.as_u64()).ok_or_else(|| {
        Error::format(side_path.display().to_string(), "missing format_version")
    })?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::SchemaVersion {
            found: version as u32,
            expected: FORMAT_VERSION,
        });
    }
    let side: Sidecar = serde_json::from_value(raw)?;
    side.params.validate()?;
    let n = side.params.n;

    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(csv_path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::format(&origin, "unexpected header"));
    }
    let expected_rows = side.periods * n;
    let mut efforts = vec![vec![0.0; n]; side.periods];
    let mut intents = vec![vec![0u32; n]; side.periods];
    let mut neighbors = vec![vec![0u32; n]; side.periods];
    let mut payoffs = vec![vec![PayoffBreakdown::zero(); n]; side.periods];
    let mut rows = 0usize;
    for (k, row) in reader.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| Error::format(&origin, format!("row {line}: {e}")))?;
        let bad = |msg: String| Error::format(&origin, format!("row {line}: {msg}"));
        if row.len() != CSV_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", CSV_HEADER.len(), row.len())));
        }
        let float = |c: usize| -> Result<f64> {
            row[c]
                .parse::<f64>()
                .map_err(|_| bad(format!("{} `{}` is not a number", CSV_HEADER[c], &row[c])))
        };
        let int = |c: usize| -> Result<usize> {
            row[c]
                .parse::<usize>()
                .map_err(|_| bad(format!("{} `{}` is not an integer", CSV_HEADER[c], &row[c])))
        };
        let (sid, t, i) = (int(0)?, int(1)?, int(2)?);
        if sid as u64 != side.session_id || t == 0 || t > side.periods || i == 0 || i > n {
            return Err(bad(format!("session {sid}, period {t}, agent {i} is out of range")));
        }
        if (t - 1) * n + (i - 1) != k {
            return Err(bad(format!("period {t}, agent {i} is out of order")));
        }
        efforts[t - 1][i - 1] = float(3)?;
        intents[t - 1][i - 1] = parse_ids(&row[4], n).map_err(bad)?;
        neighbors[t - 1][i - 1] = parse_ids(&row[5], n).map_err(bad)?;
        payoffs[t - 1][i - 1] = PayoffBreakdown {
            total: float(7)?,
            own_benefit: float(8)?,
            effort_cost: float(9)?,
            spillover: float(10)?,
            link_cost: float(11)?,
        };
        rows += 1;
    }
    if rows != expected_rows {
        return Err(Error::format(
            &origin,
            format!("truncated after row {}: expected {expected_rows} data rows, found {rows}", rows + 1),
        ));
    }
    let mut periods = Vec::with_capacity(side.periods);
    for t in 0..side.periods {
        let ip = IntentProfile::from_rows(std::mem::take(&mut intents[t]))?;
        let network = Network::from_rows(std::mem::take(&mut neighbors[t]))
            .map_err(|e| Error::format(&origin, format!("period {}: {e}", t + 1)))?;
        if network != realize_network(&ip) {
            return Err(Error::format(
                &origin,
                format!("period {}: neighbor lists disagree with the initiated links", t + 1),
            ));
        }
        periods.push(PeriodRecord {
            intents: ip,
            network,
            efforts: EffortProfile::new(std::mem::take(&mut efforts[t]), &side.params)?,
            payoffs: std::mem::take(&mut payoffs[t]),
        });
    }
    Ok(SessionRecord {
        session_id: side.session_id,
        params: side.params,
        seed: side.seed,
        periods,
    })
}

/// Reads every `session_*.csv` in `dir`, ordered by file name.
pub fn read_records(dir: &Path) -> Result<Vec<SessionRecord>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_name()
                    .and_then(|f| f.to_str())
                    .is_some_and(|f| f.starts_with("session_"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::format(dir.display().to_string(), "no session files found"));
    }
    paths.iter().map(|p| read_record(p)).collect()
}

/// Summary table, one row per group plus mean and standard deviation rows.
pub fn summary_csv(summary: &TreatmentSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row".to_string()];
    header.extend(crate::analysis::SummaryFields::NAMES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    let mut emit = |label: String, values: [f64; 10]| -> Result<()> {
        let mut row = vec![label];
        row.extend(values.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
        Ok(())
    };
    for g in &summary.groups {
        emit(format!("session_{}", g.session_id), g.mean.values())?;
    }
    emit("mean".into(), summary.mean.values())?;
    emit("std_dev".into(), summary.std_dev.values())?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_resolves_treatment_and_overrides() {
        let cfg = parse_scenario("treatment = \"N9_HighCost\"\n", false, "t").unwrap();
        let p = cfg.params;
        assert_eq!((p.theta, p.beta, p.lambda, p.kappa, p.n), (10.0, 4.0, 0.25, 2.5, 9));
        assert_eq!(cfg.policies.len(), 9);
        assert_eq!(cfg.periods, 30);

        let cfg = parse_scenario("treatment = \"N9_HighCost\"\n[params]\nkappa = 0\n", false, "t").unwrap();
        assert_eq!(cfg.params.kappa, 0.0);
        assert_eq!(cfg.params.lambda, 0.25);

        assert!(matches!(
            parse_scenario("treatment = \"N7_Whatever\"\n", false, "t"),
            Err(Error::UnknownTreatment(_))
        ));
    }

    #[test]
    fn scenario_errors_name_fields() {
        let e = parse_scenario("treatment = \"N5_LowCost\"\n[params]\nbeta = -1\n", false, "t").unwrap_err();
        assert!(e.to_string().contains("params.beta"), "{e}");

        let text = r#"
treatment = "N5_LowCost"
[[agents]]
id = 2
effort = { kind = "myopic" }
links = { kind = "rank_top", k = 9 }
"#;
        let e = parse_scenario(text, false, "t").unwrap_err();
        assert!(e.to_string().contains("agents[0].links.k"), "{e}");

        let e = parse_scenario("treatment = \"N5_LowCost\"\nperiodz = 3\n", false, "cfg.toml").unwrap_err();
        assert!(e.to_string().contains("cfg.toml"), "{e}");
        assert!(parse_scenario("[params]\nkappa = 1\n", false, "t").is_err());
    }

    #[test]
    fn per_agent_overrides_and_json() {
        let text = r#"{
            "params": {"theta": 10, "beta": 4, "lambda": 0.4, "kappa": 1, "n": 4},
            "policy": {"effort": {"kind": "myopic"}, "links": {"kind": "frozen_network", "architecture": "complete"}},
            "agents": [{"id": 4, "effort": {"kind": "custom", "b0": 1, "b1": 0, "b2": 0}, "links": {"kind": "benefit_threshold"}}],
            "periods": 5, "replications": 2, "seed": 9
        }"#;
        let cfg = parse_scenario(text, true, "t").unwrap();
        assert_eq!(cfg.policies[0].link_rule, LinkRule::Frozen { targets: vec![2, 3, 4] });
        assert_eq!(cfg.policies[3].link_rule, LinkRule::BenefitThreshold);
        assert_eq!(cfg.policies[3].effort_rule.b0, 1.0);
        assert_eq!((cfg.periods, cfg.replications, cfg.seed), (5, 2, 9));
    }

    #[test]
    fn id_lists() {
        assert_eq!(ids(0b1011), "1:2:4");
        assert_eq!(ids(0), "");
        assert_eq!(parse_ids("1:2:4", 5).unwrap(), 0b1011);
        assert!(parse_ids("0", 5).is_err());
        assert!(parse_ids("6", 5).is_err());
    }
}

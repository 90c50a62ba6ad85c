//! Command-line front end. `run` parses arguments, dispatches, and returns the
//! process exit code: 0 on success, 1 on domain errors, 2 on usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lqnet_core::analysis::{
    efficiency_report, frequency_report, link_diagnostics, treatment_summary, LinkDiagnostics, Window,
};
use lqnet_core::dynamics::batch_run;
use lqnet_core::equilibria::{
    balanced_sponsorship, cost_thresholds, default_architectures, efficient_efforts, equilibrium_payoffs,
    nash_efforts, ThresholdOptions,
};
use lqnet_core::io::{load_policy, load_scenario, read_records, summary_csv, write_record};
use lqnet_core::structure::{classify, is_nested_split, stats};
use lqnet_core::verifier::{enumerate_over, enumeration_candidates, verify_nash};
use lqnet_core::{
    Architecture, EffortProfile, Error, GameParams, IntentProfile, Network, StrategyProfile, Treatment,
};

#[derive(Debug, Parser)]
#[command(name = "lqnet", version, about = "Linear-quadratic network formation game toolkit")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium or efficient efforts and payoffs on a fixed network
    Solve {
        #[command(flatten)]
        params: ParamArgs,
        /// empty, star, complete, or a JSON network file
        #[arg(long)]
        network: String,
        /// Welfare-maximizing efforts instead of equilibrium efforts
        #[arg(long)]
        efficient: bool,
    },
    /// Check every unilateral deviation from a strategy profile
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        /// JSON profile {"n": N, "efforts": [...], "intents": [[i, j], ...]} with 1-based IDs
        #[arg(long, conflicts_with = "network", required_unless_present = "network")]
        profile: Option<PathBuf>,
        /// Use equilibrium efforts and balanced sponsorship on this network
        #[arg(long)]
        network: Option<String>,
    },
    /// List the networks that some sponsorship supports as an equilibrium
    Enumerate {
        #[command(flatten)]
        params: ParamArgs,
        /// Search every non-isomorphic graph (up to 7 agents)
        #[arg(long)]
        all_graphs: bool,
        /// Additional JSON network files to test
        #[arg(long = "extra")]
        extra: Vec<PathBuf>,
    },
    /// Structural label, core-periphery split and statistics of a network
    Classify {
        /// empty, star, complete, or a JSON network file
        #[arg(long)]
        network: String,
        /// Group size for named architectures
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
    /// Simulate sessions and write them as CSV with JSON sidecars
    Simulate {
        /// Scenario file (TOML or JSON); other flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        treatment: Option<String>,
        /// Policy file applied to every agent
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Outcome metrics of recorded sessions
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        /// Treatment whose complete-network equilibrium is the benchmark
        #[arg(long)]
        treatment: Option<String>,
        /// all, lastK or a-b
        #[arg(long, default_value = "last10")]
        window: String,
        /// Where to write the summary table; defaults to summary_<window>.csv in the input directory
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Linking costs at which the equilibrium set changes
    Thresholds {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        precision: f64,
        /// Scan every non-isomorphic graph (up to 7 agents)
        #[arg(long)]
        all_graphs: bool,
    },
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Named preset; explicit values below override its fields
    #[arg(long)]
    treatment: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<GameParams, Error> {
        let base = match &self.treatment {
            Some(name) => Some(Treatment::by_name(name)?.params),
            None => None,
        };
        let pick = |v: Option<f64>, b: Option<f64>, name: &str| {
            v.or(b).ok_or_else(|| Error::InvalidParams {
                field: name.to_string(),
                reason: "give --treatment or an explicit value".into(),
            })
        };
        let p = GameParams {
            theta: pick(self.theta, base.map(|b| b.theta), "theta")?,
            beta: pick(self.beta, base.map(|b| b.beta), "beta")?,
            lambda: pick(self.lambda, base.map(|b| b.lambda), "lambda")?,
            kappa: pick(self.kappa, base.map(|b| b.kappa), "kappa")?,
            n: self.n.or(base.map(|b| b.n)).ok_or_else(|| Error::InvalidParams {
                field: "n".into(),
                reason: "give --treatment or an explicit value".into(),
            })?,
            effort_min: base.map_or(0.0, |b| b.effort_min),
            effort_max: base.map_or(20.0, |b| b.effort_max),
        };
        p.validate()?;
        Ok(p)
    }
}

fn network_arg(spec: &str, n: usize) -> Result<Network, Error> {
    match spec.parse::<Architecture>() {
        Ok(arch) => Ok(arch.network(n)),
        Err(_) => {
            let text = std::fs::read_to_string(spec)?;
            let g: Network = serde_json::from_str(&text)?;
            if g.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.n(),
                });
            }
            Ok(g)
        }
    }
}

fn one_based(v: impl IntoIterator<Item = usize>) -> Vec<usize> {
    v.into_iter().map(|i| i + 1).collect()
}

fn solve(params: &GameParams, network: &Network, efficient: bool) -> Result<Value, Error> {
    let solution = if efficient {
        efficient_efforts(params, network)?
    } else {
        nash_efforts(params, network)?
    };
    let report = equilibrium_payoffs(params, network, &solution.efforts, None)?;
    let star = report
        .star_pair(network)
        .map(|(c, p)| json!({"center": c, "periphery": p}));
    Ok(json!({
        "network": network,
        "kind": if efficient { "efficient" } else { "nash" },
        "efforts": solution.efforts,
        "per_agent_payoffs": report.per_agent,
        "group_average": report.group_average,
        "star_pair": star,
        "sponsorship": report.sponsorship,
        "capped": solution.capped,
        "converged": solution.converged,
        "iterations": solution.iterations,
        "residual": solution.residual,
    }))
}

#[derive(serde::Deserialize)]
struct ProfileFile {
    efforts: Vec<f64>,
    #[serde(flatten)]
    intents: IntentProfile,
}

fn verify(params: &GameParams, profile: Option<&Path>, network: Option<&str>) -> Result<Value, Error> {
    let profile = match (profile, network) {
        (Some(path), _) => {
            let raw: ProfileFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            StrategyProfile::new(EffortProfile::new(raw.efforts, params)?, raw.intents)?
        }
        (None, Some(spec)) => {
            let g = network_arg(spec, params.n)?;
            StrategyProfile::new(nash_efforts(params, &g)?.efforts, balanced_sponsorship(&g))?
        }
        (None, None) => unreachable!("clap requires one of --profile and --network"),
    };
    let report = verify_nash(params, &profile)?;
    let worst = report.worst_deviation.as_ref().map(|d| {
        json!({
            "agent": d.agent + 1,
            "intents": one_based(d.intents.iter().copied()),
            "effort": d.effort,
            "gain": d.gain,
        })
    });
    Ok(json!({
        "is_nash": report.is_nash,
        "worst_deviation": worst,
        "checked_deviations": report.checked_deviations,
    }))
}

fn enumerate(params: &GameParams, all_graphs: bool, extra: &[PathBuf]) -> Result<Value, Error> {
    let extra = extra
        .iter()
        .map(|p| network_arg(&p.display().to_string(), params.n))
        .collect::<Result<Vec<_>, _>>()?;
    let candidates = enumeration_candidates(params.n, all_graphs, &extra)?;
    let reports = enumerate_over(params, &candidates)?;
    let supportable: Vec<Value> = reports
        .iter()
        .filter(|r| r.supportable)
        .map(|r| {
            let w = r.witness.as_ref().expect("supportable reports carry a witness");
            json!({
                "label": classify(&r.network).label,
                "network": r.network,
                "nested_split": is_nested_split(&r.network),
                "sponsorship": w.intents,
                "efforts": w.efforts,
            })
        })
        .collect();
    Ok(json!({
        "params": params,
        "candidates": candidates.len(),
        "supportable": supportable,
    }))
}

fn classify_cmd(network: &Network) -> Value {
    let c = classify(network);
    json!({
        "network": network,
        "label": c.label,
        "nested_split": is_nested_split(network),
        "core": c.core.map(one_based),
        "periphery": c.periphery.map(one_based),
        "stats": stats(network),
    })
}

struct SimulateArgs<'a> {
    config: Option<&'a Path>,
    treatment: Option<&'a str>,
    policy: Option<&'a Path>,
    periods: Option<usize>,
    reps: Option<usize>,
    seed: Option<u64>,
    out: Option<&'a Path>,
}

fn simulate(a: SimulateArgs<'_>) -> Result<Value, Error> {
    let mut cfg = match (a.config, a.treatment) {
        (Some(path), _) => load_scenario(path)?,
        (None, Some(name)) => lqnet_core::io::parse_scenario(&format!("treatment = {name:?}\n"), false, "--treatment")?,
        (None, None) => {
            return Err(Error::InvalidParams {
                field: "treatment".into(),
                reason: "give --config or --treatment".into(),
            })
        }
    };
    if let Some(path) = a.policy {
        cfg.policies = load_policy(path, cfg.treatment.as_deref(), &cfg.params)?;
    }
    cfg.periods = a.periods.unwrap_or(cfg.periods);
    cfg.replications = a.reps.unwrap_or(cfg.replications);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    let out = a
        .out
        .map(Path::to_path_buf)
        .or(cfg.out.clone())
        .ok_or_else(|| Error::InvalidParams {
            field: "out".into(),
            reason: "give --out or set `out` in the scenario".into(),
        })?;
    let records = batch_run(&cfg.params, &cfg.policies, cfg.periods, cfg.replications, cfg.seed)?;
    let files = records
        .iter()
        .map(|r| write_record(r, &out).map(|p| p.display().to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({
        "treatment": cfg.treatment,
        "params": cfg.params,
        "periods": cfg.periods,
        "replications": cfg.replications,
        "base_seed": cfg.seed,
        "files": files,
    }))
}

fn mean_diagnostics(all: &[LinkDiagnostics]) -> LinkDiagnostics {
    let k = all.len() as f64;
    let avg = |f: fn(&LinkDiagnostics) -> f64| all.iter().map(f).sum::<f64>() / k;
    LinkDiagnostics {
        avg_profitable_missing: avg(|d| d.avg_profitable_missing),
        profitable_missing_share: avg(|d| d.profitable_missing_share),
        avg_unprofitable_existing: avg(|d| d.avg_unprofitable_existing),
        unprofitable_existing_share: avg(|d| d.unprofitable_existing_share),
        reciprocated_share: avg(|d| d.reciprocated_share),
    }
}

fn analyze(input: &Path, treatment: Option<&str>, window: &str, csv: Option<&Path>) -> Result<Value, Error> {
    let window: Window = window.parse()?;
    let records = read_records(input)?;
    let params = match treatment {
        Some(name) => Treatment::by_name(name)?.params,
        None => records[0].params,
    };
    if params.n != records[0].params.n {
        return Err(Error::DimensionMismatch {
            expected: records[0].params.n,
            found: params.n,
        });
    }
    let efficiency = efficiency_report(&records, &params, window)?;
    let frequency = frequency_report(&records, window)?;
    let diagnostics = records
        .iter()
        .map(|r| link_diagnostics(r, window))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = treatment_summary(&records, &params, window)?;
    let csv_path = csv
        .map(Path::to_path_buf)
        .unwrap_or_else(|| input.join(format!("summary_{window}.csv")));
    std::fs::write(&csv_path, summary_csv(&summary)?)?;
    Ok(json!({
        "records": records.len(),
        "window": window,
        "efficiency": efficiency,
        "frequency": frequency,
        "link_diagnostics": mean_diagnostics(&diagnostics),
        "summary": summary,
        "summary_csv": csv_path.display().to_string(),
    }))
}

fn thresholds(params: &GameParams, grid: usize, precision: f64, all_graphs: bool) -> Result<Value, Error> {
    let list = if all_graphs {
        enumeration_candidates(params.n, true, &[])?
    } else {
        default_architectures(params.n)?
    };
    let options = ThresholdOptions {
        grid_points: grid,
        precision,
    };
    let t = cost_thresholds(params, Some(&list), options)?;
    let windows: Vec<Value> = t
        .windows
        .iter()
        .filter(|w| w.enters_at.is_some())
        .map(|w| {
            json!({
                "label": w.label,
                "network": w.network,
                "enters_at": w.enters_at,
                "leaves_at": w.leaves_at,
            })
        })
        .collect();
    Ok(json!({
        "kappa1": t.kappa1,
        "kappa2": t.kappa2,
        "kappa1_network": t.kappa1_network,
        "search_interval": t.search_interval,
        "grid_points": t.grid_points,
        "precision": t.precision,
        "architectures": list.len(),
        "supportable_windows": windows,
    }))
}

fn dispatch(command: &Command) -> Result<Value, Error> {
    match command {
        Command::Solve {
            params,
            network,
            efficient,
        } => {
            let p = params.resolve()?;
            solve(&p, &network_arg(network, p.n)?, *efficient)
        }
        Command::Verify {
            params,
            profile,
            network,
        } => verify(&params.resolve()?, profile.as_deref(), network.as_deref()),
        Command::Enumerate {
            params,
            all_graphs,
            extra,
        } => enumerate(&params.resolve()?, *all_graphs, extra),
        Command::Classify { network, n } => Ok(classify_cmd(&network_arg(network, *n)?)),
        Command::Simulate {
            config,
            treatment,
            policy,
            periods,
            reps,
            seed,
            out,
        } => simulate(SimulateArgs {
            config: config.as_deref(),
            treatment: treatment.as_deref(),
            policy: policy.as_deref(),
            periods: *periods,
            reps: *reps,
            seed: *seed,
            out: out.as_deref(),
        }),
        Command::Analyze {
            input,
            treatment,
            window,
            csv,
        } => analyze(input, treatment.as_deref(), window, csv.as_deref()),
        Command::Thresholds {
            params,
            grid,
            precision,
            all_graphs,
        } => thresholds(&params.resolve()?, *grid, *precision, *all_graphs),
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(value) => {
            let body = serde_json::to_string_pretty(&value).expect("reports serialize");
            let _ = writeln!(out, "{body}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

//! Command-line front end.
//!
//! Settings resolve in three layers: built-in defaults, then a flat
//! `key = value` config file, then flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::analytics::{report_json, sig12};
use crate::domain::{format_rational, parse_rational, rat, PredictionModel, Parameters, Rational};
use crate::engine::{format_trace, run};
use crate::experiment::{
    arrivals, default_eps_grid, sweep, verify, ArrivalMode, ExperimentConfig, SweepRow, VerifyOptions,
};
use crate::io::read_instance;
use crate::policies::{PolicyKind, RevelationModel, ThetaDistribution};

#[derive(Parser, Debug)]
#[command(name = "betasched", version, about = "Threshold scheduling of unit jobs with predicted urgency")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Batch instances: analytic and simulated cost ratios over an error-rate grid.
    Sweep(ExperimentArgs),
    /// Jobs arriving over time: simulated cost over the offline optimum.
    Arrivals(ExperimentArgs),
    /// Run the exact oracle checks; exits nonzero on any failure.
    Verify(VerifyArgs),
    /// Simulate one instance file and print its event trace.
    RunOne(RunOneArgs),
    /// Analytic expectations and competitive ratios for one parameter point.
    Report(ReportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
pub struct ExperimentArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub w0: Option<String>,
    #[arg(long)]
    pub w1: Option<String>,
    /// Comma list of values or `start:stop:step` ranges. Sets ε₀ = ε₁ unless
    /// `--eps1-grid` is given, in which case this is the ε₀ axis.
    #[arg(long)]
    pub eps_grid: Option<String>,
    /// ε₁ axis; the sweep covers every (ε₀, ε₁) pair.
    #[arg(long)]
    pub eps1_grid: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma list of nonpreemptive, preemptive, hybrid, beta, modified-beta.
    #[arg(long)]
    pub policy: Option<String>,
    /// Mean interarrival time (arrivals only).
    #[arg(long)]
    pub interarrival: Option<String>,
    /// Add the competitive-ratio columns.
    #[arg(long)]
    pub cr: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Largest batch size for the expectimax comparison.
    #[arg(long, default_value_t = 5)]
    pub max_n: usize,
    /// Random instances per randomized check.
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Shift the threshold away from β; for checking that the oracle bites.
    #[arg(long, hide = true)]
    pub inject_beta_offset: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Revelation {
    Exact,
    Probabilistic,
}

#[derive(Args, Debug)]
pub struct RunOneArgs {
    /// Instance file in the line format written by this tool.
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "beta")]
    pub policy: String,
    #[arg(long, value_enum, default_value_t = Revelation::Exact)]
    pub revelation: Revelation,
    /// Seed for θ draws under probabilistic revelation.
    #[arg(long, default_value_t = 0)]
    pub theta_seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long, default_value = "2/5")]
    pub alpha: String,
    #[arg(long, default_value = "1/10")]
    pub rho: String,
    #[arg(long, default_value = "20")]
    pub w0: String,
    #[arg(long, default_value = "1")]
    pub w1: String,
    #[arg(long, default_value = "1/10")]
    pub eps0: String,
    #[arg(long, default_value = "1/10")]
    pub eps1: String,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `0,1/10,0.25` or `0:1/2:1/20` (inclusive) or a mix of both.
pub fn parse_grid(s: &str) -> Result<Vec<Rational>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_rational(v)?),
            [a, b, step] => {
                let (a, b, step) = (parse_rational(a)?, parse_rational(b)?, parse_rational(step)?);
                if step <= rat(0, 1) {
                    bail!("range step must be positive in {item:?}");
                }
                let mut x = a;
                while x <= b {
                    out.push(x);
                    x += step;
                }
            }
            _ => bail!("grid item {item:?} is neither a value nor start:stop:step"),
        }
    }
    if out.is_empty() {
        bail!("empty grid {s:?}");
    }
    Ok(out)
}

fn parse_policies(s: &str) -> Result<Vec<PolicyKind>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<PolicyKind>().map_err(|e| anyhow!(e)))
        .collect()
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    const KEYS: [&str; 14] = [
        "alpha", "rho", "w0", "w1", "eps-grid", "eps1-grid", "n", "reps", "seed", "policy", "interarrival", "cr", "out",
        "format",
    ];
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), i + 1))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            bail!("{}:{}: unknown key {key:?}", path.display(), i + 1);
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub struct Resolved {
    pub config: ExperimentConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Merges defaults, the config file and flags.
pub fn resolve(args: &ExperimentArgs, default_reps: usize, arrivals_mode: bool) -> Result<Resolved> {
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let pick = |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).cloned());
    let rational = |flag: &Option<String>, key: &str, default: Rational| -> Result<Rational> {
        pick(flag, key).map_or(Ok(default), |s| parse_rational(&s).with_context(|| format!("--{key}")))
    };
    let number = |flag: Option<usize>, key: &str, default: usize| -> Result<usize> {
        match flag {
            Some(v) => Ok(v),
            None => file.get(key).map_or(Ok(default), |s| s.parse().with_context(|| format!("{key} in config"))),
        }
    };
    let base = ExperimentConfig::default();
    let eps0 = pick(&args.eps_grid, "eps-grid").map(|s| parse_grid(&s)).transpose()?;
    let eps1 = pick(&args.eps1_grid, "eps1-grid").map(|s| parse_grid(&s)).transpose()?;
    let eps_grid = match (eps0, eps1) {
        (None, None) => default_eps_grid(),
        (Some(a), None) => a.into_iter().map(|e| (e, e)).collect(),
        (a, Some(b)) => {
            let a = a.unwrap_or_else(|| default_eps_grid().into_iter().map(|(e, _)| e).collect());
            a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
        }
    };
    let seed = match args.seed {
        Some(s) => s,
        None => file.get("seed").map_or(Ok(base.seed), |s| s.parse().context("seed in config"))?,
    };
    let policies = match pick(&args.policy, "policy") {
        Some(s) => parse_policies(&s)?,
        None => base.policies.clone(),
    };
    let arrival = if arrivals_mode {
        ArrivalMode::Poisson(rational(&args.interarrival, "interarrival", rat(9, 10))?)
    } else {
        if pick(&args.interarrival, "interarrival").is_some() {
            bail!("--interarrival applies to the arrivals command");
        }
        ArrivalMode::Batch
    };
    let cr = args.cr || file.get("cr").is_some_and(|v| matches!(v.as_str(), "true" | "1" | "yes"));
    let config = ExperimentConfig {
        alpha: rational(&args.alpha, "alpha", base.alpha)?,
        rho: rational(&args.rho, "rho", base.rho)?,
        w0: rational(&args.w0, "w0", base.w0)?,
        w1: rational(&args.w1, "w1", base.w1)?,
        eps_grid,
        n: number(args.n, "n", base.n)?,
        reps: number(args.reps, "reps", default_reps)?,
        seed,
        arrival,
        policies,
        cr,
    };
    config.validate()?;
    let out = args.out.clone().or_else(|| file.get("out").map(PathBuf::from));
    let format = match (args.format, file.get("format").map(String::as_str)) {
        (Some(f), _) => f,
        (None, Some("json")) => Format::Json,
        (None, Some("csv")) | (None, None) => Format::Csv,
        (None, Some(other)) => bail!("unknown format {other:?} in config"),
    };
    Ok(Resolved { config, out, format })
}

fn arrival_label(mode: ArrivalMode) -> String {
    match mode {
        ArrivalMode::Batch => "batch".into(),
        ArrivalMode::Poisson(m) => format!("poisson({})", format_rational(&m)),
    }
}

fn config_pairs(command: &str, c: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let normalization = match c.arrival {
        ArrivalMode::Batch => "each cost divided by the analytic expected optimum",
        ArrivalMode::Poisson(_) => "each replication divided by its own WSRPT cost, then averaged",
    };
    vec![
        ("command", command.to_string()),
        ("alpha", format_rational(&c.alpha)),
        ("rho", format_rational(&c.rho)),
        ("w0", format_rational(&c.w0)),
        ("w1", format_rational(&c.w1)),
        ("n", c.n.to_string()),
        ("reps", c.reps.to_string()),
        ("seed", c.seed.to_string()),
        ("arrivals", arrival_label(c.arrival)),
        ("policies", c.policies.iter().map(|p| p.name()).collect::<Vec<_>>().join(",")),
        ("normalization", normalization.to_string()),
    ]
}

const COLUMNS: [&str; 15] = [
    "eps0",
    "eps1",
    "policy",
    "analytic_ratio",
    "mc_mean_ratio",
    "mc_stderr",
    "replications",
    "mc_max_ratio",
    "alpha",
    "rho",
    "w0",
    "w1",
    "n",
    "seed",
    "arrivals",
];
const CR_COLUMNS: [&str; 5] = ["cr_nonpreemptive", "cr_preemptive", "cr_hybrid", "cr_beta", "regime"];

fn row_values(r: &SweepRow, c: &ExperimentConfig) -> Vec<String> {
    let mut v = vec![
        format_rational(&r.eps0),
        format_rational(&r.eps1),
        r.policy.clone(),
        r.analytic_ratio.map(sig12).unwrap_or_default(),
        sig12(r.mc_mean_ratio),
        sig12(r.mc_stderr),
        r.replications.to_string(),
        sig12(r.mc_max_ratio),
        format_rational(&c.alpha),
        format_rational(&c.rho),
        format_rational(&c.w0),
        format_rational(&c.w1),
        c.n.to_string(),
        c.seed.to_string(),
        arrival_label(c.arrival),
    ];
    if let Some(cr) = &r.cr {
        v.extend([
            sig12(cr.cr_nonpreemptive),
            sig12(cr.cr_preemptive),
            sig12(cr.cr_hybrid),
            sig12(cr.theorem4_value),
            cr.regime.to_string(),
        ]);
    }
    v
}

pub fn render_rows(command: &str, rows: &[SweepRow], c: &ExperimentConfig, format: Format) -> String {
    let mut columns: Vec<&str> = COLUMNS.to_vec();
    if c.cr {
        columns.extend(CR_COLUMNS);
    }
    match format {
        Format::Csv => {
            let mut out = String::new();
            for (k, v) in config_pairs(command, c) {
                let _ = writeln!(out, "# {k}={v}");
            }
            out.push_str(&columns.join(","));
            out.push('\n');
            for r in rows {
                out.push_str(&row_values(r, c).join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let config: Map<String, Value> =
                config_pairs(command, c).into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = columns
                        .iter()
                        .zip(row_values(r, c))
                        .map(|(k, v)| (k.to_string(), Value::String(v)))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&json!({ "config": config, "rows": rows })).expect("json");
            s.push('\n');
            s
        }
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_experiment(args: &ExperimentArgs, arrivals_mode: bool) -> Result<ExitCode> {
    let (name, reps) = if arrivals_mode { ("arrivals", 10_000) } else { ("sweep", 100_000) };
    let r = resolve(args, reps, arrivals_mode)?;
    let rows = if arrivals_mode { arrivals(&r.config)? } else { sweep(&r.config)? };
    emit(&render_rows(name, &rows, &r.config, r.format), &r.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let beta_offset = match &args.inject_beta_offset {
        Some(s) => parse_rational(s)?,
        None => rat(0, 1),
    };
    let opts = VerifyOptions { max_n: args.max_n, instances: args.instances, seed: args.seed, beta_offset };
    let checks = verify(&opts)?;
    let mut ok = true;
    for c in &checks {
        if c.passed() {
            println!("PASS {} ({} cases)", c.name, c.cases);
        } else {
            ok = false;
            println!("FAIL {} ({} of {} cases)", c.name, c.failures.len(), c.cases);
            for f in c.failures.iter().take(3) {
                println!("  {}", f.trim_end().replace('\n', "\n  "));
            }
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_run_one(args: &RunOneArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.instance).with_context(|| format!("reading {}", args.instance.display()))?;
    let instance = read_instance(&text)?;
    let policy: PolicyKind = args.policy.parse().map_err(|e: String| anyhow!(e))?;
    let revelation = match args.revelation {
        Revelation::Exact => RevelationModel::Exact,
        Revelation::Probabilistic => {
            RevelationModel::Probabilistic(ThetaDistribution { seed: args.theta_seed, ..Default::default() })
        }
    };
    let outcome = run(&instance, policy, &revelation)?;
    let rendered = match args.format {
        Format::Csv => format!(
            "# policy={} cost={} preemptions={}\n{}",
            policy,
            format_rational(&outcome.total_cost),
            outcome.preemption_count,
            format_trace(&outcome.trace)
        ),
        Format::Json => {
            let completions: Map<String, Value> = outcome
                .completion_times
                .iter()
                .map(|(id, t)| (id.to_string(), Value::String(format_rational(t))))
                .collect();
            let trace: Vec<Value> = outcome.trace.iter().map(|e| Value::String(e.to_string())).collect();
            let mut s = serde_json::to_string_pretty(&json!({
                "policy": policy.name(),
                "cost": format_rational(&outcome.total_cost),
                "preemptions": outcome.preemption_count,
                "completion_times": completions,
                "trace": trace,
            }))
            .expect("json");
            s.push('\n');
            s
        }
    };
    emit(&rendered, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let params = Parameters::new(parse_rational(&args.alpha)?, parse_rational(&args.w0)?, parse_rational(&args.w1)?)?;
    let model = PredictionModel::new(parse_rational(&args.rho)?, parse_rational(&args.eps0)?, parse_rational(&args.eps1)?)?;
    let mut s = serde_json::to_string_pretty(&report_json(args.n, &model, &params)?).expect("json");
    s.push('\n');
    emit(&s, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn execute(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Sweep(a) => cmd_experiment(a, false),
        Command::Arrivals(a) => cmd_experiment(a, true),
        Command::Verify(a) => cmd_verify(a),
        Command::RunOne(a) => cmd_run_one(a),
        Command::Report(a) => cmd_report(a),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse_exactly() {
        assert_eq!(parse_grid("0:1/2:1/20").unwrap().len(), 11);
        assert_eq!(parse_grid("0, 0.05,1/10").unwrap(), vec![rat(0, 1), rat(1, 20), rat(1, 10)]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("1:2:3:4").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.txt");
        fs::write(&path, "# steep weight panel\nalpha = 7/10\nn = 20\nreps = 5\neps_grid = 0,1/10\nformat = json\n").unwrap();
        let args = ExperimentArgs { config: Some(path.clone()), n: Some(30), ..Default::default() };
        let r = resolve(&args, 100, false).unwrap();
        assert_eq!(r.config.alpha, rat(7, 10));
        assert_eq!(r.config.n, 30);
        assert_eq!(r.config.reps, 5);
        assert_eq!(r.config.eps_grid, vec![(rat(0, 1), rat(0, 1)), (rat(1, 10), rat(1, 10))]);
        assert_eq!(r.format, Format::Json);

        fs::write(&path, "bogus = 1\n").unwrap();
        assert!(resolve(&args, 100, false).is_err());
    }

    #[test]
    fn independent_axes_form_a_product() {
        let args = ExperimentArgs { eps_grid: Some("0,1/10".into()), eps1_grid: Some("0,1/5,1/4".into()), ..Default::default() };
        let r = resolve(&args, 1, false).unwrap();
        assert_eq!(r.config.eps_grid.len(), 6);
        assert_eq!(r.config.eps_grid[4], (rat(1, 10), rat(1, 5)));
    }

    #[test]
    fn csv_rows_echo_configuration() {
        let c = ExperimentConfig { n: 6, reps: 20, eps_grid: vec![(rat(1, 50), rat(1, 50))], cr: true, ..Default::default() };
        let rows = sweep(&c).unwrap();
        let text = render_rows("sweep", &rows, &c, Format::Csv);
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert!(header.starts_with("eps0,eps1,policy,analytic_ratio,mc_mean_ratio,mc_stderr,replications"));
        let cols: Vec<&str> = header.split(',').collect();
        let pre = cols.iter().position(|c| *c == "cr_preemptive").unwrap();
        for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let v: Vec<&str> = line.split(',').collect();
            assert_eq!(v.len(), cols.len());
            assert_eq!(v[pre], "1.40000000000");
            assert_eq!(v[cols.iter().position(|c| *c == "alpha").unwrap()], "2/5");
        }
    }
}

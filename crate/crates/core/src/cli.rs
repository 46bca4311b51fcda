//! Command-line front end: subcommands dist, asym, law, fit, sim, composite.
//!
//! Exit codes: 0 success, 1 input error, 2 numeric error, 3 capped or partial
//! experiment.

use crate::asymptotics::{stabilizing_with, Centering, SlowVariationParams};
use crate::composite::{composite_fit, composite_sim};
use crate::error::{Error, Result};
use crate::generators::{builtin_pairs, GeneratorPair};
use crate::inference::{activity_rates, fit_theta, HSample};
use crate::simlab::{
    boundary_rate_experiment, conditional_lr_experiment, default_workers, joint_limit_experiment, non_null_boundary_experiment, Engine,
    ExperimentConfig, RunStatus,
};
use crate::stable_laws::{chi2_1_cdf, skew_cauchy_pdf, stable_negativity, GLaw, StableSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "mixbound", version, about = "Boundary behaviour of binary Gaussian mixtures")]
pub struct Cli {
    /// Worker threads (default: MIXBOUND_WORKERS, else all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory; a manifest.json is written next to the outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generator pairs: densities, bounds, catalog.
    #[command(subcommand)]
    Dist(DistCmd),
    /// Stabilizing sequences.
    #[command(subcommand)]
    Asym(AsymCmd),
    /// Limit laws.
    #[command(subcommand)]
    Law(LawCmd),
    /// Fit the mixing weight to one column of data.
    Fit(FitArgs),
    /// Monte Carlo experiments.
    Sim(SimArgs),
    /// Composite mixtures over the zeta family.
    #[command(subcommand)]
    Composite(CompositeCmd),
}

#[derive(Subcommand, Debug)]
pub enum DistCmd {
    /// CSV of x, f0, f1, h on a grid.
    Eval {
        #[arg(long)]
        pair: String,
        /// start:stop:step
        #[arg(long, default_value = "-5:5:0.1", allow_hyphen_values = true)]
        grid: String,
    },
    /// Extended-parameter bounds as JSON.
    Bounds {
        #[arg(long)]
        pair: String,
    },
    /// Catalog names.
    List,
}

#[derive(Args, Debug, Clone)]
pub struct TailArgs {
    #[arg(long, default_value_t = 2.0)]
    pub beta0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
}

impl TailArgs {
    fn params(&self) -> Result<SlowVariationParams> {
        SlowVariationParams::new(self.beta0, self.beta1, self.delta, self.gamma, self.mu)
    }
}

#[derive(Subcommand, Debug)]
pub enum AsymCmd {
    /// CSV of n, A_n, B_n, T_n, theory_rate.
    Table {
        /// Catalog pair whose tail model to use (overrides the parameters).
        #[arg(long)]
        pair: Option<String>,
        #[command(flatten)]
        tail: TailArgs,
        /// Comma-separated sample sizes.
        #[arg(long, default_value = "1e2,1e3,1e4,1e5,1e6")]
        n_grid: String,
        /// Use log B_n in the centering.
        #[arg(long)]
        refined: bool,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawName {
    G,
    SkewCauchy,
    Chi2,
}

#[derive(Subcommand, Debug)]
pub enum LawCmd {
    /// CSV of x, pdf, cdf (skew-Cauchy: x, pdf).
    Table {
        #[arg(long, value_enum, ignore_case = true)]
        law: LawName,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value = "0:4:0.01", allow_hyphen_values = true)]
        grid: String,
    },
    /// P(X < 0) for the stable law S(alpha, beta).
    Negativity {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub pair: String,
    /// One column of x values; `-` reads stdin.
    #[arg(long)]
    pub data: String,
    /// Fit over [0, theta_max] instead of [0, 1].
    #[arg(long)]
    pub extended: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimKind {
    Rate,
    Lr,
    Joint,
    Nonnull,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigOverrides {
    /// TOML experiment config; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pair: Option<String>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long)]
    pub replicates: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub target: Option<u64>,
    #[arg(long)]
    pub extended: bool,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[arg(value_enum)]
    pub kind: SimKind,
    #[command(flatten)]
    pub cfg: ConfigOverrides,
}

#[derive(Subcommand, Debug)]
pub enum CompositeCmd {
    /// Joint fit over (theta, nu).
    Fit {
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long)]
        data: String,
    },
    /// Rate curve and conditioned fits.
    Sim {
        #[arg(long)]
        tau: Option<f64>,
        #[command(flatten)]
        cfg: ConfigOverrides,
    },
}

/// Full-precision CSV number.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses `start:stop:step` (inclusive).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad grid {s:?}"))))
        .collect::<Result<_>>()?;
    let [a, b, h] = parts[..] else {
        return Err(Error::Input(format!("grid {s:?} is not start:stop:step")));
    };
    if !(h > 0.0) || b < a {
        return Err(Error::Input(format!("grid {s:?} is empty")));
    }
    let k = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=k).map(|i| a + i as f64 * h).collect())
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad number {p:?}"))))
        .collect()
}

fn parse_n_list(s: &str) -> Result<Vec<u64>> {
    parse_list(s)?
        .into_iter()
        .map(|v| if v >= 1.0 && v.fract() == 0.0 { Ok(v as u64) } else { Err(Error::Input(format!("bad sample size {v}"))) })
        .collect()
}

/// Reads one column of numbers; a non-numeric first line is a header.
pub fn read_column(src: &str) -> Result<Vec<f64>> {
    let text = if src == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(src).map_err(|e| Error::Input(format!("{src}: {e}")))?
    };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.split(',').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::Input(format!("{src}:{}: not a number: {t:?}", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(Error::Input(format!("{src}: no data")));
    }
    Ok(out)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command_line: Vec<String>,
    config_hash: String,
    master_seed: Option<u64>,
    code_version: &'static str,
    timestamp: u64,
    outputs: &'a [String],
}

/// Collects outputs, then writes them to --out (with a manifest) or stdout.
struct Sink {
    dir: Option<PathBuf>,
    files: Vec<(String, String)>,
    config_text: String,
    seed: Option<u64>,
}

impl Sink {
    fn add(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn finish(self, argv: &[String], stdout: &mut dyn Write) -> Result<()> {
        match &self.dir {
            None => {
                for (_, body) in &self.files {
                    stdout.write_all(body.as_bytes())?;
                }
                Ok(())
            }
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let mut paths = Vec::new();
                for (name, body) in &self.files {
                    let p = dir.join(name);
                    std::fs::write(&p, body)?;
                    paths.push(p.display().to_string());
                }
                let hash = Sha256::digest(self.config_text.as_bytes());
                let manifest = Manifest {
                    command_line: argv.to_vec(),
                    config_hash: hash.iter().fold(String::new(), |mut s, b| {
                        let _ = write!(s, "{b:02x}");
                        s
                    }),
                    master_seed: self.seed,
                    code_version: env!("CARGO_PKG_VERSION"),
                    timestamp: std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
                    outputs: &paths,
                };
                std::fs::write(dir.join("manifest.json"), to_json(&manifest)? + "\n")?;
                writeln!(stdout, "{}", dir.display())?;
                Ok(())
            }
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))
}

fn build_config(o: &ConfigOverrides, tau: Option<f64>) -> Result<ExperimentConfig> {
    let mut c = match &o.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &o.pair {
        c.pair = Some(v.clone());
    }
    if let Some(v) = o.n {
        c.n = v;
    }
    if let Some(v) = &o.n_grid {
        c.n_grid = Some(parse_n_list(v)?);
    }
    if let Some(v) = o.replicates {
        c.replicates = v;
    }
    if let Some(v) = o.seed {
        c.master_seed = v;
    }
    if let Some(v) = o.target {
        c.target_conditioned = Some(v);
    }
    if o.extended {
        c.extended = true;
    }
    if tau.is_some() {
        c.tau = tau;
    }
    c.validate()?;
    Ok(c)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric { .. } | Error::Invariant(_) | Error::Degenerate(_) => 2,
        _ => 1,
    }
}

/// Parses argv and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match dispatch(cli, &argv, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command line.
pub fn dispatch(cli: Cli, argv: &[String], stdout: &mut dyn Write) -> Result<i32> {
    let workers = cli.workers.unwrap_or_else(default_workers);
    let mut sink = Sink { dir: cli.out.clone(), files: Vec::new(), config_text: argv.join(" "), seed: None };
    let mut code = 0;
    match cli.command {
        Command::Dist(DistCmd::List) => {
            let mut s = String::from("name,tail_model,equal_supports\n");
            for p in builtin_pairs() {
                let _ = writeln!(s, "{},{},{}", p.name, p.tail_model.is_some(), p.support_flags.equal_supports);
            }
            sink.add("pairs.csv", s);
        }
        Command::Dist(DistCmd::Eval { pair, grid }) => {
            let p = GeneratorPair::from_name(&pair)?;
            let mut s = String::from("x,f0,f1,h\n");
            for x in parse_grid(&grid)? {
                let (l0, l1) = (p.log_f0(x), p.log_f1(x));
                let h = if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY { f64::NAN } else { p.log_h(x).exp() };
                let _ = writeln!(s, "{},{},{},{}", fmt_num(x), fmt_num(l0.exp()), fmt_num(l1.exp()), fmt_num(h));
            }
            sink.add("dist.csv", s);
        }
        Command::Dist(DistCmd::Bounds { pair }) => {
            let p = GeneratorPair::from_name(&pair)?;
            sink.add("bounds.json", to_json(&p.theta_bounds()?)? + "\n");
        }
        Command::Asym(AsymCmd::Table { pair, tail, n_grid, refined }) => {
            let params = match pair {
                Some(name) => GeneratorPair::from_name(&name)?
                    .tail_model
                    .ok_or_else(|| Error::Input(format!("{name} has no Cauchy-domain tail model")))?,
                None => tail.params()?,
            };
            let centering = if refined { Centering::Refined } else { Centering::LeadingOrder };
            let mut s = String::from("n,A_n,B_n,T_n,theory_rate\n");
            for n in parse_list(&n_grid)? {
                let t = stabilizing_with(&params, n, centering)?;
                let rate = crate::asymptotics::error_rate_theory(&params, n);
                let _ = writeln!(s, "{},{},{},{},{}", fmt_num(n), fmt_num(t.a_n), fmt_num(t.b_n), fmt_num(t.t_n), fmt_num(rate));
            }
            sink.add("asym.csv", s);
        }
        Command::Law(LawCmd::Table { law, beta, grid }) => {
            let xs = parse_grid(&grid)?;
            let mut s = String::new();
            match law {
                LawName::G => {
                    s.push_str("x,pdf,cdf\n");
                    for x in xs {
                        let pdf = if x > 0.0 { GLaw.pdf(x) } else { f64::NAN };
                        let _ = writeln!(s, "{},{},{}", fmt_num(x), fmt_num(pdf), fmt_num(GLaw.cdf(x)));
                    }
                }
                LawName::Chi2 => {
                    s.push_str("x,pdf,cdf\n");
                    for x in xs {
                        let pdf = if x > 0.0 { (-0.5 * x).exp() / (2.0 * std::f64::consts::PI * x).sqrt() } else { f64::NAN };
                        let _ = writeln!(s, "{},{},{}", fmt_num(x), fmt_num(pdf), fmt_num(chi2_1_cdf(x.max(0.0))));
                    }
                }
                LawName::SkewCauchy => {
                    s.push_str("x,pdf\n");
                    for x in xs {
                        let _ = writeln!(s, "{},{}", fmt_num(x), fmt_num(skew_cauchy_pdf(x, beta)?));
                    }
                }
            }
            sink.add("law.csv", s);
        }
        Command::Law(LawCmd::Negativity { alpha, beta }) => {
            let p = stable_negativity(StableSpec::new(alpha, beta)?)?;
            sink.add("negativity.txt", format!("{}\n", fmt_num(p)));
        }
        Command::Fit(a) => {
            let pair = GeneratorPair::from_name(&a.pair)?;
            let xs = read_column(&a.data)?;
            let h = HSample::from_pair(&pair, &xs)?;
            let upper = if a.extended { pair.theta_bounds()?.theta_max } else { 1.0 };
            let fit = fit_theta(&h, upper)?;
            let act = activity_rates(&h, fit.theta_hat())?;
            sink.add("fit.json", to_json(&fit)? + "\n");
            if sink.dir.is_some() {
                let mut s = String::from("x,h,activity_rate,local_fdr\n");
                for ((x, hv), r) in xs.iter().zip(h.h()).zip(&act.rates) {
                    let _ = writeln!(s, "{},{},{},{}", fmt_num(*x), fmt_num(*hv), fmt_num(*r), fmt_num(1.0 - r));
                }
                sink.add("activity.csv", s);
            }
        }
        Command::Sim(a) => {
            let mut cfg = build_config(&a.cfg, None)?;
            cfg.workers = Some(workers);
            sink.config_text = to_json(&cfg)?;
            sink.seed = Some(cfg.master_seed);
            if sink.dir.is_none() {
                sink.dir = Some(PathBuf::from("mixbound-out"));
            }
            let engine = Engine::new(workers)?;
            code = run_sim(a.kind, &engine, &cfg, &mut sink)?;
        }
        Command::Composite(CompositeCmd::Fit { tau, data }) => {
            let xs = read_column(&data)?;
            sink.add("composite_fit.json", to_json(&composite_fit(&xs, tau)?)? + "\n");
        }
        Command::Composite(CompositeCmd::Sim { tau, cfg }) => {
            let mut cfg = build_config(&cfg, tau)?;
            cfg.workers = Some(workers);
            sink.config_text = to_json(&cfg)?;
            sink.seed = Some(cfg.master_seed);
            if sink.dir.is_none() {
                sink.dir = Some(PathBuf::from("mixbound-out"));
            }
            let engine = Engine::new(workers)?;
            let r = composite_sim(&engine, &cfg)?;
            let mut s = String::from("n,replicates,positives,p_hat,se,theory\n");
            for p in &r.rate {
                let _ = writeln!(s, "{},{},{},{},{},{}", p.n, p.replicates, p.positives, fmt_num(p.p_hat), fmt_num(p.se), fmt_num(p.theory));
            }
            if let Some(c) = &r.conditioned {
                if c.status != RunStatus::Complete {
                    code = 3;
                }
                let mut f = String::from("theta_hat,nu_hat,lambda\n");
                for fit in &c.fits {
                    let _ = writeln!(f, "{},{},{}", fmt_num(fit.theta_hat), fmt_num(fit.nu_hat), fmt_num(fit.lambda));
                }
                sink.add("samples.csv", f);
            }
            sink.add("results.json", to_json(&r)? + "\n");
            sink.add("rate.csv", s);
        }
    }
    sink.finish(argv, stdout)?;
    Ok(code)
}

fn run_sim(kind: SimKind, engine: &Engine, cfg: &ExperimentConfig, sink: &mut Sink) -> Result<i32> {
    let mut code = 0;
    match kind {
        SimKind::Rate => {
            let r = boundary_rate_experiment(engine, cfg, &cfg.grid())?;
            let mut s = String::from("n,replicates,positives,p_hat,se,theory\n");
            for p in &r.points {
                let _ = writeln!(s, "{},{},{},{},{},{}", p.n, p.replicates, p.positives, fmt_num(p.p_hat), fmt_num(p.se), fmt_num(p.theory));
            }
            sink.add("results.json", to_json(&r)? + "\n");
            sink.add("rate.csv", s);
        }
        SimKind::Lr => {
            let r = conditional_lr_experiment(engine, cfg)?;
            if r.summary.status != RunStatus::Complete {
                code = 3;
            }
            let mut s = String::from("replicate,theta_hat,r,lambda,lambda_tilde\n");
            for c in &r.records {
                let _ = writeln!(s, "{},{},{},{},{}", c.replicate, fmt_num(c.theta_hat), fmt_num(c.r), fmt_num(c.lambda), fmt_num(c.lambda_tilde));
            }
            let mut h = String::from("bin_lo_r,bin_hi_r,count_r,bin_lo_sqrt_lambda,bin_hi_sqrt_lambda,count_sqrt_lambda\n");
            let (er, el) = (r.hist_r.edges(), r.hist_sqrt_lambda.edges());
            for i in 0..r.hist_r.counts.len() {
                let _ = writeln!(
                    h,
                    "{},{},{},{},{},{}",
                    fmt_num(er[i]),
                    fmt_num(er[i + 1]),
                    r.hist_r.counts[i],
                    fmt_num(el[i]),
                    fmt_num(el[i + 1]),
                    r.hist_sqrt_lambda.counts[i]
                );
            }
            sink.add("results.json", to_json(&r.summary)? + "\n");
            sink.add("samples.csv", s);
            sink.add("hist.csv", h);
        }
        SimKind::Joint => {
            let tail = match cfg.tail {
                Some(t) => t,
                None => SlowVariationParams::new(2.0, 0.0, 0.5, 0.0, 1.0)?,
            };
            let r = joint_limit_experiment(engine, &tail, cfg)?;
            if r.points.iter().any(|p| p.status != RunStatus::Complete) {
                code = 3;
            }
            let mut s = String::from("n,replicate,sum_over_t,max_over_t\n");
            for (p, recs) in r.points.iter().zip(&r.records) {
                for c in recs {
                    let _ = writeln!(s, "{},{},{},{}", p.n, c.replicate, fmt_num(c.sum_over_t), fmt_num(c.max_over_t));
                }
            }
            sink.add("results.json", to_json(&r)? + "\n");
            sink.add("samples.csv", s);
        }
        SimKind::Nonnull => {
            let r = non_null_boundary_experiment(engine, cfg)?;
            sink.add("results.json", to_json(&r)? + "\n");
        }
    }
    Ok(code)
}

/// Reads a results.json body (for determinism checks).
pub fn read_results(dir: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(dir.join("results.json"))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:4:0.01").unwrap();
        assert_eq!(g.len(), 401);
        assert!((g[400] - 4.0).abs() < 1e-12);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert_eq!(parse_n_list("1e3,100").unwrap(), vec![1000, 100]);
        assert!(parse_n_list("1.5").is_err());
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, -3.0e-300, std::f64::consts::PI, 1e300] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn unknown_flag_is_input_error() {
        assert_eq!(main_with_args(["mixbound", "dist", "list", "--bogus"]), 1);
        assert_eq!(main_with_args(["mixbound", "frobnicate"]), 1);
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::Input("x".into())), 1);
        assert_eq!(exit_code(&Error::numeric("x", 1.0)), 2);
    }
}

//! Reproducible Monte Carlo: boundary error rates, conditioned likelihood-ratio
//! laws, the joint mean/max limit, order statistics and goodness-of-fit tests.
//!
//! Every replicate draws from its own ChaCha8 stream keyed by
//! (master seed, experiment label, replicate index). Work is split into
//! fixed batches whose outputs are merged in index order, so a result does
//! not depend on the number of workers.

use crate::asymptotics::{stabilizing, CanonicalTail, SlowVariationParams};
use crate::error::{Error, Result};
use crate::generators::GeneratorPair;
use crate::inference::{approx_lr, bartlett_factor, fit_theta_slice, r_statistic};
use crate::quad::NeumaierSum;
use crate::stable_laws::{chi2_1_cdf, GLaw};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const WORKERS_ENV: &str = "MIXBOUND_WORKERS";
const BATCH: u64 = 64;
const WINDOW_BATCHES: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    #[default]
    None,
    Positivity,
}

fn default_seed() -> u64 {
    7
}

fn default_replicates() -> u64 {
    20_000
}

/// Experiment parameters, readable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<SlowVariationParams>,
    #[serde(default)]
    pub n: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Not echoed: results must not depend on it.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub conditioning: Conditioning,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_conditioned: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    /// Fit over [0, theta_max] instead of [0, 1].
    #[serde(default)]
    pub extended: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pair: None,
            tail: None,
            n: 1000,
            replicates: default_replicates(),
            master_seed: default_seed(),
            workers: None,
            conditioning: Conditioning::None,
            target_conditioned: None,
            n_grid: None,
            extended: false,
            tau: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Input(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Input("replicates must be at least 1".into()));
        }
        if let Some(t) = &self.tail {
            t.validate()?;
        }
        Ok(())
    }

    pub fn pair(&self) -> Result<GeneratorPair> {
        let name = self.pair.as_deref().ok_or_else(|| Error::Input("config needs a pair".into()))?;
        GeneratorPair::from_name(name)
    }

    pub fn grid(&self) -> Vec<u64> {
        self.n_grid.clone().unwrap_or_else(|| vec![self.n])
    }
}

/// Worker count: the environment override, else available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|w| *w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Key for a family of replicate streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn new(master_seed: u64, label: &str) -> Self {
        let mut h = Sha256::new();
        h.update(master_seed.to_le_bytes());
        h.update(label.as_bytes());
        StreamKey(h.finalize().into())
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::from_seed(self.0);
        r.set_stream(index);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Capped,
    Empty,
}

impl RunStatus {
    pub fn is_complete(&self) -> bool {
        *self == RunStatus::Complete
    }
}

/// Outputs of a replicate run, in replicate order.
#[derive(Debug, Clone)]
pub struct Run<T> {
    pub outputs: Vec<T>,
    pub used: u64,
    pub hits: u64,
    pub capped: bool,
}

pub struct Engine {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Engine {
    pub fn new(workers: usize) -> Result<Self> {
        let workers = workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
        Ok(Engine { pool, workers })
    }

    pub fn for_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(cfg.workers.unwrap_or_else(default_workers))
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs replicates 0, 1, ... until `max_reps` are done or, with a target,
    /// until `target` outputs satisfy `hit`. Outputs past the target-th hit
    /// are discarded, so the result is independent of scheduling.
    pub fn run<T, F, H>(&self, key: StreamKey, max_reps: u64, target: Option<u64>, f: F, hit: H) -> Run<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
        H: Fn(&T) -> bool,
    {
        let mut outputs = Vec::new();
        let mut hits = 0u64;
        let mut next = 0u64;
        let window = BATCH * WINDOW_BATCHES;
        while next < max_reps {
            let end = (next + window).min(max_reps);
            let batches: Vec<(u64, u64)> = (next..end).step_by(BATCH as usize).map(|s| (s, (s + BATCH).min(end))).collect();
            let chunk: Vec<Vec<T>> = self.pool.install(|| {
                batches
                    .par_iter()
                    .map(|&(s, e)| {
                        (s..e)
                            .map(|i| {
                                let mut rng = key.rng(i);
                                f(&mut rng, i)
                            })
                            .collect()
                    })
                    .collect()
            });
            for out in chunk.into_iter().flatten() {
                let is_hit = hit(&out);
                outputs.push(out);
                if is_hit {
                    hits += 1;
                    if Some(hits) == target {
                        let used = outputs.len() as u64;
                        return Run { outputs, used, hits, capped: false };
                    }
                }
            }
            next = end;
        }
        let capped = target.is_some_and(|t| hits < t);
        Run { used: outputs.len() as u64, outputs, hits, capped }
    }
}

/// sqrt(p (1 - p) / m).
pub fn binomial_se(p: f64, m: u64) -> f64 {
    (p * (1.0 - p) / m as f64).sqrt()
}

// ---------------------------------------------------------------- GOF tools

/// Reference laws for goodness-of-fit tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefLaw {
    G,
    Chi2_1,
    Uniform,
}

impl RefLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            RefLaw::G => GLaw.cdf(x),
            RefLaw::Chi2_1 => chi2_1_cdf(x.max(0.0)),
            RefLaw::Uniform => x.clamp(0.0, 1.0),
        }
    }
}

/// 20 equal-probability bins under the reference law; sum (O - E)^2 / E.
pub fn chi2_gof_20bin(samples: &[f64], law: RefLaw) -> Result<f64> {
    chi2_gof(samples, |x| law.cdf(x), 20)
}

pub fn chi2_gof(samples: &[f64], cdf: impl Fn(f64) -> f64, bins: usize) -> Result<f64> {
    if samples.len() < 10 * bins {
        return Err(Error::Input(format!("need at least {} samples, got {}", 10 * bins, samples.len())));
    }
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let b = ((cdf(x) * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let e = samples.len() as f64 / bins as f64;
    Ok(counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum())
}

/// One-sample Kolmogorov-Smirnov distance.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

pub fn ks_uniform(samples: &[f64]) -> f64 {
    ks_statistic(samples, |x| x.clamp(0.0, 1.0))
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Samples outside [lo, hi].
    pub outside: u64,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        let mut outside = 0;
        for &x in samples {
            if !(x >= lo && x <= hi) {
                outside += 1;
                continue;
            }
            let b = (((x - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Histogram { lo, hi, counts, outside }
    }

    pub fn edges(&self) -> Vec<f64> {
        let k = self.counts.len();
        (0..=k).map(|i| self.lo + (self.hi - self.lo) * i as f64 / k as f64).collect()
    }
}

// ------------------------------------------------------- boundary error rate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: u64,
    pub replicates: u64,
    pub positives: u64,
    pub p_hat: f64,
    pub se: f64,
    pub theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub pair: String,
    pub config: ExperimentConfig,
    pub points: Vec<RatePoint>,
}

/// Positivity of a fresh F0 sample of size n (mean of h above 1).
fn positive_draw<R: Rng>(pair: &GeneratorPair, n: u64, rng: &mut R) -> bool {
    if !pair.support_flags.equal_supports {
        // likelihood decomposition: flat or increasing iff no h = 0
        return (0..n).all(|_| pair.h(pair.sample_f0(rng)) != 0.0);
    }
    let mut s = NeumaierSum::default();
    for _ in 0..n {
        let h = pair.h(pair.sample_f0(rng));
        if h == f64::INFINITY {
            return true;
        }
        s.add(h - 1.0);
    }
    s.sum() > 0.0
}

/// P0(theta-hat > 0) against n.
pub fn boundary_rate_experiment(engine: &Engine, cfg: &ExperimentConfig, n_grid: &[u64]) -> Result<RateCurve> {
    let pair = cfg.pair()?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        if n == 0 {
            return Err(Error::Input("sample size must be positive".into()));
        }
        let key = StreamKey::new(cfg.master_seed, &format!("rate/{}/{n}", pair.name));
        let run = engine.run(key, cfg.replicates, None, |rng, _| positive_draw(&pair, n, rng), |b| *b);
        let p = run.hits as f64 / run.used as f64;
        points.push(RatePoint {
            n,
            replicates: run.used,
            positives: run.hits,
            p_hat: p,
            se: binomial_se(p, run.used),
            theory: pair.rate.theory(n as f64),
        });
    }
    Ok(RateCurve { pair: pair.name.clone(), config: cfg.clone(), points })
}

// ---------------------------------------------------- conditioned LR law

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondRecord {
    pub replicate: u64,
    pub theta_hat: f64,
    pub r: f64,
    pub lambda: f64,
    pub lambda_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLrSummary {
    pub pair: String,
    pub config: ExperimentConfig,
    pub n: u64,
    pub replicates_used: u64,
    pub conditioned: u64,
    pub status: RunStatus,
    pub r_ge_1: u64,
    pub kappa_hat: f64,
    pub ks_r: f64,
    pub x2_g: f64,
    pub x2_chi2: f64,
    pub r_first_decile: f64,
    pub r_last_decile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLrResult {
    pub summary: ConditionalLrSummary,
    pub records: Vec<CondRecord>,
    pub hist_r: Histogram,
    pub hist_sqrt_lambda: Histogram,
}

fn h_vector<R: Rng>(pair: &GeneratorPair, n: u64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| pair.h(pair.sample_f0(rng))).collect()
}

/// Runs F0 replicates until `target_conditioned` positivity events and
/// fits the exact likelihood on each.
pub fn conditional_lr_experiment(engine: &Engine, cfg: &ExperimentConfig) -> Result<ConditionalLrResult> {
    let pair = cfg.pair()?;
    if !pair.support_flags.equal_supports {
        return Err(Error::Input(format!("{} has unequal supports; the likelihood ratio is infinite", pair.name)));
    }
    let n = cfg.n;
    let upper = if cfg.extended { pair.theta_bounds()?.theta_max } else { 1.0 };
    let key = StreamKey::new(cfg.master_seed, &format!("lr/{}/{n}", pair.name));
    let target = cfg.target_conditioned.or(Some(2000));
    let run = engine.run(
        key,
        cfg.replicates,
        target,
        |rng, idx| -> Option<Result<CondRecord>> {
            if !positive_draw(&pair, n, rng) {
                return None;
            }
            // replay the same stream to keep the ratios
            let h = h_vector(&pair, n, &mut key.rng(idx));
            Some(fit_theta_slice(&h, upper).and_then(|f| {
                let r = r_statistic(&h)?;
                Ok(CondRecord { replicate: idx, theta_hat: f.theta_hat(), r, lambda: f.lambda, lambda_tilde: approx_lr(r) })
            }))
        },
        |o| o.is_some(),
    );
    let records = run.outputs.into_iter().flatten().collect::<Result<Vec<_>>>()?;
    summarize_lr(pair.name.clone(), cfg, n, run.used, run.capped, records)
}

pub(crate) fn summarize_lr(
    pair: String,
    cfg: &ExperimentConfig,
    n: u64,
    used: u64,
    capped: bool,
    records: Vec<CondRecord>,
) -> Result<ConditionalLrResult> {
    let k = records.len() as u64;
    let status = if k == 0 {
        RunStatus::Empty
    } else if capped {
        RunStatus::Capped
    } else {
        RunStatus::Complete
    };
    let rs: Vec<f64> = records.iter().map(|c| c.r).collect();
    let lambdas: Vec<f64> = records.iter().map(|c| c.lambda).collect();
    let kappa = if k > 0 { bartlett_factor(&lambdas)? } else { f64::NAN };
    let adj: Vec<f64> = lambdas.iter().map(|l| l / kappa).collect();
    let (x2_g, x2_chi2) = if k >= 200 {
        (chi2_gof_20bin(&adj, RefLaw::G)?, chi2_gof_20bin(&adj, RefLaw::Chi2_1)?)
    } else {
        (f64::NAN, f64::NAN)
    };
    let frac = |pred: &dyn Fn(f64) -> bool| rs.iter().filter(|r| pred(**r)).count() as f64 / k.max(1) as f64;
    let summary = ConditionalLrSummary {
        pair,
        config: cfg.clone(),
        n,
        replicates_used: used,
        conditioned: k,
        status,
        r_ge_1: rs.iter().filter(|r| **r >= 1.0).count() as u64,
        kappa_hat: kappa,
        ks_r: if k > 0 { ks_uniform(&rs) } else { f64::NAN },
        x2_g,
        x2_chi2,
        r_first_decile: frac(&|r| r < 0.1),
        r_last_decile: frac(&|r| r >= 0.9 && r < 1.0),
    };
    let sqrt_adj: Vec<f64> = adj.iter().map(|v| v.sqrt()).collect();
    Ok(ConditionalLrResult {
        summary,
        hist_r: Histogram::new(&rs, 0.0, 1.0, 40),
        hist_sqrt_lambda: Histogram::new(&sqrt_adj, 0.0, 4.0, 40),
        records,
    })
}

// ------------------------------------------------------ non-null boundary

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonNullResult {
    pub pair: String,
    pub config: ExperimentConfig,
    pub n: u64,
    pub replicates: u64,
    pub below_one: u64,
    pub p_hat: f64,
    pub se: f64,
}

/// P1(theta-hat < 1): by concavity theta-hat < 1 iff l'(1) = sum (1 - 1/h_i) < 0.
pub fn non_null_boundary_experiment(engine: &Engine, cfg: &ExperimentConfig) -> Result<NonNullResult> {
    let pair = cfg.pair()?;
    let n = cfg.n;
    let key = StreamKey::new(cfg.master_seed, &format!("nonnull/{}/{n}", pair.name));
    let run = engine.run(
        key,
        cfg.replicates,
        None,
        |rng, _| {
            let mut s = NeumaierSum::default();
            for _ in 0..n {
                let h = pair.h(pair.sample_f1(rng));
                if h == 0.0 {
                    return true;
                }
                s.add(1.0 - 1.0 / h);
            }
            s.sum() < 0.0
        },
        |b| *b,
    );
    let p = run.hits as f64 / run.used as f64;
    Ok(NonNullResult { pair: pair.name.clone(), config: cfg.clone(), n, replicates: run.used, below_one: run.hits, p_hat: p, se: binomial_se(p, run.used) })
}

// --------------------------------------------------- stable exceedance

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceResult {
    pub alpha: f64,
    pub n: u64,
    pub replicates: u64,
    pub p_hat: f64,
    pub se: f64,
    pub theory: f64,
}

/// P(mean > mu) for Pareto(alpha) samples on [1, inf), alpha in (1, 2); the
/// limit is 1 - 1/alpha.
pub fn stable_exceedance_experiment(engine: &Engine, alpha: f64, n: u64, replicates: u64, seed: u64) -> Result<ExceedanceResult> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Input(format!("alpha = {alpha} outside (1, 2)")));
    }
    let mu = alpha / (alpha - 1.0);
    let key = StreamKey::new(seed, &format!("pareto/{alpha}/{n}"));
    let run = engine.run(
        key,
        replicates,
        None,
        |rng, _| {
            let mut s = NeumaierSum::default();
            for _ in 0..n {
                let u: f64 = rng.random();
                s.add((1.0 - u).powf(-1.0 / alpha) - mu);
            }
            s.sum() > 0.0
        },
        |b| *b,
    );
    let p = run.hits as f64 / run.used as f64;
    Ok(ExceedanceResult { alpha, n, replicates: run.used, p_hat: p, se: binomial_se(p, run.used), theory: 1.0 - 1.0 / alpha })
}

// ------------------------------------------ order statistics and joint law

#[derive(Debug, Clone, PartialEq)]
pub struct TopOrderStats {
    /// X_(n), X_(n-1), ..., X_(n-k), descending.
    pub values: Vec<f64>,
    /// Some requested survival level reached 1 and was clamped to x0.
    pub clamped: bool,
    /// ln Gamma_(n+1), the normalizer of the spacings.
    pub ln_total: f64,
}

/// Top k+1 order statistics of n canonical-tail draws via exponential
/// spacings: sf(X_(n-j)) = (e_0 + ... + e_j) / (e_0 + ... + e_n).
pub fn top_order_stats_sampler<R: Rng + ?Sized>(tail: &CanonicalTail, n: u64, k: usize, rng: &mut R) -> Result<TopOrderStats> {
    if (k as u64) >= n {
        return Err(Error::Input(format!("need k < n, got k = {k}, n = {n}")));
    }
    let mut partial = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    for _ in 0..=k {
        let e: f64 = Exp1.sample(rng);
        acc += e;
        partial.push(acc);
    }
    let rest = n - k as u64;
    let g: f64 = Gamma::new(rest as f64, 1.0).map_err(|e| Error::Input(e.to_string()))?.sample(rng);
    let ln_total = (acc + g).ln();
    let mut clamped = false;
    let values = partial
        .iter()
        .map(|&s| {
            let lp = s.ln() - ln_total;
            let x = tail.inv_sf_ln(lp);
            if x <= tail.x0 {
                clamped = true;
            }
            x
        })
        .collect();
    Ok(TopOrderStats { values, clamped, ln_total })
}

/// Sum and maximum of n canonical-tail draws: the top `k + 1` exactly, the
/// rest by a normal law with the exact truncated mean and variance.
pub fn hybrid_sum_max<R: Rng + ?Sized>(tail: &CanonicalTail, n: u64, k: usize, rng: &mut R) -> Result<(f64, f64)> {
    let top = top_order_stats_sampler(tail, n, k, rng)?;
    let t = *top.values.last().expect("k + 1 values");
    let m = (n - k as u64 - 1) as f64;
    let (e1, e2) = tail.truncated_moments(t)?;
    let below = 1.0 - tail.sf(t);
    let mu = e1 / below;
    let var = (e2 / below - mu * mu).max(0.0);
    let z: f64 = StandardNormal.sample(rng);
    let rest = m * mu + (m * var).sqrt() * z;
    let s = top.values.iter().sum::<f64>() + rest;
    Ok((s, top.values[0]))
}

/// Direct simulation of sum and maximum.
pub fn direct_sum_max<R: Rng + ?Sized>(tail: &CanonicalTail, n: u64, rng: &mut R) -> (f64, f64) {
    let mut s = NeumaierSum::default();
    let mut mx = f64::NEG_INFINITY;
    for _ in 0..n {
        let x = tail.sample(rng);
        s.add(x);
        mx = mx.max(x);
    }
    (s.sum(), mx)
}

pub const HYBRID_TOP_K: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridGate {
    pub n: u64,
    pub draws: u64,
    pub ks_sum: f64,
    pub ks_max: f64,
    pub passed: bool,
}

/// Compares the hybrid sampler with direct simulation (KS < 0.03 on both the
/// sum and the maximum).
pub fn hybrid_gate(engine: &Engine, tail: &CanonicalTail, n: u64, draws: u64, seed: u64) -> Result<HybridGate> {
    let kh = StreamKey::new(seed, &format!("gate/hybrid/{n}"));
    let kd = StreamKey::new(seed, &format!("gate/direct/{n}"));
    let hy = engine.run(kh, draws, None, |rng, _| hybrid_sum_max(tail, n, HYBRID_TOP_K, rng), |_| false);
    let hy = hy.outputs.into_iter().collect::<Result<Vec<_>>>()?;
    let di = engine.run(kd, draws, None, |rng, _| direct_sum_max(tail, n, rng), |_| false).outputs;
    let split = |v: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { v.iter().copied().unzip() };
    let (hs, hm) = split(&hy);
    let (ds, dm) = split(&di);
    let ks_sum = ks_two_sample(&hs, &ds);
    let ks_max = ks_two_sample(&hm, &dm);
    Ok(HybridGate { n, draws, ks_sum, ks_max, passed: ks_sum < 0.03 && ks_max < 0.03 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub replicate: u64,
    /// n Xbar / T_n
    pub sum_over_t: f64,
    /// X_(n) / T_n
    pub max_over_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    pub n: u64,
    pub t_n: f64,
    pub replicates_used: u64,
    pub conditioned: u64,
    pub status: RunStatus,
    /// KS of n Xbar / X_(n) against U(0, 1), given Xbar > 0.
    pub ks_ratio: f64,
    /// KS of X_(n) / T_n against 1 / (1 - U), given Xbar > 0.
    pub ks_max: f64,
    pub big_max_count: u64,
    /// P(Xbar > 0 | X_(n) > 2 T_n).
    pub p_pos_given_big_max: f64,
    /// median |X_(n)/T_n - n Xbar/T_n - 1|, given Xbar > 0.
    pub median_line_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointResult {
    pub tail: SlowVariationParams,
    pub config: ExperimentConfig,
    pub points: Vec<JointSummary>,
    #[serde(skip)]
    pub records: Vec<Vec<JointRecord>>,
}

/// Joint law of (n Xbar / T_n, X_(n) / T_n) for the canonical tail shifted
/// to mean zero, on the configured n grid.
pub fn joint_limit_experiment(engine: &Engine, tail_params: &SlowVariationParams, cfg: &ExperimentConfig) -> Result<JointResult> {
    let tail = CanonicalTail::new(*tail_params)?;
    let target = cfg.target_conditioned.unwrap_or(2000);
    let mut points = Vec::new();
    let mut all = Vec::new();
    for n in cfg.grid() {
        if (n as usize) <= HYBRID_TOP_K + 1 {
            return Err(Error::Input(format!("n = {n} too small for the hybrid sampler")));
        }
        let t_n = stabilizing(tail_params, n as f64)?.t_n;
        let key = StreamKey::new(cfg.master_seed, &format!("joint/{n}"));
        let run = engine.run(
            key,
            cfg.replicates,
            Some(target),
            |rng, idx| {
                hybrid_sum_max(&tail, n, HYBRID_TOP_K, rng).map(|(s, mx)| {
                    let c = s - n as f64 * tail.mean;
                    JointRecord { replicate: idx, sum_over_t: c / t_n, max_over_t: (mx - tail.mean) / t_n }
                })
            },
            |r| r.as_ref().is_ok_and(|r| r.sum_over_t > 0.0),
        );
        let recs = run.outputs.into_iter().collect::<Result<Vec<_>>>()?;
        let big: Vec<&JointRecord> = recs.iter().filter(|r| r.max_over_t > 2.0).collect();
        let big_pos = big.iter().filter(|r| r.sum_over_t > 0.0).count();
        let cond: Vec<JointRecord> = recs.iter().copied().filter(|r| r.sum_over_t > 0.0).collect();
        let ratio: Vec<f64> = cond.iter().map(|r| r.sum_over_t / r.max_over_t).collect();
        let maxes: Vec<f64> = cond.iter().map(|r| r.max_over_t).collect();
        let dev: Vec<f64> = cond.iter().map(|r| (r.max_over_t - r.sum_over_t - 1.0).abs()).collect();
        let k = cond.len() as u64;
        points.push(JointSummary {
            n,
            t_n,
            replicates_used: run.used,
            conditioned: k,
            status: if k == 0 {
                RunStatus::Empty
            } else if run.capped {
                RunStatus::Capped
            } else {
                RunStatus::Complete
            },
            ks_ratio: ks_uniform(&ratio),
            ks_max: ks_statistic(&maxes, |y| if y <= 1.0 { 0.0 } else { 1.0 - 1.0 / y }),
            big_max_count: big.len() as u64,
            p_pos_given_big_max: big_pos as f64 / big.len().max(1) as f64,
            median_line_dev: median(&dev),
        });
        all.push(cond);
    }
    Ok(JointResult { tail: *tail_params, config: cfg.clone(), points, records: all })
}

//! The zeta_nu inverse-power family, psi_nu = phi zeta_nu, and composite
//! boundary fits over (theta, nu).

use crate::error::{Error, Result};
use crate::generators::GeneratorPair;
use crate::inference::{bartlett_factor, fit_theta_ln, fit_theta_slice};
use crate::quad::NeumaierSum;
use crate::simlab::{binomial_se, chi2_gof_20bin, median, Engine, ExperimentConfig, RatePoint, RefLaw, RunStatus, StreamKey};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use crate::quad::{self, Tol};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::LN_2;
use std::sync::OnceLock;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// ln of the coefficient of x^(2r) in zeta_nu.
fn ln_coef(nu: f64, r: usize) -> f64 {
    let r = r as f64;
    (nu * (2.0 - nu)).ln() - ln_gamma(2.0 - nu / 2.0) + (r - 2.0) * LN_2 + ln_gamma(r - nu / 2.0) - ln_gamma(2.0 * r + 1.0)
}

/// Power-series coefficients c_r(nu), r = 1..=terms, so that
/// zeta_nu(x) = sum_r c_r x^(2r).
pub fn zeta_coefficients(nu: f64, terms: usize) -> Vec<f64> {
    if nu == 2.0 {
        let mut v = vec![0.0; terms];
        if terms > 0 {
            v[0] = 1.0;
        }
        return v;
    }
    (1..=terms).map(|r| ln_coef(nu, r).exp()).collect()
}

/// ln zeta_nu(x) by the power series, in log space. Valid for any x; the
/// number of terms grows like x^2.
pub fn ln_zeta_series(x: f64, nu: f64) -> f64 {
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    let l2 = (x * x).ln();
    if nu == 2.0 {
        return l2;
    }
    let mut lc = ln_coef(nu, 1);
    let mut m = lc + l2;
    let mut s = 1.0;
    let peak = 0.5 * x * x + 2.0;
    let mut r = 1usize;
    loop {
        // c_{r+1}/c_r = 2 (r - nu/2) / ((2r+2)(2r+1))
        let rf = r as f64;
        lc += LN_2 + (rf - nu / 2.0).ln() - ((2.0 * rf + 2.0) * (2.0 * rf + 1.0)).ln();
        r += 1;
        let t = lc + r as f64 * l2;
        if t > m {
            s = s * (m - t).exp() + 1.0;
            m = t;
        } else {
            s += (t - m).exp();
        }
        if r as f64 > peak && t - m < -40.0 {
            break;
        }
        if r > 200_000 {
            break;
        }
    }
    m + s.ln()
}

/// K_nu = nu (2 - nu) 2^(nu/2 - 2) / Gamma(2 - nu/2).
pub fn k_nu_closed_form(nu: f64) -> f64 {
    if nu == 2.0 {
        return 0.0;
    }
    (nu * (2.0 - nu)).ln().exp() * 2f64.powf(nu / 2.0 - 2.0) / ln_gamma(2.0 - nu / 2.0).exp()
}

/// K_nu by averaging psi_nu(x) x^(nu+1) over x in [30, 100] with the series
/// branch only.
pub fn k_nu_plateau(nu: f64) -> f64 {
    let pts = 71;
    let mut s = 0.0;
    for i in 0..pts {
        let x = 30.0 + 70.0 * i as f64 / (pts - 1) as f64;
        let lpsi = ln_zeta_series(x, nu) - 0.5 * x * x - LN_SQRT_2PI;
        s += (lpsi + (nu + 1.0) * x.ln()).exp();
    }
    s / pts as f64
}

/// Hermite table of the upper tail of psi_nu on [0, crossover].
#[derive(Debug)]
struct TailTable {
    xs: Vec<f64>,
    sf: Vec<f64>,
    dens: Vec<f64>,
}

/// The zeta_nu family member with cached tail constant and branch crossover.
#[derive(Debug)]
pub struct ZetaFamily {
    pub nu: f64,
    pub series_terms: usize,
    pub k_nu: f64,
    pub crossover: f64,
    table: OnceLock<TailTable>,
}

impl Clone for ZetaFamily {
    fn clone(&self) -> Self {
        ZetaFamily { nu: self.nu, series_terms: self.series_terms, k_nu: self.k_nu, crossover: self.crossover, table: OnceLock::new() }
    }
}

impl ZetaFamily {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 2.0) {
            return Err(Error::Range(format!("nu = {nu} outside (0, 2]")));
        }
        let k_nu = k_nu_closed_form(nu);
        let mut fam = ZetaFamily { nu, series_terms: 0, k_nu, crossover: f64::INFINITY, table: OnceLock::new() };
        if nu < 2.0 {
            let mut found = None;
            let mut x = 6.0;
            while x <= 30.0 {
                let a = fam.ln_psi_series(x);
                let b = fam.ln_psi_asymptotic(x);
                if (a - b).abs() < 1e-10 {
                    found = Some(x);
                    break;
                }
                x += 0.5;
            }
            fam.crossover = found.ok_or_else(|| Error::numeric("series and asymptotic branches never agree", f64::NAN))?;
            fam.series_terms = (0.5 * fam.crossover * fam.crossover + 60.0) as usize;
        } else {
            fam.series_terms = 1;
        }
        Ok(fam)
    }

    fn ln_psi_series(&self, x: f64) -> f64 {
        ln_zeta_series(x, self.nu) - 0.5 * x * x - LN_SQRT_2PI
    }

    /// ln of K x^(-nu-1) sum_k (nu+1)_{2k} / (2^k k!) x^(-2k), summed to the
    /// smallest term.
    fn ln_psi_asymptotic(&self, x: f64) -> f64 {
        let x = x.abs();
        let inv2 = 1.0 / (x * x);
        let mut term = 1.0;
        let mut s = 1.0;
        let mut k = 0.0;
        loop {
            let a = self.nu + 1.0 + 2.0 * k;
            let next = term * a * (a + 1.0) * inv2 / (2.0 * (k + 1.0));
            if next >= term || next < 1e-17 * s {
                break;
            }
            s += next;
            term = next;
            k += 1.0;
        }
        self.k_nu.ln() - (self.nu + 1.0) * x.ln() + s.ln()
    }

    /// ln zeta_nu(x) = log density ratio of psi_nu against phi.
    pub fn ln_zeta(&self, x: f64) -> f64 {
        let ax = x.abs();
        if self.nu == 2.0 {
            return 2.0 * ax.ln();
        }
        if ax < self.crossover {
            ln_zeta_series(ax, self.nu)
        } else {
            self.ln_psi_asymptotic(ax) + 0.5 * ax * ax + LN_SQRT_2PI
        }
    }

    pub fn zeta(&self, x: f64) -> f64 {
        self.ln_zeta(x).exp()
    }

    pub fn ln_psi(&self, x: f64) -> f64 {
        let ax = x.abs();
        if self.nu == 2.0 || ax < self.crossover {
            self.ln_zeta(ax) - 0.5 * ax * ax - LN_SQRT_2PI
        } else {
            self.ln_psi_asymptotic(ax)
        }
    }

    pub fn psi(&self, x: f64) -> f64 {
        self.ln_psi(x).exp()
    }

    fn sf_asymptotic(&self, x: f64) -> f64 {
        let inv2 = 1.0 / (x * x);
        let mut coef = 1.0;
        let mut term = 1.0 / self.nu;
        let mut s = term;
        let mut k = 0.0;
        loop {
            let a = self.nu + 1.0 + 2.0 * k;
            let c = coef * a * (a + 1.0) / (2.0 * (k + 1.0));
            let next = c * inv2.powf(k + 1.0) / (self.nu + 2.0 * (k + 1.0));
            if next >= term || next < 1e-17 * s {
                break;
            }
            s += next;
            term = next;
            coef = c;
            k += 1.0;
        }
        self.k_nu * x.powf(-self.nu) * s
    }

    fn table(&self) -> &TailTable {
        self.table.get_or_init(|| {
            let m = 4096;
            let xc = self.crossover;
            let xs: Vec<f64> = (0..=m).map(|i| xc * i as f64 / m as f64).collect();
            let mut sf = vec![0.0; m + 1];
            sf[m] = self.sf_asymptotic(xc);
            let tol = Tol::new(1e-17, 1e-13);
            for j in (0..m).rev() {
                let q = quad::integrate(|t| self.psi(t), xs[j], xs[j + 1], tol).map(|q| q.value).unwrap_or(f64::NAN);
                sf[j] = sf[j + 1] + q;
            }
            let dens = xs.iter().map(|&x| self.psi(x)).collect();
            TailTable { xs, sf, dens }
        })
    }

    /// Upper tail int_x^inf psi_nu for x >= 0.
    pub fn sf(&self, x: f64) -> f64 {
        let x = x.abs();
        if self.nu == 2.0 {
            use statrs::function::erf::erfc;
            let phi = (-0.5 * x * x - LN_SQRT_2PI).exp();
            return x * phi + 0.5 * erfc(x / std::f64::consts::SQRT_2);
        }
        if x >= self.crossover {
            return self.sf_asymptotic(x);
        }
        let t = self.table();
        let h = t.xs[1];
        let j = ((x / h) as usize).min(t.xs.len() - 2);
        let q = quad::integrate(|s| self.psi(s), x, t.xs[j + 1], Tol::new(1e-17, 1e-13)).map(|q| q.value).unwrap_or(f64::NAN);
        t.sf[j + 1] + q
    }

    /// Total mass 2 sf(0); should be one.
    pub fn total_mass(&self) -> f64 {
        if self.nu == 2.0 {
            return 1.0;
        }
        2.0 * self.table().sf[0]
    }

    /// Inverse of the tail: x >= 0 with sf(x) = p, 0 < p <= 1/2.
    pub fn inv_sf(&self, p: f64) -> f64 {
        if self.nu == 2.0 {
            return quad::bisect(|x| self.sf(x) - p, 0.0, 40.0, 1e-14, 200).unwrap_or(f64::NAN);
        }
        let t = self.table();
        if p <= t.sf[t.sf.len() - 1] {
            // power tail: Newton on log sf
            let mut x = (self.k_nu / (self.nu * p)).powf(1.0 / self.nu).max(self.crossover);
            for _ in 0..60 {
                let f = self.sf_asymptotic(x);
                let step = (f.ln() - p.ln()) * f / (x * self.psi(x)) * x;
                let nx = (x + step).max(self.crossover);
                if (nx - x).abs() <= 1e-14 * x {
                    x = nx;
                    break;
                }
                x = nx;
            }
            return x;
        }
        // sf is decreasing along the table
        let j = match t.sf.binary_search_by(|v| p.total_cmp(v)) {
            Ok(j) => return t.xs[j],
            Err(j) => j - 1,
        };
        let (x0, x1) = (t.xs[j], t.xs[j + 1]);
        let (s0, s1, d0, d1) = (t.sf[j], t.sf[j + 1], -t.dens[j], -t.dens[j + 1]);
        let hw = x1 - x0;
        // cubic Hermite of sf on [x0, x1], solved by Newton
        let herm = |u: f64| {
            let (u2, u3) = (u * u, u * u * u);
            let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
            let h10 = u3 - 2.0 * u2 + u;
            let h01 = -2.0 * u3 + 3.0 * u2;
            let h11 = u3 - u2;
            let v = h00 * s0 + h10 * hw * d0 + h01 * s1 + h11 * hw * d1;
            let dv = ((6.0 * u2 - 6.0 * u) * s0 + (3.0 * u2 - 4.0 * u + 1.0) * hw * d0 + (-6.0 * u2 + 6.0 * u) * s1 + (3.0 * u2 - 2.0 * u) * hw * d1) / hw;
            (v, dv)
        };
        let mut u = (s0 - p) / (s0 - s1);
        for _ in 0..20 {
            let (v, dv) = herm(u);
            let nu_ = (u - (v - p) / (dv * hw)).clamp(0.0, 1.0);
            if (nu_ - u).abs() < 1e-15 {
                u = nu_;
                break;
            }
            u = nu_;
        }
        x0 + u * hw
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let p = 0.5 * (1.0 - u);
        let x = if p <= 0.0 { self.crossover } else { self.inv_sf(p.max(f64::MIN_POSITIVE)) };
        if rng.random::<bool>() {
            x
        } else {
            -x
        }
    }
}

/// zeta_nu(x) by the power series.
pub fn zeta_nu(x: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu <= 2.0) {
        return Err(Error::Range(format!("nu = {nu} outside (0, 2]")));
    }
    Ok(ln_zeta_series(x.abs(), nu).exp())
}

// ------------------------------------------------------------ composite fits

/// Sample-size independent pieces of the composite model: the nu grid and
/// the series coefficients per grid point.
#[derive(Debug, Clone)]
pub struct CompositeModel {
    pub tau: f64,
    pub grid: Vec<f64>,
    coefs: Vec<Vec<f64>>,
}

/// Term counts for |x| below 2, 4 and 7; beyond 7 the log-space series is used.
const BUCKET_EDGES: [f64; 3] = [2.0, 4.0, 7.0];
const BUCKET_TERMS: [usize; 3] = [24, 50, 100];
pub const NU_GRID_POINTS: usize = 64;

fn bucket(ax: f64) -> Option<usize> {
    BUCKET_EDGES.iter().position(|&e| ax < e)
}

impl CompositeModel {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 2.0) {
            return Err(Error::Range(format!("tau = {tau} outside (0, 2]")));
        }
        let k = NU_GRID_POINTS;
        // log-spaced on [tau/256, tau]; the last point is tau exactly
        let grid: Vec<f64> = (0..k).map(|j| if j + 1 == k { tau } else { tau * 2f64.powf(-8.0 * (1.0 - j as f64 / (k - 1) as f64)) }).collect();
        let coefs = grid.iter().map(|&nu| zeta_coefficients(nu, BUCKET_TERMS[2])).collect();
        Ok(CompositeModel { tau, grid, coefs })
    }

    /// zeta_nu at the data for an arbitrary nu in (0, tau].
    pub fn zeta_vector(&self, xs: &[f64], nu: f64) -> Vec<f64> {
        let c = self.coefs_for(nu);
        xs.iter().map(|&x| zeta_poly(&c, nu, x)).collect()
    }

    /// ln zeta_nu at the data; stays finite where zeta_nu overflows.
    pub fn ln_zeta_vector(&self, xs: &[f64], nu: f64) -> Vec<f64> {
        let c = self.coefs_for(nu);
        xs.iter()
            .map(|&x| match bucket(x.abs()) {
                Some(_) => zeta_poly(&c, nu, x).ln(),
                None => ln_zeta_series(x.abs(), nu),
            })
            .collect()
    }

    fn coefs_for(&self, nu: f64) -> Vec<f64> {
        match self.grid.iter().position(|&g| g == nu) {
            Some(j) => self.coefs[j].clone(),
            None => zeta_coefficients(nu, BUCKET_TERMS[2]),
        }
    }
}

fn zeta_poly(c: &[f64], nu: f64, x: f64) -> f64 {
    let ax = x.abs();
    match bucket(ax) {
        Some(b) => {
            let y = x * x;
            let terms = BUCKET_TERMS[b];
            let mut acc = 0.0;
            for r in (0..terms).rev() {
                acc = acc * y + c[r];
            }
            acc * y
        }
        None => ln_zeta_series(ax, nu).exp(),
    }
}

/// Bucketed power sums M_r = sum x^(2r) for the sum of zeta_nu over a sample,
/// at every grid nu at once.
#[derive(Debug, Clone)]
pub struct PowerSums {
    sums: [Vec<f64>; 3],
    far: Vec<f64>,
    pub n: u64,
}

impl Default for PowerSums {
    fn default() -> Self {
        PowerSums { sums: [vec![0.0; BUCKET_TERMS[0]], vec![0.0; BUCKET_TERMS[1]], vec![0.0; BUCKET_TERMS[2]]], far: Vec::new(), n: 0 }
    }
}

impl PowerSums {
    #[inline]
    pub fn add(&mut self, x: f64) {
        self.n += 1;
        let ax = x.abs();
        match bucket(ax) {
            Some(b) => {
                let y = x * x;
                let mut p = y;
                for m in self.sums[b].iter_mut() {
                    *m += p;
                    p *= y;
                }
            }
            None => self.far.push(ax),
        }
    }

    /// sum_i zeta_nu(x_i) for each grid nu.
    pub fn zeta_sums(&self, model: &CompositeModel) -> Vec<f64> {
        model
            .grid
            .iter()
            .zip(&model.coefs)
            .map(|(&nu, c)| {
                let mut s = 0.0;
                for b in 0..3 {
                    for (m, cr) in self.sums[b].iter().zip(c) {
                        s += cr * m;
                    }
                }
                s + self.far.iter().map(|&x| ln_zeta_series(x, nu).exp()).sum::<f64>()
            })
            .collect()
    }

    /// Some grid nu has mean zeta_nu above 1.
    pub fn positive(&self, model: &CompositeModel) -> bool {
        self.zeta_sums(model).iter().any(|&s| s > self.n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeFit {
    pub theta_hat: f64,
    /// NaN (null in JSON) when theta_hat = 0 and nu is not identified.
    pub nu_hat: f64,
    pub lambda: f64,
    pub positive: bool,
    pub nu_hat_is_tau: bool,
    /// (nu, Lambda at the inner maximum) on the grid.
    pub profile: Vec<(f64, f64)>,
}

/// Joint maximum likelihood over theta in [0, 1] and nu in (0, tau].
pub fn composite_fit(x_data: &[f64], tau: f64) -> Result<CompositeFit> {
    let model = CompositeModel::new(tau)?;
    composite_fit_with(&model, x_data)
}

pub fn composite_fit_with(model: &CompositeModel, xs: &[f64]) -> Result<CompositeFit> {
    if xs.is_empty() {
        return Err(Error::Degenerate("empty sample".into()));
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::Input(format!("non-finite observation {x}")));
    }
    let mut ps = PowerSums::default();
    for &x in xs {
        ps.add(x);
    }
    let sums = ps.zeta_sums(model);
    let n = xs.len() as f64;
    let inner = |nu: f64| -> Result<(f64, f64)> {
        let f = fit_theta_ln(&model.ln_zeta_vector(xs, nu), 1.0)?;
        Ok((f.lambda, f.theta_hat()))
    };
    let mut profile = Vec::with_capacity(model.grid.len());
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, (&nu, &s)) in model.grid.iter().zip(&sums).enumerate() {
        // the inner fit is zero unless the mean of zeta_nu exceeds one
        let (lam, th) = if s > n { inner(nu)? } else { (0.0, 0.0) };
        profile.push((nu, lam));
        if th > 0.0 && best.is_none_or(|b| lam > b.1) {
            best = Some((j, lam, th));
        }
    }
    let Some((j, lam, th)) = best else {
        return Ok(CompositeFit { theta_hat: 0.0, nu_hat: f64::NAN, lambda: 0.0, positive: false, nu_hat_is_tau: false, profile });
    };
    let mut nu_hat = model.grid[j];
    let (mut lambda, mut theta) = (lam, th);
    // golden refinement in log nu between the grid neighbours
    let lo = model.grid[j.saturating_sub(1)].ln();
    let hi = model.grid[(j + 1).min(model.grid.len() - 1)].ln();
    if hi > lo {
        let (u, v) = quad::golden_max(|u| inner(u.exp()).map(|r| r.0).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-3);
        if v > lambda {
            let nu = u.exp().min(model.tau);
            let (l2, t2) = inner(nu)?;
            if l2 > lambda {
                nu_hat = nu;
                lambda = l2;
                theta = t2;
            }
        }
    }
    Ok(CompositeFit { theta_hat: theta, nu_hat, lambda, positive: true, nu_hat_is_tau: nu_hat == model.tau, profile })
}

/// Limit of P0(theta-hat > 0): tau / (2 log n) for tau < 2, 1/2 at tau = 2.
pub fn composite_rate_theory(tau: f64, n: f64) -> f64 {
    if tau >= 2.0 {
        0.5
    } else {
        tau / (2.0 * n.ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeConditioned {
    pub n: u64,
    pub replicates_used: u64,
    pub conditioned: u64,
    pub status: RunStatus,
    pub nu_eq_tau: u64,
    pub frac_nu_eq_tau: f64,
    pub kappa_hat: f64,
    pub x2_g: f64,
    pub x2_chi2: f64,
    #[serde(skip)]
    pub fits: Vec<CompositeFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeSimResult {
    pub tau: f64,
    pub config: ExperimentConfig,
    pub rate: Vec<RatePoint>,
    pub conditioned: Option<CompositeConditioned>,
}

fn composite_positive<R: rand::Rng>(model: &CompositeModel, n: u64, rng: &mut R) -> bool {
    let mut ps = PowerSums::default();
    for _ in 0..n {
        let x: f64 = StandardNormal.sample(rng);
        ps.add(x);
    }
    ps.positive(model)
}

/// P0(theta-hat > 0) for the composite model on an n grid.
pub fn composite_rate_experiment(engine: &Engine, tau: f64, n_grid: &[u64], replicates: u64, seed: u64) -> Result<Vec<RatePoint>> {
    let model = CompositeModel::new(tau)?;
    let mut out = Vec::new();
    for &n in n_grid {
        let key = StreamKey::new(seed, &format!("composite/rate/{tau}/{n}"));
        let run = engine.run(key, replicates, None, |rng, _| composite_positive(&model, n, rng), |b| *b);
        let p = run.hits as f64 / run.used as f64;
        out.push(RatePoint { n, replicates: run.used, positives: run.hits, p_hat: p, se: binomial_se(p, run.used), theory: composite_rate_theory(tau, n as f64) });
    }
    Ok(out)
}

/// Composite fits on F0 samples conditioned on theta-hat > 0.
pub fn composite_conditioned_experiment(engine: &Engine, tau: f64, n: u64, max_reps: u64, target: u64, seed: u64) -> Result<CompositeConditioned> {
    let model = CompositeModel::new(tau)?;
    let key = StreamKey::new(seed, &format!("composite/cond/{tau}/{n}"));
    let run = engine.run(
        key,
        max_reps,
        Some(target),
        |rng, idx| {
            if !composite_positive(&model, n, rng) {
                return None;
            }
            let mut replay = key.rng(idx);
            let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut replay)).collect();
            Some(composite_fit_with(&model, &xs))
        },
        |o| o.is_some(),
    );
    let fits = run.outputs.into_iter().flatten().collect::<Result<Vec<_>>>()?;
    let k = fits.len() as u64;
    let eq = fits.iter().filter(|f| f.nu_hat_is_tau).count() as u64;
    let lambdas: Vec<f64> = fits.iter().map(|f| f.lambda).collect();
    let kappa = if k > 0 { bartlett_factor(&lambdas)? } else { f64::NAN };
    let adj: Vec<f64> = lambdas.iter().map(|l| l / kappa).collect();
    let (x2_g, x2_chi2) = if k >= 200 {
        (chi2_gof_20bin(&adj, RefLaw::G)?, chi2_gof_20bin(&adj, RefLaw::Chi2_1)?)
    } else {
        (f64::NAN, f64::NAN)
    };
    let status = if k == 0 {
        RunStatus::Empty
    } else if run.capped {
        RunStatus::Capped
    } else {
        RunStatus::Complete
    };
    Ok(CompositeConditioned {
        n,
        replicates_used: run.used,
        conditioned: k,
        status,
        nu_eq_tau: eq,
        frac_nu_eq_tau: eq as f64 / k.max(1) as f64,
        kappa_hat: kappa,
        x2_g,
        x2_chi2,
        fits,
    })
}

/// Rate curve on the configured n grid, plus conditioned fits at `n` when a
/// target is set.
pub fn composite_sim(engine: &Engine, cfg: &ExperimentConfig) -> Result<CompositeSimResult> {
    let tau = cfg.tau.unwrap_or(1.0);
    let rate = composite_rate_experiment(engine, tau, &cfg.grid(), cfg.replicates, cfg.master_seed)?;
    let conditioned = match cfg.target_conditioned {
        Some(t) => Some(composite_conditioned_experiment(engine, tau, cfg.n, cfg.replicates, t, cfg.master_seed)?),
        None => None,
    };
    Ok(CompositeSimResult { tau, config: cfg.clone(), rate, conditioned })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEquivalencePoint {
    pub n: u64,
    pub replicates_used: u64,
    pub conditioned: u64,
    pub status: RunStatus,
    pub median_abs_diff: f64,
    pub q90_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEquivalenceResult {
    pub pair1: String,
    pub pair2: String,
    pub config: ExperimentConfig,
    pub points: Vec<TailEquivalencePoint>,
}

/// |Lambda_1 - Lambda_2| on shared F0 samples, conditioned on theta-hat_1 > 0.
pub fn tail_equivalence_experiment(
    engine: &Engine,
    pair1: &GeneratorPair,
    pair2: &GeneratorPair,
    cfg: &ExperimentConfig,
) -> Result<TailEquivalenceResult> {
    let target = cfg.target_conditioned.unwrap_or(200);
    let mut points = Vec::new();
    for n in cfg.grid() {
        let key = StreamKey::new(cfg.master_seed, &format!("taileq/{}/{}/{n}", pair1.name, pair2.name));
        let run = engine.run(
            key,
            cfg.replicates,
            Some(target),
            |rng, idx| -> Option<Result<f64>> {
                let mut s = NeumaierSum::default();
                for _ in 0..n {
                    let x = pair1.sample_f0(rng);
                    s.add(pair1.h(x) - 1.0);
                }
                if !(s.sum() > 0.0) {
                    return None;
                }
                let mut replay = key.rng(idx);
                let xs: Vec<f64> = (0..n).map(|_| pair1.sample_f0(&mut replay)).collect();
                let h1: Vec<f64> = xs.iter().map(|&x| pair1.h(x)).collect();
                let h2: Vec<f64> = xs.iter().map(|&x| pair2.h(x)).collect();
                Some(fit_theta_slice(&h1, 1.0).and_then(|a| Ok((a.lambda - fit_theta_slice(&h2, 1.0)?.lambda).abs())))
            },
            |o| o.is_some(),
        );
        let mut d = run.outputs.into_iter().flatten().collect::<Result<Vec<_>>>()?;
        d.sort_by(f64::total_cmp);
        let k = d.len() as u64;
        points.push(TailEquivalencePoint {
            n,
            replicates_used: run.used,
            conditioned: k,
            status: if k == 0 {
                RunStatus::Empty
            } else if run.capped {
                RunStatus::Capped
            } else {
                RunStatus::Complete
            },
            median_abs_diff: median(&d),
            q90_abs_diff: if k > 0 { d[((0.9 * k as f64) as usize).min(d.len() - 1)] } else { f64::NAN },
        });
    }
    Ok(TailEquivalenceResult { pair1: pair1.name.clone(), pair2: pair2.name.clone(), config: cfg.clone(), points })
}

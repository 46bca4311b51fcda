//! Mixture generator pairs (F0, F1): log densities, log density ratios,
//! samplers, null tail models and the extended-parameter bounds.

use crate::asymptotics::{error_rate_theory, SlowVariationParams};
use crate::composite::{k_nu_closed_form, ZetaFamily};
use crate::error::{Error, Result};
use crate::quad::{self, golden_max, Tol};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal, StudentT};
use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{E, FRAC_1_SQRT_2, LN_2, PI};
use std::fmt;
use std::sync::{Arc, OnceLock};

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
fn ln_phi(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Symmetric signal densities for signal-plus-noise generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    Cauchy,
    Laplace,
    Gaussian(f64),
}

impl Signal {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Signal::Cauchy => 1.0 / (PI * (1.0 + x * x)),
            Signal::Laplace => 0.5 * (-x.abs()).exp(),
            Signal::Gaussian(s) => (ln_phi(x / s)).exp() / s,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Signal::Cauchy => (PI * (rng.random::<f64>() - 0.5)).tan(),
            Signal::Laplace => {
                let e: f64 = Exp1.sample(rng);
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            }
            Signal::Gaussian(s) => {
                let z: f64 = StandardNormal.sample(rng);
                s * z
            }
        }
    }
}

/// m(y) = int phi(y - x) g(x) dx by adaptive quadrature.
pub fn convolve_density(g: &dyn Fn(f64) -> f64, y: f64) -> Result<f64> {
    let f = |x: f64| ln_phi(y - x).exp() * g(x);
    let mut cuts = vec![0.0, y - 8.0, y, y + 8.0];
    cuts.sort_by(f64::total_cmp);
    let tol = Tol { abs: 1e-300, rel: 1e-12, max_segments: 4000 };
    let mut acc = quad::NeumaierSum::default();
    acc.add(quad::integrate_from_neg_inf(f, cuts[0], tol)?.value);
    for w in cuts.windows(2) {
        acc.add(quad::integrate(f, w[0], w[1], tol)?.value);
    }
    acc.add(quad::integrate_to_inf(f, cuts[3], tol)?.value);
    Ok(acc.sum())
}

/// Laplace signal convolved with N(0,1), closed form.
fn ln_conv_laplace(y: f64) -> f64 {
    let y = y.abs();
    // (1/2) e^{1/2} [e^{-y} Phi(y-1) + e^{y} Phi(-y-1)]
    let a = 0.5 * erfc(-(y - 1.0) * FRAC_1_SQRT_2);
    let b = 0.5 * erfc((y + 1.0) * FRAC_1_SQRT_2);
    -LN_2 + 0.5 - y + a.ln() + ((2.0 * y).exp() * b / a).ln_1p()
}

/// Limit behaviour of P0(theta-hat > 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundaryRate {
    /// Cauchy domain: rate from the tail model.
    Logarithmic(SlowVariationParams),
    /// Nonzero limit (1/2 in the Gaussian domain, 1 - 1/alpha for stable alpha in (1,2)).
    Constant(f64),
    /// Exact 2^(-n) (unequal supports).
    Geometric,
}

impl BoundaryRate {
    pub fn theory(&self, n: f64) -> f64 {
        match self {
            BoundaryRate::Logarithmic(p) => error_rate_theory(p, n),
            BoundaryRate::Constant(c) => *c,
            BoundaryRate::Geometric => 0.5f64.powf(n),
        }
    }
}

#[derive(Debug, Clone)]
pub enum PairKind {
    GaussCauchy,
    GaussLaplace,
    GaussT { nu: f64, sigma: f64, ln_c: f64 },
    GaussPowerPhi { nu: f64, ln_m: f64 },
    GaussRegVar { kappa: f64, ln_c: f64 },
    UniformShift,
    GaussPsi(Arc<ZetaFamily>),
    GaussConv(Signal),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportFlags {
    pub equal_supports: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaBounds {
    pub theta_min: f64,
    pub theta_max: f64,
    pub argmin_x: f64,
    pub argmax_x: f64,
}

/// A (F0, F1) generator pair.
#[derive(Debug)]
pub struct GeneratorPair {
    pub name: String,
    pub kind: PairKind,
    pub tail_model: Option<SlowVariationParams>,
    pub rate: BoundaryRate,
    pub support_flags: SupportFlags,
    pub symmetric: bool,
    bounds: OnceLock<Result<ThetaBounds>>,
}

impl Clone for GeneratorPair {
    fn clone(&self) -> Self {
        GeneratorPair {
            name: self.name.clone(),
            kind: self.kind.clone(),
            tail_model: self.tail_model,
            rate: self.rate,
            support_flags: self.support_flags,
            symmetric: self.symmetric,
            bounds: OnceLock::new(),
        }
    }
}

impl fmt::Display for GeneratorPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn sv(beta0: f64, beta1: f64, delta: f64, gamma: f64) -> SlowVariationParams {
    SlowVariationParams::new(beta0, beta1, delta, gamma, 1.0).expect("catalog tail model satisfies the finite-mean constraint")
}

/// Tail model of a Gaussian pair whose f1 has a power tail K |x|^(-nu-1).
fn power_tail_model(k: f64, nu: f64) -> SlowVariationParams {
    sv(2.0 / (PI * k).powf(1.0 / (1.0 + nu / 2.0)), 0.0, nu / 2.0, 0.0)
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl GeneratorPair {
    fn build(name: String, kind: PairKind, tail_model: Option<SlowVariationParams>, rate: BoundaryRate, equal: bool) -> Self {
        GeneratorPair {
            name,
            kind,
            tail_model,
            rate,
            support_flags: SupportFlags { equal_supports: equal },
            symmetric: equal,
            bounds: OnceLock::new(),
        }
    }

    pub fn gauss_cauchy() -> Self {
        let t = sv(2.0, 0.0, 0.5, 0.0);
        Self::build("gauss_cauchy".into(), PairKind::GaussCauchy, Some(t), BoundaryRate::Logarithmic(t), true)
    }

    pub fn gauss_laplace() -> Self {
        // c' = 1/2 with the e^{-1} correction of the root of h = eta (kappa = 1/2)
        let t = sv(8.0 * E * E / (PI * PI), 2.0, -0.5, 0.5);
        Self::build("gauss_laplace".into(), PairKind::GaussLaplace, Some(t), BoundaryRate::Logarithmic(t), true)
    }

    pub fn gauss_t(nu: f64, sigma: f64) -> Result<Self> {
        if !(nu > 0.0 && sigma > 0.0) {
            return Err(Error::Input(format!("gauss_t needs nu > 0 and sigma > 0, got ({nu}, {sigma})")));
        }
        let ln_c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * PI).ln() - sigma.ln();
        let k_t = (ln_gamma((nu + 1.0) / 2.0) + 0.5 * nu * nu.ln() + nu * sigma.ln() - 0.5 * PI.ln() - ln_gamma(nu / 2.0)).exp();
        let t = power_tail_model(k_t, nu);
        let name = format!("gauss_t({},{})", fmt_num(nu), fmt_num(sigma));
        Ok(Self::build(name, PairKind::GaussT { nu, sigma, ln_c }, Some(t), BoundaryRate::Logarithmic(t), true))
    }

    /// f1 proportional to |x|^nu phi(x), nu > -1.
    pub fn gauss_powerphi(nu: f64) -> Result<Self> {
        if !(nu > -1.0) {
            return Err(Error::Input(format!("gauss_powerphi needs nu > -1, got {nu}")));
        }
        let ln_m = 0.5 * nu * LN_2 + ln_gamma((nu + 1.0) / 2.0) - 0.5 * PI.ln();
        let limit = if nu >= -0.5 { 0.5 } else { 1.0 + nu };
        let name = format!("gauss_powerphi({})", fmt_num(nu));
        Ok(Self::build(name, PairKind::GaussPowerPhi { nu, ln_m }, None, BoundaryRate::Constant(limit), true))
    }

    /// f1 proportional to exp(-|x|^(2 kappa)).
    pub fn gauss_regvar(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Input(format!("gauss_regvar needs kappa > 0, got {kappa}")));
        }
        let ln_c = -(LN_2 + ln_gamma(1.0 + 1.0 / (2.0 * kappa)));
        let (tail, rate) = if kappa < 1.0 {
            let c = ln_c.exp();
            let shift = if kappa == 0.5 { E * E } else { 1.0 };
            let t = sv(2.0 / (c * PI).powi(2) * shift, 2.0, -0.5, kappa);
            (Some(t), BoundaryRate::Logarithmic(t))
        } else {
            (None, BoundaryRate::Constant(0.5))
        };
        let name = format!("gauss_regvar({})", fmt_num(kappa));
        Ok(Self::build(name, PairKind::GaussRegVar { kappa, ln_c }, tail, rate, true))
    }

    /// F0 = U(0,2), F1 = U(1,3).
    pub fn uniform_shift() -> Self {
        let mut p = Self::build("uniform_shift".into(), PairKind::UniformShift, None, BoundaryRate::Geometric, false);
        p.symmetric = false;
        p
    }

    pub fn gauss_psi(nu: f64) -> Result<Self> {
        let fam = ZetaFamily::new(nu)?;
        let (tail, rate) = if nu < 2.0 {
            let t = power_tail_model(k_nu_closed_form(nu), nu);
            (Some(t), BoundaryRate::Logarithmic(t))
        } else {
            (None, BoundaryRate::Constant(0.5))
        };
        let name = format!("gauss_psi({})", fmt_num(nu));
        Ok(Self::build(name, PairKind::GaussPsi(Arc::new(fam)), tail, rate, true))
    }

    pub fn gauss_conv_cauchy() -> Self {
        let t = sv(2.0, 0.0, 0.5, 0.0);
        Self::build("gauss_conv_cauchy".into(), PairKind::GaussConv(Signal::Cauchy), Some(t), BoundaryRate::Logarithmic(t), true)
    }

    pub fn gauss_conv_laplace() -> Self {
        let t = sv(8.0 * E / (PI * PI), 2.0, -0.5, 0.5);
        Self::build("gauss_conv_laplace".into(), PairKind::GaussConv(Signal::Laplace), Some(t), BoundaryRate::Logarithmic(t), true)
    }

    /// Parses catalog names such as `gauss_cauchy`, `gauss_t(3,2)`, `gauss_psi(1)`.
    pub fn from_name(name: &str) -> Result<Self> {
        let name = name.trim();
        let (head, args) = match name.find('(') {
            Some(i) => {
                let rest = name[i + 1..].strip_suffix(')').ok_or_else(|| Error::Lookup(name.to_string()))?;
                let args = rest
                    .split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad argument {s:?} in {name}"))))
                    .collect::<Result<Vec<f64>>>()?;
                (&name[..i], args)
            }
            None => (name, vec![]),
        };
        let arg = |i: usize, default: Option<f64>| -> Result<f64> {
            args.get(i).copied().or(default).ok_or_else(|| Error::Input(format!("{head} needs argument {}", i + 1)))
        };
        match head {
            "gauss_cauchy" => Ok(Self::gauss_cauchy()),
            "gauss_laplace" => Ok(Self::gauss_laplace()),
            "gauss_t" => Self::gauss_t(arg(0, None)?, arg(1, Some(1.0))?),
            "gauss_powerphi" => Self::gauss_powerphi(arg(0, None)?),
            "gauss_regvar" => Self::gauss_regvar(arg(0, None)?),
            "uniform_shift" => Ok(Self::uniform_shift()),
            "gauss_psi" => Self::gauss_psi(arg(0, None)?),
            "gauss_conv_cauchy" => Ok(Self::gauss_conv_cauchy()),
            "gauss_conv_laplace" => Ok(Self::gauss_conv_laplace()),
            _ => Err(Error::Lookup(name.to_string())),
        }
    }

    pub fn log_f0(&self, x: f64) -> f64 {
        match self.kind {
            PairKind::UniformShift => {
                if x > 0.0 && x < 2.0 {
                    -LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
            _ => ln_phi(x),
        }
    }

    pub fn log_f1(&self, x: f64) -> f64 {
        match &self.kind {
            PairKind::UniformShift => {
                if x > 1.0 && x < 3.0 {
                    -LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
            _ => self.log_h(x) + ln_phi(x),
        }
    }

    /// log h(x); NaN where both densities vanish.
    #[inline]
    pub fn log_h(&self, x: f64) -> f64 {
        let gauss = 0.5 * x * x + LN_SQRT_2PI;
        match &self.kind {
            PairKind::GaussCauchy => gauss - PI.ln() - (x * x).ln_1p(),
            PairKind::GaussLaplace => gauss - LN_2 - x.abs(),
            PairKind::GaussT { nu, sigma, ln_c } => {
                let z = x / sigma;
                gauss + ln_c - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
            }
            PairKind::GaussPowerPhi { nu, ln_m } => nu * x.abs().ln() - ln_m,
            PairKind::GaussRegVar { kappa, ln_c } => gauss + ln_c - x.abs().powf(2.0 * kappa),
            PairKind::UniformShift => {
                let in0 = x > 0.0 && x < 2.0;
                let in1 = x > 1.0 && x < 3.0;
                match (in0, in1) {
                    (true, true) => 0.0,
                    (true, false) => f64::NEG_INFINITY,
                    (false, true) => f64::INFINITY,
                    (false, false) => f64::NAN,
                }
            }
            PairKind::GaussPsi(fam) => fam.ln_zeta(x),
            PairKind::GaussConv(Signal::Laplace) => gauss + ln_conv_laplace(x),
            PairKind::GaussConv(sig) => {
                let m = convolve_density(&|t| sig.pdf(t), x).unwrap_or(f64::NAN);
                gauss + m.ln()
            }
        }
    }

    /// h(x) for hot loops; the Cauchy and Laplace pairs skip the logarithm.
    #[inline]
    pub fn h(&self, x: f64) -> f64 {
        match self.kind {
            // sqrt(2 pi) / pi and sqrt(2 pi) / 2
            PairKind::GaussCauchy => 0.797_884_560_802_865_4 * (0.5 * x * x).exp() / (1.0 + x * x),
            PairKind::GaussLaplace => 1.253_314_137_315_500_3 * (0.5 * x * x - x.abs()).exp(),
            _ => self.log_h(x).exp(),
        }
    }

    pub fn sample_f0<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            PairKind::UniformShift => 2.0 * rng.random::<f64>(),
            _ => StandardNormal.sample(rng),
        }
    }

    pub fn sample_f1<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sign = |rng: &mut R, v: f64| if rng.random::<bool>() { v } else { -v };
        match &self.kind {
            PairKind::GaussCauchy => Signal::Cauchy.sample(rng),
            PairKind::GaussLaplace => Signal::Laplace.sample(rng),
            PairKind::GaussT { nu, sigma, .. } => {
                let t = StudentT::new(*nu).expect("nu > 0");
                sigma * t.sample(rng)
            }
            PairKind::GaussPowerPhi { nu, .. } => {
                let g = Gamma::new((nu + 1.0) / 2.0, 1.0).expect("shape > 0");
                let v = (2.0 * g.sample(rng)).sqrt();
                sign(rng, v)
            }
            PairKind::GaussRegVar { kappa, .. } => {
                let g = Gamma::new(1.0 / (2.0 * kappa), 1.0).expect("shape > 0");
                let v = g.sample(rng).powf(1.0 / (2.0 * kappa));
                sign(rng, v)
            }
            PairKind::UniformShift => 1.0 + 2.0 * rng.random::<f64>(),
            PairKind::GaussPsi(fam) => fam.sample(rng),
            PairKind::GaussConv(sig) => {
                let z: f64 = StandardNormal.sample(rng);
                sig.sample(rng) + z
            }
        }
    }

    /// True when f1 is evaluated by quadrature (slow per point).
    pub fn is_quadrature_backed(&self) -> bool {
        matches!(self.kind, PairKind::GaussConv(Signal::Cauchy) | PairKind::GaussConv(Signal::Gaussian(_)))
    }

    pub fn theta_bounds(&self) -> Result<ThetaBounds> {
        self.bounds.get_or_init(|| theta_bounds(self)).clone()
    }
}

/// log h(x) with explicit domain errors.
pub fn log_density_ratio(pair: &GeneratorPair, x: f64) -> Result<f64> {
    let v = pair.log_h(x);
    if v.is_nan() {
        return Err(Error::Domain(format!("both densities of {} vanish at x = {x}", pair.name)));
    }
    Ok(v)
}

/// log[(1 - theta) f0(x) + theta f1(x)].
pub fn mixture_log_density(pair: &GeneratorPair, theta: f64, x: f64) -> Result<f64> {
    let (lo, hi) = if (0.0..=1.0).contains(&theta) || !pair.support_flags.equal_supports {
        (0.0, 1.0)
    } else {
        let b = pair.theta_bounds()?;
        (b.theta_min, b.theta_max)
    };
    if !(theta >= lo && theta <= hi) {
        return Err(Error::Range(format!("theta = {theta} outside [{lo}, {hi}] for {}", pair.name)));
    }
    let l0 = pair.log_f0(x);
    let l1 = pair.log_f1(x);
    if theta == 0.0 {
        return Ok(l0);
    }
    if theta == 1.0 {
        return Ok(l1);
    }
    if theta > 0.0 && theta < 1.0 {
        let a = (1.0 - theta).ln() + l0;
        let b = theta.ln() + l1;
        let m = a.max(b);
        if m == f64::NEG_INFINITY {
            return Ok(m);
        }
        return Ok(m + ((a - m).exp() + (b - m).exp()).ln());
    }
    // outside [0, 1] one weight is negative: l_pos + log(1 - r)
    let (lp, ln_neg, l_pos_dens, l_neg_dens) =
        if theta > 1.0 { (theta.ln(), (theta - 1.0).ln(), l1, l0) } else { ((1.0 - theta).ln(), (-theta).ln(), l0, l1) };
    let r = (ln_neg + l_neg_dens - lp - l_pos_dens).exp();
    if r >= 1.0 - 4.0 * f64::EPSILON {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(lp + l_pos_dens + (-r).ln_1p())
}

/// Grid scan of log h over |x| <= 50 with golden-section refinement of the
/// extreme points.
pub fn theta_bounds(pair: &GeneratorPair) -> Result<ThetaBounds> {
    if !pair.support_flags.equal_supports {
        return Err(Error::Domain(format!("{} has unequal supports", pair.name)));
    }
    let half = if pair.is_quadrature_backed() { 2000 } else { 100_000 };
    let xmax = 50.0;
    let step = xmax / half as f64;
    let xs: Vec<f64> = (-(half as i64)..=half as i64).map(|i| i as f64 * step).collect();
    let lh: Vec<f64> = xs.iter().map(|&x| pair.log_h(x)).collect();
    let (mut imin, mut imax) = (0, 0);
    for i in 0..lh.len() {
        if lh[i] < lh[imin] {
            imin = i;
        }
        if lh[i] > lh[imax] {
            imax = i;
        }
    }
    if lh[imax] - lh[imin] < 1e-14 {
        return Err(Error::Degenerate(format!("{}: h is constant", pair.name)));
    }
    let last = lh.len() - 1;
    let refine = |i: usize, sign: f64| -> (f64, f64) {
        if i == 0 || i == last || !lh[i].is_finite() {
            return (xs[i], lh[i]);
        }
        let (x, v) = golden_max(|x| sign * pair.log_h(x), xs[i - 1], xs[i + 1], 1e-10);
        let v = sign * v;
        if (sign > 0.0 && v >= lh[i]) || (sign < 0.0 && v <= lh[i]) {
            (x, v)
        } else {
            (xs[i], lh[i])
        }
    };
    let (xmin_at, lmin) = refine(imin, -1.0);
    let (theta_max, argmin_x) = if lmin < 0.0 {
        if imin == 0 || imin == last {
            // h keeps decreasing past the grid: inf is approached at infinity
            (1.0 / (1.0 - lmin.exp()), f64::INFINITY.copysign(xs[imin]))
        } else {
            (1.0 / (1.0 - lmin.exp()), xmin_at)
        }
    } else {
        (f64::INFINITY, f64::NAN)
    };
    let (xmax_at, lmax) = refine(imax, 1.0);
    let unbounded = imax == 0 || imax == last || lmax == f64::INFINITY || lmax > 700.0;
    let (theta_min, argmax_x) = if lmax <= 0.0 {
        (f64::NEG_INFINITY, f64::NAN)
    } else if unbounded {
        let at = if imax == 0 || imax == last { f64::INFINITY.copysign(xs[imax]) } else { xmax_at };
        (0.0, at)
    } else {
        (-1.0 / lmax.exp_m1(), xmax_at)
    };
    // symmetric pairs: report the non-negative representative
    let argmin_x = if pair.symmetric { argmin_x.abs() } else { argmin_x };
    let argmax_x = if pair.symmetric { argmax_x.abs() } else { argmax_x };
    Ok(ThetaBounds { theta_min, theta_max, argmin_x, argmax_x })
}

/// The default catalog.
pub fn builtin_pairs() -> Vec<GeneratorPair> {
    let mut v = vec![GeneratorPair::gauss_cauchy(), GeneratorPair::gauss_laplace()];
    for name in ["gauss_t(3,1)", "gauss_t(3,2)", "gauss_powerphi(1)", "gauss_powerphi(-0.75)", "gauss_regvar(0.25)", "gauss_psi(1)"] {
        v.push(GeneratorPair::from_name(name).expect("catalog name parses"));
    }
    v.push(GeneratorPair::uniform_shift());
    v.push(GeneratorPair::gauss_conv_cauchy());
    v.push(GeneratorPair::gauss_conv_laplace());
    v
}

/// Catalog lookup by name.
pub fn lookup(name: &str) -> Result<GeneratorPair> {
    GeneratorPair::from_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn h_at_zero() {
        let gc = GeneratorPair::gauss_cauchy();
        assert!((gc.log_h(0.0).exp() - 0.7979).abs() < 1e-4);
        let gl = GeneratorPair::gauss_laplace();
        let want = 0.5 / (1.0 / (2.0 * PI).sqrt());
        assert!((gl.log_h(0.0).exp() - want).abs() < 1e-14);
        assert!((want - 1.2533).abs() < 1e-4);
    }

    #[test]
    fn fast_ratio_matches_log_ratio() {
        for p in [GeneratorPair::gauss_cauchy(), GeneratorPair::gauss_laplace()] {
            for x in [-7.5, -1.0, 0.0, 0.3, 4.0, 30.0] {
                // exp amplifies the rounding of its argument by |log h|
                let tol = 16.0 * f64::EPSILON * p.log_h(x).abs().max(1.0);
                assert!((p.h(x) / p.log_h(x).exp() - 1.0).abs() < tol, "{} {x}", p.name);
            }
        }
    }

    #[test]
    fn symmetry_is_exact() {
        for p in builtin_pairs().iter().filter(|p| p.symmetric && !p.is_quadrature_backed()) {
            assert_eq!(p.log_h(3.7), p.log_h(-3.7), "{}", p.name);
        }
    }

    #[test]
    fn normalization() {
        let tol = Tol::new(1e-13, 1e-11);
        for p in builtin_pairs() {
            if p.is_quadrature_backed() {
                continue;
            }
            let (c, lo) = if p.support_flags.equal_supports { (0.0, None) } else { (1.5, Some((0.0, 2.0, 1.0, 3.0))) };
            let (m0, m1) = match lo {
                None => {
                    // split at 0: powerphi(nu<0) has an integrable spike there
                    let m0 = quad::integrate_real_line(|x| p.log_f0(x).exp(), c, tol).unwrap().value;
                    let m1 = quad::integrate_real_line(|x| p.log_f1(x).exp(), c, tol).unwrap().value;
                    (m0, m1)
                }
                Some((a0, b0, a1, b1)) => (
                    quad::integrate(|x| p.log_f0(x).exp(), a0, b0, tol).unwrap().value,
                    quad::integrate(|x| p.log_f1(x).exp(), a1, b1, tol).unwrap().value,
                ),
            };
            assert!((m0 - 1.0).abs() < 1e-8, "{}: {m0}", p.name);
            assert!((m1 - 1.0).abs() < 1e-8, "{}: {m1}", p.name);
        }
    }

    #[test]
    fn quadrature_backed_pair_normalizes() {
        let p = GeneratorPair::gauss_conv_cauchy();
        let tol = Tol { abs: 1e-12, rel: 1e-9, max_segments: 300 };
        let m = quad::integrate_real_line(|x| p.log_f1(x).exp(), 0.0, tol).unwrap().value;
        assert!((m - 1.0).abs() < 1e-8, "{m}");
    }

    #[test]
    fn unequal_supports_flags() {
        let u = GeneratorPair::uniform_shift();
        assert!(!u.support_flags.equal_supports);
        assert_eq!(u.log_h(0.5), f64::NEG_INFINITY);
        assert_eq!(u.log_h(2.5), f64::INFINITY);
        assert_eq!(u.log_h(1.5), 0.0);
        assert!(log_density_ratio(&u, 5.0).is_err());
    }

    #[test]
    fn gauss_cauchy_bounds() {
        let b = GeneratorPair::gauss_cauchy().theta_bounds().unwrap();
        assert_eq!(b.theta_min, 0.0);
        assert!((b.theta_max - 2.9218).abs() < 1e-4, "{}", b.theta_max);
        assert!((b.argmin_x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gauss_laplace_bounds() {
        let b = GeneratorPair::gauss_laplace().theta_bounds().unwrap();
        let want = 1.0 / (1.0 - (2.0 * PI).sqrt() * (-0.5f64).exp() / 2.0);
        assert!((b.theta_max - want).abs() < 1e-9);
        assert!((b.theta_max - 4.170).abs() < 1e-3);
    }

    #[test]
    fn convolution_bound_is_at_zero() {
        for p in [GeneratorPair::gauss_conv_laplace(), GeneratorPair::gauss_conv_cauchy()] {
            let b = p.theta_bounds().unwrap();
            let want = 1.0 / (1.0 - p.log_h(0.0).exp());
            assert!((b.theta_max - want).abs() < 1e-8, "{}: {} vs {want}", p.name, b.theta_max);
            assert!(b.theta_max > 1.0);
        }
    }

    #[test]
    fn mixture_endpoints() {
        let p = GeneratorPair::gauss_cauchy();
        for x in [-2.0, 0.3, 5.0] {
            assert_eq!(mixture_log_density(&p, 0.0, x).unwrap(), p.log_f0(x));
            assert_eq!(mixture_log_density(&p, 1.0, x).unwrap(), p.log_f1(x));
        }
        let b = p.theta_bounds().unwrap();
        for x in [-1.0, 1.0] {
            let v = mixture_log_density(&p, b.theta_max, x).unwrap();
            assert!(v == f64::NEG_INFINITY || v < p.log_f0(x) - 20.0, "{v}");
        }
        assert!(mixture_log_density(&p, b.theta_max + 0.01, 0.0).is_err());
        assert!(mixture_log_density(&p, -0.01, 0.0).is_err());
    }

    #[test]
    fn mixture_nonnegative_at_bounds() {
        for p in builtin_pairs().iter().filter(|p| p.support_flags.equal_supports && !p.is_quadrature_backed()) {
            let b = p.theta_bounds().unwrap();
            for theta in [b.theta_min, b.theta_max] {
                if !theta.is_finite() {
                    continue;
                }
                for i in -2000..=2000 {
                    let x = i as f64 * 0.01;
                    let f0 = p.log_f0(x).exp();
                    let f1 = p.log_f1(x).exp();
                    if !f1.is_finite() {
                        continue;
                    }
                    assert!((1.0 - theta) * f0 + theta * f1 >= -1e-12, "{} theta={theta} x={x}", p.name);
                }
            }
        }
    }

    #[test]
    fn mixture_concave_in_theta() {
        let p = GeneratorPair::gauss_laplace();
        let xs = [-2.0, -0.1, 0.4, 3.0];
        let l = |t: f64| xs.iter().map(|&x| mixture_log_density(&p, t, x).unwrap()).sum::<f64>();
        for i in 1..99 {
            let t = i as f64 / 100.0;
            assert!(l(t + 0.01) - 2.0 * l(t) + l(t - 0.01) <= 1e-12);
        }
    }

    #[test]
    fn identical_generators_degenerate() {
        let p = GeneratorPair::gauss_powerphi(0.0).unwrap();
        assert!(matches!(theta_bounds(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn catalog_tail_models() {
        let t = GeneratorPair::gauss_cauchy().tail_model.unwrap();
        assert_eq!((t.beta0, t.beta1, t.delta, t.gamma), (2.0, 0.0, 0.5, 0.0));
        for k in [0.25, 0.5, 0.75] {
            assert_eq!(GeneratorPair::gauss_regvar(k).unwrap().tail_model.unwrap().gamma, k);
        }
        let r = GeneratorPair::gauss_regvar(0.25).unwrap().tail_model.unwrap();
        let c = 1.0 / (2.0 * statrs::function::gamma::gamma(3.0));
        assert!((r.beta0 - 2.0 / (c * PI).powi(2)).abs() < 1e-9);
        // t with nu = 1, sigma = 1 is the Cauchy pair
        let t1 = GeneratorPair::gauss_t(1.0, 1.0).unwrap().tail_model.unwrap();
        assert!((t1.beta0 - 2.0).abs() < 1e-12 && t1.delta == 0.5);
        assert!(GeneratorPair::from_name("no_such_pair").is_err());
        assert_eq!(GeneratorPair::from_name("gauss_t(3,2)").unwrap().name, "gauss_t(3,2)");
    }

    #[test]
    fn tail_models_match_exact_null_tails() {
        // P0(h > eta) eta L(eta) pi / 2 -> 1; beta0 = 2/(c pi)^2 would give e^{-1}
        let lap = GeneratorPair::gauss_laplace();
        let tm = lap.tail_model.unwrap();
        let mut prev = 0.0;
        for le in [50.0f64, 200.0, 690.0] {
            let c = le + (2.0 / (2.0 * PI).sqrt()).ln();
            let s = 1.0 + (1.0 + 2.0 * c).sqrt();
            // ln P = ln erfc(s / sqrt 2), far tail via the Mills ratio
            let ln_p = ln_phi(s) + (2.0f64).ln() - s.ln() + (-1.0 / (s * s) + 3.0 / s.powi(4)).ln_1p();
            let r = (ln_p + le + tm.ln_l_at_log(le)).exp() * PI / 2.0;
            assert!(r > prev);
            prev = r;
        }
        assert!((prev - 1.0).abs() < 0.05, "{prev}");
    }

    #[test]
    fn null_mean_of_h_is_one() {
        // only pairs outside the Cauchy domain: there h(X) has finite variance
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        for p in builtin_pairs().iter().filter(|p| p.support_flags.equal_supports && p.tail_model.is_none()) {
            let hs: Vec<f64> = (0..n).map(|_| p.log_h(p.sample_f0(&mut rng)).exp()).collect();
            let m = hs.iter().sum::<f64>() / n as f64;
            let sd = (hs.iter().map(|h| (h - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            assert!((m - 1.0).abs() < 5.0 * sd / (n as f64).sqrt(), "{}: {m}", p.name);
        }
    }

    #[test]
    fn samplers_match_densities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in builtin_pairs().iter().filter(|p| !p.is_quadrature_backed()) {
            // P1(|X| < 1) by simulation vs quadrature
            let m = 200_000;
            let hits = (0..m).filter(|_| {
                let x = p.sample_f1(&mut rng);
                if p.support_flags.equal_supports { x.abs() < 1.0 } else { x < 2.0 }
            });
            let frac = hits.count() as f64 / m as f64;
            let tol = Tol::new(1e-12, 1e-10);
            let want = if p.support_flags.equal_supports {
                quad::integrate(|x| p.log_f1(x).exp() + p.log_f1(-x).exp(), 0.0, 1.0, tol).unwrap().value
            } else {
                quad::integrate(|x| p.log_f1(x).exp(), 1.0, 2.0, tol).unwrap().value
            };
            let se = (want * (1.0 - want) / m as f64).sqrt();
            assert!((frac - want).abs() < 5.0 * se, "{}: {frac} vs {want}", p.name);
        }
    }

    #[test]
    fn convolution_closed_forms() {
        let s = 0.7;
        let g = |x: f64| Signal::Gaussian(s).pdf(x);
        let m = convolve_density(&g, 0.0).unwrap();
        let want = 1.0 / (2.0 * PI * (1.0 + s * s)).sqrt();
        assert!((m / want - 1.0).abs() < 1e-10);
        for y in [0.0, 1.5, 10.0, 39.0] {
            let q = convolve_density(&|x| Signal::Laplace.pdf(x), y).unwrap();
            assert!((q.ln() - ln_conv_laplace(y)).abs() < 1e-8, "y={y}");
        }
    }

    #[test]
    fn convolution_inherits_tail_index() {
        let cauchy = |x: f64| Signal::Cauchy.pdf(x);
        let (a, b) = (50.0f64, 200.0f64);
        let slope = (convolve_density(&cauchy, b).unwrap().ln() - convolve_density(&cauchy, a).unwrap().ln()) / (b.ln() - a.ln());
        assert!((slope + 2.0).abs() < 0.05, "{slope}");
        let lap = |x: f64| Signal::Laplace.pdf(x);
        let (a, b) = (20.0f64, 60.0f64);
        let la = (-convolve_density(&lap, a).unwrap().ln()).ln();
        let lb = (-convolve_density(&lap, b).unwrap().ln()).ln();
        let slope = (lb - la) / (b.ln() - a.ln());
        assert!((slope - 1.0).abs() < 0.05, "{slope}");
    }
}

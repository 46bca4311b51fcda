//! Maximum-likelihood estimation of the mixing weight at the boundary,
//! likelihood-ratio statistics and fitted activity rates.

use crate::error::{Error, Result};
use crate::generators::GeneratorPair;
use crate::quad::NeumaierSum;
use serde::Serialize;

/// Density ratios h(X_i).
#[derive(Debug, Clone, PartialEq)]
pub struct HSample {
    h: Vec<f64>,
    unequal: bool,
}

impl HSample {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if let Some(v) = h.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::Input(format!("density ratio {v} is not a non-negative number")));
        }
        let unequal = h.iter().any(|v| v.is_infinite());
        Ok(HSample { h, unequal })
    }

    /// h(x_i) for data xs under a catalog pair.
    pub fn from_pair(pair: &GeneratorPair, xs: &[f64]) -> Result<Self> {
        let h = xs
            .iter()
            .map(|&x| crate::generators::log_density_ratio(pair, x).map(f64::exp))
            .collect::<Result<Vec<_>>>()?;
        let mut s = Self::new(h)?;
        s.unequal |= !pair.support_flags.equal_supports;
        Ok(s)
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn has_unequal_support(&self) -> bool {
        self.unequal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub theta_hat_lo: f64,
    pub theta_hat_hi: f64,
    pub lambda: f64,
    pub r_stat: f64,
    pub wald: f64,
    pub rao: f64,
    pub positive: bool,
    pub iterations: usize,
    pub grad_at_zero: f64,
}

impl FitResult {
    /// Point estimate: the interval midpoint (the endpoints agree unless the
    /// likelihood is flat).
    pub fn theta_hat(&self) -> f64 {
        if self.theta_hat_lo == self.theta_hat_hi {
            self.theta_hat_lo
        } else {
            0.5 * (self.theta_hat_lo + self.theta_hat_hi)
        }
    }
}

/// l'(0) = sum (h_i - 1), compensated.
pub fn grad_at_zero(h: &[f64]) -> f64 {
    let mut s = NeumaierSum::default();
    for &v in h {
        s.add(v - 1.0);
    }
    s.sum()
}

/// mean(h) > 1. Infinite entries force positivity. For unequal supports a
/// sample with every h_i = 1 has a flat likelihood and counts as positive.
pub fn positivity(h: &HSample) -> bool {
    if h.unequal && h.h().iter().all(|&v| v == 1.0) {
        return true;
    }
    positivity_slice(h.h())
}

pub fn positivity_slice(h: &[f64]) -> bool {
    if h.iter().any(|v| *v == f64::INFINITY) {
        return true;
    }
    grad_at_zero(h) > 0.0
}

fn score(h: &[f64], theta: f64) -> (f64, f64) {
    let mut g = NeumaierSum::default();
    let mut c = 0.0;
    for &v in h {
        let z = v - 1.0;
        let d = 1.0 + theta * z;
        let q = z / d;
        g.add(q);
        c += q * q;
    }
    (g.sum(), -c)
}

/// l(theta) - l(0) = sum log(1 + theta z_i).
fn log_lik_ratio(h: &[f64], theta: f64) -> Result<f64> {
    let mut s = NeumaierSum::default();
    for &v in h {
        let a = theta * (v - 1.0);
        if a <= -1.0 {
            return Err(Error::Range(format!("theta = {theta} infeasible: 1 + theta (h - 1) <= 0 at h = {v}")));
        }
        s.add(a.ln_1p());
    }
    Ok(s.sum())
}

/// Lambda_n = 2 sum log(1 + theta (h_i - 1)).
pub fn lr_statistic(h: &HSample, theta_hat: f64) -> Result<f64> {
    if theta_hat == 0.0 {
        return Ok(0.0);
    }
    if h.unequal && h.h().iter().any(|v| v.is_infinite()) {
        return Ok(f64::INFINITY);
    }
    Ok((2.0 * log_lik_ratio(h.h(), theta_hat)?).max(0.0))
}

fn finish(h: &[f64], lo: f64, hi: f64, iterations: usize, g0: f64) -> FitResult {
    let theta = if lo == hi { lo } else { 0.5 * (lo + hi) };
    let lambda = if hi == 0.0 { 0.0 } else { (2.0 * log_lik_ratio(h, theta).unwrap_or(f64::NAN)).max(0.0) };
    let r_stat = r_statistic(h).unwrap_or(f64::NAN);
    let (_, d2t) = score(h, theta);
    let (_, d20) = score(h, 0.0);
    FitResult {
        theta_hat_lo: lo,
        theta_hat_hi: hi,
        lambda,
        r_stat,
        wald: theta * (-d2t).sqrt(),
        rao: g0 / (-d20).sqrt(),
        positive: hi > 0.0,
        iterations,
        grad_at_zero: g0,
    }
}

/// Maximizes sum log(1 - theta + theta h_i) over [0, upper].
pub fn fit_theta(h: &HSample, upper: f64) -> Result<FitResult> {
    if !(upper > 0.0) {
        return Err(Error::Input(format!("upper bound {upper} must be positive")));
    }
    if h.n() == 0 {
        return Err(Error::Degenerate("empty sample".into()));
    }
    if h.unequal {
        return Ok(fit_unequal(h.h(), upper.min(1.0)));
    }
    fit_theta_slice(h.h(), upper)
}

/// As `fit_theta` for finite ratios, without the HSample wrapper.
pub fn fit_theta_slice(h: &[f64], upper: f64) -> Result<FitResult> {
    if let Some(v) = h.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Input(format!("density ratio {v} is not finite and non-negative")));
    }
    let n = h.len() as f64;
    let g0 = grad_at_zero(h);
    if h.iter().all(|&v| v == 1.0) {
        return Ok(finish(h, 0.0, upper, 0, g0));
    }
    if g0 <= 0.0 {
        return Ok(finish(h, 0.0, 0.0, 0, g0));
    }
    // l' at the upper end; -inf when some 1 + upper z_i hits zero
    let gu = {
        let mut s = NeumaierSum::default();
        let mut pole = false;
        for &v in h {
            let d = 1.0 + upper * (v - 1.0);
            if d <= 0.0 {
                pole = true;
                break;
            }
            s.add((v - 1.0) / d);
        }
        if pole {
            f64::NEG_INFINITY
        } else {
            s.sum()
        }
    };
    if gu >= 0.0 {
        return Ok(finish(h, upper, upper, 0, g0));
    }
    let tol = 1e-10 * n;
    let (mut lo, mut hi) = (0.0, upper);
    // Newton from the R-based approximation to the root
    let zmax = h.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v - 1.0));
    let r = g0 / zmax;
    let mut theta = if r < 1.0 && zmax > 0.0 { (r / (1.0 - r) / zmax).min(0.5 * upper) } else { 0.5 * upper };
    if !(theta > 0.0) {
        theta = 0.5 * upper;
    }
    let mut it = 0;
    loop {
        it += 1;
        let (g, d2) = score(h, theta);
        if g.abs() < tol || it > 200 {
            break;
        }
        if g > 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let step = theta - g / d2;
        theta = if step > lo && step < hi && d2 < 0.0 { step } else { 0.5 * (lo + hi) };
    }
    if it > 200 {
        let (g, _) = score(h, theta);
        return Err(Error::numeric("Newton iteration on the score did not converge", g));
    }
    let theta = theta.max(f64::MIN_POSITIVE);
    Ok(finish(h, theta, theta, it, g0))
}

/// Same maximization from log density ratios, for samples where some h
/// overflows f64. Falls back to [`fit_theta_slice`] when every h is finite.
pub fn fit_theta_ln(ln_h: &[f64], upper: f64) -> Result<FitResult> {
    if let Some(v) = ln_h.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
        return Err(Error::Input(format!("log density ratio {v} is not usable")));
    }
    let ln_max = ln_h.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if ln_max < 700.0 {
        let h: Vec<f64> = ln_h.iter().map(|v| v.exp()).collect();
        return fit_theta_slice(&h, upper);
    }
    // ln(1 + t z) and its derivative, stable for large ln h
    let term = |t: f64, lh: f64| -> (f64, f64) {
        if lh < 30.0 {
            let z = lh.exp_m1();
            ((t * z).ln_1p(), z / (1.0 + t * z))
        } else {
            let w = (-lh).exp();
            let d = t + (1.0 - t) * w;
            (lh + d.ln(), (1.0 - w) / d)
        }
    };
    let dl = |t: f64| {
        let mut s = NeumaierSum::default();
        for &lh in ln_h {
            s.add(term(t, lh).1);
        }
        s.sum()
    };
    let d_hi = dl(upper);
    let theta = if d_hi >= 0.0 || upper <= 0.0 {
        upper
    } else {
        // l' is decreasing and +large near zero; bisect in log theta
        let mut lo = f64::MIN_POSITIVE.ln();
        let mut hi = upper.ln();
        if dl(lo.exp()) <= 0.0 {
            hi = lo;
        }
        for _ in 0..200 {
            if hi - lo < 1e-13 {
                break;
            }
            let m = 0.5 * (lo + hi);
            if dl(m.exp()) > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        (0.5 * (lo + hi)).exp()
    };
    let mut lam = NeumaierSum::default();
    let mut r = NeumaierSum::default();
    for &lh in ln_h {
        lam.add(term(theta, lh).0);
        // z_i / z_max with z_max = exp(ln_max) - 1
        r.add((lh - ln_max).exp() - (-ln_max).exp());
    }
    Ok(FitResult {
        theta_hat_lo: theta,
        theta_hat_hi: theta,
        lambda: (2.0 * lam.sum()).max(0.0),
        r_stat: r.sum(),
        wald: f64::NAN,
        rao: f64::NAN,
        positive: theta > 0.0,
        iterations: 0,
        grad_at_zero: f64::INFINITY,
    })
}

/// Entries in {0, finite, +inf}: log-likelihood N0 log(1 - theta) + Ninf log theta
/// + sum over finite entries.
fn fit_unequal(h: &[f64], upper: f64) -> FitResult {
    let n0 = h.iter().filter(|v| **v == 0.0).count() as f64;
    let ninf = h.iter().filter(|v| v.is_infinite()).count() as f64;
    let finite: Vec<f64> = h.iter().copied().filter(|v| v.is_finite() && *v > 0.0).collect();
    let g0 = if ninf > 0.0 { f64::INFINITY } else { grad_at_zero(h) };
    let all_one = finite.iter().all(|&v| v == 1.0);
    let (lo, hi) = if all_one {
        match (n0 > 0.0, ninf > 0.0) {
            (false, false) => (0.0, upper),
            (true, false) => (0.0, 0.0),
            (false, true) => (upper, upper),
            (true, true) => {
                let t = (ninf / (n0 + ninf)).min(upper);
                (t, t)
            }
        }
    } else {
        let dl = |t: f64| -n0 / (1.0 - t) + ninf / t + finite.iter().map(|v| (v - 1.0) / (1.0 + t * (v - 1.0))).sum::<f64>();
        let d_lo = if ninf > 0.0 { f64::INFINITY } else { dl(0.0) };
        let d_hi = if n0 > 0.0 && upper >= 1.0 { f64::NEG_INFINITY } else { dl(upper) };
        if d_lo <= 0.0 {
            (0.0, 0.0)
        } else if d_hi >= 0.0 {
            (upper, upper)
        } else {
            let t = crate::quad::bisect(dl, 0.0, upper, 1e-15, 200).unwrap_or(0.5 * upper);
            (t, t)
        }
    };
    let lambda = if hi == 0.0 {
        0.0
    } else if ninf > 0.0 {
        f64::INFINITY
    } else {
        let t = 0.5 * (lo + hi);
        2.0 * (n0 * (1.0 - t).ln() + finite.iter().map(|v| (t * (v - 1.0)).ln_1p()).sum::<f64>())
    };
    FitResult {
        theta_hat_lo: lo,
        theta_hat_hi: hi,
        lambda: lambda.max(0.0),
        r_stat: f64::NAN,
        wald: f64::NAN,
        rao: f64::NAN,
        positive: hi > 0.0,
        iterations: 0,
        grad_at_zero: g0,
    }
}

/// R = n Zbar / Z_(n), Z_i = h_i - 1.
pub fn r_statistic(h: &[f64]) -> Result<f64> {
    let zmax = h.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v - 1.0));
    if !(zmax > 0.0) {
        return Err(Error::Domain(format!("largest centred ratio {zmax} is not positive")));
    }
    Ok(grad_at_zero(h) / zmax)
}

/// -2r - 2 log(1 - r); +inf for r >= 1.
pub fn approx_lr(r: f64) -> f64 {
    if r >= 1.0 {
        return f64::INFINITY;
    }
    if r.abs() < 1e-3 {
        // 2 sum_{k>=2} r^k / k
        let mut t = r * r;
        let mut s = 0.0;
        for k in 2..12 {
            s += t / k as f64;
            t *= r;
        }
        return 2.0 * s;
    }
    -2.0 * r - 2.0 * (-r).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxStats {
    pub r: f64,
    pub lambda_tilde: f64,
    pub wald: f64,
    pub rao: f64,
}

/// Statistics of the local approximate likelihood.
pub fn approx_stats(h: &HSample) -> Result<ApproxStats> {
    let r = r_statistic(h.h())?;
    Ok(ApproxStats { r, lambda_tilde: approx_lr(r), wald: r, rao: r })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivityRates {
    pub rates: Vec<f64>,
    pub max_rate: f64,
    pub min_local_fdr: f64,
}

/// theta h_i / (1 - theta + theta h_i) per unit.
pub fn activity_rates(h: &HSample, theta_hat: f64) -> Result<ActivityRates> {
    let mut rates = Vec::with_capacity(h.n());
    for &v in h.h() {
        let d = 1.0 - theta_hat + theta_hat * v;
        if !(d > 0.0) && theta_hat != 0.0 {
            return Err(Error::Range(format!("theta = {theta_hat} infeasible at h = {v}")));
        }
        let r = if theta_hat == 0.0 {
            0.0
        } else if v.is_infinite() {
            1.0
        } else {
            theta_hat * v / d
        };
        rates.push(r.clamp(0.0, 1.0));
    }
    let max_rate = rates.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(ActivityRates { rates, max_rate, min_local_fdr: 1.0 - max_rate })
}

/// Mean of the conditioned Lambda values; infinite sentinels are excluded.
pub fn bartlett_factor(lambdas: &[f64]) -> Result<f64> {
    let mut s = NeumaierSum::default();
    let mut k = 0usize;
    for &l in lambdas.iter().filter(|l| l.is_finite()) {
        s.add(l);
        k += 1;
    }
    if k == 0 {
        return Err(Error::Degenerate("no finite likelihood-ratio values".into()));
    }
    Ok(s.sum() / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable_laws::GLaw;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hs(v: &[f64]) -> HSample {
        HSample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn positivity_examples() {
        assert!(positivity(&hs(&[3.0, 1.0 / 3.0])));
        assert!(!positivity(&hs(&[1.0; 7])));
        assert!(!positivity(&hs(&[0.5, 0.5])));
        assert!(!positivity(&hs(&[0.0, 0.0])));
        assert!(positivity(&hs(&[0.0, f64::INFINITY])));
    }

    #[test]
    fn two_point_fit() {
        let f = fit_theta(&hs(&[3.0, 1.0 / 3.0]), 1.0).unwrap();
        assert!((f.theta_hat() - 0.5).abs() < 1e-12);
        assert!((f.lambda - 2.0 * (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((f.lambda - 0.5754).abs() < 1e-4);
        let a = activity_rates(&hs(&[3.0, 1.0 / 3.0]), 0.5).unwrap();
        assert!((a.rates[0] - 0.75).abs() < 1e-15 && (a.rates[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn boundary_fits() {
        let f = fit_theta(&hs(&[2.0, 2.0]), 1.0).unwrap();
        assert_eq!((f.theta_hat_lo, f.theta_hat_hi), (1.0, 1.0));
        let f = fit_theta(&hs(&[5.0]), 1.0).unwrap();
        assert!((f.lambda - 2.0 * 5f64.ln()).abs() < 1e-12);
        let f = fit_theta(&hs(&[0.5, 1.2]), 1.0).unwrap();
        assert_eq!((f.theta_hat_hi, f.lambda, f.positive), (0.0, 0.0, false));
        let f = fit_theta(&hs(&[1.0, 1.0]), 2.5).unwrap();
        assert_eq!((f.theta_hat_lo, f.theta_hat_hi), (0.0, 2.5));
        assert!(fit_theta_slice(&[1.0, f64::NAN], 1.0).is_err());
        assert!(HSample::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn unequal_support_closed_form() {
        // uniform shift: no observation in (0,1) leaves the likelihood flat
        let f = fit_theta(&hs(&[1.0, 1.0, 1.0]), 1.0).unwrap();
        assert!(f.positive && f.theta_hat_lo == 0.0);
        let mut h = HSample::new(vec![0.0, 1.0, 1.0]).unwrap();
        h.unequal = true;
        let f = fit_theta(&h, 1.0).unwrap();
        assert!(!f.positive);
        let f = fit_theta(&hs(&[0.0, f64::INFINITY, f64::INFINITY, 1.0]), 1.0).unwrap();
        assert!((f.theta_hat() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.lambda, f64::INFINITY);
    }

    #[test]
    fn approx_examples() {
        let a = approx_stats(&hs(&[3.0, 1.0 / 3.0])).unwrap();
        assert!((a.r - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.lambda_tilde - (-4.0 / 3.0 + 2.0 * 3f64.ln())).abs() < 1e-14);
        assert_eq!(a.wald, a.rao);
        for r in [1e-4, 1e-3 * 0.999, 1e-3 * 1.001] {
            let series = approx_lr(r);
            assert!((series / (r * r) - 1.0).abs() < 1e-3);
        }
        assert_eq!(approx_lr(1.0), f64::INFINITY);
        assert!(approx_stats(&hs(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn approx_lr_branches_agree() {
        let r = 1e-3;
        let direct = -2.0 * r - 2.0 * (-r as f64).ln_1p();
        assert!((approx_lr(r * (1.0 - 1e-12)) / direct - 1.0).abs() < 1e-9);
    }

    #[test]
    fn activity_extremes() {
        let h = hs(&[0.2, 3.0, 7.0]);
        let a = activity_rates(&h, 0.0).unwrap();
        assert!(a.rates.iter().all(|r| *r == 0.0) && a.min_local_fdr == 1.0);
        let a = activity_rates(&h, 1.0).unwrap();
        assert!(a.rates.iter().all(|r| *r == 1.0));
    }

    #[test]
    fn bartlett_examples() {
        assert_eq!(bartlett_factor(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(bartlett_factor(&[]).is_err());
        let g = GLaw;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<f64> = (0..100_000).map(|_| g.quantile(rng.random::<f64>())).collect();
        assert!((bartlett_factor(&draws).unwrap() - 1.0).abs() < 0.02);
    }

    #[test]
    fn stationary_point_is_accurate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.random_range(2..60);
            let h: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 6.0 - 3.0).exp()).collect();
            let f = fit_theta_slice(&h, 1.0).unwrap();
            assert_eq!(f.positive, positivity_slice(&h));
            if f.theta_hat_hi > 0.0 && f.theta_hat_hi < 1.0 {
                let (g, d2) = score(&h, f.theta_hat());
                assert!(g.abs() < 1e-10 * n as f64 || d2 < 0.0);
                assert!(g.abs() < 1e-10 * n as f64, "{g}");
            }
        }
    }

    #[test]
    fn log_space_fit_matches_across_overflow() {
        let mut base: Vec<f64> = (0..200).map(|i| -0.5 - 0.01 * i as f64).collect();
        base.push(699.0);
        let a = fit_theta_ln(&base, 1.0).unwrap();
        *base.last_mut().unwrap() = 701.0;
        let b = fit_theta_ln(&base, 1.0).unwrap();
        assert!(b.positive && b.theta_hat() > 0.0 && b.theta_hat() < 1.0);
        assert!((a.theta_hat() - b.theta_hat()).abs() < 1e-9);
        assert!((b.lambda - a.lambda - 4.0).abs() < 1e-6, "{} {}", a.lambda, b.lambda);
        assert!((a.r_stat - b.r_stat).abs() < 1e-9);
        assert!(fit_theta_ln(&[f64::INFINITY], 1.0).is_err());
    }
}

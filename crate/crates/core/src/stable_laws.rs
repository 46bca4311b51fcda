//! Stable limit laws: tail constants, negativity probabilities, the
//! maximally skew Cauchy density and the conditional limit law G of the
//! likelihood-ratio statistic.

use crate::error::{Error, Result};
use crate::quad::{self, bisect, integrate, newton_bracketed, Tol};
use statrs::function::gamma::gamma;
use std::f64::consts::{FRAC_2_PI, PI};

/// P_{1,1}(X < 0) to ten digits (Gil-Pelaez inversion at x = 0).
pub const P_NEG_SKEW_CAUCHY: f64 = 0.3652387015;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl StableSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Range(format!("alpha = {alpha} outside (0, 2]")));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::Range(format!("beta = {beta} outside [-1, 1]")));
        }
        let beta = if alpha == 2.0 { 0.0 } else { beta };
        Ok(StableSpec { alpha, beta })
    }
}

/// Tail constant C_alpha = Gamma(alpha) sin(pi alpha / 2) / pi.
pub fn c_alpha(alpha: f64) -> f64 {
    if alpha == 2.0 {
        return 0.0;
    }
    gamma(alpha) * (PI * alpha / 2.0).sin() / PI
}

/// P_{alpha,beta}(X < 0).
pub fn stable_negativity(spec: StableSpec) -> Result<f64> {
    let StableSpec { alpha, beta } = spec;
    if alpha == 2.0 || beta == 0.0 {
        return Ok(0.5);
    }
    if alpha == 1.0 {
        if beta == 1.0 {
            return Ok(P_NEG_SKEW_CAUCHY);
        }
        if beta == -1.0 {
            return Ok(1.0 - P_NEG_SKEW_CAUCHY);
        }
        return skew_cauchy_cdf_below_zero(beta);
    }
    let c = 2.0 * (beta * (PI * alpha / 2.0).tan()).atan() / (PI * (alpha - 2.0));
    Ok((1.0 - c) / 2.0 + c / alpha)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&beta) {
        return Err(Error::Range(format!("beta = {beta} outside [-1, 1]")));
    }
    Ok(())
}

/// Density of the alpha = 1 stable law with log characteristic function
/// -|t| - 2 i beta t log|t| / pi.
pub fn skew_cauchy_pdf(x: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if beta == 0.0 {
        return Ok(1.0 / (PI * (1.0 + x * x)));
    }
    // f(x; beta) = f(-x; -beta)
    let (x, beta) = if beta < 0.0 { (-x, -beta) } else { (x, beta) };
    if x < 0.0 || (beta < 0.1 && x < 1.0) {
        pdf_real_axis(x, beta)
    } else {
        pdf_rotated(x, beta)
    }
}

/// Inversion along the imaginary axis, valid for x >= 0, beta > 0:
/// f = (1/pi) int_0^inf exp(-s x - (2 beta/pi) s ln s) sin((1+beta) s) ds.
fn pdf_rotated(x: f64, beta: f64) -> Result<f64> {
    let c = FRAC_2_PI * beta;
    let w = 1.0 + beta;
    let env = move |s: f64| if s > 0.0 { (-s * x - c * s * s.ln()).exp() } else { 1.0 };
    let g = move |s: f64| if s > 0.0 { env(s) * (w * s).sin() } else { 0.0 };
    let tol = Tol { abs: 1e-18, rel: 1e-11, max_segments: 4000 };
    let width = PI / w;
    // mass sits at s ~ 1/x for large x; resolve that scale first
    let mut acc = quad::NeumaierSum::default();
    let mut a = 0.0;
    if x > 1.0 {
        let mut b = 1.0 / x;
        while b < width {
            acc.add(integrate(g, a, b, tol)?.value);
            a = b;
            b *= 4.0;
        }
    }
    let mut k = 1.0;
    loop {
        let b = k * width;
        let q = integrate(g, a, b, tol)?;
        acc.add(q.value);
        if b > 1.0 && env(b) < 1e-19 {
            break;
        }
        if k > 1e5 {
            return Err(Error::numeric("rotated skew-Cauchy integral did not decay", env(b)));
        }
        a = b;
        k += 1.0;
    }
    Ok((acc.sum() / PI).max(0.0))
}

/// Real-axis inversion with panels between the zeros of the cosine.
fn pdf_real_axis(x: f64, beta: f64) -> Result<f64> {
    let c = FRAC_2_PI * beta;
    let phase = move |t: f64| if t > 0.0 { t * x + c * t * t.ln() } else { 0.0 };
    let g = move |t: f64| (-t).exp() * phase(t).cos();
    const T_MAX: f64 = 50.0;
    let mut breaks = vec![0.0];
    // phase' = x + c (ln t + 1) vanishes at t*
    let t_star = (-1.0 - x / c).exp();
    let mut pieces = vec![0.0];
    if t_star > 0.0 && t_star < T_MAX {
        pieces.push(t_star);
    }
    pieces.push(T_MAX);
    for w in pieces.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (pa, pb) = (phase(a), phase(b));
        let up = pb > pa;
        // levels (k + 1/2) pi strictly between pa and pb
        let (lo, hi) = if up { (pa, pb) } else { (pb, pa) };
        let k0 = ((lo / PI) - 0.5).floor() as i64 + 1;
        let k1 = ((hi / PI) - 0.5).ceil() as i64 - 1;
        let mut levels: Vec<f64> = (k0..=k1).map(|k| (k as f64 + 0.5) * PI).filter(|l| *l > lo && *l < hi).collect();
        if !up {
            levels.reverse();
        }
        let mut left = a;
        for lvl in levels {
            let r = bisect(|t| phase(t) - lvl, left, b, 1e-15 * b.max(1e-300), 200)?;
            breaks.push(r);
            left = r;
        }
        breaks.push(b);
    }
    breaks.dedup();
    let tol = Tol { abs: 1e-17, rel: 1e-11, max_segments: 2000 };
    let mut acc = quad::NeumaierSum::default();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            acc.add(integrate(g, w[0], w[1], tol)?.value);
        }
    }
    Ok((acc.sum() / PI).max(0.0))
}

fn integrate_pdf(beta: f64, a: f64, b: f64) -> Result<f64> {
    let f = |x: f64| skew_cauchy_pdf(x, beta).unwrap_or(f64::NAN);
    let tol = Tol { abs: 1e-14, rel: 1e-10, max_segments: 400 };
    // decade splitting keeps the 1/x^2 tails well resolved
    let mut edges = vec![a];
    for s in [-1e6, -1e5, -1e4, -1e3, -1e2, -10.0, -1.0, 0.0, 1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6] {
        if s > a && s < b {
            edges.push(s);
        }
    }
    edges.push(b);
    let mut acc = quad::NeumaierSum::default();
    for w in edges.windows(2) {
        let q = integrate(f, w[0], w[1], tol)?;
        if !q.value.is_finite() {
            return Err(Error::numeric("skew-Cauchy pdf failed inside quadrature", q.abs_err));
        }
        acc.add(q.value);
    }
    Ok(acc.sum())
}

/// Left-tail reach used when closing integrals of the density with the
/// (1 - beta)/(pi |x|) asymptote.
const LEFT_REACH: f64 = 1e3;
const RIGHT_REACH: f64 = 1e6;

/// P(X < 0) for the alpha = 1 law with skewness beta.
pub fn skew_cauchy_cdf_below_zero(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if beta > 0.0 {
        // the left tail is the expensive, oscillatory side; beta = 1 has no
        // power tail there at all
        let reach = if beta == 1.0 { 40.0 } else { LEFT_REACH };
        let body = integrate_pdf(beta, -reach, 0.0)?;
        Ok(body + (1.0 - beta) / (PI * reach))
    } else {
        let body = integrate_pdf(beta, -RIGHT_REACH, 0.0)?;
        Ok(body + (1.0 - beta) / (PI * RIGHT_REACH))
    }
}

/// Right-tail probability P(X > x) for x >= 1 and beta >= 0.
pub fn skew_cauchy_sf(x: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if x < 1.0 || beta < 0.0 {
        return Err(Error::Domain("tail probability implemented for x >= 1, beta >= 0".into()));
    }
    if beta == 0.0 {
        return Ok((1.0 / x).atan() / PI);
    }
    let reach = (x * 1e4).max(RIGHT_REACH);
    let f = |t: f64| skew_cauchy_pdf(t, beta).unwrap_or(f64::NAN);
    let tol = Tol { abs: 1e-16, rel: 1e-10, max_segments: 400 };
    let mut a = x;
    let mut acc = quad::NeumaierSum::default();
    while a < reach {
        let b = (a * 10.0).min(reach);
        acc.add(integrate(f, a, b, tol)?.value);
        a = b;
    }
    Ok(acc.sum() + (1.0 + beta) / (PI * reach))
}

/// Total mass of the density, closing both tails with the power asymptotes.
pub fn skew_cauchy_total_mass(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let (left, right) = if beta >= 0.0 {
        (if beta == 1.0 { 40.0 } else { LEFT_REACH }, RIGHT_REACH)
    } else {
        (RIGHT_REACH, if beta == -1.0 { 40.0 } else { LEFT_REACH })
    };
    let body = integrate_pdf(beta, -left, right)?;
    Ok(body + (1.0 - beta) / (PI * left) + (1.0 + beta) / (PI * right))
}

/// Conditional limit law of the likelihood-ratio statistic given a positive
/// estimate: the law of -2U - 2 log(1 - U) for U uniform.
#[derive(Debug, Clone, Copy, Default)]
pub struct GLaw;

impl GLaw {
    pub fn quantile(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return f64::INFINITY;
        }
        if u <= 0.0 {
            return 0.0;
        }
        if u < 1e-3 {
            // 2 sum_{k>=2} u^k / k, avoids cancellation near zero
            let mut term = u;
            let mut s = 0.0;
            for k in 2..12 {
                term *= u;
                s += term / k as f64;
            }
            return 2.0 * s;
        }
        -2.0 * u - 2.0 * (-u).ln_1p()
    }

    /// Solves quantile(u) = x for u.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x.is_infinite() {
            return 1.0;
        }
        let hi = 1.0 - 1e-16;
        if self.quantile(hi) <= x {
            return 1.0;
        }
        // starting point: u ~ sqrt(x) near zero, 1 - u ~ exp(-(x+2)/2) far out
        let u0 = if x < 1.0 { x.sqrt() * (1.0 - x.sqrt() / 3.0) } else { 1.0 - (-(x + 2.0) / 2.0).exp() };
        let fd = |u: f64| (self.quantile(u) - x, 2.0 * u / (1.0 - u));
        match newton_bracketed(fd, 0.0, hi, u0.clamp(1e-300, hi), 1e-15 * x.max(1e-300), 200) {
            Ok((u, _)) => u,
            Err(_) => bisect(|u| self.quantile(u) - x, 0.0, hi, 1e-16, 300).unwrap_or(f64::NAN),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if x == 0.0 { f64::INFINITY } else { 0.0 };
        }
        let u = self.cdf(x);
        (1.0 - u) / (2.0 * u)
    }

    /// Raw moments E[Lambda^m], m = 1..=4. With v = -log(1 - U) ~ Exp(1),
    /// Lambda = 2(v - 1 + exp(-v)), and E[v^a exp(-c v)] = a!/(1+c)^(a+1).
    pub fn raw_moments(&self) -> [f64; 4] {
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let mut out = [0.0; 4];
        for (m, slot) in out.iter_mut().enumerate() {
            let m = m + 1;
            let mut s = 0.0;
            for a in 0..=m {
                for b in 0..=(m - a) {
                    let c = m - a - b;
                    let multinom = fact(m) / (fact(a) * fact(b) * fact(c));
                    let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                    s += multinom * sign * fact(a) / (1.0 + c as f64).powi(a as i32 + 1);
                }
            }
            *slot = 2f64.powi(m as i32) * s;
        }
        out
    }

    pub fn cumulants(&self) -> [f64; 4] {
        let [m1, m2, m3, m4] = self.raw_moments();
        [
            m1,
            m2 - m1 * m1,
            m3 - 3.0 * m2 * m1 + 2.0 * m1.powi(3),
            m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4),
        ]
    }
}

/// Power series for the log density of the square root of a G variable.
pub fn g_sqrt_logpdf_series(x: f64) -> f64 {
    -2.0 * x / 3.0 - 5.0 * x * x / 36.0 - 23.0 * x.powi(3) / 810.0 - 31.0 * x.powi(4) / 6480.0
}

#[derive(Debug, Clone, Copy)]
pub struct TaylorCheck {
    /// max |exp(series)/density - 1|
    pub max_rel_dev: f64,
    pub argmax: f64,
    /// max |series - log density|
    pub max_abs_log_dev: f64,
    /// max |exp(series) - density|
    pub max_abs_dev: f64,
}

/// Compares the four-term series for log(2x g(x^2)) with the numeric density
/// on a grid over (0, 3).
pub fn g_sqrt_logpdf_taylor_check() -> TaylorCheck {
    let g = GLaw;
    let mut out = TaylorCheck { max_rel_dev: 0.0, argmax: 0.0, max_abs_log_dev: 0.0, max_abs_dev: 0.0 };
    for i in 1..3000 {
        let x = i as f64 * 1e-3;
        let dens = 2.0 * x * g.pdf(x * x);
        let ser = g_sqrt_logpdf_series(x);
        let rel = (ser.exp() / dens - 1.0).abs();
        if rel > out.max_rel_dev {
            out.max_rel_dev = rel;
            out.argmax = x;
        }
        out.max_abs_log_dev = out.max_abs_log_dev.max((ser - dens.ln()).abs());
        out.max_abs_dev = out.max_abs_dev.max((ser.exp() - dens).abs());
    }
    out
}

/// Quantile of the chi-squared law with one degree of freedom.
pub fn chi2_1_quantile(u: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + u));
    let mut x = z * z;
    // polish: the normal quantile is only good to ~1e-9
    for _ in 0..2 {
        let dens = (-0.5 * x).exp() / (2.0 * PI * x).sqrt();
        if dens > 0.0 && dens.is_finite() {
            x -= (chi2_1_cdf(x) - u) / dens;
        }
    }
    x
}

pub fn chi2_1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::erf::erf((x / 2.0).sqrt())
}

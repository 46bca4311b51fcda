//! Slowly varying functions of the form (b0 log x)^(d+1) exp((b1 log x)^g),
//! the de Bruijn composition and conjugate, stabilizing sequences for
//! Cauchy-domain sums and the canonical heavy-tailed distribution with
//! tail 2 C_1 / (x L(x)).

use crate::error::{Error, Result};
use crate::quad::{self, bisect, newton_bracketed, wynn_epsilon, NeumaierSum, Tol};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const C1: f64 = 1.0 / PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowVariationParams {
    pub beta0: f64,
    pub beta1: f64,
    pub delta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub c1: f64,
}

impl SlowVariationParams {
    pub fn new(beta0: f64, beta1: f64, delta: f64, gamma: f64, mu: f64) -> Result<Self> {
        let gamma = if beta1 == 0.0 { 0.0 } else { gamma };
        let p = SlowVariationParams { beta0, beta1, delta, gamma, mu, c1: C1 };
        p.validate()?;
        Ok(p)
    }

    /// The finite-mean constraint.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0) || self.beta1 < 0.0 {
            return Err(Error::Invariant(format!("need beta0 > 0, beta1 >= 0: {self:?}")));
        }
        let ok = if self.beta1 > 0.0 { self.gamma > 0.0 && self.gamma < 1.0 } else { self.delta > 0.0 && self.gamma == 0.0 };
        if !ok {
            return Err(Error::Invariant(format!("finite-mean constraint violated: {self:?}")));
        }
        Ok(())
    }

    /// log L at x = e^u, u > 0.
    #[inline]
    pub fn ln_l_at_log(&self, u: f64) -> f64 {
        let e = if self.beta1 > 0.0 { (self.beta1 * u).powf(self.gamma) } else { 0.0 };
        (self.delta + 1.0) * (self.beta0 * u).ln() + e
    }

    pub fn l_eval(&self, x: f64) -> Result<f64> {
        if !(x > 1.0) {
            return Err(Error::Domain(format!("L(x) needs x > 1, got {x}")));
        }
        Ok(self.ln_l_at_log(x.ln()).exp())
    }

    /// x L'(x) / L(x) at x = e^u.
    #[inline]
    pub fn elasticity_at_log(&self, u: f64) -> f64 {
        let g = if self.beta1 > 0.0 { self.gamma * (self.beta1 * u).powf(self.gamma) / u } else { 0.0 };
        (self.delta + 1.0) / u + g
    }

    /// K_{delta,gamma,beta1}.
    pub fn k_const(&self) -> f64 {
        if self.beta1 > 0.0 && self.gamma > 0.0 {
            2.0 * self.c1 / (self.beta1.powf(self.gamma) * self.gamma)
        } else {
            2.0 * self.c1 / self.delta
        }
    }

    pub fn as_slow_fn(&self) -> SlowFn {
        let p = *self;
        Arc::new(move |x: f64| p.ln_l_at_log(x.ln()).exp())
    }
}

/// A slowly varying function as a shareable callable.
pub type SlowFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn constant_one() -> SlowFn {
    Arc::new(|_| 1.0)
}

/// (L1 <> L2)(x) = L1(x) L2(x L1(x)).
pub fn diamond(l1: SlowFn, l2: SlowFn) -> SlowFn {
    Arc::new(move |x| {
        let a = l1(x);
        a * l2(x * a)
    })
}

/// Conjugate of an arbitrary slowly varying function by the fixed point
/// b = 1 / L(x b). Small x, where the iteration can overshoot the domain,
/// falls back to bisection on log b.
pub fn conjugate_of(l: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    let mut b = 1.0 / l(x);
    let mut res = f64::INFINITY;
    for _ in 0..200 {
        if !(x * b > 1.0) || !b.is_finite() {
            break;
        }
        let lb = l(x * b);
        res = (b * lb - 1.0).abs();
        if res < 1e-12 {
            return Ok(b);
        }
        b = 1.0 / lb;
    }
    // b L(x b) = 1 with x b > 1; bracket in log b
    let g = |lb: f64| lb + l(x * lb.exp()).ln();
    let lo = -x.ln() + 1e-12;
    let mut hi = 1.0;
    while g(hi) < 0.0 && hi < 700.0 {
        hi *= 2.0;
    }
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return Err(Error::numeric(format!("conjugate has no root at x = {x}"), res));
    }
    let lb = bisect(g, lo, hi, 1e-15, 400)?;
    let b = lb.exp();
    let res = (b * l(x * b) - 1.0).abs();
    if res < 1e-12 {
        Ok(b)
    } else {
        Err(Error::numeric("conjugate fixed point did not converge", res))
    }
}

/// L-dagger(n) for the parametric family.
pub fn de_bruijn_conjugate(params: &SlowVariationParams, n: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::Domain(format!("n = {n} < 2")));
    }
    let p = *params;
    conjugate_of(&move |x: f64| p.ln_l_at_log(x.ln()).exp(), n)
}

/// The conjugate as a callable, for involution checks.
pub fn conjugate_fn(l: SlowFn) -> SlowFn {
    Arc::new(move |x| conjugate_of(&*l, x).unwrap_or(f64::NAN))
}

/// Which line of the centering display to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Centering {
    /// mu / L-dagger(n) - K (log n)^(1-gamma)
    #[default]
    LeadingOrder,
    /// mu / L-dagger(n) - K (log B_n)^(1-gamma); exact at the conjugate fixed point
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilizingTriple {
    pub n: f64,
    pub a_n: f64,
    pub b_n: f64,
    pub t_n: f64,
    pub k: f64,
}

pub fn stabilizing(params: &SlowVariationParams, n: f64) -> Result<StabilizingTriple> {
    stabilizing_with(params, n, Centering::LeadingOrder)
}

pub fn stabilizing_with(params: &SlowVariationParams, n: f64, centering: Centering) -> Result<StabilizingTriple> {
    params.validate()?;
    let ld = de_bruijn_conjugate(params, n)?;
    let b_n = n * ld;
    let k = params.k_const();
    let log_term = match centering {
        Centering::LeadingOrder => n.ln(),
        Centering::Refined => b_n.ln(),
    };
    let s = log_term.powf(1.0 - params.gamma);
    Ok(StabilizingTriple { n, a_n: params.mu / ld - k * s, b_n, t_n: k * b_n * s, k })
}

/// Limiting rate of P(mean > mu): beta1^gamma gamma (log n)^(gamma-1), or
/// delta / log n when beta1 = 0.
pub fn error_rate_theory(params: &SlowVariationParams, n: f64) -> f64 {
    let ln = n.ln();
    if params.beta1 > 0.0 && params.gamma > 0.0 {
        params.beta1.powf(params.gamma) * params.gamma * ln.powf(params.gamma - 1.0)
    } else {
        params.delta / ln
    }
}

/// Distribution on [x0, inf) with survival min(1, 2 C_1 / (x L(x))).
#[derive(Debug, Clone, Copy)]
pub struct CanonicalTail {
    pub params: SlowVariationParams,
    pub x0: f64,
    pub mean: f64,
    ln_2c1: f64,
}

impl CanonicalTail {
    pub fn new(params: SlowVariationParams) -> Result<Self> {
        params.validate()?;
        if params.delta <= -1.0 {
            return Err(Error::Invariant("canonical tail needs delta > -1".into()));
        }
        let ln_2c1 = (2.0 * params.c1).ln();
        // x0 L(x0) = 2 C_1 in u = log x
        let g = |u: f64| u + params.ln_l_at_log(u) - ln_2c1;
        let mut hi = 1.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        let u0 = bisect(g, 1e-300, hi, 1e-15, 400)?;
        let x0 = u0.exp();
        let mut d = CanonicalTail { params, x0, mean: f64::NAN, ln_2c1 };
        d.mean = x0 + d.integrated_sf(x0)?;
        Ok(d)
    }

    /// int_x^inf sf(y) dy for x >= x0, i.e. 2 C_1 int_{log x}^inf du / L(e^u).
    pub fn integrated_sf(&self, x: f64) -> Result<f64> {
        let p = &self.params;
        let u = x.max(self.x0).ln();
        if p.beta1 == 0.0 {
            return Ok(2.0 * p.c1 / (p.beta0 * p.delta * (p.beta0 * u).powf(p.delta)));
        }
        Ok(quad::integrate_to_inf(|v| 2.0 * p.c1 * (-p.ln_l_at_log(v)).exp(), u, Tol::new(1e-16, 1e-12))?.value)
    }

    pub fn ln_sf_at_log(&self, u: f64) -> f64 {
        (self.ln_2c1 - u - self.params.ln_l_at_log(u)).min(0.0)
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x <= self.x0 {
            1.0
        } else {
            self.ln_sf_at_log(x.ln()).exp()
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.x0 {
            return 0.0;
        }
        let u = x.ln();
        self.sf(x) / x * (1.0 + self.params.elasticity_at_log(u))
    }

    /// Solves sf(x) = p through log sf. `ln_p` may be very negative.
    pub fn inv_sf_ln(&self, ln_p: f64) -> f64 {
        if ln_p >= 0.0 {
            return self.x0;
        }
        let c = self.ln_2c1 - ln_p;
        let u0 = self.x0.ln();
        let fd = |u: f64| (u + self.params.ln_l_at_log(u) - c, 1.0 + self.params.elasticity_at_log(u));
        let mut hi = u0.max(c).max(1.0);
        while fd(hi).0 < 0.0 {
            hi *= 2.0;
        }
        let start = (c - self.params.ln_l_at_log(c.max(u0))).clamp(u0, hi);
        let u = match newton_bracketed(fd, u0, hi, start, 1e-13 * c.abs().max(1.0), 100) {
            Ok((u, _)) => u,
            Err(_) => bisect(|u| fd(u).0, u0, hi, 1e-15, 400).unwrap_or(u0),
        };
        u.exp()
    }

    pub fn inv_sf(&self, p: f64) -> f64 {
        self.inv_sf_ln(p.ln())
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        // 1 - u lies in (0, 1]
        self.inv_sf_ln((1.0 - u).ln())
    }

    /// E[X; X <= t] and E[X^2; X <= t].
    pub fn truncated_moments(&self, t: f64) -> Result<(f64, f64)> {
        if t <= self.x0 {
            return Ok((0.0, 0.0));
        }
        // E[X; X<=t] = x0 + int_{x0}^t sf - t sf(t); E[X^2; X<=t] = x0^2 + 2 int x sf - t^2 sf(t)
        let tol = Tol::new(1e-14, 1e-13);
        let (u0, ut) = (self.x0.ln(), t.ln());
        let i1 = quad::integrate(|u| (u + self.ln_sf_at_log(u)).exp(), u0, ut, tol)?.value;
        let i2 = quad::integrate(|u| (2.0 * u + self.ln_sf_at_log(u)).exp(), u0, ut, tol)?.value;
        let st = self.sf(t);
        Ok((self.x0 + i1 - t * st, self.x0 * self.x0 + 2.0 * i2 - t * t * st))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SineIntegralCheck {
    pub numeric: f64,
    pub theory: f64,
    pub rel_err: f64,
    /// numeric - mu t
    pub numeric_non_mu: f64,
    /// -K t (log T)^(1-gamma) / L(T)
    pub theory_non_mu: f64,
}

/// int sin(t x) dF(x) for the canonical distribution, compared with
/// mu t - K t (log T)^(1-gamma) / L(T).
pub fn sine_integral_check(params: &SlowVariationParams, t: f64) -> Result<SineIntegralCheck> {
    if !(t > 0.0 && t < 0.01) {
        return Err(Error::Domain(format!("t = {t} outside (0, 0.01)")));
    }
    let dist = CanonicalTail::new(*params)?;
    let x0 = dist.x0;
    // int (sin(tx) - tx) dF = (sin(t x0) - t x0) + t int_{x0}^inf (cos(tx) - 1) sf(x) dx
    let period = PI / t;
    let x_split = (x0 / period).ceil() * period + 40.0 * period;
    let tol = |a: f64, b: f64| Tol { abs: 1e-14 * (b - a) * dist.sf(a), rel: 1e-12, max_segments: 2000 };
    let mut body = NeumaierSum::default();
    let mut a = x0;
    while a < x_split {
        let b = (a + period).min(x_split);
        let b = if a < 10.0 * x0 { b.min(10.0 * x0) } else { b };
        body.add(quad::integrate(|x| ((t * x).cos() - 1.0) * dist.sf(x), a, b, tol(a, b))?.value);
        a = b;
    }
    // - int_{X}^inf sf dx, in log coordinates
    let mass = dist.integrated_sf(x_split)?;
    // int_X^inf cos(tx) sf dx over half-periods, accelerated
    let mut partial = Vec::new();
    let mut acc = 0.0;
    let mut a = x_split;
    for _ in 0..40 {
        let b = a + period;
        acc += quad::integrate(|x| (t * x).cos() * dist.sf(x), a, b, tol(a, b))?.value;
        partial.push(acc);
        a = b;
    }
    let osc = wynn_epsilon(&partial);
    let non_mu = ((t * x0).sin() - t * x0) + t * (body.sum() - mass + osc);
    let big_t = 1.0 / t;
    let l_t = params.l_eval(big_t)?;
    let theory_non_mu = -params.k_const() * t * big_t.ln().powf(1.0 - params.gamma) / l_t;
    let mu = dist.mean;
    Ok(SineIntegralCheck {
        numeric: mu * t + non_mu,
        theory: mu * t + theory_non_mu,
        rel_err: ((non_mu - theory_non_mu) / theory_non_mu).abs(),
        numeric_non_mu: non_mu,
        theory_non_mu,
    })
}

/// Hill estimate of the tail index from the k largest of `xs`.
pub fn hill_index(xs: &[f64], k: usize) -> Result<f64> {
    if k < 2 || k >= xs.len() {
        return Err(Error::Input(format!("need 2 <= k < n, got k = {k}, n = {}", xs.len())));
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let thr = v[k];
    if !(thr > 0.0) {
        return Err(Error::Domain("Hill threshold must be positive".into()));
    }
    let m = v[..k].iter().map(|x| (x / thr).ln()).sum::<f64>() / k as f64;
    Ok(1.0 / m)
}

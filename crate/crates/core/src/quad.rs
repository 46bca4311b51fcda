//! Quadrature, root finding and summation helpers shared by the numerical modules.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { abs: 1e-13, rel: 1e-11, max_segments: 2000 }
    }
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tol { abs, rel, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub abs_err: f64,
    pub segments: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let val = kron * h;
    let err = ((kron - gauss) * h).abs();
    (val, err)
}

struct Seg {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Adaptive Gauss-Kronrod (7/15) on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Quad> {
    if a == b {
        return Ok(Quad { value: 0.0, abs_err: 0.0, segments: 0 });
    }
    let (v, e) = gk15(&f, a, b);
    if !v.is_finite() {
        return Err(Error::numeric("non-finite integrand", f64::NAN));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Seg { a, b, val: v, err: e });
    let mut total = v;
    let mut err = e;
    let mut n = 1;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if n >= tol.max_segments {
            return Err(Error::numeric("quadrature did not converge", err));
        }
        let s = heap.pop().expect("heap non-empty");
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            // interval below resolution; accept what we have
            heap.push(s);
            break;
        }
        let (v1, e1) = gk15(&f, s.a, m);
        let (v2, e2) = gk15(&f, m, s.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::numeric("non-finite integrand", err));
        }
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        heap.push(Seg { a: s.a, b: m, val: v1, err: e1 });
        heap.push(Seg { a: m, b: s.b, val: v2, err: e2 });
        n += 1;
    }
    // re-sum to shed accumulated rounding from the running updates
    let mut acc = NeumaierSum::default();
    let mut eacc = 0.0;
    for s in heap.iter() {
        acc.add(s.val);
        eacc += s.err;
    }
    Ok(Quad { value: acc.sum(), abs_err: eacc, segments: n })
}

/// Integral over [a, inf) through x = a + t/(1-t).
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tol) -> Result<Quad> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - t;
        let x = a + t / u;
        let v = f(x) / (u * u);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Integral over (-inf, b].
pub fn integrate_from_neg_inf<F: Fn(f64) -> f64>(f: F, b: f64, tol: Tol) -> Result<Quad> {
    integrate_to_inf(|y| f(-y), -b, tol)
}

/// Integral over the whole real line, split at `c`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, c: f64, tol: Tol) -> Result<Quad> {
    let l = integrate_from_neg_inf(&f, c, tol)?;
    let r = integrate_to_inf(&f, c, tol)?;
    Ok(Quad { value: l.value + r.value, abs_err: l.abs_err + r.abs_err, segments: l.segments + r.segments })
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Wynn epsilon acceleration of a sequence of partial sums; returns the
/// last even-column estimate.
pub fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n < 3 {
        return s[n - 1];
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = s[n - 1];
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                return if k % 2 == 1 { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        k += 1;
        if k % 2 == 0 {
            best = *cur.last().expect("non-empty");
        }
    }
    best
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }
    #[inline]
    pub fn sum(&self) -> f64 {
        self.s + self.c
    }
    pub fn merge(&mut self, o: &NeumaierSum) {
        self.add(o.s);
        self.add(o.c);
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = NeumaierSum::default();
    for x in it {
        acc.add(x);
    }
    acc.sum()
}

/// Bisection for a sign change of `f` on [lo, hi].
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..max_iter {
        let m = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || m == lo || m == hi {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == flo.signum() {
            lo = m;
            flo = fm;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton iteration kept inside a bracket, falling back to bisection when a
/// step leaves it. `fd` returns (f, f').
pub fn newton_bracketed<F: Fn(f64) -> (f64, f64)>(
    fd: F,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<(f64, usize)> {
    let (flo, _) = fd(lo);
    let rising = flo < 0.0;
    let mut x = x0.clamp(lo, hi);
    let mut last = f64::INFINITY;
    for it in 1..=max_iter {
        let (fx, dfx) = fd(x);
        last = fx;
        if fx.abs() <= ftol {
            return Ok((x, it));
        }
        if (fx < 0.0) == rising {
            lo = x;
        } else {
            hi = x;
        }
        let step = x - fx / dfx;
        x = if dfx != 0.0 && step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok((x, it));
        }
    }
    Err(Error::numeric("newton iteration did not converge", last))
}

/// Golden-section search for the maximum of a unimodal function on [a, b].
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

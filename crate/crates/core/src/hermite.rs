//! One-dimensional Hermite machinery.
//!
//! # Normalization
//!
//! Scalar functions are expanded in probabilists' Hermite polynomials as
//!
//! ```text
//! f(x) = Σ_k (μ_k / k!) He_k(x),    μ_k = E[f(z) He_k(z)],  z ~ N(0, 1),
//! ```
//!
//! so `E[f²] = Σ_k μ_k² / k!`. The order-`k` Hermite tensor of a function of
//! `r` Gaussian coordinates uses the orthonormal version of the same
//! convention: for an index tuple `i` with multiplicity vector `α`,
//! `C_k[i] = E[f Π_m He_{α_m}(z_m)] / √(k!)`. In one dimension this gives
//! `C_k = μ_k / √(k!)`, and in general `Σ_k ‖C_k‖_F² = E[f²]`. The tensor's
//! `k!/α!` equal entries per multi-index play the role of the
//! permutation-count weight.
//!
//! Polynomial activations are converted exactly. Non-polynomial ones use
//! Gauss–Hermite quadrature, with kinked activations (relu) integrated by
//! Gauss–Legendre on each side of the kink.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Default leap-index threshold for analytic and quadrature coefficients.
pub const LEAP_TOL: f64 = 1e-8;

/// `He_k(x)` by the three-term recurrence.
pub fn he_poly(k: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `He_0(x), …, He_kmax(x)`.
pub fn he_values(kmax: u32, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax as usize + 1);
    out.push(1.0);
    if kmax >= 1 {
        out.push(x);
    }
    for j in 1..kmax as usize {
        let next = x * out[j] - j as f64 * out[j - 1];
        out.push(next);
    }
    out
}

/// `k!` as a float (exact up to 22!).
pub fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// `E[z^m]` for `z ~ N(0, 1)`: `(m−1)!!` for even `m`, 0 otherwise.
/// Integer arithmetic is exact up to `m = 56`.
pub fn gaussian_moment(m: u32) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    if m <= 56 {
        let mut acc: u128 = 1;
        let mut j = m as u128;
        while j > 1 {
            j -= 1;
            acc *= j;
            j -= 1;
        }
        acc as f64
    } else {
        let mut acc = 1.0;
        let mut j = m as i64 - 1;
        while j > 1 {
            acc *= j as f64;
            j -= 2;
        }
        acc
    }
}

/// `E[z^m He_k(z)] = m! / (2^s s!)` with `s = (m−k)/2`, or 0 when `m < k` or
/// `m − k` is odd.
pub fn monomial_hermite_moment(m: u32, k: u32) -> f64 {
    if m < k || (m - k) % 2 == 1 {
        return 0.0;
    }
    let s = (m - k) / 2;
    if m <= 33 {
        // m!/(s! 2^s) = Π_{j=s+1}^{m} j / 2^s
        let mut acc: u128 = 1;
        for j in (s + 1)..=m {
            acc *= j as u128;
        }
        acc as f64 / (1u128 << s) as f64
    } else {
        let mut acc = 1.0;
        for j in (s + 1)..=m {
            acc *= j as f64;
        }
        acc / 2f64.powi(s as i32)
    }
}

/// Monomial coefficients of `He_k`, lowest degree first.
pub fn he_monomial_coeffs(k: u32) -> Vec<f64> {
    let mut c = vec![0.0; k as usize + 1];
    // He_k = Σ_s (−1)^s k!/(2^s s! (k−2s)!) x^{k−2s}
    let mut s = 0;
    while 2 * s <= k {
        let mut v = 1.0;
        for j in (k - 2 * s + 1)..=k {
            v *= j as f64;
        }
        v /= factorial(s) * 2f64.powi(s as i32);
        c[(k - 2 * s) as usize] = if s % 2 == 0 { v } else { -v };
        s += 1;
    }
    c
}

/// `μ_k = E[p(z) He_k(z)]` for the polynomial `p(x) = Σ_m a_m x^m`, exactly.
pub fn monomial_to_hermite(a: &[f64], kmax: u32) -> Vec<f64> {
    (0..=kmax)
        .map(|k| {
            a.iter()
                .enumerate()
                .map(|(m, &am)| if am == 0.0 { 0.0 } else { am * monomial_hermite_moment(m as u32, k) })
                .sum()
        })
        .collect()
}

/// Gauss quadrature rule: nodes and weights.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Gauss–Hermite rule for the standard normal density (weights sum to 1).
    ///
    /// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix of the
    /// probabilists' recurrence and weights the squared first components of
    /// its eigenvectors. Only that first row is carried through the QL
    /// iterations, so the cost is O(n²).
    pub fn gauss_hermite(n: usize) -> Self {
        let mut d = vec![0.0; n];
        let mut e: Vec<f64> = (1..=n).map(|k| if k < n { (k as f64).sqrt() } else { 0.0 }).collect();
        let mut z0 = vec![0.0; n];
        if n > 0 {
            z0[0] = 1.0;
        }
        tridiagonal_ql(&mut d, &mut e, &mut z0);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let mut nodes: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
        let mut weights: Vec<f64> = idx.iter().map(|&i| z0[i] * z0[i]).collect();
        // Polish nodes with Newton steps on the orthonormal recurrence and
        // recompute weights from the Christoffel formula, then restore exact
        // symmetry.
        for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
            for _ in 0..2 {
                let (p, dp, _) = orthonormal_he(n, *x);
                if dp != 0.0 && dp.is_finite() && p.is_finite() {
                    *x -= p / dp;
                }
            }
            let (_, _, s) = orthonormal_he(n, *x);
            if s.is_finite() && s > 0.0 {
                *w = 1.0 / s;
            }
        }
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Quadrature { nodes, weights }
    }

    /// Gauss–Legendre rule on `[lo, hi]` (plain Lebesgue weight).
    pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let xm = 0.5 * (hi + lo);
        let xl = 0.5 * (hi - lo);
        let nf = n as f64;
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = xm - xl * z;
            nodes[n - 1 - i] = xm + xl * z;
            weights[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Quadrature { nodes, weights }
    }

    /// Rule for `E[h(z)]`, `z ~ N(0,1)`, with a kink at 0: Gauss–Legendre on
    /// `[−L, 0]` and `[0, L]` with the Gaussian density folded into the weights.
    pub fn gaussian_split(n: usize) -> Self {
        const L: f64 = 16.0;
        let inv = 1.0 / (2.0 * PI).sqrt();
        let mut nodes = Vec::with_capacity(2 * n);
        let mut weights = Vec::with_capacity(2 * n);
        for (lo, hi) in [(-L, 0.0), (0.0, L)] {
            let q = Self::gauss_legendre(n, lo, hi);
            for (x, w) in q.nodes.iter().zip(&q.weights) {
                nodes.push(*x);
                weights.push(w * inv * (-0.5 * x * x).exp());
            }
        }
        Quadrature { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Scalar activation or link component.
#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    Relu,
    Erf,
    Tanh,
    Identity,
    /// `He_k`.
    Hermite(u32),
    /// `Σ_m c_m x^m`, lowest degree first.
    Polynomial(Vec<f64>),
    /// Weighted sum of other activations.
    Sum(Vec<(f64, Activation)>),
    /// `σ(x + shift)`.
    Shifted(Box<Activation>, f64),
}

impl Activation {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Erf => libm::erf(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
            Activation::Hermite(k) => he_poly(*k, x),
            Activation::Polynomial(c) => c.iter().rev().fold(0.0, |acc, v| acc * x + v),
            Activation::Sum(parts) => parts.iter().map(|(w, a)| w * a.eval(x)).sum(),
            Activation::Shifted(a, s) => a.eval(x + s),
        }
    }

    /// First derivative; relu uses `σ'(0) = 0`.
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Erf => 2.0 / PI.sqrt() * (-x * x).exp(),
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
            Activation::Hermite(k) => {
                // He_k' = k He_{k−1}
                if *k == 0 {
                    0.0
                } else {
                    *k as f64 * he_poly(k - 1, x)
                }
            }
            Activation::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (m, v)| acc * x + m as f64 * v),
            Activation::Sum(parts) => parts.iter().map(|(w, a)| w * a.deriv(x)).sum(),
            Activation::Shifted(a, s) => a.deriv(x + s),
        }
    }

    /// Monomial coefficients when the activation is a polynomial.
    pub fn as_polynomial(&self) -> Option<Vec<f64>> {
        match self {
            Activation::Identity => Some(vec![0.0, 1.0]),
            Activation::Hermite(k) => Some(he_monomial_coeffs(*k)),
            Activation::Polynomial(c) => Some(c.clone()),
            Activation::Sum(parts) => {
                let mut acc: Vec<f64> = Vec::new();
                for (w, a) in parts {
                    let c = a.as_polynomial()?;
                    if acc.len() < c.len() {
                        acc.resize(c.len(), 0.0);
                    }
                    for (i, v) in c.iter().enumerate() {
                        acc[i] += w * v;
                    }
                }
                Some(acc)
            }
            Activation::Shifted(a, s) => {
                // p(x + s) by binomial expansion.
                let c = a.as_polynomial()?;
                let mut out = vec![0.0; c.len()];
                for (m, &cm) in c.iter().enumerate() {
                    let mut binom = 1.0;
                    for (j, o) in out.iter_mut().enumerate().take(m + 1) {
                        *o += cm * binom * s.powi((m - j) as i32);
                        binom = binom * (m - j) as f64 / (j + 1) as f64;
                    }
                }
                Some(out)
            }
            Activation::Relu | Activation::Erf | Activation::Tanh => None,
        }
    }

    /// Locations of derivative discontinuities.
    fn kinks(&self) -> Vec<f64> {
        match self {
            Activation::Relu => vec![0.0],
            Activation::Sum(parts) => parts.iter().flat_map(|(_, a)| a.kinks()).collect(),
            Activation::Shifted(a, s) => a.kinks().into_iter().map(|k| k - s).collect(),
            _ => Vec::new(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Activation::Relu => "relu".into(),
            Activation::Erf => "erf".into(),
            Activation::Tanh => "tanh".into(),
            Activation::Identity => "identity".into(),
            Activation::Hermite(k) => alloc::format!("He{k}"),
            Activation::Polynomial(_) => "polynomial".into(),
            Activation::Sum(_) => "sum".into(),
            Activation::Shifted(a, s) => alloc::format!("{}(x{:+})", a.name(), s),
        }
    }
}

/// Hermite coefficients `μ_0..μ_K` in the `μ_k = E[f He_k]` convention.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSeries {
    pub coeffs: Vec<f64>,
}

impl HermiteSeries {
    pub fn kmax(&self) -> u32 {
        self.coeffs.len() as u32 - 1
    }

    /// `Σ_k (μ_k/k!) He_k(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let he = he_values(self.kmax(), x);
        let mut fact = 1.0;
        let mut acc = 0.0;
        for (k, (mu, h)) in self.coeffs.iter().zip(&he).enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            acc += mu / fact * h;
        }
        acc
    }

    /// Orthonormal coefficient `μ_k / √(k!)`.
    pub fn normalized(&self, k: u32) -> f64 {
        self.coeffs[k as usize] / factorial(k).sqrt()
    }

    /// Truncated `E[f²] = Σ μ_k²/k!`.
    pub fn norm_sq(&self) -> f64 {
        (0..=self.kmax()).map(|k| self.normalized(k).powi(2)).sum()
    }

    /// Smallest `k ≥ 1` with `|μ_k| > tol`.
    pub fn leap_index(&self, tol: f64) -> Result<u32> {
        (1..=self.kmax())
            .find(|&k| self.coeffs[k as usize].abs() > tol)
            .ok_or(Error::NoFiniteLeap { tol })
    }
}

/// Quadrature settings for non-polynomial activations.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub nodes: usize,
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { nodes: 200, rel_tol: 1e-10, max_nodes: 3200 }
    }
}

pub fn hermite_coeffs(f: &Activation, kmax: u32) -> Result<HermiteSeries> {
    hermite_coeffs_with(f, kmax, &QuadratureConfig::default())
}

pub fn hermite_coeffs_with(f: &Activation, kmax: u32, cfg: &QuadratureConfig) -> Result<HermiteSeries> {
    if let Some(c) = f.as_polynomial() {
        return Ok(HermiteSeries { coeffs: monomial_to_hermite(&c, kmax) });
    }
    if let Activation::Sum(parts) = f {
        // Linear in f: handle polynomial parts exactly and the rest by quadrature.
        let mut acc = vec![0.0; kmax as usize + 1];
        for (w, a) in parts {
            let s = hermite_coeffs_with(a, kmax, cfg)?;
            for (x, y) in acc.iter_mut().zip(&s.coeffs) {
                *x += w * y;
            }
        }
        return Ok(HermiteSeries { coeffs: acc });
    }
    let kinks = f.kinks();
    let rule = |n: usize| -> Quadrature {
        match kinks.as_slice() {
            [] => Quadrature::gauss_hermite(n),
            [k0] if *k0 == 0.0 => Quadrature::gaussian_split(n),
            ks => shifted_split(n, ks),
        }
    };
    let project = |q: &Quadrature| -> (Vec<f64>, f64) {
        let mut mu = vec![0.0; kmax as usize + 1];
        let mut sq = 0.0;
        for (x, w) in q.nodes.iter().zip(&q.weights) {
            let fx = f.eval(*x);
            sq += w * fx * fx;
            for (k, h) in he_values(kmax, *x).iter().enumerate() {
                mu[k] += w * fx * h;
            }
        }
        (mu, sq)
    };
    let mut n = cfg.nodes;
    let (mut mu, _) = project(&rule(n));
    let mut diff = f64::INFINITY;
    while n < cfg.max_nodes {
        n *= 2;
        let (mu2, sq) = project(&rule(n));
        let scale = sq.sqrt().max(f64::MIN_POSITIVE);
        diff = (0..=kmax)
            .map(|k| (mu2[k as usize] - mu[k as usize]).abs() / factorial(k).sqrt())
            .fold(0.0, f64::max)
            / scale;
        mu = mu2;
        if diff <= cfg.rel_tol {
            return Ok(HermiteSeries { coeffs: mu });
        }
    }
    Err(Error::QuadratureNonConvergence { what: f.name(), diff })
}

/// Orthonormal probabilists' Hermite values at `x`: returns
/// `(h_n(x), h_n'(x), Σ_{k<n} h_k(x)²)` with `h_k = He_k/√(k!)`.
fn orthonormal_he(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sum = 0.0;
    for k in 0..n {
        sum += cur * cur;
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    // h_n' = √n h_{n−1}
    (cur, (n as f64).sqrt() * prev, sum)
}

/// Implicit QL on a symmetric tridiagonal matrix (diagonal `d`,
/// off-diagonal `e[i]` between rows `i` and `i+1`). On return `d` holds the
/// eigenvalues and `z` the first row of the eigenvector matrix, given that
/// it started as the first row of the identity.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Gaussian rule split at arbitrary kink locations.
fn shifted_split(n: usize, kinks: &[f64]) -> Quadrature {
    const L: f64 = 16.0;
    let mut cuts: Vec<f64> = kinks.iter().copied().filter(|k| k.abs() < L).collect();
    cuts.push(-L);
    cuts.push(L);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let inv = 1.0 / (2.0 * PI).sqrt();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for win in cuts.windows(2) {
        let q = Quadrature::gauss_legendre(n, win[0], win[1]);
        for (x, w) in q.nodes.iter().zip(&q.weights) {
            nodes.push(*x);
            weights.push(w * inv * (-0.5 * x * x).exp());
        }
    }
    Quadrature { nodes, weights }
}

/// Closed-form relu coefficients: `μ_0 = φ(0)`, `μ_1 = 1/2`,
/// `μ_k = φ(0) He_{k−2}(0)` for `k ≥ 2`. Used as an independent check.
pub fn relu_coeffs_closed_form(kmax: u32) -> Vec<f64> {
    let phi0 = 1.0 / (2.0 * PI).sqrt();
    (0..=kmax)
        .map(|k| match k {
            0 => phi0,
            1 => 0.5,
            _ => phi0 * he_poly(k - 2, 0.0),
        })
        .collect()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / core::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spec_he_values() {
        assert_eq!(he_poly(0, 3.7), 1.0);
        assert_eq!(he_poly(2, 2.0), 3.0);
        assert_eq!(he_poly(3, 1.0), -2.0);
    }

    #[test]
    fn monomial_coeffs_match_recurrence() {
        for k in 0..15 {
            let c = he_monomial_coeffs(k);
            for &x in &[-2.3, -0.4, 0.0, 1.1, 3.0] {
                let p = Activation::Polynomial(c.clone()).eval(x);
                assert_relative_eq!(p, he_poly(k, x), epsilon = 1e-9, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_moments_are_double_factorials() {
        assert_eq!(gaussian_moment(0), 1.0);
        assert_eq!(gaussian_moment(2), 1.0);
        assert_eq!(gaussian_moment(4), 3.0);
        assert_eq!(gaussian_moment(6), 15.0);
        assert_eq!(gaussian_moment(5), 0.0);
    }

    #[test]
    fn quadrature_rules_integrate_moments() {
        for n in [7, 200, 400, 800, 1600, 3200] {
            let q = Quadrature::gauss_hermite(n);
            assert_relative_eq!(q.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            for m in 0..20u32.min(2 * n as u32) {
                let got = q.integrate(|x| x.powi(m as i32));
                let scale = gaussian_moment(m + m % 2);
                assert!((got - gaussian_moment(m)).abs() <= 1e-10 * scale, "n={n} m={m} got={got}");
            }
        }
        let q = Quadrature::gaussian_split(200);
        for m in 0..20u32 {
            let got = q.integrate(|x| x.powi(m as i32));
            let scale = gaussian_moment(m + m % 2);
            assert!((got - gaussian_moment(m)).abs() <= 1e-10 * scale, "m={m} got={got}");
        }
        let gl = Quadrature::gauss_legendre(5, 0.0, 2.0);
        assert_relative_eq!(gl.integrate(|x| x.powi(9)), 2f64.powi(10) / 10.0, max_relative = 1e-13);
    }

    #[test]
    fn relu_coefficients() {
        let s = hermite_coeffs(&Activation::Relu, 12).unwrap();
        assert_relative_eq!(s.coeffs[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.coeffs[0], 0.398_942_280_401_432_7, epsilon = 1e-12);
        for (a, b) in s.coeffs.iter().zip(relu_coeffs_closed_form(12)) {
            assert_relative_eq!(*a, b, epsilon = 1e-10);
        }
        assert_eq!(s.leap_index(LEAP_TOL).unwrap(), 1);
    }

    #[test]
    fn hermite_activation_is_a_unit_spike() {
        let s = hermite_coeffs(&Activation::Hermite(2), 4).unwrap();
        assert_eq!(s.coeffs, vec![0.0, 0.0, 2.0, 0.0, 0.0]);
        assert_eq!(s.leap_index(LEAP_TOL).unwrap(), 2);
        let s3 = hermite_coeffs(&Activation::Hermite(3), 6).unwrap();
        assert_eq!(s3.leap_index(LEAP_TOL).unwrap(), 3);
    }

    #[test]
    fn erf_and_tanh_converge() {
        let s = hermite_coeffs(&Activation::Erf, 5).unwrap();
        // μ_1 = E[erf'(z)] = 2/√(3π)
        assert_relative_eq!(s.coeffs[1], 2.0 / (3.0 * PI).sqrt(), epsilon = 1e-12);
        assert!(s.coeffs[0].abs() < 1e-14 && s.coeffs[2].abs() < 1e-14);
        let t = hermite_coeffs(&Activation::Tanh, 5).unwrap();
        assert!(t.coeffs[1] > 0.5 && t.coeffs[1] < 0.7);
    }

    #[test]
    fn shifted_relu_first_coefficient_is_normal_cdf() {
        for kappa in [-1.0, -0.3, 0.0, 0.7] {
            let s = hermite_coeffs(&Activation::Shifted(Box::new(Activation::Relu), kappa), 1).unwrap();
            assert_relative_eq!(s.coeffs[1], normal_cdf(kappa), epsilon = 1e-10);
        }
    }

    #[test]
    fn no_finite_leap_for_constants() {
        let s = hermite_coeffs(&Activation::Polynomial(vec![3.0]), 4).unwrap();
        assert!(matches!(s.leap_index(LEAP_TOL), Err(Error::NoFiniteLeap { .. })));
    }

    #[test]
    fn tiny_node_budget_reports_non_convergence() {
        let cfg = QuadratureConfig { nodes: 4, rel_tol: 1e-14, max_nodes: 8 };
        let err = hermite_coeffs_with(&Activation::Tanh, 6, &cfg).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { .. }));
    }
}

//! Multi-index targets `f*(z) = g*(W* z)` on Gaussian inputs.
//!
//! Everything except data sampling works in teacher coordinates `u = W* z`
//! in `R^r`. Hermite tensors use the orthonormal convention documented in
//! [`crate::hermite`]: for an index tuple with multiplicity vector `α`,
//! `C_k[i] = E[g* Π_m He_{α_m}(u_m)] / √(k!)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::hermite::{factorial, hermite_coeffs, Activation, Quadrature};
use crate::linalg::{gemm, orthonormal_rows};
use crate::polynomial::MultivariatePolynomial;
use crate::rng::{self, Purpose};
use crate::staircase::Subspace;
use crate::{stats, Error, Mat, Result, Vector};

/// Threshold on `‖C_k‖_F` for the target's leap index.
pub const TENSOR_TOL: f64 = 1e-10;

/// One term `weight · σ(u_direction)` of a named-activation link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkComponent {
    pub weight: f64,
    pub direction: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Link {
    Polynomial(MultivariatePolynomial),
    /// `Σ_c weight_c · σ_c(u_{direction_c})` over `num_dirs` coordinates.
    NamedSum { num_dirs: usize, components: Vec<LinkComponent> },
}

impl Link {
    pub fn num_dirs(&self) -> usize {
        match self {
            Link::Polynomial(p) => p.num_vars(),
            Link::NamedSum { num_dirs, .. } => *num_dirs,
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Link::Polynomial(p) => p.eval(u),
            Link::NamedSum { components, .. } => {
                components.iter().map(|c| c.weight * c.activation.eval(u[c.direction])).sum()
            }
        }
    }

    /// Exact polynomial form when every component is polynomial.
    pub fn as_polynomial(&self) -> Option<MultivariatePolynomial> {
        match self {
            Link::Polynomial(p) => Some(p.clone()),
            Link::NamedSum { num_dirs, components } => {
                let mut acc = MultivariatePolynomial::zero(*num_dirs);
                for c in components {
                    let coeffs = c.activation.as_polynomial()?;
                    let term = MultivariatePolynomial::univariate(*num_dirs, c.direction, &coeffs);
                    acc = &acc + &term.scale(c.weight);
                }
                Some(acc)
            }
        }
    }

    pub fn require_polynomial(&self, what: &'static str) -> Result<MultivariatePolynomial> {
        self.as_polynomial().ok_or(Error::NonPolynomialLink(what))
    }

    /// Polynomial approximation: exact for polynomial links, otherwise each
    /// component is replaced by its Hermite expansion truncated at `degree`.
    pub fn to_polynomial_approx(&self, degree: u32) -> Result<MultivariatePolynomial> {
        if let Some(p) = self.as_polynomial() {
            return Ok(p);
        }
        let Link::NamedSum { num_dirs, components } = self else { unreachable!() };
        let mut acc = MultivariatePolynomial::zero(*num_dirs);
        for c in components {
            let mu = hermite_coeffs(&c.activation, degree)?;
            for k in 0..=degree {
                let coef = c.weight * mu.coeffs[k as usize] / factorial(k);
                if coef != 0.0 {
                    acc = &acc + &MultivariatePolynomial::hermite(*num_dirs, c.direction, k).scale(coef);
                }
            }
        }
        Ok(acc.pruned(1e-14))
    }

    /// Per-direction 1-D activations of a named sum (components grouped).
    fn grouped(&self) -> Option<Vec<(usize, Activation)>> {
        let Link::NamedSum { num_dirs, components } = self else { return None };
        let mut out = Vec::new();
        for dir in 0..*num_dirs {
            let parts: Vec<(f64, Activation)> = components
                .iter()
                .filter(|c| c.direction == dir)
                .map(|c| (c.weight, c.activation.clone()))
                .collect();
            if !parts.is_empty() {
                out.push((dir, Activation::Sum(parts)));
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexTarget {
    /// `r × d`, orthonormal rows.
    teacher: Mat,
    link: Link,
}

impl MultiIndexTarget {
    pub fn new(teacher: Mat, link: Link) -> Result<Self> {
        let r = link.num_dirs();
        if teacher.nrows() != r {
            return Err(Error::Dimension(format!("teacher has {} rows but the link uses {r} directions", teacher.nrows())));
        }
        if teacher.ncols() < r {
            return Err(Error::Dimension(format!("input dimension d = {} is smaller than r = {r}", teacher.ncols())));
        }
        let gram = gemm(&teacher, false, &teacher, true);
        let dev = (gram - Mat::identity(r, r)).amax();
        if dev > 1e-12 {
            return Err(Error::InvalidArgument(format!("teacher rows are not orthonormal (max deviation {dev:e})")));
        }
        Ok(MultiIndexTarget { teacher, link })
    }

    /// Teacher directions `e_1, …, e_r` of `R^d`.
    pub fn aligned(link: Link, d: usize) -> Result<Self> {
        let r = link.num_dirs();
        if d < r {
            return Err(Error::Dimension(format!("input dimension d = {d} is smaller than r = {r}")));
        }
        Self::new(Mat::identity(r, d), link)
    }

    /// Uniformly random orthonormal teacher directions.
    pub fn random_teacher(link: Link, d: usize, seed: u64) -> Result<Self> {
        let r = link.num_dirs();
        if d < r {
            return Err(Error::Dimension(format!("input dimension d = {d} is smaller than r = {r}")));
        }
        let mut g = rng::substream(seed, Purpose::Teacher, 0);
        let m = Mat::from_fn(r, d, |_, _| rng::gaussian(&mut g));
        Self::new(orthonormal_rows(&m), link)
    }

    pub fn teacher(&self) -> &Mat {
        &self.teacher
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    pub fn dim(&self) -> usize {
        self.teacher.ncols()
    }

    pub fn num_dirs(&self) -> usize {
        self.teacher.nrows()
    }

    /// Labels `g*(W* z)` for the rows of `z` (`n × d`).
    pub fn labels(&self, z: &Mat) -> Vector {
        let u = gemm(z, false, &self.teacher, true);
        let r = self.num_dirs();
        let mut buf = vec![0.0; r];
        Vector::from_iterator(
            z.nrows(),
            (0..z.nrows()).map(|i| {
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = u[(i, k)];
                }
                self.link.eval(&buf)
            }),
        )
    }

    /// `Var(f*)`: exact for polynomial links, quadrature per direction otherwise.
    pub fn variance(&self) -> f64 {
        if let Some(p) = self.link.as_polynomial() {
            let m = p.expectation();
            return (&p * &p).expectation() - m * m;
        }
        let q = Quadrature::gaussian_split(400);
        self.link
            .grouped()
            .unwrap_or_default()
            .iter()
            .map(|(_, a)| {
                let m = q.integrate(|x| a.eval(x));
                q.integrate(|x| a.eval(x).powi(2)) - m * m
            })
            .sum()
    }

    /// `E[f*]`.
    pub fn mean(&self) -> f64 {
        if let Some(p) = self.link.as_polynomial() {
            return p.expectation();
        }
        let q = Quadrature::gaussian_split(400);
        self.link.grouped().unwrap_or_default().iter().map(|(_, a)| q.integrate(|x| a.eval(x))).sum()
    }
}

/// Inputs `n × d` and noiseless labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Mat,
    pub labels: Vector,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Standard Gaussian `n × d` matrix; row `ν` comes from its own substream.
pub fn gaussian_inputs(n: usize, d: usize, seed: u64) -> Mat {
    let mut buf = vec![0.0; n * d];
    for (i, row) in buf.chunks_exact_mut(d.max(1)).enumerate().take(n) {
        let mut g = rng::substream(seed, Purpose::DataRow, i as u64);
        rng::fill_gaussian(&mut g, row);
    }
    Mat::from_row_slice(n, d, &buf)
}

pub fn sample_dataset(target: &MultiIndexTarget, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be at least 1".into()));
    }
    let inputs = gaussian_inputs(n, target.dim(), seed);
    let labels = target.labels(&inputs);
    Ok(Dataset { inputs, labels })
}

/// Dense symmetric tensor in `R^{r × … × r}` (row-major flattening).
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTensor {
    pub order: usize,
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl HermiteTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        HermiteTensor { order, dim, entries: vec![0.0; dim.pow(order as u32)] }
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.index(idx)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum()
    }

    /// Multi-index of flat position `pos`.
    pub fn unflatten(&self, mut pos: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order];
        for m in (0..self.order).rev() {
            idx[m] = pos % self.dim;
            pos /= self.dim;
        }
        idx
    }

    /// Maximum deviation between an entry and its transposes.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for pos in 0..self.entries.len() {
            let mut idx = self.unflatten(pos);
            idx.sort_unstable();
            worst = worst.max((self.entries[pos] - self.get(&idx)).abs());
        }
        worst
    }

    /// Mode-1 unfolding, `dim × dim^{order−1}`.
    pub fn unfold(&self) -> Mat {
        let cols = self.dim.pow(self.order.saturating_sub(1) as u32);
        Mat::from_row_slice(self.dim, cols, &self.entries)
    }

    /// Applies `m` (`q × dim`) along every mode, giving an order-`k` tensor
    /// of dimension `q`.
    pub fn multilinear(&self, m: &Mat) -> HermiteTensor {
        assert_eq!(m.ncols(), self.dim);
        let q = m.nrows();
        let mut shape = vec![self.dim; self.order];
        let mut data = self.entries.clone();
        for mode in 0..self.order {
            let outer: usize = shape[..mode].iter().product();
            let inner: usize = shape[mode + 1..].iter().product();
            let n_in = shape[mode];
            let mut next = vec![0.0; outer * q * inner];
            for o in 0..outer {
                for a in 0..q {
                    for b in 0..n_in {
                        let c = m[(a, b)];
                        if c == 0.0 {
                            continue;
                        }
                        let src = &data[(o * n_in + b) * inner..(o * n_in + b + 1) * inner];
                        let dst = &mut next[(o * q + a) * inner..(o * q + a + 1) * inner];
                        for (x, y) in dst.iter_mut().zip(src) {
                            *x += c * y;
                        }
                    }
                }
            }
            shape[mode] = q;
            data = next;
        }
        HermiteTensor { order: self.order, dim: q, entries: data }
    }
}

fn multiplicities(idx: &[usize], r: usize) -> Vec<u32> {
    let mut alpha = vec![0u32; r];
    for &i in idx {
        alpha[i] += 1;
    }
    alpha
}

/// `C_k(g*)` in teacher coordinates.
pub fn hermite_tensor(target: &MultiIndexTarget, k: usize) -> Result<HermiteTensor> {
    link_hermite_tensor(target.link(), k)
}

pub fn link_hermite_tensor(link: &Link, k: usize) -> Result<HermiteTensor> {
    let r = link.num_dirs();
    let mut t = HermiteTensor::zeros(k, r);
    let norm = factorial(k as u32).sqrt();
    if let Some(g) = link.as_polynomial() {
        let mut cache: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for pos in 0..t.entries.len() {
            let alpha = multiplicities(&t.unflatten(pos), r);
            let v = *cache.entry(alpha.clone()).or_insert_with(|| g.hermite_projection(&alpha) / norm);
            t.entries[pos] = v;
        }
        return Ok(t);
    }
    // Named sums of non-polynomial activations only populate the diagonal.
    for (dir, act) in link.grouped().unwrap_or_default() {
        let mu = hermite_coeffs(&act, k as u32)?;
        let idx = vec![dir; k];
        let pos = t.index(&idx);
        t.entries[pos] = mu.coeffs[k] / norm;
    }
    Ok(t)
}

/// Smallest `k ≥ 1` with `‖C_k(g*)‖_F > 1e−10`.
pub fn leap_index(target: &MultiIndexTarget) -> Result<usize> {
    link_leap_index(target.link())
}

pub fn link_leap_index(link: &Link) -> Result<usize> {
    let max_order = match link.as_polynomial() {
        Some(p) => {
            if p.degree() == 0 {
                return Err(Error::ConstantTarget);
            }
            p.degree() as usize
        }
        None => 16,
    };
    for k in 1..=max_order {
        if link_hermite_tensor(link, k)?.frobenius_norm() > TENSOR_TOL {
            return Ok(k);
        }
    }
    Err(Error::ConstantTarget)
}

/// Higher-order SVD of a symmetric tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Hosvd {
    /// Orthonormal singular vectors in `R^r`.
    pub vectors: Vec<Vec<f64>>,
    /// `C ×_1 Uᵀ ⋯ ×_k Uᵀ`, dimension `rank`.
    pub core: HermiteTensor,
    pub rank: usize,
}

impl Hosvd {
    pub fn reconstruct(&self, dim: usize) -> HermiteTensor {
        let u = Mat::from_fn(dim, self.rank, |i, j| self.vectors[j][i]);
        if self.rank == 0 {
            let mut t = HermiteTensor::zeros(self.core.order, dim);
            if self.core.order == 0 {
                t.entries[0] = self.core.entries[0];
            }
            return t;
        }
        self.core.multilinear(&u)
    }

    pub fn subspace(&self, dim: usize) -> Subspace {
        Subspace::from_orthonormal(dim, self.vectors.clone())
    }
}

/// Rank cut relative to the largest singular value of the unfolding.
pub const HOSVD_CUT: f64 = 1e-10;

pub fn hosvd(c: &HermiteTensor) -> Hosvd {
    let r = c.dim;
    if c.order == 0 || c.frobenius_norm() == 0.0 {
        return Hosvd { vectors: Vec::new(), core: HermiteTensor { order: c.order, dim: 0, entries: if c.order == 0 { c.entries.clone() } else { Vec::new() } }, rank: 0 };
    }
    let svd = c.unfold().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut vectors = Vec::new();
    for j in order {
        if svd.singular_values[j] > HOSVD_CUT * smax {
            let mut v: Vec<f64> = (0..r).map(|i| u[(i, j)]).collect();
            let lead = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            vectors.push(v);
        }
    }
    let rank = vectors.len();
    let ut = Mat::from_fn(rank, r, |j, i| vectors[j][i]);
    let core = c.multilinear(&ut);
    Hosvd { vectors, core, rank }
}

/// Monte Carlo `E[Var(f* | P_U u)]` in teacher coordinates, with standard
/// error. Each outer draw fixes the `U` component and estimates the
/// conditional variance unbiasedly from `inner` draws of the complement.
pub fn conditional_variance(target: &MultiIndexTarget, u: &Subspace, mc_samples: usize, seed: u64) -> (f64, f64) {
    link_conditional_variance(target.link(), u, mc_samples, 32, seed)
}

pub fn link_conditional_variance(link: &Link, u: &Subspace, outer: usize, inner: usize, seed: u64) -> (f64, f64) {
    let r = link.num_dirs();
    let basis = u.basis();
    let comp = u.complement();
    if comp.is_empty() {
        return (0.0, 0.0);
    }
    let mut g = rng::substream(seed, Purpose::MonteCarlo, 0);
    let mut point = vec![0.0; r];
    let mut vals = vec![0.0; inner];
    let mut est = Vec::with_capacity(outer);
    let mut lam = vec![0.0; basis.len()];
    let mut eta = vec![0.0; comp.len()];
    for _ in 0..outer {
        rng::fill_gaussian(&mut g, &mut lam);
        for v in vals.iter_mut() {
            rng::fill_gaussian(&mut g, &mut eta);
            for (i, p) in point.iter_mut().enumerate() {
                *p = basis.iter().zip(&lam).map(|(b, l)| b[i] * l).sum::<f64>()
                    + comp.iter().zip(&eta).map(|(q, e)| q[i] * e).sum::<f64>();
            }
            *v = link.eval(&point);
        }
        est.push(stats::variance(&vals));
    }
    (stats::mean(&est), stats::std_error(&est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly_target(s: &str, d: usize) -> MultiIndexTarget {
        MultiIndexTarget::aligned(Link::Polynomial(s.parse().unwrap()), d).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_labels_exact() {
        let t = poly_target("z1 + z1*z2", 8);
        let a = sample_dataset(&t, 50, 9).unwrap();
        let b = sample_dataset(&t, 50, 9).unwrap();
        assert_eq!(a, b);
        for i in 0..50 {
            let z1 = a.inputs[(i, 0)];
            let z2 = a.inputs[(i, 1)];
            assert_relative_eq!(a.labels[i], z1 + z1 * z2, epsilon = 1e-14);
        }
        // A prefix of a larger dataset is the smaller dataset.
        let c = sample_dataset(&t, 80, 9).unwrap();
        assert_eq!(c.inputs.rows(0, 50), a.inputs);
    }

    #[test]
    fn dimension_errors() {
        let link = Link::Polynomial("z1 + z2*z3".parse().unwrap());
        assert!(matches!(MultiIndexTarget::aligned(link, 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn first_and_second_order_tensors() {
        let t = poly_target("z1 + z1*z2", 4);
        let c1 = hermite_tensor(&t, 1).unwrap();
        assert_eq!(c1.entries, vec![1.0, 0.0]);
        let z = poly_target("He2(z1) + He2(z2)", 4);
        assert_eq!(hermite_tensor(&z, 1).unwrap().frobenius_norm(), 0.0);
        let c2 = hermite_tensor(&poly_target("z1*z2", 4), 2).unwrap();
        assert_eq!(c2.get(&[0, 0]), 0.0);
        assert_eq!(c2.get(&[1, 1]), 0.0);
        assert_relative_eq!(c2.get(&[0, 1]), core::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(c2.symmetry_defect(), 0.0);
    }

    #[test]
    fn parseval_identity() {
        for s in ["z1 + z1*z2", "He3(z1)*z2 + z3^2 - 0.5", "(z1 + 2*z2)^3"] {
            let t = poly_target(s, 4);
            let p = t.link().as_polynomial().unwrap();
            let total: f64 = (0..=p.degree() as usize).map(|k| hermite_tensor(&t, k).unwrap().frobenius_norm().powi(2)).sum();
            assert_relative_eq!(total, (&p * &p).expectation(), epsilon = 1e-8, max_relative = 1e-12);
        }
    }

    #[test]
    fn leap_indices() {
        assert_eq!(leap_index(&poly_target("He2(z1) + He2(z2)", 4)).unwrap(), 2);
        assert_eq!(leap_index(&poly_target("z1 + z2*z3", 4)).unwrap(), 1);
        assert_eq!(leap_index(&poly_target("He4(z1)", 4)).unwrap(), 4);
        assert!(matches!(leap_index(&poly_target("3", 4)), Err(Error::ConstantTarget)));
        let named = Link::NamedSum {
            num_dirs: 2,
            components: vec![
                LinkComponent { weight: 1.0, direction: 0, activation: Activation::Relu },
                LinkComponent { weight: 1.0, direction: 1, activation: Activation::Hermite(2) },
            ],
        };
        assert_eq!(link_leap_index(&named).unwrap(), 1);
    }

    #[test]
    fn hosvd_examples() {
        let h = hosvd(&hermite_tensor(&poly_target("He2(z1) + He2(z2)", 4), 2).unwrap());
        assert_eq!(h.rank, 2);
        let h = hosvd(&hermite_tensor(&poly_target("z1", 4), 1).unwrap());
        assert_eq!(h.rank, 1);
        assert_eq!(h.vectors[0], vec![1.0]);
        let h = hosvd(&hermite_tensor(&poly_target("He2(z1) + 0*z2", 4), 2).unwrap());
        assert_eq!(h.rank, 1);
        assert_relative_eq!(h.vectors[0][0], 1.0, epsilon = 1e-14);
        let zero = HermiteTensor::zeros(3, 2);
        assert_eq!(hosvd(&zero).rank, 0);
    }

    #[test]
    fn named_links_convert() {
        let link = Link::NamedSum {
            num_dirs: 2,
            components: vec![
                LinkComponent { weight: 1.0, direction: 0, activation: Activation::Polynomial(vec![0.0, 1.0, -1.0]) },
                LinkComponent { weight: 2.0, direction: 1, activation: Activation::Identity },
            ],
        };
        let p = link.as_polynomial().unwrap();
        assert_eq!(p, "z1 - z1^2 + 2*z2".parse().unwrap());
        let erf = Link::NamedSum {
            num_dirs: 1,
            components: vec![LinkComponent { weight: 1.0, direction: 0, activation: Activation::Erf }],
        };
        assert!(erf.as_polynomial().is_none());
        let err = |deg: u32| (erf.to_polynomial_approx(deg).unwrap().eval(&[0.3]) - libm::erf(0.3)).abs();
        assert!(err(9) < 0.02);
        assert!(err(21) < err(9));
        assert!(matches!(erf.require_polynomial("staircase"), Err(Error::NonPolynomialLink(_))));
    }

    #[test]
    fn variance_and_mean() {
        assert_relative_eq!(poly_target("z1 + z2*z3", 4).variance(), 2.0, epsilon = 1e-14);
        let relu = MultiIndexTarget::aligned(
            Link::NamedSum {
                num_dirs: 1,
                components: vec![LinkComponent { weight: 1.0, direction: 0, activation: Activation::Relu }],
            },
            3,
        )
        .unwrap();
        let pi = core::f64::consts::PI;
        assert_relative_eq!(relu.mean(), 1.0 / (2.0 * pi).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(relu.variance(), 0.5 - 1.0 / (2.0 * pi), epsilon = 1e-12);
    }

    #[test]
    fn conditional_variance_examples() {
        let t = poly_target("z1 + z1*z2", 4);
        let (v, _) = conditional_variance(&t, &Subspace::full(2), 100, 1);
        assert_eq!(v, 0.0);
        let t = poly_target("z1 + z2*z3", 4);
        let (v, se) = conditional_variance(&t, &Subspace::span(3, &[vec![1.0, 0.0, 0.0]], 1e-10), 4000, 2);
        assert!((v - 1.0).abs() < 4.0 * se.max(1e-3), "{v} ± {se}");
        let t = poly_target("z1", 4);
        let (v, se) = conditional_variance(&t, &Subspace::zero(1), 4000, 3);
        assert!((v - 1.0).abs() < 4.0 * se.max(1e-3), "{v} ± {se}");
    }
}

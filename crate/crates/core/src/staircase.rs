//! Subspace conditioning and the staircase sequence of learnable subspaces.
//!
//! For a polynomial link `g` on `R^r` and a subspace `U` with orthonormal
//! basis `B` and complement basis `Q`, write `u = Bλ + Qη`. The conditional
//! first Hermite coefficient is `μ_U(λ) = Q E_η[∇_η g(Bλ + Qη)]`, a vector of
//! polynomials in `λ`. Its span over all `λ` equals the span of the
//! coefficient vectors of its `λ`-monomials, which is what the staircase
//! step adds:
//!
//! ```text
//! U_0 = {0},   U_{t+1} = U_t ⊕ span{ coefficient vectors of μ_{U_t} }.
//! ```
//!
//! All Gaussian expectations are exact (Wick moments); floating point only
//! enters through the rotation and Gram–Schmidt.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::{dot, gram_schmidt_residual, norm, orthonormal_complement};
use crate::polynomial::MultivariatePolynomial;
use crate::Mat;

/// Gram–Schmidt drop tolerance for span extraction.
pub const SPAN_TOL: f64 = 1e-10;
/// Default horizon of [`staircase_sequence`].
pub const DEFAULT_T_MAX: usize = 8;

/// Orthonormal basis of a subspace of `R^ambient`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| {
                let mut e = vec![0.0; ambient];
                e[i] = 1.0;
                e
            })
            .collect();
        Subspace { ambient, basis }
    }

    /// Span of arbitrary vectors; a vector is kept when its component
    /// orthogonal to the ones already kept exceeds `tol` relative to its norm.
    pub fn span(ambient: usize, vectors: &[Vec<f64>], tol: f64) -> Self {
        Self::zero(ambient).extended(vectors, tol)
    }

    /// Wraps a basis that is already orthonormal.
    pub fn from_orthonormal(ambient: usize, basis: Vec<Vec<f64>>) -> Self {
        debug_assert!(basis.iter().all(|b| b.len() == ambient));
        Subspace { ambient, basis }
    }

    /// `self ⊕ span(candidates)`, keeping the current basis as a prefix.
    pub fn extended(&self, candidates: &[Vec<f64>], tol: f64) -> Self {
        let mut basis = self.basis.clone();
        for c in candidates {
            if basis.len() == self.ambient {
                break;
            }
            if let Some(r) = gram_schmidt_residual(&basis, c, tol) {
                basis.push(r);
            }
        }
        Subspace { ambient: self.ambient, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Vec<Vec<f64>> {
        orthonormal_complement(&self.basis, self.ambient)
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient];
        for b in &self.basis {
            let c = dot(b, v);
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        out
    }

    /// Whether `v` lies in the subspace up to `tol` relative to `‖v‖`.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        let p = self.project(v);
        let resid: f64 = p.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        resid <= tol * norm(v).max(f64::MIN_POSITIVE)
    }

    pub fn same_as(&self, other: &Self, tol: f64) -> bool {
        self.ambient == other.ambient
            && self.dim() == other.dim()
            && other.basis.iter().all(|b| self.contains(b, tol))
    }

    pub fn is_subspace_of(&self, other: &Self, tol: f64) -> bool {
        self.basis.iter().all(|b| other.contains(b, tol))
    }

    /// Orthogonal projector `Σ b bᵀ`.
    pub fn projector(&self) -> Mat {
        let mut p = Mat::zeros(self.ambient, self.ambient);
        for b in &self.basis {
            for i in 0..self.ambient {
                for j in 0..self.ambient {
                    p[(i, j)] += b[i] * b[j];
                }
            }
        }
        p
    }

    /// Image under the linear map `rot` (`ambient × ambient`, orthogonal).
    pub fn rotated(&self, rot: &Mat) -> Self {
        let basis = self
            .basis
            .iter()
            .map(|b| (0..self.ambient).map(|i| (0..self.ambient).map(|j| rot[(i, j)] * b[j]).sum()).collect())
            .collect();
        Subspace { ambient: self.ambient, basis }
    }
}

/// Vector of polynomials in the `dim(U)` parameters `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVectorPolynomial {
    pub entries: Vec<MultivariatePolynomial>,
}

impl ParamVectorPolynomial {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|p| p.is_zero())
    }

    pub fn eval(&self, lambda: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|p| p.eval(lambda)).collect()
    }

    /// One `r`-vector per `λ`-monomial that appears in any entry.
    pub fn coefficient_vectors(&self) -> Vec<Vec<f64>> {
        let r = self.entries.len();
        let mut by_monomial: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
        for (i, p) in self.entries.iter().enumerate() {
            for (e, c) in p.terms() {
                by_monomial.entry(e.clone()).or_insert_with(|| vec![0.0; r])[i] += c;
            }
        }
        by_monomial.into_values().collect()
    }
}

/// Coordinates `u = Bλ + Qη`: the substitution matrix and the split point.
fn rotated_link(g: &MultivariatePolynomial, u: &Subspace) -> (MultivariatePolynomial, Vec<Vec<f64>>, usize) {
    let r = g.num_vars();
    assert_eq!(u.ambient(), r, "subspace must live in the link's coordinate space");
    let comp = u.complement();
    let k = u.dim();
    let m: Vec<Vec<f64>> = (0..r)
        .map(|i| u.basis().iter().chain(comp.iter()).map(|v| v[i]).collect())
        .collect();
    let h = g.substitute_linear(&m, r).pruned(1e-14);
    (h, comp, k)
}

fn eta_mask(r: usize, k: usize) -> Vec<bool> {
    (0..r).map(|i| i >= k).collect()
}

/// `μ_U(λ) = Q E_η[∇_η g(Bλ + Qη)]`, in teacher coordinates.
pub fn conditional_first_hermite(g: &MultivariatePolynomial, u: &Subspace) -> ParamVectorPolynomial {
    let r = g.num_vars();
    let (h, comp, k) = rotated_link(g, u);
    let mask = eta_mask(r, k);
    let grads: Vec<MultivariatePolynomial> = (k..r).map(|b| h.partial(b).partial_expectation(&mask)).collect();
    let entries = (0..r)
        .map(|i| {
            let mut acc = MultivariatePolynomial::zero(k);
            for (q, gb) in comp.iter().zip(&grads) {
                if q[i] != 0.0 {
                    acc = &acc + &gb.scale(q[i]);
                }
            }
            acc.pruned(1e-12)
        })
        .collect();
    ParamVectorPolynomial { entries }
}

/// Coefficient scale of `g`, used to turn relative tolerances absolute.
fn scale_of(g: &MultivariatePolynomial) -> f64 {
    g.terms().fold(0.0f64, |a, (_, c)| a.max(c.abs())).max(f64::MIN_POSITIVE)
}

fn staircase_step(g: &MultivariatePolynomial, u: &Subspace) -> Subspace {
    let floor = SPAN_TOL * scale_of(g);
    let cands: Vec<Vec<f64>> = conditional_first_hermite(g, u)
        .coefficient_vectors()
        .into_iter()
        .filter(|v| norm(v) > floor)
        .collect();
    u.extended(&cands, SPAN_TOL)
}

/// `U_0, …, U_{t_max}`; entries after stabilization repeat the fixed point.
pub fn staircase_sequence(g: &MultivariatePolynomial, t_max: usize) -> Vec<Subspace> {
    let mut seq = vec![Subspace::zero(g.num_vars())];
    for _ in 0..t_max {
        let last = seq.last().expect("sequence starts non-empty");
        let next = staircase_step(g, last);
        let stable = next.dim() == last.dim();
        seq.push(next);
        if stable {
            while seq.len() < t_max + 1 {
                let copy = seq.last().unwrap().clone();
                seq.push(copy);
            }
            break;
        }
    }
    seq
}

/// Span of the directions `g` depends on (coefficient vectors of `∇g`).
pub fn relevant_subspace(g: &MultivariatePolynomial) -> Subspace {
    let r = g.num_vars();
    let grad = ParamVectorPolynomial { entries: g.gradient() };
    let floor = SPAN_TOL * scale_of(g);
    let cands: Vec<Vec<f64>> = grad.coefficient_vectors().into_iter().filter(|v| norm(v) > floor).collect();
    Subspace::span(r, &cands, SPAN_TOL)
}

pub fn is_staircase_learnable(g: &MultivariatePolynomial) -> bool {
    let seq = staircase_sequence(g, g.num_vars() + 1);
    seq.last().unwrap().same_as(&relevant_subspace(g), 1e-8)
}

/// Number of new directions one staircase step adds from `U`.
pub fn multi_direction_step_check(g: &MultivariatePolynomial, u: &Subspace) -> usize {
    staircase_step(g, u).dim() - u.dim()
}

/// Exact `E[Var(g(u) | P_U u)]`.
pub fn conditional_variance_exact(g: &MultivariatePolynomial, u: &Subspace) -> f64 {
    let r = g.num_vars();
    let (h, _, k) = rotated_link(g, u);
    let h0 = h.partial_expectation(&eta_mask(r, k));
    ((&h * &h).expectation() - (&h0 * &h0).expectation()).max(0.0)
}

/// Exact mass of `g` that is not conditionally linear given `P_U u`:
/// `E[h²] − E[(E_η h)²] − Σ_b E[(E_η ∂_b h)²]`.
pub fn conditional_nonlinear_mass(g: &MultivariatePolynomial, u: &Subspace) -> f64 {
    let r = g.num_vars();
    let (h, _, k) = rotated_link(g, u);
    let mask = eta_mask(r, k);
    let h0 = h.partial_expectation(&mask);
    let mut mass = (&h * &h).expectation() - (&h0 * &h0).expectation();
    for b in k..r {
        let h1 = h.partial(b).partial_expectation(&mask);
        mass -= (&h1 * &h1).expectation();
    }
    mass.max(0.0)
}

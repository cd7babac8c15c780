//! Feature-learning diagnostics: teacher overlaps, spike+bulk split of the
//! first gradient, norm growth after one step, learned-subspace recovery,
//! the second-step orientation prediction and test error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::hermite::{hermite_coeffs, normal_cdf, Activation, Quadrature};
use crate::linalg::{gemm, op_norm};
use crate::network::TwoLayerNet;
use crate::rng::{self, derive_seed, Purpose};
use crate::staircase::{Subspace, SPAN_TOL};
use crate::stats;
use crate::target::{gaussian_inputs, link_hermite_tensor, Dataset, Link, MultiIndexTarget};
use crate::{Error, Mat, MultivariatePolynomial, Result, Vector};

/// Overlap statistics of one row `w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronAlignment {
    /// `π_i = W* w_i`.
    pub overlap: Vec<f64>,
    /// `⟨w_i, w_k*⟩ / ‖w_i‖`, `None` for a zero row.
    pub cosines: Option<Vec<f64>>,
    /// `‖π_i‖² / ‖w_i‖²`, `None` for a zero row.
    pub ratio: Option<f64>,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    pub neurons: Vec<NeuronAlignment>,
}

impl AlignmentReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.neurons.iter().filter_map(|n| n.ratio).collect()
    }

    pub fn median_ratio(&self) -> f64 {
        stats::median(&self.ratios())
    }
}

/// Overlaps of every row of `w` (weights or gradient) with the teacher.
pub fn alignment_report(w: &Mat, target: &MultiIndexTarget) -> Result<AlignmentReport> {
    if w.ncols() != target.dim() {
        return Err(Error::Dimension(format!("matrix has {} columns, target dimension is {}", w.ncols(), target.dim())));
    }
    let overlaps = gemm(w, false, target.teacher(), true);
    let neurons = (0..w.nrows())
        .map(|i| {
            let norm = w.row(i).norm();
            let overlap: Vec<f64> = overlaps.row(i).iter().copied().collect();
            let (cosines, ratio) = if norm > 0.0 {
                let cos: Vec<f64> = overlap.iter().map(|o| (o / norm).clamp(-1.0, 1.0)).collect();
                let r = (overlap.iter().map(|o| o * o).sum::<f64>() / (norm * norm)).min(1.0);
                (Some(cos), Some(r))
            } else {
                (None, None)
            };
            NeuronAlignment { overlap, cosines, ratio, norm }
        })
        .collect();
    Ok(AlignmentReport { neurons })
}

/// Unit vector of `W* m_i` in teacher coordinates (the projected row
/// `m_i Π*` expressed in the basis `w_k*`), `None` when the projection is zero.
pub fn projected_directions(m: &Mat, target: &MultiIndexTarget) -> Vec<Option<Vec<f64>>> {
    let overlaps = gemm(m, false, target.teacher(), true);
    (0..m.nrows())
        .map(|i| {
            let row: Vec<f64> = overlaps.row(i).iter().copied().collect();
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            (n > 0.0).then(|| row.iter().map(|x| x / n).collect())
        })
        .collect()
}

/// `g = −G = uvᵀ + Δ` with `u = (μ₁/√p) a`, `v = (1/n) Σ y_ν z_ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeBulk {
    pub u: Vector,
    pub v: Vector,
    pub delta: Mat,
}

impl SpikeBulk {
    /// `uvᵀ + Δ`.
    pub fn reconstruct(&self) -> Mat {
        &self.u * self.v.transpose() + &self.delta
    }

    /// `‖Δ‖_op`.
    pub fn delta_op_norm(&self) -> f64 {
        op_norm(&self.delta)
    }

    /// `max_j sup_{u ∈ V*, ‖u‖ = 1} |⟨Δ_j, u⟩| = max_j ‖W* Δ_j‖`.
    pub fn delta_teacher_overlap(&self, target: &MultiIndexTarget) -> f64 {
        let o = gemm(&self.delta, false, target.teacher(), true);
        (0..o.nrows()).map(|j| o.row(j).norm()).fold(0.0, f64::max)
    }
}

/// Spike+bulk split of a first-step gradient `G` (descent-negated, as
/// returned by [`crate::network::gradient_matrix`]); the decomposition is of
/// the negative gradient `−G`.
pub fn spike_bulk(g: &Mat, a: &Vector, batch: &Dataset, mu1: f64) -> Result<SpikeBulk> {
    if g.nrows() != a.len() || g.ncols() != batch.inputs.ncols() {
        return Err(Error::Dimension(format!(
            "gradient is {}×{}, second layer has {} entries, inputs have {} columns",
            g.nrows(),
            g.ncols(),
            a.len(),
            batch.inputs.ncols()
        )));
    }
    let p = a.len() as f64;
    let u = a * (mu1 / p.sqrt());
    let v = batch.inputs.tr_mul(&batch.labels) / batch.len() as f64;
    let delta = -g - &u * v.transpose();
    Ok(SpikeBulk { u, v, delta })
}

/// Terms of the first-step norm prediction
/// `‖w_i¹‖² ≈ 1 + η a_i L/√p + η² a_i² K` for a neuron with zero teacher
/// overlap at initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConstant {
    /// `K = (1/p)[(n−1)/n ‖m‖² + s₂/n]`, `m = E[z σ'(g) f]`,
    /// `s₂ = E[‖z‖² σ'(g)² f²]`.
    pub quadratic: f64,
    /// `L = 2 E[g σ'(g)] E[f]`.
    pub linear: f64,
    pub m_sq: f64,
    pub s2: f64,
}

impl NormConstant {
    pub fn predict(&self, eta: f64, a: f64, p: usize) -> f64 {
        1.0 + eta * a * self.linear / (p as f64).sqrt() + eta * eta * a * a * self.quadratic
    }
}

/// Monte Carlo estimate of [`NormConstant`]: draws the teacher coordinates
/// `x ∈ R^r` and the neuron's own coordinate `g` independently, and
/// accounts for the remaining `d − 1 − r` coordinates analytically.
pub fn norm_constant_mc(student: &Activation, target: &MultiIndexTarget, n: usize, p: usize, samples: usize, seed: u64) -> Result<NormConstant> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one Monte Carlo sample".into()));
    }
    let r = target.num_dirs();
    let d = target.dim();
    let link = target.link();
    let mut g_rng = rng::substream(seed, Purpose::MonteCarlo, 0);
    let mut x = vec![0.0; r];
    let mut m = vec![0.0; r + 1];
    let (mut s_teacher, mut e_sp2, mut e_f2, mut e_f, mut e_gsp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        rng::fill_gaussian(&mut g_rng, &mut x);
        let g = rng::gaussian(&mut g_rng);
        let f = link.eval(&x);
        let sp = student.deriv(g);
        for k in 0..r {
            m[k] += x[k] * sp * f;
        }
        m[r] += g * sp * f;
        let xx: f64 = x.iter().map(|v| v * v).sum();
        s_teacher += (xx + g * g) * sp * sp * f * f;
        e_sp2 += sp * sp;
        e_f2 += f * f;
        e_f += f;
        e_gsp += g * sp;
    }
    let s = samples as f64;
    let m_sq = m.iter().map(|v| (v / s) * (v / s)).sum::<f64>();
    let rest = d.saturating_sub(1 + r) as f64;
    let s2 = s_teacher / s + rest * (e_sp2 / s) * (e_f2 / s);
    let nf = n as f64;
    let quadratic = ((nf - 1.0) / nf * m_sq + s2 / nf) / p as f64;
    Ok(NormConstant { quadratic, linear: 2.0 * (e_gsp / s) * (e_f / s), m_sq, s2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub measured: Vec<f64>,
    pub predicted: Vec<f64>,
    /// `|measured − predicted| / predicted` per neuron.
    pub relative_deviation: Vec<f64>,
}

impl NormReport {
    pub fn median_deviation(&self) -> f64 {
        stats::median(&self.relative_deviation)
    }
}

/// Compares `‖w_i¹‖²` against the norm prediction for every neuron.
pub fn norm_concentration_check(w1: &Mat, a: &Vector, eta: f64, constant: &NormConstant) -> Result<NormReport> {
    if w1.nrows() != a.len() {
        return Err(Error::Dimension(format!("{} rows but {} second-layer weights", w1.nrows(), a.len())));
    }
    let p = a.len();
    let measured: Vec<f64> = (0..p).map(|i| w1.row(i).norm_squared()).collect();
    let predicted: Vec<f64> = a.iter().map(|&ai| constant.predict(eta, ai, p)).collect();
    let relative_deviation = measured.iter().zip(&predicted).map(|(m, q)| (m - q).abs() / q).collect();
    Ok(NormReport { measured, predicted, relative_deviation })
}

/// Threshold used to decide that a neuron has a non-trivial teacher overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// `τ(d) = c log(d) / √d`.
    LogScaled { c: f64 },
    /// `τ(d) = c √(log d) / √d`; a random direction sits at `1/√d`.
    SqrtLogScaled { c: f64 },
    Fixed(f64),
}

impl ThresholdRule {
    pub fn value(&self, d: usize) -> f64 {
        match *self {
            ThresholdRule::LogScaled { c } => c * (d as f64).ln() / (d as f64).sqrt(),
            ThresholdRule::SqrtLogScaled { c } => c * ((d as f64).ln() / d as f64).sqrt(),
            ThresholdRule::Fixed(t) => t,
        }
    }
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::SqrtLogScaled { c: 0.7 }
    }
}

/// Span of the overlaps `π_i/‖w_i‖` exceeding `τ(d)`, as a subspace of `R^d`.
/// The stacked overlaps are cut at RMS singular value `s_k/√m > τ(d)`, `m`
/// counting every non-zero row, so neither the width nor a handful of
/// selected noise rows can promote a direction.
pub fn recover_learned_subspace(w: &Mat, target: &MultiIndexTarget, rule: ThresholdRule) -> Result<Subspace> {
    let d = target.dim();
    let r = target.num_dirs();
    let tau = rule.value(d);
    let report = alignment_report(w, target)?;
    let rows: Vec<Vec<f64>> = report
        .neurons
        .iter()
        .filter(|n| n.norm > 0.0)
        .map(|n| n.overlap.iter().map(|o| o / n.norm).collect::<Vec<f64>>())
        .filter(|o| o.iter().map(|x| x * x).sum::<f64>().sqrt() > tau)
        .collect();
    if rows.is_empty() {
        return Ok(Subspace::zero(d));
    }
    let stack = Mat::from_fn(rows.len(), r, |i, j| rows[i][j]);
    let scale = (report.neurons.iter().filter(|n| n.norm > 0.0).count() as f64).sqrt();
    let svd = stack.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let teacher = target.teacher();
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s / scale > tau {
            let dir = vt.row(k) * teacher;
            basis.push(dir.iter().copied().collect::<Vec<f64>>());
        }
    }
    Ok(Subspace::span(d, &basis, SPAN_TOL))
}

/// Monte Carlo test error `E[(f̂ − f*)²]` on `n_test` fresh inputs, with its
/// standard error.
pub fn generalization_error(predictor: &dyn Fn(&Mat) -> Result<Vector>, target: &MultiIndexTarget, n_test: usize, seed: u64) -> Result<(f64, f64)> {
    if n_test < 2 {
        return Err(Error::InvalidArgument("need at least two test samples".into()));
    }
    let z = gaussian_inputs(n_test, target.dim(), derive_seed(seed, Purpose::Test, 0));
    let y = target.labels(&z);
    let pred = predictor(&z)?;
    if pred.len() != n_test {
        return Err(Error::Dimension(format!("predictor returned {} values for {n_test} inputs", pred.len())));
    }
    let sq: Vec<f64> = pred.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).collect();
    Ok((stats::mean(&sq), stats::std_error(&sq)))
}

/// [`generalization_error`] divided by `Var(f*)`.
pub fn normalized_generalization_error(predictor: &dyn Fn(&Mat) -> Result<Vector>, target: &MultiIndexTarget, n_test: usize, seed: u64) -> Result<(f64, f64)> {
    let var = target.variance();
    if var <= 0.0 {
        return Err(Error::ConstantTarget);
    }
    let (m, se) = generalization_error(predictor, target, n_test, seed)?;
    Ok((m / var, se / var))
}

/// Test error of the network's own forward pass.
pub fn network_test_error(net: &TwoLayerNet, target: &MultiIndexTarget, n_test: usize, seed: u64) -> Result<(f64, f64)> {
    generalization_error(&|z| net.forward(z), target, n_test, seed)
}

/// Whether the two-direction link is `z1 − z1² + z2 + z2²` up to a constant.
fn is_worked_case_link(link: &Link) -> bool {
    let Some(poly) = link.as_polynomial() else {
        return false;
    };
    if poly.num_vars() != 2 {
        return false;
    }
    let reference: MultivariatePolynomial = match "z1 - z1^2 + z2 + z2^2".parse() {
        Ok(p) => p,
        Err(_) => return false,
    };
    let diff = (&poly - &reference.with_num_vars(2)).pruned(1e-12);
    let constant_only = diff.terms().all(|(k, _)| k.iter().all(|&e| e == 0));
    constant_only
}

/// Orientation of the second-step negative gradient in teacher coordinates,
/// assuming the first step moved each neuron to `±(shift/‖v*‖)·v*` inside the
/// teacher plane with unit orthogonal norm: `∝ a E[y Φ(a·shift·⟨x, v̂*⟩) x]`
/// for a relu student, evaluated by tensor Gauss–Hermite quadrature.
/// Returned as a unit axis oriented along `v*`.
pub fn second_step_orientation_quadrature(link: &Link, a_sign: f64, shift: f64) -> Result<Vec<f64>> {
    let r = link.num_dirs();
    if r != 2 {
        return Err(Error::NoClosedForm(format!("second-step orientation needs a two-direction link, got {r}")));
    }
    let c1 = link_hermite_tensor(link, 1)?;
    let vstar = [c1.get(&[0]), c1.get(&[1])];
    let vn = (vstar[0] * vstar[0] + vstar[1] * vstar[1]).sqrt();
    if vn < 1e-12 {
        return Err(Error::ZeroSpike);
    }
    let vhat = [vstar[0] / vn, vstar[1] / vn];
    let q = Quadrature::gauss_hermite(64);
    let sgn = a_sign.signum();
    let mut acc = [0.0; 2];
    for (x1, w1) in q.nodes.iter().zip(&q.weights) {
        for (x2, w2) in q.nodes.iter().zip(&q.weights) {
            let x = [*x1, *x2];
            let s = vhat[0] * x1 + vhat[1] * x2;
            let common = w1 * w2 * link.eval(&x) * normal_cdf(sgn * shift * s);
            acc[0] += common * x1;
            acc[1] += common * x2;
        }
    }
    orient_unit(&[sgn * acc[0], sgn * acc[1]], &vstar)
}

fn orient_unit(v: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-14 {
        return Err(Error::Numerical("second-step gradient vanishes in the teacher plane".into()));
    }
    let s = if v.iter().zip(reference).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Ok(v.iter().map(|x| s * x / n).collect())
}

/// Normalized step of the worked case; the network step is `η = 2p`.
pub const WORKED_CASE_ETA: f64 = 2.0;

/// Predicted in-plane orientation of the second gradient step for neurons
/// with second-layer sign `a_sign`, from the label term `E[y μ_{1,κ} z]`
/// with unit orthogonal norm.
///
/// `eta` is the width-normalized step (network step `η·p`), so with
/// `a_i = ±1/√p` the first step moves each neuron by `±η μ₁ v*`. The relu
/// student at `eta = 2` on the link `z1 − z1² + z2 + z2²` is the worked case,
/// for which the analytic result `normalize(1 ∓ 2/√(3π), 1 ± 2/√(3π))` is
/// returned. Other polynomial two-direction links use
/// [`second_step_orientation_quadrature`] with shift `η μ₁ ‖v*‖`.
pub fn predicted_second_step_orientation(student: &Activation, a_sign: f64, eta: f64, target: &MultiIndexTarget) -> Result<Vec<f64>> {
    if !matches!(student, Activation::Relu) {
        return Err(Error::NoClosedForm(format!("second-step orientation only available for a relu student, got {}", student.name())));
    }
    if a_sign == 0.0 || !a_sign.is_finite() {
        return Err(Error::InvalidArgument("a_sign must be ±1".into()));
    }
    let link = target.link();
    if link.as_polynomial().is_none() || link.num_dirs() != 2 {
        return Err(Error::NoClosedForm("second-step orientation needs a polynomial two-direction link".into()));
    }
    if is_worked_case_link(link) && (eta - WORKED_CASE_ETA).abs() < 1e-12 {
        let c = 2.0 / (3.0 * core::f64::consts::PI).sqrt();
        let v = if a_sign > 0.0 { [1.0 - c, 1.0 + c] } else { [1.0 + c, 1.0 - c] };
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        return Ok(vec![v[0] / n, v[1] / n]);
    }
    let c1 = link_hermite_tensor(link, 1)?;
    let vn = (c1.get(&[0]).powi(2) + c1.get(&[1]).powi(2)).sqrt();
    let mu1 = hermite_coeffs(student, 1)?.coeffs[1];
    second_step_orientation_quadrature(link, a_sign, eta * mu1 * vn)
}

/// Network step for a width-normalized step: `η·p`.
pub fn network_eta(normalized_eta: f64, p: usize) -> f64 {
    normalized_eta * p as f64
}

/// Mean projected-gradient axis of the neurons whose second-layer weight has
/// sign `a_sign`, in teacher coordinates (unit, oriented along `reference`).
pub fn mean_projected_orientation(g: &Mat, a: &Vector, target: &MultiIndexTarget, a_sign: f64, reference: &[f64]) -> Result<Vec<f64>> {
    let dirs = projected_directions(g, target);
    let mut acc = vec![0.0; target.num_dirs()];
    let mut count = 0;
    for (i, d) in dirs.iter().enumerate() {
        if a[i] * a_sign > 0.0 {
            if let Some(d) = d {
                let d = orient_unit(d, reference)?;
                for (x, y) in acc.iter_mut().zip(&d) {
                    *x += y;
                }
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument("no neuron with the requested second-layer sign".into()));
    }
    orient_unit(&acc, reference)
}

/// `1 − |⟨a, b⟩|` for unit vectors.
pub fn axis_cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs()
}

//! Conditional Gaussian equivalence: a Gaussian surrogate for the trained
//! features that matches their first two moments conditionally on the
//! projection of the input along the gradient spike `v`.
//!
//! `φ_CL(z) = μ(z_v) + Ψ(z_v) z⊥ + Φ(z_v)^{1/2} ξ`, with `z_v = ⟨z, v̂⟩`,
//! `z⊥ = z − z_v v̂` and `ξ ~ N(0, I_p)` drawn afresh for every sample.
//! Moments are tabulated on a grid of `z_v` values and linearly interpolated.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::analysis::generalization_error;
use crate::linalg::{gemm, orthonormal_complement, psd_sqrt};
use crate::network::{init_symmetric, ridge_second_layer, train_first_layer, TrainConfig, TwoLayerNet};
use crate::polynomial::MultivariatePolynomial;
use crate::rng::{self, derive_seed, Purpose};
use crate::staircase::{conditional_nonlinear_mass, Subspace, SPAN_TOL};
use crate::target::{link_hermite_tensor, sample_dataset, Dataset, MultiIndexTarget};
use crate::{Error, Mat, Result, Vector};

/// `v = (1/n) Σ y_ν z_ν` and its teacher coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeDirection {
    pub v: Vector,
    /// `W* v`.
    pub v_teacher: Vec<f64>,
    /// Cosine between `W* v` and `C₁(g*)`; `None` if either vanishes.
    pub c1_cosine: Option<f64>,
}

pub fn compute_spike(data: &Dataset, target: &MultiIndexTarget) -> Result<SpikeDirection> {
    if data.inputs.ncols() != target.dim() {
        return Err(Error::Dimension(format!("inputs have {} columns, target dimension is {}", data.inputs.ncols(), target.dim())));
    }
    let n = data.len().max(1) as f64;
    let v = data.inputs.tr_mul(&data.labels) / n;
    let vt = target.teacher() * &v;
    let c1 = link_hermite_tensor(target.link(), 1)?;
    let (mut dot, mut nc) = (0.0, 0.0);
    for k in 0..target.num_dirs() {
        let c = c1.get(&[k]);
        dot += c * vt[k];
        nc += c * c;
    }
    let nv = vt.norm();
    let c1_cosine = (nv > 0.0 && nc > 0.0).then(|| dot / (nv * nc.sqrt()));
    Ok(SpikeDirection { v, v_teacher: vt.iter().copied().collect(), c1_cosine })
}

/// Tabulated conditional moments of `φ_CK(z) = σ(Wz)` given `z_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    pub v_hat: Vector,
    /// Sorted knots (in units of the standard deviation of `z_v`, which is 1).
    pub grid: Vec<f64>,
    /// `E[φ | z_v]` per knot.
    pub mu: Vec<Vector>,
    /// `E[φ z⊥ᵀ | z_v]` per knot (`p × d`, zero action along `v̂`).
    pub psi: Vec<Mat>,
    /// `(Cov[φ | z_v] − ΨΨᵀ)^{1/2}` per knot.
    pub phi_sqrt: Vec<Mat>,
    /// Negative eigenvalue mass removed before the square root, per knot.
    pub clipped_mass: Vec<f64>,
    /// Trace of `Φ` before clipping, per knot.
    pub phi_trace: Vec<f64>,
}

/// Default grid: 65 knots on `[−4, 4]`.
pub fn default_grid() -> Vec<f64> {
    uniform_grid(65, 4.0)
}

pub fn uniform_grid(knots: usize, half_width: f64) -> Vec<f64> {
    if knots < 2 {
        return vec![0.0];
    }
    (0..knots).map(|k| -half_width + 2.0 * half_width * k as f64 / (knots - 1) as f64).collect()
}

/// Default Monte Carlo budget per knot: `100 p`.
pub fn default_mc_samples(p: usize) -> usize {
    100 * p
}

/// Estimates `μ`, `Ψ`, `Φ` on every knot from `mc_samples` draws of `z⊥`
/// (antithetic pairs, shared across knots). At each knot the features are
/// regressed on `z⊥`: `Ψ` is the regression matrix and `Φ` the residual
/// covariance, so `Φ` is PSD up to rounding.
pub fn conditional_moments(net: &TwoLayerNet, v: &Vector, grid: &[f64], mc_samples: usize, seed: u64) -> Result<ConditionalMoments> {
    let d = net.dim();
    let p = net.width();
    if v.len() != d {
        return Err(Error::Dimension(format!("spike has length {}, network input is {d}", v.len())));
    }
    let vn = v.norm();
    if vn == 0.0 {
        return Err(Error::ZeroSpike);
    }
    let half = mc_samples.div_ceil(2);
    let m = 2 * half;
    if m <= d {
        return Err(Error::InvalidArgument(format!("need more than {d} Monte Carlo samples per knot, got {m}")));
    }
    if m < p {
        log::warn!("{m} Monte Carlo samples for {p} features: covariance is rank deficient, shrinkage applied");
    }
    let v_hat = v / vn;
    let vh: Vec<f64> = v_hat.iter().copied().collect();
    let q_cols = orthonormal_complement(&[vh], d);
    let q = Mat::from_fn(d, d - 1, |i, j| q_cols[j][i]);

    // Coordinates of z⊥ in the basis q, antithetic so their mean is zero.
    let mut y = Mat::zeros(m, d - 1);
    let mut g = rng::substream(seed, Purpose::Surrogate, 0);
    let mut row = vec![0.0; d - 1];
    for k in 0..half {
        rng::fill_gaussian(&mut g, &mut row);
        for (j, &x) in row.iter().enumerate() {
            y[(2 * k, j)] = x;
            y[(2 * k + 1, j)] = -x;
        }
    }
    let mf = m as f64;
    let cyy = gemm(&y, true, &y, false) / mf;
    let cyy_chol = cyy.cholesky().ok_or_else(|| Error::Numerical("sample covariance of z⊥ is singular".into()))?;
    let wq = gemm(&net.first_layer, false, &q, false);
    let base = gemm(&y, false, &wq, true);
    let wv = &net.first_layer * &v_hat;
    let shrink = m < 10 * p;

    let mut out = ConditionalMoments {
        v_hat,
        grid: grid.to_vec(),
        mu: Vec::with_capacity(grid.len()),
        psi: Vec::with_capacity(grid.len()),
        phi_sqrt: Vec::with_capacity(grid.len()),
        clipped_mass: Vec::with_capacity(grid.len()),
        phi_trace: Vec::with_capacity(grid.len()),
    };
    for &zv in grid {
        let mut feats = base.clone();
        for i in 0..p {
            let shift = zv * wv[i];
            for x in feats.column_mut(i).iter_mut() {
                *x = net.activation.eval(*x + shift);
            }
        }
        let mu = Vector::from_fn(p, |i, _| feats.column(i).sum() / mf);
        for i in 0..p {
            let mi = mu[i];
            feats.column_mut(i).add_scalar_mut(-mi);
        }
        let cff = gemm(&feats, true, &feats, false) / mf;
        let cfy = gemm(&feats, true, &y, false) / mf;
        // B = C_φy C_yy⁻¹, solved on the transpose.
        let b = cyy_chol.solve(&cfy.transpose()).transpose();
        let mut phi = cff - gemm(&b, false, &cfy, true);
        phi = (&phi + phi.transpose()) * 0.5;
        let trace = phi.trace();
        if shrink {
            let lam = 1e-6 * trace.max(0.0) / p as f64;
            for i in 0..p {
                phi[(i, i)] += lam;
            }
        }
        let (root, clipped) = psd_sqrt(&phi);
        out.mu.push(mu);
        out.psi.push(gemm(&b, false, &q, true));
        out.phi_sqrt.push(root);
        out.clipped_mass.push(clipped);
        out.phi_trace.push(trace);
    }
    Ok(out)
}

impl ConditionalMoments {
    /// Knot index and interpolation weight for `z_v` (clamped at the ends).
    fn locate(&self, zv: f64) -> (usize, f64) {
        let g = &self.grid;
        if g.len() == 1 || zv <= g[0] {
            return (0, 0.0);
        }
        let last = g.len() - 1;
        if zv >= g[last] {
            return (last - 1, 1.0);
        }
        let k = g.partition_point(|&x| x <= zv).saturating_sub(1).min(last - 1);
        (k, (zv - g[k]) / (g[k + 1] - g[k]))
    }

    fn lerp<'a>(&'a self, k: usize, t: f64, table: &'a [Vector]) -> Vector {
        if table.len() == 1 {
            return table[0].clone();
        }
        &table[k] * (1.0 - t) + &table[k + 1] * t
    }

    fn lerp_mat(table: &[Mat], k: usize, t: f64) -> Mat {
        if table.len() == 1 {
            return table[0].clone();
        }
        &table[k] * (1.0 - t) + &table[k + 1] * t
    }

    /// Interpolated `(μ, Ψ, Φ^{1/2})` at `z_v`.
    pub fn at(&self, zv: f64) -> (Vector, Mat, Mat) {
        let (k, t) = self.locate(zv);
        (self.lerp(k, t, &self.mu), Self::lerp_mat(&self.psi, k, t), Self::lerp_mat(&self.phi_sqrt, k, t))
    }
}

/// Surrogate features for every row of `z` (`n × p`).
pub fn sample_cl_features(z: &Mat, moments: &ConditionalMoments, seed: u64) -> Result<Mat> {
    let d = moments.v_hat.len();
    if z.ncols() != d {
        return Err(Error::Dimension(format!("inputs have {} columns, moments expect {d}", z.ncols())));
    }
    let p = moments.mu.first().map(|m| m.len()).unwrap_or(0);
    let mut out = Mat::zeros(z.nrows(), p);
    let mut xi = vec![0.0; p];
    for nu in 0..z.nrows() {
        let row = z.row(nu).transpose();
        let zv = row.dot(&moments.v_hat);
        let zperp = &row - &moments.v_hat * zv;
        let (mu, psi, root) = moments.at(zv);
        let mut g = rng::substream(seed, Purpose::Surrogate, 1 + nu as u64);
        rng::fill_gaussian(&mut g, &mut xi);
        let f = mu + psi * zperp + root * Vector::from_column_slice(&xi);
        out.row_mut(nu).copy_from(&f.transpose());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgetConfig {
    pub train: TrainConfig,
    pub grid: Vec<f64>,
    /// `None` selects [`default_mc_samples`].
    pub mc_samples: Option<usize>,
    pub test_samples: usize,
}

impl CgetConfig {
    pub fn new(train: TrainConfig) -> Self {
        CgetConfig { train, grid: default_grid(), mc_samples: None, test_samples: 10_000 }
    }
}

/// Per-seed outcome of [`compare_ck_cl`].
#[derive(Debug, Clone, PartialEq)]
pub struct CgetRun {
    pub seed: u64,
    pub err_ck: f64,
    pub err_cl: f64,
    pub spike_cosine: Option<f64>,
    /// `‖â‖₂` of the CK fit.
    pub a_norm: f64,
    /// `‖â‖_∞ p^{1/4}` of the CK fit.
    pub a_inf_scaled: f64,
    /// Largest clipped fraction of `tr Φ` over the knots.
    pub max_clipped_fraction: f64,
}

/// One giant step, then ridge on `φ_CK` and on `φ_CL` separately, for every
/// seed. The CL model is evaluated with freshly sampled surrogate features
/// on the test inputs.
pub fn compare_ck_cl(target: &MultiIndexTarget, cfg: &CgetConfig, lambda: f64, seeds: &[u64]) -> Result<Vec<CgetRun>> {
    seeds.iter().map(|&s| compare_ck_cl_single(target, cfg, lambda, s)).collect()
}

pub fn compare_ck_cl_single(target: &MultiIndexTarget, cfg: &CgetConfig, lambda: f64, seed: u64) -> Result<CgetRun> {
    let c1 = link_hermite_tensor(target.link(), 1)?;
    if c1.frobenius_norm() < 1e-12 {
        return Err(Error::ZeroSpike);
    }
    let mut tc = cfg.train.clone();
    tc.seed = seed;
    tc.steps = 1;
    tc.preprocess_degree = None;
    tc.validate()?;
    let mut net = init_symmetric(tc.p, tc.d, seed, tc.second_layer_dist, tc.activation.clone())?;
    let trace = train_first_layer(&mut net, target, &tc)?;
    let step_batch = sample_dataset(target, tc.n, trace.batch_seeds[0])?;
    let spike = compute_spike(&step_batch, target)?;
    let mc = cfg.mc_samples.unwrap_or_else(|| default_mc_samples(tc.p));
    let moments = conditional_moments(&net, &spike.v, &cfg.grid, mc, derive_seed(seed, Purpose::Surrogate, 0))?;

    let ridge = sample_dataset(target, tc.n, derive_seed(seed, Purpose::Ridge, 0))?;
    let ck = net.features(&ridge.inputs);
    let a_ck = ridge_second_layer(&ck, &ridge.labels, lambda)?;
    let cl = sample_cl_features(&ridge.inputs, &moments, derive_seed(seed, Purpose::Surrogate, 1))?;
    let a_cl = ridge_second_layer(&cl, &ridge.labels, lambda)?;

    let (err_ck, _) = generalization_error(&|z| Ok(net.features(z) * &a_ck), target, cfg.test_samples, seed)?;
    let test_seed = derive_seed(seed, Purpose::Surrogate, 2);
    let (err_cl, _) = generalization_error(&|z| Ok(sample_cl_features(z, &moments, test_seed)? * &a_cl), target, cfg.test_samples, seed)?;

    let max_clipped_fraction = moments
        .clipped_mass
        .iter()
        .zip(&moments.phi_trace)
        .map(|(c, t)| if *t > 0.0 { c / t } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(CgetRun {
        seed,
        err_ck,
        err_cl,
        spike_cosine: spike.c1_cosine,
        a_norm: a_ck.norm(),
        a_inf_scaled: a_ck.amax() * (tc.p as f64).powf(0.25),
        max_clipped_fraction,
    })
}

/// Outcome of [`lower_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    /// `‖P_{U,>1} f*‖²`: mass of `f*` that is not conditionally linear given
    /// the projection on `U`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks `predictor_err ≥ ‖P_{U,>1} f*‖² − tol`. `U` is first projected on
/// the teacher subspace, which can only lower the bound.
pub fn lower_bound_check(target: &MultiIndexTarget, u: &Subspace, predictor_err: f64, tol: f64) -> Result<LowerBound> {
    let bound = nonlinear_mass(target, u)?;
    Ok(LowerBound { bound, holds: predictor_err >= bound - tol })
}

/// `‖P_{U,>1} f*‖²` with `U ⊂ R^d`.
pub fn nonlinear_mass(target: &MultiIndexTarget, u: &Subspace) -> Result<f64> {
    if u.ambient() != target.dim() {
        return Err(Error::Dimension(format!("subspace lives in R^{}, target in R^{}", u.ambient(), target.dim())));
    }
    let r = target.num_dirs();
    let teacher = target.teacher();
    let projected: Vec<Vec<f64>> = u
        .basis()
        .iter()
        .map(|b| (teacher * Vector::from_column_slice(b)).iter().copied().collect())
        .collect();
    let ur = Subspace::span(r, &projected, SPAN_TOL);
    let g: MultivariatePolynomial = match target.link().as_polynomial() {
        Some(g) => g,
        None => target.link().to_polynomial_approx(8)?,
    };
    Ok(conditional_nonlinear_mass(&g, &ur))
}

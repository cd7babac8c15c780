//! Two-layer network, symmetric initialization and giant-step training.
//!
//! The network is `f̂(z) = (1/√p) Σ_i a_i σ(⟨w_i, z⟩)`. Training follows the
//! layer-wise protocol: `T` full-batch gradient steps on `W` (each on a fresh
//! batch, second layer frozen at `a⁰`), then ridge regression for `a`.
//!
//! Sign convention: [`gradient_matrix`] returns the descent direction's
//! negation `G`, with row `i` equal to
//! `(a_i/√p)(1/n) Σ_ν z^ν σ'(⟨w_i, z^ν⟩)(f̂(z^ν) − y^ν)`, so updates read
//! `W ← W − ηG`. The "negative gradient" `g_i` of the analysis is `−G_i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::hermite::{factorial, he_values, Activation};
use crate::linalg::{gemm, solve_shifted_psd};
use crate::rng::{self, derive_seed, Purpose};
use crate::target::{sample_dataset, Dataset, MultiIndexTarget};
use crate::{Error, Mat, Result, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    /// `p × d`, rows `w_i`.
    pub first_layer: Mat,
    /// `a_i`, length `p`.
    pub second_layer: Vector,
    pub activation: Activation,
}

/// Distribution of `√p · a_i` at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondLayerDist {
    /// `Unif[−1, 1]`.
    Uniform,
    /// `N(0, 1)`.
    Gaussian,
    /// `±1`.
    Rademacher,
}

impl TwoLayerNet {
    pub fn width(&self) -> usize {
        self.first_layer.nrows()
    }

    pub fn dim(&self) -> usize {
        self.first_layer.ncols()
    }

    /// `Z Wᵀ` (`m × p`).
    pub fn preactivations(&self, z: &Mat) -> Mat {
        gemm(z, false, &self.first_layer, true)
    }

    /// `σ(Z Wᵀ)` (`m × p`), unscaled.
    pub fn features(&self, z: &Mat) -> Mat {
        self.preactivations(z).map(|x| self.activation.eval(x))
    }

    pub fn forward(&self, z: &Mat) -> Result<Vector> {
        if z.ncols() != self.dim() {
            return Err(Error::Dimension(format!("inputs have {} columns, network expects {}", z.ncols(), self.dim())));
        }
        let f = self.features(z);
        Ok(f * &self.second_layer / (self.width() as f64).sqrt())
    }
}

/// Symmetric initialization: `w_i = w_{p−i+1}` uniform on the sphere,
/// `a_i = −a_{p−i+1}`, so the network output is identically zero.
pub fn init_symmetric(p: usize, d: usize, seed: u64, dist: SecondLayerDist, activation: Activation) -> Result<TwoLayerNet> {
    if p == 0 || p % 2 == 1 {
        return Err(Error::InvalidArgument(format!("width p = {p} must be even and positive")));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("input dimension must be positive".into()));
    }
    let half = p / 2;
    let mut w = Mat::zeros(p, d);
    let mut row = vec![0.0; d];
    for i in 0..half {
        let mut g = rng::substream(seed, Purpose::Init, i as u64);
        loop {
            rng::fill_gaussian(&mut g, &mut row);
            let nrm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 0.0 {
                row.iter_mut().for_each(|x| *x /= nrm);
                break;
            }
        }
        for (j, &x) in row.iter().enumerate() {
            w[(i, j)] = x;
            w[(p - 1 - i, j)] = x;
        }
    }
    let mut g = rng::substream(seed, Purpose::Init, u64::MAX);
    let sp = (p as f64).sqrt();
    let mut a = Vector::zeros(p);
    for i in 0..half {
        let v = match dist {
            SecondLayerDist::Uniform => rng::uniform(&mut g, -1.0, 1.0),
            SecondLayerDist::Gaussian => rng::gaussian(&mut g),
            SecondLayerDist::Rademacher => {
                if rng::uniform(&mut g, 0.0, 1.0) < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
        } / sp;
        a[i] = v;
        a[p - 1 - i] = -v;
    }
    Ok(TwoLayerNet { first_layer: w, second_layer: a, activation })
}

/// Learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    /// `η = p d^{(ℓ−1)/2}`.
    LeapScaled { leap: u32 },
    /// `η = c p √(n/d)`.
    SampleScaled { c: f64 },
    /// `η = c p`.
    WidthScaled { c: f64 },
    Fixed(f64),
}

impl EtaRule {
    pub fn value(&self, p: usize, d: usize, n: usize) -> f64 {
        let (p, d, n) = (p as f64, d as f64, n as f64);
        match *self {
            EtaRule::LeapScaled { leap } => p * d.powf((leap as f64 - 1.0) / 2.0),
            EtaRule::SampleScaled { c } => c * p * (n / d).sqrt(),
            EtaRule::WidthScaled { c } => c * p,
            EtaRule::Fixed(eta) => eta,
        }
    }
}

impl Default for EtaRule {
    fn default() -> Self {
        EtaRule::SampleScaled { c: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub d: usize,
    pub p: usize,
    pub n: usize,
    pub steps: usize,
    pub eta: EtaRule,
    pub lambda: f64,
    pub seed: u64,
    pub preprocess_degree: Option<u32>,
    pub second_layer_dist: SecondLayerDist,
    pub activation: Activation,
    /// Refit `a` by ridge after every first-layer step and use it in the
    /// following gradients.
    pub retrain_second_layer: bool,
    /// Keep every `W^t` and `G_t` in the trace.
    pub keep_snapshots: bool,
}

impl TrainConfig {
    pub fn new(d: usize, p: usize, n: usize, steps: usize) -> Self {
        TrainConfig {
            d,
            p,
            n,
            steps,
            eta: EtaRule::default(),
            lambda: 1.0,
            seed: 0,
            preprocess_degree: None,
            second_layer_dist: SecondLayerDist::Uniform,
            activation: Activation::Relu,
            retrain_second_layer: false,
            keep_snapshots: true,
        }
    }

    pub fn eta_value(&self) -> f64 {
        self.eta.value(self.p, self.d, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.p % 2 == 1 {
            return Err(Error::InvalidArgument(format!("p = {} must be even and positive", self.p)));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidArgument("n and d must be positive".into()));
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::InvalidArgument(format!("lambda = {} must be non-negative", self.lambda)));
        }
        if let Some(0) = self.preprocess_degree {
            return Err(Error::InvalidArgument("preprocess degree must be at least 1".into()));
        }
        Ok(())
    }
}

/// Record of first-layer training.
#[derive(Debug, Clone, PartialEq)]
pub struct GdTrace {
    /// `W^0, …, W^T` (only `W^0` and `W^T` when snapshots are off).
    pub snapshots: Vec<Mat>,
    /// `G_0, …, G_{T−1}` (empty when snapshots are off).
    pub gradients: Vec<Mat>,
    pub batch_seeds: Vec<u64>,
    pub eta: f64,
    /// `a` used at each step when the second layer is retrained.
    pub second_layers: Vec<Vector>,
}

/// `G` for one batch (see the module docs for the sign convention).
pub fn gradient_matrix(net: &TwoLayerNet, batch: &Dataset) -> Mat {
    gradient_with_labels(net, &batch.inputs, &batch.labels)
}

pub fn gradient_with_labels(net: &TwoLayerNet, z: &Mat, y: &Vector) -> Mat {
    let p = net.width();
    let n = z.nrows();
    let sp = (p as f64).sqrt();
    let pre = net.preactivations(z);
    let fhat = pre.map(|x| net.activation.eval(x)) * &net.second_layer / sp;
    let resid = fhat - y;
    let mut m = pre.map(|x| net.activation.deriv(x));
    for mut col in m.column_iter_mut() {
        col.component_mul_assign(&resid);
    }
    let mut g = gemm(&m, true, z, false);
    for i in 0..p {
        let s = net.second_layer[i] / (sp * n as f64);
        g.row_mut(i).scale_mut(s);
    }
    g
}

/// Seed of the fresh batch used at step `t`.
pub fn batch_seed(seed: u64, t: usize) -> u64 {
    derive_seed(seed, Purpose::Batch, t as u64)
}

/// `T` giant steps `W ← W − ηG_t` on fresh batches.
pub fn train_first_layer(net: &mut TwoLayerNet, target: &MultiIndexTarget, config: &TrainConfig) -> Result<GdTrace> {
    config.validate()?;
    if target.dim() != net.dim() {
        return Err(Error::Dimension(format!("target dimension {} differs from network input {}", target.dim(), net.dim())));
    }
    let eta = config.eta_value();
    let mut trace = GdTrace {
        snapshots: vec![net.first_layer.clone()],
        gradients: Vec::new(),
        batch_seeds: Vec::new(),
        eta,
        second_layers: Vec::new(),
    };
    for t in 0..config.steps {
        let seed = batch_seed(config.seed, t);
        let batch = sample_dataset(target, config.n, seed)?;
        let labels = match config.preprocess_degree {
            Some(k) => preprocess_labels(&batch, k).0,
            None => batch.labels.clone(),
        };
        let g = gradient_with_labels(net, &batch.inputs, &labels);
        net.first_layer -= &g * eta;
        if config.retrain_second_layer {
            let feats = net.features(&batch.inputs);
            let a_hat = ridge_second_layer(&feats, &labels, config.lambda)?;
            net.second_layer = a_hat * (net.width() as f64).sqrt();
            trace.second_layers.push(net.second_layer.clone());
        }
        if !net.first_layer.iter().all(|x| x.is_finite()) {
            return Err(Error::Numerical(format!("first layer diverged at step {t} (eta = {eta:e})")));
        }
        trace.batch_seeds.push(seed);
        if config.keep_snapshots {
            trace.gradients.push(g);
            trace.snapshots.push(net.first_layer.clone());
        }
    }
    if !config.keep_snapshots && config.steps > 0 {
        trace.snapshots.push(net.first_layer.clone());
    }
    Ok(trace)
}

/// Ridge estimate `argmin ‖Xa − y‖² + λ‖a‖²`, dual form when `n < p`.
pub fn ridge_second_layer(features: &Mat, y: &Vector, lambda: f64) -> Result<Vector> {
    if features.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} feature rows but {} labels", features.nrows(), y.len())));
    }
    if features.nrows() < features.ncols() {
        ridge_dual(features, y, lambda)
    } else {
        ridge_primal(features, y, lambda)
    }
}

/// `(XᵀX + λI)⁻¹ Xᵀ y`.
pub fn ridge_primal(x: &Mat, y: &Vector, lambda: f64) -> Result<Vector> {
    let gram = gemm(x, true, x, false);
    let rhs = Mat::from_column_slice(x.ncols(), 1, x.tr_mul(y).as_slice());
    let (sol, fallback) = solve_shifted_psd(&gram, lambda, &rhs)?;
    if fallback {
        log::warn!("ridge system singular at lambda = {lambda:e}; used pseudo-inverse");
    }
    Ok(Vector::from_column_slice(sol.as_slice()))
}

/// `Xᵀ (XXᵀ + λI)⁻¹ y`.
pub fn ridge_dual(x: &Mat, y: &Vector, lambda: f64) -> Result<Vector> {
    let gram = gemm(x, false, x, true);
    let rhs = Mat::from_column_slice(y.len(), 1, y.as_slice());
    let (sol, fallback) = solve_shifted_psd(&gram, lambda, &rhs)?;
    if fallback {
        log::warn!("ridge system singular at lambda = {lambda:e}; used pseudo-inverse");
    }
    Ok(x.tr_mul(&Vector::from_column_slice(sol.as_slice())))
}

/// Plug-in Hermite coefficients in the standard basis of `R^d`, for all
/// multi-indices of total degree `< k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    pub degree_bound: u32,
    /// Sparse multi-index (coordinate, order) and the estimate `ĉ`.
    pub entries: Vec<(Vec<(usize, u32)>, f64)>,
}

impl HermiteTable {
    /// `Σ ĉ/Πj! Π He_j(z_c)` for every row of `z`.
    pub fn evaluate(&self, z: &Mat) -> Vector {
        let kmax = self.degree_bound.saturating_sub(1);
        let he = hermite_rows(z, kmax);
        let mut out = Vector::zeros(z.nrows());
        for (idx, c) in &self.entries {
            let w = c / idx.iter().map(|&(_, j)| factorial(j)).product::<f64>();
            for nu in 0..z.nrows() {
                out[nu] += w * basis_value(&he[nu], idx, kmax);
            }
        }
        out
    }

    /// Coefficient of a given sparse multi-index, 0 when absent.
    pub fn get(&self, idx: &[(usize, u32)]) -> f64 {
        self.entries.iter().find(|(i, _)| i.as_slice() == idx).map(|(_, c)| *c).unwrap_or(0.0)
    }
}

/// `He_0..He_kmax` of each coordinate, row-major per sample.
fn hermite_rows(z: &Mat, kmax: u32) -> Vec<Vec<f64>> {
    (0..z.nrows())
        .map(|nu| {
            let mut v = Vec::with_capacity(z.ncols() * (kmax as usize + 1));
            for c in 0..z.ncols() {
                v.extend(he_values(kmax, z[(nu, c)]));
            }
            v
        })
        .collect()
}

fn basis_value(he_row: &[f64], idx: &[(usize, u32)], kmax: u32) -> f64 {
    let stride = kmax as usize + 1;
    idx.iter().map(|&(c, j)| he_row[c * stride + j as usize]).product()
}

/// Sparse multi-indices over `d` coordinates with total degree `< k`.
pub fn multi_indices_below(d: usize, k: u32) -> Vec<Vec<(usize, u32)>> {
    let mut out = vec![Vec::new()];
    for total in 1..k {
        let mut cur = Vec::new();
        extend_indices(d, total, 0, &mut cur, &mut out);
    }
    out
}

fn extend_indices(d: usize, remaining: u32, start: usize, cur: &mut Vec<(usize, u32)>, out: &mut Vec<Vec<(usize, u32)>>) {
    if remaining == 0 {
        out.push(cur.clone());
        return;
    }
    for c in start..d {
        for j in (1..=remaining).rev() {
            cur.push((c, j));
            extend_indices(d, remaining - j, c + 1, cur, out);
            cur.pop();
        }
    }
}

/// Removes plug-in estimates of all Hermite components of total degree `< k`
/// (including the empirical mean) from the labels.
pub fn preprocess_labels(data: &Dataset, k: u32) -> (Vector, HermiteTable) {
    let z = &data.inputs;
    let n = z.nrows();
    let kmax = k.saturating_sub(1);
    let he = hermite_rows(z, kmax);
    let mut adjusted = data.labels.clone();
    let mut entries = Vec::new();
    for idx in multi_indices_below(z.ncols(), k) {
        let basis: Vec<f64> = (0..n).map(|nu| basis_value(&he[nu], &idx, kmax)).collect();
        let c = basis.iter().zip(data.labels.iter()).map(|(b, y)| b * y).sum::<f64>() / n as f64;
        let w = c / idx.iter().map(|&(_, j)| factorial(j)).product::<f64>();
        for (a, b) in adjusted.iter_mut().zip(&basis) {
            *a -= w * b;
        }
        entries.push((idx, c));
    }
    (adjusted, HermiteTable { degree_bound: k, entries })
}

/// `(1/√p) âᵀσ(Wz) + Σ ĉ/Πj! Π He_j(z_c)`.
pub fn predict_with_reinjection(net: &TwoLayerNet, a_hat: &Vector, table: Option<&HermiteTable>, z: &Mat) -> Vector {
    let mut out = net.features(z) * a_hat / (net.width() as f64).sqrt();
    if let Some(t) = table {
        out += t.evaluate(z);
    }
    out
}

/// Exact feature map of the kernel `(1 + ⟨x, x'⟩/d)^q`.
pub fn polynomial_kernel_features(z: &Mat, degree: u32) -> Mat {
    let d = z.ncols();
    let mut monomials: Vec<Vec<(usize, u32)>> = Vec::new();
    for total in 0..=degree {
        if total == 0 {
            monomials.push(Vec::new());
        } else {
            let mut cur = Vec::new();
            let mut tmp = Vec::new();
            extend_indices(d, total, 0, &mut cur, &mut tmp);
            monomials.extend(tmp);
        }
    }
    let weights: Vec<f64> = monomials
        .iter()
        .map(|m| {
            let deg: u32 = m.iter().map(|&(_, j)| j).sum();
            let binom = factorial(degree) / (factorial(deg) * factorial(degree - deg));
            let multinom = factorial(deg) / m.iter().map(|&(_, j)| factorial(j)).product::<f64>();
            (binom * multinom / (d as f64).powi(deg as i32)).sqrt()
        })
        .collect();
    Mat::from_fn(z.nrows(), monomials.len(), |nu, col| {
        weights[col] * monomials[col].iter().map(|&(c, j)| z[(nu, c)].powi(j as i32)).product::<f64>()
    })
}

/// Kernel `(1 + ⟨x, x'⟩/d)^q` between the rows of `a` and `b`.
pub fn polynomial_kernel(a: &Mat, b: &Mat, degree: u32) -> Mat {
    let d = a.ncols() as f64;
    gemm(a, false, b, true).map(|s| (1.0 + s / d).powi(degree as i32))
}

/// Held-out MSE of polynomial-kernel ridge regression.
pub fn kernel_ridge_baseline(train: &Dataset, degree: u32, lambda: f64, test: &Dataset) -> Result<f64> {
    if !(1..=3).contains(&degree) {
        return Err(Error::InvalidArgument(format!("kernel degree {degree} must be 1, 2 or 3")));
    }
    let d = train.inputs.ncols() as f64;
    let n = train.len() as f64;
    let feature_dim = match degree {
        1 => d + 1.0,
        2 => (d + 1.0) * (d + 2.0) / 2.0,
        _ => (d + 1.0) * (d + 2.0) * (d + 3.0) / 6.0,
    };
    let preds = if feature_dim < n {
        let phi = polynomial_kernel_features(&train.inputs, degree);
        let coef = ridge_primal(&phi, &train.labels, lambda)?;
        polynomial_kernel_features(&test.inputs, degree) * coef
    } else {
        let k = polynomial_kernel(&train.inputs, &train.inputs, degree);
        let rhs = Mat::from_column_slice(train.len(), 1, train.labels.as_slice());
        let (alpha, _) = solve_shifted_psd(&k, lambda, &rhs)?;
        polynomial_kernel(&test.inputs, &train.inputs, degree) * Vector::from_column_slice(alpha.as_slice())
    };
    let err = preds - &test.labels;
    Ok(err.norm_squared() / test.len() as f64)
}

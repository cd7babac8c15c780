//! Train, fit and evaluate: `T` first-layer steps, ridge on a fresh batch,
//! test error on fresh inputs.

use crate::analysis::generalization_error;
use crate::network::{init_symmetric, predict_with_reinjection, preprocess_labels, ridge_second_layer, train_first_layer, GdTrace, HermiteTable, TrainConfig, TwoLayerNet};
use crate::rng::{derive_seed, Purpose};
use crate::target::{sample_dataset, MultiIndexTarget};
use crate::{Result, Vector};

#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    /// Size of the ridge batch (defaults to `n`).
    pub ridge_samples: usize,
    pub test_samples: usize,
}

impl PipelineConfig {
    pub fn new(train: TrainConfig) -> Self {
        let ridge_samples = train.n;
        PipelineConfig { train, ridge_samples, test_samples: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    /// Trained first layer with the initial second layer `a⁰`.
    pub net: TwoLayerNet,
    /// Ridge estimate on unscaled features; predictions are `σ(Wz)ᵀâ/√p`
    /// plus the reinjected table.
    pub a_hat: Vector,
    pub table: Option<HermiteTable>,
    pub trace: GdTrace,
    pub test_error: f64,
    pub test_se: f64,
}

impl PipelineOutcome {
    pub fn predict(&self, z: &crate::Mat) -> Vector {
        predict_with_reinjection(&self.net, &self.a_hat, self.table.as_ref(), z)
    }
}

/// Runs the whole protocol. `steps = 0` gives the random-features baseline.
pub fn run_pipeline(target: &MultiIndexTarget, cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let tc = &cfg.train;
    tc.validate()?;
    let mut net = init_symmetric(tc.p, tc.d, tc.seed, tc.second_layer_dist, tc.activation.clone())?;
    let trace = train_first_layer(&mut net, target, tc)?;
    let ridge = sample_dataset(target, cfg.ridge_samples, derive_seed(tc.seed, Purpose::Ridge, 0))?;
    let (labels, table) = match tc.preprocess_degree {
        Some(k) => {
            let (y, t) = preprocess_labels(&ridge, k);
            (y, Some(t))
        }
        None => (ridge.labels.clone(), None),
    };
    let feats = net.features(&ridge.inputs);
    let sp = (tc.p as f64).sqrt();
    let a_hat = ridge_second_layer(&feats, &labels, tc.lambda)? * sp;
    let (test_error, test_se) = {
        let pred = |z: &crate::Mat| Ok(predict_with_reinjection(&net, &a_hat, table.as_ref(), z));
        generalization_error(&pred, target, cfg.test_samples, tc.seed)?
    };
    Ok(PipelineOutcome { net, a_hat, table, trace, test_error, test_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::Link;

    #[test]
    fn feature_learning_helps_on_linear_target() {
        let t = MultiIndexTarget::aligned(Link::Polynomial("z1".parse().unwrap()), 32).unwrap();
        let mut tc = TrainConfig::new(32, 64, 256, 1);
        tc.seed = 3;
        let mut cfg = PipelineConfig::new(tc.clone());
        cfg.test_samples = 4000;
        let learned = run_pipeline(&t, &cfg).unwrap();
        cfg.train.steps = 0;
        let lazy = run_pipeline(&t, &cfg).unwrap();
        assert!(learned.test_error < lazy.test_error, "{} vs {}", learned.test_error, lazy.test_error);
        assert!(learned.test_error < 0.3);
        let again = run_pipeline(&t, &PipelineConfig { train: tc, ..cfg.clone() }).unwrap();
        assert_eq!(again.test_error.to_bits(), learned.test_error.to_bits());
    }
}

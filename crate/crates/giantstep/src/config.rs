//! Experiment configuration files (TOML).
//!
//! See `docs/config.md` for the full schema and `configs/` for one example
//! per experiment kind.

use std::fmt;
use std::path::{Path, PathBuf};

use giantstep_core::target::LinkComponent;
use giantstep_core::{Activation, EtaRule, Link, MultiIndexTarget, MultivariatePolynomial, SecondLayerDist, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SingleStep,
    MultiStep,
    Staircase,
    Scaling,
    GeneralizationSweep,
    Cget,
    Preprocessing,
    SecondStepOrientation,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::SingleStep => "single-step",
            ExperimentKind::MultiStep => "multi-step",
            ExperimentKind::Staircase => "staircase",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::GeneralizationSweep => "generalization-sweep",
            ExperimentKind::Cget => "cget",
            ExperimentKind::Preprocessing => "preprocessing",
            ExperimentKind::SecondStepOrientation => "second-step-orientation",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub options: Options,
}

/// Either a polynomial link or a named-activation sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum: Option<SumSpec>,
    #[serde(default)]
    pub teacher: TeacherKind,
    #[serde(default)]
    pub teacher_seed: u64,
}

/// `Σ_k weight_k σ(z_k)` over `directions` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumSpec {
    pub activation: String,
    pub directions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeacherKind {
    #[default]
    Aligned,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(default = "default_second_layer")]
    pub second_layer: String,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaSpec>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess_degree: Option<u32>,
    #[serde(default)]
    pub retrain_second_layer: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            activation: default_activation(),
            second_layer: default_second_layer(),
            steps: default_steps(),
            eta: None,
            lambda: default_lambda(),
            preprocess_degree: None,
            retrain_second_layer: false,
        }
    }
}

fn default_activation() -> String {
    "relu".into()
}
fn default_second_layer() -> String {
    "uniform".into()
}
fn default_steps() -> usize {
    1
}
fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaSpec {
    /// `c p √(n/d)`.
    Sample { c: f64 },
    /// `p d^{(ℓ−1)/2}`; `leap` defaults to the target's leap index.
    Leap {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        leap: Option<u32>,
    },
    /// `c p`.
    Width { c: f64 },
    Fixed { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default = "default_d")]
    pub d: Vec<usize>,
    #[serde(default = "default_n")]
    pub n: Vec<SizeExpr>,
    #[serde(default = "default_p")]
    pub p: Vec<SizeExpr>,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep { d: default_d(), n: default_n(), p: default_p() }
    }
}

fn default_d() -> Vec<usize> {
    vec![64]
}
fn default_n() -> Vec<SizeExpr> {
    vec![SizeExpr::Expr("4d".into())]
}
fn default_p() -> Vec<SizeExpr> {
    vec![SizeExpr::Expr("2d".into())]
}

/// A size given literally or as `c·d^k`, e.g. `4d`, `16d^2`, `0.5*d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeExpr {
    Value(usize),
    Expr(String),
}

impl SizeExpr {
    pub fn eval(&self, d: usize) -> Result<usize, String> {
        match self {
            SizeExpr::Value(v) => Ok(*v),
            SizeExpr::Expr(s) => eval_size(s, d),
        }
    }
}

fn eval_size(s: &str, d: usize) -> Result<usize, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read size expression {s:?} (expected e.g. 1024, 4d, 16d^2)");
    let Some(pos) = t.find('d') else {
        return t.parse::<usize>().map_err(|_| bad());
    };
    let coef = t[..pos].trim_end_matches('*');
    let coef: f64 = if coef.is_empty() { 1.0 } else { coef.parse().map_err(|_| bad())? };
    let rest = &t[pos + 1..];
    let power: i32 = if rest.is_empty() {
        1
    } else {
        rest.strip_prefix('^').ok_or_else(bad)?.parse().map_err(|_| bad())?
    };
    let v = coef * (d as f64).powi(power);
    if !v.is_finite() || v < 1.0 {
        return Err(format!("size expression {s:?} evaluates to {v} at d = {d}"));
    }
    Ok(v.round() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default = "default_test_samples")]
    pub test_samples: usize,
    /// Write every `W^t` as `.npy` (single-step and multi-step).
    #[serde(default)]
    pub dump_weights: bool,
    /// generalization-sweep: any of `gd`, `rf`, `preprocessed`, `kernel1..3`.
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    /// scaling: any of `alignment_ratio`, `norm_deviation`, `delta_op`, `delta_overlap`.
    #[serde(default = "default_statistics")]
    pub statistics: Vec<String>,
    /// Monte Carlo budget: per knot for cget, total for the norm constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(default = "default_knots")]
    pub grid_knots: usize,
    /// staircase: polynomial links to analyse.
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    /// preprocessing: degree `k` of the removed Hermite part.
    #[serde(default = "default_pre_degree")]
    pub preprocess_degree: u32,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            test_samples: default_test_samples(),
            dump_weights: false,
            methods: default_methods(),
            statistics: default_statistics(),
            mc_samples: None,
            grid_knots: default_knots(),
            targets: Vec::new(),
            t_max: default_t_max(),
            preprocess_degree: default_pre_degree(),
        }
    }
}

fn default_test_samples() -> usize {
    10_000
}
fn default_methods() -> Vec<String> {
    vec!["gd".into(), "rf".into()]
}
fn default_statistics() -> Vec<String> {
    ["alignment_ratio", "norm_deviation", "delta_op", "delta_overlap"].iter().map(|s| s.to_string()).collect()
}
fn default_knots() -> usize {
    65
}
fn default_t_max() -> usize {
    giantstep_core::staircase::DEFAULT_T_MAX
}
fn default_pre_degree() -> u32 {
    2
}

pub const STATISTICS: [&str; 4] = ["alignment_ratio", "norm_deviation", "delta_op", "delta_overlap"];

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub d: usize,
    pub n: usize,
    pub p: usize,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} n={} p={}", self.d, self.n, self.p)
    }
}

impl Cell {
    pub fn tag(&self) -> String {
        format!("d{}_n{}_p{}", self.d, self.n, self.p)
    }
}

pub fn parse_activation(s: &str) -> Result<Activation, String> {
    let l = s.trim().to_ascii_lowercase();
    match l.as_str() {
        "relu" => return Ok(Activation::Relu),
        "erf" => return Ok(Activation::Erf),
        "tanh" => return Ok(Activation::Tanh),
        "identity" | "linear" => return Ok(Activation::Identity),
        _ => {}
    }
    for prefix in ["hermite", "he"] {
        if let Some(k) = l.strip_prefix(prefix) {
            if let Ok(k) = k.parse::<u32>() {
                return Ok(Activation::Hermite(k));
            }
        }
    }
    Err(format!("unknown activation {s:?} (relu, erf, tanh, identity, he<k>)"))
}

pub fn parse_second_layer(s: &str) -> Result<SecondLayerDist, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "uniform" => Ok(SecondLayerDist::Uniform),
        "gaussian" => Ok(SecondLayerDist::Gaussian),
        "rademacher" => Ok(SecondLayerDist::Rademacher),
        _ => Err(format!("unknown second-layer distribution {s:?} (uniform, gaussian, rademacher)")),
    }
}

pub fn parse_polynomial(s: &str) -> Result<MultivariatePolynomial, String> {
    s.parse::<MultivariatePolynomial>().map_err(|e| format!("cannot parse polynomial {s:?}: {e}"))
}

impl TargetSpec {
    pub fn link(&self) -> Result<Link, String> {
        match (&self.link, &self.sum) {
            (Some(l), None) => Ok(Link::Polynomial(parse_polynomial(l)?)),
            (None, Some(sum)) => {
                let activation = parse_activation(&sum.activation)?;
                if sum.directions == 0 {
                    return Err("directions must be positive".into());
                }
                let weights = sum.weights.clone().unwrap_or_else(|| vec![1.0; sum.directions]);
                if weights.len() != sum.directions {
                    return Err(format!("{} weights for {} directions", weights.len(), sum.directions));
                }
                let components = weights
                    .iter()
                    .enumerate()
                    .map(|(k, &w)| LinkComponent { weight: w, direction: k, activation: activation.clone() })
                    .collect();
                Ok(Link::NamedSum { num_dirs: sum.directions, components })
            }
            _ => Err("give exactly one of `link` or `sum`".into()),
        }
    }

    pub fn build(&self, d: usize) -> Result<MultiIndexTarget, String> {
        let link = self.link()?;
        let t = match self.teacher {
            TeacherKind::Aligned => MultiIndexTarget::aligned(link, d),
            TeacherKind::Random => MultiIndexTarget::random_teacher(link, d, self.teacher_seed),
        };
        t.map_err(|e| e.to_string())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn cells(&self) -> Result<Vec<Cell>, CliError> {
        let mut cells = Vec::new();
        for &d in &self.sweep.d {
            for n in &self.sweep.n {
                let n = n.eval(d).map_err(|m| field("sweep.n", m))?;
                for p in &self.sweep.p {
                    let p = p.eval(d).map_err(|m| field("sweep.p", m))?;
                    cells.push(Cell { d, n, p });
                }
            }
        }
        Ok(cells)
    }

    pub fn target(&self, d: usize) -> Result<MultiIndexTarget, CliError> {
        let spec = self.target.as_ref().ok_or_else(|| field("target", "missing [target] section".into()))?;
        spec.build(d).map_err(|m| field("target", m))
    }

    pub fn activation(&self) -> Activation {
        parse_activation(&self.train.activation).expect("validated")
    }

    /// Step-size rule, with the per-kind default when `train.eta` is absent.
    pub fn eta_rule(&self, leap: Option<usize>) -> EtaRule {
        match self.train.eta {
            Some(EtaSpec::Sample { c }) => EtaRule::SampleScaled { c },
            Some(EtaSpec::Leap { leap: l }) => EtaRule::LeapScaled { leap: l.unwrap_or(leap.unwrap_or(1) as u32) },
            Some(EtaSpec::Width { c }) => EtaRule::WidthScaled { c },
            Some(EtaSpec::Fixed { value }) => EtaRule::Fixed(value),
            None => match self.experiment {
                ExperimentKind::SecondStepOrientation => {
                    EtaRule::WidthScaled { c: giantstep_core::analysis::WORKED_CASE_ETA }
                }
                ExperimentKind::Scaling => EtaRule::LeapScaled { leap: leap.unwrap_or(1) as u32 },
                _ => EtaRule::default(),
            },
        }
    }

    pub fn train_config(&self, cell: Cell, seed: u64, leap: Option<usize>) -> TrainConfig {
        let mut tc = TrainConfig::new(cell.d, cell.p, cell.n, self.train.steps);
        tc.eta = self.eta_rule(leap);
        tc.lambda = self.train.lambda;
        tc.seed = seed;
        tc.preprocess_degree = self.train.preprocess_degree;
        tc.second_layer_dist = parse_second_layer(&self.train.second_layer).expect("validated");
        tc.activation = self.activation();
        tc.retrain_second_layer = self.train.retrain_second_layer;
        tc
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(field("seeds", "must not be empty".into()));
        }
        parse_activation(&self.train.activation).map_err(|m| field("train.activation", m))?;
        parse_second_layer(&self.train.second_layer).map_err(|m| field("train.second_layer", m))?;
        if self.train.lambda.is_nan() || self.train.lambda < 0.0 {
            return Err(field("train.lambda", format!("must be non-negative, got {}", self.train.lambda)));
        }
        if self.options.test_samples < 2 {
            return Err(field("options.test_samples", "must be at least 2".into()));
        }
        if self.experiment == ExperimentKind::Staircase {
            if self.options.targets.is_empty() && self.target.is_none() {
                return Err(field("options.targets", "staircase needs at least one target".into()));
            }
            for (i, t) in self.options.targets.iter().enumerate() {
                parse_polynomial(t).map_err(|m| field(&format!("options.targets[{i}]"), m))?;
            }
            if let Some(t) = &self.target {
                t.link().map_err(|m| field("target", m))?;
            }
            return Ok(());
        }
        if self.sweep.d.is_empty() || self.sweep.n.is_empty() || self.sweep.p.is_empty() {
            return Err(field("sweep", "d, n and p must be non-empty".into()));
        }
        for cell in self.cells()? {
            let t = self.target(cell.d)?;
            if self.experiment == ExperimentKind::SecondStepOrientation && t.num_dirs() != 2 {
                return Err(field("target", "second-step-orientation needs a two-direction target".into()));
            }
            if self.experiment == ExperimentKind::SecondStepOrientation && self.train.steps < 2 {
                return Err(field("train.steps", "second-step-orientation needs at least 2 steps".into()));
            }
            let tc = self.train_config(cell, self.seeds[0], Some(1));
            tc.validate().map_err(|e| field("sweep", format!("cell {cell}: {e}")))?;
        }
        for m in &self.options.methods {
            if !matches!(m.as_str(), "gd" | "rf" | "preprocessed" | "kernel1" | "kernel2" | "kernel3") {
                return Err(field("options.methods", format!("unknown method {m:?} (gd, rf, preprocessed, kernel1..3)")));
            }
        }
        for s in &self.options.statistics {
            if !STATISTICS.contains(&s.as_str()) {
                return Err(field("options.statistics", format!("unknown statistic {s:?} ({})", STATISTICS.join(", "))));
            }
        }
        if self.options.grid_knots < 2 {
            return Err(field("options.grid_knots", "need at least 2 knots".into()));
        }
        if self.options.preprocess_degree == 0 {
            return Err(field("options.preprocess_degree", "must be at least 1".into()));
        }
        Ok(())
    }
}

fn field(name: &str, msg: String) -> CliError {
    CliError::Config(format!("field `{name}`: {msg}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_expressions() {
        assert_eq!(eval_size("4d", 64).unwrap(), 256);
        assert_eq!(eval_size("16d^2", 64).unwrap(), 65536);
        assert_eq!(eval_size("0.5*d", 64).unwrap(), 32);
        assert_eq!(eval_size("d", 10).unwrap(), 10);
        assert_eq!(eval_size(" 1024 ", 10).unwrap(), 1024);
        assert!(eval_size("4x", 10).is_err());
        assert!(eval_size("0d", 10).is_err());
    }

    #[test]
    fn activations() {
        assert_eq!(parse_activation("He2").unwrap(), Activation::Hermite(2));
        assert_eq!(parse_activation("relu").unwrap(), Activation::Relu);
        assert!(parse_activation("gelu").is_err());
    }

    #[test]
    fn minimal_config_round_trips() {
        let text = r#"
experiment = "single-step"
output_dir = "out"
seeds = [1, 2]
[target]
link = "z1 + z2"
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.cells().unwrap(), vec![Cell { d: 64, n: 256, p: 128 }]);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn validation_names_the_field() {
        let text = "experiment = \"single-step\"\noutput_dir = \"o\"\nseeds = []\n[target]\nlink = \"z1\"\n";
        let err = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("seeds"), "{err}");
        let text = "experiment = \"single-step\"\noutput_dir = \"o\"\nseeds = [1]\n[target]\nlink = \"z1\"\n[train]\nstepz = 2\n";
        let err = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("stepz") && err.contains("line"), "{err}");
    }
}

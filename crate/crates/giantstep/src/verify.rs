//! Re-checks the criteria attached to each experiment kind against the files
//! of a finished run. Only the manifest and its tables are read; nothing is
//! retrained.

use std::path::{Path, PathBuf};

use giantstep_core::analysis::axis_cosine_distance;
use giantstep_core::cget::nonlinear_mass;
use giantstep_core::staircase::{staircase_sequence, Subspace, SPAN_TOL};
use giantstep_core::stats::{log_log_slope, mean, median};
use giantstep_core::MultiIndexTarget;

use crate::config::{Cell, ExperimentConfig, ExperimentKind};
use crate::experiments::{medians_by_d, staircase_report};
use crate::output::{read_manifest, CellRecord, Table};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    /// Cell the check ran on, empty for whole-run checks.
    pub scope: String,
    pub pass: bool,
    pub detail: String,
}

impl Criterion {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        if self.scope.is_empty() {
            format!("{} [{status}] {}", self.name, self.detail)
        } else {
            format!("{} [{status}] {}: {}", self.name, self.scope, self.detail)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The experiment kind has no attached criteria.
    NoCriteria(ExperimentKind),
    Checked(Vec<Criterion>),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        match self {
            Verdict::NoCriteria(_) => true,
            Verdict::Checked(c) => c.iter().all(|c| c.pass),
        }
    }
}

type Check = Result<(bool, String), String>;

fn criterion(name: &str, scope: &str, check: Check) -> Criterion {
    let (pass, detail) = check.unwrap_or_else(|e| (false, e));
    Criterion { name: name.to_string(), scope: scope.to_string(), pass, detail }
}

struct Run {
    dir: PathBuf,
    config: ExperimentConfig,
    cells: Vec<CellRecord>,
}

impl Run {
    fn table(&self, rec: &CellRecord, name: &str) -> Result<Table, CliError> {
        let file = rec.files.get(name).ok_or_else(|| CliError::Missing(format!("manifest lists no `{name}` table")))?;
        let path = self.dir.join(file);
        if !path.exists() {
            return Err(CliError::Missing(format!("{}: listed in the manifest but not found", path.display())));
        }
        Table::read(&path)
    }
}

pub fn verify(manifest_path: &Path) -> Result<Verdict, CliError> {
    let manifest = read_manifest(manifest_path)?;
    let config = ExperimentConfig::from_toml(&manifest.config)?;
    let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let run = Run { dir, config, cells: manifest.cells };
    let kind = run.config.experiment;
    let checks = match kind {
        ExperimentKind::MultiStep => return Ok(Verdict::NoCriteria(kind)),
        ExperimentKind::SingleStep => single_step(&run)?,
        ExperimentKind::Scaling => scaling(&run)?,
        ExperimentKind::SecondStepOrientation => orientation(&run)?,
        ExperimentKind::GeneralizationSweep => generalization(&run)?,
        ExperimentKind::Preprocessing => preprocessing(&run)?,
        ExperimentKind::Cget => cget(&run)?,
        ExperimentKind::Staircase => staircase(&run)?,
    };
    Ok(Verdict::Checked(checks))
}

fn scope(rec: &CellRecord) -> String {
    rec.cell.map(|c| c.to_string()).unwrap_or_default()
}

fn cell_of(rec: &CellRecord) -> Result<Cell, CliError> {
    rec.cell.ok_or_else(|| CliError::Missing("cell record without sizes".into()))
}

/// Rows of `values` whose `key` column equals `want`.
fn select(t: &Table, key: &str, want: &str, values: &str) -> Result<Vec<f64>, String> {
    let keys = t.strings(key)?;
    let v = t.floats(values)?;
    Ok(keys.iter().zip(v).filter(|(k, _)| k.as_str() == want).map(|(_, v)| v).collect())
}

fn single_step(run: &Run) -> Result<Vec<Criterion>, CliError> {
    let mut out = Vec::new();
    let steps = run.config.train.steps;
    for rec in &run.cells {
        let t = run.table(rec, "alignment")?;
        let s = scope(rec);
        let ratios = |step: usize, quantity: &str| -> Result<Vec<f64>, String> {
            let steps_col = t.strings("step")?;
            let q = t.strings("quantity")?;
            let r = t.floats("ratio")?;
            Ok((0..r.len()).filter(|&i| steps_col[i] == step.to_string() && q[i] == quantity && !r[i].is_nan()).map(|i| r[i]).collect())
        };
        out.push(criterion(
            "alignment-gain",
            &s,
            (|| {
                let (before, after) = (median(&ratios(0, "weights")?), median(&ratios(steps, "weights")?));
                Ok((after > before, format!("median teacher-overlap ratio {before:.4} at init, {after:.4} after {steps} step(s)")))
            })(),
        ));
        let leap = rec.summary.get("leap_index").and_then(|v| v.as_u64());
        if leap == Some(1) {
            out.push(criterion(
                "gradient-in-teacher-span",
                &s,
                (|| {
                    let m = median(&ratios(1, "gradient")?);
                    Ok((m >= 0.5, format!("median first-gradient overlap ratio {m:.4} (need ≥ 0.5)")))
                })(),
            ));
        }
        out.push(criterion(
            "every-direction-reached",
            &s,
            (|| {
                let r = t.header.iter().filter(|h| h.starts_with("cos_")).count();
                let steps_col = t.strings("step")?;
                let q = t.strings("quantity")?;
                let mut best = Vec::new();
                for k in 1..=r {
                    let c = t.floats(&format!("cos_{k}"))?;
                    let m = (0..c.len())
                        .filter(|&i| steps_col[i] == steps.to_string() && q[i] == "weights" && !c[i].is_nan())
                        .map(|i| c[i].abs())
                        .fold(0.0, f64::max);
                    best.push(m);
                }
                let ok = best.iter().all(|&b| b >= 0.6);
                Ok((ok, format!("largest |cos| per teacher direction {best:.3?} (need ≥ 0.6)")))
            })(),
        ));
    }
    Ok(out)
}

fn scaling(run: &Run) -> Result<Vec<Criterion>, CliError> {
    let mut tables = Vec::new();
    for rec in &run.cells {
        tables.push(run.table(rec, "scaling")?);
    }
    let mut out = Vec::new();
    for stat in &run.config.options.statistics {
        let check = || -> Check {
            let (mut ds, mut vs) = (Vec::new(), Vec::new());
            for t in &tables {
                ds.extend(select(t, "statistic", stat, "d")?);
                vs.extend(select(t, "statistic", stat, "value")?);
            }
            let (d, m) = medians_by_d(&ds, &vs);
            if d.len() < 2 {
                return Err(format!("needs at least two values of d, found {}", d.len()));
            }
            let slope = log_log_slope(&d, &m);
            let desc = format!("medians {m:.4?} over d = {d:?}, log-log slope {slope:.3}");
            Ok(match stat.as_str() {
                "alignment_ratio" => ((-0.75..=-0.25).contains(&slope), format!("{desc} (need slope in [-0.75, -0.25])")),
                "norm_deviation" => ((-0.8..=-0.2).contains(&slope), format!("{desc} (need slope in [-0.8, -0.2])")),
                _ => (m.windows(2).all(|w| w[1] <= w[0]), format!("{desc} (need non-increasing medians)")),
            })
        };
        out.push(criterion(&format!("scaling-{}", stat.replace('_', "-")), "", check()));
    }
    Ok(out)
}

fn orientation(run: &Run) -> Result<Vec<Criterion>, CliError> {
    let mut out = Vec::new();
    for rec in &run.cells {
        let t = run.table(rec, "orientation")?;
        let s = scope(rec);
        for (label, key, sign) in [("a-positive", "prediction_positive", 1.0), ("a-negative", "prediction_negative", -1.0)] {
            let check = || -> Check {
                let pred: Vec<f64> = rec
                    .summary
                    .get(key)
                    .and_then(|v| serde_json::from_value(v.clone()).ok())
                    .ok_or_else(|| format!("manifest summary lacks `{key}`"))?;
                let signs = t.floats("a_sign")?;
                let (u1, u2) = (t.floats("u_1")?, t.floats("u_2")?);
                let (l1, l2) = (t.floats("label_1")?, t.floats("label_2")?);
                let axis = |x: &[f64], y: &[f64]| {
                    let (sx, sy) = (0..signs.len()).filter(|&i| signs[i] == sign).fold((0.0, 0.0), |(a, b), i| (a + x[i], b + y[i]));
                    let n = (sx * sx + sy * sy).sqrt();
                    vec![sx / n, sy / n]
                };
                let (full, lab) = (axis(&u1, &u2), axis(&l1, &l2));
                let (df, dl) = (axis_cosine_distance(&full, &pred), axis_cosine_distance(&lab, &pred));
                if !df.is_finite() {
                    return Err(format!("no neuron with a_sign = {sign}"));
                }
                Ok((df <= 0.1, format!("axis distance {df:.4} (need ≤ 0.1); label term alone {dl:.4}")))
            };
            out.push(criterion(&format!("orientation-{label}"), &s, check()));
        }
    }
    Ok(out)
}

/// Staircase subspace reached after `steps` giant steps, embedded in `R^d`.
fn staircase_subspace(target: &MultiIndexTarget, steps: usize) -> Option<Subspace> {
    let g = target.link().as_polynomial()?;
    let u = staircase_sequence(&g, steps).pop()?;
    let w = target.teacher();
    let lifted: Vec<Vec<f64>> = u.basis().iter().map(|b| (0..w.ncols()).map(|j| (0..b.len()).map(|k| b[k] * w[(k, j)]).sum()).collect()).collect();
    Some(Subspace::span(target.dim(), &lifted, SPAN_TOL))
}

fn error_checks(run: &Run, rec: &CellRecord, t: &Table, out: &mut Vec<Criterion>) -> Result<(), CliError> {
    let cell = cell_of(rec)?;
    let target = run.config.target(cell.d)?;
    let s = scope(rec);
    let methods = t.strings("method").map_err(CliError::Missing)?;
    let mass = |steps: usize| staircase_subspace(&target, steps).and_then(|u| nonlinear_mass(&target, &u).ok());

    out.push(criterion(
        "lower-bound",
        &s,
        (|| {
            let steps = t.floats("steps")?;
            let errs = t.floats("test_error")?;
            let mut worst = f64::INFINITY;
            let mut checked = 0;
            for i in 0..errs.len() {
                if methods[i].starts_with("kernel") {
                    continue;
                }
                let Some(bound) = mass(steps[i] as usize) else { continue };
                worst = worst.min(errs[i] - bound);
                checked += 1;
            }
            if checked == 0 {
                return Ok((true, "no network predictor with a polynomial target to check".into()));
            }
            Ok((worst >= -0.1, format!("{checked} predictors; smallest error minus nonlinear-mass bound {worst:.4} (need ≥ -0.1)")))
        })(),
    ));

    let has = |m: &str| methods.iter().any(|x| x == m);
    if has("gd") && has("rf") {
        let steps = run.config.train.steps;
        if let (Some(m_gd), Some(m_rf)) = (mass(steps), mass(0)) {
            let check = || -> Check {
                let gd = median(&select(t, "method", "gd", "test_error")?);
                let rf = median(&select(t, "method", "rf", "test_error")?);
                let desc = format!("median error GD {gd:.4}, RF {rf:.4}; bounds {m_gd:.4} vs {m_rf:.4}");
                if m_gd <= 0.5 * m_rf {
                    Ok((gd <= 0.5 * rf, format!("{desc} (learnable gain: need GD ≤ 0.5 RF)")))
                } else if (m_gd - m_rf).abs() < 1e-9 {
                    Ok(((gd - rf).abs() <= 0.2 * rf, format!("{desc} (no learnable gain: need agreement within 20%)")))
                } else {
                    Ok((true, format!("{desc} (partial gain, not checked)")))
                }
            };
            out.push(criterion("feature-learning-vs-random-features", &s, check()));
        }
    }
    Ok(())
}

fn generalization(run: &Run) -> Result<Vec<Criterion>, CliError> {
    let mut out = Vec::new();
    for rec in &run.cells {
        let t = run.table(rec, "generalization")?;
        error_checks(run, rec, &t, &mut out)?;
    }
    Ok(out)
}

fn preprocessing(run: &Run) -> Result<Vec<Criterion>, CliError> {
    let mut out = Vec::new();
    for rec in &run.cells {
        let coeffs = run.table(rec, "coefficients")?;
        let errors = run.table(rec, "generalization")?;
        let s = scope(rec);
        out.push(criterion(
            "coefficient-shrinkage",
            &s,
            (|| {
                let raw = coeffs.floats("raw_norm")?;
                let adj = coeffs.floats("adjusted_norm")?;
                let ratios: Vec<f64> = raw.iter().zip(&adj).map(|(r, a)| r / a).collect();
                let m = median(&ratios);
                Ok((m >= 5.0, format!("median raw/adjusted coefficient norm {m:.2} (need ≥ 5)")))
            })(),
        ));
        out.push(criterion(
            "preprocessing-improves",
            &s,
            (|| {
                let pre = median(&select(&errors, "method", "preprocessed", "test_error")?);
                let van = median(&select(&errors, "method", "vanilla", "test_error")?);
                Ok((pre < van, format!("median error preprocessed {pre:.4}, vanilla {van:.4}")))
            })(),
        ));
    }
    Ok(out)
}

fn cget(run: &Run) -> Result<Vec<Criterion>, CliError> {
    let mut out = Vec::new();
    for rec in &run.cells {
        let t = run.table(rec, "cget")?;
        out.push(criterion(
            "ck-cl-equivalence",
            &scope(rec),
            (|| {
                let (ck, cl) = (mean(&t.floats("err_ck")?), mean(&t.floats("err_cl")?));
                let gap = (ck - cl).abs() / ck;
                Ok((gap <= 0.05, format!("mean error CK {ck:.4}, CL {cl:.4}, relative gap {gap:.4} (need ≤ 0.05)")))
            })(),
        ));
    }
    Ok(out)
}

fn staircase(run: &Run) -> Result<Vec<Criterion>, CliError> {
    let rec = run.cells.first().ok_or_else(|| CliError::Missing("manifest has no records".into()))?;
    let file = rec.files.get("staircase").ok_or_else(|| CliError::Missing("manifest lists no `staircase` file".into()))?;
    let path = run.dir.join(file);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Missing(format!("{}: {e}", path.display())))?;
    let stored: Vec<serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| CliError::Missing(format!("{}: not a staircase report: {e}", path.display())))?;
    let mut out = Vec::new();
    for entry in &stored {
        let link = entry["target"].as_str().unwrap_or_default().to_string();
        let t_max = entry["t_max"].as_u64().unwrap_or(0) as usize;
        let check = match staircase_report(&link, t_max) {
            Ok(fresh) => Ok((fresh == *entry, if fresh == *entry { "stored sequence reproduces".into() } else { "stored sequence differs from a fresh computation".into() })),
            Err(e) => Err(e),
        };
        out.push(criterion("staircase-sequence", &link, check));
    }
    Ok(out)
}

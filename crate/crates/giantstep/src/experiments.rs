//! Runners for each experiment kind. Every (cell, seed) pair is independent;
//! pairs run on the rayon pool and are merged back in config order, so the
//! output is byte-identical for any thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use giantstep_core::analysis::{
    alignment_report, norm_concentration_check, norm_constant_mc, predicted_second_step_orientation, projected_directions, spike_bulk,
    NormConstant,
};
use giantstep_core::cget::{compare_ck_cl_single, uniform_grid, CgetConfig};
use giantstep_core::hermite::hermite_coeffs;
use giantstep_core::network::{batch_seed, gradient_matrix, gradient_with_labels, init_symmetric, kernel_ridge_baseline, preprocess_labels, train_first_layer, HermiteTable};
use giantstep_core::pipeline::{run_pipeline, PipelineConfig};
use giantstep_core::rng::{derive_seed, Purpose};
use giantstep_core::staircase::{is_staircase_learnable, relevant_subspace, staircase_sequence};
use giantstep_core::stats::median;
use giantstep_core::target::{leap_index, sample_dataset};
use giantstep_core::{Dataset, Mat, MultiIndexTarget, Vector};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_polynomial, Cell, ExperimentConfig, ExperimentKind};
use crate::output::{git_hash, num, write_manifest, write_npy, CellRecord, Manifest, Table, SCHEMA_VERSION};
use crate::CliError;

/// Everything a cell needs that does not depend on the seed.
struct CellContext {
    cell: Cell,
    target: MultiIndexTarget,
    leap: Option<usize>,
    norm_constant: Option<NormConstant>,
    mu1: f64,
    predictions: Option<(Vec<f64>, Vec<f64>)>,
    summary: BTreeMap<String, Value>,
}

#[derive(Default)]
struct SeedOutput {
    tables: Vec<(&'static str, Table)>,
    arrays: Vec<(String, Mat)>,
}

/// Outcome of [`run`]: the manifest and where it was written.
pub struct RunOutput {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

pub fn run(cfg: &ExperimentConfig, output_dir: Option<&Path>) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    let dir = output_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;

    let cells = if cfg.experiment == ExperimentKind::Staircase {
        vec![run_staircase(cfg, &dir)?]
    } else {
        run_cells(cfg, &dir)?
    };

    let mut echo = cfg.clone();
    echo.output_dir = dir.clone();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment.to_string(),
        git_hash: git_hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        config: echo.to_toml(),
        cells,
    };
    let manifest_path = write_manifest(&dir, &manifest)?;
    Ok(RunOutput { manifest, manifest_path })
}

fn run_cells(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<CellRecord>, CliError> {
    let cells = cfg.cells()?;
    let contexts: Vec<CellContext> = cells.iter().map(|&c| cell_context(cfg, c)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, u64)> = (0..contexts.len()).flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s))).collect();
    let outputs: Vec<Result<SeedOutput, CliError>> = jobs.par_iter().map(|&(i, seed)| run_seed(cfg, &contexts[i], seed)).collect();

    let mut records = Vec::new();
    let mut outputs = outputs.into_iter();
    for ctx in contexts {
        let mut merged: Vec<(&'static str, Table)> = Vec::new();
        let mut files = BTreeMap::new();
        for _ in &cfg.seeds {
            let out = outputs.next().expect("one output per job")?;
            for (name, table) in out.tables {
                match merged.iter_mut().find(|(n, _)| *n == name) {
                    Some((_, t)) => t.extend(table),
                    None => merged.push((name, table)),
                }
            }
            for (file, m) in out.arrays {
                write_npy(&dir.join(&file), &m)?;
                files.insert(file.trim_end_matches(".npy").to_string(), file);
            }
        }
        for (name, table) in merged {
            let file = format!("{name}_{}.csv", ctx.cell.tag());
            table.write(&dir.join(&file))?;
            files.insert(name.to_string(), file);
        }
        records.push(CellRecord { cell: Some(ctx.cell), files, summary: ctx.summary });
    }
    Ok(records)
}

fn cell_context(cfg: &ExperimentConfig, cell: Cell) -> Result<CellContext, CliError> {
    let target = cfg.target(cell.d)?;
    let leap = leap_index(&target).ok();
    let student = cfg.activation();
    let mu1 = hermite_coeffs(&student, 1).map_err(|e| CliError::Config(format!("train.activation: {e}")))?.coeffs[1];
    let tc = cfg.train_config(cell, cfg.seeds[0], leap);
    let eta = tc.eta_value();
    let mut summary = BTreeMap::new();
    summary.insert("eta".to_string(), json!(eta));
    summary.insert("leap_index".to_string(), json!(leap));
    summary.insert("target_variance".to_string(), json!(target.variance()));

    let mut norm_constant = None;
    if cfg.experiment == ExperimentKind::Scaling && cfg.options.statistics.iter().any(|s| s == "norm_deviation") {
        let samples = cfg.options.mc_samples.unwrap_or(1_000_000);
        let c = norm_constant_mc(&student, &target, cell.n, cell.p, samples, derive_seed(cfg.seeds[0], Purpose::MonteCarlo, cell.d as u64))
            .map_err(|e| numerical(cell, None, e))?;
        summary.insert("norm_constant_quadratic".to_string(), json!(c.quadratic));
        summary.insert("norm_constant_linear".to_string(), json!(c.linear));
        norm_constant = Some(c);
    }

    let mut predictions = None;
    if cfg.experiment == ExperimentKind::SecondStepOrientation {
        let normalized = eta / cell.p as f64;
        let pos = predicted_second_step_orientation(&student, 1.0, normalized, &target);
        let neg = predicted_second_step_orientation(&student, -1.0, normalized, &target);
        let (pos, neg) = match (pos, neg) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Err(CliError::Config(format!("field `target`: {e}"))),
        };
        summary.insert("eta_normalized".to_string(), json!(normalized));
        summary.insert("prediction_positive".to_string(), json!(pos));
        summary.insert("prediction_negative".to_string(), json!(neg));
        predictions = Some((pos, neg));
    }
    Ok(CellContext { cell, target, leap, norm_constant, mu1, predictions, summary })
}

fn numerical(cell: Cell, seed: Option<u64>, e: giantstep_core::Error) -> CliError {
    let at = match seed {
        Some(s) => format!("{cell} seed={s}"),
        None => cell.to_string(),
    };
    CliError::Numerical { cell: at, message: e.to_string() }
}

fn run_seed(cfg: &ExperimentConfig, ctx: &CellContext, seed: u64) -> Result<SeedOutput, CliError> {
    let wrap = |e| numerical(ctx.cell, Some(seed), e);
    match cfg.experiment {
        ExperimentKind::SingleStep | ExperimentKind::MultiStep => trajectory(cfg, ctx, seed).map_err(wrap),
        ExperimentKind::Scaling => scaling(cfg, ctx, seed).map_err(wrap),
        ExperimentKind::SecondStepOrientation => orientation(cfg, ctx, seed).map_err(wrap),
        ExperimentKind::GeneralizationSweep => generalization(cfg, ctx, seed).map_err(wrap),
        ExperimentKind::Preprocessing => preprocessing(cfg, ctx, seed).map_err(wrap),
        ExperimentKind::Cget => cget(cfg, ctx, seed).map_err(wrap),
        ExperimentKind::Staircase => unreachable!("staircase has no cells"),
    }
}

type CoreResult<T> = giantstep_core::Result<T>;

fn cell_columns(cell: Cell, seed: u64) -> Vec<String> {
    vec![cell.d.to_string(), cell.n.to_string(), cell.p.to_string(), seed.to_string()]
}

pub fn alignment_header(r: usize) -> Vec<String> {
    let mut h: Vec<String> = ["d", "n", "p", "seed", "step", "quantity", "neuron", "a"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=r).map(|k| format!("cos_{k}")));
    h.push("ratio".into());
    h.push("norm".into());
    h
}

#[allow(clippy::too_many_arguments)]
fn push_alignment(table: &mut Table, ctx: &CellContext, seed: u64, step: usize, quantity: &str, m: &Mat, a: &Vector) -> CoreResult<()> {
    let rep = alignment_report(m, &ctx.target)?;
    let r = ctx.target.num_dirs();
    for (i, n) in rep.neurons.iter().enumerate() {
        let mut row = cell_columns(ctx.cell, seed);
        row.extend([step.to_string(), quantity.to_string(), i.to_string(), num(a[i])]);
        match &n.cosines {
            Some(c) => row.extend(c.iter().map(|&x| num(x))),
            None => row.extend((0..r).map(|_| "NaN".to_string())),
        }
        row.push(num(n.ratio.unwrap_or(f64::NAN)));
        row.push(num(n.norm));
        table.push(row);
    }
    Ok(())
}

fn trajectory(cfg: &ExperimentConfig, ctx: &CellContext, seed: u64) -> CoreResult<SeedOutput> {
    let mut tc = cfg.train_config(ctx.cell, seed, ctx.leap);
    tc.keep_snapshots = true;
    let mut net = init_symmetric(tc.p, tc.d, seed, tc.second_layer_dist, tc.activation.clone())?;
    let a0 = net.second_layer.clone();
    let trace = train_first_layer(&mut net, &ctx.target, &tc)?;
    // Second layer in force after step t (retrained or a⁰).
    let a_after = |t: usize| if t == 0 || trace.second_layers.is_empty() { &a0 } else { &trace.second_layers[t - 1] };

    let mut table = Table::with_header(alignment_header(ctx.target.num_dirs()));
    let mut arrays = Vec::new();
    for (t, w) in trace.snapshots.iter().enumerate() {
        push_alignment(&mut table, ctx, seed, t, "weights", w, a_after(t))?;
        if cfg.options.dump_weights {
            arrays.push((format!("weights_{}_s{seed}_t{t}.npy", ctx.cell.tag()), w.clone()));
        }
    }
    for (t, g) in trace.gradients.iter().enumerate() {
        push_alignment(&mut table, ctx, seed, t + 1, "gradient", g, a_after(t))?;
    }
    Ok(SeedOutput { tables: vec![("alignment", table)], arrays })
}

fn scaling(cfg: &ExperimentConfig, ctx: &CellContext, seed: u64) -> CoreResult<SeedOutput> {
    let stats = &cfg.options.statistics;
    let mut table = Table::new(&["d", "n", "p", "seed", "statistic", "value"]);
    let mut push = |name: &str, v: f64| {
        let mut row = cell_columns(ctx.cell, seed);
        row.extend([name.to_string(), num(v)]);
        table.push(row);
    };
    let mut tc = cfg.train_config(ctx.cell, seed, ctx.leap);
    tc.keep_snapshots = true;
    let mut net = init_symmetric(tc.p, tc.d, seed, tc.second_layer_dist, tc.activation.clone())?;
    let init = net.clone();
    let trace = train_first_layer(&mut net, &ctx.target, &tc)?;
    let w1 = trace.snapshots.get(1).unwrap_or(&init.first_layer);
    for s in stats {
        match s.as_str() {
            "alignment_ratio" => push(s, alignment_report(&net.first_layer, &ctx.target)?.median_ratio()),
            "norm_deviation" => {
                let c = ctx.norm_constant.as_ref().expect("computed for scaling cells");
                push(s, norm_concentration_check(w1, &init.second_layer, trace.eta, c)?.median_deviation());
            }
            "delta_op" | "delta_overlap" => {
                let batch = sample_dataset(&ctx.target, tc.n, batch_seed(seed, 0))?;
                let g = gradient_matrix(&init, &batch);
                let sb = spike_bulk(&g, &init.second_layer, &batch, ctx.mu1)?;
                let (p, d) = (tc.p as f64, tc.d as f64);
                if s == "delta_op" {
                    push(s, p.sqrt() * sb.delta_op_norm());
                } else {
                    push(s, p * d.sqrt() * sb.delta_teacher_overlap(&ctx.target));
                }
            }
            _ => unreachable!("validated"),
        }
    }
    Ok(SeedOutput { tables: vec![("scaling", table)], ..Default::default() })
}

fn orientation(cfg: &ExperimentConfig, ctx: &CellContext, seed: u64) -> CoreResult<SeedOutput> {
    let (pos, neg) = ctx.predictions.as_ref().expect("computed for orientation cells");
    let mut tc = cfg.train_config(ctx.cell, seed, ctx.leap);
    tc.keep_snapshots = true;
    let mut net = init_symmetric(tc.p, tc.d, seed, tc.second_layer_dist, tc.activation.clone())?;
    let trace = train_first_layer(&mut net, &ctx.target, &tc)?;
    // Second gradient split into its label term, the part the prediction covers.
    let mut after_first = net.clone();
    after_first.first_layer = trace.snapshots[1].clone();
    if let Some(a) = trace.second_layers.first() {
        after_first.second_layer = a.clone();
    }
    let batch = sample_dataset(&ctx.target, tc.n, trace.batch_seeds[1])?;
    let label_term = gradient_with_labels(&after_first, &batch.inputs, &batch.labels)
        - gradient_with_labels(&after_first, &batch.inputs, &Vector::zeros(tc.n));
    let full = projected_directions(&trace.gradients[1], &ctx.target);
    let label = projected_directions(&label_term, &ctx.target);

    let mut table = Table::new(&ORIENTATION_HEADER);
    let a = &after_first.second_layer;
    for i in 0..a.len() {
        let (Some(u), Some(l)) = (&full[i], &label[i]) else { continue };
        let sign = a[i].signum();
        if sign == 0.0 {
            continue;
        }
        let pred = if sign > 0.0 { pos } else { neg };
        let mut row = cell_columns(ctx.cell, seed);
        row.extend([i.to_string(), num(sign)]);
        for v in [u, l] {
            let c = v[0] * pred[0] + v[1] * pred[1];
            let s = if c < 0.0 { -1.0 } else { 1.0 };
            row.extend([num(s * v[0]), num(s * v[1]), num(c.abs())]);
        }
        table.push(row);
    }
    Ok(SeedOutput { tables: vec![("orientation", table)], ..Default::default() })
}

pub const ORIENTATION_HEADER: [&str; 12] =
    ["d", "n", "p", "seed", "neuron", "a_sign", "u_1", "u_2", "cos_to_prediction", "label_1", "label_2", "label_cos_to_prediction"];

fn error_row(ctx: &CellContext, seed: u64, method: &str, steps: usize, err: f64, se: f64) -> Vec<String> {
    let mut row = cell_columns(ctx.cell, seed);
    row.extend([method.to_string(), steps.to_string(), num(err), num(se)]);
    row
}

const ERROR_HEADER: [&str; 8] = ["d", "n", "p", "seed", "method", "steps", "test_error", "test_se"];

fn generalization(cfg: &ExperimentConfig, ctx: &CellContext, seed: u64) -> CoreResult<SeedOutput> {
    let mut table = Table::new(&ERROR_HEADER);
    for m in &cfg.options.methods {
        let mut tc = cfg.train_config(ctx.cell, seed, ctx.leap);
        tc.keep_snapshots = false;
        let pipeline = |tc| {
            let mut pc = PipelineConfig::new(tc);
            pc.test_samples = cfg.options.test_samples;
            run_pipeline(&ctx.target, &pc)
        };
        match m.as_str() {
            "gd" => {
                tc.preprocess_degree = None;
                let steps = tc.steps;
                let o = pipeline(tc)?;
                table.push(error_row(ctx, seed, m, steps, o.test_error, o.test_se));
            }
            "rf" => {
                tc.steps = 0;
                tc.preprocess_degree = None;
                let o = pipeline(tc)?;
                table.push(error_row(ctx, seed, m, 0, o.test_error, o.test_se));
            }
            "preprocessed" => {
                tc.preprocess_degree = Some(cfg.options.preprocess_degree);
                let steps = tc.steps;
                let o = pipeline(tc)?;
                table.push(error_row(ctx, seed, m, steps, o.test_error, o.test_se));
            }
            k => {
                let q: u32 = k.trim_start_matches("kernel").parse().expect("validated");
                let train = sample_dataset(&ctx.target, ctx.cell.n, derive_seed(seed, Purpose::Ridge, 0))?;
                let test = sample_dataset(&ctx.target, cfg.options.test_samples, derive_seed(seed, Purpose::Test, 0))?;
                let err = kernel_ridge_baseline(&train, q, cfg.train.lambda, &test)?;
                table.push(error_row(ctx, seed, m, 0, err, f64::NAN));
            }
        }
    }
    Ok(SeedOutput { tables: vec![("generalization", table)], ..Default::default() })
}

fn table_norm(t: &HermiteTable) -> f64 {
    t.entries.iter().map(|(_, c)| c * c).sum::<f64>().sqrt()
}

fn preprocessing(cfg: &ExperimentConfig, ctx: &CellContext, seed: u64) -> CoreResult<SeedOutput> {
    let k = cfg.options.preprocess_degree;
    let data = sample_dataset(&ctx.target, ctx.cell.n, derive_seed(seed, Purpose::Ridge, 0))?;
    let (adjusted, raw) = preprocess_labels(&data, k);
    let (_, again) = preprocess_labels(&Dataset { inputs: data.inputs.clone(), labels: adjusted }, k);
    let mut coeffs = Table::new(&["d", "n", "p", "seed", "degree", "raw_norm", "adjusted_norm"]);
    let mut row = cell_columns(ctx.cell, seed);
    row.extend([k.to_string(), num(table_norm(&raw)), num(table_norm(&again))]);
    coeffs.push(row);

    let mut errors = Table::new(&ERROR_HEADER);
    for (name, degree) in [("vanilla", None), ("preprocessed", Some(k))] {
        let mut tc = cfg.train_config(ctx.cell, seed, ctx.leap);
        tc.keep_snapshots = false;
        tc.preprocess_degree = degree;
        let steps = tc.steps;
        let mut pc = PipelineConfig::new(tc);
        pc.test_samples = cfg.options.test_samples;
        let o = run_pipeline(&ctx.target, &pc)?;
        errors.push(error_row(ctx, seed, name, steps, o.test_error, o.test_se));
    }
    Ok(SeedOutput { tables: vec![("coefficients", coeffs), ("generalization", errors)], ..Default::default() })
}

fn cget(cfg: &ExperimentConfig, ctx: &CellContext, seed: u64) -> CoreResult<SeedOutput> {
    let tc = cfg.train_config(ctx.cell, seed, ctx.leap);
    let cc = CgetConfig {
        train: tc,
        grid: uniform_grid(cfg.options.grid_knots, 4.0),
        mc_samples: cfg.options.mc_samples,
        test_samples: cfg.options.test_samples,
    };
    let r = compare_ck_cl_single(&ctx.target, &cc, cfg.train.lambda, seed)?;
    let mut table = Table::new(&["d", "n", "p", "seed", "err_ck", "err_cl", "spike_cosine", "a_norm", "a_inf_scaled", "max_clipped_fraction"]);
    let mut row = cell_columns(ctx.cell, seed);
    row.extend([
        num(r.err_ck),
        num(r.err_cl),
        num(r.spike_cosine.unwrap_or(f64::NAN)),
        num(r.a_norm),
        num(r.a_inf_scaled),
        num(r.max_clipped_fraction),
    ]);
    table.push(row);
    Ok(SeedOutput { tables: vec![("cget", table)], ..Default::default() })
}

/// JSON description of the staircase sequence of one polynomial link.
pub fn staircase_report(link: &str, t_max: usize) -> Result<Value, String> {
    let g = parse_polynomial(link)?;
    let seq = staircase_sequence(&g, t_max);
    let steps: Vec<Value> = seq.iter().enumerate().map(|(t, u)| json!({ "t": t, "dim": u.dim(), "basis": u.basis() })).collect();
    Ok(json!({
        "target": link,
        "num_vars": g.num_vars(),
        "t_max": t_max,
        "learnable": is_staircase_learnable(&g),
        "relevant_dim": relevant_subspace(&g).dim(),
        "sequence": steps,
    }))
}

fn staircase_targets(cfg: &ExperimentConfig) -> Vec<String> {
    let mut targets = cfg.options.targets.clone();
    if let Some(l) = cfg.target.as_ref().and_then(|t| t.link.clone()) {
        targets.push(l);
    }
    targets
}

fn run_staircase(cfg: &ExperimentConfig, dir: &Path) -> Result<CellRecord, CliError> {
    let reports: Vec<Value> = staircase_targets(cfg)
        .iter()
        .map(|t| staircase_report(t, cfg.options.t_max))
        .collect::<Result<_, _>>()
        .map_err(CliError::Config)?;
    let file = "staircase.json".to_string();
    let text = serde_json::to_string_pretty(&reports).expect("json serializes");
    std::fs::write(dir.join(&file), text).map_err(|e| CliError::Io(e.to_string()))?;
    let mut files = BTreeMap::new();
    files.insert("staircase".to_string(), file);
    let mut summary = BTreeMap::new();
    let learnable: Vec<bool> = reports.iter().map(|r| r["learnable"].as_bool().unwrap_or(false)).collect();
    summary.insert("learnable".to_string(), json!(learnable));
    Ok(CellRecord { cell: None, files, summary })
}

/// Median of a column per distinct `d`, in increasing `d`.
pub fn medians_by_d(ds: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut keys: Vec<f64> = ds.to_vec();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    let meds = keys
        .iter()
        .map(|k| {
            let v: Vec<f64> = ds.iter().zip(values).filter(|(d, _)| *d == k).map(|(_, v)| *v).collect();
            median(&v)
        })
        .collect();
    (keys, meds)
}

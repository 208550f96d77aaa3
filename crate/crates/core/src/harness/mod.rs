//! Experiment runner and table emitters.
//!
//! [`run_experiment`] trains every configured method under every seed,
//! keeps the best checkpoint of each run by validation AUC-FG and writes
//! the aggregated table. The other entry points produce plain CSV data for
//! loss curves, decision-boundary grids and the tau sweep.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{check_method_name, DatasetSource, ExperimentConfig, Method, DEFAULT_EXPERIMENT};

use crate::data::{self, Sample, SynthConfig};
use crate::error::{Error, Result};
use crate::losses::{ce_loss, pce_loss, Label, Probabilities, Tau};
use crate::metrics::{aggregate_runs, MetricReport};
use crate::model::{evaluate_auc, train, Mlp, ValidationPoint};
use crate::objective::{ObjectiveConfig, Strategy};

pub const RESULTS_FILE: &str = "results.csv";
pub const TAU_SWEEP_FILE: &str = "tausweep.csv";
pub const RESULTS_HEADER: &str = "method,metric,mean,std,per_seed";

/// Outcome of one (method, seed) training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    pub best_iteration: u64,
    /// Validation AUC-FG of the best checkpoint.
    pub auc_fg: f64,
    /// Coarse validation AUC of the best checkpoint, when the validation
    /// set has both negatives and positives.
    pub auc: Option<f64>,
    pub history: Vec<ValidationPoint>,
    pub best_params: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub report: MetricReport,
}

/// One row per method and metric, in method order then metric order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn get(&self, method: &str, metric: &str) -> Option<&MetricReport> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.report.name == metric)
            .map(|r| &r.report)
    }

    /// The method with the highest mean for `metric`; the first listed wins ties.
    pub fn best(&self, metric: &str) -> Option<&str> {
        let mut best: Option<&ResultRow> = None;
        for r in self.rows.iter().filter(|r| r.report.name == metric) {
            if best.is_none_or(|b| r.report.mean > b.report.mean) {
                best = Some(r);
            }
        }
        best.map(|r| r.method.as_str())
    }

    /// Fixed header, six decimals, per-seed values separated by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{RESULTS_HEADER}\n");
        for r in &self.rows {
            let per: Vec<String> = r.report.per_run.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{}",
                r.method,
                r.report.name,
                r.report.mean,
                r.report.std,
                per.join(";")
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub table: ResultsTable,
    /// Sorted by method (config order) then seed (config order).
    pub runs: Vec<RunRecord>,
}

/// Loads or generates the training and validation sets.
pub fn load_datasets(source: &DatasetSource) -> Result<(Vec<Sample>, Vec<Sample>)> {
    match source {
        DatasetSource::Synth { config, val_seed } => {
            let train = data::generate(config)?;
            let val = data::generate(&SynthConfig {
                seed: *val_seed,
                noise_rate: 0.0,
                ..*config
            })?;
            Ok((train, val))
        }
        DatasetSource::Files { train, val } => Ok((data::read_dataset(train)?, data::read_dataset(val)?)),
    }
}

/// Runs every method under every seed and writes, below the output
/// directory, `results.csv`, the datasets used, and per run a `log.csv`,
/// each periodic checkpoint, and `best.bin`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_methods(cfg, &cfg.methods, RESULTS_FILE)
}

/// Methods compared by [`emit_tau_sweep`]: the cross-entropy baseline
/// `U-Ones`, then PU-RM at each tau, named `PU-RM@<tau>`.
pub fn tau_sweep_methods(taus: &[Tau]) -> Vec<Method> {
    let mut methods = vec![Method {
        name: "U-Ones".into(),
        objective: ObjectiveConfig::new(Strategy::UOnes),
    }];
    methods.extend(taus.iter().map(|&tau| Method {
        name: format!("PU-RM@{}", tau.get()),
        objective: ObjectiveConfig::new(Strategy::PuRm).with_tau(tau),
    }));
    methods
}

/// The tau sweep over the dataset and training template of `cfg`; the
/// configured methods are ignored. Writes `tausweep.csv`.
pub fn emit_tau_sweep(cfg: &ExperimentConfig, taus: &[Tau]) -> Result<ExperimentOutcome> {
    if taus.is_empty() {
        return Err(Error::InvalidInput("tau sweep needs at least one tau".into()));
    }
    let methods = tau_sweep_methods(taus);
    let mut names = std::collections::BTreeSet::new();
    if let Some(dup) = methods.iter().find(|m| !names.insert(&m.name)) {
        return Err(Error::InvalidInput(format!("tau list repeats `{}`", dup.name)));
    }
    run_methods(cfg, &methods, TAU_SWEEP_FILE)
}

fn run_methods(cfg: &ExperimentConfig, methods: &[Method], results_file: &str) -> Result<ExperimentOutcome> {
    let cfg = ExperimentConfig {
        methods: methods.to_vec(),
        ..cfg.clone()
    };
    cfg.validate()?;
    let (train_set, val_set) = load_datasets(&cfg.dataset)?;
    let out = &cfg.output;
    create_dir(out)?;
    data::write_dataset(&train_set, &out.join("train.jsonl"))?;
    data::write_dataset(&val_set, &out.join("val.jsonl"))?;

    let jobs: Vec<(&Method, u64)> = methods
        .iter()
        .flat_map(|m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(method, seed)| {
            run_one(&cfg, method, seed, &train_set, &val_set)
                .map_err(|e| e.context(format!("method={} seed={seed}", method.name)))
        })
        .collect::<Result<Vec<_>>>()?;

    let table = aggregate(methods, &runs)?;
    write_atomic(&out.join(results_file), table.to_csv().as_bytes())?;
    Ok(ExperimentOutcome { table, runs })
}

fn run_one(
    cfg: &ExperimentConfig,
    method: &Method,
    seed: u64,
    train_set: &[Sample],
    val: &[Sample],
) -> Result<RunRecord> {
    let run_cfg = cfg.run_config(method, seed);
    let outcome = train(&run_cfg, train_set, val)?;
    let dir = run_dir(&cfg.output, &method.name, seed);
    create_dir(&dir)?;
    for c in &outcome.checkpoints {
        c.save(&dir.join(format!("ckpt-{:08}.bin", c.iteration)))?;
    }
    let best = outcome.best_checkpoint();
    best.save(&dir.join("best.bin"))?;

    let mut log = String::from("iteration,auc_fg,train_loss,best\n");
    for (i, p) in outcome.history.iter().enumerate() {
        let _ = writeln!(
            log,
            "{},{:.6},{:.6},{}",
            p.iteration,
            p.auc_fg,
            p.train_loss,
            u8::from(i == outcome.best)
        );
    }
    let log_path = dir.join("log.csv");
    fs::write(&log_path, log).map_err(|e| Error::io(&log_path, e))?;

    let auc = match evaluate_auc(&best.params, val) {
        Ok(v) => Some(v),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(RunRecord {
        method: method.name.clone(),
        seed,
        best_iteration: best.iteration,
        auc_fg: outcome.best_point().auc_fg,
        auc,
        history: outcome.history.clone(),
        best_params: best.params.clone(),
    })
}

/// Directory holding the artifacts of one run.
pub fn run_dir(output: &Path, method: &str, seed: u64) -> PathBuf {
    output.join("runs").join(method).join(format!("seed-{seed}"))
}

fn aggregate(methods: &[Method], runs: &[RunRecord]) -> Result<ResultsTable> {
    let mut rows = Vec::new();
    for m in methods {
        let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.method == m.name).collect();
        let fg: Vec<f64> = mine.iter().map(|r| r.auc_fg).collect();
        rows.push(ResultRow {
            method: m.name.clone(),
            report: aggregate_runs("auc_fg", &fg)?,
        });
        if let Some(auc) = mine.iter().map(|r| r.auc).collect::<Option<Vec<f64>>>() {
            rows.push(ResultRow {
                method: m.name.clone(),
                report: aggregate_runs("auc", &auc)?,
            });
        }
    }
    Ok(ResultsTable { rows })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("`{}` has no file name", path.display())))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp-{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Cross-entropy and PCE of the positive class over a grid of confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurves {
    pub taus: Vec<Tau>,
    /// Each row is `s`, CE, then one PCE value per tau.
    pub rows: Vec<Vec<f64>>,
}

impl LossCurves {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,ce");
        for t in &self.taus {
            let _ = write!(out, ",pce_{}", t.get());
        }
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Samples `s` at `step, 2 step, ...` up to and including 1. When `step`
/// divides 1 the grid points are `k / n`, so values such as 0.3 land exactly.
pub fn emit_loss_curves(taus: &[Tau], step: f64) -> Result<LossCurves> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidInput(format!("grid step must lie in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round();
    let grid: Vec<f64> = if (n * step - 1.0).abs() < 1e-9 {
        (1..=n as u64).map(|k| k as f64 / n).collect()
    } else {
        let mut g: Vec<f64> = (1..).map(|k| k as f64 * step).take_while(|s| *s < 1.0).collect();
        g.push(1.0);
        g
    };
    let rows = grid
        .into_iter()
        .map(|s| {
            let p = Probabilities::from_positive(s)?;
            let mut row = vec![s, ce_loss(p, Label::Positive)];
            row.extend(taus.iter().map(|&t| pce_loss(p, Label::Positive, t)));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(LossCurves {
        taus: taus.to_vec(),
        rows,
    })
}

/// Rectangle in feature space covered by a boundary grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            x_min: -5.0,
            x_max: 5.0,
            y_min: -4.0,
            y_max: 4.0,
        }
    }
}

/// `p_pos` on a `resolution x resolution` lattice, x varying fastest.
/// Each point is `[x, y, p_pos]`.
pub fn emit_boundary_grid(params: &Mlp, bounds: Bounds, resolution: usize) -> Result<Vec<[f64; 3]>> {
    if params.input_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "boundary grids need a 2-d input model, this one takes {} features",
            params.input_dim()
        )));
    }
    let Bounds {
        x_min,
        x_max,
        y_min,
        y_max,
    } = bounds;
    let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
    if resolution < 2 || !finite || x_min >= x_max || y_min >= y_max {
        return Err(Error::InvalidInput(format!(
            "need resolution >= 2 and a non-empty rectangle, got {resolution} and {bounds:?}"
        )));
    }
    let axis = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut grid = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        let y = axis(y_min, y_max, j);
        for i in 0..resolution {
            let x = axis(x_min, x_max, i);
            grid.push([x, y, params.forward(&[x, y])?.1.p_pos()]);
        }
    }
    Ok(grid)
}

pub fn boundary_csv(grid: &[[f64; 3]]) -> String {
    let mut out = String::from("x,y,p_pos\n");
    for [x, y, p] in grid {
        let _ = writeln!(out, "{x:.6},{y:.6},{p:.6}");
    }
    out
}

//! Cross-validation and grid search over `(scheme, C, gamma_k, gamma_s)`,
//! plus the weighted-vs-plain MLP comparison.
//!
//! Weights (and standardization statistics, when enabled) are always
//! computed from the training part of a fold only. Each grid point derives
//! its solver and weight seeds from the master seeds and its own parameter
//! values, so a point produces the same result whatever else is in the grid
//! and in whatever order points are evaluated.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::{has_both_classes, kfold, Dataset, FoldAssignment, Standardizer, Task};
use crate::error::{Result, WlossError};
use crate::kernel::{gram, GramCache};
use crate::mlp::{mae, train_mlp, MlpArch, TrainConfig};
use crate::rng::{
    derive_seed, seeded_rng, DEFAULT_FOLD_SEED, DEFAULT_SHUFFLE_SEED, DEFAULT_SOLVER_SEED,
    DEFAULT_WEIGHT_SEED,
};
use crate::svc::{train_with_gram, PairSelection, SvcParams};
use crate::weighting::{
    density, make_weights, signed_density, DensityVector, SampleWeights, Scheme,
};

/// `2 TP / (2 TP + FP + FN)` for the `positive` label; 0 when nothing is
/// predicted or labelled positive.
pub fn f1(preds: &[f64], truth: &[f64], positive: f64) -> Result<f64> {
    if preds.len() != truth.len() {
        return Err(WlossError::LengthMismatch {
            what: "predictions",
            expected: truth.len(),
            found: preds.len(),
        });
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &t) in preds.iter().zip(truth) {
        match (p == positive, t == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    Ok(if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub shuffle: u64,
    pub fold: u64,
    pub solver: u64,
    pub weights: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            shuffle: DEFAULT_SHUFFLE_SEED,
            fold: DEFAULT_FOLD_SEED,
            solver: DEFAULT_SOLVER_SEED,
            weights: DEFAULT_WEIGHT_SEED,
        }
    }
}

/// Solver settings shared by every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub iter_multiplier: f64,
    pub max_iterations: Option<u64>,
    pub early_stop: bool,
    pub kkt_tolerance: f64,
    pub pair_selection: PairSelection,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let p = SvcParams::new(1.0, 1.0);
        SolverSettings {
            iter_multiplier: p.iter_multiplier,
            max_iterations: p.max_iterations,
            early_stop: p.early_stop,
            kkt_tolerance: p.kkt_tolerance,
            pair_selection: p.pair_selection,
        }
    }
}

impl SolverSettings {
    pub fn params(&self, c: f64, gamma_k: f64, seed: u64) -> SvcParams {
        SvcParams {
            c,
            gamma_k,
            iter_multiplier: self.iter_multiplier,
            max_iterations: self.max_iterations,
            early_stop: self.early_stop,
            kkt_tolerance: self.kkt_tolerance,
            pair_selection: self.pair_selection,
            seed,
        }
    }
}

pub const DEFAULT_C: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_GAMMA_K: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
pub const DEFAULT_GAMMA_S: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub c_values: Vec<f64>,
    pub gamma_k_values: Vec<f64>,
    /// Only used by density schemes.
    pub gamma_s_values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub folds: usize,
    pub seeds: Seeds,
    pub solver: SolverSettings,
    pub standardize: bool,
    pub normalize_weights: bool,
    pub positive_label: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            c_values: DEFAULT_C.to_vec(),
            gamma_k_values: DEFAULT_GAMMA_K.to_vec(),
            gamma_s_values: DEFAULT_GAMMA_S.to_vec(),
            schemes: vec![Scheme::None],
            folds: 5,
            seeds: Seeds::default(),
            solver: SolverSettings::default(),
            standardize: false,
            normalize_weights: false,
            positive_label: 1.0,
        }
    }
}

/// One hyper-parameter combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub scheme: Scheme,
    pub c: f64,
    pub gamma_k: f64,
    pub gamma_s: Option<f64>,
}

impl GridPoint {
    fn key(&self) -> [u64; 4] {
        [
            Scheme::ALL.iter().position(|s| *s == self.scheme).unwrap() as u64,
            self.c.to_bits(),
            self.gamma_k.to_bits(),
            self.gamma_s.map_or(u64::MAX, f64::to_bits),
        ]
    }

    pub fn solver_seed(&self, seeds: &Seeds) -> u64 {
        derive_seed(seeds.solver, &self.key())
    }

    pub fn weight_seed(&self, seeds: &Seeds) -> u64 {
        derive_seed(seeds.weights, &self.key())
    }
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(WlossError::InvalidParameter(format!(
            "{name} grid is empty"
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(WlossError::InvalidParameter(format!(
            "{name} values must be positive, got {v}"
        )));
    }
    Ok(())
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(WlossError::InvalidParameter(
                "no weighting scheme selected".into(),
            ));
        }
        check_axis("C", &self.c_values)?;
        check_axis("gamma_k", &self.gamma_k_values)?;
        if self.schemes.iter().any(|s| s.uses_density()) {
            check_axis("gamma_s", &self.gamma_s_values)?;
        }
        if self.folds < 2 {
            return Err(WlossError::InvalidParameter(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.positive_label != 1.0 && self.positive_label != -1.0 {
            return Err(WlossError::InvalidParameter(format!(
                "positive label must be 1 or -1, got {}",
                self.positive_label
            )));
        }
        Ok(())
    }

    /// Every grid point, scheme by scheme, then `C`, `gamma_k`, `gamma_s`.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            for &c in &self.c_values {
                for &gamma_k in &self.gamma_k_values {
                    if scheme.uses_density() {
                        for &gs in &self.gamma_s_values {
                            out.push(GridPoint {
                                scheme,
                                c,
                                gamma_k,
                                gamma_s: Some(gs),
                            });
                        }
                    } else {
                        out.push(GridPoint {
                            scheme,
                            c,
                            gamma_k,
                            gamma_s: None,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    Invalid(String),
}

/// Cross-validation outcome of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: GridPoint,
    pub fold_metrics: Vec<f64>,
    pub mean: f64,
    pub iterations: Vec<u64>,
    pub solver_seed: u64,
    pub weight_seed: u64,
    pub seconds: f64,
    pub status: PointStatus,
}

impl PointResult {
    pub fn is_valid(&self) -> bool {
        self.status == PointStatus::Ok
    }
}

struct FoldData {
    train_idx: Vec<usize>,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<f64>,
    test_x: Vec<Vec<f64>>,
    test_y: Vec<f64>,
}

fn split_features(
    ds: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    standardize: bool,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter()
            .map(|&i| ds.samples()[i].features.clone())
            .collect()
    };
    let (train, test) = (rows(train_idx), rows(test_idx));
    if standardize {
        let st = Standardizer::fit(&train);
        (st.transform_all(&train), st.transform_all(&test))
    } else {
        (train, test)
    }
}

fn prepare_folds(ds: &Dataset, folds: &FoldAssignment, standardize: bool) -> Vec<FoldData> {
    let y = ds.targets();
    (0..folds.k())
        .map(|f| {
            let train_idx = folds.train_indices(f);
            let test_idx = folds.test_indices(f);
            let (train_x, test_x) = split_features(ds, &train_idx, &test_idx, standardize);
            FoldData {
                train_y: train_idx.iter().map(|&i| y[i]).collect(),
                test_y: test_idx.iter().map(|&i| y[i]).collect(),
                train_idx,
                train_x,
                test_x,
            }
        })
        .collect()
}

/// Gram matrices per `(fold, gamma_k)` and densities per `(fold, gamma_s)`.
struct FoldCache {
    grams: HashMap<(usize, u64), GramCache>,
    densities: HashMap<(usize, u64), DensityVector>,
}

impl FoldCache {
    fn build(
        ds: &Dataset,
        folds: &[FoldData],
        gamma_k: &[f64],
        gamma_s: &[f64],
        standardize: bool,
    ) -> Result<Self> {
        let mut grams = HashMap::new();
        let mut densities = HashMap::new();
        for (f, fold) in folds.iter().enumerate() {
            if !has_both_classes(fold.train_y.iter().copied()) {
                continue;
            }
            for &g in gamma_k {
                grams.insert((f, g.to_bits()), gram(&fold.train_x, g)?);
            }
            for &g in gamma_s {
                let dv = signed_density(&fold.train_x, &fold.train_y, g)?;
                if cfg!(debug_assertions) {
                    assert_no_leakage(ds, &fold.train_idx, standardize, &dv);
                }
                densities.insert((f, g.to_bits()), dv);
            }
        }
        Ok(FoldCache { grams, densities })
    }
}

/// Recomputes the density from a fresh extraction of the training samples
/// and checks it matches the one used for the weights.
fn assert_no_leakage(ds: &Dataset, train_idx: &[usize], standardize: bool, used: &DensityVector) {
    let train = ds.subset(train_idx);
    let x = if standardize {
        Standardizer::fit(&train.features()).transform_all(&train.features())
    } else {
        train.features()
    };
    let fresh = density(&x, used.gamma_s).expect("training fold density");
    assert_eq!(fresh.s.len(), used.s.len());
    for (a, b) in fresh.s.iter().zip(&used.s) {
        assert!(
            (a - b).abs() <= 1e-9 * a.abs().max(1.0),
            "fold weights do not come from the training samples alone"
        );
    }
}

fn evaluate_point(
    point: &GridPoint,
    folds: &[FoldData],
    cache: &FoldCache,
    spec: &GridSpec,
) -> Result<PointResult> {
    let start = Instant::now();
    let solver_seed = point.solver_seed(&spec.seeds);
    let weight_seed = point.weight_seed(&spec.seeds);
    let mut result = PointResult {
        point: *point,
        fold_metrics: Vec::with_capacity(folds.len()),
        mean: f64::NAN,
        iterations: Vec::with_capacity(folds.len()),
        solver_seed,
        weight_seed,
        seconds: 0.0,
        status: PointStatus::Ok,
    };
    for (f, fold) in folds.iter().enumerate() {
        if !has_both_classes(fold.train_y.iter().copied()) {
            result.status = PointStatus::Invalid(format!("training fold {f} has a single class"));
            result.fold_metrics.clear();
            result.iterations.clear();
            break;
        }
        let dv = point
            .gamma_s
            .filter(|_| point.scheme.uses_density())
            .map(|g| &cache.densities[&(f, g.to_bits())]);
        let mut weights = make_weights(
            fold.train_x.len(),
            dv,
            point.scheme,
            derive_seed(weight_seed, &[f as u64]),
        )?;
        if spec.normalize_weights {
            weights = weights.normalized();
        }
        let params = spec.solver.params(point.c, point.gamma_k, solver_seed);
        let gram = &cache.grams[&(f, point.gamma_k.to_bits())];
        let model = train_with_gram(gram, &fold.train_x, &fold.train_y, &params, &weights)?;
        let preds = model.predict_all(&fold.test_x)?;
        result
            .fold_metrics
            .push(f1(&preds, &fold.test_y, spec.positive_label)?);
        result.iterations.push(model.meta.iterations);
    }
    if result.is_valid() {
        result.mean = result.fold_metrics.iter().sum::<f64>() / result.fold_metrics.len() as f64;
    }
    result.seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

fn check_classification(ds: &Dataset) -> Result<()> {
    if ds.task() != Task::Classification {
        return Err(WlossError::InvalidParameter(
            "cross-validation of the SVC needs a classification dataset".into(),
        ));
    }
    Ok(())
}

/// k-fold evaluation of a single grid point.
pub fn cross_validate(
    ds: &Dataset,
    folds: &FoldAssignment,
    point: &GridPoint,
    spec: &GridSpec,
) -> Result<PointResult> {
    check_classification(ds)?;
    if folds.assignment().len() != ds.len() {
        return Err(WlossError::LengthMismatch {
            what: "fold assignment",
            expected: ds.len(),
            found: folds.assignment().len(),
        });
    }
    let data = prepare_folds(ds, folds, spec.standardize);
    let gamma_s: Vec<f64> = point
        .gamma_s
        .filter(|_| point.scheme.uses_density())
        .into_iter()
        .collect();
    let cache = FoldCache::build(ds, &data, &[point.gamma_k], &gamma_s, spec.standardize)?;
    evaluate_point(point, &data, &cache, spec)
}

/// Evaluates every point of `spec` on `ds` (already cleaned and shuffled).
/// Rows come back sorted by mean metric, best first; invalid points last.
pub fn grid_search(ds: &Dataset, name: &str, spec: &GridSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    check_classification(ds)?;
    let folds = kfold(ds, spec.folds, spec.seeds.fold)?;
    let data = prepare_folds(ds, &folds, spec.standardize);
    let gamma_s: &[f64] = if spec.schemes.iter().any(|s| s.uses_density()) {
        &spec.gamma_s_values
    } else {
        &[]
    };
    let cache = FoldCache::build(ds, &data, &spec.gamma_k_values, gamma_s, spec.standardize)?;
    let points = spec.points();
    let mut rows = points
        .par_iter()
        .map(|p| evaluate_point(p, &data, &cache, spec))
        .collect::<Result<Vec<_>>>()?;
    sort_rows(&mut rows);
    Ok(ExperimentReport {
        dataset: name.to_string(),
        samples: ds.len(),
        dim: ds.dim(),
        removed_duplicates: ds.removed_duplicates(),
        removed_inconsistent: ds.removed_inconsistent(),
        spec: spec.clone(),
        rows,
    })
}

fn sort_rows(rows: &mut [PointResult]) {
    rows.sort_by(|a, b| match (a.is_valid(), b.is_valid()) {
        (true, true) => b.mean.total_cmp(&a.mean),
        (true, false) => std::cmp::Ordering::Less,
        (false, true) => std::cmp::Ordering::Greater,
        (false, false) => std::cmp::Ordering::Equal,
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub dataset: String,
    pub samples: usize,
    pub dim: usize,
    pub removed_duplicates: usize,
    pub removed_inconsistent: usize,
    pub spec: GridSpec,
    pub rows: Vec<PointResult>,
}

fn fmt_list<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub const REPORT_COLUMNS: [&str; 12] = [
    "rank",
    "scheme",
    "c",
    "gamma_k",
    "gamma_s",
    "mean_f1",
    "fold_f1",
    "iterations",
    "solver_seed",
    "weight_seed",
    "status",
    "seconds",
];

impl ExperimentReport {
    /// Best valid row whose point satisfies `pred`.
    pub fn best_where(&self, pred: impl Fn(&GridPoint) -> bool) -> Option<&PointResult> {
        self.rows.iter().find(|r| r.is_valid() && pred(&r.point))
    }

    pub fn best(&self) -> Option<&PointResult> {
        self.best_where(|_| true)
    }

    /// Best row with all weights equal to one.
    pub fn best_uniform(&self) -> Option<&PointResult> {
        self.best_where(|p| p.scheme == Scheme::None)
    }

    /// Best row among the density schemes.
    pub fn best_density(&self) -> Option<&PointResult> {
        self.best_where(|p| p.scheme.uses_density())
    }

    /// Tab-separated report. Metadata lines start with `#`; then a header
    /// with [`REPORT_COLUMNS`] and one row per grid point. Lists inside a
    /// field are comma-separated; absent values are `-`. With
    /// `include_timing == false` the `seconds` column is written as `-`, which
    /// makes reports of identical runs byte-identical.
    pub fn to_tsv(&self, include_timing: bool) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "# wloss grid report");
        let _ = writeln!(out, "# dataset\t{}", self.dataset);
        let _ = writeln!(out, "# samples\t{}", self.samples);
        let _ = writeln!(out, "# dim\t{}", self.dim);
        let _ = writeln!(out, "# removed_duplicates\t{}", self.removed_duplicates);
        let _ = writeln!(out, "# removed_inconsistent\t{}", self.removed_inconsistent);
        let _ = writeln!(out, "# positive_label\t{}", s.positive_label);
        let _ = writeln!(out, "# folds\t{}", s.folds);
        let _ = writeln!(
            out,
            "# seeds\tshuffle={} fold={} solver={} weights={}",
            s.seeds.shuffle, s.seeds.fold, s.seeds.solver, s.seeds.weights
        );
        let _ = writeln!(
            out,
            "# solver\titer_multiplier={} max_iterations={} early_stop={} kkt_tolerance={} pairs={:?}",
            s.solver.iter_multiplier,
            s.solver.max_iterations.map_or("-".into(), |v| v.to_string()),
            s.solver.early_stop,
            s.solver.kkt_tolerance,
            s.solver.pair_selection
        );
        let _ = writeln!(
            out,
            "# grid\tschemes={} c={} gamma_k={} gamma_s={}",
            fmt_list(&s.schemes),
            fmt_list(&s.c_values),
            fmt_list(&s.gamma_k_values),
            fmt_list(&s.gamma_s_values)
        );
        let _ = writeln!(
            out,
            "# standardize\t{}\n# normalize_weights\t{}",
            s.standardize, s.normalize_weights
        );
        out.push_str(&REPORT_COLUMNS.join("\t"));
        out.push('\n');
        for (rank, r) in self.rows.iter().enumerate() {
            let status = match &r.status {
                PointStatus::Ok => "ok".to_string(),
                PointStatus::Invalid(why) => format!("invalid: {why}"),
            };
            let mean = if r.is_valid() {
                r.mean.to_string()
            } else {
                "-".into()
            };
            let seconds = if include_timing {
                format!("{:.3}", r.seconds)
            } else {
                "-".into()
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                rank + 1,
                r.point.scheme,
                r.point.c,
                r.point.gamma_k,
                r.point.gamma_s.map_or("-".into(), |g| g.to_string()),
                mean,
                fmt_list(&r.fold_metrics),
                fmt_list(&r.iterations),
                r.solver_seed,
                r.weight_seed,
                status,
                seconds
            );
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv(true)).map_err(|e| WlossError::io(path, e))
    }

    /// Human-readable table of the best `top` rows.
    pub fn table(&self, top: usize) -> String {
        let mut out = format!(
            "{:<6} {:<6} {:>8} {:>8} {:>8} {:>9} {:>9}\n",
            "rank", "scheme", "C", "gamma_k", "gamma_s", "mean F1", "seconds"
        );
        for (rank, r) in self.rows.iter().take(top).enumerate() {
            let _ = writeln!(
                out,
                "{:<6} {:<6} {:>8} {:>8} {:>8} {:>9} {:>9.2}",
                rank + 1,
                r.point.scheme.to_string(),
                r.point.c,
                r.point.gamma_k,
                r.point.gamma_s.map_or("-".into(), |g| g.to_string()),
                if r.is_valid() {
                    format!("{:.6}", r.mean)
                } else {
                    "invalid".into()
                },
                r.seconds
            );
        }
        out
    }
}

/// Settings of the plain-vs-weighted MLP comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpExperimentConfig {
    /// `weights` is ignored; each run sets its own.
    pub train: TrainConfig,
    pub gamma_s_values: Vec<f64>,
    /// One report row per seed; the seed drives initialization and batching.
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub standardize: bool,
    /// Rescale `w = s` to mean 1 before training.
    pub normalize_weights: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpRow {
    pub seed: u64,
    pub standard_mae: f64,
    pub best_gamma_s: f64,
    pub best_weighted_mae: f64,
    /// `(gamma_s, test MAE)` for every weighted run.
    pub weighted: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpReport {
    pub dataset: String,
    pub train_samples: usize,
    pub test_samples: usize,
    pub layer_sizes: Vec<usize>,
    pub rows: Vec<MlpRow>,
}

impl MlpReport {
    /// Tab-separated: `seed`, `standard_mae`, `best_gamma_s`,
    /// `best_weighted_mae`, `weighted_mae` (`gamma:mae` pairs).
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# wloss mlp report");
        let _ = writeln!(out, "# dataset\t{}", self.dataset);
        let _ = writeln!(out, "# train_samples\t{}", self.train_samples);
        let _ = writeln!(out, "# test_samples\t{}", self.test_samples);
        let _ = writeln!(out, "# layers\t{}", fmt_list(&self.layer_sizes));
        out.push_str("seed\tstandard_mae\tbest_gamma_s\tbest_weighted_mae\tweighted_mae\n");
        for r in &self.rows {
            let pairs = r
                .weighted
                .iter()
                .map(|(g, m)| format!("{g}:{m}"))
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.seed, r.standard_mae, r.best_gamma_s, r.best_weighted_mae, pairs
            );
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| WlossError::io(path, e))
    }
}

/// `(train, test)` indices: a seeded permutation, the first `test_fraction`
/// of it for testing.
pub fn holdout_split(l: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    use rand::seq::SliceRandom;
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(WlossError::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = ((l as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test >= l {
        return Err(WlossError::InvalidParameter(format!(
            "a test fraction of {test_fraction} leaves no train or test samples out of {l}"
        )));
    }
    let mut perm: Vec<usize> = (0..l).collect();
    perm.shuffle(&mut seeded_rng(seed));
    let test = perm[..n_test].to_vec();
    let train = perm[n_test..].to_vec();
    Ok((train, test))
}

/// Mini-batch order seed used for the runs of report seed `seed`; the
/// network initialization uses `seed` itself.
pub fn mlp_batch_seed(seed: u64) -> u64 {
    derive_seed(seed, &[1])
}

/// For each seed: one unweighted run and one `w = s` run per `gamma_s`,
/// all scored by unweighted MAE on the same held-out split.
pub fn mlp_experiment(
    ds: &Dataset,
    name: &str,
    arch: &MlpArch,
    cfg: &MlpExperimentConfig,
) -> Result<MlpReport> {
    if ds.task() != Task::Regression {
        return Err(WlossError::InvalidParameter(
            "the MLP experiment needs a regression dataset".into(),
        ));
    }
    check_axis("gamma_s", &cfg.gamma_s_values)?;
    if cfg.seeds.is_empty() {
        return Err(WlossError::InvalidParameter("no seeds given".into()));
    }
    let (train_idx, test_idx) = holdout_split(ds.len(), cfg.test_fraction, cfg.split_seed)?;
    let (train_x, test_x) = split_features(ds, &train_idx, &test_idx, cfg.standardize);
    let y = ds.targets();
    let train_y: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
    let test_y: Vec<f64> = test_idx.iter().map(|&i| y[i]).collect();
    let train_ds = Dataset::from_xy(train_x.clone(), train_y, Task::Regression)?;

    let weight_sets: Vec<(f64, SampleWeights)> = cfg
        .gamma_s_values
        .iter()
        .map(|&g| {
            let dv = density(&train_x, g)?;
            let w = make_weights(train_x.len(), Some(&dv), Scheme::Identity, 0)?;
            Ok((
                g,
                if cfg.normalize_weights {
                    w.normalized()
                } else {
                    w
                },
            ))
        })
        .collect::<Result<_>>()?;

    let rows = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<MlpRow> {
            let arch = MlpArch {
                seed,
                ..arch.clone()
            };
            let run = |weights: Option<SampleWeights>| -> Result<f64> {
                let train_cfg = TrainConfig {
                    weights,
                    seed: mlp_batch_seed(seed),
                    ..cfg.train.clone()
                };
                let model = train_mlp(&train_ds, &arch, &train_cfg)?;
                mae(&model.predict_all(&test_x)?, &test_y)
            };
            let standard_mae = run(None)?;
            let weighted = weight_sets
                .iter()
                .map(|(g, w)| Ok((*g, run(Some(w.clone()))?)))
                .collect::<Result<Vec<_>>>()?;
            let (best_gamma_s, best_weighted_mae) =
                weighted
                    .iter()
                    .copied()
                    .fold((f64::NAN, f64::INFINITY), |best, (g, m)| {
                        if m < best.1 {
                            (g, m)
                        } else {
                            best
                        }
                    });
            Ok(MlpRow {
                seed,
                standard_mae,
                best_gamma_s,
                best_weighted_mae,
                weighted,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MlpReport {
        dataset: name.to_string(),
        train_samples: train_idx.len(),
        test_samples: test_idx.len(),
        layer_sizes: arch.layer_sizes.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_cases() {
        let t = [1.0, -1.0, 1.0, 1.0];
        assert_eq!(f1(&t, &t, 1.0).unwrap(), 1.0);
        // TP=2, FP=1, FN=1
        let truth = [1.0, 1.0, 1.0, -1.0, -1.0];
        let pred = [1.0, 1.0, -1.0, 1.0, -1.0];
        assert!((f1(&pred, &truth, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1(&[-1.0, -1.0], &[-1.0, -1.0], 1.0).unwrap(), 0.0);
        assert!(f1(&[1.0], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn grid_point_counts() {
        let spec = GridSpec {
            c_values: vec![1.0, 10.0],
            gamma_k_values: vec![0.1, 1.0],
            gamma_s_values: vec![0.1, 1.0, 10.0],
            schemes: vec![Scheme::None],
            ..GridSpec::default()
        };
        assert_eq!(spec.points().len(), 4);
        let spec = GridSpec {
            schemes: vec![Scheme::None, Scheme::Inv],
            ..spec
        };
        assert_eq!(spec.points().len(), 16);
        let spec = GridSpec {
            schemes: vec![Scheme::Random],
            ..spec
        };
        assert_eq!(spec.points().len(), 4);
    }

    #[test]
    fn point_seeds_depend_on_parameters_only() {
        let seeds = Seeds::default();
        let p = GridPoint {
            scheme: Scheme::Inv,
            c: 1.0,
            gamma_k: 0.1,
            gamma_s: Some(1.0),
        };
        let q = GridPoint { c: 10.0, ..p };
        assert_eq!(p.solver_seed(&seeds), p.solver_seed(&seeds));
        assert_ne!(p.solver_seed(&seeds), q.solver_seed(&seeds));
        assert_ne!(p.solver_seed(&seeds), p.weight_seed(&seeds));
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::default().validate().is_ok());
        let bad = GridSpec {
            c_values: vec![],
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = GridSpec {
            schemes: vec![Scheme::Sqrt],
            gamma_s_values: vec![],
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
        // gamma_s is not needed without a density scheme
        let ok = GridSpec {
            gamma_s_values: vec![],
            ..GridSpec::default()
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn holdout_partitions() {
        let (train, test) = holdout_split(10, 0.2, 1).unwrap();
        assert_eq!(test.len(), 2);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(holdout_split(10, 0.0, 1).is_err());
        assert!(holdout_split(2, 0.1, 1).is_err());
    }

    #[test]
    fn sorting_puts_invalid_rows_last() {
        let row = |mean: f64, status: PointStatus| PointResult {
            point: GridPoint {
                scheme: Scheme::None,
                c: 1.0,
                gamma_k: 1.0,
                gamma_s: None,
            },
            fold_metrics: vec![],
            mean,
            iterations: vec![],
            solver_seed: 0,
            weight_seed: 0,
            seconds: 0.0,
            status,
        };
        let mut rows = vec![
            row(f64::NAN, PointStatus::Invalid("x".into())),
            row(0.5, PointStatus::Ok),
            row(0.9, PointStatus::Ok),
        ];
        sort_rows(&mut rows);
        assert_eq!(rows[0].mean, 0.9);
        assert_eq!(rows[1].mean, 0.5);
        assert!(!rows[2].is_valid());
    }
}

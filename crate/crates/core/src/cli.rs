//! Command-line front end of the `wloss` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use crate::dataset::{
    self, clean, kfold, shuffle, Dataset, Format, LabelColumn, LabelMap, LoadOptions, Task,
};
use crate::error::{Result, WlossError};
use crate::experiments::{
    cross_validate, f1, grid_search, mlp_experiment, GridPoint, GridSpec, MlpExperimentConfig,
    Seeds, SolverSettings, DEFAULT_C, DEFAULT_GAMMA_K, DEFAULT_GAMMA_S,
};
use crate::mlp::{Activation, BaseLoss, MlpArch, TrainConfig};
use crate::oracle::{self, OracleOptions};
use crate::rng::{
    derive_seed, seeded_rng, DEFAULT_FOLD_SEED, DEFAULT_SHUFFLE_SEED, DEFAULT_SOLVER_SEED,
    DEFAULT_WEIGHT_SEED,
};
use crate::svc::{self, PairSelection, SvcModel, SvcParams};
use crate::weighting::{weights_for, SampleWeights, Scheme};

#[derive(Parser, Debug)]
#[command(
    name = "wloss",
    version,
    about = "Density-weighted kernel SVC and MLP regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, deduplicate, drop conflicting samples and shuffle.
    Prep {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_SHUFFLE_SEED)]
        shuffle_seed: u64,
        /// Write the cleaned, shuffled samples as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one classifier and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = DEFAULT_SOLVER_SEED)]
        solver_seed: u64,
        #[arg(long, default_value_t = DEFAULT_WEIGHT_SEED)]
        weight_seed: u64,
        #[arg(long)]
        model: PathBuf,
        /// Write the training weights, one per line.
        #[arg(long)]
        weights_out: Option<PathBuf>,
    },
    /// Classify samples with a saved model.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        /// Write one prediction per line here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-fold cross-validation of one parameter combination.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        cv: CvArgs,
    },
    /// Cross-validated grid search over schemes, C, gamma_k and gamma_s.
    Grid {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        cv: CvArgs,
        /// Weighting schemes: ids (none, 1-8) or names, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "none,1,2,3,4,5,6,7")]
        schemes: Vec<Scheme>,
        #[arg(long = "c-values", value_delimiter = ',')]
        c_values: Option<Vec<f64>>,
        #[arg(long = "gamma-k-values", value_delimiter = ',')]
        gamma_k_values: Option<Vec<f64>>,
        #[arg(long = "gamma-s-values", value_delimiter = ',')]
        gamma_s_values: Option<Vec<f64>>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Write the full TSV report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rows shown on stdout.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Plain versus density-weighted MLP regression on a holdout split.
    Mlp {
        #[command(flatten)]
        data: DataArgs,
        /// Hidden and output layer sizes; the input size is taken from the data.
        #[arg(long, value_delimiter = ',', default_value = "20,10,1")]
        arch: Vec<usize>,
        #[arg(long, value_enum, default_value_t = ActivationArg::Relu)]
        activation: ActivationArg,
        #[arg(long, value_enum, default_value_t = LossArg::Mse)]
        loss: LossArg,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f64,
        #[arg(
            long = "gamma-s-values",
            value_delimiter = ',',
            default_value = "0.01,0.1,1,10,100"
        )]
        gamma_s_values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = DEFAULT_SHUFFLE_SEED)]
        split_seed: u64,
        #[arg(long)]
        standardize: bool,
        /// Use the raw densities as weights instead of rescaling them to mean 1.
        #[arg(long)]
        raw_weights: bool,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the pair solver with the reference solver on random problems.
    Selftest {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Largest acceptable objective gap.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long, value_enum, default_value_t = TaskArg::Classification)]
    task: TaskArg,
    /// The first CSV line is a header.
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Zero-based label column; the last column by default.
    #[arg(long)]
    label_column: Option<usize>,
    /// Explicit label mapping such as `g=1,b=-1`.
    #[arg(long)]
    label_map: Option<String>,
}

#[derive(Args, Debug)]
struct PointArgs {
    #[arg(long, default_value = "none")]
    scheme: Scheme,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_k: f64,
    /// Density bandwidth, required by schemes 1-7.
    #[arg(long)]
    gamma_s: Option<f64>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value_t = 50.0)]
    iter_multiplier: f64,
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Stop once the KKT violation drops below --tol.
    #[arg(long)]
    early_stop: bool,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = PairsArg::Random)]
    pairs: PairsArg,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = DEFAULT_SHUFFLE_SEED)]
    shuffle_seed: u64,
    #[arg(long, default_value_t = DEFAULT_FOLD_SEED)]
    fold_seed: u64,
    #[arg(long, default_value_t = DEFAULT_SOLVER_SEED)]
    solver_seed: u64,
    #[arg(long, default_value_t = DEFAULT_WEIGHT_SEED)]
    weight_seed: u64,
    /// Standardize features with training-fold statistics.
    #[arg(long)]
    standardize: bool,
    /// Rescale each fold's weights to mean 1.
    #[arg(long)]
    normalize_weights: bool,
    /// Label counted as positive by F1.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    positive: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Libsvm,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TaskArg {
    Classification,
    Regression,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PairsArg {
    Random,
    MaxViolating,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ActivationArg {
    Relu,
    Tanh,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LossArg {
    Mse,
    Mae,
}

impl DataArgs {
    fn options(&self) -> Result<LoadOptions> {
        if !self.delimiter.is_ascii() {
            return Err(WlossError::InvalidParameter(format!(
                "delimiter {:?} is not a single byte",
                self.delimiter
            )));
        }
        Ok(LoadOptions {
            format: match self.format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Libsvm => Format::LibSvm,
            },
            task: match self.task {
                TaskArg::Classification => Task::Classification,
                TaskArg::Regression => Task::Regression,
            },
            has_header: self.header,
            delimiter: self.delimiter as u8,
            label_column: self
                .label_column
                .map_or(LabelColumn::Last, LabelColumn::Index),
            label_map: match &self.label_map {
                Some(spec) => LabelMap::parse(spec)?,
                None => LabelMap::Auto,
            },
        })
    }

    fn load(&self) -> Result<Dataset> {
        dataset::load(&self.data, &self.options()?)
    }
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        SolverSettings {
            iter_multiplier: self.iter_multiplier,
            max_iterations: self.max_iterations,
            early_stop: self.early_stop,
            kkt_tolerance: self.tol,
            pair_selection: match self.pairs {
                PairsArg::Random => PairSelection::Random,
                PairsArg::MaxViolating => PairSelection::MaxViolating,
            },
        }
    }
}

impl CvArgs {
    fn seeds(&self) -> Seeds {
        Seeds {
            shuffle: self.shuffle_seed,
            fold: self.fold_seed,
            solver: self.solver_seed,
            weights: self.weight_seed,
        }
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| WlossError::InvalidParameter(format!("thread pool: {e}")))
}

fn point_of(args: &PointArgs) -> Result<GridPoint> {
    if args.scheme.uses_density() != args.gamma_s.is_some() {
        return Err(WlossError::InvalidParameter(format!(
            "--gamma-s is required by schemes 1-7 and only by them (scheme {})",
            args.scheme
        )));
    }
    Ok(GridPoint {
        scheme: args.scheme,
        c: args.c,
        gamma_k: args.gamma_k,
        gamma_s: args.gamma_s.filter(|_| args.scheme.uses_density()),
    })
}

fn cleaned(data: &DataArgs, out: &mut dyn Write) -> Result<Dataset> {
    let ds = clean(&data.load()?);
    writeln!(
        out,
        "# data {} samples={} dim={} removed_duplicates={} removed_inconsistent={}",
        data.data.display(),
        ds.len(),
        ds.dim(),
        ds.removed_duplicates(),
        ds.removed_inconsistent()
    )
    .ok();
    Ok(ds)
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Prep {
            data,
            shuffle_seed,
            out: path,
        } => {
            let ds = shuffle(&cleaned(&data, out)?, shuffle_seed);
            writeln!(out, "# shuffle_seed={shuffle_seed}").ok();
            writeln!(out, "samples={}", ds.len()).ok();
            writeln!(out, "removed_duplicates={}", ds.removed_duplicates()).ok();
            writeln!(out, "removed_inconsistent={}", ds.removed_inconsistent()).ok();
            if let Some(path) = path {
                ds.write_csv(&path)?;
                writeln!(out, "wrote {}", path.display()).ok();
            }
            Ok(0)
        }
        Command::Train {
            data,
            point,
            solver,
            solver_seed,
            weight_seed,
            model,
            weights_out,
        } => {
            let ds = cleaned(&data, out)?;
            let p = point_of(&point)?;
            let params = solver.settings().params(p.c, p.gamma_k, solver_seed);
            writeln!(
                out,
                "# train scheme={} c={} gamma_k={} gamma_s={} budget={} early_stop={} tol={} pairs={:?} solver_seed={} weight_seed={}",
                p.scheme,
                p.c,
                p.gamma_k,
                p.gamma_s.map_or("-".into(), |g| g.to_string()),
                params.budget(ds.len()),
                params.early_stop,
                params.kkt_tolerance,
                params.pair_selection,
                solver_seed,
                weight_seed
            )
            .ok();
            let x = ds.features();
            let y = ds.targets();
            let w = weights_for(&x, &y, p.scheme, p.gamma_s, weight_seed)?;
            if let Some(path) = &weights_out {
                w.write(path)?;
            }
            let m = svc::train(&x, &y, &params, &w)?;
            let train_f1 = f1(&m.predict_all(&x)?, &y, 1.0)?;
            writeln!(
                out,
                "support_vectors={} iterations={} objective={} converged={} b={} train_f1={}",
                m.support.len(),
                m.meta.iterations,
                m.meta.objective,
                m.meta.converged,
                m.b,
                train_f1
            )
            .ok();
            m.save(&model)?;
            writeln!(out, "wrote {}", model.display()).ok();
            Ok(0)
        }
        Command::Predict {
            data,
            model,
            out: path,
        } => {
            let ds = data.load()?;
            let m = SvcModel::load(&model)?;
            let preds = m.predict_all(&ds.features())?;
            let text: String = preds.iter().map(|p| format!("{p}\n")).collect();
            match &path {
                Some(p) => std::fs::write(p, &text).map_err(|e| WlossError::io(p, e))?,
                None => {
                    out.write_all(text.as_bytes()).ok();
                }
            }
            writeln!(out, "# f1={}", f1(&preds, &ds.targets(), 1.0)?).ok();
            Ok(0)
        }
        Command::Cv {
            data,
            point,
            solver,
            cv,
        } => {
            let ds = shuffle(&cleaned(&data, out)?, cv.shuffle_seed);
            let p = point_of(&point)?;
            let spec = GridSpec {
                schemes: vec![p.scheme],
                folds: cv.folds,
                seeds: cv.seeds(),
                solver: solver.settings(),
                standardize: cv.standardize,
                normalize_weights: cv.normalize_weights,
                positive_label: cv.positive,
                ..GridSpec::default()
            };
            spec.validate()?;
            writeln!(
                out,
                "# cv scheme={} c={} gamma_k={} gamma_s={} folds={} seeds={:?}",
                p.scheme,
                p.c,
                p.gamma_k,
                p.gamma_s.map_or("-".into(), |g| g.to_string()),
                cv.folds,
                spec.seeds
            )
            .ok();
            let folds = kfold(&ds, cv.folds, cv.fold_seed)?;
            let r = cross_validate(&ds, &folds, &p, &spec)?;
            writeln!(
                out,
                "# point solver_seed={} weight_seed={}",
                r.solver_seed, r.weight_seed
            )
            .ok();
            for (f, m) in r.fold_metrics.iter().enumerate() {
                writeln!(out, "fold {f} f1={m} iterations={}", r.iterations[f]).ok();
            }
            match &r.status {
                crate::experiments::PointStatus::Ok => {
                    writeln!(out, "mean_f1={}", r.mean).ok();
                }
                crate::experiments::PointStatus::Invalid(why) => {
                    writeln!(out, "invalid: {why}").ok();
                }
            }
            Ok(0)
        }
        Command::Grid {
            data,
            solver,
            cv,
            schemes,
            c_values,
            gamma_k_values,
            gamma_s_values,
            jobs,
            out: path,
            top,
        } => {
            let any_density = schemes.iter().any(|s| s.uses_density());
            if gamma_s_values.is_some() && !any_density {
                return Err(WlossError::InvalidParameter(
                    "--gamma-s-values given but no density scheme (1-7) is listed".into(),
                ));
            }
            let ds = shuffle(&cleaned(&data, out)?, cv.shuffle_seed);
            let spec = GridSpec {
                c_values: c_values.unwrap_or_else(|| DEFAULT_C.to_vec()),
                gamma_k_values: gamma_k_values.unwrap_or_else(|| DEFAULT_GAMMA_K.to_vec()),
                gamma_s_values: gamma_s_values.unwrap_or_else(|| DEFAULT_GAMMA_S.to_vec()),
                schemes,
                folds: cv.folds,
                seeds: cv.seeds(),
                solver: solver.settings(),
                standardize: cv.standardize,
                normalize_weights: cv.normalize_weights,
                positive_label: cv.positive,
            };
            spec.validate()?;
            writeln!(
                out,
                "# grid points={} folds={} schemes={} c={:?} gamma_k={:?} gamma_s={:?} seeds={:?} solver={:?} standardize={} normalize_weights={} positive={}",
                spec.points().len(),
                spec.folds,
                spec.schemes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
                spec.c_values,
                spec.gamma_k_values,
                if any_density { spec.gamma_s_values.clone() } else { vec![] },
                spec.seeds,
                spec.solver,
                spec.standardize,
                spec.normalize_weights,
                spec.positive_label
            )
            .ok();
            let name = data.data.display().to_string();
            let report = thread_pool(jobs)?.install(|| grid_search(&ds, &name, &spec))?;
            out.write_all(report.table(top).as_bytes()).ok();
            if let (Some(u), Some(d)) = (report.best_uniform(), report.best_density()) {
                writeln!(
                    out,
                    "best w=1: {:.6}  best density scheme: {:.6} (scheme {})",
                    u.mean, d.mean, d.point.scheme
                )
                .ok();
            }
            if let Some(path) = path {
                report.write(&path)?;
                writeln!(out, "wrote {}", path.display()).ok();
            }
            Ok(0)
        }
        Command::Mlp {
            data,
            arch,
            activation,
            loss,
            epochs,
            batch_size,
            learning_rate,
            gamma_s_values,
            seeds,
            test_fraction,
            split_seed,
            standardize,
            raw_weights,
            jobs,
            out: path,
        } => {
            let mut data = data;
            data.task = TaskArg::Regression;
            let ds = cleaned(&data, out)?;
            let mut sizes = vec![ds.dim()];
            sizes.extend(arch);
            let activation = match activation {
                ActivationArg::Relu => Activation::Relu,
                ActivationArg::Tanh => Activation::Tanh,
            };
            let arch = MlpArch::new(sizes, activation, 0)?;
            let cfg = MlpExperimentConfig {
                train: TrainConfig {
                    epochs,
                    batch_size,
                    learning_rate,
                    loss: match loss {
                        LossArg::Mse => BaseLoss::Mse,
                        LossArg::Mae => BaseLoss::Mae,
                    },
                    weights: None,
                    seed: 0,
                },
                gamma_s_values,
                seeds,
                test_fraction,
                split_seed,
                standardize,
                normalize_weights: !raw_weights,
            };
            writeln!(
                out,
                "# mlp layers={:?} activation={} loss={:?} epochs={} batch_size={} learning_rate={} split_seed={} standardize={} normalize_weights={}",
                arch.layer_sizes,
                activation,
                cfg.train.loss,
                epochs,
                batch_size,
                learning_rate,
                split_seed,
                standardize,
                cfg.normalize_weights
            )
            .ok();
            let name = data.data.display().to_string();
            let report = thread_pool(jobs)?.install(|| mlp_experiment(&ds, &name, &arch, &cfg))?;
            out.write_all(report.to_tsv().as_bytes()).ok();
            if let Some(path) = path {
                report.write(&path)?;
                writeln!(out, "wrote {}", path.display()).ok();
            }
            Ok(0)
        }
        Command::Selftest {
            instances,
            seed,
            tolerance,
        } => {
            let worst = selftest(instances, seed)?;
            let ok = worst <= tolerance;
            writeln!(
                out,
                "instances={instances} max_objective_gap={worst:e} tolerance={tolerance:e} {}",
                if ok { "PASS" } else { "FAIL" }
            )
            .ok();
            Ok(if ok { 0 } else { 1 })
        }
    }
}

/// Largest `|D_pair - D_reference|` over random small problems.
fn selftest(instances: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..instances {
        let mut rng = seeded_rng(derive_seed(seed, &[k as u64]));
        let l = rng.gen_range(3..=6);
        let d = rng.gen_range(1..=3);
        let x: Vec<Vec<f64>> = (0..l)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut y: Vec<f64> = (0..l)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let c = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
        let gamma = [0.1, 1.0][rng.gen_range(0..2)];
        let w = SampleWeights {
            values: (0..l).map(|_| rng.gen_range(0.5..=2.0)).collect(),
            ..SampleWeights::uniform(l)
        };
        let params = SvcParams::new(c, gamma)
            .with_early_stop(1e-6)
            .with_max_iterations(1_000_000)
            .with_seed(derive_seed(seed, &[k as u64, 1]));
        let m = svc::train(&x, &y, &params, &w)?;
        let upper: Vec<f64> = w.values.iter().map(|wi| c * wi).collect();
        let reference = oracle::solve_dual(&x, &y, &upper, gamma, &OracleOptions::default());
        worst = worst.max((m.meta.objective - reference.objective).abs());
    }
    Ok(worst)
}

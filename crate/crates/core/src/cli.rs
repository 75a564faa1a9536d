//! Command-line front end.
//!
//! Every subcommand reads its settings from three layers: built-in defaults,
//! an optional `--config` file of `key = value` lines with `--set key=value`
//! overrides on top, and explicit flags, which win. Outputs go to `--out`,
//! along with a `run.log` holding the version, the effective settings and
//! timings.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or model error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::eval::{self, EvalMask, HyperGrid, Protocol, Selection};
use crate::features::{self, NeighborhoodSpec, Transition, Weighting};
use crate::grid::{self, LandCoverGrid};
use crate::kv::KvFile;
use crate::manifest;
use crate::mlp::{self, TrainConfig};
use crate::model::{MlpModel, Model, PolyregModel};
use crate::polyreg::{self, FitOptions};
use crate::render;
use crate::synth::{self, GeneratorSpec};
use crate::{Error, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "terracast", version, about = "Land-cover transition prediction")]
struct Cli {
    /// Worker threads for candidate and restart evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct Common {
    /// Settings file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args, Clone, Default)]
struct ProtocolArgs {
    /// Source dates of the estimation transitions, e.g. `0,1`.
    #[arg(long)]
    estimation: Option<String>,
    /// Source date of the validation transition.
    #[arg(long)]
    validation: Option<usize>,
    /// Source date of the test transition, or `none`.
    #[arg(long)]
    test: Option<String>,
    /// Train on every valid pixel instead of frontier pixels only.
    #[arg(long)]
    all_pixels: bool,
    #[arg(long)]
    frontier_order: Option<usize>,
    /// Predict every pixel instead of keeping non-frontier pixels constant.
    #[arg(long)]
    predict_all: bool,
    /// Evaluation mask: `all` or `frontier`.
    #[arg(long)]
    eval_mask: Option<String>,
    /// Cap on the number of estimation pixels.
    #[arg(long)]
    max_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Clone, Default)]
struct MlpArgs {
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    validation_fraction: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        /// Generator spec file.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write the feature table of a transition as CSV.
    Features {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        /// `counts` or `exp_distance`.
        #[arg(long)]
        weighting: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Fit one polychotomous regression model.
    TrainPolyreg {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Train one perceptron (best of the restarts).
    TrainMlp {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mlp: MlpArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Select neighbourhood size and eps on the validation transition.
    SelectPolyreg {
        #[arg(long)]
        data: PathBuf,
        /// Hyperparameter grid file (`sizes`, `eps`).
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Select neighbourhood size and hidden units on the validation transition.
    SelectMlp {
        #[arg(long)]
        data: PathBuf,
        /// Hyperparameter grid file (`sizes`, `hidden`).
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mlp: MlpArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Predict the map following date `--from`.
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Misclassification rates of a predicted map.
    Evaluate {
        #[arg(long = "true")]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Number of classes; defaults to the largest class found.
        #[arg(long)]
        classes: Option<usize>,
        /// Also write `evaluation.txt` and `run.log` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a map as a binary PPM image.
    Render {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        scale: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Effective settings: defaults < config file < `--set` < flags.
struct Settings {
    kv: KvFile,
}

impl Settings {
    fn load(common: &Common) -> Result<Self, CliError> {
        let mut kv = match &common.config {
            Some(p) => KvFile::read(p).map_err(|e| usage(format!("config: {e}")))?,
            None => KvFile::new(),
        };
        let mut over = KvFile::new();
        for s in &common.overrides {
            let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("--set expects key=value, got {s:?}")))?;
            over.set(k.trim(), v.trim());
        }
        kv.overlay(&over);
        Ok(Self { kv })
    }

    fn value<T>(&mut self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr + std::fmt::Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.kv.parse_or(key, default).map_err(|e| usage(format!("config: {e}")))?,
        };
        self.kv.set(key, &v);
        Ok(v)
    }

    fn flag_true(&mut self, set: bool, key: &str, default: bool) -> Result<bool, CliError> {
        self.value(set.then_some(true), key, default)
    }
}

fn parse_dates(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| usage(format!("bad date index {t:?}"))))
        .collect()
}

fn protocol(settings: &mut Settings, args: &ProtocolArgs, dates: usize) -> Result<Protocol, CliError> {
    let mut p = Protocol::for_dates(dates).unwrap_or(Protocol {
        estimation: vec![Transition::starting_at(0)],
        validation: Transition::starting_at(0),
        test: None,
        ..Protocol::for_dates(3).expect("three dates")
    });
    let est_default = p.estimation.iter().map(|t| t.from.to_string()).collect::<Vec<_>>().join(",");
    let est = settings.value(args.estimation.clone(), "estimation", est_default)?;
    p.estimation = parse_dates(&est)?.into_iter().map(Transition::starting_at).collect();
    if p.estimation.is_empty() {
        return Err(usage("estimation needs at least one transition"));
    }
    p.validation = Transition::starting_at(settings.value(args.validation, "validation", p.validation.from)?);
    let test_default = p.test.map_or("none".to_string(), |t| t.from.to_string());
    let test = settings.value(args.test.clone(), "test", test_default)?;
    p.test = match test.as_str() {
        "none" => None,
        t => Some(Transition::starting_at(t.parse().map_err(|_| usage(format!("bad test date {t:?}")))?)),
    };
    p.frontier_only = !settings.flag_true(args.all_pixels, "all_pixels", false)?;
    p.frontier_order = settings.value(args.frontier_order, "frontier_order", p.frontier_order)?;
    p.predict_frontier_only = !settings.flag_true(args.predict_all, "predict_all", false)?;
    let mask = settings.value(args.eval_mask.clone(), "eval_mask", "all".to_string())?;
    p.eval_mask = mask.parse::<EvalMask>().map_err(usage)?;
    p.max_samples = match args.max_samples {
        Some(n) => Some(n),
        None => settings.kv.parse_value("max_samples").map_err(|e| usage(format!("config: {e}")))?,
    };
    if let Some(n) = p.max_samples {
        settings.kv.set("max_samples", n);
    }
    p.seed = settings.value(args.seed, "seed", 0)?;
    Ok(p)
}

fn train_config(settings: &mut Settings, args: &MlpArgs, seed: u64) -> Result<TrainConfig, CliError> {
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        hidden: d.hidden,
        restarts: settings.value(args.restarts, "restarts", d.restarts)?,
        max_epochs: settings.value(args.max_epochs, "max_epochs", d.max_epochs)?,
        patience: settings.value(args.patience, "patience", d.patience)?,
        learning_rate: settings.value(args.learning_rate, "learning_rate", d.learning_rate)?,
        validation_fraction: settings.value(args.validation_fraction, "validation_fraction", d.validation_fraction)?,
        seed,
    };
    cfg.validate().map_err(|e| usage(format!("mlp: {e}")))?;
    Ok(cfg)
}

fn fit_options(settings: &mut Settings, seed: u64) -> Result<FitOptions, CliError> {
    let d = FitOptions::default();
    Ok(FitOptions {
        tol: settings.value(None, "tol", d.tol)?,
        max_iter: settings.value(None, "max_iter", d.max_iter)?,
        seed,
    })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(Error::Io(format!("{}: {e}", dir.display()))))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Data(Error::Io(format!("{}: {e}", path.display()))))
}

struct RunLog {
    text: String,
    started: Instant,
}

impl RunLog {
    fn new(command: &str, jobs: usize) -> Self {
        let mut text = String::new();
        writeln!(text, "terracast {VERSION}").unwrap();
        writeln!(text, "command = {command}").unwrap();
        writeln!(text, "jobs = {jobs}").unwrap();
        Self { text, started: Instant::now() }
    }

    fn settings(&mut self, s: &Settings) {
        writeln!(self.text, "# settings").unwrap();
        self.text.push_str(&s.kv.to_text());
    }

    fn line(&mut self, l: impl AsRef<str>) {
        self.text.push_str(l.as_ref());
        self.text.push('\n');
    }

    fn finish(mut self, dir: &Path) -> Result<(), CliError> {
        let secs = self.started.elapsed().as_secs_f64();
        writeln!(self.text, "elapsed_seconds = {secs:.3}").unwrap();
        write_text(&dir.join("run.log"), &self.text)
    }
}

fn neighborhood(settings: &mut Settings, size: Option<usize>, weighting: Weighting) -> Result<NeighborhoodSpec, CliError> {
    let size = settings.value(size, "size", 1)?;
    NeighborhoodSpec::new(size, weighting).map_err(|e| usage(format!("features: {e}")))
}

fn write_selection(
    dir: &Path,
    d: &grid::Dataset,
    p: &Protocol,
    selection: Selection,
    log: &mut RunLog,
) -> Result<(), CliError> {
    write_text(&dir.join("selection.csv"), &selection.report.to_csv())?;
    selection.model.write(&dir.join("best.model"))?;
    let outcome = eval::run_test(selection, d, p)?;
    let report = &outcome.selection.report;
    let best = report.best_row();
    let mut summary = String::new();
    writeln!(summary, "method: {}", report.method).unwrap();
    writeln!(summary, "validation transition: {}", report.validation).unwrap();
    writeln!(summary, "selected neighbourhood size: {}", best.size).unwrap();
    if let Some(e) = best.eps {
        writeln!(summary, "selected eps: {e}").unwrap();
    }
    if let Some(h) = best.hidden {
        let layout = outcome.selection.model.layout();
        writeln!(summary, "selected q2: {h} (network {}-{h}-{})", layout.width(), layout.class_count).unwrap();
    }
    if let Some(r) = best.restart {
        writeln!(summary, "selected restart: {r}").unwrap();
    }
    writeln!(summary, "validation error: {:.4}", best.validation_error.unwrap_or(f64::NAN)).unwrap();
    if let (Some((map, rates)), Some(tr)) = (&outcome.test, p.test) {
        writeln!(summary, "\ntest transition: {tr}").unwrap();
        if report.overlapping_test {
            writeln!(summary, "warning: the test transition overlaps the data used for selection; the test error is biased").unwrap();
        }
        summary.push_str(&eval::format_rates(rates, &d.class_names));
        let name = format!("predicted_{}.asc", tr.to);
        grid::write_land_cover(map, &dir.join(&name))?;
        log.line(format!("test_overall_error = {}", rates.overall));
    }
    write_text(&dir.join("summary.txt"), &summary)?;
    log.line(format!("selected_row = {}", report.best));
    print!("{summary}");
    Ok(())
}

fn read_map(path: &Path, classes: Option<usize>) -> Result<LandCoverGrid, CliError> {
    Ok(grid::read_land_cover(path, classes.unwrap_or(u16::MAX as usize))?)
}

fn execute(cmd: Command, jobs: usize) -> Result<(), CliError> {
    match cmd {
        Command::Gen { spec, out, common } => {
            let mut settings = Settings::load(&common)?;
            if let Some(p) = spec {
                let mut kv = KvFile::read(&p).map_err(|e| usage(format!("spec: {e}")))?;
                kv.overlay(&settings.kv);
                settings.kv = kv;
            }
            let spec = GeneratorSpec::from_kv(&settings.kv).map_err(|e| usage(format!("synth: {e}")))?;
            let mut log = RunLog::new("gen", jobs);
            let d = synth::generate(&spec)?;
            create_dir(&out)?;
            manifest::write_dataset(&d, &out)?;
            write_text(&out.join("generator.txt"), &spec.to_kv().to_text())?;
            settings.kv = spec.to_kv();
            log.settings(&settings);
            for t in 0..d.dates() - 1 {
                log.line(format!("bayes_error_{t} = {}", synth::bayes_error(&spec, &d, t)?));
            }
            log.finish(&out)
        }
        Command::Features { data, size, weighting, out, protocol: pa, common } => {
            let mut settings = Settings::load(&common)?;
            let d = manifest::read_dataset(&data)?;
            let w = settings.value(weighting, "weighting", "counts".to_string())?;
            let w: Weighting = w.parse().map_err(|e: String| usage(e))?;
            let spec = neighborhood(&mut settings, size, w)?;
            let p = protocol(&mut settings, &pa, d.dates())?;
            let mut log = RunLog::new("features", jobs);
            let set = features::build_training_set(&d, &p.estimation, spec, &p.sampling())?;
            create_dir(&out)?;
            let path = out.join("samples.csv");
            let f = std::fs::File::create(&path)
                .map_err(|e| CliError::Data(Error::Io(format!("{}: {e}", path.display()))))?;
            features::write_samples_csv(&set.samples, std::io::BufWriter::new(f))?;
            log.settings(&settings);
            log.line(format!("samples = {}", set.samples.len()));
            log.line(format!("eligible = {}", set.eligible));
            log.finish(&out)
        }
        Command::TrainPolyreg { data, size, eps, out, protocol: pa, common } => {
            let mut settings = Settings::load(&common)?;
            let d = manifest::read_dataset(&data)?;
            let spec = neighborhood(&mut settings, size, Weighting::Counts)?;
            let eps = settings.value(eps, "eps", 0.1)?;
            let p = protocol(&mut settings, &pa, d.dates())?;
            let opts = fit_options(&mut settings, p.seed)?;
            let mut log = RunLog::new("train-polyreg", jobs);
            let set = features::build_training_set(&d, &p.estimation, spec, &p.sampling())?;
            let (params, report) = polyreg::fit(&set.samples, eps, &opts)?;
            create_dir(&out)?;
            Model::Polyreg(PolyregModel { params, layout: set.layout, eps }).write(&out.join("model.txt"))?;
            log.settings(&settings);
            log.line(format!("samples = {}", set.samples.len()));
            log.line(format!("converged = {}", report.converged));
            log.line(format!("iterations = {}", report.iterations));
            log.line(format!("final_objective = {}", report.final_objective));
            log.line(format!("gradient_norm = {}", report.gradient_norm));
            log.line(format!("step_halvings = {}", report.step_halvings));
            println!("converged={} iterations={} objective={}", report.converged, report.iterations, report.final_objective);
            log.finish(&out)
        }
        Command::TrainMlp { data, size, hidden, out, mlp: ma, protocol: pa, common } => {
            let mut settings = Settings::load(&common)?;
            let d = manifest::read_dataset(&data)?;
            let spec = neighborhood(&mut settings, size, Weighting::ExpDistance)?;
            let p = protocol(&mut settings, &pa, d.dates())?;
            let mut cfg = train_config(&mut settings, &ma, p.seed)?;
            cfg.hidden = settings.value(hidden, "hidden", cfg.hidden)?;
            cfg.validate().map_err(|e| usage(format!("mlp: {e}")))?;
            let mut log = RunLog::new("train-mlp", jobs);
            let set = features::build_training_set(&d, &p.estimation, spec, &p.sampling())?;
            let (weights, report) = mlp::train(&set.samples, &cfg)?;
            create_dir(&out)?;
            Model::Mlp(MlpModel { weights, layout: set.layout }).write(&out.join("model.txt"))?;
            log.settings(&settings);
            log.line(format!("samples = {}", set.samples.len()));
            log.line(format!("best_restart = {}", report.best_restart));
            for r in &report.restarts {
                log.line(format!(
                    "restart {} seed={} failed={} best_epoch={} epochs_run={} best_validation_loss={}",
                    r.index, r.seed, r.failed, r.best_epoch, r.epochs_run, r.best_validation_loss
                ));
            }
            println!("best restart {}", report.best_restart);
            log.finish(&out)
        }
        Command::SelectPolyreg { data, grid: gpath, out, protocol: pa, common } => {
            let mut settings = Settings::load(&common)?;
            if let Some(g) = gpath {
                let mut kv = KvFile::read(&g).map_err(|e| usage(format!("grid: {e}")))?;
                kv.overlay(&settings.kv);
                settings.kv = kv;
            }
            let d = manifest::read_dataset(&data)?;
            let grid = HyperGrid::from_kv(&settings.kv).map_err(|e| usage(e.to_string()))?;
            let p = protocol(&mut settings, &pa, d.dates())?;
            let opts = fit_options(&mut settings, p.seed)?;
            settings.kv.overlay(&grid.to_kv());
            let mut log = RunLog::new("select-polyreg", jobs);
            log.settings(&settings);
            let selection = eval::select_polyreg(&d, &p, &grid, &opts)?;
            create_dir(&out)?;
            write_selection(&out, &d, &p, selection, &mut log)?;
            log.finish(&out)
        }
        Command::SelectMlp { data, grid: gpath, out, mlp: ma, protocol: pa, common } => {
            let mut settings = Settings::load(&common)?;
            if let Some(g) = gpath {
                let mut kv = KvFile::read(&g).map_err(|e| usage(format!("grid: {e}")))?;
                kv.overlay(&settings.kv);
                settings.kv = kv;
            }
            let d = manifest::read_dataset(&data)?;
            let grid = HyperGrid::from_kv(&settings.kv).map_err(|e| usage(e.to_string()))?;
            let p = protocol(&mut settings, &pa, d.dates())?;
            let cfg = train_config(&mut settings, &ma, p.seed)?;
            settings.kv.overlay(&grid.to_kv());
            let mut log = RunLog::new("select-mlp", jobs);
            log.settings(&settings);
            let selection = eval::select_mlp(&d, &p, &grid, &cfg)?;
            create_dir(&out)?;
            write_selection(&out, &d, &p, selection, &mut log)?;
            log.finish(&out)
        }
        Command::Predict { data, model, from, out, protocol: pa, common } => {
            let mut settings = Settings::load(&common)?;
            let d = manifest::read_dataset(&data)?;
            let model = Model::read(&model)?;
            let p = protocol(&mut settings, &pa, d.dates())?;
            let mut log = RunLog::new("predict", jobs);
            let map = eval::predict_map(&model, &d, from, p.predict_frontier_only, p.frontier_order)?;
            create_dir(&out)?;
            grid::write_land_cover(&map, &out.join("predicted.asc"))?;
            log.settings(&settings);
            log.line(format!("from = {from}"));
            if from + 1 < d.dates() {
                let mask = p.mask(&d, Transition::starting_at(from));
                let rates = eval::misclassification(&d.covers[from + 1], &map, d.class_count(), mask.as_ref())?;
                log.line(format!("overall_error = {}", rates.overall));
                print!("{}", eval::format_rates(&rates, &d.class_names));
            }
            log.finish(&out)
        }
        Command::Evaluate { truth, pred, classes, out } => {
            let log = RunLog::new("evaluate", jobs);
            let t = read_map(&truth, classes)?;
            let p = read_map(&pred, classes)?;
            let k = match classes {
                Some(k) => k,
                None => [t.max_class(), p.max_class()].into_iter().flatten().map(|c| c.index() + 1).max().unwrap_or(1),
            };
            let rates = eval::misclassification(&t, &p, k, None)?;
            let names: Vec<String> = (1..=k).map(|c| format!("class{c}")).collect();
            let mut text = eval::format_rates(&rates, &names);
            writeln!(text, "overall error {:.4}", rates.overall).unwrap();
            print!("{text}");
            if let Some(dir) = out {
                create_dir(&dir)?;
                write_text(&dir.join("evaluation.txt"), &text)?;
                let mut log = log;
                log.line(format!("true = {}", truth.display()));
                log.line(format!("pred = {}", pred.display()));
                log.finish(&dir)?;
            }
            Ok(())
        }
        Command::Render { map, out, scale } => {
            let mut log = RunLog::new("render", jobs);
            let g = read_map(&map, None)?;
            create_dir(&out)?;
            let stem = map.file_stem().map_or("map".into(), |s| s.to_string_lossy().into_owned());
            render::write_ppm(&g, scale, &out.join(format!("{stem}.ppm")))?;
            log.line(format!("map = {}", map.display()));
            log.line(format!("scale = {scale}"));
            log.finish(&out)
        }
    }
}

/// Run the command line `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    let jobs = pool.current_num_threads();
    match pool.install(|| execute(cli.command, jobs)) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["terracast", "evaluate", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["terracast"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["terracast", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_input_is_data_error() {
        assert_eq!(run(["terracast", "evaluate", "--true", "/nonexistent/a.asc", "--pred", "/nonexistent/b.asc"]), EXIT_DATA);
    }
}

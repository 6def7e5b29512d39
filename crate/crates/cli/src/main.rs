use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cirloc::classify::{
    fit_area_models_1d, fit_area_models_md, load_models_1d, load_models_md, save_models_1d,
    save_models_md,
};
use cirloc::gmm::FitConfig;
use cirloc::harness::{
    compare_runtime, evaluate, prepare, render_report, run_experiment, svc_training_set,
    AccuracyReport, ExperimentSpec, Method, ReportFormat, TrainedModels, DEFAULT_VOTE_WINDOW,
};
use cirloc::model::{load_dataset, save_dataset, DatasetFormat};
use cirloc::preprocess::PreprocessConfig;
use cirloc::simulate::{generate_dataset, perturb_layout, scenario, SimConfig, LAYOUT_CHANGE_SEED};
use cirloc::svc::{load_svc, save_svc, train_svc_for, SvcConfig};
use cirloc::{Dataset, Error};

#[derive(Parser)]
#[command(
    name = "cir-locate",
    version,
    about = "Area-level UWB localization from CIR statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataFormat {
    Csv,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Markdown,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled raw dataset from a shipped scenario or a JSON config.
    Simulate {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        scenario: Option<String>,
        /// SimConfig as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Layout perturbation magnitude in [0, 1].
        #[arg(long)]
        perturb: Option<f64>,
        /// Seed of the layout perturbation.
        #[arg(long, default_value_t = LAYOUT_CHANGE_SEED)]
        layout_seed: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<DataFormat>,
        /// Also write the effective SimConfig as JSON.
        #[arg(long)]
        dump_config: Option<PathBuf>,
    },
    /// Low-pass filter and decimate a raw dataset.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<DataFormat>,
    },
    /// Fit per-area models (1d, md) or an SVC on similarity vectors (svc).
    Train {
        #[arg(long)]
        method: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Joint models the SVC features are computed with.
        #[arg(long)]
        md_models: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_VOTE_WINDOW)]
        vote_window: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate trained models on a labeled dataset.
    Eval {
        #[arg(long)]
        method: String,
        /// Model file of the method (1d, md or svc models; md models for maxsim).
        #[arg(long)]
        models: PathBuf,
        /// Joint models, needed with --method svc.
        #[arg(long)]
        md_models: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VOTE_WINDOW)]
        vote_window: usize,
        #[arg(long, value_enum, default_value = "markdown")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment described by a JSON spec and print its table.
    Report {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time per-bin against joint scoring.
    Bench {
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        scenario: Option<String>,
        /// Labeled dataset to fit and probe on.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn data_format(path: &Path, explicit: Option<DataFormat>) -> DatasetFormat {
    match explicit {
        Some(DataFormat::Csv) => DatasetFormat::Csv,
        Some(DataFormat::Binary) => DatasetFormat::Binary,
        None => DatasetFormat::from_path(path),
    }
}

fn load(path: &Path) -> cirloc::Result<Dataset> {
    load_dataset(path, DatasetFormat::from_path(path))
}

fn table_format(f: TableFormat) -> ReportFormat {
    match f {
        TableFormat::Markdown => ReportFormat::Markdown,
        TableFormat::Csv => ReportFormat::Csv,
    }
}

fn output(text: &str, out: Option<&Path>) -> cirloc::Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn sim_config(scenario_name: Option<&str>, config: Option<&Path>) -> cirloc::Result<SimConfig> {
    if let Some(path) = config {
        return serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Spec(format!("{}: {e}", path.display())));
    }
    let name = scenario_name.unwrap_or_default();
    scenario(name).ok_or_else(|| {
        Error::Spec(format!(
            "unknown scenario {name:?} (expected separable, los or nlos)"
        ))
    })
}

fn run(cli: Cli) -> cirloc::Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            config,
            out,
            perturb,
            layout_seed,
            seed,
            snapshots,
            format,
            dump_config,
        } => {
            let mut cfg = sim_config(scenario.as_deref(), config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = snapshots {
                cfg.snapshots_per_area = n;
            }
            if let Some(m) = perturb {
                cfg =
                    perturb_layout(&cfg, m, layout_seed).map_err(|e| Error::Spec(e.to_string()))?;
            }
            cfg.validate().map_err(|e| Error::Spec(e.to_string()))?;
            if let Some(p) = dump_config {
                fs::write(p, serde_json::to_string_pretty(&cfg)?)?;
            }
            let data = generate_dataset(&cfg)?;
            save_dataset(&data, &out, data_format(&out, format))?;
            eprintln!("wrote {} snapshots to {}", data.len(), out.display());
        }
        Command::Preprocess { input, out, format } => {
            let data = prepare(load(&input)?, &PreprocessConfig::default())?;
            save_dataset(&data, &out, data_format(&out, format))?;
        }
        Command::Train {
            method,
            input,
            out,
            md_models,
            vote_window,
            seed,
        } => {
            let method: Method = method.parse()?;
            if vote_window == 0 {
                return Err(Error::Spec("vote window must be at least 1".into()));
            }
            if method == Method::Svc && md_models.is_none() {
                return Err(Error::Spec("train --method svc needs --md-models".into()));
            }
            let train = prepare(load(&input)?, &PreprocessConfig::default())?;
            match method {
                Method::OneD => save_models_1d(
                    &fit_area_models_1d(&train, &FitConfig::one_dim().with_seed(seed))?,
                    &out,
                )?,
                Method::Md => save_models_md(
                    &fit_area_models_md(&train, &FitConfig::multi_dim().with_seed(seed))?,
                    &out,
                )?,
                Method::Svc => {
                    let md = load_models_md(md_models.as_deref().unwrap())?;
                    let (z, labels) = svc_training_set(&md, &train, vote_window)?;
                    if z.is_empty() {
                        return Err(Error::Training(format!(
                            "no area has {vote_window} consecutive snapshots"
                        )));
                    }
                    let cfg = SvcConfig {
                        seed,
                        ..SvcConfig::default()
                    };
                    save_svc(&train_svc_for(md.areas(), &z, &labels, &cfg)?, &out)?;
                }
                Method::MaxSim => {
                    return Err(Error::Spec(
                        "maxsim has no training step of its own; train md".into(),
                    ))
                }
            }
        }
        Command::Eval {
            method,
            models,
            md_models,
            input,
            vote_window,
            format,
            out,
        } => {
            let method: Method = method.parse()?;
            if method == Method::Svc && md_models.is_none() {
                return Err(Error::Spec("eval --method svc needs --md-models".into()));
            }
            let mut trained = TrainedModels::default();
            match method {
                Method::OneD => trained.one_d = Some(load_models_1d(&models)?),
                Method::Md | Method::MaxSim => trained.md = Some(load_models_md(&models)?),
                Method::Svc => {
                    trained.svc = Some(load_svc(&models)?);
                    trained.md = Some(load_models_md(md_models.as_deref().unwrap())?);
                }
            }
            let test = prepare(load(&input)?, &PreprocessConfig::default())?;
            let name = input
                .file_stem()
                .map_or("test".into(), |s| s.to_string_lossy().into_owned());
            let entries = evaluate(method, &trained, &test, &name, vote_window)?;
            let areas = trained.md.as_ref().map_or_else(
                || trained.one_d.as_ref().unwrap().areas().to_vec(),
                |m| m.areas().to_vec(),
            );
            let report = AccuracyReport::new(areas, vec![name], entries);
            output(
                &render_report(&report, table_format(format)),
                out.as_deref(),
            )?;
        }
        Command::Report { spec, format, out } => {
            let text = fs::read_to_string(&spec)?;
            let spec: ExperimentSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Spec(format!("{}: {e}", spec.display())))?;
            let report = run_experiment(&spec)?;
            output(
                &render_report(&report, table_format(format)),
                out.as_deref(),
            )?;
        }
        Command::Bench {
            scenario,
            input,
            snapshots,
            seed,
        } => {
            let data = match input {
                Some(p) => load(&p)?,
                None => {
                    let mut cfg = sim_config(scenario.as_deref(), None)?;
                    if let Some(s) = seed {
                        cfg.seed = s;
                    }
                    if let Some(n) = snapshots {
                        cfg.snapshots_per_area = n;
                    }
                    generate_dataset(&cfg)?
                }
            };
            let data = prepare(data, &PreprocessConfig::default())?;
            let one = fit_area_models_1d(&data, &FitConfig::one_dim())?;
            let md = fit_area_models_md(&data, &FitConfig::multi_dim())?;
            let probe = data.magnitudes()?;
            let cmp = compare_runtime(&one, &md, &probe)?;
            println!("1d: {:.3} us/snapshot", cmp.seconds_1d * 1e6);
            println!("md: {:.3} us/snapshot", cmp.seconds_md * 1e6);
            println!("ratio: {:.2}", cmp.ratio());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Spec(_) | Error::Argument(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

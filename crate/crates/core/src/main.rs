use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use droughtcast::pipeline::{self, RunConfig};
use droughtcast::preprocess::Task;
use droughtcast::trends::{DroughtLabel, Scenario};
use droughtcast::window::Aggregator;
use droughtcast::{Error, Result};

/// Drought forecasting from county weather windows.
///
/// Settings come from defaults, then `--config <toml>`, then DROUGHTCAST_*
/// environment variables (e.g. DROUGHTCAST_SEED=7), then flags.
#[derive(Parser)]
#[command(name = "droughtcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge raw splits, keep one state and aggregate trailing windows.
    Prepare(Overrides),
    /// Train three forests plus a soft-voting ensemble.
    Train {
        #[arg(long, default_value = "presence")]
        task: Task,
        #[command(flatten)]
        o: Overrides,
    },
    /// Evaluate a saved model on the configured test split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        o: Overrides,
    },
    /// Predict classes for prepared windows or raw daily records.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        o: Overrides,
    },
    /// Feature importance under the three feature-set scenarios.
    Importance(Overrides),
    /// County-level change in label share between two periods.
    Trends {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        scenario: u8,
        #[arg(long, default_value = "D4")]
        label: DroughtLabel,
        /// Also write per-year label counts to this CSV.
        #[arg(long)]
        yearly: Option<PathBuf>,
        #[command(flatten)]
        o: Overrides,
    },
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    fips: Option<PathBuf>,
    #[arg(long)]
    soil: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    window_days: Option<u32>,
    #[arg(long)]
    aggregator: Option<Aggregator>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Three comma-separated tree counts, e.g. 100,200,300.
    #[arg(long)]
    n_estimators: Option<String>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    #[arg(long)]
    max_features: Option<usize>,
    /// Collinearity threshold for importance pruning.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    fit_on_train: bool,
    #[arg(long)]
    lenient: bool,
    #[arg(long)]
    present_only: bool,
}

impl Overrides {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_env(std::env::vars())?;
        macro_rules! set {
            ($($f:ident => $t:ident),*) => {$(if let Some(v) = self.$f { cfg.$t = Some(v); })*};
        }
        set!(train => train, validation => validation, test => test, fips => fips,
             soil => soil, data => data, out => out, max_depth => max_depth,
             max_features => max_features);
        if let Some(v) = self.state {
            cfg.state = v;
        }
        if let Some(v) = self.window_days {
            cfg.window_days = v;
        }
        if let Some(v) = self.aggregator {
            cfg.aggregator = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if let Some(v) = self.n_estimators {
            cfg.n_estimators = pipeline::parse_triple(&v)?;
        }
        if let Some(v) = self.min_samples_leaf {
            cfg.min_samples_leaf = v;
        }
        if let Some(v) = self.threshold {
            cfg.collinearity_threshold = v;
        }
        cfg.fit_on_train |= self.fit_on_train;
        cfg.lenient |= self.lenient;
        cfg.present_only |= self.present_only;
        cfg.validate()?;
        eprintln!("# effective configuration\n{}", cfg.to_toml());
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(o) => {
            let s = pipeline::cmd_prepare(&o.resolve()?)?;
            println!("{} rows, {} feature+score columns", s.rows, s.columns);
        }
        Command::Train { task, o } => {
            let t = pipeline::cmd_train(&o.resolve()?, task)?;
            println!("{}", t.report_text);
            for p in &t.model_paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Evaluate { model, o } => {
            let (_, text) = pipeline::cmd_evaluate(&o.resolve()?, &model)?;
            println!("{text}");
        }
        Command::Predict { model, input, o } => {
            let preds = pipeline::cmd_predict(&o.resolve()?, &model, &input)?;
            eprintln!("{} predictions", preds.len());
        }
        Command::Importance(o) => {
            for r in pipeline::cmd_importance(&o.resolve()?)? {
                let top = r.top(3);
                println!(
                    "{}: {} features, accuracy {:.5}, top {}",
                    r.scenario,
                    r.retained.len(),
                    r.accuracy,
                    top.join(" ")
                );
            }
        }
        Command::Trends {
            scenario,
            label,
            yearly,
            o,
        } => {
            let cfg = o.resolve()?;
            let t = pipeline::cmd_trends(&cfg, Scenario::from_number(scenario)?, label)?;
            if let Some(path) = yearly {
                let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                droughtcast::trends::write_yearly_csv(std::io::BufWriter::new(f), &t.yearly)?;
            }
            println!("{}", t.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("DROUGHTCAST_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

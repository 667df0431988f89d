//! Subcommands of the `arm` tool.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use arm_core::data::{generate_synthetic, split, write_csv, DatasetSchema, SplitConfig, SyntheticSpec};
use arm_core::{evaluate, serialize_model, train_model, SubscaleTable, TrainConfig};
use arm_explain::{build_explanation_db, BuildOptions, CascadeConfig, ExplanationDb};
use clap::{Args, ValueEnum};

use crate::state::{load_dataset, load_model, AppState, Loaded};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_schema(path: Option<&Path>) -> Result<DatasetSchema> {
    match path {
        Some(p) => DatasetSchema::load(p).with_context(|| format!("loading schema {}", p.display())),
        None => Ok(DatasetSchema::fico()),
    }
}

fn train_config(path: Option<&Path>, joint_alpha: Option<f64>) -> Result<TrainConfig> {
    let mut config: TrainConfig = match path {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    if let Some(a) = joint_alpha {
        config.joint_alpha = a;
    }
    Ok(config)
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Synthetic spec as JSON; defaults to the HELOC-like spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 10_459)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the matching dataset schema.
    #[arg(long)]
    pub schema_out: Option<PathBuf>,
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let spec = match &args.spec {
        Some(p) => read_json(p)?,
        None => SyntheticSpec::fico_like(args.n, args.seed),
    };
    let data = generate_synthetic(&spec)?;
    let schema = spec.schema();
    let file = std::fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_csv(&data, &schema.label, std::io::BufWriter::new(file))?;
    if let Some(p) = &args.schema_out {
        std::fs::write(p, serde_json::to_string_pretty(&schema)?)?;
    }
    println!(
        "wrote {} rows to {} (positive rate {:.3})",
        data.n_rows(),
        args.out.display(),
        data.positive_rate()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Dataset schema; defaults to the HELOC layout.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Training config as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Weight of the end-to-end loss; 0 trains the two stages only.
    #[arg(long)]
    pub joint_alpha: Option<f64>,
    /// Hold out the first of the random 80/20 splits and report its accuracy.
    #[arg(long)]
    pub holdout: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the fit report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let schema = load_schema(args.schema.as_deref())?;
    let data = arm_core::data::load_csv(&args.data, &schema).with_context(|| format!("loading {}", args.data.display()))?;
    let config = train_config(args.config.as_deref(), args.joint_alpha)?;
    let train_rows = if args.holdout {
        Some(split(&data.labels, &SplitConfig::default())?.swap_remove(0).train)
    } else {
        None
    };
    let (model, report) = train_model(&data, &schema, &config, train_rows.as_deref())?;
    std::fs::write(&args.out, serialize_model(&model)).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(p) = &args.report {
        std::fs::write(p, serde_json::to_string_pretty(&report)?)?;
    }
    println!("model written to {}", args.out.display());
    println!("hash            {}", arm_core::model_hash(&model));
    println!("train accuracy  {:.4}", report.train_accuracy);
    if let Some(t) = report.test_accuracy {
        println!("test accuracy   {t:.4}");
    }
    if !report.converged() {
        println!("warning: not every fit reached the gradient tolerance");
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub joint_alpha: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub splits: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Print the full report as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let schema = load_schema(args.schema.as_deref())?;
    let data = arm_core::data::load_csv(&args.data, &schema).with_context(|| format!("loading {}", args.data.display()))?;
    let config = train_config(args.config.as_deref(), args.joint_alpha)?;
    let splits = SplitConfig {
        n_splits: args.splits,
        seed: args.seed,
        ..Default::default()
    };
    let report = evaluate(&data, &schema, &config, &splits)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{:<10} {:>8} {:>8}", "model", "mean", "std");
        for (name, m) in [("arm", report.arm), ("logistic", report.logistic), ("majority", report.majority)] {
            println!("{name:<10} {:>8.4} {:>8.4}", m.mean, m.std);
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct BuildDbArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Extra observations sampled from the per-feature marginals.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Keep valid entries from an existing file at `--out`.
    #[arg(long)]
    pub resume: bool,
    #[arg(long, default_value_t = 256)]
    pub checkpoint_every: usize,
}

pub fn build_db(args: &BuildDbArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let data = load_dataset(&args.data, args.schema.as_deref(), Some(&model))?;
    let loaded = Loaded::new(model).with_reference(&data, CascadeConfig::default())?;
    let explainer = loaded.explainer.as_ref().expect("reference attached");
    let resume = if args.resume && args.out.exists() {
        Some(ExplanationDb::load(&args.out)?)
    } else {
        None
    };
    let options = BuildOptions {
        n_random: args.random,
        seed: args.seed,
        checkpoint_every: args.checkpoint_every,
    };
    let (db, report) = build_explanation_db(explainer, &options, resume, |db, done, total| {
        tracing::info!(done, total, "checkpoint");
        db.save(&args.out)
    })?;
    db.save(&args.out)?;
    println!(
        "{} entries in {} (solved {}, reused {}, failed {}, stale {}, invalidated {})",
        db.len(),
        args.out.display(),
        report.solved,
        report.reused,
        report.failed,
        report.stale,
        report.invalidated
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Only this subscale.
    #[arg(long)]
    pub subscale: Option<String>,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    pub format: TableFormat,
}

pub fn table(args: &TableArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let selected: Vec<usize> = match &args.subscale {
        Some(name) => match model.subscales().iter().position(|s| &s.name == name) {
            Some(k) => vec![k],
            None => bail!("no subscale named `{name}`"),
        },
        None => (0..model.n_subscales()).collect(),
    };
    for (i, &k) in selected.iter().enumerate() {
        let t = SubscaleTable::for_subscale(&model, k);
        match args.format {
            TableFormat::Text => {
                print!("{}", t.render_text());
                println!("  weight {:.4}", model.second_layer_weights()[k]);
            }
            TableFormat::Csv => {
                let csv = t.to_csv();
                // One header for the whole listing.
                let body = if i == 0 { csv.as_str() } else { csv.split_once('\n').map_or("", |(_, b)| b) };
                print!("{body}");
            }
        }
    }
    if matches!(args.format, TableFormat::Text) && args.subscale.is_none() {
        println!("second-layer bias {:.4}", model.second_layer_bias());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Model document; without it every model endpoint answers 503.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Reference dataset for explanations and cases.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Explanation database built with `arm build-db`.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Add rules solved for new observations to the database, saved on exit.
    #[arg(long)]
    pub write_through: bool,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory of static assets served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

/// Loads everything named on the command line.
pub fn load_state(args: &ServeArgs) -> Result<AppState> {
    let Some(model_path) = &args.model else {
        if args.data.is_some() || args.db.is_some() {
            bail!("--data and --db need --model");
        }
        tracing::warn!("no model given; model endpoints will answer 503");
        return Ok(AppState::empty());
    };
    let model = load_model(model_path)?;
    let mut loaded = Loaded::new(model);
    if let Some(data_path) = &args.data {
        let data = load_dataset(data_path, args.schema.as_deref(), Some(&loaded.model))?;
        loaded = loaded.with_reference(&data, CascadeConfig::default())?;
    }
    if let Some(db_path) = &args.db {
        let db = if db_path.exists() {
            ExplanationDb::load(db_path)?
        } else if args.write_through {
            let explainer = loaded.explainer.as_ref().context("--db needs --data")?;
            ExplanationDb::for_explainer(explainer)
        } else {
            bail!("{} does not exist", db_path.display());
        };
        loaded = loaded.with_db(db, Some(db_path.clone()), args.write_through)?;
    }
    tracing::info!(hash = %loaded.hash, "model loaded");
    Ok(AppState::with_model(loaded))
}

pub async fn serve(args: ServeArgs) -> Result<()> {
    let state = Arc::new(load_state(&args)?);
    let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse().context("invalid --host/--port")?;
    let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
    tracing::info!(%addr, "listening");
    let app = crate::api::router(state.clone(), args.static_dir.clone());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(loaded) = &state.model {
        loaded.flush()?;
    }
    Ok(())
}

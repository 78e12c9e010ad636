//! The `cuh` command line: synth, train, encode, eval and sweep.
//!
//! Every table is written as tab-separated text with a header row.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::encode::{encode_view, encode_views_dual};
use crate::error::{CuhError, Result};
use crate::io::{
    export_codes, load_csv, load_labels, load_model, load_view, save_labels, save_model, save_view,
    synth_generate, LabelSets, MultiViewDataset,
};
use crate::metrics::{evaluate_cross_modal, DatabaseCodes, EvalConfig, EvalReport, DEFAULT_R_CUT};
use crate::model::{CuhModel, Hyperparams, Modality, ViewMatrix};
use crate::optimizer::train;

#[derive(Debug, Parser)]
#[command(name = "cuh", version, about = "Cluster-wise unsupervised hashing for cross-modal retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate planted-cluster two-view data.
    Synth(SynthArgs),
    /// Train a model and write it with its iteration trace.
    Train(TrainArgs),
    /// Hash raw features with a trained model.
    Encode(EncodeArgs),
    /// Cross-modal retrieval metrics for held-out queries.
    Eval(EvalArgs),
    /// mAP over a grid of one hyperparameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    pub clusters: usize,
    #[arg(long, default_value_t = 1000)]
    pub items: usize,
    #[arg(long, default_value_t = 64)]
    pub d1: usize,
    #[arg(long, default_value_t = 32)]
    pub d2: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra held-out items written as a separate query set.
    #[arg(long, default_value_t = 0)]
    pub queries: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Hyperparameter overrides shared by train and sweep.
#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub beta: f64,
    #[arg(long, default_value_t = 40)]
    pub clusters: usize,
    #[arg(long, default_value_t = 32)]
    pub bits: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 5)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl HyperArgs {
    pub fn to_hyperparams(&self) -> Hyperparams {
        Hyperparams {
            lambda: self.lambda,
            beta: self.beta,
            num_clusters: self.clusters,
            code_length: self.bits,
            max_outer_iters: self.max_iters,
            inner_w_iters: self.inner_iters,
            rel_tol: self.tol,
            seed: self.seed,
        }
    }
}

/// Feature files: `.csv`/`.tsv` are read as delimited text with one item per
/// row, anything else as a CUHD matrix.
#[derive(Debug, Clone, Args)]
pub struct ViewPaths {
    #[arg(long)]
    pub view1: PathBuf,
    #[arg(long)]
    pub view2: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: ViewPaths,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Per-iteration trace; defaults to the model path with `.trace.tsv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModalityArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub view1: Option<PathBuf>,
    #[arg(long)]
    pub view2: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub modality: ModalityArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DbCodesArg {
    Trained,
    Reencoded,
}

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub query_view1: PathBuf,
    #[arg(long)]
    pub query_view2: PathBuf,
    #[arg(long)]
    pub query_labels: PathBuf,
    /// Labels of the training items, one line per item.
    #[arg(long)]
    pub db_labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_R_CUT)]
    pub r_cut: usize,
    /// Comma-separated list of cutoffs for top-n precision.
    #[arg(long, value_delimiter = ',', default_values_t = EvalConfig::default().n_grid)]
    pub topn: Vec<usize>,
}

impl QueryArgs {
    fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            r_cut: self.r_cut,
            n_grid: self.topn.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub queries: QueryArgs,
    #[arg(long, value_enum, default_value_t = DbCodesArg::Trained)]
    pub db_codes: DbCodesArg,
    /// Raw database view 1; required with `--db-codes reencoded`.
    #[arg(long)]
    pub db_view1: Option<PathBuf>,
    #[arg(long)]
    pub db_view2: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Lambda,
    Beta,
    Clusters,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: ViewPaths,
    #[command(flatten)]
    pub queries: QueryArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DbCodesArg::Trained)]
    pub db_codes: DbCodesArg,
    #[arg(long)]
    pub out: PathBuf,
}

pub const TASK_NAMES: [&str; 2] = ["v1_query_v2_db", "v2_query_v1_db"];

/// Runs one parsed command; messages for the user go to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Encode(a) => cmd_encode(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

pub fn read_view(path: &Path) -> Result<ViewMatrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => load_csv(path, b','),
        Some("tsv") => load_csv(path, b'\t'),
        _ => load_view(path),
    }
}

fn read_dataset(v1: &Path, v2: &Path, labels: Option<&Path>) -> Result<MultiViewDataset> {
    let labels = labels.map(load_labels).transpose()?;
    MultiViewDataset::new(read_view(v1)?, read_view(v2)?, labels)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CuhError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CuhError::io(dir, e))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    if a.items < a.clusters {
        return Err(CuhError::InvalidArgument(format!(
            "--items {} is smaller than --clusters {}",
            a.items, a.clusters
        )));
    }
    let all = synth_generate(a.clusters, a.items + a.queries, a.d1, a.d2, a.noise, a.seed)?;
    let (db, queries) = all.split_at(a.items)?;
    create_dir(&a.out_dir)?;
    let write_set = |set: &MultiViewDataset, prefix: &str| -> Result<()> {
        save_view(set.view(Modality::View1), a.out_dir.join(format!("{prefix}view1.cuhd")))?;
        save_view(set.view(Modality::View2), a.out_dir.join(format!("{prefix}view2.cuhd")))?;
        save_labels(set.labels().expect("synthetic data is labeled"), a.out_dir.join(format!("{prefix}labels.txt")))
    };
    write_set(&db, "")?;
    if a.queries > 0 {
        write_set(&queries, "query_")?;
    }
    println!(
        "wrote {} items ({} queries) to {}",
        a.items,
        a.queries,
        a.out_dir.display()
    );
    Ok(())
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let data = read_dataset(&a.data.view1, &a.data.view2, None)?;
    let hp = a.hyper.to_hyperparams();
    let (model, trace) = train(&data, &hp)?;
    save_model(&model, &a.model)?;
    let trace_path = a
        .trace
        .clone()
        .unwrap_or_else(|| a.model.with_extension("trace.tsv"));
    write_text(&trace_path, &trace.to_tsv())?;
    println!(
        "{} after {} iterations, objective {:.6e}",
        if trace.converged { "converged" } else { "stopped" },
        trace.iterations(),
        trace.final_objective()
    );
    Ok(())
}

pub fn cmd_encode(a: &EncodeArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let need = |p: &Option<PathBuf>, flag: &str| -> Result<ViewMatrix> {
        let p = p
            .as_ref()
            .ok_or_else(|| CuhError::InvalidArgument(format!("{flag} is required for this modality")))?;
        read_view(p)
    };
    let codes = match a.modality {
        ModalityArg::One => encode_view(&model, Modality::View1, &need(&a.view1, "--view1")?)?,
        ModalityArg::Two => encode_view(&model, Modality::View2, &need(&a.view2, "--view2")?)?,
        ModalityArg::Both => encode_views_dual(&model, &need(&a.view1, "--view1")?, &need(&a.view2, "--view2")?)?,
    };
    export_codes(&codes, &a.out)?;
    println!("encoded {} items with {} bits", codes.count(), codes.code_length());
    Ok(())
}

struct EvalInputs {
    queries: MultiViewDataset,
    db_labels: LabelSets,
    cfg: EvalConfig,
}

fn eval_inputs(q: &QueryArgs) -> Result<EvalInputs> {
    Ok(EvalInputs {
        queries: read_dataset(&q.query_view1, &q.query_view2, Some(&q.query_labels))?,
        db_labels: load_labels(&q.db_labels)?,
        cfg: q.eval_config(),
    })
}

fn run_eval(model: &CuhModel, inputs: &EvalInputs, db: DatabaseCodes<'_>) -> Result<[EvalReport; 2]> {
    if inputs.db_labels.len() != model.num_items() {
        return Err(CuhError::dim("database labels", model.num_items(), inputs.db_labels.len()));
    }
    evaluate_cross_modal(model, &inputs.queries, &inputs.db_labels, db, &inputs.cfg)
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let inputs = eval_inputs(&a.queries)?;
    let raw_db = match a.db_codes {
        DbCodesArg::Trained => None,
        DbCodesArg::Reencoded => {
            let (Some(v1), Some(v2)) = (&a.db_view1, &a.db_view2) else {
                return Err(CuhError::InvalidArgument(
                    "--db-codes reencoded needs --db-view1 and --db-view2".into(),
                ));
            };
            Some(read_dataset(v1, v2, None)?)
        }
    };
    let db = raw_db.as_ref().map_or(DatabaseCodes::Trained, DatabaseCodes::Reencoded);
    let reports = run_eval(&model, &inputs, db)?;

    create_dir(&a.out_dir)?;
    let mut map = String::from("task\tmap\tr_cut\n");
    for (name, report) in TASK_NAMES.iter().zip(&reports) {
        writeln!(map, "{name}\t{:.6}\t{}", report.map, report.r_cut).expect("writing to a String");
        write_text(&a.out_dir.join(format!("topn_{name}.tsv")), &report.topn_tsv())?;
        write_text(&a.out_dir.join(format!("pr_{name}.tsv")), &report.pr_tsv())?;
    }
    write_text(&a.out_dir.join("map.tsv"), &map)?;
    print!("{map}");
    Ok(())
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let data = read_dataset(&a.data.view1, &a.data.view2, None)?;
    let inputs = eval_inputs(&a.queries)?;
    let base = a.hyper.to_hyperparams();
    let grid: Vec<Hyperparams> = a
        .values
        .iter()
        .map(|&v| {
            let mut hp = base.clone();
            match a.param {
                SweepParam::Lambda => hp.lambda = v,
                SweepParam::Beta => hp.beta = v,
                SweepParam::Clusters => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(CuhError::InvalidArgument(format!(
                            "cluster count must be a positive integer, got {v}"
                        )));
                    }
                    hp.num_clusters = v as usize;
                }
            }
            Ok(hp)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<(f64, [f64; 2], usize)> = grid
        .par_iter()
        .zip(a.values.par_iter())
        .map(|(hp, &v)| {
            let (model, trace) = train(&data, hp)?;
            let db = match a.db_codes {
                DbCodesArg::Trained => DatabaseCodes::Trained,
                DbCodesArg::Reencoded => DatabaseCodes::Reencoded(&data),
            };
            let reports = run_eval(&model, &inputs, db)?;
            Ok((v, [reports[0].map, reports[1].map], trace.iterations()))
        })
        .collect::<Result<_>>()?;

    let name = match a.param {
        SweepParam::Lambda => "lambda",
        SweepParam::Beta => "beta",
        SweepParam::Clusters => "clusters",
    };
    let mut out = format!("{name}\tmap_{}\tmap_{}\tmap_mean\titerations\n", TASK_NAMES[0], TASK_NAMES[1]);
    for (v, maps, iters) in rows {
        writeln!(
            out,
            "{v}\t{:.6}\t{:.6}\t{:.6}\t{iters}",
            maps[0],
            maps[1],
            0.5 * (maps[0] + maps[1])
        )
        .expect("writing to a String");
    }
    write_text(&a.out, &out)?;
    print!("{out}");
    Ok(())
}

//! `ian` command-line tool: dataset statistics, training, evaluation,
//! prediction, gradient checking and attention heatmaps.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_attention_viz, cmd_eval, cmd_gradcheck, cmd_gradcheck_with, cmd_predict, cmd_stats, cmd_train};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "ian", version, about = "Target-level sentiment classification with two-way LSTM attention")]
pub struct Cli {
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Polarity counts and target-length histograms of the train/test splits.
    Stats(StatsArgs),
    /// Train a model and write its checkpoint and per-epoch history.
    Train(TrainArgs),
    /// Accuracy of a checkpoint on the test split.
    Eval(EvalArgs),
    /// Label `sentence<TAB>target[<TAB>gold]` lines with a checkpoint.
    Predict(PredictArgs),
    /// Compare analytic gradients with central differences on tiny random models.
    Gradcheck(GradcheckArgs),
    /// Attention heatmap (SVG, HTML and a text dump) for one sentence and target.
    Viz(VizArgs),
}

type Pairs = Vec<(&'static str, String)>;

fn push<T: ToString>(out: &mut Pairs, key: &'static str, value: &Option<T>) {
    if let Some(v) = value {
        out.push((key, v.to_string()));
    }
}

fn push_path(out: &mut Pairs, key: &'static str, value: &Option<PathBuf>) {
    if let Some(v) = value {
        out.push((key, v.display().to_string()));
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding the official XML files.
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Explicit training XML file (use with --test-file).
    #[arg(long, value_name = "FILE")]
    pub train_file: Option<PathBuf>,
    /// Explicit test XML file.
    #[arg(long, value_name = "FILE")]
    pub test_file: Option<PathBuf>,
    /// restaurants, laptops or all.
    #[arg(long)]
    pub category: Option<String>,
    /// Use the bundled fixture files.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub fixture: Option<bool>,
    /// Build the vocabulary over train and test text.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub transductive: Option<bool>,
}

impl DataArgs {
    fn pairs(&self, out: &mut Pairs) {
        push_path(out, "data_dir", &self.data_dir);
        push_path(out, "train_file", &self.train_file);
        push_path(out, "test_file", &self.test_file);
        push(out, "category", &self.category);
        push(out, "fixture", &self.fixture);
        push(out, "transductive", &self.transductive);
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Also write the canonical instance dump of every split.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub dump_instances: Option<bool>,
    /// Output directory for instance dumps.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Pretrained vectors, `token v1 ... vd` per line.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Lowercase pretrained tokens before matching.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub lowercase_embeddings: Option<bool>,
    /// ian, no-target, no-interaction, target2content, lstm, td-lstm or majority.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Weights are drawn from U(-r, r).
    #[arg(long)]
    pub init_range: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub tie_attention: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub tie_lstm: Option<bool>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Global gradient-norm limit, or `none`.
    #[arg(long)]
    pub clip_norm: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub freeze_embeddings: Option<bool>,
    /// Checkpoint to write (default OUT_DIR/model.ckpt).
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint to evaluate (default OUT_DIR/model.ckpt).
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Directory for eval.tsv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// One `sentence<TAB>target[<TAB>gold]` record per line.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Where to write labels (default stdout).
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Variant to check.
    #[arg(long)]
    pub variant: Option<String>,
    /// Check every variant.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub all_variants: Option<bool>,
    /// Comma-separated sizes; each is used for both embedding and hidden size.
    #[arg(long, value_name = "LIST")]
    pub dims: Option<String>,
    #[arg(long)]
    pub context_len: Option<usize>,
    #[arg(long)]
    pub target_len: Option<usize>,
    /// Seed of the synthesized model and instance (default 3).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest accepted relative error.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub tie_attention: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub tie_lstm: Option<bool>,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub sentence: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    /// Target token range `start:end`, for targets that cannot be found by text.
    #[arg(long)]
    pub span: Option<String>,
    /// Directory for attention.svg, attention.html and attention.txt.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

impl Command {
    /// Flag values as configuration pairs, in the same key space as the
    /// config file.
    pub fn pairs(&self) -> Pairs {
        let mut p = Pairs::new();
        match self {
            Command::Stats(a) => {
                a.data.pairs(&mut p);
                push(&mut p, "dump_instances", &a.dump_instances);
                push_path(&mut p, "out_dir", &a.out_dir);
            }
            Command::Train(a) => {
                a.data.pairs(&mut p);
                push_path(&mut p, "embeddings", &a.embeddings);
                push(&mut p, "embed_dim", &a.embed_dim);
                push(&mut p, "lowercase_embeddings", &a.lowercase_embeddings);
                push(&mut p, "variant", &a.variant);
                push(&mut p, "hidden_dim", &a.hidden_dim);
                push(&mut p, "init_range", &a.init_range);
                push(&mut p, "tie_attention", &a.tie_attention);
                push(&mut p, "tie_lstm", &a.tie_lstm);
                push(&mut p, "learning_rate", &a.learning_rate);
                push(&mut p, "momentum", &a.momentum);
                push(&mut p, "l2", &a.l2);
                push(&mut p, "dropout", &a.dropout);
                push(&mut p, "epochs", &a.epochs);
                push(&mut p, "batch_size", &a.batch_size);
                push(&mut p, "seed", &a.seed);
                push(&mut p, "clip_norm", &a.clip_norm);
                push(&mut p, "freeze_embeddings", &a.freeze_embeddings);
                push_path(&mut p, "checkpoint", &a.checkpoint);
                push_path(&mut p, "out_dir", &a.out_dir);
            }
            Command::Eval(a) => {
                a.data.pairs(&mut p);
                push_path(&mut p, "checkpoint", &a.checkpoint);
                push_path(&mut p, "out_dir", &a.out_dir);
            }
            Command::Predict(a) => {
                push_path(&mut p, "checkpoint", &a.checkpoint);
                push_path(&mut p, "input", &a.input);
                push_path(&mut p, "output", &a.output);
                push_path(&mut p, "out_dir", &a.out_dir);
            }
            Command::Gradcheck(a) => {
                push(&mut p, "variant", &a.variant);
                push(&mut p, "all_variants", &a.all_variants);
                push(&mut p, "gradcheck_dims", &a.dims);
                push(&mut p, "context_len", &a.context_len);
                push(&mut p, "target_len", &a.target_len);
                push(&mut p, "gradcheck_seed", &a.seed);
                push(&mut p, "tolerance", &a.tolerance);
                push(&mut p, "tie_attention", &a.tie_attention);
                push(&mut p, "tie_lstm", &a.tie_lstm);
            }
            Command::Viz(a) => {
                push_path(&mut p, "checkpoint", &a.checkpoint);
                push(&mut p, "sentence", &a.sentence);
                push(&mut p, "target", &a.target);
                push(&mut p, "span", &a.span);
                push_path(&mut p, "out_dir", &a.out_dir);
            }
        }
        p
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for (key, value) in cli.command.pairs() {
        cfg.set(key, &value).map_err(|e| anyhow::anyhow!("--{}: {e}", key.replace('_', "-")))?;
    }
    Ok(cfg)
}

pub fn dispatch(command: &Command, cfg: &RunConfig, out: &mut dyn Write) -> i32 {
    match command {
        Command::Stats(_) => cmd_stats(cfg, out),
        Command::Train(_) => cmd_train(cfg, out),
        Command::Eval(_) => cmd_eval(cfg, out),
        Command::Predict(_) => cmd_predict(cfg, out),
        Command::Gradcheck(_) => cmd_gradcheck(cfg, out),
        Command::Viz(_) => cmd_attention_viz(cfg, out),
    }
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// exit with 2.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match resolve(&cli) {
        Ok(cfg) => dispatch(&cli.command, &cfg, out),
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

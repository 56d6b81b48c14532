//! Run configuration shared by every subcommand.
//!
//! A config file is flat `key = value` text; blank lines and lines starting
//! with `#` are ignored. Keys are the ones listed in [`KEYS`]. Command-line
//! flags use the same names with `-` for `_` and are applied after the
//! file, so they win.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ian_core::data::{Category, Source};
use ian_core::model::ModelVariant;
use ian_core::training::TrainConfig;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("data_dir", "directory with the official XML files (else $IAN_SEMEVAL_DIR, else bundled fixtures)"),
    ("train_file", "explicit training XML file (needs test_file too)"),
    ("test_file", "explicit test XML file"),
    ("category", "restaurants | laptops | all"),
    ("fixture", "use the bundled fixture files even if a data directory is configured"),
    ("transductive", "build the vocabulary over train and test text (default true)"),
    ("embeddings", "pretrained vectors, one `token v1 ... vd` per line"),
    ("embed_dim", "embedding dimension (default 300)"),
    ("lowercase_embeddings", "lowercase tokens of the pretrained file before matching (default true)"),
    ("variant", "ian | no-target | no-interaction | target2content | lstm | td-lstm | majority"),
    ("hidden_dim", "LSTM hidden size (default 300)"),
    ("init_range", "weights drawn from U(-r, r) (default 0.1)"),
    ("tie_attention", "share one attention matrix between both directions"),
    ("tie_lstm", "share one LSTM between context and target"),
    ("learning_rate", "step size (default 0.01)"),
    ("momentum", "momentum coefficient (default 0.9)"),
    ("l2", "L2 coefficient (default 1e-5)"),
    ("dropout", "dropout rate on the classifier input (default 0.5)"),
    ("epochs", "training epochs (default 25)"),
    ("batch_size", "instances per update (default 32)"),
    ("seed", "seed for every random draw (default 1)"),
    ("clip_norm", "rescale gradients to this global norm; `none` disables (default none)"),
    ("freeze_embeddings", "keep the embedding table fixed"),
    ("checkpoint", "checkpoint file to write (train) or read (eval, predict, viz)"),
    ("out_dir", "directory for history, reports and figures (default ian-out)"),
    ("dump_instances", "stats: also write the canonical instance dump"),
    ("input", "predict: input file, `sentence<TAB>target[<TAB>gold]` per line"),
    ("output", "predict: output file (default stdout)"),
    ("sentence", "viz: review sentence"),
    ("target", "viz: target phrase"),
    ("span", "viz: explicit target token range `start:end`"),
    ("gradcheck_dims", "gradcheck: comma-separated sizes, each used for both embedding and hidden size"),
    ("context_len", "gradcheck: context length (default 4)"),
    ("target_len", "gradcheck: target length (default 2)"),
    ("tolerance", "gradcheck: maximum relative error (default 1e-4)"),
    ("gradcheck_seed", "gradcheck: seed of the synthesized model and instance (default 3)"),
    ("all_variants", "gradcheck: check every model variant"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub train_file: Option<PathBuf>,
    pub test_file: Option<PathBuf>,
    /// `None` means both categories.
    pub category: Option<Category>,
    pub fixture: bool,
    pub transductive: bool,
    pub embeddings: Option<PathBuf>,
    pub embed_dim: usize,
    pub lowercase_embeddings: bool,
    pub train: TrainConfig,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub dump_instances: bool,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub sentence: Option<String>,
    pub target: Option<String>,
    pub span: Option<(usize, usize)>,
    pub gradcheck_dims: Vec<usize>,
    pub context_len: usize,
    pub target_len: usize,
    pub tolerance: f64,
    pub gradcheck_seed: u64,
    pub all_variants: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: None,
            train_file: None,
            test_file: None,
            category: None,
            fixture: false,
            transductive: true,
            embeddings: None,
            embed_dim: 300,
            lowercase_embeddings: true,
            train: TrainConfig::default(),
            checkpoint: None,
            out_dir: PathBuf::from("ian-out"),
            dump_instances: false,
            input: None,
            output: None,
            sentence: None,
            target: None,
            span: None,
            gradcheck_dims: vec![3, 8],
            context_len: 4,
            target_len: 2,
            tolerance: ian_core::gradcheck::DEFAULT_TOLERANCE,
            gradcheck_seed: 3,
            all_variants: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| anyhow!("bad value {value:?} for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("bad value {value:?} for {key}: expected true or false"),
    }
}

pub fn parse_span(value: &str) -> Result<(usize, usize)> {
    let (s, e) = value.split_once(':').ok_or_else(|| anyhow!("span {value:?} must look like start:end"))?;
    let (s, e): (usize, usize) = (parse("span", s.trim())?, parse("span", e.trim())?);
    if s >= e {
        bail!("span {value:?} is empty");
    }
    Ok((s, e))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        let t = &mut self.train;
        match key {
            "data_dir" => self.data_dir = path(),
            "train_file" => self.train_file = path(),
            "test_file" => self.test_file = path(),
            "category" => self.category = if v.eq_ignore_ascii_case("all") { None } else { Some(parse(key, v)?) },
            "fixture" => self.fixture = parse_bool(key, v)?,
            "transductive" => self.transductive = parse_bool(key, v)?,
            "embeddings" => self.embeddings = path(),
            "embed_dim" => self.embed_dim = parse(key, v)?,
            "lowercase_embeddings" => self.lowercase_embeddings = parse_bool(key, v)?,
            "variant" => t.model.variant = parse::<ModelVariant>(key, v)?,
            "hidden_dim" => t.model.hidden_dim = parse(key, v)?,
            "init_range" => t.model.init_range = parse(key, v)?,
            "tie_attention" => t.model.tie_attention = parse_bool(key, v)?,
            "tie_lstm" => t.model.tie_lstm = parse_bool(key, v)?,
            "learning_rate" => t.learning_rate = parse(key, v)?,
            "momentum" => t.momentum = parse(key, v)?,
            "l2" => t.l2 = parse(key, v)?,
            "dropout" => t.dropout = parse(key, v)?,
            "epochs" => t.epochs = parse(key, v)?,
            "batch_size" => t.batch_size = parse(key, v)?,
            "seed" => t.seed = parse(key, v)?,
            "clip_norm" => t.clip_norm = if v.eq_ignore_ascii_case("none") { None } else { Some(parse(key, v)?) },
            "freeze_embeddings" => t.freeze_embeddings = parse_bool(key, v)?,
            "checkpoint" => self.checkpoint = path(),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "dump_instances" => self.dump_instances = parse_bool(key, v)?,
            "input" => self.input = path(),
            "output" => self.output = path(),
            "sentence" => self.sentence = Some(v.to_string()),
            "target" => self.target = Some(v.to_string()),
            "span" => self.span = Some(parse_span(v)?),
            "gradcheck_dims" => {
                self.gradcheck_dims = v.split(',').map(|d| parse(key, d.trim())).collect::<Result<Vec<usize>>>()?;
                if self.gradcheck_dims.is_empty() || self.gradcheck_dims.contains(&0) {
                    bail!("gradcheck_dims must list positive sizes");
                }
            }
            "context_len" => self.context_len = parse(key, v)?,
            "target_len" => self.target_len = parse(key, v)?,
            "tolerance" => self.tolerance = parse(key, v)?,
            "gradcheck_seed" => self.gradcheck_seed = parse(key, v)?,
            "all_variants" => self.all_variants = parse_bool(key, v)?,
            _ => bail!("unknown configuration key {key:?}"),
        }
        Ok(())
    }

    /// Applies a `key = value` document; errors name the line.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("{origin}:{}: expected `key = value`", k + 1))?;
            self.set(key.trim(), value).with_context(|| format!("{origin}:{}", k + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Explicit files, then `data_dir`, then the environment, then fixtures.
    pub fn source(&self) -> Result<Source> {
        if self.fixture {
            return Ok(Source::Fixture);
        }
        match (&self.train_file, &self.test_file) {
            (Some(train), Some(test)) => return Ok(Source::Files { train: train.clone(), test: test.clone() }),
            (None, None) => {}
            _ => bail!("train_file and test_file must be given together"),
        }
        Ok(match &self.data_dir {
            Some(d) => Source::Dir(d.clone()),
            None => Source::from_env(),
        })
    }

    /// Categories a command should cover.
    pub fn categories(&self) -> Vec<Category> {
        match self.category {
            Some(c) => vec![c],
            None => Category::ALL.to_vec(),
        }
    }

    /// The single category for commands that train or evaluate one model.
    pub fn single_category(&self) -> Category {
        self.category.unwrap_or(Category::Restaurants)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out_dir.join("model.ckpt"))
    }

    /// Settings that shape a trained model, echoed into its checkpoint.
    pub fn echo(&self) -> Vec<(String, String)> {
        let t = &self.train;
        let mut v = vec![
            ("category", self.single_category().to_string()),
            ("transductive", self.transductive.to_string()),
            ("embeddings", self.embeddings.as_ref().map_or("none".into(), |p| p.display().to_string())),
            ("init_range", t.model.init_range.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("momentum", t.momentum.to_string()),
            ("l2", t.l2.to_string()),
            ("dropout", t.dropout.to_string()),
            ("epochs", t.epochs.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("seed", t.seed.to_string()),
            ("clip_norm", t.clip_norm.map_or("none".into(), |c| c.to_string())),
            ("freeze_embeddings", t.freeze_embeddings.to_string()),
        ];
        v.retain(|(_, val)| !val.contains('\n'));
        v.into_iter().map(|(k, val)| (k.to_string(), val)).collect()
    }
}

//! Plain-text model container.
//!
//! ```text
//! ian-checkpoint 1
//! variant ian
//! hidden_dim 300
//! embed_dim 300
//! vocab_size 5000
//! tie_lstm false
//! tie_attention false
//! trainable_embeddings true
//! majority_label 0
//! meta <key> <value...>          (any number, free-form)
//! vocab <n>
//! <one token per line, index order, PAD first>
//! tensor embeddings <rows> <cols>
//! <one row per line>
//! tensor <group>.<name> <len>
//! <values on one line>
//! ...
//! end
//! ```
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::embeddings::{EmbeddingTable, Vocab};
use crate::error::{Error, Result};
use crate::model::{IanParams, ModelConfig, ModelVariant};
use crate::numerics::{Matrix, Rng};

pub const MAGIC: &str = "ian-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: IanParams,
    pub vocab: Vocab,
    /// Free-form `(key, value)` pairs, e.g. the training configuration.
    pub meta: Vec<(String, String)>,
}

impl Checkpoint {
    pub fn new(params: IanParams, vocab: Vocab) -> Self {
        Checkpoint { params, vocab, meta: Vec::new() }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 12);
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        write!(s, "{v}").expect("writing to a String");
    }
    s
}

fn check_token(s: &str, what: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(Error::Invalid(format!("{what} {s:?} cannot be stored (empty or contains whitespace)")));
    }
    Ok(())
}

pub fn to_text(ckpt: &Checkpoint) -> Result<String> {
    let p = &ckpt.params;
    p.validate()?;
    if p.embeddings.vocab_size() != ckpt.vocab.len() {
        return Err(Error::shape("checkpoint vocabulary", p.embeddings.vocab_size(), ckpt.vocab.len()));
    }
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("{MAGIC} {VERSION}"));
    line(format!("variant {}", p.variant.name()));
    line(format!("hidden_dim {}", p.hidden_dim()));
    line(format!("embed_dim {}", p.embeddings.dim()));
    line(format!("vocab_size {}", ckpt.vocab.len()));
    line(format!("tie_lstm {}", p.tie_lstm()));
    line(format!("tie_attention {}", p.tie_attention()));
    line(format!("trainable_embeddings {}", p.embeddings.trainable));
    line(format!("majority_label {}", p.majority_label));
    for (k, v) in &ckpt.meta {
        check_token(k, "meta key")?;
        if v.contains('\n') {
            return Err(Error::Invalid(format!("meta value for {k} contains a newline")));
        }
        line(format!("meta {k} {v}"));
    }
    line(format!("vocab {}", ckpt.vocab.len()));
    for t in ckpt.vocab.tokens() {
        check_token(t, "token")?;
        line(t.clone());
    }
    let m = &p.embeddings.matrix;
    line(format!("tensor embeddings {} {}", m.rows(), m.cols()));
    for r in 0..m.rows() {
        line(join(m.row(r)));
    }
    for (group, slot) in p.named_slots() {
        line(format!("tensor {group}.{} {}", slot.name, slot.data.len()));
        line(join(slot.data));
    }
    line("end".to_string());
    Ok(out)
}

struct Lines<'a> {
    origin: &'a str,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.origin.to_string(), line: self.line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str> {
        let (k, l) = self.iter.next().ok_or_else(|| Error::Parse {
            path: self.origin.to_string(),
            line: self.line + 1,
            msg: "unexpected end of file".into(),
        })?;
        self.line = k + 1;
        Ok(l)
    }

    fn floats(&mut self, expected: usize) -> Result<Vec<f64>> {
        let l = self.next()?;
        let values = l
            .split_ascii_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(format!("bad number {t:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", values.len())));
        }
        Ok(values)
    }
}

fn parse_header<T: std::str::FromStr>(lines: &Lines, value: Option<&str>, key: &str) -> Result<T> {
    value.ok_or_else(|| lines.err(format!("missing header {key}")))?.parse().map_err(|_| lines.err(format!("bad value for {key}")))
}

pub fn from_text(text: &str, origin: &str) -> Result<Checkpoint> {
    let mut lines = Lines { origin, iter: text.lines().enumerate(), line: 0 };
    let first = lines.next()?;
    match first.split_once(' ') {
        Some((MAGIC, v)) if v.trim() == VERSION.to_string() => {}
        Some((MAGIC, v)) => return Err(lines.err(format!("unsupported checkpoint version {v}"))),
        _ => return Err(lines.err(format!("not a checkpoint (expected \"{MAGIC} {VERSION}\")"))),
    }

    let mut header: Vec<(String, String)> = Vec::new();
    let mut meta = Vec::new();
    let vocab_len: usize = loop {
        let l = lines.next()?;
        let (key, value) = l.split_once(' ').unwrap_or((l, ""));
        match key {
            "vocab" => break value.trim().parse().map_err(|_| lines.err("bad vocab size"))?,
            "meta" => {
                let (k, v) = value.split_once(' ').unwrap_or((value, ""));
                meta.push((k.to_string(), v.to_string()));
            }
            _ => header.push((key.to_string(), value.trim().to_string())),
        }
    };
    let get = |k: &str| header.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let variant: ModelVariant =
        get("variant").ok_or_else(|| lines.err("missing header variant"))?.parse().map_err(|e: Error| lines.err(e.to_string()))?;
    let hidden_dim: usize = parse_header(&lines, get("hidden_dim"), "hidden_dim")?;
    let embed_dim: usize = parse_header(&lines, get("embed_dim"), "embed_dim")?;
    let vocab_size: usize = parse_header(&lines, get("vocab_size"), "vocab_size")?;
    let tie_lstm: bool = parse_header(&lines, get("tie_lstm"), "tie_lstm")?;
    let tie_attention: bool = parse_header(&lines, get("tie_attention"), "tie_attention")?;
    let trainable: bool = parse_header(&lines, get("trainable_embeddings"), "trainable_embeddings")?;
    let majority_label: usize = parse_header(&lines, get("majority_label"), "majority_label")?;
    if vocab_len != vocab_size {
        return Err(lines.err(format!("vocab section has {vocab_len} entries, header says {vocab_size}")));
    }

    let mut tokens = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        tokens.push(lines.next()?.to_string());
    }
    let vocab = Vocab::from_tokens(tokens).map_err(|e| lines.err(e.to_string()))?;

    let table = EmbeddingTable::new(Matrix::zeros(vocab_size, embed_dim), trainable);
    let mut params = if variant == ModelVariant::Majority {
        let mut p = IanParams::majority(vocab_size, majority_label);
        p.embeddings = table;
        p
    } else {
        let config = ModelConfig { variant, hidden_dim, tie_attention, tie_lstm, ..ModelConfig::default() };
        // every array is overwritten below; the draw only fixes the shapes
        IanParams::init(&config, table, &mut Rng::new(0))?
    };
    params.majority_label = majority_label;

    let head = lines.next()?;
    let dims: Vec<&str> = head.split_ascii_whitespace().collect();
    if dims.len() != 4 || dims[..2] != ["tensor", "embeddings"] {
        return Err(lines.err("expected \"tensor embeddings <rows> <cols>\""));
    }
    if dims[2] != vocab_size.to_string() || dims[3] != embed_dim.to_string() {
        return Err(lines.err(format!("embedding shape {}x{} does not match header {vocab_size}x{embed_dim}", dims[2], dims[3])));
    }
    for r in 0..vocab_size {
        let row = lines.floats(embed_dim)?;
        params.embeddings.matrix.row_mut(r).copy_from_slice(&row);
    }

    let n_slots = params.named_slots().len();
    for k in 0..n_slots {
        let head = lines.next()?;
        let (expected_name, expected_len) = {
            let slots = params.named_slots();
            (format!("{}.{}", slots[k].0, slots[k].1.name), slots[k].1.data.len())
        };
        let parts: Vec<&str> = head.split_ascii_whitespace().collect();
        if parts.len() != 3 || parts[0] != "tensor" || parts[1] != expected_name {
            return Err(lines.err(format!("expected tensor {expected_name}, found {head:?}")));
        }
        if parts[2] != expected_len.to_string() {
            return Err(lines.err(format!("tensor {expected_name} has length {}, expected {expected_len}", parts[2])));
        }
        let values = lines.floats(expected_len)?;
        params.named_slots_mut()[k].1.data.copy_from_slice(&values);
    }
    if lines.next()? != "end" {
        return Err(lines.err("expected \"end\""));
    }
    params.validate()?;
    Ok(Checkpoint { params, vocab, meta })
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let text = to_text(ckpt)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, &path.display().to_string())
}

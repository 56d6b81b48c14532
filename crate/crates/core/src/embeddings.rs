//! Vocabulary and word-embedding table.
//!
//! Index 0 is always the PAD token, whose row is held at zero. Pretrained
//! vectors are read from the usual whitespace-separated text format
//! (`token v1 ... vd` per line); vocabulary entries missing from the file
//! are drawn from `U(-0.1, 0.1)`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Vector};

pub const PAD_TOKEN: &str = "<pad>";
pub const PAD: usize = 0;

/// Half-width of the uniform range used for out-of-vocabulary rows.
pub const OOV_RANGE: f64 = 0.1;

/// Bijection between tokens and row indices `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocab {
    /// A vocabulary holding only PAD.
    pub fn new() -> Self {
        let mut v = Vocab { index: HashMap::new(), tokens: Vec::new() };
        v.insert(PAD_TOKEN);
        v
    }

    /// Builds a vocabulary over `corpus`, in order of first occurrence.
    pub fn build<S: AsRef<str>>(corpus: &[Vec<S>]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Empty("vocabulary corpus"));
        }
        let mut v = Vocab::new();
        for doc in corpus {
            for tok in doc {
                v.insert(tok.as_ref());
            }
        }
        Ok(v)
    }

    /// Rebuilds a vocabulary from its index-ordered token list (PAD first).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.first().map(String::as_str) != Some(PAD_TOKEN) {
            return Err(Error::Invalid(format!("vocabulary must start with {PAD_TOKEN}")));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocab { index, tokens })
    }

    /// Adds `token` if absent and returns its index.
    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(token.to_string(), i);
        self.tokens.push(token.to_string());
        i
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index for `token`, or PAD when it is unknown.
    pub fn index_or_pad(&self, token: &str) -> usize {
        self.get(token).unwrap_or(PAD)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::new()
    }
}

pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>]) -> Result<Vocab> {
    Vocab::build(corpus)
}

/// `v x d` embedding matrix, row per vocabulary entry.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub matrix: Matrix,
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn new(matrix: Matrix, trainable: bool) -> Self {
        EmbeddingTable { matrix, trainable }
    }

    /// Every row except PAD drawn from `U(-range, range)`.
    pub fn random(vocab_size: usize, dim: usize, range: f64, rng: &mut Rng) -> Self {
        let mut matrix = Matrix::zeros(vocab_size, dim);
        for r in 1..vocab_size {
            for x in matrix.row_mut(r) {
                *x = rng.uniform(-range, range);
            }
        }
        EmbeddingTable { matrix, trainable: true }
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn row(&self, index: usize) -> Result<&[f64]> {
        if index >= self.matrix.rows() {
            return Err(Error::OutOfRange { what: "embedding table", index, size: self.matrix.rows() });
        }
        Ok(self.matrix.row(index))
    }

    pub fn lookup(&self, indices: &[usize]) -> Result<Vec<Vector>> {
        indices.iter().map(|&i| self.row(i).map(|r| Vector::from_vec(r.to_vec()))).collect()
    }
}

pub fn lookup(table: &EmbeddingTable, indices: &[usize]) -> Result<Vec<Vector>> {
    table.lookup(indices)
}

/// Hit/miss counts from [`load_pretrained`]; PAD is counted in neither.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub hits: usize,
    pub misses: usize,
}

/// Fills a table for `vocab` from a text vector file.
///
/// With `lowercase` set, file tokens are lowercased before matching; the
/// first file line that maps onto a vocabulary entry wins. Misses are drawn
/// in vocabulary order after the file has been read, so the table depends
/// only on `(file, vocab, rng seed)`.
pub fn load_pretrained(path: &Path, vocab: &Vocab, dim: usize, lowercase: bool, rng: &mut Rng) -> Result<(EmbeddingTable, LoadStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let shown = path.display().to_string();

    let mut found: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = lineno + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(Error::Parse {
                path: shown,
                line: lineno,
                msg: format!("expected {dim} values after token {token:?}, found {}", values.len()),
            });
        }
        let key = if lowercase { token.to_lowercase() } else { token.to_string() };
        // parse every line so malformed files fail even on unused tokens
        let parsed = values
            .iter()
            .map(|s| {
                s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse {
                    path: shown.clone(),
                    line: lineno,
                    msg: format!("bad number {s:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(i) = vocab.get(&key) {
            if i != PAD && found[i].is_none() {
                found[i] = Some(parsed);
            }
        }
    }

    let mut matrix = Matrix::zeros(vocab.len(), dim);
    let mut stats = LoadStats::default();
    for (i, row) in found.into_iter().enumerate().skip(1) {
        match row {
            Some(values) => {
                matrix.row_mut(i).copy_from_slice(&values);
                stats.hits += 1;
            }
            None => {
                for x in matrix.row_mut(i) {
                    *x = rng.uniform(-OOV_RANGE, OOV_RANGE);
                }
                stats.misses += 1;
            }
        }
    }
    log::info!("loaded pretrained vectors from {}: {} hits, {} misses", path.display(), stats.hits, stats.misses);
    Ok((EmbeddingTable::new(matrix, true), stats))
}

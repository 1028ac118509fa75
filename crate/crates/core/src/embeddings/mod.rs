//! Pretrained word vectors.
//!
//! Vectors are read from the word2vec/fastText text format: a header line
//! `count dim`, followed by one `word v1 ... vd` line per word. A compact
//! binary cache is available for repeated runs.

mod pca;

pub use pca::{fit_pca, PcaOptions, PcaTransform};

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CACHE_MAGIC: &[u8; 4] = b"NTEV";
const CACHE_VERSION: u8 = 1;

/// What [`EmbeddingTable::lookup`] returns for a word without a vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    #[default]
    Zero,
    Mean,
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    mean: Vec<f64>,
    zero: Vec<f64>,
}

impl EmbeddingTable {
    /// Build a table from `(word, vector)` pairs. Later duplicates are ignored.
    pub fn from_pairs<I>(dim: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut table = EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            mean: vec![0.0; dim],
            zero: vec![0.0; dim],
        };
        for (word, v) in pairs {
            if v.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    actual: v.len(),
                });
            }
            table.push(word, &v);
        }
        table.finish();
        Ok(table)
    }

    /// Random unit-variance vectors for `words`, reproducible from `seed`.
    /// Used when no pretrained vectors are supplied.
    pub fn random(words: &[String], dim: usize, seed: u64) -> Self {
        let mut sorted: Vec<&String> = words.iter().collect();
        sorted.sort();
        sorted.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (dim as f64).sqrt();
        let pairs = sorted.into_iter().map(|w| {
            let v: Vec<f64> = (0..dim)
                .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect();
            (w.clone(), v)
        });
        EmbeddingTable::from_pairs(dim, pairs).expect("dimensions are consistent")
    }

    fn push(&mut self, word: String, v: &[f64]) {
        if self.index.contains_key(&word) {
            return;
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(v);
    }

    fn finish(&mut self) {
        let n = self.words.len();
        self.mean = vec![0.0; self.dim];
        if n == 0 {
            return;
        }
        for row in self.data.chunks(self.dim) {
            for (m, x) in self.mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut self.mean {
            *m /= n as f64;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Total lookup: the stored vector or the OOV fallback.
    pub fn lookup(&self, word: &str, policy: OovPolicy) -> &[f64] {
        self.get(word).unwrap_or(match policy {
            OovPolicy::Zero => &self.zero,
            OovPolicy::Mean => &self.mean,
        })
    }

    pub fn mean_vector(&self) -> &[f64] {
        &self.mean
    }

    /// Stack the vectors of `words` into a matrix, one row per word.
    pub fn matrix<S: AsRef<str>>(&self, words: &[S], policy: OovPolicy) -> Array2<f64> {
        let mut m = Array2::zeros((words.len(), self.dim));
        for (mut row, w) in m.rows_mut().into_iter().zip(words) {
            for (dst, src) in row.iter_mut().zip(self.lookup(w.as_ref(), policy)) {
                *dst = *src;
            }
        }
        m
    }

    pub fn write_text<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "{} {}", self.len(), self.dim)?;
        for (w, row) in self.words.iter().zip(self.data.chunks(self.dim.max(1))) {
            write!(writer, "{}", w)?;
            for x in row {
                write!(writer, " {}", x)?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    /// Binary cache: magic, version byte, dimension, count, then
    /// length-prefixed UTF-8 words each followed by `dim` little-endian f64.
    pub fn write_binary<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writer.write_all(CACHE_MAGIC)?;
        writer.write_all(&[CACHE_VERSION])?;
        writer.write_all(&(self.dim as u32).to_le_bytes())?;
        writer.write_all(&(self.len() as u64).to_le_bytes())?;
        for (w, row) in self.words.iter().zip(self.data.chunks(self.dim.max(1))) {
            writer.write_all(&(w.len() as u32).to_le_bytes())?;
            writer.write_all(w.as_bytes())?;
            for x in row {
                writer.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let bad = |m: &str| Error::parse("embedding cache", 0, m.to_owned());
        let io = |e| Error::io("embedding cache", e);
        let mut magic = [0u8; 5];
        reader.read_exact(&mut magic).map_err(io)?;
        if &magic[..4] != CACHE_MAGIC {
            return Err(bad("not an embedding cache"));
        }
        if magic[4] != CACHE_VERSION {
            return Err(bad(&format!("unsupported cache version {}", magic[4])));
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        reader.read_exact(&mut u32buf).map_err(io)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        reader.read_exact(&mut u64buf).map_err(io)?;
        let count = u64::from_le_bytes(u64buf) as usize;
        let mut pairs = Vec::with_capacity(count);
        for _ in 0..count {
            reader.read_exact(&mut u32buf).map_err(io)?;
            let mut bytes = vec![0u8; u32::from_le_bytes(u32buf) as usize];
            reader.read_exact(&mut bytes).map_err(io)?;
            let word = String::from_utf8(bytes).map_err(|_| bad("word is not UTF-8"))?;
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                reader.read_exact(&mut u64buf).map_err(io)?;
                v.push(f64::from_le_bytes(u64buf));
            }
            pairs.push((word, v));
        }
        EmbeddingTable::from_pairs(dim, pairs)
    }
}

pub fn load_vectors(path: impl AsRef<Path>, vocab_filter: Option<&HashSet<String>>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_text_vectors(BufReader::new(file), &path.display().to_string(), vocab_filter)
}

/// Parse the text vector format, keeping only words in `vocab_filter` when given.
pub fn read_text_vectors<R: BufRead>(
    reader: R,
    source_name: &str,
    vocab_filter: Option<&HashSet<String>>,
) -> Result<EmbeddingTable> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(source_name, e))?,
        None => return Err(Error::parse(source_name, 1, "missing header")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (declared, dim) = match fields.as_slice() {
        [count, dim] => (
            count
                .parse::<usize>()
                .map_err(|_| Error::parse(source_name, 1, "header count is not an integer"))?,
            dim.parse::<usize>()
                .map_err(|_| Error::parse(source_name, 1, "header dimension is not an integer"))?,
        ),
        _ => return Err(Error::parse(source_name, 1, "header must be 'count dim'")),
    };

    let mut table = EmbeddingTable::from_pairs(dim, std::iter::empty())?;
    let mut rows = 0usize;
    let mut v = Vec::with_capacity(dim);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else {
            continue;
        };
        rows += 1;
        v.clear();
        for p in parts {
            let x: f64 = p
                .parse()
                .map_err(|_| Error::parse(source_name, lineno, format!("'{}' is not a number", p)))?;
            v.push(x);
        }
        if v.len() != dim {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected {} components, found {}", dim, v.len()),
            ));
        }
        if vocab_filter.is_none_or(|f| f.contains(word)) {
            table.push(word.to_owned(), &v);
        }
    }
    if rows != declared {
        log::warn!("{}: header declares {} vectors, found {}", source_name, declared, rows);
    }
    table.finish();
    Ok(table)
}

/// Write the binary cache to a file.
pub fn save_binary(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    table.write_binary(&mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::read_binary(BufReader::new(file))
}

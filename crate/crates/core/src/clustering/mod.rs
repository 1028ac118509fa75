//! Word clusterings that partition the input vocabulary into groups.
//!
//! Two unsupervised methods are provided: k-means on (PCA-reduced)
//! embeddings and agglomerative Brown clustering on raw text. Both produce
//! a [`WordClustering`]; words outside it map to a dedicated OOV id.

mod brown;
mod kmeans;

pub use brown::{brown_cluster, BrownConfig, BrownState, MergeRecord};
pub use kmeans::{cluster_embeddings, kmeans, kmeans_cluster, KMeansConfig, KMeansState};

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Word to cluster-id map with `num_clusters` real clusters. Unmapped
/// words are assigned `num_clusters`, the OOV id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordClustering {
    assignments: HashMap<String, usize>,
    num_clusters: usize,
    case_fold: bool,
}

impl WordClustering {
    pub fn new(assignments: HashMap<String, usize>, num_clusters: usize) -> Result<Self> {
        if let Some((w, &id)) = assignments.iter().find(|(_, &id)| id >= num_clusters) {
            return Err(Error::Config(format!(
                "word '{}' has cluster id {} but only {} clusters exist",
                w, id, num_clusters
            )));
        }
        Ok(WordClustering {
            assignments,
            num_clusters,
            case_fold: false,
        })
    }

    /// A clustering that puts every word in cluster 0.
    pub fn single<S: AsRef<str>>(words: &[S]) -> Self {
        WordClustering {
            assignments: words.iter().map(|w| (w.as_ref().to_owned(), 0)).collect(),
            num_clusters: 1,
            case_fold: false,
        }
    }

    /// Match words case-insensitively. Keys are lowercased; on collisions
    /// the lowest cluster id wins.
    pub fn with_case_folding(mut self) -> Self {
        let mut folded: HashMap<String, usize> = HashMap::new();
        for (w, id) in self.assignments {
            let e = folded.entry(w.to_lowercase()).or_insert(id);
            *e = (*e).min(id);
        }
        self.assignments = folded;
        self.case_fold = true;
        self
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn oov_id(&self) -> usize {
        self.num_clusters
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn assign(&self, word: &str) -> usize {
        let hit = if self.case_fold {
            self.assignments.get(&word.to_lowercase())
        } else {
            self.assignments.get(word)
        };
        hit.copied().unwrap_or(self.num_clusters)
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        match self.assign(word) {
            id if id == self.num_clusters => None,
            id => Some(id),
        }
    }

    /// Words of each cluster, sorted.
    pub fn members(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (w, &id) in &self.assignments {
            out[id].push(w.as_str());
        }
        for m in &mut out {
            m.sort_unstable();
        }
        out
    }

    /// Count tokens per cluster id over any sequence of words (OOV included).
    pub fn token_counts<'a, I>(&self, words: I) -> BTreeMap<usize, usize>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts = BTreeMap::new();
        for w in words {
            *counts.entry(self.assign(w)).or_default() += 1;
        }
        counts
    }

    /// `word<TAB>cluster_id` lines, sorted by word.
    pub fn write_tsv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        let mut entries: Vec<(&String, &usize)> = self.assignments.iter().collect();
        entries.sort();
        for (w, id) in entries {
            writeln!(writer, "{}\t{}", w, id)?;
        }
        Ok(())
    }

    /// Read `word<TAB>cluster_id` lines. The cluster count is one past the
    /// largest id unless `num_clusters` is given.
    pub fn read_tsv<R: BufRead>(reader: R, source_name: &str, num_clusters: Option<usize>) -> Result<Self> {
        let mut assignments = HashMap::new();
        let mut max_id = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, idx + 1, "expected word<TAB>cluster_id"))?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| Error::parse(source_name, idx + 1, format!("bad cluster id '{}'", id)))?;
            if assignments.insert(word.to_owned(), id).is_some() {
                return Err(Error::parse(source_name, idx + 1, format!("duplicate word '{}'", word)));
            }
            max_id = max_id.max(Some(id));
        }
        let p = num_clusters.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
        WordClustering::new(assignments, p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_tsv(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        WordClustering::read_tsv(BufReader::new(file), &path.display().to_string(), None)
    }
}

//! Agglomerative Brown clustering with a bounded active window.
//!
//! Words are ranked by frequency. The `clusters + window_extra` most
//! frequent words start as singleton clusters; every further word enters
//! as a new singleton and the pair of clusters whose merge loses the least
//! average mutual information (AMI) is merged. Once all words are in, merges
//! continue until `clusters` remain.
//!
//! Words that have not entered yet (and words beyond the vocabulary cap)
//! are pooled in one fixed "rest" class, so AMI is always the mutual
//! information of a partition of the full bigram distribution.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::WordClustering;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BrownConfig {
    pub clusters: usize,
    /// Active slots beyond `clusters`.
    pub window_extra: usize,
    /// Cluster only the `vocab_cap` most frequent words.
    pub vocab_cap: Option<usize>,
    /// Keep a snapshot of the active clusters before every merge.
    pub record_merges: bool,
}

impl Default for BrownConfig {
    fn default() -> Self {
        BrownConfig {
            clusters: 10,
            window_extra: 50,
            vocab_cap: None,
            record_merges: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MergeRecord {
    /// Active clusters before the merge, in cluster-index order.
    pub clusters: Vec<Vec<String>>,
    /// Indices into `clusters`, first < second.
    pub merged: (usize, usize),
    pub loss: f64,
    pub ami_after: f64,
}

#[derive(Clone, Debug)]
pub struct BrownState {
    /// Final clusters in id order; each cluster's words by frequency rank.
    pub clusters: Vec<Vec<String>>,
    pub ami: f64,
    pub merge_count: usize,
    pub merges: Vec<MergeRecord>,
}

struct Vocabulary {
    words: Vec<String>,
    /// Successor and predecessor counts per word id; id `words.len()` is the rest pool.
    out: Vec<Vec<(usize, f64)>>,
    inc: Vec<Vec<(usize, f64)>>,
    left_freq: Vec<f64>,
    right_freq: Vec<f64>,
    self_pairs: Vec<f64>,
    total: f64,
}

impl Vocabulary {
    fn build(corpus: &Corpus, cap: Option<usize>) -> Self {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in &corpus.sentences {
            for t in &s.tokens {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let v = cap.map_or(ranked.len(), |c| c.min(ranked.len()));
        let words: Vec<String> = ranked[..v].iter().map(|(w, _)| (*w).to_owned()).collect();
        let id: HashMap<&str, usize> = ranked[..v].iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();
        let rest = v;

        let mut pairs: HashMap<(usize, usize), f64> = HashMap::new();
        for s in &corpus.sentences {
            for w in s.tokens.windows(2) {
                let a = id.get(w[0].as_str()).copied().unwrap_or(rest);
                let b = id.get(w[1].as_str()).copied().unwrap_or(rest);
                *pairs.entry((a, b)).or_default() += 1.0;
            }
        }
        let mut pairs: Vec<((usize, usize), f64)> = pairs.into_iter().collect();
        pairs.sort_by_key(|&(k, _)| k);

        let mut out = vec![Vec::new(); v + 1];
        let mut inc = vec![Vec::new(); v + 1];
        let mut left_freq = vec![0.0; v + 1];
        let mut right_freq = vec![0.0; v + 1];
        let mut self_pairs = vec![0.0; v + 1];
        let mut total = 0.0;
        for ((a, b), c) in pairs {
            out[a].push((b, c));
            inc[b].push((a, c));
            left_freq[a] += c;
            right_freq[b] += c;
            if a == b {
                self_pairs[a] += c;
            }
            total += c;
        }
        Vocabulary {
            words,
            out,
            inc,
            left_freq,
            right_freq,
            self_pairs,
            total,
        }
    }
}

/// Cluster-level bigram counts over a fixed number of slots plus the rest pool.
struct Engine<'v> {
    vocab: &'v Vocabulary,
    n: usize,
    rest: usize,
    counts: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    q: Vec<f64>,
    row_q: Vec<f64>,
    col_q: Vec<f64>,
    ami: f64,
    active: Vec<usize>,
    free: Vec<usize>,
    slot_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl<'v> Engine<'v> {
    fn new(vocab: &'v Vocabulary, slots: usize) -> Self {
        let n = slots + 1;
        let rest = slots;
        let mut counts = vec![0.0; n * n];
        counts[rest * n + rest] = vocab.total;
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        left[rest] = vocab.total;
        right[rest] = vocab.total;
        let mut e = Engine {
            vocab,
            n,
            rest,
            counts,
            left,
            right,
            q: vec![0.0; n * n],
            row_q: vec![0.0; n],
            col_q: vec![0.0; n],
            ami: 0.0,
            active: Vec::with_capacity(slots),
            free: (0..slots).rev().collect(),
            slot_of: vec![rest; vocab.words.len() + 1],
            members: vec![Vec::new(); n],
        };
        e.refresh();
        e
    }

    fn c(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.n + j]
    }

    fn term(&self, c: f64, l: f64, r: f64) -> f64 {
        if c > 0.0 {
            let t = self.vocab.total;
            c / t * (c * t / (l * r)).ln()
        } else {
            0.0
        }
    }

    fn live(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().copied().chain(std::iter::once(self.rest))
    }

    fn refresh(&mut self) {
        let live: Vec<usize> = self.live().collect();
        self.row_q.iter_mut().for_each(|x| *x = 0.0);
        self.col_q.iter_mut().for_each(|x| *x = 0.0);
        let mut ami = 0.0;
        for &i in &live {
            for &j in &live {
                let q = self.term(self.c(i, j), self.left[i], self.right[j]);
                self.q[i * self.n + j] = q;
                self.row_q[i] += q;
                self.col_q[j] += q;
                ami += q;
            }
        }
        self.ami = ami;
    }

    /// Move word `w` out of the rest pool into a fresh singleton cluster.
    fn introduce(&mut self, w: usize) {
        let s = self.rest;
        let t = self.free.pop().expect("a free slot");
        let n = self.n;
        for &(y, c) in &self.vocab.out[w] {
            if y != w {
                let sy = self.slot_of[y];
                self.counts[s * n + sy] -= c;
                self.counts[t * n + sy] += c;
            }
        }
        for &(x, c) in &self.vocab.inc[w] {
            if x != w {
                let sx = self.slot_of[x];
                self.counts[sx * n + s] -= c;
                self.counts[sx * n + t] += c;
            }
        }
        let own = self.vocab.self_pairs[w];
        self.counts[s * n + s] -= own;
        self.counts[t * n + t] += own;
        self.left[s] -= self.vocab.left_freq[w];
        self.right[s] -= self.vocab.right_freq[w];
        self.left[t] = self.vocab.left_freq[w];
        self.right[t] = self.vocab.right_freq[w];
        self.slot_of[w] = t;
        self.members[t] = vec![w];
        self.active.push(t);
        self.refresh();
    }

    fn merge_loss(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let before = self.row_q[a] + self.row_q[b] + self.col_q[a] + self.col_q[b]
            - self.q[a * n + a]
            - self.q[a * n + b]
            - self.q[b * n + a]
            - self.q[b * n + b];
        let lm = self.left[a] + self.left[b];
        let rm = self.right[a] + self.right[b];
        let mut after = 0.0;
        for x in self.live() {
            if x == a || x == b {
                continue;
            }
            after += self.term(self.c(a, x) + self.c(b, x), lm, self.right[x]);
            after += self.term(self.c(x, a) + self.c(x, b), self.left[x], rm);
        }
        let mm = self.c(a, a) + self.c(a, b) + self.c(b, a) + self.c(b, b);
        after += self.term(mm, lm, rm);
        before - after
    }

    /// Cheapest merge as positions in the active list; ties go to the
    /// lexicographically smallest position pair.
    fn best_merge(&self) -> (usize, usize, f64) {
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..self.active.len() {
            for j in i + 1..self.active.len() {
                let loss = self.merge_loss(self.active[i], self.active[j]);
                if loss < best.2 {
                    best = (i, j, loss);
                }
            }
        }
        best
    }

    fn merge(&mut self, pi: usize, pj: usize) {
        let (a, b) = (self.active[pi], self.active[pj]);
        let n = self.n;
        for x in 0..n {
            self.counts[a * n + x] += self.counts[b * n + x];
        }
        for x in 0..n {
            if x != b {
                self.counts[x * n + a] += self.counts[x * n + b];
            }
        }
        for x in 0..n {
            self.counts[b * n + x] = 0.0;
            self.counts[x * n + b] = 0.0;
        }
        self.left[a] += self.left[b];
        self.right[a] += self.right[b];
        self.left[b] = 0.0;
        self.right[b] = 0.0;
        let moved = std::mem::take(&mut self.members[b]);
        for &w in &moved {
            self.slot_of[w] = a;
        }
        self.members[a].extend(moved);
        self.members[a].sort_unstable();
        self.active.remove(pj);
        self.free.push(b);
        self.refresh();
    }

    fn snapshot(&self) -> Vec<Vec<String>> {
        self.active
            .iter()
            .map(|&s| self.members[s].iter().map(|&w| self.vocab.words[w].clone()).collect())
            .collect()
    }
}

/// Brown-cluster the tokens of `corpus` (tags are ignored).
pub fn brown_cluster(corpus: &Corpus, config: &BrownConfig) -> Result<(WordClustering, BrownState)> {
    if config.clusters == 0 {
        return Err(Error::Config("Brown clustering needs at least one cluster".into()));
    }
    if corpus.token_count() == 0 {
        return Err(Error::Config("Brown clustering needs a non-empty corpus".into()));
    }
    let vocab = Vocabulary::build(corpus, config.vocab_cap);
    let v = vocab.words.len();
    if config.clusters > v {
        return Err(Error::Config(format!(
            "{} clusters requested but the vocabulary has only {} words",
            config.clusters, v
        )));
    }

    let window = (config.clusters + config.window_extra).min(v);
    let mut engine = Engine::new(&vocab, window + 1);
    let mut merges = Vec::new();
    let mut merge_count = 0;

    let mut do_merge = |engine: &mut Engine| {
        let (i, j, loss) = engine.best_merge();
        let before = config.record_merges.then(|| engine.snapshot());
        engine.merge(i, j);
        merge_count += 1;
        if let Some(clusters) = before {
            merges.push(MergeRecord {
                clusters,
                merged: (i, j),
                loss,
                ami_after: engine.ami,
            });
        }
    };

    for w in 0..window {
        engine.introduce(w);
    }
    for w in window..v {
        engine.introduce(w);
        do_merge(&mut engine);
    }
    while engine.active.len() > config.clusters {
        do_merge(&mut engine);
    }

    let clusters = engine.snapshot();
    let mut map = HashMap::with_capacity(v);
    for (id, words) in clusters.iter().enumerate() {
        for w in words {
            map.insert(w.clone(), id);
        }
    }
    let clustering = WordClustering::new(map, config.clusters)?;
    Ok((
        clustering,
        BrownState {
            clusters,
            ami: engine.ami,
            merge_count,
            merges,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusRole, Sentence};

    fn corpus(text: &[&str]) -> Corpus {
        Corpus::new(
            CorpusRole::Unlabeled,
            text.iter()
                .map(|l| Sentence::untagged(&l.split(' ').collect::<Vec<_>>()).unwrap())
                .collect(),
        )
    }

    #[test]
    fn full_vocabulary_means_no_merges() {
        let c = corpus(&["a b c", "b c d"]);
        let (wc, state) = brown_cluster(&c, &BrownConfig { clusters: 4, ..Default::default() }).unwrap();
        assert_eq!(state.merge_count, 0);
        assert_eq!(wc.num_clusters(), 4);
        assert!(state.clusters.iter().all(|m| m.len() == 1));
    }

    #[test]
    fn one_cluster_takes_everything() {
        let c = corpus(&["a b c", "b c d", "d a"]);
        let (wc, state) = brown_cluster(&c, &BrownConfig { clusters: 1, ..Default::default() }).unwrap();
        assert_eq!(state.clusters.len(), 1);
        for w in ["a", "b", "c", "d"] {
            assert_eq!(wc.assign(w), 0);
        }
        assert!(state.ami.abs() < 1e-12);
    }

    #[test]
    fn too_many_clusters() {
        let c = corpus(&["a b"]);
        let err = brown_cluster(&c, &BrownConfig { clusters: 3, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn vocab_cap_sends_rare_words_to_oov() {
        let c = corpus(&["a a a b b c", "a b"]);
        let cfg = BrownConfig {
            clusters: 1,
            vocab_cap: Some(2),
            ..Default::default()
        };
        let (wc, _) = brown_cluster(&c, &cfg).unwrap();
        assert_eq!(wc.assign("a"), 0);
        assert_eq!(wc.assign("c"), wc.oov_id());
    }

    #[test]
    fn windowed_run_terminates_with_requested_count() {
        let text: Vec<String> = (0..40)
            .map(|i| format!("w{} x{} w{} y{}", i % 7, i % 5, (i * 3) % 11, i % 13))
            .collect();
        let refs: Vec<&str> = text.iter().map(String::as_str).collect();
        let c = corpus(&refs);
        let cfg = BrownConfig {
            clusters: 3,
            window_extra: 2,
            ..Default::default()
        };
        let (wc, state) = brown_cluster(&c, &cfg).unwrap();
        assert_eq!(state.clusters.len(), 3);
        assert_eq!(wc.len(), c.vocabulary().len());
    }
}

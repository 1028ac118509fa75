//! Synthetic corpora with cluster-dependent label noise, and an experiment
//! driver that trains a list of model variants over several seeds.
//!
//! Every token belongs to a latent word cluster. Its gold label comes from
//! a small tag language model; its noisy label is drawn from the row of
//! that cluster's true confusion matrix. Word embeddings place each
//! cluster's vocabulary around its own center, so k-means on the
//! embeddings can recover the latent clusters.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clustering::{brown_cluster, cluster_embeddings, BrownConfig, KMeansConfig, WordClustering};
use crate::corpus::{io_to_iob2, Corpus, CorpusRole, Sentence, Tag, TagSet};
use crate::distant::{annotate, zip_pairs, Gazetteer};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::{labeling_report, score, EvalReport, Scores};
use crate::noise::{build_model, NoiseConfig};
use crate::tagger::{train, Featurizer, Strategy, TrainConfig};
use crate::variant::{ClusterMethod, ModelVariant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentCluster {
    pub name: String,
    /// Probability that a token is drawn from this cluster.
    pub share: f64,
    /// True `p(noisy | clean)`, rows and columns in tag-set order (`O` first).
    pub confusion: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub entity_types: Vec<String>,
    pub clusters: Vec<LatentCluster>,
    /// `O` words per cluster.
    pub vocab_outside: usize,
    /// Words per (cluster, entity type).
    pub vocab_entity: usize,
    /// Word frequencies within a vocabulary follow `1 / rank^s`.
    pub zipf_exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Chance that an entity starts at a free position.
    pub entity_rate: f64,
    pub max_span: usize,
    pub clean_sentences: usize,
    pub noisy_sentences: usize,
    pub dev_sentences: usize,
    pub test_sentences: usize,
    pub embedding_dim: usize,
    /// Distance of each cluster center from the origin.
    pub cluster_separation: f64,
    /// Length of the offset along the word's own (cluster, tag) axis.
    pub tag_signal: f64,
    /// Standard deviation of the per-word Gaussian component.
    pub word_noise: f64,
    /// Chance that an entity word is listed in the gazetteer.
    pub gazetteer_coverage: f64,
    /// Chance that an `O` word is listed under a random entity type.
    pub gazetteer_false_rate: f64,
    pub seed: u64,
}

fn identity_with(k: usize, edits: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for &(i, j, p) in edits {
        m[i][i] -= p;
        m[i][j] += p;
    }
    m
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        // Tag order: O, PER, LOC, ORG, MISC.
        let (o, per, loc) = (0, 1, 2);
        SyntheticSpec {
            entity_types: ["PER", "LOC", "ORG", "MISC"].iter().map(|s| s.to_string()).collect(),
            clusters: vec![
                LatentCluster {
                    name: "a".into(),
                    share: 0.5,
                    confusion: identity_with(5, &[(per, o, 0.8)]),
                },
                LatentCluster {
                    name: "b".into(),
                    share: 0.5,
                    confusion: identity_with(5, &[(loc, per, 0.8)]),
                },
            ],
            vocab_outside: 150,
            vocab_entity: 120,
            zipf_exponent: 0.5,
            min_len: 8,
            max_len: 20,
            entity_rate: 0.15,
            max_span: 2,
            clean_sentences: 200,
            noisy_sentences: 5000,
            dev_sentences: 200,
            test_sentences: 1000,
            embedding_dim: 24,
            cluster_separation: 6.0,
            tag_signal: 1.0,
            word_noise: 1.0,
            gazetteer_coverage: 0.35,
            gazetteer_false_rate: 0.03,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn tagset(&self) -> Result<TagSet> {
        TagSet::new(&self.entity_types)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.tagset()?.len();
        let bad = |m: String| Err(Error::Config(m));
        if self.clusters.is_empty() {
            return bad("a synthetic spec needs at least one cluster".into());
        }
        let total: f64 = self.clusters.iter().map(|c| c.share).sum();
        if self.clusters.iter().any(|c| !(c.share > 0.0)) || (total - 1.0).abs() > 1e-9 {
            return bad(format!("cluster shares must be positive and sum to 1, got {}", total));
        }
        let mut names: Vec<&str> = self.clusters.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.clusters.len() || names.iter().any(|n| n.is_empty()) {
            return bad("cluster names must be distinct and non-empty".into());
        }
        for c in &self.clusters {
            if c.confusion.len() != k || c.confusion.iter().any(|r| r.len() != k) {
                return bad(format!("cluster {} needs a {}x{} confusion matrix", c.name, k, k));
            }
            for (i, row) in c.confusion.iter().enumerate() {
                let s: f64 = row.iter().sum();
                if row.iter().any(|&p| !(p >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                    return bad(format!("row {} of cluster {} is not a probability vector", i, c.name));
                }
            }
        }
        if self.vocab_outside == 0 || self.vocab_entity == 0 {
            return bad("vocabularies must be non-empty".into());
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("sentence lengths need 1 <= min_len <= max_len".into());
        }
        if self.max_span == 0 {
            return bad("max_span must be positive".into());
        }
        for (name, p) in [
            ("entity_rate", self.entity_rate),
            ("gazetteer_coverage", self.gazetteer_coverage),
            ("gazetteer_false_rate", self.gazetteer_false_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{} must lie in [0, 1], got {}", name, p));
            }
        }
        let p = self.clusters.len();
        if self.embedding_dim < p + p * k {
            return bad(format!(
                "embedding_dim must be at least clusters * (tags + 1) = {}",
                p + p * k
            ));
        }
        if !(self.word_noise >= 0.0 && self.zipf_exponent >= 0.0) {
            return bad("word_noise and zipf_exponent must be non-negative".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SyntheticSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Everything [`generate`] produces.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub tagset: TagSet,
    /// Gold IOB2 labels.
    pub clean: Corpus,
    /// The clean sentences with corrupted IO labels, for label pairs.
    pub clean_noisy: Corpus,
    /// Corrupted IO labels.
    pub noisy: Corpus,
    /// Gold IOB2 labels of the noisy sentences.
    pub noisy_gold: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    /// The latent clusters.
    pub clustering: WordClustering,
    pub embeddings: EmbeddingTable,
    pub gazetteer: Gazetteer,
}

struct Sampler<'s> {
    spec: &'s SyntheticSpec,
    k: usize,
    /// `words[cluster][tag]`.
    words: Vec<Vec<Vec<String>>>,
    zipf_outside: Vec<f64>,
    zipf_entity: Vec<f64>,
    cluster_cdf: Vec<f64>,
}

fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .into_iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    let total = acc;
    out.iter_mut().for_each(|c| *c /= total);
    out
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl<'s> Sampler<'s> {
    fn new(spec: &'s SyntheticSpec, k: usize) -> Self {
        let tag_names: Vec<String> = std::iter::once("O".to_string()).chain(spec.entity_types.iter().cloned()).collect();
        let words = spec
            .clusters
            .iter()
            .map(|c| {
                tag_names
                    .iter()
                    .enumerate()
                    .map(|(t, name)| {
                        let n = if t == 0 { spec.vocab_outside } else { spec.vocab_entity };
                        (0..n).map(|i| format!("{}{}{}", c.name, name.to_lowercase(), i)).collect()
                    })
                    .collect()
            })
            .collect();
        let zipf = |n: usize| cumulative((1..=n).map(|r| 1.0 / (r as f64).powf(spec.zipf_exponent)));
        Sampler {
            spec,
            k,
            words,
            zipf_outside: zipf(spec.vocab_outside),
            zipf_entity: zipf(spec.vocab_entity),
            cluster_cdf: cumulative(spec.clusters.iter().map(|c| c.share)),
        }
    }

    /// Tokens, IO tag indices and latent cluster per token.
    fn sentence(&self, rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<usize>, Vec<usize>) {
        let spec = self.spec;
        let len = rng.random_range(spec.min_len..=spec.max_len);
        let mut tags: Vec<usize> = Vec::with_capacity(len);
        while tags.len() < len {
            let last = tags.last().copied().unwrap_or(0);
            if rng.random::<f64>() >= spec.entity_rate {
                tags.push(0);
                continue;
            }
            // Never continue the previous entity's type, so adjacent
            // entities stay distinguishable in IO form.
            let mut ty = rng.random_range(1..self.k);
            if ty == last {
                if self.k == 2 {
                    tags.push(0);
                    continue;
                }
                ty = ty % (self.k - 1) + 1;
            }
            let span = rng.random_range(1..=spec.max_span).min(len - tags.len());
            tags.extend(std::iter::repeat_n(ty, span));
        }
        let mut tokens = Vec::with_capacity(len);
        let mut clusters = Vec::with_capacity(len);
        for &t in &tags {
            let c = draw(&self.cluster_cdf, rng);
            let cdf = if t == 0 { &self.zipf_outside } else { &self.zipf_entity };
            tokens.push(self.words[c][t][draw(cdf, rng)].clone());
            clusters.push(c);
        }
        (tokens, tags, clusters)
    }

    fn corrupt(&self, tags: &[usize], clusters: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
        tags.iter()
            .zip(clusters)
            .map(|(&t, &c)| draw(&cumulative(self.spec.clusters[c].confusion[t].iter().copied()), rng))
            .collect()
    }
}

fn to_tags(tagset: &TagSet, idx: &[usize]) -> Vec<Tag> {
    idx.iter().map(|&i| tagset.tag(i)).collect()
}

/// Draw corpora, clusters, embeddings and a gazetteer from a spec. The
/// output depends only on `spec` (including its seed).
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let tagset = spec.tagset()?;
    let k = tagset.len();
    let sampler = Sampler::new(spec, k);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let gold_corpus = |n: usize, rng: &mut ChaCha8Rng, with_noise: bool| {
        let mut gold = Vec::with_capacity(n);
        let mut noisy = Vec::with_capacity(n);
        for _ in 0..n {
            let (tokens, tags, clusters) = sampler.sentence(rng);
            if with_noise {
                let corrupted = sampler.corrupt(&tags, &clusters, rng);
                noisy.push(Sentence {
                    tokens: tokens.clone(),
                    tags: Some(to_tags(&tagset, &corrupted)),
                });
            }
            gold.push(Sentence {
                tokens,
                tags: Some(io_to_iob2(&to_tags(&tagset, &tags))),
            });
        }
        (gold, noisy)
    };
    let (clean, clean_noisy) = gold_corpus(spec.clean_sentences, &mut rng, true);
    let (noisy_gold, noisy) = gold_corpus(spec.noisy_sentences, &mut rng, true);
    let (dev, _) = gold_corpus(spec.dev_sentences, &mut rng, false);
    let (test, _) = gold_corpus(spec.test_sentences, &mut rng, false);

    let d = spec.embedding_dim;
    let p = spec.clusters.len();
    let normal = Normal::new(0.0, spec.word_noise).map_err(|e| Error::Config(e.to_string()))?;
    let mut assignments = HashMap::new();
    let mut vectors = Vec::new();
    let mut gazetteer = Gazetteer::new(false);
    for (c, by_tag) in sampler.words.iter().enumerate() {
        for (t, words) in by_tag.iter().enumerate() {
            for w in words {
                let mut v: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
                v[c] += spec.cluster_separation;
                v[p + c * k + t] += spec.tag_signal;
                vectors.push((w.clone(), v));
                assignments.insert(w.clone(), c);
                let listed = if t == 0 {
                    rng.random::<f64>() < spec.gazetteer_false_rate
                } else {
                    rng.random::<f64>() < spec.gazetteer_coverage
                };
                if listed {
                    let ty = if t == 0 { rng.random_range(1..k) } else { t };
                    gazetteer.insert(&[w.as_str()], &spec.entity_types[ty - 1]);
                }
            }
        }
    }

    Ok(SyntheticData {
        clean: Corpus::new(CorpusRole::Clean, clean),
        clean_noisy: Corpus::new(CorpusRole::Noisy, clean_noisy),
        noisy: Corpus::new(CorpusRole::Noisy, noisy),
        noisy_gold: Corpus::new(CorpusRole::Noisy, noisy_gold),
        dev: Corpus::new(CorpusRole::Test, dev),
        test: Corpus::new(CorpusRole::Test, test),
        clustering: WordClustering::new(assignments, p)?,
        embeddings: EmbeddingTable::from_pairs(d, vectors)?,
        gazetteer,
        tagset,
    })
}

impl SyntheticData {
    /// Gazetteer labels of the test set scored against its gold labels.
    pub fn gazetteer_report(&self) -> Result<EvalReport> {
        labeling_report(&self.test, &annotate(&self.test, &self.gazetteer))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub window: usize,
    pub kmeans: KMeansConfig,
    pub brown: BrownConfig,
    /// Interpolation weight for `-ip` variants.
    pub lambda: f64,
    /// Selection fraction for `-freq` variants.
    pub fraction: f64,
    pub alpha: f64,
    pub min_pairs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: TrainConfig {
                hidden: 48,
                epochs: 15,
                patience: 3,
                ..Default::default()
            },
            window: 0,
            kmeans: KMeansConfig {
                clusters: 2,
                pca_dim: Some(10),
                ..Default::default()
            },
            brown: BrownConfig {
                clusters: 2,
                ..Default::default()
            },
            lambda: 0.2,
            fraction: 1.0,
            alpha: 1e-6,
            min_pairs: 5,
        }
    }
}

impl ExperimentConfig {
    pub fn noise_config(&self, variant: ModelVariant) -> Option<NoiseConfig> {
        let mode = variant.noise_mode()?;
        let mut cfg = NoiseConfig::new(mode);
        cfg.alpha = self.alpha;
        cfg.min_pairs = self.min_pairs;
        if mode.uses_interpolation() {
            cfg.lambda = Some(self.lambda);
        }
        if mode.uses_selection() {
            cfg.fraction = Some(self.fraction);
        }
        Some(cfg)
    }
}

/// Build the clustering a variant needs from the generated data.
pub fn induce_clustering(data: &SyntheticData, method: ClusterMethod, config: &ExperimentConfig, seed: u64) -> Result<WordClustering> {
    match method {
        ClusterMethod::Kmeans => {
            let cfg = KMeansConfig {
                seed,
                ..config.kmeans.clone()
            };
            Ok(cluster_embeddings(&data.embeddings, data.embeddings.words(), &cfg)?.0)
        }
        ClusterMethod::Brown => {
            let mut text = data.clean.without_tags();
            text.sentences.extend(data.noisy.without_tags().sentences);
            Ok(brown_cluster(&text, &config.brown)?.0)
        }
    }
}

/// Train one variant on generated data and score it on the test set.
pub fn run_variant(
    data: &SyntheticData,
    variant: ModelVariant,
    clustering: Option<&WordClustering>,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<EvalReport> {
    let train_cfg = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let mut featurizer = Featurizer::new(&data.embeddings, &data.tagset, config.window);
    let strategy = match variant {
        ModelVariant::Base => Strategy::Base,
        ModelVariant::BaseNoise => Strategy::BaseNoise,
        ModelVariant::Noise { .. } => {
            let noise_cfg = config.noise_config(variant).expect("noise variant");
            let pairs = zip_pairs(&data.clean, &data.clean_noisy);
            let sizes = match clustering {
                Some(c) => c.token_counts(
                    data.clean
                        .sentences
                        .iter()
                        .chain(&data.noisy.sentences)
                        .flat_map(|s| s.tokens.iter().map(String::as_str)),
                ),
                None => BTreeMap::new(),
            };
            if let Some(c) = clustering {
                featurizer = featurizer.with_clustering(c);
            }
            Strategy::NoiseLayer(build_model(&pairs, clustering, &sizes, &noise_cfg, &data.tagset)?)
        }
    };
    let outcome = train(&data.clean, &data.noisy, &data.dev, &featurizer, strategy, &train_cfg)?;
    let predicted = outcome.model.predict_corpus(&featurizer, &data.test);
    score(&data.test, &predicted)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub variant: String,
    /// Test F1 for each seed, in seed order.
    pub f1: Vec<f64>,
    pub mean_f1: f64,
    pub std_error: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub seeds: Vec<u64>,
    pub rows: Vec<TrendRow>,
    /// Gazetteer labeling quality on the test set of the first seed.
    pub gazetteer: Scores,
}

/// Mean and standard error of the mean (sample standard deviation over
/// `sqrt(n)`).
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl TrendReport {
    pub fn row(&self, variant: &str) -> Option<&TrendRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.variant.len()).max().unwrap_or(7).max(7);
        let mut s = format!("{:<w$}  {:>6}  {:>6}  {:>6}  {:>6}\n", "model", "F1", "SE", "P", "R", w = width);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<w$}  {:>6.1}  {:>6.2}  {:>6.1}  {:>6.1}",
                r.variant,
                r.mean_f1,
                r.std_error,
                r.mean_precision,
                r.mean_recall,
                w = width
            );
        }
        let g = &self.gazetteer;
        let _ = writeln!(
            s,
            "gazetteer labels: P {:.1} R {:.1} F1 {:.1} over {} seeds",
            g.precision,
            g.recall,
            g.f1,
            self.seeds.len()
        );
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Train every variant at every seed (data and training both seeded) and
/// aggregate test F1.
pub fn run_matrix_experiment(
    spec: &SyntheticSpec,
    variants: &[ModelVariant],
    seeds: &[u64],
    config: &ExperimentConfig,
) -> Result<TrendReport> {
    if seeds.len() < 3 {
        return Err(Error::Config(format!("a trend report needs at least 3 seeds, got {}", seeds.len())));
    }
    spec.validate()?;
    let mut per_variant: Vec<Vec<EvalReport>> = vec![Vec::new(); variants.len()];
    let mut gazetteer = None;
    for &seed in seeds {
        let data = generate(&SyntheticSpec {
            seed,
            ..spec.clone()
        })?;
        if gazetteer.is_none() {
            gazetteer = Some(data.gazetteer_report()?.overall);
        }
        let mut clusterings: BTreeMap<String, WordClustering> = BTreeMap::new();
        for (i, &variant) in variants.iter().enumerate() {
            let wrap = |e: Error| Error::Run {
                variant: variant.to_string(),
                seed,
                source: Box::new(e),
            };
            let clustering = match variant.cluster_method() {
                Some(m) => {
                    if !clusterings.contains_key(&m.to_string()) {
                        let c = induce_clustering(&data, m, config, seed).map_err(wrap)?;
                        clusterings.insert(m.to_string(), c);
                    }
                    clusterings.get(&m.to_string())
                }
                None => None,
            };
            let report = run_variant(&data, variant, clustering, config, seed).map_err(wrap)?;
            log::info!("{} seed {}: F1 {:.1}", variant, seed, report.overall.f1);
            per_variant[i].push(report);
        }
    }

    let rows = variants
        .iter()
        .zip(per_variant)
        .map(|(v, reports)| {
            let f1: Vec<f64> = reports.iter().map(|r| r.overall.f1).collect();
            let (mean_f1, std_error) = mean_and_std_error(&f1);
            let avg = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / reports.len() as f64;
            TrendRow {
                variant: v.to_string(),
                f1,
                mean_f1,
                std_error,
                mean_precision: avg(|r| r.overall.precision),
                mean_recall: avg(|r| r.overall.recall),
            }
        })
        .collect();
    Ok(TrendReport {
        seeds: seeds.to_vec(),
        rows,
        gazetteer: gazetteer.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SyntheticSpec {
        SyntheticSpec {
            clean_sentences: 5,
            noisy_sentences: 20,
            dev_sentences: 5,
            test_sentences: 5,
            ..Default::default()
        }
    }

    #[test]
    fn default_spec_is_valid() {
        SyntheticSpec::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_matrix() {
        let mut spec = tiny();
        spec.clusters[0].confusion[1][1] = 0.5;
        assert!(matches!(generate(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate(&tiny()).unwrap();
        let b = generate(&tiny()).unwrap();
        assert_eq!(a.clean, b.clean);
        assert_eq!(a.noisy, b.noisy);
        assert_eq!(a.test, b.test);
        assert_eq!(a.embeddings.words(), b.embeddings.words());
    }

    #[test]
    fn identity_matrices_give_clean_labels() {
        let mut spec = tiny();
        for c in &mut spec.clusters {
            c.confusion = identity_with(5, &[]);
        }
        let data = generate(&spec).unwrap();
        assert_eq!(data.noisy.sentences, data.noisy_gold.to_io().sentences);
    }

    #[test]
    fn no_adjacent_same_type_entities() {
        let data = generate(&SyntheticSpec {
            noisy_sentences: 300,
            ..tiny()
        })
        .unwrap();
        for s in &data.noisy_gold.sentences {
            let tags = s.tags.as_ref().unwrap();
            assert_eq!(io_to_iob2(&crate::corpus::iob2_to_io(tags)), *tags);
        }
    }

    #[test]
    fn corruption_frequencies_follow_matrices() {
        let spec = SyntheticSpec::default();
        let sampler = Sampler::new(&spec, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        for (c, cluster) in spec.clusters.iter().enumerate() {
            for t in 0..5 {
                let noisy = sampler.corrupt(&vec![t; n], &vec![c; n], &mut rng);
                for (j, &want) in cluster.confusion[t].iter().enumerate() {
                    let got = noisy.iter().filter(|&&x| x == j).count() as f64 / n as f64;
                    assert!((got - want).abs() <= 0.01, "cluster {} row {} col {}: {} vs {}", c, t, j, got, want);
                }
            }
        }
    }

    #[test]
    fn report_is_reproducible() {
        let config = ExperimentConfig {
            train: TrainConfig {
                hidden: 8,
                epochs: 2,
                ..ExperimentConfig::default().train
            },
            ..Default::default()
        };
        let variants = ["base+noise", "kmeans-cm-ip"].map(|v| v.parse::<ModelVariant>().unwrap());
        let run = || run_matrix_experiment(&tiny(), &variants, &[1, 2, 3], &config).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_and_std_error(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn too_few_seeds() {
        let r = run_matrix_experiment(&tiny(), &[ModelVariant::Base], &[1, 2], &ExperimentConfig::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }
}

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use noisetag::benchmark::run_matrix_experiment;
use noisetag::clustering::{brown_cluster, cluster_embeddings, WordClustering};
use noisetag::corpus::{read_conll, write_conll_file, Corpus, CorpusRole, TagSet};
use noisetag::distant::{annotate, collect_pairs, load_gazetteer, parse_source, zip_pairs, LabeledPair};
use noisetag::embeddings::{load_binary, load_vectors, EmbeddingTable};
use noisetag::eval::{labeling_report, score, EvalReport};
use noisetag::noise::{build_model, render_heatmap, ConfusionModel, NoiseConfig, NoiseMode};
use noisetag::tagger::{train, Checkpoint, Featurizer, Strategy, TrainOutcome};
use noisetag::variant::ModelVariant;

use crate::args::{
    AnnotateArgs, BenchmarkArgs, BrownArgs, ClusterCommand, Command, EvalArgs, InitCmArgs, KmeansArgs, PairArgs, TrainArgs,
};
use crate::config::{Config, NoiseParams};

/// A file a command promises to leave behind, with how to check it.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub path: PathBuf,
    pub kind: Kind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// CoNLL file in the gold scheme.
    GoldConll,
    /// CoNLL file in the scheme of automatic labels.
    NoisyConll,
    Clusters,
    Json,
    Checkpoint,
    NoiseModel,
    Text,
}

impl Artifact {
    fn new(path: PathBuf, kind: Kind) -> Self {
        Artifact { path, kind }
    }

    /// Re-read the file with the parser that owns its format.
    pub fn verify(&self, config: &Config) -> Result<()> {
        let p = &self.path;
        let text = || fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
        match self.kind {
            Kind::GoldConll => {
                read_conll(p, &config.corpus.options(config.corpus.scheme, CorpusRole::Test)?)?;
            }
            Kind::NoisyConll => {
                read_conll(p, &config.corpus.options(config.corpus.noisy_scheme, CorpusRole::Noisy)?)?;
            }
            Kind::Clusters => {
                WordClustering::load(p)?;
            }
            Kind::Json => {
                serde_json::from_str::<serde_json::Value>(&text()?).with_context(|| format!("parsing {}", p.display()))?;
            }
            Kind::Checkpoint => {
                Checkpoint::from_json(&text()?)?;
            }
            Kind::NoiseModel => {
                ConfusionModel::from_json(&text()?)?;
            }
            Kind::Text => {
                text()?;
            }
        }
        Ok(())
    }
}

fn output(explicit: &Option<PathBuf>, out_dir: &Path, default: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out_dir.join(default))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn dispatch(command: &Command, config: &Config, out_dir: &Path) -> Result<Vec<Artifact>> {
    match command {
        Command::Annotate(a) => run_annotate(a, config, out_dir),
        Command::Cluster(ClusterCommand::Kmeans(a)) => run_kmeans(a, config, out_dir),
        Command::Cluster(ClusterCommand::Brown(a)) => run_brown(a, config, out_dir),
        Command::InitCm(a) => run_init_cm(a, config, out_dir),
        Command::Train(a) => run_train(a, config, out_dir),
        Command::Eval(a) => run_eval(a, config, out_dir),
        Command::Benchmark(a) => run_benchmark(a, config, out_dir),
        Command::Replay(_) => bail!("a manifest cannot record a replay"),
    }
}

fn read_gold(path: &Path, config: &Config, role: CorpusRole) -> Result<Corpus> {
    Ok(read_conll(path, &config.corpus.options(config.corpus.scheme, role)?)?)
}

fn read_noisy(path: &Path, config: &Config) -> Result<Corpus> {
    Ok(read_conll(path, &config.corpus.options(config.corpus.noisy_scheme, CorpusRole::Noisy)?)?)
}

fn read_tokens(path: &Path, config: &Config) -> Result<Corpus> {
    let mut opts = config.corpus.options(config.corpus.scheme, CorpusRole::Unlabeled)?;
    opts.tag_column = None;
    Ok(read_conll(path, &opts)?)
}

fn load_table(path: &Path, vocab: Option<&HashSet<String>>) -> Result<EmbeddingTable> {
    let table = if path.extension().is_some_and(|e| e == "bin") {
        load_binary(path)?
    } else {
        load_vectors(path, vocab)?
    };
    Ok(table)
}

fn gazetteer_sources(specs: &[String]) -> Result<Vec<(PathBuf, String)>> {
    Ok(specs.iter().map(|s| parse_source(s)).collect::<noisetag::Result<_>>()?)
}

fn run_annotate(a: &AnnotateArgs, config: &Config, out_dir: &Path) -> Result<Vec<Artifact>> {
    let gaz = load_gazetteer(&gazetteer_sources(&a.gazetteers)?, config.corpus.case_fold)?;
    let corpus = if a.gold {
        read_gold(&a.corpus, config, CorpusRole::Test)?
    } else {
        read_tokens(&a.corpus, config)?
    };
    let auto = annotate(&corpus, &gaz);
    let out = output(&a.out, out_dir, "annotated.conll");
    write_conll_file(&auto, &out)?;
    let mut artifacts = vec![Artifact::new(out, Kind::NoisyConll)];
    if a.gold {
        let report = labeling_report(&corpus, &auto)?;
        artifacts.extend(write_report(&report, out_dir, "annotate_report")?);
    }
    Ok(artifacts)
}

fn run_kmeans(a: &KmeansArgs, config: &Config, out_dir: &Path) -> Result<Vec<Artifact>> {
    let table = load_table(&a.vectors, None)?;
    let (clustering, state) = cluster_embeddings(&table, table.words(), &config.kmeans)?;
    log::info!("k-means: {} iterations, objective {:.4}", state.iterations, state.objective);
    let out = output(&a.out, out_dir, "clusters.tsv");
    clustering.save(&out)?;
    Ok(vec![Artifact::new(out, Kind::Clusters)])
}

fn run_brown(a: &BrownArgs, config: &Config, out_dir: &Path) -> Result<Vec<Artifact>> {
    let mut text = Corpus::new(CorpusRole::Unlabeled, Vec::new());
    for path in &a.corpus {
        text.sentences.extend(read_tokens(path, config)?.sentences);
    }
    let (clustering, state) = brown_cluster(&text, &config.brown)?;
    log::info!("Brown: {} merges, AMI {:.4}", state.merge_count, state.ami);
    let out = output(&a.out, out_dir, "clusters.tsv");
    clustering.save(&out)?;
    Ok(vec![Artifact::new(out, Kind::Clusters)])
}

fn noise_variant(mode: &str) -> Result<(ModelVariant, NoiseMode)> {
    let variant: ModelVariant = mode.parse()?;
    let noise = variant
        .noise_mode()
        .ok_or_else(|| anyhow!("variant {} has no confusion matrices", variant))?;
    Ok((variant, noise))
}

fn noise_config(mode: NoiseMode, params: &NoiseParams) -> NoiseConfig {
    let mut cfg = NoiseConfig::new(mode);
    cfg.alpha = params.alpha;
    cfg.min_pairs = params.min_pairs;
    cfg.identity_strength = params.identity_strength;
    if mode.uses_interpolation() {
        cfg.lambda = Some(params.lambda);
    }
    if mode.uses_selection() {
        cfg.fraction = Some(params.fraction);
    }
    cfg
}

fn label_pairs(clean: &Corpus, args: &PairArgs, config: &Config) -> Result<Vec<LabeledPair>> {
    match (&args.clean_noisy, args.gazetteers.is_empty()) {
        (Some(path), true) => {
            let labeled = read_noisy(path, config)?;
            if labeled.len() != clean.len() {
                bail!(
                    "{} has {} sentences but the clean corpus has {}",
                    path.display(),
                    labeled.len(),
                    clean.len()
                );
            }
            Ok(zip_pairs(clean, &labeled))
        }
        (None, false) => {
            let gaz = load_gazetteer(&gazetteer_sources(&args.gazetteers)?, config.corpus.case_fold)?;
            Ok(collect_pairs(clean, &gaz)?)
        }
        (Some(_), false) => bail!("give either --gazetteer or --clean-noisy, not both"),
        (None, true) => bail!("confusion matrices need label pairs: pass --gazetteer or --clean-noisy"),
    }
}

fn load_clusters(variant: ModelVariant, path: &Option<PathBuf>) -> Result<Option<WordClustering>> {
    match (variant.cluster_method(), path) {
        (Some(_), Some(p)) => Ok(Some(WordClustering::load(p)?)),
        (Some(m), None) => bail!("variant {} needs --clusters (a {} cluster file)", variant, m),
        (None, Some(_)) => {
            log::warn!("variant {} ignores --clusters", variant);
            Ok(None)
        }
        (None, None) => Ok(None),
    }
}

fn group_sizes(clustering: Option<&WordClustering>, corpora: &[&Corpus]) -> BTreeMap<usize, usize> {
    match clustering {
        Some(c) => c.token_counts(
            corpora
                .iter()
                .flat_map(|k| k.sentences.iter().flat_map(|s| s.tokens.iter().map(String::as_str))),
        ),
        None => BTreeMap::new(),
    }
}

fn write_noise(model: &ConfusionModel, tagset: &TagSet, out_dir: &Path, stem: &str) -> Result<Vec<Artifact>> {
    let json = out_dir.join(format!("{}.json", stem));
    write_text(&json, &model.to_json(tagset)?)?;
    let mut text = render_heatmap("global", &model.global.probabilities(), tagset);
    for g in model.groups.keys() {
        text.push('\n');
        text.push_str(&render_heatmap(&format!("cluster {}", g), &model.effective_matrix(*g), tagset));
    }
    let txt = out_dir.join(format!("{}.txt", stem));
    write_text(&txt, &text)?;
    Ok(vec![Artifact::new(json, Kind::NoiseModel), Artifact::new(txt, Kind::Text)])
}

fn run_init_cm(a: &InitCmArgs, config: &Config, out_dir: &Path) -> Result<Vec<Artifact>> {
    let tagset = config.corpus.tagset()?;
    let (variant, mode) = noise_variant(&a.mode)?;
    let clean = read_gold(&a.clean, config, CorpusRole::Clean)?;
    let pairs = label_pairs(&clean, &a.pairs, config)?;
    let clustering = load_clusters(variant, &a.clusters)?;
    let noisy = a.noisy.as_ref().map(|p| read_noisy(p, config)).transpose()?;
    let mut corpora = vec![&clean];
    corpora.extend(noisy.as_ref());
    let sizes = group_sizes(clustering.as_ref(), &corpora);
    let model = build_model(&pairs, clustering.as_ref(), &sizes, &noise_config(mode, &config.noise), &tagset)?;
    write_noise(&model, &tagset, out_dir, "cm")
}

fn vocabulary(corpora: &[&Corpus]) -> HashSet<String> {
    corpora
        .iter()
        .flat_map(|c| c.sentences.iter().flat_map(|s| s.tokens.iter().cloned()))
        .collect()
}

fn run_train(a: &TrainArgs, config: &Config, out_dir: &Path) -> Result<Vec<Artifact>> {
    let tagset = config.corpus.tagset()?;
    let variant: ModelVariant = a.mode.parse()?;
    let clean = read_gold(&a.clean, config, CorpusRole::Clean)?;
    let noisy = read_noisy(&a.noisy, config)?;
    let dev = read_gold(&a.dev, config, CorpusRole::Test)?;
    let table = load_table(&a.vectors, Some(&vocabulary(&[&clean, &noisy, &dev])))?;
    let clustering = load_clusters(variant, &a.clusters)?;

    let strategy = match variant {
        ModelVariant::Base => Strategy::Base,
        ModelVariant::BaseNoise => Strategy::BaseNoise,
        ModelVariant::Noise { mode, .. } => {
            let model = match &a.cm {
                Some(path) => {
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    let (model, tags) = ConfusionModel::from_json(&text)?;
                    if tags != tagset {
                        bail!("{} was built for a different tag set", path.display());
                    }
                    if model.mode != mode {
                        bail!("{} holds a {} model but the variant needs {}", path.display(), model.mode, mode);
                    }
                    model
                }
                None => {
                    let pairs = label_pairs(&clean, &a.pairs, config)?;
                    let sizes = group_sizes(clustering.as_ref(), &[&clean, &noisy]);
                    build_model(&pairs, clustering.as_ref(), &sizes, &noise_config(mode, &config.noise), &tagset)?
                }
            };
            Strategy::NoiseLayer(model)
        }
    };

    let mut featurizer = Featurizer::new(&table, &tagset, config.features.window).with_oov(config.features.oov);
    if let Some(c) = &clustering {
        featurizer = featurizer.with_clustering(c);
    }
    let outcome = train(&clean, &noisy, &dev, &featurizer, strategy, &config.train)?;
    log::info!(
        "best dev F1 {:.2} at epoch {:?} after {} epochs",
        outcome.best_dev_f1,
        outcome.best_epoch,
        outcome.epochs_run
    );

    let ck = out_dir.join("checkpoint.json");
    write_text(&ck, &Checkpoint::new(&outcome, &tagset, &config.train).to_json()?)?;
    let log_path = out_dir.join("epochs.tsv");
    write_text(&log_path, &epoch_table(&outcome))?;
    let mut artifacts = vec![Artifact::new(ck, Kind::Checkpoint), Artifact::new(log_path, Kind::Text)];
    if let Some(model) = &outcome.noise {
        artifacts.extend(write_noise(model, &tagset, out_dir, "noise")?);
    }
    Ok(artifacts)
}

fn epoch_table(outcome: &TrainOutcome) -> String {
    let mut s = String::from("epoch\tloss\tclean_batches\tnoisy_batches\tdev_precision\tdev_recall\tdev_f1\n");
    for r in &outcome.log {
        s.push_str(&format!(
            "{}\t{:.6}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\n",
            r.epoch, r.loss, r.clean_batches, r.noisy_batches, r.dev.precision, r.dev.recall, r.dev.f1
        ));
    }
    s
}

fn write_report(report: &EvalReport, out_dir: &Path, stem: &str) -> Result<Vec<Artifact>> {
    let txt = out_dir.join(format!("{}.txt", stem));
    write_text(&txt, &report.render())?;
    let json = out_dir.join(format!("{}.json", stem));
    write_text(&json, &report.to_json()?)?;
    Ok(vec![Artifact::new(txt, Kind::Text), Artifact::new(json, Kind::Json)])
}

fn tagset_from_labels(labels: &[String]) -> Result<TagSet> {
    let types: Vec<&str> = labels
        .iter()
        .skip(1)
        .map(|l| l.strip_prefix("I-").ok_or_else(|| anyhow!("bad label '{}' in checkpoint", l)))
        .collect::<Result<_>>()?;
    Ok(TagSet::new(&types)?)
}

fn run_eval(a: &EvalArgs, config: &Config, out_dir: &Path) -> Result<Vec<Artifact>> {
    let gold = read_gold(&a.gold, config, CorpusRole::Test)?;
    let mut artifacts = Vec::new();
    let predicted = match (&a.pred, &a.checkpoint, &a.vectors) {
        (Some(p), None, _) => read_gold(p, config, CorpusRole::Test)?,
        (None, Some(ck_path), Some(vectors)) => {
            let text = fs::read_to_string(ck_path).with_context(|| format!("reading {}", ck_path.display()))?;
            let ck = Checkpoint::from_json(&text)?;
            let tagset = tagset_from_labels(&ck.tags)?;
            let table = load_table(vectors, Some(&vocabulary(&[&gold])))?;
            let featurizer = Featurizer::new(&table, &tagset, ck.model.window).with_oov(config.features.oov);
            if featurizer.input_dim() != ck.model.input_dim() {
                bail!(
                    "the vectors give {}-dimensional windows but the checkpoint expects {}",
                    featurizer.input_dim(),
                    ck.model.input_dim()
                );
            }
            let predicted = ck.model.predict_corpus(&featurizer, &gold);
            let path = out_dir.join("predictions.conll");
            write_conll_file(&predicted, &path)?;
            artifacts.push(Artifact::new(path, Kind::GoldConll));
            predicted
        }
        _ => bail!("eval needs --pred, or --checkpoint with --vectors"),
    };
    let report = score(&gold, &predicted)?;
    print!("{}", report.render());
    artifacts.extend(write_report(&report, out_dir, "eval")?);
    Ok(artifacts)
}

fn run_benchmark(_a: &BenchmarkArgs, config: &Config, out_dir: &Path) -> Result<Vec<Artifact>> {
    let b = &config.benchmark;
    let seeds: Vec<u64> = (1..=b.seeds as u64).map(|i| config.seed + i).collect();
    let report = run_matrix_experiment(&b.spec, &b.variants, &seeds, &b.experiment)?;
    print!("{}", report.render());
    let txt = out_dir.join("report.txt");
    write_text(&txt, &report.render())?;
    let json = out_dir.join("report.json");
    write_text(&json, &report.to_json()?)?;
    Ok(vec![Artifact::new(txt, Kind::Text), Artifact::new(json, Kind::Json)])
}

use std::path::Path;

use anyhow::{Context, Result};
use noisetag::benchmark::{ExperimentConfig, SyntheticSpec};
use noisetag::clustering::{BrownConfig, KMeansConfig};
use noisetag::corpus::{ConllOptions, CorpusRole, TagScheme, TagSet, CONLL_TYPES};
use noisetag::embeddings::OovPolicy;
use noisetag::tagger::TrainConfig;
use noisetag::variant::{all_variants, ModelVariant};
use serde::{Deserialize, Serialize};

use crate::args::{Command, NoiseArgs};

/// Fully resolved settings of one run: defaults, then the TOML file, then
/// command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub corpus: CorpusConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub noise: NoiseParams,
    pub kmeans: KMeansConfig,
    pub brown: BrownConfig,
    pub benchmark: BenchmarkConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            corpus: CorpusConfig::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            noise: NoiseParams::default(),
            kmeans: KMeansConfig::default(),
            brown: BrownConfig::default(),
            benchmark: BenchmarkConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub entity_types: Vec<String>,
    /// Scheme of gold files (clean, dev, test).
    pub scheme: TagScheme,
    /// Scheme of automatically labeled files.
    pub noisy_scheme: TagScheme,
    /// Tag column; unset means the last column.
    pub tag_column: Option<usize>,
    pub case_fold: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            entity_types: CONLL_TYPES.iter().map(|s| s.to_string()).collect(),
            scheme: TagScheme::Iob2,
            noisy_scheme: TagScheme::Io,
            tag_column: None,
            case_fold: false,
        }
    }
}

impl CorpusConfig {
    pub fn tagset(&self) -> Result<TagSet> {
        Ok(TagSet::new(&self.entity_types)?)
    }

    pub fn options(&self, scheme: TagScheme, role: CorpusRole) -> Result<ConllOptions> {
        Ok(ConllOptions {
            tag_column: Some(self.tag_column.unwrap_or(usize::MAX)),
            scheme,
            tagset: self.tagset()?,
            role,
            ..Default::default()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub window: usize,
    pub oov: OovPolicy,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window: 2,
            oov: OovPolicy::Zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    pub lambda: f64,
    pub fraction: f64,
    pub alpha: f64,
    pub min_pairs: usize,
    pub identity_strength: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            lambda: 0.2,
            fraction: 0.5,
            alpha: 1e-6,
            min_pairs: 5,
            identity_strength: 6.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub seeds: usize,
    pub variants: Vec<ModelVariant>,
    pub spec: SyntheticSpec,
    pub experiment: ExperimentConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            seeds: 5,
            variants: all_variants(),
            spec: SyntheticSpec::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Apply the global seed and the command's own flags.
    pub fn apply(&mut self, seed: Option<u64>, command: &Command) -> Result<()> {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.train.seed = self.seed;
        self.kmeans.seed = self.seed;
        let noise = |cfg: &mut NoiseParams, args: &NoiseArgs| {
            if let Some(l) = args.lambda {
                cfg.lambda = l;
            }
            if let Some(f) = args.fraction {
                cfg.fraction = f;
            }
        };
        match command {
            Command::Cluster(crate::args::ClusterCommand::Kmeans(a)) => {
                if let Some(k) = a.k {
                    self.kmeans.clusters = k;
                }
                if let Some(p) = a.pca {
                    self.kmeans.pca_dim = (p > 0).then_some(p);
                }
            }
            Command::Cluster(crate::args::ClusterCommand::Brown(a)) => {
                if let Some(k) = a.k {
                    self.brown.clusters = k;
                }
            }
            Command::InitCm(a) => noise(&mut self.noise, &a.noise),
            Command::Train(a) => {
                noise(&mut self.noise, &a.noise);
                if let Some(e) = a.epochs {
                    self.train.epochs = e;
                }
                if let Some(h) = a.hidden {
                    self.train.hidden = h;
                }
                if let Some(w) = a.window {
                    self.features.window = w;
                }
            }
            Command::Benchmark(a) => {
                if let Some(n) = a.seeds {
                    self.benchmark.seeds = n;
                }
                if !a.variants.is_empty() {
                    self.benchmark.variants = a
                        .variants
                        .iter()
                        .map(|v| v.parse::<ModelVariant>())
                        .collect::<noisetag::Result<_>>()?;
                }
                if a.spec != "default" {
                    self.benchmark.spec = load_spec(Path::new(&a.spec))?;
                }
            }
            Command::Annotate(_) | Command::Eval(_) | Command::Replay(_) => {}
        }
        self.train.validate()?;
        Ok(())
    }
}

fn load_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading spec {}", path.display()))?;
    let spec = if path.extension().is_some_and(|e| e == "toml") {
        let spec: SyntheticSpec = toml::from_str(&text).with_context(|| format!("parsing spec {}", path.display()))?;
        spec.validate()?;
        spec
    } else {
        SyntheticSpec::from_json(&text).with_context(|| format!("parsing spec {}", path.display()))?
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_toml_round_trip() {
        let cfg = Config::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<Config>(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg: Config = toml::from_str("seed = 7\n[train]\nhidden = 16\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.train.hidden, 16);
        assert_eq!(cfg.train.epochs, TrainConfig::default().epochs);
    }

    #[test]
    fn guide_example_parses() {
        let guide = include_str!("../../../book/src/cli.md");
        let block = guide.split("```toml\n").nth(1).unwrap().split("```").next().unwrap();
        let cfg: Config = toml::from_str(block).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.kmeans.pca_dim, Some(50));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("sed = 7\n").is_err());
    }
}

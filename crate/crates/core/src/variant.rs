//! Named model configurations: `base`, `base+noise`, `global-cm`,
//! `global-id-cm`, and `{brown,kmeans}-cm` with optional `-freq`, `-ip`
//! or `-freq-ip` suffixes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    Brown,
    Kmeans,
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterMethod::Brown => "brown",
            ClusterMethod::Kmeans => "kmeans",
        })
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brown" => Ok(ClusterMethod::Brown),
            "kmeans" => Ok(ClusterMethod::Kmeans),
            _ => Err(Error::Config(format!("unknown clustering method '{}'", s))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    Base,
    BaseNoise,
    Noise { mode: NoiseMode, clustering: Option<ClusterMethod> },
}

impl ModelVariant {
    pub fn noise_mode(&self) -> Option<NoiseMode> {
        match self {
            ModelVariant::Noise { mode, .. } => Some(*mode),
            _ => None,
        }
    }

    pub fn cluster_method(&self) -> Option<ClusterMethod> {
        match self {
            ModelVariant::Noise { clustering, .. } => *clustering,
            _ => None,
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelVariant::Base => f.write_str("base"),
            ModelVariant::BaseNoise => f.write_str("base+noise"),
            ModelVariant::Noise { mode, clustering } => {
                let suffix = match mode {
                    NoiseMode::Global => return f.write_str("global-cm"),
                    NoiseMode::GlobalIdentity => return f.write_str("global-id-cm"),
                    NoiseMode::Cluster => "",
                    NoiseMode::ClusterFreq => "-freq",
                    NoiseMode::ClusterIp => "-ip",
                    NoiseMode::ClusterFreqIp => "-freq-ip",
                };
                let method = clustering.expect("cluster modes carry a clustering method");
                write!(f, "{}-cm{}", method, suffix)
            }
        }
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::Config(format!("unknown model variant '{}'", s));
        match s {
            "base" => return Ok(ModelVariant::Base),
            "base+noise" => return Ok(ModelVariant::BaseNoise),
            "global-cm" => {
                return Ok(ModelVariant::Noise {
                    mode: NoiseMode::Global,
                    clustering: None,
                })
            }
            "global-id-cm" => {
                return Ok(ModelVariant::Noise {
                    mode: NoiseMode::GlobalIdentity,
                    clustering: None,
                })
            }
            _ => {}
        }
        let (method, rest) = s.split_once("-cm").ok_or_else(unknown)?;
        let clustering = method.parse::<ClusterMethod>().map_err(|_| unknown())?;
        let mode = match rest {
            "" => NoiseMode::Cluster,
            "-freq" => NoiseMode::ClusterFreq,
            "-ip" => NoiseMode::ClusterIp,
            "-freq-ip" => NoiseMode::ClusterFreqIp,
            _ => return Err(unknown()),
        };
        Ok(ModelVariant::Noise {
            mode,
            clustering: Some(clustering),
        })
    }
}

impl Serialize for ModelVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Every variant name, in table order.
pub fn all_variants() -> Vec<ModelVariant> {
    let mut out = vec![
        ModelVariant::Base,
        ModelVariant::BaseNoise,
        ModelVariant::Noise {
            mode: NoiseMode::Global,
            clustering: None,
        },
        ModelVariant::Noise {
            mode: NoiseMode::GlobalIdentity,
            clustering: None,
        },
    ];
    for method in [ClusterMethod::Brown, ClusterMethod::Kmeans] {
        for mode in [
            NoiseMode::Cluster,
            NoiseMode::ClusterFreq,
            NoiseMode::ClusterIp,
            NoiseMode::ClusterFreqIp,
        ] {
            out.push(ModelVariant::Noise {
                mode,
                clustering: Some(method),
            });
        }
    }
    out
}

use ndarray::Array2;

use crate::clustering::WordClustering;
use crate::corpus::{Sentence, TagSet};
use crate::embeddings::{EmbeddingTable, OovPolicy};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Clean,
    Noisy,
}

/// One token in context, ready for the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub center_word: String,
    /// Embeddings of positions `pos - w ..= pos + w`, zero-padded.
    pub feature: Vec<f64>,
    /// Index of the (IO) target label in the tag set.
    pub target: usize,
    pub source: Source,
    pub group: usize,
}

/// Turns sentence positions into window features and cluster groups.
#[derive(Clone, Copy, Debug)]
pub struct Featurizer<'a> {
    pub embeddings: &'a EmbeddingTable,
    pub clustering: Option<&'a WordClustering>,
    pub tagset: &'a TagSet,
    pub window: usize,
    pub oov: OovPolicy,
}

impl<'a> Featurizer<'a> {
    pub fn new(embeddings: &'a EmbeddingTable, tagset: &'a TagSet, window: usize) -> Self {
        Featurizer {
            embeddings,
            clustering: None,
            tagset,
            window,
            oov: OovPolicy::Zero,
        }
    }

    pub fn with_clustering(mut self, clustering: &'a WordClustering) -> Self {
        self.clustering = Some(clustering);
        self
    }

    pub fn with_oov(mut self, oov: OovPolicy) -> Self {
        self.oov = oov;
        self
    }

    pub fn input_dim(&self) -> usize {
        (2 * self.window + 1) * self.embeddings.dim()
    }

    /// Cluster of a word; 0 when no clustering is attached.
    pub fn group(&self, word: &str) -> usize {
        self.clustering.map_or(0, |c| c.assign(word))
    }

    /// Write the window feature for `tokens[pos]` into `out`.
    pub fn window_into<S: AsRef<str>>(&self, tokens: &[S], pos: usize, out: &mut [f64]) {
        let d = self.embeddings.dim();
        debug_assert_eq!(out.len(), self.input_dim());
        for (slot, chunk) in out.chunks_mut(d).enumerate() {
            let idx = (pos + slot).checked_sub(self.window).filter(|&i| i < tokens.len());
            match idx {
                Some(i) => chunk.copy_from_slice(self.embeddings.lookup(tokens[i].as_ref(), self.oov)),
                None => chunk.fill(0.0),
            }
        }
    }

    pub fn window_feature<S: AsRef<str>>(&self, tokens: &[S], pos: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.input_dim()];
        self.window_into(tokens, pos, &mut out);
        out
    }

    pub fn instance(&self, sentence: &Sentence, pos: usize, source: Source) -> Result<Instance> {
        if pos >= sentence.len() {
            return Err(Error::Config(format!(
                "position {} is outside a sentence of length {}",
                pos,
                sentence.len()
            )));
        }
        let tags = sentence
            .tags
            .as_ref()
            .ok_or_else(|| Error::Config("cannot build a training instance from an untagged sentence".into()))?;
        let tag = tags[pos].to_io();
        let target = self
            .tagset
            .index(&tag)
            .ok_or_else(|| Error::Config(format!("tag {} is not in the tag set", tag)))?;
        let word = &sentence.tokens[pos];
        Ok(Instance {
            center_word: word.clone(),
            feature: self.window_feature(&sentence.tokens, pos),
            target,
            source,
            group: self.group(word),
        })
    }

    /// Every token of a tagged corpus as an instance.
    pub fn instances(&self, sentences: &[Sentence], source: Source) -> Result<Vec<Instance>> {
        let mut out = Vec::new();
        for s in sentences {
            for pos in 0..s.len() {
                out.push(self.instance(s, pos, source)?);
            }
        }
        Ok(out)
    }

    /// Feature matrix for all tokens of one sentence.
    pub fn sentence_matrix<S: AsRef<str>>(&self, tokens: &[S]) -> Array2<f64> {
        let mut x = Array2::zeros((tokens.len(), self.input_dim()));
        for (pos, mut row) in x.rows_mut().into_iter().enumerate() {
            self.window_into(tokens, pos, row.as_slice_mut().expect("standard layout"));
        }
        x
    }
}

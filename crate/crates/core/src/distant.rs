//! Gazetteer-based automatic annotation.
//!
//! Unlabeled sentences are labeled by greedy, left-to-right, longest-match
//! lookup of token sequences in a gazetteer. Running the same annotator on
//! the clean corpus yields (clean, noisy) label pairs for initializing the
//! confusion matrices.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{iob2_to_io, Corpus, CorpusRole, Sentence, Tag};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Gazetteer {
    entries: HashMap<Vec<String>, String>,
    max_len: usize,
    case_fold: bool,
    type_counts: BTreeMap<String, usize>,
    conflicts: usize,
    duplicates: usize,
    skipped_lines: usize,
}

impl Gazetteer {
    pub fn new(case_fold: bool) -> Self {
        Gazetteer {
            case_fold,
            ..Default::default()
        }
    }

    fn key<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        tokens
            .iter()
            .map(|t| {
                if self.case_fold {
                    t.as_ref().to_lowercase()
                } else {
                    t.as_ref().to_owned()
                }
            })
            .collect()
    }

    /// Add an entry. The first type registered for a surface form wins;
    /// returns `false` when the entry was rejected.
    pub fn insert<S: AsRef<str>>(&mut self, tokens: &[S], entity_type: &str) -> bool {
        if tokens.is_empty() || tokens.iter().any(|t| t.as_ref().is_empty()) {
            self.skipped_lines += 1;
            return false;
        }
        let key = self.key(tokens);
        if let Some(existing) = self.entries.get(&key) {
            if existing == entity_type {
                self.duplicates += 1;
            } else {
                self.conflicts += 1;
            }
            return false;
        }
        self.max_len = self.max_len.max(key.len());
        *self.type_counts.entry(entity_type.to_owned()).or_default() += 1;
        self.entries.insert(key, entity_type.to_owned());
        true
    }

    /// Read one entry per line (tokens separated by whitespace).
    pub fn extend_from_reader<R: BufRead>(&mut self, reader: R, entity_type: &str, source_name: &str) -> Result<()> {
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.is_empty() {
                self.skipped_lines += 1;
                continue;
            }
            self.insert(&tokens, entity_type);
        }
        Ok(())
    }

    pub fn lookup<S: AsRef<str>>(&self, tokens: &[S]) -> Option<&str> {
        self.entries.get(&self.key(tokens)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn case_fold(&self) -> bool {
        self.case_fold
    }

    pub fn type_counts(&self) -> &BTreeMap<String, usize> {
        &self.type_counts
    }

    /// Entries rejected because an earlier source gave the same form a different type.
    pub fn conflicts(&self) -> usize {
        self.conflicts
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    pub fn entity_types(&self) -> impl Iterator<Item = &str> {
        self.type_counts.keys().map(String::as_str)
    }

    /// Label one token sequence in the IO scheme.
    pub fn annotate_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Tag> {
        let n = tokens.len();
        let mut tags = Vec::with_capacity(n);
        let mut i = 0;
        while i < n {
            let longest = self.max_len.min(n - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|len| self.lookup(&tokens[i..i + len]).map(|ty| (len, ty)));
            match hit {
                Some((len, ty)) => {
                    tags.extend(std::iter::repeat_n(Tag::inside(ty), len));
                    i += len;
                }
                None => {
                    tags.push(Tag::Outside);
                    i += 1;
                }
            }
        }
        tags
    }
}

/// Load and merge gazetteer files, each paired with its entity type.
pub fn load_gazetteer<P: AsRef<Path>>(sources: &[(P, String)], case_fold: bool) -> Result<Gazetteer> {
    let mut gaz = Gazetteer::new(case_fold);
    for (path, ty) in sources {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        gaz.extend_from_reader(BufReader::new(file), ty, &path.display().to_string())?;
    }
    if gaz.skipped_lines > 0 {
        log::warn!("gazetteer: skipped {} empty lines", gaz.skipped_lines);
    }
    if gaz.conflicts > 0 {
        log::warn!("gazetteer: {} entries conflicted with an earlier type", gaz.conflicts);
    }
    Ok(gaz)
}

/// Parse a `TYPE:path` command-line source argument.
pub fn parse_source(spec: &str) -> Result<(PathBuf, String)> {
    match spec.split_once(':') {
        Some((ty, path)) if !ty.is_empty() && !path.is_empty() => Ok((PathBuf::from(path), ty.to_owned())),
        _ => Err(Error::Config(format!(
            "gazetteer source '{}' must have the form TYPE:path",
            spec
        ))),
    }
}

/// Label every sentence of `corpus`, ignoring any tags it already has.
pub fn annotate(corpus: &Corpus, gaz: &Gazetteer) -> Corpus {
    Corpus::new(
        CorpusRole::Noisy,
        corpus
            .sentences
            .iter()
            .map(|s| Sentence {
                tokens: s.tokens.clone(),
                tags: Some(gaz.annotate_tokens(&s.tokens)),
            })
            .collect(),
    )
}

/// A clean label and the label the annotator assigns to the same token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub word: String,
    pub clean: Tag,
    pub noisy: Tag,
}

/// One pair per token of `clean`, in IO form.
pub fn collect_pairs(clean: &Corpus, gaz: &Gazetteer) -> Result<Vec<LabeledPair>> {
    clean.require_tags("clean")?;
    let auto = annotate(clean, gaz);
    Ok(zip_pairs(clean, &auto))
}

/// Zip two token-aligned tagged corpora into label pairs. Sentences with
/// missing tags are skipped.
pub fn zip_pairs(clean: &Corpus, noisy: &Corpus) -> Vec<LabeledPair> {
    let mut pairs = Vec::with_capacity(clean.token_count());
    for (c, n) in clean.sentences.iter().zip(&noisy.sentences) {
        let (Some(ct), Some(nt)) = (&c.tags, &n.tags) else {
            continue;
        };
        let ct = iob2_to_io(ct);
        let nt = iob2_to_io(nt);
        for ((word, clean), noisy) in c.tokens.iter().zip(ct).zip(nt) {
            pairs.push(LabeledPair {
                word: word.clone(),
                clean,
                noisy,
            });
        }
    }
    pairs
}

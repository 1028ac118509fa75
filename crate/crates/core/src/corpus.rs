//! CoNLL-style column corpora and the IO / IOB2 tag schemes.
//!
//! Training happens in the IO scheme, where a tag is either `O` or
//! `I-<TYPE>`. Evaluation happens in IOB2, which additionally marks the
//! first token of every entity with `B-<TYPE>`. [`io_to_iob2`] and
//! [`iob2_to_io`] convert between the two.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entity types used by the CoNLL shared tasks.
pub const CONLL_TYPES: [&str; 4] = ["PER", "LOC", "ORG", "MISC"];

const DOCSTART: &str = "-DOCSTART-";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    Outside,
    /// First token of an entity (IOB2 only).
    Begin(String),
    Inside(String),
}

impl Tag {
    pub fn inside(entity_type: &str) -> Self {
        Tag::Inside(entity_type.to_owned())
    }

    pub fn begin(entity_type: &str) -> Self {
        Tag::Begin(entity_type.to_owned())
    }

    pub fn entity_type(&self) -> Option<&str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(t) | Tag::Inside(t) => Some(t),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Tag::Outside)
    }

    /// The IO form of this tag: `B-X` becomes `I-X`.
    pub fn to_io(&self) -> Tag {
        match self {
            Tag::Begin(t) => Tag::Inside(t.clone()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(t) => write!(f, "B-{}", t),
            Tag::Inside(t) => write!(f, "I-{}", t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagScheme {
    Io,
    Iob2,
}

impl FromStr for TagScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "io" => Ok(TagScheme::Io),
            "iob2" | "bio" => Ok(TagScheme::Iob2),
            _ => Err(Error::Config(format!("unknown tag scheme '{}'", s))),
        }
    }
}

impl fmt::Display for TagScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagScheme::Io => f.write_str("io"),
            TagScheme::Iob2 => f.write_str("iob2"),
        }
    }
}

/// The IO label inventory: `O` at index 0 followed by one `I-<TYPE>` per
/// entity type, in configuration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    types: Vec<String>,
}

impl TagSet {
    pub fn new<S: AsRef<str>>(types: &[S]) -> Result<Self> {
        let mut seen = Vec::with_capacity(types.len());
        for t in types {
            let t = t.as_ref();
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("invalid entity type '{}'", t)));
            }
            if seen.iter().any(|s: &String| s == t) {
                return Err(Error::Config(format!("duplicate entity type '{}'", t)));
            }
            seen.push(t.to_owned());
        }
        Ok(TagSet { types: seen })
    }

    /// `O`, `I-PER`, `I-LOC`, `I-ORG`, `I-MISC`.
    pub fn conll() -> Self {
        TagSet::new(&CONLL_TYPES).expect("static inventory")
    }

    /// Number of classes `k`.
    pub fn len(&self) -> usize {
        self.types.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entity_types(&self) -> &[String] {
        &self.types
    }

    pub fn has_type(&self, entity_type: &str) -> bool {
        self.types.iter().any(|t| t == entity_type)
    }

    /// Index of the IO form of `tag`, or `None` for an unknown type.
    pub fn index(&self, tag: &Tag) -> Option<usize> {
        match tag.entity_type() {
            None => Some(0),
            Some(t) => self.types.iter().position(|x| x == t).map(|i| i + 1),
        }
    }

    pub fn tag(&self, index: usize) -> Tag {
        if index == 0 {
            Tag::Outside
        } else {
            Tag::Inside(self.types[index - 1].clone())
        }
    }

    pub fn tags(&self) -> impl Iterator<Item = Tag> + '_ {
        (0..self.len()).map(move |i| self.tag(i))
    }

    /// Parse a tag string under `scheme`, checking the type inventory.
    pub fn parse(&self, s: &str, scheme: TagScheme) -> std::result::Result<Tag, String> {
        if s == "O" {
            return Ok(Tag::Outside);
        }
        let (prefix, ty) = s
            .split_once('-')
            .ok_or_else(|| format!("malformed tag '{}'", s))?;
        if !self.has_type(ty) {
            return Err(format!("tag '{}' has unknown entity type '{}'", s, ty));
        }
        match (prefix, scheme) {
            ("I", _) => Ok(Tag::Inside(ty.to_owned())),
            ("B", TagScheme::Iob2) => Ok(Tag::Begin(ty.to_owned())),
            ("B", TagScheme::Io) => Err(format!("tag '{}' is not valid in the IO scheme", s)),
            _ => Err(format!("malformed tag '{}'", s)),
        }
    }
}

impl Default for TagSet {
    fn default() -> Self {
        TagSet::conll()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub tags: Option<Vec<Tag>>,
}

impl Sentence {
    pub fn new(tokens: Vec<String>, tags: Option<Vec<Tag>>) -> Result<Self> {
        if let Some(tags) = &tags {
            if tags.len() != tokens.len() {
                return Err(Error::Shape {
                    expected: tokens.len(),
                    actual: tags.len(),
                });
            }
        }
        if tokens.iter().any(|t| t.is_empty()) {
            return Err(Error::Config("sentence contains an empty token".into()));
        }
        Ok(Sentence { tokens, tags })
    }

    /// Convenience constructor from string slices.
    pub fn tagged(tokens: &[&str], tags: &[Tag]) -> Result<Self> {
        Sentence::new(
            tokens.iter().map(|t| t.to_string()).collect(),
            Some(tags.to_vec()),
        )
    }

    pub fn untagged(tokens: &[&str]) -> Result<Self> {
        Sentence::new(tokens.iter().map(|t| t.to_string()).collect(), None)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn without_tags(&self) -> Sentence {
        Sentence {
            tokens: self.tokens.clone(),
            tags: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusRole {
    Clean,
    Noisy,
    Unlabeled,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub role: CorpusRole,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(role: CorpusRole, sentences: Vec<Sentence>) -> Self {
        Corpus { role, sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn is_fully_tagged(&self) -> bool {
        self.sentences.iter().all(|s| s.tags.is_some())
    }

    pub(crate) fn require_tags(&self, what: &str) -> Result<()> {
        if self.is_fully_tagged() {
            Ok(())
        } else {
            Err(Error::Config(format!("{} corpus must be fully tagged", what)))
        }
    }

    pub fn without_tags(&self) -> Corpus {
        Corpus {
            role: CorpusRole::Unlabeled,
            sentences: self.sentences.iter().map(Sentence::without_tags).collect(),
        }
    }

    /// Rewrite all tags into the IO scheme.
    pub fn to_io(&self) -> Corpus {
        self.map_tags(iob2_to_io)
    }

    /// Rewrite all tags into the IOB2 scheme. Tags already carrying `B-`
    /// prefixes are kept as they are.
    pub fn to_iob2(&self) -> Corpus {
        self.map_tags(io_to_iob2)
    }

    fn map_tags(&self, f: fn(&[Tag]) -> Vec<Tag>) -> Corpus {
        Corpus {
            role: self.role,
            sentences: self
                .sentences
                .iter()
                .map(|s| Sentence {
                    tokens: s.tokens.clone(),
                    tags: s.tags.as_deref().map(f),
                })
                .collect(),
        }
    }

    /// Distinct surface forms in first-occurrence order.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut words = Vec::new();
        for s in &self.sentences {
            for t in &s.tokens {
                if seen.insert(t.as_str()) {
                    words.push(t.clone());
                }
            }
        }
        words
    }
}

/// Column layout and tag handling for [`read_conll`].
#[derive(Clone, Debug)]
pub struct ConllOptions {
    pub token_column: usize,
    /// `None` reads an untagged corpus.
    pub tag_column: Option<usize>,
    pub scheme: TagScheme,
    pub tagset: TagSet,
    pub role: CorpusRole,
}

impl Default for ConllOptions {
    fn default() -> Self {
        ConllOptions {
            token_column: 0,
            tag_column: Some(1),
            scheme: TagScheme::Io,
            tagset: TagSet::conll(),
            role: CorpusRole::Clean,
        }
    }
}

impl ConllOptions {
    /// Tokens from column 0, tags from the last column (CoNLL-2003 layout).
    pub fn last_column(scheme: TagScheme, role: CorpusRole) -> Self {
        ConllOptions {
            tag_column: Some(usize::MAX),
            scheme,
            role,
            ..Default::default()
        }
    }

    pub fn with_tag_column(mut self, column: usize) -> Self {
        self.tag_column = Some(column);
        self
    }
}

pub fn read_conll(path: impl AsRef<Path>, options: &ConllOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_conll(
        BufReader::new(file),
        &path.display().to_string(),
        options,
    )
}

/// Parse CoNLL column text. A tag column of `usize::MAX` means "last column".
pub fn parse_conll<R: BufRead>(reader: R, source_name: &str, options: &ConllOptions) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut tags: Vec<Tag> = Vec::new();
    let mut width: Option<usize> = None;

    let mut flush = |tokens: &mut Vec<String>, tags: &mut Vec<Tag>| {
        if !tokens.is_empty() {
            let tags = options.tag_column.map(|_| std::mem::take(tags));
            sentences.push(Sentence {
                tokens: std::mem::take(tokens),
                tags,
            });
        }
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            flush(&mut tokens, &mut tags);
            continue;
        }
        if cols[0] == DOCSTART {
            continue;
        }
        match width {
            None => width = Some(cols.len()),
            Some(w) if w != cols.len() => {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("ragged columns: expected {} columns, found {}", w, cols.len()),
                ))
            }
            _ => {}
        }
        let token = cols.get(options.token_column).ok_or_else(|| {
            Error::parse(source_name, lineno, format!("missing token column {}", options.token_column))
        })?;
        tokens.push((*token).to_owned());
        if let Some(col) = options.tag_column {
            let col = if col == usize::MAX { cols.len() - 1 } else { col };
            if col == options.token_column {
                return Err(Error::parse(source_name, lineno, "tag column equals token column"));
            }
            let raw = cols.get(col).ok_or_else(|| {
                Error::parse(source_name, lineno, format!("missing tag column {}", col))
            })?;
            let tag = options
                .tagset
                .parse(raw, options.scheme)
                .map_err(|m| Error::parse(source_name, lineno, m))?;
            tags.push(tag);
        }
    }
    flush(&mut tokens, &mut tags);

    Ok(Corpus {
        role: options.role,
        sentences,
    })
}

/// Write `token<SPACE>tag` lines (or bare tokens for untagged sentences),
/// with a blank line after each sentence.
pub fn write_conll<W: Write>(corpus: &Corpus, mut writer: W) -> std::io::Result<()> {
    for s in &corpus.sentences {
        match &s.tags {
            Some(tags) => {
                for (tok, tag) in s.tokens.iter().zip(tags) {
                    writeln!(writer, "{} {}", tok, tag)?;
                }
            }
            None => {
                for tok in &s.tokens {
                    writeln!(writer, "{}", tok)?;
                }
            }
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn write_conll_file(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    write_conll(corpus, &mut writer).map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Split a tagged corpus by sentence into a clean part that keeps its tags
/// and an untagged remainder. Both parts keep the original sentence order.
pub fn split_clean_noisy(corpus: &Corpus, clean_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(clean_fraction > 0.0 && clean_fraction < 1.0) {
        return Err(Error::Config(format!(
            "clean fraction must lie in (0, 1), got {}",
            clean_fraction
        )));
    }
    corpus.require_tags("split input")?;

    let n = corpus.len();
    let n_clean = (clean_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_clean = vec![false; n];
    for &i in &order[..n_clean] {
        is_clean[i] = true;
    }

    let mut clean = Vec::with_capacity(n_clean);
    let mut rest = Vec::with_capacity(n - n_clean);
    for (s, keep) in corpus.sentences.iter().zip(is_clean) {
        if keep {
            clean.push(s.clone());
        } else {
            rest.push(s.without_tags());
        }
    }
    Ok((
        Corpus::new(CorpusRole::Clean, clean),
        Corpus::new(CorpusRole::Unlabeled, rest),
    ))
}

/// IO to IOB2: the first token of every maximal same-type run becomes `B-`.
pub fn io_to_iob2(tags: &[Tag]) -> Vec<Tag> {
    let mut out = Vec::with_capacity(tags.len());
    let mut prev: Option<&str> = None;
    for tag in tags {
        let converted = match tag {
            Tag::Outside => Tag::Outside,
            Tag::Begin(t) => Tag::Begin(t.clone()),
            Tag::Inside(t) if prev == Some(t.as_str()) => Tag::Inside(t.clone()),
            Tag::Inside(t) => Tag::Begin(t.clone()),
        };
        prev = tag.entity_type();
        out.push(converted);
    }
    out
}

/// IOB2 to IO. Lossy for adjacent entities of the same type.
pub fn iob2_to_io(tags: &[Tag]) -> Vec<Tag> {
    tags.iter().map(Tag::to_io).collect()
}

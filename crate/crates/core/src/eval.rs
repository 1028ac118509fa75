//! Entity-level precision, recall and F1 over IOB2 tag sequences.
//!
//! Spans follow the CoNLL chunk rules: a chunk starts at `B-X`, and also
//! at an `I-X` that follows `O` or a tag of another type (lenient
//! repair); it ends before `O`, `B-*`, or an `I-` of another type. A span
//! counts as correct only with identical sentence, boundaries and type.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Tag};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub sentence: usize,
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub entity_type: String,
}

/// Spans of one tag sequence, tagged with sentence index 0.
pub fn extract_spans(tags: &[Tag]) -> Vec<EntitySpan> {
    spans_in(0, tags, false)
}

/// Like [`extract_spans`], but an `I-` tag that cannot continue a chunk
/// is dropped instead of opening a new one.
pub fn extract_spans_strict(tags: &[Tag]) -> Vec<EntitySpan> {
    spans_in(0, tags, true)
}

fn spans_in(sentence: usize, tags: &[Tag], strict: bool) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    let close = |open: &mut Option<(usize, &str)>, end: usize, spans: &mut Vec<EntitySpan>| {
        if let Some((start, ty)) = open.take() {
            spans.push(EntitySpan {
                sentence,
                start,
                end,
                entity_type: ty.to_owned(),
            });
        }
    };
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::Outside => close(&mut open, i.wrapping_sub(1), &mut spans),
            Tag::Begin(t) => {
                close(&mut open, i.wrapping_sub(1), &mut spans);
                open = Some((i, t));
            }
            Tag::Inside(t) => match open {
                Some((_, ty)) if ty == t => {}
                _ => {
                    close(&mut open, i.wrapping_sub(1), &mut spans);
                    if !strict {
                        open = Some((i, t));
                    }
                }
            },
        }
    }
    close(&mut open, tags.len().wrapping_sub(1), &mut spans);
    spans
}

/// Spans of every tagged sentence of a corpus.
pub fn corpus_spans(corpus: &Corpus, strict: bool) -> Vec<EntitySpan> {
    corpus
        .sentences
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.tags.as_deref().map(|t| spans_in(i, t, strict)))
        .flatten()
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
    /// Percentages; zero when the denominator is zero.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn from_counts(gold: usize, predicted: usize, correct: usize) -> Self {
        let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        let precision = pct(correct, predicted);
        let recall = pct(correct, gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Scores {
            gold,
            predicted,
            correct,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tokens: usize,
    pub correct_tokens: usize,
    pub overall: Scores,
    pub per_type: BTreeMap<String, Scores>,
}

impl EvalReport {
    pub fn token_accuracy(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            100.0 * self.correct_tokens as f64 / self.tokens as f64
        }
    }

    /// Plain-text summary in the layout of the CoNLL evaluation script,
    /// with one decimal place.
    pub fn render(&self) -> String {
        let o = &self.overall;
        let mut s = format!(
            "processed {} tokens with {} phrases; found: {} phrases; correct: {}.\n",
            self.tokens, o.gold, o.predicted, o.correct
        );
        let _ = writeln!(
            s,
            "accuracy: {:6.1}%; precision: {:6.1}%; recall: {:6.1}%; FB1: {:6.1}",
            self.token_accuracy(),
            o.precision,
            o.recall,
            o.f1
        );
        for (ty, sc) in &self.per_type {
            let _ = writeln!(
                s,
                "{:>17}: precision: {:6.1}%; recall: {:6.1}%; FB1: {:6.1}  {}",
                ty, sc.precision, sc.recall, sc.f1, sc.predicted
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Score predicted tags against gold tags (lenient span extraction).
pub fn score(gold: &Corpus, predicted: &Corpus) -> Result<EvalReport> {
    score_with(gold, predicted, false)
}

pub fn score_with(gold: &Corpus, predicted: &Corpus, strict: bool) -> Result<EvalReport> {
    if gold.len() != predicted.len() {
        return Err(Error::Alignment(format!(
            "{} gold sentences but {} predicted",
            gold.len(),
            predicted.len()
        )));
    }
    let mut tokens = 0;
    let mut correct_tokens = 0;
    for (i, (g, p)) in gold.sentences.iter().zip(&predicted.sentences).enumerate() {
        if g.tokens != p.tokens {
            return Err(Error::Alignment(format!("sentence {} has different tokens", i)));
        }
        let (Some(gt), Some(pt)) = (&g.tags, &p.tags) else {
            return Err(Error::Alignment(format!("sentence {} is untagged", i)));
        };
        tokens += gt.len();
        correct_tokens += gt.iter().zip(pt).filter(|(a, b)| a == b).count();
    }

    let gold_spans: BTreeSet<EntitySpan> = corpus_spans(gold, strict).into_iter().collect();
    let pred_spans: BTreeSet<EntitySpan> = corpus_spans(predicted, strict).into_iter().collect();

    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for s in &gold_spans {
        counts.entry(s.entity_type.clone()).or_default().0 += 1;
    }
    for s in &pred_spans {
        let e = counts.entry(s.entity_type.clone()).or_default();
        e.1 += 1;
        if gold_spans.contains(s) {
            e.2 += 1;
        }
    }
    let per_type: BTreeMap<String, Scores> = counts
        .iter()
        .map(|(t, &(g, p, c))| (t.clone(), Scores::from_counts(g, p, c)))
        .collect();
    let (g, p, c) = counts
        .values()
        .fold((0, 0, 0), |acc, &(g, p, c)| (acc.0 + g, acc.1 + p, acc.2 + c));

    Ok(EvalReport {
        tokens,
        correct_tokens,
        overall: Scores::from_counts(g, p, c),
        per_type,
    })
}

/// Quality of automatically assigned labels against gold labels. Spans
/// are scored as in [`score`]; token accuracy compares IO forms, since
/// annotators emit IO tags.
pub fn labeling_report(gold: &Corpus, auto: &Corpus) -> Result<EvalReport> {
    let mut report = score(gold, auto)?;
    report.correct_tokens = gold
        .sentences
        .iter()
        .zip(&auto.sentences)
        .filter_map(|(g, a)| Some((g.tags.as_ref()?, a.tags.as_ref()?)))
        .map(|(g, a)| g.iter().zip(a).filter(|(x, y)| x.to_io() == y.to_io()).count())
        .sum();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusRole, Sentence};

    fn b(t: &str) -> Tag {
        Tag::begin(t)
    }
    fn i(t: &str) -> Tag {
        Tag::inside(t)
    }
    const O: Tag = Tag::Outside;

    fn span(start: usize, end: usize, ty: &str) -> EntitySpan {
        EntitySpan {
            sentence: 0,
            start,
            end,
            entity_type: ty.into(),
        }
    }

    #[test]
    fn basic_spans() {
        assert_eq!(extract_spans(&[b("PER"), i("PER"), O]), vec![span(0, 1, "PER")]);
        assert_eq!(extract_spans(&[O, i("LOC")]), vec![span(1, 1, "LOC")]);
        assert_eq!(
            extract_spans(&[b("PER"), b("PER")]),
            vec![span(0, 0, "PER"), span(1, 1, "PER")]
        );
        assert_eq!(
            extract_spans(&[b("PER"), i("LOC"), i("LOC")]),
            vec![span(0, 0, "PER"), span(1, 2, "LOC")]
        );
        assert!(extract_spans(&[]).is_empty());
    }

    #[test]
    fn strict_drops_orphans() {
        assert!(extract_spans_strict(&[O, i("LOC")]).is_empty());
        assert_eq!(extract_spans_strict(&[b("LOC"), i("LOC")]), vec![span(0, 1, "LOC")]);
    }

    fn corpus(rows: Vec<(Vec<&str>, Vec<Tag>)>) -> Corpus {
        Corpus::new(
            CorpusRole::Test,
            rows.into_iter().map(|(t, g)| Sentence::tagged(&t, &g).unwrap()).collect(),
        )
    }

    #[test]
    fn perfect_and_partial() {
        let gold = corpus(vec![(vec!["a", "b", "c"], vec![b("PER"), O, b("LOC")])]);
        let r = score(&gold, &gold).unwrap();
        assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (100.0, 100.0, 100.0));

        let pred = corpus(vec![(vec!["a", "b", "c"], vec![b("PER"), b("ORG"), O])]);
        let r = score(&gold, &pred).unwrap();
        assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (50.0, 50.0, 50.0));

        let empty = corpus(vec![(vec!["a", "b", "c"], vec![O, O, O])]);
        let r = score(&gold, &empty).unwrap();
        assert_eq!((r.overall.precision, r.overall.recall, r.overall.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn misaligned_corpora() {
        let a = corpus(vec![(vec!["a"], vec![O])]);
        let b2 = corpus(vec![(vec!["b"], vec![O])]);
        assert!(matches!(score(&a, &b2), Err(Error::Alignment(_))));
        let two = corpus(vec![(vec!["a"], vec![O]), (vec!["a"], vec![O])]);
        assert!(matches!(score(&a, &two), Err(Error::Alignment(_))));
    }

    #[test]
    fn rendering_has_one_decimal() {
        let gold = corpus(vec![(vec!["a", "b", "c"], vec![b("PER"), O, b("PER")])]);
        let pred = corpus(vec![(vec!["a", "b", "c"], vec![b("PER"), b("PER"), b("PER")])]);
        let text = score(&gold, &pred).unwrap().render();
        assert!(text.contains("precision:   66.7%"), "{}", text);
        assert!(text.contains("FB1:   80.0"), "{}", text);
    }
}

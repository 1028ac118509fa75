use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{Featurizer, Instance, Source};
use crate::corpus::{io_to_iob2, Corpus, CorpusRole, Sentence, Tag};
use crate::error::{Error, Result};
use crate::noise::{noisy_distribution, row_softmax, ConfusionModel, Route};

/// Window feedforward tagger: `softmax(u tanh(w1 x + b1) + b_out)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggerModel {
    /// `hidden x input`.
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `k x hidden`.
    pub u: Array2<f64>,
    pub b_out: Array1<f64>,
    pub window: usize,
}

impl TaggerModel {
    pub fn zeros(input_dim: usize, hidden: usize, k: usize, window: usize) -> Self {
        TaggerModel {
            w1: Array2::zeros((hidden, input_dim)),
            b1: Array1::zeros(hidden),
            u: Array2::zeros((k, hidden)),
            b_out: Array1::zeros(k),
            window,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(input_dim: usize, hidden: usize, k: usize, window: usize, rng: &mut R) -> Self {
        let mut m = TaggerModel::zeros(input_dim, hidden, k, window);
        let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let a1 = glorot(input_dim, hidden);
        m.w1.mapv_inplace(|_| rng.random_range(-a1..=a1));
        let a2 = glorot(hidden, k);
        m.u.mapv_inplace(|_| rng.random_range(-a2..=a2));
        m
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn k(&self) -> usize {
        self.u.nrows()
    }

    pub fn check(&self) -> Result<()> {
        let h = self.hidden();
        let shapes = [
            (self.b1.len(), h),
            (self.u.ncols(), h),
            (self.b_out.len(), self.k()),
        ];
        if let Some(&(actual, expected)) = shapes.iter().find(|(a, e)| a != e) {
            return Err(Error::Shape { expected, actual });
        }
        let finite = self.w1.iter().chain(&self.b1).chain(&self.u).chain(&self.b_out).all(|x| x.is_finite());
        if !finite {
            return Err(Error::Numerical("tagger parameters are not finite".into()));
        }
        Ok(())
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.u.as_slice_mut().expect("standard layout"),
            self.b_out.as_slice_mut().expect("standard layout"),
        ]
    }

    fn hidden_of(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (self.w1.dot(&x) + &self.b1).mapv(f64::tanh)
    }

    /// `p(y | x)` for a single feature vector.
    pub fn forward_clean(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let h = self.hidden_of(ArrayView1::from(x));
        let z = self.u.dot(&h) + &self.b_out;
        Ok(softmax(z.as_slice().expect("contiguous")))
    }

    /// `p(noisy | x)` through the instance's effective confusion matrix.
    pub fn forward_noisy(&self, cm: &ConfusionModel, inst: &Instance) -> Result<Vec<f64>> {
        if cm.k() != self.k() {
            return Err(Error::Shape {
                expected: self.k(),
                actual: cm.k(),
            });
        }
        let clean = self.forward_clean(&inst.feature)?;
        Ok(noisy_distribution(&clean, &cm.effective_matrix(inst.group)))
    }

    /// Row-wise clean probabilities for a `n x input` matrix.
    pub fn forward_rows(&self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let hidden = (x.dot(&self.w1.t()) + &self.b1).mapv(f64::tanh);
        let logits = hidden.dot(&self.u.t()) + &self.b_out;
        (hidden, row_softmax(&logits))
    }

    /// Most probable IO label per token.
    pub fn predict_io<S: AsRef<str>>(&self, featurizer: &Featurizer, tokens: &[S]) -> Vec<Tag> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let (_, probs) = self.forward_rows(&featurizer.sentence_matrix(tokens));
        probs
            .rows()
            .into_iter()
            .map(|row| {
                let best = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (i, &p)| if p > b.1 { (i, p) } else { b });
                featurizer.tagset.tag(best.0)
            })
            .collect()
    }

    /// Tag every sentence; output tags are IOB2.
    pub fn predict_corpus(&self, featurizer: &Featurizer, corpus: &Corpus) -> Corpus {
        let sentences = corpus
            .sentences
            .iter()
            .map(|s| Sentence {
                tokens: s.tokens.clone(),
                tags: Some(io_to_iob2(&self.predict_io(featurizer, &s.tokens))),
            })
            .collect();
        Corpus::new(CorpusRole::Test, sentences)
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Gradients of the mean batch loss.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub u: Array2<f64>,
    pub b_out: Array1<f64>,
    /// Global confusion logits; present when a confusion model was used.
    pub global: Option<Array2<f64>>,
    /// One entry per group matrix of the confusion model.
    pub groups: BTreeMap<usize, Array2<f64>>,
}

impl Gradients {
    fn zeros(model: &TaggerModel, cm: Option<&ConfusionModel>) -> Self {
        let k = model.k();
        Gradients {
            w1: Array2::zeros(model.w1.raw_dim()),
            b1: Array1::zeros(model.b1.len()),
            u: Array2::zeros(model.u.raw_dim()),
            b_out: Array1::zeros(k),
            global: cm.map(|_| Array2::zeros((k, k))),
            groups: cm
                .map(|c| c.groups.keys().map(|&g| (g, Array2::zeros((k, k)))).collect())
                .unwrap_or_default(),
        }
    }

    pub(crate) fn network(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.u.as_slice().expect("standard layout"),
            self.b_out.as_slice().expect("standard layout"),
        ]
    }
}

/// A mini-batch in matrix form.
#[derive(Clone, Debug)]
pub struct Batch {
    pub x: Array2<f64>,
    pub targets: Vec<usize>,
    pub sources: Vec<Source>,
    pub groups: Vec<usize>,
}

impl Batch {
    pub fn from_instances(instances: &[Instance]) -> Result<Self> {
        let first = instances
            .first()
            .ok_or_else(|| Error::Config("a batch needs at least one instance".into()))?;
        let dim = first.feature.len();
        let mut flat = Vec::with_capacity(instances.len() * dim);
        for inst in instances {
            if inst.feature.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    actual: inst.feature.len(),
                });
            }
            flat.extend_from_slice(&inst.feature);
        }
        Ok(Batch {
            x: Array2::from_shape_vec((instances.len(), dim), flat).expect("checked length"),
            targets: instances.iter().map(|i| i.target).collect(),
            sources: instances.iter().map(|i| i.source).collect(),
            groups: instances.iter().map(|i| i.group).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Mean negative log-likelihood of a batch and its gradients.
///
/// Clean instances are scored by the clean head. Noisy instances go
/// through the confusion model when one is given, otherwise through the
/// clean head as well.
pub fn loss_and_grads(model: &TaggerModel, cm: Option<&ConfusionModel>, instances: &[Instance]) -> Result<(f64, Gradients)> {
    batch_loss_and_grads(model, cm, &Batch::from_instances(instances)?)
}

pub fn batch_loss_and_grads(model: &TaggerModel, cm: Option<&ConfusionModel>, batch: &Batch) -> Result<(f64, Gradients)> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::Config("a batch needs at least one instance".into()));
    }
    if batch.x.ncols() != model.input_dim() {
        return Err(Error::Shape {
            expected: model.input_dim(),
            actual: batch.x.ncols(),
        });
    }
    let k = model.k();
    if let Some(c) = cm {
        if c.k() != k {
            return Err(Error::Shape { expected: k, actual: c.k() });
        }
    }

    let (hidden, probs) = model.forward_rows(&batch.x);

    // Row-stochastic matrices, and their mixtures for each routed group.
    let global_s = cm.map(|c| c.global.probabilities());
    let group_s: BTreeMap<usize, Array2<f64>> = cm
        .map(|c| c.groups.iter().map(|(&g, l)| (g, l.probabilities())).collect())
        .unwrap_or_default();
    let mut mixed: BTreeMap<usize, Array2<f64>> = BTreeMap::new();

    let mut grads = Gradients::zeros(model, cm);
    let mut d_global_s = Array2::<f64>::zeros((k, k));
    let mut d_group_s: BTreeMap<usize, Array2<f64>> = group_s.keys().map(|&g| (g, Array2::zeros((k, k)))).collect();

    let mut d_logits = Array2::<f64>::zeros((n, k));
    let mut total = 0.0;
    for r in 0..n {
        let p = probs.row(r);
        let t = batch.targets[r];
        if t >= k {
            return Err(Error::Config(format!("target index {} out of range for k = {}", t, k)));
        }
        let mut dz = d_logits.row_mut(r);
        let through_noise = batch.sources[r] == Source::Noisy && cm.is_some();
        if !through_noise {
            total -= p[t].ln();
            dz.assign(&p);
            dz[t] -= 1.0;
            continue;
        }

        let c = cm.expect("checked above");
        let route = c.route(batch.groups[r]);
        let global = global_s.as_ref().expect("cm present");
        let mat = match route {
            Route::Global => global,
            Route::Mixed { group, lambda } => &*mixed
                .entry(group)
                .or_insert_with(|| &group_s[&group] * (1.0 - lambda) + global * lambda),
        };
        let col = mat.column(t);
        let q = p.dot(&col);
        total -= q.ln();
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Numerical(format!(
                "noisy likelihood {} for batch row {} (target {}, group {}) of {}",
                q, r, t, batch.groups[r], n
            )));
        }
        for i in 0..k {
            dz[i] = p[i] * (1.0 - col[i] / q);
        }
        // d loss / d mat[i][t] = -p_i / q
        let push = |ds: &mut Array2<f64>, scale: f64| {
            for i in 0..k {
                ds[[i, t]] -= scale * p[i] / q;
            }
        };
        match route {
            Route::Global => push(&mut d_global_s, 1.0),
            Route::Mixed { group, lambda } => {
                push(d_group_s.get_mut(&group).expect("group present"), 1.0 - lambda);
                push(&mut d_global_s, lambda);
            }
        }
    }

    let loss = total / n as f64;
    if !loss.is_finite() {
        let worst = probs
            .rows()
            .into_iter()
            .zip(&batch.targets)
            .map(|(p, &t)| p[t])
            .fold(f64::INFINITY, f64::min);
        return Err(Error::Numerical(format!(
            "batch loss is {} over {} instances (smallest target probability {})",
            loss, n, worst
        )));
    }

    let inv_n = 1.0 / n as f64;
    d_logits *= inv_n;
    grads.u = d_logits.t().dot(&hidden);
    grads.b_out = d_logits.sum_axis(Axis(0));
    let d_hidden = d_logits.dot(&model.u) * hidden.mapv(|h| 1.0 - h * h);
    grads.w1 = d_hidden.t().dot(&batch.x);
    grads.b1 = d_hidden.sum_axis(Axis(0));

    if let Some(gs) = &global_s {
        grads.global = Some(softmax_backward(gs, &(d_global_s * inv_n)));
        for (g, ds) in d_group_s {
            grads.groups.insert(g, softmax_backward(&group_s[&g], &(ds * inv_n)));
        }
    }
    Ok((loss, grads))
}

/// Gradient w.r.t. logits of a row softmax `s`, given the gradient `ds`
/// w.r.t. `s`: `s_ij (ds_ij - sum_l s_il ds_il)`.
fn softmax_backward(s: &Array2<f64>, ds: &Array2<f64>) -> Array2<f64> {
    let mut out = s * ds;
    for (mut row, srow) in out.rows_mut().into_iter().zip(s.rows()) {
        let inner: f64 = row.sum();
        row.zip_mut_with(&srow, |o, &sv| *o -= sv * inner);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::ConfusionLogits;
    use ndarray::array;

    fn inst(feature: Vec<f64>, target: usize, source: Source, group: usize) -> Instance {
        Instance {
            center_word: "w".into(),
            feature,
            target,
            source,
            group,
        }
    }

    #[test]
    fn zero_weights_uniform() {
        let m = TaggerModel::zeros(3, 4, 5, 0);
        let p = m.forward_clean(&[1.0, -2.0, 0.5]).unwrap();
        assert!(p.iter().all(|&x| (x - 0.2).abs() < 1e-15));
        assert!(matches!(m.forward_clean(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn output_bias_dominates() {
        let mut m = TaggerModel::zeros(2, 2, 3, 0);
        m.b_out[1] = 40.0;
        let p = m.forward_clean(&[0.3, 0.1]).unwrap();
        assert!(p[1] > 1.0 - 1e-12);
    }

    #[test]
    fn tiny_model_by_hand() {
        let m = TaggerModel {
            w1: array![[1.0, 0.0], [0.5, -1.0]],
            b1: array![0.0, 0.25],
            u: array![[1.0, -1.0], [0.0, 2.0]],
            b_out: array![0.1, 0.0],
            window: 0,
        };
        let x = [0.4, 0.2];
        let h = [(0.4f64).tanh(), (0.2 - 0.2 + 0.25f64).tanh()];
        let z = [h[0] - h[1] + 0.1, 2.0 * h[1]];
        let e = [z[0].exp(), z[1].exp()];
        let want = [e[0] / (e[0] + e[1]), e[1] / (e[0] + e[1])];
        let got = m.forward_clean(&x).unwrap();
        assert!((got[0] - want[0]).abs() < 1e-14);
        assert!((got[1] - want[1]).abs() < 1e-14);
    }

    #[test]
    fn identity_noise_matches_clean() {
        let mut rng = rand::rng();
        let m = TaggerModel::init(4, 3, 2, 0, &mut rng);
        let cm = ConfusionModel::global(ConfusionLogits(array![[800.0, 0.0], [0.0, 800.0]]));
        let i = inst(vec![0.1, 0.2, -0.3, 0.9], 0, Source::Noisy, 0);
        let clean = m.forward_clean(&i.feature).unwrap();
        let noisy = m.forward_noisy(&cm, &i).unwrap();
        assert!(clean.iter().zip(&noisy).all(|(a, b)| (a - b).abs() < 1e-12));

        let uniform = ConfusionModel::global(ConfusionLogits::zeros(2));
        let u = m.forward_noisy(&uniform, &i).unwrap();
        assert!(u.iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn composed_hand_example() {
        // b_out chosen so the clean head outputs (0.7, 0.3).
        let mut m = TaggerModel::zeros(1, 1, 2, 0);
        m.b_out = array![(0.7f64).ln(), (0.3f64).ln()];
        let cm = ConfusionModel::global(ConfusionLogits(array![
            [0.9f64.ln(), 0.1f64.ln()],
            [0.2f64.ln(), 0.8f64.ln()]
        ]));
        let out = m.forward_noisy(&cm, &inst(vec![0.0], 0, Source::Noisy, 0)).unwrap();
        assert!((out[0] - 0.69).abs() < 1e-12);
        assert!((out[1] - 0.31).abs() < 1e-12);
    }

    #[test]
    fn confident_model_has_near_zero_loss() {
        let mut m = TaggerModel::zeros(1, 1, 3, 0);
        m.b_out = array![0.0, 30.0, 0.0];
        let batch = vec![inst(vec![0.0], 1, Source::Clean, 0); 4];
        let (loss, _) = loss_and_grads(&m, None, &batch).unwrap();
        assert!(loss < 1e-9);
    }

    #[test]
    fn duplicated_batch_same_mean() {
        let mut rng = rand::rng();
        let m = TaggerModel::init(2, 3, 3, 0, &mut rng);
        let cm = ConfusionModel::global(ConfusionLogits(array![[1.0, 0.0, 0.2], [0.0, 2.0, 0.0], [0.5, 0.1, 1.0]]));
        let batch = vec![
            inst(vec![0.3, -0.1], 0, Source::Clean, 0),
            inst(vec![0.7, 0.4], 2, Source::Noisy, 0),
        ];
        let twice: Vec<Instance> = batch.iter().chain(&batch).cloned().collect();
        let (l1, g1) = loss_and_grads(&m, Some(&cm), &batch).unwrap();
        let (l2, g2) = loss_and_grads(&m, Some(&cm), &twice).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        assert!((&g1.w1 - &g2.w1).iter().all(|d| d.abs() < 1e-14));
        let (a, b) = (g1.global.unwrap(), g2.global.unwrap());
        assert!((&a - &b).iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn empty_batch_rejected() {
        let m = TaggerModel::zeros(1, 1, 2, 0);
        assert!(loss_and_grads(&m, None, &[]).is_err());
    }
}

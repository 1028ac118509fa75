//! Confusion matrices between clean and noisy labels.
//!
//! A noise layer is a `k x k` logit matrix `b`; its row softmax gives
//! `p(noisy = j | clean = i)`. Multiplying a clean label distribution by
//! that matrix yields the distribution over noisy labels.
//!
//! The global model keeps one matrix for every instance. The cluster
//! models keep one matrix per word cluster (optionally only for the most
//! frequent clusters) and may interpolate each with the global matrix:
//!
//! ```text
//! p_int(j | i, g) = (1 - lambda) * p(j | i, g) + lambda * p(j | i)
//! ```
//!
//! Logits are initialized from counts of (clean, noisy) label pairs,
//! obtained by running the distant annotator over the clean data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::clustering::WordClustering;
use crate::corpus::TagSet;
use crate::distant::LabeledPair;
use crate::error::{Error, Result};

pub const EXPORT_VERSION: u32 = 1;

/// Count-based logits `b[i][j]` with additive smoothing `alpha`:
/// `ln((count(i, j) + alpha) / (count(i) + k * alpha))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionLogits(pub Array2<f64>);

impl ConfusionLogits {
    pub fn zeros(k: usize) -> Self {
        ConfusionLogits(Array2::zeros((k, k)))
    }

    /// `strength` on the diagonal, zero elsewhere.
    pub fn identity(k: usize, strength: f64) -> Self {
        ConfusionLogits(Array2::from_diag_elem(k, strength))
    }

    pub fn k(&self) -> usize {
        self.0.nrows()
    }

    pub fn probabilities(&self) -> Array2<f64> {
        row_softmax(&self.0)
    }
}

pub fn init_logits(pairs: &[LabeledPair], tagset: &TagSet, alpha: f64) -> Result<ConfusionLogits> {
    let indexed = index_pairs(pairs, tagset)?;
    init_logits_indexed(indexed.iter().copied(), tagset.len(), alpha)
}

pub(crate) fn index_pairs(pairs: &[LabeledPair], tagset: &TagSet) -> Result<Vec<(usize, usize)>> {
    pairs
        .iter()
        .map(|p| {
            let c = tagset.index(&p.clean);
            let n = tagset.index(&p.noisy);
            match (c, n) {
                (Some(c), Some(n)) => Ok((c, n)),
                _ => Err(Error::Config(format!(
                    "label pair ({}, {}) for '{}' is outside the tag set",
                    p.clean, p.noisy, p.word
                ))),
            }
        })
        .collect()
}

/// Logits from `(clean index, noisy index)` pairs.
pub fn init_logits_indexed<I>(pairs: I, k: usize, alpha: f64) -> Result<ConfusionLogits>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("smoothing must be positive, got {}", alpha)));
    }
    let mut counts = Array2::<f64>::zeros((k, k));
    for (c, n) in pairs {
        if c >= k || n >= k {
            return Err(Error::Config(format!("label index out of range for k = {}", k)));
        }
        counts[[c, n]] += 1.0;
    }
    let mut logits = Array2::zeros((k, k));
    for i in 0..k {
        let row_total: f64 = counts.row(i).sum();
        let denom = row_total + k as f64 * alpha;
        for j in 0..k {
            logits[[i, j]] = ((counts[[i, j]] + alpha) / denom).ln();
        }
    }
    Ok(ConfusionLogits(logits))
}

/// Softmax of every row, shifted by the row maximum.
pub fn row_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// `p(noisy = j) = sum_i mat[i][j] * clean[i]`.
pub fn noisy_distribution(clean: &[f64], mat: &Array2<f64>) -> Vec<f64> {
    let k = mat.ncols();
    let mut out = vec![0.0; k];
    for (i, &ci) in clean.iter().enumerate() {
        for (o, &m) in out.iter_mut().zip(mat.row(i)) {
            *o += m * ci;
        }
    }
    out
}

/// Ids of the `ceil(fraction * num_clusters)` clusters with the most
/// instances; ties go to the lower id.
pub fn select_frequent(group_sizes: &BTreeMap<usize, usize>, num_clusters: usize, fraction: f64) -> Result<BTreeSet<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("selection fraction must lie in (0, 1], got {}", fraction)));
    }
    // The small offset keeps exact products such as 0.3 * 10 from rounding up.
    let take = ((fraction * num_clusters as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut ids: Vec<usize> = (0..num_clusters).collect();
    ids.sort_by(|a, b| {
        let sa = group_sizes.get(a).copied().unwrap_or(0);
        let sb = group_sizes.get(b).copied().unwrap_or(0);
        sb.cmp(&sa).then(a.cmp(b))
    });
    Ok(ids.into_iter().take(take.min(num_clusters)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    Global,
    GlobalIdentity,
    Cluster,
    ClusterFreq,
    ClusterIp,
    ClusterFreqIp,
}

impl NoiseMode {
    pub fn is_cluster(self) -> bool {
        !matches!(self, NoiseMode::Global | NoiseMode::GlobalIdentity)
    }

    pub fn uses_selection(self) -> bool {
        matches!(self, NoiseMode::ClusterFreq | NoiseMode::ClusterFreqIp)
    }

    pub fn uses_interpolation(self) -> bool {
        matches!(self, NoiseMode::ClusterIp | NoiseMode::ClusterFreqIp)
    }

    pub const ALL: [NoiseMode; 6] = [
        NoiseMode::Global,
        NoiseMode::GlobalIdentity,
        NoiseMode::Cluster,
        NoiseMode::ClusterFreq,
        NoiseMode::ClusterIp,
        NoiseMode::ClusterFreqIp,
    ];
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMode::Global => "global",
            NoiseMode::GlobalIdentity => "global-identity",
            NoiseMode::Cluster => "cluster",
            NoiseMode::ClusterFreq => "cluster-freq",
            NoiseMode::ClusterIp => "cluster-ip",
            NoiseMode::ClusterFreqIp => "cluster-freq-ip",
        })
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseMode::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown noise mode '{}'", s)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    /// Interpolation weight of the global matrix (`-ip` modes only).
    pub lambda: Option<f64>,
    /// Share of clusters that get their own matrix (`-freq` modes only).
    pub fraction: Option<f64>,
    pub alpha: f64,
    /// Groups with fewer clean pairs than this use the global matrix.
    pub min_pairs: usize,
    /// Diagonal logit for identity initialization.
    pub identity_strength: f64,
}

impl NoiseConfig {
    pub fn new(mode: NoiseMode) -> Self {
        NoiseConfig {
            mode,
            lambda: None,
            fraction: None,
            alpha: 1e-6,
            min_pairs: 5,
            identity_strength: 6.0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction = Some(fraction);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.mode;
        match (mode.uses_interpolation(), self.lambda) {
            (true, None) => return Err(Error::Config(format!("mode {} needs lambda", mode))),
            (false, Some(_)) => return Err(Error::Config(format!("mode {} takes no lambda", mode))),
            (true, Some(l)) if !(0.0..=1.0).contains(&l) => {
                return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", l)))
            }
            _ => {}
        }
        match (mode.uses_selection(), self.fraction) {
            (true, None) => return Err(Error::Config(format!("mode {} needs a selection fraction", mode))),
            (false, Some(_)) => return Err(Error::Config(format!("mode {} takes no selection fraction", mode))),
            (true, Some(f)) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::Config(format!("selection fraction must lie in (0, 1], got {}", f)))
            }
            _ => {}
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config("smoothing alpha must be positive".into()));
        }
        Ok(())
    }
}

/// How a noisy instance's confusion matrix is assembled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Route {
    Global,
    /// `(1 - lambda) * group + lambda * global`.
    Mixed { group: usize, lambda: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionModel {
    pub mode: NoiseMode,
    pub lambda: f64,
    pub global: ConfusionLogits,
    pub groups: BTreeMap<usize, ConfusionLogits>,
    pub selected: BTreeSet<usize>,
}

impl ConfusionModel {
    /// A global-only model from given logits.
    pub fn global(logits: ConfusionLogits) -> Self {
        ConfusionModel {
            mode: NoiseMode::Global,
            lambda: 1.0,
            global: logits,
            groups: BTreeMap::new(),
            selected: BTreeSet::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.global.k()
    }

    pub fn route(&self, group: usize) -> Route {
        match self.groups.contains_key(&group) {
            true => Route::Mixed {
                group,
                lambda: self.lambda,
            },
            false => Route::Global,
        }
    }

    /// The row-stochastic matrix applied to instances of `group`.
    pub fn effective_matrix(&self, group: usize) -> Array2<f64> {
        let global = self.global.probabilities();
        match self.route(group) {
            Route::Global => global,
            Route::Mixed { group, lambda } => {
                let local = self.groups[&group].probabilities();
                local * (1.0 - lambda) + global * lambda
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if !self.mode.is_cluster() && !self.groups.is_empty() {
            return Err(Error::Config(format!("mode {} cannot carry group matrices", self.mode)));
        }
        if let Some(g) = self.groups.keys().find(|g| !self.selected.contains(g)) {
            return Err(Error::Config(format!("group {} has a matrix but is not selected", g)));
        }
        let k = self.k();
        for m in std::iter::once(&self.global).chain(self.groups.values()) {
            if m.0.dim() != (k, k) {
                return Err(Error::Shape {
                    expected: k * k,
                    actual: m.0.len(),
                });
            }
            if m.0.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numerical("confusion logits must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn to_export(&self, tagset: &TagSet) -> ModelExport {
        let dump = |l: &ConfusionLogits| l.0.rows().into_iter().map(|r| r.to_vec()).collect();
        ModelExport {
            version: EXPORT_VERSION,
            tags: tagset.tags().map(|t| t.to_string()).collect(),
            mode: self.mode,
            lambda: self.lambda,
            selected: self.selected.iter().copied().collect(),
            global: dump(&self.global),
            groups: self.groups.iter().map(|(g, l)| (*g, dump(l))).collect(),
        }
    }

    pub fn from_export(export: &ModelExport) -> Result<(Self, TagSet)> {
        if export.version != EXPORT_VERSION {
            return Err(Error::Config(format!(
                "unsupported confusion model version {}",
                export.version
            )));
        }
        let types: Vec<&str> = export
            .tags
            .iter()
            .skip(1)
            .map(|t| t.strip_prefix("I-").unwrap_or(t))
            .collect();
        let tagset = TagSet::new(&types)?;
        let k = tagset.len();
        let load = |rows: &Vec<Vec<f64>>| -> Result<ConfusionLogits> {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(Error::Shape {
                    expected: k * k,
                    actual: rows.iter().map(Vec::len).sum(),
                });
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            Ok(ConfusionLogits(
                Array2::from_shape_vec((k, k), flat).expect("checked shape"),
            ))
        };
        let model = ConfusionModel {
            mode: export.mode,
            lambda: export.lambda,
            global: load(&export.global)?,
            groups: export
                .groups
                .iter()
                .map(|(g, rows)| Ok((*g, load(rows)?)))
                .collect::<Result<_>>()?,
            selected: export.selected.iter().copied().collect(),
        };
        model.check()?;
        Ok((model, tagset))
    }

    pub fn to_json(&self, tagset: &TagSet) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_export(tagset))?)
    }

    pub fn from_json(text: &str) -> Result<(Self, TagSet)> {
        let export: ModelExport = serde_json::from_str(text)?;
        ConfusionModel::from_export(&export)
    }
}

/// Versioned JSON form of a [`ConfusionModel`]; matrices are row-major logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub version: u32,
    pub tags: Vec<String>,
    pub mode: NoiseMode,
    pub lambda: f64,
    pub selected: Vec<usize>,
    pub global: Vec<Vec<f64>>,
    pub groups: BTreeMap<usize, Vec<Vec<f64>>>,
}

/// Build a confusion model from clean-data label pairs. `group_sizes`
/// counts instances per cluster over clean and noisy data and drives the
/// `-freq` selection.
pub fn build_model(
    pairs: &[LabeledPair],
    clustering: Option<&WordClustering>,
    group_sizes: &BTreeMap<usize, usize>,
    config: &NoiseConfig,
    tagset: &TagSet,
) -> Result<ConfusionModel> {
    config.validate()?;
    let k = tagset.len();
    let indexed = index_pairs(pairs, tagset)?;

    let global = match config.mode {
        NoiseMode::GlobalIdentity => ConfusionLogits::identity(k, config.identity_strength),
        _ => init_logits_indexed(indexed.iter().copied(), k, config.alpha)?,
    };
    let mut model = ConfusionModel {
        mode: config.mode,
        lambda: config.lambda.unwrap_or(0.0),
        global,
        groups: BTreeMap::new(),
        selected: BTreeSet::new(),
    };
    if !config.mode.is_cluster() {
        model.lambda = 1.0;
        return Ok(model);
    }

    let clustering = clustering
        .ok_or_else(|| Error::Config(format!("mode {} needs a word clustering", config.mode)))?;
    let p = clustering.num_clusters();
    let candidates: BTreeSet<usize> = match config.fraction {
        Some(f) => select_frequent(group_sizes, p, f)?,
        None => (0..p).collect(),
    };

    let mut by_group: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (pair, idx) in pairs.iter().zip(&indexed) {
        let g = clustering.assign(&pair.word);
        if candidates.contains(&g) {
            by_group.entry(g).or_default().push(*idx);
        }
    }
    for (g, group_pairs) in by_group {
        if group_pairs.len() < config.min_pairs {
            log::debug!("group {} has {} pairs, using the global matrix", g, group_pairs.len());
            continue;
        }
        model.groups.insert(g, init_logits_indexed(group_pairs, k, config.alpha)?);
        model.selected.insert(g);
    }
    Ok(model)
}

/// Text heat map of a row-stochastic matrix, one shade character per cell.
pub fn render_heatmap(title: &str, mat: &Array2<f64>, tagset: &TagSet) -> String {
    const SHADES: [char; 5] = [' ', '.', ':', '*', '#'];
    let labels: Vec<String> = tagset.tags().map(|t| t.to_string()).collect();
    let width = labels.iter().map(String::len).max().unwrap_or(1).max(6);
    let mut out = format!("{}\n{:>w$} ", title, "", w = width);
    for l in &labels {
        out.push_str(&format!("{:>w$} ", l, w = width));
    }
    out.push('\n');
    for (i, row) in mat.rows().into_iter().enumerate() {
        out.push_str(&format!("{:>w$} ", labels[i], w = width));
        for &p in row {
            let shade = SHADES[((p * (SHADES.len() - 1) as f64).round() as usize).min(SHADES.len() - 1)];
            out.push_str(&format!("{:>w$} ", format!("{}{:.2}", shade, p), w = width));
        }
        out.push('\n');
    }
    out
}

/// Sum of each row, for invariant checks.
pub fn row_sums(mat: &Array2<f64>) -> Array1<f64> {
    mat.sum_axis(ndarray::Axis(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tag;
    use ndarray::array;

    fn pair(word: &str, clean: Tag, noisy: Tag) -> LabeledPair {
        LabeledPair {
            word: word.into(),
            clean,
            noisy,
        }
    }

    fn per() -> Tag {
        Tag::inside("PER")
    }

    #[test]
    fn count_initialization_limit() {
        let ts = TagSet::conll();
        let mut pairs = vec![pair("x", per(), per()); 6];
        pairs.extend(vec![pair("x", per(), Tag::Outside); 4]);
        let l = init_logits(&pairs, &ts, 1e-12).unwrap();
        let p = ts.index(&per()).unwrap();
        assert!((l.0[[p, p]] - 0.6f64.ln()).abs() < 1e-9);
        assert!((l.0[[p, 0]] - 0.4f64.ln()).abs() < 1e-9);
        let probs = l.probabilities();
        assert!((probs[[p, p]] - 0.6).abs() < 1e-9);
        assert!((probs[[p, 0]] - 0.4).abs() < 1e-9);
    }

    #[test]
    fn empty_pairs_give_uniform_rows() {
        let ts = TagSet::conll();
        let l = init_logits(&[], &ts, 1e-6).unwrap();
        let u = (1.0 / 5.0f64).ln();
        assert!(l.0.iter().all(|&x| (x - u).abs() < 1e-12));
    }

    #[test]
    fn smoothed_single_row() {
        // Three LOC->LOC pairs with alpha = 1e-6 and k = 5:
        // diagonal (3 + a) / (3 + 5a), off-diagonal a / (3 + 5a).
        let ts = TagSet::conll();
        let loc = Tag::inside("LOC");
        let pairs = vec![pair("Rome", loc.clone(), loc.clone()); 3];
        let alpha = 1e-6;
        let l = init_logits(&pairs, &ts, alpha).unwrap();
        let p = l.probabilities();
        let i = ts.index(&loc).unwrap();
        let denom = 3.0 + 5.0 * alpha;
        assert!((p[[i, i]] - (3.0 + alpha) / denom).abs() < 1e-12);
        assert!((p[[i, i]] - (1.0 - 4.0 * alpha / 3.0)).abs() < 1e-11);
        for j in (0..5).filter(|&j| j != i) {
            assert!((p[[i, j]] - alpha / denom).abs() < 1e-15);
            assert!((p[[i, j]] - alpha / 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn invalid_alpha() {
        assert!(init_logits(&[], &TagSet::conll(), 0.0).is_err());
    }

    #[test]
    fn softmax_examples() {
        let z = row_softmax(&Array2::zeros((3, 3)));
        assert!(z.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));

        let l = array![[0.6f64.ln(), 0.4f64.ln()], [0.0, 0.0]];
        let p = row_softmax(&l);
        assert!((p[[0, 0]] - 0.6).abs() < 1e-15);
        assert!((p[[0, 1]] - 0.4).abs() < 1e-15);

        let shifted = array![[0.6f64.ln() + 7.5, 0.4f64.ln() + 7.5], [0.0, 0.0]];
        let q = row_softmax(&shifted);
        assert!((&p - &q).iter().all(|d| d.abs() < 1e-15));

        let huge = row_softmax(&array![[1000.0, 0.0]]);
        assert!((huge[[0, 0]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noisy_distribution_examples() {
        let clean = [0.7, 0.3];
        let id = Array2::<f64>::eye(2);
        assert_eq!(noisy_distribution(&clean, &id), vec![0.7, 0.3]);
        let uniform = Array2::from_elem((2, 2), 0.5);
        assert_eq!(noisy_distribution(&clean, &uniform), vec![0.5, 0.5]);
        let m = array![[0.9, 0.1], [0.2, 0.8]];
        let out = noisy_distribution(&clean, &m);
        assert!((out[0] - 0.69).abs() < 1e-12);
        assert!((out[1] - 0.31).abs() < 1e-12);
    }

    #[test]
    fn frequent_selection() {
        let sizes: BTreeMap<usize, usize> = [50, 30, 10, 5, 3, 1, 1, 1, 1, 1].into_iter().enumerate().collect();
        let top = select_frequent(&sizes, 10, 0.3).unwrap();
        assert_eq!(top, [0, 1, 2].into_iter().collect());
        assert_eq!(select_frequent(&sizes, 10, 1.0).unwrap().len(), 10);

        let tied: BTreeMap<usize, usize> = [(0, 9), (1, 5), (2, 5), (3, 1)].into_iter().collect();
        assert_eq!(select_frequent(&tied, 4, 0.5).unwrap(), [0, 1].into_iter().collect());
        assert!(select_frequent(&tied, 4, 0.0).is_err());
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let group = ConfusionLogits(array![[50.0, 0.0], [0.0, 50.0]]);
        let global = ConfusionLogits(array![[0.6f64.ln(), 0.4f64.ln()], [0.4f64.ln(), 0.6f64.ln()]]);
        let mut m = ConfusionModel {
            mode: NoiseMode::ClusterIp,
            lambda: 0.5,
            global: global.clone(),
            groups: [(0, group)].into_iter().collect(),
            selected: [0].into_iter().collect(),
        };
        let mid = m.effective_matrix(0);
        let want = array![[0.8, 0.2], [0.2, 0.8]];
        assert!((&mid - &want).iter().all(|d| d.abs() < 1e-12));

        m.lambda = 1.0;
        assert_eq!(m.effective_matrix(0), global.probabilities());
        m.lambda = 0.0;
        assert_eq!(m.effective_matrix(0), m.groups[&0].probabilities());
        // unselected and OOV groups use the global matrix
        assert_eq!(m.effective_matrix(7), global.probabilities());
    }

    fn clustering() -> WordClustering {
        let map = [("a", 0), ("b", 1)].into_iter().map(|(w, i)| (w.to_string(), i)).collect();
        WordClustering::new(map, 2).unwrap()
    }

    #[test]
    fn parameter_validation() {
        let ts = TagSet::conll();
        let sizes = BTreeMap::new();
        let c = clustering();
        let bad = NoiseConfig::new(NoiseMode::Global).with_lambda(0.5);
        assert!(matches!(build_model(&[], Some(&c), &sizes, &bad, &ts), Err(Error::Config(_))));
        let bad = NoiseConfig::new(NoiseMode::ClusterIp);
        assert!(build_model(&[], Some(&c), &sizes, &bad, &ts).is_err());
        let bad = NoiseConfig::new(NoiseMode::ClusterFreq);
        assert!(build_model(&[], Some(&c), &sizes, &bad, &ts).is_err());
        let bad = NoiseConfig::new(NoiseMode::ClusterIp).with_lambda(1.5);
        assert!(build_model(&[], Some(&c), &sizes, &bad, &ts).is_err());
        let bad = NoiseConfig::new(NoiseMode::Cluster);
        assert!(build_model(&[], None, &sizes, &bad, &ts).is_err());
    }

    #[test]
    fn global_mode_has_no_groups() {
        let ts = TagSet::conll();
        let pairs = vec![pair("a", per(), per()); 10];
        let m = build_model(&pairs, Some(&clustering()), &BTreeMap::new(), &NoiseConfig::new(NoiseMode::Global), &ts)
            .unwrap();
        assert!(m.groups.is_empty());
        assert_eq!(m.effective_matrix(0), m.effective_matrix(1));
        m.check().unwrap();
    }

    #[test]
    fn identity_initialization() {
        let ts = TagSet::new(&["PER"]).unwrap();
        let m = build_model(&[], None, &BTreeMap::new(), &NoiseConfig::new(NoiseMode::GlobalIdentity), &ts).unwrap();
        let p = m.effective_matrix(0);
        // e^6 / (e^6 + 1)
        let d = 6f64.exp() / (6f64.exp() + 1.0);
        assert!((p[[0, 0]] - d).abs() < 1e-12);
        assert!((p[[0, 0]] - 0.9975).abs() < 1e-4);
        assert!((p[[1, 0]] - (1.0 - d)).abs() < 1e-12);
    }

    #[test]
    fn small_groups_fall_back() {
        let ts = TagSet::conll();
        let mut pairs = vec![pair("a", per(), per()); 10];
        pairs.extend(vec![pair("b", per(), Tag::Outside); 3]);
        let m = build_model(&pairs, Some(&clustering()), &BTreeMap::new(), &NoiseConfig::new(NoiseMode::Cluster), &ts)
            .unwrap();
        assert_eq!(m.selected, [0].into_iter().collect());
        assert_eq!(m.effective_matrix(1), m.global.probabilities());
    }

    #[test]
    fn full_fraction_matches_plain_cluster() {
        let ts = TagSet::conll();
        let mut pairs = vec![pair("a", per(), per()); 10];
        pairs.extend(vec![pair("b", per(), Tag::Outside); 8]);
        let sizes: BTreeMap<usize, usize> = [(0, 10), (1, 8)].into_iter().collect();
        let c = clustering();
        let plain = build_model(&pairs, Some(&c), &sizes, &NoiseConfig::new(NoiseMode::Cluster), &ts).unwrap();
        let freq = build_model(
            &pairs,
            Some(&c),
            &sizes,
            &NoiseConfig::new(NoiseMode::ClusterFreq).with_fraction(1.0),
            &ts,
        )
        .unwrap();
        assert_eq!(plain.groups, freq.groups);
        assert_eq!(plain.selected, freq.selected);
        for g in 0..3 {
            assert_eq!(plain.effective_matrix(g), freq.effective_matrix(g));
        }
    }

    #[test]
    fn json_round_trip() {
        let ts = TagSet::conll();
        let pairs = vec![pair("a", per(), per()); 10];
        let cfg = NoiseConfig::new(NoiseMode::ClusterIp).with_lambda(0.3);
        let m = build_model(&pairs, Some(&clustering()), &BTreeMap::new(), &cfg, &ts).unwrap();
        let text = m.to_json(&ts).unwrap();
        let (back, ts2) = ConfusionModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(ts2, ts);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in NoiseMode::ALL {
            assert_eq!(m.to_string().parse::<NoiseMode>().unwrap(), m);
        }
    }
}

use std::collections::{HashMap, HashSet};

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WordClustering;
use crate::embeddings::{fit_pca, EmbeddingTable, OovPolicy, PcaOptions};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct KMeansState {
    /// `p x r` centroid matrix.
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub objective: f64,
    /// Objective after every assignment step, starting with the seeding.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn count_distinct(points: ArrayView2<f64>) -> usize {
    let mut seen = HashSet::new();
    for row in points.rows() {
        seen.insert(row.iter().map(|x| x.to_bits()).collect::<Vec<u64>>());
    }
    seen.len()
}

fn objective(points: ArrayView2<f64>, centroids: &Array2<f64>, assignments: &[usize]) -> f64 {
    points
        .rows()
        .into_iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, centroids.row(a)))
        .sum()
}

fn seed_plus_plus(points: ArrayView2<f64>, p: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((p, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points
        .rows()
        .into_iter()
        .map(|x| sq_dist(x, centroids.row(0)))
        .collect();
    for j in 1..p {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // Guard against rounding at the end of the scan.
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&w| w > 0.0).expect("total > 0");
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(j).assign(&points.row(pick));
        for (i, x) in points.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, centroids.row(j)));
        }
    }
    centroids
}

/// Recompute centroids as cluster means, then hand each empty cluster the
/// point farthest from its current centroid.
fn update_centroids(points: ArrayView2<f64>, centroids: &mut Array2<f64>, assignments: &mut [usize]) {
    let p = centroids.nrows();
    let recompute = |centroids: &mut Array2<f64>, assignments: &[usize]| {
        let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; p];
        for (x, &a) in points.rows().into_iter().zip(assignments) {
            sums.row_mut(a).scaled_add(1.0, &x);
            counts[a] += 1;
        }
        for j in 0..p {
            if counts[j] > 0 {
                let mean = &sums.row(j) / counts[j] as f64;
                centroids.row_mut(j).assign(&mean);
            }
        }
        counts
    };

    let mut counts = recompute(centroids, assignments);
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let donor = points
            .rows()
            .into_iter()
            .enumerate()
            .filter(|&(i, _)| counts[assignments[i]] > 1)
            .map(|(i, x)| (i, sq_dist(x, centroids.row(assignments[i]))))
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        let Some((i, _)) = donor else { break };
        assignments[i] = empty;
        centroids.row_mut(empty).assign(&points.row(i));
        counts = recompute(centroids, assignments);
    }
}

/// Lloyd's algorithm with k-means++ seeding on the rows of `points`.
pub fn kmeans(points: ArrayView2<f64>, p: usize, seed: u64, max_iter: usize) -> Result<KMeansState> {
    if p == 0 {
        return Err(Error::Config("k-means needs at least one cluster".into()));
    }
    let distinct = count_distinct(points);
    if distinct < p {
        return Err(Error::Config(format!(
            "k-means with {} clusters needs at least {} distinct points, got {}",
            p, p, distinct
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, p, &mut rng);
    let mut assignments: Vec<usize> = points
        .rows()
        .into_iter()
        .map(|x| nearest(x, &centroids).0)
        .collect();
    let mut obj = objective(points, &centroids, &assignments);
    let mut trace = vec![obj];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        update_centroids(points, &mut centroids, &mut assignments);
        let next: Vec<usize> = points
            .rows()
            .into_iter()
            .map(|x| nearest(x, &centroids).0)
            .collect();
        let next_obj = objective(points, &centroids, &next);
        debug_assert!(
            next_obj <= obj * (1.0 + 1e-9) + 1e-12,
            "k-means objective increased from {} to {}",
            obj,
            next_obj
        );
        trace.push(next_obj);
        obj = next_obj;
        let converged = next == assignments;
        assignments = next;
        if converged {
            break;
        }
    }

    Ok(KMeansState {
        centroids,
        assignments,
        objective: obj,
        objective_trace: trace,
        iterations,
    })
}

/// k-means over named points; `words[i]` labels row `i`.
pub fn kmeans_cluster<S: AsRef<str>>(
    words: &[S],
    points: ArrayView2<f64>,
    p: usize,
    seed: u64,
    max_iter: usize,
) -> Result<(WordClustering, KMeansState)> {
    if words.len() != points.nrows() {
        return Err(Error::Shape {
            expected: points.nrows(),
            actual: words.len(),
        });
    }
    let state = kmeans(points, p, seed, max_iter)?;
    let map: HashMap<String, usize> = words
        .iter()
        .zip(&state.assignments)
        .map(|(w, &a)| (w.as_ref().to_owned(), a))
        .collect();
    Ok((WordClustering::new(map, p)?, state))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub clusters: usize,
    /// Target PCA dimension; `None` clusters the raw vectors.
    pub pca_dim: Option<usize>,
    /// Scale vectors to unit length before PCA.
    pub normalize: bool,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            clusters: 10,
            pca_dim: Some(50),
            normalize: false,
            max_iter: 300,
            seed: 0,
        }
    }
}

/// Embed `words` (mean vector for OOV), reduce with PCA and run k-means.
pub fn cluster_embeddings<S: AsRef<str>>(
    table: &EmbeddingTable,
    words: &[S],
    config: &KMeansConfig,
) -> Result<(WordClustering, KMeansState)> {
    let mut data = table.matrix(words, OovPolicy::Mean);
    if config.normalize {
        for mut row in data.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
    let points = match config.pca_dim {
        Some(r) => {
            let max_r = data.nrows().min(data.ncols());
            let r = r.min(max_r);
            if r < config.pca_dim.unwrap_or(0) {
                log::info!("PCA dimension clamped to {}", r);
            }
            let pca = fit_pca(
                data.view(),
                r,
                &PcaOptions {
                    seed: config.seed,
                    ..Default::default()
                },
            )?;
            pca.project_rows(data.view())?
        }
        None => data,
    };
    kmeans_cluster(words, points.view(), config.clusters, config.seed, config.max_iter)
}

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PcaOptions {
    pub max_iter: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            max_iter: 1000,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

/// A fitted projection onto the top principal axes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PcaTransform {
    pub mean: Vec<f64>,
    /// `r x d`, one principal axis per row.
    pub components: Array2<f64>,
    /// Variance captured by each axis, non-increasing.
    pub explained_variance: Vec<f64>,
}

impl PcaTransform {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: v.len(),
            });
        }
        let centered: Array1<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok(self.components.dot(&centered).to_vec())
    }

    /// Map a projected vector back into the input space.
    pub fn reconstruct(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: self.output_dim(),
                actual: z.len(),
            });
        }
        let z = ArrayView1::from(z);
        let back = self.components.t().dot(&z);
        Ok(back.iter().zip(&self.mean).map(|(x, m)| x + m).collect())
    }

    /// Project every row of `data`.
    pub fn project_rows(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        if data.ncols() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: data.ncols(),
            });
        }
        let mean = ArrayView1::from(&self.mean[..]);
        let centered = &data - &mean.insert_axis(Axis(0));
        Ok(centered.dot(&self.components.t()))
    }
}

/// Fit the top `r` principal axes of the rows of `data` by power iteration
/// on the sample covariance, deflating against the axes already found.
pub fn fit_pca(data: ArrayView2<f64>, r: usize, options: &PcaOptions) -> Result<PcaTransform> {
    let (n, d) = data.dim();
    if n < 2 {
        return Err(Error::Config(format!("PCA needs at least 2 points, got {}", n)));
    }
    if r == 0 || r > n.min(d) {
        return Err(Error::Config(format!(
            "PCA target dimension {} must lie in 1..={}",
            r,
            n.min(d)
        )));
    }

    let mean = data.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &data - &mean.view().insert_axis(Axis(0));
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let scale = cov.diag().iter().sum::<f64>().max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut axes: Vec<Array1<f64>> = Vec::with_capacity(r);
    let mut variances = Vec::with_capacity(r);

    for _ in 0..r {
        let mut v: Array1<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        orthogonalize(&mut v, &axes);
        normalize(&mut v);

        for _ in 0..options.max_iter {
            let mut w = cov.dot(&v);
            orthogonalize(&mut w, &axes);
            let norm = w.dot(&w).sqrt();
            if norm <= 1e-14 * scale {
                // Remaining variance is numerically zero; any orthonormal
                // completion of the basis is an eigenvector.
                break;
            }
            w /= norm;
            let delta = (&w - &v).dot(&(&w - &v)).sqrt();
            v = w;
            if delta < options.tolerance {
                break;
            }
        }
        orthogonalize(&mut v, &axes);
        normalize(&mut v);
        variances.push(v.dot(&cov.dot(&v)));
        axes.push(v);
    }

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]));

    let mut components = Array2::zeros((r, d));
    let mut explained_variance = Vec::with_capacity(r);
    for (row, &i) in order.iter().enumerate() {
        let mut axis = axes[i].clone();
        fix_sign(&mut axis);
        components.row_mut(row).assign(&axis);
        explained_variance.push(variances[i]);
    }

    Ok(PcaTransform {
        mean: mean.to_vec(),
        components,
        explained_variance,
    })
}

// Two passes of classical Gram-Schmidt keep the basis orthonormal to
// machine precision.
fn orthogonalize(v: &mut Array1<f64>, basis: &[Array1<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = v.dot(b);
            v.scaled_add(-c, b);
        }
    }
}

fn normalize(v: &mut Array1<f64>) {
    let norm = v.dot(v).sqrt();
    if norm > 0.0 {
        *v /= norm;
    }
}

// Largest-magnitude coordinate positive.
fn fix_sign(v: &mut Array1<f64>) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

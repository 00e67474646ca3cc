//! High-dimensional affinities: exact nearest neighbors, per-point Gaussian
//! bandwidth calibration to a target perplexity, and the symmetric,
//! normalized sparse matrix `P`.

use log::warn;

use crate::dataset::DataMatrix;
use crate::{Error, Result};

/// Squared distances are floored here so that duplicate points do not
/// collapse the bandwidth search.
pub const MIN_SQ_DIST: f64 = 1e-12;

/// `k` nearest neighbors of every point, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborLists {
    n: usize,
    k: usize,
    indices: Vec<usize>,
    sq_dists: Vec<f64>,
}

impl NeighborLists {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn indices(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn sq_dists(&self, i: usize) -> &[f64] {
        &self.sq_dists[i * self.k..(i + 1) * self.k]
    }
}

/// Exact Euclidean k-nearest neighbors by full scan; distance ties go to the
/// lower index.
pub fn knn(data: &DataMatrix, k: usize) -> Result<NeighborLists> {
    let n = data.rows();
    if k == 0 || k >= n {
        return Err(Error::param(format!("k must be in 1..={}, got {k}", n - 1)));
    }
    let mut indices = Vec::with_capacity(n * k);
    let mut sq_dists = Vec::with_capacity(n * k);
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let xi = data.row(i);
        scratch.clear();
        for j in (0..n).filter(|&j| j != i) {
            let d: f64 = xi
                .iter()
                .zip(data.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            scratch.push((d, j));
        }
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scratch.len() {
            scratch.select_nth_unstable_by(k - 1, by_dist);
            scratch.truncate(k);
        }
        scratch.sort_unstable_by(by_dist);
        for &(d, j) in &scratch {
            indices.push(j);
            sq_dists.push(d);
        }
    }
    Ok(NeighborLists {
        n,
        k,
        indices,
        sq_dists,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Allowed gap between achieved and target entropy, in bits.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: 200,
        }
    }
}

/// Per-point Gaussian bandwidths for one perplexity.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub perplexity: f64,
    pub sigmas: Vec<f64>,
    /// Points whose search hit the iteration cap; their best bandwidth is kept.
    pub unconverged: Vec<usize>,
}

/// Binary search on the precision `1 / (2 sigma^2)` of every point so that the
/// base-2 entropy of `p(j|i)` over its neighbor list equals `log2(perplexity)`.
pub fn calibrate_bandwidths(
    neighbors: &NeighborLists,
    perplexity: f64,
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    if !(perplexity > 1.0) || perplexity > neighbors.k as f64 {
        return Err(Error::param(format!(
            "perplexity must be in (1, {}], got {perplexity}",
            neighbors.k
        )));
    }
    let target = perplexity.log2();
    let mut sigmas = Vec::with_capacity(neighbors.n);
    let mut unconverged = Vec::new();
    let mut shifted = vec![0.0; neighbors.k];
    for i in 0..neighbors.n {
        let d = neighbors.sq_dists(i);
        let d_min = d.iter().fold(f64::INFINITY, |m, &v| m.min(v.max(MIN_SQ_DIST)));
        for (s, &v) in shifted.iter_mut().zip(d) {
            *s = v.max(MIN_SQ_DIST) - d_min;
        }
        let mean = shifted.iter().sum::<f64>() / shifted.len() as f64;
        let mut beta = if mean > 0.0 { 1.0 / mean } else { 1.0 };
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut best = (f64::INFINITY, beta);
        let mut converged = false;
        for _ in 0..opts.max_iterations {
            let h = entropy_bits(&shifted, beta);
            let gap = h - target;
            if gap.abs() < best.0 {
                best = (gap.abs(), beta);
            }
            if gap.abs() < opts.tolerance {
                converged = true;
                break;
            }
            if gap > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (lo + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (lo + hi);
            }
        }
        if !converged {
            unconverged.push(i);
        }
        sigmas.push((0.5 / best.1).sqrt());
    }
    if !unconverged.is_empty() {
        warn!(
            "bandwidth search did not converge for {} of {} points (perplexity {perplexity})",
            unconverged.len(),
            neighbors.n
        );
    }
    Ok(Calibration {
        perplexity,
        sigmas,
        unconverged,
    })
}

/// Entropy in bits of `p_j ∝ exp(-beta * shifted_j)`.
fn entropy_bits(shifted: &[f64], beta: f64) -> f64 {
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for &s in shifted {
        let w = (-beta * s).exp();
        sum += w;
        weighted += w * s;
    }
    (sum.ln() + beta * weighted / sum) / std::f64::consts::LN_2
}

/// `p(j|i)` over the neighbor list of `i` for bandwidth `sigma`.
pub fn conditional_row(sq_dists: &[f64], sigma: f64, out: &mut Vec<f64>) {
    let beta = 0.5 / (sigma * sigma);
    let d_min = sq_dists
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v.max(MIN_SQ_DIST)));
    out.clear();
    out.extend(
        sq_dists
            .iter()
            .map(|&d| (-beta * (d.max(MIN_SQ_DIST) - d_min)).exp()),
    );
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
}

/// Sparse symmetric joint affinities `p_ij`, summing to one over all ordered
/// pairs. Stored row-wise with both `(i, j)` and `(j, i)` present.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    perplexity: f64,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl AffinityMatrix {
    /// Builds from a dense row-major `n x n` matrix, keeping nonzero entries.
    /// The matrix must be symmetric with zero diagonal and total mass one.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: dense.len(),
            });
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if v < 0.0 || !v.is_finite() || v != dense[j * n + i] || (i == j && v != 0.0) {
                    return Err(Error::param(format!("invalid affinity at ({i}, {j})")));
                }
                if v > 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        let total: f64 = vals.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("affinities sum to {total}, expected 1")));
        }
        Ok(Self {
            n,
            perplexity: f64::NAN,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Perplexity the matrix was calibrated at (NaN for hand-built matrices).
    pub fn perplexity(&self) -> f64 {
        self.perplexity
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|k| v[k]).unwrap_or(0.0)
    }

    /// `(i, j, p_ij)` over stored entries, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &p)| (i, j, p))
        })
    }

    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }
}

/// Symmetrizes the conditional distributions: `p_ij = (p(j|i) + p(i|j)) / 2N`.
pub fn build_affinities(neighbors: &NeighborLists, calib: &Calibration) -> Result<AffinityMatrix> {
    let n = neighbors.n;
    if calib.sigmas.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: calib.sigmas.len(),
        });
    }
    let scale = 1.0 / (2.0 * n as f64);
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * n * neighbors.k);
    let mut row = Vec::with_capacity(neighbors.k);
    for i in 0..n {
        conditional_row(neighbors.sq_dists(i), calib.sigmas[i], &mut row);
        for (&j, &p) in neighbors.indices(i).iter().zip(&row) {
            let v = p * scale;
            triplets.push((i, j, v));
            triplets.push((j, i, v));
        }
    }
    // Sorting by (row, col, value) keeps the merge order independent of how
    // the triplets were produced.
    triplets.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(triplets.len());
    let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
    row_ptr.push(0);
    let mut current = 0;
    for (i, j, v) in triplets {
        while current < i {
            row_ptr.push(cols.len());
            current += 1;
        }
        if cols.len() > row_ptr[i] && *cols.last().unwrap() == j {
            *vals.last_mut().unwrap() += v;
        } else {
            cols.push(j);
            vals.push(v);
        }
    }
    while row_ptr.len() < n + 1 {
        row_ptr.push(cols.len());
    }
    Ok(AffinityMatrix {
        n,
        perplexity: calib.perplexity,
        row_ptr,
        cols,
        vals,
    })
}

/// Neighbor count used to support a given perplexity: `ceil(3 * perplexity)`,
/// capped at `n - 1`.
pub fn support_size(n: usize, perplexity: f64) -> usize {
    ((3.0 * perplexity).ceil() as usize).clamp(1, n - 1)
}

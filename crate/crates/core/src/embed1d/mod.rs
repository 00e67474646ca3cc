//! One-dimensional t-SNE under the scaled t-distribution kernel
//! `k(d) = (1 + d^2 / alpha)^(-alpha)`, which has `2 * alpha - 1` degrees of
//! freedom. `alpha = 1` is the usual Cauchy kernel; smaller values give
//! heavier tails and tighter, finer clusters.

mod interp;
mod optimize;

pub use interp::{adaptive_grid_size, repulsion_interpolated, Interpolator};
pub use optimize::{optimize, LearningRate, OptimizerConfig, RepulsionMethod};

use crate::affinity::AffinityMatrix;
use crate::{Error, Result};

/// The kernel parameter `alpha`, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KernelParam(f64);

impl KernelParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::param(format!("alpha must be in (0, 1], got {alpha}")))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn degrees_of_freedom(self) -> f64 {
        2.0 * self.0 - 1.0
    }
}

/// Finite 1D coordinates, one per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding1D {
    coords: Vec<f64>,
}

impl Embedding1D {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::param(format!("coordinate {i} is not finite")));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }
}

/// `(1 + d^2 / alpha)^(-alpha)`.
pub fn kernel(d: f64, alpha: KernelParam) -> f64 {
    let a = alpha.0;
    let t = 1.0 + d * d / a;
    if a == 1.0 {
        1.0 / t
    } else {
        t.powf(-a)
    }
}

/// Kernel value `w` and the ratio `u = 1 / (1 + d^2 / alpha)` for a pair,
/// where `d(-ln w)/d(d^2) = u`.
#[inline]
pub(crate) fn pair_terms(d: f64, alpha: f64, inv_alpha: f64) -> (f64, f64) {
    let t = 1.0 + d * d * inv_alpha;
    let u = 1.0 / t;
    if alpha == 1.0 {
        (u, u)
    } else {
        ((-alpha * t.ln()).exp(), u)
    }
}

fn check_sizes(p: &AffinityMatrix, y: &[f64]) -> Result<()> {
    if y.len() < 2 {
        return Err(Error::param("need at least two points"));
    }
    if p.n() != y.len() {
        return Err(Error::LengthMismatch {
            expected: p.n(),
            got: y.len(),
        });
    }
    Ok(())
}

/// `KL(P || Q)` with `q_ij = k(|y_i - y_j|) / Z` and `Z` summed over all
/// ordered pairs `i != j`.
pub fn kl_objective(p: &AffinityMatrix, y: &Embedding1D, alpha: KernelParam) -> Result<f64> {
    let y = y.coords();
    check_sizes(p, y)?;
    let (a, inv_a) = (alpha.0, 1.0 / alpha.0);
    let mut z = 0.0;
    for i in 0..y.len() {
        for j in i + 1..y.len() {
            z += pair_terms(y[i] - y[j], a, inv_a).0;
        }
    }
    let ln_z = (2.0 * z).ln();
    let mut kl = 0.0;
    for (i, j, pij) in p.iter() {
        if pij > 0.0 {
            let t = 1.0 + (y[i] - y[j]).powi(2) * inv_a;
            // ln q = -alpha ln t - ln Z
            kl += pij * (pij.ln() + a * t.ln() + ln_z);
        }
    }
    Ok(kl.max(0.0))
}

/// Unnormalized repulsion: per-point kernel sums, signed forces
/// `sum_j w_ij u_ij (y_i - y_j)`, and their normalizer `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Repulsion {
    pub kernel_sums: Vec<f64>,
    pub forces: Vec<f64>,
    pub z: f64,
}

/// Exact O(N^2) repulsive sums.
pub fn repulsion_exact(y: &[f64], alpha: KernelParam) -> Repulsion {
    let n = y.len();
    let (a, inv_a) = (alpha.0, 1.0 / alpha.0);
    let mut kernel_sums = vec![0.0; n];
    let mut forces = vec![0.0; n];
    for i in 0..n {
        let yi = y[i];
        let (mut ks, mut fs) = (0.0, 0.0);
        for j in i + 1..n {
            let d = yi - y[j];
            let (w, u) = pair_terms(d, a, inv_a);
            let f = w * u * d;
            ks += w;
            fs += f;
            kernel_sums[j] += w;
            forces[j] -= f;
        }
        kernel_sums[i] += ks;
        forces[i] += fs;
    }
    let z = kernel_sums.iter().sum();
    Repulsion {
        kernel_sums,
        forces,
        z,
    }
}

/// Gradient of `KL(P || Q)` with respect to each coordinate, attractive part
/// scaled by `exaggeration`, repulsion summed exactly.
pub fn gradient(
    p: &AffinityMatrix,
    y: &Embedding1D,
    alpha: KernelParam,
    exaggeration: f64,
) -> Result<Vec<f64>> {
    check_sizes(p, y.coords())?;
    let rep = repulsion_exact(y.coords(), alpha);
    let mut out = vec![0.0; y.len()];
    gradient_with(p, y.coords(), alpha, exaggeration, &rep, &mut out);
    Ok(out)
}

/// `4 * (exaggeration * sum_j p_ij u_ij (y_i - y_j) - forces_i / Z)`.
pub(crate) fn gradient_with(
    p: &AffinityMatrix,
    y: &[f64],
    alpha: KernelParam,
    exaggeration: f64,
    rep: &Repulsion,
    out: &mut [f64],
) {
    let inv_a = 1.0 / alpha.0;
    let inv_z = 1.0 / rep.z;
    for (i, g) in out.iter_mut().enumerate() {
        let (cols, vals) = p.row(i);
        let yi = y[i];
        let mut attr = 0.0;
        for (&j, &pij) in cols.iter().zip(vals) {
            let d = yi - y[j];
            attr += pij * d / (1.0 + d * d * inv_a);
        }
        *g = 4.0 * (exaggeration * attr - rep.forces[i] * inv_z);
    }
}

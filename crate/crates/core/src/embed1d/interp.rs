//! Grid-interpolated repulsion in the style of FIt-SNE, specialised to one
//! dimension.
//!
//! The coordinate span is cut into equal boxes carrying three equispaced
//! interpolation nodes each. Unit charges are spread onto the nodes with
//! local Lagrange polynomials, node-to-node kernel sums are a Toeplitz
//! product evaluated as a circular convolution by FFT, and the node
//! potentials are interpolated back to the points. Cost per call is
//! `O(N + G log G)` for `G` nodes.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{pair_terms, repulsion_exact, KernelParam, Repulsion};
use crate::{Error, Result};

const NODES_PER_BOX: usize = 3;
/// Node positions inside a unit box.
const LOCAL_NODES: [f64; NODES_PER_BOX] = [1.0 / 6.0, 0.5, 5.0 / 6.0];

pub const MIN_GRID: usize = 32;
const MAX_ADAPTIVE_GRID: usize = 1 << 14;

/// Reusable FFT plans and scratch buffers.
pub struct Interpolator {
    planner: FftPlanner<f64>,
    charges: Vec<Complex<f64>>,
    kernel_z: Vec<Complex<f64>>,
    kernel_f: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    boxes: Vec<usize>,
    weights: Vec<[f64; NODES_PER_BOX]>,
}

impl Default for Interpolator {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for Interpolator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Interpolator").finish_non_exhaustive()
    }
}

impl Interpolator {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            charges: Vec::new(),
            kernel_z: Vec::new(),
            kernel_f: Vec::new(),
            scratch: Vec::new(),
            boxes: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Approximate [`repulsion_exact`] on a grid of about `grid_size` nodes.
    /// Falls back to the exact sums when all coordinates coincide.
    pub fn repulsion(&mut self, y: &[f64], alpha: KernelParam, grid_size: usize) -> Result<Repulsion> {
        if grid_size < MIN_GRID {
            return Err(Error::param(format!(
                "grid_size must be at least {MIN_GRID}, got {grid_size}"
            )));
        }
        let (lo, hi) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let span = hi - lo;
        if y.len() < 2 || !(span > 0.0) || !span.is_finite() {
            return Ok(repulsion_exact(y, alpha));
        }

        let n_boxes = grid_size / NODES_PER_BOX;
        let m = n_boxes * NODES_PER_BOX;
        let box_width = span / n_boxes as f64;
        let spacing = box_width / NODES_PER_BOX as f64;
        let len = 2 * m;

        // Spread unit charges onto the nodes.
        self.boxes.clear();
        self.weights.clear();
        self.charges.clear();
        self.charges.resize(len, Complex::new(0.0, 0.0));
        for &v in y {
            let s = (v - lo) / box_width;
            let b = (s.floor() as usize).min(n_boxes - 1);
            let w = lagrange(s - b as f64);
            for (k, wk) in w.iter().enumerate() {
                self.charges[b * NODES_PER_BOX + k].re += wk;
            }
            self.boxes.push(b);
            self.weights.push(w);
        }

        // Circulant embeddings of the Toeplitz kernel matrices.
        let (a, inv_a) = (alpha.alpha(), 1.0 / alpha.alpha());
        self.kernel_z.clear();
        self.kernel_z.resize(len, Complex::new(0.0, 0.0));
        self.kernel_f.clear();
        self.kernel_f.resize(len, Complex::new(0.0, 0.0));
        for t in 0..m {
            let d = t as f64 * spacing;
            let (w, u) = pair_terms(d, a, inv_a);
            let f = w * u * d;
            self.kernel_z[t].re = w;
            self.kernel_f[t].re = f;
            if t > 0 {
                self.kernel_z[len - t].re = w;
                self.kernel_f[len - t].re = -f;
            }
        }

        let forward = self.planner.plan_fft_forward(len);
        let inverse = self.planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        self.scratch.resize(scratch_len, Complex::new(0.0, 0.0));
        forward.process_with_scratch(&mut self.charges, &mut self.scratch);
        forward.process_with_scratch(&mut self.kernel_z, &mut self.scratch);
        forward.process_with_scratch(&mut self.kernel_f, &mut self.scratch);
        for ((kz, kf), c) in self.kernel_z.iter_mut().zip(self.kernel_f.iter_mut()).zip(&self.charges) {
            *kz *= c;
            *kf *= c;
        }
        inverse.process_with_scratch(&mut self.kernel_z, &mut self.scratch);
        inverse.process_with_scratch(&mut self.kernel_f, &mut self.scratch);
        let norm = 1.0 / len as f64;
        let mut near = [0.0; NODES_PER_BOX];
        for (t, v) in near.iter_mut().enumerate() {
            *v = pair_terms(t as f64 * spacing, a, inv_a).0;
        }

        // Interpolate node potentials back to the points.
        let n = y.len();
        let mut kernel_sums = Vec::with_capacity(n);
        let mut forces = Vec::with_capacity(n);
        for (b, w) in self.boxes.iter().zip(&self.weights) {
            let base = b * NODES_PER_BOX;
            let (mut phi_z, mut phi_f) = (0.0, 0.0);
            for (k, wk) in w.iter().enumerate() {
                phi_z += wk * self.kernel_z[base + k].re;
                phi_f += wk * self.kernel_f[base + k].re;
            }
            // Drop the self-interaction as the grid sees it.
            let mut own = 0.0;
            for (k, wk) in w.iter().enumerate() {
                for (l, wl) in w.iter().enumerate() {
                    own += wk * wl * near[k.abs_diff(l)];
                }
            }
            kernel_sums.push(phi_z * norm - own);
            forces.push(phi_f * norm);
        }
        let z = kernel_sums.iter().sum();
        Ok(Repulsion {
            kernel_sums,
            forces,
            z,
        })
    }
}

fn lagrange(t: f64) -> [f64; NODES_PER_BOX] {
    let mut out = [1.0; NODES_PER_BOX];
    for (k, o) in out.iter_mut().enumerate() {
        for (l, &xl) in LOCAL_NODES.iter().enumerate() {
            if l != k {
                *o *= (t - xl) / (LOCAL_NODES[k] - xl);
            }
        }
    }
    out
}

/// One-shot version of [`Interpolator::repulsion`].
pub fn repulsion_interpolated(y: &[f64], alpha: KernelParam, grid_size: usize) -> Result<Repulsion> {
    Interpolator::new().repulsion(y, alpha, grid_size)
}

/// Grid size keeping node spacing near `sqrt(alpha) / 4` (and at most
/// `1/3`), the scale on which the force kernel varies, clamped to
/// `[MIN_GRID, 16384]`.
pub fn adaptive_grid_size(span: f64, alpha: KernelParam) -> usize {
    let spacing = (0.25 * alpha.alpha().sqrt()).min(1.0 / 3.0);
    let nodes = (span / spacing).ceil();
    if !nodes.is_finite() {
        return MAX_ADAPTIVE_GRID;
    }
    (nodes as usize).clamp(MIN_GRID * 2, MAX_ADAPTIVE_GRID)
}

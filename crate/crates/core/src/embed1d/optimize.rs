use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::interp::{adaptive_grid_size, Interpolator};
use super::{check_sizes, gradient_with, repulsion_exact, Embedding1D, KernelParam};
use crate::affinity::AffinityMatrix;
use crate::{Error, Result};

/// Coordinates beyond this magnitude count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e8;
const MIN_GAIN: f64 = 0.01;
const TIE_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Fixed(f64),
    /// `factor * N`.
    PerPoint(f64),
}

impl LearningRate {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            LearningRate::Fixed(v) => v,
            LearningRate::PerPoint(f) => f * n as f64,
        }
    }
}

/// How the repulsive sums are evaluated at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepulsionMethod {
    Exact,
    /// Grid interpolation; `None` sizes the grid from the current span and alpha.
    Interpolated { grid_size: Option<usize> },
    /// Exact below `AUTO_EXACT_LIMIT` points, interpolated (adaptive grid) above.
    Auto,
}

impl RepulsionMethod {
    pub const AUTO_EXACT_LIMIT: usize = 1000;
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub iterations: usize,
    pub learning_rate: LearningRate,
    pub momentum_start: f64,
    pub momentum_late: f64,
    pub exaggeration: f64,
    pub early_exaggeration: f64,
    /// Iterations run with `early_exaggeration` and `momentum_start`.
    pub early_iterations: usize,
    /// Delta-bar-delta per-coordinate gains on top of momentum.
    pub gains: bool,
    pub repulsion: RepulsionMethod,
    /// Only used to jitter a fully degenerate initialization.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    /// Standalone t-SNE run: 1000 iterations at `N / 12`, the first 250 with
    /// momentum 0.5, exaggeration 12 throughout. The rate is stated for the
    /// gradient without its leading factor 4, hence `N / 48` here.
    fn default() -> Self {
        Self {
            iterations: 1000,
            learning_rate: LearningRate::PerPoint(1.0 / 48.0),
            momentum_start: 0.5,
            momentum_late: 0.8,
            exaggeration: 12.0,
            early_exaggeration: 12.0,
            early_iterations: 250,
            gains: false,
            repulsion: RepulsionMethod::Auto,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let lr_ok = match self.learning_rate {
            LearningRate::Fixed(v) | LearningRate::PerPoint(v) => v >= 0.0 && v.is_finite(),
        };
        if !lr_ok {
            return Err(Error::param("learning rate must be finite and nonnegative"));
        }
        for m in [self.momentum_start, self.momentum_late] {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::param(format!("momentum must be in [0, 1), got {m}")));
            }
        }
        if !(self.exaggeration >= 1.0) || !(self.early_exaggeration >= 1.0) {
            return Err(Error::param("exaggeration factors must be >= 1"));
        }
        if self.early_iterations > self.iterations {
            return Err(Error::param("early_iterations exceeds iterations"));
        }
        if let RepulsionMethod::Interpolated { grid_size: Some(g) } = self.repulsion {
            if g < super::interp::MIN_GRID {
                return Err(Error::param(format!("grid_size {g} below {}", super::interp::MIN_GRID)));
            }
        }
        Ok(())
    }
}

/// Gradient descent with momentum on `KL(P || Q)` from `init`.
pub fn optimize(
    p: &AffinityMatrix,
    init: &Embedding1D,
    alpha: KernelParam,
    cfg: &OptimizerConfig,
) -> Result<Embedding1D> {
    cfg.validate()?;
    check_sizes(p, init.coords())?;
    let n = init.len();
    let mut y = init.coords().to_vec();
    if y.iter().all(|&v| v == y[0]) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for v in &mut y {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += TIE_JITTER * z;
        }
    }

    let lr = cfg.learning_rate.resolve(n);
    let mut update = vec![0.0; n];
    let mut gains = vec![1.0; n];
    let mut grad = vec![0.0; n];
    let mut interp = Interpolator::new();
    let method = match cfg.repulsion {
        RepulsionMethod::Auto if n < RepulsionMethod::AUTO_EXACT_LIMIT => RepulsionMethod::Exact,
        RepulsionMethod::Auto => RepulsionMethod::Interpolated { grid_size: None },
        m => m,
    };

    for it in 0..cfg.iterations {
        let early = it < cfg.early_iterations;
        let exaggeration = if early { cfg.early_exaggeration } else { cfg.exaggeration };
        let momentum = if early { cfg.momentum_start } else { cfg.momentum_late };

        let rep = match method {
            RepulsionMethod::Interpolated { grid_size } => {
                let grid = grid_size.unwrap_or_else(|| {
                    let (lo, hi) = y
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
                    adaptive_grid_size(hi - lo, alpha)
                });
                interp.repulsion(&y, alpha, grid)?
            }
            _ => repulsion_exact(&y, alpha),
        };
        gradient_with(p, &y, alpha, exaggeration, &rep, &mut grad);

        for i in 0..n {
            if cfg.gains {
                gains[i] = if (grad[i] > 0.0) != (update[i] > 0.0) {
                    gains[i] + 0.2
                } else {
                    (gains[i] * 0.8f64).max(MIN_GAIN)
                };
            }
            update[i] = momentum * update[i] - lr * gains[i] * grad[i];
        }
        // Recenter: a contracting embedding keeps full relative precision
        // only around zero.
        if update.iter().any(|&u| u != 0.0) {
            for (yi, ui) in y.iter_mut().zip(&update) {
                *yi += ui;
            }
            let mean = y.iter().sum::<f64>() / n as f64;
            y.iter_mut().for_each(|v| *v -= mean);
        }
        if y.iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
            return Err(Error::Divergence { iteration: it });
        }
    }
    Embedding1D::new(y)
}

//! Alpha-clustering: the layer clustering that stays stable over the widest
//! range of the kernel parameter, and the NMI score used both for stability
//! and for evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use crate::cluster::LayerClustering;
use crate::dataset::LabelVector;
use crate::{Error, Result};

/// Minimum NMI between adjacent layers for them to count as the same
/// clustering (their cluster counts must also agree).
pub const STABILITY_NMI: f64 = 0.99;

/// Normalized mutual information `I(X;Y) / sqrt(H(X) H(Y))`.
///
/// When either labeling has a single cluster the score is 1 if the two
/// partitions coincide and 0 otherwise.
pub fn nmi(x: &LabelVector, y: &LabelVector) -> Result<f64> {
    nmi_slices(x.labels(), y.labels())
}

pub fn nmi_slices(x: &[usize], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::param("nmi of empty labelings"));
    }
    let n = x.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut cx: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cy: BTreeMap<usize, usize> = BTreeMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1;
        *cx.entry(a).or_default() += 1;
        *cy.entry(b).or_default() += 1;
    }
    if joint.len() == cx.len() && joint.len() == cy.len() {
        // Same partition up to relabeling.
        return Ok(1.0);
    }
    if cx.len() == 1 || cy.len() == 1 {
        return Ok(0.0);
    }
    let entropy = |counts: &BTreeMap<usize, usize>| {
        let mut terms: Vec<f64> = counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .collect();
        sorted_sum(&mut terms)
    };
    let (hx, hy) = (entropy(&cx), entropy(&cy));
    let mut terms: Vec<f64> = joint
        .iter()
        .map(|(&(a, b), &c)| {
            let c = c as f64;
            let (ca, cb) = (cx[&a] as f64, cy[&b] as f64);
            c / n * (n * c / (ca * cb)).ln()
        })
        .collect();
    let mi = sorted_sum(&mut terms);
    Ok((mi / (hx * hy).sqrt()).clamp(0.0, 1.0))
}

/// Order-independent sum, so that swapping arguments gives the same bits.
fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// A maximal run of consecutive layers with stable clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct StableRun {
    /// 1-based layer numbers.
    pub layer_first: usize,
    pub layer_last: usize,
    pub k: usize,
    pub alpha_first: f64,
    pub alpha_last: f64,
    pub alpha_range: f64,
}

impl StableRun {
    pub fn len(&self) -> usize {
        self.layer_last - self.layer_first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Whether two adjacent layers carry the same clustering.
pub fn same_clustering(a: &LayerClustering, b: &LayerClustering) -> Result<bool> {
    Ok(a.k == b.k && nmi(&a.labels, &b.labels)? >= STABILITY_NMI)
}

/// Splits the layer axis into maximal stable runs. `alphas[i]` belongs to
/// `clusterings[i]`.
pub fn stable_runs(clusterings: &[LayerClustering], alphas: &[f64]) -> Result<Vec<StableRun>> {
    if clusterings.len() < 2 {
        return Err(Error::param(format!(
            "need at least 2 layers to find stable runs, got {}",
            clusterings.len()
        )));
    }
    if alphas.len() != clusterings.len() {
        return Err(Error::LengthMismatch {
            expected: clusterings.len(),
            got: alphas.len(),
        });
    }
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=clusterings.len() {
        let ends = i == clusterings.len() || !same_clustering(&clusterings[i - 1], &clusterings[i])?;
        if ends {
            let last = i - 1;
            runs.push(StableRun {
                layer_first: start + 1,
                layer_last: last + 1,
                k: clusterings[start].k,
                alpha_first: alphas[start],
                alpha_last: alphas[last],
                alpha_range: alphas[start] - alphas[last],
            });
            start = i;
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaClustering {
    pub labels: LabelVector,
    pub k: usize,
    pub layer_first: usize,
    pub layer_last: usize,
    pub alpha_first: f64,
    pub alpha_last: f64,
    pub alpha_range: f64,
}

/// Picks the run with the largest alpha range (earliest on ties; single
/// layers only when no run spans two or more) and returns its first layer's
/// clustering.
pub fn select_alpha_clustering(clusterings: &[LayerClustering], alphas: &[f64]) -> Result<AlphaClustering> {
    let runs = stable_runs(clusterings, alphas)?;
    let multi = runs.iter().any(|r| r.len() > 1);
    let mut best: Option<&StableRun> = None;
    for r in runs.iter().filter(|r| !multi || r.len() > 1) {
        if best.is_none_or(|b| r.alpha_range > b.alpha_range) {
            best = Some(r);
        }
    }
    let run = best.expect("at least one run");
    let c = &clusterings[run.layer_first - 1];
    Ok(AlphaClustering {
        labels: c.labels.clone(),
        k: c.k,
        layer_first: run.layer_first,
        layer_last: run.layer_last,
        alpha_first: run.alpha_first,
        alpha_last: run.alpha_last,
        alpha_range: run.alpha_range,
    })
}

impl AlphaClustering {
    /// `point_index,label` rows.
    pub fn write_labels<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::from("point_index,label\n");
        for (i, l) in self.labels.labels().iter().enumerate() {
            buf.push_str(&format!("{i},{l}\n"));
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }
}

/// Plain `key=value` summary.
impl fmt::Display for AlphaClustering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "k={}", self.k)?;
        writeln!(f, "layer_first={}", self.layer_first)?;
        writeln!(f, "layer_last={}", self.layer_last)?;
        writeln!(f, "alpha_first={}", self.alpha_first)?;
        writeln!(f, "alpha_last={}", self.alpha_last)?;
        writeln!(f, "alpha_range={}", self.alpha_range)
    }
}

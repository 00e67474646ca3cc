//! SVG rendering of a layer stack: one horizontal strip of points per layer,
//! layer 1 at the bottom.

use std::fmt::Write as _;

use crate::dataset::LabelVector;
use crate::tree::TreeEmbedding;
use crate::{Error, Result};

/// Default categorical palette, cycled beyond its 20 entries.
pub const PALETTE: [&str; 20] = [
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcf60c", "#fabebe",
    "#008080", "#e6beff", "#9a6324", "#fffac8", "#800000", "#aaffc3", "#808000", "#ffd8b1", "#000075", "#808080",
];

/// Control points of the continuous ramp (viridis), evenly spaced on [0, 1].
pub const VIRIDIS: [[u8; 3]; 5] = [[0x44, 0x01, 0x54], [0x3b, 0x52, 0x8b], [0x21, 0x91, 0x8c], [0x5e, 0xc9, 0x62], [0xfd, 0xe7, 0x25]];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub width: u32,
    pub height: u32,
    pub margin: u32,
    pub point_radius: f64,
    pub palette: Vec<String>,
    /// Scale each layer to its own min/max instead of the global range.
    pub per_layer_x: bool,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            width: 800,
            height: 600,
            margin: 20,
            point_radius: 1.5,
            palette: PALETTE.iter().map(|c| c.to_string()).collect(),
            per_layer_x: false,
        }
    }
}

impl PlotSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width <= 2 * self.margin || self.height <= 2 * self.margin {
            return Err(Error::param("plot must be larger than twice its margin"));
        }
        if !(self.point_radius > 0.0) {
            return Err(Error::param("point radius must be positive"));
        }
        if self.palette.is_empty() {
            return Err(Error::param("empty palette"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ColorSource<'a> {
    /// Every point in the first palette color.
    Single,
    Labels(&'a LabelVector),
    /// Continuous values mapped through [`VIRIDIS`] after min-max scaling.
    Feature(&'a [f64]),
}

/// Hex color for `t` in [0, 1] on the continuous ramp.
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |k: usize| (a[k] as f64 + f * (b[k] as f64 - a[k] as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

fn point_colors(n: usize, colors: ColorSource<'_>, spec: &PlotSpec) -> Result<Vec<String>> {
    match colors {
        ColorSource::Single => Ok(vec![spec.palette[0].clone(); n]),
        ColorSource::Labels(l) => {
            l.check_len(n)?;
            Ok(l.labels().iter().map(|&v| spec.palette[v % spec.palette.len()].clone()).collect())
        }
        ColorSource::Feature(f) => {
            if f.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: f.len() });
            }
            let (lo, hi) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            let span = hi - lo;
            Ok(f.iter()
                .map(|&v| ramp_color(if span > 0.0 { (v - lo) / span } else { 0.5 }))
                .collect())
        }
    }
}

/// Renders the stack as an SVG 1.1 document with `N * n_layers` circles.
pub fn render_tree(tree: &TreeEmbedding, colors: ColorSource<'_>, spec: &PlotSpec) -> Result<String> {
    spec.validate()?;
    let fill = point_colors(tree.n(), colors, spec)?;
    let (w, h, m) = (spec.width as f64, spec.height as f64, spec.margin as f64);
    let n_layers = tree.n_layers();
    let global = tree.coord_range();

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        spec.width, spec.height, spec.width, spec.height
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str("<g stroke=\"none\">\n");
    for layer in tree.layers() {
        let (lo, hi) = if spec.per_layer_x {
            layer
                .coords
                .coords()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)))
        } else {
            global
        };
        let cy = if n_layers > 1 {
            h - m - (layer.number - 1) as f64 / (n_layers - 1) as f64 * (h - 2.0 * m)
        } else {
            h / 2.0
        };
        for (c, color) in layer.coords.coords().iter().zip(&fill) {
            let cx = if hi > lo { m + (c - lo) / (hi - lo) * (w - 2.0 * m) } else { w / 2.0 };
            let _ = writeln!(out, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"{color}\"/>", spec.point_radius);
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

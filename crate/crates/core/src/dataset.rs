//! Observation matrices, label vectors, PCA preprocessing, synthetic
//! benchmark generators and label-driven subsetting.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Row-major `N x D` matrix of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    row_ids: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::NoRows);
        }
        if cols == 0 {
            return Err(Error::param("matrix needs at least one column"));
        }
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            row_ids: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).ok_or(Error::NoRows)?;
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::param(format!(
                    "row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn with_row_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.rows {
            return Err(Error::LengthMismatch {
                expected: self.rows,
                got: ids.len(),
            });
        }
        self.row_ids = Some(ids);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_ids(&self) -> Option<&[String]> {
        self.row_ids.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.values[i * self.cols + j]).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }
}

/// One nonnegative integer label per observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    name: String,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, name: impl Into<String>) -> Self {
        Self {
            labels,
            name: name.into(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct label values.
    pub fn n_distinct(&self) -> usize {
        self.labels.iter().collect::<BTreeSet<_>>().len()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.labels.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.labels.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    /// Little-endian: `u64 N`, `u64 D`, then `N * D` `f64` values.
    RawF64,
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "raw" | "raw-f64" => Ok(Self::RawF64),
            other => Err(Error::param(format!("unknown matrix format '{other}'"))),
        }
    }
}

impl MatrixFormat {
    pub fn name(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::RawF64 => "raw-f64",
        }
    }
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NoSuchFile {
            path: path.to_path_buf(),
        },
        _ => Error::Io(e),
    })
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DataMatrix> {
    let file = open(path.as_ref())?;
    match format {
        MatrixFormat::Csv => read_csv_matrix(BufReader::new(file)),
        MatrixFormat::RawF64 => {
            let mut bytes = Vec::new();
            BufReader::new(file).read_to_end(&mut bytes)?;
            parse_raw_matrix(&bytes)
        }
    }
}

/// Parses comma-separated numeric rows. A first line containing any
/// non-numeric field is treated as a header and skipped.
pub fn read_csv_matrix<R: Read>(reader: R) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(Error::Parse {
                    line,
                    msg: e.to_string(),
                });
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    msg: format!("{e}: '{}'", record.iter().collect::<Vec<_>>().join(",")),
                })
            }
        };
        first = false;
        if rows > 0 && row.len() != cols {
            return Err(Error::Parse {
                line,
                msg: format!("expected {cols} fields, found {}", row.len()),
            });
        }
        cols = row.len();
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: rows, col });
        }
        values.extend(row);
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::NoRows);
    }
    DataMatrix::new(rows, cols, values)
}

pub fn parse_raw_matrix(bytes: &[u8]) -> Result<DataMatrix> {
    if bytes.len() < 16 {
        return Err(Error::NoRows);
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| Error::param("raw header dimensions overflow"))?;
    if body.len() != expected {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "raw body holds {} bytes, header {n}x{d} requires {expected}",
                body.len()
            ),
        });
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DataMatrix::new(n, d, values)
}

pub fn write_csv_matrix<W: Write>(data: &DataMatrix, mut out: W) -> Result<()> {
    let mut line = String::new();
    for row in data.iter_rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_raw_matrix<W: Write>(data: &DataMatrix, mut out: W) -> Result<()> {
    out.write_all(&(data.rows as u64).to_le_bytes())?;
    out.write_all(&(data.cols as u64).to_le_bytes())?;
    for v in &data.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads one integer label per line, or the last field of `index,label`
/// rows. Blank lines and a non-numeric header line are skipped.
pub fn read_labels<R: Read>(reader: R, name: &str) -> Result<LabelVector> {
    let mut labels = Vec::new();
    let mut first = true;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let t = t.rsplit(',').next().unwrap_or(t).trim();
        let header = std::mem::replace(&mut first, false);
        if header && t.parse::<f64>().is_err() {
            continue;
        }
        let v = t.parse::<usize>().map_err(|e| Error::Parse {
            line: i as u64 + 1,
            msg: format!("{e}: '{t}'"),
        })?;
        labels.push(v);
    }
    if labels.is_empty() {
        return Err(Error::NoRows);
    }
    Ok(LabelVector::new(labels, name))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_labels(open(path)?, &name)
}

pub fn write_labels<W: Write>(labels: &LabelVector, mut out: W) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels.labels() {
        s.push_str(&l.to_string());
        s.push('\n');
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Projects mean-centered data onto its leading principal components.
///
/// Components come out in decreasing-variance order. Each component's sign is
/// fixed so that its largest-magnitude loading is positive.
pub fn pca_reduce(data: &DataMatrix, components: usize) -> Result<DataMatrix> {
    let (n, d) = (data.rows, data.cols);
    if components == 0 || components > n.min(d) {
        return Err(Error::param(format!(
            "components must be in 1..={}, got {components}",
            n.min(d)
        )));
    }
    if n < 2 {
        return Err(Error::param("PCA needs at least two rows"));
    }
    let mut x = DMatrix::from_row_slice(n, d, &data.values);
    for j in 0..d {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let denom = (n - 1) as f64;

    // Loadings as a D x components matrix.
    let loadings = if d <= n {
        let cov = (x.transpose() * &x) / denom;
        let eig = SymmetricEigen::new(cov);
        let order = descending(eig.eigenvalues.as_slice());
        let mut v = DMatrix::zeros(d, components);
        for (c, &k) in order.iter().take(components).enumerate() {
            v.set_column(c, &eig.eigenvectors.column(k));
        }
        v
    } else {
        // Wide data: eigendecompose the N x N Gram matrix instead.
        let gram = (&x * x.transpose()) / denom;
        let eig = SymmetricEigen::new(gram);
        let order = descending(eig.eigenvalues.as_slice());
        let mut v = DMatrix::zeros(d, components);
        for (c, &k) in order.iter().take(components).enumerate() {
            let mut col = x.transpose() * eig.eigenvectors.column(k);
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
            v.set_column(c, &col);
        }
        v
    };

    let mut loadings = loadings;
    for c in 0..components {
        let mut col = loadings.column_mut(c);
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &val in col.iter() {
            if val.abs() > best.abs() {
                best = val;
                sign = val.signum();
            }
        }
        if sign < 0.0 {
            col.neg_mut();
        }
    }

    let proj = x * loadings;
    let mut values = Vec::with_capacity(n * components);
    for i in 0..n {
        values.extend(proj.row(i).iter().copied());
    }
    let mut out = DataMatrix::new(n, components, values)?;
    out.row_ids = data.row_ids.clone();
    Ok(out)
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Keeps the rows whose label is in `keep`, in their original order.
pub fn subset_by_cluster(
    data: &DataMatrix,
    labels: &LabelVector,
    keep: &BTreeSet<usize>,
) -> Result<DataMatrix> {
    labels.check_len(data.rows)?;
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    let picked: Vec<usize> = (0..data.rows)
        .filter(|&i| keep.contains(&labels.labels[i]))
        .collect();
    if picked.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut values = Vec::with_capacity(picked.len() * data.cols);
    for &i in &picked {
        values.extend_from_slice(data.row(i));
    }
    let mut out = DataMatrix::new(picked.len(), data.cols, values)?;
    if let Some(ids) = &data.row_ids {
        out.row_ids = Some(picked.iter().map(|&i| ids[i].clone()).collect());
    }
    Ok(out)
}

/// Arithmetic mean of the member rows of every label.
pub fn cluster_mean_features(
    data: &DataMatrix,
    labels: &LabelVector,
) -> Result<BTreeMap<usize, Vec<f64>>> {
    labels.check_len(data.rows)?;
    let mut sums: BTreeMap<usize, (usize, Vec<f64>)> = BTreeMap::new();
    for (row, &l) in data.iter_rows().zip(&labels.labels) {
        let entry = sums
            .entry(l)
            .or_insert_with(|| (0, vec![0.0; data.cols]));
        entry.0 += 1;
        for (acc, v) in entry.1.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(l, (count, sum))| {
            let c = count as f64;
            (l, sum.into_iter().map(|s| s / c).collect())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    GaussianBlobs,
    SwissRoll,
    UniformNoise,
    UniformPlane,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-blobs" | "blobs" => Ok(Self::GaussianBlobs),
            "swiss-roll" => Ok(Self::SwissRoll),
            "uniform-noise" | "noise" => Ok(Self::UniformNoise),
            "uniform-plane" | "plane" => Ok(Self::UniformPlane),
            other => Err(Error::param(format!("unknown synthetic kind '{other}'"))),
        }
    }
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GaussianBlobs => "gaussian-blobs",
            Self::SwissRoll => "swiss-roll",
            Self::UniformNoise => "uniform-noise",
            Self::UniformPlane => "uniform-plane",
        }
    }
}

/// Sizes for [`generate_synthetic`]. `centers`, `std` and `separation`
/// only matter for blobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub n: usize,
    pub dim: usize,
    pub centers: usize,
    pub std: f64,
    /// Minimum pairwise distance between blob centroids.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n: 2000,
            dim: 10,
            centers: 5,
            std: 1.0,
            separation: 20.0,
            seed: 0,
        }
    }
}

pub fn generate_synthetic(
    kind: SyntheticKind,
    params: &SyntheticParams,
) -> Result<(DataMatrix, LabelVector)> {
    let SyntheticParams { n, dim, .. } = *params;
    if n < 2 || dim == 0 {
        return Err(Error::param("synthetic data needs n >= 2 and dim >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut values = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    match kind {
        SyntheticKind::GaussianBlobs => {
            if params.centers == 0 || !(params.std > 0.0) || !(params.separation >= 0.0) {
                return Err(Error::param("blobs need centers >= 1, std > 0, separation >= 0"));
            }
            let centers = blob_centers(&mut rng, params.centers, dim, params.separation)?;
            for i in 0..n {
                let c = i % params.centers;
                for &m in &centers[c] {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    values.push(m + params.std * z);
                }
                labels.push(c);
            }
        }
        SyntheticKind::SwissRoll => {
            if dim < 3 {
                return Err(Error::param("swiss roll needs dim >= 3"));
            }
            let (t_lo, t_hi) = (1.5 * std::f64::consts::PI, 4.5 * std::f64::consts::PI);
            for _ in 0..n {
                let t = t_lo + (t_hi - t_lo) * rng.random::<f64>();
                let h = 21.0 * rng.random::<f64>();
                values.extend_from_slice(&[t * t.cos(), h, t * t.sin()]);
                values.extend(std::iter::repeat(0.0).take(dim - 3));
                let decile = ((t - t_lo) / (t_hi - t_lo) * 10.0).floor() as usize;
                labels.push(decile.min(9));
            }
        }
        SyntheticKind::UniformNoise => {
            for _ in 0..n * dim {
                values.push(rng.random::<f64>());
            }
            labels.resize(n, 0);
        }
        SyntheticKind::UniformPlane => {
            if dim < 2 {
                return Err(Error::param("uniform plane needs dim >= 2"));
            }
            let frame = orthonormal_pair(&mut rng, dim);
            for _ in 0..n {
                let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
                values.extend((0..dim).map(|j| a * frame[0][j] + b * frame[1][j]));
            }
            labels.resize(n, 0);
        }
    }
    Ok((
        DataMatrix::new(n, dim, values)?,
        LabelVector::new(labels, kind.name()),
    ))
}

fn blob_centers(
    rng: &mut ChaCha8Rng,
    k: usize,
    dim: usize,
    separation: f64,
) -> Result<Vec<Vec<f64>>> {
    let half = separation.max(1.0) * k as f64;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut tries = 0;
    while centers.len() < k {
        tries += 1;
        if tries > 100_000 {
            return Err(Error::param("could not place blob centers at requested separation"));
        }
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-half..half)).collect();
        let ok = centers.iter().all(|o| {
            o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= separation
        });
        if ok {
            centers.push(c);
        }
    }
    Ok(centers)
}

fn orthonormal_pair(rng: &mut ChaCha8Rng, dim: usize) -> [Vec<f64>; 2] {
    let mut draw = || -> Vec<f64> { (0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect() };
    let normalize = |v: &mut Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
    };
    let mut a = draw();
    normalize(&mut a);
    let mut b = draw();
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    b.iter_mut().zip(&a).for_each(|(y, x)| *y -= dot * x);
    normalize(&mut b);
    [a, b]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[usize]) -> LabelVector {
        LabelVector::new(v.to_vec(), "t")
    }

    #[test]
    fn parses_small_csv() {
        let m = read_csv_matrix("1,2\n3,4\n5,6".as_bytes()).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 2));
        assert_eq!(m.values(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn skips_header_line() {
        let m = read_csv_matrix("x,y\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(m.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn empty_csv_has_no_rows() {
        let err = read_csv_matrix("".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "no rows");
    }

    #[test]
    fn nan_cell_is_reported_by_position() {
        let err = read_csv_matrix("1,2\n3,nan\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 1 }), "{err}");
    }

    #[test]
    fn malformed_row_names_its_line() {
        let err = read_csv_matrix("1,2\n3,4\n5,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_csv_matrix("1,2\n3,4,5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn raw_round_trip() {
        let m = DataMatrix::from_rows(&[vec![1.5, -2.0], vec![0.25, 1e-300]]).unwrap();
        let mut buf = Vec::new();
        write_raw_matrix(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 4 * 8);
        assert_eq!(parse_raw_matrix(&buf).unwrap(), m);
        assert!(parse_raw_matrix(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn label_file_parsing() {
        let l = read_labels("0\n1\n\n2\n".as_bytes(), "x").unwrap();
        assert_eq!(l.labels(), &[0, 1, 2]);
        assert!(matches!(
            read_labels("0\n-1\n".as_bytes(), "x"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn pca_rank_one_reconstructs_exactly() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| {
            let t = i as f64 * 0.7 - 2.0;
            vec![1.0 + 2.0 * t, -3.0 + t]
        }).collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let p = pca_reduce(&data, 1).unwrap();
        // Reconstruct through the unit direction (2,1)/sqrt(5).
        let dir = [2.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt()];
        let mean = [data.column(0).iter().sum::<f64>() / 10.0, data.column(1).iter().sum::<f64>() / 10.0];
        for i in 0..10 {
            let s = p.row(i)[0];
            for j in 0..2 {
                assert!((mean[j] + s * dir[j] - data.row(i)[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pca_rejects_bad_component_counts() {
        let data = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 5.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(pca_reduce(&data, 0), Err(Error::Param(_))));
        assert!(matches!(pca_reduce(&data, 3), Err(Error::Param(_))));
    }

    #[test]
    fn pca_wide_variances_non_increasing() {
        let (data, _) = generate_synthetic(
            SyntheticKind::UniformNoise,
            &SyntheticParams { n: 12, dim: 30, seed: 3, ..Default::default() },
        )
        .unwrap();
        let wide = pca_reduce(&data, 5).unwrap();
        let vars = column_variances(&wide);
        for w in vars.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }

    fn column_variances(m: &DataMatrix) -> Vec<f64> {
        (0..m.cols())
            .map(|j| {
                let c = m.column(j);
                let mean = c.iter().sum::<f64>() / c.len() as f64;
                c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (c.len() - 1) as f64
            })
            .collect()
    }

    #[test]
    fn subset_examples() {
        let data = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]])
            .unwrap()
            .with_row_ids(vec!["a".into(), "b".into(), "c".into(), "d".into()])
            .unwrap();
        let l = labels(&[0, 1, 0, 2]);
        let s = subset_by_cluster(&data, &l, &BTreeSet::from([0])).unwrap();
        assert_eq!(s.values(), &[0.0, 2.0]);
        assert_eq!(s.row_ids().unwrap(), &["a".to_string(), "c".to_string()]);
        let all = subset_by_cluster(&data, &l, &BTreeSet::from([0, 1, 2])).unwrap();
        assert_eq!(all, data);
        let err = subset_by_cluster(&data, &l, &BTreeSet::from([7])).unwrap_err();
        assert_eq!(err.to_string(), "empty subset");
        assert!(subset_by_cluster(&data, &l, &BTreeSet::new()).is_err());
    }

    #[test]
    fn means_examples() {
        let data = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 2.0], vec![5.0, -1.0]]).unwrap();
        let m = cluster_mean_features(&data, &labels(&[3, 3, 8])).unwrap();
        assert_eq!(m[&3], vec![1.0, 1.0]);
        assert_eq!(m[&8], vec![5.0, -1.0]);
        assert!(cluster_mean_features(&data, &labels(&[0, 1])).is_err());
    }

    #[test]
    fn uniform_noise_range_and_determinism() {
        let p = SyntheticParams { n: 5000, dim: 100, seed: 11, ..Default::default() };
        let (a, la) = generate_synthetic(SyntheticKind::UniformNoise, &p).unwrap();
        assert!(a.values().iter().all(|&v| (0.0..1.0).contains(&v)));
        assert_eq!(la.n_distinct(), 1);
        let (b, _) = generate_synthetic(SyntheticKind::UniformNoise, &p).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn unknown_kind_is_a_parameter_error() {
        assert!(matches!("spiral".parse::<SyntheticKind>(), Err(Error::Param(_))));
    }

    #[test]
    fn swiss_roll_labels_are_deciles() {
        let p = SyntheticParams { n: 3000, dim: 5, seed: 1, ..Default::default() };
        let (m, l) = generate_synthetic(SyntheticKind::SwissRoll, &p).unwrap();
        assert_eq!(l.n_distinct(), 10);
        assert!(m.iter_rows().all(|r| r[3] == 0.0 && r[4] == 0.0));
    }

    #[test]
    fn plane_has_rank_two() {
        let p = SyntheticParams { n: 200, dim: 20, seed: 5, ..Default::default() };
        let (m, _) = generate_synthetic(SyntheticKind::UniformPlane, &p).unwrap();
        let reduced = pca_reduce(&m, 3).unwrap();
        let vars = column_variances(&reduced);
        assert!(vars[2] < 1e-20 * vars[0].max(1.0) + 1e-20, "{vars:?}");
    }
}

//! Multi-view datasets: loading, normalization and a synthetic generator.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Per-view data matrices (features × samples) sharing one sample axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<DMatrix<f64>>,
    labels: Option<Vec<usize>>,
    view_names: Option<Vec<String>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<DMatrix<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::InvalidArgument("a dataset needs at least one view".into()));
        }
        let n = views[0].ncols();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "a dataset needs at least two samples, found {n}"
            )));
        }
        for (v, x) in views.iter().enumerate() {
            if x.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "view {v} has {} samples, view 0 has {n}",
                    x.ncols()
                )));
            }
            if x.nrows() == 0 {
                return Err(Error::InvalidArgument(format!("view {v} has no features")));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {n} samples",
                    labels.len()
                )));
            }
        }
        Ok(Self {
            views,
            labels,
            view_names: None,
        })
    }

    pub fn with_view_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.views.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} view names for {} views",
                names.len(),
                self.views.len()
            )));
        }
        self.view_names = Some(names);
        Ok(self)
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &DMatrix<f64> {
        &self.views[v]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn view_names(&self) -> Option<&[String]> {
        self.view_names.as_deref()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].ncols()
    }

    pub fn n_features(&self) -> Vec<usize> {
        self.views.iter().map(|x| x.nrows()).collect()
    }

    /// Stacks every view's features into one (Σm) × n matrix.
    pub fn concatenated(&self) -> DMatrix<f64> {
        stack_views(&self.views)
    }

    pub fn into_parts(self) -> (Vec<DMatrix<f64>>, Option<Vec<usize>>) {
        (self.views, self.labels)
    }
}

/// Stacks views (all with the same column count) on top of each other.
pub fn stack_views(views: &[DMatrix<f64>]) -> DMatrix<f64> {
    let total = views.iter().map(|x| x.nrows()).sum();
    let mut out = DMatrix::zeros(total, views.first().map_or(0, |x| x.ncols()));
    let mut offset = 0;
    for x in views {
        out.rows_mut(offset, x.nrows()).copy_from(x);
        offset += x.nrows();
    }
    out
}

/// Options controlling how matrix files are read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Skip the first line of every matrix file.
    pub header: bool,
    /// Files are samples × features; transpose on load.
    pub transpose: bool,
}

pub fn read_matrix_csv(path: impl AsRef<Path>, opts: LoadOptions) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(nrows + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match ncols {
            None => ncols = Some(record.len()),
            Some(expected) if expected != record.len() => {
                return Err(Error::RaggedRow {
                    path: path.to_path_buf(),
                    line,
                    expected,
                    found: record.len(),
                })
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                line,
                column: col + 1,
                cell: cell.to_string(),
            })?;
            values.push(value);
        }
        nrows += 1;
    }
    let ncols = match ncols {
        Some(c) if nrows > 0 => c,
        _ => {
            return Err(Error::EmptyFile {
                path: path.to_path_buf(),
            })
        }
    };
    let m = DMatrix::from_row_slice(nrows, ncols, &values);
    Ok(if opts.transpose { m.transpose() } else { m })
}

/// Writes one matrix row per line. Values use the shortest representation
/// that parses back to the identical `f64`.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x}")).collect();
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let cell = line.trim();
        if cell.is_empty() {
            continue;
        }
        let label = cell.parse::<usize>().map_err(|_| Error::NonNumeric {
            path: path.to_path_buf(),
            line: i + 1,
            column: 1,
            cell: cell.to_string(),
        })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(labels)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for l in labels {
        writeln!(out, "{l}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Loads one view per file, in file order, plus optional labels.
pub fn load_dataset<P: AsRef<Path>>(
    paths: &[P],
    label_path: Option<&Path>,
    opts: LoadOptions,
) -> Result<MultiViewDataset> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no view files given".into()));
    }
    let mut views = Vec::with_capacity(paths.len());
    let mut names = Vec::with_capacity(paths.len());
    for p in paths {
        let p = p.as_ref();
        let x = read_matrix_csv(p, opts)?;
        if let Some(first) = views.first().map(|x: &DMatrix<f64>| x.ncols()) {
            if x.ncols() != first {
                return Err(Error::DimensionMismatch(format!(
                    "{} has {} samples, {} has {first}",
                    p.display(),
                    x.ncols(),
                    paths[0].as_ref().display()
                )));
            }
        }
        names.push(view_name(p));
        views.push(x);
    }
    let labels = match label_path {
        Some(lp) => {
            let labels = read_labels(lp)?;
            if labels.len() != views[0].ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "{} has {} labels for {} samples",
                    lp.display(),
                    labels.len(),
                    views[0].ncols()
                )));
            }
            Some(labels)
        }
        None => None,
    };
    MultiViewDataset::new(views, labels)?.with_view_names(names)
}

fn view_name(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| PathBuf::from(p).display().to_string())
}

/// Maps every feature row to `[0, 1]`; constant rows become zero.
pub fn minmax_normalize(ds: &MultiViewDataset) -> MultiViewDataset {
    let views = ds.views.iter().map(normalize_rows).collect();
    MultiViewDataset {
        views,
        labels: ds.labels.clone(),
        view_names: ds.view_names.clone(),
    }
}

fn normalize_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let lo = row.min();
        let hi = row.max();
        let span = hi - lo;
        if span > 0.0 {
            row.apply(|v| *v = (*v - lo) / span);
        } else {
            row.fill(0.0);
        }
    }
    out
}

/// Parameters of the Gaussian-blob generator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub n: usize,
    pub clusters: usize,
    pub views: usize,
    pub informative: usize,
    pub noisy: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            n: 150,
            clusters: 3,
            views: 2,
            informative: 5,
            noisy: 15,
            separation: 10.0,
            seed: 1,
        }
    }
}

/// Synthetic dataset plus the indices of the informative rows in each view.
#[derive(Debug, Clone, PartialEq)]
pub struct Blobs {
    pub dataset: MultiViewDataset,
    pub informative: Vec<Vec<usize>>,
}

/// Draws `clusters` Gaussian blobs in every view.
///
/// Sample `i` belongs to cluster `i % clusters`. Informative feature `f` of
/// cluster `k` is centered at `separation` when `f % clusters == k` and at 0
/// otherwise, with unit-variance noise; noisy features are uniform on
/// `[0, 1)`. Row order within each view is shuffled, and the positions of
/// the informative rows are returned alongside the dataset.
pub fn make_blobs_multiview(spec: &BlobSpec) -> Result<Blobs> {
    let BlobSpec {
        n,
        clusters,
        views,
        informative,
        noisy,
        separation,
        seed,
    } = *spec;
    if clusters < 2 || n < clusters {
        return Err(Error::InvalidArgument(format!(
            "need n >= clusters >= 2, got n = {n}, clusters = {clusters}"
        )));
    }
    if informative == 0 || views == 0 {
        return Err(Error::InvalidArgument(
            "need at least one view and one informative feature".into(),
        ));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(Error::InvalidArgument(format!("bad separation {separation}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % clusters).collect();
    let m = informative + noisy;
    let mut mats = Vec::with_capacity(views);
    let mut informative_rows = Vec::with_capacity(views);
    for _ in 0..views {
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let mut x = DMatrix::zeros(m, n);
        for (f, &row) in order.iter().enumerate() {
            for (j, &label) in labels.iter().enumerate() {
                x[(row, j)] = if f < informative {
                    let center = if f % clusters == label { separation } else { 0.0 };
                    let noise: f64 = rng.sample(StandardNormal);
                    center + noise
                } else {
                    rng.random::<f64>()
                };
            }
        }
        let mut rows = order[..informative].to_vec();
        rows.sort_unstable();
        informative_rows.push(rows);
        mats.push(x);
    }
    Ok(Blobs {
        dataset: MultiViewDataset::new(mats, Some(labels))?,
        informative: informative_rows,
    })
}

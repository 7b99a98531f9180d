//! Multi-view datasets: in-memory representation, the directory format,
//! splitting, normalization, pseudo-views, synthetic conflict data and noise.
//!
//! # Directory format
//!
//! ```text
//! meta          four `key = value` lines: classes, views, instances, dims
//!               (dims is a comma-separated list, view 1 first)
//! view1.csv     one row per instance, comma-separated reals in `{:.16e}`
//! ...
//! viewV.csv
//! labels.txt    one integer label in [0, classes) per line
//! ```
//!
//! Seventeen significant digits round-trip every `f64` bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Independent random sub-streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split = 1,
    Init = 2,
    Batching = 3,
    Noise = 4,
    Synth = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Views, labels and a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    num_classes: usize,
    views: Vec<Matrix>,
    labels: Vec<usize>,
    train: Vec<usize>,
    test: Vec<usize>,
}

impl MultiViewDataset {
    /// Validates shapes, labels and finiteness. Every instance starts in the
    /// training split.
    pub fn new(num_classes: usize, views: Vec<Matrix>, labels: Vec<usize>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::domain(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if views.is_empty() {
            return Err(Error::domain("dataset has no views"));
        }
        let n = labels.len();
        for (v, m) in views.iter().enumerate() {
            if m.rows() != n {
                return Err(Error::domain(format!(
                    "view {} has {} rows, expected {n}",
                    v + 1,
                    m.rows()
                )));
            }
            if m.as_slice().iter().any(|x| !x.is_finite()) {
                return Err(Error::domain(format!(
                    "view {} contains non-finite values",
                    v + 1
                )));
            }
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::domain(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            num_classes,
            views,
            labels,
            train: (0..n).collect(),
            test: Vec::new(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(Matrix::cols).collect()
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &Matrix {
        &self.views[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    /// The rows of instance `i`, one slice per view.
    pub fn instance(&self, i: usize) -> Vec<&[f64]> {
        self.views.iter().map(|m| m.row(i)).collect()
    }

    /// Replaces the split. The two index lists must partition `0..N`.
    pub fn with_split(mut self, train: Vec<usize>, test: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        for &i in train.iter().chain(&test) {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::domain(format!(
                    "split index {i} is out of range or repeated"
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::domain("split does not cover every instance"));
        }
        self.train = train;
        self.test = test;
        Ok(self)
    }

    /// SHA-256 over classes, dims, labels and feature bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.num_classes as u64).to_le_bytes());
        for m in &self.views {
            h.update((m.cols() as u64).to_le_bytes());
            for x in m.as_slice() {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        for y in &self.labels {
            h.update((*y as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))
}

fn parse_meta(path: &Path, text: &str) -> Result<(usize, usize, usize, Vec<usize>)> {
    let mut classes = None;
    let mut views = None;
    let mut instances = None;
    let mut dims = None;
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::load(path, format!("expected key = value, got {line:?}")))?;
        let value = value.trim();
        let num = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::load(path, format!("bad integer {v:?} for {}", key.trim())))
        };
        match key.trim() {
            "classes" => classes = Some(num(value)?),
            "views" => views = Some(num(value)?),
            "instances" => instances = Some(num(value)?),
            "dims" => dims = Some(value.split(',').map(num).collect::<Result<Vec<_>>>()?),
            other => return Err(Error::load(path, format!("unknown key {other:?}"))),
        }
    }
    let missing = |k: &str| Error::load(path, format!("missing key {k}"));
    let (k, v, n, d) = (
        classes.ok_or_else(|| missing("classes"))?,
        views.ok_or_else(|| missing("views"))?,
        instances.ok_or_else(|| missing("instances"))?,
        dims.ok_or_else(|| missing("dims"))?,
    );
    if d.len() != v {
        return Err(Error::load(
            path,
            format!("{} dims listed for {v} views", d.len()),
        ));
    }
    Ok((k, v, n, d))
}

fn parse_matrix(path: &Path, text: &str, rows: usize, cols: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * cols);
    let mut count = 0;
    for (r, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let before = data.len();
        for field in line.split(',') {
            let x: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::load(path, format!("row {}: bad number {field:?}", r + 1)))?;
            if !x.is_finite() {
                return Err(Error::load(
                    path,
                    format!("row {}: non-finite value", r + 1),
                ));
            }
            data.push(x);
        }
        if data.len() - before != cols {
            return Err(Error::load(
                path,
                format!(
                    "row {} has {} columns, expected {cols}",
                    r + 1,
                    data.len() - before
                ),
            ));
        }
        count += 1;
    }
    if count != rows {
        return Err(Error::load(path, format!("{count} rows, expected {rows}")));
    }
    Matrix::new(rows, cols, data)
}

/// Reads a dataset directory. All instances start in the training split.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta");
    let (k, v, n, dims) = parse_meta(&meta_path, &read(&meta_path)?)?;
    let mut views = Vec::with_capacity(v);
    for (i, &d) in dims.iter().enumerate() {
        let path = dir.join(format!("view{}.csv", i + 1));
        views.push(parse_matrix(&path, &read(&path)?, n, d)?);
    }
    let label_path = dir.join("labels.txt");
    let labels = read(&label_path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(r, l)| {
            let y: usize = l
                .parse()
                .map_err(|_| Error::load(&label_path, format!("row {}: bad label {l:?}", r + 1)))?;
            if y >= k {
                return Err(Error::load(
                    &label_path,
                    format!("row {}: label {y} out of range for {k} classes", r + 1),
                ));
            }
            Ok(y)
        })
        .collect::<Result<Vec<_>>>()?;
    if labels.len() != n {
        return Err(Error::load(
            &label_path,
            format!("{} labels, expected {n}", labels.len()),
        ));
    }
    MultiViewDataset::new(k, views, labels).map_err(|e| Error::load(dir, e.to_string()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_dataset(ds: &MultiViewDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let dims: Vec<String> = ds.dims().iter().map(usize::to_string).collect();
    write(
        &dir.join("meta"),
        &format!(
            "classes = {}\nviews = {}\ninstances = {}\ndims = {}\n",
            ds.num_classes(),
            ds.num_views(),
            ds.len(),
            dims.join(",")
        ),
    )?;
    for (v, m) in ds.views().iter().enumerate() {
        let mut text = String::new();
        for i in 0..m.rows() {
            for (j, x) in m.row(i).iter().enumerate() {
                if j > 0 {
                    text.push(',');
                }
                write!(text, "{x:.16e}").expect("writing to a String");
            }
            text.push('\n');
        }
        write(&dir.join(format!("view{}.csv", v + 1)), &text)?;
    }
    let labels: String = ds.labels().iter().map(|y| format!("{y}\n")).collect();
    write(&dir.join("labels.txt"), &labels)
}

/// Seeded shuffle, then the first `round(fraction · N)` instances train.
pub fn split(ds: MultiViewDataset, train_fraction: f64, seed: u64) -> Result<MultiViewDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::domain(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::domain(format!(
            "fraction {train_fraction} leaves an empty split for {n} instances"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, Stream::Split));
    let test = order.split_off(n_train);
    ds.with_split(order, test)
}

/// Appends a view whose rows concatenate every existing view, view 1 first.
pub fn make_pseudo_view(ds: &MultiViewDataset) -> MultiViewDataset {
    let total: usize = ds.dims().iter().sum();
    let mut pseudo = Matrix::zeros(ds.len(), total);
    for i in 0..ds.len() {
        let row = pseudo.row_mut(i);
        let mut offset = 0;
        for m in ds.views() {
            row[offset..offset + m.cols()].copy_from_slice(m.row(i));
            offset += m.cols();
        }
    }
    let mut out = ds.clone();
    out.views.push(pseudo);
    out
}

/// Per-view, per-feature training-split mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
}

impl Normalizer {
    pub fn fit(ds: &MultiViewDataset) -> Self {
        let (mean, std) = ds
            .views()
            .iter()
            .map(|m| column_stats(m, ds.train_indices()))
            .unzip();
        Self { mean, std }
    }

    /// z-scores one view row; zero-variance features map to 0.
    pub fn apply_row(&self, view: usize, row: &mut [f64]) {
        for ((x, m), s) in row.iter_mut().zip(&self.mean[view]).zip(&self.std[view]) {
            *x = if *s > 0.0 { (*x - m) / s } else { 0.0 };
        }
    }

    pub fn apply(&self, ds: &MultiViewDataset) -> Result<MultiViewDataset> {
        if self.mean.len() != ds.num_views() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                actual: ds.num_views(),
            });
        }
        let mut out = ds.clone();
        for (v, m) in out.views.iter_mut().enumerate() {
            if m.cols() != self.mean[v].len() {
                return Err(Error::Dimension {
                    expected: self.mean[v].len(),
                    actual: m.cols(),
                });
            }
            for i in 0..m.rows() {
                self.apply_row(v, m.row_mut(i));
            }
        }
        Ok(out)
    }
}

/// Population mean and standard deviation over the given rows.
fn column_stats(m: &Matrix, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len().max(1) as f64;
    let mut mean = vec![0.0; m.cols()];
    for &i in rows {
        for (acc, x) in mean.iter_mut().zip(m.row(i)) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= n);
    let mut var = vec![0.0; m.cols()];
    for &i in rows {
        for ((acc, x), mu) in var.iter_mut().zip(m.row(i)).zip(&mean) {
            *acc += (x - mu) * (x - mu);
        }
    }
    (mean, var.into_iter().map(|v| (v / n).sqrt()).collect())
}

/// z-scores every view with training-split statistics.
pub fn normalize(ds: &MultiViewDataset) -> MultiViewDataset {
    Normalizer::fit(ds)
        .apply(ds)
        .expect("normalizer fitted on the same dataset")
}

/// Generator settings for [`synth_conflict`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub num_views: usize,
    pub num_instances: usize,
    pub dim: usize,
    /// Distance scale of class means, per view.
    pub separation: Vec<f64>,
    /// Isotropic noise standard deviation, per view.
    pub noise: Vec<f64>,
    /// Zero-based indices of misleading views.
    pub misleading: Vec<usize>,
    /// Label permutation applied by misleading views.
    pub permutation: Vec<usize>,
    /// Fraction of instances a misleading view draws at the permuted mean.
    pub mislead_rate: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// All views faithful. Views added to `misleading` swap classes 0 and 1
    /// for half of their instances.
    pub fn new(num_classes: usize, num_views: usize, num_instances: usize, seed: u64) -> Self {
        let mut permutation: Vec<usize> = (0..num_classes).collect();
        if num_classes >= 2 {
            permutation.swap(0, 1);
        }
        Self {
            num_classes,
            num_views,
            num_instances,
            dim: 8,
            separation: vec![3.0; num_views],
            noise: vec![1.0; num_views],
            misleading: Vec::new(),
            permutation,
            mislead_rate: 0.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::domain(m));
        if self.num_classes < 2 || self.num_views == 0 || self.num_instances == 0 || self.dim == 0 {
            return err("synthetic spec needs K ≥ 2, V ≥ 1, N ≥ 1 and dim ≥ 1".into());
        }
        if self.separation.len() != self.num_views || self.noise.len() != self.num_views {
            return err("separation and noise need one entry per view".into());
        }
        if self.separation.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return err("separation must be positive".into());
        }
        if self.noise.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return err("noise must be nonnegative".into());
        }
        if let Some(v) = self.misleading.iter().find(|&&v| v >= self.num_views) {
            return err(format!("misleading view {} does not exist", v + 1));
        }
        let mut sorted = self.permutation.clone();
        sorted.sort_unstable();
        if sorted != (0..self.num_classes).collect::<Vec<_>>() {
            return err(format!(
                "{:?} is not a permutation of the classes",
                self.permutation
            ));
        }
        if !(0.0..=1.0).contains(&self.mislead_rate) {
            return err("mislead rate must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Gaussian class clusters per view. A misleading view places an instance
/// of class `k` at the mean of `permutation[k]` with probability
/// `mislead_rate`; faithful views always use the true class mean.
pub fn synth_conflict(spec: &SynthSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, Stream::Synth);
    let (k, n, d) = (spec.num_classes, spec.num_instances, spec.dim);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let means: Vec<Vec<Vec<f64>>> = spec
        .separation
        .iter()
        .map(|&sep| {
            (0..k)
                .map(|_| (0..d).map(|_| sep * std_normal.sample(&mut rng)).collect())
                .collect()
        })
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let mut views = Vec::with_capacity(spec.num_views);
    for v in 0..spec.num_views {
        let misleading = spec.misleading.contains(&v);
        let mut m = Matrix::zeros(n, d);
        for (i, &y) in labels.iter().enumerate() {
            let flip = misleading && rng.random::<f64>() < spec.mislead_rate;
            let mean = &means[v][if flip { spec.permutation[y] } else { y }];
            for (x, mu) in m.row_mut(i).iter_mut().zip(mean) {
                *x = mu + spec.noise[v] * std_normal.sample(&mut rng);
            }
        }
        views.push(m);
    }
    MultiViewDataset::new(k, views, labels)
}

/// Adds Gaussian noise with standard deviation `level · σ_train` to one
/// randomly chosen view of a random `fraction` of test instances.
pub fn inject_noise(
    ds: &MultiViewDataset,
    level: f64,
    fraction: f64,
    seed: u64,
) -> Result<MultiViewDataset> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::domain(format!(
            "noise level must be ≥ 0, got {level}"
        )));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::domain(format!(
            "noise fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let mut out = ds.clone();
    if level == 0.0 || fraction == 0.0 {
        return Ok(out);
    }
    let stds: Vec<Vec<f64>> = ds
        .views()
        .iter()
        .map(|m| column_stats(m, ds.train_indices()).1)
        .collect();
    let mut rng = stream_rng(seed, Stream::Noise);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut chosen = ds.test_indices().to_vec();
    chosen.shuffle(&mut rng);
    chosen.truncate((fraction * chosen.len() as f64).round() as usize);
    chosen.sort_unstable();
    for i in chosen {
        let v = rng.random_range(0..ds.num_views());
        for (x, s) in out.views[v].row_mut(i).iter_mut().zip(&stds[v]) {
            *x += level * s * std_normal.sample(&mut rng);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> MultiViewDataset {
        let a = Matrix::new(4, 3, (0..12).map(f64::from).collect()).unwrap();
        let b = Matrix::new(4, 4, (0..16).map(|x| f64::from(x) * 0.5 - 1.0).collect()).unwrap();
        MultiViewDataset::new(2, vec![a, b], vec![0, 1, 1, 0]).unwrap()
    }

    #[test]
    fn rejects_bad_datasets() {
        let a = Matrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        assert!(MultiViewDataset::new(2, vec![a.clone()], vec![0, 2]).is_err());
        assert!(MultiViewDataset::new(2, vec![a.clone()], vec![0]).is_err());
        let nan = Matrix::new(2, 1, vec![1.0, f64::NAN]).unwrap();
        assert!(MultiViewDataset::new(2, vec![nan], vec![0, 1]).is_err());
        assert!(Matrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn split_partitions() {
        let spec = SynthSpec::new(10, 1, 2000, 3);
        let ds = split(synth_conflict(&spec).unwrap(), 0.8, 9).unwrap();
        assert_eq!(ds.train_indices().len(), 1600);
        assert_eq!(ds.test_indices().len(), 400);
        let mut all: Vec<usize> = ds
            .train_indices()
            .iter()
            .chain(ds.test_indices())
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..2000).collect::<Vec<_>>());
        let again = split(synth_conflict(&spec).unwrap(), 0.8, 9).unwrap();
        assert_eq!(ds.train_indices(), again.train_indices());
        assert!(split(toy(), 1.0, 0).is_err());
        assert!(split(toy(), 0.0, 0).is_err());
    }

    #[test]
    fn pseudo_view_concatenates() {
        let ds = make_pseudo_view(&toy());
        assert_eq!(ds.dims(), vec![3, 4, 7]);
        let want: Vec<f64> = ds
            .view(0)
            .row(2)
            .iter()
            .chain(ds.view(1).row(2))
            .copied()
            .collect();
        assert_eq!(ds.view(2).row(2), want.as_slice());
    }

    #[test]
    fn normalize_uses_train_stats() {
        let a = Matrix::new(4, 2, vec![1.0, 5.0, 3.0, 5.0, 5.0, 5.0, 100.0, 5.0]).unwrap();
        let ds = MultiViewDataset::new(2, vec![a], vec![0, 1, 0, 1])
            .unwrap()
            .with_split(vec![0, 1, 2], vec![3])
            .unwrap();
        let z = normalize(&ds);
        let mean: f64 = ds
            .train_indices()
            .iter()
            .map(|&i| z.view(0).row(i)[0])
            .sum::<f64>()
            / 3.0;
        assert!(mean.abs() < 1e-10);
        assert!((0..4).all(|i| z.view(0).row(i)[1] == 0.0));

        // Changing a test row leaves the training statistics alone.
        let mut views = ds.views().to_vec();
        views[0].row_mut(3)[0] = -7.0;
        let perturbed = MultiViewDataset::new(2, views, vec![0, 1, 0, 1])
            .unwrap()
            .with_split(vec![0, 1, 2], vec![3])
            .unwrap();
        assert_eq!(Normalizer::fit(&ds), Normalizer::fit(&perturbed));
    }

    #[test]
    fn synth_is_seeded() {
        let mut spec = SynthSpec::new(3, 2, 30, 5);
        spec.misleading = vec![1];
        assert_eq!(
            synth_conflict(&spec).unwrap(),
            synth_conflict(&spec).unwrap()
        );
        spec.seed = 6;
        let other = synth_conflict(&spec).unwrap();
        spec.seed = 5;
        assert_ne!(synth_conflict(&spec).unwrap(), other);
        spec.misleading = vec![2];
        assert!(synth_conflict(&spec).is_err());
    }

    #[test]
    fn noise_noops() {
        let ds = split(toy(), 0.5, 1).unwrap();
        assert_eq!(inject_noise(&ds, 0.0, 1.0, 3).unwrap(), ds);
        assert_eq!(inject_noise(&ds, 5.0, 0.0, 3).unwrap(), ds);
        let noisy = inject_noise(&ds, 5.0, 1.0, 3).unwrap();
        for &i in ds.train_indices() {
            assert_eq!(noisy.instance(i), ds.instance(i));
        }
        assert_ne!(noisy, ds);
        assert!(inject_noise(&ds, -1.0, 0.5, 3).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = toy();
        let b = split(toy(), 0.5, 1).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let mut views = a.views().to_vec();
        views[1].row_mut(0)[0] += 1e-9;
        let c = MultiViewDataset::new(2, views, a.labels().to_vec()).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}

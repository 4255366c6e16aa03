//! Datasets: the 12-bit synthetic task, MNIST IDX files and CSV.
//!
//! # The synthetic task
//!
//! Each of the 4096 patterns `x in {-1, +1}^12` assigns a sign to one of the
//! 12 vertices `u_k` of a regular icosahedron, i.e. 12 uniformly spread
//! points on the sphere. The pattern's score is a smooth radial function of
//! the signed resultant `v = sum_k x_k u_k`:
//!
//! ```text
//! score(x) = tanh(|v|^2 / 12) + 1e-6 * jitter(x)
//! ```
//!
//! `|v|^2` is invariant under the icosahedral rotations and under `x -> -x`,
//! so whole symmetry orbits share a radial score. Orbits can hold up to 240
//! patterns, too many to land a balanced threshold, so a seeded per-pattern
//! jitter in `[-1, 1)` breaks ties. The jitter is indexed by the pattern
//! bits, never by position. The label is `1` iff the score exceeds the
//! threshold; the default threshold is found by bisection so the classes
//! are balanced.
//!
//! The exact labeling rule of the original experiments is not recoverable
//! from their description, so externally generated files can be loaded
//! with [`import_csv`] instead.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::hex;
use crate::rates::FeatureMatrix;
use crate::scalar::Real;

/// Labeled samples stored as columns of a `D x M` matrix. `M` may be zero
/// (e.g. the test half of a `fraction = 1` split).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Matrix<T>,
    labels: Vec<usize>,
    num_classes: usize,
    name: String,
    checksum: String,
}

impl<T: Real> Dataset<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>, num_classes: usize, name: impl Into<String>) -> Result<Self> {
        if features.cols() != labels.len() {
            return Err(Error::Consistency(format!(
                "{} feature columns but {} labels",
                features.cols(),
                labels.len()
            )));
        }
        if num_classes == 0 {
            return Err(Error::input("num_classes must be positive"));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::input(format!("sample {i} has label {y} outside 0..{num_classes}")));
        }
        if !features.is_finite() {
            return Err(Error::input("dataset features must be finite"));
        }
        let checksum = checksum(&features, &labels, num_classes);
        Ok(Self {
            features,
            labels,
            num_classes,
            name: name.into(),
            checksum,
        })
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    /// The features as a validated [`FeatureMatrix`]; fails when empty.
    pub fn feature_matrix(&self) -> Result<FeatureMatrix<T>> {
        FeatureMatrix::new(self.features.clone())
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// SHA-256 (hex) over shape, features as little-endian `f64`, labels and
    /// class count.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn dim(&self) -> usize {
        self.features.rows()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_classes];
        for &y in &self.labels {
            c[y] += 1;
        }
        c
    }

    /// Samples at `idx`, in that order.
    pub fn select(&self, idx: &[usize], name: impl Into<String>) -> Result<Self> {
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        Self::new(self.features.select_columns(idx), labels, self.num_classes, name)
    }
}

fn checksum<T: Real>(features: &Matrix<T>, labels: &[usize], k: usize) -> String {
    let mut h = Sha256::new();
    h.update((features.rows() as u32).to_le_bytes());
    h.update((features.cols() as u32).to_le_bytes());
    for v in features.as_slice() {
        h.update(v.as_f64().to_le_bytes());
    }
    for &y in labels {
        h.update((y as u32).to_le_bytes());
    }
    h.update((k as u32).to_le_bytes());
    hex(&h.finalize())
}

pub const SZT_BITS: usize = 12;
const SZT_JITTER: f64 = 1e-6;

fn icosahedron() -> [[f64; 3]; 12] {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let norm = (1.0 + phi * phi).sqrt();
    let mut out = [[0.0; 3]; 12];
    let mut k = 0;
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            out[k] = [0.0, s1, s2 * phi];
            out[k + 1] = [s1, s2 * phi, 0.0];
            out[k + 2] = [s2 * phi, 0.0, s1];
            k += 3;
        }
    }
    for v in &mut out {
        for c in v.iter_mut() {
            *c /= norm;
        }
    }
    out
}

/// `x_k` of pattern `p`: `+1` when bit `k` is set.
#[inline]
fn szt_sign(p: usize, k: usize) -> f64 {
    if p >> k & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Scores of all 4096 patterns, indexed by pattern.
pub fn szt_scores(noise_seed: u64) -> Vec<f64> {
    let u = icosahedron();
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let jitter: Vec<f64> = (0..1 << SZT_BITS).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    (0..1usize << SZT_BITS)
        .map(|p| {
            let mut v = [0.0f64; 3];
            for (k, uk) in u.iter().enumerate() {
                let s = szt_sign(p, k);
                for c in 0..3 {
                    v[c] += s * uk[c];
                }
            }
            let r2 = v.iter().map(|c| c * c).sum::<f64>();
            (r2 / SZT_BITS as f64).tanh() + SZT_JITTER * jitter[p]
        })
        .collect()
}

/// Threshold that splits `scores` as close to half/half as bisection allows.
pub fn balanced_threshold(scores: &[f64]) -> f64 {
    let frac = |g: f64| scores.iter().filter(|&&s| s > g).count() as f64 / scores.len() as f64;
    let mut lo = scores.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = frac(mid);
        if f == 0.5 {
            return mid;
        }
        if f > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The synthetic binary task over all 4096 patterns, in pattern order.
/// `threshold = None` picks the balanced threshold.
pub fn gen_szt<T: Real>(threshold: Option<f64>, noise_seed: u64) -> Dataset<T> {
    let scores = szt_scores(noise_seed);
    let gamma = threshold.unwrap_or_else(|| balanced_threshold(&scores));
    let m = 1usize << SZT_BITS;
    let features = Matrix::from_fn(SZT_BITS, m, |k, p| T::lit(szt_sign(p, k)));
    let labels = scores.iter().map(|&s| usize::from(s > gamma)).collect();
    Dataset::new(features, labels, 2, "szt").expect("synthetic dataset is well formed")
}

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| {
            Error::format(format!(
                "{what}: truncated at byte offset {}, need 4 bytes at offset {offset}",
                bytes.len()
            ))
        })
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let found = read_be_u32(bytes, 0, what)?;
    if found != expected {
        return Err(Error::format(format!(
            "{what}: bad magic, expected 0x{expected:08x}, found 0x{found:08x}"
        )));
    }
    Ok(())
}

/// Raw IDX image file: count, rows, cols and the unsigned pixel bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    const WHAT: &str = "idx images";
    check_magic(bytes, IDX_IMAGES_MAGIC, WHAT)?;
    let count = read_be_u32(bytes, 4, WHAT)? as usize;
    let rows = read_be_u32(bytes, 8, WHAT)? as usize;
    let cols = read_be_u32(bytes, 12, WHAT)? as usize;
    let need = 16 + count * rows * cols;
    if bytes.len() < need {
        return Err(Error::format(format!(
            "{WHAT}: truncated at byte offset {}, expected {need} bytes",
            bytes.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..need].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    const WHAT: &str = "idx labels";
    check_magic(bytes, IDX_LABELS_MAGIC, WHAT)?;
    let count = read_be_u32(bytes, 4, WHAT)? as usize;
    let need = 8 + count;
    if bytes.len() < need {
        return Err(Error::format(format!(
            "{WHAT}: truncated at byte offset {}, expected {need} bytes",
            bytes.len()
        )));
    }
    Ok(bytes[8..need].to_vec())
}

pub fn write_idx_images<W: Write>(mut w: W, images: &IdxImages) -> Result<()> {
    if images.pixels.len() != images.count * images.rows * images.cols {
        return Err(Error::input("pixel buffer does not match image shape"));
    }
    w.write_all(&IDX_IMAGES_MAGIC.to_be_bytes())?;
    for v in [images.count, images.rows, images.cols] {
        w.write_all(&(v as u32).to_be_bytes())?;
    }
    w.write_all(&images.pixels)?;
    Ok(())
}

pub fn write_idx_labels<W: Write>(mut w: W, labels: &[u8]) -> Result<()> {
    w.write_all(&IDX_LABELS_MAGIC.to_be_bytes())?;
    w.write_all(&(labels.len() as u32).to_be_bytes())?;
    w.write_all(labels)?;
    Ok(())
}

/// Images and labels from IDX bytes; pixels scaled to `[0, 1]`, 10 classes.
pub fn mnist_from_idx_bytes<T: Real>(images: &[u8], labels: &[u8]) -> Result<Dataset<T>> {
    let img = parse_idx_images(images)?;
    let lab = parse_idx_labels(labels)?;
    if img.count != lab.len() {
        return Err(Error::Consistency(format!(
            "{} images but {} labels",
            img.count,
            lab.len()
        )));
    }
    if let Some((i, &y)) = lab.iter().enumerate().find(|(_, &y)| y > 9) {
        return Err(Error::format(format!("label {i} is {y}, expected a digit")));
    }
    let d = img.rows * img.cols;
    let scale = T::one() / T::lit(255.0);
    let data = img.pixels.iter().map(|&p| T::lit(p as f64) * scale).collect();
    let features = Matrix::from_col_major(d, img.count, data)?;
    Dataset::new(features, lab.iter().map(|&y| y as usize).collect(), 10, "mnist")
}

pub fn load_mnist_idx<T: Real>(images_path: &Path, labels_path: &Path) -> Result<Dataset<T>> {
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;
    mnist_from_idx_bytes(&images, &labels)
}

/// One sample per row, integer label in the last column. A first row whose
/// leading cell is not numeric is treated as a header.
pub fn read_csv_dataset<T: Real, R: BufRead>(r: R, num_classes: usize, name: &str) -> Result<Dataset<T>> {
    let mut samples: Vec<Vec<T>> = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in r.lines().enumerate() {
        let row = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && cells[0].parse::<f64>().is_err() {
            continue;
        }
        if cells.len() < 2 {
            return Err(Error::format(format!("row {row}: need at least one feature and a label")));
        }
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::format(format!("row {row}: {} cells, expected {w}", cells.len())));
            }
            Some(_) => {}
        }
        let (label_cell, feature_cells) = cells.split_last().unwrap();
        let label: usize = label_cell
            .parse()
            .map_err(|_| Error::format(format!("row {row}: label {label_cell:?} is not a class index")))?;
        if label >= num_classes {
            return Err(Error::format(format!(
                "row {row}: label {label} outside 0..{num_classes}"
            )));
        }
        let feats = feature_cells
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| Error::format(format!("row {row}: non-numeric cell {c:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        samples.push(feats);
        labels.push(label);
    }
    if samples.is_empty() {
        return Err(Error::format("CSV holds no samples"));
    }
    let features = Matrix::from_rows(&samples)?.transpose();
    Dataset::new(features, labels, num_classes, name)
}

pub fn import_csv<T: Real>(path: &Path, num_classes: usize) -> Result<Dataset<T>> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("csv");
    read_csv_dataset(BufReader::new(fs::File::open(path)?), num_classes, name)
}

/// Header `f0..f{D-1},label`; features with 9 significant digits.
pub fn export_csv<T: Real, W: Write>(ds: &Dataset<T>, mut w: W) -> Result<()> {
    let mut header: Vec<String> = (0..ds.dim()).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    writeln!(w, "{}", header.join(","))?;
    for j in 0..ds.len() {
        let mut row: Vec<String> = ds.features.col(j).iter().map(|v| format!("{:.8e}", v.as_f64())).collect();
        row.push(ds.labels[j].to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn shuffled_members(ds_labels: &[usize], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k];
    for (i, &y) in ds_labels.iter().enumerate() {
        members[y].push(i);
    }
    for m in &mut members {
        for i in (1..m.len()).rev() {
            let j = rng.random_range(0..=i);
            m.swap(i, j);
        }
    }
    members
}

/// `n` samples drawn without replacement, stratified by label with
/// largest-remainder quotas; original order is kept.
pub fn subsample<T: Real>(ds: &Dataset<T>, n: usize, seed: u64) -> Result<Dataset<T>> {
    let m = ds.len();
    if n > m {
        return Err(Error::input(format!("cannot draw {n} samples from {m}")));
    }
    let counts = ds.class_counts();
    let exact: Vec<f64> = counts.iter().map(|&c| n as f64 * c as f64 / m.max(1) as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut missing = n - quota.iter().sum::<usize>();
    for &c in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        if quota[c] < counts[c] {
            quota[c] += 1;
            missing -= 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = shuffled_members(&ds.labels, ds.num_classes, &mut rng);
    let mut idx: Vec<usize> = members
        .iter()
        .zip(&quota)
        .flat_map(|(m, &q)| m[..q].iter().copied())
        .collect();
    idx.sort_unstable();
    ds.select(&idx, ds.name.clone())
}

/// Stratified split: each class sends `round(fraction * n_c)` samples to the
/// training half. Both halves keep the original order.
pub fn split<T: Real>(ds: &Dataset<T>, fraction: f64, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::input(format!("split fraction must lie in [0, 1], got {fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = shuffled_members(&ds.labels, ds.num_classes, &mut rng);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for m in &members {
        let k = (fraction * m.len() as f64).round() as usize;
        train.extend_from_slice(&m[..k]);
        test.extend_from_slice(&m[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((
        ds.select(&train, format!("{}-train", ds.name))?,
        ds.select(&test, format!("{}-test", ds.name))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_is_uniform() {
        let u = icosahedron();
        for v in &u {
            assert!((v.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // every vertex has one antipode and five neighbours at 1/sqrt(5)
        for a in &u {
            let mut dots: Vec<f64> = u.iter().map(|b| a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).collect();
            dots.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert!((dots[0] + 1.0).abs() < 1e-12);
            assert!((dots[11] - 1.0).abs() < 1e-12);
            let s5 = 1.0 / 5f64.sqrt();
            assert_eq!(dots.iter().filter(|d| (**d - s5).abs() < 1e-12).count(), 5);
            assert_eq!(dots.iter().filter(|d| (**d + s5).abs() < 1e-12).count(), 5);
        }
    }

    #[test]
    fn szt_has_all_patterns_and_balance() {
        let ds = gen_szt::<f64>(None, 0);
        assert_eq!(ds.len(), 4096);
        assert_eq!(ds.dim(), 12);
        let pos = ds.labels().iter().filter(|&&y| y == 1).count() as f64 / 4096.0;
        assert!((0.49..=0.51).contains(&pos), "{pos}");
    }

    #[test]
    fn szt_extreme_thresholds() {
        let all1 = gen_szt::<f64>(Some(f64::NEG_INFINITY), 0);
        assert!(all1.labels().iter().all(|&y| y == 1));
        let all0 = gen_szt::<f64>(Some(f64::INFINITY), 0);
        assert!(all0.labels().iter().all(|&y| y == 0));
    }

    #[test]
    fn szt_labels_flip_invariant_up_to_jitter() {
        // |v|^2 is even in x; with the jitter disabled the labels of x and -x
        // can only differ where the radial scores tie.
        let s = szt_scores(3);
        let mut agree = 0;
        for p in 0..4096usize {
            let q = !p & 0xfff;
            if (s[p] - s[q]).abs() <= 2.0 * SZT_JITTER {
                agree += 1;
            }
        }
        assert_eq!(agree, 4096);
    }

    #[test]
    fn idx_round_trip() {
        let images = IdxImages {
            count: 2,
            rows: 2,
            cols: 3,
            pixels: vec![0, 255, 17, 3, 4, 5, 6, 7, 8, 9, 10, 128],
        };
        let mut ib = Vec::new();
        write_idx_images(&mut ib, &images).unwrap();
        let mut lb = Vec::new();
        write_idx_labels(&mut lb, &[3, 9]).unwrap();
        assert_eq!(parse_idx_images(&ib).unwrap(), images);
        let ds = mnist_from_idx_bytes::<f64>(&ib, &lb).unwrap();
        assert_eq!(ds.dim(), 6);
        assert_eq!(ds.labels(), &[3, 9]);
        assert_eq!(ds.features()[(1, 0)], 1.0);
        assert_eq!(ds.features()[(5, 1)], 128.0 / 255.0);
    }

    #[test]
    fn idx_bad_magic_and_truncation() {
        let mut lb = Vec::new();
        write_idx_labels(&mut lb, &[1, 2, 3]).unwrap();
        let err = parse_idx_images(&lb).unwrap_err().to_string();
        assert!(err.contains("expected 0x00000803") && err.contains("found 0x00000801"), "{err}");
        let err = parse_idx_labels(&lb[..9]).unwrap_err().to_string();
        assert!(err.contains("byte offset 9"), "{err}");
    }

    #[test]
    fn idx_count_mismatch() {
        let images = IdxImages {
            count: 1,
            rows: 1,
            cols: 1,
            pixels: vec![1],
        };
        let mut ib = Vec::new();
        write_idx_images(&mut ib, &images).unwrap();
        let mut lb = Vec::new();
        write_idx_labels(&mut lb, &[1, 2]).unwrap();
        assert!(matches!(mnist_from_idx_bytes::<f64>(&ib, &lb), Err(Error::Consistency(_))));
    }

    #[test]
    fn csv_fixture() {
        let text = "a,b,label\n0.5,-1,1\n2,3.25,0\n1e-3,0,2\n";
        let ds = read_csv_dataset::<f64, _>(text.as_bytes(), 3, "t").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels(), &[1, 0, 2]);
        assert_eq!(ds.features().col(0), &[0.5, -1.0]);
        assert_eq!(ds.features().col(2), &[1e-3, 0.0]);
        // header is optional
        let ds2 = read_csv_dataset::<f64, _>("0.5,-1,1\n2,3.25,0\n1e-3,0,2\n".as_bytes(), 3, "t").unwrap();
        assert_eq!(ds.checksum(), ds2.checksum());
    }

    #[test]
    fn csv_errors_name_rows() {
        let cases = [
            ("", "no samples"),
            ("1,2,0\n1,0\n", "row 2"),
            ("1,2,0\n1,x,1\n", "row 2"),
            ("1,2,0\n1,2,5\n", "row 2"),
        ];
        for (text, needle) in cases {
            let err = read_csv_dataset::<f64, _>(text.as_bytes(), 2, "t").unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?}: {err}");
        }
    }

    #[test]
    fn subsample_identity_and_bounds() {
        let ds = gen_szt::<f64>(None, 1);
        let same = subsample(&ds, ds.len(), 5).unwrap();
        assert_eq!(same.checksum(), ds.checksum());
        assert!(subsample(&ds, ds.len() + 1, 5).is_err());
        let small = subsample(&ds, 100, 5).unwrap();
        assert_eq!(small.len(), 100);
        assert_eq!(small.checksum(), subsample(&ds, 100, 5).unwrap().checksum());
    }

    #[test]
    fn split_full_fraction_leaves_empty_test() {
        let ds = gen_szt::<f64>(None, 1);
        let (train, test) = split(&ds, 1.0, 9).unwrap();
        assert_eq!(train.len(), ds.len());
        assert!(test.is_empty());
        assert!(split(&ds, 1.5, 9).is_err());
    }
}

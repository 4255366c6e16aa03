//! Coding-rate quantities of a feature matrix.
//!
//! With `Z` a `d x M` matrix whose columns are samples and `eps` a coding
//! precision, the whole-set rate is
//!
//! ```text
//! R(Z, eps)       = 1/2 ln det(E + d/(M eps^2) Z Z^T)
//! R^c(Z, eps | P) = 1/2 sum_j (n_j/M) ln det(E + d/(n_j eps^2) Z_j Z_j^T)
//! dR              = R - R^c
//! ```
//!
//! where `Z_j` holds the `n_j` columns assigned to class `j`. All values are
//! in nats; use [`crate::scalar::nats_to_bits`] when displaying.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// A `d x M` matrix of finite features, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    values: Matrix<T>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(values: Matrix<T>) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::input(format!(
                "feature matrix must be at least 1x1, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if !values.is_finite() {
            return Err(Error::input("feature matrix has non-finite entries"));
        }
        Ok(Self { values })
    }

    /// `samples[i]` becomes column `i`.
    pub fn from_samples(samples: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(samples)?.transpose())
    }

    pub fn dim(&self) -> usize {
        self.values.rows()
    }

    pub fn samples(&self) -> usize {
        self.values.cols()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.values
    }

    pub fn sample(&self, i: usize) -> &[T] {
        self.values.col(i)
    }

    /// Subtracts each row's sample mean.
    pub fn centered(&self) -> Self {
        let (d, m) = self.values.shape();
        let n = T::from_count(m);
        let means: Vec<T> = (0..d)
            .map(|i| (0..m).map(|j| self.values[(i, j)]).sum::<T>() / n)
            .collect();
        Self {
            values: Matrix::from_fn(d, m, |i, j| self.values[(i, j)] - means[i]),
        }
    }

    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(self.values.scaled(c))
    }

    pub fn select_samples(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.values.select_columns(idx))
    }

    /// CSV with header `f0..f{d-1}` and one sample per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim()).map(|i| format!("f{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for j in 0..self.samples() {
            let row: Vec<String> = self.sample(j).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 && line.starts_with('f') {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map(T::lit).map_err(|_| {
                        Error::format(format!("row {}: non-numeric cell {c:?}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::format(format!(
                        "row {}: {} cells, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::format("no samples in feature CSV"));
        }
        Self::from_samples(&rows)
    }

    /// Binary layout: `u32 d, u32 M, f64[d*M]` column-major, little endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let d = u32::try_from(self.dim()).map_err(|_| Error::input("dimension exceeds u32"))?;
        let m = u32::try_from(self.samples()).map_err(|_| Error::input("sample count exceeds u32"))?;
        let mut buf = Vec::with_capacity(8 + 8 * self.dim() * self.samples());
        buf.extend_from_slice(&d.to_le_bytes());
        buf.extend_from_slice(&m.to_le_bytes());
        for v in self.values.as_slice() {
            buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 8 {
            return Err(Error::format(format!(
                "feature file truncated at byte {} (header needs 8)",
                bytes.len()
            )));
        }
        let d = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let m = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let need = 8 + 8 * d * m;
        if bytes.len() != need {
            return Err(Error::format(format!(
                "feature file for {d}x{m} needs {need} bytes, found {}",
                bytes.len()
            )));
        }
        let data = bytes[8..]
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Self::new(Matrix::from_col_major(d, m, data)?)
    }
}

/// Class assignment of every sample; realizes the diagonal membership
/// matrices as index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    classes: usize,
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Partition {
    /// Every class in `0..classes` must own at least one sample.
    pub fn new(assignment: Vec<usize>, classes: usize) -> Result<Self> {
        if classes == 0 {
            return Err(Error::PartitionDomain("class count must be positive".into()));
        }
        let mut members = vec![Vec::new(); classes];
        for (i, &c) in assignment.iter().enumerate() {
            if c >= classes {
                return Err(Error::PartitionDomain(format!(
                    "sample {i} has class {c}, outside 0..{classes}"
                )));
            }
            members[c].push(i);
        }
        if let Some(j) = members.iter().position(Vec::is_empty) {
            return Err(Error::PartitionDomain(format!("class {j} is empty")));
        }
        Ok(Self {
            classes,
            assignment,
            members,
        })
    }

    /// Infers the class count as `max + 1`.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(labels.to_vec(), k)
    }

    /// All `m` samples in one class.
    pub fn single(m: usize) -> Self {
        Self {
            classes: 1,
            assignment: vec![0; m],
            members: vec![(0..m).collect()],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Sample indices of class `j`, ascending.
    pub fn members(&self, j: usize) -> &[usize] {
        &self.members[j]
    }

    /// `tr(Pi_j)`.
    pub fn class_size(&self, j: usize) -> usize {
        self.members[j].len()
    }

    /// Diagonal of `Pi_j`.
    pub fn membership_diagonal(&self, j: usize) -> Vec<u8> {
        self.assignment.iter().map(|&c| u8::from(c == j)).collect()
    }
}

/// Coding precision `eps > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision<T>(T);

impl<T: Real> Precision<T> {
    pub fn new(eps: T) -> Result<Self> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(Error::input(format!("precision must be finite and > 0, got {eps}")));
        }
        Ok(Self(eps))
    }

    pub fn get(self) -> T {
        self.0
    }
}

/// Which Gram matrix a log-determinant is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSide {
    /// `E_d + a Z Z^T`
    Feature,
    /// `E_M + a Z^T Z`
    Sample,
}

/// `ln det(E_d + alpha Z Z^T)`, factored on the smaller Gram side.
pub fn logdet_gram<T: Real>(z: &Matrix<T>, alpha: T) -> Result<T> {
    let side = if z.rows() <= z.cols() {
        GramSide::Feature
    } else {
        GramSide::Sample
    };
    logdet_gram_on(z, alpha, side)
}

/// As [`logdet_gram`] with an explicit side. Both sides give the same value.
pub fn logdet_gram_on<T: Real>(z: &Matrix<T>, alpha: T, side: GramSide) -> Result<T> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::input(format!("gram scale must be finite and > 0, got {alpha}")));
    }
    if !z.is_finite() {
        return Err(Error::input("non-finite entries in gram input"));
    }
    let g = match side {
        GramSide::Feature => z.outer_gram(),
        GramSide::Sample => z.inner_gram(),
    };
    let a = g.scaled(alpha).add_scaled_identity(T::one());
    Ok(a.cholesky()?.log_det())
}

/// `R(Z, eps)` in nats.
pub fn coding_rate<T: Real>(z: &FeatureMatrix<T>, eps: Precision<T>) -> Result<T> {
    let (d, m) = z.matrix().shape();
    let e = eps.get();
    let alpha = T::from_count(d) / (T::from_count(m) * e * e);
    Ok(logdet_gram(z.matrix(), alpha)? * T::lit(0.5))
}

fn check_partition<T: Real>(z: &FeatureMatrix<T>, p: &Partition) -> Result<()> {
    if p.len() != z.samples() {
        return Err(Error::input(format!(
            "partition covers {} samples, feature matrix has {}",
            p.len(),
            z.samples()
        )));
    }
    Ok(())
}

/// Per-class terms `(n_j / M, ln det(E + d/(n_j eps^2) Z_j Z_j^T))`.
pub(crate) fn class_logdets<T: Real>(
    z: &FeatureMatrix<T>,
    p: &Partition,
    eps: Precision<T>,
) -> Result<Vec<(T, T)>> {
    check_partition(z, p)?;
    let (d, m) = z.matrix().shape();
    let e2 = eps.get() * eps.get();
    (0..p.classes())
        .map(|j| {
            let nj = p.class_size(j);
            let zj = z.matrix().select_columns(p.members(j));
            let alpha = T::from_count(d) / (T::from_count(nj) * e2);
            let weight = T::from_count(nj) / T::from_count(m);
            Ok((weight, logdet_gram(&zj, alpha)?))
        })
        .collect()
}

/// `R^c(Z, eps | Pi)` in nats.
pub fn conditional_coding_rate<T: Real>(
    z: &FeatureMatrix<T>,
    p: &Partition,
    eps: Precision<T>,
) -> Result<T> {
    let terms = class_logdets(z, p, eps)?;
    Ok(terms.iter().map(|&(w, ld)| w * ld).sum::<T>() * T::lit(0.5))
}

/// `dR(Z, eps, Pi) = R - R^c` in nats.
pub fn rate_reduction<T: Real>(z: &FeatureMatrix<T>, p: &Partition, eps: Precision<T>) -> Result<T> {
    Ok(coding_rate(z, eps)? - conditional_coding_rate(z, p, eps)?)
}

/// All three rate quantities of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSummary<T> {
    pub rate: T,
    pub conditional_rate: T,
    pub reduction: T,
}

pub fn rate_summary<T: Real>(
    z: &FeatureMatrix<T>,
    p: &Partition,
    eps: Precision<T>,
) -> Result<RateSummary<T>> {
    let rate = coding_rate(z, eps)?;
    let conditional_rate = conditional_coding_rate(z, p, eps)?;
    Ok(RateSummary {
        rate,
        conditional_rate,
        reduction: rate - conditional_rate,
    })
}

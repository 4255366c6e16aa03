//! Information-bottleneck objectives and their linear-Gaussian closed forms.
//!
//! The IB Lagrangian `I(X;Z) - beta I(Y;Z)` is rewritten by adding the zero
//! term `beta (H(Z|X) - H(Z|X))`, which gives
//!
//! ```text
//! (1 - beta) (H(Z) - H(Z|X)) + beta (H(Z|Y) - H(Z|X))
//! ```
//!
//! Under a linear map with additive Gaussian noise of covariance
//! `(eps^2/d) E`, every entropy is a Gaussian log-determinant and the
//! objective becomes `(1 - beta) R + beta R^c` in terms of the coding
//! rates of [`crate::rates`]. Its negation equals `beta dR - R`, so
//! `-dI / beta` approaches `dR` with error exactly `R / beta`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rates::{class_logdets, logdet_gram, FeatureMatrix, Partition, Precision};
use crate::scalar::Real;

/// Trade-off parameter `beta > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffBeta<T>(T);

impl<T: Real> TradeoffBeta<T> {
    pub fn new(beta: T) -> Result<Self> {
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::input(format!("beta must be finite and > 0, got {beta}")));
        }
        Ok(Self(beta))
    }

    pub fn get(self) -> T {
        self.0
    }
}

/// Default sweep for [`verify_special_case`].
pub const DEFAULT_BETAS: [f64; 7] = [0.5, 1.0, 2.0, 10.0, 100.0, 1000.0, 10000.0];

/// Whether entropies came from a discrete (plug-in) estimator or from
/// differential-entropy formulas. Only discrete entropies must obey
/// `H(Z|.) <= H(Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyRegime {
    Discrete,
    Differential,
}

/// `(H(Z), H(Z|X), H(Z|Y))` in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyTriple<T> {
    h_z: T,
    h_z_given_x: T,
    h_z_given_y: T,
    regime: EntropyRegime,
}

impl<T: Real> EntropyTriple<T> {
    pub fn new(h_z: T, h_z_given_x: T, h_z_given_y: T, regime: EntropyRegime) -> Result<Self> {
        if !(h_z.is_finite() && h_z_given_x.is_finite() && h_z_given_y.is_finite()) {
            return Err(Error::input("entropy triple has non-finite entries"));
        }
        if regime == EntropyRegime::Discrete {
            let slack = T::lit(1e-9);
            if h_z_given_x > h_z + slack || h_z_given_y > h_z + slack {
                return Err(Error::input(format!(
                    "conditioning increased a discrete entropy: H(Z)={h_z}, H(Z|X)={h_z_given_x}, H(Z|Y)={h_z_given_y}"
                )));
            }
        }
        Ok(Self {
            h_z,
            h_z_given_x,
            h_z_given_y,
            regime,
        })
    }

    pub fn h_z(&self) -> T {
        self.h_z
    }

    pub fn h_z_given_x(&self) -> T {
        self.h_z_given_x
    }

    pub fn h_z_given_y(&self) -> T {
        self.h_z_given_y
    }

    pub fn regime(&self) -> EntropyRegime {
        self.regime
    }

    /// `I(X;Z) = H(Z) - H(Z|X)`.
    pub fn mi_xz(&self) -> T {
        self.h_z - self.h_z_given_x
    }

    /// `I(Y;Z) = H(Z) - H(Z|Y)`.
    pub fn mi_yz(&self) -> T {
        self.h_z - self.h_z_given_y
    }
}

/// `I(X;Z) - beta I(Y;Z)`.
pub fn ib_lagrangian<T: Real>(mi_xz: T, mi_yz: T, beta: TradeoffBeta<T>) -> Result<T> {
    if !mi_xz.is_finite() || !mi_yz.is_finite() {
        return Err(Error::input("mutual information values must be finite"));
    }
    Ok(mi_xz - beta.get() * mi_yz)
}

/// The two terms of the transformed objective, kept apart so the sign of
/// the `I(X;Z)` term can be inspected on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedIb<T> {
    /// `(1 - beta) (H(Z) - H(Z|X))`: positive for `beta < 1` when
    /// `H(Z) > H(Z|X)`, zero at `beta = 1`, negative above.
    pub input_term: T,
    /// `beta (H(Z|Y) - H(Z|X))`.
    pub label_term: T,
}

impl<T: Real> TransformedIb<T> {
    pub fn total(&self) -> T {
        self.input_term + self.label_term
    }
}

pub fn transformed_ib_terms<T: Real>(e: &EntropyTriple<T>, beta: TradeoffBeta<T>) -> TransformedIb<T> {
    let b = beta.get();
    TransformedIb {
        input_term: (T::one() - b) * (e.h_z - e.h_z_given_x),
        label_term: b * (e.h_z_given_y - e.h_z_given_x),
    }
}

pub fn transformed_ib<T: Real>(e: &EntropyTriple<T>, beta: TradeoffBeta<T>) -> T {
    transformed_ib_terms(e, beta).total()
}

/// Linear map `Theta` (`d x D`), input covariance `Sigma_X` (`D x D`) and
/// coding precision for the channel `z_hat = Theta x + c`,
/// `c ~ N(0, (eps^2/d) E)`.
#[derive(Debug, Clone)]
pub struct GaussianChannel<T> {
    theta: Matrix<T>,
    sigma_x: Matrix<T>,
    eps: Precision<T>,
}

impl<T: Real> GaussianChannel<T> {
    pub fn new(theta: Matrix<T>, sigma_x: Matrix<T>, eps: Precision<T>) -> Result<Self> {
        if !theta.is_finite() || !sigma_x.is_finite() {
            return Err(Error::input("channel matrices must be finite"));
        }
        if theta.rows() == 0 || theta.cols() == 0 {
            return Err(Error::input("theta must be non-empty"));
        }
        if sigma_x.shape() != (theta.cols(), theta.cols()) {
            return Err(Error::input(format!(
                "sigma_x is {:?}, theta needs {}x{}",
                sigma_x.shape(),
                theta.cols(),
                theta.cols()
            )));
        }
        let tol = T::lit(1e-10);
        if !sigma_x.is_symmetric(tol) {
            return Err(Error::input("sigma_x is not symmetric"));
        }
        let min_ev = sigma_x.symmetric_eigenvalues()?[0];
        if min_ev < -tol {
            return Err(Error::input(format!(
                "sigma_x is not positive semidefinite (min eigenvalue {:.6e})",
                min_ev.as_f64()
            )));
        }
        Ok(Self { theta, sigma_x, eps })
    }

    /// Channel whose input covariance is the empirical `(1/M) X X^T`.
    pub fn from_samples(theta: Matrix<T>, x: &FeatureMatrix<T>, eps: Precision<T>) -> Result<Self> {
        let m = T::from_count(x.samples());
        let sigma_x = x.matrix().outer_gram().scaled(T::one() / m);
        Self::new(theta, sigma_x, eps)
    }

    pub fn output_dim(&self) -> usize {
        self.theta.rows()
    }

    pub fn theta(&self) -> &Matrix<T> {
        &self.theta
    }

    pub fn sigma_x(&self) -> &Matrix<T> {
        &self.sigma_x
    }

    pub fn precision(&self) -> Precision<T> {
        self.eps
    }

    /// Noise variance `eps^2 / d` on each output coordinate.
    pub fn noise_variance(&self) -> T {
        let e = self.eps.get();
        e * e / T::from_count(self.output_dim())
    }
}

/// Joint covariance blocks of `(X, Z_hat)` and the conditional covariance
/// computed two ways.
#[derive(Debug, Clone)]
pub struct SchurCovariances<T> {
    /// `Theta Sigma_X Theta^T + (eps^2/d) E`
    pub sigma_z: Matrix<T>,
    /// `Theta Sigma_X`, the cross-covariance of `Z_hat` with `X`.
    pub sigma_xz: Matrix<T>,
    /// `(eps^2/d) E`
    pub conditional_closed_form: Matrix<T>,
    /// `Sigma_Z - Sigma_XZ Sigma_X^{-1} Sigma_XZ^T`; `None` when `Sigma_X`
    /// is singular and the inverse path was skipped.
    pub conditional_schur: Option<Matrix<T>>,
}

impl<T: Real> SchurCovariances<T> {
    pub fn schur_skipped(&self) -> bool {
        self.conditional_schur.is_none()
    }
}

pub fn schur_covariances<T: Real>(ch: &GaussianChannel<T>) -> Result<SchurCovariances<T>> {
    let d = ch.output_dim();
    let noise = ch.noise_variance();
    let sigma_xz = ch.theta.matmul(&ch.sigma_x)?;
    let signal = sigma_xz.matmul(&ch.theta.transpose())?;
    let sigma_z = signal.add_scaled_identity(noise);
    let conditional_closed_form = Matrix::identity(d).scaled(noise);
    let conditional_schur = match ch.sigma_x.cholesky() {
        Ok(chol) => {
            // Sigma_X^{-1} Sigma_ZX, then Sigma_XZ times that.
            let solved = chol.solve(&sigma_xz.transpose())?;
            Some(sigma_z.sub(&sigma_xz.matmul(&solved)?)?)
        }
        Err(Error::Numeric { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SchurCovariances {
        sigma_z,
        sigma_xz,
        conditional_closed_form,
        conditional_schur,
    })
}

/// Differential entropy of `N(0, Sigma)` in nats:
/// `1/2 ln((2 pi e)^n det Sigma)`.
pub fn gaussian_entropy<T: Real>(sigma: &Matrix<T>) -> Result<T> {
    if !sigma.is_square() || sigma.rows() == 0 {
        return Err(Error::input(format!("covariance must be square, got {:?}", sigma.shape())));
    }
    if !sigma.is_finite() {
        return Err(Error::input("covariance has non-finite entries"));
    }
    let n = T::from_count(sigma.rows());
    let log_2pie = (T::lit(2.0) * T::PI() * T::E()).ln();
    match sigma.cholesky() {
        Ok(ch) => Ok(T::lit(0.5) * (n * log_2pie + ch.log_det())),
        Err(Error::Numeric { .. }) => {
            let min_ev = sigma.symmetric_eigenvalues()?[0];
            Err(Error::input(format!(
                "covariance is not positive definite (min eigenvalue {:.6e})",
                min_ev.as_f64()
            )))
        }
        Err(e) => Err(e),
    }
}

/// Closed-form `dI(Z, eps, beta, Pi)` in nats:
/// `(1-beta)/2 ln det(E + d/(M eps^2) Z Z^T) + beta/2 sum_j (n_j/M) ln det(E + d/(n_j eps^2) Z_j Z_j^T)`.
pub fn gaussian_delta_i<T: Real>(
    z: &FeatureMatrix<T>,
    p: &Partition,
    eps: Precision<T>,
    beta: TradeoffBeta<T>,
) -> Result<T> {
    let (d, m) = z.matrix().shape();
    let e = eps.get();
    let b = beta.get();
    let half = T::lit(0.5);
    let whole = logdet_gram(z.matrix(), T::from_count(d) / (T::from_count(m) * e * e))?;
    let classes: T = class_logdets(z, p, eps)?.iter().map(|&(w, ld)| w * ld).sum();
    Ok((T::one() - b) * half * whole + b * half * classes)
}

/// `-dI`, the quantity IB maximizes under the Gaussian model.
pub fn neg_delta_i<T: Real>(
    z: &FeatureMatrix<T>,
    p: &Partition,
    eps: Precision<T>,
    beta: TradeoffBeta<T>,
) -> Result<T> {
    Ok(-gaussian_delta_i(z, p, eps, beta)?)
}

/// One beta of the special-case check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialCaseRow<T> {
    pub beta: T,
    pub neg_delta_i: T,
    pub delta_r: T,
    /// `|neg_delta_i / beta - delta_r|`
    pub residual: T,
    /// `R / beta`
    pub predicted: T,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecialCaseReport<T> {
    pub rate: T,
    pub conditional_rate: T,
    /// Rows in ascending beta.
    pub rows: Vec<SpecialCaseRow<T>>,
}

/// Relative tolerance for `residual == R / beta`.
pub const SPECIAL_CASE_RTOL: f64 = 1e-9;

impl<T: Real> SpecialCaseReport<T> {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn first_failure(&self) -> Option<&SpecialCaseRow<T>> {
        self.rows.iter().find(|r| !r.pass)
    }

    pub const CSV_HEADER: &'static str = "beta,neg_delta_i,delta_r,residual,predicted,pass";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.beta,
                    r.neg_delta_i,
                    r.delta_r,
                    r.residual,
                    r.predicted,
                    if r.pass { "PASS" } else { "FAIL" }
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", Self::CSV_HEADER);
        for line in self.csv_rows() {
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Checks, for each beta, that `|-dI/beta - dR| = R/beta` and that the
/// residual strictly decreases as beta grows.
pub fn verify_special_case<T: Real>(
    z: &FeatureMatrix<T>,
    p: &Partition,
    eps: Precision<T>,
    betas: &[TradeoffBeta<T>],
) -> Result<SpecialCaseReport<T>> {
    verify_special_case_with_bias(z, p, eps, betas, T::zero())
}

/// [`verify_special_case`] with `bias` added to every `dR`; used to confirm
/// the check can fail.
pub fn verify_special_case_with_bias<T: Real>(
    z: &FeatureMatrix<T>,
    p: &Partition,
    eps: Precision<T>,
    betas: &[TradeoffBeta<T>],
    bias: T,
) -> Result<SpecialCaseReport<T>> {
    if betas.is_empty() {
        return Err(Error::input("beta list is empty"));
    }
    let rate = crate::rates::coding_rate(z, eps)?;
    let conditional_rate = crate::rates::conditional_coding_rate(z, p, eps)?;
    let delta_r = rate - conditional_rate + bias;
    let mut sorted: Vec<T> = betas.iter().map(|b| b.get()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let rtol = T::lit(SPECIAL_CASE_RTOL);
    // Floor for the R = 0 case, scaled to the magnitudes being cancelled.
    let floor = T::lit(64.0) * T::epsilon() * (rate.abs() + conditional_rate.abs());
    let mut rows: Vec<SpecialCaseRow<T>> = Vec::with_capacity(sorted.len());
    for b in sorted {
        let beta = TradeoffBeta::new(b)?;
        let neg = neg_delta_i(z, p, eps, beta)?;
        let residual = (neg / b - delta_r).abs();
        let predicted = rate / b;
        let close = (residual - predicted).abs() <= rtol * predicted.abs().max(residual.abs()) + floor;
        let decreasing = match rows.last() {
            None => true,
            Some(prev) if rate > floor => residual < prev.residual,
            Some(_) => residual <= floor,
        };
        rows.push(SpecialCaseRow {
            beta: b,
            neg_delta_i: neg,
            delta_r,
            residual,
            predicted,
            pass: close && decreasing,
        });
    }
    Ok(SpecialCaseReport {
        rate,
        conditional_rate,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{coding_rate, conditional_coding_rate, rate_reduction};

    fn beta(v: f64) -> TradeoffBeta<f64> {
        TradeoffBeta::new(v).unwrap()
    }

    fn eps(v: f64) -> Precision<f64> {
        Precision::new(v).unwrap()
    }

    fn fixture() -> (FeatureMatrix<f64>, Partition) {
        let z = FeatureMatrix::new(Matrix::from_fn(4, 10, |i, j| ((3 * i + 7 * j) as f64 * 0.37).sin())).unwrap();
        let p = Partition::new((0..10).map(|j| j % 3).collect(), 3).unwrap();
        (z, p)
    }

    #[test]
    fn lagrangian_examples() {
        assert_eq!(ib_lagrangian(1.0, 1.0, beta(1.0)).unwrap(), 0.0);
        assert_eq!(ib_lagrangian(2.0, 0.0, beta(5.0)).unwrap(), 2.0);
        assert!((ib_lagrangian(1.3, 0.7, beta(2.5)).unwrap() + 0.45).abs() < 1e-15);
        assert!(ib_lagrangian(f64::NAN, 0.0, beta(1.0)).is_err());
    }

    #[test]
    fn beta_must_be_positive() {
        assert!(TradeoffBeta::new(0.0f64).is_err());
        assert!(TradeoffBeta::new(-1.0f64).is_err());
        assert!(TradeoffBeta::new(f64::INFINITY).is_err());
    }

    #[test]
    fn transformed_examples() {
        let e = EntropyTriple::new(2.5, 2.5, 2.5, EntropyRegime::Differential).unwrap();
        for b in [0.1, 1.0, 7.0] {
            assert_eq!(transformed_ib(&e, beta(b)), 0.0);
        }
        let e = EntropyTriple::new(3.0, 0.5, 1.25, EntropyRegime::Discrete).unwrap();
        assert_eq!(transformed_ib(&e, beta(1.0)), 0.75);
    }

    #[test]
    fn input_term_sign_follows_beta() {
        let e = EntropyTriple::new(3.0, 1.0, 2.0, EntropyRegime::Discrete).unwrap();
        assert!(transformed_ib_terms(&e, beta(0.5)).input_term > 0.0);
        assert_eq!(transformed_ib_terms(&e, beta(1.0)).input_term, 0.0);
        assert!(transformed_ib_terms(&e, beta(3.0)).input_term < 0.0);
    }

    #[test]
    fn discrete_triple_bounds_enforced() {
        assert!(EntropyTriple::new(1.0, 2.0, 0.5, EntropyRegime::Discrete).is_err());
        // Differential entropies can be negative and unordered.
        assert!(EntropyTriple::new(-1.0, 2.0, 0.5, EntropyRegime::Differential).is_ok());
    }

    #[test]
    fn schur_plug_in_example() {
        let ch = GaussianChannel::new(Matrix::identity(2), Matrix::identity(2), eps(1.0)).unwrap();
        let s = schur_covariances(&ch).unwrap();
        assert!(s.sigma_z.max_abs_diff(&Matrix::identity(2).scaled(1.5)).unwrap() < 1e-15);
        assert!(s.conditional_closed_form.max_abs_diff(&Matrix::identity(2).scaled(0.5)).unwrap() < 1e-15);
        assert!(s.conditional_schur.unwrap().max_abs_diff(&Matrix::identity(2).scaled(0.5)).unwrap() < 1e-15);
    }

    #[test]
    fn schur_zero_theta() {
        let ch = GaussianChannel::new(Matrix::zeros(3, 2), Matrix::identity(2), eps(0.6)).unwrap();
        let s = schur_covariances(&ch).unwrap();
        let expect = Matrix::identity(3).scaled(0.36 / 3.0);
        assert!(s.sigma_z.max_abs_diff(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn singular_sigma_skips_schur_path() {
        let sigma = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let ch = GaussianChannel::new(Matrix::identity(2), sigma, eps(1.0)).unwrap();
        let s = schur_covariances(&ch).unwrap();
        assert!(s.schur_skipped());
        assert!(s.conditional_closed_form.max_abs_diff(&Matrix::identity(2).scaled(0.5)).unwrap() == 0.0);
    }

    #[test]
    fn channel_rejects_bad_covariance() {
        let asym = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(GaussianChannel::new(Matrix::identity(2), asym, eps(1.0)).is_err());
        let indef = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(GaussianChannel::new(Matrix::identity(2), indef, eps(1.0)).is_err());
    }

    #[test]
    fn gaussian_entropy_examples() {
        let h1 = gaussian_entropy(&Matrix::<f64>::identity(1)).unwrap();
        assert!((h1 - 1.418_938_533_204_672_7).abs() < 1e-14);
        let h4 = gaussian_entropy(&Matrix::<f64>::identity(4)).unwrap();
        assert!((h4 - 4.0 * h1).abs() < 1e-13);
    }

    #[test]
    fn gaussian_entropy_names_min_eigenvalue() {
        let indef = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let err = gaussian_entropy(&indef).unwrap_err().to_string();
        assert!(err.contains("min eigenvalue -1.000000e0"), "{err}");
    }

    #[test]
    fn delta_i_at_beta_one_is_conditional_rate() {
        let (z, p) = fixture();
        let di = gaussian_delta_i(&z, &p, eps(0.5), beta(1.0)).unwrap();
        let rc = conditional_coding_rate(&z, &p, eps(0.5)).unwrap();
        assert!((di - rc).abs() < 1e-13);
        assert!((neg_delta_i(&z, &p, eps(0.5), beta(1.0)).unwrap() + rc).abs() < 1e-13);
    }

    #[test]
    fn zero_features_give_zero_objective() {
        let z = FeatureMatrix::new(Matrix::<f64>::zeros(3, 6)).unwrap();
        let p = Partition::new(vec![0, 1, 0, 1, 0, 1], 2).unwrap();
        for b in [0.5, 1.0, 100.0] {
            assert_eq!(gaussian_delta_i(&z, &p, eps(1.0), beta(b)).unwrap(), 0.0);
        }
        let report = verify_special_case(&z, &p, eps(1.0), &[beta(1.0), beta(2.0)]).unwrap();
        assert!(report.all_pass());
    }

    #[test]
    fn bridge_identity_on_fixture() {
        let (z, p) = fixture();
        for b in DEFAULT_BETAS {
            let neg = neg_delta_i(&z, &p, eps(0.5), beta(b)).unwrap();
            let dr = rate_reduction(&z, &p, eps(0.5)).unwrap();
            let r = coding_rate(&z, eps(0.5)).unwrap();
            assert!((neg - (b * dr - r)).abs() <= 1e-9 * (b * dr).abs().max(1.0));
        }
    }

    #[test]
    fn special_case_report_passes_and_halves() {
        let (z, p) = fixture();
        let betas: Vec<_> = DEFAULT_BETAS.iter().map(|&b| beta(b)).collect();
        let report = verify_special_case(&z, &p, eps(0.5), &betas).unwrap();
        assert!(report.all_pass(), "{}", report.to_csv());
        let r1 = report.rows.iter().find(|r| r.beta == 1.0).unwrap().residual;
        let r2 = report.rows.iter().find(|r| r.beta == 2.0).unwrap().residual;
        assert!((r1 / r2 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_class_residual_is_rate_over_beta() {
        let (z, _) = fixture();
        let p = Partition::single(z.samples());
        let report = verify_special_case(&z, &p, eps(0.5), &[beta(1.0), beta(10.0)]).unwrap();
        for row in &report.rows {
            assert!(row.delta_r.abs() < 1e-13);
            assert!((row.neg_delta_i / row.beta + report.rate / row.beta).abs() < 1e-12);
        }
        assert!(report.all_pass());
    }

    #[test]
    fn biased_delta_r_fails() {
        let (z, p) = fixture();
        let report =
            verify_special_case_with_bias(&z, &p, eps(0.5), &[beta(1.0), beta(10.0)], 0.1).unwrap();
        assert!(!report.all_pass());
        assert!(report.to_csv().contains("FAIL"));
    }

    #[test]
    fn csv_header_and_rows() {
        let (z, p) = fixture();
        let report = verify_special_case(&z, &p, eps(1.0), &[beta(2.0)]).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("beta,neg_delta_i,delta_r,residual,predicted,pass"));
        assert!(lines.next().unwrap().ends_with(",PASS"));
    }

    #[test]
    fn empty_beta_list_rejected() {
        let (z, p) = fixture();
        assert!(verify_special_case(&z, &p, eps(1.0), &[]).is_err());
    }
}

//! Random instance suites for the special-case check.

use std::path::PathBuf;

use infoplane::ib::{verify_special_case_with_bias, SpecialCaseReport, SpecialCaseRow, TradeoffBeta};
use infoplane::nn::read_trace_dir;
use infoplane::{FeatureMatrix, Matrix, Partition, Precision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};

pub const SUITE_EPS: [f64; 3] = [0.1, 0.5, 1.0];

/// One `(Z, Pi, eps)` triple of the suite.
#[derive(Debug, Clone)]
pub struct Instance {
    pub z: FeatureMatrix<f64>,
    pub partition: Partition,
    pub eps: Precision<f64>,
}

/// Shape limits of a random suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteShape {
    pub max_dim: usize,
    pub max_samples: usize,
    pub max_classes: usize,
}

pub const DEFAULT_SHAPE: SuiteShape = SuiteShape {
    max_dim: 16,
    max_samples: 64,
    max_classes: 4,
};

/// `count` seeded instances with Gaussian-ish features in `[-1, 1]`, every
/// class non-empty. `single_class` forces `K = 1`.
pub fn random_suite(seed: u64, count: usize, shape: SuiteShape, single_class: bool) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let d = rng.random_range(1..=shape.max_dim);
            let m = rng.random_range(2..=shape.max_samples);
            let k = if single_class {
                1
            } else {
                rng.random_range(1..=shape.max_classes.min(m))
            };
            let eps = SUITE_EPS[rng.random_range(0..SUITE_EPS.len())];
            let z = Matrix::from_fn(d, m, |_, _| 2.0 * rng.random::<f64>() - 1.0);
            let mut labels: Vec<usize> = (0..m).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
            for i in (1..m).rev() {
                labels.swap(i, rng.random_range(0..=i));
            }
            Instance {
                z: FeatureMatrix::new(z).expect("finite random features"),
                partition: Partition::new(labels, k).expect("every class is non-empty"),
                eps: Precision::new(eps).expect("positive eps"),
            }
        })
        .collect()
}

/// Final-epoch snapshots of each trace, labeled by the trace's eval labels.
pub fn trace_instances(dirs: &[PathBuf], eps: f64) -> CliResult<Vec<(String, Instance)>> {
    let eps = Precision::new(eps)?;
    let mut out = Vec::new();
    for dir in dirs {
        let (meta, snaps) = read_trace_dir(dir)?;
        let last = *meta
            .logged_epochs
            .last()
            .ok_or_else(|| CliError::validation(format!("trace {} logs no epochs", dir.display())))?;
        let partition = Partition::new(meta.eval_labels.clone(), meta.config.num_classes)?;
        for s in snaps.into_iter().filter(|s| s.epoch == last) {
            out.push((
                format!("{}:e{}:l{}", dir.display(), s.epoch, s.layer),
                Instance {
                    z: FeatureMatrix::new(s.values)?,
                    partition: partition.clone(),
                    eps,
                },
            ));
        }
    }
    Ok(out)
}

/// Per-instance reports, labeled by source.
pub struct VerifyReport {
    pub reports: Vec<(String, SpecialCaseReport<f64>)>,
}

pub const VERIFY_CSV_HEADER: &str = "source,eps,beta,neg_delta_i,delta_r,residual,predicted,pass";

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|(_, r)| r.all_pass())
    }

    pub fn rows(&self) -> usize {
        self.reports.iter().map(|(_, r)| r.rows.len()).sum()
    }

    pub fn first_failure(&self) -> Option<(&str, &SpecialCaseRow<f64>)> {
        self.reports
            .iter()
            .find_map(|(src, r)| r.first_failure().map(|row| (src.as_str(), row)))
    }

    pub fn to_csv(&self, eps: &[f64]) -> String {
        let mut out = String::from(VERIFY_CSV_HEADER);
        out.push('\n');
        for ((src, r), e) in self.reports.iter().zip(eps) {
            for line in r.csv_rows() {
                out.push_str(&format!("{src},{e},{line}\n"));
            }
        }
        out
    }
}

/// Runs the check on every instance; `bias` is added to each `dR` to
/// exercise the failure path.
pub fn run(instances: &[(String, Instance)], betas: &[f64], bias: f64) -> CliResult<VerifyReport> {
    let betas = betas
        .iter()
        .map(|&b| TradeoffBeta::new(b))
        .collect::<Result<Vec<_>, _>>()?;
    let reports = instances
        .iter()
        .map(|(src, inst)| {
            verify_special_case_with_bias(&inst.z, &inst.partition, inst.eps, &betas, bias).map(|r| (src.clone(), r))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VerifyReport { reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use infoplane::ib::DEFAULT_BETAS;

    fn labeled(v: Vec<Instance>) -> Vec<(String, Instance)> {
        v.into_iter().enumerate().map(|(i, x)| (format!("random:{i}"), x)).collect()
    }

    #[test]
    fn random_suite_passes() {
        let suite = labeled(random_suite(1, 50, DEFAULT_SHAPE, false));
        let r = run(&suite, &DEFAULT_BETAS, 0.0).unwrap();
        assert!(r.all_pass(), "{:?}", r.first_failure());
        assert_eq!(r.rows(), 50 * DEFAULT_BETAS.len());
    }

    #[test]
    fn single_class_suite_passes() {
        let suite = labeled(random_suite(2, 20, DEFAULT_SHAPE, true));
        assert!(run(&suite, &DEFAULT_BETAS, 0.0).unwrap().all_pass());
    }

    #[test]
    fn corrupted_reduction_fails() {
        let suite = labeled(random_suite(3, 5, DEFAULT_SHAPE, false));
        let r = run(&suite, &DEFAULT_BETAS, 0.1).unwrap();
        assert!(!r.all_pass());
        assert!(r.first_failure().is_some());
    }

    #[test]
    fn suite_is_seeded() {
        let a = random_suite(9, 3, DEFAULT_SHAPE, false);
        let b = random_suite(9, 3, DEFAULT_SHAPE, false);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.z.matrix(), y.z.matrix());
            assert_eq!(x.partition.assignment(), y.partition.assignment());
        }
    }
}

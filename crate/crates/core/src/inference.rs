//! Conditional permutation test of no spatial correlation, applied uniformly
//! to every measure.
//!
//! The observed values are shuffled over locations; two-sided extremeness is
//! judged against the mean of the permuted statistics, which handles MC's
//! nonzero null expectation and GC's null center of 1 with one rule.

use crate::error::{Error, Result};
use crate::lattice::WeightMatrix;
use crate::measures::{compute_measure, Field, MeasureKind};
use crate::randfield::RngStream;
use crate::scalar::{cast, Scalar};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

/// Retries for a permutation replicate that lands on a zero-scale field.
const PERM_RETRIES: u64 = 8;

/// Outcome of one permutation test.
#[derive(Debug, Clone, Serialize)]
pub struct TestResult<T> {
    pub kind: MeasureKind,
    pub statistic: T,
    pub p_value: f64,
    pub n_permutations: usize,
    pub alpha: f64,
    pub reject: bool,
    /// Permutation replicates that kept raising ZeroScale after retries;
    /// they count as non-extreme.
    pub failed_replicates: usize,
}

/// Two-sided pseudo p-value: p = (1 + #{k : |T_k - Tbar| >= |T0 - Tbar|}) / (n_perm + 1).
pub fn permutation_test<T: Scalar>(
    kind: MeasureKind,
    w: &WeightMatrix<T>,
    z: &Field<T>,
    n_perm: usize,
    alpha: f64,
    stream: &RngStream,
) -> Result<TestResult<T>> {
    if n_perm < 19 {
        return Err(Error::InvalidConfig(format!(
            "n_perm must be >= 19, got {n_perm}"
        )));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let observed = compute_measure(kind, w, z)?;

    let replicates: Vec<Option<T>> = (0..n_perm as u64)
        .into_par_iter()
        .map(|k| {
            let perm_stream = stream.child(k);
            for attempt in 0..PERM_RETRIES {
                let mut rng = perm_stream.child(attempt).rng();
                let mut values = z.values().to_vec();
                values.shuffle(&mut rng);
                let permuted = Field::from_parts(values, z.centering());
                match compute_measure(kind, w, &permuted) {
                    Ok(t) => return Some(t),
                    Err(_) => continue,
                }
            }
            None
        })
        .collect();

    let valid: Vec<T> = replicates.iter().filter_map(|r| *r).collect();
    let failed = n_perm - valid.len();
    if valid.is_empty() {
        return Err(Error::RedrawsExhausted {
            attempts: PERM_RETRIES as usize,
            source: Box::new(Error::ZeroScale),
        });
    }
    let center: T = valid.iter().copied().sum::<T>() / cast(valid.len() as f64);
    let observed_dev = (observed - center).abs();
    let extreme = valid
        .iter()
        .filter(|&&t| (t - center).abs() >= observed_dev)
        .count();
    let p_value = (1 + extreme) as f64 / (n_perm + 1) as f64;
    Ok(TestResult {
        kind,
        statistic: observed,
        p_value,
        n_permutations: n_perm,
        alpha,
        reject: p_value <= alpha,
        failed_replicates: failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeSpec, Scheme, WeightMatrix};
    use crate::measures::Centering;
    use crate::randfield::{sample_noise, DistributionKind};

    fn queen10() -> WeightMatrix<f64> {
        let spec = LatticeSpec::new(10, 10, Scheme::Queen, false).unwrap();
        WeightMatrix::from_lattice(&spec).unwrap()
    }

    #[test]
    fn constant_field_is_zero_variance() {
        let w = queen10();
        let z = Field::center(vec![4.0; 100], Centering::Mean).unwrap();
        assert!(matches!(
            permutation_test(MeasureKind::Mc, &w, &z, 99, 0.05, &RngStream::new(1)),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn p_value_bounds_and_reject_rule() {
        let w = queen10();
        let stream = RngStream::new(8).labeled("bounds");
        let eps: Vec<f64> = sample_noise(DistributionKind::Normal, 100, &stream.labeled("z"));
        let z = Field::center(eps, Centering::Mean).unwrap();
        let r = permutation_test(MeasureKind::Mc, &w, &z, 199, 0.05, &stream).unwrap();
        assert!(r.p_value >= 1.0 / 200.0 && r.p_value <= 1.0);
        assert_eq!(r.reject, r.p_value <= r.alpha);
        assert_eq!(r.n_permutations, 199);
    }

    #[test]
    fn small_n_perm_rejected() {
        let w = queen10();
        let z = Field::center(
            sample_noise(DistributionKind::Normal, 100, &RngStream::new(2)),
            Centering::Mean,
        )
        .unwrap();
        assert!(matches!(
            permutation_test(MeasureKind::Mc, &w, &z, 10, 0.05, &RngStream::new(3)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn relabeling_locations_leaves_statistics_unchanged() {
        // apply one fixed permutation to both z and the rows/columns of W
        let spec = LatticeSpec::new(5, 5, Scheme::Queen, false).unwrap();
        let w = WeightMatrix::<f64>::from_lattice(&spec).unwrap();
        let z = Field::center(
            sample_noise(DistributionKind::Laplace, 25, &RngStream::new(17)),
            Centering::Mean,
        )
        .unwrap();

        let mut perm: Vec<usize> = (0..25).collect();
        let mut rng = RngStream::new(18).rng();
        perm.shuffle(&mut rng);

        let relabeled_edges: Vec<(usize, usize, f64)> = w
            .to_adjacency()
            .into_iter()
            .map(|(i, j, raw)| (perm[i], perm[j], raw))
            .collect();
        let w2 = WeightMatrix::from_adjacency(&relabeled_edges, 25).unwrap();
        let mut z2 = vec![0.0; 25];
        for (i, &v) in z.values().iter().enumerate() {
            z2[perm[i]] = v;
        }
        let z2 = Field::from_parts(z2, Centering::Mean);

        for kind in MeasureKind::ALL {
            let a = compute_measure(kind, &w, &z).unwrap();
            let b = compute_measure(kind, &w2, &z2).unwrap();
            assert!((a - b).abs() < 1e-12, "{kind}: {a} vs {b}");
        }
    }

    #[test]
    fn test_is_deterministic_at_any_thread_count() {
        let w = queen10();
        let stream = RngStream::new(91).labeled("thread-det");
        let z = Field::center(
            sample_noise(DistributionKind::Mixture, 100, &stream.labeled("z")),
            Centering::Mean,
        )
        .unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                permutation_test(MeasureKind::Gk, &w, &z, 199, 0.05, &stream).unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.p_value, b.p_value);
        assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
    }

    /// Null size for MC on i.i.d. Normal fields: rejection rate near alpha.
    /// A fast version; the acceptance suite runs the full 1000-field check.
    #[test]
    fn null_size_close_to_alpha() {
        let w = queen10();
        let base = RngStream::new(40).labeled("null-size");
        let fields = 400;
        let mut rejects = 0;
        for r in 0..fields {
            let s = base.child(r);
            let z = Field::center(
                sample_noise(DistributionKind::Normal, 100, &s.labeled("z")),
                Centering::Mean,
            )
            .unwrap();
            let t = permutation_test(MeasureKind::Mc, &w, &z, 99, 0.05, &s).unwrap();
            rejects += t.reject as usize;
        }
        let rate = rejects as f64 / fields as f64;
        // 3 Monte Carlo standard errors around 0.05
        assert!((rate - 0.05).abs() < 3.0 * (0.05f64 * 0.95 / fields as f64).sqrt());
    }
}

//! Spatial lag operators, robust scale estimation, and the eight spatial
//! correlation statistics.
//!
//! Everything here is a pure function of a [`WeightMatrix`] and a [`Field`],
//! safe to call concurrently on shared inputs. All eight statistics are
//! ratios of homogeneous functionals, hence invariant to rescaling the field.

use crate::error::{Error, Result};
use crate::lattice::WeightMatrix;
use crate::scalar::{cast, Scalar};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// How a field was centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    Mean,
    Median,
    None,
}

impl std::str::FromStr for Centering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Centering::Mean),
            "median" => Ok(Centering::Median),
            "none" => Ok(Centering::None),
            other => Err(Error::InvalidConfig(format!("unknown centering '{other}'"))),
        }
    }
}

/// An n-vector of observations plus a record of how it was centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    values: Vec<T>,
    centering: Centering,
}

impl<T: Scalar> Field<T> {
    /// Wrap raw observations without centering them.
    pub fn raw(values: Vec<T>) -> Self {
        Field {
            values,
            centering: Centering::None,
        }
    }

    /// Subtract the chosen location statistic and record the mode.
    pub fn center(mut values: Vec<T>, mode: Centering) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::EmptyInput("field needs at least 2 values"));
        }
        let shift = match mode {
            Centering::Mean => mean(&values),
            Centering::Median => median(&values),
            Centering::None => T::zero(),
        };
        for v in &mut values {
            *v -= shift;
        }
        Ok(Field {
            values,
            centering: mode,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    /// Rescale to unit sample variance (divisor n - 1). Errors on constant fields.
    pub fn standardize(mut self) -> Result<Self> {
        let n = self.values.len();
        if n < 2 {
            return Err(Error::EmptyInput("field needs at least 2 values"));
        }
        let m = mean(&self.values);
        let ss: T = self.values.iter().map(|&v| (v - m) * (v - m)).sum();
        let sd = (ss / cast((n - 1) as f64)).sqrt();
        if sd == T::zero() {
            return Err(Error::ZeroVariance);
        }
        for v in &mut self.values {
            *v /= sd;
        }
        Ok(self)
    }

    pub(crate) fn from_parts(values: Vec<T>, centering: Centering) -> Self {
        Field { values, centering }
    }
}

/// The eight statistics this crate computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MeasureKind {
    Mc,
    Gc,
    Aple,
    Rmc,
    Rgc,
    Raple,
    Gk,
    Gk2,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 8] = [
        MeasureKind::Mc,
        MeasureKind::Gc,
        MeasureKind::Aple,
        MeasureKind::Rmc,
        MeasureKind::Rgc,
        MeasureKind::Raple,
        MeasureKind::Gk,
        MeasureKind::Gk2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Mc => "MC",
            MeasureKind::Gc => "GC",
            MeasureKind::Aple => "APLE",
            MeasureKind::Rmc => "RMC",
            MeasureKind::Rgc => "RGC",
            MeasureKind::Raple => "RAPLE",
            MeasureKind::Gk => "GK",
            MeasureKind::Gk2 => "GK2",
        }
    }
}

impl std::fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MeasureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MC" => Ok(MeasureKind::Mc),
            "GC" => Ok(MeasureKind::Gc),
            "APLE" => Ok(MeasureKind::Aple),
            "RMC" => Ok(MeasureKind::Rmc),
            "RGC" => Ok(MeasureKind::Rgc),
            "RAPLE" => Ok(MeasureKind::Raple),
            "GK" => Ok(MeasureKind::Gk),
            "GK2" => Ok(MeasureKind::Gk2),
            other => Err(Error::InvalidConfig(format!("unknown measure '{other}'"))),
        }
    }
}

/// Scale estimator for the GK family. `StdDev` exists as a test oracle:
/// with it the GK ratio reduces to the Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleEstimator {
    Mad,
    StdDev,
}

impl ScaleEstimator {
    pub fn scale<T: Scalar>(self, x: &[T]) -> T {
        match self {
            ScaleEstimator::Mad => mad(x),
            ScaleEstimator::StdDev => {
                let m = mean(x);
                let ss: T = x.iter().map(|&v| (v - m) * (v - m)).sum();
                (ss / cast((x.len() - 1) as f64)).sqrt()
            }
        }
    }
}

fn sort_by_value<T: Scalar>(v: &mut [T]) {
    v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
}

pub fn mean<T: Scalar>(x: &[T]) -> T {
    let s: T = x.iter().copied().sum();
    s / cast(x.len() as f64)
}

/// Ordinary median; midpoint of the two middle values for even lengths.
pub fn median<T: Scalar>(x: &[T]) -> T {
    assert!(!x.is_empty(), "median of empty slice");
    let mut v = x.to_vec();
    sort_by_value(&mut v);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / cast(2.0)
    }
}

/// Median absolute deviation from the median, without a consistency constant.
pub fn mad<T: Scalar>(x: &[T]) -> T {
    assert!(x.len() >= 2, "mad needs at least 2 values");
    let m = median(x);
    let dev: Vec<T> = x.iter().map(|&v| (v - m).abs()).collect();
    median(&dev)
}

/// Weighted median: the smallest value whose cumulative weight reaches 0.5.
///
/// When the cumulative weight lands exactly on 0.5 (within a few ulps, so
/// that equal 1/k weights behave like the ordinary median), the midpoint of
/// the straddling distinct values is returned.
pub fn weighted_median<T: Scalar>(values: &[T], weights: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptyInput("weighted_median of empty input"));
    }
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: weights.len(),
        });
    }
    let mut pairs: Vec<(T, T)> = values.iter().copied().zip(weights.iter().copied()).collect();
    Ok(weighted_median_pairs(&mut pairs))
}

/// Core of [`weighted_median`] over (value, weight) pairs, sorting in place.
fn weighted_median_pairs<T: Scalar>(pairs: &mut [(T, T)]) -> T {
    pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let half = cast::<T>(0.5);
    let tie_tol = T::epsilon() * cast(pairs.len() as f64);
    let mut acc = T::zero();
    let mut k = 0;
    while k < pairs.len() {
        let v = pairs[k].0;
        // fold runs of equal values into one step of cumulative weight
        while k < pairs.len() && pairs[k].0 == v {
            acc += pairs[k].1;
            k += 1;
        }
        if (acc - half).abs() <= tie_tol {
            return match pairs.get(k) {
                Some(&(next, _)) => (v + next) / cast(2.0),
                None => v,
            };
        }
        if acc > half {
            return v;
        }
    }
    // weights summed below 0.5: malformed input, fall back to the largest value
    pairs[pairs.len() - 1].0
}

/// Spatial lag `L[z]_i = sum_j w_ij z_j` over a row-standardized W.
pub fn spatial_lag<T: Scalar>(w: &WeightMatrix<T>, z: &Field<T>) -> Result<Vec<T>> {
    lag_values(w, z.values())
}

pub(crate) fn lag_values<T: Scalar>(w: &WeightMatrix<T>, z: &[T]) -> Result<Vec<T>> {
    check_dims(w, z)?;
    Ok((0..w.n())
        .map(|i| {
            w.neighbors(i)
                .iter()
                .map(|&(j, wij)| wij * z[j])
                .sum::<T>()
        })
        .collect())
}

/// Robust spatial lag `RL[z]_i`: weighted median of z over N(i).
pub fn robust_spatial_lag<T: Scalar>(w: &WeightMatrix<T>, z: &Field<T>) -> Result<Vec<T>> {
    robust_lag_values(w, z.values())
}

pub(crate) fn robust_lag_values<T: Scalar>(w: &WeightMatrix<T>, z: &[T]) -> Result<Vec<T>> {
    check_dims(w, z)?;
    let mut pairs: Vec<(T, T)> = Vec::new();
    let mut out = Vec::with_capacity(w.n());
    for i in 0..w.n() {
        pairs.clear();
        pairs.extend(w.neighbors(i).iter().map(|&(j, wij)| (z[j], wij)));
        out.push(weighted_median_pairs(&mut pairs));
    }
    Ok(out)
}

/// Spatial autocovariance gamma = n^-1 Z^T W Z on a mean-centered field.
pub fn spatial_autocov<T: Scalar>(w: &WeightMatrix<T>, z: &Field<T>) -> Result<T> {
    let lag = spatial_lag(w, z)?;
    Ok(dot(z.values(), &lag) / cast(w.n() as f64))
}

/// Gnanadesikan-Kettenring correlation of x and y under the given scale:
/// [S(ax+by)^2 - S(ax-by)^2] / [S(ax+by)^2 + S(ax-by)^2] with a = 1/S(x), b = 1/S(y).
pub fn gk_correlation<T: Scalar>(x: &[T], y: &[T], scale: ScaleEstimator) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let sx = scale.scale(x);
    let sy = scale.scale(y);
    if sx == T::zero() || sy == T::zero() {
        return Err(Error::ZeroScale);
    }
    let sum: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a / sx + b / sy).collect();
    let diff: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a / sx - b / sy).collect();
    let s_sum = scale.scale(&sum);
    let s_diff = scale.scale(&diff);
    if s_sum == T::zero() || s_diff == T::zero() {
        return Err(Error::ZeroScale);
    }
    let (p, q) = (s_sum * s_sum, s_diff * s_diff);
    Ok((p - q) / (p + q))
}

/// Compute one of the eight statistics on a centered field.
pub fn compute_measure<T: Scalar>(
    kind: MeasureKind,
    w: &WeightMatrix<T>,
    z: &Field<T>,
) -> Result<T> {
    let zv = z.values();
    check_dims(w, zv)?;
    if zv.iter().all(|&v| v == T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let n = cast::<T>(w.n() as f64);
    match kind {
        MeasureKind::Mc => {
            let lag = lag_values(w, zv)?;
            Ok(dot(zv, &lag) / dot(zv, zv))
        }
        MeasureKind::Gc => {
            let num = pair_sum(w, zv, |d| d * d) / (cast::<T>(2.0) * n * w.eta_bar());
            let den = dot(zv, zv) / (n - T::one());
            Ok(num / den)
        }
        MeasureKind::Aple => {
            // Z^T W^T Z and Z^T W Z are the same scalar, so the symmetrized
            // numerator is just Z^T L(Z).
            let lag = lag_values(w, zv)?;
            let num = dot(zv, &lag);
            let den = dot(&lag, &lag) + w.tr_w2() * dot(zv, zv) / n;
            Ok(num / den)
        }
        MeasureKind::Rmc => {
            let rl = robust_lag_values(w, zv)?;
            Ok(dot(zv, &rl) / dot(zv, zv))
        }
        MeasureKind::Rgc => {
            let num = pair_sum(w, zv, |d| d.abs()) / (cast::<T>(2.0) * n * w.eta_bar());
            let den = zv.iter().map(|&v| v.abs()).sum::<T>() / (n - T::one());
            Ok(num / den)
        }
        MeasureKind::Raple => {
            let rl = robust_lag_values(w, zv)?;
            let num = dot(zv, &rl);
            let den = dot(&rl, &rl) + w.tr_w2() * dot(zv, zv) / n;
            Ok(num / den)
        }
        MeasureKind::Gk => {
            let lag = lag_values(w, zv)?;
            gk_correlation(zv, &lag, ScaleEstimator::Mad)
        }
        MeasureKind::Gk2 => {
            let rl = robust_lag_values(w, zv)?;
            gk_correlation(zv, &rl, ScaleEstimator::Mad)
        }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn pair_sum<T: Scalar>(w: &WeightMatrix<T>, z: &[T], f: impl Fn(T) -> T) -> T {
    let mut acc = T::zero();
    for i in 0..w.n() {
        for &(j, wij) in w.neighbors(i) {
            acc += wij * f(z[i] - z[j]);
        }
    }
    acc
}

fn check_dims<T: Scalar>(w: &WeightMatrix<T>, z: &[T]) -> Result<()> {
    if z.len() != w.n() {
        return Err(Error::DimensionMismatch {
            expected: w.n(),
            got: z.len(),
        });
    }
    Ok(())
}

//! Empirical influence experiments: contaminate one location, watch the
//! statistic move. Includes the closed-form autocovariance parabola used as
//! an exactness oracle on symmetric (torus) lattices.

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Scheme, WeightMatrix};
use crate::measures::{compute_measure, Centering, Field, MeasureKind};
use crate::randfield::{DistributionKind, RngStream, SarSystem};
use crate::scalar::{cast, SarScalar, Scalar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the contaminated unit is picked for each simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSelection {
    Random,
    Fixed(usize),
}

/// Settings for a simulated influence curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceConfig {
    pub lattice: LatticeSpec,
    pub rho: f64,
    pub distribution: DistributionKind,
    pub runs: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    pub unit: UnitSelection,
    /// Rescale each generated field to unit sample variance.
    pub standardize: bool,
    /// Zero out the chosen unit (recentering the rest) before contaminating,
    /// so the curve passes through the origin exactly.
    pub zero_unit: bool,
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        InfluenceConfig {
            lattice: LatticeSpec {
                rows: 10,
                cols: 10,
                scheme: Scheme::Rook,
                torus: false,
            },
            rho: 0.5,
            distribution: DistributionKind::Normal,
            runs: 1000,
            grid_min: -10.0,
            grid_max: 10.0,
            grid_points: 41,
            unit: UnitSelection::Random,
            standardize: true,
            zero_unit: true,
        }
    }
}

/// Averaged influence of one measure over the contamination grid.
#[derive(Debug, Clone, Serialize)]
pub struct InfluenceCurve<T> {
    pub kind: MeasureKind,
    pub grid: Vec<T>,
    pub mean_influence: Vec<T>,
    pub runs: usize,
    pub redraws: usize,
    pub config: InfluenceConfig,
}

impl<T: Scalar> InfluenceCurve<T> {
    pub fn max_abs(&self) -> T {
        self.mean_influence
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }
}

/// Replace z_unit with `value`, then re-center per the field's mode.
pub fn contaminate<T: Scalar>(z: &Field<T>, unit: usize, value: T) -> Result<Field<T>> {
    if unit >= z.len() {
        return Err(Error::IndexOutOfRange {
            index: unit,
            n: z.len(),
        });
    }
    if z.values()[unit] == value {
        // replacing a value with itself must be influence-free bit for bit,
        // so skip the re-centering round-off
        return Ok(z.clone());
    }
    let mut values = z.values().to_vec();
    values[unit] = value;
    Field::center(values, z.centering())
}

/// Set z_unit to zero and recenter the remaining values, so the field is
/// exactly mean-zero with a zero at `unit` (the parabola's precondition).
pub fn zero_unit<T: Scalar>(z: &Field<T>, unit: usize) -> Result<Field<T>> {
    if unit >= z.len() {
        return Err(Error::IndexOutOfRange {
            index: unit,
            n: z.len(),
        });
    }
    let mut values = z.values().to_vec();
    let others: T = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != unit)
        .map(|(_, &v)| v)
        .sum();
    let shift = others / cast((values.len() - 1) as f64);
    for (i, v) in values.iter_mut().enumerate() {
        *v = if i == unit { T::zero() } else { *v - shift };
    }
    Ok(Field::from_parts(values, Centering::Mean))
}

/// I_cont = n * (theta(contaminated) - theta(z)).
pub fn empirical_influence<T: Scalar>(
    kind: MeasureKind,
    w: &WeightMatrix<T>,
    z: &Field<T>,
    unit: usize,
    value: T,
) -> Result<T> {
    let base = compute_measure(kind, w, z)?;
    let cont = compute_measure(kind, w, &contaminate(z, unit, value)?)?;
    Ok(cast::<T>(w.n() as f64) * (cont - base))
}

/// Closed-form influence of the spatial autocovariance on a symmetric W:
/// 2 v sum_{i != unit} w_i,unit z_i - v^2 / n.
///
/// Requires the field mean-centered with z_unit = 0 (see [`zero_unit`]).
/// The quadratic term is the mean-shift correction carried through
/// n (gamma_cont - gamma); with the n applied it is v^2 / n.
pub fn autocov_influence_analytic<T: Scalar>(
    w: &WeightMatrix<T>,
    z: &Field<T>,
    unit: usize,
    value: T,
) -> Result<T> {
    if unit >= w.n() {
        return Err(Error::IndexOutOfRange {
            index: unit,
            n: w.n(),
        });
    }
    if z.len() != w.n() {
        return Err(Error::DimensionMismatch {
            expected: w.n(),
            got: z.len(),
        });
    }
    if !w.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    // by symmetry the column sum over i equals the row sum over j
    let lag_unit: T = w
        .neighbors(unit)
        .iter()
        .map(|&(j, wij)| wij * z.values()[j])
        .sum();
    let n = cast::<T>(w.n() as f64);
    Ok(cast::<T>(2.0) * value * lag_unit - value * value / n)
}

/// Simulate averaged influence curves for several measures at once.
///
/// All measures see the same field and unit draw per run, so curve
/// comparisons are paired. Runs on which any measure fails are redrawn with
/// the next substream and counted.
pub fn influence_curves<T: SarScalar>(
    kinds: &[MeasureKind],
    config: &InfluenceConfig,
    stream: &RngStream,
) -> Result<Vec<InfluenceCurve<T>>> {
    if kinds.is_empty() {
        return Err(Error::EmptyInput("no measures requested"));
    }
    if config.runs == 0 {
        return Err(Error::InvalidConfig("runs must be >= 1".into()));
    }
    let grid_ok = config.grid_min.is_finite()
        && config.grid_max.is_finite()
        && config.grid_min < config.grid_max;
    if config.grid_points < 2 || !grid_ok {
        return Err(Error::InvalidConfig(
            "contamination grid needs at least 2 increasing points".into(),
        ));
    }
    let w = WeightMatrix::<T>::from_lattice(&config.lattice)?;
    let sar = SarSystem::new(cast::<T>(config.rho), &w)?;
    let n = w.n();
    if let UnitSelection::Fixed(u) = config.unit {
        if u >= n {
            return Err(Error::IndexOutOfRange { index: u, n });
        }
    }
    let grid: Vec<T> = (0..config.grid_points)
        .map(|i| {
            let frac = i as f64 / (config.grid_points - 1) as f64;
            cast::<T>(config.grid_min + (config.grid_max - config.grid_min) * frac)
        })
        .collect();

    const RUN_RETRIES: u64 = 32;
    let per_run: Vec<Result<(Vec<Vec<T>>, usize)>> = (0..config.runs as u64)
        .into_par_iter()
        .map(|run| {
            'attempt: for attempt in 0..RUN_RETRIES {
                let s = stream.child(run).child(attempt);
                let mut field = sar.generate(config.distribution, &s.labeled("field"))?;
                if config.standardize {
                    field = match field.standardize() {
                        Ok(f) => f,
                        Err(_) => continue 'attempt,
                    };
                }
                let unit = match config.unit {
                    UnitSelection::Random => {
                        use rand::Rng;
                        s.labeled("unit").rng().random_range(0..n)
                    }
                    UnitSelection::Fixed(u) => u,
                };
                if config.zero_unit {
                    field = zero_unit(&field, unit)?;
                }
                let mut base = Vec::with_capacity(kinds.len());
                for &kind in kinds {
                    match compute_measure(kind, &w, &field) {
                        Ok(v) => base.push(v),
                        Err(_) => continue 'attempt,
                    }
                }
                let mut rows: Vec<Vec<T>> = vec![Vec::with_capacity(grid.len()); kinds.len()];
                for &v in &grid {
                    let cont = match contaminate(&field, unit, v) {
                        Ok(f) => f,
                        Err(e) => return Err(e),
                    };
                    for (ki, &kind) in kinds.iter().enumerate() {
                        match compute_measure(kind, &w, &cont) {
                            Ok(t) => rows[ki].push(cast::<T>(n as f64) * (t - base[ki])),
                            Err(_) => continue 'attempt,
                        }
                    }
                }
                return Ok((rows, attempt as usize));
            }
            Err(Error::RedrawsExhausted {
                attempts: RUN_RETRIES as usize,
                source: Box::new(Error::ZeroScale),
            })
        })
        .collect();

    // sequential reduction keeps the result identical at any thread count
    let mut acc: Vec<Vec<T>> = vec![vec![T::zero(); grid.len()]; kinds.len()];
    let mut redraws = 0usize;
    for run in per_run {
        let (rows, attempts) = run?;
        redraws += attempts;
        for (ki, row) in rows.iter().enumerate() {
            for (gi, &v) in row.iter().enumerate() {
                acc[ki][gi] += v;
            }
        }
    }
    let scale = cast::<T>(config.runs as f64);
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(ki, &kind)| InfluenceCurve {
            kind,
            grid: grid.clone(),
            mean_influence: acc[ki].iter().map(|&v| v / scale).collect(),
            runs: config.runs,
            redraws,
            config: config.clone(),
        })
        .collect())
}

/// Single-measure convenience wrapper around [`influence_curves`].
pub fn influence_curve<T: SarScalar>(
    kind: MeasureKind,
    config: &InfluenceConfig,
    stream: &RngStream,
) -> Result<InfluenceCurve<T>> {
    Ok(influence_curves(&[kind], config, stream)?.remove(0))
}

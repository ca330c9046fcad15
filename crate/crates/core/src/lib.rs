//! Classical and robust spatial autocorrelation measures on lattice and
//! general-adjacency data, with permutation inference and Monte Carlo
//! influence/power studies.
//!
//! The statistics: Moran's coefficient (MC), Geary's contiguity ratio (GC),
//! the approximate profile-likelihood estimator (APLE), their robust-lag
//! variants (RMC, RGC, RAPLE), and the MAD-based Gnanadesikan-Kettenring
//! correlations of a field with its spatial lag (GK) and robust spatial lag
//! (GK2).
//!
//! Numeric kernels are generic over the scalar type via [`scalar::Scalar`];
//! the `*64` aliases below cover the common `f64` case.
//!
//! ```
//! use spacorr::*;
//!
//! let spec = LatticeSpec::new(10, 10, Scheme::Queen, false)?;
//! let w = WeightMatrix64::from_lattice(&spec)?;
//! let stream = RngStream::new(42).labeled("demo");
//! let z = sar_generate(0.5, &w, DistributionKind::Normal, &stream)?;
//! let mc = compute_measure(MeasureKind::Mc, &w, &z)?;
//! let test = permutation_test(MeasureKind::Mc, &w, &z, 199, 0.05, &stream)?;
//! assert!(mc > 0.0 && test.reject);
//! # Ok::<(), spacorr::Error>(())
//! ```

pub mod error;
pub mod inference;
pub mod influence;
pub mod io;
pub mod lattice;
pub mod mcstudy;
pub mod measures;
pub mod randfield;
pub mod scalar;

pub use error::{Error, Result};
pub use inference::{permutation_test, TestResult};
pub use influence::{
    autocov_influence_analytic, contaminate, empirical_influence, influence_curve,
    influence_curves, zero_unit, InfluenceConfig, InfluenceCurve, UnitSelection,
};
pub use lattice::{LatticeSpec, Scheme, WeightMatrix};
pub use mcstudy::{
    emit_table, run_power_study, GridSize, PowerCell, PowerStudyConfig, PowerTable, TableLayout,
};
pub use measures::{
    compute_measure, gk_correlation, mad, mean, median, robust_spatial_lag, spatial_autocov,
    spatial_lag, weighted_median, Centering, Field, MeasureKind, ScaleEstimator,
};
pub use randfield::{sample_noise, sar_generate, DistributionKind, RngStream, SarSystem};
pub use scalar::{SarScalar, Scalar, SimScalar};

pub type WeightMatrix64 = WeightMatrix<f64>;
pub type Field64 = Field<f64>;
pub type TestResult64 = TestResult<f64>;
pub type InfluenceCurve64 = InfluenceCurve<f64>;
pub type SarSystem64 = SarSystem<f64>;

//! The numeric kernels instantiate at both float widths.

use spacorr::*;

#[test]
fn f32_measures_track_f64() {
    let spec = LatticeSpec::new(6, 6, Scheme::Queen, false).unwrap();
    let w64 = WeightMatrix::<f64>::from_lattice(&spec).unwrap();
    let w32 = WeightMatrix::<f32>::from_lattice(&spec).unwrap();
    let values64: Vec<f64> = sample_noise(DistributionKind::Laplace, 36, &RngStream::new(3));
    let values32: Vec<f32> = values64.iter().map(|&v| v as f32).collect();
    let z64 = Field::center(values64, Centering::Mean).unwrap();
    let z32 = Field::center(values32, Centering::Mean).unwrap();
    for kind in MeasureKind::ALL {
        let a = compute_measure(kind, &w64, &z64).unwrap();
        let b = compute_measure(kind, &w32, &z32).unwrap() as f64;
        assert!((a - b).abs() < 1e-4, "{kind}: {a} vs {b}");
    }
}

#[test]
fn f32_lattice_rows_standardize_within_width() {
    let spec = LatticeSpec::new(7, 5, Scheme::Queen, false).unwrap();
    let w = WeightMatrix::<f32>::from_lattice(&spec).unwrap();
    for i in 0..w.n() {
        let s: f32 = w.neighbors(i).iter().map(|&(_, v)| v).sum();
        assert!((s - 1.0).abs() <= 8.0 * f32::EPSILON);
    }
    let torus = LatticeSpec::new(4, 4, Scheme::Rook, true).unwrap();
    let wt = WeightMatrix::<f32>::from_lattice(&torus).unwrap();
    assert!(wt.is_symmetric_within(1e-6));
}

#[test]
fn f32_sar_generation_and_test_run() {
    let spec = LatticeSpec::new(5, 5, Scheme::Rook, false).unwrap();
    let w = WeightMatrix::<f32>::from_lattice(&spec).unwrap();
    let stream = RngStream::new(7).labeled("f32");
    let z = sar_generate(0.4f32, &w, DistributionKind::Mixture, &stream).unwrap();
    assert_eq!(z.len(), 25);
    let result = permutation_test(MeasureKind::Mc, &w, &z, 99, 0.05, &stream).unwrap();
    assert!(result.p_value > 0.0 && result.p_value <= 1.0);
    assert!(result.statistic.is_finite());
}

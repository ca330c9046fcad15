//! The full power study: measures x distributions x rho x scheme x grid,
//! with per-cell rejection rates and table emission.

use crate::error::{Error, Result};
use crate::inference::permutation_test;
use crate::lattice::{LatticeSpec, Scheme, WeightMatrix};
use crate::measures::MeasureKind;
use crate::randfield::{DistributionKind, RngStream, SarSystem};
use crate::scalar::{cast, SarScalar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSize {
    pub rows: usize,
    pub cols: usize,
}

impl GridSize {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }
}

impl std::fmt::Display for GridSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl std::str::FromStr for GridSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::InvalidConfig(format!("grid '{s}' is not ROWSxCOLS")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("grid '{s}' is not ROWSxCOLS")))
        };
        Ok(GridSize {
            rows: parse(r)?,
            cols: parse(c)?,
        })
    }
}

/// Full configuration of a power study. Serializable so a run can be driven
/// from a JSON file and reproduced from its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerStudyConfig {
    pub grids: Vec<GridSize>,
    pub schemes: Vec<Scheme>,
    pub rhos: Vec<f64>,
    pub distributions: Vec<DistributionKind>,
    pub measures: Vec<MeasureKind>,
    pub replications: usize,
    pub n_perm: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Grids larger than 100 cells run queen-only (the study design).
    pub large_grids_queen_only: bool,
}

impl Default for PowerStudyConfig {
    fn default() -> Self {
        PowerStudyConfig {
            grids: vec![
                GridSize { rows: 10, cols: 10 },
                GridSize { rows: 20, cols: 20 },
            ],
            schemes: vec![Scheme::Queen, Scheme::Rook],
            rhos: vec![-0.7, -0.5, -0.3, 0.0, 0.3, 0.5, 0.7],
            distributions: DistributionKind::ALL.to_vec(),
            measures: MeasureKind::ALL.to_vec(),
            replications: 1000,
            n_perm: 999,
            alpha: 0.05,
            seed: 42,
            large_grids_queen_only: true,
        }
    }
}

/// A (grid, scheme, distribution, rho) experimental situation; all measures
/// share its fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellKey {
    pub grid: GridSize,
    pub scheme: Scheme,
    pub distribution: DistributionKind,
    pub rho: f64,
}

impl CellKey {
    fn label(&self) -> String {
        format!(
            "{}/{}/{}/rho={}",
            self.distribution, self.scheme, self.grid, self.rho
        )
    }
}

impl PowerStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grids.is_empty()
            || self.schemes.is_empty()
            || self.rhos.is_empty()
            || self.distributions.is_empty()
            || self.measures.is_empty()
        {
            return Err(Error::InvalidConfig(
                "grids, schemes, rhos, distributions, and measures must be nonempty".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        for &rho in &self.rhos {
            if !(-1.0 < rho && rho < 1.0) {
                return Err(Error::RhoOutOfRange(rho));
            }
        }
        for g in &self.grids {
            LatticeSpec::new(g.rows, g.cols, Scheme::Rook, false)?;
        }
        Ok(())
    }

    /// Cell enumeration in deterministic order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &grid in &self.grids {
            for &scheme in &self.schemes {
                if self.large_grids_queen_only && grid.len() > 100 && scheme == Scheme::Rook {
                    continue;
                }
                for &distribution in &self.distributions {
                    for &rho in &self.rhos {
                        out.push(CellKey {
                            grid,
                            scheme,
                            distribution,
                            rho,
                        });
                    }
                }
            }
        }
        out
    }
}

/// One (measure, cell) rejection rate with its Monte Carlo standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub measure: MeasureKind,
    pub distribution: DistributionKind,
    pub scheme: Scheme,
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    pub rho: f64,
    pub rate: f64,
    pub mc_se: f64,
    pub replications: usize,
    pub redraws: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerTable {
    pub config: PowerStudyConfig,
    pub cells: Vec<PowerCell>,
}

impl PowerTable {
    pub fn find(
        &self,
        measure: MeasureKind,
        distribution: DistributionKind,
        scheme: Scheme,
        grid: GridSize,
        rho: f64,
    ) -> Option<&PowerCell> {
        self.cells.iter().find(|c| {
            c.measure == measure
                && c.distribution == distribution
                && c.scheme == scheme
                && c.rows == grid.rows
                && c.cols == grid.cols
                && c.rho == rho
        })
    }
}

const REP_REDRAWS: u64 = 32;

/// Run every configured cell: SAR fields, one permutation test per measure,
/// shared draws across measures within a replication.
pub fn run_power_study<T: SarScalar>(config: &PowerStudyConfig) -> Result<PowerTable> {
    config.validate()?;
    let master = RngStream::new(config.seed);
    let mut cells = Vec::new();
    for key in config.cells() {
        let spec = LatticeSpec::new(key.grid.rows, key.grid.cols, key.scheme, false)?;
        let w = WeightMatrix::<T>::from_lattice(&spec)?;
        let sar = SarSystem::new(cast::<T>(key.rho), &w)?;
        let cell_stream = master.labeled(&key.label());

        let reps: Vec<Result<(Vec<bool>, usize)>> = (0..config.replications as u64)
            .into_par_iter()
            .map(|rep| {
                let rep_stream = cell_stream.child(rep);
                let mut last_err = Error::ZeroScale;
                for attempt in 0..REP_REDRAWS {
                    let s = rep_stream.child(attempt);
                    let field = sar.generate(key.distribution, &s.labeled("field"))?;
                    let mut rejects = Vec::with_capacity(config.measures.len());
                    let mut failed = false;
                    for &kind in &config.measures {
                        match permutation_test(
                            kind,
                            &w,
                            &field,
                            config.n_perm,
                            config.alpha,
                            &s.labeled(kind.name()),
                        ) {
                            Ok(r) => rejects.push(r.reject),
                            Err(e @ (Error::ZeroScale | Error::ZeroVariance)) => {
                                last_err = e;
                                failed = true;
                                break;
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    if !failed {
                        return Ok((rejects, attempt as usize));
                    }
                }
                Err(Error::RedrawsExhausted {
                    attempts: REP_REDRAWS as usize,
                    source: Box::new(last_err),
                })
            })
            .collect();

        let mut counts = vec![0usize; config.measures.len()];
        let mut redraws = 0usize;
        for rep in reps {
            let (rejects, attempts) = rep?;
            redraws += attempts;
            for (i, r) in rejects.iter().enumerate() {
                counts[i] += *r as usize;
            }
        }
        for (i, &measure) in config.measures.iter().enumerate() {
            let rate = counts[i] as f64 / config.replications as f64;
            cells.push(PowerCell {
                measure,
                distribution: key.distribution,
                scheme: key.scheme,
                rows: key.grid.rows,
                cols: key.grid.cols,
                n: key.grid.len(),
                rho: key.rho,
                rate,
                mc_se: (rate * (1.0 - rate) / config.replications as f64).sqrt(),
                replications: config.replications,
                redraws,
            });
        }
    }
    Ok(PowerTable {
        config: config.clone(),
        cells,
    })
}

/// Output layouts mirroring the study tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableLayout {
    /// Measures x distributions at rho = 0, queen scheme, smallest grid.
    Table1,
    /// One row per (distribution, measure, grid, scheme) with rho columns.
    AppendixLong,
}

impl std::str::FromStr for TableLayout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(TableLayout::Table1),
            "appendix" | "appendixlong" => Ok(TableLayout::AppendixLong),
            other => Err(Error::InvalidConfig(format!("unknown layout '{other}'"))),
        }
    }
}

impl std::fmt::Display for TableLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TableLayout::Table1 => "table1",
            TableLayout::AppendixLong => "appendix",
        })
    }
}

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

/// Format a table as CSV-ready rows (header first). Full round-trip decimal
/// columns come first, then the 2-decimal presentation columns.
pub fn emit_table(table: &PowerTable, layout: TableLayout) -> Result<Vec<Vec<String>>> {
    if table.cells.is_empty() {
        return Err(Error::MissingCells(vec!["table is empty".into()]));
    }
    let config = &table.config;
    match layout {
        TableLayout::Table1 => {
            let grid = *config
                .grids
                .iter()
                .min_by_key(|g| g.len())
                .expect("validated nonempty");
            let mut header = vec!["measure".to_string()];
            header.extend(config.distributions.iter().map(|d| d.to_string()));
            header.extend(
                config
                    .distributions
                    .iter()
                    .map(|d| format!("{d}_2dp")),
            );
            let mut rows = vec![header];
            let mut missing = Vec::new();
            for &measure in &config.measures {
                let mut full = Vec::new();
                let mut pretty = Vec::new();
                for &dist in &config.distributions {
                    match table.find(measure, dist, Scheme::Queen, grid, 0.0) {
                        Some(cell) => {
                            full.push(cell.rate.to_string());
                            pretty.push(fmt2(cell.rate));
                        }
                        None => missing.push(format!("{measure}/{dist}/queen/{grid}/rho=0")),
                    }
                }
                let mut row = vec![measure.to_string()];
                row.extend(full);
                row.extend(pretty);
                rows.push(row);
            }
            if !missing.is_empty() {
                return Err(Error::MissingCells(missing));
            }
            Ok(rows)
        }
        TableLayout::AppendixLong => {
            let mut header = vec![
                "distribution".to_string(),
                "measure".to_string(),
                "n".to_string(),
                "W".to_string(),
            ];
            header.extend(config.rhos.iter().map(|r| format!("rho_{r}")));
            header.extend(config.rhos.iter().map(|r| format!("rho_{r}_2dp")));
            let mut rows = vec![header];
            let mut missing = Vec::new();
            for &dist in &config.distributions {
                for &grid in &config.grids {
                    for &scheme in &config.schemes {
                        if config.large_grids_queen_only
                            && grid.len() > 100
                            && scheme == Scheme::Rook
                        {
                            continue;
                        }
                        for &measure in &config.measures {
                            let mut full = Vec::new();
                            let mut pretty = Vec::new();
                            for &rho in &config.rhos {
                                match table.find(measure, dist, scheme, grid, rho) {
                                    Some(cell) => {
                                        full.push(cell.rate.to_string());
                                        pretty.push(fmt2(cell.rate));
                                    }
                                    None => missing.push(format!(
                                        "{measure}/{dist}/{scheme}/{grid}/rho={rho}"
                                    )),
                                }
                            }
                            let mut row = vec![
                                dist.to_string(),
                                measure.to_string(),
                                grid.rows.to_string(),
                                scheme.letter().to_string(),
                            ];
                            row.extend(full);
                            row.extend(pretty);
                            rows.push(row);
                        }
                    }
                }
            }
            if !missing.is_empty() {
                return Err(Error::MissingCells(missing));
            }
            Ok(rows)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> PowerStudyConfig {
        PowerStudyConfig {
            grids: vec![GridSize { rows: 5, cols: 5 }],
            schemes: vec![Scheme::Queen],
            rhos: vec![0.0],
            distributions: vec![DistributionKind::Normal],
            measures: vec![MeasureKind::Mc, MeasureKind::Gk],
            replications: 8,
            n_perm: 19,
            alpha: 0.05,
            seed: 7,
            large_grids_queen_only: true,
        }
    }

    #[test]
    fn tiny_study_runs_and_is_deterministic() {
        let config = tiny_config();
        let a = run_power_study::<f64>(&config).unwrap();
        let b = run_power_study::<f64>(&config).unwrap();
        assert_eq!(a.cells.len(), 2);
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.rate, y.rate);
            assert!((0.0..=1.0).contains(&x.rate));
            assert_eq!(x.replications, 8);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = tiny_config();
        c.rhos = vec![1.5];
        assert!(matches!(
            run_power_study::<f64>(&c),
            Err(Error::RhoOutOfRange(_))
        ));
        let mut c = tiny_config();
        c.alpha = 0.0;
        assert!(matches!(
            run_power_study::<f64>(&c),
            Err(Error::InvalidConfig(_))
        ));
        let mut c = tiny_config();
        c.measures.clear();
        assert!(matches!(
            run_power_study::<f64>(&c),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn large_grids_run_queen_only_by_default() {
        let config = PowerStudyConfig {
            rhos: vec![0.0],
            distributions: vec![DistributionKind::Normal],
            measures: vec![MeasureKind::Mc],
            ..PowerStudyConfig::default()
        };
        let cells = config.cells();
        assert!(cells
            .iter()
            .any(|c| c.grid.len() == 100 && c.scheme == Scheme::Rook));
        assert!(!cells
            .iter()
            .any(|c| c.grid.len() == 400 && c.scheme == Scheme::Rook));
    }

    #[test]
    fn table1_layout_shape() {
        let config = PowerStudyConfig {
            grids: vec![GridSize { rows: 4, cols: 4 }],
            schemes: vec![Scheme::Queen],
            rhos: vec![0.0],
            distributions: DistributionKind::ALL.to_vec(),
            measures: MeasureKind::ALL.to_vec(),
            replications: 2,
            n_perm: 19,
            alpha: 0.05,
            seed: 3,
            large_grids_queen_only: true,
        };
        let table = run_power_study::<f64>(&config).unwrap();
        let rows = emit_table(&table, TableLayout::Table1).unwrap();
        assert_eq!(rows.len(), 9); // header + 8 measures
        assert_eq!(rows[0].len(), 1 + 4 + 4); // measure + 4 full + 4 pretty
    }

    #[test]
    fn appendix_layout_shape() {
        let config = PowerStudyConfig {
            grids: vec![GridSize { rows: 4, cols: 4 }],
            schemes: vec![Scheme::Queen, Scheme::Rook],
            rhos: vec![-0.3, 0.0, 0.3],
            distributions: vec![DistributionKind::Normal],
            measures: MeasureKind::ALL.to_vec(),
            replications: 2,
            n_perm: 19,
            alpha: 0.05,
            seed: 3,
            large_grids_queen_only: true,
        };
        let table = run_power_study::<f64>(&config).unwrap();
        let rows = emit_table(&table, TableLayout::AppendixLong).unwrap();
        // header + 8 measures x 2 schemes
        assert_eq!(rows.len(), 1 + 16);
    }

    #[test]
    fn missing_cells_are_reported() {
        let config = tiny_config();
        let mut table = run_power_study::<f64>(&config).unwrap();
        table.cells.remove(0);
        match emit_table(&table, TableLayout::Table1) {
            Err(Error::MissingCells(gaps)) => assert_eq!(gaps.len(), 1),
            other => panic!("expected MissingCells, got {other:?}"),
        }
        table.cells.clear();
        assert!(matches!(
            emit_table(&table, TableLayout::AppendixLong),
            Err(Error::MissingCells(_))
        ));
    }
}

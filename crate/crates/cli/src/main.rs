//! `spacorr`: generation, measurement, testing, influence, and power-study
//! workflows with reproducible manifests.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.

mod manifest;
mod plot;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use manifest::RunManifest;
use serde::Serialize;
use serde_json::json;
use spacorr::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spacorr",
    version,
    about = "Classical and robust spatial correlation measures, permutation tests, and Monte Carlo studies"
)]
struct Cli {
    /// Cap worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a SAR field Z = rho W Z + eps and write it as CSV
    Gen(GenArgs),
    /// Compute spatial correlation measures on a field
    Measure(MeasureArgs),
    /// Permutation test of no spatial correlation
    Test(TestArgs),
    /// Simulated influence curves under single-unit contamination
    Influence(InfluenceArgs),
    /// Monte Carlo power study over measures x distributions x rho
    Power(PowerArgs),
    /// Re-emit table layouts from a saved power study
    Report(ReportArgs),
}

/// Usage problems that clap cannot catch (e.g. missing --grid/--adjacency).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for Usage {}

#[derive(Args, Clone)]
struct WeightsArgs {
    /// Lattice size ROWSxCOLS
    #[arg(long)]
    grid: Option<GridSize>,

    /// Contiguity scheme for --grid
    #[arg(long, default_value = "queen")]
    scheme: Scheme,

    /// Wrap the lattice onto a torus
    #[arg(long)]
    torus: bool,

    /// Adjacency CSV with header i,j,w (alternative to --grid)
    #[arg(long, conflicts_with = "grid")]
    adjacency: Option<PathBuf>,
}

impl WeightsArgs {
    fn load(&self) -> Result<(WeightMatrix64, String)> {
        if let Some(path) = &self.adjacency {
            let (pairs, n) = io::read_adjacency_path::<f64>(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok((WeightMatrix::from_adjacency(&pairs, n)?, "adjacency".into()))
        } else if let Some(grid) = self.grid {
            let spec = LatticeSpec::new(grid.rows, grid.cols, self.scheme, self.torus)?;
            Ok((WeightMatrix::from_lattice(&spec)?, self.scheme.to_string()))
        } else {
            Err(Usage("either --grid or --adjacency is required".into()).into())
        }
    }

    fn argv(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Some(path) = &self.adjacency {
            v.push(format!("--adjacency={}", path.display()));
        } else if let Some(grid) = self.grid {
            v.push(format!("--grid={grid}"));
            v.push(format!("--scheme={}", self.scheme));
            if self.torus {
                v.push("--torus".into());
            }
        }
        v
    }
}

#[derive(Args)]
struct GenArgs {
    /// Lattice size ROWSxCOLS
    #[arg(long)]
    grid: GridSize,

    #[arg(long, default_value = "queen")]
    scheme: Scheme,

    #[arg(long)]
    torus: bool,

    /// SAR parameter, |rho| < 1
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    rho: f64,

    /// Innovation distribution
    #[arg(long, default_value = "normal")]
    dist: DistributionKind,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Rescale the field to unit sample variance
    #[arg(long)]
    standardize: bool,

    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    weights: WeightsArgs,

    /// Field CSV (single column, optional `z` header)
    #[arg(long)]
    input: PathBuf,

    /// Comma-separated measures
    #[arg(long, value_delimiter = ',', default_values_t = MeasureKind::ALL)]
    kinds: Vec<MeasureKind>,

    #[arg(long, default_value = "mean")]
    center: Centering,

    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    weights: WeightsArgs,

    #[arg(long)]
    input: PathBuf,

    #[arg(long, default_value = "MC")]
    kind: MeasureKind,

    #[arg(long = "n-perm", default_value_t = 999)]
    n_perm: usize,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long, default_value = "mean")]
    center: Centering,

    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct InfluenceArgs {
    #[arg(long, value_delimiter = ',', default_values_t = MeasureKind::ALL)]
    kinds: Vec<MeasureKind>,

    #[arg(long, default_value_t = 1000)]
    runs: usize,

    #[arg(long, default_value = "10x10")]
    grid: GridSize,

    #[arg(long, default_value = "rook")]
    scheme: Scheme,

    #[arg(long)]
    torus: bool,

    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    rho: f64,

    #[arg(long, default_value = "normal")]
    dist: DistributionKind,

    /// Contamination grid resolution
    #[arg(long, default_value_t = 41)]
    points: usize,

    #[arg(long = "min", default_value_t = -10.0, allow_negative_numbers = true)]
    grid_min: f64,

    #[arg(long = "max", default_value_t = 10.0, allow_negative_numbers = true)]
    grid_max: f64,

    /// 'random' or a fixed unit index
    #[arg(long, default_value = "random", value_parser = parse_unit)]
    unit: UnitSelection,

    /// Keep the generated field's scale instead of standardizing
    #[arg(long)]
    no_standardize: bool,

    /// Contaminate the unit's original value instead of pre-zeroing it
    #[arg(long)]
    no_zero_unit: bool,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct PowerArgs {
    /// JSON study configuration; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, value_delimiter = ',')]
    grids: Option<Vec<GridSize>>,

    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,

    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rhos: Option<Vec<f64>>,

    #[arg(long, value_delimiter = ',')]
    dists: Option<Vec<DistributionKind>>,

    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<MeasureKind>>,

    #[arg(long)]
    reps: Option<usize>,

    #[arg(long = "n-perm")]
    n_perm: Option<usize>,

    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long)]
    seed: Option<u64>,

    /// Also run rook cells on grids larger than 100 locations
    #[arg(long)]
    include_large_rook: bool,

    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// A power.json written by the power subcommand
    #[arg(long)]
    input: PathBuf,

    /// table1 or appendix
    #[arg(long, default_value = "table1")]
    layout: TableLayout,

    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_unit(s: &str) -> std::result::Result<UnitSelection, String> {
    if s.eq_ignore_ascii_case("random") {
        Ok(UnitSelection::Random)
    } else {
        s.parse::<usize>()
            .map(UnitSelection::Fixed)
            .map_err(|_| format!("'{s}' is neither 'random' nor a unit index"))
    }
}

fn unit_argv(unit: UnitSelection) -> String {
    match unit {
        UnitSelection::Random => "random".into(),
        UnitSelection::Fixed(u) => u.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<spacorr::Error>() {
            return if e.is_numerical() { 4 } else { 3 };
        }
    }
    3
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(args) => gen(args),
        Command::Measure(args) => measure(args),
        Command::Test(args) => test(args),
        Command::Influence(args) => influence(args),
        Command::Power(args) => power(args),
        Command::Report(args) => report(args),
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn gen(args: GenArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let spec = LatticeSpec::new(args.grid.rows, args.grid.cols, args.scheme, args.torus)?;
    let w = WeightMatrix64::from_lattice(&spec)?;
    let stream = RngStream::new(args.seed).labeled("gen");
    let mut field = sar_generate(args.rho, &w, args.dist, &stream)?;
    if args.standardize {
        field = field.standardize()?;
    }

    let mut argv = vec![
        "gen".to_string(),
        format!("--grid={}", args.grid),
        format!("--scheme={}", args.scheme),
    ];
    if args.torus {
        argv.push("--torus".into());
    }
    argv.push(format!("--rho={}", args.rho));
    argv.push(format!("--dist={}", args.dist));
    argv.push(format!("--seed={}", args.seed));
    if args.standardize {
        argv.push("--standardize".into());
    }
    argv.push(format!("--out={}", args.out.display()));

    let sidecar = json!({
        "seed": args.seed,
        "stream": stream,
        "rho": args.rho,
        "kind": args.dist,
        "spec": spec,
        "standardized": args.standardize,
        "n": field.len(),
    });
    let mut man = RunManifest::new("gen", Some(args.seed), sidecar.clone(), argv);

    let field_csv = args.out.join("field.csv");
    io::write_field_path(&field_csv, field.values())?;
    man.record(&field_csv);
    manifest::write_json(Some(&mut man), &args.out.join("field.json"), &sidecar)?;
    let man_path = man.write(&args.out)?;
    println!(
        "wrote {} ({} values), sidecar, and {}",
        field_csv.display(),
        field.len(),
        man_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct MeasureRow {
    kind: MeasureKind,
    value: f64,
    n: usize,
    scheme: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    one_minus_gc: Option<f64>,
}

fn measure(args: MeasureArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let (w, scheme) = args.weights.load()?;
    let raw = io::read_field_path::<f64>(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let field = Field::center(raw, args.center)?;

    let mut rows = Vec::new();
    for &kind in &args.kinds {
        let value = compute_measure(kind, &w, &field)?;
        rows.push(MeasureRow {
            kind,
            value,
            n: w.n(),
            scheme: scheme.clone(),
            one_minus_gc: (kind == MeasureKind::Gc).then_some(1.0 - value),
        });
        println!("{kind} = {value}");
    }

    let mut argv = vec!["measure".to_string()];
    argv.extend(args.weights.argv());
    argv.push(format!("--input={}", args.input.display()));
    argv.push(format!(
        "--kinds={}",
        args.kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
    ));
    argv.push(match args.center {
        Centering::Mean => "--center=mean".to_string(),
        Centering::Median => "--center=median".to_string(),
        Centering::None => "--center=none".to_string(),
    });
    argv.push(format!("--out={}", args.out.display()));

    let mut man = RunManifest::new(
        "measure",
        None,
        json!({"kinds": args.kinds, "center": args.center, "n": w.n(), "scheme": scheme}),
        argv,
    );
    manifest::write_json(Some(&mut man), &args.out.join("measures.json"), &rows)?;
    man.write(&args.out)?;
    Ok(())
}

fn test(args: TestArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let (w, scheme) = args.weights.load()?;
    let raw = io::read_field_path::<f64>(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let field = Field::center(raw, args.center)?;
    let stream = RngStream::new(args.seed).labeled("test").labeled(args.kind.name());
    let result = permutation_test(args.kind, &w, &field, args.n_perm, args.alpha, &stream)?;
    println!(
        "{} = {}; p = {} ({} permutations); {} H0 at alpha = {}",
        result.kind,
        result.statistic,
        result.p_value,
        result.n_permutations,
        if result.reject { "reject" } else { "retain" },
        result.alpha
    );

    let mut argv = vec!["test".to_string()];
    argv.extend(args.weights.argv());
    argv.push(format!("--input={}", args.input.display()));
    argv.push(format!("--kind={}", args.kind));
    argv.push(format!("--n-perm={}", args.n_perm));
    argv.push(format!("--alpha={}", args.alpha));
    argv.push(format!("--seed={}", args.seed));
    argv.push(match args.center {
        Centering::Mean => "--center=mean".to_string(),
        Centering::Median => "--center=median".to_string(),
        Centering::None => "--center=none".to_string(),
    });
    argv.push(format!("--out={}", args.out.display()));

    let mut man = RunManifest::new(
        "test",
        Some(args.seed),
        json!({"kind": args.kind, "n_perm": args.n_perm, "alpha": args.alpha, "scheme": scheme}),
        argv,
    );
    manifest::write_json(Some(&mut man), &args.out.join("test.json"), &result)?;
    man.write(&args.out)?;
    Ok(())
}

fn influence(args: InfluenceArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let config = InfluenceConfig {
        lattice: LatticeSpec::new(args.grid.rows, args.grid.cols, args.scheme, args.torus)?,
        rho: args.rho,
        distribution: args.dist,
        runs: args.runs,
        grid_min: args.grid_min,
        grid_max: args.grid_max,
        grid_points: args.points,
        unit: args.unit,
        standardize: !args.no_standardize,
        zero_unit: !args.no_zero_unit,
    };
    let stream = RngStream::new(args.seed).labeled("influence");
    let curves: Vec<InfluenceCurve64> = influence_curves(&args.kinds, &config, &stream)?;

    let mut csv_rows = vec![vec![
        "z1".to_string(),
        "mean_influence".to_string(),
        "kind".to_string(),
    ]];
    for curve in &curves {
        for (z1, infl) in curve.grid.iter().zip(&curve.mean_influence) {
            csv_rows.push(vec![z1.to_string(), infl.to_string(), curve.kind.to_string()]);
        }
        println!("{}: max |mean influence| = {:.4}", curve.kind, curve.max_abs());
    }

    let series: Vec<plot::Series> = curves
        .iter()
        .map(|c| plot::Series {
            name: c.kind.to_string(),
            points: c.grid.iter().copied().zip(c.mean_influence.iter().copied()).collect(),
        })
        .collect();
    let svg = plot::line_chart(
        &format!(
            "Simulated influence, {} runs, {} {}, rho = {}",
            args.runs, args.grid, args.scheme, args.rho
        ),
        "contamination value z1",
        "mean influence",
        &series,
    );

    let mut argv = vec![
        "influence".to_string(),
        format!(
            "--kinds={}",
            args.kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
        ),
        format!("--runs={}", args.runs),
        format!("--grid={}", args.grid),
        format!("--scheme={}", args.scheme),
    ];
    if args.torus {
        argv.push("--torus".into());
    }
    argv.push(format!("--rho={}", args.rho));
    argv.push(format!("--dist={}", args.dist));
    argv.push(format!("--points={}", args.points));
    argv.push(format!("--min={}", args.grid_min));
    argv.push(format!("--max={}", args.grid_max));
    argv.push(format!("--unit={}", unit_argv(args.unit)));
    if args.no_standardize {
        argv.push("--no-standardize".into());
    }
    if args.no_zero_unit {
        argv.push("--no-zero-unit".into());
    }
    argv.push(format!("--seed={}", args.seed));
    argv.push(format!("--out={}", args.out.display()));

    let mut man = RunManifest::new(
        "influence",
        Some(args.seed),
        serde_json::to_value(&config)?,
        argv,
    );
    manifest::write_csv_rows(Some(&mut man), &args.out.join("influence.csv"), &csv_rows)?;
    manifest::write_text(Some(&mut man), &args.out.join("influence.svg"), &svg)?;
    man.write(&args.out)?;
    Ok(())
}

fn power(args: PowerArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let mut config = match &args.config {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<PowerStudyConfig>(&body)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => PowerStudyConfig::default(),
    };
    if let Some(grids) = args.grids {
        config.grids = grids;
    }
    if let Some(schemes) = args.schemes {
        config.schemes = schemes;
    }
    if let Some(rhos) = args.rhos {
        config.rhos = rhos;
    }
    if let Some(dists) = args.dists {
        config.distributions = dists;
    }
    if let Some(kinds) = args.kinds {
        config.measures = kinds;
    }
    if let Some(reps) = args.reps {
        config.replications = reps;
    }
    if let Some(n_perm) = args.n_perm {
        config.n_perm = n_perm;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.include_large_rook {
        config.large_grids_queen_only = false;
    }

    let table = run_power_study::<f64>(&config)?;

    let config_path = args.out.join("power.config.json");
    let argv = vec![
        "power".to_string(),
        format!("--config={}", config_path.display()),
        format!("--out={}", args.out.display()),
    ];
    let mut man = RunManifest::new(
        "power",
        Some(config.seed),
        serde_json::to_value(&config)?,
        argv,
    );
    manifest::write_json(Some(&mut man), &config_path, &config)?;
    manifest::write_json(Some(&mut man), &args.out.join("power.json"), &table)?;

    let mut cell_rows = vec![vec![
        "measure".to_string(),
        "distribution".to_string(),
        "scheme".to_string(),
        "rows".to_string(),
        "cols".to_string(),
        "n".to_string(),
        "rho".to_string(),
        "rate".to_string(),
        "mc_se".to_string(),
        "replications".to_string(),
        "redraws".to_string(),
    ]];
    for c in &table.cells {
        cell_rows.push(vec![
            c.measure.to_string(),
            c.distribution.to_string(),
            c.scheme.to_string(),
            c.rows.to_string(),
            c.cols.to_string(),
            c.n.to_string(),
            c.rho.to_string(),
            c.rate.to_string(),
            c.mc_se.to_string(),
            c.replications.to_string(),
            c.redraws.to_string(),
        ]);
    }
    manifest::write_csv_rows(Some(&mut man), &args.out.join("power_cells.csv"), &cell_rows)?;

    for (layout, name) in [
        (TableLayout::Table1, "table1.csv"),
        (TableLayout::AppendixLong, "appendix.csv"),
    ] {
        match emit_table(&table, layout) {
            Ok(rows) => {
                manifest::write_csv_rows(Some(&mut man), &args.out.join(name), &rows)?
            }
            Err(Error::MissingCells(_)) => {
                println!("skipping {name}: study config does not cover that layout");
            }
            Err(e) => return Err(e.into()),
        }
    }

    // bar chart of rho = 0 rates per measure, one bar per cell variant
    let null_cells: Vec<&PowerCell> = table.cells.iter().filter(|c| c.rho == 0.0).collect();
    if !null_cells.is_empty() {
        let mut variants: Vec<String> = Vec::new();
        for c in &null_cells {
            let label = format!("{}/{}/{}x{}", c.distribution, c.scheme.letter(), c.rows, c.cols);
            if !variants.contains(&label) {
                variants.push(label);
            }
        }
        let groups: Vec<plot::BarGroup> = config
            .measures
            .iter()
            .map(|&m| plot::BarGroup {
                label: m.to_string(),
                values: variants
                    .iter()
                    .map(|v| {
                        null_cells
                            .iter()
                            .find(|c| {
                                c.measure == m
                                    && format!(
                                        "{}/{}/{}x{}",
                                        c.distribution,
                                        c.scheme.letter(),
                                        c.rows,
                                        c.cols
                                    ) == *v
                            })
                            .map(|c| c.rate)
                            .unwrap_or(0.0)
                    })
                    .collect(),
            })
            .collect();
        let svg = plot::bar_chart(
            "Empirical rejection rate at rho = 0",
            "rejection rate",
            &variants,
            &groups,
        );
        manifest::write_text(Some(&mut man), &args.out.join("power.svg"), &svg)?;
    }

    let man_path = man.write(&args.out)?;
    println!(
        "power study: {} cells -> {} and {}",
        table.cells.len(),
        args.out.join("power.json").display(),
        man_path.display()
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    ensure_out(&args.out)?;
    let body = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let table: PowerTable = serde_json::from_str(&body)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let rows = emit_table(&table, args.layout)?;
    let name = match args.layout {
        TableLayout::Table1 => "table1.csv",
        TableLayout::AppendixLong => "appendix.csv",
    };

    let argv = vec![
        "report".to_string(),
        format!("--input={}", args.input.display()),
        format!("--layout={}", args.layout),
        format!("--out={}", args.out.display()),
    ];
    let mut man = RunManifest::new("report", None, json!({"layout": args.layout}), argv);
    manifest::write_csv_rows(Some(&mut man), &args.out.join(name), &rows)?;
    man.write(&args.out)?;
    println!("wrote {}", args.out.join(name).display());
    Ok(())
}

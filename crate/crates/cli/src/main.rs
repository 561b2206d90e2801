mod grid;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jsdknn_core::io::{self, CsvSchema};
use jsdknn_core::simulation::{
    benchmark, inject_aggregation, inject_mar_sorted, inject_mcar, BenchmarkConfig, BenchmarkReport, InjectionSpec,
    Method, RowSelector, SpeedupCell,
};
use jsdknn_core::tune::{MetricChoice, PatternTuning};
use jsdknn_core::{
    closure, contour_grid, frechet_trajectory, impute, impute_adaptive, impute_baseline_aitchison, tune,
    tune_per_pattern, Aggregation, Alpha, CompositionalTable, CvSettings, DistanceKind, ImputationResult,
    ImputerConfig, MissingnessPattern, TuningReport, Warning,
};

use crate::grid::{AlphaGrid, KGrid, Sizes};

#[derive(Parser)]
#[command(name = "jsdknn", version, about = "k-NN imputation of compositional data with the Jensen-Shannon divergence")]
struct Cli {
    /// Significant digits in CSV output.
    #[arg(long, global = true, default_value_t = 10)]
    precision: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fill the missing cells of a table.
    Impute {
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        alpha: f64,
        /// Tune (alpha, k) per missingness pattern by cross-validation.
        #[arg(long, conflicts_with = "baseline")]
        adaptive: bool,
        /// Use Aitchison-distance k-NN instead.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Seed for the cross-validation of --adaptive.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        donor_log: Option<PathBuf>,
    },
    /// Choose (alpha, k) by repeated cross-validation.
    Tune {
        input: PathBuf,
        #[arg(long, value_parser = grid::k_grid)]
        k_grid: Option<KGrid>,
        #[arg(long, allow_hyphen_values = true, value_parser = grid::alpha_grid)]
        alpha_grid: Option<AlphaGrid>,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Metric::Auto)]
        metric: Metric,
        /// Also tune every missingness pattern separately.
        #[arg(long)]
        per_pattern: bool,
        #[arg(short, long)]
        output: PathBuf,
        /// Flat alpha,k,mean_score table.
        #[arg(long)]
        scores_csv: Option<PathBuf>,
    },
    /// Hide cells of a complete table.
    Inject {
        input: PathBuf,
        #[arg(long, value_enum)]
        mechanism: Mechanism,
        #[arg(long, default_value_t = 0.10)]
        row_frac: f64,
        #[arg(long, default_value_t = 0.5)]
        comp_frac: f64,
        /// Columns hidden together by the aggregate mechanism.
        #[arg(long, value_delimiter = ',')]
        group: Vec<String>,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Time JSD k-NN against Aitchison k-NN on Dirichlet data.
    Benchmark {
        #[arg(long, value_parser = grid::sizes)]
        sizes: Option<Sizes>,
        #[arg(long, value_parser = grid::k_grid)]
        k: Option<KGrid>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        /// Also score the global-mean imputer.
        #[arg(long)]
        with_global_mean: bool,
        #[arg(short, long)]
        output: PathBuf,
        /// Speed-up grid with rows n and columns D.
        #[arg(long)]
        speedup_csv: Option<PathBuf>,
    },
    /// Distance from a centre over a lattice of the 3-part simplex.
    Contours {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        resolution: usize,
        #[arg(long, value_parser = grid::parse_triple)]
        center: Option<[f64; 3]>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fréchet means of the complete rows along an alpha grid.
    Trajectory {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true, value_parser = grid::alpha_grid)]
        alpha_grid: AlphaGrid,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    AitchisonMean,
    AitchisonMedian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Auto,
    Aitchison,
    Jsd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mechanism {
    Mcar,
    MarSorted,
    Aggregate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Jsd,
    Aitchison,
}

fn emit_warnings(warnings: &[Warning]) -> Result<()> {
    for line in io::warning_lines(warnings)? {
        eprintln!("{line}");
    }
    Ok(())
}

fn read(path: &Path) -> Result<CompositionalTable> {
    let (table, warnings) = io::read_table(path, &CsvSchema::default())?;
    emit_warnings(&warnings)?;
    Ok(table)
}

fn schema(precision: usize) -> CsvSchema {
    CsvSchema {
        precision,
        ..CsvSchema::default()
    }
}

#[derive(Serialize)]
struct PatternEntry<'a> {
    pattern: &'a MissingnessPattern,
    rows: usize,
    #[serde(flatten)]
    tuning: &'a PatternTuning,
}

#[derive(Serialize)]
struct TuneOutput<'a> {
    #[serde(flatten)]
    report: &'a TuningReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_pattern: Option<Vec<PatternEntry<'a>>>,
}

#[derive(Serialize)]
struct BenchmarkOutput<'a> {
    #[serde(flatten)]
    report: &'a BenchmarkReport,
    speedups: Vec<SpeedupCell>,
}

fn run_impute(
    table: &CompositionalTable,
    k: usize,
    alpha: f64,
    adaptive: bool,
    baseline: Option<Baseline>,
    seed: u64,
    reps: Option<usize>,
) -> Result<ImputationResult> {
    if adaptive {
        let mut settings = CvSettings::for_table(table);
        settings.seed = seed;
        if let Some(reps) = reps {
            settings.repetitions = reps;
        }
        return Ok(impute_adaptive(table, &settings)?.result);
    }
    Ok(match baseline {
        Some(Baseline::AitchisonMean) => impute_baseline_aitchison(table, k, Aggregation::Mean)?,
        Some(Baseline::AitchisonMedian) => impute_baseline_aitchison(table, k, Aggregation::Median)?,
        None => impute(table, &ImputerConfig::new(k, Alpha::new(alpha)?)?)?,
    })
}

fn column_index(table: &CompositionalTable, name: &str) -> Result<usize> {
    table
        .column_names()
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| anyhow!("unknown column '{name}'"))
}

fn run(cli: Cli) -> Result<()> {
    let precision = cli.precision;
    match cli.command {
        Command::Impute {
            input,
            k,
            alpha,
            adaptive,
            baseline,
            seed,
            reps,
            output,
            donor_log,
        } => {
            let table = read(&input)?;
            let result = run_impute(&table, k, alpha, adaptive, baseline, seed, reps)?;
            io::write_table(&output, &result.completed, &schema(precision))?;
            if let Some(path) = donor_log {
                io::write_donor_log(path, &result.donor_log, precision)?;
            }
            emit_warnings(&result.warnings)?;
        }
        Command::Tune {
            input,
            k_grid,
            alpha_grid,
            reps,
            seed,
            metric,
            per_pattern,
            output,
            scores_csv,
        } => {
            let table = read(&input)?;
            let mut settings = CvSettings::for_table(&table);
            if let Some(KGrid(k_grid)) = k_grid {
                settings.k_grid = k_grid;
            }
            if let Some(AlphaGrid(alpha_grid)) = alpha_grid {
                settings.alpha_grid = alpha_grid;
            }
            settings.repetitions = reps;
            settings.seed = seed;
            settings.metric = match metric {
                Metric::Auto => MetricChoice::Auto,
                Metric::Aitchison => MetricChoice::Aitchison,
                Metric::Jsd => MetricChoice::Jsd,
            };
            let patterns = table.pattern_counts();
            if patterns.is_empty() {
                bail!("table has no missing values to tune for");
            }
            let report = tune(&table, &patterns, &settings)?;
            let per = per_pattern.then(|| tune_per_pattern(&table, &patterns, &settings));
            let out = TuneOutput {
                report: &report,
                per_pattern: per.as_ref().map(|per| {
                    patterns
                        .iter()
                        .map(|(p, rows)| PatternEntry {
                            pattern: p,
                            rows: *rows,
                            tuning: &per[p],
                        })
                        .collect()
                }),
            };
            io::write_json(&output, &out)?;
            if let Some(path) = scores_csv {
                std::fs::write(&path, report.to_csv()).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            }
            emit_warnings(&report.warnings)?;
        }
        Command::Inject {
            input,
            mechanism,
            row_frac,
            comp_frac,
            group,
            seed,
            output,
            truth,
        } => {
            let table = read(&input)?;
            let injection = match mechanism {
                Mechanism::Mcar => inject_mcar(&table, &InjectionSpec::mcar(row_frac, comp_frac, seed))?,
                Mechanism::MarSorted => inject_mar_sorted(&table, &InjectionSpec::mar_sorted(row_frac, seed))?,
                Mechanism::Aggregate => {
                    if group.is_empty() {
                        bail!("--group is required for the aggregate mechanism");
                    }
                    let columns = group
                        .iter()
                        .map(|name| column_index(&table, name.trim()))
                        .collect::<Result<Vec<_>>>()?;
                    inject_aggregation(
                        &table,
                        &columns,
                        &RowSelector::Fraction {
                            fraction: row_frac,
                            seed,
                        },
                    )?
                }
            };
            io::write_table(&output, &injection.masked, &schema(precision))?;
            io::write_truth(&truth, &injection.truth, table.column_names(), precision)?;
        }
        Command::Benchmark {
            sizes,
            k,
            reps,
            seed,
            with_global_mean,
            output,
            speedup_csv,
        } => {
            let mut config = BenchmarkConfig {
                repetitions: reps,
                seed,
                ..BenchmarkConfig::default()
            };
            if let Some(Sizes(sizes)) = sizes {
                config.sizes = sizes;
            }
            if let Some(KGrid(k)) = k {
                config.k_values = k;
            }
            if with_global_mean {
                config.methods.push(Method::GlobalMean { alpha: Alpha::ONE });
            }
            let report = benchmark(&config)?;
            let (slow, fast) = (config.methods[1].name(), config.methods[0].name());
            let table = report.speedup_table_csv(&slow, &fast);
            io::write_json(
                &output,
                &BenchmarkOutput {
                    report: &report,
                    speedups: report.speedups(&slow, &fast),
                },
            )?;
            if let Some(path) = speedup_csv {
                std::fs::write(&path, &table).map_err(|e| anyhow!("{}: {e}", path.display()))?;
            }
            print!("{table}");
        }
        Command::Contours {
            kind,
            resolution,
            center,
            output,
        } => {
            let center = closure(&center.unwrap_or([1.0, 1.0, 1.0]))?;
            let kind = match kind {
                Kind::Jsd => DistanceKind::Jsd,
                Kind::Aitchison => DistanceKind::Aitchison,
            };
            let grid = contour_grid(&center, resolution, kind)?;
            io::write_contours(&output, &grid, precision)?;
        }
        Command::Trajectory {
            input,
            alpha_grid: AlphaGrid(alpha_grid),
            output,
        } => {
            let table = read(&input)?;
            let rows: Vec<&[f64]> = table.partition().complete.iter().map(|&r| table.row(r)).collect();
            if rows.is_empty() {
                bail!("table has no complete rows");
            }
            let means = frechet_trajectory(&rows, &alpha_grid)?;
            io::write_trajectory(&output, &alpha_grid, &means, table.column_names(), precision)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<jsdknn_core::Error>().map_or("Error", |e| e.kind());
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{kind}]: {message}");
            ExitCode::FAILURE
        }
    }
}

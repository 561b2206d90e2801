//! Error and wall-clock comparison of imputation methods on Dirichlet data.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::distance::DistanceKind;
use crate::error::{Error, Result};
use crate::frechet::{frechet_mean, Alpha};
use crate::impute::{impute, impute_baseline_aitchison, Aggregation, ImputerConfig};
use crate::rng::derive_seed;
use crate::simplex::{closure, CompositionalTable};

use super::{evaluate, generate_dirichlet, inject_mcar, InjectionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// JSD k-NN with Fréchet aggregation.
    JsdKnn { alpha: Alpha },
    /// Aitchison-distance k-NN with mean or median aggregation.
    AitchisonKnn { aggregation: Aggregation },
    /// Every missing cell takes the matching part of the Fréchet mean of all
    /// complete rows; the row is then closed. Ignores `k`.
    GlobalMean { alpha: Alpha },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::JsdKnn { alpha } if alpha.value() == 1.0 => "jsd-knn".into(),
            Method::JsdKnn { alpha } => format!("jsd-knn(alpha={alpha})"),
            Method::AitchisonKnn { aggregation: Aggregation::Median } => "aitchison-knn-median".into(),
            Method::AitchisonKnn { .. } => "aitchison-knn-mean".into(),
            Method::GlobalMean { .. } => "global-mean".into(),
        }
    }

    /// Completed table for `table`.
    pub fn run(&self, table: &CompositionalTable, k: usize) -> Result<CompositionalTable> {
        match *self {
            Method::JsdKnn { alpha } => Ok(impute(table, &ImputerConfig::new(k, alpha)?)?.completed),
            Method::AitchisonKnn { aggregation } => Ok(impute_baseline_aitchison(table, k, aggregation)?.completed),
            Method::GlobalMean { alpha } => impute_global_mean(table, alpha),
        }
    }
}

/// Naive comparator: fills each missing cell with the corresponding part of
/// the Fréchet mean of all complete rows and closes the row.
pub fn impute_global_mean(table: &CompositionalTable, alpha: Alpha) -> Result<CompositionalTable> {
    let partition = table.partition();
    if partition.complete.is_empty() {
        return Err(Error::NoDonors {
            row: partition.incomplete.first().copied().unwrap_or(0),
        });
    }
    let donors: Vec<&[f64]> = partition.complete.iter().map(|&r| table.row(r)).collect();
    let centre = frechet_mean(&donors, alpha)?;
    let mut rows = Vec::with_capacity(table.n_rows());
    for r in 0..table.n_rows() {
        let filled: Vec<f64> = table
            .row(r)
            .iter()
            .zip(table.row_mask(r))
            .zip(centre.iter())
            .map(|((&v, &observed), &m)| if observed { v } else { m })
            .collect();
        rows.push(closure(&filled)?.into_vec());
    }
    CompositionalTable::from_complete_rows(&rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    /// `(n, d)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub k_values: Vec<usize>,
    pub row_fraction: f64,
    pub component_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// Error metric; Aitchison by default since Dirichlet data have no zeros.
    pub metric: DistanceKind,
}

impl Default for BenchmarkConfig {
    /// The timing-study layout: n in {500, ..., 10000}, d in {10, 15, 20},
    /// k = 2..=10, 10% of rows missing 30% of their parts, 20 repetitions.
    fn default() -> Self {
        let ns = [500, 1000, 2000, 5000, 10000];
        let ds = [10, 15, 20];
        Self {
            methods: vec![
                Method::JsdKnn { alpha: Alpha::ONE },
                Method::AitchisonKnn {
                    aggregation: Aggregation::Mean,
                },
            ],
            sizes: ns.iter().flat_map(|&n| ds.iter().map(move |&d| (n, d))).collect(),
            k_values: (2..=10).collect(),
            row_fraction: 0.10,
            component_fraction: 0.30,
            repetitions: 20,
            seed: 0,
            metric: DistanceKind::Aitchison,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRecord {
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub alpha: Option<f64>,
    /// Mean over successful repetitions; `None` when every one failed.
    pub mean_distance: Option<f64>,
    pub repetitions: usize,
    pub failures: usize,
    pub mean_seconds: f64,
    pub median_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

/// Ratio of two methods' total run time (summed over k) at one size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedupCell {
    pub n: usize,
    pub d: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub records: Vec<EvaluationRecord>,
}

impl BenchmarkReport {
    /// Per size, total mean run time of `slow` divided by that of `fast`.
    pub fn speedups(&self, slow: &str, fast: &str) -> Vec<SpeedupCell> {
        self.config
            .sizes
            .iter()
            .filter_map(|&(n, d)| {
                let total = |name: &str| -> f64 {
                    self.records
                        .iter()
                        .filter(|r| r.method == name && r.n == n && r.d == d)
                        .map(|r| r.mean_seconds)
                        .sum()
                };
                let (s, f) = (total(slow), total(fast));
                (f > 0.0 && s > 0.0).then(|| SpeedupCell { n, d, ratio: s / f })
            })
            .collect()
    }

    /// Speed-up grid with one row per n and one column per d.
    pub fn speedup_table_csv(&self, slow: &str, fast: &str) -> String {
        let cells = self.speedups(slow, fast);
        let mut ns: Vec<usize> = self.config.sizes.iter().map(|s| s.0).collect();
        let mut ds: Vec<usize> = self.config.sizes.iter().map(|s| s.1).collect();
        ns.sort_unstable();
        ns.dedup();
        ds.sort_unstable();
        ds.dedup();
        let mut out = String::from("n");
        for d in &ds {
            out.push_str(&format!(",D={d}"));
        }
        out.push('\n');
        for n in &ns {
            out.push_str(&format!("n={n}"));
            for d in &ds {
                match cells.iter().find(|c| c.n == *n && c.d == *d) {
                    Some(c) => out.push_str(&format!(",{:.2}", c.ratio)),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Runs every method at every size and k, `repetitions` times each, on fresh
/// Dirichlet data with MCAR missingness. Methods run one after another; only
/// the imputation call is timed. A failing cell is recorded, not fatal.
pub fn benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig("no methods to benchmark".into()));
    }
    if config.repetitions == 0 || config.k_values.is_empty() || config.sizes.is_empty() {
        return Err(Error::InvalidConfig("benchmark grid is empty".into()));
    }
    struct Cell {
        distances: Vec<f64>,
        durations: Vec<f64>,
        failures: usize,
        last_error: Option<String>,
    }
    let mut records = Vec::new();
    for (size_index, &(n, d)) in config.sizes.iter().enumerate() {
        let mut cells: Vec<Vec<Cell>> = config
            .methods
            .iter()
            .map(|_| {
                config
                    .k_values
                    .iter()
                    .map(|_| Cell {
                        distances: Vec::new(),
                        durations: Vec::new(),
                        failures: 0,
                        last_error: None,
                    })
                    .collect()
            })
            .collect();
        for rep in 0..config.repetitions {
            let data_seed = derive_seed(config.seed, "benchmark", size_index as u64, rep as u64);
            let table = generate_dirichlet(n, d, data_seed)?;
            let spec = InjectionSpec::mcar(config.row_fraction, config.component_fraction, data_seed);
            let injection = inject_mcar(&table, &spec)?;
            for (m, method) in config.methods.iter().enumerate() {
                for (ki, &k) in config.k_values.iter().enumerate() {
                    let cell = &mut cells[m][ki];
                    let start = Instant::now();
                    let outcome = method.run(&injection.masked, k);
                    let elapsed = start.elapsed().max(Duration::from_nanos(1));
                    cell.durations.push(elapsed.as_secs_f64());
                    match outcome.and_then(|completed| evaluate(&injection, &completed, config.metric)) {
                        Ok(v) => cell.distances.push(v),
                        Err(e) => {
                            cell.failures += 1;
                            cell.last_error = Some(e.to_string());
                        }
                    }
                }
            }
        }
        for (m, method) in config.methods.iter().enumerate() {
            for (ki, &k) in config.k_values.iter().enumerate() {
                let cell = &mut cells[m][ki];
                let mean_distance =
                    (!cell.distances.is_empty()).then(|| cell.distances.iter().sum::<f64>() / cell.distances.len() as f64);
                let mean_seconds = cell.durations.iter().sum::<f64>() / cell.durations.len() as f64;
                records.push(EvaluationRecord {
                    method: method.name(),
                    n,
                    d,
                    k,
                    alpha: match method {
                        Method::JsdKnn { alpha } | Method::GlobalMean { alpha } => Some(alpha.value()),
                        Method::AitchisonKnn { .. } => None,
                    },
                    mean_distance,
                    repetitions: config.repetitions,
                    failures: cell.failures,
                    mean_seconds,
                    median_seconds: median(&mut cell.durations),
                    last_error: cell.last_error.take(),
                });
            }
        }
    }
    Ok(BenchmarkReport {
        config: config.clone(),
        records,
    })
}

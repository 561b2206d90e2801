//! k-NN imputation of incomplete compositional rows.
//!
//! Donors are always complete rows. For each incomplete row the complete rows
//! are ranked by the distance between closed observed sub-vectors, the `k`
//! nearest full rows are aggregated, and the aggregate's missing parts are
//! closed and scaled to the row's free mass. Observed cells are copied
//! through untouched.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::distance::{aitchison_distance, jsd_cached, jsd_unchecked, plogp_sum, DistanceKind};
use crate::error::{Error, Result};
use crate::frechet::{frechet_mean_detailed, Alpha};
use crate::simplex::{decompose_target, donor_subrows, CompositionalTable, DonorSubRows, MissingnessPattern, RowDecomposition};
use crate::tune::{tune, tune_per_pattern, CvSettings, PatternTuning, TuningReport};
use crate::warning::Warning;

/// Default neighbour count.
pub const DEFAULT_K: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ImputerConfig {
    pub k: usize,
    pub alpha: Alpha,
    /// Use `per_pattern_params` where a row's pattern has an entry.
    pub adaptive: bool,
    pub per_pattern_params: BTreeMap<MissingnessPattern, (Alpha, usize)>,
}

impl Default for ImputerConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            alpha: Alpha::ONE,
            adaptive: false,
            per_pattern_params: BTreeMap::new(),
        }
    }
}

impl ImputerConfig {
    pub fn new(k: usize, alpha: Alpha) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(Self {
            k,
            alpha,
            ..Self::default()
        })
    }

    /// `(alpha, k)` to use for a row with the given pattern.
    pub fn params_for(&self, pattern: &MissingnessPattern) -> (Alpha, usize) {
        if self.adaptive {
            if let Some(&p) = self.per_pattern_params.get(pattern) {
                return p;
            }
        }
        (self.alpha, self.k)
    }
}

/// How the `k` donor rows are combined into one composition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum Aggregation {
    /// Power Fréchet mean.
    Frechet(Alpha),
    /// Coordinate-wise arithmetic mean.
    Mean,
    /// Coordinate-wise median.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImputedCell {
    pub row: usize,
    pub column: usize,
    pub value: f64,
}

/// Donors used for one incomplete row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DonorRecord {
    pub row: usize,
    pub k: usize,
    /// `None` for mean/median aggregation.
    pub alpha: Option<Alpha>,
    pub donors: Vec<usize>,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    pub completed: CompositionalTable,
    pub imputed_cells: Vec<ImputedCell>,
    pub donor_log: Vec<DonorRecord>,
    pub warnings: Vec<Warning>,
}

/// Complete rows ordered by distance to one incomplete row.
#[derive(Debug, Clone)]
pub(crate) struct Ranking {
    pub target: RowDecomposition,
    /// `(row, distance)`, nearest first, ties by row index.
    pub neighbors: Vec<(usize, f64)>,
    pub usable: usize,
    pub warnings: Vec<Warning>,
}

/// Imputed values for one row.
#[derive(Debug, Clone)]
pub(crate) struct RowCompletion {
    pub values: Vec<(usize, f64)>,
    pub warnings: Vec<Warning>,
}

/// Ranks usable donors of `row` and keeps the nearest `limit`.
pub(crate) fn rank_donors(
    table: &CompositionalTable,
    row: usize,
    donors: &DonorSubRows,
    kind: DistanceKind,
    limit: usize,
) -> Result<Ranking> {
    let target = decompose_target(table, row)?;
    if donors.is_empty() {
        return Err(Error::NoDonors { row });
    }
    if donors.len() < limit {
        return Err(Error::InsufficientDonors {
            row,
            needed: limit,
            available: donors.len(),
        });
    }
    let order = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    let mut neighbors = Vec::with_capacity(donors.len());
    match kind {
        DistanceKind::Jsd => {
            let ht = plogp_sum(&target.observed_sub);
            // Positions stand in for row indices; donors are in row order.
            for (i, ((_, sub), &hd)) in donors.iter().zip(donors.entropies()).enumerate() {
                neighbors.push((i, jsd_cached(&target.observed_sub, ht, sub, hd)));
            }
        }
        DistanceKind::Aitchison => {
            for (donor, sub) in donors.iter() {
                let d = aitchison_distance(&target.observed_sub, sub).map_err(|e| match e {
                    Error::ZeroInLogRatio { context } => Error::ZeroInLogRatio {
                        context: format!("row {row} vs donor {donor}, {context}"),
                    },
                    other => other,
                })?;
                neighbors.push((donor, d));
            }
        }
    }
    if limit < neighbors.len() {
        neighbors.select_nth_unstable_by(limit, order);
        neighbors.truncate(limit);
    }
    if kind == DistanceKind::Jsd {
        // Report exact divergences for the kept donors.
        for n in &mut neighbors {
            *n = (donors.rows[n.0], jsd_unchecked(&target.observed_sub, donors.sub(n.0)));
        }
    }
    neighbors.sort_unstable_by(order);

    let mut warnings = Vec::new();
    if target.clamped {
        warnings.push(Warning::MissingTotalClamped {
            row,
            observed_sum: target.observed_sum,
        });
    }
    warnings.extend(donors.excluded.iter().map(|&donor| Warning::DonorExcluded { row, donor }));
    Ok(Ranking {
        target,
        neighbors,
        usable: donors.len(),
        warnings,
    })
}

/// Aggregates the first `k` ranked donors and fills the row's missing parts.
pub(crate) fn complete_from_ranking(
    table: &CompositionalTable,
    ranking: &Ranking,
    k: usize,
    aggregation: Aggregation,
) -> Result<RowCompletion> {
    let row = ranking.target.row;
    if ranking.neighbors.len() < k {
        return Err(Error::InsufficientDonors {
            row,
            needed: k,
            available: ranking.usable,
        });
    }
    let donor_rows: Vec<&[f64]> = ranking.neighbors[..k].iter().map(|&(r, _)| table.row(r)).collect();
    let mut warnings = Vec::new();
    let aggregate = match aggregation {
        Aggregation::Frechet(alpha) => {
            let m = frechet_mean_detailed(&donor_rows, alpha).map_err(|e| e.context(format!("row {row}")))?;
            if !m.zeroed_columns.is_empty() {
                warnings.push(Warning::GeometricZeroParts {
                    row,
                    columns: m.zeroed_columns,
                });
            }
            m.mean.into_vec()
        }
        Aggregation::Mean => coordinate_wise(&donor_rows, |v| v.iter().sum::<f64>() / v.len() as f64),
        Aggregation::Median => coordinate_wise(&donor_rows, median),
    };

    let target = &ranking.target;
    let total = target.missing_total;
    let missing = &target.missing_columns;
    let mass: f64 = missing.iter().map(|&c| aggregate[c]).sum();
    let values = if total == 0.0 {
        warnings.push(Warning::ZeroMissingTotal { row });
        missing.iter().map(|&c| (c, 0.0)).collect()
    } else if !(mass > 0.0) {
        warnings.push(Warning::DonorMassZero { row });
        let share = total / missing.len() as f64;
        missing.iter().map(|&c| (c, share)).collect()
    } else {
        missing.iter().map(|&c| (c, aggregate[c] / mass * total)).collect()
    };
    Ok(RowCompletion { values, warnings })
}

fn coordinate_wise(rows: &[&[f64]], f: impl Fn(&mut [f64]) -> f64) -> Vec<f64> {
    let d = rows[0].len();
    let mut column = vec![0.0; rows.len()];
    (0..d)
        .map(|j| {
            for (slot, r) in column.iter_mut().zip(rows) {
                *slot = r[j];
            }
            f(&mut column)
        })
        .collect()
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

/// Donor sub-rows for every distinct observed-column set among `rows`.
pub(crate) fn donor_cache(
    table: &CompositionalTable,
    rows: &[usize],
    complete: &[usize],
) -> BTreeMap<MissingnessPattern, DonorSubRows> {
    let patterns: Vec<MissingnessPattern> = {
        let mut p: Vec<MissingnessPattern> = rows.iter().filter_map(|&r| table.pattern(r)).collect();
        p.sort();
        p.dedup();
        p
    };
    patterns
        .into_par_iter()
        .map(|p| {
            let observed = p.complement(table.n_cols());
            let subs = donor_subrows(table, &observed, complete);
            (p, subs)
        })
        .collect()
}

struct Plan {
    kind: DistanceKind,
    params: Box<dyn Fn(&MissingnessPattern) -> (Aggregation, usize) + Sync>,
}

fn run(table: &CompositionalTable, plan: Plan) -> Result<ImputationResult> {
    let partition = table.partition();
    if partition.incomplete.is_empty() {
        return Ok(ImputationResult {
            completed: table.clone(),
            imputed_cells: Vec::new(),
            donor_log: Vec::new(),
            warnings: Vec::new(),
        });
    }
    let cache = donor_cache(table, &partition.incomplete, &partition.complete);

    let outcomes: Vec<Result<(DonorRecord, RowCompletion, Vec<Warning>)>> = partition
        .incomplete
        .par_iter()
        .map(|&row| {
            let pattern = table.pattern(row).expect("incomplete row has a pattern");
            let (aggregation, k) = (plan.params)(&pattern);
            let donors = &cache[&pattern];
            let ranking = rank_donors(table, row, donors, plan.kind, k)?;
            let completion = complete_from_ranking(table, &ranking, k, aggregation)?;
            let record = DonorRecord {
                row,
                k,
                alpha: match aggregation {
                    Aggregation::Frechet(a) => Some(a),
                    _ => None,
                },
                donors: ranking.neighbors.iter().map(|&(r, _)| r).collect(),
                distances: ranking.neighbors.iter().map(|&(_, d)| d).collect(),
            };
            Ok((record, completion, ranking.warnings))
        })
        .collect();

    let mut imputed_cells = Vec::new();
    let mut donor_log = Vec::with_capacity(outcomes.len());
    let mut warnings = Vec::new();
    for outcome in outcomes {
        let (record, completion, rank_warnings) = outcome?;
        imputed_cells.extend(completion.values.iter().map(|&(column, value)| ImputedCell {
            row: record.row,
            column,
            value,
        }));
        warnings.extend(rank_warnings);
        warnings.extend(completion.warnings);
        donor_log.push(record);
    }
    let completed = table.with_filled_cells(imputed_cells.iter().map(|c| (c.row, c.column, c.value)));
    Ok(ImputationResult {
        completed,
        imputed_cells,
        donor_log,
        warnings,
    })
}

/// JSD k-NN imputation with Fréchet-mean aggregation of the donors.
///
/// With `alpha = 1` this is the plain arithmetic-mean variant.
pub fn impute(table: &CompositionalTable, config: &ImputerConfig) -> Result<ImputationResult> {
    if config.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let config = config.clone();
    run(
        table,
        Plan {
            kind: DistanceKind::Jsd,
            params: Box::new(move |p| {
                let (alpha, k) = config.params_for(p);
                (Aggregation::Frechet(alpha), k)
            }),
        },
    )
}

/// k-NN with Aitchison distances and mean or median aggregation; the
/// comparison baseline. Zero parts in any sub-vector that enters a distance
/// are an error.
pub fn impute_baseline_aitchison(table: &CompositionalTable, k: usize, aggregation: Aggregation) -> Result<ImputationResult> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    run(
        table,
        Plan {
            kind: DistanceKind::Aitchison,
            params: Box::new(move |_| (aggregation, k)),
        },
    )
}

/// Adaptive imputation together with the tuning that chose its parameters.
#[derive(Debug, Clone)]
pub struct AdaptiveImputation {
    pub result: ImputationResult,
    /// `None` when the table had no incomplete rows.
    pub global: Option<TuningReport>,
    pub per_pattern: BTreeMap<MissingnessPattern, PatternTuning>,
}

/// Tunes `(alpha, k)` separately for every missingness pattern and imputes
/// each pattern's rows with its own pair. Patterns that cannot be tuned on
/// their own use the globally tuned pair.
pub fn impute_adaptive(table: &CompositionalTable, settings: &CvSettings) -> Result<AdaptiveImputation> {
    let patterns = table.pattern_counts();
    if patterns.is_empty() {
        let result = impute(table, &ImputerConfig::default())?;
        return Ok(AdaptiveImputation {
            result,
            global: None,
            per_pattern: BTreeMap::new(),
        });
    }
    let global = tune(table, &patterns, settings)?;
    let per_pattern = tune_per_pattern(table, &patterns, settings);

    let mut config = ImputerConfig::new(global.best.k, global.best.alpha)?;
    config.adaptive = true;
    let mut warnings = global.warnings.clone();
    for (pattern, tuning) in &per_pattern {
        match tuning {
            PatternTuning::Tuned(report) => {
                config.per_pattern_params.insert(pattern.clone(), (report.best.alpha, report.best.k));
            }
            PatternTuning::Infeasible { reason } => warnings.push(Warning::PatternFallback {
                pattern: pattern.columns().to_vec(),
                reason: reason.clone(),
            }),
        }
    }
    let mut result = impute(table, &config)?;
    warnings.append(&mut result.warnings);
    result.warnings = warnings;
    Ok(AdaptiveImputation {
        result,
        global: Some(global),
        per_pattern,
    })
}

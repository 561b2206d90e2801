//! Synthetic data, missingness injection and evaluation for experiments.
//!
//! Injectors take a complete table and return the masked table together with
//! the hidden truth, which is enough to restore the original exactly.

mod benchmark;

pub use benchmark::{benchmark, impute_global_mean, BenchmarkConfig, BenchmarkReport, EvaluationRecord, Method, SpeedupCell};

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::distance::DistanceKind;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::simplex::CompositionalTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Mcar,
    MarSorted,
    Aggregation,
}

/// Column sets masked in the lower and upper halves of the sorted-MAR scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwoPatternSplit {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl TwoPatternSplit {
    /// Splits the non-driving columns `1..d` into two contiguous halves; the
    /// first gets `⌊(d-1)/2⌋` columns.
    pub fn contiguous(d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::DegenerateSpec(format!(
                "two disjoint non-driving patterns need at least 3 columns, got {d}"
            )));
        }
        let h = (d - 1) / 2;
        Ok(Self {
            first: (1..=h).collect(),
            second: (h + 1..d).collect(),
        })
    }

    fn validate(&self, d: usize) -> Result<()> {
        let ok = |cols: &[usize]| !cols.is_empty() && cols.iter().all(|&c| c >= 1 && c < d);
        if !ok(&self.first) || !ok(&self.second) || self.first.iter().any(|c| self.second.contains(c)) {
            return Err(Error::DegenerateSpec(
                "split must be two disjoint non-empty sets of non-driving columns".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectionSpec {
    pub mechanism: Mechanism,
    /// Fraction of rows that receive missing values.
    pub row_fraction: f64,
    /// Fraction of a selected row's parts that are masked (MCAR).
    pub component_fraction: f64,
    pub seed: u64,
    /// Sorted-MAR column split; `None` uses [`TwoPatternSplit::contiguous`].
    pub split: Option<TwoPatternSplit>,
}

impl InjectionSpec {
    pub fn mcar(row_fraction: f64, component_fraction: f64, seed: u64) -> Self {
        Self {
            mechanism: Mechanism::Mcar,
            row_fraction,
            component_fraction,
            seed,
            split: None,
        }
    }

    pub fn mar_sorted(row_fraction: f64, seed: u64) -> Self {
        Self {
            mechanism: Mechanism::MarSorted,
            row_fraction,
            component_fraction: 0.5,
            seed,
            split: None,
        }
    }

    fn check_fractions(&self) -> Result<()> {
        if !(self.row_fraction > 0.0 && self.row_fraction <= 1.0) {
            return Err(Error::DegenerateSpec(format!("row fraction {} not in (0, 1]", self.row_fraction)));
        }
        if !(self.component_fraction > 0.0 && self.component_fraction < 1.0) {
            return Err(Error::DegenerateSpec(format!(
                "component fraction {} not in (0, 1)",
                self.component_fraction
            )));
        }
        Ok(())
    }
}

impl Default for InjectionSpec {
    fn default() -> Self {
        Self::mcar(0.10, 0.5, 0)
    }
}

/// A hidden cell and its true value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruthCell {
    pub row: usize,
    pub column: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub masked: CompositionalTable,
    /// Sorted by row, then column.
    pub truth: Vec<TruthCell>,
}

impl Injection {
    /// Rebuilds the original table from the masked one and the truth.
    pub fn restore(&self) -> CompositionalTable {
        self.masked
            .with_filled_cells(self.truth.iter().map(|t| (t.row, t.column, t.value)))
    }

    /// Mass hidden in each masked row.
    pub fn missing_totals(&self) -> BTreeMap<usize, f64> {
        let mut totals = BTreeMap::new();
        for t in &self.truth {
            *totals.entry(t.row).or_insert(0.0) += t.value;
        }
        totals
    }
}

fn require_complete(table: &CompositionalTable) -> Result<()> {
    if !table.is_complete() {
        return Err(Error::DegenerateSpec("injection needs a complete table".into()));
    }
    Ok(())
}

fn mask_cells(table: &CompositionalTable, mut cells: Vec<(usize, usize)>) -> Injection {
    cells.sort_unstable();
    let truth = cells
        .iter()
        .map(|&(row, column)| TruthCell {
            row,
            column,
            value: table.row(row)[column],
        })
        .collect();
    Injection {
        masked: table.with_masked_cells(cells),
        truth,
    }
}

/// Number of parts masked per selected row: `⌈fraction · d⌉`, never all of them.
pub fn components_per_row(component_fraction: f64, d: usize) -> usize {
    let c = (component_fraction * d as f64 - 1e-9).ceil().max(0.0) as usize;
    c.min(d.saturating_sub(1))
}

/// Missing completely at random: rows, and parts within them, are drawn
/// uniformly without looking at the values.
pub fn inject_mcar(table: &CompositionalTable, spec: &InjectionSpec) -> Result<Injection> {
    require_complete(table)?;
    spec.check_fractions()?;
    let n = table.n_rows();
    let d = table.n_cols();
    let rows = (spec.row_fraction * n as f64).round() as usize;
    let per_row = components_per_row(spec.component_fraction, d);
    if rows == 0 || per_row == 0 {
        return Err(Error::DegenerateSpec(format!(
            "selects {rows} rows with {per_row} parts each"
        )));
    }
    let mut rng = substream(spec.seed, "inject", 0, 0);
    let mut cells = Vec::with_capacity(rows * per_row);
    for r in sample(&mut rng, n, rows) {
        for c in sample(&mut rng, d, per_row) {
            cells.push((r, c));
        }
    }
    Ok(mask_cells(table, cells))
}

/// Rows sorted by their first part; a fraction of the lower half loses the
/// first pattern of columns, a fraction of the upper half the second. The
/// first part drives the mechanism and is never masked.
pub fn inject_mar_sorted(table: &CompositionalTable, spec: &InjectionSpec) -> Result<Injection> {
    require_complete(table)?;
    let n = table.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if !(spec.row_fraction > 0.0 && spec.row_fraction <= 1.0) {
        return Err(Error::DegenerateSpec(format!("row fraction {} not in (0, 1]", spec.row_fraction)));
    }
    let d = table.n_cols();
    let split = match &spec.split {
        Some(s) => {
            s.validate(d)?;
            s.clone()
        }
        None => TwoPatternSplit::contiguous(d)?,
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| table.row(a)[0].total_cmp(&table.row(b)[0]).then(a.cmp(&b)));
    let (lower, upper) = order.split_at(n / 2);

    let mut rng = substream(spec.seed, "inject", 1, 0);
    let mut cells = Vec::new();
    for (half, pattern) in [(lower, &split.first), (upper, &split.second)] {
        let m = ((spec.row_fraction * half.len() as f64).round() as usize).clamp(1, half.len());
        for i in sample(&mut rng, half.len(), m) {
            cells.extend(pattern.iter().map(|&c| (half[i], c)));
        }
    }
    Ok(mask_cells(table, cells))
}

/// Rows whose parts are grouped in [`inject_aggregation`].
#[derive(Debug, Clone, PartialEq)]
pub enum RowSelector {
    Rows(Vec<usize>),
    Fraction { fraction: f64, seed: u64 },
}

/// Masks every column of `group` in the selected rows. The group's total is
/// what the row's observed parts leave free, so imputation splits exactly
/// that total among the group members.
pub fn inject_aggregation(table: &CompositionalTable, group: &[usize], selector: &RowSelector) -> Result<Injection> {
    require_complete(table)?;
    let d = table.n_cols();
    let mut group = group.to_vec();
    group.sort_unstable();
    group.dedup();
    if group.len() < 2 {
        return Err(Error::DegenerateSpec("aggregation group needs at least 2 columns".into()));
    }
    if group.len() >= d || group.iter().any(|&c| c >= d) {
        return Err(Error::DegenerateSpec("aggregation group must be a proper subset of the columns".into()));
    }
    let rows: Vec<usize> = match selector {
        RowSelector::Rows(rows) => {
            let mut rows = rows.clone();
            rows.sort_unstable();
            rows.dedup();
            if let Some(&r) = rows.iter().find(|&&r| r >= table.n_rows()) {
                return Err(Error::DegenerateSpec(format!("row {r} out of range")));
            }
            rows
        }
        RowSelector::Fraction { fraction, seed } => {
            let n = table.n_rows();
            let m = (fraction * n as f64).round() as usize;
            let mut rng = substream(*seed, "inject", 2, 0);
            sample(&mut rng, n, m.min(n)).into_vec()
        }
    };
    if rows.is_empty() {
        return Err(Error::DegenerateSpec("no rows selected".into()));
    }
    let cells = rows
        .iter()
        .flat_map(|&r| group.iter().map(move |&c| (r, c)))
        .collect();
    Ok(mask_cells(table, cells))
}

/// Parameters drawn for [`generate_dirichlet`].
pub const DIRICHLET_PARAM_RANGE: (f64, f64) = (0.5, 5.0);

/// `n` Dirichlet compositions in `d` parts. The concentration parameters are
/// drawn once from `U(0.5, 5)`.
pub fn generate_dirichlet(n: usize, d: usize, seed: u64) -> Result<CompositionalTable> {
    if d < 2 {
        return Err(Error::InvalidConfig("Dirichlet data need at least 2 parts".into()));
    }
    let mut rng = substream(seed, "dirichlet", 0, 0);
    let (lo, hi) = DIRICHLET_PARAM_RANGE;
    let params: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
    generate_dirichlet_with(n, &params, seed)
}

/// `n` compositions from `Dirichlet(params)`, as normalised Gamma draws.
/// Every part is strictly positive.
pub fn generate_dirichlet_with(n: usize, params: &[f64], seed: u64) -> Result<CompositionalTable> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    if params.len() < 2 {
        return Err(Error::InvalidConfig("Dirichlet data need at least 2 parts".into()));
    }
    let gammas = params
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|e| Error::InvalidConfig(format!("Dirichlet parameter {a}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = substream(seed, "dirichlet", 1, 0);
    let mut rows = Vec::with_capacity(n);
    let mut draw = vec![0.0; params.len()];
    while rows.len() < n {
        for (x, g) in draw.iter_mut().zip(&gammas) {
            *x = g.sample(&mut rng);
        }
        let sum: f64 = draw.iter().sum();
        if draw.iter().all(|&x| x > 0.0) && sum.is_finite() {
            rows.push(draw.iter().map(|x| x / sum).collect::<Vec<f64>>());
        }
    }
    CompositionalTable::from_complete_rows(&rows)
}

/// Mean distance between true and completed rows over the rows that had
/// hidden cells.
pub fn evaluate(injection: &Injection, completed: &CompositionalTable, metric: DistanceKind) -> Result<f64> {
    let mut by_row: BTreeMap<usize, Vec<&TruthCell>> = BTreeMap::new();
    for t in &injection.truth {
        by_row.entry(t.row).or_default().push(t);
    }
    if by_row.is_empty() {
        return Err(Error::EmptyInput("no hidden cells to evaluate".into()));
    }
    if completed.n_rows() != injection.masked.n_rows() || completed.n_cols() != injection.masked.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: injection.masked.n_rows() * injection.masked.n_cols(),
            found: completed.n_rows() * completed.n_cols(),
        });
    }
    let mut total = 0.0;
    for (&row, cells) in &by_row {
        if !completed.is_complete_row(row) {
            return Err(Error::InvalidConfig(format!("row {row} is not completed")));
        }
        let mut original = injection.masked.row(row).to_vec();
        for t in cells {
            original[t.column] = t.value;
        }
        total += metric.eval(&original, completed.row(row)).map_err(|e| match e {
            Error::ZeroInLogRatio { .. } => Error::MetricZeroConflict,
            other => other,
        })?;
    }
    Ok(total / by_row.len() as f64)
}

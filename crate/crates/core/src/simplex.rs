//! Compositions, closure and the incomplete/complete split of a table.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;
use std::sync::OnceLock;

use serde::{Serialize, Serializer};

use crate::distance::plogp_sum;
use crate::error::{Error, Result};
use crate::warning::Warning;

/// Tolerance for the sum-to-one constraint of ingested data.
pub const SUM_TOLERANCE: f64 = 1e-6;

/// A point of the simplex: non-negative parts summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition(Vec<f64>);

impl Composition {
    /// Closes `raw` onto the simplex by dividing by its sum.
    pub fn closure(raw: &[f64]) -> Result<Self> {
        closure(raw)
    }

    pub fn parts(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn has_zero(&self) -> bool {
        self.0.contains(&0.0)
    }
}

impl Deref for Composition {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Composition {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl Serialize for Composition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// Divides a non-negative vector by its sum.
///
/// A vector whose sum is already one up to rounding is returned unchanged, so
/// closure is exactly idempotent.
pub fn closure(raw: &[f64]) -> Result<Composition> {
    if raw.is_empty() {
        return Err(Error::DegenerateInput("empty vector".into()));
    }
    let mut sum = 0.0;
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::DegenerateInput(format!("non-finite part at index {index}")));
        }
        if value < 0.0 {
            return Err(Error::NegativeValue { index, value });
        }
        sum += value;
    }
    if sum <= 0.0 {
        return Err(Error::DegenerateInput("all parts are zero".into()));
    }
    if is_closed_sum(sum, raw.len()) {
        return Ok(Composition(raw.to_vec()));
    }
    Ok(Composition(raw.iter().map(|v| v / sum).collect()))
}

#[inline]
fn is_closed_sum(sum: f64, len: usize) -> bool {
    (sum - 1.0).abs() <= 4.0 * f64::EPSILON * len.max(1) as f64
}

/// Closes `values` in place. Returns `false` (leaving the input untouched)
/// when the sum is not positive.
pub(crate) fn close_in_place(values: &mut [f64]) -> bool {
    let sum: f64 = values.iter().sum();
    if !(sum > 0.0) {
        return false;
    }
    if !is_closed_sum(sum, values.len()) {
        values.iter_mut().for_each(|v| *v /= sum);
    }
    true
}

/// The set of missing columns of an incomplete row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MissingnessPattern(Vec<usize>);

impl MissingnessPattern {
    /// Builds a pattern over `n_cols` columns; duplicates are merged.
    pub fn new(columns: impl IntoIterator<Item = usize>, n_cols: usize) -> Result<Self> {
        let set: BTreeSet<usize> = columns.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidConfig("missingness pattern is empty".into()));
        }
        if let Some(&c) = set.iter().next_back() {
            if c >= n_cols {
                return Err(Error::InvalidConfig(format!(
                    "pattern column {c} out of range for {n_cols} columns"
                )));
            }
        }
        Ok(Self(set.into_iter().collect()))
    }

    pub fn columns(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, column: usize) -> bool {
        self.0.binary_search(&column).is_ok()
    }

    /// Columns not in the pattern, in increasing order.
    pub fn complement(&self, n_cols: usize) -> Vec<usize> {
        (0..n_cols).filter(|c| !self.contains(*c)).collect()
    }
}

impl fmt::Display for MissingnessPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for MissingnessPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// An n×D table of parts with an observation mask.
///
/// Unobserved cells hold `NaN` in the value buffer. Complete rows are closed
/// at construction; incomplete rows are kept as given.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionalTable {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    column_names: Vec<String>,
}

impl CompositionalTable {
    /// Builds a table from rows of optional parts (`None` = missing).
    ///
    /// Complete rows are re-closed; a row whose sum was off by more than
    /// [`SUM_TOLERANCE`] produces a [`Warning::Reclosed`].
    pub fn from_rows(
        rows: Vec<Vec<Option<f64>>>,
        column_names: Option<Vec<String>>,
    ) -> Result<(Self, Vec<Warning>)> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::EmptyInput("table has no rows".into()));
        }
        let n_cols = rows[0].len();
        if n_cols == 0 {
            return Err(Error::EmptyInput("table has no columns".into()));
        }
        let column_names = match column_names {
            Some(names) if names.len() != n_cols => {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    found: names.len(),
                })
            }
            Some(names) => names,
            None => default_names(n_cols),
        };

        let mut values = Vec::with_capacity(n_rows * n_cols);
        let mut mask = Vec::with_capacity(n_rows * n_cols);
        let mut warnings = Vec::new();
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    found: row.len(),
                });
            }
            let start = values.len();
            let mut complete = true;
            let mut sum = 0.0;
            for (c, cell) in row.into_iter().enumerate() {
                match cell {
                    Some(v) if !v.is_finite() => {
                        return Err(Error::DegenerateInput(format!(
                            "non-finite value at row {r}, column {c}"
                        )))
                    }
                    Some(v) if v < 0.0 => return Err(Error::NegativeValue { index: r * n_cols + c, value: v }),
                    Some(v) => {
                        sum += v;
                        values.push(v);
                        mask.push(true);
                    }
                    None => {
                        complete = false;
                        values.push(f64::NAN);
                        mask.push(false);
                    }
                }
            }
            if complete {
                if sum <= 0.0 {
                    return Err(Error::DegenerateInput(format!("complete row {r} is all zeros")));
                }
                if (sum - 1.0).abs() > SUM_TOLERANCE {
                    warnings.push(Warning::Reclosed { row: r, sum });
                }
                close_in_place(&mut values[start..]);
            } else if sum > 1.0 + SUM_TOLERANCE {
                return Err(Error::InconsistentRow { row: r, observed_sum: sum });
            }
        }
        Ok((
            Self {
                n_rows,
                n_cols,
                values,
                mask,
                column_names,
            },
            warnings,
        ))
    }

    /// Builds a fully observed table, closing every row.
    pub fn from_complete_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&v| Some(v)).collect())
            .collect();
        Ok(Self::from_rows(rows, None)?.0)
    }

    /// Copy of this table with the listed `(row, column)` cells masked.
    /// Values of the remaining cells are untouched.
    pub fn with_masked_cells(&self, cells: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut out = self.clone();
        for (r, c) in cells {
            let i = r * self.n_cols + c;
            out.mask[i] = false;
            out.values[i] = f64::NAN;
        }
        out
    }

    /// Copy of this table with the listed cells filled in and marked observed.
    pub(crate) fn with_filled_cells(&self, cells: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut out = self.clone();
        for (r, c, v) in cells {
            let i = r * self.n_cols + c;
            out.mask[i] = true;
            out.values[i] = v;
        }
        out
    }

    /// Sub-table made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        let mut mask = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
            mask.extend_from_slice(self.row_mask(r));
        }
        Self {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            values,
            mask,
            column_names: self.column_names.clone(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Raw row values; unobserved cells are `NaN`.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn row_mask(&self, r: usize) -> &[bool] {
        &self.mask[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let i = r * self.n_cols + c;
        self.mask[i].then(|| self.values[i])
    }

    pub fn is_observed(&self, r: usize, c: usize) -> bool {
        self.mask[r * self.n_cols + c]
    }

    pub fn is_complete_row(&self, r: usize) -> bool {
        self.row_mask(r).iter().all(|&m| m)
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Missing columns of row `r`, or `None` for a complete row.
    pub fn pattern(&self, r: usize) -> Option<MissingnessPattern> {
        let missing: Vec<usize> = self
            .row_mask(r)
            .iter()
            .enumerate()
            .filter_map(|(c, &m)| (!m).then_some(c))
            .collect();
        (!missing.is_empty()).then_some(MissingnessPattern(missing))
    }

    /// True when any observed cell is exactly zero.
    pub fn has_zero(&self) -> bool {
        self.values
            .iter()
            .zip(&self.mask)
            .any(|(&v, &m)| m && v == 0.0)
    }

    pub fn partition(&self) -> Partition {
        partition(self)
    }

    /// Distinct patterns of the incomplete rows with their counts, ordered by pattern.
    pub fn pattern_counts(&self) -> Vec<(MissingnessPattern, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for r in 0..self.n_rows {
            if let Some(p) = self.pattern(r) {
                *counts.entry(p).or_insert(0usize) += 1;
            }
        }
        counts.into_iter().collect()
    }
}

fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Row indices of the complete and incomplete parts of a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub complete: Vec<usize>,
    pub incomplete: Vec<usize>,
}

pub fn partition(table: &CompositionalTable) -> Partition {
    let (complete, incomplete) = (0..table.n_rows()).partition(|&r| table.is_complete_row(r));
    Partition { complete, incomplete }
}

/// An incomplete row split into its normalized observed sub-composition and
/// the mass left over for its missing parts.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDecomposition {
    pub row: usize,
    pub observed_columns: Vec<usize>,
    pub missing_columns: Vec<usize>,
    /// Observed parts closed to sum one.
    pub observed_sub: Vec<f64>,
    /// Sum of the raw observed parts.
    pub observed_sum: f64,
    /// `1 - observed_sum`, clamped to `[0, 1]`.
    pub missing_total: f64,
    /// Whether the missing total was clamped up from a small negative value.
    pub clamped: bool,
}

/// Complete rows restricted to a column subset and re-closed, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct DonorSubRows {
    /// Table row index of each usable donor.
    pub rows: Vec<usize>,
    width: usize,
    data: Vec<f64>,
    /// Complete rows whose sub-vector sums to zero.
    pub excluded: Vec<usize>,
    entropies: OnceLock<Vec<f64>>,
}

impl DonorSubRows {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn sub(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().copied().zip(self.data.chunks_exact(self.width.max(1)))
    }

    /// `sum x ln x` of every sub-row, computed on first use.
    pub(crate) fn entropies(&self) -> &[f64] {
        self.entropies
            .get_or_init(|| self.data.chunks_exact(self.width.max(1)).map(plogp_sum).collect())
    }
}

/// Splits the observed part of an incomplete row from its missing mass.
pub fn decompose_target(table: &CompositionalTable, row: usize) -> Result<RowDecomposition> {
    let mask = table.row_mask(row);
    let values = table.row(row);
    let mut observed_columns = Vec::new();
    let mut missing_columns = Vec::new();
    for (c, &m) in mask.iter().enumerate() {
        if m {
            observed_columns.push(c);
        } else {
            missing_columns.push(c);
        }
    }
    if missing_columns.is_empty() {
        return Err(Error::MissingSetEmpty { row });
    }
    let mut observed_sub: Vec<f64> = observed_columns.iter().map(|&c| values[c]).collect();
    let observed_sum: f64 = observed_sub.iter().sum();
    let raw_total = 1.0 - observed_sum;
    if raw_total < -SUM_TOLERANCE {
        return Err(Error::InconsistentRow { row, observed_sum });
    }
    if !close_in_place(&mut observed_sub) {
        return Err(Error::DegenerateRow { row });
    }
    Ok(RowDecomposition {
        row,
        observed_columns,
        missing_columns,
        observed_sub,
        observed_sum,
        missing_total: raw_total.clamp(0.0, 1.0),
        clamped: raw_total < 0.0,
    })
}

/// Restricts each complete row to `columns` and closes it. Rows summing to
/// zero over those columns are listed as excluded.
pub fn donor_subrows(table: &CompositionalTable, columns: &[usize], complete: &[usize]) -> DonorSubRows {
    let width = columns.len();
    let mut rows = Vec::with_capacity(complete.len());
    let mut data = Vec::with_capacity(complete.len() * width);
    let mut excluded = Vec::new();
    for &r in complete {
        let values = table.row(r);
        let start = data.len();
        data.extend(columns.iter().map(|&c| values[c]));
        if close_in_place(&mut data[start..]) {
            rows.push(r);
        } else {
            data.truncate(start);
            excluded.push(r);
        }
    }
    DonorSubRows {
        rows,
        width,
        data,
        excluded,
        entropies: OnceLock::new(),
    }
}

/// Decomposes an incomplete row and the complete rows on its observed columns.
pub fn decompose_row(
    table: &CompositionalTable,
    row: usize,
    complete: &[usize],
) -> Result<(RowDecomposition, DonorSubRows)> {
    let target = decompose_target(table, row)?;
    let donors = donor_subrows(table, &target.observed_columns, complete);
    if donors.is_empty() {
        return Err(Error::NoDonors { row });
    }
    Ok((target, donors))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn worked_example() -> CompositionalTable {
        let rows = vec![
            vec![Some(0.2), None, Some(0.3), Some(0.1), None],
            vec![Some(0.1), Some(0.2), Some(0.4), Some(0.1), Some(0.2)],
            vec![Some(0.2), Some(0.4), Some(0.2), Some(0.1), Some(0.1)],
            vec![Some(0.1), Some(0.3), Some(0.3), Some(0.2), Some(0.1)],
        ];
        CompositionalTable::from_rows(rows, None).unwrap().0
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn closure_examples() {
        let c = closure(&[0.2, 0.3, 0.1]).unwrap();
        assert_close(&c, &[1.0 / 3.0, 0.5, 1.0 / 6.0], 1e-15);
        let q = [0.25; 4];
        assert_eq!(closure(&q).unwrap().parts(), &q);
        assert_close(&closure(&[2.0, 6.0, 2.0]).unwrap(), &[0.2, 0.6, 0.2], 1e-15);
    }

    #[test]
    fn closure_errors() {
        assert!(matches!(closure(&[0.0, 0.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(closure(&[0.5, -0.1]), Err(Error::NegativeValue { index: 1, .. })));
    }

    #[test]
    fn partition_worked_example() {
        let p = worked_example().partition();
        assert_eq!(p.incomplete, vec![0]);
        assert_eq!(p.complete, vec![1, 2, 3]);
    }

    #[test]
    fn partition_edge_tables() {
        let t = CompositionalTable::from_complete_rows(&[[0.5, 0.5], [0.1, 0.9]]).unwrap();
        assert!(t.partition().incomplete.is_empty());
        let (t, _) = CompositionalTable::from_rows(vec![vec![None, None, None]], None).unwrap();
        let p = t.partition();
        assert!(p.complete.is_empty());
        assert_eq!(p.incomplete, vec![0]);
    }

    #[test]
    fn decompose_worked_example() {
        let t = worked_example();
        let (d, donors) = decompose_row(&t, 0, &[1, 2, 3]).unwrap();
        assert_eq!(d.observed_columns, vec![0, 2, 3]);
        assert_eq!(d.missing_columns, vec![1, 4]);
        assert_close(&d.observed_sub, &[1.0 / 3.0, 0.5, 1.0 / 6.0], 1e-15);
        assert!((d.missing_total - 0.4).abs() < 1e-15);
        assert_eq!(donors.rows, vec![1, 2, 3]);
        assert_close(donors.sub(0), &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1e-15);
        assert_close(donors.sub(1), &[0.4, 0.4, 0.2], 1e-15);
        assert_close(donors.sub(2), &[1.0 / 6.0, 0.5, 1.0 / 3.0], 1e-15);
    }

    #[test]
    fn decompose_complete_row_is_rejected() {
        let t = worked_example();
        assert!(matches!(
            decompose_row(&t, 1, &[2, 3]),
            Err(Error::MissingSetEmpty { row: 1 })
        ));
    }

    #[test]
    fn zero_sum_donor_is_excluded() {
        let rows = vec![
            vec![Some(0.3), Some(0.2), None],
            vec![Some(0.0), Some(0.0), Some(1.0)],
            vec![Some(0.2), Some(0.3), Some(0.5)],
        ];
        let (t, _) = CompositionalTable::from_rows(rows, None).unwrap();
        let (_, donors) = decompose_row(&t, 0, &[1, 2]).unwrap();
        assert_eq!(donors.rows, vec![2]);
        assert_eq!(donors.excluded, vec![1]);
        // The zero sub-row cannot be closed at all.
        assert!(closure(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn degenerate_and_donorless_rows() {
        let rows = vec![
            vec![Some(0.0), None, Some(0.0)],
            vec![Some(0.2), None, Some(0.3)],
            vec![Some(0.0), Some(1.0), Some(0.0)],
        ];
        let (t, _) = CompositionalTable::from_rows(rows, None).unwrap();
        assert!(matches!(decompose_row(&t, 0, &[2]), Err(Error::DegenerateRow { row: 0 })));
        assert!(matches!(decompose_row(&t, 1, &[2]), Err(Error::NoDonors { row: 1 })));
    }

    #[test]
    fn missing_total_clamping() {
        let rows = vec![
            vec![Some(0.6), Some(0.4000005), None],
            vec![Some(0.6), Some(0.5), None],
        ];
        assert!(matches!(
            CompositionalTable::from_rows(rows, None),
            Err(Error::InconsistentRow { row: 1, .. })
        ));
        let rows = vec![vec![Some(0.6), Some(0.4000005), None]];
        let (t, _) = CompositionalTable::from_rows(rows, None).unwrap();
        let d = decompose_target(&t, 0).unwrap();
        assert_eq!(d.missing_total, 0.0);
        assert!(d.clamped);
    }

    #[test]
    fn noisy_rows_are_reclosed_with_warning() {
        let rows = vec![vec![Some(2.0), Some(2.0)], vec![Some(0.5), Some(0.5)]];
        let (t, w) = CompositionalTable::from_rows(rows, None).unwrap();
        assert_eq!(t.row(0), &[0.5, 0.5]);
        assert_eq!(w, vec![Warning::Reclosed { row: 0, sum: 4.0 }]);
    }

    #[test]
    fn pattern_helpers() {
        let p = MissingnessPattern::new([3, 1, 3], 5).unwrap();
        assert_eq!(p.columns(), &[1, 3]);
        assert_eq!(p.complement(5), vec![0, 2, 4]);
        assert!(MissingnessPattern::new([], 5).is_err());
        assert!(MissingnessPattern::new([5], 5).is_err());
        assert_eq!(p.to_string(), "{1,3}");
        let counts = worked_example().pattern_counts();
        assert_eq!(counts, vec![(MissingnessPattern(vec![1, 4]), 1)]);
    }
}

//! Repeated leave-N-out cross-validation of `(alpha, k)`.
//!
//! Each repetition hides N complete rows (N = number of incomplete rows in the
//! data) behind the observed missingness patterns, imputes them for every
//! grid pair and scores the completed rows against the hidden truth. Scores
//! are averaged over repetitions and the smallest average wins.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distance::DistanceKind;
use crate::error::{Error, Result};
use crate::frechet::Alpha;
use crate::impute::{complete_from_ranking, donor_cache, rank_donors, Aggregation};
use crate::rng::{fnv1a, substream};
use crate::simplex::{CompositionalTable, MissingnessPattern};
use crate::warning::Warning;

/// Scores within this (relative) margin of the minimum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricChoice {
    /// JSD when the data contain zeros, Aitchison otherwise.
    Auto,
    Aitchison,
    Jsd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvSettings {
    pub k_grid: Vec<usize>,
    pub alpha_grid: Vec<Alpha>,
    pub repetitions: usize,
    pub metric: MetricChoice,
    pub seed: u64,
    /// Keep every repetition's scores in the report.
    pub record_repetitions: bool,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self::for_zeros(false)
    }
}

impl CvSettings {
    /// Default grids: `k = 2..=10` and the alpha grid allowed by `zeros_present`.
    pub fn for_zeros(zeros_present: bool) -> Self {
        Self {
            k_grid: (2..=10).collect(),
            alpha_grid: Alpha::default_grid(zeros_present),
            repetitions: 50,
            metric: MetricChoice::Auto,
            seed: 0,
            record_repetitions: false,
        }
    }

    pub fn for_table(table: &CompositionalTable) -> Self {
        Self::for_zeros(table.has_zero())
    }

    fn validate(&self, zeros_present: bool) -> Result<DistanceKind> {
        if self.k_grid.is_empty() || self.alpha_grid.is_empty() {
            return Err(Error::InvalidConfig("tuning grids must be non-empty".into()));
        }
        if self.k_grid.contains(&0) {
            return Err(Error::InvalidConfig("k grid contains 0".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if zeros_present {
            if let Some(a) = self.alpha_grid.iter().find(|a| a.value() < 0.0) {
                return Err(Error::AlphaZeroConflict { alpha: a.value() });
            }
        }
        match (self.metric, zeros_present) {
            (MetricChoice::Aitchison, true) => Err(Error::MetricZeroConflict),
            (MetricChoice::Aitchison, false) => Ok(DistanceKind::Aitchison),
            (MetricChoice::Jsd, _) => Ok(DistanceKind::Jsd),
            (MetricChoice::Auto, true) => Ok(DistanceKind::Jsd),
            (MetricChoice::Auto, false) => Ok(DistanceKind::Aitchison),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamPair {
    pub alpha: Alpha,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreEntry {
    pub alpha: Alpha,
    pub k: usize,
    pub mean_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningReport {
    pub settings: CvSettings,
    pub seed: u64,
    pub metric: DistanceKind,
    /// Rows hidden per repetition.
    pub held_out: usize,
    /// One entry per grid pair, alpha-major in grid order.
    pub scores: Vec<ScoreEntry>,
    pub best: ParamPair,
    /// `per_repetition[r][i]` is repetition `r`'s score for `scores[i]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_repetition: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<Warning>,
}

impl TuningReport {
    pub fn score(&self, alpha: Alpha, k: usize) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.alpha == alpha && s.k == k)
            .map(|s| s.mean_score)
    }

    /// `alpha,k,mean_score` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,k,mean_score\n");
        for s in &self.scores {
            out.push_str(&format!("{},{},{}\n", s.alpha, s.k, s.mean_score));
        }
        out
    }
}

/// Outcome of tuning a single pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PatternTuning {
    Tuned(TuningReport),
    Infeasible { reason: String },
}

/// One hidden row of a cross-validation repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvMask {
    /// Row index in the original table.
    pub row: usize,
    pub pattern: MissingnessPattern,
}

/// Smallest score wins; near-ties go to the smaller k, then to alpha closest to 1.
pub fn select_best(scores: &[ScoreEntry]) -> Option<ParamPair> {
    let min = scores.iter().map(|s| s.mean_score).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    scores
        .iter()
        .filter(|s| s.mean_score - min <= TIE_TOLERANCE * (1.0 + min))
        .min_by(|a, b| {
            a.k.cmp(&b.k)
                .then((1.0 - a.alpha.value()).abs().total_cmp(&(1.0 - b.alpha.value()).abs()))
        })
        .map(|s| ParamPair { alpha: s.alpha, k: s.k })
}

/// Everything a repetition needs, computed once per tuning run.
struct CvContext {
    complete: Vec<usize>,
    /// Patterns eligible for hiding, with their observed counts.
    patterns: Vec<(MissingnessPattern, usize)>,
    /// `usable[p][i]`: complete row `i` has positive mass on pattern `p`'s observed columns.
    usable: Vec<Vec<bool>>,
    held_out: usize,
    key: u64,
    warnings: Vec<Warning>,
}

fn stream_key(patterns: &[(MissingnessPattern, usize)]) -> u64 {
    let mut bytes = Vec::new();
    for (p, count) in patterns {
        for &c in p.columns() {
            bytes.extend_from_slice(&(c as u64).to_le_bytes());
        }
        bytes.push(0xff);
        bytes.extend_from_slice(&(*count as u64).to_le_bytes());
    }
    fnv1a(bytes)
}

fn context(
    table: &CompositionalTable,
    patterns: &[(MissingnessPattern, usize)],
    settings: &CvSettings,
) -> Result<CvContext> {
    let complete = table.partition().complete;
    let given: Vec<(MissingnessPattern, usize)> = patterns.iter().filter(|(_, c)| *c > 0).cloned().collect();
    let held_out: usize = given.iter().map(|(_, c)| c).sum();
    if held_out == 0 {
        return Err(Error::CvInfeasible("no incomplete rows to mimic".into()));
    }
    let max_k = *settings.k_grid.iter().max().expect("validated non-empty");
    if complete.len() <= held_out + max_k {
        return Err(Error::CvInfeasible(format!(
            "{} complete rows; need more than {held_out} held out + {max_k} neighbours",
            complete.len()
        )));
    }
    let mut eligible = Vec::new();
    let mut usable = Vec::new();
    let mut warnings = Vec::new();
    for (p, count) in given {
        if p.columns().iter().any(|&c| c >= table.n_cols()) || p.len() >= table.n_cols() {
            return Err(Error::InvalidConfig(format!("pattern {p} does not fit the table")));
        }
        let observed = p.complement(table.n_cols());
        let flags: Vec<bool> = complete
            .iter()
            .map(|&r| {
                let row = table.row(r);
                observed.iter().map(|&c| row[c]).sum::<f64>() > 0.0
            })
            .collect();
        let n_usable = flags.iter().filter(|&&u| u).count();
        if n_usable > held_out + max_k {
            eligible.push((p, count));
            usable.push(flags);
        } else {
            warnings.push(Warning::PatternSkipped {
                pattern: p.columns().to_vec(),
                reason: format!("{n_usable} usable complete rows; need more than {}", held_out + max_k),
            });
        }
    }
    if eligible.is_empty() {
        return Err(Error::CvInfeasible("no pattern has enough usable complete rows".into()));
    }
    Ok(CvContext {
        complete,
        key: stream_key(patterns),
        patterns: eligible,
        usable,
        held_out,
        warnings,
    })
}

fn draw_masks(ctx: &CvContext, settings: &CvSettings, repetition: usize) -> Vec<CvMask> {
    let mut rng = substream(settings.seed, "cv", ctx.key, repetition as u64);
    let weights = WeightedIndex::new(ctx.patterns.iter().map(|(_, c)| *c)).expect("positive counts");
    let mut taken = vec![false; ctx.complete.len()];
    let mut masks = Vec::with_capacity(ctx.held_out);
    for _ in 0..ctx.held_out {
        let p = if ctx.patterns.len() == 1 { 0 } else { weights.sample(&mut rng) };
        let i = loop {
            let i = rng.random_range(0..ctx.complete.len());
            if !taken[i] && ctx.usable[p][i] {
                break i;
            }
        };
        taken[i] = true;
        masks.push(CvMask {
            row: ctx.complete[i],
            pattern: ctx.patterns[p].0.clone(),
        });
    }
    masks
}

/// The rows hidden in one repetition of [`tune`], with the pattern each receives.
pub fn cv_masks(
    table: &CompositionalTable,
    patterns: &[(MissingnessPattern, usize)],
    settings: &CvSettings,
    repetition: usize,
) -> Result<Vec<CvMask>> {
    settings.validate(table.has_zero())?;
    let ctx = context(table, patterns, settings)?;
    Ok(draw_masks(&ctx, settings, repetition))
}

/// Builds the table a repetition imputes: the complete rows only, with the
/// masked cells hidden. Returns it with the local index of every hidden row.
pub fn masked_cv_table(table: &CompositionalTable, masks: &[CvMask]) -> (CompositionalTable, Vec<usize>) {
    let complete = table.partition().complete;
    let local: BTreeMap<usize, usize> = complete.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let sub = table.select_rows(&complete);
    let hidden: Vec<usize> = masks.iter().map(|m| local[&m.row]).collect();
    let cells = masks
        .iter()
        .zip(&hidden)
        .flat_map(|(m, &i)| m.pattern.columns().iter().map(move |&c| (i, c)));
    (sub.with_masked_cells(cells), hidden)
}

fn pairs(settings: &CvSettings) -> Vec<ParamPair> {
    settings
        .alpha_grid
        .iter()
        .flat_map(|&alpha| settings.k_grid.iter().map(move |&k| ParamPair { alpha, k }))
        .collect()
}

/// Scores of every grid pair in one repetition; `None` where imputation or
/// scoring failed.
fn run_repetition(
    table: &CompositionalTable,
    masks: &[CvMask],
    grid: &[ParamPair],
    max_k: usize,
    metric: DistanceKind,
) -> Result<Vec<Option<f64>>> {
    let (masked, hidden) = masked_cv_table(table, masks);
    let complete = masked.partition().complete;
    let cache = donor_cache(&masked, &hidden, &complete);
    let rankings = hidden
        .iter()
        .map(|&row| {
            let pattern = masked.pattern(row).expect("hidden row is incomplete");
            rank_donors(&masked, row, &cache[&pattern], DistanceKind::Jsd, max_k)
        })
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<&[f64]> = masks.iter().map(|m| table.row(m.row)).collect();

    let mut completed = vec![0.0; table.n_cols()];
    let scores = grid
        .iter()
        .map(|pair| {
            let mut total = 0.0;
            for ((ranking, &row), truth) in rankings.iter().zip(&hidden).zip(&truth) {
                let fill = complete_from_ranking(&masked, ranking, pair.k, Aggregation::Frechet(pair.alpha)).ok()?;
                completed.copy_from_slice(masked.row(row));
                for &(c, v) in &fill.values {
                    completed[c] = v;
                }
                total += metric.eval(truth, &completed).ok()?;
            }
            let score = total / hidden.len() as f64;
            score.is_finite().then_some(score)
        })
        .collect();
    Ok(scores)
}

/// Tunes `(alpha, k)` for data whose incomplete rows follow `patterns`
/// (pattern, number of rows) using the complete rows of `table`.
pub fn tune(
    table: &CompositionalTable,
    patterns: &[(MissingnessPattern, usize)],
    settings: &CvSettings,
) -> Result<TuningReport> {
    let metric = settings.validate(table.has_zero())?;
    let ctx = context(table, patterns, settings)?;
    let grid = pairs(settings);
    let max_k = *settings.k_grid.iter().max().expect("validated non-empty");

    let per_rep: Vec<Vec<Option<f64>>> = (0..settings.repetitions)
        .into_par_iter()
        .map(|rep| {
            let masks = draw_masks(&ctx, settings, rep);
            run_repetition(table, &masks, &grid, max_k, metric)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let mut warnings = ctx.warnings.clone();
    let mut scores = Vec::with_capacity(grid.len());
    let mut kept = Vec::with_capacity(grid.len());
    for (i, pair) in grid.iter().enumerate() {
        let column: Option<Vec<f64>> = per_rep.iter().map(|rep| rep[i]).collect();
        match column {
            Some(values) => {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                scores.push(ScoreEntry {
                    alpha: pair.alpha,
                    k: pair.k,
                    mean_score: mean,
                });
                kept.push(i);
            }
            None => warnings.push(Warning::GridPairFailed {
                alpha: pair.alpha.value(),
                k: pair.k,
            }),
        }
    }
    let best = select_best(&scores).ok_or_else(|| Error::CvInfeasible("no grid pair could be scored".into()))?;
    let per_repetition = settings.record_repetitions.then(|| {
        per_rep
            .iter()
            .map(|rep| kept.iter().map(|&i| rep[i].expect("kept pairs scored")).collect())
            .collect()
    });
    Ok(TuningReport {
        settings: settings.clone(),
        seed: settings.seed,
        metric,
        held_out: ctx.held_out,
        scores,
        best,
        per_repetition,
        warnings,
    })
}

/// Tunes every pattern on its own. Patterns that cannot be tuned are marked
/// [`PatternTuning::Infeasible`] instead of failing the whole call.
pub fn tune_per_pattern(
    table: &CompositionalTable,
    patterns: &[(MissingnessPattern, usize)],
    settings: &CvSettings,
) -> BTreeMap<MissingnessPattern, PatternTuning> {
    patterns
        .iter()
        .map(|(p, count)| {
            let outcome = if *count == 0 {
                PatternTuning::Infeasible {
                    reason: "pattern has no rows".into(),
                }
            } else {
                match tune(table, &[(p.clone(), *count)], settings) {
                    Ok(report) => PatternTuning::Tuned(report),
                    Err(e) => PatternTuning::Infeasible { reason: e.to_string() },
                }
            };
            (p.clone(), outcome)
        })
        .collect()
}

//! Distances between compositions: Aitchison's log-ratio distance and the
//! Jensen-Shannon divergence (scaled by 2, natural log).
//!
//! All kernels take plain slices so they work on closed sub-vectors as well as
//! on [`Composition`]s. JSD tolerates zero parts; the Aitchison distance does
//! not and reports [`Error::ZeroInLogRatio`].

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::Composition;

/// Upper bound of the (doubled) Jensen-Shannon divergence.
pub const JSD_MAX: f64 = 2.0 * LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Aitchison,
    Jsd,
}

impl DistanceKind {
    pub fn eval(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            DistanceKind::Aitchison => aitchison_distance(x, y),
            DistanceKind::Jsd => jsd(x, y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Aitchison => "aitchison",
            DistanceKind::Jsd => "jsd",
        }
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(())
}

/// Aitchison distance: Euclidean norm of the difference of the clr transforms.
///
/// Scale invariant, so the inputs need not be closed. Every part must be
/// strictly positive.
pub fn aitchison_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let mut diff = Vec::with_capacity(x.len());
    for (j, (&a, &b)) in x.iter().zip(y).enumerate() {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::ZeroInLogRatio {
                context: format!("part {j}"),
            });
        }
        diff.push(a.ln() - b.ln());
    }
    let centre = diff.iter().sum::<f64>() / diff.len() as f64;
    Ok(diff.iter().map(|d| (d - centre).powi(2)).sum::<f64>().sqrt())
}

/// Contribution of one coordinate to the JSD, with `0 log 0 = 0`.
#[inline]
fn jsd_term(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s == 0.0 {
        return 0.0;
    }
    // a ln(2a/s) = a ln(1 + (a-b)/s); the ln_1p form keeps precision when
    // a ≈ b, the direct ratio when one part dwarfs the other.
    let d = (a - b) / s;
    let log_ratio = |p: f64, d: f64| if d.abs() < 0.5 { d.ln_1p() } else { (2.0 * p / s).ln() };
    let left = if a > 0.0 { a * log_ratio(a, d) } else { 0.0 };
    let right = if b > 0.0 { b * log_ratio(b, -d) } else { 0.0 };
    left + right
}

/// Jensen-Shannon divergence multiplied by 2, in nats. Bounded by `2 ln 2`.
pub fn jsd(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    Ok(jsd_unchecked(x, y))
}

#[inline]
pub(crate) fn jsd_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let mut overlap = false;
    let total: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            overlap |= a > 0.0 && b > 0.0;
            jsd_term(a, b)
        })
        .sum();
    // Disjoint supports give ln 2 times the total mass, i.e. the maximum.
    if !overlap && total > 0.0 {
        return JSD_MAX;
    }
    total.clamp(0.0, JSD_MAX)
}

/// `sum x ln x`, with `0 ln 0 = 0`.
#[inline]
pub(crate) fn plogp_sum(x: &[f64]) -> f64 {
    x.iter().filter(|&&a| a > 0.0).map(|&a| a * a.ln()).sum()
}

/// JSD from cached `plogp_sum` values: one logarithm per part instead of two.
/// Loses a few ulps near zero, so only used for ranking.
#[inline]
pub(crate) fn jsd_cached(x: &[f64], hx: f64, y: &[f64], hy: f64) -> f64 {
    let cross: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let s = a + b;
            if s > 0.0 { s * (0.5 * s).ln() } else { 0.0 }
        })
        .sum();
    (hx + hy - cross).clamp(0.0, JSD_MAX)
}

/// JSD as `KL(x, m) + KL(y, m)` with `m` the midpoint. Cross-check for [`jsd`].
pub fn jsd_via_kld(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x, y)?;
    let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a + b) / 2.0).collect();
    Ok(kl(x, &mid) + kl(y, &mid))
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum()
}

/// Distance from `target` to every donor, in donor order.
pub fn distances_to_set<D: AsRef<[f64]> + Sync>(target: &[f64], donors: &[D], kind: DistanceKind) -> Result<Vec<f64>> {
    donors
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            kind.eval(target, d.as_ref()).map_err(|e| match e {
                Error::ZeroInLogRatio { context } => Error::ZeroInLogRatio {
                    context: format!("donor {i}, {context}"),
                },
                other => other,
            })
        })
        .collect()
}

/// One evaluated point of a ternary contour grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub distance: f64,
}

/// Distances from a centre over a barycentric lattice of the 2-simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourGrid {
    pub kind: DistanceKind,
    pub resolution: usize,
    /// The centre itself (distance 0).
    pub center: ContourPoint,
    /// Lattice points `(i, j, r - i - j) / r`, row-major in `i` then `j`.
    /// Points with a zero part are absent for the Aitchison distance.
    pub points: Vec<ContourPoint>,
}

/// Evaluates `kind` from `center` at every point of the lattice of step `1/resolution`.
pub fn contour_grid(center: &Composition, resolution: usize, kind: DistanceKind) -> Result<ContourGrid> {
    if center.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: center.len(),
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidResolution(resolution));
    }
    let r = resolution as f64;
    let mut points = Vec::with_capacity((resolution + 1) * (resolution + 2) / 2);
    for i in 0..=resolution {
        for j in 0..=resolution - i {
            let k = resolution - i - j;
            if kind == DistanceKind::Aitchison && (i == 0 || j == 0 || k == 0) {
                continue;
            }
            let p = [i as f64 / r, j as f64 / r, k as f64 / r];
            let distance = kind.eval(center, &p)?;
            points.push(ContourPoint {
                a: p[0],
                b: p[1],
                c: p[2],
                distance,
            });
        }
    }
    let center_point = ContourPoint {
        a: center[0],
        b: center[1],
        c: center[2],
        distance: kind.eval(center, center)?,
    };
    Ok(ContourGrid {
        kind,
        resolution,
        center: center_point,
        points,
    })
}

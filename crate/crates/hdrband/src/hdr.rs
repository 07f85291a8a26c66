//! Highest-density-region machinery: level computation on tabulated
//! curves, region extraction, level-crossing detection with derivative
//! pilots, and the probability-weighted symmetric-difference error.

use serde::Serialize;

use crate::density::{kde_evaluate, kde_on_grid, DensityCurve, EvaluationGrid, Sample};
use crate::error::{Error, Result};
use crate::models::NormalMixture;

/// A finite union of disjoint closed intervals, kept sorted and merged.
/// Serializes as the bare list `[[a, b], ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
#[serde(transparent)]
pub struct IntervalUnion {
    intervals: Vec<[f64; 2]>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion::default()
    }

    /// Canonicalize: sort by left endpoint and merge touching intervals.
    pub fn from_intervals<I>(raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut iv: Vec<[f64; 2]> = raw
            .into_iter()
            .map(|(a, b)| {
                if !(a.is_finite() && b.is_finite()) || a > b {
                    Err(Error::BadGrid(format!("bad interval [{a}, {b}]")))
                } else {
                    Ok([a, b])
                }
            })
            .collect::<Result<_>>()?;
        iv.sort_by(|p, q| p[0].partial_cmp(&q[0]).unwrap());
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(iv.len());
        for [a, b] in iv {
            match merged.last_mut() {
                Some(last) if a <= last[1] => last[1] = last[1].max(b),
                _ => merged.push([a, b]),
            }
        }
        Ok(IntervalUnion { intervals: merged })
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Indicator of membership (closed intervals).
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&[a, b]| a <= x && x <= b)
    }

    /// Total length.
    pub fn lebesgue(&self) -> f64 {
        self.intervals.iter().map(|&[a, b]| b - a).sum()
    }

    /// Symmetric difference as an interval union, by a sweep over the
    /// endpoints of both operands.
    pub fn symmetric_difference(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut cuts: Vec<f64> =
            Vec::with_capacity(2 * (self.intervals.len() + other.intervals.len()));
        for &[a, b] in self.intervals.iter().chain(&other.intervals) {
            cuts.push(a);
            cuts.push(b);
        }
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        cuts.dedup();
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if self.contains(mid) != other.contains(mid) {
                pieces.push((w[0], w[1]));
            }
        }
        IntervalUnion::from_intervals(pieces).expect("sweep produces valid intervals")
    }

    /// JSON form `[[a,b],...]`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.intervals).expect("intervals serialize")
    }

    /// CSV rows `lo,hi` with a header.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "lo,hi")?;
        for &[a, b] in &self.intervals {
            writeln!(out, "{a},{b}")?;
        }
        Ok(())
    }
}

/// mu_f(A treats B): probability, under the mixture, of landing in exactly
/// one of the two regions. Exact via CDF differences.
pub fn symmetric_difference_mass(
    a: &IntervalUnion,
    b: &IntervalUnion,
    truth: &NormalMixture,
) -> f64 {
    a.symmetric_difference(b)
        .intervals()
        .iter()
        .map(|&[lo, hi]| truth.interval_mass(lo, hi))
        .sum()
}

/// Mass of `{curve >= y}` under the tabulated curve itself, with region
/// boundaries placed by linear interpolation inside straddling cells.
/// Grid endpoints count as below the level, so regions never touch them
/// silently; the density is expected to have decayed there.
pub fn super_level_mass(curve: &DensityCurve, y: f64) -> f64 {
    let v = &curve.values;
    let step = curve.grid.step();
    let mut mass = 0.0;
    let mut inside = false;
    for k in 0..v.len() {
        let above = v[k] >= y;
        if above && !inside {
            inside = true;
            // partial entry cell: crossing between k-1 and k (none when the
            // region is clipped at the grid edge)
            if k > 0 {
                let frac = (y - v[k - 1]) / (v[k] - v[k - 1]);
                mass += 0.5 * (y + v[k]) * (1.0 - frac) * step;
            }
        } else if !above && inside {
            // leaving: crossing between k-1 and k
            let frac = (y - v[k - 1]) / (v[k] - v[k - 1]);
            mass += 0.5 * (v[k - 1] + y) * frac * step;
            inside = false;
        } else if above && inside && k > 0 {
            mass += 0.5 * (v[k - 1] + v[k]) * step;
        }
    }
    // region clipped at the right grid edge: nothing more to add
    mass
}

/// The level y whose super-level set carries mass `1 - tau` under the curve.
///
/// Bisection on y; the interpolated mass above is continuous and strictly
/// decreasing, so this terminates with |mass - (1-tau)| below 1e-9.
pub fn level_for_tau(curve: &DensityCurve, tau: f64) -> Result<f64> {
    if curve.order != 0 {
        return Err(Error::UnsupportedOrder {
            order: curve.order,
            limit: 0,
        });
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidTau(tau));
    }
    let target = 1.0 - tau;
    let total = curve.integral();
    if total < target {
        return Err(Error::InsufficientMass {
            mass: total,
            target,
        });
    }
    let mut lo = 0.0;
    let mut hi = curve.max_value();
    let mut level = 0.5 * hi;
    for _ in 0..200 {
        let mass = super_level_mass(curve, level);
        if (mass - target).abs() < 1e-9 {
            return Ok(level);
        }
        if mass > target {
            lo = level;
        } else {
            hi = level;
        }
        level = 0.5 * (lo + hi);
    }
    Ok(level)
}

/// Super-level set `{curve >= level}` with interpolated boundaries.
pub fn extract_region(curve: &DensityCurve, level: f64) -> IntervalUnion {
    let v = &curve.values;
    let step = curve.grid.step();
    let mut intervals = Vec::new();
    let mut start: Option<f64> = None;
    for k in 0..v.len() {
        let above = v[k] >= level;
        if above && start.is_none() {
            let x = if k == 0 {
                curve.grid.point(0)
            } else {
                let frac = (level - v[k - 1]) / (v[k] - v[k - 1]);
                curve.grid.point(k - 1) + frac * step
            };
            start = Some(x);
        } else if !above {
            if let Some(s) = start.take() {
                let frac = (level - v[k - 1]) / (v[k] - v[k - 1]);
                intervals.push((s, curve.grid.point(k - 1) + frac * step));
            }
        }
    }
    if let Some(s) = start {
        intervals.push((s, curve.grid.point(v.len() - 1)));
    }
    IntervalUnion::from_intervals(intervals).expect("extraction produces valid intervals")
}

/// A level crossing of the pilot density estimate, with derivative pilots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub x: f64,
    /// f-hat'(x; h1), exact-sum evaluation.
    pub slope: f64,
    /// f-hat''(x; h2), exact-sum evaluation.
    pub curvature: f64,
}

/// Level crossings of a pilot KDE, in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingSet {
    pub level: f64,
    pub crossings: Vec<Crossing>,
}

impl CrossingSet {
    /// Number of intervals in the estimated region.
    pub fn interval_count(&self) -> usize {
        self.crossings.len() / 2
    }

    /// (slope, curvature) pairs, the form the risk algebra consumes.
    pub fn derivative_pairs(&self) -> Vec<(f64, f64)> {
        self.crossings
            .iter()
            .map(|c| (c.slope, c.curvature))
            .collect()
    }
}

/// Locate the pilot level crossings of f-hat(.; h0) and attach first and
/// second derivative estimates evaluated with their own bandwidths.
///
/// Boundary positions from the tabulated curve are polished with one Newton
/// step on the exact-sum estimate so their accuracy does not depend on the
/// grid resolution.
pub fn find_crossings(
    sample: &Sample,
    h0: f64,
    h1: f64,
    h2: f64,
    tau: f64,
    grid: &EvaluationGrid,
) -> Result<CrossingSet> {
    for h in [h0, h1, h2] {
        if h <= 0.0 {
            return Err(Error::NonPositiveBandwidth(h));
        }
    }
    let binned = grid.bin_weights().is_some();
    let curve = kde_on_grid(sample, h0, 0, grid, binned)?;
    let level = level_for_tau(&curve, tau)?;
    let region = extract_region(&curve, level);
    if region.is_empty() {
        return Err(Error::CrossingDetection(format!(
            "level {level} lies above the curve maximum {}",
            curve.max_value()
        )));
    }
    let lo = curve.grid.point(0);
    let hi = curve.grid.point(curve.grid.count() - 1);
    let mut xs = Vec::with_capacity(2 * region.intervals().len());
    for &[a, b] in region.intervals() {
        if a <= lo || b >= hi {
            return Err(Error::CrossingDetection(format!(
                "estimated region [{a}, {b}] touches the grid edge; widen the grid"
            )));
        }
        xs.push(a);
        xs.push(b);
    }
    // one Newton polish per boundary on the exact-sum estimate
    let step = curve.grid.step();
    for x in xs.iter_mut() {
        let f = kde_evaluate(sample, h0, 0, &[*x])?[0];
        let d = kde_evaluate(sample, h0, 1, &[*x])?[0];
        if d != 0.0 {
            let delta = (f - level) / d;
            if delta.abs() <= step {
                *x -= delta;
            }
        }
    }
    let slopes = kde_evaluate(sample, h1, 1, &xs)?;
    let curvatures = kde_evaluate(sample, h2, 2, &xs)?;
    let mut crossings = Vec::with_capacity(xs.len());
    for (j, (&x, (&slope, &curvature))) in xs
        .iter()
        .zip(slopes.iter().zip(curvatures.iter()))
        .enumerate()
    {
        let rising = j % 2 == 0;
        if rising != (slope > 0.0) || slope == 0.0 {
            return Err(Error::CrossingDetection(format!(
                "derivative pilot has the wrong sign at crossing {j}: x = {x}, slope = {slope:e} \
                 (expected {})",
                if rising { "positive" } else { "negative" }
            )));
        }
        crossings.push(Crossing {
            x,
            slope,
            curvature,
        });
    }
    Ok(CrossingSet { level, crossings })
}

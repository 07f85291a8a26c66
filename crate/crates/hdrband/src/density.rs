//! Kernel density and density-derivative estimation, with an exact
//! evaluation path and a fast linear-binned path on uniform grids.

use crate::error::{Error, Result};
use crate::kernel::gaussian_derivative;

/// Truncation radius for the binned convolution, in bandwidths. The Gaussian
/// kernel is below 1e-8 of its peak beyond six bandwidths.
pub const KERNEL_TRUNCATION_BANDWIDTHS: f64 = 6.0;

/// Grid size used when callers do not ask for something else.
pub const DEFAULT_GRID_POINTS: usize = 1024;

/// An immutable, sorted sample of real observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Validate and sort raw observations.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSample("sample is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(
                "sample contains non-finite values".into(),
            ));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Sample { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Sample standard deviation (n - 1 denominator).
    pub fn std_dev(&self) -> f64 {
        let n = self.n() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let ss = self
            .values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>();
        (ss / (n - 1.0)).sqrt()
    }

    /// Quantile by linear interpolation between order statistics
    /// (the "type 7" rule: position (n-1)p on the sorted values).
    pub fn quantile(&self, p: f64) -> f64 {
        assert!((0.0..=1.0).contains(&p), "quantile needs p in [0,1]");
        let pos = (self.n() - 1) as f64 * p;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        if lo + 1 == self.n() {
            self.values[lo]
        } else {
            self.values[lo] + frac * (self.values[lo + 1] - self.values[lo])
        }
    }

    /// The lower median as an order statistic; used to recenter data so that
    /// downstream pipelines are shift-invariant by construction.
    pub fn lower_median(&self) -> f64 {
        self.values[(self.n() - 1) / 2]
    }

    /// A copy shifted by `-center` (exact per-element subtraction).
    pub fn recentered(&self, center: f64) -> Sample {
        Sample {
            values: self.values.iter().map(|v| v - center).collect(),
        }
    }
}

/// A uniform evaluation grid, optionally carrying linear-binned counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    lo: f64,
    hi: f64,
    count: usize,
    bin_weights: Option<Vec<f64>>,
}

impl EvaluationGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::BadGrid(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if count < 2 {
            return Err(Error::BadGrid(format!(
                "need at least 2 grid points, got {count}"
            )));
        }
        Ok(EvaluationGrid {
            lo,
            hi,
            count,
            bin_weights: None,
        })
    }

    /// Default grid for `sample`: `count` points spanning the data range
    /// extended by six reference bandwidths on each side.
    pub fn spanning(sample: &Sample, h_ref: f64, count: usize) -> Result<Self> {
        if h_ref <= 0.0 {
            return Err(Error::NonPositiveBandwidth(h_ref));
        }
        let pad = KERNEL_TRUNCATION_BANDWIDTHS * h_ref;
        EvaluationGrid::new(sample.min() - pad, sample.max() + pad, count)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Grid spacing.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + self.step() * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }

    pub fn bin_weights(&self) -> Option<&[f64]> {
        self.bin_weights.as_deref()
    }
}

/// Assign each observation's unit mass linearly to its two nearest grid
/// points. The returned grid carries the weights; they sum to n exactly up
/// to rounding.
pub fn linear_bin(sample: &Sample, grid: &EvaluationGrid) -> Result<EvaluationGrid> {
    let step = grid.step();
    let mut weights = vec![0.0; grid.count()];
    for &x in sample.values() {
        if x < grid.lo() || x > grid.hi() {
            return Err(Error::BadGrid(format!(
                "observation {x} lies outside the grid [{}, {}]",
                grid.lo(),
                grid.hi()
            )));
        }
        let pos = (x - grid.lo()) / step;
        let k = (pos.floor() as usize).min(grid.count() - 2);
        let frac = pos - k as f64;
        weights[k] += 1.0 - frac;
        weights[k + 1] += frac;
    }
    Ok(EvaluationGrid {
        bin_weights: Some(weights),
        ..grid.clone()
    })
}

/// A tabulated estimate of f^(order) on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: EvaluationGrid,
    pub order: usize,
    pub bandwidth: f64,
    pub values: Vec<f64>,
}

impl DensityCurve {
    /// Trapezoid integral of the curve over its grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.step())
    }

    /// Largest tabulated value.
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Write `x,value` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "x,value")?;
        for (x, v) in self.grid.points().zip(&self.values) {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }
}

pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    step * (interior + 0.5 * (values[0] + values[values.len() - 1]))
}

fn check_kde_args(h: f64, order: usize) -> Result<()> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::NonPositiveBandwidth(h));
    }
    if order > 2 {
        return Err(Error::UnsupportedOrder { order, limit: 2 });
    }
    Ok(())
}

/// Exact kernel estimate of f^(order) at the given points:
/// (n h^(order+1))^-1 sum_i phi^(order)((x - X_i)/h).
pub fn kde_evaluate(sample: &Sample, h: f64, order: usize, points: &[f64]) -> Result<Vec<f64>> {
    check_kde_args(h, order)?;
    if points.is_empty() {
        return Err(Error::BadGrid("no evaluation points".into()));
    }
    let norm = 1.0 / (sample.n() as f64 * h.powi(order as i32 + 1));
    points
        .iter()
        .map(|&x| {
            let mut s = 0.0;
            for &xi in sample.values() {
                s += gaussian_derivative(order, (x - xi) / h)?;
            }
            Ok(norm * s)
        })
        .collect()
}

/// Kernel estimate tabulated on a grid, by exact summation or by discrete
/// convolution of the linear-binned counts with the sampled kernel.
pub fn kde_on_grid(
    sample: &Sample,
    h: f64,
    order: usize,
    grid: &EvaluationGrid,
    binned: bool,
) -> Result<DensityCurve> {
    check_kde_args(h, order)?;
    let values = if binned {
        let weights = grid
            .bin_weights()
            .ok_or_else(|| Error::BadGrid("binned evaluation needs bin weights".into()))?;
        let step = grid.step();
        let radius = (KERNEL_TRUNCATION_BANDWIDTHS * h / step).ceil() as usize;
        let radius = radius.min(grid.count() - 1);
        // kernel derivative sampled at offsets 0..=radius
        let mut kvals = Vec::with_capacity(radius + 1);
        for m in 0..=radius {
            kvals.push(gaussian_derivative(order, m as f64 * step / h)?);
        }
        // odd-order derivatives are odd functions
        let parity = if order % 2 == 0 { 1.0 } else { -1.0 };
        let norm = 1.0 / (sample.n() as f64 * h.powi(order as i32 + 1));
        let g = grid.count();
        let mut values = vec![0.0; g];
        for (k, v) in values.iter_mut().enumerate() {
            let m_lo = k.saturating_sub(radius);
            let m_hi = (k + radius).min(g - 1);
            let mut s = 0.0;
            for (l, &w) in weights[m_lo..=m_hi].iter().enumerate() {
                let l = l + m_lo;
                // centered at grid point k, offset (k - l)
                let kv = if l <= k {
                    kvals[k - l]
                } else {
                    parity * kvals[l - k]
                };
                s += w * kv;
            }
            *v = norm * s;
        }
        values
    } else {
        let points: Vec<f64> = grid.points().collect();
        kde_evaluate(sample, h, order, &points)?
    };
    Ok(DensityCurve {
        grid: grid.clone(),
        order,
        bandwidth: h,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::NormalMixture;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_point_reduces_to_kernel_value() {
        let s = Sample::new(vec![0.0]).unwrap();
        let v = kde_evaluate(&s, 1.0, 0, &[0.0]).unwrap();
        assert_relative_eq!(v[0], 0.398_942_280_401_432_7, max_relative = 1e-15);
    }

    #[test]
    fn two_point_average_and_symmetry() {
        let s = Sample::new(vec![-1.0, 1.0]).unwrap();
        let f = kde_evaluate(&s, 1.0, 0, &[0.0]).unwrap();
        assert_relative_eq!(f[0], 0.241_970_724_519_143_35, max_relative = 1e-15);
        let d = kde_evaluate(&s, 1.0, 1, &[0.0]).unwrap();
        assert_eq!(d[0], 0.0);
    }

    #[test]
    fn argument_validation() {
        let s = Sample::new(vec![0.0, 1.0]).unwrap();
        assert!(kde_evaluate(&s, 0.0, 0, &[0.0]).is_err());
        assert!(kde_evaluate(&s, 1.0, 3, &[0.0]).is_err());
        assert!(kde_evaluate(&s, 1.0, 0, &[]).is_err());
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn binning_splits_mass_linearly() {
        let grid = EvaluationGrid::new(0.0, 4.0, 5).unwrap();
        // exactly on a grid point
        let s = Sample::new(vec![2.0]).unwrap();
        let b = linear_bin(&s, &grid).unwrap();
        assert_eq!(b.bin_weights().unwrap(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
        // midpoint between grid points
        let s = Sample::new(vec![2.5]).unwrap();
        let b = linear_bin(&s, &grid).unwrap();
        assert_eq!(b.bin_weights().unwrap(), &[0.0, 0.0, 0.5, 0.5, 0.0]);
        // outside
        let s = Sample::new(vec![4.5]).unwrap();
        assert!(linear_bin(&s, &grid).is_err());
    }

    #[test]
    fn bin_weights_conserve_mass() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(1000, 11).unwrap();
        let grid = EvaluationGrid::spanning(&s, 0.3, 512).unwrap();
        let b = linear_bin(&s, &grid).unwrap();
        let total: f64 = b.bin_weights().unwrap().iter().sum();
        assert!((total - 1000.0).abs() < 1e-9, "total = {total}");
    }

    #[test]
    fn binned_matches_exact() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(1000, 5).unwrap();
        let h = 0.25;
        let grid = EvaluationGrid::spanning(&s, h, 1024).unwrap();
        let binned_grid = linear_bin(&s, &grid).unwrap();
        for order in 0..=2 {
            let exact = kde_on_grid(&s, h, order, &grid, false).unwrap();
            let fast = kde_on_grid(&s, h, order, &binned_grid, true).unwrap();
            let scale = exact
                .values
                .iter()
                .cloned()
                .fold(0.0f64, |a, b| a.max(b.abs()));
            let worst = exact
                .values
                .iter()
                .zip(&fast.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(
                worst < 1e-3 * scale,
                "order {order}: sup dev {worst}, scale {scale}"
            );
        }
    }

    #[test]
    fn order_zero_curve_integrates_to_one() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(500, 9).unwrap();
        let h = 0.3;
        let grid = EvaluationGrid::spanning(&s, h, 1024).unwrap();
        let curve = kde_on_grid(&s, h, 0, &grid, false).unwrap();
        let mass = curve.integral();
        assert!((0.9999..=1.0 + 1e-9).contains(&mass), "mass = {mass}");
        assert!(curve.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn doubling_h_lowers_the_mode() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(800, 21).unwrap();
        let grid = EvaluationGrid::spanning(&s, 0.6, 1024).unwrap();
        let narrow = kde_on_grid(&s, 0.3, 0, &grid, false).unwrap();
        let wide = kde_on_grid(&s, 0.6, 0, &grid, false).unwrap();
        assert!(wide.max_value() < narrow.max_value());
    }

    #[test]
    fn derivative_curve_matches_finite_differences() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(400, 33).unwrap();
        let h = 0.35;
        let grid = EvaluationGrid::spanning(&s, h, 2048).unwrap();
        let f = kde_on_grid(&s, h, 0, &grid, false).unwrap();
        let d = kde_on_grid(&s, h, 1, &grid, false).unwrap();
        let step = grid.step();
        let scale = d.values.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        for k in 1..grid.count() - 1 {
            let fd = (f.values[k + 1] - f.values[k - 1]) / (2.0 * step);
            // second-order truncation error ~ (step/h)^2 * scale
            let tol = 2.0 * (step / h).powi(2) * scale + 1e-12;
            assert!((fd - d.values[k]).abs() < tol, "k = {k}");
        }
    }

    // Lattice-valued data keeps shifted sums exact, so equivariance holds
    // bitwise rather than merely to rounding.
    fn lattice_sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            (-(1 << 22)..(1 << 22)).prop_map(|k| k as f64 / 1048576.0),
            2..40,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn location_equivariance_exact_on_lattice(values in lattice_sample(), shift_pow in 0u32..8) {
            let c = f64::from(1u32 << shift_pow);
            let s = Sample::new(values.clone()).unwrap();
            let shifted = Sample::new(values.iter().map(|v| v + c).collect()).unwrap();
            let points: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.5).collect();
            let moved: Vec<f64> = points.iter().map(|p| p + c).collect();
            for order in 0..=2 {
                let a = kde_evaluate(&s, 0.75, order, &points).unwrap();
                let b = kde_evaluate(&shifted, 0.75, order, &moved).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn scale_equivariance(values in lattice_sample(), scale_k in 1u32..16) {
            let scale = scale_k as f64 * 0.25;
            let s = Sample::new(values.clone()).unwrap();
            let scaled = Sample::new(values.iter().map(|v| v * scale).collect()).unwrap();
            let points: Vec<f64> = (-4..=4).map(|k| k as f64 * 0.4).collect();
            let moved: Vec<f64> = points.iter().map(|p| p * scale).collect();
            let h = 0.8;
            for order in 0..=2usize {
                let a = kde_evaluate(&s, h, order, &points).unwrap();
                let b = kde_evaluate(&scaled, h * scale, order, &moved).unwrap();
                let factor = scale.powi(-(order as i32 + 1));
                for (x, y) in a.iter().zip(&b) {
                    let want = x * factor;
                    prop_assert!((y - want).abs() <= 1e-10 * want.abs().max(1e-12),
                        "order {}: {} vs {}", order, y, want);
                }
            }
        }
    }

    #[test]
    fn quantile_interpolates_order_statistics() {
        let s = Sample::new(vec![10.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.quantile(0.0), 1.0);
        assert_eq!(s.quantile(1.0), 10.0);
        assert_eq!(s.quantile(0.25), 2.0);
        assert_eq!(s.quantile(0.5), 3.0);
        assert_eq!(s.quantile(0.625), 3.5);
    }
}

//! One-dimensional minimization: coarse log-spaced scan followed by
//! golden-section refinement.

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Runs until the bracket is below `rel_tol` relative to the midpoint.
/// Returns `(x_min, f_min)`.
pub fn golden_section_minimize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()) * 0.5 {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `count` log-spaced points on `[lo, hi]` (both positive).
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (la, lb) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (la + (lb - la) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Outcome of the scan-then-refine minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanMinimum {
    pub x: f64,
    pub value: f64,
    /// Index of the grid argmin (0-based), for boundary diagnostics.
    pub grid_index: usize,
    /// Number of strict local minima seen on the coarse grid.
    pub local_minima: usize,
}

/// Scan `grid` (assumed sorted ascending), then golden-refine around the
/// best point. The caller decides what boundary argmins mean.
pub fn scan_then_golden(f: impl Fn(f64) -> f64, grid: &[f64], rel_tol: f64) -> ScanMinimum {
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let mut local_minima = 0;
    for i in 0..values.len() {
        let left_up = i == 0 || values[i - 1] > values[i];
        let right_up = i + 1 == values.len() || values[i + 1] > values[i];
        if left_up && right_up && i > 0 && i + 1 < values.len() {
            local_minima += 1;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (x, value) = if lo < hi {
        golden_section_minimize(&f, lo, hi, rel_tol)
    } else {
        (grid[best], values[best])
    };
    // keep whichever is genuinely lower
    if values[best] < value {
        ScanMinimum {
            x: grid[best],
            value: values[best],
            grid_index: best,
            local_minima,
        }
    } else {
        ScanMinimum {
            x,
            value,
            grid_index: best,
            local_minima,
        }
    }
}

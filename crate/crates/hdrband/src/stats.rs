//! Paired-comparison statistics for the simulation harness.

use crate::normal;

/// Wilcoxon signed-rank test by the normal approximation, with tie-averaged
/// ranks, a tie correction in the variance and a 0.5 continuity correction.
/// Zero differences are dropped, following standard practice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    /// Number of non-zero differences used.
    pub n_used: usize,
    /// Standardized statistic with continuity correction.
    pub z: f64,
    /// Two-sided p-value from the normal approximation.
    pub p_two_sided: f64,
}

/// Signed-rank test of the hypothesis that paired differences are
/// symmetric about zero. Needs roughly 20 usable pairs for the normal
/// approximation to be trustworthy; callers flag smaller inputs.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> WilcoxonResult {
    let mut nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return WilcoxonResult {
            w_plus: 0.0,
            n_used: 0,
            z: 0.0,
            p_two_sided: 1.0,
        };
    }
    nonzero.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    // average ranks across ties; accumulate the tie correction sum(t^3 - t)
    let mut w_plus = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && nonzero[j].abs() == nonzero[i].abs() {
            j += 1;
        }
        let t = (j - i) as f64;
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for d in &nonzero[i..j] {
            if *d > 0.0 {
                w_plus += avg_rank;
            }
        }
        if t > 1.0 {
            tie_term += t * t * t - t;
        }
        i = j;
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = if var > 0.0 {
        let centered = w_plus - mean;
        let corrected = centered - 0.5 * centered.signum();
        corrected / var.sqrt()
    } else {
        0.0
    };
    let p = 2.0 * normal::cdf(-z.abs());
    WilcoxonResult {
        w_plus,
        n_used: n,
        z,
        p_two_sided: p.min(1.0),
    }
}

/// Median of a slice (not assumed sorted); NaNs are rejected by debug assert.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median needs comparable values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_differences_give_near_zero_z() {
        let diffs = [1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 0.5, -0.5];
        let r = wilcoxon_signed_rank(&diffs);
        // perfectly balanced ranks: W+ = n(n+1)/4
        assert_eq!(r.w_plus, 18.0);
        assert!(r.z.abs() < 0.2);
        assert!(r.p_two_sided > 0.8);
    }

    #[test]
    fn one_sided_shift_is_detected() {
        let diffs: Vec<f64> = (1..=30).map(|k| k as f64 * 0.1 + 0.05).collect();
        let r = wilcoxon_signed_rank(&diffs);
        assert_eq!(r.n_used, 30);
        assert!(r.z > 4.0, "z = {}", r.z);
        assert!(r.p_two_sided < 1e-4);
    }

    #[test]
    fn zeros_are_dropped_and_ties_averaged() {
        let diffs = [0.0, 0.0, 1.0, 1.0, -1.0];
        let r = wilcoxon_signed_rank(&diffs);
        assert_eq!(r.n_used, 3);
        // all |d| tie at rank 2
        assert_eq!(r.w_plus, 4.0);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

//! Asymptotic-risk machinery: the per-crossing coefficient algebra, the
//! risk approximation as a function of the bandwidth (or of the rate
//! constant c with h = c n^{-1/5}), its numeric minimization, and the
//! Monte Carlo "exact"-risk harness used to validate the approximation.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{kde_on_grid, linear_bin, EvaluationGrid, Sample, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::hdr::{extract_region, level_for_tau, symmetric_difference_mass};
use crate::kernel::KernelConstants;
use crate::models::{HdrOracle, NormalMixture};
use crate::optim::{log_grid, scan_then_golden};
use crate::selector::{hdr_bandwidth, lscv_bandwidth, SelectorConfig};
use crate::{normal, rng, stats};

/// Floor applied to the per-crossing limiting variance when estimation
/// noise drives it non-positive; a counter records every application.
const VARIANCE_CLAMP: f64 = 1e-12;

/// Per-crossing coefficients of the risk expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskCoefficients {
    /// Density value at the region boundary (the level).
    pub f_tau: f64,
    /// Bias constant shared by all crossings.
    pub d1: f64,
    /// Variance constant of the level estimate.
    pub d2: f64,
    /// Covariance constants, one per crossing.
    pub d3: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub b3: Vec<f64>,
    /// How many crossings needed the positivity clamp on the variance term.
    pub clamp_count: usize,
}

impl RiskCoefficients {
    /// Number of crossings (2r).
    pub fn crossing_count(&self) -> usize {
        self.b1.len()
    }

    /// Convenience: coefficients straight from an analytic HDR oracle.
    pub fn from_oracle(oracle: &HdrOracle, constants: &KernelConstants) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = oracle
            .crossings
            .iter()
            .map(|c| (c.slope, c.curvature))
            .collect();
        risk_coefficients(oracle.level, &pairs, constants)
    }
}

/// Build the D and B coefficients from the level and the per-crossing
/// (slope, curvature) pairs, ordered left to right so slopes alternate
/// +, -, +, -, ...
pub fn risk_coefficients(
    level: f64,
    crossings: &[(f64, f64)],
    constants: &KernelConstants,
) -> Result<RiskCoefficients> {
    let m = crossings.len();
    if m < 2 || m % 2 != 0 {
        return Err(Error::InvalidCoefficients(format!(
            "need an even number (>= 2) of crossings, got {m}"
        )));
    }
    if !(level > 0.0) {
        return Err(Error::InvalidCoefficients(format!(
            "level must be positive, got {level}"
        )));
    }
    for (j, &(slope, _)) in crossings.iter().enumerate() {
        if slope == 0.0 {
            return Err(Error::InvalidCoefficients(format!(
                "zero slope at crossing {j}"
            )));
        }
        if (j % 2 == 0) != (slope > 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "slopes must alternate +,-,...: crossing {j} has slope {slope:e}"
            )));
        }
    }
    let rk = constants.roughness;
    let mu2 = constants.second_moment;
    let inv: Vec<f64> = crossings.iter().map(|&(s, _)| 1.0 / s.abs()).collect();
    let inv_sum: f64 = inv.iter().sum();
    // weights w_j proportional to 1/|f'(x_j)|, summing to one
    let weights: Vec<f64> = inv.iter().map(|v| v / inv_sum).collect();

    let curvature_term: f64 = crossings
        .iter()
        .zip(&inv)
        .map(|(&(_, c), &i)| c * i)
        .sum::<f64>();
    let slope_pair_term: f64 = crossings
        .chunks(2)
        .map(|pair| pair[1].0 - pair[0].0)
        .sum::<f64>();
    let d1 = 0.5 * mu2 * (curvature_term + slope_pair_term / level) / inv_sum;

    let rk_level = rk * level;
    let d2 = rk_level * weights.iter().map(|w| w * w).sum::<f64>();
    let d3: Vec<f64> = weights.iter().map(|w| rk_level * w).collect();

    let mut clamp_count = 0;
    let mut b1 = Vec::with_capacity(m);
    let mut b2 = Vec::with_capacity(m);
    let mut b3 = Vec::with_capacity(m);
    for j in 0..m {
        let mut variance = rk_level - 2.0 * d3[j] + d2;
        if variance < VARIANCE_CLAMP {
            variance = VARIANCE_CLAMP;
            clamp_count += 1;
        }
        let sd = variance.sqrt();
        let bias = (0.5 * mu2 * crossings[j].1 - d1).abs();
        b1.push(2.0 * level * sd * inv[j]);
        b2.push(bias / sd);
        b3.push(level * bias * inv[j]);
    }
    Ok(RiskCoefficients {
        f_tau: level,
        d1,
        d2,
        d3,
        b1,
        b2,
        b3,
        clamp_count,
    })
}

/// The risk approximation at bandwidth `h` and sample size `n`:
/// sum_j [ B1_j phi(B2_j n^{1/2} h^{5/2}) / (nh)^{1/2}
///       + B3_j h^2 {2 Phi(B2_j n^{1/2} h^{5/2}) - 1} ].
pub fn asymptotic_risk_in_h(h: f64, n: usize, rc: &RiskCoefficients) -> f64 {
    let nf = n as f64;
    let arg_scale = nf.sqrt() * h.powf(2.5);
    let inv_sqrt_nh = 1.0 / (nf * h).sqrt();
    let h2 = h * h;
    let mut total = 0.0;
    for j in 0..rc.crossing_count() {
        let a = rc.b2[j] * arg_scale;
        total +=
            rc.b1[j] * normal::pdf(a) * inv_sqrt_nh + rc.b3[j] * h2 * (2.0 * normal::cdf(a) - 1.0);
    }
    total
}

/// The same risk written in the rate constant c, h = c n^{-1/5}:
/// AR(c) = n^{-2/5} sum_j [ B1_j c^{-1/2} phi(B2_j c^{5/2})
///                        + B3_j c^2 {2 Phi(B2_j c^{5/2}) - 1} ].
pub fn asymptotic_risk_ar(c: f64, n: usize, rc: &RiskCoefficients) -> f64 {
    let scale = (n as f64).powf(-0.4);
    let c52 = c.powf(2.5);
    let mut total = 0.0;
    for j in 0..rc.crossing_count() {
        let a = rc.b2[j] * c52;
        total +=
            rc.b1[j] / c.sqrt() * normal::pdf(a) + rc.b3[j] * c * c * (2.0 * normal::cdf(a) - 1.0);
    }
    scale * total
}

/// Result of minimizing AR over c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArMinimum {
    pub c_opt: f64,
    pub value: f64,
    /// More than one local minimum showed up on the coarse scan.
    pub multimodal: bool,
}

/// Points scanned on the coarse log grid before golden-section refinement.
const AR_SCAN_POINTS: usize = 512;

/// Minimize AR(c) over c in [c_ref/100, 100 c_ref].
///
/// `c_ref` centres the bracket; selectors pass their normal-reference
/// constant, oracle studies pass 1. Fails when every crossing has
/// B2_j B3_j = 0 (the objective then decays monotonically) or when the
/// scan argmin lands on the bracket edge.
pub fn minimize_ar(n: usize, rc: &RiskCoefficients, c_ref: f64) -> Result<ArMinimum> {
    if !(c_ref > 0.0) {
        return Err(Error::InvalidCoefficients(format!(
            "c_ref must be positive, got {c_ref}"
        )));
    }
    let usable = (0..rc.crossing_count()).any(|j| rc.b2[j] > 0.0 && rc.b3[j] > 0.0);
    if !usable {
        return Err(Error::NoInteriorMinimum {
            lo: c_ref * 1e-2,
            hi: c_ref * 1e2,
            detail: "every crossing has B2*B3 = 0, so the risk decreases monotonically in c".into(),
        });
    }
    let grid = log_grid(c_ref * 1e-2, c_ref * 1e2, AR_SCAN_POINTS);
    let scan = scan_then_golden(|c| asymptotic_risk_ar(c, n, rc), &grid, 1e-9);
    if scan.grid_index == 0 || scan.grid_index + 1 == grid.len() {
        return Err(Error::NoInteriorMinimum {
            lo: grid[0],
            hi: *grid.last().unwrap(),
            detail: format!(
                "scan argmin sits on the bracket edge (c = {:.6e}, AR = {:.6e})",
                scan.x, scan.value
            ),
        });
    }
    Ok(ArMinimum {
        c_opt: scan.x,
        value: scan.value,
        multimodal: scan.local_minima > 1,
    })
}

/// Monte Carlo statistics for one bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloStats {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

/// One point of a risk curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskCurvePoint {
    pub h: f64,
    /// The risk approximation evaluated with oracle coefficients.
    pub asymptotic: f64,
    pub monte_carlo: Option<MonteCarloStats>,
}

/// The symmetric-difference error of one simulated HDR estimate.
///
/// Draws a fresh sample with `rep_seed`, estimates the region at each
/// bandwidth (sharing the sample across bandwidths) and measures the
/// exact error against the oracle region under the true mixture.
pub fn replication_errors(
    mixture: &NormalMixture,
    n: usize,
    tau: f64,
    h_values: &[f64],
    oracle: &HdrOracle,
    rep_seed: u64,
) -> Result<Vec<f64>> {
    let sample = mixture.sample(n, rep_seed)?;
    let h_max = h_values.iter().cloned().fold(0.0f64, f64::max);
    let grid = EvaluationGrid::spanning(&sample, h_max, DEFAULT_GRID_POINTS)?;
    let binned = linear_bin(&sample, &grid)?;
    h_values
        .iter()
        .map(|&h| {
            let curve = kde_on_grid(&sample, h, 0, &binned, true)?;
            let level = level_for_tau(&curve, tau)?;
            let region = extract_region(&curve, level);
            Ok(symmetric_difference_mass(&region, &oracle.region, mixture))
        })
        .collect()
}

/// Monte Carlo proxy for the risk at each bandwidth: the average over
/// `reps` independent samples of the exact symmetric-difference error.
/// Replication k depends only on (seed, k), so results are identical under
/// any execution order or thread count.
pub fn monte_carlo_risk(
    mixture: &NormalMixture,
    n: usize,
    tau: f64,
    h_values: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<RiskCurvePoint>> {
    if reps == 0 {
        return Err(Error::InvalidSample("need at least one replication".into()));
    }
    if h_values.is_empty() {
        return Err(Error::BadGrid("no bandwidths requested".into()));
    }
    let oracle = mixture.hdr_oracle(tau)?;
    let rc = RiskCoefficients::from_oracle(&oracle, &crate::kernel::kernel_constants())?;
    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|i| {
            replication_errors(
                mixture,
                n,
                tau,
                h_values,
                &oracle,
                rng::derive_seed(seed, i as u64),
            )
        })
        .collect::<Result<_>>()?;
    Ok(h_values
        .iter()
        .enumerate()
        .map(|(k, &h)| {
            let errs: Vec<f64> = per_rep.iter().map(|r| r[k]).collect();
            let mean = errs.iter().sum::<f64>() / reps as f64;
            let stderr = if reps > 1 {
                let ss: f64 = errs.iter().map(|e| (e - mean) * (e - mean)).sum();
                (ss / (reps - 1) as f64 / reps as f64).sqrt()
            } else {
                0.0
            };
            RiskCurvePoint {
                h,
                asymptotic: asymptotic_risk_in_h(h, n, &rc),
                monte_carlo: Some(MonteCarloStats { mean, stderr, reps }),
            }
        })
        .collect())
}

/// Write a risk curve as CSV rows `h,asym,mc_mean,mc_se`.
pub fn write_risk_curve_csv<W: std::io::Write>(
    points: &[RiskCurvePoint],
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "h,asym,mc_mean,mc_se")?;
    for p in points {
        let (mean, se) = match p.monte_carlo {
            Some(mc) => (mc.mean, mc.stderr),
            None => (f64::NAN, f64::NAN),
        };
        writeln!(out, "{},{},{mean},{se}", p.h, p.asymptotic)?;
    }
    Ok(())
}

/// One replication of the selector comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationRecord {
    pub rep: usize,
    pub tau: f64,
    pub err_hdr: f64,
    pub err_lscv: f64,
}

/// Per-tau summary of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub tau: f64,
    /// Median of log10(err_hdr / err_lscv); negative favors the HDR selector.
    pub median_log10_ratio: f64,
    pub wilcoxon_z: f64,
    pub wilcoxon_p: f64,
    /// Replications contributing to the summary.
    pub used: usize,
    /// Replications dropped because a selector or the error computation failed.
    pub excluded: usize,
    /// Too few replications for the normal approximation (< 20).
    pub low_power: bool,
}

/// Full output of the selector comparison study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorComparison {
    pub records: Vec<SimulationRecord>,
    pub summaries: Vec<ComparisonSummary>,
}

impl SelectorComparison {
    /// Write the per-replication records as CSV rows
    /// `rep,tau,err_hdr,err_lscv`, then one comment line per tau with the
    /// summary statistics.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "rep,tau,err_hdr,err_lscv")?;
        for r in &self.records {
            writeln!(out, "{},{},{},{}", r.rep, r.tau, r.err_hdr, r.err_lscv)?;
        }
        writeln!(
            out,
            "# tau,median_log10_ratio,wilcoxon_z,wilcoxon_p,used,excluded,low_power"
        )?;
        for s in &self.summaries {
            writeln!(
                out,
                "# {},{},{},{},{},{},{}",
                s.tau,
                s.median_log10_ratio,
                s.wilcoxon_z,
                s.wilcoxon_p,
                s.used,
                s.excluded,
                s.low_power
            )?;
        }
        Ok(())
    }
}

fn region_error_at(
    sample: &Sample,
    h: f64,
    tau: f64,
    mixture: &NormalMixture,
    oracle: &HdrOracle,
    grid_points: usize,
) -> Result<f64> {
    let grid = EvaluationGrid::spanning(sample, h, grid_points)?;
    let binned = linear_bin(sample, &grid)?;
    let curve = kde_on_grid(sample, h, 0, &binned, true)?;
    let level = level_for_tau(&curve, tau)?;
    let region = extract_region(&curve, level);
    Ok(symmetric_difference_mass(&region, &oracle.region, mixture))
}

/// Compare the HDR-tailored selector against least-squares cross-validation
/// on `reps` independent samples, sharing each sample between the two
/// selectors. Replications where either selector fails are excluded and
/// counted per tau.
pub fn compare_selectors(
    mixture: &NormalMixture,
    n: usize,
    taus: &[f64],
    reps: usize,
    seed: u64,
    config: &SelectorConfig,
) -> Result<SelectorComparison> {
    if reps < 2 {
        return Err(Error::InvalidSample(format!(
            "need at least 2 replications, got {reps}"
        )));
    }
    let oracles: Vec<HdrOracle> = taus
        .iter()
        .map(|&tau| mixture.hdr_oracle(tau))
        .collect::<Result<_>>()?;

    // per replication: for each tau, Ok((err_hdr, err_lscv)) or skip
    let rep_rows: Vec<Vec<Option<(f64, f64)>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = rng::derive_seed(seed, rep as u64);
            let sample = match mixture.sample(n, rep_seed) {
                Ok(s) => s,
                Err(_) => return vec![None; taus.len()],
            };
            let lscv = lscv_bandwidth(&sample, config).map(|r| r.bandwidth);
            taus.iter()
                .zip(&oracles)
                .map(|(&tau, oracle)| {
                    let h_hdr = hdr_bandwidth(&sample, tau, config).ok()?.bandwidth;
                    let h_lscv = *lscv.as_ref().ok()?;
                    let e_hdr =
                        region_error_at(&sample, h_hdr, tau, mixture, oracle, config.grid_points)
                            .ok()?;
                    let e_lscv =
                        region_error_at(&sample, h_lscv, tau, mixture, oracle, config.grid_points)
                            .ok()?;
                    Some((e_hdr, e_lscv))
                })
                .collect()
        })
        .collect();

    let mut records = Vec::new();
    let mut summaries = Vec::with_capacity(taus.len());
    for (t_idx, &tau) in taus.iter().enumerate() {
        let mut ratios = Vec::new();
        let mut excluded = 0;
        for (rep, row) in rep_rows.iter().enumerate() {
            match row[t_idx] {
                Some((err_hdr, err_lscv)) => {
                    records.push(SimulationRecord {
                        rep,
                        tau,
                        err_hdr,
                        err_lscv,
                    });
                    if err_hdr > 0.0 && err_lscv > 0.0 {
                        ratios.push((err_hdr / err_lscv).log10());
                    }
                }
                None => excluded += 1,
            }
        }
        let median = if ratios.is_empty() {
            f64::NAN
        } else {
            stats::median(&ratios)
        };
        let w = stats::wilcoxon_signed_rank(&ratios);
        summaries.push(ComparisonSummary {
            tau,
            median_log10_ratio: median,
            wilcoxon_z: w.z,
            wilcoxon_p: w.p_two_sided,
            used: ratios.len(),
            excluded,
            low_power: ratios.len() < 20,
        });
    }
    records.sort_by(|a, b| a.rep.cmp(&b.rep).then(a.tau.total_cmp(&b.tau)));
    Ok(SelectorComparison { records, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_constants;
    use approx::assert_relative_eq;

    /// Exactly symmetric single-interval crossing pair for the standard
    /// normal at half coverage, frozen from a high-precision computation.
    pub(crate) fn symmetric_normal_crossings() -> (f64, Vec<(f64, f64)>) {
        let level = 0.3177765726841069;
        let slope = 0.2143370411278703;
        let curvature = -0.1732084353560024;
        (level, vec![(slope, curvature), (-slope, curvature)])
    }

    #[test]
    fn coefficients_match_scripted_values() {
        let (level, crossings) = symmetric_normal_crossings();
        let rc = risk_coefficients(level, &crossings, &kernel_constants()).unwrap();
        assert_relative_eq!(rc.d1, -0.15888828634205347, max_relative = 1e-12);
        assert_relative_eq!(rc.d2, 0.04482155805096990, max_relative = 1e-12);
        assert_relative_eq!(rc.b1[0], 0.6277664703049607, max_relative = 1e-12);
        assert_relative_eq!(rc.b2[0], 0.3414279851928826, max_relative = 1e-12);
        assert_relative_eq!(rc.b3[0], 0.1071685205639351, max_relative = 1e-12);
        assert_eq!(rc.clamp_count, 0);
        // symmetric case: per-crossing quantities coincide, D3 = D2 exactly
        assert_eq!(rc.d3[0], rc.d3[1]);
        assert_eq!(rc.b1[0], rc.b1[1]);
        assert_eq!(rc.b2[0], rc.b2[1]);
        assert_eq!(rc.b3[0], rc.b3[1]);
        assert_eq!(rc.d3[0], rc.d2);
    }

    #[test]
    fn coefficient_validation() {
        let k = kernel_constants();
        assert!(risk_coefficients(0.3, &[(0.2, -0.1)], &k).is_err());
        assert!(risk_coefficients(0.3, &[(0.2, -0.1), (0.1, -0.1)], &k).is_err());
        assert!(risk_coefficients(0.3, &[(0.0, -0.1), (-0.1, -0.1)], &k).is_err());
        assert!(risk_coefficients(-0.3, &[(0.2, -0.1), (-0.2, -0.1)], &k).is_err());
    }

    #[test]
    fn risk_in_h_equals_ar_under_substitution() {
        let (level, crossings) = symmetric_normal_crossings();
        let rc = risk_coefficients(level, &crossings, &kernel_constants()).unwrap();
        for n in [100usize, 1000, 100_000] {
            for c in [0.2, 0.8, 1.3, 4.0] {
                let h = c * (n as f64).powf(-0.2);
                let a = asymptotic_risk_in_h(h, n, &rc);
                let b = asymptotic_risk_ar(c, n, &rc);
                assert_relative_eq!(a, b, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn risk_blows_up_at_small_h_and_large_c() {
        let (level, crossings) = symmetric_normal_crossings();
        let rc = risk_coefficients(level, &crossings, &kernel_constants()).unwrap();
        let n = 1000;
        assert!(asymptotic_risk_in_h(1e-9, n, &rc) > asymptotic_risk_in_h(0.3, n, &rc) * 1e2);
        assert!(asymptotic_risk_ar(1e3, n, &rc) > asymptotic_risk_ar(1.0, n, &rc));
    }

    #[test]
    fn zero_b2_reduces_to_pure_variance_term() {
        let (level, crossings) = symmetric_normal_crossings();
        let mut rc = risk_coefficients(level, &crossings, &kernel_constants()).unwrap();
        rc.b2 = vec![0.0; 2];
        let n = 1000;
        let h = 0.3;
        let want: f64 = rc
            .b1
            .iter()
            .map(|b1| b1 * normal::pdf(0.0) / (n as f64 * h).sqrt())
            .sum();
        assert_relative_eq!(asymptotic_risk_in_h(h, n, &rc), want, max_relative = 1e-14);
    }

    #[test]
    fn n_to_two_fifths_times_ar_is_n_free() {
        let (level, crossings) = symmetric_normal_crossings();
        let rc = risk_coefficients(level, &crossings, &kernel_constants()).unwrap();
        let c = 1.1;
        let a = (1000f64).powf(0.4) * asymptotic_risk_ar(c, 1000, &rc);
        let b = (250_000f64).powf(0.4) * asymptotic_risk_ar(c, 250_000, &rc);
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn minimizer_requires_usable_coefficients() {
        let (level, crossings) = symmetric_normal_crossings();
        let mut rc = risk_coefficients(level, &crossings, &kernel_constants()).unwrap();
        rc.b2 = vec![0.0; 2];
        rc.b3 = vec![0.0; 2];
        match minimize_ar(1000, &rc, 1.0) {
            Err(Error::NoInteriorMinimum { .. }) => {}
            other => panic!("expected NoInteriorMinimum, got {other:?}"),
        }
    }

    #[test]
    fn minimizer_matches_dense_grid() {
        let (level, crossings) = symmetric_normal_crossings();
        let rc = risk_coefficients(level, &crossings, &kernel_constants()).unwrap();
        let n = 1000;
        let m = minimize_ar(n, &rc, 1.0).unwrap();
        assert!(!m.multimodal);
        let grid = log_grid(1e-2, 1e2, 200_000);
        let mut best = (f64::INFINITY, 0.0);
        for c in grid {
            let v = asymptotic_risk_ar(c, n, &rc);
            if v < best.0 {
                best = (v, c);
            }
        }
        assert_relative_eq!(m.c_opt, best.1, max_relative = 1e-4);
        assert!(m.value <= best.0 + 1e-15);
    }

    #[test]
    fn scaling_the_truth_scales_c_opt() {
        let n = 1000;
        let base = NormalMixture::standard_normal();
        let scaled = NormalMixture::normal(0.0, 2.0).unwrap();
        let k = kernel_constants();
        let rc1 = RiskCoefficients::from_oracle(&base.hdr_oracle(0.5).unwrap(), &k).unwrap();
        let rc2 = RiskCoefficients::from_oracle(&scaled.hdr_oracle(0.5).unwrap(), &k).unwrap();
        let c1 = minimize_ar(n, &rc1, 1.0).unwrap().c_opt;
        let c2 = minimize_ar(n, &rc2, 1.0).unwrap().c_opt;
        assert_relative_eq!(c2, 2.0 * c1, max_relative = 1e-5);
    }

    #[test]
    fn symmetric_risk_profile_has_a_unique_sign_change() {
        // v(x) = -1 + 4 b x (2 Phi(x) - 1)/phi(x) + 5 (2b - 1) x^2 with
        // b = B3/(B1 B2) changes sign exactly once on (0, inf) when the
        // coefficients are symmetric across crossings.
        for (mixture, tau) in [
            (NormalMixture::standard_normal(), 0.5),
            (NormalMixture::standard_normal(), 0.2),
            (NormalMixture::preset("mw4").unwrap(), 0.5),
            (NormalMixture::preset("mw6").unwrap(), 0.5),
        ] {
            let k = kernel_constants();
            let rc = RiskCoefficients::from_oracle(&mixture.hdr_oracle(tau).unwrap(), &k).unwrap();
            let b = rc.b3[0] / (rc.b1[0] * rc.b2[0]);
            let v = |x: f64| {
                -1.0 + 4.0 * b * x * (2.0 * normal::cdf(x) - 1.0) / normal::pdf(x)
                    + 5.0 * (2.0 * b - 1.0) * x * x
            };
            let grid = log_grid(1e-4, 1e4, 4000);
            let mut changes = 0;
            let mut prev = v(grid[0]);
            assert!(prev < 0.0, "v must start negative");
            for &x in &grid[1..] {
                let cur = v(x);
                if (cur > 0.0) != (prev > 0.0) {
                    changes += 1;
                }
                prev = cur;
            }
            assert_eq!(changes, 1, "tau={tau}");
        }
    }

    #[test]
    fn monte_carlo_errors_are_probabilities_and_m1_matches_single_rep() {
        let m = NormalMixture::standard_normal();
        let tau = 0.5;
        let oracle = m.hdr_oracle(tau).unwrap();
        let hs = [0.15, 0.3, 0.6];
        let points = monte_carlo_risk(&m, 200, tau, &hs, 1, 77).unwrap();
        let single =
            replication_errors(&m, 200, tau, &hs, &oracle, rng::derive_seed(77, 0)).unwrap();
        for (p, e) in points.iter().zip(&single) {
            let mc = p.monte_carlo.unwrap();
            assert_eq!(mc.mean, *e);
            assert_eq!(mc.stderr, 0.0);
            assert!((0.0..=1.0).contains(&mc.mean));
        }
    }

    #[test]
    fn replication_errors_do_not_depend_on_evaluation_order() {
        let m = NormalMixture::preset("mw6").unwrap();
        let tau = 0.2;
        let oracle = m.hdr_oracle(tau).unwrap();
        let hs = [0.2, 0.4];
        let seeds: Vec<u64> = (0..6).map(|i| rng::derive_seed(5, i)).collect();
        let forward: Vec<_> = seeds
            .iter()
            .map(|&s| replication_errors(&m, 150, tau, &hs, &oracle, s).unwrap())
            .collect();
        let backward: Vec<_> = seeds
            .iter()
            .rev()
            .map(|&s| replication_errors(&m, 150, tau, &hs, &oracle, s).unwrap())
            .collect();
        for (i, f) in forward.iter().enumerate() {
            assert_eq!(*f, backward[seeds.len() - 1 - i]);
        }
    }

    #[test]
    fn identical_selectors_would_give_zero_log_ratio() {
        // sanity for the summary path: equal errors -> ratio 1 -> log 0
        let ratios = [0.0f64; 10];
        assert_eq!(stats::median(&ratios), 0.0);
    }
}

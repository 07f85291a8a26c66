//! The HDR plug-in bandwidth selector and the least-squares
//! cross-validation baseline.
//!
//! The selector runs a two-stage functional-estimation chain: normal-scale
//! starts for psi_8, psi_10, psi_12; kernel estimates of psi_6, psi_8,
//! psi_10; kernel estimates of psi_4, psi_6, psi_8; direct plug-in pilot
//! bandwidths for f, f' and f''; pilot level crossings; estimated risk
//! coefficients; and a numeric minimization of the estimated asymptotic
//! risk in the rate constant c, returning h = c n^{-1/5}.
//!
//! All internal computation happens on data recentered at the lower median
//! (an order statistic), which makes the selected bandwidth exactly
//! shift-invariant whenever the shifted values are exactly representable.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::density::{linear_bin, EvaluationGrid, Sample, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::hdr::{find_crossings, CrossingSet};
use crate::kernel::{gaussian_derivative, kernel_constants};
use crate::normal::SQRT_2PI;
use crate::optim::{golden_section_minimize, log_grid};
use crate::risk::{minimize_ar, risk_coefficients, RiskCoefficients};

/// Ratio of the standard normal interquartile range to its standard
/// deviation, used to debias the IQR-based scale estimate.
const NORMAL_IQR: f64 = 1.349;

/// Options threaded through the selector pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorConfig {
    /// Reproduce the printed stage constants (30, -210, 1890, ...) for the
    /// functional bandwidths instead of the exact -2 L^(r)(0) values, which
    /// carry an extra 1/sqrt(2 pi).
    pub paper_literal_constants: bool,
    /// Use linear-binned approximations for the quadratic functionals and
    /// pilot curves (strongly recommended; exact summation is O(n^2)).
    pub binned: bool,
    /// Grid resolution for binned evaluation and pilot curves.
    pub grid_points: usize,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            paper_literal_constants: false,
            binned: true,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Smallest sample the two-stage functional chain accepts.
pub const MIN_SELECTOR_N: usize = 50;

/// Robust scale: min(sample standard deviation, IQR / 1.349).
pub fn robust_scale(sample: &Sample) -> Result<f64> {
    if sample.n() < 4 {
        return Err(Error::InvalidSample(format!(
            "robust scale needs n >= 4, got {}",
            sample.n()
        )));
    }
    let iqr = sample.quantile(0.75) - sample.quantile(0.25);
    let scale = sample.std_dev().min(iqr / NORMAL_IQR);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidSample(format!(
            "degenerate sample scale {scale}"
        )));
    }
    Ok(scale)
}

/// Normal-scale estimate of psi_r = integral of f^(r) f, under a fitted
/// N(mu, sigma^2): (-1)^{r/2} r! / ((2 sigma)^{r+1} (r/2)! sqrt(pi)).
pub fn psi_normal_scale(r: usize, sigma: f64) -> Result<f64> {
    if r % 2 != 0 || !(4..=12).contains(&r) {
        return Err(Error::UnsupportedOrder {
            order: r,
            limit: 12,
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidSample(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let sign = if (r / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut ratio = 1.0; // r! / (r/2)!
    for k in (r / 2 + 1)..=r {
        ratio *= k as f64;
    }
    Ok(sign * ratio / ((2.0 * sigma).powi(r as i32 + 1) * std::f64::consts::PI.sqrt()))
}

/// Number of bins used for the quadratic-functional autocorrelation.
const PSI_BINS: usize = 1024;

/// Pairwise-difference kernel sums, either exact or through linear-binned
/// counts whose autocorrelation is reused across bandwidths.
pub(crate) struct PairSums {
    n: usize,
    values: Vec<f64>,
    /// (autocorrelation of bin counts, grid step), present in binned mode.
    binned: Option<(Vec<f64>, f64)>,
}

impl PairSums {
    pub(crate) fn new(sample: &Sample, binned: bool) -> Result<Self> {
        let span = sample.max() - sample.min();
        let binned = if binned && span > 0.0 && sample.n() > 1 {
            let grid = EvaluationGrid::new(sample.min(), sample.max(), PSI_BINS)?;
            let grid = linear_bin(sample, &grid)?;
            let c = grid.bin_weights().unwrap();
            let mut autocorr = vec![0.0; PSI_BINS];
            for m in 0..PSI_BINS {
                let mut s = 0.0;
                for k in 0..PSI_BINS - m {
                    s += c[k] * c[k + m];
                }
                autocorr[m] = s;
            }
            Some((autocorr, grid.step()))
        } else {
            None
        };
        Ok(PairSums {
            n: sample.n(),
            values: sample.values().to_vec(),
            binned,
        })
    }

    /// sum_{i,j} K((X_i - X_j)/g) for K = phi^(r), diagonal included.
    fn kernel_sum(&self, r: usize, g: f64) -> Result<f64> {
        match &self.binned {
            Some((autocorr, step)) => {
                let diag = gaussian_derivative(r, 0.0)?;
                let mut s = autocorr[0] * diag;
                // phi^(r) is negligible past six bandwidths
                let m_max = (((6.0 * g / step).ceil() as usize).max(1)).min(autocorr.len() - 1);
                for (m, a) in autocorr.iter().enumerate().take(m_max + 1).skip(1) {
                    s += 2.0 * a * gaussian_derivative(r, m as f64 * step / g)?;
                }
                Ok(s)
            }
            None => {
                let diag = gaussian_derivative(r, 0.0)?;
                let mut s = self.n as f64 * diag;
                for i in 0..self.n {
                    for j in (i + 1)..self.n {
                        s += 2.0 * gaussian_derivative(r, (self.values[i] - self.values[j]) / g)?;
                    }
                }
                Ok(s)
            }
        }
    }
}

/// Kernel estimate of psi_r with bandwidth g:
/// n^{-2} g^{-r-1} sum_i sum_j phi^(r)((X_i - X_j)/g), diagonal included.
pub fn psi_kernel_estimate(sample: &Sample, r: usize, g: f64, binned: bool) -> Result<f64> {
    if r % 2 != 0 || r == 0 || r > 10 {
        return Err(Error::UnsupportedOrder {
            order: r,
            limit: 10,
        });
    }
    if !(g > 0.0) {
        return Err(Error::NonPositiveBandwidth(g));
    }
    let sums = PairSums::new(sample, binned)?;
    psi_from_sums(&sums, r, g)
}

fn psi_from_sums(sums: &PairSums, r: usize, g: f64) -> Result<f64> {
    let n = sums.n as f64;
    Ok(sums.kernel_sum(r, g)? / (n * n * g.powi(r as i32 + 1)))
}

/// The bandwidth minimizing the asymptotic mean squared error of the
/// psi_r estimate: g = [ -2 L^(r)(0) / (n psi_{r+2} mu_2(L)) ]^{1/(r+3)}.
///
/// With `paper_literal` the stage constants drop their 1/sqrt(2 pi)
/// factor, matching the printed algorithm digit for digit.
pub fn optimal_functional_bandwidth(
    r: usize,
    psi_next: f64,
    n: usize,
    paper_literal: bool,
) -> Result<f64> {
    if r % 2 != 0 || r == 0 || r > 10 {
        return Err(Error::UnsupportedOrder {
            order: r,
            limit: 10,
        });
    }
    let deriv_at_zero = kernel_constants().derivative_at_zero(r)?;
    let mut numerator = -2.0 * deriv_at_zero;
    if paper_literal {
        numerator *= SQRT_2PI;
    }
    let radicand = numerator / (n as f64 * psi_next);
    if !(radicand > 0.0) {
        return Err(Error::WrongSignPsi {
            r: r + 2,
            value: psi_next,
            stage: "functional bandwidth",
        });
    }
    Ok(radicand.powf(1.0 / (r as f64 + 3.0)))
}

/// Direct plug-in pilot bandwidth for estimating f^(r), r = 0, 1, 2:
/// h0 = [1/(2 sqrt(pi) psi_4 n)]^{1/5},
/// h1 = [-3/(4 sqrt(pi) psi_6 n)]^{1/7},
/// h2 = [15/(8 sqrt(pi) psi_8 n)]^{1/9}.
pub fn plugin_derivative_bandwidth(r: usize, psi_est: f64, n: usize) -> Result<f64> {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let (numerator, exponent) = match r {
        0 => (1.0 / (2.0 * sqrt_pi), 0.2),
        1 => (-3.0 / (4.0 * sqrt_pi), 1.0 / 7.0),
        2 => (15.0 / (8.0 * sqrt_pi), 1.0 / 9.0),
        _ => return Err(Error::UnsupportedOrder { order: r, limit: 2 }),
    };
    let radicand = numerator / (psi_est * n as f64);
    if !(radicand > 0.0) {
        return Err(Error::WrongSignPsi {
            r: 2 * r + 4,
            value: psi_est,
            stage: "pilot bandwidth",
        });
    }
    Ok(radicand.powf(exponent))
}

/// A normal-scale substitution made when a kernel estimate carried the
/// wrong sign for the formula consuming it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignFallback {
    /// Selector step (5 or 6) where the substitution happened.
    pub step: u8,
    /// Order of the psi functional replaced.
    pub r: usize,
}

/// Diagnostics accumulated along the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SelectorDiagnostics {
    pub sign_fallbacks: Vec<SignFallback>,
    /// psi_4 > 0, psi_6 < 0, psi_8 > 0, psi_10 < 0 on the raw kernel
    /// estimates; a violation is recorded, not fatal.
    pub psi_sign_pattern_ok: bool,
    /// Positivity clamps applied inside the coefficient algebra.
    pub clamp_count: usize,
    /// Estimated number of HDR intervals (r-hat).
    pub interval_count: usize,
    /// The estimated-risk scan saw more than one local minimum.
    pub ar_multimodal: bool,
}

/// Everything the selector computed, for auditing and serialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorReport {
    /// The selected bandwidth c-hat n^{-1/5}.
    pub bandwidth: f64,
    pub n: usize,
    pub tau: f64,
    pub sigma_hat: f64,
    /// Normal-scale starts, r = 8, 10, 12.
    pub psi_normal_scale: BTreeMap<usize, f64>,
    /// Stage-one functional bandwidths, keyed by the psi order they serve.
    pub g_stage1: BTreeMap<usize, f64>,
    /// Stage-one kernel estimates, r = 6, 8, 10.
    pub psi_stage1: BTreeMap<usize, f64>,
    /// Stage-two functional bandwidths, keyed by the psi order they serve.
    pub g_stage2: BTreeMap<usize, f64>,
    /// Stage-two kernel estimates, r = 4, 6, 8.
    pub psi_stage2: BTreeMap<usize, f64>,
    /// Pilot bandwidths (h0, h1, h2) for f, f', f''.
    pub pilot_bandwidths: [f64; 3],
    /// Pilot level and crossings (in the original data coordinates).
    pub crossings: CrossingSet,
    /// Estimated risk coefficients.
    pub coefficients: RiskCoefficients,
    /// Minimizer of the estimated asymptotic risk.
    pub c_opt_hat: f64,
    pub diagnostics: SelectorDiagnostics,
}

impl SelectorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Substitute the normal-scale value when `psi` has the wrong sign for the
/// stage that consumes it (`want_negative` says which sign is right).
fn sign_guard(
    psi: f64,
    r: usize,
    want_negative: bool,
    sigma: f64,
    step: u8,
    fallbacks: &mut Vec<SignFallback>,
) -> Result<f64> {
    if (psi < 0.0) == want_negative && psi != 0.0 {
        Ok(psi)
    } else {
        fallbacks.push(SignFallback { step, r });
        psi_normal_scale(r, sigma)
    }
}

/// The full HDR plug-in bandwidth selector.
pub fn hdr_bandwidth(sample: &Sample, tau: f64, config: &SelectorConfig) -> Result<SelectorReport> {
    // Step 1: inputs.
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidTau(tau).at_step(1));
    }
    let n = sample.n();
    if n < MIN_SELECTOR_N {
        return Err(
            Error::InvalidSample(format!("selector needs n >= {MIN_SELECTOR_N}, got {n}"))
                .at_step(1),
        );
    }
    let center = sample.lower_median();
    let data = sample.recentered(center);

    // Step 2: robust scale.
    let sigma = robust_scale(&data).map_err(|e| e.at_step(2))?;

    // Step 3: normal-scale starts.
    let mut psi_ns = BTreeMap::new();
    for r in [8usize, 10, 12] {
        psi_ns.insert(r, psi_normal_scale(r, sigma).map_err(|e| e.at_step(3))?);
    }

    let literal = config.paper_literal_constants;
    let sums = PairSums::new(&data, config.binned).map_err(|e| e.at_step(4))?;

    // Step 4: stage-one functional bandwidths and kernel estimates.
    let mut g_stage1 = BTreeMap::new();
    let mut psi_stage1 = BTreeMap::new();
    for r in [6usize, 8, 10] {
        let g = optimal_functional_bandwidth(r, psi_ns[&(r + 2)], n, literal)
            .map_err(|e| e.at_step(4))?;
        g_stage1.insert(r, g);
        psi_stage1.insert(r, psi_from_sums(&sums, r, g).map_err(|e| e.at_step(4))?);
    }

    // Step 5: stage-two, driven by the stage-one estimates.
    let mut fallbacks = Vec::new();
    let mut g_stage2 = BTreeMap::new();
    let mut psi_stage2 = BTreeMap::new();
    for r in [4usize, 6, 8] {
        // estimating psi_r needs psi_{r+2}, whose sign is (-1)^{(r+2)/2}
        let want_negative = ((r + 2) / 2) % 2 == 1;
        let feed = sign_guard(
            psi_stage1[&(r + 2)],
            r + 2,
            want_negative,
            sigma,
            5,
            &mut fallbacks,
        )
        .map_err(|e| e.at_step(5))?;
        let g = optimal_functional_bandwidth(r, feed, n, literal).map_err(|e| e.at_step(5))?;
        g_stage2.insert(r, g);
        psi_stage2.insert(r, psi_from_sums(&sums, r, g).map_err(|e| e.at_step(5))?);
    }

    let psi_sign_pattern_ok = psi_stage2[&4] > 0.0
        && psi_stage2[&6] < 0.0
        && psi_stage2[&8] > 0.0
        && psi_stage1[&10] < 0.0;

    // Step 6: direct plug-in pilot bandwidths.
    let mut pilot = [0.0f64; 3];
    for (r, slot) in pilot.iter_mut().enumerate() {
        let feed_r = 2 * r + 4; // h_r consumes psi_{2r+4}
        let want_negative = (feed_r / 2) % 2 == 1;
        let feed = sign_guard(
            psi_stage2[&feed_r],
            feed_r,
            want_negative,
            sigma,
            6,
            &mut fallbacks,
        )
        .map_err(|e| e.at_step(6))?;
        *slot = plugin_derivative_bandwidth(r, feed, n).map_err(|e| e.at_step(6))?;
    }
    let [h0, h1, h2] = pilot;

    // Steps 7 and 8: pilot curves and level crossings.
    let h_ref = h0.max(h1).max(h2);
    let grid =
        EvaluationGrid::spanning(&data, h_ref, config.grid_points).map_err(|e| e.at_step(7))?;
    let grid = if config.binned {
        linear_bin(&data, &grid).map_err(|e| e.at_step(7))?
    } else {
        grid
    };
    let mut crossings = find_crossings(&data, h0, h1, h2, tau, &grid).map_err(|e| e.at_step(8))?;

    // Step 9: estimated coefficients.
    let coefficients = risk_coefficients(
        crossings.level,
        &crossings.derivative_pairs(),
        &kernel_constants(),
    )
    .map_err(|e| e.at_step(9))?;

    // Step 10: minimize the estimated asymptotic risk.
    let c_ns = h0 * (n as f64).powf(0.2);
    let minimum = minimize_ar(n, &coefficients, c_ns).map_err(|e| e.at_step(10))?;
    let bandwidth = minimum.c_opt * (n as f64).powf(-0.2);

    // report crossings in the original coordinates
    for c in crossings.crossings.iter_mut() {
        c.x += center;
    }

    Ok(SelectorReport {
        bandwidth,
        n,
        tau,
        sigma_hat: sigma,
        psi_normal_scale: psi_ns,
        g_stage1,
        psi_stage1,
        g_stage2,
        psi_stage2,
        pilot_bandwidths: pilot,
        diagnostics: SelectorDiagnostics {
            sign_fallbacks: fallbacks,
            psi_sign_pattern_ok,
            clamp_count: coefficients.clamp_count,
            interval_count: crossings.interval_count(),
            ar_multimodal: minimum.multimodal,
        },
        crossings,
        coefficients,
        c_opt_hat: minimum.c_opt,
    })
}

/// Outcome of the cross-validation search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LscvSelection {
    pub bandwidth: f64,
    /// The scan argmin sat on the search boundary; the reported bandwidth
    /// is the boundary solution.
    pub boundary: bool,
}

/// Least-squares cross-validation:
/// LSCV(h) = integral of fhat_h^2 - (2/n) sum_i fhat_{h,-i}(X_i),
/// computed through the closed-form Gaussian pair identities, minimized
/// over a log grid around the normal-reference bandwidth and refined by
/// golden section.
///
/// The pair sums here are always exact: binned counts turn same-bin pairs
/// into spurious duplicates, which sends the criterion to minus infinity
/// as h shrinks below the bin width.
pub fn lscv_bandwidth(sample: &Sample, _config: &SelectorConfig) -> Result<LscvSelection> {
    let n = sample.n();
    if n < 10 {
        return Err(Error::InvalidSample(format!("LSCV needs n >= 10, got {n}")));
    }
    let data = sample.recentered(sample.lower_median());
    let sigma = robust_scale(&data)?;
    let sums = PairSums::new(&data, false)?;
    let nf = n as f64;
    let phi0 = 1.0 / SQRT_2PI;
    let criterion = |h: f64| {
        let roughness = sums.gaussian_density_sum(std::f64::consts::SQRT_2 * h) / (nf * nf);
        let loo = (sums.gaussian_density_sum(h) - nf * phi0 / h) * 2.0 / (nf * (nf - 1.0));
        roughness - loo
    };
    let h_ns = (4.0 / (3.0 * nf)).powf(0.2) * sigma;
    let grid = log_grid(h_ns * 1e-2, h_ns * 3.0, 301);
    let values: Vec<f64> = grid.iter().map(|&h| criterion(h)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let boundary = best == 0 || best + 1 == grid.len();
    let (bandwidth, _) = if boundary {
        (grid[best], values[best])
    } else {
        golden_section_minimize(criterion, grid[best - 1], grid[best + 1], 1e-9)
    };
    Ok(LscvSelection {
        bandwidth,
        boundary,
    })
}

impl PairSums {
    /// sum_{i,j} phi_s(X_i - X_j) where phi_s is the N(0, s^2) density.
    /// Exact up to dropping pairs beyond nine standard deviations, whose
    /// terms sit below 2.6e-18; the values are sorted, so each row's
    /// window is contiguous.
    fn gaussian_density_sum(&self, s: f64) -> f64 {
        let cutoff = 9.0 * s;
        let mut total = self.n as f64 / SQRT_2PI;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = self.values[j] - self.values[i];
                if d > cutoff {
                    break;
                }
                let z = d / s;
                total += 2.0 * (-0.5 * z * z).exp() / SQRT_2PI;
            }
        }
        total / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::NormalMixture;
    use crate::risk::RiskCoefficients;
    use approx::assert_relative_eq;

    #[test]
    fn bandwidth_lands_near_the_oracle_rate_on_normal_data() {
        let m = NormalMixture::standard_normal();
        let n = 10_000;
        let s = m.sample(n, 2).unwrap();
        let report = hdr_bandwidth(&s, 0.5, &SelectorConfig::default()).unwrap();
        let rc = RiskCoefficients::from_oracle(&m.hdr_oracle(0.5).unwrap(), &kernel_constants())
            .unwrap();
        let c_oracle = crate::risk::minimize_ar(n, &rc, 1.0).unwrap().c_opt;
        let target = c_oracle * (n as f64).powf(-0.2);
        assert!(
            report.bandwidth > 0.5 * target && report.bandwidth < 2.0 * target,
            "selected {} vs oracle target {target}",
            report.bandwidth
        );
    }

    #[test]
    fn robust_scale_picks_the_iqr_branch_on_outliers() {
        let s = Sample::new(vec![-100.0, -1.0, 0.0, 1.0, 100.0]).unwrap();
        let scale = robust_scale(&s).unwrap();
        assert_relative_eq!(scale, 2.0 / 1.349, max_relative = 1e-14);
    }

    #[test]
    fn robust_scale_is_affine_equivariant() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(500, 3).unwrap();
        let base = robust_scale(&s).unwrap();
        let scaled = Sample::new(s.values().iter().map(|v| 4.0 + 2.0 * v).collect()).unwrap();
        assert_relative_eq!(
            robust_scale(&scaled).unwrap(),
            2.0 * base,
            max_relative = 1e-12
        );
    }

    #[test]
    fn robust_scale_near_one_for_standard_normal() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(10_000, 17).unwrap();
        let scale = robust_scale(&s).unwrap();
        assert!((scale - 1.0).abs() < 0.05, "scale = {scale}");
    }

    #[test]
    fn robust_scale_rejects_degenerate_input() {
        assert!(robust_scale(&Sample::new(vec![1.0, 1.0, 1.0]).unwrap()).is_err());
        assert!(robust_scale(&Sample::new(vec![2.0; 8]).unwrap()).is_err());
    }

    #[test]
    fn normal_scale_psi_closed_forms() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert_relative_eq!(
            psi_normal_scale(8, 1.0).unwrap(),
            105.0 / (32.0 * sqrt_pi),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            psi_normal_scale(10, 1.0).unwrap(),
            -945.0 / (64.0 * sqrt_pi),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            psi_normal_scale(12, 2.0).unwrap(),
            10395.0 / (128.0 * sqrt_pi * 8192.0),
            max_relative = 1e-15
        );
        assert!(psi_normal_scale(7, 1.0).is_err());
        assert!(psi_normal_scale(14, 1.0).is_err());
    }

    #[test]
    fn psi_kernel_single_point_is_kernel_at_zero() {
        let s = Sample::new(vec![0.3]).unwrap();
        for r in [4usize, 6, 8, 10] {
            let got = psi_kernel_estimate(&s, r, 1.0, false).unwrap();
            assert_eq!(got, gaussian_derivative(r, 0.0).unwrap());
        }
        assert!(psi_kernel_estimate(&s, 0, 1.0, false).is_err());
        assert!(psi_kernel_estimate(&s, 4, 0.0, false).is_err());
    }

    #[test]
    fn psi_kernel_matches_brute_force() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(300, 8).unwrap();
        let g = 0.5;
        for r in [4usize, 6] {
            // brute force O(n^2), straight from the definition
            let n = s.n() as f64;
            let mut total = 0.0;
            for &xi in s.values() {
                for &xj in s.values() {
                    total += gaussian_derivative(r, (xi - xj) / g).unwrap();
                }
            }
            let brute = total / (n * n * g.powi(r as i32 + 1));
            let exact = psi_kernel_estimate(&s, r, g, false).unwrap();
            assert_relative_eq!(exact, brute, max_relative = 1e-12);
            let binned = psi_kernel_estimate(&s, r, g, true).unwrap();
            assert_relative_eq!(binned, brute, max_relative = 1e-3);
        }
    }

    #[test]
    fn functional_bandwidth_worked_example() {
        let psi8 = psi_normal_scale(8, 1.0).unwrap();
        let exact = optimal_functional_bandwidth(6, psi8, 1000, false).unwrap();
        assert_relative_eq!(exact, 0.5711230122936775, max_relative = 1e-12);
        let literal = optimal_functional_bandwidth(6, psi8, 1000, true).unwrap();
        assert_relative_eq!(literal, 0.6325181406181341, max_relative = 1e-12);
        // wrong sign rejected
        assert!(optimal_functional_bandwidth(6, -psi8, 1000, false).is_err());
        // g shrinks with n
        let g_big = optimal_functional_bandwidth(6, psi8, 100_000, false).unwrap();
        assert!(g_big < exact);
    }

    #[test]
    fn pilot_bandwidth_worked_examples() {
        // normal-truth psi_4 reduces h0 to the classical normal reference
        let psi4 = 3.0 / (8.0 * std::f64::consts::PI.sqrt());
        let h0 = plugin_derivative_bandwidth(0, psi4, 1000).unwrap();
        assert_relative_eq!(h0, (4.0f64 / 3000.0).powf(0.2), max_relative = 1e-14);
        assert_relative_eq!(h0, 0.2660649994261972, max_relative = 1e-12);

        let psi6 = -15.0 / (16.0 * std::f64::consts::PI.sqrt());
        let h1 = plugin_derivative_bandwidth(1, psi6, 1000).unwrap();
        assert_relative_eq!(h1, 0.3610640787640995, max_relative = 1e-12);

        // n-scaling exponent
        let h0_large = plugin_derivative_bandwidth(0, psi4, 100_000).unwrap();
        assert_relative_eq!(h0_large / h0, (100.0f64).powf(-0.2), max_relative = 1e-12);

        assert!(plugin_derivative_bandwidth(0, -psi4, 1000).is_err());
        assert!(plugin_derivative_bandwidth(3, psi4, 1000).is_err());
    }

    #[test]
    fn selector_runs_and_reports_on_normal_data() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(2000, 42).unwrap();
        let report = hdr_bandwidth(&s, 0.5, &SelectorConfig::default()).unwrap();
        assert!(report.bandwidth > 0.05 && report.bandwidth < 2.0);
        assert_eq!(report.diagnostics.interval_count, 1);
        assert!(report.diagnostics.psi_sign_pattern_ok);
        assert!(report.diagnostics.sign_fallbacks.is_empty());
        assert_eq!(report.crossings.crossings.len(), 2);
        // report is valid JSON with the audit fields present
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(json["psi_stage2"]["4"].is_number());
        assert!(json["coefficients"]["b1"].is_array());
    }

    #[test]
    fn selector_is_deterministic() {
        let m = NormalMixture::preset("mw6").unwrap();
        let s = m.sample(800, 4).unwrap();
        let a = hdr_bandwidth(&s, 0.2, &SelectorConfig::default()).unwrap();
        let b = hdr_bandwidth(&s, 0.2, &SelectorConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn selector_rejects_bad_inputs_with_step_numbers() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(30, 1).unwrap();
        match hdr_bandwidth(&s, 0.5, &SelectorConfig::default()) {
            Err(e) => assert_eq!(e.step(), Some(1)),
            Ok(_) => panic!("expected a step-1 failure"),
        }
        let s = m.sample(100, 1).unwrap();
        match hdr_bandwidth(&s, 1.5, &SelectorConfig::default()) {
            Err(e) => assert_eq!(e.step(), Some(1)),
            Ok(_) => panic!("expected a step-1 failure"),
        }
    }

    #[test]
    fn lscv_two_point_closed_form() {
        // criterion(h) = (1/4)[2 phi_{sqrt2 h}(0) + 2 phi_{sqrt2 h}(2a)] - 2 phi_h(2a)
        let a = 0.7;
        let s = Sample::new(vec![-a, a]).unwrap();
        let sums = PairSums::new(&s, false).unwrap();
        for h in [0.3, 0.8, 1.6] {
            let s2 = std::f64::consts::SQRT_2 * h;
            let phi = |u: f64, sd: f64| (-0.5 * (u / sd) * (u / sd)).exp() / (SQRT_2PI * sd);
            let want = 0.25 * (2.0 * phi(0.0, s2) + 2.0 * phi(2.0 * a, s2)) - 2.0 * phi(2.0 * a, h);
            let rough = sums.gaussian_density_sum(s2) / 4.0;
            let loo = (sums.gaussian_density_sum(h) - 2.0 * phi(0.0, h)) * 2.0 / (2.0 * 1.0);
            let got = rough - loo;
            assert_relative_eq!(got, want, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn lscv_lands_near_the_normal_reference_on_normal_data() {
        let m = NormalMixture::standard_normal();
        let s = m.sample(1000, 12).unwrap();
        let r = lscv_bandwidth(&s, &SelectorConfig::default()).unwrap();
        assert!(!r.boundary);
        assert!(
            r.bandwidth > 0.5 * 0.266 && r.bandwidth < 2.0 * 0.266,
            "h = {}",
            r.bandwidth
        );
    }
}

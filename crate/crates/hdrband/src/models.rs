//! Analytic normal-mixture reference densities with exact pdfs,
//! derivatives, CDFs, deterministic sampling and exact HDR oracles.
//!
//! These are the ground truths the simulation harness measures against, so
//! everything here is computed from closed forms or CDF differences rather
//! than from the estimators under test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdr::IntervalUnion;
use crate::kernel::gaussian_derivative;
use crate::{normal, rng};

/// One mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(rename = "w")]
    pub weight: f64,
    #[serde(rename = "mu")]
    pub mean: f64,
    pub sd: f64,
}

/// A finite mixture of normal densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct NormalMixture {
    components: Vec<Component>,
}

/// Wire form: `{"components":[{"w":..,"mu":..,"sd":..}]}`.
#[derive(Serialize, Deserialize)]
struct MixtureSpec {
    components: Vec<Component>,
}

impl TryFrom<MixtureSpec> for NormalMixture {
    type Error = Error;
    fn try_from(spec: MixtureSpec) -> Result<Self> {
        NormalMixture::new(spec.components)
    }
}

impl From<NormalMixture> for MixtureSpec {
    fn from(m: NormalMixture) -> MixtureSpec {
        MixtureSpec {
            components: m.components,
        }
    }
}

/// Tolerance on the weight sum.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A crossing of the density with the HDR level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleCrossing {
    pub x: f64,
    pub slope: f64,
    pub curvature: f64,
}

/// Exact-to-tolerance HDR of an analytic mixture: the level, the region and
/// the level crossings with their first two density derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HdrOracle {
    pub tau: f64,
    pub level: f64,
    pub region: IntervalUnion,
    pub crossings: Vec<OracleCrossing>,
}

impl NormalMixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMixture("no components".into()));
        }
        let mut sum = 0.0;
        for c in &components {
            if !(c.weight.is_finite() && c.mean.is_finite() && c.sd.is_finite()) {
                return Err(Error::InvalidMixture("non-finite parameter".into()));
            }
            if c.weight <= 0.0 {
                return Err(Error::InvalidMixture(format!(
                    "weight {} not positive",
                    c.weight
                )));
            }
            if c.sd <= 0.0 {
                return Err(Error::InvalidMixture(format!("sd {} not positive", c.sd)));
            }
            sum += c.weight;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMixture(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(NormalMixture { components })
    }

    /// Shorthand for a single N(mean, sd^2) component.
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        NormalMixture::new(vec![Component {
            weight: 1.0,
            mean,
            sd,
        }])
    }

    pub fn standard_normal() -> Self {
        NormalMixture::normal(0.0, 1.0).unwrap()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Named reference densities: `normal` and the ten benchmark mixtures
    /// `mw1`..`mw10` of Marron & Wand (1992).
    pub fn preset(name: &str) -> Option<Self> {
        let comps: Vec<(f64, f64, f64)> = match name {
            "normal" | "mw1" => vec![(1.0, 0.0, 1.0)],
            "mw2" => vec![
                (0.2, 0.0, 1.0),
                (0.2, 0.5, 2.0 / 3.0),
                (0.6, 13.0 / 12.0, 5.0 / 9.0),
            ],
            "mw3" => (0..8)
                .map(|l| {
                    let s = (2.0f64 / 3.0).powi(l);
                    (0.125, 3.0 * (s - 1.0), s)
                })
                .collect(),
            "mw4" => vec![(2.0 / 3.0, 0.0, 1.0), (1.0 / 3.0, 0.0, 0.1)],
            "mw5" => vec![(0.1, 0.0, 1.0), (0.9, 0.0, 0.1)],
            "mw6" => vec![(0.5, -1.0, 2.0 / 3.0), (0.5, 1.0, 2.0 / 3.0)],
            "mw7" => vec![(0.5, -1.5, 0.5), (0.5, 1.5, 0.5)],
            "mw8" => vec![(0.75, 0.0, 1.0), (0.25, 1.5, 1.0 / 3.0)],
            "mw9" => vec![(0.45, -1.2, 0.6), (0.45, 1.2, 0.6), (0.1, 0.0, 0.25)],
            "mw10" => {
                let mut v = vec![(0.5, 0.0, 1.0)];
                v.extend((0..5).map(|l| (0.1, l as f64 / 2.0 - 1.0, 0.1)));
                v
            }
            _ => return None,
        };
        let components = comps
            .into_iter()
            .map(|(weight, mean, sd)| Component { weight, mean, sd })
            .collect();
        Some(NormalMixture::new(components).expect("preset parameters are valid"))
    }

    /// All preset names accepted by [`NormalMixture::preset`].
    pub fn preset_names() -> &'static [&'static str] {
        &[
            "normal", "mw1", "mw2", "mw3", "mw4", "mw5", "mw6", "mw7", "mw8", "mw9", "mw10",
        ]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidMixture(format!("JSON parse failure: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mixture serializes")
    }

    /// f(x), f'(x) or f''(x) in closed form; `order` must be 0, 1 or 2.
    pub fn eval(&self, order: usize, x: f64) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder { order, limit: 2 });
        }
        let mut s = 0.0;
        for c in &self.components {
            let z = (x - c.mean) / c.sd;
            s += c.weight / c.sd.powi(order as i32 + 1) * gaussian_derivative(order, z)?;
        }
        Ok(s)
    }

    /// Exact mixture CDF via component normal CDFs.
    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal::cdf((x - c.mean) / c.sd))
            .sum()
    }

    /// Probability of `[a, b]` under the mixture.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        (self.cdf(b) - self.cdf(a)).max(0.0)
    }

    /// `n` i.i.d. draws, sorted; draw `k` depends only on `(seed, k)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<crate::density::Sample> {
        if n == 0 {
            return Err(Error::InvalidSample("requested a sample of size 0".into()));
        }
        let pick_seed = rng::derive_seed(seed, 1);
        let normal_seed = rng::derive_seed(seed, 2);
        let mut values = Vec::with_capacity(n);
        for k in 0..n as u64 {
            let u = rng::uniform_open01(pick_seed, k);
            let c = self.pick_component(u);
            let z = rng::standard_normal(normal_seed, k);
            values.push(c.mean + c.sd * z);
        }
        crate::density::Sample::new(values)
    }

    fn pick_component(&self, u: f64) -> &Component {
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weight;
            if u <= acc {
                return c;
            }
        }
        self.components.last().unwrap()
    }

    /// An interval certain to contain all but ~1e-18 of the mass.
    pub fn support(&self) -> (f64, f64) {
        let lo = self
            .components
            .iter()
            .map(|c| c.mean - 9.0 * c.sd)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .components
            .iter()
            .map(|c| c.mean + 9.0 * c.sd)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Upper bound on the density (attained only if all modes coincide).
    fn density_bound(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight / (c.sd * normal::SQRT_2PI))
            .sum()
    }

    /// Critical points of the density (zeros of f'), in increasing order.
    ///
    /// Scans f' at a resolution fine enough to separate the extrema of the
    /// narrowest component, then refines each sign change by bisection.
    /// Every level-crossing question reduces to monotone segments between
    /// these points, so no sliver of the density can be missed.
    fn critical_points(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        let min_sd = self
            .components
            .iter()
            .map(|c| c.sd)
            .fold(f64::INFINITY, f64::min);
        let step = (min_sd / 8.0).max((hi - lo) / (1 << 18) as f64);
        let count = ((hi - lo) / step).ceil() as usize + 1;
        let fp = |x: f64| self.eval(1, x).unwrap();
        let mut crits = Vec::new();
        let mut prev_x = lo;
        let mut prev_v = fp(lo);
        for i in 1..=count {
            let x = lo + (hi - lo) * i as f64 / count as f64;
            let v = fp(x);
            if prev_v == 0.0 {
                crits.push(prev_x);
            } else if (prev_v < 0.0) != (v < 0.0) {
                let (mut a, mut b) = (prev_x, x);
                let mut fa = prev_v;
                for _ in 0..90 {
                    let mid = 0.5 * (a + b);
                    let fm = fp(mid);
                    if (fm < 0.0) == (fa < 0.0) {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                crits.push(0.5 * (a + b));
            }
            prev_x = x;
            prev_v = v;
        }
        crits
    }

    /// Crossings of f with the horizontal line at `y`, in increasing order.
    /// Exact given the critical points: f is monotone between consecutive
    /// ones, so each segment holds at most one crossing.
    fn level_crossings(&self, y: f64, crits: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.support();
        let mut breaks = Vec::with_capacity(crits.len() + 2);
        breaks.push(lo);
        breaks.extend_from_slice(crits);
        breaks.push(hi);
        let mut crossings = Vec::new();
        for w in breaks.windows(2) {
            let fp_ = self.eval(0, w[0]).unwrap() - y;
            let fq = self.eval(0, w[1]).unwrap() - y;
            if (fp_ < 0.0) != (fq < 0.0) {
                crossings.push(self.refine_crossing(y, w[0], w[1]));
            }
        }
        crossings
    }

    fn refine_crossing(&self, y: f64, mut a: f64, mut b: f64) -> f64 {
        let f = |x: f64| self.eval(0, x).unwrap() - y;
        let mut fa = f(a);
        let mut x = a + (b - a) * fa.abs() / (fa.abs() + f(b).abs()).max(f64::MIN_POSITIVE);
        for _ in 0..100 {
            let fx = f(x);
            if fx == 0.0 {
                break;
            }
            if (fx < 0.0) == (fa < 0.0) {
                a = x;
                fa = fx;
            } else {
                b = x;
            }
            let d = self.eval(1, x).unwrap();
            let newton = x - fx / d;
            let next = if d != 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if (next - x).abs() <= 1e-15 * (x.abs() + 1.0) {
                x = next;
                break;
            }
            x = next;
        }
        x
    }

    /// Mass of `{f >= y}` and the region itself.
    fn mass_above(&self, y: f64, crits: &[f64]) -> (f64, Vec<(f64, f64)>) {
        let crossings = self.level_crossings(y, crits);
        // density is below y at both infinities, so crossings pair up
        let mut intervals = Vec::with_capacity(crossings.len() / 2);
        let mut mass = 0.0;
        for pair in crossings.chunks(2) {
            if pair.len() == 2 {
                mass += self.interval_mass(pair[0], pair[1]);
                intervals.push((pair[0], pair[1]));
            }
        }
        (mass, intervals)
    }

    /// Mass of the super-level set `{f >= y}`; test aid.
    #[cfg(test)]
    pub(crate) fn mass_above_level(&self, y: f64) -> f64 {
        self.mass_above(y, &self.critical_points()).0
    }

    /// The exact highest-density region for coverage `1 - tau`.
    ///
    /// Bisection on the level until the captured mass matches `1 - tau`
    /// to 1e-10; rejects levels at which the crossing structure is not
    /// stable (tangencies, vanishing slopes).
    pub fn hdr_oracle(&self, tau: f64) -> Result<HdrOracle> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidTau(tau));
        }
        let crits = self.critical_points();
        let target = 1.0 - tau;
        let mut y_lo = 0.0;
        let mut y_hi = self.density_bound();
        let mut level = 0.5 * y_hi;
        let mut converged = false;
        for _ in 0..200 {
            let (mass, _) = self.mass_above(level, &crits);
            if (mass - target).abs() < 1e-10 {
                converged = true;
                break;
            }
            if mass > target {
                y_lo = level;
            } else {
                y_hi = level;
            }
            level = 0.5 * (y_lo + y_hi);
        }
        if !converged {
            return Err(Error::DegenerateLevel {
                tau,
                x: f64::NAN,
                slope: 0.0,
            });
        }
        // a level this close to a critical value changes its crossing count
        // under perturbation: reject as degenerate
        let scale = self.density_bound();
        for &e in &crits {
            let fe = self.eval(0, e)?;
            if (fe - level).abs() < 1e-7 * scale {
                return Err(Error::DegenerateLevel {
                    tau,
                    x: e,
                    slope: self.eval(1, e)?,
                });
            }
        }
        let (_, intervals) = self.mass_above(level, &crits);
        if intervals.is_empty() {
            return Err(Error::DegenerateLevel {
                tau,
                x: f64::NAN,
                slope: 0.0,
            });
        }
        let mut crossings = Vec::with_capacity(2 * intervals.len());
        for &(a, b) in &intervals {
            for (j, x) in [a, b].into_iter().enumerate() {
                let slope = self.eval(1, x)?;
                if slope.abs() < 1e-6 {
                    return Err(Error::DegenerateLevel { tau, x, slope });
                }
                // left endpoints rise through the level, right endpoints fall
                if (j == 0) != (slope > 0.0) {
                    return Err(Error::DegenerateLevel { tau, x, slope });
                }
                crossings.push(OracleCrossing {
                    x,
                    slope,
                    curvature: self.eval(2, x)?,
                });
            }
        }
        Ok(HdrOracle {
            tau,
            level,
            region: IntervalUnion::from_intervals(intervals)?,
            crossings,
        })
    }
}

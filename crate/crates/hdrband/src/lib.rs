//! Kernel estimation of highest-density regions (HDRs) in one dimension.
//!
//! A highest-density region is the smallest set capturing a given share of
//! a distribution's mass: `{x : f(x) >= f_tau}`, where the threshold
//! `f_tau` is chosen so that the region holds mass `1 - tau`. Estimating
//! one from data means running a kernel density estimate through a level
//! search, and the quality of the result is governed almost entirely by
//! the bandwidth.
//!
//! This crate provides:
//!
//! - [`models`]: analytic normal-mixture ground truths (the usual ten
//!   benchmark shapes plus user-defined mixtures) with exact densities,
//!   CDFs, deterministic sampling and exact HDR oracles;
//! - [`kernel`]: Gaussian kernel derivatives and constants;
//! - [`density`]: exact and linear-binned kernel density and derivative
//!   estimation on uniform grids;
//! - [`hdr`]: level computation, region extraction, crossing detection and
//!   the probability-weighted symmetric-difference error;
//! - [`risk`]: the per-crossing risk coefficient algebra, the asymptotic
//!   risk curves in `h` and in the rate constant `c`, their minimization,
//!   and a reproducible Monte Carlo risk harness;
//! - [`selector`]: the HDR-tailored plug-in bandwidth selector and a
//!   least-squares cross-validation baseline.
//!
//! ```
//! use hdrband::models::NormalMixture;
//! use hdrband::selector::{hdr_bandwidth, SelectorConfig};
//!
//! let truth = NormalMixture::preset("mw4").unwrap();
//! let sample = truth.sample(1000, 7).unwrap();
//! let report = hdr_bandwidth(&sample, 0.2, &SelectorConfig::default()).unwrap();
//! assert!(report.bandwidth > 0.0);
//! ```

// Transcribed rational-approximation coefficients and frozen oracle values
// keep every published digit.
#![allow(clippy::excessive_precision)]
// `!(x > 0.0)` rejects NaN; the suggested `x <= 0.0` would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_is_multiple_of)]

pub mod density;
mod error;
pub mod hdr;
pub mod kernel;
pub mod models;
pub mod normal;
pub mod optim;
pub mod risk;
pub mod rng;
pub mod selector;
pub mod stats;

pub use error::{Error, Result};

// Run every fenced Rust snippet in the guide as a doctest, so the book can
// never drift from the library API.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }
    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(Mixtures, "../../../book/src/mixtures.md");
    chapter!(DensityEstimation, "../../../book/src/density-estimation.md");
    chapter!(
        HighestDensityRegions,
        "../../../book/src/highest-density-regions.md"
    );
    chapter!(AsymptoticRisk, "../../../book/src/asymptotic-risk.md");
    chapter!(
        BandwidthSelection,
        "../../../book/src/bandwidth-selection.md"
    );
    chapter!(Simulation, "../../../book/src/simulation.md");
    chapter!(CommandLine, "../../../book/src/cli.md");
}

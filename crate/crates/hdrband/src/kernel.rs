//! The Gaussian kernel, its derivatives and the constants every bandwidth
//! formula needs: R(K), mu_2(K) and the derivative values at zero.

use crate::error::{Error, Result};
use crate::normal::SQRT_2PI;

/// Highest kernel derivative order the estimation chain ever requests.
pub const MAX_DERIVATIVE_ORDER: usize = 12;

/// He_r(0) for the probabilists' Hermite polynomials, even r = 0, 2, ..., 12.
/// He_r(0) = (-1)^(r/2) (r-1)!! and vanishes for odd r.
const HERMITE_AT_ZERO: [f64; 7] = [1.0, -1.0, 3.0, -15.0, 105.0, -945.0, 10395.0];

/// r-th derivative of the standard normal density.
///
/// Uses phi^(r)(x) = (-1)^r He_r(x) phi(x) with the three-term recurrence
/// He_{k+1}(x) = x He_k(x) - k He_{k-1}(x); exact closed form, O(r) work.
pub fn gaussian_derivative(r: usize, x: f64) -> Result<f64> {
    if r > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedOrder {
            order: r,
            limit: MAX_DERIVATIVE_ORDER,
        });
    }
    let phi = (-0.5 * x * x).exp() / SQRT_2PI;
    let mut prev = 1.0; // He_0
    if r == 0 {
        return Ok(phi);
    }
    let mut cur = x; // He_1
    for k in 1..r {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * cur * phi)
}

/// Kernel constants for the standard normal kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstants {
    /// R(K) = integral of K^2; equals 1/(2 sqrt(pi)) for the Gaussian.
    pub roughness: f64,
    /// mu_2(K) = second moment; equals 1 for the unit-variance Gaussian.
    pub second_moment: f64,
}

impl KernelConstants {
    /// phi^(r)(0) for even r up to 12; zero for odd r.
    pub fn derivative_at_zero(&self, r: usize) -> Result<f64> {
        if r > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder {
                order: r,
                limit: MAX_DERIVATIVE_ORDER,
            });
        }
        if r % 2 == 1 {
            return Ok(0.0);
        }
        Ok(HERMITE_AT_ZERO[r / 2] / SQRT_2PI)
    }
}

/// Constants of the Gaussian kernel used throughout the crate.
pub fn kernel_constants() -> KernelConstants {
    KernelConstants {
        roughness: 0.5 / std::f64::consts::PI.sqrt(),
        second_moment: 1.0,
    }
}

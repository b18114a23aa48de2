//! Complete elliptic integrals by the arithmetic-geometric mean.
//!
//! Parameter convention: `K(m) = ∫₀^{π/2} dθ / √(1 − m sin²θ)`.
//!
//! Besides `K` and `E` the loop field formulas need the combinations
//!
//! ```text
//! D(m) = (1 − m/2) K − E
//! F(m) = (2 − m) E − 2 (1 − m) K
//! ```
//!
//! which vanish like `m²` and lose every significant digit when formed from
//! `K` and `E` near `m = 0`. With the AGM sequence `c₁ = (1 − √(1−m))/2`,
//! `c_{n+1} = c_n² / (4 a_{n+1})` and `S = Σ_{n≥1} 2^{n−1} c_n²` both are
//! available without cancellation: `D = K S` and `F = K (m²/2 − (2 − m) S)`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const MAX_ITER: usize = 40;

/// Public entry points refuse parameters closer than this to `m = 1`.
pub const NEAR_SINGULAR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticKernels {
    pub k: f64,
    pub e: f64,
    /// `(1 − m/2) K − E`
    pub d: f64,
    /// `(2 − m) E − 2 (1 − m) K`
    pub f: f64,
}

/// Complete elliptic integrals `(K(m), E(m))` for `0 ≤ m < 1`.
pub fn complete_elliptic(m: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::EllipticDomain { m });
    }
    if 1.0 - m < NEAR_SINGULAR {
        return Err(Error::EllipticNearSingular { m });
    }
    let r = kernels(m, 1.0 - m);
    Ok((r.k, r.e))
}

/// AGM evaluation taking both `m` and the complementary parameter `mc = 1 − m`,
/// so callers that know `mc` directly keep full relative precision near `m = 1`.
/// Requires `0 ≤ m`, `0 < mc`; no near-singularity guard.
pub(crate) fn kernels(m: f64, mc: f64) -> EllipticKernels {
    debug_assert!(m >= 0.0 && mc > 0.0);
    let root_mc = mc.sqrt();
    let mut a = 1.0;
    let mut b = root_mc;
    // c₁ = (1 − √mc)/2 without subtracting nearly equal numbers
    let mut c = m / (2.0 * (1.0 + root_mc));
    let mut weight = 1.0;
    let mut s = 0.0;
    for _ in 0..MAX_ITER {
        s += weight * c * c;
        let a_next = 0.5 * (a + b);
        if c <= f64::EPSILON * a_next {
            a = a_next;
            break;
        }
        b = (a * b).sqrt();
        a = a_next;
        c = c * c / (4.0 * 0.5 * (a + b));
        weight *= 2.0;
    }
    let k = FRAC_PI_2 / a;
    let d = k * s;
    let e = k * (1.0 - 0.5 * m - s);
    let f = k * (0.5 * m * m - (2.0 - m) * s);
    EllipticKernels { k, e, d, f }
}

//! Covering-number, rate-function, and generalization-bound calculators.
//!
//! The graphon-signal space is covered by `2^(k^2)` balls of radius `eps`
//! with `k = ceil(2^(9c/(4 eps^2)))`. Everything downstream works in log2
//! space: `k` overflows any machine float already for moderate `eps`, and the
//! log2 of the covering number itself saturates to infinity for tiny `eps`,
//! which the bisection for the inverse rate tolerates.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default exponent constant `9/4` in the per-axis ball count; `2` is the
/// common tighter alternative.
pub const DEFAULT_COVERING_EXPONENT: f64 = 2.25;

/// Bisection bracket and tolerance for the inverse rate function.
const XI_INV_LO: f64 = 1e-6;
const XI_INV_HI: f64 = 10.0;
const XI_INV_TOL: f64 = 1e-9;

/// Ball count per covering axis, `k = ceil(2^(exponent * c / eps^2))`:
/// the exact integer when it fits a float, otherwise its log2.
fn covering_k(epsilon: f64, c: f64, exponent: f64) -> Result<CoveringK> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Invalid(format!("epsilon {epsilon} must be positive")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Invalid(format!("c {c} must be positive")));
    }
    let e = exponent * c / (epsilon * epsilon);
    if e <= 52.0 {
        Ok(CoveringK::Exact(2f64.powf(e).ceil()))
    } else {
        // ceil(2^e) = 2^e up to relative error 2^-e; negligible here.
        Ok(CoveringK::Log2(e))
    }
}

enum CoveringK {
    Exact(f64),
    Log2(f64),
}

/// `log2` of the per-axis ball count `k`.
pub fn covering_k_log2_with_exponent(epsilon: f64, c: f64, exponent: f64) -> Result<f64> {
    Ok(match covering_k(epsilon, c, exponent)? {
        CoveringK::Exact(k) => k.log2(),
        CoveringK::Log2(e) => e,
    })
}

/// `log2 kappa(eps) = k^2`: the covering number of the graphon-signal space
/// in log2, with the main-text constant.
pub fn covering_number_log2(epsilon: f64, c: f64) -> Result<f64> {
    covering_number_log2_with_exponent(epsilon, c, DEFAULT_COVERING_EXPONENT)
}

pub fn covering_number_log2_with_exponent(epsilon: f64, c: f64, exponent: f64) -> Result<f64> {
    Ok(match covering_k(epsilon, c, exponent)? {
        CoveringK::Exact(k) => k * k,
        // k^2 = 2^(2 log2 k); saturates to +inf for astronomically large k.
        CoveringK::Log2(e) => 2f64.powf(2.0 * e),
    })
}

/// `log2` of the rate function `xi(eps) = kappa(eps)^2 ln(kappa(eps)) / eps^2`
/// (natural log inside; the base is absorbed by `c`). Strictly decreasing in
/// `eps`; may be `+inf` for tiny `eps`.
pub fn xi(epsilon: f64, c: f64) -> Result<f64> {
    xi_with_exponent(epsilon, c, DEFAULT_COVERING_EXPONENT)
}

pub fn xi_with_exponent(epsilon: f64, c: f64, exponent: f64) -> Result<f64> {
    let kappa_log2 = covering_number_log2_with_exponent(epsilon, c, exponent)?;
    if kappa_log2.is_infinite() {
        return Ok(f64::INFINITY);
    }
    // ln kappa = ln2 * log2 kappa, so log2(ln kappa) = log2(log2 kappa) + log2(ln 2).
    let ln_kappa_log2 = kappa_log2.log2() + std::f64::consts::LN_2.log2();
    Ok(2.0 * kappa_log2 + ln_kappa_log2 - 2.0 * epsilon.log2())
}

/// Inverse of [`xi`] in log2 space: the `eps` with `xi(eps) = target_log2`,
/// found by bisection on `[1e-6, 10]` to `1e-9` in `eps`. Targets below the
/// image are rejected.
pub fn xi_inverse(target_log2: f64, c: f64) -> Result<f64> {
    xi_inverse_with_exponent(target_log2, c, DEFAULT_COVERING_EXPONENT)
}

pub fn xi_inverse_with_exponent(target_log2: f64, c: f64, exponent: f64) -> Result<f64> {
    if !target_log2.is_finite() {
        return Err(Error::TargetOutOfRange(format!(
            "target log2 {target_log2} is not finite"
        )));
    }
    let at_hi = xi_with_exponent(XI_INV_HI, c, exponent)?;
    if target_log2 < at_hi {
        return Err(Error::TargetOutOfRange(format!(
            "target log2 {target_log2} lies below xi({XI_INV_HI}) = {at_hi}"
        )));
    }
    let mut lo = XI_INV_LO;
    let mut hi = XI_INV_HI;
    while hi - lo > XI_INV_TOL {
        let mid = 0.5 * (lo + hi);
        if xi_with_exponent(mid, c, exponent)? > target_log2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inputs for the generalization-bound calculator.
#[derive(Debug, Clone, Serialize)]
pub struct BoundQuery {
    /// Radius used by the covering-number side computations.
    pub epsilon: f64,
    /// Covering exponent multiplier, `> 1`.
    pub c: f64,
    /// Signal bound.
    pub r: f64,
    /// Training sample count (may be huge; kept as a float).
    pub sample_count: f64,
    /// Number of classes.
    pub class_count: f64,
    /// Product Lipschitz constant of model and loss.
    pub lipschitz: f64,
    /// Loss at the origin.
    pub loss_at_zero: f64,
    /// Failure-probability parameter in `(0, 2]`.
    pub failure_probability: f64,
}

impl BoundQuery {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("epsilon", self.epsilon),
            ("r", self.r),
            ("sample_count", self.sample_count),
            ("class_count", self.class_count),
            ("failure_probability", self.failure_probability),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.c > 1.0) {
            return Err(Error::Invalid(format!("c must exceed 1, got {}", self.c)));
        }
        if self.lipschitz < 0.0 || self.loss_at_zero < 0.0 {
            return Err(Error::Invalid("lipschitz and loss_at_zero must be nonnegative".into()));
        }
        if self.failure_probability > 2.0 {
            return Err(Error::Invalid(
                "failure_probability above 2 makes log(2/p) negative".into(),
            ));
        }
        Ok(())
    }
}

/// Output of the generalization-bound calculator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizationBound {
    /// Radius `xi^-1(N / 2C)` the bound is evaluated at.
    pub epsilon_star: f64,
    /// Right-hand side of the risk-gap inequality.
    pub rhs: f64,
    /// Probability of the event on which the inequality holds,
    /// `1 - C p - 2 C^2 / N`.
    pub probability: f64,
}

/// Risk-gap bound
/// `xi^-1(N/2C) * (2L + (1/sqrt 2)(L + E(0,0))(1 + sqrt(ln(2/p))))`
/// together with the probability of the event it holds on.
pub fn generalization_bound(q: &BoundQuery) -> Result<GeneralizationBound> {
    q.validate()?;
    let n = q.sample_count;
    let c_classes = q.class_count;
    if n <= 2.0 * c_classes * c_classes {
        return Err(Error::Invalid(format!(
            "sample count {n} must exceed 2 C^2 = {}",
            2.0 * c_classes * c_classes
        )));
    }
    let target_log2 = (n / (2.0 * c_classes)).log2();
    let epsilon_star = xi_inverse(target_log2, q.c)?;
    let factor = 2.0 * q.lipschitz
        + std::f64::consts::FRAC_1_SQRT_2
            * (q.lipschitz + q.loss_at_zero)
            * (1.0 + (2.0 / q.failure_probability).ln().sqrt());
    Ok(GeneralizationBound {
        epsilon_star,
        rhs: epsilon_star * factor,
        probability: 1.0 - c_classes * q.failure_probability
            - 2.0 * c_classes * c_classes / n,
    })
}

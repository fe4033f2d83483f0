//! Steady-state operating criteria and admissible-set membership.
//!
//! All four criteria are evaluated at the coexistence steady state reached
//! under a constant control, so they are closed-form functions of (alpha,
//! d, s_in):
//!
//! - `p_out`: algal productivity d c* [g/(L day)],
//! - `p_in`: glucose feed rate d s_in [g/(L day)],
//! - `p_yield`: their dimensionless ratio c*/s_in,
//! - `p_theta`: the weighted net profit theta p_out - (1 - theta) p_in.
//!
//! The admissible sets carve out where the coexistence steady state exists:
//! `U` fixes the feed and leaves (alpha, d) free, `W` frees all three
//! controls, and `B(z)` boxes the feed below a cap z.

use crate::equilibria::psi_alpha_inv;
use crate::{Control, Error, ModelParams, Result};
use serde::{Deserialize, Serialize};

/// All steady-state criteria at one operating point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ObjectiveValues {
    pub p_out: f64,
    pub p_in: f64,
    pub p_yield: f64,
    /// Weight used for `p_theta`, when one was supplied.
    pub theta: Option<f64>,
    pub p_theta: Option<f64>,
}

/// Control region on which the coexistence steady state exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum AdmissibleSet {
    /// (alpha, d) free at a fixed feed; convex.
    #[serde(rename = "U_2D")]
    U2d { s_in: f64 },
    /// All of (alpha, d, s_in) free.
    #[serde(rename = "W_3D")]
    W3d,
    /// (alpha, d) admissible at the feed cap z, with s_in in (0, z).
    #[serde(rename = "B_BOX")]
    BBox { z: f64 },
}

/// Membership of (alpha, d) in U(s_in), on raw floats. Returns false on
/// any violation, including arguments outside the rate-law domains.
pub fn in_u_raw(p: &ModelParams, alpha: f64, d: f64, s_in: f64) -> bool {
    if !(alpha > 0.0 && alpha < 1.0 && d > 0.0 && s_in > 0.0 && s_in.is_finite()) {
        return false;
    }
    match psi_alpha_inv(p, alpha, d) {
        Ok(threshold) => threshold < s_in,
        Err(_) => false,
    }
}

/// Membership of an operating point in one of the admissible sets.
pub fn in_admissible(p: &ModelParams, u: &Control, set: &AdmissibleSet) -> bool {
    match *set {
        AdmissibleSet::U2d { s_in } => u.s_in == s_in && in_u_raw(p, u.alpha, u.d, s_in),
        AdmissibleSet::W3d => in_u_raw(p, u.alpha, u.d, u.s_in),
        AdmissibleSet::BBox { z } => {
            u.s_in > 0.0 && u.s_in < z && in_u_raw(p, u.alpha, u.d, z)
        }
    }
}

/// Feed margin s_in - psi_alpha_inv(alpha, d), positive exactly on the
/// admissible set. Errors identify why the point is inadmissible.
fn feed_margin(p: &ModelParams, u: &Control) -> Result<f64> {
    u.validate()?;
    let threshold = psi_alpha_inv(p, u.alpha, u.d).map_err(|e| {
        Error::Existence(format!("operating point outside the admissible set: {e}"))
    })?;
    if threshold >= u.s_in {
        return Err(Error::Existence(format!(
            "operating point outside the admissible set: need s_in > {threshold}, got {}",
            u.s_in
        )));
    }
    Ok(u.s_in - threshold)
}

/// Algal productivity d c* [g/(L day)] at the coexistence steady state,
/// via the closed form alpha beta gamma d (s_in - psi_alpha_inv(d)) /
/// mu_inv(d).
pub fn p_out(p: &ModelParams, u: &Control) -> Result<f64> {
    let margin = feed_margin(p, u)?;
    Ok(u.alpha * p.beta * p.gamma * u.d * margin / p.mu_inv(u.d)?)
}

/// Glucose feed rate d s_in [g/(L day)].
pub fn p_in(u: &Control) -> Result<f64> {
    u.validate()?;
    Ok(u.d * u.s_in)
}

/// Dimensionless yield p_out / p_in = c*/s_in.
pub fn p_yield(p: &ModelParams, u: &Control) -> Result<f64> {
    let margin = feed_margin(p, u)?;
    Ok(u.alpha * p.beta * p.gamma * margin / (u.s_in * p.mu_inv(u.d)?))
}

/// Weighted net profit theta p_out - (1 - theta) p_in [g/(L day)].
pub fn p_theta(p: &ModelParams, u: &Control, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(theta * p_out(p, u)? - (1.0 - theta) * p_in(u)?)
}

/// All criteria at once; `theta` is optional because the net profit needs
/// a weight.
pub fn evaluate(p: &ModelParams, u: &Control, theta: Option<f64>) -> Result<ObjectiveValues> {
    let out = p_out(p, u)?;
    let inflow = p_in(u)?;
    let net = theta.map(|t| check_theta(t).map(|_| t * out - (1.0 - t) * inflow)).transpose()?;
    Ok(ObjectiveValues {
        p_out: out,
        p_in: inflow,
        p_yield: out / inflow,
        theta,
        p_theta: net,
    })
}

/// Converts a glucose price and an algae price into the weight theta =
/// w_out / (w_in + w_out). Maximizing p_theta with this weight maximizes
/// the running profit w_out p_out - w_in p_in.
pub fn theta_from_prices(w_in: f64, w_out: f64) -> Result<f64> {
    if !(w_in > 0.0 && w_in.is_finite()) {
        return Err(Error::Domain {
            what: "w_in",
            value: w_in,
            bound: "price must be positive and finite".into(),
        });
    }
    if !(w_out > 0.0 && w_out.is_finite()) {
        return Err(Error::Domain {
            what: "w_out",
            value: w_out,
            bound: "price must be positive and finite".into(),
        });
    }
    Ok(w_out / (w_in + w_out))
}

/// Critical weight at which the net profit stops depending on the feed:
/// d p_theta / d s_in = (theta - theta0) (1 + alpha beta gamma /
/// mu_inv(d)) d. Always in (0, 1).
pub fn theta0(p: &ModelParams, alpha: f64, d: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            bound: "must lie in the open interval (0, 1)".into(),
        });
    }
    Ok(1.0 / (1.0 + alpha * p.beta * p.gamma / p.mu_inv(d)?))
}

/// Yield in the zero-dilution (batch) limit, alpha beta gamma / q_min.
/// Affine and increasing in alpha; the supremum of the yield over all
/// dilution rates.
pub fn yield_batch_limit(p: &ModelParams, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            bound: "must lie in (0, 1]".into(),
        });
    }
    Ok(alpha * p.beta * p.gamma / p.q_min)
}

/// Weight below which running the reactor never beats shutting it off:
/// for theta <= this value the net profit supremum is 0, approached at
/// vanishing dilution. Equals 1 / (1 + beta gamma / q_min).
pub fn theta_breakeven(p: &ModelParams) -> f64 {
    1.0 / (1.0 + p.beta * p.gamma / p.q_min)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain {
            what: "theta",
            value: theta,
            bound: "weight must lie in [0, 1]".into(),
        });
    }
    Ok(())
}

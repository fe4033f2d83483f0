//! Closed-form steady states, their existence thresholds, and local
//! stability.
//!
//! For a fixed operating point the chemostat has up to three equilibria:
//!
//! - `x0`: total washout, both populations flushed out;
//! - `x10`: bacteria persist, algae wash out;
//! - `x11`: coexistence, both populations persist.
//!
//! Existence is governed by two dilution thresholds. Bacteria persist when
//! d < d2 = (1 - alpha) phi(s_in). Coexistence additionally needs enough
//! feed to cover both the bacterial draw and the algal vitamin demand,
//! d < d1 = psi_alpha(s_in), where psi_alpha_inv(d) is the minimal feed
//! sustaining coexistence at dilution d. d1 < d2 always, so raising the
//! dilution rate loses the algae first.

use crate::model::{self, Control, State};
use crate::{Error, ModelParams, Result};
use nalgebra::Matrix5;
use serde::{Deserialize, Serialize};

/// Width of the dilution band around d1 and d2 inside which [`classify`]
/// refuses to pick a side.
pub const THRESHOLD_BAND: f64 = 1e-9;

/// Real-part margin for calling an eigenvalue decisively stable or
/// unstable.
pub const STABILITY_MARGIN: f64 = 1e-8;

/// Long-run outcome for a given operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// d < d1: coexistence equilibrium exists and attracts the interior.
    CoexistenceGas,
    /// d1 < d < d2: bacteria persist, algae wash out.
    AlgalWashoutGas,
    /// d > d2: everything washes out.
    TotalWashoutGas,
    /// d within [`THRESHOLD_BAND`] of d1 or d2; behavior on the threshold
    /// itself is not classified.
    Boundary,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::CoexistenceGas => "COEXISTENCE_GAS",
            Regime::AlgalWashoutGas => "ALGAL_WASHOUT_GAS",
            Regime::TotalWashoutGas => "TOTAL_WASHOUT_GAS",
            Regime::Boundary => "BOUNDARY",
        })
    }
}

/// Existence summary at one operating point: both thresholds, the regime,
/// every equilibrium present, and each one's residual under the dynamics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub control: Control,
    /// Coexistence threshold psi_alpha(s_in) [1/day].
    pub d1: f64,
    /// Bacterial washout threshold (1 - alpha) phi(s_in) [1/day].
    pub d2: f64,
    pub regime: Regime,
    pub x0: State,
    /// Present iff d < d2.
    pub x10: Option<State>,
    /// Present iff d < d1.
    pub x11: Option<State>,
    /// Max-norm of the right-hand side at x0 (identically zero).
    pub residual_x0: f64,
    pub residual_x10: Option<f64>,
    pub residual_x11: Option<f64>,
}

/// Stability verdict from the Jacobian spectrum at an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StabilityLabel {
    Stable,
    Unstable,
    Marginal,
}

impl std::fmt::Display for StabilityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StabilityLabel::Stable => "STABLE",
            StabilityLabel::Unstable => "UNSTABLE",
            StabilityLabel::Marginal => "MARGINAL",
        })
    }
}

/// Spectrum summary at an equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub label: StabilityLabel,
    /// Jacobian eigenvalues as (re, im) pairs, sorted by descending real
    /// part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub max_real_part: f64,
}

/// Minimal glucose feed [g/L] that sustains coexistence at dilution `d`
/// under light fraction `alpha`. Strictly increasing in `d`; tends to 0 as
/// d tends to 0 and diverges as d approaches the saturation bound.
pub fn psi_alpha_inv(p: &ModelParams, alpha: f64, d: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain {
            what: "d",
            value: d,
            bound: "dilution rate must be positive and finite".into(),
        });
    }
    let s = p.phi_inv(d / (1.0 - alpha))?;
    let v = p.rho_inv(d * p.mu_inv(d)?)?;
    Ok(s + v / (alpha * p.beta * p.gamma))
}

/// Coexistence dilution threshold d1 [1/day]: the unique d with
/// psi_alpha_inv(alpha, d) = s_in. Solved by bisection on the monotone
/// feed threshold down to a bracket of width 1e-13, then one secant step.
pub fn psi_alpha(p: &ModelParams, alpha: f64, s_in: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(s_in > 0.0 && s_in.is_finite()) {
        return Err(Error::Domain {
            what: "s_in",
            value: s_in,
            bound: "feed concentration must be positive and finite".into(),
        });
    }
    let mut hi = d_upper_bound(p, alpha) * (1.0 - 1e-11);
    let mut f_hi = psi_alpha_inv(p, alpha, hi)?;
    if f_hi <= s_in {
        // The feed exceeds the threshold at every representable dilution;
        // the guarded endpoint is the best available answer.
        return Ok(hi);
    }
    let mut lo = 0.0;
    let mut f_lo = 0.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let f_mid = psi_alpha_inv(p, alpha, mid)?;
        if f_mid < s_in {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if f_hi > f_lo {
        Ok((lo + (hi - lo) * (s_in - f_lo) / (f_hi - f_lo)).clamp(lo, hi))
    } else {
        Ok(0.5 * (lo + hi))
    }
}

/// Largest dilution rate at which the feed threshold is defined for the
/// given light fraction: the bacterial uptake and vitamin uptake
/// saturation bounds, whichever binds first.
pub fn d_upper_bound(p: &ModelParams, alpha: f64) -> f64 {
    ((1.0 - alpha) * p.phi_max).min(p.d_rho_bound())
}

/// Both dilution thresholds (d1, d2) at a light fraction and feed level.
pub fn thresholds(p: &ModelParams, alpha: f64, s_in: f64) -> Result<(f64, f64)> {
    let d1 = psi_alpha(p, alpha, s_in)?;
    let d2 = (1.0 - alpha) * p.phi(s_in)?;
    Ok((d1, d2))
}

/// Total washout state (s_in, 0, 0, q_min, 0). Always an equilibrium.
pub fn equilibrium_x0(p: &ModelParams, u: &Control) -> Result<State> {
    u.validate()?;
    Ok(State::new(u.s_in, 0.0, 0.0, p.q_min, 0.0))
}

/// Algal washout equilibrium: bacteria at steady state, no algae. Exists
/// iff d < d2.
pub fn equilibrium_x10(p: &ModelParams, u: &Control) -> Result<State> {
    u.validate()?;
    let d2 = (1.0 - u.alpha) * model::phi_raw(p, u.s_in);
    if u.d >= d2 {
        return Err(Error::Existence(format!(
            "bacteria wash out: d = {} is not below d2 = {d2}",
            u.d
        )));
    }
    let s = p.phi_inv(u.d / (1.0 - u.alpha))?;
    let e = (1.0 - u.alpha) * p.gamma * (u.s_in - s);
    let v = u.alpha * p.beta * p.gamma * (u.s_in - s);
    let q = p.q_min + model::rho_raw(p, v) / p.mu_max;
    Ok(State::new(s, e, v, q, 0.0))
}

/// Coexistence equilibrium: both populations at steady state. Exists iff
/// the feed clears the coexistence threshold, psi_alpha_inv(alpha, d) <
/// s_in.
pub fn equilibrium_x11(p: &ModelParams, u: &Control) -> Result<State> {
    u.validate()?;
    let s_min = psi_alpha_inv(p, u.alpha, u.d).map_err(|e| {
        Error::Existence(format!("no coexistence at dilution {}: {e}", u.d))
    })?;
    if s_min >= u.s_in {
        return Err(Error::Existence(format!(
            "feed too lean for coexistence: need s_in > {s_min}, got {}",
            u.s_in
        )));
    }
    let s = p.phi_inv(u.d / (1.0 - u.alpha))?;
    let e = (1.0 - u.alpha) * p.gamma * (u.s_in - s);
    let v_in = u.alpha * p.beta * p.gamma * (u.s_in - s);
    let q = p.mu_inv(u.d)?;
    let v = p.rho_inv(u.d * q)?;
    let c = (v_in - v) / q;
    Ok(State::new(s, e, v, q, c))
}

/// Max-norm of the right-hand side; zero exactly at an equilibrium.
pub fn residual_inf(p: &ModelParams, x: &State, u: &Control) -> Result<f64> {
    let dx = model::ode_rhs(p, x, u)?;
    Ok(dx.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Computes both thresholds and every equilibrium present at `u`, with the
/// regime determined by where d falls relative to (d1, d2).
pub fn classify(p: &ModelParams, u: &Control) -> Result<EquilibriumReport> {
    u.validate()?;
    let (d1, d2) = thresholds(p, u.alpha, u.s_in)?;
    let regime = if (u.d - d1).abs() < THRESHOLD_BAND || (u.d - d2).abs() < THRESHOLD_BAND {
        Regime::Boundary
    } else if u.d < d1 {
        Regime::CoexistenceGas
    } else if u.d < d2 {
        Regime::AlgalWashoutGas
    } else {
        Regime::TotalWashoutGas
    };
    let x0 = equilibrium_x0(p, u)?;
    let x10 = if u.d < d2 { Some(equilibrium_x10(p, u)?) } else { None };
    let x11 = if u.d < d1 {
        match equilibrium_x11(p, u) {
            Ok(x) => Some(x),
            // d1 comes from root-finding; within the boundary band the
            // strict membership test may disagree with d < d1 by roundoff.
            Err(Error::Existence(_)) if regime == Regime::Boundary => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let residual_x0 = residual_inf(p, &x0, u)?;
    let residual_x10 = x10.as_ref().map(|x| residual_inf(p, x, u)).transpose()?;
    let residual_x11 = x11.as_ref().map(|x| residual_inf(p, x, u)).transpose()?;
    Ok(EquilibriumReport {
        control: *u,
        d1,
        d2,
        regime,
        x0,
        x10,
        x11,
        residual_x0,
        residual_x10,
        residual_x11,
    })
}

/// Classifies local stability from the Jacobian spectrum at an
/// equilibrium. Rejects states whose residual exceeds 1e-8.
pub fn local_stability(p: &ModelParams, x: &State, u: &Control) -> Result<StabilityReport> {
    let r = residual_inf(p, x, u)?;
    if r >= 1e-8 {
        return Err(Error::Precondition(format!(
            "not an equilibrium: max-norm residual {r:.3e} at the given state"
        )));
    }
    let j = model::jacobian(p, x, u)?;
    let m = Matrix5::from_fn(|row, col| j[row][col]);
    let mut eigenvalues = spectrum(&m)?;
    eigenvalues.sort_by(|a, b| {
        b[0].partial_cmp(&a[0]).unwrap().then(b[1].partial_cmp(&a[1]).unwrap())
    });
    let max_real_part = eigenvalues[0][0];
    let label = if eigenvalues.iter().all(|z| z[0] < -STABILITY_MARGIN) {
        StabilityLabel::Stable
    } else if eigenvalues.iter().any(|z| z[0] > STABILITY_MARGIN) {
        StabilityLabel::Unstable
    } else {
        StabilityLabel::Marginal
    };
    Ok(StabilityReport { label, eigenvalues, max_real_part })
}

/// Eigenvalues of a real 5x5 matrix as (re, im) pairs, read off the real
/// Schur form block by block. Near-coincident real pairs are resolved by
/// the quadratic formula on the 2x2 diagonal block, which stays finite
/// where a naive complex-pair branch would not.
fn spectrum(m: &Matrix5<f64>) -> Result<Vec<[f64; 2]>> {
    let t = m
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration on the Jacobian stalled".into()))?
        .unpack()
        .1;
    let mut eig = Vec::with_capacity(5);
    let mut i = 0;
    while i < 5 {
        let coupled = i + 1 < 5
            && t[(i + 1, i)].abs() > f64::EPSILON * (t[(i, i)].abs() + t[(i + 1, i + 1)].abs());
        if coupled {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                eig.push([half_tr - sq, 0.0]);
                eig.push([half_tr + sq, 0.0]);
            } else {
                let sq = (-disc).sqrt();
                eig.push([half_tr, -sq]);
                eig.push([half_tr, sq]);
            }
            i += 2;
        } else {
            eig.push([t[(i, i)], 0.0]);
            i += 1;
        }
    }
    Ok(eig)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            bound: "must lie in the open interval (0, 1)".into(),
        });
    }
    Ok(())
}

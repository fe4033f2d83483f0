//! Consortium dynamics: rate laws, their exact inverses, the ODE
//! right-hand side, and the analytic Jacobian.
//!
//! State vector x = (s, e, v, q, c):
//!
//! | var | meaning                          | unit  |
//! |-----|----------------------------------|-------|
//! | s   | glucose in the medium            | g/L   |
//! | e   | bacterial biomass                | g/L   |
//! | v   | dissolved vitamin                | mg/L  |
//! | q   | internal vitamin quota of algae  | mg/g  |
//! | c   | algal biomass                    | g/L   |
//!
//! Bacterial growth follows Monod kinetics phi(s), vitamin uptake by the
//! alga follows Monod kinetics rho(v), and algal growth follows the Droop
//! quota law mu(q). The state space is Omega = {s,e,v,c >= 0, q >= q_min}.

use crate::{Error, ModelParams, Result};
use serde::{Deserialize, Serialize};

/// Relative guard band around rate-law saturation limits. Inverses reject
/// arguments this close to their pole to avoid overflow.
pub const SATURATION_GUARD: f64 = 1e-12;

/// Reactor state (s, e, v, q, c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Glucose concentration [g/L].
    pub s: f64,
    /// Bacterial biomass [g/L].
    pub e: f64,
    /// Dissolved vitamin [mg/L].
    pub v: f64,
    /// Internal vitamin quota [mg/g].
    pub q: f64,
    /// Algal biomass [g/L].
    pub c: f64,
}

impl State {
    pub fn new(s: f64, e: f64, v: f64, q: f64, c: f64) -> Self {
        State { s, e, v, q, c }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.s, self.e, self.v, self.q, self.c]
    }

    pub fn from_array(x: [f64; 5]) -> Self {
        State { s: x[0], e: x[1], v: x[2], q: x[3], c: x[4] }
    }

    /// Membership in the state space with a nonnegative slack on every
    /// boundary (slack 0 is the exact test).
    pub fn in_state_space(&self, p: &ModelParams, slack: f64) -> bool {
        let lo = -slack;
        self.s >= lo
            && self.e >= lo
            && self.v >= lo
            && self.c >= lo
            && self.q >= p.q_min - slack
            && self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Operating point (alpha, d, s_in).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Control {
    /// Fraction of bacterial uptake diverted to vitamin synthesis, set by
    /// light intensity. Open interval (0,1).
    pub alpha: f64,
    /// Dilution rate [1/day], positive.
    pub d: f64,
    /// Glucose feed concentration [g/L], positive.
    pub s_in: f64,
}

impl Control {
    pub fn new(alpha: f64, d: f64, s_in: f64) -> Result<Self> {
        let u = Control { alpha, d, s_in };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain {
                what: "alpha",
                value: self.alpha,
                bound: "must lie in the open interval (0, 1)".into(),
            });
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::Domain {
                what: "d",
                value: self.d,
                bound: "dilution rate must be positive and finite".into(),
            });
        }
        if !(self.s_in > 0.0 && self.s_in.is_finite()) {
            return Err(Error::Domain {
                what: "s_in",
                value: self.s_in,
                bound: "feed concentration must be positive and finite".into(),
            });
        }
        Ok(())
    }
}

impl ModelParams {
    /// Monod glucose uptake rate phi(s) = phi_max s / (k_s + s) [1/day].
    pub fn phi(&self, s: f64) -> Result<f64> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::Domain {
                what: "s",
                value: s,
                bound: "glucose concentration must be nonnegative".into(),
            });
        }
        Ok(phi_raw(self, s))
    }

    /// Monod vitamin uptake rate rho(v) = rho_max v / (k_v + v) [mg/(g day)].
    pub fn rho(&self, v: f64) -> Result<f64> {
        if v < 0.0 || v.is_nan() {
            return Err(Error::Domain {
                what: "v",
                value: v,
                bound: "vitamin concentration must be nonnegative".into(),
            });
        }
        Ok(rho_raw(self, v))
    }

    /// Droop growth rate mu(q) = mu_max (1 - q_min/q) [1/day].
    pub fn mu(&self, q: f64) -> Result<f64> {
        if q < self.q_min || q.is_nan() {
            return Err(Error::Domain {
                what: "q",
                value: q,
                bound: format!("quota must be at least q_min = {}", self.q_min),
            });
        }
        Ok(mu_raw(self, q))
    }

    /// Exact inverse of phi on [0, phi_max).
    pub fn phi_inv(&self, y: f64) -> Result<f64> {
        check_inverse_arg("phi", y, self.phi_max)?;
        Ok(self.k_s * y / (self.phi_max - y))
    }

    /// Exact inverse of rho on [0, rho_max).
    pub fn rho_inv(&self, y: f64) -> Result<f64> {
        check_inverse_arg("rho", y, self.rho_max)?;
        Ok(self.k_v * y / (self.rho_max - y))
    }

    /// Exact inverse of mu on [0, mu_max).
    pub fn mu_inv(&self, y: f64) -> Result<f64> {
        check_inverse_arg("mu", y, self.mu_max)?;
        Ok(self.q_min * self.mu_max / (self.mu_max - y))
    }
}

fn check_inverse_arg(law: &'static str, y: f64, limit: f64) -> Result<()> {
    if y < 0.0 || y.is_nan() {
        return Err(Error::Domain {
            what: law,
            value: y,
            bound: "inverse argument must be nonnegative".into(),
        });
    }
    if y >= limit * (1.0 - SATURATION_GUARD) {
        return Err(Error::Domain {
            what: law,
            value: y,
            bound: format!("inverse argument must stay below the saturation limit {limit}"),
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn phi_raw(p: &ModelParams, s: f64) -> f64 {
    p.phi_max * s / (p.k_s + s)
}

#[inline]
pub(crate) fn rho_raw(p: &ModelParams, v: f64) -> f64 {
    p.rho_max * v / (p.k_v + v)
}

#[inline]
pub(crate) fn mu_raw(p: &ModelParams, q: f64) -> f64 {
    p.mu_max * (1.0 - p.q_min / q)
}

/// Right-hand side of the five chemostat balance equations, in state order
/// (s, e, v, q, c). The quota drain mu(q) q is evaluated as
/// mu_max (q - q_min), which is the same expression without the removable
/// singularity at q = 0.
pub fn ode_rhs(p: &ModelParams, x: &State, u: &Control) -> Result<[f64; 5]> {
    u.validate()?;
    if !x.in_state_space(p, 0.0) {
        return Err(Error::Domain {
            what: "x",
            value: x.q,
            bound: "state must lie in Omega (s,e,v,c >= 0 and q >= q_min)".into(),
        });
    }
    Ok(ode_rhs_raw(p, &x.to_array(), u))
}

/// Unchecked right-hand side on a raw state array. Every term is smooth on
/// a neighborhood of Omega, so adaptive integrators may evaluate it at
/// trial stages that dip slightly outside the state space.
#[inline]
pub(crate) fn ode_rhs_raw(p: &ModelParams, x: &[f64; 5], u: &Control) -> [f64; 5] {
    let [s, e, v, q, c] = *x;
    let phi = phi_raw(p, s);
    let rho = rho_raw(p, v);
    let mu = mu_raw(p, q);
    [
        -phi * e / p.gamma + u.d * (u.s_in - s),
        (1.0 - u.alpha) * phi * e - u.d * e,
        u.alpha * p.beta * phi * e - rho * c - u.d * v,
        rho - p.mu_max * (q - p.q_min),
        mu * c - u.d * c,
    ]
}

/// Analytic Jacobian of [`ode_rhs`] with rows and columns in state order.
/// Defined on all of Omega including the q = q_min face.
pub fn jacobian(p: &ModelParams, x: &State, u: &Control) -> Result<[[f64; 5]; 5]> {
    u.validate()?;
    if !x.in_state_space(p, 0.0) {
        return Err(Error::Domain {
            what: "x",
            value: x.q,
            bound: "state must lie in Omega (s,e,v,c >= 0 and q >= q_min)".into(),
        });
    }
    let State { s, e, v, q, c } = *x;
    let phi = phi_raw(p, s);
    let rho = rho_raw(p, v);
    let mu = mu_raw(p, q);
    let dphi = p.phi_max * p.k_s / ((p.k_s + s) * (p.k_s + s));
    let drho = p.rho_max * p.k_v / ((p.k_v + v) * (p.k_v + v));
    let dmu = p.mu_max * p.q_min / (q * q);
    let ab = u.alpha * p.beta;
    Ok([
        [-dphi * e / p.gamma - u.d, -phi / p.gamma, 0.0, 0.0, 0.0],
        [(1.0 - u.alpha) * dphi * e, (1.0 - u.alpha) * phi - u.d, 0.0, 0.0, 0.0],
        [ab * dphi * e, ab * phi, -drho * c - u.d, 0.0, -rho],
        [0.0, 0.0, drho, -p.mu_max, 0.0],
        [0.0, 0.0, 0.0, dmu * c, mu - u.d],
    ])
}

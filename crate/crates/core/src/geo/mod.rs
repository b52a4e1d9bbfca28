//! Parabolic geodesics, the parabolic exponential map and its inverse, frame
//! transport along parabolic geodesics, and a numeric vanishing-order estimator.
//!
//! A parabolic geodesic solves `D_t²γ̇ = 0` with `γ̇(0) = X`, `D_tγ̇(0) = Y`. It is
//! integrated as the first-order system on `(x, η, ξ) = (γ, γ̇, D_tγ̇)`:
//! `x' = η`, `η' = ξ − Γ(η, η)`, `ξ' = −Γ(η, ξ)`.
//!
//! The differential of `Ψ(X, Y) = γ_{(X,Y)}(1)` at the origin is the identity on
//! `H` and one half the identity on `V`; charts built from `Ψ` keep that factor.

mod chart;
pub mod ode;

pub use chart::{
    dilate_coords, parabolic_exp, parabolic_geodesic, parabolic_log, polynomial_geodesic, transport_frame,
    validity_radius, vanishing_order, ParabolicChart, VanishingOrder,
};

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::poly::{HPoly, Mono, MAX_EXP};
use crate::qalg::{standard_acs, Dim};
use crate::scalar::{format_rational, rational_from_json, Rational, Scalar};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeoError {
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("step size underflow at s = {reached}")]
    StepUnderflow { reached: f64 },
    #[error("step budget exhausted at s = {reached}")]
    TooManySteps { reached: f64 },
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("singular Jacobian in Newton iteration")]
    SingularJacobian,
    #[error("vector length {got} does not match dimension {want}")]
    BadLength { got: usize, want: usize },
    #[error("need at least {0} positive samples")]
    TooFewSamples(usize),
    #[error("connection json: {0}")]
    Json(String),
}

/// A polynomial evaluated in floating point.
#[derive(Clone, Debug)]
struct CompiledPoly {
    terms: Vec<(Vec<(usize, i32)>, f64)>,
}

impl CompiledPoly {
    fn new(p: &HPoly) -> Self {
        let nv = p.nvars();
        let terms = p
            .terms
            .iter()
            .map(|(m, c)| {
                let vars = (0..nv).filter(|&a| m.exp(a) > 0).map(|a| (a, m.exp(a) as i32)).collect();
                (vars, c.to_f64())
            })
            .collect();
        CompiledPoly { terms }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (vars, c) in &self.terms {
            let mut v = *c;
            for &(a, e) in vars {
                v *= if e == 1 { x[a] } else { x[a].powi(e) };
            }
            acc += v;
        }
        acc
    }
}

/// Christoffel symbols `Γ^a_{bc} = dx^a(∇_{∂_b}∂_c)` as polynomials in the coordinates.
#[derive(Clone, Debug)]
pub struct PolyConnection {
    pub dim: Dim,
    pub gamma: BTreeMap<(usize, usize, usize), HPoly>,
    compiled: Vec<(usize, usize, usize, CompiledPoly)>,
}

impl PartialEq for PolyConnection {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.gamma == other.gamma
    }
}

impl PolyConnection {
    pub fn new(dim: Dim, gamma: BTreeMap<(usize, usize, usize), HPoly>) -> Self {
        let gamma: BTreeMap<_, _> = gamma.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let compiled = gamma.iter().map(|(&(a, b, c), p)| (a, b, c, CompiledPoly::new(p))).collect();
        PolyConnection { dim, gamma, compiled }
    }

    /// `Γ ≡ 0`.
    pub fn euclidean(dim: Dim) -> Self {
        Self::new(dim, BTreeMap::new())
    }

    /// The connection of the flat model for which the left-invariant frame is parallel:
    /// `Γ^{t_i}_{γβ} = −2I_{iγβ}`.
    pub fn flat(dim: Dim) -> Self {
        let acs = standard_acs::<Rational>(dim);
        let h = dim.h();
        let mut g = BTreeMap::new();
        for i in 0..3 {
            for gam in 0..h {
                for beta in 0..h {
                    let c = acs.get(i, gam, beta).clone() * Rational::from_i64(-2);
                    if !c.is_zero() {
                        g.insert((h + i, gam, beta), HPoly::constant(dim, c));
                    }
                }
            }
        }
        Self::new(dim, g)
    }

    pub fn total(&self) -> usize {
        self.dim.total()
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> HPoly {
        self.gamma.get(&(a, b, c)).cloned().unwrap_or_else(|| HPoly::zero(self.dim))
    }

    /// `out^a = Σ Γ^a_{bc}(x) u^b v^c`.
    pub fn contract(&self, x: &[f64], u: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (a, b, c, p) in &self.compiled {
            let w = u[*b] * v[*c];
            if w != 0.0 {
                out[*a] += p.eval(x) * w;
            }
        }
    }

    /// The symbols `∂_l Γ^a_{bc}`.
    pub fn partial(&self, l: usize) -> PolyConnection {
        Self::new(self.dim, self.gamma.iter().map(|(k, p)| (*k, p.partial(l))).collect())
    }

    pub fn to_json(&self) -> Value {
        let d = self.total();
        let gamma: Vec<Value> = self
            .gamma
            .iter()
            .map(|(&(a, b, c), p)| {
                let poly: Vec<Value> = p
                    .sorted_terms()
                    .into_iter()
                    .map(|(m, co)| json!({"mono": m.exps(d), "coeff": format_rational(&co)}))
                    .collect();
                json!({"a": a, "b": b, "c": c, "poly": poly})
            })
            .collect();
        json!({"dim": d, "gamma": gamma})
    }

    pub fn from_json(v: &Value) -> Result<Self, GeoError> {
        let bad = |s: &str| GeoError::Json(s.to_string());
        let d = v["dim"].as_u64().ok_or_else(|| bad("missing dim"))? as usize;
        if d < 7 || (d - 3) % 4 != 0 {
            return Err(bad("dim must be 4n+3 with n ≥ 1"));
        }
        let dim = Dim::new((d - 3) / 4).map_err(|e| bad(&e.to_string()))?;
        let mut g: BTreeMap<(usize, usize, usize), HPoly> = BTreeMap::new();
        for entry in v["gamma"].as_array().ok_or_else(|| bad("missing gamma"))? {
            let idx = |k: &str| -> Result<usize, GeoError> {
                let i = entry[k].as_u64().ok_or_else(|| bad(&format!("missing index {k}")))? as usize;
                if i >= d {
                    return Err(bad(&format!("index {k} = {i} out of range")));
                }
                Ok(i)
            };
            let key = (idx("a")?, idx("b")?, idx("c")?);
            let p = g.entry(key).or_insert_with(|| HPoly::zero(dim));
            for term in entry["poly"].as_array().ok_or_else(|| bad("missing poly"))? {
                let mono = term["mono"].as_array().ok_or_else(|| bad("missing mono"))?;
                if mono.len() != d {
                    return Err(bad("mono length must equal dim"));
                }
                let exps = mono
                    .iter()
                    .map(|e| e.as_u64().filter(|&x| x <= MAX_EXP as u64).map(|x| x as u8).ok_or_else(|| bad("bad exponent")))
                    .collect::<Result<Vec<u8>, _>>()?;
                let c = rational_from_json(&term["coeff"]).map_err(|e| bad(&e.to_string()))?;
                p.add_term(Mono::from_exps(&exps), c);
            }
        }
        Ok(Self::new(dim, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn flat_symbols_are_antisymmetric_constants() {
        let dim = Dim::new(1).unwrap();
        let c = PolyConnection::flat(dim);
        assert_eq!(c.gamma.len(), 3 * 4);
        for (&(a, b, cc), p) in &c.gamma {
            assert!(a >= 4 && b < 4 && cc < 4);
            assert_eq!(p.max_weight(), Some(0));
            assert_eq!(c.get(a, cc, b), p.scale(&rat(-1, 1)));
        }
    }

    #[test]
    fn json_round_trip_and_errors() {
        let dim = Dim::new(1).unwrap();
        let mut g = BTreeMap::new();
        g.insert((4, 0, 1), HPoly::var(dim, 2).scale(&rat(3, 2)).add(&HPoly::constant(dim, rat(-1, 1))));
        let c = PolyConnection::new(dim, g);
        assert_eq!(PolyConnection::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(PolyConnection::from_json(&PolyConnection::flat(dim).to_json()).unwrap(), PolyConnection::flat(dim));
        assert!(PolyConnection::from_json(&json!({"dim": 8, "gamma": []})).is_err());
        assert!(PolyConnection::from_json(&json!({"dim": 7, "gamma": [{"a": 9, "b": 0, "c": 0, "poly": []}]})).is_err());
    }

    #[test]
    fn partial_derivative_of_symbols() {
        let dim = Dim::new(1).unwrap();
        let mut g = BTreeMap::new();
        g.insert((0, 0, 0), HPoly::var(dim, 1).mul(&HPoly::var(dim, 1)));
        let c = PolyConnection::new(dim, g);
        assert_eq!(c.partial(1).get(0, 0, 0), HPoly::var(dim, 1).scale(&rat(2, 1)));
        assert!(c.partial(0).gamma.is_empty());
    }
}

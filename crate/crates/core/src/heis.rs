//! The quaternionic Heisenberg group: group law, dilations, left-invariant frame.
//!
//! Coordinates: horizontal `x^α` in blocks `(w, x, y, z)`, vertical `t = (r, s, t)`.

use serde_json::{json, Value};

use crate::qalg::{standard_acs, AcsTriple, Dim};
use crate::scalar::{rational_from_json, Rational, Scalar};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HeisError {
    #[error("dimension mismatch: {0} vs {1} horizontal coordinates")]
    DimMismatch(usize, usize),
    #[error("horizontal length {0} is not a positive multiple of 4")]
    BadLength(usize),
    #[error("point json: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupPoint<S> {
    pub x: Vec<S>,
    pub t: [S; 3],
}

/// Quaternion product of `(w, x, y, z)` tuples.
fn qmul<S: Scalar>(a: &[S], b: &[S]) -> [S; 4] {
    let (a0, a1, a2, a3) = (a[0].clone(), a[1].clone(), a[2].clone(), a[3].clone());
    let (b0, b1, b2, b3) = (b[0].clone(), b[1].clone(), b[2].clone(), b[3].clone());
    [
        a0.clone() * b0.clone() - a1.clone() * b1.clone() - a2.clone() * b2.clone() - a3.clone() * b3.clone(),
        a0.clone() * b1.clone() + a1.clone() * b0.clone() + a2.clone() * b3.clone() - a3.clone() * b2.clone(),
        a0.clone() * b2.clone() - a1.clone() * b3.clone() + a2.clone() * b0.clone() + a3.clone() * b1.clone(),
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ]
}

impl<S: Scalar> GroupPoint<S> {
    pub fn new(x: Vec<S>, t: [S; 3]) -> Result<Self, HeisError> {
        if x.is_empty() || x.len() % 4 != 0 {
            return Err(HeisError::BadLength(x.len()));
        }
        Ok(GroupPoint { x, t })
    }

    pub fn origin(dim: Dim) -> Self {
        GroupPoint { x: vec![S::zero(); dim.h()], t: [S::zero(), S::zero(), S::zero()] }
    }

    pub fn sample<R: rand::Rng + ?Sized>(dim: Dim, rng: &mut R) -> Self {
        GroupPoint {
            x: (0..dim.h()).map(|_| S::sample(rng)).collect(),
            t: [S::sample(rng), S::sample(rng), S::sample(rng)],
        }
    }

    /// `(p₁, ω₁)(p₂, ω₂) = (p₁ + p₂, ω₁ + ω₂ + 2 Im Σ p₁ p̄₂)`.
    pub fn multiply(&self, other: &Self) -> Result<Self, HeisError> {
        if self.x.len() != other.x.len() {
            return Err(HeisError::DimMismatch(self.x.len(), other.x.len()));
        }
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a.clone() + b.clone()).collect();
        let mut t = [0, 1, 2].map(|i| self.t[i].clone() + other.t[i].clone());
        for (p, q) in self.x.chunks(4).zip(other.x.chunks(4)) {
            let conj = [q[0].clone(), -q[1].clone(), -q[2].clone(), -q[3].clone()];
            let prod = qmul(p, &conj);
            for i in 0..3 {
                t[i] = t[i].clone() + S::from_i64(2) * prod[i + 1].clone();
            }
        }
        Ok(GroupPoint { x, t })
    }

    pub fn inverse(&self) -> Self {
        GroupPoint { x: self.x.iter().map(|v| -v.clone()).collect(), t: self.t.clone().map(|v| -v) }
    }

    /// `δ_s(x, t) = (s x, s² t)`.
    pub fn dilate(&self, s: &S) -> Self {
        let s2 = s.clone() * s.clone();
        GroupPoint {
            x: self.x.iter().map(|v| v.clone() * s.clone()).collect(),
            t: self.t.clone().map(|v| v * s2.clone()),
        }
    }

    /// Flattened coordinates `(x, t)`.
    pub fn coords(&self) -> Vec<S> {
        self.x.iter().cloned().chain(self.t.iter().cloned()).collect()
    }

    pub fn from_coords(c: &[S]) -> Result<Self, HeisError> {
        if c.len() < 7 {
            return Err(HeisError::BadLength(c.len().saturating_sub(3)));
        }
        let h = c.len() - 3;
        Self::new(c[..h].to_vec(), [c[h].clone(), c[h + 1].clone(), c[h + 2].clone()])
    }

    pub fn to_json(&self) -> Value {
        json!({
            "x": self.x.iter().map(|v| v.to_json()).collect::<Vec<_>>(),
            "t": self.t.iter().map(|v| v.to_json()).collect::<Vec<_>>(),
        })
    }
}

impl GroupPoint<Rational> {
    pub fn from_json(v: &Value) -> Result<Self, HeisError> {
        let parse = |key: &str| -> Result<Vec<Rational>, HeisError> {
            v[key]
                .as_array()
                .ok_or_else(|| HeisError::Json(format!("missing {key}")))?
                .iter()
                .map(|e| rational_from_json(e).map_err(|e| HeisError::Json(e.to_string())))
                .collect()
        };
        let x = parse("x")?;
        let t = parse("t")?;
        let t: [Rational; 3] = t.try_into().map_err(|_| HeisError::Json("t needs 3 entries".into()))?;
        Self::new(x, t)
    }
}

impl GroupPoint<f64> {
    pub fn from_json_f64(v: &Value) -> Result<Self, HeisError> {
        let parse = |key: &str| -> Result<Vec<f64>, HeisError> {
            v[key]
                .as_array()
                .ok_or_else(|| HeisError::Json(format!("missing {key}")))?
                .iter()
                .map(|e| match e {
                    Value::Number(n) => n.as_f64().ok_or_else(|| HeisError::Json("bad number".into())),
                    _ => rational_from_json(e).map(|r| Scalar::to_f64(&r)).map_err(|e| HeisError::Json(e.to_string())),
                })
                .collect()
        };
        let t = parse("t")?;
        let t: [f64; 3] = t.try_into().map_err(|_| HeisError::Json("t needs 3 entries".into()))?;
        Self::new(parse("x")?, t)
    }
}

/// Left-invariant frame and contact forms of the flat model.
///
/// Horizontal fields `X_α = ∂_α + Σ_i (Σ_β h_lin[α][i][β] x^β) ∂_{t_i}`,
/// vertical fields `T_i = v_scale ∂_{t_i}`,
/// forms `η^i = eta_dt ∂t^i + Σ_{α,β} eta_lin[i][β][α] x^α dx^β`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatFrame<S> {
    pub dim: Dim,
    pub acs: AcsTriple<S>,
    pub h_lin: Vec<[Vec<S>; 3]>,
    pub v_scale: S,
    pub eta_dt: S,
    pub eta_lin: [Vec<Vec<S>>; 3],
}

pub fn flat_frame<S: Scalar>(dim: Dim) -> FlatFrame<S> {
    let acs = standard_acs::<S>(dim);
    let h = dim.h();
    let two = S::from_i64(2);
    let h_lin = (0..h)
        .map(|a| [0, 1, 2].map(|i| (0..h).map(|b| two.clone() * acs.i[i][(b, a)].clone()).collect()))
        .collect();
    let eta_lin = [0, 1, 2].map(|i| {
        (0..h).map(|b| (0..h).map(|a| -acs.i[i][(a, b)].clone()).collect()).collect()
    });
    FlatFrame { dim, acs, h_lin, v_scale: two, eta_dt: S::ratio(1, 2), eta_lin }
}

impl<S: Scalar> FlatFrame<S> {
    /// Coordinate components of frame field `A` (horizontal first) at `x`.
    pub fn field(&self, a: usize, x: &[S]) -> Vec<S> {
        let h = self.dim.h();
        let mut v = vec![S::zero(); h + 3];
        if a < h {
            v[a] = S::one();
            for i in 0..3 {
                v[h + i] = dot(&self.h_lin[a][i], &x[..h]);
            }
        } else {
            v[a] = self.v_scale.clone();
        }
        v
    }

    /// Constant derivative `∂_b` of the coordinate components of field `A`.
    fn field_derivative(&self, a: usize, b: usize) -> Vec<S> {
        let h = self.dim.h();
        let mut v = vec![S::zero(); h + 3];
        if a < h && b < h {
            for i in 0..3 {
                v[h + i] = self.h_lin[a][i][b].clone();
            }
        }
        v
    }

    /// Covector components of `η^i` at `x`.
    pub fn eta(&self, i: usize, x: &[S]) -> Vec<S> {
        let h = self.dim.h();
        let mut c = vec![S::zero(); h + 3];
        for b in 0..h {
            c[b] = dot(&self.eta_lin[i][b], &x[..h]);
        }
        c[h + i] = self.eta_dt.clone();
        c
    }

    /// `dη^i(U, V)` from the coefficient table.
    pub fn d_eta(&self, i: usize, u: &[S], v: &[S]) -> S {
        let h = self.dim.h();
        let mut acc = S::zero();
        for a in 0..h {
            for b in 0..h {
                // ∂_a η_b − ∂_b η_a
                let c = self.eta_lin[i][b][a].clone() - self.eta_lin[i][a][b].clone();
                if !c.is_zero() {
                    acc = acc + c * u[a].clone() * v[b].clone();
                }
            }
        }
        acc
    }

    /// Coordinate components of `[e_A, e_B]` at `x`.
    pub fn bracket(&self, a: usize, b: usize, x: &[S]) -> Vec<S> {
        let ea = self.field(a, x);
        let eb = self.field(b, x);
        let mut out = vec![S::zero(); self.dim.total()];
        for c in 0..self.dim.total() {
            if !ea[c].is_zero() {
                for (o, d) in out.iter_mut().zip(self.field_derivative(b, c)) {
                    *o = o.clone() + ea[c].clone() * d;
                }
            }
            if !eb[c].is_zero() {
                for (o, d) in out.iter_mut().zip(self.field_derivative(a, c)) {
                    *o = o.clone() - eb[c].clone() * d;
                }
            }
        }
        out
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| {
        if x.is_zero() || y.is_zero() {
            acc
        } else {
            acc + x.clone() * y.clone()
        }
    })
}

/// First identity that failed in [`structure_check`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{identity} fails at i={i}, a={a}, b={b}")]
pub struct StructureViolation {
    pub identity: &'static str,
    pub i: usize,
    pub a: usize,
    pub b: usize,
}

/// Checks duality, `dη^i(e_α, e_β) = 2g(I_i e_α, e_β)`, the bracket/torsion table
/// `−η^i[e_α, e_β] = −2 I_{iαβ}` and centrality of the vertical fields at each point.
pub fn structure_check<S: Scalar>(frame: &FlatFrame<S>, points: &[Vec<S>]) -> Result<usize, StructureViolation> {
    let h = frame.dim.h();
    let total = frame.dim.total();
    let mut checks = 0;
    let fail = |identity, i, a, b| Err(StructureViolation { identity, i, a, b });
    for x in points {
        for i in 0..3 {
            let eta = frame.eta(i, x);
            for a in 0..total {
                let want = if a == h + i { S::one() } else { S::zero() };
                if dot(&eta, &frame.field(a, x)) != want {
                    return fail("duality", i, a, a);
                }
                checks += 1;
            }
            for a in 0..h {
                for b in 0..h {
                    let ea = frame.field(a, x);
                    let eb = frame.field(b, x);
                    // g(I_i e_α, e_β) = (I_i)_{βα}
                    let want = S::from_i64(2) * frame.acs.i[i][(b, a)].clone();
                    if frame.d_eta(i, &ea, &eb) != want {
                        return fail("d eta = 2g(I.,.)", i, a, b);
                    }
                    let br = frame.bracket(a, b, x);
                    if br[..h].iter().any(|c| !c.is_zero()) {
                        return fail("bracket not vertical", i, a, b);
                    }
                    let torsion = -dot(&eta, &br);
                    if torsion != S::from_i64(-2) * frame.acs.i[i][(a, b)].clone() {
                        return fail("torsion = -2I", i, a, b);
                    }
                    checks += 3;
                }
            }
        }
        for a in 0..total {
            for j in 0..3 {
                if frame.bracket(a, h + j, x).iter().any(|c| !c.is_zero()) {
                    return fail("vertical not central", j, a, h + j);
                }
                checks += 1;
            }
        }
    }
    Ok(checks)
}

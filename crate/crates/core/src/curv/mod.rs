//! Pointwise curvature and torsion calculus of the Biquard connection.
//!
//! A [`PointState`] holds the primitive data at one point: the torsion parts
//! `τ`, `μ`, the scalar curvature `S` (with `λ = −S/(8n(n+2))`), the vertical
//! torsion `T^α_{ij}`, optionally the horizontal curvature `R_{αβγδ}` and first
//! covariant jets. Everything else is derived from these.
//!
//! Indices follow the matrix convention of [`crate::qalg`]: `I_{iαβ} = (I_i)^α_β`,
//! and `R_{abcd} = θ^d(R(ξ_a, ξ_b)ξ_c)`. Covariant derivative indices are appended
//! last, so `τ_{αβ,γ} = (∇_γτ)_{αβ}`.

mod ops;
mod sp;

pub use ops::{
    a_operator, b_from_vvhh, b_matrix, closed_ricci_forms, conformal_curvature, divergence_residuals, l_and_q,
    l_terms, mainthm_3x3, mainthm_4x4, mixed_curvature_hvhh, mixed_trace, ricci_and_scalar, ricci_form_traces,
    ricci_forms, torsion_endomorphism, vvhh_contraction, DivergenceReport, RicciForms,
};
pub use sp::{hyperkahler_basis, sp_basis};

use rand::Rng;
use serde_json::{json, Value};

use crate::linalg::Matrix;
use crate::qalg::{levi_civita, p3_matrix, pm1_matrix, standard_acs, AcsTriple, Axis, Dim, Kind, Tensor};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CurvError {
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("missing block: {0}")]
    Missing(&'static str),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("state json: {0}")]
    Json(String),
}

/// First covariant derivatives at the point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jets<S> {
    /// `τ_{αβ,γ}` on `H⊗H⊗H`.
    pub tau: Tensor<S>,
    /// `μ_{αβ,γ}` on `H⊗H⊗H`.
    pub mu: Tensor<S>,
    /// `S_{,α}`.
    pub s_h: Vec<S>,
    /// `S_{,i}`.
    pub s_v: Vec<S>,
    /// `T_{βkl,α}` on `H⊗V⊗V⊗H`.
    pub t_vv: Tensor<S>,
}

impl<S: Scalar> Jets<S> {
    pub fn zero(dim: Dim) -> Self {
        let h = dim.h();
        Jets {
            tau: Tensor::zeros(vec![Axis::h(h); 3]),
            mu: Tensor::zeros(vec![Axis::h(h); 3]),
            s_h: vec![S::zero(); h],
            s_v: vec![S::zero(); 3],
            t_vv: Tensor::zeros(vec![Axis::h(h), Axis::v(), Axis::v(), Axis::h(h)]),
        }
    }

    /// Slice `γ ↦ (τ_{αβ,γ})_{αβ}`.
    pub fn tau_slice(&self, g: usize) -> Matrix<S> {
        slice_last(&self.tau, g)
    }

    pub fn mu_slice(&self, g: usize) -> Matrix<S> {
        slice_last(&self.mu, g)
    }

    /// `τ_{αβ,}^β`.
    pub fn tau_div(&self) -> Vec<S> {
        div(&self.tau)
    }

    pub fn mu_div(&self) -> Vec<S> {
        div(&self.mu)
    }
}

fn slice_last<S: Scalar>(t: &Tensor<S>, g: usize) -> Matrix<S> {
    let h = t.axes[0].extent;
    Matrix::from_fn(h, h, |a, b| t.get(&[a, b, g]).clone())
}

fn div<S: Scalar>(t: &Tensor<S>) -> Vec<S> {
    let h = t.axes[0].extent;
    (0..h).map(|a| (0..h).fold(S::zero(), |acc, b| acc + t.get(&[a, b, b]).clone())).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointState<S> {
    pub dim: Dim,
    pub tau: Matrix<S>,
    pub mu: Matrix<S>,
    pub s: S,
    pub lambda: S,
    /// `T^α_{jk}` on `H⊗V⊗V`.
    pub t_vv: Tensor<S>,
    /// `R_{αβγδ}` on `H⊗H⊗H⊗H`.
    pub r_hhhh: Option<Tensor<S>>,
    pub jets: Option<Jets<S>>,
}

fn sym_tracefree_violation<S: Scalar>(m: &Matrix<S>, tol: f64) -> Option<&'static str> {
    if !m.close(&m.transpose(), tol) {
        return Some("not symmetric");
    }
    if !m.trace().close(&S::zero(), tol) {
        return Some("not trace-free");
    }
    None
}

fn eigen_violation<S: Scalar>(acs: &AcsTriple<S>, m: &Matrix<S>, three: bool, tol: f64) -> bool {
    let p = if three { p3_matrix(acs, m) } else { pm1_matrix(acs, m) };
    !p.close(m, tol)
}

impl<S: Scalar> PointState<S> {
    /// The all-zero state.
    pub fn zero(dim: Dim) -> Self {
        let h = dim.h();
        PointState {
            dim,
            tau: Matrix::zeros(h, h),
            mu: Matrix::zeros(h, h),
            s: S::zero(),
            lambda: S::zero(),
            t_vv: Tensor::zeros(vec![Axis::h(h), Axis::v(), Axis::v()]),
            r_hhhh: None,
            jets: None,
        }
    }

    /// A state with only `τ`, `μ`, `S` set and `λ` matched to `S`.
    pub fn from_torsion(dim: Dim, tau: Matrix<S>, mu: Matrix<S>, s: S) -> Self {
        let lambda = lambda_of(dim, &s);
        PointState { tau, mu, s, lambda, ..Self::zero(dim) }
    }

    pub fn acs(&self) -> AcsTriple<S> {
        standard_acs(self.dim)
    }

    /// `T^k_{ij} = λε_{ijk}`.
    pub fn t_vvv(&self, k: usize, i: usize, j: usize) -> S {
        self.lambda.clone() * S::from_i64(levi_civita(i, j, k))
    }

    pub fn validate(&self, tol: f64) -> Result<(), CurvError> {
        let h = self.dim.h();
        let bad = |s: String| Err(CurvError::Invariant(s));
        let acs = self.acs();
        for (name, m, three) in [("tau", &self.tau, false), ("mu", &self.mu, true)] {
            if m.rows != h || m.cols != h {
                return bad(format!("{name} must be {h}×{h}"));
            }
            if let Some(v) = sym_tracefree_violation(m, tol) {
                return bad(format!("{name} {v}"));
            }
            if eigen_violation(&acs, m, three, tol) {
                return bad(format!("{name} outside its Casimir eigenspace"));
            }
        }
        for i in 0..3 {
            if !acs.i[i].matmul(&self.mu).close(&self.mu.matmul(&acs.i[i]), tol) {
                return bad(format!("mu does not commute with I_{}", i + 1));
            }
        }
        let nn = self.dim.n() as i64;
        let s_from_lambda = self.lambda.clone() * S::from_i64(-8 * nn * (nn + 2));
        if !self.s.close(&s_from_lambda, tol) {
            return bad("S != -8n(n+2)λ".into());
        }
        if self.t_vv.shape() != [h, 3, 3] {
            return bad("T_vv must have shape [4n, 3, 3]".into());
        }
        for a in 0..h {
            for j in 0..3 {
                for k in 0..3 {
                    if !self.t_vv.get(&[a, j, k]).close(&-self.t_vv.get(&[a, k, j]).clone(), tol) {
                        return bad("T_vv not antisymmetric in its vertical indices".into());
                    }
                }
            }
        }
        if let Some(r) = &self.r_hhhh {
            if r.shape() != [h, h, h, h] {
                return bad("R must have four horizontal axes".into());
            }
            for idx in quad(h) {
                let [a, b, c, d] = idx;
                let v = r.get(&idx).clone();
                if !v.close(&-r.get(&[b, a, c, d]).clone(), tol) || !v.close(&-r.get(&[a, b, d, c]).clone(), tol) {
                    return bad("R not antisymmetric in (αβ) and (γδ)".into());
                }
            }
        }
        if let Some(j) = &self.jets {
            if j.tau.shape() != [h, h, h] || j.mu.shape() != [h, h, h] || j.s_h.len() != h || j.s_v.len() != 3 {
                return bad("jet shapes".into());
            }
            if j.t_vv.shape() != [h, 3, 3, h] {
                return bad("T_vv jet shape".into());
            }
            for g in 0..h {
                for (name, m, three) in [("tau", j.tau_slice(g), false), ("mu", j.mu_slice(g), true)] {
                    if let Some(v) = sym_tracefree_violation(&m, tol) {
                        return bad(format!("{name} jet {v}"));
                    }
                    if eigen_violation(&acs, &m, three, tol) {
                        return bad(format!("{name} jet outside its Casimir eigenspace"));
                    }
                }
                for b in 0..h {
                    for k in 0..3 {
                        for l in 0..3 {
                            if !j.t_vv.get(&[b, k, l, g]).close(&-j.t_vv.get(&[b, l, k, g]).clone(), tol) {
                                return bad("T_vv jet not antisymmetric".into());
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Random state satisfying every pointwise invariant.
    ///
    /// The curvature is `W − (L-terms)` with `W` a random hyperkähler curvature
    /// tensor, so that the Ricci identity and the Ricci-form identities hold.
    pub fn random_valid<R: Rng + ?Sized>(dim: Dim, rng: &mut R, with_jets: bool) -> Self {
        let h = dim.h();
        let acs = standard_acs::<S>(dim);
        let tau = random_tau(&acs, rng);
        let mu = random_mu(&acs, rng);
        let s = S::sample(rng);
        let mut st = Self::from_torsion(dim, tau, mu, s);
        st.t_vv = random_antisym_vv(h, 1, rng);
        let l = ops::l_matrix(&st);
        let w = random_hyperkahler::<S, R>(dim, rng);
        st.r_hhhh = Some(w.sub(&l_terms(&acs, &l)));
        if with_jets {
            st.jets = Some(Jets::random(dim, rng));
        }
        st
    }

    pub fn to_json(&self) -> Value {
        let mut blocks = serde_json::Map::new();
        blocks.insert("tau".into(), Tensor::from_matrix(&self.tau, (Kind::H, Kind::H)).to_json());
        blocks.insert("mu".into(), Tensor::from_matrix(&self.mu, (Kind::H, Kind::H)).to_json());
        blocks.insert("T_vv".into(), self.t_vv.to_json());
        if let Some(r) = &self.r_hhhh {
            blocks.insert("R_hhhh".into(), r.to_json());
        }
        let mut out = json!({
            "n": self.dim.n(),
            "scalar": S::NAME,
            "S": self.s.to_json(),
            "lambda": self.lambda.to_json(),
            "blocks": Value::Object(blocks),
        });
        if let Some(j) = &self.jets {
            out["jets"] = json!({
                "tau": j.tau.to_json(),
                "mu": j.mu.to_json(),
                "T_vv": j.t_vv.to_json(),
                "S_h": j.s_h.iter().map(|x| x.to_json()).collect::<Vec<_>>(),
                "S_v": j.s_v.iter().map(|x| x.to_json()).collect::<Vec<_>>(),
            });
        }
        out
    }
}

impl<S: Scalar> Jets<S> {
    pub fn random<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Self {
        let h = dim.h();
        let acs = standard_acs::<S>(dim);
        let mut j = Jets::zero(dim);
        for g in 0..h {
            let t = random_tau(&acs, rng);
            let m = random_mu(&acs, rng);
            for a in 0..h {
                for b in 0..h {
                    j.tau.set(&[a, b, g], t[(a, b)].clone());
                    j.mu.set(&[a, b, g], m[(a, b)].clone());
                }
            }
        }
        j.s_h = (0..h).map(|_| S::sample(rng)).collect();
        j.s_v = (0..3).map(|_| S::sample(rng)).collect();
        j.t_vv = random_antisym_vv(h, h, rng);
        j
    }
}

impl PointState<Rational> {
    pub fn from_json(v: &Value) -> Result<Self, CurvError> {
        let bad = |m: &str| CurvError::Json(m.to_string());
        let n = v["n"].as_u64().ok_or_else(|| bad("missing n"))? as usize;
        let dim = Dim::new(n).map_err(|e| bad(&e.to_string()))?;
        let h = dim.h();
        let scalar = |x: &Value| crate::scalar::rational_from_json(x).map_err(|e| bad(&e.to_string()));
        let tensor = |x: &Value, shape: &[usize]| -> Result<Tensor<Rational>, CurvError> {
            let t = Tensor::from_json(x).map_err(|e| bad(&e.to_string()))?;
            if t.shape() != shape {
                return Err(bad("block shape"));
            }
            Ok(t)
        };
        let b = &v["blocks"];
        let mut st = PointState::zero(dim);
        st.tau = tensor(&b["tau"], &[h, h])?.to_matrix();
        st.mu = tensor(&b["mu"], &[h, h])?.to_matrix();
        st.t_vv = tensor(&b["T_vv"], &[h, 3, 3])?;
        st.s = scalar(&v["S"])?;
        st.lambda = scalar(&v["lambda"])?;
        if !b["R_hhhh"].is_null() {
            st.r_hhhh = Some(tensor(&b["R_hhhh"], &[h, h, h, h])?);
        }
        let j = &v["jets"];
        if !j.is_null() {
            let list = |x: &Value, len: usize| -> Result<Vec<Rational>, CurvError> {
                let a = x.as_array().ok_or_else(|| bad("jet list"))?;
                if a.len() != len {
                    return Err(bad("jet list length"));
                }
                a.iter().map(scalar).collect()
            };
            st.jets = Some(Jets {
                tau: tensor(&j["tau"], &[h, h, h])?,
                mu: tensor(&j["mu"], &[h, h, h])?,
                t_vv: tensor(&j["T_vv"], &[h, 3, 3, h])?,
                s_h: list(&j["S_h"], h)?,
                s_v: list(&j["S_v"], 3)?,
            });
        }
        Ok(st)
    }
}

pub(crate) fn lambda_of<S: Scalar>(dim: Dim, s: &S) -> S {
    let n = dim.n() as i64;
    s.clone() / S::from_i64(-8 * n * (n + 2))
}

pub(crate) fn quad(h: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..h * h * h * h).map(move |k| [k / (h * h * h), (k / (h * h)) % h, (k / h) % h, k % h])
}

fn random_sym<S: Scalar, R: Rng + ?Sized>(h: usize, rng: &mut R) -> Matrix<S> {
    let mut m = Matrix::zeros(h, h);
    for a in 0..h {
        for b in a..h {
            let x = S::sample(rng);
            m[(a, b)] = x.clone();
            m[(b, a)] = x;
        }
    }
    m
}

pub(crate) fn random_tau<S: Scalar, R: Rng + ?Sized>(acs: &AcsTriple<S>, rng: &mut R) -> Matrix<S> {
    pm1_matrix(acs, &random_sym(acs.dim.h(), rng))
}

pub(crate) fn random_mu<S: Scalar, R: Rng + ?Sized>(acs: &AcsTriple<S>, rng: &mut R) -> Matrix<S> {
    let h = acs.dim.h();
    let m = p3_matrix(acs, &random_sym(h, rng));
    let tr = m.trace() / S::from_i64(h as i64);
    m.sub(&Matrix::identity(h).scale(&tr))
}

/// Random tensor on `H⊗V⊗V(⊗H)` antisymmetric in the two vertical slots.
fn random_antisym_vv<S: Scalar, R: Rng + ?Sized>(h: usize, tail: usize, rng: &mut R) -> Tensor<S> {
    let mut axes = vec![Axis::h(h), Axis::v(), Axis::v()];
    if tail > 1 {
        axes.push(Axis::h(tail));
    }
    let mut t = Tensor::zeros(axes);
    for a in 0..h {
        for (k, l) in [(0, 1), (0, 2), (1, 2)] {
            for g in 0..tail {
                let x = S::sample(rng);
                let (i1, i2): (Vec<usize>, Vec<usize>) =
                    if tail > 1 { (vec![a, k, l, g], vec![a, l, k, g]) } else { (vec![a, k, l], vec![a, l, k]) };
                t.set(&i1, x.clone());
                t.set(&i2, -x);
            }
        }
    }
    t
}

fn random_hyperkahler<S: Scalar, R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> Tensor<S> {
    let h = dim.h();
    let mut w = Tensor::zeros(vec![Axis::h(h); 4]);
    for b in hyperkahler_basis(dim) {
        let c = S::sample(rng);
        w = w.add(&Tensor { axes: b.axes.clone(), data: b.data.iter().map(|x| S::from_rational(x) * c.clone()).collect() });
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn random_states_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for n in 1..=2 {
            let dim = Dim::new(n).unwrap();
            let st = PointState::<Rational>::random_valid(dim, &mut rng, true);
            st.validate(0.0).unwrap();
            let st = PointState::<f64>::random_valid(dim, &mut rng, true);
            st.validate(1e-12).unwrap();
        }
    }

    #[test]
    fn validation_rejects_bad_input() {
        let dim = Dim::new(1).unwrap();
        let mut st = PointState::<Rational>::zero(dim);
        st.tau[(0, 1)] = Rational::one();
        assert!(matches!(st.validate(0.0), Err(CurvError::Invariant(_))));
        let mut st = PointState::<Rational>::zero(dim);
        st.s = Rational::one();
        assert!(st.validate(0.0).is_err());
        let mut st = PointState::<Rational>::zero(dim);
        st.t_vv.set(&[0, 0, 1], Rational::one());
        assert!(st.validate(0.0).is_err());
        let mut st = PointState::<Rational>::zero(dim);
        st.mu = Matrix::identity(4);
        assert!(st.validate(0.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let st = PointState::<Rational>::random_valid(Dim::new(1).unwrap(), &mut rng, true);
        assert_eq!(PointState::from_json(&st.to_json()).unwrap(), st);
        let st = PointState::<Rational>::zero(Dim::new(2).unwrap());
        assert_eq!(PointState::from_json(&st.to_json()).unwrap(), st);
        assert!(PointState::from_json(&json!({"n": 1})).is_err());
    }
}

//! Quaternionic linear algebra on the horizontal space.
//!
//! Matrices follow the convention `I_{iαβ} = (I_i)^α_β`, i.e. the column `β`
//! holds the components of `I_i ξ_β`. With it `dη^i(ξ_α, ξ_β) = 2g(I_i ξ_α, ξ_β)`,
//! `T^i_{αβ} = -2 I_{iαβ}` and `A² + 2A - 8 = 0` hold literally.

mod tensor;

pub use tensor::{contract, trace, Axis, Tensor};

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Kind {
    H,
    V,
}

impl Kind {
    pub fn tag(self) -> &'static str {
        match self {
            Kind::H => "H",
            Kind::V => "V",
        }
    }

    /// Parabolic order: 1 for horizontal, 2 for vertical.
    pub fn order(self) -> usize {
        match self {
            Kind::H => 1,
            Kind::V => 2,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QalgError {
    #[error("quaternionic dimension must be at least 1")]
    InvalidDim,
    #[error("cannot contract a {left:?} axis with a {right:?} axis")]
    KindMismatch { left: Kind, right: Kind },
    #[error("cannot contract extents {left} and {right}")]
    ExtentMismatch { left: usize, right: usize },
    #[error("axis index out of range")]
    AxisOutOfRange,
    #[error("expected a tensor with two horizontal indices")]
    WrongIndexKinds,
    #[error("tensor json: {0}")]
    Json(String),
}

/// Quaternionic dimension `n`; horizontal dimension `4n`, vertical dimension 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dim {
    n: usize,
}

impl Dim {
    pub fn new(n: usize) -> Result<Self, QalgError> {
        if n == 0 {
            Err(QalgError::InvalidDim)
        } else {
            Ok(Dim { n })
        }
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn h(self) -> usize {
        4 * self.n
    }

    pub fn v(self) -> usize {
        3
    }

    pub fn total(self) -> usize {
        4 * self.n + 3
    }

    /// Kind of a combined index `a ∈ 0..4n+3` (horizontal first).
    pub fn kind(self, a: usize) -> Kind {
        if a < self.h() {
            Kind::H
        } else {
            Kind::V
        }
    }

    pub fn order(self, a: usize) -> usize {
        self.kind(a).order()
    }
}

/// `ε_{ijk}` for `i, j, k ∈ 0..3`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// `ε` as a `V⊗V⊗V` tensor.
pub fn epsilon<S: Scalar>() -> Tensor<S> {
    Tensor::from_fn(vec![Axis::v(); 3], |i| S::from_i64(levi_civita(i[0], i[1], i[2])))
}

pub fn metric_h<S: Scalar>(dim: Dim) -> Tensor<S> {
    Tensor::from_matrix(&Matrix::identity(dim.h()), (Kind::H, Kind::H))
}

pub fn metric_v<S: Scalar>() -> Tensor<S> {
    Tensor::from_matrix(&Matrix::identity(3), (Kind::V, Kind::V))
}

/// The three almost complex structures as `4n × 4n` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct AcsTriple<S> {
    pub dim: Dim,
    pub i: [Matrix<S>; 3],
}

impl<S: Scalar> AcsTriple<S> {
    pub fn get(&self, i: usize, a: usize, b: usize) -> &S {
        &self.i[i][(a, b)]
    }

    /// `I_{iαβ}` as an `V⊗H⊗H` tensor.
    pub fn to_tensor(&self) -> Tensor<S> {
        let h = self.dim.h();
        Tensor::from_fn(vec![Axis::v(), Axis::h(h), Axis::h(h)], |x| self.i[x[0]][(x[1], x[2])].clone())
    }

    /// Violations of `I_i² = -1`, `I₁I₂I₃ = -1`, the product rule, and
    /// orthogonality/antisymmetry. Empty when the triple is valid.
    pub fn violations(&self) -> Vec<String> {
        let h = self.dim.h();
        let id = Matrix::<S>::identity(h);
        let minus_id = id.scale(&S::from_i64(-1));
        let mut out = Vec::new();
        for a in 0..3 {
            if self.i[a].matmul(&self.i[a]) != minus_id {
                out.push(format!("I_{}^2 != -Id", a + 1));
            }
            if self.i[a].transpose() != self.i[a].scale(&S::from_i64(-1)) {
                out.push(format!("I_{} not antisymmetric", a + 1));
            }
            if self.i[a].transpose().matmul(&self.i[a]) != id {
                out.push(format!("I_{} not orthogonal", a + 1));
            }
            for b in 0..3 {
                let mut rhs = if a == b { minus_id.clone() } else { Matrix::zeros(h, h) };
                for c in 0..3 {
                    let e = levi_civita(a, b, c);
                    if e != 0 {
                        rhs = rhs.add(&self.i[c].scale(&S::from_i64(e)));
                    }
                }
                if self.i[a].matmul(&self.i[b]) != rhs {
                    out.push(format!("I_{} I_{} product rule", a + 1, b + 1));
                }
            }
        }
        if self.i[0].matmul(&self.i[1]).matmul(&self.i[2]) != minus_id {
            out.push("I_1 I_2 I_3 != -Id".into());
        }
        out
    }
}

/// Block-diagonal triple from the quaternion action on `(W, X, Y, Z)` blocks:
/// `I₁: W↦X, X↦-W, Y↦Z, Z↦-Y`, `I₂: W↦Y, X↦-Z, Y↦-W, Z↦X`, `I₃ = I₁I₂`.
pub fn standard_acs<S: Scalar>(dim: Dim) -> AcsTriple<S> {
    let h = dim.h();
    // (from, to, sign) per generator, block-local.
    let i1 = [(0, 1, 1), (1, 0, -1), (2, 3, 1), (3, 2, -1)];
    let i2 = [(0, 2, 1), (1, 3, -1), (2, 0, -1), (3, 1, 1)];
    let build = |table: &[(usize, usize, i64); 4]| {
        let mut m = Matrix::zeros(h, h);
        for k in 0..dim.n() {
            for &(from, to, s) in table {
                m[(4 * k + to, 4 * k + from)] = S::from_i64(s);
            }
        }
        m
    };
    let m1 = build(&i1);
    let m2 = build(&i2);
    let m3 = m1.matmul(&m2);
    AcsTriple { dim, i: [m1, m2, m3] }
}

/// The Casimir operator `Υ(t) = Σ_i I_i t I_iᵀ` on `H⊗H` and its eigenprojections.
///
/// Rank-4 tensors are indexed `[α, γ, β, δ]` and act as `(Υt)_{αγ} = Υ_{αγβδ} t_{βδ}`.
#[derive(Clone, Debug)]
pub struct CasimirOp<S> {
    pub upsilon: Tensor<S>,
    pub p3: Tensor<S>,
    pub pm1: Tensor<S>,
}

pub fn identity_op<S: Scalar>(dim: Dim) -> Tensor<S> {
    let h = dim.h();
    Tensor::from_fn(vec![Axis::h(h); 4], |x| if x[0] == x[2] && x[1] == x[3] { S::one() } else { S::zero() })
}

pub fn casimir<S: Scalar>(acs: &AcsTriple<S>) -> CasimirOp<S> {
    let h = acs.dim.h();
    let upsilon = Tensor::from_fn(vec![Axis::h(h); 4], |x| {
        (0..3).fold(S::zero(), |acc, i| acc + acs.i[i][(x[0], x[2])].clone() * acs.i[i][(x[1], x[3])].clone())
    });
    let id = identity_op::<S>(acs.dim);
    let quarter = S::ratio(1, 4);
    let p3 = upsilon.add(&id).scale(&quarter);
    let pm1 = id.scale(&S::from_i64(3)).sub(&upsilon).scale(&quarter);
    CasimirOp { upsilon, p3, pm1 }
}

/// Composition `(a ∘ b)` of two operators on `H⊗H`.
pub fn compose_ops<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Tensor<S> {
    contract(a, b, &[(2, 0), (3, 1)]).expect("operators on H⊗H")
}

/// Applies an operator on `H⊗H` to a two-index tensor.
pub fn apply_op<S: Scalar>(op: &Tensor<S>, t: &Tensor<S>) -> Result<Tensor<S>, QalgError> {
    if t.rank() != 2 || t.axes.iter().any(|a| a.kind != Kind::H) {
        return Err(QalgError::WrongIndexKinds);
    }
    contract(op, t, &[(2, 0), (3, 1)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Eigen {
    Three,
    MinusOne,
}

pub fn project_eigen<S: Scalar>(cas: &CasimirOp<S>, t: &Tensor<S>, which: Eigen) -> Result<Tensor<S>, QalgError> {
    match which {
        Eigen::Three => apply_op(&cas.p3, t),
        Eigen::MinusOne => apply_op(&cas.pm1, t),
    }
}

/// Matrix form of `Υ(t) = Σ_i I_i t I_iᵀ`.
pub fn upsilon_matrix<S: Scalar>(acs: &AcsTriple<S>, t: &Matrix<S>) -> Matrix<S> {
    let mut out = Matrix::zeros(t.rows, t.cols);
    for i in 0..3 {
        out = out.add(&acs.i[i].matmul(t).matmul(&acs.i[i].transpose()));
    }
    out
}

/// `P₃(t) = (Υt + t)/4`.
pub fn p3_matrix<S: Scalar>(acs: &AcsTriple<S>, t: &Matrix<S>) -> Matrix<S> {
    upsilon_matrix(acs, t).add(t).scale(&S::ratio(1, 4))
}

/// `P₋₁(t) = (3t − Υt)/4`.
pub fn pm1_matrix<S: Scalar>(acs: &AcsTriple<S>, t: &Matrix<S>) -> Matrix<S> {
    t.scale(&S::from_i64(3)).sub(&upsilon_matrix(acs, t)).scale(&S::ratio(1, 4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rint, Rational};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dim(n: usize) -> Dim {
        Dim::new(n).unwrap()
    }

    #[test]
    fn dim_rejects_zero() {
        assert_eq!(Dim::new(0), Err(QalgError::InvalidDim));
    }

    #[test]
    fn standard_triple_is_valid() {
        for n in 1..=4 {
            let acs = standard_acs::<Rational>(dim(n));
            assert!(acs.violations().is_empty(), "{:?}", acs.violations());
        }
    }

    #[test]
    fn i1_maps_w_to_x() {
        let acs = standard_acs::<Rational>(dim(1));
        // Column 0 of I₁ is I₁ξ₁.
        let col: Vec<_> = (0..4).map(|a| acs.i[0][(a, 0)].clone()).collect();
        assert_eq!(col, vec![rint(0), rint(1), rint(0), rint(0)]);
        assert_eq!(acs.i[0].matmul(&acs.i[1]), acs.i[2]);
    }

    #[test]
    fn epsilon_identities() {
        let e = epsilon::<Rational>();
        let ee = contract(&e, &e, &[(0, 0), (1, 1)]).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                assert_eq!(ee.get(&[k, l]), &rint(if k == l { 2 } else { 0 }));
            }
        }
        let ee = contract(&e, &e, &[(0, 0)]).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    for m in 0..3 {
                        let d = |a: usize, b: usize| i64::from(a == b);
                        let expect = d(j, l) * d(k, m) - d(k, l) * d(j, m);
                        assert_eq!(ee.get(&[j, k, l, m]), &rint(expect));
                    }
                }
            }
        }
    }

    #[test]
    fn contract_rejects_mismatched_axes() {
        let e = epsilon::<Rational>();
        let g = metric_h::<Rational>(dim(1));
        assert!(matches!(contract(&e, &g, &[(0, 0)]), Err(QalgError::KindMismatch { .. })));
        let g2 = metric_h::<Rational>(dim(2));
        assert!(matches!(contract(&g, &g2, &[(0, 0)]), Err(QalgError::ExtentMismatch { .. })));
    }

    #[test]
    fn contract_with_metric_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = dim(1);
        let t = Tensor::from_fn(vec![Axis::h(4), Axis::v(), Axis::h(4)], |_| Rational::sample(&mut rng));
        let g = metric_h::<Rational>(d);
        let out = contract(&t, &g, &[(2, 0)]).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn casimir_relations() {
        for n in 1..=2 {
            let acs = standard_acs::<Rational>(dim(n));
            let c = casimir(&acs);
            let id = identity_op::<Rational>(dim(n));
            let u2 = compose_ops(&c.upsilon, &c.upsilon);
            let rhs = c.upsilon.scale(&rint(2)).add(&id.scale(&rint(3)));
            assert_eq!(u2, rhs);
            assert_eq!(compose_ops(&c.p3, &c.p3), c.p3);
            assert_eq!(compose_ops(&c.pm1, &c.pm1), c.pm1);
            assert!(compose_ops(&c.p3, &c.pm1).is_zero());
            assert_eq!(c.p3.add(&c.pm1), id);
        }
    }

    #[test]
    fn casimir_on_metric_and_i1() {
        let d = dim(1);
        let acs = standard_acs::<Rational>(d);
        let c = casimir(&acs);
        let g = metric_h::<Rational>(d);
        assert_eq!(apply_op(&c.upsilon, &g).unwrap(), g.scale(&rint(3)));
        let i1 = Tensor::from_matrix(&acs.i[0], (Kind::H, Kind::H));
        // Brute-force Σ_i I_i I₁ I_iᵀ.
        let mut direct = Matrix::zeros(4, 4);
        for i in 0..3 {
            direct = direct.add(&acs.i[i].matmul(&acs.i[0]).matmul(&acs.i[i].transpose()));
        }
        assert_eq!(apply_op(&c.upsilon, &i1).unwrap().to_matrix(), direct);
    }

    #[test]
    fn projections() {
        let d = dim(1);
        let acs = standard_acs::<Rational>(d);
        let c = casimir(&acs);
        let g = metric_h::<Rational>(d);
        assert_eq!(project_eigen(&c, &g, Eigen::Three).unwrap(), g);
        assert!(project_eigen(&c, &g, Eigen::MinusOne).unwrap().is_zero());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = Tensor::from_fn(vec![Axis::h(4); 2], |_| Rational::sample(&mut rng));
        let a = project_eigen(&c, &t, Eigen::Three).unwrap();
        let b = project_eigen(&c, &t, Eigen::MinusOne).unwrap();
        assert_eq!(a.add(&b), t);
        assert_eq!(apply_op(&c.upsilon, &a).unwrap(), a.scale(&rint(3)));
        assert_eq!(apply_op(&c.upsilon, &b).unwrap(), b.scale(&rint(-1)));
        assert_eq!(project_eigen(&c, &epsilon::<Rational>(), Eigen::Three), Err(QalgError::WrongIndexKinds));
    }

    #[test]
    fn mu_type_tensor_has_no_minus_one_part() {
        // Symmetric, trace-free and commuting with every I_i: only possible for n ≥ 2.
        let d = dim(2);
        let acs = standard_acs::<Rational>(d);
        let c = casimir(&acs);
        let mut m = Matrix::zeros(8, 8);
        for a in 0..4 {
            m[(a, a + 4)] = rint(1);
            m[(a + 4, a)] = rint(1);
        }
        for i in 0..3 {
            assert_eq!(acs.i[i].matmul(&m), m.matmul(&acs.i[i]));
        }
        let t = Tensor::from_matrix(&m, (Kind::H, Kind::H));
        assert!(project_eigen(&c, &t, Eigen::MinusOne).unwrap().is_zero());
    }

    #[test]
    fn matrix_forms_match_tensor_forms() {
        let d = dim(1);
        let acs = standard_acs::<Rational>(d);
        let c = casimir(&acs);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Matrix::from_fn(4, 4, |_, _| Rational::sample(&mut rng));
        let t = Tensor::from_matrix(&m, (Kind::H, Kind::H));
        assert_eq!(apply_op(&c.upsilon, &t).unwrap().to_matrix(), upsilon_matrix(&acs, &m));
        assert_eq!(apply_op(&c.p3, &t).unwrap().to_matrix(), p3_matrix(&acs, &m));
        assert_eq!(apply_op(&c.pm1, &t).unwrap().to_matrix(), pm1_matrix(&acs, &m));
    }

    #[test]
    fn tensor_json_round_trip() {
        let acs = standard_acs::<Rational>(dim(1));
        let t = acs.to_tensor().scale(&crate::scalar::rat(1, 3));
        let back = Tensor::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }
}

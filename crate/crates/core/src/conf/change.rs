//! Pointwise transformation laws under `η̃ = e^{2u}η` and the Christoffel
//! symbols of the rescaled connection on the flat model.

use std::collections::BTreeMap;

use super::biquard::Biquard;
use super::ConfError;
use crate::curv::{a_operator, b_matrix, PointState};
use crate::geo::PolyConnection;
use crate::linalg::Matrix;
use crate::poly::{HPoly, Series};
use crate::qalg::{levi_civita, pm1_matrix, p3_matrix, standard_acs, Dim};
use crate::scalar::Scalar;

/// Jets of the conformal factor at the base point, in the frame of the old
/// structure.
#[derive(Clone, Debug, PartialEq)]
pub struct UJets<S> {
    /// `e^{2u(q)}`.
    pub scale: S,
    /// `u_α`
    pub first: Vec<S>,
    /// `u_{αβ}`; only the symmetric part enters.
    pub hess: Matrix<S>,
    /// `u_{αi}` as a `4n × 3` matrix.
    pub mixed: Matrix<S>,
    /// `u_{ij}`; only the symmetric part enters.
    pub vert: Matrix<S>,
}

impl<S: Scalar> UJets<S> {
    pub fn zero(dim: Dim) -> Self {
        let h = dim.h();
        UJets {
            scale: S::one(),
            first: vec![S::zero(); h],
            hess: Matrix::zeros(h, h),
            mixed: Matrix::zeros(h, 3),
            vert: Matrix::zeros(3, 3),
        }
    }
}

/// The rescaled point data together with `B̃_{(ij)}`, which is not part of a
/// [`PointState`].
#[derive(Clone, Debug)]
pub struct Rescaled<S> {
    pub state: PointState<S>,
    pub b_sym: Option<Matrix<S>>,
}

fn sym<S: Scalar>(m: &Matrix<S>) -> Matrix<S> {
    m.add(&m.transpose()).scale(&S::ratio(1, 2))
}

/// Applies the change formulas at one point.
///
/// `τ̃`, `μ̃` and `S̃` are exact. `T̃_{αjk}` and `B̃_{(ij)}` get the leading-order
/// increments `A_{iα}^{jβ}u_{βj}` and `8n(u_{(ij)} − u_k^kδ_{ij})`; the remainders are of lower
/// order in the normalization and are dropped. `B̃` is only produced when the
/// input carries jets. Curvature and jets of the result are left empty.
pub fn rescale_point<S: Scalar>(st: &PointState<S>, u: &UJets<S>) -> Result<Rescaled<S>, ConfError> {
    let dim = st.dim;
    let h = dim.h();
    let n = dim.n() as i64;
    if u.first.len() != h || u.hess.rows != h || u.mixed.rows != h || u.mixed.cols != 3 || u.vert.rows != 3 {
        return Err(ConfError::MissingJets(2));
    }
    let acs = st.acs();
    let du = Matrix::from_fn(h, h, |a, b| u.first[a].clone() * u.first[b].clone());
    let hs = sym(&u.hess);
    // τ̃ = τ + P₋₁(4u_αu_β − 2u_{αβ})
    let tau = st.tau.add(&pm1_matrix(&acs, &du.scale(&S::from_i64(4)).sub(&hs.scale(&S::from_i64(2)))));
    // μ̃ = μ + P₃(−2u_αu_β − u_{αβ}), trace-free part
    let p3 = p3_matrix(&acs, &du.scale(&S::from_i64(-2)).sub(&hs));
    let tr = p3.trace() * S::ratio(1, 4 * n);
    let mu = st.mu.add(&p3.sub(&Matrix::identity(h).scale(&tr)));
    // S̃e^{2u} = S − 16(n+1)(n+2)|du|² − 8(n+2)u_γ^γ
    let s = (st.s.clone()
        - du.trace() * S::from_i64(16 * (n + 1) * (n + 2))
        - hs.trace() * S::from_i64(8 * (n + 2)))
        / u.scale.clone();
    let mut out = PointState::from_torsion(dim, tau, mu, s);

    // Y_{iα} = T_{αjk}ε_{ijk}, Ỹ = Y + A u, T̃_{αjk} = ½ε_{ijk}Ỹ_{iα}
    let (a_op, _) = a_operator::<S>(dim);
    let mut y = vec![S::zero(); 3 * h];
    for i in 0..3 {
        for al in 0..h {
            let mut acc = S::zero();
            for j in 0..3 {
                for k in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e != 0 {
                        acc = acc + st.t_vv.get(&[al, j, k]).clone() * S::from_i64(e);
                    }
                }
            }
            y[i * h + al] = acc;
        }
    }
    let uv: Vec<S> = (0..3 * h).map(|r| u.mixed[(r % h, r / h)].clone()).collect();
    let inc = a_op.mul_vec(&uv);
    for al in 0..h {
        for j in 0..3 {
            for k in 0..3 {
                let mut acc = S::zero();
                for i in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e != 0 {
                        acc = acc + (y[i * h + al].clone() + inc[i * h + al].clone()) * S::from_i64(e);
                    }
                }
                out.t_vv.set(&[al, j, k], acc * S::ratio(1, 2));
            }
        }
    }
    let b_sym = match st.jets {
        Some(_) => {
            let b = b_matrix(st).map_err(|e| ConfError::Curv(e.to_string()))?;
            let uv = sym(&u.vert);
            let inc = uv.sub(&Matrix::identity(3).scale(&uv.trace())).scale(&S::from_i64(8 * n));
            Some(sym(&b).add(&inc))
        }
        None => None,
    };
    Ok(Rescaled { state: out, b_sym })
}

/// Christoffel symbols `Γ̃^a_{bc} = dx^a(∇̃_{∂_b}∂_c)` of the Biquard connection of
/// `e^{2u}η` on the flat model, in the group coordinates.
///
/// The computation is carried in parabolic weight up to `weight`; each symbol is
/// returned truncated to the weight through which it is exact.
pub fn connection_change(dim: Dim, u: &HPoly, weight: i64) -> Result<PolyConnection, ConfError> {
    let bq = Biquard::new(dim, u, weight)?;
    let h = dim.h();
    let d = dim.total();
    let acs = standard_acs::<crate::scalar::Rational>(dim);
    let exact = |p: HPoly| Series::exact(p, weight + 2);
    let one = || HPoly::constant(dim, crate::scalar::Rational::one());
    // Flat fields in coordinates: e[K][a] = dx^a(E_K).
    let mut e = vec![vec![HPoly::zero(dim); d]; d];
    // Coordinate fields in the flat frame: p[b][K] with ∂_b = Σ p[b][K] E_K.
    let mut p = vec![vec![HPoly::zero(dim); d]; d];
    for al in 0..h {
        e[al][al] = one();
        p[al][al] = one();
        for i in 0..3 {
            let mut lin = HPoly::zero(dim);
            for be in 0..h {
                let c = acs.get(i, be, al);
                if !c.is_zero() {
                    lin = lin.add(&HPoly::var(dim, be).scale(c));
                }
            }
            e[al][h + i] = lin.scale(&crate::scalar::Rational::from_i64(2));
            p[al][h + i] = lin.scale(&crate::scalar::Rational::from_i64(-1));
        }
    }
    for i in 0..3 {
        e[h + i][h + i] = HPoly::constant(dim, crate::scalar::Rational::from_i64(2));
        p[h + i][h + i] = HPoly::constant(dim, crate::scalar::Rational::ratio(1, 2));
    }
    let zero = Series::zero(dim, weight);
    // φ[c][A] = θ̃^A(∂_c)
    let phi: Vec<Vec<Series>> = (0..d)
        .map(|c| {
            (0..d)
                .map(|a| {
                    (0..d).fold(zero.clone(), |acc, k| {
                        if p[c][k].is_zero() {
                            acc
                        } else {
                            acc.add(&bq.coframe(a, k).mul(&exact(p[c][k].clone())))
                        }
                    })
                })
                .collect()
        })
        .collect();
    // x[D][a] = dx^a(ẽ_D)
    let xd: Vec<Vec<Series>> = (0..d)
        .map(|dd| {
            (0..d)
                .map(|a| {
                    (0..d).fold(zero.clone(), |acc, k| {
                        if e[k][a].is_zero() {
                            acc
                        } else {
                            acc.add(&bq.frame(dd, k).mul(&exact(e[k][a].clone())))
                        }
                    })
                })
                .collect()
        })
        .collect();
    let fields = crate::poly::FlatFields::new(dim);
    let mut gamma = BTreeMap::new();
    for b in 0..d {
        // Ω[D][A] = Σ_E φ_b^E ω^D_A(ẽ_E)
        let omega: Vec<Vec<Series>> = (0..d)
            .map(|dd| {
                (0..d)
                    .map(|a| {
                        (0..d).fold(zero.clone(), |acc, ee| acc.add(&phi[b][ee].mul(bq.omega(ee, dd, a))))
                    })
                    .collect()
            })
            .collect();
        for c in 0..d {
            // V^D = ∂_b φ_c^D + Σ_A φ_c^A Ω[D][A]
            let v: Vec<Series> = (0..d)
                .map(|dd| {
                    let mut acc = (0..d).fold(zero.clone(), |acc, k| {
                        if p[b][k].is_zero() {
                            acc
                        } else {
                            acc.add(&exact(p[b][k].clone()).mul(&phi[c][dd].field(&fields, k)))
                        }
                    });
                    for a in 0..d {
                        acc = acc.add(&phi[c][a].mul(&omega[dd][a]));
                    }
                    acc
                })
                .collect();
            for a in 0..d {
                let g = (0..d).fold(zero.clone(), |acc, dd| acc.add(&v[dd].mul(&xd[dd][a])));
                if g.valid < 0 {
                    return Err(ConfError::Truncated(format!("Γ^{a}_{{{b}{c}}} needs a larger weight")));
                }
                gamma.insert((a, b, c), g.poly);
            }
        }
    }
    Ok(PolyConnection::new(dim, gamma))
}

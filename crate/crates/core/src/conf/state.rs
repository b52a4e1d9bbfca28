//! Pointwise curvature data of the engine at the origin.

use super::biquard::Biquard;
use crate::curv::{a_operator, Jets, PointState};
use crate::linalg::Matrix;
use crate::poly::Series;
use crate::qalg::{standard_acs, Axis, Tensor};
use crate::scalar::{Rational, Scalar};

impl Biquard {
    /// `τ` and `μ` as rank-two fields over the combined index (zero off `H⊗H`),
    /// extracted from `T_i = ¼(I_iτ − τI_i) + I_iμ` as `τ = Σ_i sym(T_i)I_i`
    /// and `μ = −I₁ anti(T₁)`.
    pub fn torsion_fields(&self) -> (Vec<Series>, Vec<Series>) {
        let h = self.dim.h();
        let d = self.total();
        let acs = standard_acs::<Rational>(self.dim);
        let half = Rational::ratio(1, 2);
        let t = |i: usize, a: usize, b: usize| self.torsion(a, h + i, b);
        let zero = Series::zero(self.dim, self.weight);
        let mut tau = vec![zero.clone(); d * d];
        let mut mu = vec![zero.clone(); d * d];
        for a in 0..h {
            for b in 0..h {
                let mut acc = zero.clone();
                for i in 0..3 {
                    for g in 0..h {
                        let c = acs.get(i, g, b);
                        if !c.is_zero() {
                            acc = acc.add(&t(i, a, g).add(&t(i, g, a)).scale(&(half.clone() * c.clone())));
                        }
                    }
                }
                tau[a * d + b] = acc;
                let mut acc = zero.clone();
                for g in 0..h {
                    let c = acs.get(0, a, g);
                    if !c.is_zero() {
                        acc = acc.sub(&t(0, g, b).sub(&t(0, b, g)).scale(&(half.clone() * c.clone())));
                    }
                }
                mu[a * d + b] = acc;
            }
        }
        (tau, mu)
    }

    /// `S = Σ R_{βααβ}`.
    pub fn scalar_field(&self) -> Series {
        let h = self.dim.h();
        let mut s = Series::zero(self.dim, self.weight);
        for a in 0..h {
            for b in 0..h {
                s = s.add(&self.curvature(b, a, a, b));
            }
        }
        s
    }

    /// `T_{βkl}` as a rank-three field, zero off `H⊗V⊗V`.
    pub fn vertical_torsion_field(&self) -> Vec<Series> {
        let h = self.dim.h();
        let d = self.total();
        let mut out = vec![Series::zero(self.dim, self.weight); d * d * d];
        for b in 0..h {
            for k in 0..3 {
                for l in 0..3 {
                    out[(b * d + h + k) * d + h + l] = self.torsion(b, h + k, h + l);
                }
            }
        }
        out
    }

    /// The primitive curvature data at the origin. `None` when the truncation
    /// weight is too low for the requested entries.
    pub fn point_state(&self, curvature: bool, jets: bool) -> Option<PointState<Rational>> {
        let h = self.dim.h();
        let at = |s: Series| s.value_at_origin();
        let (tau_f, mu_f) = self.torsion_fields();
        let s_f = self.scalar_field();
        let tvv_f = self.vertical_torsion_field();
        let d = self.total();
        let mut tau = Matrix::zeros(h, h);
        let mut mu = Matrix::zeros(h, h);
        for a in 0..h {
            for b in 0..h {
                tau[(a, b)] = at(tau_f[a * d + b].clone())?;
                mu[(a, b)] = at(mu_f[a * d + b].clone())?;
            }
        }
        let mut st = PointState::from_torsion(self.dim, tau, mu, at(s_f.clone())?);
        st.lambda = at(self.torsion(h + 2, h, h + 1))?;
        let mut t_vv = Tensor::zeros(vec![Axis::h(h), Axis::v(), Axis::v()]);
        for b in 0..h {
            for k in 0..3 {
                for l in 0..3 {
                    t_vv.set(&[b, k, l], at(tvv_f[(b * d + h + k) * d + h + l].clone())?);
                }
            }
        }
        st.t_vv = t_vv;
        if curvature {
            let mut r = Tensor::zeros(vec![Axis::h(h); 4]);
            for a in 0..h {
                for b in (a + 1)..h {
                    for c in 0..h {
                        for e in (c + 1)..h {
                            let v = self.curvature_at_origin(a, b, c, e)?;
                            r.set(&[a, b, c, e], v.clone());
                            r.set(&[b, a, c, e], -v.clone());
                            r.set(&[a, b, e, c], -v.clone());
                            r.set(&[b, a, e, c], v);
                        }
                    }
                }
            }
            st.r_hhhh = Some(r);
        }
        if jets {
            let mut ft = self.field(2, tau_f);
            let mut fm = self.field(2, mu_f);
            let mut fs = self.field(0, vec![s_f]);
            let mut fv = self.field(3, tvv_f);
            let mut j = Jets::zero(self.dim);
            for a in 0..h {
                for b in 0..h {
                    for g in 0..h {
                        j.tau.set(&[a, b, g], ft.at_origin(&[a, b, g])?);
                        j.mu.set(&[a, b, g], fm.at_origin(&[a, b, g])?);
                    }
                }
                j.s_h[a] = fs.at_origin(&[a])?;
                for k in 0..3 {
                    for l in 0..3 {
                        for g in 0..h {
                            j.t_vv.set(&[a, k, l, g], fv.at_origin(&[a, h + k, h + l, g])?);
                        }
                    }
                }
            }
            for i in 0..3 {
                j.s_v[i] = fs.at_origin(&[h + i])?;
            }
            st.jets = Some(j);
        }
        Some(st)
    }
}

impl Biquard {
    /// The tensor `Q` as a rank-two field over the combined index. The block
    /// `Q_{ij}` has order four, so it is only evaluated at the origin and only
    /// when `vertical_block` is set; otherwise it is left unknown.
    pub fn q_field(&self, vertical_block: bool) -> Option<Vec<Series>> {
        let h = self.dim.h();
        let d = self.total();
        let n = self.dim.n() as i64;
        let acs = standard_acs::<Rational>(self.dim);
        let (tau, mu) = self.torsion_fields();
        let s = self.scalar_field();
        let tvv = self.vertical_torsion_field();
        let zero = Series::zero(self.dim, self.weight);
        let mut q = vec![zero.clone(); d * d];
        let trace = s.scale(&(Rational::ratio(1, 32 * n * (n + 2)) + Rational::ratio(1, 8 * (n + 2))));
        for a in 0..h {
            for b in 0..h {
                let mut v = tau[a * d + b].scale(&Rational::ratio(1, 2)).add(&mu[a * d + b]);
                if a == b {
                    v = v.add(&trace);
                }
                q[a * d + b] = v;
            }
        }
        // Y_{jβ} = T_{βkl}ε_{jkl}
        let y: Vec<Series> = (0..3 * h)
            .map(|r| {
                let (j, be) = (r / h, r % h);
                let (k, l) = ((j + 1) % 3, (j + 2) % 3);
                let t = |k: usize, l: usize| &tvv[(be * d + h + k) * d + h + l];
                t(k, l).sub(t(l, k))
            })
            .collect();
        let (_, ainv) = a_operator::<Rational>(self.dim);
        for i in 0..3 {
            for a in 0..h {
                let mut acc = zero.clone();
                for (c, yc) in y.iter().enumerate() {
                    let coef = &ainv[(i * h + a, c)];
                    if !coef.is_zero() {
                        acc = acc.sub(&yc.scale(coef));
                    }
                }
                q[a * d + h + i] = acc.clone();
                q[(h + i) * d + a] = acc;
            }
        }
        if !vertical_block {
            for i in 0..3 {
                for j in 0..3 {
                    q[(h + i) * d + h + j] = Series::zero(self.dim, -1);
                }
            }
            return Some(q);
        }
        // C_{klj} = R_{klαβ}I_{jαβ}, B_{ij} = ε_{kli}C_{klj}
        let mut c = vec![Rational::zero(); 27];
        for k in 0..3 {
            for l in 0..3 {
                if k == l {
                    continue;
                }
                for a in 0..h {
                    for b in 0..h {
                        let r = self.curvature_at_origin(h + k, h + l, a, b)?;
                        if r.is_zero() {
                            continue;
                        }
                        for j in 0..3 {
                            let ii = acs.get(j, a, b);
                            if !ii.is_zero() {
                                c[(k * 3 + l) * 3 + j] = c[(k * 3 + l) * 3 + j].clone() + r.clone() * ii.clone();
                            }
                        }
                    }
                }
            }
        }
        let b = |i: usize, j: usize| {
            let (k, l) = ((i + 1) % 3, (i + 2) % 3);
            c[(k * 3 + l) * 3 + j].clone() - c[(l * 3 + k) * 3 + j].clone()
        };
        // Q_ij = −(1/8n)(B_(ij) − ½ tr B δ_ij)
        let coef = Rational::ratio(-1, 16 * n);
        let tr = (0..3).fold(Rational::zero(), |acc, i| acc + b(i, i));
        for i in 0..3 {
            for j in 0..3 {
                let mut v = b(i, j) + b(j, i);
                if i == j {
                    v = v - tr.clone();
                }
                let v = v * coef.clone();
                q[(h + i) * d + h + j] = Series::constant(self.dim, v, 0);
            }
        }
        Some(q)
    }
}

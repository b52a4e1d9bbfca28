//! The Biquard connection of `η̃ = e^{2u}η` on the flat model, as truncated series
//! in the group coordinates.
//!
//! Frame, in terms of the left-invariant `{X_α, T_i}`:
//! `ξ̃_α = e^{−u}X_α`, `R̃_i = e^{−2u}(T_i − v_i^α X_α)` with `v_i^α = I_{iαβ}X_βu`.
//! Coframe: `θ̃^α = e^u(θ^α + v_i^α η^i)`, `η̃^i = e^{2u}η^i`.
//!
//! The connection is `∇_{ẽ_A}ẽ_C = ω^D_C(A)ẽ_D`. On `H` it takes values in
//! `sp(n) ⊕ sp(1)`: the horizontal part is the unique `so(4n)` solution of
//! `T^γ_{αβ} = 0`, the Reeb part is the projection of `c^γ_{iβ}` onto
//! `sp(n) ⊕ sp(1)`. On `V` it is induced from the `sp(1)` part through `ξ_i ↔ I_i`.

use std::collections::HashMap;

use super::ConfError;
use crate::poly::{FlatFields, HPoly, Series};
use crate::qalg::{levi_civita, standard_acs, Dim};
use crate::scalar::{Rational, Scalar};

type Sparse = Vec<(usize, usize, i64)>;

pub struct Biquard {
    pub dim: Dim,
    pub weight: i64,
    fields: FlatFields,
    d: usize,
    acs: [Sparse; 3],
    // frame[A][K]: coefficient of the flat field E_K in ẽ_A.
    frame: Vec<Vec<Series>>,
    // coframe[A][K] = θ̃^A(E_K)
    coframe: Vec<Vec<Series>>,
    // (C, A, B) ↦ c^C_{AB}
    c: Vec<Series>,
    // (A, D, C) ↦ ω^D_C(ẽ_A)
    omega: Vec<Series>,
}

fn sparse_acs(dim: Dim) -> [Sparse; 3] {
    let acs = standard_acs::<Rational>(dim);
    let h = dim.h();
    let one = |k: usize| {
        let mut v = Vec::new();
        for a in 0..h {
            for b in 0..h {
                let x = acs.get(k, a, b);
                if !x.is_zero() {
                    v.push((a, b, if *x > Rational::zero() { 1 } else { -1 }));
                }
            }
        }
        v
    };
    [one(0), one(1), one(2)]
}

// Entries of the frame that are not identically zero; the coframe has the transposed pattern.
fn frame_entry(h: usize, a: usize, k: usize) -> bool {
    a == k || (a >= h && k < h)
}

fn add_into(acc: &mut Series, x: &Series) {
    *acc = acc.add(x);
}

fn scaled(x: &Series, k: i64) -> Series {
    match k {
        1 => x.clone(),
        -1 => x.neg(),
        _ => x.scale(&Rational::from_i64(k)),
    }
}

impl Biquard {
    /// Builds the connection of `e^{2u}η`; series are exact through weight `weight`.
    pub fn new(dim: Dim, u: &HPoly, weight: i64) -> Result<Self, ConfError> {
        if !u.value_at_origin().is_zero() {
            return Err(ConfError::NonzeroAtOrigin);
        }
        let h = dim.h();
        let d = dim.total();
        let fields = FlatFields::new(dim);
        let acs = sparse_acs(dim);
        let us = Series::exact(u.clone(), weight);
        let e_pu = us.exp();
        let e_mu = us.neg().exp();
        let e_m2u = e_mu.mul(&e_mu);
        let du: Vec<Series> = (0..h).map(|b| us.x(&fields, b)).collect();
        // v[i][α] = Σ_β I_{iαβ} X_β u
        let mut v = vec![vec![Series::zero(dim, weight); h]; 3];
        for (k, tab) in acs.iter().enumerate() {
            for &(a, b, s) in tab {
                add_into(&mut v[k][a], &scaled(&du[b], s));
            }
        }
        let zero = Series::zero(dim, weight);
        let mut frame = vec![vec![zero.clone(); d]; d];
        for a in 0..h {
            frame[a][a] = e_mu.clone();
        }
        for i in 0..3 {
            frame[h + i][h + i] = e_m2u.clone();
            for a in 0..h {
                frame[h + i][a] = e_m2u.mul(&v[i][a]).neg();
            }
        }
        let mut coframe = vec![vec![zero.clone(); d]; d];
        let e_p2u = e_pu.mul(&e_pu);
        for a in 0..h {
            coframe[a][a] = e_pu.clone();
            for i in 0..3 {
                coframe[a][h + i] = e_pu.mul(&v[i][a]);
            }
        }
        for i in 0..3 {
            coframe[h + i][h + i] = e_p2u.clone();
        }

        // dframe[L][B][K] = E_L(F_B^K)
        let dframe: Vec<Vec<Vec<Series>>> = (0..d)
            .map(|l| (0..d).map(|b| (0..d).map(|k| frame[b][k].field(&fields, l)).collect()).collect())
            .collect();
        let mut c = vec![zero.clone(); d * d * d];
        for a in 0..d {
            for b in (a + 1)..d {
                let mut br = vec![zero.clone(); d];
                for (k, brk) in br.iter_mut().enumerate() {
                    for l in 0..d {
                        if frame_entry(h, a, l) {
                            add_into(brk, &frame[a][l].mul(&dframe[l][b][k]));
                        }
                        if frame_entry(h, b, l) {
                            *brk = brk.sub(&frame[b][l].mul(&dframe[l][a][k]));
                        }
                    }
                }
                // [X_α, X_β] = 2 I_{iαβ} T_i
                for (i, tab) in acs.iter().enumerate() {
                    for &(al, be, s) in tab {
                        if !frame_entry(h, a, al) || !frame_entry(h, b, be) {
                            continue;
                        }
                        let p = frame[a][al].mul(&frame[b][be]);
                        add_into(&mut br[h + i], &scaled(&p, 2 * s));
                    }
                }
                for cc in 0..d {
                    let mut acc = zero.clone();
                    for (k, brk) in br.iter().enumerate() {
                        if frame_entry(h, k, cc) {
                            add_into(&mut acc, &coframe[cc][k].mul(brk));
                        }
                    }
                    c[(cc * d + b) * d + a] = acc.neg();
                    c[(cc * d + a) * d + b] = acc;
                }
            }
        }
        let mut bq = Biquard { dim, weight, fields, d, acs, frame, coframe, c, omega: vec![zero; d * d * d] };
        bq.solve_connection();
        Ok(bq)
    }

    pub fn total(&self) -> usize {
        self.d
    }

    /// Coefficient of the flat field `E_K` in `ẽ_A`.
    pub fn frame(&self, a: usize, k: usize) -> &Series {
        &self.frame[a][k]
    }

    /// `θ̃^A(E_K)`.
    pub fn coframe(&self, a: usize, k: usize) -> &Series {
        &self.coframe[a][k]
    }

    pub fn structure(&self, cc: usize, a: usize, b: usize) -> &Series {
        &self.c[(cc * self.d + a) * self.d + b]
    }

    /// `ω^D_C(ẽ_A)`.
    pub fn omega(&self, a: usize, dd: usize, cc: usize) -> &Series {
        &self.omega[(a * self.d + dd) * self.d + cc]
    }

    fn set_omega(&mut self, a: usize, dd: usize, cc: usize, s: Series) {
        let d = self.d;
        self.omega[(a * d + dd) * d + cc] = s;
    }

    /// `ẽ_A f`.
    pub fn apply(&self, a: usize, f: &Series) -> Series {
        let mut acc = Series::zero(self.dim, f.valid);
        for (k, fk) in self.frame[a].iter().enumerate() {
            if frame_entry(self.dim.h(), a, k) {
                add_into(&mut acc, &fk.mul(&f.field(&self.fields, k)));
            }
        }
        acc
    }

    /// `a_k(X) = −tr(I_k X)/4n`, the `sp(1)` coefficients of an `h × h` matrix.
    fn sp1_part(&self, m: &[Vec<Series>]) -> [Series; 3] {
        let q = Rational::ratio(-1, 4 * self.dim.n() as i64);
        let mut out: [Series; 3] = std::array::from_fn(|_| Series::zero(self.dim, self.weight));
        for (k, tab) in self.acs.iter().enumerate() {
            // tr(I_k X) = Σ (I_k)_{βγ} X_{γβ}
            for &(b, g, s) in tab {
                add_into(&mut out[k], &scaled(&m[g][b], s));
            }
            out[k] = out[k].scale(&q);
        }
        out
    }

    /// `I_k X I_k` for a constant structure `I_k`.
    fn sandwich(&self, k: usize, m: &[Vec<Series>]) -> Vec<Vec<Series>> {
        let h = self.dim.h();
        let mut left = vec![vec![Series::zero(self.dim, self.weight); h]; h];
        for &(a, b, s) in &self.acs[k] {
            for g in 0..h {
                left[a][g] = left[a][g].add(&scaled(&m[b][g], s));
            }
        }
        let mut out = vec![vec![Series::zero(self.dim, self.weight); h]; h];
        for &(a, b, s) in &self.acs[k] {
            for r in 0..h {
                out[r][b] = out[r][b].add(&scaled(&left[r][a], s));
            }
        }
        out
    }

    /// Orthogonal projection onto `sp(n) ⊕ sp(1)` and the `sp(1)` coefficients.
    fn project_g(&self, m: &[Vec<Series>]) -> (Vec<Vec<Series>>, [Series; 3]) {
        let h = self.dim.h();
        let half = Rational::ratio(1, 2);
        let anti: Vec<Vec<Series>> =
            (0..h).map(|a| (0..h).map(|b| m[a][b].sub(&m[b][a]).scale(&half)).collect()).collect();
        let a_k = self.sp1_part(&anti);
        // Q8-average gives the commutant: ¼(X − Σ I_k X I_k).
        let mut spn = anti.clone();
        for k in 0..3 {
            let s = self.sandwich(k, &anti);
            for a in 0..h {
                for b in 0..h {
                    spn[a][b] = spn[a][b].sub(&s[a][b]);
                }
            }
        }
        let quarter = Rational::ratio(1, 4);
        let mut out = spn;
        for row in out.iter_mut() {
            for x in row.iter_mut() {
                *x = x.scale(&quarter);
            }
        }
        for (k, tab) in self.acs.iter().enumerate() {
            for &(a, b, s) in tab {
                out[a][b] = out[a][b].add(&scaled(&a_k[k], s));
            }
        }
        (out, a_k)
    }

    fn solve_connection(&mut self) {
        let h = self.dim.h();
        let d = self.d;
        let half = Rational::ratio(1, 2);
        for a in 0..d {
            let block: Vec<Vec<Series>> = if a < h {
                // ω_{γβ}(α) = ½(c_{γαβ} + c_{βγα} − c_{αβγ})
                (0..h)
                    .map(|g| {
                        (0..h)
                            .map(|b| {
                                self.structure(g, a, b)
                                    .add(self.structure(b, g, a))
                                    .sub(self.structure(a, b, g))
                                    .scale(&half)
                            })
                            .collect()
                    })
                    .collect()
            } else {
                let raw: Vec<Vec<Series>> =
                    (0..h).map(|g| (0..h).map(|b| self.structure(g, a, b).clone()).collect()).collect();
                self.project_g(&raw).0
            };
            let a_k = self.sp1_part(&block);
            for g in 0..h {
                for b in 0..h {
                    self.set_omega(a, g, b, block[g][b].clone());
                }
            }
            for i in 0..3 {
                for l in 0..3 {
                    let mut acc = Series::zero(self.dim, self.weight);
                    for (k, ak) in a_k.iter().enumerate() {
                        let e = levi_civita(k, i, l);
                        if e != 0 {
                            add_into(&mut acc, &scaled(ak, 2 * e));
                        }
                    }
                    self.set_omega(a, h + l, h + i, acc);
                }
            }
        }
    }

    /// `‖ω_H(ẽ_α) − proj(ω_H(ẽ_α))‖`: nonzero weights where the horizontal
    /// solution leaves `sp(n) ⊕ sp(1)`.
    pub fn horizontal_holonomy_defect(&self) -> Vec<Series> {
        let h = self.dim.h();
        let mut out = Vec::new();
        for a in 0..h {
            let block: Vec<Vec<Series>> =
                (0..h).map(|g| (0..h).map(|b| self.omega(a, g, b).clone()).collect()).collect();
            let (p, _) = self.project_g(&block);
            for g in 0..h {
                for b in 0..h {
                    out.push(block[g][b].sub(&p[g][b]));
                }
            }
        }
        out
    }

    /// `T^C_{AB} = ω^C_B(A) − ω^C_A(B) − c^C_{AB}`.
    pub fn torsion(&self, cc: usize, a: usize, b: usize) -> Series {
        self.omega(a, cc, b).sub(self.omega(b, cc, a)).sub(self.structure(cc, a, b))
    }

    /// `R_{ABCD} = θ̃^D(R(ẽ_A, ẽ_B)ẽ_C)`.
    pub fn curvature(&self, a: usize, b: usize, cc: usize, dd: usize) -> Series {
        let d = self.d;
        let mut acc = self.apply(a, self.omega(b, dd, cc)).sub(&self.apply(b, self.omega(a, dd, cc)));
        for e in 0..d {
            let x = self.omega(a, dd, e);
            let y = self.omega(b, e, cc);
            acc = acc.add(&x.mul(y));
            let x = self.omega(b, dd, e);
            let y = self.omega(a, e, cc);
            acc = acc.sub(&x.mul(y));
            let x = self.structure(e, a, b);
            let y = self.omega(e, dd, cc);
            acc = acc.sub(&x.mul(y));
        }
        acc
    }

    /// `R_{ABCD}` at the origin, computing only the weights that reach it.
    pub fn curvature_at_origin(&self, a: usize, b: usize, cc: usize, dd: usize) -> Option<Rational> {
        let h = self.dim.h();
        let apply0 = |x: usize, f: &Series| {
            let mut acc = Series::zero(self.dim, 0);
            for (k, fk) in self.frame[x].iter().enumerate() {
                if frame_entry(h, x, k) {
                    let ord = if k < h { 1 } else { 2 };
                    add_into(&mut acc, &fk.cap(0).mul(&f.cap(ord).field(&self.fields, k)));
                }
            }
            acc
        };
        let mut acc = apply0(a, self.omega(b, dd, cc)).sub(&apply0(b, self.omega(a, dd, cc)));
        for e in 0..self.d {
            acc = acc.add(&self.omega(a, dd, e).cap(0).mul(&self.omega(b, e, cc).cap(0)));
            acc = acc.sub(&self.omega(b, dd, e).cap(0).mul(&self.omega(a, e, cc).cap(0)));
            acc = acc.sub(&self.structure(e, a, b).cap(0).mul(&self.omega(e, dd, cc).cap(0)));
        }
        acc.value_at_origin()
    }

    /// Fields over the combined index, all lower indices, with memoized covariant jets.
    pub fn field(&self, rank: usize, base: Vec<Series>) -> FieldJets<'_> {
        assert_eq!(base.len(), self.d.pow(rank as u32));
        FieldJets { bq: self, rank, base, cache: HashMap::new() }
    }
}

/// A tensor field with lower indices and its iterated covariant derivatives
/// `F_{A,c₁…c_r} = (∇_{c_r}⋯∇_{c₁}F)_A`.
pub struct FieldJets<'a> {
    bq: &'a Biquard,
    rank: usize,
    base: Vec<Series>,
    cache: HashMap<Vec<usize>, Series>,
}

impl<'a> FieldJets<'a> {
    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.bq.d + i)
    }

    pub fn get(&mut self, idx: &[usize]) -> Series {
        if idx.len() == self.rank {
            return self.base[self.flat_index(idx)].clone();
        }
        if let Some(s) = self.cache.get(idx) {
            return s.clone();
        }
        let bq = self.bq;
        let (c, prev) = idx.split_last().expect("nonempty index");
        let mut acc = bq.apply(*c, &self.get(prev));
        let h = bq.dim.h();
        for s in 0..prev.len() {
            let a = prev[s];
            let range = if a < h { 0..h } else { h..bq.d };
            for dd in range {
                let w = bq.omega(*c, dd, a);
                if w.poly.is_zero() && w.valid >= bq.weight {
                    continue;
                }
                let mut j = prev.to_vec();
                j[s] = dd;
                let f = self.get(&j);
                acc = acc.sub(&w.mul(&f));
            }
        }
        self.cache.insert(idx.to_vec(), acc.clone());
        acc
    }

    /// Value at the origin; `None` when the truncation is too short.
    pub fn at_origin(&mut self, idx: &[usize]) -> Option<Rational> {
        self.get(idx).value_at_origin()
    }
}

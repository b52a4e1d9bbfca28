//! Parabolically graded polynomials in `(x^α, t^i)`.
//!
//! Variables are indexed `0..4n+3`, horizontal first. A monomial `x^A t^B` has
//! weight `|A| + 2|B|`.

mod ops;
mod series;
mod taylor;

pub use ops::{
    apply_t, apply_x, build_lm, dim_formula, flat_derivatives, solve_lm, sublaplacian, FlatFields, GradedOperator,
    LmSolver,
};
pub use series::Series;
pub use taylor::{parabolic_taylor, taylor_coefficient};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value};

use crate::qalg::Dim;
use crate::scalar::{format_rational, rational_from_json, Rational, Scalar};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolyError {
    #[error("right-hand side is not homogeneous of weight {0}")]
    NotHomogeneous(usize),
    #[error("m = 2 right-hand side depends on t")]
    TDependentRhs,
    #[error("operator order must be at least 2, got {0}")]
    BadOrder(usize),
    #[error("L_{0} is singular on the graded space")]
    Singular(usize),
    #[error("missing derivative for multi-index {0:?}")]
    MissingDerivative(Vec<usize>),
    #[error("exponent overflow in monomial")]
    ExponentOverflow,
    #[error("polynomial json: {0}")]
    Json(String),
}

const BITS: u32 = 4;
const MASK: u128 = 0xf;
pub const MAX_VARS: usize = 32;
pub const MAX_EXP: u8 = 15;

/// Packed exponent vector, four bits per variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Mono(pub u128);

impl Mono {
    pub const ONE: Mono = Mono(0);

    pub fn var(a: usize) -> Self {
        Mono(1u128 << (BITS as usize * a))
    }

    pub fn from_exps(exps: &[u8]) -> Self {
        assert!(exps.len() <= MAX_VARS);
        let mut m = 0u128;
        for (a, &e) in exps.iter().enumerate() {
            assert!(e <= MAX_EXP, "exponent too large");
            m |= (e as u128) << (BITS as usize * a);
        }
        Mono(m)
    }

    pub fn exp(self, a: usize) -> u8 {
        ((self.0 >> (BITS as usize * a)) & MASK) as u8
    }

    pub fn exps(self, nvars: usize) -> Vec<u8> {
        (0..nvars).map(|a| self.exp(a)).collect()
    }

    pub fn degree(self) -> usize {
        (0..MAX_VARS).map(|a| self.exp(a) as usize).sum()
    }

    /// Parabolic weight, given the number of horizontal variables.
    pub fn weight(self, h: usize) -> usize {
        (0..h).map(|a| self.exp(a) as usize).sum::<usize>() + 2 * (h..h + 3).map(|a| self.exp(a) as usize).sum::<usize>()
    }

    pub fn t_degree(self, h: usize) -> usize {
        (h..h + 3).map(|a| self.exp(a) as usize).sum()
    }

    pub fn mul(self, other: Mono) -> Option<Mono> {
        // Nibble-wise add with overflow detection.
        let s = self.0.wrapping_add(other.0);
        let carry_free = (0..MAX_VARS).all(|a| self.exp(a) as u16 + other.exp(a) as u16 <= MAX_EXP as u16);
        carry_free.then_some(Mono(s))
    }

    /// Divides by `x_a`, returning the former exponent.
    pub fn lower(self, a: usize) -> Option<(u8, Mono)> {
        let e = self.exp(a);
        (e > 0).then(|| (e, Mono(self.0 - (1u128 << (BITS as usize * a)))))
    }

    pub fn raise(self, a: usize) -> Mono {
        assert!(self.exp(a) < MAX_EXP, "exponent overflow");
        Mono(self.0 + (1u128 << (BITS as usize * a)))
    }

    /// Graded lexicographic order: by weight, then larger exponents of earlier
    /// variables first (so x before t).
    pub fn graded_cmp(self, other: Mono, h: usize) -> Ordering {
        self.weight(h).cmp(&other.weight(h)).then_with(|| {
            for a in 0..h + 3 {
                match other.exp(a).cmp(&self.exp(a)) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e: Vec<u8> = (0..MAX_VARS).map(|a| self.exp(a)).collect();
        let last = e.iter().rposition(|&x| x != 0).map_or(0, |p| p + 1);
        write!(f, "Mono{:?}", &e[..last])
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

/// Sparse polynomial with exact rational coefficients; zero terms are never stored.
#[derive(Clone, PartialEq)]
pub struct HPoly {
    pub dim: Dim,
    pub terms: BTreeMap<Mono, Rational>,
}

impl fmt::Debug for HPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for HPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let h = self.dim.h();
        let mut first = true;
        for (m, c) in self.sorted_terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", format_rational(&c))?;
            for a in 0..h + 3 {
                let e = m.exp(a);
                if e == 0 {
                    continue;
                }
                let name = if a < h { format!("x{}", a + 1) } else { format!("t{}", a - h + 1) };
                if e == 1 {
                    write!(f, "*{name}")?;
                } else {
                    write!(f, "*{name}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl HPoly {
    pub fn zero(dim: Dim) -> Self {
        HPoly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: Dim, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Mono::ONE, c);
        p
    }

    /// The coordinate function `x^a` (or `t^{a-4n}`).
    pub fn var(dim: Dim, a: usize) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Mono::var(a), Rational::one());
        p
    }

    pub fn monomial(dim: Dim, m: Mono, c: Rational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(m, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.dim.total()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn coeff(&self, m: Mono) -> Rational {
        self.terms.get(&m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn sorted_terms(&self) -> Vec<(Mono, Rational)> {
        let h = self.dim.h();
        let mut v: Vec<_> = self.terms.iter().map(|(m, c)| (*m, c.clone())).collect();
        v.sort_by(|a, b| a.0.graded_cmp(b.0, h));
        v
    }

    pub fn add(&self, other: &HPoly) -> HPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &HPoly) -> HPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> HPoly {
        if s.is_zero() {
            return HPoly::zero(self.dim);
        }
        HPoly { dim: self.dim, terms: self.terms.iter().map(|(m, c)| (*m, c * s)).collect() }
    }

    pub fn mul(&self, other: &HPoly) -> HPoly {
        self.mul_truncated(other, usize::MAX)
    }

    /// Product with all terms of weight above `max_weight` dropped.
    pub fn mul_truncated(&self, other: &HPoly, max_weight: usize) -> HPoly {
        let h = self.dim.h();
        let mut out = HPoly::zero(self.dim);
        let b: Vec<(Mono, usize, &Rational)> = other.terms.iter().map(|(m, c)| (*m, m.weight(h), c)).collect();
        for (ma, ca) in &self.terms {
            let wa = ma.weight(h);
            if wa > max_weight {
                continue;
            }
            for (mb, wb, cb) in &b {
                if wa + wb > max_weight {
                    continue;
                }
                let m = ma.mul(*mb).expect("monomial exponent overflow");
                out.add_term(m, ca * *cb);
            }
        }
        out
    }

    pub fn truncate(&self, max_weight: usize) -> HPoly {
        let h = self.dim.h();
        HPoly {
            dim: self.dim,
            terms: self.terms.iter().filter(|(m, _)| m.weight(h) <= max_weight).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    pub fn homogeneous_part(&self, m: usize) -> HPoly {
        let h = self.dim.h();
        HPoly {
            dim: self.dim,
            terms: self.terms.iter().filter(|(mo, _)| mo.weight(h) == m).map(|(mo, c)| (*mo, c.clone())).collect(),
        }
    }

    pub fn max_weight(&self) -> Option<usize> {
        let h = self.dim.h();
        self.terms.keys().map(|m| m.weight(h)).max()
    }

    pub fn min_weight(&self) -> Option<usize> {
        let h = self.dim.h();
        self.terms.keys().map(|m| m.weight(h)).min()
    }

    pub fn is_homogeneous(&self, m: usize) -> bool {
        let h = self.dim.h();
        self.terms.keys().all(|mo| mo.weight(h) == m)
    }

    pub fn depends_on_t(&self) -> bool {
        let h = self.dim.h();
        self.terms.keys().any(|m| m.t_degree(h) > 0)
    }

    /// `∂/∂x^a`.
    pub fn partial(&self, a: usize) -> HPoly {
        let mut out = HPoly::zero(self.dim);
        for (m, c) in &self.terms {
            if let Some((e, low)) = m.lower(a) {
                out.add_term(low, c * Rational::from_i64(e as i64));
            }
        }
        out
    }

    /// Euler-type derivation `x^α∂_α + 2t^i∂_i`, which multiplies weight-m parts by m.
    pub fn euler(&self) -> HPoly {
        let h = self.dim.h();
        HPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.weight(h) > 0)
                .map(|(m, c)| (*m, c * Rational::from_i64(m.weight(h) as i64)))
                .collect(),
        }
    }

    pub fn eval<S: Scalar>(&self, point: &[S]) -> S {
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let mut v = S::from_rational(c);
            for (a, x) in point.iter().enumerate() {
                for _ in 0..m.exp(a) {
                    v = v * x.clone();
                }
            }
            acc = acc + v;
        }
        acc
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut v = Scalar::to_f64(c);
            for (a, x) in point.iter().enumerate() {
                let e = m.exp(a);
                if e > 0 {
                    v *= x.powi(e as i32);
                }
            }
            acc += v;
        }
        acc
    }

    pub fn value_at_origin(&self) -> Rational {
        self.coeff(Mono::ONE)
    }

    pub fn to_json(&self) -> Value {
        let h = self.dim.h();
        Value::Array(
            self.sorted_terms()
                .into_iter()
                .map(|(m, c)| {
                    let e = m.exps(h + 3);
                    json!({"A": &e[..h], "B": &e[h..], "coeff": format_rational(&c)})
                })
                .collect(),
        )
    }

    pub fn from_json(dim: Dim, v: &Value) -> Result<HPoly, PolyError> {
        let bad = |s: &str| PolyError::Json(s.to_string());
        let arr = v.as_array().ok_or_else(|| bad("expected an array of terms"))?;
        let mut p = HPoly::zero(dim);
        for t in arr {
            let exps = |key: &str, len: usize| -> Result<Vec<u8>, PolyError> {
                let a = t[key].as_array().ok_or_else(|| bad(&format!("missing {key}")))?;
                if a.len() != len {
                    return Err(bad(&format!("{key} must have length {len}")));
                }
                a.iter()
                    .map(|e| {
                        e.as_u64().filter(|&x| x <= MAX_EXP as u64).map(|x| x as u8).ok_or_else(|| bad("bad exponent"))
                    })
                    .collect()
            };
            let mut e = exps("A", dim.h())?;
            e.extend(exps("B", 3)?);
            let c = rational_from_json(&t["coeff"]).map_err(|e| bad(&e.to_string()))?;
            p.add_term(Mono::from_exps(&e), c);
        }
        Ok(p)
    }
}


/// All monomials of weight exactly `m`, in graded lexicographic order.
pub fn monomials_of_weight(dim: Dim, m: usize) -> Vec<Mono> {
    let h = dim.h();
    let nv = h + 3;
    let mut out = Vec::new();
    let mut exps = vec![0u8; nv];
    fn rec(a: usize, left: usize, h: usize, nv: usize, exps: &mut Vec<u8>, out: &mut Vec<Mono>) {
        if a == nv {
            if left == 0 {
                out.push(Mono::from_exps(exps));
            }
            return;
        }
        let w = if a < h { 1 } else { 2 };
        let max = (left / w).min(MAX_EXP as usize);
        for e in (0..=max).rev() {
            exps[a] = e as u8;
            rec(a + 1, left - e * w, h, nv, exps, out);
        }
        exps[a] = 0;
    }
    rec(0, m, h, nv, &mut exps, &mut out);
    out.sort_by(|a, b| a.graded_cmp(*b, h));
    out
}

/// Random polynomial in `𝒫_m` with small rational coefficients.
pub fn random_homogeneous<R: rand::Rng + ?Sized>(dim: Dim, m: usize, rng: &mut R) -> HPoly {
    let mut p = HPoly::zero(dim);
    for mono in monomials_of_weight(dim, m) {
        if rng.gen_bool(0.6) {
            p.add_term(mono, Rational::sample(rng));
        }
    }
    p
}

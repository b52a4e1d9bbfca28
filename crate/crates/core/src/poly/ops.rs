use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;

use super::{monomials_of_weight, HPoly, Mono, PolyError};
use crate::linalg::{Matrix, SparseLu, SparseRow};
use crate::qalg::{standard_acs, Dim};
use crate::scalar::{Rational, Scalar};

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, j| acc * (n - j) / (j + 1))
}

/// Closed form for `dim 𝒫_m`.
pub fn dim_formula(dim: Dim, m: usize) -> usize {
    let h = dim.h();
    (0..=m / 2)
        .map(|j| {
            let r = m - 2 * j;
            let x_count = if r == 0 { 1 } else { binom(h + r - 1, r) };
            x_count * binom(j + 2, 2)
        })
        .sum()
}

/// The left-invariant frame of the flat model acting on polynomials.
#[derive(Clone, Debug)]
pub struct FlatFields {
    pub dim: Dim,
    // For each α: the terms (i, β, 2I_{iβα}) of the vertical part of X_α.
    vert: Vec<Vec<(usize, usize, i64)>>,
}

impl FlatFields {
    pub fn new(dim: Dim) -> Self {
        let acs = standard_acs::<Rational>(dim);
        let h = dim.h();
        let vert = (0..h)
            .map(|alpha| {
                let mut v = Vec::new();
                for i in 0..3 {
                    for beta in 0..h {
                        let c = acs.get(i, beta, alpha);
                        if !c.is_zero() {
                            v.push((i, beta, 2 * c.to_integer().to_i64().expect("small structure constant")));
                        }
                    }
                }
                v
            })
            .collect();
        FlatFields { dim, vert }
    }

    /// `X_α f`.
    pub fn x(&self, alpha: usize, f: &HPoly) -> HPoly {
        let h = self.dim.h();
        let mut out = HPoly::zero(self.dim);
        for (m, c) in &f.terms {
            if let Some((e, low)) = m.lower(alpha) {
                out.add_term(low, c * Rational::from_i64(e as i64));
            }
            for &(i, beta, k) in &self.vert[alpha] {
                if let Some((e, low)) = m.lower(h + i) {
                    out.add_term(low.raise(beta), c * Rational::from_i64(k * e as i64));
                }
            }
        }
        out
    }

    /// `T_i f = 2∂_{t_i} f`.
    pub fn t(&self, i: usize, f: &HPoly) -> HPoly {
        f.partial(self.dim.h() + i).scale(&Rational::from_i64(2))
    }

    /// Combined-index field: `X_a` for `a < 4n`, `T_{a−4n}` otherwise.
    pub fn field(&self, a: usize, f: &HPoly) -> HPoly {
        let h = self.dim.h();
        if a < h {
            self.x(a, f)
        } else {
            self.t(a - h, f)
        }
    }

    /// `ℒ₀ f = −Σ_α X_α X_α f`.
    pub fn sublaplacian(&self, f: &HPoly) -> HPoly {
        let mut acc = HPoly::zero(self.dim);
        for alpha in 0..self.dim.h() {
            acc = acc.sub(&self.x(alpha, &self.x(alpha, f)));
        }
        acc
    }

    /// `|x|²ℒ₀u + t^iT_iu − m(m−1)u`.
    pub fn lm(&self, m: usize, u: &HPoly) -> HPoly {
        let h = self.dim.h();
        let mut r2 = HPoly::zero(self.dim);
        for a in 0..h {
            r2.add_term(Mono::var(a).raise(a), Rational::from_i64(1));
        }
        let mut out = r2.mul(&self.sublaplacian(u));
        for i in 0..3 {
            out = out.add(&HPoly::var(self.dim, h + i).mul(&self.t(i, u)));
        }
        out.sub(&u.scale(&Rational::from_i64((m * (m.max(1) - 1)) as i64)))
    }
}

pub fn apply_x(alpha: usize, f: &HPoly) -> HPoly {
    FlatFields::new(f.dim).x(alpha, f)
}

pub fn apply_t(i: usize, f: &HPoly) -> HPoly {
    FlatFields::new(f.dim).t(i, f)
}

pub fn sublaplacian(f: &HPoly) -> HPoly {
    FlatFields::new(f.dim).sublaplacian(f)
}

/// Matrix of an operator on `𝒫_m` over the graded monomial basis.
#[derive(Clone, Debug)]
pub struct GradedOperator {
    pub m: usize,
    pub basis: Vec<Mono>,
    pub matrix: Matrix<Rational>,
}

impl GradedOperator {
    pub fn rows(&self) -> Vec<SparseRow> {
        (0..self.basis.len())
            .map(|r| {
                self.matrix.row(r).iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(c, v)| (c, v.clone())).collect()
            })
            .collect()
    }

    pub fn factor(&self) -> SparseLu {
        SparseLu::factor(self.basis.len(), self.rows())
    }
}

/// Columns of `L_m` applied to each basis monomial in `basis`, restricted to `basis`.
fn lm_rows(fields: &FlatFields, m: usize, basis: &[Mono]) -> Vec<SparseRow> {
    let index: HashMap<Mono, usize> = basis.iter().enumerate().map(|(k, b)| (*b, k)).collect();
    let mut rows = vec![SparseRow::new(); basis.len()];
    for (col, mono) in basis.iter().enumerate() {
        let img = fields.lm(m, &HPoly::monomial(fields.dim, *mono, Rational::from_i64(1)));
        for (mo, c) in img.terms {
            let r = *index.get(&mo).expect("L_m preserves weight and the restricted subspace");
            rows[r].insert(col, c);
        }
    }
    rows
}

pub fn build_lm(dim: Dim, m: usize) -> Result<GradedOperator, PolyError> {
    if m < 2 {
        return Err(PolyError::BadOrder(m));
    }
    let fields = FlatFields::new(dim);
    let basis = monomials_of_weight(dim, m);
    let rows = lm_rows(&fields, m, &basis);
    let mut matrix = Matrix::zeros(basis.len(), basis.len());
    for (r, row) in rows.into_iter().enumerate() {
        for (c, v) in row {
            matrix[(r, c)] = v;
        }
    }
    Ok(GradedOperator { m, basis, matrix })
}

/// Factored `L_m`, reusable across right-hand sides. For `m = 2` the operator is
/// restricted to the x-only subspace `ℛ₂`.
#[derive(Clone, Debug)]
pub struct LmSolver {
    pub dim: Dim,
    pub m: usize,
    pub basis: Vec<Mono>,
    index: HashMap<Mono, usize>,
    lu: SparseLu,
}

impl LmSolver {
    pub fn new(dim: Dim, m: usize) -> Result<Self, PolyError> {
        if m < 2 {
            return Err(PolyError::BadOrder(m));
        }
        let h = dim.h();
        let mut basis = monomials_of_weight(dim, m);
        if m == 2 {
            basis.retain(|b| b.t_degree(h) == 0);
        }
        let fields = FlatFields::new(dim);
        let lu = SparseLu::factor(basis.len(), lm_rows(&fields, m, &basis));
        if lu.is_singular() {
            return Err(PolyError::Singular(m));
        }
        let index = basis.iter().enumerate().map(|(k, b)| (*b, k)).collect();
        Ok(LmSolver { dim, m, basis, index, lu })
    }

    pub fn det(&self) -> &Rational {
        self.lu.det()
    }

    pub fn solve(&self, rhs: &HPoly) -> Result<HPoly, PolyError> {
        if !rhs.is_homogeneous(self.m) {
            return Err(PolyError::NotHomogeneous(self.m));
        }
        if self.m == 2 && rhs.depends_on_t() {
            return Err(PolyError::TDependentRhs);
        }
        let mut b = vec![Rational::zero(); self.basis.len()];
        for (mo, c) in &rhs.terms {
            b[self.index[mo]] = c.clone();
        }
        let x = self.lu.solve(&b).ok_or(PolyError::Singular(self.m))?;
        let mut u = HPoly::zero(self.dim);
        for (mo, c) in self.basis.iter().zip(x) {
            u.add_term(*mo, c);
        }
        Ok(u)
    }
}

pub fn solve_lm(dim: Dim, m: usize, rhs: &HPoly) -> Result<HPoly, PolyError> {
    if m >= 2 && rhs.is_zero() {
        return Ok(HPoly::zero(dim));
    }
    LmSolver::new(dim, m)?.solve(rhs)
}

/// `X_A f` at the origin for every word `A` with `o(A) ≤ max_order`.
///
/// The word `(a₁,…,a_r)` stands for `X_{a₁}⋯X_{a_r}f`.
pub fn flat_derivatives(f: &HPoly, max_order: usize) -> BTreeMap<Vec<usize>, Rational> {
    let fields = FlatFields::new(f.dim);
    let mut out = BTreeMap::new();
    fn rec(
        fields: &FlatFields,
        word: &mut Vec<usize>,
        g: &HPoly,
        left: usize,
        out: &mut BTreeMap<Vec<usize>, Rational>,
    ) {
        out.insert(word.clone(), g.value_at_origin());
        for a in 0..fields.dim.total() {
            let o = fields.dim.order(a);
            if o > left {
                continue;
            }
            let next = fields.field(a, g);
            word.insert(0, a);
            rec(fields, word, &next, left - o, out);
            word.remove(0);
        }
    }
    rec(&fields, &mut Vec::new(), f, max_order, &mut out);
    out
}

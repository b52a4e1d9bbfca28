//! The contractions `A, B, C, D` of `R_{αβγδ,ρσ}` with three almost complex
//! structures and `ε`, and the Bianchi identities that kill them.
//!
//! Slots of `R_{αβγδ,ρσ}` are numbered `α, β, γ, δ, ρ, σ = 0..6`.

use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use super::InvarError;
use crate::linalg::Matrix;
use crate::qalg::{levi_civita, standard_acs, Dim};
use crate::scalar::Rational;

/// `R_{x₀…x₅} I_i^{x_{p₀}x_{q₀}} I_j^{x_{p₁}x_{q₁}} I_k^{x_{p₂}x_{q₂}} ε_{ijk}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Wiring {
    pub name: &'static str,
    pub pairs: [(usize, usize); 3],
}

pub const ABCD: [Wiring; 4] = [
    Wiring { name: "A", pairs: [(0, 1), (5, 3), (4, 2)] },
    Wiring { name: "B", pairs: [(3, 1), (5, 0), (4, 2)] },
    Wiring { name: "C", pairs: [(1, 2), (5, 3), (4, 0)] },
    Wiring { name: "D", pairs: [(2, 3), (5, 1), (4, 0)] },
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BianchiIdentity {
    /// `R_{αβγδ,ρσ} + R_{βγαδ,ρσ} + R_{γαβδ,ρσ}`, twice differentiated.
    Algebraic,
    /// `R_{αβγδ,ρσ} + R_{βργδ,ασ} + R_{ραγδ,βσ}`, once differentiated.
    Differential,
}

impl BianchiIdentity {
    // Slot maps `σ` with the cyclic sum `Σ R[x∘σ]`.
    fn maps(self) -> [[usize; 6]; 3] {
        match self {
            BianchiIdentity::Algebraic => [[0, 1, 2, 3, 4, 5], [1, 2, 0, 3, 4, 5], [2, 0, 1, 3, 4, 5]],
            BianchiIdentity::Differential => [[0, 1, 2, 3, 4, 5], [1, 4, 2, 3, 0, 5], [4, 0, 2, 3, 1, 5]],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BianchiIdentity::Algebraic => "algebraic",
            BianchiIdentity::Differential => "differential",
        }
    }
}

fn unravel(mut k: usize, h: usize) -> [usize; 6] {
    let mut x = [0; 6];
    for s in (0..6).rev() {
        x[s] = k % h;
        k /= h;
    }
    x
}

fn ravel(x: &[usize; 6], h: usize) -> usize {
    x.iter().fold(0, |acc, &v| acc * h + v)
}

/// Coefficients `w` with `wiring(R) = Σ_x w[x] R[x]`, over all `h⁶` components.
pub fn second_derivative_functional(dim: Dim, wiring: &Wiring) -> Vec<i64> {
    let h = dim.h();
    let acs = standard_acs::<Rational>(dim);
    let m: Vec<Vec<i64>> = (0..3)
        .map(|i| (0..h * h).map(|k| acs.i[i][(k / h, k % h)].to_integer().try_into().expect("unit entries")).collect())
        .collect();
    let mut w = vec![0i64; h.pow(6)];
    for (k, wk) in w.iter_mut().enumerate() {
        let x = unravel(k, h);
        let e = |q: usize, i: usize| m[i][x[wiring.pairs[q].0] * h + x[wiring.pairs[q].1]];
        let mut acc = 0;
        for i in 0..3 {
            let a = e(0, i);
            if a == 0 {
                continue;
            }
            for j in 0..3 {
                let b = e(1, j);
                if b == 0 {
                    continue;
                }
                for kk in 0..3 {
                    let l = levi_civita(i, j, kk);
                    if l != 0 {
                        acc += l * a * b * e(2, kk);
                    }
                }
            }
        }
        *wk = acc;
    }
    w
}

// Pulls a functional back through the cyclic sum of an identity.
fn pull_back(w: &[i64], h: usize, identity: BianchiIdentity) -> Vec<i64> {
    let mut out = vec![0i64; w.len()];
    for (k, &v) in w.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let x = unravel(k, h);
        for m in identity.maps() {
            let y = [x[m[0]], x[m[1]], x[m[2]], x[m[3]], x[m[4]], x[m[5]]];
            out[ravel(&y, h)] += v;
        }
    }
    out
}

// Restriction to tensors antisymmetric in (αβ) and in (γδ), up to a factor 4.
fn antisymmetrize(w: &[i64], h: usize) -> Vec<i64> {
    (0..w.len())
        .map(|k| {
            let x = unravel(k, h);
            let sw = |a: usize, b: usize| {
                let mut y = x;
                y.swap(a, b);
                w[ravel(&y, h)]
            };
            let mut y = x;
            y.swap(0, 1);
            y.swap(2, 3);
            w[k] - sw(0, 1) - sw(2, 3) + w[ravel(&y, h)]
        })
        .collect()
}

/// `c_A A + c_B B + c_C C + c_D D`, equal to the contraction `wiring` of the
/// cyclic sum of `identity` for every tensor with the pair antisymmetries.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub identity: BianchiIdentity,
    pub wiring: Wiring,
    pub coeffs: [Rational; 4],
}

impl Relation {
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (c, w) in self.coeffs.iter().zip(ABCD.iter()) {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "−" } else if s.is_empty() { "" } else { "+" };
            let mag = c.abs();
            let coef = if mag == Rational::from_integer(1.into()) { String::new() } else { mag.to_string() };
            s.push_str(&format!("{sign}{coef}{}", w.name));
        }
        s
    }
}

fn perfect_matchings(slots: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if slots.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for k in 1..slots.len() {
        let rest: Vec<usize> = slots[1..].iter().copied().filter(|&s| s != slots[k]).collect();
        for mut m in perfect_matchings(&rest) {
            m.insert(0, (slots[0], slots[k]));
            out.push(m);
        }
    }
    out
}

/// `(αβ)(γρ)(δσ)` style label of three slot pairs.
pub fn wiring_label(pairs: &[(usize, usize)]) -> String {
    const L: [char; 6] = ['α', 'β', 'γ', 'δ', 'ρ', 'σ'];
    pairs.iter().map(|&(a, b)| format!("({}{})", L[a], L[b])).collect()
}

fn gram(a: &[Vec<i64>]) -> Matrix<Rational> {
    Matrix::from_fn(a.len(), a.len(), |i, j| {
        let s: i128 = a[i].iter().zip(&a[j]).map(|(&x, &y)| x as i128 * y as i128).sum();
        Rational::from_integer(s.into())
    })
}

/// Every contraction of a Bianchi cyclic sum with three structures and `ε` that
/// is an exact combination of `A, B, C, D` on tensors with the pair
/// antisymmetries, skipping those that vanish identically.
pub fn bianchi_relations(dim: Dim) -> Result<Vec<Relation>, InvarError> {
    let h = dim.h();
    let base: Vec<Vec<i64>> = ABCD.iter().map(|w| antisymmetrize(&second_derivative_functional(dim, w), h)).collect();
    let g = gram(&base);
    let ginv = g.inverse().ok_or_else(|| InvarError::Rank("A, B, C, D are dependent".into()))?;
    let mut out = Vec::new();
    for identity in [BianchiIdentity::Algebraic, BianchiIdentity::Differential] {
        for m in perfect_matchings(&[0, 1, 2, 3, 4, 5]) {
            let wiring = Wiring { name: "", pairs: [m[0], m[1], m[2]] };
            let y = antisymmetrize(&pull_back(&second_derivative_functional(dim, &wiring), h, identity), h);
            if y.iter().all(|&v| v == 0) {
                continue;
            }
            let rhs: Vec<Rational> = base
                .iter()
                .map(|b| Rational::from_integer(b.iter().zip(&y).map(|(&p, &q)| p as i128 * q as i128).sum::<i128>().into()))
                .collect();
            let c: Vec<Rational> =
                (0..4).map(|i| (0..4).fold(Rational::zero(), |acc, j| acc + &ginv[(i, j)] * &rhs[j])).collect();
            let exact = y.iter().enumerate().all(|(k, &v)| {
                let fit = (0..4).fold(Rational::zero(), |acc, i| acc + &c[i] * Rational::from_integer(base[i][k].into()));
                fit == Rational::from_integer(v.into())
            });
            if exact {
                out.push(Relation { identity, wiring, coeffs: [c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()] });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SecondDerivativeReport {
    pub n: usize,
    /// Dimension of the constrained subspace, when the basis sweep ran.
    pub subspace_dim: Option<usize>,
    /// `max |A|, |B|, |C|, |D|` over the basis.
    pub max_abs: Option<[Rational; 4]>,
    pub relations: Vec<Relation>,
    /// Rank of the relations as linear forms in `A, B, C, D`.
    pub rank: usize,
}

impl SecondDerivativeReport {
    pub fn pass(&self) -> bool {
        self.rank == 4 && self.max_abs.as_ref().map_or(true, |m| m.iter().all(|x| x.is_zero()))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "subspace_dim": self.subspace_dim,
            "max_abs": self.max_abs.as_ref().map(|m| m.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
            "relations": self.relations.iter().map(|r| json!({
                "identity": r.identity.name(),
                "wiring": wiring_label(&r.wiring.pairs),
                "relation": r.describe(),
            })).collect::<Vec<_>>(),
            "rank": self.rank,
            "pass": self.pass(),
        })
    }
}

// Unknowns of a tensor antisymmetric in (αβ) and (γδ): (pair, pair, ρ, σ).
struct PairSpace {
    h: usize,
    pairs: Vec<(usize, usize)>,
    index: Vec<Option<(usize, i64)>>,
}

impl PairSpace {
    fn new(h: usize) -> Self {
        let pairs: Vec<(usize, usize)> = (0..h).flat_map(|a| (a + 1..h).map(move |b| (a, b))).collect();
        let mut index = vec![None; h * h];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            index[a * h + b] = Some((k, 1));
            index[b * h + a] = Some((k, -1));
        }
        PairSpace { h, pairs, index }
    }

    fn len(&self) -> usize {
        self.pairs.len() * self.pairs.len() * self.h * self.h
    }

    fn unknown(&self, x: &[usize; 6]) -> Option<(usize, i64)> {
        let (p, s1) = self.index[x[0] * self.h + x[1]]?;
        let (q, s2) = self.index[x[2] * self.h + x[3]]?;
        let np = self.pairs.len();
        Some((((p * np + q) * self.h + x[4]) * self.h + x[5], s1 * s2))
    }
}

/// Builds the tensors `R_{αβγδ,ρσ}` with the pair antisymmetries satisfying
/// both Bianchi identities with zero right-hand side, evaluates `A, B, C, D` on
/// a basis (only for `n = 1`, where the space is small), and derives the linear
/// relations the identities impose.
pub fn verify_second_derivative_system(dim: Dim) -> Result<SecondDerivativeReport, InvarError> {
    let h = dim.h();
    let relations = bianchi_relations(dim)?;
    let rank = Matrix::from_rows(relations.iter().map(|r| r.coeffs.to_vec()).collect::<Vec<_>>()).rank();
    let (subspace_dim, max_abs) = if dim.n() == 1 {
        let space = PairSpace::new(h);
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        for identity in [BianchiIdentity::Algebraic, BianchiIdentity::Differential] {
            let maps = identity.maps();
            let free = match identity {
                BianchiIdentity::Algebraic => [0, 1, 2],
                BianchiIdentity::Differential => [0, 1, 4],
            };
            for k in 0..h.pow(6) {
                let x = unravel(k, h);
                let (a, b, c) = (x[free[0]], x[free[1]], x[free[2]]);
                if !(a < b && b < c) {
                    continue;
                }
                let mut row = vec![Rational::zero(); space.len()];
                for m in maps {
                    let y = [x[m[0]], x[m[1]], x[m[2]], x[m[3]], x[m[4]], x[m[5]]];
                    if let Some((u, s)) = space.unknown(&y) {
                        row[u] += Rational::from_integer(s.into());
                    }
                }
                if row.iter().any(|v| !v.is_zero()) {
                    rows.push(row);
                }
            }
        }
        let basis = Matrix::from_rows(rows).nullspace();
        let folded: Vec<Vec<Rational>> = ABCD
            .iter()
            .map(|w| {
                let f = second_derivative_functional(dim, w);
                let mut out = vec![Rational::zero(); space.len()];
                for (k, &v) in f.iter().enumerate() {
                    if v != 0 {
                        if let Some((u, s)) = space.unknown(&unravel(k, h)) {
                            out[u] += Rational::from_integer((v * s).into());
                        }
                    }
                }
                out
            })
            .collect();
        let mut max = [Rational::zero(), Rational::zero(), Rational::zero(), Rational::zero()];
        for v in &basis {
            for (x, f) in folded.iter().enumerate() {
                let val = f.iter().zip(v).fold(Rational::zero(), |acc, (a, b)| if a.is_zero() || b.is_zero() { acc } else { acc + a * b });
                if val.abs() > max[x] {
                    max[x] = val.abs();
                }
            }
        }
        (Some(basis.len()), Some(max))
    } else {
        (None, None)
    };
    Ok(SecondDerivativeReport { n: dim.n(), subspace_dim, max_abs, relations, rank })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i64) -> Rational {
        Rational::from_integer(v.into())
    }

    #[test]
    fn zero_tensor_gives_zero() {
        let dim = Dim::new(1).unwrap();
        for w in ABCD {
            let f = second_derivative_functional(dim, &w);
            assert_eq!(f.iter().map(|&x| x * 0).sum::<i64>(), 0);
        }
    }

    #[test]
    fn algebraic_identity_against_a_gives_a_plus_two_c() {
        let dim = Dim::new(1).unwrap();
        let rel = bianchi_relations(dim).unwrap();
        let hit = rel.iter().find(|x| x.identity == BianchiIdentity::Algebraic && x.wiring.pairs == [(0, 2), (1, 4), (3, 5)]);
        assert_eq!(hit.unwrap().coeffs, [r(1), r(0), r(2), r(0)]);
        assert_eq!(hit.unwrap().describe(), "A+2C");
    }

    #[test]
    fn matchings_of_six_slots() {
        assert_eq!(perfect_matchings(&[0, 1, 2, 3, 4, 5]).len(), 15);
    }
}

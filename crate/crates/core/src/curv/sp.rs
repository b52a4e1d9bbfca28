//! `sp(n)` and the algebraic curvature tensors with values in it.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::linalg::Matrix;
use crate::qalg::{standard_acs, Axis, Dim, Tensor};
use crate::scalar::{Rational, Scalar};

/// Basis of the antisymmetric matrices commuting with `I₁, I₂, I₃`.
pub fn sp_basis(dim: Dim) -> Vec<Matrix<Rational>> {
    let h = dim.h();
    let acs = standard_acs::<Rational>(dim);
    let pairs: Vec<(usize, usize)> = (0..h).flat_map(|a| (a + 1..h).map(move |b| (a, b))).collect();
    let unit = |k: usize| {
        let (a, b) = pairs[k];
        let mut m = Matrix::<Rational>::zeros(h, h);
        m[(a, b)] = Rational::one();
        m[(b, a)] = -Rational::one();
        m
    };
    let mut rows = vec![vec![Rational::zero(); pairs.len()]; 3 * h * h];
    for (k, row_col) in (0..pairs.len()).map(|k| (k, unit(k))) {
        for i in 0..3 {
            let c = acs.i[i].matmul(&row_col).sub(&row_col.matmul(&acs.i[i]));
            for (e, v) in c.data.into_iter().enumerate() {
                rows[i * h * h + e][k] = v;
            }
        }
    }
    Matrix::from_rows(rows)
        .nullspace()
        .into_iter()
        .map(|v| v.iter().enumerate().fold(Matrix::zeros(h, h), |acc, (k, c)| acc.add(&unit(k).scale(c))))
        .collect()
}

/// Basis of the tensors `R_{αβγδ}` with both pairs in `sp(n)`, pair symmetry
/// and the cyclic identity in the first three slots. These are Ricci-flat.
pub fn hyperkahler_basis(dim: Dim) -> Vec<Tensor<Rational>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Vec<Tensor<Rational>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("cache lock").get(&dim.n()) {
        return v.clone();
    }
    let out = compute_hyperkahler(dim);
    cache.lock().expect("cache lock").insert(dim.n(), out.clone());
    out
}

fn compute_hyperkahler(dim: Dim) -> Vec<Tensor<Rational>> {
    let h = dim.h();
    let e = sp_basis(dim);
    let p = e.len();
    let sym: Vec<(usize, usize)> = (0..p).flat_map(|a| (a..p).map(move |b| (a, b))).collect();
    let term = |(pi, qi): (usize, usize), a: usize, b: usize, c: usize, d: usize| {
        let one = e[pi][(a, b)].clone() * e[qi][(c, d)].clone();
        if pi == qi {
            one
        } else {
            one + e[qi][(a, b)].clone() * e[pi][(c, d)].clone()
        }
    };
    let mut rows = Vec::new();
    for a in 0..h {
        for b in a + 1..h {
            for c in b + 1..h {
                for d in 0..h {
                    let row: Vec<Rational> = sym
                        .iter()
                        .map(|&s| term(s, a, b, c, d) + term(s, b, c, a, d) + term(s, c, a, b, d))
                        .collect();
                    if row.iter().any(|x| !x.is_zero()) {
                        rows.push(row);
                    }
                }
            }
        }
    }
    let null = Matrix::from_rows(rows).nullspace();
    null.into_iter()
        .map(|v| {
            Tensor::from_fn(vec![Axis::h(h); 4], |x| {
                sym.iter().zip(&v).fold(Rational::zero(), |acc, (&s, c)| {
                    if c.is_zero() {
                        acc
                    } else {
                        acc + c.clone() * term(s, x[0], x[1], x[2], x[3])
                    }
                })
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curv::quad;

    #[test]
    fn dimensions() {
        assert_eq!(sp_basis(Dim::new(1).unwrap()).len(), 3);
        assert_eq!(sp_basis(Dim::new(2).unwrap()).len(), 10);
        assert_eq!(hyperkahler_basis(Dim::new(1).unwrap()).len(), 5);
    }

    #[test]
    fn hyperkahler_tensors_are_ricci_flat_curvature_tensors() {
        let dim = Dim::new(1).unwrap();
        let h = dim.h();
        for w in hyperkahler_basis(dim) {
            for [a, b, c, d] in quad(h) {
                let r = |a, b, c, d| w.get(&[a, b, c, d]).clone();
                assert_eq!(r(a, b, c, d), -r(b, a, c, d));
                assert_eq!(r(a, b, c, d), r(c, d, a, b));
                assert!((r(a, b, c, d) + r(b, c, a, d) + r(c, a, b, d)).is_zero());
            }
            for a in 0..h {
                for b in 0..h {
                    assert!((0..h).fold(Rational::zero(), |acc, g| acc + w.get(&[g, a, b, g]).clone()).is_zero());
                }
            }
        }
    }
}

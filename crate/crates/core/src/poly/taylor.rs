use std::collections::BTreeMap;

use super::{HPoly, Mono, PolyError};
use crate::qalg::Dim;
use crate::scalar::{Rational, Scalar};

/// Weight `(1/#A!)(½)^{o(A)−#A}` of a word in the parabolic Taylor formula.
pub fn taylor_coefficient(dim: Dim, word: &[usize]) -> Rational {
    let len = word.len();
    let order: usize = word.iter().map(|&a| dim.order(a)).sum();
    let fact: i64 = (1..=len as i64).product();
    Rational::ratio(1, fact * (1i64 << (order - len)))
}

/// All words over `0..4n+3` with total order exactly `m`.
pub(crate) fn words_of_order(dim: Dim, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(dim: Dim, left: usize, word: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(word.clone());
            return;
        }
        for a in 0..dim.total() {
            let o = dim.order(a);
            if o <= left {
                word.push(a);
                rec(dim, left - o, word, out);
                word.pop();
            }
        }
    }
    rec(dim, m, &mut Vec::new(), &mut out);
    out
}

/// `F_(m) = Σ_{o(A)=m} (1/#A!)(½)^{o(A)−#A} x^A (X_A F)|_q`.
pub fn parabolic_taylor(dim: Dim, derivs: &BTreeMap<Vec<usize>, Rational>, m: usize) -> Result<HPoly, PolyError> {
    let mut out = HPoly::zero(dim);
    for word in words_of_order(dim, m) {
        let v = derivs.get(&word).ok_or_else(|| PolyError::MissingDerivative(word.clone()))?;
        if v.is_zero() {
            continue;
        }
        let mono = word.iter().fold(Mono::ONE, |acc, &a| acc.raise(a));
        out.add_term(mono, taylor_coefficient(dim, &word) * v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{flat_derivatives, random_homogeneous};
    use crate::scalar::rint;
    use rand::SeedableRng;

    fn d(n: usize) -> Dim {
        Dim::new(n).unwrap()
    }

    fn reconstruct(f: &HPoly, max: usize) -> HPoly {
        let der = flat_derivatives(f, max);
        (0..=max).fold(HPoly::zero(f.dim), |acc, m| acc.add(&parabolic_taylor(f.dim, &der, m).unwrap()))
    }

    #[test]
    fn coordinate_examples() {
        let dim = d(1);
        let x1 = HPoly::var(dim, 0);
        assert_eq!(parabolic_taylor(dim, &flat_derivatives(&x1, 1), 1).unwrap(), x1);
        let t1 = HPoly::var(dim, 4);
        assert_eq!(taylor_coefficient(dim, &[4]), Rational::ratio(1, 2));
        assert_eq!(parabolic_taylor(dim, &flat_derivatives(&t1, 2), 2).unwrap(), t1);
        let x1x2 = x1.mul(&HPoly::var(dim, 1));
        assert_eq!(reconstruct(&x1x2, 2), x1x2);
    }

    #[test]
    fn missing_word_is_reported() {
        let dim = d(1);
        let mut der = flat_derivatives(&HPoly::var(dim, 0), 1);
        der.remove(&vec![2]);
        assert_eq!(parabolic_taylor(dim, &der, 1), Err(PolyError::MissingDerivative(vec![2])));
    }

    #[test]
    fn reconstructs_random_polynomials() {
        let dim = d(1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let f = (0..=4).fold(HPoly::zero(dim), |acc, m| acc.add(&random_homogeneous(dim, m, &mut rng)));
            assert_eq!(reconstruct(&f, 4), f);
        }
        let g = HPoly::var(dim, 0).mul(&HPoly::var(dim, 5)).add(&HPoly::var(dim, 6).scale(&rint(3)));
        assert_eq!(reconstruct(&g, 3), g);
    }
}

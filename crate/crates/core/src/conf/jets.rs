//! Tables of symmetrized `Q`-jets at the base point and the polynomial `Φ_(m)`.
//!
//! An ordering `(a, b, C)` of a multiset `M` contributes to the coefficient of
//! `x^M` in `Φ = x^a x^b Q_{ab}` with weight `(1/#C!)(½)^{o(C)−#C}` (doubled when
//! `a ≠ b`, since `Q` is symmetric). The table stores, per multiset, the weighted
//! mean of `Q_{ab,C}` over its orderings, so `Φ_(m)` is recovered exactly and
//! symmetrizing a symmetrized table changes nothing.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::ConfError;
use crate::poly::{taylor_coefficient, HPoly, Mono};
use crate::qalg::Dim;
use crate::scalar::{format_rational, rational_from_json, Rational, Scalar};

/// An ordering `(a, b, C)` with `a ≤ b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetWord {
    pub a: usize,
    pub b: usize,
    pub c: Vec<usize>,
}

impl JetWord {
    pub fn key(&self) -> Vec<usize> {
        let mut k = self.c.clone();
        k.push(self.a);
        k.push(self.b);
        k.sort_unstable();
        k
    }

    pub fn order(&self, dim: Dim) -> usize {
        dim.order(self.a) + dim.order(self.b) + self.c.iter().map(|&x| dim.order(x)).sum::<usize>()
    }

    fn weight(&self, dim: Dim) -> Rational {
        let w = taylor_coefficient(dim, &self.c);
        if self.a == self.b {
            w
        } else {
            w * Rational::from_i64(2)
        }
    }
}

/// Every ordering with `a ≤ b` and `o(abC) ≤ max_order`.
pub fn jet_words(dim: Dim, max_order: usize) -> Vec<JetWord> {
    let d = dim.total();
    let mut out = Vec::new();
    fn words(dim: Dim, left: usize, word: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(word.clone());
        for x in 0..dim.total() {
            let o = dim.order(x);
            if o <= left {
                word.push(x);
                words(dim, left - o, word, out);
                word.pop();
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let oab = dim.order(a) + dim.order(b);
            if oab > max_order {
                continue;
            }
            let mut cs = Vec::new();
            words(dim, max_order - oab, &mut Vec::new(), &mut cs);
            out.extend(cs.into_iter().map(|c| JetWord { a, b, c }));
        }
    }
    out
}

fn multiset_order(dim: Dim, key: &[usize]) -> usize {
    key.iter().map(|&x| dim.order(x)).sum()
}

fn mono_of(key: &[usize]) -> Mono {
    key.iter().fold(Mono::ONE, |acc, &x| acc.raise(x))
}

fn key_of(dim: Dim, mono: Mono) -> Vec<usize> {
    let mut k = Vec::new();
    for (x, e) in mono.exps(dim.total()).into_iter().enumerate() {
        k.extend(std::iter::repeat(x).take(e as usize));
    }
    k
}

/// `W(M)`: total weight of the orderings of each multiset.
fn multiset_weights(dim: Dim, max_order: usize) -> BTreeMap<Vec<usize>, Rational> {
    let mut w: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
    for word in jet_words(dim, max_order) {
        let e = w.entry(word.key()).or_insert_with(Rational::zero);
        *e = e.clone() + word.weight(dim);
    }
    w
}

#[derive(Clone, Debug, PartialEq)]
pub struct QJetTable {
    pub dim: Dim,
    pub max_order: usize,
    // Sorted multiset ↦ symmetrized value; zeros are not stored.
    values: BTreeMap<Vec<usize>, Rational>,
}

impl QJetTable {
    pub fn zero(dim: Dim, max_order: usize) -> Self {
        QJetTable { dim, max_order, values: BTreeMap::new() }
    }

    /// Symmetrizes raw jets `Q_{ab,C}` (queried for `a ≤ b` only).
    pub fn from_raw<E>(
        dim: Dim,
        max_order: usize,
        mut raw: impl FnMut(&JetWord) -> Result<Rational, E>,
    ) -> Result<Self, E> {
        let mut num: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        let mut den: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for word in jet_words(dim, max_order) {
            let v = raw(&word)?;
            let w = word.weight(dim);
            let key = word.key();
            let d = den.entry(key.clone()).or_insert_with(Rational::zero);
            *d = d.clone() + w.clone();
            if !v.is_zero() {
                let e = num.entry(key).or_insert_with(Rational::zero);
                *e = e.clone() + w * v;
            }
        }
        let values = num
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(k, v)| {
                let w = den[&k].clone();
                (k, v / w)
            })
            .collect();
        Ok(QJetTable { dim, max_order, values })
    }

    /// The symmetrized entry `Q_{(ab,C)}`.
    pub fn get(&self, a: usize, b: usize, c: &[usize]) -> Rational {
        let word = JetWord { a, b, c: c.to_vec() };
        self.get_key(&word.key())
    }

    pub fn get_key(&self, key: &[usize]) -> Rational {
        self.values.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    /// Sets the symmetrized entry of a multiset of at least two indices.
    pub fn set_key(&mut self, mut key: Vec<usize>, v: Rational) -> Result<(), ConfError> {
        key.sort_unstable();
        let o = multiset_order(self.dim, &key);
        if key.len() < 2 || o > self.max_order || key.iter().any(|&x| x >= self.dim.total()) {
            return Err(ConfError::BadJet(key));
        }
        if v.is_zero() {
            self.values.remove(&key);
        } else {
            self.values.insert(key, v);
        }
        Ok(())
    }

    /// Nonzero entries as `(multiset, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &Rational)> {
        self.values.iter()
    }

    pub fn order_of(&self, key: &[usize]) -> usize {
        multiset_order(self.dim, key)
    }

    /// Nonzero entries with `o(abC) ≤ m`.
    pub fn nonzero_through(&self, m: usize) -> Vec<(Vec<usize>, Rational)> {
        self.values.iter().filter(|(k, _)| self.order_of(k) <= m).map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    pub fn is_zero_through(&self, m: usize) -> bool {
        self.values.keys().all(|k| self.order_of(k) > m)
    }

    /// First multiset with `o < m` on which the two tables differ.
    pub fn first_difference_below(&self, other: &QJetTable, m: usize) -> Option<Vec<usize>> {
        let keys = self.values.keys().chain(other.values.keys());
        let mut diff: Vec<Vec<usize>> = keys
            .filter(|k| self.order_of(k) < m && self.get_key(k) != other.get_key(k))
            .cloned()
            .collect();
        diff.sort();
        diff.into_iter().next()
    }

    pub fn add(&self, other: &QJetTable) -> QJetTable {
        let mut out = self.clone();
        for (k, v) in &other.values {
            let s = out.get_key(k) + v.clone();
            if s.is_zero() {
                out.values.remove(k);
            } else {
                out.values.insert(k.clone(), s);
            }
        }
        out.max_order = self.max_order.min(other.max_order);
        out.values.retain(|k, _| multiset_order(self.dim, k) <= out.max_order);
        out
    }

    /// `Φ_(m) = Σ_{o(abC)=m} (1/#C!)(½)^{o(C)−#C} x^a x^b x^C Q_{ab,C}(q)`.
    pub fn phi(&self, m: usize) -> Result<HPoly, ConfError> {
        if m > self.max_order {
            return Err(ConfError::MissingJets(m));
        }
        let weights = multiset_weights(self.dim, m);
        let mut out = HPoly::zero(self.dim);
        for (k, v) in &self.values {
            if self.order_of(k) == m {
                out.add_term(mono_of(k), v.clone() * weights[k].clone());
            }
        }
        Ok(out)
    }

    /// The table whose `Φ_(m)` is the given weight-`m` polynomial and which is
    /// zero elsewhere.
    pub fn from_phi(dim: Dim, max_order: usize, p: &HPoly, m: usize) -> Result<Self, ConfError> {
        let mut out = QJetTable::zero(dim, max_order);
        if p.is_zero() || m > max_order {
            return Ok(out);
        }
        if !p.is_homogeneous(m) {
            return Err(ConfError::Poly(crate::poly::PolyError::NotHomogeneous(m)));
        }
        let weights = multiset_weights(dim, m);
        for (mono, c) in p.sorted_terms() {
            let key = key_of(dim, mono);
            let w = weights.get(&key).ok_or_else(|| ConfError::BadJet(key.clone()))?;
            out.set_key(key, c / w.clone())?;
        }
        Ok(out)
    }

    /// `[{"a","b","C","value"}]`, one ordering per nonzero multiset.
    pub fn to_json(&self) -> Value {
        let list: Vec<Value> = self
            .values
            .iter()
            .map(|(k, v)| json!({"a": k[0], "b": k[1], "C": k[2..].to_vec(), "value": format_rational(v)}))
            .collect();
        json!({"n": self.dim.n(), "N": self.max_order, "entries": list})
    }

    pub fn from_json(v: &Value) -> Result<Self, ConfError> {
        let bad = |s: &str| ConfError::Json(s.to_string());
        let n = v["n"].as_u64().ok_or_else(|| bad("missing n"))? as usize;
        let dim = Dim::new(n).map_err(|e| ConfError::Json(e.to_string()))?;
        let big_n = v["N"].as_u64().ok_or_else(|| bad("missing N"))? as usize;
        let mut out = QJetTable::zero(dim, big_n);
        for e in v["entries"].as_array().ok_or_else(|| bad("missing entries"))? {
            let idx = |x: &Value| x.as_u64().map(|y| y as usize).ok_or_else(|| bad("bad index"));
            let a = idx(&e["a"])?;
            let b = idx(&e["b"])?;
            let mut key: Vec<usize> =
                e["C"].as_array().ok_or_else(|| bad("missing C"))?.iter().map(idx).collect::<Result<_, _>>()?;
            key.push(a);
            key.push(b);
            key.sort_unstable();
            let val = rational_from_json(&e["value"]).map_err(|x| ConfError::Json(x.0))?;
            let prev = out.get_key(&key);
            if !prev.is_zero() && prev != val {
                return Err(ConfError::Json(format!("conflicting values for {key:?}")));
            }
            out.set_key(key, val)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::random_homogeneous;
    use crate::scalar::rat;
    use rand::SeedableRng;

    fn dim1() -> Dim {
        Dim::new(1).unwrap()
    }

    #[test]
    fn identity_metric_gives_radius_squared() {
        let dim = dim1();
        let t = QJetTable::from_raw::<()>(dim, 2, |w| {
            Ok(if w.c.is_empty() && w.a == w.b && w.a < 4 { rat(1, 1) } else { rat(0, 1) })
        })
        .unwrap();
        let mut r2 = HPoly::zero(dim);
        for a in 0..4 {
            r2.add_term(Mono::var(a).raise(a), rat(1, 1));
        }
        assert_eq!(t.phi(2).unwrap(), r2);
    }

    #[test]
    fn single_entry() {
        let dim = dim1();
        let t = QJetTable::from_raw::<()>(dim, 2, |w| Ok(rat((w.a == 0 && w.b == 0 && w.c.is_empty()) as i64, 1)))
            .unwrap();
        assert_eq!(t.phi(2).unwrap(), HPoly::monomial(dim, Mono::var(0).raise(0), rat(1, 1)));
    }

    #[test]
    fn order_two_derivative_by_hand() {
        // Q_{01,4} = 3 alone (4 is the first vertical index): Φ picks up
        // 2·(1/1!)(½)^{2−1}·3 x⁰x¹t¹ = 3 x⁰x¹t¹.
        let dim = dim1();
        let t = QJetTable::from_raw::<()>(dim, 4, |w| Ok(rat((w.a == 0 && w.b == 1 && w.c == [4]) as i64 * 3, 1)))
            .unwrap();
        let mono = Mono::var(0).raise(1).raise(4);
        assert_eq!(t.phi(4).unwrap(), HPoly::monomial(dim, mono, rat(3, 1)));
        // Q_{00,11} = 2: Φ gets (1/2!)·2 (x⁰)²(x¹)², plus the same multiset from
        // the orderings Q_{01,01}, Q_{01,10}, Q_{11,00}, all zero here.
        let t = QJetTable::from_raw::<()>(dim, 4, |w| Ok(rat((w.a == 0 && w.b == 0 && w.c == [1, 1]) as i64 * 2, 1)))
            .unwrap();
        let mono = Mono::var(0).raise(0).raise(1).raise(1);
        assert_eq!(t.phi(4).unwrap(), HPoly::monomial(dim, mono, rat(1, 1)));
    }

    #[test]
    fn symmetrization_is_idempotent_and_round_trips() {
        let dim = dim1();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut t = QJetTable::zero(dim, 4);
        for m in 2..=4 {
            let mut p = random_homogeneous(dim, m, &mut rng);
            // No multiset of order two holds a lone t^i.
            p.terms.retain(|mo, _| m > 2 || mo.t_degree(4) == 0);
            t = t.add(&QJetTable::from_phi(dim, 4, &p, m).unwrap());
        }
        let again = QJetTable::from_raw::<()>(dim, 4, |w| Ok(t.get(w.a, w.b, &w.c))).unwrap();
        assert_eq!(again, t);
        for m in 2..=4 {
            let p = t.phi(m).unwrap();
            assert_eq!(QJetTable::from_phi(dim, 4, &p, m).unwrap().phi(m).unwrap(), p);
        }
        assert_eq!(QJetTable::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn missing_orders_are_reported() {
        assert_eq!(QJetTable::zero(dim1(), 3).phi(4), Err(ConfError::MissingJets(4)));
    }
}

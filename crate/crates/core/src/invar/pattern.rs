//! Complete contractions of `R ⊗ R` with metrics, almost complex structures and `ε`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg};

use num_traits::Zero;

use super::weight::{TermDescriptor, TermKind};
use super::InvarError;
use crate::qalg::Kind;

/// How the vertical indices of the almost complex structures are contracted.
/// Entries name links by the slot of the first curvature factor they start at.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertical {
    None,
    /// `δ_{ij}` between the two links of each pair.
    Pairs(Vec<(usize, usize)>),
    /// `ε^{ijk}` over the three links, in this order.
    Epsilon([usize; 3]),
}

/// `Σ R_{a₀a₁a₂a₃} R'_{b₀b₁b₂b₃} Π_s M_s(a_s, b_{target[s]})` where each link
/// `M_s` is the metric or an almost complex structure `I_i^{a_s b}`, and the
/// vertical indices are contracted as in [`Vertical`]. Every link joins the two
/// factors: a link inside one factor produces a Ricci-type trace, which
/// vanishes at the center of a normalized structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContractionPattern {
    pub target: [usize; 4],
    pub acs: [bool; 4],
    pub vertical: Vertical,
}

/// Which index symmetries identify two patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryLevel {
    /// Pair antisymmetries and pair exchange of the second factor only, the
    /// first factor held in standard position.
    SecondFactor,
    /// Symmetries of both factors and their exchange.
    Full,
}

type SignedPerm = ([usize; 4], i64);

// Symmetries of a curvature tensor: `R[x∘p] = sign · R[x]`.
fn curvature_group() -> Vec<SignedPerm> {
    let gens: [SignedPerm; 3] = [([1, 0, 2, 3], -1), ([0, 1, 3, 2], -1), ([2, 3, 0, 1], 1)];
    let mut out: Vec<SignedPerm> = vec![([0, 1, 2, 3], 1)];
    let mut k = 0;
    while k < out.len() {
        let (p, s) = out[k];
        for &(q, t) in &gens {
            let r = [p[q[0]], p[q[1]], p[q[2]], p[q[3]]];
            if !out.iter().any(|(x, _)| *x == r) {
                out.push((r, s * t));
            }
        }
        k += 1;
    }
    out
}

fn inverse(p: &[usize; 4]) -> [usize; 4] {
    let mut q = [0; 4];
    for (k, &v) in p.iter().enumerate() {
        q[v] = k;
    }
    q
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|x| p.contains(&x)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn sort3(v: [usize; 3]) -> ([usize; 3], i64) {
    let mut a = v;
    let mut sign = 1;
    for i in 0..3 {
        for j in 0..2 - i {
            if a[j] > a[j + 1] {
                a.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    (a, sign)
}

impl Vertical {
    fn map(&self, f: impl Fn(usize) -> usize) -> Vertical {
        match self {
            Vertical::None => Vertical::None,
            Vertical::Pairs(p) => Vertical::Pairs(p.iter().map(|&(a, b)| (f(a), f(b))).collect()),
            Vertical::Epsilon(e) => Vertical::Epsilon([f(e[0]), f(e[1]), f(e[2])]),
        }
    }

    fn normalized(&self) -> (Vertical, i64) {
        match self {
            Vertical::None => (Vertical::None, 1),
            Vertical::Pairs(p) => {
                let mut q: Vec<_> = p.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
                q.sort();
                (Vertical::Pairs(q), 1)
            }
            Vertical::Epsilon(e) => {
                let (s, sign) = sort3(*e);
                (Vertical::Epsilon(s), sign)
            }
        }
    }

    fn links(&self) -> Vec<usize> {
        let mut v = match self {
            Vertical::None => vec![],
            Vertical::Pairs(p) => p.iter().flat_map(|&(a, b)| [a, b]).collect(),
            Vertical::Epsilon(e) => e.to_vec(),
        };
        v.sort();
        v
    }

    /// Assignments of vertical indices to links with their weights.
    fn assignments(&self) -> Vec<([usize; 4], i64)> {
        match self {
            Vertical::None => vec![([0; 4], 1)],
            Vertical::Pairs(p) => {
                let mut out = vec![([0usize; 4], 1i64)];
                for &(a, b) in p {
                    out = out
                        .into_iter()
                        .flat_map(|(v, w)| {
                            (0..3).map(move |i| {
                                let mut v = v;
                                v[a] = i;
                                v[b] = i;
                                (v, w)
                            })
                        })
                        .collect();
                }
                out
            }
            Vertical::Epsilon(e) => {
                let perms: [([usize; 3], i64); 6] = [
                    ([0, 1, 2], 1),
                    ([1, 2, 0], 1),
                    ([2, 0, 1], 1),
                    ([1, 0, 2], -1),
                    ([0, 2, 1], -1),
                    ([2, 1, 0], -1),
                ];
                perms
                    .iter()
                    .map(|&(p, s)| {
                        let mut v = [0; 4];
                        for k in 0..3 {
                            v[e[k]] = p[k];
                        }
                        (v, s)
                    })
                    .collect()
            }
        }
    }
}

impl ContractionPattern {
    pub fn acs_count(&self) -> usize {
        self.acs.iter().filter(|&&a| a).count()
    }

    pub fn validate(&self) -> Result<(), InvarError> {
        let bad = |m: &str| Err(InvarError::Contraction(format!("{m}: {self:?}")));
        if (0..4).any(|x| !self.target.contains(&x)) {
            return bad("links must pair the slots of the two factors");
        }
        let acs: Vec<usize> = (0..4).filter(|&s| self.acs[s]).collect();
        if self.vertical.links() != acs {
            return bad("vertical indices must be contracted exactly once");
        }
        Ok(())
    }

    fn normalized(&self) -> (ContractionPattern, i64) {
        let (vertical, sign) = self.vertical.normalized();
        (ContractionPattern { target: self.target, acs: self.acs, vertical }, sign)
    }

    fn permute_first(&self, p: &[usize; 4]) -> ContractionPattern {
        let inv = inverse(p);
        ContractionPattern {
            target: [self.target[p[0]], self.target[p[1]], self.target[p[2]], self.target[p[3]]],
            acs: [self.acs[p[0]], self.acs[p[1]], self.acs[p[2]], self.acs[p[3]]],
            vertical: self.vertical.map(|s| inv[s]),
        }
    }

    fn permute_second(&self, p: &[usize; 4]) -> ContractionPattern {
        let inv = inverse(p);
        ContractionPattern { target: self.target.map(|t| inv[t]), acs: self.acs, vertical: self.vertical.clone() }
    }

    // Exchanging the factors reverses every almost complex structure.
    fn swapped(&self) -> (ContractionPattern, i64) {
        let inv = inverse(&self.target);
        let p = ContractionPattern {
            target: inv,
            acs: [self.acs[inv[0]], self.acs[inv[1]], self.acs[inv[2]], self.acs[inv[3]]],
            vertical: self.vertical.map(|s| self.target[s]),
        };
        let sign = if self.acs_count() % 2 == 0 { 1 } else { -1 };
        (p, sign)
    }

    /// Images of the pattern under the symmetry group with the relative sign
    /// of their values.
    pub fn orbit(&self, level: SymmetryLevel) -> Vec<(ContractionPattern, i64)> {
        let group = curvature_group();
        let mut out = Vec::new();
        let firsts: Vec<SignedPerm> = match level {
            SymmetryLevel::SecondFactor => vec![([0, 1, 2, 3], 1)],
            SymmetryLevel::Full => group.clone(),
        };
        let swaps: &[bool] = match level {
            SymmetryLevel::SecondFactor => &[false],
            SymmetryLevel::Full => &[false, true],
        };
        for &swap in swaps {
            let (base, s0) = if swap { self.swapped() } else { (self.clone(), 1) };
            for (p1, s1) in &firsts {
                for (p2, s2) in &group {
                    let (q, s3) = base.permute_first(p1).permute_second(p2).normalized();
                    out.push((q, s0 * s1 * s2 * s3));
                }
            }
        }
        out
    }

    /// The least pattern in the orbit and the sign relating the two values; the
    /// sign is 0 when the orbit forces the value to vanish.
    pub fn canonical(&self, level: SymmetryLevel) -> (ContractionPattern, i64) {
        let orbit = self.orbit(level);
        let best = orbit.iter().map(|(p, _)| p).min().expect("orbit is nonempty").clone();
        let signs: Vec<i64> = orbit.iter().filter(|(p, _)| *p == best).map(|&(_, s)| s).collect();
        let sign = if signs.iter().all(|&s| s == signs[0]) { signs[0] } else { 0 };
        (best, sign)
    }

    /// Builds a pattern from index letters, e.g. `("abcd", "abmn", ["cm", "dn"])`:
    /// letters shared by the factors are metric contractions, each almost complex
    /// structure joins a letter of the first factor to one of the second. The
    /// vertical structure refers to positions in `acs`. Returns the pattern and
    /// the sign from orienting each structure first factor to second.
    pub fn from_letters(r1: &str, r2: &str, acs: &[&str], vertical: &Vertical) -> Result<(Self, i64), InvarError> {
        let err = |m: &str| InvarError::Contraction(format!("{m}: {r1} {r2} {acs:?}"));
        let l1: Vec<char> = r1.chars().collect();
        let l2: Vec<char> = r2.chars().collect();
        if l1.len() != 4 || l2.len() != 4 {
            return Err(err("curvature factors take four letters"));
        }
        let pos2 = |c: char| l2.iter().position(|&x| x == c);
        let mut target = [usize::MAX; 4];
        let mut flags = [false; 4];
        let mut slot_of = vec![usize::MAX; acs.len()];
        let mut sign = 1;
        for (s, &c) in l1.iter().enumerate() {
            if let Some(t) = pos2(c) {
                target[s] = t;
                continue;
            }
            let (q, pair) = acs
                .iter()
                .enumerate()
                .find(|(_, a)| a.contains(c))
                .ok_or_else(|| err("letter of the first factor is not contracted"))?;
            let pair: Vec<char> = pair.chars().collect();
            let other = if pair[0] == c {
                pair[1]
            } else {
                sign = -sign;
                pair[0]
            };
            target[s] = pos2(other).ok_or_else(|| err("structure does not reach the second factor"))?;
            flags[s] = true;
            slot_of[q] = s;
        }
        if slot_of.contains(&usize::MAX) {
            return Err(err("structure not attached to both factors"));
        }
        let p = ContractionPattern { target, acs: flags, vertical: vertical.map(|q| slot_of[q]) };
        p.validate()?;
        let (p, s) = p.normalized();
        Ok((p, sign * s))
    }

    /// The value on a pair of horizontal four-tensors (row-major, extent `h`),
    /// given the almost complex structures as row-major `h×h` matrices.
    pub fn eval_bilinear<T>(&self, r1: &[T], r2: &[T], h: usize, acs: &[Vec<T>; 3]) -> T
    where
        T: Copy + Zero + Add<Output = T> + Mul<Output = T> + Neg<Output = T>,
    {
        let strides = [h * h * h, h * h, h, 1];
        let mut total = T::zero();
        for (assign, w) in self.vertical.assignments() {
            let mut x = r2.to_vec();
            for s in 0..4 {
                if !self.acs[s] {
                    continue;
                }
                let m = &acs[assign[s]];
                let st = strides[self.target[s]];
                let mut y = vec![T::zero(); x.len()];
                for (k, yk) in y.iter_mut().enumerate() {
                    let a = (k / st) % h;
                    let base = k - a * st;
                    let mut acc = T::zero();
                    for b in 0..h {
                        let mv = m[a * h + b];
                        if !mv.is_zero() {
                            acc = acc + mv * x[base + b * st];
                        }
                    }
                    *yk = acc;
                }
                x = y;
            }
            let mut dot = T::zero();
            for (k, &v) in r1.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let mut idx = 0;
                for s in 0..4 {
                    idx += ((k / strides[s]) % h) * strides[self.target[s]];
                }
                dot = dot + v * x[idx];
            }
            total = if w > 0 { total + dot } else { total + (-dot) };
        }
        total
    }

    /// The product of factors this pattern contracts.
    pub fn factors(&self) -> Vec<TermDescriptor> {
        use Kind::{H, V};
        let r = TermDescriptor { kind: TermKind::Curvature, indices: vec![H; 4], derivs: vec![] };
        let mut out = vec![r.clone(), r];
        for s in 0..4 {
            let (kind, indices) = if self.acs[s] { (TermKind::Acs, vec![V, H, H]) } else { (TermKind::Metric, vec![H, H]) };
            out.push(TermDescriptor { kind, indices, derivs: vec![] });
        }
        match &self.vertical {
            Vertical::None => {}
            Vertical::Pairs(p) => {
                for _ in p {
                    out.push(TermDescriptor { kind: TermKind::Metric, indices: vec![V, V], derivs: vec![] });
                }
            }
            Vertical::Epsilon(_) => out.push(TermDescriptor { kind: TermKind::Epsilon, indices: vec![V; 3], derivs: vec![] }),
        }
        out
    }
}

impl fmt::Display for ContractionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const FIRST: [char; 4] = ['α', 'β', 'γ', 'δ'];
        const SECOND: [char; 4] = ['μ', 'ν', 'ρ', 'σ'];
        let inv = inverse(&self.target);
        let mut fresh = SECOND.iter();
        let mut second = ['?'; 4];
        for t in 0..4 {
            let s = inv[t];
            second[t] = if self.acs[s] { *fresh.next().expect("four letters") } else { FIRST[s] };
        }
        let mut vletter = [' '; 4];
        let mut tail = String::new();
        match &self.vertical {
            Vertical::None => {}
            Vertical::Pairs(p) => {
                for (k, &(a, b)) in p.iter().enumerate() {
                    vletter[a] = ['i', 'j'][k];
                    vletter[b] = ['i', 'j'][k];
                }
            }
            Vertical::Epsilon(e) => {
                for (k, &s) in e.iter().enumerate() {
                    vletter[s] = ['i', 'j', 'k'][k];
                }
                tail.push_str("ε^{ijk}");
            }
        }
        write!(f, "R_{{{}}}R^{{{}}}", FIRST.iter().collect::<String>(), second.iter().collect::<String>())?;
        for s in 0..4 {
            if self.acs[s] {
                write!(f, "I_{}^{{{}{}}}", vletter[s], FIRST[s], second[self.target[s]])?;
            }
        }
        write!(f, "{tail}")
    }
}

/// Canonical representatives of all complete contractions of `R ⊗ R` with
/// 0, 2, 3 or 4 almost complex structures. One structure would leave a free
/// vertical index; two are joined by `δ`, three by `ε`, four by two `δ`s.
/// The flag marks patterns forced to vanish by the symmetries alone.
pub fn enumerate_contractions(level: SymmetryLevel) -> Vec<(ContractionPattern, bool)> {
    let mut seen: BTreeMap<ContractionPattern, bool> = BTreeMap::new();
    for target in permutations4() {
        for mask in 0u8..16 {
            let acs = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0, mask & 8 != 0];
            let links: Vec<usize> = (0..4).filter(|&s| acs[s]).collect();
            let verticals = match links.len() {
                0 => vec![Vertical::None],
                2 => vec![Vertical::Pairs(vec![(links[0], links[1])])],
                3 => vec![Vertical::Epsilon([links[0], links[1], links[2]])],
                4 => vec![
                    Vertical::Pairs(vec![(0, 1), (2, 3)]),
                    Vertical::Pairs(vec![(0, 2), (1, 3)]),
                    Vertical::Pairs(vec![(0, 3), (1, 2)]),
                ],
                _ => vec![],
            };
            for vertical in verticals {
                let (c, sign) = ContractionPattern { target, acs, vertical }.canonical(level);
                seen.insert(c, sign == 0);
            }
        }
    }
    seen.into_iter().collect()
}

/// A contraction written in index letters, with its known value relative to
/// `‖W‖²` where one is stated.
#[derive(Clone, Debug)]
pub struct NamedPattern {
    pub name: &'static str,
    pub first: &'static str,
    pub second: &'static str,
    pub acs: &'static [&'static str],
    pub vertical: Vertical,
    pub expected: Option<(i64, i64)>,
}

impl NamedPattern {
    pub fn build(&self) -> (ContractionPattern, i64) {
        ContractionPattern::from_letters(self.first, self.second, self.acs, &self.vertical)
            .expect("named patterns are well formed")
    }
}

/// The contractions named in the classification of weight-four invariants.
pub fn named_patterns() -> Vec<NamedPattern> {
    let two = || Vertical::Pairs(vec![(0, 1)]);
    let three = || Vertical::Epsilon([0, 1, 2]);
    let four = || Vertical::Pairs(vec![(0, 1), (2, 3)]);
    let p = |name, first, second, acs, vertical, expected| NamedPattern { name, first, second, acs, vertical, expected };
    vec![
        p("norm", "abcd", "abcd", &[], Vertical::None, Some((1, 1))),
        p("cross", "abcd", "acbd", &[], Vertical::None, Some((1, 2))),
        p("cross-reversed", "abcd", "adbc", &[], Vertical::None, Some((-1, 2))),
        p("acs2-casimir", "abcd", "abmn", &["cm", "dn"], two(), Some((3, 1))),
        p("acs2-mixed", "abcd", "ambn", &["cm", "dn"], two(), None),
        p("acs2-mixed-reversed", "abcd", "anbm", &["cm", "dn"], two(), None),
        p("acs2-crossed", "acbd", "ambn", &["cm", "dn"], two(), Some((0, 1))),
        p("acs2-crossed-reversed", "acbd", "anbm", &["cm", "dn"], two(), None),
        p("acs3-first", "abcd", "amnr", &["bm", "cn", "dr"], three(), Some((0, 1))),
        p("acs3-second", "abcd", "armn", &["bm", "cn", "dr"], three(), None),
        p("acs3-third", "abcd", "anrm", &["bm", "cn", "dr"], three(), None),
        p("acs4-a", "abcd", "mnrs", &["am", "bn", "cr", "ds"], four(), None),
        p("acs4-b", "abcd", "mrns", &["am", "bn", "cr", "ds"], four(), None),
        p("acs4-c", "abcd", "msnr", &["am", "bn", "cr", "ds"], four(), None),
        p("acs4-d", "acbd", "mrns", &["am", "bn", "cr", "ds"], four(), None),
        p("acs4-e", "acbd", "msnr", &["am", "bn", "cr", "ds"], four(), None),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invar::weight::product_weight;

    #[test]
    fn metric_only_classes() {
        let count = |level| enumerate_contractions(level).iter().filter(|(p, _)| p.acs_count() == 0).count();
        assert_eq!(count(SymmetryLevel::SecondFactor), 3);
        assert_eq!(count(SymmetryLevel::Full), 2);
        let (a, sa) = named_patterns()[1].build();
        let (b, sb) = named_patterns()[2].build();
        let (ca, ta) = a.canonical(SymmetryLevel::Full);
        let (cb, tb) = b.canonical(SymmetryLevel::Full);
        assert_eq!(ca, cb);
        assert_eq!(sa * ta, -sb * tb);
    }

    #[test]
    fn curvature_group_has_eight_elements() {
        let g = curvature_group();
        assert_eq!(g.len(), 8);
        assert_eq!(g.iter().filter(|(_, s)| *s == 1).count(), 4);
    }

    #[test]
    fn named_patterns_are_enumerated() {
        for level in [SymmetryLevel::SecondFactor, SymmetryLevel::Full] {
            let all: Vec<ContractionPattern> = enumerate_contractions(level).into_iter().map(|(p, _)| p).collect();
            for np in named_patterns() {
                let (p, _) = np.build();
                assert!(all.contains(&p.canonical(level).0), "{} missing", np.name);
            }
        }
    }

    #[test]
    fn mixed_pair_are_negatives() {
        let named = named_patterns();
        let get = |n: &str| named.iter().find(|p| p.name == n).unwrap().build();
        let (a, sa) = get("acs2-mixed");
        let (b, sb) = get("acs2-mixed-reversed");
        let (ca, ta) = a.canonical(SymmetryLevel::Full);
        let (cb, tb) = b.canonical(SymmetryLevel::Full);
        assert_eq!(ca, cb);
        assert_eq!(sa * ta, -sb * tb);
    }

    #[test]
    fn every_pattern_has_weight_four() {
        for (p, _) in enumerate_contractions(SymmetryLevel::Full) {
            p.validate().unwrap();
            assert_eq!(product_weight(&p.factors()).unwrap(), 4);
        }
    }

    #[test]
    fn one_structure_is_not_a_complete_contraction() {
        let p = ContractionPattern { target: [0, 1, 2, 3], acs: [true, false, false, false], vertical: Vertical::None };
        assert!(p.validate().is_err());
    }

    #[test]
    fn display_names_the_letters() {
        let (p, _) = named_patterns()[3].build();
        assert_eq!(p.to_string(), "R_{αβγδ}R^{αβμν}I_i^{γμ}I_i^{δν}");
    }
}

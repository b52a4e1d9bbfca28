//! Weights of curvature and torsion terms and the table of terms of weight at most four.

use std::fmt;

use serde_json::{json, Value};

use super::InvarError;
use crate::qalg::Kind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Torsion,
    Curvature,
    Metric,
    Acs,
    Epsilon,
    Constant,
}

/// A torsion or curvature component `T_{abc,D}` / `R_{abcd,E}`, or a weight-zero
/// building block, described by the kinds of its indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermDescriptor {
    pub kind: TermKind,
    pub indices: Vec<Kind>,
    pub derivs: Vec<Kind>,
}

fn order(ks: &[Kind]) -> i64 {
    ks.iter().map(|k| k.order() as i64).sum()
}

impl TermDescriptor {
    pub fn new(kind: TermKind, indices: Vec<Kind>, derivs: Vec<Kind>) -> Result<Self, InvarError> {
        let t = TermDescriptor { kind, indices, derivs };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), InvarError> {
        use Kind::{H, V};
        let bad = || Err(InvarError::Malformed(self.to_string()));
        let ix = &self.indices;
        let ok = match self.kind {
            TermKind::Torsion => ix.len() == 3,
            TermKind::Curvature => ix.len() == 4 && ix[2] == ix[3],
            TermKind::Metric => ix.len() == 2 && ix[0] == ix[1] && self.derivs.is_empty(),
            TermKind::Acs => ix[..] == [V, H, H] && self.derivs.is_empty(),
            TermKind::Epsilon => ix[..] == [V, V, V] && self.derivs.is_empty(),
            TermKind::Constant => ix.is_empty() && self.derivs.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            bad()
        }
    }

    /// `w(T_{abc,D}) = o(bcD) − o(a)`, `w(R_{abcd,E}) = o(abcE) − o(d)`, zero for
    /// metrics, almost complex structures, `ε` and constants.
    pub fn weight(&self) -> Result<i64, InvarError> {
        self.validate()?;
        let ix = &self.indices;
        Ok(match self.kind {
            TermKind::Torsion => order(&ix[1..]) + order(&self.derivs) - order(&ix[..1]),
            TermKind::Curvature => order(&ix[..3]) + order(&self.derivs) - order(&ix[3..]),
            _ => 0,
        })
    }

    /// Parses `T_{αiβ,γδ}`, `R_{ijβγ}`, `g_{αβ}`, `I_{iαβ}`, `ε_{ijk}` or `c`.
    /// Greek letters are horizontal, Latin letters vertical.
    pub fn parse(s: &str) -> Result<Self, InvarError> {
        let err = || InvarError::Parse(s.to_string());
        if s == "c" {
            return Self::new(TermKind::Constant, vec![], vec![]);
        }
        let (head, rest) = s.split_once("_{").ok_or_else(err)?;
        let body = rest.strip_suffix('}').ok_or_else(err)?;
        let kind = match head {
            "T" => TermKind::Torsion,
            "R" => TermKind::Curvature,
            "g" => TermKind::Metric,
            "I" => TermKind::Acs,
            "ε" => TermKind::Epsilon,
            _ => return Err(err()),
        };
        let (idx, der) = body.split_once(',').unwrap_or((body, ""));
        let kinds = |part: &str| -> Result<Vec<Kind>, InvarError> {
            part.chars()
                .map(|c| {
                    if c.is_ascii_lowercase() {
                        Ok(Kind::V)
                    } else if ('α'..='ω').contains(&c) {
                        Ok(Kind::H)
                    } else {
                        Err(err())
                    }
                })
                .collect()
        };
        Self::new(kind, kinds(idx)?, kinds(der)?)
    }

    pub fn to_json(&self) -> Value {
        json!({ "term": self.to_string(), "weight": self.weight().ok() })
    }
}

impl fmt::Display for TermDescriptor {
    /// Letters are assigned in order: `αβγδρσ…` for horizontal, `ijkl…` for vertical.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const GREEK: [char; 8] = ['α', 'β', 'γ', 'δ', 'ρ', 'σ', 'μ', 'ν'];
        const LATIN: [char; 6] = ['i', 'j', 'k', 'l', 'p', 'q'];
        let head = match self.kind {
            TermKind::Torsion => "T",
            TermKind::Curvature => "R",
            TermKind::Metric => "g",
            TermKind::Acs => "I",
            TermKind::Epsilon => "ε",
            TermKind::Constant => return write!(f, "c"),
        };
        let (mut g, mut l) = (0, 0);
        let mut letter = |k: Kind| match k {
            Kind::H => {
                g += 1;
                GREEK[(g - 1) % GREEK.len()]
            }
            Kind::V => {
                l += 1;
                LATIN[(l - 1) % LATIN.len()]
            }
        };
        let idx: String = self.indices.iter().map(|&k| letter(k)).collect();
        let der: String = self.derivs.iter().map(|&k| letter(k)).collect();
        if der.is_empty() {
            write!(f, "{head}_{{{idx}}}")
        } else {
            write!(f, "{head}_{{{idx},{der}}}")
        }
    }
}

/// Weight of a product of factors.
pub fn product_weight(factors: &[TermDescriptor]) -> Result<i64, InvarError> {
    factors.iter().map(|t| t.weight()).sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableStatus {
    Listed,
    IdenticallyZero,
    /// Expressible through other listed terms.
    Determined(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableEntry {
    pub term: TermDescriptor,
    pub weight: i64,
    pub status: TableStatus,
}

// Derivative multisets with horizontal letters first and total order ≤ `max`.
fn derivative_sets(max: i64) -> Vec<Vec<Kind>> {
    let mut out = Vec::new();
    for q in 0..=max / 2 {
        for p in 0..=max - 2 * q {
            let mut d = vec![Kind::H; p as usize];
            d.extend(vec![Kind::V; q as usize]);
            out.push(d);
        }
    }
    out
}

fn torsion_status(a: Kind, b: Kind, c: Kind, derivs: &[Kind]) -> TableStatus {
    use Kind::{H, V};
    match (a, b, c) {
        (H, H, H) | (V, V, H) => TableStatus::IdenticallyZero,
        (V, H, H) => TableStatus::Determined("T_{iαβ} = −2I_{iαβ}"),
        (V, V, V) if !derivs.is_empty() => TableStatus::Determined("T_{ijk} is a multiple of S ε_{ijk}"),
        _ => TableStatus::Listed,
    }
}

/// Every torsion and curvature component of weight `≤ max_weight` up to the
/// index symmetries (torsion antisymmetric in its last two slots with the
/// vertical one first, curvature antisymmetric in its first pair with the
/// horizontal one first, derivative letters unordered), together with the
/// weight-zero building blocks. Terms that vanish identically or are fixed by
/// other terms are kept with their status.
pub fn enumerate_table(max_weight: i64) -> Vec<TableEntry> {
    use Kind::{H, V};
    let mut out = Vec::new();
    let blocks = [
        (TermKind::Metric, vec![H, H]),
        (TermKind::Metric, vec![V, V]),
        (TermKind::Acs, vec![V, H, H]),
        (TermKind::Epsilon, vec![V, V, V]),
    ];
    for (kind, indices) in blocks {
        let term = TermDescriptor { kind, indices, derivs: vec![] };
        out.push(TableEntry { term, weight: 0, status: TableStatus::Listed });
    }
    let pairs = [(V, V), (V, H), (H, H)];
    for a in [H, V] {
        for &(b, c) in &pairs {
            for d in derivative_sets(max_weight) {
                let term = TermDescriptor { kind: TermKind::Torsion, indices: vec![a, b, c], derivs: d };
                let w = term.weight().expect("torsion descriptors are well formed");
                if w <= max_weight {
                    let status = torsion_status(a, b, c, &term.derivs);
                    out.push(TableEntry { term, weight: w, status });
                }
            }
        }
    }
    for &(a, b) in &[(H, H), (H, V), (V, V)] {
        for cd in [H, V] {
            for d in derivative_sets(max_weight) {
                let term = TermDescriptor { kind: TermKind::Curvature, indices: vec![a, b, cd, cd], derivs: d };
                let w = term.weight().expect("curvature descriptors are well formed");
                if w <= max_weight {
                    let status = if cd == V {
                        TableStatus::Determined("R_{abij} is determined by R_{abαβ}")
                    } else {
                        TableStatus::Listed
                    };
                    out.push(TableEntry { term, weight: w, status });
                }
            }
        }
    }
    out.sort_by(|x, y| (x.weight, &x.term).cmp(&(y.weight, &y.term)));
    out
}

/// The listed terms of each weight `0..=max_weight`.
pub fn table_columns(max_weight: i64) -> Vec<(i64, Vec<TermDescriptor>)> {
    let table = enumerate_table(max_weight);
    (0..=max_weight)
        .map(|w| {
            let col =
                table.iter().filter(|e| e.weight == w && e.status == TableStatus::Listed).map(|e| e.term.clone());
            (w, col.collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> TermDescriptor {
        TermDescriptor::parse(s).unwrap()
    }

    #[test]
    fn weights_of_single_terms() {
        assert_eq!(t("T_{αij,β}").weight().unwrap(), 4);
        assert_eq!(t("R_{αβγδ}").weight().unwrap(), 2);
        assert_eq!(t("g_{αβ}").weight().unwrap(), 0);
        assert_eq!(t("R_{αiβγ,δ}").weight().unwrap(), 4);
        assert_eq!(t("T_{αiβ,j}").weight().unwrap(), 4);
        assert_eq!(t("c").weight().unwrap(), 0);
    }

    #[test]
    fn malformed_terms_are_rejected() {
        assert!(TermDescriptor::parse("R_{αβγi}").is_err());
        assert!(TermDescriptor::parse("g_{αi}").is_err());
        assert!(TermDescriptor::parse("I_{αβγ}").is_err());
        assert!(TermDescriptor::parse("T_{αβ}").is_err());
        assert!(TermDescriptor::parse("Q_{αβ}").is_err());
    }

    #[test]
    fn display_round_trips() {
        for e in enumerate_table(4) {
            assert_eq!(TermDescriptor::parse(&e.term.to_string()).unwrap(), e.term);
        }
    }

    #[test]
    fn weight_one_terms_vanish() {
        let ones: Vec<_> = enumerate_table(4).into_iter().filter(|e| e.weight == 1).collect();
        let zero: Vec<_> =
            ones.iter().filter(|e| e.status == TableStatus::IdenticallyZero).map(|e| e.term.clone()).collect();
        assert_eq!(zero, vec![t("T_{αβγ}"), t("T_{ijα}")]);
        assert!(ones.iter().all(|e| e.status != TableStatus::Listed));
        assert!(table_columns(4)[1].1.is_empty());
    }

    #[test]
    fn product_weights_add() {
        let f = [t("R_{αβγδ}"), t("R_{αβγδ}"), t("I_{iαβ}"), t("ε_{ijk}")];
        assert_eq!(product_weight(&f).unwrap(), 4);
    }
}

//! Order-by-order choice of the conformal factor killing the symmetrized
//! `Q`-jets at the base point.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::biquard::Biquard;
use super::jets::QJetTable;
use super::ConfError;
use crate::curv::{a_operator, mainthm_3x3, mainthm_4x4};
use crate::poly::{solve_lm, FlatFields, HPoly};
use crate::qalg::Dim;
use crate::scalar::{Rational, Scalar};

/// `u = ℓ + Σ_{m≥2} u_m` with `ℓ` the 1-jet part (linear in `x`) and `u_m ∈ 𝒫_m`
/// (`u₂ ∈ ℛ₂`).
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalFactor {
    pub dim: Dim,
    pub one_jet: HPoly,
    pub frozen_one_jet: bool,
    pieces: BTreeMap<usize, HPoly>,
}

impl ConformalFactor {
    pub fn zero(dim: Dim) -> Self {
        ConformalFactor { dim, one_jet: HPoly::zero(dim), frozen_one_jet: false, pieces: BTreeMap::new() }
    }

    /// Fixes the 1-jet. Only the weight-one part (`u_α` at the base point) is free;
    /// the value `u(q)` is a global scale and is not represented.
    pub fn with_one_jet(dim: Dim, one_jet: HPoly) -> Result<Self, ConfError> {
        if !one_jet.is_zero() && !one_jet.is_homogeneous(1) {
            return Err(ConfError::BadPiece(1));
        }
        Ok(ConformalFactor { dim, one_jet, frozen_one_jet: true, pieces: BTreeMap::new() })
    }

    pub fn push(&mut self, m: usize, p: HPoly) -> Result<(), ConfError> {
        if m < 2 || (!p.is_zero() && !p.is_homogeneous(m)) || (m == 2 && p.depends_on_t()) {
            return Err(ConfError::BadPiece(m));
        }
        self.pieces.insert(m, p);
        Ok(())
    }

    pub fn piece(&self, m: usize) -> HPoly {
        self.pieces.get(&m).cloned().unwrap_or_else(|| HPoly::zero(self.dim))
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&usize, &HPoly)> {
        self.pieces.iter()
    }

    pub fn total(&self) -> HPoly {
        self.pieces.values().fold(self.one_jet.clone(), |acc, p| acc.add(p))
    }

    pub fn is_zero(&self) -> bool {
        self.one_jet.is_zero() && self.pieces.values().all(|p| p.is_zero())
    }

    pub fn to_json(&self) -> Value {
        let pieces: Vec<Value> = self.pieces.iter().map(|(m, p)| json!({"m": m, "u": p.to_json()})).collect();
        json!({"n": self.dim.n(), "one_jet": self.one_jet.to_json(), "frozen_one_jet": self.frozen_one_jet, "pieces": pieces})
    }
}

/// Symmetrized `Q`-jets of the structure rescaled by a conformal factor.
///
/// Contract: `jets(0)` is the base table, and adding `u_m ∈ 𝒫_m` leaves every
/// entry with `o(abC) < m` unchanged.
pub trait JetOracle {
    fn dim(&self) -> Dim;
    fn max_order(&self) -> usize;
    fn jets(&self, u: &ConformalFactor) -> Result<QJetTable, ConfError>;
}

/// Applies exactly `Φ̃_(m) − Φ_(m) = L_m u_m` to a base table. The 1-jet part
/// has no effect (`L_1` vanishes on linear functions of `x`).
#[derive(Clone, Debug)]
pub struct LinearizedOracle {
    pub base: QJetTable,
}

impl LinearizedOracle {
    pub fn new(base: QJetTable) -> Self {
        LinearizedOracle { base }
    }
}

impl JetOracle for LinearizedOracle {
    fn dim(&self) -> Dim {
        self.base.dim
    }

    fn max_order(&self) -> usize {
        self.base.max_order
    }

    fn jets(&self, u: &ConformalFactor) -> Result<QJetTable, ConfError> {
        let fields = FlatFields::new(self.dim());
        let mut out = self.base.clone();
        for (&m, p) in u.pieces() {
            if m <= self.max_order() && !p.is_zero() {
                out = out.add(&QJetTable::from_phi(self.dim(), self.max_order(), &fields.lm(m, p), m)?);
            }
        }
        Ok(out)
    }
}

/// The flat model rescaled by `e^{2(v+u)}`, with `Q`-jets computed from the
/// Biquard connection in exact arithmetic.
#[derive(Clone, Debug)]
pub struct FlatOracle {
    pub dim: Dim,
    pub max_order: usize,
    pub seed: HPoly,
    pub weight: i64,
}

impl FlatOracle {
    /// The series are carried to weight `N + 2`.
    pub fn new(dim: Dim, max_order: usize, seed: HPoly) -> Self {
        FlatOracle { dim, max_order, seed, weight: max_order as i64 + 2 }
    }
}

impl JetOracle for FlatOracle {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn max_order(&self) -> usize {
        self.max_order
    }

    fn jets(&self, u: &ConformalFactor) -> Result<QJetTable, ConfError> {
        let total = self.seed.add(&u.total()).truncate(self.weight as usize);
        let bq = Biquard::new(self.dim, &total, self.weight)?;
        let q = bq
            .q_field(self.max_order >= 4)
            .ok_or_else(|| ConfError::Truncated("Q at the origin".to_string()))?;
        let mut f = bq.field(2, q);
        QJetTable::from_raw(self.dim, self.max_order, |w| {
            let mut idx = vec![w.a, w.b];
            idx.extend_from_slice(&w.c);
            f.at_origin(&idx).ok_or_else(|| ConfError::Truncated(format!("Q jet {idx:?}")))
        })
    }
}

/// `u_m = L_m⁻¹(−Φ_(m))`, unique in `𝒫_m` (`ℛ₂` for `m = 2`).
pub fn normalize_step(m: usize, jets: &QJetTable) -> Result<HPoly, ConfError> {
    let rhs = jets.phi(m)?.scale(&Rational::from_i64(-1));
    solve_lm(jets.dim, m, &rhs).map_err(ConfError::Poly)
}

#[derive(Clone, Debug)]
pub struct Normalization {
    pub factor: ConformalFactor,
    /// The jets of the normalized structure.
    pub jets: QJetTable,
}

/// Chooses `u₂, …, u_N` in turn so that every symmetrized jet with `o(abC) ≤ N`
/// vanishes. Aborts if adding `u_m` disturbs a lower order or fails to clear
/// order `m`.
pub fn normalize(max_order: usize, oracle: &dyn JetOracle, one_jet: Option<HPoly>) -> Result<Normalization, ConfError> {
    let dim = oracle.dim();
    if max_order > oracle.max_order() {
        return Err(ConfError::MissingJets(max_order));
    }
    let mut u = match one_jet {
        Some(l) => ConformalFactor::with_one_jet(dim, l)?,
        None => ConformalFactor::zero(dim),
    };
    let mut jets = oracle.jets(&u)?;
    for m in 2..=max_order {
        let um = normalize_step(m, &jets)?;
        u.push(m, um)?;
        let next = oracle.jets(&u)?;
        if let Some(key) = next.first_difference_below(&jets, m) {
            return Err(ConfError::Unstable { m, key });
        }
        if let Some((key, _)) = next.nonzero_through(m).into_iter().next() {
            return Err(ConfError::Residual { m, key });
        }
        jets = next;
    }
    Ok(Normalization { factor: u, jets })
}

/// One quantity certified to vanish, with the step of the argument that kills it.
#[derive(Clone, Debug, PartialEq)]
pub struct Vanishing {
    pub quantity: &'static str,
    pub order: usize,
    pub reason: String,
}

fn solve_zero_system(m: &crate::linalg::Matrix<Rational>, rhs: &[Rational]) -> Result<Vec<Rational>, ConfError> {
    let det = m.det();
    if det.is_zero() {
        return Err(ConfError::Singular);
    }
    m.solve(rhs).ok_or(ConfError::Singular)
}

/// Certifies the vanishing list of the main theorem from symmetrized jets that
/// vanish through order four.
pub fn vanishing_report(jets: &QJetTable) -> Result<Vec<Vanishing>, ConfError> {
    let dim = jets.dim;
    let h = dim.h();
    if jets.max_order < 4 {
        return Err(ConfError::MissingJets(4));
    }
    if let Some((key, _)) = jets.nonzero_through(4).into_iter().next() {
        return Err(ConfError::Hypothesis(key));
    }
    let n = dim.n() as i64;
    let mut out = Vec::new();
    let mut say = |q: &'static str, order: usize, reason: String| out.push(Vanishing { quantity: q, order, reason });

    let tr2 = (0..h).fold(Rational::zero(), |acc, a| acc + jets.get(a, a, &[]));
    let c_s = Rational::ratio(4 * n + 1, 8 * (n + 2));
    say("S", 2, format!("Q_α^α = {c_s}·S = {tr2}"));
    for q in ["tau", "mu"] {
        say(q, 2, "Q_αβ = ½τ + μ with S = 0; the Casimir eigenspaces are complementary".into());
    }
    for q in ["L", "Ric", "T_aib", "T_ijk"] {
        say(q, 2, "determined by τ, μ and S".into());
    }

    let (a_op, _) = a_operator::<Rational>(dim);
    say("T_ajk", 3, format!("Q_αi = −A⁻¹(Tε) = 0 and det A = {}", a_op.det()));
    let m3 = mainthm_3x3(dim);
    for b in 0..h {
        let tr = (0..h).fold(Rational::zero(), |acc, a| acc + jets.get(a, a, &[b]));
        let x = solve_zero_system(&m3, &[tr * Rational::from_i64(3), Rational::zero(), Rational::zero()])?;
        if x.iter().any(|v| !v.is_zero()) {
            return Err(ConfError::Hypothesis(vec![b]));
        }
    }
    let why = format!("3×3 system with det {}", m3.det());
    say("S_,b", 3, why.clone());
    say("div tau", 3, why.clone());
    say("div mu", 3, why);

    say("B_(ij)", 4, "Q_ij = −(B_(ij) − ½ tr B δ_ij)/8n; its trace forces tr B = 0".into());
    for i in 0..3 {
        let tr = (0..h).fold(Rational::zero(), |acc, a| acc + jets.get(a, a, &[h + i]));
        if !tr.is_zero() {
            return Err(ConfError::Hypothesis(vec![h + i]));
        }
    }
    say("S_,i", 4, format!("traced Q_(αβ,i) = {}·S_,i", Rational::ratio(4 * n + 3, 8 * (n + 2))));
    say("B_[ij]", 4, "ε^{jk}_i B_jk is a multiple of S_,i".into());
    let m4 = mainthm_4x4(dim);
    let tr4 = (0..h).fold(Rational::zero(), |acc, a| {
        (0..h).fold(acc, |acc, b| acc + jets.get(a, a, &[b, b]))
    });
    let x = solve_zero_system(&m4, &[Rational::zero(), Rational::zero(), Rational::zero(), tr4 * Rational::from_i64(3)])?;
    if x.iter().any(|v| !v.is_zero()) {
        return Err(ConfError::Hypothesis(vec![]));
    }
    let why = format!("4×4 system with det {}", m4.det());
    for q in ["S_,a^a", "tau_ab,^ab", "mu_ab,^ab", "R_gib^g_,a I^iba"] {
        say(q, 4, why.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::random_homogeneous;
    use rand::SeedableRng;

    fn dim1() -> Dim {
        Dim::new(1).unwrap()
    }

    fn random_table(dim: Dim, big_n: usize, seed: u64) -> QJetTable {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = QJetTable::zero(dim, big_n);
        for m in 2..=big_n {
            let mut p = random_homogeneous(dim, m, &mut rng);
            if m == 2 {
                // Order-two tables never carry a pure t^i term.
                p = p.homogeneous_part(2);
                p.terms.retain(|mo, _| mo.t_degree(dim.h()) == 0);
            }
            t = t.add(&QJetTable::from_phi(dim, big_n, &p, m).unwrap());
        }
        t
    }

    #[test]
    fn zero_table_needs_no_factor() {
        let oracle = LinearizedOracle::new(QJetTable::zero(dim1(), 4));
        let r = normalize(4, &oracle, None).unwrap();
        assert!(r.factor.is_zero());
        assert_eq!(normalize_step(3, &QJetTable::zero(dim1(), 4)).unwrap(), HPoly::zero(dim1()));
    }

    #[test]
    fn linearized_normalization_clears_all_orders() {
        let oracle = LinearizedOracle::new(random_table(dim1(), 4, 11));
        let r = normalize(4, &oracle, None).unwrap();
        assert!(r.jets.is_zero_through(4));
        let again = normalize(4, &LinearizedOracle::new(r.jets.clone()), None).unwrap();
        assert!(again.factor.is_zero());
    }

    #[test]
    fn single_quadratic_entry_is_cleared() {
        let dim = dim1();
        let mut t = QJetTable::zero(dim, 2);
        t.set_key(vec![0, 0], Rational::from_i64(5)).unwrap();
        let u2 = normalize_step(2, &t).unwrap();
        let mut u = ConformalFactor::zero(dim);
        u.push(2, u2).unwrap();
        assert!(LinearizedOracle::new(t).jets(&u).unwrap().is_zero_through(2));
    }

    #[test]
    fn quadratic_piece_must_not_depend_on_t() {
        let dim = dim1();
        assert!(matches!(ConformalFactor::zero(dim).push(2, HPoly::var(dim, 4)), Err(ConfError::BadPiece(2))));
    }

    #[test]
    fn vanishing_report_on_zero_jets() {
        let r = vanishing_report(&QJetTable::zero(dim1(), 4)).unwrap();
        assert!(r.len() >= 17);
        let mut t = QJetTable::zero(dim1(), 4);
        t.set_key(vec![0, 1, 2], Rational::from_i64(1)).unwrap();
        assert!(matches!(vanishing_report(&t), Err(ConfError::Hypothesis(_))));
    }
}

//! Verification suites over every module, shared by the command-line driver and
//! the acceptance tests. Each suite returns one record per check.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::conf::{
    connection_change, normalize, vanishing_report, ConformalFactor, FlatOracle, JetOracle, LinearizedOracle,
    QJetTable,
};
use crate::curv::{
    a_operator, conformal_curvature, l_and_q, mainthm_3x3, mainthm_4x4, ricci_and_scalar, ricci_form_traces,
    ricci_forms, PointState,
};
use crate::geo::{
    dilate_coords, parabolic_exp, parabolic_geodesic, parabolic_log, vanishing_order, ParabolicChart, PolyConnection,
    VanishingOrder,
};
use crate::heis::{flat_frame, structure_check, GroupPoint};
use crate::invar::{
    enumerate_contractions, verify_reductions, verify_second_derivative_system, SymmetryLevel,
};
use crate::linalg::Matrix;
use crate::poly::{build_lm, random_homogeneous, FlatFields, HPoly, LmSolver, Mono};
use crate::qalg::{casimir, compose_ops, contract, epsilon, identity_op, standard_acs, Dim};
use crate::scalar::{rat, Rational, Scalar};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SuiteError {
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("configuration: {0}")]
    Config(String),
}

/// Where the expected value of a check comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// An identity that must hold exactly or to the stated tolerance.
    Identity,
    /// Agreement with an independent computation.
    Oracle,
    /// A measured constant recorded for regression.
    Regression,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Identity => "identity",
            Provenance::Oracle => "oracle",
            Provenance::Regression => "regression",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: String,
    pub tolerance: String,
    pub provenance: Provenance,
    /// Inputs of the first failure.
    pub counterexample: Option<String>,
}

impl Check {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "status": if self.pass { "pass" } else { "fail" },
            "measured": self.measured,
            "tolerance": self.tolerance,
            "provenance": self.provenance.tag(),
            "counterexample": self.counterexample,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Algebra,
    Flat,
    Geodesic,
    Poly,
    Curv,
    Normalize,
    CoordChange,
    Invar,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Algebra,
        Suite::Flat,
        Suite::Geodesic,
        Suite::Poly,
        Suite::Curv,
        Suite::Normalize,
        Suite::CoordChange,
        Suite::Invar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Flat => "flat",
            Suite::Geodesic => "geo",
            Suite::Poly => "poly",
            Suite::Curv => "curv",
            Suite::Normalize => "conf",
            Suite::CoordChange => "coord",
            Suite::Invar => "invar",
        }
    }

    /// Acceptance criterion number, 1 to 8.
    pub fn criterion(self) -> usize {
        Suite::ALL.iter().position(|s| *s == self).expect("listed") + 1
    }

    pub fn title(self) -> &'static str {
        match self {
            Suite::Algebra => "algebraic identities",
            Suite::Flat => "flat model structure",
            Suite::Geodesic => "parabolic geodesics",
            Suite::Poly => "L_m operator",
            Suite::Curv => "curvature calculus",
            Suite::Normalize => "normalization",
            Suite::CoordChange => "coordinate-change order",
            Suite::Invar => "invariant reductions",
        }
    }

    /// Wall-clock budget in seconds.
    pub fn budget(self) -> f64 {
        match self {
            Suite::Algebra | Suite::Flat => 10.0,
            Suite::Poly | Suite::Curv => 30.0,
            Suite::Geodesic | Suite::Normalize => 60.0,
            Suite::CoordChange | Suite::Invar => 120.0,
        }
    }

    fn default_ns(self) -> Vec<usize> {
        match self {
            Suite::Algebra => vec![1, 2, 3],
            Suite::Flat | Suite::Curv | Suite::Invar => vec![1, 2],
            _ => vec![1],
        }
    }
}

impl FromStr for Suite {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, SuiteError> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| SuiteError::UnknownSuite(s.to_string()))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    /// Restricts the run to one `n`; otherwise the criterion's range is used.
    pub n: Option<usize>,
    /// Random trials where a suite samples; `None` uses the criterion's count.
    pub trials: Option<usize>,
    /// Rational arithmetic where a suite supports both backends.
    pub exact: bool,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { n: None, trials: None, exact: true, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn within_budget(&self) -> bool {
        self.seconds < self.suite.budget()
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite.name(),
            "criterion": self.suite.criterion(),
            "title": self.suite.title(),
            "config": {
                "n": self.config.n,
                "trials": self.config.trials,
                "scalar": if self.config.exact { "rational" } else { "f64" },
                "seed": self.config.seed,
            },
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            "seconds": self.seconds,
            "budget_seconds": self.suite.budget(),
            "pass": self.pass(),
        })
    }
}

// Accumulates checks for one suite.
struct Recorder {
    checks: Vec<Check>,
    tol: String,
}

impl Recorder {
    fn new(exact: bool) -> Self {
        Recorder { checks: Vec::new(), tol: if exact { "exact".into() } else { format!("{FLOAT_TOL:e}") } }
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, measured: impl Into<String>, tol: impl Into<String>, p: Provenance, cx: Option<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            measured: measured.into(),
            tolerance: tol.into(),
            provenance: p,
            counterexample: if pass { None } else { cx },
        });
    }

    // Counts violations over labelled cases and keeps the first one.
    fn sweep(&mut self, name: impl Into<String>, p: Provenance, cases: impl IntoIterator<Item = (String, bool)>) {
        let mut total = 0;
        let mut first = None;
        let mut bad = 0;
        for (label, ok) in cases {
            total += 1;
            if !ok {
                bad += 1;
                first.get_or_insert(label);
            }
        }
        let tol = self.tol.clone();
        self.push(name, bad == 0, format!("{bad} violations in {total} cases"), tol, p, first);
    }
}

const FLOAT_TOL: f64 = 1e-9;

fn tol_for(exact: bool) -> f64 {
    if exact {
        0.0
    } else {
        FLOAT_TOL
    }
}

fn dims(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<Dim>, SuiteError> {
    let ns = cfg.n.map(|n| vec![n]).unwrap_or_else(|| suite.default_ns());
    ns.into_iter().map(|n| Dim::new(n).map_err(|e| SuiteError::Config(e.to_string()))).collect()
}

/// Runs one suite.
pub fn run(suite: Suite, cfg: SuiteConfig) -> Result<SuiteReport, SuiteError> {
    if cfg.trials == Some(0) {
        return Err(SuiteError::Config("trials must be positive".into()));
    }
    let ds = dims(suite, &cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = Instant::now();
    let mut rec = Recorder::new(cfg.exact);
    for dim in ds {
        match suite {
            Suite::Algebra if cfg.exact => algebra::<Rational>(&mut rec, dim, true),
            Suite::Algebra => algebra::<f64>(&mut rec, dim, false),
            Suite::Flat if cfg.exact => flat::<Rational, _>(&mut rec, dim, cfg.trials.unwrap_or(100), true, &mut rng),
            Suite::Flat => flat::<f64, _>(&mut rec, dim, cfg.trials.unwrap_or(100), false, &mut rng),
            Suite::Geodesic => geodesic(&mut rec, dim, cfg.trials, &mut rng),
            Suite::Poly => lm_operator(&mut rec, dim, cfg.trials.unwrap_or(20), &mut rng),
            Suite::Curv if cfg.exact => curvature::<Rational, _>(&mut rec, dim, cfg.trials.unwrap_or(20), true, &mut rng),
            Suite::Curv => curvature::<f64, _>(&mut rec, dim, cfg.trials.unwrap_or(20), false, &mut rng),
            Suite::Normalize => normalization(&mut rec, dim, &mut rng),
            Suite::CoordChange => coordinate_change(&mut rec, dim, &mut rng),
            Suite::Invar => invariants(&mut rec, dim, cfg.trials.unwrap_or(20), cfg.exact && (dim.n() == 1 || cfg.n.is_some()), &mut rng),
        }
    }
    Ok(SuiteReport { suite, config: cfg, checks: rec.checks, seconds: start.elapsed().as_secs_f64() })
}

/// Runs every suite in order.
pub fn run_all(cfg: SuiteConfig) -> Result<Vec<SuiteReport>, SuiteError> {
    Suite::ALL.into_iter().map(|s| run(s, cfg)).collect()
}

fn tag(dim: Dim) -> String {
    format!("n={}", dim.n())
}

fn algebra<S: Scalar>(rec: &mut Recorder, dim: Dim, exact: bool) {
    let tol = tol_for(exact);
    let acs = standard_acs::<S>(dim);
    let v = acs.violations();
    let tol_shown = rec.tol.clone();
    rec.push(format!("quaternion relations ({})", tag(dim)), v.is_empty(), format!("{} violations", v.len()), tol_shown, Provenance::Identity, v.first().cloned());

    let e = epsilon::<S>();
    let ee = contract(&e, &e, &[(0, 0), (1, 1)]).expect("ε has three vertical slots");
    let d = |a: usize, b: usize| i64::from(a == b);
    let cases = (0..3).flat_map(|k| (0..3).map(move |l| (k, l))).map(|(k, l)| {
        (format!("k={k} l={l}"), ee.get(&[k, l]).close(&S::from_i64(2 * d(k, l)), tol))
    });
    let cases: Vec<_> = cases.collect();
    rec.sweep(format!("ε_ijk ε^ijl = 2δ_k^l ({})", tag(dim)), Provenance::Identity, cases);
    let ee = contract(&e, &e, &[(0, 0)]).expect("ε has three vertical slots");
    let mut cases = Vec::new();
    for j in 0..3 {
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    let want = S::from_i64(d(j, l) * d(k, m) - d(k, l) * d(j, m));
                    cases.push((format!("j={j} k={k} l={l} m={m}"), ee.get(&[j, k, l, m]).close(&want, tol)));
                }
            }
        }
    }
    rec.sweep(format!("ε_ijk ε^ilm = δδ − δδ ({})", tag(dim)), Provenance::Identity, cases);

    let c = casimir(&acs);
    let id = identity_op::<S>(dim);
    let u2 = compose_ops(&c.upsilon, &c.upsilon);
    let rhs = c.upsilon.scale(&S::from_i64(2)).add(&id.scale(&S::from_i64(3)));
    let ok = u2.close(&rhs, tol);
    rec.push(format!("Υ² = 2Υ + 3 ({})", tag(dim)), ok, format!("max deviation {:e}", u2.sub(&rhs).max_abs()), rec.tol.clone(), Provenance::Identity, Some(tag(dim)));
    let laws = [
        ("P3² = P3", compose_ops(&c.p3, &c.p3).close(&c.p3, tol)),
        ("P-1² = P-1", compose_ops(&c.pm1, &c.pm1).close(&c.pm1, tol)),
        ("P3 P-1 = 0", compose_ops(&c.p3, &c.pm1).max_abs() <= tol),
        ("P3 + P-1 = Id", c.p3.add(&c.pm1).close(&id, tol)),
    ];
    rec.sweep(format!("projector laws ({})", tag(dim)), Provenance::Identity, laws.into_iter().map(|(s, ok)| (s.to_string(), ok)));

    let (a, inv) = a_operator::<S>(dim);
    let eye = Matrix::<S>::identity(3 * dim.h());
    let aa = a.matmul(&a);
    let want = a.scale(&S::from_i64(-2)).add(&eye.scale(&S::from_i64(8)));
    rec.push(format!("A∘A = −2A + 8 Id ({})", tag(dim)), aa.close(&want, tol), format!("max deviation {:e}", aa.sub(&want).max_abs()), rec.tol.clone(), Provenance::Identity, Some(tag(dim)));
    let prod = a.matmul(&inv);
    let want_inv = a.add(&eye.scale(&S::from_i64(2))).scale(&S::ratio(1, 8));
    rec.push(
        format!("A⁻¹ = (A + 2)/8 ({})", tag(dim)),
        prod.close(&eye, tol) && inv.close(&want_inv, tol),
        format!("max |A(A+2)/8 − Id| = {:e}", prod.sub(&eye).max_abs()),
        rec.tol.clone(),
        Provenance::Identity,
        Some(tag(dim)),
    );
}

fn points_close<S: Scalar>(a: &GroupPoint<S>, b: &GroupPoint<S>, tol: f64) -> bool {
    a.coords().iter().zip(b.coords()).all(|(x, y)| x.close(&y, tol))
}

fn flat<S: Scalar, R: Rng>(rec: &mut Recorder, dim: Dim, points: usize, exact: bool, rng: &mut R) {
    let tol = tol_for(exact);
    let frame = flat_frame::<S>(dim);
    let pts: Vec<GroupPoint<S>> = (0..points).map(|_| GroupPoint::sample(dim, rng)).collect();
    let coords: Vec<Vec<S>> = pts.iter().map(|p| p.coords()).collect();
    let name = format!("duality, dη = 2g(I·,·), torsion = −2I ({})", tag(dim));
    match structure_check(&frame, &coords) {
        Ok(k) => rec.push(name, true, format!("{k} identities on {points} points"), rec.tol.clone(), Provenance::Identity, None),
        Err(v) => rec.push(name, false, v.to_string(), rec.tol.clone(), Provenance::Identity, Some(v.to_string())),
    }
    let e = GroupPoint::<S>::origin(dim);
    let mut cases = Vec::new();
    for (k, p) in pts.iter().enumerate() {
        let q = &pts[(k + 1) % points];
        let r = &pts[(k + 2) % points];
        let s = S::sample(rng);
        let mul = |a: &GroupPoint<S>, b: &GroupPoint<S>| a.multiply(b).expect("points of one group");
        let assoc = points_close(&mul(&mul(p, q), r), &mul(p, &mul(q, r)), tol);
        let inverse = points_close(&mul(p, &p.inverse()), &e, tol) && points_close(&mul(&p.inverse(), p), &e, tol);
        let unit = points_close(&mul(&e, p), p, tol) && points_close(&mul(p, &e), p, tol);
        let dil = points_close(&mul(p, q).dilate(&s), &mul(&p.dilate(&s), &q.dilate(&s)), tol);
        let label = |law: &str| format!("{law} at point {k}: {}", serde_json::to_string(&p.to_json()).unwrap_or_default());
        cases.push((label("associativity"), assoc));
        cases.push((label("inverse"), inverse));
        cases.push((label("unit"), unit));
        cases.push((label("dilation is an automorphism"), dil));
    }
    rec.sweep(format!("group and automorphism laws ({})", tag(dim)), Provenance::Identity, cases);
}

/// A connection with small polynomial symbols of weight ≤ 1.
pub fn random_connection<R: Rng + ?Sized>(dim: Dim, entries: usize, rng: &mut R) -> PolyConnection {
    let d = dim.total();
    let mut g = BTreeMap::new();
    for _ in 0..entries {
        let key = (rng.gen_range(0..d), rng.gen_range(0..d), rng.gen_range(0..d));
        let p = HPoly::constant(dim, rat(rng.gen_range(-3..=3), 4))
            .add(&HPoly::var(dim, rng.gen_range(0..d)).scale(&rat(rng.gen_range(-3..=3), 4)));
        g.insert(key, p);
    }
    PolyConnection::new(dim, g)
}

/// Classical geodesic `x'' + Γ(x', x') = 0` by fixed-step RK4 on the symbols.
pub fn classical_geodesic(conn: &PolyConnection, q: &[f64], v: &[f64], s: f64, steps: usize) -> Vec<f64> {
    let d = q.len();
    let field = |y: &[f64]| -> Vec<f64> {
        let (x, v) = y.split_at(d);
        let mut acc = vec![0.0; d];
        for (&(a, b, c), p) in &conn.gamma {
            acc[a] -= p.eval_f64(x) * v[b] * v[c];
        }
        v.iter().cloned().chain(acc).collect()
    };
    let h = s / steps as f64;
    let mut y: Vec<f64> = q.iter().chain(v).cloned().collect();
    let axpy = |y: &[f64], k: &[f64], c: f64| y.iter().zip(k).map(|(a, b)| a + c * b).collect::<Vec<_>>();
    for _ in 0..steps {
        let k1 = field(&y);
        let k2 = field(&axpy(&y, &k1, h / 2.0));
        let k3 = field(&axpy(&y, &k2, h / 2.0));
        let k4 = field(&axpy(&y, &k3, h));
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y.truncate(d);
    y
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn small_vec<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-r..r)).collect()
}

fn fmt_vec(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", "))
}

fn geodesic<R: Rng>(rec: &mut Recorder, dim: Dim, trials: Option<usize>, rng: &mut R) {
    const TOL: f64 = 1e-9;
    let d = dim.total();
    let h = dim.h();
    let mut worst = 0.0f64;
    let mut first = None;
    let scaling = trials.unwrap_or(20);
    for k in 0..scaling {
        let conn = match k % 3 {
            0 => PolyConnection::flat(dim),
            1 => PolyConnection::euclidean(dim),
            _ => random_connection(dim, 3 * d, rng),
        };
        let s = [0.25, 0.5, 2.0][rng.gen_range(0..3)];
        let r = if s > 1.0 { 0.25 } else { 0.5 };
        let (x, y) = (small_vec(d, r, rng), small_vec(d, r, rng));
        let q = vec![0.0; d];
        let xs: Vec<f64> = x.iter().map(|v| s * v).collect();
        let ys: Vec<f64> = y.iter().map(|v| s * s * v).collect();
        let diff = match (parabolic_geodesic(&conn, &q, &xs, &ys, 1.0, TOL), parabolic_geodesic(&conn, &q, &x, &y, s, TOL)) {
            (Ok(a), Ok(b)) => max_diff(&a, &b),
            _ => f64::INFINITY,
        };
        if diff > 1e-7 && first.is_none() {
            first = Some(format!("trial {k}: s={s} X={} Y={}", fmt_vec(&x), fmt_vec(&y)));
        }
        worst = worst.max(diff);
    }
    rec.push(format!("parabolic scaling law ({}, {scaling} trials)", tag(dim)), worst <= 1e-7, format!("max deviation {worst:.3e}"), "1e-7 at integrator tol 1e-9", Provenance::Identity, first);

    let mut worst = 0.0f64;
    let mut first = None;
    for k in 0..5 {
        let conn = random_connection(dim, 3 * d, rng);
        let q = small_vec(d, 0.1, rng);
        let x = small_vec(d, 0.5, rng);
        let diff = match parabolic_geodesic(&conn, &q, &x, &vec![0.0; d], 1.0, TOL) {
            Ok(a) => max_diff(&a, &classical_geodesic(&conn, &q, &x, 1.0, 4000)),
            Err(_) => f64::INFINITY,
        };
        if diff > 1e-7 && first.is_none() {
            first = Some(format!("trial {k}: q={} X={}", fmt_vec(&q), fmt_vec(&x)));
        }
        worst = worst.max(diff);
    }
    rec.push(format!("Y = 0 agrees with classical geodesics ({})", tag(dim)), worst <= 1e-7, format!("max deviation {worst:.3e}"), "1e-7", Provenance::Oracle, first);

    let identity: Vec<Vec<f64>> = (0..d).map(|a| (0..d).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect();
    let chart = ParabolicChart::new(vec![0.0; d], random_connection(dim, 3 * d, rng), identity.clone(), 1e-12)
        .expect("well-formed chart");
    let step = 1e-4;
    let mut worst = 0.0f64;
    let mut first = None;
    for a in 0..d {
        let mut zp = vec![0.0; d];
        let mut zm = vec![0.0; d];
        zp[a] = step;
        zm[a] = -step;
        let (p, m) = match (parabolic_exp(&chart, &zp), parabolic_exp(&chart, &zm)) {
            (Ok(p), Ok(m)) => (p, m),
            _ => (vec![f64::INFINITY; d], vec![0.0; d]),
        };
        let scale = if a < h { 1.0 } else { 0.5 };
        for k in 0..d {
            let col = (p[k] - m[k]) / (2.0 * step);
            let dev = (col - if k == a { scale } else { 0.0 }).abs();
            if dev > 1e-6 && first.is_none() {
                first = Some(format!("column {a}, row {k}: {col}"));
            }
            worst = worst.max(dev);
        }
    }
    rec.push(format!("dΨ|₀ = Id ⊕ ½Id ({})", tag(dim)), worst <= 1e-6, format!("max deviation {worst:.3e}"), "1e-6", Provenance::Identity, first);

    let mut worst = 0.0f64;
    let mut first = None;
    for k in 0..50 {
        let z = small_vec(d, 0.3, rng);
        let diff = parabolic_exp(&chart, &z).and_then(|p| parabolic_log(&chart, &p, 1e-11)).map(|b| max_diff(&b, &z)).unwrap_or(f64::INFINITY);
        if diff > 1e-8 && first.is_none() {
            first = Some(format!("input {k}: z={}", fmt_vec(&z)));
        }
        worst = worst.max(diff);
    }
    rec.push(format!("log ∘ exp round trip ({}, 50 inputs)", tag(dim)), worst <= 1e-8, format!("max deviation {worst:.3e}"), "1e-8", Provenance::Identity, first);
}

/// `x^αx^βX_βX_αu + 2t^ix^αX_αT_iu + t^it^jT_jT_iu + t^iT_iu + mu`, which
/// equals `m²u` on `𝒫_m`.
pub fn euler_square(f: &FlatFields, u: &HPoly, m: usize) -> HPoly {
    let dim = f.dim;
    let h = dim.h();
    let var = |a| HPoly::var(dim, a);
    let mut acc = u.scale(&Rational::from_i64(m as i64));
    for a in 0..h {
        let xa = f.x(a, u);
        for b in 0..h {
            acc = acc.add(&var(a).mul(&var(b)).mul(&f.x(b, &xa)));
        }
        for i in 0..3 {
            acc = acc.add(&var(h + i).mul(&var(a)).mul(&f.x(a, &f.t(i, u))).scale(&Rational::from_i64(2)));
        }
    }
    for i in 0..3 {
        let ti = f.t(i, u);
        acc = acc.add(&var(h + i).mul(&ti));
        for j in 0..3 {
            acc = acc.add(&var(h + i).mul(&var(h + j)).mul(&f.t(j, &ti)));
        }
    }
    acc
}

fn x_only(mut p: HPoly) -> HPoly {
    let h = p.dim.h();
    p.terms.retain(|m, _| m.t_degree(h) == 0);
    p
}

fn lm_operator<R: Rng>(rec: &mut Recorder, dim: Dim, trials: usize, rng: &mut R) {
    let h = dim.h();
    let fields = FlatFields::new(dim);
    let op = build_lm(dim, 2).expect("m = 2 is valid");
    let kernel = op.matrix.nullspace();
    let t_monos: Vec<Mono> = (0..3).map(|i| Mono::var(h + i)).collect();
    let supported = kernel.iter().all(|v| v.iter().zip(&op.basis).all(|(c, m)| c.is_zero() || t_monos.contains(m)));
    let annihilated = t_monos.iter().all(|m| fields.lm(2, &HPoly::monomial(dim, *m, Rational::from_i64(1))).is_zero());
    rec.push(
        format!("ker L₂ = span{{t¹, t², t³}} ({})", tag(dim)),
        kernel.len() == 3 && supported && annihilated,
        format!("dim ker = {}, supported on t: {supported}, L₂ t^i = 0: {annihilated}", kernel.len()),
        "exact",
        Provenance::Identity,
        Some(format!("kernel dimension {}", kernel.len())),
    );
    for m in 3..=6 {
        match LmSolver::new(dim, m) {
            Ok(s) => rec.push(format!("det L_{m} ≠ 0 ({})", tag(dim)), !s.det().is_zero(), format!("det = {}", s.det()), "exact", Provenance::Regression, None),
            Err(e) => rec.push(format!("det L_{m} ≠ 0 ({})", tag(dim)), false, e.to_string(), "exact", Provenance::Regression, Some(format!("m = {m}"))),
        }
    }
    for m in 2..=6 {
        let solver = LmSolver::new(dim, m);
        let mut cases = Vec::new();
        for k in 0..trials {
            let mut rhs = random_homogeneous(dim, m, rng);
            if m == 2 {
                rhs = x_only(rhs);
            }
            let ok = solver.as_ref().ok().and_then(|s| s.solve(&rhs).ok()).is_some_and(|u| fields.lm(m, &u) == rhs);
            cases.push((format!("m={m} rhs #{k}: {}", rhs.to_json()), ok));
        }
        rec.sweep(format!("L_{m} solve/apply round trip ({})", tag(dim)), Provenance::Identity, cases);
    }
    let mut cases = Vec::new();
    for k in 0..trials {
        let m = 1 + k % 5;
        let u = random_homogeneous(dim, m, rng);
        let ok = euler_square(&fields, &u, m) == u.scale(&Rational::from_i64((m * m) as i64));
        cases.push((format!("m={m} u={}", u.to_json()), ok));
    }
    rec.sweep(format!("P²u = m²u in the left-invariant frame ({})", tag(dim)), Provenance::Identity, cases);
}

fn curvature<S: Scalar, R: Rng>(rec: &mut Recorder, dim: Dim, trials: usize, exact: bool, rng: &mut R) {
    let tol = tol_for(exact);
    let n = dim.n() as i64;
    let h = dim.h();
    let (mut traces, mut ricci, mut qtr, mut wr) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in 0..trials {
        let st = PointState::<S>::random_valid(dim, rng, true);
        let label = |what: &str| format!("{what}, state {k}: {}", st.to_json());
        let s = |p: i64, q: i64| st.s.clone() * S::ratio(p, q);
        let ok = ricci_forms(&st).is_ok_and(|f| {
            let [r, z, sg] = ricci_form_traces(&st.acs(), &f);
            r.close(&s(-3, 2 * (n + 2)), tol) && sg.close(&s(-3, 2 * (n + 2)), tol) && z.close(&s(3, 4 * (n + 2)), tol)
        });
        traces.push((label("Ricci-form traces"), ok));
        let ok = ricci_and_scalar(&st, tol).is_ok_and(|(_, sc)| sc.close(&st.s, tol));
        ricci.push((label("Ricci identity"), ok));
        let ok = l_and_q(&st).is_ok_and(|(_, q)| {
            let tr = (0..h).fold(S::zero(), |acc, a| acc + q[(a, a)].clone());
            tr.close(&s(4 * n + 1, 8 * (n + 2)), tol)
        });
        qtr.push((label("Q trace"), ok));
        let mut flat = st.clone();
        flat.tau = Matrix::zeros(h, h);
        flat.mu = Matrix::zeros(h, h);
        flat.s = S::zero();
        flat.lambda = S::zero();
        let r = flat.r_hhhh.clone().expect("random states carry curvature");
        let ok = conformal_curvature(&flat).is_ok_and(|(w, _)| w.close(&r, tol));
        wr.push((label("W = R"), ok));
    }
    rec.sweep(format!("ρ, ζ, σ traces ({}, {trials} states)", tag(dim)), Provenance::Identity, traces);
    rec.sweep(format!("Ricci and scalar curvature consistency ({})", tag(dim)), Provenance::Identity, ricci);
    rec.sweep(format!("Q trace = (4n+1)S/(8(n+2)) ({})", tag(dim)), Provenance::Identity, qtr);
    rec.sweep(format!("W = R when L = 0 ({})", tag(dim)), Provenance::Identity, wr);
    for (name, det) in [("3×3", mainthm_3x3(dim).det()), ("4×4", mainthm_4x4(dim).det())] {
        rec.push(format!("order-3/4 system {name} nonsingular ({})", tag(dim)), !det.is_zero(), format!("det = {det}"), "exact", Provenance::Regression, None);
    }
}

fn random_table<R: Rng>(dim: Dim, max: usize, rng: &mut R) -> QJetTable {
    let mut t = QJetTable::zero(dim, max);
    for m in 2..=max {
        let mut p = random_homogeneous(dim, m, rng);
        if m == 2 {
            p = x_only(p);
        }
        t = t.add(&QJetTable::from_phi(dim, max, &p, m).expect("homogeneous pieces"));
    }
    t
}

fn normalization<R: Rng>(rec: &mut Recorder, dim: Dim, rng: &mut R) {
    let base = random_table(dim, 4, rng);
    let oracle = LinearizedOracle::new(base);
    let name = format!("linearized oracle, N = 4: jets vanish through order 4 ({})", tag(dim));
    let out = match normalize(4, &oracle, None) {
        Ok(out) => out,
        Err(e) => {
            rec.push(name, false, e.to_string(), "exact", Provenance::Identity, Some(e.to_string()));
            return;
        }
    };
    let left = out.jets.nonzero_through(4);
    rec.push(name, left.is_empty(), format!("{} nonzero jets", left.len()), "exact", Provenance::Identity, left.first().map(|(k, v)| format!("{k:?} = {v}")));
    let again = normalize(4, &LinearizedOracle::new(out.jets.clone()), None);
    rec.push(
        format!("second run yields u = 0 ({})", tag(dim)),
        again.as_ref().is_ok_and(|a| a.factor.is_zero()),
        match &again {
            Ok(a) => format!("{} nonzero pieces", a.factor.pieces().filter(|(_, p)| !p.is_zero()).count()),
            Err(e) => e.to_string(),
        },
        "exact",
        Provenance::Identity,
        None,
    );
    let cert = vanishing_report(&out.jets);
    rec.push(
        format!("vanishing certificate ({})", tag(dim)),
        cert.is_ok(),
        match &cert {
            Ok(v) => format!("{} quantities certified", v.len()),
            Err(e) => e.to_string(),
        },
        "exact",
        Provenance::Identity,
        None,
    );

    let v2 = x_only(random_homogeneous(dim, 2, rng));
    let v3 = random_homogeneous(dim, 3, rng);
    let flat = FlatOracle::new(dim, 3, v2.add(&v3));
    let name = format!("flat oracle, N = 3: seeded factor recovered ({})", tag(dim));
    match normalize(3, &flat, None) {
        Ok(out) => {
            let minus = Rational::from_i64(-1);
            let ok2 = out.factor.piece(2) == v2.scale(&minus);
            let ok3 = out.factor.piece(3) == v3.scale(&minus);
            let left = out.jets.nonzero_through(3);
            rec.push(
                name,
                ok2 && ok3 && left.is_empty(),
                format!("u₂ = −v₂: {ok2}, u₃ = −v₃: {ok3}, residual jets: {}", left.len()),
                "exact",
                Provenance::Oracle,
                Some(format!("seed {}", v2.add(&v3).to_json())),
            );
        }
        Err(e) => rec.push(name, false, e.to_string(), "exact", Provenance::Oracle, Some(format!("seed {}", v2.add(&v3).to_json()))),
    }
    let l = random_homogeneous(dim, 1, rng);
    let name = format!("flat oracle, N = 3, free 1-jet ({})", tag(dim));
    match normalize(3, &flat, Some(l.clone())) {
        Ok(out) => {
            let left = out.jets.nonzero_through(3);
            let ok = out.factor.one_jet == l && left.is_empty();
            rec.push(name, ok, format!("residual jets: {}", left.len()), "exact", Provenance::Oracle, Some(format!("1-jet {}", l.to_json())));
        }
        Err(e) => rec.push(name, false, e.to_string(), "exact", Provenance::Oracle, Some(format!("1-jet {}", l.to_json()))),
    }
    // The oracle contract behind the recursion.
    let base = flat.jets(&ConformalFactor::zero(dim));
    let mut u = ConformalFactor::zero(dim);
    let p = x_only(random_homogeneous(dim, 2, rng));
    let stable = u.push(2, p).is_ok()
        && base.is_ok()
        && flat.jets(&u).is_ok_and(|t| t.first_difference_below(base.as_ref().expect("checked"), 2).is_none());
    rec.push(format!("adding u₂ leaves lower orders unchanged ({})", tag(dim)), stable, format!("{stable}"), "exact", Provenance::Identity, None);
}

fn coordinate_change<R: Rng>(rec: &mut Recorder, dim: Dim, rng: &mut R) {
    let d = dim.total();
    let h = dim.h();
    let grid: Vec<f64> = (0..10).map(|k| 0.005 * 1.35f64.powi(k)).collect();
    for m in [2usize, 3] {
        let mut u = random_homogeneous(dim, m, rng);
        if m == 2 {
            u = x_only(u);
        }
        let z = small_vec(d, 1.0, rng);
        let name = format!("order of Ψ̃ − Ψ for u ∈ 𝒫_{m} ({})", tag(dim));
        let tol = format!("order ≥ {:.1}, fit residual < 0.1", m as f64 + 0.9);
        let cx = Some(format!("u = {}, z = {}", u.to_json(), fmt_vec(&z)));
        let charts = connection_change(dim, &u, m as i64 + 2).map_err(|e| e.to_string()).and_then(|conn| {
            let flat = ParabolicChart::flat(dim, vec![0.0; d], 1e-13).map_err(|e| e.to_string())?;
            let tilde = ParabolicChart::new(vec![0.0; d], conn, flat.frame0.clone(), 1e-13).map_err(|e| e.to_string())?;
            Ok((flat, tilde))
        });
        let (flat, tilde) = match charts {
            Ok(c) => c,
            Err(e) => {
                rec.push(name, false, e, tol, Provenance::Identity, cx);
                continue;
            }
        };
        let f = |s: f64| {
            let zs = dilate_coords(&z, s, h);
            match (parabolic_exp(&tilde, &zs), parabolic_exp(&flat, &zs)) {
                (Ok(a), Ok(b)) => max_diff(&a, &b),
                _ => f64::NAN,
            }
        };
        match vanishing_order(f, &grid, 1e-13) {
            Ok(VanishingOrder::Estimate { order, residual }) => {
                let ok = order >= m as f64 + 0.9 && residual < 0.1;
                rec.push(name, ok, format!("order {order:.3}, residual {residual:.3}"), tol, Provenance::Identity, cx);
            }
            Ok(VanishingOrder::AtLeast { cutoff }) => {
                rec.push(name, false, format!("below noise floor, order ≥ {cutoff:.2}"), tol, Provenance::Identity, cx)
            }
            Err(e) => rec.push(name, false, e.to_string(), tol, Provenance::Identity, cx),
        }
    }
}

fn invariants<R: Rng>(rec: &mut Recorder, dim: Dim, trials: usize, exact: bool, rng: &mut R) {
    let tol = if exact { 0.0 } else { 1e-12 };
    let shown = if exact { "exact".to_string() } else { format!("{tol:e}") };
    match verify_reductions(dim, trials, exact, tol, rng) {
        Ok(report) => {
            for c in &report.checks {
                let want = c.expected.clone().unwrap_or_else(|| "stable".into());
                let p = if c.expected.is_some() { Provenance::Identity } else { Provenance::Regression };
                rec.push(
                    format!("{} ({}, {trials} samples)", c.name, tag(dim)),
                    c.pass,
                    format!("{} (expected {want})", c.measured),
                    shown.clone(),
                    p,
                    Some(format!("seeded samples, n = {}", dim.n())),
                );
            }
        }
        Err(e) => rec.push(format!("reductions ({})", tag(dim)), false, e.to_string(), shown.clone(), Provenance::Identity, None),
    }
    let count = |level| enumerate_contractions(level).iter().filter(|(p, _)| p.acs_count() == 0).count();
    let (second, full) = (count(SymmetryLevel::SecondFactor), count(SymmetryLevel::Full));
    rec.push(
        "metric-only classes",
        second == 3 && full == 2,
        format!("{second} up to the second factor's symmetries, {full} under full symmetry"),
        "exact",
        Provenance::Identity,
        None,
    );
    if dim.n() == 1 {
        match verify_second_derivative_system(dim) {
            Ok(r) => {
                let zeros = r.max_abs.as_ref().is_some_and(|m| m.iter().all(|x| x.is_zero()));
                rec.push(
                    "A = B = C = D = 0 on the Bianchi-constrained subspace (n=1)",
                    r.pass() && zeros,
                    format!(
                        "subspace dim {}, relations {}, rank {}",
                        r.subspace_dim.unwrap_or(0),
                        r.relations.iter().map(|x| x.describe()).collect::<std::collections::BTreeSet<_>>().into_iter().collect::<Vec<_>>().join(", "),
                        r.rank
                    ),
                    "exact",
                    Provenance::Identity,
                    None,
                );
            }
            Err(e) => rec.push("A, B, C, D system (n=1)", false, e.to_string(), "exact", Provenance::Identity, None),
        }
    }
}

//! Values of the `R ⊗ R` contractions on normalized curvature tensors.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde_json::{json, Value};

use super::pattern::{enumerate_contractions, named_patterns, ContractionPattern, SymmetryLevel};
use super::InvarError;
use crate::curv::hyperkahler_basis;
use crate::linalg::Matrix;
use crate::qalg::{standard_acs, Axis, Dim, Tensor};
use crate::scalar::{Rational, Scalar};

/// Samples horizontal curvature tensors at the center of a normalized
/// structure: the orthogonal projection of a random four-tensor onto the span
/// of the algebraic curvature tensors with both pairs in `sp(n)`.
#[derive(Clone, Debug)]
pub struct CurvatureSampler<S> {
    pub dim: Dim,
    pub basis: Vec<Tensor<S>>,
    gram_inv: Matrix<S>,
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| if x.is_zero() { acc } else { acc + x.clone() * y.clone() })
}

impl<S: Scalar> CurvatureSampler<S> {
    pub fn new(dim: Dim) -> Self {
        let basis: Vec<Tensor<S>> =
            hyperkahler_basis(dim).iter().map(|t| Tensor { axes: t.axes.clone(), data: t.data.iter().map(S::from_rational).collect() }).collect();
        let gram = Matrix::from_fn(basis.len(), basis.len(), |i, j| dot(&basis[i].data, &basis[j].data));
        let gram_inv = gram.inverse().expect("basis tensors are independent");
        CurvatureSampler { dim, basis, gram_inv }
    }

    /// Coefficients of the projection in the basis.
    pub fn coefficients(&self, t: &Tensor<S>) -> Vec<S> {
        let b: Vec<S> = self.basis.iter().map(|e| dot(&e.data, &t.data)).collect();
        (0..b.len()).map(|i| (0..b.len()).fold(S::zero(), |acc, j| acc + self.gram_inv[(i, j)].clone() * b[j].clone())).collect()
    }

    pub fn combine(&self, c: &[S]) -> Tensor<S> {
        let h = self.dim.h();
        let mut out = Tensor::zeros(vec![Axis::h(h); 4]);
        for (e, ck) in self.basis.iter().zip(c) {
            if !ck.is_zero() {
                out = out.add(&e.scale(ck));
            }
        }
        out
    }

    pub fn project(&self, t: &Tensor<S>) -> Tensor<S> {
        self.combine(&self.coefficients(t))
    }

    /// A random tensor projected onto the normalized class, with its coefficients.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Tensor<S>, Vec<S>) {
        let h = self.dim.h();
        let raw = Tensor::from_fn(vec![Axis::h(h); 4], |_| S::sample(rng));
        let c = self.coefficients(&raw);
        (self.combine(&c), c)
    }
}

/// Projection onto algebraic curvature tensors: average over the pair
/// antisymmetries and pair exchange, then remove the totally antisymmetric part.
pub fn curvature_symmetrize<S: Scalar>(t: &Tensor<S>) -> Tensor<S> {
    let h = t.axes[0].extent;
    let g = |x: [usize; 4]| t.get(&x).clone();
    let k = Tensor::from_fn(t.axes.clone(), |x| {
        let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
        let s = g([a, b, c, d]) - g([b, a, c, d]) - g([a, b, d, c]) + g([b, a, d, c]) + g([c, d, a, b])
            - g([d, c, a, b])
            - g([c, d, b, a])
            + g([d, c, b, a]);
        s * S::ratio(1, 8)
    });
    let perms: [([usize; 4], i64); 24] = signed_permutations();
    let alt = Tensor::from_fn(t.axes.clone(), |x| {
        let s = perms.iter().fold(S::zero(), |acc, (p, sgn)| {
            let v = k.get(&[x[p[0]], x[p[1]], x[p[2]], x[p[3]]]).clone();
            if *sgn > 0 {
                acc + v
            } else {
                acc - v
            }
        });
        s * S::ratio(1, 24)
    });
    debug_assert_eq!(h, t.axes[3].extent);
    k.sub(&alt)
}

fn signed_permutations() -> [([usize; 4], i64); 24] {
    let mut out = [([0usize; 4], 0i64); 24];
    let mut n = 0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|x| p.contains(&x)) {
                        let mut inv = 0;
                        for i in 0..4 {
                            for j in i + 1..4 {
                                if p[i] > p[j] {
                                    inv += 1;
                                }
                            }
                        }
                        out[n] = (p, if inv % 2 == 0 { 1 } else { -1 });
                        n += 1;
                    }
                }
            }
        }
    }
    out
}

/// One class of contractions and its measured multiple of `‖W‖²`.
#[derive(Clone, Debug)]
pub struct PatternReduction {
    pub pattern: ContractionPattern,
    pub acs: usize,
    pub forced_zero: bool,
    pub constant: f64,
    pub exact: Option<Rational>,
    /// Largest deviation of the per-sample ratio from `constant`.
    pub spread: f64,
    pub stable: bool,
}

#[derive(Clone, Debug)]
pub struct ReductionCheck {
    pub name: String,
    pub expected: Option<String>,
    pub measured: String,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ReductionReport {
    pub n: usize,
    pub trials: usize,
    pub exact: bool,
    pub patterns: Vec<PatternReduction>,
    pub checks: Vec<ReductionCheck>,
}

impl ReductionReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        let patterns: Vec<Value> = self
            .patterns
            .iter()
            .map(|p| {
                json!({
                    "pattern": p.pattern.to_string(),
                    "acs": p.acs,
                    "forced_zero": p.forced_zero,
                    "target": if p.constant == 0.0 { "0".to_string() } else { "c·|W|^2".to_string() },
                    "constant": p.exact.as_ref().map(|r| r.to_string()).unwrap_or_else(|| format!("{:.12}", p.constant)),
                    "spread": p.spread,
                    "stable": p.stable,
                })
            })
            .collect();
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "expected": c.expected, "measured": c.measured, "pass": c.pass }))
            .collect();
        json!({ "n": self.n, "trials": self.trials, "exact": self.exact, "patterns": patterns, "checks": checks, "pass": self.pass() })
    }
}

fn acs_matrices<T: Copy>(dim: Dim, conv: impl Fn(&Rational) -> T) -> [Vec<T>; 3] {
    let acs = standard_acs::<Rational>(dim);
    let h = dim.h();
    let m = |i: usize| (0..h * h).map(|k| conv(&acs.i[i][(k / h, k % h)])).collect();
    [m(0), m(1), m(2)]
}

fn to_i128(r: &Rational) -> i128 {
    assert!(r.denom().is_one(), "integer entry expected");
    r.numer().to_i128().expect("entry fits in i128")
}

// Integer multiples of the basis tensors, with the scale factors.
fn integer_basis(basis: &[Tensor<Rational>]) -> Vec<(Vec<i128>, Rational)> {
    basis
        .iter()
        .map(|t| {
            let l = t.data.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
            let s = Rational::from_integer(l);
            (t.data.iter().map(|r| to_i128(&(r * &s))).collect(), s)
        })
        .collect()
}

fn quadratic(g: &[Vec<Rational>], c: &[Rational]) -> Rational {
    let mut acc = <Rational as Scalar>::zero();
    for (k, ck) in c.iter().enumerate() {
        if Scalar::is_zero(ck) {
            continue;
        }
        for (l, cl) in c.iter().enumerate() {
            if !Scalar::is_zero(cl) {
                acc += ck * cl * &g[k][l];
            }
        }
    }
    acc
}

/// Values of every contraction class on `trials` random normalized curvature
/// tensors, relative to `‖W‖²`. With `exact`, values come from the exact Gram
/// matrices of each contraction on the basis; otherwise in floating point.
pub fn verify_reductions<R: Rng + ?Sized>(
    dim: Dim,
    trials: usize,
    exact: bool,
    tol: f64,
    rng: &mut R,
) -> Result<ReductionReport, InvarError> {
    if trials == 0 {
        return Err(InvarError::Rank("at least one trial is needed".into()));
    }
    let h = dim.h();
    let classes = enumerate_contractions(SymmetryLevel::Full);
    let norm = named_patterns()[0].build().0;
    let mut ratios: Vec<Vec<f64>> = vec![Vec::new(); classes.len()];
    let mut exact_ratios: Vec<Vec<Rational>> = vec![Vec::new(); classes.len()];
    if exact {
        let sampler = CurvatureSampler::<Rational>::new(dim);
        let ib = integer_basis(&sampler.basis);
        let acs = acs_matrices(dim, to_i128);
        let gram = |p: &ContractionPattern| -> Vec<Vec<Rational>> {
            ib.iter()
                .map(|(bk, sk)| {
                    ib.iter()
                        .map(|(bl, sl)| Rational::from_integer(BigInt::from(p.eval_bilinear(bk, bl, h, &acs))) / (sk * sl))
                        .collect()
                })
                .collect()
        };
        let gn = gram(&norm);
        let grams: Vec<_> = classes.iter().map(|(p, _)| gram(p)).collect();
        for _ in 0..trials {
            let (_, c) = sampler.sample(rng);
            let w2 = quadratic(&gn, &c);
            if Scalar::is_zero(&w2) {
                continue;
            }
            for (k, g) in grams.iter().enumerate() {
                let r = quadratic(g, &c) / &w2;
                ratios[k].push(Scalar::to_f64(&r));
                exact_ratios[k].push(r);
            }
        }
    } else {
        let sampler = CurvatureSampler::<f64>::new(dim);
        let acs = acs_matrices(dim, |r| Scalar::to_f64(r));
        for _ in 0..trials {
            let (t, _) = sampler.sample(rng);
            let w2 = norm.eval_bilinear(&t.data, &t.data, h, &acs);
            for (k, (p, _)) in classes.iter().enumerate() {
                ratios[k].push(p.eval_bilinear(&t.data, &t.data, h, &acs) / w2);
            }
        }
    }
    if ratios[0].is_empty() {
        return Err(InvarError::Rank("every sample had ‖W‖² = 0".into()));
    }
    let patterns: Vec<PatternReduction> = classes
        .iter()
        .enumerate()
        .map(|(k, (p, zero))| {
            let r = &ratios[k];
            let constant = r[0];
            let spread = r.iter().map(|x| (x - constant).abs()).fold(0.0, f64::max);
            let (ex, stable) = if exact {
                let e = &exact_ratios[k];
                (Some(e[0].clone()), e.iter().all(|x| *x == e[0]))
            } else {
                (None, spread <= tol * constant.abs().max(1.0))
            };
            let constant = if *zero || ex.as_ref().is_some_and(|x| Scalar::is_zero(x)) { 0.0 } else { constant };
            PatternReduction { pattern: p.clone(), acs: p.acs_count(), forced_zero: *zero, constant, exact: ex, spread, stable }
        })
        .collect();
    let mut checks = Vec::new();
    for np in named_patterns() {
        let (p, sign) = np.build();
        let (c, s) = p.canonical(SymmetryLevel::Full);
        let red = patterns.iter().find(|x| x.pattern == c).expect("named patterns are enumerated");
        let factor = sign * s;
        let measured_exact = red.exact.as_ref().map(|e| e * Rational::from_integer(factor.into()));
        let measured = factor as f64 * red.constant;
        let shown = measured_exact.as_ref().map(|e| e.to_string()).unwrap_or_else(|| format!("{measured:.12}"));
        let (expected, pass) = match np.expected {
            Some((p, q)) => {
                let want = Rational::new(p.into(), q.into());
                let ok = match &measured_exact {
                    Some(e) => *e == want,
                    None => (measured - Scalar::to_f64(&want)).abs() <= tol,
                };
                (Some(want.to_string()), ok && red.stable)
            }
            None => (None, red.stable),
        };
        checks.push(ReductionCheck { name: np.name.to_string(), expected, measured: shown, pass });
    }
    let unstable = patterns.iter().filter(|p| !p.stable).count();
    checks.push(ReductionCheck {
        name: "every class is a constant multiple of |W|^2".into(),
        expected: Some("0 unstable classes".into()),
        measured: format!("{unstable} unstable of {}", patterns.len()),
        pass: unstable == 0,
    });
    Ok(ReductionReport { n: dim.n(), trials, exact, patterns, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn projection_is_idempotent_and_lands_in_curvature_tensors() {
        let dim = Dim::new(1).unwrap();
        let s = CurvatureSampler::<Rational>::new(dim);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let raw = Tensor::from_fn(vec![Axis::h(4); 4], |_| Rational::sample(&mut rng));
        let p = s.project(&raw);
        assert_eq!(s.project(&p), p);
        assert_eq!(curvature_symmetrize(&p), p);
        assert_eq!(s.project(&curvature_symmetrize(&raw)), p);
        let c = curvature_symmetrize(&raw);
        assert_eq!(curvature_symmetrize(&c), c);
    }

    #[test]
    fn bilinear_evaluation_matches_a_direct_sum() {
        let dim = Dim::new(1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let s = CurvatureSampler::<f64>::new(dim);
        let (t, _) = s.sample(&mut rng);
        let acs = acs_matrices(dim, |r| Scalar::to_f64(r));
        let (p, sign) = named_patterns()[3].build();
        // R_{αβγδ} R_{αβμν} I_i^{γμ} I_i^{δν}
        let r = |a: usize, b: usize, c: usize, d: usize| t.data[((a * 4 + b) * 4 + c) * 4 + d];
        let mut direct = 0.0;
        for i in 0..3 {
            for [a, b, c, d, m, n] in (0..4096).map(|k| [k / 1024, k / 256 % 4, k / 64 % 4, k / 16 % 4, k / 4 % 4, k % 4]) {
                direct += r(a, b, c, d) * r(a, b, m, n) * acs[i][c * 4 + m] * acs[i][d * 4 + n];
            }
        }
        assert!((sign as f64 * p.eval_bilinear(&t.data, &t.data, 4, &acs) - direct).abs() < 1e-9);
    }
}

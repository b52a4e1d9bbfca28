//! Curvature calculus against the Biquard connection of conformally flat
//! structures, plus property sweeps over random valid states.

use proptest::prelude::*;
use qc_core::conf::biquard::Biquard;
use qc_core::curv::*;
use qc_core::linalg::Matrix;
use qc_core::poly::random_homogeneous;
use qc_core::qalg::{Axis, Dim, Tensor};
use qc_core::scalar::{rat, Rational, Scalar};
use rand::SeedableRng;

fn engine(n: usize, w: i64, seed: u64) -> Biquard {
    let dim = Dim::new(n).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let u = (2..=4).fold(qc_core::poly::HPoly::zero(dim), |acc, m| acc.add(&random_homogeneous(dim, m, &mut rng)));
    Biquard::new(dim, &u, w).unwrap()
}

#[test]
fn engine_state_satisfies_the_pointwise_identities() {
    let bq = engine(1, 6, 5);
    let st = bq.point_state(true, true).expect("weight 6 reaches all entries");
    let h = 4;
    st.validate(0.0).unwrap();
    // μ vanishes identically when n = 1.
    assert!(!st.tau.is_zero() && st.mu.is_zero() && !st.s.is_zero());
    let (_, s) = ricci_and_scalar(&st, 0.0).unwrap();
    assert_eq!(s, st.s);
    assert_eq!(ricci_forms(&st).unwrap(), closed_ricci_forms(&st));
    let t = torsion_endomorphism(&st);
    for i in 0..3 {
        for a in 0..h {
            for b in 0..h {
                assert_eq!(t[i][(a, b)], bq.torsion(a, h + i, b).value_at_origin().unwrap());
            }
        }
    }
    let rep = divergence_residuals(&st).unwrap();
    assert_eq!(rep.max_abs(), 0.0, "{rep:?}");
    assert!(st.jets.as_ref().unwrap().s_v.iter().any(|x| !x.is_zero()));

    let mixed = mixed_curvature_hvhh(&st).unwrap();
    for a in 0..h {
        for i in 0..3 {
            for b in 0..h {
                for g in 0..h {
                    let direct = bq.curvature_at_origin(a, h + i, b, g).unwrap();
                    assert_eq!(*mixed.get(&[a, i, b, g]), direct);
                }
            }
        }
    }
    let r_vvhh = Tensor::from_fn(vec![Axis::v(), Axis::v(), Axis::h(h), Axis::h(h)], |x| {
        bq.curvature_at_origin(h + x[0], h + x[1], x[2], x[3]).unwrap()
    });
    assert_eq!(b_matrix(&st).unwrap(), b_from_vvhh(st.dim, &r_vvhh));
}

#[test]
fn constructed_state_ricci_matches_contraction() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let st = PointState::<Rational>::random_valid(Dim::new(1).unwrap(), &mut rng, false);
    let r = st.r_hhhh.as_ref().unwrap();
    let direct = Matrix::from_fn(4, 4, |a, b| (0..4).fold(Rational::zero(), |acc, g| acc + r.get(&[g, a, b, g]).clone()));
    let nn = 1;
    let formula = st
        .tau
        .scale(&rat(2 * nn + 2, 1))
        .add(&st.mu.scale(&rat(2 * (2 * nn + 5), 1)))
        .add(&Matrix::identity(4).scale(&(st.s.clone() * rat(1, 4 * nn))));
    assert_eq!(direct, formula);
}

fn state(n: usize, seed: u64) -> PointState<Rational> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    PointState::random_valid(Dim::new(n).unwrap(), &mut rng, true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn ricci_form_traces_hold(seed in any::<u64>(), n in 1usize..=2) {
        let st = state(n, seed);
        let nn = n as i64;
        let [r, z, s] = ricci_form_traces(&st.acs(), &ricci_forms(&st).unwrap());
        prop_assert_eq!(r, st.s.clone() * rat(-3, 2 * (nn + 2)));
        prop_assert_eq!(s, st.s.clone() * rat(-3, 2 * (nn + 2)));
        prop_assert_eq!(z, st.s.clone() * rat(3, 4 * (nn + 2)));
    }

    #[test]
    fn q_trace_holds(seed in any::<u64>(), n in 1usize..=2) {
        let st = state(n, seed);
        let (_, q) = l_and_q(&st).unwrap();
        let h = 4 * n;
        let nn = n as i64;
        let tr = (0..h).fold(Rational::zero(), |acc, a| acc + q[(a, a)].clone());
        prop_assert_eq!(tr, st.s.clone() * rat(4 * nn + 1, 8 * (nn + 2)));
        prop_assert_eq!(q.clone(), q.transpose());
    }

    #[test]
    fn derived_tensors_keep_their_symmetries(seed in any::<u64>()) {
        let st = state(1, seed);
        prop_assert!(st.validate(0.0).is_ok());
        for t in torsion_endomorphism(&st) {
            prop_assert!(t.trace().is_zero());
        }
        let f = ricci_forms(&st).unwrap();
        for m in f.rho.iter().chain(&f.sigma) {
            prop_assert_eq!(m.clone(), m.transpose().scale(&rat(-1, 1)));
        }
        let (w, _) = conformal_curvature(&st).unwrap();
        let rw = |a: usize, b: usize, c: usize, d: usize| w.get(&[a, b, c, d]).clone();
        for a in 0..4 { for b in 0..4 { for c in 0..4 { for d in 0..4 {
            prop_assert_eq!(rw(a, b, c, d), -rw(b, a, c, d));
            prop_assert_eq!(rw(a, b, c, d), -rw(a, b, d, c));
        }}}}
    }

    #[test]
    fn a_operator_minimal_polynomial(n in 1usize..=3) {
        let (a, inv) = a_operator::<Rational>(Dim::new(n).unwrap());
        let id = Matrix::identity(12 * n);
        prop_assert!(a.matmul(&a).add(&a.scale(&rat(2, 1))).sub(&id.scale(&rat(8, 1))).is_zero());
        prop_assert_eq!(inv, a.add(&id.scale(&rat(2, 1))).scale(&rat(1, 8)));
    }
}

#[test]
fn float_backend_agrees() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let st = PointState::<f64>::random_valid(Dim::new(2).unwrap(), &mut rng, true);
    st.validate(1e-12).unwrap();
    ricci_and_scalar(&st, 1e-10).unwrap();
    let f = ricci_forms(&st).unwrap();
    let c = closed_ricci_forms(&st);
    for i in 0..3 {
        assert!(f.rho[i].close(&c.rho[i], 1e-10) && f.zeta[i].close(&c.zeta[i], 1e-10));
    }
}

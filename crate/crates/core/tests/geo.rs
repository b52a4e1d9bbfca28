mod common;

use common::*;
use proptest::prelude::*;
use qc_core::geo::{
    dilate_coords, parabolic_exp, parabolic_geodesic, parabolic_log, polynomial_geodesic, transport_frame,
    ParabolicChart, PolyConnection,
};
use qc_core::qalg::Dim;
use rand::{Rng, SeedableRng};

fn d1() -> Dim {
    Dim::new(1).unwrap()
}

fn small_vec<R: Rng>(rng: &mut R, r: f64) -> Vec<f64> {
    (0..7).map(|_| rng.gen_range(-r..r)).collect()
}

#[test]
fn third_order_equation_agrees_with_lifted_system() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    for _ in 0..4 {
        let conn = random_connection(d1(), 12, &mut rng);
        let q = small_vec(&mut rng, 0.1);
        let (x, y) = (small_vec(&mut rng, 0.5), small_vec(&mut rng, 0.5));
        let a = parabolic_geodesic(&conn, &q, &x, &y, 0.8, 1e-11).unwrap();
        let b = third_order_geodesic(&conn, &q, &x, &y, 0.8);
        assert!(max_diff(&a, &b) < 1e-8, "{}", max_diff(&a, &b));
    }
}

#[test]
fn y_zero_matches_classical_geodesic() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
    for _ in 0..4 {
        let conn = random_connection(d1(), 12, &mut rng);
        let q = small_vec(&mut rng, 0.1);
        let x = small_vec(&mut rng, 0.5);
        let a = parabolic_geodesic(&conn, &q, &x, &[0.0; 7], 1.0, 1e-10).unwrap();
        let b = classical_geodesic(&conn, &q, &x, 1.0);
        assert!(max_diff(&a, &b) < 1e-9);
        // First-order polynomial geodesics are ordinary geodesics.
        let c = polynomial_geodesic(&conn, &q, &[x.clone()], 1.0, 1e-10).unwrap();
        assert!(max_diff(&c, &b) < 1e-9);
    }
}

#[test]
fn flat_scaling_example() {
    let conn = PolyConnection::flat(d1());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    let (x, y) = (small_vec(&mut rng, 0.6), small_vec(&mut rng, 0.6));
    let q = vec![0.0; 7];
    let a = parabolic_geodesic(&conn, &q, &x.iter().map(|v| 2.0 * v).collect::<Vec<_>>(), &y.iter().map(|v| 4.0 * v).collect::<Vec<_>>(), 0.5, 1e-9).unwrap();
    let b = parabolic_geodesic(&conn, &q, &x, &y, 1.0, 1e-9).unwrap();
    assert!(max_diff(&a, &b) < 1e-8);
}

#[test]
fn differential_at_origin() {
    for conn in [PolyConnection::flat(d1()), random_connection(d1(), 10, &mut rand_chacha::ChaCha8Rng::seed_from_u64(5))] {
        let frame0 = (0..7).map(|a| (0..7).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect();
        let chart = ParabolicChart::new(vec![0.0; 7], conn, frame0, 1e-12).unwrap();
        let h = 1e-4;
        for a in 0..7 {
            let mut zp = vec![0.0; 7];
            let mut zm = vec![0.0; 7];
            zp[a] = h;
            zm[a] = -h;
            let (p, m) = (parabolic_exp(&chart, &zp).unwrap(), parabolic_exp(&chart, &zm).unwrap());
            let expect = if a < 4 { 1.0 } else { 0.5 };
            for k in 0..7 {
                let col = (p[k] - m[k]) / (2.0 * h);
                let want = if k == a { expect } else { 0.0 };
                assert!((col - want).abs() < 1e-6, "a={a} k={k} {col}");
            }
        }
    }
}

#[test]
fn log_recovers_scaled_coordinates() {
    let chart = ParabolicChart::new(
        vec![0.0; 7],
        random_connection(d1(), 10, &mut rand_chacha::ChaCha8Rng::seed_from_u64(9)),
        (0..7).map(|a| (0..7).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect(),
        1e-12,
    )
    .unwrap();
    let z = vec![0.2, -0.1, 0.15, 0.05, 0.1, -0.05, 0.2];
    for s in [0.25, 0.5, 1.0] {
        let (x, y) = chart.vectors(&z);
        let p = parabolic_geodesic(&chart.conn, &chart.center, &x, &y, s, 1e-12).unwrap();
        let back = parabolic_log(&chart, &p, 1e-11).unwrap();
        assert!(max_diff(&back, &dilate_coords(&z, s, 4)) < 1e-8);
    }
}

#[test]
fn metric_transport_preserves_orthonormality() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let conn = metric_connection(d1(), &mut rng);
    let frame0: Vec<Vec<f64>> = (0..7).map(|a| (0..7).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect();
    let (x, y) = (small_vec(&mut rng, 0.5), small_vec(&mut rng, 0.5));
    let fr = transport_frame(&conn, &[0.0; 7], &x, &y, &frame0, 1.0, 1e-11).unwrap();
    for a in 0..7 {
        for b in 0..7 {
            let g: f64 = fr[a].iter().zip(&fr[b]).map(|(u, v)| u * v).sum();
            assert!((g - if a == b { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
    }
    let flat = transport_frame(&PolyConnection::euclidean(d1()), &[0.0; 7], &x, &y, &frame0, 1.0, 1e-11).unwrap();
    assert_eq!(flat, frame0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parabolic_scaling(seed in any::<u64>(), si in 0usize..3, flat in any::<bool>()) {
        let s = [0.25, 0.5, 2.0][si];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let conn = if flat { PolyConnection::flat(d1()) } else { PolyConnection::euclidean(d1()) };
        let (x, y) = (small_vec(&mut rng, 0.5), small_vec(&mut rng, 0.5));
        let q = vec![0.0; 7];
        let xs: Vec<f64> = x.iter().map(|v| s * v).collect();
        let ys: Vec<f64> = y.iter().map(|v| s * s * v).collect();
        let a = parabolic_geodesic(&conn, &q, &xs, &ys, 1.0, 1e-9).unwrap();
        let b = parabolic_geodesic(&conn, &q, &x, &y, s, 1e-9).unwrap();
        prop_assert!(max_diff(&a, &b) <= 1e-8);
    }

    #[test]
    fn log_exp_round_trip(seed in any::<u64>()) {
        let chart = ParabolicChart::flat(d1(), vec![0.0; 7], 1e-12).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let z = small_vec(&mut rng, 0.4);
        let p = parabolic_exp(&chart, &z).unwrap();
        let back = parabolic_log(&chart, &p, 1e-11).unwrap();
        prop_assert!(max_diff(&back, &z) <= 1e-8);
    }
}

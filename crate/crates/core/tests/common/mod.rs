//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use qc_core::geo::PolyConnection;
use qc_core::poly::HPoly;
use qc_core::qalg::Dim;
use qc_core::scalar::rat;
use rand::Rng;

/// Classical RK4 with a fixed step on `y' = f(y)`.
pub fn rk4(f: impl Fn(&[f64]) -> Vec<f64>, y0: &[f64], s: f64, steps: usize) -> Vec<f64> {
    let h = s / steps as f64;
    let mut y = y0.to_vec();
    let axpy = |y: &[f64], k: &[f64], c: f64| y.iter().zip(k).map(|(a, b)| a + c * b).collect::<Vec<_>>();
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, h / 2.0));
        let k3 = f(&axpy(&y, &k2, h / 2.0));
        let k4 = f(&axpy(&y, &k3, h));
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

/// `Σ Γ^a_{bc}(x) u^b v^c` evaluated from the exact polynomials.
pub fn gamma_uv(conn: &PolyConnection, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (&(a, b, c), p) in &conn.gamma {
        out[a] += p.eval_f64(x) * u[b] * v[c];
    }
    out
}

/// Classical geodesic `x'' + Γ(x', x') = 0`.
pub fn classical_geodesic(conn: &PolyConnection, q: &[f64], v: &[f64], s: f64) -> Vec<f64> {
    let d = q.len();
    let y0: Vec<f64> = q.iter().chain(v).cloned().collect();
    let y = rk4(
        |y| {
            let (x, v) = y.split_at(d);
            let g = gamma_uv(conn, x, v, v);
            v.iter().cloned().chain(g.iter().map(|a| -a)).collect()
        },
        &y0,
        s,
        4000,
    );
    y[..d].to_vec()
}

/// The third-order coordinate equation for `D_t²γ̇ = 0`, solved for `γ'''`:
/// `γ''' = −(Γ(γ'', γ') + 2Γ(γ', γ'') + γ'^l ∂_lΓ(γ', γ') + Γ(γ', Γ(γ', γ')))`.
/// Initial data: `γ'' (0) = Y − Γ(X, X)`.
pub fn third_order_geodesic(conn: &PolyConnection, q: &[f64], x: &[f64], y: &[f64], s: f64) -> Vec<f64> {
    let d = q.len();
    let partials: Vec<PolyConnection> = (0..d).map(|l| conn.partial(l)).collect();
    let g0 = gamma_uv(conn, q, x, x);
    let acc0: Vec<f64> = y.iter().zip(&g0).map(|(a, b)| a - b).collect();
    let y0: Vec<f64> = q.iter().chain(x).chain(&acc0).cloned().collect();
    let out = rk4(
        |st| {
            let (p, rest) = st.split_at(d);
            let (v, a) = rest.split_at(d);
            let mut jerk = vec![0.0; d];
            let t1 = gamma_uv(conn, p, a, v);
            let t2 = gamma_uv(conn, p, v, a);
            let gvv = gamma_uv(conn, p, v, v);
            let t4 = gamma_uv(conn, p, v, &gvv);
            for k in 0..d {
                jerk[k] = -(t1[k] + 2.0 * t2[k] + t4[k]);
            }
            for (l, pl) in partials.iter().enumerate() {
                if v[l] != 0.0 {
                    let t3 = gamma_uv(pl, p, v, v);
                    for k in 0..d {
                        jerk[k] -= v[l] * t3[k];
                    }
                }
            }
            v.iter().cloned().chain(a.iter().cloned()).chain(jerk).collect()
        },
        &y0,
        s,
        4000,
    );
    out[..d].to_vec()
}

/// A random connection with small polynomial symbols of weight ≤ 2.
pub fn random_connection<R: Rng>(dim: Dim, entries: usize, rng: &mut R) -> PolyConnection {
    let d = dim.total();
    let mut g = BTreeMap::new();
    for _ in 0..entries {
        let key = (rng.gen_range(0..d), rng.gen_range(0..d), rng.gen_range(0..d));
        let mut p = HPoly::constant(dim, rat(rng.gen_range(-3..=3), 4));
        p = p.add(&HPoly::var(dim, rng.gen_range(0..d)).scale(&rat(rng.gen_range(-3..=3), 4)));
        g.insert(key, p);
    }
    PolyConnection::new(dim, g)
}

/// A connection preserving the Euclidean metric: `Γ^a_{bc}` skew in `(a, c)`.
pub fn metric_connection<R: Rng>(dim: Dim, rng: &mut R) -> PolyConnection {
    let d = dim.total();
    let mut g = BTreeMap::new();
    for _ in 0..10 {
        let (a, b, c) = (rng.gen_range(0..d), rng.gen_range(0..d), rng.gen_range(0..d));
        if a == c {
            continue;
        }
        let p = HPoly::constant(dim, rat(rng.gen_range(-3..=3), 4))
            .add(&HPoly::var(dim, rng.gen_range(0..d)).scale(&rat(rng.gen_range(-3..=3), 4)));
        let prev = g.remove(&(a, b, c)).unwrap_or_else(|| HPoly::zero(dim));
        g.insert((a, b, c), prev.add(&p));
        let prev = g.remove(&(c, b, a)).unwrap_or_else(|| HPoly::zero(dim));
        g.insert((c, b, a), prev.sub(&p));
    }
    PolyConnection::new(dim, g)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

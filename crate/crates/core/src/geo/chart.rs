use rand::Rng;

use super::ode::dopri5;
use super::{GeoError, PolyConnection};
use crate::heis::flat_frame;
use crate::linalg::Matrix;

fn check_len(v: &[f64], want: usize) -> Result<(), GeoError> {
    if v.len() != want {
        return Err(GeoError::BadLength { got: v.len(), want });
    }
    Ok(())
}

/// Solves `D_t^n γ̇ = 0` with `D_t^k γ̇(0) = initial[k]`, returning the full state
/// `(γ, γ̇, …, D_t^{n−1}γ̇)` at `s`, followed by the transported vectors `frame`.
fn integrate(
    conn: &PolyConnection,
    q: &[f64],
    initial: &[Vec<f64>],
    frame: &[Vec<f64>],
    s: f64,
    tol: f64,
) -> Result<Vec<f64>, GeoError> {
    let d = conn.total();
    check_len(q, d)?;
    for v in initial.iter().chain(frame) {
        check_len(v, d)?;
    }
    let n = initial.len();
    let mut y0 = q.to_vec();
    for v in initial.iter().chain(frame) {
        y0.extend_from_slice(v);
    }
    let mut buf = vec![0.0; d];
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let x = &y[..d];
        let vel = &y[d..2 * d];
        dy[..d].copy_from_slice(vel);
        for k in 0..n {
            let vk = &y[(k + 1) * d..(k + 2) * d];
            conn.contract(x, vel, vk, &mut buf);
            for j in 0..d {
                let next = if k + 1 < n { y[(k + 2) * d + j] } else { 0.0 };
                dy[(k + 1) * d + j] = next - buf[j];
            }
        }
        for f in 0..frame.len() {
            let off = (n + 1 + f) * d;
            conn.contract(x, vel, &y[off..off + d], &mut buf);
            for j in 0..d {
                dy[off + j] = -buf[j];
            }
        }
    };
    Ok(dopri5(rhs, &y0, s, tol)?.0)
}

/// Polynomial geodesic `D_t^n γ̇ = 0`; `n = 1` gives ordinary geodesics and `n = 2`
/// parabolic ones.
pub fn polynomial_geodesic(
    conn: &PolyConnection,
    q: &[f64],
    initial: &[Vec<f64>],
    s: f64,
    tol: f64,
) -> Result<Vec<f64>, GeoError> {
    let y = integrate(conn, q, initial, &[], s, tol)?;
    Ok(y[..conn.total()].to_vec())
}

/// `γ_{(X,Y)}(s)` for coordinate tangent vectors `X` (horizontal) and `Y` (vertical).
pub fn parabolic_geodesic(
    conn: &PolyConnection,
    q: &[f64],
    x: &[f64],
    y: &[f64],
    s: f64,
    tol: f64,
) -> Result<Vec<f64>, GeoError> {
    polynomial_geodesic(conn, q, &[x.to_vec(), y.to_vec()], s, tol)
}

/// Transports `frame0` along `γ_{(X,Y)}`, returning the frame at `γ(s)`.
pub fn transport_frame(
    conn: &PolyConnection,
    q: &[f64],
    x: &[f64],
    y: &[f64],
    frame0: &[Vec<f64>],
    s: f64,
    tol: f64,
) -> Result<Vec<Vec<f64>>, GeoError> {
    let d = conn.total();
    let out = integrate(conn, q, &[x.to_vec(), y.to_vec()], frame0, s, tol)?;
    Ok((0..frame0.len()).map(|f| out[(3 + f) * d..(4 + f) * d].to_vec()).collect())
}

/// A center, a connection and a frame at the center. Chart coordinates `(x^α, t^i)`
/// stand for the tangent vector `X = x^αξ_α`, `Y = t^iR_i`.
#[derive(Clone, Debug)]
pub struct ParabolicChart {
    pub center: Vec<f64>,
    pub conn: PolyConnection,
    pub frame0: Vec<Vec<f64>>,
    pub tol: f64,
}

impl ParabolicChart {
    pub fn new(center: Vec<f64>, conn: PolyConnection, frame0: Vec<Vec<f64>>, tol: f64) -> Result<Self, GeoError> {
        let d = conn.total();
        check_len(&center, d)?;
        if frame0.len() != d {
            return Err(GeoError::BadLength { got: frame0.len(), want: d });
        }
        for v in &frame0 {
            check_len(v, d)?;
        }
        if !(tol > 0.0) {
            return Err(GeoError::BadTolerance(tol));
        }
        Ok(ParabolicChart { center, conn, frame0, tol })
    }

    /// Flat model centered at `center` with the left-invariant frame there.
    pub fn flat(dim: crate::qalg::Dim, center: Vec<f64>, tol: f64) -> Result<Self, GeoError> {
        let ff = flat_frame::<f64>(dim);
        check_len(&center, dim.total())?;
        let frame0 = (0..dim.total()).map(|a| ff.field(a, &center)).collect();
        Self::new(center, PolyConnection::flat(dim), frame0, tol)
    }

    pub fn h(&self) -> usize {
        self.conn.dim.h()
    }

    /// Coordinate tangent vectors `(X, Y)` for chart coordinates `z`.
    pub fn vectors(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.conn.total();
        let h = self.h();
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        for (a, za) in z.iter().enumerate() {
            let target = if a < h { &mut x } else { &mut y };
            for j in 0..d {
                target[j] += za * self.frame0[a][j];
            }
        }
        (x, y)
    }

    /// `dΨ|₀` in chart coordinates: frame columns, with the vertical ones halved.
    pub fn linearization(&self) -> Matrix<f64> {
        let h = self.h();
        let d = self.conn.total();
        Matrix::from_fn(d, d, |r, c| if c < h { self.frame0[c][r] } else { 0.5 * self.frame0[c][r] })
    }
}

/// `Ψ(z) = γ_{(X,Y)}(1)`.
pub fn parabolic_exp(chart: &ParabolicChart, z: &[f64]) -> Result<Vec<f64>, GeoError> {
    check_len(z, chart.conn.total())?;
    let (x, y) = chart.vectors(z);
    parabolic_geodesic(&chart.conn, &chart.center, &x, &y, 1.0, chart.tol)
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub const NEWTON_MAX_ITER: usize = 50;
pub const NEWTON_FD_STEP: f64 = 1e-5;

/// Newton inverse of `Ψ`, seeded by `dΨ|₀`.
pub fn parabolic_log(chart: &ParabolicChart, p: &[f64], tol: f64) -> Result<Vec<f64>, GeoError> {
    let d = chart.conn.total();
    check_len(p, d)?;
    let lin = chart.linearization();
    let diff: Vec<f64> = p.iter().zip(&chart.center).map(|(a, b)| a - b).collect();
    let mut z = lin.solve(&diff).ok_or(GeoError::SingularJacobian)?;
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let f: Vec<f64> = parabolic_exp(chart, &z)?.iter().zip(p).map(|(a, b)| a - b).collect();
        residual = max_norm(&f);
        if residual < tol {
            return Ok(z);
        }
        let mut jac = Matrix::zeros(d, d);
        for k in 0..d {
            let step = NEWTON_FD_STEP * z[k].abs().max(1.0);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += step;
            zm[k] -= step;
            let (fp, fm) = (parabolic_exp(chart, &zp)?, parabolic_exp(chart, &zm)?);
            for r in 0..d {
                jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * step);
            }
        }
        let dz = jac.solve(&f).ok_or(GeoError::SingularJacobian)?;
        for k in 0..d {
            z[k] -= dz[k];
        }
        if !z.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    Err(GeoError::NewtonDiverged { iterations: NEWTON_MAX_ITER, residual })
}

/// Parabolic dilation `(x, t) ↦ (s x, s² t)` of chart coordinates.
pub fn dilate_coords(z: &[f64], s: f64, h: usize) -> Vec<f64> {
    z.iter().enumerate().map(|(a, v)| if a < h { s * v } else { s * s * v }).collect()
}

/// Largest radius `r ≤ r_max` found by bisection such that `Ψ` integrates on the
/// dilates `δ_r` of `samples` random unit directions.
pub fn validity_radius<R: Rng + ?Sized>(chart: &ParabolicChart, r_max: f64, samples: usize, rng: &mut R) -> f64 {
    let d = chart.conn.total();
    let h = chart.h();
    let dirs: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = max_norm(&v).max(1e-12);
            v.iter().map(|x| x / n).collect()
        })
        .collect();
    let ok = |r: f64| {
        dirs.iter().all(|u| {
            parabolic_exp(chart, &dilate_coords(u, r, h)).map(|p| p.iter().all(|x| x.is_finite())).unwrap_or(false)
        })
    };
    if ok(r_max) {
        return r_max;
    }
    let (mut lo, mut hi) = (0.0, r_max);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Clone, Debug, PartialEq)]
pub enum VanishingOrder {
    /// Least-squares slope of `log|f|` against `log s`, with the RMS fit residual.
    Estimate { order: f64, residual: f64 },
    /// Every sample fell below the noise floor.
    AtLeast { cutoff: f64 },
}

/// Fits `|f(s)| ≈ C s^k` over `s_grid`, skipping samples at or below `noise_floor`.
pub fn vanishing_order(f: impl Fn(f64) -> f64, s_grid: &[f64], noise_floor: f64) -> Result<VanishingOrder, GeoError> {
    if s_grid.len() < 6 || s_grid.iter().any(|s| !(*s > 0.0)) {
        return Err(GeoError::TooFewSamples(6));
    }
    let pts: Vec<(f64, f64)> =
        s_grid.iter().map(|&s| (s, f(s).abs())).filter(|(_, v)| *v > noise_floor).map(|(s, v)| (s.ln(), v.ln())).collect();
    if pts.len() < 2 {
        let s_max = s_grid.iter().cloned().fold(0.0, f64::max);
        let s_min = s_grid.iter().cloned().fold(f64::INFINITY, f64::min);
        let cutoff = if s_max > s_min && s_max < 1.0 { noise_floor.ln() / s_max.ln() } else { 0.0 };
        return Ok(VanishingOrder::AtLeast { cutoff });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let order = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - order * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(VanishingOrder::Estimate { order, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heis::{flat_frame, GroupPoint};
    use crate::qalg::Dim;
    use rand::SeedableRng;

    fn d1() -> Dim {
        Dim::new(1).unwrap()
    }

    #[test]
    fn euclidean_parabola() {
        let conn = PolyConnection::euclidean(d1());
        let q = vec![0.1; 7];
        let x: Vec<f64> = (0..7).map(|k| 0.3 * k as f64 - 0.5).collect();
        let y: Vec<f64> = (0..7).map(|k| 0.2 - 0.1 * k as f64).collect();
        let p = parabolic_geodesic(&conn, &q, &x, &y, 0.7, 1e-10).unwrap();
        for k in 0..7 {
            assert!((p[k] - (q[k] + 0.7 * x[k] + 0.245 * y[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn flat_exp_is_identity_chart() {
        let chart = ParabolicChart::flat(d1(), vec![0.0; 7], 1e-11).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let z: Vec<f64> = (0..7).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let p = parabolic_exp(&chart, &z).unwrap();
            assert!(max_norm(&p.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-9);
        }
        assert_eq!(parabolic_exp(&chart, &[0.0; 7]).unwrap(), vec![0.0; 7]);
    }

    #[test]
    fn flat_chart_off_origin_matches_group_translation() {
        // Left translation is an isometry of the flat model, so Ψ_q(z) = q · Ψ_0(z).
        let q = vec![0.2, -0.1, 0.3, 0.05, 0.1, -0.2, 0.15];
        let chart = ParabolicChart::flat(d1(), q.clone(), 1e-11).unwrap();
        let z = vec![0.3, 0.1, -0.2, 0.4, 0.2, 0.1, -0.3];
        let p = parabolic_exp(&chart, &z).unwrap();
        let gq = GroupPoint::<f64>::from_coords(&q).unwrap();
        let want = gq.multiply(&GroupPoint::from_coords(&z).unwrap()).unwrap().coords();
        for k in 0..7 {
            assert!((p[k] - want[k]).abs() < 1e-9, "{k}: {} vs {}", p[k], want[k]);
        }
    }

    #[test]
    fn flat_transport_is_left_invariant_frame() {
        let dim = d1();
        let chart = ParabolicChart::flat(dim, vec![0.0; 7], 1e-11).unwrap();
        let z = vec![0.5, -0.3, 0.2, 0.7, -0.4, 0.3, 0.1];
        let (x, y) = chart.vectors(&z);
        let fr = transport_frame(&chart.conn, &chart.center, &x, &y, &chart.frame0, 1.0, 1e-11).unwrap();
        let end = parabolic_exp(&chart, &z).unwrap();
        let ff = flat_frame::<f64>(dim);
        for a in 0..7 {
            let want = ff.field(a, &end);
            for k in 0..7 {
                assert!((fr[a][k] - want[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn log_inverts_exp() {
        let chart = ParabolicChart::flat(d1(), vec![0.0; 7], 1e-12).unwrap();
        let z = vec![0.1, 0.2, -0.3, 0.05, 0.2, -0.1, 0.3];
        let p = parabolic_exp(&chart, &z).unwrap();
        let back = parabolic_log(&chart, &p, 1e-10).unwrap();
        assert!(max_norm(&back.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-8);
        assert!(max_norm(&parabolic_log(&chart, &chart.center.clone(), 1e-10).unwrap()) < 1e-12);
    }

    #[test]
    fn vanishing_order_examples() {
        let grid: Vec<f64> = (0..8).map(|k| 0.05 * 1.4f64.powi(k)).collect();
        let z = [0.3, 0.7, 0.0, 0.0, 0.5, 0.0, 0.0];
        let h = 4;
        let x1x2 = |s: f64| {
            let w = dilate_coords(&z, s, h);
            w[0] * w[1]
        };
        let t1 = |s: f64| dilate_coords(&z, s, h)[4];
        for f in [&x1x2 as &dyn Fn(f64) -> f64, &t1] {
            match vanishing_order(f, &grid, 1e-300).unwrap() {
                VanishingOrder::Estimate { order, residual } => {
                    assert!((order - 2.0).abs() < 0.05 && residual < 1e-8)
                }
                v => panic!("{v:?}"),
            }
        }
        assert!(matches!(vanishing_order(|_| 0.0, &grid, 1e-14).unwrap(), VanishingOrder::AtLeast { .. }));
        assert!(vanishing_order(|s| s, &grid[..3], 0.0).is_err());
    }

    #[test]
    fn validity_radius_for_blowup() {
        // Γ^0_{00} = 1 makes geodesics blow up: x'' = −x'², here along the x¹ axis.
        let dim = d1();
        let mut g = std::collections::BTreeMap::new();
        g.insert((0, 0, 0), crate::poly::HPoly::constant(dim, crate::scalar::rint(-1)));
        let conn = PolyConnection::new(dim, g);
        let frame0 = (0..7).map(|a| (0..7).map(|k| if k == a { 1.0 } else { 0.0 }).collect()).collect();
        let chart = ParabolicChart::new(vec![0.0; 7], conn, frame0, 1e-9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let r = validity_radius(&chart, 10.0, 8, &mut rng);
        assert!(r > 0.1 && r < 10.0, "{r}");
        let flat = ParabolicChart::flat(dim, vec![0.0; 7], 1e-9).unwrap();
        assert_eq!(validity_radius(&flat, 2.0, 4, &mut rng), 2.0);
    }
}

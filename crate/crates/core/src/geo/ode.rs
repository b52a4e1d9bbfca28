//! Dormand–Prince 5(4) with adaptive step control.

use super::GeoError;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

pub const MAX_STEPS: usize = 200_000;

#[derive(Clone, Copy, Debug)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(s, y)` from `0` to `s_end` with mixed absolute/relative tolerance `tol`.
pub fn dopri5(
    mut f: impl FnMut(f64, &[f64], &mut [f64]),
    y0: &[f64],
    s_end: f64,
    tol: f64,
) -> Result<(Vec<f64>, OdeStats), GeoError> {
    if !(tol > 0.0) {
        return Err(GeoError::BadTolerance(tol));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut stats = OdeStats { accepted: 0, rejected: 0 };
    if s_end == 0.0 {
        return Ok((y, stats));
    }
    let dir = s_end.signum();
    let span = s_end.abs();
    let floor = 1e-13 * span.max(1.0);
    let mut s = 0.0f64;
    let mut h = (0.01 * span).min(0.1 * tol.powf(0.2)).max(floor * 10.0);
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    f(0.0, &y, &mut k[0]);
    while s < span {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(GeoError::TooManySteps { reached: s * dir });
        }
        if h < floor {
            return Err(GeoError::StepUnderflow { reached: s * dir });
        }
        let h_step = h.min(span - s);
        for st in 1..7 {
            for j in 0..n {
                let mut acc = y[j];
                for (p, kp) in k.iter().enumerate().take(st) {
                    acc += dir * h_step * A[st][p] * kp[j];
                }
                tmp[j] = acc;
            }
            f(dir * (s + C[st] * h_step), &tmp, &mut k[st]);
        }
        // k[6] was evaluated at the fifth-order solution (FSAL).
        let mut err: f64 = 0.0;
        let mut y_new = vec![0.0; n];
        for j in 0..n {
            let mut y5 = y[j];
            let mut e = 0.0;
            for st in 0..7 {
                y5 += dir * h_step * B5[st] * k[st][j];
                e += dir * h_step * (B5[st] - B4[st]) * k[st][j];
            }
            y_new[j] = y5;
            let sc = tol + tol * y[j].abs().max(y5.abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            stats.rejected += 1;
            h = h_step * 0.2;
            continue;
        }
        if err <= 1.0 {
            s += h_step;
            y = y_new;
            k.swap(0, 6);
            stats.accepted += 1;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = h_step * fac;
        } else {
            stats.rejected += 1;
            h = h_step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok((y, stats))
}

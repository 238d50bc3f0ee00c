//! Embedded Dormand-Prince 5(4) integration with adaptive step control.
//!
//! Output samples land exactly on the requested grid: the adaptive step is
//! clipped so every grid point is a step endpoint, which avoids dense-output
//! interpolation error entirely at negligible cost for the grids used here.

use crate::error::{CoreError, Result};

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

/// Integrates dy/dt = f(t, y) from `grid[0]`, returning the state at every
/// grid point (the first row is the initial state).
pub fn integrate_to_grid<const N: usize, F>(
    f: F,
    grid: &[f64],
    y0: [f64; N],
    opts: &OdeOptions,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    assert!(grid.len() >= 2, "need at least two grid points");
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0);

    let mut t = grid[0];
    let mut y = y0;
    let mut k1 = f(t, &y);
    let span = (grid[grid.len() - 1] - grid[0]).abs();
    let mut h = (span / 100.0).min((grid[1] - grid[0]).abs()).max(1e-14 * span);
    let dir = (grid[grid.len() - 1] - grid[0]).signum();
    h *= dir;
    let mut steps = 0usize;

    for &t_target in &grid[1..] {
        while (t_target - t) * dir > 1e-14 * span.max(1.0) {
            steps += 1;
            if steps > opts.max_steps {
                return Err(CoreError::Convergence { t, eps: h.abs() });
            }
            let mut h_try = h;
            if (t + h_try - t_target) * dir > 0.0 {
                h_try = t_target - t;
            }
            let mut ks = [[0.0; N]; 7];
            ks[0] = k1;
            for stage in 0..6 {
                let mut y_stage = y;
                for (j, k) in ks.iter().enumerate().take(stage + 1) {
                    let a = A[stage][j];
                    if a != 0.0 {
                        for i in 0..N {
                            y_stage[i] += h_try * a * k[i];
                        }
                    }
                }
                ks[stage + 1] = f(t + C[stage] * h_try, &y_stage);
            }
            let mut y5 = y;
            let mut err = 0.0f64;
            for i in 0..N {
                let mut acc5 = 0.0;
                let mut acc_err = 0.0;
                for (j, k) in ks.iter().enumerate() {
                    acc5 += B5[j] * k[i];
                    acc_err += (B5[j] - B4[j]) * k[i];
                }
                y5[i] += h_try * acc5;
                let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
                let e = h_try * acc_err / scale;
                err += e * e;
            }
            let err_norm = (err / N as f64).sqrt();

            if err_norm <= 1.0 {
                t += h_try;
                y = y5;
                k1 = ks[6]; // FSAL
                if !y.iter().all(|v| v.is_finite()) {
                    return Err(CoreError::Singularity { t });
                }
            }
            // PI-free step controller with the usual safety bounds
            let factor = if err_norm > 0.0 {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = h_try * factor;
            if h.abs() < 1e-15 * span.max(1.0) {
                return Err(CoreError::Convergence { t, eps: h.abs() });
            }
        }
        out.push(y);
    }
    Ok(out)
}

//! Quantum observables of the dragged oscillator: number-state transition
//! probabilities, energy moments, coherent-state expectation values,
//! dispersions and squeezing, plus the phase-averaged classical analogues.
//!
//! All transition physics is controlled by the single classical quantity
//! gamma(t) = m |u_c' + i w u_c|^2 / (2 hbar w0), the transferred energy in
//! units of hbar w0. Planck's constant is passed explicitly; use
//! `hbar = 1` together with m = w0 = 1 for dimensionless test vectors.

use crate::ermakov::{ClassicalTrajectory, ErmakovSolution};
use crate::error::{CoreError, Result};
use crate::special::ln_factorial;
use num_complex::Complex64;

/// Number-state transition probabilities P\[m\]\[n\] at fixed gamma.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    pub gamma: f64,
    /// initial state the table was requested for
    pub initial_n: usize,
    /// matrix extends over 0..=cutoff in both indices
    pub cutoff: usize,
    /// p\[m\]\[n\] = P_mn
    pub p: Vec<Vec<f64>>,
    /// |1 - sum_m P_mn| for the requested initial column
    pub normalization_defect: f64,
    /// set when the cutoff was too small for the requested accuracy
    pub warning: Option<String>,
}

impl TransitionTable {
    /// Sum of column `n` over all retained m.
    pub fn column_sum(&self, n: usize) -> f64 {
        (0..=self.cutoff).map(|m| self.p[m][n]).sum()
    }

    /// First moment sum_m m P_mn of column `n`.
    pub fn column_mean(&self, n: usize) -> f64 {
        (0..=self.cutoff).map(|m| m as f64 * self.p[m][n]).sum()
    }

    /// Central second moment sum_m (m - mean)^2 P_mn of column `n`.
    pub fn column_variance(&self, n: usize) -> f64 {
        let mean = self.column_mean(n);
        (0..=self.cutoff)
            .map(|m| {
                let d = m as f64 - mean;
                d * d * self.p[m][n]
            })
            .sum()
    }
}

/// Mean and variance of the oscillator energy distribution.
#[derive(Clone, Copy, Debug)]
pub struct MomentResult {
    /// mean energy; units follow the inputs (hbar*w0 or J)
    pub mean: f64,
    /// variance in the squared energy unit
    pub variance: f64,
}

/// Position/momentum dispersions along a trajectory.
#[derive(Clone, Debug)]
pub struct DispersionTrace {
    pub t: Vec<f64>,
    /// <(dq)^2>, m^2
    pub dq2: Vec<f64>,
    /// <(dp)^2>, kg^2 m^2 / s^2
    pub dp2: Vec<f64>,
    /// dq^2 * dp^2 = hbar^2 (1 + rho^2 rho'^2) / 4
    pub uncertainty_product: Vec<f64>,
}

/// Classical energy transfer in units of hbar w0:
/// gamma = m |u_c' + i w u_c|^2 / (2 hbar w0).
pub fn gamma_classical(u_c: f64, u_dot_c: f64, omega: f64, mass: f64, hbar: f64) -> f64 {
    let amp = Complex64::new(u_dot_c, omega * u_c);
    mass * amp.norm_sqr() / (2.0 * hbar * omega)
}

/// Associated Laguerre polynomial L_k^a(x) by the three-term recurrence.
pub fn laguerre_assoc(k: usize, a: usize, x: f64) -> f64 {
    let (value, exponent) = laguerre_scaled(k, a, x);
    value * (exponent as f64 * std::f64::consts::LN_2).exp()
}

/// L_k^a(x) as (mantissa, base-2 exponent), renormalized during the
/// recurrence so huge polynomial values never overflow.
fn laguerre_scaled(k: usize, a: usize, x: f64) -> (f64, i64) {
    let af = a as f64;
    if k == 0 {
        return (1.0, 0);
    }
    let mut prev = 1.0f64;
    let mut curr = 1.0 + af - x;
    let mut exponent: i64 = 0;
    for i in 1..k {
        let ifl = i as f64;
        let next = ((2.0 * ifl + 1.0 + af - x) * curr - (ifl + af) * prev) / (ifl + 1.0);
        prev = curr;
        curr = next;
        let mag = curr.abs().max(prev.abs());
        if mag > 1e150 {
            curr *= 2.0f64.powi(-512);
            prev *= 2.0f64.powi(-512);
            exponent += 512;
        } else if mag > 0.0 && mag < 1e-150 {
            curr *= 2.0f64.powi(512);
            prev *= 2.0f64.powi(512);
            exponent -= 512;
        }
    }
    (curr, exponent)
}

/// Transition probability between number states n -> m of the dragged
/// oscillator: P_mn = (mu!/nu!) gamma^(nu-mu) e^(-gamma) (L_mu^(nu-mu)(gamma))^2
/// with mu = min(m, n), nu = max(m, n). Evaluated in log space.
pub fn transition_probability(m: usize, n: usize, gamma: f64) -> f64 {
    assert!(gamma >= 0.0, "gamma must be nonnegative");
    let mu = m.min(n);
    let nu = m.max(n);
    if gamma == 0.0 {
        return if m == n { 1.0 } else { 0.0 };
    }
    let (lag, lag_exp) = laguerre_scaled(mu, nu - mu, gamma);
    if lag == 0.0 {
        return 0.0;
    }
    let ln_p = ln_factorial(mu) - ln_factorial(nu) + (nu - mu) as f64 * gamma.ln() - gamma
        + 2.0 * (lag.abs().ln() + lag_exp as f64 * std::f64::consts::LN_2);
    ln_p.exp().min(1.0)
}

/// Default cutoff n + ceil(10 (1 + gamma)) + 20, which keeps the Poisson
/// tail defect below ~1e-10 for gamma <= 10.
pub fn default_cutoff(n: usize, gamma: f64) -> usize {
    n + (10.0 * (1.0 + gamma)).ceil() as usize + 20
}

/// Builds the full transition matrix up to `cutoff` and reports the
/// normalization defect of the requested initial column.
pub fn transition_table(n: usize, gamma: f64, cutoff: usize) -> Result<TransitionTable> {
    if gamma < 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    let minimum = n + (10.0 * (1.0 + gamma)) as usize;
    if cutoff < minimum {
        return Err(CoreError::InvalidParameter(format!(
            "cutoff {cutoff} below the minimum {minimum} for n = {n}, gamma = {gamma}"
        )));
    }
    let size = cutoff + 1;
    let mut p = vec![vec![0.0; size]; size];
    for m in 0..size {
        for k in m..size {
            let value = transition_probability(m, k, gamma);
            p[m][k] = value;
            p[k][m] = value;
        }
    }
    let mut table = TransitionTable {
        gamma,
        initial_n: n,
        cutoff,
        p,
        normalization_defect: 0.0,
        warning: None,
    };
    table.normalization_defect = (1.0 - table.column_sum(n)).abs();
    if table.normalization_defect > 1e-8 {
        table.warning = Some(format!(
            "cutoff {cutoff} leaves a normalization defect of {:.3e} for n = {n}",
            table.normalization_defect
        ));
    }
    Ok(table)
}

/// Quantum energy moments after transport from number state n:
/// mean (n + gamma + 1/2) hbar w0, variance (hbar w0)^2 (2n + 1) gamma.
pub fn quantum_moments(n: usize, gamma: f64, omega0: f64, hbar: f64) -> MomentResult {
    let quantum = hbar * omega0;
    MomentResult {
        mean: (n as f64 + gamma + 0.5) * quantum,
        variance: quantum * quantum * (2.0 * n as f64 + 1.0) * gamma,
    }
}

/// Phase-averaged classical moments: mean E0 + W, variance 2 E0 W.
/// The classical ground state E0 = 0 acquires energy but no spread.
pub fn classical_moments(e0: f64, w: f64) -> MomentResult {
    MomentResult {
        mean: e0 + w,
        variance: 2.0 * e0 * w,
    }
}

/// Coherent-state expectation values along the transport:
/// <q> = sqrt(2 hbar / m) rho |alpha| cos(mu + phi) + u_p and
/// <p> = sqrt(2 hbar m) |alpha| (rho' cos - sin/rho) + m u_p',
/// with alpha = |alpha| e^(-i phi).
pub fn coherent_expectations(
    alpha: Complex64,
    es: &ErmakovSolution,
    tr: &ClassicalTrajectory,
    mass: f64,
    hbar: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if tr.t.len() != es.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "trajectory grid ({}) vs solution grid ({})",
            tr.t.len(),
            es.len()
        )));
    }
    let magnitude = alpha.norm();
    let phi = -alpha.arg();
    let q_scale = (2.0 * hbar / mass).sqrt() * magnitude;
    let p_scale = (2.0 * hbar * mass).sqrt() * magnitude;
    let n = es.len();
    let mut q = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for i in 0..n {
        let arg = es.mu[i] + phi;
        q.push(q_scale * es.rho[i] * arg.cos() + tr.u_p[i]);
        p.push(
            p_scale * (es.rho_dot[i] * arg.cos() - arg.sin() / es.rho[i])
                + mass * tr.u_p_dot[i],
        );
    }
    Ok((q, p))
}

/// Coherent-state dispersions along an Ermakov solution:
/// <(dq)^2> = hbar rho^2 / 2m, <(dp)^2> = hbar m (rho^-2 + rho'^2) / 2.
/// The force never enters; only squeezing through rho does.
pub fn dispersions(es: &ErmakovSolution, mass: f64, hbar: f64) -> DispersionTrace {
    let n = es.len();
    let mut dq2 = Vec::with_capacity(n);
    let mut dp2 = Vec::with_capacity(n);
    let mut product = Vec::with_capacity(n);
    for i in 0..n {
        let r = es.rho[i];
        let rd = es.rho_dot[i];
        dq2.push(hbar * r * r / (2.0 * mass));
        dp2.push(hbar * mass * (1.0 / (r * r) + rd * rd) / 2.0);
        product.push(hbar * hbar * (1.0 + r * r * rd * rd) / 4.0);
    }
    DispersionTrace {
        t: es.t.clone(),
        dq2,
        dp2,
        uncertainty_product: product,
    }
}

/// Post-transport dispersions from the closed-form constant-frequency
/// amplitude: both oscillate as cosh(d) +- sinh(d) sin(2 w0 t + theta), at
/// twice the trap frequency and in antiphase.
pub fn squeezing_trace(
    delta: f64,
    theta: f64,
    omega0: f64,
    mass: f64,
    hbar: f64,
    t_grid: &[f64],
) -> DispersionTrace {
    let n = t_grid.len();
    let mut dq2 = Vec::with_capacity(n);
    let mut dp2 = Vec::with_capacity(n);
    let mut product = Vec::with_capacity(n);
    for &t in t_grid {
        let (r, rd) = crate::ermakov::constant_freq_rho(delta, theta, omega0, t);
        dq2.push(hbar * r * r / (2.0 * mass));
        dp2.push(hbar * mass * (1.0 / (r * r) + rd * rd) / 2.0);
        product.push(hbar * hbar * (1.0 + r * r * rd * rd) / 4.0);
    }
    DispersionTrace {
        t: t_grid.to_vec(),
        dq2,
        dp2,
        uncertainty_product: product,
    }
}

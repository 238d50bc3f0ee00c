//! Classical dynamics of the parametrically driven, forced harmonic
//! oscillator in the frame moving with the transport function.
//!
//! The homogeneous problem u'' + w^2(t) u = 0 is parametrized by the
//! amplitude rho(t) and phase mu(t) obeying
//!
//! ```text
//!   rho'' + w^2(t) rho = 1 / rho^3        rho^2 mu' = 1
//! ```
//!
//! with the phase-law constant fixed to 1 (SI units m^2 rad/s folded into
//! rho). Forced trajectories come from the causal Green's function, and the
//! transferred energy is measured by the adiabatic suppression amplitude
//! Xi(t) = u_p'(t) + i w(t) u_p(t), W = m |Xi|^2 / 2.
//!
//! Quantities with a tilde in the result structs are divided by half the
//! transport distance b/2, so |Xi~/w0|^2 is the dimensionless suppression
//! factor plotted against x/2pi = w0 t0 / 2pi.

use crate::error::{CoreError, Result};
use crate::ode::{integrate_to_grid, OdeOptions};
use crate::profiles::TransportProfile;
use crate::quadrature::{
    cumulative_simpson, cumulative_simpson_real, integrate_adaptive_complex, simpson_uniform,
};
use crate::special::{erf, erf_complex, sinc};
use crate::HBAR;
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

/// Time-dependent trap frequency w(t) with its settled initial value w0.
#[derive(Clone)]
pub enum FrequencyProgram {
    Constant {
        omega0: f64,
    },
    Callable {
        omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        omega0: f64,
    },
    /// Uniformly gridded w(t), linearly interpolated.
    Tabulated {
        t: Vec<f64>,
        omega: Vec<f64>,
        omega0: f64,
    },
}

impl std::fmt::Debug for FrequencyProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constant { omega0 } => write!(f, "FrequencyProgram::Constant({omega0})"),
            Self::Callable { omega0, .. } => write!(f, "FrequencyProgram::Callable(w0={omega0})"),
            Self::Tabulated { t, omega0, .. } => {
                write!(f, "FrequencyProgram::Tabulated({} pts, w0={omega0})", t.len())
            }
        }
    }
}

impl FrequencyProgram {
    pub fn constant(omega0: f64) -> Result<Self> {
        if omega0 <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "omega0 must be positive, got {omega0}"
            )));
        }
        Ok(Self::Constant { omega0 })
    }

    pub fn callable<F>(omega: F, omega0: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::Callable {
            omega: Arc::new(omega),
            omega0,
        }
    }

    pub fn tabulated(t: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        if t.len() != omega.len() || t.len() < 5 {
            return Err(CoreError::InvalidGrid(
                "frequency table needs matching t/omega arrays of >= 5 points".into(),
            ));
        }
        if omega.iter().any(|&w| !(w > 0.0)) {
            return Err(CoreError::InvalidParameter(
                "omega(t) must stay positive".into(),
            ));
        }
        let omega0 = omega[0];
        Ok(Self::Tabulated { t, omega, omega0 })
    }

    /// Settled frequency at the start of the transport.
    pub fn omega0(&self) -> f64 {
        match self {
            Self::Constant { omega0 }
            | Self::Callable { omega0, .. }
            | Self::Tabulated { omega0, .. } => *omega0,
        }
    }

    pub fn omega(&self, t: f64) -> f64 {
        match self {
            Self::Constant { omega0 } => *omega0,
            Self::Callable { omega, .. } => omega(t),
            Self::Tabulated { t: ts, omega, .. } => {
                let n = ts.len();
                if t <= ts[0] {
                    return omega[0];
                }
                if t >= ts[n - 1] {
                    return omega[n - 1];
                }
                let h = (ts[n - 1] - ts[0]) / (n as f64 - 1.0);
                let pos = (t - ts[0]) / h;
                let i = (pos.floor() as usize).min(n - 2);
                let s = pos - i as f64;
                omega[i] * (1.0 - s) + omega[i + 1] * s
            }
        }
    }

    /// (w'(t), w''(t)); exact zero for constant programs, central finite
    /// differences otherwise.
    pub fn omega_derivs(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            Self::Constant { .. } => Ok((0.0, 0.0)),
            Self::Callable { omega, .. } => {
                let scale = 1.0 / self.omega(t).max(1e-300);
                let h1 = 6e-6 * scale;
                let d1 = (omega(t + h1) - omega(t - h1)) / (2.0 * h1);
                let h2 = 1.2e-4 * scale;
                let d2 = (omega(t + h2) - 2.0 * omega(t) + omega(t - h2)) / (h2 * h2);
                Ok((d1, d2))
            }
            Self::Tabulated { t: ts, omega, .. } => {
                let n = ts.len();
                let h = (ts[n - 1] - ts[0]) / (n as f64 - 1.0);
                let i = (((t - ts[0]) / h).round() as isize).clamp(2, n as isize - 3) as usize;
                let d1 = (omega[i + 1] - omega[i - 1]) / (2.0 * h);
                let d2 = (omega[i + 1] - 2.0 * omega[i] + omega[i - 1]) / (h * h);
                // doubled-spacing consistency probe
                let d1w = (omega[i + 2] - omega[i - 2]) / (4.0 * h);
                let scale = self.omega0() / h;
                if (d1 - d1w).abs() > 0.5 * d1.abs().max(d1w.abs()) + 1e-6 * scale {
                    return Err(CoreError::FiniteDifference(format!(
                        "tabulated omega looks non-smooth near t = {t}"
                    )));
                }
                Ok((d1, d2))
            }
        }
    }
}

/// External forcing f(t) = -q0''(t) + a_res(q0(t)), m/s^2.
#[derive(Clone)]
pub enum ForcingTerm {
    Zero,
    Callable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Uniformly gridded samples, linearly interpolated, zero outside.
    Tabulated { t: Vec<f64>, f: Vec<f64> },
}

impl std::fmt::Debug for ForcingTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "ForcingTerm::Zero"),
            Self::Callable(_) => write!(f, "ForcingTerm::Callable"),
            Self::Tabulated { t, .. } => write!(f, "ForcingTerm::Tabulated({} pts)", t.len()),
        }
    }
}

impl ForcingTerm {
    pub fn callable<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::Callable(Arc::new(f))
    }

    /// Ideal transport forcing f(t) = -q0''(t) (zero residual acceleration),
    /// vanishing outside [-t0, t0].
    pub fn from_profile_ideal(p: &TransportProfile) -> Self {
        let p = p.clone();
        Self::callable(move |t| {
            if t.abs() <= p.t0() {
                -p.q0_deriv(t, 2)
            } else {
                0.0
            }
        })
    }

    pub fn tabulated(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.len() != f.len() || t.len() < 3 {
            return Err(CoreError::InvalidGrid(
                "forcing table needs matching arrays of >= 3 points".into(),
            ));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidForcing("non-finite sample".into()));
        }
        Ok(Self::Tabulated { t, f })
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Callable(f) => f(t),
            Self::Tabulated { t: ts, f } => {
                let n = ts.len();
                if t < ts[0] || t > ts[n - 1] {
                    return 0.0;
                }
                let h = (ts[n - 1] - ts[0]) / (n as f64 - 1.0);
                let pos = (t - ts[0]) / h;
                let i = (pos.floor() as usize).min(n - 2);
                let s = pos - i as f64;
                f[i] * (1.0 - s) + f[i + 1] * s
            }
        }
    }
}

/// Amplitude, phase and derivative of the Ermakov parametrization on a
/// uniform time grid.
#[derive(Clone, Debug)]
pub struct ErmakovSolution {
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_dot: Vec<f64>,
    pub mu: Vec<f64>,
    pub program: FrequencyProgram,
}

impl ErmakovSolution {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Grid spacing.
    pub fn h(&self) -> f64 {
        (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() as f64 - 1.0)
    }

    /// Index of the grid point nearest to `t1`, requiring `t1` inside the grid.
    pub fn index_of(&self, t1: f64) -> Result<usize> {
        let h = self.h();
        let lo = self.t[0] - 0.5 * h.abs();
        let hi = self.t[self.t.len() - 1] + 0.5 * h.abs();
        if t1 < lo || t1 > hi {
            return Err(CoreError::OutOfRange(format!(
                "t1 = {t1} outside solved interval [{}, {}]",
                self.t[0],
                self.t[self.t.len() - 1]
            )));
        }
        Ok((((t1 - self.t[0]) / h).round() as usize).min(self.t.len() - 1))
    }

    /// Worst relative violation of rho^2 mu' = 1 over the interior grid,
    /// with mu' estimated by a five-point stencil (ensure the grid is fine
    /// enough that the O(h^4) stencil error is below the target).
    pub fn phase_law_residual(&self) -> f64 {
        let h = self.h();
        let mut worst = 0.0f64;
        for i in 2..self.t.len() - 2 {
            let mu_dot = (-self.mu[i + 2] + 8.0 * self.mu[i + 1] - 8.0 * self.mu[i - 1]
                + self.mu[i - 2])
                / (12.0 * h);
            worst = worst.max((self.rho[i] * self.rho[i] * mu_dot - 1.0).abs());
        }
        worst
    }

    /// First integral of the constant-frequency Ermakov equation,
    /// rho'^2 + w^2 rho^2 + rho^-2; constant when w is constant.
    pub fn conserved_quantity(&self, i: usize) -> f64 {
        let w = self.program.omega(self.t[i]);
        let r = self.rho[i];
        self.rho_dot[i] * self.rho_dot[i] + w * w * r * r + 1.0 / (r * r)
    }
}

/// Auxiliary amplitude and particular solution driven by the forcing.
#[derive(Clone, Debug)]
pub struct ClassicalTrajectory {
    pub t: Vec<f64>,
    pub zeta: Vec<Complex64>,
    pub u_p: Vec<f64>,
    pub u_p_dot: Vec<f64>,
}

/// Full classical solution u_c = a_c rho cos(mu + phi) + u_p on the grid.
#[derive(Clone, Debug)]
pub struct GeneralSolution {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
}

/// Adiabatic suppression amplitude and the derived energy measures.
#[derive(Clone, Debug)]
pub struct SuppressionResult {
    /// Xi(t1) = u_p'(t1) + i w(t1) u_p(t1), m/s
    pub xi: Complex64,
    /// reference (settled initial) frequency used for normalization
    pub omega0: f64,
    /// |Xi~/w0|^2 where the tilde divides by b/2; needs the transport
    /// distance, so general-forcing results leave it unset
    pub norm_sq: Option<f64>,
    /// W = m |Xi|^2 / 2, J
    pub energy_j: Option<f64>,
    /// mean transferred quanta
    pub quanta: Option<f64>,
    pub warning: Option<String>,
}

impl SuppressionResult {
    fn new(xi: Complex64, omega0: f64) -> Self {
        Self {
            xi,
            omega0,
            norm_sq: None,
            energy_j: None,
            quanta: None,
            warning: None,
        }
    }

    /// Attaches |Xi~/w0|^2 given the transport distance b.
    pub fn with_normalization(mut self, b: f64) -> Self {
        let scaled = self.xi.norm() / (0.5 * b * self.omega0);
        self.norm_sq = Some(scaled * scaled);
        self
    }

    /// Attaches W = m |Xi|^2 / 2.
    pub fn with_energy(mut self, mass: f64) -> Self {
        self.energy_j = Some(energy_transfer(self.xi, mass));
        self
    }

    /// Attaches the transferred-quanta count (needs the normalization).
    pub fn with_quanta(mut self, mass: f64, b: f64) -> Self {
        if self.norm_sq.is_none() {
            self = self.with_normalization(b);
        }
        self.quanta = Some(quanta_transferred(
            self.norm_sq.unwrap(),
            mass,
            b,
            self.omega0,
        ));
        self
    }
}

/// Integrates the coupled (rho, rho', mu) system from the standard initial
/// conditions rho(-t0) = w0^(-1/2), rho'(-t0) = 0, mu(-t0) = 0.
pub fn solve_ermakov(
    fp: &FrequencyProgram,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
) -> Result<ErmakovSolution> {
    let w0 = fp.omega(t_start);
    solve_ermakov_with_ic(fp, t_start, t_end, n_steps, w0.powf(-0.5), 0.0)
}

/// Same integration with caller-chosen initial rho, rho' (mu(t_start) = 0).
pub fn solve_ermakov_with_ic(
    fp: &FrequencyProgram,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    rho0: f64,
    rho_dot0: f64,
) -> Result<ErmakovSolution> {
    if n_steps < 100 {
        return Err(CoreError::InvalidParameter(format!(
            "n_steps must be >= 100, got {n_steps}"
        )));
    }
    if !(t_end > t_start) {
        return Err(CoreError::InvalidParameter(
            "t_end must exceed t_start".into(),
        ));
    }
    if rho0 <= 0.0 {
        return Err(CoreError::InvalidParameter("rho0 must be positive".into()));
    }
    let grid: Vec<f64> = (0..=n_steps)
        .map(|i| t_start + (t_end - t_start) * i as f64 / n_steps as f64)
        .collect();
    let rhs = |t: f64, y: &[f64; 3]| {
        let w = fp.omega(t);
        let rho = y[0];
        let inv2 = 1.0 / (rho * rho);
        [y[1], inv2 / rho - w * w * rho, inv2]
    };
    let states = integrate_to_grid(rhs, &grid, [rho0, rho_dot0, 0.0], &OdeOptions::default())?;
    let mut rho = Vec::with_capacity(states.len());
    let mut rho_dot = Vec::with_capacity(states.len());
    let mut mu = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        if !(s[0] > 1e-12 * rho0) {
            return Err(CoreError::Singularity { t: grid[i] });
        }
        rho.push(s[0]);
        rho_dot.push(s[1]);
        mu.push(s[2]);
    }
    Ok(ErmakovSolution {
        t: grid,
        rho,
        rho_dot,
        mu,
        program: fp.clone(),
    })
}

/// Closed-form constant-frequency Ermakov amplitude
/// rho = w0^(-1/2) sqrt(cosh d + sinh d sin(2 w0 t + theta)) and its time
/// derivative. `delta = 0` recovers the stationary solution.
pub fn constant_freq_rho(delta: f64, theta: f64, omega0: f64, t: f64) -> (f64, f64) {
    let phase = 2.0 * omega0 * t + theta;
    let g = delta.cosh() + delta.sinh() * phase.sin();
    let rho = g.sqrt() / omega0.sqrt();
    let rho_dot = omega0.sqrt() * delta.sinh() * phase.cos() / g.sqrt();
    (rho, rho_dot)
}

/// Two-correction adiabatic expansion of (rho, mu') around slow frequency
/// modulation:
/// rho ~ w^(-1/2) + w''/(8 w^(7/2)) - 3 w'^2/(16 w^(9/2)),
/// mu' ~ w - w''/(4 w^2) + 3 w'^2/(8 w^3).
pub fn adiabatic_rho_mu(fp: &FrequencyProgram, t: f64) -> Result<(f64, f64)> {
    let w = fp.omega(t);
    let (wd, wdd) = fp.omega_derivs(t)?;
    let rho = w.powf(-0.5) + wdd / (8.0 * w.powf(3.5)) - 3.0 / 16.0 * wd * wd / w.powf(4.5);
    let mu_dot = w - wdd / (4.0 * w * w) + 3.0 / 8.0 * wd * wd / (w * w * w);
    Ok((rho, mu_dot))
}

/// Particular solution by the causal Green's function:
/// zeta(t) = i e^(-i mu) Int e^(i mu') rho' f dt', u_p = rho Re zeta,
/// u_p' = Re[(rho' - i/rho) zeta].
pub fn greens_particular(es: &ErmakovSolution, f: &ForcingTerm) -> Result<ClassicalTrajectory> {
    let n = es.len();
    let h = es.h();
    let mut integrand = Vec::with_capacity(n);
    for i in 0..n {
        let fv = f.value(es.t[i]);
        if !fv.is_finite() {
            return Err(CoreError::InvalidForcing(format!(
                "f({}) is not finite",
                es.t[i]
            )));
        }
        integrand.push(Complex64::from_polar(es.rho[i] * fv, es.mu[i]));
    }
    let cumulative = cumulative_simpson(&integrand, h);
    let mut zeta = Vec::with_capacity(n);
    let mut u_p = Vec::with_capacity(n);
    let mut u_p_dot = Vec::with_capacity(n);
    for i in 0..n {
        let z = Complex64::i() * Complex64::from_polar(1.0, -es.mu[i]) * cumulative[i];
        let up = es.rho[i] * z.re;
        let updot = (Complex64::new(es.rho_dot[i], -1.0 / es.rho[i]) * z).re;
        zeta.push(z);
        u_p.push(up);
        u_p_dot.push(updot);
    }
    Ok(ClassicalTrajectory {
        t: es.t.clone(),
        zeta,
        u_p,
        u_p_dot,
    })
}

/// u_c = a_c rho cos(mu + phi) + u_p with the matching velocity.
pub fn general_solution(
    tr: &ClassicalTrajectory,
    es: &ErmakovSolution,
    a_c: f64,
    phi: f64,
) -> Result<GeneralSolution> {
    if tr.t.len() != es.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "trajectory grid ({}) vs solution grid ({})",
            tr.t.len(),
            es.len()
        )));
    }
    let n = es.len();
    let mut u = Vec::with_capacity(n);
    let mut u_dot = Vec::with_capacity(n);
    for i in 0..n {
        let arg = es.mu[i] + phi;
        u.push(a_c * es.rho[i] * arg.cos() + tr.u_p[i]);
        // rho mu' = 1/rho
        u_dot.push(a_c * (es.rho_dot[i] * arg.cos() - arg.sin() / es.rho[i]) + tr.u_p_dot[i]);
    }
    Ok(GeneralSolution {
        t: es.t.clone(),
        u,
        u_dot,
    })
}

/// Suppression amplitude for arbitrary frequency programs by direct
/// quadrature of the Green's-function kernel at readout time `t1`.
pub fn suppression_amplitude_general(
    es: &ErmakovSolution,
    f: &ForcingTerm,
    t1: f64,
) -> Result<SuppressionResult> {
    let i1 = es.index_of(t1)?;
    if i1 < 2 {
        return Err(CoreError::OutOfRange(
            "t1 too close to the start of the grid".into(),
        ));
    }
    let t1 = es.t[i1];
    let h = es.h();
    let rho1 = es.rho[i1];
    let rho_dot1 = es.rho_dot[i1];
    let mu1 = es.mu[i1];
    let w1 = es.program.omega(t1);
    let mut integrand = Vec::with_capacity(i1 + 1);
    let mut f_max = 0.0f64;
    for i in 0..=i1 {
        let fv = f.value(es.t[i]);
        f_max = f_max.max(fv.abs());
        let dmu = mu1 - es.mu[i];
        let kernel = Complex64::new(
            dmu.cos() / rho1 + rho_dot1 * dmu.sin(),
            w1 * rho1 * dmu.sin(),
        );
        integrand.push(kernel * es.rho[i] * fv);
    }
    let xi = simpson_uniform(&integrand, h);
    let mut result = SuppressionResult::new(xi, es.program.omega0());
    let f_t1 = f.value(t1).abs();
    if f_t1 > 1e-9 * f_max.max(1e-300) {
        result.warning = Some(format!(
            "readout at t1 = {t1} where f(t1) = {f_t1:.3e} has not vanished"
        ));
    }
    Ok(result)
}

/// Lowest-order adiabatic suppression amplitude,
/// Xi = sqrt(w(t1)) Int f(t') w(t')^(-1/2) e^(i dmu) dt' with
/// dmu = Int_t'^t1 w.
pub fn suppression_amplitude_first_order(
    fp: &FrequencyProgram,
    f: &ForcingTerm,
    t_start: f64,
    t1: f64,
    n_steps: usize,
) -> Result<SuppressionResult> {
    if n_steps < 100 {
        return Err(CoreError::InvalidParameter(format!(
            "n_steps must be >= 100, got {n_steps}"
        )));
    }
    if !(t1 > t_start) {
        return Err(CoreError::OutOfRange("t1 must exceed t_start".into()));
    }
    let h = (t1 - t_start) / n_steps as f64;
    let ts: Vec<f64> = (0..=n_steps).map(|i| t_start + i as f64 * h).collect();
    let omegas: Vec<f64> = ts.iter().map(|&t| fp.omega(t)).collect();
    if omegas.iter().any(|&w| !(w > 0.0)) {
        return Err(CoreError::InvalidParameter(
            "omega(t) must stay positive on the integration window".into(),
        ));
    }
    let phase = cumulative_simpson_real(&omegas, h);
    let phase1 = phase[n_steps];
    let mut integrand = Vec::with_capacity(n_steps + 1);
    let mut f_max = 0.0f64;
    for i in 0..=n_steps {
        let fv = f.value(ts[i]);
        f_max = f_max.max(fv.abs());
        integrand.push(Complex64::from_polar(
            fv / omegas[i].sqrt(),
            phase1 - phase[i],
        ));
    }
    let xi = simpson_uniform(&integrand, h) * omegas[n_steps].sqrt();
    let mut result = SuppressionResult::new(xi, fp.omega0());
    let f_t1 = f.value(t1).abs();
    if f_t1 > 1e-9 * f_max.max(1e-300) {
        result.warning = Some(format!(
            "readout at t1 = {t1} where f(t1) = {f_t1:.3e} has not vanished"
        ));
    }
    Ok(result)
}

/// Ideal-regime suppression amplitude (constant frequency, no residual
/// force): Xi(t1) = -e^(i w0 t1) Int e^(-i w0 t') q0''(t') dt' by adaptive
/// quadrature. The result carries the |Xi~/w0|^2 normalization.
pub fn suppression_amplitude_ideal(
    omega0: f64,
    p: &TransportProfile,
    t1: f64,
) -> Result<SuppressionResult> {
    if omega0 <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "omega0 must be positive, got {omega0}"
        )));
    }
    let t0 = p.t0();
    if t1 < -t0 {
        return Err(CoreError::OutOfRange(format!(
            "t1 = {t1} precedes the transport start -t0 = {}",
            -t0
        )));
    }
    // q0'' vanishes beyond t0, so clip the quadrature window
    let upper = t1.min(t0);
    let panels = ((upper + t0) * omega0 / PI).ceil().max(8.0) as usize;
    let integral = integrate_adaptive_complex(
        &|t| Complex64::from_polar(p.q0_deriv(t, 2), -omega0 * t),
        -t0,
        upper,
        1e-12,
        1e-300,
        panels,
    );
    let xi = -Complex64::from_polar(1.0, omega0 * t1) * integral;
    Ok(SuppressionResult::new(xi, omega0).with_normalization(p.b()))
}

/// Closed-form |Xi~/w0| for the sine transport, 2 cos(x) / (1 - (2x/pi)^2),
/// evaluated through pi sinc(pi/2 - x) / (1 + 2x/pi) so the removable
/// singularity at x = pi/2 needs no special casing.
pub fn analytic_sine_suppression(x: f64) -> f64 {
    (PI * sinc(FRAC_PI_2 - x) / (1.0 + 2.0 * x / PI)).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticErfMode {
    /// 2 e^(-y^2/16) Re Erf[2x/y + i y/4] / Erf[2x/y]
    Full,
    /// large-r limit 2 e^(-y^2/16)
    Asymptote,
    /// first-order correction around the asymptote
    Expansion,
}

/// Closed-form branches of |Xi~/w0| for the error-function transport,
/// x = w0 t0, y = w0 tp. `Full` and `Expansion` neglect the contribution of
/// the truncated endpoint velocity (see
/// [`analytic_erf_suppression_exact`] for the untruncated closed form).
pub fn analytic_erf_suppression(x: f64, y: f64, mode: AnalyticErfMode) -> Result<f64> {
    if x <= 0.0 || y <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "x and y must be positive, got x = {x}, y = {y}"
        )));
    }
    let r = 2.0 * x / y;
    let b = y / 4.0;
    match mode {
        AnalyticErfMode::Asymptote => Ok(2.0 * (-b * b).exp()),
        AnalyticErfMode::Full => {
            if r <= 1.0 {
                return Err(CoreError::OutOfRange(format!(
                    "full closed form needs 2x/y > 1, got {r}"
                )));
            }
            let re_erf = erf_complex(Complex64::new(r, b)).re;
            Ok((2.0 * (-b * b).exp() * re_erf / erf(r)).abs())
        }
        AnalyticErfMode::Expansion => {
            let correction = (-r * r).exp() / (PI.sqrt() * (r * r + b * b).sqrt())
                * (2.0 * r * b + (b / r).atan()).cos();
            Ok((2.0 * ((-b * b).exp() - correction) / erf(r)).abs())
        }
    }
}

/// |Xi~/w0| for the truncated, renormalized erf transport without dropping
/// the endpoint-velocity term: carrying the finite limits through the
/// quadrature in closed form gives
/// (2/Erf r) | e^(-y^2/16) Re Erf(r + i y/4) - 4 e^(-r^2) sin(x) / (sqrt(pi) y) |.
pub fn analytic_erf_suppression_exact(x: f64, y: f64) -> Result<f64> {
    if x <= 0.0 || y <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "x and y must be positive, got x = {x}, y = {y}"
        )));
    }
    let r = 2.0 * x / y;
    let b = y / 4.0;
    let main = (-b * b).exp() * erf_complex(Complex64::new(r, b)).re;
    let truncation = 4.0 / (PI.sqrt() * y) * (-r * r).exp() * x.sin();
    Ok(2.0 * (main - truncation).abs() / erf(r))
}

/// W = m |Xi|^2 / 2, J.
pub fn energy_transfer(xi: Complex64, mass: f64) -> f64 {
    0.5 * mass * xi.norm_sqr()
}

/// Mean vibrational quanta gamma = m b^2 w0 |Xi~/w0|^2 / (8 hbar).
pub fn quanta_transferred(norm_sq: f64, mass: f64, b: f64, omega0: f64) -> f64 {
    mass * b * b * omega0 * norm_sq / (8.0 * HBAR)
}

/// Partial sum of the endpoint asymptotic expansion of
/// I(lambda) = Int_a^b e^(-i lambda tau) g(tau) dtau:
/// sum_n (-1)^n/(-i lambda)^(n+1) [g^(n)(b) e^(-i lambda b) - g^(n)(a) e^(-i lambda a)].
/// `derivs_a[n]` / `derivs_b[n]` hold g^(n) at the endpoints, n = 0..=order.
pub fn ht_expansion(
    derivs_a: &[f64],
    derivs_b: &[f64],
    lambda: f64,
    a: f64,
    b: f64,
    order: usize,
) -> Result<Complex64> {
    if lambda <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if derivs_a.len() <= order || derivs_b.len() <= order {
        return Err(CoreError::DerivativeOrder {
            requested: order,
            available: derivs_a.len().min(derivs_b.len()).saturating_sub(1),
        });
    }
    let phase_a = Complex64::from_polar(1.0, -lambda * a);
    let phase_b = Complex64::from_polar(1.0, -lambda * b);
    let inv = (Complex64::new(0.0, -lambda)).inv();
    let mut factor = inv; // 1/(-i lambda)^(n+1)
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    for n in 0..=order {
        sum += factor * sign * (derivs_b[n] * phase_b - derivs_a[n] * phase_a);
        factor *= inv;
        sign = -sign;
    }
    Ok(sum)
}

/// High-frequency/adiabatic partial sum of |Xi~/w0| from the start-point
/// derivatives of the normalized shape theta(tau) = q~0(t0 tau):
/// 2 sum_n theta^(n+2)(-1) (-1)^n cos(x + n pi/2) / x^(n+2), x = w0 t0.
pub fn asymptotic_suppression(p: &TransportProfile, x: f64, order: usize) -> Result<f64> {
    if x <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "x must be positive, got {x}"
        )));
    }
    if p.max_order() < order + 2 {
        return Err(CoreError::DerivativeOrder {
            requested: order + 2,
            available: p.max_order(),
        });
    }
    let t0 = p.t0();
    let mut sum = 0.0;
    let mut sign = 1.0;
    for n in 0..=order {
        // dimensionless tau-derivative at tau = -1
        let theta_deriv = t0.powi(n as i32 + 2) * p.qtilde_deriv(-t0, n + 2);
        sum += 2.0 * theta_deriv * sign * (x + n as f64 * FRAC_PI_2).cos() / x.powi(n as i32 + 2);
        sign = -sign;
    }
    Ok(sum.abs())
}

/// Envelope of the leading asymptotic term, 2 |theta''(-1)| / x^2.
pub fn asymptotic_leading_envelope(p: &TransportProfile, x: f64) -> f64 {
    let t0 = p.t0();
    2.0 * (t0 * t0 * p.qtilde_deriv(-t0, 2)).abs() / (x * x)
}

/// Approximate lag trajectory in the moving frame, valid in the
/// high-frequency/adiabatic limit:
/// u_c(t) = -sum_n (1/w0^(n+2)) [cos(n pi/2) q0^(n+2)(t)
///          - cos(w0 (t + t0) - n pi/2) q0^(n+2)(-t0)].
pub fn approximate_trajectory(
    p: &TransportProfile,
    omega0: f64,
    t: f64,
    order: usize,
) -> Result<f64> {
    if p.max_order() < order + 2 {
        return Err(CoreError::DerivativeOrder {
            requested: order + 2,
            available: p.max_order(),
        });
    }
    let t0 = p.t0();
    let mut sum = 0.0;
    for n in 0..=order {
        let np = n as f64 * FRAC_PI_2;
        let local = np.cos() * p.q0_deriv(t, n + 2);
        let memory = (omega0 * (t + t0) - np).cos() * p.q0_deriv(-t0, n + 2);
        sum -= (local - memory) / omega0.powi(n as i32 + 2);
    }
    Ok(sum)
}

/// Splits |Xi(t0)|^2 into the independent antisymmetric and symmetric
/// contributions of the transport acceleration over the symmetric interval:
/// |Int sin(w0 t) qA''|^2 and |Int cos(w0 t) qS''|^2.
pub fn symmetry_split_suppression(p: &TransportProfile, omega0: f64) -> (f64, f64) {
    let t0 = p.t0();
    let qddot = |t: f64| p.q0_deriv(t, 2);
    symmetry_split_from_qddot(&qddot, t0, omega0)
}

/// Same decomposition for an arbitrary acceleration q0''(t) on [-t0, t0].
pub fn symmetry_split_from_qddot<F: Fn(f64) -> f64>(
    qddot: &F,
    t0: f64,
    omega0: f64,
) -> (f64, f64) {
    let panels = (2.0 * t0 * omega0 / PI).ceil().max(8.0) as usize;
    let anti = integrate_adaptive_complex(
        &|t| Complex64::new((omega0 * t).sin() * 0.5 * (qddot(t) - qddot(-t)), 0.0),
        -t0,
        t0,
        1e-13,
        1e-300,
        panels,
    )
    .re;
    let sym = integrate_adaptive_complex(
        &|t| Complex64::new((omega0 * t).cos() * 0.5 * (qddot(t) + qddot(-t)), 0.0),
        -t0,
        t0,
        1e-13,
        1e-300,
        panels,
    )
    .re;
    (anti * anti, sym * sym)
}

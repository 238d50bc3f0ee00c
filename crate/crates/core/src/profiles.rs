//! Normalized transport functions q0(t): the prescribed trajectory of the
//! harmonic-well minimum during shuttling, with analytic derivatives.
//!
//! Profiles store the half-duration `t0`, the transport distance `b`, and a
//! normalized shape `qt(t)` running from -1 at -t0 to +1 at +t0; the
//! physical well position is `q0(t) = (b/2) qt(t)`. All times are seconds;
//! dimensionless combinations (x = omega0*t0, y = omega0*tp, tau = t/t0) are
//! formed at call sites.

use crate::error::{CoreError, Result};
use crate::special::{erf, hermite};
use std::io::BufRead;

const FRAC_2_SQRT_PI: f64 = 1.128_379_167_095_512_57;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProfileKind {
    Sine,
    Erf,
    Tabulated,
}

#[derive(Clone, Debug)]
enum Shape {
    Sine,
    Erf {
        /// slope time, s
        tp: f64,
        /// erf(2 t0 / tp), the renormalization constant
        norm: f64,
    },
    Tabulated(Tabulated),
}

/// Transport profile q0(t) on [-t0, t0].
#[derive(Clone, Debug)]
pub struct TransportProfile {
    shape: Shape,
    t0: f64,
    b: f64,
}

/// Value and normalized derivatives of a profile at one instant.
#[derive(Clone, Debug)]
pub struct ProfileSample {
    pub t: f64,
    /// q~0(t), dimensionless
    pub value: f64,
    /// derivatives\[k\] = d^(k+1) q~0 / dt^(k+1), units 1/s^(k+1)
    pub derivatives: Vec<f64>,
}

impl TransportProfile {
    /// Sine transport q~0(t) = sin(pi t / 2 t0).
    pub fn sine(t0: f64, b: f64) -> Result<Self> {
        if t0 <= 0.0 || b <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "sine profile needs t0 > 0 and b > 0, got t0 = {t0}, b = {b}"
            )));
        }
        Ok(Self {
            shape: Shape::Sine,
            t0,
            b,
        })
    }

    /// Renormalized error-function transport q~0(t) = erf(2t/tp)/erf(2t0/tp).
    pub fn erf(t0: f64, tp: f64, b: f64) -> Result<Self> {
        if t0 <= 0.0 || b <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "erf profile needs t0 > 0 and b > 0, got t0 = {t0}, b = {b}"
            )));
        }
        if tp <= 0.0 || tp >= 2.0 * t0 {
            return Err(CoreError::InvalidParameter(format!(
                "erf profile needs 0 < tp < 2 t0, got tp = {tp}, t0 = {t0}"
            )));
        }
        let norm = erf(2.0 * t0 / tp);
        Ok(Self {
            shape: Shape::Erf { tp, norm },
            t0,
            b,
        })
    }

    /// Tabulated profile from uniform (t, q~0) samples spanning [-t0, t0].
    ///
    /// Values interpolate with a natural cubic spline; first and second
    /// derivatives come from second-order central differences at the nodes.
    pub fn tabulated(ts: &[f64], qs: &[f64], b: f64) -> Result<Self> {
        if b <= 0.0 {
            return Err(CoreError::InvalidParameter(format!("b must be > 0, got {b}")));
        }
        if ts.len() != qs.len() {
            return Err(CoreError::InvalidGrid(format!(
                "{} times vs {} values",
                ts.len(),
                qs.len()
            )));
        }
        if ts.len() < 9 {
            return Err(CoreError::InvalidGrid(format!(
                "tabulated profile needs >= 9 points, got {}",
                ts.len()
            )));
        }
        let n = ts.len();
        let t0 = ts[n - 1];
        if !(t0 > 0.0) || (ts[0] + t0).abs() > 1e-9 * t0 {
            return Err(CoreError::InvalidGrid(
                "tabulated grid must span [-t0, t0]".into(),
            ));
        }
        let h = (ts[n - 1] - ts[0]) / (n as f64 - 1.0);
        for (i, &t) in ts.iter().enumerate() {
            let expect = ts[0] + i as f64 * h;
            if (t - expect).abs() > 1e-9 * t0 {
                return Err(CoreError::InvalidGrid(format!(
                    "grid must be uniform; point {i} is {t}, expected {expect}"
                )));
            }
        }
        if qs.iter().any(|q| !q.is_finite()) {
            return Err(CoreError::InvalidGrid("non-finite sample value".into()));
        }
        Ok(Self {
            shape: Shape::Tabulated(Tabulated::build(h, qs.to_vec())),
            t0,
            b,
        })
    }

    /// Loads a tabulated profile from two-column CSV `t_seconds,q_tilde`.
    /// The header line is required; `b` is the transport distance in meters.
    pub fn from_csv<R: BufRead>(reader: R, b: f64) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty CSV".into()))??;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "t_seconds" || cols[1] != "q_tilde" {
            return Err(CoreError::Parse(format!(
                "expected header 't_seconds,q_tilde', got '{header}'"
            )));
        }
        let mut ts = Vec::new();
        let mut qs = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 2 {
                return Err(CoreError::Parse(format!(
                    "line {}: expected two columns",
                    lineno + 2
                )));
            }
            let t: f64 = fields[0]
                .parse()
                .map_err(|e| CoreError::Parse(format!("line {}: {e}", lineno + 2)))?;
            let q: f64 = fields[1]
                .parse()
                .map_err(|e| CoreError::Parse(format!("line {}: {e}", lineno + 2)))?;
            ts.push(t);
            qs.push(q);
        }
        Self::tabulated(&ts, &qs, b)
    }

    pub fn kind(&self) -> ProfileKind {
        match self.shape {
            Shape::Sine => ProfileKind::Sine,
            Shape::Erf { .. } => ProfileKind::Erf,
            Shape::Tabulated(_) => ProfileKind::Tabulated,
        }
    }

    /// Half-duration of the transport, s.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Transport distance, m.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Slope time tp (erf kind only).
    pub fn tp(&self) -> Option<f64> {
        match self.shape {
            Shape::Erf { tp, .. } => Some(tp),
            _ => None,
        }
    }

    /// Highest derivative order available.
    pub fn max_order(&self) -> usize {
        match self.shape {
            Shape::Tabulated(_) => 2,
            _ => usize::MAX,
        }
    }

    /// Normalized residual velocity |q~0'(t0)| * t0, a truncation diagnostic.
    /// Nonzero for the erf kind, whose tails are cut at +-t0.
    pub fn endpoint_velocity_diagnostic(&self) -> f64 {
        self.qtilde_deriv(self.t0, 1) * self.t0
    }

    /// q~0(t), no range check (callers keep t inside [-t0, t0]).
    pub fn qtilde(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Sine => (std::f64::consts::FRAC_PI_2 * t / self.t0).sin(),
            Shape::Erf { tp, norm } => erf(2.0 * t / tp) / norm,
            Shape::Tabulated(tab) => tab.value(t, self.t0),
        }
    }

    /// d^order q~0 / dt^order; order 0 is the value itself.
    pub fn qtilde_deriv(&self, t: f64, order: usize) -> f64 {
        if order == 0 {
            return self.qtilde(t);
        }
        match &self.shape {
            Shape::Sine => {
                let k = std::f64::consts::FRAC_PI_2 / self.t0;
                k.powi(order as i32)
                    * (k * t + order as f64 * std::f64::consts::FRAC_PI_2).sin()
            }
            Shape::Erf { tp, norm } => {
                // d^n/dt^n erf(st) = 2/sqrt(pi) s^n (-1)^(n-1) H_(n-1)(st) e^(-(st)^2)
                let s = 2.0 / tp;
                let u = s * t;
                let sign = if order % 2 == 0 { -1.0 } else { 1.0 };
                FRAC_2_SQRT_PI * s.powi(order as i32) * sign * hermite(order - 1, u)
                    * (-u * u).exp()
                    / norm
            }
            Shape::Tabulated(tab) => tab.deriv(t, self.t0, order),
        }
    }

    /// Physical well position q0(t) = (b/2) q~0(t), m.
    pub fn q0(&self, t: f64) -> f64 {
        0.5 * self.b * self.qtilde(t)
    }

    /// d^order q0 / dt^order, m/s^order.
    pub fn q0_deriv(&self, t: f64, order: usize) -> f64 {
        0.5 * self.b * self.qtilde_deriv(t, order)
    }

    /// Value plus normalized derivatives up to `max_order`.
    pub fn sample(&self, t: f64, max_order: usize) -> Result<ProfileSample> {
        let tol = 1e-12 * self.t0;
        if t < -self.t0 - tol || t > self.t0 + tol {
            return Err(CoreError::OutOfRange(format!(
                "t = {t} outside [-{0}, {0}]",
                self.t0
            )));
        }
        if max_order > self.max_order() {
            return Err(CoreError::DerivativeOrder {
                requested: max_order,
                available: self.max_order(),
            });
        }
        let t = t.clamp(-self.t0, self.t0);
        let derivatives = (1..=max_order)
            .map(|n| self.qtilde_deriv(t, n))
            .collect();
        Ok(ProfileSample {
            t,
            value: self.qtilde(t),
            derivatives,
        })
    }
}

/// Splits samples on a symmetric grid into symmetric and antisymmetric
/// parts, qS(t) = (q(t)+q(-t))/2 and qA(t) = (q(t)-q(-t))/2.
/// Their sum reconstructs the input exactly.
#[allow(clippy::type_complexity)]
pub fn decompose_symmetry(
    samples: &[(f64, f64)],
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let n = samples.len();
    if n < 2 {
        return Err(CoreError::InvalidGrid("need at least two samples".into()));
    }
    let t_max = samples[n - 1].0.abs().max(samples[0].0.abs());
    for i in 0..n {
        let (t_lo, _) = samples[i];
        let (t_hi, _) = samples[n - 1 - i];
        if (t_lo + t_hi).abs() > 1e-9 * t_max {
            return Err(CoreError::InvalidGrid(format!(
                "grid not symmetric about t = 0: t[{i}] = {t_lo}, t[{}] = {t_hi}",
                n - 1 - i
            )));
        }
    }
    let mut sym = Vec::with_capacity(n);
    let mut anti = Vec::with_capacity(n);
    for i in 0..n {
        let (t, q) = samples[i];
        let (_, q_mirror) = samples[n - 1 - i];
        sym.push((t, 0.5 * (q + q_mirror)));
        anti.push((t, 0.5 * (q - q_mirror)));
    }
    Ok((sym, anti))
}

#[derive(Clone, Debug)]
struct Tabulated {
    h: f64,
    q: Vec<f64>,
    /// natural-spline second derivatives at the nodes
    spline_m: Vec<f64>,
    /// central-difference first and second derivatives at the nodes
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Tabulated {
    fn build(h: f64, q: Vec<f64>) -> Self {
        let n = q.len();
        let spline_m = natural_spline_second_derivs(&q, h);
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for i in 1..n - 1 {
            d1[i] = (q[i + 1] - q[i - 1]) / (2.0 * h);
            d2[i] = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / (h * h);
        }
        // second-order one-sided formulas at the ends
        d1[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h);
        d1[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h);
        d2[0] = (2.0 * q[0] - 5.0 * q[1] + 4.0 * q[2] - q[3]) / (h * h);
        d2[n - 1] = (2.0 * q[n - 1] - 5.0 * q[n - 2] + 4.0 * q[n - 3] - q[n - 4]) / (h * h);
        Self {
            h,
            q,
            spline_m,
            d1,
            d2,
        }
    }

    fn locate(&self, t: f64, t0: f64) -> (usize, f64) {
        let n = self.q.len();
        let pos = (t + t0) / self.h;
        let i = (pos.floor() as isize).clamp(0, n as isize - 2) as usize;
        (i, pos - i as f64)
    }

    fn value(&self, t: f64, t0: f64) -> f64 {
        let (i, s) = self.locate(t, t0);
        let (a, b) = (1.0 - s, s);
        let h2 = self.h * self.h / 6.0;
        a * self.q[i]
            + b * self.q[i + 1]
            + ((a * a * a - a) * self.spline_m[i] + (b * b * b - b) * self.spline_m[i + 1]) * h2
    }

    fn deriv(&self, t: f64, t0: f64, order: usize) -> f64 {
        let (i, s) = self.locate(t, t0);
        let table = match order {
            1 => &self.d1,
            2 => &self.d2,
            _ => panic!("tabulated profiles provide derivatives up to order 2"),
        };
        (1.0 - s) * table[i] + s * table[i + 1]
    }
}

/// Second derivatives of the natural cubic spline through uniform samples
/// (Thomas algorithm on the standard tridiagonal system).
fn natural_spline_second_derivs(q: &[f64], h: f64) -> Vec<f64> {
    let n = q.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut diag = vec![4.0; k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        rhs[i] = 6.0 * (q[i + 2] - 2.0 * q[i + 1] + q[i]) / (h * h);
    }
    for i in 1..k {
        let w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (1..k).rev() {
        m[i] = (rhs[i - 1] - m[i + 1]) / diag[i - 1];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn sine_spot_values() {
        let p = TransportProfile::sine(1.0, 1.0).unwrap();
        let s = p.sample(0.0, 2).unwrap();
        assert_eq!(s.value, 0.0);
        assert_relative_eq!(s.derivatives[0], FRAC_PI_2, max_relative = 1e-14);
        assert!(s.derivatives[1].abs() < 1e-14);

        let end = p.sample(1.0, 2).unwrap();
        assert_relative_eq!(end.value, 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            end.derivatives[1],
            -FRAC_PI_2 * FRAC_PI_2,
            max_relative = 1e-13
        );

        assert_relative_eq!(p.qtilde(0.5), 0.7071067811865476, max_relative = 1e-12);
        assert_relative_eq!(p.qtilde(-0.5), -0.7071067811865476, max_relative = 1e-12);
    }

    #[test]
    fn sine_rejects_bad_parameters() {
        assert!(TransportProfile::sine(0.0, 1.0).is_err());
        assert!(TransportProfile::sine(1.0, -2.0).is_err());
    }

    #[test]
    fn erf_spot_values() {
        let p = TransportProfile::erf(1.5, 1.0, 1.0).unwrap();
        assert_eq!(p.qtilde(0.0), 0.0);
        assert_relative_eq!(p.qtilde(1.5), 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.qtilde(-1.5), -1.0, epsilon = 1e-15);
        // Erf(1)/Erf(3) from the independent series oracle
        assert_relative_eq!(p.qtilde(0.5), 0.84271940904029092, max_relative = 1e-12);

        let s = p.sample(0.0, 2).unwrap();
        assert!(s.derivatives[0] > 0.0);
        assert!(s.derivatives[1].abs() < 1e-14);
    }

    #[test]
    fn erf_requires_narrow_slope_time() {
        assert!(TransportProfile::erf(1.0, 2.0, 1.0).is_err());
        assert!(TransportProfile::erf(1.0, 2.5, 1.0).is_err());
        assert!(TransportProfile::erf(1.0, 1.9, 1.0).is_ok());
    }

    #[test]
    fn endpoint_normalization_within_1e12() {
        let sine = TransportProfile::sine(0.37, 2.0).unwrap();
        let erf = TransportProfile::erf(0.37, 0.21, 2.0).unwrap();
        for p in [&sine, &erf] {
            assert!((p.qtilde(p.t0()) - 1.0).abs() <= 1e-12);
            assert!((p.qtilde(-p.t0()) + 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn antisymmetry_of_analytic_kinds() {
        let sine = TransportProfile::sine(1.3, 1.0).unwrap();
        let erf = TransportProfile::erf(1.3, 0.8, 1.0).unwrap();
        for p in [&sine, &erf] {
            for &t in &[0.1, 0.5, 0.9, 1.25] {
                assert_relative_eq!(p.qtilde(-t), -p.qtilde(t), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn sample_out_of_range() {
        let p = TransportProfile::sine(1.0, 1.0).unwrap();
        assert!(p.sample(1.5, 1).is_err());
        assert!(p.sample(-1.0000001, 1).is_err());
    }

    #[test]
    fn finite_differences_confirm_analytic_derivatives() {
        // central differences converge at O(h^2): halving h shrinks the
        // error by about 4x toward the analytic value
        let sine = TransportProfile::sine(1.0, 1.0).unwrap();
        let erf = TransportProfile::erf(1.0, 0.6, 1.0).unwrap();
        for p in [&sine, &erf] {
            for &t in &[0.2, 0.55] {
                for order in [1usize, 2] {
                    let exact = p.qtilde_deriv(t, order);
                    let fd = |h: f64| match order {
                        1 => (p.qtilde(t + h) - p.qtilde(t - h)) / (2.0 * h),
                        _ => (p.qtilde(t + h) - 2.0 * p.qtilde(t) + p.qtilde(t - h)) / (h * h),
                    };
                    let e1 = (fd(1e-3) - exact).abs();
                    let e2 = (fd(5e-4) - exact).abs();
                    assert!(e1 < 1e-4, "order {order} at t={t}: fd error {e1}");
                    assert!(
                        e2 < 0.35 * e1 + 1e-12,
                        "no O(h^2) convergence: {e1} -> {e2}"
                    );
                }
            }
        }
    }

    #[test]
    fn tabulated_tracks_analytic_sine() {
        let t0 = 1.0;
        let analytic = TransportProfile::sine(t0, 1.0).unwrap();
        let n = 2001;
        let ts: Vec<f64> = (0..n)
            .map(|i| -t0 + 2.0 * t0 * i as f64 / (n - 1) as f64)
            .collect();
        let qs: Vec<f64> = ts.iter().map(|&t| analytic.qtilde(t)).collect();
        let tab = TransportProfile::tabulated(&ts, &qs, 1.0).unwrap();
        let t = 0.3 * t0;
        assert!((tab.qtilde(t) - analytic.qtilde(t)).abs() < 1e-6);
        assert!((tab.qtilde_deriv(t, 1) - analytic.qtilde_deriv(t, 1)).abs() < 1e-5);
        assert!((tab.qtilde_deriv(t, 2) - analytic.qtilde_deriv(t, 2)).abs() < 1e-4);
        assert!(tab.sample(t, 3).is_err());
        assert_eq!(tab.max_order(), 2);
    }

    #[test]
    fn tabulated_validation() {
        let ts: Vec<f64> = (0..5).map(|i| -1.0 + 0.5 * i as f64).collect();
        let qs = vec![0.0; 5];
        assert!(TransportProfile::tabulated(&ts, &qs, 1.0).is_err()); // < 9 pts
        let ts: Vec<f64> = (0..9).map(|i| 0.1 * i as f64).collect();
        let qs = vec![0.0; 9];
        assert!(TransportProfile::tabulated(&ts, &qs, 1.0).is_err()); // asymmetric
    }

    #[test]
    fn csv_round_trip() {
        let t0 = 2.0;
        let src = TransportProfile::sine(t0, 1.0).unwrap();
        let n = 101;
        let mut csv = String::from("t_seconds,q_tilde\n");
        for i in 0..n {
            let t = -t0 + 2.0 * t0 * i as f64 / (n - 1) as f64;
            csv.push_str(&format!("{:.17e},{:.17e}\n", t, src.qtilde(t)));
        }
        let p = TransportProfile::from_csv(csv.as_bytes(), 1.0).unwrap();
        assert_eq!(p.kind(), ProfileKind::Tabulated);
        assert!((p.qtilde(0.77) - src.qtilde(0.77)).abs() < 1e-5);

        let missing_header = "0.0,0.0\n0.1,0.1\n";
        assert!(TransportProfile::from_csv(missing_header.as_bytes(), 1.0).is_err());
    }

    #[test]
    fn symmetry_decomposition() {
        let n = 41;
        let grid: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();

        // pure sine: symmetric part vanishes
        let p = TransportProfile::sine(1.0, 1.0).unwrap();
        let samples: Vec<(f64, f64)> = grid.iter().map(|&t| (t, p.qtilde(t))).collect();
        let (sym, anti) = decompose_symmetry(&samples).unwrap();
        for ((_, s), ((_, a), (_, q))) in sym.iter().zip(anti.iter().zip(&samples)) {
            assert!(s.abs() < 1e-15);
            assert_eq!(s + a, *q);
        }

        // constant c: all symmetric
        let samples: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 3.25)).collect();
        let (sym, anti) = decompose_symmetry(&samples).unwrap();
        assert!(sym.iter().all(|&(_, s)| (s - 3.25).abs() < 1e-15));
        assert!(anti.iter().all(|&(_, a)| a.abs() < 1e-15));

        // t + t^2 splits into t and t^2
        let samples: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t + t * t)).collect();
        let (sym, anti) = decompose_symmetry(&samples).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            assert_relative_eq!(anti[i].1, t, epsilon = 1e-15);
            assert_relative_eq!(sym[i].1, t * t, epsilon = 1e-15);
        }

        // asymmetric grid is rejected
        let bad = [(0.0, 1.0), (0.5, 2.0), (0.7, 1.0)];
        assert!(decompose_symmetry(&bad).is_err());
    }

    #[test]
    fn truncated_erf_keeps_nonzero_endpoint_velocity() {
        let p = TransportProfile::erf(1.0, 0.9, 1.0).unwrap();
        let diag = p.endpoint_velocity_diagnostic();
        assert!(diag > 0.0, "diagnostic should report the residual slope");
        // narrower slope time means smaller endpoint velocity
        let narrow = TransportProfile::erf(1.0, 0.4, 1.0).unwrap();
        assert!(narrow.endpoint_velocity_diagnostic() < diag);
    }

    #[test]
    fn sine_derivative_ladder_is_consistent() {
        // d/dt of order n should match order n+1 by finite differences
        let p = TransportProfile::sine(0.8, 1.0).unwrap();
        let t = 0.31;
        let h = 1e-5;
        for order in 1..6 {
            let fd = (p.qtilde_deriv(t + h, order) - p.qtilde_deriv(t - h, order)) / (2.0 * h);
            assert_relative_eq!(fd, p.qtilde_deriv(t, order + 1), max_relative = 1e-6);
        }
        // same ladder for the erf kind, which exercises the Hermite recurrence
        let p = TransportProfile::erf(0.8, 0.5, 1.0).unwrap();
        for order in 1..6 {
            let fd = (p.qtilde_deriv(t + h, order) - p.qtilde_deriv(t - h, order)) / (2.0 * h);
            assert_relative_eq!(fd, p.qtilde_deriv(t, order + 1), max_relative = 1e-5);
        }
    }

    #[test]
    fn physical_position_scales_with_distance() {
        let p = TransportProfile::sine(1.0, 4e-4).unwrap();
        assert_relative_eq!(p.q0(1.0), 2e-4, max_relative = 1e-14);
        assert_relative_eq!(p.q0(-1.0), -2e-4, max_relative = 1e-14);
        assert_relative_eq!(p.q0_deriv(0.0, 1), 2e-4 * PI / 2.0, max_relative = 1e-14);
    }
}

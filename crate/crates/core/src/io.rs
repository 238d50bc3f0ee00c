//! Deterministic CSV emission: fixed column order and 17-significant-digit
//! floats, so identical inputs produce byte-identical files.

use crate::error::Result;
use crate::optimizer::{PerturbationTrace, WaveformSolution};
use crate::quantum::{DispersionTrace, TransitionTable};
use std::io::Write;

/// Round-trip-exact float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One suppression-scan row: x/2pi, numeric and closed-form |Xi~/w0|^2, gamma.
pub fn write_suppression_row<W: Write>(
    out: &mut W,
    x_over_2pi: f64,
    norm_sq_numeric: f64,
    norm_sq_closed_form: f64,
    gamma: f64,
) -> Result<()> {
    writeln!(
        out,
        "{},{},{},{}",
        fmt_f64(x_over_2pi),
        fmt_f64(norm_sq_numeric),
        fmt_f64(norm_sq_closed_form),
        fmt_f64(gamma)
    )?;
    Ok(())
}

pub const SUPPRESSION_HEADER: &str = "x_over_2pi,norm_sq_numeric,norm_sq_closed_form,gamma";

/// Generic suppression-result row (x/2pi, |Xi~/w0|^2, gamma, W).
pub fn write_result_row<W: Write>(
    out: &mut W,
    x_over_2pi: f64,
    norm_sq: f64,
    gamma: f64,
    w_joules: f64,
) -> Result<()> {
    writeln!(
        out,
        "{},{},{},{}",
        fmt_f64(x_over_2pi),
        fmt_f64(norm_sq),
        fmt_f64(gamma),
        fmt_f64(w_joules)
    )?;
    Ok(())
}

pub const RESULT_HEADER: &str = "x_over_2pi,norm_sq,gamma,w_joules";

/// Waveform CSV: t/T, q0^, the amplitudes a_1..a_n, and the offset.
pub fn write_waveforms<W: Write>(out: &mut W, ws: &WaveformSolution) -> Result<()> {
    write!(out, "t_over_period,q0_hat")?;
    for m in 1..=ws.n_el {
        write!(out, ",a_{m}")?;
    }
    writeln!(out, ",phi0_volts")?;
    for k in 0..ws.t_over_period.len() {
        write!(
            out,
            "{},{}",
            fmt_f64(ws.t_over_period[k]),
            fmt_f64(ws.q0_hat[k])
        )?;
        for m in 0..ws.n_el {
            write!(out, ",{}", fmt_f64(ws.amplitudes[k][m]))?;
        }
        writeln!(out, ",{}", fmt_f64(ws.phi0_volts[k]))?;
    }
    Ok(())
}

/// Perturbation CSV: t/T, omega(q0)/w0, -a_res/w0^2 and q0''/w0^2 (both
/// normalized to ion-height units).
pub fn write_perturbations<W: Write>(out: &mut W, tr: &PerturbationTrace) -> Result<()> {
    writeln!(out, "t_over_period,omega_ratio,a_res_norm,qddot_norm")?;
    for k in 0..tr.t_over_period.len() {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(tr.t_over_period[k]),
            fmt_f64(tr.omega_ratio[k]),
            fmt_f64(tr.a_res_norm[k]),
            fmt_f64(tr.qddot_norm[k])
        )?;
    }
    Ok(())
}

/// Transition-table CSV rows (m, n, P_mn).
pub fn write_transition_table<W: Write>(out: &mut W, table: &TransitionTable) -> Result<()> {
    writeln!(out, "m,n,p")?;
    for m in 0..=table.cutoff {
        for n in 0..=table.cutoff {
            writeln!(out, "{m},{n},{}", fmt_f64(table.p[m][n]))?;
        }
    }
    Ok(())
}

/// Dispersion-trace CSV (t, <dq^2>, <dp^2>, product).
pub fn write_dispersions<W: Write>(out: &mut W, d: &DispersionTrace) -> Result<()> {
    writeln!(
        out,
        "t_seconds,dq2_m2,dp2_kg2m2_s2,uncertainty_product_j2s2"
    )?;
    for i in 0..d.t.len() {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(d.t[i]),
            fmt_f64(d.dq2[i]),
            fmt_f64(d.dp2[i]),
            fmt_f64(d.uncertainty_product[i])
        )?;
    }
    Ok(())
}

/// Potential-scan CSV (x^, phi in volts).
pub fn write_potential_scan<W: Write>(out: &mut W, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "x_hat,phi_volts")?;
    for &(x, phi) in rows {
        writeln!(out, "{},{}", fmt_f64(x), fmt_f64(phi))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[
            0.0,
            1.0,
            -3.5,
            std::f64::consts::PI,
            1.2345678901234567e-300,
            6.02e23,
            -1.7976931348623157e308,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s} -> {back}");
        }
    }

    #[test]
    fn rows_are_deterministic() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_suppression_row(&mut a, 0.1, 1e-8, 1.0000000001e-8, 0.53).unwrap();
        write_suppression_row(&mut b, 0.1, 1e-8, 1.0000000001e-8, 0.53).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|&&c| c == b',').count(), 3);
    }
}

//! Quadrature: Gauss-Legendre rules (fixed order and adaptive bisection)
//! for callable integrands and composite Simpson rules for tabulated grids.

use num_complex::Complex64;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre recurrence and cached per
/// order; accurate to machine precision for the orders used here.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<Vec<Option<&'static (Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    assert!(n >= 2 && n <= 256, "unsupported Gauss-Legendre order {n}");
    let cache = CACHE.get_or_init(|| Mutex::new(vec![None; 257]));
    let mut guard = cache.lock().unwrap();
    if let Some(entry) = guard[n] {
        return entry;
    }
    let computed = Box::leak(Box::new(compute_gauss_legendre(n)));
    guard[n] = Some(computed);
    computed
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d2) = legendre_and_deriv(n, x);
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_and_deriv(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Fixed-order Gauss-Legendre integral of `f` over [a, b].
pub fn integrate_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Adaptive Gauss-Legendre quadrature of a complex-valued integrand.
///
/// Bisects until the rule applied to the two halves agrees with the rule on
/// the whole panel; `initial_panels` pre-splits oscillatory integrands so no
/// oscillation is ever straddled by a single panel.
pub fn integrate_adaptive_complex<F>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    initial_panels: usize,
) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    // first pass to set the absolute scale of the answer
    let mut coarse = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let lo = a + k as f64 * width;
        coarse += gl_complex(f, lo, lo + width, 15);
    }
    let scale = coarse.norm().max(abs_tol);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let lo = a + k as f64 * width;
        total += adaptive_panel(f, lo, lo + width, rel_tol * scale / panels as f64, 0);
    }
    total
}

fn gl_complex<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, order: usize) -> Complex64 {
    let (nodes, weights) = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        sum += f(mid + half * x) * *w;
    }
    sum * half
}

fn adaptive_panel<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> Complex64 {
    let whole = gl_complex(f, a, b, 15);
    let mid = 0.5 * (a + b);
    let left = gl_complex(f, a, mid, 15);
    let right = gl_complex(f, mid, b, 15);
    let refined = left + right;
    if (refined - whole).norm() <= tol || depth >= 40 {
        refined
    } else {
        adaptive_panel(f, a, mid, 0.5 * tol, depth + 1)
            + adaptive_panel(f, mid, b, 0.5 * tol, depth + 1)
    }
}

/// Adaptive quadrature of a real integrand (thin wrapper over the complex path).
pub fn integrate_adaptive<F>(f: &F, a: f64, b: f64, rel_tol: f64, initial_panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    integrate_adaptive_complex(
        &|t| Complex64::new(f(t), 0.0),
        a,
        b,
        rel_tol,
        1e-300,
        initial_panels,
    )
    .re
}

/// Composite Simpson integral of uniformly gridded complex samples.
pub fn simpson_uniform(values: &[Complex64], h: f64) -> Complex64 {
    *cumulative_simpson(values, h).last().unwrap()
}

/// Composite Simpson integral of uniformly gridded real samples.
pub fn simpson_uniform_real(values: &[f64], h: f64) -> f64 {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    simpson_uniform(&complex, h).re
}

/// Cumulative integral of uniformly gridded complex samples.
///
/// Even grid points use composite Simpson increments over interval pairs;
/// odd points add the half-panel three-point Newton-Cotes rule
/// (h/12)(5 f0 + 8 f1 - f2), keeping the running integral fourth order.
pub fn cumulative_simpson(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    assert!(n >= 3, "cumulative Simpson needs at least 3 samples");
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut k = 0;
    while k + 2 < n {
        out[k + 1] = acc + (values[k] * 5.0 + values[k + 1] * 8.0 - values[k + 2]) * (h / 12.0);
        acc += (values[k] + values[k + 1] * 4.0 + values[k + 2]) * (h / 3.0);
        out[k + 2] = acc;
        k += 2;
    }
    if k + 1 < n {
        // trailing single interval: quadratic through the last three samples
        out[k + 1] = acc + (-values[k - 1] + values[k] * 8.0 + values[k + 1] * 5.0) * (h / 12.0);
    }
    out
}

/// Cumulative integral of uniformly gridded real samples.
pub fn cumulative_simpson_real(values: &[f64], h: f64) -> Vec<f64> {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    cumulative_simpson(&complex, h).into_iter().map(|z| z.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gl_nodes_integrate_polynomials_exactly() {
        for order in [2usize, 5, 12, 15, 64] {
            let (_, w) = gauss_legendre(order);
            let total: f64 = w.iter().sum();
            assert_relative_eq!(total, 2.0, max_relative = 1e-14);
            // degree 2*order-1 polynomial is exact
            let deg = 2 * order - 1;
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            let got = integrate_gl(|x| x.powi(deg as i32), -1.0, 1.0, order);
            assert!((got - exact).abs() < 1e-13, "order {order}: {got} vs {exact}");
            let deg2 = 2 * order; // first non-exact degree, still close
            let exact2 = 2.0 / (deg2 as f64 + 1.0);
            let got2 = integrate_gl(|x| x.powi(deg2 as i32), -1.0, 1.0, order);
            assert_relative_eq!(got2, exact2, max_relative = 1e-2);
        }
    }

    #[test]
    fn adaptive_handles_oscillatory_integrand() {
        // int_0^(2pi) cos(40 t) exp(-i t) dt; only the e^{+-i40t} parts matter
        let f = |t: f64| Complex64::new(0.0, -t).exp() * (40.0 * t).cos();
        let got = integrate_adaptive_complex(&f, 0.0, 2.0 * PI, 1e-12, 1e-300, 40);
        // exact: 1/2 int e^{i(40-1)t} + e^{-i(41)t} dt over a full period = 0
        assert!(got.norm() < 1e-10, "got {got}");
    }

    #[test]
    fn adaptive_matches_known_integral() {
        let got = integrate_adaptive(&|t: f64| (-t * t).exp(), -6.0, 6.0, 1e-13, 4);
        assert_relative_eq!(got, PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn cumulative_simpson_fourth_order() {
        let n = 801;
        let h = 2.0 / (n as f64 - 1.0);
        let values: Vec<Complex64> = (0..n)
            .map(|i| {
                let t = -1.0 + i as f64 * h;
                Complex64::new((3.0 * t).sin(), (2.0 * t).cos())
            })
            .collect();
        let cum = cumulative_simpson(&values, h);
        for (i, c) in cum.iter().enumerate().step_by(97) {
            let t = -1.0 + i as f64 * h;
            let exact_re = (-(3.0 * t).cos() + (3.0f64).cos()) / 3.0;
            let exact_im = ((2.0 * t).sin() + (2.0f64).sin()) / 2.0;
            assert!((c.re - exact_re).abs() < 1e-10, "re at {t}");
            assert!((c.im - exact_im).abs() < 1e-10, "im at {t}");
        }
    }

    #[test]
    fn simpson_even_and_odd_sample_counts() {
        for n in [101usize, 102, 257] {
            let h = 1.0 / (n as f64 - 1.0);
            let values: Vec<f64> = (0..n).map(|i| (i as f64 * h).exp()).collect();
            let got = simpson_uniform_real(&values, h);
            assert_relative_eq!(got, 1.0f64.exp() - 1.0, max_relative = 1e-9);
        }
    }
}

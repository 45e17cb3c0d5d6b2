//! Adaptive Simpson quadrature with interval bisection.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 50;
const MAX_EVALS: usize = 20_000_000;

/// Values that Simpson's rule can average: `f64` and `Complex64`.
pub trait Integrand:
    Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

struct State<'a, T> {
    f: &'a dyn Fn(f64) -> T,
    evals: usize,
    failed: Option<(f64, f64)>,
}

/// ∫_a^b f to absolute tolerance `tol`.
///
/// The interval is first split into `pieces` equal parts so oscillatory
/// integrands are not misjudged from five samples.
pub fn integrate<T: Integrand>(f: &dyn Fn(f64) -> T, a: f64, b: f64, tol: f64, pieces: usize) -> Result<T> {
    if !(a.is_finite() && b.is_finite()) || tol <= 0.0 {
        return Err(Error::Numeric(format!("bad quadrature request on [{a}, {b}] with tol {tol}")));
    }
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let mut st = State { f, evals: 0, failed: None };
    let piece_tol = tol / pieces as f64;
    let mut total: Option<T> = None;
    for i in 0..pieces {
        let lo = a + h * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + h };
        let fa = f(lo);
        let fm = f(0.5 * (lo + hi));
        let fb = f(hi);
        st.evals += 3;
        let whole = simpson(lo, hi, fa, fm, fb);
        let v = recurse(&mut st, lo, hi, fa, fm, fb, whole, piece_tol, MAX_DEPTH);
        total = Some(match total {
            None => v,
            Some(t) => t + v,
        });
    }
    if let Some((lo, hi)) = st.failed {
        return Err(Error::Numeric(format!(
            "adaptive Simpson did not converge on [{lo:.6e}, {hi:.6e}] (tol {tol:.1e}, {} evaluations)",
            st.evals
        )));
    }
    Ok(total.expect("at least one piece"))
}

fn simpson<T: Integrand>(a: f64, b: f64, fa: T, fm: T, fb: T) -> T {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Integrand>(
    st: &mut State<'_, T>,
    a: f64,
    b: f64,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: f64,
    depth: u32,
) -> T {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = (st.f)(lm);
    let frm = (st.f)(rm);
    st.evals += 2;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let both = left + right;
    let delta = both - whole;
    if delta.magnitude() <= 15.0 * tol {
        return both + delta * (1.0 / 15.0);
    }
    if depth == 0 || st.evals > MAX_EVALS || m <= a || m >= b {
        if st.failed.is_none() {
            st.failed = Some((a, b));
        }
        return both + delta * (1.0 / 15.0);
    }
    recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(&|x: f64| x * x * x, 0.0, 2.0, 1e-12, 1).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_complex() {
        let xi = 40.0;
        let v = integrate(&|x: f64| Complex64::new(0.0, xi * x).exp(), 0.0, 1.0, 1e-12, 16).unwrap();
        let exact = (Complex64::new(0.0, xi).exp() - 1.0) / Complex64::new(0.0, xi);
        assert!((v - exact).norm() < 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        let r = integrate(&|x: f64| if x > 0.3 { f64::NAN } else { 0.0 }, 0.0, 1.0, 1e-9, 1);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}

//! Cutoff functions χ, the normaliser c_χ = ∫₀^∞ |χ′|², and the truncated
//! divisor sums
//!
//! ```text
//! Λ_R(n)     = Σ_{d | n, d ≤ R} μ(d) log(R/d)
//! Λ_{χ,R}(n) = log R · Σ_{d | n} μ(d) χ(log d / log R)
//! ```
//!
//! Only squarefree d contribute, and only those with
//! `log d <= support_radius · log R`; divisors are enumerated from the
//! distinct prime factors of n with the product pruned at that bound.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::quadrature;
use crate::sieve::SieveTables;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CutoffKind {
    /// max(1 − |x|, 0)
    Tent,
    /// C^∞, equal to 1 on [−plateau, plateau] and 0 outside [−1, 1].
    Bump { plateau: f64 },
}

/// A compactly supported χ: ℝ → [0, 1] with an analytic derivative.
///
/// `dilation` rescales the argument: the function evaluated is
/// `base(dilation · x)`, supported on `[−1/dilation, 1/dilation]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CutoffFunction {
    pub kind: CutoffKind,
    pub dilation: f64,
}

pub fn tent_cutoff() -> CutoffFunction {
    CutoffFunction {
        kind: CutoffKind::Tent,
        dilation: 1.0,
    }
}

pub fn smooth_bump_cutoff(plateau: f64) -> Result<CutoffFunction> {
    if !(plateau > 0.0 && plateau < 1.0) {
        return Err(invalid!("bump plateau must lie in (0, 1), got {plateau}"));
    }
    Ok(CutoffFunction {
        kind: CutoffKind::Bump { plateau },
        dilation: 1.0,
    })
}

/// Plateau of the default smooth cutoff used throughout the experiments.
pub const DEFAULT_PLATEAU: f64 = 0.05;

impl Default for CutoffFunction {
    fn default() -> Self {
        smooth_bump_cutoff(DEFAULT_PLATEAU).expect("default plateau is valid")
    }
}

/// exp(−1/t)-based smooth step s: [0,1] → [0,1], s(0)=0, s(1)=1, and s′.
fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    // s = 1 / (1 + e), e = h(1−t)/h(t) = exp(1/t − 1/(1−t))
    let a = 1.0 / t - 1.0 / (1.0 - t);
    if a > 700.0 {
        return (0.0, 0.0);
    }
    if a < -700.0 {
        return (1.0, 0.0);
    }
    let e = a.exp();
    let s = 1.0 / (1.0 + e);
    let ds = e * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / ((1.0 + e) * (1.0 + e));
    (s, ds)
}

impl CutoffFunction {
    /// χ(dilation · x) as a new cutoff.
    pub fn dilate(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(invalid!("dilation factor must be positive, got {factor}"));
        }
        Ok(Self {
            kind: self.kind,
            dilation: self.dilation * factor,
        })
    }

    pub fn support_radius(&self) -> f64 {
        1.0 / self.dilation
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, CutoffKind::Bump { .. })
    }

    pub fn name(&self) -> String {
        match self.kind {
            CutoffKind::Tent => "tent".into(),
            CutoffKind::Bump { plateau } => format!("bump({plateau})"),
        }
    }

    /// (χ(x), χ′(x)).
    pub fn eval_with_deriv(&self, x: f64) -> (f64, f64) {
        let u = x * self.dilation;
        let (v, du) = match self.kind {
            CutoffKind::Tent => {
                let a = u.abs();
                if a >= 1.0 {
                    (0.0, 0.0)
                } else {
                    (1.0 - a, if u > 0.0 { -1.0 } else if u < 0.0 { 1.0 } else { 0.0 })
                }
            }
            CutoffKind::Bump { plateau } => {
                let a = u.abs();
                if a <= plateau {
                    (1.0, 0.0)
                } else if a >= 1.0 {
                    (0.0, 0.0)
                } else {
                    let width = 1.0 - plateau;
                    let (s, ds) = smooth_step((1.0 - a) / width);
                    (s, -u.signum() * ds / width)
                }
            }
        };
        (v, du * self.dilation)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_deriv(x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.eval_with_deriv(x).1
    }

    /// Points in (0, support) where χ′ is not smooth or the formula changes.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            CutoffKind::Tent => vec![0.0, self.support_radius()],
            CutoffKind::Bump { plateau } => vec![0.0, plateau / self.dilation, self.support_radius()],
        }
    }
}

/// c_χ = ∫₀^∞ |χ′(x)|² dx by adaptive Simpson to absolute tolerance `tol`.
pub fn c_chi_with_tol(chi: &CutoffFunction, tol: f64) -> Result<f64> {
    let bps = chi.breakpoints();
    let mut total = 0.0;
    let parts = (bps.len() - 1) as f64;
    for w in bps.windows(2) {
        // derivative evaluated strictly inside the piece, where it is smooth
        let (lo, hi) = (w[0], w[1]);
        let nudge = (hi - lo) * 1e-13;
        let f = |x: f64| {
            let d = chi.deriv(x.clamp(lo + nudge, hi - nudge));
            d * d
        };
        total += quadrature::integrate(&f, w[0], w[1], tol / parts, 8)
            .map_err(|e| Error::Numeric(format!("c_chi for {}: {e}", chi.name())))?;
    }
    Ok(total)
}

/// c_χ to absolute tolerance 1e−9.
pub fn c_chi(chi: &CutoffFunction) -> Result<f64> {
    c_chi_with_tol(chi, 1e-11)
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(invalid!("R must be a finite real > 1, got {r}"));
    }
    Ok(())
}

/// Squarefree divisors d of the number with the given distinct prime
/// factors, with d ≤ bound; passes (d, μ(d)) to `visit`.
fn for_each_small_squarefree_divisor<F: FnMut(u64, i8)>(primes: &[u64], bound: f64, visit: &mut F) {
    fn go<F: FnMut(u64, i8)>(primes: &[u64], start: usize, d: u64, mu: i8, bound: f64, visit: &mut F) {
        visit(d, mu);
        for i in start..primes.len() {
            let next = d as f64 * primes[i] as f64;
            if next > bound {
                // primes are ascending, so later ones exceed the bound too
                break;
            }
            go(primes, i + 1, d * primes[i], -mu, bound, visit);
        }
    }
    go(primes, 0, 1, 1, bound, visit);
}

/// Λ_{χ,R}(n) using the sieve's factor table; requires `1 <= n <= limit`.
pub fn lambda_chi_r(n: u64, r: f64, chi: &CutoffFunction, tables: &SieveTables) -> Result<f64> {
    if n == 0 {
        return Err(invalid!("Λ_(χ,R) is undefined at n = 0"));
    }
    check_r(r)?;
    let primes = tables.distinct_prime_factors(n)?;
    let log_r = r.ln();
    let bound = (chi.support_radius() * log_r).exp() * (1.0 + 1e-12);
    let mut acc = 0.0;
    for_each_small_squarefree_divisor(&primes, bound, &mut |d, mu| {
        acc += mu as f64 * chi.eval((d as f64).ln() / log_r);
    });
    Ok(log_r * acc)
}

/// Λ_R(n) = Σ_{d | n, d ≤ R} μ(d) log(R/d).
pub fn lambda_r(n: u64, r: f64, tables: &SieveTables) -> Result<f64> {
    if n == 0 {
        return Err(invalid!("Λ_R is undefined at n = 0"));
    }
    check_r(r)?;
    let primes = tables.distinct_prime_factors(n)?;
    let mut acc = 0.0;
    for_each_small_squarefree_divisor(&primes, r, &mut |d, mu| {
        acc += mu as f64 * (r / d as f64).ln();
    });
    Ok(acc)
}

/// Λ_{χ,R} for a fixed (χ, R), valid for any `n >= 1` in `u64`.
///
/// Only primes up to R^{support_radius} can divide a contributing d, so n
/// is factored by trial division over that short list; the values
/// μ(d)χ(log d / log R) are memoised per squarefree d.
#[derive(Debug, Clone)]
pub struct DivisorSumEvaluator {
    log_r: f64,
    bound: f64,
    primes: Vec<u64>,
    weights: HashMap<u64, f64>,
}

impl DivisorSumEvaluator {
    pub fn new(r: f64, chi: &CutoffFunction) -> Result<Self> {
        check_r(r)?;
        let log_r = r.ln();
        let bound = (chi.support_radius() * log_r).exp() * (1.0 + 1e-12);
        if bound > 1e8 {
            return Err(invalid!("R^support = {bound:.3e} is too large for the memoised divisor sum"));
        }
        let primes = crate::sieve::small_primes(bound.floor() as u64);
        let mut weights = HashMap::new();
        for_each_small_squarefree_divisor(&primes, bound, &mut |d, mu| {
            weights.insert(d, mu as f64 * chi.eval((d as f64).ln() / log_r));
        });
        Ok(Self {
            log_r,
            bound,
            primes,
            weights,
        })
    }

    pub fn log_r(&self) -> f64 {
        self.log_r
    }

    /// Number of memoised squarefree divisors.
    pub fn memo_len(&self) -> usize {
        self.weights.len()
    }

    pub fn eval(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(invalid!("Λ_(χ,R) is undefined at n = 0"));
        }
        let mut divs: Vec<u64> = Vec::new();
        for &p in &self.primes {
            if n % p == 0 {
                divs.push(p);
            }
        }
        let mut acc = 0.0;
        for_each_small_squarefree_divisor(&divs, self.bound, &mut |d, _| {
            if let Some(w) = self.weights.get(&d) {
                acc += w;
            }
        });
        Ok(self.log_r * acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_values() {
        let t = tent_cutoff();
        assert_eq!(t.eval(0.0), 1.0);
        assert_eq!(t.eval(1.0), 0.0);
        assert_eq!(t.eval(-0.5), 0.5);
        assert_eq!(t.deriv(0.5), -1.0);
        assert!(!t.is_smooth());
        assert!((c_chi(&t).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bump_shape() {
        let b = smooth_bump_cutoff(0.5).unwrap();
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(1.0), 0.0);
        assert_eq!(b.eval(-1.0), 0.0);
        assert_eq!(b.eval(0.3), 1.0);
        let mut prev = 1.0;
        for i in 0..=200 {
            let x = 0.5 + 0.5 * i as f64 / 200.0;
            let v = b.eval(x);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            assert_eq!(v, b.eval(-x));
            prev = v;
        }
        assert!(smooth_bump_cutoff(0.0).is_err());
        assert!(smooth_bump_cutoff(1.0).is_err());
    }

    #[test]
    fn bump_derivative_matches_finite_differences() {
        let b = smooth_bump_cutoff(0.3).unwrap();
        for i in 1..100 {
            let x = -0.99 + 1.98 * i as f64 / 100.0;
            let h = 1e-6;
            let fd = (b.eval(x + h) - b.eval(x - h)) / (2.0 * h);
            assert!((fd - b.deriv(x)).abs() < 1e-5, "x={x}: fd {fd} vs {}", b.deriv(x));
        }
    }

    #[test]
    fn c_chi_scales_with_dilation() {
        for chi in [tent_cutoff(), smooth_bump_cutoff(0.5).unwrap()] {
            let c = c_chi(&chi).unwrap();
            let c2 = c_chi(&chi.dilate(2.0).unwrap()).unwrap();
            let ch = c_chi(&chi.dilate(0.5).unwrap()).unwrap();
            assert!((c2 - 2.0 * c).abs() < 1e-8);
            assert!((ch - 0.5 * c).abs() < 1e-8);
        }
    }

    #[test]
    fn lambda_small_cases() {
        let t = SieveTables::build(1000).unwrap();
        let tent = tent_cutoff();
        let r = 4.0;
        assert!((lambda_chi_r(1, r, &tent, &t).unwrap() - r.ln()).abs() < 1e-14);
        // divisors 1, 2, 3 of 6 lie below R = 4
        let expected = 4f64.ln() - 2f64.ln() - (4.0f64 / 3.0).ln();
        assert!((lambda_chi_r(6, r, &tent, &t).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.5f64.ln()).abs() < 1e-14);
        assert!((lambda_r(2, 2.0, &t).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!((lambda_chi_r(997, 50.0, &tent, &t).unwrap() - 50f64.ln()).abs() < 1e-14);
        assert!(lambda_chi_r(0, r, &tent, &t).is_err());
        assert!(lambda_chi_r(5, 1.0, &tent, &t).is_err());
    }

    #[test]
    fn square_factors_do_not_matter() {
        let t = SieveTables::build(20_000).unwrap();
        let b = smooth_bump_cutoff(0.4).unwrap();
        for m in [6u64, 10, 15, 30, 42, 105] {
            for p in t.distinct_prime_factors(m).unwrap() {
                let a = lambda_chi_r(p * m, 20.0, &b, &t).unwrap();
                let c = lambda_chi_r(m, 20.0, &b, &t).unwrap();
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn evaluator_matches_table_path() {
        let t = SieveTables::build(30_000).unwrap();
        let b = smooth_bump_cutoff(0.5).unwrap();
        for r in [3.0, 17.5, 100.0] {
            let ev = DivisorSumEvaluator::new(r, &b).unwrap();
            for n in 1..30_000u64 {
                let a = ev.eval(n).unwrap();
                let c = lambda_chi_r(n, r, &b, &t).unwrap();
                assert!((a - c).abs() < 1e-12, "n={n} R={r}");
            }
        }
    }
}

//! The majorant
//!
//! ```text
//! ν(n) = (φ(W)/W) · Λ_{χ,R}(Wn+1)² / (c_χ log R)   for ⌈N/2⌉ ≤ n < N
//! ν(n) = 1                                           otherwise
//! ```
//!
//! and the weight f = δ_k Λ̃ on the same window, which it dominates once
//! log R ≥ c_χ δ_k log(WN+1).

use rayon::prelude::*;

use crate::cutoff::{c_chi, lambda_chi_r, CutoffFunction};
use crate::cyclic::CyclicFunction;
use crate::error::{invalid, out_of_range, Result};
use crate::sieve::{modified_mangoldt, primorial, SieveTables, WTrick};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MajorantParams {
    pub modulus: usize,
    pub k: usize,
    pub w: u64,
    pub chi: CutoffFunction,
    /// Truncation level of the divisor sum.
    pub r: f64,
    pub delta_k: f64,
    /// c_χ, cached at construction.
    pub c_chi: f64,
}

fn factorial_gcd(n: usize, m: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (2..=m).fold(1, |acc, f| acc.max(gcd(n, f)))
}

/// R = N^{1/(k·2^{k+3})}.
pub fn asymptotic_r(modulus: usize, k: usize) -> f64 {
    (modulus as f64).powf(1.0 / (k as f64 * 2f64.powi(k as i32 + 3)))
}

/// δ_k = 1 / (k·2^{k+4}·c_χ).
pub fn default_delta_k(k: usize, c_chi: f64) -> f64 {
    1.0 / (k as f64 * 2f64.powi(k as i32 + 4) * c_chi)
}

/// Exponent used by [`MajorantParams::desk_scale`]: R = N.
///
/// Measured with the default cutoff and w = 3, this keeps mean(ν) within
/// 0.11 of 1 for N ≥ 10⁵; smaller exponents leave a larger deficit
/// (about 0.18 at R = √N, N = 10⁶).
pub const DESK_SCALE_R_EXPONENT: f64 = 1.0;

impl MajorantParams {
    /// Parameters with R = N^{1/(k·2^{k+3})} and δ_k = 1/(k·2^{k+4}·c_χ).
    ///
    /// That R stays below 2 until N is astronomically large, in which case
    /// Λ_{χ,R} ≡ log R and ν carries no arithmetic information; use
    /// [`MajorantParams::desk_scale`] or [`MajorantParams::with_r`] for
    /// experiments at realistic N.
    pub fn new(modulus: usize, k: usize, w: u64, chi: CutoffFunction) -> Result<Self> {
        if k < 3 {
            return Err(invalid!("progression length k must be >= 3, got {k}"));
        }
        if modulus < 3 {
            return Err(invalid!("modulus must be >= 3, got {modulus}"));
        }
        if factorial_gcd(modulus, k - 1) != 1 {
            return Err(invalid!("N = {modulus} is not coprime to (k-1)! for k = {k}"));
        }
        let c = c_chi(&chi)?;
        let r = asymptotic_r(modulus, k);
        Ok(Self {
            modulus,
            k,
            w,
            chi,
            r,
            delta_k: default_delta_k(k, c),
            c_chi: c,
        })
    }

    /// Same as [`MajorantParams::new`] with R = N^[`DESK_SCALE_R_EXPONENT`].
    pub fn desk_scale(modulus: usize, k: usize, w: u64, chi: CutoffFunction) -> Result<Self> {
        Self::new(modulus, k, w, chi)?.with_r((modulus as f64).powf(DESK_SCALE_R_EXPONENT))
    }

    pub fn with_r(mut self, r: f64) -> Result<Self> {
        if !(r > 1.0 && r.is_finite()) {
            return Err(invalid!("R must be a finite real > 1, got {r}"));
        }
        self.r = r;
        Ok(self)
    }

    pub fn w_trick(&self) -> Result<WTrick> {
        primorial(self.w)
    }

    /// First index of the window [⌈N/2⌉, N).
    pub fn window_start(&self) -> usize {
        self.modulus.div_ceil(2)
    }

    fn check_tables(&self, wt: &WTrick, tables: &SieveTables) -> Result<()> {
        let need = (wt.modulus as u128) * (self.modulus as u128) + 1;
        if need > tables.limit() as u128 {
            return Err(out_of_range!(
                "sieve limit {} is below W·N+1 = {need}",
                tables.limit()
            ));
        }
        Ok(())
    }
}

/// Λ_{χ,R}(Wn+1) for every n in the window, in window order.
pub fn window_divisor_sums(params: &MajorantParams, tables: &SieveTables) -> Result<Vec<f64>> {
    let wt = params.w_trick()?;
    params.check_tables(&wt, tables)?;
    (params.window_start()..params.modulus)
        .into_par_iter()
        .map(|n| lambda_chi_r(wt.modulus * n as u64 + 1, params.r, &params.chi, tables))
        .collect()
}

/// ν as a dense function on Z_N.
pub fn build_majorant(params: &MajorantParams, tables: &SieveTables) -> Result<CyclicFunction> {
    let wt = params.w_trick()?;
    let sums = window_divisor_sums(params, tables)?;
    let scale = wt.density() / (params.c_chi * params.r.ln());
    let mut values = vec![1.0; params.modulus];
    for (slot, l) in values[params.window_start()..].iter_mut().zip(sums) {
        *slot = scale * l * l;
    }
    CyclicFunction::new(values)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MajorizationReport {
    pub window_start: usize,
    pub window_len: usize,
    /// min over the window of ν(n) − δ_k Λ̃(n).
    pub min_slack: f64,
    pub argmin: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
    /// Whether log R ≥ c_χ δ_k log(WN+1), the sufficient condition.
    pub sufficient_condition: bool,
}

/// Compares ν against δ_k Λ̃ on the window; never fails on violations.
pub fn check_majorizes(
    nu: &CyclicFunction,
    params: &MajorantParams,
    tables: &SieveTables,
) -> Result<MajorizationReport> {
    if nu.modulus() != params.modulus {
        return Err(invalid!("ν has modulus {} but params say {}", nu.modulus(), params.modulus));
    }
    let wt = params.w_trick()?;
    params.check_tables(&wt, tables)?;
    let start = params.window_start();
    let mut min_slack = f64::INFINITY;
    let mut argmin = start;
    let mut violations = 0;
    let mut first_violation = None;
    for n in start..params.modulus {
        let slack = nu.values()[n] - params.delta_k * modified_mangoldt(n as u64, &wt, tables)?;
        if slack < min_slack {
            min_slack = slack;
            argmin = n;
        }
        if slack < 0.0 {
            violations += 1;
            first_violation.get_or_insert(n);
        }
    }
    let bound = params.c_chi * params.delta_k * ((wt.modulus as f64) * params.modulus as f64 + 1.0).ln();
    Ok(MajorizationReport {
        window_start: start,
        window_len: params.modulus - start,
        min_slack,
        argmin,
        violations,
        first_violation,
        sufficient_condition: params.r.ln() >= bound,
    })
}

/// f(n) = δ_k Λ̃(n) on the window, 0 elsewhere.
pub fn restrict_to_window(
    nu: &CyclicFunction,
    params: &MajorantParams,
    tables: &SieveTables,
) -> Result<CyclicFunction> {
    if nu.modulus() != params.modulus {
        return Err(invalid!("ν has modulus {} but params say {}", nu.modulus(), params.modulus));
    }
    let wt = params.w_trick()?;
    params.check_tables(&wt, tables)?;
    let start = params.window_start();
    let mut values = vec![0.0; params.modulus];
    for (n, slot) in values.iter_mut().enumerate().skip(start) {
        *slot = params.delta_k * modified_mangoldt(n as u64, &wt, tables)?;
    }
    CyclicFunction::new(values)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WindowStats {
    pub mean: f64,
    pub window_mean: f64,
    pub window_min: f64,
    pub window_max: f64,
    /// n in the window with Wn+1 prime.
    pub window_primes: usize,
    /// n in the window with Λ_{χ,R}(Wn+1) < 0.
    pub negative_divisor_sums: usize,
}

pub fn window_stats(nu: &CyclicFunction, params: &MajorantParams, tables: &SieveTables) -> Result<WindowStats> {
    let wt = params.w_trick()?;
    let sums = window_divisor_sums(params, tables)?;
    let start = params.window_start();
    let win = &nu.values()[start..];
    let window_primes = (start..params.modulus)
        .filter(|&n| tables.is_prime(wt.modulus * n as u64 + 1))
        .count();
    Ok(WindowStats {
        mean: nu.mean(),
        window_mean: win.iter().sum::<f64>() / win.len() as f64,
        window_min: win.iter().cloned().fold(f64::INFINITY, f64::min),
        window_max: win.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        window_primes,
        negative_divisor_sums: sums.iter().filter(|&&l| l < 0.0).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::smooth_bump_cutoff;

    fn setup(n: usize, w: u64) -> (MajorantParams, SieveTables) {
        let p = MajorantParams::desk_scale(n, 3, w, smooth_bump_cutoff(0.5).unwrap()).unwrap();
        let wt = p.w_trick().unwrap();
        let t = SieveTables::build(wt.modulus as usize * n + 1).unwrap();
        (p, t)
    }

    #[test]
    fn default_constants() {
        let chi = smooth_bump_cutoff(0.5).unwrap();
        let p = MajorantParams::new(10_001, 3, 3, chi).unwrap();
        let c = c_chi(&chi).unwrap();
        assert!((p.delta_k - 1.0 / (3.0 * 128.0 * c)).abs() < 1e-15);
        assert!((p.r - 10_001f64.powf(1.0 / 192.0)).abs() < 1e-12);
        assert!(MajorantParams::new(10_000, 3, 3, chi).is_err());
        assert!(MajorantParams::new(10_005, 4, 3, chi).is_err());
        assert!(MajorantParams::new(10_001, 2, 3, chi).is_err());
    }

    #[test]
    fn shape_of_nu() {
        let (p, t) = setup(2001, 3);
        let nu = build_majorant(&p, &t).unwrap();
        let wt = p.w_trick().unwrap();
        let prime_value = wt.density() * p.r.ln() / p.c_chi;
        for n in 0..2001 {
            let v = nu.values()[n];
            assert!(v >= 0.0);
            if n < 1001 {
                assert_eq!(v, 1.0);
            } else if t.is_prime(wt.modulus * n as u64 + 1) {
                assert!((v - prime_value).abs() < 1e-12 * prime_value);
            }
        }
        // the square keeps ν nonnegative even where the divisor sum is negative
        let big_r = p.with_r(1000.0).unwrap();
        let nu_big = build_majorant(&big_r, &t).unwrap();
        let stats = window_stats(&nu_big, &big_r, &t).unwrap();
        assert!(stats.negative_divisor_sums > 0);
        assert!(stats.window_min >= 0.0);
        // rebuilding is idempotent
        assert_eq!(build_majorant(&p, &t).unwrap(), nu);
    }

    #[test]
    fn undersized_table_is_rejected() {
        let (p, _) = setup(101, 3);
        let small = SieveTables::build(300).unwrap();
        assert!(matches!(build_majorant(&p, &small), Err(crate::Error::OutOfRange(_))));
    }

    #[test]
    fn window_weight_is_dominated() {
        let (p, t) = setup(20_001, 3);
        let nu = build_majorant(&p, &t).unwrap();
        let rep = check_majorizes(&nu, &p, &t).unwrap();
        assert!(rep.sufficient_condition);
        assert_eq!(rep.violations, 0);
        let f = restrict_to_window(&nu, &p, &t).unwrap();
        for n in 0..20_001 {
            assert!(f.values()[n] <= nu.values()[n]);
            if n < 10_001 {
                assert_eq!(f.values()[n], 0.0);
            }
        }
    }

    #[test]
    fn oversized_delta_is_reported_not_fatal() {
        let (mut p, t) = setup(1001, 3);
        p.delta_k = 10.0;
        let nu = build_majorant(&p, &t).unwrap();
        let rep = check_majorizes(&nu, &p, &t).unwrap();
        assert!(rep.violations > 0);
        assert!(rep.first_violation.is_some());
        assert!(rep.min_slack < 0.0);
    }
}

//! Numerical checks of the Fourier-analytic evaluation of the divisor-sum
//! correlations: the transform φ of eˣχ(x), the two routes to c_χ, the
//! behaviour of ζ near s = 1, and local Euler factors.
//!
//! Convention: eˣχ(x) = ∫ φ(ξ) e^{−ixξ} dξ, so
//!
//! ```text
//! φ(ξ) = (1/2π) ∫ eˣ χ(x) e^{ixξ} dx,
//! χ(x) = ∫ φ(ξ) e^{−(1+iξ)x} dξ,   −χ′(x) = ∫ φ(ξ)(1+iξ) e^{−(1+iξ)x} dξ.
//! ```
//!
//! Squaring the last identity and integrating over x ≥ 0 gives
//!
//! ```text
//! c_χ = ∫∫ (1+iξ)(1+iξ′)/(2+i(ξ+ξ′)) φ(ξ)φ(ξ′) dξ dξ′.
//! ```
//!
//! Integrals over ξ use composite Simpson on the profile's uniform grid.

use std::f64::consts::PI;
use std::io::Write;

pub use num_complex::Complex64;
use rayon::prelude::*;

use crate::cutoff::{CutoffFunction, CutoffKind};
use crate::error::{invalid, Result};
use crate::forms::LinearFormsSystem;
use crate::quadrature::integrate;
use crate::sieve::WTrick;

/// Default grid half-width Ξ for the default cutoff.
pub const DEFAULT_XI_MAX: f64 = 120.0;
/// Default number of grid points (odd, for Simpson).
pub const DEFAULT_GRID: usize = 4001;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FourierProfile {
    pub chi: CutoffFunction,
    pub xi_max: f64,
    pub grid: Vec<f64>,
    pub phi: Vec<Complex64>,
}

/// φ(ξ) at one point, by adaptive quadrature over the support of χ; the
/// plateau of a bump is integrated in closed form.
pub fn phi_at(chi: &CutoffFunction, xi: f64) -> Result<Complex64> {
    let s = chi.support_radius();
    let a = Complex64::new(1.0, xi);
    let integrand = |x: f64| (a * x).exp() * chi.eval(x);
    let (plateau, inner) = match chi.kind {
        CutoffKind::Bump { plateau } => {
            let b = plateau / chi.dilation;
            (((a * b).exp() - (-a * b).exp()) / a, b)
        }
        CutoffKind::Tent => (Complex64::new(0.0, 0.0), 0.0),
    };
    let pieces = 8 + (xi.abs() * (s - inner) / PI).ceil() as usize;
    let tol = 1e-11;
    let mut total = plateau;
    if inner == 0.0 {
        total += integrate(&integrand, -s, 0.0, tol, pieces)?;
        total += integrate(&integrand, 0.0, s, tol, pieces)?;
    } else {
        total += integrate(&integrand, -s, -inner, tol, pieces)?;
        total += integrate(&integrand, inner, s, tol, pieces)?;
    }
    Ok(total / (2.0 * PI))
}

/// φ on the uniform grid of `n_grid` points over [−Ξ, Ξ].
pub fn fourier_profile(chi: &CutoffFunction, xi_max: f64, n_grid: usize) -> Result<FourierProfile> {
    if !(xi_max > 0.0 && xi_max.is_finite()) || n_grid < 3 || n_grid % 2 == 0 {
        return Err(invalid!("need Ξ > 0 and an odd grid size >= 3"));
    }
    if !chi.is_smooth() {
        log::warn!("{} is not smooth; φ decays only like |ξ|^-2 and truncation errors are large", chi.name());
    }
    let h = 2.0 * xi_max / (n_grid - 1) as f64;
    let grid: Vec<f64> = (0..n_grid).map(|i| -xi_max + i as f64 * h).collect();
    let phi = grid.par_iter().map(|&x| phi_at(chi, x)).collect::<Result<Vec<_>>>()?;
    Ok(FourierProfile {
        chi: *chi,
        xi_max,
        grid,
        phi,
    })
}

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

impl FourierProfile {
    fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    fn weights(&self) -> Vec<f64> {
        simpson_weights(self.grid.len(), self.step())
    }

    /// max_ξ |φ(−ξ) − conj φ(ξ)| over the grid.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let n = self.phi.len();
        (0..n).map(|i| (self.phi[n - 1 - i] - self.phi[i].conj()).norm()).fold(0.0, f64::max)
    }

    /// ∫_{−Ξ}^{Ξ} φ(ξ) e^{−ixξ} dξ, which tends to eˣχ(x).
    pub fn inversion(&self, x: f64) -> Complex64 {
        let w = self.weights();
        self.grid
            .iter()
            .zip(&self.phi)
            .zip(&w)
            .map(|((&xi, &p), &wi)| p * Complex64::new(0.0, -x * xi).exp() * wi)
            .sum()
    }

    /// ∫ φ(ξ)(1+iξ) e^{−(1+iξ)x} dξ, which tends to −χ′(x).
    pub fn derivative_reconstruction(&self, x: f64) -> Complex64 {
        let w = self.weights();
        self.grid
            .iter()
            .zip(&self.phi)
            .zip(&w)
            .map(|((&xi, &p), &wi)| {
                let a = Complex64::new(1.0, xi);
                p * a * (-a * x).exp() * wi
            })
            .sum()
    }

    /// Least-squares slope of log|φ| against log(1+|ξ|) over |ξ| ≥ Ξ/4; more
    /// negative means faster decay.
    pub fn decay_exponent(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .grid
            .iter()
            .zip(&self.phi)
            .filter(|(&xi, p)| xi >= self.xi_max / 4.0 && p.norm() > 0.0)
            .map(|(&xi, p)| ((1.0 + xi).ln(), p.norm().ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    /// `xi,re_phi,im_phi` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "xi,re_phi,im_phi")?;
        for (x, p) in self.grid.iter().zip(&self.phi) {
            writeln!(w, "{x:?},{:?},{:?}", p.re, p.im)?;
        }
        Ok(())
    }
}

/// ∫∫ (1+iξ)(1+iξ′)/(2+i(ξ+ξ′)) φ(ξ)φ(ξ′) dξ dξ′ over the profile grid.
pub fn c_chi_double_integral(profile: &FourierProfile) -> Complex64 {
    let w = profile.weights();
    let a: Vec<Complex64> = profile
        .grid
        .iter()
        .zip(&profile.phi)
        .zip(&w)
        .map(|((&xi, &p), &wi)| Complex64::new(1.0, xi) * p * wi)
        .collect();
    let rows: Vec<Complex64> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..a.len() {
                s += a[j] / Complex64::new(2.0, profile.grid[i] + profile.grid[j]);
            }
            s * a[i]
        })
        .collect();
    rows.iter().sum()
}

/// ζ(s) for Re s > 0, s ≠ 1, from
///
/// ```text
/// ζ(s) − 1/(s−1) = Σ_{n≥1} [n^{−s} − ∫_n^{n+1} x^{−s} dx]
/// ```
///
/// with `terms` explicit terms and an Euler–Maclaurin tail. Returns the
/// value and the size of the last tail correction used.
pub fn zeta(s: Complex64, terms: usize) -> Result<(Complex64, f64)> {
    if s.re <= 0.0 || (s - 1.0).norm() < 1e-14 || terms < 10 {
        return Err(invalid!("need Re s > 0, s != 1 and at least 10 terms"));
    }
    let one = Complex64::new(1.0, 0.0);
    let pow = |n: f64, e: Complex64| (e * n.ln()).exp();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=terms {
        let nf = n as f64;
        let int = (pow(nf, one - s) - pow(nf + 1.0, one - s)) / (s - 1.0);
        sum += pow(nf, -s) - int;
    }
    let a = terms as f64 + 1.0;
    let t3 = s * (s + 1.0) * (s + 2.0) * pow(a, -s - 3.0) / 720.0;
    let tail = pow(a, -s) * 0.5 + s * pow(a, -s - 1.0) / 12.0 - t3;
    Ok((one / (s - 1.0) + sum + tail, t3.norm()))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ZetaPoint {
    pub s: f64,
    pub zeta: f64,
    /// (s − 1)ζ(s).
    pub residue_product: f64,
    /// |ζ(s) − 1/(s − 1)|.
    pub regular_part: f64,
    pub tail_estimate: f64,
}

/// ζ at real points s > 1.
pub fn zeta_pole_check(s_values: &[f64]) -> Result<Vec<ZetaPoint>> {
    s_values
        .iter()
        .map(|&s| {
            if !(s > 1.0) {
                return Err(invalid!("s must exceed 1, got {s}"));
            }
            let (z, tail) = zeta(Complex64::new(s, 0.0), 20_000)?;
            Ok(ZetaPoint {
                s,
                zeta: z.re,
                residue_product: (s - 1.0) * z.re,
                regular_part: (z.re - 1.0 / (s - 1.0)).abs(),
                tail_estimate: tail,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EulerComparison {
    pub p: u64,
    pub e_p: Complex64,
    pub e_p_prime: Complex64,
    pub ratio: Complex64,
}

fn p_pow(p: f64, z: Complex64) -> Complex64 {
    (-z * p.ln()).exp()
}

/// Local factors at p for the W-shifted system with frequencies
/// `xi = (ξ_1..ξ_m, ξ′_1..ξ′_m)` and z = (1+iξ)/log R:
///
/// ```text
/// E_p  = Σ_{J ⊆ [m]} P_p(J) ∏_{j∈J} (−p^{−z_j} − p^{−z′_j} + p^{−z_j−z′_j})
/// E′_p = ∏_j (1 − p^{−1−z_j})(1 − p^{−1−z′_j}) / (1 − p^{−1−z_j−z′_j})
/// ```
///
/// where P_p(J) is the density of x ∈ Z_p^t with p | θ_j(x) for all j ∈ J.
pub fn euler_factor_compare(system: &LinearFormsSystem, p: u64, xi: &[f64], log_r: f64) -> Result<EulerComparison> {
    let m = system.len();
    if xi.len() != 2 * m {
        return Err(invalid!("need 2m = {} frequencies, got {}", 2 * m, xi.len()));
    }
    if m > 20 || !(log_r > 0.0) {
        return Err(invalid!("need m <= 20 forms and log R > 0"));
    }
    let pf = p as f64;
    let z: Vec<Complex64> = xi[..m].iter().map(|&x| Complex64::new(1.0, x) / log_r).collect();
    let zp: Vec<Complex64> = xi[m..].iter().map(|&x| Complex64::new(1.0, x) / log_r).collect();
    let local: Vec<Complex64> = (0..m)
        .map(|j| -p_pow(pf, z[j]) - p_pow(pf, zp[j]) + p_pow(pf, z[j] + zp[j]))
        .collect();
    let mut e_p = Complex64::new(0.0, 0.0);
    for mask in 0u32..1 << m {
        let subset: Vec<usize> = (0..m).filter(|&j| mask >> j & 1 == 1).collect();
        let dens = system.divisibility_density(p, &subset)?;
        if dens != 0.0 {
            e_p += subset.iter().fold(Complex64::new(dens, 0.0), |acc, &j| acc * local[j]);
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let e_p_prime = (0..m).fold(one, |acc, j| {
        acc * (one - p_pow(pf, one + z[j])) * (one - p_pow(pf, one + zp[j])) / (one - p_pow(pf, one + z[j] + zp[j]))
    });
    Ok(EulerComparison {
        p,
        e_p,
        e_p_prime,
        ratio: e_p / e_p_prime,
    })
}

/// ∏_{p ≤ w} E′_p(0) for m forms, against (φ(W)/W)^m; returns both.
pub fn small_prime_product(wt: &WTrick, m: usize, log_r: f64) -> (f64, f64) {
    let z = 1.0 / log_r;
    let prod = wt
        .primes()
        .iter()
        .map(|&p| {
            let pf = p as f64;
            ((1.0 - pf.powf(-1.0 - z)).powi(2) / (1.0 - pf.powf(-1.0 - 2.0 * z))).powi(m as i32)
        })
        .product();
    (prod, wt.density().powi(m as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::{c_chi, smooth_bump_cutoff};
    use crate::forms::{kap_forms, LinearForm};
    use crate::sieve::primorial;

    #[test]
    fn phi_matches_closed_form_for_tent() {
        // ∫_{−1}^{1} (1−|x|) e^{ax} dx = (e^a + e^{−a} − 2)/a², a = 1+iξ
        let chi = crate::cutoff::tent_cutoff();
        for xi in [0.0, 0.7, -3.0, 25.0] {
            let a = Complex64::new(1.0, xi);
            let exact = (a.exp() + (-a).exp() - 2.0) / (a * a) / (2.0 * PI);
            assert!((phi_at(&chi, xi).unwrap() - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn small_profile_identities() {
        let chi = smooth_bump_cutoff(0.5).unwrap();
        let prof = fourier_profile(&chi, 60.0, 2401).unwrap();
        assert!(prof.conjugate_symmetry_error() < 1e-14);
        assert!((prof.inversion(0.0) - 1.0).norm() < 1e-4);
        let x = 0.7;
        assert!((prof.inversion(x).re - x.exp() * chi.eval(x)).abs() < 1e-4);
        assert!(fourier_profile(&chi, 10.0, 100).is_err());
    }

    #[test]
    fn zeta_values() {
        let (z2, _) = zeta(Complex64::new(2.0, 0.0), 1000).unwrap();
        assert!((z2.re - PI * PI / 6.0).abs() < 1e-10);
        let (z4, _) = zeta(Complex64::new(4.0, 0.0), 1000).unwrap();
        assert!((z4.re - PI.powi(4) / 90.0).abs() < 1e-12);
        // ζ(1/2) = −1.4603545088...
        let (zh, _) = zeta(Complex64::new(0.5, 0.0), 20_000).unwrap();
        assert!((zh.re + 1.4603545088095868).abs() < 1e-8);
        assert!(zeta(Complex64::new(1.0, 0.0), 100).is_err());
    }

    #[test]
    fn euler_factors() {
        let wt = primorial(3).unwrap();
        let sys = kap_forms(3).unwrap().w_shifted(wt.modulus);
        let xi = [0.3, -1.0, 2.0, 0.5, 0.0, -0.7];
        for p in [2u64, 3] {
            let e = euler_factor_compare(&sys, p, &xi, 5.0).unwrap();
            assert_eq!(e.e_p, Complex64::new(1.0, 0.0));
        }
        // one form, ξ = 0
        let one = LinearFormsSystem::new(1, vec![LinearForm::new(vec![1]).unwrap()]).unwrap().w_shifted(2);
        let lr = 4.0;
        for p in [101u64, 1009] {
            let pf = p as f64;
            let e = euler_factor_compare(&one, p, &[0.0, 0.0], lr).unwrap();
            let expect = 1.0 - 2.0 / pf * pf.powf(-1.0 / lr) + pf.powf(-2.0 / lr) / pf;
            assert!((e.e_p.re - expect).abs() < 1e-15 && e.e_p.im.abs() < 1e-15);
        }
    }

    #[test]
    fn small_primes_approach_totient_density() {
        let wt = primorial(5).unwrap();
        let gaps: Vec<f64> = [2.0f64, 5.0, 20.0, 100.0]
            .iter()
            .map(|&l| {
                let (p, d) = small_prime_product(&wt, 3, l);
                (p / d - 1.0).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn c_chi_two_routes_small() {
        let chi = smooth_bump_cutoff(0.5).unwrap();
        let prof = fourier_profile(&chi, 60.0, 2401).unwrap();
        let v = c_chi_double_integral(&prof);
        assert!((v.re - c_chi(&chi).unwrap()).abs() < 1e-2);
        assert!(v.im.abs() < 1e-6);
    }
}

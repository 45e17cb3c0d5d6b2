//! Multiplicative-function tables and the W-trick.
//!
//! [`SieveTables::build`] runs a linear sieve up to `limit` and keeps the
//! smallest-prime-factor table so that any `n <= limit` can be factored in
//! `O(log n)` steps. For limits too large to hold in memory,
//! [`for_each_prime_segmented`] and [`chebyshev_psi_segmented`] walk the
//! range in power-of-two segments and never materialise more than one
//! segment plus the base primes up to `sqrt(hi)`.
//!
//! # Cache file layout
//!
//! All integers little-endian.
//!
//! | offset | size              | content                                   |
//! |--------|-------------------|-------------------------------------------|
//! | 0      | 8                 | magic `b"GTSIEVE\0"`                      |
//! | 8      | 4                 | format version (`u32`, currently 1)       |
//! | 12     | 8                 | `limit` (`u64`)                           |
//! | 20     | 4·(limit+1)       | smallest prime factor per n (`u32`, 0 for n < 2) |
//! | ...    | limit+1           | Möbius per n (`i8`, 0 at n = 0)           |
//! | ...    | 4·(limit+1)       | totient per n (`u32`, 0 at n = 0)         |
//!
//! Primality and von Mangoldt are derived from the factor table on load.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, out_of_range, Error, Result};

const CACHE_MAGIC: &[u8; 8] = b"GTSIEVE\0";
const CACHE_VERSION: u32 = 1;

/// Largest `w` whose primorial fits in a `u64` (47# ≈ 6.1·10¹⁷; 53# overflows).
pub const MAX_PRIMORIAL_W: u64 = 52;

/// Dense tables of is-prime, μ, Λ and φ for `0..=limit`.
#[derive(Debug, Clone)]
pub struct SieveTables {
    limit: usize,
    spf: Vec<u32>,
    mobius: Vec<i8>,
    mangoldt: Vec<f64>,
    totient: Vec<u32>,
    primes: Vec<u32>,
}

impl SieveTables {
    /// Linear sieve over `0..=limit`.
    pub fn build(limit: usize) -> Result<Self> {
        if limit < 2 {
            return Err(invalid!("sieve limit must be >= 2, got {limit}"));
        }
        if limit > u32::MAX as usize - 1 {
            return Err(out_of_range!(
                "sieve limit {limit} exceeds the in-core table range; use the segmented routines"
            ));
        }
        let n = limit + 1;
        let mut spf = vec![0u32; n];
        let mut mobius = vec![0i8; n];
        let mut totient = vec![0u32; n];
        let mut primes: Vec<u32> = Vec::new();
        mobius[1] = 1;
        totient[1] = 1;
        for i in 2..n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                mobius[i] = -1;
                totient[i] = i as u32 - 1;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let m = i * p as usize;
                if m >= n {
                    break;
                }
                spf[m] = p;
                if p == si {
                    mobius[m] = 0;
                    totient[m] = totient[i] * p;
                } else {
                    mobius[m] = -mobius[i];
                    totient[m] = totient[i] * (p - 1);
                }
            }
        }
        let mangoldt = mangoldt_from_spf(&spf);
        Ok(Self {
            limit,
            spf,
            mobius,
            mangoldt,
            totient,
            primes,
        })
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    fn check(&self, n: u64) -> Result<usize> {
        if n as u128 > self.limit as u128 {
            Err(out_of_range!("{n} exceeds sieve limit {}", self.limit))
        } else {
            Ok(n as usize)
        }
    }

    /// Panics if `n > limit`; use the `try_` variants for checked access.
    pub fn is_prime(&self, n: u64) -> bool {
        let n = n as usize;
        n >= 2 && self.spf[n] as usize == n
    }

    pub fn try_is_prime(&self, n: u64) -> Result<bool> {
        let n = self.check(n)?;
        Ok(n >= 2 && self.spf[n] as usize == n)
    }

    pub fn mobius(&self, n: u64) -> i8 {
        self.mobius[n as usize]
    }

    pub fn mangoldt(&self, n: u64) -> f64 {
        self.mangoldt[n as usize]
    }

    pub fn totient(&self, n: u64) -> u64 {
        self.totient[n as usize] as u64
    }

    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    /// Primes up to `limit`, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn mangoldt_slice(&self) -> &[f64] {
        &self.mangoldt
    }

    /// Distinct prime factors of `1 <= n <= limit`, ascending.
    pub fn distinct_prime_factors(&self, n: u64) -> Result<Vec<u64>> {
        let mut m = self.check(n)?;
        if m == 0 {
            return Err(invalid!("0 has no factorization"));
        }
        let mut out = Vec::new();
        while m > 1 {
            let p = self.spf[m] as usize;
            out.push(p as u64);
            while m % p == 0 {
                m /= p;
            }
        }
        Ok(out)
    }

    /// Σ_{n ≤ x} Λ(n).
    pub fn chebyshev_psi(&self, x: u64) -> Result<f64> {
        let x = self.check(x)?;
        Ok(self.mangoldt[..=x].iter().sum())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.limit as u64).to_le_bytes())?;
        for &s in &self.spf {
            w.write_all(&s.to_le_bytes())?;
        }
        let mob: Vec<u8> = self.mobius.iter().map(|&m| m as u8).collect();
        w.write_all(&mob)?;
        for &t in &self.totient {
            w.write_all(&t.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Format("bad sieve cache magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("unsupported sieve cache version {version}")));
        }
        r.read_exact(&mut b8)?;
        let limit = u64::from_le_bytes(b8) as usize;
        if limit < 2 || limit > u32::MAX as usize - 1 {
            return Err(Error::Format(format!("implausible sieve cache limit {limit}")));
        }
        let n = limit + 1;
        let mut raw = vec![0u8; 4 * n];
        r.read_exact(&mut raw)?;
        let spf: Vec<u32> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let mut mob = vec![0u8; n];
        r.read_exact(&mut mob)?;
        let mobius: Vec<i8> = mob.into_iter().map(|b| b as i8).collect();
        r.read_exact(&mut raw)?;
        let totient: Vec<u32> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let primes = (2..n).filter(|&i| spf[i] as usize == i).map(|i| i as u32).collect();
        let mangoldt = mangoldt_from_spf(&spf);
        Ok(Self {
            limit,
            spf,
            mobius,
            mangoldt,
            totient,
            primes,
        })
    }
}

fn mangoldt_from_spf(spf: &[u32]) -> Vec<f64> {
    let mut out = vec![0.0; spf.len()];
    for n in 2..spf.len() {
        let p = spf[n] as usize;
        let mut m = n;
        while m % p == 0 {
            m /= p;
        }
        if m == 1 {
            out[n] = (p as f64).ln();
        }
    }
    out
}

/// The W-trick modulus: W = ∏_{p ≤ w} p together with φ(W).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WTrick {
    pub w: u64,
    pub modulus: u64,
    pub phi: u64,
}

impl WTrick {
    /// φ(W)/W = ∏_{p ≤ w} (1 − 1/p).
    pub fn density(&self) -> f64 {
        self.phi as f64 / self.modulus as f64
    }

    /// Primes dividing W.
    pub fn primes(&self) -> Vec<u64> {
        small_primes(self.w)
    }
}

/// Builds the W-trick data for threshold `w`.
///
/// W overflows `u64` for `w >= 53`; that case is reported as
/// [`Error::Overflow`].
pub fn primorial(w: u64) -> Result<WTrick> {
    if w < 2 {
        return Err(invalid!("W-trick threshold must be >= 2, got {w}"));
    }
    let mut modulus: u64 = 1;
    let mut phi: u64 = 1;
    for p in small_primes(w) {
        modulus = modulus
            .checked_mul(p)
            .ok_or_else(|| Error::Overflow(format!("primorial of {w} does not fit in u64")))?;
        phi *= p - 1;
    }
    Ok(WTrick { w, modulus, phi })
}

/// Primes `<= x` by trial division; intended for small `x`.
pub fn small_primes(x: u64) -> Vec<u64> {
    (2..=x).filter(|&n| is_prime_trial(n)).collect()
}

/// Deterministic trial division.
pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Λ̃(n) = (φ(W)/W)·log(Wn+1) if Wn+1 is prime, else 0.
pub fn modified_mangoldt(n: u64, wt: &WTrick, tables: &SieveTables) -> Result<f64> {
    let m = wt
        .modulus
        .checked_mul(n)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(|| Error::Overflow(format!("W·{n}+1 overflows u64")))?;
    if tables.try_is_prime(m)? {
        Ok(wt.density() * (m as f64).ln())
    } else {
        Ok(0.0)
    }
}

/// Calls `f(p)` for every prime `p <= hi` in increasing order, sieving
/// segments of `2^segment_log2` integers at a time.
pub fn for_each_prime_segmented<F: FnMut(u64)>(hi: u64, segment_log2: u32, mut f: F) -> Result<()> {
    if !(4..=30).contains(&segment_log2) {
        return Err(invalid!("segment_log2 must lie in 4..=30, got {segment_log2}"));
    }
    if hi < 2 {
        return Ok(());
    }
    let root = (hi as f64).sqrt() as u64 + 1;
    let base = small_primes_sieve(root);
    let seg = 1u64 << segment_log2;
    let mut flags = vec![true; seg as usize];
    let mut lo = 0u64;
    while lo <= hi {
        let top = (lo + seg - 1).min(hi);
        let len = (top - lo + 1) as usize;
        flags[..len].fill(true);
        for &p in &base {
            if p * p > top {
                break;
            }
            let start = (p * p).max(lo.div_ceil(p) * p);
            let mut m = start;
            while m <= top {
                flags[(m - lo) as usize] = false;
                m += p;
            }
        }
        for (i, &is_p) in flags[..len].iter().enumerate() {
            let n = lo + i as u64;
            if is_p && n >= 2 {
                f(n);
            }
        }
        lo = top + 1;
    }
    Ok(())
}

/// ψ(x) = Σ_{n ≤ x} Λ(n) through the segmented sieve: each prime p contributes
/// log p once for every power p^j ≤ x.
pub fn chebyshev_psi_segmented(x: u64, segment_log2: u32) -> Result<f64> {
    let mut total = 0.0;
    for_each_prime_segmented(x, segment_log2, |p| {
        let lp = (p as f64).ln();
        let mut q = p;
        loop {
            total += lp;
            match q.checked_mul(p) {
                Some(next) if next <= x => q = next,
                _ => break,
            }
        }
    })?;
    Ok(total)
}

fn small_primes_sieve(x: u64) -> Vec<u64> {
    let n = x as usize + 1;
    let mut comp = vec![false; n];
    let mut out = Vec::new();
    for i in 2..n {
        if !comp[i] {
            out.push(i as u64);
            let mut m = i * i;
            while m < n {
                comp[m] = true;
                m += i;
            }
        }
    }
    out
}

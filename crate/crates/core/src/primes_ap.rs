//! Direct counts of arithmetic progressions in the primes, the k-AP density
//! of the windowed weight δ_k Λ̃, and progressions of primes ≡ 1 (mod 4)
//! written as sums of two squares.

use std::io::Write;

use rayon::prelude::*;

use crate::cyclic::CyclicFunction;
use crate::error::{invalid, Error, Result};
use crate::sieve::{is_prime_trial, SieveTables, WTrick};

fn check_k(k: usize) -> Result<()> {
    if !(3..=64).contains(&k) {
        return Err(invalid!("progression length k must lie in 3..=64, got {k}"));
    }
    Ok(())
}

/// Calls `f(a, d)` for every AP a, a+d, … with a = `members[i]`, d > 0 and
/// all k terms members and `<= limit`. `members` must be sorted.
fn for_each_ap_from(members: &[u64], i: usize, limit: u64, k: usize, is_member: &dyn Fn(u64) -> bool, f: &mut dyn FnMut(u64, u64)) {
    let a = members[i];
    for &b in &members[i + 1..] {
        let d = b - a;
        if a + (k as u64 - 1) * d > limit {
            break;
        }
        if (2..k as u64).all(|j| is_member(a + j * d)) {
            f(a, d);
        }
    }
}

/// Number of k-APs p, p+d, …, p+(k−1)d of primes with d > 0 and every term
/// at most `n`.
pub fn count_prime_aps(tables: &SieveTables, n: u64, k: usize) -> Result<u64> {
    check_k(k)?;
    if n as u128 > tables.limit() as u128 {
        return Err(Error::OutOfRange(format!("{n} exceeds sieve limit {}", tables.limit())));
    }
    let primes: Vec<u64> = tables.primes().iter().map(|&p| p as u64).take_while(|&p| p <= n).collect();
    let is_member = |m: u64| tables.is_prime(m);
    Ok((0..primes.len())
        .into_par_iter()
        .map(|i| {
            let mut c = 0u64;
            for_each_ap_from(&primes, i, n, k, &is_member, &mut |_, _| c += 1);
            c
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ApCountRow {
    pub n: u64,
    pub k: usize,
    pub count: u64,
    /// N²/logᵏ N.
    pub scale: f64,
    pub ratio: f64,
}

pub fn prime_ap_sweep(tables: &SieveTables, ns: &[u64], k: usize) -> Result<Vec<ApCountRow>> {
    ns.iter()
        .map(|&n| {
            let count = count_prime_aps(tables, n, k)?;
            let nf = n as f64;
            let scale = nf * nf / nf.ln().powi(k as i32);
            Ok(ApCountRow {
                n,
                k,
                count,
                scale,
                ratio: count as f64 / scale,
            })
        })
        .collect()
}

pub fn write_ap_count_csv<W: Write>(rows: &[ApCountRow], mut w: W) -> Result<()> {
    writeln!(w, "N,k,count,scale,ratio")?;
    for r in rows {
        writeln!(w, "{},{},{},{:?},{:?}", r.n, r.k, r.count, r.scale, r.ratio)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WeightedApReport {
    pub modulus: usize,
    pub k: usize,
    /// E_{x,d ∈ Z_N} f(x)f(x+d)⋯f(x+(k−1)d).
    pub density: f64,
    /// The d = 0 part, N^{−2} Σ_x f(x)^k.
    pub trivial_contribution: f64,
    pub nontrivial_contribution: f64,
    /// Pairs (x, d ≠ 0) with every f(x+jd) > 0.
    pub nontrivial_count: u64,
    pub positive: bool,
    /// Nontrivial progressions that fail to be progressions in Z; always 0
    /// when f is supported in [N/2, N).
    pub wraparound_violations: u64,
    /// Unwound progressions W(x+jd)+1 with d > 0 that failed a primality test.
    pub unwound_failures: u64,
    /// Up to `max_examples` unwound prime progressions (increasing).
    pub examples: Vec<Vec<u64>>,
}

/// Exact k-AP density in Z_N of a weight `f` supported on n with Wn+1 prime
/// (such as the windowed δ_k Λ̃), with the d = 0 terms split off. Nontrivial
/// progressions are lifted to Z, unwound through n ↦ Wn+1 and re-tested for
/// primality.
pub fn weighted_ap_density(f: &CyclicFunction, k: usize, wt: &WTrick, max_examples: usize) -> Result<WeightedApReport> {
    check_k(k)?;
    let n = f.modulus();
    let v = f.values();
    if v.iter().any(|&x| x < 0.0) {
        return Err(invalid!("weight must be nonnegative"));
    }
    let support: Vec<usize> = (0..n).filter(|&x| v[x] > 0.0).collect();
    let norm = (n as f64) * (n as f64);
    let trivial: f64 = support.iter().map(|&x| v[x].powi(k as i32)).sum::<f64>() / norm;

    struct Acc {
        sum: f64,
        count: u64,
        wrap: u64,
        fail: u64,
        examples: Vec<Vec<u64>>,
    }
    let half = n.div_ceil(2);
    let accs: Vec<Acc> = support
        .par_iter()
        .map(|&x| {
            let mut acc = Acc {
                sum: 0.0,
                count: 0,
                wrap: 0,
                fail: 0,
                examples: Vec::new(),
            };
            for &y in &support {
                if y == x {
                    continue;
                }
                let d = (y + n - x) % n;
                let mut prod = v[x] * v[y];
                let mut ok = true;
                for j in 2..k {
                    let t = (x + j * d) % n;
                    if v[t] == 0.0 {
                        ok = false;
                        break;
                    }
                    prod *= v[t];
                }
                if !ok {
                    continue;
                }
                acc.sum += prod;
                acc.count += 1;
                // lift with d in (−N/2, N/2]
                let dz = if d > n / 2 { d as i64 - n as i64 } else { d as i64 };
                let terms: Vec<i64> = (0..k as i64).map(|j| x as i64 + j * dz).collect();
                if terms.iter().any(|&t| t < half as i64 || t >= n as i64) {
                    acc.wrap += 1;
                    continue;
                }
                if dz > 0 {
                    let unwound: Vec<u64> = terms
                        .iter()
                        .map(|&t| wt.modulus.checked_mul(t as u64).and_then(|m| m.checked_add(1)).unwrap_or(0))
                        .collect();
                    if !unwound.iter().all(|&p| is_prime_trial(p)) {
                        acc.fail += 1;
                    } else if acc.examples.len() < max_examples {
                        acc.examples.push(unwound);
                    }
                }
            }
            acc
        })
        .collect();

    let mut nontrivial = 0.0;
    let (mut count, mut wrap, mut fail) = (0, 0, 0);
    let mut examples = Vec::new();
    for a in accs {
        nontrivial += a.sum;
        count += a.count;
        wrap += a.wrap;
        fail += a.fail;
        for e in a.examples {
            if examples.len() < max_examples {
                examples.push(e);
            }
        }
    }
    let nontrivial = nontrivial / norm;
    Ok(WeightedApReport {
        modulus: n,
        k,
        density: trivial + nontrivial,
        trivial_contribution: trivial,
        nontrivial_contribution: nontrivial,
        nontrivial_count: count,
        positive: nontrivial > 0.0,
        wraparound_violations: wrap,
        unwound_failures: fail,
        examples,
    })
}

/// (a, b) with a ≤ b and a² + b² = n, if any.
pub fn two_squares(n: u64) -> Option<(u64, u64)> {
    let mut a = 0u64;
    while 2 * a * a <= n {
        let rest = n - a * a;
        let b = rest.isqrt();
        if b * b == rest {
            return Some((a, b));
        }
        a += 1;
    }
    None
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TwoSquaresAp {
    pub terms: Vec<u64>,
    pub squares: Vec<(u64, u64)>,
}

/// Up to `max_results` k-APs of primes ≡ 1 (mod 4) below `n`, ordered by
/// first term then difference, each term with a two-squares decomposition.
pub fn two_squares_ap_demo(tables: &SieveTables, n: u64, k: usize, max_results: usize) -> Result<Vec<TwoSquaresAp>> {
    check_k(k)?;
    if n as u128 > tables.limit() as u128 {
        return Err(Error::OutOfRange(format!("{n} exceeds sieve limit {}", tables.limit())));
    }
    let members: Vec<u64> = tables
        .primes()
        .iter()
        .map(|&p| p as u64)
        .take_while(|&p| p <= n)
        .filter(|p| p % 4 == 1)
        .collect();
    let is_member = |m: u64| m % 4 == 1 && tables.is_prime(m);
    let mut out = Vec::new();
    for i in 0..members.len() {
        if out.len() >= max_results {
            break;
        }
        let mut found = Vec::new();
        for_each_ap_from(&members, i, n, k, &is_member, &mut |a, d| found.push((a, d)));
        for (a, d) in found.into_iter().take(max_results - out.len()) {
            let terms: Vec<u64> = (0..k as u64).map(|j| a + j * d).collect();
            let squares = terms
                .iter()
                .map(|&t| two_squares(t).ok_or_else(|| Error::Numeric(format!("{t} has no two-squares form"))))
                .collect::<Result<Vec<_>>>()?;
            out.push(TwoSquaresAp { terms, squares });
        }
    }
    Ok(out)
}

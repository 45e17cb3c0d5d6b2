//! Linear forms, the k-AP form system and its 2-blow-up, and estimators for
//! averages of products of a weight along a system of forms.
//!
//! For k-APs the forms are ψ_j(x) = Σ_{i ≠ j} (j − i) x_i for j = 1..k,
//! so for k = 3, with (x, y, z) = (x_1, x_2, x_3):
//!
//! ```text
//! ψ_1 = −y − 2z,   ψ_2 = x − z,   ψ_3 = 2x + y.
//! ```
//!
//! The 2-blow-up has variables x_i^{(0)}, x_i^{(1)} (index `2(i−1) + b`) and
//! one form per (j, ω), ω ∈ {0,1}^{[k]∖{j}}: Σ_{i ≠ j} (j − i) x_i^{(ω_i)}.
//! Forms are listed by j ascending, then ω read as a binary number whose
//! bit ℓ is ω of the ℓ-th index i ≠ j (ascending i).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::contract::{self, Factor};
use crate::cutoff::{c_chi, CutoffFunction, DivisorSumEvaluator};
use crate::cyclic::CyclicFunction;
use crate::error::{invalid, out_of_range, Error, Result};
use crate::sieve::WTrick;

/// Default operation budget for exact contractions (enough for k = 3 at N = 60).
pub const DEFAULT_EXACT_BUDGET: f64 = 4e9;

/// Number of independent RNG streams a Monte-Carlo run is split into. Fixed,
/// so results do not depend on the thread count.
pub const MC_STREAMS: u64 = 64;

/// θ(x) = w_scale · Σ coeffs[i]·x[i] + constant.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LinearForm {
    pub coeffs: Vec<i64>,
    pub constant: i64,
    pub w_scale: i64,
}

impl LinearForm {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.iter().all(|&c| c == 0) {
            return Err(invalid!("a linear form needs a nonzero coefficient"));
        }
        Ok(Self {
            coeffs,
            constant: 0,
            w_scale: 1,
        })
    }

    /// The W-shifted form W·ψ + 1.
    pub fn w_shifted(&self, w_modulus: u64) -> Self {
        Self {
            coeffs: self.coeffs.clone(),
            constant: 1,
            w_scale: w_modulus as i64,
        }
    }

    pub fn psi(&self, x: &[i64]) -> i64 {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn eval(&self, x: &[i64]) -> i64 {
        self.w_scale * self.psi(x) + self.constant
    }

    /// ψ(x) mod n for residues `x`.
    pub fn psi_mod(&self, x: &[usize], n: usize) -> usize {
        let n = n as i64;
        let mut acc: i64 = 0;
        for (c, &v) in self.coeffs.iter().zip(x) {
            acc = (acc + c.rem_euclid(n) * v as i64) % n;
        }
        acc as usize
    }

    fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&i| self.coeffs[i] != 0).collect()
    }

    /// Whether the homogeneous parts are rational multiples of each other.
    pub fn proportional_to(&self, other: &Self) -> bool {
        let (a, b) = (&self.coeffs, &other.coeffs);
        a.len() == b.len() && (0..a.len()).all(|l| (0..a.len()).all(|m| a[l] * b[m] == a[m] * b[l]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LinearFormsSystem {
    pub t: usize,
    pub forms: Vec<LinearForm>,
    pub pairwise_independent: bool,
}

impl LinearFormsSystem {
    pub fn new(t: usize, forms: Vec<LinearForm>) -> Result<Self> {
        if let Some(f) = forms.iter().find(|f| f.coeffs.len() != t) {
            return Err(invalid!("form has {} coefficients but the system has t = {t}", f.coeffs.len()));
        }
        let pairwise_independent = forms
            .iter()
            .enumerate()
            .all(|(i, f)| forms[i + 1..].iter().all(|g| !f.proportional_to(g)));
        Ok(Self {
            t,
            forms,
            pairwise_independent,
        })
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn w_shifted(&self, w_modulus: u64) -> Self {
        Self {
            t: self.t,
            forms: self.forms.iter().map(|f| f.w_shifted(w_modulus)).collect(),
            pairwise_independent: self.pairwise_independent,
        }
    }

    /// Density in Z_p^t of the x with p | θ_j(x) for every j in `subset`.
    ///
    /// Solved by row reduction over F_p: p^{−rank} when the affine system is
    /// consistent, 0 otherwise.
    pub fn divisibility_density(&self, p: u64, subset: &[usize]) -> Result<f64> {
        if p < 2 {
            return Err(invalid!("modulus {p} is not prime"));
        }
        let pi = p as i128;
        let mut rows: Vec<Vec<i128>> = Vec::new();
        for &j in subset {
            let f = self
                .forms
                .get(j)
                .ok_or_else(|| invalid!("form index {j} out of range"))?;
            let mut row: Vec<i128> = f
                .coeffs
                .iter()
                .map(|&c| ((c as i128) * (f.w_scale as i128)).rem_euclid(pi))
                .collect();
            row.push((-(f.constant as i128)).rem_euclid(pi));
            rows.push(row);
        }
        let t = self.t;
        let mut rank = 0;
        for col in 0..t {
            let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
                continue;
            };
            rows.swap(rank, piv);
            let inv = mod_pow(rows[rank][col], pi - 2, pi);
            for v in rows[rank].iter_mut() {
                *v = (*v * inv).rem_euclid(pi);
            }
            for r in 0..rows.len() {
                if r != rank && rows[r][col] != 0 {
                    let factor = rows[r][col];
                    for c in 0..=t {
                        rows[r][c] = (rows[r][c] - factor * rows[rank][c]).rem_euclid(pi);
                    }
                }
            }
            rank += 1;
        }
        if rows[rank..].iter().any(|row| row[t] != 0) {
            return Ok(0.0);
        }
        Ok((p as f64).powi(-(rank as i32)))
    }
}

fn mod_pow(mut b: i128, mut e: i128, m: i128) -> i128 {
    let mut r = 1;
    b = b.rem_euclid(m);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// The k forms ψ_j(x) = Σ_{i≠j} (j − i) x_i on t = k variables.
pub fn kap_forms(k: usize) -> Result<LinearFormsSystem> {
    if k < 3 {
        return Err(invalid!("k must be >= 3, got {k}"));
    }
    let forms = (1..=k)
        .map(|j| LinearForm::new((1..=k).map(|i| j as i64 - i as i64).collect()))
        .collect::<Result<Vec<_>>>()?;
    LinearFormsSystem::new(k, forms)
}

/// Index of variable x_i^{(b)} (i is 1-based) in the blow-up system.
pub fn blowup_var(i: usize, b: usize) -> usize {
    2 * (i - 1) + b
}

/// The k·2^{k−1} forms of the 2-blow-up, on 2k variables.
pub fn blowup_system(k: usize) -> Result<LinearFormsSystem> {
    if k < 3 {
        return Err(invalid!("k must be >= 3, got {k}"));
    }
    let mut forms = Vec::with_capacity(k << (k - 1));
    for j in 1..=k {
        let others: Vec<usize> = (1..=k).filter(|&i| i != j).collect();
        for omega in 0..(1usize << (k - 1)) {
            let mut coeffs = vec![0i64; 2 * k];
            for (bit, &i) in others.iter().enumerate() {
                let b = (omega >> bit) & 1;
                coeffs[blowup_var(i, b)] = j as i64 - i as i64;
            }
            forms.push(LinearForm::new(coeffs)?);
        }
    }
    LinearFormsSystem::new(2 * k, forms)
}

/// Exponents n_{j,ω} ∈ {0,1}, one per blow-up form, in blow-up form order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Pattern(pub Vec<bool>);

impl Pattern {
    pub fn all_ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn all_zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn single(len: usize, idx: usize) -> Self {
        let mut v = vec![false; len];
        v[idx] = true;
        Self(v)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Compact hex label, form 0 in the lowest bit.
    pub fn label(&self) -> String {
        let mut s = String::new();
        for chunk in self.0.chunks(4).rev() {
            let v = chunk.iter().enumerate().fold(0u8, |a, (i, &b)| a | ((b as u8) << i));
            s.push(char::from_digit(v as u32, 16).unwrap());
        }
        s
    }
}

/// The space of exponent assignments for the k-AP blow-up.
#[derive(Debug, Clone, Copy)]
pub struct PatternSpace {
    pub k: usize,
    pub factors: usize,
}

/// Largest pattern space that [`PatternSpace::enumerate`] will list.
pub const MAX_ENUMERATED_PATTERNS: u32 = 16;

pub fn blowup_exponent_patterns(k: usize) -> Result<PatternSpace> {
    if !(3..=8).contains(&k) {
        return Err(invalid!("pattern spaces are supported for 3 <= k <= 8, got {k}"));
    }
    Ok(PatternSpace {
        k,
        factors: k << (k - 1),
    })
}

impl PatternSpace {
    /// log₂ of the number of patterns.
    pub fn log2_count(&self) -> usize {
        self.factors
    }

    /// Every pattern (only for k = 3's 2¹² = 4096 patterns).
    pub fn enumerate(&self) -> Result<impl Iterator<Item = Pattern> + '_> {
        if self.factors > MAX_ENUMERATED_PATTERNS as usize {
            return Err(Error::BudgetExceeded(format!(
                "2^{} patterns is too many to enumerate; sample instead",
                self.factors
            )));
        }
        Ok((0u64..(1u64 << self.factors)).map(move |m| Pattern((0..self.factors).map(|i| (m >> i) & 1 == 1).collect())))
    }

    /// All-ones, then every single-factor pattern, then `extra` uniformly
    /// random patterns.
    pub fn sample(&self, extra: usize, seed: u64) -> Vec<Pattern> {
        let mut out = vec![Pattern::all_ones(self.factors)];
        out.extend((0..self.factors).map(|i| Pattern::single(self.factors, i)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..extra {
            out.push(Pattern((0..self.factors).map(|_| rng.random_bool(0.5)).collect()));
        }
        out
    }
}

fn check_pattern(system: &LinearFormsSystem, pattern: &Pattern) -> Result<()> {
    if pattern.0.len() != system.len() {
        return Err(invalid!(
            "pattern has {} exponents but the system has {} forms",
            pattern.0.len(),
            system.len()
        ));
    }
    Ok(())
}

/// E_{x ∈ Z_N^t} ∏_{j selected} ν(ψ_j(x)), evaluated exactly by contraction.
pub fn lf_expectation_exact(
    nu: &CyclicFunction,
    system: &LinearFormsSystem,
    pattern: &Pattern,
    budget: f64,
) -> Result<f64> {
    check_pattern(system, pattern)?;
    let n = nu.modulus();
    let mut factors = Vec::new();
    for j in pattern.selected() {
        let form = &system.forms[j];
        let vars = form.support();
        let coeffs: Vec<i64> = vars.iter().map(|&v| form.coeffs[v].rem_euclid(n as i64)).collect();
        let vals = nu.values();
        factors.push(Factor::from_fn(vars, n, |a| {
            let s = a.iter().zip(&coeffs).fold(0i64, |acc, (&ai, &c)| (acc + c * ai as i64) % n as i64);
            vals[s as usize]
        })?);
    }
    contract::average(factors, n, budget)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub streams: u64,
    pub antithetic: bool,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

/// Runs `draw` over `samples` draws split across [`MC_STREAMS`] seeded
/// ChaCha streams; per-stream moments are merged in stream order.
fn run_streams<F>(samples: u64, seed: u64, draw: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let per = samples / MC_STREAMS;
    let extra = samples % MC_STREAMS;
    let parts: Vec<Moments> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let count = per + u64::from(s < extra);
            let mut m = Moments {
                count,
                ..Default::default()
            };
            for _ in 0..count {
                let v = draw(&mut rng);
                m.sum += v;
                m.sum_sq += v * v;
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), |a, b| Moments {
        count: a.count + b.count,
        sum: a.sum + b.sum,
        sum_sq: a.sum_sq + b.sum_sq,
    })
}

fn finish(m: Moments) -> (f64, f64) {
    let n = m.count as f64;
    let mean = m.sum / n;
    let var = if m.count > 1 {
        ((m.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// Monte-Carlo estimate of the same expectation as [`lf_expectation_exact`].
///
/// With `antithetic`, each draw averages the product at x and at −x; the
/// reported sample count is the number of such pairs.
pub fn lf_expectation_mc(
    nu: &CyclicFunction,
    system: &LinearFormsSystem,
    pattern: &Pattern,
    samples: u64,
    seed: u64,
    antithetic: bool,
) -> Result<McEstimate> {
    check_pattern(system, pattern)?;
    if samples < 1000 {
        return Err(invalid!("Monte-Carlo runs need at least 10^3 samples, got {samples}"));
    }
    let n = nu.modulus();
    let selected: Vec<&LinearForm> = pattern.selected().map(|j| &system.forms[j]).collect();
    let t = system.t;
    let vals = nu.values();
    let product = |x: &[usize]| -> f64 { selected.iter().map(|f| vals[f.psi_mod(x, n)]).product() };
    let m = run_streams(samples, seed, |rng| {
        let mut x = [0usize; 64];
        let x = &mut x[..t];
        for v in x.iter_mut() {
            *v = rng.random_range(0..n);
        }
        if antithetic {
            let a = product(x);
            for v in x.iter_mut() {
                *v = (n - *v) % n;
            }
            0.5 * (a + product(x))
        } else {
            product(x)
        }
    });
    let (estimate, stderr) = finish(m);
    Ok(McEstimate {
        estimate,
        stderr,
        samples,
        seed,
        streams: MC_STREAMS,
        antithetic,
    })
}

/// A product of integer intervals [a_i, b_i).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IntBox {
    pub intervals: Vec<(i64, i64)>,
}

impl IntBox {
    pub fn new(intervals: Vec<(i64, i64)>) -> Result<Self> {
        if let Some(&(a, b)) = intervals.iter().find(|(a, b)| b <= a) {
            return Err(invalid!("empty interval [{a}, {b})"));
        }
        Ok(Self { intervals })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Prop82Report {
    pub m: usize,
    pub t: usize,
    pub r: f64,
    pub w: u64,
    pub c_chi: f64,
    pub samples: u64,
    pub seed: u64,
    /// MC estimate of E_{x∈B} ∏ Λ_{χ,R}(θ_i(x))².
    pub estimate: f64,
    pub stderr: f64,
    /// (W c_χ log R / φ(W))^m.
    pub predicted: f64,
    pub ratio: f64,
    /// 95% normal interval for the ratio.
    pub ratio_ci: (f64, f64),
    /// For m = 1 with a unit coefficient: the exact large-box value
    /// (log R)² Σ_{d,d'} μ(d)μ(d')χ(·)χ(·)/lcm(d,d') over d, d' coprime to W.
    pub finite_r_main_term: Option<f64>,
}

/// Monte-Carlo check of the divisor-sum moment estimate over a box.
pub fn prop82_experiment(
    system: &LinearFormsSystem,
    bx: &IntBox,
    r: f64,
    chi: &CutoffFunction,
    wt: &WTrick,
    samples: u64,
    seed: u64,
) -> Result<Prop82Report> {
    if !system.pairwise_independent {
        return Err(invalid!("forms must be pairwise independent"));
    }
    if bx.intervals.len() != system.t {
        return Err(invalid!("box has {} sides but the system has t = {}", bx.intervals.len(), system.t));
    }
    let c = c_chi(chi)?;
    let m = system.len();
    let predicted = (wt.modulus as f64 * c * r.ln() / wt.phi as f64).powi(m as i32);
    let base = Prop82Report {
        m,
        t: system.t,
        r,
        w: wt.w,
        c_chi: c,
        samples,
        seed,
        estimate: 1.0,
        stderr: 0.0,
        predicted,
        ratio: 1.0,
        ratio_ci: (1.0, 1.0),
        finite_r_main_term: None,
    };
    if m == 0 {
        return Ok(base);
    }
    if samples < 1000 {
        return Err(invalid!("Monte-Carlo runs need at least 10^3 samples, got {samples}"));
    }
    let shifted = system.w_shifted(wt.modulus);
    for f in &shifted.forms {
        let (lo, hi) = form_range(f, bx)?;
        if lo < 1 {
            return Err(out_of_range!("θ takes the value {lo} < 1 on the box"));
        }
        if hi > u64::MAX as i128 {
            return Err(out_of_range!("θ exceeds the 64-bit range on the box"));
        }
    }
    let ev = DivisorSumEvaluator::new(r, chi)?;
    let mo = run_streams(samples, seed, |rng| {
        let mut x = [0i64; 64];
        let x = &mut x[..system.t];
        for (v, &(a, b)) in x.iter_mut().zip(&bx.intervals) {
            *v = rng.random_range(a..b);
        }
        shifted
            .forms
            .iter()
            .map(|f| {
                let l = ev.eval(f.eval(x) as u64).expect("θ checked positive");
                l * l
            })
            .product()
    });
    let (estimate, stderr) = finish(mo);
    let finite_r_main_term = if m == 1 && system.forms[0].coeffs.iter().any(|c| c.abs() == 1) {
        Some(divisor_sum_second_moment(r, chi, wt)?)
    } else {
        None
    };
    Ok(Prop82Report {
        estimate,
        stderr,
        ratio: estimate / predicted,
        ratio_ci: ((estimate - 1.96 * stderr) / predicted, (estimate + 1.96 * stderr) / predicted),
        finite_r_main_term,
        ..base
    })
}

fn form_range(f: &LinearForm, bx: &IntBox) -> Result<(i128, i128)> {
    let mut lo: i128 = f.constant as i128;
    let mut hi: i128 = f.constant as i128;
    for (&c, &(a, b)) in f.coeffs.iter().zip(&bx.intervals) {
        let c = c as i128 * f.w_scale as i128;
        let (u, v) = (c * a as i128, c * (b as i128 - 1));
        lo += u.min(v);
        hi += u.max(v);
    }
    Ok((lo, hi))
}

/// (log R)² Σ_{d,d' ≤ R^supp, squarefree, (dd', W) = 1} μ(d)μ(d')χ(log d/log R)χ(log d'/log R)/lcm(d,d').
///
/// This is the exact mean of Λ_{χ,R}(Wx+1)² over any run of x whose length
/// is a multiple of every lcm(d, d').
pub fn divisor_sum_second_moment(r: f64, chi: &CutoffFunction, wt: &WTrick) -> Result<f64> {
    let log_r = r.ln();
    let bound = (chi.support_radius() * log_r).exp() * (1.0 + 1e-12);
    if bound > 1e6 {
        return Err(invalid!("R^support = {bound:.3e} too large for the double divisor sum"));
    }
    let small = crate::sieve::small_primes(wt.w);
    let limit = bound.floor() as usize;
    let tables = crate::sieve::SieveTables::build(limit.max(2))?;
    let ds: Vec<(u64, f64)> = (1..=limit as u64)
        .filter(|&d| tables.mobius(d) != 0 && small.iter().all(|p| d % p != 0))
        .map(|d| (d, tables.mobius(d) as f64 * chi.eval((d as f64).ln() / log_r)))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    let gcd = |mut a: u64, mut b: u64| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let mut total = 0.0;
    for &(d, a) in &ds {
        for &(e, b) in &ds {
            let g = gcd(d, e);
            total += a * b * g as f64 / (d as f64 * e as f64);
        }
    }
    Ok(log_r * log_r * total)
}

/// Fraction of the Q^t boxes B_u = ∏ [u_j N/Q, (u_j+1)N/Q) whose image
/// under some form meets both [N/2, N) and its complement in Z_N.
pub fn bad_box_fraction(system: &LinearFormsSystem, n: usize, q: usize) -> Result<f64> {
    if q == 0 || q > n {
        return Err(invalid!("need 1 <= Q <= N, got Q = {q}"));
    }
    let t = system.t;
    let total = q.checked_pow(t as u32).filter(|&c| c <= 50_000_000).ok_or_else(|| {
        Error::BudgetExceeded(format!("{q}^{t} boxes"))
    })?;
    let nf = n as f64;
    let half = nf / 2.0;
    let mut bad = 0usize;
    let mut u = vec![0usize; t];
    for _ in 0..total {
        let is_bad = system.forms.iter().any(|f| {
            // real image of the box is the open interval (lo, hi)
            let mut lo = 0.0;
            let mut hi = 0.0;
            for (&c, &uj) in f.coeffs.iter().zip(&u) {
                let a = c as f64 * uj as f64 * nf / q as f64;
                let b = c as f64 * (uj + 1) as f64 * nf / q as f64;
                lo += a.min(b);
                hi += a.max(b);
            }
            // crosses a point ≡ 0 or N/2 (mod N) strictly inside
            let first = (lo / half).floor() + 1.0;
            first * half < hi
        });
        if is_bad {
            bad += 1;
        }
        for d in (0..t).rev() {
            u[d] += 1;
            if u[d] < q {
                break;
            }
            u[d] = 0;
        }
    }
    Ok(bad as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::{smooth_bump_cutoff, tent_cutoff};
    use crate::sieve::primorial;

    fn random_nu(n: usize, seed: u64) -> CyclicFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CyclicFunction::from_fn(n, |_| rng.random_range(0.0..2.0))
    }

    #[test]
    fn three_ap_forms() {
        let s = kap_forms(3).unwrap();
        let c: Vec<Vec<i64>> = s.forms.iter().map(|f| f.coeffs.clone()).collect();
        assert_eq!(c, vec![vec![0, -1, -2], vec![1, 0, -1], vec![2, 1, 0]]);
        assert!(s.pairwise_independent);
        assert!(kap_forms(2).is_err());
    }

    #[test]
    fn four_ap_forms() {
        // ψ_4 = 3w+2x+y, ψ_3 = 2w+x−z, ψ_2 = w−y−2z, ψ_1 = −x−2y−3z
        let s = kap_forms(4).unwrap();
        let c: Vec<Vec<i64>> = s.forms.iter().rev().map(|f| f.coeffs.clone()).collect();
        assert_eq!(
            c,
            vec![vec![3, 2, 1, 0], vec![2, 1, 0, -1], vec![1, 0, -1, -2], vec![0, -1, -2, -3]]
        );
    }

    #[test]
    fn forms_trace_a_progression() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 3..=7 {
            let s = kap_forms(k).unwrap();
            for _ in 0..200 {
                let x: Vec<i64> = (0..k).map(|_| rng.random_range(-1000..1000)).collect();
                let start = s.forms[0].psi(&x);
                let d: i64 = x.iter().sum();
                for (j, f) in s.forms.iter().enumerate() {
                    assert_eq!(f.psi(&x), start + j as i64 * d);
                }
            }
        }
    }

    #[test]
    fn blowup_shape() {
        let s = blowup_system(3).unwrap();
        assert_eq!(s.len(), 12);
        assert_eq!(s.t, 6);
        assert!(s.pairwise_independent);
        assert_eq!(blowup_system(4).unwrap().len(), 32);
        let space = blowup_exponent_patterns(3).unwrap();
        assert_eq!(space.enumerate().unwrap().count(), 4096);
        assert!(blowup_exponent_patterns(5).unwrap().enumerate().is_err());
        let sample = blowup_exponent_patterns(4).unwrap().sample(5, 3);
        assert_eq!(sample[0], Pattern::all_ones(32));
        assert_eq!(sample.len(), 1 + 32 + 5);
    }

    #[test]
    fn exact_trivial_cases() {
        let s = blowup_system(3).unwrap();
        let one = CyclicFunction::constant(11, 1.0);
        for p in blowup_exponent_patterns(3).unwrap().sample(10, 0) {
            assert!((lf_expectation_exact(&one, &s, &p, DEFAULT_EXACT_BUDGET).unwrap() - 1.0).abs() < 1e-12);
        }
        let nu = random_nu(11, 5);
        let empty = lf_expectation_exact(&nu, &s, &Pattern::all_zeros(12), DEFAULT_EXACT_BUDGET).unwrap();
        assert_eq!(empty, 1.0);
        for i in 0..12 {
            let v = lf_expectation_exact(&nu, &s, &Pattern::single(12, i), DEFAULT_EXACT_BUDGET).unwrap();
            assert!((v - nu.mean()).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_refuses_large_instances() {
        let s = blowup_system(3).unwrap();
        let nu = CyclicFunction::constant(200, 1.0);
        let r = lf_expectation_exact(&nu, &s, &Pattern::all_ones(12), DEFAULT_EXACT_BUDGET);
        assert!(matches!(r, Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn translation_invariance() {
        let s = blowup_system(3).unwrap();
        let nu = random_nu(13, 9);
        let shifted = nu.translate(5);
        for p in blowup_exponent_patterns(3).unwrap().sample(6, 2) {
            let a = lf_expectation_exact(&nu, &s, &p, DEFAULT_EXACT_BUDGET).unwrap();
            let b = lf_expectation_exact(&shifted, &s, &p, DEFAULT_EXACT_BUDGET).unwrap();
            assert!((a - b).abs() < 1e-11 * a.abs().max(1.0), "{} {a} {b}", p.label());
        }
    }

    #[test]
    fn mc_basics() {
        let s = blowup_system(3).unwrap();
        let one = CyclicFunction::constant(11, 1.0);
        let e = lf_expectation_mc(&one, &s, &Pattern::all_ones(12), 5000, 3, false).unwrap();
        assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
        assert!(lf_expectation_mc(&one, &s, &Pattern::all_ones(12), 999, 3, false).is_err());
        let nu = random_nu(11, 4);
        let a = lf_expectation_mc(&nu, &s, &Pattern::all_ones(12), 20_000, 42, false).unwrap();
        let b = lf_expectation_mc(&nu, &s, &Pattern::all_ones(12), 20_000, 42, false).unwrap();
        assert_eq!(a, b);
        let exact = lf_expectation_exact(&nu, &s, &Pattern::all_ones(12), DEFAULT_EXACT_BUDGET).unwrap();
        assert!((a.estimate - exact).abs() <= 4.0 * a.stderr);
        let anti = lf_expectation_mc(&nu, &s, &Pattern::all_ones(12), 20_000, 42, true).unwrap();
        assert!((anti.estimate - exact).abs() <= 4.0 * anti.stderr);
    }

    #[test]
    fn divisibility_densities() {
        let s = kap_forms(3).unwrap();
        let wt = primorial(3).unwrap();
        let sh = s.w_shifted(wt.modulus);
        for p in [2u64, 3] {
            assert_eq!(sh.divisibility_density(p, &[0]).unwrap(), 0.0);
            assert_eq!(sh.divisibility_density(p, &[]).unwrap(), 1.0);
        }
        for p in [5u64, 7, 11, 101] {
            let pf = p as f64;
            assert!((sh.divisibility_density(p, &[1]).unwrap() - 1.0 / pf).abs() < 1e-15);
            assert!((sh.divisibility_density(p, &[0, 2]).unwrap() - 1.0 / (pf * pf)).abs() < 1e-15);
            // the three forms are affinely dependent: ψ_1 − 2ψ_2 + ψ_3 = 0
            assert!((sh.divisibility_density(p, &[0, 1, 2]).unwrap() - 1.0 / (pf * pf)).abs() < 1e-15);
        }
        // brute-force count at p = 7
        let p = 7usize;
        let mut count = 0;
        for x in 0..p {
            for y in 0..p {
                for z in 0..p {
                    let v = [x as i64, y as i64, z as i64];
                    if sh.forms[0].eval(&v).rem_euclid(7) == 0 && sh.forms[2].eval(&v).rem_euclid(7) == 0 {
                        count += 1;
                    }
                }
            }
        }
        assert!((count as f64 / 343.0 - sh.divisibility_density(7, &[0, 2]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn prop82_trivial_and_plumbing() {
        let wt = primorial(2).unwrap();
        let empty = LinearFormsSystem::new(1, vec![]).unwrap();
        let bx = IntBox::new(vec![(1, 1000)]).unwrap();
        let rep = prop82_experiment(&empty, &bx, 10.0, &tent_cutoff(), &wt, 1000, 0).unwrap();
        assert_eq!((rep.estimate, rep.predicted), (1.0, 1.0));

        let id = LinearFormsSystem::new(1, vec![LinearForm::new(vec![1]).unwrap()]).unwrap();
        let bx = IntBox::new(vec![(1, 1_000_000)]).unwrap();
        let chi = smooth_bump_cutoff(0.5).unwrap();
        let a = prop82_experiment(&id, &bx, 20.0, &chi, &wt, 20_000, 1).unwrap();
        let b = prop82_experiment(&id, &bx, 20.0, &chi.dilate(0.5).unwrap(), &wt, 20_000, 1).unwrap();
        // dilating by 1/2 halves c_χ, so the prediction halves
        assert!((b.predicted / a.predicted - 0.5).abs() < 1e-9);
        assert!(a.finite_r_main_term.is_some());
        let bad = IntBox::new(vec![(-5, 10)]).unwrap();
        assert!(matches!(
            prop82_experiment(&id, &bad, 20.0, &chi, &wt, 2000, 1),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn second_moment_matches_direct_average() {
        // over a full period of the lcm's, the box average is exact
        let wt = primorial(2).unwrap();
        let chi = tent_cutoff();
        let r = 12.0;
        let ev = DivisorSumEvaluator::new(r, &chi).unwrap();
        // lcm of all odd squarefree d <= 12: 3·5·7·11 = 1155, applied to x ↦ 2x+1
        let period = 1155i64;
        let mean: f64 = (0..period)
            .map(|x| {
                let l = ev.eval((2 * x + 1) as u64).unwrap();
                l * l
            })
            .sum::<f64>()
            / period as f64;
        let m = divisor_sum_second_moment(r, &chi, &wt).unwrap();
        assert!((mean - m).abs() < 1e-9 * m, "{mean} vs {m}");
    }

    #[test]
    fn bad_boxes_become_rare() {
        let s = kap_forms(3).unwrap();
        let f8 = bad_box_fraction(&s, 1001, 8).unwrap();
        let f32 = bad_box_fraction(&s, 1001, 32).unwrap();
        assert!(f32 < f8);
        assert!(f32 * 32.0 < 20.0);
    }
}

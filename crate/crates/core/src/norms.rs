//! Cut norms, the Gowers-type U² bound, generalized convolutions and the
//! strong linear-forms quantities.
//!
//! Bipartite cut norm of a matrix g on X × Y:
//!
//! ```text
//! ‖g‖_□ = sup_{A ⊆ X, B ⊆ Y} |E_{x,y} g(x,y) 1_A(x) 1_B(y)|
//! ```
//!
//! For a function on Z_N and r ≥ 2, with sets A_j ⊆ Z_N^{r−1} indexed by
//! x_{−j} (the other r − 1 coordinates in increasing order, row-major):
//!
//! ```text
//! ‖f‖_{□,r} = sup |E_x f(x_1 + ⋯ + x_r) ∏_j 1_{A_j}(x_{−j})|
//! ```
//!
//! For r = 2 this is the bipartite norm of g(x_1, x_2) = f(x_1 + x_2), with
//! A_1 a set of columns (x_2) and A_2 a set of rows (x_1).

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};

use crate::cyclic::CyclicFunction;
use crate::error::{invalid, Error, Result};

/// Largest enumerated side for [`cutnorm_bipartite_exact`].
pub const MAX_EXACT_SIDE: usize = 25;

/// Restarts used when a heuristic is picked automatically.
pub const DEFAULT_RESTARTS: usize = 32;

/// Work limit (tuples of Z_N^r per sweep) for the r ≥ 3 coordinate ascent.
pub const MAX_ZN_TUPLES: usize = 1 << 25;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CutNormResult {
    pub value: f64,
    /// One index list per set. Bipartite: `[A (rows), B (columns)]`. On Z_N:
    /// `[A_1, …, A_r]` as flattened indices into Z_N^{r−1}.
    pub witness: Vec<Vec<usize>>,
    /// false for heuristic lower bounds.
    pub exact: bool,
}

/// E_{x,y} g(x,y) 1_A(x) 1_B(y).
pub fn bilinear_value(g: &Array2<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let mut s = 0.0;
    for &x in rows {
        let row = g.row(x);
        for &y in cols {
            s += row[y];
        }
    }
    s / (g.nrows() * g.ncols()) as f64
}

fn check_matrix(g: &Array2<f64>) -> Result<()> {
    if g.is_empty() {
        return Err(invalid!("empty matrix"));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("matrix has non-finite entries"));
    }
    Ok(())
}

/// Columns where `sign · colsum > 0`.
fn sign_cols(colsum: &[f64], sign: f64) -> Vec<usize> {
    (0..colsum.len()).filter(|&y| sign * colsum[y] > 0.0).collect()
}

fn result_from_rows(g: &Array2<f64>, rows: Vec<usize>, sign: f64, exact: bool) -> CutNormResult {
    let mut colsum = vec![0.0; g.ncols()];
    for &x in &rows {
        for (c, v) in colsum.iter_mut().zip(g.row(x)) {
            *c += v;
        }
    }
    let cols = sign_cols(&colsum, sign);
    let value = bilinear_value(g, &rows, &cols).abs();
    CutNormResult {
        value,
        witness: vec![rows, cols],
        exact,
    }
}

/// Exact bipartite cut norm by enumerating subsets of the smaller side.
///
/// For fixed A the best B takes the columns whose A-sum has the chosen
/// sign, so only 2^min(nX, nY) sets are visited, in Gray-code order with
/// incremental column sums. The work is split into a fixed number of
/// chunks by the high bits, so the result does not depend on the number of
/// threads.
pub fn cutnorm_bipartite_exact(g: &Array2<f64>) -> Result<CutNormResult> {
    check_matrix(g)?;
    let transpose = g.nrows() > g.ncols();
    let m: Array2<f64> = if transpose { g.t().to_owned() } else { g.clone() };
    let r = enumerate_rows(&m, false)?;
    Ok(if transpose {
        let mut w = r.witness;
        w.swap(0, 1);
        CutNormResult { witness: w, ..r }
    } else {
        r
    })
}

/// Exact ‖·‖_□ of g(x,y) = d(x+y). Translating A by t and B by −t leaves
/// the objective unchanged, so only sets A containing 0 are enumerated.
pub fn cutnorm_sum_exact(d: &CyclicFunction) -> Result<CutNormResult> {
    let m = sum_matrix(d);
    check_matrix(&m)?;
    enumerate_rows(&m, true)
}

fn enumerate_rows(m: &Array2<f64>, pin_first: bool) -> Result<CutNormResult> {
    let s = m.nrows();
    if s > MAX_EXACT_SIDE {
        return Err(Error::BudgetExceeded(format!(
            "exact cut norm enumerates 2^{s} sets (limit 2^{MAX_EXACT_SIDE}); use the heuristic"
        )));
    }
    let n = m.ncols();
    let rows: Vec<Vec<f64>> = m.axis_iter(Axis(0)).map(|r| r.to_vec()).collect();
    // free bits are rows[offset..]
    let offset = usize::from(pin_first && s > 1);
    let free = s - offset;
    let chunk_bits = free.min(6);
    let low = free - chunk_bits;
    let chunks: Vec<(f64, u64, f64)> = (0..1u64 << chunk_bits)
        .into_par_iter()
        .map(|h| {
            let mut mask = (h << low << offset) | offset as u64;
            let mut colsum = vec![0.0; n];
            let mut pos = 0.0;
            let mut tot = 0.0;
            for (i, row) in rows.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for (c, v) in colsum.iter_mut().zip(row) {
                        *c += v;
                    }
                }
            }
            for &c in &colsum {
                pos += c.max(0.0);
                tot += c;
            }
            let pick = |pos: f64, tot: f64| if pos - tot > pos { (pos - tot, -1.0) } else { (pos, 1.0) };
            let (v, sg) = pick(pos, tot);
            let mut best = (v, mask, sg);
            for t in 1u64..(1u64 << low) {
                let bit = t.trailing_zeros() as usize + offset;
                mask ^= 1 << bit;
                let sign = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                pos = 0.0;
                tot = 0.0;
                for (c, v) in colsum.iter_mut().zip(&rows[bit]) {
                    let u = *c + sign * v;
                    *c = u;
                    pos += u.max(0.0);
                    tot += u;
                }
                let (v, sg) = pick(pos, tot);
                if v > best.0 {
                    best = (v, mask, sg);
                }
            }
            best
        })
        .collect();
    let mut best = chunks[0];
    for &c in &chunks[1..] {
        if c.0 > best.0 {
            best = c;
        }
    }
    if best.0 <= 0.0 {
        return Ok(CutNormResult {
            value: 0.0,
            witness: vec![vec![], vec![]],
            exact: true,
        });
    }
    let set: Vec<usize> = (0..s).filter(|&i| best.1 >> i & 1 == 1).collect();
    Ok(result_from_rows(m, set, best.2, true))
}

/// Lower bound on the bipartite cut norm by alternating maximization.
///
/// Each restart draws a random row set from its own seeded stream, then for
/// both signs alternates "best columns for these rows" and "best rows for
/// these columns" until the objective stops improving.
pub fn cutnorm_bipartite_heuristic(g: &Array2<f64>, restarts: usize, seed: u64) -> Result<CutNormResult> {
    check_matrix(g)?;
    if restarts == 0 {
        return Err(invalid!("need at least one restart"));
    }
    let (nr, nc) = g.dim();
    let runs: Vec<(f64, Vec<usize>, f64)> = (0..restarts as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let start: Vec<bool> = (0..nr).map(|_| rng.random_bool(0.5)).collect();
            let mut best = (f64::NEG_INFINITY, Vec::new(), 1.0);
            for sign in [1.0, -1.0] {
                let mut in_a = start.clone();
                let mut current = f64::NEG_INFINITY;
                loop {
                    let mut colsum = vec![0.0; nc];
                    for x in (0..nr).filter(|&x| in_a[x]) {
                        for (c, v) in colsum.iter_mut().zip(g.row(x)) {
                            *c += v;
                        }
                    }
                    let in_b: Vec<bool> = colsum.iter().map(|&c| sign * c > 0.0).collect();
                    let mut value = 0.0;
                    for x in 0..nr {
                        let rs: f64 = g.row(x).iter().zip(&in_b).filter(|(_, &b)| b).map(|(v, _)| v).sum();
                        in_a[x] = sign * rs > 0.0;
                        if in_a[x] {
                            value += sign * rs;
                        }
                    }
                    if value <= current + 1e-15 * value.abs() {
                        break;
                    }
                    current = value;
                }
                if current > best.0 {
                    best = (current, (0..nr).filter(|&x| in_a[x]).collect(), sign);
                }
            }
            best
        })
        .collect();
    let mut best = &runs[0];
    for r in &runs[1..] {
        if r.0 > best.0 {
            best = r;
        }
    }
    Ok(result_from_rows(g, best.1.clone(), best.2, false))
}

/// Exact when the smaller side is at most [`MAX_EXACT_SIDE`], otherwise the
/// heuristic with [`DEFAULT_RESTARTS`] restarts.
pub fn cutnorm_bipartite(g: &Array2<f64>, seed: u64) -> Result<CutNormResult> {
    if g.nrows().min(g.ncols()) <= MAX_EXACT_SIDE {
        cutnorm_bipartite_exact(g)
    } else {
        cutnorm_bipartite_heuristic(g, DEFAULT_RESTARTS, seed)
    }
}

/// The matrix g(x_1, x_2) = f(x_1 + x_2).
pub fn sum_matrix(f: &CyclicFunction) -> Array2<f64> {
    let n = f.modulus();
    Array2::from_shape_fn((n, n), |(a, b)| f.values()[(a + b) % n])
}

/// Settings for the Z_N cut norm.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ZnCutConfig {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ZnCutConfig {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

/// ‖f‖_{□,r}. Exact for r = 2 and N ≤ [`MAX_EXACT_SIDE`]; otherwise a
/// heuristic lower bound.
pub fn cutnorm_zn(f: &CyclicFunction, r: usize, cfg: &ZnCutConfig) -> Result<CutNormResult> {
    if r < 2 {
        return Err(invalid!("cut norm order r must be >= 2, got {r}"));
    }
    if r == 2 {
        let res = if f.modulus() <= MAX_EXACT_SIDE {
            cutnorm_sum_exact(f)?
        } else {
            cutnorm_bipartite_heuristic(&sum_matrix(f), cfg.restarts, cfg.seed)?
        };
        // rows are x_1 (set A_2), columns x_2 (set A_1)
        let mut w = res.witness;
        w.swap(0, 1);
        return Ok(CutNormResult { witness: w, ..res });
    }
    cutnorm_zn_twisted(f, &vec![1; r], cfg)
}

/// Fixed-size bitset over Z_N^{r−1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_indices(len: usize, idx: &[usize]) -> Self {
        let mut b = Self::new(len);
        for &i in idx {
            b.set(i, true);
        }
        b
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }
}

/// Flattened index of x_{−j} in Z_N^{r−1}.
#[inline]
fn minus_index(x: &[usize], j: usize, n: usize) -> usize {
    x.iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .fold(0, |acc, (_, &v)| acc * n + v)
}

/// E_x f(Σ c_i x_i) ∏_j 1_{A_j}(x_{−j}).
pub fn twisted_cut_value(f: &CyclicFunction, coeffs: &[i64], sets: &[Bitset]) -> Result<f64> {
    let n = f.modulus();
    let r = coeffs.len();
    let cells = check_twisted(n, r, sets.len())?;
    if sets.iter().any(|s| s.len() != cells) {
        return Err(invalid!("each set must live in Z_N^{}", r - 1));
    }
    let cs: Vec<usize> = coeffs.iter().map(|&c| c.rem_euclid(n as i64) as usize).collect();
    let mut x = vec![0usize; r];
    let mut total = 0.0;
    for _ in 0..cells * n {
        if (0..r).all(|j| sets[j].get(minus_index(&x, j, n))) {
            let s = x.iter().zip(&cs).fold(0, |a, (&v, &c)| (a + v * c) % n);
            total += f.values()[s];
        }
        odometer(&mut x, n);
    }
    Ok(total / (cells * n) as f64)
}

fn odometer(x: &mut [usize], n: usize) {
    for d in (0..x.len()).rev() {
        x[d] += 1;
        if x[d] < n {
            return;
        }
        x[d] = 0;
    }
}

fn check_twisted(n: usize, r: usize, nsets: usize) -> Result<usize> {
    if r < 2 || nsets != r {
        return Err(invalid!("need r >= 2 coefficients and r sets"));
    }
    let tuples = n
        .checked_pow(r as u32)
        .filter(|&t| t <= MAX_ZN_TUPLES)
        .ok_or_else(|| Error::BudgetExceeded(format!("N^r = {n}^{r} tuples per sweep")))?;
    Ok(tuples / n)
}

/// Heuristic lower bound for sup |E f(Σ c_i x_i) ∏ 1_{A_j}(x_{−j})| by
/// cyclic coordinate ascent over the r indicator tensors.
pub fn cutnorm_zn_twisted(f: &CyclicFunction, coeffs: &[i64], cfg: &ZnCutConfig) -> Result<CutNormResult> {
    let n = f.modulus();
    let r = coeffs.len();
    let cells = check_twisted(n, r, r)?;
    if cfg.restarts == 0 {
        return Err(invalid!("need at least one restart"));
    }
    let cs: Vec<usize> = coeffs.iter().map(|&c| c.rem_euclid(n as i64) as usize).collect();
    let runs: Vec<(f64, Vec<Bitset>)> = (0..cfg.restarts as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            let start: Vec<Bitset> = (0..r)
                .map(|_| {
                    let mut b = Bitset::new(cells);
                    for c in 0..cells {
                        b.set(c, rng.random_bool(0.5));
                    }
                    b
                })
                .collect();
            let mut best = (f64::NEG_INFINITY, start.clone());
            for sign in [1.0, -1.0] {
                let mut sets = start.clone();
                let mut current = f64::NEG_INFINITY;
                for _sweep in 0..100 {
                    let mut value = 0.0;
                    for j in 0..r {
                        // coefficient of each cell of A_j given the others
                        let mut coef = vec![0.0; cells];
                        let mut x = vec![0usize; r];
                        for _ in 0..cells * n {
                            if (0..r).all(|i| i == j || sets[i].get(minus_index(&x, i, n))) {
                                let s = x.iter().zip(&cs).fold(0, |a, (&v, &c)| (a + v * c) % n);
                                coef[minus_index(&x, j, n)] += f.values()[s];
                            }
                            odometer(&mut x, n);
                        }
                        value = 0.0;
                        for (c, &v) in coef.iter().enumerate() {
                            let on = sign * v > 0.0;
                            sets[j].set(c, on);
                            if on {
                                value += sign * v;
                            }
                        }
                    }
                    if value <= current + 1e-15 * value.abs() {
                        break;
                    }
                    current = value;
                }
                if current > best.0 {
                    best = (current, sets);
                }
            }
            best
        })
        .collect();
    let mut best = &runs[0];
    for run in &runs[1..] {
        if run.0 > best.0 {
            best = run;
        }
    }
    let value = twisted_cut_value(f, coeffs, &best.1)?.abs();
    Ok(CutNormResult {
        value,
        witness: best.1.iter().map(Bitset::ones).collect(),
        exact: false,
    })
}

fn clamp_fourth(m4: f64) -> f64 {
    if m4 < -1e-9 {
        log::warn!("fourth moment {m4:.3e} is negative beyond rounding; clamping to 0");
    }
    m4.max(0.0)
}

/// E_{x,x′,y,y′} h(x,y)h(x′,y)h(x,y′)h(x′,y′), as E_{y,y′} G(y,y′)² with
/// G = hᵀh / nX.
pub fn gowers_fourth_moment_matrix(h: &Array2<f64>) -> f64 {
    let g = h.t().dot(h) / h.nrows() as f64;
    g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64
}

/// (E[h(x,y)h(x′,y)h(x,y′)h(x′,y′)])^{1/4}, the bound dominating ‖h‖_□.
pub fn gowers_u2_bound_matrix(h: &Array2<f64>) -> f64 {
    clamp_fourth(gowers_fourth_moment_matrix(h)).powf(0.25)
}

/// Fourth moment of h(x,y) = f(x+y) as Σ_ξ |f̂(ξ)|⁴, f̂(ξ) = E_x f(x)e(−xξ/N).
pub fn gowers_fourth_moment_cyclic(f: &CyclicFunction) -> f64 {
    let n = f.modulus();
    let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    buf.iter().map(|c| (c.norm_sqr() / (nf * nf)).powi(2)).sum()
}

/// The same fourth moment as E_u c(u)², c(u) = E_a f(a)f(a+u); O(N²).
pub fn gowers_fourth_moment_cyclic_direct(f: &CyclicFunction) -> f64 {
    let n = f.modulus();
    let v = f.values();
    (0..n)
        .into_par_iter()
        .map(|u| {
            let c = (0..n).map(|a| v[a] * v[(a + u) % n]).sum::<f64>() / n as f64;
            c * c
        })
        .collect::<Vec<_>>()
        .iter()
        .sum::<f64>()
        / n as f64
}

pub fn gowers_u2_bound_cyclic(f: &CyclicFunction) -> f64 {
    clamp_fourth(gowers_fourth_moment_cyclic(f)).powf(0.25)
}

/// h_1 * h_2 (z) = E_x h_1(x) h_2(z − x).
pub fn convolve(h1: &CyclicFunction, h2: &CyclicFunction) -> Result<CyclicFunction> {
    let n = h1.modulus();
    if h2.modulus() != n {
        return Err(invalid!("moduli differ"));
    }
    Ok(CyclicFunction::from_fn(n, |z| {
        (0..n).map(|x| h1.values()[x] * h2.values()[(z + n - x) % n]).sum::<f64>() / n as f64
    }))
}

/// (h_1, …, h_r)^*(x) = E_{y_1+⋯+y_r = x} h_1(y_{−1}) ⋯ h_r(y_{−r}), each
/// h_j given densely on Z_N^{r−1} (row-major over y_{−j}).
pub fn generalized_convolution(hs: &[Vec<f64>], n: usize) -> Result<CyclicFunction> {
    let r = hs.len();
    let cells = check_twisted(n, r, r)?;
    if hs.iter().any(|h| h.len() != cells) {
        return Err(invalid!("each h_j needs N^{} values", r - 1));
    }
    let mut out = vec![0.0; n];
    let mut y = vec![0usize; r];
    // enumerate y_1..y_{r−1} and x; y_r is determined
    for _ in 0..cells {
        let partial = y[..r - 1].iter().sum::<usize>() % n;
        for (x, slot) in out.iter_mut().enumerate() {
            y[r - 1] = (x + n - partial) % n;
            let mut prod = 1.0;
            for (j, h) in hs.iter().enumerate() {
                prod *= h[minus_index(&y, j, n)];
            }
            *slot += prod;
        }
        y[r - 1] = 0;
        odometer(&mut y[..r - 1], n);
    }
    CyclicFunction::new(out.into_iter().map(|v| v / cells as f64).collect())
}

/// For r = 2: the product (h_1,h_2)^* · (h_1′,h_2′)^* written as an average
/// over z_1 + z_2 = 0 of convolutions of shifted products,
///
/// ```text
/// E_{z_2} (h_1 · h_1′(· + z_2), h_2 · h_2′(· − z_2))^*
/// ```
pub fn convolution_product_expansion(
    h1: &CyclicFunction,
    h2: &CyclicFunction,
    h1p: &CyclicFunction,
    h2p: &CyclicFunction,
) -> Result<CyclicFunction> {
    let n = h1.modulus();
    if [h2, h1p, h2p].iter().any(|h| h.modulus() != n) {
        return Err(invalid!("moduli differ"));
    }
    let mut acc = vec![0.0; n];
    for z2 in 0..n as i64 {
        let a = h1.zip_with(&h1p.translate(z2), |p, q| p * q)?;
        let b = h2.zip_with(&h2p.translate(-z2), |p, q| p * q)?;
        let conv = generalized_convolution(&[a.into_values(), b.into_values()], n)?;
        for (s, v) in acc.iter_mut().zip(conv.values()) {
            *s += v;
        }
    }
    CyclicFunction::new(acc.into_iter().map(|v| v / n as f64).collect())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StrongLfReport {
    /// Indexed by replacement pattern: bit 0 replaces g(x,z), bit 1
    /// g(x,z′), bit 2 g(y,z), bit 3 g(y,z′) by its g̃ counterpart.
    pub values: Vec<f64>,
    pub max_abs: f64,
}

/// E[(ν(x,y) − 1) g(x,z) g(x,z′) g(y,z) g(y,z′)] for all 16 ways of
/// replacing some of the four g factors by g̃.
///
/// `g_xz`, `gt_xz` are X × Z; `g_yz`, `gt_yz` are Y × Z; `nu_xy` is X × Y.
pub fn strong_lf_check(
    nu_xy: &Array2<f64>,
    g_xz: &Array2<f64>,
    g_yz: &Array2<f64>,
    gt_xz: &Array2<f64>,
    gt_yz: &Array2<f64>,
) -> Result<StrongLfReport> {
    let (nx, ny) = nu_xy.dim();
    let nz = g_xz.ncols();
    if g_xz.dim() != (nx, nz) || gt_xz.dim() != (nx, nz) || g_yz.dim() != (ny, nz) || gt_yz.dim() != (ny, nz) {
        return Err(invalid!("matrix shapes are inconsistent"));
    }
    let centred = nu_xy.mapv(|v| v - 1.0);
    let xz = [g_xz, gt_xz];
    let yz = [g_yz, gt_yz];
    // codegree through z for every (xz choice, yz choice)
    let mut cod: Vec<Array2<f64>> = Vec::with_capacity(4);
    for a in xz {
        for b in yz {
            cod.push(a.dot(&b.t()) / nz as f64);
        }
    }
    let values: Vec<f64> = (0..16u8)
        .map(|p| {
            let c1 = &cod[2 * (p & 1) as usize + (p >> 2 & 1) as usize];
            let c2 = &cod[2 * (p >> 1 & 1) as usize + (p >> 3 & 1) as usize];
            let s: f64 = ndarray::Zip::from(&centred)
                .and(c1)
                .and(c2)
                .fold(0.0, |acc, &a, &b, &c| acc + a * b * c);
            s / (nx * ny) as f64
        })
        .collect();
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(StrongLfReport { values, max_abs })
}

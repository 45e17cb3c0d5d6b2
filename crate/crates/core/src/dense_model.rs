//! Bounded models for unbounded weights on Z_N: given f ≥ 0, search for
//! f̃: Z_N → [0,1] with small ‖f − f̃‖_{□,2}.
//!
//! Cutting-plane min–max. A witness pair (A, B) acts on D = f − f̃ through
//! the linear functional
//!
//! ```text
//! ⟨D, w_AB⟩ = E_{x,y} D(x+y) 1_A(x) 1_B(y),   w_AB(s) = #{(x,y) ∈ A×B : x+y = s}/N².
//! ```
//!
//! Each round minimises max over the collected pairs of |⟨f − f̃, w_AB⟩| over
//! the box by projected subgradient steps (c/√t along the normalised active
//! w_AB), then asks the cut-norm oracle for the most violated pair at the
//! new point. The reported gap is the best oracle value seen so far.

use ndarray::Array2;

use crate::cyclic::CyclicFunction;
use crate::error::{invalid, Result};
use crate::norms::{bilinear_value, cutnorm_bipartite_heuristic, cutnorm_sum_exact, sum_matrix, CutNormResult, MAX_EXACT_SIDE};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Separation {
    Exact,
    Heuristic { restarts: usize },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelSearchConfig {
    pub max_rounds: usize,
    pub separation: Separation,
    pub tol: f64,
    /// c in the step size c/√t.
    pub step_scale: f64,
    /// Subgradient steps per round.
    pub inner_iters: usize,
    /// Stop after this many rounds without a better oracle value.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ModelSearchConfig {
    fn default() -> Self {
        Self {
            max_rounds: 40,
            separation: Separation::Exact,
            tol: 1e-3,
            step_scale: 0.5,
            inner_iters: 400,
            patience: 6,
            seed: 0,
        }
    }
}

impl ModelSearchConfig {
    fn validate(&self) -> Result<()> {
        if self.max_rounds == 0
            || !(self.tol > 0.0)
            || !(self.step_scale > 0.0)
            || self.inner_iters == 0
            || self.patience == 0
        {
            return Err(invalid!("need max_rounds, inner_iters, patience >= 1 and tol, step_scale > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WitnessPair {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    /// ⟨f − f̃, w_AB⟩ at the returned f̃.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Oracle value ‖f − f̃‖ at this round's iterate.
    pub oracle_value: f64,
    /// Inner min–max objective over the collected pairs.
    pub objective: f64,
    /// Best oracle value so far (non-increasing).
    pub gap: f64,
    pub witnesses: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    Stalled,
    MaxRounds,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DenseModel {
    pub ftilde: CyclicFunction,
    /// Best verified value of ‖f − f̃‖_{□,2} (exact when `exact_gap`).
    pub achieved_gap: f64,
    pub exact_gap: bool,
    /// Oracle value at or below `tol`.
    pub converged: bool,
    pub stop_reason: StopReason,
    pub rounds: usize,
    /// The oracle's witness at the returned f̃, followed by every collected pair.
    pub certificate: Vec<WitnessPair>,
    pub trace: Vec<RoundRecord>,
}

fn oracle(d: &CyclicFunction, cfg: &ModelSearchConfig) -> Result<CutNormResult> {
    match cfg.separation {
        Separation::Exact => cutnorm_sum_exact(d),
        Separation::Heuristic { restarts } => cutnorm_bipartite_heuristic(&sum_matrix(d), restarts, cfg.seed),
    }
}

fn pair_weights(n: usize, a: &[usize], b: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for &x in a {
        for &y in b {
            w[(x + y) % n] += 1.0;
        }
    }
    let scale = 1.0 / (n * n) as f64;
    w.iter_mut().for_each(|v| *v *= scale);
    w
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// max over pairs of |⟨f − f̃, w⟩|, with the maximising index and sign.
fn inner_objective(f: &[f64], ft: &[f64], ws: &[Vec<f64>]) -> (f64, usize, f64) {
    let mut best = (0.0, 0, 1.0);
    for (i, w) in ws.iter().enumerate() {
        let v: f64 = f.iter().zip(ft).zip(w).map(|((a, b), c)| (a - b) * c).sum();
        if v.abs() > best.0 || i == 0 {
            best = (v.abs(), i, if v >= 0.0 { 1.0 } else { -1.0 });
        }
    }
    best
}

pub fn find_dense_model(f: &CyclicFunction, cfg: &ModelSearchConfig) -> Result<DenseModel> {
    cfg.validate()?;
    let n = f.modulus();
    if f.values().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid!("f must be finite and nonnegative"));
    }
    if cfg.separation == Separation::Exact && n > MAX_EXACT_SIDE {
        return Err(invalid!("exact separation needs N <= {MAX_EXACT_SIDE}; use the heuristic"));
    }
    let exact_gap = cfg.separation == Separation::Exact;
    let fv = f.values().to_vec();
    let mut ft: Vec<f64> = fv.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut ws: Vec<Vec<f64>> = Vec::new();
    let mut pairs: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<f64>, CutNormResult)> = None;
    let mut stop_reason = StopReason::MaxRounds;
    let mut since_improved = 0;
    let mut rounds = 0;
    for round in 1..=cfg.max_rounds {
        rounds = round;
        let d = CyclicFunction::new(fv.iter().zip(&ft).map(|(a, b)| a - b).collect())?;
        let cut = oracle(&d, cfg)?;
        let objective = if ws.is_empty() { 0.0 } else { inner_objective(&fv, &ft, &ws).0 };
        if best.as_ref().is_none_or(|b| cut.value < b.0) {
            best = Some((cut.value, ft.clone(), cut.clone()));
            since_improved = 0;
        } else {
            since_improved += 1;
        }
        let gap = best.as_ref().unwrap().0;
        trace.push(RoundRecord {
            round,
            oracle_value: cut.value,
            objective,
            gap,
            witnesses: ws.len(),
        });
        if cut.value <= cfg.tol {
            stop_reason = StopReason::Tolerance;
            break;
        }
        if since_improved >= cfg.patience {
            stop_reason = StopReason::Stalled;
            break;
        }
        if round == cfg.max_rounds {
            break;
        }
        // rows are x (set A), columns y (set B)
        ws.push(pair_weights(n, &cut.witness[0], &cut.witness[1]));
        pairs.push((cut.witness[0].clone(), cut.witness[1].clone()));
        // projected subgradient on max_i |⟨f − f̃, w_i⟩|
        let mut x = ft.clone();
        let mut inner_best = (inner_objective(&fv, &x, &ws).0, x.clone());
        for t in 1..=cfg.inner_iters {
            let (val, i, sign) = inner_objective(&fv, &x, &ws);
            if val < inner_best.0 {
                inner_best = (val, x.clone());
            }
            let norm = dot(&ws[i], &ws[i]).sqrt();
            if norm == 0.0 || val == 0.0 {
                break;
            }
            let step = cfg.step_scale / (t as f64).sqrt();
            for (xi, wi) in x.iter_mut().zip(&ws[i]) {
                *xi = (*xi + step * sign * wi / norm).clamp(0.0, 1.0);
            }
        }
        let last = inner_objective(&fv, &x, &ws).0;
        if last < inner_best.0 {
            inner_best = (last, x);
        }
        ft = inner_best.1;
    }
    let (gap, ft_best, cut) = best.expect("at least one round");
    let ftilde = CyclicFunction::new(ft_best)?;
    let d = f.sub(&ftilde)?;
    let dm = sum_matrix(&d);
    let mut certificate = vec![WitnessPair {
        violation: bilinear_value(&dm, &cut.witness[0], &cut.witness[1]),
        a: cut.witness[0].clone(),
        b: cut.witness[1].clone(),
    }];
    for (a, b) in pairs {
        certificate.push(WitnessPair {
            violation: bilinear_value(&dm, &a, &b),
            a,
            b,
        });
    }
    Ok(DenseModel {
        ftilde,
        achieved_gap: gap,
        exact_gap,
        converged: stop_reason == StopReason::Tolerance,
        stop_reason,
        rounds,
        certificate,
        trace,
    })
}

/// Value of E_{x,y} (f − f̃)(x+y) 1_A(x) 1_B(y).
pub fn witness_value(f: &CyclicFunction, ftilde: &CyclicFunction, a: &[usize], b: &[usize]) -> Result<f64> {
    let d = f.sub(ftilde)?;
    let m: Array2<f64> = sum_matrix(&d);
    Ok(bilinear_value(&m, a, b))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanReport {
    pub mean_f: f64,
    pub mean_ftilde: f64,
    pub mean_gap: f64,
    pub cut_gap: f64,
    pub holds: bool,
}

/// |mean f − mean f̃| against a cut-norm gap; A = B = Z_N shows the first
/// never exceeds the second.
pub fn mean_preservation_check(f: &CyclicFunction, ftilde: &CyclicFunction, cut_gap: f64) -> Result<MeanReport> {
    if f.modulus() != ftilde.modulus() {
        return Err(invalid!("moduli differ"));
    }
    let mean_gap = (f.mean() - ftilde.mean()).abs();
    Ok(MeanReport {
        mean_f: f.mean(),
        mean_ftilde: ftilde.mean(),
        mean_gap,
        cut_gap,
        holds: mean_gap <= cut_gap + 1e-12,
    })
}

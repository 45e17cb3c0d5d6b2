//! Exact averages of products of small dense tensors by variable elimination.
//!
//! Every variable ranges over `0..n`. A [`Factor`] is a dense row-major
//! array over a sorted list of variables. [`average`] computes
//!
//! ```text
//! E_{x ∈ [n]^t} ∏_f f(x|vars(f))
//! ```
//!
//! by repeatedly picking the variable whose elimination touches the fewest
//! distinct variables, multiplying the factors that mention it and averaging
//! it out. Eliminating a variable whose neighbourhood (itself included) has
//! `s` variables costs `n^s · (#factors involved)` multiply-adds; the plan's
//! total is checked against a budget before any work is done.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    vars: Vec<usize>,
    data: Vec<f64>,
}

impl Factor {
    /// `vars` must be strictly increasing and `data.len() == n^vars.len()`.
    pub fn new(vars: Vec<usize>, data: Vec<f64>, n: usize) -> Result<Self> {
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("factor variables must be strictly increasing".into()));
        }
        let expect = n.checked_pow(vars.len() as u32).unwrap_or(usize::MAX);
        if data.len() != expect {
            return Err(Error::InvalidArgument(format!(
                "factor over {} variables needs {expect} entries, got {}",
                vars.len(),
                data.len()
            )));
        }
        Ok(Self { vars, data })
    }

    /// Tabulates `f` over all assignments of `vars` (last variable fastest).
    pub fn from_fn(vars: Vec<usize>, n: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = n.checked_pow(vars.len() as u32).ok_or_else(|| {
            Error::BudgetExceeded(format!("factor of {} variables over {n} values", vars.len()))
        })?;
        let mut idx = vec![0usize; vars.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for d in (0..idx.len()).rev() {
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self::new(vars, data, n)
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Elimination order and its predicted cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub order: Vec<usize>,
    /// Predicted multiply-adds.
    pub cost: f64,
    /// Largest intermediate tensor, in entries.
    pub peak_entries: f64,
}

/// Greedy min-neighbourhood elimination plan.
pub fn plan(factor_vars: &[Vec<usize>], n: usize) -> Plan {
    let mut scopes: Vec<Vec<usize>> = factor_vars.to_vec();
    let mut remaining: Vec<usize> = scopes.iter().flatten().copied().collect();
    remaining.sort_unstable();
    remaining.dedup();
    let nf = n as f64;
    let mut order = Vec::new();
    let mut cost = 0.0;
    let mut peak: f64 = scopes.iter().map(|s| nf.powi(s.len() as i32)).fold(1.0, f64::max);
    while !remaining.is_empty() {
        let mut best: Option<(usize, usize, usize)> = None;
        for &v in &remaining {
            let mut union: Vec<usize> = scopes.iter().filter(|s| s.contains(&v)).flatten().copied().collect();
            union.sort_unstable();
            union.dedup();
            let touching = scopes.iter().filter(|s| s.contains(&v)).count();
            let key = (union.len(), touching, v);
            if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
        let (size, touching, v) = best.expect("remaining is nonempty");
        cost += nf.powi(size as i32) * touching.max(1) as f64;
        peak = peak.max(nf.powi(size as i32 - 1));
        let mut merged: Vec<usize> = Vec::new();
        scopes.retain(|s| {
            if s.contains(&v) {
                merged.extend(s.iter().copied().filter(|&u| u != v));
                false
            } else {
                true
            }
        });
        merged.sort_unstable();
        merged.dedup();
        scopes.push(merged);
        remaining.retain(|&u| u != v);
        order.push(v);
    }
    Plan {
        order,
        cost,
        peak_entries: peak,
    }
}

/// Average over `[n]^t` of the product of `factors`. Variables that appear in
/// no factor contribute a factor of one. Refuses with
/// [`Error::BudgetExceeded`] when the plan costs more than `budget`.
pub fn average(factors: Vec<Factor>, n: usize, budget: f64) -> Result<f64> {
    let scopes: Vec<Vec<usize>> = factors.iter().map(|f| f.vars.clone()).collect();
    let p = plan(&scopes, n);
    if p.cost > budget {
        return Err(Error::BudgetExceeded(format!(
            "exact contraction needs ~{:.3e} operations (budget {budget:.3e}); use the Monte-Carlo estimator",
            p.cost
        )));
    }
    let mut factors = factors;
    for v in p.order {
        let (involved, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        factors.push(eliminate(&involved, v, n));
    }
    Ok(factors.iter().map(|f| f.data[0]).product())
}

/// Multiplies `involved` and averages variable `v` out.
fn eliminate(involved: &[Factor], v: usize, n: usize) -> Factor {
    let mut union: Vec<usize> = involved.iter().flat_map(|f| f.vars.iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    let out_vars: Vec<usize> = union.iter().copied().filter(|&u| u != v).collect();
    // loop order: output variables (row-major), then v innermost
    let mut loop_vars = out_vars.clone();
    loop_vars.push(v);
    let dims = loop_vars.len();
    let strides: Vec<Vec<usize>> = involved
        .iter()
        .map(|f| {
            loop_vars
                .iter()
                .map(|u| match f.vars.iter().position(|w| w == u) {
                    Some(pos) => n.pow((f.vars.len() - 1 - pos) as u32),
                    None => 0,
                })
                .collect()
        })
        .collect();
    let out_len = n.pow(out_vars.len() as u32);
    let mut out = vec![0.0; out_len];
    let mut idx = vec![0usize; dims];
    let mut offs = vec![0usize; involved.len()];
    let inv_n = 1.0 / n as f64;
    let inner = strides.iter().map(|s| s[dims - 1]).collect::<Vec<_>>();
    for slot in out.iter_mut() {
        // inner loop over v
        let mut acc = 0.0;
        let mut o = offs.clone();
        for _ in 0..n {
            let mut prod = 1.0;
            for (fi, f) in involved.iter().enumerate() {
                prod *= f.data[o[fi]];
            }
            acc += prod;
            for fi in 0..o.len() {
                o[fi] += inner[fi];
            }
        }
        *slot = acc * inv_n;
        // advance the output odometer
        for d in (0..dims - 1).rev() {
            idx[d] += 1;
            for fi in 0..offs.len() {
                offs[fi] += strides[fi][d];
            }
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            for fi in 0..offs.len() {
                offs[fi] -= n * strides[fi][d];
            }
        }
    }
    Factor {
        vars: out_vars,
        data: out,
    }
}

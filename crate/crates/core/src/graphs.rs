//! Weighted tripartite graphs and k-partite hypergraphs built from functions
//! on Z_N, their densities, and densification.
//!
//! Part X carries x = x_1, Y carries y = x_2, Z carries z = x_3, and
//!
//! ```text
//! w_XY(x,y) = h(2x + y),   w_XZ(x,z) = h(x − z),   w_YZ(y,z) = h(−y − 2z),
//! ```
//!
//! which are h(ψ_3), h(ψ_2), h(ψ_1) for the 3-AP forms. For general k the
//! hypergraph weight g_{−j} is h(ψ_j) as a dense array over x_{−j}
//! (remaining coordinates in increasing order, row-major).
//!
//! Binary tensor format (little-endian): magic `GTTENSOR`, u32 rank, rank ×
//! u64 dimensions, then the f64 entries in row-major order. A tripartite
//! graph is three tensors in the order XY, XZ, YZ; a hypergraph is a u32
//! count k followed by the k tensors g_{−1}, …, g_{−k}.

use std::io::{Read, Write};

use ndarray::{Array2, ArrayD, IxDyn};
use rayon::prelude::*;

use crate::contract::{self, Factor};
use crate::cyclic::CyclicFunction;
use crate::error::{invalid, Error, Result};
use crate::forms::kap_forms;
use crate::norms::{cutnorm_bipartite, CutNormResult};

/// Default cap on the entries of one hypergraph weight array.
pub const DEFAULT_HYPERGRAPH_BUDGET: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTripartiteGraph {
    pub w_xy: Array2<f64>,
    pub w_xz: Array2<f64>,
    pub w_yz: Array2<f64>,
}

/// A pair of parts; the codegree of a pair is taken through the third part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Pair {
    XY,
    XZ,
    YZ,
}

impl WeightedTripartiteGraph {
    pub fn new(w_xy: Array2<f64>, w_xz: Array2<f64>, w_yz: Array2<f64>) -> Result<Self> {
        let (nx, ny) = w_xy.dim();
        let nz = w_xz.ncols();
        if w_xz.nrows() != nx || w_yz.dim() != (ny, nz) {
            return Err(invalid!("part sizes of the three weight matrices disagree"));
        }
        Ok(Self { w_xy, w_xz, w_yz })
    }

    pub fn part_sizes(&self) -> (usize, usize, usize) {
        (self.w_xy.nrows(), self.w_xy.ncols(), self.w_xz.ncols())
    }

    pub fn weights(&self, pair: Pair) -> &Array2<f64> {
        match pair {
            Pair::XY => &self.w_xy,
            Pair::XZ => &self.w_xz,
            Pair::YZ => &self.w_yz,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> Self {
        Self {
            w_xy: self.w_xy.mapv(f),
            w_xz: self.w_xz.mapv(f),
            w_yz: self.w_yz.mapv(f),
        }
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        for m in [&self.w_xy, &self.w_xz, &self.w_yz] {
            write_tensor(&mut w, m.shape(), m.iter().copied())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut mats = Vec::new();
        for _ in 0..3 {
            let (shape, data) = read_tensor(&mut r)?;
            if shape.len() != 2 {
                return Err(Error::Format(format!("expected a matrix, got rank {}", shape.len())));
            }
            mats.push(Array2::from_shape_vec((shape[0], shape[1]), data).map_err(|e| Error::Format(e.to_string()))?);
        }
        let w_yz = mats.pop().unwrap();
        let w_xz = mats.pop().unwrap();
        let w_xy = mats.pop().unwrap();
        Self::new(w_xy, w_xz, w_yz).map_err(|e| Error::Format(e.to_string()))
    }

    /// Edge list `pair,u,v,weight` with all nonzero weights.
    pub fn write_edge_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "pair,u,v,weight")?;
        for (name, m) in [("XY", &self.w_xy), ("XZ", &self.w_xz), ("YZ", &self.w_yz)] {
            for ((u, v), &x) in m.indexed_iter() {
                if x != 0.0 {
                    writeln!(w, "{name},{u},{v},{x:?}")?;
                }
            }
        }
        Ok(())
    }
}

const TENSOR_MAGIC: &[u8; 8] = b"GTTENSOR";

fn write_tensor<W: Write>(w: &mut W, shape: &[usize], data: impl Iterator<Item = f64>) -> Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_tensor<R: Read>(r: &mut R) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format("bad tensor magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let rank = u32::from_le_bytes(b4) as usize;
    if rank > 16 {
        return Err(Error::Format(format!("implausible tensor rank {rank}")));
    }
    let mut shape = Vec::with_capacity(rank);
    let mut b8 = [0u8; 8];
    for _ in 0..rank {
        r.read_exact(&mut b8)?;
        shape.push(u64::from_le_bytes(b8) as usize);
    }
    let len = shape
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .filter(|&l| l <= 1 << 32)
        .ok_or_else(|| Error::Format("tensor too large".into()))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut b8)?;
        data.push(f64::from_le_bytes(b8));
    }
    Ok((shape, data))
}

/// The graph with weights h(2x+y), h(x−z), h(−y−2z).
pub fn graph_from_measure(h: &CyclicFunction) -> WeightedTripartiteGraph {
    let n = h.modulus();
    let ni = n as i64;
    let at = |v: i64| h.values()[v.rem_euclid(ni) as usize];
    WeightedTripartiteGraph {
        w_xy: Array2::from_shape_fn((n, n), |(x, y)| at(2 * x as i64 + y as i64)),
        w_xz: Array2::from_shape_fn((n, n), |(x, z)| at(x as i64 - z as i64)),
        w_yz: Array2::from_shape_fn((n, n), |(y, z)| at(-(y as i64) - 2 * z as i64)),
    }
}

/// The 0/1 graph G_A.
pub fn graph_from_set(n: usize, a: &[usize]) -> Result<WeightedTripartiteGraph> {
    if n == 0 {
        return Err(invalid!("N must be positive"));
    }
    Ok(graph_from_measure(&CyclicFunction::indicator(n, a)))
}

/// E_{x,y,z} w_XY(x,y) w_XZ(x,z) w_YZ(y,z).
pub fn triangle_density(g: &WeightedTripartiteGraph) -> f64 {
    let (nx, ny, nz) = g.part_sizes();
    let cod = g.w_xz.dot(&g.w_yz.t());
    (&g.w_xy * &cod).sum() / (nx * ny * nz) as f64
}

/// Codegree g′(u,v) = E_t w(u,t) w(v,t) of `pair` through the third part.
pub fn densify(g: &WeightedTripartiteGraph, pair: Pair) -> Array2<f64> {
    let (nx, ny, nz) = g.part_sizes();
    match pair {
        Pair::XY => g.w_xz.dot(&g.w_yz.t()) / nz as f64,
        Pair::XZ => g.w_xy.dot(&g.w_yz) / ny as f64,
        Pair::YZ => g.w_xy.t().dot(&g.w_xz) / nx as f64,
    }
}

/// E_t a(u,t) b(v,t) for matrices sharing their column part.
pub fn codegree(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    if a.ncols() != b.ncols() {
        return Err(invalid!("codegree needs a common second part"));
    }
    Ok(a.dot(&b.t()) / a.ncols() as f64)
}

/// min(g′, 1) entrywise.
pub fn cap_at_one(m: &Array2<f64>) -> Array2<f64> {
    m.mapv(|v| v.min(1.0))
}

/// Homomorphism density of the octahedron K_{2,2,2}:
///
/// ```text
/// E_{x,x′,z,z′} [E_y w_XY(x,y)w_XY(x′,y)w_YZ(y,z)w_YZ(y,z′)]² ·
///               w_XZ(x,z)w_XZ(x,z′)w_XZ(x′,z)w_XZ(x′,z′)
/// ```
///
/// in O(N⁵) rather than N⁶.
pub fn k222_density(g: &WeightedTripartiteGraph) -> f64 {
    let (nx, ny, nz) = g.part_sizes();
    let sums: Vec<f64> = (0..nx)
        .into_par_iter()
        .map(|x| {
            let mut s = 0.0;
            for xp in 0..nx {
                let a = &g.w_xy.row(x) * &g.w_xy.row(xp);
                // M(z,z′) = E_y a(y) w_YZ(y,z) w_YZ(y,z′)
                let scaled = &g.w_yz * &a.view().insert_axis(ndarray::Axis(1));
                let m = scaled.t().dot(&g.w_yz) / ny as f64;
                let c = &g.w_xz.row(x) * &g.w_xz.row(xp);
                for z in 0..nz {
                    for zp in 0..nz {
                        let v = m[[z, zp]];
                        s += v * v * c[z] * c[zp];
                    }
                }
            }
            s
        })
        .collect();
    sums.iter().sum::<f64>() / (nx * nx * nz * nz) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHypergraph {
    pub k: usize,
    pub n: usize,
    /// weights[j] is g_{−(j+1)}, shape N^{k−1}.
    pub weights: Vec<ArrayD<f64>>,
}

impl WeightedHypergraph {
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.k as u32).to_le_bytes())?;
        for t in &self.weights {
            write_tensor(&mut w, t.shape(), t.iter().copied())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let k = u32::from_le_bytes(b4) as usize;
        if !(2..=16).contains(&k) {
            return Err(Error::Format(format!("implausible part count {k}")));
        }
        let mut weights = Vec::with_capacity(k);
        let mut n = 0;
        for _ in 0..k {
            let (shape, data) = read_tensor(&mut r)?;
            if shape.len() != k - 1 || shape.iter().any(|&d| d != shape[0]) {
                return Err(Error::Format("hypergraph arrays must be N^(k-1) cubes".into()));
            }
            n = shape[0];
            weights.push(ArrayD::from_shape_vec(IxDyn(&shape), data).map_err(|e| Error::Format(e.to_string()))?);
        }
        Ok(Self { k, n, weights })
    }
}

/// g_{−j}(x_{−j}) = h(ψ_j(x_{−j})) for j = 1..k.
pub fn hypergraph_from_function(h: &CyclicFunction, k: usize, budget: usize) -> Result<WeightedHypergraph> {
    let n = h.modulus();
    let sys = kap_forms(k)?;
    let cells = n
        .checked_pow(k as u32 - 1)
        .filter(|&c| c <= budget)
        .ok_or_else(|| Error::BudgetExceeded(format!("N^(k-1) = {n}^{} exceeds the budget {budget}", k - 1)))?;
    let weights = sys
        .forms
        .iter()
        .enumerate()
        .map(|(j, form)| {
            let coeffs: Vec<i64> = (0..k).filter(|&i| i != j).map(|i| form.coeffs[i]).collect();
            let mut data = Vec::with_capacity(cells);
            let mut x = vec![0usize; k - 1];
            for _ in 0..cells {
                let s: i64 = coeffs.iter().zip(&x).map(|(c, &v)| c * v as i64).sum();
                data.push(h.values()[s.rem_euclid(n as i64) as usize]);
                for d in (0..k - 1).rev() {
                    x[d] += 1;
                    if x[d] < n {
                        break;
                    }
                    x[d] = 0;
                }
            }
            ArrayD::from_shape_vec(IxDyn(&vec![n; k - 1]), data).expect("shape matches")
        })
        .collect();
    Ok(WeightedHypergraph { k, n, weights })
}

/// E_{x_1..x_k} g_{−1}(x_{−1}) ⋯ g_{−k}(x_{−k}), by contraction.
pub fn simplex_density(g: &WeightedHypergraph, budget: f64) -> Result<f64> {
    let factors = g
        .weights
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let vars: Vec<usize> = (0..g.k).filter(|&i| i != j).collect();
            Factor::new(vars, t.iter().copied().collect(), g.n)
        })
        .collect::<Result<Vec<_>>>()?;
    contract::average(factors, g.n, budget)
}

/// E_{x,d} f(x) f(x+d) ⋯ f(x+(k−1)d) over Z_N (d = 0 and wraparound included).
pub fn kap_density(f: &CyclicFunction, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(invalid!("k must be positive"));
    }
    let n = f.modulus();
    let v = f.values();
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|d| {
            (0..n)
                .map(|x| (0..k).map(|j| v[(x + j * d) % n]).product::<f64>())
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total / (n * n) as f64)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CountingReport {
    /// ‖g − g̃‖_□ on XY, XZ, YZ.
    pub cut_norms: Vec<CutNormResult>,
    pub max_cut_norm: f64,
    pub triangle_density_g: f64,
    pub triangle_density_gtilde: f64,
    pub density_gap: f64,
    /// 3 · max_cut_norm.
    pub dense_bound: f64,
    /// Whether 0 ≤ g ≤ 1 (the bound then applies).
    pub dense: bool,
    pub bound_holds: Option<bool>,
    /// Entries where g < 0, g > ν, g̃ < 0 or g̃ > 1.
    pub precondition_violations: usize,
}

/// Cut-norm distance between g and g̃ on each side versus the gap in
/// triangle densities.
///
/// Preconditions 0 ≤ g ≤ ν and 0 ≤ g̃ ≤ 1 are counted, not enforced. When g
/// is itself bounded by 1 the report also states whether the gap is at most
/// three times the largest side cut norm (plus 1e−9).
pub fn counting_discrepancy_experiment(
    nu: &WeightedTripartiteGraph,
    g: &WeightedTripartiteGraph,
    gtilde: &WeightedTripartiteGraph,
    seed: u64,
) -> Result<CountingReport> {
    if nu.part_sizes() != g.part_sizes() || g.part_sizes() != gtilde.part_sizes() {
        return Err(invalid!("graphs have different part sizes"));
    }
    let mut violations = 0;
    let mut dense = true;
    for p in [Pair::XY, Pair::XZ, Pair::YZ] {
        ndarray::Zip::from(g.weights(p))
            .and(nu.weights(p))
            .and(gtilde.weights(p))
            .for_each(|&a, &v, &t| {
                violations += usize::from(a < 0.0 || a > v) + usize::from(!(0.0..=1.0).contains(&t));
                dense &= a <= 1.0;
            });
    }
    let cut_norms = [Pair::XY, Pair::XZ, Pair::YZ]
        .iter()
        .map(|&p| cutnorm_bipartite(&(g.weights(p) - gtilde.weights(p)), seed))
        .collect::<Result<Vec<_>>>()?;
    let max_cut_norm = cut_norms.iter().map(|c| c.value).fold(0.0, f64::max);
    let tg = triangle_density(g);
    let tt = triangle_density(gtilde);
    let gap = (tg - tt).abs();
    let all_exact = cut_norms.iter().all(|c| c.exact);
    let dense = dense && violations == 0;
    Ok(CountingReport {
        max_cut_norm,
        triangle_density_g: tg,
        triangle_density_gtilde: tt,
        density_gap: gap,
        dense_bound: 3.0 * max_cut_norm,
        dense,
        bound_holds: (dense && all_exact).then_some(gap <= 3.0 * max_cut_norm + 1e-9),
        precondition_violations: violations,
        cut_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{blowup_system, lf_expectation_exact, Pattern, DEFAULT_EXACT_BUDGET};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_triangles(g: &WeightedTripartiteGraph) -> f64 {
        let (nx, ny, nz) = g.part_sizes();
        let mut s = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    s += g.w_xy[[x, y]] * g.w_xz[[x, z]] * g.w_yz[[y, z]];
                }
            }
        }
        s / (nx * ny * nz) as f64
    }

    fn random_measure(n: usize, rng: &mut ChaCha8Rng) -> CyclicFunction {
        CyclicFunction::from_fn(n, |_| rng.random_range(0.0..2.0))
    }

    #[test]
    fn complete_graph_from_full_set() {
        let g = graph_from_set(7, &(0..7).collect::<Vec<_>>()).unwrap();
        assert!(g.w_xy.iter().chain(g.w_xz.iter()).chain(g.w_yz.iter()).all(|&v| v == 1.0));
        assert_eq!(triangle_density(&g), 1.0);
        assert_eq!(k222_density(&g), 1.0);
    }

    #[test]
    fn triangles_are_progressions() {
        let n = 13;
        let a = [0usize, 1, 3, 4, 9];
        let g = graph_from_set(n, &a).unwrap();
        let in_a = |v: i64| a.contains(&(v.rem_euclid(n as i64) as usize));
        for x in 0..n as i64 {
            for y in 0..n as i64 {
                for z in 0..n as i64 {
                    let tri = g.w_xy[[x as usize, y as usize]] * g.w_xz[[x as usize, z as usize]] * g.w_yz[[y as usize, z as usize]];
                    let (p, q, r) = (2 * x + y, x - z, -y - 2 * z);
                    // p, q, r form a 3-AP with difference q − p
                    assert_eq!((q - p - (r - q)).rem_euclid(n as i64), 0);
                    assert_eq!(tri == 1.0, in_a(p) && in_a(q) && in_a(r));
                }
            }
        }
        assert_eq!(triangle_density(&graph_from_set(3, &[0]).unwrap()), brute_triangles(&graph_from_set(3, &[0]).unwrap()));
    }

    #[test]
    fn triangle_density_matches_loops_and_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let nu = random_measure(9, &mut rng);
        let g = graph_from_measure(&nu);
        assert!((triangle_density(&g) - brute_triangles(&g)).abs() < 1e-12);
        let mut scaled = g.clone();
        scaled.w_xy *= 3.0;
        assert!((triangle_density(&scaled) - 3.0 * triangle_density(&g)).abs() < 1e-12);
        // unfolding: E ν(2x+y) ν(x−z) ν(−y−2z)
        let mut s = 0.0;
        for x in 0..9i64 {
            for y in 0..9i64 {
                for z in 0..9i64 {
                    s += nu.at(2 * x + y) * nu.at(x - z) * nu.at(-y - 2 * z);
                }
            }
        }
        assert!((triangle_density(&g) - s / 729.0).abs() < 1e-12);
    }

    #[test]
    fn octahedron_density_is_the_forms_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sys = blowup_system(3).unwrap();
        for n in [5usize, 7, 13] {
            let nu = random_measure(n, &mut rng);
            let lhs = k222_density(&graph_from_measure(&nu));
            let rhs = lf_expectation_exact(&nu, &sys, &Pattern::all_ones(12), DEFAULT_EXACT_BUDGET).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * rhs, "{lhs} {rhs}");
        }
    }

    #[test]
    fn hypergraph_reduces_to_graph_for_k3() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_measure(7, &mut rng);
        let hg = hypergraph_from_function(&h, 3, DEFAULT_HYPERGRAPH_BUDGET).unwrap();
        let g = graph_from_measure(&h);
        // g_{−1} on (y,z), g_{−2} on (x,z), g_{−3} on (x,y)
        assert_eq!(hg.weights[0].iter().copied().collect::<Vec<_>>(), g.w_yz.iter().copied().collect::<Vec<_>>());
        assert_eq!(hg.weights[1].iter().copied().collect::<Vec<_>>(), g.w_xz.iter().copied().collect::<Vec<_>>());
        assert_eq!(hg.weights[2].iter().copied().collect::<Vec<_>>(), g.w_xy.iter().copied().collect::<Vec<_>>());
        assert!((simplex_density(&hg, 1e9).unwrap() - triangle_density(&g)).abs() < 1e-12);
        let ones = hypergraph_from_function(&CyclicFunction::constant(5, 1.0), 4, 1000).unwrap();
        assert!(ones.weights.iter().all(|t| t.iter().all(|&v| v == 1.0)));
        assert_eq!(simplex_density(&ones, 1e9).unwrap(), 1.0);
        assert!(hypergraph_from_function(&h, 4, 100).is_err());
    }

    #[test]
    fn simplex_density_is_ap_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (n, k) in [(7usize, 3usize), (13, 3), (7, 4), (11, 4), (13, 4)] {
            let f = random_measure(n, &mut rng);
            let hg = hypergraph_from_function(&f, k, DEFAULT_HYPERGRAPH_BUDGET).unwrap();
            let s = simplex_density(&hg, 1e9).unwrap();
            let a = kap_density(&f, k).unwrap();
            assert!((s - a).abs() < 1e-12 * a, "N={n} k={k}: {s} vs {a}");
        }
        // nested-loop oracle at N = 5, k = 4
        let h = random_measure(5, &mut rng);
        let hg = hypergraph_from_function(&h, 4, 1000).unwrap();
        let mut s = 0.0;
        for x in 0..625usize {
            let c = [x / 125, x / 25 % 5, x / 5 % 5, x % 5];
            let mut p = 1.0;
            for (j, t) in hg.weights.iter().enumerate() {
                let idx: Vec<usize> = (0..4).filter(|&i| i != j).map(|i| c[i]).collect();
                p *= t[IxDyn(&idx)];
            }
            s += p;
        }
        assert!((simplex_density(&hg, 1e9).unwrap() - s / 625.0).abs() < 1e-12);
    }

    #[test]
    fn ap_density_small_cases() {
        assert_eq!(kap_density(&CyclicFunction::constant(9, 1.0), 5).unwrap(), 1.0);
        let f = CyclicFunction::indicator(5, &[0, 1, 2]);
        let mut count = 0;
        for x in 0..5 {
            for d in 0..5 {
                if (0..3).all(|j| (x + j * d) % 5 <= 2) {
                    count += 1;
                }
            }
        }
        assert_eq!(kap_density(&f, 3).unwrap(), count as f64 / 25.0);
    }

    #[test]
    fn densification() {
        let ones = graph_from_measure(&CyclicFunction::constant(4, 1.0));
        assert!(densify(&ones, Pair::XY).iter().all(|&v| v == 1.0));
        // half graph on 4 vertices: a(u,t) = 1 iff t <= u
        let half = Array2::from_shape_fn((4, 4), |(u, t)| f64::from(t <= u));
        let c = codegree(&half, &half).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(c[[u, v]], (u.min(v) + 1) as f64 / 4.0);
                assert_eq!(c[[u, v]], c[[v, u]]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = graph_from_measure(&random_measure(6, &mut rng));
        let d = densify(&g, Pair::XY);
        let mut direct = 0.0;
        for x in 0..6 {
            for y in 0..6 {
                for z in 0..6 {
                    direct += g.w_xz[[x, z]] * g.w_yz[[y, z]];
                }
            }
        }
        assert!((d.mean().unwrap() - direct / 216.0).abs() < 1e-12);
        assert!(cap_at_one(&d).iter().all(|&v| v <= 1.0));
    }

    #[test]
    fn relabeling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = graph_from_measure(&random_measure(8, &mut rng));
        let perm = [3usize, 0, 7, 1, 6, 2, 5, 4];
        let p = |m: &Array2<f64>, rows: bool| {
            Array2::from_shape_fn(m.dim(), |(a, b)| if rows { m[[perm[a], b]] } else { m[[a, perm[b]]] })
        };
        // permute part Y
        let h = WeightedTripartiteGraph::new(p(&g.w_xy, false), g.w_xz.clone(), p(&g.w_yz, true)).unwrap();
        assert!((triangle_density(&g) - triangle_density(&h)).abs() < 1e-12);
        assert!((k222_density(&g) - k222_density(&h)).abs() < 1e-12);
    }

    #[test]
    fn serialisation_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = graph_from_measure(&random_measure(5, &mut rng));
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(WeightedTripartiteGraph::read_binary(&buf[..]).unwrap(), g);
        let hg = hypergraph_from_function(&random_measure(4, &mut rng), 4, 1000).unwrap();
        let mut buf = Vec::new();
        hg.write_binary(&mut buf).unwrap();
        assert_eq!(WeightedHypergraph::read_binary(&buf[..]).unwrap(), hg);
        let mut csv = Vec::new();
        graph_from_set(3, &[0]).unwrap().write_edge_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 9);
    }

    #[test]
    fn dense_counting_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let n = rng.random_range(3..9);
            let r = |rng: &mut ChaCha8Rng| Array2::from_shape_fn((n, n), |_| rng.random_range(0.0..1.0));
            let g = WeightedTripartiteGraph::new(r(&mut rng), r(&mut rng), r(&mut rng)).unwrap();
            let gt = WeightedTripartiteGraph::new(r(&mut rng), r(&mut rng), r(&mut rng)).unwrap();
            let ones = g.map(|_| 1.0);
            let rep = counting_discrepancy_experiment(&ones, &g, &gt, 0).unwrap();
            assert_eq!(rep.bound_holds, Some(true));
        }
        let ones = graph_from_measure(&CyclicFunction::constant(5, 1.0));
        let rep = counting_discrepancy_experiment(&ones, &ones, &ones, 0).unwrap();
        assert_eq!(rep.density_gap, 0.0);
        let bad = ones.map(|_| 2.0);
        let rep = counting_discrepancy_experiment(&ones, &bad, &ones, 0).unwrap();
        assert!(rep.precondition_violations > 0 && rep.bound_holds.is_none());
    }
}

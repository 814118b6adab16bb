//! Sum-product belief propagation on the Tanner graph of a sparse parity-check
//! matrix.
//!
//! LLR convention: positive favours bit 0 (codeword symbol +1). A variable whose
//! posterior LLR is exactly zero is decided as bit 0.

use crate::gf2::{BitMatrix, BitVec};
use crate::scalar::Scalar;

/// Bipartite graph between parity checks and codeword positions.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    n: usize,
    // edge e connects check `edge_check[e]` with variable `edge_var[e]`;
    // edges are stored grouped by check
    check_offsets: Vec<usize>,
    edge_var: Vec<u32>,
    // edges grouped by variable, as indices into the check-ordered arrays
    var_offsets: Vec<usize>,
    var_edges: Vec<u32>,
}

impl TannerGraph {
    pub fn from_rows(n: usize, rows: &[Vec<usize>]) -> Self {
        let mut check_offsets = Vec::with_capacity(rows.len() + 1);
        let mut edge_var = Vec::new();
        check_offsets.push(0);
        for r in rows {
            edge_var.extend(r.iter().map(|&v| {
                assert!(v < n, "check references variable {v} >= {n}");
                v as u32
            }));
            check_offsets.push(edge_var.len());
        }
        let mut degree = vec![0usize; n];
        for &v in &edge_var {
            degree[v as usize] += 1;
        }
        let mut var_offsets = Vec::with_capacity(n + 1);
        var_offsets.push(0);
        for d in &degree {
            var_offsets.push(var_offsets.last().unwrap() + d);
        }
        let mut fill = var_offsets.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        Self {
            n,
            check_offsets,
            edge_var,
            var_offsets,
            var_edges,
        }
    }

    pub fn from_matrix(m: &BitMatrix) -> Self {
        let rows: Vec<Vec<usize>> = (0..m.rows()).map(|i| m.row_ones(i)).collect();
        Self::from_rows(m.cols(), &rows)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_checks(&self) -> usize {
        self.check_offsets.len() - 1
    }

    pub fn check_vars(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.edge_var[self.check_offsets[c]..self.check_offsets[c + 1]]
            .iter()
            .map(|&v| v as usize)
    }

    pub fn var_degree(&self, v: usize) -> usize {
        self.var_offsets[v + 1] - self.var_offsets[v]
    }

    /// Number of checks whose parity is even under `bits`.
    pub fn satisfied_checks(&self, bits: &BitVec) -> usize {
        (0..self.num_checks())
            .filter(|&c| !self.check_vars(c).fold(false, |acc, v| acc ^ bits.get(v)))
            .count()
    }

    /// Number of checks satisfied by the signs of `llr` (negative means bit 1).
    pub fn satisfied_by_signs<T: Scalar>(&self, llr: &[T]) -> usize {
        (0..self.num_checks())
            .filter(|&c| {
                !self
                    .check_vars(c)
                    .fold(false, |acc, v| acc ^ (llr[v] < T::zero()))
            })
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct BpOutput<T> {
    /// Posterior LLR per variable after the last iteration.
    pub posterior: Vec<T>,
    pub hard: BitVec,
    pub iterations: usize,
    /// All checks satisfied by `hard`.
    pub converged: bool,
}

fn hard_decision<T: Scalar>(llr: &[T]) -> BitVec {
    let mut out = BitVec::zeros(llr.len());
    for (i, &l) in llr.iter().enumerate() {
        if l < T::zero() {
            out.set(i, true);
        }
    }
    out
}

/// Flooding-schedule sum-product decoding.
///
/// Stops as soon as the hard decision satisfies every check, or after
/// `max_iters` iterations. With `max_iters == 0` the channel decision is
/// returned unchanged.
pub fn sum_product<T: Scalar>(graph: &TannerGraph, channel: &[T], max_iters: usize) -> BpOutput<T> {
    assert_eq!(channel.len(), graph.n, "channel length mismatch");
    let edges = graph.edge_var.len();
    // messages beyond this magnitude carry no extra information and risk
    // saturating tanh to exactly one
    let llr_cap = T::of(if T::DTYPE_CODE == 1 { 15.0 } else { 30.0 });
    let tanh_cap = T::one() - T::epsilon() * T::of(4.0);

    let mut posterior: Vec<T> = channel.to_vec();
    let mut hard = hard_decision(&posterior);
    if graph.satisfied_checks(&hard) == graph.num_checks() || max_iters == 0 {
        let converged = graph.satisfied_checks(&hard) == graph.num_checks();
        return BpOutput {
            posterior,
            hard,
            iterations: 0,
            converged,
        };
    }

    let mut v2c: Vec<T> = graph
        .edge_var
        .iter()
        .map(|&v| channel[v as usize])
        .collect();
    let mut c2v: Vec<T> = vec![T::zero(); edges];
    let mut th: Vec<T> = Vec::new();
    let mut suffix: Vec<T> = Vec::new();

    for iter in 1..=max_iters {
        // check-node update: tanh rule with prefix/suffix products
        for c in 0..graph.num_checks() {
            let (lo, hi) = (graph.check_offsets[c], graph.check_offsets[c + 1]);
            let d = hi - lo;
            th.clear();
            th.extend(v2c[lo..hi].iter().map(|&m| {
                // tanh(m / 2) = (1 - e^-m) / (1 + e^-m)
                let e = (-m.max(-llr_cap).min(llr_cap)).exp();
                (T::one() - e) / (T::one() + e)
            }));
            suffix.clear();
            suffix.resize(d + 1, T::one());
            for i in (0..d).rev() {
                suffix[i] = suffix[i + 1] * th[i];
            }
            let mut prefix = T::one();
            for i in 0..d {
                let ext = (prefix * suffix[i + 1]).max(-tanh_cap).min(tanh_cap);
                // 2 atanh(x) = ln((1 + x) / (1 - x))
                c2v[lo + i] = ((T::one() + ext) / (T::one() - ext)).ln();
                prefix = prefix * th[i];
            }
        }
        // variable-node update
        for v in 0..graph.n {
            let (lo, hi) = (graph.var_offsets[v], graph.var_offsets[v + 1]);
            let mut total = channel[v];
            for &e in &graph.var_edges[lo..hi] {
                total = total + c2v[e as usize];
            }
            posterior[v] = total;
            for &e in &graph.var_edges[lo..hi] {
                v2c[e as usize] = total - c2v[e as usize];
            }
        }
        hard = hard_decision(&posterior);
        if graph.satisfied_checks(&hard) == graph.num_checks() {
            return BpOutput {
                posterior,
                hard,
                iterations: iter,
                converged: true,
            };
        }
    }
    BpOutput {
        posterior,
        hard,
        iterations: max_iters,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming_7_4() -> TannerGraph {
        TannerGraph::from_rows(7, &[vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]])
    }

    #[test]
    fn valid_codeword_exits_immediately() {
        let g = hamming_7_4();
        let llr = vec![2.0f64; 7];
        let out = sum_product(&g, &llr, 50);
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert!(out.hard.is_zero());
    }

    #[test]
    fn corrects_single_error_on_hamming_code() {
        let g = hamming_7_4();
        for flip in 0..7 {
            // a weakly received error among confident bits
            let mut llr = vec![2.0f64; 7];
            llr[flip] = -0.5;
            let out = sum_product(&g, &llr, 50);
            assert!(out.converged, "flip {flip}");
            assert!(out.hard.is_zero(), "flip {flip}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let g = hamming_7_4();
        let mut llr = vec![1.5f32; 7];
        llr[3] = -1.0;
        let out = sum_product(&g, &llr, 50);
        assert!(out.converged);
        assert!(out.hard.is_zero());
    }

    #[test]
    fn zero_llr_decides_bit_zero() {
        let g = TannerGraph::from_rows(2, &[]);
        let out = sum_product(&g, &[0.0f64, -0.0], 5);
        assert!(out.hard.is_zero());
        assert!(out.converged);
    }

    #[test]
    fn adjacency_is_consistent() {
        let g = hamming_7_4();
        assert_eq!(g.num_checks(), 3);
        assert_eq!(g.var_degree(0), 3);
        assert_eq!(g.var_degree(6), 1);
        let mut bits = BitVec::zeros(7);
        bits.set(4, true);
        assert_eq!(g.satisfied_checks(&bits), 2);
    }
}

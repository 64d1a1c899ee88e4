//! Exact brute-force baselines for k-median and maximum k-coverage, plus
//! the standard greedy coverage heuristic.
//!
//! Enumeration walks k-subsets in lexicographic order with incremental
//! objective maintenance (push/pop with an undo log), so ties resolve to
//! the lexicographically smallest subset by construction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gadgets::Hypergraph;
use crate::metric::MetricInstance;

/// Default cap on the number of enumerated subsets.
pub const DEFAULT_SUBSET_BUDGET: u128 = 10_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub best_set: Vec<usize>,
    pub best_value: f64,
    /// Number of complete k-subsets examined.
    pub enumerated: u64,
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    out
}

/// Exact k-median optimum by exhaustive enumeration.
pub fn brute_force_kmedian(instance: &MetricInstance, k: usize) -> Result<OracleResult> {
    brute_force_kmedian_with_budget(instance, k, DEFAULT_SUBSET_BUDGET)
}

pub fn brute_force_kmedian_with_budget(
    instance: &MetricInstance,
    k: usize,
    budget: u128,
) -> Result<OracleResult> {
    let n = instance.n();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for n = {n}"
        )));
    }
    let count = binomial(n as u64, k as u64);
    if count > budget {
        return Err(Error::OracleBudgetExceeded { count, budget });
    }

    // Incremental state: nearest distance per point under the current
    // partial center set, with an undo log per pushed center.
    let mut current: Vec<f64> = vec![f64::INFINITY; n];
    let mut value = f64::INFINITY; // meaningful only once the set is nonempty
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut undo: Vec<Vec<(usize, f64)>> = Vec::with_capacity(k);
    let mut best_value = f64::INFINITY;
    let mut best_set: Vec<usize> = Vec::new();
    let mut enumerated = 0u64;

    fn push(
        instance: &MetricInstance,
        c: usize,
        current: &mut [f64],
        value: &mut f64,
        undo: &mut Vec<Vec<(usize, f64)>>,
    ) {
        let mut log = Vec::new();
        let mut total = 0.0;
        for v in 0..instance.n() {
            let d = instance.distance(v, c);
            if d < current[v] {
                log.push((v, current[v]));
                current[v] = d;
            }
            total += instance.weight(v) * current[v];
        }
        *value = total;
        undo.push(log);
    }

    fn pop(current: &mut [f64], undo: &mut Vec<Vec<(usize, f64)>>) {
        for (v, old) in undo.pop().expect("push/pop imbalance") {
            current[v] = old;
        }
    }

    // Depth-first lexicographic walk over combinations.
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        instance: &MetricInstance,
        k: usize,
        start: usize,
        current: &mut Vec<f64>,
        value: &mut f64,
        chosen: &mut Vec<usize>,
        undo: &mut Vec<Vec<(usize, f64)>>,
        best_value: &mut f64,
        best_set: &mut Vec<usize>,
        enumerated: &mut u64,
    ) {
        let n = instance.n();
        if chosen.len() == k {
            *enumerated += 1;
            if *value < *best_value {
                *best_value = *value;
                *best_set = chosen.clone();
            }
            return;
        }
        let remaining = k - chosen.len();
        for c in start..=(n - remaining) {
            chosen.push(c);
            push(instance, c, current, value, undo);
            recurse(
                instance,
                k,
                c + 1,
                current,
                value,
                chosen,
                undo,
                best_value,
                best_set,
                enumerated,
            );
            pop(current, undo);
            chosen.pop();
        }
    }

    recurse(
        instance,
        k,
        0,
        &mut current,
        &mut value,
        &mut chosen,
        &mut undo,
        &mut best_value,
        &mut best_set,
        &mut enumerated,
    );

    Ok(OracleResult {
        best_set,
        best_value,
        enumerated,
    })
}

/// Exact maximum k-coverage optimum by exhaustive enumeration: the vertex
/// k-subset intersecting maximum hyperedge weight.
pub fn brute_force_coverage(hypergraph: &Hypergraph, k: usize) -> Result<OracleResult> {
    brute_force_coverage_with_budget(hypergraph, k, DEFAULT_SUBSET_BUDGET)
}

pub fn brute_force_coverage_with_budget(
    hypergraph: &Hypergraph,
    k: usize,
    budget: u128,
) -> Result<OracleResult> {
    let n = hypergraph.n;
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range for n = {n}"
        )));
    }
    let count = binomial(n as u64, k as u64);
    if count > budget {
        return Err(Error::OracleBudgetExceeded { count, budget });
    }

    let incidence = hypergraph.vertex_incidence();
    let mut hit_count: Vec<u32> = vec![0; hypergraph.edges.len()];
    let covered = 0.0f64;
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut best_value = f64::NEG_INFINITY;
    let mut best_set: Vec<usize> = Vec::new();
    let mut enumerated = 0u64;

    struct State<'a> {
        hypergraph: &'a Hypergraph,
        incidence: &'a [Vec<usize>],
        hit_count: Vec<u32>,
        covered: f64,
    }

    impl State<'_> {
        fn push(&mut self, v: usize) {
            for &e in &self.incidence[v] {
                self.hit_count[e] += 1;
                if self.hit_count[e] == 1 {
                    self.covered += self.hypergraph.weights[e];
                }
            }
        }
        fn pop(&mut self, v: usize) {
            for &e in &self.incidence[v] {
                self.hit_count[e] -= 1;
                if self.hit_count[e] == 0 {
                    self.covered -= self.hypergraph.weights[e];
                }
            }
        }
    }

    let mut state = State {
        hypergraph,
        incidence: &incidence,
        hit_count: std::mem::take(&mut hit_count),
        covered,
    };

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        state: &mut State,
        n: usize,
        k: usize,
        start: usize,
        chosen: &mut Vec<usize>,
        best_value: &mut f64,
        best_set: &mut Vec<usize>,
        enumerated: &mut u64,
    ) {
        if chosen.len() == k {
            *enumerated += 1;
            if state.covered > *best_value {
                *best_value = state.covered;
                *best_set = chosen.clone();
            }
            return;
        }
        let remaining = k - chosen.len();
        for v in start..=(n - remaining) {
            chosen.push(v);
            state.push(v);
            recurse(state, n, k, v + 1, chosen, best_value, best_set, enumerated);
            state.pop(v);
            chosen.pop();
        }
    }

    recurse(
        &mut state,
        n,
        k,
        0,
        &mut chosen,
        &mut best_value,
        &mut best_set,
        &mut enumerated,
    );

    Ok(OracleResult {
        best_set,
        best_value,
        enumerated,
    })
}

/// Standard greedy coverage: repeatedly add the vertex covering the most
/// uncovered weight, ties to the lowest index.
pub fn greedy_coverage(hypergraph: &Hypergraph, k: usize) -> OracleResult {
    let n = hypergraph.n;
    let incidence = hypergraph.vertex_incidence();
    let mut covered_edge = vec![false; hypergraph.edges.len()];
    let mut chosen = Vec::new();
    let mut value = 0.0;
    for _ in 0..k.min(n) {
        let mut best_gain = -1.0;
        let mut best_vertex = 0;
        for v in 0..n {
            if chosen.contains(&v) {
                continue;
            }
            let gain: f64 = incidence[v]
                .iter()
                .filter(|&&e| !covered_edge[e])
                .map(|&e| hypergraph.weights[e])
                .sum();
            if gain > best_gain {
                best_gain = gain;
                best_vertex = v;
            }
        }
        chosen.push(best_vertex);
        for &e in &incidence[best_vertex] {
            if !covered_edge[e] {
                covered_edge[e] = true;
                value += hypergraph.weights[e];
            }
        }
    }
    OracleResult {
        best_set: chosen,
        best_value: value,
        enumerated: 0,
    }
}

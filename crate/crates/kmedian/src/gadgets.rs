//! Hardness-instance generation: hypergraphs, the incidence reduction to
//! k-median, pairwise-independent distributions, and the dictatorship-test
//! hypergraph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricInstance;
use crate::rng::RngStream;
use crate::simplex::{DenseLp, Relation};

fn default_format() -> u32 {
    1
}

/// A weighted hypergraph. Generators emit d-uniform edges; the dictatorship
/// test may emit edges with fewer distinct vertices after collapsing
/// repeated endpoints, so uniformity is checked per use, not globally.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Hypergraph {
    #[serde(default = "default_format")]
    pub format: u32,
    pub n: usize,
    pub d: usize,
    pub edges: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    /// Present for planted instances: the cover every edge intersects.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub planted_cover: Option<Vec<usize>>,
}

impl Hypergraph {
    /// Strictly d-uniform hypergraph; every edge must have exactly `d`
    /// distinct in-range vertices and weights must be positive.
    pub fn new_uniform(
        n: usize,
        d: usize,
        edges: Vec<Vec<usize>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let weights = weights.unwrap_or_else(|| vec![1.0; edges.len()]);
        let h = Hypergraph {
            format: 1,
            n,
            d,
            edges,
            weights,
            planted_cover: None,
        };
        h.check(true)?;
        Ok(h)
    }

    fn check(&self, require_uniform: bool) -> Result<()> {
        if self.weights.len() != self.edges.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} edges",
                self.weights.len(),
                self.edges.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(Error::InvalidInput(format!("non-positive edge weight {w}")));
        }
        for (i, e) in self.edges.iter().enumerate() {
            let mut sorted = e.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != e.len() {
                return Err(Error::InvalidInput(format!("edge {i} repeats a vertex")));
            }
            if require_uniform && e.len() != self.d {
                return Err(Error::InvalidInput(format!(
                    "edge {i} has {} vertices, expected {}",
                    e.len(),
                    self.d
                )));
            }
            if e.iter().any(|&v| v >= self.n) {
                return Err(Error::InvalidInput(format!(
                    "edge {i} references a missing vertex"
                )));
            }
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Vertex -> indices of edges containing it.
    pub fn vertex_incidence(&self) -> Vec<Vec<usize>> {
        let mut incidence = vec![Vec::new(); self.n];
        for (e, edge) in self.edges.iter().enumerate() {
            for &v in edge {
                incidence[v].push(e);
            }
        }
        incidence
    }

    /// Total weight of edges intersecting `set`.
    pub fn covered_weight(&self, set: &[usize]) -> f64 {
        let mut member = vec![false; self.n];
        for &v in set {
            member[v] = true;
        }
        self.edges
            .iter()
            .zip(&self.weights)
            .filter(|(e, _)| e.iter().any(|&v| member[v]))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let h: Hypergraph = serde_json::from_str(text)?;
        h.check(false)?;
        Ok(h)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hypergraph serialization cannot fail")
    }
}

/// YES-case gadget: a hidden cover `U` of size `n/(d-1)`; every edge takes
/// exactly one uniform vertex of `U` and `d-1` distinct vertices outside.
pub fn planted_cover_hypergraph(
    n: usize,
    d: usize,
    m: usize,
    seed: u64,
) -> Result<(Hypergraph, Vec<usize>)> {
    if d < 2 || n < d {
        return Err(Error::InvalidInput(format!(
            "need n >= d >= 2, got n={n}, d={d}"
        )));
    }
    if !n.is_multiple_of(d - 1) {
        return Err(Error::InvalidInput(format!(
            "(d-1) = {} must divide n = {n}",
            d - 1
        )));
    }
    if m == 0 {
        return Err(Error::InvalidInput("need at least one edge".into()));
    }
    let cover_size = n / (d - 1);
    let outside_size = n - cover_size;
    if outside_size < d - 1 {
        return Err(Error::InvalidInput(format!(
            "only {outside_size} vertices outside the cover, need {}",
            d - 1
        )));
    }

    let mut rng = RngStream::new(seed).derive(0x706c616e74); // "plant"
    let mut cover = rng.sample_distinct(n, cover_size);
    cover.sort_unstable();
    let in_cover = {
        let mut mask = vec![false; n];
        for &v in &cover {
            mask[v] = true;
        }
        mask
    };
    let outside: Vec<usize> = (0..n).filter(|&v| !in_cover[v]).collect();

    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let hub = cover[rng.next_index(cover.len())];
        let rest = rng.sample_distinct(outside.len(), d - 1);
        let mut edge: Vec<usize> = std::iter::once(hub)
            .chain(rest.into_iter().map(|i| outside[i]))
            .collect();
        edge.sort_unstable();
        edges.push(edge);
    }

    let mut h = Hypergraph::new_uniform(n, d, edges, None)?;
    h.planted_cover = Some(cover.clone());
    Ok((h, cover))
}

/// NO-case gadget: `m` independent uniformly random d-subsets.
pub fn random_hypergraph(n: usize, d: usize, m: usize, seed: u64) -> Result<Hypergraph> {
    if d < 1 || n < d {
        return Err(Error::InvalidInput(format!(
            "need n >= d >= 1, got n={n}, d={d}"
        )));
    }
    let mut rng = RngStream::new(seed).derive(0x72616e64); // "rand"
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let mut edge = rng.sample_distinct(n, d);
        edge.sort_unstable();
        edges.push(edge);
    }
    Hypergraph::new_uniform(n, d, edges, None)
}

/// Sidecar metadata emitted with [`incidence_reduction`] output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionSidecar {
    #[serde(default = "default_format")]
    pub format: u32,
    pub k: usize,
    pub vertex_side: Vec<usize>,
    pub edge_side: Vec<usize>,
}

/// Reduce a hypergraph to a k-median instance over the shortest-path metric
/// of its vertex-hyperedge incidence graph. Each original edge is
/// duplicated `m_copies` times; `complete_triples` additionally adds one
/// node per vertex triple that has no corresponding hyperedge, which also
/// guarantees connectivity.
pub fn incidence_reduction(
    hypergraph: &Hypergraph,
    m_copies: usize,
    complete_triples: bool,
) -> Result<(MetricInstance, ReductionSidecar)> {
    let n = hypergraph.n;
    let d = hypergraph.d;
    if d < 2 {
        return Err(Error::InvalidInput("reduction needs d >= 2".into()));
    }
    if !n.is_multiple_of(d - 1) {
        return Err(Error::InvalidInput(format!(
            "(d-1) = {} must divide n = {n}",
            d - 1
        )));
    }
    if m_copies == 0 {
        return Err(Error::InvalidInput(
            "need at least one copy per edge".into(),
        ));
    }

    // Edge-side node list: M copies of every input edge, then the missing
    // triples (once each) when requested.
    let mut edge_nodes: Vec<Vec<usize>> = Vec::new();
    for edge in &hypergraph.edges {
        for _ in 0..m_copies {
            edge_nodes.push(edge.clone());
        }
    }
    if complete_triples {
        let mut present: std::collections::HashSet<Vec<usize>> = std::collections::HashSet::new();
        for edge in &hypergraph.edges {
            if edge.len() == 3 {
                let mut key = edge.clone();
                key.sort_unstable();
                present.insert(key);
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    let key = vec![a, b, c];
                    if !present.contains(&key) {
                        edge_nodes.push(key);
                    }
                }
            }
        }
    }

    let total = n + edge_nodes.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (i, edge) in edge_nodes.iter().enumerate() {
        let node = n + i;
        for &v in edge {
            adjacency[v].push(node);
            adjacency[node].push(v);
        }
    }

    // All-pairs shortest paths by BFS from every node (unit edge lengths).
    let mut dist = vec![0.0f64; total * total];
    let mut queue = std::collections::VecDeque::new();
    let mut level = vec![usize::MAX; total];
    for source in 0..total {
        level.iter_mut().for_each(|l| *l = usize::MAX);
        level[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &w in &adjacency[u] {
                if level[w] == usize::MAX {
                    level[w] = level[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        for v in 0..total {
            if level[v] == usize::MAX {
                return Err(Error::Disconnected);
            }
            dist[source * total + v] = level[v] as f64;
        }
    }

    let mut labels = Vec::with_capacity(total);
    for v in 0..n {
        labels.push(format!("v{v}"));
    }
    for (i, _) in edge_nodes.iter().enumerate() {
        labels.push(format!("e{i}"));
    }

    let matrix: Vec<Vec<f64>> = (0..total)
        .map(|u| dist[u * total..(u + 1) * total].to_vec())
        .collect();
    let instance = MetricInstance::from_matrix(matrix, None, Some(labels))?;
    let sidecar = ReductionSidecar {
        format: 1,
        k: n / (d - 1),
        vertex_side: (0..n).collect(),
        edge_side: (n..total).collect(),
    };
    Ok((instance, sidecar))
}

/// A finitely supported distribution on `[d-1]^d` (entries take values
/// `1..=d-1`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Distribution {
    pub d: usize,
    pub support: Vec<Vec<u8>>,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn check(&self) -> Result<()> {
        let omega = self.d - 1;
        if self.support.len() != self.probabilities.len() {
            return Err(Error::InvalidInput(
                "support/probability length mismatch".into(),
            ));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}")));
        }
        for (x, &p) in self.support.iter().zip(&self.probabilities) {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidInput("non-positive probability".into()));
            }
            if x.len() != self.d || x.iter().any(|&t| t == 0 || t as usize > omega) {
                return Err(Error::InvalidInput("support point out of range".into()));
            }
        }
        Ok(())
    }

    /// Largest deviation of any pairwise marginal from `1/(d-1)^2`.
    pub fn pairwise_deviation(&self) -> f64 {
        let omega = self.d - 1;
        let target = 1.0 / (omega * omega) as f64;
        let mut worst: f64 = 0.0;
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                for ti in 1..=omega as u8 {
                    for tj in 1..=omega as u8 {
                        let mass: f64 = self
                            .support
                            .iter()
                            .zip(&self.probabilities)
                            .filter(|(x, _)| x[i] == ti && x[j] == tj)
                            .map(|(_, p)| p)
                            .sum();
                        worst = worst.max((mass - target).abs());
                    }
                }
            }
        }
        worst
    }

    /// Probability mass on support points containing at least one `1`.
    pub fn mass_with_a_one(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probabilities)
            .filter(|(x, _)| x.contains(&1))
            .map(|(_, p)| p)
            .sum()
    }
}

fn enumerate_vectors(d: usize, omega: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(omega.pow(d as u32));
    let mut cur = vec![1u8; d];
    loop {
        out.push(cur.clone());
        let mut pos = d;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if (cur[pos] as usize) < omega {
                cur[pos] += 1;
                for t in cur.iter_mut().skip(pos + 1) {
                    *t = 1;
                }
                break;
            }
        }
    }
}

/// Construct a pairwise independent distribution on `[d-1]^d` whose every
/// support point has some coordinate equal to 1, by solving the linear
/// feasibility system with the embedded simplex.
pub fn pairwise_independent_distribution(d: usize) -> Result<Distribution> {
    if d < 3 {
        return Err(Error::InvalidInput("need d >= 3".into()));
    }
    let omega = d - 1;
    let candidates: Vec<Vec<u8>> = enumerate_vectors(d, omega)
        .into_iter()
        .filter(|x| x.contains(&1))
        .collect();
    let num_vars = candidates.len();
    let target = 1.0 / (omega * omega) as f64;

    let mut lp = DenseLp::new(num_vars, vec![0.0; num_vars]);
    for i in 0..d {
        for j in (i + 1)..d {
            for ti in 1..=omega as u8 {
                for tj in 1..=omega as u8 {
                    let row: Vec<(usize, f64)> = candidates
                        .iter()
                        .enumerate()
                        .filter(|(_, x)| x[i] == ti && x[j] == tj)
                        .map(|(idx, _)| (idx, 1.0))
                        .collect();
                    lp.add_row(row, Relation::Eq, target);
                }
            }
        }
    }
    lp.add_row((0..num_vars).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);

    let solution = crate::simplex::solve(&lp).map_err(|e| match e {
        crate::simplex::SimplexError::Infeasible => Error::Internal(format!(
            "pairwise-independent system infeasible for d = {d}"
        )),
        other => Error::Internal(format!("simplex failure: {other:?}")),
    })?;

    let mut support = Vec::new();
    let mut probabilities = Vec::new();
    for (x, &q) in candidates.iter().zip(&solution.x) {
        if q > 1e-12 {
            support.push(x.clone());
            probabilities.push(q);
        }
    }
    let total: f64 = probabilities.iter().sum();
    for q in probabilities.iter_mut() {
        *q /= total;
    }
    let dist = Distribution {
        d,
        support,
        probabilities,
    };
    dist.check()?;
    Ok(dist)
}

/// Exact noise convolution: each coordinate is independently resampled to a
/// uniform value of `[d-1]` with probability `delta`.
pub fn noised_distribution(mu: &Distribution, delta: f64) -> Result<Distribution> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput("delta must lie in [0, 1]".into()));
    }
    let d = mu.d;
    let omega = d - 1;
    if delta == 0.0 {
        return Ok(mu.clone());
    }
    let targets = enumerate_vectors(d, omega);
    let mut mass = vec![0.0f64; targets.len()];
    let stay = 1.0 - delta + delta / omega as f64;
    let switch = delta / omega as f64;
    for (x, &p) in mu.support.iter().zip(&mu.probabilities) {
        for (t_idx, target) in targets.iter().enumerate() {
            let mut prob = p;
            for i in 0..d {
                prob *= if target[i] == x[i] { stay } else { switch };
                if prob == 0.0 {
                    break;
                }
            }
            mass[t_idx] += prob;
        }
    }
    let mut support = Vec::new();
    let mut probabilities = Vec::new();
    for (t_idx, target) in targets.iter().enumerate() {
        if mass[t_idx] > 0.0 {
            support.push(target.clone());
            probabilities.push(mass[t_idx]);
        }
    }
    let dist = Distribution {
        d,
        support,
        probabilities,
    };
    dist.check()?;
    Ok(dist)
}

/// How the dictatorship-test hypergraph is materialized.
#[derive(Clone, Copy, Debug)]
pub enum DictatorshipMode {
    /// Enumerate the full product support; weights are exact.
    Exact,
    /// Monte Carlo: `edges` i.i.d. draws with weight 1/edges each.
    Sampled { edges: usize, seed: u64 },
}

/// Exact-mode size guards from the construction's enumerability bounds.
pub fn dictatorship_exact_feasible(d: usize, r: u32) -> bool {
    let omega = (d - 1) as u128;
    let vertices = omega.checked_pow(r);
    let tuples = omega.checked_pow(r * d as u32);
    matches!((vertices, tuples), (Some(v), Some(t)) if v <= 10_000 && t <= 10_000_000)
}

/// The dictatorship-test hypergraph on `(d-1)^R` vertices: vertices are
/// strings in `[d-1]^R` (base-(d-1) encoded), and a d-tuple of strings is
/// an edge with weight equal to its probability under the R-fold product
/// of the noised distribution. Repeated endpoints within an edge are
/// collapsed and duplicate edges are merged by summing weight.
pub fn dictatorship_test_hypergraph(
    d: usize,
    r: u32,
    delta: f64,
    mode: DictatorshipMode,
) -> Result<Hypergraph> {
    if d < 3 || r == 0 {
        return Err(Error::InvalidInput("need d >= 3 and R >= 1".into()));
    }
    let omega = d - 1;
    let base = pairwise_independent_distribution(d)?;
    let noised = noised_distribution(&base, delta)?;
    let num_vertices = omega.pow(r);

    let encode = |strings: &[Vec<u8>]| -> Vec<usize> {
        // string s over coordinates r: vertex id = sum (s_r - 1) * omega^r
        strings
            .iter()
            .map(|s| {
                s.iter()
                    .fold(0usize, |acc, &t| acc * omega + (t as usize - 1))
            })
            .collect()
    };

    let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();

    match mode {
        DictatorshipMode::Exact => {
            if !dictatorship_exact_feasible(d, r) {
                return Err(Error::InvalidInput(
                    "instance too large for exact enumeration; use sampled mode".into(),
                ));
            }
            // Walk supp(noised)^R; each choice fixes one coordinate row of
            // the d strings.
            let supp = noised.support.len();
            let mut pick = vec![0usize; r as usize];
            loop {
                let mut weight = 1.0;
                for &row in &pick {
                    weight *= noised.probabilities[row];
                }
                if weight > 0.0 {
                    // strings[j][coord] = support[pick[coord]][j]
                    let mut strings = vec![vec![0u8; r as usize]; d];
                    for (coord, &row) in pick.iter().enumerate() {
                        for (j, string) in strings.iter_mut().enumerate() {
                            string[coord] = noised.support[row][j];
                        }
                    }
                    let mut vertices = encode(&strings);
                    vertices.sort_unstable();
                    vertices.dedup();
                    *merged.entry(vertices).or_insert(0.0) += weight;
                }
                let mut pos = r as usize;
                let mut done = true;
                while pos > 0 {
                    pos -= 1;
                    if pick[pos] + 1 < supp {
                        pick[pos] += 1;
                        for p in pick.iter_mut().skip(pos + 1) {
                            *p = 0;
                        }
                        done = false;
                        break;
                    }
                }
                if done {
                    break;
                }
            }
        }
        DictatorshipMode::Sampled { edges, seed } => {
            if edges == 0 {
                return Err(Error::InvalidInput(
                    "sampled mode needs at least one edge".into(),
                ));
            }
            let mut rng = RngStream::new(seed).derive(0x64696374); // "dict"
            let per_edge = 1.0 / edges as f64;
            for _ in 0..edges {
                let mut strings = vec![vec![0u8; r as usize]; d];
                for coord in 0..r as usize {
                    let row = rng.choose_weighted(&noised.probabilities);
                    for (j, string) in strings.iter_mut().enumerate() {
                        string[coord] = noised.support[row][j];
                    }
                }
                let mut vertices = encode(&strings);
                vertices.sort_unstable();
                vertices.dedup();
                *merged.entry(vertices).or_insert(0.0) += per_edge;
            }
        }
    }

    let mut edges = Vec::with_capacity(merged.len());
    let mut weights = Vec::with_capacity(merged.len());
    for (vertices, weight) in merged {
        edges.push(vertices);
        weights.push(weight);
    }
    let h = Hypergraph {
        format: 1,
        n: num_vertices,
        d,
        edges,
        weights,
        planted_cover: None,
    };
    h.check(false)?;
    Ok(h)
}

/// The dictator set `{x : x_i = 1}` as vertex ids, for coordinate `i < R`.
pub fn dictator_set(d: usize, r: u32, coordinate: u32) -> Vec<usize> {
    let omega = d - 1;
    // coordinate 0 is the most significant digit in the encoding above
    (0..omega.pow(r))
        .filter(|&v| {
            let shift = omega.pow(r - 1 - coordinate);
            (v / shift).is_multiple_of(omega)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    #[test]
    fn planted_instance_is_fully_covered_by_its_cover() {
        let (h, cover) = planted_cover_hypergraph(4, 3, 10, 1).unwrap();
        assert_eq!(cover.len(), 2);
        assert_eq!(h.covered_weight(&cover), 10.0);
        let oracle_result = oracle::brute_force_coverage(&h, 2).unwrap();
        assert_eq!(oracle_result.best_value, 10.0);
    }

    #[test]
    fn planted_generation_is_deterministic() {
        let (a, ca) = planted_cover_hypergraph(8, 3, 15, 9).unwrap();
        let (b, cb) = planted_cover_hypergraph(8, 3, 15, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(ca, cb);
    }

    #[test]
    fn planted_rejects_bad_divisibility() {
        assert!(planted_cover_hypergraph(5, 3, 4, 0).is_err());
        assert!(planted_cover_hypergraph(2, 3, 4, 0).is_err());
    }

    #[test]
    fn random_hypergraph_has_uniform_edges() {
        let h = random_hypergraph(12, 3, 30, 5).unwrap();
        assert_eq!(h.edges.len(), 30);
        for e in &h.edges {
            assert_eq!(e.len(), 3);
        }
    }

    #[test]
    fn random_subset_coverage_tracks_binomial_formula() {
        let h = random_hypergraph(200, 3, 4000, 1).unwrap();
        let mut rng = RngStream::new(123);
        for alpha in [0.25f64, 0.5] {
            let size = (alpha * 200.0).round() as usize;
            let mut mean = 0.0;
            for _ in 0..20 {
                let set = rng.sample_distinct(200, size);
                mean += h.covered_weight(&set) / h.total_weight();
            }
            mean /= 20.0;
            let expected = 1.0 - (1.0 - alpha).powi(3);
            assert!(
                (mean - expected).abs() <= 0.05,
                "coverage {mean} vs expected {expected} at alpha {alpha}"
            );
        }
        // alpha = 1 covers everything
        let everything: Vec<usize> = (0..200).collect();
        assert_eq!(h.covered_weight(&everything), h.total_weight());
    }

    #[test]
    fn incidence_distances_match_the_bipartite_structure() {
        let h = Hypergraph::new_uniform(4, 3, vec![vec![0, 1, 2], vec![1, 2, 3]], None).unwrap();
        let (inst, sidecar) = incidence_reduction(&h, 1, false).unwrap();
        assert_eq!(inst.n(), 6);
        assert_eq!(sidecar.k, 2);
        let e0 = sidecar.edge_side[0];
        assert_eq!(inst.distance(0, e0), 1.0);
        assert_eq!(inst.distance(0, 1), 2.0);
        assert_eq!(inst.distance(0, 3), 4.0); // 0 -> e0 -> 1 -> e1 -> 3
    }

    #[test]
    fn reduction_rejects_disconnected_without_triples() {
        // Two components: an edge on {0,1,2} and isolated vertex 3.
        let h = Hypergraph::new_uniform(4, 3, vec![vec![0, 1, 2]], None).unwrap();
        let err = incidence_reduction(&h, 1, false).unwrap_err();
        assert!(matches!(err, Error::Disconnected));
        let fixed = incidence_reduction(&h, 1, true);
        assert!(fixed.is_ok());
    }

    #[test]
    fn reduction_metric_is_valid_and_unit_adjacent() {
        let (h, cover) = planted_cover_hypergraph(4, 3, 6, 3).unwrap();
        let (inst, sidecar) = incidence_reduction(&h, 2, false).unwrap();
        assert_eq!(sidecar.k, 2);
        assert!(inst.validate().is_empty());
        // vertex-to-vertex through a shared edge node is 2
        let e0 = sidecar.edge_side[0];
        let edge = &h.edges[0];
        assert_eq!(inst.distance(edge[0], e0), 1.0);
        assert_eq!(inst.distance(edge[0], edge[1]), 2.0);
        // every edge node sits at distance 1 from the planted cover
        for &e in &sidecar.edge_side {
            let (_, dist) = inst.nearest(e, &cover);
            assert_eq!(dist, 1.0);
        }
    }

    #[test]
    fn edge_nodes_far_from_disjoint_vertex_sets() {
        // With centers only on the vertex side, an edge node not
        // intersecting the set is at distance >= 3.
        let h = Hypergraph::new_uniform(
            6,
            3,
            vec![vec![0, 1, 2], vec![3, 4, 5], vec![2, 3, 4]],
            None,
        )
        .unwrap();
        let (inst, sidecar) = incidence_reduction(&h, 1, false).unwrap();
        for (e_idx, edge) in h.edges.iter().enumerate() {
            let node = sidecar.edge_side[e_idx];
            for v in 0..6usize {
                let d = inst.distance(node, v);
                if edge.contains(&v) {
                    assert_eq!(d, 1.0);
                } else {
                    assert!(d >= 3.0, "non-member vertex at distance {d}");
                }
            }
        }
    }

    #[test]
    fn xor_distribution_is_pairwise_independent() {
        let dist = Distribution {
            d: 3,
            support: vec![vec![1, 1, 1], vec![1, 2, 2], vec![2, 1, 2], vec![2, 2, 1]],
            probabilities: vec![0.25; 4],
        };
        dist.check().unwrap();
        assert!(dist.pairwise_deviation() < 1e-15);
        assert_eq!(dist.mass_with_a_one(), 1.0);
    }

    #[test]
    fn constructed_distributions_satisfy_the_two_properties() {
        for d in [3, 4, 5] {
            let dist = pairwise_independent_distribution(d).unwrap();
            assert!(
                dist.pairwise_deviation() <= 1e-9,
                "pairwise deviation too large for d = {d}"
            );
            assert_eq!(
                dist.mass_with_a_one(),
                1.0,
                "support must contain a 1 for d = {d}"
            );
            // single-coordinate marginals are uniform (implied by pairwise)
            let omega = (d - 1) as f64;
            for i in 0..d {
                for t in 1..=(d - 1) as u8 {
                    let mass: f64 = dist
                        .support
                        .iter()
                        .zip(&dist.probabilities)
                        .filter(|(x, _)| x[i] == t)
                        .map(|(_, p)| p)
                        .sum();
                    assert!((mass - 1.0 / omega).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn noise_at_zero_and_one_are_the_two_extremes() {
        let base = pairwise_independent_distribution(3).unwrap();
        let same = noised_distribution(&base, 0.0).unwrap();
        assert_eq!(same.support, base.support);
        let uniform = noised_distribution(&base, 1.0).unwrap();
        assert_eq!(uniform.support.len(), 8);
        for &p in &uniform.probabilities {
            assert!((p - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_preserves_mass_and_pairwise_independence() {
        let base = pairwise_independent_distribution(4).unwrap();
        for delta in [0.05, 0.3, 0.7] {
            let noised = noised_distribution(&base, delta).unwrap();
            let total: f64 = noised.probabilities.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(noised.pairwise_deviation() <= 1e-9);
        }
    }

    #[test]
    fn noised_mass_off_the_one_hyperplane_is_union_bounded() {
        let base = pairwise_independent_distribution(3).unwrap();
        let delta = 0.1;
        let noised = noised_distribution(&base, delta).unwrap();
        let off = 1.0 - noised.mass_with_a_one();
        assert!(off > 0.0);
        assert!(
            off <= 3.0 * delta + 1e-12,
            "off-mass {off} above union bound"
        );
    }

    #[test]
    fn dictators_intersect_everything_without_noise() {
        let h = dictatorship_test_hypergraph(3, 2, 0.0, DictatorshipMode::Exact).unwrap();
        assert_eq!(h.n, 4);
        for coord in 0..2 {
            let dictator = dictator_set(3, 2, coord);
            let covered = h.covered_weight(&dictator);
            assert!(
                (covered - 1.0).abs() <= 1e-12,
                "dictator {coord} covers {covered}"
            );
        }
    }

    #[test]
    fn dictators_lose_at_most_delta_under_noise() {
        for delta in [0.1, 0.2] {
            let h = dictatorship_test_hypergraph(3, 2, delta, DictatorshipMode::Exact).unwrap();
            let total = h.total_weight();
            assert!((total - 1.0).abs() < 1e-9);
            for coord in 0..2 {
                let covered = h.covered_weight(&dictator_set(3, 2, coord));
                assert!(
                    covered >= 1.0 - delta - 1e-9,
                    "dictator {coord} covers only {covered} at delta {delta}"
                );
            }
        }
    }

    #[test]
    fn full_noise_behaves_like_independent_uniform_endpoints() {
        // at delta = 1 every endpoint string is independently uniform, so
        // any vertex set of measure alpha covers exactly 1 - (1 - alpha)^d
        let h = dictatorship_test_hypergraph(3, 2, 1.0, DictatorshipMode::Exact).unwrap();
        assert_eq!(h.n, 4);
        for a in 0..4usize {
            for b in (a + 1)..4 {
                let covered = h.covered_weight(&[a, b]);
                let expected = 1.0 - (1.0 - 0.5f64).powi(3);
                assert!(
                    (covered - expected).abs() <= 1e-9,
                    "set {{{a},{b}}} covers {covered}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn sampled_mode_approximates_exact_coverage() {
        let exact = dictatorship_test_hypergraph(3, 2, 0.2, DictatorshipMode::Exact).unwrap();
        let sampled = dictatorship_test_hypergraph(
            3,
            2,
            0.2,
            DictatorshipMode::Sampled {
                edges: 20_000,
                seed: 4,
            },
        )
        .unwrap();
        let dictator = dictator_set(3, 2, 0);
        let a = exact.covered_weight(&dictator);
        let b = sampled.covered_weight(&dictator);
        assert!((a - b).abs() < 0.02, "exact {a} vs sampled {b}");
    }

    #[test]
    fn dictatorship_exact_mode_refuses_oversized_instances() {
        assert!(dictatorship_exact_feasible(3, 2));
        assert!(!dictatorship_exact_feasible(3, 30));
        let err = dictatorship_test_hypergraph(3, 30, 0.1, DictatorshipMode::Exact).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        // sampled mode still works at that size
        let sampled = dictatorship_test_hypergraph(
            3,
            14,
            0.1,
            DictatorshipMode::Sampled {
                edges: 500,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(sampled.n, 2usize.pow(14));
        assert!((sampled.total_weight() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hypergraph_json_round_trip() {
        let (h, _) = planted_cover_hypergraph(6, 3, 5, 2).unwrap();
        let text = h.to_json();
        let back = Hypergraph::from_json(&text).unwrap();
        assert_eq!(h, back);
    }
}

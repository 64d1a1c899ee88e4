//! Weighted point subsets standing in for the full instance.
//!
//! The default mode is the identity coreset (exact at desk scale); a
//! sensitivity-sampling heuristic is offered as a scaling convenience with
//! empirically measured (not proven) error.

use crate::error::{Error, Result};
use crate::metric::MetricInstance;
use crate::rng::RngStream;

/// Multiplier in the sampling budget `C * k * ln(n) / epsilon^2`.
pub const DEFAULT_SIZE_CONSTANT: f64 = 20.0;

/// A weighted subset of instance points.
#[derive(Clone, Debug)]
pub struct WeightedSubset {
    /// Distinct indices into the parent instance.
    pub indices: Vec<usize>,
    /// Positive weight per index.
    pub weights: Vec<f64>,
    /// Coreset parameter this subset was built for (0 for identity).
    pub epsilon: f64,
}

impl WeightedSubset {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Type invariants against the parent instance: distinct in-range
    /// indices, positive weights, and the weight-sum sanity bound
    /// `sum <= (1 + eps) * parent total`.
    pub fn validate_against(&self, instance: &MetricInstance) -> Result<()> {
        if self.indices.len() != self.weights.len() {
            return Err(Error::InvalidInput("index/weight length mismatch".into()));
        }
        let mut seen = vec![false; instance.n()];
        for &idx in &self.indices {
            if idx >= instance.n() {
                return Err(Error::InvalidInput(format!("index {idx} out of range")));
            }
            if seen[idx] {
                return Err(Error::InvalidInput(format!("index {idx} repeats")));
            }
            seen[idx] = true;
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        let bound = instance.total_weight() * (1.0 + self.epsilon) + 1e-9;
        if self.total_weight() > bound {
            return Err(Error::InvalidInput(format!(
                "weight sum {} exceeds the sanity bound {bound}",
                self.total_weight()
            )));
        }
        Ok(())
    }

    /// Weighted assignment cost of the subset to `centers`, measured in the
    /// parent instance's metric.
    pub fn cost(&self, instance: &MetricInstance, centers: &[usize]) -> Result<f64> {
        if centers.is_empty() {
            return Err(Error::NoCenters);
        }
        let mut total = 0.0;
        for (&idx, &w) in self.indices.iter().zip(&self.weights) {
            total += w * instance.nearest(idx, centers).1;
        }
        Ok(total)
    }
}

/// All points with their original weights; exact for every center set.
pub fn identity_coreset(instance: &MetricInstance) -> WeightedSubset {
    WeightedSubset {
        indices: (0..instance.n()).collect(),
        weights: instance.weights().to_vec(),
        epsilon: 0.0,
    }
}

/// Greedy k-center (farthest-point traversal) seed solution used for the
/// sampling weights. Deterministic: starts at point 0, ties to lowest index.
pub fn greedy_k_center(instance: &MetricInstance, k: usize) -> Vec<usize> {
    let n = instance.n();
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let mut centers = vec![0usize];
    let mut dist: Vec<f64> = (0..n).map(|v| instance.distance(v, 0)).collect();
    while centers.len() < k.min(n) {
        let mut far = 0;
        for v in 1..n {
            if dist[v] > dist[far] {
                far = v;
            }
        }
        centers.push(far);
        for v in 0..n {
            let d = instance.distance(v, far);
            if d < dist[v] {
                dist[v] = d;
            }
        }
    }
    centers
}

/// Sensitivity sampling with the default size constant.
pub fn sampling_coreset(
    instance: &MetricInstance,
    k: usize,
    epsilon: f64,
    seed: u64,
) -> Result<WeightedSubset> {
    sampling_coreset_with(instance, k, epsilon, seed, DEFAULT_SIZE_CONSTANT)
}

/// Sensitivity sampling against a greedy k-center seed: points are drawn
/// with probability proportional to `w_v * (d(v, seed) + avg)` and each
/// sampled point is weighted by its inverse expected multiplicity, so
/// weights stay unbiased. Falls back to the identity coreset when the
/// budget reaches `n`. Deterministic given the seed.
pub fn sampling_coreset_with(
    instance: &MetricInstance,
    k: usize,
    epsilon: f64,
    seed: u64,
    size_constant: f64,
) -> Result<WeightedSubset> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput("epsilon must lie in (0, 1)".into()));
    }
    let n = instance.n();
    let budget =
        (size_constant * k as f64 * (n.max(2) as f64).ln() / (epsilon * epsilon)).ceil() as usize;
    if budget >= n {
        return Ok(identity_coreset(instance));
    }

    let seeds = greedy_k_center(instance, k);
    let total_weight = instance.total_weight();
    let dist: Vec<f64> = (0..n).map(|v| instance.nearest(v, &seeds).1).collect();
    let avg = if total_weight > 0.0 {
        (0..n).map(|v| instance.weight(v) * dist[v]).sum::<f64>() / total_weight
    } else {
        0.0
    };
    let scores: Vec<f64> = (0..n)
        .map(|v| instance.weight(v) * (dist[v] + avg))
        .collect();
    let norm: f64 = scores.iter().sum();
    // All-zero scores (single seed covering everything with zero weights)
    // degrade to uniform sampling.
    let probs: Vec<f64> = if norm > 0.0 {
        scores.iter().map(|s| s / norm).collect()
    } else {
        vec![1.0 / n as f64; n]
    };

    let mut rng = RngStream::new(seed).derive(0x636f7265); // "core"
    let mut multiplicity = vec![0u64; n];
    for _ in 0..budget {
        multiplicity[rng.choose_weighted(&probs)] += 1;
    }

    let mut indices = Vec::new();
    let mut weights = Vec::new();
    for v in 0..n {
        if multiplicity[v] > 0 {
            indices.push(v);
            weights.push(multiplicity[v] as f64 * instance.weight(v) / (budget as f64 * probs[v]));
        }
    }
    Ok(WeightedSubset {
        indices,
        weights,
        epsilon,
    })
}

/// Empirical coreset error: max over random k-center-set probes of
/// `|cost(subset, C) / cost(instance, C) - 1|`, skipping zero-cost probes.
pub fn coreset_error(
    instance: &MetricInstance,
    subset: &WeightedSubset,
    num_probes: usize,
    k: usize,
    seed: u64,
) -> Result<f64> {
    if num_probes == 0 {
        return Err(Error::InvalidInput("need at least one probe".into()));
    }
    let n = instance.n();
    let k = k.min(n).max(1);
    let mut rng = RngStream::new(seed).derive(0x70726f6265); // "probe"
    let mut worst: f64 = 0.0;
    for _ in 0..num_probes {
        let centers = rng.sample_distinct(n, k);
        let full = instance.cost(&centers)?;
        if full <= 0.0 {
            continue;
        }
        let reduced = subset.cost(instance, &centers)?;
        worst = worst.max((reduced / full - 1.0).abs());
    }
    Ok(worst)
}

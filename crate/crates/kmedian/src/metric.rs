//! Problem instances: distance evaluation, cost accounting, validation,
//! and rescaling.
//!
//! The canonical internal form is a dense symmetric distance matrix;
//! Euclidean inputs are materialized into it on load. All operations are
//! pure and instances are immutable after construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for all metric checks.
pub const METRIC_TOL: f64 = 1e-9;

/// A weighted (semi-)metric space over `n` points.
#[derive(Clone, Debug)]
pub struct MetricInstance {
    n: usize,
    dist: Vec<f64>,
    weights: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// One defect found by [`MetricInstance::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MetricViolation {
    NegativeDistance {
        u: usize,
        v: usize,
        value: f64,
    },
    NonzeroDiagonal {
        u: usize,
        value: f64,
    },
    Asymmetry {
        u: usize,
        v: usize,
        forward: f64,
        backward: f64,
    },
    Triangle {
        u: usize,
        v: usize,
        w: usize,
        direct: f64,
        detour: f64,
    },
    NegativeWeight {
        v: usize,
        value: f64,
    },
}

/// Outcome of [`MetricInstance::rescale`].
#[derive(Clone, Debug)]
pub struct Rescaled {
    pub instance: MetricInstance,
    /// Multiply rescaled costs by this factor to map back to the original.
    pub factor: f64,
    /// Original point index -> rescaled point index.
    pub point_map: Vec<usize>,
    /// Rescaled point index -> representative original index.
    pub representatives: Vec<usize>,
    /// Set when fewer than two distinct points exist.
    pub degenerate: bool,
}

impl MetricInstance {
    /// Build from a dense distance matrix. Shape and weight signs are
    /// checked here; metric axioms are checked by [`validate`], which is
    /// report-only.
    ///
    /// [`validate`]: MetricInstance::validate
    pub fn from_matrix(
        matrix: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = matrix.len();
        let mut dist = Vec::with_capacity(n * n);
        for row in &matrix {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "distance matrix is not square: {} rows but a row of length {}",
                    n,
                    row.len()
                )));
            }
            for &d in row {
                if !d.is_finite() {
                    return Err(Error::InvalidInput("non-finite distance entry".into()));
                }
                dist.push(d);
            }
        }
        Self::finish(n, dist, weights, labels)
    }

    /// Build from coordinates; pairwise Euclidean distances are
    /// materialized into the dense matrix.
    pub fn from_points(
        points: &[Vec<f64>],
        weights: Option<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = points.len();
        let dim = points.first().map_or(0, Vec::len);
        for p in points {
            if p.len() != dim {
                return Err(Error::InvalidInput("inconsistent point dimensions".into()));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput("non-finite coordinate".into()));
            }
        }
        let mut dist = vec![0.0; n * n];
        for u in 0..n {
            for v in (u + 1)..n {
                let d = points[u]
                    .iter()
                    .zip(&points[v])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[u * n + v] = d;
                dist[v * n + u] = d;
            }
        }
        Self::finish(n, dist, weights, labels)
    }

    fn finish(
        n: usize,
        dist: Vec<f64>,
        weights: Option<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let weights = weights.unwrap_or_else(|| vec![1.0; n]);
        if weights.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} points",
                weights.len(),
                n
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidInput(format!(
                "negative or non-finite weight {w}"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidInput(format!(
                    "{} labels for {n} points",
                    l.len()
                )));
            }
        }
        Ok(MetricInstance {
            n,
            dist,
            weights,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.n + v]
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest strictly positive pairwise distance, if any.
    pub fn min_nonzero_distance(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                let d = self.distance(u, v);
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        (best < f64::INFINITY).then_some(best)
    }

    /// Report every symmetry, diagonal, triangle-inequality, and sign
    /// defect beyond `METRIC_TOL`. An empty report means the instance is a
    /// valid semi-metric.
    pub fn validate(&self) -> Vec<MetricViolation> {
        let mut out = Vec::new();
        for (v, &w) in self.weights.iter().enumerate() {
            if w < 0.0 {
                out.push(MetricViolation::NegativeWeight { v, value: w });
            }
        }
        for u in 0..self.n {
            let duu = self.distance(u, u);
            if duu.abs() > METRIC_TOL {
                out.push(MetricViolation::NonzeroDiagonal { u, value: duu });
            }
            for v in 0..self.n {
                let d = self.distance(u, v);
                if d < -METRIC_TOL {
                    out.push(MetricViolation::NegativeDistance { u, v, value: d });
                }
                if u < v {
                    let back = self.distance(v, u);
                    if (d - back).abs() > METRIC_TOL {
                        out.push(MetricViolation::Asymmetry {
                            u,
                            v,
                            forward: d,
                            backward: back,
                        });
                    }
                }
            }
        }
        for u in 0..self.n {
            for v in 0..self.n {
                if v == u {
                    continue;
                }
                let direct = self.distance(u, v);
                for w in 0..self.n {
                    if w == u || w == v {
                        continue;
                    }
                    let detour = self.distance(u, w) + self.distance(w, v);
                    if direct > detour + METRIC_TOL {
                        // Report each unordered triple once, at its worst witness.
                        if u < v {
                            out.push(MetricViolation::Triangle {
                                u,
                                v,
                                w,
                                direct,
                                detour,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Weighted k-median objective: sum over points of weight times the
    /// distance to the nearest center.
    pub fn cost(&self, centers: &[usize]) -> Result<f64> {
        if centers.is_empty() {
            return Err(Error::NoCenters);
        }
        let mut total = 0.0;
        for v in 0..self.n {
            total += self.weights[v] * self.nearest(v, centers).1;
        }
        Ok(total)
    }

    /// Nearest center to `v` (lowest index on ties) and its distance.
    pub fn nearest(&self, v: usize, centers: &[usize]) -> (usize, f64) {
        let mut best = (centers[0], self.distance(v, centers[0]));
        for &c in &centers[1..] {
            let d = self.distance(v, c);
            if d < best.1 {
                best = (c, d);
            }
        }
        best
    }

    /// Collapse exact duplicates (distance 0) into single points with
    /// summed weight, then divide all distances by the minimum nonzero
    /// distance so it becomes 1. Costs on the rescaled instance map back
    /// to the original via `factor`.
    pub fn rescale(&self) -> Rescaled {
        // Union duplicates; zero distance is transitive in a valid semi-metric,
        // and union-find keeps this safe even when it is not.
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut root = x;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = x;
            while parent[cur] != root {
                let next = parent[cur];
                parent[cur] = root;
                cur = next;
            }
            root
        }
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.distance(u, v) <= 0.0 {
                    let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                    if ru != rv {
                        let (lo, hi) = (ru.min(rv), ru.max(rv));
                        parent[hi] = lo;
                    }
                }
            }
        }

        let mut representatives = Vec::new();
        let mut point_map = vec![usize::MAX; self.n];
        for v in 0..self.n {
            let root = find(&mut parent, v);
            if root == v {
                point_map[v] = representatives.len();
                representatives.push(v);
            }
        }
        for v in 0..self.n {
            let root = find(&mut parent, v);
            point_map[v] = point_map[root];
        }

        let m = representatives.len();
        let mut weights = vec![0.0; m];
        for v in 0..self.n {
            weights[point_map[v]] += self.weights[v];
        }
        let labels = self.labels.as_ref().map(|l| {
            representatives
                .iter()
                .map(|&r| l[r].clone())
                .collect::<Vec<_>>()
        });

        let mut dist = vec![0.0; m * m];
        let mut min_nonzero = f64::INFINITY;
        for i in 0..m {
            for j in 0..m {
                let d = self.distance(representatives[i], representatives[j]);
                dist[i * m + j] = d;
                if i < j && d > 0.0 {
                    min_nonzero = min_nonzero.min(d);
                }
            }
        }

        if m < 2 || !min_nonzero.is_finite() {
            let instance = MetricInstance {
                n: m,
                dist,
                weights,
                labels,
            };
            return Rescaled {
                instance,
                factor: 1.0,
                point_map,
                representatives,
                degenerate: true,
            };
        }

        for d in dist.iter_mut() {
            *d /= min_nonzero;
        }
        let instance = MetricInstance {
            n: m,
            dist,
            weights,
            labels,
        };
        Rescaled {
            instance,
            factor: min_nonzero,
            point_map,
            representatives,
            degenerate: false,
        }
    }
}

/// Serialized form of a problem instance.
///
/// `{"metric": "matrix"|"euclidean", "matrix": ...?, "points": ...?,
///  "weights": ...?, "labels": ...?}`
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default = "default_format")]
    pub format: u32,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

fn default_format() -> u32 {
    1
}

impl MetricInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        match file.metric.as_str() {
            "matrix" => {
                let matrix = file.matrix.ok_or_else(|| {
                    Error::InvalidInput("metric=matrix requires \"matrix\"".into())
                })?;
                Self::from_matrix(matrix, file.weights, file.labels)
            }
            "euclidean" => {
                let points = file.points.ok_or_else(|| {
                    Error::InvalidInput("metric=euclidean requires \"points\"".into())
                })?;
                Self::from_points(&points, file.weights, file.labels)
            }
            other => Err(Error::InvalidInput(format!(
                "unknown metric kind {other:?}"
            ))),
        }
    }

    /// Serialize in the canonical (matrix) form.
    pub fn to_json(&self) -> String {
        let matrix = (0..self.n)
            .map(|u| (0..self.n).map(|v| self.distance(u, v)).collect())
            .collect();
        let file = InstanceFile {
            format: 1,
            metric: "matrix".into(),
            matrix: Some(matrix),
            points: None,
            weights: Some(self.weights.clone()),
            labels: self.labels.clone(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }
}

/// Result of a solver run, serialized as the `solve` command's output.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolutionReport {
    #[serde(default = "default_format")]
    pub format: u32,
    pub centers: Vec<usize>,
    pub cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_objective: Option<f64>,
    pub trials_used: u64,
    pub seed: u64,
}

//! Leader/radius guess enumeration and candidate-set construction.
//!
//! A guess fixes, per cluster, a leader point and a radius class
//! `R* = (1+eps)^t`. The cluster's candidate set holds every point within
//! `R*(1+eps)` of the leader plus a synthetic copy of the leader itself;
//! copies keep candidate sets of different clusters disjoint even when the
//! physical points coincide.

use std::ops::Range;

use crate::coreset::WeightedSubset;
use crate::error::{Error, Result};
use crate::metric::{MetricInstance, METRIC_TOL};

/// Default cap on the number of enumerated guesses.
pub const DEFAULT_GUESS_BUDGET: u128 = 10_000_000;

/// One (leaders, radius classes) guess.
#[derive(Clone, Debug, PartialEq)]
pub struct Guess {
    /// Ordered leaders, one per cluster; repeats across clusters allowed.
    pub leaders: Vec<usize>,
    /// Per-cluster exponent `t`, meaning `R* = (1+eps)^t`.
    pub radius_class: Vec<u32>,
    pub epsilon: f64,
}

/// One candidate: a (cluster, physical point) pair. The synthetic leader
/// copy is an ordinary candidate at distance zero from its leader.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateEntry {
    pub cluster: usize,
    pub point: usize,
    pub leader_copy: bool,
}

/// Disjoint per-cluster candidate lists, stored cluster-major.
#[derive(Clone, Debug)]
pub struct CandidateSets {
    pub k: usize,
    pub epsilon: f64,
    pub leaders: Vec<usize>,
    entries: Vec<CandidateEntry>,
    cluster_ranges: Vec<Range<usize>>,
}

impl CandidateSets {
    pub fn from_parts(
        k: usize,
        epsilon: f64,
        leaders: Vec<usize>,
        per_cluster: Vec<Vec<CandidateEntry>>,
    ) -> Self {
        let mut entries = Vec::new();
        let mut cluster_ranges = Vec::with_capacity(k);
        for cluster in per_cluster {
            let start = entries.len();
            entries.extend(cluster);
            cluster_ranges.push(start..entries.len());
        }
        CandidateSets {
            k,
            epsilon,
            leaders,
            entries,
            cluster_ranges,
        }
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, id: usize) -> &CandidateEntry {
        &self.entries[id]
    }

    pub fn entries(&self) -> &[CandidateEntry] {
        &self.entries
    }

    pub fn cluster_range(&self, cluster: usize) -> Range<usize> {
        self.cluster_ranges[cluster].clone()
    }

    /// Cluster-wise (leader, sorted physical points) fingerprint; two
    /// guesses with equal signatures induce identical relaxations.
    pub fn signature(&self) -> Vec<(usize, Vec<usize>)> {
        let mut sig: Vec<(usize, Vec<usize>)> = (0..self.k)
            .map(|i| {
                let mut points: Vec<usize> = self
                    .cluster_range(i)
                    .map(|e| self.entries[e].point)
                    .collect();
                points.sort_unstable();
                (self.leaders[i], points)
            })
            .collect();
        sig.sort();
        sig
    }
}

/// Radius-class exponents `0..=ceil(log_{1+eps}(max distance))` for a
/// rescaled instance (minimum nonzero distance 1).
pub fn radius_classes(instance: &MetricInstance, epsilon: f64) -> Result<Vec<u32>> {
    let max = instance.max_distance();
    if max <= 1.0 + METRIC_TOL {
        return Ok(vec![0]);
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidInput(
            "epsilon must be positive when distances exceed 1".into(),
        ));
    }
    let top = (max.ln() / (1.0 + epsilon).ln() - 1e-12).ceil() as u32;
    Ok((0..=top).collect())
}

/// Deterministic lexicographic stream over all `|coreset|^k * |classes|^k`
/// (leaders, radius classes) combinations.
#[derive(Debug)]
pub struct GuessEnumerator {
    leader_pool: Vec<usize>,
    classes: Vec<u32>,
    k: usize,
    epsilon: f64,
    /// Mixed-radix counter: k leader digits (major) then k class digits.
    state: Vec<usize>,
    exhausted: bool,
    total: u128,
    emitted: u128,
}

impl GuessEnumerator {
    pub fn total(&self) -> u128 {
        self.total
    }
}

impl Iterator for GuessEnumerator {
    type Item = Guess;

    fn next(&mut self) -> Option<Guess> {
        if self.exhausted {
            return None;
        }
        let guess = Guess {
            leaders: self.state[..self.k]
                .iter()
                .map(|&i| self.leader_pool[i])
                .collect(),
            radius_class: self.state[self.k..]
                .iter()
                .map(|&i| self.classes[i])
                .collect(),
            epsilon: self.epsilon,
        };
        self.emitted += 1;
        // advance the mixed-radix counter, class digits fastest
        let mut pos = self.state.len();
        loop {
            if pos == 0 {
                self.exhausted = true;
                break;
            }
            pos -= 1;
            let radix = if pos < self.k {
                self.leader_pool.len()
            } else {
                self.classes.len()
            };
            if self.state[pos] + 1 < radix {
                self.state[pos] += 1;
                for p in (pos + 1)..self.state.len() {
                    self.state[p] = 0;
                }
                break;
            }
        }
        Some(guess)
    }
}

/// Refuses to start when the total count exceeds `budget`.
pub fn enumerate_guesses(
    coreset: &WeightedSubset,
    k: usize,
    epsilon: f64,
    classes: &[u32],
    budget: u128,
) -> Result<GuessEnumerator> {
    if coreset.is_empty() {
        return Err(Error::InvalidInput("coreset is empty".into()));
    }
    if k == 0 || classes.is_empty() {
        return Err(Error::InvalidInput(
            "need k >= 1 and at least one class".into(),
        ));
    }
    let total = (coreset.len() as u128)
        .checked_pow(k as u32)
        .and_then(|l| {
            (classes.len() as u128)
                .checked_pow(k as u32)
                .and_then(|c| l.checked_mul(c))
        })
        .ok_or(Error::GuessBudgetExceeded {
            count: u128::MAX,
            budget,
        })?;
    if total > budget {
        return Err(Error::GuessBudgetExceeded {
            count: total,
            budget,
        });
    }
    Ok(GuessEnumerator {
        leader_pool: coreset.indices.clone(),
        classes: classes.to_vec(),
        k,
        epsilon,
        state: vec![0; 2 * k],
        exhausted: false,
        total,
        emitted: 0,
    })
}

/// The guess a correct enumeration would have to contain for the given
/// optimal centers: partition coreset points to their nearest center, take
/// the in-part point closest to the center as leader, and round the
/// leader-to-center distance down to a power of `1+eps` (class 0 when the
/// distance is at most 1).
pub fn planted_guess(
    instance: &MetricInstance,
    coreset: &WeightedSubset,
    k: usize,
    epsilon: f64,
    optimal_centers: &[usize],
) -> Result<Guess> {
    if optimal_centers.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} centers for k = {k}",
            optimal_centers.len()
        )));
    }
    if coreset.is_empty() {
        return Err(Error::InvalidInput("coreset is empty".into()));
    }

    // nearest-center partition of the coreset, ties to the lowest center index
    let mut part_of = Vec::with_capacity(coreset.len());
    for &v in &coreset.indices {
        let mut best = (0usize, f64::INFINITY);
        for (i, &c) in optimal_centers.iter().enumerate() {
            let d = instance.distance(v, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        part_of.push(best.0);
    }

    let mut leaders = Vec::with_capacity(k);
    let mut radius_class = Vec::with_capacity(k);
    for (i, &center) in optimal_centers.iter().enumerate() {
        let mut leader: Option<(usize, f64)> = None;
        for (pos, &v) in coreset.indices.iter().enumerate() {
            if part_of[pos] != i {
                continue;
            }
            let d = instance.distance(v, center);
            if leader.is_none() || d < leader.unwrap().1 {
                leader = Some((v, d));
            }
        }
        // empty part: fall back to the coreset point nearest to the center
        let (leader_point, dist) = leader.unwrap_or_else(|| {
            coreset
                .indices
                .iter()
                .map(|&v| (v, instance.distance(v, center)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("coreset is nonempty")
        });
        leaders.push(leader_point);
        radius_class.push(class_of(dist, epsilon));
    }
    Ok(Guess {
        leaders,
        radius_class,
        epsilon,
    })
}

/// `floor(log_{1+eps} d)`, clamped to class 0 for `d <= 1`.
fn class_of(dist: f64, epsilon: f64) -> u32 {
    if dist <= 1.0 + METRIC_TOL || epsilon <= 0.0 {
        return 0;
    }
    ((dist.ln() / (1.0 + epsilon).ln()) + 1e-12).floor() as u32
}

/// Materialize the candidate sets of a guess: per cluster, every physical
/// point within `(1+eps)^(t+1)` of the leader, plus the leader copy.
pub fn candidate_sets(instance: &MetricInstance, guess: &Guess) -> CandidateSets {
    let k = guess.leaders.len();
    let mut per_cluster = Vec::with_capacity(k);
    for i in 0..k {
        let leader = guess.leaders[i];
        let threshold = (1.0 + guess.epsilon).powi(guess.radius_class[i] as i32 + 1);
        let mut cluster = Vec::new();
        for point in 0..instance.n() {
            if instance.distance(leader, point) <= threshold + METRIC_TOL {
                cluster.push(CandidateEntry {
                    cluster: i,
                    point,
                    leader_copy: false,
                });
            }
        }
        cluster.push(CandidateEntry {
            cluster: i,
            point: leader,
            leader_copy: true,
        });
        per_cluster.push(cluster);
    }
    CandidateSets::from_parts(k, guess.epsilon, guess.leaders.clone(), per_cluster)
}

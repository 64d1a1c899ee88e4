//! Randomized opening, the assignment rule, trial orchestration, and the
//! end-to-end solver pipeline.
//!
//! Per cluster, one opening event happens independently: the leader with
//! probability `p`, otherwise one candidate drawn from the cluster's `y`
//! distribution. The assignment rule a point follows for the analysis
//! prefers an open connected candidate in the cheapest cluster, then an
//! open leader among near clusters, then whatever the cheapest cluster
//! opened; its per-case cost labels are what the factor-revealing analysis
//! bounds. Reported solution costs always use true nearest-center
//! assignment, which can only be better.

use rayon::prelude::*;

use crate::bounds;
use crate::coreset::{identity_coreset, sampling_coreset, WeightedSubset};
use crate::error::{Error, Result};
use crate::guessing::{
    candidate_sets, enumerate_guesses, planted_guess, radius_classes, CandidateSets, Guess,
    DEFAULT_GUESS_BUDGET,
};
use crate::metric::{MetricInstance, SolutionReport};
use crate::oracle;
use crate::relaxation::{
    build_lp, solve_lp, split_centers, FractionalSolution, LpModel, SplitOutcome,
};
use crate::rng::RngStream;

const GUESS_STREAM: u64 = 0x67756573; // "gues"

/// What a cluster opened in one trial.
#[derive(Clone, Debug, PartialEq)]
pub enum OpenEvent {
    Leader(usize),
    Entry { entry: usize, point: usize },
}

impl OpenEvent {
    pub fn point(&self) -> usize {
        match self {
            OpenEvent::Leader(point) => *point,
            OpenEvent::Entry { point, .. } => *point,
        }
    }
}

/// Per-cluster opening decisions and the realized distinct center set.
#[derive(Clone, Debug)]
pub struct OpenedSolution {
    pub events: Vec<OpenEvent>,
    pub centers: Vec<usize>,
}

/// One opening event per cluster: the leader with probability `p`, else a
/// candidate sampled from the cluster's normalized `y` mass. Deterministic
/// given the trial stream.
pub fn round(
    solution: &FractionalSolution,
    sets: &CandidateSets,
    p: f64,
    trial_rng: &RngStream,
) -> OpenedSolution {
    debug_assert!(solution.split, "rounding expects a split solution");
    let mut events = Vec::with_capacity(sets.k);
    let mut centers = Vec::with_capacity(sets.k);
    for cluster in 0..sets.k {
        let mut rng = trial_rng.derive(cluster as u64);
        let event = if rng.next_f64() < p {
            OpenEvent::Leader(sets.leaders[cluster])
        } else {
            let range = sets.cluster_range(cluster);
            let weights = &solution.y[range.clone()];
            let entry = range.start + rng.choose_weighted(weights);
            OpenEvent::Entry {
                entry,
                point: sets.entry(entry).point,
            }
        };
        centers.push(event.point());
        events.push(event);
    }
    centers.sort_unstable();
    centers.dedup();
    OpenedSolution { events, centers }
}

/// A candidate the point is fractionally connected to.
#[derive(Clone, Debug)]
pub struct ConnectedEntry {
    pub entry: usize,
    pub x: f64,
    pub raw_distance: f64,
}

/// One cluster as seen from a fixed point: its flow, truncated mean
/// distance, connected candidates, and the leader's raw distance.
#[derive(Clone, Debug)]
pub struct ClusterView {
    pub cluster: usize,
    pub mu: f64,
    pub s: f64,
    pub entries: Vec<ConnectedEntry>,
    pub leader_distance: f64,
}

/// The analysis view of a fixed point: clusters sorted by truncated mean
/// distance, the near-cluster prefix, and the distance cap.
#[derive(Clone, Debug)]
pub struct PointContext {
    pub position: usize,
    pub views: Vec<ClusterView>,
    /// Prefix length of `views` with `s <= 1.5 * s1`.
    pub a_len: usize,
    pub s1: f64,
    /// `3 * s1 * (1 + eps)`, the self-consistent truncation cap: candidate
    /// distances are truncated at this value in the analysis view.
    pub cap: f64,
    pub epsilon: f64,
    /// LP connection cost of the point, on untruncated distances.
    pub lp_value: f64,
    /// Raw distances to every entry of the cheapest cluster (for the
    /// fallback case, whose open candidate need not be connected).
    first_cluster_dist: Vec<f64>,
    first_cluster_start: usize,
}

impl PointContext {
    /// Raw distance to an entry of the cheapest cluster.
    pub fn first_cluster_distance(&self, entry: usize) -> f64 {
        self.first_cluster_dist[entry - self.first_cluster_start]
    }
}

/// Build the analysis view of coreset point `position`, whose physical
/// instance index is `physical`.
///
/// Mean distances use candidate distances truncated at `3 * s1 * (1+eps)`;
/// the cap is iterated to its fixed point so the final `s1` is consistent
/// with the cap computed from it. Leader distances are never truncated.
pub fn point_context(
    position: usize,
    physical: usize,
    solution: &FractionalSolution,
    model: &LpModel,
    sets: &CandidateSets,
    instance: &MetricInstance,
    epsilon: f64,
) -> Result<PointContext> {
    const X_TOL: f64 = 1e-11;
    let mut per_cluster: Vec<Vec<ConnectedEntry>> = vec![Vec::new(); sets.k];
    let mut lp_value = 0.0;
    for p in model.point_pairs[position].clone() {
        let x = solution.x[p];
        if x > X_TOL {
            let (_, entry) = model.pairs[p];
            let cluster = sets.entry(entry).cluster;
            let raw = model.pair_dist[p];
            lp_value += x * raw;
            per_cluster[cluster].push(ConnectedEntry {
                entry,
                x,
                raw_distance: raw,
            });
        }
    }

    let connected: Vec<(usize, Vec<ConnectedEntry>)> = per_cluster
        .into_iter()
        .enumerate()
        .filter(|(_, entries)| !entries.is_empty())
        .collect();
    if connected.is_empty() {
        return Err(Error::Internal(format!(
            "point {position} has no connections"
        )));
    }

    let mus: Vec<f64> = connected
        .iter()
        .map(|(_, entries)| entries.iter().map(|e| e.x).sum())
        .collect();
    let total: f64 = mus.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Internal(format!(
            "point {position} has total flow {total}"
        )));
    }

    let mean_with_cap = |entries: &[ConnectedEntry], mu: f64, cap: f64| -> f64 {
        entries
            .iter()
            .map(|e| e.x * e.raw_distance.min(cap))
            .sum::<f64>()
            / mu
    };

    // fixed point of s1 = min_i mean_i(min(d, 3 s1 (1+eps)))
    let mut s1 = connected
        .iter()
        .zip(&mus)
        .map(|((_, entries), &mu)| entries.iter().map(|e| e.x * e.raw_distance).sum::<f64>() / mu)
        .fold(f64::INFINITY, f64::min);
    let mut cap = 3.0 * s1 * (1.0 + epsilon);
    for _ in 0..200 {
        let next = connected
            .iter()
            .zip(&mus)
            .map(|((_, entries), &mu)| mean_with_cap(entries, mu, cap))
            .fold(f64::INFINITY, f64::min);
        if next >= s1 - 1e-15 * (1.0 + s1.abs()) {
            s1 = next;
            break;
        }
        s1 = next;
        cap = 3.0 * s1 * (1.0 + epsilon);
    }
    cap = 3.0 * s1 * (1.0 + epsilon);

    let point_physical = physical;
    let mut views: Vec<ClusterView> = connected
        .into_iter()
        .zip(&mus)
        .map(|((cluster, entries), &mu)| {
            let s = mean_with_cap(&entries, mu, cap);
            let leader_distance = instance.distance(point_physical, sets.leaders[cluster]);
            ClusterView {
                cluster,
                mu,
                s,
                entries,
                leader_distance,
            }
        })
        .collect();
    views.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.cluster.cmp(&b.cluster)));
    let s1 = views[0].s;
    let cap = 3.0 * s1 * (1.0 + epsilon);
    let a_len = views.iter().take_while(|v| v.s <= 1.5 * s1 + 1e-9).count();

    let first_range = sets.cluster_range(views[0].cluster);
    let first_cluster_start = first_range.start;
    let first_cluster_dist: Vec<f64> = first_range
        .map(|e| instance.distance(point_physical, sets.entry(e).point))
        .collect();

    Ok(PointContext {
        position,
        views,
        a_len,
        s1,
        cap,
        epsilon,
        lp_value,
        first_cluster_dist,
        first_cluster_start,
    })
}

/// Which branch of the assignment rule fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssignCase {
    /// An open connected candidate in the cheapest such cluster.
    DirectEntry,
    /// An open leader among the near clusters.
    NearLeader,
    /// Whatever the cheapest cluster opened.
    Fallback,
}

/// The assignment decision for one point in one trial.
#[derive(Clone, Debug)]
pub struct Assignment {
    pub center: usize,
    /// The analysis cost label: `s_i*`, `2 s_j*`, or `3 s1 (1+eps)`.
    pub label: f64,
    pub case: AssignCase,
    /// Untruncated distance to the assigned center.
    pub raw_distance: f64,
    /// Distance in the analysis view: candidate distances truncated at the
    /// cap, leader distances raw.
    pub analysis_distance: f64,
}

/// Apply the assignment rule to one point for a fixed set of opened
/// centers.
pub fn assign(context: &PointContext, opened: &OpenedSolution) -> Assignment {
    // direct connection: first (cheapest) cluster whose opened event is a
    // candidate the point is connected to
    for view in &context.views {
        if let OpenEvent::Entry { entry, point } = &opened.events[view.cluster] {
            if let Some(hit) = view.entries.iter().find(|c| c.entry == *entry) {
                return Assignment {
                    center: *point,
                    label: view.s,
                    case: AssignCase::DirectEntry,
                    raw_distance: hit.raw_distance,
                    analysis_distance: hit.raw_distance.min(context.cap),
                };
            }
        }
    }
    // open leader among the near clusters, in near order
    for view in &context.views[..context.a_len] {
        if let OpenEvent::Leader(point) = &opened.events[view.cluster] {
            return Assignment {
                center: *point,
                label: 2.0 * view.s,
                case: AssignCase::NearLeader,
                raw_distance: view.leader_distance,
                analysis_distance: view.leader_distance,
            };
        }
    }
    // fallback: the cheapest cluster opened something
    let first = &context.views[0];
    let label = 3.0 * context.s1 * (1.0 + context.epsilon);
    match &opened.events[first.cluster] {
        OpenEvent::Leader(point) => Assignment {
            center: *point,
            label,
            case: AssignCase::Fallback,
            raw_distance: first.leader_distance,
            analysis_distance: first.leader_distance,
        },
        OpenEvent::Entry { entry, point } => {
            let raw = context.first_cluster_distance(*entry);
            Assignment {
                center: *point,
                label,
                case: AssignCase::Fallback,
                raw_distance: raw,
                analysis_distance: raw.min(context.cap),
            }
        }
    }
}

/// How the pipeline picks its guesses.
#[derive(Clone, Debug)]
pub enum SolveMode {
    /// Enumerate every (leaders, radii) combination under the budget.
    Full,
    /// Single guess built from optimal centers (provided, or found by the
    /// brute-force oracle).
    Planted { centers: Option<Vec<usize>> },
}

/// Which coreset stands in for the instance.
#[derive(Clone, Copy, Debug)]
pub enum CoresetMode {
    Identity,
    Sampling,
}

#[derive(Clone, Debug)]
pub struct SolveParams {
    pub k: usize,
    pub epsilon: f64,
    /// Leader-opening probability; `None` uses the analysis optimum.
    pub p: Option<f64>,
    pub trials: u64,
    pub mode: SolveMode,
    pub seed: u64,
    pub guess_budget: u128,
    pub coreset: CoresetMode,
}

impl SolveParams {
    pub fn new(k: usize, epsilon: f64) -> Self {
        SolveParams {
            k,
            epsilon,
            p: None,
            trials: 200,
            mode: SolveMode::Full,
            seed: 0,
            guess_budget: DEFAULT_GUESS_BUDGET,
            coreset: CoresetMode::Identity,
        }
    }
}

struct GuessOutcome {
    raw_index: u64,
    lp_objective: f64,
    best_cost: f64,
    best_centers: Vec<usize>,
}

/// The full pipeline: rescale, coreset, guesses, per-guess relaxation and
/// rounding trials, each trial evaluated by true nearest-center cost on
/// the full (rescaled) instance; the best solution maps back to original
/// indices and scale. Deterministic given the seed, independent of thread
/// count.
pub fn solve(instance: &MetricInstance, params: &SolveParams) -> Result<SolutionReport> {
    if params.k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if params.trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let p = params.p.unwrap_or_else(bounds::p_star);
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput("p must lie in [0, 1]".into()));
    }
    if instance.n() == 0 {
        return Err(Error::InvalidInput("empty instance".into()));
    }

    let rescaled = instance.rescale();
    let work = &rescaled.instance;

    // enough centers for every distinct point: zero cost, no LP needed
    if params.k >= work.n() {
        let centers = rescaled.representatives.clone();
        let cost = instance.cost(&centers)?;
        return Ok(SolutionReport {
            format: 1,
            centers,
            cost,
            lp_objective: None,
            trials_used: 0,
            seed: params.seed,
        });
    }

    let coreset = match params.coreset {
        CoresetMode::Identity => identity_coreset(work),
        CoresetMode::Sampling => sampling_coreset(work, params.k, params.epsilon, params.seed)?,
    };

    let guesses: Vec<(u64, Guess)> = match &params.mode {
        SolveMode::Planted { centers } => {
            let centers_rescaled = match centers {
                Some(original) => {
                    let mut mapped: Vec<usize> =
                        original.iter().map(|&c| rescaled.point_map[c]).collect();
                    mapped.sort_unstable();
                    mapped.dedup();
                    if mapped.len() != params.k {
                        return Err(Error::InvalidInput(
                            "provided centers do not give k distinct points".into(),
                        ));
                    }
                    mapped
                }
                None => oracle::brute_force_kmedian(work, params.k)?.best_set,
            };
            vec![(
                0,
                planted_guess(work, &coreset, params.k, params.epsilon, &centers_rescaled)?,
            )]
        }
        SolveMode::Full => {
            let classes = radius_classes(work, params.epsilon)?;
            let stream = enumerate_guesses(
                &coreset,
                params.k,
                params.epsilon,
                &classes,
                params.guess_budget,
            )?;
            // Guesses with identical candidate structure induce identical
            // relaxations and rounding distributions; solve each once.
            let mut seen = std::collections::HashSet::new();
            let mut unique = Vec::new();
            for (raw_index, guess) in stream.enumerate() {
                let sets = candidate_sets(work, &guess);
                if seen.insert(sets.signature()) {
                    unique.push((raw_index as u64, guess));
                }
            }
            unique
        }
    };

    let master = RngStream::new(params.seed).derive(GUESS_STREAM);
    let outcomes: Vec<Option<GuessOutcome>> = guesses
        .par_iter()
        .map(|(raw_index, guess)| {
            run_guess(work, &coreset, guess, *raw_index, p, params.trials, &master)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<GuessOutcome> = None;
    let mut feasible = 0u64;
    for outcome in outcomes.into_iter().flatten() {
        feasible += 1;
        let better = match &best {
            None => true,
            Some(current) => match outcome.best_cost.total_cmp(&current.best_cost) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => outcome.raw_index < current.raw_index,
                std::cmp::Ordering::Greater => false,
            },
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.ok_or_else(|| Error::Internal("no feasible guess".into()))?;

    let centers: Vec<usize> = best
        .best_centers
        .iter()
        .map(|&c| rescaled.representatives[c])
        .collect();
    let cost = instance.cost(&centers)?;
    Ok(SolutionReport {
        format: 1,
        centers,
        cost,
        lp_objective: Some(best.lp_objective * rescaled.factor),
        trials_used: feasible * params.trials,
        seed: params.seed,
    })
}

fn run_guess(
    work: &MetricInstance,
    coreset: &WeightedSubset,
    guess: &Guess,
    raw_index: u64,
    p: f64,
    trials: u64,
    master: &RngStream,
) -> Result<Option<GuessOutcome>> {
    let sets = candidate_sets(work, guess);
    let model = match build_lp(coreset, &sets, work) {
        Ok(model) => model,
        Err(Error::InfeasibleGuess) => return Ok(None),
        Err(other) => return Err(other),
    };
    let solution = match solve_lp(&model) {
        Ok(solution) => solution,
        Err(Error::InfeasibleGuess) => return Ok(None),
        Err(other) => return Err(other),
    };
    let lp_objective = solution.objective;
    let split = split_centers(&solution, &model, &sets)?;

    let guess_rng = master.derive(raw_index);
    let mut best_cost = f64::INFINITY;
    let mut best_centers = Vec::new();
    for trial in 0..trials {
        let trial_rng = guess_rng.derive(trial);
        let opened = round(&split.solution, &split.sets, p, &trial_rng);
        let cost = work.cost(&opened.centers)?;
        if cost < best_cost {
            best_cost = cost;
            best_centers = opened.centers;
        }
    }
    Ok(Some(GuessOutcome {
        raw_index,
        lp_objective,
        best_cost,
        best_centers,
    }))
}

/// Per-point Monte Carlo statistics of the assignment-rule label cost.
#[derive(Clone, Debug)]
pub struct PointTrialStats {
    pub position: usize,
    /// LP connection cost on raw distances.
    pub lp_value: f64,
    pub mean_label: f64,
    pub std_error: f64,
    /// Largest analysis-view distance realized across trials.
    pub max_analysis_distance: f64,
    /// The point's `3 s1 (1+eps)` bound.
    pub bound: f64,
}

/// Aggregate trial-level checks.
#[derive(Clone, Debug)]
pub struct TrialAggregate {
    /// Max over trials of (true nearest cost - sum of w * raw assigned
    /// distance); nonpositive when the analysis assignment upper-bounds
    /// the reported cost.
    pub max_true_minus_assigned: f64,
    pub trials: u64,
}

/// Run `trials` rounding repetitions against a split solution and collect,
/// per coreset point, the label-cost mean, its standard error, and the
/// worst realized analysis distance.
pub fn monte_carlo_label_stats(
    split: &SplitOutcome,
    coreset: &WeightedSubset,
    instance: &MetricInstance,
    p: f64,
    trials: u64,
    seed_rng: &RngStream,
) -> Result<(Vec<PointTrialStats>, TrialAggregate)> {
    let contexts: Vec<PointContext> = (0..split.model.num_points)
        .map(|position| point_context_for(position, split, coreset, instance))
        .collect::<Result<Vec<_>>>()?;

    let mut sums = vec![0.0f64; contexts.len()];
    let mut squares = vec![0.0f64; contexts.len()];
    let mut max_analysis = vec![0.0f64; contexts.len()];
    let mut max_gap = f64::NEG_INFINITY;

    for trial in 0..trials {
        let trial_rng = seed_rng.derive(trial);
        let opened = round(&split.solution, &split.sets, p, &trial_rng);
        let mut assigned_cost = 0.0;
        for (i, context) in contexts.iter().enumerate() {
            let assignment = assign(context, &opened);
            sums[i] += assignment.label;
            squares[i] += assignment.label * assignment.label;
            if assignment.analysis_distance > max_analysis[i] {
                max_analysis[i] = assignment.analysis_distance;
            }
            assigned_cost += coreset.weights[i] * assignment.raw_distance;
        }
        let true_cost = coreset.cost(instance, &opened.centers)?;
        max_gap = max_gap.max(true_cost - assigned_cost);
    }

    let stats = contexts
        .iter()
        .enumerate()
        .map(|(i, context)| {
            let n = trials as f64;
            let mean = sums[i] / n;
            let variance = (squares[i] / n - mean * mean).max(0.0);
            PointTrialStats {
                position: i,
                lp_value: context.lp_value,
                mean_label: mean,
                std_error: (variance / n).sqrt(),
                max_analysis_distance: max_analysis[i],
                bound: 3.0 * context.s1 * (1.0 + context.epsilon),
            }
        })
        .collect();
    Ok((
        stats,
        TrialAggregate {
            max_true_minus_assigned: max_gap,
            trials,
        },
    ))
}

/// Context for a coreset point of a split outcome.
pub fn point_context_for(
    position: usize,
    split: &SplitOutcome,
    coreset: &WeightedSubset,
    instance: &MetricInstance,
) -> Result<PointContext> {
    point_context(
        position,
        coreset.indices[position],
        &split.solution,
        &split.model,
        &split.sets,
        instance,
        split.sets.epsilon,
    )
}

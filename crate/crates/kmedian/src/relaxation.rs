//! The assignment relaxation: model construction, solving, and the
//! center-splitting post-process.
//!
//! Variables are `y` per candidate entry and `x` per (point, entry) pair
//! that survives the too-close filter: a pair is instantiated only when
//! `d(v, c) >= d(leader_c, c)`. Points may connect to entries of any
//! cluster. Equality rows are held as two inequalities internally; the
//! coupling rows `x <= y` are generated lazily and re-solved until none is
//! violated, which keeps the dense tableau small while returning a vertex
//! of the full polytope.

use std::fmt::Write as _;
use std::ops::Range;

use crate::coreset::WeightedSubset;
use crate::error::{Error, Result};
use crate::guessing::{CandidateEntry, CandidateSets};
use crate::metric::MetricInstance;
use crate::simplex::{self, DenseLp, Relation, SimplexError};

/// Feasibility tolerance for all relaxation rows.
pub const ROW_TOL: f64 = 1e-7;
/// Tolerance for the split property `x in {0, y}`.
pub const SPLIT_TOL: f64 = 1e-9;
/// Connection values below this are structural zeros.
const X_TOL: f64 = 1e-11;

/// The relaxation of one guess, in sparse pair form.
#[derive(Clone, Debug)]
pub struct LpModel {
    pub k: usize,
    pub num_points: usize,
    pub num_entries: usize,
    /// Coreset weight per point position.
    pub point_weights: Vec<f64>,
    /// (point position, entry id) pairs, grouped by point position.
    pub pairs: Vec<(usize, usize)>,
    /// Raw distance d(v, entry) per pair.
    pub pair_dist: Vec<f64>,
    /// Objective coefficient w_v * d(v, entry) per pair.
    pub pair_cost: Vec<f64>,
    /// Pair range of each point position.
    pub point_pairs: Vec<Range<usize>>,
    /// Entry range of each cluster (entries are cluster-major).
    pub cluster_entries: Vec<Range<usize>>,
}

/// LP values after solving (and optionally splitting).
#[derive(Clone, Debug)]
pub struct FractionalSolution {
    /// Opening mass per entry.
    pub y: Vec<f64>,
    /// Connection mass per model pair.
    pub x: Vec<f64>,
    pub objective: f64,
    pub split: bool,
}

/// Output of [`split_centers`]: the rewritten solution together with the
/// expanded candidate sets and their rebuilt model.
#[derive(Clone, Debug)]
pub struct SplitOutcome {
    pub solution: FractionalSolution,
    pub sets: CandidateSets,
    pub model: LpModel,
}

/// Build the relaxation for a guess's candidate sets.
///
/// Errors with [`Error::InfeasibleGuess`] if some coreset point has every
/// pair filtered out (cannot happen when every cluster carries its leader
/// copy, which is never filtered).
pub fn build_lp(
    coreset: &WeightedSubset,
    sets: &CandidateSets,
    instance: &MetricInstance,
) -> Result<LpModel> {
    let num_points = coreset.len();
    let num_entries = sets.num_entries();
    let mut pairs = Vec::new();
    let mut pair_dist = Vec::new();
    let mut pair_cost = Vec::new();
    let mut point_pairs = Vec::with_capacity(num_points);

    // distance from each cluster's leader to each of its entries
    let leader_dist: Vec<f64> = (0..num_entries)
        .map(|e| {
            let entry = sets.entry(e);
            instance.distance(sets.leaders[entry.cluster], entry.point)
        })
        .collect();

    for (pos, &v) in coreset.indices.iter().enumerate() {
        let start = pairs.len();
        for e in 0..num_entries {
            let entry = sets.entry(e);
            let d = instance.distance(v, entry.point);
            // too-close filter: connections with d(v,c) < d(leader, c) are
            // forbidden and never instantiated
            if d >= leader_dist[e] - crate::metric::METRIC_TOL {
                pairs.push((pos, e));
                pair_dist.push(d);
                pair_cost.push(coreset.weights[pos] * d);
            }
        }
        if pairs.len() == start {
            return Err(Error::InfeasibleGuess);
        }
        point_pairs.push(start..pairs.len());
    }

    Ok(LpModel {
        k: sets.k,
        num_points,
        num_entries,
        point_weights: coreset.weights.clone(),
        pairs,
        pair_dist,
        pair_cost,
        point_pairs,
        cluster_entries: (0..sets.k).map(|i| sets.cluster_range(i)).collect(),
    })
}

impl LpModel {
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Objective value of a given (x, y) assignment.
    pub fn objective_of(&self, x: &[f64]) -> f64 {
        self.pair_cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Verify every relaxation row within `tol`; returns the first failure.
    pub fn check_feasibility(&self, sol: &FractionalSolution, tol: f64) -> Result<()> {
        for range in &self.cluster_entries {
            let total: f64 = sol.y[range.clone()].iter().sum();
            if (total - 1.0).abs() > tol {
                return Err(Error::Internal(format!("cluster mass {total} != 1")));
            }
        }
        for range in &self.point_pairs {
            let total: f64 = sol.x[range.clone()].iter().sum();
            if (total - 1.0).abs() > tol {
                return Err(Error::Internal(format!("point mass {total} != 1")));
            }
        }
        for (p, &(_, e)) in self.pairs.iter().enumerate() {
            if sol.x[p] > sol.y[e] + tol {
                return Err(Error::Internal(format!(
                    "coupling violated: x = {} > y = {}",
                    sol.x[p], sol.y[e]
                )));
            }
            if sol.x[p] < -tol {
                return Err(Error::Internal(format!("negative x = {}", sol.x[p])));
            }
        }
        if sol.y.iter().any(|&y| y < -tol) {
            return Err(Error::Internal("negative y".into()));
        }
        Ok(())
    }

    /// Plain-text dump in LP exchange format, for debugging.
    pub fn write_lp(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "\\ relaxation: {} entries, {} pairs",
            self.num_entries,
            self.num_pairs()
        );
        let _ = writeln!(out, "Minimize");
        let mut obj = String::from(" obj:");
        for (p, &(v, e)) in self.pairs.iter().enumerate() {
            let _ = write!(obj, " + {} x{}_{}", self.pair_cost[p], v, e);
        }
        let _ = writeln!(out, "{obj}");
        let _ = writeln!(out, "Subject To");
        for (i, range) in self.cluster_entries.iter().enumerate() {
            let mut row = format!(" cluster{i}:");
            for e in range.clone() {
                let _ = write!(row, " + y{e}");
            }
            let _ = writeln!(out, "{row} = 1");
        }
        for (v, range) in self.point_pairs.iter().enumerate() {
            let mut row = format!(" point{v}:");
            for p in range.clone() {
                let _ = write!(row, " + x{}_{}", self.pairs[p].0, self.pairs[p].1);
            }
            let _ = writeln!(out, "{row} = 1");
        }
        for &(v, e) in &self.pairs {
            let _ = writeln!(out, " cap{v}_{e}: x{v}_{e} - y{e} <= 0");
        }
        let _ = writeln!(out, "Bounds");
        for e in 0..self.num_entries {
            let _ = writeln!(out, " 0 <= y{e}");
        }
        let _ = writeln!(out, "End");
        out
    }
}

/// Variable layout for the dense program: y entries first, then x pairs.
fn assemble(model: &LpModel, active_caps: &[usize]) -> DenseLp {
    let num_vars = model.num_entries + model.num_pairs();
    let mut objective = vec![0.0; num_vars];
    for (p, &c) in model.pair_cost.iter().enumerate() {
        objective[model.num_entries + p] = c;
    }
    let mut lp = DenseLp::new(num_vars, objective);
    for range in &model.cluster_entries {
        let row: Vec<(usize, f64)> = range.clone().map(|e| (e, 1.0)).collect();
        lp.add_row(row.clone(), Relation::Le, 1.0);
        lp.add_row(row, Relation::Ge, 1.0);
    }
    for range in &model.point_pairs {
        let row: Vec<(usize, f64)> = range
            .clone()
            .map(|p| (model.num_entries + p, 1.0))
            .collect();
        lp.add_row(row.clone(), Relation::Le, 1.0);
        lp.add_row(row, Relation::Ge, 1.0);
    }
    for &p in active_caps {
        let (_, e) = model.pairs[p];
        lp.add_row(
            vec![(model.num_entries + p, 1.0), (e, -1.0)],
            Relation::Le,
            0.0,
        );
    }
    lp
}

/// Solve the relaxation to a basic optimal solution. Deterministic for a
/// fixed model.
pub fn solve_lp(model: &LpModel) -> Result<FractionalSolution> {
    let mut active: Vec<usize> = Vec::new();
    let mut is_active = vec![false; model.num_pairs()];
    loop {
        let lp = assemble(model, &active);
        let solved = simplex::solve(&lp).map_err(|e| match e {
            SimplexError::Infeasible => Error::InfeasibleGuess,
            SimplexError::Unbounded => Error::Internal("relaxation reported unbounded".into()),
            SimplexError::Stalled => Error::Internal("simplex stalled".into()),
        })?;
        let y = solved.x[..model.num_entries].to_vec();
        let x = solved.x[model.num_entries..].to_vec();

        let mut added = false;
        for (p, &(_, e)) in model.pairs.iter().enumerate() {
            if !is_active[p] && x[p] > y[e] + SPLIT_TOL {
                is_active[p] = true;
                active.push(p);
                added = true;
            }
        }
        if !added {
            let solution = FractionalSolution {
                objective: model.objective_of(&x),
                y,
                x,
                split: false,
            };
            model.check_feasibility(&solution, ROW_TOL)?;
            return Ok(solution);
        }
    }
}

/// Rewrite the solution so that every connection is all-or-nothing:
/// each entry `c` with a partial connection is split into copies whose
/// masses are the sorted connection values' increments; point `v_i` then
/// connects fully to the first `i` copies. Objective, per-point totals,
/// per-cluster mass, and coupling are all preserved.
pub fn split_centers(
    solution: &FractionalSolution,
    model: &LpModel,
    sets: &CandidateSets,
) -> Result<SplitOutcome> {
    // connection values per entry: (x value, point position), sorted
    let mut by_entry: Vec<Vec<(f64, usize)>> = vec![Vec::new(); model.num_entries];
    for (p, &(v, e)) in model.pairs.iter().enumerate() {
        if solution.x[p] > X_TOL {
            by_entry[e].push((solution.x[p], v));
        }
    }

    let mut per_cluster: Vec<Vec<CandidateEntry>> = vec![Vec::new(); sets.k];
    // (point position, new entry id) -> x value
    let mut new_connections: Vec<(usize, usize, f64)> = Vec::new();
    let mut source_of: Vec<usize> = Vec::new();
    let mut split_y: Vec<f64> = Vec::new();
    let mut next_entry = 0usize;

    for cluster in 0..sets.k {
        for e in sets.cluster_range(cluster) {
            let entry = sets.entry(e).clone();
            let y_e = solution.y[e];
            let connected = &mut by_entry[e];
            connected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let needs_split = connected
                .iter()
                .any(|&(x, _)| x > SPLIT_TOL && x < y_e - SPLIT_TOL);
            if !needs_split {
                let id = next_entry;
                per_cluster[cluster].push(entry);
                source_of.push(e);
                split_y.push(y_e);
                next_entry += 1;
                for &(x, v) in connected.iter() {
                    new_connections.push((v, id, x));
                }
                continue;
            }
            // copy j carries mass x_{v_j} - x_{v_{j-1}}; the final copy
            // carries the leftover opening mass y_e - x_{v_t}
            let mut previous = 0.0;
            let mut copy_ids = Vec::with_capacity(connected.len() + 1);
            for &(x, _) in connected.iter() {
                let id = next_entry;
                per_cluster[cluster].push(entry.clone());
                source_of.push(e);
                split_y.push(x - previous);
                copy_ids.push((id, x - previous));
                previous = x;
                next_entry += 1;
            }
            let leftover = (y_e - previous).max(0.0);
            per_cluster[cluster].push(entry.clone());
            source_of.push(e);
            split_y.push(leftover);
            copy_ids.push((next_entry, leftover));
            next_entry += 1;
            // point v_i connects to copies 1..=i at the copy's full mass
            for (i, &(_, v)) in connected.iter().enumerate() {
                for &(id, mass) in copy_ids.iter().take(i + 1) {
                    new_connections.push((v, id, mass));
                }
            }
        }
    }

    let split_sets =
        CandidateSets::from_parts(sets.k, sets.epsilon, sets.leaders.clone(), per_cluster);
    let split_model = rebuild_model(model, &source_of, &split_sets)?;
    let mut x = vec![0.0; split_model.num_pairs()];
    let mut pair_index: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::with_capacity(split_model.num_pairs());
    for (p, &(v, e)) in split_model.pairs.iter().enumerate() {
        pair_index.insert((v, e), p);
    }
    for &(v, id, mass) in &new_connections {
        let p = pair_index.get(&(v, id)).copied().ok_or_else(|| {
            Error::Internal("split connection lost by the too-close filter".into())
        })?;
        x[p] = mass;
    }

    let objective = split_model.objective_of(&x);
    if (objective - solution.objective).abs() > 1e-9 * (1.0 + solution.objective.abs()) {
        return Err(Error::Internal(format!(
            "splitting changed the objective: {} -> {objective}",
            solution.objective
        )));
    }
    let split_solution = FractionalSolution {
        y: split_y,
        x,
        objective,
        split: true,
    };
    split_model.check_feasibility(&split_solution, ROW_TOL)?;
    Ok(SplitOutcome {
        solution: split_solution,
        sets: split_sets,
        model: split_model,
    })
}

/// Rebuild an [`LpModel`] over expanded candidate sets. Each new entry
/// names its source entry in the original sets; copies inherit the source's
/// too-close filter and distances exactly (they share the physical point
/// and the cluster leader).
fn rebuild_model(
    model: &LpModel,
    source_of: &[usize],
    new_sets: &CandidateSets,
) -> Result<LpModel> {
    let num_points = model.num_points;
    let num_entries = new_sets.num_entries();
    debug_assert_eq!(source_of.len(), num_entries);

    // (point position, old entry) -> old pair index
    let mut old_pair = vec![usize::MAX; num_points * model.num_entries];
    for (p, &(v, e)) in model.pairs.iter().enumerate() {
        old_pair[v * model.num_entries + e] = p;
    }

    let mut pairs = Vec::new();
    let mut pair_dist = Vec::new();
    let mut pair_cost = Vec::new();
    let mut point_pairs = Vec::with_capacity(num_points);
    for v in 0..num_points {
        let start = pairs.len();
        for (e, &source) in source_of.iter().enumerate() {
            let p = old_pair[v * model.num_entries + source];
            if p == usize::MAX {
                continue;
            }
            pairs.push((v, e));
            pair_dist.push(model.pair_dist[p]);
            pair_cost.push(model.pair_cost[p]);
        }
        if pairs.len() == start {
            return Err(Error::InfeasibleGuess);
        }
        point_pairs.push(start..pairs.len());
    }

    Ok(LpModel {
        k: new_sets.k,
        num_points,
        num_entries,
        point_weights: model.point_weights.clone(),
        pairs,
        pair_dist,
        pair_cost,
        point_pairs,
        cluster_entries: (0..new_sets.k).map(|i| new_sets.cluster_range(i)).collect(),
    })
}

//! Property tests for the structural invariants that hold on every input:
//! cost monotonicity, rescale consistency, candidate-set geometry, guess
//! enumeration counts, splitting invariants on solved relaxations, and the
//! simplex engine against a vertex-enumeration oracle.

use proptest::prelude::*;

use kmedian::coreset::identity_coreset;
use kmedian::guessing::{candidate_sets, enumerate_guesses, planted_guess, Guess};
use kmedian::metric::MetricInstance;
use kmedian::oracle;
use kmedian::relaxation::{build_lp, solve_lp, split_centers};
use kmedian::simplex::{self, DenseLp, Relation, SimplexError};

fn instance_strategy(max_points: usize) -> impl Strategy<Value = MetricInstance> {
    prop::collection::vec(prop::collection::vec(0.0f64..8.0, 2), 2..=max_points)
        .prop_map(|points| MetricInstance::from_points(&points, None, None).unwrap())
}

/// Independent LP oracle for tiny programs: enumerate every candidate
/// vertex (each choice of `num_vars` tight constraints among rows-as-
/// equalities and nonnegativity bounds), keep the feasible ones, and take
/// the best objective. Valid because the tested programs include a box
/// row, making the feasible region a polytope.
fn vertex_enumeration_optimum(
    num_vars: usize,
    objective: &[f64],
    rows: &[(Vec<f64>, Relation, f64)],
) -> Option<f64> {
    let m = rows.len();
    let total = m + num_vars; // row equalities then x_j = 0 planes
    let mut best: Option<f64> = None;
    let mut combo: Vec<usize> = (0..num_vars).collect();
    loop {
        // build and solve the square system for this tight set
        let mut a = vec![0.0f64; num_vars * num_vars];
        let mut b = vec![0.0f64; num_vars];
        for (row_idx, &tight) in combo.iter().enumerate() {
            if tight < m {
                for j in 0..num_vars {
                    a[row_idx * num_vars + j] = rows[tight].0[j];
                }
                b[row_idx] = rows[tight].2;
            } else {
                a[row_idx * num_vars + (tight - m)] = 1.0;
                b[row_idx] = 0.0;
            }
        }
        if let Some(x) = solve_square(num_vars, &mut a, &mut b) {
            let feasible = x.iter().all(|&v| v >= -1e-7)
                && rows.iter().all(|(coeffs, relation, rhs)| {
                    let lhs: f64 = coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
                    match relation {
                        Relation::Le => lhs <= rhs + 1e-7,
                        Relation::Ge => lhs >= rhs - 1e-7,
                        Relation::Eq => (lhs - rhs).abs() <= 1e-7,
                    }
                });
            if feasible {
                let value: f64 = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(value, |b: f64| b.min(value)));
            }
        }
        // next combination of tight constraints
        let mut i = num_vars;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if combo[i] != i + total - num_vars {
                combo[i] += 1;
                for j in (i + 1)..num_vars {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting; None for singular systems.
fn solve_square(n: usize, a: &mut [f64], b: &mut [f64]) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot_row =
            (col..n).max_by(|&r1, &r2| a[r1 * n + col].abs().total_cmp(&a[r2 * n + col].abs()))?;
        if a[pivot_row * n + col].abs() < 1e-10 {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / pivot;
            if factor != 0.0 {
                for j in col..n {
                    a[row * n + j] -= factor * a[col * n + j];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut value = b[row];
        for j in (row + 1)..n {
            value -= a[row * n + j] * x[j];
        }
        x[row] = value / a[row * n + row];
    }
    Some(x)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn cost_is_monotone_under_center_inclusion(
        instance in instance_strategy(10),
        picks in prop::collection::vec(0usize..10, 1..6),
    ) {
        let n = instance.n();
        let centers: Vec<usize> = picks.iter().map(|&p| p % n).collect();
        let small = &centers[..1 + centers.len() / 2];
        let cost_small = instance.cost(small).unwrap();
        let cost_all = instance.cost(&centers).unwrap();
        prop_assert!(cost_all <= cost_small + 1e-9);
    }

    #[test]
    fn rescale_preserves_costs_through_the_factor(
        instance in instance_strategy(9),
        picks in prop::collection::vec(0usize..9, 1..4),
    ) {
        let rescaled = instance.rescale();
        let n = instance.n();
        let centers: Vec<usize> = picks.iter().map(|&p| p % n).collect();
        let mapped: Vec<usize> = centers.iter().map(|&c| rescaled.point_map[c]).collect();
        let original = instance.cost(&centers).unwrap();
        let scaled = rescaled.instance.cost(&mapped).unwrap();
        prop_assert!((original - rescaled.factor * scaled).abs() <= 1e-9 * (1.0 + original));
    }

    #[test]
    fn candidate_entries_stay_inside_their_radius(
        instance in instance_strategy(8),
        leader_picks in prop::collection::vec(0usize..8, 1..3),
        classes in prop::collection::vec(0u32..4, 1..3),
        epsilon in 0.05f64..1.0,
    ) {
        let rescaled = instance.rescale().instance;
        let n = rescaled.n();
        let k = leader_picks.len().min(classes.len());
        let guess = Guess {
            leaders: leader_picks[..k].iter().map(|&l| l % n).collect(),
            radius_class: classes[..k].to_vec(),
            epsilon,
        };
        let sets = candidate_sets(&rescaled, &guess);
        for entry in sets.entries() {
            let leader = sets.leaders[entry.cluster];
            let limit = (1.0 + epsilon).powi(guess.radius_class[entry.cluster] as i32 + 1);
            prop_assert!(rescaled.distance(leader, entry.point) <= limit + 1e-9);
        }
        // every cluster carries its leader copy
        for cluster in 0..k {
            prop_assert!(sets.cluster_range(cluster).any(|e| sets.entry(e).leader_copy));
        }
    }

    #[test]
    fn enumeration_count_and_distinctness(
        n_points in 2usize..5,
        k in 1usize..3,
        n_classes in 1usize..4,
    ) {
        let points: Vec<Vec<f64>> = (0..n_points).map(|i| vec![i as f64]).collect();
        let instance = MetricInstance::from_points(&points, None, None).unwrap();
        let coreset = identity_coreset(&instance);
        let classes: Vec<u32> = (0..n_classes as u32).collect();
        let stream = enumerate_guesses(&coreset, k, 0.5, &classes, 1_000_000).unwrap();
        let announced = stream.total();
        let all: Vec<_> = stream.collect();
        prop_assert_eq!(all.len() as u128, announced);
        let mut seen = std::collections::HashSet::new();
        for guess in &all {
            prop_assert!(seen.insert((guess.leaders.clone(), guess.radius_class.clone())));
        }
        let expected = (n_points as u128).pow(k as u32) * (n_classes as u128).pow(k as u32);
        prop_assert_eq!(announced, expected);
    }

    #[test]
    fn split_solutions_keep_all_invariants(
        instance in instance_strategy(7),
        k in 1usize..3,
        epsilon in 0.05f64..0.6,
    ) {
        let rescaled = instance.rescale();
        let work = &rescaled.instance;
        prop_assume!(work.n() > k);
        let coreset = identity_coreset(work);
        let opt = oracle::brute_force_kmedian(work, k).unwrap();
        let guess = planted_guess(work, &coreset, k, epsilon, &opt.best_set).unwrap();
        let sets = candidate_sets(work, &guess);
        let model = build_lp(&coreset, &sets, work).unwrap();
        let solution = solve_lp(&model).unwrap();
        prop_assert!(solution.objective <= opt.best_value + 1e-6);

        let split = split_centers(&solution, &model, &sets).unwrap();
        prop_assert!((split.solution.objective - solution.objective).abs() <= 1e-9);
        for (p, &(_, e)) in split.model.pairs.iter().enumerate() {
            let x = split.solution.x[p];
            let y = split.solution.y[e];
            prop_assert!(x <= 1e-9 || (x - y).abs() <= 1e-9);
        }
        split.model.check_feasibility(&split.solution, 1e-7).unwrap();
        // per-cluster opening mass is preserved by splitting
        for cluster in 0..split.sets.k {
            let total: f64 = split.sets.cluster_range(cluster)
                .map(|e| split.solution.y[e])
                .sum();
            prop_assert!((total - 1.0).abs() <= 1e-7);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 128,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn simplex_matches_vertex_enumeration_on_tiny_programs(
        num_vars in 1usize..4,
        objective_raw in prop::collection::vec(0.0f64..2.0, 3),
        rows_raw in prop::collection::vec(
            (prop::collection::vec(-2.0f64..2.0, 3), 0u8..3, -1.0f64..3.0),
            0..4,
        ),
    ) {
        let objective: Vec<f64> = objective_raw[..num_vars].to_vec();
        // box row keeps the region a polytope and the optimum finite
        let mut rows: Vec<(Vec<f64>, Relation, f64)> =
            vec![(vec![1.0; num_vars], Relation::Le, 10.0)];
        for (coeffs, kind, rhs) in &rows_raw {
            let relation = match kind {
                0 => Relation::Le,
                1 => Relation::Ge,
                _ => Relation::Eq,
            };
            rows.push((coeffs[..num_vars].to_vec(), relation, *rhs));
        }

        let mut lp = DenseLp::new(num_vars, objective.clone());
        for (coeffs, relation, rhs) in &rows {
            let sparse: Vec<(usize, f64)> =
                coeffs.iter().enumerate().map(|(j, &c)| (j, c)).collect();
            lp.add_row(sparse, *relation, *rhs);
        }

        let oracle_value = vertex_enumeration_optimum(num_vars, &objective, &rows);
        match simplex::solve(&lp) {
            Ok(solution) => {
                let oracle_value = oracle_value.expect("simplex found a solution the oracle missed");
                prop_assert!(
                    (solution.objective - oracle_value).abs() <= 1e-6 * (1.0 + oracle_value.abs()),
                    "simplex {} vs vertex oracle {}",
                    solution.objective,
                    oracle_value
                );
                // the returned point itself satisfies every row
                for (coeffs, relation, rhs) in &rows {
                    let lhs: f64 = coeffs.iter().zip(&solution.x).map(|(c, v)| c * v).sum();
                    let ok = match relation {
                        Relation::Le => lhs <= rhs + 1e-6,
                        Relation::Ge => lhs >= rhs - 1e-6,
                        Relation::Eq => (lhs - rhs).abs() <= 1e-6,
                    };
                    prop_assert!(ok, "returned point violates a row");
                }
            }
            Err(SimplexError::Infeasible) => {
                prop_assert!(
                    oracle_value.is_none(),
                    "simplex reported infeasible but the oracle found value {:?}",
                    oracle_value
                );
            }
            Err(other) => prop_assert!(false, "unexpected simplex failure {other:?}"),
        }
    }
}

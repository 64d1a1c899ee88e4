// timing probe for full-mode solves
#![allow(clippy::needless_range_loop)]

use kmedian::metric::MetricInstance;
use kmedian::oracle;
use kmedian::rng::RngStream;
use kmedian::rounding::{solve, SolveParams};

fn random_metric(n: usize, seed: u64) -> MetricInstance {
    let mut rng = RngStream::new(seed);
    let mut matrix = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in (u + 1)..n {
            let d = 1.0 + rng.next_f64();
            matrix[u][v] = d;
            matrix[v][u] = d;
        }
    }
    MetricInstance::from_matrix(matrix, None, None).unwrap()
}

fn main() {
    for (n, k) in [(12usize, 2usize), (10, 3), (12, 3)] {
        let inst = random_metric(n, 42);
        let opt = oracle::brute_force_kmedian(&inst, k).unwrap();
        let mut params = SolveParams::new(k, 0.5);
        params.trials = 200;
        params.seed = 1;
        let t0 = std::time::Instant::now();
        let report = solve(&inst, &params).unwrap();
        let dt = t0.elapsed();
        println!(
            "n={n} k={k}: cost {:.4} vs OPT {:.4} (ratio {:.3}) in {:.2?}",
            report.cost,
            opt.best_value,
            report.cost / opt.best_value,
            dt
        );
    }
}

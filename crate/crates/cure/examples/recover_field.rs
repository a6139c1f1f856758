//! Recover a smooth scalar field on a point cloud from a few observed values
//! with each of the four methods, and cross-check one solve against the
//! dense factorization oracle.
//!
//! Run: cargo run --release --example recover_field

use cure::graph::{build_weight_graph, GraphConfig, PointCloud};
use cure::solver::{assemble_system, recover, solve_dense_oracle, Method, RecoveryProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cure::Result<()> {
    // points on a wavy 2d manifold embedded in R^3
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 600;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.gen_range(-1.0..1.0f64);
        let y = rng.gen_range(-1.0..1.0f64);
        pts.push(vec![x, y, 0.3 * (2.0 * x).sin() * (2.0 * y).cos()]);
    }
    let cloud = PointCloud::from_points(&pts)?;
    let truth: Vec<f64> = pts.iter().map(|p| (1.5 * p[0]).cos() + p[1]).collect();

    let graph = build_weight_graph(&cloud, &GraphConfig::new(5, 15))?;

    // observe 8% of the values
    let labeled: Vec<(usize, f64)> = (0..n)
        .filter(|_| rng.gen_bool(0.08))
        .map(|i| (i, truth[i]))
        .collect();
    println!("observing {} of {n} values", labeled.len());

    for method in [Method::Ldmm, Method::Wnll, Method::Cure, Method::WeCure] {
        let problem = RecoveryProblem::new(&graph, labeled.iter().copied(), method)?
            .with_lambda(1.0)
            .with_cg(1e-10, None);
        let recovered = recover(&problem)?;
        let rmse = (recovered
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        println!("{method:>6}: rmse {rmse:.4}");
    }

    // the iterative solution agrees with a direct dense solve
    let problem = RecoveryProblem::new(&graph, labeled.iter().copied(), Method::WeCure)?
        .with_cg(1e-12, None);
    let sys = assemble_system(&problem)?;
    let oracle = solve_dense_oracle(&sys)?;
    let cg = recover(&problem)?;
    let max_diff = sys
        .unlabeled()
        .iter()
        .zip(&oracle.values)
        .map(|(&i, v)| (cg[i] - v).abs())
        .fold(0.0f64, f64::max);
    println!("cg vs dense oracle: max |diff| = {max_diff:.2e}, min eigenvalue = {:.3e}", oracle.min_eigenvalue);
    Ok(())
}

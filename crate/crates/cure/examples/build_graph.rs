//! Build a locally scaled Gaussian kNN graph on a synthetic point cloud and
//! inspect the graph-Laplacian operator.
//!
//! Run: cargo run --release --example build_graph

use cure::graph::{
    assemble_laplacian_matrix, build_weight_graph, graph_laplacian_apply, knn_search, local_scale,
    GraphConfig, PointCloud,
};

fn main() -> cure::Result<()> {
    // noisy ring in the plane
    let n = 400;
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / n as f64 * std::f64::consts::TAU;
        let wobble = 0.05 * (7.0 * t).sin();
        pts.push(vec![(1.0 + wobble) * t.cos(), (1.0 + wobble) * t.sin()]);
    }
    let cloud = PointCloud::from_points(&pts)?;

    let cfg = GraphConfig::new(5, 12);
    let sigma = local_scale(&cloud, &cfg)?;
    println!(
        "local bandwidths: min {:.4}, max {:.4}",
        sigma.iter().cloned().fold(f64::INFINITY, f64::min),
        sigma.iter().cloned().fold(0.0, f64::max),
    );

    let nn = knn_search(&cloud, 0, 3)?;
    println!("3 nearest neighbors of vertex 0: {nn:?}");

    let graph = build_weight_graph(&cloud, &cfg)?;
    println!(
        "graph: {} vertices, {} stored weights, symmetric = {}",
        graph.n(),
        graph.weights().nnz(),
        graph.weights().is_bitwise_symmetric()
    );

    // GL annihilates constants; on a smooth field it approximates curvature
    let constant = vec![3.0; n];
    let gl_const = graph_laplacian_apply(&graph, &constant)?;
    let max_resid = gl_const.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("max |GL(constant)| = {max_resid:.2e}");

    let field: Vec<f64> = (0..n)
        .map(|i| (i as f64 / n as f64 * std::f64::consts::TAU).sin())
        .collect();
    let l = assemble_laplacian_matrix(&graph);
    let lu = l.apply(&field);
    let quad: f64 = field.iter().zip(&lu).map(|(a, b)| a * b).sum();
    println!("Dirichlet energy u'Lu of a smooth field on the ring: {quad:.4}");
    Ok(())
}

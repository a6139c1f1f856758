//! One-vs-rest semi-supervised classification on a weight graph: recover one
//! indicator function per class from the labeled seeds, then label every
//! unlabeled point by the argmax over the recovered indicators. The system
//! matrix is assembled once and shared by all class solves (only the
//! right-hand side changes).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{build_weight_graph, GraphConfig, PointCloud, SparseWeightGraph};
use crate::solver::{assemble_system, scatter, solve_cg, Method, RecoveryProblem};

/// A point cloud with class labels on a subset of the points.
///
/// Labels may use any integer class ids; classes are the distinct values
/// present. A dataset may carry labels for every point (a ground-truth set
/// that experiments subsample); classification requires at least one labeled
/// point and at least one unlabeled point.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub cloud: PointCloud,
    labels: BTreeMap<usize, u32>,
}

impl LabeledDataset {
    pub fn new(cloud: PointCloud, labels: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        let labels: BTreeMap<usize, u32> = labels.into_iter().collect();
        if let Some((&id, _)) = labels.iter().next_back() {
            if id >= cloud.len() {
                return Err(Error::InvalidArgument(format!(
                    "label id {id} out of range for {} points",
                    cloud.len()
                )));
            }
        }
        Ok(Self { cloud, labels })
    }

    pub fn labels(&self) -> &BTreeMap<usize, u32> {
        &self.labels
    }

    /// Distinct class ids, ascending.
    pub fn classes(&self) -> Vec<u32> {
        let mut c: Vec<u32> = self.labels.values().copied().collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Same cloud, different labeled subset.
    pub fn with_labels(&self, labels: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        Self::new(self.cloud.clone(), labels)
    }
}

/// Solver-side parameters shared by the class solves.
#[derive(Debug, Clone)]
pub struct SolveParams {
    pub method: Method,
    pub lambda: f64,
    pub gamma: Option<f64>,
    pub cg_tol: f64,
    pub cg_max_iters: Option<usize>,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            method: Method::WeCure,
            lambda: 1.0,
            gamma: None,
            cg_tol: 1e-6,
            cg_max_iters: None,
        }
    }
}

fn indicator(ds: &LabeledDataset, class: u32) -> Vec<(usize, f64)> {
    ds.labels
        .iter()
        .map(|(&i, &c)| (i, if c == class { 1.0 } else { 0.0 }))
        .collect()
}

/// Recover the indicator function of one class (1 on its labeled points, 0 on
/// the other labeled points).
pub fn interpolate_indicator(
    ds: &LabeledDataset,
    class: u32,
    graph_cfg: &GraphConfig,
    params: &SolveParams,
) -> Result<Vec<f64>> {
    if !ds.classes().contains(&class) {
        return Err(Error::InvalidArgument(format!(
            "class {class} has no labeled points"
        )));
    }
    if ds.labels.len() == ds.cloud.len() {
        // nothing to solve: the indicator is exact
        return Ok((0..ds.cloud.len())
            .map(|i| if ds.labels[&i] == class { 1.0 } else { 0.0 })
            .collect());
    }
    let graph = build_weight_graph(&ds.cloud, graph_cfg)?;
    interpolate_on_graph(&graph, ds, class, params)
}

fn interpolate_on_graph(
    graph: &SparseWeightGraph,
    ds: &LabeledDataset,
    class: u32,
    params: &SolveParams,
) -> Result<Vec<f64>> {
    let problem = class_problem(graph, ds, class, params)?;
    crate::solver::recover(&problem)
}

fn class_problem<'a>(
    graph: &'a SparseWeightGraph,
    ds: &LabeledDataset,
    class: u32,
    params: &SolveParams,
) -> Result<RecoveryProblem<'a>> {
    let mut p = RecoveryProblem::new(graph, indicator(ds, class), params.method)?
        .with_lambda(params.lambda)
        .with_cg(params.cg_tol, params.cg_max_iters);
    if let Some(g) = params.gamma {
        p = p.with_gamma(g);
    }
    Ok(p)
}

/// Classify every point: labeled points keep their labels, unlabeled points
/// take the argmax over the per-class indicators (ties to the smallest class
/// id). The graph is built once and the assembled system is reused across
/// the class solves.
pub fn classify(ds: &LabeledDataset, graph_cfg: &GraphConfig, params: &SolveParams) -> Result<Vec<u32>> {
    if ds.labels.len() == ds.cloud.len() {
        return Ok((0..ds.cloud.len()).map(|i| ds.labels[&i]).collect());
    }
    let graph = build_weight_graph(&ds.cloud, graph_cfg)?;
    classify_on_graph(&graph, ds, params)
}

/// `classify` on a prebuilt graph (the graph depends only on the cloud, so
/// repeated label splits can share it).
pub fn classify_on_graph(
    graph: &SparseWeightGraph,
    ds: &LabeledDataset,
    params: &SolveParams,
) -> Result<Vec<u32>> {
    let n = ds.cloud.len();
    if graph.n() != n {
        return Err(Error::InvalidArgument(
            "graph size does not match dataset".into(),
        ));
    }
    if ds.labels.is_empty() {
        return Err(Error::InvalidArgument("labeled set must be nonempty".into()));
    }
    if ds.labels.len() == n {
        return Ok((0..n).map(|i| ds.labels[&i]).collect());
    }
    let classes = ds.classes();
    let first = classes[0];
    let problem = class_problem(graph, ds, first, params)?;
    let sys = assemble_system(&problem)?;
    let max_iters = problem.cg_max_iters.unwrap_or(10 * sys.dim().max(1));

    let mut best_phi = vec![f64::NEG_INFINITY; n];
    let mut best_class = vec![first; n];
    for &class in &classes {
        let g: Vec<f64> = indicator(ds, class).into_iter().map(|(_, v)| v).collect();
        let b = sys.rhs_for(&g)?;
        let sol = solve_cg(&sys, &b, params.cg_tol, max_iters)?;
        let phi = scatter(&sys, &sol.values, &g);
        for i in 0..n {
            // strict improvement keeps ties on the smallest class id
            if phi[i] > best_phi[i] {
                best_phi[i] = phi[i];
                best_class[i] = class;
            }
        }
    }
    for (&i, &c) in &ds.labels {
        best_class[i] = c;
    }
    Ok(best_class)
}

/// Fraction of agreeing entries outside the excluded ids (typically the
/// training set).
pub fn accuracy(predicted: &[u32], truth: &[u32], exclude: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} predictions vs {} truths",
            predicted.len(),
            truth.len()
        )));
    }
    let mut excluded = vec![false; predicted.len()];
    for &i in exclude {
        if i >= predicted.len() {
            return Err(Error::InvalidArgument(format!(
                "excluded id {i} out of range"
            )));
        }
        excluded[i] = true;
    }
    let mut total = 0usize;
    let mut agree = 0usize;
    for i in 0..predicted.len() {
        if excluded[i] {
            continue;
        }
        total += 1;
        if predicted[i] == truth[i] {
            agree += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument(
            "no entries outside the excluded set".into(),
        ));
    }
    Ok(agree as f64 / total as f64)
}

//! Assembly and solution of the Euler-Lagrange system for the four recovery
//! methods.
//!
//! With full-graph Laplacian L, labeled set S, unlabeled set U = P \ S,
//! D = diag(d_i) (d_i = 1 on U, gamma on S) and DW_i = sum_{j in S} w_ij,
//! the system over U reads
//!
//!   A = L_UU + gamma * diag(DW)_U + lambda * (L^T D L)_UU
//!   b_i = sum_{j in S} w_ij g_j + gamma * sum_{j in S} w_ji g_j
//!         - lambda * (L^T D L [0; g])_i
//!
//! where L_UU keeps the full degree (labeled neighbors included) on the
//! diagonal. The methods differ only in the effective coefficients:
//! LDMM (0, 1), WNLL (0, |P|/|S|), CURE (lambda, 1), WeCURE (lambda, |P|/|S|).
//! A is symmetric, and positive definite whenever every connected component
//! of the graph contains a labeled vertex.
//!
//! The biharmonic block is never formed explicitly: `apply` evaluates
//! lambda * L (D (L x)) with two sparse products, so CG runs in O(nnz) per
//! iteration. `to_dense` materializes A entrywise-symmetric for the dense
//! oracle and SPD checks.

use crate::dense::{self, DenseMatrix};
use crate::error::{Error, Result};
use crate::graph::{assemble_laplacian_matrix, SparseWeightGraph};
use crate::sparse::SparseMatrix;

/// Recovery method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ldmm,
    Wnll,
    Cure,
    WeCure,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ldmm => "ldmm",
            Method::Wnll => "wnll",
            Method::Cure => "cure",
            Method::WeCure => "wecure",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ldmm" => Ok(Method::Ldmm),
            "wnll" => Ok(Method::Wnll),
            "cure" => Ok(Method::Cure),
            "wecure" => Ok(Method::WeCure),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected ldmm|wnll|cure|wecure)"
            ))),
        }
    }

    fn uses_curvature(&self) -> bool {
        matches!(self, Method::Cure | Method::WeCure)
    }

    fn uses_label_weighting(&self) -> bool {
        matches!(self, Method::Wnll | Method::WeCure)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A missing-data recovery instance on a weight graph.
#[derive(Debug, Clone)]
pub struct RecoveryProblem<'a> {
    pub graph: &'a SparseWeightGraph,
    /// Labeled vertex ids, strictly ascending.
    pub labeled: Vec<usize>,
    /// Observed values g, parallel to `labeled`.
    pub observed: Vec<f64>,
    pub method: Method,
    /// Curvature coefficient; ignored (forced 0) for LDMM and WNLL.
    pub lambda: f64,
    /// Label weighting override; `None` selects the per-method default
    /// (1 for LDMM/CURE, |P|/|S| for WNLL/WeCURE).
    pub gamma: Option<f64>,
    pub cg_tol: f64,
    /// `None` selects 10 * |U|.
    pub cg_max_iters: Option<usize>,
}

impl<'a> RecoveryProblem<'a> {
    pub fn new(
        graph: &'a SparseWeightGraph,
        labeled: impl IntoIterator<Item = (usize, f64)>,
        method: Method,
    ) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = labeled.into_iter().collect();
        pairs.sort_unstable_by_key(|&(i, _)| i);
        pairs.dedup_by_key(|&mut (i, _)| i);
        let n = graph.n();
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(
                "labeled set must be nonempty".into(),
            ));
        }
        if pairs.len() >= n {
            return Err(Error::InvalidArgument(
                "labeled set must be a strict subset of the vertices".into(),
            ));
        }
        if pairs.iter().any(|&(i, _)| i >= n) {
            return Err(Error::InvalidArgument(
                "labeled vertex id out of range".into(),
            ));
        }
        if pairs.iter().any(|&(_, g)| !g.is_finite()) {
            return Err(Error::InvalidArgument(
                "observed values must be finite".into(),
            ));
        }
        let (labeled, observed) = pairs.into_iter().unzip();
        Ok(Self {
            graph,
            labeled,
            observed,
            method,
            lambda: 1.0,
            gamma: None,
            cg_tol: 1e-6,
            cg_max_iters: None,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_cg(mut self, tol: f64, max_iters: Option<usize>) -> Self {
        self.cg_tol = tol;
        self.cg_max_iters = max_iters;
        self
    }

    /// Effective curvature coefficient after the method mapping.
    pub fn effective_lambda(&self) -> f64 {
        if self.method.uses_curvature() {
            self.lambda
        } else {
            0.0
        }
    }

    /// Effective label weighting after the method mapping.
    pub fn effective_gamma(&self) -> f64 {
        if self.method.uses_label_weighting() {
            self.gamma
                .unwrap_or(self.graph.n() as f64 / self.labeled.len() as f64)
        } else {
            1.0
        }
    }
}

/// Anything that can act as the system matrix for CG.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.apply(x));
    }
}

/// The assembled Euler-Lagrange system over the unlabeled vertices.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    laplacian: SparseMatrix,
    /// D diagonal over all vertices: gamma on S, 1 on U.
    d_diag: Vec<f64>,
    /// DW_i = sum_{j in S} w_ij, over U (parallel to `unlabeled`).
    dw_u: Vec<f64>,
    lambda: f64,
    gamma: f64,
    /// Global ids of unlabeled vertices, ascending.
    unlabeled: Vec<usize>,
    labeled: Vec<usize>,
    b: Vec<f64>,
}

impl AssembledSystem {
    /// |U|.
    pub fn dim(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Global ids of the unlabeled vertices (position in this list is the
    /// system coordinate).
    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    /// A x without forming A: L_UU x + gamma DW x + lambda (L D L x)_UU.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        LinearOperator::apply_into(self, x, &mut y);
        y
    }

    /// Rebuild the right-hand side for a different set of observed values on
    /// the same labeled vertices (used to reuse one assembly across several
    /// solves).
    pub fn rhs_for(&self, observed: &[f64]) -> Result<Vec<f64>> {
        if observed.len() != self.labeled.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} observed values, got {}",
                self.labeled.len(),
                observed.len()
            )));
        }
        let n = self.laplacian.n();
        let mut g_ext = vec![0.0; n];
        for (&i, &g) in self.labeled.iter().zip(observed) {
            g_ext[i] = g;
        }
        let labeled_mask = self.labeled_mask();
        // first sum: rows of W restricted to S; second sum: w_ji g_j, kept as
        // a separate accumulation per the general (asymmetric-ready) form
        let mut b = vec![0.0; self.unlabeled.len()];
        for (ui, &i) in self.unlabeled.iter().enumerate() {
            let mut sum_row = 0.0;
            let mut sum_col = 0.0;
            for (j, lij) in self.laplacian.row(i) {
                if j != i && labeled_mask[j] {
                    let w = -lij;
                    sum_row += w * g_ext[j];
                    sum_col += (-self.laplacian.get(j, i)) * g_ext[j];
                }
            }
            b[ui] = sum_row + self.gamma * sum_col;
        }
        if self.lambda > 0.0 {
            let mut t = vec![0.0; n];
            self.laplacian.apply_into(&g_ext, &mut t);
            for (ti, di) in t.iter_mut().zip(&self.d_diag) {
                *ti *= di;
            }
            let mut t2 = vec![0.0; n];
            self.laplacian.apply_into(&t, &mut t2);
            for (ui, &i) in self.unlabeled.iter().enumerate() {
                b[ui] -= self.lambda * t2[i];
            }
        }
        Ok(b)
    }

    fn labeled_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.laplacian.n()];
        for &i in &self.labeled {
            mask[i] = true;
        }
        mask
    }

    /// Materialize A as a dense symmetric matrix (oracle / SPD checks only).
    ///
    /// Mirrored entries are written from one computation, so the result is
    /// bitwise symmetric.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let nu = self.unlabeled.len();
        if nu > 2000 {
            return Err(Error::InvalidArgument(format!(
                "dense assembly limited to 2000 unknowns, got {nu}"
            )));
        }
        let n = self.laplacian.n();
        let mut u_pos = vec![usize::MAX; n];
        for (ui, &i) in self.unlabeled.iter().enumerate() {
            u_pos[i] = ui;
        }
        let mut a = DenseMatrix::zeros(nu);
        for (ui, &i) in self.unlabeled.iter().enumerate() {
            for (j, lij) in self.laplacian.row(i) {
                if j == i {
                    a.add(ui, ui, lij + self.gamma * self.dw_u[ui]);
                } else if u_pos[j] != usize::MAX {
                    a.set(ui, u_pos[j], lij);
                }
            }
        }
        if self.lambda > 0.0 {
            // (L^T D L)_UU by sorted-row intersection; computed once per
            // (ui <= uj) pair and mirrored
            let rows: Vec<Vec<(usize, f64)>> = self
                .unlabeled
                .iter()
                .map(|&i| self.laplacian.row(i).collect())
                .collect();
            for ui in 0..nu {
                for uj in ui..nu {
                    let (ra, rb) = (&rows[ui], &rows[uj]);
                    let mut c = 0.0;
                    let (mut p, mut q) = (0, 0);
                    while p < ra.len() && q < rb.len() {
                        match ra[p].0.cmp(&rb[q].0) {
                            std::cmp::Ordering::Less => p += 1,
                            std::cmp::Ordering::Greater => q += 1,
                            std::cmp::Ordering::Equal => {
                                c += self.d_diag[ra[p].0] * ra[p].1 * rb[q].1;
                                p += 1;
                                q += 1;
                            }
                        }
                    }
                    let v = self.lambda * c;
                    a.add(ui, uj, v);
                    if uj != ui {
                        a.add(uj, ui, v);
                    }
                }
            }
        }
        Ok(a)
    }
}

impl LinearOperator for AssembledSystem {
    fn dim(&self) -> usize {
        self.unlabeled.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.laplacian.n();
        let mut ext = vec![0.0; n];
        for (&i, &v) in self.unlabeled.iter().zip(x) {
            ext[i] = v;
        }
        let mut t = vec![0.0; n];
        self.laplacian.apply_into(&ext, &mut t);
        for ((slot, &i), (&xv, &dw)) in y
            .iter_mut()
            .zip(&self.unlabeled)
            .zip(x.iter().zip(&self.dw_u))
        {
            *slot = t[i] + self.gamma * dw * xv;
        }
        if self.lambda > 0.0 {
            for (ti, di) in t.iter_mut().zip(&self.d_diag) {
                *ti *= di;
            }
            let mut t2 = vec![0.0; n];
            self.laplacian.apply_into(&t, &mut t2);
            for (slot, &i) in y.iter_mut().zip(&self.unlabeled) {
                *slot += self.lambda * t2[i];
            }
        }
    }
}

/// Assemble the Euler-Lagrange system for a recovery problem.
///
/// Errors when some connected component of the graph has no labeled vertex
/// (the system would be singular there).
pub fn assemble_system(p: &RecoveryProblem) -> Result<AssembledSystem> {
    let n = p.graph.n();
    check_labeled_connectivity(p.graph, &p.labeled)?;
    let gamma = p.effective_gamma();
    let lambda = p.effective_lambda();
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be nonnegative, got {}",
            p.lambda
        )));
    }

    let mut labeled_mask = vec![false; n];
    for &i in &p.labeled {
        labeled_mask[i] = true;
    }
    let unlabeled: Vec<usize> = (0..n).filter(|&i| !labeled_mask[i]).collect();

    let laplacian = assemble_laplacian_matrix(p.graph);
    let d_diag: Vec<f64> = (0..n)
        .map(|i| if labeled_mask[i] { gamma } else { 1.0 })
        .collect();
    let dw_u: Vec<f64> = unlabeled
        .iter()
        .map(|&i| {
            p.graph
                .neighbors(i)
                .filter(|&(j, _)| labeled_mask[j])
                .map(|(_, w)| w)
                .sum()
        })
        .collect();

    let mut sys = AssembledSystem {
        laplacian,
        d_diag,
        dw_u,
        lambda,
        gamma,
        unlabeled,
        labeled: p.labeled.clone(),
        b: Vec::new(),
    };
    sys.b = sys.rhs_for(&p.observed)?;
    Ok(sys)
}

fn check_labeled_connectivity(graph: &SparseWeightGraph, labeled: &[usize]) -> Result<()> {
    let n = graph.n();
    let mut reached = vec![false; n];
    let mut stack: Vec<usize> = labeled.to_vec();
    for &i in labeled {
        reached[i] = true;
    }
    while let Some(i) = stack.pop() {
        for (j, _) in graph.neighbors(i) {
            if !reached[j] {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    match reached.iter().position(|&r| !r) {
        Some(vertex) => Err(Error::UnlabeledComponent { vertex }),
        None => Ok(()),
    }
}

/// Conjugate gradient result.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual |A v - b| / |b|.
    pub residual: f64,
}

/// Unpreconditioned CG from the zero vector. Converged when the true
/// residual satisfies |A v - b| <= tol * |b|; dot products are accumulated in
/// a fixed serial order, so runs are bit-stable.
pub fn solve_cg<O: LinearOperator>(
    a: &O,
    b: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<CgSolution> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok(CgSolution {
            values: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);
    let mut last_rel = rs.sqrt() / norm_b;
    for iter in 1..=max_iters {
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // direction with nonpositive curvature: not SPD (or breakdown)
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: last_rel,
            });
        }
        let alpha = rs / pap;
        for ((xi, pi), (ri, api)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let rs_new = dot(&r, &r);
        last_rel = rs_new.sqrt() / norm_b;
        if last_rel <= tol {
            // confirm with the true residual; restart from it if recurrence
            // drifted
            a.apply_into(&x, &mut ap);
            let mut true_r = b.to_vec();
            for (tr, ai) in true_r.iter_mut().zip(&ap) {
                *tr -= ai;
            }
            let true_rel = norm2(&true_r) / norm_b;
            if true_rel <= tol {
                return Ok(CgSolution {
                    values: x,
                    iterations: iter,
                    residual: true_rel,
                });
            }
            r = true_r;
            rs = dot(&r, &r);
            p.copy_from_slice(&r);
            last_rel = true_rel;
            continue;
        }
        let beta = rs_new / rs;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rs = rs_new;
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        residual: last_rel,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense oracle result.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub values: Vec<f64>,
    /// Smallest eigenvalue of A: exact Jacobi for |U| <= 600, inverse power
    /// iteration estimate above.
    pub min_eigenvalue: f64,
}

/// Direct dense symmetric solve of the assembled system (test oracle).
/// Guarded to |U| <= 2000.
pub fn solve_dense_oracle(sys: &AssembledSystem) -> Result<DenseSolution> {
    let a = sys.to_dense()?;
    let values = dense::cholesky_solve(&a, sys.b())?;
    let min_eigenvalue = if a.n() <= 600 {
        dense::min_eigenvalue(&a)
    } else {
        inverse_power_min_eig(&a)
    };
    Ok(DenseSolution {
        values,
        min_eigenvalue,
    })
}

fn inverse_power_min_eig(a: &DenseMatrix) -> f64 {
    let n = a.n();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let mut lambda = 0.0;
    for _ in 0..60 {
        let nv = norm2(&v);
        for x in v.iter_mut() {
            *x /= nv;
        }
        let w = match dense::cholesky_solve(a, &v) {
            Ok(w) => w,
            Err(_) => return 0.0,
        };
        lambda = dot(&v, &w);
        v = w;
    }
    if lambda > 0.0 {
        1.0 / lambda
    } else {
        0.0
    }
}

/// Solve a recovery problem end to end (Algorithm: assemble the weight-graph
/// system once, run CG on the unlabeled block, keep g on the labeled block).
pub fn recover(p: &RecoveryProblem) -> Result<Vec<f64>> {
    let sys = assemble_system(p)?;
    let max_iters = p.cg_max_iters.unwrap_or(10 * sys.dim().max(1));
    let sol = solve_cg(&sys, sys.b(), p.cg_tol, max_iters)?;
    Ok(scatter(&sys, &sol.values, &p.observed))
}

/// Combine a solution over U with the observed values on S into a full
/// vector over all vertices.
pub fn scatter(sys: &AssembledSystem, u_values: &[f64], observed: &[f64]) -> Vec<f64> {
    let n = sys.laplacian.n();
    let mut out = vec![0.0; n];
    for (&i, &v) in sys.unlabeled.iter().zip(u_values) {
        out[i] = v;
    }
    for (&i, &g) in sys.labeled.iter().zip(observed) {
        out[i] = g;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_weight_graph, GraphConfig};

    fn two_vertex_graph(w: f64) -> SparseWeightGraph {
        SparseWeightGraph::from_edges(2, &[(0, 1, w)]).unwrap()
    }

    /// Hand algebra on the 2x2 Laplacian: one labeled + one unlabeled vertex
    /// gives A = [w + gw + l w^2 (1+g)], b = [(1+g) w g_obs + l w^2 (1+g) g_obs],
    /// so the solution is exactly g_obs.
    #[test]
    fn two_point_closed_form() {
        for &(lambda, gamma) in &[(0.0, 1.0), (0.0, 2.0), (1.0, 1.0), (2.5, 4.0), (10.0, 0.5)] {
            let g = two_vertex_graph(0.7);
            let obs = 3.25;
            let p = RecoveryProblem::new(&g, [(1usize, obs)], Method::WeCure)
                .unwrap()
                .with_lambda(lambda)
                .with_gamma(gamma)
                .with_cg(1e-14, None);
            let sys = assemble_system(&p).unwrap();
            let w = 0.7;
            let a_expect = w + gamma * w + lambda * w * w * (1.0 + gamma);
            let b_expect = (1.0 + gamma) * w * obs + lambda * w * w * (1.0 + gamma) * obs;
            let a = sys.to_dense().unwrap();
            assert!((a.get(0, 0) - a_expect).abs() <= 1e-12 * a_expect.abs());
            assert!((sys.b()[0] - b_expect).abs() <= 1e-12 * b_expect.abs());
            let u = recover(&p).unwrap();
            assert!((u[0] - obs).abs() <= 1e-12 * obs.abs(), "lambda={lambda} gamma={gamma}");
            assert_eq!(u[1], obs);
        }
    }

    #[test]
    fn lambda_zero_reduces_to_first_order_system() {
        let cloud = crate::graph::testutil::random_cloud(25, 3, 3);
        let g = build_weight_graph(&cloud, &GraphConfig::new(2, 5)).unwrap();
        let labeled: Vec<(usize, f64)> = vec![(0, 1.0), (5, -2.0), (13, 0.5)];
        let wecure = RecoveryProblem::new(&g, labeled.clone(), Method::WeCure)
            .unwrap()
            .with_lambda(0.0);
        let wnll = RecoveryProblem::new(&g, labeled.clone(), Method::Wnll).unwrap();
        let a1 = assemble_system(&wecure).unwrap().to_dense().unwrap();
        let a2 = assemble_system(&wnll).unwrap().to_dense().unwrap();
        for i in 0..a1.n() {
            for j in 0..a1.n() {
                assert!((a1.get(i, j) - a2.get(i, j)).abs() <= 1e-15);
            }
        }
        let cure = RecoveryProblem::new(&g, labeled.clone(), Method::Cure)
            .unwrap()
            .with_lambda(0.0);
        let ldmm = RecoveryProblem::new(&g, labeled, Method::Ldmm).unwrap();
        let a3 = assemble_system(&cure).unwrap().to_dense().unwrap();
        let a4 = assemble_system(&ldmm).unwrap().to_dense().unwrap();
        for i in 0..a3.n() {
            for j in 0..a3.n() {
                assert!((a3.get(i, j) - a4.get(i, j)).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn ldmm_system_is_harmonic_plus_mass() {
        // lambda = 0, gamma = 1: A = L_UU + diag(DW)_U
        let g = SparseWeightGraph::from_edges(3, &[(0, 1, 0.5), (1, 2, 0.25)]).unwrap();
        let p = RecoveryProblem::new(&g, [(2usize, 1.0)], Method::Ldmm).unwrap();
        let sys = assemble_system(&p).unwrap();
        let a = sys.to_dense().unwrap();
        // U = {0, 1}: L_UU = [[0.5, -0.5], [-0.5, 0.75]], DW = diag(0, 0.25)
        assert!((a.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((a.get(0, 1) + 0.5).abs() < 1e-15);
        assert!((a.get(1, 0) + 0.5).abs() < 1e-15);
        assert!((a.get(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_observations_recover_constant() {
        let cloud = crate::graph::testutil::random_cloud(30, 2, 9);
        let g = build_weight_graph(&cloud, &GraphConfig::new(2, 6)).unwrap();
        for method in [Method::Ldmm, Method::Wnll, Method::Cure, Method::WeCure] {
            let labeled: Vec<(usize, f64)> = [2usize, 7, 11, 29].iter().map(|&i| (i, 5.0)).collect();
            let p = RecoveryProblem::new(&g, labeled, method)
                .unwrap()
                .with_cg(1e-12, None);
            let u = recover(&p).unwrap();
            for v in &u {
                assert!((v - 5.0).abs() <= 1e-10 * 5.0, "{method}: {v}");
            }
        }
    }

    #[test]
    fn cg_identity_one_iteration() {
        let a = DenseMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.0 });
        let sol = solve_cg(&a, &[3.0, 7.0], 1e-12, 10).unwrap();
        assert_eq!(sol.values, vec![3.0, 7.0]);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn cg_diagonal_system() {
        let a = DenseMatrix::from_fn(2, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let sol = solve_cg(&a, &[1.0, 2.0], 1e-14, 10).unwrap();
        assert!((sol.values[0] - 1.0).abs() < 1e-12);
        assert!((sol.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cg_zero_rhs() {
        let a = DenseMatrix::from_fn(3, |i, j| if i == j { 2.0 } else { 0.0 });
        let sol = solve_cg(&a, &[0.0, 0.0, 0.0], 1e-12, 10).unwrap();
        assert_eq!(sol.values, vec![0.0; 3]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn cg_matches_dense_oracle_random_spd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let n = 20;
        // SPD via M^T M + I
        let m = DenseMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += m.get(k, i) * m.get(k, j);
                }
                a.set(i, j, acc + if i == j { 1.0 } else { 0.0 });
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let cg = solve_cg(&a, &b, 1e-12, 10 * n).unwrap();
        let direct = dense::cholesky_solve(&a, &b).unwrap();
        let num: f64 = cg
            .values
            .iter()
            .zip(&direct)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let den: f64 = direct.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(num / den <= 1e-8, "relative error {}", num / den);
    }

    #[test]
    fn cg_non_convergence_carries_residual() {
        let a = DenseMatrix::from_fn(2, |i, j| if i == j { (i + 1) as f64 * 3.0 } else { 1.0 });
        match solve_cg(&a, &[1.0, 5.0], 1e-15, 1) {
            Err(Error::NonConvergence {
                iterations: 1,
                residual,
            }) => assert!(residual > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn dense_oracle_1x1() {
        let g = two_vertex_graph(1.0);
        // 1 unlabeled, gamma=1, lambda=0: A = [w + w] = [2], b = [2 g]
        let p = RecoveryProblem::new(&g, [(1usize, 2.0)], Method::Ldmm).unwrap();
        let sys = assemble_system(&p).unwrap();
        let sol = solve_dense_oracle(&sys).unwrap();
        assert!((sol.values[0] - 2.0).abs() < 1e-14);
        assert!(sol.min_eigenvalue > 0.0);
    }

    #[test]
    fn unlabeled_component_is_an_error() {
        let g = SparseWeightGraph::from_edges(4, &[(0, 1, 0.5), (2, 3, 0.5)]).unwrap();
        let p = RecoveryProblem::new(&g, [(0usize, 1.0)], Method::Ldmm).unwrap();
        match assemble_system(&p) {
            Err(Error::UnlabeledComponent { vertex }) => assert!(vertex == 2 || vertex == 3),
            other => panic!("expected unlabeled component error, got {other:?}"),
        }
    }

    #[test]
    fn path_graph_midpoint() {
        // 0 -- 1 -- 2 with ends labeled 0 and 1; symmetry forces u_1 = 0.5
        let g = SparseWeightGraph::from_edges(3, &[(0, 1, 0.5), (1, 2, 0.5)]).unwrap();
        let p = RecoveryProblem::new(&g, [(0usize, 0.0), (2usize, 1.0)], Method::Ldmm)
            .unwrap()
            .with_cg(1e-14, None);
        let u = recover(&p).unwrap();
        assert!((u[1] - 0.5).abs() < 1e-12);
        let sys = assemble_system(&p).unwrap();
        let oracle = solve_dense_oracle(&sys).unwrap();
        assert!((oracle.values[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn single_unlabeled_vertex_matches_oracle() {
        let cloud = crate::graph::testutil::random_cloud(12, 2, 21);
        let g = build_weight_graph(&cloud, &GraphConfig::new(2, 4)).unwrap();
        let labeled: Vec<(usize, f64)> = (0..11).map(|i| (i, (i as f64).sin())).collect();
        for method in [Method::Ldmm, Method::WeCure] {
            let p = RecoveryProblem::new(&g, labeled.clone(), method)
                .unwrap()
                .with_cg(1e-14, None);
            let u = recover(&p).unwrap();
            let sys = assemble_system(&p).unwrap();
            let oracle = solve_dense_oracle(&sys).unwrap();
            assert!((u[11] - oracle.values[0]).abs() <= 1e-10 * oracle.values[0].abs().max(1.0));
        }
    }

    #[test]
    fn maximum_principle_for_first_order_methods() {
        let cloud = crate::graph::testutil::random_cloud(40, 2, 31);
        let g = build_weight_graph(&cloud, &GraphConfig::new(2, 6)).unwrap();
        let labeled: Vec<(usize, f64)> = vec![(1, -1.0), (9, 2.0), (20, 0.3), (33, 1.4)];
        for method in [Method::Ldmm, Method::Wnll] {
            let p = RecoveryProblem::new(&g, labeled.clone(), method)
                .unwrap()
                .with_cg(1e-12, None);
            let u = recover(&p).unwrap();
            for v in &u {
                assert!(*v >= -1.0 - 1e-9 && *v <= 2.0 + 1e-9, "{method}: {v}");
            }
        }
    }

    /// First-order optimality of the assembled quadratic functional
    /// E(v) = 0.5 v' A v - b' v: the CG solution beats random perturbations.
    #[test]
    fn recovered_solution_minimizes_assembled_energy() {
        use rand::{Rng, SeedableRng};
        let cloud = crate::graph::testutil::random_cloud(30, 2, 55);
        let g = build_weight_graph(&cloud, &GraphConfig::new(2, 6)).unwrap();
        let labeled: Vec<(usize, f64)> = vec![(0, 1.0), (7, -0.5), (15, 2.0), (22, 0.0)];
        let p = RecoveryProblem::new(&g, labeled, Method::WeCure)
            .unwrap()
            .with_cg(1e-13, None);
        let sys = assemble_system(&p).unwrap();
        let sol = solve_cg(&sys, sys.b(), 1e-13, 10 * sys.dim()).unwrap();
        let energy = |v: &[f64]| {
            let av = sys.apply(v);
            0.5 * dot(v, &av) - dot(sys.b(), v)
        };
        let e0 = energy(&sol.values);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let perturbed: Vec<f64> = sol
                .values
                .iter()
                .map(|v| v + rng.gen_range(-1e-3..1e-3))
                .collect();
            assert!(energy(&perturbed) >= e0 - 1e-12);
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!(Method::parse("WeCURE").unwrap(), Method::WeCure);
        assert_eq!(Method::parse("ldmm").unwrap(), Method::Ldmm);
        assert!(Method::parse("foo").is_err());
    }

    #[test]
    fn rejects_empty_and_full_labeled_sets() {
        let g = two_vertex_graph(0.5);
        assert!(RecoveryProblem::new(&g, Vec::<(usize, f64)>::new(), Method::Ldmm).is_err());
        assert!(RecoveryProblem::new(&g, [(0usize, 1.0), (1usize, 2.0)], Method::Ldmm).is_err());
    }
}

//! Graph-based missing-data recovery with curvature regularization.
//!
//! Four methods share one sparse symmetric positive definite Euler-Lagrange
//! system over the unlabeled vertices of a kNN weight graph:
//!
//! - `ldmm`: harmonic (Dirichlet-energy) interpolation,
//! - `wnll`: the same with labeled-point terms upweighted by |P|/|S|,
//! - `cure`: Dirichlet energy plus a biharmonic curvature penalty
//!   (lambda/2) |GLu|^2,
//! - `wecure`: the curvature penalty with the |P|/|S| weighting.
//!
//! On top of the solver sit two pipelines: one-vs-rest semi-supervised
//! classification ([`ssl`]) and patch-manifold image inpainting with
//! semi-local patches and an annealed coordinate scale ([`inpaint`]), scored
//! by RMSE-based PSNR and windowed SSIM ([`metrics`]).
//!
//! Every run is deterministic given its seed: exact kNN with id tie-breaks,
//! fixed-order reductions in CG, and ChaCha-seeded sampling.
//!
//! See the `examples/` directory for one runnable example per capability;
//! the `cure` binary exposes the two pipelines as `inpaint` and `ssl`
//! subcommands.

pub mod cli;
pub mod dense;
pub mod error;
pub mod graph;
pub mod inpaint;
pub mod metrics;
pub mod solver;
pub mod sparse;
pub mod ssl;

pub use error::{Error, Result};
pub use graph::{
    assemble_laplacian_matrix, build_weight_graph, graph_laplacian_apply, knn_search, local_scale,
    GraphConfig, PointCloud, SparseWeightGraph,
};
pub use inpaint::{
    extract_patches, initialize_image, inpaint, lambda_schedule, sample_mask, semilocal_augment,
    GrayImage, InpaintConfig, PatchSet,
};
pub use metrics::{psnr, ssim, SsimParams};
pub use solver::{
    assemble_system, recover, solve_cg, solve_dense_oracle, AssembledSystem, Method,
    RecoveryProblem,
};
pub use ssl::{accuracy, classify, interpolate_indicator, LabeledDataset, SolveParams};

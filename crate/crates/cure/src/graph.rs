//! kNN graphs with locally scaled Gaussian weights and the graph-Laplacian
//! operator GLu(x) = sum_y w(x,y) (u(x) - u(y)).
//!
//! Weight construction: the raw weight between x_i and one of its k_trunc
//! nearest neighbors x_j is exp(-|x_i - x_j|^2 / sigma(x_i)^2), where
//! sigma(x_i) is the distance from x_i to its k_sigma-th nearest neighbor.
//! Since the per-point bandwidth makes the raw weights asymmetric, the final
//! matrix is W = (What + What^T) / 2 on the union of the truncated supports,
//! which is symmetric positive semidefinite by construction. Self loops are
//! excluded everywhere. kNN is exact, with ties broken by ascending vertex id.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// n points in R^d, row-major.
#[derive(Debug, Clone)]
pub struct PointCloud {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "data length {} is not a positive multiple of dim {dim}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "point coordinates must be finite".into(),
            ));
        }
        Ok(Self {
            n: data.len() / dim,
            dim,
            data,
        })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidArgument(
                "all points must have the same dimension".into(),
            ));
        }
        Self::new(points.concat(), dim)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Squared Euclidean distance.
///
/// This is the crate's canonical metric: every kNN path computes distances
/// through the same per-lane recipe (8-lane chunks, fused multiply-add,
/// fixed reduction order), so distance values agree bitwise across the
/// scalar and SIMD paths.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let xa: &[f64; 8] = a[c * 8..c * 8 + 8].try_into().unwrap();
        let xb: &[f64; 8] = b[c * 8..c * 8 + 8].try_into().unwrap();
        for l in 0..8 {
            let d = xa[l] - xb[l];
            acc[l] = d.mul_add(d, acc[l]);
        }
    }
    for (l, (x, y)) in a[chunks * 8..].iter().zip(&b[chunks * 8..]).enumerate() {
        let d = x - y;
        acc[l] = d.mul_add(d, acc[l]);
    }
    reduce8(&acc)
}

#[inline]
fn reduce8(acc: &[f64; 8]) -> f64 {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// Squared distances of a 4-query x 4-candidate tile, register-blocked so
/// every vector load is amortized over four fused multiply-adds. Produces
/// bitwise the same values as [`squared_distance`].
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn tile4x4_avx512(q: &[&[f64]; 4], p: &[&[f64]; 4], dim: usize, out: &mut [[f64; 4]; 4]) {
    use std::arch::x86_64::*;
    let chunks = dim / 8;
    let mut acc = [[_mm512_setzero_pd(); 4]; 4];
    for c in 0..chunks {
        let off = c * 8;
        let pv = [
            _mm512_loadu_pd(p[0].as_ptr().add(off)),
            _mm512_loadu_pd(p[1].as_ptr().add(off)),
            _mm512_loadu_pd(p[2].as_ptr().add(off)),
            _mm512_loadu_pd(p[3].as_ptr().add(off)),
        ];
        for qi in 0..4 {
            let qv = _mm512_loadu_pd(q[qi].as_ptr().add(off));
            for pi in 0..4 {
                let d = _mm512_sub_pd(qv, pv[pi]);
                acc[qi][pi] = _mm512_fmadd_pd(d, d, acc[qi][pi]);
            }
        }
    }
    let tail = chunks * 8;
    for qi in 0..4 {
        for pi in 0..4 {
            let mut lanes = [0.0f64; 8];
            _mm512_storeu_pd(lanes.as_mut_ptr(), acc[qi][pi]);
            for (l, off) in (tail..dim).enumerate() {
                let d = q[qi][off] - p[pi][off];
                lanes[l] = d.mul_add(d, lanes[l]);
            }
            out[qi][pi] = reduce8(&lanes);
        }
    }
}

/// AVX2+FMA variant: each 8-lane chunk is two 4-lane halves, preserving the
/// canonical per-lane accumulation.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn tile4x4_avx2(q: &[&[f64]; 4], p: &[&[f64]; 4], dim: usize, out: &mut [[f64; 4]; 4]) {
    use std::arch::x86_64::*;
    let chunks = dim / 8;
    let mut acc_lo = [[_mm256_setzero_pd(); 4]; 4];
    let mut acc_hi = [[_mm256_setzero_pd(); 4]; 4];
    for c in 0..chunks {
        let off = c * 8;
        for qi in 0..4 {
            let q_lo = _mm256_loadu_pd(q[qi].as_ptr().add(off));
            let q_hi = _mm256_loadu_pd(q[qi].as_ptr().add(off + 4));
            for pi in 0..4 {
                let p_lo = _mm256_loadu_pd(p[pi].as_ptr().add(off));
                let p_hi = _mm256_loadu_pd(p[pi].as_ptr().add(off + 4));
                let d_lo = _mm256_sub_pd(q_lo, p_lo);
                let d_hi = _mm256_sub_pd(q_hi, p_hi);
                acc_lo[qi][pi] = _mm256_fmadd_pd(d_lo, d_lo, acc_lo[qi][pi]);
                acc_hi[qi][pi] = _mm256_fmadd_pd(d_hi, d_hi, acc_hi[qi][pi]);
            }
        }
    }
    let tail = chunks * 8;
    for qi in 0..4 {
        for pi in 0..4 {
            let mut lanes = [0.0f64; 8];
            _mm256_storeu_pd(lanes.as_mut_ptr(), acc_lo[qi][pi]);
            _mm256_storeu_pd(lanes.as_mut_ptr().add(4), acc_hi[qi][pi]);
            for (l, off) in (tail..dim).enumerate() {
                let d = q[qi][off] - p[pi][off];
                lanes[l] = d.mul_add(d, lanes[l]);
            }
            out[qi][pi] = reduce8(&lanes);
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[derive(Clone, Copy, PartialEq)]
enum SimdLevel {
    Avx512,
    Avx2,
    Scalar,
}

#[cfg(target_arch = "x86_64")]
fn simd_level() -> SimdLevel {
    use std::sync::OnceLock;
    static LEVEL: OnceLock<SimdLevel> = OnceLock::new();
    *LEVEL.get_or_init(|| {
        if std::is_x86_feature_detected!("avx512f") {
            SimdLevel::Avx512
        } else if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
            SimdLevel::Avx2
        } else {
            SimdLevel::Scalar
        }
    })
}

#[inline]
fn tile4x4(q: &[&[f64]; 4], p: &[&[f64]; 4], dim: usize, out: &mut [[f64; 4]; 4]) {
    #[cfg(target_arch = "x86_64")]
    {
        match simd_level() {
            SimdLevel::Avx512 => return unsafe { tile4x4_avx512(q, p, dim, out) },
            SimdLevel::Avx2 => return unsafe { tile4x4_avx2(q, p, dim, out) },
            SimdLevel::Scalar => {}
        }
    }
    for qi in 0..4 {
        for pi in 0..4 {
            out[qi][pi] = squared_distance(&q[qi][..dim], &p[pi][..dim]);
        }
    }
}

/// kNN graph parameters: bandwidth rank `k_sigma` and truncation `k_trunc`.
#[derive(Debug, Clone, Copy)]
pub struct GraphConfig {
    /// Neighbor rank defining the local bandwidth sigma(x).
    pub k_sigma: usize,
    /// Neighbors kept per row before symmetrization.
    pub k_trunc: usize,
    /// Reserved; must stay false. Self loops contribute nothing to GL and
    /// would pollute the labeled-degree diagonal.
    pub self_loops: bool,
}

impl GraphConfig {
    pub fn new(k_sigma: usize, k_trunc: usize) -> Self {
        Self {
            k_sigma,
            k_trunc,
            self_loops: false,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.self_loops {
            return Err(Error::InvalidArgument("self loops are not supported".into()));
        }
        if self.k_sigma < 1 || self.k_sigma > self.k_trunc || self.k_trunc >= n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= k_sigma ({}) <= k_trunc ({}) < n ({n})",
                self.k_sigma, self.k_trunc
            )));
        }
        Ok(())
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self::new(20, 50)
    }
}

/// Symmetric sparse weight graph: W = W^T bitwise, zero diagonal, weights in
/// (0, 1], at most 2 * k_trunc nonzeros per row.
#[derive(Debug, Clone)]
pub struct SparseWeightGraph {
    weights: SparseMatrix,
    degree: Vec<f64>,
}

impl SparseWeightGraph {
    /// Build directly from undirected edges (for tests and custom graphs).
    /// Each `(i, j, w)` inserts both (i, j) and (j, i).
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self loop at vertex {i}")));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "weight {w} outside (0, 1] on edge ({i}, {j})"
                )));
            }
            rows[i].insert(j, w);
            rows[j].insert(i, w);
        }
        let rows: Vec<Vec<(usize, f64)>> = rows.into_iter().map(|m| m.into_iter().collect()).collect();
        let weights = SparseMatrix::from_rows(n, rows)?;
        Ok(Self::from_symmetric_weights(weights))
    }

    fn from_symmetric_weights(weights: SparseMatrix) -> Self {
        let n = weights.n();
        let mut degree = vec![0.0; n];
        for (i, d) in degree.iter_mut().enumerate() {
            *d = weights.row(i).map(|(_, w)| w).sum();
        }
        Self { weights, degree }
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn weights(&self) -> &SparseMatrix {
        &self.weights
    }

    /// Per-vertex degree sum_j w_ij.
    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.row(i)
    }
}

/// Exact k nearest neighbors of one vertex, self excluded, sorted by
/// ascending distance with ties broken by ascending vertex id.
pub fn knn_search(cloud: &PointCloud, query: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    let n = cloud.len();
    if query >= n {
        return Err(Error::InvalidArgument(format!(
            "query index {query} out of range for n = {n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let q = cloud.point(query);
    let mut cand: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != query)
        .map(|j| (squared_distance(q, cloud.point(j)), j))
        .collect();
    cand.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(cand[..k].iter().map(|&(d2, j)| (j, d2.sqrt())).collect())
}

/// Bounded "k smallest (distance, id) pairs" accumulator: a max-heap that
/// keeps the lexicographically smallest k keys seen. The current rejection
/// threshold (the heap root distance) is cached so the hot path is one
/// float compare.
struct TopK {
    k: usize,
    threshold: f64,
    heap: Vec<(f64, usize)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            threshold: f64::INFINITY,
            heap: Vec::with_capacity(k),
        }
    }

    #[inline]
    fn less(a: (f64, usize), b: (f64, usize)) -> bool {
        match a.0.total_cmp(&b.0) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => a.1 < b.1,
        }
    }

    /// Fast rejection: anything with d2 > threshold can be skipped without
    /// touching the heap (equal distances still go through `push` so the id
    /// tie-break stays exact).
    #[inline]
    fn rejects(&self, d2: f64) -> bool {
        d2 > self.threshold
    }

    fn push(&mut self, key: (f64, usize)) {
        if self.heap.len() < self.k {
            self.heap.push(key);
            let mut c = self.heap.len() - 1;
            while c > 0 {
                let p = (c - 1) / 2;
                if Self::less(self.heap[p], self.heap[c]) {
                    self.heap.swap(p, c);
                    c = p;
                } else {
                    break;
                }
            }
            if self.heap.len() == self.k {
                self.threshold = self.heap[0].0;
            }
        } else if Self::less(key, self.heap[0]) {
            self.heap[0] = key;
            let mut p = 0;
            loop {
                let (l, r) = (2 * p + 1, 2 * p + 2);
                let mut largest = p;
                if l < self.k && Self::less(self.heap[largest], self.heap[l]) {
                    largest = l;
                }
                if r < self.k && Self::less(self.heap[largest], self.heap[r]) {
                    largest = r;
                }
                if largest == p {
                    break;
                }
                self.heap.swap(p, largest);
                p = largest;
            }
            self.threshold = self.heap[0].0;
        }
    }

    fn into_sorted(mut self) -> Vec<(usize, f64)> {
        self.heap
            .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        self.heap.into_iter().map(|(d2, j)| (j, d2)).collect()
    }
}

/// Exact kNN for every vertex at once: returns per-row `(neighbor, squared
/// distance)` lists of length `k`, sorted by (distance, id).
///
/// Blocked scan: 64 queries per pass over all candidates, distances computed
/// through the 4x4 register-blocked tile kernel, then a bounded top-k
/// selection per query row.
fn knn_all(cloud: &PointCloud, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = cloud.len();
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "need k < n, got k = {k}, n = {n}"
        )));
    }
    const QBLOCK: usize = 64;
    let dim = cloud.dim();
    let mut out: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut dists = vec![0.0f64; QBLOCK.min(n) * n];
    let mut tile_out = [[0.0f64; 4]; 4];
    let mut start = 0;
    while start < n {
        let end = (start + QBLOCK).min(n);
        let nq = end - start;
        let q_groups = nq / 4;
        let p_groups = n / 4;
        // candidate group stays register/L1-resident across the query groups
        for pg in 0..p_groups {
            let j0 = pg * 4;
            let p_refs = [
                cloud.point(j0),
                cloud.point(j0 + 1),
                cloud.point(j0 + 2),
                cloud.point(j0 + 3),
            ];
            for qg in 0..q_groups {
                let q0 = start + qg * 4;
                let q_refs = [
                    cloud.point(q0),
                    cloud.point(q0 + 1),
                    cloud.point(q0 + 2),
                    cloud.point(q0 + 3),
                ];
                tile4x4(&q_refs, &p_refs, dim, &mut tile_out);
                for (qi, tile_row) in tile_out.iter().enumerate() {
                    let row = (qg * 4 + qi) * n + j0;
                    dists[row..row + 4].copy_from_slice(tile_row);
                }
            }
            for bi in q_groups * 4..nq {
                let q = cloud.point(start + bi);
                for (pi, p) in p_refs.iter().enumerate() {
                    dists[bi * n + j0 + pi] = squared_distance(q, p);
                }
            }
        }
        for j in p_groups * 4..n {
            let p = cloud.point(j);
            for bi in 0..nq {
                dists[bi * n + j] = squared_distance(cloud.point(start + bi), p);
            }
        }
        for (bi, qi) in (start..end).enumerate() {
            let mut top = TopK::new(k);
            let row = &dists[bi * n..bi * n + n];
            for (j, &d2) in row.iter().enumerate() {
                if !top.rejects(d2) && j != qi {
                    top.push((d2, j));
                }
            }
            out.push(top.into_sorted());
        }
        start = end;
    }
    Ok(out)
}

/// Per-vertex bandwidth: sigma(x_i) = distance from x_i to its k_sigma-th
/// nearest neighbor (self excluded). Zero bandwidth (duplicate points) is an
/// error naming the vertex.
pub fn local_scale(cloud: &PointCloud, cfg: &GraphConfig) -> Result<Vec<f64>> {
    cfg.validate(cloud.len())?;
    let neighbors = knn_all(cloud, cfg.k_sigma)?;
    sigma_from_rows(&neighbors, cfg.k_sigma).map(|s2| s2.into_iter().map(f64::sqrt).collect())
}

fn sigma_from_rows(rows: &[Vec<(usize, f64)>], k_sigma: usize) -> Result<Vec<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let d2 = row[k_sigma - 1].1;
            if d2 <= 0.0 {
                Err(Error::DegenerateBandwidth {
                    vertex: i,
                    k: k_sigma,
                })
            } else {
                Ok(d2)
            }
        })
        .collect()
}

/// Build the locally scaled Gaussian kNN graph.
pub fn build_weight_graph(cloud: &PointCloud, cfg: &GraphConfig) -> Result<SparseWeightGraph> {
    cfg.validate(cloud.len())?;
    let n = cloud.len();
    let rows = knn_all(cloud, cfg.k_trunc)?;
    let sigma2 = sigma_from_rows(&rows, cfg.k_sigma)?;

    // Directed halves w/2 for both orientations, bucketed per row and merged
    // by ascending column. A mirrored pair of cells receives the same one or
    // two addends (a + b is order-independent), so W is bitwise symmetric.
    let mut row_lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, d2) in row {
            let half = 0.5 * (-d2 / sigma2[i]).exp();
            if half > 0.0 {
                row_lists[i].push((j, half));
                row_lists[j].push((i, half));
            }
        }
    }
    for list in row_lists.iter_mut() {
        list.sort_unstable_by_key(|&(j, _)| j);
        let mut write = 0usize;
        let mut read = 0usize;
        while read < list.len() {
            let (j, mut sum) = list[read];
            read += 1;
            while read < list.len() && list[read].0 == j {
                sum += list[read].1;
                read += 1;
            }
            list[write] = (j, sum);
            write += 1;
        }
        list.truncate(write);
    }
    let weights = SparseMatrix::from_rows(n, row_lists)?;
    Ok(SparseWeightGraph::from_symmetric_weights(weights))
}

/// GLu(x_i) = degree_i * u_i - sum_j w_ij u_j.
pub fn graph_laplacian_apply(g: &SparseWeightGraph, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != g.n() {
        return Err(Error::InvalidArgument(format!(
            "vector length {} does not match vertex count {}",
            u.len(),
            g.n()
        )));
    }
    let mut out = vec![0.0; g.n()];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, w) in g.neighbors(i) {
            acc += w * u[j];
        }
        *slot = g.degree()[i] * u[i] - acc;
    }
    Ok(out)
}

/// Matrix form of the graph Laplacian: L_ii = degree_i, L_ij = -w_ij.
pub fn assemble_laplacian_matrix(g: &SparseWeightGraph) -> SparseMatrix {
    let n = g.n();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut diag_placed = false;
        for (j, w) in g.neighbors(i) {
            if !diag_placed && j > i {
                row.push((i, g.degree()[i]));
                diag_placed = true;
            }
            row.push((j, -w));
        }
        if !diag_placed {
            row.push((i, g.degree()[i]));
        }
        rows.push(row);
    }
    SparseMatrix::from_rows(n, rows).expect("laplacian rows are sorted by construction")
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::PointCloud;

    pub(crate) fn random_cloud(n: usize, d: usize, seed: u64) -> PointCloud {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        PointCloud::new(data, d).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::random_cloud;
    use super::*;
    use proptest::prelude::*;

    fn line_cloud() -> PointCloud {
        PointCloud::from_points(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap()
    }

    #[test]
    fn knn_line_cloud() {
        let c = line_cloud();
        let nn = knn_search(&c, 0, 2).unwrap();
        assert_eq!(nn, vec![(1, 1.0), (2, 3.0)]);
    }

    #[test]
    fn knn_single_nearest() {
        let c = PointCloud::from_points(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 5.0]]).unwrap();
        assert_eq!(knn_search(&c, 0, 1).unwrap(), vec![(1, 2.0)]);
    }

    #[test]
    fn knn_tie_broken_by_id() {
        // ids 4 and 7 both at distance 2 from the query (id 0)
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0],
            vec![10.0],
            vec![11.0],
            vec![12.0],
            vec![2.0],
            vec![13.0],
            vec![14.0],
            vec![-2.0],
        ];
        let c = PointCloud::from_points(&pts).unwrap();
        assert_eq!(knn_search(&c, 0, 1).unwrap(), vec![(4, 2.0)]);
    }

    #[test]
    fn knn_rejects_k_ge_n() {
        let c = line_cloud();
        assert!(knn_search(&c, 0, 3).is_err());
    }

    #[test]
    fn local_scale_line_cloud() {
        let c = line_cloud();
        let sigma = local_scale(&c, &GraphConfig::new(1, 2)).unwrap();
        assert_eq!(sigma, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn local_scale_two_points() {
        let c = PointCloud::from_points(&[vec![0.0], vec![2.5]]).unwrap();
        let sigma = local_scale(&c, &GraphConfig::new(1, 1)).unwrap();
        assert_eq!(sigma, vec![2.5, 2.5]);
    }

    #[test]
    fn local_scale_duplicate_points_error() {
        let c = PointCloud::from_points(&[vec![1.0], vec![1.0], vec![2.0]]).unwrap();
        match local_scale(&c, &GraphConfig::new(1, 2)) {
            Err(Error::DegenerateBandwidth { vertex, k: 1 }) => assert!(vertex < 2),
            other => panic!("expected degenerate bandwidth, got {other:?}"),
        }
    }

    #[test]
    fn weight_graph_line_cloud() {
        let c = line_cloud();
        let g = build_weight_graph(&c, &GraphConfig::new(1, 2)).unwrap();
        let w01 = g.weights().get(0, 1);
        let w02 = g.weights().get(0, 2);
        assert!((w01 - (-1.0f64).exp()).abs() < 1e-15);
        let expect02 = 0.5 * ((-9.0f64).exp() + (-9.0f64 / 4.0).exp());
        assert!((w02 - expect02).abs() < 1e-16);
        assert!(g.weights().is_bitwise_symmetric());
        for i in 0..3 {
            assert_eq!(g.weights().get(i, i), 0.0);
        }
    }

    #[test]
    fn weight_graph_equidistant_simplex() {
        // equilateral triangle: all pairwise distances equal, so sigma equals
        // that distance and every kept weight is exp(-1)
        let h = 3.0f64.sqrt() / 2.0;
        let c = PointCloud::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]).unwrap();
        let g = build_weight_graph(&c, &GraphConfig::new(1, 2)).unwrap();
        for i in 0..3 {
            for (j, w) in g.neighbors(i) {
                assert_ne!(i, j);
                assert!((w - (-1.0f64).exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn laplacian_apply_two_vertices() {
        let g = SparseWeightGraph::from_edges(2, &[(0, 1, 0.5)]).unwrap();
        let v = graph_laplacian_apply(&g, &[2.0, 0.0]).unwrap();
        assert_eq!(v, vec![1.0, -1.0]);
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let c = random_cloud(40, 3, 7);
        let g = build_weight_graph(&c, &GraphConfig::new(3, 6)).unwrap();
        let v = graph_laplacian_apply(&g, &vec![5.0; 40]).unwrap();
        for (i, vi) in v.iter().enumerate() {
            assert!(vi.abs() <= 1e-12 * g.degree()[i] * 5.0);
        }
    }

    #[test]
    fn laplacian_single_vertex() {
        let g = SparseWeightGraph::from_edges(1, &[]).unwrap();
        assert_eq!(graph_laplacian_apply(&g, &[3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn laplacian_apply_rejects_length_mismatch() {
        let g = SparseWeightGraph::from_edges(2, &[(0, 1, 0.5)]).unwrap();
        assert!(graph_laplacian_apply(&g, &[1.0]).is_err());
    }

    #[test]
    fn laplacian_matrix_two_vertices() {
        let g = SparseWeightGraph::from_edges(2, &[(0, 1, 0.5)]).unwrap();
        let l = assemble_laplacian_matrix(&g);
        assert_eq!(l.get(0, 0), 0.5);
        assert_eq!(l.get(0, 1), -0.5);
        assert_eq!(l.get(1, 0), -0.5);
        assert_eq!(l.get(1, 1), 0.5);
    }

    #[test]
    fn laplacian_matrix_matches_apply_and_is_psd() {
        let c = random_cloud(30, 2, 11);
        let g = build_weight_graph(&c, &GraphConfig::new(2, 5)).unwrap();
        let l = assemble_laplacian_matrix(&g);
        let u: Vec<f64> = (0..30).map(|i| ((i * 37 % 13) as f64) - 6.0).collect();
        let via_matrix = l.apply(&u);
        let via_op = graph_laplacian_apply(&g, &u).unwrap();
        for (a, b) in via_matrix.iter().zip(&via_op) {
            assert!((a - b).abs() < 1e-13);
        }
        // row sums vanish
        let ones = l.apply(&vec![1.0; 30]);
        assert!(ones.iter().all(|v| v.abs() < 1e-12));
        // PSD on dense check
        let eig_min = crate::dense::min_eigenvalue(&l.to_dense());
        assert!(eig_min >= -1e-10, "min eigenvalue {eig_min}");
    }

    #[test]
    fn weight_monotone_in_distance_on_collinear_triple() {
        // fixed sigma per row: along a line, the nearer neighbor gets the
        // larger raw weight
        let c = PointCloud::from_points(&[vec![0.0], vec![1.0], vec![2.5], vec![4.0]]).unwrap();
        let g = build_weight_graph(&c, &GraphConfig::new(1, 3)).unwrap();
        let w01 = g.weights().get(0, 1);
        let w02 = g.weights().get(0, 2);
        let w03 = g.weights().get(0, 3);
        assert!(w01 >= w02 && w02 >= w03);
    }

    fn brute_force_knn(cloud: &PointCloud, query: usize, k: usize) -> Vec<(usize, f64)> {
        // independent oracle: full pairwise scan + total sort
        let mut all: Vec<(usize, f64)> = (0..cloud.len())
            .filter(|&j| j != query)
            .map(|j| (j, squared_distance(cloud.point(query), cloud.point(j)).sqrt()))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    #[test]
    fn tile_kernel_is_bitwise_identical_to_scalar() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for dim in [1usize, 2, 3, 7, 8, 9, 16, 64, 123, 150] {
            let make = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
                (0..4)
                    .map(|_| (0..dim).map(|_| rng.gen_range(-300.0..300.0)).collect())
                    .collect()
            };
            let qs = make(&mut rng);
            let ps = make(&mut rng);
            let q_refs = [&qs[0][..], &qs[1][..], &qs[2][..], &qs[3][..]];
            let p_refs = [&ps[0][..], &ps[1][..], &ps[2][..], &ps[3][..]];
            let mut out = [[0.0f64; 4]; 4];
            tile4x4(&q_refs, &p_refs, dim, &mut out);
            for qi in 0..4 {
                for pi in 0..4 {
                    let scalar = squared_distance(&qs[qi], &ps[pi]);
                    assert_eq!(
                        out[qi][pi].to_bits(),
                        scalar.to_bits(),
                        "dim {dim} pair ({qi},{pi}): {} vs {scalar}",
                        out[qi][pi]
                    );
                }
            }
        }
    }

    #[test]
    fn bulk_scan_matches_single_query_bitwise() {
        // local_scale goes through the blocked SIMD scan, knn_search through
        // the plain scalar scan; the k_sigma-th distances must agree exactly
        let c = random_cloud(137, 19, 23);
        let cfg = GraphConfig::new(4, 9);
        let sigma = local_scale(&c, &cfg).unwrap();
        for i in [0usize, 5, 64, 136] {
            let nn = knn_search(&c, i, 4).unwrap();
            assert_eq!(sigma[i].to_bits(), nn[3].1.to_bits(), "vertex {i}");
        }
    }

    #[test]
    fn squared_distance_matches_naive_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for dim in [1usize, 3, 4, 7, 64, 123] {
            let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
            let fast = squared_distance(&a, &b);
            assert!((naive - fast).abs() <= 1e-13 * naive.max(1.0));
        }
        // integer coordinates: every summation order is exact
        let a = [3.0, -2.0, 7.0, 1.0, 0.0];
        let b = [1.0, 2.0, 4.0, -1.0, 2.0];
        assert_eq!(squared_distance(&a, &b), 4.0 + 16.0 + 9.0 + 4.0 + 4.0);
    }

    #[test]
    fn knn_matches_brute_force_n500() {
        let c = random_cloud(500, 5, 42);
        for &q in &[0usize, 17, 250, 499] {
            for &k in &[1usize, 13, 499] {
                let got = knn_search(&c, q, k).unwrap();
                let want = brute_force_knn(&c, q, k);
                assert_eq!(got, want, "mismatch at q={q} k={k}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_knn_matches_brute_force(seed in 0u64..1000, n in 5usize..60, k in 1usize..10) {
            let k = k.min(n - 1);
            let c = random_cloud(n, 3, seed);
            for q in [0, n / 2, n - 1] {
                let got = knn_search(&c, q, k).unwrap();
                let want = brute_force_knn(&c, q, k);
                prop_assert_eq!(got, want);
            }
        }

        #[test]
        fn prop_graph_symmetric_and_weights_in_range(seed in 0u64..500, n in 6usize..40) {
            let c = random_cloud(n, 2, seed);
            let g = build_weight_graph(&c, &GraphConfig::new(2, 4)).unwrap();
            prop_assert!(g.weights().is_bitwise_symmetric());
            for i in 0..n {
                for (j, w) in g.neighbors(i) {
                    prop_assert!(j != i);
                    prop_assert!(w > 0.0 && w <= 1.0);
                }
            }
            // union support: at most n * k_trunc directed edges, mirrored
            prop_assert!(g.weights().nnz() <= 2 * n * 4);
        }

        #[test]
        fn prop_quadratic_form_identity(seed in 0u64..500, n in 5usize..50) {
            let c = random_cloud(n, 3, seed);
            let g = build_weight_graph(&c, &GraphConfig::new(2, 4)).unwrap();
            let l = assemble_laplacian_matrix(&g);
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lhs: f64 = u.iter().zip(l.apply(&u)).map(|(a, b)| a * b).sum();
            let mut rhs = 0.0;
            for i in 0..n {
                for (j, w) in g.neighbors(i) {
                    rhs += 0.5 * w * (u[i] - u[j]) * (u[i] - u[j]);
                }
            }
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-30));
        }
    }
}

//! Patch-manifold image inpainting: patch extraction with reflective
//! boundaries, semi-local coordinate augmentation, annealed coordinate
//! scaling, Gaussian initialization, and the outer recovery loop with a
//! first-order warm start.
//!
//! Each pixel (i, j) owns an s1 x s2 patch of the current iterate (mirror
//! boundary without repeating the edge sample), augmented with two scaled
//! coordinates (lb * x1 * |f_obs|_inf / m, lb * x2 * |f_obs|_inf / n) using
//! 1-based row/column coordinates; |f_obs|_inf is frozen from the original
//! observation. The coordinate scale lb anneals as max(start - k, floor) per
//! outer step, shrinking the nearest-neighbor search from global toward
//! spatially local. The recovery on the patch set is read back at the patch
//! centers.

use crate::error::{Error, Result};
use crate::graph::{build_weight_graph, GraphConfig, PointCloud};
use crate::solver::{recover, Method, RecoveryProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Grayscale image with intensities in [0, 255] and an observation mask
/// (true = observed).
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    intensities: Vec<f64>,
    mask: Vec<bool>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, intensities: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image must be nonempty".into()));
        }
        if intensities.len() != width * height || mask.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "expected {} pixels, got {} intensities and {} mask entries",
                width * height,
                intensities.len(),
                mask.len()
            )));
        }
        if !intensities.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("intensities must be finite".into()));
        }
        Ok(Self {
            width,
            height,
            intensities,
            mask,
        })
    }

    /// Fully observed image of a single value.
    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            intensities: vec![value; width * height],
            mask: vec![true; width * height],
        }
    }

    /// Fully observed image from row-major intensities.
    pub fn from_intensities(width: usize, height: usize, intensities: Vec<f64>) -> Result<Self> {
        let mask = vec![true; intensities.len()];
        Self::new(width, height, intensities, mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.width * self.height {
            return Err(Error::InvalidArgument("mask length mismatch".into()));
        }
        self.mask = mask;
        Ok(self)
    }

    /// Intensity at (row, col).
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.intensities[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.intensities[row * self.width + col] = v;
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_fully_observed(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// Max |value| over observed pixels; error when the mask is empty.
    pub fn observed_max_abs(&self) -> Result<f64> {
        if self.observed_count() == 0 {
            return Err(Error::InvalidArgument("observation mask is empty".into()));
        }
        Ok(self
            .intensities
            .iter()
            .zip(&self.mask)
            .filter(|&(_, &m)| m)
            .fold(0.0f64, |acc, (v, _)| acc.max(v.abs())))
    }
}

/// Raw per-pixel patch vectors (length s1 * s2 each), row-major over pixels.
#[derive(Debug, Clone)]
pub struct RawPatches {
    pub patch_h: usize,
    pub patch_w: usize,
    pub values: Vec<f64>,
}

/// Patch vectors augmented with the two scaled coordinates, ready to serve
/// as the point cloud of the patch graph.
#[derive(Debug, Clone)]
pub struct PatchSet {
    pub patch_h: usize,
    pub patch_w: usize,
    /// Per-pixel vectors of length patch_h * patch_w + 2.
    pub cloud: PointCloud,
    /// Center intensity of each patch (the function value carried by it).
    pub center_values: Vec<f64>,
    /// The coordinate scale used for the augmentation.
    pub semilocal_scale: f64,
}

/// Mirror an index into [0, len), reflecting without repeating the edge
/// sample: -1 -> 1, len -> len - 2.
#[inline]
fn reflect(idx: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut r = idx % period;
    if r < 0 {
        r += period;
    }
    if r < len as isize {
        r as usize
    } else {
        (period - r) as usize
    }
}

/// Extract the s1 x s2 patch around every pixel with reflective boundary
/// handling; patches are flattened row-major.
pub fn extract_patches(img: &GrayImage, s1: usize, s2: usize) -> Result<RawPatches> {
    if s1.is_multiple_of(2) || s2.is_multiple_of(2) || s1 == 0 || s2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "patch size must be odd, got {s1}x{s2}"
        )));
    }
    let (h, w) = (img.height, img.width);
    let (p1, p2) = (s1 / 2, s2 / 2);
    // reflected index lookup tables per axis
    let rows: Vec<usize> = (-(p1 as isize)..(h + p1) as isize)
        .map(|i| reflect(i, h))
        .collect();
    let cols: Vec<usize> = (-(p2 as isize)..(w + p2) as isize)
        .map(|j| reflect(j, w))
        .collect();
    let mut values = vec![0.0f64; h * w * s1 * s2];
    let mut out = 0usize;
    for i in 0..h {
        for j in 0..w {
            for di in 0..s1 {
                let src_row = rows[i + di] * w;
                for dj in 0..s2 {
                    values[out] = img.intensities[src_row + cols[j + dj]];
                    out += 1;
                }
            }
        }
    }
    Ok(RawPatches {
        patch_h: s1,
        patch_w: s2,
        values,
    })
}

/// Append the two semi-local coordinates lb * x1 * fmax / m and
/// lb * x2 * fmax / n (1-based row x1 and column x2) to every patch vector.
/// `img` supplies the frozen observation mask for fmax = |f_obs|_inf and the
/// image dimensions.
pub fn semilocal_augment(raw: &RawPatches, img: &GrayImage, semilocal_scale: f64) -> Result<PatchSet> {
    if semilocal_scale < 0.0 {
        return Err(Error::InvalidArgument(
            "semi-local scale must be nonnegative".into(),
        ));
    }
    let fmax = img.observed_max_abs()?;
    let (h, w) = (img.height, img.width);
    let d_raw = raw.patch_h * raw.patch_w;
    let n_pix = h * w;
    if raw.values.len() != n_pix * d_raw {
        return Err(Error::InvalidArgument(
            "patch buffer does not match image size".into(),
        ));
    }
    let d = d_raw + 2;
    let mut data = vec![0.0f64; n_pix * d];
    let center = (raw.patch_h / 2) * raw.patch_w + raw.patch_w / 2;
    let mut center_values = vec![0.0f64; n_pix];
    for i in 0..h {
        for j in 0..w {
            let pix = i * w + j;
            let src = &raw.values[pix * d_raw..(pix + 1) * d_raw];
            let dst = &mut data[pix * d..(pix + 1) * d];
            dst[..d_raw].copy_from_slice(src);
            dst[d_raw] = semilocal_scale * (i + 1) as f64 * fmax / h as f64;
            dst[d_raw + 1] = semilocal_scale * (j + 1) as f64 * fmax / w as f64;
            center_values[pix] = src[center];
        }
    }
    Ok(PatchSet {
        patch_h: raw.patch_h,
        patch_w: raw.patch_w,
        cloud: PointCloud::new(data, d)?,
        center_values,
        semilocal_scale,
    })
}

/// Annealing schedule for the semi-local coordinate scale:
/// max(initial - step_count, floor).
pub fn lambda_schedule(initial: f64, floor: f64, step_count: usize) -> f64 {
    (initial - step_count as f64).max(floor)
}

/// Fill missing pixels with draws from Normal(mean, sd) of the observed
/// values, clamped to [0, 255]; observed pixels are copied verbatim.
/// Deterministic for a given seed.
pub fn initialize_image(observed: &GrayImage, seed: u64) -> Result<GrayImage> {
    let m = observed.observed_count();
    if m == 0 {
        return Err(Error::InvalidArgument("observation mask is empty".into()));
    }
    let mean = observed
        .intensities
        .iter()
        .zip(&observed.mask)
        .filter(|&(_, &ma)| ma)
        .map(|(v, _)| v)
        .sum::<f64>()
        / m as f64;
    let var = observed
        .intensities
        .iter()
        .zip(&observed.mask)
        .filter(|&(_, &ma)| ma)
        .map(|(v, _)| (v - mean) * (v - mean))
        .sum::<f64>()
        / m as f64;
    let sd = var.sqrt();
    let normal = Normal::new(mean, sd)
        .map_err(|e| Error::InvalidArgument(format!("invalid gaussian parameters: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = observed.clone();
    for (v, &ma) in out.intensities.iter_mut().zip(&observed.mask) {
        if !ma {
            *v = normal.sample(&mut rng).clamp(0.0, 255.0);
        }
    }
    Ok(out)
}

/// Uniformly random observation mask of floor(rate * pixels) pixels without
/// replacement, deterministic per seed.
pub fn sample_mask(width: usize, height: usize, rate: f64, seed: u64) -> Result<Vec<bool>> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sample rate must be in (0, 1], got {rate}"
        )));
    }
    let total = width * height;
    let count = ((rate * total as f64).floor() as usize).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, total, count);
    let mut mask = vec![false; total];
    for idx in chosen.iter() {
        mask[idx] = true;
    }
    Ok(mask)
}

/// Configuration of the inpainting loop.
#[derive(Debug, Clone)]
pub struct InpaintConfig {
    pub patch_h: usize,
    pub patch_w: usize,
    /// Leading outer iterations solved with WNLL regardless of `method`.
    pub warm_start_iters: usize,
    /// Total outer iterations (warm start included).
    pub outer_iters: usize,
    pub semilocal_start: f64,
    pub semilocal_floor: f64,
    pub graph: GraphConfig,
    pub method: Method,
    pub lambda: f64,
    pub cg_tol: f64,
    pub cg_max_iters: Option<usize>,
    pub seed: u64,
    /// Optional early stop on |u_next - u|_2 / |u|_2.
    pub rel_change_tol: Option<f64>,
}

impl Default for InpaintConfig {
    fn default() -> Self {
        Self {
            patch_h: 11,
            patch_w: 11,
            warm_start_iters: 6,
            outer_iters: 10,
            semilocal_start: 10.0,
            semilocal_floor: 3.0,
            graph: GraphConfig::new(20, 50),
            method: Method::WeCure,
            lambda: 1.0,
            cg_tol: 1e-6,
            cg_max_iters: None,
            seed: 0,
            rel_change_tol: None,
        }
    }
}

impl InpaintConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Restore the missing pixels of `observed`.
///
/// Per outer step k: extract patches of the current iterate, augment with
/// semi-local coordinates at scale max(start - k, floor), build the patch
/// graph, and recover the patch-center function with the patches at observed
/// pixels as the labeled set (warm-start iterations use WNLL, the rest the
/// configured method). Intensities are clamped to [0, 255] after every step
/// and observed pixels always carry their original values.
pub fn inpaint(observed: &GrayImage, cfg: &InpaintConfig) -> Result<GrayImage> {
    if cfg.outer_iters == 0 {
        return Err(Error::InvalidArgument("outer_iters must be >= 1".into()));
    }
    if observed.observed_count() == 0 {
        return Err(Error::InvalidArgument("observation mask is empty".into()));
    }
    if cfg.semilocal_start < cfg.semilocal_floor {
        return Err(Error::InvalidArgument(
            "semi-local schedule start must be >= floor".into(),
        ));
    }
    let full_mask = vec![true; observed.width * observed.height];
    if observed.is_fully_observed() {
        return observed.clone().with_mask(full_mask);
    }
    let labeled: Vec<(usize, f64)> = observed
        .mask
        .iter()
        .enumerate()
        .filter(|&(_, &m)| m)
        .map(|(i, _)| (i, observed.intensities[i]))
        .collect();

    let mut current = initialize_image(observed, cfg.seed)?;
    for k in 0..cfg.outer_iters {
        let scale = lambda_schedule(cfg.semilocal_start, cfg.semilocal_floor, k);
        let raw = extract_patches(&current, cfg.patch_h, cfg.patch_w)?;
        let patches = semilocal_augment(&raw, observed, scale)?;
        let graph = build_weight_graph(&patches.cloud, &cfg.graph)?;
        let method = if k < cfg.warm_start_iters {
            Method::Wnll
        } else {
            cfg.method
        };
        let problem = RecoveryProblem::new(&graph, labeled.iter().copied(), method)?
            .with_lambda(cfg.lambda)
            .with_cg(cfg.cg_tol, cfg.cg_max_iters);
        let recovered = recover(&problem).map_err(|e| match e {
            Error::NonConvergence {
                iterations,
                residual,
            } => Error::OuterNonConvergence {
                outer_step: k,
                iterations,
                residual,
            },
            other => other,
        })?;
        let next: Vec<f64> = recovered.iter().map(|v| v.clamp(0.0, 255.0)).collect();
        let rel_change = relative_change(&current.intensities, &next);
        current.intensities = next;
        if cfg.rel_change_tol.is_some_and(|tol| rel_change < tol) {
            break;
        }
    }
    for (i, &m) in observed.mask.iter().enumerate() {
        if m {
            current.intensities[i] = observed.intensities[i];
        }
    }
    current.with_mask(full_mask)
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in old.iter().zip(new) {
        num += (a - b) * (a - b);
        den += a * a;
    }
    if den == 0.0 {
        return f64::INFINITY;
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_examples() {
        // -1 -> 1, len -> len - 2
        assert_eq!(reflect(-1, 3), 1);
        assert_eq!(reflect(3, 3), 1);
        assert_eq!(reflect(4, 3), 0);
        assert_eq!(reflect(0, 3), 0);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(-1, 1), 0);
        assert_eq!(reflect(7, 1), 0);
    }

    #[test]
    fn patch_of_single_pixel_image() {
        let img = GrayImage::constant(1, 1, 7.5);
        let raw = extract_patches(&img, 3, 3).unwrap();
        assert_eq!(raw.values, vec![7.5; 9]);
    }

    #[test]
    fn patch_column_image_reflects() {
        // 3x1 column (a, b, c): the 3x1 patch at the top pixel is (b, a, b)
        let img = GrayImage::from_intensities(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let raw = extract_patches(&img, 3, 1).unwrap();
        assert_eq!(&raw.values[0..3], &[2.0, 1.0, 2.0]);
        assert_eq!(&raw.values[3..6], &[1.0, 2.0, 3.0]);
        assert_eq!(&raw.values[6..9], &[2.0, 3.0, 2.0]);
    }

    #[test]
    fn constant_image_gives_identical_patches() {
        let img = GrayImage::constant(4, 5, 9.0);
        let raw = extract_patches(&img, 3, 3).unwrap();
        assert!(raw.values.iter().all(|&v| v == 9.0));
    }

    #[test]
    fn even_patch_size_rejected() {
        let img = GrayImage::constant(4, 4, 1.0);
        assert!(extract_patches(&img, 2, 3).is_err());
        assert!(extract_patches(&img, 3, 4).is_err());
    }

    #[test]
    fn semilocal_coordinates_formula() {
        // 100x100 image, fmax = 200, pixel (50, 100) 1-based, scale 10
        // -> appended (1000, 2000)
        let mut vals = vec![0.0; 100 * 100];
        vals[0] = 200.0;
        let img = GrayImage::from_intensities(100, 100, vals).unwrap();
        let raw = extract_patches(&img, 1, 1).unwrap();
        let ps = semilocal_augment(&raw, &img, 10.0).unwrap();
        let pix = (50 - 1) * 100 + (100 - 1);
        let p = ps.cloud.point(pix);
        assert_eq!(p[1], 10.0 * 50.0 * 200.0 / 100.0);
        assert_eq!(p[2], 10.0 * 100.0 * 200.0 / 100.0);
        assert_eq!((p[1], p[2]), (1000.0, 2000.0));
    }

    #[test]
    fn semilocal_zero_scale_is_pure_nonlocal() {
        let img = GrayImage::constant(3, 3, 50.0);
        let raw = extract_patches(&img, 1, 1).unwrap();
        let ps = semilocal_augment(&raw, &img, 0.0).unwrap();
        for i in 0..9 {
            let p = ps.cloud.point(i);
            assert_eq!((p[1], p[2]), (0.0, 0.0));
        }
    }

    #[test]
    fn semilocal_last_pixel_hits_fmax() {
        let img = GrayImage::constant(4, 6, 120.0);
        let raw = extract_patches(&img, 1, 1).unwrap();
        let ps = semilocal_augment(&raw, &img, 1.0).unwrap();
        let p = ps.cloud.point(6 * 4 - 1);
        assert_eq!((p[1], p[2]), (120.0, 120.0));
    }

    #[test]
    fn semilocal_requires_nonempty_mask() {
        let img = GrayImage::constant(2, 2, 1.0)
            .with_mask(vec![false; 4])
            .unwrap();
        let raw = extract_patches(&img, 1, 1).unwrap();
        assert!(semilocal_augment(&raw, &img, 1.0).is_err());
    }

    #[test]
    fn schedule_values() {
        let want = [10.0, 9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 3.0, 3.0];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(lambda_schedule(10.0, 3.0, k), *w);
        }
        for k in 0..5 {
            assert_eq!(lambda_schedule(3.0, 3.0, k), 3.0);
        }
        assert_eq!(lambda_schedule(5.0, 3.0, 100), 3.0);
    }

    #[test]
    fn schedule_is_non_increasing_with_floor() {
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let v = lambda_schedule(10.0, 3.0, k);
            assert!(v <= prev && v >= 3.0);
            prev = v;
        }
    }

    #[test]
    fn init_full_mask_is_identity() {
        let img = GrayImage::from_intensities(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = initialize_image(&img, 9).unwrap();
        assert_eq!(out.intensities, img.intensities);
    }

    #[test]
    fn init_constant_observed_fills_constant() {
        let mask = vec![true, false, false, true];
        let img = GrayImage::new(2, 2, vec![8.0, 0.0, 0.0, 8.0], mask).unwrap();
        let out = initialize_image(&img, 4).unwrap();
        assert_eq!(out.intensities, vec![8.0; 4]);
    }

    #[test]
    fn init_is_deterministic() {
        let mask: Vec<bool> = (0..36).map(|i| i % 3 == 0).collect();
        let vals: Vec<f64> = (0..36).map(|i| (i * 7 % 256) as f64).collect();
        let img = GrayImage::new(6, 6, vals, mask).unwrap();
        let a = initialize_image(&img, 123).unwrap();
        let b = initialize_image(&img, 123).unwrap();
        assert_eq!(a.intensities, b.intensities);
        let c = initialize_image(&img, 124).unwrap();
        assert_ne!(a.intensities, c.intensities);
        assert!(a.intensities.iter().all(|&v| (0.0..=255.0).contains(&v)));
    }

    #[test]
    fn init_empty_mask_is_error() {
        let img = GrayImage::constant(2, 2, 1.0).with_mask(vec![false; 4]).unwrap();
        assert!(initialize_image(&img, 0).is_err());
    }

    #[test]
    fn mask_rate_one_is_all_pixels() {
        let m = sample_mask(5, 4, 1.0, 0).unwrap();
        assert!(m.iter().all(|&x| x));
    }

    #[test]
    fn mask_rate_half_counts() {
        let m = sample_mask(10, 10, 0.5, 3).unwrap();
        assert_eq!(m.iter().filter(|&&x| x).count(), 50);
    }

    #[test]
    fn mask_same_seed_identical() {
        let a = sample_mask(8, 8, 0.3, 7).unwrap();
        let b = sample_mask(8, 8, 0.3, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_mask(8, 8, 0.3, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mask_rejects_bad_rate() {
        assert!(sample_mask(4, 4, 0.0, 0).is_err());
        assert!(sample_mask(4, 4, 1.5, 0).is_err());
    }

    #[test]
    fn inpaint_fully_observed_is_identity() {
        let vals: Vec<f64> = (0..64).map(|i| (i * 3 % 250) as f64).collect();
        let img = GrayImage::from_intensities(8, 8, vals.clone()).unwrap();
        let cfg = InpaintConfig {
            patch_h: 3,
            patch_w: 3,
            graph: GraphConfig::new(2, 5),
            ..Default::default()
        };
        let out = inpaint(&img, &cfg).unwrap();
        assert_eq!(out.intensities(), &vals[..]);
    }

    #[test]
    fn inpaint_constant_image_stays_constant() {
        let img = GrayImage::constant(12, 12, 77.0)
            .with_mask(sample_mask(12, 12, 0.4, 5).unwrap())
            .unwrap();
        let cfg = InpaintConfig {
            patch_h: 3,
            patch_w: 3,
            graph: GraphConfig::new(3, 8),
            outer_iters: 4,
            warm_start_iters: 2,
            seed: 5,
            cg_tol: 1e-10,
            ..Default::default()
        };
        let out = inpaint(&img, &cfg).unwrap();
        for v in out.intensities() {
            assert!((v - 77.0).abs() <= 1e-8 * 77.0, "{v}");
        }
    }

    #[test]
    fn inpaint_is_deterministic_and_keeps_observed() {
        let vals: Vec<f64> = (0..14 * 14).map(|i| ((i * 13) % 240) as f64).collect();
        let mask = sample_mask(14, 14, 0.5, 2).unwrap();
        let img = GrayImage::new(14, 14, vals.clone(), mask.clone()).unwrap();
        let cfg = InpaintConfig {
            patch_h: 3,
            patch_w: 3,
            graph: GraphConfig::new(3, 8),
            outer_iters: 3,
            warm_start_iters: 1,
            seed: 11,
            ..Default::default()
        };
        let a = inpaint(&img, &cfg).unwrap();
        let b = inpaint(&img, &cfg).unwrap();
        assert_eq!(a.intensities(), b.intensities());
        for (i, &m) in mask.iter().enumerate() {
            if m {
                assert_eq!(a.intensities()[i], vals[i]);
            }
            assert!((0.0..=255.0).contains(&a.intensities()[i]));
        }
    }
}

//! Command-line entry points: dataset/image ingestion, the two experiment
//! pipelines, and result reporting.

pub mod data;
pub mod image_io;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{build_weight_graph, GraphConfig};
use crate::inpaint::{inpaint, sample_mask, GrayImage, InpaintConfig};
use crate::metrics::{psnr, ssim, SsimParams};
use crate::solver::Method;
use crate::ssl::{accuracy, classify_on_graph, LabeledDataset, SolveParams};
use data::IdxData;
use report::RunReport;

/// Restore a subsampled image and report PSNR/SSIM against the input.
#[derive(Debug, Clone, Args)]
pub struct InpaintArgs {
    /// Ground-truth grayscale image (pgm or png).
    #[arg(long)]
    pub image: PathBuf,
    /// Observation mask image (nonzero = observed). Mutually exclusive with
    /// --sample-rate.
    #[arg(long, conflicts_with = "sample_rate")]
    pub mask: Option<PathBuf>,
    /// Observation rate in (0, 1]; pixels are sampled uniformly at random.
    #[arg(long)]
    pub sample_rate: Option<f64>,
    #[arg(long, default_value = "wecure")]
    pub method: String,
    /// Curvature coefficient for cure/wecure.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Odd square patch side length.
    #[arg(long, default_value_t = 11)]
    pub patch_size: usize,
    /// Neighbor rank for the local bandwidth sigma(x).
    #[arg(long, default_value_t = 20)]
    pub knn_sigma: usize,
    /// Neighbors kept per patch row.
    #[arg(long, default_value_t = 50)]
    pub knn_trunc: usize,
    /// Total outer iterations (warm start included).
    #[arg(long, default_value_t = 10)]
    pub outer_iters: usize,
    /// Leading outer iterations solved with wnll.
    #[arg(long, default_value_t = 6)]
    pub warm_start_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub cg_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restored image output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV table to append the result row to.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Semi-supervised classification with randomly sampled label sets.
#[derive(Debug, Clone, Args)]
pub struct SslArgs {
    /// Dataset path: .idx image tensor (requires --label-file) or numeric
    /// .csv (requires --label-column).
    #[arg(long)]
    pub data: PathBuf,
    /// IDX label file accompanying an IDX image tensor.
    #[arg(long)]
    pub label_file: Option<PathBuf>,
    /// 0-based label column for csv data.
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Number of labeled points sampled per run. Mutually exclusive with
    /// --label-rate.
    #[arg(long, conflicts_with = "label_rate")]
    pub labels_per_run: Option<usize>,
    /// Labeled fraction in (0, 1].
    #[arg(long)]
    pub label_rate: Option<f64>,
    #[arg(long, default_value = "wecure")]
    pub method: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 20)]
    pub knn_sigma: usize,
    #[arg(long, default_value_t = 50)]
    pub knn_trunc: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub cg_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent label splits; run r uses seed + r.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Per-point predictions CSV (first repeat).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV table to append one row per repeat to.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn path_str(p: impl AsRef<Path>) -> String {
    p.as_ref().display().to_string()
}

/// Run the inpainting pipeline: observe the image through the mask, restore,
/// score against the full input, write outputs.
pub fn cmd_inpaint(args: &InpaintArgs) -> Result<RunReport> {
    let started = Instant::now();
    let truth = image_io::load_image(&args.image)?;
    let method = Method::parse(&args.method)?;

    let (mask, rate) = match (&args.mask, args.sample_rate) {
        (Some(path), None) => {
            let (w, h, mask) = image_io::load_mask(path)?;
            if w != truth.width() || h != truth.height() {
                return Err(Error::InvalidArgument(format!(
                    "mask {w}x{h} does not match image {}x{}",
                    truth.width(),
                    truth.height()
                )));
            }
            let rate = mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64;
            (mask, rate)
        }
        (None, Some(rate)) => (
            sample_mask(truth.width(), truth.height(), rate, args.seed)?,
            rate,
        ),
        _ => {
            return Err(Error::InvalidArgument(
                "exactly one of --mask and --sample-rate is required".into(),
            ))
        }
    };

    // zero out hidden pixels so the pipeline can only see the observation
    let observed_vals: Vec<f64> = truth
        .intensities()
        .iter()
        .zip(&mask)
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    let observed = GrayImage::new(truth.width(), truth.height(), observed_vals, mask)?;

    let cfg = InpaintConfig {
        patch_h: args.patch_size,
        patch_w: args.patch_size,
        warm_start_iters: args.warm_start_iters,
        outer_iters: args.outer_iters,
        graph: GraphConfig::new(args.knn_sigma, args.knn_trunc),
        method,
        lambda: args.lambda,
        cg_tol: args.cg_tol,
        seed: args.seed,
        ..Default::default()
    };
    let restored = inpaint(&observed, &cfg)?;
    let psnr_db = psnr(&restored, &truth)?;
    let ssim_val = ssim(&restored, &truth, &SsimParams::default())?;

    if let Some(out) = &args.out {
        image_io::write_image(&restored, out)?;
    }
    let seconds = started.elapsed().as_secs_f64();
    if let Some(report_path) = &args.report {
        report::append_inpaint_row(
            report_path,
            &path_str(&args.image),
            method.as_str(),
            rate,
            args.seed,
            psnr_db,
            ssim_val,
            seconds,
        )?;
    }
    Ok(RunReport {
        command: "inpaint".into(),
        input: path_str(&args.image),
        method: method.as_str().into(),
        rate: Some(rate),
        labels_per_run: None,
        seed: args.seed,
        psnr_db: Some(psnr_db),
        ssim: Some(ssim_val),
        mean_accuracy: None,
        per_seed_accuracy: None,
        seconds,
        config: serde_json::json!({
            "image": path_str(&args.image),
            "mask": args.mask.as_ref().map(path_str),
            "sample_rate": args.sample_rate,
            "method": method.as_str(),
            "lambda": args.lambda,
            "patch_size": args.patch_size,
            "knn_sigma": args.knn_sigma,
            "knn_trunc": args.knn_trunc,
            "outer_iters": args.outer_iters,
            "warm_start_iters": args.warm_start_iters,
            "cg_tol": args.cg_tol,
            "seed": args.seed,
        }),
    })
}

fn load_ssl_dataset(args: &SslArgs) -> Result<(LabeledDataset, Vec<u32>)> {
    let is_idx = args
        .data
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("idx"));
    let ds = if is_idx {
        let cloud = match data::load_idx(&args.data)? {
            IdxData::Images(c) => c,
            IdxData::Labels(_) => {
                return Err(Error::InvalidArgument(
                    "--data must be an idx image tensor; pass the label file via --label-file".into(),
                ))
            }
        };
        let label_path = args.label_file.as_ref().ok_or_else(|| {
            Error::InvalidArgument("--label-file is required for idx data".into())
        })?;
        let labels = match data::load_idx(label_path)? {
            IdxData::Labels(l) => l,
            IdxData::Images(_) => {
                return Err(Error::InvalidArgument(
                    "--label-file must be an idx label vector".into(),
                ))
            }
        };
        if labels.len() != cloud.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} points",
                labels.len(),
                cloud.len()
            )));
        }
        let pairs: Vec<(usize, u32)> = labels.iter().copied().enumerate().collect();
        LabeledDataset::new(cloud, pairs)?
    } else {
        let col = args.label_column.ok_or_else(|| {
            Error::InvalidArgument("--label-column is required for csv data".into())
        })?;
        data::load_pointcloud_csv(&args.data, Some(col))?
    };
    let n = ds.cloud.len();
    if ds.labels().len() != n {
        return Err(Error::InvalidArgument(format!(
            "classification accuracy needs ground truth for every point; {} of {n} points are labeled",
            ds.labels().len()
        )));
    }
    let truth: Vec<u32> = (0..n).map(|i| ds.labels()[&i]).collect();
    Ok((ds, truth))
}

/// Sample a labeled subset that covers every class, retrying up to 100 times.
fn sample_labeled_split(
    truth: &[u32],
    count: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut classes: Vec<u32> = truth.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let chosen = rand::seq::index::sample(&mut rng, truth.len(), count);
        let mut seen: Vec<u32> = chosen.iter().map(|i| truth[i]).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen == classes {
            let mut ids: Vec<usize> = chosen.iter().collect();
            ids.sort_unstable();
            return Ok(ids);
        }
    }
    Err(Error::InvalidArgument(format!(
        "could not cover all {} classes with {count} labels in 100 attempts",
        classes.len()
    )))
}

/// Run the classification pipeline over the requested repeats.
pub fn cmd_ssl(args: &SslArgs) -> Result<RunReport> {
    let started = Instant::now();
    let method = Method::parse(&args.method)?;
    let (ds, truth) = load_ssl_dataset(args)?;
    let n = ds.cloud.len();

    let labels_per_run = match (args.labels_per_run, args.label_rate) {
        (Some(k), None) => k,
        (None, Some(rate)) => {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "label rate must be in (0, 1], got {rate}"
                )));
            }
            ((rate * n as f64).floor() as usize).min(n)
        }
        _ => {
            return Err(Error::InvalidArgument(
                "exactly one of --labels-per-run and --label-rate is required".into(),
            ))
        }
    };
    if labels_per_run == 0 {
        return Err(Error::InvalidArgument("need at least one label".into()));
    }
    if args.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }

    let params = SolveParams {
        method,
        lambda: args.lambda,
        gamma: None,
        cg_tol: args.cg_tol,
        cg_max_iters: None,
    };

    let mut per_seed: Vec<(u64, f64)> = Vec::with_capacity(args.repeats);
    let mut first_predictions: Option<Vec<u32>> = None;

    if labels_per_run >= n {
        eprintln!(
            "warning: every point is labeled; accuracy is trivially 1.0 with no unlabeled points"
        );
        for r in 0..args.repeats {
            per_seed.push((args.seed + r as u64, 1.0));
        }
        first_predictions = Some(truth.clone());
    } else {
        let cfg = GraphConfig::new(args.knn_sigma, args.knn_trunc);
        let graph = build_weight_graph(&ds.cloud, &cfg)?;
        for r in 0..args.repeats {
            let run_seed = args.seed + r as u64;
            let labeled_ids = sample_labeled_split(&truth, labels_per_run, run_seed)?;
            let split = ds.with_labels(labeled_ids.iter().map(|&i| (i, truth[i])))?;
            let predictions = classify_on_graph(&graph, &split, &params)?;
            let acc = accuracy(&predictions, &truth, &labeled_ids)?;
            per_seed.push((run_seed, acc));
            if first_predictions.is_none() {
                first_predictions = Some(predictions);
            }
        }
    }

    per_seed.sort_by_key(|&(s, _)| s);
    let mean = per_seed.iter().map(|&(_, a)| a).sum::<f64>() / per_seed.len() as f64;
    let seconds = started.elapsed().as_secs_f64();

    if let Some(out) = &args.out {
        report::write_predictions(out, first_predictions.as_deref().unwrap_or(&[]))?;
    }
    if let Some(report_path) = &args.report {
        for &(s, acc) in &per_seed {
            report::append_ssl_row(
                report_path,
                &path_str(&args.data),
                method.as_str(),
                labels_per_run,
                s,
                acc,
                seconds,
            )?;
        }
    }
    Ok(RunReport {
        command: "ssl".into(),
        input: path_str(&args.data),
        method: method.as_str().into(),
        rate: args.label_rate,
        labels_per_run: Some(labels_per_run),
        seed: args.seed,
        psnr_db: None,
        ssim: None,
        mean_accuracy: Some(mean),
        per_seed_accuracy: Some(per_seed),
        seconds,
        config: serde_json::json!({
            "data": path_str(&args.data),
            "label_file": args.label_file.as_ref().map(path_str),
            "label_column": args.label_column,
            "labels_per_run": args.labels_per_run,
            "label_rate": args.label_rate,
            "method": method.as_str(),
            "lambda": args.lambda,
            "knn_sigma": args.knn_sigma,
            "knn_trunc": args.knn_trunc,
            "cg_tol": args.cg_tol,
            "seed": args.seed,
            "repeats": args.repeats,
        }),
    })
}

//! Restore the bundled 128x128 image from a 20% random sample with wecure
//! (about a minute of compute) and write the observed/restored images.
//!
//! Run: cargo run --release --example inpaint_image [method] [rate]

use cure::cli::image_io::{load_image, write_image};
use cure::inpaint::{inpaint, sample_mask, GrayImage, InpaintConfig};
use cure::metrics::{psnr, ssim, SsimParams};
use cure::solver::Method;
use std::path::PathBuf;
use std::time::Instant;

fn main() -> cure::Result<()> {
    let mut args = std::env::args().skip(1);
    let method = Method::parse(&args.next().unwrap_or_else(|| "wecure".into()))?;
    let rate: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(0.2);

    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/camera_128.pgm");
    let truth = load_image(&path)?;
    let (w, h) = (truth.width(), truth.height());

    let mask = sample_mask(w, h, rate, 0)?;
    let observed_vals: Vec<f64> = truth
        .intensities()
        .iter()
        .zip(&mask)
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    let observed = GrayImage::new(w, h, observed_vals, mask)?;
    write_image(&observed, "observed.pgm")?;

    let cfg = InpaintConfig::default().with_method(method);
    println!(
        "restoring {w}x{h} image from a {:.0}% sample with {method} ({} outer iterations, {} warm-start) ...",
        rate * 100.0,
        cfg.outer_iters,
        cfg.warm_start_iters
    );
    let t0 = Instant::now();
    let restored = inpaint(&observed, &cfg)?;
    let secs = t0.elapsed().as_secs_f64();
    write_image(&restored, "restored.pgm")?;

    println!(
        "{method}: psnr = {:.2} dB, ssim = {:.4} ({secs:.0}s); wrote observed.pgm and restored.pgm",
        psnr(&restored, &truth)?,
        ssim(&restored, &truth, &SsimParams::default())?
    );
    Ok(())
}

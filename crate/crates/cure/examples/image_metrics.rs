//! PSNR and SSIM behavior under synthetic distortions of the bundled image.
//!
//! Run: cargo run --release --example image_metrics

use cure::cli::image_io::load_image;
use cure::inpaint::GrayImage;
use cure::metrics::{psnr, ssim, SsimParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

fn main() -> cure::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/camera_128.pgm");
    let truth = load_image(&path)?;
    let params = SsimParams::default();

    println!("identical:      psnr = {:?} dB, ssim = {}", psnr(&truth, &truth)?, ssim(&truth, &truth, &params)?);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for amplitude in [5.0, 15.0, 45.0] {
        let noisy_vals: Vec<f64> = truth
            .intensities()
            .iter()
            .map(|v| (v + rng.gen_range(-amplitude..amplitude)).clamp(0.0, 255.0))
            .collect();
        let noisy = GrayImage::from_intensities(truth.width(), truth.height(), noisy_vals)?;
        println!(
            "noise +-{amplitude:>4}: psnr = {:>6.2} dB, ssim = {:.4}",
            psnr(&noisy, &truth)?,
            ssim(&noisy, &truth, &params)?
        );
    }

    let shifted_vals: Vec<f64> = truth.intensities().iter().map(|v| (v + 25.5).min(255.0)).collect();
    let shifted = GrayImage::from_intensities(truth.width(), truth.height(), shifted_vals)?;
    println!(
        "+25.5 offset:  psnr = {:>6.2} dB, ssim = {:.4}",
        psnr(&shifted, &truth)?,
        ssim(&shifted, &truth, &params)?
    );
    Ok(())
}

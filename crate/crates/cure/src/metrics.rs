//! Image quality metrics: RMSE-based PSNR and windowed SSIM.

use crate::error::{Error, Result};
use crate::inpaint::GrayImage;

/// SSIM parameters: component exponents, stabilizers, and the Gaussian
/// window. Defaults are the standard reference parameterization for 8-bit
/// images: C1 = (0.01 * 255)^2, C2 = (0.03 * 255)^2, C3 = C2 / 2, unit
/// exponents, 11x11 window with standard deviation 1.5.
#[derive(Debug, Clone)]
pub struct SsimParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub window: usize,
    pub window_sigma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        let c2 = (0.03 * 255.0) * (0.03 * 255.0);
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            c1: (0.01 * 255.0) * (0.01 * 255.0),
            c2,
            c3: c2 / 2.0,
            window: 11,
            window_sigma: 1.5,
        }
    }
}

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::InvalidArgument(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// PSNR(f, f*) = -20 log10(RMSE / 255), in decibels. Identical images give
/// the +infinity sentinel.
pub fn psnr(f: &GrayImage, f_star: &GrayImage) -> Result<f64> {
    check_dims(f, f_star)?;
    let n = (f.width() * f.height()) as f64;
    let mut sq = 0.0;
    for (a, b) in f.intensities().iter().zip(f_star.intensities()) {
        let d = a - b;
        sq += d * d;
    }
    let rmse = (sq / n).sqrt();
    if rmse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-20.0 * (rmse / 255.0).log10())
}

fn apply_exponent(base: f64, e: f64) -> f64 {
    if e == 1.0 {
        base
    } else {
        base.powf(e)
    }
}

/// Mean structural similarity over all fully interior sliding windows, with
/// local moments taken under the normalized Gaussian window.
pub fn ssim(x: &GrayImage, y: &GrayImage, p: &SsimParams) -> Result<f64> {
    check_dims(x, y)?;
    let (w, h) = (x.width(), x.height());
    let win = p.window;
    if win == 0 || w < win || h < win {
        return Err(Error::InvalidArgument(format!(
            "image {w}x{h} smaller than the {win}x{win} ssim window"
        )));
    }
    let kernel = gaussian_window(win, p.window_sigma);
    let mut total = 0.0;
    let mut count = 0usize;
    for top in 0..=(h - win) {
        for left in 0..=(w - win) {
            let mut mu_x = 0.0;
            let mut mu_y = 0.0;
            let mut xx = 0.0;
            let mut yy = 0.0;
            let mut xy = 0.0;
            for di in 0..win {
                for dj in 0..win {
                    let k = kernel[di * win + dj];
                    let a = x.get(top + di, left + dj);
                    let b = y.get(top + di, left + dj);
                    mu_x += k * a;
                    mu_y += k * b;
                    xx += k * a * a;
                    yy += k * b * b;
                    xy += k * a * b;
                }
            }
            let var_x = (xx - mu_x * mu_x).max(0.0);
            let var_y = (yy - mu_y * mu_y).max(0.0);
            // sigma_x * sigma_y as sqrt(var_x * var_y): bitwise-exact 1.0
            // factors when x == y
            let sig_xy = (var_x * var_y).sqrt();
            // Cauchy-Schwarz holds exactly for the weighted moments; clamping
            // removes rounding violations only
            let cov = (xy - mu_x * mu_y).clamp(-sig_xy, sig_xy);
            let l = (2.0 * mu_x * mu_y + p.c1) / (mu_x * mu_x + mu_y * mu_y + p.c1);
            let c = (2.0 * sig_xy + p.c2) / (var_x + var_y + p.c2);
            let s = (cov + p.c3) / (sig_xy + p.c3);
            total += apply_exponent(l, p.alpha) * apply_exponent(c, p.beta) * apply_exponent(s, p.gamma);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..size * size)
        .map(|idx| {
            let (i, j) = (idx / size, idx % size);
            let di = i as f64 - c;
            let dj = j as f64 - c;
            (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

//! Run reports: a JSON document carrying the full reproduction recipe
//! (seed + config echo) plus metric values, and append-safe CSV table rows
//! with a fixed column order.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

fn serialize_db<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    // JSON numbers cannot express infinity; the identical-image sentinel is
    // written as the string "inf"
    match v {
        None => s.serialize_none(),
        Some(x) if x.is_infinite() => s.serialize_str("inf"),
        Some(x) => s.serialize_f64(*x),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub input: String,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels_per_run: Option<usize>,
    pub seed: u64,
    #[serde(serialize_with = "serialize_db", skip_serializing_if = "Option::is_none")]
    pub psnr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_seed_accuracy: Option<Vec<(u64, f64)>>,
    pub seconds: f64,
    /// Full flag echo sufficient to reproduce the run.
    pub config: serde_json::Value,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn format_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

/// Append one inpainting row; columns: image, method, rate, seed, psnr_db,
/// ssim, seconds.
#[allow(clippy::too_many_arguments)]
pub fn append_inpaint_row(
    path: impl AsRef<Path>,
    image: &str,
    method: &str,
    rate: f64,
    seed: u64,
    psnr_db: f64,
    ssim: f64,
    seconds: f64,
) -> Result<()> {
    let header = "image,method,rate,seed,psnr_db,ssim,seconds";
    let row = format!(
        "{image},{method},{rate},{seed},{},{ssim:.6},{seconds:.3}",
        format_db(psnr_db)
    );
    append_row(path, header, &row)
}

/// Append one classification row; columns: data, method, labels, seed,
/// accuracy, seconds.
pub fn append_ssl_row(
    path: impl AsRef<Path>,
    data: &str,
    method: &str,
    labels: usize,
    seed: u64,
    accuracy: f64,
    seconds: f64,
) -> Result<()> {
    let header = "data,method,labels,seed,accuracy,seconds";
    let row = format!("{data},{method},{labels},{seed},{accuracy:.6},{seconds:.3}");
    append_row(path, header, &row)
}

fn append_row(path: impl AsRef<Path>, header: &str, row: &str) -> Result<()> {
    let path = path.as_ref();
    let fresh = !path.exists();
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "{header}")?;
    }
    writeln!(file, "{row}")?;
    Ok(())
}

/// Write per-point predictions; columns: index, predicted.
pub fn write_predictions(path: impl AsRef<Path>, predictions: &[u32]) -> Result<()> {
    let mut out = String::from("index,predicted\n");
    for (i, p) in predictions.iter().enumerate() {
        out.push_str(&format!("{i},{p}\n"));
    }
    std::fs::write(path.as_ref(), out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_psnr_serializes_as_string() {
        let r = RunReport {
            command: "inpaint".into(),
            input: "x.pgm".into(),
            method: "wecure".into(),
            rate: Some(1.0),
            labels_per_run: None,
            seed: 0,
            psnr_db: Some(f64::INFINITY),
            ssim: Some(1.0),
            mean_accuracy: None,
            per_seed_accuracy: None,
            seconds: 0.5,
            config: serde_json::json!({}),
        };
        let json = r.to_json();
        assert!(json.contains("\"psnr_db\": \"inf\""));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["psnr_db"], "inf");
    }

    #[test]
    fn csv_append_writes_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        append_inpaint_row(&path, "a.pgm", "ldmm", 0.2, 1, 25.0, 0.5, 1.0).unwrap();
        append_inpaint_row(&path, "a.pgm", "wnll", 0.2, 1, 26.0, 0.6, 1.0).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "image,method,rate,seed,psnr_db,ssim,seconds");
        assert!(lines[1].starts_with("a.pgm,ldmm,0.2,1,25.0000"));
    }
}

//! Dataset ingestion: IDX binaries (big-endian magic, dimension sizes,
//! unsigned-byte payload) and rectangular numeric CSV point clouds.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::PointCloud;
use crate::ssl::LabeledDataset;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Parsed IDX content.
#[derive(Debug)]
pub enum IdxData {
    /// Image tensor flattened row-major into per-image feature vectors,
    /// scaled to [0, 1].
    Images(PointCloud),
    Labels(Vec<u32>),
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if end > bytes.len() {
        return Err(Error::IdxParse {
            offset: bytes.len() as u64,
            message: format!("truncated: expected 4 bytes at offset {offset}"),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Parse an IDX file: magic 0x00000803 (images: count, rows, cols, bytes) or
/// 0x00000801 (labels: count, bytes).
pub fn load_idx(path: impl AsRef<Path>) -> Result<IdxData> {
    let bytes = fs::read(path.as_ref())?;
    let magic = read_u32_be(&bytes, 0)?;
    match magic {
        IDX_IMAGES_MAGIC => {
            let count = read_u32_be(&bytes, 4)? as usize;
            let rows = read_u32_be(&bytes, 8)? as usize;
            let cols = read_u32_be(&bytes, 12)? as usize;
            let expected = count
                .checked_mul(rows)
                .and_then(|v| v.checked_mul(cols))
                .ok_or_else(|| Error::IdxParse {
                    offset: 4,
                    message: "dimension overflow".into(),
                })?;
            let payload = &bytes[16.min(bytes.len())..];
            if payload.len() < expected {
                return Err(Error::IdxParse {
                    offset: bytes.len() as u64,
                    message: format!(
                        "truncated payload: expected {expected} bytes, found {}",
                        payload.len()
                    ),
                });
            }
            if count == 0 || rows * cols == 0 {
                return Err(Error::IdxParse {
                    offset: 4,
                    message: "empty image tensor".into(),
                });
            }
            let data: Vec<f64> = payload[..expected].iter().map(|&b| b as f64 / 255.0).collect();
            Ok(IdxData::Images(PointCloud::new(data, rows * cols)?))
        }
        IDX_LABELS_MAGIC => {
            let count = read_u32_be(&bytes, 4)? as usize;
            let payload = &bytes[8.min(bytes.len())..];
            if payload.len() < count {
                return Err(Error::IdxParse {
                    offset: bytes.len() as u64,
                    message: format!(
                        "truncated payload: expected {count} bytes, found {}",
                        payload.len()
                    ),
                });
            }
            Ok(IdxData::Labels(payload[..count].iter().map(|&b| b as u32).collect()))
        }
        other => Err(Error::IdxParse {
            offset: 0,
            message: format!("bad magic 0x{other:08x} (expected 0x00000803 or 0x00000801)"),
        }),
    }
}

/// Load a headerless numeric CSV as a point cloud. `label_column` (0-based)
/// marks an integer class column; empty fields there mean unlabeled.
pub fn load_pointcloud_csv(
    path: impl AsRef<Path>,
    label_column: Option<usize>,
) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path.as_ref())
        .map_err(|e| Error::CsvParse {
            line: 0,
            message: e.to_string(),
        })?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut labels: BTreeMap<usize, u32> = BTreeMap::new();
    let mut width: Option<usize> = None;
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 1;
        let record = record.map_err(|e| Error::CsvParse {
            line,
            message: e.to_string(),
        })?;
        if let Some(w) = width {
            if record.len() != w {
                return Err(Error::CsvParse {
                    line,
                    message: format!("ragged row: expected {w} fields, found {}", record.len()),
                });
            }
        } else {
            if label_column.is_some_and(|c| c >= record.len()) {
                return Err(Error::CsvParse {
                    line,
                    message: format!(
                        "label column {} out of range for {} fields",
                        label_column.unwrap(),
                        record.len()
                    ),
                });
            }
            width = Some(record.len());
        }
        let mut coords = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            if label_column == Some(col) {
                if !field.is_empty() {
                    let label: u32 = field.parse().map_err(|_| Error::CsvParse {
                        line,
                        message: format!("non-integer label '{field}' in column {col}"),
                    })?;
                    labels.insert(row_idx, label);
                }
            } else {
                let v: f64 = field.parse().map_err(|_| Error::CsvParse {
                    line,
                    message: format!("non-numeric value '{field}' in column {col}"),
                })?;
                coords.push(v);
            }
        }
        points.push(coords);
    }
    if points.is_empty() {
        return Err(Error::CsvParse {
            line: 0,
            message: "empty file".into(),
        });
    }
    LabeledDataset::new(PointCloud::from_points(&points)?, labels)
}

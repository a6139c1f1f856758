//! Grayscale image I/O: binary PGM (P5, 8-bit) read/write with a bit-exact
//! round trip, PNG (8-bit grayscale) via the image crate, and observation
//! masks serialized as PGM (255 = observed, 0 = missing).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inpaint::GrayImage;

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Read a grayscale image (fully observed mask). PGM P5 by default, PNG for
/// `.png` paths.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let (w, h, bytes) = if is_png(path) {
        read_png_gray(path)?
    } else {
        read_pgm(path)?
    };
    GrayImage::from_intensities(w, h, bytes.iter().map(|&b| b as f64).collect())
}

/// Write intensities rounded and clamped to 8 bits. PGM P5 by default, PNG
/// for `.png` paths.
pub fn write_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = img
        .intensities()
        .iter()
        .map(|&v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    if is_png(path) {
        write_png_gray(path, img.width(), img.height(), &bytes)
    } else {
        write_pgm(path, img.width(), img.height(), &bytes)
    }
}

/// Read an observation mask: nonzero pixels are observed.
pub fn load_mask(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<bool>)> {
    let path = path.as_ref();
    let (w, h, bytes) = if is_png(path) {
        read_png_gray(path)?
    } else {
        read_pgm(path)?
    };
    Ok((w, h, bytes.iter().map(|&b| b != 0).collect()))
}

/// Write an observation mask as PGM/PNG with 255 = observed, 0 = missing.
pub fn write_mask(mask: &[bool], width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    if mask.len() != width * height {
        return Err(Error::InvalidArgument("mask length mismatch".into()));
    }
    let bytes: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    let path = path.as_ref();
    if is_png(path) {
        write_png_gray(path, width, height, &bytes)
    } else {
        write_pgm(path, width, height, &bytes)
    }
}

fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    let next_token = |bytes: &[u8], pos: &mut usize| -> Result<String> {
        // skip whitespace and '#' comments
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::UnsupportedImage("truncated pgm header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&bytes, &mut pos)?;
    if magic != "P5" {
        return Err(Error::UnsupportedImage(format!(
            "expected binary pgm magic P5, found '{magic}'"
        )));
    }
    let parse_dim = |tok: String| -> Result<usize> {
        tok.parse::<usize>()
            .map_err(|_| Error::UnsupportedImage(format!("bad pgm header token '{tok}'")))
    };
    let width = parse_dim(next_token(&bytes, &mut pos)?)?;
    let height = parse_dim(next_token(&bytes, &mut pos)?)?;
    let maxval = parse_dim(next_token(&bytes, &mut pos)?)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedImage(format!(
            "unsupported pgm maxval {maxval} (only 8-bit supported)"
        )));
    }
    // single whitespace byte separates header from payload
    pos += 1;
    let expected = width * height;
    if bytes.len() < pos + expected {
        return Err(Error::UnsupportedImage(format!(
            "truncated pgm payload: expected {expected} bytes, found {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    Ok((width, height, bytes[pos..pos + expected].to_vec()))
}

fn write_pgm(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(bytes);
    fs::write(path, out)?;
    Ok(())
}

fn read_png_gray(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = image::open(path).map_err(|e| Error::UnsupportedImage(e.to_string()))?;
    match img {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            Ok((w, h, g.into_raw()))
        }
        other => Err(Error::UnsupportedImage(format!(
            "only 8-bit grayscale png is supported, found {:?}",
            other.color()
        ))),
    }
}

fn write_png_gray(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let buf: image::GrayImage =
        image::ImageBuffer::from_raw(width as u32, height as u32, bytes.to_vec())
            .ok_or_else(|| Error::UnsupportedImage("buffer size mismatch".into()))?;
    buf.save(path).map_err(|e| Error::UnsupportedImage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let vals: Vec<f64> = (0..20).map(|i| (i * 13 % 256) as f64).collect();
        let img = GrayImage::from_intensities(5, 4, vals.clone()).unwrap();
        write_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.width(), 5);
        assert_eq!(back.height(), 4);
        assert_eq!(back.intensities(), &vals[..]);
    }

    #[test]
    fn pgm_header_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.pgm");
        std::fs::write(&path, b"P5 2 2 255\n\x01\x02\x03\x04").unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 2);
        assert_eq!(img.intensities(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn pgm_with_comment() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        std::fs::write(&path, b"P5\n# a comment\n2 1\n255\n\x09\x08").unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.intensities(), &[9.0, 8.0]);
    }

    #[test]
    fn sixteen_bit_pgm_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.pgm");
        std::fs::write(&path, b"P5 1 1 65535\n\x00\x01").unwrap();
        match load_image(&path) {
            Err(Error::UnsupportedImage(msg)) => assert!(msg.contains("65535")),
            other => panic!("expected unsupported-format error, got {other:?}"),
        }
    }

    #[test]
    fn ascii_pgm_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ascii.pgm");
        std::fs::write(&path, b"P2\n1 1\n255\n7\n").unwrap();
        assert!(load_image(&path).is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let vals: Vec<f64> = (0..12).map(|i| (i * 21 % 256) as f64).collect();
        let img = GrayImage::from_intensities(4, 3, vals.clone()).unwrap();
        write_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.intensities(), &vals[..]);
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.pgm");
        let mask = vec![true, false, false, true, true, false];
        write_mask(&mask, 3, 2, &path).unwrap();
        let (w, h, back) = load_mask(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(back, mask);
    }
}

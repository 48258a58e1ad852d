//! IDX files (the MNIST / Fashion-MNIST container format).
//!
//! Big-endian. Images: magic `0x00000803`, dimensions `[count, rows, cols]`,
//! then `count * rows * cols` unsigned bytes. Labels: magic `0x00000801`,
//! dimension `[count]`, then `count` unsigned bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// Pixels scaled to `[0, 1]`, image-major.
    pub pixels: Vec<f64>,
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("{what}: truncated header")))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = read_u32(bytes, 0, "idx images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "idx images: bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4, "idx images")? as usize;
    let rows = read_u32(bytes, 8, "idx images")? as usize;
    let cols = read_u32(bytes, 12, "idx images")? as usize;
    let body = &bytes[16..];
    let expected = count * rows * cols;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "idx images: expected {expected} pixel bytes, found {}",
            body.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: body.iter().map(|&b| f64::from(b) / 255.0).collect(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0, "idx labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!(
            "idx labels: bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let count = read_u32(bytes, 4, "idx labels")? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Format(format!(
            "idx labels: expected {count} label bytes, found {}",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

pub fn encode_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let count = pixels.len() / (rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, count as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Load an image/label file pair. `num_classes` of `None` uses `max label + 1`.
pub fn load_dataset(images: &Path, labels: &Path, num_classes: Option<usize>) -> Result<Dataset> {
    let img = parse_images(&read_file(images)?)?;
    let lab = parse_labels(&read_file(labels)?)?;
    if lab.len() != img.count {
        return Err(Error::Format(format!(
            "{} has {} images but {} has {} labels",
            images.display(),
            img.count,
            labels.display(),
            lab.len()
        )));
    }
    let classes = num_classes.unwrap_or_else(|| lab.iter().map(|&y| y as usize + 1).max().unwrap_or(1));
    Dataset::new(
        img.pixels,
        lab.iter().map(|&y| y as usize).collect(),
        img.rows * img.cols,
        classes,
    )
    .map_err(|e| Error::Format(format!("idx dataset: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_header_is_big_endian() {
        let bytes = encode_images(2, 3, &[0, 255, 51, 0, 0, 0]);
        assert_eq!(&bytes[..16], &[0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3]);
        let img = parse_images(&bytes).unwrap();
        assert_eq!((img.count, img.rows, img.cols), (1, 2, 3));
        assert_eq!(img.pixels[1], 1.0);
        assert!((img.pixels[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let mut bytes = encode_labels(&[1, 2]);
        assert!(parse_images(&bytes).is_err());
        bytes[3] = 0x03;
        assert!(matches!(parse_labels(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_body_is_rejected() {
        let mut bytes = encode_images(2, 2, &[1, 2, 3, 4]);
        bytes.pop();
        assert!(matches!(parse_images(&bytes), Err(Error::Format(_))));
        assert!(parse_labels(&[0, 0, 8]).is_err());
    }

    #[test]
    fn load_pair_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        fs::write(&ip, encode_images(1, 2, &[0, 255, 255, 0])).unwrap();
        fs::write(&lp, encode_labels(&[3, 1])).unwrap();
        let d = load_dataset(&ip, &lp, Some(10)).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.num_features(), 2);
        assert_eq!(d.labels(), &[3, 1]);
        assert_eq!(d.sample(0), &[0.0, 1.0]);
        let mismatch = dir.path().join("lab3.idx");
        fs::write(&mismatch, encode_labels(&[1, 2, 3])).unwrap();
        assert!(load_dataset(&ip, &mismatch, None).is_err());
    }
}

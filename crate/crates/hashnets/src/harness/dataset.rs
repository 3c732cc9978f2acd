//! Dataset container plus IDX and CSV readers/writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Labelled feature vectors, row-major, features normalized to [0, 1] by the
/// readers. `split_at` marks an optional train/test boundary.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub n_features: usize,
    pub n_classes: usize,
    pub features: Vec<f64>,
    pub labels: Vec<u8>,
    pub split_at: Option<usize>,
}

impl Dataset {
    pub fn new(n_features: usize, features: Vec<f64>, labels: Vec<u8>) -> Result<Dataset> {
        if features.len() != n_features * labels.len() {
            return Err(Error::invalid("feature buffer does not match count"));
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite features"));
        }
        let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Ok(Dataset {
            n_features,
            n_classes,
            features,
            labels,
            split_at: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Keeps the first `m` samples.
    pub fn truncated(&self, m: usize) -> Dataset {
        let m = m.min(self.len());
        Dataset {
            n_features: self.n_features,
            n_classes: self.n_classes,
            features: self.features[..m * self.n_features].to_vec(),
            labels: self.labels[..m].to_vec(),
            split_at: self.split_at.filter(|&s| s <= m),
        }
    }

    pub fn with_split(mut self, train: usize) -> Result<Dataset> {
        if train > self.len() {
            return Err(Error::invalid("split beyond dataset length"));
        }
        self.split_at = Some(train);
        Ok(self)
    }

    /// (train, test) ranges; without a split everything is training data.
    pub fn split_ranges(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        match self.split_at {
            Some(s) => (0..s, s..self.len()),
            None => (0..self.len(), self.len()..self.len()),
        }
    }
}

fn be_u32(bytes: &[u8], offset: usize, field: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Format {
            field: field.to_string(),
            message: "file truncated".to_string(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Reads the big-endian IDX image/label pair; pixels are scaled to [0, 1].
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img = fs::read(images_path)?;
    let lab = fs::read(labels_path)?;

    let magic = be_u32(&img, 0, "images.magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format {
            field: "images.magic".into(),
            message: format!("expected 0x{IDX_IMAGES_MAGIC:08x}, got 0x{magic:08x}"),
        });
    }
    let count = be_u32(&img, 4, "images.count")? as usize;
    let rows = be_u32(&img, 8, "images.rows")? as usize;
    let cols = be_u32(&img, 12, "images.cols")? as usize;
    let n = rows * cols;
    if img.len() != 16 + count * n {
        return Err(Error::Format {
            field: "images.data".into(),
            message: format!(
                "expected {} pixel bytes, file holds {}",
                count * n,
                img.len().saturating_sub(16)
            ),
        });
    }

    let lmagic = be_u32(&lab, 0, "labels.magic")?;
    if lmagic != IDX_LABELS_MAGIC {
        return Err(Error::Format {
            field: "labels.magic".into(),
            message: format!("expected 0x{IDX_LABELS_MAGIC:08x}, got 0x{lmagic:08x}"),
        });
    }
    let lcount = be_u32(&lab, 4, "labels.count")? as usize;
    if lcount != count {
        return Err(Error::Format {
            field: "labels.count".into(),
            message: format!("images hold {count} samples, labels hold {lcount}"),
        });
    }
    if lab.len() != 8 + lcount {
        return Err(Error::Format {
            field: "labels.data".into(),
            message: "file truncated".into(),
        });
    }

    let features = img[16..].iter().map(|&b| b as f64 / 255.0).collect();
    let labels = lab[8..].to_vec();
    Dataset::new(n, features, labels)
}

/// Writes the IDX pair; features are quantized back to bytes via *255.
pub fn write_idx(ds: &Dataset, images_path: &Path, labels_path: &Path, rows: usize, cols: usize) -> Result<()> {
    if rows * cols != ds.n_features {
        return Err(Error::invalid("rows*cols must equal feature count"));
    }
    let mut img = Vec::with_capacity(16 + ds.features.len());
    img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    img.extend(
        ds.features
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    let mut lab = Vec::with_capacity(8 + ds.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    lab.extend_from_slice(&ds.labels);
    fs::File::create(images_path)?.write_all(&img)?;
    fs::File::create(labels_path)?.write_all(&lab)?;
    Ok(())
}

/// One sample per line, comma-separated features with the label last.
pub fn load_csv(path: &Path, n_features: usize) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_features + 1 {
            return Err(Error::Format {
                field: format!("line {}", lineno + 1),
                message: format!(
                    "expected {} fields (features + label), got {}",
                    n_features + 1,
                    fields.len()
                ),
            });
        }
        for f in &fields[..n_features] {
            let v: f64 = f.trim().parse().map_err(|_| Error::Format {
                field: format!("line {}", lineno + 1),
                message: format!("bad feature value '{f}'"),
            })?;
            features.push(v);
        }
        let label: u8 = fields[n_features].trim().parse().map_err(|_| Error::Format {
            field: format!("line {}", lineno + 1),
            message: format!("bad label '{}'", fields[n_features]),
        })?;
        labels.push(label);
    }
    Dataset::new(n_features, features, labels)
}

pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..ds.len() {
        for v in ds.x(i) {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", ds.labels[i]));
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn idx_round_trip() {
        let dir = tmpdir();
        let ds = Dataset::new(
            4,
            vec![
                0.0, 1.0, 0.5, 0.25, //
                1.0, 0.0, 0.75, 0.5, //
                0.2, 0.4, 0.6, 0.8, //
                0.0, 0.0, 1.0, 1.0,
            ],
            vec![0, 1, 2, 1],
        )
        .unwrap();
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        write_idx(&ds, &ip, &lp, 2, 2).unwrap();
        let back = load_idx(&ip, &lp).unwrap();
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.n_features, 4);
        for (a, b) in back.features.iter().zip(&ds.features) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn idx_rejects_bad_magic_and_count_mismatch() {
        let dir = tmpdir();
        let ds = Dataset::new(1, vec![0.5, 0.5], vec![0, 1]).unwrap();
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        write_idx(&ds, &ip, &lp, 1, 1).unwrap();

        let mut img = fs::read(&ip).unwrap();
        img[3] = 0x01; // wrong magic
        fs::write(&ip, &img).unwrap();
        match load_idx(&ip, &lp) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "images.magic"),
            other => panic!("expected format error, got {other:?}"),
        }

        write_idx(&ds, &ip, &lp, 1, 1).unwrap();
        let mut lab = fs::read(&lp).unwrap();
        lab[7] = 9; // count mismatch
        fs::write(&lp, &lab).unwrap();
        match load_idx(&ip, &lp) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "labels.count"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn idx_rejects_truncation() {
        let dir = tmpdir();
        let ds = Dataset::new(4, vec![0.1; 8], vec![0, 1]).unwrap();
        let ip = dir.path().join("img.idx");
        let lp = dir.path().join("lab.idx");
        write_idx(&ds, &ip, &lp, 2, 2).unwrap();
        let img = fs::read(&ip).unwrap();
        fs::write(&ip, &img[..img.len() - 3]).unwrap();
        assert!(matches!(load_idx(&ip, &lp), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_round_trip_and_hand_file() {
        let dir = tmpdir();
        let p = dir.path().join("d.csv");
        fs::write(&p, "0.5,1.5,0\n-1.25,2,3\n").unwrap();
        let ds = load_csv(&p, 2).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.x(0), &[0.5, 1.5]);
        assert_eq!(ds.x(1), &[-1.25, 2.0]);
        assert_eq!(ds.labels, vec![0, 3]);

        let q = dir.path().join("rt.csv");
        write_csv(&ds, &q).unwrap();
        let back = load_csv(&q, 2).unwrap();
        assert_eq!(back.features, ds.features);
        assert_eq!(back.labels, ds.labels);
    }

    #[test]
    fn csv_empty_and_ragged() {
        let dir = tmpdir();
        let p = dir.path().join("e.csv");
        fs::write(&p, "").unwrap();
        let ds = load_csv(&p, 3).unwrap();
        assert!(ds.is_empty());

        fs::write(&p, "1,2,0\n1,0\n").unwrap();
        assert!(matches!(load_csv(&p, 2), Err(Error::Format { .. })));
    }
}

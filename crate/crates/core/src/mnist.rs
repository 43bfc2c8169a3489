//! MNIST IDX loading and clamp encoding.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;

use crate::calibration::{inverse_transfer, SigmoidFit};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;
/// Clamp probability of an "on" pixel or label unit.
pub const HIGH: f64 = 0.98;
/// Clamp probability of an "off" pixel or label unit.
pub const LOW: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Digit {
    /// Row-major gray values in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub label: u8,
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(buf: &[u8], offset: usize, path: &Path) -> Result<u32> {
    buf.get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            offset: buf.len() as u64,
            msg: "truncated header".into(),
        })
}

/// Decode an IDX image file (`0x00000803`) into rows of bytes.
pub fn parse_idx_images(buf: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let magic = be_u32(buf, 0, path)?;
    if magic != 0x0803 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            offset: 0,
            msg: format!("bad image magic {magic:#010x}"),
        });
    }
    let n = be_u32(buf, 4, path)? as usize;
    let rows = be_u32(buf, 8, path)? as usize;
    let cols = be_u32(buf, 12, path)? as usize;
    let need = 16 + n * rows * cols;
    if buf.len() < need {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            offset: buf.len() as u64,
            msg: format!("truncated image data, expected {need} bytes"),
        });
    }
    Ok((n, rows * cols, buf[16..need].to_vec()))
}

/// Decode an IDX label file (`0x00000801`).
pub fn parse_idx_labels(buf: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = be_u32(buf, 0, path)?;
    if magic != 0x0801 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            offset: 0,
            msg: format!("bad label magic {magic:#010x}"),
        });
    }
    let n = be_u32(buf, 4, path)? as usize;
    if buf.len() < 8 + n {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            offset: buf.len() as u64,
            msg: format!("truncated label data, expected {} bytes", 8 + n),
        });
    }
    let labels = buf[8..8 + n].to_vec();
    if let Some(k) = labels.iter().position(|&l| l > 9) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            offset: 8 + k as u64,
            msg: format!("label {} out of range", labels[k]),
        });
    }
    Ok(labels)
}

/// Load an image/label file pair (plain or gzip-compressed).
pub fn load_idx(images: &Path, labels: &Path) -> Result<Vec<Digit>> {
    let (n, size, bytes) = parse_idx_images(&read_maybe_gz(images)?, images)?;
    let lab = parse_idx_labels(&read_maybe_gz(labels)?, labels)?;
    if lab.len() != n {
        return Err(Error::Dimension(format!(
            "{} has {n} images but {} has {} labels",
            images.display(),
            labels.display(),
            lab.len()
        )));
    }
    Ok(bytes
        .chunks_exact(size.max(1))
        .take(n)
        .zip(lab)
        .map(|(px, label)| Digit {
            pixels: px.iter().map(|&b| b as f64 / 255.0).collect(),
            label,
        })
        .collect())
}

/// Standard file names inside an MNIST directory, preferring uncompressed.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistFiles {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl MnistFiles {
    pub fn in_dir(dir: &Path) -> Self {
        let pick = |stem: &str| {
            let plain = dir.join(stem);
            if plain.exists() {
                plain
            } else {
                dir.join(format!("{stem}.gz"))
            }
        };
        Self {
            train_images: pick("train-images-idx3-ubyte"),
            train_labels: pick("train-labels-idx1-ubyte"),
            test_images: pick("t10k-images-idx3-ubyte"),
            test_labels: pick("t10k-labels-idx1-ubyte"),
        }
    }

    pub fn exist(&self) -> bool {
        [&self.train_images, &self.train_labels, &self.test_images, &self.test_labels]
            .iter()
            .all(|p| p.exists())
    }

    pub fn load_train(&self) -> Result<Vec<Digit>> {
        load_idx(&self.train_images, &self.train_labels)
    }

    pub fn load_test(&self) -> Result<Vec<Digit>> {
        load_idx(&self.test_images, &self.test_labels)
    }
}

/// Two-level clamp probabilities: `p <= 0.5` maps to [`LOW`], above to [`HIGH`].
pub fn binarize(pixels: &[f64]) -> Vec<f64> {
    pixels.iter().map(|&p| if p > 0.5 { HIGH } else { LOW }).collect()
}

/// Layout of the class-label units: `per_label` units for each of `n_labels`
/// consecutive labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelCode {
    pub n_labels: usize,
    pub per_label: usize,
}

impl LabelCode {
    pub fn n_units(&self) -> usize {
        self.n_labels * self.per_label
    }

    pub fn group(&self, label: usize) -> std::ops::Range<usize> {
        label * self.per_label..(label + 1) * self.per_label
    }

    pub fn encode(&self, label: usize, high: f64, low: f64) -> Result<Vec<f64>> {
        if label >= self.n_labels {
            return Err(Error::OutOfRange {
                value: label as f64,
                lo: -1.0,
                hi: self.n_labels as f64,
            });
        }
        let mut out = vec![low; self.n_units()];
        out[self.group(label)].iter_mut().for_each(|x| *x = high);
        Ok(out)
    }
}

/// Ten labels spread over `n_c` units (`n_c / 10` per label).
pub fn encode_label(label: usize, n_c: usize, high: f64, low: f64) -> Result<Vec<f64>> {
    if n_c == 0 || n_c % 10 != 0 {
        return Err(Error::Config(format!("{n_c} class units do not split over 10 labels")));
    }
    LabelCode {
        n_labels: 10,
        per_label: n_c / 10,
    }
    .encode(label, high, low)
}

/// Currents that make each unit fire with occupancy `p_i`: `nu(f_i) tau_r = p_i`.
pub fn clamp_currents(probabilities: &[f64], fit: &SigmoidFit) -> Result<Vec<f64>> {
    probabilities
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::OutOfRange { value: p, lo: 0.0, hi: 1.0 });
            }
            inverse_transfer(p / fit.tau_r, fit)
        })
        .collect()
}

/// Indices of `per_class` digits of each class in `classes`, drawn by a
/// seeded shuffle and returned interleaved in shuffled order.
pub fn balanced_subset(digits: &[Digit], classes: &[u8], per_class: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = stream(seed, Stream::Aux(6));
    let mut out = Vec::with_capacity(classes.len() * per_class);
    for &c in classes {
        let mut idx: Vec<usize> = (0..digits.len()).filter(|&i| digits[i].label == c).collect();
        if idx.len() < per_class {
            return Err(Error::Config(format!(
                "class {c} has only {} digits, {per_class} requested",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        out.extend_from_slice(&idx[..per_class]);
    }
    out.shuffle(&mut rng);
    Ok(out)
}

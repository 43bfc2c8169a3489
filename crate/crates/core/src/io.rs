//! Parameter snapshots and image output.
//!
//! Snapshot layout, all little-endian:
//! `b"SRBM"`, `u32` version, `u32` n_visible, `u32` n_hidden, `u32` n_class,
//! then `f64` weights row-major (`n_visible x n_hidden`), visible biases,
//! hidden biases.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rbm::RbmParams;

const MAGIC: &[u8; 4] = b"SRBM";
const VERSION: u32 = 1;

pub fn write_snapshot(mut w: impl Write, rbm: &RbmParams) -> Result<()> {
    rbm.validate()?;
    w.write_all(MAGIC)?;
    for x in [VERSION, rbm.n_visible() as u32, rbm.n_hidden() as u32, rbm.n_class as u32] {
        w.write_all(&x.to_le_bytes())?;
    }
    for x in rbm.w.iter().chain(&rbm.b_v).chain(&rbm.b_h) {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot(mut r: impl Read, path: &Path) -> Result<RbmParams> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let err = |offset: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        offset: offset as u64,
        msg: msg.into(),
    };
    if buf.len() < 20 {
        return Err(err(buf.len(), "truncated header"));
    }
    if &buf[..4] != MAGIC {
        return Err(err(0, "not a parameter snapshot"));
    }
    let word = |k: usize| u32::from_le_bytes(buf[4 + 4 * k..8 + 4 * k].try_into().unwrap());
    if word(0) != VERSION {
        return Err(err(4, &format!("unsupported version {}", word(0))));
    }
    let (nv, nh, nc) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let n = nv * nh + nv + nh;
    if buf.len() != 20 + 8 * n {
        return Err(err(buf.len(), &format!("expected {} bytes of parameters", 8 * n)));
    }
    let vals: Vec<f64> = buf[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let rbm = RbmParams {
        w: Array2::from_shape_vec((nv, nh), vals[..nv * nh].to_vec()).expect("sized above"),
        b_v: Array1::from(vals[nv * nh..nv * nh + nv].to_vec()),
        b_h: Array1::from(vals[nv * nh + nv..].to_vec()),
        n_class: nc,
    };
    rbm.validate().map_err(|e| err(16, &e.to_string()))?;
    Ok(rbm)
}

pub fn save_snapshot(path: &Path, rbm: &RbmParams) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(&mut f, rbm)?;
    f.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<RbmParams> {
    read_snapshot(std::fs::File::open(path)?, path)
}

/// Binary PGM of `values` scaled so that `max` maps to white.
pub fn write_pgm(mut w: impl Write, values: &[f64], width: usize, max: f64) -> Result<()> {
    if width == 0 || values.len() % width != 0 {
        return Err(Error::Dimension(format!("{} values for width {width}", values.len())));
    }
    write!(w, "P5\n{} {}\n255\n", width, values.len() / width)?;
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let px: Vec<u8> = values.iter().map(|&v| (v * scale).round().clamp(0.0, 255.0) as u8).collect();
    w.write_all(&px)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_test_rbm;
    use proptest::prelude::*;

    #[test]
    fn snapshot_round_trip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.srbm");
        let rbm = random_test_rbm(7, 3, 2).with_classes(2);
        save_snapshot(&p, &rbm).unwrap();
        assert_eq!(load_snapshot(&p).unwrap(), rbm);
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 20 + 8 * (21 + 10));
    }

    #[test]
    fn corrupt_snapshots_rejected() {
        let rbm = random_test_rbm(2, 2, 1);
        let mut b = Vec::new();
        write_snapshot(&mut b, &rbm).unwrap();
        let p = Path::new("x");
        assert!(read_snapshot(&b[..b.len() - 1], p).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(read_snapshot(&bad[..], p).is_err());
        let mut bad = b.clone();
        bad[16] = 9;
        assert!(read_snapshot(&bad[..], p).is_err());
    }

    #[test]
    fn pgm_header_and_scaling() {
        let mut b = Vec::new();
        write_pgm(&mut b, &[0.0, 20.0, 100.0, 200.0], 2, 100.0).unwrap();
        assert!(b.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&b[b.len() - 4..], &[0, 51, 255, 255]);
        assert!(write_pgm(&mut Vec::new(), &[0.0; 3], 2, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn snapshot_bytes_round_trip(nv in 1usize..6, nh in 1usize..6, seed in 0u64..100) {
            let rbm = random_test_rbm(nv, nh, seed);
            let mut b = Vec::new();
            write_snapshot(&mut b, &rbm).unwrap();
            prop_assert_eq!(read_snapshot(&b[..], Path::new("x")).unwrap(), rbm);
        }
    }
}

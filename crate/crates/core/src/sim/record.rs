use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Spike times of a simulation run, sorted by time (ties by neuron id).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpikeRecord {
    pub n_neurons: usize,
    pub duration: f64,
    pub dt: f64,
    pub spikes: Vec<(u32, f64)>,
}

impl SpikeRecord {
    pub fn new(n_neurons: usize, duration: f64, dt: f64) -> Self {
        Self {
            n_neurons,
            duration,
            dt,
            spikes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    /// Spike times of each neuron.
    pub fn per_neuron(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.n_neurons];
        for &(id, t) in &self.spikes {
            out[id as usize].push(t);
        }
        out
    }

    /// Spike counts per neuron within `[t0, t1)`.
    pub fn counts_in(&self, t0: f64, t1: f64) -> Vec<usize> {
        let mut out = vec![0; self.n_neurons];
        for &(id, t) in &self.spikes {
            if t >= t0 && t < t1 {
                out[id as usize] += 1;
            }
        }
        out
    }

    /// Mean rate (Hz) of each neuron over the whole record.
    pub fn rates(&self) -> Vec<f64> {
        self.counts_in(0.0, f64::INFINITY)
            .into_iter()
            .map(|c| c as f64 / self.duration)
            .collect()
    }

    /// Restrict to neurons `range`, renumbering from zero.
    pub fn select(&self, range: std::ops::Range<usize>) -> SpikeRecord {
        let mut out = SpikeRecord::new(range.len(), self.duration, self.dt);
        out.spikes = self
            .spikes
            .iter()
            .filter(|(id, _)| range.contains(&(*id as usize)))
            .map(|&(id, t)| (id - range.start as u32, t))
            .collect();
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "neuron_id,time_s")?;
        for &(id, t) in &self.spikes {
            writeln!(w, "{id},{t:.6e}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, path: &Path) -> Result<Vec<(u32, f64)>> {
        let mut out = Vec::new();
        let mut offset = 0u64;
        for (n, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let here = offset;
            offset += line.len() as u64 + 1;
            if n == 0 {
                continue;
            }
            let bad = |msg: &str| Error::Parse {
                path: path.to_path_buf(),
                offset: here,
                msg: msg.to_string(),
            };
            let (a, b) = line.split_once(',').ok_or_else(|| bad("expected `id,time`"))?;
            let id = a.trim().parse().map_err(|_| bad("bad neuron id"))?;
            let t = b.trim().parse().map_err(|_| bad("bad time"))?;
            out.push((id, t));
        }
        Ok(out)
    }

    /// Little-endian `u32` id followed by `f64` seconds, per spike.
    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        for &(id, t) in &self.spikes {
            w.write_all(&id.to_le_bytes())?;
            w.write_all(&t.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, path: &Path) -> Result<Vec<(u32, f64)>> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() % 12 != 0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                offset: (buf.len() / 12 * 12) as u64,
                msg: "truncated spike entry".into(),
            });
        }
        Ok(buf
            .chunks_exact(12)
            .map(|c| {
                let id = u32::from_le_bytes(c[..4].try_into().unwrap());
                let t = f64::from_le_bytes(c[4..].try_into().unwrap());
                (id, t)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_round_trip(spikes in proptest::collection::vec((0u32..1000, 0.0f64..100.0), 0..50)) {
            let mut rec = SpikeRecord::new(1000, 100.0, 1e-4);
            rec.spikes = spikes.clone();
            let mut buf = Vec::new();
            rec.write_binary(&mut buf).unwrap();
            prop_assert_eq!(buf.len(), 12 * spikes.len());
            let back = SpikeRecord::read_binary(&buf[..], Path::new("mem")).unwrap();
            prop_assert_eq!(back, spikes);
        }
    }

    #[test]
    fn csv_has_header_and_parses_back() {
        let mut rec = SpikeRecord::new(3, 1.0, 1e-4);
        rec.spikes = vec![(0, 0.0101), (2, 0.5)];
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("neuron_id,time_s\n"));
        let back = SpikeRecord::read_csv(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].0, 2);
        assert!((back[0].1 - 0.0101).abs() < 1e-12);
    }

    #[test]
    fn truncated_binary_is_an_error() {
        let err = SpikeRecord::read_binary(&[0u8; 13][..], Path::new("x.bin")).unwrap_err();
        assert!(err.to_string().contains("byte offset 12"));
    }
}

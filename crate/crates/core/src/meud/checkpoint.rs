//! Binary model checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "FCBCKPT\0"
//! version      u32
//! variant      u8       0 BaselineAE, 1 MEUD, 2 MEUD_FF, 3 MEUD_Coop, 4 MEUD_FF_Coop
//! ring         u8       0 or 1
//! seed         u64
//! layers       u32, then one u64 width per layer
//! connections  u32, then per connection:
//!   kind u8 = 0 (dense): rows u64, cols u64, rows*cols f64 row-major
//!   kind u8 = 1 (band):  size u64, len(diag) u64, len(off) u64,
//!                        diag f64s, sub f64s, sup f64s
//! ```

use std::path::Path;

use super::band::BandWeights;
use super::config::{NetworkConfig, Variant};
use super::params::{Connection, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FCBCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint_to_bytes(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

pub fn checkpoint_to_bytes(params: &ModelParams) -> Vec<u8> {
    let cfg = &params.config;
    let mut out = Vec::with_capacity(64 + 8 * params.num_params());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(cfg.variant.tag());
    out.push(u8::from(cfg.ring));
    out.extend_from_slice(&cfg.seed.to_le_bytes());
    out.extend_from_slice(&(cfg.widths.len() as u32).to_le_bytes());
    for &w in &cfg.widths {
        out.extend_from_slice(&(w as u64).to_le_bytes());
    }
    out.extend_from_slice(&(params.connections.len() as u32).to_le_bytes());
    let put_f64s = |out: &mut Vec<u8>, vals: &[f64]| {
        for v in vals {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for conn in &params.connections {
        match conn {
            Connection::Dense(w) => {
                out.push(0);
                out.extend_from_slice(&(w.rows() as u64).to_le_bytes());
                out.extend_from_slice(&(w.cols() as u64).to_le_bytes());
                put_f64s(&mut out, w.as_slice());
            }
            Connection::Band(b) => {
                out.push(1);
                out.extend_from_slice(&(b.size() as u64).to_le_bytes());
                out.extend_from_slice(&(b.diag.len() as u64).to_le_bytes());
                out.extend_from_slice(&(b.sub.len() as u64).to_le_bytes());
                put_f64s(&mut out, &b.diag);
                put_f64s(&mut out, &b.sub);
                put_f64s(&mut out, &b.sup);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(Error::Truncated {
            expected: self.pos.saturating_add(n),
            found: self.bytes.len(),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("length overflows usize".into()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or(Error::Checkpoint("length overflow".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let tag = r.u8()?;
    let variant = Variant::from_tag(tag)
        .ok_or_else(|| Error::Checkpoint(format!("unknown variant tag {tag}")))?;
    let ring = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(Error::Checkpoint(format!("bad ring flag {b}"))),
    };
    let seed = r.u64()?;
    let layers = r.u32()? as usize;
    let widths = (0..layers).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
    let config = NetworkConfig::new(widths, variant, seed)?.with_ring(ring)?;

    let count = r.u32()? as usize;
    let mut connections = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let conn = match r.u8()? {
            0 => {
                let (rows, cols) = (r.len()?, r.len()?);
                let n = rows
                    .checked_mul(cols)
                    .ok_or(Error::Checkpoint("matrix size overflow".into()))?;
                Connection::Dense(Matrix::new(rows, cols, r.f64s(n)?)?)
            }
            1 => {
                let (_size, nd, noff) = (r.len()?, r.len()?, r.len()?);
                let diag = r.f64s(nd)?;
                let sub = r.f64s(noff)?;
                let sup = r.f64s(noff)?;
                Connection::Band(BandWeights::new(diag, sub, sup, ring)?)
            }
            k => return Err(Error::Checkpoint(format!("unknown connection kind {k}"))),
        };
        connections.push(conn);
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    ModelParams::new(config, connections)
}

#[cfg(test)]
mod tests {
    use super::checkpoint_from_bytes as from_bytes;
    use super::checkpoint_to_bytes as to_bytes;
    use super::*;
    use crate::meud::init_params;

    fn sample(variant: Variant) -> ModelParams {
        let cfg = NetworkConfig::from_meud_widths(&[12, 8, 4, 4, 12], variant, 5).unwrap();
        let ff = [Matrix::filled(12, 8, 0.01)];
        init_params(&cfg, Some(&ff)).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        for v in Variant::ALL {
            let p = sample(v);
            let bytes = to_bytes(&p);
            let back = from_bytes(&bytes).unwrap();
            assert_eq!(back, p);
            assert_eq!(to_bytes(&back), bytes);
        }
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = to_bytes(&sample(Variant::Meud));
        bytes[8] = 9;
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::CheckpointVersion { found: 9, .. })
        ));
    }

    #[test]
    fn corrupt_inputs() {
        let bytes = to_bytes(&sample(Variant::MeudCoop));
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(from_bytes(b"nonsense").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let p = sample(Variant::MeudFfCoop);
        save_checkpoint(&p, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), p);
    }
}

//! Binary snapshot files.
//!
//! Layout (little endian): magic `EUSS`, `u32` format version, `u32` N,
//! `u32` m, `f64` time, `u64` manifest hash, then per sample a `u64` seed
//! followed by the coefficients for `k1 = -N..N` (outer), `k2 = -N..N`
//! (inner), component 1 then 2, each as `(f64 re, f64 im)`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::ensemble::{EnsembleSnapshot, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::field::SpectralField;

const MAGIC: &[u8; 4] = b"EUSS";
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8;

pub fn encode(snapshot: &EnsembleSnapshot) -> Vec<u8> {
    let side = 2 * snapshot.n + 1;
    let mut out = Vec::with_capacity(HEADER_LEN + snapshot.m() * (8 + side * side * 32));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(snapshot.n as u32).to_le_bytes());
    out.extend_from_slice(&(snapshot.m() as u32).to_le_bytes());
    out.extend_from_slice(&snapshot.time.to_le_bytes());
    out.extend_from_slice(&snapshot.manifest_hash.to_le_bytes());
    for (field, seed) in snapshot.fields.iter().zip(&snapshot.sample_seeds) {
        out.extend_from_slice(&seed.to_le_bytes());
        for c in field.coeffs() {
            for z in c {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("truncated file at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice has length K"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<EnsembleSnapshot> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(Error::Format("not a snapshot file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let n = r.u32()? as usize;
    let m = r.u32()? as usize;
    let time = r.f64()?;
    let manifest_hash = r.u64()?;
    if m == 0 {
        return Err(Error::Format("snapshot holds no samples".into()));
    }
    let side = 2 * n + 1;
    let expected = HEADER_LEN as u128 + m as u128 * (8 + side as u128 * side as u128 * 32);
    if bytes.len() as u128 != expected {
        return Err(Error::Format(format!(
            "file length {} does not match N = {n}, m = {m} (expected {expected})",
            bytes.len()
        )));
    }
    let mut fields = Vec::with_capacity(m);
    let mut seeds = Vec::with_capacity(m);
    for _ in 0..m {
        seeds.push(r.u64()?);
        let mut coeffs = Vec::with_capacity(side * side);
        for _ in 0..side * side {
            let a = Complex64::new(r.f64()?, r.f64()?);
            let b = Complex64::new(r.f64()?, r.f64()?);
            coeffs.push([a, b]);
        }
        fields.push(SpectralField::from_coeffs(n, coeffs)?);
    }
    Ok(EnsembleSnapshot { time, n, fields, sample_seeds: seeds, scheme_params: None, manifest_hash })
}

pub fn save(path: &Path, snapshot: &EnsembleSnapshot) -> Result<()> {
    fs::write(path, encode(snapshot))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<EnsembleSnapshot> {
    decode(&fs::read(path)?)
}

//! Binary snapshot files.
//!
//! Layout (little endian): `b"EXOD"`, `u32` version, `u32` N_θ, `u32` N_r,
//! `f64` time, `f64` ν, then `(re, im)` `f64` pairs for every stored mode
//! `n = -N_θ/2 ..= N_θ/2` (ascending) and node `j` (ascending).

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

pub const MAGIC: &[u8; 4] = b"EXOD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub nu: f64,
    pub field: SpectralField,
}

impl Snapshot {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(HEADER_LEN + 16 * self.field.raw().len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.field.n_theta() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.field.n_r() as u32).to_le_bytes());
        buf.extend_from_slice(&self.time.to_le_bytes());
        buf.extend_from_slice(&self.nu.to_le_bytes());
        for c in self.field.raw() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; HEADER_LEN];
        r.read_exact(&mut head)?;
        if &head[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n_theta = u32_at(8) as usize;
        let n_r = u32_at(12) as usize;
        if n_theta % 2 != 0 {
            return Err(Error::Format(format!("odd N_θ = {n_theta}")));
        }
        let (time, nu) = (f64_at(16), f64_at(24));
        let count = (n_theta + 1) * n_r;
        let mut body = vec![0u8; 16 * count];
        r.read_exact(&mut body)?;
        let data = body
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        Ok(Self { time, nu, field: SpectralField::from_raw(n_theta, n_r, data)? })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_bit_exact() {
        let mut f = SpectralField::zeros(4, 2);
        f.mode_mut(1)[1] = Complex64::new(1.5, -2.0);
        let snap = Snapshot { time: 0.25, nu: 1e-3, field: f };
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 16 * 5 * 2);
        assert_eq!(&bytes[..4], b"EXOD");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[8..12], 4u32.to_le_bytes());
        assert_eq!(bytes[12..16], 2u32.to_le_bytes());
        assert_eq!(bytes[16..24], 0.25f64.to_le_bytes());
        assert_eq!(bytes[24..32], 1e-3f64.to_le_bytes());
        // mode n = 1 is the fourth stored mode, node j = 1 its second entry
        let o = HEADER_LEN + 16 * (3 * 2 + 1);
        assert_eq!(bytes[o..o + 8], 1.5f64.to_le_bytes());
        assert_eq!(bytes[o + 8..o + 16], (-2.0f64).to_le_bytes());
        assert_eq!(Snapshot::read_from(&bytes[..]).unwrap(), snap);
    }

    #[test]
    fn rejects_foreign_files() {
        let mut bytes = vec![0u8; HEADER_LEN];
        bytes[..4].copy_from_slice(b"NOPE");
        assert!(Snapshot::read_from(&bytes[..]).is_err());
    }
}

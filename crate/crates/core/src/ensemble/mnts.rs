//! `MNTS` binary container for scattering matrices.
//!
//! Layout, all little-endian: magic `b"MNTS"`, version `u32`, `N_T`, `N_R`,
//! `N_S` as `u32`, κ as `f64`, then `N²` entries as `(re, im)` `f64` pairs in
//! row-major order.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::{EnsembleError, PortPartition, ScatteringMatrix};
use crate::numeric::{ComplexMatrix, C64};

pub const MNTS_MAGIC: [u8; 4] = *b"MNTS";
pub const MNTS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MntsError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not an MNTS file (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported MNTS version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid matrix in MNTS file: {0}")]
    Invalid(#[from] EnsembleError),
}

pub fn write_mnts<W: Write>(mut w: W, s: &ScatteringMatrix) -> Result<(), MntsError> {
    let p = s.partition();
    w.write_all(&MNTS_MAGIC)?;
    w.write_all(&MNTS_VERSION.to_le_bytes())?;
    for count in [p.n_tx, p.n_rx, p.n_ris] {
        let count = u32::try_from(count)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "port count exceeds u32"))?;
        w.write_all(&count.to_le_bytes())?;
    }
    w.write_all(&s.kappa().to_le_bytes())?;
    for z in s.matrix().as_slice() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads and re-validates (reciprocity, passivity) a matrix.
pub fn read_mnts<R: Read>(mut r: R) -> Result<ScatteringMatrix, MntsError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MNTS_MAGIC {
        return Err(MntsError::BadMagic(magic));
    }
    let version = read_u32(&mut r)?;
    if version != MNTS_VERSION {
        return Err(MntsError::UnsupportedVersion(version));
    }
    let n_tx = read_u32(&mut r)? as usize;
    let n_rx = read_u32(&mut r)? as usize;
    let n_ris = read_u32(&mut r)? as usize;
    let partition = PortPartition::new(n_tx, n_rx, n_ris)?;
    let kappa = read_f64(&mut r)?;
    let n = partition.total();
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        data.push(C64::new(re, im));
    }
    let matrix = ComplexMatrix::new(n, n, data).map_err(EnsembleError::from)?;
    Ok(ScatteringMatrix::new(partition, matrix, kappa)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{draw_scattering_matrix, EnsembleSpec};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), n_ris in 1usize..12, kappa in 0.0f64..1.0) {
            let spec = EnsembleSpec::new(PortPartition::new(1, 2, n_ris).unwrap(), kappa, seed);
            let s = draw_scattering_matrix(&spec).unwrap();
            let mut buf = Vec::new();
            write_mnts(&mut buf, &s).unwrap();
            prop_assert_eq!(buf.len(), 4 + 4 * 4 + 8 + 16 * s.partition().total().pow(2));
            let back = read_mnts(buf.as_slice()).unwrap();
            prop_assert_eq!(back.matrix(), s.matrix());
            prop_assert_eq!(back.partition(), s.partition());
            prop_assert_eq!(back.kappa().to_bits(), s.kappa().to_bits());
        }
    }

    #[test]
    fn header_layout() {
        let spec = EnsembleSpec::new(PortPartition::new(1, 1, 2).unwrap(), 0.5, 1);
        let s = draw_scattering_matrix(&spec).unwrap();
        let mut buf = Vec::new();
        write_mnts(&mut buf, &s).unwrap();
        assert_eq!(&buf[..4], b"MNTS");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[16..20], &2u32.to_le_bytes());
        assert_eq!(&buf[20..28], &0.5f64.to_le_bytes());
        let first = s.matrix()[(0, 0)];
        assert_eq!(&buf[28..36], &first.re.to_le_bytes());
        assert_eq!(&buf[36..44], &first.im.to_le_bytes());
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        assert!(matches!(read_mnts(&b"XXXX\x01\0\0\0"[..]), Err(MntsError::BadMagic(_))));
        assert!(matches!(
            read_mnts(&b"MNTS\x02\0\0\0"[..]),
            Err(MntsError::UnsupportedVersion(2))
        ));
        let spec = EnsembleSpec::new(PortPartition::siso(2).unwrap(), 0.5, 1);
        let mut buf = Vec::new();
        write_mnts(&mut buf, &draw_scattering_matrix(&spec).unwrap()).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_mnts(buf.as_slice()), Err(MntsError::Io(_))));
    }
}

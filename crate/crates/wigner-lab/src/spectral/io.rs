//! Binary cache for eigendecompositions.
//!
//! Layout (all little-endian): magic `WLEV1`, u64 dimension, then the
//! eigenvalues as f64 and the eigenvector matrix row-major as (re, im) f64
//! pairs.

use super::EigenDecomposition;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 5] = b"WLEV1";

pub fn write_decomposition<W: Write>(w: &mut W, d: &EigenDecomposition<f64>) -> Result<()> {
    let n = d.n();
    w.write_all(MAGIC)?;
    w.write_all(&(n as u64).to_le_bytes())?;
    for &mu in &d.eigenvalues {
        w.write_all(&mu.to_le_bytes())?;
    }
    for i in 0..n {
        for z in d.eigenvectors.row(i) {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_decomposition<R: Read>(r: &mut R) -> Result<EigenDecomposition<f64>> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Numeric("bad magic in decomposition dump".into()));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let n = u64::from_le_bytes(buf8) as usize;
    let read_f64 = |r: &mut R| -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let mut eigenvalues = Vec::with_capacity(n);
    for _ in 0..n {
        eigenvalues.push(read_f64(r)?);
    }
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        data.push(Complex64::new(re, im));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: CMatrix::from_rows(n, n, data),
    })
}

pub fn save_decomposition(path: &Path, d: &EigenDecomposition<f64>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_decomposition(&mut f, d)
}

pub fn load_decomposition(path: &Path) -> Result<EigenDecomposition<f64>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_decomposition(&mut f)
}

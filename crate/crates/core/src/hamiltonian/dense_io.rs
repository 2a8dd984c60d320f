use std::io::{Read, Write};

use super::{DenseHamiltonian, HamiltonianError};
use crate::linalg::{CMat, C64};

const MAGIC: &[u8; 4] = b"QPHM";
const VERSION: u32 = 1;

/// Layout (little endian): magic `QPHM`, `u32` version, `u64` dimension, then the
/// matrix row-major as `f64` (re, im) pairs.
pub fn write_dense_binary(h: &DenseHamiltonian, w: &mut impl Write) -> Result<(), HamiltonianError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(h.dim() as u64).to_le_bytes())?;
    let m = h.matrix();
    for i in 0..h.dim() {
        for j in 0..h.dim() {
            w.write_all(&m[(i, j)].re.to_le_bytes())?;
            w.write_all(&m[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dense_binary(r: &mut impl Read) -> Result<DenseHamiltonian, HamiltonianError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(HamiltonianError::Format("missing QPHM magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(HamiltonianError::Format(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let dim = u64::from_le_bytes(b8) as usize;
    if dim == 0 || dim > 1 << 14 {
        return Err(HamiltonianError::Format(format!("dimension {dim} out of range")));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        data.push(C64::new(re, im));
    }
    DenseHamiltonian::new(CMat::from_row_slice(dim, dim, &data), None)
}

/// One matrix row per line; `dim` real columns, or `2·dim` columns of interleaved
/// real and imaginary parts.
pub fn write_dense_csv(h: &DenseHamiltonian) -> String {
    let m = h.matrix();
    let complex = m.iter().any(|x| x.im != 0.0);
    let mut out = String::new();
    for i in 0..h.dim() {
        let cells: Vec<String> = (0..h.dim())
            .flat_map(|j| {
                let x = m[(i, j)];
                if complex {
                    vec![format!("{:.17e}", x.re), format!("{:.17e}", x.im)]
                } else {
                    vec![format!("{:.17e}", x.re)]
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_dense_csv(text: &str) -> Result<DenseHamiltonian, HamiltonianError> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| HamiltonianError::Parse { line: i + 1, reason: format!("bad number {:?}", c.trim()) })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let dim = rows.len();
    if dim == 0 {
        return Err(HamiltonianError::Format("empty matrix".into()));
    }
    let width = rows[0].len();
    let complex = if width == dim {
        false
    } else if width == 2 * dim {
        true
    } else {
        return Err(HamiltonianError::Format(format!("{dim} rows but {width} columns")));
    };
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(HamiltonianError::Parse { line: i + 1, reason: "ragged row".into() });
    }
    let m = CMat::from_fn(dim, dim, |i, j| {
        if complex {
            C64::new(rows[i][2 * j], rows[i][2 * j + 1])
        } else {
            C64::from(rows[i][j])
        }
    });
    DenseHamiltonian::new(m, None)
}

use std::io::{Read, Write};

use super::mps::{CanonicalForm, MpsState, SiteTensor};
use super::sos::{SosJson, SosState};
use super::StatesError;
use crate::linalg::C64;

const MPS_MAGIC: &[u8; 4] = b"QPMS";
const MPS_VERSION: u32 = 1;

pub fn read_sos_json(text: &str) -> Result<SosState, StatesError> {
    let j: SosJson = serde_json::from_str(text)?;
    SosState::try_from(j)
}

pub fn write_sos_json(s: &SosState, pretty: bool) -> Result<String, StatesError> {
    let j = SosJson::from(s);
    Ok(if pretty { serde_json::to_string_pretty(&j)? } else { serde_json::to_string(&j)? })
}

/// Layout (little endian): magic `QPMS`, `u32` version, `u32` site count, `u32` local
/// dimension, `u8` canonical flag, then per site `u32 χ_l, u32 d, u32 χ_r` followed by
/// `χ_l·d·χ_r` pairs of `f64` (re, im) in `(l, n, r)` row-major order.
pub fn write_mps_binary(m: &MpsState, w: &mut impl Write) -> Result<(), StatesError> {
    w.write_all(MPS_MAGIC)?;
    w.write_all(&MPS_VERSION.to_le_bytes())?;
    w.write_all(&(m.n_sites() as u32).to_le_bytes())?;
    w.write_all(&(m.d() as u32).to_le_bytes())?;
    w.write_all(&[u8::from(m.form() == CanonicalForm::Left)])?;
    for s in m.sites() {
        for v in [s.chi_left, s.d, s.chi_right] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        for x in &s.data {
            w.write_all(&x.re.to_le_bytes())?;
            w.write_all(&x.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, StatesError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, StatesError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_mps_binary(r: &mut impl Read) -> Result<MpsState, StatesError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MPS_MAGIC {
        return Err(StatesError::Parse("not an MPS container".into()));
    }
    let version = read_u32(r)?;
    if version != MPS_VERSION {
        return Err(StatesError::Parse(format!("unsupported MPS container version {version}")));
    }
    let n_sites = read_u32(r)? as usize;
    let d = read_u32(r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let mut sites = Vec::with_capacity(n_sites);
    for j in 0..n_sites {
        let chi_left = read_u32(r)? as usize;
        let sd = read_u32(r)? as usize;
        let chi_right = read_u32(r)? as usize;
        if sd != d {
            return Err(StatesError::ShapeMismatch(format!("site {j} local dimension {sd} != {d}")));
        }
        let count = chi_left
            .checked_mul(sd)
            .and_then(|x| x.checked_mul(chi_right))
            .filter(|&c| c <= 1 << 28)
            .ok_or_else(|| StatesError::Parse(format!("site {j} shape too large")))?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            data.push(C64::new(re, im));
        }
        sites.push(SiteTensor { chi_left, d: sd, chi_right, data });
    }
    let m = MpsState::new(sites)?;
    let form = if flag[0] == 1 && m.isometry_residual() < 1e-10 { CanonicalForm::Left } else { CanonicalForm::None };
    Ok(MpsState::from_parts(m.d(), m.sites().to_vec(), form))
}

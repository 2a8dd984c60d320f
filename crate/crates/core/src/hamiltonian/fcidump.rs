use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::HamiltonianError;

/// Molecular integrals in chemist notation, with full permutational symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct FciDump {
    pub n_orb: usize,
    pub n_elec: usize,
    pub ms2: i64,
    pub orbsym: Vec<i64>,
    pub isym: i64,
    pub core_energy: f64,
    one_body: DMatrix<f64>,
    two_body: Vec<f64>,
}

impl FciDump {
    pub fn new(n_orb: usize, n_elec: usize, ms2: i64) -> Self {
        Self {
            n_orb,
            n_elec,
            ms2,
            orbsym: vec![1; n_orb],
            isym: 1,
            core_energy: 0.0,
            one_body: DMatrix::zeros(n_orb, n_orb),
            two_body: vec![0.0; n_orb.pow(4)],
        }
    }

    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n_orb + j) * self.n_orb + k) * self.n_orb + l
    }

    /// `h_pq`, zero-based.
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.one_body[(p, q)]
    }

    /// `(pq|rs)`, zero-based.
    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.two_body[self.idx(p, q, r, s)]
    }

    pub fn one_body(&self) -> &DMatrix<f64> {
        &self.one_body
    }

    pub fn set_h(&mut self, p: usize, q: usize, v: f64) {
        self.one_body[(p, q)] = v;
        self.one_body[(q, p)] = v;
    }

    pub fn set_g(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        for (a, b, c, d) in [
            (i, j, k, l),
            (j, i, k, l),
            (i, j, l, k),
            (j, i, l, k),
            (k, l, i, j),
            (l, k, i, j),
            (k, l, j, i),
            (l, k, j, i),
        ] {
            let x = self.idx(a, b, c, d);
            self.two_body[x] = v;
        }
    }
}

fn parse_value(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse().ok()
}

fn header_map(text: &str, line: usize) -> Result<Vec<(String, Vec<String>)>, HamiltonianError> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for raw in text.split([',', ' ', '\t', '\n', '\r']) {
        let tok = raw.trim();
        if tok.is_empty() {
            continue;
        }
        if let Some((k, v)) = tok.split_once('=') {
            let mut vals = Vec::new();
            if !v.trim().is_empty() {
                vals.push(v.trim().to_string());
            }
            out.push((k.trim().to_ascii_uppercase(), vals));
        } else if let Some(last) = out.last_mut() {
            last.1.push(tok.to_string());
        } else {
            return Err(HamiltonianError::Parse { line, reason: format!("unexpected token {tok:?} in header") });
        }
    }
    Ok(out)
}

/// Parses FCIDUMP text: a `&FCI … &END` namelist (NORB, NELEC, MS2, ORBSYM, ISYM),
/// then lines `value i j k l` with one-based indices.
pub fn parse_fcidump(text: &str) -> Result<FciDump, HamiltonianError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut header = String::new();
    let mut body_start = None;
    let mut started = false;
    for (i, line) in lines.iter().enumerate() {
        let upper = line.to_ascii_uppercase();
        let mut content = upper.trim().to_string();
        if !started {
            if content.is_empty() {
                continue;
            }
            let Some(rest) = content.strip_prefix("&FCI") else {
                return Err(HamiltonianError::Parse { line: i + 1, reason: "expected &FCI header".into() });
            };
            content = rest.to_string();
            started = true;
        }
        let end = ["&END", "$END", "/"].iter().filter_map(|m| content.find(m)).min();
        if let Some(pos) = end {
            header.push_str(&content[..pos]);
            header.push(' ');
            body_start = Some(i + 1);
            break;
        }
        header.push_str(&content);
        header.push(' ');
    }
    let body_start = body_start.ok_or(HamiltonianError::Parse { line: lines.len(), reason: "unterminated header".into() })?;
    let fields = header_map(&header, 1)?;
    let get_int = |key: &str| -> Result<Option<i64>, HamiltonianError> {
        match fields.iter().find(|(k, _)| k == key) {
            None => Ok(None),
            Some((_, v)) => v
                .first()
                .and_then(|s| s.parse::<i64>().ok())
                .map(Some)
                .ok_or_else(|| HamiltonianError::InconsistentHeader(format!("{key} has no integer value"))),
        }
    };
    let n_orb = get_int("NORB")?.ok_or_else(|| HamiltonianError::InconsistentHeader("NORB missing".into()))?;
    if !(1..=64).contains(&n_orb) {
        return Err(HamiltonianError::InconsistentHeader(format!("NORB={n_orb} out of range")));
    }
    let n_elec = get_int("NELEC")?.unwrap_or(0);
    if n_elec < 0 || n_elec > 2 * n_orb {
        return Err(HamiltonianError::InconsistentHeader(format!("NELEC={n_elec} invalid for NORB={n_orb}")));
    }
    let mut fd = FciDump::new(n_orb as usize, n_elec as usize, get_int("MS2")?.unwrap_or(0));
    if let Some((_, vals)) = fields.iter().find(|(k, _)| k == "ORBSYM") {
        fd.orbsym = vals.iter().filter_map(|s| s.parse().ok()).collect();
    }
    fd.isym = get_int("ISYM")?.unwrap_or(1);

    for (offset, line) in lines[body_start..].iter().enumerate() {
        let lineno = body_start + offset + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(HamiltonianError::Parse { line: lineno, reason: format!("expected 5 fields, found {}", toks.len()) });
        }
        let v = parse_value(toks[0])
            .ok_or_else(|| HamiltonianError::Parse { line: lineno, reason: format!("bad value {:?}", toks[0]) })?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
            *slot = tok
                .parse()
                .map_err(|_| HamiltonianError::Parse { line: lineno, reason: format!("bad index {tok:?}") })?;
            if *slot > fd.n_orb {
                return Err(HamiltonianError::InconsistentHeader(format!(
                    "line {lineno}: index {slot} exceeds NORB={}",
                    fd.n_orb
                )));
            }
        }
        match idx {
            [0, 0, 0, 0] => fd.core_energy = v,
            [i, j, 0, 0] if i > 0 && j > 0 => fd.set_h(i - 1, j - 1, v),
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => fd.set_g(i - 1, j - 1, k - 1, l - 1, v),
            _ => {
                return Err(HamiltonianError::Parse { line: lineno, reason: format!("invalid index pattern {idx:?}") });
            }
        }
    }
    Ok(fd)
}

/// Writes unique nonzero integrals with 17 significant digits.
pub fn serialize_fcidump(fd: &FciDump) -> String {
    let mut out = String::new();
    let orbsym: Vec<String> = fd.orbsym.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(out, "&FCI NORB={},NELEC={},MS2={},", fd.n_orb, fd.n_elec, fd.ms2);
    let _ = writeln!(out, " ORBSYM={},", orbsym.join(","));
    let _ = writeln!(out, " ISYM={},", fd.isym);
    let _ = writeln!(out, "&END");
    let n = fd.n_orb;
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if i * (i + 1) / 2 + j < k * (k + 1) / 2 + l {
                        continue;
                    }
                    let v = fd.g(i, j, k, l);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:.16e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = fd.h(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "{v:.16e} {} {} 0 0", i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{:.16e} 0 0 0 0", fd.core_energy);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fortran_exponents_parse() {
        assert_eq!(parse_value("1.5D-01"), Some(0.15));
        assert_eq!(parse_value("-2.0d+00"), Some(-2.0));
    }

    #[test]
    fn multi_line_header() {
        let text = "&FCI NORB=2,\n NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n/\n 0.7 0 0 0 0\n";
        let fd = parse_fcidump(text).unwrap();
        assert_eq!((fd.n_orb, fd.n_elec, fd.ms2), (2, 2, 0));
        assert_eq!(fd.orbsym, vec![1, 1]);
        assert_eq!(fd.core_energy, 0.7);
    }
}

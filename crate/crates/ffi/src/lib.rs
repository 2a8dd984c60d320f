//! C ABI over the `qprep` library.
//!
//! Objects cross the boundary as opaque heap handles created by a
//! `qprep_*_from_*` or producer call and released by the matching
//! `qprep_*_free`. Every fallible call returns a [`QprepStatus`]; on failure
//! [`qprep_last_error`] describes the cause for the calling thread. Strings
//! returned through `char **` are owned by the caller and released with
//! [`qprep_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qprep::encodesim::{simulate_sos_encoding, SimulationBudget};
use qprep::gf2::{compress, SignatureMap};
use qprep::hamiltonian::AffineNormalizer;
use qprep::leakage::{leak_prob_approx, leak_prob_exact, LeakageSetup};
use qprep::qpestats::expected_min;
use qprep::resources::sos_cost_basic;
use qprep::spectra::{Level, SpectralMeasure};
use qprep::states::{read_sos_json, sos_to_mps, write_sos_json, MpsState, SosState, SosToMpsOptions};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QprepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Overflow = 4,
    Panic = 5,
}

/// Sum-of-Slater-determinants state.
pub struct QprepSos(SosState);

/// Matrix product state.
pub struct QprepMps(MpsState);

/// Discrete energy distribution.
pub struct QprepMeasure(SpectralMeasure);

/// Determinant-to-signature compression result.
pub struct QprepSignatureMap(SignatureMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(QprepStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(QprepStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Failure(QprepStatus::InvalidArgument, msg.into())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QprepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QprepStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QprepStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Failure(QprepStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure::invalid("string contains NUL"))?;
    write_out(out, c.into_raw(), "out")
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next `qprep_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qprep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qprep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned through a `char **` out-parameter.
#[no_mangle]
pub unsafe extern "C" fn qprep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses SOS JSON (`{"n_spin_orbitals": n, "terms": [{"re", "im", "occ"}]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_sos_from_json(json: *const c_char, out: *mut *mut QprepSos) -> QprepStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let s = read_sos_json(text).map_err(|e| Failure(QprepStatus::Parse, e.to_string()))?;
        write_out(out, boxed(QprepSos(s)), "out")
    })
}

/// Serializes the state to compact JSON.
///
/// # Safety
/// `sos` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_sos_to_json(sos: *const QprepSos, out: *mut *mut c_char) -> QprepStatus {
    guard(|| {
        let s = as_ref(sos, "sos")?;
        let text = write_sos_json(&s.0, false).map_err(|e| Failure(QprepStatus::Parse, e.to_string()))?;
        write_string(out, text)
    })
}

/// Number of determinants, or 0 for a null handle.
///
/// # Safety
/// `sos` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qprep_sos_len(sos: *const QprepSos) -> usize {
    sos.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `sos` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qprep_sos_free(sos: *mut QprepSos) {
    free(sos)
}

/// Compresses the state's determinants to distinct signatures.
///
/// # Safety
/// `sos` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_compress(sos: *const QprepSos, out: *mut *mut QprepSignatureMap) -> QprepStatus {
    guard(|| {
        let s = as_ref(sos, "sos")?;
        let map = compress(&s.0.occupations()).map_err(|e| Failure::invalid(e.to_string()))?;
        write_out(out, boxed(QprepSignatureMap(map)), "out")
    })
}

/// Bits per signature.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qprep_signature_map_signature_len(map: *const QprepSignatureMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.signature_len())
}

/// Number of signatures (one per determinant).
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qprep_signature_map_count(map: *const QprepSignatureMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.signatures.len())
}

/// Copies signature `index` into `bits` as one byte (0 or 1) per bit.
/// `capacity` must be at least the signature length.
///
/// # Safety
/// `map` must be a live handle; `bits` must hold `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn qprep_signature_map_get(
    map: *const QprepSignatureMap,
    index: usize,
    bits: *mut u8,
    capacity: usize,
) -> QprepStatus {
    guard(|| {
        let m = as_ref(map, "map")?;
        let sig = m.0.signatures.get(index).ok_or_else(|| Failure::invalid(format!("index {index} out of range")))?;
        if bits.is_null() {
            return Err(Failure::null("bits"));
        }
        if capacity < sig.len() {
            return Err(Failure::invalid(format!("capacity {capacity} < signature length {}", sig.len())));
        }
        for j in 0..sig.len() {
            bits.add(j).write(sig.get(j) as u8);
        }
        Ok(())
    })
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qprep_signature_map_free(map: *mut QprepSignatureMap) {
    free(map)
}

/// Simulates the SOS encoding circuit and reports fidelity and leftover ancilla weight.
///
/// # Safety
/// `sos` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_simulate_sos(
    sos: *const QprepSos,
    fidelity: *mut f64,
    ancilla_residual: *mut f64,
) -> QprepStatus {
    guard(|| {
        let s = as_ref(sos, "sos")?;
        let (_, rep) =
            simulate_sos_encoding(&s.0, SimulationBudget::default()).map_err(|e| Failure::invalid(e.to_string()))?;
        write_out(fidelity, rep.fidelity, "fidelity")?;
        write_out(ancilla_residual, rep.ancilla_residual, "ancilla_residual")
    })
}

/// Converts an SOS state to an MPS with bond dimension at most `chi_max`.
/// `fidelity` receives the overlap with the input and may be null.
///
/// # Safety
/// `sos` must be a live handle; `out` must be writable; `fidelity` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_sos_to_mps(
    sos: *const QprepSos,
    local_dim: usize,
    chi_max: usize,
    out: *mut *mut QprepMps,
    fidelity: *mut f64,
) -> QprepStatus {
    guard(|| {
        let s = as_ref(sos, "sos")?;
        let opts = SosToMpsOptions { local_dim, chi_max, ..SosToMpsOptions::default() };
        let (m, f) = sos_to_mps(&s.0, opts).map_err(|e| Failure::invalid(e.to_string()))?;
        if !fidelity.is_null() {
            fidelity.write(f);
        }
        write_out(out, boxed(QprepMps(m)), "out")
    })
}

/// # Safety
/// `mps` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qprep_mps_n_sites(mps: *const QprepMps) -> usize {
    mps.as_ref().map_or(0, |m| m.0.n_sites())
}

/// Largest bond dimension.
///
/// # Safety
/// `mps` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qprep_mps_max_bond(mps: *const QprepMps) -> usize {
    mps.as_ref().map_or(0, |m| m.0.bond_dims().into_iter().max().unwrap_or(1))
}

/// # Safety
/// `mps` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qprep_mps_free(mps: *mut QprepMps) {
    free(mps)
}

/// Builds a measure from `n` (energy, weight) pairs in normalized units.
///
/// # Safety
/// `energies` and `weights` must each hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_measure_from_arrays(
    energies: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut *mut QprepMeasure,
) -> QprepStatus {
    guard(|| {
        if energies.is_null() || weights.is_null() {
            return Err(Failure::null("energies or weights"));
        }
        let e = std::slice::from_raw_parts(energies, n);
        let w = std::slice::from_raw_parts(weights, n);
        let levels = e.iter().zip(w).map(|(&energy, &weight)| Level { energy, weight }).collect();
        let m = SpectralMeasure::new(levels, AffineNormalizer::IDENTITY).map_err(|e| Failure::invalid(e.to_string()))?;
        write_out(out, boxed(QprepMeasure(m)), "out")
    })
}

/// Gaussian discretized into `bins` equal-width bins over ±6σ.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_measure_gaussian(
    mean: f64,
    sigma: f64,
    bins: usize,
    out: *mut *mut QprepMeasure,
) -> QprepStatus {
    guard(|| {
        let m = SpectralMeasure::discretized_gaussian(mean, sigma, bins, 6.0)
            .map_err(|e| Failure::invalid(e.to_string()))?;
        write_out(out, boxed(QprepMeasure(m)), "out")
    })
}

/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qprep_measure_len(m: *const QprepMeasure) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// Mean energy, NaN for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qprep_measure_mean(m: *const QprepMeasure) -> f64 {
    m.as_ref().map_or(f64::NAN, |m| m.0.mean())
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qprep_measure_free(m: *mut QprepMeasure) {
    free(m)
}

/// Expected minimum energy over `reps` independent samples.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_expected_min(m: *const QprepMeasure, reps: u32, out: *mut f64) -> QprepStatus {
    guard(|| {
        let m = as_ref(m, "measure")?;
        let v = expected_min(&m.0, reps).map_err(|e| Failure::invalid(e.to_string()))?;
        write_out(out, v, "out")
    })
}

/// Probability that `k`-digit QPE reports an energy below `e0 - epsilon` from
/// levels above the exclusion threshold: the exact sum and its approximation.
///
/// # Safety
/// `m` must be a live handle; `exact` and `approx` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_leak_prob(
    m: *const QprepMeasure,
    k: u32,
    epsilon: f64,
    e0: f64,
    exact: *mut f64,
    approx: *mut f64,
) -> QprepStatus {
    guard(|| {
        let m = as_ref(m, "measure")?;
        let setup = LeakageSetup::new(k, epsilon, e0).map_err(|e| Failure::invalid(e.to_string()))?;
        write_out(exact, leak_prob_exact(&m.0, &setup), "exact")?;
        write_out(approx, leak_prob_approx(&m.0, &setup), "approx")
    })
}

/// Toffoli count and clean ancillae of the basic SOS encoder for `n` spatial
/// orbitals and `d` determinants.
///
/// # Safety
/// `toffoli` and `clean_qubits` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qprep_sos_cost_basic(
    n: u64,
    d: u64,
    toffoli: *mut u64,
    clean_qubits: *mut u64,
) -> QprepStatus {
    guard(|| {
        let r = sos_cost_basic(n as u128, d as u128);
        let t = u64::try_from(r.toffoli).map_err(|_| Failure(QprepStatus::Overflow, "Toffoli count exceeds 64 bits".into()))?;
        write_out(toffoli, t, "toffoli")?;
        write_out(clean_qubits, r.clean_qubits as u64, "clean_qubits")
    })
}

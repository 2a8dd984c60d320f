use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use qprep_ffi::*;

const THREE_DETS: &str = r#"{"n_spin_orbitals":6,"terms":[
    {"re":0.9,"occ":"110000"},{"re":0.3,"occ":"001100"},{"re":-0.2,"im":0.1,"occ":"000011"}]}"#;

fn last_error() -> String {
    let p = qprep_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(json: &str) -> *mut QprepSos {
    let text = CString::new(json).unwrap();
    let mut sos = ptr::null_mut();
    assert_eq!(unsafe { qprep_sos_from_json(text.as_ptr(), &mut sos) }, QprepStatus::Ok);
    sos
}

#[test]
fn sos_round_trip_through_json() {
    let sos = load(THREE_DETS);
    assert_eq!(unsafe { qprep_sos_len(sos) }, 3);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { qprep_sos_to_json(sos, &mut out) }, QprepStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { qprep_string_free(out) };
    let again = load(&text);
    assert_eq!(unsafe { qprep_sos_len(again) }, 3);
    unsafe {
        qprep_sos_free(sos);
        qprep_sos_free(again);
    }
}

#[test]
fn malformed_json_sets_parse_status_and_message() {
    let text = CString::new("{not json").unwrap();
    let mut sos = ptr::null_mut();
    assert_eq!(unsafe { qprep_sos_from_json(text.as_ptr(), &mut sos) }, QprepStatus::Parse);
    assert!(sos.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut sos = ptr::null_mut();
    assert_eq!(unsafe { qprep_sos_from_json(ptr::null(), &mut sos) }, QprepStatus::NullPointer);
    assert!(last_error().contains("json"));
    assert_eq!(unsafe { qprep_sos_len(ptr::null()) }, 0);
    let (mut f, mut r) = (0.0, 0.0);
    assert_eq!(unsafe { qprep_simulate_sos(ptr::null(), &mut f, &mut r) }, QprepStatus::NullPointer);
    unsafe {
        qprep_sos_free(ptr::null_mut());
        qprep_measure_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_the_error() {
    let mut sos = ptr::null_mut();
    let _ = unsafe { qprep_sos_from_json(ptr::null(), &mut sos) };
    let sos = load(THREE_DETS);
    assert!(qprep_last_error().is_null());
    unsafe { qprep_sos_free(sos) };
}

#[test]
fn signatures_are_distinct() {
    let sos = load(THREE_DETS);
    let mut map = ptr::null_mut();
    assert_eq!(unsafe { qprep_compress(sos, &mut map) }, QprepStatus::Ok);
    let len = unsafe { qprep_signature_map_signature_len(map) };
    let count = unsafe { qprep_signature_map_count(map) };
    assert_eq!((len, count), (3, 3));
    let mut sigs = Vec::new();
    for i in 0..count {
        let mut bits = vec![0u8; len];
        assert_eq!(unsafe { qprep_signature_map_get(map, i, bits.as_mut_ptr(), len) }, QprepStatus::Ok);
        assert!(bits.iter().all(|&b| b <= 1));
        sigs.push(bits);
    }
    sigs.sort();
    sigs.dedup();
    assert_eq!(sigs.len(), 3);
    let mut small = [0u8; 1];
    assert_eq!(unsafe { qprep_signature_map_get(map, 0, small.as_mut_ptr(), 1) }, QprepStatus::InvalidArgument);
    assert_eq!(unsafe { qprep_signature_map_get(map, 9, small.as_mut_ptr(), 3) }, QprepStatus::InvalidArgument);
    unsafe {
        qprep_signature_map_free(map);
        qprep_sos_free(sos);
    }
}

#[test]
fn encoding_and_mps_conversion_are_exact() {
    let sos = load(THREE_DETS);
    let (mut fid, mut res) = (0.0, 1.0);
    assert_eq!(unsafe { qprep_simulate_sos(sos, &mut fid, &mut res) }, QprepStatus::Ok);
    assert!((fid - 1.0).abs() < 1e-12 && res < 1e-12);
    let mut mps = ptr::null_mut();
    let mut fid = 0.0;
    assert_eq!(unsafe { qprep_sos_to_mps(sos, 4, 16, &mut mps, &mut fid) }, QprepStatus::Ok);
    assert!((fid - 1.0).abs() < 1e-10);
    assert_eq!(unsafe { qprep_mps_n_sites(mps) }, 3);
    assert!(unsafe { qprep_mps_max_bond(mps) } <= 3);
    assert_eq!(unsafe { qprep_sos_to_mps(sos, 3, 16, &mut mps, ptr::null_mut()) }, QprepStatus::InvalidArgument);
    unsafe {
        qprep_mps_free(mps);
        qprep_sos_free(sos);
    }
}

#[test]
fn measure_statistics() {
    let e = [0.1, 0.4, 0.7];
    let w = [0.5, 0.3, 0.2];
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qprep_measure_from_arrays(e.as_ptr(), w.as_ptr(), 3, &mut m) }, QprepStatus::Ok);
    assert_eq!(unsafe { qprep_measure_len(m) }, 3);
    assert!((unsafe { qprep_measure_mean(m) } - 0.31).abs() < 1e-12);
    // min of two draws: P(min = E_n) = S_n² − S_{n+1}² with S_n the upper tail mass.
    let oracle = 0.1 * (1.0 - 0.25) + 0.4 * (0.25 - 0.04) + 0.7 * 0.04;
    let mut v = 0.0;
    assert_eq!(unsafe { qprep_expected_min(m, 2, &mut v) }, QprepStatus::Ok);
    assert!((v - oracle).abs() < 1e-12);
    let (mut exact, mut approx) = (-1.0, -1.0);
    assert_eq!(unsafe { qprep_leak_prob(m, 8, 1.0 / 64.0, 0.1, &mut exact, &mut approx) }, QprepStatus::Ok);
    assert!(exact > 0.0 && exact < 0.5 && approx > 0.0);
    unsafe { qprep_measure_free(m) };

    let bad = [-1.0, 2.0, 0.0];
    let mut m2 = ptr::null_mut();
    assert_eq!(unsafe { qprep_measure_from_arrays(e.as_ptr(), bad.as_ptr(), 3, &mut m2) }, QprepStatus::InvalidArgument);
}

#[test]
fn gaussian_measure_mean() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qprep_measure_gaussian(0.3, 0.05, 1024, &mut m) }, QprepStatus::Ok);
    assert!((unsafe { qprep_measure_mean(m) } - 0.3).abs() < 1e-9);
    unsafe { qprep_measure_free(m) };
    assert_eq!(unsafe { qprep_measure_gaussian(0.3, -1.0, 1024, &mut m) }, QprepStatus::InvalidArgument);
}

#[test]
fn basic_cost_and_overflow() {
    let (mut t, mut c) = (0u64, 0u64);
    assert_eq!(unsafe { qprep_sos_cost_basic(1, 1024, &mut t, &mut c) }, QprepStatus::Ok);
    assert_eq!((t, c), (23552, 47));
    assert_eq!(unsafe { qprep_sos_cost_basic(1, u64::MAX, &mut t, &mut c) }, QprepStatus::Overflow);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qprep_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_is_valid_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/qprep.h");
    let text = std::fs::read_to_string(&header).expect("build script writes the header");
    for name in ["qprep_sos_from_json", "qprep_compress", "qprep_leak_prob", "QPREP_STATUS_PANIC", "typedef struct QprepSos"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler found; syntax check skipped");
        return;
    };
    let src = std::env::temp_dir().join(format!("qprep_header_check_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"qprep.h\"\nint main(void) { QprepSos *s = 0; size_t n = qprep_sos_len(s); (void)n; return QPREP_STATUS_OK; }\n",
    )
    .unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
        .unwrap();
    let _ = std::fs::remove_file(&src);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

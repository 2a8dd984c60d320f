use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qprep::hamiltonian::AffineNormalizer;
use qprep::linalg::C64;
use qprep::spectra::SpectralMeasure;
use qprep::states::{h6_three_determinant_state, write_sos_json, SosState};
use serde_json::Value;
use tempfile::TempDir;

fn qprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qprep")).args(args).env_remove("QPREP_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by a signal")
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn measure_file(dir: &TempDir, name: &str, pairs: &[(f64, f64)]) -> PathBuf {
    let m = SpectralMeasure::from_weights(pairs, AffineNormalizer::IDENTITY).unwrap();
    write(dir, name, &serde_json::to_string(&m).unwrap())
}

/// Two orbitals, two electrons, diagonal one-body terms only: every determinant
/// energy is a sum of occupied orbital energies plus the core term.
const DIAGONAL_FCIDUMP: &str = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n -1.0 1 1 0 0\n 0.5 2 2 0 0\n 0.3 0 0 0 0\n";

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&qprep(&[])), 1);
    assert_eq!(code(&qprep(&["no-such-command"])), 1);
    assert_eq!(code(&qprep(&["estimate-cost", "--bogus"])), 1);
    assert_eq!(code(&qprep(&["compress"])), 1);
    let both = qprep(&["qpe-stats", "--gaussian", "0.5,0.1", "--measure", "m.json"]);
    assert_eq!(code(&both), 1);
    assert!(!both.stderr.is_empty());
}

#[test]
fn help_and_version_exit_zero() {
    let h = qprep(&["--help"]);
    assert_eq!(code(&h), 0);
    let text = String::from_utf8_lossy(&h.stdout);
    for sub in ["compress", "estimate-cost", "ham", "convert", "simulate-encode", "energy-dist", "qpe-stats", "goldilocks", "leakage", "refine", "reproduce"] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
    assert_eq!(code(&qprep(&["--version"])), 0);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&qprep(&["compress", "--bits", "/nonexistent/dets.txt"])), 2);
    let bad_bits = write(&dir, "dets.txt", "0101\n01x1\n");
    assert_eq!(code(&qprep(&["compress", "--bits", path_str(&bad_bits)])), 2);
    let bad_fcidump = write(&dir, "bad.fcidump", "&FCI NORB=2,NELEC=2,\n&END\n nonsense 1 1 0 0\n");
    let out = dir.path().join("h.bin");
    let o = qprep(&["ham", "build", "--fcidump", path_str(&bad_fcidump), "--na", "1", "--nb", "1", "--out", path_str(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(code(&qprep(&["estimate-cost", "--d-min", "64", "--d-max", "8"])), 2);
    let bad_measure = measure_file(&dir, "m.json", &[(0.2, 1.0)]);
    fs::write(&bad_measure, "{\"levels\": [}").unwrap();
    assert_eq!(code(&qprep(&["qpe-stats", "--measure", path_str(&bad_measure)])), 2);
}

#[test]
fn numerical_failures_exit_three() {
    let dir = TempDir::new().unwrap();
    let point = measure_file(&dir, "point.json", &[(0.4, 1.0)]);
    let o = qprep(&["energy-dist", "--method", "series", "--measure", path_str(&point)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn estimate_cost_csv_layout() {
    let o = qprep(&["estimate-cost", "--kind", "sos", "--n", "20", "--d-min", "3", "--d-max", "64"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("param,method,toffoli,clean_qubits,dirty_qubits"));
    let mut params = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 5, "{line}");
        for c in [cells[0], cells[2], cells[3], cells[4]] {
            c.parse::<u128>().unwrap();
        }
        params.push(cells[0].parse::<u128>().unwrap());
    }
    params.dedup();
    assert_eq!(params, vec![4, 8, 16, 32, 64]);

    let mps = qprep(&["estimate-cost", "--kind", "mps", "--sites", "6", "--chi-min", "1", "--chi-max", "16"]);
    let text = String::from_utf8(mps.stdout).unwrap();
    assert!(text.starts_with("param,method,toffoli,clean_qubits,dirty_qubits\n"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let run = |seed: &str| {
        let o = qprep(&["--seed", seed, "energy-dist", "--method", "cqpe", "--gaussian", "0.5,0.08", "--k", "5", "--shots", "300", "--points", "64"]);
        assert_eq!(code(&o), 0);
        o.stdout
    };
    let a = run("7");
    assert_eq!(a, run("7"));
    assert_ne!(a, run("8"));
    assert!(a.starts_with(b"E,P\n"));
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        let o = qprep(&["--threads", threads, "qpe-stats", "--gaussian", "0.4,0.05", "--k", "7", "--outcomes"]);
        assert_eq!(code(&o), 0);
        o.stdout
    };
    assert_eq!(run("1"), run("3"));
    assert_eq!(code(&qprep(&["--threads", "0", "qpe-stats", "--gaussian", "0.4,0.05"])), 1);
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = TempDir::new().unwrap();
    let m = measure_file(&dir, "m.json", &[(0.1, 0.3), (0.55, 0.7)]);
    let cfg = write(&dir, "run.conf", &format!("# qpe settings\n\nk = 3\nmeasure = {}\nreps = 2,4\n", m.display()));
    let from_cfg = stdout_json(&qprep(&["--config", path_str(&cfg), "qpe-stats"]));
    let explicit = stdout_json(&qprep(&["qpe-stats", "--measure", path_str(&m), "--k", "3", "--reps", "2,4"]));
    assert_eq!(from_cfg, explicit);
    assert_eq!(from_cfg["k"], 3);
    let overridden = stdout_json(&qprep(&["--config", path_str(&cfg), "qpe-stats", "--k", "5"]));
    assert_eq!(overridden["k"], 5);

    let broken = write(&dir, "broken.conf", "k 3\n");
    assert_eq!(code(&qprep(&["--config", path_str(&broken), "qpe-stats"])), 2);
    assert_eq!(code(&qprep(&["--config", "/nonexistent.conf", "qpe-stats"])), 2);
}

#[test]
fn ham_build_and_info_report_the_diagonal_spectrum() {
    let dir = TempDir::new().unwrap();
    let fcidump = write(&dir, "h2.fcidump", DIAGONAL_FCIDUMP);
    let orbital = [-1.0, 0.5];
    let energies: Vec<f64> = (0..2).flat_map(|a| (0..2).map(move |b| orbital[a] + orbital[b] + 0.3)).collect();
    let lo = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for name in ["h.bin", "h.csv"] {
        let out = dir.path().join(name);
        let built = stdout_json(&qprep(&["ham", "build", "--fcidump", path_str(&fcidump), "--na", "1", "--nb", "1", "--out", path_str(&out)]));
        assert_eq!(built["dim"], 4);
        assert!((built["e_min"].as_f64().unwrap() - lo).abs() < 1e-12);
        let info = stdout_json(&qprep(&["ham", "info", "--ham", path_str(&out)]));
        assert_eq!(info["dim"], 4);
        assert!((info["e_min"].as_f64().unwrap() - lo).abs() < 1e-12);
        assert!((info["e_max"].as_f64().unwrap() - hi).abs() < 1e-12);
    }
    let o = qprep(&["ham", "build", "--fcidump", path_str(&fcidump), "--na", "1", "--nb", "1", "--cap", "2", "--out", path_str(&dir.path().join("x.bin"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn diagonal_hamiltonian_state_gives_exact_measure() {
    let dir = TempDir::new().unwrap();
    let fcidump = write(&dir, "h2.fcidump", DIAGONAL_FCIDUMP);
    // Ground determinant |1α 1β⟩ and the doubly excited |2α 2β⟩ in equal weight.
    let s = SosState::from_bit_strings(&[(C64::new(1.0, 0.0), "1100"), (C64::new(0.0, 1.0), "0011")]).unwrap().normalized().unwrap();
    let state = write(&dir, "s.json", &write_sos_json(&s, false).unwrap());
    let o = qprep(&["qpe-stats", "--fcidump", path_str(&fcidump), "--state", path_str(&state), "--k", "4", "--reps", "1"]);
    let v = stdout_json(&o);
    // Distinct eigenvalues −1.7, −0.2 and 1.3; the middle one carries no weight.
    assert_eq!(v["levels"], 3);
    // The two energies −1.7 and 1.3 map onto the margins 0.05 and 0.95.
    assert!((v["mean"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["min_of_k"][0]["expected_min_energy"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let missing_state = qprep(&["qpe-stats", "--fcidump", path_str(&fcidump)]);
    assert_eq!(code(&missing_state), 1);
}

#[test]
fn convert_round_trip_and_encode_simulation() {
    let dir = TempDir::new().unwrap();
    let h6 = h6_three_determinant_state();
    let sos = write(&dir, "h6.json", &write_sos_json(&h6, false).unwrap());
    let mps = dir.path().join("h6.mps");
    let back = dir.path().join("back.json");
    let to_mps = stdout_json(&qprep(&["convert", "--input", path_str(&sos), "--output", path_str(&mps)]));
    assert!((to_mps["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let to_sos = stdout_json(&qprep(&["convert", "--input", path_str(&mps), "--output", path_str(&back)]));
    assert_eq!(to_sos["terms"], 3);
    let text = fs::read_to_string(&back).unwrap();
    let recovered = qprep::states::read_sos_json(&text).unwrap();
    for t in h6.terms() {
        assert!((recovered.amplitude(&t.occ) - t.amp).norm() < 1e-12);
    }
    assert_eq!(code(&qprep(&["convert", "--input", path_str(&sos), "--output", path_str(&back)])), 1);

    let report = dir.path().join("report.json");
    let o = qprep(&["simulate-encode", "--sos", path_str(&sos), "--report", path_str(&report)]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["circuit"], "sos");
    assert!((v["report"]["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    for flag in [&[][..], &["--householder"][..]] {
        let mut args = vec!["simulate-encode", "--mps", path_str(&mps)];
        args.extend_from_slice(flag);
        let v = stdout_json(&qprep(&args));
        assert!((v["report"]["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn compress_reports_distinct_signatures() {
    let dir = TempDir::new().unwrap();
    let bits = write(&dir, "dets.txt", "110000\n001100\n\n000011\n101000\n");
    let v = stdout_json(&qprep(&["compress", "--bits", path_str(&bits)]));
    let sigs: Vec<String> = v["signature_map"]["signatures"]
        .as_array()
        .map(|a| a.iter().map(|s| s.to_string()).collect())
        .unwrap_or_default();
    let mut unique = sigs.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), sigs.len());
    assert!(v["stats"].is_object());
}

#[test]
fn refine_and_goldilocks_reports() {
    let dir = TempDir::new().unwrap();
    let m = measure_file(&dir, "m.json", &[(0.0, 0.5), (0.5, 0.5)]);
    let post = dir.path().join("post.json");
    let v = stdout_json(&qprep(&["refine", "cqpe", "--measure", path_str(&m), "--k", "1", "--accept", "0", "--e0", "0.25", "--posterior-out", path_str(&post)]));
    // One digit resolves E = 0 and E = 1/2 exactly.
    assert!((v["success_prob"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["p_below_e0_after"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let posterior: SpectralMeasure = serde_json::from_str(&fs::read_to_string(&post).unwrap()).unwrap();
    assert!((posterior.mean()).abs() < 1e-12);

    let q = stdout_json(&qprep(&["refine", "qetu", "--gaussian", "0.3,0.05", "--el", "0.1", "--eu", "0.25", "--degree", "120"]));
    let p = q["success_prob"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
    assert!(q["mean_after"].as_f64().unwrap() < q["mean_before"].as_f64().unwrap());

    let g = stdout_json(&qprep(&["goldilocks", "--measure", path_str(&m), "--et", "0.1", "--budget", "4"]));
    assert!(g["class"].is_string());
}

#[test]
fn leakage_report_fields() {
    let v = stdout_json(&qprep(&["leakage", "--gaussian", "0.5,0.05", "--k", "8", "--epsilon", "0.0039", "--e0", "0.3"]));
    for key in ["exact", "approx", "integral", "diagnosis"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    let exact = v["exact"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&exact));
}

#[test]
fn pretty_csv_is_aligned() {
    let o = qprep(&["--pretty", "estimate-cost", "--d-min", "2", "--d-max", "8"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let widths: Vec<usize> = text.lines().map(str::len).collect();
    assert!(widths.windows(2).all(|w| w[0] == w[1]), "{text}");
    assert!(!text.contains(','));
}

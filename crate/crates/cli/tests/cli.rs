use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn surfloss(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfloss")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = surfloss(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn bundled_t1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_t1.csv")
}

#[test]
fn reference_participation_is_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["participation", "--builtin", "regular", "--reference"]);
    let rows = data_rows(&dir.path().join("participation.csv"));
    let find = |e: &str, k: &str| rows.iter().find(|r| r[1] == e && r[2] == k).map(|r| r[3].clone()).unwrap();
    assert_eq!(find("pads", "MS"), "7.033e-5");
    assert_eq!(find("leads", "SA"), "5.078e-5");
    assert_eq!(find("SQUID", "total"), "6.937e-5");
    assert!(rows.iter().all(|r| r[4] == "reference-table"));
}

#[test]
fn bundled_maps_reproduce_the_reference_totals() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["participation"]);
    let rows = data_rows(&dir.path().join("participation.csv"));
    let total = |d: &str, e: &str| rows.iter().find(|r| r[0] == d && r[1] == e && r[2] == "total").unwrap()[3].parse::<f64>().unwrap();
    assert!((total("long", "leads") / 3.312e-4 - 1.0).abs() < 1e-3);
    assert!((total("wide", "pads") / 2.086e-4 - 1.0).abs() < 1e-3);
    assert!(rows.iter().all(|r| r[4] == "imported-field"));
}

#[test]
fn missing_design_file_exits_2_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = surfloss(dir.path(), &["participation", "--design", "/nonexistent/q.design"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/q.design"));
}

#[test]
fn zero_trials_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&surfloss(dir.path(), &["tls-sim", "--trials", "0"])), 2);
}

#[test]
fn tls_sim_is_byte_identical_per_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--seed", "5", "tls-sim", "--designs", "regular", "--trials", "2"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    for f in ["spectrum_regular.csv", "medians.csv", "histogram.svg"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn tls_sim_medians_follow_lead_participation() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["tls-sim"]);
    let rows = data_rows(&dir.path().join("medians.csv"));
    let labels: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["long", "regular", "wide"]);
    let m: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(m[0] < m[1] && m[1] < m[2], "{m:?}");
}

/// Participation CSV of the published table and Q statistics predicted
/// from its totals and the etch tangents.
fn synthetic_extraction_inputs(dir: &Path, std_rel: f64) -> (PathBuf, PathBuf) {
    let ref_dir = dir.join("ref");
    ok(&ref_dir, &["participation", "--reference"]);
    let rows = data_rows(&ref_dir.join("participation.csv"));
    let t = [("pads", 11.3e-4), ("leads", 7.9e-4), ("SQUID", 4.0e-4)];
    let mut q = String::from("label,median,std,count\n");
    for label in ["long", "regular", "wide"] {
        let loss: f64 = t
            .iter()
            .map(|(e, v)| v * rows.iter().find(|r| r[0] == label && r[1] == *e && r[2] == "total").unwrap()[3].parse::<f64>().unwrap())
            .sum();
        q.push_str(&format!("{label},{:e},{:e},1\n", 1.0 / loss, std_rel / loss));
    }
    let qs = dir.join("qstats.csv");
    std::fs::write(&qs, q).unwrap();
    (ref_dir.join("participation.csv"), qs)
}

#[test]
fn noiseless_extraction_recovers_tangents() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = synthetic_extraction_inputs(dir.path(), 0.0);
    let out = dir.path().join("x");
    let stdout = ok(&out, &["extract", "--participation", p.to_str().unwrap(), "--qstats", q.to_str().unwrap(), "--process", "etch", "--n-samples", "10"]);
    assert!(stdout.contains("condition number"));
    let rows = data_rows(&out.join("estimates.csv"));
    for (r, t) in rows.iter().zip([11.3e-4, 7.9e-4, 4.0e-4]) {
        assert!((r[1].parse::<f64>().unwrap() / t - 1.0).abs() < 1e-9, "{r:?}");
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[3], "etch");
    }
}

#[test]
fn mismatched_labels_exit_3_with_diff() {
    let dir = tempfile::tempdir().unwrap();
    let (p, _) = synthetic_extraction_inputs(dir.path(), 0.1);
    let q = dir.path().join("bad.csv");
    std::fs::write(&q, "label,median,std\nlong,2e6,1e5\nregular,3e6,1e5\nnarrow,3e6,1e5\n").unwrap();
    let o = surfloss(&dir.path().join("x"), &["extract", "--participation", p.to_str().unwrap(), "--qstats", q.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("[wide]") && err.contains("[narrow]"), "{err}");
}

#[test]
fn singular_participation_exits_4_with_condition_number() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    std::fs::write(&p, "design,element,interface,p\nA,pads,total,1e-4\nA,leads,total,2e-4\nB,pads,total,2e-4\nB,leads,total,4e-4\n").unwrap();
    let q = dir.path().join("q.csv");
    std::fs::write(&q, "label,median,std\nA,2e6,1e5\nB,1e6,1e5\n").unwrap();
    let o = surfloss(dir.path(), &["extract", "--participation", p.to_str().unwrap(), "--qstats", q.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("condition number"));
}

#[test]
fn reference_prediction_reproduces_six_qubits() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["predict", "--reference"]);
    let rows = data_rows(&dir.path().join("prediction.csv"));
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let (p, m): (f64, f64) = (r[3].parse().unwrap(), r[5].parse().unwrap());
        assert!((p / m - 1.0).abs() <= 0.15, "{r:?}");
    }
    assert!(std::fs::read_to_string(dir.path().join("prediction.svg")).unwrap().contains("<svg"));
}

#[test]
fn predict_from_files_matches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let (p, _) = synthetic_extraction_inputs(dir.path(), 0.0);
    let e = dir.path().join("e.csv");
    std::fs::write(&e, "element,tan_delta,ci68_halfwidth,process\npads,11.3e-4,3.4e-4,etch\nleads,7.9e-4,3.8e-4,etch\nSQUID,4.0e-4,1.7e-4,etch\n").unwrap();
    let m = dir.path().join("m.csv");
    std::fs::write(&m, "qubit,design,process,median,std\nQ4,regular,etch,2.76e6,0\n").unwrap();
    let out = dir.path().join("x");
    ok(&out, &["predict", "--participation", p.to_str().unwrap(), "--estimates", e.to_str().unwrap(), "--measured", m.to_str().unwrap()]);
    let rows = data_rows(&out.join("prediction.csv"));
    assert!((rows[0][3].parse::<f64>().unwrap() / 2.90e6 - 1.0).abs() < 5e-3, "{rows:?}");
}

#[test]
fn spectrum_pipeline_on_bundled_t1_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["spectrum", "fit", "--input", bundled_t1().to_str().unwrap()]);
    let rows = data_rows(&d.join("spectrum.csv"));
    assert_eq!(rows.len(), 101);
    // generator: 1/Q = 1/2.5e6 + Lorentzian(4.55 GHz, FWHM 8 MHz, 4e-7)
    for r in &rows {
        let f: f64 = r[0].parse().unwrap();
        let h = 4e-3;
        let truth = 1.0 / (1.0 / 2.5e6 + 4e-7 * h * h / ((f - 4.55f64).powi(2) + h * h));
        let (q, rel): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(rel > 0.0 && rel < 0.05, "{r:?}");
        assert!((q / truth - 1.0).abs() < 4.0 * rel, "{r:?}");
    }
    let stdout = ok(d, &["spectrum", "mask", "--input", d.join("spectrum.csv").to_str().unwrap()]);
    let f0: f64 = stdout.strip_prefix("dip at ").and_then(|r| r.split(' ').next()).and_then(|v| v.parse().ok()).expect("one dip");
    assert!((f0 - 4.55).abs() < 1e-3, "{stdout}");
    let masked = data_rows(&d.join("masked.csv"));
    for r in &masked {
        let f: f64 = r[0].parse().unwrap();
        if (f - 4.55).abs() > 0.012 {
            assert_eq!(r[3], "kept", "{r:?}");
        }
        if (f - 4.55).abs() < 0.003 {
            assert_eq!(r[3], "parasitic", "{r:?}");
        }
    }
    let stdout = ok(d, &["spectrum", "stats", "--input", d.join("masked.csv").to_str().unwrap(), "--label", "syn"]);
    assert!(stdout.starts_with("syn: median Q"));
    let st = data_rows(&d.join("qstats.csv"));
    assert!((st[0][1].parse::<f64>().unwrap() / 2.5e6 - 1.0).abs() < 0.05);
}

#[test]
fn stats_on_fully_masked_spectrum_fails() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    let body: String = (0..20).map(|i| format!("{},3e6,0.01,parasitic\n", 4.5 + 0.001 * i as f64)).collect();
    std::fs::write(&s, format!("f_GHz,Q,rel_err,mask\n{body}")).unwrap();
    let o = surfloss(dir.path(), &["spectrum", "stats", "--input", s.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(!dir.path().join("qstats.csv").exists());
}

#[test]
fn malformed_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    std::fs::write(&s, "frequency,quality\n4.5,3e6\n").unwrap();
    assert_eq!(code(&surfloss(dir.path(), &["spectrum", "mask", "--input", s.to_str().unwrap()])), 3);
}

#[test]
fn gap_sweep_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--resolution", "coarse", "participation", "--builtin", "regular", "--sweep", "gap", "60:160:100"]);
    let rows = data_rows(&dir.path().join("sweep_gap.csv"));
    assert_eq!(rows.len(), 2);
    let pads: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let wiring: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(pads[1] < pads[0] && wiring[1] > wiring[0]);
    assert!(dir.path().join("sweep_gap.svg").exists());
}

#[test]
fn every_artifact_carries_the_header() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--seed", "17", "report", "--trials", "2", "--n-samples", "200"]);
    let mut n = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let head: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(head.contains(concat!("surfloss ", env!("CARGO_PKG_VERSION"))), "{}", path.display());
        assert!(head.contains("command: surfloss --seed 17 report --trials 2 --n-samples 200"), "{}: {head}", path.display());
        assert!(head.contains("seed: 17"), "{}", path.display());
        n += 1;
    }
    assert!(n >= 6, "{n} artifacts");
}

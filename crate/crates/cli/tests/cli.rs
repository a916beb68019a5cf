use std::path::Path;
use std::process::{Command, Output};

fn tsa_sim(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tsa-sim"));
    cmd.args(args).env_remove("TSA_SIM_WORKERS");
    if let Some(w) = workers {
        cmd.env("TSA_SIM_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "n = 32\nlist_size = 2\nprofile_samples = 400\nblocks_per_stream = 4\nframes = 24\nbackoff = [0.2, 0.5]\n";

#[test]
fn zero_frames_prints_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "frames = 0\n");
    let out = tsa_sim(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "backoff_bpcu,r1,r2,frames,errors,fer,ci_lo,ci_hi,scheme,n,alpha,L\n");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["frame = 10\n", "n = 12\n", "experiment = \"nope\"\n"] {
        let cfg = write(dir.path(), "bad.toml", text);
        assert_eq!(tsa_sim(&["run", &cfg], None).status.code(), Some(2), "{text}");
    }
    let missing = dir.path().join("missing.toml");
    assert_eq!(tsa_sim(&["run", missing.to_str().unwrap()], None).status.code(), Some(2));
    let cfg = write(dir.path(), "ok.toml", "frames = 0\n");
    assert_eq!(tsa_sim(&["run", &cfg], Some("zero")).status.code(), Some(2));
}

#[test]
fn all_points_infeasible_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "noisy.toml",
        "joint = [[0.25, 0.25], [0.25, 0.25]]\nsymbol_map = [[0, 1], [2, 3]]\ny1_size = 2\ny2_size = 2\n\
         law = [[0.81, 0.09, 0.09, 0.01], [0.09, 0.81, 0.01, 0.09], [0.09, 0.01, 0.81, 0.09], [0.01, 0.09, 0.09, 0.81]]\n",
    );
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}channel = \"noisy.toml\"\nrx_cutoff = 0.0\n"));
    let out = tsa_sim(&["run", &cfg], None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn region_matches_sum_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let ch = write(dir.path(), "bw.toml", "preset = \"blackwell\"\n");
    let out = tsa_sim(&["region", &ch, "--points", "5"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,r1,r2"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!((r[1] + r[2] - 3f64.log2()).abs() < 1e-9, "{r:?}");
    }
    assert!((rows[0][1] - 0.918296).abs() < 1e-6 && (rows[0][2] - 2.0 / 3.0).abs() < 1e-6);
}

#[test]
fn profile_writes_csv_and_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}code_output = \"{}\"\n", dir.path().join("code.toml").display()));
    let out = tsa_sim(&["profile", &cfg], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("index,h_state,h_rx,z_state,z_rx\n"));
    assert_eq!(text.lines().count(), 33);
    let code = std::fs::read_to_string(dir.path().join("code.toml")).unwrap();
    assert!(code.contains("data"));
}

#[test]
fn output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SMALL}experiment = [\"tsa\", \"time-sharing\", \"corner\"]\ninterleaver = \"random\"\n");
    let cfg = write(dir.path(), "c.toml", &body);
    let one = tsa_sim(&["run", &cfg], Some("1"));
    let four = tsa_sim(&["run", &cfg], Some("4"));
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout.iter().filter(|&&b| b == b'\n').count(), 7);
    assert_eq!(one.stdout, four.stdout);
}

use tsa_core::channel::{blackwell_optimal_structure, GlitchMap};
use tsa_core::polar::{CodeRules, PolarTransform};
use tsa_core::rng::stream_rng;
use tsa_core::scheme::{build_layout, encode_stream, tsa_stream, CodeBuilder, Interleaver, StreamMessages, TsaSchedule};
use tsa_core::sim::{parse_csv, run_with_workers, ExperimentKind, Experiments, SimConfig, SimOutput};

fn glitch_rate(n: usize, blocks: usize, backoff: f64) -> f64 {
    let s = blackwell_optimal_structure::<f64>(GlitchMap::ToTwo);
    let mut b = CodeBuilder::new(s, PolarTransform::butterfly_first(n).unwrap(), 2000, 7, CodeRules::default(), 0.01);
    let sched = TsaSchedule::new(n, n / 2, blocks, Interleaver::Identity).unwrap();
    let k = ((n as f64) * (3f64.log2() - backoff) / 2.0).floor() as usize;
    let codes = b.tsa(&sched, k, k).unwrap();
    let msgs = StreamMessages::random(k, k, blocks, &mut stream_rng(8, &[n as u64]));
    let enc = encode_stream(&msgs, &build_layout(&sched), &codes, b.structure()).unwrap();
    enc.glitches as f64 / enc.x.len() as f64
}

#[test]
fn glitches_thin_out_with_block_length() {
    // same number of channel uses at both lengths
    let short = glitch_rate(256, 128, 0.05);
    let long = glitch_rate(2048, 16, 0.05);
    assert!(short > 0.0 && long < short, "n=256: {short}, n=2048: {long}");
}

#[test]
fn random_interleaver_streams_decode() {
    let n = 256;
    let s = blackwell_optimal_structure::<f64>(GlitchMap::ToTwo);
    let mut b = CodeBuilder::new(s, PolarTransform::butterfly_first(n).unwrap(), 2000, 3, CodeRules::default(), 0.01);
    let sched = TsaSchedule::new(n, n / 2, 10, Interleaver::Random { seed: 5 }).unwrap();
    let codes = b.tsa(&sched, 64, 64).unwrap();
    let mut rng = stream_rng(6, &[]);
    let msgs = StreamMessages::random(64, 64, 10, &mut rng);
    let (_, r) = tsa_stream(&msgs, &build_layout(&sched), &codes, b.structure(), 4, &mut rng).unwrap();
    // far below the rate line, decoding should almost always succeed
    assert!(r.frame_errors <= 1, "{} frame errors", r.frame_errors);
}

#[test]
fn report_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig {
        experiment: Experiments::Many(vec![ExperimentKind::Tsa, ExperimentKind::Corner]),
        n: 64,
        list_size: 2,
        backoff: vec![0.25],
        frames: 60,
        profile_samples: 1000,
        output: Some(dir.path().join("fer.csv")),
        ..SimConfig::default()
    };
    let out = run_with_workers(&cfg, Some(2)).unwrap();
    out.write(&cfg).unwrap();
    let SimOutput::Sweep(mut report) = out else { panic!("not a sweep") };
    let text = std::fs::read(dir.path().join("fer.csv")).unwrap();
    assert_eq!(text.iter().filter(|&&c| c == b'\n').count(), 3);
    for row in &mut report.rows {
        row.wall_seconds = 0.0;
    }
    assert_eq!(parse_csv(&text[..]).unwrap(), report);
}

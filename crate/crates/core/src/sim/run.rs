//! Experiment execution.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentKind, SimConfig};
use super::report::{emit_csv, InfeasiblePoint, ReportRow, SimReport};
use super::SimError;
use crate::polar::{build_code, CodeSpec, PolarError, ReliabilityProfile};
use crate::prob::mutual_information;
use crate::regions::{corner_points, region_samples, tsa_rates, write_region_csv, InputStructure, RatePair, RegionSample, User};
use crate::rng::{derive_seed, stream_rng};
use crate::scheme::{
    build_layout, time_sharing_stream, tsa_stream, typicality_oracle, uses_corner_two, CodeBuilder, Corner, Interleaver,
    OracleParams, SchemeError, StreamMessages, TsaSchedule,
};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "TSA_SIM_WORKERS";
/// Frame errors after which `early_stop` ends a grid point.
pub const EARLY_STOP_ERRORS: u64 = 200;
const STREAMS_PER_BATCH: u64 = 32;

/// Worker count from [`WORKERS_ENV`], `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>, SimError> {
    match std::env::var(WORKERS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(SimError::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
        },
        Err(e) => Err(SimError::Config(format!("{WORKERS_ENV}: {e}"))),
    }
}

/// One oracle block length.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub n: usize,
    pub trials: usize,
    pub r1: f64,
    pub r2: f64,
    pub bin_rate: f64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimOutput {
    Sweep(SimReport),
    Region(Vec<RegionSample<f64>>),
    Profile { profile: ReliabilityProfile<f64>, code: Option<CodeSpec> },
    Oracle(Vec<OracleRow>),
}

impl SimOutput {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<(), SimError> {
        match self {
            Self::Sweep(r) => emit_csv(r, out)?,
            Self::Region(samples) => write_region_csv(out, samples)?,
            Self::Profile { profile, .. } => profile.write_csv(out)?,
            Self::Oracle(rows) => {
                writeln!(out, "n,trials,r1,r2,bin_rate,error_rate")?;
                for r in rows {
                    writeln!(out, "{},{},{},{},{},{}", r.n, r.trials, r.r1, r.r2, r.bin_rate, r.error_rate)?;
                }
            }
        }
        Ok(())
    }

    /// Writes the CSV to the configured output (standard output when unset) and, for profiles,
    /// the code to `code_output`.
    pub fn write(&self, cfg: &SimConfig) -> Result<(), SimError> {
        match &cfg.output {
            Some(path) => {
                let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
                self.write_csv(&mut file)?;
                file.flush()?;
            }
            None => self.write_csv(&mut std::io::stdout().lock())?,
        }
        if let (Self::Profile { code: Some(code), .. }, Some(path)) = (self, &cfg.code_output) {
            write_text(path, &code.to_toml())?;
        }
        Ok(())
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), SimError> {
    Ok(std::fs::write(path, text)?)
}

/// Runs the configured experiment with the worker count from the environment.
pub fn run(cfg: &SimConfig) -> Result<SimOutput, SimError> {
    run_with_workers(cfg, workers_from_env()?)
}

/// Runs the configured experiment on `workers` threads (rayon's default when `None`).
///
/// Work is split into fixed batches and merged in order, so the output does not depend on the
/// worker count.
pub fn run_with_workers(cfg: &SimConfig, workers: Option<usize>) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &SimConfig) -> Result<SimOutput, SimError> {
    let kinds = cfg.experiment.kinds();
    let structure = cfg.structure()?;
    match kinds[0] {
        ExperimentKind::Region => Ok(SimOutput::Region(region_samples(&structure, cfg.region_points))),
        ExperimentKind::Profile => run_profile(cfg, structure),
        ExperimentKind::Oracle => run_oracle(cfg, &structure),
        _ => {
            let mut report = SimReport::default();
            if cfg.frames == 0 {
                return Ok(SimOutput::Sweep(report));
            }
            let mut builder = code_builder(cfg, structure)?;
            for kind in kinds {
                for &b in &cfg.backoff {
                    match sweep_point(cfg, &mut builder, kind, b) {
                        Ok(row) => report.rows.push(row),
                        Err(SchemeError::Polar(e @ PolarError::Infeasible { .. })) => report.infeasible.push(InfeasiblePoint {
                            scheme: scheme_name(cfg, kind).to_string(),
                            backoff_bpcu: b,
                            reason: e.to_string(),
                        }),
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            Ok(SimOutput::Sweep(report))
        }
    }
}

fn code_builder(cfg: &SimConfig, structure: InputStructure<f64>) -> Result<CodeBuilder<f64>, SimError> {
    Ok(CodeBuilder::new(structure, cfg.transform()?, cfg.profile_samples, cfg.seed, cfg.rules(), cfg.smoothing))
}

fn scheme_name(cfg: &SimConfig, kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Tsa => "tsa",
        ExperimentKind::TimeSharing => "time-sharing",
        ExperimentKind::Corner if cfg.corner == 2 => "corner2",
        ExperimentKind::Corner => "corner1",
        ExperimentKind::Region => "region",
        ExperimentKind::Profile => "profile",
        ExperimentKind::Oracle => "oracle",
    }
}

fn kind_tag(kind: ExperimentKind) -> u64 {
    match kind {
        ExperimentKind::Tsa => 1,
        ExperimentKind::TimeSharing => 2,
        ExperimentKind::Corner => 3,
        ExperimentKind::Region => 4,
        ExperimentKind::Profile => 5,
        ExperimentKind::Oracle => 6,
    }
}

fn bits_at(n: usize, rate: f64) -> usize {
    ((n as f64 * rate).floor().max(0.0) as usize).min(n)
}

/// Data bits per block `(k1, k2)` at back-off `backoff`.
///
/// TSA subtracts half the back-off from each user's rate at `alpha`. A corner point is scaled
/// so that its sum rate drops by the back-off. Time sharing returns the corner-1 pair followed
/// by the corner-2 pair: corner 1 loses half the back-off per user and corner 2 is chosen so
/// that the average over a fraction `alpha` of corner-2 blocks carries the TSA bit counts.
pub fn data_bits(
    s: &InputStructure<f64>,
    kind: ExperimentKind,
    n: usize,
    alpha: f64,
    corner: Corner,
    backoff: f64,
) -> Result<Vec<(usize, usize)>, SchemeError> {
    let shifted = |r: RatePair<f64>| (bits_at(n, r.r1 - backoff / 2.0), bits_at(n, r.r2 - backoff / 2.0));
    let tsa = shifted(tsa_rates(s, alpha)?);
    let (c1, c2) = corner_points(s);
    Ok(match kind {
        ExperimentKind::Corner => {
            let c = if corner == Corner::One { c1 } else { c2 };
            let scale = if c.sum() > 0.0 { (1.0 - backoff / c.sum()).max(0.0) } else { 0.0 };
            vec![(bits_at(n, c.r1 * scale), bits_at(n, c.r2 * scale))]
        }
        ExperimentKind::TimeSharing => {
            let first = shifted(c1);
            let second = |k: usize, k_first: usize| {
                if alpha <= 0.0 {
                    return 0;
                }
                let k2 = ((k as f64 - (1.0 - alpha) * k_first as f64) / alpha).round();
                k2.clamp(0.0, n as f64) as usize
            };
            vec![first, (second(tsa.0, first.0), second(tsa.1, first.1))]
        }
        _ => vec![tsa],
    })
}

/// Runs one grid point of a frame error rate sweep.
pub fn sweep_point(
    cfg: &SimConfig,
    builder: &mut CodeBuilder<f64>,
    kind: ExperimentKind,
    backoff: f64,
) -> Result<ReportRow, SchemeError> {
    let start = Instant::now();
    let (n, alpha, list) = (cfg.n, cfg.alpha, cfg.list_size);
    let bits = data_bits(builder.structure(), kind, n, alpha, cfg.corner_kind(), backoff)?;
    let tags = [kind_tag(kind), backoff.to_bits()];
    let (r1, r2, frames, errors) = match kind {
        ExperimentKind::Tsa => {
            let (k1, k2) = bits[0];
            let interleaver = cfg.interleaver();
            let codes = builder.tsa(&TsaSchedule::from_alpha(n, alpha, 1, interleaver)?, k1, k2)?;
            let structure = builder.structure();
            let (frames, errors) = accumulate(cfg, |s, blocks| {
                let interleaver = match interleaver {
                    Interleaver::Random { seed } => Interleaver::Random { seed: derive_seed(seed, &[s]) },
                    Interleaver::Identity => Interleaver::Identity,
                };
                let layout = build_layout(&TsaSchedule::from_alpha(n, alpha, blocks, interleaver)?);
                let mut rng = stream_rng(cfg.seed, &[tags[0], tags[1], s]);
                let msgs = StreamMessages::random(k1, k2, blocks, &mut rng);
                let (_, r) = tsa_stream(&msgs, &layout, &codes, structure, list, &mut rng)?;
                Ok(r.frame_errors as u64)
            })?;
            (k1 as f64 / n as f64, k2 as f64 / n as f64, frames, errors)
        }
        ExperimentKind::TimeSharing | ExperimentKind::Corner => {
            let (first, second, share) = if kind == ExperimentKind::Corner {
                let share = if cfg.corner_kind() == Corner::One { 0.0 } else { 1.0 };
                (bits[0], bits[0], share)
            } else {
                (bits[0], bits[1], alpha)
            };
            let c1 = builder.corner(Corner::One, first.0, first.1)?;
            let c2 = builder.corner(Corner::Two, second.0, second.1)?;
            let structure = builder.structure();
            let (frames, errors) = accumulate(cfg, |s, blocks| {
                let mut rng = stream_rng(cfg.seed, &[tags[0], tags[1], s]);
                let sizes: Vec<(usize, usize)> =
                    (0..blocks).map(|j| if uses_corner_two(j, share) { second } else { first }).collect();
                let msgs = StreamMessages::random_sized(&sizes, &mut rng);
                let (_, r) = time_sharing_stream(&msgs, share, &c1, &c2, structure, list, &mut rng)?;
                Ok(r.frame_errors as u64)
            })?;
            let rate = |a: usize, b: usize| ((1.0 - share) * a as f64 + share * b as f64) / n as f64;
            (rate(first.0, second.0), rate(first.1, second.1), frames, errors)
        }
        _ => unreachable!("not a sweep experiment"),
    };
    let mut row = ReportRow::new(scheme_name(cfg, kind), backoff, r1, r2, frames, errors, n, alpha, list);
    row.wall_seconds = start.elapsed().as_secs_f64();
    Ok(row)
}

/// Simulates `cfg.frames` frames as streams of `blocks_per_stream` blocks in fixed batches and
/// returns `(frames, frame errors)`.
fn accumulate<F>(cfg: &SimConfig, stream: F) -> Result<(u64, u64), SchemeError>
where
    F: Fn(u64, usize) -> Result<u64, SchemeError> + Sync,
{
    let per = cfg.blocks_per_stream as u64;
    let streams = cfg.frames.div_ceil(per);
    let (mut frames, mut errors) = (0u64, 0u64);
    let mut next = 0;
    while next < streams {
        let end = (next + STREAMS_PER_BATCH).min(streams);
        let results: Vec<_> = (next..end)
            .into_par_iter()
            .map(|s| {
                let blocks = per.min(cfg.frames - s * per);
                stream(s, blocks as usize).map(|e| (blocks, e))
            })
            .collect();
        for r in results {
            let (f, e) = r?;
            frames += f;
            errors += e;
        }
        next = end;
        if cfg.early_stop && errors >= EARLY_STOP_ERRORS {
            break;
        }
    }
    Ok((frames, errors))
}

fn run_profile(cfg: &SimConfig, structure: InputStructure<f64>) -> Result<SimOutput, SimError> {
    let user = if cfg.profile_user == 2 { User::Two } else { User::One };
    let schedule = TsaSchedule::from_alpha(cfg.n, cfg.alpha, 1, cfg.interleaver())?;
    let mut builder = code_builder(cfg, structure)?;
    let profile = builder.profile(user, schedule.profile_mask(user))?.clone();
    let code = match (cfg.code_output.is_some(), cfg.backoff.first()) {
        (true, Some(&b)) => {
            let (k1, k2) = data_bits(builder.structure(), ExperimentKind::Tsa, cfg.n, cfg.alpha, Corner::One, b)?[0];
            let k = if user == User::One { k1 } else { k2 };
            Some(build_code(&profile, k, &cfg.rules())?)
        }
        (true, None) => return Err(SimError::Config("code_output needs a back-off value".into())),
        (false, _) => None,
    };
    Ok(SimOutput::Profile { profile, code })
}

fn run_oracle(cfg: &SimConfig, structure: &InputStructure<f64>) -> Result<SimOutput, SimError> {
    let rates = tsa_rates(structure, cfg.alpha)?;
    let bin_rate = cfg.oracle_bin_rate.unwrap_or_else(|| mutual_information(structure.joint()) + 0.25);
    let (r1, r2) = (rates.r1 * cfg.oracle_rate_fraction, rates.r2 * cfg.oracle_rate_fraction);
    let mut rows = Vec::new();
    for &n in &cfg.oracle_n {
        let params = OracleParams {
            n,
            alpha: cfg.alpha,
            r1,
            r2,
            bin_rate1: bin_rate,
            bin_rate2: bin_rate,
            eps: cfg.oracle_eps,
            trials: cfg.oracle_trials,
            seed: derive_seed(cfg.seed, &[kind_tag(ExperimentKind::Oracle), n as u64]),
        };
        let error_rate = typicality_oracle(structure, &params)?;
        rows.push(OracleRow { n, trials: cfg.oracle_trials, r1, r2, bin_rate, error_rate });
    }
    Ok(SimOutput::Oracle(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{blackwell_optimal_structure, GlitchMap};
    use crate::sim::Experiments;

    fn small(kind: ExperimentKind) -> SimConfig {
        SimConfig {
            experiment: Experiments::One(kind),
            n: 32,
            backoff: vec![0.3, 0.6],
            frames: 40,
            list_size: 2,
            profile_samples: 500,
            blocks_per_stream: 4,
            ..SimConfig::default()
        }
    }

    fn sweep(cfg: &SimConfig, workers: usize) -> SimReport {
        match run_with_workers(cfg, Some(workers)).unwrap() {
            SimOutput::Sweep(r) => r,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn equal_rate_bits_at_half_offset() {
        let s = blackwell_optimal_structure::<f64>(GlitchMap::ToTwo);
        let tsa = data_bits(&s, ExperimentKind::Tsa, 1024, 0.5, Corner::One, 0.2).unwrap();
        let expected = ((1024.0 * (3f64.log2() - 0.2)) / 2.0).floor() as usize;
        assert_eq!(tsa, vec![(expected, expected)]);
        let ts = data_bits(&s, ExperimentKind::TimeSharing, 1024, 0.5, Corner::One, 0.2).unwrap();
        let (first, second) = (ts[0], ts[1]);
        assert_eq!(first.0 + second.0, 2 * expected);
        assert_eq!(first.1 + second.1, 2 * expected);
        assert!(first.0 > first.1 && second.1 > second.0);
        let c = data_bits(&s, ExperimentKind::Corner, 1024, 0.5, Corner::One, 3f64.log2()).unwrap();
        assert_eq!(c, vec![(0, 0)]);
    }

    #[test]
    fn zero_frames_is_empty() {
        let cfg = SimConfig { frames: 0, ..small(ExperimentKind::Tsa) };
        assert_eq!(sweep(&cfg, 1), SimReport::default());
    }

    #[test]
    fn corner_at_full_backoff_never_errs() {
        let cfg = SimConfig { backoff: vec![3f64.log2()], ..small(ExperimentKind::Corner) };
        let r = sweep(&cfg, 1);
        assert_eq!(r.rows.len(), 1);
        assert_eq!((r.rows[0].errors, r.rows[0].frames), (0, 40));
        assert_eq!(r.rows[0].scheme, "corner1");
    }

    #[test]
    fn rows_per_scheme_and_point() {
        let cfg = SimConfig {
            experiment: Experiments::Many(vec![ExperimentKind::Tsa, ExperimentKind::TimeSharing]),
            ..small(ExperimentKind::Tsa)
        };
        let r = sweep(&cfg, 2);
        assert_eq!(r.rows.len(), 4);
        for row in &r.rows {
            assert_eq!(row.frames, 40);
            assert!((row.r1 - row.r2).abs() < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small(ExperimentKind::Tsa);
        cfg.experiment = Experiments::Many(vec![ExperimentKind::Tsa, ExperimentKind::TimeSharing]);
        cfg.interleaver = crate::sim::InterleaverKind::Random;
        cfg.backoff = vec![0.1];
        let csv = |w| {
            let mut buf = Vec::new();
            emit_csv(&sweep(&cfg, w), &mut buf).unwrap();
            buf
        };
        assert_eq!(csv(1), csv(3));
    }

    #[test]
    fn early_stop_cuts_hopeless_points() {
        let cfg = SimConfig { backoff: vec![0.0], frames: 20_000, early_stop: true, n: 16, ..small(ExperimentKind::Tsa) };
        let r = sweep(&cfg, 1);
        let row = &r.rows[0];
        if row.errors >= EARLY_STOP_ERRORS {
            assert!(row.frames < 20_000);
            assert_eq!(row.frames % (STREAMS_PER_BATCH * cfg.blocks_per_stream as u64), 0);
        }
    }

    #[test]
    fn infeasible_points_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bsc.toml");
        // two independent binary symmetric links: every index keeps some receiver uncertainty
        std::fs::write(
            &path,
            "joint = [[0.25, 0.25], [0.25, 0.25]]\nsymbol_map = [[0, 1], [2, 3]]\ny1_size = 2\ny2_size = 2\n\
             law = [[0.81, 0.09, 0.09, 0.01], [0.09, 0.81, 0.01, 0.09], [0.09, 0.01, 0.81, 0.09], [0.01, 0.09, 0.09, 0.81]]\n",
        )
        .unwrap();
        let cfg = SimConfig { channel: Some(path), backoff: vec![0.2, 0.4], rx_cutoff: 0.0, ..small(ExperimentKind::Tsa) };
        let r = sweep(&cfg, 1);
        assert!(r.all_infeasible(), "{r:?}");
        assert_eq!(r.infeasible.len(), 2);
    }

    #[test]
    fn region_and_oracle_outputs() {
        let cfg = SimConfig { region_points: 3, ..small(ExperimentKind::Region) };
        let SimOutput::Region(samples) = run_with_workers(&cfg, Some(1)).unwrap() else { panic!() };
        assert_eq!(samples.len(), 3);
        assert!((samples[1].r1 + samples[1].r2 - 3f64.log2()).abs() < 1e-9);
        let cfg = SimConfig { oracle_n: vec![4], oracle_trials: 50, ..small(ExperimentKind::Oracle) };
        let out = run_with_workers(&cfg, Some(1)).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn profile_output_with_code() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimConfig {
            output: Some(dir.path().join("p.csv")),
            code_output: Some(dir.path().join("code.toml")),
            ..small(ExperimentKind::Profile)
        };
        let out = run_with_workers(&cfg, Some(1)).unwrap();
        out.write(&cfg).unwrap();
        let p = ReliabilityProfile::<f64>::read_csv(std::io::BufReader::new(std::fs::File::open(dir.path().join("p.csv")).unwrap())).unwrap();
        assert_eq!(p.n(), 32);
        let code = CodeSpec::from_toml(&std::fs::read_to_string(dir.path().join("code.toml")).unwrap()).unwrap();
        let k = data_bits(&blackwell_optimal_structure(GlitchMap::ToTwo), ExperimentKind::Tsa, 32, 0.5, Corner::One, 0.3).unwrap()[0].0;
        assert_eq!(code.data_bits(), k);
    }
}

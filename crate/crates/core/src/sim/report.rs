//! Frame error rate reports and their CSV form.

use std::io::{BufRead, Write};

use super::SimError;

const Z95: f64 = 1.959963984540054;

/// CSV header of a report.
pub const REPORT_HEADER: &str = "backoff_bpcu,r1,r2,frames,errors,fer,ci_lo,ci_hi,scheme,n,alpha,L";

/// Wilson score interval at 95% for `errors` out of `frames`.
pub fn wilson(errors: u64, frames: u64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == frames { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// One grid point of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub backoff_bpcu: f64,
    /// Data bits per block over the block length.
    pub r1: f64,
    pub r2: f64,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub scheme: String,
    pub n: usize,
    pub alpha: f64,
    pub list_size: usize,
    /// Not written to CSV.
    pub wall_seconds: f64,
}

impl ReportRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(scheme: &str, backoff: f64, r1: f64, r2: f64, frames: u64, errors: u64, n: usize, alpha: f64, list_size: usize) -> Self {
        let fer = if frames == 0 { 0.0 } else { errors as f64 / frames as f64 };
        let (ci_lo, ci_hi) = wilson(errors, frames);
        Self {
            backoff_bpcu: backoff,
            r1,
            r2,
            frames,
            errors,
            fer,
            ci_lo,
            ci_hi,
            scheme: scheme.to_string(),
            n,
            alpha,
            list_size,
            wall_seconds: 0.0,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.backoff_bpcu,
            self.r1,
            self.r2,
            self.frames,
            self.errors,
            self.fer,
            self.ci_lo,
            self.ci_hi,
            self.scheme,
            self.n,
            self.alpha,
            self.list_size
        )
    }

    fn parse(line: &str, lineno: usize) -> Result<Self, SimError> {
        let f: Vec<&str> = line.split(',').collect();
        let err = |what: &str| SimError::Parse { line: lineno, what: what.to_string() };
        if f.len() != 12 {
            return Err(err("expected 12 columns"));
        }
        let float = |i: usize| f[i].parse::<f64>().map_err(|_| err(f[i]));
        let int = |i: usize| f[i].parse::<u64>().map_err(|_| err(f[i]));
        Ok(Self {
            backoff_bpcu: float(0)?,
            r1: float(1)?,
            r2: float(2)?,
            frames: int(3)?,
            errors: int(4)?,
            fer: float(5)?,
            ci_lo: float(6)?,
            ci_hi: float(7)?,
            scheme: f[8].to_string(),
            n: int(9)? as usize,
            alpha: float(10)?,
            list_size: int(11)? as usize,
            wall_seconds: 0.0,
        })
    }
}

/// A grid point whose code could not be built.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasiblePoint {
    pub scheme: String,
    pub backoff_bpcu: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimReport {
    pub rows: Vec<ReportRow>,
    pub infeasible: Vec<InfeasiblePoint>,
}

impl SimReport {
    /// True when the grid was not empty and every point failed to build.
    pub fn all_infeasible(&self) -> bool {
        self.rows.is_empty() && !self.infeasible.is_empty()
    }

    pub fn row(&self, scheme: &str, backoff: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.backoff_bpcu == backoff)
    }
}

pub fn emit_csv<W: Write>(report: &SimReport, out: &mut W) -> Result<(), SimError> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in &report.rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Reads rows written by [`emit_csv`]; infeasible points and wall times are not recovered.
pub fn parse_csv<R: BufRead>(input: R) -> Result<SimReport, SimError> {
    let mut lines = input.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim_end() == REPORT_HEADER => {}
        _ => return Err(SimError::Parse { line: 1, what: "missing header".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(ReportRow::parse(line.trim_end(), i + 2)?);
    }
    Ok(SimReport { rows, infeasible: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wilson_reference_values() {
        // 10 errors in 100 frames
        let (lo, hi) = wilson(10, 100);
        assert!((lo - 0.05522914).abs() < 1e-7, "{lo}");
        assert!((hi - 0.17436566).abs() < 1e-7, "{hi}");
        let (lo, hi) = wilson(0, 50);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.07134759).abs() < 1e-7, "{hi}");
        assert_eq!(wilson(0, 0), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn interval_contains_estimate(frames in 1u64..100_000, frac in 0.0f64..=1.0) {
            let errors = (frac * frames as f64).floor() as u64;
            let r = ReportRow::new("tsa", 0.1, 0.5, 0.5, frames, errors, 64, 0.5, 8);
            prop_assert!(0.0 <= r.ci_lo && r.ci_lo <= r.fer && r.fer <= r.ci_hi && r.ci_hi <= 1.0);
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        emit_csv(&SimReport::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{REPORT_HEADER}\n"));
    }

    #[test]
    fn csv_round_trip() {
        let report = SimReport {
            rows: vec![
                ReportRow::new("tsa", 0.2, 709.0 / 1024.0, 0.6923828125, 5000, 37, 1024, 0.5, 8),
                ReportRow::new("time-sharing", 0.1 + 0.2, 1.0 / 3.0, 0.0, 7, 0, 4, 1.0 / 3.0, 32),
            ],
            infeasible: Vec::new(),
        };
        let mut buf = Vec::new();
        emit_csv(&report, &mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 3);
        assert_eq!(parse_csv(&buf[..]).unwrap(), report);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_csv(&b"a,b\n"[..]).is_err());
        let text = format!("{REPORT_HEADER}\n1,2,3\n");
        assert!(matches!(parse_csv(text.as_bytes()), Err(SimError::Parse { line: 2, .. })));
    }
}

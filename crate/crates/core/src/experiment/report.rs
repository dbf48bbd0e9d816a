use std::fmt::Write as _;
use std::path::Path;

use super::{RunOutcome, SweepAxis};
use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "algorithm,sweep_axis,sweep_value,mean_miscls,std_miscls,mean_seconds,rounds_used";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub algorithm: String,
    pub sweep_value: f64,
    pub mean_miscls: f64,
    /// Sample standard deviation (zero for a single repetition).
    pub std_miscls: f64,
    pub mean_seconds: f64,
    /// Mean number of federation rounds.
    pub rounds_used: f64,
}

impl MetricsRow {
    pub fn aggregate(algorithm: &str, sweep_value: f64, runs: &[RunOutcome]) -> Self {
        let n = runs.len() as f64;
        let mean = |f: fn(&RunOutcome) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let mean_miscls = mean(|r| r.misclassification);
        let std_miscls = if runs.len() > 1 {
            (runs.iter().map(|r| (r.misclassification - mean_miscls).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MetricsRow {
            algorithm: algorithm.to_string(),
            sweep_value,
            mean_miscls,
            std_miscls,
            mean_seconds: mean(|r| r.seconds),
            rounds_used: mean(|r| r.rounds_used as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub axis: SweepAxis,
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    /// Sorts rows by algorithm name, then sweep value.
    pub fn new(axis: SweepAxis, mut rows: Vec<MetricsRow>) -> Self {
        rows.sort_by(|a, b| {
            a.algorithm
                .cmp(&b.algorithm)
                .then(a.sweep_value.total_cmp(&b.sweep_value))
        });
        MetricsReport { axis, rows }
    }

    pub fn rows_for<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a MetricsRow> + 'a {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn row(&self, algorithm: &str, sweep_value: f64) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.sweep_value == sweep_value)
    }
}

pub fn render_report(report: &MetricsReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.algorithm,
            report.axis.name(),
            r.sweep_value,
            r.mean_miscls,
            r.std_miscls,
            r.mean_seconds,
            r.rounds_used
        );
    }
    out
}

pub fn emit_report(report: &MetricsReport, path: impl AsRef<Path>) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::Report("refusing to write an empty report".into()));
    }
    let path = path.as_ref();
    std::fs::write(path, render_report(report)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_report(text: &str) -> Result<MetricsReport> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        return Err(Error::Report("missing or unexpected header".into()));
    }
    let mut axis = None;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(Error::Report(format!("line {}: expected 7 cells", i + 2)));
        }
        let this_axis = SweepAxis::parse(cells[1])?;
        if *axis.get_or_insert(this_axis) != this_axis {
            return Err(Error::Report("report mixes sweep axes".into()));
        }
        let num = |j: usize| {
            cells[j]
                .parse::<f64>()
                .map_err(|_| Error::Report(format!("line {}: bad number `{}`", i + 2, cells[j])))
        };
        rows.push(MetricsRow {
            algorithm: cells[0].to_string(),
            sweep_value: num(2)?,
            mean_miscls: num(3)?,
            std_miscls: num(4)?,
            mean_seconds: num(5)?,
            rounds_used: num(6)?,
        });
    }
    let axis = axis.ok_or_else(|| Error::Report("report has no rows".into()))?;
    Ok(MetricsReport::new(axis, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MetricsReport {
        MetricsReport::new(
            SweepAxis::Epsilon,
            vec![
                MetricsRow {
                    algorithm: "OFPA".into(),
                    sweep_value: 0.8,
                    mean_miscls: 0.123_456_7,
                    std_miscls: 0.01,
                    mean_seconds: 0.5,
                    rounds_used: 50.0,
                },
                MetricsRow {
                    algorithm: "NOISELESS".into(),
                    sweep_value: 0.1,
                    mean_miscls: 0.1,
                    std_miscls: 0.0,
                    mean_seconds: 0.25,
                    rounds_used: 12.5,
                },
            ],
        )
    }

    #[test]
    fn one_row_report_has_two_lines() {
        let mut r = sample();
        r.rows.truncate(1);
        let text = render_report(&r);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next(), Some(REPORT_HEADER));
        assert_eq!(text.lines().nth(1), Some("NOISELESS,epsilon,0.100000,0.100000,0.000000,0.250000,12.500000"));
    }

    #[test]
    fn rows_are_sorted_and_rendering_is_stable() {
        let r = sample();
        assert_eq!(r.rows[0].algorithm, "NOISELESS");
        assert_eq!(render_report(&r), render_report(&r.clone()));
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_report(&r, &a).unwrap();
        emit_report(&r, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn parse_back_within_print_precision() {
        let r = sample();
        let back = parse_report(&render_report(&r)).unwrap();
        assert_eq!(back.axis, r.axis);
        for (x, y) in r.rows.iter().zip(&back.rows) {
            assert_eq!(x.algorithm, y.algorithm);
            for (a, b) in [
                (x.sweep_value, y.sweep_value),
                (x.mean_miscls, y.mean_miscls),
                (x.std_miscls, y.std_miscls),
                (x.mean_seconds, y.mean_seconds),
                (x.rounds_used, y.rounds_used),
            ] {
                assert!((a - b).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn write_errors() {
        let r = sample();
        assert!(matches!(emit_report(&r, "/nonexistent-dir/x.csv"), Err(Error::Io { .. })));
        let empty = MetricsReport::new(SweepAxis::Epsilon, vec![]);
        assert!(emit_report(&empty, "/tmp/never.csv").is_err());
        assert!(parse_report("nope\n").is_err());
    }
}

//! Line-delimited JSON metrics.
//!
//! Each line is one object with fields `run` (string), `step` (integer),
//! `metric` (string), `value` (number, `null` when not finite) and, only when
//! enabled, `wall_clock` (seconds since the log was created).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub run: String,
    pub step: u64,
    pub metric: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<f64>,
}

/// Append-only record stream, kept in memory and optionally mirrored to a file
/// as it grows.
#[derive(Debug)]
pub struct MetricsLog {
    records: Vec<MetricsRecord>,
    sink: Option<(BufWriter<File>, std::path::PathBuf)>,
    start: Option<Instant>,
    echo: bool,
}

impl MetricsLog {
    pub fn new(wall_clock: bool) -> MetricsLog {
        MetricsLog { records: Vec::new(), sink: None, start: wall_clock.then(Instant::now), echo: false }
    }

    pub fn to_file(path: &Path, wall_clock: bool) -> Result<MetricsLog> {
        let file = File::create(path).map_err(io_err(path))?;
        Ok(MetricsLog { sink: Some((BufWriter::new(file), path.to_path_buf())), ..MetricsLog::new(wall_clock) })
    }

    /// Also print every record to stderr as it is emitted.
    pub fn echo(mut self, on: bool) -> MetricsLog {
        self.echo = on;
        self
    }

    pub fn emit(&mut self, run: &str, step: u64, metric: &str, value: f64) -> Result<()> {
        let record = MetricsRecord {
            run: run.into(),
            step,
            metric: metric.into(),
            value,
            wall_clock: self.start.map(|s| s.elapsed().as_secs_f64()),
        };
        if self.echo {
            eprintln!("{run} step={step} {metric}={value}");
        }
        if let Some((w, path)) = &mut self.sink {
            let line = serde_json::to_string(&record)?;
            writeln!(w, "{line}").map_err(io_err(path.clone()))?;
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[MetricsRecord] {
        &self.records
    }

    /// Last value recorded for `(run, metric)`.
    pub fn last(&self, run: &str, metric: &str) -> Option<f64> {
        self.records.iter().rev().find(|r| r.run == run && r.metric == metric).map(|r| r.value)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some((w, path)) = &mut self.sink {
            w.flush().map_err(io_err(path.clone()))?;
        }
        Ok(())
    }
}

pub fn parse_jsonl(text: &str) -> Result<Vec<MetricsRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(HarnessError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip_through_jsonl() {
        let mut log = MetricsLog::new(false);
        log.emit("r", 3, "accuracy", 0.5).unwrap();
        log.emit("r", 4, "retention[1]", 0.25).unwrap();
        let text = log.to_jsonl();
        assert_eq!(text.lines().next().unwrap(), r#"{"run":"r","step":3,"metric":"accuracy","value":0.5}"#);
        assert_eq!(parse_jsonl(&text).unwrap(), log.records());
        assert_eq!(log.last("r", "accuracy"), Some(0.5));
    }

    #[test]
    fn wall_clock_is_opt_in() {
        let mut log = MetricsLog::new(true);
        log.emit("r", 1, "accuracy", 1.0).unwrap();
        assert!(log.records()[0].wall_clock.is_some());
        assert!(log.to_jsonl().contains("wall_clock"));
    }

    #[test]
    fn file_mirror_matches_memory() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let mut log = MetricsLog::to_file(&path, false).unwrap();
        log.emit("a", 0, "accuracy", 0.125).unwrap();
        log.flush().unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), log.to_jsonl());
    }
}

//! Per-run trajectory files.
//!
//! CSV files start with `# key=value` metadata lines followed by a header and
//! one row per logged iteration. JSON files hold the same data as one object.
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back yields bit-identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use condgrad::state::TrajectoryRecord;
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

pub const CSV_HEADER: &str = "t,elapsed_ns,primal,dual_gap,step_type,active_set_size,lmo_calls";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn of_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

/// Run description and final outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    /// Canonical problem id, seed included.
    pub id: String,
    pub problem: String,
    pub dimension: String,
    pub variant: String,
    pub step: String,
    pub epsilon: f64,
    /// Seconds.
    pub max_time: f64,
    pub seed: u64,
    pub termination: String,
    /// Wall time in seconds.
    pub time: f64,
    pub iterations: usize,
    pub primal: f64,
    pub dual_gap: f64,
    pub lmo_calls: usize,
    /// Peak heap growth during the run; best effort.
    pub alloc_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunMeta {
    pub fn solved(&self) -> bool {
        self.termination == "gap-reached" && self.dual_gap <= self.epsilon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: usize,
    pub elapsed_ns: u64,
    pub primal: f64,
    pub dual_gap: f64,
    pub step_type: String,
    pub active_set_size: usize,
    pub lmo_calls: usize,
}

impl From<&TrajectoryRecord> for Row {
    fn from(r: &TrajectoryRecord) -> Self {
        Row {
            t: r.t,
            elapsed_ns: r.elapsed_ns,
            primal: r.primal,
            dual_gap: r.dual_gap,
            step_type: r.step_type.tag().to_string(),
            active_set_size: r.active_set_size,
            lmo_calls: r.lmo_calls,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub meta: RunMeta,
    pub rows: Vec<Row>,
}

const META_KEYS: [&str; 16] = [
    "id",
    "problem",
    "dimension",
    "variant",
    "step",
    "epsilon",
    "max_time",
    "seed",
    "termination",
    "time",
    "iterations",
    "primal",
    "dual_gap",
    "lmo_calls",
    "alloc_bytes",
    "error",
];

impl Trajectory {
    /// File name derived from id, variant and step, safe on common filesystems.
    pub fn file_stem(&self) -> String {
        let raw = format!(
            "{}__{}__{}",
            self.meta.id, self.meta.variant, self.meta.step
        );
        raw.chars()
            .map(|c| match c {
                ':' | ',' => '_',
                '=' => '-',
                c if c.is_ascii_alphanumeric() || "-_.".contains(c) => c,
                _ => '_',
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        let mut meta = |k: &str, v: String| {
            let _ = writeln!(out, "# {k}={v}");
        };
        meta("id", m.id.clone());
        meta("problem", m.problem.clone());
        meta("dimension", m.dimension.clone());
        meta("variant", m.variant.clone());
        meta("step", m.step.clone());
        meta("epsilon", m.epsilon.to_string());
        meta("max_time", m.max_time.to_string());
        meta("seed", m.seed.to_string());
        meta("termination", m.termination.clone());
        meta("time", m.time.to_string());
        meta("iterations", m.iterations.to_string());
        meta("primal", m.primal.to_string());
        meta("dual_gap", m.dual_gap.to_string());
        meta("lmo_calls", m.lmo_calls.to_string());
        meta("alloc_bytes", m.alloc_bytes.to_string());
        if let Some(e) = &m.error {
            meta("error", e.replace('\n', " "));
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t,
                r.elapsed_ns,
                r.primal,
                r.dual_gap,
                r.step_type,
                r.active_set_size,
                r.lmo_calls
            );
        }
        out
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, reason: String| BenchError::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut kv = std::collections::HashMap::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((_, l)) = lines.peek() {
            let Some(body) = l.strip_prefix('#') else {
                break;
            };
            let (i, _) = lines.next().unwrap();
            let (k, v) = body
                .trim_start()
                .split_once('=')
                .ok_or_else(|| err(i + 1, "metadata line without `=`".into()))?;
            if !META_KEYS.contains(&k) {
                return Err(err(i + 1, format!("unknown metadata key `{k}`")));
            }
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| -> Result<&String> {
            kv.get(k)
                .ok_or_else(|| err(0, format!("missing metadata `{k}`")))
        };
        fn num<T: FromStr>(v: &str, k: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value `{v}` for `{k}`"))
        }
        let n = |k: &str| -> Result<f64> { num(get(k)?, k).map_err(|e| err(0, e)) };
        let u = |k: &str| -> Result<u64> { num(get(k)?, k).map_err(|e| err(0, e)) };
        let meta = RunMeta {
            id: get("id")?.clone(),
            problem: get("problem")?.clone(),
            dimension: get("dimension")?.clone(),
            variant: get("variant")?.clone(),
            step: get("step")?.clone(),
            epsilon: n("epsilon")?,
            max_time: n("max_time")?,
            seed: u("seed")?,
            termination: get("termination")?.clone(),
            time: n("time")?,
            iterations: u("iterations")? as usize,
            primal: n("primal")?,
            dual_gap: n("dual_gap")?,
            lmo_calls: u("lmo_calls")? as usize,
            alloc_bytes: u("alloc_bytes")?,
            error: kv.get("error").cloned(),
        };
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            Some((i, _)) => return Err(err(i + 1, "unexpected column header".into())),
            None => return Err(err(0, "missing column header".into())),
        }
        let mut rows = Vec::new();
        for (i, l) in lines {
            if l.is_empty() {
                continue;
            }
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(err(i + 1, format!("expected 7 fields, found {}", f.len())));
            }
            let row = (|| -> std::result::Result<Row, String> {
                Ok(Row {
                    t: num(f[0], "t")?,
                    elapsed_ns: num(f[1], "elapsed_ns")?,
                    primal: num(f[2], "primal")?,
                    dual_gap: num(f[3], "dual_gap")?,
                    step_type: f[4].to_string(),
                    active_set_size: num(f[5], "active_set_size")?,
                    lmo_calls: num(f[6], "lmo_calls")?,
                })
            })()
            .map_err(|e| err(i + 1, e))?;
            rows.push(row);
        }
        Ok(Trajectory { meta, rows })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes") + "\n"
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BenchError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            reason: e.to_string(),
        })
    }

    pub fn write(&self, dir: &Path, format: Format) -> Result<PathBuf> {
        let path = dir.join(format!("{}.{}", self.file_stem(), format.extension()));
        let text = match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        };
        fs::write(&path, text).map_err(|e| BenchError::io(&path, e))?;
        Ok(path)
    }

    /// Reads a trajectory, picking the format from the extension.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        match Format::of_path(path) {
            Some(Format::Json) => Self::from_json(&text, path),
            _ => Self::from_csv(&text, path),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            meta: RunMeta {
                id: "simplex_ls:m=5,n=10,seed=3".into(),
                problem: "simplex_ls".into(),
                dimension: "m=5,n=10".into(),
                variant: "bpcg".into(),
                step: "adaptive:0.9:2".into(),
                epsilon: 1e-7,
                max_time: 60.0,
                seed: 3,
                termination: "gap-reached".into(),
                time: 0.001234567,
                iterations: 2,
                primal: 0.1 + 0.2,
                dual_gap: 3.3e-8,
                lmo_calls: 3,
                alloc_bytes: 4096,
                error: None,
            },
            rows: vec![
                Row {
                    t: 0,
                    elapsed_ns: 10,
                    primal: 1.0 / 3.0,
                    dual_gap: 0.5,
                    step_type: "initial".into(),
                    active_set_size: 1,
                    lmo_calls: 1,
                },
                Row {
                    t: 1,
                    elapsed_ns: 250,
                    primal: std::f64::consts::PI * 1e-9,
                    dual_gap: 5e-324,
                    step_type: "fw".into(),
                    active_set_size: 2,
                    lmo_calls: 2,
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let back = Trajectory::from_csv(&t.to_csv(), Path::new("x.csv")).unwrap();
        assert_eq!(back, t);
        let mut e = sample();
        e.meta.error = Some("numerical failure".into());
        let back = Trajectory::from_csv(&e.to_csv(), Path::new("x.csv")).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = sample();
        let back = Trajectory::from_json(&t.to_json(), Path::new("x.json")).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn file_stem_is_filesystem_safe() {
        let stem = sample().file_stem();
        assert_eq!(stem, "simplex_ls_m-5_n-10_seed-3__bpcg__adaptive_0.9_2");
    }

    #[test]
    fn malformed_files_are_rejected() {
        let p = Path::new("bad.csv");
        assert!(Trajectory::from_csv("", p).is_err());
        assert!(Trajectory::from_csv("# id=x\nt,elapsed_ns\n", p).is_err());
        let mut text = sample().to_csv();
        text.push_str("3,1,nope,0,fw,1,1\n");
        assert!(matches!(
            Trajectory::from_csv(&text, p),
            Err(BenchError::Parse { line: 19, .. })
        ));
    }
}

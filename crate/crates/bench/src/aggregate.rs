//! Summary tables over trajectory files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::trajectory::{Format, RunMeta, Trajectory};
use crate::{BenchError, Result};

/// Gaps below this are raised to it before taking logarithms.
pub const GAP_FLOOR: f64 = 1e-16;

pub const SUMMARY_HEADER: &str = "problem,dimension,variant,step,instances,solved,solved_seeds,\
geomean_time_s,geomean_dual_gap,geostd_dual_gap,mean_alloc_bytes";

pub const CURVE_HEADER: &str = "variant,step,time_s,solved";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub problem: String,
    pub dimension: String,
    pub variant: String,
    pub step: String,
    pub instances: usize,
    pub solved: usize,
    /// Seeds of the solved instances, ascending.
    pub solved_seeds: Vec<u64>,
    pub geomean_time: f64,
    pub geomean_dual_gap: f64,
    pub geostd_dual_gap: f64,
    /// Allocation-counter estimate; best effort.
    pub mean_alloc_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub variant: String,
    pub step: String,
    pub time: f64,
    pub solved: usize,
}

/// Geometric mean over the strictly positive finite entries; NaN if none.
pub fn geometric_mean(values: &[f64]) -> f64 {
    let logs: Vec<f64> = positive_logs(values);
    if logs.is_empty() {
        return f64::NAN;
    }
    (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Population geometric standard deviation, `exp(sd(ln x))`, over the
/// strictly positive finite entries.
pub fn geometric_std(values: &[f64]) -> f64 {
    let logs = positive_logs(values);
    if logs.is_empty() {
        return f64::NAN;
    }
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    var.sqrt().exp()
}

fn positive_logs(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .filter(|v| **v > 0.0 && v.is_finite())
        .map(|v| v.ln())
        .collect()
}

fn floored_gaps(runs: &[&RunMeta]) -> Vec<f64> {
    runs.iter()
        .map(|m| {
            if m.dual_gap >= 0.0 {
                m.dual_gap.max(GAP_FLOOR)
            } else {
                m.dual_gap
            }
        })
        .collect()
}

pub fn summarize(runs: &[RunMeta]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str, &str, &str), Vec<&RunMeta>> = BTreeMap::new();
    for m in runs {
        groups
            .entry((&m.problem, &m.dimension, &m.variant, &m.step))
            .or_default()
            .push(m);
    }
    groups
        .into_iter()
        .map(|((problem, dimension, variant, step), mut g)| {
            g.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.id.cmp(&b.id)));
            let times: Vec<f64> = g.iter().map(|m| m.time).collect();
            let gaps = floored_gaps(&g);
            let solved_seeds: Vec<u64> = g.iter().filter(|m| m.solved()).map(|m| m.seed).collect();
            SummaryRow {
                problem: problem.to_string(),
                dimension: dimension.to_string(),
                variant: variant.to_string(),
                step: step.to_string(),
                instances: g.len(),
                solved: solved_seeds.len(),
                solved_seeds,
                geomean_time: geometric_mean(&times),
                geomean_dual_gap: geometric_mean(&gaps),
                geostd_dual_gap: geometric_std(&gaps),
                mean_alloc_bytes: g.iter().map(|m| m.alloc_bytes).sum::<u64>() / g.len() as u64,
            }
        })
        .collect()
}

/// Cumulative solved count against completion time, per variant and step.
pub fn solved_curve(runs: &[RunMeta]) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for m in runs {
        let times = groups.entry((&m.variant, &m.step)).or_default();
        if m.solved() {
            times.push(m.time);
        }
    }
    let mut out = Vec::new();
    for ((variant, step), mut times) in groups {
        times.sort_by(f64::total_cmp);
        for (i, time) in times.into_iter().enumerate() {
            out.push(CurvePoint {
                variant: variant.to_string(),
                step: step.to_string(),
                time,
                solved: i + 1,
            });
        }
    }
    out
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let seeds: Vec<String> = r.solved_seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:e},{},{}",
            field(&r.problem),
            field(&r.dimension),
            field(&r.variant),
            field(&r.step),
            r.instances,
            r.solved,
            seeds.join(";"),
            r.geomean_time,
            r.geomean_dual_gap,
            r.geostd_dual_gap,
            r.mean_alloc_bytes
        );
    }
    out
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            field(&p.variant),
            field(&p.step),
            p.time,
            p.solved
        );
    }
    out
}

/// Output paths of one aggregation.
#[derive(Debug, Clone)]
pub struct Written {
    pub summary: PathBuf,
    pub curve: PathBuf,
    pub runs: usize,
    pub skipped: usize,
}

/// Writes `summary` and `solved_curve` files for `runs` into `dir`.
pub fn write_summary(runs: &[RunMeta], dir: &Path, format: Format) -> Result<(PathBuf, PathBuf)> {
    let rows = summarize(runs);
    let curve = solved_curve(runs);
    let ext = format.extension();
    let summary_path = dir.join(format!("summary.{ext}"));
    let curve_path = dir.join(format!("solved_curve.{ext}"));
    let (s, c) = match format {
        Format::Csv => (summary_csv(&rows), curve_csv(&curve)),
        Format::Json => (
            serde_json::to_string_pretty(&rows).expect("summary serializes") + "\n",
            serde_json::to_string_pretty(&curve).expect("curve serializes") + "\n",
        ),
    };
    fs::write(&summary_path, s).map_err(|e| BenchError::io(&summary_path, e))?;
    fs::write(&curve_path, c).map_err(|e| BenchError::io(&curve_path, e))?;
    Ok((summary_path, curve_path))
}

/// Trajectory files under `paths`; directories are scanned one level deep.
/// Summary outputs are not trajectories and are left out.
pub fn collect_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| BenchError::io(p, e))?;
            for entry in entries {
                let path = entry.map_err(|e| BenchError::io(p, e))?.path();
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
                if path.is_file()
                    && Format::of_path(&path).is_some()
                    && stem != "summary"
                    && stem != "solved_curve"
                {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

/// Reads every file, skipping malformed ones with a warning on stderr, and
/// writes the summary files into `dir`.
pub fn aggregate(files: &[PathBuf], dir: &Path, format: Format) -> Result<Written> {
    let mut runs = Vec::new();
    let mut skipped = 0;
    for f in files {
        match Trajectory::read(f) {
            Ok(t) => runs.push(t.meta),
            Err(e) => {
                eprintln!("warning: skipping {e}");
                skipped += 1;
            }
        }
    }
    if runs.is_empty() {
        return Err(BenchError::usage("no readable trajectory files"));
    }
    let (summary, curve) = write_summary(&runs, dir, format)?;
    Ok(Written {
        summary,
        curve,
        runs: runs.len(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(variant: &str, seed: u64, time: f64, gap: f64, termination: &str) -> RunMeta {
        RunMeta {
            id: format!("ksparse:n=20,k=3,seed={seed}"),
            problem: "ksparse".into(),
            dimension: "n=20,k=3".into(),
            variant: variant.into(),
            step: "adaptive:0.9:2".into(),
            epsilon: 1e-7,
            max_time: 60.0,
            seed,
            termination: termination.into(),
            time,
            iterations: 10,
            primal: 0.0,
            dual_gap: gap,
            lmo_calls: 5,
            alloc_bytes: 100 * (seed + 1),
            error: None,
        }
    }

    #[test]
    fn log_mean_of_two_gaps() {
        let g = geometric_mean(&[1e-7, 1e-9]);
        assert!((g / 1e-8 - 1.0).abs() < 1e-12, "{g}");
        assert!(geometric_mean(&[0.0, -1.0]).is_nan());
        assert_eq!(geometric_mean(&[0.0, 4.0, 1.0]), 2.0);
    }

    #[test]
    fn zero_gaps_are_floored() {
        let runs = [
            meta("fw", 0, 1.0, 0.0, "gap-reached"),
            meta("fw", 1, 1.0, 1e-8, "gap-reached"),
        ];
        let row = &summarize(&runs)[0];
        assert!((row.geomean_dual_gap / 1e-12 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_std_by_hand() {
        // ln gaps are -10 ln10, -8 ln10, -6 ln10: deviations ±2 ln10 and 0.
        let runs = [
            meta("bpcg", 0, 1.0, 1e-10, "gap-reached"),
            meta("bpcg", 1, 2.0, 1e-8, "gap-reached"),
            meta("bpcg", 2, 4.0, 1e-6, "time-limit"),
        ];
        let row = &summarize(&runs)[0];
        let expected = (2.0 * 10f64.ln() * (2.0f64 / 3.0).sqrt()).exp();
        assert!((row.geostd_dual_gap / expected - 1.0).abs() < 1e-12);
        assert!((row.geomean_time - 2.0).abs() < 1e-12);
        assert_eq!(row.solved, 2);
        assert_eq!(row.solved_seeds, vec![0, 1]);
        assert_eq!(row.mean_alloc_bytes, 200);
    }

    #[test]
    fn staircase_counts_solved_runs_only() {
        let runs = [
            meta("fw", 0, 3.0, 1e-8, "gap-reached"),
            meta("fw", 1, 60.0, 1e-3, "time-limit"),
        ];
        let curve = solved_curve(&runs);
        assert_eq!(curve.len(), 1);
        assert_eq!((curve[0].time, curve[0].solved), (3.0, 1));
        let row = &summarize(&runs)[0];
        assert_eq!((row.solved, row.instances), (1, 2));
    }

    #[test]
    fn dimension_with_commas_is_quoted() {
        let csv = summary_csv(&summarize(&[meta("fw", 0, 1.0, 1e-8, "gap-reached")]));
        assert!(csv
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("ksparse,\"n=20,k=3\",fw,"));
    }
}

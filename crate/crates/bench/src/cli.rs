//! `condgrad` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use condgrad::algorithms::Variant;
use condgrad::problems::{desk_scale, ProblemKind, ProblemSpec};
use condgrad::stepsize::StepRule;
use rayon::prelude::*;

use crate::aggregate::{aggregate, collect_files, write_summary};
use crate::run::RunSpec;
use crate::trajectory::{Format, Trajectory};
use crate::{BenchError, Result};

pub const DEFAULT_OUT: &str = "results";

#[derive(Debug, Parser)]
#[command(
    name = "condgrad",
    version,
    about = "Conditional-gradient benchmark harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every (problem, variant) pair and write trajectories plus a summary.
    Run(RunArgs),
    /// Summarize existing trajectory files or directories.
    Aggregate(AggregateArgs),
    /// Print the variant, problem and step-rule registries.
    List,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Problem id such as `simplex_ls:m=50,n=100,seed=1`, a bare problem
    /// name for its defaults, or `all`. Repeatable.
    #[arg(long = "problem")]
    pub problems: Vec<String>,
    /// Variant tag or `all`. Repeatable; defaults to `all`.
    #[arg(long = "variant")]
    pub variants: Vec<String>,
    /// Step-size rule, e.g. `adaptive`, `agnostic:2`, `short:4`, `exact`.
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Seconds per run.
    #[arg(long = "max-time")]
    pub max_time: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Overrides the seed of every problem.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `first:count`, expands every problem over consecutive seeds.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Use the lazified counterpart of each variant.
    #[arg(long)]
    pub lazy: bool,
    /// Output directory; falls back to `CONDGRAD_OUT`, then `results`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// `key=value` file using the long flag names; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the registries and exit.
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Trajectory files or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory; defaults to the first input directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn main<I: IntoIterator<Item = OsString>>(args: I) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::List => {
            print!("{}", registries());
            Ok(())
        }
        Command::Run(args) if args.list => {
            print!("{}", registries());
            Ok(())
        }
        Command::Run(args) => run(args),
        Command::Aggregate(args) => {
            let files = collect_files(&args.inputs)?;
            if files.is_empty() {
                return Err(BenchError::usage("no trajectory files found"));
            }
            let dir = match args.out {
                Some(d) => d,
                None => default_aggregate_dir(&args.inputs),
            };
            fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
            let w = aggregate(&files, &dir, args.format)?;
            println!("{}", w.summary.display());
            println!("{}", w.curve.display());
            eprintln!("{} runs aggregated, {} skipped", w.runs, w.skipped);
            Ok(())
        }
    }
}

fn default_aggregate_dir(inputs: &[PathBuf]) -> PathBuf {
    let first = &inputs[0];
    if first.is_dir() {
        first.clone()
    } else {
        first.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

pub fn registries() -> String {
    let mut s = String::from("variants:\n");
    for v in Variant::ALL {
        s.push_str(&format!("  {v}\n"));
    }
    s.push_str("problems:\n");
    for spec in desk_scale() {
        s.push_str(&format!("  {spec}\n"));
    }
    s.push_str("steps:\n");
    for tag in [
        "adaptive[:eta:tau]",
        "agnostic[:ell]",
        "log-agnostic",
        "monotonic",
        "secant",
        "short:L",
        "exact",
    ] {
        s.push_str(&format!("  {tag}\n"));
    }
    s
}

/// Settings after merging flags, config file and environment.
#[derive(Debug, Clone)]
pub struct Plan {
    pub runs: Vec<RunSpec>,
    pub out: PathBuf,
    pub jobs: usize,
    pub format: Format,
}

fn parse_config(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            BenchError::usage(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        map.entry(k.trim().to_string())
            .or_default()
            .push(v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| BenchError::usage(format!("bad value `{v}` for `{key}`")))
}

/// Fills unset flags from the config file.
fn merge_config(mut a: RunArgs) -> Result<RunArgs> {
    let Some(path) = a.config.clone() else {
        return Ok(a);
    };
    let map = parse_config(&path)?;
    for (k, vals) in map {
        let last = vals.last().cloned().unwrap_or_default();
        match k.as_str() {
            "problem" if a.problems.is_empty() => a.problems = vals,
            "variant" if a.variants.is_empty() => a.variants = vals,
            "problem" | "variant" => {}
            "step" => a.step = a.step.or(Some(last)),
            "epsilon" => a.epsilon = a.epsilon.or(Some(parse(&k, &last)?)),
            "max-time" => a.max_time = a.max_time.or(Some(parse(&k, &last)?)),
            "max-iters" => a.max_iters = a.max_iters.or(Some(parse(&k, &last)?)),
            "seed" => a.seed = a.seed.or(Some(parse(&k, &last)?)),
            "seeds" => a.seeds = a.seeds.or(Some(last)),
            "kappa" => a.kappa = a.kappa.or(Some(parse(&k, &last)?)),
            "lazy" => a.lazy = a.lazy || parse::<bool>(&k, &last)?,
            "out" => a.out = a.out.or(Some(PathBuf::from(last))),
            "jobs" => a.jobs = a.jobs.or(Some(parse(&k, &last)?)),
            "format" => {
                if a.format.is_none() {
                    a.format = Some(match last.as_str() {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        _ => {
                            return Err(BenchError::usage(format!(
                                "bad value `{last}` for `format`"
                            )))
                        }
                    });
                }
            }
            other => return Err(BenchError::usage(format!("unknown config key `{other}`"))),
        }
    }
    Ok(a)
}

fn problem_specs(ids: &[String]) -> Result<Vec<ProblemSpec>> {
    if ids.is_empty() {
        return Err(BenchError::usage("at least one --problem is required"));
    }
    let mut specs = Vec::new();
    for id in ids {
        if id == "all" {
            specs.extend(desk_scale());
        } else if let Ok(kind) = id.parse::<ProblemKind>() {
            specs.push(ProblemSpec::new(kind));
        } else {
            specs.push(
                id.parse()
                    .map_err(|e: condgrad::Error| BenchError::usage(e.to_string()))?,
            );
        }
    }
    Ok(specs)
}

fn seeds(a: &RunArgs) -> Result<Option<Vec<u64>>> {
    match (&a.seed, &a.seeds) {
        (Some(_), Some(_)) => Err(BenchError::usage("--seed and --seeds are exclusive")),
        (Some(s), None) => Ok(Some(vec![*s])),
        (None, Some(range)) => {
            let (first, count) = range.split_once(':').ok_or_else(|| {
                BenchError::usage(format!("--seeds expects first:count, got `{range}`"))
            })?;
            let first: u64 = parse("seeds", first)?;
            let count: u64 = parse("seeds", count)?;
            if count == 0 {
                return Err(BenchError::usage("--seeds count must be positive"));
            }
            Ok(Some((first..first + count).collect()))
        }
        (None, None) => Ok(None),
    }
}

/// Resolves the grid. Explicitly requested variants that do not fit a
/// problem are errors; `all` silently keeps the applicable ones.
pub fn plan(args: RunArgs) -> Result<Plan> {
    let a = merge_config(args)?;
    let mut specs = problem_specs(&a.problems)?;
    if let Some(seeds) = seeds(&a)? {
        specs = specs
            .iter()
            .flat_map(|s| seeds.iter().map(|&seed| s.clone().with_seed(seed)))
            .collect();
    }
    let variant_tags = if a.variants.is_empty() {
        vec!["all".to_string()]
    } else {
        a.variants.clone()
    };
    let mut variants: Vec<(Variant, bool)> = Vec::new();
    for tag in &variant_tags {
        if tag == "all" {
            variants.extend(Variant::ALL.iter().map(|&v| (v, false)));
        } else {
            let v: Variant = tag
                .parse()
                .map_err(|e: condgrad::Error| BenchError::usage(e.to_string()))?;
            variants.push((v, true));
        }
    }
    if a.lazy {
        let mut lazy = Vec::new();
        for (v, explicit) in variants {
            match v.lazified() {
                Some(l) => lazy.push((l, explicit)),
                None if explicit => {
                    return Err(BenchError::usage(format!(
                        "variant `{v}` has no lazy counterpart"
                    )))
                }
                None => {}
            }
        }
        variants = lazy;
    }
    // Keep the first occurrence, preferring the explicit flag.
    let mut seen: BTreeMap<Variant, bool> = BTreeMap::new();
    let mut order = Vec::new();
    for (v, explicit) in variants {
        match seen.get_mut(&v) {
            Some(e) => *e |= explicit,
            None => {
                seen.insert(v, explicit);
                order.push(v);
            }
        }
    }
    let step: StepRule = match &a.step {
        Some(s) => s
            .parse()
            .map_err(|e: condgrad::Error| BenchError::usage(e.to_string()))?,
        None => StepRule::default(),
    };
    let epsilon = a.epsilon.unwrap_or(1e-7);
    if !(epsilon > 0.0) {
        return Err(BenchError::usage("--epsilon must be positive"));
    }
    let max_time = a.max_time.unwrap_or(60.0);
    let max_time = Duration::try_from_secs_f64(max_time)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| BenchError::usage("--max-time must be a positive number of seconds"))?;

    let mut runs = Vec::new();
    for spec in &specs {
        let inst = spec.build().map_err(|e| BenchError::usage(e.to_string()))?;
        for &v in &order {
            let explicit = seen[&v];
            let mut run = RunSpec::new(spec.clone(), v);
            run.step = step;
            run.epsilon = epsilon;
            run.max_time = max_time;
            run.max_iterations = a.max_iters.unwrap_or(usize::MAX);
            run.kappa = a.kappa.unwrap_or(2.0);
            let fits = v.applicable(inst.objective.as_ref(), inst.lmo.as_ref())
                && (!matches!(step, StepRule::Exact) || inst.is_quadratic());
            if fits {
                runs.push(run);
            } else if explicit {
                // Surfaces the precise reason.
                run.prepare()?;
            }
        }
    }
    if runs.is_empty() {
        return Err(BenchError::usage("no applicable (problem, variant) pairs"));
    }
    let out = a
        .out
        .or_else(|| std::env::var_os("CONDGRAD_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let jobs = match a.jobs {
        Some(0) => return Err(BenchError::usage("--jobs must be positive")),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(Plan {
        runs,
        out,
        jobs,
        format: a.format.unwrap_or_default(),
    })
}

fn run(args: RunArgs) -> Result<()> {
    let plan = plan(args)?;
    fs::create_dir_all(&plan.out).map_err(|e| BenchError::io(&plan.out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| BenchError::usage(format!("worker pool: {e}")))?;
    let results: Vec<Result<Trajectory>> = pool.install(|| {
        plan.runs
            .par_iter()
            .map(|r| {
                let inst = r.prepare()?;
                let traj = r.execute(&inst)?;
                traj.write(&plan.out, plan.format)?;
                let m = &traj.meta;
                eprintln!(
                    "{} {} {}: {} gap={:e} t={:.3}s",
                    m.id, m.variant, m.step, m.termination, m.dual_gap, m.time
                );
                Ok(traj)
            })
            .collect()
    });
    let mut metas = Vec::with_capacity(results.len());
    for r in results {
        metas.push(r?.meta);
    }
    let (summary, curve) = write_summary(&metas, &plan.out, plan.format)?;
    println!("{}", summary.display());
    println!("{}", curve.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(problems: &[&str], variants: &[&str]) -> RunArgs {
        RunArgs {
            problems: problems.iter().map(|s| s.to_string()).collect(),
            variants: variants.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn all_variants_skip_inapplicable_pairs() {
        let p = plan(args(&["nuclear"], &["all"])).unwrap();
        assert!(p.runs.iter().all(|r| !r.variant.needs_in_face()));
        assert!(p.runs.iter().any(|r| r.variant == Variant::Bpcg));
        let p = plan(args(&["birkhoff"], &[])).unwrap();
        assert!(p.runs.iter().any(|r| r.variant == Variant::Dicg));
    }

    #[test]
    fn explicit_mismatch_is_usage_error() {
        let e = plan(args(&["nuclear"], &["dicg"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = plan(args(&["nope"], &["fw"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = plan(args(&["ksparse"], &["warp"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn seeds_expand_every_problem() {
        let mut a = args(&["ksparse", "birkhoff"], &["bpcg"]);
        a.seeds = Some("5:3".into());
        let p = plan(a).unwrap();
        let seeds: Vec<u64> = p.runs.iter().map(|r| r.problem.seed()).collect();
        assert_eq!(seeds, vec![5, 6, 7, 5, 6, 7]);
        let mut a = args(&["ksparse"], &["bpcg"]);
        a.seed = Some(1);
        a.seeds = Some("1:2".into());
        assert!(plan(a).is_err());
    }

    #[test]
    fn lazy_maps_to_counterparts() {
        let mut a = args(&["ksparse"], &["fw", "bpcg"]);
        a.lazy = true;
        let v: Vec<Variant> = plan(a).unwrap().runs.iter().map(|r| r.variant).collect();
        assert_eq!(v, vec![Variant::LazyFw, Variant::LazyBpcg]);
        let mut a = args(&["birkhoff"], &["dicg"]);
        a.lazy = true;
        assert!(plan(a).is_err());
    }

    #[test]
    fn config_fills_unset_flags_only() {
        let dir = std::env::temp_dir().join(format!("condgrad-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("grid.conf");
        fs::write(
            &path,
            "# grid\nproblem=ksparse\nvariant=fw\nvariant=afw\nepsilon=1e-5\nmax-time=2\njobs=3\nformat=json\n",
        )
        .unwrap();
        let mut a = args(&[], &[]);
        a.config = Some(path.clone());
        a.epsilon = Some(1e-6);
        let p = plan(a).unwrap();
        assert_eq!(p.runs.len(), 2);
        assert_eq!(p.runs[0].epsilon, 1e-6);
        assert_eq!(p.runs[0].max_time, Duration::from_secs(2));
        assert_eq!((p.jobs, p.format), (3, Format::Json));
        fs::write(&path, "colour=blue\n").unwrap();
        let mut a = args(&["ksparse"], &[]);
        a.config = Some(path);
        assert_eq!(plan(a).unwrap_err().exit_code(), 2);
        let _ = fs::remove_dir_all(dir);
    }

    #[test]
    fn exact_step_only_on_quadratics() {
        let mut a = args(&["d_criterion"], &["fw"]);
        a.step = Some("exact".into());
        assert_eq!(plan(a).unwrap_err().exit_code(), 2);
        let mut a = args(&["simplex_ls", "d_criterion"], &["all"]);
        a.step = Some("exact".into());
        assert!(plan(a)
            .unwrap()
            .runs
            .iter()
            .all(|r| r.problem.kind == ProblemKind::SimplexLs));
    }
}

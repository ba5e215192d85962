//! Run configuration, solver-versus-reference orchestration and CSV output.
//!
//! Configuration is resolved in three layers: the problem preset, then an
//! optional flat `key = value` file, then command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::aggregate::{run_me_fsc, MeFscConfig, MomentSeries};
use crate::element::{step_count, ElementDiagnostics, SolverSettings, WarmStart};
use crate::flowmap::germ_range;
use crate::problems::{Oscillator, Preset, ProblemId};
use crate::reference::{
    error_metrics, exact_problem1_moments, monte_carlo_moments, quasi_exact_moments, time_grid, ErrorSeries,
    MonteCarloConfig, ReferenceKind, QUASI_EXACT_REFINEMENT, REFERENCE_POINTS,
};
use crate::{Error, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "MEFSC_WORKERS";

pub const MOMENTS_FILE: &str = "moments.csv";
pub const ERRORS_FILE: &str = "errors.csv";

#[derive(Debug, Parser)]
#[command(name = "mefsc", version, about = "Multi-element flow-driven spectral chaos benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a benchmark problem and compare it against a reference.
    Run(RunArgs),
}

#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// Benchmark problem 1-4.
    #[arg(long)]
    pub problem: Option<String>,
    /// Named input law of the problem, e.g. uniform, beta, gamma, normal.
    #[arg(long)]
    pub distribution: Option<String>,
    /// Number of germs P; the basis has at most P + 1 vectors.
    #[arg(long)]
    pub basis: Option<usize>,
    /// Element counts per random axis, comma separated.
    #[arg(long)]
    pub elements: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub warmstart_degree: Option<usize>,
    /// Warm-start length in seconds; 0 disables it.
    #[arg(long)]
    pub warmstart_duration: Option<f64>,
    /// closed_form, quasi_exact or monte_carlo.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to $MEFSC_WORKERS, then the CPU count.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory for moments.csv and errors.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key = value file using the flag names as keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub distribution: String,
    pub basis: usize,
    pub elements: Vec<usize>,
    pub dt: f64,
    pub duration: f64,
    pub warm_start: Option<WarmStart>,
    pub reference: ReferenceKind,
    pub mc_samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

const FILE_KEYS: &[&str] = &[
    "problem",
    "distribution",
    "basis",
    "elements",
    "dt",
    "duration",
    "warmstart-degree",
    "warmstart-duration",
    "reference",
    "mc-samples",
    "seed",
    "workers",
    "out",
];

/// Parse a flat `key = value` file. Blank lines and `#` comments are
/// skipped; `_` and `-` are interchangeable in keys.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key = value, got `{line}`", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "config line {}: unknown key `{key}`; known keys are {}",
                i + 1,
                FILE_KEYS.join(", ")
            )));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("config line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_elements(value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse_value("elements", v)).collect()
}

/// Parse command-line arguments (program name first) into a configuration.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    let Command::Run(run) = cli.command;
    let env = std::env::var(WORKERS_ENV).ok();
    RunConfig::resolve(&run, env.as_deref())
}

impl RunConfig {
    /// Layer preset, config file and flags. `env_workers` is the value of
    /// [`WORKERS_ENV`], if set.
    pub fn resolve(args: &RunArgs, env_workers: Option<&str>) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        // flag value, else file value
        let pick = |flag: Option<String>, key: &str| flag.or_else(|| file.get(key).cloned());

        let problem: ProblemId = pick(args.problem.clone(), "problem")
            .ok_or_else(|| Error::Config("missing problem id: pass --problem 1|2|3|4".into()))?
            .parse()?;
        let preset = Preset::for_problem(problem);

        let distribution = pick(args.distribution.clone(), "distribution").unwrap_or(preset.distribution.to_string());
        let basis = match pick(args.basis.map(|v| v.to_string()), "basis") {
            Some(v) => parse_value("basis", &v)?,
            None => preset.basis,
        };
        let elements = match pick(args.elements.clone(), "elements") {
            Some(v) => parse_elements(&v)?,
            None => preset.elements.clone(),
        };
        let dt = match pick(args.dt.map(|v| v.to_string()), "dt") {
            Some(v) => parse_value("dt", &v)?,
            None => preset.dt,
        };
        let duration = match pick(args.duration.map(|v| v.to_string()), "duration") {
            Some(v) => parse_value("duration", &v)?,
            None => preset.duration,
        };
        let ws_degree: Option<usize> = match pick(args.warmstart_degree.map(|v| v.to_string()), "warmstart-degree") {
            Some(v) => Some(parse_value("warmstart-degree", &v)?),
            None => preset.warm_start.map(|w| w.degree),
        };
        let ws_duration: Option<f64> =
            match pick(args.warmstart_duration.map(|v| v.to_string()), "warmstart-duration") {
                Some(v) => Some(parse_value("warmstart-duration", &v)?),
                None => preset.warm_start.map(|w| w.duration),
            };
        let warm_start = match (ws_degree, ws_duration) {
            (_, Some(d)) if d == 0.0 => None,
            (Some(degree), Some(duration)) => Some(WarmStart { degree, duration }),
            (None, Some(_)) => {
                return Err(Error::Config(
                    "--warmstart-duration needs --warmstart-degree for this problem".into(),
                ))
            }
            (Some(_), None) => {
                return Err(Error::Config(
                    "--warmstart-degree needs --warmstart-duration for this problem".into(),
                ))
            }
            (None, None) => None,
        };
        let reference = match pick(args.reference.clone(), "reference") {
            Some(v) => v.parse()?,
            None => preset.reference,
        };
        let mc_samples = match pick(args.mc_samples.map(|v| v.to_string()), "mc-samples") {
            Some(v) => parse_value("mc-samples", &v)?,
            None => preset.mc_samples,
        };
        let seed = match pick(args.seed.map(|v| v.to_string()), "seed") {
            Some(v) => parse_value("seed", &v)?,
            None => 1,
        };
        let workers = match pick(args.workers.map(|v| v.to_string()), "workers") {
            Some(v) => parse_value("workers", &v)?,
            None => match env_workers {
                Some(v) => parse_value(WORKERS_ENV, v)?,
                None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            },
        };
        let out = pick(args.out.as_ref().map(|p| p.display().to_string()), "out")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("mefsc-out"));

        let cfg = Self {
            problem,
            distribution,
            basis,
            elements,
            dt,
            duration,
            warm_start,
            reference,
            mc_samples,
            seed,
            workers,
            out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Preset values for a problem with the given output directory.
    pub fn preset(problem: ProblemId, out: impl Into<PathBuf>) -> Self {
        let p = Preset::for_problem(problem);
        Self {
            problem,
            distribution: p.distribution.to_string(),
            basis: p.basis,
            elements: p.elements,
            dt: p.dt,
            duration: p.duration,
            warm_start: p.warm_start,
            reference: p.reference,
            mc_samples: p.mc_samples,
            seed: 1,
            workers: 1,
            out: out.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.problem.model();
        step_count(self.dt, self.duration)?;
        let (min, max) = germ_range(model.as_ref());
        if self.basis < min || self.basis > max {
            return Err(Error::Config(format!(
                "--basis {} is outside [{min}, {max}] for problem {}: P must cover the {} state components",
                self.basis,
                self.problem,
                model.state_dim()
            )));
        }
        if self.elements.len() != model.param_dim() {
            return Err(Error::Config(format!(
                "--elements needs {} comma-separated counts for problem {}, got {}",
                model.param_dim(),
                self.problem,
                self.elements.len()
            )));
        }
        if self.elements.contains(&0) {
            return Err(Error::Config("--elements counts must be at least 1".into()));
        }
        Preset::distributions(self.problem, &self.distribution)?;
        if self.reference == ReferenceKind::ClosedForm && self.problem != ProblemId::Oscillator {
            return Err(Error::Config(format!(
                "closed_form reference exists only for problem 1; use quasi_exact or monte_carlo for problem {}",
                self.problem
            )));
        }
        if self.reference == ReferenceKind::MonteCarlo && self.mc_samples == 0 {
            return Err(Error::Config("--mc-samples must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        if let Some(ws) = self.warm_start {
            if !(ws.duration > 0.0) || !ws.duration.is_finite() {
                return Err(Error::Config("--warmstart-duration must be a finite non-negative number".into()));
            }
        }
        Ok(())
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub solver: MomentSeries,
    pub reference: MomentSeries,
    pub errors: ErrorSeries,
    pub diagnostics: ElementDiagnostics,
    pub solver_seconds: f64,
    pub reference_seconds: f64,
}

impl RunReport {
    pub fn summary_line(&self, cfg: &RunConfig) -> String {
        let mut s = format!(
            "problem {} {} P={} E={} steps={} reference={}",
            cfg.problem,
            cfg.distribution,
            cfg.basis,
            cfg.elements.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("x"),
            self.solver.len().saturating_sub(1),
            cfg.reference
        );
        for (l, name) in self.errors.components.iter().enumerate() {
            s.push_str(&format!(
                " eps_G[mean {name}]={:.3e} eps_G[var {name}]={:.3e}",
                self.errors.mean_global[l], self.errors.variance_global[l]
            ));
        }
        s.push_str(&format!(
            " solver={:.2}s reference={:.2}s",
            self.solver_seconds, self.reference_seconds
        ));
        s
    }
}

/// Run the spectral solver and the configured reference.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let model = cfg.problem.model();
    let laws = Preset::distributions(cfg.problem, &cfg.distribution)?;
    let steps = step_count(cfg.dt, cfg.duration)?;

    let started = Instant::now();
    let run = run_me_fsc(
        model.as_ref(),
        &MeFscConfig {
            distributions: laws.solver.clone(),
            elements: cfg.elements.clone(),
            solver: SolverSettings {
                basis: cfg.basis,
                dt: cfg.dt,
                warm_start: cfg.warm_start,
                diagnostics: false,
            },
            duration: cfg.duration,
            workers: cfg.workers,
            keep_local: false,
        },
    )?;
    let solver_seconds = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let reference = match cfg.reference {
        ReferenceKind::ClosedForm => {
            exact_problem1_moments(&Oscillator::benchmark(), &laws.reference[0], &time_grid(cfg.dt, steps))?
        }
        ReferenceKind::QuasiExact => quasi_exact_moments(
            model.as_ref(),
            &laws.reference,
            cfg.dt,
            steps,
            REFERENCE_POINTS,
            QUASI_EXACT_REFINEMENT,
        )?,
        ReferenceKind::MonteCarlo => monte_carlo_moments(
            model.as_ref(),
            &laws.reference,
            &MonteCarloConfig {
                samples: cfg.mc_samples,
                dt: cfg.dt,
                steps,
                seed: cfg.seed,
                workers: cfg.workers,
            },
        )?,
    };
    let reference_seconds = started.elapsed().as_secs_f64();
    let errors = error_metrics(&run.series, &reference)?;
    Ok(RunReport {
        solver: run.series,
        reference,
        errors,
        diagnostics: run.diagnostics,
        solver_seconds,
        reference_seconds,
    })
}

/// Run, write `moments.csv` and `errors.csv` into `cfg.out` and print the
/// summary line.
pub fn run_and_emit(cfg: &RunConfig) -> Result<RunReport> {
    let report = run(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    write_moments(&cfg.out.join(MOMENTS_FILE), &report.solver, &report.reference)?;
    write_errors(&cfg.out.join(ERRORS_FILE), &report.errors)?;
    println!("{}", report.summary_line(cfg));
    Ok(report)
}

/// 17 significant digits, enough to round-trip every f64.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Columns: `t`, solver `mean_c`/`var_c` per component, then reference
/// `ref_mean_c`/`ref_var_c`.
pub fn write_moments(path: &Path, solver: &MomentSeries, reference: &MomentSeries) -> Result<()> {
    if solver.len() != reference.len() || solver.components != reference.components {
        return Err(Error::GridMismatch);
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    for prefix in ["", "ref_"] {
        for c in &solver.components {
            header.push(format!("{prefix}mean_{c}"));
            header.push(format!("{prefix}var_{c}"));
        }
    }
    w.write_record(&header)?;
    for i in 0..solver.len() {
        let mut row = vec![fmt(solver.times[i])];
        for s in [solver, reference] {
            for l in 0..s.components.len() {
                row.push(fmt(s.mean[l][i]));
                row.push(fmt(s.variance[l][i]));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_moments`].
pub fn read_moments(path: &Path) -> Result<(MomentSeries, MomentSeries)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let components: Vec<String> = header
        .iter()
        .filter_map(|h| h.strip_prefix("mean_"))
        .map(str::to_string)
        .collect();
    let n = components.len();
    if header.len() != 1 + 4 * n {
        return Err(Error::Config(format!("{}: unexpected moments header", path.display())));
    }
    let mut solver = MomentSeries::new(components.clone());
    let mut reference = MomentSeries::new(components);
    for record in r.records() {
        let record = record?;
        let v: Vec<f64> = record.iter().map(|f| parse_value("moments.csv", f)).collect::<Result<_>>()?;
        let pick = |offset: usize, k: usize| -> Vec<f64> { (0..n).map(|l| v[1 + offset + 2 * l + k]).collect() };
        solver.push(v[0], &pick(0, 0), &pick(0, 1));
        reference.push(v[0], &pick(2 * n, 0), &pick(2 * n, 1));
    }
    Ok((solver, reference))
}

/// Columns: `t`, `err_mean_c`/`err_var_c` per component; the last row is
/// tagged `GLOBAL` and holds the time-averaged errors.
pub fn write_errors(path: &Path, errors: &ErrorSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    for c in &errors.components {
        header.push(format!("err_mean_{c}"));
        header.push(format!("err_var_{c}"));
    }
    w.write_record(&header)?;
    for i in 0..errors.times.len() {
        let mut row = vec![fmt(errors.times[i])];
        for l in 0..errors.components.len() {
            row.push(fmt(errors.mean[l][i]));
            row.push(fmt(errors.variance[l][i]));
        }
        w.write_record(&row)?;
    }
    let mut row = vec!["GLOBAL".to_string()];
    for l in 0..errors.components.len() {
        row.push(fmt(errors.mean_global[l]));
        row.push(fmt(errors.variance_global[l]));
    }
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

/// Global errors from the `GLOBAL` row of an errors file, as
/// `(column name, value)` pairs.
pub fn read_global_errors(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    for record in r.records() {
        let record = record?;
        if record.get(0) == Some("GLOBAL") {
            return header
                .iter()
                .zip(record.iter())
                .skip(1)
                .map(|(h, v)| Ok((h.to_string(), parse_value(h, v)?)))
                .collect();
        }
    }
    Err(Error::Config(format!("{}: no GLOBAL row", path.display())))
}

/// Process exit code for a run outcome: 0 ok, 2 configuration or I/O
/// error, 3 numerical abort.
pub fn exit_code(result: &Result<RunReport>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) if e.is_numerical() => 3,
        Err(_) => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> Vec<String> {
        let mut v = vec!["mefsc".to_string(), "run".to_string()];
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    }

    #[test]
    fn problem_one_preset() {
        let cfg = parse_config(args(&["--problem", "1", "--workers", "1"])).unwrap();
        assert_eq!(cfg.problem, ProblemId::Oscillator);
        assert_eq!(cfg.distribution, "uniform");
        assert_eq!((cfg.dt, cfg.duration), (1e-3, 150.0));
        assert_eq!(cfg.reference, ReferenceKind::ClosedForm);
        let laws = Preset::distributions(cfg.problem, &cfg.distribution).unwrap();
        assert_eq!(laws.solver[0].support(), (340.0, 460.0));
    }

    #[test]
    fn problem_four_full_partition() {
        let cfg = parse_config(args(&["--problem", "4", "--elements", "8,8,8", "--basis", "6"])).unwrap();
        assert_eq!(cfg.elements.iter().product::<usize>(), 512);
        assert_eq!(cfg.basis, 6);
        assert!(cfg.warm_start.is_none());
    }

    #[test]
    fn missing_problem_is_a_usage_error() {
        let err = parse_config(args(&["--basis", "4"])).unwrap_err();
        assert!(err.to_string().contains("--problem"));
        assert!(parse_config(["mefsc"]).is_err());
    }

    #[test]
    fn invalid_combinations_are_explained() {
        let err = parse_config(args(&["--problem", "2", "--basis", "3"])).unwrap_err();
        assert!(err.to_string().contains("outside [4,"), "{err}");
        assert!(parse_config(args(&["--problem", "3", "--elements", "8"])).is_err());
        assert!(parse_config(args(&["--problem", "2", "--reference", "closed_form"])).is_err());
        assert!(parse_config(args(&["--problem", "1", "--distribution", "normal"])).is_err());
        assert!(parse_config(args(&["--problem", "1", "--dt", "0"])).is_err());
        assert!(parse_config(args(&["--problem", "1", "--bogus", "1"])).is_err());
    }

    #[test]
    fn layers_resolve_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# comment\nproblem = 3\nbasis = 5\nmc_samples = 10\nseed=9\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse_config(args(&["--config", p, "--basis", "4"])).unwrap();
        assert_eq!(cfg.problem, ProblemId::VanDerPol);
        assert_eq!((cfg.basis, cfg.mc_samples, cfg.seed), (4, 10, 9));
        assert_eq!(cfg.elements, vec![8, 8]);

        fs::write(&path, "problem = 1\ncolour = red\n").unwrap();
        let err = parse_config(args(&["--config", p])).unwrap_err();
        assert!(err.to_string().contains("unknown key `colour`"));
    }

    #[test]
    fn worker_default_from_environment() {
        let run = RunArgs {
            problem: Some("1".into()),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(&run, Some("3")).unwrap().workers, 3);
        let run = RunArgs {
            workers: Some(2),
            ..run
        };
        assert_eq!(RunConfig::resolve(&run, Some("3")).unwrap().workers, 2);
    }

    #[test]
    fn warm_start_can_be_disabled() {
        let cfg = parse_config(args(&["--problem", "1", "--warmstart-duration", "0"])).unwrap();
        assert!(cfg.warm_start.is_none());
        let cfg = parse_config(args(&["--problem", "2", "--warmstart-degree", "4"])).unwrap();
        assert_eq!(cfg.warm_start, Some(WarmStart { degree: 4, duration: 1.0 }));
    }

    #[test]
    fn zero_duration_emits_initial_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::preset(ProblemId::Oscillator, dir.path());
        cfg.duration = 0.0;
        cfg.basis = 4;
        let report = run_and_emit(&cfg).unwrap();
        assert_eq!(report.solver.len(), 1);
        let (s, r) = read_moments(&dir.path().join(MOMENTS_FILE)).unwrap();
        assert_eq!(s, report.solver);
        assert_eq!(r, report.reference);
        assert!((s.mean[0][0] - 0.05).abs() < 1e-16);
        let global = read_global_errors(&dir.path().join(ERRORS_FILE)).unwrap();
        assert_eq!(global.len(), 4);
        assert!(global.iter().all(|(_, v)| *v < 1e-15));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Err(Error::Config("x".into()))), 2);
        assert_eq!(exit_code(&Err(Error::NonFinite { t: 1.0, element: 0 })), 3);
        assert_eq!(
            exit_code(&Err(Error::Io(std::io::Error::new(std::io::ErrorKind::Other, "x")))),
            2
        );
    }
}

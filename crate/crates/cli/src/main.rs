//! `adicflow`: batch runner for the experiments described by a JSON configuration.
//!
//! Exit codes: 0 success, 1 usage or I/O problem, 2 invalid input, 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adicflow::experiment::{self, Artifacts, ExperimentConfig, SpectralOutput};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "adicflow", version, about = "Vershik flows on Markov compacta: batch experiments")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the output files; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral data of the graph, or Lyapunov/Oseledets data of the sequence.
    Spectral,
    /// Growth of ergodic integrals over the renormalization scales.
    Deviation,
    /// Distributional limit of normalized ergodic integrals.
    Limit,
    /// Invariant checks of every module.
    Selftest {
        /// Run only the named suite (repeatable).
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Replace every tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
}

enum Failure {
    Usage(String),
    Lib(adicflow::Error),
    Checks(usize),
}

impl From<adicflow::Error> for Failure {
    fn from(e: adicflow::Error) -> Self {
        Failure::Lib(e)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, files: &Artifacts) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            for (name, body) in files {
                let p = dir.join(name);
                fs::write(&p, body).map_err(|e| io_err(&p, e))?;
                println!("{}", p.display());
            }
        }
        None if files.len() == 1 => print!("{}", files[0].1),
        None => {
            for (name, body) in files {
                println!("# {name}");
                print!("{body}");
            }
        }
    }
    Ok(())
}

fn spectral_csv(s: &SpectralOutput) -> Artifacts {
    let mut csv = String::new();
    match s {
        SpectralOutput::Periodic { report, .. } => {
            csv.push_str("index,re,im,modulus,log_modulus[per level],multiplicity,jordan_blocks\n");
            for (i, e) in report.eigenvalues.iter().enumerate() {
                let blocks: Vec<String> = e.jordan_blocks.iter().map(|b| b.to_string()).collect();
                writeln!(
                    csv,
                    "{},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
                    i + 1,
                    e.value.re,
                    e.value.im,
                    e.value.norm(),
                    e.value.norm().ln(),
                    e.multiplicity,
                    blocks.join(" ")
                )
                .unwrap();
            }
        }
        SpectralOutput::Sequence { oseledets, .. } => {
            csv.push_str("index,exponent[per level],ci_low[per level],ci_high[per level]\n");
            if let Some(e) = &oseledets.exponents {
                for (i, v) in e.values.iter().enumerate() {
                    writeln!(csv, "{},{:.12e},{:.12e},{:.12e}", i + 1, v, e.ci[i][0], e.ci[i][1]).unwrap();
                }
            }
        }
    }
    vec![("spectral.csv".into(), csv)]
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Spectral => {
            let s = experiment::cmd_spectral(&load(cli)?)?;
            match cli.format {
                Format::Csv => emit(out, &spectral_csv(&s)),
                Format::Json => emit(out, &vec![("spectral.json".into(), json(&s))]),
            }
        }
        Command::Deviation => {
            let (files, runs) = experiment::cmd_deviation(&load(cli)?)?;
            match cli.format {
                Format::Csv => emit(out, &files),
                Format::Json => {
                    let v: Vec<_> = runs.iter().map(|(n, d)| serde_json::json!({"observable": n, "deviation": d})).collect();
                    emit(out, &vec![("deviation.json".into(), json(&v))])
                }
            }
        }
        Command::Limit => {
            let (files, report) = experiment::cmd_limit(&load(cli)?)?;
            match cli.format {
                Format::Csv => emit(out, &files),
                Format::Json => emit(out, &vec![("limit.json".into(), json(&report))]),
            }
        }
        Command::Selftest { suites, tol } => {
            let results = experiment::cmd_selftest(suites, *tol)?;
            let body = match cli.format {
                Format::Json => json(&results),
                Format::Csv => {
                    let mut s = String::from("suite,check,value,tol,pass\n");
                    for r in &results {
                        if let Some(e) = &r.error {
                            writeln!(s, "{},error: {e},,,false", r.suite).unwrap();
                        }
                        for c in &r.checks {
                            writeln!(s, "{},{},{:.3e},{:.3e},{}", r.suite, c.name, c.value, c.tol, c.pass).unwrap();
                        }
                    }
                    s
                }
            };
            let name = if cli.format == Format::Json { "selftest.json" } else { "selftest.csv" };
            emit(out, &vec![(name.into(), body)])?;
            for r in &results {
                eprintln!("{}: {}", r.suite, if r.passed() { "pass" } else { "FAIL" });
            }
            match results.iter().filter(|r| !r.passed()).count() {
                0 => Ok(()),
                n => Err(Failure::Checks(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
        Err(Failure::Checks(n)) => {
            eprintln!("{n} suite(s) failed");
            ExitCode::from(3)
        }
    }
}

//! Command line front end.
//!
//! ```text
//! liederiv run <CONFIG> [--out DIR] [--only eq1,eq2] [--tol-abs X] [--tol-rel X] [--jobs N] [--fd-oracle]
//! liederiv generate --seed S --count N --profile P --out FILE
//! ```
//!
//! `run` exits with 0 when every report passes, 1 when any identity fails
//! and 2 on configuration or I/O errors. The default output directory comes
//! from `LIEDERIV_OUT`, falling back to `reports`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::calculus::{Identity, IdentityReport};
use crate::error::{Error, Result};
use crate::report::{self, RunMetadata};
use crate::scenario::{generate, Profile, RunOptions, ScenarioFile};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "liederiv", version, about = "Verify Lie derivative identities along curves of diffeomorphisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenarios of a configuration file and write reports.
    Run {
        config: PathBuf,
        #[arg(long, env = "LIEDERIV_OUT", default_value = "reports")]
        out: PathBuf,
        /// Comma-separated identity ids to run.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        #[arg(long)]
        tol_abs: Option<f64>,
        #[arg(long)]
        tol_rel: Option<f64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Also compare time derivatives with finite differences.
        #[arg(long)]
        fd_oracle: bool,
    },
    /// Write a file of random scenarios.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        profile: Profile,
        #[arg(long)]
        out: PathBuf,
    },
}

impl clap::ValueEnum for Profile {
    fn value_variants<'a>() -> &'a [Self] {
        &Profile::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<IdentityReport>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

/// Loads, validates and runs a scenario file; reports come back ordered by
/// identity, then scenario id.
pub fn run_scenarios(file: &ScenarioFile, opts: &RunOptions, jobs: usize) -> Result<Vec<IdentityReport>> {
    let scenarios = file.compile()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let reports: Vec<IdentityReport> = pool.install(|| {
        scenarios
            .par_iter()
            .flat_map_iter(|s| s.run(opts))
            .collect()
    });
    Ok(report::group(&reports).into_values().flatten().collect())
}

pub fn run(config: &Path, out: &Path, opts: &RunOptions, jobs: usize) -> Result<RunOutcome> {
    let file = ScenarioFile::load(config)?;
    let reports = run_scenarios(&file, opts, jobs)?;
    let files = report::write_reports(out, &reports)?;
    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    report::write_metadata(
        out,
        &RunMetadata {
            tool: report::TOOL.to_string(),
            tool_version: report::TOOL_VERSION.to_string(),
            config: config.display().to_string(),
            timestamp_unix,
            jobs,
            reports: reports.len(),
            passed: reports.iter().filter(|r| r.pass).count(),
        },
    )?;
    Ok(RunOutcome { reports, files })
}

fn parse_only(names: &[String]) -> Result<Vec<Identity>> {
    names
        .iter()
        .map(|n| {
            Identity::from_name(n.trim()).ok_or_else(|| Error::Config {
                scenario: "<command line>".into(),
                msg: format!("unknown identity '{n}'"),
            })
        })
        .collect()
}

fn print_reports(reports: &[IdentityReport]) {
    for r in reports {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let detail = match &r.error {
            Some(e) => format!("  error: {e}"),
            None => format!(
                "  max_abs_err={:.3e} max_rel_err={:.3e} coverage={:.2}",
                r.max_abs_err, r.max_rel_err, r.coverage
            ),
        };
        println!("{verdict} {:<13} {}{detail}", r.identity.name(), r.scenario);
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    println!("{passed}/{} reports passed", reports.len());
}

/// Runs the command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Run {
            config,
            out,
            only,
            tol_abs,
            tol_rel,
            jobs,
            fd_oracle,
        } => {
            let only = match only.as_deref().map(parse_only).transpose() {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let opts = RunOptions {
                only,
                tol_abs,
                tol_rel,
                fd_oracle,
                ..RunOptions::default()
            };
            match run(&config, &out, &opts, jobs) {
                Ok(outcome) => {
                    print_reports(&outcome.reports);
                    outcome.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
        Command::Generate {
            seed,
            count,
            profile,
            out,
        } => {
            let text = generate(seed, count, profile).to_json();
            match std::fs::write(&out, text) {
                Ok(()) => EXIT_PASS,
                Err(e) => {
                    eprintln!("error: {}: {e}", out.display());
                    EXIT_CONFIG
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "liederiv", "run", "cfg.json", "--out", "o", "--only", "eq1,bracket", "--tol-abs", "1e-6", "--jobs", "2",
            "--fd-oracle",
        ])
        .unwrap();
        match cli.command {
            Command::Run {
                only, tol_abs, jobs, fd_oracle, ..
            } => {
                assert_eq!(only.unwrap(), vec!["eq1", "bracket"]);
                assert_eq!(tol_abs, Some(1e-6));
                assert_eq!(jobs, 2);
                assert!(fd_oracle);
            }
            _ => panic!("expected run"),
        }
        let cli = Cli::try_parse_from([
            "liederiv", "generate", "--seed", "4", "--count", "2", "--profile", "higher-order-k2", "--out", "f.json",
        ])
        .unwrap();
        assert!(matches!(
            cli.command,
            Command::Generate {
                profile: Profile::HigherOrderK2,
                ..
            }
        ));
        assert!(Cli::try_parse_from(["liederiv", "generate", "--seed", "1", "--count", "1", "--profile", "cubic", "--out", "x"]).is_err());
    }

    #[test]
    fn unknown_only_is_config_error() {
        assert!(parse_only(&["eq7".to_string()]).is_err());
        assert_eq!(parse_only(&[" eq2".to_string()]).unwrap(), vec![Identity::Eq2]);
    }
}

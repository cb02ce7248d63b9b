use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use containment::harness::{self, builtin, GainSpec, Override, RunOptions, Scenario};
use containment::topology::{build_laplacian, certify_spectrum, check_assumption_a1};
use containment::{Error, Result};

#[derive(Parser)]
#[command(name = "containment", version, about = "Containment control toolkit for multi-agent systems with polynomial leaders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON file or built-in scenario name.
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// `synthesized`, or a JSON file holding the row gain array.
    #[arg(long)]
    gains: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize and certify gains; prints the audit as JSON.
    Synth(Common),
    /// Run one scenario and write trace CSV plus report JSON.
    Run {
        #[command(flatten)]
        common: Common,
        /// Monte-Carlo runs for noisy controllers.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Run the scenario over consecutive seeds (and a Monte-Carlo ensemble if noisy).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        runs: usize,
    },
    /// Certify the topology only (reachability and convex-weight conditions).
    Verify {
        scenario: String,
        /// Report reachability failures as warnings instead of rejecting the file.
        #[arg(long)]
        allow_unreachable: bool,
    },
    /// List built-in scenarios.
    ListScenarios,
}

fn resolve(name: &str) -> Result<Scenario> {
    let path = Path::new(name);
    if path.exists() {
        harness::load_scenario(path)
    } else {
        builtin(name)
    }
}

fn prepare(c: &Common) -> Result<Scenario> {
    let base = resolve(&c.scenario)?;
    let gains = match c.gains.as_deref() {
        None => None,
        Some("synthesized") => Some(GainSpec::Synthesized),
        Some(file) => {
            let k: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(file)?)?;
            Some(GainSpec::Explicit(k))
        }
    };
    let s = Override {
        seed: c.seed,
        dt: c.dt,
        horizon: c.horizon,
        gains,
    }
    .apply(&base);
    s.validate()?;
    Ok(s)
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::ListScenarios => {
            for n in harness::builtin_names() {
                let s = builtin(n)?;
                println!(
                    "{n}\t{}\tleaders={} followers={} m={} n={}",
                    s.controller.name(),
                    s.topology.leaders,
                    s.topology.followers,
                    s.follower_order,
                    s.trajectory_order
                );
            }
            Ok(true)
        }
        Command::Verify {
            scenario,
            allow_unreachable,
        } => {
            let s = if Path::new(&scenario).exists() {
                let (s, warnings) = harness::scenario::load_scenario_lenient(Path::new(&scenario))?;
                for w in &warnings {
                    eprintln!("warning: {w}");
                }
                if !warnings.is_empty() && !allow_unreachable {
                    return Err(Error::Scenario(warnings.join("; ")));
                }
                s
            } else {
                builtin(&scenario)?
            };
            let topo = s.build_topology()?;
            let reach = check_assumption_a1(&topo);
            if !reach.satisfied {
                let ids: Vec<usize> = reach.unreachable.iter().map(|i| i + 1).collect();
                println!("reachability: FAIL (followers {ids:?})");
                return Ok(false);
            }
            let cert = certify_spectrum(&build_laplacian(&topo))?;
            println!("reachability: ok");
            println!("lambda_min(Re L2) = {:.6}", cert.spectrum.lambda_min_real);
            println!("max |1 - lambda_hat| = {:.6}", cert.spectrum.max_normalized_deviation());
            println!("min convex weight = {:.3e}", cert.min_weight);
            println!("max row-sum error = {:.3e}", cert.max_row_sum_error);
            Ok(true)
        }
        Command::Synth(c) => {
            let s = prepare(&c)?;
            let audit = harness::synthesize(&s)?;
            println!("{}", serde_json::to_string_pretty(&audit)?);
            Ok(audit.certified())
        }
        Command::Run { common, runs } => {
            let s = prepare(&common)?;
            let out = harness::run_with(&s, RunOptions { runs })?;
            harness::write_outputs(&out, &common.out)?;
            for (k, v) in &out.report.checks {
                println!("{k}: {}", if *v { "pass" } else { "FAIL" });
            }
            println!(
                "E_r: {:.4e} -> {:.4e} (ratio {:.3e}); outputs in {}",
                out.report.initial_error,
                out.report.final_error,
                out.report.error_ratio,
                common.out.display()
            );
            Ok(out.report.passed)
        }
        Command::Sweep { common, runs } => {
            let s = prepare(&common)?;
            let seeds: Vec<Override> = (0..runs as u64)
                .map(|i| Override {
                    seed: Some(s.seed + i),
                    ..Default::default()
                })
                .collect();
            let deterministic = !s.controller.noisy();
            let out = if deterministic {
                harness::sweep(&s, &seeds, 0)?
            } else {
                harness::sweep(&s, &[], runs)?
            };
            std::fs::create_dir_all(&common.out)?;
            std::fs::write(
                common.out.join(format!("{}.sweep.json", s.name)),
                serde_json::to_string_pretty(&out.reports)? + "\n",
            )?;
            let mut ok = out.reports.iter().all(|r| r.passed);
            if let Some(mc) = &out.monte_carlo {
                std::fs::write(
                    common.out.join(format!("{}.montecarlo.json", s.name)),
                    serde_json::to_string_pretty(mc)? + "\n",
                )?;
                println!(
                    "runs={} mean_condition={} second_moment_bounded={}",
                    mc.runs,
                    mc.mean_condition(),
                    mc.second_moment_bounded()
                );
                ok &= mc.mean_condition();
                if s.controller == harness::ControllerKind::DiscreteNoisy {
                    ok &= mc.second_moment_bounded();
                }
            }
            println!("{} reports written to {}", out.reports.len(), common.out.display());
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

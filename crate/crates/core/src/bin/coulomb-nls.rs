use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use coulomb_nls::config::SimConfig;
use coulomb_nls::evolution::Mutation;
use coulomb_nls::grid::RadialGrid;
use coulomb_nls::ground_states::{constants_report, explicit_w, shoot_ground_state, GroundState, ShootKind, SHOOT_TOL};
use coulomb_nls::runner::{self, RunOptions, OUT_ENV};
use coulomb_nls::selftest::{run_selftest, SelftestOptions};
use coulomb_nls::Error;

#[derive(Parser)]
#[command(name = "coulomb-nls", version, about = "Radial NLS with a Coulomb potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one or more configurations (files or built-in scenario names).
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
        /// Run independent configurations in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compute a ground state and print its report as JSON.
    Groundstate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long = "p")]
        p: f64,
        #[arg(long = "K")]
        k: Option<f64>,
        #[arg(long, default_value_t = 30.0)]
        rmax: f64,
        #[arg(long, default_value_t = 2048)]
        n: usize,
    },
    /// Classify the initial data of a configuration.
    Classify { config: String },
    /// Run the invariant suite.
    Selftest {
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Evolve with the Coulomb sign flipped (the suite should then fail).
        #[arg(long)]
        inject_coulomb_sign_flip: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "Q")]
    Q,
    #[value(name = "W")]
    W,
    #[value(name = "f")]
    F,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Run { configs, jobs } => run(&configs, jobs),
        Command::Groundstate { kind, p, k, rmax, n } => groundstate(kind, p, k, rmax, n),
        Command::Classify { config } => classify(&config),
        Command::Selftest {
            jobs,
            inject_coulomb_sign_flip,
        } => {
            let report = run_selftest(&SelftestOptions {
                jobs,
                mutation: inject_coulomb_sign_flip.then_some(Mutation::FlipCoulombSign),
            });
            println!("{report}");
            if report.all_passed() {
                0
            } else {
                2
            }
        }
    };
    ExitCode::from(code as u8)
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn emit<T: serde::Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

/// A config file, or a built-in scenario when no such file exists.
fn load(arg: &str) -> Result<(SimConfig, PathBuf), Error> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(cfg) = runner::scenario(arg) {
            return Ok((cfg, PathBuf::from(".")));
        }
    }
    let cfg = runner::load_config(path)?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, base))
}

fn run(configs: &[String], jobs: usize) -> i32 {
    let many = configs.len() > 1;
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    let one = |arg: &String| -> (String, i32) {
        let (cfg, base_dir) = match load(arg) {
            Ok(x) => x,
            Err(e) => return (format!("{arg}: error: {e}"), e.exit_code()),
        };
        let out_dir = match &env_out {
            Some(dir) if many => dir.join(stem(arg)),
            Some(dir) => dir.clone(),
            None => cfg.output.dir.clone(),
        };
        match runner::run_scenario_with(&cfg, &RunOptions { out_dir, base_dir }) {
            Ok(art) => {
                let s = &art.summary;
                let line = format!(
                    "{arg}: {} at t = {} after {} steps; mass drift {:.3e}, energy drift {:.3e}; wrote {}",
                    s.status,
                    s.final_time,
                    s.steps,
                    s.drifts.mass,
                    s.drifts.energy,
                    art.dir.display()
                );
                (line, if s.poisoned { 2 } else { 0 })
            }
            Err(e) => (format!("{arg}: error: {e}"), e.exit_code()),
        }
    };
    let jobs = jobs.clamp(1, configs.len());
    let results: Vec<(String, i32)> = if jobs == 1 {
        configs.iter().map(one).collect()
    } else {
        let mut out = vec![(String::new(), 0); configs.len()];
        for chunk in configs.iter().enumerate().collect::<Vec<_>>().chunks(jobs) {
            std::thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|(i, c)| (*i, s.spawn(|| one(c)))).collect();
                for (i, h) in handles {
                    out[i] = h.join().expect("run thread panicked");
                }
            });
        }
        out
    };
    let mut code = 0;
    for (line, c) in results {
        if c == 0 {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
        code = code.max(c);
    }
    code
}

fn stem(arg: &str) -> String {
    Path::new(arg)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| arg.to_string())
}

fn ground_json(g: &GroundState) -> serde_json::Value {
    json!({
        "kind": g.kind,
        "amplitude": g.amplitude,
        "residual": g.residual,
        "norms": g.norms,
        "nodes": g.profile.len(),
        "rmax": g.profile.grid().r_max(),
    })
}

fn groundstate(kind: Kind, p: f64, k: Option<f64>, rmax: f64, n: usize) -> i32 {
    let grid = match RadialGrid::new(rmax, n) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    let value = match kind {
        Kind::Q => shoot_ground_state(ShootKind::Q { p }, &grid, SHOOT_TOL).and_then(|q| {
            let report = constants_report(&q, p)?;
            Ok(json!({ "ground_state": ground_json(&q), "constants": report }))
        }),
        Kind::W => {
            if (p - 5.0).abs() > 1e-12 {
                eprintln!("error: W is the p = 5 profile, got --p {p}");
                return 1;
            }
            Ok(json!({ "ground_state": ground_json(&explicit_w(&grid)) }))
        }
        Kind::F => {
            let Some(k) = k else {
                eprintln!("error: --K is required for --kind f");
                return 1;
            };
            shoot_ground_state(ShootKind::F { k, p }, &grid, SHOOT_TOL)
                .map(|f| json!({ "ground_state": ground_json(&f) }))
        }
    };
    match value {
        Ok(v) => {
            emit(&v);
            0
        }
        Err(e) => fail(&e),
    }
}

fn classify(arg: &str) -> i32 {
    let result = load(arg).and_then(|(cfg, base)| runner::classify_config(&cfg, &base));
    match result {
        Ok(c) => {
            emit(&c);
            0
        }
        Err(e) => fail(&e),
    }
}

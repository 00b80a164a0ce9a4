use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rescal_cli::config::parse_list;
use rescal_cli::{configure_threads, exit_code, run_to_dir, CliError, Experiment, ExperimentConfig, Overrides, Plan};
use rescal_core::lemmas::probe_r0;
use rescal_core::manifold::CatMatrix;
use rescal_core::orbits::orbit_census;
use rescal_core::FlowSpec;

#[derive(Parser)]
#[command(name = "rescal", version, about = "Rescaled entropy experiments for vector fields with singularities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments and write results.csv and summary.json.
    Run {
        /// Experiments to run (in addition to the one named in --config).
        #[arg(value_enum)]
        experiments: Vec<Experiment>,
        /// TOML config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Drop t values above this.
        #[arg(long)]
        t_max: Option<f64>,
        /// Comma-separated ε ladder.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in flows with parameters and singular sets.
    ListFlows,
    /// Periodic-orbit census of a hyperbolic toral automorphism.
    Census {
        #[arg(long, default_value_t = 14.0)]
        t_max: f64,
        /// Matrix entries a,b,c,d of [[a, b], [c, d]].
        #[arg(long, default_value = "2,1,1,1")]
        matrix: String,
    },
    /// Estimate the speed-comparability radius r0 of built-in flows.
    ProbeR0 {
        /// Flow id; all built-ins when omitted.
        #[arg(long)]
        flow: Option<String>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = rescal_cli::config::DEFAULT_SEED)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            experiments,
            config,
            t_max,
            eps,
            seed,
            out,
        } => {
            let mut configs = Vec::new();
            if let Some(path) = &config {
                configs.push(ExperimentConfig::load(path)?);
            }
            configs.extend(experiments.into_iter().map(ExperimentConfig::new));
            if configs.is_empty() {
                return Err(CliError::Config("name an experiment or pass --config".into()));
            }
            let eps = eps.map(|e| parse_list(&e).map_err(|m| CliError::Config(format!("--eps: {m}")))).transpose()?;
            let overrides = Overrides { t_max, eps, seed, out };
            let plans = configs
                .iter_mut()
                .map(|c| {
                    overrides.apply(c);
                    Plan::resolve(c, overrides.t_max)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let dir = plans[0].output.clone();
            let r = run_to_dir(&plans, &dir)?;
            for e in &r.summary.experiments {
                eprintln!("{} {}", if e.verdict { "PASS" } else { "FAIL" }, e.experiment);
                for c in e.checks.iter().filter(|c| !c.passed) {
                    eprintln!("  failed: {} (value {}, bound {})", c.name, c.value, c.bound);
                }
            }
            eprintln!("wrote {}", dir.display());
            Ok(exit_code(&r))
        }
        Command::ListFlows => {
            println!("{:<22} {:<34} singular set", "flow", "parameters");
            for f in FlowSpec::builtins() {
                println!("{:<22} {:<34} {}", f.id(), f.parameters(), f.singular_set());
            }
            Ok(0)
        }
        Command::Census { t_max, matrix } => {
            let v = parse_list(&matrix).map_err(CliError::Config)?;
            let ints: Vec<i64> = v.iter().map(|x| *x as i64).collect();
            if ints.len() != 4 || v.iter().zip(&ints).any(|(x, i)| *x != *i as f64) {
                return Err(CliError::Config(format!("--matrix needs four integers, got '{matrix}'")));
            }
            let m = CatMatrix::new([[ints[0], ints[1]], [ints[2], ints[3]]])?;
            let census = orbit_census(&m, t_max)?;
            println!("n,fixed_points,least_period_orbits,v");
            for row in &census.per_period {
                println!("{},{},{},{}", row.n, row.fixed_points, row.least_period_orbits, census.v(row.n as f64));
            }
            Ok(0)
        }
        Command::ProbeR0 { flow, trials, seed } => {
            let flows = match flow {
                Some(id) => vec![FlowSpec::from_id(&id)?],
                None => FlowSpec::builtins(),
            };
            println!("flow,r0,flagged,samples,worst_margin");
            for f in flows {
                let p = probe_r0(&f, trials, seed)?;
                println!("{},{},{},{},{}", f.id(), p.r0, p.flagged, p.report.samples, p.report.worst_margin);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let threads = std::env::var("RESCAL_THREADS").ok();
    let code = match configure_threads(threads.as_deref()).and_then(|()| {
        let cli = Cli::try_parse().map_err(|e| {
            let _ = e.print();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Config(String::new()),
                _ => CliError::Config("invalid command line".into()),
            }
        })?;
        run(cli)
    }) {
        Ok(c) => c,
        Err(CliError::Config(msg)) if msg.is_empty() => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

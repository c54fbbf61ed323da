use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use cocycle_lab::config::{merge, ConfigInvalid, ExperimentConfig};
use cocycle_lab::exec::{with_jobs, Execution};
use cocycle_lab::runner::run;

/// Vector cocycles over ergodic systems: ergodic sums, induced cocycles,
/// limit directions, the filling scheme and cone sojourn statistics.
#[derive(Parser, Debug)]
#[command(name = "cocycle-lab", version)]
struct Cli {
    /// Experiment config (JSON). Command-line flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Global seed; overrides the config seed.
    #[arg(long, global = true, env = "COCYCLE_LAB_SEED")]
    seed: Option<u64>,
    /// Output directory, or the CSV file itself when it ends in `.csv`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). `--jobs 1` runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Dynamics {
    /// `rotation:golden`, `rotation:sqrt2m1`, `rotation:quad:a,b,c,d`,
    /// `doubling`, `cat-map`, `iid-shift:<law>[,<dim>]`.
    #[arg(long)]
    system: Option<String>,
    /// Observable expression, e.g. `indicator(0,0.5) - 0.5`.
    #[arg(long)]
    obs: Option<String>,
    /// Orbit length.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Number of trajectories.
    #[arg(long)]
    seeds: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ergodic sums Φ_n along sampled orbits.
    Trace {
        #[command(flatten)]
        dynamics: Dynamics,
    },
    /// Return times and induced sums on a set.
    Induce {
        #[command(flatten)]
        dynamics: Dynamics,
        /// `interval:a,b[;a,b...]`, `rect:x0,x1,y0,y1`, `cylinder:offset,coord,+|-[;...]`.
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        returns: Option<usize>,
        /// Maximum steps to wait for a single return.
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Direction histograms, the limit-direction estimate and recurrence.
    Directions {
        #[command(flatten)]
        dynamics: Dynamics,
        /// Comma-separated norm thresholds (default: scaled ladder).
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[arg(long)]
        quorum: Option<f64>,
        /// Recurrence radius.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Min-process, filling decomposition, oscillation and Kesten rate.
    Filling {
        #[command(flatten)]
        dynamics: Dynamics,
    },
    /// Cone sojourn of the interpolated path.
    Sojourn {
        #[command(flatten)]
        dynamics: Dynamics,
        /// e.g. `halfspace:0,1`, `angular:1,0;0.5`, `orthant:+,+`.
        #[arg(long)]
        cone: Option<String>,
        /// `dyadic`, `full` or a comma-separated list of n.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        ball_radius: Option<f64>,
    },
    /// Brownian cone occupation.
    Brownian {
        #[arg(long)]
        cone: Option<String>,
        /// Horizon.
        #[arg(long)]
        t: Option<f64>,
        /// Time step.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Also estimate P(τ > 1 − α).
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Runs the acceptance suite and prints one line per criterion.
    Accept {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<u8>>,
        /// Compare every measurement against its exact target.
        #[arg(long)]
        zero_tolerance: bool,
    },
}

fn system_value(flag: &str) -> Result<Value, ConfigInvalid> {
    let bad = |reason: &str| ConfigInvalid::new("system", format!("{reason} in {flag:?}"));
    let (kind, rest) = flag.split_once(':').unwrap_or((flag, ""));
    match kind.trim() {
        "rotation" if !rest.is_empty() => Ok(json!({"kind": "rotation", "alpha": rest.trim()})),
        "rotation" => Err(bad("rotation needs an angle")),
        "doubling" | "cat-map" | "cat_map" if rest.is_empty() => Ok(json!({"kind": kind.trim()})),
        "iid-shift" | "iid_shift" | "iid" => {
            let mut parts = rest.split(',').map(str::trim);
            let law = parts
                .next()
                .filter(|l| !l.is_empty())
                .ok_or_else(|| bad("missing law"))?;
            let mut v = json!({"kind": "iid-shift", "law": law});
            if let Some(d) = parts.next() {
                v["dim"] = json!(d.parse::<usize>().map_err(|_| bad("bad dimension"))?);
            }
            Ok(v)
        }
        _ => Err(bad("unknown system")),
    }
}

fn grid_value(flag: &str) -> Result<Value, ConfigInvalid> {
    match flag.trim() {
        "dyadic" | "full" => Ok(json!(flag.trim())),
        list => list
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map(|v| json!(v))
            .map_err(|_| {
                ConfigInvalid::new(
                    "grid",
                    format!("expected dyadic, full or a list, got {flag:?}"),
                )
            }),
    }
}

fn overrides(cli: &Cli) -> Result<Map<String, Value>, ConfigInvalid> {
    let mut m = Map::new();
    let mut set = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    };
    let (op, dynamics) = match &cli.command {
        Command::Trace { dynamics } => ("trace", Some(dynamics)),
        Command::Induce {
            dynamics,
            set: s,
            returns,
            cap,
        } => {
            set("set", s.clone().map(Value::from));
            set("returns", returns.map(Value::from));
            set("cap", cap.map(Value::from));
            ("induce", Some(dynamics))
        }
        Command::Directions {
            dynamics,
            thresholds,
            quorum,
            epsilon,
        } => {
            set("thresholds", thresholds.clone().map(Value::from));
            set("quorum", quorum.map(Value::from));
            set("epsilon", epsilon.map(Value::from));
            ("directions", Some(dynamics))
        }
        Command::Filling { dynamics } => ("filling", Some(dynamics)),
        Command::Sojourn {
            dynamics,
            cone,
            grid,
            ball_radius,
        } => {
            set("cone", cone.clone().map(Value::from));
            set("grid", grid.as_deref().map(grid_value).transpose()?);
            set("ball_radius", ball_radius.map(Value::from));
            ("sojourn", Some(dynamics))
        }
        Command::Brownian {
            cone,
            t,
            h,
            samples,
            alpha,
        } => {
            set("cone", cone.clone().map(Value::from));
            set("t", t.map(Value::from));
            set("h", h.map(Value::from));
            set("samples", samples.map(Value::from));
            set("alpha", alpha.map(Value::from));
            ("brownian", None)
        }
        Command::Accept {
            criteria,
            zero_tolerance,
        } => {
            set("criteria", criteria.clone().map(Value::from));
            set(
                "zero_tolerance",
                zero_tolerance.then_some(Value::Bool(true)),
            );
            ("accept", None)
        }
    };
    if let Some(d) = dynamics {
        set("system", d.system.as_deref().map(system_value).transpose()?);
        set("observable", d.obs.clone().map(Value::from));
        set("N", d.n.map(Value::from));
        set("seeds", d.seeds.map(Value::from));
    }
    set("operation", Some(Value::from(op)));
    set("seed", cli.seed.map(Value::from));
    set("jobs", cli.jobs.map(Value::from));
    set(
        "out",
        cli.out
            .as_ref()
            .map(|p| Value::from(p.to_string_lossy().into_owned())),
    );
    Ok(m)
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigInvalid> {
    let mut base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigInvalid::new("--config", format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| ConfigInvalid::new("(root)", e))?
        }
        None => Value::Object(Map::new()),
    };
    let flags = overrides(cli)?;
    if let (Some(file_op), Some(flag_op)) = (base.get("operation"), flags.get("operation")) {
        if file_op != flag_op {
            return Err(ConfigInvalid::new(
                "operation",
                format!("config says {file_op}, command is {flag_op}"),
            ));
        }
    }
    merge(&mut base, flags);
    ExperimentConfig::from_value(base)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let plan = match load(&cli).and_then(|c| c.validate()) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let exec = if plan.jobs == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match with_jobs(plan.jobs, || run(&plan, exec)) {
        Ok(outcome) => {
            if outcome.lines.is_empty() {
                println!(
                    "{} rows -> {}\nsummary -> {}",
                    outcome.rows,
                    outcome.paths.csv.display(),
                    outcome.paths.summary.display()
                );
            } else {
                for line in &outcome.lines {
                    println!("{line}");
                }
                println!(
                    "{}/{} criteria passed; report -> {}",
                    outcome.summary["passed"],
                    outcome.summary["total"],
                    outcome.paths.summary.display()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

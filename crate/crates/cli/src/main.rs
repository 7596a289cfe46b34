use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use catn_core::sim::{compare_table, plot_runs, run_to_dir, AgentBundle, Mode, RunRequest, Scenario, SchemeSpec};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "catn", version, about = "Cognitive aerial-terrestrial network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train agents (or run an optimizer scheme) and write a run directory.
    Train(RunArgs),
    /// Run with frozen parameters loaded from a checkpoint.
    Eval(RunArgs),
    /// Tabulate run directories and the per-slot exchange counts.
    Compare {
        /// Run directories.
        runs: Vec<PathBuf>,
        /// Scenario used for the exchange counts (defaults to the reference network).
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Render moving-average SVG charts for one or more run directories.
    Plot {
        runs: Vec<PathBuf>,
        /// Output directory (defaults to the first run's plot directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file; omitted keys take the reference values.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// `<ua>-<bf>`, e.g. d3qn-cup, sc-cup, dcd-wmmse.
    #[arg(long)]
    scheme: SchemeSpec,
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Agents to start from (train) or to evaluate (eval).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Overwrite an existing run directory.
    #[arg(long)]
    force: bool,
    /// Penalty weight for the PPO scheme, overriding the scenario.
    #[arg(long)]
    zeta: Option<f64>,
    /// Write per-slot wall-clock times to timing.csv.
    #[arg(long)]
    timing: bool,
}

fn load_scenario(path: Option<&Path>) -> Result<Scenario> {
    Ok(match path {
        Some(p) => Scenario::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Scenario::default(),
    })
}

fn run(args: RunArgs, mode: Mode) -> Result<()> {
    let mut scenario = load_scenario(args.scenario.as_deref())?;
    if let Some(z) = args.zeta {
        if !(z >= 0.0 && z.is_finite()) {
            bail!(catn_core::Error::InvalidArgument(format!("--zeta must be a non-negative number, got {z}")));
        }
        scenario.bs_agent.penalty_zeta = z;
    }
    let agents = match &args.checkpoint {
        Some(p) => Some(AgentBundle::load(p).with_context(|| format!("loading {}", p.display()))?),
        None if mode == Mode::Eval && args.scheme.has_agents() => {
            bail!(catn_core::Error::InvalidArgument(format!("eval of {} needs --checkpoint", args.scheme)))
        }
        None => None,
    };
    let slots = args.slots.unwrap_or(scenario.slots);
    let seed = args.seed.unwrap_or(scenario.seed);
    let result = run_to_dir(RunRequest { scenario, scheme: args.scheme, mode, slots, seed, out: &args.out, force: args.force, agents, timing: args.timing })?;
    let s = &result.summary;
    let ratios: Vec<String> = s.final_rho_ratio.iter().map(|r| format!("{r:.4}")).collect();
    println!(
        "ok scheme={} seed={seed} slots={} mean_sum_rate={:.4} final_sum_rate={:.4} final_rho_ratio={} handover_pct={:.3} out={}",
        args.scheme,
        s.slots,
        s.mean_sum_rate,
        s.final_sum_rate,
        ratios.join(";"),
        s.handover_pct,
        args.out.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => run(a, Mode::Train),
        Command::Eval(a) => run(a, Mode::Eval),
        Command::Compare { runs, scenario } => {
            let scenario = load_scenario(scenario.as_deref())?;
            print!("{}", compare_table(&scenario, &runs)?);
            Ok(())
        }
        Command::Plot { runs, out } => {
            let out = match (out, runs.first()) {
                (Some(o), _) => o,
                (None, Some(first)) => first.join("plot"),
                (None, None) => bail!(catn_core::Error::InvalidArgument("plot needs at least one run directory".into())),
            };
            for p in plot_runs(&runs, &out)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain().find_map(|c| c.downcast_ref::<catn_core::Error>()).map_or("error", catn_core::Error::kind)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("error kind=usage msg={}", one_line(&first));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} msg={}", error_kind(&e), one_line(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use corridor_crowd::cli::{cmd_compare, cmd_run, cmd_sweep, default_out_dir, Overrides};

#[derive(Parser)]
#[command(version, about = "Crowd simulation through a corridor on an adaptive network")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics, trajectory, plot and manifest.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Run the scenario with and without width adaptation and compare.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the scenario once per population size.
    Sweep {
        config: PathBuf,
        #[arg(long = "n", value_delimiter = ',', required = true)]
        populations: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = match args.command {
        Command::Run {
            config,
            out,
            seed,
            iterations,
        } => {
            let out = out.unwrap_or_else(|| default_out_dir("run"));
            cmd_run(&config, &out, Overrides { seed, iterations }).map(|m| {
                println!(
                    "wrote {} files to {} in {:.2}s",
                    m.outputs.len(),
                    out.display(),
                    m.duration_secs
                );
            })
        }
        Command::Compare { config, out, seed } => {
            let out = out.unwrap_or_else(|| default_out_dir("compare"));
            cmd_compare(&config, &out, Overrides { seed, iterations: None }).map(|s| {
                if let Some(d) = s.neck_window_difference {
                    println!(
                        "neck window, adaptive minus non-adaptive: v_mean {:+.4}, r_mean {:+.4}, n_obs {:+.3}, n_neck {:+.3}",
                        d.v_mean, d.r_mean, d.n_obs, d.n_neck
                    );
                } else {
                    println!("the crowd did not reach the neck in both runs");
                }
                println!("wrote comparison to {}", out.display());
            })
        }
        Command::Sweep {
            config,
            populations,
            out,
            seed,
        } => {
            let out = out.unwrap_or_else(|| default_out_dir("sweep"));
            cmd_sweep(&config, &populations, &out, Overrides { seed, iterations: None }).map(|entries| {
                for e in entries {
                    match (e.min_r_mean, e.min_r_mean_iteration) {
                        (Some(r), Some(i)) => println!("N = {:3}: min r_mean {r:.4} at iteration {i}", e.agents),
                        _ => println!("N = {:3}: no iterations", e.agents),
                    }
                }
                println!("wrote sweep to {}", out.display());
            })
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

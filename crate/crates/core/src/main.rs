use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xxz_tebd::quench::{self, QuenchConfig};
use xxz_tebd::SpinOperators;

#[derive(Parser)]
#[command(name = "xxz-quench", version, about = "Entanglement dynamics of quenched XXZ chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one quench described by a key=value config file.
    Run { config: PathBuf },
    /// Run the config once per j_z value, each in its own subdirectory.
    Sweep {
        config: PathBuf,
        /// Comma-separated j_z values, e.g. 0,0.5,1
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        jz: Vec<f64>,
    },
    /// Compare TEBD against exact evolution on a short chain.
    OracleCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.025)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2", allow_negative_numbers = true)]
        jz: Vec<f64>,
        /// Use Pauli matrices instead of spin-1/2 operators.
        #[arg(long)]
        pauli: bool,
    },
}

fn load(path: &PathBuf) -> Result<QuenchConfig, ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return Err(ExitCode::from(2));
        }
    };
    quench::parse_config(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        let dir = quench::raw_output_dir(&text);
        if let Err(w) = quench::write_failed_manifest(&dir, &text, &e.to_string()) {
            eprintln!("error: could not write manifest: {w}");
        }
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match quench::run_quench(&cfg) {
                Ok(out) => {
                    println!(
                        "wrote {} observations to {} ({:.1} s, discarded weight {:.3e})",
                        out.record.len(),
                        cfg.output_dir.display(),
                        out.manifest.wall_clock_seconds,
                        out.manifest.final_cumulative_discarded_weight
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Sweep { config, jz } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let entries = match quench::sweep(&cfg, &jz) {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            let mut failed = 0;
            for e in &entries {
                match &e.result {
                    Ok(_) => println!("j_z = {}: ok ({})", e.j_z, e.dir.display()),
                    Err(err) => {
                        failed += 1;
                        println!("j_z = {}: failed ({}): {err}", e.j_z, e.dir.display());
                    }
                }
            }
            if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
        }
        Command::OracleCheck { n, dt, t_max, jz, pauli } => {
            let ops = if pauli { SpinOperators::Pauli } else { SpinOperators::SpinHalf };
            match quench::oracle_check(n, &jz, dt, t_max, 1, ops) {
                Ok(rows) => {
                    let mut worst = 0.0f64;
                    for r in &rows {
                        println!("{:<18} j_z = {:<5} max |dC| = {:.3e}", r.protocol.name(), r.j_z, r.max_deviation);
                        worst = worst.max(r.max_deviation);
                    }
                    println!("max deviation {worst:.6e}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}

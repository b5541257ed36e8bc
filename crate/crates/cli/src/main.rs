mod repl;

use std::io::{self, BufRead, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Parser;
use qiq_core::{BeliefNetwork, Session};
use repl::{Outcome, Repl};

/// Explain belief-network conclusions in words.
#[derive(Parser, Debug)]
#[command(name = "qiq", version)]
struct Args {
    /// Network file (JSON); the bundled sneeze network when omitted.
    #[arg(long, value_name = "FILE")]
    network: Option<PathBuf>,
    /// Run commands from FILE instead of standard input.
    #[arg(long, value_name = "FILE", conflicts_with = "serve")]
    script: Option<PathBuf>,
    /// Serve the HTTP API instead of reading commands.
    #[arg(long)]
    serve: bool,
    #[arg(long, default_value_t = 8080, requires = "serve")]
    port: u16,
    #[arg(long, value_name = "P")]
    list_threshold: Option<f64>,
    #[arg(long, value_name = "P")]
    residual_cap: Option<f64>,
    #[arg(long, value_name = "X")]
    contrast_factor: Option<f64>,
    #[arg(long, value_name = "P")]
    but_threshold: Option<f64>,
    /// Hide numbers in explanations.
    #[arg(long)]
    no_numbers: bool,
    /// Probability phrase scale.
    #[arg(long, value_name = "NAME")]
    scale: Option<String>,
}

const LOAD_FAILURE: u8 = 1;
const SCRIPT_FAILURE: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();

    let network = match &args.network {
        Some(path) => match repl::load_network(path) {
            Ok(net) => net,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(LOAD_FAILURE);
            }
        },
        None => BeliefNetwork::sneeze(),
    };

    if args.serve {
        return match serve(network, args.port) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(LOAD_FAILURE)
            }
        };
    }

    let session = match configure(Session::new(Arc::new(network)), &args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(SCRIPT_FAILURE);
        }
    };
    let mut repl = Repl::new(session);

    match &args.script {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => {
                let failed = run_lines(&mut repl, text.lines().map(str::to_string), false);
                if failed {
                    ExitCode::from(SCRIPT_FAILURE)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                ExitCode::from(SCRIPT_FAILURE)
            }
        },
        None => {
            let stdin = io::stdin();
            let prompt = stdin.is_terminal();
            let lines = stdin.lock().lines().map_while(Result::ok);
            run_lines(&mut repl, lines, prompt);
            ExitCode::SUCCESS
        }
    }
}

fn configure(mut session: Session, args: &Args) -> Result<Session> {
    for (name, value) in [
        ("list_threshold", args.list_threshold),
        ("residual_cap", args.residual_cap),
        ("contrast_factor", args.contrast_factor),
        ("but_threshold", args.but_threshold),
    ] {
        if let Some(v) = value {
            session.set_param(name, v)?;
        }
    }
    if let Some(scale) = &args.scale {
        session.set_scale(scale, None)?;
    }
    if args.no_numbers {
        session.set_numbers(false);
    }
    Ok(session)
}

/// Feeds lines to the interpreter until exhausted or `quit`; returns whether
/// any command failed. Errors go to stderr so stdout is identical whether
/// commands come from a script or a pipe.
fn run_lines(repl: &mut Repl, lines: impl Iterator<Item = String>, prompt: bool) -> bool {
    let mut failed = false;
    let mut stdout = io::stdout();
    let show_prompt = |out: &mut io::Stdout| {
        if prompt {
            let _ = write!(out, "qiq> ");
            let _ = out.flush();
        }
    };
    show_prompt(&mut stdout);
    for line in lines {
        match repl.execute(&line) {
            Ok(Outcome::Quit) => break,
            Ok(Outcome::Output(text)) => {
                let _ = stdout.write_all(text.as_bytes());
            }
            Err(e) => {
                failed = true;
                let _ = stdout.flush();
                eprintln!("error: {e:#}");
            }
        }
        show_prompt(&mut stdout);
    }
    let _ = stdout.flush();
    failed
}

fn serve(network: BeliefNetwork, port: u16) -> Result<()> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let runtime = tokio::runtime::Runtime::new().context("cannot start async runtime")?;
    runtime.block_on(qiq_server::serve(network, addr, qiq_server::ServerConfig::default()))?;
    Ok(())
}

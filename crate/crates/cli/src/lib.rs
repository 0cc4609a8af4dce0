//! The `starfish` command: train, unlearn, compare and audit.

pub mod audit;
pub mod commands;
pub mod parties;

use clap::{Parser, Subcommand, ValueEnum};
use starfish_core::config::{RunConfig, TransportMode};
use starfish_core::sharing::PartyId;
use starfish_core::{Error, Result};
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PROTOCOL: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "starfish", version, about = "Privacy-preserving federated unlearning over two-party computation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// This process's party in tcp mode.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub party: Option<u8>,
    #[arg(long, global = true, value_enum)]
    pub transport: Option<Transport>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Transport {
    Inproc,
    Tcp,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stage I: federated training that stores the shared history.
    Train,
    /// Stage II: remove the configured target client.
    Unlearn {
        /// Directory holding history.p0.sfh / history.p1.sfh (default: --out).
        #[arg(long)]
        history: Option<PathBuf>,
        /// Overrides the config's target client.
        #[arg(long)]
        target: Option<usize>,
    },
    /// Secure run against the plaintext oracle, retraining and a random baseline.
    Compare,
    /// Measured against predicted communication for every functionality.
    Audit,
}

fn load(cli: &Cli, target: Option<usize>) -> Result<RunConfig> {
    let mut rc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        rc.unlearn.seed = s;
    }
    if let Some(t) = target {
        rc.unlearn.target = t;
    }
    match cli.transport {
        Some(Transport::Inproc) => rc.transport = TransportMode::Inproc,
        Some(Transport::Tcp) => rc.transport = TransportMode::Tcp,
        None => {}
    }
    if let Some(o) = &cli.out {
        rc.out = Some(o.clone());
    }
    rc.finish()?;
    Ok(rc)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_PROTOCOL
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let target = match &cli.command {
        Command::Unlearn { target, .. } => *target,
        _ => None,
    };
    let rc = load(cli, target)?;
    let party = cli.party.map(|p| PartyId::from_index(p as usize).expect("clap bounds the party"));
    let out = rc.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match &cli.command {
        Command::Train => {
            let t = commands::train(&rc, party, Some(&out))?;
            let h = t.histories.first();
            println!("trained T = {} rounds, n = {}, m = {}", h.t, h.n, h.m);
            println!(
                "per round: {} exchange(s), {} bytes sent, {} offline bytes",
                t.per_round.rounds, t.per_round.bytes_sent, t.per_round.offline_bytes
            );
            println!("total: {} rounds, {} bytes sent", t.stats.rounds, t.stats.bytes_sent);
            println!("history written to {}", out.display());
        }
        Command::Unlearn { history, .. } => {
            let dir = history.clone().unwrap_or_else(|| out.clone());
            let o = commands::unlearn(&rc, party, &dir)?;
            commands::write_outcome(&out, &o)?;
            println!("selected rounds {:?} ({:?})", o.selected, o.method);
            for r in &o.transcript {
                println!("{:<10} step {:>3} rounds {:>5} bytes {:>9}", r.op, r.step, r.rounds, r.bytes);
            }
            println!("model and transcript written to {}", out.display());
        }
        Command::Compare => {
            if rc.transport == TransportMode::Tcp {
                return Err(Error::Config("compare runs both parties in-process".into()));
            }
            let c = commands::compare(&rc)?;
            commands::write_outcome(&out, &c.outcome)?;
            std::fs::write(out.join("report.json"), commands::to_json(&c.report))?;
            let r = &c.report;
            println!("selected {:?}, oracle {:?}", r.selected, r.oracle_selected);
            println!("max error vs oracle {:.3e} (budget {:.3e})", r.oracle_max_error, r.error_budget);
            println!(
                "distance to retrained: secure {:.4}, oracle {:.4}, random {:.4}; ARP {:.1}%",
                r.secure.distance, r.oracle.distance, r.random.distance, r.secure.arp
            );
            match (&r.bound, &r.bound_note) {
                (Some(b), _) => println!("bound: min margin {:.4}, {} violation(s)", b.min_margin, b.violations),
                (None, Some(n)) => println!("bound not checked: {n}"),
                _ => {}
            }
            println!("report written to {}", out.join("report.json").display());
        }
        Command::Audit => {
            let a = audit::audit(&rc)?;
            print!("{}", a.table());
            let bad = a.mismatches();
            if bad > 0 {
                eprintln!("{bad} mismatch(es)");
                return Ok(EXIT_AUDIT);
            }
            println!("all {} rows match", a.costs.len() + a.counts.len());
        }
    }
    Ok(EXIT_OK)
}

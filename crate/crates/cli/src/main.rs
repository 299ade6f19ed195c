//! `datagov` — command-line orchestration of the data-governance flows:
//! ceremonies, registration, key issuance, sharing, retrieval, attack demos
//! and transcript verification. All state lives in a directory so commands
//! compose across invocations.

mod commands;
mod config;
mod state;

use clap::{Parser, Subcommand};
use state::StateDir;
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("flow rejected: {0}")]
    Flow(String),
    #[error("policy not satisfied")]
    PolicyDenied,
    #[error("not found: {0}")]
    NotFound(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Flow(_) => 3,
            CliError::PolicyDenied => 4,
            CliError::NotFound(_) => 5,
            CliError::Verify(_) => 6,
            CliError::Internal(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "datagov", version, about = "Policy-hiding multi-authority data sharing over a simulated ledger")]
struct Cli {
    /// Directory holding ledger snapshot, transcripts and stored content.
    #[arg(long, global = true, default_value = "state")]
    state_dir: PathBuf,
    /// Seed for deterministic runs; omitted means fresh OS entropy.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a starter configuration into the state directory.
    Init,
    /// Run the multi-party trusted setup from a configuration file.
    Setup {
        #[arg(long, default_value = "config.toml")]
        config: PathBuf,
    },
    /// Run the authority setup: vector-commitment parameters, slot keys and
    /// the mapping table.
    AuthoritySetup,
    /// Register a data user and obtain its global identifier.
    Register {
        #[arg(long)]
        user: String,
        /// Fee in simulated GWEI; the contract rejects anything not strictly
        /// above 1000000.
        #[arg(long)]
        fee: Option<u64>,
    },
    /// Request key parts for a comma-separated attribute list.
    Keygen {
        #[arg(long)]
        user: String,
        #[arg(long)]
        attrs: String,
    },
    /// Encrypt and store a file, sealing its metadata under a policy.
    Share {
        #[arg(long)]
        file: PathBuf,
        /// Comma-separated attribute names the receiver must hold.
        #[arg(long)]
        policy: String,
        /// Optional keyword recorded alongside the log entry.
        #[arg(long)]
        kw: Option<String>,
        #[arg(long, default_value = "owner")]
        owner: String,
    },
    /// Recover a file from a log entry with a user's key parts.
    Retrieve {
        #[arg(long)]
        user: String,
        #[arg(long)]
        entry: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an attack demonstration; prints a JSON verdict line.
    Attack {
        #[command(subcommand)]
        what: AttackCommand,
    },
    /// Replay a ceremony transcript and re-run all of its checks.
    VerifyTranscript {
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Print state digests, the mapping table and the transaction trace.
    Status,
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Aggregate-key forgery by the last authority to publish.
    RogueKey {
        /// Run against a ledger with proof-of-knowledge checks disabled.
        #[arg(long)]
        insecure_no_pok: bool,
    },
    /// Ephemeral-vector recovery from a ciphertext given the parameter
    /// diagonal.
    InferS {
        /// Number of setup contributors; with more than one, the adversary
        /// is missing the last contribution.
        #[arg(long, default_value_t = 3)]
        participants: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let state = StateDir::new(&cli.state_dir);
    match cli.command {
        Command::Init => commands::cmd_init(&state),
        Command::Setup { config } => commands::cmd_setup(&state, &config, cli.seed),
        Command::AuthoritySetup => commands::cmd_authority_setup(&state, cli.seed),
        Command::Register { user, fee } => commands::cmd_register(&state, &user, fee),
        Command::Keygen { user, attrs } => commands::cmd_keygen(&state, &user, &attrs, cli.seed),
        Command::Share {
            file,
            policy,
            kw,
            owner,
        } => commands::cmd_share(&state, &file, &policy, kw.as_deref(), &owner, cli.seed),
        Command::Retrieve { user, entry, out } => {
            commands::cmd_retrieve(&state, &user, entry, &out)
        }
        Command::Attack { what } => match what {
            AttackCommand::RogueKey { insecure_no_pok } => {
                commands::cmd_attack_rogue_key(insecure_no_pok, cli.seed)
            }
            AttackCommand::InferS {
                participants,
                trials,
            } => commands::cmd_attack_infer(participants, trials, cli.seed),
        },
        Command::VerifyTranscript { file } => {
            commands::cmd_verify_transcript(&state, file.as_deref())
        }
        Command::Status => commands::cmd_status(&state),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

//! `mxcert`: prove, verify and PRP-test modular exponentiations with
//! compact certificates.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mxcert_cli::commands::{self, Depth, Failure, Params};

#[derive(Debug, Parser)]
#[command(
    name = "mxcert",
    version,
    about = "Certificates for left-to-right modular exponentiation"
)]
struct Cli {
    /// Challenge size in bits [default: 64].
    #[arg(long, global = true)]
    lambda: Option<u16>,
    /// Checkpoint spacing B in exponent bits [default: 4096].
    #[arg(long, global = true)]
    segment_bits: Option<u32>,
    /// Number of fold rounds x, or `auto` for the smallest x with bitlen(n) <= B*2^x.
    #[arg(long, global = true, default_value = "auto")]
    depth: Depth,
    /// Base a [default: 3].
    #[arg(long, global = true)]
    base: Option<String>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Attach a nested certificate for the final check when possible.
    #[arg(long, global = true)]
    nested: bool,
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Certificate output path [default: certificate.mxpc].
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a^n mod m and write a certificate.
    Prove {
        #[arg(long)]
        modulus: Option<String>,
        #[arg(long)]
        exponent: Option<String>,
        /// Certify an existing checkpoint file instead of recomputing.
        #[arg(long, conflicts_with_all = ["modulus", "exponent"])]
        from_checkpoint: Option<PathBuf>,
        /// Where to save the checkpoint table (default: a file in $MXPC_CHECKPOINT_DIR, if set).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Check a certificate. Exit 0 accept, 1 reject, 3 unreadable.
    Verify {
        certificate: PathBuf,
        /// Require the certificate to be for this modulus.
        #[arg(long)]
        modulus: Option<String>,
        /// Require the certificate to be for this exponent.
        #[arg(long)]
        exponent: Option<String>,
    },
    /// Fermat probable-prime test of a candidate such as `3*2^7+1`, with certificate.
    Prp { candidate: String },
    /// Randomized consistency check of a checkpoint file.
    Doublecheck { checkpoint: PathBuf },
    /// Run built-in invariant checks.
    Selftest {
        /// Also run the soundness experiments.
        #[arg(long)]
        soundness: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let params = Params {
        lambda: cli.lambda,
        segment_bits: cli.segment_bits,
        depth: cli.depth,
        base: cli.base,
        seed: cli.seed,
        nested: cli.nested,
        json: cli.json,
        output: cli.output,
    };
    let outcome = match &cli.command {
        Command::Prove {
            modulus,
            exponent,
            from_checkpoint,
            checkpoint,
        } => commands::prove(
            &params,
            modulus.as_deref(),
            exponent.as_deref(),
            from_checkpoint.as_deref(),
            checkpoint.as_deref(),
        ),
        Command::Verify {
            certificate,
            modulus,
            exponent,
        } => commands::verify(
            &params,
            certificate,
            modulus.as_deref(),
            exponent.as_deref(),
        ),
        Command::Prp { candidate } => commands::prp(&params, candidate),
        Command::Doublecheck { checkpoint } => commands::doublecheck(&params, checkpoint),
        Command::Selftest { soundness } => commands::selftest(&params, *soundness),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !matches!(failure, Failure::Rejected(_)) || !params.json {
                eprintln!("mxcert: {failure}");
            }
            ExitCode::from(failure.exit_code())
        }
    }
}

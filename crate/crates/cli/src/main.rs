use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cmtori::Overrides;
use cmtori_cli::commands::{self, CliError, Family, Options, Subject, Table, EXIT_USAGE, EXIT_VERIFY};
use cmtori_cli::report::{render, Format};
use cmtori_cli::verify::{self, Scope};

/// Class numbers, Tamagawa numbers and counts for CM tori.
#[derive(Debug, Parser)]
#[command(name = "cmtori", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Hasse unit index Q_K (1 or 2).
    #[arg(long = "Q", global = true)]
    q: Option<u8>,
    #[arg(long = "hK", global = true)]
    h_k: Option<u64>,
    #[arg(long = "hKplus", global = true)]
    h_kplus: Option<u64>,
    /// [T(Z^) : U]
    #[arg(long = "index-U", global = true)]
    index_u: Option<u64>,
    /// [mu_K : mu_K cap U]
    #[arg(long = "mu-index", global = true)]
    mu_index: Option<u64>,
    /// Assert that G^der(R) is not compact.
    #[arg(long = "assert-noncompact", global = true)]
    assert_noncompact: bool,
    #[arg(long, global = true)]
    bound: Option<i64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full report for one spec, e.g. `biq:17,1`.
    Info { spec: String },
    /// Family tables: primes p < bound, or squarefree d, j < bound.
    Table {
        #[arg(value_enum)]
        family: Family,
    },
    /// Counting applications at the given level.
    Count {
        #[arg(value_enum)]
        subject: Subject,
        spec: String,
        /// Rank of the Hermitian space (shimura).
        #[arg(long)]
        n: Option<u32>,
    },
    /// Oracle verification; --bound caps d in the biquadratic sweep.
    Verify {
        #[arg(value_enum, default_value = "all")]
        scope: Scope,
        #[arg(long = "j-bound", default_value_t = 30)]
        j_bound: i64,
    },
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table_output(cli: &Cli, table: &Table) -> Result<(), CliError> {
    emit(cli, &render(cli.format, &table.fields, &table.rows))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let opts = Options {
        overrides: Overrides {
            h_k: cli.h_k,
            h_kplus: cli.h_kplus,
            q: cli.q,
        },
        index_u: cli.index_u,
        mu_index: cli.mu_index,
        assert_noncompact: cli.assert_noncompact,
        bound: cli.bound,
    };
    match &cli.command {
        Command::Info { spec } => table_output(cli, &commands::info(spec, &opts)?),
        Command::Table { family } => table_output(cli, &commands::table(*family, &opts)?),
        Command::Count { subject, spec, n } => table_output(cli, &commands::count(*subject, spec, *n, &opts)?),
        Command::Verify { scope, j_bound } => {
            let d_bound = cli.bound.unwrap_or(60);
            if !(2..=commands::MAX_BOUND).contains(&d_bound) || !(1..=commands::MAX_BOUND).contains(j_bound) {
                return Err(CliError::usage("verify bounds must lie in 1..=10000"));
            }
            let (results, ok) = verify::verify(*scope, d_bound, *j_bound)?;
            match cli.format {
                Format::Text => emit(cli, &verify::summary(&results))?,
                _ => table_output(cli, &verify::to_table(&results))?,
            }
            if ok {
                Ok(())
            } else {
                Err(CliError {
                    code: EXIT_VERIFY,
                    message: "verification failed".into(),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cmtori: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}

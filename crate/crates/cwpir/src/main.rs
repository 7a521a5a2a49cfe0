use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cwpir::bench::{
    eq_csv_header, parse_size, pir_csv_header, pir_report, pir_run, run_eq, Backend, EqOp,
};
use cwpir::client::{encode_hex, parse_key};
use cwpir::dbfile::random_records;
use cwpir::{Client, DbFile, ServeOptions, Server, ServerState};
use cwpir_core::bfv::ParamPreset;
use cwpir_core::cost_model::{
    eq_operator_csv, eq_operator_table, pir_comparison_csv, pir_comparison_table, query_length_csv,
    query_length_table,
};
use cwpir_core::protocol::QueryMode;

#[derive(Parser)]
#[command(
    name = "cwpir",
    version,
    about = "Single-round keyword PIR with constant-weight codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Index,
    Keyword,
    Lossy,
}

impl From<Mode> for QueryMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Index => QueryMode::Index,
            Mode::Keyword => QueryMode::Keyword,
            Mode::Lossy => QueryMode::LossyKeyword,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a database file and answer queries.
    Serve {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: String,
        /// Code weight; defaults to the cheapest weight within the preset's depth budget.
        #[arg(long)]
        k: Option<usize>,
        /// Query compression: 2^c code bits per uploaded ciphertext.
        #[arg(long)]
        c: Option<u32>,
        /// Overrides the preset recorded in the database file.
        #[arg(long, value_parser = parse_preset)]
        preset: Option<ParamPreset>,
        /// Largest accepted frame payload in bytes.
        #[arg(long, default_value_t = cwpir::wire::DEFAULT_MAX_PAYLOAD)]
        max_frame: usize,
    },
    /// Retrieve one row: a row number in index mode, a keyword otherwise.
    Query {
        #[arg(long)]
        addr: String,
        /// Decimal integer or 0x-prefixed hex; lossy servers also take plain text.
        #[arg(long)]
        key: String,
    },
    /// Write a database file of random rows.
    MakeDb {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rows: usize,
        #[arg(long, value_enum, default_value = "keyword")]
        mode: Mode,
        /// Keyword length in bits (keyword modes).
        #[arg(long, default_value_t = 32)]
        keyword_bits: u16,
        #[arg(long, default_value_t = 64)]
        payload_len: usize,
        /// Plaintexts per row; 0 picks the smallest that fits.
        #[arg(long, default_value_t = 0)]
        s: u32,
        #[arg(long, value_parser = parse_preset, default_value = "paper-8192")]
        preset: ParamPreset,
        /// Print every key in hex.
        #[arg(long)]
        list_keys: bool,
    },
    /// Measure equality operators or retrieval costs.
    Bench {
        #[command(subcommand)]
        what: BenchCommand,
    },
    /// Print a cost table as CSV: 2 = equality operators, 4 = PIR protocol
    /// comparison, 7 = query bit-lengths.
    Analyze {
        #[arg(long, value_parser = ["2", "4", "7"])]
        table: String,
        /// Folklore operand width (`--table 2`) or row count (`--table 4`).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
        /// SealPIR/MulPIR dimension (`--table 4`).
        #[arg(long, default_value_t = 2)]
        d: u32,
        /// Expansion factor (`--table 4`); defaults to that of paper-8192.
        #[arg(long)]
        f: Option<u64>,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Evaluate one equality operator over a full batch of slots.
    Eq {
        #[arg(long)]
        op: EqOp,
        /// Domain size, `2^B` or decimal.
        #[arg(long, value_parser = parse_size)]
        n: num_bigint::BigUint,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Run on this BFV preset instead of the transparent backend.
        #[arg(long, value_parser = parse_preset)]
        preset: Option<ParamPreset>,
    },
    /// Retrieval costs for an index database, optionally executed.
    Pir {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long)]
        c: Option<u32>,
        #[arg(long, value_parser = parse_preset, default_value = "paper-8192")]
        preset: ParamPreset,
        /// Execute this many retrievals in-process.
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
}

fn parse_preset(s: &str) -> Result<ParamPreset, String> {
    s.parse()
}

fn main() -> Result<()> {
    if let Ok(threads) = std::env::var("CWPIR_THREADS") {
        let threads: usize = threads
            .parse()
            .context("CWPIR_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    match Cli::parse().command {
        Command::Serve {
            db,
            bind,
            k,
            c,
            preset,
            max_frame,
        } => {
            let file = DbFile::load(&db).with_context(|| format!("reading {}", db.display()))?;
            let state = ServerState::setup(
                &file,
                &ServeOptions {
                    k,
                    c,
                    preset,
                    max_frame,
                },
            )?;
            let h = state.hello().clone();
            let server = Server::bind(&bind, state)?;
            eprintln!(
                "serving {} rows on {} (preset {}, k = {}, m = {}, c = {}, s = {})",
                h.rows,
                server.local_addr()?,
                h.preset,
                h.k,
                h.m,
                h.c,
                h.s
            );
            server.run()?;
        }
        Command::Query { addr, key } => {
            let mut client = Client::connect(&addr)?;
            let mode = client.config().mode;
            let key = if mode == QueryMode::Index {
                key.into_bytes()
            } else {
                parse_key(&key, mode)?
            };
            match client.retrieve(&key)? {
                Some(payload) => println!("{}", encode_hex(&payload)),
                None => {
                    eprintln!("not found");
                    std::process::exit(1);
                }
            }
        }
        Command::MakeDb {
            out,
            rows,
            mode,
            keyword_bits,
            payload_len,
            s,
            preset,
            list_keys,
        } => {
            let mode = QueryMode::from(mode);
            let bits = if mode == QueryMode::Index {
                0
            } else {
                keyword_bits
            };
            if mode != QueryMode::Index && (bits as f64) < (rows as f64).log2() {
                bail!("{rows} distinct keys do not fit in {bits} bits");
            }
            let records = random_records(&mut rand::rng(), rows, mode, bits, payload_len);
            let file = DbFile::new(mode, bits, s, preset, records)?;
            file.save(&out)?;
            if list_keys {
                for (key, _) in &file.records {
                    println!("0x{}", encode_hex(key));
                }
            }
        }
        Command::Bench {
            what: BenchCommand::Eq { op, n, k, preset },
        } => {
            let backend = preset.map_or(Backend::Transparent, Backend::Bfv);
            let row = run_eq(backend, op, &n, k)?;
            println!("{}\n{}", eq_csv_header(), row.csv());
        }
        Command::Bench {
            what:
                BenchCommand::Pir {
                    n,
                    k,
                    s,
                    c,
                    preset,
                    run,
                },
        } => {
            let row = if run > 0 {
                pir_run(preset, n, k, s, c, run)?
            } else {
                pir_report(preset, n, k, s, c)?
            };
            println!("{}\n{}", pir_csv_header(), row.csv());
        }
        Command::Analyze {
            table,
            n,
            k,
            s,
            d,
            f,
        } => match table.as_str() {
            "2" => {
                let l = n.unwrap_or(16);
                let m = cwpir_core::cw_code::min_code_length(
                    &(num_bigint::BigUint::from(1u32) << l),
                    k,
                );
                print!("{}", eq_operator_csv(&eq_operator_table(l, m, k)));
            }
            "4" => {
                let f = f.unwrap_or_else(|| {
                    cwpir_core::cost_model::expansion_factor(&ParamPreset::Paper8192.params())
                });
                print!(
                    "{}",
                    pir_comparison_csv(&pir_comparison_table(n.unwrap_or(16384), s, k, d, f))
                );
            }
            _ => print!("{}", query_length_csv(&query_length_table())),
        },
    }
    Ok(())
}

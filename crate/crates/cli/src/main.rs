//! Batch command-line front end: build codes from the registry, encode
//! messages, run verification suites, and emit state/report files.
//!
//! Exit statuses: 0 pass, 1 verified-fail, 2 usage or input error,
//! 3 enumeration budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use qconv::classical::ErrorWindowPolicy;
use qconv::codes::{build_code, CodeEntry, ConvEncoder};
use qconv::error::Error;
use qconv::verify::{
    composition_check, duality_check, kl_matrix, ErrorModel, ErrorModelKind, KlReport,
};

#[derive(Debug, Parser)]
#[command(name = "qconv", version, about = "Quantum convolutional code toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct FlushFlags {
    /// Append `memory` zero symbols so tail frames get full protection
    /// (default).
    #[arg(long, overrides_with = "no_flush")]
    flush: bool,
    /// Encode the message as-is, without the zero tail.
    #[arg(long = "no-flush")]
    no_flush: bool,
}

impl FlushFlags {
    fn resolved(&self) -> bool {
        !self.no_flush
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a verification suite and write a report file.
    Verify {
        /// Registry id, e.g. eq8, eq14, paste:eq8, lift:eq2-classical.
        #[arg(long)]
        code: String,
        /// Register dimension N.
        #[arg(long)]
        n: u32,
        /// Message length L.
        #[arg(long)]
        len: usize,
        /// Error kind for the Knill-Laflamme sweep.
        #[arg(long, default_value = "general")]
        model: String,
        /// Window width w of the error policy.
        #[arg(long)]
        window: usize,
        /// Maximum errors t per window.
        #[arg(long)]
        max: usize,
        /// Absolute tolerance on deviations.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Which suite to run.
        #[arg(long, default_value = "kl", value_parser = ["kl", "duality", "composition"])]
        check: String,
        #[command(flatten)]
        flush: FlushFlags,
        /// Report file path (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a message and write the state file.
    Encode {
        #[arg(long)]
        code: String,
        #[arg(long)]
        n: u32,
        /// Comma-separated residues, e.g. "1,0"; empty for the zero-length
        /// message.
        #[arg(long, default_value = "")]
        message: String,
        #[command(flatten)]
        flush: FlushFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical encode/decode over Z_N.
    Classical {
        #[command(subcommand)]
        action: ClassicalAction,
    },
    /// Check that two codes agree on every message at (N, L).
    Compare {
        /// Two registry ids (pass --code twice).
        #[arg(long, num_args = 1, action = clap::ArgAction::Append)]
        code: Vec<String>,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        len: usize,
        #[command(flatten)]
        flush: FlushFlags,
    },
    /// Print the Lambda table stored in a report file.
    Tables {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum ClassicalAction {
    Encode {
        #[arg(long, default_value = "")]
        message: String,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        flush: FlushFlags,
    },
    Decode {
        /// Received word as comma-separated residues.
        #[arg(long)]
        message: String,
        #[arg(long)]
        n: u32,
        /// Message length to decode to.
        #[arg(long)]
        len: usize,
        #[command(flatten)]
        flush: FlushFlags,
    },
}

/// KL report file: job parameters plus the verdict table.
#[derive(Debug, Serialize, Deserialize)]
struct ReportFile {
    code: String,
    n: u32,
    len: usize,
    flush: bool,
    model: String,
    window: usize,
    max_errors: usize,
    #[serde(flatten)]
    report: KlReport,
}

fn parse_symbols(text: &str) -> Result<Vec<u32>, Error> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(vec![]);
    }
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("`{tok}` is not a residue")))
        })
        .collect()
}

fn render_symbols(symbols: &[u32]) -> String {
    symbols
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn quantum_code(id: &str, n: u32) -> Result<ConvEncoder, Error> {
    match build_code(id, n)? {
        CodeEntry::Quantum(enc) => Ok(enc),
        CodeEntry::Classical(_) => Err(Error::Construction(format!(
            "`{id}` is a classical code; this command needs a quantum encoder"
        ))),
    }
}

/// Writes through a temp file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut file = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    use std::io::Write;
    file.write_all(contents.as_bytes())?;
    file.persist(path)?;
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Resource { .. } => 3,
        _ => 2,
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify {
            code,
            n,
            len,
            model,
            window,
            max,
            tol,
            check,
            flush,
            out,
        } => {
            let enc = quantum_code(&code, n)?;
            let kind: ErrorModelKind = model.parse()?;
            let policy = ErrorWindowPolicy::new(window, max)?;
            let flush = flush.resolved();
            match check.as_str() {
                "kl" => {
                    let report = kl_matrix(&enc, len, flush, &ErrorModel { kind, policy }, tol)?;
                    let pass = report.pass;
                    println!(
                        "verify {code} n={n} len={len} model={kind} window={window} max={max}: \
                         {} (max_offdiagonal={:.3e}, max_lambda_deviation={:.3e}, pairs={})",
                        if pass { "pass" } else { "FAIL" },
                        report.max_offdiagonal,
                        report.max_lambda_deviation,
                        report.pair_count
                    );
                    if let Some(path) = out {
                        let file = ReportFile {
                            code,
                            n,
                            len,
                            flush,
                            model: kind.to_string(),
                            window,
                            max_errors: max,
                            report,
                        };
                        let mut text = serde_json::to_string_pretty(&file)
                            .map_err(|e| Error::Parse(e.to_string()))?;
                        text.push('\n');
                        write_atomic(&path, &text).map_err(io_error)?;
                    }
                    Ok(if pass { 0 } else { 1 })
                }
                "duality" => {
                    let report = duality_check(&enc, len, &policy, tol)?;
                    println!(
                        "duality {code}: forward={} backward={} (spin_on_code={}, \
                         phase_on_fourier={}, phase_on_code={}, spin_on_fourier={})",
                        report.forward_consistent,
                        report.backward_consistent,
                        report.spin_on_code.pass,
                        report.phase_on_fourier.pass,
                        report.phase_on_code.pass,
                        report.spin_on_fourier.pass
                    );
                    if let Some(path) = out {
                        let mut text = serde_json::to_string_pretty(&report)
                            .map_err(|e| Error::Parse(e.to_string()))?;
                        text.push('\n');
                        write_atomic(&path, &text).map_err(io_error)?;
                    }
                    Ok(if report.pass { 0 } else { 1 })
                }
                "composition" => {
                    let report = composition_check(&enc, len, &policy, tol)?;
                    println!(
                        "composition {code}: spin={} phase={} general={} conditional={}",
                        report.spin.pass,
                        report.phase.pass,
                        report.general.pass,
                        report.conditional_holds
                    );
                    if let Some(path) = out {
                        let mut text = serde_json::to_string_pretty(&report)
                            .map_err(|e| Error::Parse(e.to_string()))?;
                        text.push('\n');
                        write_atomic(&path, &text).map_err(io_error)?;
                    }
                    Ok(if report.pass { 0 } else { 1 })
                }
                _ => unreachable!("clap validates --check"),
            }
        }
        Command::Encode {
            code,
            n,
            message,
            flush,
            out,
        } => {
            let enc = quantum_code(&code, n)?;
            let message = parse_symbols(&message)?;
            let state = enc.encode(&message, flush.resolved())?;
            println!(
                "encode {code} n={n} message=[{}]: registers={} terms={} norm={:.9}",
                render_symbols(&message),
                state.registers(),
                state.term_count(),
                state.norm_sqr().sqrt()
            );
            if let Some(path) = out {
                write_atomic(&path, &state.to_json()).map_err(io_error)?;
            }
            Ok(0)
        }
        Command::Classical { action } => match action {
            ClassicalAction::Encode { message, n, flush } => {
                let code = match build_code("eq2-classical", n)? {
                    CodeEntry::Classical(c) => c,
                    _ => unreachable!(),
                };
                let word = code.encode(&parse_symbols(&message)?, flush.resolved())?;
                println!("{}", render_symbols(&word));
                Ok(0)
            }
            ClassicalAction::Decode {
                message,
                n,
                len,
                flush,
            } => {
                let code = match build_code("eq2-classical", n)? {
                    CodeEntry::Classical(c) => c,
                    _ => unreachable!(),
                };
                let received = parse_symbols(&message)?;
                let (decoded, distance) =
                    code.decode_brute_force(&received, len, flush.resolved())?;
                println!("{} (distance {distance})", render_symbols(&decoded));
                Ok(0)
            }
        },
        Command::Compare {
            code,
            n,
            len,
            flush,
        } => {
            if code.len() != 2 {
                return Err(Error::Validation(
                    "compare needs exactly two --code arguments".into(),
                ));
            }
            let a = quantum_code(&code[0], n)?;
            let b = quantum_code(&code[1], n)?;
            let flush = flush.resolved();
            if a.output_registers(len, flush) != b.output_registers(len, flush) {
                println!(
                    "differ: {} emits {} registers, {} emits {} (len={len})",
                    code[0],
                    a.output_registers(len, flush),
                    code[1],
                    b.output_registers(len, flush)
                );
                return Ok(1);
            }
            let mut message = vec![0u32; len];
            loop {
                let sa = a.encode(&message, flush)?;
                let sb = b.encode(&message, flush)?;
                let deviation = sa.max_term_deviation(&sb)?;
                if deviation > 1e-9 {
                    println!(
                        "differ on message [{}]: max term deviation {deviation:.3e}",
                        render_symbols(&message)
                    );
                    return Ok(1);
                }
                if !advance(&mut message, n) {
                    break;
                }
            }
            println!(
                "agree: {} and {} match on all {} messages",
                code[0],
                code[1],
                (n as u64).pow(len as u32)
            );
            Ok(0)
        }
        Command::Tables { report } => {
            let text = std::fs::read_to_string(&report).map_err(io_error)?;
            let file: ReportFile =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            println!(
                "# {} n={} len={} model={} window={} max={} pass={}",
                file.code,
                file.n,
                file.len,
                file.model,
                file.window,
                file.max_errors,
                file.report.pass
            );
            println!(
                "# {} of {} pattern pairs carry |Lambda| above tolerance",
                file.report.lambda_count, file.report.pair_count
            );
            for entry in &file.report.lambda_table {
                println!(
                    "Lambda[{} , {}] = {:+.12}{:+.12}i",
                    entry.pattern_a, entry.pattern_b, entry.re, entry.im
                );
            }
            Ok(0)
        }
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::Parse(format!("io: {e}"))
}

fn advance(message: &mut [u32], n: u32) -> bool {
    for v in message.iter_mut().rev() {
        *v += 1;
        if *v < n {
            return true;
        }
        *v = 0;
    }
    false
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

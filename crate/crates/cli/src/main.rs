//! Command-line front end: spectrum search, undetected-error bounds by
//! either method, CRC search, coset inspection, and Monte Carlo
//! simulation, all with machine-readable output.
//!
//! Exit codes: 0 success, 1 usage error, 2 budget or state-space limit,
//! 3 strict mode with a flagged (non-rigorous) result.

use clap::{Args, Parser, Subcommand, ValueEnum};
use convcrc::construction::pud_bound_construction;
use convcrc::convcode::ConvCode;
use convcrc::crc::CrcSpec;
use convcrc::crcsearch::{good_crc_over_lengths, search_best_crc, SearchConfig};
use convcrc::error::Error as CoreError;
use convcrc::eventsearch::{search_events, SearchConfig as EventConfig, Spectrum};
use convcrc::exclusion::{build_cosets, pud_bound_exclusion};
use convcrc::mcsim::{simulate_concatenated, simulate_equivalent_fer, StopRule};
use convcrc::probability::{PairwiseMode, SnrPoint};
use convcrc::report::{BoundOptions, BoundReport};
use serde::Serialize;
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "convcrc", version, about = "CRC design for convolutional codes")]
struct Cli {
    /// Worker threads (0 = all cores). Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate error events of a convolutional code up to a distance.
    Spectrum(SpectrumArgs),
    /// Undetected-error probability bound for a CRC + convolutional pair.
    Bound(BoundArgs),
    /// Search for the best degree-m CRC generator.
    SearchCrc(SearchArgs),
    /// Monte Carlo simulation of the full chain (or equivalent-code FER).
    Simulate(SimulateArgs),
    /// x-cyclotomic coset partition modulo a CRC generator.
    Cosets(CosetsArgs),
}

#[derive(Args)]
struct ConvArgs {
    /// Generator polynomials in octal, e.g. "133,171".
    #[arg(long)]
    conv: String,
    /// Encoder memory (number of delay elements).
    #[arg(long)]
    nu: usize,
}

impl ConvArgs {
    fn build(&self) -> Result<ConvCode, CoreError> {
        ConvCode::from_octal_str(&self.conv, self.nu)
    }
}

#[derive(Args)]
struct CrcArgs {
    /// CRC generator in Koopman hex (x^m..x^1 coefficients, x^0 implied).
    #[arg(long)]
    crc: String,
    /// CRC degree m.
    #[arg(long)]
    crc_degree: usize,
}

impl CrcArgs {
    fn build(&self) -> Result<CrcSpec, CoreError> {
        CrcSpec::parse_koopman_hex(&self.crc, self.crc_degree)
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    conv: ConvArgs,
    /// Search depth (maximum output distance).
    #[arg(long)]
    dmax: usize,
    /// Record input error patterns (more memory).
    #[arg(long)]
    patterns: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    conv: ConvArgs,
    #[command(flatten)]
    crc: CrcArgs,
    #[arg(long, value_enum)]
    method: Method,
    /// Information length in bits.
    #[arg(long)]
    k: usize,
    /// Per-QPSK-symbol Es/N0 in dB; comma-separated list for a sweep.
    #[arg(long, value_delimiter = ',')]
    snr_db: Vec<f64>,
    /// Search depth limit.
    #[arg(long)]
    dmax: usize,
    /// Pairwise error probability weighting of enumerated terms.
    #[arg(long, value_enum, default_value_t = Pairwise::ExpBound)]
    pairwise: Pairwise,
    /// Replace e^p - 1 in the tail by its first ten series terms.
    #[arg(long)]
    ten_term: bool,
    /// Drop the tail: an approximation instead of a bound.
    #[arg(long)]
    optimistic: bool,
    /// Exit non-zero if any point is flagged non-rigorous.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exclusion,
    Construction,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairwise {
    /// Exact Q(sqrt(2 d gamma)).
    Exact,
    /// Q(sqrt(2 d_free gamma)) e^(-(d - d_free) gamma), as in the
    /// reference curves.
    ExpBound,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    conv: ConvArgs,
    /// CRC degree to search.
    #[arg(long)]
    degree: usize,
    /// Information length in bits.
    #[arg(long)]
    k: usize,
    /// Evaluate these information lengths and report per-length winners
    /// plus the generators good over the whole range.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    /// Distance cap for the elimination rounds (default 3 d_free - 1).
    #[arg(long)]
    max_distance: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    conv: ConvArgs,
    #[command(flatten)]
    crc: CrcArgs,
    /// Information length in bits.
    #[arg(long)]
    k: usize,
    /// Per-QPSK-symbol Es/N0 in dB.
    #[arg(long)]
    snr_db: f64,
    /// Stop after this many undetected errors (frame errors in
    /// equivalent-FER mode).
    #[arg(long, default_value_t = 30)]
    min_undetected: u64,
    /// Frame budget; accepts scientific notation like 1e8.
    #[arg(long, default_value = "1e7", value_parser = parse_frames)]
    max_frames: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Simulate the equivalent catastrophic code's frame error rate
    /// instead of the concatenated chain.
    #[arg(long)]
    equivalent_fer: bool,
}

fn parse_frames(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("bad frame count {s:?}"))?;
    if (1.0..=1e18).contains(&f) && f.fract() == 0.0 {
        Ok(f as u64)
    } else {
        Err(format!("bad frame count {s:?}"))
    }
}

#[derive(Args)]
struct CosetsArgs {
    #[command(flatten)]
    crc: CrcArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code conventions differ; usage errors are 1 here
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = cli.out.clone();
    match run(cli) {
        Ok(RunOutcome { text, flagged }) => {
            let write_result = match out {
                Some(path) => std::fs::write(path, text.as_bytes()).map_err(|e| e.to_string()),
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| e.to_string()),
            };
            if let Err(e) = write_result {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if flagged {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.downcast_ref::<CoreError>() {
                Some(CoreError::SearchBudget(_)) | Some(CoreError::StateSpaceLimit { .. }) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

struct RunOutcome {
    text: String,
    flagged: bool,
}

fn plain(text: String) -> RunOutcome {
    RunOutcome {
        text,
        flagged: false,
    }
}

fn run(cli: Cli) -> anyhow::Result<RunOutcome> {
    match cli.command {
        Command::Spectrum(args) => {
            let code = args.conv.build()?;
            let mut cfg = EventConfig::new(args.dmax);
            if args.patterns {
                cfg = cfg.with_patterns();
            }
            let spectrum = search_events(&code, &cfg)?;
            let text = match args.format {
                Format::Json => to_json(&spectrum_report(&code, &spectrum))?,
                Format::Csv => spectrum_csv(&spectrum),
            };
            Ok(plain(text))
        }
        Command::Bound(args) => {
            let code = args.conv.build()?;
            let spec = args.crc.build()?;
            if args.snr_db.is_empty() {
                anyhow::bail!("at least one --snr-db value is required");
            }
            let snrs: Vec<SnrPoint> = args
                .snr_db
                .iter()
                .map(|&db| SnrPoint::from_symbol_es_n0_db(db))
                .collect::<Result<_, _>>()?;
            let opts = BoundOptions {
                pairwise: match args.pairwise {
                    Pairwise::Exact => PairwiseMode::Exact,
                    Pairwise::ExpBound => PairwiseMode::DfreeExp,
                },
                ten_term_tail: args.ten_term,
                optimistic: args.optimistic,
            };
            let report = match args.method {
                Method::Exclusion => {
                    pud_bound_exclusion(&code, &spec, args.k, &snrs, args.dmax, &opts)?
                }
                Method::Construction => {
                    pud_bound_construction(&code, &spec, args.k, &snrs, args.dmax, &opts)?
                }
            };
            let flagged = report.points.iter().any(|p| p.tail_unavailable);
            let text = match args.format {
                Format::Json => to_json(&report)?,
                Format::Csv => bound_csv(&report),
            };
            Ok(RunOutcome {
                text,
                flagged: flagged && args.strict,
            })
        }
        Command::SearchCrc(args) => {
            let code = args.conv.build()?;
            let mut cfg = SearchConfig::new(args.degree, code, args.k);
            cfg.max_distance = args.max_distance;
            let text = match args.lengths {
                Some(lengths) => to_json(&good_crc_over_lengths(&cfg, &lengths)?)?,
                None => {
                    let (winner, audit) = search_best_crc(&cfg)?;
                    debug_assert_eq!(winner.koopman_hex(), audit.winner);
                    to_json(&audit)?
                }
            };
            Ok(plain(text))
        }
        Command::Simulate(args) => {
            let code = args.conv.build()?;
            let spec = args.crc.build()?;
            let snr = SnrPoint::from_symbol_es_n0_db(args.snr_db)?;
            let stop = StopRule {
                min_events: args.min_undetected,
                max_frames: args.max_frames,
            };
            let outcome = if args.equivalent_fer {
                let eq = convcrc::construction::build_equivalent(&spec, &code)?;
                simulate_equivalent_fer(&eq, args.k, snr, stop, args.seed)
            } else {
                simulate_concatenated(&spec, &code, args.k, snr, stop, args.seed)
            };
            #[derive(Serialize)]
            struct SimReport<'a> {
                schema: &'static str,
                conv_octal: String,
                memory: usize,
                crc_hex: String,
                crc_degree: usize,
                k: usize,
                n: usize,
                snr_db: f64,
                gamma: f64,
                stop: StopRule,
                outcome: &'a convcrc::mcsim::SimOutcome,
            }
            let text = to_json(&SimReport {
                schema: "convcrc/sim-run/v1",
                conv_octal: code.octal_string(),
                memory: code.memory(),
                crc_hex: spec.koopman_hex(),
                crc_degree: spec.degree(),
                k: args.k,
                n: args.k + spec.degree(),
                snr_db: args.snr_db,
                gamma: snr.gamma(),
                stop,
                outcome: &outcome,
            })?;
            Ok(plain(text))
        }
        Command::Cosets(args) => {
            let spec = args.crc.build()?;
            let table = build_cosets(&spec)?;
            #[derive(Serialize)]
            struct CosetReport {
                schema: &'static str,
                crc_hex: String,
                crc_degree: usize,
                polynomial: String,
                cosets: Vec<CosetEntry>,
            }
            #[derive(Serialize)]
            struct CosetEntry {
                representative: String,
                size: u64,
                members: Vec<String>,
            }
            let cosets = (0..table.coset_count() as u32)
                .map(|id| CosetEntry {
                    representative: format!("{:#x}", table.representative(id)),
                    size: table.size_of(id),
                    members: table.members(id).iter().map(|m| format!("{m:#x}")).collect(),
                })
                .collect();
            let text = to_json(&CosetReport {
                schema: "convcrc/cosets/v1",
                crc_hex: spec.koopman_hex(),
                crc_degree: spec.degree(),
                polynomial: spec.poly().to_string(),
                cosets,
            })?;
            Ok(plain(text))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct SpectrumReport {
    schema: &'static str,
    conv_octal: String,
    memory: usize,
    dmax: usize,
    d_free: Option<usize>,
    patterns_recorded: bool,
    total_events: u64,
    buckets: Vec<BucketReport>,
}

#[derive(Serialize)]
struct BucketReport {
    d: usize,
    count: u64,
    /// length -> number of events of that length
    lengths: std::collections::BTreeMap<usize, u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    events: Vec<EventReport>,
}

#[derive(Serialize)]
struct EventReport {
    l: usize,
    pattern_hex: String,
}

fn spectrum_report(code: &ConvCode, spectrum: &Spectrum) -> SpectrumReport {
    let buckets = spectrum
        .distances()
        .into_iter()
        .map(|d| {
            let bucket = spectrum.bucket(d).expect("distance listed");
            BucketReport {
                d,
                count: bucket.count(),
                lengths: bucket.lengths.clone(),
                events: spectrum
                    .events(d)
                    .iter()
                    .map(|ev| EventReport {
                        l: ev.length,
                        pattern_hex: ev.pattern.as_ref().unwrap().to_hex_mask(),
                    })
                    .collect(),
            }
        })
        .collect();
    SpectrumReport {
        schema: "convcrc/spectrum/v1",
        conv_octal: code.octal_string(),
        memory: code.memory(),
        dmax: spectrum.depth(),
        d_free: spectrum.d_free(),
        patterns_recorded: spectrum.patterns_recorded(),
        total_events: spectrum.total_events(),
        buckets,
    }
}

fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut s = String::from("d,a_d\n");
    for d in spectrum.distances() {
        s.push_str(&format!("{d},{}\n", spectrum.count(d)));
    }
    s
}

fn bound_csv(report: &BoundReport) -> String {
    let mut s = String::from(
        "snr_db,gamma,total,singles,doubles,higher_order,tail,tail_unavailable\n",
    );
    for p in &report.points {
        s.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{},{}\n",
            p.snr_db,
            p.gamma,
            p.total,
            p.singles,
            p.doubles,
            p.higher_order,
            p.tail.map(|t| format!("{t:e}")).unwrap_or_default(),
            p.tail_unavailable,
        ));
    }
    s
}

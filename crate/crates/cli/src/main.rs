//! `rxhistory`: compile release files, serve the API, evaluate, and search.
//!
//! Exit status: 0 success, 1 usage error, 2 data error.

use std::fmt::Display;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};

use rxhistory_core::capture::{FrequencyVocabulary, MedicationHistoryEntry};
use rxhistory_core::compile::{compile, CompileOptions, CompiledTerminology, DenyList};
use rxhistory_core::eval::{build_report, time_suggestions, typed_prefixes};
use rxhistory_core::rrf::{ParseReport, Release, SourceDialect};
use rxhistory_core::search::{SearchIndex, DEFAULT_SUGGEST_LIMIT};
use rxhistory_service::{parse_record, ApiConfig, ServeError, DEFAULT_PORT};

#[derive(Parser)]
#[command(
    name = "rxhistory",
    version,
    about = "Medication terminology compiler and capture service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the production tables from RRF release files.
    Compile {
        /// Concepts file (MRCONSO.RRF / RXNCONSO.RRF).
        #[arg(long)]
        conso: PathBuf,
        /// Relationships file (MRREL.RRF / RXNREL.RRF).
        #[arg(long)]
        rel: PathBuf,
        /// Attributes file (MRSAT.RRF / RXNSAT.RRF).
        #[arg(long)]
        sat: PathBuf,
        /// `umls` or `rxnorm`.
        #[arg(long)]
        dialect: SourceDialect,
        /// Name patterns to suppress, one per line.
        #[arg(long)]
        deny_list: Option<PathBuf>,
        /// Release label stored in the manifest.
        #[arg(long, default_value = "unversioned")]
        version_tag: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, env = "RXHISTORY_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Journal file; defaults to one inside the data directory.
        #[arg(long)]
        journal: Option<PathBuf>,
        /// Extra dose-frequency terms, `code<TAB>display` per line.
        #[arg(long)]
        frequencies: Option<PathBuf>,
        #[arg(long, default_value_t = 7200)]
        cache_ttl_secs: u64,
    },
    /// Write the four-factor evaluation report.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// Legacy medication names, one per line.
        #[arg(long)]
        legacy: PathBuf,
        /// Captured entries or journal records, one JSON object per line.
        #[arg(long)]
        entries: Option<PathBuf>,
        /// Output directory for report.txt and report.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print auto-complete suggestions for one query.
    Suggest {
        #[arg(long)]
        data: PathBuf,
        query: String,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn usage(msg: impl Display) -> Self {
        Failure::Usage(msg.to_string())
    }

    fn data(msg: impl Display) -> Self {
        Failure::Data(msg.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn require_file(flag: &str, path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--{flag}: {} is not a readable file",
            path.display()
        )))
    }
}

fn load_tables(dir: &Path) -> Result<CompiledTerminology, Failure> {
    CompiledTerminology::read_tables(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))
}

fn print_report(name: &str, r: &ParseReport) {
    println!("{name}_lines={}", r.lines_read);
    println!("{name}_malformed={}", r.malformed_count);
    for m in r.malformed.iter().take(5) {
        eprintln!("{name}: {m}");
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_compile(
    conso: &Path,
    rel: &Path,
    sat: &Path,
    dialect: SourceDialect,
    deny_list: Option<&Path>,
    version_tag: String,
    out: &Path,
) -> Outcome {
    require_file("conso", conso)?;
    require_file("rel", rel)?;
    require_file("sat", sat)?;
    let deny = match deny_list {
        Some(p) => {
            require_file("deny-list", p)?;
            DenyList::parse(&std::fs::read_to_string(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?)
        }
        None => DenyList::default(),
    };
    let release = Release::read(conso, rel, sat, dialect).map_err(|e| Failure::data(format!("stage read: {e}")))?;
    print_report("concepts", &release.concept_report);
    print_report("relationships", &release.relationship_report);
    print_report("attributes", &release.attribute_report);

    let options = CompileOptions {
        version_tag,
        ..CompileOptions::default()
    };
    let c = compile(
        &release.concepts,
        &release.relationships,
        &release.attributes,
        &deny,
        &options,
    )
    .map_err(|e| Failure::data(format!("compile failed ({dialect} dialect): {e}")))?;
    c.terminology
        .write_tables(out)
        .map_err(|e| Failure::data(format!("stage write: {e}")))?;

    let r = &c.report;
    println!("med_list_rows={}", c.terminology.med_list().len());
    println!("med_list_common_rows={}", c.terminology.med_list_common().len());
    println!("med_list_dose_rows={}", c.terminology.med_list_dose().len());
    println!("suppressed_flag={}", r.suppression.suppressed_flag);
    println!("suppressed_brand_of={}", r.suppression.brand_of);
    println!("suppressed_deny_list={}", r.suppression.deny_listed);
    println!("other_sources={}", r.other_sources);
    println!("forms_without_strength={}", r.forms_without_strength);
    println!("strength_failures={}", r.strength_failures.len());
    println!("forms_without_name={}", r.forms_without_name);
    println!("brands_with_generic={}", r.brands_with_generic);
    Ok(())
}

fn cmd_serve(
    data: PathBuf,
    port: u16,
    journal: Option<PathBuf>,
    frequencies: Option<&Path>,
    cache_ttl_secs: u64,
) -> Outcome {
    let mut vocabulary = FrequencyVocabulary::default();
    if let Some(p) = frequencies {
        require_file("frequencies", p)?;
        let text = std::fs::read_to_string(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
        vocabulary
            .extend_from_text(&text)
            .map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
    }
    let config = ApiConfig {
        listen_port: port,
        cache_ttl: Duration::from_secs(cache_ttl_secs),
        journal_path: journal,
        vocabulary,
        ..ApiConfig::new(data)
    };
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::data)?;
    runtime.block_on(async {
        let state = rxhistory_service::load_state(&config).map_err(Failure::data)?;
        let listener = rxhistory_service::bind(config.listen_port).await.map_err(|e| match e {
            ServeError::Bind { port, source } if source.kind() == io::ErrorKind::AddrInUse => {
                Failure::data(format!("port {port} is already in use"))
            }
            other => Failure::data(other),
        })?;
        let addr = listener.local_addr().map_err(Failure::data)?;
        println!("listening on {addr}");
        let _ = io::stdout().flush();
        rxhistory_service::serve_with_shutdown(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(Failure::data)
    })
}

/// One entry per non-blank line: either a bare entry or a journal record.
fn read_entries(path: &Path) -> Result<Vec<MedicationHistoryEntry>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_record(l)
                .map(|r| r.entry)
                .or_else(|_| serde_json::from_str::<MedicationHistoryEntry>(l))
                .map_err(|e| Failure::data(format!("{}: line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn cmd_evaluate(data: &Path, legacy: &Path, entries: Option<&Path>, out: &Path) -> Outcome {
    require_file("legacy", legacy)?;
    if let Some(p) = entries {
        require_file("entries", p)?;
    }
    let t = load_tables(data)?;
    let legacy_text =
        std::fs::read_to_string(legacy).map_err(|e| Failure::data(format!("{}: {e}", legacy.display())))?;
    let names: Vec<&str> = legacy_text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let captured = match entries {
        Some(p) => read_entries(p)?,
        None => Vec::new(),
    };

    let index = SearchIndex::build(&t);
    let mut queries = typed_prefixes(&index);
    queries.truncate(20_000);
    let latency = time_suggestions(&index, &queries);
    let report = build_report(&t, &captured, &names, &latency);

    std::fs::create_dir_all(out).map_err(|e| Failure::data(format!("{}: {e}", out.display())))?;
    let write = |name: &str, body: String| {
        let p = out.join(name);
        std::fs::write(&p, body).map_err(|e| Failure::data(format!("{}: {e}", p.display())))
    };
    write("report.txt", report.to_text())?;
    write("report.json", report.to_json() + "\n")?;
    print!("{}", report.to_text());
    println!(
        "coverage: {:.1}% ({}/{})",
        report.coverage.rate * 100.0,
        report.coverage.matched,
        report.coverage.total
    );
    Ok(())
}

fn cmd_suggest(data: &Path, query: &str) -> Outcome {
    let t = load_tables(data)?;
    let index = SearchIndex::build(&t);
    let start = Instant::now();
    let found = index.suggest(query, DEFAULT_SUGGEST_LIMIT);
    let elapsed = start.elapsed();
    for s in &found {
        println!("{}", s.med_name);
    }
    eprintln!("elapsed_us={}", elapsed.as_micros());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Compile {
            conso,
            rel,
            sat,
            dialect,
            deny_list,
            version_tag,
            out,
        } => cmd_compile(&conso, &rel, &sat, dialect, deny_list.as_deref(), version_tag, &out),
        Command::Serve {
            data,
            port,
            journal,
            frequencies,
            cache_ttl_secs,
        } => cmd_serve(data, port, journal, frequencies.as_deref(), cache_ttl_secs),
        Command::Evaluate {
            data,
            legacy,
            entries,
            out,
        } => cmd_evaluate(&data, &legacy, entries.as_deref(), &out),
        Command::Suggest { data, query } => cmd_suggest(&data, &query),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

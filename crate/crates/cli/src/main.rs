use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hstraffic::config::{self, ConfigError};
use hstraffic::generator::{generate_synthetic, GeneratorSpec};
use hstraffic::pipeline::{emit_report, run_analyze, InputSource, PipelineError, RunConfig};
use hstraffic::topology::CoreRule;
use hstraffic::zm::AlphaGrid;

#[derive(Parser)]
#[command(name = "hstraffic", version, about = "Hypersparse traffic analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic packet CSV from a generator spec file.
    Generate {
        /// Generator spec in key=value form.
        #[arg(long)]
        spec: PathBuf,
        /// Number of valid packets to emit.
        #[arg(long)]
        packets: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Window, pool, fit and decompose packet CSV files.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Packet CSV files (`.gz` accepted), read as one stream in order.
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Comma-separated window sizes, e.g. `1e5,3e5`.
    #[arg(long)]
    nv: Option<String>,
    /// Comma-separated quantities, or `all`.
    #[arg(long)]
    quantities: Option<String>,
    /// Exponent grid as start:stop:step.
    #[arg(long)]
    alpha_grid: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
    /// Bound the core by the first supernode's degrees instead of excluding
    /// supernodes.
    #[arg(long)]
    core_strict_inequality: bool,
    /// Skip one header line in each input file.
    #[arg(long)]
    header: bool,
    /// key=value file with defaults for any of the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn report(&self) -> ExitCode {
        match self {
            Failure::Config(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
            Failure::Io(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e.exit_code() {
            1 => Failure::Config(e.to_string()),
            _ => Failure::Io(e.to_string()),
        }
    }
}

fn read_text(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn generate(spec: &PathBuf, packets: &str, out: &PathBuf) -> Result<(), Failure> {
    let spec = GeneratorSpec::from_config_text(&read_text(spec)?)?;
    let packets = config::parse_count("packets", packets)?;
    let (stream, truth) =
        generate_synthetic(&spec, packets).map_err(|e| Failure::Config(e.to_string()))?;
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", out.display()));
    let mut w = BufWriter::new(File::create(out).map_err(io)?);
    for record in stream {
        w.write_all(record.to_csv_line().as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)?;
    eprintln!(
        "wrote {} packets over {} links to {}",
        truth.packets,
        truth.links,
        out.display()
    );
    Ok(())
}

/// Flag values win over the config file.
fn merged(args: &AnalyzeArgs) -> Result<BTreeMap<String, String>, Failure> {
    let mut kv = match &args.config {
        Some(path) => config::parse_key_values(&read_text(path)?)?,
        None => BTreeMap::new(),
    };
    const KNOWN: [&str; 9] = [
        "input",
        "nv",
        "quantities",
        "alpha_grid",
        "workers",
        "out",
        "force",
        "core_strict_inequality",
        "header",
    ];
    if let Some(key) = kv.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()).into());
    }
    let mut set = |k: &str, v: String| {
        kv.insert(k.to_owned(), v);
    };
    if !args.input.is_empty() {
        let joined: Vec<String> = args.input.iter().map(|p| p.display().to_string()).collect();
        set("input", joined.join(","));
    }
    if let Some(v) = &args.nv {
        set("nv", v.clone());
    }
    if let Some(v) = &args.quantities {
        set("quantities", v.clone());
    }
    if let Some(v) = &args.alpha_grid {
        set("alpha_grid", v.clone());
    }
    if let Some(v) = &args.workers {
        set("workers", v.clone());
    }
    if let Some(v) = &args.out {
        set("out", v.display().to_string());
    }
    for (flag, key) in [
        (args.force, "force"),
        (args.core_strict_inequality, "core_strict_inequality"),
        (args.header, "header"),
    ] {
        if flag {
            set(key, "true".into());
        }
    }
    Ok(kv)
}

fn analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let kv = merged(args)?;
    let flag = |k: &str| -> Result<bool, Failure> {
        Ok(match kv.get(k) {
            Some(v) => config::parse_bool(k, v)?,
            None => false,
        })
    };
    let paths: Vec<PathBuf> = kv
        .get("input")
        .map(|v| v.split(',').map(|p| PathBuf::from(p.trim())).collect())
        .unwrap_or_default();
    if paths.is_empty() {
        return Err(Failure::Config("--input is required".into()));
    }
    let out = kv
        .get("out")
        .map(PathBuf::from)
        .ok_or_else(|| Failure::Config("--out is required".into()))?;

    let mut cfg = RunConfig::new(InputSource::Files {
        paths,
        header: flag("header")?,
    });
    if let Some(v) = kv.get("nv") {
        cfg.window_sizes = Some(config::parse_window_sizes(v)?);
    }
    if let Some(v) = kv.get("quantities") {
        cfg.quantities = config::parse_quantities(v)?;
    }
    if let Some(v) = kv.get("alpha_grid") {
        cfg.alpha_grid = AlphaGrid::parse(v).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Some(v) = kv.get("workers") {
        cfg.workers = config::parse_count("workers", v)? as usize;
    }
    if flag("core_strict_inequality")? {
        cfg = cfg.with_core_rule(CoreRule::StrictInequality);
    }

    let bundle = run_analyze(&cfg)?;
    emit_report(&bundle, &out, flag("force")?)?;
    for r in &bundle.results {
        eprintln!("N_V = {}: {} windows", r.n_v, r.windows.len());
        for q in &r.quantities {
            match &q.fit {
                Ok(f) => eprintln!(
                    "  {:<20} alpha {:.2}  delta {:.4}  loss {:.4}",
                    q.kind.as_str(),
                    f.params.alpha,
                    f.params.delta,
                    f.loss
                ),
                Err(e) => eprintln!("  {:<20} no fit: {e}", q.kind.as_str()),
            }
        }
    }
    eprintln!("reports written to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Generate { spec, packets, out } => generate(spec, packets, out),
        Command::Analyze(args) => analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

use clap::{Args, Parser, Subcommand};
use pinning_cli::config::{parse_param, ExperimentConfig, LawSpec, OutputSpec};
use pinning_cli::report::write_csv;
use pinning_cli::{run, write_outputs, CliError, EXIT_INVARIANT};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Renewal, homogeneous and disordered pinning computations.
#[derive(Parser)]
#[command(name = "pinning", version)]
struct Cli {
    /// Write `<experiment>.json` and the CSV tables into this directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for Monte Carlo runs (overrides the `seed` parameter).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel parts.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the JSON report on stdout instead of the main table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Inline {
    /// Law spec, e.g. `power:alpha=0.3`, `power:alpha=0.5,gamma=1`, `geometric:p=0.5`, `deterministic`.
    #[arg(long, default_value = "power:alpha=0.3")]
    law: String,
    /// Experiment parameter `key=value`; values are TOML literals (`h=[0.1,1]`).
    #[arg(short = 'p', long = "param")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Kernel table `K(n)` (and `K_b` with `-p b=...`).
    Law(Inline),
    /// Renewal function `u(n)`.
    Renewal(Inline),
    /// Homogeneous free energy `F(h)` and its derivative.
    Fe(Inline),
    /// Intersection kernel by deconvolution of `u²`.
    Intersect(Inline),
    /// Two-replica free energy `B(b, λ)`.
    Replica(Inline),
    /// Quenched Monte Carlo estimates of `F` and `μ`.
    Quench(Inline),
    /// Run a named experiment from a TOML configuration file.
    Experiment {
        config: PathBuf,
    },
}

fn inline(name: &str, a: &Inline) -> Result<ExperimentConfig, CliError> {
    let mut parameters = BTreeMap::new();
    for kv in &a.params {
        let (k, v) = parse_param(kv)?;
        parameters.insert(k, v);
    }
    Ok(ExperimentConfig { experiment: name.into(), law: LawSpec::parse(&a.law)?, parameters, output: OutputSpec::default() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match go(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn go(cli: Cli) -> Result<i32, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let (mut cfg, text) = match &cli.cmd {
        Cmd::Law(a) => (inline("law", a)?, None),
        Cmd::Renewal(a) => (inline("renewal", a)?, None),
        Cmd::Fe(a) => (inline("fe", a)?, None),
        Cmd::Intersect(a) => (inline("intersect", a)?, None),
        Cmd::Replica(a) => (inline("replica", a)?, None),
        Cmd::Quench(a) => (inline("quench", a)?, None),
        Cmd::Experiment { config } => {
            let text = std::fs::read_to_string(config).map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
            let cfg = ExperimentConfig::from_toml(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", config.display())),
                other => other,
            })?;
            (cfg, Some(text))
        }
    };
    if let Some(s) = cli.seed {
        cfg.parameters.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    if let Some(d) = &cli.out {
        cfg.output.dir = Some(d.display().to_string());
    }
    cfg.output.json |= cli.json;

    let (report, tables) = run(&cfg, text.as_deref())?;
    if let Some(dir) = &cfg.output.dir {
        write_outputs(&report, &tables, std::path::Path::new(dir))?;
    }
    // a closed pipe downstream is not an error worth reporting
    let mut so = std::io::stdout().lock();
    if cfg.output.json {
        let _ = writeln!(so, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else if cfg.output.dir.is_none() {
        if let Some(t) = tables.first() {
            let _ = write_csv(t, &mut so);
        }
    } else {
        for q in &report.results {
            let _ = match q.se {
                Some(se) => writeln!(so, "{} = {} ± {se} [{:?}]", q.name, q.value, q.tag),
                None => writeln!(so, "{} = {} [{:?}]", q.name, q.value, q.tag),
            };
        }
    }
    drop(so);
    for v in &report.invariants {
        eprintln!("{} {}: {}", if v.passed { "ok  " } else { "FAIL" }, v.name, v.detail);
    }
    for n in &report.notes {
        eprintln!("note: {n}");
    }
    Ok(if report.all_passed() { 0 } else { EXIT_INVARIANT })
}

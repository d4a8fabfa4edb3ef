//! `tlsctl`: run simulated TLS-control campaigns and analyze T1 records.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tlsctl::analysis::{self, AnalysisOptions, KindStats};
use tlsctl::config::{build_world, load_config, RunConfig};
use tlsctl::io::{self, BathFile, Manifest, Table};
use tlsctl::measurement::fit_exponential;
use tlsctl::protocols::{self, ControlKind, T1Record};
use tlsctl::Error;

#[derive(Parser)]
#[command(name = "tlsctl", version, about = "TLS-limited transmon T1 simulator and analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory (defaults to `run.output`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Clone)]
struct Campaign {
    #[command(flatten)]
    common: Common,
    /// Start from a saved bath instead of sampling one.
    #[arg(long, value_name = "PATH")]
    bath: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a TLS bath and write it to bath.json.
    SimulateBath(Common),
    /// Interleaved AC / no-control / fast-random campaign.
    RunInterleave(Campaign),
    /// Voltage optimization: hold a voltage while T1 beats the threshold.
    RunOptimize(Campaign),
    /// Champion hunt: coarse random scans with fine follow-ups.
    RunChampion(Campaign),
    /// AC measurements over a (vpp, f_ac) grid.
    SweepAc(Campaign),
    /// Measurements over a list of fridge temperatures.
    SweepTemperature(Campaign),
    /// Statistics, fits and figure tables from record files.
    Analyze {
        /// JSON-lines record files.
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Allow records from several qubits.
        #[arg(long)]
        allow_mixed: bool,
        /// Leave a qubit out of the Q-vs-frequency fit (repeatable).
        #[arg(long = "exclude-q", value_name = "QUBIT_ID")]
        exclude_q: Vec<String>,
        #[arg(long)]
        quiet: bool,
    },
    /// Fit an exponential to a (delay_us, p1[, shots]) CSV.
    FitDecay {
        csv: PathBuf,
        /// Shots per point when the file has no `shots` column.
        #[arg(long, default_value_t = 400)]
        shots: u32,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Fit the quasiparticle gap to a (temperature_mk, t1_us) CSV.
    FitTemperature {
        csv: PathBuf,
        /// Qubit frequency, GHz (defaults to `qubit.f_q` of --config).
        #[arg(long = "f-q", value_name = "GHZ")]
        f_q: Option<f64>,
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::SimulateBath(c) => simulate_bath(&c),
        Command::RunInterleave(c) => campaign("run-interleave", &c, |w, cfg| {
            protocols::run_interleave(w, &cfg.protocol.interleave, &cfg.protocol.kind_settings())
        }),
        Command::RunOptimize(c) => campaign("run-optimize", &c, |w, cfg| {
            let o = &cfg.protocol.optimizer;
            protocols::run_optimizer(w, o.threshold_us, o.max_measurements, &cfg.protocol.kind_settings().fast_random)
        }),
        Command::RunChampion(c) => campaign("run-champion", &c, |w, cfg| {
            let ch = &cfg.protocol.champion;
            protocols::run_champion(w, ch.coarse_threshold_us, ch.max_rounds, &cfg.protocol.kind_settings())
        }),
        Command::SweepAc(c) => campaign("sweep-ac", &c, |w, cfg| {
            let s = &cfg.protocol.ac_sweep;
            let cells = protocols::run_ac_sweep(w, &s.vpp_list, &s.f_ac_list, s.repeats, &cfg.protocol.kind_settings().ac)?;
            let mut records: Vec<T1Record> = cells.into_iter().flat_map(|c| c.records).collect();
            records.sort_by(|a, b| a.wall_time_s.total_cmp(&b.wall_time_s));
            Ok(records)
        }),
        Command::SweepTemperature(c) => campaign("sweep-temperature", &c, |w, cfg| {
            let s = &cfg.protocol.temperature_sweep;
            let points = protocols::run_temperature_sweep(
                w,
                &s.temperatures_mk,
                &s.kinds,
                s.repeats,
                &cfg.protocol.temperature_settings(),
            )?;
            Ok(points.into_iter().flat_map(|p| p.records).collect())
        }),
        Command::Analyze {
            records,
            out,
            allow_mixed,
            exclude_q,
            quiet,
        } => analyze(&records, &out, allow_mixed, exclude_q, quiet),
        Command::FitDecay { csv, shots, out, quiet } => fit_decay(&csv, shots, out.as_deref(), quiet),
        Command::FitTemperature {
            csv,
            f_q,
            config,
            out,
            quiet,
        } => {
            let f_q = match (f_q, config) {
                (Some(f), _) => f,
                (None, Some(path)) => {
                    load_config(&path)
                        .map_err(|e| Failure::Config(e.to_string()))?
                        .qubit
                        .f_q
                }
                (None, None) => return Err(Failure::Config("pass --f-q or --config".into())),
            };
            fit_temperature(&csv, f_q, out.as_deref(), quiet)
        }
    }
}

fn resolve_config(common: &Common) -> Result<RunConfig, Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required for this command".into()))?;
    let mut config = load_config(path).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    Ok(config)
}

fn out_dir(common: &Common, config: &RunConfig) -> PathBuf {
    common.out.clone().unwrap_or_else(|| config.run.output.clone())
}

fn simulate_bath(common: &Common) -> Outcome {
    let config = resolve_config(common)?;
    let dir = out_dir(common, &config);
    let world = build_world(&config, None)?;
    let path = io::output_path(&dir, "bath.json")?;
    io::write_json(
        &path,
        &BathFile::new(world.bath.clone(), &config.qubit.id, config.qubit.f_q, &config.hash()),
    )?;
    write_manifest(&dir, "simulate-bath", &config, vec!["bath.json".into()], 0)?;
    if !common.quiet {
        println!("sampled {} defects -> {}", world.bath.len(), path.display());
    }
    Ok(())
}

fn campaign(
    name: &str,
    args: &Campaign,
    body: impl FnOnce(&mut tlsctl::World, &RunConfig) -> tlsctl::Result<Vec<T1Record>>,
) -> Outcome {
    let config = resolve_config(&args.common)?;
    let dir = out_dir(&args.common, &config);
    let bath = args.bath.as_deref().map(io::read_bath).transpose()?;
    let mut world = build_world(&config, bath)?;
    let records = body(&mut world, &config)?;
    let path = io::output_path(&dir, "records.jsonl")?;
    io::write_records(&path, &records)?;
    write_manifest(&dir, name, &config, vec!["records.jsonl".into()], records.len())?;
    if !args.common.quiet {
        println!("{name}: {} records -> {}", records.len(), path.display());
        print_kind_summary(&records);
    }
    Ok(())
}

fn write_manifest(dir: &Path, command: &str, config: &RunConfig, outputs: Vec<String>, n: usize) -> tlsctl::Result<()> {
    io::write_json(&dir.join("manifest.json"), &Manifest::new(command, config, outputs, n))
}

fn print_kind_summary(records: &[T1Record]) {
    for kind in ControlKind::ALL {
        let s = KindStats::from_records(kind, records);
        if s.count + s.excluded_count == 0 {
            continue;
        }
        println!(
            "  {:<12} n={:<5} excluded={:<3} mean={:>9} us  hmean={:>9} us  std={:>9} us",
            kind.as_str(),
            s.count,
            s.excluded_count,
            fmt_us(s.mean_us),
            fmt_us(s.hmean_us),
            fmt_us(s.std_us),
        );
    }
}

fn fmt_us(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.1}"))
}

fn analyze(paths: &[PathBuf], out: &Path, allow_mixed: bool, exclude_q: Vec<String>, quiet: bool) -> Outcome {
    let mut records = Vec::new();
    for p in paths {
        records.extend(io::read_records(p)?);
    }
    let options = AnalysisOptions {
        allow_mixed,
        exclude_from_q_fit: exclude_q,
    };
    let report = analysis::analyze(&records, &options).map_err(|e| match e {
        Error::InvalidParameter { .. } => Failure::Config(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    let hash = report.config_hashes.join(",");
    io::write_json(&io::output_path(out, "report.json")?, &report)?;
    for (stem, table) in io::figure_tables(&records, &report) {
        table.write(&out.join(format!("{stem}.csv")), &hash)?;
    }
    if !quiet {
        println!("analyzed {} records from {} file(s) -> {}", records.len(), paths.len(), out.display());
        for q in &report.qubits {
            println!("qubit {} ({} GHz)", q.qubit_id, q.f_q_ghz);
            for s in &q.kinds {
                println!(
                    "  {:<12} n={:<5} mean={:>9} us  hmean={:>9} us  std={:>9} us",
                    s.kind.as_str(),
                    s.count,
                    fmt_us(s.mean_us),
                    fmt_us(s.hmean_us),
                    fmt_us(s.std_us)
                );
            }
            if let Some(n) = q.n_eff {
                println!("  n_eff = {n:.1}");
            }
        }
    }
    Ok(())
}

fn fit_decay(csv: &Path, shots: u32, out: Option<&Path>, quiet: bool) -> Outcome {
    let curve = io::read_p1_csv(csv, shots)?;
    let fit = fit_exponential(&curve)?;
    if let Some(dir) = out {
        io::write_json(&io::output_path(dir, "fit.json")?, &fit)?;
    }
    if !quiet {
        match fit.t1() {
            Some(t1) => println!("t1_us = {t1:.3} +/- {}", fmt_us(fit.t1_stderr_us)),
            None => println!("t1_us = unresolved (fit did not converge)"),
        }
        println!("amplitude = {:.5}  offset = {:.5}  residual_rms = {:.3e}", fit.amplitude, fit.offset, fit.residual_rms);
    }
    if fit.t1().is_none() {
        return Err(Failure::Runtime("decay fit did not converge".into()));
    }
    Ok(())
}

fn fit_temperature(csv: &Path, f_q: f64, out: Option<&Path>, quiet: bool) -> Outcome {
    let points = io::read_temperature_csv(csv)?;
    let fit = analysis::fit_temperature_model(&points, f_q).map_err(|e| match e {
        Error::InsufficientData(_) | Error::InvalidParameter { .. } => Failure::Config(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    if let Some(dir) = out {
        io::write_json(&io::output_path(dir, "temperature_fit.json")?, &fit)?;
        let mut t = Table::new(&["temperature_mk", "t1_us", "model_t1_us", "rate_residual_per_us", "used_in_fit"]);
        for r in &fit.residuals {
            t.push(vec![
                r.temperature_mk.to_string(),
                r.t1_us.to_string(),
                r.model_t1_us.to_string(),
                r.rate_residual.to_string(),
                r.used_in_fit.to_string(),
            ]);
        }
        t.write(&dir.join("fig5d_fit.csv"), "none")?;
    }
    if !quiet {
        println!("gamma0 = {:.6e} 1/us  (T1_0 = {:.1} us)", fit.gamma0, 1.0 / fit.gamma0);
        println!("gap = {:.4} GHz{}", fit.gap_ghz, if fit.converged { "" } else { "  (at search boundary)" });
    }
    if !fit.converged {
        return Err(Failure::Runtime("gap search ended on the interval boundary".into()));
    }
    Ok(())
}

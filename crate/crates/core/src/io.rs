//! Files: JSON-lines records, run manifests, bath snapshots, CSV inputs
//! and CSV tables.
//!
//! Every file written here carries the resolved-config hash: JSON documents
//! as a `config_hash` field, CSV tables as a leading `# config_hash:` line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{cumulative_hmean, AnalysisReport};
use crate::bath::BathState;
use crate::config::RunConfig;
use crate::measurement::P1Curve;
use crate::protocols::{ControlKind, T1Record};
use crate::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn file_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

/// One record per line.
pub fn write_records(path: &Path, records: &[T1Record]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(file_err(path))?;
    }
    w.flush().map_err(file_err(path))
}

/// Reads a JSON-lines record file; blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<T1Record>> {
    let mut records = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(file_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(r);
    }
    Ok(records)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(file_err(path))?;
    w.flush().map_err(file_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// What a campaign run produced and from which resolved config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub record_count: usize,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, outputs: Vec<String>, record_count: usize) -> Self {
        Self {
            tool: "tlsctl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config.hash(),
            seed: config.run.seed,
            outputs,
            record_count,
            config: config.clone(),
        }
    }
}

/// Units of the [`BathFile`] fields, written into the file itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathUnits {
    pub epsilon0: String,
    pub delta0: String,
    pub dipole_gain: String,
    pub g_bare: String,
    pub gamma2: String,
    pub diff_sigma: String,
    pub diff_tau: String,
    pub xi: String,
    pub clock: String,
}

impl Default for BathUnits {
    fn default() -> Self {
        Self {
            epsilon0: "GHz".into(),
            delta0: "GHz".into(),
            dipole_gain: "GHz/V".into(),
            g_bare: "rad/us".into(),
            gamma2: "rad/us".into(),
            diff_sigma: "GHz".into(),
            diff_tau: "s".into(),
            xi: "GHz".into(),
            clock: "s".into(),
        }
    }
}

/// Snapshot of a sampled bath.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathFile {
    pub units: BathUnits,
    pub config_hash: String,
    pub qubit_id: String,
    pub f_q_ghz: f64,
    pub state: BathState,
}

impl BathFile {
    pub fn new(state: BathState, qubit_id: &str, f_q_ghz: f64, config_hash: &str) -> Self {
        Self {
            units: BathUnits::default(),
            config_hash: config_hash.into(),
            qubit_id: qubit_id.into(),
            f_q_ghz,
            state,
        }
    }
}

pub fn read_bath(path: &Path) -> Result<BathState> {
    let file: BathFile = read_json(path)?;
    file.state.validate()?;
    Ok(file.state)
}

type NumericRow = (usize, Vec<f64>);

/// Numeric rows of a CSV input with their 1-based line numbers. Lines
/// starting with `#` are comments; a first row that does not parse as
/// numbers is taken as the header.
fn numeric_rows(path: &Path) -> Result<(Option<Vec<String>>, Vec<NumericRow>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(open(path)?);
    let mut header = None;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push((line, v)),
            Err(_) if header.is_none() && rows.is_empty() => {
                header = Some(rec.iter().map(|s| s.to_ascii_lowercase()).collect());
            }
            Err(e) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("non-numeric field: {e}"),
                })
            }
        }
    }
    Ok((header, rows))
}

fn column(header: &Option<Vec<String>>, names: &[&str], fallback: usize) -> usize {
    header
        .as_ref()
        .and_then(|h| h.iter().position(|c| names.contains(&c.as_str())))
        .unwrap_or(fallback)
}

/// Reads a measured decay curve: columns `delay_us`, `p1` and optionally
/// `shots` (falling back to `default_shots`). Without a header the columns
/// are taken in that order.
pub fn read_p1_csv(path: &Path, default_shots: u32) -> Result<P1Curve> {
    let (header, rows) = numeric_rows(path)?;
    let ci = column(&header, &["delay_us", "delay", "t_us", "t"], 0);
    let cp = column(&header, &["p1", "p_1", "population"], 1);
    let cs = header
        .as_ref()
        .and_then(|h| h.iter().position(|c| c == "shots"))
        .or(if header.is_none() { Some(2) } else { None });
    let mut delays = Vec::with_capacity(rows.len());
    let mut p1 = Vec::with_capacity(rows.len());
    let mut shots = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let get = |c: usize| {
            row.get(c).copied().ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("missing column {}", c + 1),
            })
        };
        delays.push(get(ci)?);
        p1.push(get(cp)?);
        let s = match cs.and_then(|c| row.get(c)) {
            Some(&s) if s >= 1.0 && s.fract() == 0.0 => s as u32,
            Some(&s) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("shots must be a positive integer, got {s}"),
                })
            }
            None => default_shots,
        };
        shots.push(s);
    }
    if delays.is_empty() {
        return Err(Error::InsufficientData(format!("{} has no data rows", path.display())));
    }
    P1Curve::new(delays, p1, shots)
}

/// Reads `(temperature_mk, t1_us)` pairs.
pub fn read_temperature_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let (header, rows) = numeric_rows(path)?;
    let ct = column(&header, &["temperature_mk", "t_mk", "temperature"], 0);
    let c1 = column(&header, &["t1_us", "t1"], 1);
    rows.into_iter()
        .map(|(line, row)| match (row.get(ct), row.get(c1)) {
            (Some(&t), Some(&t1)) => Ok((t, t1)),
            _ => Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "expected two columns".into(),
            }),
        })
        .collect()
}

/// In-memory CSV table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes the table preceded by a `# config_hash:` comment line.
    pub fn write(&self, path: &Path, config_hash: &str) -> Result<()> {
        let mut w = create(path)?;
        writeln!(w, "# config_hash: {config_hash}").map_err(file_err(path))?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.header)?;
        for r in &self.rows {
            csv.write_record(r)?;
        }
        csv.flush().map_err(file_err(path))
    }
}

/// Formats an optional number, empty when absent.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn num(v: f64) -> String {
    v.to_string()
}

/// Flat CSV tables of an analysis, keyed by file stem.
pub fn figure_tables(records: &[T1Record], report: &AnalysisReport) -> Vec<(&'static str, Table)> {
    let mut series = Table::new(&[
        "qubit_id",
        "wall_time_s",
        "kind",
        "voltage_v",
        "vpp_v",
        "f_ac_hz",
        "temperature_mk",
        "t1_us",
        "t1_stderr_us",
        "converged",
    ]);
    for r in records {
        series.push(vec![
            r.qubit_id.clone(),
            num(r.wall_time_s),
            r.control.kind.as_str().into(),
            fmt_opt(r.control.voltage_v),
            fmt_opt(r.control.vpp_v),
            fmt_opt(r.control.f_ac_hz),
            num(r.temperature_mk),
            fmt_opt(r.t1_us),
            fmt_opt(r.t1_stderr_us),
            r.converged.to_string(),
        ]);
    }

    let mut cumulative = Table::new(&["qubit_id", "kind", "index", "wall_time_s", "t1_us", "cumulative_hmean_us"]);
    for q in &report.qubits {
        for kind in ControlKind::ALL {
            let usable: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.qubit_id == q.qubit_id && r.control.kind == kind)
                .filter_map(|r| r.usable_t1().map(|t1| (r.wall_time_s, t1)))
                .collect();
            let t1s: Vec<f64> = usable.iter().map(|u| u.1).collect();
            let Ok(c) = cumulative_hmean(&t1s) else {
                continue;
            };
            for (i, ((t, t1), h)) in usable.iter().zip(c).enumerate() {
                cumulative.push(vec![
                    q.qubit_id.clone(),
                    kind.as_str().into(),
                    i.to_string(),
                    num(*t),
                    num(*t1),
                    num(h),
                ]);
            }
        }
    }

    let mut qf = Table::new(&["qubit_id", "f_q_ghz", "kind", "q_mean", "q_hmean", "excluded_from_fit"]);
    let mut sigma_mu = Table::new(&["qubit_id", "kind", "mu_ac_us", "sigma_us"]);
    let mut neff = Table::new(&["qubit_id", "sigma_fr_us", "sigma_ac_us", "n_eff"]);
    let mut collapse = Table::new(&[
        "qubit_id",
        "vpp_v",
        "f_ac_hz",
        "slew_product_v_per_s",
        "count",
        "mean_t1_us",
        "hmean_t1_us",
    ]);
    let mut tfit = Table::new(&[
        "qubit_id",
        "temperature_mk",
        "t1_us",
        "model_t1_us",
        "rate_residual_per_us",
        "used_in_fit",
    ]);
    for q in &report.qubits {
        let excluded = report.q_fit_excluded.contains(&q.qubit_id);
        for k in &q.quality {
            qf.push(vec![
                q.qubit_id.clone(),
                num(q.f_q_ghz),
                k.kind.as_str().into(),
                fmt_opt(k.q_mean),
                fmt_opt(k.q_hmean),
                excluded.to_string(),
            ]);
        }
        let stat = |kind: ControlKind| q.kinds.iter().find(|s| s.kind == kind);
        let mu_ac = stat(ControlKind::Ac).and_then(|s| s.mean_us);
        for s in &q.kinds {
            if let (Some(mu), Some(sigma)) = (mu_ac, s.std_us) {
                sigma_mu.push(vec![q.qubit_id.clone(), s.kind.as_str().into(), num(mu), num(sigma)]);
            }
        }
        if let Some(n) = q.n_eff {
            neff.push(vec![
                q.qubit_id.clone(),
                fmt_opt(stat(ControlKind::FastRandom).and_then(|s| s.std_us)),
                fmt_opt(stat(ControlKind::Ac).and_then(|s| s.std_us)),
                num(n),
            ]);
        }
        for c in &q.ac_sweep {
            collapse.push(vec![
                q.qubit_id.clone(),
                num(c.vpp_v),
                num(c.f_ac_hz),
                num(c.slew_product_v_per_s),
                c.count.to_string(),
                fmt_opt(c.mean_us),
                fmt_opt(c.hmean_us),
            ]);
        }
        if let Some(fit) = &q.temperature_fit {
            for r in &fit.residuals {
                tfit.push(vec![
                    q.qubit_id.clone(),
                    num(r.temperature_mk),
                    num(r.t1_us),
                    num(r.model_t1_us),
                    num(r.rate_residual),
                    r.used_in_fit.to_string(),
                ]);
            }
        }
    }
    vec![
        ("fig1_series", series),
        ("fig3b_cumulative", cumulative),
        ("fig3c_qf", qf),
        ("fig4c_sigma_mu", sigma_mu),
        ("fig4d_neff", neff),
        ("fig5b_collapse", collapse),
        ("fig5d_fit", tfit),
    ]
}

/// `dir/name`, creating `dir` if needed.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(file_err(dir))?;
    Ok(dir.join(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::sample_bath;
    use crate::protocols::{Control, ControlKind};

    fn record(t1: Option<f64>) -> T1Record {
        T1Record {
            wall_time_s: 12.5,
            qubit_id: "Q1".into(),
            f_q_ghz: 4.5,
            control: Control {
                kind: ControlKind::FastRandom,
                voltage_v: Some(-3.25),
                f_ac_hz: None,
                vpp_v: None,
            },
            temperature_mk: 10.0,
            t1_us: t1,
            t1_stderr_us: t1.map(|t| t * 0.01),
            converged: t1.is_some(),
            seed: 4,
            config_hash: "abc".into(),
        }
    }

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let recs = vec![record(Some(812.25)), record(None)];
        write_records(&path, &recs).unwrap();
        assert_eq!(read_records(&path).unwrap(), recs);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"kind\":\"fast_random\""));
        assert!(text.contains("\"voltage_v\":-3.25"));
        assert!(!text.contains("f_ac_hz"));
    }

    #[test]
    fn bad_record_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let good = serde_json::to_string(&record(Some(1.0))).unwrap();
        std::fs::write(&path, format!("{good}\n\n{{\"oops\": 1}}\n")).unwrap();
        match read_records(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bath_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bath.json");
        let cfg = crate::bath::BathConfig {
            n_tls: 5,
            ..Default::default()
        };
        let state = sample_bath(&cfg, 4.5, 9).unwrap();
        write_json(&path, &BathFile::new(state.clone(), "Q1", 4.5, "h")).unwrap();
        assert_eq!(read_bath(&path).unwrap(), state);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"dipole_gain\": \"GHz/V\""));
    }

    #[test]
    fn p1_csv_variants() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "# synthetic\ndelay_us,p1,shots\n10,0.9,400\n20,0.8,400\n").unwrap();
        let c = read_p1_csv(&a, 1).unwrap();
        assert_eq!(c.delays_us, vec![10.0, 20.0]);
        assert_eq!(c.shots, vec![400, 400]);

        let b = dir.path().join("b.csv");
        std::fs::write(&b, "p1,delay_us\n0.9,10\n0.8,20\n").unwrap();
        let c = read_p1_csv(&b, 50).unwrap();
        assert_eq!(c.delays_us, vec![10.0, 20.0]);
        assert_eq!(c.p1, vec![0.9, 0.8]);
        assert_eq!(c.shots, vec![50, 50]);

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "delay_us,p1\n10,0.9\n20,x\n").unwrap();
        match read_p1_csv(&bad, 1).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        let out_of_range = dir.path().join("o.csv");
        std::fs::write(&out_of_range, "10,1.5\n").unwrap();
        assert!(read_p1_csv(&out_of_range, 1).is_err());
    }

    #[test]
    fn temperature_csv_and_tables() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("t.csv");
        std::fs::write(&t, "temperature_mk,t1_us\n10,2500\n150,900\n").unwrap();
        assert_eq!(read_temperature_csv(&t).unwrap(), vec![(10.0, 2500.0), (150.0, 900.0)]);

        let mut table = Table::new(&["a", "b"]);
        table.push(vec!["1".into(), fmt_opt(None)]);
        let out = dir.path().join("table.csv");
        table.write(&out, "h123").unwrap();
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "# config_hash: h123\na,b\n1,\n");
    }
}

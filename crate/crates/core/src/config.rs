//! Run configuration.
//!
//! Configs are TOML documents. Unknown keys are rejected, every section is
//! optional except `qubit.f_q`, and [`load_config`] returns a fully resolved
//! [`RunConfig`] whose serialized form loads back to the same value.
//!
//! User-facing units: GHz for energies, MHz/kHz for linewidths and
//! couplings (cyclic, without the 2π), ms⁻¹ for the residual loss rate,
//! seconds for wall time, µs for delays.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::{sample_bath, BathConfig, BathState};
use crate::decay::QubitSpec;
use crate::measurement::{DelayGrid, MeasurementSettings, Spacing};
use crate::protocols::{champion_fine_grid, AcSettings, ControlKind, KindSettings, ScheduleSpec};
use crate::world::World;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub qubit: QubitSection,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub run: RunSection,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    #[serde(default = "default_qubit_id")]
    pub id: String,
    /// GHz.
    pub f_q: f64,
    /// Residual (temperature- and TLS-independent) loss rate, ms⁻¹.
    #[serde(default = "default_gamma0_per_ms")]
    pub gamma0_per_ms: f64,
    /// Superconducting gap Δ/h, GHz.
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// kHz, metadata only.
    #[serde(default = "default_chi")]
    pub chi_over_2pi: f64,
    /// kHz, metadata only.
    #[serde(default = "default_kappa")]
    pub kappa_over_2pi: f64,
    #[serde(default = "default_read_err_e")]
    pub read_err_e: f64,
    #[serde(default = "default_read_err_g")]
    pub read_err_g: f64,
}

fn default_qubit_id() -> String {
    "Q1".into()
}
fn default_gamma0_per_ms() -> f64 {
    0.4
}
fn default_gap() -> f64 {
    43.5
}
fn default_chi() -> f64 {
    200.0
}
fn default_kappa() -> f64 {
    100.0
}
fn default_read_err_e() -> f64 {
    0.02
}
fn default_read_err_g() -> f64 {
    0.01
}

impl QubitSection {
    pub fn with_frequency(f_q: f64) -> Self {
        Self {
            id: default_qubit_id(),
            f_q,
            gamma0_per_ms: default_gamma0_per_ms(),
            gap: default_gap(),
            chi_over_2pi: default_chi(),
            kappa_over_2pi: default_kappa(),
            read_err_e: default_read_err_e(),
            read_err_g: default_read_err_g(),
        }
    }

    /// Qubit in internal units (rates in µs⁻¹).
    pub fn spec(&self) -> QubitSpec {
        QubitSpec {
            f_q: self.f_q,
            gamma0: self.gamma0_per_ms * 1e-3,
            gap: self.gap,
            chi_over_2pi: self.chi_over_2pi,
            kappa_over_2pi: self.kappa_over_2pi,
            read_err_e: self.read_err_e,
            read_err_g: self.read_err_g,
        }
    }
}

/// Measurement table in which every key may be omitted; omitted keys take
/// the default of the kind the table belongs to.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Spacing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_point: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl MeasurementTable {
    fn resolve(&mut self, base: &MeasurementSettings) {
        self.spacing.get_or_insert(base.grid.spacing);
        self.n_points.get_or_insert(base.grid.n_points);
        self.t_min_us.get_or_insert(base.grid.t_min_us);
        self.t_max_us.get_or_insert(base.grid.t_max_us);
        self.shots_per_point.get_or_insert(base.shots_per_point);
        self.duration_s.get_or_insert(base.duration_s);
    }

    fn settings(&self, base: &MeasurementSettings) -> MeasurementSettings {
        MeasurementSettings {
            grid: DelayGrid {
                spacing: self.spacing.unwrap_or(base.grid.spacing),
                n_points: self.n_points.unwrap_or(base.grid.n_points),
                t_min_us: self.t_min_us.unwrap_or(base.grid.t_min_us),
                t_max_us: self.t_max_us.unwrap_or(base.grid.t_max_us),
            },
            shots_per_point: self.shots_per_point.unwrap_or(base.shots_per_point),
            duration_s: self.duration_s.unwrap_or(base.duration_s),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSection {
    pub no_control: MeasurementTable,
    pub ac: MeasurementTable,
    pub fast_random: MeasurementTable,
    /// Only shots and duration apply; the grid is rebuilt from each coarse
    /// result.
    pub champion_fine: MeasurementTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSpec {
    pub threshold_us: f64,
    pub max_measurements: usize,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self {
            threshold_us: 1000.0,
            max_measurements: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChampionSpec {
    pub coarse_threshold_us: f64,
    pub max_rounds: usize,
}

impl Default for ChampionSpec {
    fn default() -> Self {
        Self {
            coarse_threshold_us: 2000.0,
            max_rounds: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcSweepSpec {
    pub vpp_list: Vec<f64>,
    pub f_ac_list: Vec<f64>,
    pub repeats: usize,
}

impl Default for AcSweepSpec {
    fn default() -> Self {
        Self {
            vpp_list: vec![4.0, 8.0, 16.0],
            f_ac_list: vec![0.1, 0.2, 0.5, 1.0, 2.0],
            repeats: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemperatureSweepSpec {
    pub temperatures_mk: Vec<f64>,
    pub kinds: Vec<ControlKind>,
    pub repeats: usize,
    /// Shortest delay of every grid in the sweep, µs; hot points decay in
    /// microseconds.
    pub t_min_us: f64,
}

impl Default for TemperatureSweepSpec {
    fn default() -> Self {
        Self {
            temperatures_mk: vec![
                10.0, 20.0, 30.0, 50.0, 70.0, 90.0, 110.0, 135.0, 150.0, 165.0, 180.0, 200.0,
            ],
            kinds: vec![ControlKind::Ac],
            repeats: 2,
            t_min_us: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default)]
    pub ac: AcSettings,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub interleave: ScheduleSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub champion: ChampionSpec,
    #[serde(default)]
    pub ac_sweep: AcSweepSpec,
    #[serde(default)]
    pub temperature_sweep: TemperatureSweepSpec,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            ac: AcSettings::default(),
            measurement: MeasurementSection::default(),
            interleave: ScheduleSpec {
                cycles: Some(40),
                ..ScheduleSpec::default()
            },
            optimizer: OptimizerSpec::default(),
            champion: ChampionSpec::default(),
            ac_sweep: AcSweepSpec::default(),
            temperature_sweep: TemperatureSweepSpec::default(),
        }
    }
}

impl ProtocolSection {
    /// Kind settings with every grid starting at the sweep's `t_min_us`.
    pub fn temperature_settings(&self) -> KindSettings {
        let mut ks = self.kind_settings();
        let t_min = self.temperature_sweep.t_min_us;
        for s in [&mut ks.no_control, &mut ks.ac, &mut ks.fast_random] {
            s.grid.t_min_us = t_min;
        }
        ks
    }

    /// Per-kind measurement settings with defaults filled in.
    pub fn kind_settings(&self) -> KindSettings {
        let base = KindSettings::default();
        let m = &self.measurement;
        KindSettings {
            ac_waveform: self.ac,
            no_control: m.no_control.settings(&base.no_control),
            ac: m.ac.settings(&base.ac),
            fast_random: m.fast_random.settings(&base.fast_random),
            champion_fine: m.champion_fine.settings(&base.champion_fine),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFormat {
    Jsonl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// Default output directory when `--out` is not given.
    pub output: PathBuf,
    pub record_format: RecordFormat,
    /// Fridge temperature for campaigns other than the temperature sweep.
    pub temperature_mk: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            output: PathBuf::from("out"),
            record_format: RecordFormat::Jsonl,
            temperature_mk: 10.0,
        }
    }
}

impl RunConfig {
    /// Defaults for a qubit at `f_q` GHz.
    pub fn with_frequency(f_q: f64) -> Self {
        let mut c = RunConfig {
            schema_version: SCHEMA_VERSION,
            qubit: QubitSection::with_frequency(f_q),
            bath: BathConfig::default(),
            protocol: ProtocolSection::default(),
            run: RunSection::default(),
        };
        c.resolve();
        c
    }

    /// Fills every optional setting with its effective value.
    pub fn resolve(&mut self) {
        let base = KindSettings::default();
        let m = &mut self.protocol.measurement;
        m.no_control.resolve(&base.no_control);
        m.ac.resolve(&base.ac);
        m.fast_random.resolve(&base.fast_random);
        m.champion_fine.resolve(&base.champion_fine);
        let il = &mut self.protocol.interleave;
        if il.cycles.is_none() && il.active_hours.is_none() {
            il.cycles = Some(40);
        }
        if self.bath.delta0_max.is_none() {
            self.bath.delta0_max = Some(self.qubit.f_q);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let q = &self.qubit;
        if q.id.is_empty() {
            return Err(Error::invalid("qubit.id", "must not be empty"));
        }
        if !(q.gamma0_per_ms >= 0.0 && q.gamma0_per_ms.is_finite()) {
            return Err(Error::invalid("qubit.gamma0_per_ms", "must be >= 0"));
        }
        q.spec().validate()?;
        self.bath.validate(q.f_q)?;

        let p = &self.protocol;
        if !(p.ac.vpp > 0.0 && p.ac.vpp.is_finite()) {
            return Err(Error::invalid("protocol.ac.vpp", format!("{} V must be > 0", p.ac.vpp)));
        }
        if !(p.ac.f_ac > 0.0 && p.ac.f_ac.is_finite()) {
            return Err(Error::invalid("protocol.ac.f_ac", format!("{} Hz must be > 0", p.ac.f_ac)));
        }
        let ks = p.kind_settings();
        for (name, s) in [
            ("no_control", &ks.no_control),
            ("ac", &ks.ac),
            ("fast_random", &ks.fast_random),
            ("champion_fine", &ks.champion_fine),
        ] {
            s.validate().map_err(|e| prefix(e, &format!("protocol.measurement.{name}")))?;
        }
        p.interleave.validate()?;
        let ts = p.temperature_settings();
        if !(p.optimizer.threshold_us > 0.0) {
            return Err(Error::invalid("protocol.optimizer.threshold_us", "must be > 0"));
        }
        if !(p.champion.coarse_threshold_us > 0.0) {
            return Err(Error::invalid("protocol.champion.coarse_threshold_us", "must be > 0"));
        }
        champion_fine_grid(p.champion.coarse_threshold_us)
            .map_err(|e| prefix(e, "protocol.champion"))?;
        if let Some(v) = p.ac_sweep.vpp_list.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::invalid("protocol.ac_sweep.vpp_list", format!("{v} V must be > 0")));
        }
        if let Some(f) = p.ac_sweep.f_ac_list.iter().find(|f| !(**f > 0.0)) {
            return Err(Error::invalid("protocol.ac_sweep.f_ac_list", format!("{f} Hz must be > 0")));
        }
        if let Some(t) = p.temperature_sweep.temperatures_mk.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::invalid(
                "protocol.temperature_sweep.temperatures_mk",
                format!("{t} mK must be >= 0"),
            ));
        }
        for (name, s) in [("ac", &ts.ac), ("no_control", &ts.no_control), ("fast_random", &ts.fast_random)] {
            s.validate()
                .map_err(|e| prefix(e, &format!("protocol.temperature_sweep ({name} grid)")))?;
        }
        if let Some(k) = p
            .temperature_sweep
            .kinds
            .iter()
            .find(|k| matches!(k, ControlKind::Optimizer | ControlKind::Champion))
        {
            return Err(Error::invalid(
                "protocol.temperature_sweep.kinds",
                format!("{} is not a stand-alone measurement", k.as_str()),
            ));
        }
        if !(self.run.temperature_mk >= 0.0) {
            return Err(Error::invalid("run.temperature_mk", "must be >= 0"));
        }
        Ok(())
    }

    /// Canonical TOML text of the resolved config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            location: "<resolved config>".into(),
            message: e.to_string(),
        })
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

/// World described by `config`: a freshly sampled bath unless one is
/// supplied, stamped with the config hash.
pub fn build_world(config: &RunConfig, bath: Option<BathState>) -> Result<World> {
    let seed = config.run.seed;
    let bath = match bath {
        Some(b) => b,
        None => sample_bath(&config.bath, config.qubit.f_q, seed)?,
    };
    let mut world = World::new(
        config.qubit.id.clone(),
        config.qubit.spec(),
        bath,
        config.run.temperature_mk,
        seed,
    )?;
    world.config_hash = config.hash();
    Ok(world)
}

fn prefix(e: Error, section: &str) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::InvalidParameter {
            field: format!("{section}.{}", field.trim_start_matches("grid.")),
            reason,
        },
        other => other,
    }
}

/// Reads, resolves and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

/// Parses config text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| toml_error(text, origin, "", &e))?;
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        toml_error(text, origin, &path, e.inner())
    })?;
    config.resolve();
    config.validate().map_err(|e| match e {
        Error::InvalidParameter { field, reason } => Error::Config {
            location: location(origin, locate_key(text, &field), &field),
            message: reason,
        },
        other => other,
    })?;
    Ok(config)
}

fn toml_error(text: &str, origin: &str, path: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| line_of_offset(text, s.start))
        .or_else(|| locate_key(text, path));
    Error::Config {
        location: location(origin, line, path),
        message: e.message().trim().to_string(),
    }
}

fn location(origin: &str, line: Option<usize>, path: &str) -> String {
    let mut s = origin.to_string();
    if let Some(l) = line {
        s.push_str(&format!(":{l}"));
    }
    if !path.is_empty() {
        s.push_str(&format!(" ({path})"));
    }
    s
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Best-effort 1-based line of a dotted key: the key's own line if it is
/// written out, else the header of its nearest enclosing table.
pub fn locate_key(text: &str, path: &str) -> Option<usize> {
    if path.is_empty() {
        return None;
    }
    let mut table = String::new();
    let mut best: Option<(usize, usize)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') {
            table = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if path == table || path.starts_with(&format!("{table}.")) {
                let depth = table.split('.').count();
                if best.is_none_or(|b| depth >= b.1) {
                    best = Some((i + 1, depth));
                }
            }
            continue;
        }
        let Some((key, _)) = line.split_once('=') else {
            continue;
        };
        let key = key.trim().trim_matches('"');
        let full = if table.is_empty() {
            key.to_string()
        } else {
            format!("{table}.{key}")
        };
        if path == full || path.starts_with(&format!("{full}.")) {
            return Some(i + 1);
        }
    }
    best.map(|b| b.0)
}

//! Measurement campaigns.
//!
//! Protocols are written against the [`Instrument`] trait so their control
//! logic can be driven by a scripted stand-in as well as by a simulated
//! [`World`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decay::WaveformSpec;
use crate::measurement::{make_delays, run_t1_measurement, DelayGrid, MeasurementSettings, Spacing};
use crate::world::World;
use crate::{Error, Result};

/// Bound of the uniform random DC control voltage, V.
pub const RANDOM_VOLTAGE_LIMIT: f64 = 8.0;

/// Uniform draw on [−8, +8] V.
pub fn draw_random_voltage<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-RANDOM_VOLTAGE_LIMIT..=RANDOM_VOLTAGE_LIMIT)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    NoControl,
    FastRandom,
    Ac,
    Optimizer,
    Champion,
}

impl ControlKind {
    pub const ALL: [ControlKind; 5] = [
        ControlKind::Ac,
        ControlKind::NoControl,
        ControlKind::FastRandom,
        ControlKind::Optimizer,
        ControlKind::Champion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControlKind::NoControl => "no_control",
            ControlKind::FastRandom => "fast_random",
            ControlKind::Ac => "ac",
            ControlKind::Optimizer => "optimizer",
            ControlKind::Champion => "champion",
        }
    }
}

/// Control descriptor stored with each record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub kind: ControlKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voltage_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_ac_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vpp_v: Option<f64>,
}

impl Control {
    pub fn new(kind: ControlKind, waveform: &WaveformSpec) -> Self {
        let mut c = Control {
            kind,
            voltage_v: None,
            f_ac_hz: None,
            vpp_v: None,
        };
        match *waveform {
            WaveformSpec::Zero => c.voltage_v = Some(0.0),
            WaveformSpec::Dc { volts } => c.voltage_v = Some(volts),
            WaveformSpec::Triangle { f_ac_hz, vpp_v } => {
                c.f_ac_hz = Some(f_ac_hz);
                c.vpp_v = Some(vpp_v);
            }
        }
        c
    }
}

/// One timestamped measurement outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct T1Record {
    /// Measurement start on the campaign clock, s.
    pub wall_time_s: f64,
    pub qubit_id: String,
    pub f_q_ghz: f64,
    #[serde(flatten)]
    pub control: Control,
    pub temperature_mk: f64,
    pub t1_us: Option<f64>,
    pub t1_stderr_us: Option<f64>,
    pub converged: bool,
    pub seed: u64,
    pub config_hash: String,
}

impl T1Record {
    /// Decay time usable for statistics: converged and positive.
    pub fn usable_t1(&self) -> Option<f64> {
        match self.t1_us {
            Some(t1) if self.converged && t1 > 0.0 => Some(t1),
            _ => None,
        }
    }
}

/// Something that can run T1 measurements and draw random voltages.
pub trait Instrument {
    fn draw_voltage(&mut self) -> f64;

    fn measure(&mut self, kind: ControlKind, waveform: &WaveformSpec, settings: &MeasurementSettings) -> Result<T1Record>;

    /// Passes `dt` seconds without measuring.
    fn idle(&mut self, dt: f64) -> Result<()>;

    fn clock_s(&self) -> f64;

    fn set_temperature(&mut self, temperature_mk: f64) -> Result<()>;
}

impl Instrument for World {
    fn draw_voltage(&mut self) -> f64 {
        World::draw_voltage(self)
    }

    fn measure(&mut self, kind: ControlKind, waveform: &WaveformSpec, settings: &MeasurementSettings) -> Result<T1Record> {
        let m = run_t1_measurement(self, waveform, settings)?;
        Ok(T1Record {
            wall_time_s: m.start_s,
            qubit_id: self.qubit_id.clone(),
            f_q_ghz: self.qubit.f_q,
            control: Control::new(kind, waveform),
            temperature_mk: self.temperature_mk,
            t1_us: m.fit.t1_us,
            t1_stderr_us: m.fit.t1_stderr_us,
            converged: m.fit.converged,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
        })
    }

    fn idle(&mut self, dt: f64) -> Result<()> {
        World::idle(self, dt)
    }

    fn clock_s(&self) -> f64 {
        World::clock_s(self)
    }

    fn set_temperature(&mut self, temperature_mk: f64) -> Result<()> {
        World::set_temperature(self, temperature_mk)
    }
}

/// Triangle waveform used for AC control.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcSettings {
    /// Peak-to-peak amplitude, V.
    pub vpp: f64,
    /// Sweep frequency, Hz.
    pub f_ac: f64,
}

impl Default for AcSettings {
    fn default() -> Self {
        Self { vpp: 16.0, f_ac: 0.1 }
    }
}

impl AcSettings {
    pub fn waveform(&self) -> WaveformSpec {
        WaveformSpec::Triangle {
            f_ac_hz: self.f_ac,
            vpp_v: self.vpp,
        }
    }
}

/// Measurement settings per control kind plus the AC waveform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindSettings {
    pub ac_waveform: AcSettings,
    pub no_control: MeasurementSettings,
    pub ac: MeasurementSettings,
    pub fast_random: MeasurementSettings,
    /// Shots and duration of champion fine scans; the grid is rebuilt from
    /// each coarse result.
    pub champion_fine: MeasurementSettings,
}

impl Default for KindSettings {
    fn default() -> Self {
        Self {
            ac_waveform: AcSettings::default(),
            no_control: MeasurementSettings::long_scan(),
            ac: MeasurementSettings::long_scan(),
            fast_random: MeasurementSettings::fast_scan(),
            champion_fine: MeasurementSettings {
                grid: champion_fine_grid(2000.0).expect("valid default grid"),
                ..MeasurementSettings::long_scan()
            },
        }
    }
}

impl KindSettings {
    fn run_kind<I: Instrument>(&self, inst: &mut I, kind: ControlKind) -> Result<T1Record> {
        match kind {
            ControlKind::Ac => inst.measure(kind, &self.ac_waveform.waveform(), &self.ac),
            ControlKind::NoControl => inst.measure(kind, &WaveformSpec::Zero, &self.no_control),
            ControlKind::FastRandom => {
                let volts = inst.draw_voltage();
                inst.measure(kind, &WaveformSpec::Dc { volts }, &self.fast_random)
            }
            ControlKind::Optimizer | ControlKind::Champion => Err(Error::invalid(
                "kind",
                format!("{} is not a stand-alone measurement", kind.as_str()),
            )),
        }
    }
}

/// One idle period inserted after a given amount of active time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakSpec {
    pub after_active_hours: f64,
    pub duration_days: f64,
}

/// Interleaved campaign definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSpec {
    /// Measurement kinds of one cycle, in order.
    pub composition: Vec<ControlKind>,
    /// Stop after this many cycles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u32>,
    /// Stop once this much active (non-break) time has elapsed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_hours: Option<f64>,
    #[serde(rename = "break", default, skip_serializing_if = "Option::is_none")]
    pub pause: Option<BreakSpec>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            composition: default_composition(),
            cycles: Some(40),
            active_hours: None,
            pause: None,
        }
    }
}

/// One AC, one no-control and four fast-random measurements.
pub fn default_composition() -> Vec<ControlKind> {
    vec![
        ControlKind::Ac,
        ControlKind::NoControl,
        ControlKind::FastRandom,
        ControlKind::FastRandom,
        ControlKind::FastRandom,
        ControlKind::FastRandom,
    ]
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.composition.is_empty() {
            return Err(Error::invalid("protocol.interleave.composition", "must not be empty"));
        }
        if let Some(k) = self
            .composition
            .iter()
            .find(|k| matches!(k, ControlKind::Optimizer | ControlKind::Champion))
        {
            return Err(Error::invalid(
                "protocol.interleave.composition",
                format!("{} cannot be interleaved", k.as_str()),
            ));
        }
        if self.cycles.is_none() && self.active_hours.is_none() {
            return Err(Error::invalid(
                "protocol.interleave",
                "set `cycles`, `active_hours`, or both",
            ));
        }
        if let Some(h) = self.active_hours {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid("protocol.interleave.active_hours", "must be > 0"));
            }
        }
        if let Some(b) = self.pause {
            if !(b.duration_days >= 0.0 && b.duration_days.is_finite()) {
                return Err(Error::invalid("protocol.interleave.break.duration_days", "must be >= 0"));
            }
            if !(b.after_active_hours >= 0.0) {
                return Err(Error::invalid("protocol.interleave.break.after_active_hours", "must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Runs interleaved cycles until the schedule's stop rule is met. The
/// optional break is inserted at the first cycle boundary at which the
/// active time has reached its offset; the bath keeps diffusing through it.
pub fn run_interleave<I: Instrument>(inst: &mut I, schedule: &ScheduleSpec, settings: &KindSettings) -> Result<Vec<T1Record>> {
    schedule.validate()?;
    let start = inst.clock_s();
    let mut paused = 0.0;
    let mut break_pending = schedule.pause;
    let mut records = Vec::new();
    let mut cycle = 0u32;
    loop {
        let active_h = (inst.clock_s() - start - paused) / 3600.0;
        if schedule.cycles.is_some_and(|n| cycle >= n) || schedule.active_hours.is_some_and(|h| active_h >= h) {
            break;
        }
        if let Some(b) = break_pending {
            if active_h >= b.after_active_hours {
                let dt = b.duration_days * 86_400.0;
                inst.idle(dt)?;
                paused += dt;
                break_pending = None;
            }
        }
        for &kind in &schedule.composition {
            records.push(settings.run_kind(inst, kind)?);
        }
        cycle += 1;
    }
    Ok(records)
}

/// Voltage optimization: hold the voltage while T1 exceeds the threshold,
/// redraw it otherwise. Every measurement uses the fast-random settings.
pub fn run_optimizer<I: Instrument>(
    inst: &mut I,
    threshold_us: f64,
    max_measurements: usize,
    settings: &MeasurementSettings,
) -> Result<Vec<T1Record>> {
    if !(threshold_us > 0.0) {
        return Err(Error::invalid("protocol.optimizer.threshold_us", "must be > 0"));
    }
    let mut volts = inst.draw_voltage();
    let mut records = Vec::with_capacity(max_measurements);
    for _ in 0..max_measurements {
        let record = inst.measure(ControlKind::Optimizer, &WaveformSpec::Dc { volts }, settings)?;
        let success = record.usable_t1().is_some_and(|t1| t1 > threshold_us);
        records.push(record);
        if !success {
            volts = inst.draw_voltage();
        }
    }
    Ok(records)
}

/// Fine-scan grid after a coarse result: 100 linear delays up to four
/// times the coarse T1.
pub fn champion_fine_grid(coarse_t1_us: f64) -> Result<DelayGrid> {
    let t_max = 4.0 * coarse_t1_us;
    make_delays(Spacing::Linear, 100, t_max / 100.0, t_max)
}

/// Champion hunt: fast-random coarse scans, each followed by a fine scan
/// at the same voltage when the coarse T1 beats the threshold.
pub fn run_champion<I: Instrument>(
    inst: &mut I,
    coarse_threshold_us: f64,
    max_rounds: usize,
    settings: &KindSettings,
) -> Result<Vec<T1Record>> {
    if !(coarse_threshold_us > 0.0) {
        return Err(Error::invalid("protocol.champion.coarse_threshold_us", "must be > 0"));
    }
    let mut records = Vec::new();
    for _ in 0..max_rounds {
        let volts = inst.draw_voltage();
        let waveform = WaveformSpec::Dc { volts };
        let coarse = inst.measure(ControlKind::FastRandom, &waveform, &settings.fast_random)?;
        let hit = coarse.usable_t1().filter(|&t1| t1 > coarse_threshold_us);
        records.push(coarse);
        if let Some(t1) = hit {
            let fine = MeasurementSettings {
                grid: champion_fine_grid(t1)?,
                ..settings.champion_fine.clone()
            };
            records.push(inst.measure(ControlKind::Champion, &waveform, &fine)?);
        }
    }
    Ok(records)
}

/// AC measurements of one (vpp, f_ac) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct AcSweepCell {
    pub vpp_v: f64,
    pub f_ac_hz: f64,
    pub records: Vec<T1Record>,
}

impl AcSweepCell {
    /// Bias slew product f_ac·vpp, V/s.
    pub fn product(&self) -> f64 {
        self.f_ac_hz * self.vpp_v
    }
}

/// AC measurements over the Cartesian grid `vpp_list × f_ac_list`. The
/// grid is traversed `repeats` times on one timeline, so slow bath drift is
/// shared evenly between cells.
pub fn run_ac_sweep<I: Instrument>(
    inst: &mut I,
    vpp_list: &[f64],
    f_ac_list: &[f64],
    repeats: usize,
    settings: &MeasurementSettings,
) -> Result<Vec<AcSweepCell>> {
    let mut cells: Vec<AcSweepCell> = vpp_list
        .iter()
        .flat_map(|&vpp_v| {
            f_ac_list.iter().map(move |&f_ac_hz| AcSweepCell {
                vpp_v,
                f_ac_hz,
                records: Vec::new(),
            })
        })
        .collect();
    for cell in &cells {
        WaveformSpec::Triangle {
            f_ac_hz: cell.f_ac_hz,
            vpp_v: cell.vpp_v,
        }
        .validate()?;
    }
    for _ in 0..repeats {
        for cell in cells.iter_mut() {
            let waveform = WaveformSpec::Triangle {
                f_ac_hz: cell.f_ac_hz,
                vpp_v: cell.vpp_v,
            };
            cell.records.push(inst.measure(ControlKind::Ac, &waveform, settings)?);
        }
    }
    Ok(cells)
}

/// Records taken at one temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperaturePoint {
    pub temperature_mk: f64,
    pub records: Vec<T1Record>,
}

/// Sets each temperature in turn and runs the requested kinds `repeats`
/// times. Temperature changes are instantaneous.
pub fn run_temperature_sweep<I: Instrument>(
    inst: &mut I,
    temperatures_mk: &[f64],
    kinds: &[ControlKind],
    repeats: usize,
    settings: &KindSettings,
) -> Result<Vec<TemperaturePoint>> {
    if let Some(t) = temperatures_mk.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::invalid("protocol.temperature_sweep.temperatures_mk", format!("{t} mK is negative")));
    }
    let mut points = Vec::with_capacity(temperatures_mk.len());
    for &temperature_mk in temperatures_mk {
        inst.set_temperature(temperature_mk)?;
        let mut records = Vec::new();
        for _ in 0..repeats {
            for &kind in kinds {
                records.push(settings.run_kind(inst, kind)?);
            }
        }
        points.push(TemperaturePoint { temperature_mk, records });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathState;
    use crate::decay::QubitSpec;
    use crate::rng::{self, Domain};

    /// Returns scripted T1 values and hands out distinct voltages.
    struct Scripted {
        t1s: Vec<f64>,
        next: usize,
        voltages: f64,
        clock: f64,
        temperature: f64,
        log: Vec<(ControlKind, WaveformSpec, usize)>,
    }

    impl Scripted {
        fn new(t1s: Vec<f64>) -> Self {
            Self {
                t1s,
                next: 0,
                voltages: 0.0,
                clock: 0.0,
                temperature: 10.0,
                log: Vec::new(),
            }
        }
    }

    impl Instrument for Scripted {
        fn draw_voltage(&mut self) -> f64 {
            self.voltages += 1.0;
            self.voltages
        }

        fn measure(&mut self, kind: ControlKind, waveform: &WaveformSpec, settings: &MeasurementSettings) -> Result<T1Record> {
            let t1 = self.t1s[self.next % self.t1s.len()];
            self.next += 1;
            self.log.push((kind, waveform.clone(), settings.grid.n_points));
            let record = T1Record {
                wall_time_s: self.clock,
                qubit_id: "S".into(),
                f_q_ghz: 4.5,
                control: Control::new(kind, waveform),
                temperature_mk: self.temperature,
                t1_us: Some(t1),
                t1_stderr_us: Some(1.0),
                converged: true,
                seed: 0,
                config_hash: String::new(),
            };
            self.clock += settings.duration_s;
            Ok(record)
        }

        fn idle(&mut self, dt: f64) -> Result<()> {
            self.clock += dt;
            Ok(())
        }

        fn clock_s(&self) -> f64 {
            self.clock
        }

        fn set_temperature(&mut self, temperature_mk: f64) -> Result<()> {
            self.temperature = temperature_mk;
            Ok(())
        }
    }

    #[test]
    fn random_voltage_support_and_moments() {
        let mut rng = rng::stream(3, Domain::Voltage, 0, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| draw_random_voltage(&mut rng)).collect();
        assert!(draws.iter().all(|v| (-8.0..=8.0).contains(v)));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sd = (64.0f64 / 3.0).sqrt();
        assert!(mean.abs() < 3.0 * sd / (n as f64).sqrt(), "{mean}");
        assert!((var / (64.0 / 3.0) - 1.0).abs() < 0.02, "{var}");

        let a = draw_random_voltage(&mut rng::stream(3, Domain::Voltage, 7, 0));
        let b = draw_random_voltage(&mut rng::stream(3, Domain::Voltage, 7, 0));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn one_cycle_has_composition_order() {
        let mut inst = Scripted::new(vec![1000.0]);
        let schedule = ScheduleSpec {
            cycles: Some(1),
            ..ScheduleSpec::default()
        };
        let records = run_interleave(&mut inst, &schedule, &KindSettings::default()).unwrap();
        let kinds: Vec<ControlKind> = records.iter().map(|r| r.control.kind).collect();
        assert_eq!(kinds, default_composition());
        assert_eq!(inst.log[0].2, 101);
        assert_eq!(inst.log[2].2, 25);
        // Fresh voltage for each fast-random measurement.
        let volts: Vec<f64> = records[2..].iter().map(|r| r.control.voltage_v.unwrap()).collect();
        assert_eq!(volts, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn break_appears_in_wall_times() {
        let mut inst = Scripted::new(vec![1000.0]);
        let schedule = ScheduleSpec {
            cycles: None,
            active_hours: Some(72.0),
            pause: Some(BreakSpec {
                after_active_hours: 24.0,
                duration_days: 23.3,
            }),
            ..ScheduleSpec::default()
        };
        let records = run_interleave(&mut inst, &schedule, &KindSettings::default()).unwrap();
        let break_s = 23.3 * 86_400.0;
        let gaps: Vec<(usize, f64)> = records
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[1].wall_time_s - w[0].wall_time_s))
            .filter(|&(_, g)| g > 1000.0)
            .collect();
        assert_eq!(gaps.len(), 1);
        let (i, gap) = gaps[0];
        let previous = if records[i].control.kind == ControlKind::FastRandom { 150.0 } else { 600.0 };
        assert_eq!(gap, previous + break_s);
        assert!(records[i].wall_time_s + previous >= 24.0 * 3600.0);
        // Per-cycle time is 30 min: 48 cycles before the break and 96 in all.
        assert_eq!(records.len(), 6 * 144);
        let active = inst.clock - break_s;
        assert_eq!(active, 72.0 * 3600.0);
    }

    #[test]
    fn optimizer_threshold_logic() {
        let mut inst = Scripted::new(vec![800.0, 900.0, 1200.0, 1100.0, 1300.0]);
        let records = run_optimizer(&mut inst, 1000.0, 5, &MeasurementSettings::fast_scan()).unwrap();
        let v: Vec<f64> = records.iter().map(|r| r.control.voltage_v.unwrap()).collect();
        // redraw, redraw, hold, hold
        assert_eq!(v, vec![1.0, 2.0, 3.0, 3.0, 3.0]);
        assert!(records.iter().all(|r| r.control.kind == ControlKind::Optimizer));
    }

    #[test]
    fn optimizer_never_moves_when_always_successful() {
        let mut inst = Scripted::new(vec![1500.0]);
        let records = run_optimizer(&mut inst, 1000.0, 20, &MeasurementSettings::fast_scan()).unwrap();
        assert!(records.iter().all(|r| r.control.voltage_v == Some(1.0)));
        assert!(run_optimizer(&mut inst, 0.0, 2, &MeasurementSettings::fast_scan()).is_err());
    }

    #[test]
    fn champion_fine_scan_rules() {
        let mut inst = Scripted::new(vec![1500.0]);
        let records = run_champion(&mut inst, 2000.0, 3, &KindSettings::default()).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.control.kind == ControlKind::FastRandom));

        let grid = champion_fine_grid(2400.0).unwrap();
        assert_eq!(grid.spacing, Spacing::Linear);
        assert_eq!(grid.n_points, 100);
        assert!((grid.t_max_us - 9600.0).abs() < 1e-9);

        let mut inst = Scripted::new(vec![2400.0, 2600.0]);
        let records = run_champion(&mut inst, 2000.0, 1, &KindSettings::default()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].control.kind, ControlKind::Champion);
        assert_eq!(records[1].control.voltage_v, records[0].control.voltage_v);
        assert_eq!(inst.log[1].2, 100);
    }

    #[test]
    fn ac_sweep_grid() {
        let mut inst = Scripted::new(vec![1000.0]);
        let cells = run_ac_sweep(&mut inst, &[16.0], &[0.1], 1, &MeasurementSettings::long_scan()).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].records.len(), 1);
        assert!((cells[0].product() - 1.6).abs() < 1e-12);
        let cells = run_ac_sweep(&mut inst, &[8.0, 16.0], &[0.1, 0.2, 0.4], 2, &MeasurementSettings::long_scan()).unwrap();
        assert_eq!(cells.len(), 6);
        assert!(cells.iter().all(|c| c.records.len() == 2));
        assert!(run_ac_sweep(&mut inst, &[-1.0], &[0.1], 1, &MeasurementSettings::long_scan()).is_err());
    }

    #[test]
    fn temperature_sweep_filters_kinds() {
        let mut inst = Scripted::new(vec![1000.0]);
        let points = run_temperature_sweep(&mut inst, &[10.0, 50.0], &[ControlKind::Ac], 3, &KindSettings::default()).unwrap();
        assert_eq!(points.len(), 2);
        for p in &points {
            assert_eq!(p.records.len(), 3);
            assert!(p.records.iter().all(|r| r.control.kind == ControlKind::Ac));
            assert!(p.records.iter().all(|r| r.temperature_mk == p.temperature_mk));
        }
        assert!(run_temperature_sweep(&mut inst, &[10.0, -5.0], &[ControlKind::Ac], 1, &KindSettings::default()).is_err());
    }

    #[test]
    fn world_records_carry_identity() {
        let mut world = World::new("Q7", QubitSpec::new(4.6, 1e-3), BathState::empty(1), 20.0, 1).unwrap();
        world.config_hash = "abc".into();
        let r = world
            .measure(ControlKind::NoControl, &WaveformSpec::Zero, &MeasurementSettings::fast_scan())
            .unwrap();
        assert_eq!(r.qubit_id, "Q7");
        assert_eq!(r.f_q_ghz, 4.6);
        assert_eq!(r.config_hash, "abc");
        assert_eq!(r.temperature_mk, 20.0);
        assert_eq!(r.wall_time_s, 0.0);
        assert_eq!(world.clock_s(), 150.0);
    }
}

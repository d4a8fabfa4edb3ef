//! One T1 measurement: excitation-delay-measure shots on a delay grid,
//! followed by an exponential fit.
//!
//! Shots are organised in rounds; each round visits every delay once, as a
//! hardware sequencer would. The measurement's wall time is spread evenly
//! over all `rounds × delays` slots, the triangle waveform is evaluated at
//! the slot time (bias frozen during the shot), and the bath diffuses once
//! per round.

mod fit;

pub use fit::fit_exponential;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decay::{self, gamma_lz_with, waveform_voltage, TlsAbsorption, WaveformSpec};
use crate::rng::{self, Domain};
use crate::world::World;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

/// Delay grid in µs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayGrid {
    pub spacing: Spacing,
    pub n_points: usize,
    pub t_min_us: f64,
    pub t_max_us: f64,
}

/// Validated delay grid; log spacing is geometric, linear is arithmetic,
/// and both hit the endpoints exactly.
pub fn make_delays(spacing: Spacing, n_points: usize, t_min_us: f64, t_max_us: f64) -> Result<DelayGrid> {
    let grid = DelayGrid {
        spacing,
        n_points,
        t_min_us,
        t_max_us,
    };
    grid.validate()?;
    Ok(grid)
}

impl DelayGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::invalid("grid.n_points", "must be >= 2"));
        }
        if !(self.t_min_us > 0.0) {
            return Err(Error::invalid("grid.t_min_us", "must be > 0"));
        }
        if !(self.t_max_us > self.t_min_us && self.t_max_us.is_finite()) {
            return Err(Error::invalid("grid.t_max_us", "must exceed t_min_us"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let last = self.n_points - 1;
        (0..self.n_points)
            .map(|k| {
                if k == 0 {
                    return self.t_min_us;
                }
                if k == last {
                    return self.t_max_us;
                }
                let frac = k as f64 / last as f64;
                match self.spacing {
                    Spacing::Log => self.t_min_us * (self.t_max_us / self.t_min_us).powf(frac),
                    Spacing::Linear => self.t_min_us + (self.t_max_us - self.t_min_us) * frac,
                }
            })
            .collect()
    }
}

/// Grid, shot count and wall-clock duration of one measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSettings {
    pub grid: DelayGrid,
    pub shots_per_point: u32,
    pub duration_s: f64,
}

impl MeasurementSettings {
    /// Long scan used for no-control and AC measurements.
    pub fn long_scan() -> Self {
        Self {
            grid: DelayGrid {
                spacing: Spacing::Log,
                n_points: 101,
                t_min_us: 10.0,
                t_max_us: 12_000.0,
            },
            shots_per_point: 400,
            duration_s: 600.0,
        }
    }

    /// Short scan used for fast-random and optimizer measurements.
    pub fn fast_scan() -> Self {
        Self {
            grid: DelayGrid {
                spacing: Spacing::Log,
                n_points: 25,
                t_min_us: 10.0,
                t_max_us: 12_000.0,
            },
            shots_per_point: 400,
            duration_s: 150.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.shots_per_point == 0 {
            return Err(Error::invalid("shots_per_point", "must be >= 1"));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::invalid("duration_s", "must be > 0"));
        }
        Ok(())
    }
}

/// Excited-state population estimate per delay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P1Curve {
    pub delays_us: Vec<f64>,
    pub p1: Vec<f64>,
    pub shots: Vec<u32>,
}

impl P1Curve {
    pub fn new(delays_us: Vec<f64>, p1: Vec<f64>, shots: Vec<u32>) -> Result<Self> {
        let curve = Self { delays_us, p1, shots };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delays_us.len() != self.p1.len() || self.p1.len() != self.shots.len() {
            return Err(Error::invalid("curve", "column lengths differ"));
        }
        if self.p1.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid("curve.p1", "values must lie in [0, 1]"));
        }
        if self.shots.contains(&0) {
            return Err(Error::invalid("curve.shots", "must be >= 1"));
        }
        if self.delays_us.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::invalid("curve.delays_us", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.delays_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays_us.is_empty()
    }
}

/// Result of fitting `A·exp(−t/T1) + B`. `t1_us` is unset when the curve
/// does not decay within the grid or the fit failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct T1Fit {
    pub t1_us: Option<f64>,
    pub amplitude: f64,
    pub offset: f64,
    pub t1_stderr_us: Option<f64>,
    pub converged: bool,
    pub residual_rms: f64,
}

impl T1Fit {
    /// Decay time of a converged fit.
    pub fn t1(&self) -> Option<f64> {
        if self.converged {
            self.t1_us
        } else {
            None
        }
    }
}

/// Outcome of [`run_t1_measurement`].
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub curve: P1Curve,
    pub fit: T1Fit,
    pub start_s: f64,
    pub duration_s: f64,
    /// Triangle phase drawn at the start of the measurement.
    pub phase: f64,
}

const ROUNDS_PER_CHUNK: usize = 16;

/// Simulates one T1 measurement on `world` under `control`, advancing the
/// world clock by exactly `settings.duration_s`.
pub fn run_t1_measurement(world: &mut World, control: &WaveformSpec, settings: &MeasurementSettings) -> Result<Measurement> {
    control.validate()?;
    settings.validate()?;
    let delays = settings.grid.points();
    let n = delays.len();
    let rounds = settings.shots_per_point as usize;
    let index = world.next_measurement();
    let start = world.clock_s();
    let phase: f64 = rng::stream(world.seed, Domain::Phase, index, 0).random();
    let slot_s = settings.duration_s / (rounds * n) as f64;
    let round_s = settings.duration_s / rounds as f64;
    let base = world.qubit.gamma0 + decay::gamma_qp(world.temperature_mk, &world.qubit)?;
    let sweep = control.sweep();

    let mut snapshots = Vec::with_capacity(rounds);
    for r in 0..rounds {
        if r > 0 {
            world.bath.advance_diffusion(round_s)?;
        }
        snapshots.push(world.bath.xi.clone());
    }
    world.bath.advance_diffusion(round_s)?;
    world.bath.clock_s = start + settings.duration_s;

    let seed = world.seed;
    let qubit = &world.qubit;
    let defects = &world.bath.defects;
    let fixed_bias = match *control {
        WaveformSpec::Zero => Some(0.0),
        WaveformSpec::Dc { volts } => Some(volts),
        WaveformSpec::Triangle { .. } => None,
    };
    let chunks = rounds.div_ceil(ROUNDS_PER_CHUNK);
    let partial: Vec<Vec<u32>> = world.exec.map(chunks, |c| {
        let mut excited = vec![0u32; n];
        let end = ((c + 1) * ROUNDS_PER_CHUNK).min(rounds);
        for (r, xi) in snapshots.iter().enumerate().take(end).skip(c * ROUNDS_PER_CHUNK) {
            let mut rng = rng::stream(seed, Domain::Shots, index, r as u64);
            let lz = sweep.map_or(0.0, |s| gamma_lz_with(qubit.f_q, defects, xi, s));
            let tls = TlsAbsorption::new(qubit.f_q, defects, xi);
            let fixed_rate = fixed_bias.map(|v| base + tls.rate(v));
            for (j, &t) in delays.iter().enumerate() {
                let rate = fixed_rate.unwrap_or_else(|| {
                    let at = (r * n + j) as f64 * slot_s;
                    let bias = waveform_voltage(control, at, phase);
                    base + lz + tls.rate(bias)
                });
                let p = qubit.readout_p1((-rate * t).exp());
                if rng.random::<f64>() < p {
                    excited[j] += 1;
                }
            }
        }
        excited
    });
    let mut excited = vec![0u32; n];
    for chunk in &partial {
        for (total, k) in excited.iter_mut().zip(chunk) {
            *total += k;
        }
    }
    let p1 = excited.iter().map(|&k| k as f64 / rounds as f64).collect();
    let curve = P1Curve {
        delays_us: delays,
        p1,
        shots: vec![settings.shots_per_point; n],
    };
    let fit = fit_exponential(&curve)?;
    Ok(Measurement {
        curve,
        fit,
        start_s: start,
        duration_s: settings.duration_s,
        phase,
    })
}

/// Noiseless expectation of the measured population at delay `t` for a
/// fixed decay rate.
pub fn expected_p1(qubit: &decay::QubitSpec, rate: f64, t: f64) -> f64 {
    qubit.readout_p1((-rate * t).exp())
}

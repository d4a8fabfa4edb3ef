//! A simulated device on one experiment timeline.

use crate::bath::BathState;
use crate::decay::QubitSpec;
use crate::exec::Exec;
use crate::protocols::draw_random_voltage;
use crate::rng::{self, Domain};
use crate::{Error, Result};

/// Qubit, bath, fridge temperature and the random-stream bookkeeping of
/// one timeline. The bath clock is the timeline's wall clock.
#[derive(Clone, Debug)]
pub struct World {
    pub qubit_id: String,
    pub qubit: QubitSpec,
    pub bath: BathState,
    pub temperature_mk: f64,
    /// Seed of the shot, phase and voltage streams.
    pub seed: u64,
    /// Resolved-config hash stamped on every record.
    pub config_hash: String,
    pub exec: Exec,
    measurements: u64,
    voltage_draws: u64,
}

impl World {
    pub fn new(qubit_id: impl Into<String>, qubit: QubitSpec, bath: BathState, temperature_mk: f64, seed: u64) -> Result<Self> {
        qubit.validate()?;
        bath.validate()?;
        if !(temperature_mk >= 0.0) {
            return Err(Error::invalid("temperature_mk", "must be >= 0"));
        }
        Ok(Self {
            qubit_id: qubit_id.into(),
            qubit,
            bath,
            temperature_mk,
            seed,
            config_hash: String::new(),
            exec: Exec::default(),
            measurements: 0,
            voltage_draws: 0,
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn clock_s(&self) -> f64 {
        self.bath.clock_s
    }

    /// Lets the bath diffuse for `dt` seconds without measuring.
    pub fn idle(&mut self, dt: f64) -> Result<()> {
        self.bath.advance_diffusion(dt)
    }

    pub fn set_temperature(&mut self, temperature_mk: f64) -> Result<()> {
        if !(temperature_mk >= 0.0) {
            return Err(Error::invalid(
                "temperature",
                format!("{temperature_mk} mK is negative"),
            ));
        }
        self.temperature_mk = temperature_mk;
        Ok(())
    }

    /// Next uniform ±8 V electrode voltage of this timeline.
    pub fn draw_voltage(&mut self) -> f64 {
        let mut rng = rng::stream(self.seed, Domain::Voltage, self.voltage_draws, 0);
        self.voltage_draws += 1;
        draw_random_voltage(&mut rng)
    }

    pub(crate) fn next_measurement(&mut self) -> u64 {
        let index = self.measurements;
        self.measurements += 1;
        index
    }
}

//! Qubit energy-decay rates.
//!
//! The total rate is a sum of independent channels:
//! a residual rate `gamma0`, resonant TLS absorption (a weak-coupling
//! Lorentzian per defect), thermal quasiparticles, and, while the control
//! electrode is swept, Landau–Zener transfer at each resonance crossing.
//! All rates are in µs⁻¹.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bath::{BathState, TlsDefect};
use crate::units::{self, S_PER_US};
use crate::{Error, Result};

/// Fixed-frequency transmon parameters in internal units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    /// Qubit frequency, GHz.
    pub f_q: f64,
    /// Residual loss rate, µs⁻¹.
    pub gamma0: f64,
    /// Superconducting gap Δ/h, GHz.
    pub gap: f64,
    /// Dispersive shift χ/2π, kHz (metadata only).
    pub chi_over_2pi: f64,
    /// Resonator linewidth κ/2π, kHz (metadata only).
    pub kappa_over_2pi: f64,
    /// P(read 0 | state 1).
    pub read_err_e: f64,
    /// P(read 1 | state 0).
    pub read_err_g: f64,
}

impl QubitSpec {
    pub fn new(f_q: f64, gamma0: f64) -> Self {
        Self {
            f_q,
            gamma0,
            gap: 43.5,
            chi_over_2pi: 200.0,
            kappa_over_2pi: 100.0,
            read_err_e: 0.02,
            read_err_g: 0.01,
        }
    }

    pub fn with_perfect_readout(mut self) -> Self {
        self.read_err_e = 0.0;
        self.read_err_g = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_q > 0.0 && self.f_q.is_finite()) {
            return Err(Error::invalid("qubit.f_q", "must be > 0"));
        }
        if !(self.gamma0 >= 0.0 && self.gamma0.is_finite()) {
            return Err(Error::invalid("qubit.gamma0", "must be >= 0"));
        }
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return Err(Error::invalid("qubit.gap", "must be > 0"));
        }
        for (field, p) in [("qubit.read_err_e", self.read_err_e), ("qubit.read_err_g", self.read_err_g)] {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::invalid(field, "must lie in [0, 0.5)"));
            }
        }
        Ok(())
    }

    /// Probability of reading 1 when the qubit survives with probability
    /// `survival`.
    pub fn readout_p1(&self, survival: f64) -> f64 {
        (1.0 - self.read_err_e) * survival + self.read_err_g * (1.0 - survival)
    }
}

/// Control signal on the TLS electrode. A triangle starts at a uniformly
/// random phase at the beginning of each measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "waveform", rename_all = "snake_case")]
pub enum WaveformSpec {
    Zero,
    Dc { volts: f64 },
    Triangle { f_ac_hz: f64, vpp_v: f64 },
}

impl WaveformSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WaveformSpec::Zero => Ok(()),
            WaveformSpec::Dc { volts } if volts.is_finite() => Ok(()),
            WaveformSpec::Dc { .. } => Err(Error::invalid("waveform.volts", "must be finite")),
            WaveformSpec::Triangle { f_ac_hz, vpp_v } => {
                if !(f_ac_hz > 0.0 && f_ac_hz.is_finite()) {
                    return Err(Error::invalid("waveform.f_ac", "must be > 0"));
                }
                if !(vpp_v >= 0.0 && vpp_v.is_finite()) {
                    return Err(Error::invalid("waveform.vpp", "must be >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn sweep(&self) -> Option<Sweep> {
        match *self {
            WaveformSpec::Triangle { f_ac_hz, vpp_v } => Some(Sweep { f_ac_hz, vpp_v }),
            _ => None,
        }
    }
}

/// Triangle-sweep parameters as seen by the Landau–Zener channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub f_ac_hz: f64,
    pub vpp_v: f64,
}

impl Sweep {
    /// Magnitude of the bias slew rate, V/s.
    pub fn slew_v_per_s(&self) -> f64 {
        2.0 * self.vpp_v * self.f_ac_hz
    }
}

/// Electrode voltage at time `t` seconds after the measurement origin.
/// `phase` in [0, 1) shifts the triangle origin by `phase` periods.
pub fn waveform_voltage(w: &WaveformSpec, t: f64, phase: f64) -> f64 {
    match *w {
        WaveformSpec::Zero => 0.0,
        WaveformSpec::Dc { volts } => volts,
        WaveformSpec::Triangle { f_ac_hz, vpp_v } => {
            let cycles = t * f_ac_hz + phase;
            let u = cycles - cycles.floor();
            let amp = 0.5 * vpp_v;
            if u < 0.25 {
                4.0 * u * amp
            } else if u < 0.75 {
                (2.0 - 4.0 * u) * amp
            } else {
                (4.0 * u - 4.0) * amp
            }
        }
    }
}

/// Lorentzian absorption of one defect at its current offset `xi`.
pub fn defect_rate(f_q: f64, d: &TlsDefect, bias: f64, xi: f64) -> f64 {
    let e = d.splitting(bias, xi);
    let g = d.g_bare * d.delta0 / e;
    let detuning = units::ghz_to_rad_per_us(f_q - e);
    2.0 * g * g * d.gamma2 / (d.gamma2 * d.gamma2 + detuning * detuning)
}

/// TLS absorption summed over defects with explicit offsets.
pub fn gamma_tls_with(f_q: f64, defects: &[TlsDefect], xi: &[f64], bias: f64) -> f64 {
    TlsAbsorption::new(f_q, defects, xi).rate(bias)
}

const LANES: usize = 4;

/// Bath absorption frozen at one set of diffusion offsets, laid out for
/// repeated evaluation at many bias points.
#[derive(Clone, Debug, Default)]
pub struct TlsAbsorption {
    f_q: f64,
    offset: Vec<f64>,
    gain: Vec<f64>,
    delta0_sq: Vec<f64>,
    gamma2_sq: Vec<f64>,
    weight: Vec<f64>,
}

impl TlsAbsorption {
    pub fn new(f_q: f64, defects: &[TlsDefect], xi: &[f64]) -> Self {
        let padded = defects.len().div_ceil(LANES) * LANES;
        let mut k = TlsAbsorption {
            f_q,
            offset: Vec::with_capacity(padded),
            gain: Vec::with_capacity(padded),
            delta0_sq: Vec::with_capacity(padded),
            gamma2_sq: Vec::with_capacity(padded),
            weight: Vec::with_capacity(padded),
        };
        for (d, &x) in defects.iter().zip(xi) {
            k.offset.push(d.epsilon0 + x);
            k.gain.push(d.dipole_gain);
            k.delta0_sq.push(d.delta0 * d.delta0);
            k.gamma2_sq.push(d.gamma2 * d.gamma2);
            // 2·g_bare²·Δ0²·γ2; the 1/E² of the coupling is applied per bias.
            k.weight.push(2.0 * (d.g_bare * d.delta0).powi(2) * d.gamma2);
        }
        // Padding entries carry zero weight and a unit splitting.
        while k.offset.len() < padded {
            k.offset.push(0.0);
            k.gain.push(0.0);
            k.delta0_sq.push(1.0);
            k.gamma2_sq.push(1.0);
            k.weight.push(0.0);
        }
        k
    }

    /// Summed absorption rate at `bias`, µs⁻¹.
    pub fn rate(&self, bias: f64) -> f64 {
        let scale = units::ghz_to_rad_per_us(1.0);
        let mut acc = [0.0f64; LANES];
        let chunks = self
            .offset
            .chunks_exact(LANES)
            .zip(self.gain.chunks_exact(LANES))
            .zip(self.delta0_sq.chunks_exact(LANES))
            .zip(self.gamma2_sq.chunks_exact(LANES))
            .zip(self.weight.chunks_exact(LANES));
        for ((((o, g), d2), y2), w) in chunks {
            for l in 0..LANES {
                let a = o[l] + g[l] * bias;
                let e_sq = a * a + d2[l];
                let det = scale * (self.f_q - e_sq.sqrt());
                acc[l] += w[l] / (e_sq * (y2[l] + det * det));
            }
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3])
    }
}

/// TLS absorption rate at the given bias, µs⁻¹.
pub fn gamma_tls(q: &QubitSpec, bath: &BathState, bias: f64) -> f64 {
    gamma_tls_with(q.f_q, &bath.defects, &bath.xi, bias)
}

/// Thermal-equilibrium quasiparticle decay rate at `temperature_mk`.
pub fn gamma_qp(temperature_mk: f64, q: &QubitSpec) -> Result<f64> {
    gamma_qp_for_gap(temperature_mk, q.f_q, q.gap)
}

/// [`gamma_qp`] with the gap passed explicitly, as used by the gap fit.
pub fn gamma_qp_for_gap(temperature_mk: f64, f_q: f64, gap: f64) -> Result<f64> {
    if !(temperature_mk >= 0.0) {
        return Err(Error::invalid(
            "temperature",
            format!("{temperature_mk} mK is negative"),
        ));
    }
    if temperature_mk == 0.0 {
        return Ok(0.0);
    }
    let kt = units::thermal_ghz(temperature_mk);
    let x_qp = (2.0 * PI * kt / gap).sqrt() * (-gap / kt).exp();
    // (ω_q/π)·sqrt(2Δ/ħω_q) with ω_q in rad/µs.
    let prefactor = 2.0 * f_q * 1e3 * (2.0 * gap / f_q).sqrt();
    Ok(x_qp * prefactor)
}

/// Landau–Zener transfer probability for one passage through resonance.
/// `sweep_rate` is the detuning slew in rad/µs per µs.
pub fn lz_crossing_probability(g_eff: f64, sweep_rate: f64) -> Result<f64> {
    if !(sweep_rate > 0.0) {
        return Err(Error::invalid("sweep_rate", "must be > 0"));
    }
    if !(g_eff >= 0.0) {
        return Err(Error::invalid("g_eff", "must be >= 0"));
    }
    Ok(-(-2.0 * PI * g_eff * g_eff / sweep_rate).exp_m1())
}

/// Mean Landau–Zener loss rate from a triangle sweep with explicit offsets.
pub fn gamma_lz_with(f_q: f64, defects: &[TlsDefect], xi: &[f64], sweep: Sweep) -> f64 {
    if !(sweep.vpp_v > 0.0 && sweep.f_ac_hz > 0.0) {
        return 0.0;
    }
    let half = 0.5 * sweep.vpp_v;
    let slew = sweep.slew_v_per_s();
    let mut total = 0.0;
    for (d, &x) in defects.iter().zip(xi) {
        if d.dipole_gain == 0.0 || d.delta0 >= f_q {
            continue;
        }
        // Asymmetry magnitude at which the splitting equals f_q.
        let resonant = (f_q * f_q - d.delta0 * d.delta0).sqrt();
        let slope = d.dipole_gain.abs() * resonant / f_q;
        let detuning_slew = slope * slew * units::ghz_to_rad_per_us(1.0) * S_PER_US;
        let g_eff = d.g_bare * d.delta0 / f_q;
        let p = -(-2.0 * PI * g_eff * g_eff / detuning_slew).exp_m1();
        for target in [resonant, -resonant] {
            let root = (target - d.epsilon0 - x) / d.dipole_gain;
            if root.abs() <= half {
                total += 2.0 * sweep.f_ac_hz * p * S_PER_US;
            }
        }
    }
    total
}

/// Mean Landau–Zener loss rate while `sweep` is applied, µs⁻¹.
pub fn gamma_lz(q: &QubitSpec, bath: &BathState, sweep: Sweep) -> f64 {
    gamma_lz_with(q.f_q, &bath.defects, &bath.xi, sweep)
}

/// Total decay rate: residual + TLS + quasiparticle (+ LZ when sweeping).
pub fn gamma_total(
    q: &QubitSpec,
    bath: &BathState,
    bias: f64,
    temperature_mk: f64,
    sweep: Option<Sweep>,
) -> Result<f64> {
    let lz = sweep.map_or(0.0, |s| gamma_lz(q, bath, s));
    Ok(q.gamma0 + gamma_tls(q, bath, bias) + gamma_qp(temperature_mk, q)? + lz)
}

/// Survival averaged over a Gaussian distribution of decay rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianAverage {
    pub value: f64,
    /// False once `t ≥ 2μ/σ²`, where the expression stops describing a
    /// decaying curve.
    pub valid: bool,
}

/// `⟨e^{−Γt}⟩ = e^{−μt + σ²t²/2}` for Γ ~ N(μ, σ²).
pub fn gaussian_average_survival(mu: f64, sigma: f64, t: f64) -> Result<GaussianAverage> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", "must be > 0"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::invalid("sigma", "must be >= 0"));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "must be >= 0"));
    }
    let value = (-mu * t + 0.5 * sigma * sigma * t * t).exp();
    let valid = sigma == 0.0 || t < 2.0 * mu / (sigma * sigma);
    Ok(GaussianAverage { value, valid })
}

//! Electric-field tunable TLS defects in the standard tunneling model, and
//! their slow spectral diffusion.
//!
//! A defect has asymmetry `ε = ε0 + gain·V + ξ` and tunneling energy `Δ0`;
//! its splitting is `E = sqrt(ε² + Δ0²)` and its transverse coupling to the
//! qubit is `g·Δ0/E`. The diffusion offset `ξ` follows an
//! Ornstein–Uhlenbeck process advanced with its exact transition law.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Domain};
use crate::units;
use crate::{Error, Result};

/// One TLS defect. Energies in GHz, rates in rad/µs, `diff_tau` in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlsDefect {
    pub epsilon0: f64,
    pub delta0: f64,
    /// Asymmetry shift per electrode volt, GHz/V.
    pub dipole_gain: f64,
    pub g_bare: f64,
    pub gamma2: f64,
    pub diff_sigma: f64,
    pub diff_tau: f64,
}

impl TlsDefect {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("delta0", self.delta0 > 0.0, "must be > 0"),
            ("gamma2", self.gamma2 > 0.0, "must be > 0"),
            ("g_bare", self.g_bare >= 0.0, "must be >= 0"),
            ("diff_sigma", self.diff_sigma >= 0.0, "must be >= 0"),
            ("diff_tau", self.diff_tau > 0.0, "must be > 0"),
            ("epsilon0", self.epsilon0.is_finite(), "must be finite"),
            ("dipole_gain", self.dipole_gain.is_finite(), "must be finite"),
        ];
        for (field, ok, reason) in checks {
            if !ok {
                return Err(Error::invalid(format!("tls.{field}"), reason));
            }
        }
        Ok(())
    }

    /// Asymmetry at the given bias and diffusion offset, GHz.
    pub fn asymmetry(&self, bias: f64, xi: f64) -> f64 {
        self.epsilon0 + self.dipole_gain * bias + xi
    }

    /// Splitting `sqrt(ε² + Δ0²)` in GHz. Never below `delta0`.
    pub fn splitting(&self, bias: f64, xi: f64) -> f64 {
        self.asymmetry(bias, xi).hypot(self.delta0)
    }

    /// Transverse coupling `g_bare·Δ0/E` in rad/µs at the given splitting.
    pub fn transverse_coupling(&self, splitting: f64) -> Result<f64> {
        if !(splitting >= self.delta0) {
            return Err(Error::invalid(
                "splitting",
                format!("{splitting} GHz is below delta0 = {} GHz", self.delta0),
            ));
        }
        Ok(self.g_bare * self.delta0 / splitting)
    }
}

/// Free-function form of [`TlsDefect::splitting`].
pub fn tls_splitting(d: &TlsDefect, bias: f64, xi: f64) -> f64 {
    d.splitting(bias, xi)
}

/// Free-function form of [`TlsDefect::transverse_coupling`].
pub fn transverse_coupling(d: &TlsDefect, splitting: f64) -> Result<f64> {
    d.transverse_coupling(splitting)
}

/// Closed interval `[min, max]` sampled log-uniformly. Serialized as a
/// two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct LogRange {
    pub min: f64,
    pub max: f64,
}

impl LogRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.min > 0.0 && self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::invalid(field, "bounds must be positive and finite"));
        }
        if self.max < self.min {
            return Err(Error::invalid(
                field,
                format!("inverted range [{}, {}]", self.min, self.max),
            ));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        (self.min.ln() + u * (self.max / self.min).ln()).exp()
    }
}

impl From<[f64; 2]> for LogRange {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<LogRange> for [f64; 2] {
    fn from(r: LogRange) -> Self {
        [r.min, r.max]
    }
}

/// Ensemble parameters in user units (GHz, kHz, MHz, s). Converted to
/// internal units by [`sample_bath`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathConfig {
    pub n_tls: usize,
    /// Half-width of the window of zero-bias splittings around `f_q`, GHz.
    pub window_half_width: f64,
    /// Tunneling energy range, GHz. The upper bound defaults to `f_q`.
    pub delta0_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta0_max: Option<f64>,
    /// Standard deviation of the dipole gain, GHz/V.
    pub dipole_gain_scale: f64,
    /// Bare coupling g/2π, kHz.
    pub g_bare_khz: LogRange,
    /// Linewidth γ2/2π, MHz.
    pub gamma2_mhz: LogRange,
    /// Stationary diffusion std of the asymmetry, MHz.
    pub diff_sigma_mhz: LogRange,
    /// Diffusion correlation time, s.
    pub diff_tau_s: LogRange,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            n_tls: 1600,
            window_half_width: 2.0,
            delta0_min: 0.1,
            delta0_max: None,
            dipole_gain_scale: 0.15,
            g_bare_khz: LogRange::new(10.0, 30.0),
            gamma2_mhz: LogRange::new(3.0, 10.0),
            diff_sigma_mhz: LogRange::new(10.0, 50.0),
            diff_tau_s: LogRange::new(1e3, 1e4),
        }
    }
}

impl BathConfig {
    pub fn validate(&self, f_q: f64) -> Result<()> {
        if !(f_q > 0.0) {
            return Err(Error::invalid("qubit.f_q", "must be > 0"));
        }
        if !(self.window_half_width >= 0.0) {
            return Err(Error::invalid("bath.window_half_width", "must be >= 0"));
        }
        let delta0 = self.delta0_range(f_q);
        delta0.validate("bath.delta0")?;
        if self.n_tls > 0 && delta0.min > f_q - self.window_half_width {
            return Err(Error::invalid(
                "bath.delta0_min",
                "must not exceed the lowest splitting in the window",
            ));
        }
        if !(self.dipole_gain_scale >= 0.0) {
            return Err(Error::invalid("bath.dipole_gain_scale", "must be >= 0"));
        }
        self.g_bare_khz.validate("bath.g_bare_khz")?;
        self.gamma2_mhz.validate("bath.gamma2_mhz")?;
        self.diff_sigma_mhz.validate("bath.diff_sigma_mhz")?;
        self.diff_tau_s.validate("bath.diff_tau_s")?;
        Ok(())
    }

    fn delta0_range(&self, f_q: f64) -> LogRange {
        LogRange::new(self.delta0_min, self.delta0_max.unwrap_or(f_q))
    }
}

/// The defect ensemble together with its current diffusion offsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathState {
    pub defects: Vec<TlsDefect>,
    /// Current diffusion offset per defect, GHz.
    pub xi: Vec<f64>,
    /// Absolute simulation time, s.
    pub clock_s: f64,
    /// Stream identifier and position for diffusion draws.
    pub seed: u64,
    pub step: u64,
}

impl BathState {
    /// A bath with the given defects frozen at `xi = 0` (useful for
    /// hand-constructed worlds).
    pub fn from_defects(defects: Vec<TlsDefect>, seed: u64) -> Result<Self> {
        for d in &defects {
            d.validate()?;
        }
        let xi = vec![0.0; defects.len()];
        Ok(Self {
            defects,
            xi,
            clock_s: 0.0,
            seed,
            step: 0,
        })
    }

    pub fn empty(seed: u64) -> Self {
        Self {
            defects: Vec::new(),
            xi: Vec::new(),
            clock_s: 0.0,
            seed,
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.defects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.xi.len() != self.defects.len() {
            return Err(Error::invalid("bath.xi", "length differs from defect count"));
        }
        for d in &self.defects {
            d.validate()?;
        }
        Ok(())
    }

    /// Advances every diffusion offset by the exact OU transition over
    /// `dt` seconds and moves the clock forward. One diffusion stream
    /// position is consumed per call, including `dt = 0`.
    pub fn advance_diffusion(&mut self, dt: f64) -> Result<()> {
        if !(dt >= 0.0) {
            return Err(Error::invalid("dt", format!("{dt} s is negative")));
        }
        let mut rng = rng::stream(self.seed, Domain::Diffusion, self.step, 0);
        self.step += 1;
        for (xi, d) in self.xi.iter_mut().zip(&self.defects) {
            let n: f64 = rng.sample(StandardNormal);
            let x = dt / d.diff_tau;
            let keep = (-x).exp();
            let spread = d.diff_sigma * (-(-2.0 * x).exp_m1()).sqrt();
            *xi = *xi * keep + spread * n;
        }
        self.clock_s += dt;
        Ok(())
    }
}

/// Draws a defect ensemble around qubit frequency `f_q` (GHz).
/// Deterministic in `(config, f_q, seed)`.
pub fn sample_bath(config: &BathConfig, f_q: f64, seed: u64) -> Result<BathState> {
    config.validate(f_q)?;
    let mut rng = rng::stream(seed, Domain::Bath, 0, 0);
    let delta0_range = config.delta0_range(f_q);
    let lo = f_q - config.window_half_width;
    let hi = f_q + config.window_half_width;
    let mut defects = Vec::with_capacity(config.n_tls);
    let mut xi = Vec::with_capacity(config.n_tls);
    for _ in 0..config.n_tls {
        let target = lo + (hi - lo) * rng.random::<f64>();
        let mut delta0 = delta0_range.sample(&mut rng);
        let mut attempts = 0;
        while delta0 > target {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::invalid(
                    "bath.delta0",
                    "range incompatible with the splitting window",
                ));
            }
            delta0 = delta0_range.sample(&mut rng);
        }
        let magnitude = (target * target - delta0 * delta0).max(0.0).sqrt();
        let epsilon0 = if rng.random::<bool>() { magnitude } else { -magnitude };
        let gain: f64 = rng.sample(StandardNormal);
        let diff_sigma = config.diff_sigma_mhz.sample(&mut rng) * 1e-3;
        let defect = TlsDefect {
            epsilon0,
            delta0,
            dipole_gain: config.dipole_gain_scale * gain,
            g_bare: units::khz_to_rad_per_us(config.g_bare_khz.sample(&mut rng)),
            gamma2: units::mhz_to_rad_per_us(config.gamma2_mhz.sample(&mut rng)),
            diff_sigma,
            diff_tau: config.diff_tau_s.sample(&mut rng),
        };
        let n: f64 = rng.sample(StandardNormal);
        xi.push(diff_sigma * n);
        defects.push(defect);
    }
    Ok(BathState {
        defects,
        xi,
        clock_s: 0.0,
        seed,
        step: 0,
    })
}

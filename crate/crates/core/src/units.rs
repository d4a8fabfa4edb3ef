//! Unit conventions and the conversions applied at the configuration
//! boundary. Everything past the boundary uses µs, GHz, rad/µs and mK.

use std::f64::consts::PI;

/// Boltzmann constant over Planck constant, GHz per mK.
pub const KB_OVER_H_GHZ_PER_MK: f64 = 0.020_836_6;

/// Seconds per microsecond.
pub const S_PER_US: f64 = 1e-6;

/// Cyclic frequency in MHz to an angular rate in rad/µs.
pub fn mhz_to_rad_per_us(mhz: f64) -> f64 {
    2.0 * PI * mhz
}

/// Cyclic frequency in kHz to an angular rate in rad/µs.
pub fn khz_to_rad_per_us(khz: f64) -> f64 {
    2.0 * PI * khz * 1e-3
}

/// Cyclic frequency in GHz to an angular rate in rad/µs.
pub fn ghz_to_rad_per_us(ghz: f64) -> f64 {
    2.0 * PI * ghz * 1e3
}

/// Angular rate in rad/µs back to cyclic MHz.
pub fn rad_per_us_to_mhz(rate: f64) -> f64 {
    rate / (2.0 * PI)
}

/// Thermal energy k_B·T expressed as a frequency in GHz.
pub fn thermal_ghz(temperature_mk: f64) -> f64 {
    KB_OVER_H_GHZ_PER_MK * temperature_mk
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_are_consistent() {
        assert_eq!(mhz_to_rad_per_us(1.0), 2.0 * PI);
        assert!((khz_to_rad_per_us(1000.0) - mhz_to_rad_per_us(1.0)).abs() < 1e-12);
        assert!((ghz_to_rad_per_us(1e-3) - mhz_to_rad_per_us(1.0)).abs() < 1e-12);
        assert!((rad_per_us_to_mhz(mhz_to_rad_per_us(3.7)) - 3.7).abs() < 1e-12);
    }
}

//! Current-steering DAC and capacitor integration.
//!
//! Multiplication is realized by integrating the weight-programmed DAC
//! current onto a capacitor for the input-programmed pulse window, giving
//! `V = I * T / C`. Optional nonidealities: finite output impedance droop
//! (single Early-voltage exponential, closed form) and static thermometer
//! unit-cell mismatch. Optional kT/C noise is applied once per integration
//! as a single Gaussian sample.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{CircuitParams, Code4, BOLTZMANN};
use crate::pulsegen::PulseTrain;
use crate::rng::SimRng;

/// Output of the current-steering DAC for one weight code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DacOutput {
    /// Steered current (A).
    pub current: f64,
    pub code: Code4,
}

/// One cell's multiplication result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalogSample {
    /// Capacitor voltage after integration, clamped to `[0, v_sat]` (V).
    pub v_mac: f64,
    /// True when the pre-clamp voltage exceeded `v_sat`.
    pub saturated: bool,
    pub cell_index: usize,
}

impl AnalogSample {
    pub fn zero(cell_index: usize) -> Self {
        AnalogSample {
            v_mac: 0.0,
            saturated: false,
            cell_index,
        }
    }
}

/// The 4-bit current-steering DAC, thermometer decoded into fifteen unit
/// cells. Unit mismatch, when configured, is sampled once per simulator
/// instance and then stays fixed (static mismatch).
#[derive(Debug, Clone)]
pub struct Dac {
    i_lsb: f64,
    unit_errors: Option<[f64; 15]>,
}

impl Dac {
    pub fn new(params: &CircuitParams, rng: &mut SimRng) -> Self {
        let sigma = params
            .dac_nonideality
            .as_ref()
            .map(|d| d.mismatch_sigma)
            .unwrap_or(0.0);
        let unit_errors = if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("sigma validated non-negative");
            let mut errors = [0.0; 15];
            for e in &mut errors {
                *e = normal.sample(rng);
            }
            Some(errors)
        } else {
            None
        };
        Dac {
            i_lsb: params.i_lsb,
            unit_errors,
        }
    }

    /// An ideal DAC, bypassing mismatch regardless of the configuration.
    pub fn ideal(params: &CircuitParams) -> Self {
        Dac {
            i_lsb: params.i_lsb,
            unit_errors: None,
        }
    }

    /// Steered current for a weight code. Ideal mode is exactly
    /// `code * i_lsb`; with mismatch, the first `code` unit cells sum.
    pub fn current(&self, code: Code4) -> DacOutput {
        let current = match &self.unit_errors {
            None => f64::from(code.value()) * self.i_lsb,
            Some(errors) => errors[..usize::from(code.value())]
                .iter()
                .map(|e| self.i_lsb * (1.0 + e))
                .sum(),
        };
        DacOutput { current, code }
    }
}

/// Standard deviation of the sampled capacitor thermal noise,
/// `sqrt(kT / C)` (V).
pub fn thermal_noise_sigma(c: f64, temperature: f64) -> f64 {
    debug_assert!(c > 0.0 && temperature > 0.0);
    (BOLTZMANN * temperature / c).sqrt()
}

/// Maximum integration time that keeps the capacitor at or below `v_max`
/// for a given current (s).
pub fn max_on_time(v_max: f64, c: f64, i_max: f64) -> f64 {
    v_max * c / i_max
}

/// Integrates the DAC current over the pulse window onto the capacitor.
///
/// The capacitor is assumed reset beforehand (integration starts at 0 V).
/// With `v_early` configured, the ideal ramp is replaced by the closed-form
/// droop `v_early * (1 - exp(-I*T / (C * v_early)))`. With noise enabled,
/// one Gaussian kT/C sample is added. The result is clamped to
/// `[0, v_sat]`; the saturated flag records a pre-clamp excursion above
/// `v_sat`.
pub fn integrate(
    dac: &DacOutput,
    pulses: &PulseTrain,
    params: &CircuitParams,
    rng: &mut SimRng,
    cell_index: usize,
) -> AnalogSample {
    let charge_time = dac.current * pulses.duration / params.c_int;
    let v_early = params.dac_nonideality.as_ref().and_then(|d| d.v_early);
    let mut v = match v_early {
        Some(v_early) => v_early * (1.0 - (-charge_time / v_early).exp()),
        None => charge_time,
    };
    if params.noise_enabled {
        let sigma = thermal_noise_sigma(params.c_int, params.temperature);
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        v += sigma * z;
    }
    let saturated = v > params.v_sat;
    AnalogSample {
        v_mac: v.clamp(0.0, params.v_sat),
        saturated,
        cell_index,
    }
}

/// Discharges every capacitor to zero and clears the saturation flags.
pub fn reset_phase(samples: &mut [AnalogSample]) {
    for s in samples {
        s.v_mac = 0.0;
        s.saturated = false;
    }
}

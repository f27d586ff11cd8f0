//! Circuit and simulation parameters.
//!
//! Every physical constant used by the simulator lives in [`CircuitParams`].
//! Parameters are loaded from a JSON document whose keys mirror the struct
//! field names exactly; unknown keys are rejected so typos surface as errors.
//! Keys left out of the file fall back to the prototype defaults.
//!
//! A validated `CircuitParams` is immutable for the lifetime of a run and can
//! be shared freely across threads.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

use crate::rng::SimRng;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Relative margin allowed on the full-scale headroom check.
pub const HEADROOM_MARGIN: f64 = 0.10;

/// Default parameter values for the prototype macro.
pub mod defaults {
    /// DAC unit current, one weight LSB (A).
    pub const I_LSB: f64 = 11.5e-9;
    /// DAC resolution in bits. Fixed at 4 for this macro.
    pub const N_DAC_BITS: u32 = 4;
    /// Accumulation capacitor (F).
    pub const C_INT: f64 = 200e-15;
    /// Supply voltage (V).
    pub const V_DD: f64 = 1.0;
    /// Maximum linear capacitor swing (V).
    pub const V_SAT: f64 = 0.3;
    /// Pulse-generator clock period, one unit pulse width (s).
    pub const T_CLK_PULSE: f64 = 20e-9;
    /// Readout counter clock period (s).
    pub const T_CLK_TDC: f64 = 1e-9;
    /// Operating temperature (K).
    pub const TEMPERATURE: f64 = 300.0;
    /// Per-cell measurement window for the counter architecture (s).
    pub const T_MEAS: f64 = 32e-9;
    /// Control overhead for the counter architecture (s).
    pub const T_CTRL: f64 = 4e-9;
    /// Switching activity factor of the digital control logic.
    pub const ALPHA_SW: f64 = 0.1;
    /// Effective switched capacitance of the digital control logic (F).
    pub const C_DIG: f64 = 1e-12;
    /// PRNG seed.
    pub const SEED: u64 = 42;

    /// PMOS threshold magnitude of the starving device (V).
    pub const V_TP: f64 = 0.4;
    /// Per-stage load capacitance of the delay cell (F).
    pub const C_LOAD: f64 = 5e-15;
    /// Inverter output swing (V).
    pub const V_SWING: f64 = 1.0;
    /// Inverters per delay cell.
    pub const STAGES: u32 = 8;
    /// Square-law coefficient of the starving device (A/V²).
    ///
    /// Calibrated so that the zero-control-voltage cell delay is exactly
    /// 2 ns in f64 arithmetic (one ulp below the naive quotient, which
    /// rounds the delay just under the 2 ns mark).
    pub const K_FACTOR: f64 = 5.555555555555555e-5;
}

/// A 4-bit operand code in `0..=15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Code4(u8);

impl Code4 {
    /// Largest representable code.
    pub const MAX: u8 = 15;

    pub fn new(value: u8) -> Result<Self, OperandError> {
        if value > Self::MAX {
            Err(OperandError::CodeRange(value))
        } else {
            Ok(Code4(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// All sixteen codes in ascending order.
    pub fn all() -> impl Iterator<Item = Code4> {
        (0..=Self::MAX).map(Code4)
    }
}

impl TryFrom<u8> for Code4 {
    type Error = OperandError;
    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Code4::new(value)
    }
}

impl From<Code4> for u8 {
    fn from(code: Code4) -> u8 {
        code.0
    }
}

impl fmt::Display for Code4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Paired input and weight code vectors of identical length `N >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorOperands {
    inputs: Vec<Code4>,
    weights: Vec<Code4>,
}

impl VectorOperands {
    pub fn new(inputs: Vec<Code4>, weights: Vec<Code4>) -> Result<Self, OperandError> {
        if inputs.len() != weights.len() {
            return Err(OperandError::LengthMismatch {
                inputs: inputs.len(),
                weights: weights.len(),
            });
        }
        if inputs.is_empty() {
            return Err(OperandError::Empty);
        }
        Ok(VectorOperands { inputs, weights })
    }

    /// Builds operands from raw code values, validating each.
    pub fn from_u8(inputs: &[u8], weights: &[u8]) -> Result<Self, OperandError> {
        let inputs = inputs
            .iter()
            .map(|&v| Code4::new(v))
            .collect::<Result<Vec<_>, _>>()?;
        let weights = weights
            .iter()
            .map(|&v| Code4::new(v))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(inputs, weights)
    }

    /// The diagonal point `inputs = weights = [c; n]`.
    pub fn diagonal(code: Code4, n: usize) -> Result<Self, OperandError> {
        Self::new(vec![code; n], vec![code; n])
    }

    /// Uniformly random operands of length `n`.
    pub fn random(n: usize, rng: &mut SimRng) -> Result<Self, OperandError> {
        use rand::Rng;
        let draw = |rng: &mut SimRng| {
            (0..n)
                .map(|_| Code4(rng.gen_range(0..=Code4::MAX)))
                .collect::<Vec<_>>()
        };
        let inputs = draw(rng);
        let weights = draw(rng);
        Self::new(inputs, weights)
    }

    /// Vector length N. Never zero by construction.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[Code4] {
        &self.inputs
    }

    pub fn weights(&self) -> &[Code4] {
        &self.weights
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OperandError {
    #[error("code {0} out of range 0..=15")]
    CodeRange(u8),
    #[error("inputs and weights must have identical length (got {inputs} and {weights})")]
    LengthMismatch { inputs: usize, weights: usize },
    #[error("operand vectors must not be empty")]
    Empty,
}

/// Voltage-to-delay model of one current-starved delay cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayModel {
    /// Cubic expansion of the cell delay around zero control voltage.
    Polynomial {
        /// Nominal delay (s).
        t0: f64,
        /// First-order delay coefficient (s/V).
        alpha: f64,
        /// Second-order delay coefficient (s/V²).
        beta: f64,
        /// Third-order delay coefficient (s/V³).
        gamma: f64,
    },
    /// Square-law PMOS starving device feeding an inverter chain.
    PmosStarved {
        /// Square-law coefficient (A/V²).
        k_factor: f64,
        /// Threshold magnitude of the starving device (V).
        v_tp: f64,
        /// Per-stage load capacitance (F).
        c_load: f64,
        /// Inverter output swing (V).
        v_swing: f64,
        /// Inverters per cell.
        stages: u32,
    },
}

impl DelayModel {
    pub fn default_pmos_starved() -> Self {
        DelayModel::PmosStarved {
            k_factor: defaults::K_FACTOR,
            v_tp: defaults::V_TP,
            c_load: defaults::C_LOAD,
            v_swing: defaults::V_SWING,
            stages: defaults::STAGES,
        }
    }
}

/// Optional DAC nonideality knobs. Absent or zeroed fields mean ideal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DacNonideality {
    /// Early voltage modeling finite output impedance droop (V).
    #[serde(default)]
    pub v_early: Option<f64>,
    /// Relative sigma of the static unit-cell current mismatch.
    #[serde(default)]
    pub mismatch_sigma: f64,
}

/// Inputs to the digital dynamic power estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitalPowerParams {
    /// Switching activity factor in `[0, 1]`.
    #[serde(default = "d_alpha_sw")]
    pub alpha_sw: f64,
    /// Effective switched capacitance (F).
    #[serde(default = "d_c_dig")]
    pub c_dig: f64,
}

impl Default for DigitalPowerParams {
    fn default() -> Self {
        DigitalPowerParams {
            alpha_sw: defaults::ALPHA_SW,
            c_dig: defaults::C_DIG,
        }
    }
}

/// All device and timing constants used by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    /// DAC unit current (A).
    #[serde(default = "d_i_lsb")]
    pub i_lsb: f64,
    /// DAC resolution in bits. Fixed at 4.
    #[serde(default = "d_n_dac_bits")]
    pub n_dac_bits: u32,
    /// Accumulation capacitor (F).
    #[serde(default = "d_c_int")]
    pub c_int: f64,
    /// Supply voltage (V).
    #[serde(default = "d_v_dd")]
    pub v_dd: f64,
    /// Maximum linear capacitor swing (V).
    #[serde(default = "d_v_sat")]
    pub v_sat: f64,
    /// Pulse-generator clock period, one unit pulse width (s).
    #[serde(default = "d_t_clk_pulse")]
    pub t_clk_pulse: f64,
    /// Readout counter clock period (s).
    #[serde(default = "d_t_clk_tdc")]
    pub t_clk_tdc: f64,
    /// Operating temperature (K).
    #[serde(default = "d_temperature")]
    pub temperature: f64,
    /// Voltage-to-delay model of the delay cells.
    #[serde(default = "DelayModel::default_pmos_starved")]
    pub delay_model: DelayModel,
    /// Optional DAC nonidealities. `null` means ideal.
    #[serde(default)]
    pub dac_nonideality: Option<DacNonideality>,
    /// Enables kT/C sampling noise on each integration.
    #[serde(default)]
    pub noise_enabled: bool,
    /// Per-cell measurement window for the counter architecture (s).
    #[serde(default = "d_t_meas")]
    pub t_meas: f64,
    /// Control overhead for the counter architecture (s).
    #[serde(default = "d_t_ctrl")]
    pub t_ctrl: f64,
    /// Digital dynamic power inputs.
    #[serde(default)]
    pub p_digital: DigitalPowerParams,
    /// PRNG seed.
    #[serde(default = "d_seed")]
    pub seed: u64,
}

fn d_i_lsb() -> f64 {
    defaults::I_LSB
}
fn d_n_dac_bits() -> u32 {
    defaults::N_DAC_BITS
}
fn d_c_int() -> f64 {
    defaults::C_INT
}
fn d_v_dd() -> f64 {
    defaults::V_DD
}
fn d_v_sat() -> f64 {
    defaults::V_SAT
}
fn d_t_clk_pulse() -> f64 {
    defaults::T_CLK_PULSE
}
fn d_t_clk_tdc() -> f64 {
    defaults::T_CLK_TDC
}
fn d_temperature() -> f64 {
    defaults::TEMPERATURE
}
fn d_t_meas() -> f64 {
    defaults::T_MEAS
}
fn d_t_ctrl() -> f64 {
    defaults::T_CTRL
}
fn d_alpha_sw() -> f64 {
    defaults::ALPHA_SW
}
fn d_c_dig() -> f64 {
    defaults::C_DIG
}
fn d_seed() -> u64 {
    defaults::SEED
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            i_lsb: defaults::I_LSB,
            n_dac_bits: defaults::N_DAC_BITS,
            c_int: defaults::C_INT,
            v_dd: defaults::V_DD,
            v_sat: defaults::V_SAT,
            t_clk_pulse: defaults::T_CLK_PULSE,
            t_clk_tdc: defaults::T_CLK_TDC,
            temperature: defaults::TEMPERATURE,
            delay_model: DelayModel::default_pmos_starved(),
            dac_nonideality: None,
            noise_enabled: false,
            t_meas: defaults::T_MEAS,
            t_ctrl: defaults::T_CTRL,
            p_digital: DigitalPowerParams::default(),
            seed: defaults::SEED,
        }
    }
}

/// The prototype default parameter set.
pub fn default_params() -> CircuitParams {
    CircuitParams::default()
}

impl CircuitParams {
    /// Capacitor voltage produced by one unit product (one weight LSB
    /// integrated for one unit pulse), in volts.
    pub fn unit_v_mac(&self) -> f64 {
        self.i_lsb * self.t_clk_pulse / self.c_int
    }

    /// Full-scale DAC current, all fifteen unit cells on (A).
    pub fn full_scale_current(&self) -> f64 {
        f64::from(Code4::MAX) * self.i_lsb
    }

    /// Largest capacitor voltage any cell can reach: the full-scale product
    /// voltage, clamped to the linear swing limit.
    pub fn full_scale_v_mac(&self) -> f64 {
        let fs = f64::from(Code4::MAX) * f64::from(Code4::MAX) * self.unit_v_mac();
        fs.min(self.v_sat)
    }

    /// Dynamic power of the digital control and counter logic, using the
    /// readout counter clock as the digital clock (W).
    pub fn digital_power(&self) -> f64 {
        self.p_digital.alpha_sw * self.p_digital.c_dig * self.v_dd * self.v_dd / self.t_clk_tdc
    }

    /// Checks every parameter invariant and returns all violations found.
    /// An empty vector means the parameter set is usable.
    ///
    /// Comparisons are written negated so that NaN values (reachable through
    /// command-line overrides) register as violations too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut positive = |field: &'static str, value: f64| {
            if !(value > 0.0) {
                v.push(Violation::new(field, format!("{field} must be positive")));
            }
        };
        positive("i_lsb", self.i_lsb);
        positive("c_int", self.c_int);
        positive("v_dd", self.v_dd);
        positive("v_sat", self.v_sat);
        positive("t_clk_pulse", self.t_clk_pulse);
        positive("t_clk_tdc", self.t_clk_tdc);
        positive("temperature", self.temperature);
        positive("t_meas", self.t_meas);
        positive("t_ctrl", self.t_ctrl);
        positive("p_digital.c_dig", self.p_digital.c_dig);

        if self.n_dac_bits != 4 {
            v.push(Violation::new(
                "n_dac_bits",
                format!("n_dac_bits must be 4 (got {})", self.n_dac_bits),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_digital.alpha_sw) {
            v.push(Violation::new(
                "p_digital.alpha_sw",
                format!(
                    "p_digital.alpha_sw must be in [0, 1] (got {})",
                    self.p_digital.alpha_sw
                ),
            ));
        }
        if !(self.v_sat < self.v_dd) {
            v.push(Violation::new(
                "v_sat",
                format!(
                    "v_sat must be below v_dd (got {} >= {})",
                    self.v_sat, self.v_dd
                ),
            ));
        }

        match &self.delay_model {
            DelayModel::Polynomial { t0, alpha, .. } => {
                if !(*t0 > 0.0) {
                    v.push(Violation::new(
                        "delay_model.t0",
                        "delay_model.t0 must be positive".into(),
                    ));
                }
                if !(*alpha > 0.0) {
                    v.push(Violation::new(
                        "delay_model.alpha",
                        "delay_model.alpha must be positive (delay grows with v_mac)".into(),
                    ));
                }
            }
            DelayModel::PmosStarved {
                k_factor,
                v_tp,
                c_load,
                v_swing,
                stages,
            } => {
                if !(*k_factor > 0.0) {
                    v.push(Violation::new(
                        "delay_model.k_factor",
                        "delay_model.k_factor must be positive".into(),
                    ));
                }
                if !(*v_tp > 0.0) {
                    v.push(Violation::new(
                        "delay_model.v_tp",
                        "delay_model.v_tp must be positive".into(),
                    ));
                }
                if !(*c_load > 0.0) {
                    v.push(Violation::new(
                        "delay_model.c_load",
                        "delay_model.c_load must be positive".into(),
                    ));
                }
                if !(*v_swing > 0.0) {
                    v.push(Violation::new(
                        "delay_model.v_swing",
                        "delay_model.v_swing must be positive".into(),
                    ));
                }
                if *stages < 1 {
                    v.push(Violation::new(
                        "delay_model.stages",
                        "delay_model.stages must be at least 1".into(),
                    ));
                }
                // The starving device must stay on over the whole reachable
                // control range, which the saturation clamp bounds by v_sat.
                if !(self.v_dd - self.v_sat - v_tp > 0.0) {
                    v.push(Violation::new(
                        "delay_model.v_tp",
                        format!(
                            "starving device cuts off inside the operating range: \
                             v_dd - v_sat - v_tp = {} must be positive",
                            self.v_dd - self.v_sat - v_tp
                        ),
                    ));
                }
            }
        }

        if let Some(dac) = &self.dac_nonideality {
            if let Some(v_early) = dac.v_early {
                if !(v_early > 0.0) {
                    v.push(Violation::new(
                        "dac_nonideality.v_early",
                        "dac_nonideality.v_early must be positive".into(),
                    ));
                }
            }
            if dac.mismatch_sigma < 0.0 {
                v.push(Violation::new(
                    "dac_nonideality.mismatch_sigma",
                    "dac_nonideality.mismatch_sigma must be non-negative".into(),
                ));
            }
        }

        // Full-scale integration must stay within the linear swing budget,
        // with a 10% margin.
        let max_code = f64::from(Code4::MAX);
        if self.i_lsb > 0.0 && self.t_clk_pulse > 0.0 && self.c_int > 0.0 && self.v_sat > 0.0 {
            let v_full = max_code * self.i_lsb * max_code * self.t_clk_pulse / self.c_int;
            let budget = self.v_sat * (1.0 + HEADROOM_MARGIN);
            if v_full > budget {
                v.push(Violation::new(
                    "t_clk_pulse",
                    format!(
                        "full-scale integration {v_full:.4e} V exceeds the \
                         v_sat headroom budget {budget:.4e} V"
                    ),
                ));
            }
        }

        v
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn from_json_str(json: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("params always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Loads a config file and rejects it if any invariant is violated.
    pub fn load_validated(path: &Path) -> Result<Self, ConfigError> {
        let params = Self::load(path)?;
        let violations = params.validate();
        if violations.is_empty() {
            Ok(params)
        } else {
            Err(ConfigError::Invalid(violations))
        }
    }
}

/// One parameter invariant violation. Violations are data, not panics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    fn new(field: &'static str, message: String) -> Self {
        Violation { field, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid parameters ({} violation(s))", .0.len())]
    Invalid(Vec<Violation>),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_prototype() {
        let p = default_params();
        assert_eq!(p.i_lsb, 11.5e-9);
        assert_eq!(p.c_int, 200e-15);
        assert_eq!(p.v_sat, 0.3);
        assert_eq!(p.t_clk_pulse, 20e-9);
        assert_eq!(p.temperature, 300.0);
        assert_eq!(p.t_clk_tdc, 1e-9);
    }

    #[test]
    fn defaults_validate_clean() {
        assert_eq!(default_params().validate(), Vec::new());
    }

    #[test]
    fn zero_c_int_is_a_violation() {
        let mut p = default_params();
        p.c_int = 0.0;
        let violations = p.validate();
        assert!(violations
            .iter()
            .any(|v| v.field == "c_int" && v.message == "c_int must be positive"));
    }

    #[test]
    fn headroom_violation_at_double_pulse_width() {
        // 15 * 11.5 nA * 15 * 40 ns / 200 fF = 517.5 mV > 330 mV budget.
        let mut p = default_params();
        p.t_clk_pulse = 40e-9;
        let violations = p.validate();
        assert!(violations.iter().any(|v| v.field == "t_clk_pulse"));
    }

    #[test]
    fn v_sat_must_stay_below_v_dd() {
        let mut p = default_params();
        p.v_sat = 1.5;
        assert!(p.validate().iter().any(|v| v.field == "v_sat"));
    }

    #[test]
    fn json_round_trip_is_identity() {
        let p = default_params();
        let round = CircuitParams::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(p, round);

        let mut q = default_params();
        q.noise_enabled = true;
        q.dac_nonideality = Some(DacNonideality {
            v_early: Some(25.0),
            mismatch_sigma: 0.02,
        });
        q.delay_model = DelayModel::Polynomial {
            t0: 2e-9,
            alpha: 6.7e-9,
            beta: 1e-8,
            gamma: 3e-8,
        };
        let round = CircuitParams::from_json_str(&q.to_json_string()).unwrap();
        assert_eq!(q, round);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = CircuitParams::from_json_str(r#"{"i_lsb": 1e-8, "i_lsbb": 1e-8}"#);
        assert!(err.is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let p = CircuitParams::from_json_str(r#"{"seed": 7}"#).unwrap();
        assert_eq!(p.seed, 7);
        assert_eq!(p.i_lsb, defaults::I_LSB);
        assert_eq!(p.delay_model, DelayModel::default_pmos_starved());
    }

    #[test]
    fn code4_rejects_out_of_range() {
        assert!(Code4::new(15).is_ok());
        assert_eq!(Code4::new(16), Err(OperandError::CodeRange(16)));
    }

    #[test]
    fn operands_must_pair_up() {
        assert_eq!(
            VectorOperands::from_u8(&[1, 2], &[3]),
            Err(OperandError::LengthMismatch {
                inputs: 2,
                weights: 1
            })
        );
        assert_eq!(VectorOperands::from_u8(&[], &[]), Err(OperandError::Empty));
    }

    #[test]
    fn unit_voltage_is_1p15_mv() {
        let p = default_params();
        assert!((p.unit_v_mac() - 1.15e-3).abs() < 1e-18);
    }

    #[test]
    fn full_scale_current_is_fifteen_lsb() {
        let p = default_params();
        assert!((p.full_scale_current() - 172.5e-9).abs() < 1e-18);
    }
}

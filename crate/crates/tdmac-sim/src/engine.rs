//! Three-phase MAC operation: multiplication, accumulation, reset.
//!
//! A [`MacEngine`] owns its DAC instance, RNG stream, and capacitor state.
//! One run charges every cell's capacitor in parallel over a fixed
//! worst-case pulse window, hands the voltages to the selected accumulation
//! architecture, then discharges the capacitors so no residual charge leaks
//! into the next operation.

use crate::analog::{self, AnalogSample, Dac};
use crate::arch::MacArchitecture;
use crate::config::{CircuitParams, Code4, VectorOperands};
use crate::delay::{self, DelayError};
use crate::metrics::oracle_mac;
use crate::pulsegen::pulse_train;
use crate::rng::{instance_stream, SimRng};

/// One MAC result with its timing and energy accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct MacReadout {
    /// Architecture registry name.
    pub architecture: &'static str,
    /// Digitized MAC output in counter counts.
    pub d_out: u64,
    /// Pre-quantization accumulated delay (s).
    pub t_acc: f64,
    /// Exact integer dot product of the operands.
    pub oracle: u64,
    /// Total operation latency across the three phases (s).
    pub latency: f64,
    /// Supply energy of the DAC current sources during integration plus
    /// digital control energy over the operation (J).
    pub energy: f64,
    /// Indices of cells whose pre-clamp voltage exceeded `v_sat`.
    pub saturated_cells: Vec<usize>,
}

/// Per-cell trace of one run, for CSV dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrace {
    pub cell_index: usize,
    pub v_mac: f64,
    pub t_d: f64,
    pub d_i: u64,
}

/// Phase boundaries of one run (s).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpan {
    pub phase: &'static str,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub cells: Vec<CellTrace>,
    pub phases: Vec<PhaseSpan>,
}

/// Duration of the multiplication phase: the worst-case pulse window of
/// fifteen pulse-clock slots, independent of the data (s).
pub fn mult_phase_duration(params: &CircuitParams) -> f64 {
    f64::from(Code4::MAX) * params.t_clk_pulse
}

/// Duration of the reset phase: one pulse-clock cycle (s).
pub fn reset_duration(params: &CircuitParams) -> f64 {
    params.t_clk_pulse
}

/// Closed-form worst-case operation latency for `n` cells (s).
pub fn latency_model(arch: &dyn MacArchitecture, params: &CircuitParams, n: usize) -> f64 {
    mult_phase_duration(params)
        + arch.worst_case_accumulation_time(params, n)
        + reset_duration(params)
}

/// A simulator instance: one macro with its own DAC, RNG stream, and
/// capacitor bank. Instances are independent and safe to run in parallel;
/// a single instance executes its phases sequentially.
pub struct MacEngine<'p> {
    params: &'p CircuitParams,
    dac: Dac,
    rng: SimRng,
    caps: Vec<AnalogSample>,
}

impl<'p> MacEngine<'p> {
    /// Creates instance `instance` under the configured seed. Static DAC
    /// mismatch, when enabled, is sampled here and stays fixed for the
    /// lifetime of the engine.
    pub fn new(params: &'p CircuitParams, instance: u64) -> Self {
        let mut rng = instance_stream(params.seed, instance);
        let dac = Dac::new(params, &mut rng);
        MacEngine {
            params,
            dac,
            rng,
            caps: Vec::new(),
        }
    }

    /// Charges every cell's capacitor from its input pulse window and
    /// weight current. Returns the sampled voltages.
    pub fn run_multiplication_phase(&mut self, ops: &VectorOperands) -> &[AnalogSample] {
        self.caps.clear();
        for (i, (&x, &w)) in ops.inputs().iter().zip(ops.weights()).enumerate() {
            let window = pulse_train(x, self.params.t_clk_pulse);
            let current = self.dac.current(w);
            let sample = analog::integrate(&current, &window, self.params, &mut self.rng, i);
            self.caps.push(sample);
        }
        &self.caps
    }

    /// Runs all three phases under the given architecture.
    pub fn run(
        &mut self,
        arch: &dyn MacArchitecture,
        ops: &VectorOperands,
    ) -> Result<MacReadout, DelayError> {
        self.run_impl(arch, ops, None)
    }

    /// Like [`run`](Self::run), also returning per-cell and per-phase trace
    /// records.
    pub fn run_traced(
        &mut self,
        arch: &dyn MacArchitecture,
        ops: &VectorOperands,
    ) -> Result<(MacReadout, RunTrace), DelayError> {
        let mut trace = RunTrace::default();
        let readout = self.run_impl(arch, ops, Some(&mut trace))?;
        Ok((readout, trace))
    }

    pub fn run_cascade(&mut self, ops: &VectorOperands) -> Result<MacReadout, DelayError> {
        self.run(&crate::arch::CASCADE, ops)
    }

    pub fn run_counter(&mut self, ops: &VectorOperands) -> Result<MacReadout, DelayError> {
        self.run(&crate::arch::COUNTER, ops)
    }

    /// Capacitor state after the last phase; all zero once a run completes.
    pub fn capacitor_state(&self) -> &[AnalogSample] {
        &self.caps
    }

    fn run_impl(
        &mut self,
        arch: &dyn MacArchitecture,
        ops: &VectorOperands,
        trace: Option<&mut RunTrace>,
    ) -> Result<MacReadout, DelayError> {
        self.run_multiplication_phase(ops);

        // Supply energy drawn by the current sources over their pulse
        // windows, while the caps still hold this run's currents.
        let mut analog_energy = 0.0;
        for (&x, &w) in ops.inputs().iter().zip(ops.weights()) {
            let window = pulse_train(x, self.params.t_clk_pulse);
            analog_energy += self.dac.current(w).current * self.params.v_dd * window.duration;
        }

        let readout = arch.readout(&self.caps, self.params)?;
        let latency = mult_phase_duration(self.params)
            + readout.accumulation_time
            + reset_duration(self.params);
        let energy = analog_energy + self.params.digital_power() * latency;
        let saturated_cells: Vec<usize> = self
            .caps
            .iter()
            .filter(|s| s.saturated)
            .map(|s| s.cell_index)
            .collect();

        if let Some(trace) = trace {
            for s in &self.caps {
                let d = delay::cell_delay(s.v_mac, self.params)?;
                trace.cells.push(CellTrace {
                    cell_index: s.cell_index,
                    v_mac: s.v_mac,
                    t_d: d.t_d,
                    d_i: (d.t_d / self.params.t_clk_tdc).floor() as u64,
                });
            }
            let t_mult = mult_phase_duration(self.params);
            let t_acc_end = t_mult + readout.accumulation_time;
            trace.phases = vec![
                PhaseSpan {
                    phase: "multiplication",
                    start: 0.0,
                    end: t_mult,
                },
                PhaseSpan {
                    phase: "accumulation",
                    start: t_mult,
                    end: t_acc_end,
                },
                PhaseSpan {
                    phase: "reset",
                    start: t_acc_end,
                    end: t_acc_end + reset_duration(self.params),
                },
            ];
        }

        analog::reset_phase(&mut self.caps);

        Ok(MacReadout {
            architecture: arch.name(),
            d_out: readout.d_out,
            t_acc: readout.t_acc,
            oracle: oracle_mac(ops),
            latency,
            energy,
            saturated_cells,
        })
    }
}

//! Cycle-accurate model of the N-pulse generator control block.
//!
//! The block is a 4-bit counter, a 4-bit input register, and a comparator.
//! After reset the match output is held high; the first clock edge latches
//! the input code and arms the comparator (the valid flag prevents a false
//! `0 == 0` match on the reset cycle). While enabled and matched-high, the
//! counter advances once per edge; when it reaches the latched code the
//! match output falls and stays low until the next reset. The high time of
//! the match output is therefore `code` enabled cycles.

use std::io::{self, Write};

use crate::config::Code4;

/// Register state of the pulse generator, advanced one clock edge at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseGenState {
    pub counter: u8,
    pub reg_code: u8,
    pub match_out: bool,
    pub cmp_valid: bool,
    pub cycle_index: u64,
}

/// State after an active reset: counter and register cleared, match held
/// high, comparator disarmed.
pub fn reset() -> PulseGenState {
    PulseGenState {
        counter: 0,
        reg_code: 0,
        match_out: true,
        cmp_valid: false,
        cycle_index: 0,
    }
}

/// One rising clock edge.
///
/// The first edge after reset latches `code` into the register and arms the
/// comparator without counting. On later edges the counter increments while
/// `enable` is high and the match output is still high; a low `enable`
/// freezes the counter without resetting it. Once the counter equals the
/// latched code the match output latches low.
pub fn step(state: &PulseGenState, enable: bool, code: Code4) -> PulseGenState {
    let mut next = *state;
    next.cycle_index += 1;
    if !next.cmp_valid {
        next.reg_code = code.value();
        next.cmp_valid = true;
    } else if next.match_out && enable {
        next.counter = (next.counter + 1) & 0xF;
    }
    if next.cmp_valid && next.match_out && next.counter == next.reg_code {
        next.match_out = false;
    }
    next
}

/// Steps the FSM with enable held high and returns the number of enabled
/// cycles for which the match output gated the datapath (the cycles on
/// which the counter advanced).
pub fn high_cycles(code: Code4) -> u32 {
    let mut state = reset();
    let mut cycles = 0;
    // 16 codes plus the latch edge bound the run length.
    for _ in 0..32 {
        let before = state;
        state = step(&state, true, code);
        if before.cmp_valid && before.match_out {
            cycles += 1;
        }
        if !state.match_out {
            break;
        }
    }
    cycles
}

/// A pulse window of `n_pulses` unit pulses of width `t_unit` each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrain {
    pub n_pulses: u32,
    pub t_unit: f64,
    pub duration: f64,
}

/// Closed-form pulse window for a code: `code` unit pulses of width `t_clk`.
///
/// `t_clk` must be positive. The duration equals the high time measured by
/// exhaustively stepping the FSM, which the test suite checks for all codes.
pub fn pulse_train(code: Code4, t_clk: f64) -> PulseTrain {
    debug_assert!(t_clk > 0.0, "pulse clock period must be positive");
    let n_pulses = u32::from(code.value());
    PulseTrain {
        n_pulses,
        t_unit: t_clk,
        duration: f64::from(n_pulses) * t_clk,
    }
}

/// Dumps one CSV row per cycle (cycle, enable, counter, match_out) for
/// golden-trace comparison against RTL simulation.
pub fn write_waveform_csv<W: Write>(out: &mut W, code: Code4, enables: &[bool]) -> io::Result<()> {
    writeln!(out, "cycle,enable,counter,match_out")?;
    let mut state = reset();
    for &enable in enables {
        state = step(&state, enable, code);
        writeln!(
            out,
            "{},{},{},{}",
            state.cycle_index,
            u8::from(enable),
            state.counter,
            u8::from(state.match_out)
        )?;
    }
    Ok(())
}

//! Ground truth and scoring.
//!
//! The exact integer oracle, transfer-curve generation over operand space,
//! best-fit linearity metrics, quantization-noise statistics, and the
//! power/energy/efficiency model live here. Transfer curves fan out over a
//! rayon pool; every record gets its own RNG stream keyed by record index,
//! so results are identical for any worker count.

use rand::Rng;
use rayon::prelude::*;

use crate::arch::MacArchitecture;
use crate::config::{CircuitParams, Code4, VectorOperands};
use crate::delay::DelayError;
use crate::engine::{latency_model, MacEngine};
use crate::rng::instance_stream;

/// Reserved RNG stream for drawing operand samples, distinct from every
/// per-record engine stream.
const OPERAND_STREAM: u64 = u64::MAX;

/// Exact integer dot product of the operand vectors.
pub fn oracle_mac(ops: &VectorOperands) -> u64 {
    ops.inputs()
        .iter()
        .zip(ops.weights())
        .map(|(&x, &w)| u64::from(x.value()) * u64::from(w.value()))
        .sum()
}

/// One sweep point pairing the oracle with the measured output.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub oracle: u64,
    pub d_out: u64,
    /// Pre-quantization accumulated delay (s).
    pub t_acc: f64,
    /// Architecture registry name.
    pub arch: &'static str,
    pub operands: VectorOperands,
    /// True when any cell saturated during the run.
    pub saturated: bool,
}

/// How to sample the operand space for a transfer curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Every operand combination. Only for vector lengths 1 and 2.
    Exhaustive,
    /// `count` uniformly random operand vectors drawn from `seed`.
    Random { count: usize, seed: u64 },
    /// `inputs = weights = [c; n]` for `c = 0..=15`.
    Diagonal,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("exhaustive sweep limited to n <= 2 (requested n = {0})")]
    ExhaustiveTooLarge(usize),
    #[error("linearity fit needs at least 3 distinct oracle values")]
    DegenerateFit,
    #[error(transparent)]
    Delay(#[from] DelayError),
}

fn operand_list(n: usize, sampling: Sampling) -> Result<Vec<VectorOperands>, MetricsError> {
    match sampling {
        Sampling::Exhaustive => {
            if n > 2 {
                return Err(MetricsError::ExhaustiveTooLarge(n));
            }
            let codes: Vec<u8> = (0..=Code4::MAX).collect();
            let mut vectors: Vec<Vec<u8>> = vec![Vec::new()];
            for _ in 0..n {
                vectors = vectors
                    .into_iter()
                    .flat_map(|v| {
                        codes.iter().map(move |&c| {
                            let mut next = v.clone();
                            next.push(c);
                            next
                        })
                    })
                    .collect();
            }
            let mut out = Vec::with_capacity(vectors.len() * vectors.len());
            for inputs in &vectors {
                for weights in &vectors {
                    out.push(
                        VectorOperands::from_u8(inputs, weights)
                            .expect("codes enumerated in range"),
                    );
                }
            }
            Ok(out)
        }
        Sampling::Random { count, seed } => {
            let mut rng = instance_stream(seed, OPERAND_STREAM);
            Ok((0..count)
                .map(|_| VectorOperands::random(n, &mut rng).expect("n >= 1"))
                .collect())
        }
        Sampling::Diagonal => Ok(Code4::all()
            .map(|c| VectorOperands::diagonal(c, n).expect("n >= 1"))
            .collect()),
    }
}

/// Runs one simulated MAC per sampled operand vector and records the
/// transfer points. Record `i` runs on engine instance `i`, so the curve is
/// reproducible for a fixed seed regardless of how many workers execute it.
pub fn transfer_curve(
    arch: &dyn MacArchitecture,
    params: &CircuitParams,
    n: usize,
    sampling: Sampling,
) -> Result<Vec<TransferRecord>, MetricsError> {
    let operands = operand_list(n, sampling)?;
    let records: Result<Vec<TransferRecord>, DelayError> = operands
        .into_par_iter()
        .enumerate()
        .map(|(i, ops)| {
            let mut engine = MacEngine::new(params, i as u64);
            let r = engine.run(arch, &ops)?;
            Ok(TransferRecord {
                oracle: r.oracle,
                d_out: r.d_out,
                t_acc: r.t_acc,
                arch: r.architecture,
                saturated: !r.saturated_cells.is_empty(),
                operands: ops,
            })
        })
        .collect();
    Ok(records?)
}

/// Best-fit linearity summary of a transfer curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearityReport {
    /// Fitted gain (counts per oracle unit).
    pub gain: f64,
    /// Fitted offset (counts).
    pub offset: f64,
    /// Per-record deviation from the fit (counts), in record order.
    pub inl: Vec<f64>,
    /// Largest absolute deviation (counts).
    pub inl_max: f64,
    /// Root-mean-square deviation (counts).
    pub rms_error: f64,
    pub r_squared: f64,
}

/// Least-squares affine fit of `d_out` against the oracle, with the
/// deviation from the fit reported per record.
pub fn linearity_metrics(records: &[TransferRecord]) -> Result<LinearityReport, MetricsError> {
    let mut distinct: Vec<u64> = records.iter().map(|r| r.oracle).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(MetricsError::DegenerateFit);
    }

    let n = records.len() as f64;
    let mean_x = records.iter().map(|r| r.oracle as f64).sum::<f64>() / n;
    let mean_y = records.iter().map(|r| r.d_out as f64).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for r in records {
        let dx = r.oracle as f64 - mean_x;
        sxx += dx * dx;
        sxy += dx * (r.d_out as f64 - mean_y);
    }
    let gain = sxy / sxx;
    let offset = mean_y - gain * mean_x;

    let inl: Vec<f64> = records
        .iter()
        .map(|r| r.d_out as f64 - (gain * r.oracle as f64 + offset))
        .collect();
    let inl_max = inl.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let rms_error = (inl.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let ss_res: f64 = inl.iter().map(|e| e * e).sum();
    let ss_tot: f64 = records
        .iter()
        .map(|r| (r.d_out as f64 - mean_y).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };

    Ok(LinearityReport {
        gain,
        offset,
        inl,
        inl_max,
        rms_error,
        r_squared,
    })
}

/// Quantization-noise measurement against the uniform-error prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStats {
    pub sample_count: usize,
    /// Variance of the per-trial total quantization error (s²).
    pub empirical_variance: f64,
    /// Predicted variance `n * T² / 12` (s²).
    pub predicted_variance: f64,
    pub ratio: f64,
}

/// Per-trial total quantization error of `n_cells` independently digitized
/// random delays. Delays are drawn uniformly over a span of many counter
/// periods so the fractional parts are uniform.
pub fn quantization_errors(
    n_cells: usize,
    params: &CircuitParams,
    trials: usize,
    rng: &mut crate::rng::SimRng,
) -> Vec<f64> {
    let t = params.t_clk_tdc;
    let span = 1024.0 * t;
    (0..trials)
        .map(|_| {
            (0..n_cells)
                .map(|_| {
                    let delay = rng.gen_range(0.0..span);
                    delay - (delay / t).floor() * t
                })
                .sum()
        })
        .collect()
}

/// Variance of the recorded errors about their mean, against the uniform
/// prediction `n * T² / 12`.
pub fn stats_from_errors(errors: &[f64], n_cells: usize, params: &CircuitParams) -> NoiseStats {
    let trials = errors.len();
    let t = params.t_clk_tdc;
    let mean = errors.iter().sum::<f64>() / trials as f64;
    let empirical_variance =
        errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let predicted_variance = n_cells as f64 * t * t / 12.0;
    NoiseStats {
        sample_count: trials,
        empirical_variance,
        predicted_variance,
        ratio: empirical_variance / predicted_variance,
    }
}

/// Draws `trials` random delay vectors of `n_cells` delays, digitizes each
/// delay with the readout counter clock, and compares the variance of the
/// summed quantization error against `n * T² / 12`. Intended for
/// `trials >= 1000`.
pub fn quantization_stats(
    n_cells: usize,
    params: &CircuitParams,
    trials: usize,
    rng: &mut crate::rng::SimRng,
) -> NoiseStats {
    let errors = quantization_errors(n_cells, params, trials, rng);
    stats_from_errors(&errors, n_cells, params)
}

/// Which operand statistics the analog power estimate assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandStats {
    /// Codes uniform over 0..=15, expectation 7.5 per operand.
    Average,
    /// All codes at full scale.
    WorstCase,
}

/// Power, energy, and efficiency summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// Mean supply power of the DAC current sources over one operation (W).
    pub p_analog: f64,
    /// Dynamic power of the digital control and counter logic (W).
    pub p_digital: f64,
    /// Total power; either the model sum or a calibrated override (W).
    pub p_total: f64,
    /// Energy per MAC operation at the stated operation rate (J).
    pub energy_per_mac: f64,
    /// Operations counted per cycle; the convention behind the TOPS figure.
    pub ops_per_cycle: u32,
    /// Tera-operations per second per watt under that convention.
    pub tops_per_watt: f64,
    /// True when `p_total` was forced rather than derived from the model.
    pub calibrated: bool,
}

/// Builds the energy report for `n` cells at operation rate `f_op`.
///
/// `calibrate_p_total` forces the total power (the efficiency is then
/// back-solved from the forced figure and flagged as calibrated).
pub fn energy_report(
    params: &CircuitParams,
    arch: &dyn MacArchitecture,
    n: usize,
    f_op: f64,
    ops_per_cycle: u32,
    operand_stats: OperandStats,
    calibrate_p_total: Option<f64>,
) -> EnergyReport {
    debug_assert!(f_op > 0.0);
    let mean_code = match operand_stats {
        OperandStats::Average => 7.5,
        OperandStats::WorstCase => f64::from(Code4::MAX),
    };
    // Supply energy of the current sources over their pulse windows,
    // averaged over the operand statistics, spread over the operation time.
    let t_op = latency_model(arch, params, n);
    let energy_analog =
        n as f64 * params.i_lsb * mean_code * params.v_dd * params.t_clk_pulse * mean_code;
    let p_analog = energy_analog / t_op;
    let p_digital = params.digital_power();
    let p_total = calibrate_p_total.unwrap_or(p_analog + p_digital);
    let tops_per_watt = ops_per_cycle as f64 * f_op / p_total / 1e12;
    EnergyReport {
        p_analog,
        p_digital,
        p_total,
        energy_per_mac: p_total / f_op,
        ops_per_cycle,
        tops_per_watt,
        calibrated: calibrate_p_total.is_some(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{CASCADE, COUNTER};
    use crate::config::default_params;
    use approx::assert_relative_eq;

    fn ops(inputs: &[u8], weights: &[u8]) -> VectorOperands {
        VectorOperands::from_u8(inputs, weights).unwrap()
    }

    #[test]
    fn oracle_values() {
        assert_eq!(oracle_mac(&ops(&[15; 4], &[15; 4])), 900);
        assert_eq!(oracle_mac(&ops(&[0; 4], &[0; 4])), 0);
        assert_eq!(oracle_mac(&ops(&[7], &[7])), 49);
        assert_eq!(oracle_mac(&ops(&[7, 3, 15, 0], &[2, 10, 1, 5])), 59);
    }

    #[test]
    fn oracle_is_bilinear() {
        // Adding weight vectors adds oracle values for a fixed input.
        let x = [3u8, 9, 12, 1];
        let a = [2u8, 5, 0, 7];
        let b = [1u8, 4, 3, 8];
        let sum: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
        assert_eq!(
            oracle_mac(&ops(&x, &sum)),
            oracle_mac(&ops(&x, &a)) + oracle_mac(&ops(&x, &b))
        );
    }

    #[test]
    fn exhaustive_n1_has_256_records() {
        let p = default_params();
        let records = transfer_curve(&CASCADE, &p, 1, Sampling::Exhaustive).unwrap();
        assert_eq!(records.len(), 256);
    }

    #[test]
    fn exhaustive_rejects_large_n() {
        let p = default_params();
        assert!(matches!(
            transfer_curve(&CASCADE, &p, 3, Sampling::Exhaustive),
            Err(MetricsError::ExhaustiveTooLarge(3))
        ));
    }

    #[test]
    fn diagonal_is_sixteen_monotone_points() {
        let p = default_params();
        let records = transfer_curve(&COUNTER, &p, 4, Sampling::Diagonal).unwrap();
        assert_eq!(records.len(), 16);
        assert_eq!(records[0].oracle, 0);
        assert_eq!(records[15].oracle, 900);
        for w in records.windows(2) {
            assert!(w[1].d_out >= w[0].d_out);
        }
    }

    #[test]
    fn random_sampling_is_reproducible() {
        let p = default_params();
        let s = Sampling::Random {
            count: 64,
            seed: 11,
        };
        let a = transfer_curve(&CASCADE, &p, 4, s).unwrap();
        let b = transfer_curve(&CASCADE, &p, 4, s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn affine_records_fit_perfectly() {
        let records: Vec<TransferRecord> = (0..20)
            .map(|i| TransferRecord {
                oracle: i,
                d_out: 3 * i + 7,
                t_acc: 0.0,
                arch: "cascade",
                operands: ops(&[0], &[0]),
                saturated: false,
            })
            .collect();
        let fit = linearity_metrics(&records).unwrap();
        assert_relative_eq!(fit.gain, 3.0, max_relative = 1e-12);
        assert_relative_eq!(fit.offset, 7.0, max_relative = 1e-9);
        assert!(fit.inl_max < 1e-9);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_fit_is_an_error() {
        let records: Vec<TransferRecord> = (0..5)
            .map(|_| TransferRecord {
                oracle: 10,
                d_out: 3,
                t_acc: 0.0,
                arch: "counter",
                operands: ops(&[1], &[1]),
                saturated: false,
            })
            .collect();
        assert!(matches!(
            linearity_metrics(&records),
            Err(MetricsError::DegenerateFit)
        ));
    }

    #[test]
    fn counter_inl_stays_within_cell_count_for_affine_delay() {
        // With a linear delay model and a fine counter clock, only per-cell
        // flooring deviates from the fit: at most one count per cell.
        let mut p = default_params();
        p.delay_model = crate::config::DelayModel::Polynomial {
            t0: 2e-9,
            alpha: 6.7e-9,
            beta: 0.0,
            gamma: 0.0,
        };
        p.t_clk_tdc = 0.05e-9;
        let records = transfer_curve(&COUNTER, &p, 4, Sampling::Diagonal).unwrap();
        let fit = linearity_metrics(&records).unwrap();
        assert!(fit.inl_max <= 4.0, "inl_max = {}", fit.inl_max);
    }

    #[test]
    fn quantization_variance_follows_the_uniform_law() {
        let p = default_params();
        let mut rng = instance_stream(p.seed, 0);
        let stats = quantization_stats(1, &p, 100_000, &mut rng);
        assert!(
            (stats.ratio - 1.0).abs() < 0.05,
            "N=1 ratio {}",
            stats.ratio
        );
        let stats4 = quantization_stats(4, &p, 100_000, &mut rng);
        assert!((stats4.ratio - 1.0).abs() < 0.10);
        // Halving the clock period quarters the variance.
        let mut fine = p.clone();
        fine.t_clk_tdc = p.t_clk_tdc / 2.0;
        let stats_fine = quantization_stats(4, &fine, 100_000, &mut rng);
        let measured_scale = stats_fine.empirical_variance / stats4.empirical_variance;
        assert!((measured_scale - 0.25).abs() < 0.025, "{measured_scale}");
    }

    #[test]
    fn counter_records_never_over_count() {
        let p = default_params();
        let s = Sampling::Random {
            count: 500,
            seed: 4,
        };
        let records = transfer_curve(&COUNTER, &p, 4, s).unwrap();
        for r in &records {
            let quantized = r.d_out as f64 * p.t_clk_tdc;
            assert!(quantized <= r.t_acc);
            assert!(r.t_acc - quantized < 4.0 * p.t_clk_tdc);
        }
    }

    #[test]
    fn digital_power_scales_with_counter_clock_rate() {
        let p = default_params();
        let mut fine = p.clone();
        fine.t_clk_tdc = p.t_clk_tdc / 8.0;
        assert_relative_eq!(
            fine.digital_power(),
            8.0 * p.digital_power(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn digital_power_spot_check() {
        // alpha 0.1, 1 pF, 1 V, 40 MHz gives 4 uW.
        let mut p = default_params();
        p.p_digital.alpha_sw = 0.1;
        p.p_digital.c_dig = 1e-12;
        p.v_dd = 1.0;
        p.t_clk_tdc = 1.0 / 40e6;
        assert_relative_eq!(p.digital_power(), 4e-6, max_relative = 1e-12);
    }

    #[test]
    fn calibrated_efficiency_back_solves() {
        let p = default_params();
        let report = energy_report(&p, &CASCADE, 4, 40e6, 8, OperandStats::Average, Some(42e-6));
        assert!(report.calibrated);
        assert!((report.tops_per_watt - 7.62).abs() / 7.62 < 0.01);
        // Doubling the power halves the efficiency.
        let double = energy_report(&p, &CASCADE, 4, 40e6, 8, OperandStats::Average, Some(84e-6));
        assert_relative_eq!(
            double.tops_per_watt,
            report.tops_per_watt / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn model_report_itemizes_analog_and_digital() {
        let p = default_params();
        let report = energy_report(&p, &COUNTER, 4, 40e6, 8, OperandStats::Average, None);
        assert!(!report.calibrated);
        assert!(report.p_analog > 0.0);
        assert_relative_eq!(report.p_digital, p.digital_power(), max_relative = 1e-12);
        assert_relative_eq!(
            report.p_total,
            report.p_analog + report.p_digital,
            max_relative = 1e-12
        );
        // Worst-case operands draw more analog power than the average case.
        let worst = energy_report(&p, &COUNTER, 4, 40e6, 8, OperandStats::WorstCase, None);
        assert!(worst.p_analog > report.p_analog);
    }
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Every tolerance is pinned in the assertions below. Criterion 6 asserts
//! the cross-architecture linearity ordering exactly as specified; under
//! the default separable delay model both architectures share the same
//! pre-quantization transfer curve while per-cell flooring adds more
//! quantization error to the counter path, so its first clause is expected
//! to fail. The assertion is kept as stated rather than weakened.

use std::process::Command;

use tdmac_sim::analog::{self, Dac};
use tdmac_sim::arch::{CASCADE, COUNTER};
use tdmac_sim::config::{default_params, Code4, DelayModel, VectorOperands};
use tdmac_sim::delay::cascade_delay;
use tdmac_sim::engine::{latency_model, MacEngine};
use tdmac_sim::metrics::{
    energy_report, linearity_metrics, oracle_mac, quantization_stats, transfer_curve, OperandStats,
    Sampling,
};
use tdmac_sim::pulsegen;
use tdmac_sim::rng::instance_stream;

fn outcome(criterion: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion}: {detail}");
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn criterion_01_max_integration_window() {
    let t_max = analog::max_on_time(0.3, 200e-15, 165e-9);
    let pass = (t_max - 363.6e-9).abs() <= 1e-9;
    outcome(
        "criterion 1 (max integration window)",
        pass,
        &format!(
            "T_max = {:.4} ns, expected 363.6 ns within 1 ns",
            t_max * 1e9
        ),
    );
}

#[test]
fn criterion_02_pulse_generator_exhaustive() {
    let mut worst: Option<(u8, u32)> = None;
    for code in Code4::all() {
        let cycles = pulsegen::high_cycles(code);
        if cycles != u32::from(code.value()) {
            worst = Some((code.value(), cycles));
        }
    }
    // The code-7 case verbatim: seven pulses.
    let seven = pulsegen::high_cycles(Code4::new(7).unwrap());
    let pass = worst.is_none() && seven == 7;
    outcome(
        "criterion 2 (pulse generator exhaustive)",
        pass,
        &format!("all 16 codes match closed form; code 7 gives {seven} pulses"),
    );
}

#[test]
fn criterion_03_bilinearity_oracle_equivalence() {
    let params = default_params();
    let dac = Dac::ideal(&params);
    let unit = params.unit_v_mac();
    let mut rng = instance_stream(params.seed, 0);
    let mut worst_rel: f64 = 0.0;
    for w in Code4::all() {
        for x in Code4::all() {
            let window = pulsegen::pulse_train(x, params.t_clk_pulse);
            let sample = analog::integrate(&dac.current(w), &window, &params, &mut rng, 0);
            let expected = f64::from(w.value()) * f64::from(x.value()) * unit;
            if expected == 0.0 {
                assert_eq!(sample.v_mac, 0.0, "zero product must integrate to zero");
            } else {
                worst_rel = worst_rel.max((sample.v_mac - expected).abs() / expected);
            }
        }
    }
    let pass = worst_rel < 1e-12;
    outcome(
        "criterion 3 (bilinearity over 256 pairs)",
        pass,
        &format!("worst relative error {worst_rel:.3e}, bound 1e-12"),
    );
}

#[test]
fn criterion_04_quantization_noise_law() {
    let params = default_params();
    let mut pass = true;
    let mut detail = String::new();
    for (i, (n, tol)) in [(1usize, 0.05), (4, 0.10), (8, 0.10), (16, 0.10)]
        .iter()
        .enumerate()
    {
        let mut rng = instance_stream(params.seed, i as u64);
        let stats = quantization_stats(*n, &params, 100_000, &mut rng);
        let ok = (stats.ratio - 1.0).abs() < *tol;
        pass &= ok;
        detail.push_str(&format!("N={n}: ratio {:.4} (tol {tol}); ", stats.ratio));
    }
    outcome("criterion 4 (quantization noise law)", pass, &detail);
}

#[test]
fn criterion_05_ktc_noise_monte_carlo() {
    let mut params = default_params();
    params.noise_enabled = true;
    let dac = Dac::ideal(&params);
    let mid = Code4::new(8).unwrap();
    let window = pulsegen::pulse_train(mid, params.t_clk_pulse);
    let current = dac.current(mid);
    let mut rng = instance_stream(params.seed, 0);
    let n = 100_000;
    let samples: Vec<f64> = (0..n)
        .map(|_| analog::integrate(&current, &window, &params, &mut rng, 0).v_mac)
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let pass = (std - 143.9e-6).abs() / 143.9e-6 < 0.02;
    outcome(
        "criterion 5 (kT/C Monte Carlo)",
        pass,
        &format!(
            "observed sigma {:.2} uV, expected 143.9 uV within 2%",
            std * 1e6
        ),
    );
}

#[test]
fn criterion_06_linearity_ordering() {
    let params = default_params();
    let n = 4;
    let cascade =
        linearity_metrics(&transfer_curve(&CASCADE, &params, n, Sampling::Diagonal).unwrap())
            .unwrap();
    let counter =
        linearity_metrics(&transfer_curve(&COUNTER, &params, n, Sampling::Diagonal).unwrap())
            .unwrap();

    // Clause: the cascade INL envelope worsens across the top half of the
    // code range (running maximum never shrinks and ends above its start,
    // with the top-half worst case above the bottom-half worst case).
    let abs_inl: Vec<f64> = cascade.inl.iter().map(|e| e.abs()).collect();
    let (bottom, top) = abs_inl.split_at(8);
    let mut running = 0.0f64;
    let mut envelope_monotone = true;
    let mut tops = Vec::new();
    for &e in top {
        let next = running.max(e);
        if next < running {
            envelope_monotone = false;
        }
        running = next;
        tops.push(next);
    }
    let bottom_max = bottom.iter().fold(0.0f64, |m, &e| m.max(e));
    let top_max = top.iter().fold(0.0f64, |m, &e| m.max(e));
    let worsening = envelope_monotone && tops[tops.len() - 1] > tops[0] && top_max > bottom_max;

    let ordering = cascade.inl_max > counter.inl_max;
    let counter_bounded = counter.inl_max <= n as f64;

    let detail = format!(
        "inl_max cascade {:.4} vs counter {:.4}; cascade top-half max {:.4} vs bottom {:.4}; \
         counter bound {} counts",
        cascade.inl_max, counter.inl_max, top_max, bottom_max, n
    );
    println!(
        "[{}] criterion 6a (cascade INL exceeds counter INL): {detail}",
        if ordering { "PASS" } else { "FAIL" }
    );
    println!(
        "[{}] criterion 6b (cascade INL worsens over top half): {detail}",
        if worsening { "PASS" } else { "FAIL" }
    );
    println!(
        "[{}] criterion 6c (counter INL within N counts): {detail}",
        if counter_bounded { "PASS" } else { "FAIL" }
    );
    assert!(worsening, "criterion 6b failed: {detail}");
    assert!(counter_bounded, "criterion 6c failed: {detail}");
    assert!(ordering, "criterion 6a failed: {detail}");
}

#[test]
fn criterion_07_distortion_decomposition() {
    let (t0, alpha, beta, gamma) = (2e-9, 6.7e-9, 1.5e-8, 6e-8);
    let mut params = default_params();
    params.delay_model = DelayModel::Polynomial {
        t0,
        alpha,
        beta,
        gamma,
    };
    let mut rng = instance_stream(3, 0);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..10_000 {
        let ops = VectorOperands::random(4, &mut rng).unwrap();
        let mut engine = MacEngine::new(&params, 0);
        let samples = engine.run_multiplication_phase(&ops).to_vec();
        let total = cascade_delay(&samples, &params).unwrap();
        let sum_v: f64 = samples.iter().map(|s| s.v_mac).sum();
        let linear = 4.0 * t0 + alpha * sum_v;
        let predicted = beta * samples.iter().map(|s| s.v_mac * s.v_mac).sum::<f64>()
            + gamma * samples.iter().map(|s| s.v_mac.powi(3)).sum::<f64>();
        worst_rel = worst_rel.max(((total - linear) - predicted).abs() / total);
    }
    let pass = worst_rel < 1e-15;
    outcome(
        "criterion 7 (distortion decomposition)",
        pass,
        &format!("worst deviation {worst_rel:.3e} of the accumulated delay, bound 1e-15"),
    );
}

#[test]
fn criterion_08_latency_ordering() {
    let params = default_params();
    let mut ordering = true;
    for n in 1..=64 {
        if latency_model(&COUNTER, &params, n) < latency_model(&CASCADE, &params, n) {
            ordering = false;
        }
    }
    let mut affine = true;
    for n in 1..=63 {
        let slope = latency_model(&COUNTER, &params, n + 1) - latency_model(&COUNTER, &params, n);
        if (slope - params.t_meas).abs() > 1e-9 * params.t_meas {
            affine = false;
        }
    }
    let pass = ordering && affine;
    outcome(
        "criterion 8 (latency ordering)",
        pass,
        &format!(
            "counter >= cascade for N in 1..=64: {ordering}; counter slope = t_meas: {affine}"
        ),
    );
}

#[test]
fn criterion_09_efficiency_calibration() {
    let params = default_params();
    let report = energy_report(
        &params,
        &CASCADE,
        4,
        40e6,
        8,
        OperandStats::Average,
        Some(42e-6),
    );
    let pass = report.calibrated && (report.tops_per_watt - 7.62).abs() / 7.62 < 0.01;
    outcome(
        "criterion 9 (efficiency calibration)",
        pass,
        &format!(
            "{:.4} TOPS/W at 42 uW, 40 MHz, 8 ops/cycle (back-solved convention flagged)",
            report.tops_per_watt
        ),
    );
}

#[test]
fn criterion_10_compare_determinism() {
    let bin = env!("CARGO_BIN_EXE_tdmac-sim");
    let base = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let dir = base.path().join(name);
        let status = Command::new(bin)
            .args([
                "compare",
                "--sampling",
                "random",
                "--samples",
                "400",
                "--n",
                "4",
                "--seed",
                "7",
                "--noise",
                "true",
                "--workers",
                workers,
                "--output-dir",
            ])
            .arg(&dir)
            .status()
            .unwrap();
        assert!(status.success());
        let mut bytes = Vec::new();
        for file in [
            "transfer_cascade.csv",
            "transfer_counter.csv",
            "linearity_cascade.csv",
            "linearity_counter.csv",
        ] {
            bytes.extend(std::fs::read(dir.join(file)).unwrap());
        }
        bytes
    };
    let a = run("w1_first", "1");
    let b = run("w1_second", "1");
    let c = run("w8", "8");
    let pass = a == b && a == c;
    outcome(
        "criterion 10 (compare determinism)",
        pass,
        "CSV bytes identical across reruns and across worker counts 1 and 8",
    );
}

#[test]
fn criterion_11_exhaustive_cross_architecture_bound() {
    let mut params = default_params();
    params.delay_model = DelayModel::Polynomial {
        t0: 2e-9,
        alpha: 6.7e-9,
        beta: 0.0,
        gamma: 0.0,
    };
    let cascade = transfer_curve(&CASCADE, &params, 2, Sampling::Exhaustive).unwrap();
    let counter = transfer_curve(&COUNTER, &params, 2, Sampling::Exhaustive).unwrap();
    assert_eq!(cascade.len(), 65_536);
    let mut worst = 0i64;
    for (a, b) in cascade.iter().zip(&counter) {
        assert_eq!(a.operands, b.operands);
        assert_eq!(a.oracle, oracle_mac(&a.operands));
        worst = worst.max((b.d_out as i64 - a.d_out as i64).abs());
    }
    let pass = worst <= 2;
    outcome(
        "criterion 11 (exhaustive N=2 bound)",
        pass,
        &format!("worst |counter - cascade| = {worst} counts over 16^4 operand pairs, bound 2"),
    );
}

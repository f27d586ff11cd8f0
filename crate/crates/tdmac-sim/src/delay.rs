//! Voltage-to-time conversion through current-starved delay cells.
//!
//! One cell is a chain of inverters starved by a PMOS device whose gate sees
//! the multiplication voltage; raising the control voltage cuts the starving
//! current quadratically and stretches the propagation delay. A cascade of
//! cells sums per-cell delays. `fit_polynomial` extracts the cubic expansion
//! of the physical cell delay over a voltage range so the distortion terms
//! can be analyzed in closed form.

use crate::analog::AnalogSample;
use crate::config::{CircuitParams, DelayModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DelayError {
    #[error("starving device cut off at v_mac = {v_mac} V{}", cell_suffix(.cell_index))]
    Cutoff {
        v_mac: f64,
        cell_index: Option<usize>,
    },
    #[error("invalid fit range: {0}")]
    FitRange(String),
}

fn cell_suffix(cell: &Option<usize>) -> String {
    match cell {
        Some(i) => format!(" (cell {i})"),
        None => String::new(),
    }
}

impl DelayError {
    fn with_cell(self, index: usize) -> Self {
        match self {
            DelayError::Cutoff { v_mac, .. } => DelayError::Cutoff {
                v_mac,
                cell_index: Some(index),
            },
            other => other,
        }
    }
}

/// One cell's propagation delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySample {
    /// Propagation delay (s).
    pub t_d: f64,
    pub cell_index: usize,
    /// Control voltage that produced the delay (V).
    pub v_control: f64,
}

/// Saturation current of the PMOS starving device,
/// `k * (v_dd - v_mac - v_tp)^2`.
///
/// Errors when the gate overdrive collapses (`v_dd - v_mac - v_tp <= 0`):
/// the device is off and the cell no longer propagates.
pub fn starved_current(v_mac: f64, k_factor: f64, v_tp: f64, v_dd: f64) -> Result<f64, DelayError> {
    let overdrive = (v_dd - v_mac) - v_tp;
    if overdrive <= 0.0 {
        return Err(DelayError::Cutoff {
            v_mac,
            cell_index: None,
        });
    }
    Ok(k_factor * (overdrive * overdrive))
}

/// Propagation delay of one delay cell at control voltage `v_mac`.
pub fn cell_delay(v_mac: f64, params: &CircuitParams) -> Result<DelaySample, DelayError> {
    let t_d = match &params.delay_model {
        DelayModel::Polynomial {
            t0,
            alpha,
            beta,
            gamma,
        } => t0 + v_mac * (alpha + v_mac * (beta + v_mac * gamma)),
        DelayModel::PmosStarved {
            k_factor,
            v_tp,
            c_load,
            v_swing,
            stages,
        } => {
            let current = starved_current(v_mac, *k_factor, *v_tp, params.v_dd)?;
            f64::from(*stages) * c_load * v_swing / current
        }
    };
    Ok(DelaySample {
        t_d,
        cell_index: 0,
        v_control: v_mac,
    })
}

/// Total delay of a cascade: each stage's delay computed independently from
/// its own control voltage and summed. A cutoff error carries the index of
/// the offending cell.
pub fn cascade_delay(samples: &[AnalogSample], params: &CircuitParams) -> Result<f64, DelayError> {
    let mut total = 0.0;
    for sample in samples {
        let d = cell_delay(sample.v_mac, params).map_err(|e| e.with_cell(sample.cell_index))?;
        total += d.t_d;
    }
    Ok(total)
}

/// Cubic expansion of the cell delay over a voltage range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyFit {
    /// Nominal delay (s).
    pub t0: f64,
    /// First-order coefficient (s/V).
    pub alpha: f64,
    /// Second-order coefficient (s/V²).
    pub beta: f64,
    /// Third-order coefficient (s/V³).
    pub gamma: f64,
    /// Largest observed deviation between the physical model and the fit
    /// over a dense grid spanning the fit range (s).
    pub fit_residual_max: f64,
}

impl PolyFit {
    pub fn eval(&self, v: f64) -> f64 {
        self.t0 + v * (self.alpha + v * (self.beta + v * self.gamma))
    }

    /// The fitted coefficients as a polynomial delay model.
    pub fn to_model(&self) -> DelayModel {
        DelayModel::Polynomial {
            t0: self.t0,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
        }
    }
}

/// Least-squares cubic fit of the configured cell delay over
/// `[v_lo, v_hi]`, sampled at `n_nodes` equally spaced nodes.
///
/// The fit runs in a normalized variable for conditioning and the
/// coefficients are transformed back to plain powers of volts. Requires
/// `v_lo < v_hi`, `n_nodes >= 4`, and the whole range inside the delay
/// model's validity.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN bounds must land in the error path
pub fn fit_polynomial(
    params: &CircuitParams,
    v_lo: f64,
    v_hi: f64,
    n_nodes: usize,
) -> Result<PolyFit, DelayError> {
    if !(v_lo < v_hi) {
        return Err(DelayError::FitRange(format!(
            "v_lo {v_lo} must be below v_hi {v_hi}"
        )));
    }
    if n_nodes < 4 {
        return Err(DelayError::FitRange(format!(
            "need at least 4 fit nodes, got {n_nodes}"
        )));
    }

    let mid = 0.5 * (v_lo + v_hi);
    let half = 0.5 * (v_hi - v_lo);
    let nodes: Vec<(f64, f64)> = (0..n_nodes)
        .map(|i| {
            let v = v_lo + (v_hi - v_lo) * (i as f64) / ((n_nodes - 1) as f64);
            cell_delay(v, params).map(|d| ((v - mid) / half, d.t_d))
        })
        .collect::<Result<_, _>>()?;

    // Normal equations for a cubic in the normalized variable.
    let mut moments = [0.0; 7];
    let mut rhs = [0.0; 4];
    for &(u, t) in &nodes {
        let mut pow = 1.0;
        for (k, m) in moments.iter_mut().enumerate() {
            *m += pow;
            if k < 4 {
                rhs[k] += pow * t;
            }
            pow *= u;
        }
    }
    let mut a = [[0.0; 4]; 4];
    for (j, row) in a.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            *cell = moments[j + k];
        }
    }
    let c = solve4(a, rhs).ok_or_else(|| {
        DelayError::FitRange("fit system is singular over the requested range".into())
    })?;

    // Back-transform from u = (v - mid)/half to powers of v.
    let s = 1.0 / half;
    let b = -mid / half;
    let t0 = c[0] + b * (c[1] + b * (c[2] + b * c[3]));
    let alpha = s * (c[1] + b * (2.0 * c[2] + 3.0 * b * c[3]));
    let beta = s * s * (c[2] + 3.0 * b * c[3]);
    let gamma = s * s * s * c[3];

    let mut fit = PolyFit {
        t0,
        alpha,
        beta,
        gamma,
        fit_residual_max: 0.0,
    };
    // Residual measured on a dense grid, which includes the fit nodes
    // whenever n_nodes - 1 divides the grid intervals.
    let grid = 1200;
    let mut worst: f64 = 0.0;
    for i in 0..=grid {
        let v = v_lo + (v_hi - v_lo) * (i as f64) / (grid as f64);
        let t = cell_delay(v, params)?.t_d;
        worst = worst.max((t - fit.eval(v)).abs());
    }
    fit.fit_residual_max = worst;
    Ok(fit)
}

/// Gaussian elimination with partial pivoting on a 4x4 system.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite moments")
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..4 {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (k, cell) in lower[0].iter_mut().enumerate().skip(col) {
                *cell -= f * upper[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..4).rev() {
        let mut acc = b[col];
        for k in (col + 1)..4 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

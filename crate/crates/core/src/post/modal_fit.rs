use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Modal response at the end of a force window from the convolution
/// `η(T) = (1/ω)∫ p sin ω(T−τ) dτ`, `η̇(T) = ∫ p cos ω(T−τ) dτ` with
/// `p = φ(P) f(τ)`, starting from rest. `force` is the load on the structure
/// in the positive dof direction, sampled every `dt` over the window; the
/// last sample is at T. Trapezoidal quadrature.
pub fn duhamel_response(force: &[f64], dt: f64, omega: f64, phi: f64) -> Result<(f64, f64)> {
    if force.is_empty() {
        return Err(Error::invalid("empty force window"));
    }
    if force.len() == 1 {
        return Ok((0.0, 0.0));
    }
    let n = force.len();
    let t_end = (n - 1) as f64 * dt;
    let (mut disp, mut vel) = (0.0, 0.0);
    for (i, f) in force.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let lag = t_end - i as f64 * dt;
        let (ks, kc) = if omega == 0.0 {
            (lag, 1.0)
        } else {
            ((omega * lag).sin() / omega, (omega * lag).cos())
        };
        disp += w * f * ks;
        vel += w * f * kc;
    }
    Ok((phi * disp * dt, phi * vel * dt))
}

/// Least-squares decomposition of a free-decay velocity record.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeFit {
    /// Constant (rigid-body) velocity component at the sensor.
    pub rigid_velocity: f64,
    /// η_k(t) = η̂ᶜ cos ω_k t + η̂ˢ sin ω_k t, with t the absolute time.
    pub cos_coefficients: Vec<f64>,
    pub sin_coefficients: Vec<f64>,
    pub residual_norm: f64,
}

impl FreeFit {
    pub fn eta(&self, k: usize, omega: f64, t: f64) -> f64 {
        self.cos_coefficients[k] * (omega * t).cos() + self.sin_coefficients[k] * (omega * t).sin()
    }

    pub fn eta_dot(&self, k: usize, omega: f64, t: f64) -> f64 {
        omega
            * (-self.cos_coefficients[k] * (omega * t).sin()
                + self.sin_coefficients[k] * (omega * t).cos())
    }

    /// ½ω²(η̂ᶜ² + η̂ˢ²), constant in free decay.
    pub fn energy(&self, k: usize, omega: f64) -> f64 {
        0.5 * omega * omega * (self.cos_coefficients[k].powi(2) + self.sin_coefficients[k].powi(2))
    }
}

/// Fit `v(t) = v_RgB + Σ ω_k φ_k [−η̂ᶜ_k sin ω_k t + η̂ˢ_k cos ω_k t]` to a
/// sensor velocity record.
pub fn fit_modal_free(
    time: &[f64],
    velocity: &[f64],
    omegas: &[f64],
    sensor_shape: &[f64],
) -> Result<FreeFit> {
    let n = time.len();
    let m = omegas.len();
    if velocity.len() != n || sensor_shape.len() != m {
        return Err(Error::Dimension("fit inputs have inconsistent lengths".into()));
    }
    if m == 0 || omegas.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid("fit needs positive frequencies"));
    }
    let cols = 1 + 2 * m;
    if n < cols {
        return Err(Error::RankDeficient(format!(
            "{n} samples for {cols} unknowns"
        )));
    }
    let span = time[n - 1] - time[0];
    let slowest = omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let periods = span * slowest / (2.0 * std::f64::consts::PI);
    if periods < 2.0 {
        warn!("fit window covers {periods:.2} periods of the lowest mode; at least 2 are advised");
    }
    let design = DMatrix::from_fn(n, cols, |i, j| {
        if j == 0 {
            return 1.0;
        }
        let k = (j - 1) / 2;
        let (w, p, t) = (omegas[k], sensor_shape[k], time[i]);
        if (j - 1) % 2 == 0 {
            -w * p * (w * t).sin()
        } else {
            w * p * (w * t).cos()
        }
    });
    // Column scaling so that the rank test compares like with like.
    let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|&c| c == 0.0) {
        return Err(Error::RankDeficient(format!("column {j} is zero (mode shape vanishes at sensor)")));
    }
    let scaled = DMatrix::from_fn(n, cols, |i, j| design[(i, j)] / norms[j]);
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient(format!(
            "condition {:.3e}; frequencies may alias",
            smax / smin
        )));
    }
    let rhs = DVector::from_column_slice(velocity);
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let x: Vec<f64> = x.iter().zip(&norms).map(|(v, c)| v / c).collect();
    let fitted = &design * DVector::from_column_slice(&x);
    Ok(FreeFit {
        rigid_velocity: x[0],
        cos_coefficients: (0..m).map(|k| x[1 + 2 * k]).collect(),
        sin_coefficients: (0..m).map(|k| x[2 + 2 * k]).collect(),
        residual_norm: (fitted - rhs).norm(),
    })
}

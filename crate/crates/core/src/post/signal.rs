use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Sampling rate of the laboratory acquisition, Hz.
pub const RIG_SAMPLE_RATE: f64 = 102_400.0;

/// f = m dv/dt by second-order central differences; first-order one-sided
/// differences at the ends.
pub fn force_from_velocity(velocity: &[f64], mass: f64, dt: f64) -> Result<Vec<f64>> {
    let n = velocity.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 velocity samples, got {n}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("sample interval must be > 0"));
    }
    let mut f = Vec::with_capacity(n);
    f.push(mass * (velocity[1] - velocity[0]) / dt);
    for i in 1..n - 1 {
        f.push(mass * (velocity[i + 1] - velocity[i - 1]) / (2.0 * dt));
    }
    f.push(mass * (velocity[n - 1] - velocity[n - 2]) / dt);
    Ok(f)
}

/// Linear interpolation of a uniformly sampled signal onto the grid
/// `t0 + k/rate`; returns the samples and the new interval.
pub fn resample(signal: &[f64], dt: f64, rate: f64) -> Result<(Vec<f64>, f64)> {
    if signal.is_empty() || !(dt > 0.0) || !(rate > 0.0) {
        return Err(Error::invalid("resampling needs samples, dt > 0 and rate > 0"));
    }
    let new_dt = 1.0 / rate;
    let span = dt * (signal.len() - 1) as f64;
    let count = (span / new_dt + 1e-9).floor() as usize + 1;
    let out = (0..count)
        .map(|k| {
            let x = k as f64 * new_dt / dt;
            let i = (x.floor() as usize).min(signal.len() - 1);
            if i + 1 >= signal.len() {
                signal[signal.len() - 1]
            } else {
                let a = x - i as f64;
                signal[i] * (1.0 - a) + signal[i + 1] * a
            }
        })
        .collect();
    Ok((out, new_dt))
}

/// One-sided view of a DFT with `X_k = (1/N) Σ x_n e^{−2πikn/N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Bin frequencies k/(N dt), Hz, for k = 0 … N−1.
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
    pub dt: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Σ|X_k|² N dt, equal to Σ|x_n|² dt.
    pub fn energy(&self) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * n * self.dt
    }

    /// Bins up to the Nyquist frequency.
    pub fn one_sided(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        let half = self.values.len() / 2 + 1;
        self.frequencies
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .take(half)
    }
}

/// Forward DFT of a uniformly sampled signal, normalized by 1/N.
pub fn pulse_spectrum(signal: &[f64], dt: f64) -> Spectrum {
    let n = signal.len();
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    if n > 0 {
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    }
    let scale = 1.0 / n.max(1) as f64;
    Spectrum {
        frequencies: (0..n).map(|k| k as f64 / (n as f64 * dt)).collect(),
        values: buf.into_iter().map(|c| c * scale).collect(),
        dt,
    }
}

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Frequency response on a grid; `None` where the estimate is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct FrfEstimate {
    pub frequencies: Vec<f64>,
    pub values: Vec<Option<Complex64>>,
    pub realizations: usize,
}

/// One measurement: response and excitation spectra on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub response: Vec<Complex64>,
    pub excitation: Vec<Complex64>,
}

/// H₁ = Σ U F* / Σ F F*, bin by bin.
pub fn h1_estimate(frequencies: &[f64], realizations: &[Realization]) -> Result<FrfEstimate> {
    if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("frequency grid must be strictly ascending"));
    }
    let n = frequencies.len();
    if let Some(r) = realizations
        .iter()
        .position(|r| r.response.len() != n || r.excitation.len() != n)
    {
        return Err(Error::Dimension(format!(
            "realization {r} does not match the {n}-bin grid"
        )));
    }
    let values = (0..n)
        .map(|k| {
            let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
            for r in realizations {
                num += r.response[k] * r.excitation[k].conj();
                den += r.excitation[k].norm_sqr();
            }
            (den > 0.0).then(|| num / den)
        })
        .collect();
    Ok(FrfEstimate {
        frequencies: frequencies.to_vec(),
        values,
        realizations: realizations.len(),
    })
}

/// U = V / (2πf i); the f = 0 bin has no displacement spectrum.
pub fn velocity_to_displacement(frequencies: &[f64], velocity: &[Complex64]) -> Vec<Option<Complex64>> {
    frequencies
        .iter()
        .zip(velocity)
        .map(|(&f, &v)| (f != 0.0).then(|| v / Complex64::new(0.0, 2.0 * std::f64::consts::PI * f)))
        .collect()
}

/// Modal superposition H(f) = Σ φ_k(d) φ_k(r) / (ω_k² − Ω² + 2i D_k ω_k Ω).
pub fn frf_model(
    omegas: &[f64],
    drive_shape: &[f64],
    response_shape: &[f64],
    damping: &[f64],
    frequencies: &[f64],
) -> Result<FrfEstimate> {
    let m = omegas.len();
    if drive_shape.len() != m || response_shape.len() != m || damping.len() != m {
        return Err(Error::Dimension("modal data lengths differ".into()));
    }
    if let Some(d) = damping.iter().find(|&&d| !(d >= 0.0)) {
        return Err(Error::invalid(format!("damping ratio must be >= 0, got {d}")));
    }
    let values = frequencies
        .iter()
        .map(|&f| {
            let big = 2.0 * std::f64::consts::PI * f;
            let h: Complex64 = (0..m)
                .map(|k| {
                    let den = Complex64::new(
                        omegas[k] * omegas[k] - big * big,
                        2.0 * damping[k] * omegas[k] * big,
                    );
                    drive_shape[k] * response_shape[k] / den
                })
                .sum();
            h.is_finite().then_some(h)
        })
        .collect();
    Ok(FrfEstimate {
        frequencies: frequencies.to_vec(),
        values,
        realizations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};
    use std::sync::Arc;

    use crate::assembly::{assemble_beam, BeamGeometry, MassStyle, Material, Support};
    use crate::cms::solve_modes;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_realization_ratio() {
        let r = Realization {
            response: vec![c(2.0, 0.0)],
            excitation: vec![c(1.0, 0.0)],
        };
        let h = h1_estimate(&[10.0], &[r]).unwrap();
        assert_eq!(h.values[0], Some(c(2.0, 0.0)));
    }

    #[test]
    fn zero_excitation_is_undefined() {
        let r = Realization {
            response: vec![c(1.0, 0.0), c(1.0, 0.0)],
            excitation: vec![c(0.0, 0.0), c(1.0, 0.0)],
        };
        let h = h1_estimate(&[1.0, 2.0], &[r]).unwrap();
        assert_eq!(h.values[0], None);
        assert!(h1_estimate(&[2.0, 1.0], &[]).is_err());
    }

    fn random_realizations(
        h: &[Complex64],
        count: usize,
        noise: f64,
        rng: &mut StdRng,
    ) -> Vec<Realization> {
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..count)
            .map(|_| {
                let excitation: Vec<Complex64> = (0..h.len())
                    .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let response = excitation
                    .iter()
                    .zip(h)
                    .map(|(f, h)| {
                        h * f + c(normal.sample(rng), normal.sample(rng)) * noise
                    })
                    .collect();
                Realization {
                    response,
                    excitation,
                }
            })
            .collect()
    }

    #[test]
    fn noise_free_identity() {
        let mut rng = StdRng::seed_from_u64(3);
        let h: Vec<Complex64> = (0..64).map(|k| c((k as f64).cos(), 0.3 * k as f64)).collect();
        let grid: Vec<f64> = (0..64).map(|k| k as f64).collect();
        let est = h1_estimate(&grid, &random_realizations(&h, 10, 0.0, &mut rng)).unwrap();
        for (e, h) in est.values.iter().zip(&h) {
            assert!((e.unwrap() - h).norm() <= 1e-12 * h.norm().max(1.0));
        }
    }

    #[test]
    fn noise_averages_down() {
        let mut rng = StdRng::seed_from_u64(11);
        let h = vec![c(1.0, -0.5); 256];
        let grid: Vec<f64> = (0..256).map(|k| k as f64).collect();
        let rms_error = |n: usize, rng: &mut StdRng| {
            let mut acc = 0.0;
            for _ in 0..40 {
                let est = h1_estimate(&grid, &random_realizations(&h, n, 0.1, rng)).unwrap();
                acc += est
                    .values
                    .iter()
                    .zip(&h)
                    .map(|(e, h)| (e.unwrap() - h).norm_sqr())
                    .sum::<f64>()
                    / 256.0;
            }
            (acc / 40.0).sqrt()
        };
        let e4 = rms_error(4, &mut rng);
        let e16 = rms_error(16, &mut rng);
        // 1/√N scaling: quadrupling N halves the error.
        let ratio = e4 / e16;
        assert!(ratio > 1.6 && ratio < 2.5, "{ratio}");
    }

    #[test]
    fn displacement_excludes_dc() {
        let u = velocity_to_displacement(&[0.0, 1.0], &[c(1.0, 0.0), c(2.0 * std::f64::consts::PI, 0.0)]);
        assert_eq!(u[0], None);
        assert!((u[1].unwrap() - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn resonance_peak() {
        let (w, phi, d) = (2.0 * std::f64::consts::PI * 1190.0, 2.0, 22.9e-6);
        let h = frf_model(&[w], &[phi], &[phi], &[d], &[1190.0]).unwrap();
        let expect = phi * phi / (2.0 * d * w * w);
        assert!((h.values[0].unwrap().norm() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn static_limit_is_flexibility() {
        let geo = BeamGeometry::new(0.21, 0.015, 0.01).unwrap();
        let beam = Arc::new(
            assemble_beam(20, &Material::steel(), &geo, Support::ClampedClamped, MassStyle::Consistent)
                .unwrap(),
        );
        let basis = solve_modes(&beam).unwrap();
        let (a, b) = (beam.transverse_dof_near(0.05).unwrap().dof, beam.transverse_dof_near(0.12).unwrap().dof);
        let n = basis.n_modes();
        let shape = |dof: usize| (0..n).map(|k| basis.value(k, dof)).collect::<Vec<_>>();
        let h = frf_model(basis.frequencies(), &shape(a), &shape(b), &vec![0.0; n], &[0.0]).unwrap();
        let kinv = beam.stiffness_matrix().clone().try_inverse().unwrap();
        let expect = kinv[(a, b)];
        assert!((h.values[0].unwrap().re - expect).abs() < 1e-9 * expect.abs());
    }
}

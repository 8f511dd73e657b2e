//! Wall-time comparison of the reduced model against a full-order reference.
//!
//! The reference marches the unreduced lumped-mass beam with explicit
//! central differences at 0.9 of its stability limit. The sphere stays a
//! reduced model and is coupled through the same Delassus solve; the beam's
//! contact displacement enters that solve as a gap offset. Both methods use
//! the lumped beam so that the comparison isolates the reduction.

use std::sync::Arc;
use std::time::Instant;

use log::warn;
use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;

use crate::assembly::MassStyle;
use crate::cms::{build_rom, select_retained, solve_modes};
use crate::contact::{detect_events, simulate, Delassus};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub name: &'static str,
    pub dofs: usize,
    pub steps: usize,
    pub dt: f64,
    /// Time-stepping wall time, s.
    pub wall_time: f64,
    /// Model preparation (modes, reduction, stability estimate), s.
    pub setup_time: f64,
    pub contact_duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rom: MethodReport,
    pub full: MethodReport,
}

impl BenchReport {
    /// Full-order over reduced time-stepping wall time.
    pub fn speedup(&self) -> f64 {
        self.full.wall_time / self.rom.wall_time
    }

    /// Speedup including the one-off reduction cost.
    pub fn speedup_with_setup(&self) -> f64 {
        (self.full.wall_time + self.full.setup_time) / (self.rom.wall_time + self.rom.setup_time)
    }

    /// |τ_rom − τ_full| / τ_full.
    pub fn duration_disagreement(&self) -> f64 {
        (self.rom.contact_duration - self.full.contact_duration).abs() / self.full.contact_duration
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("method,dofs,steps,dt_s,wall_s,setup_s,contact_duration_s\n");
        for m in [&self.rom, &self.full] {
            out.push_str(&format!(
                "{},{},{},{:e},{:e},{:e},{:e}\n",
                m.name, m.dofs, m.steps, m.dt, m.wall_time, m.setup_time, m.contact_duration
            ));
        }
        out.push_str(&format!(
            "# speedup={:.2} speedup_with_setup={:.3} duration_disagreement={:.4}\n",
            self.speedup(),
            self.speedup_with_setup(),
            self.duration_disagreement()
        ));
        out
    }
}

fn elapsed(start: Instant, what: &str) -> f64 {
    let t = start.elapsed().as_secs_f64();
    if t < 0.01 {
        warn!("{what} took {t:.2e} s; timer resolution limits the comparison");
    }
    t.max(f64::MIN_POSITIVE)
}

/// Nonzero pattern of a dense matrix in compressed rows.
fn dense_to_csr(a: &DMatrix<f64>) -> CsrMatrix<f64> {
    let (mut offsets, mut cols, mut vals) = (vec![0], Vec::new(), Vec::new());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != 0.0 {
                cols.push(j);
                vals.push(a[(i, j)]);
            }
        }
        offsets.push(cols.len());
    }
    CsrMatrix::try_from_csr_data(a.nrows(), a.ncols(), offsets, cols, vals)
        .expect("row-major scan yields valid CSR data")
}

fn spmv(a: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    for (i, row) in a.row_iter().enumerate() {
        y[i] = row
            .col_indices()
            .iter()
            .zip(row.values())
            .map(|(&j, v)| v * x[j])
            .sum();
    }
}

/// Largest ω of `M⁻¹K` for diagonal M by power iteration on `M^{-½}KM^{-½}`.
fn max_frequency(k: &CsrMatrix<f64>, inv_sqrt_m: &[f64]) -> f64 {
    let n = inv_sqrt_m.len();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let (mut y, mut tmp) = (vec![0.0; n], vec![0.0; n]);
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().zip(inv_sqrt_m).for_each(|(v, s)| *v *= s / norm);
        spmv(k, &x, &mut tmp);
        tmp.iter().zip(inv_sqrt_m).zip(y.iter_mut()).for_each(|((t, s), y)| *y = t * s);
        x.iter_mut().zip(inv_sqrt_m).for_each(|(v, s)| *v /= s);
        let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        std::mem::swap(&mut x, &mut y);
        if (next - lambda).abs() <= 1e-10 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// Time both methods on the scenario's impact with the lumped beam. Each
/// march is repeated `repeats` times and the shortest wall time is kept.
pub fn run_bench(scenario: &Scenario, repeats: usize) -> Result<BenchReport> {
    let repeats = repeats.max(1);
    let mut lumped = scenario.clone();
    lumped.beam.mass_style = MassStyle::Lumped;
    let built_start = Instant::now();
    let built = lumped.build()?;
    let rom_setup = built_start.elapsed().as_secs_f64();
    let setup = &built.setup;

    let mut rom_wall = f64::INFINITY;
    let mut traj = None;
    for _ in 0..repeats {
        let start = Instant::now();
        let t = simulate(setup)?;
        rom_wall = rom_wall.min(elapsed(start, "reduced-model run"));
        traj = Some(t);
    }
    let traj = traj.expect("at least one repeat");
    let rom_window = traj.events.first_window().ok_or(Error::NoContact)?;
    let rom = MethodReport {
        name: "rom_semi_explicit",
        dofs: setup.sphere.dof_count() + setup.beam.dof_count(),
        steps: traj.steps,
        dt: setup.dt,
        wall_time: rom_wall,
        setup_time: rom_setup,
        contact_duration: rom_window.duration(),
    };

    let full_setup_start = Instant::now();
    let beam = lumped.beam_model()?;
    let p = built.impact.dof;
    let n = beam.n_dof();
    let mass: Vec<f64> = (0..n).map(|i| beam.mass_matrix()[(i, i)]).collect();
    if let Some(i) = mass.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::MassNotPositive {
            dof: i,
            label: crate::assembly::describe(&beam.dofs()[i]),
        });
    }
    let sphere = setup.sphere.clone();
    let (kbb, kbi, kii) = (sphere.k_bb()[(0, 0)], sphere.k_bi()[(0, 0)], sphere.k_ii()[(0, 0)]);
    let static_map = kbi / kbb;
    let delassus = Delassus::new(DMatrix::from_element(1, 1, 1.0 / kbb))?;
    // Closed contact adds at most k_bb to the contact dof.
    let mut k_closed = beam.stiffness_matrix().clone();
    k_closed[(p, p)] += kbb;
    let k = dense_to_csr(beam.stiffness_matrix());
    let inv_sqrt_m: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let omega_max = max_frequency(&dense_to_csr(&k_closed), &inv_sqrt_m);
    let steps = ((setup.t_end * omega_max / (0.9 * 2.0)).ceil() as usize).max(1);
    let dt = setup.t_end / steps as f64;
    let full_setup = full_setup_start.elapsed().as_secs_f64();

    let march = || -> Result<(Vec<f64>, Vec<f64>)> {
        let phi_s = sphere.boundary_shapes()[(0, 0)];
        let (mut u, mut v) = (vec![0.0; n], vec![0.0; n]);
        let mut ku = vec![0.0; n];
        let (mut eta, mut eta_dot) = (0.0, -setup.impact_speed / phi_s);
        let options = setup.options;
        let (mut free, mut lam, mut gap) = (DVector::zeros(1), DVector::zeros(1), DVector::zeros(1));
        let mut solve = |eta: f64, w_p: f64, warm: f64| -> Result<(f64, f64)> {
            free[0] = setup.initial_gap - static_map * eta - w_p;
            lam[0] = warm;
            delassus.solve_into(&free, &mut lam, &mut gap, &options)?;
            Ok((lam[0], -static_map * eta + lam[0] / kbb))
        };
        let (mut lambda, mut q_b) = solve(eta, 0.0, 0.0)?;
        let mut time = Vec::with_capacity(steps + 1);
        let mut force = Vec::with_capacity(steps + 1);
        time.push(0.0);
        force.push(lambda);
        for s in 0..steps {
            spmv(&k, &u, &mut ku);
            ku[p] += lambda;
            let sphere_acc = -(kbi * q_b + kii * eta);
            // v^{1/2} = v^0 + dt/2 a^0, then full kicks.
            let h = if s == 0 { 0.5 * dt } else { dt };
            v.iter_mut()
                .zip(&ku)
                .zip(&mass)
                .for_each(|((v, f), m)| *v -= h * f / m);
            eta_dot += h * sphere_acc;
            u.iter_mut().zip(&v).for_each(|(u, v)| *u += dt * v);
            eta += dt * eta_dot;
            (lambda, q_b) = solve(eta, u[p], lambda)?;
            time.push((s + 1) as f64 * dt);
            force.push(lambda);
        }
        Ok((time, force))
    };
    let mut full_wall = f64::INFINITY;
    let (mut time, mut force) = (Vec::new(), Vec::new());
    for _ in 0..repeats {
        let start = Instant::now();
        (time, force) = march()?;
        full_wall = full_wall.min(elapsed(start, "full-order run"));
    }
    let events = detect_events(&time, &force, setup.coalescence);
    let full_window = events.first_window().ok_or(Error::NoContact)?;
    let full = MethodReport {
        name: "full_order_reference",
        dofs: n + sphere.dof_count(),
        steps,
        dt,
        wall_time: full_wall,
        setup_time: full_setup,
        contact_duration: full_window.duration(),
    };
    Ok(BenchReport { rom, full })
}

/// Reduced dof count for a beam of `n_elem` elements and the scenario's cutoff.
pub fn rom_dof_count(scenario: &Scenario) -> Result<usize> {
    let (model, _) = scenario
        .beam_model()?
        .with_contact_at(scenario.coordinate(&scenario.impact_point))?;
    let model = Arc::new(model);
    let basis = solve_modes(&model)?;
    let rom = build_rom(model, &basis, &select_retained(&basis, scenario.f_cut_hz)?)?;
    Ok(rom.dof_count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{parse_scenario_str, Strictness};

    #[test]
    fn power_iteration_matches_dense() {
        let s = parse_scenario_str(
            "beam.support = clamped-clamped\nbeam.n_elem = 12\nbeam.mass_style = lumped\nimpact.point = P4\nimpact.velocity_m_s = 1\n",
            Strictness::Strict,
        )
        .unwrap();
        let beam = s.beam_model().unwrap();
        let n = beam.n_dof();
        let inv: Vec<f64> = (0..n).map(|i| 1.0 / beam.mass_matrix()[(i, i)].sqrt()).collect();
        let w = max_frequency(&dense_to_csr(beam.stiffness_matrix()), &inv);
        let basis = solve_modes(&beam).unwrap();
        let top = *basis.frequencies().last().unwrap();
        assert!((w - top).abs() < 1e-6 * top, "{w} vs {top}");
    }

    #[test]
    fn reference_and_rom_agree_on_contact() {
        let s = parse_scenario_str(
            "beam.support = free-free\nbeam.n_elem = 30\nimpact.point = P4\nimpact.velocity_m_s = 1.1\nintegration.t_end_s = 1e-4\nrom.f_cut_hz = 60e3\n",
            Strictness::Strict,
        )
        .unwrap();
        let r = run_bench(&s, 1).unwrap();
        assert!(r.duration_disagreement() < 0.05, "{}", r.to_text());
        assert_eq!(r.rom.dofs, rom_dof_count(&s).unwrap() + 2);
        assert_eq!(r.full.dofs, 62 + 2);
        assert!(r.full.steps > 0 && r.rom.steps == 1000);
    }
}

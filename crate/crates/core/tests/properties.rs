use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use beamimpact::assembly::{AssembledModel, DofKind, DofLabel};
use beamimpact::cms::{build_rom, select_retained_count, solve_modes};
use beamimpact::contact::{detect_events, simulate, ContactOptions, Delassus};
use beamimpact::post::{duhamel_response, modal_energy, project_to_modal, ModalSummary};
use beamimpact::scenario::{parse_scenario_str, Strictness};

fn small_impact(point: &str, speed: f64) -> String {
    format!(
        "beam.support = free-free\nbeam.n_elem = 16\nimpact.point = {point}\n\
         impact.velocity_m_s = {speed}\nrom.f_cut_hz = 40e3\nintegration.dt_s = 2e-7\n\
         integration.t_end_s = 1.2e-4\n"
    )
}

/// All 2ⁿ active sets; the one whose λ and g are both feasible.
fn enumerate_lcp(d: &DMatrix<f64>, g_free: &DVector<f64>) -> DVector<f64> {
    let n = g_free.len();
    for mask in 0..(1u32 << n) {
        let active: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut lambda = DVector::zeros(n);
        if !active.is_empty() {
            let daa = d.select_rows(&active).select_columns(&active);
            let rhs = -g_free.select_rows(&active);
            match daa.lu().solve(&rhs) {
                Some(x) => active.iter().zip(x.iter()).for_each(|(&i, &v)| lambda[i] = v),
                None => continue,
            }
        }
        let gap = d * &lambda + g_free;
        let scale = lambda.amax().max(1.0);
        let ok = (0..n).all(|i| {
            if active.contains(&i) {
                lambda[i] >= -1e-12 * scale
            } else {
                gap[i] >= -1e-12
            }
        });
        if ok {
            return lambda;
        }
    }
    panic!("no feasible active set")
}

fn spd(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.3
}

/// Grounded spring-mass chain with random stiffnesses and masses.
fn chain(k: &[f64], m: &[f64], boundary: usize) -> AssembledModel {
    let n = m.len();
    let mut stiff = DMatrix::zeros(n, n);
    stiff[(0, 0)] += k[0];
    for i in 1..n {
        let s = k[i];
        stiff[(i - 1, i - 1)] += s;
        stiff[(i, i)] += s;
        stiff[(i - 1, i)] -= s;
        stiff[(i, i - 1)] -= s;
    }
    let dofs = (0..n)
        .map(|i| DofLabel {
            node: i,
            kind: DofKind::Axial,
            position: i as f64,
        })
        .collect();
    AssembledModel::new(
        DMatrix::from_diagonal(&DVector::from_column_slice(m)),
        stiff,
        dofs,
        vec![],
        vec![boundary],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lcp_solution_is_complementary_and_unique(
        n in 1usize..5,
        entries in prop::collection::vec(-1.0f64..1.0, 16),
        gaps in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let d = spd(n, &entries);
        let g_free = DVector::from_column_slice(&gaps[..n]);
        let options = ContactOptions {
            max_iterations: 20_000,
            gap_tol: 1e-8,
            ..ContactOptions::default()
        };
        let sol = Delassus::new(d.clone()).unwrap().solve(&g_free, None, &options).unwrap();
        let scale = sol.lambda.amax().max(1.0);
        for j in 0..n {
            prop_assert!(sol.lambda[j] >= 0.0);
            prop_assert!(sol.gap[j] >= -1e-8);
            prop_assert!(sol.gap[j].min(sol.lambda[j]).abs() <= 1e-8 * scale);
        }
        let expect = enumerate_lcp(&d, &g_free);
        prop_assert!((&sol.lambda - &expect).amax() <= 1e-7 * scale);
    }

    #[test]
    fn macneal_static_flexibility_is_exact(
        k in prop::collection::vec(1.0f64..10.0, 8),
        m in prop::collection::vec(0.5f64..2.0, 8),
        n in 3usize..9,
        boundary_from_end in 0usize..3,
        kept_frac in 0.0f64..1.0,
    ) {
        let boundary = n - 1 - boundary_from_end.min(n - 1);
        let model = Arc::new(chain(&k[..n], &m[..n], boundary));
        let basis = solve_modes(&model).unwrap();
        let kept = ((n - 1) as f64 * kept_frac).floor() as usize;
        let retained = select_retained_count(&basis, kept.max(1)).unwrap();
        let rom = build_rom(model.clone(), &basis, &retained).unwrap();
        let direct = model.stiffness_matrix().clone().try_inverse().unwrap()[(boundary, boundary)];
        let reduced = rom.boundary_flexibility()[(0, 0)];
        prop_assert!((reduced - direct).abs() <= 1e-9 * direct);
        let condensed = rom.condensed_modal_stiffness();
        let w2max = rom.frequencies().last().unwrap().powi(2);
        for (j, w) in rom.frequencies().iter().enumerate() {
            prop_assert!((condensed[(j, j)] - w * w).abs() <= 1e-8 * w2max);
        }
        let mass = rom.reduced_mass();
        prop_assert!(mass.row(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn modal_projection_is_complete(
        k in prop::collection::vec(1.0f64..10.0, 6),
        m in prop::collection::vec(0.5f64..2.0, 6),
        q in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let model = chain(&k, &m, 5);
        let basis = solve_modes(&model).unwrap();
        let q = DVector::from_column_slice(&q);
        let (eta, _) = project_to_modal(&q, &q, basis.shapes(), model.mass_matrix()).unwrap();
        prop_assert!((basis.shapes() * eta - &q).amax() <= 1e-10);
    }

    #[test]
    fn modal_energy_is_nonnegative(eta in -1e3f64..1e3, eta_dot in -1e3f64..1e3, omega in 0.0f64..1e5) {
        prop_assert!(modal_energy(eta, eta_dot, omega) >= 0.0);
    }

    #[test]
    fn duhamel_is_linear_in_force(
        f in prop::collection::vec(-5.0f64..5.0, 2..200),
        g_scale in -3.0f64..3.0,
        omega in 100.0f64..1e5,
    ) {
        let g: Vec<f64> = f.iter().rev().map(|x| x * g_scale).collect();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let (a, ad) = duhamel_response(&f, 1e-7, omega, 0.8).unwrap();
        let (b, bd) = duhamel_response(&g, 1e-7, omega, 0.8).unwrap();
        let (c, cd) = duhamel_response(&sum, 1e-7, omega, 0.8).unwrap();
        let scale = a.abs() + b.abs() + 1e-300;
        let scale_d = ad.abs() + bd.abs() + 1e-300;
        prop_assert!((c - a - b).abs() <= 1e-9 * scale);
        prop_assert!((cd - ad - bd).abs() <= 1e-9 * scale_d);
    }

    #[test]
    fn pulses_closer_than_coalescence_merge(
        gaps in prop::collection::vec(prop_oneof![1usize..40, 60usize..100], 1..6),
        width in 5usize..30,
    ) {
        let dt = 1e-7;
        let coalescence = 5e-6;
        let mut force = vec![0.0; 3];
        let mut expected = 1;
        for (i, &g) in gaps.iter().enumerate() {
            force.extend((0..width).map(|j| 1.0 + (j as f64 * 0.3).sin().abs()));
            if i + 1 < gaps.len() {
                force.extend(std::iter::repeat_n(0.0, g));
                // Release sample to the zero sample before the next onset.
                if (g - 1) as f64 * dt >= coalescence {
                    expected += 1;
                }
            }
        }
        force.extend([0.0; 3]);
        let time: Vec<f64> = (0..force.len()).map(|i| i as f64 * dt).collect();
        let log = detect_events(&time, &force, coalescence);
        prop_assert_eq!(log.windows.len(), expected);
        prop_assert_eq!(log.windows.len() + log.sub_impacts(), gaps.len());
        prop_assert!(log.windows.iter().all(|w| w.released && w.duration() > 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn impact_conserves_momentum_and_energy(x in 0.02f64..0.19, speed in 0.2f64..2.0) {
        let built = parse_scenario_str(&small_impact(&x.to_string(), speed), Strictness::Strict)
            .unwrap()
            .build()
            .unwrap();
        let traj = simulate(&built.setup).unwrap();
        let p0 = traj.momentum[0];
        prop_assert!(traj.momentum.iter().all(|p| (p - p0).abs() <= 1e-3 * p0.abs()));
        let e0 = traj.energy[0];
        prop_assert!(traj.energy.iter().all(|e| (e - e0).abs() <= 1e-2 * e0));
        prop_assert!(traj.max_residual <= 1e-8);
        prop_assert!(traj.lambda.iter().all(|l| l.iter().all(|&v| v >= 0.0)));
        prop_assert!(traj.min_gap >= -built.setup.options.gap_tol);
        // Action and reaction share the multipliers: the sphere's momentum
        // change is the impulse delivered to the beam.
        let w = traj.events.first_window().unwrap();
        let e = traj.index_at(w.end);
        let sphere_change = traj.sphere_mass * (traj.sphere_velocity[e] - traj.sphere_velocity[0]);
        prop_assert!((sphere_change - w.impulse).abs() <= 1e-2 * w.impulse);
    }

    #[test]
    fn central_impact_leaves_even_modes_at_rest(speed in 0.2f64..2.0) {
        let built = parse_scenario_str(&small_impact("P4", speed), Strictness::Strict)
            .unwrap()
            .build()
            .unwrap();
        let traj = simulate(&built.setup).unwrap();
        let summary = ModalSummary::from_trajectory(&traj).unwrap();
        prop_assert!(summary.even_fraction() <= 1e-6);
        let r = traj.beam.rigid_count;
        let last = traj.beam.eta.last().unwrap();
        let largest = last.rows(r, last.len() - r).amax();
        for (n, k) in (r..last.len()).enumerate() {
            if n % 2 == 1 {
                prop_assert!(last[k].abs() <= 1e-6 * largest);
            }
        }
    }

    #[test]
    fn simulation_is_deterministic(x in 0.02f64..0.19) {
        let built = parse_scenario_str(&small_impact(&x.to_string(), 1.1), Strictness::Strict)
            .unwrap()
            .build()
            .unwrap();
        prop_assert_eq!(simulate(&built.setup).unwrap(), simulate(&built.setup).unwrap());
    }

    #[test]
    fn config_echo_round_trips(n_elem in 8usize..80, dt in 1e-8f64..5e-7, speed in 0.1f64..3.0) {
        let text = format!(
            "beam.support = clamped-clamped\nbeam.n_elem = {n_elem}\nimpact.point = P2\n\
             impact.velocity_m_s = {speed}\nintegration.dt_s = {dt}\n"
        );
        let a = parse_scenario_str(&text, Strictness::Strict).unwrap();
        let b = parse_scenario_str(a.echo(), Strictness::Strict).unwrap();
        prop_assert_eq!(a.echo(), b.echo());
        prop_assert_eq!(a.dt, dt);
        prop_assert_eq!(a.beam.n_elem, n_elem);
    }
}

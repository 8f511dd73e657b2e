use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::solver::{ContactOptions, Delassus, LcpSolution};
use crate::cms::ReducedModel;
use crate::error::{Error, Result};

/// Unilateral node-to-node contact between boundary coordinates of the
/// coupled system.
///
/// Pair `j` joins boundary coordinate `pairing[j].0` (the upper body, whose
/// displacement opens the gap) to `pairing[j].1`. Column `j` of W is `+1` and
/// `−1` on those coordinates, so λ is the contact force in newtons and
/// `g = Wᵀ q_b + g₀` is the gap in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactProblem {
    pub pairing: Vec<(usize, usize)>,
    pub initial_gap: DVector<f64>,
    pub options: ContactOptions,
}

impl ContactProblem {
    pub fn new(
        pairing: Vec<(usize, usize)>,
        initial_gap: DVector<f64>,
        options: ContactOptions,
    ) -> Result<Self> {
        options.validate()?;
        if pairing.len() != initial_gap.len() {
            return Err(Error::Dimension(format!(
                "{} pairs but {} initial gaps",
                pairing.len(),
                initial_gap.len()
            )));
        }
        if let Some(j) = initial_gap.iter().position(|&g| !(g >= 0.0)) {
            return Err(Error::invalid(format!(
                "initial gap of pair {j} must be >= 0, got {}",
                initial_gap[j]
            )));
        }
        if let Some(j) = pairing.iter().position(|(a, b)| a == b) {
            return Err(Error::invalid(format!("pair {j} joins a dof to itself")));
        }
        Ok(ContactProblem {
            pairing,
            initial_gap,
            options,
        })
    }

    /// Direction map W (n_boundary × n_pairs).
    pub fn direction_map(&self, n_boundary: usize) -> Result<DMatrix<f64>> {
        let mut w = DMatrix::zeros(n_boundary, self.pairing.len());
        for (j, &(a, b)) in self.pairing.iter().enumerate() {
            if a >= n_boundary || b >= n_boundary {
                return Err(Error::invalid(format!(
                    "pair {j} refers to boundary coordinate outside 0..{n_boundary}"
                )));
            }
            w[(a, j)] = 1.0;
            w[(b, j)] = -1.0;
        }
        Ok(w)
    }
}

/// Block-diagonal assembly of several reduced models joined by contact.
///
/// Global coordinates stack the boundary coordinates of all components,
/// then all modal coordinates, in component order.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    components: Vec<ReducedModel>,
    boundary_offsets: Vec<usize>,
    modal_offsets: Vec<usize>,
    k_bi: DMatrix<f64>,
    k_ii: DMatrix<f64>,
    direction: DMatrix<f64>,
    problem: ContactProblem,
    /// P = k_bb⁻¹ k_bi
    static_map: DMatrix<f64>,
    /// k_bb⁻¹ W
    compliance_w: DMatrix<f64>,
    /// Wᵀ P
    gap_map: DMatrix<f64>,
    delassus: Delassus,
    k_bb: DMatrix<f64>,
}

/// State after the contact solve at `eta`; `eta_dot_half` lags by half a step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub step: usize,
    pub q_b: DVector<f64>,
    pub eta: DVector<f64>,
    pub eta_dot_half: DVector<f64>,
    pub lambda: DVector<f64>,
    pub gap: DVector<f64>,
    /// Scaled complementarity residual of the solve that produced `lambda`.
    pub residual: f64,
}

impl CoupledSystem {
    pub fn new(components: Vec<ReducedModel>, problem: ContactProblem) -> Result<Self> {
        let nb: usize = components.iter().map(|c| c.n_boundary()).sum();
        let nm: usize = components.iter().map(|c| c.n_modal()).sum();
        let mut k_bb = DMatrix::zeros(nb, nb);
        let mut k_bi = DMatrix::zeros(nb, nm);
        let mut k_ii = DMatrix::zeros(nm, nm);
        let mut boundary_offsets = Vec::with_capacity(components.len());
        let mut modal_offsets = Vec::with_capacity(components.len());
        let (mut ob, mut om) = (0, 0);
        for c in &components {
            let (b, m) = (c.n_boundary(), c.n_modal());
            k_bb.view_mut((ob, ob), (b, b)).copy_from(c.k_bb());
            k_bi.view_mut((ob, om), (b, m)).copy_from(c.k_bi());
            k_ii.view_mut((om, om), (m, m)).copy_from(c.k_ii());
            boundary_offsets.push(ob);
            modal_offsets.push(om);
            ob += b;
            om += m;
        }
        let direction = problem.direction_map(nb)?;
        let chol = Cholesky::new(k_bb.clone()).ok_or_else(|| {
            Error::invalid("coupled boundary stiffness k_bb is not positive definite")
        })?;
        let static_map = chol.solve(&k_bi);
        let compliance_w = chol.solve(&direction);
        let gap_map = direction.transpose() * &static_map;
        let d = direction.transpose() * &compliance_w;
        let delassus = Delassus::new((&d + d.transpose()) * 0.5)?;
        Ok(CoupledSystem {
            components,
            boundary_offsets,
            modal_offsets,
            k_bi,
            k_ii,
            direction,
            problem,
            static_map,
            compliance_w,
            gap_map,
            delassus,
            k_bb,
        })
    }

    pub fn components(&self) -> &[ReducedModel] {
        &self.components
    }

    pub fn boundary_offset(&self, component: usize) -> usize {
        self.boundary_offsets[component]
    }

    pub fn modal_offset(&self, component: usize) -> usize {
        self.modal_offsets[component]
    }

    pub fn n_boundary(&self) -> usize {
        self.k_bb.nrows()
    }

    pub fn n_modal(&self) -> usize {
        self.k_ii.nrows()
    }

    pub fn n_pairs(&self) -> usize {
        self.problem.pairing.len()
    }

    pub fn problem(&self) -> &ContactProblem {
        &self.problem
    }

    pub fn direction_map(&self) -> &DMatrix<f64> {
        &self.direction
    }

    pub fn delassus(&self) -> &DMatrix<f64> {
        self.delassus.matrix()
    }

    /// Quasi-static boundary equilibrium with unilateral contact at fixed η:
    /// `k_bb q_b + k_bi η − W λ = 0`, `0 ≤ g ⊥ λ ≥ 0`.
    pub fn solve_static_contact(
        &self,
        eta: &DVector<f64>,
        warm: Option<&DVector<f64>>,
    ) -> Result<(DVector<f64>, LcpSolution)> {
        if eta.len() != self.n_modal() {
            return Err(Error::Dimension(format!(
                "expected {} modal coordinates, got {}",
                self.n_modal(),
                eta.len()
            )));
        }
        let mut free_gap = self.problem.initial_gap.clone();
        free_gap.gemv(-1.0, &self.gap_map, eta, 1.0);
        let sol = self.delassus.solve(&free_gap, warm, &self.problem.options)?;
        let mut q_b = &self.compliance_w * &sol.lambda;
        q_b.gemv(-1.0, &self.static_map, eta, 1.0);
        Ok((q_b, sol))
    }

    /// η̈ = −(k_biᵀ q_b + k_ii η).
    pub fn modal_acceleration(&self, q_b: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        -(self.k_bi.tr_mul(q_b) + &self.k_ii * eta)
    }

    /// Contact solve at the initial configuration and the backward half
    /// step of the velocities.
    pub fn initial_state(
        &self,
        eta: DVector<f64>,
        eta_dot: &DVector<f64>,
        dt: f64,
    ) -> Result<SimState> {
        if eta_dot.len() != self.n_modal() {
            return Err(Error::Dimension("initial modal velocity length".into()));
        }
        let (q_b, sol) = self.solve_static_contact(&eta, None)?;
        let acc = self.modal_acceleration(&q_b, &eta);
        Ok(SimState {
            time: 0.0,
            step: 0,
            eta_dot_half: eta_dot - acc * (0.5 * dt),
            q_b,
            eta,
            lambda: sol.lambda,
            gap: sol.gap,
            residual: sol.residual,
        })
    }

    /// One semi-explicit step: with `(q_bⁿ, λⁿ)` already in equilibrium with
    /// ηⁿ, update
    /// η̇^{n+1/2} = η̇^{n−1/2} − dt (k_biᵀ q_bⁿ + k_ii ηⁿ),
    /// η^{n+1} = ηⁿ + dt η̇^{n+1/2},
    /// then solve the contact at η^{n+1}.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        let mut eta_dot_half = state.eta_dot_half.clone();
        eta_dot_half.gemv_tr(-dt, &self.k_bi, &state.q_b, 1.0);
        eta_dot_half.gemv(-dt, &self.k_ii, &state.eta, 1.0);
        let mut eta = state.eta.clone();
        eta.axpy(dt, &eta_dot_half, 1.0);
        let (q_b, sol) = self.solve_static_contact(&eta, Some(&state.lambda))?;
        Ok(SimState {
            time: state.time + dt,
            step: state.step + 1,
            q_b,
            eta,
            eta_dot_half,
            lambda: sol.lambda,
            gap: sol.gap,
            residual: sol.residual,
        })
    }

    /// In-place [`CoupledSystem::step`] without heap allocation.
    pub fn step_mut(&self, state: &mut SimState, dt: f64, free_gap: &mut DVector<f64>) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        mul_tr_add(&mut state.eta_dot_half, -dt, &self.k_bi, &state.q_b);
        mul_add(&mut state.eta_dot_half, -dt, &self.k_ii, &state.eta);
        state.eta.axpy(dt, &state.eta_dot_half, 1.0);
        free_gap.copy_from(&self.problem.initial_gap);
        mul_add(free_gap, -1.0, &self.gap_map, &state.eta);
        let (_, residual) =
            self.delassus
                .solve_into(free_gap, &mut state.lambda, &mut state.gap, &self.problem.options)?;
        state.q_b.fill(0.0);
        mul_add(&mut state.q_b, 1.0, &self.compliance_w, &state.lambda);
        mul_add(&mut state.q_b, -1.0, &self.static_map, &state.eta);
        state.residual = residual;
        state.time += dt;
        state.step += 1;
        Ok(())
    }

    /// Largest modal frequency with all contacts open and with all closed.
    pub fn max_frequency(&self) -> f64 {
        let chol = Cholesky::new(self.k_bb.clone()).expect("checked at construction");
        let open = &self.k_ii - self.k_bi.transpose() * chol.solve(&self.k_bi);
        let mut omega = sym_max_eigenvalue(&open);
        if self.n_pairs() > 0 {
            let d = self.delassus.matrix();
            if let Some(dinv) = Cholesky::new(d.clone()).map(|c| c.inverse()) {
                let closed = &open + self.gap_map.transpose() * dinv * &self.gap_map;
                omega = omega.max(sym_max_eigenvalue(&closed));
            }
        }
        omega.max(0.0).sqrt()
    }

    /// Error when `dt ω_max > 2`, warning above 0.5.
    pub fn check_step(&self, dt: f64) -> Result<f64> {
        let product = dt * self.max_frequency();
        if product > 2.0 {
            return Err(Error::UnstableStep { dt, product });
        }
        if product > 0.5 {
            warn!("dt * omega_max = {product:.3}: close to the explicit stability limit");
        }
        Ok(product)
    }

    /// Kinetic energy of the modal velocities plus the strain energy of the
    /// reduced stiffness.
    pub fn energy(&self, q_b: &DVector<f64>, eta: &DVector<f64>, eta_dot: &DVector<f64>) -> f64 {
        let strain = bilinear(q_b, &self.k_bb, q_b)
            + 2.0 * bilinear(q_b, &self.k_bi, eta)
            + bilinear(eta, &self.k_ii, eta);
        0.5 * (eta_dot.norm_squared() + strain)
    }
}

/// y += α M x, column-major slices.
fn mul_add(y: &mut DVector<f64>, alpha: f64, m: &DMatrix<f64>, x: &DVector<f64>) {
    let rows = m.nrows();
    let y = y.as_mut_slice();
    for (col, xj) in m.as_slice().chunks_exact(rows.max(1)).zip(x.iter()) {
        let s = alpha * xj;
        y.iter_mut().zip(col).for_each(|(yi, c)| *yi += s * c);
    }
}

/// y += α Mᵀ x.
fn mul_tr_add(y: &mut DVector<f64>, alpha: f64, m: &DMatrix<f64>, x: &DVector<f64>) {
    let (rows, x) = (m.nrows(), x.as_slice());
    for (col, yj) in m.as_slice().chunks_exact(rows.max(1)).zip(y.iter_mut()) {
        *yj += alpha * col.iter().zip(x).map(|(c, v)| c * v).sum::<f64>();
    }
}

/// aᵀ M b.
fn bilinear(a: &DVector<f64>, m: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let (a, rows) = (a.as_slice(), m.nrows());
    m.as_slice()
        .chunks_exact(rows.max(1))
        .zip(b.iter())
        .map(|(col, bj)| col.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() * bj)
        .sum()
}

fn sym_max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.max()
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Tolerances and iteration control of the contact solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactOptions {
    /// Multiplies the diagonal penalty `1/D_jj`.
    pub penalty_scale: f64,
    /// Bound on `max_j |min(g_j/D_jj, λ_j)|` divided by the force scale.
    pub complementarity_tol: f64,
    pub max_iterations: usize,
    /// Largest accepted interpenetration, m.
    pub gap_tol: f64,
}

impl Default for ContactOptions {
    fn default() -> Self {
        ContactOptions {
            penalty_scale: 1.0,
            complementarity_tol: 1e-10,
            max_iterations: 500,
            gap_tol: 1e-12,
        }
    }
}

impl ContactOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_scale > 0.0 && self.penalty_scale < 2.0) {
            return Err(Error::invalid(format!(
                "contact.penalty_scale must be in (0, 2), got {}",
                self.penalty_scale
            )));
        }
        if !(self.complementarity_tol > 0.0) {
            return Err(Error::invalid("contact.complementarity_tol must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("contact.max_iterations must be > 0"));
        }
        if !(self.gap_tol >= 0.0) {
            return Err(Error::invalid("contact.gap_tol_m must be >= 0"));
        }
        Ok(())
    }
}

/// Result of one complementarity solve `g = D λ + g_free`, `0 ≤ g ⊥ λ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcpSolution {
    pub lambda: DVector<f64>,
    pub gap: DVector<f64>,
    pub iterations: usize,
    /// Scaled complementarity residual at exit.
    pub residual: f64,
}

/// Pre-factored Delassus operator `D = Wᵀ k_bb⁻¹ W` with its Jacobi data.
#[derive(Debug, Clone)]
pub struct Delassus {
    matrix: DMatrix<f64>,
    diagonal: DVector<f64>,
    relaxation: f64,
}

impl Delassus {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Dimension("Delassus matrix must be square".into()));
        }
        let diagonal = matrix.diagonal();
        if let Some(j) = diagonal.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::invalid(format!(
                "contact pair {j} has non-positive compliance {}",
                diagonal[j]
            )));
        }
        // Jacobi on the diagonally scaled operator converges for a relaxation
        // below 2/μ_max; 1.8/μ_max leaves a margin.
        let relaxation = if n <= 1 {
            1.0
        } else {
            let scale = diagonal.map(|d| 1.0 / d.sqrt());
            let scaled = DMatrix::from_fn(n, n, |i, j| matrix[(i, j)] * scale[i] * scale[j]);
            let scaled = (&scaled + scaled.transpose()) * 0.5;
            let mu = SymmetricEigen::new(scaled).eigenvalues.max();
            (1.8 / mu).min(1.0)
        };
        Ok(Delassus {
            matrix,
            diagonal,
            relaxation,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Projected Jacobi iteration of the augmented Lagrangian
    /// `λ ← max(0, λ − ρ_j g(λ))`, `ρ_j = ρ_pen ω / D_jj`.
    pub fn solve(
        &self,
        free_gap: &DVector<f64>,
        warm: Option<&DVector<f64>>,
        options: &ContactOptions,
    ) -> Result<LcpSolution> {
        let n = self.len();
        if free_gap.len() != n {
            return Err(Error::Dimension(format!(
                "{} pairs but {} free gaps",
                n,
                free_gap.len()
            )));
        }
        if n == 0 {
            return Ok(LcpSolution {
                lambda: DVector::zeros(0),
                gap: DVector::zeros(0),
                iterations: 0,
                residual: 0.0,
            });
        }
        // All pairs open with λ = 0: nothing to iterate.
        if free_gap.iter().all(|&g| g >= 0.0) && warm.is_none_or(|w| w.iter().all(|&l| l == 0.0))
        {
            return Ok(LcpSolution {
                lambda: DVector::zeros(n),
                gap: free_gap.clone(),
                iterations: 0,
                residual: 0.0,
            });
        }
        let mut lambda = match warm {
            Some(w) if w.len() == n => w.map(|l| l.max(0.0)),
            _ => DVector::zeros(n),
        };
        let mut gap = free_gap.clone();
        let (iterations, residual) = self.iterate(free_gap, &mut lambda, &mut gap, options)?;
        Ok(LcpSolution {
            lambda,
            gap,
            iterations,
            residual,
        })
    }

    /// In-place variant of [`Delassus::solve`]: `lambda` holds the warm start
    /// on entry and the solution on exit. Returns iterations and residual.
    pub fn solve_into(
        &self,
        free_gap: &DVector<f64>,
        lambda: &mut DVector<f64>,
        gap: &mut DVector<f64>,
        options: &ContactOptions,
    ) -> Result<(usize, f64)> {
        let n = self.len();
        if free_gap.len() != n || lambda.len() != n || gap.len() != n {
            return Err(Error::Dimension(format!("{n} pairs but mismatched work vectors")));
        }
        if free_gap.iter().all(|&g| g >= 0.0) && lambda.iter().all(|&l| l <= 0.0) {
            lambda.fill(0.0);
            gap.copy_from(free_gap);
            return Ok((0, 0.0));
        }
        lambda.iter_mut().for_each(|l| *l = l.max(0.0));
        self.iterate(free_gap, lambda, gap, options)
    }

    fn iterate(
        &self,
        free_gap: &DVector<f64>,
        lambda: &mut DVector<f64>,
        gap: &mut DVector<f64>,
        options: &ContactOptions,
    ) -> Result<(usize, f64)> {
        let n = self.len();
        let step = options.penalty_scale * self.relaxation;
        let force_scale = free_gap
            .iter()
            .zip(self.diagonal.iter())
            .map(|(g, d)| (g / d).abs())
            .fold(f64::MIN_POSITIVE, f64::max);
        let mut residual = f64::INFINITY;
        for it in 0..=options.max_iterations {
            gap.copy_from(free_gap);
            gap.gemv(1.0, &self.matrix, lambda, 1.0);
            residual = self.residual(lambda, gap, force_scale);
            if residual <= options.complementarity_tol {
                self.check_penetration(gap, options)?;
                return Ok((it, residual));
            }
            if it == options.max_iterations {
                break;
            }
            for j in 0..n {
                lambda[j] = (lambda[j] - step * gap[j] / self.diagonal[j]).max(0.0);
            }
        }
        let penetration = gap.iter().fold(0.0f64, |a, &g| a.max(-g));
        Err(Error::ContactNotConverged {
            iterations: options.max_iterations,
            residual,
            penetration,
        })
    }

    /// `max_j |min(g_j / D_jj, λ_j)|` relative to `force_scale`.
    fn residual(&self, lambda: &DVector<f64>, gap: &DVector<f64>, force_scale: f64) -> f64 {
        let scale = lambda.iter().fold(force_scale, |a, &l| a.max(l));
        (0..lambda.len())
            .map(|j| (gap[j] / self.diagonal[j]).min(lambda[j]).abs())
            .fold(0.0, f64::max)
            / scale
    }

    fn check_penetration(&self, gap: &DVector<f64>, options: &ContactOptions) -> Result<()> {
        match gap.iter().enumerate().find(|(_, &g)| g < -options.gap_tol) {
            Some((pair, &g)) => Err(Error::Penetration {
                pair,
                penetration: -g,
            }),
            None => Ok(()),
        }
    }
}

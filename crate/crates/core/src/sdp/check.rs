//! Post-hoc verification of solutions against the original complex data.

use super::{SdpProblem, SdpSolution, Sense, SolverSettings};
use crate::error::Result;
use crate::linalg::{eigvalsh, ComplexMatrix};

/// Residuals of a solution measured on the original problem.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Residuals {
    /// Largest `|Σ_b Tr[A_ib X_b] - b_i|`.
    pub primal_equality: f64,
    /// Largest entry of the difference between the reported dual slack and
    /// the slack recomputed from the multipliers.
    pub dual_equality: f64,
    /// Smallest eigenvalue over all primal blocks.
    pub primal_min_eig: f64,
    /// Smallest eigenvalue over the recomputed dual slacks.
    pub dual_min_eig: f64,
    /// `primal - dual`.
    pub gap: f64,
    /// Largest block size, used to scale eigenvalue tolerances.
    pub max_block: usize,
}

impl Residuals {
    pub fn acceptable(&self, settings: &SolverSettings, primal_value: f64) -> bool {
        let tol = settings.res_tol;
        self.primal_equality <= 10.0 * tol
            && self.dual_equality <= 10.0 * tol
            && self.primal_min_eig >= -tol
            && self.dual_min_eig >= -(10.0 + self.max_block as f64) * tol
            && self.gap.abs() <= 1.01 * settings.gap_tol * (1.0 + primal_value.abs()) + 1e-14
    }
}

/// Recomputes residuals of `sol` from the problem data alone.
pub fn verify_solution(problem: &SdpProblem, sol: &SdpSolution) -> Result<Residuals> {
    let primal_equality = problem
        .constraints
        .iter()
        .zip(&problem.rhs)
        .map(|(f, b)| (f.eval(&sol.blocks) - b).abs())
        .fold(0.0, f64::max);

    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut dual_equality: f64 = 0.0;
    let mut dual_min_eig = f64::INFINITY;
    let mut primal_min_eig = f64::INFINITY;
    let mut max_block = 0;
    for (bi, spec) in problem.blocks.iter().enumerate() {
        max_block = max_block.max(spec.size);
        // Z = sign * (C - Σ y_i A_i)
        let mut z = problem.objective.block_matrix(bi, spec.size);
        for (f, &y) in problem.constraints.iter().zip(&sol.multipliers) {
            if y == 0.0 {
                continue;
            }
            for &(b, i, j, a) in &f.entries {
                if b == bi {
                    z[(i, j)] -= a * y;
                }
            }
        }
        let z = z.scale(sign);
        dual_equality = dual_equality.max(z.max_abs_diff(&sol.dual_slacks[bi]));
        dual_min_eig = dual_min_eig.min(min_eig(&z)?);
        primal_min_eig = primal_min_eig.min(min_eig(&sol.blocks[bi])?);
    }
    Ok(Residuals {
        primal_equality,
        dual_equality,
        primal_min_eig,
        dual_min_eig,
        gap: sol.primal_value - sol.dual_value,
        max_block,
    })
}

fn min_eig(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvalsh(&m.hermitian_part())?
        .last()
        .copied()
        .unwrap_or(0.0))
}

//! Semidefinite programming over Hermitian and real symmetric blocks.
//!
//! Problems are stated in the standard form
//!
//! ```text
//! optimize   Σ_b Tr[C_b X_b] + offset
//! subject to Σ_b Tr[A_ib X_b] = b_i,   X_b ⪰ 0,
//! ```
//!
//! with Hermitian coefficients stored sparsely. Complex blocks are embedded
//! into real symmetric blocks of twice the size and solved by a primal-dual
//! interior-point method with Nesterov-Todd scaling and Mehrotra
//! predictor-corrector steps.
//!
//! Multipliers follow the natural sign convention for each sense: a
//! minimization has dual slack `Z = C - Σ y_i A_i`, a maximization has
//! `Z = Σ y_i A_i - C`. In both cases the dual value is `bᵀy + offset`.

mod check;
mod dense;
mod ipm;
mod model;
mod realify;

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Complex64, ComplexMatrix};

pub use check::{verify_solution, Residuals};
pub use model::{BlockId, GroupId, MatExpr, Model, Term};
pub use realify::realify_matrix;

/// Whether a block holds a real symmetric or a complex Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub name: String,
    pub size: usize,
    pub field: Field,
}

/// A linear functional `X ↦ Σ_b Tr[A_b X_b]` with Hermitian `A_b` stored as
/// `(block, i, j, A_b[i, j])` entries. Both triangles are listed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Functional {
    pub entries: Vec<(usize, usize, usize, Complex64)>,
}

impl Functional {
    /// Merges duplicate positions and drops exact zeros.
    pub fn canonicalize(&mut self) {
        self.entries.sort_by_key(|&(b, i, j, _)| (b, i, j));
        let mut merged: Vec<(usize, usize, usize, Complex64)> =
            Vec::with_capacity(self.entries.len());
        for &(b, i, j, v) in &self.entries {
            match merged.last_mut() {
                Some(last) if (last.0, last.1, last.2) == (b, i, j) => last.3 += v,
                _ => merged.push((b, i, j, v)),
            }
        }
        merged.retain(|e| e.3.re != 0.0 || e.3.im != 0.0);
        self.entries = merged;
    }

    pub fn eval(&self, blocks: &[ComplexMatrix]) -> f64 {
        self.entries
            .iter()
            .map(|&(b, i, j, a)| (a * blocks[b][(j, i)]).re)
            .sum()
    }

    /// Dense Hermitian coefficient on one block.
    pub fn block_matrix(&self, block: usize, size: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(size, size);
        for &(b, i, j, a) in &self.entries {
            if b == block {
                m[(i, j)] += a;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub sense: Sense,
    pub objective: Functional,
    pub offset: f64,
    pub constraints: Vec<Functional>,
    pub rhs: Vec<f64>,
}

impl SdpProblem {
    /// Checks indices, Hermiticity of coefficients and the constraint count.
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::shape("an SDP needs at least one block"));
        }
        if self.constraints.len() != self.rhs.len() {
            return Err(Error::shape(format!(
                "{} constraints but {} right-hand sides",
                self.constraints.len(),
                self.rhs.len()
            )));
        }
        let dof: usize = self
            .blocks
            .iter()
            .map(|b| match b.field {
                Field::Real => b.size * (b.size + 1) / 2,
                Field::Complex => b.size * b.size,
            })
            .sum();
        if self.constraints.len() > dof {
            return Err(Error::shape(format!(
                "{} equality constraints exceed the {dof} real degrees of freedom",
                self.constraints.len()
            )));
        }
        for f in std::iter::once(&self.objective).chain(&self.constraints) {
            for (bi, spec) in self.blocks.iter().enumerate() {
                let mut any = false;
                for &(b, i, j, _) in &f.entries {
                    if b >= self.blocks.len() {
                        return Err(Error::shape(format!("block index {b} out of range")));
                    }
                    if b == bi {
                        any = true;
                        if i >= spec.size || j >= spec.size {
                            return Err(Error::shape(format!(
                                "entry ({i}, {j}) outside block {} of size {}",
                                spec.name, spec.size
                            )));
                        }
                    }
                }
                if any {
                    let dev = f.block_matrix(bi, spec.size).hermitian_deviation();
                    if dev > 1e-12 {
                        return Err(Error::NotHermitian(dev));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Tolerances and limits for the interior-point solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub gap_tol: f64,
    pub res_tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            gap_tol: 1e-8,
            res_tol: 1e-9,
            max_iters: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    NumericalFailure,
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::PrimalInfeasible => "primal infeasible",
            SolverStatus::DualInfeasible => "dual infeasible",
            SolverStatus::IterationLimit => "iteration limit",
            SolverStatus::NumericalFailure => "numerical failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolverStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    /// Primal block values.
    pub blocks: Vec<ComplexMatrix>,
    /// Dual slack blocks.
    pub dual_slacks: Vec<ComplexMatrix>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl SdpSolution {
    pub fn gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs()
    }

    /// Turns a non-optimal status into an error.
    pub fn require_optimal(self, what: &str) -> Result<Self> {
        if self.status == SolverStatus::Optimal {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                detail: format!(
                    "{what}: primal {:.6e}, dual {:.6e}, after {} iterations",
                    self.primal_value, self.dual_value, self.iterations
                ),
            })
        }
    }
}

/// Solves an SDP and re-verifies the result with an independent residual
/// check. Optimal results that fail the check are reported as
/// [`SolverStatus::NumericalFailure`].
pub fn solve_sdp(problem: &SdpProblem, settings: &SolverSettings) -> Result<SdpSolution> {
    problem.validate()?;
    let real = realify::realify_problem(problem);
    let raw = ipm::solve(&real, settings);
    let mut sol = realify::lift_solution(problem, raw);
    sol.residuals = verify_solution(problem, &sol)?;
    if sol.status == SolverStatus::Optimal && !sol.residuals.acceptable(settings, sol.primal_value)
    {
        sol.status = SolverStatus::NumericalFailure;
    }
    Ok(sol)
}

/// Outcome of a strict-feasibility probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOutcome {
    pub feasible: bool,
    /// Largest `t` such that some feasible point has every block `⪰ t I`.
    /// Negative infinity when the equality constraints are inconsistent.
    pub margin: f64,
}

/// Default margin below which a probe reports infeasibility.
pub const PROBE_TOL: f64 = 1e-8;

/// Decides whether the constraints of `problem` admit a point with every
/// block positive semidefinite, by maximizing the smallest eigenvalue over
/// the affine solution set. The objective of `problem` is ignored.
pub fn feasibility_probe(problem: &SdpProblem, settings: &SolverSettings) -> Result<ProbeOutcome> {
    feasibility_probe_with_tol(problem, settings, PROBE_TOL)
}

pub fn feasibility_probe_with_tol(
    problem: &SdpProblem,
    settings: &SolverSettings,
    tol: f64,
) -> Result<ProbeOutcome> {
    problem.validate()?;
    let real = realify::realify_problem(problem);
    let margin = ipm::probe(&real, settings)?;
    Ok(ProbeOutcome {
        feasible: margin >= -tol,
        margin,
    })
}

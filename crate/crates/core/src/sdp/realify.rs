//! Embedding of Hermitian blocks into real symmetric blocks.
//!
//! A Hermitian `H = A + iB` maps to `[[A, -B], [B, A]]`, which is positive
//! semidefinite exactly when `H` is. Trace inner products double under the
//! map, so real blocks are scaled by two as well and every right-hand side
//! is doubled. Reported objective values are halved back.

use nalgebra::DMatrix;

use super::ipm::{RawSolution, RealProblem};
use super::{Field, Functional, SdpProblem, SdpSolution, Sense};
use crate::linalg::{c64, ComplexMatrix};

/// `[[Re H, -Im H], [Im H, Re H]]`
pub fn realify_matrix(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.rows();
    ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        let v = match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        };
        c64(v, 0.0)
    })
}

fn realify_functional(problem: &SdpProblem, f: &Functional) -> Vec<(usize, usize, usize, f64)> {
    let mut out = Vec::with_capacity(2 * f.entries.len());
    for &(b, i, j, a) in &f.entries {
        match problem.blocks[b].field {
            Field::Real => out.push((b, i, j, 2.0 * a.re)),
            Field::Complex => {
                let n = problem.blocks[b].size;
                out.push((b, i, j, a.re));
                out.push((b, i + n, j + n, a.re));
                out.push((b, i, j + n, -a.im));
                out.push((b, i + n, j, a.im));
            }
        }
    }
    out.sort_by_key(|&(b, i, j, _)| (b, i, j));
    let mut merged: Vec<(usize, usize, usize, f64)> = Vec::with_capacity(out.len());
    for (b, i, j, v) in out {
        match merged.last_mut() {
            Some(last) if (last.0, last.1, last.2) == (b, i, j) => last.3 += v,
            _ => merged.push((b, i, j, v)),
        }
    }
    merged.retain(|e| e.3 != 0.0);
    merged
}

pub(crate) fn realify_problem(problem: &SdpProblem) -> RealProblem {
    let sizes = problem
        .blocks
        .iter()
        .map(|b| match b.field {
            Field::Real => b.size,
            Field::Complex => 2 * b.size,
        })
        .collect();
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let objective = realify_functional(problem, &problem.objective)
        .into_iter()
        .map(|(b, i, j, v)| (b, i, j, sign * v))
        .collect();
    RealProblem {
        sizes,
        objective,
        rows: problem
            .constraints
            .iter()
            .map(|f| realify_functional(problem, f))
            .collect(),
        b: problem.rhs.iter().map(|v| 2.0 * v).collect(),
        offset: sign * problem.offset,
    }
}

fn unrealify(m: &DMatrix<f64>, field: Field, scale: f64) -> ComplexMatrix {
    match field {
        Field::Real => {
            ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| c64(scale * m[(i, j)], 0.0))
        }
        Field::Complex => {
            let n = m.nrows() / 2;
            ComplexMatrix::from_fn(n, n, |i, j| {
                let re = 0.5 * (m[(i, j)] + m[(i + n, j + n)]);
                let im = 0.5 * (m[(i + n, j)] - m[(i, j + n)]);
                c64(re, im)
            })
            .hermitian_part()
        }
    }
}

pub(crate) fn lift_solution(problem: &SdpProblem, raw: RawSolution) -> SdpSolution {
    let blocks: Vec<ComplexMatrix> = problem
        .blocks
        .iter()
        .zip(&raw.x)
        .map(|(spec, x)| unrealify(x, spec.field, 1.0))
        .collect();
    // Real blocks of the dual slack carry the factor two of the embedding.
    let dual_slacks = problem
        .blocks
        .iter()
        .zip(&raw.z)
        .map(|(spec, z)| unrealify(z, spec.field, 0.5))
        .collect();
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let multipliers: Vec<f64> = raw.y.iter().map(|v| sign * v).collect();
    let primal_value = problem.objective.eval(&blocks) + problem.offset;
    let dual_value = problem
        .rhs
        .iter()
        .zip(&multipliers)
        .map(|(b, y)| b * y)
        .sum::<f64>()
        + problem.offset;
    SdpSolution {
        status: raw.status,
        primal_value,
        dual_value,
        blocks,
        dual_slacks,
        multipliers,
        iterations: raw.iterations,
        residuals: Default::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvalsh, pauli};

    #[test]
    fn realified_pauli_y_spectrum() {
        let r = realify_matrix(&pauli::y());
        let vals = eigvalsh(&r).unwrap();
        let expected = [1.0, 1.0, -1.0, -1.0];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-14);
        }
    }
}

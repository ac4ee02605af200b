//! A small modeling layer: matrix-valued affine expressions in the block
//! variables, expanded into scalar equality constraints.

use std::ops::{Add, Neg, Sub};

use super::{BlockSpec, Field, Functional, SdpProblem, SdpSolution, Sense};
use crate::linalg::{c64, Complex64, ComplexMatrix, TensorSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupId(pub usize);

/// `coef * X_block[i, j]`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub coef: Complex64,
}

/// A matrix whose entries are affine functions of the block variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MatExpr {
    rows: usize,
    cols: usize,
    terms: Vec<Vec<Term>>,
    constant: ComplexMatrix,
}

impl MatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatExpr {
            rows,
            cols,
            terms: vec![Vec::new(); rows * cols],
            constant: ComplexMatrix::zeros(rows, cols),
        }
    }

    pub fn constant(m: &ComplexMatrix) -> Self {
        let mut e = Self::zeros(m.rows(), m.cols());
        e.constant = m.clone();
        e
    }

    /// Builds an expression entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Vec<Term>) -> Self {
        let mut e = Self::zeros(rows, cols);
        for p in 0..rows {
            for q in 0..cols {
                e.terms[p * cols + q] = f(p, q);
            }
        }
        e
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, p: usize, q: usize) -> &[Term] {
        &self.terms[p * self.cols + q]
    }

    pub fn constant_part(&self) -> &ComplexMatrix {
        &self.constant
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_complex(c64(s, 0.0))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        MatExpr {
            rows: self.rows,
            cols: self.cols,
            terms: self
                .terms
                .iter()
                .map(|ts| {
                    ts.iter()
                        .map(|t| Term {
                            coef: t.coef * s,
                            ..*t
                        })
                        .collect()
                })
                .collect(),
            constant: self.constant.scale_complex(s),
        }
    }

    /// Partial trace over the factors flagged in `traced` of a square
    /// expression on `dims[0] ⊗ dims[1] ⊗ ...`.
    pub fn trace_out(&self, dims: &[usize], traced: &[bool]) -> Self {
        let n: usize = dims.iter().product();
        assert!(
            self.rows == n && self.cols == n,
            "trace_out: dimensions do not match"
        );
        let split = TensorSplit::new(dims, traced);
        let k = split.kept_dim;
        let mut out = Self::zeros(k, k);
        for p in 0..k {
            for q in 0..k {
                let cell = &mut out.terms[p * k + q];
                let mut c = c64(0.0, 0.0);
                for t in 0..split.marked_dim {
                    let (i, j) = (split.join(p, t), split.join(q, t));
                    cell.extend_from_slice(&self.terms[i * n + j]);
                    c += self.constant[(i, j)];
                }
                out.constant[(p, q)] = c;
            }
        }
        out
    }

    /// Tensors the expression with identities: the expression acts on the
    /// factors with `present[k] == true` of `dims`, in order, and the
    /// identity acts on the rest.
    pub fn embed(&self, dims: &[usize], present: &[bool]) -> Self {
        let absent: Vec<bool> = present.iter().map(|p| !p).collect();
        let split = TensorSplit::new(dims, &absent);
        assert!(
            self.rows == split.kept_dim && self.cols == split.kept_dim,
            "embed: expression size does not match the present factors"
        );
        let n: usize = dims.iter().product();
        let k = split.kept_dim;
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            let (pi, ti) = split.split(i);
            for j in 0..n {
                let (pj, tj) = split.split(j);
                if ti == tj {
                    out.terms[i * n + j] = self.terms[pi * k + pj].clone();
                    out.constant[(i, j)] = self.constant[(pi, pj)];
                }
            }
        }
        out
    }

    /// `I_d ⊗ self`
    pub fn identity_kron(&self, d: usize) -> Self {
        self.embed(&[d, self.rows], &[false, true])
    }

    /// `self ⊗ I_d`
    pub fn kron_identity(&self, d: usize) -> Self {
        self.embed(&[self.rows, d], &[true, false])
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for p in 0..rows {
            for q in 0..cols {
                out.terms[p * cols + q] = self.terms[(r0 + p) * self.cols + c0 + q].clone();
            }
        }
        out.constant = self.constant.submatrix(r0, c0, rows, cols);
        out
    }

    /// `Tr[self]` as a 1x1 expression.
    pub fn trace(&self) -> Self {
        let mut out = Self::zeros(1, 1);
        for p in 0..self.rows.min(self.cols) {
            out.terms[0].extend_from_slice(&self.terms[p * self.cols + p]);
        }
        out.constant[(0, 0)] = self.constant.trace();
        out
    }

    /// `Tr[m · self]` as a 1x1 expression.
    pub fn inner(&self, m: &ComplexMatrix) -> Self {
        assert!(
            m.rows() == self.cols && m.cols() == self.rows,
            "inner: shape mismatch"
        );
        let mut out = Self::zeros(1, 1);
        let mut c = c64(0.0, 0.0);
        for p in 0..self.rows {
            for q in 0..self.cols {
                let w = m[(q, p)];
                if w.re == 0.0 && w.im == 0.0 {
                    continue;
                }
                out.terms[0].extend(self.terms[p * self.cols + q].iter().map(|t| Term {
                    coef: t.coef * w,
                    ..*t
                }));
                c += w * self.constant[(p, q)];
            }
        }
        out.constant[(0, 0)] = c;
        out
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "expression shapes {}x{} and {}x{} differ",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let terms = self
            .terms
            .iter()
            .zip(&other.terms)
            .map(|(a, b)| {
                let mut v = a.clone();
                v.extend(b.iter().map(|t| Term {
                    coef: t.coef * sign,
                    ..*t
                }));
                v
            })
            .collect();
        MatExpr {
            rows: self.rows,
            cols: self.cols,
            terms,
            constant: &self.constant + &other.constant.scale(sign),
        }
    }

    /// Evaluates the expression at given block values.
    pub fn eval(&self, blocks: &[ComplexMatrix]) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |p, q| {
            self.constant[(p, q)]
                + self.terms[p * self.cols + q]
                    .iter()
                    .map(|t| t.coef * blocks[t.block][(t.i, t.j)])
                    .sum::<Complex64>()
        })
    }
}

impl Add<&MatExpr> for &MatExpr {
    type Output = MatExpr;
    fn add(self, rhs: &MatExpr) -> MatExpr {
        self.combine(rhs, 1.0)
    }
}

impl Sub<&MatExpr> for &MatExpr {
    type Output = MatExpr;
    fn sub(self, rhs: &MatExpr) -> MatExpr {
        self.combine(rhs, -1.0)
    }
}

impl Add<MatExpr> for MatExpr {
    type Output = MatExpr;
    fn add(self, rhs: MatExpr) -> MatExpr {
        self.combine(&rhs, 1.0)
    }
}

impl Sub<MatExpr> for MatExpr {
    type Output = MatExpr;
    fn sub(self, rhs: MatExpr) -> MatExpr {
        self.combine(&rhs, -1.0)
    }
}

impl Neg for &MatExpr {
    type Output = MatExpr;
    fn neg(self) -> MatExpr {
        self.scale(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Diag,
    Re,
    Im,
}

#[derive(Debug, Clone)]
struct Group {
    rows: usize,
    cols: usize,
    hermitian: bool,
    /// `(p, q, kind, constraint index)`
    map: Vec<(usize, usize, RowKind, usize)>,
}

/// Collects blocks, equality groups and an objective into an [`SdpProblem`].
#[derive(Debug, Clone)]
pub struct Model {
    blocks: Vec<BlockSpec>,
    constraints: Vec<Functional>,
    rhs: Vec<f64>,
    groups: Vec<Group>,
    objective: Functional,
    offset: f64,
    sense: Sense,
}

impl Default for Model {
    fn default() -> Self {
        Model::new()
    }
}

impl Model {
    pub fn new() -> Self {
        Model {
            blocks: Vec::new(),
            constraints: Vec::new(),
            rhs: Vec::new(),
            groups: Vec::new(),
            objective: Functional::default(),
            offset: 0.0,
            sense: Sense::Minimize,
        }
    }

    pub fn block(&mut self, name: &str, size: usize, field: Field) -> BlockId {
        self.blocks.push(BlockSpec {
            name: name.to_string(),
            size,
            field,
        });
        BlockId(self.blocks.len() - 1)
    }

    pub fn block_size(&self, b: BlockId) -> usize {
        self.blocks[b.0].size
    }

    pub fn var(&self, b: BlockId) -> MatExpr {
        let n = self.blocks[b.0].size;
        MatExpr::from_fn(n, n, |i, j| {
            vec![Term {
                block: b.0,
                i,
                j,
                coef: c64(1.0, 0.0),
            }]
        })
    }

    /// `x · I_n` for a 1x1 block `x`.
    pub fn scalar_identity(&self, b: BlockId, n: usize) -> MatExpr {
        assert_eq!(
            self.blocks[b.0].size, 1,
            "scalar_identity needs a 1x1 block"
        );
        MatExpr::from_fn(n, n, |i, j| {
            if i == j {
                vec![Term {
                    block: b.0,
                    i: 0,
                    j: 0,
                    coef: c64(1.0, 0.0),
                }]
            } else {
                Vec::new()
            }
        })
    }

    fn functional(terms: &[Term], factor: Complex64) -> Functional {
        // Re(c X_ij) = Tr[A X] with A_ji = c/2 and A_ij = conj(c)/2.
        let mut f = Functional::default();
        for t in terms {
            let c = t.coef * factor;
            f.entries.push((t.block, t.j, t.i, c * 0.5));
            f.entries.push((t.block, t.i, t.j, c.conj() * 0.5));
        }
        f.canonicalize();
        f
    }

    fn push_row(&mut self, terms: &[Term], factor: Complex64, rhs: f64) -> usize {
        self.constraints.push(Self::functional(terms, factor));
        self.rhs.push(rhs);
        self.constraints.len() - 1
    }

    /// Constrains a Hermitian expression to equal a Hermitian matrix,
    /// entry by entry on the upper triangle.
    pub fn equal(&mut self, expr: &MatExpr, rhs: &ComplexMatrix) -> GroupId {
        assert!(
            expr.rows == expr.cols && rhs.rows() == expr.rows && rhs.cols() == expr.cols,
            "equal: shape mismatch"
        );
        let target = rhs - &expr.constant;
        let n = expr.rows;
        let mut map = Vec::new();
        for p in 0..n {
            for q in p..n {
                let ts = expr.entry(p, q).to_vec();
                let t = target[(p, q)];
                if p == q {
                    let k = self.push_row(&ts, c64(1.0, 0.0), t.re);
                    map.push((p, q, RowKind::Diag, k));
                } else {
                    let k = self.push_row(&ts, c64(1.0, 0.0), t.re);
                    map.push((p, q, RowKind::Re, k));
                    let k = self.push_row(&ts, c64(0.0, -1.0), t.im);
                    map.push((p, q, RowKind::Im, k));
                }
            }
        }
        self.groups.push(Group {
            rows: n,
            cols: n,
            hermitian: true,
            map,
        });
        GroupId(self.groups.len() - 1)
    }

    /// Constrains every entry of a general complex expression.
    pub fn equal_general(&mut self, expr: &MatExpr, rhs: &ComplexMatrix) -> GroupId {
        assert!(
            rhs.rows() == expr.rows && rhs.cols() == expr.cols,
            "equal_general: shape mismatch"
        );
        let target = rhs - &expr.constant;
        let mut map = Vec::new();
        for p in 0..expr.rows {
            for q in 0..expr.cols {
                let ts = expr.entry(p, q).to_vec();
                let t = target[(p, q)];
                let k = self.push_row(&ts, c64(1.0, 0.0), t.re);
                map.push((p, q, RowKind::Re, k));
                let k = self.push_row(&ts, c64(0.0, -1.0), t.im);
                map.push((p, q, RowKind::Im, k));
            }
        }
        self.groups.push(Group {
            rows: expr.rows,
            cols: expr.cols,
            hermitian: false,
            map,
        });
        GroupId(self.groups.len() - 1)
    }

    /// Constrains the real part of a 1x1 expression.
    pub fn equal_scalar(&mut self, expr: &MatExpr, value: f64) -> GroupId {
        assert!(
            expr.rows == 1 && expr.cols == 1,
            "equal_scalar needs a 1x1 expression"
        );
        self.equal(expr, &ComplexMatrix::diag_real(&[value]))
    }

    fn set_objective(&mut self, expr: &MatExpr, sense: Sense) {
        assert!(
            expr.rows == 1 && expr.cols == 1,
            "objective must be a 1x1 expression"
        );
        self.objective = Self::functional(expr.entry(0, 0), c64(1.0, 0.0));
        self.offset = expr.constant[(0, 0)].re;
        self.sense = sense;
    }

    pub fn minimize(&mut self, expr: &MatExpr) {
        self.set_objective(expr, Sense::Minimize);
    }

    pub fn maximize(&mut self, expr: &MatExpr) {
        self.set_objective(expr, Sense::Maximize);
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn problem(&self) -> SdpProblem {
        SdpProblem {
            blocks: self.blocks.clone(),
            sense: self.sense,
            objective: self.objective.clone(),
            offset: self.offset,
            constraints: self.constraints.clone(),
            rhs: self.rhs.clone(),
        }
    }

    /// The matrix `M` of multipliers of an equality group, normalized so
    /// that `Σ_k y_k f_k(X) = Re Tr[M · expr(X)]`.
    pub fn multiplier(&self, g: GroupId, y: &[f64]) -> ComplexMatrix {
        let group = &self.groups[g.0];
        let mut m = ComplexMatrix::zeros(group.cols, group.rows);
        for &(p, q, kind, k) in &group.map {
            let v = y[k];
            match (group.hermitian, kind) {
                (_, RowKind::Diag) => m[(p, p)] += c64(v, 0.0),
                (true, RowKind::Re) => {
                    m[(p, q)] += c64(0.5 * v, 0.0);
                    m[(q, p)] += c64(0.5 * v, 0.0);
                }
                (true, RowKind::Im) => {
                    m[(p, q)] += c64(0.0, 0.5 * v);
                    m[(q, p)] += c64(0.0, -0.5 * v);
                }
                (false, RowKind::Re) => m[(q, p)] += c64(v, 0.0),
                (false, RowKind::Im) => m[(q, p)] += c64(0.0, -v),
            }
        }
        m
    }

    pub fn value<'a>(&self, b: BlockId, sol: &'a SdpSolution) -> &'a ComplexMatrix {
        &sol.blocks[b.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, trace_out};

    fn sample_blocks() -> Vec<ComplexMatrix> {
        let a = ComplexMatrix::from_fn(6, 6, |i, j| c64((i + 2 * j) as f64, i as f64 - j as f64));
        vec![a.hermitian_part()]
    }

    #[test]
    fn trace_out_matches_dense() {
        let mut m = Model::new();
        let b = m.block("x", 6, Field::Complex);
        let blocks = sample_blocks();
        for mask in [[true, false], [false, true]] {
            let e = m.var(b).trace_out(&[2, 3], &mask);
            let dense = trace_out(&blocks[0], &[2, 3], &mask).unwrap();
            assert!(e.eval(&blocks).max_abs_diff(&dense) < 1e-12);
        }
    }

    #[test]
    fn embed_matches_kron() {
        let mut m = Model::new();
        let b = m.block("x", 6, Field::Complex);
        let blocks = sample_blocks();
        let e = m.var(b).identity_kron(2).eval(&blocks);
        let dense = kron(&ComplexMatrix::identity(2), &blocks[0]).unwrap();
        assert!(e.max_abs_diff(&dense) < 1e-12);
        let e = m.var(b).kron_identity(3).eval(&blocks);
        let dense = kron(&blocks[0], &ComplexMatrix::identity(3)).unwrap();
        assert!(e.max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn rows_reproduce_entries() {
        let mut m = Model::new();
        let b = m.block("x", 6, Field::Complex);
        let blocks = sample_blocks();
        let expr = m.var(b).trace_out(&[3, 2], &[false, true]);
        let value = expr.eval(&blocks);
        let g = m.equal(&expr, &value);
        let p = m.problem();
        for (f, r) in p.constraints.iter().zip(&p.rhs) {
            assert!((f.eval(&blocks) - r).abs() < 1e-12);
        }
        // multiplier pairing: Σ y_k f_k = Re Tr[M expr]
        let y: Vec<f64> = (0..p.constraints.len()).map(|k| (k as f64).sin()).collect();
        let lhs: f64 = p
            .constraints
            .iter()
            .zip(&y)
            .map(|(f, yk)| yk * f.eval(&blocks))
            .sum();
        let mm = m.multiplier(g, &y);
        let rhs = mm.matmul(&value).trace().re;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn general_group_multiplier_pairing() {
        let mut m = Model::new();
        let b = m.block("x", 6, Field::Complex);
        let blocks = sample_blocks();
        let expr = m.var(b).submatrix(0, 3, 3, 3);
        let value = expr.eval(&blocks);
        let g = m.equal_general(&expr, &value);
        let p = m.problem();
        let y: Vec<f64> = (0..p.constraints.len())
            .map(|k| (k as f64 * 0.7).cos())
            .collect();
        let lhs: f64 = p
            .constraints
            .iter()
            .zip(&y)
            .map(|(f, yk)| yk * f.eval(&blocks))
            .sum();
        let rhs = m.multiplier(g, &y).matmul(&value).trace().re;
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

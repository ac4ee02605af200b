//! Primal-dual path-following for real block-diagonal SDPs.
//!
//! Solves `min <C, X>` subject to `<A_i, X> = b_i`, `X ⪰ 0`, with dual
//! `max bᵀy` subject to `Σ y_i A_i + Z = C`, `Z ⪰ 0`. Search directions use
//! Nesterov-Todd scaling `W = G Gᵀ` with `Gᵀ Z G = G⁻¹ X G⁻ᵀ = Λ` diagonal,
//! and Mehrotra's predictor-corrector with centering `σ = (μ_aff / μ)³`.

use nalgebra::DMatrix;

use super::dense;
use super::{SolverSettings, SolverStatus};
use crate::error::{Error, Result};

const STEP_FRACTION: f64 = 0.98;
const REFINEMENT_STEPS: usize = 2;
const DEPENDENCY_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-9;
const CONDITION_LIMIT: f64 = 1e12;
const DIVERGENCE: f64 = 1e9;
const PROBE_CEILING: f64 = 1e3;
const PROBE_GAP_TOL: f64 = 1e-9;
const PROBE_LOOSE_TOL: f64 = 1e-8;

type Entry = (usize, usize, usize, f64);

/// A real problem produced by the embedding: every block is real symmetric,
/// entries list both triangles, and the objective is always minimized.
#[derive(Debug, Clone)]
pub(crate) struct RealProblem {
    pub sizes: Vec<usize>,
    pub objective: Vec<Entry>,
    pub rows: Vec<Vec<Entry>>,
    pub b: Vec<f64>,
    /// Constant added to half the internal objective to give the reported
    /// value up to sign; used only to scale the gap tolerance.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct RawSolution {
    pub status: SolverStatus,
    pub x: Vec<DMatrix<f64>>,
    pub z: Vec<DMatrix<f64>>,
    /// Multipliers of the original rows; dropped rows get zero.
    pub y: Vec<f64>,
    pub iterations: usize,
    pub accuracy: Accuracy,
}

/// Residuals of the returned iterate, in units of the complex problem.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Accuracy {
    pub pinf: f64,
    pub dinf: f64,
    pub gap: f64,
    pub gap_scale: f64,
}

impl Accuracy {
    const UNKNOWN: Accuracy = Accuracy {
        pinf: f64::INFINITY,
        dinf: f64::INFINITY,
        gap: f64::INFINITY,
        gap_scale: 1.0,
    };
}

/// Upper-triangle entry `(k, l, a·g, a·h)` where `g = 2` off the diagonal
/// and `h = 1/2` on it, so that `<A_i, W A_j W>` is a sum over entry pairs
/// of `g_i h_j (W_kp W_ql + W_kq W_pl)`.
type UpperEntry = (usize, usize, f64, f64);

struct Prepared {
    sizes: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    /// Kept rows, normalized to unit Frobenius norm.
    rows: Vec<Vec<Entry>>,
    b: Vec<f64>,
    /// Original index and norm of each kept row.
    kept: Vec<usize>,
    norms: Vec<f64>,
    by_block: Vec<Vec<(usize, Vec<UpperEntry>)>>,
    offset: f64,
    /// Cholesky factor of the Gram matrix of the kept rows.
    gram: Vec<f64>,
}

enum Presolved {
    Ready(Prepared),
    Inconsistent,
    IllConditioned,
}

fn upper_lists(sizes: &[usize], rows: &[Vec<Entry>]) -> Vec<Vec<(usize, Vec<UpperEntry>)>> {
    let mut lists: Vec<Vec<(usize, Vec<UpperEntry>)>> = vec![Vec::new(); sizes.len()];
    for (i, row) in rows.iter().enumerate() {
        for &(b, k, l, v) in row {
            if k > l {
                continue;
            }
            let (g, h) = if k == l { (1.0, 0.5) } else { (2.0, 1.0) };
            let list = &mut lists[b];
            match list.last_mut() {
                Some((r, es)) if *r == i => es.push((k, l, v * g, v * h)),
                _ => list.push((i, vec![(k, l, v * g, v * h)])),
            }
        }
    }
    lists
}

/// Lower triangle of `M_ij = <A_i, W A_j W>`, column-major.
fn schur(lists: &[Vec<(usize, Vec<UpperEntry>)>], ws: &[DMatrix<f64>], m: usize) -> Vec<f64> {
    let mut mm = vec![0.0; m * m];
    for (list, w) in lists.iter().zip(ws) {
        let n = w.nrows();
        let w = w.as_slice();
        for (ii, (i, ei)) in list.iter().enumerate() {
            let col = &mut mm[i * m..(i + 1) * m];
            for (j, ej) in &list[ii..] {
                let mut s = 0.0;
                for &(k, l, gv, _) in ei {
                    let wk = &w[k * n..(k + 1) * n];
                    let wl = &w[l * n..(l + 1) * n];
                    for &(p, q, _, hv) in ej {
                        s += gv * hv * (wk[p] * wl[q] + wk[q] * wl[p]);
                    }
                }
                col[*j] += s;
            }
        }
    }
    mm
}

fn apply_a(rows: &[Vec<Entry>], x: &[DMatrix<f64>]) -> Vec<f64> {
    rows.iter()
        .map(|row| row.iter().map(|&(b, k, l, v)| v * x[b][(k, l)]).sum())
        .collect()
}

fn apply_at(rows: &[Vec<Entry>], y: &[f64], sizes: &[usize]) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for (row, &yi) in rows.iter().zip(y) {
        if yi == 0.0 {
            continue;
        }
        for &(b, k, l, v) in row {
            out[b][(k, l)] += yi * v;
        }
    }
    out
}

/// `y = M x` for a symmetric matrix stored as its upper triangle in
/// row-major order.
fn sym_matvec(mm: &[f64], m: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for i in 0..m {
        let row = &mm[i * m..(i + 1) * m];
        let mut acc = row[i] * x[i];
        for j in i + 1..m {
            acc += row[j] * x[j];
            out[j] += row[j] * x[i];
        }
        out[i] += acc;
    }
    out
}

fn factor_with_regularization(original: &[f64], m: usize) -> Option<Vec<f64>> {
    let max_diag = (0..m)
        .map(|i| original[i + i * m])
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut mm = original.to_vec();
    let mut delta = 0.0;
    for _ in 0..4 {
        if dense::cholesky(&mut mm, m, 1e-300).is_ok() {
            return Some(mm);
        }
        delta = if delta == 0.0 {
            1e-14 * max_diag
        } else {
            delta * 100.0
        };
        mm.copy_from_slice(original);
        for i in 0..m {
            mm[i + i * m] += delta;
        }
    }
    None
}

fn presolve(problem: &RealProblem) -> Presolved {
    let sizes = problem.sizes.clone();
    let mut c: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for &(b, k, l, v) in &problem.objective {
        c[b][(k, l)] += v;
    }

    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut kept = Vec::new();
    let mut norms = Vec::new();
    for (i, row) in problem.rows.iter().enumerate() {
        let norm = row.iter().map(|e| e.3 * e.3).sum::<f64>().sqrt();
        if norm == 0.0 {
            if problem.b[i].abs() > CONSISTENCY_TOL {
                return Presolved::Inconsistent;
            }
            continue;
        }
        rows.push(
            row.iter()
                .map(|&(bl, k, l, v)| (bl, k, l, v / norm))
                .collect::<Vec<_>>(),
        );
        b.push(problem.b[i] / norm);
        kept.push(i);
        norms.push(norm);
    }
    if !norms.is_empty() {
        let hi = norms.iter().cloned().fold(0.0, f64::max);
        let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi / lo > CONDITION_LIMIT {
            return Presolved::IllConditioned;
        }
    }

    let identity: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::identity(n, n)).collect();
    let m = rows.len();
    let lists = upper_lists(&sizes, &rows);
    let gram = schur(&lists, &identity, m);
    let mut factor = gram.clone();
    if dense::cholesky(&mut factor, m, DEPENDENCY_TOL).is_ok() {
        return Presolved::Ready(Prepared {
            sizes,
            c,
            rows,
            b,
            kept,
            norms,
            by_block: lists,
            offset: problem.offset,
            gram: factor,
        });
    }

    // Some rows are linearly dependent: keep a maximal independent subset
    // and check the dropped ones for consistency.
    let (perm, rank) = dense::pivoted_cholesky(&gram, m, DEPENDENCY_TOL);
    let mut keep: Vec<usize> = perm[..rank].to_vec();
    keep.sort_unstable();
    let mut drop: Vec<usize> = perm[rank..].to_vec();
    drop.sort_unstable();

    let k_rows: Vec<Vec<Entry>> = keep.iter().map(|&i| rows[i].clone()).collect();
    let k_b: Vec<f64> = keep.iter().map(|&i| b[i]).collect();
    let k_lists = upper_lists(&sizes, &k_rows);
    let mut k_factor = schur(&k_lists, &identity, keep.len());
    if dense::cholesky(&mut k_factor, keep.len(), 1e-14).is_err() {
        return Presolved::IllConditioned;
    }
    let mut y_ls = k_b.clone();
    dense::solve(&k_factor, keep.len(), &mut y_ls);
    let x_ls = apply_at(&k_rows, &y_ls, &sizes);
    let d_rows: Vec<Vec<Entry>> = drop.iter().map(|&i| rows[i].clone()).collect();
    let ax = apply_a(&d_rows, &x_ls);
    let scale = 1.0 + k_b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (val, &i) in ax.iter().zip(&drop) {
        if (val - b[i]).abs() > CONSISTENCY_TOL * scale {
            return Presolved::Inconsistent;
        }
    }
    Presolved::Ready(Prepared {
        sizes,
        c,
        kept: keep.iter().map(|&i| kept[i]).collect(),
        norms: keep.iter().map(|&i| norms[i]).collect(),
        rows: k_rows,
        b: k_b,
        by_block: k_lists,
        offset: problem.offset,
        gram: k_factor,
    })
}

/// Nesterov-Todd scaling of one block.
struct Scaling {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    lam: Vec<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let lx = x.clone().cholesky()?.l();
    let lz = z.clone().cholesky()?.l();
    let prod = lz.transpose() * &lx;
    let svd = prod.svd(false, true);
    let vt = svd.v_t?;
    let lam: Vec<f64> = svd.singular_values.iter().copied().collect();
    if lam.iter().any(|&s| !(s > 0.0)) {
        return None;
    }
    let n = lam.len();
    let mut g = &lx * vt.transpose();
    for (j, &s) in lam.iter().enumerate() {
        let f = 1.0 / s.sqrt();
        for i in 0..n {
            g[(i, j)] *= f;
        }
    }
    let lx_inv = lx.solve_lower_triangular(&DMatrix::identity(n, n))?;
    let mut ginv = vt * lx_inv;
    for (i, &s) in lam.iter().enumerate() {
        let f = s.sqrt();
        for j in 0..n {
            ginv[(i, j)] *= f;
        }
    }
    let w = symmetrize(&(&g * g.transpose()));
    Some(Scaling { g, ginv, w, lam })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest `α` with `Λ + α D ⪰ 0`, or infinity.
fn max_step(lam: &[f64], d: &DMatrix<f64>) -> f64 {
    let n = lam.len();
    let mut s = d.clone();
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] /= (lam[i] * lam[j]).sqrt();
        }
    }
    let min = s
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: Vec<f64>,
    dz: Vec<DMatrix<f64>>,
}

struct Iterate<'a> {
    prep: &'a Prepared,
    scal: &'a [Scaling],
    rd: &'a [DMatrix<f64>],
    wrdw: &'a [DMatrix<f64>],
    rp: &'a [f64],
    factor: &'a [f64],
    schur: &'a [f64],
}

impl Iterate<'_> {
    fn direction(&self, rc: &[DMatrix<f64>]) -> Direction {
        let p = self.prep;
        let tmp: Vec<DMatrix<f64>> = rc.iter().zip(self.wrdw).map(|(a, b)| a - b).collect();
        let a_tmp = apply_a(&p.rows, &tmp);
        let mut dy: Vec<f64> = self.rp.iter().zip(&a_tmp).map(|(r, a)| r - a).collect();
        let rhs = dy.clone();
        dense::solve(self.factor, dy.len(), &mut dy);
        // Iterative refinement against the unregularized Schur complement.
        for _ in 0..REFINEMENT_STEPS {
            let mdy = sym_matvec(self.schur, dy.len(), &dy);
            let mut res: Vec<f64> = rhs.iter().zip(&mdy).map(|(r, v)| r - v).collect();
            dense::solve(self.factor, res.len(), &mut res);
            for (a, b) in dy.iter_mut().zip(&res) {
                *a += b;
            }
        }
        let at = apply_at(&p.rows, &dy, &p.sizes);
        let dz: Vec<DMatrix<f64>> = self.rd.iter().zip(&at).map(|(r, a)| r - a).collect();
        let mut dx: Vec<DMatrix<f64>> = rc
            .iter()
            .zip(&dz)
            .zip(self.scal)
            .map(|((r, z), s)| symmetrize(&(r - &s.w * z * &s.w)))
            .collect();
        // The Schur complement is ill-conditioned near degenerate optima;
        // projecting with the well-conditioned Gram matrix keeps A dx = rp.
        let adx = apply_a(&p.rows, &dx);
        let mut defect: Vec<f64> = self.rp.iter().zip(&adx).map(|(r, a)| r - a).collect();
        dense::solve(&p.gram, defect.len(), &mut defect);
        for (d, c) in dx.iter_mut().zip(apply_at(&p.rows, &defect, &p.sizes)) {
            *d += c;
        }
        Direction { dx, dy, dz }
    }

    /// Step lengths to the boundary and the scaled directions.
    fn steps(&self, d: &Direction) -> (f64, f64, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        let mut sx = Vec::with_capacity(self.scal.len());
        let mut sz = Vec::with_capacity(self.scal.len());
        for ((s, dx), dz) in self.scal.iter().zip(&d.dx).zip(&d.dz) {
            let dxs = symmetrize(&(&s.ginv * dx * s.ginv.transpose()));
            let dzs = symmetrize(&(s.g.transpose() * dz * &s.g));
            ap = ap.min(max_step(&s.lam, &dxs));
            ad = ad.min(max_step(&s.lam, &dzs));
            sx.push(dxs);
            sz.push(dzs);
        }
        (ap, ad, sx, sz)
    }
}

fn raw_fallback(sizes: &[usize], m: usize, status: SolverStatus) -> RawSolution {
    RawSolution {
        status,
        x: sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        z: sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        y: vec![0.0; m],
        iterations: 0,
        accuracy: Accuracy::UNKNOWN,
    }
}

pub(crate) fn solve(problem: &RealProblem, settings: &SolverSettings) -> RawSolution {
    let m_orig = problem.rows.len();
    let prep = match presolve(problem) {
        Presolved::Ready(p) => p,
        Presolved::Inconsistent => {
            return raw_fallback(&problem.sizes, m_orig, SolverStatus::PrimalInfeasible)
        }
        Presolved::IllConditioned => {
            return raw_fallback(&problem.sizes, m_orig, SolverStatus::NumericalFailure)
        }
    };
    let IterResult {
        status,
        x,
        y,
        z,
        iterations,
        accuracy,
    } = iterate(&prep, settings);
    let mut y_full = vec![0.0; m_orig];
    for ((&i, &norm), &v) in prep.kept.iter().zip(&prep.norms).zip(&y) {
        y_full[i] = v / norm;
    }
    RawSolution {
        status,
        x,
        z,
        y: y_full,
        iterations,
        accuracy,
    }
}

struct IterResult {
    status: SolverStatus,
    x: Vec<DMatrix<f64>>,
    y: Vec<f64>,
    z: Vec<DMatrix<f64>>,
    iterations: usize,
    accuracy: Accuracy,
}

struct Snapshot {
    x: Vec<DMatrix<f64>>,
    y: Vec<f64>,
    z: Vec<DMatrix<f64>>,
    iterations: usize,
    accuracy: Accuracy,
}

impl Snapshot {
    fn into_result(self, status: SolverStatus) -> IterResult {
        IterResult {
            status,
            x: self.x,
            y: self.y,
            z: self.z,
            iterations: self.iterations,
            accuracy: self.accuracy,
        }
    }
}

fn iterate(p: &Prepared, settings: &SolverSettings) -> IterResult {
    let m = p.b.len();
    let ntot: usize = p.sizes.iter().sum();
    let bmax = p.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cmax =
        p.c.iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
    let tau_p = 1.0 + bmax;
    let tau_d = 1.0 + cmax;
    let mut x: Vec<DMatrix<f64>> = p
        .sizes
        .iter()
        .map(|&n| DMatrix::identity(n, n) * tau_p)
        .collect();
    let mut z: Vec<DMatrix<f64>> = p
        .sizes
        .iter()
        .map(|&n| DMatrix::identity(n, n) * tau_d)
        .collect();
    let mut y = vec![0.0; m];

    let mut best_merit = f64::INFINITY;
    let mut best: Option<Snapshot> = None;
    let mut since_best = 0;
    for iter in 0..=settings.max_iters {
        let ax = apply_a(&p.rows, &x);
        let rp: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = apply_at(&p.rows, &y, &p.sizes);
        let rd: Vec<DMatrix<f64>> =
            p.c.iter()
                .zip(&z)
                .zip(&aty)
                .map(|((c, z), a)| c - z - a)
                .collect();
        let pobj: f64 = p.c.iter().zip(&x).map(|(c, x)| inner(c, x)).sum();
        let dobj: f64 = p.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let pinf = rp
            .iter()
            .zip(&p.norms)
            .fold(0.0f64, |a, (r, n)| a.max(0.5 * (r * n).abs()));
        let dinf = rd
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |a, v| a.max(0.5 * v.abs()));
        let gap = 0.5 * (pobj - dobj).abs();
        let gap_scale = 1.0 + (0.5 * pobj + p.offset).abs();
        let accuracy = Accuracy {
            pinf,
            dinf,
            gap,
            gap_scale,
        };
        let here = |status: SolverStatus,
                    x: Vec<DMatrix<f64>>,
                    y: Vec<f64>,
                    z: Vec<DMatrix<f64>>| IterResult {
            status,
            x,
            y,
            z,
            iterations: iter,
            accuracy,
        };

        let fail = |best: Option<Snapshot>, status: SolverStatus, x, y, z| match best {
            Some(b) => b.into_result(status),
            None => here(status, x, y, z),
        };
        if !(pobj.is_finite() && dobj.is_finite() && pinf.is_finite() && dinf.is_finite()) {
            return fail(best, SolverStatus::NumericalFailure, x, y, z);
        }
        if pinf <= settings.res_tol
            && dinf <= settings.res_tol
            && gap <= settings.gap_tol * gap_scale
        {
            return here(SolverStatus::Optimal, x, y, z);
        }
        if dobj > DIVERGENCE {
            return here(SolverStatus::PrimalInfeasible, x, y, z);
        }
        if -pobj > DIVERGENCE {
            return here(SolverStatus::DualInfeasible, x, y, z);
        }
        let merit = (pinf / settings.res_tol)
            .max(dinf / settings.res_tol)
            .max(gap / (settings.gap_tol * gap_scale));
        if merit < best_merit {
            if merit < 0.9 * best_merit {
                since_best = 0;
            }
            best_merit = merit;
            best = Some(Snapshot {
                x: x.clone(),
                y: y.clone(),
                z: z.clone(),
                iterations: iter,
                accuracy,
            });
        } else {
            since_best += 1;
        }
        if iter == settings.max_iters {
            return fail(best, SolverStatus::IterationLimit, x, y, z);
        }
        if since_best > 20 {
            return fail(best, SolverStatus::NumericalFailure, x, y, z);
        }

        let scal: Option<Vec<Scaling>> = x.iter().zip(&z).map(|(x, z)| nt_scaling(x, z)).collect();
        let Some(scal) = scal else {
            return fail(best, SolverStatus::NumericalFailure, x, y, z);
        };
        let ws: Vec<DMatrix<f64>> = scal.iter().map(|s| s.w.clone()).collect();
        let schur_matrix = schur(&p.by_block, &ws, m);
        let Some(factor) = factor_with_regularization(&schur_matrix, m) else {
            return fail(best, SolverStatus::NumericalFailure, x, y, z);
        };
        let wrdw: Vec<DMatrix<f64>> = rd
            .iter()
            .zip(&scal)
            .map(|(r, s)| symmetrize(&(&s.w * r * &s.w)))
            .collect();
        let it = Iterate {
            prep: p,
            scal: &scal,
            rd: &rd,
            wrdw: &wrdw,
            rp: &rp,
            factor: &factor,
            schur: &schur_matrix,
        };
        let mu = x.iter().zip(&z).map(|(x, z)| inner(x, z)).sum::<f64>() / ntot as f64;

        // Predictor.
        let rc_aff: Vec<DMatrix<f64>> = x.iter().map(|x| -x).collect();
        let d_aff = it.direction(&rc_aff);
        let (ap, ad, sx, sz) = it.steps(&d_aff);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        let mu_aff = x
            .iter()
            .zip(&z)
            .zip(d_aff.dx.iter().zip(&d_aff.dz))
            .map(|((x, z), (dx, dz))| inner(&(x + dx * ap), &(z + dz * ad)))
            .sum::<f64>()
            / ntot as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc: Vec<DMatrix<f64>> = scal
            .iter()
            .zip(sx.iter().zip(&sz))
            .map(|(s, (dxs, dzs))| {
                let n = s.lam.len();
                let h = symmetrize(&(dxs * dzs));
                let mut t = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let mut r = -h[(i, j)];
                        if i == j {
                            r += sigma * mu - s.lam[i] * s.lam[i];
                        }
                        t[(i, j)] = 2.0 * r / (s.lam[i] + s.lam[j]);
                    }
                }
                symmetrize(&(&s.g * t * s.g.transpose()))
            })
            .collect();
        let d = it.direction(&rc);
        let (ap, ad, _, _) = it.steps(&d);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);

        for (xb, dx) in x.iter_mut().zip(&d.dx) {
            *xb += dx * ap;
        }
        for (zb, dz) in z.iter_mut().zip(&d.dz) {
            *zb += dz * ad;
        }
        for (yi, dyi) in y.iter_mut().zip(&d.dy) {
            *yi += ad * dyi;
        }
    }
    unreachable!("loop returns at the iteration limit")
}

/// Largest `t` such that the constraints admit a point with every block
/// `⪰ t I`. Returns negative infinity for inconsistent equalities.
pub(crate) fn probe(problem: &RealProblem, settings: &SolverSettings) -> Result<f64> {
    let prep = match presolve(problem) {
        Presolved::Ready(p) => p,
        Presolved::Inconsistent => return Ok(f64::NEG_INFINITY),
        Presolved::IllConditioned => {
            return Err(Error::Solver {
                status: SolverStatus::NumericalFailure,
                detail: "constraint data badly scaled".into(),
            })
        }
    };
    let mut y_ls = prep.b.clone();
    dense::solve(&prep.gram, y_ls.len(), &mut y_ls);
    let x_ls = apply_at(&prep.rows, &y_ls, &prep.sizes);
    let lam_min = x_ls
        .iter()
        .map(|x| {
            x.symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    let shift = 2.0 + (-lam_min).max(0.0);

    let nb = prep.sizes.len();
    let (s_block, u_block) = (nb, nb + 1);
    let mut sizes = prep.sizes.clone();
    sizes.extend([1, 1]);
    let mut rows = Vec::with_capacity(prep.rows.len() + 1);
    let mut b = Vec::with_capacity(prep.rows.len() + 1);
    for (row, &bi) in prep.rows.iter().zip(&prep.b) {
        let tr: f64 = row.iter().filter(|e| e.1 == e.2).map(|e| e.3).sum();
        let mut r = row.clone();
        if tr != 0.0 {
            r.push((s_block, 0, 0, tr));
        }
        rows.push(r);
        b.push(bi + shift * tr);
    }
    rows.push(vec![(s_block, 0, 0, 1.0), (u_block, 0, 0, 1.0)]);
    b.push(shift + PROBE_CEILING);
    let shifted = RealProblem {
        sizes,
        objective: vec![(s_block, 0, 0, -1.0)],
        rows,
        b,
        offset: 0.0,
    };
    let tight = SolverSettings {
        gap_tol: settings.gap_tol.min(PROBE_GAP_TOL),
        ..*settings
    };
    let raw = solve(&shifted, &tight);
    // Near the feasibility boundary the probe program is degenerate and the
    // last digits may be out of reach; a slightly looser iterate still
    // places the margin well within the classification tolerance.
    let acc = raw.accuracy;
    let usable = raw.status == SolverStatus::Optimal
        || (matches!(
            raw.status,
            SolverStatus::NumericalFailure | SolverStatus::IterationLimit
        ) && acc.pinf <= PROBE_LOOSE_TOL
            && acc.dinf <= PROBE_LOOSE_TOL
            && acc.gap <= PROBE_LOOSE_TOL * acc.gap_scale);
    if !usable {
        return Err(Error::Solver {
            status: raw.status,
            detail: format!("feasibility probe after {} iterations", raw.iterations),
        });
    }
    Ok(raw.x[s_block][(0, 0)] - shift)
}

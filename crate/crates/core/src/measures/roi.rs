//! Robustness and weight of incompatibility.
//!
//! Choi operators of joint channels live on `B1 ⊗ B2 ⊗ R`. Dual
//! certificates are named after the dual variables: `X` pairs with the
//! first device, `Y` with the second and `V` with the identity constraint.

use super::{
    agree, clamp_nonnegative, feasible_point, psd_violation, Certificate, DualSource,
    IncompatReport, MeasureOptions, Method,
};
use crate::error::{Error, Result};
use crate::linalg::{embed, ComplexMatrix};
use crate::quantum::{measurement_channel_choi, ChoiChannel, Povm};
use crate::sdp::{solve_sdp, Field, MatExpr, Model, SdpSolution, SolverSettings};

const CC: [bool; 3] = [true, true, false];
const KEEP_FIRST: [bool; 3] = [false, true, false];
const KEEP_SECOND: [bool; 3] = [true, false, false];

struct PrimalOutcome {
    value: f64,
    iterations: usize,
    certificate: Certificate,
}

fn scalar(v: f64) -> ComplexMatrix {
    ComplexMatrix::diag_real(&[v])
}

fn constant(v: f64) -> MatExpr {
    MatExpr::constant(&scalar(v))
}

fn tr_prod(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.matmul(b).trace().re
}

fn solve(model: &Model, what: &str, settings: &SolverSettings) -> Result<SdpSolution> {
    solve_sdp(&model.problem(), settings)?.require_optimal(what)
}

/// Separate dual programs only need a feasible point.
fn solve_dual(model: &Model, what: &str, settings: &SolverSettings) -> Result<SdpSolution> {
    feasible_point(solve_sdp(&model.problem(), settings)?, what, settings)
}

fn sum(exprs: impl IntoIterator<Item = MatExpr>) -> MatExpr {
    let mut it = exprs.into_iter();
    let first = it.next().expect("sum of an empty list");
    it.fold(first, |acc, e| acc + e)
}

fn finish(
    what: &str,
    primal: PrimalOutcome,
    separate: Option<f64>,
    opts: &MeasureOptions,
) -> Result<IncompatReport> {
    let tol = opts.agreement_tol;
    if primal.certificate.violation > tol {
        return Err(Error::CrossCheck {
            what: format!("{what}: dual certificate violation"),
            first: 0.0,
            second: primal.certificate.violation,
        });
    }
    agree(
        &format!("{what}: primal vs certificate"),
        primal.value,
        primal.certificate.value,
        tol,
    )?;
    let (dual_value, dual_source) = match separate {
        Some(d) => {
            agree(
                &format!("{what}: primal vs dual program"),
                primal.value,
                d,
                tol,
            )?;
            (d, DualSource::SeparateProgram)
        }
        None => (primal.certificate.value, DualSource::PrimalMultipliers),
    };
    if primal.value < -tol {
        return Err(Error::CrossCheck {
            what: format!("{what}: negative optimum"),
            first: primal.value,
            second: 0.0,
        });
    }
    Ok(IncompatReport {
        value: clamp_nonnegative(primal.value, &opts.settings),
        primal_value: primal.value,
        dual_value,
        method: Method::PrimalSdp,
        dual_source,
        certificate: primal.certificate,
        iterations: primal.iterations,
    })
}

/// Generalized robustness of incompatibility of two channels with a common
/// input.
pub fn roi_channel_channel(
    a: &ChoiChannel,
    b: &ChoiChannel,
    opts: &MeasureOptions,
) -> Result<IncompatReport> {
    if a.dim_in() != b.dim_in() {
        return Err(Error::shape(format!(
            "channels have input dimensions {} and {}",
            a.dim_in(),
            b.dim_in()
        )));
    }
    let (d, d1, d2) = (a.dim_in(), a.dim_out(), b.dim_out());
    let primal = roi_cc_primal(a.choi(), b.choi(), d, d1, d2, &opts.settings)?;
    let n = d1 * d2 * d;
    let dual = if n * n < opts.separate_dual_limit {
        Some(roi_cc_dual(a.choi(), b.choi(), d, d1, d2, &opts.settings)?)
    } else {
        None
    };
    finish("channel-channel robustness", primal, dual, opts)
}

fn roi_cc_primal(
    ca: &ComplexMatrix,
    cb: &ComplexMatrix,
    d: usize,
    d1: usize,
    d2: usize,
    settings: &SolverSettings,
) -> Result<PrimalOutcome> {
    let dims = [d1, d2, d];
    let mut m = Model::new();
    let ct = m.block("C", d1 * d2 * d, Field::Complex);
    let s1 = m.block("S1", d1 * d, Field::Complex);
    let s2 = m.block("S2", d2 * d, Field::Complex);
    let r = m.block("r", 1, Field::Real);
    let c = m.var(ct);
    let e1 = c.trace_out(&dims, &CC) - m.scalar_identity(r, d);
    let e2 = c.trace_out(&dims, &KEEP_FIRST) - m.var(s1);
    let e3 = c.trace_out(&dims, &KEEP_SECOND) - m.var(s2);
    let g1 = m.equal(&e1, &ComplexMatrix::identity(d));
    let g2 = m.equal(&e2, ca);
    let g3 = m.equal(&e3, cb);
    let obj = m.var(r);
    m.minimize(&obj);
    let sol = solve(&m, "channel-channel robustness", settings)?;

    let v = -m.multiplier(g1, &sol.multipliers);
    let x = m.multiplier(g2, &sol.multipliers);
    let y = m.multiplier(g3, &sol.multipliers);
    let value = tr_prod(&x, ca) + tr_prod(&y, cb) - v.trace().re;
    let slack = &(&embed(&v, &dims, &[false, false, true])?
        - &embed(&x, &dims, &[true, false, true])?)
        - &embed(&y, &dims, &[false, true, true])?;
    let violation = psd_violation([&x, &y, &slack])?.max(v.trace().re - 1.0);
    Ok(PrimalOutcome {
        value: sol.primal_value,
        iterations: sol.iterations,
        certificate: Certificate {
            matrices: vec![("X".into(), x), ("Y".into(), y), ("V".into(), v)],
            value,
            violation,
        },
    })
}

fn roi_cc_dual(
    ca: &ComplexMatrix,
    cb: &ComplexMatrix,
    d: usize,
    d1: usize,
    d2: usize,
    settings: &SolverSettings,
) -> Result<f64> {
    let dims = [d1, d2, d];
    let n = d1 * d2 * d;
    let mut m = Model::new();
    let x = m.block("X", d1 * d, Field::Complex);
    let y = m.block("Y", d2 * d, Field::Complex);
    let v = m.block("V", d, Field::Complex);
    let s = m.block("S", n, Field::Complex);
    let lhs = m.var(v).embed(&dims, &[false, false, true])
        - m.var(x).embed(&dims, &[true, false, true])
        - m.var(y).embed(&dims, &[false, true, true])
        - m.var(s);
    m.equal(&lhs, &ComplexMatrix::zeros(n, n));
    let tr = m.var(v).trace();
    m.equal_scalar(&tr, 1.0);
    let obj = m.var(x).inner(ca) + m.var(y).inner(cb) + constant(-1.0);
    m.maximize(&obj);
    Ok(solve_dual(&m, "channel-channel robustness dual", settings)?.primal_value)
}

/// Generalized robustness of incompatibility of a channel and a POVM on
/// its input. Also checks the value against the channel-channel program
/// for the measurement channel when that program is small enough.
pub fn roi_channel_povm(
    lam: &ChoiChannel,
    e: &Povm,
    opts: &MeasureOptions,
) -> Result<IncompatReport> {
    if lam.dim_in() != e.dim() {
        return Err(Error::shape(format!(
            "channel input dimension {} but measurement dimension {}",
            lam.dim_in(),
            e.dim()
        )));
    }
    let (d, db, nx) = (e.dim(), lam.dim_out(), e.outcomes());
    let effects_t: Vec<ComplexMatrix> = e.effects().iter().map(ComplexMatrix::transpose).collect();
    let primal = roi_cp_primal(lam.choi(), &effects_t, d, db, &opts.settings)?;
    let dual = if nx * (db * d).pow(2) < opts.separate_dual_limit {
        Some(roi_cp_dual(lam.choi(), &effects_t, d, db, &opts.settings)?)
    } else {
        None
    };
    let report = finish("channel-povm robustness", primal, dual, opts)?;
    if d * d + (db * d).pow(2) + (nx * d).pow(2) <= opts.separate_dual_limit {
        let gamma = measurement_channel_choi(e);
        let reduced = roi_cc_primal(lam.choi(), gamma.choi(), d, db, nx, &opts.settings)?;
        agree(
            "channel-povm robustness vs measurement-channel reduction",
            report.primal_value,
            reduced.value,
            opts.agreement_tol,
        )?;
    }
    Ok(report)
}

fn roi_cp_primal(
    cl: &ComplexMatrix,
    effects_t: &[ComplexMatrix],
    d: usize,
    db: usize,
    settings: &SolverSettings,
) -> Result<PrimalOutcome> {
    let dims = [db, d];
    let tr_b = [true, false];
    let mut m = Model::new();
    let ct: Vec<_> = (0..effects_t.len())
        .map(|k| m.block(&format!("C{k}"), db * d, Field::Complex))
        .collect();
    let s = m.block("S", db * d, Field::Complex);
    let t: Vec<_> = (0..effects_t.len())
        .map(|k| m.block(&format!("T{k}"), d, Field::Complex))
        .collect();
    let r = m.block("r", 1, Field::Real);

    let e1 = sum(ct.iter().map(|&c| m.var(c).trace_out(&dims, &tr_b))) - m.scalar_identity(r, d);
    let g1 = m.equal(&e1, &ComplexMatrix::identity(d));
    let e2 = sum(ct.iter().map(|&c| m.var(c))) - m.var(s);
    let g2 = m.equal(&e2, cl);
    let mut g3 = Vec::with_capacity(ct.len());
    for ((&c, &tk), et) in ct.iter().zip(&t).zip(effects_t) {
        let e3 = m.var(c).trace_out(&dims, &tr_b) - m.var(tk);
        g3.push(m.equal(&e3, et));
    }
    let obj = m.var(r);
    m.minimize(&obj);
    let sol = solve(&m, "channel-povm robustness", settings)?;

    let v = -m.multiplier(g1, &sol.multipliers);
    let x = m.multiplier(g2, &sol.multipliers);
    let ys: Vec<ComplexMatrix> = g3
        .iter()
        .map(|&g| m.multiplier(g, &sol.multipliers))
        .collect();
    let id_b = [false, true];
    let iv = embed(&v, &dims, &id_b)?;
    let mut value = tr_prod(&x, cl) - v.trace().re;
    let mut violation = psd_violation([&x])?.max(v.trace().re - 1.0);
    for (y, et) in ys.iter().zip(effects_t) {
        value += tr_prod(y, et);
        let slack = &(&iv - &x) - &embed(y, &dims, &id_b)?;
        violation = violation.max(psd_violation([y, &slack])?);
    }
    let mut matrices = vec![("X".to_string(), x)];
    matrices.extend(
        ys.into_iter()
            .enumerate()
            .map(|(k, y)| (format!("Y{k}"), y)),
    );
    matrices.push(("V".into(), v));
    Ok(PrimalOutcome {
        value: sol.primal_value,
        iterations: sol.iterations,
        certificate: Certificate {
            matrices,
            value,
            violation,
        },
    })
}

fn roi_cp_dual(
    cl: &ComplexMatrix,
    effects_t: &[ComplexMatrix],
    d: usize,
    db: usize,
    settings: &SolverSettings,
) -> Result<f64> {
    let n = db * d;
    let mut m = Model::new();
    let x = m.block("X", n, Field::Complex);
    let ys: Vec<_> = (0..effects_t.len())
        .map(|k| m.block(&format!("Y{k}"), d, Field::Complex))
        .collect();
    let v = m.block("V", d, Field::Complex);
    let ss: Vec<_> = (0..effects_t.len())
        .map(|k| m.block(&format!("S{k}"), n, Field::Complex))
        .collect();
    let iv = m.var(v).identity_kron(db);
    for (&y, &s) in ys.iter().zip(&ss) {
        let lhs = &(&(&iv - &m.var(x)) - &m.var(y).identity_kron(db)) - &m.var(s);
        m.equal(&lhs, &ComplexMatrix::zeros(n, n));
    }
    let tr = m.var(v).trace();
    m.equal_scalar(&tr, 1.0);
    let obj = sum(ys.iter().zip(effects_t).map(|(&y, et)| m.var(y).inner(et)))
        + m.var(x).inner(cl)
        + constant(-1.0);
    m.maximize(&obj);
    Ok(solve_dual(&m, "channel-povm robustness dual", settings)?.primal_value)
}

/// Generalized robustness of incompatibility of two POVMs. Also checks the
/// value against the channel-channel program for the two measurement
/// channels when that program is small enough.
pub fn roi_povm_povm(e: &Povm, f: &Povm, opts: &MeasureOptions) -> Result<IncompatReport> {
    if e.dim() != f.dim() {
        return Err(Error::shape(format!(
            "measurements act on dimensions {} and {}",
            e.dim(),
            f.dim()
        )));
    }
    let (d, nx, ny) = (e.dim(), e.outcomes(), f.outcomes());
    let primal = roi_pp_primal(e.effects(), f.effects(), d, &opts.settings)?;
    let dual = if nx * ny * d * d < opts.separate_dual_limit {
        Some(roi_pp_dual(e.effects(), f.effects(), d, &opts.settings)?)
    } else {
        None
    };
    let report = finish("povm-povm robustness", primal, dual, opts)?;
    if d * d + (nx * d).pow(2) + (ny * d).pow(2) <= opts.separate_dual_limit {
        let (ge, gf) = (measurement_channel_choi(e), measurement_channel_choi(f));
        let reduced = roi_cc_primal(ge.choi(), gf.choi(), d, nx, ny, &opts.settings)?;
        agree(
            "povm-povm robustness vs measurement-channel reduction",
            report.primal_value,
            reduced.value,
            opts.agreement_tol,
        )?;
    }
    Ok(report)
}

fn roi_pp_primal(
    e: &[ComplexMatrix],
    f: &[ComplexMatrix],
    d: usize,
    settings: &SolverSettings,
) -> Result<PrimalOutcome> {
    let (nx, ny) = (e.len(), f.len());
    let mut m = Model::new();
    let g: Vec<Vec<_>> = (0..nx)
        .map(|x| {
            (0..ny)
                .map(|y| m.block(&format!("G{x}_{y}"), d, Field::Complex))
                .collect()
        })
        .collect();
    let s: Vec<_> = (0..nx)
        .map(|x| m.block(&format!("S{x}"), d, Field::Complex))
        .collect();
    let t: Vec<_> = (0..ny)
        .map(|y| m.block(&format!("T{y}"), d, Field::Complex))
        .collect();
    let r = m.block("r", 1, Field::Real);

    let e1 = sum(g.iter().flatten().map(|&b| m.var(b))) - m.scalar_identity(r, d);
    let g1 = m.equal(&e1, &ComplexMatrix::identity(d));
    let mut gx = Vec::with_capacity(nx);
    for x in 0..nx {
        let ex = sum(g[x].iter().map(|&b| m.var(b))) - m.var(s[x]);
        gx.push(m.equal(&ex, &e[x]));
    }
    let mut gy = Vec::with_capacity(ny);
    for y in 0..ny {
        let ey = sum(g.iter().map(|row| m.var(row[y]))) - m.var(t[y]);
        gy.push(m.equal(&ey, &f[y]));
    }
    let obj = m.var(r);
    m.minimize(&obj);
    let sol = solve(&m, "povm-povm robustness", settings)?;

    let v = -m.multiplier(g1, &sol.multipliers);
    let xs: Vec<ComplexMatrix> = gx
        .iter()
        .map(|&k| m.multiplier(k, &sol.multipliers))
        .collect();
    let ys: Vec<ComplexMatrix> = gy
        .iter()
        .map(|&k| m.multiplier(k, &sol.multipliers))
        .collect();
    let mut value = -v.trace().re;
    let mut violation = psd_violation(xs.iter().chain(&ys))?.max(v.trace().re - 1.0);
    for (xm, ex) in xs.iter().zip(e) {
        value += tr_prod(xm, ex);
    }
    for (ym, fy) in ys.iter().zip(f) {
        value += tr_prod(ym, fy);
    }
    for xm in &xs {
        for ym in &ys {
            let slack = &(&v - xm) - ym;
            violation = violation.max(psd_violation([&slack])?);
        }
    }
    let mut matrices: Vec<(String, ComplexMatrix)> = xs
        .into_iter()
        .enumerate()
        .map(|(k, m)| (format!("X{k}"), m))
        .collect();
    matrices.extend(
        ys.into_iter()
            .enumerate()
            .map(|(k, m)| (format!("Y{k}"), m)),
    );
    matrices.push(("V".into(), v));
    Ok(PrimalOutcome {
        value: sol.primal_value,
        iterations: sol.iterations,
        certificate: Certificate {
            matrices,
            value,
            violation,
        },
    })
}

fn roi_pp_dual(
    e: &[ComplexMatrix],
    f: &[ComplexMatrix],
    d: usize,
    settings: &SolverSettings,
) -> Result<f64> {
    let mut m = Model::new();
    let xs: Vec<_> = (0..e.len())
        .map(|k| m.block(&format!("X{k}"), d, Field::Complex))
        .collect();
    let ys: Vec<_> = (0..f.len())
        .map(|k| m.block(&format!("Y{k}"), d, Field::Complex))
        .collect();
    let v = m.block("V", d, Field::Complex);
    for &x in &xs {
        for &y in &ys {
            let s = m.block(&format!("S{}_{}", x.0, y.0), d, Field::Complex);
            let lhs = &(&(&m.var(v) - &m.var(x)) - &m.var(y)) - &m.var(s);
            m.equal(&lhs, &ComplexMatrix::zeros(d, d));
        }
    }
    let tr = m.var(v).trace();
    m.equal_scalar(&tr, 1.0);
    let obj = sum(xs.iter().zip(e).map(|(&x, ex)| m.var(x).inner(ex)))
        + sum(ys.iter().zip(f).map(|(&y, fy)| m.var(y).inner(fy)))
        + constant(-1.0);
    m.maximize(&obj);
    Ok(solve_dual(&m, "povm-povm robustness dual", settings)?.primal_value)
}

/// Weight of incompatibility of two channels with a common input.
pub fn woi_channel_channel(
    a: &ChoiChannel,
    b: &ChoiChannel,
    opts: &MeasureOptions,
) -> Result<IncompatReport> {
    if a.dim_in() != b.dim_in() {
        return Err(Error::shape(format!(
            "channels have input dimensions {} and {}",
            a.dim_in(),
            b.dim_in()
        )));
    }
    let (d, d1, d2) = (a.dim_in(), a.dim_out(), b.dim_out());
    let primal = woi_primal(a.choi(), b.choi(), d, d1, d2, &opts.settings)?;
    let n = d1 * d2 * d;
    let dual = if n * n < opts.separate_dual_limit {
        Some(woi_dual(a.choi(), b.choi(), d, d1, d2, &opts.settings)?)
    } else {
        None
    };
    let mut report = finish("channel-channel weight", primal, dual, opts)?;
    report.value = report.value.min(1.0);
    Ok(report)
}

fn woi_primal(
    ca: &ComplexMatrix,
    cb: &ComplexMatrix,
    d: usize,
    d1: usize,
    d2: usize,
    settings: &SolverSettings,
) -> Result<PrimalOutcome> {
    let dims = [d1, d2, d];
    let mut m = Model::new();
    let ct = m.block("C", d1 * d2 * d, Field::Complex);
    let s1 = m.block("S1", d1 * d, Field::Complex);
    let s2 = m.block("S2", d2 * d, Field::Complex);
    let w = m.block("w", 1, Field::Real);
    let c = m.var(ct);
    let e1 = c.trace_out(&dims, &CC) + m.scalar_identity(w, d);
    let e2 = c.trace_out(&dims, &KEEP_FIRST) + m.var(s1);
    let e3 = c.trace_out(&dims, &KEEP_SECOND) + m.var(s2);
    let g1 = m.equal(&e1, &ComplexMatrix::identity(d));
    let g2 = m.equal(&e2, ca);
    let g3 = m.equal(&e3, cb);
    let obj = m.var(w);
    m.minimize(&obj);
    let sol = solve(&m, "channel-channel weight", settings)?;

    let v = m.multiplier(g1, &sol.multipliers);
    let x = -m.multiplier(g2, &sol.multipliers);
    let y = -m.multiplier(g3, &sol.multipliers);
    let value = v.trace().re - tr_prod(&x, ca) - tr_prod(&y, cb);
    let slack = &(&embed(&x, &dims, &[true, false, true])?
        + &embed(&y, &dims, &[false, true, true])?)
        - &embed(&v, &dims, &[false, false, true])?;
    let violation = psd_violation([&x, &y, &slack])?.max(v.trace().re - 1.0);
    Ok(PrimalOutcome {
        value: sol.primal_value,
        iterations: sol.iterations,
        certificate: Certificate {
            matrices: vec![("X".into(), x), ("Y".into(), y), ("V".into(), v)],
            value,
            violation,
        },
    })
}

/// The dual weight program has a free Hermitian `V`; it is written as
/// `V' - κ I` with `V' ⪰ 0`, and `κ` grows until the shift is inactive.
fn woi_dual(
    ca: &ComplexMatrix,
    cb: &ComplexMatrix,
    d: usize,
    d1: usize,
    d2: usize,
    settings: &SolverSettings,
) -> Result<f64> {
    let dims = [d1, d2, d];
    let n = d1 * d2 * d;
    let mut kappa = 2.0;
    let mut last = None;
    for _ in 0..4 {
        let mut m = Model::new();
        let x = m.block("X", d1 * d, Field::Complex);
        let y = m.block("Y", d2 * d, Field::Complex);
        let vp = m.block("V", d, Field::Complex);
        let s = m.block("S", n, Field::Complex);
        let lhs = m.var(x).embed(&dims, &[true, false, true])
            + m.var(y).embed(&dims, &[false, true, true])
            - m.var(vp).embed(&dims, &[false, false, true])
            - m.var(s);
        m.equal(&lhs, &ComplexMatrix::identity(n).scale(-kappa));
        let tr = m.var(vp).trace();
        m.equal_scalar(&tr, 1.0 + kappa * d as f64);
        let obj = constant(1.0) - m.var(x).inner(ca) - m.var(y).inner(cb);
        m.maximize(&obj);
        let sol = solve_dual(&m, "channel-channel weight dual", settings)?;
        let low = crate::linalg::eigvalsh(m.value(vp, &sol))?
            .last()
            .copied()
            .unwrap_or(0.0);
        last = Some(sol.primal_value);
        if low > 1e-6 {
            break;
        }
        kappa *= 10.0;
    }
    Ok(last.expect("at least one weight dual solve"))
}

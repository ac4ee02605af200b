//! Diamond-norm distance and the optimal-recovery disturbance.

use super::{
    agree, clamp_nonnegative, feasible_point, psd_violation, Certificate, DualSource,
    IncompatReport, MeasureOptions, Method,
};
use crate::error::{Error, Result};
use crate::linalg::{embed, inv_sqrt_pd, trace_out, ComplexMatrix};
use crate::quantum::ChoiChannel;
use crate::sdp::{solve_sdp, BlockId, Field, MatExpr, Model, SolverSettings, Term};

/// `‖a - b‖⋄`, from the maximization form and cross-checked against the
/// minimization form.
pub fn diamond_distance(
    a: &ChoiChannel,
    b: &ChoiChannel,
    opts: &MeasureOptions,
) -> Result<IncompatReport> {
    if a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out() {
        return Err(Error::shape(format!(
            "channels {}->{} and {}->{} differ in shape",
            a.dim_in(),
            a.dim_out(),
            b.dim_in(),
            b.dim_out()
        )));
    }
    let (d, db) = (a.dim_in(), a.dim_out());
    // Solving for one fixed orientation of the pair makes the distance
    // exactly symmetric.
    let (a, b) = if lexicographic(a.choi(), b.choi()).is_le() {
        (a, b)
    } else {
        (b, a)
    };
    let diff = a.choi() - b.choi();
    let (primal, iterations, certificate) = diamond_max(&diff, d, db, &opts.settings)?;
    let n = db * d;
    let tol = opts.agreement_tol;
    if certificate.violation > tol {
        return Err(Error::CrossCheck {
            what: "diamond distance: dual certificate violation".into(),
            first: 0.0,
            second: certificate.violation,
        });
    }
    agree(
        "diamond distance: primal vs certificate",
        primal,
        certificate.value,
        tol,
    )?;
    let (dual_value, dual_source) = if 2 * n * n + 2 * d * d <= opts.separate_dual_limit {
        let dual = diamond_min(&diff, d, db, &opts.settings)?;
        agree("diamond distance: max vs min form", primal, dual, tol)?;
        (dual, DualSource::SeparateProgram)
    } else {
        (certificate.value, DualSource::PrimalMultipliers)
    };
    Ok(IncompatReport {
        value: clamp_nonnegative(primal, &opts.settings).min(2.0),
        primal_value: primal,
        dual_value,
        method: Method::PrimalSdp,
        dual_source,
        certificate,
        iterations,
    })
}

fn lexicographic(x: &ComplexMatrix, y: &ComplexMatrix) -> std::cmp::Ordering {
    x.as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(p, q)| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// `max ½ Tr[(Q - P) D]` subject to `P + Q = 2 I ⊗ V`, `Tr V = 1`.
fn diamond_max(
    diff: &ComplexMatrix,
    d: usize,
    db: usize,
    settings: &SolverSettings,
) -> Result<(f64, usize, Certificate)> {
    let n = db * d;
    let mut m = Model::new();
    let p = m.block("P", n, Field::Complex);
    let q = m.block("Q", n, Field::Complex);
    let v = m.block("V", d, Field::Complex);
    let lhs = m.var(p) + m.var(q) - m.var(v).identity_kron(db).scale(2.0);
    let g1 = m.equal(&lhs, &ComplexMatrix::zeros(n, n));
    let tr = m.var(v).trace();
    let g2 = m.equal_scalar(&tr, 1.0);
    let obj = (m.var(q) - m.var(p)).scale(0.5).inner(diff);
    m.maximize(&obj);
    let sol = solve_sdp(&m.problem(), settings)?.require_optimal("diamond distance")?;

    let w = m.multiplier(g1, &sol.multipliers);
    let mu = m.multiplier(g2, &sol.multipliers)[(0, 0)].re;
    let half = diff.scale(0.5);
    let tr_w = trace_out(&w, &[db, d], &[true, false])?;
    let bound = &ComplexMatrix::identity(d).scale(mu) - &tr_w.scale(2.0);
    let violation = psd_violation([&(&w + &half), &(&w - &half), &bound])?;
    let certificate = Certificate {
        matrices: vec![
            ("W".into(), w),
            ("mu".into(), ComplexMatrix::diag_real(&[mu])),
        ],
        value: mu,
        violation,
    };
    Ok((sol.primal_value, sol.iterations, certificate))
}

/// Blocks and epigraph variables of the minimization form
/// `min ½(‖Tr_B Y0‖ + ‖Tr_B Y1‖)` over `[[Y0, -K], [-K†, Y1]] ⪰ 0`.
struct MinForm {
    big: BlockId,
}

/// Adds the minimization-form epigraph to `m` and returns the 2N block; the
/// caller ties its off-diagonal block to `-K`.
fn add_min_form(m: &mut Model, d: usize, db: usize) -> MinForm {
    let n = db * d;
    let big = m.block("Y", 2 * n, Field::Complex);
    let mut objective = MatExpr::zeros(1, 1);
    for k in 0..2 {
        let tb = m.block(&format!("T{k}"), d, Field::Complex);
        let t = m.block(&format!("t{k}"), 1, Field::Real);
        let yk = m.var(big).submatrix(k * n, k * n, n, n);
        let lhs = m.var(tb) + yk.trace_out(&[db, d], &[true, false]) - m.scalar_identity(t, d);
        m.equal(&lhs, &ComplexMatrix::zeros(d, d));
        objective = objective + m.var(t).scale(0.5);
    }
    m.minimize(&objective);
    MinForm { big }
}

fn diamond_min(
    diff: &ComplexMatrix,
    d: usize,
    db: usize,
    settings: &SolverSettings,
) -> Result<f64> {
    let n = db * d;
    let mut m = Model::new();
    let form = add_min_form(&mut m, d, db);
    let corner = m.var(form.big).submatrix(0, n, n, n);
    m.equal_general(&corner, &-diff);
    let sol = feasible_point(
        solve_sdp(&m.problem(), settings)?,
        "diamond distance dual",
        settings,
    )?;
    Ok(sol.primal_value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySearchResult {
    /// Trace-preserving recovery extracted from the optimizer.
    pub best_recovery: ChoiChannel,
    /// `‖R ∘ Λ - id‖⋄` for the extracted recovery.
    pub recovered_distance: f64,
    /// Optimal value of the joint program.
    pub value: f64,
    pub iterations: usize,
}

/// `‖R ∘ Λ - id‖⋄` for a given recovery.
pub fn recovered_distance(
    lam: &ChoiChannel,
    recovery: &ChoiChannel,
    opts: &MeasureOptions,
) -> Result<f64> {
    if recovery.dim_in() != lam.dim_out() || recovery.dim_out() != lam.dim_in() {
        return Err(Error::shape(format!(
            "recovery {}->{} does not invert channel {}->{}",
            recovery.dim_in(),
            recovery.dim_out(),
            lam.dim_in(),
            lam.dim_out()
        )));
    }
    let composed = recovery.after(lam)?;
    Ok(diamond_distance(&composed, &ChoiChannel::identity(lam.dim_in()), opts)?.value)
}

/// Minimizes `‖R ∘ Λ - id‖⋄` over recovery channels `R` in one program.
pub fn minimize_disturbance(
    lam: &ChoiChannel,
    opts: &MeasureOptions,
) -> Result<RecoverySearchResult> {
    let (d, db) = (lam.dim_in(), lam.dim_out());
    let n = d * d;
    let jl = lam.choi();
    let mut m = Model::new();
    let form = add_min_form(&mut m, d, d);
    let jr = m.block("R", d * db, Field::Complex);
    let tp = m.var(jr).trace_out(&[d, db], &[true, false]);
    m.equal(&tp, &ComplexMatrix::identity(db));

    // Choi of R ∘ Λ on A' ⊗ A, linear in the recovery block.
    let composed = MatExpr::from_fn(n, n, |p, q| {
        let (a, i) = (p / d, p % d);
        let (ap, j) = (q / d, q % d);
        let mut terms = Vec::with_capacity(db * db);
        for b in 0..db {
            for bp in 0..db {
                let coef = jl[(b * d + i, bp * d + j)];
                if coef.re != 0.0 || coef.im != 0.0 {
                    terms.push(Term {
                        block: jr.0,
                        i: a * db + b,
                        j: ap * db + bp,
                        coef,
                    });
                }
            }
        }
        terms
    });
    let k = composed - MatExpr::constant(ChoiChannel::identity(d).choi());
    let corner = m.var(form.big).submatrix(0, n, n, n) + k;
    m.equal_general(&corner, &ComplexMatrix::zeros(n, n));
    let sol = solve_sdp(&m.problem(), &opts.settings)?.require_optimal("minimal disturbance")?;

    let raw = m.value(jr, &sol).hermitian_part();
    let marg = trace_out(&raw, &[d, db], &[true, false])?;
    let fix = embed(&inv_sqrt_pd(&marg)?, &[d, db], &[false, true])?;
    let choi = fix.matmul(&raw).matmul(&fix).hermitian_part();
    let best_recovery = ChoiChannel::new(db, d, choi)?;
    let value = clamp_nonnegative(sol.primal_value, &opts.settings);
    let distance = recovered_distance(lam, &best_recovery, opts)?;
    agree(
        "minimal disturbance vs extracted recovery",
        value,
        distance,
        opts.agreement_tol,
    )?;
    Ok(RecoverySearchResult {
        best_recovery,
        recovered_distance: distance,
        value,
        iterations: sol.iterations,
    })
}

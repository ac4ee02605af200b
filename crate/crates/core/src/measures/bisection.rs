//! Robustness by bisection over the compatibility systems with explicit
//! noise devices. Each step is a strict-feasibility probe, so this path
//! shares only the interior-point core with the primal programs.

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::{ChoiChannel, Povm};
use crate::sdp::{feasibility_probe, Field, MatExpr, Model, SolverSettings};

pub const BISECTION_STEPS: usize = 40;

#[derive(Debug, Clone, Copy)]
pub enum DevicePair<'a> {
    ChannelChannel(&'a ChoiChannel, &'a ChoiChannel),
    ChannelPovm(&'a ChoiChannel, &'a Povm),
    PovmPovm(&'a Povm, &'a Povm),
}

impl DevicePair<'_> {
    pub fn input_dim(&self) -> usize {
        match self {
            DevicePair::ChannelChannel(a, _) | DevicePair::ChannelPovm(a, _) => a.dim_in(),
            DevicePair::PovmPovm(e, _) => e.dim(),
        }
    }

    fn check(&self) -> Result<()> {
        let (d1, d2) = match self {
            DevicePair::ChannelChannel(a, b) => (a.dim_in(), b.dim_in()),
            DevicePair::ChannelPovm(a, e) => (a.dim_in(), e.dim()),
            DevicePair::PovmPovm(e, f) => (e.dim(), f.dim()),
        };
        if d1 != d2 {
            return Err(Error::shape(format!(
                "devices act on dimensions {d1} and {d2}"
            )));
        }
        Ok(())
    }
}

fn sum(exprs: impl IntoIterator<Item = MatExpr>) -> MatExpr {
    let mut it = exprs.into_iter();
    let first = it.next().expect("sum of an empty list");
    it.fold(first, |acc, e| acc + e)
}

/// Constraints stating that the two devices, each mixed with weight `r`
/// of some noise device and renormalized, have a joint device.
pub fn compatibility_system(pair: DevicePair<'_>, r: f64) -> Result<Model> {
    pair.check()?;
    let mut m = Model::new();
    match pair {
        DevicePair::ChannelChannel(a, b) => {
            let (d, d1, d2) = (a.dim_in(), a.dim_out(), b.dim_out());
            let dims = [d1, d2, d];
            let j = m.block("J", d1 * d2 * d, Field::Complex);
            let n1 = m.block("N1", d1 * d, Field::Complex);
            let n2 = m.block("N2", d2 * d, Field::Complex);
            let id = ComplexMatrix::identity(d);
            let tj = m.var(j).trace_out(&dims, &[true, true, false]);
            m.equal(&tj, &id);
            let t1 = m.var(n1).trace_out(&[d1, d], &[true, false]);
            m.equal(&t1, &id);
            let t2 = m.var(n2).trace_out(&[d2, d], &[true, false]);
            m.equal(&t2, &id);
            let e1 = m
                .var(j)
                .trace_out(&dims, &[false, true, false])
                .scale(1.0 + r)
                - m.var(n1).scale(r);
            m.equal(&e1, a.choi());
            let e2 = m
                .var(j)
                .trace_out(&dims, &[true, false, false])
                .scale(1.0 + r)
                - m.var(n2).scale(r);
            m.equal(&e2, b.choi());
        }
        DevicePair::ChannelPovm(a, e) => {
            let (d, db) = (a.dim_in(), a.dim_out());
            let dims = [db, d];
            let id = ComplexMatrix::identity(d);
            let js: Vec<_> = (0..e.outcomes())
                .map(|x| m.block(&format!("J{x}"), db * d, Field::Complex))
                .collect();
            let noise = m.block("N", db * d, Field::Complex);
            let ms: Vec<_> = (0..e.outcomes())
                .map(|x| m.block(&format!("M{x}"), d, Field::Complex))
                .collect();
            let tj = sum(js
                .iter()
                .map(|&b| m.var(b).trace_out(&dims, &[true, false])));
            m.equal(&tj, &id);
            let tn = m.var(noise).trace_out(&dims, &[true, false]);
            m.equal(&tn, &id);
            let tm = sum(ms.iter().map(|&b| m.var(b)));
            m.equal(&tm, &id);
            let ec = sum(js.iter().map(|&b| m.var(b))).scale(1.0 + r) - m.var(noise).scale(r);
            m.equal(&ec, a.choi());
            for ((&jb, &mb), ex) in js.iter().zip(&ms).zip(e.effects()) {
                let lhs =
                    m.var(jb).trace_out(&dims, &[true, false]).scale(1.0 + r) - m.var(mb).scale(r);
                m.equal(&lhs, &ex.transpose());
            }
        }
        DevicePair::PovmPovm(e, f) => {
            let d = e.dim();
            let id = ComplexMatrix::identity(d);
            let g: Vec<Vec<_>> = (0..e.outcomes())
                .map(|x| {
                    (0..f.outcomes())
                        .map(|y| m.block(&format!("G{x}_{y}"), d, Field::Complex))
                        .collect()
                })
                .collect();
            let mx: Vec<_> = (0..e.outcomes())
                .map(|x| m.block(&format!("M{x}"), d, Field::Complex))
                .collect();
            let ny: Vec<_> = (0..f.outcomes())
                .map(|y| m.block(&format!("N{y}"), d, Field::Complex))
                .collect();
            let tg = sum(g.iter().flatten().map(|&b| m.var(b)));
            m.equal(&tg, &id);
            let tm = sum(mx.iter().map(|&b| m.var(b)));
            m.equal(&tm, &id);
            let tn = sum(ny.iter().map(|&b| m.var(b)));
            m.equal(&tn, &id);
            for (x, ex) in e.effects().iter().enumerate() {
                let lhs =
                    sum(g[x].iter().map(|&b| m.var(b))).scale(1.0 + r) - m.var(mx[x]).scale(r);
                m.equal(&lhs, ex);
            }
            for (y, fy) in f.effects().iter().enumerate() {
                let lhs =
                    sum(g.iter().map(|row| m.var(row[y]))).scale(1.0 + r) - m.var(ny[y]).scale(r);
                m.equal(&lhs, fy);
            }
        }
    }
    Ok(m)
}

fn feasible(pair: DevicePair<'_>, r: f64, settings: &SolverSettings) -> Result<bool> {
    let model = compatibility_system(pair, r)?;
    Ok(feasibility_probe(&model.problem(), settings)?.feasible)
}

/// Smallest noise weight `r ∈ [0, d]` making the pair compatible, found by
/// bisection with [`BISECTION_STEPS`] halvings.
pub fn roi_bisection_oracle(pair: DevicePair<'_>, settings: &SolverSettings) -> Result<f64> {
    let mut hi = pair.input_dim() as f64;
    if !feasible(pair, hi, settings)? {
        return Err(Error::Precondition(format!(
            "pair is not compatible at the search cap r = {hi}"
        )));
    }
    if feasible(pair, 0.0, settings)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if feasible(pair, mid, settings)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

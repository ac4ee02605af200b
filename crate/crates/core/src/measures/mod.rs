//! Incompatibility measures, channel distances and measurement errors.
//!
//! Every SDP-based value is computed from a primal program and checked
//! against a dual value: either a separately solved dual program or, for
//! large instances, the dual certificate assembled from the primal
//! multipliers and re-verified with dense linear algebra.

mod bisection;
mod diamond;
mod roi;

use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, operator_norm, ComplexMatrix};
use crate::quantum::Povm;
use crate::sdp::{SdpSolution, SolverSettings, SolverStatus};

pub use bisection::{compatibility_system, roi_bisection_oracle, DevicePair, BISECTION_STEPS};
pub use diamond::{
    diamond_distance, minimize_disturbance, recovered_distance, RecoverySearchResult,
};
pub use roi::{roi_channel_channel, roi_channel_povm, roi_povm_povm, woi_channel_channel};

/// Options shared by the SDP-based measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    pub settings: SolverSettings,
    /// Dual programs with more equality constraints than this are not
    /// solved separately; the certificate from the primal multipliers is
    /// used instead.
    pub separate_dual_limit: usize,
    /// Relative tolerance for primal/dual and reduction cross-checks.
    pub agreement_tol: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            settings: SolverSettings::default(),
            separate_dual_limit: 1500,
            agreement_tol: 1e-6,
        }
    }
}

impl MeasureOptions {
    pub fn with_settings(settings: SolverSettings) -> Self {
        MeasureOptions {
            settings,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    PrimalSdp,
    DualSdp,
    Bisection,
    Analytic,
}

/// Where the reported dual value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualSource {
    /// A dual program solved on its own.
    SeparateProgram,
    /// The certificate recovered from the multipliers of the primal solve.
    PrimalMultipliers,
}

/// Dual feasible point extracted from a primal solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub matrices: Vec<(String, ComplexMatrix)>,
    /// Dual objective evaluated at the certificate.
    pub value: f64,
    /// Largest violation of the dual constraints, zero when feasible.
    pub violation: f64,
}

impl Certificate {
    pub fn get(&self, name: &str) -> Option<&ComplexMatrix> {
        self.matrices
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncompatReport {
    pub value: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub method: Method,
    pub dual_source: DualSource,
    pub certificate: Certificate,
    pub iterations: usize,
}

impl IncompatReport {
    pub fn gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs()
    }
}

pub(crate) fn agree(what: &str, first: f64, second: f64, tol: f64) -> Result<()> {
    if (first - second).abs() <= tol * (1.0 + first.abs()) {
        Ok(())
    } else {
        Err(Error::CrossCheck {
            what: what.to_string(),
            first,
            second,
        })
    }
}

/// Solution of a program whose objective is only used as a bound. A stalled
/// solve still yields a valid bound when its best iterate is feasible, so
/// iteration-limit and numerical-failure results pass if the primal
/// residuals are within tolerance.
pub(crate) fn feasible_point(
    sol: SdpSolution,
    what: &str,
    settings: &SolverSettings,
) -> Result<SdpSolution> {
    let stalled = matches!(
        sol.status,
        SolverStatus::IterationLimit | SolverStatus::NumericalFailure
    );
    let r = &sol.residuals;
    if stalled
        && sol.primal_value.is_finite()
        && r.primal_equality <= 10.0 * settings.res_tol
        && r.primal_min_eig >= -settings.res_tol
    {
        return Ok(sol);
    }
    sol.require_optimal(what)
}

/// Clamps interior-point roundoff below the residual tolerance to zero.
pub(crate) fn clamp_nonnegative(value: f64, settings: &SolverSettings) -> f64 {
    if value < settings.res_tol.max(1e-9) {
        0.0
    } else {
        value
    }
}

/// `max(0, -λ_min)` over a list of Hermitian matrices.
pub(crate) fn psd_violation<'a>(ms: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for m in ms {
        let low = eigvalsh(&m.hermitian_part())?
            .last()
            .copied()
            .unwrap_or(0.0);
        worst = worst.max(-low);
    }
    Ok(worst)
}

/// Robustness of measurement `Σ_x ‖E^x‖ - 1`.
pub fn robustness_of_measurement(e: &Povm) -> Result<f64> {
    let mut total = 0.0;
    for x in e.effects() {
        total += operator_norm(x)?;
    }
    Ok((total - 1.0).max(0.0))
}

/// `Σ_x ‖E^x - G^x‖` with outcomes matched by label. Labels present in
/// only one of the two measurements pair with a zero effect.
pub fn l1_povm_error(e: &Povm, g: &Povm) -> Result<f64> {
    if e.dim() != g.dim() {
        return Err(Error::shape(format!(
            "measurements act on dimensions {} and {}",
            e.dim(),
            g.dim()
        )));
    }
    let zero = ComplexMatrix::zeros(e.dim(), e.dim());
    let mut total = 0.0;
    for (label, ex) in e.labels().iter().zip(e.effects()) {
        let gx = g
            .labels()
            .iter()
            .position(|l| l == label)
            .map_or(&zero, |k| g.effect(k));
        total += operator_norm(&(ex - gx))?;
    }
    for (label, gx) in g.labels().iter().zip(g.effects()) {
        if !e.labels().contains(label) {
            total += operator_norm(gx)?;
        }
    }
    Ok(total)
}

/// `Σ_x ‖E^x - G^x‖` for effect lists aligned by position, padding the
/// shorter list with zeros.
pub fn l1_effect_error(e: &[ComplexMatrix], g: &[ComplexMatrix]) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..e.len().max(g.len()) {
        total += match (e.get(k), g.get(k)) {
            (Some(a), Some(b)) => operator_norm(&(a - b))?,
            (Some(a), None) | (None, Some(a)) => operator_norm(a)?,
            (None, None) => 0.0,
        };
    }
    Ok(total)
}

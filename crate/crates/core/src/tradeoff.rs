//! Both sides of the joint-realizability tradeoff inequalities, evaluated on
//! concrete instances, together with the closed-form bounds they involve.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{c64, operator_norm, pauli, ComplexMatrix};
use crate::measures::{
    diamond_distance, l1_povm_error, minimize_disturbance, robustness_of_measurement,
    roi_channel_channel, roi_channel_povm, roi_povm_povm, MeasureOptions,
};
use crate::quantum::{ChoiChannel, JointChannel, Marginal, Povm};
use crate::sdp::{feasibility_probe_with_tol, Field, Model, SolverSettings};

/// Reports with slack below this are failures.
pub const SLACK_TOL: f64 = -1e-6;

/// Margin accepted by the instrument-decomposition probe before a channel
/// counts as compatible with a measurement.
pub const K_CHANNEL_MARGIN: f64 = -1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InequalityId {
    Theorem1,
    Theorem2,
    Prop3,
    Theorem4,
    Corollary,
    HMDominance,
    Lipschitz,
}

impl InequalityId {
    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityId::Theorem1 => "theorem1",
            InequalityId::Theorem2 => "theorem2",
            InequalityId::Prop3 => "prop3",
            InequalityId::Theorem4 => "theorem4",
            InequalityId::Corollary => "corollary",
            InequalityId::HMDominance => "hm-dominance",
            InequalityId::Lipschitz => "lipschitz",
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `lhs ≤ rhs` evaluated on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffReport {
    pub inequality: InequalityId,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    /// Where the inputs came from.
    pub instance: String,
    pub pass: bool,
}

impl TradeoffReport {
    pub fn new(inequality: InequalityId, lhs: f64, rhs: f64, instance: impl Into<String>) -> Self {
        let slack = rhs - lhs;
        TradeoffReport {
            inequality,
            lhs,
            rhs,
            slack,
            instance: instance.into(),
            pass: slack >= SLACK_TOL,
        }
    }

    pub fn with_instance(mut self, instance: impl Into<String>) -> Self {
        self.instance = instance.into();
        self
    }
}

fn channel_desc(c: &ChoiChannel) -> String {
    format!("{}->{}", c.dim_in(), c.dim_out())
}

fn same_shape(a: &ChoiChannel, b: &ChoiChannel, what: &str) -> Result<()> {
    if a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out() {
        return Err(Error::shape(format!(
            "{what}: channels {} and {} differ in shape",
            channel_desc(a),
            channel_desc(b)
        )));
    }
    Ok(())
}

/// `2 R(a, b) ≤ ‖a - J₁‖⋄ + ‖b - J₂‖⋄` for a joint channel `J`.
pub fn verify_theorem1(
    a: &ChoiChannel,
    b: &ChoiChannel,
    joint: &JointChannel,
    opts: &MeasureOptions,
) -> Result<TradeoffReport> {
    let m1 = joint.marginal(Marginal::First);
    let m2 = joint.marginal(Marginal::Second);
    same_shape(a, &m1, "first marginal")?;
    same_shape(b, &m2, "second marginal")?;
    let lhs = 2.0 * roi_channel_channel(a, b, opts)?.value;
    let rhs = diamond_distance(a, &m1, opts)?.value + diamond_distance(b, &m2, opts)?.value;
    let desc = format!(
        "channels {} and {}, joint {}->{}x{}",
        channel_desc(a),
        channel_desc(b),
        joint.dim_in(),
        joint.dim_out1(),
        joint.dim_out2()
    );
    Ok(TradeoffReport::new(InequalityId::Theorem1, lhs, rhs, desc))
}

/// `2 |R(a, b) - R(c, d)| ≤ ‖a - c‖⋄ + ‖b - d‖⋄`.
pub fn verify_lipschitz(
    a: &ChoiChannel,
    b: &ChoiChannel,
    c: &ChoiChannel,
    d: &ChoiChannel,
    opts: &MeasureOptions,
) -> Result<TradeoffReport> {
    same_shape(a, c, "first pair")?;
    same_shape(b, d, "second pair")?;
    let r_ab = roi_channel_channel(a, b, opts)?.value;
    let r_cd = roi_channel_channel(c, d, opts)?.value;
    let lhs = 2.0 * (r_ab - r_cd).abs();
    let rhs = diamond_distance(a, c, opts)?.value + diamond_distance(b, d, opts)?.value;
    let desc = format!(
        "pairs ({}, {}) and ({}, {})",
        channel_desc(a),
        channel_desc(b),
        channel_desc(c),
        channel_desc(d)
    );
    Ok(TradeoffReport::new(InequalityId::Lipschitz, lhs, rhs, desc))
}

/// Marginals of a joint measurement whose effects are listed as `G^{xy}` at
/// index `x * ny + y`, labelled like `e` and `f`.
pub fn joint_povm_marginals(g: &Povm, e: &Povm, f: &Povm) -> Result<(Povm, Povm)> {
    let (nx, ny) = (e.outcomes(), f.outcomes());
    if g.outcomes() != nx * ny {
        return Err(Error::shape(format!(
            "joint measurement has {} outcomes, expected a {nx} x {ny} grid",
            g.outcomes()
        )));
    }
    if g.dim() != e.dim() || g.dim() != f.dim() {
        return Err(Error::shape(format!(
            "measurements act on dimensions {}, {} and {}",
            e.dim(),
            f.dim(),
            g.dim()
        )));
    }
    let d = g.dim();
    let mut first = vec![ComplexMatrix::zeros(d, d); nx];
    let mut second = vec![ComplexMatrix::zeros(d, d); ny];
    for x in 0..nx {
        for y in 0..ny {
            let gxy = g.effect(x * ny + y);
            first[x] += gxy;
            second[y] += gxy;
        }
    }
    Ok((
        Povm::new(first, Some(e.labels().to_vec()))?,
        Povm::new(second, Some(f.labels().to_vec()))?,
    ))
}

/// `2 R(e, f) ≤ ε(e, G₁) + ε(f, G₂)` for a joint measurement `G`.
pub fn verify_theorem2(
    e: &Povm,
    f: &Povm,
    g: &Povm,
    opts: &MeasureOptions,
) -> Result<TradeoffReport> {
    let (g1, g2) = joint_povm_marginals(g, e, f)?;
    let lhs = 2.0 * roi_povm_povm(e, f, opts)?.value;
    let rhs = l1_povm_error(e, &g1)? + l1_povm_error(f, &g2)?;
    let desc = format!(
        "measurements with {} and {} outcomes on d={}, joint with {} outcomes",
        e.outcomes(),
        f.outcomes(),
        e.dim(),
        g.outcomes()
    );
    Ok(TradeoffReport::new(InequalityId::Theorem2, lhs, rhs, desc))
}

/// `(√(R(E) + 1) - 1)² / (d - 1)` with the closed-form robustness.
pub fn prop3_bound(e: &Povm) -> Result<f64> {
    let d = e.dim();
    if d < 2 {
        return Err(Error::domain(
            "the robustness bound needs dimension at least 2",
        ));
    }
    let r = robustness_of_measurement(e)?;
    Ok(((r + 1.0).sqrt() - 1.0).powi(2) / (d - 1) as f64)
}

/// The bound against `R(id, E)` computed by semidefinite programming.
pub fn verify_prop3(e: &Povm, opts: &MeasureOptions) -> Result<TradeoffReport> {
    let lhs = prop3_bound(e)?;
    let rhs = roi_channel_povm(&ChoiChannel::identity(e.dim()), e, opts)?.value;
    let desc = format!(
        "identity and a {}-outcome measurement on d={}",
        e.outcomes(),
        e.dim()
    );
    Ok(TradeoffReport::new(InequalityId::Prop3, lhs, rhs, desc))
}

/// `(1/16) max_x (‖E^x‖ + ‖I - E^x‖ - 1)²`.
pub fn hm_bound(e: &Povm) -> Result<f64> {
    let id = ComplexMatrix::identity(e.dim());
    let mut best: f64 = 0.0;
    for ex in e.effects() {
        let t = operator_norm(ex)? + operator_norm(&(&id - ex))? - 1.0;
        best = best.max(t * t);
    }
    Ok(best / 16.0)
}

/// `hm_bound(E) ≤ 2 prop3_bound(E)` for `2 ≤ d ≤ 6`.
pub fn verify_hm_dominance(e: &Povm) -> Result<TradeoffReport> {
    let d = e.dim();
    if !(2..=6).contains(&d) {
        return Err(Error::domain(format!(
            "dominance is only established for 2 <= d <= 6, got {d}"
        )));
    }
    let lhs = hm_bound(e)?;
    let rhs = 2.0 * prop3_bound(e)?;
    let desc = format!("{}-outcome measurement on d={d}", e.outcomes());
    Ok(TradeoffReport::new(
        InequalityId::HMDominance,
        lhs,
        rhs,
        desc,
    ))
}

/// Largest `t` such that `Λ = Σ_x Λ_x` with CP maps `Λ_x` whose Choi
/// matrices are `⪰ t I` and satisfy `Λ_x^†(I) = K^x`. Nonnegative exactly
/// when `Λ` is the channel of some `K`-instrument.
pub fn k_channel_margin(lam: &ChoiChannel, k: &Povm, settings: &SolverSettings) -> Result<f64> {
    if lam.dim_in() != k.dim() {
        return Err(Error::shape(format!(
            "channel input {} but measurement on dimension {}",
            lam.dim_in(),
            k.dim()
        )));
    }
    let (d, db) = (lam.dim_in(), lam.dim_out());
    let mut m = Model::new();
    let parts: Vec<_> = (0..k.outcomes())
        .map(|x| m.block(&format!("J{x}"), db * d, Field::Complex))
        .collect();
    let mut total = m.var(parts[0]);
    for &p in &parts[1..] {
        total = total + m.var(p);
    }
    m.equal(&total, lam.choi());
    // The last marginal condition follows from the others and trace preservation.
    for (&p, kx) in parts.iter().zip(k.effects()).take(k.outcomes() - 1) {
        let marg = m.var(p).trace_out(&[db, d], &[true, false]);
        m.equal(&marg, &kx.transpose());
    }
    Ok(feasibility_probe_with_tol(&m.problem(), settings, -K_CHANNEL_MARGIN)?.margin)
}

fn require_k_channel(lam: &ChoiChannel, k: &Povm, settings: &SolverSettings) -> Result<()> {
    let margin = k_channel_margin(lam, k, settings)?;
    if margin < K_CHANNEL_MARGIN {
        return Err(Error::Precondition(format!(
            "channel is not compatible with the measurement (margin {margin:.3e})"
        )));
    }
    Ok(())
}

/// `2 prop3_bound(E) ≤ ε(E, K) + δ(Λ)` for a `K`-channel `Λ`.
pub fn verify_theorem4(
    e: &Povm,
    k: &Povm,
    lam: &ChoiChannel,
    opts: &MeasureOptions,
) -> Result<TradeoffReport> {
    if e.dim() != k.dim() {
        return Err(Error::shape(format!(
            "measurements act on dimensions {} and {}",
            e.dim(),
            k.dim()
        )));
    }
    if lam.dim_out() != lam.dim_in() {
        return Err(Error::shape(format!(
            "disturbance needs a channel {}->{}",
            lam.dim_in(),
            lam.dim_in()
        )));
    }
    require_k_channel(lam, k, &opts.settings)?;
    let lhs = 2.0 * prop3_bound(e)?;
    let rhs = l1_povm_error(e, k)? + minimize_disturbance(lam, opts)?.recovered_distance;
    let desc = format!(
        "measurements with {} and {} outcomes on d={}, channel {}",
        e.outcomes(),
        k.outcomes(),
        e.dim(),
        channel_desc(lam)
    );
    Ok(TradeoffReport::new(InequalityId::Theorem4, lhs, rhs, desc))
}

/// `2 prop3_bound(E) ≤ δ(Λ)` for an `E`-channel `Λ`.
pub fn verify_corollary(
    e: &Povm,
    lam: &ChoiChannel,
    opts: &MeasureOptions,
) -> Result<TradeoffReport> {
    let r = verify_theorem4(e, e, lam, opts)?;
    Ok(TradeoffReport {
        inequality: InequalityId::Corollary,
        ..r
    })
}

/// The four-outcome qubit measurement `G^{jk} = (I + (j σx + k σz)/√2)/4`,
/// ordered `(+,+), (+,-), (-,+), (-,-)`. Its marginals are the σx and σz
/// measurements with sharpness `1/√2`.
pub fn smeared_joint_povm() -> Povm {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut effects = Vec::with_capacity(4);
    let mut labels = Vec::with_capacity(4);
    for (jl, j) in [("+1", 1.0), ("-1", -1.0)] {
        for (kl, k) in [("+1", 1.0), ("-1", -1.0)] {
            let m = &(&pauli::x().scale(j * s) + &pauli::z().scale(k * s)) + &pauli::id();
            effects.push(m.scale(0.25));
            labels.push(format!("{jl},{kl}"));
        }
    }
    Povm::new(effects, Some(labels)).expect("valid by construction")
}

/// `|ψ><ψ|` for a unit vector given by its amplitudes.
pub fn pure_state(amplitudes: &[(f64, f64)]) -> ComplexMatrix {
    let v: Vec<_> = amplitudes.iter().map(|&(re, im)| c64(re, im)).collect();
    ComplexMatrix::outer(&v, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MeasureOptions;
    use crate::quantum::{lueders_channel, sample_random_povm};

    fn opts() -> MeasureOptions {
        MeasureOptions::default()
    }

    #[test]
    fn report_orientation() {
        let r = TradeoffReport::new(InequalityId::Prop3, 1.0, 0.5, "x");
        assert_eq!(r.slack, -0.5);
        assert!(!r.pass);
        assert!(TradeoffReport::new(InequalityId::Prop3, 1.0, 1.0 - 9e-7, "x").pass);
    }

    #[test]
    fn closed_form_bounds_for_unbiased_family() {
        for k in 0..=10 {
            let eta = k as f64 / 10.0;
            let z = Povm::unbiased_qubit(eta).unwrap();
            let expect = ((1.0 + eta).sqrt() - 1.0).powi(2);
            assert!((prop3_bound(&z).unwrap() - expect).abs() < 1e-12);
            assert!((hm_bound(&z).unwrap() - eta * eta / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hm_bound_for_sixfold() {
        let p = 0.3;
        let e = Povm::sixfold(p).unwrap();
        assert!((hm_bound(&e).unwrap() - (1.0 - p) * (1.0 - p) / 144.0).abs() < 1e-12);
        assert!(
            (2.0 * prop3_bound(&e).unwrap() - 2.0 * ((2.0 - p).sqrt() - 1.0).powi(2)).abs() < 1e-12
        );
    }

    #[test]
    fn trivial_bounds_vanish() {
        let t = Povm::trivial(3, &[0.2, 0.8]).unwrap();
        assert_eq!(prop3_bound(&t).unwrap(), 0.0);
        assert!(hm_bound(&t).unwrap() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let one = Povm::trivial(1, &[1.0]).unwrap();
        assert!(matches!(prop3_bound(&one), Err(Error::Domain(_))));
        let big = sample_random_povm(7, 2, 1).unwrap();
        assert!(matches!(verify_hm_dominance(&big), Err(Error::Domain(_))));
    }

    #[test]
    fn smeared_marginals() {
        let x = Povm::binary_qubit(&pauli::x(), 1.0).unwrap();
        let z = Povm::binary_qubit(&pauli::z(), 1.0).unwrap();
        let (gx, gz) = joint_povm_marginals(&smeared_joint_povm(), &x, &z).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ex = Povm::binary_qubit(&pauli::x(), s).unwrap();
        let ez = Povm::binary_qubit(&pauli::z(), s).unwrap();
        for i in 0..2 {
            assert!(gx.effect(i).max_abs_diff(ex.effect(i)) < 1e-15);
            assert!(gz.effect(i).max_abs_diff(ez.effect(i)) < 1e-15);
        }
        // Each outcome is off by (1 - 1/√2) σx / 2.
        let err = l1_povm_error(&x, &gx).unwrap();
        assert!((err - (1.0 - s)).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let x = Povm::unbiased_qubit(1.0).unwrap();
        let g = sample_random_povm(2, 3, 4).unwrap();
        assert!(matches!(
            joint_povm_marginals(&g, &x, &x),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn lueders_channel_is_its_own_k_channel() {
        let z = Povm::unbiased_qubit(0.6).unwrap();
        let lam = lueders_channel(&z).unwrap();
        let margin = k_channel_margin(&lam, &z, &SolverSettings::default()).unwrap();
        assert!(margin >= K_CHANNEL_MARGIN, "{margin}");
    }

    #[test]
    fn identity_is_not_a_sharp_k_channel() {
        let z = Povm::unbiased_qubit(1.0).unwrap();
        let id = ChoiChannel::identity(2);
        let e = verify_theorem4(&z, &z, &id, &opts());
        assert!(matches!(e, Err(Error::Precondition(_))), "{e:?}");
    }

    #[test]
    fn trivial_theorem4_instance() {
        let t = Povm::trivial(2, &[0.5, 0.5]).unwrap();
        let r = verify_theorem4(&t, &t, &ChoiChannel::identity(2), &opts()).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-7 && r.pass);
    }

    #[test]
    fn corollary_on_lueders_channel() {
        let eta = 0.5;
        let z = Povm::unbiased_qubit(eta).unwrap();
        let r = verify_corollary(&z, &lueders_channel(&z).unwrap(), &opts()).unwrap();
        assert_eq!(r.inequality, InequalityId::Corollary);
        assert!((r.lhs - 2.0 * ((1.0 + eta).sqrt() - 1.0).powi(2)).abs() < 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn theorem2_smeared_joint() {
        let x = Povm::binary_qubit(&pauli::x(), 1.0).unwrap();
        let z = Povm::binary_qubit(&pauli::z(), 1.0).unwrap();
        let r = verify_theorem2(&x, &z, &smeared_joint_povm(), &opts()).unwrap();
        assert!(r.lhs > 0.0 && r.rhs > 0.0 && r.pass, "{r:?}");
    }

    #[test]
    fn theorem1_with_exact_joint() {
        let a = ChoiChannel::depolarizing(2, 0.4).unwrap();
        let tau = pure_state(&[(1.0, 0.0), (0.0, 0.0)]);
        let joint = JointChannel::with_fixed_second(&a, &tau).unwrap();
        let b = joint.marginal(Marginal::Second);
        let r = verify_theorem1(&a, &b, &joint, &opts()).unwrap();
        assert!(r.lhs.abs() < 1e-7 && r.rhs.abs() < 1e-7 && r.pass, "{r:?}");
    }
}

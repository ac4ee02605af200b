use incompat_core::linalg::{
    c64, kron, operator_norm, partial_trace, psd_check, trace_norm, ComplexMatrix, Subsystem,
};
use incompat_core::measures::{
    diamond_distance, l1_effect_error, minimize_disturbance, recovered_distance,
    roi_channel_channel, roi_channel_povm, roi_povm_povm, MeasureOptions,
};
use incompat_core::quantum::{
    measurement_channel_choi, random_channel, random_povm, random_state, random_unitary,
    sample_random_channel, sample_random_povm, seeded_rng, ChoiChannel, JointChannel, Povm,
};
use incompat_core::sweep::{run_sweep, Family, SweepSpec};
use incompat_core::tradeoff::{
    hm_bound, prop3_bound, verify_hm_dominance, verify_theorem1, InequalityId, TradeoffReport,
    SLACK_TOL,
};
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut rng = seeded_rng(seed);
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

/// `m` on `A ⊗ B` rewritten on `B ⊗ A`.
fn swap(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(da * db, da * db, |p, q| {
        let (b, a) = (p / da, p % da);
        let (b2, a2) = (q / da, q % da);
        m[(a * db + b, a2 * db + b2)]
    })
}

/// Choi matrix of the classical relabelling `k ↦ f(k)`.
fn relabel(n_in: usize, n_out: usize, f: impl Fn(usize) -> usize) -> ChoiChannel {
    let mut choi = ComplexMatrix::zeros(n_out * n_in, n_out * n_in);
    for k in 0..n_in {
        let idx = f(k) * n_in + k;
        choi[(idx, idx)] = c64(1.0, 0.0);
    }
    ChoiChannel::new(n_in, n_out, choi).unwrap()
}

fn opts() -> MeasureOptions {
    MeasureOptions::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kron_is_associative(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, dc in 1usize..3) {
        let a = random_matrix(da, da + 1, seed);
        let b = random_matrix(db, 2, seed ^ 1);
        let c = random_matrix(dc, dc, seed ^ 2);
        let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn partial_trace_commutes_with_swap(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let m = random_matrix(da * db, da * db, seed);
        let swapped = partial_trace(&swap(&m, da, db), db, da, Subsystem::A).unwrap();
        let direct = partial_trace(&m, da, db, Subsystem::B).unwrap();
        prop_assert!(swapped.max_abs_diff(&direct) <= 1e-12);
    }

    #[test]
    fn operator_norm_is_unitarily_invariant(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = seeded_rng(seed);
        let m = random_matrix(d, d, seed);
        let (u, v) = (random_unitary(d, &mut rng), random_unitary(d, &mut rng));
        let rotated = u.matmul(&m).matmul(&v);
        prop_assert!((operator_norm(&rotated).unwrap() - operator_norm(&m).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn trace_norm_is_sandwiched(seed in any::<u64>(), d in 1usize..5, rank in 1usize..5) {
        let rank = rank.min(d);
        let m = random_matrix(d, rank, seed).matmul(&random_matrix(rank, d, seed ^ 7));
        let (t, o) = (trace_norm(&m).unwrap(), operator_norm(&m).unwrap());
        prop_assert!(t >= o - 1e-12);
        prop_assert!(t <= rank as f64 * o + 1e-12);
    }

    #[test]
    fn transpose_is_an_involution(seed in any::<u64>(), r in 1usize..5, c in 1usize..5) {
        let m = random_matrix(r, c, seed);
        prop_assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn sampled_devices_satisfy_invariants(seed in any::<u64>(), d in 1usize..5, n in 1usize..5) {
        let e = sample_random_povm(d, n, seed).unwrap();
        let mut total = ComplexMatrix::zeros(d, d);
        for ex in e.effects() {
            prop_assert!(ex.hermitian_deviation() <= 1e-8);
            prop_assert!(psd_check(ex, 1e-8).unwrap().min_eig >= -1e-8);
            total = &total + ex;
        }
        prop_assert!(total.max_abs_diff(&ComplexMatrix::identity(d)) <= 1e-8);

        let ch = sample_random_channel(d, n, seed).unwrap();
        prop_assert!(psd_check(ch.choi(), 1e-8).unwrap().min_eig >= -1e-8);
        let tr = partial_trace(ch.choi(), n, d, Subsystem::A).unwrap();
        prop_assert!(tr.max_abs_diff(&ComplexMatrix::identity(d)) <= 1e-8);
    }

    #[test]
    fn measurement_channel_reproduces_born_rule(seed in any::<u64>(), d in 1usize..5, n in 1usize..5) {
        let mut rng = seeded_rng(seed);
        let e = random_povm(d, n, &mut rng).unwrap();
        let rho = random_state(d, &mut rng);
        let out = measurement_channel_choi(&e).apply(&rho).unwrap();
        for (x, ex) in e.effects().iter().enumerate() {
            let born = ex.matmul(&rho).trace().re;
            prop_assert!((out[(x, x)].re - born).abs() <= 1e-10);
        }
        prop_assert!(out.max_abs_diff(&ComplexMatrix::diag_real(&(0..n).map(|x| out[(x, x)].re).collect::<Vec<_>>())) <= 1e-10);
    }

    #[test]
    fn marginalizing_a_joint_record_gives_marginal_records(seed in any::<u64>(), d in 1usize..4, nx in 1usize..4, ny in 1usize..4) {
        let mut rng = seeded_rng(seed);
        let g = random_povm(d, nx * ny, &mut rng).unwrap();
        let marginal = |keep_x: bool| {
            let n = if keep_x { nx } else { ny };
            let effects = (0..n)
                .map(|k| {
                    let mut s = ComplexMatrix::zeros(d, d);
                    for (idx, gk) in g.effects().iter().enumerate() {
                        let hit = if keep_x { idx / ny } else { idx % ny };
                        if hit == k {
                            s = &s + gk;
                        }
                    }
                    s
                })
                .collect();
            Povm::new(effects, None).unwrap()
        };
        let record = measurement_channel_choi(&g);
        let to_x = relabel(nx * ny, nx, |k| k / ny).after(&record).unwrap();
        let to_y = relabel(nx * ny, ny, |k| k % ny).after(&record).unwrap();
        prop_assert!(to_x.choi().max_abs_diff(measurement_channel_choi(&marginal(true)).choi()) <= 1e-12);
        prop_assert!(to_y.choi().max_abs_diff(measurement_channel_choi(&marginal(false)).choi()) <= 1e-12);
    }

    #[test]
    fn report_pass_matches_slack(lhs in -5.0f64..5.0, delta in -1e-5f64..1e-5) {
        let r = TradeoffReport::new(InequalityId::Theorem2, lhs, lhs + delta, "synthetic");
        prop_assert_eq!(r.slack, (lhs + delta) - lhs);
        prop_assert_eq!(r.pass, r.slack >= SLACK_TOL);
    }

    #[test]
    fn hm_bound_is_dominated(seed in any::<u64>(), d in 2usize..7, n in 2usize..5) {
        let e = sample_random_povm(d, n, seed).unwrap();
        let r = verify_hm_dominance(&e).unwrap();
        prop_assert!(r.pass, "{r:?}");
        prop_assert_eq!(r.lhs, hm_bound(&e).unwrap());
        prop_assert_eq!(r.rhs, 2.0 * prop3_bound(&e).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn povm_robustness_is_symmetric(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = seeded_rng(seed);
        let e = random_povm(2, n, &mut rng).unwrap();
        let f = random_povm(2, 2, &mut rng).unwrap();
        let ef = roi_povm_povm(&e, &f, &opts()).unwrap().value;
        let fe = roi_povm_povm(&f, &e, &opts()).unwrap().value;
        prop_assert!((ef - fe).abs() <= 1e-7, "{ef} vs {fe}");
    }

    #[test]
    fn robustness_reduces_to_measurement_channels(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let lam = random_channel(2, 2, &mut rng).unwrap();
        let e = random_povm(2, 2, &mut rng).unwrap();
        let f = random_povm(2, 3, &mut rng).unwrap();
        let (ge, gf) = (measurement_channel_choi(&e), measurement_channel_choi(&f));

        let direct = roi_channel_povm(&lam, &e, &opts()).unwrap().value;
        let via_channel = roi_channel_channel(&lam, &ge, &opts()).unwrap().value;
        prop_assert!((direct - via_channel).abs() <= 1e-6, "{direct} vs {via_channel}");

        let direct = roi_povm_povm(&e, &f, &opts()).unwrap().value;
        let via_channel = roi_channel_channel(&ge, &gf, &opts()).unwrap().value;
        prop_assert!((direct - via_channel).abs() <= 1e-6, "{direct} vs {via_channel}");
    }

    #[test]
    fn robustness_solves_are_strongly_dual(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = random_channel(2, 2, &mut rng).unwrap();
        let b = random_channel(2, 2, &mut rng).unwrap();
        let r = roi_channel_channel(&a, &b, &opts()).unwrap();
        prop_assert!(r.gap() <= 1e-6 * (1.0 + r.value.abs()), "{r:?}");
    }

    #[test]
    fn diamond_distance_is_a_metric(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = random_channel(2, 2, &mut rng).unwrap();
        let b = random_channel(2, 2, &mut rng).unwrap();
        let c = random_channel(2, 2, &mut rng).unwrap();
        let ab = diamond_distance(&a, &b, &opts()).unwrap().value;
        let ba = diamond_distance(&b, &a, &opts()).unwrap().value;
        let bc = diamond_distance(&b, &c, &opts()).unwrap().value;
        let ac = diamond_distance(&a, &c, &opts()).unwrap().value;
        prop_assert_eq!(ab, ba);
        prop_assert!(ac <= ab + bc + 1e-8);
        for v in [ab, bc, ac] {
            prop_assert!((0.0..=2.0 + 1e-8).contains(&v));
        }
    }

    #[test]
    fn record_distance_is_bounded_by_effect_error(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = seeded_rng(seed);
        let e = random_povm(2, n, &mut rng).unwrap();
        let g = random_povm(2, n, &mut rng).unwrap();
        let lhs = diamond_distance(&measurement_channel_choi(&e), &measurement_channel_choi(&g), &opts()).unwrap().value;
        let rhs = l1_effect_error(e.effects(), g.effects()).unwrap();
        prop_assert!(lhs <= rhs + 1e-8, "{lhs} > {rhs}");
    }

    #[test]
    fn theorem1_holds_on_random_triples(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = random_channel(2, 2, &mut rng).unwrap();
        let b = random_channel(2, 2, &mut rng).unwrap();
        let joint = JointChannel::from_channel(random_channel(2, 4, &mut rng).unwrap(), 2, 2).unwrap();
        let r = verify_theorem1(&a, &b, &joint, &opts()).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }

    #[test]
    fn supplied_recoveries_do_no_better_than_the_optimum(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let lam = random_channel(2, 2, &mut rng).unwrap();
        let rec = random_channel(2, 2, &mut rng).unwrap();
        let best = minimize_disturbance(&lam, &opts()).unwrap();
        let supplied = recovered_distance(&lam, &rec, &opts()).unwrap();
        prop_assert!(supplied >= best.value - 1e-6, "{supplied} < {}", best.value);
        prop_assert!(best.recovered_distance >= 0.0);
    }
}

#[test]
fn unbiased_family_attains_the_robustness_bound() {
    for k in 0..=10 {
        let eta = k as f64 / 10.0;
        let e = Povm::unbiased_qubit(eta).unwrap();
        let sdp = roi_channel_povm(&ChoiChannel::identity(2), &e, &opts())
            .unwrap()
            .value;
        let bound = prop3_bound(&e).unwrap();
        assert!((sdp - bound).abs() <= 1e-6, "eta {eta}: {sdp} vs {bound}");
    }
}

#[test]
fn compatible_pairs_have_zero_robustness() {
    let e = Povm::unbiased_qubit(0.7).unwrap();
    let trivial = Povm::trivial(2, &[0.3, 0.7]).unwrap();
    assert!(roi_povm_povm(&e, &trivial, &opts()).unwrap().value <= 1e-7);
    let half = Povm::unbiased_qubit(0.5).unwrap();
    let record = measurement_channel_choi(&half);
    assert!(
        roi_channel_channel(&record, &record, &opts())
            .unwrap()
            .value
            <= 1e-7
    );
}

#[test]
fn disturbance_bounds_are_monotone_along_grids() {
    let column = |family: Family, name: &str| {
        let at = family.columns().iter().position(|c| *c == name).unwrap();
        let spec = SweepSpec {
            columns: vec![name.to_string()],
            ..SweepSpec::new(family, 0.0, 1.0, 21)
        };
        run_sweep(&spec, &opts(), 1)
            .unwrap()
            .into_iter()
            .map(|r| r.values[at])
            .collect::<Vec<f64>>()
    };
    let rising = column(Family::UnbiasedEta, "bound_corollary");
    assert!(rising.windows(2).all(|w| w[1] > w[0]), "{rising:?}");
    let falling = column(Family::SixfoldP, "bound_corollary");
    assert!(falling.windows(2).all(|w| w[1] < w[0]), "{falling:?}");
    for (k, v) in falling.iter().enumerate() {
        let p = k as f64 / 20.0;
        assert!((v - 2.0 * ((2.0 - p).sqrt() - 1.0).powi(2)).abs() <= 1e-12);
    }
}

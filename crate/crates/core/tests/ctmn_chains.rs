use std::collections::BTreeSet;

use approx::assert_relative_eq;
use axsr::ctmn::*;
use axsr::propagation::{frame_durations, Position};
use axsr::scenario::{configure, toy_environment, toy_scenario, Bss, Deployment, SrMode};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn toy(id: u32, mode: SrMode, pd: f64, srg: Option<f64>) -> (Deployment, CtmnSolution) {
    let dep = toy_scenario(id).unwrap();
    let env = toy_environment(id).unwrap();
    let (d, c) = configure(&dep, mode, 0, pd, srg).unwrap();
    let s = solve(&d, &c, &env, CtmnOptions::from_env(&env)).unwrap();
    (d, s)
}

fn residual(s: &CtmnSolution) -> f64 {
    let q = build_generator(&s.graph).unwrap();
    (s.pi.transpose() * q).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn reachable_labels(dep: &Deployment, s: &CtmnSolution) -> BTreeSet<String> {
    s.graph
        .states
        .iter()
        .zip(&s.graph.reachable)
        .filter(|(_, r)| **r)
        .map(|(st, _)| st.label(dep))
        .collect()
}

#[test]
fn toy1_legacy_has_unreachable_ab() {
    let (dep, s) = toy(1, SrMode::Legacy, -82.0, None);
    let labels: BTreeSet<String> = s.graph.states.iter().map(|st| st.label(&dep)).collect();
    let want: BTreeSet<String> = ["empty", "A", "B", "A B"].iter().map(|s| s.to_string()).collect();
    assert_eq!(labels, want);
    let ab = s.graph.find(&dep, "A B").unwrap();
    assert!(!s.graph.reachable[ab]);
    assert!(s.graph.edges.iter().all(|e| e.to != ab && e.from != ab));
    assert_eq!(s.pi[ab], 0.0);
}

#[test]
fn toy1_sr_state_not_entered_from_empty() {
    let (dep, s) = toy(1, SrMode::OnlyA, -78.0, None);
    let g = &s.graph;
    let empty = g.find(&dep, "empty").unwrap();
    let a_sr = g.find(&dep, "A_SR").unwrap();
    let a_sr_b = g.find(&dep, "A_SR B").unwrap();
    assert!(g.reachable[a_sr] && g.reachable[a_sr_b]);
    assert!(!g.has_edge(empty, a_sr));
    assert!(g.has_edge(a_sr_b, a_sr));
    // one-way: A_SR drains to the empty state but never comes back
    assert!(g.has_edge(a_sr, empty));
}

#[test]
fn lambda_from_backoff() {
    let env = toy_environment(1).unwrap();
    let o = CtmnOptions::from_env(&env);
    assert_relative_eq!(o.lambda, 1.0 / (7.5 * 9e-6), max_relative = 1e-12);
    assert!((o.lambda - 14_815.0).abs() < 1.0);
}

#[test]
fn birth_death_closed_form() {
    for (l, m) in [(1.0, 1.0), (14_815.0, 180.0), (3.0, 1e4), (0.5, 2.5)] {
        let q = DMatrix::from_row_slice(2, 2, &[-l, l, m, -m]);
        let pi = stationary_distribution(&q, &[true, true]).unwrap();
        assert!((pi[0] - m / (l + m)).abs() < 1e-12);
        assert!((pi[1] - l / (l + m)).abs() < 1e-12);
    }
}

#[test]
fn single_bss_chain() {
    let env = toy_environment(1).unwrap();
    let mut dep = toy_scenario(1).unwrap();
    dep.bsses.truncate(1);
    let s = solve(&dep, &dep.configs(), &env, CtmnOptions::from_env(&env)).unwrap();
    let labels: Vec<String> = s.graph.states.iter().map(|st| st.label(&dep)).collect();
    assert_eq!(labels, ["empty", "A"]);
    let a = &s.graph.states[1].active[0];
    let fd = frame_durations(64, &a.mcs, &env.phy, &env.mac).unwrap();
    let (l, m) = (s.graph.lambda, 1.0 / fd.t_exchange_success);
    let want = l / (l + m) * fd.n_agg as f64 * 12_000.0 / fd.t_exchange_success;
    assert_relative_eq!(s.throughput[0], want, max_relative = 1e-12);
}

#[test]
fn toy_chains_are_solved_exactly() {
    let modes = [SrMode::Legacy, SrMode::OnlyA, SrMode::All];
    for id in [1, 2] {
        for mode in modes {
            for pd in (-82..=-62).step_by(2) {
                let srg = (id == 2).then_some(pd as f64);
                let (_, s) = toy(id, mode, pd as f64, srg);
                assert!(residual(&s) < 1e-10, "toy {id} {mode} {pd}: {}", residual(&s));
                assert!((s.pi.sum() - 1.0).abs() < 1e-12);
                assert!(s.pi.iter().all(|&p| p >= 0.0));
                let q = build_generator(&s.graph).unwrap();
                for i in 0..q.nrows() {
                    assert!(q.row(i).sum().abs() < 1e-6);
                    for j in 0..q.ncols() {
                        assert!(i == j || q[(i, j)] >= 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn toy1_only_a_boundary() {
    let (_, legacy) = toy(1, SrMode::Legacy, -82.0, None);
    let agg = legacy.throughput[0] + legacy.throughput[1];
    for pd in -82..=-62 {
        let (_, s) = toy(1, SrMode::OnlyA, pd as f64, None);
        let (a, b) = (s.throughput[0], s.throughput[1]);
        if pd < -79 {
            assert_relative_eq!(a, b, max_relative = 1e-3);
        } else if pd == -79 {
            // 18 dBm is still sensed at AP_B, so nothing runs in parallel
            assert!(a + b <= agg, "pd {pd}: {a} + {b} > {agg}");
        } else {
            assert!(a + b > agg, "pd {pd}: {a} + {b} <= {agg}");
        }
    }
}

#[test]
fn toy1_both_sr_mostly_parallel() {
    for pd in -79..=-62 {
        let (_, s) = toy(1, SrMode::All, pd as f64, None);
        let parallel: f64 = s
            .graph
            .states
            .iter()
            .zip(s.pi.iter())
            .filter(|(st, _)| st.active.len() == 2)
            .map(|(_, p)| p)
            .sum();
        assert!(parallel > 0.85, "pd {pd}: {parallel}");
    }
}

fn mirrored() -> Deployment {
    let p = Position::new;
    Deployment {
        width: 10.0,
        height: 10.0,
        grid: None,
        bsses: vec![
            Bss::new("A", p(4.0, 0.0), p(0.0, 0.0), 1),
            Bss::new("B", p(6.0, 0.0), p(10.0, 0.0), 2),
        ],
    }
}

#[test]
fn mirrored_deployment_is_fair() {
    let env = toy_environment(1).unwrap();
    for pd in -82..=-62 {
        let (d, c) = configure(&mirrored(), SrMode::All, 0, pd as f64, None).unwrap();
        let s = solve(&d, &c, &env, CtmnOptions::from_env(&env)).unwrap();
        assert_relative_eq!(s.throughput[0], s.throughput[1], max_relative = 1e-9);
    }
}

#[test]
fn inert_sr_matches_legacy() {
    for id in [1, 2] {
        let (d0, legacy) = toy(id, SrMode::Legacy, -82.0, None);
        let srg = (id == 2).then_some(-82.0);
        let (d1, inert) = toy(id, SrMode::All, -82.0, srg);
        let l0: Vec<String> = legacy.graph.states.iter().map(|s| s.label(&d0)).collect();
        let l1: Vec<String> = inert.graph.states.iter().map(|s| s.label(&d1)).collect();
        assert_eq!(l0, l1);
        assert_eq!(legacy.pi, inert.pi);
        assert_eq!(legacy.throughput, inert.throughput);
    }
}

#[test]
fn state_cap_is_enforced() {
    let env = toy_environment(2).unwrap();
    let (d, c) = configure(&toy_scenario(2).unwrap(), SrMode::All, 0, -70.0, Some(-70.0)).unwrap();
    let opts = CtmnOptions {
        state_cap: 3,
        ..CtmnOptions::from_env(&env)
    };
    assert!(matches!(enumerate_states(&d, &c, &env, opts), Err(CtmnError::TooManyStates { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sr_keeps_legacy_states(id in 1u32..=2, pd in -82i32..=-62, srg in -82i32..=-62, all in any::<bool>()) {
        let (d0, legacy) = toy(id, SrMode::Legacy, -82.0, None);
        let mode = if all { SrMode::All } else { SrMode::OnlyA };
        let (d1, s) = toy(id, mode, pd as f64, (id == 2).then_some(srg as f64));
        let before = reachable_labels(&d0, &legacy);
        let after = reachable_labels(&d1, &s);
        prop_assert!(before.is_subset(&after), "{before:?} vs {after:?}");
    }
}

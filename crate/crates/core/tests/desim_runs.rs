use axsr::desim::*;
use axsr::propagation::{frame_durations, PathLossModel, Position, RadioEnv};
use axsr::scenario::{configure, random_grid, toy_environment, toy_scenario, Bss, Deployment, Node, SrMode};

fn single_bss() -> Deployment {
    let mut dep = toy_scenario(1).unwrap();
    dep.bsses.truncate(1);
    dep
}

fn poisson(load_mbps: f64, duration_s: f64, seed: u64) -> SimConfig {
    SimConfig {
        traffic: TrafficModel::Poisson {
            load_bps: load_mbps * 1e6,
        },
        duration_s,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn saturated_bss_matches_cycle_time() {
    let env = RadioEnv::default();
    let dep = single_bss();
    let snr = dep.rx_power(&env, Node::Ap(0), Node::Sta(0, 0), 20.0).unwrap() - env.phy.noise_dbm;
    let mcs = *env.mcs.select(snr).unwrap();
    for n in [1, 64] {
        let cfg = SimConfig {
            n_agg_max: n,
            duration_s: 10.0,
            warmup_s: 0.0,
            ..SimConfig::default()
        };
        let out = run(&dep, &dep.configs(), &env, &cfg).unwrap();
        let fd = frame_durations(n, &mcs, &env.phy, &env.mac).unwrap();
        let cycle = fd.t_exchange_success + env.mac.mean_backoff_s();
        let closed = fd.n_agg as f64 * env.mac.l_d as f64 / cycle;
        let got = out.report.per_bss[0].throughput_bps;
        assert!((got / closed - 1.0).abs() < 0.01, "n_agg {n}: {got} vs {closed}");
        assert_eq!(out.report.per_bss[0].collisions, 0);
    }
}

#[test]
fn light_load_is_carried() {
    let env = RadioEnv::default();
    let dep = single_bss();
    let out = run(&dep, &dep.configs(), &env, &poisson(12.0, 10.0, 3)).unwrap();
    let m = &out.report.per_bss[0];
    assert!((m.throughput_bps / 12e6 - 1.0).abs() < 0.03, "{}", m.throughput_bps);
    assert_eq!(m.drops, 0);
    assert!(m.occupancy > 0.0 && m.occupancy < 0.5);
    let d = m.mean_delay_s.unwrap();
    assert!(d > 0.0 && d < 0.05, "{d}");
}

#[test]
fn same_seed_same_run() {
    let env = RadioEnv::with_path_loss(PathLossModel::residential());
    let dep = random_grid(15.0, 4).unwrap();
    let (d, c) = configure(&dep, SrMode::Mixed, 4, -70.0, None).unwrap();
    let cfg = SimConfig {
        trace: true,
        ..poisson(24.0, 1.5, 4)
    };
    let a = run(&d, &c, &env, &cfg).unwrap();
    let b = run(&d, &c, &env, &cfg).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.trace_text(), b.trace_text());
    let other = run(&d, &c, &env, &SimConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(a.trace_text(), other.trace_text());
}

#[test]
fn packets_are_conserved() {
    let env = RadioEnv::with_path_loss(PathLossModel::residential());
    for seed in 0..3 {
        let dep = random_grid(15.0, seed).unwrap();
        let (d, c) = configure(&dep, SrMode::All, seed, -68.0, None).unwrap();
        let out = run(&d, &c, &env, &poisson(120.0, 2.0, seed)).unwrap();
        for (b, cons) in out.report.conservation.iter().enumerate() {
            assert!(cons.balanced(), "seed {seed} bss {b}: {cons:?}");
            assert!(cons.dropped > 0 || cons.queued <= 100);
        }
        for m in &out.report.per_bss {
            assert!((0.0..=1.0).contains(&m.occupancy));
            assert!(m.throughput_bps <= 130e6);
        }
    }
}

#[test]
fn sr_at_the_floor_changes_nothing() {
    for id in [1, 2] {
        let dep = toy_scenario(id).unwrap();
        let env = toy_environment(id).unwrap();
        let cfg = SimConfig {
            trace: true,
            ..poisson(60.0, 2.0, 11)
        };
        let (d0, c0) = configure(&dep, SrMode::Legacy, 0, -82.0, None).unwrap();
        let (d1, c1) = configure(&dep, SrMode::All, 0, -82.0, (id == 2).then_some(-82.0)).unwrap();
        let legacy = run(&d0, &c0, &env, &cfg).unwrap();
        let inert = run(&d1, &c1, &env, &cfg).unwrap();
        // SRG peers are labelled as such once SR is on; the behaviour is what must match
        let (ta, tb) = (legacy.trace_text(), inert.trace_text().replace("inter_srg", "inter_non_srg"));
        if let Some((i, (x, y))) = ta.lines().zip(tb.lines()).enumerate().find(|(_, (x, y))| x != y) {
            panic!("toy {id} traces diverge at line {i}: {x} vs {y}");
        }
        assert_eq!(ta.len(), tb.len());
        for (a, b) in legacy.report.per_bss.iter().zip(&inert.report.per_bss) {
            assert_eq!(a.throughput_bps, b.throughput_bps);
            assert_eq!(a.delivered_packets, b.delivered_packets);
            assert!(!a.sr_enabled && b.sr_enabled);
        }
    }
}

#[test]
fn traced_runs_respect_both_navs() {
    let mut total = AuditReport::default();
    let mut check = |d: &Deployment, c: &[axsr::srcore::SrConfig], env: &RadioEnv, seed: u64| {
        let cfg = SimConfig {
            trace: true,
            cf_end_on_timeout: true,
            warmup_s: 0.0,
            ..poisson(120.0, 2.0, seed)
        };
        let out = run(d, c, env, &cfg).unwrap();
        let r = audit_trace(&out.trace_text());
        assert!(r.violations.is_empty(), "{:?}", &r.violations[..r.violations.len().min(5)]);
        total.decrements += r.decrements;
        total.nav_sets += r.nav_sets;
        total.cf_end_resets += r.cf_end_resets;
        total.inter_cf_end_resets += r.inter_cf_end_resets;
    };
    for id in [1, 2] {
        let env = toy_environment(id).unwrap();
        for pd in [-82.0, -76.0, -70.0] {
            let (d, c) = configure(&toy_scenario(id).unwrap(), SrMode::All, 0, pd, Some(pd)).unwrap();
            check(&d, &c, &env, 1);
        }
    }
    let env = RadioEnv::with_path_loss(PathLossModel::residential());
    for seed in 0..2 {
        let (d, c) = configure(&random_grid(15.0, seed).unwrap(), SrMode::Mixed, seed, -72.0, None).unwrap();
        check(&d, &c, &env, seed);
    }
    // C is hidden from A but sits next to STA_A; B hears A's RTS and its CF-End
    let p = Position::new;
    let hidden = Deployment {
        width: 16.0,
        height: 10.0,
        grid: None,
        bsses: vec![
            Bss::new("A", p(2.0, 5.0), p(9.0, 5.0), 1),
            Bss::new("B", p(2.0, 7.0), p(0.0, 7.0), 2),
            Bss::new("C", p(10.0, 5.0), p(13.0, 5.0), 3),
        ],
    };
    for seed in 0..3 {
        check(&hidden, &hidden.configs(), &env, seed);
    }
    assert!(total.decrements > 1000);
    assert!(total.nav_sets > 100);
    assert!(total.inter_cf_end_resets > 0, "{total:?}");
}

#[test]
fn audit_rejects_a_bad_trace() {
    let bad = "time_us,node,event,detail\n\
               0.000,3,nav_set,kind=intra;class=intra;src=3;until_us=100.000\n\
               5.000,3,nav_reset,class=inter_non_srg;cleared=intra;nav_intra_us=100.000->5.000;nav_inter_us=0.000->0.000\n\
               50.000,3,backoff_decrement,from_us=10.000;to_us=50.000\n";
    let r = audit_trace(bad);
    assert_eq!(r.inter_cf_end_resets, 1);
    assert_eq!(r.violations.len(), 2, "{:?}", r.violations);
}

#[test]
fn rejects_bad_input() {
    let env = RadioEnv::default();
    let dep = single_bss();
    let bad = SimConfig {
        warmup_s: 20.0,
        duration_s: 10.0,
        ..SimConfig::default()
    };
    assert!(run(&dep, &dep.configs(), &env, &bad).is_err());
    assert!(run(&dep, &[], &env, &SimConfig::default()).is_err());
}

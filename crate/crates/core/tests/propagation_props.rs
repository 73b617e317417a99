use approx::assert_abs_diff_eq;
use axsr::propagation::*;
use axsr::scenario::{toy_environment, toy_scenario};
use proptest::prelude::*;

fn env() -> RadioEnv {
    RadioEnv::default()
}

#[test]
fn path_loss_examples() {
    let m = PathLossModel::default();
    assert_abs_diff_eq!(m.path_loss(1.0).unwrap(), m.l0_db + m.wall_loss_db, epsilon = 1e-12);
    let far = m.breakpoint_m * 10.0;
    let want = m.l0_db + 10.0 * m.gamma_near * m.breakpoint_m.log10() + 10.0 * m.gamma_far + m.wall_loss_db;
    assert_abs_diff_eq!(m.path_loss(far).unwrap(), want, epsilon = 1e-9);
    assert!(m.path_loss(0.0).is_err());
    assert!(m.path_loss(-1.0).is_err());
}

#[test]
fn toy_rssi_anchor() {
    let dep = toy_scenario(1).unwrap();
    let env = toy_environment(1).unwrap();
    let d = dep.bsses[0].ap.distance_to(&dep.bsses[0].stas[0]);
    assert_abs_diff_eq!(d, 4.0);
    let r = rssi(17.0, d, &env.phy, &env.path_loss).unwrap();
    assert_abs_diff_eq!(r, -67.0, epsilon = 0.01);
    let far = rssi(20.0, 1e6, &env.phy, &env.path_loss).unwrap();
    assert!(far < env.phy.noise_dbm);
}

#[test]
fn sinr_examples() {
    assert_abs_diff_eq!(sinr(-60.0, &[], -95.0), 35.0, epsilon = 1e-12);
    // -60 against (-60 dBm + -95 dBm) in mW
    let both = 10.0 * (1e-6f64 + 10f64.powf(-9.5)).log10();
    assert_abs_diff_eq!(sinr(-60.0, &[-60.0], -95.0), -60.0 - both, epsilon = 1e-12);
    assert!(sinr(-60.0, &[-60.0], -95.0).abs() < 0.01);
    assert_abs_diff_eq!(sinr(-60.0, &[-90.0], -95.0), 28.81, epsilon = 0.01);
}

#[test]
fn mcs_selection_edges() {
    let t = McsTable::default();
    let thresholds: Vec<f64> = t.entries().iter().map(|m| m.min_sinr_db).collect();
    assert_eq!(thresholds, [2.0, 5.0, 8.0, 11.0, 14.0, 17.0, 19.0, 21.0, 24.0, 26.0, 27.5, 29.5]);
    assert_eq!(select_mcs(1.99, &t).unwrap(), None);
    for m in t.entries() {
        assert_eq!(select_mcs(m.min_sinr_db, &t).unwrap().unwrap().index, m.index);
    }
    assert_eq!(select_mcs(80.0, &t).unwrap().unwrap().index, 11);
}

#[test]
fn data_rates() {
    let e = env();
    let bpsk = Mcs {
        index: 0,
        modulation_bits: 1,
        code_rate: [1, 1],
        min_sinr_db: 0.0,
    };
    assert_abs_diff_eq!(data_rate(&bpsk, &e.phy), 14.625e6, epsilon = 1e-6);
    let qpsk = Mcs {
        modulation_bits: 2,
        ..bpsk
    };
    assert_abs_diff_eq!(data_rate(&qpsk, &e.phy), 2.0 * 14.625e6, epsilon = 1e-6);
    let rates: Vec<f64> = e.mcs.entries().iter().map(|m| data_rate(m, &e.phy)).collect();
    assert!(rates.windows(2).all(|w| w[1] > w[0]));
    // 234 subcarriers, 1024-QAM 5/6, 16 us symbols
    assert_abs_diff_eq!(rates[11], 234.0 * 10.0 * 5.0 / 6.0 / 16e-6, epsilon = 1e-3);
}

#[test]
fn control_frame_durations() {
    let e = env();
    let d = frame_durations(1, e.mcs.lowest(), &e.phy, &e.mac).unwrap();
    assert_abs_diff_eq!(d.t_rts, 48e-6, epsilon = 1e-15);
    assert_abs_diff_eq!(d.t_cts, 40e-6, epsilon = 1e-15);
    assert_abs_diff_eq!(d.t_ack_or_back, 28e-6, epsilon = 1e-15);
    assert!(frame_durations(0, e.mcs.lowest(), &e.phy, &e.mac).is_err());
}

#[test]
fn data_duration_by_hand() {
    let e = env();
    // MCS 11: 1950 data bits per symbol; one MPDU is 16 + 12320 bits
    let m11 = e.mcs.entries()[11];
    let d = frame_durations(1, &m11, &e.phy, &e.mac).unwrap();
    let symbols = (12336.0f64 / 1950.0).ceil();
    assert_eq!(symbols, 7.0);
    assert_abs_diff_eq!(d.t_data, (20.0 + 100.0 + 7.0 * 16.0) * 1e-6, epsilon = 1e-15);
    let total = 48.0 + 16.0 + 40.0 + 16.0 + 232.0 + 16.0 + 28.0 + 34.0 + 9.0;
    assert_abs_diff_eq!(d.t_exchange_success, total * 1e-6, epsilon = 1e-15);
}

#[test]
fn aggregation_clamp() {
    let e = env();
    let bpsk = Mcs {
        index: 0,
        modulation_bits: 1,
        code_rate: [1, 1],
        min_sinr_db: 0.0,
    };
    let d = frame_durations(64, &bpsk, &e.phy, &e.mac).unwrap();
    assert!(d.n_agg < 64);
    // the largest count whose payload stays within 5484 us
    let fits = |n: u32| ((16 + n * 12320) as f64 / 234.0).ceil() * 16.0 <= 5484.0;
    assert!(fits(d.n_agg) && !fits(d.n_agg + 1));
    let top = frame_durations(64, &e.mcs.entries()[11], &e.phy, &e.mac).unwrap();
    assert_eq!(top.n_agg, 54);
}

proptest! {
    #[test]
    fn sinr_without_interference_is_snr(s in -100.0f64..0.0, n in -110.0f64..-80.0) {
        prop_assert!((sinr(s, &[], n) - (s - n)).abs() < 1e-9);
    }

    #[test]
    fn interference_never_helps(s in -90.0f64..-30.0, i in proptest::collection::vec(-110.0f64..-30.0, 0..5)) {
        prop_assert!(sinr(s, &i, -95.0) <= s + 95.0 + 1e-9);
    }

    #[test]
    fn rssi_decreases_with_distance(d in 0.1f64..200.0, step in 0.01f64..50.0, tx in -10.0f64..30.0) {
        let e = env();
        let near = rssi(tx, d, &e.phy, &e.path_loss).unwrap();
        let far = rssi(tx, d + step, &e.phy, &e.path_loss).unwrap();
        prop_assert!(far < near);
    }

    #[test]
    fn mcs_index_monotone(a in -10.0f64..40.0, b in -10.0f64..40.0) {
        let t = McsTable::default();
        let idx = |x: f64| t.select(x).map(|m| m.index as i32).unwrap_or(-1);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(idx(lo) <= idx(hi));
    }

    #[test]
    fn aggregation_amortizes(k in 0usize..12, n in 1u32..=32) {
        let e = env();
        let m = e.mcs.entries()[k];
        let one = frame_durations(n, &m, &e.phy, &e.mac).unwrap();
        let two = frame_durations(2 * n, &m, &e.phy, &e.mac).unwrap();
        if two.n_agg == 2 * n {
            prop_assert!(two.t_exchange_success < 2.0 * one.t_exchange_success);
        }
        prop_assert!(two.t_data <= (20.0 + 100.0 + 5484.0) * 1e-6 + 1e-12);
        prop_assert!(one.t_rts > 0.0 && one.t_cts > 0.0 && one.t_ack_or_back > 0.0);
    }
}

use axsr::srcore::*;
use proptest::prelude::*;

// Oracles below are written out case by case rather than with the closed
// forms the library uses, so a shared mistake is unlikely.

fn oracle_max_obss_pd(tx: i32, reference: i32) -> i32 {
    let headroom = reference - tx;
    if headroom <= 0 {
        -82
    } else if headroom >= 20 {
        -62
    } else {
        -82 + headroom
    }
}

fn oracle_restriction(pd: i32, reference: i32) -> Result<Option<i32>, ()> {
    if pd < -82 || pd > -62 {
        return Err(());
    }
    if pd == -82 {
        return Ok(None);
    }
    // each dB above the floor costs one dB of power
    let mut p = reference;
    let mut t = -82;
    while t < pd {
        t += 1;
        p -= 1;
    }
    Ok(Some(p))
}

fn oracle_scale(pd: i32, width: u32) -> Option<i32> {
    match width {
        20 => Some(pd),
        40 => Some(pd + 3),
        80 => Some(pd + 6),
        160 => Some(pd + 9),
        _ => None,
    }
}

#[test]
fn max_obss_pd_exhaustive() {
    for reference in [21, 25] {
        for tx in -40..=60 {
            let got = max_obss_pd(tx as f64, reference as f64);
            assert_eq!(got, oracle_max_obss_pd(tx, reference) as f64, "tx {tx} ref {reference}");
        }
    }
    assert_eq!(max_obss_pd(25.0, 25.0), -82.0);
    assert_eq!(max_obss_pd(5.0, 25.0), -62.0);
    assert_eq!(max_obss_pd(0.0, 21.0), -62.0);
}

#[test]
fn tx_power_restriction_exhaustive() {
    for reference in [21, 25] {
        for pd in -100..=-40 {
            let got = tx_power_restriction(pd as f64, reference as f64);
            match oracle_restriction(pd, reference) {
                Err(()) => assert!(got.is_err(), "pd {pd} should be rejected"),
                Ok(want) => assert_eq!(got.unwrap(), want.map(f64::from), "pd {pd} ref {reference}"),
            }
        }
    }
    assert_eq!(tx_power_restriction(-62.0, 21.0).unwrap(), Some(1.0));
    assert_eq!(tx_power_restriction(-72.0, 25.0).unwrap(), Some(15.0));
}

#[test]
fn scale_obss_pd_exhaustive() {
    for pd in -82..=-62 {
        for width in 0..=400u32 {
            let got = scale_obss_pd(pd as f64, width).ok();
            assert_eq!(got, oracle_scale(pd, width).map(f64::from), "pd {pd} width {width}");
        }
    }
}

fn element(flags: u8, non_srg: u8, srg_min: u8, srg_max: u8) -> SrpsElement {
    SrpsElement {
        psr_disallowed: flags & 1 != 0,
        non_srg_obss_pd_sr_disallowed: flags & 2 != 0,
        non_srg_offset_present: flags & 4 != 0,
        srg_information_present: flags & 8 != 0,
        non_srg_obss_pd_max_offset: non_srg,
        srg_obss_pd_min_offset: srg_min,
        srg_obss_pd_max_offset: srg_max,
        srg_bss_color_bitmap: 0,
        srg_partial_bssid_bitmap: 0,
    }
}

#[test]
fn validate_srps_exhaustive() {
    for flags in 0..16u8 {
        let e0 = element(flags, 0, 0, 0);
        for non_srg in 0..=40u8 {
            for srg_min in 0..=40u8 {
                for srg_max in 0..=40u8 {
                    let e = SrpsElement {
                        non_srg_obss_pd_max_offset: non_srg,
                        srg_obss_pd_min_offset: srg_min,
                        srg_obss_pd_max_offset: srg_max,
                        ..e0.clone()
                    };
                    let got = validate_srps(&e);
                    let field_ok = non_srg <= 31 && srg_min <= 31 && srg_max <= 31;
                    let srg_ok = !e.srg_information_present
                        || (-82 <= -82 + srg_min as i32
                            && -82 + srg_min as i32 <= -62
                            && srg_min <= srg_max
                            && -82 + srg_max as i32 <= -62);
                    let non_srg_checked = e.non_srg_offset_present && !e.non_srg_obss_pd_sr_disallowed;
                    let non_srg_ok = !non_srg_checked || -82 + non_srg as i32 <= -62;
                    let valid = field_ok && srg_ok && non_srg_ok;
                    assert_eq!(got.is_ok(), valid, "{e:?}");
                    let Ok(b) = got else { continue };
                    let (lo, hi) = if e.non_srg_obss_pd_sr_disallowed {
                        (-82, -82)
                    } else if e.non_srg_offset_present {
                        (-82, -82 + non_srg as i32)
                    } else {
                        (-82, -62)
                    };
                    assert_eq!((b.non_srg_min, b.non_srg_max), (lo as f64, hi as f64));
                    let srg = e
                        .srg_information_present
                        .then(|| ((-82 + srg_min as i32) as f64, (-82 + srg_max as i32) as f64));
                    assert_eq!(b.srg, srg);
                }
            }
        }
    }
}

#[test]
fn validate_srps_named_cases() {
    let ok = validate_srps(&element(4 | 8, 15, 9, 20)).unwrap();
    assert_eq!(ok.srg, Some((-73.0, -62.0)));
    assert_eq!(ok.non_srg_max, -67.0);
    let err = validate_srps(&element(4, 21, 0, 0)).unwrap_err();
    assert!(matches!(err, SrError::Srps(SrpsViolation::NonSrgMaxRange)), "{err:?}");
    let off = validate_srps(&element(2, 0, 0, 0)).unwrap();
    assert_eq!((off.non_srg_min, off.non_srg_max), (-82.0, -82.0));
    let err = validate_srps(&element(8, 0, 12, 10)).unwrap_err();
    assert!(matches!(err, SrError::Srps(SrpsViolation::SrgMinAboveMax)));
}

#[test]
fn psr_arithmetic_exhaustive() {
    for tx in -10..=30 {
        for imax in -100..=0 {
            assert_eq!(psr_value(tx as f64, imax as f64), (tx + imax) as f64);
        }
    }
    for target in -90..=-30 {
        for snr in 0..=40 {
            for margin in -2..=8 {
                let got = i_ap_max(target as f64, snr as f64, margin as f64);
                if (0..=5).contains(&margin) {
                    assert_eq!(got.unwrap(), (target - snr - margin) as f64);
                } else {
                    assert!(got.is_err());
                }
            }
        }
    }
    for psr in -60..=20 {
        for rpl in -90..=-20 {
            for t in -10..=60 {
                let room = psr - rpl;
                assert_eq!(psr_opportunity(psr as f64, rpl as f64, t as f64), t < room);
            }
        }
    }
    assert_eq!(psr_value(20.0, -40.0), -20.0);
    assert_eq!(psr_value(21.0, -55.0), -34.0);
    assert_eq!(i_ap_max(-60.0, 20.0, 5.0).unwrap(), -85.0);
    assert!(psr_opportunity(-20.0, -60.0, 5.0));
    assert!(!psr_opportunity(-20.0, -60.0, 40.0));
    assert!(!psr_opportunity(-20.0, -20.0, 1.0));
}

fn frame_for(color: u32) -> FrameMeta {
    FrameMeta::he(BssColor::new(color).unwrap(), 0, FrameKind::Data, 1e-3)
}

fn restriction() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), (-10i32..=25).prop_map(|v| Some(v as f64))]
}

proptest! {
    #[test]
    fn max_obss_pd_in_range(tx in -100.0f64..100.0, high in any::<bool>()) {
        let r = max_obss_pd(tx, if high { 25.0 } else { 21.0 });
        prop_assert!((-82.0..=-62.0).contains(&r));
    }

    #[test]
    fn restriction_monotone(a in -82i32..=-62, b in -82i32..=-62, high in any::<bool>()) {
        let reference = if high { 25.0 } else { 21.0 };
        let (lo, hi) = (a.min(b), a.max(b));
        let cap = |pd: i32| tx_power_restriction(pd as f64, reference).unwrap().unwrap_or(f64::INFINITY);
        prop_assert!(cap(hi) <= cap(lo));
        prop_assert!(cap(hi) <= reference || hi == -82);
    }

    #[test]
    fn intra_iff_same_color(
        rx in 1u32..=63,
        tx in 1u32..=63,
        bitmap in any::<u64>(),
        srg in any::<bool>(),
        disallow in any::<bool>(),
    ) {
        let cfg = SrConfig {
            srg_enabled: srg,
            obss_pd_srg: srg.then_some(-70.0),
            srg_color_bitmap: Bitmap64(bitmap),
            non_srg_sr_disallowed: disallow,
            ..SrConfig::default()
        };
        let me = BssIdentity::from_color(BssColor::new(rx).unwrap());
        let class = classify_frame(&cfg, &me, &frame_for(tx)).unwrap();
        prop_assert_eq!(class == FrameClass::IntraBss, rx == tx);
        if !srg {
            prop_assert_ne!(class, FrameClass::InterBssSrg);
        }
    }

    #[test]
    fn srg_disabled_falls_back(non_srg in -82i32..=-62, srg_pd in -82i32..=-62, disallow in any::<bool>()) {
        let cfg = SrConfig {
            obss_pd_non_srg: non_srg as f64,
            obss_pd_srg: Some(srg_pd as f64),
            srg_enabled: false,
            non_srg_sr_disallowed: disallow,
            ..SrConfig::default()
        };
        prop_assert_eq!(
            effective_sensitivity(&cfg, FrameClass::InterBssSrg),
            effective_sensitivity(&cfg, FrameClass::InterBssNonSrg)
        );
        prop_assert_eq!(effective_sensitivity(&cfg, FrameClass::IntraBss), -82.0);
    }

    #[test]
    fn combine_algebra(a in restriction(), b in restriction(), c in restriction()) {
        let f = |v: Vec<Option<f64>>| combine_power_restrictions(v);
        prop_assert_eq!(f(vec![a, b]), f(vec![b, a]));
        prop_assert_eq!(f(vec![f(vec![a, b]), c]), f(vec![a, f(vec![b, c])]));
        prop_assert_eq!(f(vec![a, a]), a);
        prop_assert_eq!(f(vec![a, None]), a);
    }

    #[test]
    fn psr_shift_invariant(p in -60i32..20, r in -90i32..-20, t in -10i32..60, c in -30i32..30) {
        prop_assert_eq!(
            psr_opportunity(p as f64, r as f64, t as f64),
            psr_opportunity((p + c) as f64, (r + c) as f64, t as f64)
        );
    }
}

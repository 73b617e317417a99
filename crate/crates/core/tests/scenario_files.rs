use axsr::propagation::{PathLossModel, Position};
use axsr::scenario::*;
use proptest::prelude::*;

const TOY: &str = r#"
[phy.path_loss]
l0_db = 46.4
gamma_near = 2.0
breakpoint_m = 5.0
gamma_far = 3.5
wall_loss_db = 25.56
inter_bss_loss_db = 21.5

[deployment]
layout = "explicit"
width = 10.0
height = 10.0

[[deployment.bss]]
name = "A"
ap = "4,0"
stas = ["0,0"]
color = 1
sr_enabled = true
obss_pd_non_srg_dbm = -72.0

[[deployment.bss]]
name = "B"
ap = "6,0"
stas = ["8,0"]
color = 2

[sweep]
obss_pd_values = [-82.0, -72.0, -62.0]
traffic = "full_buffer"
duration_s = 5.0
"#;

fn explicit(s: &Scenario) -> &Deployment {
    match &s.layout {
        Layout::Explicit(d) => d,
        Layout::RandomGrid => panic!("expected an explicit layout"),
    }
}

#[test]
fn parses_a_toy_file() {
    let s = parse_scenario(TOY).unwrap();
    let d = explicit(&s);
    assert_eq!(d.bsses.len(), 2);
    assert_eq!(d.bsses[0].ap, Position::new(4.0, 0.0));
    assert_eq!(d.bsses[1].tx_pwr, 20.0);
    assert_eq!(d.bsses[1].cca_cs, -82.0);
    assert_eq!(s.env.path_loss, PathLossModel::default());
    let c = d.configs();
    assert_eq!(c[0].obss_pd_non_srg, -72.0);
    assert_eq!(c[1].obss_pd_non_srg, -82.0);
    assert_eq!(s.sweep.traffic, Traffic::FullBuffer);
    assert_eq!(s.sweep.threshold_points().len(), 3);
    assert_eq!(s.sweep.loads_mbps, [12.0, 24.0, 120.0]);
}

#[test]
fn partial_sections_take_defaults() {
    let s = parse_scenario("[phy.path_loss]\ninter_bss_loss_db = 10.0\n\n[deployment]\nlayout = \"random_grid\"\n").unwrap();
    assert_eq!(s.env.path_loss, PathLossModel::residential());
    assert_eq!(s.sweep, SweepSpec::default());
}

#[test]
fn round_trips() {
    let s = parse_scenario(TOY).unwrap();
    let text = serialize_scenario(&s).unwrap();
    assert_eq!(parse_scenario(&text).unwrap(), s);

    let grid = parse_scenario("[deployment]\nlayout = \"random_grid\"\n").unwrap();
    assert_eq!(grid.layout, Layout::RandomGrid);
    let again = parse_scenario(&serialize_scenario(&grid).unwrap()).unwrap();
    assert_eq!(again, grid);

    let mut toy2 = grid.clone();
    toy2.layout = Layout::Explicit(toy_scenario(2).unwrap());
    assert_eq!(parse_scenario(&serialize_scenario(&toy2).unwrap()).unwrap(), toy2);
}

fn field_of(err: ScenarioError) -> String {
    match err {
        ScenarioError::Invalid { field, .. } => field,
        other => panic!("expected a field error, got {other}"),
    }
}

#[test]
fn rejects_threshold_above_range() {
    let text = TOY.replace("obss_pd_non_srg_dbm = -72.0", "obss_pd_non_srg_dbm = -61.0");
    let err = parse_scenario(&text).unwrap_err();
    assert_eq!(field_of(err), "deployment.bss[0].obss_pd_non_srg_dbm");

    let text = TOY.replace("[-82.0, -72.0, -62.0]", "[-82.0, -61.0]");
    assert_eq!(field_of(parse_scenario(&text).unwrap_err()), "sweep.obss_pd_values");
}

#[test]
fn rejects_sta_outside_its_cell() {
    let mut d = random_grid(15.0, 2).unwrap();
    d.validate().unwrap();
    let (x0, _, y0, _) = d.cell_bounds(3, d.bsses[3].cell.unwrap());
    d.bsses[3].stas[0] = Position::new(x0 + 7.0, y0 + 7.0);
    let err = d.validate().unwrap_err();
    assert_eq!(field_of(err), "deployment.bss[3].stas");
}

#[test]
fn rejects_malformed_files() {
    assert!(matches!(parse_scenario("[deployment]\nlayout = \"ring\"\n"), Err(ScenarioError::Parse(_))));
    let typo = TOY.replace("color = 2", "colour = 2");
    assert!(matches!(parse_scenario(&typo), Err(ScenarioError::Parse(_))));
    let outside = TOY.replace("stas = [\"8,0\"]", "stas = [\"18,0\"]");
    assert_eq!(field_of(parse_scenario(&outside).unwrap_err()), "deployment.bss[1].stas");
    let dup = TOY.replace("name = \"B\"", "name = \"A\"");
    assert_eq!(field_of(parse_scenario(&dup).unwrap_err()), "deployment.bss[1].name");
    let bad_color = TOY.replace("color = 2", "color = 64");
    assert!(parse_scenario(&bad_color).is_err());
}

#[test]
fn sweep_ranges() {
    assert_eq!(obss_pd_range(-82.0, -62.0, 1.0).len(), 21);
    assert_eq!(obss_pd_range(-82.0, -62.0, 2.0).last(), Some(&-62.0));
    let spec = SweepSpec {
        obss_pd_values: vec![-82.0, -72.0],
        obss_pd_srg_values: vec![-82.0, -76.0, -70.0],
        ..SweepSpec::default()
    };
    assert_eq!(spec.threshold_points().len(), 6);
    assert_eq!(spec.seed_list().len(), 50);
}

#[test]
fn modes_parse() {
    for m in [SrMode::Legacy, SrMode::OnlyA, SrMode::Mixed, SrMode::All] {
        assert_eq!(m.label().parse::<SrMode>().unwrap(), m);
    }
    assert!("some".parse::<SrMode>().is_err());
    assert_eq!(sr_mask(SrMode::OnlyA, 4, 0), [true, false, false, false]);
}

proptest! {
    #[test]
    fn grid_nodes_stay_in_their_cells(size in 5.0f64..40.0, seed in any::<u64>()) {
        let d = random_grid(size, seed).unwrap();
        prop_assert!(d.validate().is_ok());
        prop_assert_eq!(d.bsses[0].ap, Position::new(size / 2.0, size / 2.0));
        let mut cells: Vec<usize> = d.bsses.iter().map(|b| b.cell.unwrap()).collect();
        cells.sort();
        prop_assert_eq!(cells, (0..9).collect::<Vec<_>>());
        for b in &d.bsses {
            let cell = b.cell.unwrap();
            prop_assert!(d.cell_contains(3, cell, &b.ap));
            prop_assert!(b.stas.iter().all(|s| d.cell_contains(3, cell, s)));
        }
        prop_assert!(d.color_collisions().is_empty());
    }

    #[test]
    fn mixed_always_includes_a(n in 1usize..20, seed in any::<u64>()) {
        let m = sr_mask(SrMode::Mixed, n, seed);
        prop_assert!(m[0]);
        prop_assert_eq!(m.len(), n);
    }
}

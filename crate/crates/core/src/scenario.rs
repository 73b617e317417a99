//! Deployments: the two toy layouts, the 3x3 random grid, and the TOML
//! scenario file that ties a deployment to PHY/MAC parameters and a sweep.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::propagation::{
    LinkScope, MacParams, McsTable, PathLossModel, PhyParams, Position, PropagationError, RadioEnv,
};
use crate::srcore::{
    Bitmap64, BssColor, BssIdentity, SrConfig, SrError, CCA_CS_DEFAULT_DBM,
    OBSS_PD_MAX_DBM, OBSS_PD_MIN_DBM,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown toy scenario {0} (expected 1 or 2)")]
    UnknownToy(u32),
    #[error("map size must be positive, got {0}")]
    MapSize(f64),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serializing scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Sr(#[from] SrError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Positions are written as `"x,y"` in scenario files.
mod xy {
    use super::*;

    pub fn parse(s: &str) -> Result<Position, String> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| format!("expected \"x,y\", got {s:?}"))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad coordinate {t:?} in {s:?}"))
        };
        Ok(Position::new(num(x)?, num(y)?))
    }

    pub fn format(p: &Position) -> String {
        format!("{},{}", p.x, p.y)
    }

    pub fn serialize<S: Serializer>(p: &Position, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(p))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Position, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    pub mod list {
        use super::*;

        pub fn serialize<S: Serializer>(ps: &[Position], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(ps.iter().map(format))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Position>, D::Error> {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|s| parse(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

fn default_channel() -> u32 {
    1
}
fn default_tx_pwr() -> f64 {
    20.0
}
fn default_cca() -> f64 {
    CCA_CS_DEFAULT_DBM
}
fn default_tx_pwr_ref() -> f64 {
    21.0
}
fn default_obss_pd() -> f64 {
    OBSS_PD_MIN_DBM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bss {
    pub name: String,
    #[serde(with = "xy")]
    pub ap: Position,
    #[serde(with = "xy::list")]
    pub stas: Vec<Position>,
    pub color: BssColor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srg: Option<u32>,
    #[serde(default = "default_channel")]
    pub channel: u32,
    #[serde(default = "default_tx_pwr", rename = "tx_pwr_dbm")]
    pub tx_pwr: f64,
    #[serde(default = "default_cca", rename = "cca_cs_dbm")]
    pub cca_cs: f64,
    #[serde(default = "default_tx_pwr_ref", rename = "tx_pwr_ref_dbm")]
    pub tx_pwr_ref: f64,
    #[serde(default)]
    pub sr_enabled: bool,
    #[serde(default = "default_obss_pd", rename = "obss_pd_non_srg_dbm")]
    pub obss_pd_non_srg: f64,
    #[serde(
        default,
        rename = "obss_pd_srg_dbm",
        skip_serializing_if = "Option::is_none"
    )]
    pub obss_pd_srg: Option<f64>,
    /// Grid cell (row-major index) the BSS must stay inside, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<usize>,
}

impl Bss {
    pub fn new(name: &str, ap: Position, sta: Position, color: u32) -> Self {
        Bss {
            name: name.to_string(),
            ap,
            stas: vec![sta],
            color: BssColor::new(color).expect("color literal in range"),
            srg: None,
            channel: 1,
            tx_pwr: default_tx_pwr(),
            cca_cs: default_cca(),
            tx_pwr_ref: default_tx_pwr_ref(),
            sr_enabled: false,
            obss_pd_non_srg: default_obss_pd(),
            obss_pd_srg: None,
            cell: None,
        }
    }

    pub fn identity(&self) -> BssIdentity {
        BssIdentity::from_color(self.color)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deployment {
    pub width: f64,
    pub height: f64,
    /// Side of the square cell grid used by `cell` constraints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(rename = "bss")]
    pub bsses: Vec<Bss>,
}

/// How a BSS's transmitter relates to another node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Ap(usize),
    Sta(usize, usize),
}

impl Node {
    pub fn bss(self) -> usize {
        match self {
            Node::Ap(b) | Node::Sta(b, _) => b,
        }
    }
}

impl Deployment {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(invalid("deployment.width/height", "map must have positive size"));
        }
        if self.bsses.is_empty() {
            return Err(invalid("deployment.bss", "at least one BSS is required"));
        }
        let mut names = HashSet::new();
        for (i, b) in self.bsses.iter().enumerate() {
            let field = |f: &str| format!("deployment.bss[{i}].{f}");
            if !names.insert(b.name.as_str()) {
                return Err(invalid(field("name"), format!("duplicate name {:?}", b.name)));
            }
            if b.stas.is_empty() {
                return Err(invalid(field("stas"), "each BSS needs at least one STA"));
            }
            for (what, p) in std::iter::once(("ap", &b.ap)).chain(b.stas.iter().map(|s| ("stas", s))) {
                if !self.contains(p) {
                    return Err(invalid(
                        field(what),
                        format!("{} lies outside the {}x{} map", xy::format(p), self.width, self.height),
                    ));
                }
            }
            if let Some(cell) = b.cell {
                let n = self
                    .grid
                    .ok_or_else(|| invalid(field("cell"), "cell given but deployment.grid is not set"))?;
                if cell >= n * n {
                    return Err(invalid(field("cell"), format!("cell {cell} outside a {n}x{n} grid")));
                }
                for (what, p) in std::iter::once(("ap", &b.ap)).chain(b.stas.iter().map(|s| ("stas", s))) {
                    if !self.cell_contains(n, cell, p) {
                        return Err(invalid(
                            field(what),
                            format!("{} lies outside cell {cell}", xy::format(p)),
                        ));
                    }
                }
            }
            if b.obss_pd_non_srg < OBSS_PD_MIN_DBM || b.obss_pd_non_srg > OBSS_PD_MAX_DBM {
                return Err(invalid(
                    field("obss_pd_non_srg_dbm"),
                    format!("{} outside [-82, -62]", b.obss_pd_non_srg),
                ));
            }
            if let Some(v) = b.obss_pd_srg {
                if !(OBSS_PD_MIN_DBM..=OBSS_PD_MAX_DBM).contains(&v) {
                    return Err(invalid(field("obss_pd_srg_dbm"), format!("{v} outside [-82, -62]")));
                }
            }
            if b.tx_pwr_ref != 21.0 && b.tx_pwr_ref != 25.0 {
                return Err(invalid(field("tx_pwr_ref_dbm"), "must be 21 or 25"));
            }
            if !b.tx_pwr.is_finite() || !b.cca_cs.is_finite() {
                return Err(invalid(field("tx_pwr_dbm"), "must be finite"));
            }
        }
        Ok(())
    }

    fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// Bounds `(x0, x1, y0, y1)` of a row-major cell in an `n`x`n` grid.
    pub fn cell_bounds(&self, n: usize, cell: usize) -> (f64, f64, f64, f64) {
        let (cw, ch) = (self.width / n as f64, self.height / n as f64);
        let (row, col) = (cell / n, cell % n);
        (
            col as f64 * cw,
            (col + 1) as f64 * cw,
            row as f64 * ch,
            (row + 1) as f64 * ch,
        )
    }

    pub fn cell_contains(&self, n: usize, cell: usize, p: &Position) -> bool {
        let (x0, x1, y0, y1) = self.cell_bounds(n, cell);
        (x0..=x1).contains(&p.x) && (y0..=y1).contains(&p.y)
    }

    pub fn position(&self, node: Node) -> Position {
        match node {
            Node::Ap(b) => self.bsses[b].ap,
            Node::Sta(b, k) => self.bsses[b].stas[k],
        }
    }

    /// Received power at `rx` when `tx` transmits at `tx_pwr` dBm.
    pub fn rx_power(&self, env: &RadioEnv, tx: Node, rx: Node, tx_pwr: f64) -> Result<f64, PropagationError> {
        let scope = if tx.bss() == rx.bss() {
            LinkScope::IntraBss
        } else {
            LinkScope::InterBss
        };
        let d = self.position(tx).distance_to(&self.position(rx));
        env.rx_power(tx_pwr, d, scope)
    }

    /// Per-BSS SR configuration implied by the BSS fields and SRG membership.
    pub fn configs(&self) -> Vec<SrConfig> {
        self.bsses
            .iter()
            .map(|b| {
                let peers: Bitmap64 = match b.srg {
                    Some(g) => self
                        .bsses
                        .iter()
                        .filter(|o| o.srg == Some(g) && o.color != b.color)
                        .map(|o| o.color.value() as u64)
                        .collect(),
                    None => Bitmap64::default(),
                };
                let srg_on = b.sr_enabled && b.srg.is_some() && b.obss_pd_srg.is_some();
                SrConfig {
                    cca_cs: b.cca_cs,
                    obss_pd_non_srg: if b.sr_enabled { b.obss_pd_non_srg } else { b.cca_cs.max(OBSS_PD_MIN_DBM) },
                    obss_pd_srg: if srg_on { b.obss_pd_srg } else { None },
                    tx_pwr: b.tx_pwr,
                    tx_pwr_ref: b.tx_pwr_ref,
                    srg_enabled: srg_on,
                    srg_color_bitmap: peers,
                    srg_partial_bssid_bitmap: peers,
                    non_srg_sr_disallowed: false,
                    psr_disallowed: true,
                }
            })
            .collect()
    }

    /// Copy with SR switched on (at the given thresholds) for the BSSs
    /// selected by `mask`, and off for the rest.
    pub fn with_sr(&self, mask: &[bool], obss_pd_non_srg: f64, obss_pd_srg: Option<f64>) -> Deployment {
        let mut d = self.clone();
        for (b, &on) in d.bsses.iter_mut().zip(mask) {
            b.sr_enabled = on;
            b.obss_pd_non_srg = if on { obss_pd_non_srg } else { OBSS_PD_MIN_DBM };
            b.obss_pd_srg = if on && b.srg.is_some() { obss_pd_srg } else { None };
        }
        d
    }

    /// Pairs of BSSs that share a color on the same channel.
    pub fn color_collisions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.bsses.len() {
            for j in i + 1..self.bsses.len() {
                let (a, b) = (&self.bsses[i], &self.bsses[j]);
                if a.color == b.color && a.channel == b.channel {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Who applies SR in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrMode {
    /// Nobody.
    Legacy,
    /// The first BSS only.
    OnlyA,
    /// The first BSS plus a seeded fair coin flip for every other BSS.
    Mixed,
    All,
}

impl SrMode {
    pub fn label(self) -> &'static str {
        match self {
            SrMode::Legacy => "legacy",
            SrMode::OnlyA => "only_a",
            SrMode::Mixed => "mixed",
            SrMode::All => "all",
        }
    }
}

impl fmt::Display for SrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SrMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "legacy" => Ok(SrMode::Legacy),
            "only_a" => Ok(SrMode::OnlyA),
            "mixed" => Ok(SrMode::Mixed),
            "all" => Ok(SrMode::All),
            other => Err(format!("unknown sr_mode {other:?}")),
        }
    }
}

/// Which BSSs apply SR under `mode` for an `n`-BSS deployment.
pub fn sr_mask(mode: SrMode, n: usize, seed: u64) -> Vec<bool> {
    match mode {
        SrMode::Legacy => vec![false; n],
        SrMode::OnlyA => (0..n).map(|i| i == 0).collect(),
        SrMode::All => vec![true; n],
        SrMode::Mixed => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(MIXED_STREAM);
            (0..n).map(|i| i == 0 || rng.random_bool(0.5)).collect()
        }
    }
}

const GRID_STREAM: u64 = 0;
const MIXED_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traffic {
    FullBuffer,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub obss_pd_values: Vec<f64>,
    /// SRG thresholds; when non-empty the sweep is the joint grid.
    pub obss_pd_srg_values: Vec<f64>,
    /// Map sizes (m) for random-grid layouts.
    pub densities: Vec<f64>,
    pub traffic: Traffic,
    pub loads_mbps: Vec<f64>,
    pub n_agg: Vec<u32>,
    pub n_deployments: u32,
    pub seeds: Vec<u64>,
    pub sr_mode: SrMode,
    pub duration_s: f64,
    pub warmup_s: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            obss_pd_values: obss_pd_range(OBSS_PD_MIN_DBM, OBSS_PD_MAX_DBM, 1.0),
            obss_pd_srg_values: Vec::new(),
            densities: vec![10.0, 15.0, 20.0, 25.0],
            traffic: Traffic::Poisson,
            loads_mbps: vec![12.0, 24.0, 120.0],
            n_agg: vec![64],
            n_deployments: 50,
            seeds: Vec::new(),
            sr_mode: SrMode::OnlyA,
            duration_s: 30.0,
            warmup_s: 1.0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (name, values) in [
            ("sweep.obss_pd_values", &self.obss_pd_values),
            ("sweep.obss_pd_srg_values", &self.obss_pd_srg_values),
        ] {
            if let Some(v) = values
                .iter()
                .find(|v| !(OBSS_PD_MIN_DBM..=OBSS_PD_MAX_DBM).contains(*v))
            {
                return Err(invalid(name, format!("{v} outside [-82, -62]")));
            }
        }
        if self.densities.iter().any(|&d| !(d > 0.0)) {
            return Err(invalid("sweep.densities", "map sizes must be positive"));
        }
        if self.loads_mbps.iter().any(|&l| !(l > 0.0)) {
            return Err(invalid("sweep.loads_mbps", "loads must be positive"));
        }
        if self.n_agg.contains(&0) {
            return Err(invalid("sweep.n_agg", "aggregation must be at least 1"));
        }
        if !(self.duration_s > 0.0) || !(self.warmup_s >= 0.0) || self.warmup_s >= self.duration_s {
            return Err(invalid("sweep.duration_s", "need 0 <= warmup_s < duration_s"));
        }
        Ok(())
    }

    /// Seeds to run: explicit list, else `0..n_deployments`.
    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.n_deployments as u64).collect()
        } else {
            self.seeds.clone()
        }
    }

    /// Every `(non-SRG, SRG)` threshold pair of the sweep.
    pub fn threshold_points(&self) -> Vec<(f64, Option<f64>)> {
        if self.obss_pd_srg_values.is_empty() {
            self.obss_pd_values.iter().map(|&v| (v, None)).collect()
        } else {
            self.obss_pd_values
                .iter()
                .flat_map(|&n| self.obss_pd_srg_values.iter().map(move |&s| (n, Some(s))))
                .collect()
        }
    }
}

/// Inclusive threshold range in `step` dB increments.
pub fn obss_pd_range(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as i64;
    (0..=n).map(|k| from + k as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Explicit(Deployment),
    /// 3x3 random grid, one deployment per (map size, seed).
    RandomGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub env: RadioEnv,
    pub layout: Layout,
    pub sweep: SweepSpec,
}

impl Scenario {
    /// Concrete deployment for a map size and seed.
    pub fn deployment(&self, map_size: f64, seed: u64) -> Result<Deployment, ScenarioError> {
        match &self.layout {
            Layout::Explicit(d) => Ok(d.clone()),
            Layout::RandomGrid => random_grid(map_size, seed),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhySection {
    #[serde(flatten)]
    params: PhyParams,
    #[serde(default)]
    path_loss: Option<PathLossModel>,
    #[serde(default)]
    mcs: Option<McsTable>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "layout", rename_all = "snake_case")]
enum DeploymentSection {
    Explicit(Deployment),
    RandomGrid {},
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    phy: Option<PhySection>,
    #[serde(default)]
    mac: Option<MacParams>,
    deployment: DeploymentSection,
    #[serde(default)]
    sweep: Option<SweepSpec>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text)?;
    let phy = file.phy.unwrap_or_default();
    let env = RadioEnv {
        phy: phy.params,
        mac: file.mac.unwrap_or_default(),
        path_loss: phy.path_loss.unwrap_or_default(),
        mcs: phy.mcs.unwrap_or_default(),
    };
    env.validate()?;
    let layout = match file.deployment {
        DeploymentSection::Explicit(d) => {
            d.validate()?;
            for c in d.configs() {
                c.validate()?;
            }
            Layout::Explicit(d)
        }
        DeploymentSection::RandomGrid {} => Layout::RandomGrid,
    };
    let sweep = file.sweep.unwrap_or_default();
    sweep.validate()?;
    Ok(Scenario { env, layout, sweep })
}

pub fn serialize_scenario(scenario: &Scenario) -> Result<String, ScenarioError> {
    let file = ScenarioFile {
        phy: Some(PhySection {
            params: scenario.env.phy.clone(),
            path_loss: Some(scenario.env.path_loss.clone()),
            mcs: Some(scenario.env.mcs.clone()),
        }),
        mac: Some(scenario.env.mac.clone()),
        deployment: match &scenario.layout {
            Layout::Explicit(d) => DeploymentSection::Explicit(d.clone()),
            Layout::RandomGrid => DeploymentSection::RandomGrid {},
        },
        sweep: Some(scenario.sweep.clone()),
    };
    Ok(toml::to_string(&file)?)
}

/// The two toy layouts.
pub fn toy_scenario(id: u32) -> Result<Deployment, ScenarioError> {
    let p = Position::new;
    match id {
        1 => Ok(Deployment {
            width: 10.0,
            height: 10.0,
            grid: None,
            bsses: vec![
                Bss::new("A", p(4.0, 0.0), p(0.0, 0.0), 1),
                Bss::new("B", p(6.0, 0.0), p(8.0, 0.0), 2),
            ],
        }),
        2 => {
            let mut bsses = vec![
                Bss::new("A", p(4.0, 0.0), p(0.0, 0.0), 1),
                Bss::new("B", p(8.0, 0.0), p(12.0, 0.0), 2),
                Bss::new("C", p(6.0, 5.0), p(6.0, 9.0), 3),
            ];
            bsses[0].srg = Some(1);
            bsses[1].srg = Some(1);
            bsses[2].srg = Some(2);
            Ok(Deployment {
                width: 12.0,
                height: 10.0,
                grid: None,
                bsses,
            })
        }
        other => Err(ScenarioError::UnknownToy(other)),
    }
}

/// Radio environment the toy layouts are analysed with.
pub fn toy_environment(id: u32) -> Result<RadioEnv, ScenarioError> {
    match id {
        1 => Ok(RadioEnv::with_path_loss(PathLossModel::default())),
        2 => Ok(RadioEnv::with_path_loss(PathLossModel::residential())),
        other => Err(ScenarioError::UnknownToy(other)),
    }
}

/// Row-major cell order with the centre cell first.
fn grid_cells() -> [usize; 9] {
    [4, 0, 1, 2, 3, 5, 6, 7, 8]
}

/// Nine BSSs on a 3x3 grid of a `map_size` square. BSS "A" has its AP at
/// the map centre; every other AP and every STA is uniform in its cell.
pub fn random_grid(map_size: f64, seed: u64) -> Result<Deployment, ScenarioError> {
    if !(map_size > 0.0 && map_size.is_finite()) {
        return Err(ScenarioError::MapSize(map_size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GRID_STREAM);
    let mut dep = Deployment {
        width: map_size,
        height: map_size,
        grid: Some(3),
        bsses: Vec::with_capacity(9),
    };
    for (k, cell) in grid_cells().into_iter().enumerate() {
        let (x0, x1, y0, y1) = dep.cell_bounds(3, cell);
        let uniform = |rng: &mut ChaCha8Rng| {
            Position::new(rng.random_range(x0..x1), rng.random_range(y0..y1))
        };
        let ap = if k == 0 {
            Position::new(map_size / 2.0, map_size / 2.0)
        } else {
            uniform(&mut rng)
        };
        let sta = uniform(&mut rng);
        let name = ((b'A' + k as u8) as char).to_string();
        let mut bss = Bss::new(&name, ap, sta, k as u32 + 1);
        bss.cell = Some(cell);
        dep.bsses.push(bss);
    }
    Ok(dep)
}

/// Convenience: the configs of `dep` with SR applied per `mode`.
pub fn configure(
    dep: &Deployment,
    mode: SrMode,
    seed: u64,
    obss_pd_non_srg: f64,
    obss_pd_srg: Option<f64>,
) -> Result<(Deployment, Vec<SrConfig>), ScenarioError> {
    let mask = sr_mask(mode, dep.bsses.len(), seed);
    let d = dep.with_sr(&mask, obss_pd_non_srg, obss_pd_srg);
    let configs = d.configs();
    for c in &configs {
        c.validate()?;
    }
    Ok((d, configs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_positions() {
        let t1 = toy_scenario(1).unwrap();
        assert_eq!(t1.bsses[0].ap, Position::new(4.0, 0.0));
        assert_eq!(t1.bsses[0].ap.distance_to(&t1.bsses[0].stas[0]), 4.0);
        let t2 = toy_scenario(2).unwrap();
        assert_eq!(t2.bsses[2].stas[0], Position::new(6.0, 9.0));
        assert!(toy_scenario(3).is_err());
        t1.validate().unwrap();
        t2.validate().unwrap();
    }

    #[test]
    fn grid_basics() {
        let d = random_grid(25.0, 7).unwrap();
        assert_eq!(d.bsses[0].ap, Position::new(12.5, 12.5));
        assert_eq!(d.bsses.len(), 9);
        let nodes: usize = d.bsses.iter().map(|b| 1 + b.stas.len()).sum();
        assert_eq!(nodes, 18);
        assert_eq!(d, random_grid(25.0, 7).unwrap());
        d.validate().unwrap();
        assert!(random_grid(0.0, 1).is_err());
    }

    #[test]
    fn srg_bitmaps_follow_membership() {
        let d = toy_scenario(2).unwrap();
        let d = d.with_sr(&[true, true, true], -82.0, Some(-73.0));
        let c = d.configs();
        assert!(c[0].srg_enabled);
        assert!(c[0].srg_color_bitmap.contains(2));
        assert!(!c[0].srg_color_bitmap.contains(3));
        assert!(!c[2].srg_color_bitmap.contains(1));
        assert_eq!(c[2].obss_pd_srg, Some(-73.0));
    }

    #[test]
    fn mixed_mask_keeps_a() {
        for seed in 0..20 {
            let m = sr_mask(SrMode::Mixed, 9, seed);
            assert!(m[0]);
            assert_eq!(m, sr_mask(SrMode::Mixed, 9, seed));
        }
    }
}

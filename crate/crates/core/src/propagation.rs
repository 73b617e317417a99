//! Radio abstraction: path loss, link budget, SINR, MCS selection and the
//! duration of every frame in an RTS/CTS/DATA/(B)ACK exchange.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("distance must be positive and finite, got {0} m")]
    Distance(f64),
    #[error("MCS table is empty")]
    EmptyMcsTable,
    #[error("MCS table invalid: {0}")]
    McsTable(String),
    #[error("aggregation count must be at least 1")]
    Aggregation,
    #[error("path-loss model invalid: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Whether a link connects two nodes of the same BSS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkScope {
    IntraBss,
    InterBss,
}

/// Log-distance path loss with a single breakpoint.
///
/// `PL(d) = l0 + 10 g1 log10(min(d, bp)) + [d > bp] 10 g2 log10(d / bp) + wall`
///
/// `inter_bss_loss_db` is added on links that cross BSS boundaries and
/// stands in for the walls separating neighbouring apartments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossModel {
    pub l0_db: f64,
    pub gamma_near: f64,
    pub breakpoint_m: f64,
    pub gamma_far: f64,
    pub wall_loss_db: f64,
    #[serde(default)]
    pub inter_bss_loss_db: f64,
}

impl Default for PathLossModel {
    /// Fit for the two-BSS toy layout: 17 dBm over the 4 m AP-STA link
    /// lands at -67 dBm, and the 2 m AP-AP link sits just below -79 dBm
    /// at 20 dBm.
    fn default() -> Self {
        PathLossModel {
            l0_db: 46.4,
            gamma_near: 2.0,
            breakpoint_m: 5.0,
            gamma_far: 3.5,
            wall_loss_db: 25.56,
            inter_bss_loss_db: 21.5,
        }
    }
}

impl PathLossModel {
    /// Same distance law with a single interior wall between BSSs.
    pub fn residential() -> Self {
        PathLossModel {
            inter_bss_loss_db: 10.0,
            ..PathLossModel::default()
        }
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        let fields = [
            self.l0_db,
            self.gamma_near,
            self.breakpoint_m,
            self.gamma_far,
            self.wall_loss_db,
            self.inter_bss_loss_db,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(PropagationError::Model("non-finite parameter".into()));
        }
        if self.breakpoint_m <= 0.0 {
            return Err(PropagationError::Model("breakpoint must be positive".into()));
        }
        if self.gamma_near <= 0.0 || self.gamma_far <= 0.0 {
            return Err(PropagationError::Model("exponents must be positive".into()));
        }
        Ok(())
    }

    /// Distance-dependent loss in dB.
    pub fn path_loss(&self, d: f64) -> Result<f64, PropagationError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(PropagationError::Distance(d));
        }
        let near = 10.0 * self.gamma_near * d.min(self.breakpoint_m).log10();
        let far = if d > self.breakpoint_m {
            10.0 * self.gamma_far * (d / self.breakpoint_m).log10()
        } else {
            0.0
        };
        Ok(self.l0_db + near + far + self.wall_loss_db)
    }

    pub fn link_loss(&self, d: f64, scope: LinkScope) -> Result<f64, PropagationError> {
        let extra = match scope {
            LinkScope::IntraBss => 0.0,
            LinkScope::InterBss => self.inter_bss_loss_db,
        };
        Ok(self.path_loss(d)? + extra)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhyParams {
    pub f_c_ghz: f64,
    pub g_tx_db: f64,
    pub g_rx_db: f64,
    pub noise_dbm: f64,
    pub sigma_us: f64,
    pub sigma_leg_us: f64,
    pub n_sc: u32,
    pub n_ss: u32,
    /// Extra SINR a receiver needs on top of the MCS threshold to lock on.
    pub capture_margin_db: f64,
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams {
            f_c_ghz: 5.0,
            g_tx_db: 0.0,
            g_rx_db: 0.0,
            noise_dbm: -95.0,
            sigma_us: 16.0,
            sigma_leg_us: 4.0,
            n_sc: 234,
            n_ss: 1,
            capture_margin_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacParams {
    pub t_e_us: f64,
    pub t_sifs_us: f64,
    pub t_difs_us: f64,
    pub t_pifs_us: f64,
    pub t_phy_leg_us: f64,
    pub t_he_su_us: f64,
    pub t_ack_us: f64,
    pub t_back_us: f64,
    pub l_d: u32,
    pub l_rts: u32,
    pub l_cts: u32,
    pub l_sf: u32,
    pub l_mh: u32,
    pub l_s_leg: u32,
    pub cw: u32,
    pub n_agg_max: u32,
    pub max_ppdu_us: f64,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            t_e_us: 9.0,
            t_sifs_us: 16.0,
            t_difs_us: 34.0,
            t_pifs_us: 25.0,
            t_phy_leg_us: 20.0,
            t_he_su_us: 100.0,
            t_ack_us: 28.0,
            t_back_us: 32.0,
            l_d: 12_000,
            l_rts: 160,
            l_cts: 112,
            l_sf: 16,
            l_mh: 320,
            l_s_leg: 24,
            cw: 15,
            n_agg_max: 64,
            max_ppdu_us: 5484.0,
        }
    }
}

impl MacParams {
    /// Mean of the continuous backoff, (CW/2) slots.
    pub fn mean_backoff_s(&self) -> f64 {
        self.cw as f64 / 2.0 * self.t_e_us * 1e-6
    }
}

/// One row of the modulation and coding table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mcs {
    pub index: u8,
    /// Coded bits per subcarrier (1 = BPSK, 2 = QPSK, ...).
    pub modulation_bits: u32,
    /// Coding rate as numerator / denominator.
    pub code_rate: [u32; 2],
    pub min_sinr_db: f64,
}

impl Mcs {
    pub fn bits_per_subcarrier(&self) -> f64 {
        self.modulation_bits as f64 * self.code_rate[0] as f64 / self.code_rate[1] as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct McsTable(Vec<Mcs>);

const HE_SU_MCS: [(u32, u32, u32, f64); 12] = [
    (1, 1, 2, 2.0),
    (2, 1, 2, 5.0),
    (2, 3, 4, 8.0),
    (4, 1, 2, 11.0),
    (4, 3, 4, 14.0),
    (6, 2, 3, 17.0),
    (6, 3, 4, 19.0),
    (6, 5, 6, 21.0),
    (8, 3, 4, 24.0),
    (8, 5, 6, 26.0),
    (10, 3, 4, 27.5),
    (10, 5, 6, 29.5),
];

impl Default for McsTable {
    /// HE single-stream MCS 0-11.
    fn default() -> Self {
        McsTable(
            HE_SU_MCS
                .iter()
                .enumerate()
                .map(|(i, &(m, num, den, sinr))| Mcs {
                    index: i as u8,
                    modulation_bits: m,
                    code_rate: [num, den],
                    min_sinr_db: sinr,
                })
                .collect(),
        )
    }
}

impl McsTable {
    pub fn new(entries: Vec<Mcs>) -> Result<Self, PropagationError> {
        let table = McsTable(entries);
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        if self.0.is_empty() {
            return Err(PropagationError::EmptyMcsTable);
        }
        for m in &self.0 {
            if m.modulation_bits == 0 || m.code_rate[0] == 0 || m.code_rate[1] == 0 {
                return Err(PropagationError::McsTable(format!(
                    "MCS {} has a zero rate",
                    m.index
                )));
            }
            if !m.min_sinr_db.is_finite() {
                return Err(PropagationError::McsTable(format!(
                    "MCS {} threshold is not finite",
                    m.index
                )));
            }
        }
        for w in self.0.windows(2) {
            if w[1].min_sinr_db <= w[0].min_sinr_db {
                return Err(PropagationError::McsTable(
                    "min_sinr must increase strictly with index".into(),
                ));
            }
            if w[1].bits_per_subcarrier() <= w[0].bits_per_subcarrier() {
                return Err(PropagationError::McsTable(
                    "rate must increase strictly with index".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[Mcs] {
        &self.0
    }

    /// Most robust entry, used for control frames.
    pub fn lowest(&self) -> &Mcs {
        &self.0[0]
    }

    /// Highest-rate entry whose threshold the SINR meets.
    pub fn select(&self, sinr_db: f64) -> Option<&Mcs> {
        self.0.iter().rev().find(|m| m.min_sinr_db <= sinr_db)
    }
}

pub fn select_mcs(sinr_db: f64, table: &McsTable) -> Result<Option<Mcs>, PropagationError> {
    if table.0.is_empty() {
        return Err(PropagationError::EmptyMcsTable);
    }
    Ok(table.select(sinr_db).copied())
}

pub fn rssi(
    tx_pwr_dbm: f64,
    d: f64,
    phy: &PhyParams,
    model: &PathLossModel,
) -> Result<f64, PropagationError> {
    Ok(tx_pwr_dbm + phy.g_tx_db + phy.g_rx_db - model.path_loss(d)?)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// SINR in dB, summing noise and interference in the linear domain.
pub fn sinr(signal_dbm: f64, interferers_dbm: &[f64], noise_dbm: f64) -> f64 {
    let total: f64 = dbm_to_mw(noise_dbm) + interferers_dbm.iter().map(|&i| dbm_to_mw(i)).sum::<f64>();
    signal_dbm - mw_to_dbm(total)
}

fn data_bits_per_symbol(mcs: &Mcs, phy: &PhyParams) -> (u64, u64) {
    // Kept as a fraction so that ceil() sees exact integers.
    let num = phy.n_sc as u64 * phy.n_ss as u64 * mcs.modulation_bits as u64 * mcs.code_rate[0] as u64;
    (num, mcs.code_rate[1] as u64)
}

pub fn data_rate(mcs: &Mcs, phy: &PhyParams) -> f64 {
    let (num, den) = data_bits_per_symbol(mcs, phy);
    num as f64 / den as f64 / (phy.sigma_us * 1e-6)
}

/// Durations of one exchange, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameDurations {
    /// Aggregation actually used after applying the PPDU cap.
    pub n_agg: u32,
    pub t_rts: f64,
    pub t_cts: f64,
    pub t_data: f64,
    pub t_ack_or_back: f64,
    pub t_exchange_success: f64,
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

fn data_symbols(n_agg: u32, mcs: &Mcs, phy: &PhyParams, mac: &MacParams) -> u64 {
    let (num, den) = data_bits_per_symbol(mcs, phy);
    let bits = mac.l_sf as u64 + n_agg as u64 * (mac.l_mh as u64 + mac.l_d as u64);
    ceil_div(bits * den, num)
}

/// Largest aggregation whose payload fits the PPDU duration cap (at least 1).
pub fn max_aggregation(mcs: &Mcs, phy: &PhyParams, mac: &MacParams) -> u32 {
    let fits = |n: u32| data_symbols(n, mcs, phy, mac) as f64 * phy.sigma_us <= mac.max_ppdu_us;
    let (mut lo, mut hi) = (1u32, mac.n_agg_max.max(1));
    if fits(hi) {
        return hi;
    }
    // fits(lo) may be false for very slow MCSs; a single frame is still sent.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn frame_durations(
    n_agg: u32,
    mcs: &Mcs,
    phy: &PhyParams,
    mac: &MacParams,
) -> Result<FrameDurations, PropagationError> {
    if n_agg < 1 {
        return Err(PropagationError::Aggregation);
    }
    let n = n_agg.min(max_aggregation(mcs, phy, mac));
    let legacy = |bits: u32| {
        mac.t_phy_leg_us + ceil_div(bits as u64, mac.l_s_leg as u64) as f64 * phy.sigma_leg_us
    };
    let t_rts = legacy(mac.l_rts);
    let t_cts = legacy(mac.l_cts);
    let t_data =
        mac.t_phy_leg_us + mac.t_he_su_us + data_symbols(n, mcs, phy, mac) as f64 * phy.sigma_us;
    let t_ack = if n == 1 { mac.t_ack_us } else { mac.t_back_us };
    let total = t_rts
        + mac.t_sifs_us
        + t_cts
        + mac.t_sifs_us
        + t_data
        + mac.t_sifs_us
        + t_ack
        + mac.t_difs_us
        + mac.t_e_us;
    Ok(FrameDurations {
        n_agg: n,
        t_rts: t_rts * 1e-6,
        t_cts: t_cts * 1e-6,
        t_data: t_data * 1e-6,
        t_ack_or_back: t_ack * 1e-6,
        t_exchange_success: total * 1e-6,
    })
}

/// Everything a link-level computation needs besides geometry.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadioEnv {
    pub phy: PhyParams,
    pub mac: MacParams,
    pub path_loss: PathLossModel,
    pub mcs: McsTable,
}

impl RadioEnv {
    pub fn with_path_loss(path_loss: PathLossModel) -> Self {
        RadioEnv {
            path_loss,
            ..RadioEnv::default()
        }
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        self.path_loss.validate()?;
        self.mcs.validate()
    }

    /// Received power over a link of length `d`.
    pub fn rx_power(&self, tx_pwr_dbm: f64, d: f64, scope: LinkScope) -> Result<f64, PropagationError> {
        Ok(tx_pwr_dbm + self.phy.g_tx_db + self.phy.g_rx_db - self.path_loss.link_loss(d, scope)?)
    }
}

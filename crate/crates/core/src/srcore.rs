//! Rule-and-formula engine for OBSS/PD-based spatial reuse.
//!
//! Everything in here is a pure function of its arguments: frame
//! classification by BSS color / SRG membership, the sensitivity threshold a
//! receiver applies to a classified frame, the OBSS/PD upper bound and the
//! transmit power restriction that comes with it, SRPS element validation
//! and the PSR arithmetic used by trigger-based opportunists.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default CCA/CS threshold for decodable frames.
pub const CCA_CS_DEFAULT_DBM: f64 = -82.0;
/// Lower bound of the OBSS/PD range (OBSS/PD_min).
pub const OBSS_PD_MIN_DBM: f64 = -82.0;
/// Upper bound of the OBSS/PD range (OBSS/PD_max).
pub const OBSS_PD_MAX_DBM: f64 = -62.0;
/// Upper bound of the PSR safety margin.
pub const PSR_SAFETY_MARGIN_MAX_DB: f64 = 5.0;
/// Largest value representable by an SRPS offset subfield.
pub const SRPS_OFFSET_MAX: u8 = 31;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SrError {
    #[error("BSS color {0} outside 1..=63")]
    InvalidColor(u32),
    #[error("{format:?} frame is missing its {field} field")]
    MissingIdentity {
        format: PpduFormat,
        field: &'static str,
    },
    #[error("unsupported channel width {0} MHz (expected 20, 40, 80 or 160)")]
    UnsupportedWidth(u32),
    #[error("OBSS/PD {0} dBm outside [-82, -62]")]
    ObssPdOutOfRange(f64),
    #[error("TX_PWR_ref must be 21 or 25 dBm, got {0}")]
    InvalidTxPowerRef(f64),
    #[error("PSR safety margin {0} dB outside [0, 5]")]
    SafetyMargin(f64),
    #[error("SRPS constraint violated: {0}")]
    Srps(SrpsViolation),
}

/// BSS color carried in HE PPDU headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct BssColor(u8);

impl BssColor {
    pub fn new(value: u32) -> Result<Self, SrError> {
        if (1..=63).contains(&value) {
            Ok(BssColor(value as u8))
        } else {
            Err(SrError::InvalidColor(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl TryFrom<u32> for BssColor {
    type Error = SrError;
    fn try_from(value: u32) -> Result<Self, Self::Error> {
        BssColor::new(value)
    }
}

impl From<BssColor> for u32 {
    fn from(c: BssColor) -> u32 {
        c.0 as u32
    }
}

impl fmt::Display for BssColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A 64-entry membership bitmap as carried by the SRPS element.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bitmap64(pub u64);

impl Bitmap64 {
    pub fn contains(self, bit: u64) -> bool {
        bit < 64 && self.0 & (1u64 << bit) != 0
    }

    pub fn with(self, bit: u64) -> Self {
        assert!(bit < 64, "bitmap index {bit} out of range");
        Bitmap64(self.0 | (1u64 << bit))
    }
}

impl FromIterator<u64> for Bitmap64 {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        iter.into_iter().fold(Bitmap64::default(), Bitmap64::with)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PpduFormat {
    He,
    Vht,
    Legacy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    Rts,
    Cts,
    Data,
    Ack,
    BlockAck,
    Trigger,
    CfEnd,
    Beacon,
}

impl FrameKind {
    pub fn label(self) -> &'static str {
        match self {
            FrameKind::Rts => "RTS",
            FrameKind::Cts => "CTS",
            FrameKind::Data => "DATA",
            FrameKind::Ack => "ACK",
            FrameKind::BlockAck => "BACK",
            FrameKind::Trigger => "TF",
            FrameKind::CfEnd => "CF-End",
            FrameKind::Beacon => "Beacon",
        }
    }
}

/// Header content a receiver can inspect before deciding how to treat a PPDU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub format: PpduFormat,
    pub bss_color: Option<BssColor>,
    pub group_id: Option<u8>,
    pub partial_aid: Option<u16>,
    pub bssid: Option<u64>,
    /// Ground-truth originating BSS. Only the simulator looks at this.
    pub src_bss: usize,
    /// Duration field (seconds) used to set the NAV.
    pub duration: f64,
    pub kind: FrameKind,
}

impl FrameMeta {
    pub fn he(color: BssColor, src_bss: usize, kind: FrameKind, duration: f64) -> Self {
        FrameMeta {
            format: PpduFormat::He,
            bss_color: Some(color),
            group_id: None,
            partial_aid: None,
            bssid: None,
            src_bss,
            duration,
            kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameClass {
    IntraBss,
    InterBssNonSrg,
    InterBssSrg,
}

impl FrameClass {
    pub fn is_inter(self) -> bool {
        self != FrameClass::IntraBss
    }

    pub fn label(self) -> &'static str {
        match self {
            FrameClass::IntraBss => "intra",
            FrameClass::InterBssNonSrg => "inter_non_srg",
            FrameClass::InterBssSrg => "inter_srg",
        }
    }
}

/// Identity of the BSS a receiver belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BssIdentity {
    pub color: BssColor,
    pub bssid: u64,
    pub partial_aid: u16,
}

impl BssIdentity {
    /// Identity with a BSSID and partial AID derived from the color.
    pub fn from_color(color: BssColor) -> Self {
        BssIdentity {
            color,
            bssid: 0x02_00_00_00_00_00 | color.value() as u64,
            partial_aid: color.value() as u16,
        }
    }
}

/// Per-node sensitivity and power configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrConfig {
    pub cca_cs: f64,
    pub obss_pd_non_srg: f64,
    pub obss_pd_srg: Option<f64>,
    pub tx_pwr: f64,
    pub tx_pwr_ref: f64,
    pub srg_enabled: bool,
    pub srg_color_bitmap: Bitmap64,
    pub srg_partial_bssid_bitmap: Bitmap64,
    pub non_srg_sr_disallowed: bool,
    pub psr_disallowed: bool,
}

impl Default for SrConfig {
    fn default() -> Self {
        SrConfig {
            cca_cs: CCA_CS_DEFAULT_DBM,
            obss_pd_non_srg: CCA_CS_DEFAULT_DBM,
            obss_pd_srg: None,
            tx_pwr: 20.0,
            tx_pwr_ref: 21.0,
            srg_enabled: false,
            srg_color_bitmap: Bitmap64::default(),
            srg_partial_bssid_bitmap: Bitmap64::default(),
            non_srg_sr_disallowed: false,
            psr_disallowed: false,
        }
    }
}

impl SrConfig {
    /// Checks the value ranges every consumer relies on.
    pub fn validate(&self) -> Result<(), SrError> {
        check_obss_pd(self.obss_pd_non_srg)?;
        if let Some(srg) = self.obss_pd_srg {
            check_obss_pd(srg)?;
        }
        check_tx_pwr_ref(self.tx_pwr_ref)
    }

    /// True when any inter-BSS threshold is more permissive than CCA/CS.
    pub fn applies_sr(&self) -> bool {
        let non_srg = !self.non_srg_sr_disallowed && self.obss_pd_non_srg > self.cca_cs;
        let srg = self.srg_enabled && self.obss_pd_srg.is_some_and(|v| v > self.cca_cs);
        non_srg || srg
    }
}

fn check_obss_pd(v: f64) -> Result<(), SrError> {
    if (OBSS_PD_MIN_DBM..=OBSS_PD_MAX_DBM).contains(&v) {
        Ok(())
    } else {
        Err(SrError::ObssPdOutOfRange(v))
    }
}

fn check_tx_pwr_ref(v: f64) -> Result<(), SrError> {
    if v == 21.0 || v == 25.0 {
        Ok(())
    } else {
        Err(SrError::InvalidTxPowerRef(v))
    }
}

/// Bit index a VHT PARTIAL_AID or a legacy BSSID maps to in the SRG
/// Partial BSSID bitmap (low six bits of the identifier).
fn partial_bssid_bit(id: u64) -> u64 {
    id & 0x3f
}

/// Classifies a detected PPDU as intra-BSS, SRG inter-BSS or non-SRG
/// inter-BSS from the receiver's point of view.
///
/// HE frames are classified by color. VHT frames use GROUP_ID/PARTIAL_AID
/// and legacy frames the BSSID, both checked against the SRG Partial BSSID
/// bitmap. When SRG is not enabled no frame is ever classified as SRG.
pub fn classify_frame(
    receiver_config: &SrConfig,
    receiver: &BssIdentity,
    frame: &FrameMeta,
) -> Result<FrameClass, SrError> {
    let srg = |hit: bool| {
        if receiver_config.srg_enabled && hit {
            FrameClass::InterBssSrg
        } else {
            FrameClass::InterBssNonSrg
        }
    };
    match frame.format {
        PpduFormat::He => {
            let color = frame.bss_color.ok_or(SrError::MissingIdentity {
                format: PpduFormat::He,
                field: "bss_color",
            })?;
            if color == receiver.color {
                return Ok(FrameClass::IntraBss);
            }
            Ok(srg(receiver_config
                .srg_color_bitmap
                .contains(color.value() as u64)))
        }
        PpduFormat::Vht => {
            let missing = |field| SrError::MissingIdentity {
                format: PpduFormat::Vht,
                field,
            };
            let group_id = frame.group_id.ok_or_else(|| missing("group_id"))?;
            let paid = frame.partial_aid.ok_or_else(|| missing("partial_aid"))?;
            if paid == receiver.partial_aid {
                return Ok(FrameClass::IntraBss);
            }
            let hit = group_id == 0
                && receiver_config
                    .srg_partial_bssid_bitmap
                    .contains(partial_bssid_bit(paid as u64));
            Ok(srg(hit))
        }
        PpduFormat::Legacy => {
            let bssid = frame.bssid.ok_or(SrError::MissingIdentity {
                format: PpduFormat::Legacy,
                field: "bssid",
            })?;
            if bssid == receiver.bssid {
                return Ok(FrameClass::IntraBss);
            }
            Ok(srg(receiver_config
                .srg_partial_bssid_bitmap
                .contains(partial_bssid_bit(bssid))))
        }
    }
}

/// Threshold (dBm) a receiver compares a frame's RSSI against.
pub fn effective_sensitivity(config: &SrConfig, class: FrameClass) -> f64 {
    let non_srg = || {
        if config.non_srg_sr_disallowed {
            config.cca_cs
        } else {
            config.obss_pd_non_srg
        }
    };
    match class {
        FrameClass::IntraBss => config.cca_cs,
        FrameClass::InterBssNonSrg => non_srg(),
        FrameClass::InterBssSrg => match (config.srg_enabled, config.obss_pd_srg) {
            (true, Some(v)) => v,
            _ => non_srg(),
        },
    }
}

/// Upper bound on the OBSS/PD threshold for a given transmit power.
pub fn max_obss_pd(tx_pwr: f64, tx_pwr_ref: f64) -> f64 {
    OBSS_PD_MIN_DBM.max(OBSS_PD_MAX_DBM.min(OBSS_PD_MIN_DBM + (tx_pwr_ref - tx_pwr)))
}

/// OBSS/PD threshold for a wider PPDU: +3 dB per doubling of 20 MHz.
pub fn scale_obss_pd(obss_pd_20mhz: f64, channel_width_mhz: u32) -> Result<f64, SrError> {
    let doublings = match channel_width_mhz {
        20 => 0,
        40 => 1,
        80 => 2,
        160 => 3,
        other => return Err(SrError::UnsupportedWidth(other)),
    };
    Ok(obss_pd_20mhz + 3.0 * doublings as f64)
}

/// Maximum transmit power for a TXOP gained by ignoring a frame with the
/// given OBSS/PD threshold. `None` means unconstrained (threshold at the
/// OBSS/PD floor).
pub fn tx_power_restriction(obss_pd: f64, tx_pwr_ref: f64) -> Result<Option<f64>, SrError> {
    check_obss_pd(obss_pd)?;
    if obss_pd <= OBSS_PD_MIN_DBM {
        Ok(None)
    } else {
        Ok(Some(tx_pwr_ref - (obss_pd - OBSS_PD_MIN_DBM)))
    }
}

/// Most restrictive of the collected power restrictions.
pub fn combine_power_restrictions<I>(restrictions: I) -> Option<f64>
where
    I: IntoIterator<Item = Option<f64>>,
{
    restrictions
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))))
}

/// Spatial Reuse Parameter Set element, field by field.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrpsElement {
    pub psr_disallowed: bool,
    pub non_srg_obss_pd_sr_disallowed: bool,
    pub non_srg_offset_present: bool,
    pub srg_information_present: bool,
    pub non_srg_obss_pd_max_offset: u8,
    pub srg_obss_pd_min_offset: u8,
    pub srg_obss_pd_max_offset: u8,
    pub srg_bss_color_bitmap: u64,
    pub srg_partial_bssid_bitmap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrpsViolation {
    OffsetRange { field: &'static str, value: u8 },
    SrgMinRange,
    SrgMinAboveMax,
    SrgMaxRange,
    NonSrgMaxRange,
}

impl fmt::Display for SrpsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SrpsViolation::OffsetRange { field, value } => {
                write!(f, "{field} = {value} does not fit the 0..=31 offset field")
            }
            SrpsViolation::SrgMinRange => {
                write!(f, "-82 <= -82 + SRG OBSS/PD Min Offset <= -62")
            }
            SrpsViolation::SrgMinAboveMax => {
                write!(f, "SRG OBSS/PD Min Offset <= SRG OBSS/PD Max Offset")
            }
            SrpsViolation::SrgMaxRange => write!(f, "SRG OBSS/PD Max Offset + -82 <= -62"),
            SrpsViolation::NonSrgMaxRange => {
                write!(f, "Non-SRG OBSS/PD Max Offset + -82 <= -62")
            }
        }
    }
}

/// Threshold bounds (dBm) implied by a validated SRPS element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SrpsBounds {
    pub non_srg_min: f64,
    pub non_srg_max: f64,
    /// `None` when the element carries no SRG information.
    pub srg: Option<(f64, f64)>,
}

/// Bounds used when no SRPS element was received at all.
pub const SRPS_UNSPECIFIED: SrpsBounds = SrpsBounds {
    non_srg_min: OBSS_PD_MIN_DBM,
    non_srg_max: OBSS_PD_MAX_DBM,
    srg: None,
};

pub fn validate_srps(element: &SrpsElement) -> Result<SrpsBounds, SrError> {
    let fail = |v| Err(SrError::Srps(v));
    for (field, value) in [
        (
            "non_srg_obss_pd_max_offset",
            element.non_srg_obss_pd_max_offset,
        ),
        ("srg_obss_pd_min_offset", element.srg_obss_pd_min_offset),
        ("srg_obss_pd_max_offset", element.srg_obss_pd_max_offset),
    ] {
        if value > SRPS_OFFSET_MAX {
            return fail(SrpsViolation::OffsetRange { field, value });
        }
    }

    let span = OBSS_PD_MAX_DBM - OBSS_PD_MIN_DBM;
    let srg = if element.srg_information_present {
        let min_off = element.srg_obss_pd_min_offset as f64;
        let max_off = element.srg_obss_pd_max_offset as f64;
        if min_off > span {
            return fail(SrpsViolation::SrgMinRange);
        }
        if element.srg_obss_pd_min_offset > element.srg_obss_pd_max_offset {
            return fail(SrpsViolation::SrgMinAboveMax);
        }
        if max_off > span {
            return fail(SrpsViolation::SrgMaxRange);
        }
        Some((OBSS_PD_MIN_DBM + min_off, OBSS_PD_MIN_DBM + max_off))
    } else {
        None
    };

    let (non_srg_min, non_srg_max) = if element.non_srg_obss_pd_sr_disallowed {
        (OBSS_PD_MIN_DBM, OBSS_PD_MIN_DBM)
    } else if element.non_srg_offset_present {
        let off = element.non_srg_obss_pd_max_offset as f64;
        if off > span {
            return fail(SrpsViolation::NonSrgMaxRange);
        }
        (OBSS_PD_MIN_DBM, OBSS_PD_MIN_DBM + off)
    } else {
        (OBSS_PD_MIN_DBM, OBSS_PD_MAX_DBM)
    };

    Ok(SrpsBounds {
        non_srg_min,
        non_srg_max,
        srg,
    })
}

/// PSR value advertised by a transmission holder.
pub fn psr_value(tx_pwr_ap: f64, i_ap_max: f64) -> f64 {
    tx_pwr_ap + i_ap_max
}

/// Maximum interference tolerated at the AP for a TB PPDU.
pub fn i_ap_max(target_rssi: f64, min_snr_10pct_per: f64, safety_margin: f64) -> Result<f64, SrError> {
    if !(0.0..=PSR_SAFETY_MARGIN_MAX_DB).contains(&safety_margin) {
        return Err(SrError::SafetyMargin(safety_margin));
    }
    Ok(target_rssi - min_snr_10pct_per - safety_margin)
}

/// Whether an opportunist may transmit at `intended_tx_pwr` during a PSR
/// opportunity.
pub fn psr_opportunity(psr: f64, rpl: f64, intended_tx_pwr: f64) -> bool {
    intended_tx_pwr < psr - rpl
}

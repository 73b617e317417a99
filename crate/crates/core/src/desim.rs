//! Discrete-event CSMA/CA simulator with OBSS/PD spatial reuse.
//!
//! Downlink only: APs contend with a continuous backoff and run
//! RTS/CTS/DATA/(B)ACK exchanges; STAs only answer. Every AP keeps an
//! intra-BSS and an inter-BSS NAV and may ignore inter-BSS frames below its
//! OBSS/PD threshold, in which case its next transmission is power limited
//! until the ignored frame's TXOP ends.
//!
//! Time is kept in integer nanoseconds. Events are ordered by
//! (time, node id, insertion order).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use thiserror::Error;

use crate::propagation::{self, Mcs, PropagationError, RadioEnv};
use crate::scenario::{Deployment, Node};
use crate::srcore::{self, BssIdentity, FrameClass, FrameKind, FrameMeta, SrConfig, SrError};

pub type Ns = u64;

pub fn us_to_ns(us: f64) -> Ns {
    (us * 1e3).round() as Ns
}

pub fn s_to_ns(s: f64) -> Ns {
    (s * 1e9).round() as Ns
}

fn ns_to_us(t: Ns) -> f64 {
    t as f64 / 1e3
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid deployment: {0}")]
    Deployment(String),
    #[error("invalid simulation parameters: {0}")]
    Params(String),
    #[error("internal assertion failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Sr(#[from] SrError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TrafficModel {
    FullBuffer,
    /// Poisson arrivals at the given offered load per AP (bits/s).
    Poisson { load_bps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub traffic: TrafficModel,
    pub n_agg_max: u32,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub seed: u64,
    pub buffer_capacity: usize,
    /// Truncate the NAV of overhearing nodes with a CF-End after a CTS timeout.
    pub cf_end_on_timeout: bool,
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            traffic: TrafficModel::FullBuffer,
            n_agg_max: 64,
            duration_s: 30.0,
            warmup_s: 1.0,
            seed: 0,
            buffer_capacity: 100,
            cf_end_on_timeout: false,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NavKind {
    Intra,
    Inter,
}

impl NavKind {
    pub fn label(self) -> &'static str {
        match self {
            NavKind::Intra => "intra",
            NavKind::Inter => "inter",
        }
    }
}

/// Carrier-sense bookkeeping of one node: both NAVs and the power
/// restrictions collected from ignored frames (value, expiry).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SensingState {
    pub nav_intra: Ns,
    pub nav_inter: Ns,
    pub restrictions: Vec<(f64, Ns)>,
}

impl SensingState {
    pub fn nav_active(&self, now: Ns) -> bool {
        now < self.nav_intra || now < self.nav_inter
    }

    /// Transmit power for an access at `now`.
    pub fn transmit_power(&mut self, cfg: &SrConfig, now: Ns) -> f64 {
        self.restrictions.retain(|&(_, until)| until > now);
        let cap = srcore::combine_power_restrictions(self.restrictions.iter().map(|&(v, _)| Some(v)));
        cap.map_or(cfg.tx_pwr, |c| c.min(cfg.tx_pwr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detection {
    /// Below CCA/CS: interference only.
    Undetected,
    /// Below the class threshold: not counted for carrier sense.
    Ignored {
        class: FrameClass,
        threshold: f64,
        restriction: Option<f64>,
    },
    /// Medium busy for the frame's airtime; `nav` is set when the frame was
    /// decoded and is not addressed to this node.
    Busy {
        class: FrameClass,
        nav: Option<NavKind>,
    },
}

/// Reaction of a node to the start of a frame it can hear.
///
/// `nav_end` is the end of the frame plus its duration field. A decodable
/// frame above the applicable threshold sets the NAV matching its class;
/// an inter-BSS frame under an OBSS/PD threshold is ignored and leaves an
/// transmit-power restriction behind until `nav_end`.
#[allow(clippy::too_many_arguments)]
pub fn on_frame_detected(
    cfg: &SrConfig,
    me: &BssIdentity,
    state: &mut SensingState,
    frame: &FrameMeta,
    rssi: f64,
    decodable: bool,
    addressed_to_me: bool,
    nav_end: Ns,
) -> Result<Detection, SrError> {
    if rssi < cfg.cca_cs {
        return Ok(Detection::Undetected);
    }
    let class = srcore::classify_frame(cfg, me, frame)?;
    let threshold = srcore::effective_sensitivity(cfg, class);
    if rssi < threshold {
        let restriction = if class.is_inter() && threshold > cfg.cca_cs {
            srcore::tx_power_restriction(threshold, cfg.tx_pwr_ref)?
        } else {
            None
        };
        if let Some(r) = restriction {
            state.restrictions.push((r, nav_end));
        }
        return Ok(Detection::Ignored {
            class,
            threshold,
            restriction,
        });
    }
    let nav = if decodable && !addressed_to_me {
        let kind = if class.is_inter() { NavKind::Inter } else { NavKind::Intra };
        let slot = match kind {
            NavKind::Intra => &mut state.nav_intra,
            NavKind::Inter => &mut state.nav_inter,
        };
        *slot = (*slot).max(nav_end);
        Some(kind)
    } else {
        None
    };
    Ok(Detection::Busy { class, nav })
}

/// CF-End reception: clears the NAV of the frame's class only.
pub fn on_cf_end(
    cfg: &SrConfig,
    me: &BssIdentity,
    state: &mut SensingState,
    frame: &FrameMeta,
    now: Ns,
) -> Result<NavKind, SrError> {
    let class = srcore::classify_frame(cfg, me, frame)?;
    if class.is_inter() {
        state.nav_inter = state.nav_inter.min(now);
        Ok(NavKind::Inter)
    } else {
        state.nav_intra = state.nav_intra.min(now);
        Ok(NavKind::Intra)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reception {
    Delivered,
    Lost,
}

/// A frame is delivered iff its SINR meets `required` in every interference
/// epoch of its lifetime (each epoch lists the interferers on the air).
pub fn reception_outcome(signal: f64, epochs: &[Vec<f64>], noise: f64, required: f64) -> Reception {
    let ok = epochs
        .iter()
        .all(|interferers| propagation::sinr(signal, interferers, noise) >= required);
    if ok {
        Reception::Delivered
    } else {
        Reception::Lost
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BssMetrics {
    pub throughput_bps: f64,
    pub occupancy: f64,
    /// Mean enqueue-to-ACK delay, seconds; `None` if nothing was delivered.
    pub mean_delay_s: Option<f64>,
    pub drops: u64,
    pub collisions: u64,
    pub delivered_packets: u64,
    pub attempts: u64,
    pub sr_enabled: bool,
}

/// Packet accounting over the whole run, warm-up included.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Conservation {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub queued: u64,
}

impl Conservation {
    pub fn balanced(&self) -> bool {
        self.generated == self.delivered + self.dropped + self.queued
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub window_s: f64,
    pub per_bss: Vec<BssMetrics>,
    pub conservation: Vec<Conservation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: Ns,
    pub node: usize,
    pub event: &'static str,
    pub detail: String,
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        format!("{:.3},{},{},{}", ns_to_us(self.time), self.node, self.event, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: MetricsReport,
    pub trace: Vec<TraceRecord>,
}

impl SimOutput {
    pub fn trace_text(&self) -> String {
        let mut out = String::from("time_us,node,event,detail\n");
        for r in &self.trace {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }
}

type TxId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    TxEnd(TxId),
    Resume { ap: usize, gen: u64 },
    BackoffDone { ap: usize, gen: u64 },
    NavCheck { ap: usize },
    Arrival { ap: usize },
    StaCts { ap: usize, xid: u64 },
    ApData { ap: usize, xid: u64 },
    StaAck { ap: usize, xid: u64 },
    Timeout { ap: usize, xid: u64 },
    ExchangeDone { ap: usize, xid: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Contend,
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Rts,
    Cts,
    Data,
    Ack,
    Wrapup,
}

#[derive(Debug, Clone, Copy)]
struct Times {
    rts: Ns,
    cts: Ns,
    data: Ns,
    ack: Ns,
}

#[derive(Debug, Clone)]
struct Exchange {
    xid: u64,
    start: Ns,
    sta: usize,
    n_agg: u32,
    mcs: Mcs,
    power: f64,
    t: Times,
    stage: Stage,
    /// MPDUs of the A-MPDU received by the STA.
    acked: u32,
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    arrival: Ns,
    sta: usize,
}

#[derive(Debug, Default, Clone)]
struct Stats {
    delivered_bits: u64,
    airtime: Ns,
    delay_sum: Ns,
    delay_n: u64,
    drops: u64,
    collisions: u64,
    attempts: u64,
    total: Conservation,
}

struct Ap {
    cfg: SrConfig,
    ident: BssIdentity,
    node: usize,
    sense: SensingState,
    sensed: Vec<TxId>,
    phase: Phase,
    remaining: Ns,
    counting_since: Option<Ns>,
    resume_pending: bool,
    gen: u64,
    xid: u64,
    queue: VecDeque<Packet>,
    next_arrival: Ns,
    arrival_wake: bool,
    rng_backoff: ChaCha8Rng,
    rng_traffic: ChaCha8Rng,
    exchange: Option<Exchange>,
    on_air: Option<TxId>,
    stats: Stats,
    /// Consecutive DATA failures; each one lowers the next MCS by a step.
    fallback: usize,
}

struct Tx {
    id: TxId,
    src: usize,
    dst: Option<usize>,
    power: f64,
    meta: FrameMeta,
    nav_end: Ns,
    required: f64,
    start: Ns,
    /// SINR at the receiver from each instant on.
    epochs: Vec<(Ns, f64)>,
    /// Payload start and MPDU count of an A-MPDU.
    mpdus: Option<(Ns, u32)>,
    conflict: bool,
    /// APs that decoded the preamble.
    decoders: Vec<usize>,
}

struct Sim<'a> {
    dep: &'a Deployment,
    env: &'a RadioEnv,
    cfg: &'a SimConfig,
    now: Ns,
    horizon: Ns,
    warmup: Ns,
    seq: u64,
    heap: BinaryHeap<Reverse<(Ns, usize, u64, Ev)>>,
    aps: Vec<Ap>,
    /// Node id of STA k of BSS b.
    sta_node: Vec<Vec<usize>>,
    node_bss: Vec<usize>,
    /// On-air flag per STA node.
    sta_on_air: Vec<Option<TxId>>,
    gain: Vec<Vec<f64>>,
    on_air: Vec<Tx>,
    next_tx: TxId,
    trace: Vec<TraceRecord>,
    control_sinr: f64,
    backoff_max: Ns,
    sifs: Ns,
    difs: Ns,
    slot: Ns,
    exp: Option<Exp<f64>>,
}

pub fn run(
    dep: &Deployment,
    configs: &[SrConfig],
    env: &RadioEnv,
    cfg: &SimConfig,
) -> Result<SimOutput, SimError> {
    dep.validate()
        .map_err(|e| SimError::Deployment(e.to_string()))?;
    if configs.len() != dep.bsses.len() {
        return Err(SimError::Deployment(format!(
            "{} configs for {} BSSs",
            configs.len(),
            dep.bsses.len()
        )));
    }
    for c in configs {
        c.validate()?;
    }
    env.validate()?;
    if !(cfg.duration_s > 0.0) || !(cfg.warmup_s >= 0.0) || cfg.warmup_s >= cfg.duration_s {
        return Err(SimError::Params("need 0 <= warmup < duration".into()));
    }
    if cfg.n_agg_max == 0 {
        return Err(SimError::Params("n_agg_max must be at least 1".into()));
    }
    if cfg.buffer_capacity == 0 {
        return Err(SimError::Params("buffer capacity must be at least 1".into()));
    }
    let mut sim = Sim::new(dep, configs, env, cfg)?;
    sim.execute()?;
    Ok(sim.finish())
}

impl<'a> Sim<'a> {
    fn new(
        dep: &'a Deployment,
        configs: &'a [SrConfig],
        env: &'a RadioEnv,
        cfg: &'a SimConfig,
    ) -> Result<Self, SimError> {
        let n = dep.bsses.len();
        let mut nodes: Vec<Node> = (0..n).map(Node::Ap).collect();
        let mut sta_node = Vec::with_capacity(n);
        for (b, bss) in dep.bsses.iter().enumerate() {
            let ids = (0..bss.stas.len())
                .map(|k| {
                    nodes.push(Node::Sta(b, k));
                    nodes.len() - 1
                })
                .collect();
            sta_node.push(ids);
        }
        let mut gain = vec![vec![f64::NEG_INFINITY; nodes.len()]; nodes.len()];
        for (i, &a) in nodes.iter().enumerate() {
            for (j, &b) in nodes.iter().enumerate() {
                if i != j {
                    gain[i][j] = dep.rx_power(env, a, b, 0.0)?;
                }
            }
        }
        let exp = match cfg.traffic {
            TrafficModel::FullBuffer => None,
            TrafficModel::Poisson { load_bps } => {
                if !(load_bps > 0.0 && load_bps.is_finite()) {
                    return Err(SimError::Params(format!("load must be positive, got {load_bps}")));
                }
                let per_ns = load_bps / env.mac.l_d as f64 / 1e9;
                Some(Exp::new(per_ns).map_err(|e| SimError::Params(e.to_string()))?)
            }
        };
        let aps = (0..n)
            .map(|b| {
                let stream = |k: u64| {
                    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
                    r.set_stream(2 * b as u64 + k);
                    r
                };
                Ap {
                    cfg: configs[b].clone(),
                    ident: dep.bsses[b].identity(),
                    node: b,
                    sense: SensingState::default(),
                    sensed: Vec::new(),
                    phase: Phase::Idle,
                    remaining: 0,
                    counting_since: None,
                    resume_pending: false,
                    gen: 0,
                    xid: 0,
                    queue: VecDeque::new(),
                    next_arrival: 0,
                    arrival_wake: false,
                    rng_backoff: stream(0),
                    rng_traffic: stream(1),
                    exchange: None,
                    on_air: None,
                    stats: Stats::default(),
                    fallback: 0,
                }
            })
            .collect();
        let mac = &env.mac;
        let node_bss = nodes.iter().map(|n| n.bss()).collect();
        let n_nodes = nodes.len();
        Ok(Sim {
            dep,
            env,
            cfg,
            now: 0,
            horizon: s_to_ns(cfg.duration_s),
            warmup: s_to_ns(cfg.warmup_s),
            seq: 0,
            heap: BinaryHeap::new(),
            aps,
            sta_node,
            node_bss,
            sta_on_air: vec![None; n_nodes],
            gain,
            on_air: Vec::new(),
            next_tx: 0,
            trace: Vec::new(),
            control_sinr: env.mcs.lowest().min_sinr_db,
            backoff_max: us_to_ns(mac.cw as f64 * mac.t_e_us),
            sifs: us_to_ns(mac.t_sifs_us),
            difs: us_to_ns(mac.t_difs_us),
            slot: us_to_ns(mac.t_e_us),
            exp,
        })
    }

    fn push(&mut self, time: Ns, node: usize, ev: Ev) {
        self.seq += 1;
        self.heap.push(Reverse((time, node, self.seq, ev)));
    }

    fn log(&mut self, node: usize, event: &'static str, detail: impl FnOnce() -> String) {
        if self.cfg.trace {
            self.trace.push(TraceRecord {
                time: self.now,
                node,
                event,
                detail: detail(),
            });
        }
    }

    fn execute(&mut self) -> Result<(), SimError> {
        for (i, j) in self.dep.color_collisions() {
            log::warn!(
                "BSS {} and {} share color {}; their frames will be classified intra-BSS",
                self.dep.bsses[i].name,
                self.dep.bsses[j].name,
                self.dep.bsses[i].color
            );
            self.log(i, "color_collision", || format!("with={j}"));
        }
        for ap in 0..self.aps.len() {
            if self.exp.is_some() {
                let first = self.draw_interarrival(ap);
                self.aps[ap].next_arrival = first;
                self.aps[ap].arrival_wake = true;
                self.push(first, ap, Ev::Arrival { ap });
            } else {
                self.start_contention(ap, false);
            }
        }
        while let Some(Reverse((time, _, _, ev))) = self.heap.pop() {
            if time > self.horizon {
                break;
            }
            if time < self.now {
                return Err(SimError::Internal(format!(
                    "event at {time} ns scheduled before current time {}",
                    self.now
                )));
            }
            self.now = time;
            self.dispatch(ev)?;
        }
        self.now = self.horizon;
        Ok(())
    }

    fn dispatch(&mut self, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::TxEnd(id) => self.on_tx_end(id)?,
            Ev::Resume { ap, gen } => {
                if self.aps[ap].gen == gen && self.aps[ap].resume_pending {
                    self.aps[ap].resume_pending = false;
                    self.begin_countdown(ap);
                }
            }
            Ev::BackoffDone { ap, gen } => {
                if self.aps[ap].gen == gen && self.aps[ap].counting_since.is_some() {
                    self.stop_countdown(ap);
                    if self.aps[ap].remaining != 0 {
                        return Err(SimError::Internal("backoff expired with time left".into()));
                    }
                    self.access(ap)?;
                }
            }
            Ev::NavCheck { ap } => self.reevaluate(ap),
            Ev::Arrival { ap } => {
                self.aps[ap].arrival_wake = false;
                self.advance_arrivals(ap);
                if self.aps[ap].phase == Phase::Idle {
                    if self.aps[ap].queue.is_empty() {
                        self.schedule_wake(ap);
                    } else {
                        self.start_contention(ap, false);
                    }
                }
            }
            Ev::StaCts { ap, xid } => {
                if self.exchange_at(ap, xid, Stage::Rts) {
                    self.send_cts(ap);
                }
            }
            Ev::ApData { ap, xid } => {
                if self.exchange_at(ap, xid, Stage::Cts) {
                    self.send_data(ap);
                }
            }
            Ev::StaAck { ap, xid } => {
                if self.exchange_at(ap, xid, Stage::Data) {
                    self.send_ack(ap);
                }
            }
            Ev::Timeout { ap, xid } => {
                if self.aps[ap].exchange.as_ref().is_some_and(|x| x.xid == xid) {
                    self.fail_exchange(ap)?;
                }
            }
            Ev::ExchangeDone { ap, xid } => {
                if self.exchange_at(ap, xid, Stage::Wrapup) {
                    self.aps[ap].exchange = None;
                    self.aps[ap].phase = Phase::Idle;
                    self.after_exchange(ap, true);
                }
            }
        }
        Ok(())
    }

    fn exchange_at(&self, ap: usize, xid: u64, stage: Stage) -> bool {
        self.aps[ap]
            .exchange
            .as_ref()
            .is_some_and(|x| x.xid == xid && x.stage == stage)
    }

    // ---- traffic -------------------------------------------------------

    fn draw_interarrival(&mut self, ap: usize) -> Ns {
        let exp = self.exp.expect("Poisson traffic");
        let gap = exp.sample(&mut self.aps[ap].rng_traffic);
        (gap.ceil() as Ns).max(1)
    }

    fn advance_arrivals(&mut self, ap: usize) {
        if self.exp.is_none() {
            return;
        }
        let n_sta = self.dep.bsses[ap].stas.len();
        while self.aps[ap].next_arrival <= self.now {
            let t = self.aps[ap].next_arrival;
            let sta = if n_sta == 1 {
                0
            } else {
                self.aps[ap].rng_traffic.random_range(0..n_sta)
            };
            let a = &mut self.aps[ap];
            a.stats.total.generated += 1;
            if a.queue.len() < self.cfg.buffer_capacity {
                a.queue.push_back(Packet { arrival: t, sta });
            } else {
                a.stats.total.dropped += 1;
                if t >= self.warmup {
                    a.stats.drops += 1;
                }
            }
            let gap = self.draw_interarrival(ap);
            self.aps[ap].next_arrival = t + gap;
        }
    }

    fn schedule_wake(&mut self, ap: usize) {
        if self.exp.is_some() && !self.aps[ap].arrival_wake {
            self.aps[ap].arrival_wake = true;
            let t = self.aps[ap].next_arrival;
            self.push(t, ap, Ev::Arrival { ap });
        }
    }

    fn has_traffic(&self, ap: usize) -> bool {
        self.exp.is_none() || !self.aps[ap].queue.is_empty()
    }

    // ---- contention ----------------------------------------------------

    fn medium_idle(&self, ap: usize) -> bool {
        let a = &self.aps[ap];
        a.sensed.is_empty() && !a.sense.nav_active(self.now)
    }

    /// Draws a fresh backoff. `immediate` skips the DIFS wait when the
    /// medium is idle (it is already part of a successful exchange).
    fn start_contention(&mut self, ap: usize, immediate: bool) {
        let max = self.backoff_max;
        let a = &mut self.aps[ap];
        a.phase = Phase::Contend;
        a.remaining = a.rng_backoff.random_range(0..=max);
        a.counting_since = None;
        a.resume_pending = false;
        a.gen += 1;
        let remaining = a.remaining;
        self.log(self.aps[ap].node, "backoff_draw", || format!("slots_us={:.3}", ns_to_us(remaining)));
        if immediate && self.medium_idle(ap) {
            self.begin_countdown(ap);
        } else {
            self.reevaluate(ap);
        }
    }

    fn begin_countdown(&mut self, ap: usize) {
        let now = self.now;
        let a = &mut self.aps[ap];
        a.counting_since = Some(now);
        a.gen += 1;
        let (gen, at) = (a.gen, now + a.remaining);
        self.push(at, ap, Ev::BackoffDone { ap, gen });
    }

    fn stop_countdown(&mut self, ap: usize) {
        let now = self.now;
        let a = &mut self.aps[ap];
        if let Some(since) = a.counting_since.take() {
            let spent = now - since;
            a.remaining = a.remaining.saturating_sub(spent);
            a.gen += 1;
            if spent > 0 {
                let node = a.node;
                self.log(node, "backoff_decrement", || {
                    format!("from_us={:.3};to_us={:.3}", ns_to_us(since), ns_to_us(now))
                });
            }
        }
    }

    /// Freeze on busy, arm a DIFS wait on idle.
    fn reevaluate(&mut self, ap: usize) {
        if self.aps[ap].phase != Phase::Contend {
            return;
        }
        if self.medium_idle(ap) {
            let a = &self.aps[ap];
            if a.counting_since.is_none() && !a.resume_pending {
                let a = &mut self.aps[ap];
                a.resume_pending = true;
                a.gen += 1;
                let gen = a.gen;
                let at = self.now + self.difs;
                self.push(at, ap, Ev::Resume { ap, gen });
            }
        } else {
            if self.aps[ap].counting_since.is_some() {
                self.stop_countdown(ap);
            }
            let a = &mut self.aps[ap];
            if a.resume_pending {
                a.resume_pending = false;
                a.gen += 1;
            }
            let nav_end = a.sense.nav_intra.max(a.sense.nav_inter);
            if a.sensed.is_empty() && nav_end > self.now {
                self.push(nav_end, ap, Ev::NavCheck { ap });
            }
        }
    }

    // ---- exchange ------------------------------------------------------

    fn access(&mut self, ap: usize) -> Result<(), SimError> {
        self.advance_arrivals(ap);
        if !self.has_traffic(ap) {
            self.aps[ap].phase = Phase::Idle;
            self.schedule_wake(ap);
            return Ok(());
        }
        let now = self.now;
        let power = {
            let a = &mut self.aps[ap];
            a.sense.transmit_power(&a.cfg, now)
        };
        let sta = self.aps[ap].queue.front().map_or(0, |p| p.sta);
        let sta_node = self.sta_node[ap][sta];
        // Ongoing exchanges of other BSSs count with their DATA power, even
        // while only a control frame of theirs is on the air.
        let mut interference: Vec<f64> = Vec::new();
        for (b, other) in self.aps.iter().enumerate() {
            if b == ap {
                continue;
            }
            match &other.exchange {
                Some(x) if x.stage != Stage::Wrapup => interference.push(x.power + self.gain[b][sta_node]),
                _ => interference.extend(
                    self.on_air
                        .iter()
                        .filter(|t| self.node_bss[t.src] == b)
                        .map(|t| t.power + self.gain[t.src][sta_node]),
                ),
            }
        }
        let est = propagation::sinr(power + self.gain[ap][sta_node], &interference, self.env.phy.noise_dbm);
        self.aps[ap].stats.attempts += 1;
        let table = self.env.mcs.entries();
        let chosen = table
            .iter()
            .rposition(|m| m.min_sinr_db <= est)
            .map(|i| table[i.saturating_sub(self.aps[ap].fallback)]);
        let Some(mcs) = chosen else {
            self.log(ap, "mcs_infeasible", || format!("power={power:.2};sinr={est:.2}"));
            if now >= self.warmup {
                self.aps[ap].stats.collisions += 1;
            }
            self.start_contention(ap, false);
            return Ok(());
        };
        let queued = match self.exp {
            None => self.cfg.n_agg_max,
            Some(_) => self.aps[ap]
                .queue
                .iter()
                .take_while(|p| p.sta == sta)
                .count()
                .min(self.cfg.n_agg_max as usize) as u32,
        };
        let d = propagation::frame_durations(queued.max(1), &mcs, &self.env.phy, &self.env.mac)?;
        let t = Times {
            rts: s_to_ns(d.t_rts),
            cts: s_to_ns(d.t_cts),
            data: s_to_ns(d.t_data),
            ack: s_to_ns(d.t_ack_or_back),
        };
        let a = &mut self.aps[ap];
        a.xid += 1;
        a.phase = Phase::Exchange;
        a.exchange = Some(Exchange {
            xid: a.xid,
            start: now,
            sta,
            n_agg: d.n_agg,
            mcs,
            power,
            t,
            stage: Stage::Rts,
            acked: 0,
        });
        let nav = self.sifs + t.cts + self.sifs + t.data + self.sifs + t.ack;
        let control = self.control_sinr;
        self.log(ap, "access", || {
            format!("power={power:.2};mcs={};n_agg={};sinr_est={est:.2}", mcs.index, d.n_agg)
        });
        self.transmit(ap, Some(sta_node), FrameKind::Rts, power, t.rts, nav, control);
        Ok(())
    }

    fn send_cts(&mut self, ap: usize) {
        let x = self.aps[ap].exchange.as_mut().expect("exchange");
        x.stage = Stage::Cts;
        let (sta, t) = (x.sta, x.t);
        let src = self.sta_node[ap][sta];
        let nav = self.sifs + t.data + self.sifs + t.ack;
        let power = self.aps[ap].cfg.tx_pwr;
        let control = self.control_sinr;
        self.transmit(src, Some(ap), FrameKind::Cts, power, t.cts, nav, control);
    }

    fn send_data(&mut self, ap: usize) {
        let x = self.aps[ap].exchange.as_mut().expect("exchange");
        x.stage = Stage::Data;
        let (sta, t, power, req) = (x.sta, x.t, x.power, x.mcs.min_sinr_db);
        let dst = self.sta_node[ap][sta];
        let nav = self.sifs + t.ack;
        self.transmit(ap, Some(dst), FrameKind::Data, power, t.data, nav, req);
    }

    fn send_ack(&mut self, ap: usize) {
        let x = self.aps[ap].exchange.as_mut().expect("exchange");
        x.stage = Stage::Ack;
        let (sta, t, n) = (x.sta, x.t, x.n_agg);
        let src = self.sta_node[ap][sta];
        let kind = if n == 1 { FrameKind::Ack } else { FrameKind::BlockAck };
        let power = self.aps[ap].cfg.tx_pwr;
        let control = self.control_sinr;
        self.transmit(src, Some(ap), kind, power, t.ack, 0, control);
    }

    fn is_ap(&self, node: usize) -> bool {
        node < self.aps.len()
    }

    fn node_on_air(&self, node: usize) -> bool {
        if self.is_ap(node) {
            self.aps[node].on_air.is_some()
        } else {
            self.sta_on_air[node].is_some()
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn transmit(
        &mut self,
        src: usize,
        dst: Option<usize>,
        kind: FrameKind,
        power: f64,
        airtime: Ns,
        duration: Ns,
        required: f64,
    ) {
        let id = self.next_tx;
        self.next_tx += 1;
        let bss = self.node_bss[src];
        let end = self.now + airtime;
        let meta = FrameMeta::he(self.dep.bsses[bss].color, bss, kind, duration as f64 * 1e-9);
        let conflict = dst.is_some_and(|d| self.node_on_air(d));
        if self.is_ap(src) {
            self.aps[src].on_air = Some(id);
        } else {
            self.sta_on_air[src] = Some(id);
        }
        // A node that starts sending breaks any reception addressed to it.
        for t in self.on_air.iter_mut() {
            if t.dst == Some(src) {
                t.conflict = true;
            }
        }
        self.on_air.push(Tx {
            id,
            src,
            dst,
            power,
            meta,
            nav_end: end + duration,
            required: required + self.env.phy.capture_margin_db,
            start: self.now,
            epochs: Vec::new(),
            mpdus: None,
            conflict,
            decoders: Vec::new(),
        });
        if kind == FrameKind::Data {
            let x = self.aps[src].exchange.as_ref().expect("exchange");
            let header = us_to_ns(self.env.mac.t_phy_leg_us + self.env.mac.t_he_su_us);
            let tx = self.on_air.last_mut().expect("pushed");
            tx.mpdus = Some((self.now + header, x.n_agg));
        }
        self.refresh_sinr();
        self.log(src, "tx_start", || {
            format!(
                "kind={};dst={};power={power:.2};end_us={:.3}",
                kind.label(),
                dst.map_or("all".to_string(), |d| d.to_string()),
                ns_to_us(end)
            )
        });
        self.push(end, src, Ev::TxEnd(id));
        for ap in 0..self.aps.len() {
            if ap != src {
                self.detect(ap, id, true);
            }
        }
    }

    fn interference_at(&self, rx: usize, except: TxId) -> Vec<f64> {
        self.on_air
            .iter()
            .filter(|t| t.id != except && t.src != rx)
            .map(|t| t.power + self.gain[t.src][rx])
            .collect()
    }

    fn refresh_sinr(&mut self) {
        let noise = self.env.phy.noise_dbm;
        let updates: Vec<f64> = self
            .on_air
            .iter()
            .map(|t| match t.dst {
                Some(d) => propagation::sinr(t.power + self.gain[t.src][d], &self.interference_at(d, t.id), noise),
                None => f64::INFINITY,
            })
            .collect();
        let now = self.now;
        for (t, s) in self.on_air.iter_mut().zip(updates) {
            match t.epochs.last_mut() {
                Some(last) if last.0 == now => last.1 = s,
                Some(last) if last.1 == s => {}
                _ => t.epochs.push((now, s)),
            }
        }
    }

    /// `preamble` is false when the node only starts listening mid-frame:
    /// the frame still counts for carrier sense but its duration is unknown.
    fn detect(&mut self, ap: usize, id: TxId, preamble: bool) {
        if self.aps[ap].on_air.is_some() {
            return;
        }
        let idx = self.on_air.iter().position(|t| t.id == id).expect("on air");
        let (src, power, dst, nav_end, meta) = {
            let t = &self.on_air[idx];
            (t.src, t.power, t.dst, t.nav_end, t.meta.clone())
        };
        let rssi = power + self.gain[src][ap];
        let sinr = propagation::sinr(rssi, &self.interference_at(ap, id), self.env.phy.noise_dbm);
        let decodable = preamble && sinr >= self.control_sinr;
        let a = &mut self.aps[ap];
        let detection = on_frame_detected(
            &a.cfg,
            &a.ident,
            &mut a.sense,
            &meta,
            rssi,
            decodable,
            dst == Some(ap),
            nav_end,
        )
        .expect("HE frames always carry a color");
        match detection {
            Detection::Undetected => {}
            Detection::Ignored {
                class,
                threshold,
                restriction,
            } => {
                if decodable {
                    self.on_air[idx].decoders.push(ap);
                }
                self.log(ap, "ignore", || {
                    format!(
                        "kind={};class={};rssi={rssi:.2};threshold={threshold:.2};restriction={}",
                        meta.kind.label(),
                        class.label(),
                        restriction.map_or("none".to_string(), |r| format!("{r:.2}"))
                    )
                });
            }
            Detection::Busy { class, nav } => {
                self.aps[ap].sensed.push(id);
                if decodable {
                    self.on_air[idx].decoders.push(ap);
                }
                if let Some(kind) = nav {
                    let until = match kind {
                        NavKind::Intra => self.aps[ap].sense.nav_intra,
                        NavKind::Inter => self.aps[ap].sense.nav_inter,
                    };
                    self.log(ap, "nav_set", || {
                        format!(
                            "kind={};class={};src={src};until_us={:.3}",
                            kind.label(),
                            class.label(),
                            ns_to_us(until)
                        )
                    });
                }
                self.reevaluate(ap);
            }
        }
    }

    fn on_tx_end(&mut self, id: TxId) -> Result<(), SimError> {
        let idx = self
            .on_air
            .iter()
            .position(|t| t.id == id)
            .ok_or_else(|| SimError::Internal(format!("unknown transmission {id}")))?;
        let tx = self.on_air.swap_remove(idx);
        if self.is_ap(tx.src) {
            self.aps[tx.src].on_air = None;
            let ongoing: Vec<TxId> = self.on_air.iter().map(|t| t.id).collect();
            for other in ongoing {
                self.detect(tx.src, other, false);
            }
        } else {
            self.sta_on_air[tx.src] = None;
        }
        self.refresh_sinr();
        let now = self.now;
        let worst = min_sinr_over(&tx.epochs, tx.start, now);
        let ok = match tx.mpdus {
            None => !tx.conflict && worst >= tx.required,
            Some((payload, n)) => {
                let header_ok = min_sinr_over(&tx.epochs, tx.start, payload) >= self.control_sinr;
                let received = if tx.conflict || !header_ok {
                    0
                } else {
                    let span = (now - payload) / n as u64;
                    (0..n as u64)
                        .filter(|&k| {
                            let a = payload + k * span;
                            let b = if k + 1 == n as u64 { now } else { a + span };
                            min_sinr_over(&tx.epochs, a, b) >= tx.required
                        })
                        .count() as u32
                };
                let ap = tx.src;
                if let Some(x) = self.aps[ap].exchange.as_mut() {
                    x.acked = received;
                }
                received > 0
            }
        };
        let acked = self.aps[self.node_bss[tx.src]].exchange.as_ref().map_or(0, |x| x.acked);
        self.log(tx.src, "tx_end", || match tx.mpdus {
            Some((_, n)) => {
                format!("kind={};ok={ok};min_sinr={worst:.2};mpdus={acked}/{n}", tx.meta.kind.label())
            }
            None => format!("kind={};ok={ok};min_sinr={worst:.2}", tx.meta.kind.label()),
        });
        if tx.meta.kind == FrameKind::CfEnd {
            for &ap in &tx.decoders {
                let a = &mut self.aps[ap];
                let before = (a.sense.nav_intra, a.sense.nav_inter);
                let cleared = on_cf_end(&a.cfg, &a.ident, &mut a.sense, &tx.meta, self.now)?;
                let after = (a.sense.nav_intra, a.sense.nav_inter);
                let class = srcore::classify_frame(&a.cfg, &a.ident, &tx.meta)?;
                self.log(ap, "nav_reset", || {
                    format!(
                        "class={};cleared={};nav_intra_us={:.3}->{:.3};nav_inter_us={:.3}->{:.3}",
                        class.label(),
                        cleared.label(),
                        ns_to_us(before.0),
                        ns_to_us(after.0),
                        ns_to_us(before.1),
                        ns_to_us(after.1)
                    )
                });
            }
        }
        for ap in 0..self.aps.len() {
            if let Some(p) = self.aps[ap].sensed.iter().position(|&s| s == id) {
                self.aps[ap].sensed.swap_remove(p);
            }
            self.reevaluate(ap);
        }
        self.protocol_step(&tx, ok)
    }

    fn protocol_step(&mut self, tx: &Tx, ok: bool) -> Result<(), SimError> {
        let ap = self.node_bss[tx.src];
        let Some(x) = self.aps[ap].exchange.clone() else {
            if tx.meta.kind == FrameKind::CfEnd {
                self.after_exchange(ap, false);
            }
            return Ok(());
        };
        let now = self.now;
        match (tx.meta.kind, x.stage) {
            (FrameKind::Rts, Stage::Rts) => {
                if ok {
                    self.push(now + self.sifs, self.sta_node[ap][x.sta], Ev::StaCts { ap, xid: x.xid });
                } else {
                    self.push(now + self.sifs + x.t.cts, ap, Ev::Timeout { ap, xid: x.xid });
                }
            }
            (FrameKind::Cts, Stage::Cts) => {
                if ok {
                    self.push(now + self.sifs, ap, Ev::ApData { ap, xid: x.xid });
                } else {
                    self.fail_exchange(ap)?;
                }
            }
            (FrameKind::Data, Stage::Data) => {
                if ok {
                    self.push(now + self.sifs, self.sta_node[ap][x.sta], Ev::StaAck { ap, xid: x.xid });
                } else {
                    self.push(now + self.sifs + x.t.ack, ap, Ev::Timeout { ap, xid: x.xid });
                }
            }
            (FrameKind::Ack | FrameKind::BlockAck, Stage::Ack) => {
                if ok {
                    self.deliver(ap, &x);
                    let x = self.aps[ap].exchange.as_mut().expect("exchange");
                    x.stage = Stage::Wrapup;
                    let xid = x.xid;
                    let at = now + self.difs + self.slot;
                    self.push(at, ap, Ev::ExchangeDone { ap, xid });
                } else {
                    self.fail_exchange(ap)?;
                }
            }
            _ => {
                return Err(SimError::Internal(format!(
                    "frame {} ended in stage {:?}",
                    tx.meta.kind.label(),
                    x.stage
                )))
            }
        }
        Ok(())
    }

    fn account_airtime(&mut self, ap: usize, from: Ns, to: Ns) {
        let lo = from.max(self.warmup);
        let hi = to.min(self.horizon);
        if hi > lo {
            self.aps[ap].stats.airtime += hi - lo;
        }
    }

    fn deliver(&mut self, ap: usize, x: &Exchange) {
        self.advance_arrivals(ap);
        let now = self.now;
        self.account_airtime(ap, x.start, now);
        let l_d = self.env.mac.l_d as u64;
        let measured = now >= self.warmup;
        let mut delivered = 0u64;
        for _ in 0..x.acked {
            let arrival = match self.exp {
                None => x.start,
                Some(_) => match self.aps[ap].queue.front() {
                    Some(p) if p.sta == x.sta => self.aps[ap].queue.pop_front().expect("front").arrival,
                    _ => break,
                },
            };
            delivered += 1;
            let s = &mut self.aps[ap].stats;
            if self.exp.is_none() {
                s.total.generated += 1;
            }
            s.total.delivered += 1;
            if measured {
                s.delivered_bits += l_d;
                s.delay_sum += now - arrival;
                s.delay_n += 1;
            }
        }
        self.aps[ap].fallback = 0;
        self.log(ap, "delivered", || {
            format!("packets={delivered};offered={};mcs={}", x.n_agg, x.mcs.index)
        });
    }

    fn fail_exchange(&mut self, ap: usize) -> Result<(), SimError> {
        let x = self.aps[ap]
            .exchange
            .take()
            .ok_or_else(|| SimError::Internal("timeout without exchange".into()))?;
        let now = self.now;
        self.account_airtime(ap, x.start, now);
        if now >= self.warmup {
            self.aps[ap].stats.collisions += 1;
        }
        if x.stage == Stage::Data {
            self.aps[ap].fallback += 1;
        }
        self.log(ap, "timeout", || format!("stage={:?}", x.stage));
        self.aps[ap].phase = Phase::Idle;
        let before_data = matches!(x.stage, Stage::Rts | Stage::Cts);
        if self.cfg.cf_end_on_timeout && before_data && self.aps[ap].on_air.is_none() {
            let rts = x.t.rts;
            self.transmit(ap, None, FrameKind::CfEnd, x.power, rts, 0, f64::NEG_INFINITY);
            return Ok(());
        }
        self.after_exchange(ap, false);
        Ok(())
    }

    fn after_exchange(&mut self, ap: usize, success: bool) {
        self.advance_arrivals(ap);
        if self.has_traffic(ap) {
            self.start_contention(ap, success);
        } else {
            self.aps[ap].phase = Phase::Idle;
            self.schedule_wake(ap);
        }
    }

    fn finish(mut self) -> SimOutput {
        let window = self.horizon - self.warmup;
        for ap in 0..self.aps.len() {
            self.advance_arrivals(ap);
            if let Some(x) = self.aps[ap].exchange.clone() {
                if x.stage != Stage::Wrapup {
                    self.account_airtime(ap, x.start, self.horizon);
                }
            }
        }
        let window_s = window as f64 * 1e-9;
        let per_bss = self
            .aps
            .iter()
            .zip(&self.dep.bsses)
            .map(|(a, bss)| {
                let s = &a.stats;
                BssMetrics {
                    throughput_bps: s.delivered_bits as f64 / window_s,
                    occupancy: (s.airtime as f64 / window as f64).min(1.0),
                    mean_delay_s: (s.delay_n > 0).then(|| s.delay_sum as f64 * 1e-9 / s.delay_n as f64),
                    drops: s.drops,
                    collisions: s.collisions,
                    delivered_packets: s.delay_n,
                    attempts: s.attempts,
                    sr_enabled: bss.sr_enabled,
                }
            })
            .collect();
        let conservation = self
            .aps
            .iter()
            .map(|a| {
                let mut c = a.stats.total.clone();
                c.queued = a.queue.len() as u64;
                c
            })
            .collect();
        SimOutput {
            report: MetricsReport {
                window_s,
                per_bss,
                conservation,
            },
            trace: self.trace,
        }
    }
}

/// Lowest SINR over `[from, to)` given `(instant, sinr)` change points.
fn min_sinr_over(epochs: &[(Ns, f64)], from: Ns, to: Ns) -> f64 {
    let mut worst = f64::INFINITY;
    for (i, &(t, s)) in epochs.iter().enumerate() {
        let until = epochs.get(i + 1).map_or(Ns::MAX, |e| e.0);
        if t < to.max(from + 1) && until > from {
            worst = worst.min(s);
        }
    }
    worst
}

/// Findings of a trace audit.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub decrements: usize,
    pub nav_sets: usize,
    pub cf_end_resets: usize,
    pub inter_cf_end_resets: usize,
    pub violations: Vec<String>,
}

fn parse_kv(detail: &str) -> Vec<(&str, &str)> {
    detail
        .split(';')
        .filter_map(|kv| kv.split_once('='))
        .collect()
}

fn parse_us(v: &str) -> Option<Ns> {
    v.parse::<f64>().ok().map(us_to_ns)
}

/// Checks a `time_us,node,event,detail` trace for the two NAV rules:
/// no backoff countdown overlaps an active NAV, and an inter-BSS CF-End
/// only ever clears the inter-BSS NAV.
pub fn audit_trace(text: &str) -> AuditReport {
    #[derive(Default)]
    struct NodeNav {
        intra: Vec<(Ns, Ns)>,
        inter: Vec<(Ns, Ns)>,
        decrements: Vec<(Ns, Ns, usize)>,
    }
    let mut report = AuditReport::default();
    let mut nodes: std::collections::BTreeMap<usize, NodeNav> = Default::default();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.starts_with("time_us") {
            continue;
        }
        let mut parts = line.splitn(4, ',');
        let (Some(t), Some(node), Some(event), detail) =
            (parts.next(), parts.next(), parts.next(), parts.next().unwrap_or(""))
        else {
            report.violations.push(format!("line {}: malformed", lineno + 1));
            continue;
        };
        let (Some(now), Ok(node)) = (parse_us(t), node.parse::<usize>()) else {
            report.violations.push(format!("line {}: malformed", lineno + 1));
            continue;
        };
        let kv = parse_kv(detail);
        let get = |k: &str| kv.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
        let st = nodes.entry(node).or_default();
        match event {
            "nav_set" => {
                report.nav_sets += 1;
                let until = get("until_us").and_then(parse_us);
                let list = match get("kind") {
                    Some("intra") => &mut st.intra,
                    Some("inter") => &mut st.inter,
                    _ => {
                        report.violations.push(format!("line {}: nav_set without kind", lineno + 1));
                        continue;
                    }
                };
                match until {
                    Some(u) if u > now => list.push((now, u)),
                    Some(_) => {}
                    None => report.violations.push(format!("line {}: nav_set without until", lineno + 1)),
                }
            }
            "nav_reset" => {
                report.cf_end_resets += 1;
                let class = get("class").unwrap_or("");
                let cleared = get("cleared").unwrap_or("");
                let span = |k: &str| {
                    get(k).and_then(|v| v.split_once("->")).and_then(|(a, b)| Some((parse_us(a)?, parse_us(b)?)))
                };
                let (Some(intra), Some(inter)) = (span("nav_intra_us"), span("nav_inter_us")) else {
                    report.violations.push(format!("line {}: nav_reset without NAV values", lineno + 1));
                    continue;
                };
                let inter_class = class.starts_with("inter");
                if inter_class {
                    report.inter_cf_end_resets += 1;
                    if cleared != "inter" || intra.0 != intra.1 || inter.1 > now {
                        report.violations.push(format!(
                            "line {}: inter-BSS CF-End touched the intra-BSS NAV or left the inter-BSS NAV set",
                            lineno + 1
                        ));
                    }
                } else if cleared != "intra" || inter.0 != inter.1 {
                    report.violations.push(format!("line {}: intra-BSS CF-End touched the inter-BSS NAV", lineno + 1));
                }
                let list = if inter_class { &mut st.inter } else { &mut st.intra };
                for iv in list.iter_mut() {
                    if iv.1 > now {
                        iv.1 = iv.1.min(now.max(iv.0));
                    }
                }
            }
            "backoff_decrement" => {
                report.decrements += 1;
                match (get("from_us").and_then(parse_us), get("to_us").and_then(parse_us)) {
                    (Some(a), Some(b)) => st.decrements.push((a, b, lineno + 1)),
                    _ => report.violations.push(format!("line {}: decrement without interval", lineno + 1)),
                }
            }
            _ => {}
        }
    }
    for (node, st) in &nodes {
        for &(a, b, line) in &st.decrements {
            for &(s, e) in st.intra.iter().chain(&st.inter) {
                if a.max(s) < b.min(e) {
                    report.violations.push(format!(
                        "line {line}: node {node} counted down over [{a}, {b}) ns while a NAV was set over [{s}, {e}) ns"
                    ));
                }
            }
        }
    }
    report
}

/// Renders a metrics report as a small text table, mostly for logs.
pub fn summarize(report: &MetricsReport, dep: &Deployment) -> String {
    let mut out = String::new();
    for (b, m) in report.per_bss.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}: {:.2} Mbps, occupancy {:.3}, delay {}, drops {}, failures {}",
            dep.bsses[b].name,
            m.throughput_bps / 1e6,
            m.occupancy,
            m.mean_delay_s.map_or("-".into(), |d| format!("{:.2} ms", d * 1e3)),
            m.drops,
            m.collisions
        );
    }
    out
}

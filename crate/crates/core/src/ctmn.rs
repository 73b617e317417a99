//! Continuous-time Markov network model of overlapping BSSs.
//!
//! A state is the set of BSSs currently transmitting, each tagged with the
//! sensitivity mode it used to gain access, its (possibly restricted)
//! transmit power and its MCS. Activations happen at the backoff rate λ,
//! departures at 1/T_succ of the departing BSS.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::propagation::{self, Mcs, PropagationError, RadioEnv};
use crate::scenario::{Deployment, Node};
use crate::srcore::{self, FrameClass, FrameKind, FrameMeta, SrConfig, SrError};

#[derive(Debug, Error)]
pub enum CtmnError {
    #[error("state space exceeds the cap of {cap} states")]
    TooManyStates { cap: usize },
    #[error("non-finite service time for BSS {bss}")]
    ServiceTime { bss: usize },
    #[error("backoff rate must be positive, got {0}")]
    Lambda(f64),
    #[error("singular generator: {0}")]
    Singular(String),
    #[error("BSS {0} must have exactly one STA for the CTMN model")]
    Stations(usize),
    #[error("{configs} configs for {bsses} BSSs")]
    ConfigCount { configs: usize, bsses: usize },
    #[error(transparent)]
    Sr(#[from] SrError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BssMode {
    Default,
    SrNonSrg,
    SrSrg,
}

impl BssMode {
    fn suffix(self) -> &'static str {
        match self {
            BssMode::Default => "",
            BssMode::SrNonSrg => "_SR",
            BssMode::SrSrg => "_SRG",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveBss {
    pub bss: usize,
    pub mode: BssMode,
    pub tx_pwr: f64,
    pub mcs: Mcs,
    pub n_agg: u32,
    /// Successful exchange duration under `mcs`, seconds.
    pub service_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CtmnState {
    /// Sorted by BSS index.
    pub active: Vec<ActiveBss>,
}

impl CtmnState {
    pub fn empty() -> Self {
        CtmnState { active: Vec::new() }
    }

    pub fn contains(&self, bss: usize) -> bool {
        self.active.iter().any(|a| a.bss == bss)
    }

    pub fn get(&self, bss: usize) -> Option<&ActiveBss> {
        self.active.iter().find(|a| a.bss == bss)
    }

    /// `A_SR B` style label.
    pub fn label(&self, dep: &Deployment) -> String {
        if self.active.is_empty() {
            return "empty".to_string();
        }
        self.active
            .iter()
            .map(|a| format!("{}{}", dep.bsses[a.bss].name, a.mode.suffix()))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn key(&self) -> Vec<(usize, BssMode, i64, u8)> {
        self.active
            .iter()
            .map(|a| (a.bss, a.mode, (a.tx_pwr * 1e6).round() as i64, a.mcs.index))
            .collect()
    }

    fn with(&self, a: ActiveBss) -> CtmnState {
        let mut active = self.active.clone();
        active.push(a);
        active.sort_by_key(|x| x.bss);
        CtmnState { active }
    }

    fn without(&self, bss: usize) -> CtmnState {
        CtmnState {
            active: self.active.iter().filter(|a| a.bss != bss).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    Activation,
    Departure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub bss: usize,
    pub kind: EdgeKind,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CtmnGraph {
    pub states: Vec<CtmnState>,
    pub edges: Vec<Edge>,
    pub reachable: Vec<bool>,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtmnOptions {
    /// Channel access rate, 1/s.
    pub lambda: f64,
    pub n_agg_max: u32,
    pub state_cap: usize,
}

impl CtmnOptions {
    pub fn from_env(env: &RadioEnv) -> Self {
        CtmnOptions {
            lambda: 1.0 / env.mac.mean_backoff_s(),
            n_agg_max: env.mac.n_agg_max,
            state_cap: 2000,
        }
    }
}

/// Link budgets between every AP and every AP / first STA.
struct Links<'a> {
    dep: &'a Deployment,
    configs: &'a [SrConfig],
    env: &'a RadioEnv,
    opts: CtmnOptions,
    ap_ap: Vec<Vec<f64>>,
    ap_sta: Vec<Vec<f64>>,
}

impl<'a> Links<'a> {
    fn new(
        dep: &'a Deployment,
        configs: &'a [SrConfig],
        env: &'a RadioEnv,
        opts: CtmnOptions,
    ) -> Result<Self, CtmnError> {
        let n = dep.bsses.len();
        if configs.len() != n {
            return Err(CtmnError::ConfigCount {
                configs: configs.len(),
                bsses: n,
            });
        }
        if let Some(b) = dep.bsses.iter().position(|b| b.stas.len() != 1) {
            return Err(CtmnError::Stations(b));
        }
        // Gains at 0 dBm.
        let mut ap_ap = vec![vec![f64::NEG_INFINITY; n]; n];
        let mut ap_sta = vec![vec![f64::NEG_INFINITY; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    ap_ap[i][j] = dep.rx_power(env, Node::Ap(i), Node::Ap(j), 0.0)?;
                }
                ap_sta[i][j] = dep.rx_power(env, Node::Ap(i), Node::Sta(j, 0), 0.0)?;
            }
        }
        Ok(Links {
            dep,
            configs,
            env,
            opts,
            ap_ap,
            ap_sta,
        })
    }

    fn cochannel(&self, a: usize, b: usize) -> bool {
        self.dep.bsses[a].channel == self.dep.bsses[b].channel
    }

    fn sinr_at_sta(&self, b: usize, tx_pwr: f64, others: &[ActiveBss]) -> f64 {
        let interference: Vec<f64> = others
            .iter()
            .filter(|o| o.bss != b && self.cochannel(o.bss, b))
            .map(|o| o.tx_pwr + self.ap_sta[o.bss][b])
            .collect();
        propagation::sinr(tx_pwr + self.ap_sta[b][b], &interference, self.env.phy.noise_dbm)
    }

    fn link(&self, b: usize, mode: BssMode, tx_pwr: f64, others: &[ActiveBss]) -> Result<Option<ActiveBss>, CtmnError> {
        let sinr = self.sinr_at_sta(b, tx_pwr, others);
        let Some(mcs) = self.env.mcs.select(sinr).copied() else {
            return Ok(None);
        };
        let d = propagation::frame_durations(self.opts.n_agg_max, &mcs, &self.env.phy, &self.env.mac)?;
        if !d.t_exchange_success.is_finite() || d.t_exchange_success <= 0.0 {
            return Err(CtmnError::ServiceTime { bss: b });
        }
        Ok(Some(ActiveBss {
            bss: b,
            mode,
            tx_pwr,
            mcs,
            n_agg: d.n_agg,
            service_time: d.t_exchange_success,
        }))
    }

    /// How BSS `b` may start transmitting while `state` is on the air.
    fn activation(&self, state: &CtmnState, b: usize) -> Result<Option<ActiveBss>, CtmnError> {
        let cfg = &self.configs[b];
        let me = self.dep.bsses[b].identity();
        let mut restrictions = Vec::new();
        let mut detected = false;
        let mut all_srg = true;
        for a in &state.active {
            if !self.cochannel(a.bss, b) {
                continue;
            }
            let rssi = a.tx_pwr + self.ap_ap[a.bss][b];
            if rssi < cfg.cca_cs {
                continue;
            }
            detected = true;
            let frame = FrameMeta::he(self.dep.bsses[a.bss].color, a.bss, FrameKind::Rts, 0.0);
            let class = srcore::classify_frame(cfg, &me, &frame)?;
            let threshold = srcore::effective_sensitivity(cfg, class);
            if class == FrameClass::IntraBss || rssi >= threshold {
                return Ok(None);
            }
            all_srg &= class == FrameClass::InterBssSrg;
            restrictions.push(srcore::tx_power_restriction(threshold, cfg.tx_pwr_ref)?);
        }
        let (mode, tx_pwr) = if detected {
            let mode = if all_srg { BssMode::SrSrg } else { BssMode::SrNonSrg };
            let cap = srcore::combine_power_restrictions(restrictions);
            (mode, cap.map_or(cfg.tx_pwr, |c| c.min(cfg.tx_pwr)))
        } else {
            (BssMode::Default, cfg.tx_pwr)
        };
        self.link(b, mode, tx_pwr, &state.active)
    }

    fn successful(&self, state: &CtmnState, a: &ActiveBss) -> bool {
        self.sinr_at_sta(a.bss, a.tx_pwr, &state.active) >= a.mcs.min_sinr_db
    }
}

struct Builder {
    states: Vec<CtmnState>,
    index: HashMap<Vec<(usize, BssMode, i64, u8)>, usize>,
    cap: usize,
}

impl Builder {
    fn intern(&mut self, s: CtmnState) -> Result<(usize, bool), CtmnError> {
        let key = s.key();
        if let Some(&i) = self.index.get(&key) {
            return Ok((i, false));
        }
        if self.states.len() >= self.cap {
            return Err(CtmnError::TooManyStates { cap: self.cap });
        }
        let i = self.states.len();
        self.states.push(s);
        self.index.insert(key, i);
        Ok((i, true))
    }
}

/// Breadth-first expansion from the empty state.
///
/// Default-mode combinations that the expansion never reaches are appended
/// and flagged unreachable so that reports can show them.
pub fn enumerate_states(
    dep: &Deployment,
    configs: &[SrConfig],
    env: &RadioEnv,
    opts: CtmnOptions,
) -> Result<CtmnGraph, CtmnError> {
    if !(opts.lambda > 0.0 && opts.lambda.is_finite()) {
        return Err(CtmnError::Lambda(opts.lambda));
    }
    let links = Links::new(dep, configs, env, opts)?;
    let n = dep.bsses.len();
    let mut b = Builder {
        states: Vec::new(),
        index: HashMap::new(),
        cap: opts.state_cap,
    };
    let mut edges = Vec::new();
    let mut queue = VecDeque::new();
    queue.push_back(b.intern(CtmnState::empty())?.0);
    while let Some(i) = queue.pop_front() {
        let state = b.states[i].clone();
        for a in &state.active {
            let (j, new) = b.intern(state.without(a.bss))?;
            if new {
                queue.push_back(j);
            }
            edges.push(Edge {
                from: i,
                to: j,
                bss: a.bss,
                kind: EdgeKind::Departure,
                rate: 1.0 / a.service_time,
            });
        }
        for bss in (0..n).filter(|&k| !state.contains(k)) {
            if let Some(act) = links.activation(&state, bss)? {
                let (j, new) = b.intern(state.with(act))?;
                if new {
                    queue.push_back(j);
                }
                edges.push(Edge {
                    from: i,
                    to: j,
                    bss,
                    kind: EdgeKind::Activation,
                    rate: opts.lambda,
                });
            }
        }
    }
    let n_reachable = b.states.len();

    // Legacy combinations nobody reaches.
    if n < usize::BITS as usize && (1usize << n) <= opts.state_cap {
        for mask in 1usize..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
            let mut placeholder = Vec::new();
            for &k in &members {
                placeholder.push(ActiveBss {
                    bss: k,
                    mode: BssMode::Default,
                    tx_pwr: configs[k].tx_pwr,
                    mcs: *env.mcs.lowest(),
                    n_agg: 1,
                    service_time: 1.0,
                });
            }
            let mut active = Vec::new();
            let mut feasible = true;
            for &k in &members {
                match links.link(k, BssMode::Default, configs[k].tx_pwr, &placeholder)? {
                    Some(a) => active.push(a),
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible {
                let key = CtmnState { active: active.clone() }.key();
                if !b.index.contains_key(&key) {
                    b.intern(CtmnState { active })?;
                }
            }
        }
    }
    for i in n_reachable..b.states.len() {
        let state = b.states[i].clone();
        for a in &state.active {
            if let Some(&j) = b.index.get(&state.without(a.bss).key()) {
                edges.push(Edge {
                    from: i,
                    to: j,
                    bss: a.bss,
                    kind: EdgeKind::Departure,
                    rate: 1.0 / a.service_time,
                });
            }
        }
    }
    let reachable = (0..b.states.len()).map(|i| i < n_reachable).collect();
    Ok(CtmnGraph {
        states: b.states,
        edges,
        reachable,
        lambda: opts.lambda,
    })
}

impl CtmnGraph {
    pub fn find(&self, dep: &Deployment, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s.label(dep) == label)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    /// Plain-text adjacency dump, one state per line.
    pub fn dump(&self, dep: &Deployment) -> String {
        let mut out = String::new();
        for (i, s) in self.states.iter().enumerate() {
            let _ = write!(out, "s{i} [{}]", s.label(dep));
            if !self.reachable[i] {
                out.push_str(" unreachable");
            }
            for a in &s.active {
                let _ = write!(
                    out,
                    " {}:{:.2}dBm/MCS{}",
                    dep.bsses[a.bss].name, a.tx_pwr, a.mcs.index
                );
            }
            let targets: Vec<String> = self
                .edges
                .iter()
                .filter(|e| e.from == i)
                .map(|e| format!("s{}", e.to))
                .collect();
            let _ = writeln!(out, " -> {}", targets.join(","));
        }
        out
    }
}

/// Generator matrix over all enumerated states.
pub fn build_generator(graph: &CtmnGraph) -> Result<DMatrix<f64>, CtmnError> {
    let n = graph.states.len();
    let mut q = DMatrix::zeros(n, n);
    for e in &graph.edges {
        if !e.rate.is_finite() || e.rate < 0.0 {
            return Err(CtmnError::ServiceTime { bss: e.bss });
        }
        q[(e.from, e.to)] += e.rate;
    }
    for i in 0..n {
        let row: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
        q[(i, i)] = -row;
    }
    Ok(q)
}

/// Solves πQ = 0, Σπ = 1 on the states flagged in `support`; entries
/// outside the support are zero.
pub fn stationary_distribution(q: &DMatrix<f64>, support: &[bool]) -> Result<DVector<f64>, CtmnError> {
    let idx: Vec<usize> = (0..q.nrows()).filter(|&i| support[i]).collect();
    let m = idx.len();
    if m == 0 {
        return Err(CtmnError::Singular("empty support".into()));
    }
    let mut a = DMatrix::zeros(m, m);
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            a[(c, r)] = q[(i, j)];
        }
    }
    for c in 0..m {
        a[(m - 1, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(m);
    rhs[m - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CtmnError::Singular("LU solve failed".into()))?;
    let mut pi = DVector::zeros(q.nrows());
    for (r, &i) in idx.iter().enumerate() {
        let v = sol[r];
        if v < -1e-9 || !v.is_finite() {
            return Err(CtmnError::Singular(format!("negative probability {v}")));
        }
        pi[i] = v.max(0.0);
    }
    let total = pi.sum();
    pi /= total;
    Ok(pi)
}

/// Long-term delivered bits/s per BSS.
pub fn throughput_per_bss(
    graph: &CtmnGraph,
    pi: &DVector<f64>,
    dep: &Deployment,
    configs: &[SrConfig],
    env: &RadioEnv,
) -> Result<Vec<f64>, CtmnError> {
    let opts = CtmnOptions {
        lambda: graph.lambda,
        ..CtmnOptions::from_env(env)
    };
    let links = Links::new(dep, configs, env, opts)?;
    let mut gamma = vec![0.0; dep.bsses.len()];
    for (s, state) in graph.states.iter().enumerate() {
        if pi[s] == 0.0 {
            continue;
        }
        for a in &state.active {
            if links.successful(state, a) {
                gamma[a.bss] += pi[s] * a.n_agg as f64 * env.mac.l_d as f64 / a.service_time;
            }
        }
    }
    Ok(gamma)
}

#[derive(Debug, Clone, Serialize)]
pub struct CtmnSolution {
    pub graph: CtmnGraph,
    #[serde(skip)]
    pub pi: DVector<f64>,
    pub throughput: Vec<f64>,
}

impl CtmnSolution {
    /// Mean transmit power of a BSS while it is active.
    pub fn mean_tx_pwr(&self, bss: usize) -> Option<f64> {
        let (mut w, mut p) = (0.0, 0.0);
        for (s, state) in self.graph.states.iter().enumerate() {
            if let Some(a) = state.get(bss) {
                w += self.pi[s];
                p += self.pi[s] * a.tx_pwr;
            }
        }
        (w > 0.0).then(|| p / w)
    }
}

/// Enumerate, solve and evaluate in one go.
pub fn solve(
    dep: &Deployment,
    configs: &[SrConfig],
    env: &RadioEnv,
    opts: CtmnOptions,
) -> Result<CtmnSolution, CtmnError> {
    let graph = enumerate_states(dep, configs, env, opts)?;
    let q = build_generator(&graph)?;
    let pi = stationary_distribution(&q, &graph.reachable)?;
    let throughput = throughput_per_bss(&graph, &pi, dep, configs, env)?;
    Ok(CtmnSolution {
        graph,
        pi,
        throughput,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{toy_environment, toy_scenario};

    #[test]
    fn two_state_chain() {
        let mut q = DMatrix::zeros(2, 2);
        let (l, m) = (3.0, 5.0);
        q[(0, 0)] = -l;
        q[(0, 1)] = l;
        q[(1, 0)] = m;
        q[(1, 1)] = -m;
        let pi = stationary_distribution(&q, &[true, true]).unwrap();
        assert!((pi[0] - m / (l + m)).abs() < 1e-12);
        assert!((pi[1] - l / (l + m)).abs() < 1e-12);
    }

    #[test]
    fn toy1_legacy_states() {
        let dep = toy_scenario(1).unwrap();
        let env = toy_environment(1).unwrap();
        let g = enumerate_states(&dep, &dep.configs(), &env, CtmnOptions::from_env(&env)).unwrap();
        let labels: Vec<String> = g.states.iter().map(|s| s.label(&dep)).collect();
        assert_eq!(labels.len(), 4, "{labels:?}");
        let ab = g.find(&dep, "A B").unwrap();
        assert!(!g.reachable[ab]);
    }

    #[test]
    fn lambda_from_cw() {
        let env = RadioEnv::default();
        let l = CtmnOptions::from_env(&env).lambda;
        assert!((l - 1.0 / (7.5 * 9e-6)).abs() < 1e-6);
    }
}

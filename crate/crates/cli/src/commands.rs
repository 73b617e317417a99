use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use axsr::ctmn::{self, CtmnOptions};
use axsr::desim::{self, MetricsReport, SimConfig, TrafficModel};
use axsr::scenario::{configure, parse_scenario, serialize_scenario, Deployment, Layout, Scenario, SrMode, Traffic};
use axsr::srcore::{validate_srps, SrError, SrpsElement};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{Format, ManifestInputs, OutputDir};
use crate::CliError;

/// Options shared by every scenario-driven command.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub scenario_path: Option<PathBuf>,
    pub scenario: Scenario,
    pub out: PathBuf,
    /// Seeds to run; defaults to the sweep's seed list.
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub trace: bool,
    pub format: Format,
    pub cf_end_on_timeout: bool,
    /// `sim` only: apply the sweep's SR mode at this single threshold pair
    /// instead of the per-BSS settings in the file.
    pub point: Option<(f64, Option<f64>)>,
}

impl Invocation {
    pub fn load(path: &Path, out: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let scenario = parse_scenario(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(Self::new(scenario, Some(path.to_path_buf()), out))
    }

    pub fn new(scenario: Scenario, scenario_path: Option<PathBuf>, out: &Path) -> Self {
        let seeds = scenario.sweep.seed_list();
        Invocation {
            scenario_path,
            scenario,
            out: out.to_path_buf(),
            seeds,
            jobs: 1,
            trace: false,
            format: Format::Csv,
            cf_end_on_timeout: false,
            point: None,
        }
    }

    fn inputs(&self, command: &str) -> Result<ManifestInputs, CliError> {
        Ok(ManifestInputs {
            command: command.to_string(),
            scenario: serialize_scenario(&self.scenario)?,
            seeds: self.seeds.clone(),
            format: self.format,
            trace: self.trace,
            options: serde_json::json!({
                "cf_end_on_timeout": self.cf_end_on_timeout,
                "point": self.point,
            }),
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.max(1))
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))
    }

    fn explicit(&self, command: &str) -> Result<&Deployment, CliError> {
        match &self.scenario.layout {
            Layout::Explicit(d) => Ok(d),
            Layout::RandomGrid => Err(CliError::Input(format!(
                "{command} needs an explicit deployment, not a random grid"
            ))),
        }
    }

    fn map_sizes(&self) -> Vec<f64> {
        match &self.scenario.layout {
            Layout::Explicit(d) => vec![d.width],
            Layout::RandomGrid => self.scenario.sweep.densities.clone(),
        }
    }

    fn loads(&self) -> Vec<Option<f64>> {
        match self.scenario.sweep.traffic {
            Traffic::FullBuffer => vec![None],
            Traffic::Poisson => self.scenario.sweep.loads_mbps.iter().map(|&l| Some(l)).collect(),
        }
    }

    fn require_seeds(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Input("no seeds to run".into()));
        }
        Ok(())
    }
}

/// One simulator run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub map_size: f64,
    pub load_mbps: Option<f64>,
    pub n_agg: u32,
    pub mode: SrMode,
    /// `None`: the deployment exactly as configured in the file.
    pub point: Option<(f64, Option<f64>)>,
    pub seed: u64,
}

impl RunSpec {
    fn mode_label(&self) -> &'static str {
        if self.point.is_none() {
            "configured"
        } else {
            self.mode.label()
        }
    }

    fn trace_name(&self) -> String {
        let load = self.load_mbps.map_or("fb".to_string(), |l| format!("{l}"));
        let (pd, srg) = match self.point {
            Some((pd, srg)) => (format!("{pd}"), srg.map_or("na".into(), |v| format!("{v}"))),
            None => ("cfg".into(), "cfg".into()),
        };
        format!(
            "traces/map{}_load{load}_agg{}_{}_pd{pd}_srg{srg}_seed{}.csv",
            self.map_size,
            self.n_agg,
            self.mode_label(),
            self.seed
        )
    }
}

pub struct RunResult {
    pub spec: RunSpec,
    pub deployment: Deployment,
    pub report: MetricsReport,
    pub trace: Option<String>,
}

pub fn execute(inv: &Invocation, spec: &RunSpec) -> Result<RunResult, CliError> {
    let sweep = &inv.scenario.sweep;
    let dep = inv.scenario.deployment(spec.map_size, spec.seed)?;
    let (dep, configs) = match spec.point {
        Some((pd, srg)) => configure(&dep, spec.mode, spec.seed, pd, srg)?,
        None => {
            let c = dep.configs();
            (dep, c)
        }
    };
    let cfg = SimConfig {
        traffic: match spec.load_mbps {
            Some(l) => TrafficModel::Poisson { load_bps: l * 1e6 },
            None => TrafficModel::FullBuffer,
        },
        n_agg_max: spec.n_agg,
        duration_s: sweep.duration_s,
        warmup_s: sweep.warmup_s,
        seed: spec.seed,
        cf_end_on_timeout: inv.cf_end_on_timeout,
        trace: inv.trace,
        ..SimConfig::default()
    };
    let out = desim::run(&dep, &configs, &inv.scenario.env, &cfg)?;
    if let Some((b, c)) = out.report.conservation.iter().enumerate().find(|(_, c)| !c.balanced()) {
        return Err(CliError::Internal(format!("packet conservation broken in BSS {b}: {c:?}")));
    }
    let trace = inv.trace.then(|| out.trace_text());
    Ok(RunResult {
        spec: spec.clone(),
        deployment: dep,
        report: out.report,
        trace,
    })
}

fn execute_all(inv: &Invocation, specs: &[RunSpec]) -> Result<Vec<RunResult>, CliError> {
    inv.pool()?.install(|| specs.par_iter().map(|s| execute(inv, s)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub seed: u64,
    pub map_size: f64,
    pub load_mbps: Option<f64>,
    pub n_agg: u32,
    pub sr_mode: String,
    pub obss_pd: Option<f64>,
    pub bss: String,
    pub throughput_mbps: f64,
    pub occupancy: f64,
    pub delay_ms: Option<f64>,
    pub drops: u64,
    pub obss_pd_srg: Option<f64>,
    pub sr_enabled: bool,
    pub collisions: u64,
    pub attempts: u64,
    pub delivered: u64,
}

fn sim_rows(results: &[RunResult]) -> Vec<SimRow> {
    let mut rows = Vec::new();
    for r in results {
        for (b, m) in r.report.per_bss.iter().enumerate() {
            let bss = &r.deployment.bsses[b];
            let (pd, srg) = match r.spec.point {
                Some(p) => (Some(p.0), p.1),
                None => (
                    bss.sr_enabled.then_some(bss.obss_pd_non_srg),
                    bss.obss_pd_srg.filter(|_| bss.sr_enabled),
                ),
            };
            rows.push(SimRow {
                seed: r.spec.seed,
                map_size: r.spec.map_size,
                load_mbps: r.spec.load_mbps,
                n_agg: r.spec.n_agg,
                sr_mode: r.spec.mode_label().to_string(),
                obss_pd: pd,
                bss: bss.name.clone(),
                throughput_mbps: m.throughput_bps / 1e6,
                occupancy: m.occupancy,
                delay_ms: m.mean_delay_s.map(|d| d * 1e3),
                drops: m.drops,
                obss_pd_srg: srg,
                sr_enabled: m.sr_enabled,
                collisions: m.collisions,
                attempts: m.attempts,
                delivered: m.delivered_packets,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub map_size: f64,
    pub load_mbps: Option<f64>,
    pub n_agg: u32,
    pub sr_mode: String,
    pub obss_pd: Option<f64>,
    pub obss_pd_srg: Option<f64>,
    pub bss: String,
    pub runs: u32,
    pub throughput_mbps: f64,
    pub occupancy: f64,
    pub delay_ms: Option<f64>,
    pub drops: f64,
    /// Runs in which this BSS had SR switched on (varies under `mixed`).
    pub sr_enabled_runs: u32,
}

fn mean_rows(rows: &[SimRow]) -> Vec<MeanRow> {
    let mut out: Vec<MeanRow> = Vec::new();
    let mut delays: Vec<(f64, u32)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for r in rows {
        let key = format!(
            "{}|{:?}|{}|{}|{:?}|{:?}|{}",
            r.map_size, r.load_mbps, r.n_agg, r.sr_mode, r.obss_pd, r.obss_pd_srg, r.bss
        );
        let i = *index.entry(key).or_insert_with(|| {
            out.push(MeanRow {
                map_size: r.map_size,
                load_mbps: r.load_mbps,
                n_agg: r.n_agg,
                sr_mode: r.sr_mode.clone(),
                obss_pd: r.obss_pd,
                obss_pd_srg: r.obss_pd_srg,
                bss: r.bss.clone(),
                runs: 0,
                throughput_mbps: 0.0,
                occupancy: 0.0,
                delay_ms: None,
                drops: 0.0,
                sr_enabled_runs: 0,
            });
            delays.push((0.0, 0));
            out.len() - 1
        });
        let m = &mut out[i];
        m.runs += 1;
        m.throughput_mbps += r.throughput_mbps;
        m.occupancy += r.occupancy;
        m.drops += r.drops as f64;
        m.sr_enabled_runs += r.sr_enabled as u32;
        if let Some(d) = r.delay_ms {
            delays[i].0 += d;
            delays[i].1 += 1;
        }
    }
    for (m, (d, n)) in out.iter_mut().zip(delays) {
        let k = m.runs as f64;
        m.throughput_mbps /= k;
        m.occupancy /= k;
        m.drops /= k;
        m.delay_ms = (n > 0).then(|| d / n as f64);
    }
    out
}

/// Best threshold for BSS A against the legacy baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub map_size: f64,
    pub load_mbps: Option<f64>,
    pub n_agg: u32,
    pub sr_mode: String,
    pub best_obss_pd: f64,
    pub best_obss_pd_srg: Option<f64>,
    pub a_legacy_mbps: f64,
    pub a_best_mbps: f64,
    pub a_gain_mbps: f64,
    pub others_legacy_mbps: f64,
    pub others_best_mbps: f64,
    pub others_change_mbps: f64,
    pub a_occupancy_legacy: f64,
    pub a_occupancy_best: f64,
}

#[derive(Default, Clone, Copy)]
struct PointMeans {
    a: f64,
    others: f64,
    a_occ: f64,
    n: u32,
}

impl PointMeans {
    fn add(&mut self, report: &MetricsReport) {
        let per = &report.per_bss;
        self.a += per[0].throughput_bps / 1e6;
        self.a_occ += per[0].occupancy;
        if per.len() > 1 {
            self.others += per[1..].iter().map(|m| m.throughput_bps / 1e6).sum::<f64>() / (per.len() - 1) as f64;
        }
        self.n += 1;
    }

    fn mean(self) -> (f64, f64, f64) {
        let n = self.n.max(1) as f64;
        (self.a / n, self.others / n, self.a_occ / n)
    }
}

fn best_rows(results: &[RunResult], points: &[(f64, Option<f64>)]) -> Vec<BestRow> {
    struct Group {
        key: (f64, Option<f64>, u32),
        legacy: PointMeans,
        per_point: Vec<PointMeans>,
        mode: String,
    }
    let mut groups: Vec<Group> = Vec::new();
    for r in results {
        let key = (r.spec.map_size, r.spec.load_mbps, r.spec.n_agg);
        let gi = match groups.iter().position(|g| g.key == key) {
            Some(i) => i,
            None => {
                groups.push(Group {
                    key,
                    legacy: PointMeans::default(),
                    per_point: vec![PointMeans::default(); points.len()],
                    mode: String::new(),
                });
                groups.len() - 1
            }
        };
        let g = &mut groups[gi];
        if r.spec.mode == SrMode::Legacy {
            g.legacy.add(&r.report);
        } else if let Some(p) = r.spec.point {
            if let Some(pi) = points.iter().position(|q| *q == p) {
                g.per_point[pi].add(&r.report);
                g.mode = r.spec.mode.label().to_string();
            }
        }
    }
    let mut rows = Vec::new();
    for Group {
        key: (map_size, load_mbps, n_agg),
        legacy,
        per_point,
        mode,
    } in groups
    {
        if legacy.n == 0 || per_point.iter().all(|p| p.n == 0) {
            continue;
        }
        // Ties go to the earlier (lower) threshold.
        let mut best = 0;
        for (i, p) in per_point.iter().enumerate() {
            if p.n > 0 && (per_point[best].n == 0 || p.mean().0 > per_point[best].mean().0) {
                best = i;
            }
        }
        let (la, lo, locc) = legacy.mean();
        let (ba, bo, bocc) = per_point[best].mean();
        rows.push(BestRow {
            map_size,
            load_mbps,
            n_agg,
            sr_mode: mode,
            best_obss_pd: points[best].0,
            best_obss_pd_srg: points[best].1,
            a_legacy_mbps: la,
            a_best_mbps: ba,
            a_gain_mbps: ba - la,
            others_legacy_mbps: lo,
            others_best_mbps: bo,
            others_change_mbps: bo - lo,
            a_occupancy_legacy: locc,
            a_occupancy_best: bocc,
        });
    }
    rows
}

fn write_traces(out: &mut OutputDir, results: &[RunResult]) -> Result<(), CliError> {
    for r in results {
        if let Some(t) = &r.trace {
            out.file(&r.spec.trace_name(), t.as_bytes())?;
        }
    }
    Ok(())
}

fn finish(inv: &Invocation, out: &OutputDir, inputs: &ManifestInputs, started: Instant) -> Result<(), CliError> {
    out.write_manifest(inputs, inv.scenario_path.as_deref(), started.elapsed().as_secs_f64())?;
    Ok(())
}

fn open_output(inv: &Invocation, command: &str) -> Result<(ManifestInputs, OutputDir), CliError> {
    let inputs = inv.inputs(command)?;
    let out = OutputDir::create(&inv.out, inputs.id(), inv.format)?;
    Ok((inputs, out))
}

pub struct SimOutcome {
    pub rows: Vec<SimRow>,
    pub means: Vec<MeanRow>,
    pub files: Vec<String>,
}

/// Runs the scenario over seeds, map sizes, loads and aggregation limits at
/// a single configuration.
pub fn cmd_sim(inv: &Invocation) -> Result<SimOutcome, CliError> {
    let started = Instant::now();
    inv.require_seeds()?;
    let mode = inv.scenario.sweep.sr_mode;
    let mut specs = Vec::new();
    for &map_size in &inv.map_sizes() {
        for load_mbps in inv.loads() {
            for &n_agg in &inv.scenario.sweep.n_agg {
                for &seed in &inv.seeds {
                    specs.push(RunSpec {
                        map_size,
                        load_mbps,
                        n_agg,
                        mode,
                        point: inv.point,
                        seed,
                    });
                }
            }
        }
    }
    let results = execute_all(inv, &specs)?;
    let rows = sim_rows(&results);
    let means = mean_rows(&rows);
    let (inputs, mut out) = open_output(inv, "sim")?;
    out.table("sim", &rows)?;
    out.table("sim_mean", &means)?;
    write_traces(&mut out, &results)?;
    finish(inv, &out, &inputs, started)?;
    Ok(SimOutcome {
        rows,
        means,
        files: out.written().to_vec(),
    })
}

pub struct SweepOutcome {
    pub rows: Vec<SimRow>,
    pub means: Vec<MeanRow>,
    pub best: Vec<BestRow>,
    pub files: Vec<String>,
}

/// OBSS/PD sweep: every threshold point under the sweep's SR mode, plus
/// legacy baseline runs, and BSS A's best point against that baseline.
pub fn cmd_sweep(inv: &Invocation) -> Result<SweepOutcome, CliError> {
    let started = Instant::now();
    inv.require_seeds()?;
    let sweep = &inv.scenario.sweep;
    let points = sweep.threshold_points();
    if points.is_empty() {
        return Err(CliError::Input("sweep has no OBSS/PD values".into()));
    }
    let mut specs = Vec::new();
    for &map_size in &inv.map_sizes() {
        for load_mbps in inv.loads() {
            for &n_agg in &sweep.n_agg {
                let spec = |mode, point, seed| RunSpec {
                    map_size,
                    load_mbps,
                    n_agg,
                    mode,
                    point: Some(point),
                    seed,
                };
                if sweep.sr_mode != SrMode::Legacy {
                    for &seed in &inv.seeds {
                        specs.push(spec(SrMode::Legacy, (-82.0, None), seed));
                    }
                }
                for &p in &points {
                    for &seed in &inv.seeds {
                        specs.push(spec(sweep.sr_mode, p, seed));
                    }
                }
            }
        }
    }
    let results = execute_all(inv, &specs)?;
    let rows = sim_rows(&results);
    let means = mean_rows(&rows);
    let best = best_rows(&results, &points);
    let (inputs, mut out) = open_output(inv, "sweep")?;
    out.table("sweep", &rows)?;
    out.table("sweep_mean", &means)?;
    out.table("best", &best)?;
    write_traces(&mut out, &results)?;
    finish(inv, &out, &inputs, started)?;
    Ok(SweepOutcome {
        rows,
        means,
        best,
        files: out.written().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtmnRow {
    pub obss_pd_non_srg: f64,
    pub obss_pd_srg: Option<f64>,
    pub bss: String,
    pub throughput_mbps: f64,
    pub tx_pwr_dbm: Option<f64>,
    pub sr_mode: String,
    pub sr_enabled: bool,
    pub n_agg: u32,
    pub states: usize,
    pub reachable_states: usize,
}

pub struct CtmnOutcome {
    pub rows: Vec<CtmnRow>,
    pub files: Vec<String>,
}

fn ctmn_point(
    inv: &Invocation,
    dep: &Deployment,
    n_agg: u32,
    point: (f64, Option<f64>),
    seed: u64,
) -> Result<(Deployment, ctmn::CtmnSolution), CliError> {
    let (d, c) = configure(dep, inv.scenario.sweep.sr_mode, seed, point.0, point.1)?;
    let opts = CtmnOptions {
        n_agg_max: n_agg,
        ..CtmnOptions::from_env(&inv.scenario.env)
    };
    let s = ctmn::solve(&d, &c, &inv.scenario.env, opts)?;
    Ok((d, s))
}

/// CTMN throughput for every threshold point, with state-graph dumps.
pub fn cmd_ctmn(inv: &Invocation) -> Result<CtmnOutcome, CliError> {
    let started = Instant::now();
    let dep = inv.explicit("ctmn")?;
    let points = inv.scenario.sweep.threshold_points();
    if points.is_empty() {
        return Err(CliError::Input("sweep has no OBSS/PD values".into()));
    }
    // the mixed-mode coin flips need a seed; take the first one
    let seed = inv.seeds.first().copied().unwrap_or(0);
    let mut rows = Vec::new();
    let mut dump = String::new();
    for &n_agg in &inv.scenario.sweep.n_agg {
        for &p in &points {
            let (d, s) = ctmn_point(inv, dep, n_agg, p, seed)?;
            let reachable = s.graph.reachable.iter().filter(|r| **r).count();
            let _ = writeln!(
                dump,
                "# n_agg={n_agg} obss_pd_non_srg={} obss_pd_srg={}",
                p.0,
                p.1.map_or("none".to_string(), |v| v.to_string())
            );
            dump.push_str(&s.graph.dump(&d));
            let pis: Vec<String> = s.pi.iter().enumerate().map(|(i, v)| format!("s{i}={v:.6}")).collect();
            let _ = writeln!(dump, "pi {}", pis.join(" "));
            for (b, bss) in d.bsses.iter().enumerate() {
                rows.push(CtmnRow {
                    obss_pd_non_srg: p.0,
                    obss_pd_srg: p.1,
                    bss: bss.name.clone(),
                    throughput_mbps: s.throughput[b] / 1e6,
                    tx_pwr_dbm: s.mean_tx_pwr(b),
                    sr_mode: inv.scenario.sweep.sr_mode.label().to_string(),
                    sr_enabled: bss.sr_enabled,
                    n_agg,
                    states: s.graph.states.len(),
                    reachable_states: reachable,
                });
            }
        }
    }
    let (inputs, mut out) = open_output(inv, "ctmn")?;
    out.table("ctmn", &rows)?;
    out.file("ctmn_states.txt", dump.as_bytes())?;
    finish(inv, &out, &inputs, started)?;
    Ok(CtmnOutcome {
        rows,
        files: out.written().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalPoint {
    pub n_agg: u32,
    pub obss_pd_non_srg: f64,
    pub obss_pd_srg: Option<f64>,
    pub bss: String,
    pub ctmn_mbps: f64,
    pub sim_mbps: f64,
    pub abs_err_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalSummary {
    pub n_agg: u32,
    pub bss: String,
    pub mae_mbps: f64,
    pub mad_mbps: f64,
    pub points: usize,
}

pub struct CrossvalOutcome {
    pub points: Vec<CrossvalPoint>,
    pub summary: Vec<CrossvalSummary>,
    pub files: Vec<String>,
}

/// Mean absolute error and the mean absolute deviation of the absolute
/// errors around it.
pub fn mae_mad(abs_errors: &[f64]) -> (f64, f64) {
    if abs_errors.is_empty() {
        return (0.0, 0.0);
    }
    let n = abs_errors.len() as f64;
    let mae = abs_errors.iter().sum::<f64>() / n;
    let mad = abs_errors.iter().map(|e| (e - mae).abs()).sum::<f64>() / n;
    (mae, mad)
}

/// CTMN against the simulator (full buffer) over the sweep grid. Both
/// sides are averaged over the seeds before comparing.
pub fn cmd_crossval(inv: &Invocation) -> Result<CrossvalOutcome, CliError> {
    let started = Instant::now();
    let dep = inv.explicit("crossval")?.clone();
    inv.require_seeds()?;
    let sweep = &inv.scenario.sweep;
    if sweep.traffic != Traffic::FullBuffer {
        log::warn!("crossval runs the simulator with full-buffer traffic; the sweep's loads are ignored");
    }
    let points = sweep.threshold_points();
    if points.is_empty() {
        return Err(CliError::Input("sweep has no OBSS/PD values".into()));
    }
    let mut specs = Vec::new();
    for &n_agg in &sweep.n_agg {
        for &p in &points {
            for &seed in &inv.seeds {
                specs.push(RunSpec {
                    map_size: dep.width,
                    load_mbps: None,
                    n_agg,
                    mode: sweep.sr_mode,
                    point: Some(p),
                    seed,
                });
            }
        }
    }
    let results = execute_all(inv, &specs)?;
    let ctmn_runs: Vec<Vec<f64>> = inv.pool()?.install(|| {
        specs
            .par_iter()
            .map(|s| ctmn_point(inv, &dep, s.n_agg, s.point.expect("sweep point"), s.seed).map(|(_, sol)| sol.throughput))
            .collect::<Result<_, CliError>>()
    })?;
    let n_bss = dep.bsses.len();
    let per_point = inv.seeds.len();
    let mut rows = Vec::new();
    for (runs, ctmns) in results.chunks(per_point).zip(ctmn_runs.chunks(per_point)) {
        let spec = &runs[0].spec;
        for b in 0..n_bss {
            let sim = runs.iter().map(|r| r.report.per_bss[b].throughput_bps).sum::<f64>() / per_point as f64 / 1e6;
            let ctmn = ctmns.iter().map(|t| t[b]).sum::<f64>() / per_point as f64 / 1e6;
            let (pd, srg) = spec.point.expect("sweep point");
            rows.push(CrossvalPoint {
                n_agg: spec.n_agg,
                obss_pd_non_srg: pd,
                obss_pd_srg: srg,
                bss: dep.bsses[b].name.clone(),
                ctmn_mbps: ctmn,
                sim_mbps: sim,
                abs_err_mbps: (ctmn - sim).abs(),
            });
        }
    }
    let mut summary = Vec::new();
    for &n_agg in &sweep.n_agg {
        for bss in &dep.bsses {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.n_agg == n_agg && r.bss == bss.name)
                .map(|r| r.abs_err_mbps)
                .collect();
            let (mae, mad) = mae_mad(&errs);
            summary.push(CrossvalSummary {
                n_agg,
                bss: bss.name.clone(),
                mae_mbps: mae,
                mad_mbps: mad,
                points: errs.len(),
            });
        }
    }
    let (inputs, mut out) = open_output(inv, "crossval")?;
    out.table("crossval_points", &rows)?;
    out.table("crossval", &summary)?;
    write_traces(&mut out, &results)?;
    finish(inv, &out, &inputs, started)?;
    Ok(CrossvalOutcome {
        points: rows,
        summary,
        files: out.written().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrpsReport {
    pub valid: bool,
    pub violation: Option<String>,
    pub non_srg_min_dbm: Option<f64>,
    pub non_srg_max_dbm: Option<f64>,
    pub srg_min_dbm: Option<f64>,
    pub srg_max_dbm: Option<f64>,
}

pub fn parse_srps(text: &str) -> Result<SrpsElement, CliError> {
    toml::from_str(text).map_err(|e| CliError::Input(format!("SRPS element: {e}")))
}

/// Checks an SRPS element. An element that breaks a constraint still yields
/// a report; the caller decides how to surface it.
pub fn srps_report(element: &SrpsElement) -> SrpsReport {
    match validate_srps(element) {
        Ok(b) => SrpsReport {
            valid: true,
            violation: None,
            non_srg_min_dbm: Some(b.non_srg_min),
            non_srg_max_dbm: Some(b.non_srg_max),
            srg_min_dbm: b.srg.map(|s| s.0),
            srg_max_dbm: b.srg.map(|s| s.1),
        },
        Err(e) => SrpsReport {
            valid: false,
            violation: Some(match e {
                SrError::Srps(v) => v.to_string(),
                other => other.to_string(),
            }),
            non_srg_min_dbm: None,
            non_srg_max_dbm: None,
            srg_min_dbm: None,
            srg_max_dbm: None,
        },
    }
}

pub fn cmd_validate_srps(path: &Path, out: Option<&Path>, format: Format) -> Result<SrpsReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let element = parse_srps(&text)?;
    let report = srps_report(&element);
    if let Some(dir) = out {
        let inputs = ManifestInputs {
            command: "validate-srps".into(),
            scenario: text,
            seeds: Vec::new(),
            format,
            trace: false,
            options: serde_json::Value::Null,
        };
        let mut o = OutputDir::create(dir, inputs.id(), format)?;
        o.table("srps", std::slice::from_ref(&report))?;
        o.write_manifest(&inputs, Some(path), 0.0)?;
    }
    Ok(report)
}

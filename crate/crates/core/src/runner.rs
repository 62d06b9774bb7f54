//! Scenario execution: per-symbol precoding over a batch, metric reduction,
//! output files and the complexity benchmark.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::leakage::{build_leakage_matrix, LeakageMatrix, MaskSpec};
use crate::metrics::{
    aclr_with_geometry, EvmAccumulator, EvmReport, PowerCalibration, PsdAccumulator, PsdEstimate,
    CHUNK,
};
use crate::precoders::{
    admm_precode_observed, dykstra_oracle_observed, max_violation_db, nsp_precode, pocs_precode_observed,
    ssp_precode_with, ConvergenceTrace, Diagnostics, IterationRecord, PrecoderResult, Rank1Constraint, SspOptions,
    SspState, DB_FLOOR,
};
use crate::scenario::{AlgorithmKind, AlgorithmParams, Scenario};
use crate::signal::{gen_ofdm_symbol_indexed, CarrierConfig, OfdmModulator};

/// Everything derived from a scenario before any symbol is precoded.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub calibration: PowerCalibration,
    /// Mask in file order.
    pub mask: MaskSpec,
    /// Leakage rows in file order.
    pub leakage: LeakageMatrix,
    /// Constraints in sweep order.
    pub constraints: Vec<Rank1Constraint>,
}

/// Measures the power calibration and builds the constraint set.
pub fn prepare(s: &Scenario) -> Result<Prepared> {
    let calibration = PowerCalibration::measure(
        &s.carrier,
        s.constellation,
        s.reference_dbm_per_100khz,
        s.metrics.rbw_hz,
        s.calibration.n_symbols,
        s.calibration.seed,
    )?;
    prepare_with(s, calibration)
}

/// As [`prepare`] with a known calibration.
pub fn prepare_with(s: &Scenario, calibration: PowerCalibration) -> Result<Prepared> {
    let mask = s
        .mask
        .to_mask_spec(&s.carrier, s.reference_dbm_per_100khz, calibration.leakage_power)?;
    let leakage = build_leakage_matrix(&s.carrier, mask.points())?;
    let sweep = match &s.algorithm.ordering {
        Some(order) => mask.permuted(order)?,
        None => mask.clone(),
    };
    let constraints = build_leakage_matrix(&s.carrier, sweep.points())?.constraints(sweep.gamma())?;
    Ok(Prepared {
        calibration,
        mask,
        leakage,
        constraints,
    })
}

/// Iteration budget of the configured algorithm.
pub fn iteration_budget(p: &AlgorithmParams) -> usize {
    match p.kind {
        AlgorithmKind::None | AlgorithmKind::Nsp => 1,
        AlgorithmKind::Pocs | AlgorithmKind::Admm => p.max_iter,
        AlgorithmKind::Ssp => p.n_iter,
        AlgorithmKind::Oracle => p.oracle_max_iter,
    }
}

/// Precodes one symbol with the configured algorithm.
pub fn precode_symbol(
    p: &AlgorithmParams,
    prepared: &Prepared,
    d: &[Complex64],
    observer: &mut dyn FnMut(usize, &[Complex64]),
) -> Result<PrecoderResult> {
    let cs = &prepared.constraints;
    match p.kind {
        AlgorithmKind::None => Ok(PrecoderResult {
            d_bar: d.to_vec(),
            trace: ConvergenceTrace::new(),
            evm_pct: 0.0,
            max_violation_db: Some(max_violation_db(cs, d)),
            iterations: 0,
            converged: true,
            diagnostics: Diagnostics::default(),
        }),
        AlgorithmKind::Nsp => nsp_precode(&prepared.leakage, d),
        AlgorithmKind::Pocs => pocs_precode_observed(cs, d, p.max_iter, p.stop_db(), observer),
        AlgorithmKind::Admm => admm_precode_observed(cs, d, p.rho, p.max_iter, p.stop_db(), observer),
        AlgorithmKind::Ssp => {
            let opts = SspOptions {
                n_iter: p.n_iter,
                phase: p.phase,
                tol_db: p.stop_db(),
            };
            ssp_precode_with(cs, d, &opts, observer)
        }
        AlgorithmKind::Oracle => dykstra_oracle_observed(cs, d, p.oracle_max_iter, p.oracle_tol, observer),
    }
}

/// Iterations at which the batch ACLR is evaluated: 1, 2, 3, 5, 10, 20,
/// 30, 50, ... up to and including the budget.
pub fn aclr_checkpoints(budget: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut scale = 1usize;
    'outer: loop {
        for m in [1, 2, 3, 5] {
            let v = m * scale;
            if v >= budget {
                break 'outer;
            }
            out.push(v);
        }
        scale *= 10;
    }
    out.push(budget.max(1));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolStats {
    pub index: usize,
    pub evm_pct: f64,
    pub max_violation_db: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub iteration: usize,
    /// Mean of `‖d − d̄⁽ⁱ⁾‖²` over the batch.
    pub objective: f64,
    /// Worst max violation over the batch.
    pub violation_db: f64,
    pub aclr_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub total_s: f64,
    pub calibration_s: f64,
    pub precode_s: f64,
    pub per_symbol_s: f64,
    pub per_iteration_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub algorithm: String,
    pub mask: String,
    pub seed: u64,
    pub n_symbols: usize,
    pub aclr_db: f64,
    pub aclr_unprecoded_db: f64,
    pub in_band_psd_dbm_per_100khz: f64,
    pub in_band_psd_unprecoded_dbm_per_100khz: f64,
    /// Power-weighted over the batch.
    pub evm_pct: f64,
    pub evm_mean_symbol_pct: f64,
    pub evm_max_symbol_pct: f64,
    /// Batch-mean margins per mask point, file order.
    pub sem_margins_db: Vec<f64>,
    pub max_sem_margin_db: f64,
    /// Worst per-symbol max violation.
    pub max_symbol_violation_db: f64,
    pub iterations_mean: f64,
    pub iterations_max: usize,
    pub converged_symbols: usize,
    pub dense_inversions: usize,
    pub calibration: PowerCalibration,
    pub timing: Timing,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub convergence: Vec<ConvergenceRow>,
    pub psd: PsdEstimate,
    pub psd_unprecoded: PsdEstimate,
    pub evm: EvmReport,
    pub symbols: Vec<SymbolStats>,
}

struct ChunkOut {
    evm: EvmAccumulator,
    psd: PsdAccumulator,
    psd_unpre: PsdAccumulator,
    checkpoints: Vec<PsdAccumulator>,
    leak: Vec<f64>,
    stats: Vec<SymbolStats>,
    traces: Vec<Vec<IterationRecord>>,
    dense: usize,
    precode_s: f64,
}

/// Runs the scenario batch on the current rayon pool without writing files.
pub fn simulate(s: &Scenario, prepared: &Prepared) -> Result<RunOutcome> {
    simulate_timed(s, prepared, 0.0, Instant::now())
}

fn simulate_timed(s: &Scenario, prepared: &Prepared, calibration_s: f64, started: Instant) -> Result<RunOutcome> {
    let cfg = &s.carrier;
    let modulator = OfdmModulator::new(cfg);
    let proto = PsdAccumulator::new(cfg.symbol_len());
    let p = &s.algorithm;
    let checkpoints = if p.kind.is_iterative() {
        aclr_checkpoints(iteration_budget(p))
    } else {
        Vec::new()
    };
    let m = prepared.leakage.n_rows();
    let n_chunks = s.n_symbols.div_ceil(CHUNK);

    let run_chunk = |c: usize| -> Result<ChunkOut> {
        let mut out = ChunkOut {
            evm: EvmAccumulator::new(cfg.n_allocated()),
            psd: proto.fresh(),
            psd_unpre: proto.fresh(),
            checkpoints: checkpoints.iter().map(|_| proto.fresh()).collect(),
            leak: vec![0.0; m],
            stats: Vec::new(),
            traces: Vec::new(),
            dense: 0,
            precode_s: 0.0,
        };
        for i in c * CHUNK..((c + 1) * CHUNK).min(s.n_symbols) {
            let d = gen_ofdm_symbol_indexed(cfg, s.constellation, s.seed, i as u64);
            let mut hit = vec![false; checkpoints.len()];
            let mut failed = None;
            let t0 = Instant::now();
            let r = {
                let cp_accs = &mut out.checkpoints;
                let mut obs = |it: usize, x: &[Complex64]| {
                    if let Ok(k) = checkpoints.binary_search(&it) {
                        match modulator.modulate(x).and_then(|w| cp_accs[k].add(&w)) {
                            Ok(()) => hit[k] = true,
                            Err(e) => failed = Some(e),
                        }
                    }
                };
                precode_symbol(p, prepared, &d, &mut obs)
            }
            .map_err(|e| Error::Symbol {
                index: i,
                source: Box::new(e),
            })?;
            out.precode_s += t0.elapsed().as_secs_f64();
            if let Some(e) = failed {
                return Err(e);
            }
            let w = modulator.modulate(&r.d_bar)?;
            for (k, acc) in out.checkpoints.iter_mut().enumerate() {
                if !hit[k] {
                    acc.add(&w)?;
                }
            }
            out.psd.add(&w)?;
            out.psd_unpre.add(&modulator.modulate(&d)?)?;
            out.evm.add(&d, &r.d_bar)?;
            for (acc, v) in out.leak.iter_mut().zip(prepared.leakage.apply(&r.d_bar)?) {
                *acc += v.norm_sqr();
            }
            out.stats.push(SymbolStats {
                index: i,
                evm_pct: r.evm_pct,
                max_violation_db: max_violation_db(&prepared.constraints, &r.d_bar),
                iterations: r.iterations,
                converged: r.converged,
            });
            let mut trace = vec![IterationRecord {
                iteration: 0,
                objective: 0.0,
                max_violation_db: max_violation_db(&prepared.constraints, &d),
                primal_residual: None,
            }];
            trace.extend_from_slice(r.trace.records());
            out.traces.push(trace);
            out.dense += r.diagnostics.dense_inversions;
        }
        Ok(out)
    };
    let chunks: Vec<ChunkOut> = (0..n_chunks).into_par_iter().map(run_chunk).collect::<Result<_>>()?;

    let mut evm_acc = EvmAccumulator::new(cfg.n_allocated());
    let mut psd = proto.fresh();
    let mut psd_unpre = proto.fresh();
    let mut cp_accs: Vec<PsdAccumulator> = checkpoints.iter().map(|_| proto.fresh()).collect();
    let mut leak = vec![0.0; m];
    let mut stats = Vec::with_capacity(s.n_symbols);
    let mut traces = Vec::with_capacity(s.n_symbols);
    let mut dense = 0;
    let mut precode_s = 0.0;
    for ch in chunks {
        evm_acc.merge(&ch.evm);
        psd.merge(&ch.psd)?;
        psd_unpre.merge(&ch.psd_unpre)?;
        for (a, b) in cp_accs.iter_mut().zip(&ch.checkpoints) {
            a.merge(b)?;
        }
        for (a, b) in leak.iter_mut().zip(&ch.leak) {
            *a += b;
        }
        stats.extend(ch.stats);
        traces.extend(ch.traces);
        dense += ch.dense;
        precode_s += ch.precode_s;
    }

    let fs = cfg.sample_rate_hz();
    let rbw = s.metrics.rbw_hz;
    let offset = prepared.calibration.psd_offset_db;
    let psd = psd.finish(fs, rbw, offset)?;
    let psd_unpre = psd_unpre.finish(fs, rbw, offset)?;
    let geom = &s.metrics.aclr;
    let aclr = aclr_with_geometry(&psd, cfg, geom)?;
    let aclr_unpre = aclr_with_geometry(&psd_unpre, cfg, geom)?;
    let mut cp_aclr = Vec::with_capacity(cp_accs.len());
    for acc in &cp_accs {
        cp_aclr.push(aclr_with_geometry(&acc.finish(fs, rbw, offset)?, cfg, geom)?);
    }

    let convergence = convergence_rows(&traces, &checkpoints, &cp_aclr, aclr_unpre);
    let n = s.n_symbols as f64;
    let margins: Vec<f64> = leak
        .iter()
        .zip(prepared.mask.gamma())
        .map(|(l, g)| crate::metrics::to_db(l / n / g))
        .collect();
    let evm = evm_acc.report()?;
    let total_iters: usize = stats.iter().map(|s| s.iterations).sum();
    let summary = Summary {
        scenario: s.name.clone(),
        algorithm: p.kind.to_string(),
        mask: s.mask.label.clone(),
        seed: s.seed,
        n_symbols: s.n_symbols,
        aclr_db: aclr,
        aclr_unprecoded_db: aclr_unpre,
        in_band_psd_dbm_per_100khz: psd.in_band_level(cfg),
        in_band_psd_unprecoded_dbm_per_100khz: psd_unpre.in_band_level(cfg),
        evm_pct: evm.overall_pct,
        evm_mean_symbol_pct: stats.iter().map(|s| s.evm_pct).sum::<f64>() / n,
        evm_max_symbol_pct: stats.iter().map(|s| s.evm_pct).fold(0.0, f64::max),
        max_sem_margin_db: margins.iter().copied().fold(DB_FLOOR, f64::max),
        sem_margins_db: margins,
        max_symbol_violation_db: stats.iter().map(|s| s.max_violation_db).fold(DB_FLOOR, f64::max),
        iterations_mean: total_iters as f64 / n,
        iterations_max: stats.iter().map(|s| s.iterations).max().unwrap_or(0),
        converged_symbols: stats.iter().filter(|s| s.converged).count(),
        dense_inversions: dense,
        calibration: prepared.calibration,
        timing: Timing {
            total_s: started.elapsed().as_secs_f64(),
            calibration_s,
            precode_s,
            per_symbol_s: precode_s / n,
            per_iteration_s: (total_iters > 0).then(|| precode_s / total_iters as f64),
        },
    };
    Ok(RunOutcome {
        summary,
        convergence,
        psd,
        psd_unprecoded: psd_unpre,
        evm,
        symbols: stats,
    })
}

/// Rows at the union of recorded iterations. A symbol that stopped early
/// contributes its last record to every later row.
fn convergence_rows(
    traces: &[Vec<IterationRecord>],
    checkpoints: &[usize],
    cp_aclr: &[f64],
    aclr_unpre: f64,
) -> Vec<ConvergenceRow> {
    let mut iters: Vec<usize> = traces.iter().flatten().map(|r| r.iteration).collect();
    iters.sort_unstable();
    iters.dedup();
    let mut pos = vec![0usize; traces.len()];
    let mut rows = Vec::with_capacity(iters.len());
    for it in iters {
        let mut obj = 0.0;
        let mut viol = DB_FLOOR;
        for (t, p) in traces.iter().zip(pos.iter_mut()) {
            while *p + 1 < t.len() && t[*p + 1].iteration <= it {
                *p += 1;
            }
            obj += t[*p].objective;
            viol = viol.max(t[*p].max_violation_db);
        }
        let aclr_db = if it == 0 {
            Some(aclr_unpre)
        } else {
            checkpoints.binary_search(&it).ok().map(|k| cp_aclr[k])
        };
        rows.push(ConvergenceRow {
            iteration: it,
            objective: obj / traces.len().max(1) as f64,
            violation_db: viol,
            aclr_db,
        });
    }
    rows
}

/// Overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

pub const OUTPUT_FILES: &[&str] = &["manifest.json", "convergence.csv", "psd.csv", "evm.csv", "summary.json"];

#[derive(Serialize)]
struct Manifest<'a> {
    library: &'static str,
    version: &'static str,
    scenario: &'a Scenario,
    seed: u64,
    threads: Option<usize>,
    calibration: &'a PowerCalibration,
    mask_points: &'a [f64],
    gamma: &'a [f64],
    sweep_order: Vec<usize>,
    aclr_checkpoints: Vec<usize>,
    outputs: &'static [&'static str],
}

/// Runs `s` with `opts` applied and writes the output files. Returns the
/// outcome and the output directory.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<(RunOutcome, PathBuf)> {
    let mut s = s.clone();
    if let Some(seed) = opts.seed {
        s.seed = seed;
    }
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| s.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&s.name));
    let outcome = with_threads(opts.threads, || {
        let started = Instant::now();
        let prepared = prepare(&s)?;
        let cal_s = started.elapsed().as_secs_f64();
        let outcome = simulate_timed(&s, &prepared, cal_s, started)?;
        Ok((outcome, prepared))
    })?;
    let (outcome, prepared) = outcome;
    write_outputs(&out_dir, &s, opts, &prepared, &outcome)?;
    Ok((outcome, out_dir))
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(0) => Err(Error::config("threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?
            .install(f),
        None => f(),
    }
}

fn write_outputs(dir: &Path, s: &Scenario, opts: &RunOptions, prepared: &Prepared, o: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let sweep_order = s
        .algorithm
        .ordering
        .clone()
        .unwrap_or_else(|| (0..prepared.mask.len()).collect());
    let manifest = Manifest {
        library: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: s,
        seed: s.seed,
        threads: opts.threads,
        calibration: &prepared.calibration,
        mask_points: prepared.mask.points(),
        gamma: prepared.mask.gamma(),
        sweep_order,
        aclr_checkpoints: if s.algorithm.kind.is_iterative() {
            aclr_checkpoints(iteration_budget(&s.algorithm))
        } else {
            Vec::new()
        },
        outputs: OUTPUT_FILES,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&o.summary)? + "\n")?;

    let mut csv = String::from("iteration,objective,violation_db,aclr_db\n");
    for r in &o.convergence {
        let aclr = r.aclr_db.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{}", r.iteration, r.objective, r.violation_db, aclr);
    }
    std::fs::write(dir.join("convergence.csv"), csv)?;

    let mut csv = String::from("freq_hz,psd_dbm_per_100khz,psd_unprecoded_dbm_per_100khz\n");
    for ((f, p), q) in o
        .psd
        .freqs_hz
        .iter()
        .zip(&o.psd.psd_dbm_per_100khz)
        .zip(&o.psd_unprecoded.psd_dbm_per_100khz)
    {
        let _ = writeln!(csv, "{f},{p},{q}");
    }
    std::fs::write(dir.join("psd.csv"), csv)?;

    let mut csv = String::from("prb_index,evm_pct\n");
    for (i, e) in o.evm.per_prb_pct.iter().enumerate() {
        let _ = writeln!(csv, "{i},{e}");
    }
    std::fs::write(dir.join("evm.csv"), csv)?;
    Ok(())
}

/// Benchmark settings. Iteration counts are chosen per size so that each
/// timed repetition does a similar amount of work.
#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub sizes: Vec<(usize, usize)>,
    pub reps: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            sizes: [128, 256, 512, 1024].iter().map(|&n| (n, 8)).collect(),
            reps: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_alloc: usize,
    pub m: usize,
    pub pocs_iters: usize,
    pub admm_iters: usize,
    pub ssp_sweeps: usize,
    /// Median seconds per iteration (per sweep for SSP).
    pub pocs_s: f64,
    pub admm_s: f64,
    pub ssp_sweep_s: f64,
    pub dense_inversions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSlopes {
    pub pocs: Option<f64>,
    pub admm: Option<f64>,
    pub ssp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub reps: usize,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log time against log `N_alloc`.
    pub slopes: BenchSlopes,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_alloc,m,pocs_s_per_iter,admm_s_per_iter,ssp_s_per_sweep,dense_inversions\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.n_alloc, r.m, r.pocs_s, r.admm_s, r.ssp_sweep_s, r.dense_inversions
            );
        }
        s
    }
}

/// Random problem of the given size: a centred allocation of `n_alloc`
/// subcarriers with the scenario's numerology and `m` points alternating
/// either side of the band, every constraint active.
pub fn bench_instance(s: &Scenario, n_alloc: usize, m: usize) -> Result<(Vec<Rank1Constraint>, Vec<Complex64>)> {
    let fft = (2 * n_alloc).next_power_of_two().max(16);
    let cfg = CarrierConfig::centered(
        fft,
        fft * 9 / 128,
        n_alloc,
        s.carrier.subcarrier_spacing_hz(),
        s.carrier.oversampling(),
    )?;
    let edge = n_alloc as f64 / 2.0 + 5.0;
    let points: Vec<f64> = (0..m)
        .map(|j| {
            let side = if j % 2 == 0 { -1.0 } else { 1.0 };
            side * (edge + 3.5 * (j / 2) as f64)
        })
        .collect();
    let a = build_leakage_matrix(&cfg, &points)?;
    let d = gen_ofdm_symbol_indexed(&cfg, s.constellation, s.seed, 0).into_inner();
    let gamma: Vec<f64> = a.apply(&d)?.iter().map(|p| 0.05 * p.norm_sqr().max(1e-12)).collect();
    Ok((a.constraints(&gamma)?, d))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct sizes or non-positive times.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Per-iteration timing of POCS, ADMM and SSP sweeps over problem sizes.
pub fn benchmark(s: &Scenario, sizes: &[(usize, usize)]) -> Result<BenchReport> {
    benchmark_with(
        s,
        &BenchOptions {
            sizes: sizes.to_vec(),
            ..BenchOptions::default()
        },
    )
}

pub fn benchmark_with(s: &Scenario, opts: &BenchOptions) -> Result<BenchReport> {
    if opts.reps == 0 {
        return Err(Error::config("reps", "must be at least 1"));
    }
    let mut rows = Vec::with_capacity(opts.sizes.len());
    for &(n, m) in &opts.sizes {
        if n == 0 {
            return Err(Error::config("sizes", "N_alloc must be positive"));
        }
        let (cs, d) = bench_instance(s, n, m)?;
        let work = (m.max(1) * n) as f64;
        let iters = ((1e7 / work) as usize).clamp(10, 50_000);
        let sweeps = ((1e7 / (work * n as f64)).ceil() as usize).clamp(1, 1000);
        let (mut tp, mut ta, mut ts) = (Vec::new(), Vec::new(), Vec::new());
        let mut dense = 0;
        // The timed runs repeat one instance; its POCS monotonicity warning
        // would otherwise print once per repetition.
        let level = log::max_level();
        log::set_max_level(level.min(log::LevelFilter::Error));
        for _ in 0..opts.reps {
            let t = Instant::now();
            pocs_precode_observed(&cs, &d, iters, f64::NEG_INFINITY, &mut |_, _| {})?;
            tp.push(t.elapsed().as_secs_f64() / iters as f64);

            let t = Instant::now();
            admm_precode_observed(&cs, &d, s.algorithm.rho, iters, f64::NEG_INFINITY, &mut |_, _| {})?;
            ta.push(t.elapsed().as_secs_f64() / iters as f64);

            let mut st = SspState::new(&cs, &d, s.algorithm.phase)?;
            let t = Instant::now();
            for _ in 0..sweeps {
                st.sweep(&cs, &d)?;
            }
            ts.push(t.elapsed().as_secs_f64() / sweeps as f64);
            dense += st.dense_inversions;
        }
        log::set_max_level(level);
        rows.push(BenchRow {
            n_alloc: n,
            m,
            pocs_iters: iters,
            admm_iters: iters,
            ssp_sweeps: sweeps,
            pocs_s: median(tp),
            admm_s: median(ta),
            ssp_sweep_s: median(ts),
            dense_inversions: dense,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.n_alloc as f64).collect();
    let slope = |f: fn(&BenchRow) -> f64| log_log_slope(&x, &rows.iter().map(f).collect::<Vec<_>>());
    let slopes = BenchSlopes {
        pocs: slope(|r| r.pocs_s),
        admm: slope(|r| r.admm_s),
        ssp: slope(|r| r.ssp_sweep_s),
    };
    Ok(BenchReport {
        reps: opts.reps,
        rows,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_cover_budget() {
        assert_eq!(aclr_checkpoints(3), vec![1, 2, 3]);
        assert_eq!(aclr_checkpoints(1), vec![1]);
        assert_eq!(aclr_checkpoints(60), vec![1, 2, 3, 5, 10, 20, 30, 50, 60]);
        assert_eq!(aclr_checkpoints(100), vec![1, 2, 3, 5, 10, 20, 30, 50, 100]);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 1.7).abs() < 1e-12);
        assert_eq!(log_log_slope(&[2.0], &[1.0]), None);
        assert_eq!(log_log_slope(&[2.0, 3.0], &[0.0, 1.0]), None);
    }

    fn rec(i: usize, v: f64) -> IterationRecord {
        IterationRecord {
            iteration: i,
            objective: i as f64,
            max_violation_db: v,
            primal_residual: None,
        }
    }

    #[test]
    fn rows_hold_last_record() {
        let a = vec![rec(0, 5.0), rec(1, 1.0), rec(2, -1.0)];
        let b = vec![rec(0, 3.0), rec(1, -2.0)];
        let rows = convergence_rows(&[a, b], &[1, 2], &[10.0, 20.0], 1.0);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].aclr_db, Some(1.0));
        assert_eq!(rows[2].violation_db, -1.0);
        assert_eq!(rows[2].objective, 1.5);
        assert_eq!(rows[2].aclr_db, Some(20.0));
    }
}

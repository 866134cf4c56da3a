use std::ops::Range;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{SimConfig, SirMetric};
use crate::channel::{apply_flat_fading, awgn, jakes_fading};
use crate::error::Result;
use crate::estimation::{IqiEstimate, Method, SubspaceEstimator};
use crate::impairment::{make_interference, mix_baseband, IqiParams, ObservationPair};
use crate::metrics::{estimator_nmse, output_sir_closed_form, output_sir_empirical, CdfCurve, SirSample};
use crate::parallel::{map_indexed, Execution};
use crate::waveforms::{frame_with_pilot, zadoff_chu};

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub snr_db: f64,
    pub sir_in_db: f64,
    pub frames: usize,
}

impl Cell {
    pub fn fingerprint(&self) -> String {
        format!("snr={};sir_in={};frames={}", self.snr_db, self.sir_in_db, self.frames)
    }

    /// Receiver noise variance per sample for unit symbol energy.
    pub fn noise_variance(&self) -> f64 {
        if self.snr_db.is_infinite() {
            0.0
        } else {
            10f64.powf(-self.snr_db / 10.0)
        }
    }
}

/// Cartesian product of the sweep axes, SNR outermost.
pub fn cells(cfg: &SimConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &snr_db in &cfg.snr_db {
        for &sir_in_db in &cfg.sir_in_db {
            for &frames in &cfg.frames {
                out.push(Cell {
                    index: out.len(),
                    snr_db,
                    sir_in_db,
                    frames,
                });
            }
        }
    }
    out
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent per-trial seed from the master seed and the (cell, trial) key.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell as u64) ^ trial as u64)
}

/// Everything a trial needs that does not change between trials.
#[derive(Debug, Clone)]
pub struct TrialContext {
    cfg: SimConfig,
    truth: IqiParams,
    pilot: Vec<Complex64>,
    estimator: SubspaceEstimator,
}

impl TrialContext {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let plan = cfg.plan()?;
        if plan.exceeds_coherence() {
            log::warn!(
                "segment length {} is not below the coherence length {:?}",
                plan.segment_len,
                plan.coherence_len
            );
        }
        let pilot = zadoff_chu(cfg.frame.pilot_len, cfg.frame.zc_root)?;
        let estimator = SubspaceEstimator::new(&pilot, plan, cfg.frame.frame_len())?;
        Ok(Self {
            cfg: cfg.clone(),
            truth: cfg.truth(),
            pilot,
            estimator,
        })
    }

    pub fn truth(&self) -> &IqiParams {
        &self.truth
    }

    /// Simulates the received branches for `cell.frames` frames.
    pub fn observe(&self, cell: &Cell, rng: &mut ChaCha8Rng) -> Result<ObservationPair> {
        let frame = &self.cfg.frame;
        let total = cell.frames * frame.frame_len();
        let mut symbols = Vec::with_capacity(total);
        for _ in 0..cell.frames {
            symbols.extend(frame_with_pilot(&self.pilot, frame.data_len, rng).samples);
        }
        let noise_var = cell.noise_variance();
        let fading = jakes_fading(&self.cfg.channel, total, rng)?;
        let noise = awgn(total, noise_var, rng);
        let s: Vec<Complex64> = apply_flat_fading(&symbols, &fading)?
            .iter()
            .zip(&noise)
            .map(|(x, z)| x + z)
            .collect();

        let fading_power = if self.cfg.channel.unit_power { 1.0 } else { 2.0 };
        let i = make_interference(
            total,
            cell.sir_in_db,
            fading_power + noise_var,
            noise_var,
            self.cfg.interference,
            &self.cfg.channel,
            rng,
        )?;
        Ok(mix_baseband(&s, &i, &self.truth)?.with_conditions(cell.sir_in_db, cell.snr_db))
    }

    fn data_spans(&self, frames: usize) -> Vec<Range<usize>> {
        let f = &self.cfg.frame;
        (0..frames)
            .map(|k| k * f.frame_len() + f.pilot_len..(k + 1) * f.frame_len())
            .collect()
    }

    fn measure(&self, obs: &ObservationPair, cell: &Cell, method: Method) -> Result<MethodOutcome> {
        let est = self.estimator.estimate(obs, cell.frames, method)?;
        let output_sir_db = match self.cfg.sir_metric {
            SirMetric::ClosedForm => output_sir_closed_form(&self.truth, &est, cell.sir_in_db)?,
            SirMetric::Empirical => output_sir_empirical(&obs.gather(&self.data_spans(cell.frames)), &est)?,
        };
        Ok(MethodOutcome {
            output_sir_db,
            nmse: estimator_nmse(&est, &self.truth).value,
            estimate: est,
        })
    }

    /// One Monte Carlo trial: one fresh realization, every configured method.
    pub fn run_trial(&self, cell: &Cell, trial: usize, seed: u64) -> TrialRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outcomes: Vec<(Method, std::result::Result<MethodOutcome, String>)> = match self.observe(cell, &mut rng) {
            Ok(obs) => self
                .cfg
                .methods
                .iter()
                .map(|&m| (m, self.measure(&obs, cell, m).map_err(|e| e.to_string())))
                .collect(),
            Err(e) => {
                let reason = e.to_string();
                self.cfg.methods.iter().map(|&m| (m, Err(reason.clone()))).collect()
            }
        };
        for (method, outcome) in &outcomes {
            if let Err(reason) = outcome {
                log::warn!("{} trial {trial} {method}: {reason}", cell.fingerprint());
            }
        }
        TrialRecord {
            cell: *cell,
            trial,
            outcomes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub output_sir_db: f64,
    pub nmse: f64,
    pub estimate: IqiEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub cell: Cell,
    pub trial: usize,
    pub outcomes: Vec<(Method, std::result::Result<MethodOutcome, String>)>,
}

impl TrialRecord {
    pub fn samples(&self) -> Vec<SirSample> {
        self.outcomes
            .iter()
            .filter_map(|(method, o)| {
                o.as_ref().ok().map(|o| SirSample {
                    output_sir_db: o.output_sir_db,
                    method: *method,
                    trial: self.trial,
                    fingerprint: self.cell.fingerprint(),
                })
            })
            .collect()
    }
}

/// Runs a single trial for `cell` from scratch.
pub fn run_trial(cfg: &SimConfig, cell: &Cell, trial_seed: u64) -> Result<Vec<SirSample>> {
    Ok(TrialContext::new(cfg)?.run_trial(cell, 0, trial_seed).samples())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub failures: usize,
    pub median_sir_db: Option<f64>,
    pub p10_sir_db: Option<f64>,
    pub p90_sir_db: Option<f64>,
    pub mean_nmse: Option<f64>,
    pub clamp_rate: f64,
    pub annotation: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub method: Method,
    pub cell: Cell,
    /// `None` when every trial failed.
    pub cdf: Option<CdfCurve>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: &'static str,
    pub generator: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: SimConfig,
    pub cells: Vec<CellResult>,
    pub provenance: Provenance,
}

impl RunResult {
    pub fn find(&self, method: Method, snr_db: f64, sir_in_db: f64, frames: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.method == method && c.cell.snr_db == snr_db && c.cell.sir_in_db == sir_in_db && c.cell.frames == frames
        })
    }
}

fn summarize(method: Method, records: &[&TrialRecord]) -> (Option<CdfCurve>, Summary) {
    let ok: Vec<&MethodOutcome> = records
        .iter()
        .flat_map(|r| r.outcomes.iter())
        .filter(|(m, _)| *m == method)
        .filter_map(|(_, o)| o.as_ref().ok())
        .collect();
    let trials = records.len();
    let failures = trials - ok.len();
    let clamped = ok.iter().filter(|o| o.estimate.clamped).count();
    let cdf = CdfCurve::from_values(ok.iter().map(|o| o.output_sir_db)).ok();
    let annotation = if ok.is_empty() {
        Some("all trials failed".to_string())
    } else if clamped == ok.len() {
        Some("all estimates clamped".to_string())
    } else {
        None
    };
    let summary = Summary {
        trials,
        failures,
        median_sir_db: cdf.as_ref().map(|c| c.median()),
        p10_sir_db: cdf.as_ref().map(|c| c.quantile(0.1)),
        p90_sir_db: cdf.as_ref().map(|c| c.quantile(0.9)),
        mean_nmse: (!ok.is_empty()).then(|| ok.iter().map(|o| o.nmse).sum::<f64>() / ok.len() as f64),
        clamp_rate: if ok.is_empty() {
            0.0
        } else {
            clamped as f64 / ok.len() as f64
        },
        annotation,
    };
    (cdf, summary)
}

/// Full Cartesian sweep using the default execution mode.
pub fn run_sweep(cfg: &SimConfig) -> Result<RunResult> {
    run_sweep_with(cfg, Execution::default())
}

pub fn run_sweep_with(cfg: &SimConfig, exec: Execution) -> Result<RunResult> {
    let ctx = TrialContext::new(cfg)?;
    let grid = cells(cfg);
    let per_cell = cfg.trials;
    let records = map_indexed(grid.len() * per_cell, exec, |k| {
        let cell = &grid[k / per_cell];
        let trial = k % per_cell;
        ctx.run_trial(cell, trial, trial_seed(cfg.seed, cell.index, trial))
    });

    let mut out = Vec::with_capacity(grid.len() * cfg.methods.len());
    for (cell, chunk) in grid.iter().zip(records.chunks(per_cell)) {
        let refs: Vec<&TrialRecord> = chunk.iter().collect();
        for &method in &cfg.methods {
            let (cdf, summary) = summarize(method, &refs);
            out.push(CellResult {
                method,
                cell: *cell,
                cdf,
                summary,
            });
        }
    }
    Ok(RunResult {
        config: cfg.clone(),
        cells: out,
        provenance: Provenance {
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION"),
            generator: env!("CARGO_PKG_NAME"),
        },
    })
}

//! Spectator-frequency sweeps of the combined functional `J`.
//!
//! Every sweep point propagates the tracked columns once and evaluates `J` at
//! every checkpoint; the resulting [`PointTrace`] is then summarized either
//! by its minimum over time or by its value at a fixed time.

use log::{info, warn};
use rayon::prelude::*;

use crate::device::{build_operators, DeviceSpec, OperatorSet};
use crate::error::{invalid, Error, Result};
use crate::flux::FluxPulse;
use crate::metrics::{combined_j, extract_blocks, j_pe, GateBlocks, JBreakdown, MetricWeights};
use crate::propagation::{checkpoint_times, propagate_observed, PropagationConfig};
use crate::num::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvalMode<T> {
    MinOverTime,
    /// Evaluate at this time (ns) only.
    FixedTime(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig<T> {
    /// Spectator frequencies `ω_3` (rad/ns), strictly increasing.
    pub grid: Vec<T>,
    /// Spectator anharmonicity `α_3` (rad/ns).
    pub spectator_anharmonicity: T,
    pub mode: EvalMode<T>,
    pub weights: MetricWeights<T>,
    pub propagation: PropagationConfig<T>,
    /// Worker threads; 0 lets the thread pool decide.
    pub jobs: usize,
}

impl<T: Real> SweepConfig<T> {
    pub fn validate(&self, pulse: &FluxPulse<T>) -> Result<()> {
        if self.grid.is_empty() {
            return Err(invalid("grid", "must contain at least one frequency"));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid", "must be strictly increasing"));
        }
        if self.grid.iter().any(|w| !(*w > T::zero())) {
            return Err(invalid("grid", "frequencies must be positive"));
        }
        if let EvalMode::FixedTime(t) = self.mode {
            if !(t >= T::zero() && t <= pulse.duration) {
                return Err(invalid("fixed_t", format!("{t} ns lies outside [0, {}]", pulse.duration)));
            }
        }
        self.propagation.validate()
    }
}

/// `n` points `start, start + step, …` up to and including `stop` (within
/// rounding), in rad/ns from GHz inputs.
pub fn linear_grid_ghz<T: Real>(start: f64, stop: f64, step: f64) -> Result<Vec<T>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(invalid("grid", "need start ≤ stop and step > 0"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| crate::num::ghz(start + step * k as f64)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointStatus {
    Ok,
    Failed(String),
}

impl std::fmt::Display for PointStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Ok => f.write_str("ok"),
            Self::Failed(reason) => write!(f, "failed: {reason}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumPoint<T> {
    /// `ω_3` (rad/ns).
    pub omega3: T,
    /// `J` and its components at `time`.
    pub value: JBreakdown<T>,
    /// Argmin time in min-over-time mode, the evaluation time otherwise.
    pub time: T,
    pub status: PointStatus,
}

impl<T: Real> SpectrumPoint<T> {
    pub(crate) fn failed(omega3: T, reason: String) -> Self {
        let nan = T::lit(f64::NAN);
        Self {
            omega3,
            value: JBreakdown { j: nan, j_pe0: nan, j_pe1: nan, ws_s: nan },
            time: nan,
            status: PointStatus::Failed(reason),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == PointStatus::Ok
    }
}

/// `J` at every checkpoint of one propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTrace<T> {
    pub omega3: T,
    pub times: Vec<T>,
    pub values: Vec<JBreakdown<T>>,
}

impl<T: Real> PointTrace<T> {
    /// Minimum of `J`; ties go to the earliest time.
    pub fn min_over_time(&self) -> Result<(JBreakdown<T>, T)> {
        argmin(self.values.iter().copied().zip(self.times.iter().copied()))
    }

    /// Value at the checkpoint nearest to `t`.
    pub fn at_time(&self, t: T) -> Result<(JBreakdown<T>, T)> {
        let k = nearest_index(&self.times, t).ok_or(Error::EmptySequence)?;
        Ok((self.values[k], self.times[k]))
    }

    pub fn summarize(&self, mode: EvalMode<T>) -> Result<SpectrumPoint<T>> {
        let (value, time) = match mode {
            EvalMode::MinOverTime => self.min_over_time()?,
            EvalMode::FixedTime(t) => self.at_time(t)?,
        };
        Ok(SpectrumPoint { omega3: self.omega3, value, time, status: PointStatus::Ok })
    }
}

fn nearest_index<T: Real>(times: &[T], t: T) -> Option<usize> {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (*a.1 - t).abs().partial_cmp(&(*b.1 - t).abs()).expect("finite times"))
        .map(|(k, _)| k)
}

fn argmin<T: Real>(seq: impl Iterator<Item = (JBreakdown<T>, T)>) -> Result<(JBreakdown<T>, T)> {
    let mut best: Option<(JBreakdown<T>, T)> = None;
    for (value, t) in seq {
        match best {
            Some((b, _)) if !(value.j < b.j) => {}
            _ => best = Some((value, t)),
        }
    }
    best.ok_or(Error::EmptySequence)
}

/// Minimum of `J` over a sequence of blocks and the time at which it occurs.
pub fn min_over_time<T: Real>(blocks: &[GateBlocks<T>], w: &MetricWeights<T>) -> Result<(JBreakdown<T>, T)> {
    argmin(blocks.iter().map(|b| (combined_j(b, w), b.time)))
}

/// Snaps `t` to the nearest checkpoint of a protocol of length `duration`,
/// warning when it moves.
pub fn snap_to_checkpoint<T: Real>(t: T, duration: T, interval: T) -> T {
    let times = checkpoint_times(duration, interval);
    let k = nearest_index(&times, t).expect("checkpoint list is never empty");
    let snapped = times[k];
    if (snapped - t).abs() > T::lit(1e-9) {
        warn!("fixed time {t} ns is off the checkpoint grid; using {snapped} ns");
    }
    snapped
}

/// Propagates one device and evaluates `J` at every checkpoint.
pub fn trace_point<T: Real>(
    ops: &OperatorSet<T>,
    pulse: &FluxPulse<T>,
    propagation: &PropagationConfig<T>,
    weights: &MetricWeights<T>,
) -> Result<PointTrace<T>> {
    let basis = ops.basis();
    let mut times = Vec::new();
    let mut values = Vec::new();
    propagate_observed(ops, pulse, propagation, |t, v| {
        let blocks = extract_blocks(v, &propagation.columns, &basis, t)?;
        times.push(t);
        values.push(combined_j(&blocks, weights));
        Ok(())
    })?;
    Ok(PointTrace { omega3: ops.spec().qubits[2].frequency, times, values })
}

/// Runs `f` on a pool of `jobs` threads (`0`: rayon default).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid("jobs", e.to_string()))?;
    Ok(pool.install(f))
}

/// Traces every grid point. Failed points carry their error.
pub fn sweep_traces<T: Real>(
    template: &DeviceSpec<T>,
    pulse: &FluxPulse<T>,
    cfg: &SweepConfig<T>,
) -> Result<Vec<(T, Result<PointTrace<T>>)>> {
    cfg.validate(pulse)?;
    pulse.validate()?;
    let run = |&omega3: &T| {
        let device = template.with_spectator(omega3, cfg.spectator_anharmonicity);
        let trace = build_operators(&device)
            .and_then(|ops| trace_point(&ops, pulse, &cfg.propagation, &cfg.weights));
        match &trace {
            Ok(_) => info!("ω3/2π = {:.4} GHz done", crate::num::to_ghz(omega3)),
            Err(e) => warn!("ω3/2π = {:.4} GHz failed: {e}", crate::num::to_ghz(omega3)),
        }
        (omega3, trace)
    };
    with_jobs(cfg.jobs, || cfg.grid.par_iter().map(run).collect())
}

/// Summarizes traces; failed traces become failed points.
pub fn summarize_traces<T: Real>(
    traces: &[(T, Result<PointTrace<T>>)],
    mode: EvalMode<T>,
) -> Vec<SpectrumPoint<T>> {
    traces
        .iter()
        .map(|(omega3, trace)| match trace {
            Ok(tr) => tr.summarize(mode).unwrap_or_else(|e| SpectrumPoint::failed(*omega3, e.to_string())),
            Err(e) => SpectrumPoint::failed(*omega3, e.to_string()),
        })
        .collect()
}

/// The PE spectrum: one point per `ω_3`, ordered like the grid.
pub fn spectrum_sweep<T: Real>(
    template: &DeviceSpec<T>,
    pulse: &FluxPulse<T>,
    cfg: &SweepConfig<T>,
) -> Result<Vec<SpectrumPoint<T>>> {
    let mode = match cfg.mode {
        EvalMode::FixedTime(t) => {
            EvalMode::FixedTime(snap_to_checkpoint(t, pulse.duration, cfg.propagation.eval_interval))
        }
        m => m,
    };
    Ok(summarize_traces(&sweep_traces(template, pulse, cfg)?, mode))
}

/// [`spectrum_sweep`] evaluated only at `t` (snapped to the checkpoint grid).
pub fn fixed_time_spectrum<T: Real>(
    template: &DeviceSpec<T>,
    pulse: &FluxPulse<T>,
    cfg: &SweepConfig<T>,
    t: T,
) -> Result<Vec<SpectrumPoint<T>>> {
    let cfg = SweepConfig { mode: EvalMode::FixedTime(t), ..cfg.clone() };
    spectrum_sweep(template, pulse, &cfg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CalibrationStatus {
    Calibrated,
    /// No checkpoint reached the threshold; the best value is reported.
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration<T> {
    pub t_star: T,
    pub j_pe: T,
    pub status: CalibrationStatus,
}

/// Default acceptance threshold on the two-qubit `J_PE`.
pub const CALIBRATION_THRESHOLD: f64 = 0.05;

/// Picks the checkpoint with minimal `J_PE` of the spectator-`|0⟩` block.
pub fn calibrate_from_blocks<T: Real>(
    blocks: &[GateBlocks<T>],
    w: &MetricWeights<T>,
    threshold: T,
) -> Result<Calibration<T>> {
    calibrate_from_values(blocks.iter().map(|b| (b.time, j_pe(&b.u0, w))), threshold)
}

fn calibrate_from_values<T: Real>(
    values: impl Iterator<Item = (T, T)>,
    threshold: T,
) -> Result<Calibration<T>> {
    let mut best: Option<(T, T)> = None;
    for (t, j) in values {
        match best {
            Some((_, b)) if !(j < b) => {}
            _ => best = Some((t, j)),
        }
    }
    let (t_star, j_pe) = best.ok_or(Error::EmptySequence)?;
    let status = if j_pe < threshold { CalibrationStatus::Calibrated } else { CalibrationStatus::Failed };
    Ok(Calibration { t_star, j_pe, status })
}

/// Runs the protocol with the spectator decoupled (`g_3 = 0`) and returns the
/// time of minimal two-qubit `J_PE`.
pub fn calibrate_protocol<T: Real>(
    spec: &DeviceSpec<T>,
    pulse: &FluxPulse<T>,
    propagation: &PropagationConfig<T>,
    w: &MetricWeights<T>,
    threshold: T,
) -> Result<Calibration<T>> {
    let ops = build_operators(&spec.decoupled_spectator())?;
    let basis = ops.basis();
    let mut values = Vec::new();
    propagate_observed(&ops, pulse, propagation, |t, v| {
        let blocks = extract_blocks(v, &propagation.columns, &basis, t)?;
        values.push((t, j_pe(&blocks.u0, w)));
        Ok(())
    })?;
    calibrate_from_values(values.into_iter(), threshold)
}

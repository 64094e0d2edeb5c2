//! Run configuration: a sectioned `key = value` file (TOML syntax).
//!
//! Values keep the units of the file (GHz, MHz, ns); the accessors convert to
//! the simulator's rad/ns. Every key is required unless noted on its field.

use std::fmt;
use std::path::Path;

use pespec::device::{CouplerSpec, DeviceSpec, Occupations, TransmonSpec};
use pespec::flux::FluxPulse;
use pespec::metrics::MetricWeights;
use pespec::num::{ghz, mhz};
use pespec::propagation::{Method, PropagationConfig};
use pespec::resonance::ResonanceConfig;
use pespec::spectrum::{linear_grid_ghz, EvalMode, SweepConfig};
use serde::{Deserialize, Serialize};
use toml::Spanned;

pub const PRESETS: [(&str, &str); 2] = [
    ("cz_ganzhorn", include_str!("../presets/cz_ganzhorn.toml")),
    ("iswap_mckay", include_str!("../presets/iswap_mckay.toml")),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitConfig {
    pub frequency_ghz: f64,
    pub anharmonicity_mhz: f64,
    pub coupling_mhz: f64,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplerConfig {
    pub max_frequency_ghz: f64,
    pub anharmonicity_mhz: f64,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriveConfig {
    /// Flux offset `Θ` (flux quanta).
    pub offset: f64,
    /// Flux amplitude `δ` (flux quanta).
    pub amplitude: f64,
    pub frequency_mhz: f64,
    pub flank_width_ns: f64,
    pub duration_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt_ns: f64,
    pub eval_interval_ns: f64,
    /// Optional, default `magnus4`.
    pub method: String,
    pub w_u: f64,
    pub w_s: f64,
    /// Optional, default empty.
    pub protocol_states: Vec<Occupations>,
    /// Optional, default 0.05.
    pub calibration_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSection {
    pub start_ghz: f64,
    pub stop_ghz: f64,
    pub step_ghz: f64,
    /// `min-over-time` or `fixed-time`.
    pub mode: String,
    /// Optional; required by `fixed-time` and `tomo`, defaults to the
    /// duration there.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_t_ns: Option<f64>,
    /// Optional, default 0 (one worker per core).
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceSection {
    pub frozen_coupler_ghz: f64,
    pub sigma_mhz: f64,
    /// Points with `J` below this define the resonance-measure baseline.
    pub baseline_floor: f64,
    /// Qubit quanta considered for the static-resonance catalogue.
    pub max_excitations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: String,
    /// Optional, default false.
    pub svg: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub qubit1: QubitConfig,
    pub qubit2: QubitConfig,
    pub qubit3: QubitConfig,
    pub coupler: CouplerConfig,
    pub drive: DriveConfig,
    pub sim: SimConfig,
    pub sweep: SweepSection,
    pub resonance: ResonanceSection,
    pub output: OutputConfig,
}

/// Every problem found in a configuration file, one per line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub messages: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.messages.join("\n"))
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn single(msg: impl Into<String>) -> Self {
        Self { messages: vec![msg.into()] }
    }
}

// Raw mirror of the file: every key optional so that all missing keys can be
// reported at once, every value spanned for line numbers.

type S<T> = Option<Spanned<T>>;

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawQubit {
    frequency_ghz: S<f64>,
    anharmonicity_mhz: S<f64>,
    coupling_mhz: S<f64>,
    levels: S<i64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCoupler {
    max_frequency_ghz: S<f64>,
    anharmonicity_mhz: S<f64>,
    levels: S<i64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    offset: S<f64>,
    amplitude: S<f64>,
    frequency_mhz: S<f64>,
    flank_width_ns: S<f64>,
    duration_ns: S<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt_ns: S<f64>,
    eval_interval_ns: S<f64>,
    method: S<String>,
    w_u: S<f64>,
    w_s: S<f64>,
    protocol_states: S<Vec<[i64; 4]>>,
    calibration_threshold: S<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    start_ghz: S<f64>,
    stop_ghz: S<f64>,
    step_ghz: S<f64>,
    mode: S<String>,
    fixed_t_ns: S<f64>,
    jobs: S<i64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawResonance {
    frozen_coupler_ghz: S<f64>,
    sigma_mhz: S<f64>,
    baseline_floor: S<f64>,
    max_excitations: S<i64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: S<String>,
    svg: S<bool>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    qubit1: RawQubit,
    #[serde(default)]
    qubit2: RawQubit,
    #[serde(default)]
    qubit3: RawQubit,
    #[serde(default)]
    coupler: RawCoupler,
    #[serde(default)]
    drive: RawDrive,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    resonance: RawResonance,
    #[serde(default)]
    output: RawOutput,
}

/// Collects values and problems while converting the raw file.
struct Checker<'a> {
    src: &'a str,
    errors: Vec<String>,
}

impl<'a> Checker<'a> {
    fn line(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].matches('\n').count() + 1
    }

    fn missing(&mut self, section: &str, key: &str) {
        self.errors.push(format!("missing key `{section}.{key}`"));
    }

    fn bad(&mut self, section: &str, key: &str, offset: usize, why: &str) {
        let line = self.line(offset);
        self.errors.push(format!("line {line}: `{section}.{key}` {why}"));
    }

    /// A required float, checked with `ok`.
    fn float(&mut self, section: &str, key: &str, v: &S<f64>, ok: fn(f64) -> bool, why: &str) -> f64 {
        match v {
            None => {
                self.missing(section, key);
                f64::NAN
            }
            Some(s) => {
                let x = *s.get_ref();
                if !x.is_finite() {
                    self.bad(section, key, s.span().start, "must be finite");
                } else if !ok(x) {
                    self.bad(section, key, s.span().start, why);
                }
                x
            }
        }
    }

    fn count(&mut self, section: &str, key: &str, v: &S<i64>, min: i64) -> usize {
        match v {
            None => {
                self.missing(section, key);
                0
            }
            Some(s) => {
                let x = *s.get_ref();
                if x < min {
                    self.bad(section, key, s.span().start, &format!("must be at least {min}"));
                    0
                } else {
                    x as usize
                }
            }
        }
    }

    fn qubit(&mut self, section: &str, raw: &RawQubit) -> QubitConfig {
        QubitConfig {
            frequency_ghz: self.float(section, "frequency_ghz", &raw.frequency_ghz, |x| x > 0.0, "must be positive"),
            anharmonicity_mhz: self.float(section, "anharmonicity_mhz", &raw.anharmonicity_mhz, |x| x >= 0.0, "must be non-negative"),
            coupling_mhz: self.float(section, "coupling_mhz", &raw.coupling_mhz, |x| x >= 0.0, "must be non-negative"),
            levels: self.count(section, "levels", &raw.levels, 2),
        }
    }
}

fn positive(x: f64) -> bool {
    x > 0.0
}

fn any(_: f64) -> bool {
    true
}

/// Parses and validates configuration text.
pub fn parse_str(src: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| {
        let line = e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
        let msg = e.message().to_string();
        ConfigError::single(match line {
            Some(l) => format!("line {l}: {msg}"),
            None => msg,
        })
    })?;
    let mut c = Checker { src, errors: Vec::new() };
    let qubit1 = c.qubit("qubit1", &raw.qubit1);
    let qubit2 = c.qubit("qubit2", &raw.qubit2);
    let qubit3 = c.qubit("qubit3", &raw.qubit3);
    let coupler = CouplerConfig {
        max_frequency_ghz: c.float("coupler", "max_frequency_ghz", &raw.coupler.max_frequency_ghz, positive, "must be positive"),
        anharmonicity_mhz: c.float("coupler", "anharmonicity_mhz", &raw.coupler.anharmonicity_mhz, |x| x >= 0.0, "must be non-negative"),
        levels: c.count("coupler", "levels", &raw.coupler.levels, 2),
    };
    let d = &raw.drive;
    let drive = DriveConfig {
        offset: c.float("drive", "offset", &d.offset, any, ""),
        amplitude: c.float("drive", "amplitude", &d.amplitude, |x| x >= 0.0, "must be non-negative"),
        frequency_mhz: c.float("drive", "frequency_mhz", &d.frequency_mhz, positive, "must be positive"),
        flank_width_ns: c.float("drive", "flank_width_ns", &d.flank_width_ns, |x| x >= 0.0, "must be non-negative"),
        duration_ns: c.float("drive", "duration_ns", &d.duration_ns, positive, "must be positive"),
    };
    if let (Some(o), Some(a)) = (&d.offset, &d.amplitude) {
        if o.get_ref().abs() + a.get_ref() >= 0.5 {
            c.bad("drive", "amplitude", a.span().start, "plus |offset| must stay below half a flux quantum");
        }
    }
    let s = &raw.sim;
    let method = match &s.method {
        None => Method::default().to_string(),
        Some(m) => {
            if m.get_ref().parse::<Method>().is_err() {
                c.bad("sim", "method", m.span().start, "must be `magnus4`, `midpoint-exponential` or `rk4`");
            }
            m.get_ref().clone()
        }
    };
    let protocol_states = match &s.protocol_states {
        None => Vec::new(),
        Some(p) => {
            if p.get_ref().iter().flatten().any(|&n| n < 0) {
                c.bad("sim", "protocol_states", p.span().start, "occupations must be non-negative");
            }
            p.get_ref().iter().map(|o| o.map(|n| n.max(0) as usize)).collect()
        }
    };
    let sim = SimConfig {
        dt_ns: c.float("sim", "dt_ns", &s.dt_ns, positive, "must be positive"),
        eval_interval_ns: c.float("sim", "eval_interval_ns", &s.eval_interval_ns, positive, "must be positive"),
        method,
        w_u: c.float("sim", "w_u", &s.w_u, |x| (0.0..=1.0).contains(&x), "must lie in [0, 1]"),
        w_s: c.float("sim", "w_s", &s.w_s, |x| x >= 0.0, "must be non-negative"),
        protocol_states,
        calibration_threshold: match &s.calibration_threshold {
            None => pespec::spectrum::CALIBRATION_THRESHOLD,
            t => c.float("sim", "calibration_threshold", t, positive, "must be positive"),
        },
    };
    if let (Some(dt), Some(ev)) = (&s.dt_ns, &s.eval_interval_ns) {
        if ev.get_ref() < dt.get_ref() {
            c.bad("sim", "eval_interval_ns", ev.span().start, "must not be shorter than dt_ns");
        }
    }
    let w = &raw.sweep;
    let mode = match &w.mode {
        None => {
            c.missing("sweep", "mode");
            String::new()
        }
        Some(m) => {
            if !matches!(m.get_ref().as_str(), "min-over-time" | "fixed-time") {
                c.bad("sweep", "mode", m.span().start, "must be `min-over-time` or `fixed-time`");
            }
            m.get_ref().clone()
        }
    };
    let sweep = SweepSection {
        start_ghz: c.float("sweep", "start_ghz", &w.start_ghz, positive, "must be positive"),
        stop_ghz: c.float("sweep", "stop_ghz", &w.stop_ghz, positive, "must be positive"),
        step_ghz: c.float("sweep", "step_ghz", &w.step_ghz, positive, "must be positive"),
        mode,
        fixed_t_ns: match &w.fixed_t_ns {
            None => None,
            t => Some(c.float("sweep", "fixed_t_ns", t, |x| x >= 0.0, "must be non-negative")),
        },
        jobs: match &w.jobs {
            None => 0,
            j => c.count("sweep", "jobs", j, 0),
        },
    };
    if let (Some(a), Some(b)) = (&w.start_ghz, &w.stop_ghz) {
        if b.get_ref() < a.get_ref() {
            c.bad("sweep", "stop_ghz", b.span().start, "must not be below start_ghz");
        }
    }
    if let (Some(t), Some(dur)) = (&w.fixed_t_ns, &d.duration_ns) {
        if t.get_ref() > dur.get_ref() {
            c.bad("sweep", "fixed_t_ns", t.span().start, "must not exceed drive.duration_ns");
        }
    }
    let r = &raw.resonance;
    let resonance = ResonanceSection {
        frozen_coupler_ghz: c.float("resonance", "frozen_coupler_ghz", &r.frozen_coupler_ghz, positive, "must be positive"),
        sigma_mhz: c.float("resonance", "sigma_mhz", &r.sigma_mhz, positive, "must be positive"),
        baseline_floor: c.float("resonance", "baseline_floor", &r.baseline_floor, positive, "must be positive"),
        max_excitations: c.count("resonance", "max_excitations", &r.max_excitations, 1),
    };
    let output = OutputConfig {
        dir: match &raw.output.dir {
            None => {
                c.missing("output", "dir");
                String::new()
            }
            Some(d) => {
                if d.get_ref().is_empty() {
                    c.bad("output", "dir", d.span().start, "must not be empty");
                }
                d.get_ref().clone()
            }
        },
        svg: raw.output.svg.as_ref().is_some_and(|s| *s.get_ref()),
    };
    if !c.errors.is_empty() {
        return Err(ConfigError { messages: c.errors });
    }
    let cfg = RunConfig { qubit1, qubit2, qubit3, coupler, drive, sim, sweep, resonance, output };
    // remaining cross-field checks live in the simulator types
    if let Err(e) = cfg.device().and_then(|dev| {
        dev.validate()?;
        cfg.pulse().validate()
    }) {
        return Err(ConfigError::single(e.to_string()));
    }
    Ok(cfg)
}

/// Reads a configuration file, or a bundled preset by name when no such
/// file exists.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    if !path.exists() {
        let name = path.to_string_lossy();
        if let Some((_, src)) = PRESETS.iter().find(|(n, _)| *n == name) {
            return parse_str(src);
        }
    }
    let src = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::single(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&src)
}

pub fn preset(name: &str) -> Option<RunConfig> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| parse_str(src).expect("bundled presets are valid"))
}

/// Configuration text that [`parse_str`] maps back to `cfg`.
pub fn serialize(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration is plain data")
}

fn transmon(q: &QubitConfig) -> TransmonSpec<f64> {
    TransmonSpec {
        frequency: ghz(q.frequency_ghz),
        anharmonicity: mhz(q.anharmonicity_mhz),
        coupling: mhz(q.coupling_mhz),
        levels: q.levels,
    }
}

impl RunConfig {
    pub fn device(&self) -> pespec::Result<DeviceSpec<f64>> {
        DeviceSpec::new(
            [transmon(&self.qubit1), transmon(&self.qubit2), transmon(&self.qubit3)],
            CouplerSpec::new(ghz(self.coupler.max_frequency_ghz), mhz(self.coupler.anharmonicity_mhz), self.coupler.levels)?,
        )
    }

    pub fn pulse(&self) -> FluxPulse<f64> {
        FluxPulse {
            offset: self.drive.offset,
            amplitude: self.drive.amplitude,
            frequency: mhz(self.drive.frequency_mhz),
            flank_width: self.drive.flank_width_ns,
            duration: self.drive.duration_ns,
        }
    }

    pub fn method(&self) -> Method {
        self.sim.method.parse().expect("validated on parse")
    }

    pub fn propagation(&self) -> pespec::Result<PropagationConfig<f64>> {
        let columns = pespec::propagation::default_columns(&self.sim.protocol_states);
        PropagationConfig::new(self.sim.dt_ns, self.sim.eval_interval_ns, columns, self.method())
    }

    pub fn weights(&self) -> pespec::Result<MetricWeights<f64>> {
        MetricWeights::new(self.sim.w_u, self.sim.w_s)
    }

    /// Sweep grid in GHz, as written in the file.
    pub fn grid_ghz(&self) -> Vec<f64> {
        let s = &self.sweep;
        let n = ((s.stop_ghz - s.start_ghz) / s.step_ghz + 1e-9).floor() as usize + 1;
        (0..n).map(|k| s.start_ghz + s.step_ghz * k as f64).collect()
    }

    pub fn mode(&self) -> EvalMode<f64> {
        match self.sweep.mode.as_str() {
            "fixed-time" => EvalMode::FixedTime(self.fixed_time()),
            _ => EvalMode::MinOverTime,
        }
    }

    /// `sweep.fixed_t_ns`, or the protocol duration.
    pub fn fixed_time(&self) -> f64 {
        self.sweep.fixed_t_ns.unwrap_or(self.drive.duration_ns)
    }

    pub fn sweep_config(&self) -> pespec::Result<SweepConfig<f64>> {
        let s = &self.sweep;
        Ok(SweepConfig {
            grid: linear_grid_ghz(s.start_ghz, s.stop_ghz, s.step_ghz)?,
            spectator_anharmonicity: mhz(self.qubit3.anharmonicity_mhz),
            mode: self.mode(),
            weights: self.weights()?,
            propagation: self.propagation()?,
            jobs: s.jobs,
        })
    }

    pub fn resonance_config(&self) -> ResonanceConfig<f64> {
        let mut cfg = ResonanceConfig::new(
            ghz(self.resonance.frozen_coupler_ghz),
            mhz(self.drive.frequency_mhz),
            &self.sim.protocol_states,
        );
        cfg.sigma = mhz(self.resonance.sigma_mhz);
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_library_parameter_sets() {
        let cz = preset("cz_ganzhorn").unwrap();
        let lib = pespec::presets::cz_ganzhorn::<f64>(ghz(cz.qubit3.frequency_ghz), mhz(cz.qubit3.anharmonicity_mhz));
        assert_eq!(cz.device().unwrap(), lib.device);
        assert_eq!(cz.pulse(), lib.pulse);
        assert_eq!(ghz::<f64>(cz.resonance.frozen_coupler_ghz), lib.frozen_coupler);
        assert_eq!(cz.sim.protocol_states, lib.protocol_states);

        let sw = preset("iswap_mckay").unwrap();
        let lib = pespec::presets::iswap_mckay::<f64>(ghz(sw.qubit3.frequency_ghz));
        assert_eq!(sw.device().unwrap(), lib.device);
        assert_eq!(sw.pulse(), lib.pulse);
    }

    #[test]
    fn default_grids() {
        assert_eq!(preset("cz_ganzhorn").unwrap().grid_ghz().len(), 221);
        let g = preset("iswap_mckay").unwrap().grid_ghz();
        assert_eq!((g.len(), g[0]), (121, 4.2));
    }

    #[test]
    fn empty_file_lists_every_missing_key() {
        let err = parse_str("").unwrap_err();
        for key in ["qubit1.frequency_ghz", "qubit3.levels", "coupler.max_frequency_ghz", "drive.duration_ns", "sim.dt_ns", "sweep.mode", "resonance.sigma_mhz", "output.dir"] {
            assert!(err.messages.iter().any(|m| m.contains(key)), "{key} not reported: {err}");
        }
        // optional keys are not reported
        assert!(!err.messages.iter().any(|m| m.contains("sim.method") || m.contains("fixed_t_ns")));
        assert_eq!(err.messages.len(), 33);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let src = PRESETS[0].1.replace("dt_ns = 0.005", "dt_ns = -1.0");
        let line = src.lines().position(|l| l.starts_with("dt_ns")).unwrap() + 1;
        let err = parse_str(&src).unwrap_err();
        assert_eq!(err.messages, vec![format!("line {line}: `sim.dt_ns` must be positive")]);

        let src = PRESETS[0].1.replace("levels = 3", "levels = 3\nlevel = 4");
        let err = parse_str(&src).unwrap_err().to_string();
        assert!(err.starts_with("line ") && err.contains("level"), "{err}");

        let err = parse_str("[drive]\nduration_ns = \"long\"\n").unwrap_err().to_string();
        assert!(err.starts_with("line 2"), "{err}");
    }

    #[test]
    fn unknown_units_are_rejected() {
        let src = PRESETS[0].1.replace("frequency_mhz = 816.58", "frequency_ghz = 0.81658");
        assert!(parse_str(&src).is_err());
    }

    #[test]
    fn invariants_are_checked() {
        let src = PRESETS[0].1.replace("amplitude = 0.19", "amplitude = 0.4");
        assert!(parse_str(&src).unwrap_err().to_string().contains("half a flux quantum"));
        let src = PRESETS[0].1.replace("eval_interval_ns = 1.0", "eval_interval_ns = 0.001");
        assert!(parse_str(&src).is_err());
        let src = PRESETS[0].1.replace("mode = \"min-over-time\"", "mode = \"max\"");
        assert!(parse_str(&src).is_err());
    }

    #[test]
    fn serialization_round_trips() {
        for (name, _) in PRESETS {
            let cfg = preset(name).unwrap();
            assert_eq!(parse_str(&serialize(&cfg)).unwrap(), cfg);
        }
        let mut cfg = preset("cz_ganzhorn").unwrap();
        cfg.sweep.fixed_t_ns = None;
        cfg.sim.protocol_states.clear();
        cfg.drive.offset = 0.1 + 0.2;
        assert_eq!(parse_str(&serialize(&cfg)).unwrap(), cfg);
    }
}

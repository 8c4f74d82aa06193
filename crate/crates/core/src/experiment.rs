//! Config-driven experiments: parsing, execution and serialization.
//!
//! A run reads one TOML document, resolves every default into an explicit
//! provenance block, executes the named experiment and writes a manifest,
//! comma-separated tables, a JSON report and (for `simulate`) raw field dumps.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::audit::{
    blowup_sweep, default_sweep_times, run_audit, smoothing_report, weighted_decay_scaling, Ensemble, EnsembleKind,
    EstimateId, FieldSource, SmoothingVerdict, Verdict,
};
use crate::blowup::{build_u0, profile_spectrum, BlowupSpec, CoefficientRule, ProfileSpec, TimeWindow};
use crate::error::{Error, Result};
use crate::grid::{forward_transform, inverse_transform, make_grid, Grid3, RealField, SpectralField};
use crate::norms::{sobolev_norm_of, SobolevSpec};
use crate::solver::{integrate, invariants, picard_iterate, PicardConfig, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "GZK_OUTPUT_ROOT";

/// Physical defaults shared by every experiment.
pub mod defaults {
    pub const N_AXIS: usize = 64;
    pub const BOX_LEN: f64 = 30.0;
    pub const J_MAX: u32 = 3;
    pub const K_MAX: u32 = 2;
    pub const B: f64 = 2.0;
    pub const A: f64 = 1.0;
    /// Oscillation scale in grid spacings.
    pub const DELTA_SPACINGS: f64 = 4.0;
    /// Largest step taken when the stability bound allows more.
    pub const DT_CAP: f64 = 0.01;
    /// Fraction of the stability bound used when `dt` is not given.
    pub const DT_SAFETY: f64 = 0.5;
}

fn defaults_table() -> Value {
    json!({
        "n_axis": defaults::N_AXIS,
        "box_len": defaults::BOX_LEN,
        "j_max": defaults::J_MAX,
        "k_max": defaults::K_MAX,
        "b": defaults::B,
        "a": defaults::A,
        "delta": format!("{} * spacing", defaults::DELTA_SPACINGS),
        "dt": format!("min({}, {} * stability bound)", defaults::DT_CAP, defaults::DT_SAFETY),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    BlowupSweep,
    WeightedDecay,
    EstimateAudit,
    Smoothing,
    Contraction,
}

pub struct ExperimentInfo {
    pub kind: ExperimentKind,
    pub name: &'static str,
    pub parameters: &'static str,
    pub claim: &'static str,
}

/// Stable listing; bump [`SCHEMA_VERSION`] when it changes.
pub const EXPERIMENTS: [ExperimentInfo; 6] = [
    ExperimentInfo {
        kind: ExperimentKind::Simulate,
        name: "simulate",
        parameters: "grid, solver, data",
        claim: "well-posedness: the flow exists on [0, T] and conserves mass and energy",
    },
    ExperimentInfo {
        kind: ExperimentKind::BlowupSweep,
        name: "blowup-sweep",
        parameters: "data (blowup), probe.times, probe.delta, probe.source, probe.eps",
        claim: "dispersive blow-up: C^1 fails exactly at the armed rational times, for the free and nonlinear flows, \
                while the Duhamel term stays C^1",
    },
    ExperimentInfo {
        kind: ExperimentKind::WeightedDecay,
        name: "weighted-decay",
        parameters: "data (profile), probe.a, probe.alphas, probe.t_samples",
        claim: "weighted decay: |d^a e^{x+y} W(t) phi| <~ t^{-|a|/2} e^{3t}",
    },
    ExperimentInfo {
        kind: ExperimentKind::EstimateAudit,
        name: "estimate-audit",
        parameters: "data (ensemble), probe.estimates, probe.horizon",
        claim: "linear estimates: Kato smoothing and its dual, maximal function, Strichartz, weighted commutator",
    },
    ExperimentInfo {
        kind: ExperimentKind::Smoothing,
        name: "smoothing",
        parameters: "data, solver.k, probe.s_probe, probe.t, probe.margin",
        claim: "nonlinear smoothing: the Duhamel term gains regularity over the free evolution",
    },
    ExperimentInfo {
        kind: ExperimentKind::Contraction,
        name: "contraction",
        parameters: "data, solver.k, probe.t, probe.iterations, probe.quad_points",
        claim: "local well-posedness by contraction: Picard iterates converge to the solution",
    },
];

pub fn list_experiments() -> String {
    let mut out = format!("gzk experiments (schema {SCHEMA_VERSION})\n");
    for e in &EXPERIMENTS {
        let _ = writeln!(out, "{}\n  parameters: {}\n  claim: {}", e.name, e.parameters, e.claim);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_axis: usize,
    #[serde(default = "default_box_len")]
    pub box_len: f64,
}

fn default_box_len() -> f64 {
    defaults::BOX_LEN
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_axis: defaults::N_AXIS,
            box_len: defaults::BOX_LEN,
        }
    }
}

/// Solver fields; `dt` is derived from the stability bound when absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub k: u32,
    pub dt: Option<f64>,
    pub t_end: f64,
    pub dealias_fraction: f64,
    pub snapshot_stride: usize,
    pub cfl_constant: f64,
    pub nonlinear: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            k: d.k,
            dt: None,
            t_end: d.t_end,
            dealias_fraction: d.dealias_fraction,
            snapshot_stride: d.snapshot_stride,
            cfl_constant: d.cfl_constant,
            nonlinear: d.nonlinear,
        }
    }
}

impl SolverSection {
    fn resolve(&self, grid: &Grid3, sup: f64) -> Result<SolverConfig> {
        let mut cfg = SolverConfig {
            k: self.k,
            dt: defaults::DT_CAP,
            t_end: self.t_end,
            dealias_fraction: self.dealias_fraction,
            snapshot_stride: self.snapshot_stride,
            cfl_constant: self.cfl_constant,
            nonlinear: self.nonlinear,
        };
        cfg.dt = match self.dt {
            Some(dt) => dt,
            None => {
                let bound = cfg.stability_bound(grid, sup)?;
                (defaults::DT_SAFETY * bound).min(defaults::DT_CAP)
            }
        };
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    /// Truncated blow-up datum.
    Blowup {
        #[serde(default = "default_j_max")]
        j_max: u32,
        #[serde(default = "default_k_max")]
        k_max: u32,
        #[serde(default = "default_b")]
        b: f64,
        /// Explicit `[j, k, c]` rows replacing the default coefficients.
        #[serde(default)]
        coefficients: Option<Vec<(u32, u32, f64)>>,
        #[serde(default)]
        window_min: Option<f64>,
        #[serde(default)]
        window_max: Option<f64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude · e^{-b|x|}`
    Profile {
        #[serde(default = "default_b")]
        b: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude · e^{-|x|²/(2 width²)}`
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
    },
    Zero,
    /// Audit ensemble; the seed is the top-level one.
    Ensemble {
        generator: EnsembleKind,
        count: usize,
    },
}

fn default_j_max() -> u32 {
    defaults::J_MAX
}
fn default_k_max() -> u32 {
    defaults::K_MAX
}
fn default_b() -> f64 {
    defaults::B
}
fn one() -> f64 {
    1.0
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Profile { b: defaults::B, amplitude: 1.0 }
    }
}

impl DataConfig {
    fn blowup_spec(&self) -> Result<(BlowupSpec, f64)> {
        match self {
            DataConfig::Blowup {
                j_max,
                k_max,
                b,
                coefficients,
                window_min,
                window_max,
                amplitude,
            } => {
                let spec = BlowupSpec {
                    j_max: *j_max,
                    k_max: *k_max,
                    profile: ProfileSpec::new(*b)?,
                    rule: match coefficients {
                        Some(table) => CoefficientRule::Custom { table: table.clone() },
                        None => CoefficientRule::DoubleExponential,
                    },
                    window: TimeWindow {
                        min: window_min.unwrap_or(0.0),
                        max: window_max.unwrap_or(f64::INFINITY),
                    },
                };
                spec.validate()?;
                Ok((spec, *amplitude))
            }
            DataConfig::Zero => Ok((BlowupSpec::default(), 0.0)),
            _ => Err(config_error("data.kind", "this experiment needs `blowup` data")),
        }
    }

    fn profile(&self) -> Result<(ProfileSpec, f64)> {
        match self {
            DataConfig::Profile { b, amplitude } => Ok((ProfileSpec::new(*b)?, *amplitude)),
            DataConfig::Zero => Ok((ProfileSpec::default(), 0.0)),
            _ => Err(config_error("data.kind", "this experiment needs `profile` data")),
        }
    }

    /// Physical field on `grid`; the profile is built from its lattice spectrum.
    fn field(&self, grid: &Grid3) -> Result<RealField> {
        match self {
            DataConfig::Blowup { .. } => {
                let (spec, amp) = self.blowup_spec()?;
                Ok(build_u0(&spec, grid)?.field.scaled(amp))
            }
            DataConfig::Profile { b, amplitude } => {
                Ok(inverse_transform(&profile_spectrum(ProfileSpec::new(*b)?, grid)).scaled(*amplitude))
            }
            DataConfig::Gaussian { amplitude, width } => {
                if !(*width > 0.0) {
                    return Err(config_error("data.width", "must be positive"));
                }
                let w2 = 2.0 * width * width;
                Ok(RealField::from_fn(grid, |x, y1, y2| {
                    amplitude * (-(x * x + y1 * y1 + y2 * y2) / w2).exp()
                }))
            }
            DataConfig::Zero => Ok(RealField::zeros(grid)),
            DataConfig::Ensemble { .. } => Err(config_error("data.kind", "ensembles only feed estimate-audit")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Linear,
    Nonlinear,
    Duhamel,
}

/// Experiment-specific knobs; unset fields take the documented defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub delta: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub source: Option<SourceKind>,
    pub eps: Option<f64>,
    /// Score ratio over the irrational baseline that counts as a spike.
    pub spike_factor: Option<f64>,
    pub a: Option<f64>,
    pub alphas: Option<Vec<[u32; 3]>>,
    pub t_samples: Option<Vec<f64>>,
    /// Allowed shortfall below the predicted `-|α|/2` slope.
    pub slope_tolerance: Option<f64>,
    pub estimates: Option<Vec<EstimateId>>,
    pub horizon: Option<f64>,
    pub s_probe: Option<f64>,
    pub t: Option<f64>,
    pub margin: Option<f64>,
    pub min_linear_growth: Option<f64>,
    pub max_duhamel_growth: Option<f64>,
    pub iterations: Option<usize>,
    pub quad_points: Option<usize>,
    pub max_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Relative paths resolve against the output root.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
}

fn config_error(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Field path reported by the toml deserializer, when there is one.
fn field_of(message: &str) -> String {
    ["missing field `", "unknown field `", "unknown variant `"]
        .iter()
        .find_map(|pat| {
            let start = message.find(pat)? + pat.len();
            let end = message[start..].find('`')?;
            Some(message[start..start + end].to_string())
        })
        .unwrap_or_else(|| "<document>".into())
}

/// Name of the `[table]` header governing byte offset `pos`.
fn enclosing_table(text: &str, pos: usize) -> Option<String> {
    let line_end = text[pos..].find('\n').map_or(text.len(), |i| pos + i);
    text[..line_end].lines().rev().find_map(|l| {
        let l = l.trim();
        l.strip_prefix('[')?.strip_suffix(']').map(|t| t.trim().to_string())
    })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let start = e.span().map(|s| s.start);
            let location = start
                .map(|s| format!("line {}: ", text[..s].matches('\n').count() + 1))
                .unwrap_or_default();
            let mut field = field_of(&message);
            if let Some(table) = start.and_then(|s| enclosing_table(text, s)) {
                field = format!("{table}.{field}");
            }
            Error::Config {
                field,
                reason: format!("{location}{message}"),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_error(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        make_grid(self.grid.n_axis, self.grid.box_len).map_err(|e| config_error("grid", e.to_string()))?;
        if let Some(dt) = self.solver.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_error("solver.dt", "must be positive"));
            }
        }
        let needs_ensemble = self.experiment == ExperimentKind::EstimateAudit;
        if needs_ensemble != matches!(self.data, DataConfig::Ensemble { .. }) {
            return Err(config_error("data.kind", "estimate-audit takes exactly `ensemble` data"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid3> {
        make_grid(self.grid.n_axis, self.grid.box_len)
    }

    /// Output directory after applying [`OUTPUT_ROOT_ENV`].
    pub fn output_dir(&self, root: Option<&Path>) -> PathBuf {
        let dir = self.output_dir.clone().unwrap_or_else(|| {
            let name = EXPERIMENTS.iter().find(|e| e.kind == self.experiment).expect("listed").name;
            PathBuf::from("runs").join(name)
        });
        match root {
            Some(r) if dir.is_relative() => r.join(dir),
            _ => dir,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

/// Exit code for execution errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub outcome: Outcome,
    pub wall_time_seconds: f64,
    pub config: ExperimentConfig,
    /// Every parameter the run actually used, defaults included.
    pub resolved: Value,
    pub defaults: Value,
    pub files: Vec<FileEntry>,
}

pub struct RunSummary {
    pub outcome: Outcome,
    pub output_dir: PathBuf,
    pub manifest: RunManifest,
}

struct Sink {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Sink {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write(name, table.render().as_bytes())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Raw little-endian f64 samples plus a JSON sidecar.
    fn fields(&mut self, stem: &str, fields: &[&RealField], times: &[f64]) -> Result<()> {
        let grid = fields.first().map(|f| f.grid().clone());
        let mut buf = BufWriter::new(Vec::with_capacity(fields.len() * grid.as_ref().map_or(0, Grid3::len) * 8));
        for f in fields {
            for v in f.samples() {
                buf.write_all(&v.to_le_bytes())?;
            }
        }
        let bytes = buf.into_inner().map_err(|e| e.into_error())?;
        self.write(&format!("{stem}.f64"), &bytes)?;
        let n = grid.as_ref().map_or(0, Grid3::n);
        let sidecar = json!({
            "data": format!("{stem}.f64"),
            "dtype": "float64",
            "endianness": "little",
            "layout": "row-major [snapshot][x][y1][y2]",
            "dims": [fields.len(), n, n, n],
            "box_len": grid.as_ref().map_or(0.0, Grid3::box_len),
            "coordinates": "x_i = -L/2 + i L/n",
            "times": times,
        });
        self.json(&format!("{stem}.json"), &sidecar)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Comma-separated table with a header row.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Executed {
    outcome: Outcome,
    resolved: Value,
}

/// Runs `cfg` and writes its outputs; `root` relocates relative output paths.
pub fn run(cfg: &ExperimentConfig, root: Option<&Path>) -> Result<RunSummary> {
    cfg.validate()?;
    let started = Instant::now();
    let dir = cfg.output_dir(root);
    let mut sink = Sink::new(dir.clone())?;
    let grid = cfg.grid()?;
    let done = match cfg.experiment {
        ExperimentKind::Simulate => simulate(cfg, &grid, &mut sink)?,
        ExperimentKind::BlowupSweep => sweep(cfg, &grid, &mut sink)?,
        ExperimentKind::WeightedDecay => decay(cfg, &grid, &mut sink)?,
        ExperimentKind::EstimateAudit => audit(cfg, &grid, &mut sink)?,
        ExperimentKind::Smoothing => smoothing(cfg, &grid, &mut sink)?,
        ExperimentKind::Contraction => contraction(cfg, &grid, &mut sink)?,
    };
    let manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        schema_version: SCHEMA_VERSION,
        experiment: cfg.experiment,
        outcome: done.outcome,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config: cfg.clone(),
        resolved: done.resolved,
        defaults: defaults_table(),
        files: sink.files.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(RunSummary {
        outcome: done.outcome,
        output_dir: dir,
        manifest,
    })
}

fn simulate(cfg: &ExperimentConfig, grid: &Grid3, sink: &mut Sink) -> Result<Executed> {
    let u0 = cfg.data.field(grid)?;
    let solver = cfg.solver.resolve(grid, u0.max_abs())?;
    let traj = integrate(&u0, &solver)?;
    let mut table = Table::new(&["t", "mass", "mean", "hamiltonian", "sup"]);
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        let inv = invariants(u, solver.k);
        table.push(vec![num(*t), num(inv.mass), num(inv.mean), num(inv.hamiltonian), num(u.max_abs())]);
    }
    sink.csv("invariants.csv", &table)?;
    let refs: Vec<&RealField> = traj.snapshots.iter().collect();
    sink.fields("trajectory", &refs, &traj.times)?;
    let resolved = json!({ "grid": cfg.grid, "solver": solver, "data": cfg.data });
    sink.json("report.json", &json!({ "experiment": "simulate", "snapshots": traj.len(), "verdict": Outcome::Pass }))?;
    Ok(Executed {
        outcome: Outcome::Pass,
        resolved,
    })
}

fn sweep(cfg: &ExperimentConfig, grid: &Grid3, sink: &mut Sink) -> Result<Executed> {
    let (spec, amplitude) = cfg.data.blowup_spec()?;
    let p = &cfg.probe;
    let times = p.times.clone().unwrap_or_else(|| default_sweep_times(&spec));
    let delta = p.delta.unwrap_or(defaults::DELTA_SPACINGS * grid.spacing());
    let source_kind = p.source.unwrap_or(SourceKind::Linear);
    let eps = p.eps.unwrap_or(amplitude);
    let datum = build_u0(&spec, grid)?;
    let solver = cfg.solver.resolve(grid, eps.abs() * datum.field.max_abs())?;
    let source = match source_kind {
        SourceKind::Linear => FieldSource::Linear,
        SourceKind::Nonlinear => FieldSource::Nonlinear { eps, solver },
        SourceKind::Duhamel => FieldSource::Duhamel { eps, solver },
    };
    let report = blowup_sweep(&spec, grid, &times, delta, source)?;
    let factor = p.spike_factor.unwrap_or(match source_kind {
        SourceKind::Duhamel => 2.0,
        _ => 10.0,
    });
    let ok = match source_kind {
        // No armed time may rise above `factor` times the baseline.
        SourceKind::Duhamel => report
            .rows
            .iter()
            .filter(|r| r.is_armed_rational)
            .all(|r| r.score <= factor * report.baseline),
        _ => report.missing_armed.is_empty() && report.min_spike_ratio >= factor && report.spike_set_matches(factor),
    };
    let mut table = Table::new(&["t", "score", "is_armed_rational"]);
    for r in &report.rows {
        table.push(vec![num(r.t), num(r.score), r.is_armed_rational.to_string()]);
    }
    sink.csv("sweep.csv", &table)?;
    let outcome = Outcome::from_bool(ok);
    sink.json(
        "report.json",
        &json!({ "experiment": "blowup-sweep", "source": source_kind, "spike_factor": factor, "report": report, "verdict": outcome }),
    )?;
    let resolved = json!({
        "grid": cfg.grid, "data": spec, "amplitude": amplitude, "times": times, "delta": delta,
        "source": source_kind, "eps": eps, "spike_factor": factor, "solver": solver,
    });
    Ok(Executed { outcome, resolved })
}

/// Ten log-spaced samples in `[0.1, 1]`.
pub fn default_decay_times() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-1.0 + i as f64 / 9.0)).collect()
}

fn decay(cfg: &ExperimentConfig, grid: &Grid3, sink: &mut Sink) -> Result<Executed> {
    let (profile, _) = cfg.data.profile()?;
    let p = &cfg.probe;
    let a = p.a.unwrap_or(defaults::A);
    let alphas = p.alphas.clone().unwrap_or_else(|| vec![[0, 0, 0], [1, 0, 0], [2, 0, 0]]);
    let times = p.t_samples.clone().unwrap_or_else(default_decay_times);
    let tol = p.slope_tolerance.unwrap_or(0.15);
    let mut samples = Table::new(&["alpha", "t", "norm"]);
    let mut slopes = Table::new(&["alpha", "slope", "predicted", "pass"]);
    let mut fits = Vec::new();
    let mut ok = true;
    for alpha in &alphas {
        let fit = weighted_decay_scaling(profile, grid, a, *alpha, &times)?;
        let order = alpha.iter().sum::<u32>() as f64;
        let predicted = -order / 2.0;
        let pass = fit.slope >= predicted - tol;
        ok &= pass;
        let label = format!("{}{}{}", alpha[0], alpha[1], alpha[2]);
        for (t, v) in &fit.samples {
            samples.push(vec![label.clone(), num(*t), num(*v)]);
        }
        slopes.push(vec![label, num(fit.slope), num(predicted), pass.to_string()]);
        fits.push(json!({ "alpha": alpha, "fit": fit, "predicted": predicted, "pass": pass }));
    }
    sink.csv("samples.csv", &samples)?;
    sink.csv("slopes.csv", &slopes)?;
    let outcome = Outcome::from_bool(ok);
    sink.json("report.json", &json!({ "experiment": "weighted-decay", "a": a, "fits": fits, "verdict": outcome }))?;
    let resolved = json!({
        "grid": cfg.grid, "profile": profile, "a": a, "alphas": alphas, "t_samples": times, "slope_tolerance": tol,
    });
    Ok(Executed { outcome, resolved })
}

fn audit(cfg: &ExperimentConfig, grid: &Grid3, sink: &mut Sink) -> Result<Executed> {
    let DataConfig::Ensemble { generator, count } = cfg.data else {
        return Err(config_error("data.kind", "estimate-audit takes `ensemble` data"));
    };
    let ens = Ensemble::new(generator, count, cfg.seed);
    let p = &cfg.probe;
    let horizon = p.horizon.unwrap_or(0.5);
    let estimates = p.estimates.clone().unwrap_or_else(|| {
        vec![
            EstimateId::KatoForward,
            EstimateId::KatoDual,
            EstimateId::Maximal { s: 1.25 },
            EstimateId::Strichartz { gamma: 0.4, beta: 0.6 },
        ]
    });
    let mut ratios = Table::new(&["estimate", "member", "ratio", "ratio_refined"]);
    let mut summary = Table::new(&["estimate", "sup", "sup_refined", "growth", "verdict"]);
    let mut reports = Vec::new();
    let mut ok = true;
    for id in &estimates {
        let r = run_audit(*id, &ens, grid, horizon)?;
        for (i, (a, b)) in r.ratios.iter().zip(&r.ratios_refined).enumerate() {
            ratios.push(vec![r.estimate.clone(), i.to_string(), opt(*a), opt(*b)]);
        }
        summary.push(vec![
            r.estimate.clone(),
            num(r.sup),
            num(r.sup_refined),
            num(r.growth),
            format!("{:?}", r.verdict).to_uppercase(),
        ]);
        ok &= r.verdict == Verdict::Pass;
        reports.push(r);
    }
    sink.csv("ratios.csv", &ratios)?;
    sink.csv("summary.csv", &summary)?;
    let outcome = Outcome::from_bool(ok);
    sink.json("report.json", &json!({ "experiment": "estimate-audit", "reports": reports, "verdict": outcome }))?;
    let resolved = json!({
        "grid": cfg.grid, "ensemble": ens, "horizon": horizon, "estimates": estimates,
    });
    Ok(Executed { outcome, resolved })
}

fn smoothing(cfg: &ExperimentConfig, grid: &Grid3, sink: &mut Sink) -> Result<Executed> {
    let p = &cfg.probe;
    let s_probe = p.s_probe.unwrap_or(3.0);
    let t = p.t.unwrap_or(0.5);
    let margin = p.margin.unwrap_or(1.0);
    let fine = grid.refined()?;
    let u0 = cfg.data.field(grid)?;
    let solver = SolverConfig {
        t_end: t,
        ..cfg.solver.resolve(grid, u0.max_abs())?
    };
    let data = cfg.data.clone();
    let make = move |g: &Grid3| data.field(g).expect("data checked on the coarse grid");
    let report = smoothing_report(&make, &solver, s_probe, &[grid.clone(), fine.clone()], t, margin)?;
    let lin = report.lin_growth[0];
    let duh = report.duh_growth[0];
    let ok = report.verdict == SmoothingVerdict::Smoothing
        && p.min_linear_growth.is_none_or(|m| lin >= m)
        && p.max_duhamel_growth.is_none_or(|m| duh <= m)
        && report.rows.iter().all(|r| !r.under_resolved);
    let mut table = Table::new(&["n", "dt", "g_lin", "g_duh", "edge_fraction", "under_resolved"]);
    for r in &report.rows {
        table.push(vec![
            r.n.to_string(),
            num(r.dt),
            num(r.g_lin),
            num(r.g_duh),
            num(r.edge_fraction),
            r.under_resolved.to_string(),
        ]);
    }
    sink.csv("smoothing.csv", &table)?;
    let outcome = Outcome::from_bool(ok);
    sink.json("report.json", &json!({ "experiment": "smoothing", "report": report, "verdict": outcome }))?;
    let resolved = json!({
        "grid": cfg.grid, "refined_n": fine.n(), "data": cfg.data, "solver": solver, "s_probe": s_probe, "t": t,
        "margin": margin, "min_linear_growth": p.min_linear_growth, "max_duhamel_growth": p.max_duhamel_growth,
    });
    Ok(Executed { outcome, resolved })
}

/// Picard distances below this fraction of `‖u₀‖_{H²}` sit at the roundoff floor.
pub const PICARD_FLOOR: f64 = 1e-12;

/// Result of comparing the converged Picard iterate with the RK4 solution.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionCheck {
    pub distances: Vec<f64>,
    /// `d_{n+1}/d_n` for `n ≥ 2` above the roundoff floor.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub mismatch: f64,
    pub picard_error: f64,
    pub solver_error: f64,
}

/// Picard contraction plus agreement with the solver at `t = T`.
///
/// Both self-convergence errors are Richardson estimates: the trapezoid
/// rule against twice the nodes, RK4 against half the step.
pub fn contraction_check(u0: &RealField, picard: &PicardConfig, solver: &SolverConfig) -> Result<ContractionCheck> {
    let rep = picard_iterate(u0, picard)?;
    let h2 = SobolevSpec::h(2.0);
    let floor = PICARD_FLOOR * sobolev_norm_of(&forward_transform(u0), h2).value;
    let ratios: Vec<f64> = rep
        .distances
        .windows(2)
        .enumerate()
        .filter(|(n, w)| *n + 1 >= 2 && w[1] > floor)
        .map(|(_, w)| w[1] / w[0])
        .collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let doubled = PicardConfig {
        quad_points: 2 * picard.quad_points - 1,
        ..*picard
    };
    let picard_fine = picard_iterate(u0, &doubled)?.final_state;
    let picard_error = sobolev_norm_of(&rep.final_state.sub(&picard_fine)?, h2).value * 4.0 / 3.0;
    let run = |dt: f64| -> Result<SpectralField> {
        let c = SolverConfig {
            dt,
            t_end: picard.t_end,
            k: picard.k,
            dealias_fraction: picard.dealias_fraction,
            ..*solver
        };
        let c = SolverConfig {
            snapshot_stride: c.steps(),
            ..c
        };
        let traj = integrate(u0, &c)?;
        Ok(forward_transform(traj.last().ok_or(Error::EmptyTrajectory)?.1))
    };
    let coarse = run(solver.dt)?;
    let fine = run(0.5 * solver.dt)?;
    let solver_error = sobolev_norm_of(&coarse.sub(&fine)?, h2).value * 16.0 / 15.0;
    let mismatch = sobolev_norm_of(&rep.final_state.sub(&coarse)?, h2).value;
    Ok(ContractionCheck {
        distances: rep.distances,
        ratios,
        max_ratio,
        mismatch,
        picard_error,
        solver_error,
    })
}

impl ContractionCheck {
    pub fn passes(&self, max_ratio: f64) -> bool {
        self.max_ratio <= max_ratio && self.mismatch <= self.picard_error + self.solver_error
    }
}

fn contraction(cfg: &ExperimentConfig, grid: &Grid3, sink: &mut Sink) -> Result<Executed> {
    let p = &cfg.probe;
    let t = p.t.unwrap_or(0.25);
    let iterations = p.iterations.unwrap_or(8);
    let quad_points = p.quad_points.unwrap_or(17);
    let max_ratio = p.max_ratio.unwrap_or(0.5);
    let u0 = cfg.data.field(grid)?;
    let picard = PicardConfig {
        k: cfg.solver.k,
        dealias_fraction: cfg.solver.dealias_fraction,
        ..PicardConfig::new(t, iterations, quad_points)
    };
    let solver = SolverConfig {
        t_end: t,
        ..cfg.solver.resolve(grid, u0.max_abs())?
    };
    let check = contraction_check(&u0, &picard, &solver)?;
    let mut table = Table::new(&["iteration", "distance", "ratio"]);
    for (i, d) in check.distances.iter().enumerate() {
        let ratio = (i > 0).then(|| d / check.distances[i - 1]);
        table.push(vec![(i + 1).to_string(), num(*d), opt(ratio)]);
    }
    sink.csv("picard.csv", &table)?;
    let outcome = Outcome::from_bool(check.passes(max_ratio));
    sink.json("report.json", &json!({ "experiment": "contraction", "check": check, "verdict": outcome }))?;
    let resolved = json!({
        "grid": cfg.grid, "data": cfg.data, "picard": picard, "solver": solver, "max_ratio": max_ratio,
    });
    Ok(Executed { outcome, resolved })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(text)
    }

    #[test]
    fn missing_n_axis_names_the_field() {
        let err = parse("schema_version = 1\nexperiment = \"simulate\"\n[grid]\nbox_len = 20.0\n").unwrap_err();
        match err {
            Error::Config { field, reason } => {
                assert_eq!(field, "grid.n_axis");
                assert!(reason.contains("line"), "{reason}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_fields_and_versions_rejected() {
        assert!(parse("schema_version = 1\nexperiment = \"simulate\"\nbogus = 3\n").is_err());
        assert!(parse("schema_version = 2\nexperiment = \"simulate\"\n").is_err());
        assert!(parse("schema_version = 1\nexperiment = \"teleport\"\n").is_err());
        assert!(parse("schema_version = 1\nexperiment = \"estimate-audit\"\n").is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse("schema_version = 1\nexperiment = \"blowup-sweep\"\n[data]\nkind = \"blowup\"\n").unwrap();
        assert_eq!(cfg.grid, GridConfig::default());
        let (spec, amp) = cfg.data.blowup_spec().unwrap();
        assert_eq!((spec.j_max, spec.k_max, spec.profile.b, amp), (3, 2, 2.0, 1.0));
        assert_eq!(cfg.output_dir(Some(Path::new("/r"))), PathBuf::from("/r/runs/blowup-sweep"));
    }

    #[test]
    fn listing_is_stable_and_complete() {
        let a = list_experiments();
        assert_eq!(a, list_experiments());
        for e in &EXPERIMENTS {
            assert!(a.contains(e.name));
        }
    }

    #[test]
    fn hex_digest() {
        assert_eq!(hex(&[0, 15, 255]), "000fff");
    }

    #[test]
    fn decay_times_span_interval() {
        let t = default_decay_times();
        assert!((t[0] - 0.1).abs() < 1e-15 && (t[9] - 1.0).abs() < 1e-15);
    }
}

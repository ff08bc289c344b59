//! Run configuration: a TOML document, optionally amended by `--set
//! key=value` overrides, resolved against the built-in defaults.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::engine::BoundarySide;
use crate::metrics::SweepAxis;
use crate::model::{Attachment, CouplingConfig, CouplingPreset, EnvKind, ModelConfig, Terminal};
use crate::nonmarkov::SearchConfig;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WTT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "wtt-out";

/// A rejected configuration, with the source line when it can be found.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        ConfigError { line: None, key: None, message: message.into() }
    }

    fn at(key: &str, message: impl Into<String>) -> Self {
        ConfigError { line: None, key: Some(key.to_string()), message: message.into() }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}: `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "`{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub kind: Option<String>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(rename = "T_L")]
    pub t_l: Option<f64>,
    #[serde(rename = "T_M")]
    pub t_m: Option<f64>,
    #[serde(rename = "T_R")]
    pub t_r: Option<f64>,
    /// Terminals that carry an environment, e.g. `["L", "M"]`.
    pub attached: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub preset: Option<String>,
    /// Common energy scale: qubit splittings, couplings and ancilla spacing.
    pub delta: Option<f64>,
    pub g: Option<f64>,
    pub dt_collision: Option<f64>,
    pub sample_dt: Option<f64>,
    pub stencil_h: Option<f64>,
    pub omega_l: Option<f64>,
    pub omega_m: Option<f64>,
    pub omega_r: Option<f64>,
    pub omega_ml: Option<f64>,
    pub omega_mr: Option<f64>,
    pub omega_lr: Option<f64>,
    #[serde(default)]
    pub env: EnvSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `T_L`, `T_M`, `T_R`, `t`, `g` or `epsilon`.
    pub axis: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub step: Option<f64>,
    /// Explicit grid; replaces from/to/step.
    pub values: Option<Vec<f64>>,
    /// Time at which currents are read (ignored for the `t` axis).
    pub time: Option<f64>,
    pub modulator: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlpSection {
    pub t_max: Option<f64>,
    pub n_theta: Option<usize>,
    pub n_phi: Option<usize>,
    pub refine_tol: Option<f64>,
    pub general: Option<bool>,
}

/// Grid spacings used by the scenarios; unset keys keep each scenario's own
/// default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionSection {
    pub time_step: Option<f64>,
    pub temperature_step: Option<f64>,
    pub coupling_step: Option<f64>,
}

/// The configuration document as written.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub boundary: Option<String>,
    #[serde(default)]
    pub model: ModelSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub blp: BlpSection,
    #[serde(default)]
    pub resolution: ResolutionSection,
}

/// What a run computes.
#[derive(Clone, Debug, PartialEq)]
pub enum Job {
    Scenario(String),
    Sweep { axis: SweepAxis, grid: Vec<f64>, time: f64, modulator: Terminal },
}

/// A validated configuration with every default applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub job: Job,
    pub model: ModelConfig,
    pub boundary: BoundarySide,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub blp: SearchConfig,
    pub blp_t_max: f64,
    pub resolution: ResolutionSection,
    /// The document with every default filled in; re-running it reproduces
    /// the run.
    pub document: RunConfig,
}

/// 1-based line of the first occurrence of a dotted key such as
/// `model.env.T_M` in a TOML document. Only handles the layouts this crate
/// documents (tables as `[a.b]` headers, keys as `k = v`).
pub fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (table, key) = match dotted.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", dotted),
    };
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') && line.ends_with(']') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == dotted {
                return Some(i + 1);
            }
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            let k = k.trim().trim_matches('"');
            let full = if current.is_empty() { k.to_string() } else { format!("{current}.{k}") };
            if full == dotted || (current == table && k == key) {
                return Some(i + 1);
            }
        }
    }
    None
}

fn toml_error(err: toml::de::Error, text: &str) -> ConfigError {
    let line = err.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    ConfigError { line, key: None, message: err.message().to_string() }
}

/// Parses a `key=value` override; the value is read as a TOML value, or as
/// a bare string when it is not one.
fn parse_override(spec: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new(format!("--set expects key=value, got `{spec}`")))?;
    let key = key.trim().to_string();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::new(format!("--set has an empty key in `{spec}`")));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key, parsed))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::at(key, format!("`{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses a document and applies `--set` overrides.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    // First pass on the text alone so errors point at source lines.
    let doc: RunConfig = toml::from_str(text).map_err(|e| toml_error(e, text))?;
    if overrides.is_empty() {
        return Ok(doc);
    }
    let mut table: toml::Table = toml::from_str(text).map_err(|e| toml_error(e, text))?;
    let mut keys = Vec::new();
    for spec in overrides {
        let (key, value) = parse_override(spec)?;
        set_dotted(&mut table, &key, value)?;
        keys.push(key);
    }
    RunConfig::deserialize(table).map_err(|e| ConfigError {
        line: None,
        key: None,
        message: format!("in --set {}: {}", keys.join(", "), e.message()),
    })
}

/// Resolves defaults and validates; domain errors name the offending key and,
/// when `source` is given, its line.
pub fn resolve(doc: &RunConfig, source: Option<&str>) -> Result<Resolved, ConfigError> {
    resolve_inner(doc).map_err(|mut e| {
        if let (Some(text), Some(key)) = (source, &e.key) {
            e.line = locate_key(text, key);
        }
        e
    })
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::at(key, format!("must be positive, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::at(key, "must be finite"))
    }
}

fn parse_terminal(key: &str, s: &str) -> Result<Terminal, ConfigError> {
    Terminal::parse(s).ok_or_else(|| ConfigError::at(key, format!("unknown terminal `{s}` (expected L, M or R)")))
}

fn resolve_model(m: &ModelSection) -> Result<ModelConfig, ConfigError> {
    let preset = match &m.preset {
        None => CouplingPreset::Baseline,
        Some(p) => CouplingPreset::parse(p).ok_or_else(|| {
            ConfigError::at("model.preset", format!("unknown preset `{p}` (baseline, symmetric, asymmetric, appendixA)"))
        })?,
    };
    let mut cfg = ModelConfig::baseline();
    if let Some(d) = m.delta {
        cfg.env.delta = finite("model.delta", d)?;
    }
    if preset == CouplingPreset::AppendixA {
        cfg.env.delta = m.delta.unwrap_or(5.0);
        cfg.env.temperatures.r = 4.0;
    }
    cfg = cfg.with_preset(preset);
    if let Some(v) = m.g {
        cfg.g = finite("model.g", v)?;
    }
    if let Some(v) = m.dt_collision {
        cfg.dt_collision = positive("model.dt_collision", v)?;
    }
    if let Some(v) = m.sample_dt {
        cfg.sample_dt = positive("model.sample_dt", v)?;
    }
    if let Some(v) = m.stencil_h {
        cfg.stencil_h = positive("model.stencil_h", v)?;
    }
    let c: &mut CouplingConfig = &mut cfg.coupling;
    for (key, src, dst) in [
        ("model.omega_l", m.omega_l, &mut c.omega_l),
        ("model.omega_m", m.omega_m, &mut c.omega_m),
        ("model.omega_r", m.omega_r, &mut c.omega_r),
        ("model.omega_ml", m.omega_ml, &mut c.omega_ml),
        ("model.omega_mr", m.omega_mr, &mut c.omega_mr),
        ("model.omega_lr", m.omega_lr, &mut c.omega_lr),
    ] {
        if let Some(v) = src {
            *dst = finite(key, v)?;
        }
    }
    let e = &m.env;
    if let Some(k) = &e.kind {
        cfg.env.kind = EnvKind::parse(k).ok_or_else(|| {
            ConfigError::at("model.env.kind", format!("unknown environment kind `{k}` (qutrit-linear, qutrit-nonlinear, qubit)"))
        })?;
    }
    if let Some(v) = e.delta {
        cfg.env.delta = finite("model.env.delta", v)?;
    }
    if let Some(v) = e.epsilon {
        cfg.env.epsilon = finite("model.env.epsilon", v)?;
    }
    // Temperature domain is checked by the model validation below, which
    // only constrains terminals that are actually attached.
    for (src, t) in [(e.t_l, Terminal::L), (e.t_m, Terminal::M), (e.t_r, Terminal::R)] {
        if let Some(v) = src {
            cfg.env.temperatures = cfg.env.temperatures.with(t, v);
        }
    }
    if let Some(list) = &e.attached {
        let mut att = Attachment::NONE;
        for s in list {
            match parse_terminal("model.env.attached", s)? {
                Terminal::L => att.l = true,
                Terminal::M => att.m = true,
                Terminal::R => att.r = true,
            }
        }
        cfg.env.attached = att;
    }
    cfg.validate().map_err(|err| {
        let crate::model::ModelError::InvalidParameter { field, reason } = &err else {
            return ConfigError::new(err.to_string());
        };
        ConfigError::at(&model_key(field), reason.clone())
    })?;
    Ok(cfg)
}

/// Config key for a [`ModelConfig`] field path.
fn model_key(field: &str) -> String {
    match field {
        "env.temperatures.l" => "model.env.T_L".into(),
        "env.temperatures.m" => "model.env.T_M".into(),
        "env.temperatures.r" => "model.env.T_R".into(),
        "n_system_qubits" => "model.preset".into(),
        f if f.starts_with("omega") => format!("model.{f}"),
        f => format!("model.{f}"),
    }
}

fn resolve_sweep(s: &SweepSection) -> Result<Job, ConfigError> {
    let axis_name = s.axis.as_deref().ok_or_else(|| ConfigError::at("sweep.axis", "required"))?;
    let axis = SweepAxis::parse(axis_name).ok_or_else(|| {
        ConfigError::at("sweep.axis", format!("unknown axis `{axis_name}` (T_L, T_M, T_R, t, g, epsilon)"))
    })?;
    let grid = match (&s.values, s.from, s.to, s.step) {
        (Some(v), None, None, None) => v.clone(),
        (Some(_), ..) => return Err(ConfigError::at("sweep.values", "give either values or from/to/step, not both")),
        (None, Some(a), Some(b), Some(h)) => {
            let h = positive("sweep.step", h)?;
            if !(finite("sweep.from", a)? <= finite("sweep.to", b)?) {
                return Err(ConfigError::at("sweep.to", "must not be below sweep.from"));
            }
            crate::metrics::arange(a, b, h)
        }
        _ => return Err(ConfigError::at("sweep", "needs values, or all of from, to and step")),
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(ConfigError::at("sweep.values", "grid must be non-empty, finite and strictly ascending"));
    }
    let time = match s.time {
        Some(t) => finite("sweep.time", t)?,
        None if axis == SweepAxis::Time => 0.0,
        None => return Err(ConfigError::at("sweep.time", "required unless axis = \"t\"")),
    };
    let modulator = match &s.modulator {
        Some(m) => parse_terminal("sweep.modulator", m)?,
        None => Terminal::M,
    };
    Ok(Job::Sweep { axis, grid, time, modulator })
}

fn resolve_inner(doc: &RunConfig) -> Result<Resolved, ConfigError> {
    let model = resolve_model(&doc.model)?;
    let job = match (&doc.scenario, &doc.sweep) {
        (Some(_), Some(_)) => return Err(ConfigError::at("sweep", "a run selects either a scenario or a [sweep], not both")),
        (None, None) => return Err(ConfigError::new("nothing to run: set `scenario` or add a [sweep] section")),
        (Some(name), None) => {
            if crate::runner::scenarios::find(name).is_none() {
                return Err(ConfigError::at("scenario", format!("unknown scenario `{name}`; see `wtt scenarios`")));
            }
            Job::Scenario(name.clone())
        }
        (None, Some(s)) => resolve_sweep(s)?,
    };
    if let Job::Sweep { modulator, .. } = &job {
        if !model.system_terminals().contains(modulator) {
            return Err(ConfigError::at("sweep.modulator", "modulator is not part of this device"));
        }
    }
    let boundary = match &doc.boundary {
        None => BoundarySide::Left,
        Some(b) => BoundarySide::parse(b).ok_or_else(|| ConfigError::at("boundary", format!("expected left or right, got `{b}`")))?,
    };
    if doc.workers == Some(0) {
        return Err(ConfigError::at("workers", "must be at least 1"));
    }
    let defaults = SearchConfig::default();
    let blp = SearchConfig {
        n_theta: doc.blp.n_theta.unwrap_or(defaults.n_theta),
        n_phi: doc.blp.n_phi.unwrap_or(defaults.n_phi),
        refine_tol: positive("blp.refine_tol", doc.blp.refine_tol.unwrap_or(defaults.refine_tol))?,
        general: doc.blp.general.unwrap_or(defaults.general),
    };
    if blp.n_theta < 2 || blp.n_phi < 1 {
        return Err(ConfigError::at("blp.n_theta", "the search grid needs at least 2 polar and 1 azimuthal points"));
    }
    let blp_t_max = match doc.blp.t_max {
        Some(t) => {
            let t = positive("blp.t_max", t)?;
            if crate::engine::grid_index(t, model.dt_collision).is_none() {
                return Err(ConfigError::at("blp.t_max", "must be a multiple of dt_collision"));
            }
            t
        }
        // Whole collisions up to the default horizon.
        None => {
            let n = ((crate::nonmarkov::DEFAULT_T_MAX / model.dt_collision) + 1e-9).floor().max(1.0);
            n * model.dt_collision
        }
    };
    for (key, v) in [
        ("resolution.time_step", doc.resolution.time_step),
        ("resolution.temperature_step", doc.resolution.temperature_step),
        ("resolution.coupling_step", doc.resolution.coupling_step),
    ] {
        if let Some(v) = v {
            positive(key, v)?;
        }
    }
    if let Some(ts) = doc.resolution.time_step {
        if crate::engine::grid_index(ts, model.sample_dt).is_none() {
            return Err(ConfigError::at("resolution.time_step", "must be a multiple of sample_dt"));
        }
    }
    let out = doc
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

    let document = filled_document(doc, &model, boundary, &blp, blp_t_max, &out);
    Ok(Resolved {
        job,
        model,
        boundary,
        workers: doc.workers,
        out,
        blp,
        blp_t_max,
        resolution: doc.resolution.clone(),
        document,
    })
}

/// The document with every model and search default written out explicitly.
fn filled_document(
    doc: &RunConfig,
    m: &ModelConfig,
    boundary: BoundarySide,
    blp: &SearchConfig,
    blp_t_max: f64,
    out: &std::path::Path,
) -> RunConfig {
    let attached: Vec<String> =
        m.system_terminals().into_iter().filter(|&t| m.env.attached.get(t)).map(|t| t.name().to_string()).collect();
    RunConfig {
        scenario: doc.scenario.clone(),
        out: Some(out.to_path_buf()),
        workers: doc.workers,
        boundary: Some(boundary.name().to_string()),
        model: ModelSection {
            preset: Some(doc.model.preset.clone().unwrap_or_else(|| "baseline".into())),
            delta: Some(doc.model.delta.unwrap_or(m.env.delta)),
            g: Some(m.g),
            dt_collision: Some(m.dt_collision),
            sample_dt: Some(m.sample_dt),
            stencil_h: Some(m.stencil_h),
            omega_l: Some(m.coupling.omega_l),
            omega_m: Some(m.coupling.omega_m),
            omega_r: Some(m.coupling.omega_r),
            omega_ml: Some(m.coupling.omega_ml),
            omega_mr: Some(m.coupling.omega_mr),
            omega_lr: Some(m.coupling.omega_lr),
            env: EnvSection {
                kind: Some(m.env.kind.name().to_string()),
                delta: Some(m.env.delta),
                epsilon: Some(m.env.epsilon),
                t_l: Some(m.env.temperatures.l),
                t_m: Some(m.env.temperatures.m),
                t_r: Some(m.env.temperatures.r),
                attached: Some(attached),
            },
        },
        sweep: doc.sweep.clone(),
        blp: BlpSection {
            t_max: Some(blp_t_max),
            n_theta: Some(blp.n_theta),
            n_phi: Some(blp.n_phi),
            refine_tol: Some(blp.refine_tol),
            general: Some(blp.general),
        },
        resolution: doc.resolution.clone(),
    }
}

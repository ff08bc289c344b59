//! Hamiltonians, spin operators and run parameters of the three-terminal
//! transistor.
//!
//! The joint Hilbert space is ordered `(L_sys, M_sys, R_sys, L_env, M_env,
//! R_env)`. Detached ancillas are dropped from the ordering, and a two-qubit
//! device simply has no `M` factors.

use std::fmt;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kron_all, thermal_state, ComplexMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn invalid(field: &str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter { field: field.to_string(), reason: reason.into() }
}

/// One of the three transistor terminals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Terminal {
    L,
    M,
    R,
}

impl Terminal {
    pub const ALL: [Terminal; 3] = [Terminal::L, Terminal::M, Terminal::R];

    pub fn index(self) -> usize {
        match self {
            Terminal::L => 0,
            Terminal::M => 1,
            Terminal::R => 2,
        }
    }

    /// Left-right mirror image; `M` maps to itself.
    pub fn mirror(self) -> Terminal {
        match self {
            Terminal::L => Terminal::R,
            Terminal::M => Terminal::M,
            Terminal::R => Terminal::L,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Terminal::L => "L",
            Terminal::M => "M",
            Terminal::R => "R",
        }
    }

    pub fn parse(s: &str) -> Option<Terminal> {
        match s {
            "L" | "l" => Some(Terminal::L),
            "M" | "m" => Some(Terminal::M),
            "R" | "r" => Some(Terminal::R),
            _ => None,
        }
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pauli matrices for spin-1/2 and the (unnormalised-z) spin-1 matrices used
/// for the qutrit ancillas.
#[derive(Clone, Debug)]
pub struct SpinOps {
    pub sx_half: ComplexMatrix,
    pub sy_half: ComplexMatrix,
    pub sz_half: ComplexMatrix,
    pub sx_one: ComplexMatrix,
    pub sz_one: ComplexMatrix,
}

impl SpinOps {
    pub fn new() -> Self {
        let z = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let s = FRAC_1_SQRT_2;
        SpinOps {
            sx_half: ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
            sy_half: ComplexMatrix::from_rows(&[vec![z, -i], vec![i, z]]),
            sz_half: ComplexMatrix::from_real_diagonal(&[1.0, -1.0]),
            sx_one: ComplexMatrix::from_real_rows(&[&[0.0, s, 0.0], &[s, 0.0, s], &[0.0, s, 0.0]]),
            sz_one: ComplexMatrix::from_real_diagonal(&[1.0, 0.0, -1.0]),
        }
    }
}

impl Default for SpinOps {
    fn default() -> Self {
        Self::new()
    }
}

/// Qubit splittings and pairwise `sigma_z sigma_z` couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub omega_l: f64,
    pub omega_m: f64,
    pub omega_r: f64,
    pub omega_ml: f64,
    pub omega_mr: f64,
    pub omega_lr: f64,
}

/// Named coupling configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingPreset {
    /// All splittings and the M-L, M-R couplings equal `delta`, no L-R coupling.
    Baseline,
    /// As baseline, plus an L-R coupling equal to `delta`.
    Symmetric,
    /// `omega_mr = delta + 0.1`, `omega_lr = delta - 0.1`.
    Asymmetric,
    /// Two-qubit device with `omega_l = 1`, `omega_r = 2`.
    #[serde(rename = "appendixA")]
    AppendixA,
}

impl CouplingPreset {
    pub fn name(self) -> &'static str {
        match self {
            CouplingPreset::Baseline => "baseline",
            CouplingPreset::Symmetric => "symmetric",
            CouplingPreset::Asymmetric => "asymmetric",
            CouplingPreset::AppendixA => "appendixA",
        }
    }

    pub fn parse(s: &str) -> Option<CouplingPreset> {
        match s {
            "baseline" => Some(CouplingPreset::Baseline),
            "symmetric" => Some(CouplingPreset::Symmetric),
            "asymmetric" => Some(CouplingPreset::Asymmetric),
            "appendixA" | "appendix-a" => Some(CouplingPreset::AppendixA),
            _ => None,
        }
    }
}

/// Skew used by the asymmetric preset.
pub const ASYMMETRIC_SKEW: f64 = 0.1;

impl CouplingConfig {
    pub fn zero() -> Self {
        CouplingConfig { omega_l: 0.0, omega_m: 0.0, omega_r: 0.0, omega_ml: 0.0, omega_mr: 0.0, omega_lr: 0.0 }
    }

    pub fn baseline(delta: f64) -> Self {
        CouplingConfig {
            omega_l: delta,
            omega_m: delta,
            omega_r: delta,
            omega_ml: delta,
            omega_mr: delta,
            omega_lr: 0.0,
        }
    }

    pub fn symmetric(delta: f64) -> Self {
        CouplingConfig { omega_lr: delta, ..Self::baseline(delta) }
    }

    pub fn asymmetric(delta: f64, skew: f64) -> Self {
        CouplingConfig { omega_mr: delta + skew, omega_lr: delta - skew, ..Self::baseline(delta) }
    }

    /// Two-qubit device: `omega_l = 1`, `omega_r = 2`, L-R coupling `delta`.
    pub fn appendix_a(delta: f64) -> Self {
        CouplingConfig {
            omega_l: 1.0,
            omega_m: 0.0,
            omega_r: 2.0,
            omega_ml: 0.0,
            omega_mr: 0.0,
            omega_lr: delta,
        }
    }

    pub fn preset(preset: CouplingPreset, delta: f64) -> Self {
        match preset {
            CouplingPreset::Baseline => Self::baseline(delta),
            CouplingPreset::Symmetric => Self::symmetric(delta),
            CouplingPreset::Asymmetric => Self::asymmetric(delta, ASYMMETRIC_SKEW),
            CouplingPreset::AppendixA => Self::appendix_a(delta),
        }
    }

    pub fn splitting(&self, t: Terminal) -> f64 {
        match t {
            Terminal::L => self.omega_l,
            Terminal::M => self.omega_m,
            Terminal::R => self.omega_r,
        }
    }

    pub fn pair(&self, a: Terminal, b: Terminal) -> f64 {
        use Terminal::*;
        match (a.min(b), a.max(b)) {
            (L, M) => self.omega_ml,
            (M, R) => self.omega_mr,
            (L, R) => self.omega_lr,
            _ => 0.0,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("omega_l", self.omega_l),
            ("omega_m", self.omega_m),
            ("omega_r", self.omega_r),
            ("omega_ml", self.omega_ml),
            ("omega_mr", self.omega_mr),
            ("omega_lr", self.omega_lr),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Type of ancilla making up each environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    QutritLinear,
    /// Qutrit with the middle level shifted by `epsilon`: transmon-like for
    /// `epsilon < 0`, Kerr-like for `epsilon > 0`.
    QutritNonlinear,
    Qubit,
}

impl EnvKind {
    pub fn ancilla_dim(self) -> usize {
        match self {
            EnvKind::QutritLinear | EnvKind::QutritNonlinear => 3,
            EnvKind::Qubit => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::QutritLinear => "qutrit-linear",
            EnvKind::QutritNonlinear => "qutrit-nonlinear",
            EnvKind::Qubit => "qubit",
        }
    }

    pub fn parse(s: &str) -> Option<EnvKind> {
        match s {
            "qutrit-linear" => Some(EnvKind::QutritLinear),
            "qutrit-nonlinear" => Some(EnvKind::QutritNonlinear),
            "qubit" => Some(EnvKind::Qubit),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Temperatures {
    pub l: f64,
    pub m: f64,
    pub r: f64,
}

impl Temperatures {
    pub fn get(&self, t: Terminal) -> f64 {
        match t {
            Terminal::L => self.l,
            Terminal::M => self.m,
            Terminal::R => self.r,
        }
    }

    pub fn with(mut self, t: Terminal, value: f64) -> Self {
        match t {
            Terminal::L => self.l = value,
            Terminal::M => self.m = value,
            Terminal::R => self.r = value,
        }
        self
    }

    pub fn mirrored(self) -> Self {
        Temperatures { l: self.r, m: self.m, r: self.l }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attachment {
    pub l: bool,
    pub m: bool,
    pub r: bool,
}

impl Attachment {
    pub const ALL: Attachment = Attachment { l: true, m: true, r: true };
    pub const NONE: Attachment = Attachment { l: false, m: false, r: false };

    pub fn get(&self, t: Terminal) -> bool {
        match t {
            Terminal::L => self.l,
            Terminal::M => self.m,
            Terminal::R => self.r,
        }
    }

    pub fn without(mut self, t: Terminal) -> Self {
        match t {
            Terminal::L => self.l = false,
            Terminal::M => self.m = false,
            Terminal::R => self.r = false,
        }
        self
    }
}

/// Environment description shared by all three terminals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub kind: EnvKind,
    /// Ancilla level spacing.
    pub delta: f64,
    /// Middle-level shift; only read for [`EnvKind::QutritNonlinear`].
    pub epsilon: f64,
    pub temperatures: Temperatures,
    pub attached: Attachment,
}

/// Every physical and numerical parameter of a single run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub coupling: CouplingConfig,
    pub env: EnvSpec,
    /// System-ancilla coupling strength.
    pub g: f64,
    /// Duration of one collision.
    pub dt_collision: f64,
    /// Sampling step inside a collision; must divide `dt_collision`.
    pub sample_dt: f64,
    /// Half-step of the temperature stencil.
    pub stencil_h: f64,
    pub n_system_qubits: usize,
}

pub const DEFAULT_DELTA: f64 = 3.0;
pub const DEFAULT_G: f64 = 4.0;
pub const DEFAULT_DT_COLLISION: f64 = 0.5;
pub const DEFAULT_SAMPLE_DT: f64 = 0.01;
pub const DEFAULT_STENCIL_H: f64 = 0.05;

impl ModelConfig {
    /// Linear qutrit environments on all three terminals with
    /// `T_L = 4`, `T_M = 10`, `T_R = 10`.
    pub fn baseline() -> Self {
        ModelConfig {
            coupling: CouplingConfig::baseline(DEFAULT_DELTA),
            env: EnvSpec {
                kind: EnvKind::QutritLinear,
                delta: DEFAULT_DELTA,
                epsilon: 0.0,
                temperatures: Temperatures { l: 4.0, m: 10.0, r: 10.0 },
                attached: Attachment::ALL,
            },
            g: DEFAULT_G,
            dt_collision: DEFAULT_DT_COLLISION,
            sample_dt: DEFAULT_SAMPLE_DT,
            stencil_h: DEFAULT_STENCIL_H,
            n_system_qubits: 3,
        }
    }

    pub fn with_preset(mut self, preset: CouplingPreset) -> Self {
        self.coupling = CouplingConfig::preset(preset, self.env.delta);
        if preset == CouplingPreset::AppendixA {
            self.n_system_qubits = 2;
            self.env.attached.m = false;
        }
        self
    }

    pub fn with_temperature(mut self, t: Terminal, value: f64) -> Self {
        self.env.temperatures = self.env.temperatures.with(t, value);
        self
    }

    /// Number of samples recorded per collision.
    pub fn samples_per_collision(&self) -> usize {
        (self.dt_collision / self.sample_dt).round() as usize
    }

    /// System qubits in tensor order.
    pub fn system_terminals(&self) -> Vec<Terminal> {
        if self.n_system_qubits == 2 {
            vec![Terminal::L, Terminal::R]
        } else {
            Terminal::ALL.to_vec()
        }
    }

    /// Terminals that currently carry an ancilla, in tensor order.
    pub fn attached_terminals(&self) -> Vec<Terminal> {
        self.system_terminals().into_iter().filter(|&t| self.env.attached.get(t)).collect()
    }

    pub fn layout(&self) -> JointLayout {
        JointLayout {
            system: self.system_terminals(),
            ancillas: self.attached_terminals(),
            ancilla_dim: self.env.kind.ancilla_dim(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.coupling.validate()?;
        if self.n_system_qubits != 2 && self.n_system_qubits != 3 {
            return Err(invalid("n_system_qubits", "must be 2 or 3"));
        }
        if self.n_system_qubits == 2 && self.env.attached.m {
            return Err(invalid("env.attached", "a two-qubit device has no middle terminal"));
        }
        for (name, v) in [("g", self.g), ("env.delta", self.env.delta), ("env.epsilon", self.env.epsilon)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if !(self.dt_collision.is_finite() && self.dt_collision > 0.0) {
            return Err(invalid("dt_collision", "must be positive"));
        }
        if !(self.sample_dt.is_finite() && self.sample_dt > 0.0) {
            return Err(invalid("sample_dt", "must be positive"));
        }
        let ratio = self.dt_collision / self.sample_dt;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid("sample_dt", "must divide dt_collision into an integer number of samples"));
        }
        if !(self.stencil_h.is_finite() && self.stencil_h > 0.0) {
            return Err(invalid("stencil_h", "must be positive"));
        }
        for t in self.attached_terminals() {
            let temp = self.env.temperatures.get(t);
            if !(temp.is_finite() && temp > 0.0) {
                let field = format!("env.temperatures.{}", t.name().to_lowercase());
                return Err(invalid(&field, format!("temperature of an attached terminal must be positive, got {temp}")));
            }
        }
        Ok(())
    }
}

/// Index map of the joint system+ancilla space for one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointLayout {
    pub system: Vec<Terminal>,
    pub ancillas: Vec<Terminal>,
    pub ancilla_dim: usize,
}

impl JointLayout {
    pub fn system_dim(&self) -> usize {
        1 << self.system.len()
    }

    pub fn env_dim(&self) -> usize {
        self.ancilla_dim.pow(self.ancillas.len() as u32)
    }

    pub fn total_dim(&self) -> usize {
        self.system_dim() * self.env_dim()
    }

    /// Factor dimensions in tensor order.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![2; self.system.len()];
        d.extend(std::iter::repeat(self.ancilla_dim).take(self.ancillas.len()));
        d
    }

    pub fn system_slot(&self, t: Terminal) -> Option<usize> {
        self.system.iter().position(|&s| s == t)
    }

    pub fn ancilla_slot(&self, t: Terminal) -> Option<usize> {
        self.ancillas.iter().position(|&s| s == t).map(|k| self.system.len() + k)
    }

    /// Tensor product with the given operators at the given slots and
    /// identities elsewhere.
    pub fn embed(&self, ops: &[(usize, &ComplexMatrix)]) -> ComplexMatrix {
        let dims = self.dims();
        let idents: Vec<ComplexMatrix> = dims.iter().map(|&d| ComplexMatrix::identity(d)).collect();
        let factors: Vec<&ComplexMatrix> = (0..dims.len())
            .map(|slot| ops.iter().find(|(s, _)| *s == slot).map_or(&idents[slot], |(_, op)| *op))
            .collect();
        kron_all(factors)
    }
}

/// Sign (+1 for `|0>`, -1 for `|1>`) of qubit `slot` in basis state `index`
/// of an `n`-qubit register.
fn z_sign(index: usize, slot: usize, n: usize) -> f64 {
    if (index >> (n - 1 - slot)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `H_sys = -sum_i (omega_i/2) Z_i - sum_{i<j} omega_ij Z_i Z_j`, diagonal in
/// the computational basis (`|0>` is the `+1` eigenstate of `Z`).
pub fn build_system_hamiltonian(coupling: &CouplingConfig, n: usize) -> Result<ComplexMatrix, ModelError> {
    let terminals = match n {
        2 => vec![Terminal::L, Terminal::R],
        3 => Terminal::ALL.to_vec(),
        _ => return Err(invalid("n_system_qubits", "must be 2 or 3")),
    };
    let dim = 1 << n;
    let diag: Vec<f64> = (0..dim)
        .map(|idx| {
            let mut e = 0.0;
            for (a, &ta) in terminals.iter().enumerate() {
                e -= 0.5 * coupling.splitting(ta) * z_sign(idx, a, n);
                for (b, &tb) in terminals.iter().enumerate().skip(a + 1) {
                    e -= coupling.pair(ta, tb) * z_sign(idx, a, n) * z_sign(idx, b, n);
                }
            }
            e
        })
        .collect();
    Ok(ComplexMatrix::from_real_diagonal(&diag))
}

/// Local Hamiltonian of a single ancilla.
pub fn build_env_local_hamiltonian(env: &EnvSpec) -> ComplexMatrix {
    let d = env.delta;
    match env.kind {
        EnvKind::QutritLinear => ComplexMatrix::from_real_diagonal(&[-d, 0.0, d]),
        EnvKind::QutritNonlinear => ComplexMatrix::from_real_diagonal(&[-d, -env.epsilon, d]),
        EnvKind::Qubit => ComplexMatrix::from_real_diagonal(&[-d, d]),
    }
}

/// `sigma_x` of one ancilla.
pub fn ancilla_sigma_x(kind: EnvKind) -> ComplexMatrix {
    let ops = SpinOps::new();
    match kind {
        EnvKind::Qubit => ops.sx_half,
        _ => ops.sx_one,
    }
}

/// Gibbs state of one ancilla of `terminal` at that terminal's temperature.
pub fn ancilla_thermal_state(env: &EnvSpec, terminal: Terminal) -> Result<ComplexMatrix, ModelError> {
    let temp = env.temperatures.get(terminal);
    if !(temp.is_finite() && temp > 0.0) {
        return Err(invalid("temperature", format!("{terminal} temperature must be positive, got {temp}")));
    }
    Ok(thermal_state(&build_env_local_hamiltonian(env), 1.0 / temp)?)
}

/// `-g sum_{attached i} sigma_x^(i) (x) sigma_x^(i),env` on the joint space of
/// an `n`-qubit device.
pub fn build_interaction_hamiltonian(g: f64, env: &EnvSpec, n: usize) -> Result<ComplexMatrix, ModelError> {
    let mut cfg = ModelConfig::baseline();
    cfg.env = *env;
    cfg.n_system_qubits = n;
    if n != 2 && n != 3 {
        return Err(invalid("n_system_qubits", "must be 2 or 3"));
    }
    let layout = cfg.layout();
    Ok(interaction_on(&layout, g, env.kind))
}

fn interaction_on(layout: &JointLayout, g: f64, kind: EnvKind) -> ComplexMatrix {
    let ops = SpinOps::new();
    let sx_env = ancilla_sigma_x(kind);
    let dim = layout.total_dim();
    let mut h = ComplexMatrix::zeros(dim, dim);
    for &t in &layout.ancillas {
        let qs = layout.system_slot(t).expect("attached terminal is a system qubit");
        let es = layout.ancilla_slot(t).expect("attached terminal has an ancilla slot");
        h += &layout.embed(&[(qs, &ops.sx_half), (es, &sx_env)]).scale(-g);
    }
    h
}

/// `H_tot = H_sys (x) I + sum_i I (x) H_env^(i) (x) I + H_int`.
pub fn build_total_hamiltonian(config: &ModelConfig) -> Result<ComplexMatrix, ModelError> {
    config.validate()?;
    let layout = config.layout();
    let h_sys = build_system_hamiltonian(&config.coupling, config.n_system_qubits)?;
    let env_ident = ComplexMatrix::identity(layout.env_dim());
    let mut h = crate::linalg::kron(&h_sys, &env_ident);
    let h_env = build_env_local_hamiltonian(&config.env);
    for &t in &layout.ancillas {
        let slot = layout.ancilla_slot(t).expect("ancilla slot");
        h += &layout.embed(&[(slot, &h_env)]);
    }
    h += &interaction_on(&layout, config.g, config.env.kind);
    Ok(h)
}

/// Local Hamiltonian `-(omega_X/2) sigma_z` of system qubit `t`.
pub fn local_qubit_hamiltonian(coupling: &CouplingConfig, t: Terminal) -> ComplexMatrix {
    SpinOps::new().sz_half.scale(-0.5 * coupling.splitting(t))
}

/// Permutation operator exchanging qubits `a` and `b` of an `n`-qubit register.
pub fn qubit_swap(n: usize, a: usize, b: usize) -> ComplexMatrix {
    let dim = 1 << n;
    let mut p = ComplexMatrix::zeros(dim, dim);
    for idx in 0..dim {
        let bit_a = (idx >> (n - 1 - a)) & 1;
        let bit_b = (idx >> (n - 1 - b)) & 1;
        let mut out = idx & !(1 << (n - 1 - a)) & !(1 << (n - 1 - b));
        out |= bit_b << (n - 1 - a);
        out |= bit_a << (n - 1 - b);
        p[(out, idx)] = C64::new(1.0, 0.0);
    }
    p
}

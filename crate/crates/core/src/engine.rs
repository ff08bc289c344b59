//! Repeated-interaction dynamics.
//!
//! Every collision starts from `rho_sys (x) rho_env` with fresh thermal
//! ancillas, evolves under the time-independent `H_tot` for `dt_collision`,
//! and traces the ancillas away. All work happens in the eigenbasis of
//! `H_tot`: one decomposition per structural configuration serves every
//! collision, sample and temperature.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    hermitian_eig, kron_all, matmul, partial_trace, ComplexMatrix, LinalgError,
};
use crate::model::{
    ancilla_thermal_state, build_total_hamiltonian, local_qubit_hamiltonian, JointLayout, ModelConfig,
    ModelError, Temperatures, Terminal,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("cached propagator does not match the configuration: {0}")]
    CacheMismatch(String),
    #[error("t_max = {t_max} is not a non-negative multiple of dt_collision = {dt}")]
    PartialCollision { t_max: f64, dt: f64 },
    #[error("t = {t} is not on the sampling grid (sample_dt = {sample_dt})")]
    OffGrid { t: f64, sample_dt: f64 },
    #[error("terminal {0} is not part of this device")]
    MissingTerminal(Terminal),
    #[error("no right-limit value at t = {0}: the trajectory ends there")]
    NoRightLimit(f64),
    #[error("initial state has dimension {found}, expected {expected}")]
    InitialDimension { expected: usize, found: usize },
}

/// Which side of a collision boundary `t = k dt` a current is read from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySide {
    /// End of the finished collision, before the ancilla is replaced.
    #[default]
    Left,
    /// Start of the next collision, with a fresh ancilla.
    Right,
}

impl BoundarySide {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "left" => Some(BoundarySide::Left),
            "right" => Some(BoundarySide::Right),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundarySide::Left => "left",
            BoundarySide::Right => "right",
        }
    }
}

/// `|0...0><0...0|` on an `n`-qubit register.
pub fn initial_state(n: usize) -> ComplexMatrix {
    let dim = 1 << n;
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    psi[0] = C64::new(1.0, 0.0);
    ComplexMatrix::projector(&psi)
}

/// Grid index of `t` on a grid of step `dt`, if `t` lies on it.
pub(crate) fn grid_index(t: f64, dt: f64) -> Option<usize> {
    if !(t.is_finite() && t >= -1e-12) {
        return None;
    }
    let k = (t / dt).round();
    if (t - k * dt).abs() <= 1e-9 * dt.max(1.0) {
        Some(k as usize)
    } else {
        None
    }
}

/// The configuration with every temperature zeroed: what a propagator is
/// keyed on, since temperature only enters through the ancilla states.
fn structural(config: &ModelConfig) -> ModelConfig {
    let mut c = *config;
    c.env.temperatures = Temperatures { l: 0.0, m: 0.0, r: 0.0 };
    c
}

/// Spectral data of `H_tot` plus the current operators, shared read-only
/// between every run that differs only in temperatures.
pub struct Propagator {
    key: ModelConfig,
    layout: JointLayout,
    h_tot: ComplexMatrix,
    eigenvalues: Vec<f64>,
    v: DMatrix<C64>,
    v_adj: DMatrix<C64>,
    /// `(V^dag K_X V)^T` per system slot, `K_X = i[H_tot, H_X (x) I]`.
    current_ops_t: Vec<DMatrix<C64>>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator").field("dim", &self.eigenvalues.len()).field("layout", &self.layout).finish()
    }
}

impl Propagator {
    pub fn new(config: &ModelConfig) -> Result<Self, EngineError> {
        let h_tot = build_total_hamiltonian(config)?;
        let layout = config.layout();
        let spectrum = hermitian_eig(&h_tot)?;
        let v = spectrum.eigenvectors.inner().clone();
        let v_adj = v.adjoint();
        let mut current_ops_t = Vec::with_capacity(layout.system.len());
        for (slot, &t) in layout.system.iter().enumerate() {
            let h_x = local_qubit_hamiltonian(&config.coupling, t);
            let o = layout.embed(&[(slot, &h_x)]);
            let k = h_tot.commutator(&o).scale_c(C64::new(0.0, 1.0));
            let k_eig = matmul(&matmul(&v_adj, k.inner()), &v);
            current_ops_t.push(k_eig.transpose());
        }
        Ok(Propagator {
            key: structural(config),
            layout,
            h_tot,
            eigenvalues: spectrum.eigenvalues,
            v,
            v_adj,
            current_ops_t,
        })
    }

    pub fn layout(&self) -> &JointLayout {
        &self.layout
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.h_tot
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Whether this propagator was built for `config` (temperatures aside).
    pub fn matches(&self, config: &ModelConfig) -> bool {
        self.key == structural(config)
    }

    fn check(&self, config: &ModelConfig) -> Result<(), EngineError> {
        if self.matches(config) {
            Ok(())
        } else {
            Err(EngineError::CacheMismatch("Hamiltonian parameters changed since the spectrum was cached".into()))
        }
    }

    fn phases(&self, tau: f64) -> Vec<C64> {
        self.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * tau)).collect()
    }

    /// `U(tau) = exp(-i H_tot tau)` in the computational basis.
    pub fn unitary(&self, tau: f64) -> ComplexMatrix {
        let u = self.phases(tau);
        let mut vu = self.v.clone();
        for (j, &p) in u.iter().enumerate() {
            for x in vu.column_mut(j).iter_mut() {
                *x *= p;
            }
        }
        ComplexMatrix::from_inner(matmul(&vu, &self.v_adj))
    }
}

/// Ancilla states for one temperature set, pre-applied to the eigenvectors.
#[derive(Clone)]
struct AncillaFrame {
    /// Product state of all attached ancillas.
    env_state: ComplexMatrix,
    /// `(I_sys (x) rho_env) V`.
    env_v: DMatrix<C64>,
}

impl AncillaFrame {
    fn new(prop: &Propagator, config: &ModelConfig) -> Result<Self, EngineError> {
        let layout = &prop.layout;
        let states: Vec<ComplexMatrix> = layout
            .ancillas
            .iter()
            .map(|&t| ancilla_thermal_state(&config.env, t))
            .collect::<Result<_, _>>()?;
        let env_state = if states.is_empty() { ComplexMatrix::identity(1) } else { kron_all(states.iter()) };
        let de = layout.env_dim();
        let ns = layout.system_dim();
        let d = prop.dim();
        let mut env_v = DMatrix::<C64>::zeros(d, d);
        for i in 0..ns {
            let block = prop.v.rows(i * de, de).into_owned();
            let prod = matmul(env_state.inner(), &block);
            env_v.rows_mut(i * de, de).copy_from(&prod);
        }
        Ok(AncillaFrame { env_state, env_v })
    }
}

/// Joint state at the start of one collision, expressed in the eigenbasis.
/// Everything within the collision follows from it by phase factors.
pub struct CollisionFrame<'a> {
    prop: &'a Propagator,
    r0: DMatrix<C64>,
}

impl<'a> CollisionFrame<'a> {
    fn new(prop: &'a Propagator, anc: &AncillaFrame, rho_sys: &ComplexMatrix) -> Self {
        let de = prop.layout.env_dim();
        let ns = prop.layout.system_dim();
        let d = prop.dim();
        // X = (rho_sys (x) I) (I (x) rho_env) V, assembled block row by block row.
        let mut x = DMatrix::<C64>::zeros(d, d);
        for i in 0..ns {
            let mut acc = DMatrix::<C64>::zeros(de, d);
            for j in 0..ns {
                let c = rho_sys[(i, j)];
                if c != C64::new(0.0, 0.0) {
                    acc += anc.env_v.rows(j * de, de) * c;
                }
            }
            x.rows_mut(i * de, de).copy_from(&acc);
        }
        CollisionFrame { prop, r0: matmul(&prop.v_adj, &x) }
    }

    fn evolved(&self, tau: f64) -> DMatrix<C64> {
        let u = self.prop.phases(tau);
        let mut y = self.r0.clone();
        for b in 0..y.ncols() {
            let ub = u[b].conj();
            for (a, x) in y.column_mut(b).iter_mut().enumerate() {
                *x *= u[a] * ub;
            }
        }
        y
    }

    /// Full joint state `U(tau) rho_0 U(tau)^dag` in the computational basis.
    pub fn joint_state(&self, tau: f64) -> ComplexMatrix {
        let y = self.evolved(tau);
        ComplexMatrix::from_inner(matmul(&matmul(&self.prop.v, &y), &self.prop.v_adj))
    }

    /// Reduced system state at `tau`.
    pub fn system_state(&self, tau: f64) -> ComplexMatrix {
        let y = self.evolved(tau);
        let w = matmul(&self.prop.v, &y);
        let de = self.prop.layout.env_dim();
        let ns = self.prop.layout.system_dim();
        let v = &self.prop.v;
        let mut rho = ComplexMatrix::zeros(ns, ns);
        for i in 0..ns {
            for j in 0..ns {
                let mut s = C64::new(0.0, 0.0);
                for e in 0..de {
                    let wi = w.row(i * de + e);
                    let vj = v.row(j * de + e);
                    for q in 0..w.ncols() {
                        s += wi[q] * vj[q].conj();
                    }
                }
                rho[(i, j)] = s;
            }
        }
        rho.hermitian_part()
    }

    /// Local heat currents of every system qubit at `tau`, in slot order.
    /// Returns the complex values so callers can inspect the imaginary residue.
    pub fn currents_complex(&self, tau: f64) -> Vec<C64> {
        let u = self.prop.phases(tau);
        let d = u.len();
        self.prop
            .current_ops_t
            .iter()
            .map(|kt| {
                // -Tr(Y K') = -sum_ab r0_ab u_a conj(u_b) K'_ba
                let mut total = C64::new(0.0, 0.0);
                for b in 0..d {
                    let r_col = self.r0.column(b);
                    let k_col = kt.column(b);
                    let mut s = C64::new(0.0, 0.0);
                    for a in 0..d {
                        s += r_col[a] * k_col[a] * u[a];
                    }
                    total += s * u[b].conj();
                }
                -total
            })
            .collect()
    }

    pub fn currents(&self, tau: f64) -> Vec<f64> {
        self.currents_complex(tau).into_iter().map(|c| c.re).collect()
    }
}

/// Mutable simulation state: the current system density matrix plus the
/// caches needed to run collisions for one configuration.
pub struct SimulationState {
    config: ModelConfig,
    prop: Arc<Propagator>,
    ancillas: AncillaFrame,
    rho: ComplexMatrix,
    time: f64,
    collisions: usize,
}

impl SimulationState {
    pub fn new(config: &ModelConfig) -> Result<Self, EngineError> {
        let prop = Arc::new(Propagator::new(config)?);
        Self::with_propagator(prop, config)
    }

    pub fn with_propagator(prop: Arc<Propagator>, config: &ModelConfig) -> Result<Self, EngineError> {
        config.validate()?;
        prop.check(config)?;
        let ancillas = AncillaFrame::new(&prop, config)?;
        Ok(SimulationState {
            config: *config,
            rho: initial_state(prop.layout.system.len()),
            prop,
            ancillas,
            time: 0.0,
            collisions: 0,
        })
    }

    /// Replace the system state (time is reset to zero).
    pub fn with_initial(mut self, rho: ComplexMatrix) -> Result<Self, EngineError> {
        let expected = self.prop.layout.system_dim();
        if rho.rows() != expected || rho.cols() != expected {
            return Err(EngineError::InitialDimension { expected, found: rho.rows() });
        }
        rho.check_density_matrix(1e-9)?;
        self.rho = rho;
        self.time = 0.0;
        self.collisions = 0;
        Ok(self)
    }

    pub fn system_state(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn collisions(&self) -> usize {
        self.collisions
    }

    pub fn propagator(&self) -> &Arc<Propagator> {
        &self.prop
    }

    /// Product of the fresh ancilla states attached at every collision.
    pub fn ancilla_state(&self) -> &ComplexMatrix {
        &self.ancillas.env_state
    }

    /// Joint state at the start of the next collision.
    pub fn frame(&self) -> CollisionFrame<'_> {
        CollisionFrame::new(&self.prop, &self.ancillas, &self.rho)
    }

    /// Finish the current collision without sampling inside it.
    pub fn advance(&mut self) {
        let rho = self.frame().system_state(self.config.dt_collision);
        self.finish(rho);
    }

    fn finish(&mut self, rho: ComplexMatrix) {
        self.rho = rho;
        self.collisions += 1;
        self.time = self.collisions as f64 * self.config.dt_collision;
    }
}

/// One recorded instant inside a collision.
#[derive(Clone, Debug)]
pub struct CollisionSample {
    /// Time since the start of the collision.
    pub tau: f64,
    pub time: f64,
    pub system_state: Option<ComplexMatrix>,
    /// Per system slot.
    pub currents: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CollisionRecord {
    /// Currents at `tau = 0`, i.e. just after the fresh ancillas attach.
    pub right_limit_currents: Vec<f64>,
    /// Samples at `tau = sample_dt, 2 sample_dt, ..., dt_collision`.
    pub samples: Vec<CollisionSample>,
}

/// Runs one full collision, sampling every `sample_dt`.
pub fn step_collision(
    state: &mut SimulationState,
    config: &ModelConfig,
    record_states: bool,
) -> Result<CollisionRecord, EngineError> {
    if *config != state.config {
        return Err(EngineError::CacheMismatch("configuration differs from the one the state was built for".into()));
    }
    let n = config.samples_per_collision();
    let start = state.time;
    let (record, rho_end) = {
        let frame = state.frame();
        let right_limit_currents = frame.currents(0.0);
        let mut samples = Vec::with_capacity(n);
        let mut rho_end = None;
        for s in 1..=n {
            let tau = s as f64 * config.sample_dt;
            let sys = if record_states || s == n { Some(frame.system_state(tau)) } else { None };
            if s == n {
                rho_end = sys.clone();
            }
            samples.push(CollisionSample {
                tau,
                time: start + tau,
                system_state: if record_states { sys } else { None },
                currents: frame.currents(tau),
            });
        }
        (CollisionRecord { right_limit_currents, samples }, rho_end.expect("at least one sample"))
    };
    state.finish(rho_end);
    Ok(record)
}

/// Time-sampled result of one run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub terminals: Vec<Terminal>,
    pub sample_dt: f64,
    pub dt_collision: f64,
    pub times: Vec<f64>,
    /// Empty unless states were recorded.
    pub system_states: Vec<ComplexMatrix>,
    /// `qubit_states[slot][k]`; empty unless states were recorded.
    pub qubit_states: Vec<Vec<ComplexMatrix>>,
    /// `currents[slot][k]`. Boundary samples hold the left limit, except the
    /// very first sample which has no left side.
    pub currents: Vec<Vec<f64>>,
    pub collision_index: Vec<usize>,
    /// `right_limit_currents[slot][c]`: value at the start of collision `c`.
    pub right_limit_currents: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn slot(&self, terminal: Terminal) -> Option<usize> {
        self.terminals.iter().position(|&t| t == terminal)
    }

    pub fn current_series(&self, terminal: Terminal) -> Option<&[f64]> {
        self.slot(terminal).map(|s| self.currents[s].as_slice())
    }

    pub fn qubit_series(&self, terminal: Terminal) -> Option<&[ComplexMatrix]> {
        self.slot(terminal).map(|s| self.qubit_states[s].as_slice())
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        grid_index(t, self.sample_dt).filter(|&k| k < self.times.len())
    }

    /// `J_X(t)` with the requested side at collision boundaries.
    pub fn current_at(&self, t: f64, terminal: Terminal, side: BoundarySide) -> Result<f64, EngineError> {
        let slot = self.slot(terminal).ok_or(EngineError::MissingTerminal(terminal))?;
        let k = self.index_of(t).ok_or(EngineError::OffGrid { t, sample_dt: self.sample_dt })?;
        if side == BoundarySide::Right {
            if let Some(c) = grid_index(t, self.dt_collision) {
                return self.right_limit_currents[slot].get(c).copied().ok_or(EngineError::NoRightLimit(t));
            }
        }
        Ok(self.currents[slot][k])
    }
}

/// Options for [`evolve_with`].
#[derive(Clone, Debug, Default)]
pub struct EvolveOptions {
    /// Initial system state; `|0...0>` when absent.
    pub initial: Option<ComplexMatrix>,
    /// Keep the system and qubit states at every sample.
    pub record_states: bool,
}

fn collision_count(config: &ModelConfig, t_max: f64) -> Result<usize, EngineError> {
    grid_index(t_max, config.dt_collision).ok_or(EngineError::PartialCollision { t_max, dt: config.dt_collision })
}

/// Full collisional evolution over `[0, t_max]`, recording everything.
pub fn evolve(config: &ModelConfig, t_max: f64) -> Result<Trajectory, EngineError> {
    let prop = Arc::new(Propagator::new(config)?);
    evolve_with(&prop, config, t_max, &EvolveOptions { initial: None, record_states: true })
}

pub fn evolve_with(
    prop: &Arc<Propagator>,
    config: &ModelConfig,
    t_max: f64,
    options: &EvolveOptions,
) -> Result<Trajectory, EngineError> {
    let n_coll = collision_count(config, t_max)?;
    let mut state = SimulationState::with_propagator(Arc::clone(prop), config)?;
    if let Some(rho) = &options.initial {
        state = state.with_initial(rho.clone())?;
    }
    let layout = prop.layout().clone();
    let n_slots = layout.system.len();
    let dims = vec![2; n_slots];
    let per = config.samples_per_collision();

    let mut traj = Trajectory {
        terminals: layout.system.clone(),
        sample_dt: config.sample_dt,
        dt_collision: config.dt_collision,
        times: Vec::with_capacity(n_coll * per + 1),
        system_states: Vec::new(),
        qubit_states: vec![Vec::new(); n_slots],
        currents: vec![Vec::new(); n_slots],
        collision_index: Vec::new(),
        right_limit_currents: vec![Vec::new(); n_slots],
    };
    let push_states = |traj: &mut Trajectory, rho: ComplexMatrix| -> Result<(), EngineError> {
        for slot in 0..n_slots {
            traj.qubit_states[slot].push(partial_trace(&rho, &dims, &[slot])?);
        }
        traj.system_states.push(rho);
        Ok(())
    };

    // t = 0: the initial state, with the current of the first collision's
    // opening instant (there is no earlier collision to take a limit from).
    traj.times.push(0.0);
    traj.collision_index.push(0);
    let first = state.frame().currents(0.0);
    for slot in 0..n_slots {
        traj.currents[slot].push(first[slot]);
    }
    if options.record_states {
        push_states(&mut traj, state.system_state().clone())?;
    }

    for c in 0..n_coll {
        let rec = step_collision(&mut state, config, options.record_states)?;
        for slot in 0..n_slots {
            traj.right_limit_currents[slot].push(rec.right_limit_currents[slot]);
        }
        for (s, sample) in rec.samples.into_iter().enumerate() {
            let k = c * per + s + 1;
            traj.times.push(k as f64 * config.sample_dt);
            traj.collision_index.push(c);
            for slot in 0..n_slots {
                traj.currents[slot].push(sample.currents[slot]);
            }
            if let Some(rho) = sample.system_state {
                push_states(&mut traj, rho)?;
            }
        }
    }
    Ok(traj)
}

/// Currents of every system qubit at a single grid time `t`, evolving only
/// as far as needed.
pub fn currents_at_time(
    prop: &Arc<Propagator>,
    config: &ModelConfig,
    t: f64,
    side: BoundarySide,
) -> Result<Vec<f64>, EngineError> {
    let k = grid_index(t, config.sample_dt).ok_or(EngineError::OffGrid { t, sample_dt: config.sample_dt })?;
    let per = config.samples_per_collision();
    let mut state = SimulationState::with_propagator(Arc::clone(prop), config)?;
    // Collision containing the sample, and the offset inside it.
    let (coll, offset) = if k == 0 {
        (0, 0)
    } else if k % per == 0 && side == BoundarySide::Right {
        (k / per, 0)
    } else {
        ((k - 1) / per, (k - 1) % per + 1)
    };
    for _ in 0..coll {
        state.advance();
    }
    Ok(state.frame().currents(offset as f64 * config.sample_dt))
}

/// Reference implementation of `J_X` from a joint state: forms
/// `d rho_X/dt = Tr_{others}(-i[H_tot, rho])` explicitly and returns
/// `-Tr(d rho_X/dt H_X)` (positive when heat leaves the qubit).
pub fn local_heat_current(
    joint_state: &ComplexMatrix,
    h_tot: &ComplexMatrix,
    terminal: Terminal,
    config: &ModelConfig,
) -> Result<f64, EngineError> {
    let layout = config.layout();
    let slot = layout.system_slot(terminal).ok_or(EngineError::MissingTerminal(terminal))?;
    let rho_dot = h_tot.commutator(joint_state).scale_c(C64::new(0.0, -1.0));
    let rho_x_dot = partial_trace(&rho_dot, &layout.dims(), &[slot])?;
    let h_x = local_qubit_hamiltonian(&config.coupling, terminal);
    Ok(-rho_x_dot.trace_product(&h_x).re)
}

/// Linear map of one collision on the system alone, sampled inside the
/// collision: `superops[s]` sends `vec(rho_sys)` at the start of a collision
/// to `vec(rho_sys)` at `tau = (s+1) sample_dt`. Vectorisation is row-major.
#[derive(Clone, Debug)]
pub struct CollisionChannel {
    pub system_dim: usize,
    pub superops: Vec<DMatrix<C64>>,
}

impl CollisionChannel {
    pub fn new(prop: &Propagator, config: &ModelConfig) -> Result<Self, EngineError> {
        config.validate()?;
        prop.check(config)?;
        let anc = AncillaFrame::new(prop, config)?;
        let ns = prop.layout.system_dim();
        let de = prop.layout.env_dim();
        let d = prop.dim();
        let env = anc.env_state.inner();
        let n = config.samples_per_collision();
        let mut superops = Vec::with_capacity(n);
        for s in 1..=n {
            let u = prop.unitary(s as f64 * config.sample_dt);
            let u = u.inner();
            let blocks: Vec<DMatrix<C64>> = (0..ns).map(|i| u.columns(i * de, de).into_owned()).collect();
            let blocks_env: Vec<DMatrix<C64>> = blocks.iter().map(|b| matmul(b, env)).collect();
            let mut m = DMatrix::<C64>::zeros(ns * ns, ns * ns);
            for i in 0..ns {
                for j in 0..ns {
                    // Tr_env(U (|i><j| (x) rho_env) U^dag) = Tr_env(G_i C_j^dag)
                    let g = &blocks_env[i];
                    let c = &blocks[j];
                    for k in 0..ns {
                        for l in 0..ns {
                            let mut acc = C64::new(0.0, 0.0);
                            for e in 0..de {
                                let gr = g.row(k * de + e);
                                let cr = c.row(l * de + e);
                                for f in 0..de {
                                    acc += gr[f] * cr[f].conj();
                                }
                            }
                            m[(k * ns + l, i * ns + j)] = acc;
                        }
                    }
                }
            }
            superops.push(m);
        }
        debug_assert_eq!(d, ns * de);
        Ok(CollisionChannel { system_dim: ns, superops })
    }

    pub fn samples_per_collision(&self) -> usize {
        self.superops.len()
    }

    pub fn apply(&self, s: usize, rho: &ComplexMatrix) -> ComplexMatrix {
        let ns = self.system_dim;
        let v = nalgebra::DVector::from_iterator(ns * ns, (0..ns * ns).map(|q| rho[(q / ns, q % ns)]));
        let out = &self.superops[s] * v;
        ComplexMatrix::from_fn(ns, ns, |k, l| out[k * ns + l])
    }

    /// System states at every sample over `n_collisions` collisions, starting
    /// with `rho0` at `t = 0`.
    pub fn evolve(&self, rho0: &ComplexMatrix, n_collisions: usize) -> Vec<ComplexMatrix> {
        let n = self.samples_per_collision();
        let mut out = Vec::with_capacity(n_collisions * n + 1);
        out.push(rho0.clone());
        let mut start = rho0.clone();
        for _ in 0..n_collisions {
            for s in 0..n {
                out.push(self.apply(s, &start));
            }
            start = out.last().expect("non-empty").clone();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_distance;
    use crate::model::{Attachment, ModelConfig};

    fn short(mut c: ModelConfig) -> ModelConfig {
        c.sample_dt = 0.05;
        c
    }

    #[test]
    fn initial_states() {
        let r3 = initial_state(3);
        assert_eq!(r3.rows(), 8);
        assert_eq!(r3[(0, 0)].re, 1.0);
        assert!((r3.trace().re - 1.0).abs() < 1e-15);
        assert!((r3.purity() - 1.0).abs() < 1e-15);
        let r2 = initial_state(2);
        assert_eq!(r2.rows(), 4);
        assert_eq!(r2[(0, 0)].re, 1.0);
    }

    #[test]
    fn no_coupling_keeps_ground_state() {
        let mut cfg = short(ModelConfig::baseline());
        cfg.g = 0.0;
        let traj = evolve(&cfg, 1.0).unwrap();
        for rho in &traj.system_states {
            assert!(rho.max_abs_diff(&initial_state(3)) < 1e-12);
        }
        for series in &traj.currents {
            assert!(series.iter().all(|j| j.abs() < 1e-12));
        }
    }

    #[test]
    fn first_collision_moves_the_state() {
        let cfg = short(ModelConfig::baseline());
        let mut state = SimulationState::new(&cfg).unwrap();
        step_collision(&mut state, &cfg, false).unwrap();
        let d = trace_distance(state.system_state(), &initial_state(3)).unwrap();
        assert!(d > 0.01, "distance {d}");
    }

    #[test]
    fn collision_count_and_grid() {
        let cfg = short(ModelConfig::baseline());
        let traj = evolve(&cfg, 1.0).unwrap();
        assert_eq!(traj.times.len(), 21);
        assert_eq!(*traj.collision_index.last().unwrap(), 1);
        assert!((traj.times[20] - 1.0).abs() < 1e-12);
        assert_eq!(traj.right_limit_currents[0].len(), 2);
        let traj = evolve(&cfg, 0.0).unwrap();
        assert_eq!(traj.times.len(), 1);
        assert!(matches!(evolve(&cfg, 0.7), Err(EngineError::PartialCollision { .. })));
    }

    #[test]
    fn detached_everything_is_stationary() {
        let mut cfg = short(ModelConfig::baseline());
        cfg.env.attached = Attachment::NONE;
        let traj = evolve(&cfg, 1.0).unwrap();
        for rho in &traj.system_states {
            assert!(rho.max_abs_diff(&initial_state(3)) < 1e-12);
        }
    }

    #[test]
    fn fast_currents_match_reference() {
        let cfg = ModelConfig::baseline();
        let mut state = SimulationState::new(&cfg).unwrap();
        state.advance();
        let frame = state.frame();
        for tau in [0.0, 0.13, 0.5] {
            let joint = frame.joint_state(tau);
            let fast = frame.currents_complex(tau);
            for (slot, t) in crate::model::Terminal::ALL.iter().enumerate() {
                let slow = local_heat_current(&joint, state.propagator().hamiltonian(), *t, &cfg).unwrap();
                assert!((fast[slot].re - slow).abs() < 1e-10, "{t}: {} vs {slow}", fast[slot].re);
                assert!(fast[slot].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fresh_thermal_ancilla_gives_zero_current() {
        let cfg = ModelConfig::baseline();
        let mut state = SimulationState::new(&cfg).unwrap();
        state.advance();
        for j in state.frame().currents(0.0) {
            assert!(j.abs() < 1e-12);
        }
    }

    #[test]
    fn collisions_equal_repeated_steps() {
        let cfg = short(ModelConfig::baseline());
        let traj = evolve(&cfg, 1.0).unwrap();
        let mut state = SimulationState::new(&cfg).unwrap();
        state.advance();
        state.advance();
        assert!(traj.system_states.last().unwrap().max_abs_diff(state.system_state()) < 1e-12);
    }

    #[test]
    fn single_time_currents_match_trajectory() {
        let cfg = short(ModelConfig::baseline());
        let prop = Arc::new(Propagator::new(&cfg).unwrap());
        let traj = evolve_with(&prop, &cfg, 1.5, &EvolveOptions::default()).unwrap();
        for t in [0.0, 0.35, 0.5, 1.0, 1.25, 1.5] {
            for side in [BoundarySide::Left, BoundarySide::Right] {
                if t == 1.5 && side == BoundarySide::Right {
                    assert!(matches!(traj.current_at(t, Terminal::L, side), Err(EngineError::NoRightLimit(_))));
                    continue;
                }
                let direct = currents_at_time(&prop, &cfg, t, side).unwrap();
                for (slot, term) in traj.terminals.iter().enumerate() {
                    let from_traj = traj.current_at(t, *term, side).unwrap();
                    assert!((direct[slot] - from_traj).abs() < 1e-12, "t={t} {side:?}");
                }
            }
        }
    }

    #[test]
    fn cache_mismatch_is_rejected() {
        let cfg = ModelConfig::baseline();
        let prop = Arc::new(Propagator::new(&cfg).unwrap());
        let mut other = cfg;
        other.g = 3.5;
        assert!(matches!(SimulationState::with_propagator(prop.clone(), &other), Err(EngineError::CacheMismatch(_))));
        // Temperatures do not enter the cache key.
        let warmer = cfg.with_temperature(Terminal::M, 7.0);
        assert!(SimulationState::with_propagator(prop, &warmer).is_ok());
    }

    #[test]
    fn channel_reproduces_direct_evolution() {
        let cfg = short(ModelConfig::baseline());
        let prop = Arc::new(Propagator::new(&cfg).unwrap());
        let channel = CollisionChannel::new(&prop, &cfg).unwrap();
        let mut rho0 = initial_state(3);
        rho0[(0, 0)] = C64::new(0.5, 0.0);
        rho0[(4, 4)] = C64::new(0.5, 0.0);
        rho0[(0, 4)] = C64::new(0.5, 0.0);
        rho0[(4, 0)] = C64::new(0.5, 0.0);
        let via_channel = channel.evolve(&rho0, 2);
        let traj = evolve_with(&prop, &cfg, 1.0, &EvolveOptions { initial: Some(rho0), record_states: true }).unwrap();
        assert_eq!(via_channel.len(), traj.system_states.len());
        for (a, b) in via_channel.iter().zip(&traj.system_states) {
            assert!(a.max_abs_diff(b) < 1e-11);
        }
    }
}

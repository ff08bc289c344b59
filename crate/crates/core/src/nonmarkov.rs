//! Trace-distance (BLP) non-Markovianity of a single working-substance qubit.
//!
//! The probed qubit starts in a pure state, the other system qubits in `|0>`.
//! Because the collision channel is linear, the probed qubit's marginal at
//! every sample is a fixed linear function of its initial 2x2 state; that map
//! is computed once and every candidate pair is then evaluated in closed form.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{grid_index, CollisionChannel, EngineError, Propagator};
use crate::linalg::{kron_all, partial_trace, trace_distance, ComplexMatrix};
use crate::model::{ModelConfig, Terminal};

pub const DEFAULT_T_MAX: f64 = 3.0;

/// Increments smaller than this are treated as roundoff when locating
/// growth windows (the measure itself sums every positive increment).
pub const GROWTH_FLOOR: f64 = 1e-12;

/// Pure qubit state on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub theta: f64,
    pub phi: f64,
}

impl BlochState {
    pub fn new(theta: f64, phi: f64) -> Self {
        BlochState { theta, phi }
    }

    pub fn vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// `(I + a.sigma) / 2`.
    pub fn density(&self) -> ComplexMatrix {
        let [x, y, z] = self.vector();
        ComplexMatrix::from_rows(&[
            vec![C64::new(0.5 * (1.0 + z), 0.0), C64::new(0.5 * x, -0.5 * y)],
            vec![C64::new(0.5 * x, 0.5 * y), C64::new(0.5 * (1.0 - z), 0.0)],
        ])
    }

    /// Diametrically opposite (orthogonal) state.
    pub fn antipode(&self) -> Self {
        BlochState { theta: PI - self.theta, phi: (self.phi + PI).rem_euclid(2.0 * PI) }
    }
}

/// Marginal dynamics of one qubit: `maps[k]` sends the probed qubit's
/// initial 2x2 state to its state at sample `k`.
pub struct QubitDynamics {
    pub terminal: Terminal,
    pub times: Vec<f64>,
    maps: Vec<[[C64; 4]; 4]>,
}

impl QubitDynamics {
    pub fn new(config: &ModelConfig, terminal: Terminal, t_max: f64) -> Result<Self, EngineError> {
        let prop = Arc::new(Propagator::new(config)?);
        Self::with_propagator(&prop, config, terminal, t_max)
    }

    pub fn with_propagator(prop: &Arc<Propagator>, config: &ModelConfig, terminal: Terminal, t_max: f64) -> Result<Self, EngineError> {
        let n_coll = grid_index(t_max, config.dt_collision)
            .ok_or(EngineError::PartialCollision { t_max, dt: config.dt_collision })?;
        let layout = prop.layout();
        let slot = layout.system_slot(terminal).ok_or(EngineError::MissingTerminal(terminal))?;
        let n = layout.system.len();
        let channel = CollisionChannel::new(prop, config)?;
        let ground = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let dims = vec![2; n];

        // Evolve the four matrix units |a><b| of the probed qubit.
        let mut columns: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(4);
        for q in 0..4 {
            let mut unit = ComplexMatrix::zeros(2, 2);
            unit[(q / 2, q % 2)] = C64::new(1.0, 0.0);
            let factors: Vec<&ComplexMatrix> = (0..n).map(|s| if s == slot { &unit } else { &ground }).collect();
            let rho0 = kron_all(factors);
            let states = channel.evolve(&rho0, n_coll);
            columns.push(states.iter().map(|r| partial_trace(r, &dims, &[slot])).collect::<Result<_, _>>()?);
        }
        let n_samples = columns[0].len();
        let maps = (0..n_samples)
            .map(|k| {
                let mut m = [[C64::new(0.0, 0.0); 4]; 4];
                for (q, col) in columns.iter().enumerate() {
                    let out = &col[k];
                    for p in 0..4 {
                        m[p][q] = out[(p / 2, p % 2)];
                    }
                }
                m
            })
            .collect();
        let times = (0..n_samples).map(|k| k as f64 * config.sample_dt).collect();
        Ok(QubitDynamics { terminal, times, maps })
    }

    fn apply(&self, k: usize, rho: &[C64; 4]) -> [C64; 4] {
        let m = &self.maps[k];
        let mut out = [C64::new(0.0, 0.0); 4];
        for (p, o) in out.iter_mut().enumerate() {
            for q in 0..4 {
                *o += m[p][q] * rho[q];
            }
        }
        out
    }

    pub fn marginals(&self, initial: &BlochState) -> Vec<ComplexMatrix> {
        let r = initial.density();
        let v = [r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]];
        (0..self.maps.len())
            .map(|k| {
                let o = self.apply(k, &v);
                ComplexMatrix::from_rows(&[vec![o[0], o[1]], vec![o[2], o[3]]])
            })
            .collect()
    }

    /// Trace distance of the two evolved marginals at every sample. Uses
    /// linearity: only the difference of the initial states is propagated.
    pub fn distances(&self, a: &BlochState, b: &BlochState) -> Vec<f64> {
        let ra = a.density();
        let rb = b.density();
        let diff = [ra[(0, 0)] - rb[(0, 0)], ra[(0, 1)] - rb[(0, 1)], ra[(1, 0)] - rb[(1, 0)], ra[(1, 1)] - rb[(1, 1)]];
        (0..self.maps.len())
            .map(|k| {
                let o = self.apply(k, &diff);
                // Half the trace norm of a 2x2 Hermitian matrix.
                let (p, q) = (o[0].re, o[3].re);
                let off = 0.5 * (o[1] + o[2].conj());
                let mean = 0.5 * (p + q);
                let radius = (0.25 * (p - q) * (p - q) + off.norm_sqr()).sqrt();
                let d = 0.5 * ((mean + radius).abs() + (mean - radius).abs());
                d.clamp(0.0, 1.0)
            })
            .collect()
    }
}

/// Marginal of `terminal` at every sample up to `t_max`, starting from
/// `initial` on that qubit and `|0>` on the others.
pub fn qubit_reduced_dynamics(
    config: &ModelConfig,
    terminal: Terminal,
    initial: &BlochState,
    t_max: f64,
) -> Result<Vec<ComplexMatrix>, EngineError> {
    Ok(QubitDynamics::new(config, terminal, t_max)?.marginals(initial))
}

pub fn distance_series(
    config: &ModelConfig,
    terminal: Terminal,
    pair: (&BlochState, &BlochState),
    t_max: f64,
) -> Result<Vec<f64>, EngineError> {
    Ok(QubitDynamics::new(config, terminal, t_max)?.distances(pair.0, pair.1))
}

/// Sum of positive consecutive increments.
pub fn positive_increments(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// Running total of positive increments, aligned with `series`.
pub fn cumulative_backflow(series: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    std::iter::once(0.0)
        .chain(series.windows(2).map(|w| {
            acc += (w[1] - w[0]).max(0.0);
            acc
        }))
        .collect()
}

/// Maximal runs of increasing distance, as `[t_start, t_end]`.
pub fn growth_windows(times: &[f64], series: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for k in 0..series.len().saturating_sub(1) {
        let up = series[k + 1] - series[k] > GROWTH_FLOOR;
        match (up, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((times[s], times[k]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((times[s], times[series.len() - 1]));
    }
    out
}

/// How the pair space is searched.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Angular step at which coordinate refinement stops.
    pub refine_tol: f64,
    /// Also search general (non-antipodal) pairs over all four angles.
    pub general: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { n_theta: 24, n_phi: 48, refine_tol: 1e-3, general: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BLPResult {
    pub terminal: Terminal,
    pub value: f64,
    pub optimal_pair: (BlochState, BlochState),
    pub times: Vec<f64>,
    pub distance_series: Vec<f64>,
    pub growth_windows: Vec<(f64, f64)>,
}

fn theta_grid(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect()
}

fn phi_grid(n: usize) -> Vec<f64> {
    (0..n.max(1)).map(|j| 2.0 * PI * j as f64 / n.max(1) as f64).collect()
}

/// `a` beats `b`: larger value, ties (within 1e-12) to lower angles.
fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    if (a.0 - b.0).abs() > 1e-12 {
        return a.0 > b.0;
    }
    a.1.iter().zip(b.1).find(|(x, y)| (*x - *y).abs() > 1e-12).is_some_and(|(x, y)| x < y)
}

fn clamp_angles(v: &mut [f64]) {
    for (i, x) in v.iter_mut().enumerate() {
        if i % 2 == 0 {
            *x = x.clamp(0.0, PI);
        } else {
            *x = x.rem_euclid(2.0 * PI);
        }
    }
}

/// Shrinking-step coordinate ascent over an angle vector `(theta, phi, ...)`.
fn refine(f: impl Fn(&[f64]) -> f64, start: Vec<f64>, steps: Vec<f64>, tol: f64) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut best = f(&x);
    let mut steps = steps;
    while steps.iter().any(|&s| s >= tol) {
        let mut improved = false;
        for i in 0..x.len() {
            if steps[i] < tol {
                continue;
            }
            for dir in [-1.0, 1.0] {
                let mut y = x.clone();
                y[i] += dir * steps[i];
                clamp_angles(&mut y);
                let v = f(&y);
                if v > best + 1e-12 {
                    best = v;
                    x = y;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
        }
    }
    (x, best)
}

fn pair_of(angles: &[f64]) -> (BlochState, BlochState) {
    let a = BlochState::new(angles[0], angles[1]);
    if angles.len() == 4 {
        (a, BlochState::new(angles[2], angles[3]))
    } else {
        (a, a.antipode())
    }
}

/// Maximises the accumulated trace-distance growth over initial pairs.
pub fn blp_measure(config: &ModelConfig, terminal: Terminal, t_max: f64, search: &SearchConfig) -> Result<BLPResult, EngineError> {
    let dynamics = QubitDynamics::new(config, terminal, t_max)?;
    Ok(blp_from_dynamics(&dynamics, search))
}

pub fn blp_from_dynamics(dynamics: &QubitDynamics, search: &SearchConfig) -> BLPResult {
    let score = |angles: &[f64]| {
        let (a, b) = pair_of(angles);
        positive_increments(&dynamics.distances(&a, &b))
    };
    let thetas = theta_grid(search.n_theta);
    let phis = phi_grid(search.n_phi);
    let candidates: Vec<Vec<f64>> = thetas.iter().flat_map(|&t| phis.iter().map(move |&p| vec![t, p])).collect();

    let scored: Vec<f64> = candidates.par_iter().map(|c| score(c)).collect();
    let mut best_idx = 0;
    for i in 1..candidates.len() {
        if better((scored[i], &candidates[i]), (scored[best_idx], &candidates[best_idx])) {
            best_idx = i;
        }
    }
    let d_theta = if thetas.len() > 1 { thetas[1] - thetas[0] } else { PI };
    let d_phi = 2.0 * PI / phis.len() as f64;
    let (mut angles, mut value) =
        refine(score, candidates[best_idx].clone(), vec![d_theta, d_phi], search.refine_tol);

    if search.general {
        // Coarse product grid over both states, then refine all four angles,
        // seeded from the better of the two searches.
        let coarse_t = theta_grid((search.n_theta / 2).max(2));
        let coarse_p = phi_grid((search.n_phi / 2).max(2));
        let singles: Vec<(f64, f64)> = coarse_t.iter().flat_map(|&t| coarse_p.iter().map(move |&p| (t, p))).collect();
        let general: Vec<(f64, Vec<f64>)> = singles
            .par_iter()
            .map(|&(t1, p1)| {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for &(t2, p2) in &singles {
                    let c = vec![t1, p1, t2, p2];
                    let v = score(&c);
                    if best.as_ref().is_none_or(|(bv, bc)| better((v, &c), (*bv, bc))) {
                        best = Some((v, c));
                    }
                }
                best.expect("non-empty grid")
            })
            .collect();
        let mut seed = general[0].clone();
        for g in &general[1..] {
            if better((g.0, &g.1), (seed.0, &seed.1)) {
                seed = g.clone();
            }
        }
        let antipodal_as_general = {
            let (a, b) = pair_of(&angles);
            vec![a.theta, a.phi, b.theta, b.phi]
        };
        if value + 1e-12 >= seed.0 {
            seed = (value, antipodal_as_general);
        }
        let dt = coarse_t[1] - coarse_t[0];
        let dp = 2.0 * PI / coarse_p.len() as f64;
        let (g_angles, g_value) = refine(score, seed.1, vec![dt, dp, dt, dp], search.refine_tol);
        if g_value > value + 1e-12 {
            angles = g_angles;
            value = g_value;
        }
    }

    let optimal_pair = pair_of(&angles);
    let distance_series = dynamics.distances(&optimal_pair.0, &optimal_pair.1);
    let value_exact = positive_increments(&distance_series);
    debug_assert!((value_exact - value).abs() < 1e-9);
    BLPResult {
        terminal: dynamics.terminal,
        value: value_exact,
        optimal_pair,
        growth_windows: growth_windows(&dynamics.times, &distance_series),
        times: dynamics.times.clone(),
        distance_series,
    }
}

/// Independent re-evaluation of a pair, straight from the density matrices.
pub fn reevaluate_pair(config: &ModelConfig, terminal: Terminal, pair: (&BlochState, &BlochState), t_max: f64) -> Result<f64, EngineError> {
    let dyn_ = QubitDynamics::new(config, terminal, t_max)?;
    let a = dyn_.marginals(pair.0);
    let b = dyn_.marginals(pair.1);
    let series: Vec<f64> = a.iter().zip(&b).map(|(x, y)| trace_distance(x, y)).collect::<Result<_, _>>()?;
    Ok(positive_increments(&series))
}

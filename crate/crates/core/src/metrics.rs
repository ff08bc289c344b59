//! Figures of merit built on the dynamics: temperature derivatives of the
//! local currents, amplification factors, the critical modulator temperature
//! and one-parameter sweeps.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    currents_at_time, evolve_with, BoundarySide, EngineError, EvolveOptions, Propagator, Trajectory,
};
use crate::model::{ModelConfig, Terminal};

pub const DEFAULT_DIVERGENCE_TOL: f64 = 1e-8;
pub const CRITICAL_TOL: f64 = 1e-3;
pub const CRITICAL_MAX_ITER: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("stencil reaches T = {lowest} for {terminal}; temperatures must stay positive")]
    StencilOutOfDomain { terminal: Terminal, lowest: f64 },
    #[error("derivative does not change sign on [{lo}, {hi}]: {d_lo:e} at {lo}, {d_hi:e} at {hi}")]
    NoSignChange { lo: f64, hi: f64, d_lo: f64, d_hi: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
}

/// `(f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)) / 12h`.
pub fn five_point_derivative<E>(f: impl Fn(f64) -> Result<f64, E>, x0: f64, h: f64) -> Result<f64, E> {
    let fm2 = f(x0 - 2.0 * h)?;
    let fm1 = f(x0 - h)?;
    let fp1 = f(x0 + h)?;
    let fp2 = f(x0 + 2.0 * h)?;
    Ok(stencil_combination([fm2, fm1, fp1, fp2], h))
}

fn stencil_combination([fm2, fm1, fp1, fp2]: [f64; 4], h: f64) -> f64 {
    (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
}

/// Amplification factor, or a marker for a vanishing denominator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Alpha {
    Finite(f64),
    Divergent,
}

impl Alpha {
    pub fn from_ratio(numerator: f64, denominator: f64, tol: f64) -> Alpha {
        if denominator.abs() < tol {
            Alpha::Divergent
        } else {
            Alpha::Finite(numerator / denominator)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Alpha::Finite(v) => Some(v),
            Alpha::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, Alpha::Divergent)
    }
}

/// Where and how a temperature derivative is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub time: f64,
    /// Terminal whose temperature is varied.
    pub modulator: Terminal,
    pub h: f64,
    pub boundary: BoundarySide,
    pub divergence_tol: f64,
}

impl Probe {
    pub fn at(time: f64) -> Self {
        Probe {
            time,
            modulator: Terminal::M,
            h: crate::model::DEFAULT_STENCIL_H,
            boundary: BoundarySide::Left,
            divergence_tol: DEFAULT_DIVERGENCE_TOL,
        }
    }

    pub fn modulated_by(mut self, t: Terminal) -> Self {
        self.modulator = t;
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_boundary(mut self, side: BoundarySide) -> Self {
        self.boundary = side;
        self
    }

    fn temperatures(&self, config: &ModelConfig) -> Result<[f64; 4], MetricsError> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(MetricsError::InvalidProbe(format!("stencil half-step must be positive, got {}", self.h)));
        }
        let t0 = config.env.temperatures.get(self.modulator);
        let lowest = t0 - 2.0 * self.h;
        if !(lowest > 0.0) {
            return Err(MetricsError::StencilOutOfDomain { terminal: self.modulator, lowest });
        }
        Ok([t0 - 2.0 * self.h, t0 - self.h, t0 + self.h, t0 + 2.0 * self.h])
    }
}

/// `dJ_X / dT_mod` for one output terminal, and the ratio with the
/// modulator's own derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationResult {
    pub terminal: Terminal,
    pub modulator: Terminal,
    pub time: f64,
    pub alpha: Alpha,
    pub d_jx: f64,
    pub d_jmod: f64,
}

/// Currents at the centre of a stencil and their derivatives with respect
/// to the modulator temperature, for every system qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilResult {
    pub time: f64,
    pub modulator: Terminal,
    pub terminals: Vec<Terminal>,
    pub currents: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl StencilResult {
    fn slot(&self, t: Terminal) -> Option<usize> {
        self.terminals.iter().position(|&x| x == t)
    }

    pub fn current(&self, t: Terminal) -> Option<f64> {
        self.slot(t).map(|s| self.currents[s])
    }

    pub fn derivative(&self, t: Terminal) -> Option<f64> {
        self.slot(t).map(|s| self.derivatives[s])
    }

    pub fn amplification(&self, output: Terminal, divergence_tol: f64) -> Option<AmplificationResult> {
        let d_jx = self.derivative(output)?;
        let d_jmod = self.derivative(self.modulator)?;
        Some(AmplificationResult {
            terminal: output,
            modulator: self.modulator,
            time: self.time,
            alpha: Alpha::from_ratio(d_jx, d_jmod, divergence_tol),
            d_jx,
            d_jmod,
        })
    }
}

fn combine(centre: Vec<f64>, offsets: [Vec<f64>; 4], h: f64) -> (Vec<f64>, Vec<f64>) {
    let derivs = (0..centre.len())
        .map(|s| stencil_combination([offsets[0][s], offsets[1][s], offsets[2][s], offsets[3][s]], h))
        .collect();
    (centre, derivs)
}

/// Five independent runs at `T_mod + {-2h, -h, 0, h, 2h}` sharing one
/// propagator; currents read at `probe.time`.
pub fn stencil_with(prop: &Arc<Propagator>, config: &ModelConfig, probe: &Probe) -> Result<StencilResult, MetricsError> {
    let temps = probe.temperatures(config)?;
    let centre_t = config.env.temperatures.get(probe.modulator);
    let all = [centre_t, temps[0], temps[1], temps[2], temps[3]];
    let runs: Vec<Result<Vec<f64>, EngineError>> = all
        .par_iter()
        .map(|&temp| {
            let cfg = config.with_temperature(probe.modulator, temp);
            currents_at_time(prop, &cfg, probe.time, probe.boundary)
        })
        .collect();
    let mut runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter();
    let centre = runs.next().expect("five runs");
    let offsets = [runs.next().unwrap(), runs.next().unwrap(), runs.next().unwrap(), runs.next().unwrap()];
    let (currents, derivatives) = combine(centre, offsets, probe.h);
    Ok(StencilResult {
        time: probe.time,
        modulator: probe.modulator,
        terminals: prop.layout().system.clone(),
        currents,
        derivatives,
    })
}

pub fn stencil(config: &ModelConfig, probe: &Probe) -> Result<StencilResult, MetricsError> {
    let prop = Arc::new(Propagator::new(config)?);
    stencil_with(&prop, config, probe)
}

/// `J_X(t)` on the default (left-limit) boundary convention.
pub fn current_at(config: &ModelConfig, t: f64, terminal: Terminal) -> Result<f64, MetricsError> {
    let prop = Arc::new(Propagator::new(config)?);
    let slot = prop.layout().system_slot(terminal).ok_or(EngineError::MissingTerminal(terminal))?;
    Ok(currents_at_time(&prop, config, t, BoundarySide::Left)?[slot])
}

/// `alpha_X = (dJ_X/dT_M) / (dJ_M/dT_M)` at time `t`.
pub fn amplification(config: &ModelConfig, t: f64, terminal: Terminal, h: f64) -> Result<AmplificationResult, MetricsError> {
    amplification_with(config, &Probe::at(t).with_h(h), terminal)
}

pub fn amplification_with(config: &ModelConfig, probe: &Probe, output: Terminal) -> Result<AmplificationResult, MetricsError> {
    if output == probe.modulator {
        return Err(MetricsError::InvalidProbe("output terminal equals the modulator".into()));
    }
    let s = stencil(config, probe)?;
    s.amplification(output, probe.divergence_tol).ok_or(MetricsError::Engine(EngineError::MissingTerminal(output)))
}

/// Stencil trajectories (currents only) over `[0, t_max]`: centre first,
/// then the four offsets in stencil order.
fn stencil_trajectories(
    prop: &Arc<Propagator>,
    config: &ModelConfig,
    probe: &Probe,
    t_max: f64,
) -> Result<Vec<Trajectory>, MetricsError> {
    let temps = probe.temperatures(config)?;
    let centre_t = config.env.temperatures.get(probe.modulator);
    let all = [centre_t, temps[0], temps[1], temps[2], temps[3]];
    let runs: Vec<Result<Trajectory, EngineError>> = all
        .par_iter()
        .map(|&temp| {
            let cfg = config.with_temperature(probe.modulator, temp);
            evolve_with(prop, &cfg, t_max, &EvolveOptions::default())
        })
        .collect();
    Ok(runs.into_iter().collect::<Result<Vec<_>, _>>()?)
}

fn stencil_from_trajectories(trajs: &[Trajectory], t: f64, probe: &Probe) -> Result<StencilResult, EngineError> {
    let terminals = trajs[0].terminals.clone();
    let read = |traj: &Trajectory| -> Result<Vec<f64>, EngineError> {
        terminals.iter().map(|&term| traj.current_at(t, term, probe.boundary)).collect()
    };
    let centre = read(&trajs[0])?;
    let offsets = [read(&trajs[1])?, read(&trajs[2])?, read(&trajs[3])?, read(&trajs[4])?];
    let (currents, derivatives) = combine(centre, offsets, probe.h);
    Ok(StencilResult { time: t, modulator: probe.modulator, terminals, currents, derivatives })
}

/// Smallest collision-aligned horizon covering `t`.
fn horizon(config: &ModelConfig, t: f64) -> f64 {
    let n = (t / config.dt_collision - 1e-9).ceil().max(0.0);
    n * config.dt_collision
}

/// Stencil results at many times from a single set of five trajectories.
pub fn stencil_series(config: &ModelConfig, probe: &Probe, times: &[f64]) -> Result<Vec<Result<StencilResult, MetricsError>>, MetricsError> {
    let prop = Arc::new(Propagator::new(config)?);
    stencil_series_with(&prop, config, probe, times)
}

pub fn stencil_series_with(
    prop: &Arc<Propagator>,
    config: &ModelConfig,
    probe: &Probe,
    times: &[f64],
) -> Result<Vec<Result<StencilResult, MetricsError>>, MetricsError> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let mut horizon_t = horizon(config, t_max);
    // A right limit at the last boundary needs the next collision too.
    if probe.boundary == BoundarySide::Right && (horizon_t - t_max).abs() < 1e-9 && t_max > 0.0 {
        horizon_t += config.dt_collision;
    }
    let trajs = stencil_trajectories(prop, config, probe, horizon_t)?;
    Ok(times.iter().map(|&t| stencil_from_trajectories(&trajs, t, probe).map_err(MetricsError::from)).collect())
}

/// Bisection for the modulator temperature where `dJ_mod/dT_mod` vanishes.
pub fn find_critical(config: &ModelConfig, probe: &Probe, bracket: (f64, f64)) -> Result<f64, MetricsError> {
    let prop = Arc::new(Propagator::new(config)?);
    let deriv = |temp: f64| -> Result<f64, MetricsError> {
        let cfg = config.with_temperature(probe.modulator, temp);
        let s = stencil_with(&prop, &cfg, probe)?;
        Ok(s.derivative(probe.modulator).expect("modulator is a system qubit"))
    };
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(MetricsError::InvalidGrid(format!("bracket [{lo}, {hi}] is empty")));
    }
    let (d_lo, d_hi) = rayon::join(|| deriv(lo), || deriv(hi));
    let (mut d_lo, d_hi) = (d_lo?, d_hi?);
    if d_lo == 0.0 {
        return Ok(lo);
    }
    if d_hi == 0.0 {
        return Ok(hi);
    }
    if d_lo.signum() == d_hi.signum() {
        return Err(MetricsError::NoSignChange { lo, hi, d_lo, d_hi });
    }
    for _ in 0..CRITICAL_MAX_ITER {
        if 0.5 * (hi - lo) < CRITICAL_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let d_mid = deriv(mid)?;
        if d_mid == 0.0 {
            return Ok(mid);
        }
        if d_mid.signum() == d_lo.signum() {
            lo = mid;
            d_lo = d_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `T_M` at which `dJ_M/dT_M = 0`, at time `t`.
pub fn find_critical_tm(config: &ModelConfig, t: f64, bracket: (f64, f64)) -> Result<f64, MetricsError> {
    find_critical(config, &Probe::at(t), bracket)
}

/// The swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    Temperature(Terminal),
    Time,
    Coupling,
    Epsilon,
}

impl SweepAxis {
    pub fn name(self) -> String {
        match self {
            SweepAxis::Temperature(t) => format!("T_{t}"),
            SweepAxis::Time => "t".into(),
            SweepAxis::Coupling => "g".into(),
            SweepAxis::Epsilon => "epsilon".into(),
        }
    }

    /// Unit annotation used in CSV headers.
    pub fn unit(self) -> &'static str {
        match self {
            SweepAxis::Temperature(_) => "(T̃)",
            SweepAxis::Time => "(t̃)",
            SweepAxis::Coupling | SweepAxis::Epsilon => "(t̃⁻¹)",
        }
    }

    pub fn parse(s: &str) -> Option<SweepAxis> {
        match s {
            "T_L" => Some(SweepAxis::Temperature(Terminal::L)),
            "T_M" => Some(SweepAxis::Temperature(Terminal::M)),
            "T_R" => Some(SweepAxis::Temperature(Terminal::R)),
            "t" => Some(SweepAxis::Time),
            "g" => Some(SweepAxis::Coupling),
            "epsilon" => Some(SweepAxis::Epsilon),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub stencil: Option<StencilResult>,
    pub alphas: Vec<(Terminal, Alpha)>,
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn alpha(&self, t: Terminal) -> Option<Alpha> {
        self.alphas.iter().find(|(x, _)| *x == t).map(|(_, a)| *a)
    }

    fn failed(x: f64, err: impl ToString) -> Self {
        SweepPoint { x, stencil: None, alphas: Vec::new(), error: Some(err.to_string()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub probe: Probe,
    pub outputs: Vec<Terminal>,
    pub grid: Vec<f64>,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// Finite alpha values of `t` paired with their grid positions.
    pub fn alpha_series(&self, t: Terminal) -> Vec<(f64, Option<f64>)> {
        self.points.iter().map(|p| (p.x, p.alpha(t).and_then(Alpha::value))).collect()
    }
}

fn point_from_stencil(x: f64, s: StencilResult, outputs: &[Terminal], tol: f64) -> SweepPoint {
    let alphas = outputs
        .iter()
        .filter_map(|&o| s.amplification(o, tol).map(|a| (o, a.alpha)))
        .collect();
    SweepPoint { x, stencil: Some(s), alphas, error: None }
}

/// One-parameter sweep. Grid points are independent and run in parallel;
/// the result keeps grid order. A failing point is recorded, not fatal.
pub fn sweep(config: &ModelConfig, axis: SweepAxis, grid: &[f64], probe: &Probe) -> Result<SweepResult, MetricsError> {
    if grid.is_empty() {
        return Err(MetricsError::InvalidGrid("grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(MetricsError::InvalidGrid("grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MetricsError::InvalidGrid("grid must be strictly ascending".into()));
    }
    config.validate().map_err(EngineError::from)?;
    let outputs: Vec<Terminal> = config.system_terminals().into_iter().filter(|&t| t != probe.modulator).collect();
    let tol = probe.divergence_tol;

    let points: Vec<SweepPoint> = match axis {
        SweepAxis::Time => {
            let prop = Arc::new(Propagator::new(config)?);
            let series = stencil_series_with(&prop, config, probe, grid)?;
            grid.iter()
                .zip(series)
                .map(|(&x, r)| match r {
                    Ok(s) => point_from_stencil(x, s, &outputs, tol),
                    Err(e) => SweepPoint::failed(x, e),
                })
                .collect()
        }
        SweepAxis::Temperature(term) => {
            let prop = Arc::new(Propagator::new(config)?);
            grid.par_iter()
                .map(|&x| {
                    let cfg = config.with_temperature(term, x);
                    match cfg.validate().map_err(EngineError::from).map_err(MetricsError::from).and_then(|_| stencil_with(&prop, &cfg, probe)) {
                        Ok(s) => point_from_stencil(x, s, &outputs, tol),
                        Err(e) => SweepPoint::failed(x, e),
                    }
                })
                .collect()
        }
        SweepAxis::Coupling | SweepAxis::Epsilon => grid
            .par_iter()
            .map(|&x| {
                let mut cfg = *config;
                if axis == SweepAxis::Coupling {
                    cfg.g = x;
                } else {
                    cfg.env.epsilon = x;
                }
                match stencil(&cfg, probe) {
                    Ok(s) => point_from_stencil(x, s, &outputs, tol),
                    Err(e) => SweepPoint::failed(x, e),
                }
            })
            .collect(),
    };
    Ok(SweepResult { axis, probe: *probe, outputs, grid: grid.to_vec(), points })
}

/// `n` evenly spaced points from `a` to `b` inclusive, rounded to 1e-12 so
/// grid values print cleanly.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| {
                let x = a + (b - a) * i as f64 / (n - 1) as f64;
                (x * 1e12).round() / 1e12
            })
            .collect(),
    }
}

/// Points `a, a+step, ..., b` (inclusive when `b` is on the grid).
pub fn arange(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    linspace(a, a + step * (n - 1) as f64, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> Result<f64, Infallible> {
        move |x| Ok(f(x))
    }

    #[test]
    fn stencil_constant_and_cubic() {
        assert_eq!(five_point_derivative(ok(|_| 7.0), 1.3, 0.05).unwrap(), 0.0);
        let d = five_point_derivative(ok(|x| x * x * x), 2.0, 0.05).unwrap();
        assert!((d - 12.0).abs() < 1e-11, "{d}");
    }

    #[test]
    fn stencil_sine_error_bound() {
        let d = five_point_derivative(ok(f64::sin), 1.0, 0.05).unwrap();
        assert!((d - 1f64.cos()).abs() < 6.25e-6);
    }

    #[test]
    fn alpha_marker() {
        assert_eq!(Alpha::from_ratio(1.0, 1e-9, 1e-8), Alpha::Divergent);
        assert_eq!(Alpha::from_ratio(1.0, 0.5, 1e-8), Alpha::Finite(2.0));
    }

    #[test]
    fn grids() {
        assert_eq!(arange(0.0, 1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = arange(3.5, 4.5, 0.01);
        assert_eq!(g.len(), 101);
        assert_eq!(g[50], 4.0);
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn stencil_domain_is_checked() {
        let cfg = ModelConfig::baseline().with_temperature(Terminal::M, 0.08);
        assert!(matches!(stencil(&cfg, &Probe::at(1.0)), Err(MetricsError::StencilOutOfDomain { .. })));
    }

    #[test]
    fn no_coupling_gives_zero_current() {
        let mut cfg = ModelConfig::baseline();
        cfg.g = 0.0;
        assert_eq!(current_at(&cfg, 1.0, Terminal::L).unwrap(), 0.0);
    }

    #[test]
    fn alpha_identity_holds_exactly() {
        let cfg = ModelConfig::baseline();
        let a = amplification(&cfg, 1.0, Terminal::L, 0.05).unwrap();
        let v = a.alpha.value().unwrap();
        assert!((v * a.d_jmod - a.d_jx).abs() <= 1e-9 * a.d_jx.abs().max(1.0));
    }

    #[test]
    fn series_matches_pointwise_stencil() {
        let mut cfg = ModelConfig::baseline();
        cfg.sample_dt = 0.05;
        let probe = Probe::at(1.0);
        let series = stencil_series(&cfg, &probe, &[0.35, 1.0]).unwrap();
        let direct = stencil(&cfg, &probe).unwrap();
        let from_series = series[1].as_ref().unwrap();
        for (a, b) in direct.derivatives.iter().zip(&from_series.derivatives) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let cfg = ModelConfig::baseline();
        assert!(sweep(&cfg, SweepAxis::Coupling, &[], &Probe::at(1.0)).is_err());
        assert!(sweep(&cfg, SweepAxis::Coupling, &[4.0, 3.0], &Probe::at(1.0)).is_err());
    }

    #[test]
    fn sweep_records_point_failures() {
        let cfg = ModelConfig::baseline();
        let r = sweep(&cfg, SweepAxis::Temperature(Terminal::M), &[0.05, 10.0], &Probe::at(0.5)).unwrap();
        assert!(r.points[0].error.is_some());
        assert!(r.points[1].error.is_none());
        assert_eq!(r.failures(), 1);
    }
}

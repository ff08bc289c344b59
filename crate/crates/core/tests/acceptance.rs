//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints its `PASS`/`FAIL` line; the process fails if any criterion does.
//! Targets and tolerances are the published values; nothing here is tuned to
//! what the simulator happens to produce.

use std::sync::Arc;

use wtt::engine::{evolve, evolve_with, local_heat_current, EvolveOptions, Propagator, SimulationState};
use wtt::linalg::partial_trace;
use wtt::metrics::{
    amplification_with, arange, find_critical, five_point_derivative, sweep, Alpha, Probe, SweepAxis, SweepResult,
};
use wtt::model::{local_qubit_hamiltonian, CouplingPreset, EnvKind, ModelConfig, Terminal};
use wtt::engine::BoundarySide;
use wtt::nonmarkov::{blp_measure, SearchConfig, DEFAULT_T_MAX};
use wtt::runner::{config, execute};
use wtt::runner::scenarios::appendix_config;

use Terminal::{L, M, R};

struct Verdict {
    title: &'static str,
    pass: bool,
    detail: String,
}

fn report(title: &'static str, pass: bool, detail: &str) -> Verdict {
    Verdict { title, pass, detail: detail.to_string() }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn time_alpha(config: &ModelConfig, t_end: f64) -> SweepResult {
    sweep(config, SweepAxis::Time, &arange(0.0, t_end, config.sample_dt), &Probe::at(0.0)).expect("time sweep")
}

/// Largest finite value of a series and its abscissa, skipping `x <= x_min`.
fn finite_max(series: &[(f64, Option<f64>)], x_min: f64) -> Option<(f64, f64)> {
    series
        .iter()
        .filter(|(x, _)| *x > x_min)
        .filter_map(|&(x, a)| a.map(|a| (x, a)))
        .fold(None, |best: Option<(f64, f64)>, (x, a)| match best {
            Some((_, b)) if b >= a => best,
            _ => Some((x, a)),
        })
}

fn abs_argmax(series: &[(f64, Option<f64>)]) -> Option<(f64, f64)> {
    let abs: Vec<(f64, Option<f64>)> = series.iter().map(|&(x, a)| (x, a.map(f64::abs))).collect();
    finite_max(&abs, f64::NEG_INFINITY)
}

/// Sign changes of the modulator derivative along a temperature sweep,
/// each refined by bisection.
fn critical_roots(config: &ModelConfig, t: f64, grid: &[f64]) -> Vec<f64> {
    let probe = Probe::at(t);
    let r = sweep(config, SweepAxis::Temperature(M), grid, &probe).expect("temperature sweep");
    let d: Vec<Option<f64>> = r.points.iter().map(|p| p.stencil.as_ref().and_then(|s| s.derivative(M))).collect();
    let mut roots = Vec::new();
    for k in 0..grid.len() - 1 {
        if let (Some(a), Some(b)) = (d[k], d[k + 1]) {
            if a.signum() != b.signum() {
                if let Ok(root) = find_critical(config, &probe, (grid[k], grid[k + 1])) {
                    roots.push(root);
                }
            }
        }
    }
    roots
}

fn criterion_01_critical_temperature() -> Verdict {
    let base = ModelConfig::baseline();
    let probe = Probe::at(1.0);
    let tc = find_critical(&base, &probe, (4.0, 10.0));
    let family: Vec<Result<f64, String>> = [3.5, 4.0, 4.5]
        .iter()
        .map(|&g| find_critical(&ModelConfig { g, ..base }, &probe, (4.0, 10.0)).map_err(|e| e.to_string()))
        .collect();
    let value_ok = matches!(tc, Ok(v) if within(v, 6.65, 0.05));
    let monotone = match family.iter().cloned().collect::<Result<Vec<f64>, String>>() {
        Ok(v) => v.windows(2).all(|w| w[1] > w[0]),
        Err(_) => false,
    };
    let detail = format!(
        "T_M^crit(g=4) = {} (target 6.65 +- 0.05); g = 3.5, 4, 4.5 -> {:?} (must increase)",
        tc.map_or_else(|e| format!("none [{e}]"), |v| format!("{v:.4}")),
        family
    );
    report("critical temperature", value_ok && monotone, &detail)
}

fn criterion_02_nonlinear_triple() -> Verdict {
    let base = ModelConfig::baseline();
    let cases = [(0.0, 36.27), (-0.01, 38.98), (0.01, 34.00)];
    let mut lines = Vec::new();
    let mut passing = None;
    for side in [BoundarySide::Left, BoundarySide::Right] {
        let probe = Probe::at(1.0).with_boundary(side);
        let alphas: Vec<Option<Alpha>> = cases
            .iter()
            .map(|&(eps, _)| {
                let mut c = base;
                if eps != 0.0 {
                    c.env.kind = EnvKind::QutritNonlinear;
                    c.env.epsilon = eps;
                }
                amplification_with(&c, &probe, L).ok().map(|a| a.alpha)
            })
            .collect();
        let values: Vec<Option<f64>> = alphas.iter().map(|a| a.and_then(Alpha::value)).collect();
        let close = values.iter().zip(&cases).all(|(v, &(_, target))| matches!(v, Some(x) if within(*x, target, 0.5)));
        let ordered = match (values[2], values[0], values[1]) {
            (Some(kerr), Some(lin), Some(transmon)) => kerr < lin && lin < transmon,
            _ => false,
        };
        lines.push(format!(
            "{} limit: linear {:?}, eps=-0.01 {:?}, eps=+0.01 {:?} (ordering {})",
            side.name(),
            alphas[0],
            alphas[1],
            alphas[2],
            if ordered { "holds" } else { "violated" }
        ));
        if close && ordered && passing.is_none() {
            passing = Some(side);
        }
    }
    let detail = format!(
        "targets 36.27 / 38.98 / 34.00 +- 0.5; {}; passing convention: {} \
         (right limits are 0/0: every current vanishes when a fresh thermal ancilla arrives)",
        lines.join("; "),
        passing.map_or("none", |s| s.name())
    );
    report("nonlinear amplification triple", passing.is_some(), &detail)
}

fn criterion_03_detached_maxima() -> Verdict {
    let base = ModelConfig::baseline();
    let mut right = base;
    right.env.attached.r = false;
    let mut left = base;
    left.env.attached.l = false;

    let r = time_alpha(&right, 5.0);
    let peak_l = finite_max(&r.alpha_series(L), 0.0);
    let alpha_r = r.alpha_series(R);
    let worst_r = alpha_r
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|(_, a)| a.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    let right_ok = matches!(peak_l, Some((t, a)) if within(a, 13.85, 0.5) && within(t, 0.7, 0.05)) && worst_r < 0.1;

    let l = time_alpha(&left, 5.0);
    let peak_r = finite_max(&l.alpha_series(R), 0.0);
    let left_ok = matches!(peak_r, Some((t, a)) if within(a, 2.97, 0.2) && within(t, 0.7, 0.05));

    let detail = format!(
        "right detached: max alpha_L = {peak_l:?} (t, value; target 13.85 +- 0.5 at 0.7 +- 0.05), max |alpha_R| = {worst_r:.4} (< 0.1); \
         left detached: max alpha_R = {peak_r:?} (target 2.97 +- 0.2 at 0.7 +- 0.05)"
    );
    report("detached-environment maxima", right_ok && left_ok, &detail)
}

fn criterion_04_periodicity() -> Verdict {
    let base = ModelConfig::baseline();
    let r = time_alpha(&base, 5.0);
    let series: Vec<(f64, Option<f64>)> = r.alpha_series(L).into_iter().filter(|(t, _)| *t >= 1.0 - 1e-9).collect();
    let values: Option<Vec<f64>> = series.iter().map(|(_, a)| *a).collect();
    let Some(x) = values else {
        return report("periodicity", false, "alpha_L diverges somewhere in [1, 5]");
    };
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    let acf: Vec<f64> = (0..c.len() / 2).map(|k| c[..c.len() - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c0).collect();
    // Dominant peak: the largest local maximum at lags up to 2 t~. The poles
    // of alpha make the short-lag structure noisy, so "first bump" is not a
    // usable definition.
    let max_lag = ((2.0 / base.sample_dt).round() as usize).min(acf.len() - 2);
    let peak = (1..=max_lag)
        .filter(|&k| acf[k] > acf[k - 1] && acf[k] >= acf[k + 1])
        .max_by(|&a, &b| acf[a].total_cmp(&acf[b]));
    let lag = peak.map(|k| k as f64 * base.sample_dt);
    let pass = matches!(lag, Some(l) if within(l, base.dt_collision, 0.01));
    let detail = format!(
        "dominant autocorrelation peak of alpha_L on [1, 5] at lag {} (target {} +- 0.01), acf there = {}",
        lag.map_or("none".into(), |l| format!("{l:.2}")),
        base.dt_collision,
        peak.map_or("-".into(), |k| format!("{:.4}", acf[k]))
    );
    report("periodicity", pass, &detail)
}

fn criterion_05_coupling_sweeps() -> Verdict {
    let base = ModelConfig::baseline();
    let grid = arange(3.5, 4.5, 0.01);
    let r = sweep(&base, SweepAxis::Coupling, &grid, &Probe::at(1.0)).expect("g sweep");
    let s = r.alpha_series(L);
    let below: Vec<Option<f64>> = s.iter().filter(|(g, _)| *g > 3.95 - 1e-9 && *g < 4.0 - 1e-9).map(|p| p.1).collect();
    let above: Vec<Option<f64>> = s.iter().filter(|(g, _)| *g > 4.0 + 1e-9 && *g < 4.05 + 1e-9).map(|p| p.1).collect();
    let pos_below = below.iter().all(|a| matches!(a, Some(v) if *v > 0.0));
    let neg_above = above.iter().all(|a| matches!(a, Some(v) if *v < 0.0));
    let peak = abs_argmax(&s);
    let peak_ok = matches!(peak, Some((g, _)) if within(g, 4.0, 0.05));

    let mut right = base;
    right.env.attached.r = false;
    let mut left = base;
    left.env.attached.l = false;
    let rr = sweep(&right, SweepAxis::Coupling, &grid, &Probe::at(0.7)).expect("g sweep");
    let ll = sweep(&left, SweepAxis::Coupling, &grid, &Probe::at(0.7)).expect("g sweep");
    let peak_right = abs_argmax(&rr.alpha_series(L));
    let peak_left = abs_argmax(&ll.alpha_series(R));
    let det_ok = matches!(peak_right, Some((g, _)) if within(g, 4.05, 0.05)) && matches!(peak_left, Some((g, _)) if within(g, 4.2, 0.05));

    let detail = format!(
        "alpha_L on g in [3.95, 4) positive: {pos_below}, on (4, 4.05] negative: {neg_above}; \
         peak |alpha_L| at {peak:?} (target g = 4 +- 0.05); right detached peak |alpha_L| at {peak_right:?} (target 4.05); \
         left detached peak |alpha_R| at {peak_left:?} (target 4.2)"
    );
    report("coupling-sweep structure", pos_below && neg_above && peak_ok && det_ok, &detail)
}

fn criterion_06_symmetric_asymmetric_criticals() -> Verdict {
    let grid = arange(0.5, 12.0, 0.25);
    let base = ModelConfig::baseline();
    let sym = critical_roots(&base.with_preset(CouplingPreset::Symmetric), 0.4, &grid);
    let asym = critical_roots(&base.with_preset(CouplingPreset::Asymmetric), 0.4, &grid);
    let pass = sym.iter().any(|&x| within(x, 1.75, 0.05)) && asym.iter().any(|&x| within(x, 10.45, 0.05));
    let detail = format!(
        "sign changes of dJ_M/dT_M on T_M in [0.5, 12] at t = 0.4: symmetric {sym:.4?} (target 1.75 +- 0.05), asymmetric {asym:.4?} (target 10.45 +- 0.05)"
    );
    report("symmetric/asymmetric criticals", pass, &detail)
}

fn criterion_07_qubit_ancillas() -> Verdict {
    let mut cfg = ModelConfig::baseline();
    cfg.env.kind = EnvKind::Qubit;
    let r = time_alpha(&cfg, 10.0);
    let peak_l = finite_max(&r.alpha_series(L), 0.0);
    let peak_r = finite_max(&r.alpha_series(R), 0.0);
    let peaks_ok = matches!(peak_l, Some((t, a)) if within(a, 37.46, 1.0) && within(t, 9.7, 0.1))
        && matches!(peak_r, Some((t, a)) if within(a, 73.67, 1.5) && within(t, 9.7, 0.1));

    let grid = arange(4.0, 10.0, 0.5);
    let tr = sweep(&cfg, SweepAxis::Temperature(M), &grid, &Probe::at(9.7)).expect("T_M sweep");
    let increasing = |t: Terminal| -> bool {
        let v: Option<Vec<f64>> = tr.alpha_series(t).into_iter().map(|p| p.1).collect();
        v.is_some_and(|v| v.windows(2).all(|w| w[1] > w[0]))
    };
    let (inc_l, inc_r) = (increasing(L), increasing(R));
    let detail = format!(
        "max alpha_L = {peak_l:?} (target 37.46 +- 1 at 9.7 +- 0.1), max alpha_R = {peak_r:?} (target 73.67 +- 1.5 at 9.7 +- 0.1); \
         increasing in T_M at t = 9.7: alpha_L {inc_l}, alpha_R {inc_r}"
    );
    report("qubit-ancilla environment", peaks_ok && inc_l && inc_r, &detail)
}

fn criterion_08_markovian_stage() -> Verdict {
    let base = ModelConfig::baseline();
    let search = SearchConfig::default();
    let mut late = Vec::new();
    for preset in [CouplingPreset::Baseline, CouplingPreset::Symmetric, CouplingPreset::Asymmetric] {
        let cfg = base.with_preset(preset);
        for t in [L, M, R] {
            let res = blp_measure(&cfg, t, DEFAULT_T_MAX, &search).expect("BLP");
            let worst = res
                .times
                .windows(2)
                .zip(res.distance_series.windows(2))
                .filter(|(tt, _)| tt[0] >= 1.5 - 1e-9)
                .map(|(_, d)| d[1] - d[0])
                .fold(f64::NEG_INFINITY, f64::max);
            late.push((preset.name(), t, res.value, worst));
        }
    }
    let quiet = late.iter().all(|&(_, _, _, w)| w <= 1e-3);

    let r = time_alpha(&base, 4.0);
    let a: Vec<Option<f64>> = r.alpha_series(L).into_iter().filter(|(t, _)| *t >= 1.5 - 1e-9).map(|p| p.1).collect();
    let sign_changes = a
        .iter()
        .copied()
        .collect::<Option<Vec<f64>>>()
        .map(|v| {
            let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).filter(|x| *x != 0.0).collect();
            d.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
        });
    let jumps_ok = sign_changes.is_some_and(|n| n >= 3);

    let worst = late.iter().map(|&(p, t, n, w)| format!("{p}/{t}: N = {n:.4}, max late increment = {w:.2e}")).collect::<Vec<_>>();
    let detail = format!(
        "increments of the optimal-pair distance after t = 1.5 (must be <= 1e-3): [{}]; sign changes of d alpha_L/dt on [1.5, 4]: {sign_changes:?} (>= 3)",
        worst.join("; ")
    );
    report("Markovian stage after 1.5", quiet && jumps_ok, &detail)
}

fn criterion_09_two_qubit_device() -> Verdict {
    let base = ModelConfig::baseline();
    let grid = arange(0.11, 4.0, 0.01);
    let probe = Probe::at(1.0).modulated_by(L);
    let exceeds = |a: Option<Alpha>| match a {
        Some(Alpha::Finite(v)) => v.abs() > 1.0,
        Some(Alpha::Divergent) => true,
        None => false,
    };
    let unequal = sweep(&appendix_config(&base, 1.0, 2.0), SweepAxis::Temperature(L), &grid, &probe).expect("T_L sweep");
    let flags: Vec<bool> = unequal.points.iter().map(|p| exceeds(p.alpha(R))).collect();
    let boundary = flags.iter().rposition(|&f| f).map(|k| grid[k]);
    let contiguous = match flags.iter().rposition(|&f| f) {
        Some(k) => flags[..=k].iter().all(|&f| f),
        None => false,
    };
    let boundary_ok = contiguous && matches!(boundary, Some(b) if within(b, 2.488, 0.05));

    let equal = sweep(&appendix_config(&base, 1.0, 1.0), SweepAxis::Temperature(L), &grid, &probe).expect("T_L sweep");
    let equal_exceed = equal.points.iter().filter(|p| exceeds(p.alpha(R))).count();
    let detail = format!(
        "omega_R = 2: |alpha| > 1 up to T_L = {boundary:?} (contiguous from the low end: {contiguous}; target 2.488 +- 0.05); \
         omega_R = omega_L: {equal_exceed} of {} grid points with |alpha| > 1 (must be 0)",
        grid.len()
    );
    report("two-qubit device", boundary_ok && equal_exceed == 0, &detail)
}

fn criterion_10_property_suite() -> Verdict {
    let base = ModelConfig::baseline();
    let mut failures = Vec::new();

    // States stay physical over 40 collisions.
    let traj = evolve(&base, 20.0).expect("evolve");
    let mut worst = (0.0_f64, 0.0_f64, 0.0_f64);
    for rho in &traj.system_states {
        let eig = wtt::linalg::hermitian_eig(rho).expect("eig");
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let p = rho.purity();
        worst.0 = worst.0.max((rho.trace().re - 1.0).abs());
        worst.1 = worst.1.max(-min_eig);
        worst.2 = worst.2.max((1.0 / 8.0 - p).max(p - 1.0));
    }
    if !(worst.0 < 1e-10 && worst.1 < 1e-10 && worst.2 < 1e-10) {
        failures.push(format!("physicality: trace err {:.1e}, negativity {:.1e}, purity excursion {:.1e}", worst.0, worst.1, worst.2));
    }

    // Currents agree with a central difference of the local energies, and
    // with the reference commutator evaluation on the full joint state.
    let prop = Arc::new(Propagator::new(&base).expect("propagator"));
    let mut state = SimulationState::with_propagator(Arc::clone(&prop), &base).expect("state");
    let dims = [2usize, 2, 2];
    let (mut fd_err, mut ref_err) = (0.0_f64, 0.0_f64);
    for c in 0..6 {
        let frame = state.frame();
        for tau in [0.05, 0.17, 0.33, 0.45] {
            let j = frame.currents(tau);
            let delta = 1e-4;
            for t in [L, M, R] {
                let h = local_qubit_hamiltonian(&base.coupling, t);
                let energy = |s: f64| {
                    let q = partial_trace(&frame.system_state(s), &dims, &[t.index()]).expect("trace");
                    q.trace_product(&h).re
                };
                let fd = -(energy(tau + delta) - energy(tau - delta)) / (2.0 * delta);
                fd_err = fd_err.max((fd - j[t.index()]).abs());
                if c < 2 {
                    let reference = local_heat_current(&frame.joint_state(tau), prop.hamiltonian(), t, &base).expect("reference");
                    ref_err = ref_err.max((reference - j[t.index()]).abs());
                }
            }
        }
        state.advance();
    }
    if !(fd_err < 1e-5 && ref_err < 1e-10) {
        failures.push(format!("currents: finite-difference gap {fd_err:.1e}, reference gap {ref_err:.1e}"));
    }

    // Five-point stencil is exact on cubics.
    let cubic = |x: f64| Ok::<f64, std::convert::Infallible>(2.0 * x * x * x - 3.0 * x * x + 0.5 * x - 7.0);
    let exact = |x: f64| 6.0 * x * x - 6.0 * x + 0.5;
    let stencil_err = [-1.3, 0.0, 0.7, 4.0]
        .iter()
        .map(|&x| (five_point_derivative(cubic, x, 0.05).unwrap() - exact(x)).abs() / exact(x).abs().max(1.0))
        .fold(0.0, f64::max);
    if stencil_err > 1e-9 {
        failures.push(format!("stencil: relative error {stencil_err:.1e} on a cubic"));
    }

    // Exchanging the L and R temperatures swaps J_L and J_R.
    let mut swapped = base;
    swapped.env.temperatures = base.env.temperatures.mirrored();
    let opts = EvolveOptions::default();
    let a = evolve_with(&prop, &base, 5.0, &opts).expect("evolve");
    let b = evolve_with(&Arc::new(Propagator::new(&swapped).unwrap()), &swapped, 5.0, &opts).expect("evolve");
    let swap_err = [(L, R), (M, M), (R, L)]
        .iter()
        .flat_map(|&(x, y)| a.current_series(x).unwrap().iter().zip(b.current_series(y).unwrap()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    if swap_err > 1e-9 {
        failures.push(format!("L-R swap: deviation {swap_err:.1e}"));
    }

    // No coupling, no currents and no backflow.
    let free = ModelConfig { g: 0.0, ..base };
    let ft = evolve(&free, 5.0).expect("evolve");
    let free_j = ft.currents.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let free_n = blp_measure(&free, L, DEFAULT_T_MAX, &SearchConfig { n_theta: 6, n_phi: 8, ..SearchConfig::default() })
        .expect("BLP")
        .value;
    if !(free_j < 1e-12 && free_n.abs() < 1e-12) {
        failures.push(format!("g = 0: max |J| {free_j:.1e}, N {free_n:.1e}"));
    }

    // Worker count does not change the output bytes.
    let dir = tempfile::tempdir().expect("tempdir");
    let mut hashes = Vec::new();
    for workers in [1usize, 3] {
        let text = "[sweep]\naxis = \"T_M\"\nvalues = [6.0, 8.0, 10.0]\ntime = 1.0\n";
        let mut doc = config::parse_config(text, &[]).expect("config");
        doc.workers = Some(workers);
        doc.out = Some(dir.path().join(format!("w{workers}")));
        let out = execute(&config::resolve(&doc, Some(text)).expect("resolve")).expect("run");
        hashes.push(out.manifest.files.iter().map(|f| f.sha256.clone()).collect::<Vec<_>>());
    }
    if hashes[0] != hashes[1] {
        failures.push("determinism: outputs differ between 1 and 3 workers".into());
    }

    let detail = if failures.is_empty() {
        format!(
            "physicality over 40 collisions, current oracles (fd {fd_err:.1e}, reference {ref_err:.1e}), cubic stencil, L-R swap ({swap_err:.1e}), g = 0, worker determinism"
        )
    } else {
        failures.join("; ")
    };
    report("property suite", failures.is_empty(), &detail)
}

fn main() {
    let criteria: [fn() -> Verdict; 10] = [
        criterion_01_critical_temperature,
        criterion_02_nonlinear_triple,
        criterion_03_detached_maxima,
        criterion_04_periodicity,
        criterion_05_coupling_sweeps,
        criterion_06_symmetric_asymmetric_criticals,
        criterion_07_qubit_ancillas,
        criterion_08_markovian_stage,
        criterion_09_two_qubit_device,
        criterion_10_property_suite,
    ];
    let mut failed = 0;
    for (i, run) in criteria.iter().enumerate() {
        let v = run();
        println!("{} criterion {:>2} ({}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.title, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("\nacceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Registry of named runs, one per figure of the study, each producing
//! column-per-curve tables.

use crate::engine::BoundarySide;
use crate::metrics::{arange, sweep, MetricsError, Probe, SweepAxis, SweepResult};
use crate::model::{Attachment, CouplingConfig, CouplingPreset, EnvKind, ModelConfig, Terminal};
use crate::nonmarkov::{blp_from_dynamics, cumulative_backflow, QubitDynamics, SearchConfig};
use crate::runner::config::ResolutionSection;
use crate::runner::output::{
    Cell, Column, Table, UNIT_CURRENT, UNIT_CURRENT_DERIVATIVE, UNIT_NONE, UNIT_TIME,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo { name: "fig2", description: "currents and dJ/dT_M vs T_M at t = 1; dJ_M/dT_M per g" },
    ScenarioInfo { name: "fig3", description: "alpha_L vs T_M at t = 1 for several g" },
    ScenarioInfo { name: "fig4", description: "alpha_L, alpha_R vs t" },
    ScenarioInfo { name: "fig5", description: "alpha_L vs g at t = 1" },
    ScenarioInfo { name: "fig6", description: "alpha vs t with the right or the left environment detached" },
    ScenarioInfo { name: "fig7", description: "alpha vs g at t = 0.7 with one environment detached" },
    ScenarioInfo { name: "fig8", description: "symmetric/asymmetric couplings: alpha vs T_M at t = 0.4 and vs t" },
    ScenarioInfo { name: "fig9", description: "nonlinear ancillas: alpha_L vs T_M at t = 1 per epsilon" },
    ScenarioInfo { name: "fig10", description: "nonlinear ancillas: alpha_L vs t per epsilon" },
    ScenarioInfo { name: "fig11", description: "nonlinear ancillas with symmetric/asymmetric couplings: alpha_L vs T_M at t = 0.4" },
    ScenarioInfo { name: "fig12", description: "BLP non-Markovianity per qubit for the three coupling cases" },
    ScenarioInfo { name: "fig13", description: "qubit ancillas: alpha vs t, and vs T_M at t = 9.7" },
    ScenarioInfo { name: "appendixA", description: "two-qubit device: alpha = dJ_R/dJ_L vs T_L" },
];

pub fn find(name: &str) -> Option<&'static ScenarioInfo> {
    SCENARIOS.iter().find(|s| s.name == name)
}

/// Everything a scenario reads from the resolved configuration.
#[derive(Clone, Debug)]
pub struct Context {
    pub model: ModelConfig,
    pub boundary: BoundarySide,
    pub blp: SearchConfig,
    pub blp_t_max: f64,
    pub resolution: ResolutionSection,
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    /// Scalar results worth keeping in the manifest.
    pub notes: Vec<String>,
}

const EPSILONS: [f64; 5] = [-0.05, -0.01, 0.0, 0.01, 0.05];
const G_FAMILY: [f64; 3] = [3.5, 4.0, 4.5];

impl Context {
    fn probe(&self, t: f64) -> Probe {
        Probe::at(t).with_h(self.model.stencil_h).with_boundary(self.boundary)
    }

    fn times(&self, t_end: f64) -> Vec<f64> {
        arange(0.0, t_end, self.resolution.time_step.unwrap_or(self.model.sample_dt))
    }

    fn temperatures(&self, from: f64, to: f64, default_step: f64) -> Vec<f64> {
        arange(from, to, self.resolution.temperature_step.unwrap_or(default_step))
    }

    fn couplings(&self, from: f64, to: f64) -> Vec<f64> {
        arange(from, to, self.resolution.coupling_step.unwrap_or(0.01))
    }
}

fn axis_column(axis: SweepAxis) -> Column {
    Column::new(axis.name(), axis.unit())
}

/// A family of curves sharing one axis: each curve is a configuration, a
/// label suffix and the terminals whose alpha it contributes.
struct Curve {
    label: String,
    config: ModelConfig,
    terminals: Vec<Terminal>,
}

impl Curve {
    fn new(label: impl Into<String>, config: ModelConfig, terminals: &[Terminal]) -> Self {
        Curve { label: label.into(), config, terminals: terminals.to_vec() }
    }
}

fn column_name(base: &str, label: &str) -> String {
    if label.is_empty() {
        base.to_string()
    } else {
        format!("{base}@{label}")
    }
}

fn merge_errors(errors: impl IntoIterator<Item = Option<String>>) -> Option<String> {
    let all: Vec<String> = errors.into_iter().flatten().collect();
    if all.is_empty() {
        None
    } else {
        Some(all.join("; "))
    }
}

fn alpha_table(name: &str, axis: SweepAxis, grid: &[f64], curves: &[Curve], probe: &Probe) -> Result<Table, MetricsError> {
    let results: Vec<SweepResult> = curves.iter().map(|c| sweep(&c.config, axis, grid, probe)).collect::<Result<_, _>>()?;
    let mut columns = vec![axis_column(axis)];
    for c in curves {
        for t in &c.terminals {
            columns.push(Column::new(column_name(&format!("alpha_{t}"), &c.label), UNIT_NONE));
        }
    }
    let mut table = Table::new(name, columns);
    for (i, &x) in grid.iter().enumerate() {
        let mut cells = vec![Cell::Num(x)];
        for (c, r) in curves.iter().zip(&results) {
            for &t in &c.terminals {
                cells.push(Cell::from(r.points[i].alpha(t)));
            }
        }
        let error = merge_errors(curves.iter().zip(&results).map(|(c, r)| {
            r.points[i].error.as_ref().map(|e| if c.label.is_empty() { e.clone() } else { format!("{}: {e}", c.label) })
        }));
        table.push(cells, error);
    }
    Ok(table)
}

fn with_g(mut c: ModelConfig, g: f64) -> ModelConfig {
    c.g = g;
    c
}

fn with_epsilon(mut c: ModelConfig, eps: f64) -> ModelConfig {
    c.env.kind = if eps == 0.0 { EnvKind::QutritLinear } else { EnvKind::QutritNonlinear };
    c.env.epsilon = eps;
    c
}

fn detached(mut c: ModelConfig, t: Terminal) -> ModelConfig {
    c.env.attached = c.env.attached.without(t);
    c
}

fn fmt_label(prefix: &str, v: f64) -> String {
    format!("{prefix}={v}")
}

pub fn run(name: &str, ctx: &Context) -> Result<ScenarioOutput, MetricsError> {
    use Terminal::{L, M, R};
    let base = ctx.model;
    let lr = [L, R];
    let tm = SweepAxis::Temperature(M);
    let mut out = ScenarioOutput::default();
    match name {
        "fig2" => {
            let grid = ctx.temperatures(4.0, 10.0, 0.1);
            let r = sweep(&base, tm, &grid, &ctx.probe(1.0))?;
            let mut columns = vec![axis_column(tm)];
            for t in [L, M, R] {
                columns.push(Column::new(format!("J_{t}"), UNIT_CURRENT));
            }
            for t in [L, M, R] {
                columns.push(Column::new(format!("dJ{t}_dTM"), UNIT_CURRENT_DERIVATIVE));
            }
            let mut table = Table::new("fig2", columns);
            for p in &r.points {
                let mut cells = vec![Cell::Num(p.x)];
                for t in [L, M, R] {
                    cells.push(p.stencil.as_ref().and_then(|s| s.current(t)).into());
                }
                for t in [L, M, R] {
                    cells.push(p.stencil.as_ref().and_then(|s| s.derivative(t)).into());
                }
                table.push(cells, p.error.clone());
            }
            out.tables.push(table);

            let family: Vec<SweepResult> =
                G_FAMILY.iter().map(|&g| sweep(&with_g(base, g), tm, &grid, &ctx.probe(1.0))).collect::<Result<_, _>>()?;
            let mut columns = vec![axis_column(tm)];
            for g in G_FAMILY {
                columns.push(Column::new(column_name("dJM_dTM", &fmt_label("g", g)), UNIT_CURRENT_DERIVATIVE));
            }
            let mut table = Table::new("fig2c", columns);
            for (i, &x) in grid.iter().enumerate() {
                let mut cells = vec![Cell::Num(x)];
                for r in &family {
                    cells.push(r.points[i].stencil.as_ref().and_then(|s| s.derivative(M)).into());
                }
                table.push(cells, merge_errors(family.iter().map(|r| r.points[i].error.clone())));
            }
            out.tables.push(table);
        }
        "fig3" => {
            let curves: Vec<Curve> = G_FAMILY.iter().map(|&g| Curve::new(fmt_label("g", g), with_g(base, g), &[L])).collect();
            out.tables.push(alpha_table("fig3", tm, &ctx.temperatures(4.0, 10.0, 0.1), &curves, &ctx.probe(1.0))?);
        }
        "fig4" => {
            out.tables.push(alpha_table("fig4", SweepAxis::Time, &ctx.times(5.0), &[Curve::new("", base, &lr)], &ctx.probe(0.0))?);
        }
        "fig5" => {
            let grid = ctx.couplings(3.5, 4.5);
            out.tables.push(alpha_table("fig5", SweepAxis::Coupling, &grid, &[Curve::new("", base, &[L])], &ctx.probe(1.0))?);
        }
        "fig6" | "fig7" => {
            let curves = [
                Curve::new("R_detached", detached(base, R), &lr),
                Curve::new("L_detached", detached(base, L), &lr),
            ];
            let table = if name == "fig6" {
                alpha_table("fig6", SweepAxis::Time, &ctx.times(5.0), &curves, &ctx.probe(0.0))?
            } else {
                alpha_table("fig7", SweepAxis::Coupling, &ctx.couplings(3.5, 4.5), &curves, &ctx.probe(0.7))?
            };
            out.tables.push(table);
        }
        "fig8" => {
            let curves = [
                Curve::new("symmetric", base.with_preset(CouplingPreset::Symmetric), &lr),
                Curve::new("asymmetric", base.with_preset(CouplingPreset::Asymmetric), &lr),
            ];
            out.tables.push(alpha_table("fig8_temperature", tm, &ctx.temperatures(0.5, 12.0, 0.1), &curves, &ctx.probe(0.4))?);
            out.tables.push(alpha_table("fig8_time", SweepAxis::Time, &ctx.times(5.0), &curves, &ctx.probe(0.0))?);
        }
        "fig9" => {
            let curves: Vec<Curve> =
                EPSILONS.iter().map(|&e| Curve::new(fmt_label("eps", e), with_epsilon(base, e), &[L])).collect();
            out.tables.push(alpha_table("fig9", tm, &ctx.temperatures(4.0, 10.0, 0.1), &curves, &ctx.probe(1.0))?);
        }
        "fig10" => {
            let curves: Vec<Curve> =
                [-0.01, 0.0, 0.01].iter().map(|&e| Curve::new(fmt_label("eps", e), with_epsilon(base, e), &[L])).collect();
            out.tables.push(alpha_table("fig10", SweepAxis::Time, &ctx.times(5.0), &curves, &ctx.probe(0.0))?);
        }
        "fig11" => {
            for (file, preset) in [("fig11_symmetric", CouplingPreset::Symmetric), ("fig11_asymmetric", CouplingPreset::Asymmetric)] {
                let curves: Vec<Curve> = EPSILONS
                    .iter()
                    .map(|&e| Curve::new(fmt_label("eps", e), with_epsilon(base.with_preset(preset), e), &[L]))
                    .collect();
                out.tables.push(alpha_table(file, tm, &ctx.temperatures(0.5, 12.0, 0.1), &curves, &ctx.probe(0.4))?);
            }
        }
        "fig12" => {
            for preset in [CouplingPreset::Baseline, CouplingPreset::Symmetric, CouplingPreset::Asymmetric] {
                let cfg = base.with_preset(preset);
                let prop = std::sync::Arc::new(crate::engine::Propagator::new(&cfg)?);
                let mut columns = vec![Column::new("t", UNIT_TIME)];
                let mut series = Vec::new();
                let mut times = Vec::new();
                for t in [L, M, R] {
                    let dynamics = QubitDynamics::with_propagator(&prop, &cfg, t, ctx.blp_t_max)?;
                    let res = blp_from_dynamics(&dynamics, &ctx.blp);
                    out.notes.push(format!(
                        "fig12 {}: N_{t} = {:.6e} at pair (theta, phi) = ({:.6}, {:.6}) / ({:.6}, {:.6})",
                        preset.name(),
                        res.value,
                        res.optimal_pair.0.theta,
                        res.optimal_pair.0.phi,
                        res.optimal_pair.1.theta,
                        res.optimal_pair.1.phi
                    ));
                    columns.push(Column::new(format!("D_{t}"), UNIT_NONE));
                    columns.push(Column::new(format!("N_{t}"), UNIT_NONE));
                    let cumulative = cumulative_backflow(&res.distance_series);
                    series.push((res.distance_series, cumulative));
                    times = res.times;
                }
                let mut table = Table::new(format!("fig12_{}", preset.name()), columns);
                for (k, &t) in times.iter().enumerate() {
                    let mut cells = vec![Cell::Num(t)];
                    for (d, n) in &series {
                        cells.push(Cell::Num(d[k]));
                        cells.push(Cell::Num(n[k]));
                    }
                    table.push(cells, None);
                }
                out.tables.push(table);
            }
        }
        "fig13" => {
            let mut cfg = base;
            cfg.env.kind = EnvKind::Qubit;
            let curve = [Curve::new("", cfg, &lr)];
            out.tables.push(alpha_table("fig13_time", SweepAxis::Time, &ctx.times(10.0), &curve, &ctx.probe(0.0))?);
            out.tables.push(alpha_table("fig13_temperature", tm, &ctx.temperatures(4.0, 10.0, 0.1), &curve, &ctx.probe(9.7))?);
        }
        "appendixA" => {
            let unequal = appendix_config(&base, 1.0, 2.0);
            let equal = appendix_config(&base, 1.0, 1.0);
            let curves = [Curve::new("", unequal, &[R]), Curve::new("equal_splittings", equal, &[R])];
            let probe = ctx.probe(1.0).modulated_by(L);
            let grid = ctx.temperatures(0.2, 4.0, 0.01);
            let mut table = alpha_table("appendixA", SweepAxis::Temperature(L), &grid, &curves, &probe)?;
            // The appendix calls this ratio simply alpha.
            table.columns[1].name = "alpha".into();
            table.columns[2].name = "alpha@equal_splittings".into();
            out.tables.push(table);
        }
        other => return Err(MetricsError::InvalidGrid(format!("unknown scenario `{other}`"))),
    }
    Ok(out)
}

/// Two-qubit device with the given splittings and an L-R coupling equal to
/// `Delta`. A three-qubit `base` is replaced by the reference device
/// (`Delta = 5`, `T_R = 4`); a two-qubit one keeps its own values.
pub fn appendix_config(base: &ModelConfig, omega_l: f64, omega_r: f64) -> ModelConfig {
    let mut cfg = *base;
    if base.n_system_qubits != 2 {
        cfg.env.delta = 5.0;
        cfg.env.temperatures.r = 4.0;
    }
    cfg.env.attached = Attachment { l: true, m: false, r: true };
    cfg.n_system_qubits = 2;
    cfg.coupling = CouplingConfig { omega_l, omega_r, ..CouplingConfig::appendix_a(cfg.env.delta) };
    cfg
}

/// Alpha values of one column of a table (divergent and missing cells as `None`).
pub fn column_values(table: &Table, name: &str) -> Option<Vec<Option<f64>>> {
    let idx = table.column_index(name)?;
    Some(
        table
            .rows
            .iter()
            .map(|r| match r.cells[idx] {
                Cell::Num(v) => Some(v),
                _ => None,
            })
            .collect(),
    )
}

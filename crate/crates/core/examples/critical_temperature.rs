//! Where does dJ_M/dT_M change sign? Scan a coarse T_M grid, then bisect
//! every bracket that shows a sign change.

use wtt::metrics::{arange, find_critical, sweep, Probe, SweepAxis};
use wtt::model::{CouplingPreset, ModelConfig, Terminal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = 0.4;
    let probe = Probe::at(t);
    let grid = arange(0.5, 12.0, 0.5);
    for preset in [CouplingPreset::Baseline, CouplingPreset::Symmetric, CouplingPreset::Asymmetric] {
        let config = ModelConfig::baseline().with_preset(preset);
        let scan = sweep(&config, SweepAxis::Temperature(Terminal::M), &grid, &probe)?;
        let d: Vec<f64> = scan.points.iter().map(|p| p.stencil.as_ref().unwrap().derivative(Terminal::M).unwrap()).collect();
        let mut roots = Vec::new();
        for k in 0..grid.len() - 1 {
            if d[k].signum() != d[k + 1].signum() {
                roots.push(find_critical(&config, &probe, (grid[k], grid[k + 1]))?);
            }
        }
        println!(
            "{:<10} dJ_M/dT_M from {:+.3e} (T_M = 0.5) to {:+.3e} (T_M = 12); critical T_M: {:?}",
            preset.name(),
            d[0],
            d[d.len() - 1],
            roots
        );
    }
    Ok(())
}

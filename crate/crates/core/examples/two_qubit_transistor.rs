//! A two-terminal device: L modulates, R is read out, alpha = dJ_R / dJ_L.
//! Compared for unequal and equal qubit splittings.

use wtt::metrics::{arange, sweep, Probe, SweepAxis};
use wtt::model::{ModelConfig, Terminal};
use wtt::runner::scenarios::appendix_config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let probe = Probe::at(1.0).modulated_by(Terminal::L);
    let grid = arange(0.5, 4.0, 0.5);
    for (omega_l, omega_r) in [(1.0, 2.0), (1.0, 1.0)] {
        let config = appendix_config(&ModelConfig::baseline(), omega_l, omega_r);
        let r = sweep(&config, SweepAxis::Temperature(Terminal::L), &grid, &probe)?;
        let row: Vec<String> = r.alpha_series(Terminal::R).iter().map(|(_, a)| a.map_or("-".into(), |v| format!("{v:.3}"))).collect();
        println!("omega_L = {omega_l}, omega_R = {omega_r}: alpha over T_L = {grid:?}\n  {}", row.join("  "));
    }
    Ok(())
}

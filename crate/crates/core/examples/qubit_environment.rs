//! Two-level ancillas instead of qutrits, probed late in the evolution.

use wtt::metrics::{arange, sweep, Probe, SweepAxis};
use wtt::model::{EnvKind, ModelConfig, Terminal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = ModelConfig::baseline();
    config.env.kind = EnvKind::Qubit;
    let r = sweep(&config, SweepAxis::Temperature(Terminal::M), &arange(4.0, 10.0, 1.0), &Probe::at(9.7))?;
    println!("{:>5} {:>12} {:>12}", "T_M", "alpha_L", "alpha_R");
    for p in &r.points {
        let show = |t| p.alpha(t).and_then(|a| a.value()).map_or("-".to_string(), |v| format!("{v:+.4}"));
        println!("{:>5.1} {:>12} {:>12}", p.x, show(Terminal::L), show(Terminal::R));
    }
    Ok(())
}

//! alpha_L against the system-bath coupling g. Grid points run in parallel;
//! a point that fails is kept with its error instead of aborting the sweep.

use wtt::metrics::{arange, sweep, Probe, SweepAxis};
use wtt::model::{ModelConfig, Terminal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ModelConfig::baseline();
    let result = sweep(&config, SweepAxis::Coupling, &arange(3.5, 4.5, 0.1), &Probe::at(1.0))?;
    for (g, alpha) in result.alpha_series(Terminal::L) {
        let bar = alpha.map_or(String::new(), |a| "#".repeat((a.abs() * 20.0).min(60.0) as usize));
        println!("g = {g:.1}  alpha_L = {:>10}  {bar}", alpha.map_or("-".into(), |a| format!("{a:+.4}")));
    }
    println!("failed points: {}", result.failures());
    Ok(())
}

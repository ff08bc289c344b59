//! Removing one bath: the qubit keeps its couplings inside the device but no
//! longer collides with ancillas.

use wtt::metrics::{arange, sweep, Probe, SweepAxis};
use wtt::model::{ModelConfig, Terminal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for detach in [Terminal::R, Terminal::L] {
        let mut config = ModelConfig::baseline();
        config.env.attached = config.env.attached.without(detach);
        let r = sweep(&config, SweepAxis::Time, &arange(0.0, 2.0, 0.01), &Probe::at(0.0))?;
        println!("{detach} detached:");
        for out in [Terminal::L, Terminal::R] {
            let s = r.alpha_series(out);
            let peak = s.iter().filter_map(|&(t, a)| a.map(|a| (t, a))).max_by(|x, y| x.1.total_cmp(&y.1));
            let at_07 = s.iter().find(|(t, _)| (t - 0.7).abs() < 1e-9).and_then(|p| p.1);
            println!("  alpha_{out}: largest {peak:?} (t, value), at t = 0.7: {at_07:?}");
        }
    }
    Ok(())
}

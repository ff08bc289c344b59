//! Dynamical amplification at one instant: five-point derivatives of every
//! current with respect to T_M, and their ratios.

use wtt::metrics::{stencil, Probe};
use wtt::model::{ModelConfig, Terminal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ModelConfig::baseline();
    let s = stencil(&config, &Probe::at(1.0))?;

    for t in Terminal::ALL {
        println!("J_{t} = {:+.6}   dJ_{t}/dT_M = {:+.6e}", s.current(t).unwrap(), s.derivative(t).unwrap());
    }
    for out in [Terminal::L, Terminal::R] {
        let a = s.amplification(out, 1e-8).unwrap();
        match a.alpha.value() {
            Some(v) => println!("alpha_{out} = {v:+.5}"),
            None => println!("alpha_{out} diverges (dJ_M/dT_M ~ 0)"),
        }
    }
    Ok(())
}

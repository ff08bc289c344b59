//! Anharmonic ancillas: the middle qutrit level is shifted by epsilon
//! (negative for transmon-like, positive for Kerr-like spacing).

use wtt::metrics::{amplification_with, Probe};
use wtt::model::{EnvKind, ModelConfig, Terminal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let probe = Probe::at(1.0);
    for eps in [-0.05, -0.01, 0.0, 0.01, 0.05] {
        let mut config = ModelConfig::baseline();
        if eps != 0.0 {
            config.env.kind = EnvKind::QutritNonlinear;
            config.env.epsilon = eps;
        }
        let a = amplification_with(&config, &probe, Terminal::L)?;
        println!("epsilon = {eps:+.2}  alpha_L = {:?}", a.alpha);
    }
    Ok(())
}

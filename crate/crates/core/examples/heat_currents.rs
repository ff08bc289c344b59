//! Local heat currents of the three qubits over the first ten collisions.
//!
//! Positive values mean heat leaving the qubit. Boundary samples are left
//! limits: every current restarts from zero when a fresh ancilla arrives.

use wtt::engine::evolve;
use wtt::model::{ModelConfig, Terminal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ModelConfig::baseline();
    let traj = evolve(&config, 5.0)?;

    println!("{:>6} {:>12} {:>12} {:>12}", "t", "J_L", "J_M", "J_R");
    for (k, t) in traj.times.iter().enumerate().step_by(25) {
        let j: Vec<f64> = Terminal::ALL.iter().map(|&x| traj.current_series(x).unwrap()[k]).collect();
        println!("{t:>6.2} {:>12.5} {:>12.5} {:>12.5}", j[0], j[1], j[2]);
    }

    let last = traj.system_states.last().unwrap();
    println!("\npurity of the three-qubit state at t = 5: {:.4}", last.purity());
    Ok(())
}

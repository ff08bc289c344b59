//! Information backflow (BLP measure) of each qubit: search over antipodal
//! pure-state pairs, then report where the trace distance grows.

use wtt::model::{ModelConfig, Terminal};
use wtt::nonmarkov::{blp_measure, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ModelConfig::baseline();
    let search = SearchConfig::default();
    for t in Terminal::ALL {
        let res = blp_measure(&config, t, 3.0, &search)?;
        let (a, _) = res.optimal_pair;
        println!("qubit {t}: N = {:.4}, optimal pair at theta = {:.3}, phi = {:.3}", res.value, a.theta, a.phi);
        let windows: Vec<String> = res.growth_windows.iter().map(|(s, e)| format!("[{s:.2}, {e:.2}]")).collect();
        println!("  distance grows on {}", windows.join(" "));
    }
    Ok(())
}

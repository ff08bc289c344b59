//! The batch runner from code: a TOML document plus overrides, resolved and
//! executed into a directory with CSV tables and a manifest.

use wtt::runner::{config, execute};

const DOC: &str = r#"
scenario = "fig4"

[model]
g = 4.0

[resolution]
time_step = 0.05
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("wtt-scenario-example");
    let mut doc = config::parse_config(DOC, &["model.env.T_M=8".to_string()])?;
    doc.out = Some(out.clone());
    let resolved = config::resolve(&doc, Some(DOC))?;
    let outcome = execute(&resolved)?;
    for f in &outcome.manifest.files {
        println!("{}  rows={}  sha256={}", out.join(&f.name).display(), f.rows, &f.sha256[..16]);
    }
    println!("took {:.2} s, {} failed points", outcome.manifest.duration_seconds, outcome.manifest.failed_points);
    Ok(())
}

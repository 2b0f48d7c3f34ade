//! Runs a scenario from TOML text and writes its report files, the same path
//! the `fedmask` binary takes.
//!
//! cargo run --example scenario_report [outdir]

use fedmask::harness::{run_scenario, ScenarioConfig};

const SCENARIO: &str = r#"
kind = "secagg_run"
seed = 100
trials = 3
n = 8
k = 5
dim = 16

[[dropouts]]
client = 2
after = "share_keys"
"#;

fn main() -> fedmask::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "scenario-out".into());
    let cfg = ScenarioConfig::from_toml(SCENARIO)?;
    let report = run_scenario(&cfg)?;
    for c in &report.body.checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    for f in report.write(std::path::Path::new(&out))? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

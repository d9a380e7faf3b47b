//! Drive a scenario from an in-memory TOML config, as the command line does.

use std::path::Path;

use cca_sim::scenario::{execute, ScenarioConfig};

fn main() -> cca_sim::Result<()> {
    let dir = std::env::temp_dir().join("cca-example");
    let text = format!(
        r#"
scenario = "boundstate"
preset = "table1"

[output]
dir = "{}"

[sweep]
variable = "omega_q1_GHz"
start = 6.3
stop = 7.3
steps = 11
"#,
        dir.display()
    );
    let cfg = ScenarioConfig::from_toml_str(&text, Path::new("."))?;
    let report = execute(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&report.output.summary).unwrap());
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

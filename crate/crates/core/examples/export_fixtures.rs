//! Writes every built-in fixture as a `v1` JSON config into a directory
//! (default `fixtures/`).

use gdifs_core::config::SystemConfig;
use gdifs_core::fixtures;

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    std::fs::create_dir_all(&dir)?;
    let mut configs: Vec<(String, SystemConfig)> = fixtures::ssc_fixtures()
        .into_iter()
        .filter(|(name, _)| *name != "golden_mean")
        .map(|(name, g)| (name.to_string(), SystemConfig::from_gdifs(&g)))
        .collect();
    configs.push(("golden_mean".into(), SystemConfig::from_sft(&fixtures::golden_mean())));
    for (name, cfg) in configs {
        let path = format!("{dir}/{name}.json");
        std::fs::write(&path, cfg.to_json() + "\n")?;
        println!("{path}");
    }
    Ok(())
}

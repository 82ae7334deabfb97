//! A small sweep over groups B and D at the shortest period, written to a
//! temporary directory.

use omnihex::harness::{run_sweep, Config};
use omnihex::model::Group;

fn main() -> omnihex::Result<()> {
    let mut cfg = Config::from_toml_str(
        r#"
        [sweep]
        controllers = ["nominal", "l1"]
        periods = [15.0]
        duration = 5.0
        write_runs = false
        "#,
    )?;
    cfg.sweep.groups = vec![Group::B, Group::D];

    let dir = std::env::temp_dir().join("omnihex-sweep-example");
    let out = run_sweep(&cfg, Some(&dir))?;
    for row in &out.summary {
        println!(
            "{} T={}  nominal {:.4} m  l1 {:.4} m  reduction {:.1}%",
            row.group,
            row.period,
            row.nominal_position_rmse.unwrap_or(f64::NAN),
            row.l1_position_rmse.unwrap_or(f64::NAN),
            row.l1_position_reduction.unwrap_or(f64::NAN)
        );
    }
    println!("summary written to {}", dir.join("summary.csv").display());
    Ok(())
}

//! Writes split heat maps of the target and the completed 2-RDM.
//!
//! Usage: `cargo run --release --example heatmaps [out-dir]`

use std::path::PathBuf;

use rdm_completion::experiment::{run_completion, write_bundle, ExperimentConfig};
use rdm_completion::heatmap::emit_heatmap;

fn main() -> rdm_completion::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from("heatmaps-out"), PathBuf::from);
    let out = run_completion(&ExperimentConfig::default())?;
    let paths = write_bundle(&out, &dir)?;
    for p in &paths.heatmaps {
        println!("wrote {}", p.display());
    }
    let subset = &out.analysis.subset;
    let target = emit_heatmap(&out.analysis.target, subset, true)?;
    let completed = emit_heatmap(&out.completed, subset, true)?;
    println!(
        "largest cell difference: {:.3e}",
        (&target.values - &completed.values).amax()
    );
    Ok(())
}

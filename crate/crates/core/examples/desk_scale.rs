//! Compares LBP-BEVM against plain LBP on the synthetic desk-scale corpus.
//!
//! `cargo run --release -p lbpbevm --example desk_scale [seed]`

use std::time::Instant;

use lbpbevm::datasets::{generate_synthetic, FeatureDataset, SynthSpec};
use lbpbevm::ebt::EbtParams;
use lbpbevm::features::{extract_all, Descriptor, ExtractionConfig};
use lbpbevm::metrics::{kfold_evaluate, ncc_matrix};

fn mean_similarity(ds: &FeatureDataset) -> lbpbevm::Result<(f64, f64)> {
    let grid = ncc_matrix(&ds.rows)?;
    let (mut within, mut nw, mut cross, mut nc) = (0.0, 0, 0.0, 0);
    for a in 0..ds.len() {
        for b in a + 1..ds.len() {
            if ds.labels[a] == ds.labels[b] {
                within += grid[a][b];
                nw += 1;
            } else {
                cross += grid[a][b];
                nc += 1;
            }
        }
    }
    Ok((within / nw as f64, cross / nc as f64))
}

fn main() -> lbpbevm::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let traces = generate_synthetic(&SynthSpec::desk_scale(seed))?;
    for descriptor in [Descriptor::LbpBevm, Descriptor::Lbp] {
        let start = Instant::now();
        let cfg = ExtractionConfig {
            descriptor,
            ..Default::default()
        };
        let ds = FeatureDataset {
            rows: extract_all(&traces.signals, &cfg)?,
            labels: traces.labels(),
            classes: traces.classes.clone(),
            source: traces.source.clone(),
        };
        let (within, cross) = mean_similarity(&ds)?;
        let params = EbtParams {
            seed,
            ..Default::default()
        };
        let report = kfold_evaluate(&ds, 10, params, seed)?;
        println!("== {descriptor} ({:.1?})", start.elapsed());
        println!("mean NCC within class {within:.3}, across classes {cross:.3}");
        println!("{report}");
    }
    Ok(())
}

//! Writes a synthetic bank-year panel with a planted charter value structure.
//!
//! cargo run -p cvtree --example synth_panel -- panel.csv [rows] [seed]

use std::fs::File;
use std::process::ExitCode;

use cvtree::dataset::{write_panel_csv, RawField};
use cvtree::synth::{generate_synthetic_panel, PlantedNode, PlantedPanelSpec};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(path) = args.first() else {
        eprintln!("usage: synth_panel <out.csv> [rows] [seed]");
        return ExitCode::from(2);
    };
    let rows = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(944);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let root = PlantedNode::split(
        RawField::CapitalRatio,
        0.06,
        PlantedNode::split(RawField::Roa, 0.01, PlantedNode::leaf(0.89), PlantedNode::leaf(0.97)),
        PlantedNode::split(
            RawField::LoansToDeposits,
            0.8,
            PlantedNode::leaf(1.08),
            PlantedNode::leaf(1.0),
        ),
    );
    let result = generate_synthetic_panel(&PlantedPanelSpec::new(root), rows, 0.02, seed).and_then(|panel| {
        let file = File::create(path).map_err(|e| cvtree::error::Error::io(path, e))?;
        write_panel_csv(&panel, file)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

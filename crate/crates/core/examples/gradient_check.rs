//! Finite-difference gradient verification: every layer kind, then the
//! assembled three-branch model at gradient-check scale.
//!
//! Run with: cargo run --release --example gradient_check

use coughscreen::selftest::{
    full_graph_gradient_check, layer_gradient_checks, GRAPH_GRAD_TOLERANCE, LAYER_GRAD_TOLERANCE,
};

fn main() -> coughscreen::Result<()> {
    println!("checking analytic gradients against central differences (eps 1e-5)\n");

    let (layer_err, coords) = layer_gradient_checks()?;
    println!(
        "layers:     max relative error {layer_err:.3e} over {coords} coordinates (tolerance {LAYER_GRAD_TOLERANCE:.0e})"
    );

    let graph = full_graph_gradient_check(50)?;
    println!(
        "full graph: max relative error {:.3e} over {} coordinates (tolerance {GRAPH_GRAD_TOLERANCE:.0e})",
        graph.max_rel_err, graph.coords_checked
    );

    let ok = layer_err < LAYER_GRAD_TOLERANCE && graph.max_rel_err < GRAPH_GRAD_TOLERANCE;
    println!("\n{}", if ok { "all gradients verified" } else { "GRADIENT MISMATCH" });
    Ok(())
}

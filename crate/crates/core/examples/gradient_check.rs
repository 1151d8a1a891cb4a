//! Finite-difference gradient checks of every layer and of both networks.
//!
//! cargo run --example gradient_check [seed]

use msr_cnn::model::graph_checks;
use msr_cnn::nn::layer_checks;

fn main() -> msr_cnn::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut ok = true;
    for r in layer_checks(seed)?.into_iter().chain(graph_checks(seed)?) {
        let status = if r.report.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<20} max rel error {:.2e} (tol {:.0e})", r.name, r.report.max_rel_error, r.report.tolerance);
        if !r.report.passed {
            for b in r.report.blocks.iter().filter(|b| b.rel_error > r.report.tolerance) {
                println!("     {}: {:.2e}", b.name, b.rel_error);
            }
        }
        ok &= r.report.passed;
    }
    std::process::exit(if ok { 0 } else { 1 });
}

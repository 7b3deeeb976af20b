//! Locate the stability threshold on the hyperbolic plane and in hyperbolic
//! 3-space, and show the spectral bound it satisfies.
//!
//! Run with `cargo run --release --example threshold`.

use gelfand_models::stability::{lambda1_extrapolated, threshold_eta};
use gelfand_models::WarpProfile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = WarpProfile::hyperbolic();
    for n in [2usize, 3] {
        let est = lambda1_extrapolated(&h, n, &[10.0, 20.0, 40.0], 1e-8)?;
        let rep = threshold_eta(&h, n, est.value.ln() - 2.0, 10.0, 50.0, 1e-3)?;
        println!(
            "N = {n}: eta = {:.4}  (log lambda1 = {:.4} +- {:.1e}, {} bisection probes)",
            rep.eta_hat,
            est.value.ln(),
            est.uncertainty / est.value,
            rep.probes.len()
        );
        assert!(rep.eta_hat > est.value.ln());
    }
    Ok(())
}

//! Multi-client runs for several subchannel counts, printed next to the
//! analytic first-slot success.

use iecs::channel::LossModel;
use iecs::harmonic::SystemConfig;
use iecs::metrics::{sweep, theory_overlay, RunSpec};

fn main() -> iecs::Result<()> {
    let grid: Vec<RunSpec> = [1, 2, 4, 8]
        .iter()
        .map(|&lambda| RunSpec::new(SystemConfig { lambda, ..SystemConfig::default() }, LossModel::uniform(0.1), 6))
        .collect();
    for result in sweep(&grid) {
        let report = result?;
        let overlay = theory_overlay(&report)?;
        let a = &report.aggregate;
        println!(
            "λ = {:>2}: b=1 measured {:.3} (sets {:.3}, theory {:.3}); by deadline {:.4}; full from b = {:?}",
            report.spec.config.lambda,
            overlay[0].measured_deadline,
            overlay[0].measured_set_success,
            overlay[0].first_slot_success.unwrap_or(f64::NAN),
            a.by_deadline_fraction,
            a.slots_to_full_recovery
        );
    }
    Ok(())
}

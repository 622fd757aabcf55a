//! Feeding identical survivors to a client with and without feedback error
//! correction.

use iecs::channel::{apply_loss, LossModel};
use iecs::decoder::{DecoderOptions, DecoderState};
use iecs::harmonic::SystemConfig;
use iecs::metrics::Broadcast;

fn main() -> iecs::Result<()> {
    let config = SystemConfig { n: 32, m: 7, r: 1, lambda: 4, k: 16, seed: 4, ..SystemConfig::default() };
    let broadcast = Broadcast::prepare(&config)?;
    let model = LossModel::uniform(0.2);
    let mut with = DecoderState::new(&config, 0, DecoderOptions { fec: true, max_buffered_equations: None });
    let mut without = DecoderState::new(&config, 0, DecoderOptions { fec: false, max_buffered_equations: None });

    println!(" b  deadline(off) deadline(on)  decoded(off) decoded(on)  buffered");
    for b in 1..=config.n {
        let abs = with.absolute_slot(b);
        let survivors = apply_loss(broadcast.packets[abs].clone(), &model, 11, abs as u64)?;
        let on = with.ingest_slot(b, &survivors, &broadcast.plans[abs], &broadcast.schedule)?.clone();
        let off = without.ingest_slot(b, &survivors, &broadcast.plans[abs], &broadcast.schedule)?.clone();
        println!(
            "{b:>2}  {:>13.3} {:>12.3}  {:>12} {:>11}  {:>8}",
            off.deadline_met_fraction,
            on.deadline_met_fraction,
            off.decoded_total,
            on.decoded_total,
            with.buffered_equations()
        );
    }
    Ok(())
}

//! Serialize one slot's surviving packets to a byte trace and decode from it.

use iecs::channel::{apply_loss, LossModel};
use iecs::coding::{write_trace, PACKET_HEADER_LEN};
use iecs::decoder::{DecoderOptions, DecoderState};
use iecs::harmonic::SystemConfig;
use iecs::metrics::Broadcast;

fn main() -> iecs::Result<()> {
    let config = SystemConfig { n: 12, m: 4, lambda: 2, k: 8, ..SystemConfig::default() };
    let broadcast = Broadcast::prepare(&config)?;
    let survivors = apply_loss(broadcast.packets[0].clone(), &LossModel::uniform(0.1), 1, 0)?;
    let mut trace = Vec::new();
    write_trace(&mut trace, &survivors).expect("writing to memory");
    println!(
        "{} packets, {} bytes ({} header + {} payload each)",
        survivors.len(),
        trace.len(),
        PACKET_HEADER_LEN,
        config.payload_bytes
    );

    let mut state = DecoderState::new(&config, 0, DecoderOptions::default());
    let report = state.ingest_trace(1, trace.as_slice(), &broadcast.plans[0], &broadcast.schedule)?;
    println!("decoded {} of {} unknowns in slot 1", report.unknowns_solved_in_slot, report.unknowns_total);
    Ok(())
}

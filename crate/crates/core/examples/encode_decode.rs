//! One client end to end: schedule, coding plans, lossy delivery, decoding,
//! and the share of each segment held by its playback deadline.

use iecs::channel::LossModel;
use iecs::decoder::DecoderOptions;
use iecs::harmonic::SystemConfig;
use iecs::metrics::Broadcast;

fn main() -> iecs::Result<()> {
    let config = SystemConfig { n: 24, m: 6, r: 1, lambda: 4, k: 32, ..SystemConfig::default() };
    let broadcast = Broadcast::prepare(&config)?;
    println!(
        "{} segments of {} bytes, {} packets per slot",
        config.n,
        config.segment_bytes(),
        config.packets_per_slot()
    );

    let state = broadcast.run_client(7, 5, &LossModel::uniform(0.1), DecoderOptions::default())?;
    for report in state.per_slot() {
        println!(
            "b = {:>2}: received {:>4}/{}, solved {:>4}/{} ({} via FEC), s_b by deadline {:.3}",
            report.client_slot,
            report.packets_received,
            report.packets_sent,
            report.unknowns_solved_in_slot,
            report.unknowns_total,
            report.unknowns_solved_via_fec,
            report.deadline_met_fraction
        );
    }
    println!("complete segments at the end: {}/{}", state.complete_segments().len(), config.n);
    Ok(())
}

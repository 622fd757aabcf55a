//! Bursty loss against the coded stream: shuffling transmission order
//! spreads a burst over many packet positions, so losses per position look
//! binomial again.

use iecs::channel::{apply_loss, LossModel};
use iecs::coding::{encode_slot, gen_coding_plan, segment_content, synthetic_content, CodedPacket};
use iecs::harmonic::{build_schedule, SystemConfig};

fn variance_of_losses(
    packets: &[Vec<CodedPacket>],
    model: &LossModel,
    config: &SystemConfig,
) -> iecs::Result<(f64, f64)> {
    let per_set = (config.lambda * config.channels()) as f64;
    let mut counts = Vec::new();
    for (t, slot) in packets.iter().enumerate() {
        let survivors = apply_loss(slot.clone(), model, 3, t as u64)?;
        let mut received = vec![0.0; config.k];
        for p in &survivors {
            received[p.position as usize] += 1.0;
        }
        counts.extend(received.iter().map(|r| per_set - r));
    }
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / counts.len() as f64;
    Ok((mean, var))
}

fn main() -> iecs::Result<()> {
    let config = SystemConfig { lambda: 4, k: 256, payload_bytes: 1, ..SystemConfig::default() };
    let slots = 60;
    let schedule = build_schedule(&config, slots)?;
    let content = segment_content(&synthetic_content(&config), &config)?;
    let mut shuffled = Vec::new();
    let mut in_order = Vec::new();
    for t in 0..slots {
        let plan = gen_coding_plan(t, schedule.segments_at(t), &config)?;
        let packets = encode_slot(t, &schedule, &content, &plan, &config)?;
        let mut sorted = packets.clone();
        sorted.sort_by_key(|p| (p.position, p.channel, p.subchannel));
        shuffled.push(packets);
        in_order.push(sorted);
    }

    let burst = LossModel::gilbert(0.1, 4.0)?;
    for (label, packets, model) in [
        ("uniform, shuffled", &shuffled, LossModel::uniform(0.1)),
        ("burst,   shuffled", &shuffled, burst),
        ("burst,   in order", &in_order, burst),
    ] {
        let (mean, var) = variance_of_losses(packets, &model, &config)?;
        println!("{label}: mean losses per position {mean:.3}, variance {var:.3}");
    }
    Ok(())
}

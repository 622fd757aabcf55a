//! Counting surviving packets per position in a client's first slot against
//! the exact binomial tail.

use iecs::channel::{apply_loss, LossModel};
use iecs::coding::{encode_slot, gen_coding_plan, segment_content, synthetic_content};
use iecs::harmonic::{build_schedule, first_slot_success_prob, SystemConfig};

fn main() -> iecs::Result<()> {
    for lambda in [1, 2, 6, 12, 16] {
        let mut ok = 0;
        let mut sets = 0;
        for seed in 0..20 {
            let config = SystemConfig { lambda, k: 256, payload_bytes: 1, seed, ..SystemConfig::default() };
            let schedule = build_schedule(&config, config.n)?;
            let content = segment_content(&synthetic_content(&config), &config)?;
            let plan = gen_coding_plan(0, schedule.segments_at(0), &config)?;
            let packets = encode_slot(0, &schedule, &content, &plan, &config)?;
            let mut received = vec![0; config.k];
            for p in apply_loss(packets, &LossModel::uniform(0.1), seed, 0)? {
                received[p.position as usize] += 1;
            }
            ok += received.iter().filter(|&&c| c >= lambda * config.m).count();
            sets += config.k;
        }
        let exact = first_slot_success_prob(7, 1, lambda, 0.1)?;
        println!("λ = {lambda:>2}: simulated {:.4}, exact {exact:.4}", ok as f64 / sets as f64);
    }
    Ok(())
}

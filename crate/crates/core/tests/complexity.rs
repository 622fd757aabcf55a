//! Decoding cost per packet position against the `λ²·I·M` size of one
//! coding matrix. Timing based, so the bound is loose: doubling λ may cost
//! at most eight times as much (λ² would be four).

use std::time::{Duration, Instant};

use iecs::channel::{apply_loss, LossModel};
use iecs::decoder::{DecoderOptions, DecoderState};
use iecs::harmonic::SystemConfig;
use iecs::metrics::Broadcast;

fn per_position_cost(lambda: usize) -> Duration {
    let config =
        SystemConfig { n: 16, m: 7, r: 1, lambda, k: 32, payload_bytes: 8, seed: 3, ..SystemConfig::default() };
    let broadcast = Broadcast::prepare(&config).unwrap();
    let model = LossModel::uniform(0.1);
    let survivors: Vec<_> =
        (0..4).map(|abs| apply_loss(broadcast.packets[abs].clone(), &model, 5, abs as u64).unwrap()).collect();
    let mut samples: Vec<Duration> = (0..5)
        .map(|_| {
            let mut state = DecoderState::new(&config, 0, DecoderOptions::default());
            let start = Instant::now();
            for b in 1..=4 {
                state.ingest_slot(b, &survivors[b - 1], &broadcast.plans[b - 1], &broadcast.schedule).unwrap();
            }
            start.elapsed() / (4 * config.k as u32)
        })
        .collect();
    samples.sort();
    samples[2]
}

#[test]
fn decode_cost_grows_at_most_quadratically_in_lambda_with_slack() {
    let lambdas = [2, 4, 8, 16];
    let costs: Vec<Duration> = lambdas.iter().map(|&l| per_position_cost(l)).collect();
    for (l, c) in lambdas.iter().zip(&costs) {
        println!("λ={l:>2}: {c:?} per position set");
    }
    for w in costs.windows(2) {
        let ratio = w[1].as_secs_f64() / w[0].as_secs_f64().max(1e-9);
        assert!(ratio < 8.0, "doubling λ multiplied the cost by {ratio:.1}");
    }
}

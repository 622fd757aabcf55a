//! Closed-form quantities: segment counts, admissible loss, first-slot
//! success, its λ → ∞ limit, and the startup delay.

use iecs::harmonic::{
    admissible_loss, asymptotic_success, first_slot_success_prob, harmonic_number, initial_delay, max_segments,
};

fn main() -> iecs::Result<()> {
    for m in 1..=8 {
        let n = max_segments(m)?;
        println!("M = {m}: n = {n:>4}, H_n = {:.5}", harmonic_number(n)?);
    }

    let n = max_segments(7)?;
    println!("\nadmissible loss, M = 7, R = 1 (n = {n})");
    for b in [1, 2, 5, 10, 100, n] {
        println!("  b = {b:>3}: {:.4}", admissible_loss(n, b, 1, 1)?);
    }

    println!("\nfirst-slot success, M = 7, R = 1");
    for p_e in [0.05, 0.1, 0.125, 0.15] {
        let row: Vec<String> = [1, 4, 6, 12, 64, 512]
            .iter()
            .map(|&lambda| first_slot_success_prob(7, 1, lambda, p_e).map(|s| format!("{s:.4}")))
            .collect::<iecs::Result<_>>()?;
        println!("  p_e = {p_e:<5}: {}  -> {:?}", row.join(" "), asymptotic_success(7, 1, p_e)?);
    }

    println!("\nstartup delay for a 2 h film on 8 channels");
    for r in 0..=2 {
        println!("  R = {r}: {:.2} s", initial_delay(7200.0, 8, r)?);
    }
    Ok(())
}

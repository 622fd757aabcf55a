//! Build the slot schedule for a small scheme and check that every client,
//! whenever it joins, sees segment i within its first i slots.

use iecs::harmonic::{build_schedule, max_segments, verify_schedule, SystemConfig};

fn main() -> iecs::Result<()> {
    let m = 3;
    let n = 8;
    println!("M = {m}, n = {n} (harmonic limit {})", max_segments(m)?);
    let config = SystemConfig { n, m, ..SystemConfig::default() };
    let schedule = build_schedule(&config, 2 * n)?;
    for t in 0..schedule.horizon {
        println!("slot {t:>2}: {:?}", schedule.segments_at(t));
    }
    let report = verify_schedule(&schedule, n);
    println!("window property holds: {}", report.passed);

    // Above a certain n the greedy scheduler gives up even though H_n <= M.
    let too_many = SystemConfig { n: 10, m, ..SystemConfig::default() };
    match build_schedule(&too_many, 20) {
        Ok(_) => println!("n = 10 scheduled"),
        Err(e) => println!("n = 10: {e}"),
    }
    Ok(())
}

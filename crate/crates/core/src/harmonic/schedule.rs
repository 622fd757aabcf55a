use serde::{Deserialize, Serialize};

use super::SystemConfig;
use crate::error::{Error, Result};

/// Periodic broadcast plan: which `M` segments go out in each slot.
///
/// Slots are indexed from 0 (absolute server time); segments are numbered
/// from 1. A client joining before slot `φ` needs segment `i` somewhere in
/// slots `φ..φ+i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// `periods[i - 1]` is the period `T(s_i)`.
    pub periods: Vec<usize>,
    /// Segments per slot, ascending.
    pub slots: Vec<Vec<u32>>,
    pub horizon: usize,
}

impl Schedule {
    pub fn segments_at(&self, slot: usize) -> &[u32] {
        &self.slots[slot]
    }

    pub fn segment_count(&self) -> usize {
        self.periods.len()
    }
}

/// First problem found by [`verify_schedule`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// A client joining at `join_offset` never sees `segment` in time.
    Window { segment: u32, join_offset: usize },
    /// Slot `slot` has the wrong width, a duplicate, or lacks segment 1.
    Slot { slot: usize },
    /// Fewer than `n` slots, so no join offset can be checked.
    ShortHorizon,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub passed: bool,
    pub violation: Option<Violation>,
}

impl ScheduleReport {
    fn fail(v: Violation) -> Self {
        Self { passed: false, violation: Some(v) }
    }
}

/// Earliest-deadline-first construction with `T(s_i) = i`.
///
/// Segment `i` is due by slot `i` (1-based) and, once sent in slot `t`,
/// again by `t + i`. Each slot takes the `M` segments with the earliest
/// deadline; ties go to the segment sent least recently (never-sent first),
/// then to the lower index.
pub fn build_schedule(config: &SystemConfig, horizon: usize) -> Result<Schedule> {
    let (n, m) = (config.n, config.m);
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig("n and M must be positive".into()));
    }
    if n < m {
        return Err(Error::InvalidConfig(format!("n = {n} is smaller than M = {m}")));
    }
    if horizon < n {
        return Err(Error::InvalidArgument(format!("horizon {horizon} shorter than n = {n}")));
    }

    let periods: Vec<usize> = (1..=n).collect();
    let mut deadline: Vec<usize> = periods.clone();
    let mut last_sent = vec![0usize; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut slots = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        order.sort_by_key(|&s| (deadline[s], last_sent[s], s));
        let mut chosen: Vec<u32> = order[..m].iter().map(|&s| s as u32 + 1).collect();
        for &s in &order[..m] {
            last_sent[s] = t;
            deadline[s] = t + periods[s];
        }
        if let Some(&missed) = order[m..].iter().find(|&&s| deadline[s] <= t) {
            return Err(Error::ScheduleInfeasible { segment: missed as u32 + 1, slot: t - 1 });
        }
        chosen.sort_unstable();
        slots.push(chosen);
    }

    let schedule = Schedule { periods, slots, horizon };
    if horizon >= 2 * n {
        if let Some(Violation::Window { segment, join_offset }) = verify_schedule(&schedule, n).violation {
            return Err(Error::ScheduleInfeasible { segment, slot: join_offset });
        }
    }
    Ok(schedule)
}

/// Check slot shape and the join window property for every offset in
/// `[0, horizon − n)`.
pub fn verify_schedule(schedule: &Schedule, n: usize) -> ScheduleReport {
    let horizon = schedule.slots.len().min(schedule.horizon);
    if n == 0 || horizon < n {
        return ScheduleReport::fail(Violation::ShortHorizon);
    }
    let width = schedule.slots[0].len();
    for (t, slot) in schedule.slots[..horizon].iter().enumerate() {
        let mut sorted = slot.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let in_range = sorted.iter().all(|&s| s >= 1 && s as usize <= n);
        if slot.len() != width || sorted.len() != width || !in_range || sorted.first() != Some(&1) {
            return ScheduleReport::fail(Violation::Slot { slot: t });
        }
    }

    // next_seen[t] = first slot >= t carrying the segment, or horizon.
    let mut next_seen = vec![horizon; horizon + 1];
    for segment in 1..=n as u32 {
        let mut next = horizon;
        for t in (0..horizon).rev() {
            if schedule.slots[t].contains(&segment) {
                next = t;
            }
            next_seen[t] = next;
        }
        let reach = segment as usize;
        let offsets = (horizon - n).max(1);
        if let Some(phi) = next_seen[..offsets].iter().enumerate().position(|(phi, &next)| next >= phi + reach) {
            return ScheduleReport::fail(Violation::Window { segment, join_offset: phi });
        }
    }
    ScheduleReport { passed: true, violation: None }
}

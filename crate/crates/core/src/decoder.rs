//! Client side: per-slot GF(2) decoding at packet-position granularity.
//!
//! Each packet position of a slot is an independent system over the `λM`
//! subsegment packets scheduled in that slot. Before solving, every unknown
//! the client already holds is substituted (implicit redundancy). With FEC
//! enabled the unsolved residue is kept and retried whenever new packets
//! are decoded; without it the residue is dropped at the end of the slot.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::coding::{read_trace, CodedPacket, CodingPlan};
use crate::error::{Error, Result};
use crate::gf2::{LinearSystem, Unknown};
use crate::harmonic::{Schedule, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderOptions {
    /// Keep and retry unsolved equations across slots.
    pub fec: bool,
    /// Cap on buffered equations; the oldest slots are evicted first.
    pub max_buffered_equations: Option<usize>,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        Self { fec: true, max_buffered_equations: None }
    }
}

/// What happened in one client slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    /// 1-based client slot `b`.
    pub client_slot: usize,
    pub absolute_slot: usize,
    pub packets_sent: usize,
    pub packets_received: usize,
    /// `λM·k` unknowns carried by the slot.
    pub unknowns_total: usize,
    /// Slot unknowns held after solving this slot's packets.
    pub unknowns_solved_in_slot: usize,
    /// Unknowns (of any slot) recovered by the FEC retry at the end of this slot.
    pub unknowns_solved_via_fec: usize,
    /// Packet positions of this slot whose every unknown was held after
    /// solving the slot's packets.
    pub sets_fully_decoded: usize,
    pub sets_total: usize,
    /// Share of segment `s_b` held at the end of slot `b`.
    pub deadline_met_fraction: f64,
    /// Size of the decoded store at the end of the slot.
    pub decoded_total: usize,
}

#[derive(Debug, Clone)]
pub struct DecoderState {
    config: SystemConfig,
    options: DecoderOptions,
    join_offset: usize,
    decoded: BTreeMap<Unknown, Vec<u8>>,
    fec_buffer: BTreeMap<(usize, u32), LinearSystem>,
    per_slot: Vec<SlotReport>,
}

impl DecoderState {
    pub fn new(config: &SystemConfig, join_offset: usize, options: DecoderOptions) -> Self {
        Self {
            config: config.clone(),
            options,
            join_offset,
            decoded: BTreeMap::new(),
            fec_buffer: BTreeMap::new(),
            per_slot: Vec::new(),
        }
    }

    pub fn join_offset(&self) -> usize {
        self.join_offset
    }

    pub fn options(&self) -> DecoderOptions {
        self.options
    }

    pub fn decoded(&self) -> &BTreeMap<Unknown, Vec<u8>> {
        &self.decoded
    }

    pub fn per_slot(&self) -> &[SlotReport] {
        &self.per_slot
    }

    pub fn fec_buffer(&self) -> &BTreeMap<(usize, u32), LinearSystem> {
        &self.fec_buffer
    }

    pub fn buffered_equations(&self) -> usize {
        self.fec_buffer.values().map(LinearSystem::equations).sum()
    }

    /// Absolute slot seen as client slot `b`.
    pub fn absolute_slot(&self, b: usize) -> usize {
        self.join_offset + b - 1
    }

    /// Hand a previously decoded value to the client (e.g. a segment cached
    /// from an earlier session).
    pub fn preload(&mut self, label: Unknown, payload: Vec<u8>) -> Result<()> {
        self.commit(label, payload)
    }

    fn commit(&mut self, label: Unknown, payload: Vec<u8>) -> Result<()> {
        match self.decoded.get(&label) {
            Some(existing) if *existing != payload => Err(Error::ConflictingKnown(label)),
            Some(_) => Ok(()),
            None => {
                self.decoded.insert(label, payload);
                Ok(())
            }
        }
    }

    // Substitute everything already decoded that `sys` references, then
    // eliminate. Returns the newly determined unknowns with their values.
    fn solve_with_knowns(&self, sys: &mut LinearSystem) -> Result<Vec<(Unknown, Vec<u8>)>> {
        for label in sys.referenced() {
            if let Some(value) = self.decoded.get(&label) {
                sys.substitute_known(label, value)?;
            }
        }
        let newly = sys.eliminate()?;
        Ok(newly.into_iter().map(|u| (u, sys.solved()[&u].clone())).collect())
    }

    /// Decode client slot `b` from the surviving packets. Slots must be fed
    /// in order starting at `b = 1`.
    pub fn ingest_slot(
        &mut self,
        b: usize,
        survivors: &[CodedPacket],
        plan: &CodingPlan,
        schedule: &Schedule,
    ) -> Result<&SlotReport> {
        let expected = self.per_slot.len() + 1;
        if b != expected {
            return Err(Error::InvalidArgument(format!("client slot {b} fed, expected {expected}")));
        }
        if b > self.config.n {
            return Err(Error::InvalidArgument(format!("client slot {b} beyond n = {}", self.config.n)));
        }
        let abs = self.absolute_slot(b);
        plan.check_against(abs, schedule)?;
        let k = self.config.k;

        let mut by_position: Vec<Vec<(usize, &CodedPacket)>> = vec![Vec::new(); k];
        for packet in survivors {
            let row = plan
                .row_index(packet.channel, packet.subchannel)
                .filter(|_| packet.slot as usize == abs && (packet.position as usize) < k)
                .ok_or_else(|| {
                    Error::PlanMismatch(format!(
                        "packet (slot {}, channel {}, subchannel {}, position {}) does not belong to slot {abs}",
                        packet.slot, packet.channel, packet.subchannel, packet.position
                    ))
                })?;
            by_position[packet.position as usize].push((row, packet));
        }

        let mut sets_fully_decoded = 0;
        let mut unknowns_solved_in_slot = 0;
        for (position, packets) in by_position.into_iter().enumerate() {
            let position = position as u32;
            let mut sys = LinearSystem::new(plan.unknowns(position), self.config.payload_bytes);
            for (row, packet) in packets {
                sys.push_equation(&plan.row_terms(row, position), packet.payload.clone())?;
            }
            for (label, value) in self.solve_with_knowns(&mut sys)? {
                self.commit(label, value)?;
            }
            let held = plan.unknowns(position).filter(|u| self.decoded.contains_key(u)).count();
            unknowns_solved_in_slot += held;
            if held == plan.column_labels.len() {
                sets_fully_decoded += 1;
            }
            if self.options.fec && !sys.is_empty() {
                self.fec_buffer.insert((abs, position), sys);
            }
        }

        let unknowns_solved_via_fec = if self.options.fec { self.fec_retry()? } else { 0 };
        self.enforce_cap();

        let report = SlotReport {
            client_slot: b,
            absolute_slot: abs,
            packets_sent: self.config.packets_per_slot(),
            packets_received: survivors.len(),
            unknowns_total: plan.column_labels.len() * k,
            unknowns_solved_in_slot,
            unknowns_solved_via_fec,
            sets_fully_decoded,
            sets_total: k,
            deadline_met_fraction: self.segment_fraction(b as u32),
            decoded_total: self.decoded.len(),
        };
        self.per_slot.push(report);
        Ok(self.per_slot.last().expect("just pushed"))
    }

    /// [`ingest_slot`](Self::ingest_slot) from a packet trace stream.
    pub fn ingest_trace<R: Read>(
        &mut self,
        b: usize,
        trace: R,
        plan: &CodingPlan,
        schedule: &Schedule,
    ) -> Result<&SlotReport> {
        let packets = read_trace(trace)?;
        self.ingest_slot(b, &packets, plan, schedule)
    }

    /// Retry every buffered residue with what is now decoded, until a pass
    /// solves nothing. Returns the number of unknowns recovered.
    pub fn fec_retry(&mut self) -> Result<usize> {
        let mut recovered = 0;
        loop {
            let mut progress = 0;
            let keys: Vec<(usize, u32)> = self.fec_buffer.keys().copied().collect();
            for key in keys {
                let mut sys = self.fec_buffer.remove(&key).expect("key listed");
                let referenced = sys.referenced();
                if referenced.iter().any(|u| self.decoded.contains_key(u)) {
                    for (label, value) in self.solve_with_knowns(&mut sys)? {
                        self.commit(label, value)?;
                        progress += 1;
                    }
                }
                if !sys.is_empty() {
                    self.fec_buffer.insert(key, sys);
                }
            }
            recovered += progress;
            if progress == 0 {
                return Ok(recovered);
            }
        }
    }

    fn enforce_cap(&mut self) {
        let Some(cap) = self.options.max_buffered_equations else {
            return;
        };
        while self.buffered_equations() > cap {
            let Some(oldest) = self.fec_buffer.keys().next().map(|&(slot, _)| slot) else {
                break;
            };
            self.fec_buffer.retain(|&(slot, _), _| slot != oldest);
        }
    }

    fn segment_fraction(&self, segment: u32) -> f64 {
        let lambda = self.config.lambda as u32;
        let k = self.config.k as u32;
        let held = (1..=lambda)
            .flat_map(|sub| (0..k).map(move |p| Unknown::new(segment, sub, p)))
            .filter(|u| self.decoded.contains_key(u))
            .count();
        held as f64 / (lambda * k) as f64
    }

    /// Share of segment `s_b` held by the end of client slot `b`, its
    /// playback deadline. Later recoveries do not change it.
    pub fn playback_quality(&self, b: usize) -> Result<f64> {
        if b == 0 || b > self.config.n {
            return Err(Error::InvalidArgument(format!("client slot {b} outside 1..={}", self.config.n)));
        }
        self.per_slot
            .get(b - 1)
            .map(|r| r.deadline_met_fraction)
            .ok_or_else(|| Error::InvalidArgument(format!("client slot {b} not decoded yet")))
    }

    /// Segments held completely right now.
    pub fn complete_segments(&self) -> BTreeSet<u32> {
        let per_segment = self.config.lambda * self.config.k;
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for u in self.decoded.keys() {
            *counts.entry(u.segment).or_default() += 1;
        }
        counts.into_iter().filter(|&(_, c)| c == per_segment).map(|(s, _)| s).collect()
    }
}

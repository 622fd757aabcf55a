//! Server side: cut content into segments and subsegments, draw a coding
//! matrix per slot, and XOR subsegment packets into coded packets.

mod packet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::{xor_bytes, BitMatrix, Unknown};
use crate::harmonic::{Schedule, SystemConfig};

pub use packet::{read_trace, write_trace, CodedPacket, PACKET_HEADER_LEN};

/// Redraw budget for one coding-matrix block.
pub const MAX_REDRAWS: usize = 1000;

const PLAN_DOMAIN: u64 = 0x706c_616e_5f63_6f65;
const ORDER_DOMAIN: u64 = 0x6f72_6465_725f_7478;

/// SplitMix64 finaliser; decorrelates the user seed from each RNG domain.
pub(crate) fn mix(seed: u64, domain: u64) -> u64 {
    let mut z = seed ^ domain;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based stream: `(seed, domain)` picks the key, `counter` the stream.
pub(crate) fn stream_rng(seed: u64, domain: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, domain));
    rng.set_stream(counter);
    rng
}

/// One content segment split into `λ` subsegments of `k` packets each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub index: u32,
    pub subsegments: Vec<Vec<u8>>,
    payload_bytes: usize,
}

impl Segment {
    /// Packet `position` of subsegment `subsegment` (1-based).
    pub fn packet(&self, subsegment: u32, position: u32) -> &[u8] {
        let start = position as usize * self.payload_bytes;
        &self.subsegments[subsegment as usize - 1][start..start + self.payload_bytes]
    }

    pub fn payload(&self, unknown: &Unknown) -> &[u8] {
        debug_assert_eq!(unknown.segment, self.index);
        self.packet(unknown.subsegment, unknown.position)
    }
}

/// Segments plus the unpadded content length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedContent {
    pub segments: Vec<Segment>,
    pub original_len: usize,
}

impl SegmentedContent {
    pub fn segment(&self, index: u32) -> &Segment {
        &self.segments[index as usize - 1]
    }

    /// Concatenate and drop the padding.
    pub fn reassemble(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.segments.iter().flat_map(|s| s.subsegments.iter().flatten().copied()).collect();
        out.truncate(self.original_len);
        out
    }
}

/// Split content into `n` segments of `λ·k·payload_bytes` bytes, padding
/// the tail with zero bytes.
pub fn segment_content(content: &[u8], config: &SystemConfig) -> Result<SegmentedContent> {
    if content.is_empty() {
        return Err(Error::EmptyContent);
    }
    let seg_bytes = config.segment_bytes();
    let sub_bytes = config.k * config.payload_bytes;
    let capacity = config.n * seg_bytes;
    if content.len() > capacity {
        return Err(Error::InvalidArgument(format!(
            "content of {} bytes exceeds the {capacity} bytes of {} segments",
            content.len(),
            config.n
        )));
    }
    let mut padded = content.to_vec();
    padded.resize(capacity, 0);
    let segments = padded
        .chunks_exact(seg_bytes)
        .enumerate()
        .map(|(i, seg)| Segment {
            index: i as u32 + 1,
            subsegments: seg.chunks_exact(sub_bytes).map(<[u8]>::to_vec).collect(),
            payload_bytes: config.payload_bytes,
        })
        .collect();
    Ok(SegmentedContent { segments, original_len: content.len() })
}

/// Pseudo-random content of exactly `n` segments, for simulation.
pub fn synthetic_content(config: &SystemConfig) -> Vec<u8> {
    let mut rng = stream_rng(config.seed, 0x636f_6e74_656e_7421, 0);
    let mut bytes = vec![0u8; config.n * config.segment_bytes()];
    rng.fill(bytes.as_mut_slice());
    bytes
}

/// Coding matrix for one slot: `λ(M+R)` rows (channel-major, then
/// subchannel) by `λM` columns (scheduled segments ascending, then
/// subsegment).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingPlan {
    pub slot: usize,
    pub matrix: BitMatrix,
    /// `(segment, subsegment)` per column.
    pub column_labels: Vec<(u32, u32)>,
    /// `(channel, subchannel)` per row, both 1-based.
    pub row_labels: Vec<(u16, u16)>,
    pub lambda: usize,
}

impl CodingPlan {
    /// Wrap a hand-built matrix. Shape must be `λ·channels × λ·|scheduled|`.
    pub fn from_matrix(
        slot: usize,
        scheduled: &[u32],
        lambda: usize,
        channels: usize,
        matrix: BitMatrix,
    ) -> Result<Self> {
        let (column_labels, row_labels) = labels(scheduled, lambda, channels);
        if matrix.rows() != row_labels.len() || matrix.cols() != column_labels.len() {
            return Err(Error::PlanMismatch(format!(
                "matrix is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                row_labels.len(),
                column_labels.len()
            )));
        }
        Ok(Self { slot, matrix, column_labels, row_labels, lambda })
    }

    /// Scheduled segments, ascending.
    pub fn segments(&self) -> Vec<u32> {
        let mut segs: Vec<u32> = self.column_labels.iter().map(|&(s, _)| s).collect();
        segs.dedup();
        segs
    }

    pub fn row_index(&self, channel: u16, subchannel: u16) -> Option<usize> {
        let lambda = self.lambda;
        let (c, s) = (channel as usize, subchannel as usize);
        if c == 0 || s == 0 || s > lambda {
            return None;
        }
        let row = (c - 1) * lambda + (s - 1);
        (row < self.row_labels.len()).then_some(row)
    }

    /// Unknowns XORed into `row` at packet `position`.
    pub fn row_terms(&self, row: usize, position: u32) -> Vec<Unknown> {
        self.matrix
            .row_ones(row)
            .map(|c| {
                let (segment, subsegment) = self.column_labels[c];
                Unknown { segment, subsegment, position }
            })
            .collect()
    }

    /// All unknowns of this slot at packet `position`.
    pub fn unknowns(&self, position: u32) -> impl Iterator<Item = Unknown> + '_ {
        self.column_labels.iter().map(move |&(segment, subsegment)| Unknown { segment, subsegment, position })
    }

    /// Check the plan covers exactly the segments `schedule` sends in `slot`.
    pub fn check_against(&self, slot: usize, schedule: &Schedule) -> Result<()> {
        if self.slot != slot {
            return Err(Error::PlanMismatch(format!("plan for slot {} used in slot {slot}", self.slot)));
        }
        let Some(expected) = schedule.slots.get(slot) else {
            return Err(Error::PlanMismatch(format!("slot {slot} beyond schedule horizon")));
        };
        if self.segments() != *expected {
            return Err(Error::PlanMismatch(format!(
                "plan covers segments {:?}, schedule sends {:?}",
                self.segments(),
                expected
            )));
        }
        Ok(())
    }
}

type Labels = (Vec<(u32, u32)>, Vec<(u16, u16)>);

fn labels(scheduled: &[u32], lambda: usize, channels: usize) -> Labels {
    let mut segs = scheduled.to_vec();
    segs.sort_unstable();
    let columns = segs.iter().flat_map(|&s| (1..=lambda as u32).map(move |x| (s, x))).collect();
    let rows = (1..=channels as u16).flat_map(|c| (1..=lambda as u16).map(move |mu| (c, mu))).collect();
    (columns, rows)
}

fn random_row(rng: &mut ChaCha8Rng, m: &mut BitMatrix, row: usize, cols: usize) {
    let words = m.row_words_mut(row);
    for w in words.iter_mut() {
        *w = rng.gen();
    }
    if !cols.is_multiple_of(64) {
        let last = words.len() - 1;
        words[last] &= (1u64 << (cols % 64)) - 1;
    }
}

/// Coding matrix for `slot`, regenerated identically by server and client
/// from `(config.seed, slot)`.
///
/// Content rows are uniform random bits, redrawn as a block until the
/// `λM × λM` content part is invertible (identity when
/// `config.systematic`). Each redundancy row is uniform random, redrawn
/// while all-zero or equal to an earlier row; duplicates are tolerated only
/// when every nonzero row is already taken.
pub fn gen_coding_plan(slot: usize, scheduled: &[u32], config: &SystemConfig) -> Result<CodingPlan> {
    if scheduled.len() != config.m {
        return Err(Error::PlanMismatch(format!("{} scheduled segments for M = {}", scheduled.len(), config.m)));
    }
    let lambda = config.lambda;
    let content = lambda * config.m;
    let total = lambda * config.channels();
    let mut rng = stream_rng(config.seed, PLAN_DOMAIN, slot as u64);

    let mut block = BitMatrix::zeros(content, content);
    if config.systematic {
        block = BitMatrix::identity(content);
    } else {
        let mut attempts = 0;
        loop {
            for r in 0..content {
                random_row(&mut rng, &mut block, r, content);
            }
            if block.rank() == content {
                break;
            }
            attempts += 1;
            if attempts >= MAX_REDRAWS {
                return Err(Error::GenerationExhausted(MAX_REDRAWS));
            }
        }
    }

    let mut matrix = BitMatrix::zeros(total, content);
    for r in 0..content {
        matrix.row_words_mut(r).copy_from_slice(block.row_words(r));
    }
    let distinct_rows = if content >= 63 { usize::MAX } else { (1usize << content) - 1 };
    for r in content..total {
        let mut attempts = 0;
        loop {
            random_row(&mut rng, &mut matrix, r, content);
            let dup = r < distinct_rows && (0..r).any(|prev| matrix.rows_equal(prev, r));
            if !matrix.is_row_zero(r) && !dup {
                break;
            }
            attempts += 1;
            if attempts >= MAX_REDRAWS {
                return Err(Error::GenerationExhausted(MAX_REDRAWS));
            }
        }
    }
    CodingPlan::from_matrix(slot, scheduled, lambda, config.channels(), matrix)
}

/// Encode slot `slot` into `λ(M+R)·k` coded packets, returned in a seeded
/// uniform random transmission order.
pub fn encode_slot(
    slot: usize,
    schedule: &Schedule,
    content: &SegmentedContent,
    plan: &CodingPlan,
    config: &SystemConfig,
) -> Result<Vec<CodedPacket>> {
    plan.check_against(slot, schedule)?;
    if plan.row_labels.len() != config.lambda * config.channels() {
        return Err(Error::PlanMismatch("plan row count disagrees with config".into()));
    }
    let mut packets = Vec::with_capacity(config.packets_per_slot());
    for (row, &(channel, subchannel)) in plan.row_labels.iter().enumerate() {
        for position in 0..config.k as u32 {
            let mut payload = vec![0u8; config.payload_bytes];
            for unknown in plan.row_terms(row, position) {
                xor_bytes(&mut payload, content.segment(unknown.segment).payload(&unknown));
            }
            packets.push(CodedPacket { slot: slot as u32, channel, subchannel, position, payload });
        }
    }
    let mut rng = stream_rng(config.seed, ORDER_DOMAIN, slot as u64);
    packets.shuffle(&mut rng);
    Ok(packets)
}

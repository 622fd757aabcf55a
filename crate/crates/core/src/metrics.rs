//! Seeded experiments: full server → channel → client runs over many
//! clients, parameter sweeps, the analytic curves they are compared with,
//! and CSV output with fixed six-decimal formatting.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_loss, LossModel};
use crate::coding::{encode_slot, gen_coding_plan, mix, segment_content, synthetic_content, CodedPacket, CodingPlan};
use crate::decoder::{DecoderOptions, DecoderState, SlotReport};
use crate::error::{Error, Result};
use crate::harmonic::{
    admissible_loss, asymptotic_success, build_schedule, first_slot_success_prob, harmonic_number, initial_delay,
    max_segments, redundancy_equivalent_slot, Schedule, SystemConfig,
};

const CLIENT_DOMAIN: u64 = 0x636c_6965_6e74_5f73;

/// One point of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub config: SystemConfig,
    pub loss_model: LossModel,
    pub clients: usize,
    pub decoder: DecoderOptions,
}

impl RunSpec {
    pub fn new(config: SystemConfig, loss_model: LossModel, clients: usize) -> Self {
        Self { config, loss_model, clients, decoder: DecoderOptions::default() }
    }
}

/// Client-averaged view of one client slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSummary {
    pub client_slot: usize,
    /// Mean share of `s_b` held by its deadline.
    pub deadline_mean: f64,
    pub deadline_std: f64,
    /// Mean share of the slot's unknowns held after solving the slot.
    pub decoded_fraction: f64,
    /// Mean share of packet positions fully decoded within the slot.
    pub set_success: f64,
    pub received_fraction: f64,
    pub fec_recovered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientOutcome {
    pub join_offset: usize,
    pub per_slot: Vec<SlotReport>,
    /// First `b` from which every deadline fraction is 1.0.
    pub slots_to_full_recovery: Option<usize>,
    /// Decoded unknowns at the end over `n·λ·k`.
    pub final_decoded_fraction: f64,
    /// Sum over slots of the decoded-store size at the end of each slot.
    pub cumulative_recovery: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub overall_decoded_fraction: f64,
    pub by_deadline_fraction: f64,
    /// From the client-averaged curve.
    pub slots_to_full_recovery: Option<usize>,
    pub clients_fully_recovered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub spec: RunSpec,
    pub per_slot: Vec<SlotSummary>,
    pub aggregate: Aggregate,
    pub clients: Vec<ClientOutcome>,
}

/// Server-side artefacts shared by every client of a run.
pub struct Broadcast {
    pub config: SystemConfig,
    pub schedule: Schedule,
    pub plans: Vec<CodingPlan>,
    pub packets: Vec<Vec<CodedPacket>>,
    pub content: crate::coding::SegmentedContent,
}

impl Broadcast {
    /// Schedule, plans and coded packets for the `2n` slots that clients
    /// joining at offsets `0..n` can see.
    pub fn prepare(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        let horizon = 2 * config.n;
        let schedule = build_schedule(config, horizon)?;
        let content = segment_content(&synthetic_content(config), config)?;
        let plans: Vec<CodingPlan> = (0..horizon)
            .into_par_iter()
            .map(|t| gen_coding_plan(t, schedule.segments_at(t), config))
            .collect::<Result<_>>()?;
        let packets = plans
            .par_iter()
            .enumerate()
            .map(|(t, plan)| encode_slot(t, &schedule, &content, plan, config))
            .collect::<Result<_>>()?;
        Ok(Self { config: config.clone(), schedule, plans, packets, content })
    }

    /// Run one client joining at `join_offset`, losing packets under
    /// `model` with the client's own seed.
    pub fn run_client(
        &self,
        client_seed: u64,
        join_offset: usize,
        model: &LossModel,
        options: DecoderOptions,
    ) -> Result<DecoderState> {
        let mut state = DecoderState::new(&self.config, join_offset, options);
        for b in 1..=self.config.n {
            let abs = state.absolute_slot(b);
            let survivors = apply_loss(self.packets[abs].clone(), model, client_seed, abs as u64)?;
            state.ingest_slot(b, &survivors, &self.plans[abs], &self.schedule)?;
        }
        for (u, v) in state.decoded() {
            if v.as_slice() != self.content.segment(u.segment).payload(u) {
                return Err(Error::ConflictingKnown(*u));
            }
        }
        Ok(state)
    }
}

/// Join offset of client `c` out of `clients`, spread evenly over `0..n`.
pub fn join_offset(c: usize, clients: usize, n: usize) -> usize {
    c * n / clients
}

/// Loss seed of client `c` under run seed `seed`.
pub fn client_seed(seed: u64, c: usize) -> u64 {
    mix(seed ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15), CLIENT_DOMAIN)
}

fn full_recovery(per_slot: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator) -> Option<usize> {
    let len = per_slot.len();
    let tail_ones = per_slot.rev().take_while(|&f| f == 1.0).count();
    (tail_ones > 0).then_some(len - tail_ones + 1)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Run every client of `spec` through the full pipeline and aggregate.
pub fn run_simulation(spec: &RunSpec) -> Result<RunReport> {
    if spec.clients == 0 {
        return Err(Error::InvalidConfig("clients must be at least 1".into()));
    }
    spec.loss_model.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let broadcast = Broadcast::prepare(&spec.config)?;
    let n = spec.config.n;
    let per_segment = (spec.config.lambda * spec.config.k) as f64;

    let clients: Vec<ClientOutcome> = (0..spec.clients)
        .into_par_iter()
        .map(|c| {
            let offset = join_offset(c, spec.clients, n);
            let state =
                broadcast.run_client(client_seed(spec.config.seed, c), offset, &spec.loss_model, spec.decoder)?;
            let per_slot = state.per_slot().to_vec();
            Ok(ClientOutcome {
                join_offset: offset,
                slots_to_full_recovery: full_recovery(per_slot.iter().map(|r| r.deadline_met_fraction)),
                final_decoded_fraction: state.decoded().len() as f64 / (n as f64 * per_segment),
                cumulative_recovery: per_slot.iter().map(|r| r.decoded_total).sum(),
                per_slot,
            })
        })
        .collect::<Result<_>>()?;

    let per_slot: Vec<SlotSummary> = (0..n)
        .map(|i| {
            let col =
                |f: &dyn Fn(&SlotReport) -> f64| -> Vec<f64> { clients.iter().map(|c| f(&c.per_slot[i])).collect() };
            let (deadline_mean, deadline_std) = mean_std(&col(&|r| r.deadline_met_fraction));
            SlotSummary {
                client_slot: i + 1,
                deadline_mean,
                deadline_std,
                decoded_fraction: mean_std(&col(&|r| r.unknowns_solved_in_slot as f64 / r.unknowns_total as f64)).0,
                set_success: mean_std(&col(&|r| r.sets_fully_decoded as f64 / r.sets_total as f64)).0,
                received_fraction: mean_std(&col(&|r| r.packets_received as f64 / r.packets_sent as f64)).0,
                fec_recovered: mean_std(&col(&|r| r.unknowns_solved_via_fec as f64)).0,
            }
        })
        .collect();

    let aggregate = Aggregate {
        overall_decoded_fraction: mean_std(&clients.iter().map(|c| c.final_decoded_fraction).collect::<Vec<_>>()).0,
        by_deadline_fraction: mean_std(&per_slot.iter().map(|s| s.deadline_mean).collect::<Vec<_>>()).0,
        slots_to_full_recovery: full_recovery(per_slot.iter().map(|s| s.deadline_mean)),
        clients_fully_recovered: clients.iter().filter(|c| c.slots_to_full_recovery.is_some()).count(),
    };
    Ok(RunReport { spec: spec.clone(), per_slot, aggregate, clients })
}

/// Independent runs in grid order; a failing point does not stop the rest.
pub fn sweep(grid: &[RunSpec]) -> Vec<Result<RunReport>> {
    grid.par_iter().map(run_simulation).collect()
}

/// Measured curve next to the closed-form quantities for the same setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub client_slot: usize,
    pub measured_deadline: f64,
    pub measured_decoded: f64,
    pub measured_set_success: f64,
    pub admissible_loss: f64,
    /// Only for `b = 1`.
    pub first_slot_success: Option<f64>,
    pub asymptotic_success: f64,
}

pub fn theory_overlay(report: &RunReport) -> Result<Vec<OverlayRow>> {
    let c = &report.spec.config;
    let p_e = report.spec.loss_model.mean_loss()?;
    let limit = asymptotic_success(c.m, c.r, p_e)?.value();
    report
        .per_slot
        .iter()
        .map(|s| {
            Ok(OverlayRow {
                client_slot: s.client_slot,
                measured_deadline: s.deadline_mean,
                measured_decoded: s.decoded_fraction,
                measured_set_success: s.set_success,
                admissible_loss: admissible_loss(c.n, s.client_slot, c.r, c.lambda)?,
                first_slot_success: if s.client_slot == 1 {
                    Some(first_slot_success_prob(c.m, c.r, c.lambda, p_e)?)
                } else {
                    None
                },
                asymptotic_success: limit,
            })
        })
        .collect()
}

/// `(b, admissible loss)` for `b = 1..=n`, `n = max_segments(M)`.
pub fn admissible_curve(m: usize, r: usize) -> Result<Vec<(usize, f64)>> {
    let n = max_segments(m)?;
    (1..=n).map(|b| Ok((b, admissible_loss(n, b, r, 1)?))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub b: usize,
    pub plain: f64,
    pub b_equivalent: usize,
    pub redundant: f64,
}

impl ConvergenceRow {
    pub fn gap(&self) -> f64 {
        (self.plain - self.redundant).abs()
    }
}

/// Admissible loss of an `I`-channel scheme without redundancy against the
/// same `I` channels with `R` of them redundant, slot `b` paired with
/// `b' ≈ 1 + (b − 1)/e^R`.
pub fn redundancy_convergence(channels: usize, r: usize) -> Result<Vec<ConvergenceRow>> {
    if channels <= r {
        return Err(Error::InvalidArgument(format!("I = {channels} must exceed R = {r}")));
    }
    let n_plain = max_segments(channels)?;
    let n_red = max_segments(channels - r)?;
    (1..=n_plain)
        .map(|b| {
            let b_equivalent = redundancy_equivalent_slot(b, r).min(n_red);
            Ok(ConvergenceRow {
                b,
                plain: admissible_loss(n_plain, b, 0, 1)?,
                b_equivalent,
                redundant: admissible_loss(n_red, b_equivalent, r, 1)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayRow {
    pub r: usize,
    pub segments: usize,
    pub admissible_first_slot: f64,
    pub delay_seconds: f64,
}

/// Startup delay against first-slot protection for `R = 0..=max_r` out of
/// `I` channels.
pub fn delay_table(content_duration: f64, channels: usize, max_r: usize) -> Result<Vec<DelayRow>> {
    (0..=max_r.min(channels.saturating_sub(1)))
        .map(|r| {
            let segments = max_segments(channels - r)?;
            Ok(DelayRow {
                r,
                segments,
                admissible_first_slot: r as f64 / (harmonic_number(segments)? + r as f64),
                delay_seconds: initial_delay(content_duration, channels, r)?,
            })
        })
        .collect()
}

/// First-slot success probability for each `p_e` and `λ = 1..=lambda_max`.
pub fn success_curve(m: usize, r: usize, losses: &[f64], lambda_max: usize) -> Result<Vec<(f64, usize, f64)>> {
    let mut rows = Vec::with_capacity(losses.len() * lambda_max);
    for &p in losses {
        for lambda in 1..=lambda_max {
            rows.push((p, lambda, first_slot_success_prob(m, r, lambda, p)?));
        }
    }
    Ok(rows)
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv output: {e}"))
}

/// Tabular sink shared by every CSV writer.
pub struct Table<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> Table<W> {
    pub fn new(out: W, header: &[&str]) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(header).map_err(csv_err)?;
        Ok(Self { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))
    }
}

fn model_columns(model: &LossModel) -> [String; 2] {
    match model {
        LossModel::Uniform { p_e } => ["uniform".into(), f6(*p_e)],
        LossModel::Burst { .. } => ["burst".into(), f6(model.mean_loss().unwrap_or(f64::NAN))],
    }
}

/// Per-slot measured and analytic columns for every report of a family.
pub fn write_slot_csv<W: Write>(out: W, reports: &[RunReport]) -> Result<()> {
    let mut t = Table::new(
        out,
        &[
            "M",
            "R",
            "lambda",
            "n",
            "k",
            "loss",
            "p_e",
            "fec",
            "clients",
            "b",
            "deadline_mean",
            "deadline_std",
            "decoded_fraction",
            "set_success",
            "received_fraction",
            "admissible_loss",
            "first_slot_success",
        ],
    )?;
    for report in reports {
        let c = &report.spec.config;
        let [loss, p_e] = model_columns(&report.spec.loss_model);
        for row in theory_overlay(report)?.iter().zip(&report.per_slot) {
            let (overlay, slot) = row;
            t.row([
                c.m.to_string(),
                c.r.to_string(),
                c.lambda.to_string(),
                c.n.to_string(),
                c.k.to_string(),
                loss.clone(),
                p_e.clone(),
                if report.spec.decoder.fec { "on" } else { "off" }.to_string(),
                report.spec.clients.to_string(),
                slot.client_slot.to_string(),
                f6(slot.deadline_mean),
                f6(slot.deadline_std),
                f6(slot.decoded_fraction),
                f6(slot.set_success),
                f6(slot.received_fraction),
                f6(overlay.admissible_loss),
                overlay.first_slot_success.map(f6).unwrap_or_default(),
            ])?;
        }
    }
    t.finish()
}

/// One summary row per report.
pub fn write_summary_csv<W: Write>(out: W, reports: &[RunReport]) -> Result<()> {
    let mut t = Table::new(
        out,
        &[
            "M",
            "R",
            "lambda",
            "n",
            "loss",
            "p_e",
            "fec",
            "clients",
            "overall_decoded",
            "by_deadline",
            "slots_to_full_recovery",
            "clients_fully_recovered",
        ],
    )?;
    for report in reports {
        let c = &report.spec.config;
        let [loss, p_e] = model_columns(&report.spec.loss_model);
        let a = &report.aggregate;
        t.row([
            c.m.to_string(),
            c.r.to_string(),
            c.lambda.to_string(),
            c.n.to_string(),
            loss,
            p_e,
            if report.spec.decoder.fec { "on" } else { "off" }.to_string(),
            report.spec.clients.to_string(),
            f6(a.overall_decoded_fraction),
            f6(a.by_deadline_fraction),
            a.slots_to_full_recovery.map(|b| b.to_string()).unwrap_or_default(),
            a.clients_fully_recovered.to_string(),
        ])?;
    }
    t.finish()
}

/// `(M, R, curve)` as returned by [`admissible_curve`].
pub type AdmissibleCurve = (usize, usize, Vec<(usize, f64)>);

pub fn write_admissible_csv<W: Write>(out: W, curves: &[AdmissibleCurve]) -> Result<()> {
    let mut t = Table::new(out, &["M", "R", "b", "admissible_loss"])?;
    for (m, r, curve) in curves {
        for &(b, p) in curve {
            t.row([m.to_string(), r.to_string(), b.to_string(), f6(p)])?;
        }
    }
    t.finish()
}

pub fn write_convergence_csv<W: Write>(out: W, channels: usize, r: usize, rows: &[ConvergenceRow]) -> Result<()> {
    let mut t = Table::new(out, &["I", "R", "b", "plain", "b_equivalent", "redundant", "gap"])?;
    for row in rows {
        t.row([
            channels.to_string(),
            r.to_string(),
            row.b.to_string(),
            f6(row.plain),
            row.b_equivalent.to_string(),
            f6(row.redundant),
            f6(row.gap()),
        ])?;
    }
    t.finish()
}

pub fn write_delay_csv<W: Write>(out: W, channels: usize, duration: f64, rows: &[DelayRow]) -> Result<()> {
    let mut t = Table::new(out, &["I", "R", "duration_s", "segments", "admissible_first_slot", "delay_s"])?;
    for row in rows {
        t.row([
            channels.to_string(),
            row.r.to_string(),
            f6(duration),
            row.segments.to_string(),
            f6(row.admissible_first_slot),
            f6(row.delay_seconds),
        ])?;
    }
    t.finish()
}

pub fn write_success_csv<W: Write>(out: W, m: usize, r: usize, rows: &[(f64, usize, f64)]) -> Result<()> {
    let mut t = Table::new(out, &["M", "R", "p_e", "lambda", "success", "limit"])?;
    for &(p, lambda, s) in rows {
        let limit = asymptotic_success(m, r, p)?.value();
        t.row([m.to_string(), r.to_string(), f6(p), lambda.to_string(), f6(s), f6(limit)])?;
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(lambda: usize, seed: u64) -> SystemConfig {
        SystemConfig { n: 12, m: 4, r: 1, lambda, k: 4, payload_bytes: 4, seed, ..SystemConfig::default() }
    }

    #[test]
    fn lossless_run_meets_every_deadline() {
        let report = run_simulation(&RunSpec::new(small(2, 3), LossModel::uniform(0.0), 3)).unwrap();
        assert_eq!(report.aggregate.by_deadline_fraction, 1.0);
        assert_eq!(report.aggregate.overall_decoded_fraction, 1.0);
        assert_eq!(report.aggregate.slots_to_full_recovery, Some(1));
        assert_eq!(report.per_slot.len(), 12);
        let offsets: Vec<usize> = report.clients.iter().map(|c| c.join_offset).collect();
        assert_eq!(offsets, vec![0, 4, 8]);
    }

    #[test]
    fn runs_are_deterministic() {
        let spec = RunSpec::new(small(2, 17), LossModel::uniform(0.2), 4);
        let a = run_simulation(&spec).unwrap();
        let b = run_simulation(&spec).unwrap();
        assert_eq!(a, b);
        let mut x = Vec::new();
        let mut y = Vec::new();
        write_slot_csv(&mut x, &[a]).unwrap();
        write_slot_csv(&mut y, &[b]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn sweep_keeps_order_and_records_errors() {
        let bad = SystemConfig { n: 2, ..small(1, 1) };
        let grid = vec![
            RunSpec::new(small(1, 1), LossModel::uniform(0.1), 1),
            RunSpec::new(bad, LossModel::uniform(0.1), 1),
            RunSpec::new(small(2, 1), LossModel::uniform(0.1), 1),
        ];
        let out = sweep(&grid);
        assert_eq!(out.len(), 3);
        assert!(out[1].is_err());
        assert_eq!(out[2].as_ref().unwrap().spec.config.lambda, 2);
        assert_eq!(sweep(&grid[..1]).len(), 1);
    }

    #[test]
    fn overlay_columns() {
        let config = SystemConfig { n: 16, m: 8, r: 0, lambda: 1, k: 2, payload_bytes: 1, ..SystemConfig::default() };
        let report = run_simulation(&RunSpec::new(config, LossModel::uniform(0.05), 1)).unwrap();
        let rows = theory_overlay(&report).unwrap();
        assert_eq!(rows[0].admissible_loss, 0.0);
        assert!(rows[0].first_slot_success.is_some());
        assert!(rows[1].first_slot_success.is_none());
        assert!(rows.windows(2).all(|w| w[1].admissible_loss > w[0].admissible_loss));
    }

    #[test]
    fn admissible_curve_shapes() {
        let plain = admissible_curve(8, 0).unwrap();
        assert_eq!(plain.len(), 1673);
        assert_eq!(plain[0].1, 0.0);
        let red = admissible_curve(7, 1).unwrap();
        assert!((red[0].1 - 0.125).abs() < 1e-3);
    }

    #[test]
    fn convergence_for_slots_past_ten() {
        let rows = redundancy_convergence(8, 1).unwrap();
        let worst = rows.iter().filter(|r| r.b >= 10).map(ConvergenceRow::gap).fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
    }

    #[test]
    fn delay_rows() {
        let rows = delay_table(7200.0, 8, 2).unwrap();
        let bounds = [5.0, 13.0, 32.0];
        assert_eq!(rows.len(), 3);
        for (row, bound) in rows.iter().zip(bounds) {
            assert!(row.delay_seconds < bound);
        }
        assert!((rows[2].admissible_first_slot - 0.25).abs() < 0.01);
    }

    #[test]
    fn full_recovery_index() {
        assert_eq!(full_recovery([0.5, 1.0, 0.9, 1.0, 1.0].into_iter()), Some(4));
        assert_eq!(full_recovery([1.0, 1.0].into_iter()), Some(1));
        assert_eq!(full_recovery([1.0, 0.5].into_iter()), None);
    }
}

//! Lossy delivery: independent (Bernoulli) losses or a two-state
//! Gilbert–Elliott burst chain stepped once per transmitted packet.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coding::stream_rng;
use crate::error::{Error, Result};

const LOSS_DOMAIN: u64 = 0x6c6f_7373_5f63_6861;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossModel {
    Uniform { p_e: f64 },
    Burst { p_good_to_bad: f64, p_bad_to_good: f64, loss_good: f64, loss_bad: f64 },
}

impl LossModel {
    pub fn uniform(p_e: f64) -> Self {
        LossModel::Uniform { p_e }
    }

    /// Burst chain that drops everything in the bad state and nothing in the
    /// good state, with mean bad-run length `mean_burst` packets and
    /// stationary loss `mean_loss`.
    pub fn gilbert(mean_loss: f64, mean_burst: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mean_loss) || mean_burst.is_nan() || mean_burst < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= mean loss < 1 and mean burst >= 1, got {mean_loss}, {mean_burst}"
            )));
        }
        let p_bad_to_good = 1.0 / mean_burst;
        // π_bad = p_gb / (p_gb + p_bg)
        let p_good_to_bad = mean_loss * p_bad_to_good / (1.0 - mean_loss);
        let model = LossModel::Burst { p_good_to_bad, p_bad_to_good, loss_good: 0.0, loss_bad: 1.0 };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let probs: &[f64] = match self {
            LossModel::Uniform { p_e } => &[*p_e],
            LossModel::Burst { p_good_to_bad, p_bad_to_good, loss_good, loss_bad } => {
                &[*p_good_to_bad, *p_bad_to_good, *loss_good, *loss_bad]
            }
        };
        match probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            Some(p) => Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]"))),
            None => Ok(()),
        }
    }

    /// Long-run fraction of packets lost.
    pub fn mean_loss(&self) -> Result<f64> {
        match self {
            LossModel::Uniform { p_e } => Ok(*p_e),
            LossModel::Burst { .. } => stationary_loss(self),
        }
    }
}

/// `π_good·loss_good + π_bad·loss_bad` for a burst chain (and `p_e` for the
/// uniform model).
pub fn stationary_loss(model: &LossModel) -> Result<f64> {
    match *model {
        LossModel::Uniform { p_e } => Ok(p_e),
        LossModel::Burst { p_good_to_bad, p_bad_to_good, loss_good, loss_bad } => {
            let total = p_good_to_bad + p_bad_to_good;
            if total == 0.0 {
                return Err(Error::DegenerateChain);
            }
            let pi_bad = p_good_to_bad / total;
            Ok((1.0 - pi_bad) * loss_good + pi_bad * loss_bad)
        }
    }
}

/// Drop packets according to `model`, keeping survivors in order.
///
/// `stream` selects an independent random stream under `seed` (the
/// simulator uses one per client and slot). The burst chain starts from its
/// stationary distribution.
pub fn apply_loss<T>(packets: Vec<T>, model: &LossModel, seed: u64, stream: u64) -> Result<Vec<T>> {
    model.validate()?;
    let mut rng = stream_rng(seed, LOSS_DOMAIN, stream);
    match *model {
        LossModel::Uniform { p_e } => Ok(packets.into_iter().filter(|_| !rng.gen_bool(p_e)).collect()),
        LossModel::Burst { p_good_to_bad, p_bad_to_good, loss_good, loss_bad } => {
            let total = p_good_to_bad + p_bad_to_good;
            let pi_bad = if total == 0.0 { 0.0 } else { p_good_to_bad / total };
            let mut bad = rng.gen_bool(pi_bad);
            let mut out = Vec::with_capacity(packets.len());
            for p in packets {
                let loss = if bad { loss_bad } else { loss_good };
                if !rng.gen_bool(loss) {
                    out.push(p);
                }
                let flip = if bad { p_bad_to_good } else { p_good_to_bad };
                if rng.gen_bool(flip) {
                    bad = !bad;
                }
            }
            Ok(out)
        }
    }
}

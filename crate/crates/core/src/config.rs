//! Run files and figure presets.
//!
//! A run file is flat `key = value` text; `#` starts a comment. `lambda`
//! and `p_e` accept comma-separated lists, and the run is the grid over
//! both (λ outermost). Unknown and repeated keys are rejected.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `name` | output file prefix | `run` |
//! | `n`, `M`, `R` | segments, content channels, redundancy channels | 32, 7, 1 |
//! | `lambda` | subchannels per channel (list) | 4 |
//! | `k`, `payload_bytes` | packets per subsegment, bytes per packet | 16, 8 |
//! | `content_rate`, `content_duration` | bits/s, seconds | 2e6, 7200 |
//! | `seed` | master seed | 1 |
//! | `loss` | `uniform` or `burst` | `uniform` |
//! | `p_e` | loss probability (list); mean loss for `burst` with `mean_burst` | 0.1 |
//! | `mean_burst` | burst length in packets, `burst` only | |
//! | `p_good_to_bad`, `p_bad_to_good`, `loss_good`, `loss_bad` | explicit chain, `burst` only | |
//! | `clients` | clients per grid point | 10 |
//! | `fec` | `on`, `off`, or `both` | `on` |
//! | `systematic` | `true` or `false` | `false` |
//! | `max_buffered_equations` | FEC buffer cap | unbounded |

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::channel::LossModel;
use crate::decoder::DecoderOptions;
use crate::error::{Error, Result};
use crate::harmonic::SystemConfig;
use crate::metrics::RunSpec;

const KEYS: &[&str] = &[
    "name",
    "n",
    "M",
    "R",
    "lambda",
    "k",
    "payload_bytes",
    "content_rate",
    "content_duration",
    "seed",
    "loss",
    "p_e",
    "mean_burst",
    "p_good_to_bad",
    "p_bad_to_good",
    "loss_good",
    "loss_bad",
    "clients",
    "fec",
    "systematic",
    "max_buffered_equations",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FecMode {
    On,
    Off,
    Both,
}

impl FecMode {
    fn flags(self) -> &'static [bool] {
        match self {
            FecMode::On => &[true],
            FecMode::Off => &[false],
            FecMode::Both => &[false, true],
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            FecMode::On => "on",
            FecMode::Off => "off",
            FecMode::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    /// One uniform model per `p_e`.
    Uniform {
        p_e: Vec<f64>,
    },
    /// A Gilbert–Elliott chain per `p_e` with the given burst length.
    Gilbert {
        p_e: Vec<f64>,
        mean_burst: f64,
    },
    Chain {
        p_good_to_bad: f64,
        p_bad_to_good: f64,
        loss_good: f64,
        loss_bad: f64,
    },
}

impl LossSpec {
    pub fn models(&self) -> Result<Vec<LossModel>> {
        match self {
            LossSpec::Uniform { p_e } => Ok(p_e.iter().map(|&p| LossModel::uniform(p)).collect()),
            LossSpec::Gilbert { p_e, mean_burst } => p_e.iter().map(|&p| LossModel::gilbert(p, *mean_burst)).collect(),
            &LossSpec::Chain { p_good_to_bad, p_bad_to_good, loss_good, loss_bad } => {
                Ok(vec![LossModel::Burst { p_good_to_bad, p_bad_to_good, loss_good, loss_bad }])
            }
        }
    }
}

/// Parsed run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    /// Everything but `lambda`, which comes from `lambdas`.
    pub system: SystemConfig,
    pub lambdas: Vec<usize>,
    pub loss: LossSpec,
    pub clients: usize,
    pub fec: FecMode,
    pub max_buffered_equations: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let system = SystemConfig::default();
        Self {
            name: "run".into(),
            lambdas: vec![system.lambda],
            system,
            loss: LossSpec::Uniform { p_e: vec![0.1] },
            clients: 10,
            fec: FecMode::On,
            max_buffered_equations: None,
        }
    }
}

fn invalid(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("line {line}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| invalid(line, format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse_num(line, key, v.trim())).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| invalid(line, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(invalid(line, format!("unknown key {key:?}")));
            }
            if value.is_empty() {
                return Err(invalid(line, format!("{key} has no value")));
            }
            if entries.insert(key, (line, value)).is_some() {
                return Err(invalid(line, format!("{key} given twice")));
            }
        }

        let mut cfg = RunConfig::default();
        let mut p_e = vec![0.1];
        let mut mean_burst = None;
        let mut chain = [None; 4];
        let mut loss_kind = "uniform";
        for (&key, &(line, value)) in &entries {
            let s = &mut cfg.system;
            match key {
                "name" => {
                    if !value.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                        return Err(invalid(line, "name may only use letters, digits, '_' and '-'"));
                    }
                    cfg.name = value.into();
                }
                "n" => s.n = parse_num(line, key, value)?,
                "M" => s.m = parse_num(line, key, value)?,
                "R" => s.r = parse_num(line, key, value)?,
                "lambda" => cfg.lambdas = parse_list(line, key, value)?,
                "k" => s.k = parse_num(line, key, value)?,
                "payload_bytes" => s.payload_bytes = parse_num(line, key, value)?,
                "content_rate" => s.content_rate = parse_num(line, key, value)?,
                "content_duration" => s.content_duration = parse_num(line, key, value)?,
                "seed" => s.seed = parse_num(line, key, value)?,
                "loss" => match value {
                    "uniform" | "burst" => loss_kind = value,
                    _ => return Err(invalid(line, format!("loss must be uniform or burst, got {value:?}"))),
                },
                "p_e" => p_e = parse_list(line, key, value)?,
                "mean_burst" => mean_burst = Some(parse_num(line, key, value)?),
                "p_good_to_bad" => chain[0] = Some(parse_num(line, key, value)?),
                "p_bad_to_good" => chain[1] = Some(parse_num(line, key, value)?),
                "loss_good" => chain[2] = Some(parse_num(line, key, value)?),
                "loss_bad" => chain[3] = Some(parse_num(line, key, value)?),
                "clients" => cfg.clients = parse_num(line, key, value)?,
                "fec" => {
                    cfg.fec = match value {
                        "on" => FecMode::On,
                        "off" => FecMode::Off,
                        "both" => FecMode::Both,
                        _ => return Err(invalid(line, format!("fec must be on, off or both, got {value:?}"))),
                    }
                }
                "systematic" => {
                    s.systematic = match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(invalid(line, format!("systematic must be true or false, got {value:?}"))),
                    }
                }
                "max_buffered_equations" => cfg.max_buffered_equations = Some(parse_num(line, key, value)?),
                _ => unreachable!("key list and match disagree"),
            }
        }

        let has_chain = chain.iter().any(Option::is_some);
        let line_of = |key: &str| entries.get(key).map_or(0, |e| e.0);
        cfg.loss = match loss_kind {
            "uniform" if has_chain || mean_burst.is_some() => {
                return Err(invalid(line_of("loss"), "burst parameters given with loss = uniform"))
            }
            "uniform" => LossSpec::Uniform { p_e },
            _ => match (mean_burst, chain) {
                (Some(_), _) if has_chain => {
                    return Err(invalid(line_of("mean_burst"), "give either mean_burst or the four chain parameters"))
                }
                (Some(mean_burst), _) => LossSpec::Gilbert { p_e, mean_burst },
                (None, [Some(a), Some(b), Some(c), Some(d)]) if !entries.contains_key("p_e") => {
                    LossSpec::Chain { p_good_to_bad: a, p_bad_to_good: b, loss_good: c, loss_bad: d }
                }
                (None, [Some(_), Some(_), Some(_), Some(_)]) => {
                    return Err(invalid(line_of("p_e"), "p_e does not apply to an explicit chain"))
                }
                _ => {
                    return Err(invalid(
                        line_of("loss"),
                        "burst loss needs mean_burst, or p_good_to_bad, p_bad_to_good, loss_good and loss_bad",
                    ))
                }
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema checks that do not depend on the schedule.
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.lambdas.contains(&0) {
            return Err(Error::InvalidConfig("lambda must list positive values".into()));
        }
        if self.clients == 0 {
            return Err(Error::InvalidConfig("clients must be at least 1".into()));
        }
        for model in self.loss.models().map_err(|e| Error::InvalidConfig(e.to_string()))? {
            model.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    /// Grid points in output order: λ, then loss model, then FEC off/on.
    pub fn grid(&self) -> Result<Vec<RunSpec>> {
        let models = self.loss.models()?;
        let mut grid = Vec::new();
        for &lambda in &self.lambdas {
            for model in &models {
                for &fec in self.fec.flags() {
                    grid.push(RunSpec {
                        config: SystemConfig { lambda, ..self.system.clone() },
                        loss_model: *model,
                        clients: self.clients,
                        decoder: DecoderOptions { fec, max_buffered_equations: self.max_buffered_equations },
                    });
                }
            }
        }
        Ok(grid)
    }

    /// Canonical run file; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let s = &self.system;
        let list = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("writing to a String");
        kv("name", self.name.clone());
        kv("n", s.n.to_string());
        kv("M", s.m.to_string());
        kv("R", s.r.to_string());
        kv("lambda", self.lambdas.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
        kv("k", s.k.to_string());
        kv("payload_bytes", s.payload_bytes.to_string());
        kv("content_rate", format!("{:?}", s.content_rate));
        kv("content_duration", format!("{:?}", s.content_duration));
        kv("seed", s.seed.to_string());
        match &self.loss {
            LossSpec::Uniform { p_e } => {
                kv("loss", "uniform".into());
                kv("p_e", list(p_e));
            }
            LossSpec::Gilbert { p_e, mean_burst } => {
                kv("loss", "burst".into());
                kv("p_e", list(p_e));
                kv("mean_burst", format!("{mean_burst:?}"));
            }
            LossSpec::Chain { p_good_to_bad, p_bad_to_good, loss_good, loss_bad } => {
                kv("loss", "burst".into());
                kv("p_good_to_bad", format!("{p_good_to_bad:?}"));
                kv("p_bad_to_good", format!("{p_bad_to_good:?}"));
                kv("loss_good", format!("{loss_good:?}"));
                kv("loss_bad", format!("{loss_bad:?}"));
            }
        }
        kv("clients", self.clients.to_string());
        kv("fec", self.fec.as_str().into());
        kv("systematic", s.systematic.to_string());
        if let Some(cap) = self.max_buffered_equations {
            kv("max_buffered_equations", cap.to_string());
        }
        out
    }
}

/// Closed-form tables behind the analytic figures.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticTable {
    /// Admissible loss against client slot for each `(M, R)`.
    Admissible(Vec<(usize, usize)>),
    /// Plain `I` channels against `I − R` content plus `R` redundancy.
    Convergence {
        channels: usize,
        r: usize,
    },
    Delay {
        duration: f64,
        channels: usize,
        max_r: usize,
    },
    Success {
        m: usize,
        r: usize,
        losses: Vec<f64>,
        lambda_max: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Analytic { name: String, tables: Vec<AnalyticTable> },
    Simulation(RunConfig),
}

/// Figures that can be regenerated: 3, 4, 5, 6 and 9 are closed form,
/// 10 and 11 are simulated at desk scale.
pub const FIGURES: &[u32] = &[3, 4, 5, 6, 9, 10, 11];

pub fn figure_preset(figure: u32, seed: u64) -> Result<Preset> {
    let name = format!("figure{figure}");
    let analytic = |tables| Ok(Preset::Analytic { name: name.clone(), tables });
    let sim = |lambdas: Vec<usize>, p_e: Vec<f64>| {
        let base = RunConfig::default();
        Ok(Preset::Simulation(RunConfig {
            name: name.clone(),
            system: SystemConfig { seed, ..base.system.clone() },
            lambdas,
            loss: LossSpec::Uniform { p_e },
            ..base
        }))
    };
    match figure {
        3 => analytic(vec![AnalyticTable::Admissible(vec![(8, 0)])]),
        4 => analytic(vec![AnalyticTable::Admissible(vec![(7, 1)])]),
        5 => analytic(vec![
            AnalyticTable::Admissible(vec![(8, 0), (7, 1), (6, 2)]),
            AnalyticTable::Convergence { channels: 8, r: 1 },
        ]),
        6 => analytic(vec![AnalyticTable::Delay { duration: 7200.0, channels: 8, max_r: 2 }]),
        9 => analytic(vec![AnalyticTable::Success { m: 7, r: 1, losses: vec![0.1, 0.125, 0.15], lambda_max: 64 }]),
        10 => sim(vec![1, 2, 4, 8, 16], vec![0.1]),
        11 => sim(vec![4], vec![0.15, 0.2, 0.25]),
        _ => Err(Error::InvalidConfig(format!("no preset for figure {figure}; available: {FIGURES:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        let cfg = RunConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.grid().unwrap().len(), 1);
    }

    #[test]
    fn grid_order() {
        let cfg = RunConfig::parse("lambda = 1, 4\np_e = 0.1,0.2\nfec = both\n").unwrap();
        let grid = cfg.grid().unwrap();
        let keys: Vec<(usize, f64, bool)> =
            grid.iter().map(|g| (g.config.lambda, g.loss_model.mean_loss().unwrap(), g.decoder.fec)).collect();
        assert_eq!(keys[0], (1, 0.1, false));
        assert_eq!(keys[1], (1, 0.1, true));
        assert_eq!(keys[2], (1, 0.2, false));
        assert_eq!(keys[7], (4, 0.2, true));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "n = 3\nn = 4",
            "n = x",
            "n",
            "fec = maybe",
            "loss = burst",
            "loss = uniform\nmean_burst = 3",
            "loss = burst\nmean_burst = 2\nloss_bad = 1",
            "p_e = 1.5",
            "lambda = 0",
            "clients = 0",
            "name = a/b",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(Error::InvalidConfig(_))), "{text}");
        }
    }

    #[test]
    fn text_round_trip() {
        let texts = [
            "name = x\nlambda = 1,2\np_e = 0.15, 0.2\nfec = both\nmax_buffered_equations = 500\nseed = 9",
            "loss = burst\np_e = 0.1\nmean_burst = 2.5\nsystematic = true",
            "loss = burst\np_good_to_bad = 0.1\np_bad_to_good = 0.4\nloss_good = 0.01\nloss_bad = 0.5",
        ];
        for text in texts {
            let cfg = RunConfig::parse(text).unwrap();
            assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn presets() {
        for &f in FIGURES {
            figure_preset(f, 1).unwrap();
        }
        assert!(figure_preset(7, 1).is_err());
        let Preset::Simulation(cfg) = figure_preset(10, 42).unwrap() else { panic!() };
        assert_eq!(cfg.lambdas, vec![1, 2, 4, 8, 16]);
        assert_eq!(cfg.system.seed, 42);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}

//! Experiment configuration in a flat `key = value` text format.
//!
//! Keys are dotted (`model.type = regular`). A `[section]` line prefixes the
//! keys that follow it, so `[model]` then `n = 10` reads as `model.n = 10`.
//! `#` and `;` start comments. Recognised keys:
//!
//! | key | values | default |
//! |-----|--------|---------|
//! | `model.type` | `regular`, `gnp`, `dnp` | required |
//! | `model.n` | vertex count | required |
//! | `model.r` | degree (regular) | required for regular |
//! | `model.simple` | `true`/`false` (regular) | `true` |
//! | `model.p` | edge or arc probability (gnp, dnp) | one of p, c |
//! | `model.c` | `np / log n` (gnp, dnp) | one of p, c |
//! | `model.c_basis` | `arc` or `underlying` (dnp with `c`) | `arc` |
//! | `schedule.times` | comma list of time specs | required |
//! | `run.trials` | at least 1 | `1` |
//! | `run.seed` | u64 | `0` |
//! | `run.workers` | thread count, 0 for all cores | `0` |
//! | `run.walkers` | walkers sharing one visited set | `1` |
//! | `run.lazy` | `true`/`false` | `false` |
//! | `run.start` | `random` or a vertex | `random` |
//! | `stats.k_cap` | largest tree size counted | `50` |
//! | `stats.components` | `true`/`false` | `true` |
//! | `stats.degrees` | `true`/`false` | `true` |
//! | `stats.tree_k_max` | tree sizes reported against theory | `3` |
//!
//! A time spec is an absolute step count (`1000`), a multiple of the
//! critical time of a regular graph (`0.5*tstar`), a multiple of the
//! cover-time scale (`2*t0`), or a `G(n,p)` schedule point (`theta:-0.3`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vacant_core::components::StatFlags;
use vacant_core::theory::{self, gnp_schedule};
use vacant_core::{DnpParams, GnpParams, RegularParams, TimeStep, VertexId};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("bad value for `{key}`: {value:?}")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

/// How `model.c` turns into an arc probability for `D(n,p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CBasis {
    /// `np = c log n` for the per-direction arc probability.
    Arc,
    /// `nq = c log n` for the underlying graph, `q = 1 - (1-p)^2`.
    Underlying,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    P(f64),
    C(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelSpec {
    Regular { n: usize, r: u32, simple: bool },
    Gnp { n: usize, density: Density },
    Dnp { n: usize, density: Density, basis: CBasis },
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        match *self {
            ModelSpec::Regular { n, .. } | ModelSpec::Gnp { n, .. } | ModelSpec::Dnp { n, .. } => n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Regular { .. } => "regular",
            ModelSpec::Gnp { .. } => "gnp",
            ModelSpec::Dnp { .. } => "dnp",
        }
    }

    pub fn regular_params(&self) -> Option<RegularParams> {
        match *self {
            ModelSpec::Regular { n, r, simple } => Some(RegularParams { n, r, simple_only: simple }),
            _ => None,
        }
    }

    pub fn gnp_params(&self) -> Option<GnpParams> {
        match *self {
            ModelSpec::Gnp { n, density: Density::P(p) } => Some(GnpParams { n, p }),
            ModelSpec::Gnp { n, density: Density::C(c) } => Some(GnpParams::from_c(n, c)),
            _ => None,
        }
    }

    pub fn dnp_params(&self) -> Option<DnpParams> {
        match *self {
            ModelSpec::Dnp { n, density: Density::P(p), .. } => Some(DnpParams { n, p }),
            ModelSpec::Dnp { n, density: Density::C(c), basis: CBasis::Arc } => Some(DnpParams::from_c(n, c)),
            ModelSpec::Dnp { n, density: Density::C(c), basis: CBasis::Underlying } => {
                Some(DnpParams::from_underlying_c(n, c))
            }
            _ => None,
        }
    }

    /// Edge probability that sets the `G(n,p)` schedule: `p` for `G(n,p)`;
    /// for `D(n,p)` the arc probability or `q`, following the basis.
    pub fn schedule_p(&self) -> Option<f64> {
        match self {
            ModelSpec::Regular { .. } => None,
            ModelSpec::Gnp { .. } => self.gnp_params().map(|g| g.p),
            ModelSpec::Dnp { basis, density, .. } => {
                let d = self.dnp_params()?;
                match (density, basis) {
                    (Density::C(_), CBasis::Underlying) => Some(d.q()),
                    _ => Some(d.p),
                }
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let err = |e: vacant_core::GraphError| ConfigError::Invalid(e.to_string());
        match self {
            ModelSpec::Regular { .. } => {
                let params = self.regular_params().unwrap();
                params.validate().map_err(err)?;
                params.validate_for_theory().map_err(err)
            }
            ModelSpec::Gnp { .. } => self.gnp_params().unwrap().validate().map_err(err),
            ModelSpec::Dnp { .. } => self.dnp_params().unwrap().validate().map_err(err),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeSpec {
    Absolute(TimeStep),
    TStar(f64),
    T0(f64),
    Theta(f64),
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpec::Absolute(t) => write!(f, "{t}"),
            TimeSpec::TStar(x) => write!(f, "{x}*tstar"),
            TimeSpec::T0(x) => write!(f, "{x}*t0"),
            TimeSpec::Theta(x) => write!(f, "theta:{x}"),
        }
    }
}

impl FromStr for TimeSpec {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let s = s.trim();
        let finite = |x: f64| if x.is_finite() { Ok(x) } else { Err(()) };
        if let Some(rest) = s.strip_prefix("theta:") {
            return Ok(TimeSpec::Theta(finite(rest.trim().parse().map_err(|_| ())?)?));
        }
        let multiple =
            |suffix: &str| -> Option<Result<f64, ()>> {
                let head = s.strip_suffix(suffix)?.trim();
                if head.is_empty() {
                    return Some(Ok(1.0));
                }
                let head = head.strip_suffix('*')?.trim();
                Some(head.parse::<f64>().map_err(|_| ()).and_then(finite).and_then(|x| {
                    if x >= 0.0 {
                        Ok(x)
                    } else {
                        Err(())
                    }
                }))
            };
        if let Some(x) = multiple("tstar") {
            return x.map(TimeSpec::TStar);
        }
        if let Some(x) = multiple("t0") {
            return x.map(TimeSpec::T0);
        }
        s.parse().map(TimeSpec::Absolute).map_err(|_| ())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartSpec {
    Random,
    Vertex(VertexId),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub schedule: Vec<TimeSpec>,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub walkers: usize,
    pub lazy: bool,
    pub start: StartSpec,
    pub k_cap: usize,
    pub flags: StatFlags,
    pub tree_k_max: u32,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, schedule: Vec<TimeSpec>) -> Self {
        ExperimentConfig {
            model,
            schedule,
            trials: 1,
            seed: 0,
            workers: 0,
            walkers: 1,
            lazy: false,
            start: StartSpec::Random,
            k_cap: 50,
            flags: StatFlags::default(),
            tree_k_max: 3,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let map = parse_pairs(text)?;
        let mut taken = Taken { map: &map, used: Vec::new() };
        let cfg = Self::from_pairs(&mut taken)?;
        if let Some(k) = map.keys().find(|k| !taken.used.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_pairs(m: &mut Taken<'_>) -> Result<Self, ConfigError> {
        let kind = m.required("model.type")?;
        let n: usize = m.parse_required("model.n")?;
        let model = match kind.as_str() {
            "regular" => {
                ModelSpec::Regular { n, r: m.parse_required("model.r")?, simple: m.parse_or("model.simple", true)? }
            }
            "gnp" => ModelSpec::Gnp { n, density: m.density()? },
            "dnp" => {
                let density = m.density()?;
                let basis = match m.optional("model.c_basis").as_deref() {
                    None | Some("arc") => CBasis::Arc,
                    Some("underlying") => CBasis::Underlying,
                    Some(other) => return Err(bad("model.c_basis", other)),
                };
                ModelSpec::Dnp { n, density, basis }
            }
            other => return Err(bad("model.type", other)),
        };
        let times = m.required("schedule.times")?;
        let schedule = times
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<TimeSpec>().map_err(|_| bad("schedule.times", s)))
            .collect::<Result<Vec<_>, _>>()?;
        let start = match m.optional("run.start").as_deref() {
            None | Some("random") => StartSpec::Random,
            Some(v) => StartSpec::Vertex(v.parse().map_err(|_| bad("run.start", v))?),
        };
        Ok(ExperimentConfig {
            model,
            schedule,
            trials: m.parse_or("run.trials", 1)?,
            seed: m.parse_or("run.seed", 0)?,
            workers: m.parse_or("run.workers", 0)?,
            walkers: m.parse_or("run.walkers", 1)?,
            lazy: m.parse_or("run.lazy", false)?,
            start,
            k_cap: m.parse_or("stats.k_cap", 50)?,
            flags: StatFlags {
                components: m.parse_or("stats.components", true)?,
                degrees: m.parse_or("stats.degrees", true)?,
            },
            tree_k_max: m.parse_or("stats.tree_k_max", 3)?,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate()?;
        if self.trials == 0 {
            return Err(ConfigError::Invalid("run.trials must be at least 1".into()));
        }
        if self.walkers == 0 {
            return Err(ConfigError::Invalid("run.walkers must be at least 1".into()));
        }
        if self.k_cap == 0 {
            return Err(ConfigError::Invalid("stats.k_cap must be at least 1".into()));
        }
        if self.schedule.is_empty() {
            return Err(ConfigError::Invalid("schedule.times is empty".into()));
        }
        if let StartSpec::Vertex(v) = self.start {
            if v as usize >= self.model.n() {
                return Err(ConfigError::Invalid(format!("run.start {v} is not a vertex")));
            }
        }
        self.resolved_times().map(|_| ())
    }

    /// Absolute snapshot times, strictly increasing.
    pub fn resolved_times(&self) -> Result<Vec<TimeStep>, ConfigError> {
        let n = self.model.n();
        let nf = n as f64;
        let ln_n = nf.ln();
        let mut out = Vec::with_capacity(self.schedule.len());
        for spec in &self.schedule {
            let t = match (*spec, self.model) {
                (TimeSpec::Absolute(t), _) => t as f64,
                (TimeSpec::TStar(x), ModelSpec::Regular { r, .. }) => {
                    x * theory::t_star(r).map_err(|e| ConfigError::Invalid(e.to_string()))? * nf
                }
                (TimeSpec::T0(x), ModelSpec::Regular { r, .. }) => x * theory::rho(r) * nf * ln_n,
                (TimeSpec::T0(x), _) => x * nf * ln_n,
                (TimeSpec::Theta(theta), _) if self.model.schedule_p().is_some() => {
                    let p = self.model.schedule_p().unwrap();
                    gnp_schedule(n, p, theta).map_err(|e| ConfigError::Invalid(e.to_string()))?.t_theta
                }
                (spec, model) => {
                    return Err(ConfigError::Invalid(format!(
                        "time `{spec}` does not apply to the {} model",
                        model.name()
                    )))
                }
            };
            if t.is_nan() || t < 0.0 || t > u64::MAX as f64 / 2.0 {
                return Err(ConfigError::Invalid(format!("time `{spec}` resolves to {t}")));
            }
            out.push(t.round() as TimeStep);
        }
        if out.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid(format!("snapshot times are not strictly increasing: {out:?}")));
        }
        Ok(out)
    }

    /// Canonical text form; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| lines.push((k.to_string(), v));
        put("model.type", self.model.name().into());
        put("model.n", self.model.n().to_string());
        match self.model {
            ModelSpec::Regular { r, simple, .. } => {
                put("model.r", r.to_string());
                put("model.simple", simple.to_string());
            }
            ModelSpec::Gnp { density, .. } | ModelSpec::Dnp { density, .. } => match density {
                Density::P(p) => put("model.p", p.to_string()),
                Density::C(c) => put("model.c", c.to_string()),
            },
        }
        if let ModelSpec::Dnp { basis, .. } = self.model {
            let b = match basis {
                CBasis::Arc => "arc",
                CBasis::Underlying => "underlying",
            };
            put("model.c_basis", b.into());
        }
        let times: Vec<String> = self.schedule.iter().map(|t| t.to_string()).collect();
        put("schedule.times", times.join(", "));
        put("run.trials", self.trials.to_string());
        put("run.seed", self.seed.to_string());
        put("run.workers", self.workers.to_string());
        put("run.walkers", self.walkers.to_string());
        put("run.lazy", self.lazy.to_string());
        put(
            "run.start",
            match self.start {
                StartSpec::Random => "random".into(),
                StartSpec::Vertex(v) => v.to_string(),
            },
        );
        put("stats.k_cap", self.k_cap.to_string());
        put("stats.components", self.flags.components.to_string());
        put("stats.degrees", self.flags.degrees.to_string());
        put("stats.tree_k_max", self.tree_k_max.to_string());
        lines.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue { key: key.into(), value: value.trim().into() }
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        }
        let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(ConfigError::DuplicateKey(key));
        }
    }
    Ok(map)
}

struct Taken<'a> {
    map: &'a BTreeMap<String, String>,
    used: Vec<&'static str>,
}

impl Taken<'_> {
    fn optional(&mut self, key: &'static str) -> Option<String> {
        self.used.push(key);
        self.map.get(key).cloned()
    }

    fn required(&mut self, key: &'static str) -> Result<String, ConfigError> {
        self.optional(key).ok_or(ConfigError::MissingKey(key))
    }

    fn parse_required<T: FromStr>(&mut self, key: &'static str) -> Result<T, ConfigError> {
        let v = self.required(key)?;
        v.parse().map_err(|_| bad(key, &v))
    }

    fn parse_or<T: FromStr>(&mut self, key: &'static str, default: T) -> Result<T, ConfigError> {
        match self.optional(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, &v)),
        }
    }

    fn density(&mut self) -> Result<Density, ConfigError> {
        let p = self.optional("model.p");
        let c = self.optional("model.c");
        let number = |key: &str, v: &str| v.parse::<f64>().map_err(|_| bad(key, v));
        match (p, c) {
            (Some(p), None) => Ok(Density::P(number("model.p", &p)?)),
            (None, Some(c)) => Ok(Density::C(number("model.c", &c)?)),
            (None, None) => Err(ConfigError::MissingKey("model.p")),
            (Some(_), Some(_)) => Err(ConfigError::Invalid("give model.p or model.c, not both".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# cubic graph, three snapshots
model.type = regular
model.n = 1000
model.r = 3
schedule.times = 0.5*tstar, tstar, 2*t0

[run]
trials = 4
seed = 42
";

    #[test]
    fn parse_sample_and_round_trip() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.model, ModelSpec::Regular { n: 1000, r: 3, simple: true });
        assert_eq!(cfg.schedule, vec![TimeSpec::TStar(0.5), TimeSpec::TStar(1.0), TimeSpec::T0(2.0)]);
        assert_eq!((cfg.trials, cfg.seed), (4, 42));
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn resolves_regular_times() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        let t = cfg.resolved_times().unwrap();
        assert_eq!(t[1], (6.0 * 2f64.ln() * 1000.0).round() as u64);
        assert_eq!(t[2], (2.0 * 2.0 * 1000.0 * 1000f64.ln()).round() as u64);
    }

    #[test]
    fn rejects_bad_input() {
        let with = |extra: &str| ExperimentConfig::parse(&format!("{SAMPLE}{extra}"));
        assert!(matches!(with("bogus = 1\n"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(with("trials = 5\n"), Err(ConfigError::DuplicateKey(_))));
        assert!(matches!(with("no equals sign\n"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(with("walkers = 0\n"), Err(ConfigError::Invalid(_))));
        let theta = SAMPLE.replace("2*t0", "theta:0.3");
        assert!(matches!(ExperimentConfig::parse(&theta), Err(ConfigError::Invalid(_))));
        let backwards = SAMPLE.replace("0.5*tstar, tstar", "tstar, 0.5*tstar");
        assert!(matches!(ExperimentConfig::parse(&backwards), Err(ConfigError::Invalid(_))));
        let low_degree = SAMPLE.replace("model.r = 3", "model.r = 2");
        assert!(ExperimentConfig::parse(&low_degree).is_err());
    }

    #[test]
    fn gnp_theta_schedule() {
        let text = "model.type = gnp\nmodel.n = 100000\nmodel.c = 4\nschedule.times = theta:-0.3, theta:0.3\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let t = cfg.resolved_times().unwrap();
        let n = 100_000f64;
        let expect = n * (n.ln().ln() + 0.7 * 4f64.ln());
        assert!((t[0] as f64 - expect).abs() <= 0.5 + 1e-6 * expect);
        let below = text.replace("model.c = 4", "model.c = 0.5");
        assert!(ExperimentConfig::parse(&below).is_err());
    }

    #[test]
    fn dnp_basis() {
        let text = "model.type = dnp\nmodel.n = 1000\nmodel.c = 2\nmodel.c_basis = underlying\nschedule.times = 10\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let q = cfg.model.schedule_p().unwrap();
        assert!((q - 2.0 * 1000f64.ln() / 1000.0).abs() < 1e-15);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn time_spec_text() {
        for s in ["0", "17", "0.25*tstar", "tstar", "3*t0", "theta:-0.3"] {
            let t: TimeSpec = s.parse().unwrap();
            assert_eq!(t.to_string().parse::<TimeSpec>().unwrap(), t);
        }
        for s in ["", "x*tstar", "-1*tstar", "theta:", "1.5", "inf*t0"] {
            assert!(s.parse::<TimeSpec>().is_err(), "{s}");
        }
    }
}

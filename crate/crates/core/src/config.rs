//! Flat `key=value` experiment configuration.
//!
//! A file holds one pair per line; blank lines and lines starting with `#` are
//! ignored. Command-line pairs override the file. [`ExperimentConfig::echo`]
//! lists every resolved key, and feeding those lines back through
//! [`strip_header`] and [`ExperimentConfig::parse`] reproduces the config.

use std::fmt;

use thiserror::Error;

use crate::control::{AlphaSequence, ControlScheme};
use crate::maps::{LipschitzData, MapError, MapKind, MapModel, PiecewiseMap};
use crate::noise::{NoiseError, NoiseLaw, NoiseSpec, DEFAULT_SEED};
use crate::simulate::ScanGrid;

pub const KEYS: &[&str] = &[
    "map",
    "r",
    "A",
    "B",
    "bh_gamma",
    "poly",
    "break",
    "tail_shift",
    "scheme",
    "alpha",
    "l",
    "alpha_seq",
    "noise",
    "nu",
    "seed",
    "x0",
    "n_steps",
    "n_traj",
    "eps",
    "eps1",
    "lip_eps",
    "M",
    "M_eps",
    "grid",
    "search_bound",
    "out_traj",
    "out_stats",
    "out_scan",
    "dump_max",
    "force",
];

pub const DEFAULT_N_STEPS: usize = 500;
pub const DEFAULT_N_TRAJ: usize = 10;
pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 100_000;
pub const DEFAULT_DUMP_MAX: usize = 10;
/// Default `lip_eps` as a fraction of `K`.
pub const DEFAULT_LIP_EPS_FRACTION: f64 = 0.06;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: expected key=value, got `{text}`")]
    BadLine { line: usize, text: String },
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl From<MapError> for ConfigError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::InvalidParameter { name, .. } => invalid(name, e.to_string()),
            other => invalid("map", other.to_string()),
        }
    }
}

impl From<NoiseError> for ConfigError {
    fn from(e: NoiseError) -> Self {
        invalid("nu", e.to_string())
    }
}

/// Turns echoed `# key=value` lines back into config text.
pub fn strip_header(text: &str) -> String {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| l.split_once('=').is_some_and(|(k, _)| KEYS.contains(&k)))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Ricker { r: f64 },
    Logistic { r: f64 },
    Bh1 { a: f64, b: f64, exponent: f64 },
    Bh2 { a: f64, b: f64, exponent: f64 },
    Singer,
    Custom { poly: Vec<f64>, tail: Option<(f64, f64)> },
}

impl MapSpec {
    pub fn build(&self) -> Result<MapModel, MapError> {
        match self {
            MapSpec::Ricker { r } => MapModel::ricker(*r),
            MapSpec::Logistic { r } => MapModel::truncated_logistic(*r),
            MapSpec::Bh1 { a, b, exponent } => MapModel::beverton_holt1(*a, *b, *exponent),
            MapSpec::Bh2 { a, b, exponent } => MapModel::beverton_holt2(*a, *b, *exponent),
            MapSpec::Singer => Ok(MapModel::singer()),
            MapSpec::Custom { poly, tail } => {
                let mut p = PiecewiseMap::polynomial(poly.clone())?;
                if let Some((start, shift)) = tail {
                    p = p.then_reciprocal(*start, *shift)?;
                }
                MapModel::new(MapKind::Custom(p))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Uncontrolled,
    Det,
    Mult,
    Add,
    MapMult,
}

impl SchemeKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uncontrolled" => SchemeKind::Uncontrolled,
            "det" => SchemeKind::Det,
            "mult" => SchemeKind::Mult,
            "add" => SchemeKind::Add,
            "mapmult" => SchemeKind::MapMult,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            SchemeKind::Uncontrolled => "uncontrolled",
            SchemeKind::Det => "det",
            SchemeKind::Mult => "mult",
            SchemeKind::Add => "add",
            SchemeKind::MapMult => "mapmult",
        }
    }
}

/// A scalar, or a `lo:hi:step` grid (scan only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Value(f64),
    Range { lo: f64, hi: f64, step: f64 },
}

impl Param {
    pub fn grid(&self) -> Vec<f64> {
        match *self {
            Param::Value(v) => vec![v],
            Param::Range { lo, hi, step } => ScanGrid::range(lo, hi, step).unwrap_or_default(),
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match *self {
            Param::Value(v) => Some(v),
            Param::Range { .. } => None,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Value(v) => write!(f, "{v}"),
            Param::Range { lo, hi, step } => write!(f, "{lo}:{hi}:{step}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub map: MapSpec,
    pub scheme: SchemeKind,
    pub alpha: Option<Param>,
    pub l: Param,
    /// `Some((lo, hi))` for an iid deterministic sequence.
    pub alpha_seq: Option<(f64, f64)>,
    pub noise: NoiseLaw,
    pub nu: f64,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    pub n_steps: usize,
    pub n_traj: usize,
    pub eps: f64,
    pub eps1: Option<f64>,
    pub lip_eps: Option<f64>,
    pub m: Option<f64>,
    pub m_eps: Option<f64>,
    pub grid: usize,
    pub search_bound: Option<f64>,
    pub out_traj: String,
    pub out_stats: String,
    pub out_scan: String,
    pub dump_max: usize,
    pub force: bool,
}

struct Pairs(Vec<(String, String)>);

impl Pairs {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| number(key, v)).transpose()
    }

    fn req_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, v)),
        }
    }
}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn number(key: &str, v: &str) -> Result<f64, ConfigError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(bad(key, v)),
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| number(key, s.trim())).collect()
}

fn param(key: &str, v: &str) -> Result<Param, ConfigError> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(Param::Value(number(key, x)?)),
        [lo, hi, step] => {
            let (lo, hi, step) = (number(key, lo)?, number(key, hi)?, number(key, step)?);
            if ScanGrid::range(lo, hi, step).is_none() {
                return Err(invalid(key, "range needs lo <= hi and step >= 0"));
            }
            Ok(Param::Range { lo, hi, step })
        }
        _ => Err(bad(key, v)),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn read_pairs(file: Option<&str>, overrides: &[String]) -> Result<Pairs, ConfigError> {
    let mut pairs = Vec::new();
    let mut push = |line: usize, text: &str| -> Result<(), ConfigError> {
        let (k, v) = text.split_once('=').ok_or_else(|| ConfigError::BadLine {
            line,
            text: text.to_string(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        pairs.push((k.to_string(), v.to_string()));
        Ok(())
    };
    for (i, raw) in file.unwrap_or("").lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        push(i + 1, line)?;
    }
    for flag in overrides {
        push(0, flag.trim())?;
    }
    Ok(Pairs(pairs))
}

impl ExperimentConfig {
    /// Resolves a config file plus `key=value` overrides.
    pub fn parse(file: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let p = read_pairs(file, overrides)?;
        let map = match p.get("map").ok_or_else(|| ConfigError::Missing("map".into()))? {
            "ricker" => MapSpec::Ricker { r: p.req_f64("r")? },
            "logistic" => MapSpec::Logistic { r: p.req_f64("r")? },
            kind @ ("bh1" | "bh2") => {
                let (a, b, exponent) = (p.req_f64("A")?, p.req_f64("B")?, p.req_f64("bh_gamma")?);
                if kind == "bh1" {
                    MapSpec::Bh1 { a, b, exponent }
                } else {
                    MapSpec::Bh2 { a, b, exponent }
                }
            }
            "singer" => MapSpec::Singer,
            "custom" => {
                let poly = list("poly", p.get("poly").ok_or_else(|| ConfigError::Missing("poly".into()))?)?;
                let tail = match p.f64("break")? {
                    Some(start) => Some((start, p.f64("tail_shift")?.unwrap_or(0.0))),
                    None => None,
                };
                MapSpec::Custom { poly, tail }
            }
            other => return Err(bad("map", other)),
        };

        let scheme = match p.get("scheme") {
            None => SchemeKind::Mult,
            Some(s) => SchemeKind::parse(s).ok_or_else(|| bad("scheme", s))?,
        };
        let alpha = p.get("alpha").map(|v| param("alpha", v)).transpose()?;
        let l = p.get("l").map(|v| param("l", v)).transpose()?.unwrap_or(Param::Value(0.0));
        let alpha_seq = match p.get("alpha_seq") {
            None | Some("constant") => None,
            Some(v) => {
                let (lo, hi) = v.split_once(':').ok_or_else(|| bad("alpha_seq", v))?;
                Some((number("alpha_seq", lo)?, number("alpha_seq", hi)?))
            }
        };
        let noise = match p.get("noise") {
            None | Some("uniform") => NoiseLaw::UniformSymmetric,
            Some("skewed") => NoiseLaw::LogSkewed,
            Some(v) => return Err(bad("noise", v)),
        };
        let nu = p.f64("nu")?.unwrap_or(1.0);
        let seed = match p.get("seed") {
            None => DEFAULT_SEED,
            Some(v) => v.parse().map_err(|_| bad("seed", v))?,
        };
        let x0 = p.get("x0").map(|v| list("x0", v)).transpose()?;
        let force = match p.get("force") {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(v) => return Err(bad("force", v)),
        };

        let cfg = Self {
            map,
            scheme,
            alpha,
            l,
            alpha_seq,
            noise,
            nu,
            seed,
            x0,
            n_steps: p.usize("n_steps", DEFAULT_N_STEPS)?,
            n_traj: p.usize("n_traj", DEFAULT_N_TRAJ)?,
            eps: p.f64("eps")?.unwrap_or(DEFAULT_EPS),
            eps1: p.f64("eps1")?,
            lip_eps: p.f64("lip_eps")?,
            m: p.f64("M")?,
            m_eps: p.f64("M_eps")?,
            grid: p.usize("grid", DEFAULT_GRID)?,
            search_bound: p.f64("search_bound")?,
            out_traj: p.get("out_traj").unwrap_or("traj.csv").to_string(),
            out_stats: p.get("out_stats").unwrap_or("stats.csv").to_string(),
            out_scan: p.get("out_scan").unwrap_or("scan.csv").to_string(),
            dump_max: p.usize("dump_max", DEFAULT_DUMP_MAX)?,
            force,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.map.build()?;
        let unit_open = |key: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(key, format!("{v} outside [0, 1)")))
            }
        };
        match self.alpha {
            Some(Param::Value(a)) => unit_open("alpha", a)?,
            Some(Param::Range { lo, hi, .. }) => {
                if lo < 0.0 || hi > 1.0 {
                    return Err(invalid("alpha", "grid must lie in [0, 1]"));
                }
            }
            None => {}
        }
        if self.l.grid().iter().any(|&l| l < 0.0) {
            return Err(invalid("l", "intensity must be nonnegative"));
        }
        if let Some((lo, hi)) = self.alpha_seq {
            if self.scheme != SchemeKind::Det {
                return Err(invalid("alpha_seq", "only the det scheme takes a sequence"));
            }
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(invalid("alpha_seq", "needs 0 <= lo <= hi <= 1"));
            }
            if self.noise != NoiseLaw::UniformSymmetric {
                return Err(invalid("noise", "an iid sequence is driven by uniform noise"));
            }
        }
        match self.noise {
            NoiseLaw::UniformSymmetric if self.nu != 1.0 => {
                return Err(invalid("nu", "uniform noise has nu = 1"));
            }
            NoiseLaw::LogSkewed => {
                NoiseSpec::skewed(self.nu, self.seed)?;
            }
            _ => {}
        }
        if let Some(x0) = &self.x0 {
            if x0.is_empty() || x0.iter().any(|&x| !(x > 0.0)) {
                return Err(invalid("x0", "initial values must be positive"));
            }
        }
        if self.n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        if !(self.eps > 0.0) {
            return Err(invalid("eps", "must be positive"));
        }
        if self.grid < 10 {
            return Err(invalid("grid", "must be at least 10"));
        }
        match (self.m, self.m_eps) {
            (Some(_), None) => return Err(ConfigError::Missing("M_eps".into())),
            (None, Some(_)) => return Err(ConfigError::Missing("M".into())),
            _ => {}
        }
        if let Some(e) = self.lip_eps {
            if !(e > 0.0) {
                return Err(invalid("lip_eps", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> MapModel {
        self.map.build().expect("validated at parse time")
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        match self.noise {
            NoiseLaw::UniformSymmetric => NoiseSpec::uniform(self.seed),
            NoiseLaw::LogSkewed => NoiseSpec::skewed(self.nu, self.seed).expect("validated at parse time"),
        }
    }

    /// The scheme for scalar `alpha` and `l`.
    pub fn scheme(&self) -> Result<ControlScheme, ConfigError> {
        let scalar = |key: &str, p: Option<Param>| -> Result<f64, ConfigError> {
            match p {
                Some(Param::Value(v)) => Ok(v),
                Some(Param::Range { .. }) => Err(invalid(key, "ranges are only accepted by scan")),
                None => Err(ConfigError::Missing(key.to_string())),
            }
        };
        Ok(match self.scheme {
            SchemeKind::Uncontrolled => ControlScheme::Uncontrolled,
            SchemeKind::Det => ControlScheme::DeterministicPbc(match self.alpha_seq {
                Some((lo, hi)) => AlphaSequence::IidOnInterval { lo, hi },
                None => AlphaSequence::Constant(scalar("alpha", self.alpha)?),
            }),
            SchemeKind::Mult => ControlScheme::MultiplicativePbc {
                alpha: scalar("alpha", self.alpha)?,
                l: scalar("l", Some(self.l))?,
            },
            SchemeKind::Add => ControlScheme::AdditivePbc {
                alpha: scalar("alpha", self.alpha)?,
                l: scalar("l", Some(self.l))?,
            },
            SchemeKind::MapMult => ControlScheme::MapMultiplicative {
                l: scalar("l", Some(self.l))?,
            },
        })
    }

    pub fn x0(&self) -> Result<&[f64], ConfigError> {
        self.x0.as_deref().ok_or_else(|| ConfigError::Missing("x0".into()))
    }

    /// Half-width of the local Lipschitz ball, defaulting to `0.06 K`.
    pub fn lip_eps(&self, model: &MapModel) -> f64 {
        self.lip_eps.unwrap_or(DEFAULT_LIP_EPS_FRACTION * model.equilibrium())
    }

    /// Given `M, M_eps`, or grid estimates of both.
    pub fn lipschitz(&self, model: &MapModel) -> Result<LipschitzData, ConfigError> {
        let eps = self.lip_eps(model);
        match (self.m, self.m_eps) {
            (Some(m), Some(me)) => Ok(LipschitzData::given(m, me, eps)?),
            _ => Ok(LipschitzData::estimate(model, eps, self.grid, self.search_bound)),
        }
    }

    /// Every resolved key as `key=value`, in [`KEYS`] order.
    pub fn echo(&self) -> Vec<String> {
        let mut out: Vec<(&str, String)> = Vec::new();
        match &self.map {
            MapSpec::Ricker { r } => {
                out.push(("map", "ricker".into()));
                out.push(("r", r.to_string()));
            }
            MapSpec::Logistic { r } => {
                out.push(("map", "logistic".into()));
                out.push(("r", r.to_string()));
            }
            MapSpec::Bh1 { a, b, exponent } | MapSpec::Bh2 { a, b, exponent } => {
                let name = if matches!(self.map, MapSpec::Bh1 { .. }) { "bh1" } else { "bh2" };
                out.push(("map", name.into()));
                out.push(("A", a.to_string()));
                out.push(("B", b.to_string()));
                out.push(("bh_gamma", exponent.to_string()));
            }
            MapSpec::Singer => out.push(("map", "singer".into())),
            MapSpec::Custom { poly, tail } => {
                out.push(("map", "custom".into()));
                out.push(("poly", join(poly)));
                if let Some((start, shift)) = tail {
                    out.push(("break", start.to_string()));
                    out.push(("tail_shift", shift.to_string()));
                }
            }
        }
        out.push(("scheme", self.scheme.name().into()));
        if let Some(a) = self.alpha {
            out.push(("alpha", a.to_string()));
        }
        out.push(("l", self.l.to_string()));
        out.push((
            "alpha_seq",
            self.alpha_seq.map_or_else(|| "constant".to_string(), |(lo, hi)| format!("{lo}:{hi}")),
        ));
        out.push((
            "noise",
            match self.noise {
                NoiseLaw::UniformSymmetric => "uniform",
                NoiseLaw::LogSkewed => "skewed",
            }
            .into(),
        ));
        out.push(("nu", self.nu.to_string()));
        out.push(("seed", self.seed.to_string()));
        if let Some(x0) = &self.x0 {
            out.push(("x0", join(x0)));
        }
        out.push(("n_steps", self.n_steps.to_string()));
        out.push(("n_traj", self.n_traj.to_string()));
        out.push(("eps", self.eps.to_string()));
        let opt = [
            ("eps1", self.eps1),
            ("lip_eps", self.lip_eps),
            ("M", self.m),
            ("M_eps", self.m_eps),
        ];
        for (k, v) in opt {
            if let Some(v) = v {
                out.push((k, v.to_string()));
            }
        }
        out.push(("grid", self.grid.to_string()));
        if let Some(b) = self.search_bound {
            out.push(("search_bound", b.to_string()));
        }
        out.push(("out_traj", self.out_traj.clone()));
        out.push(("out_stats", self.out_stats.clone()));
        out.push(("out_scan", self.out_scan.clone()));
        out.push(("dump_max", self.dump_max.to_string()));
        out.push(("force", self.force.to_string()));
        out.sort_by_key(|(k, _)| KEYS.iter().position(|x| x == k));
        out.into_iter().map(|(k, v)| format!("{k}={v}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn noisy_control_flags() {
        let c = ExperimentConfig::parse(None, &flags("map=ricker r=5 alpha=0.8 l=0.02 nu=1 noise=uniform x0=0.3"))
            .unwrap();
        assert_eq!(c.map, MapSpec::Ricker { r: 5.0 });
        assert_eq!(c.scheme().unwrap(), ControlScheme::MultiplicativePbc { alpha: 0.8, l: 0.02 });
        assert_eq!(c.x0().unwrap(), &[0.3]);
        assert_eq!(c.seed, DEFAULT_SEED);
    }

    #[test]
    fn file_and_flags_agree() {
        let text = "# fig 1\nmap = ricker\nr=5\n\nalpha=0.8\nl=0.02\nx0=0.3\n";
        let a = ExperimentConfig::parse(Some(text), &[]).unwrap();
        let b = ExperimentConfig::parse(Some(""), &flags("map=ricker r=5 alpha=0.8 l=0.02 x0=0.3")).unwrap();
        assert_eq!(a, b);
        let c = ExperimentConfig::parse(Some(text), &flags("alpha=0.9")).unwrap();
        assert_eq!(c.alpha, Some(Param::Value(0.9)));
    }

    #[test]
    fn errors_name_the_key() {
        let e = ExperimentConfig::parse(None, &flags("map=ricker r=5 alpha=1.5")).unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { key, .. } if key == "alpha"), "{e}");
        let e = ExperimentConfig::parse(None, &flags("map=ricker r=5 alpha=0.8 colour=red")).unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey("colour".into()));
        let e = ExperimentConfig::parse(None, &flags("map=ricker r=5 alpha=0,8")).unwrap_err();
        assert!(matches!(&e, ConfigError::BadValue { key, .. } if key == "alpha"));
        let e = ExperimentConfig::parse(None, &flags("map=ricker alpha=0.8")).unwrap_err();
        assert_eq!(e, ConfigError::Missing("r".into()));
        let e = ExperimentConfig::parse(None, &flags("r=5")).unwrap_err();
        assert_eq!(e, ConfigError::Missing("map".into()));
        let e = ExperimentConfig::parse(None, &flags("map=ricker r=-1 alpha=0.5")).unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { key, .. } if key == "r"));
        let e = ExperimentConfig::parse(None, &flags("map=ricker r=5 alpha=0.5 nu=3")).unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { key, .. } if key == "nu"));
        let e = ExperimentConfig::parse(None, &flags("map=ricker r=5 alpha=nan")).unwrap_err();
        assert!(matches!(e, ConfigError::BadValue { .. }));
    }

    #[test]
    fn echo_round_trips() {
        let c = ExperimentConfig::parse(
            None,
            &flags("map=custom poly=0,7.86,-23.31,28.75,-13.3 break=0.99 tail_shift=0.01 scheme=mapmult l=0.02 x0=0.3217,0.5"),
        )
        .unwrap();
        let header: String = c.echo().iter().map(|l| format!("# {l}\n")).collect();
        let back = ExperimentConfig::parse(Some(&strip_header(&header)), &[]).unwrap();
        assert_eq!(c, back);

        let s = ExperimentConfig::parse(None, &flags("map=ricker r=5 alpha=0.5:0.95:0.05 l=0:0.2:0.05 M=12.87 M_eps=4.5"))
            .unwrap();
        let header: String = s.echo().iter().map(|l| format!("# {l}\n")).collect();
        assert_eq!(ExperimentConfig::parse(Some(&strip_header(&header)), &[]).unwrap(), s);
        assert_eq!(s.alpha.unwrap().grid().len(), 10);
        assert!(s.scheme().is_err());
    }

    #[test]
    fn iid_sequence() {
        let c = ExperimentConfig::parse(None, &flags("map=ricker r=5 scheme=det alpha_seq=0.93:0.99 x0=0.3")).unwrap();
        assert_eq!(
            c.scheme().unwrap(),
            ControlScheme::DeterministicPbc(AlphaSequence::IidOnInterval { lo: 0.93, hi: 0.99 })
        );
        assert!(ExperimentConfig::parse(None, &flags("map=ricker r=5 scheme=det alpha_seq=0.93:0.99 noise=skewed nu=2")).is_err());
    }

    #[test]
    fn default_lip_eps_scales_with_k() {
        let c = ExperimentConfig::parse(None, &flags("map=logistic r=3 alpha=0.5")).unwrap();
        let m = c.model();
        assert!((c.lip_eps(&m) - 0.06 * (2.0 / 3.0)).abs() < 1e-15);
    }
}

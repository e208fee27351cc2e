//! Run configuration: flat `key = value` lines grouped under `[section]`
//! headers, with one `[bump]` block per bump. `#` starts a comment.
//!
//! ```text
//! [grid]
//! n = 32
//! length = 1.0
//!
//! [medium]
//! omega = 1.0
//!
//! [bump]
//! target = mu
//! center = 0 0 0
//! radius = 0.18
//! amplitude = 0.05
//! order = 3
//! phantom = both      # 1, 2 or both
//! ```

use crate::cgo::{AmplitudeVariant, SolverOptions};
use crate::fields::Grid3;
use crate::materials::{Bump, PhantomSpec, Radii, Target};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    /// 1-based line number, 0 when the problem is not tied to one line.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

/// Which phantom of a pair a bump belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomTag {
    First,
    Second,
    Both,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DirectionConfig {
    /// ρ in lattice units.
    pub rho: [i64; 3],
    pub eta1_seed: [f64; 3],
    pub s_values: Vec<f64>,
    pub variants: Vec<AmplitudeVariant>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayConfig {
    pub levels: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScatterConfig {
    /// Radius of the ρ ball in lattice units.
    pub radius: f64,
    pub variants: Vec<AmplitudeVariant>,
}

/// Acceptance thresholds used to decide exit code 4.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Thresholds {
    pub factorization: f64,
    pub mutation: f64,
    pub maxwell: f64,
    pub vanishing: f64,
    pub decoupling: f64,
    pub equal_pair: f64,
    pub chain: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            factorization: 1e-8,
            mutation: 1e-3,
            maxwell: 1e-10,
            vanishing: 1e-6,
            decoupling: 1e-8,
            equal_pair: 1e-10,
            chain: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub length: f64,
    pub omega: f64,
    pub eps0: f64,
    pub mu0: f64,
    pub floor_fraction: f64,
    pub radii: Option<Radii>,
    pub bumps: Vec<(PhantomTag, Bump)>,
    pub direction: DirectionConfig,
    pub solver: SolverOptions,
    pub decay: DecayConfig,
    pub scatter: ScatterConfig,
    pub thresholds: Thresholds,
    pub seed: u64,
    /// Number of random field pairs per check in `check-ops`.
    pub samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 32,
            length: 1.0,
            omega: 1.0,
            eps0: 1.0,
            mu0: 1.0,
            floor_fraction: 0.1,
            radii: None,
            bumps: Vec::new(),
            direction: DirectionConfig {
                rho: [1, 0, 0],
                eta1_seed: [0.0, 1.0, 0.0],
                s_values: vec![8.0],
                variants: vec![AmplitudeVariant::A, AmplitudeVariant::B],
            },
            solver: SolverOptions::default(),
            decay: DecayConfig { levels: vec![4.0, 8.0, 16.0], samples: 8 },
            scatter: ScatterConfig { radius: 8.0, variants: vec![AmplitudeVariant::A, AmplitudeVariant::B] },
            thresholds: Thresholds::default(),
            seed: 0,
            samples: 4,
        }
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid3, ConfigError> {
        Grid3::new(self.n, self.length).map_err(|e| err(0, format!("[grid]: {e}")))
    }

    /// Phantom 1 (`which = 1`) or phantom 2 (`which = 2`).
    pub fn phantom(&self, which: u8) -> PhantomSpec {
        let keep = |tag: PhantomTag| match tag {
            PhantomTag::Both => true,
            PhantomTag::First => which == 1,
            PhantomTag::Second => which == 2,
        };
        PhantomSpec {
            omega: self.omega,
            eps0: self.eps0,
            mu0: self.mu0,
            floor_fraction: self.floor_fraction,
            radii: self.radii,
            bumps: self.bumps.iter().filter(|(t, _)| keep(*t)).map(|(_, b)| b.clone()).collect(),
        }
    }
}

type Entries = BTreeMap<String, (usize, String)>;

struct Section {
    name: String,
    line: usize,
    entries: Entries,
}

fn split_sections(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim()
                .to_string();
            if name.is_empty() {
                return Err(err(line, "empty section name"));
            }
            if name != "bump" && out.iter().any(|s| s.name == name) {
                return Err(err(line, format!("section [{name}] appears twice")));
            }
            out.push(Section { name, line, entries: Entries::new() });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, found `{content}`")))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(err(line, "empty key"));
        }
        let section = out.last_mut().ok_or_else(|| err(line, "key outside of any section"))?;
        if section.entries.insert(key.clone(), (line, value.trim().to_string())).is_some() {
            return Err(err(line, format!("duplicate key `{key}` in [{}]", section.name)));
        }
    }
    Ok(out)
}

struct Reader<'a> {
    section: &'a str,
    entries: Entries,
}

impl<'a> Reader<'a> {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| err(line, format!("[{}] {key}: cannot parse `{v}`", self.section))),
        }
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<(usize, Vec<T>)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => {
                let items: Result<Vec<T>, _> =
                    v.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).map(str::parse).collect();
                let items = items.map_err(|_| err(line, format!("[{}] {key}: cannot parse `{v}`", self.section)))?;
                if items.is_empty() {
                    return Err(err(line, format!("[{}] {key}: empty list", self.section)));
                }
                Ok(Some((line, items)))
            }
        }
    }

    fn triple<T: std::str::FromStr + Copy>(&mut self, key: &str) -> Result<Option<[T; 3]>, ConfigError> {
        match self.list::<T>(key)? {
            None => Ok(None),
            Some((line, v)) if v.len() != 3 => {
                Err(err(line, format!("[{}] {key}: expected 3 numbers, found {}", self.section, v.len())))
            }
            Some((_, v)) => Ok(Some([v[0], v[1], v[2]])),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(err(line, format!("unknown key `{key}` in [{}]", self.section))),
        }
    }
}

fn variants(line: usize, v: Vec<String>) -> Result<Vec<AmplitudeVariant>, ConfigError> {
    v.iter().map(|s| s.parse().map_err(|e: String| err(line, e))).collect()
}

fn positive(line: usize, what: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(line, format!("{what} must be positive, got {v}")))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut radii: [Option<f64>; 3] = [None; 3];
    for section in split_sections(text)? {
        let name = section.name.clone();
        let mut r = Reader { section: &name, entries: section.entries };
        match name.as_str() {
            "grid" => {
                let line = r.entries.get("n").map(|(l, _)| *l).unwrap_or(section.line);
                if let Some(n) = r.parse("n")? {
                    Grid3::new(n, 1.0).map_err(|e| err(line, e.to_string()))?;
                    cfg.n = n;
                }
                if let Some(l) = r.parse("length")? {
                    cfg.length = l;
                }
            }
            "medium" => {
                for (key, slot) in [
                    ("omega", &mut cfg.omega),
                    ("eps0", &mut cfg.eps0),
                    ("mu0", &mut cfg.mu0),
                    ("floor_fraction", &mut cfg.floor_fraction),
                ] {
                    if let Some(v) = r.parse(key)? {
                        *slot = positive(section.line, key, v)?;
                    }
                }
            }
            "radii" => {
                for (j, key) in ["r_omega", "r_omega_prime", "r_omega_dblprime"].iter().enumerate() {
                    radii[j] = r.parse(key)?;
                }
            }
            "bump" => {
                let line = section.line;
                let target = match r.take("target") {
                    None => return Err(err(line, "[bump] needs `target`")),
                    Some((l, t)) => match t.as_str() {
                        "mu" => Target::Mu,
                        "eps" => Target::Eps,
                        "sigma" => Target::Sigma,
                        other => return Err(err(l, format!("unknown target `{other}` (mu, eps or sigma)"))),
                    },
                };
                let center = r.triple("center")?.unwrap_or([0.0; 3]);
                let radius = r.parse("radius")?.ok_or_else(|| err(line, "[bump] needs `radius`"))?;
                let amplitude = r.parse("amplitude")?.ok_or_else(|| err(line, "[bump] needs `amplitude`"))?;
                let order = r.parse("order")?.unwrap_or(1.0);
                let tag = match r.take("phantom") {
                    None => PhantomTag::Both,
                    Some((l, t)) => match t.as_str() {
                        "1" => PhantomTag::First,
                        "2" => PhantomTag::Second,
                        "both" => PhantomTag::Both,
                        other => return Err(err(l, format!("phantom must be 1, 2 or both, got `{other}`"))),
                    },
                };
                cfg.bumps.push((tag, Bump { target, center, radius, amplitude, order }));
            }
            "direction" => {
                if let Some(rho) = r.triple("rho")? {
                    cfg.direction.rho = rho;
                }
                if let Some(seed) = r.triple("eta1")? {
                    cfg.direction.eta1_seed = seed;
                }
                if let Some((line, s)) = r.list::<f64>("s")? {
                    if let Some(bad) = s.iter().find(|&&v| !(v >= 1.0 && v.is_finite())) {
                        return Err(err(line, format!("s must be ≥ 1, got {bad}")));
                    }
                    cfg.direction.s_values = s;
                }
                if let Some((line, v)) = r.list::<String>("variant")? {
                    cfg.direction.variants = variants(line, v)?;
                }
            }
            "solver" => {
                if let Some(v) = r.parse("tol")? {
                    cfg.solver.tol = positive(section.line, "tol", v)?;
                }
                if let Some(v) = r.parse("max_iter")? {
                    cfg.solver.max_iter = v;
                }
                if let Some(v) = r.parse("reg_floor")? {
                    cfg.solver.reg_floor = positive(section.line, "reg_floor", v)?;
                }
                if let Some(v) = r.parse("compensation_radius")? {
                    cfg.solver.compensation_radius = positive(section.line, "compensation_radius", v)?;
                }
            }
            "decay" => {
                if let Some((line, levels)) = r.list::<f64>("levels")? {
                    if let Some(bad) = levels.iter().find(|&&v| !(v >= 1.0 && v.is_finite())) {
                        return Err(err(line, format!("levels must be ≥ 1, got {bad}")));
                    }
                    cfg.decay.levels = levels;
                }
                if let Some(v) = r.parse("samples")? {
                    cfg.decay.samples = v;
                }
            }
            "scatter" => {
                if let Some(v) = r.parse("radius")? {
                    cfg.scatter.radius = positive(section.line, "radius", v)?;
                }
                if let Some((line, v)) = r.list::<String>("variant")? {
                    cfg.scatter.variants = variants(line, v)?;
                }
            }
            "thresholds" => {
                let t = &mut cfg.thresholds;
                for (key, slot) in [
                    ("factorization", &mut t.factorization),
                    ("mutation", &mut t.mutation),
                    ("maxwell", &mut t.maxwell),
                    ("vanishing", &mut t.vanishing),
                    ("decoupling", &mut t.decoupling),
                    ("equal_pair", &mut t.equal_pair),
                    ("chain", &mut t.chain),
                ] {
                    if let Some(v) = r.parse(key)? {
                        *slot = positive(section.line, key, v)?;
                    }
                }
            }
            "run" => {
                if let Some(v) = r.parse("seed")? {
                    cfg.seed = v;
                }
                if let Some(v) = r.parse("samples")? {
                    cfg.samples = v;
                }
            }
            other => return Err(err(section.line, format!("unknown section [{other}]"))),
        }
        r.finish()?;
    }
    match radii {
        [None, None, None] => {}
        [Some(a), Some(b), Some(c)] => {
            cfg.radii = Some(Radii { r_omega: a, r_omega_prime: b, r_omega_dblprime: c });
        }
        _ => return Err(err(0, "[radii] needs all of r_omega, r_omega_prime, r_omega_dblprime")),
    }
    if cfg.decay.samples == 0 {
        return Err(err(0, "[decay] samples must be at least 1"));
    }
    cfg.grid()?;
    Ok(cfg)
}

//! Run configuration files.
//!
//! One `key = value [unit]` per line, `#` starts a comment. Keys are flat and
//! dotted, values SI. A unit suffix is optional but must match the key when
//! given. Any `cavity.*` key switches the run to cavity mode.
//!
//! ```text
//! species = rb87
//! area = 1e-10 m^2
//! detuning = 1e11 rad/s
//! n_atoms = 1e6
//! photon_flux = 1e15 1/s
//! tau = 1e-3 s
//! cavity.kappa = 1e6 1/s
//! cavity.length = 0.1 m
//! ```
//!
//! Required: `species`, `area`, `detuning`, `n_atoms`, `photon_flux`, `tau`.
//! `species = custom` also needs `species.wavelength` and `species.gamma`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phys::{AtomSpecies, CavityConfig, PhysicalConfig};
use crate::rng::{NoiseSpec, Scheme};

/// Grammar version, written into emitted files and manifests.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub physical: PhysicalConfig,
    pub noise: NoiseSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        self.noise.validate()
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Float(&'static str),
    Int,
    Bool,
    Word,
}

const KEYS: &[(&str, Kind)] = &[
    ("species", Kind::Word),
    ("species.wavelength", Kind::Float("m")),
    ("species.gamma", Kind::Float("1/s")),
    ("area", Kind::Float("m^2")),
    ("detuning", Kind::Float("rad/s")),
    ("n_atoms", Kind::Float("")),
    ("photon_flux", Kind::Float("1/s")),
    ("tau", Kind::Float("s")),
    ("squeeze_r", Kind::Float("")),
    ("spontaneous_emission", Kind::Bool),
    ("seed", Kind::Int),
    ("n_traj", Kind::Int),
    ("n_steps", Kind::Int),
    ("scheme", Kind::Word),
    ("cavity.kappa", Kind::Float("1/s")),
    ("cavity.length", Kind::Float("m")),
    ("cavity.homodyne_start", Kind::Float("s")),
];

#[derive(Debug, Clone)]
enum Value {
    Float(f64),
    Int(u64),
    Bool(bool),
    Word(String),
}

struct Entry {
    line: usize,
    value: Value,
}

fn parse_value(key: &str, kind: Kind, text: &str, line: usize) -> Result<Value> {
    let mut tokens = text.split_whitespace();
    let raw = tokens
        .next()
        .ok_or_else(|| Error::Parse { line, msg: format!("missing value for `{key}`") })?;
    let unit = tokens.next();
    if let Some(extra) = tokens.next() {
        return Err(Error::Parse { line, msg: format!("unexpected token `{extra}`") });
    }
    let expected = match kind {
        Kind::Float(u) => u,
        _ => "",
    };
    if let Some(u) = unit {
        if u != expected {
            return Err(Error::Unit {
                key: key.to_string(),
                line,
                expected: if expected.is_empty() { "no unit" } else { expected },
                found: u.to_string(),
            });
        }
    }
    let bad = |what: &str| Error::Parse { line, msg: format!("`{key}` expects {what}, got `{raw}`") };
    Ok(match kind {
        Kind::Float(_) => {
            let x: f64 = raw.parse().map_err(|_| bad("a number"))?;
            if !x.is_finite() {
                return Err(bad("a finite number"));
            }
            Value::Float(x)
        }
        Kind::Int => Value::Int(raw.parse().map_err(|_| bad("a non-negative integer"))?),
        Kind::Bool => Value::Bool(raw.parse().map_err(|_| bad("true or false"))?),
        Kind::Word => Value::Word(raw.to_string()),
    })
}

fn read_entries(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut out = BTreeMap::new();
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let body = full.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, rest) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got `{body}`") })?;
        let key = key.trim();
        let kind = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, kind)| *kind)
            .ok_or_else(|| Error::UnknownKey { key: key.to_string(), line })?;
        let value = parse_value(key, kind, rest, line)?;
        if let Some(prev) = out.insert(key.to_string(), Entry { line, value }) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key `{key}` (first set at line {})", prev.line),
            });
        }
    }
    Ok(out)
}

struct Fields(BTreeMap<String, Entry>);

impl Fields {
    fn float(&self, key: &str) -> Option<f64> {
        match self.0.get(key).map(|e| &e.value) {
            Some(Value::Float(x)) => Some(*x),
            _ => None,
        }
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.float(key).ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn int(&self, key: &str) -> Option<u64> {
        match self.0.get(key).map(|e| &e.value) {
            Some(Value::Int(x)) => Some(*x),
            _ => None,
        }
    }

    fn word(&self, key: &str) -> Option<&str> {
        match self.0.get(key).map(|e| &e.value) {
            Some(Value::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn flag(&self, key: &str) -> Option<bool> {
        match self.0.get(key).map(|e| &e.value) {
            Some(Value::Bool(b)) => Some(*b),
            _ => None,
        }
    }
}

fn species(f: &Fields) -> Result<AtomSpecies> {
    let custom = (f.float("species.wavelength"), f.float("species.gamma"));
    match f.word("species") {
        Some("rb87") => {
            if custom.0.is_some() || custom.1.is_some() {
                return Err(Error::Config(
                    "species.wavelength and species.gamma are only allowed with species = custom".into(),
                ));
            }
            Ok(AtomSpecies::rb87())
        }
        Some("custom") => match custom {
            (Some(wl), Some(gamma)) => AtomSpecies::new(wl, gamma),
            _ => Err(Error::Config(
                "species = custom needs species.wavelength and species.gamma".into(),
            )),
        },
        Some(other) => Err(Error::Config(format!("unknown species `{other}` (expected rb87 or custom)"))),
        None => Err(Error::Config("missing required key `species`".into())),
    }
}

/// Parse and validate configuration text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let f = Fields(read_entries(text)?);
    let has_cavity = f.0.keys().any(|k| k.starts_with("cavity."));
    let cavity = if has_cavity {
        Some(CavityConfig {
            kappa: f.required("cavity.kappa")?,
            length: f.required("cavity.length")?,
            homodyne_start: f.float("cavity.homodyne_start").unwrap_or(0.0),
        })
    } else {
        None
    };
    let physical = PhysicalConfig {
        species: species(&f)?,
        area: f.required("area")?,
        detuning: f.required("detuning")?,
        n_atoms: f.required("n_atoms")?,
        photon_flux: f.required("photon_flux")?,
        interaction_time: f.required("tau")?,
        squeeze_r: f.float("squeeze_r").unwrap_or(0.0),
        spontaneous_emission: f.flag("spontaneous_emission").unwrap_or(true),
        cavity,
    };
    let defaults = NoiseSpec::default();
    let noise = NoiseSpec {
        seed: f.int("seed").unwrap_or(defaults.seed),
        n_traj: f.int("n_traj").map_or(defaults.n_traj, |n| n as usize),
        n_steps: f.int("n_steps").map_or(defaults.n_steps, |n| n as usize),
        scheme: match f.word("scheme") {
            Some(s) => s.parse()?,
            None => Scheme::default(),
        },
    };
    let cfg = RunConfig { physical, noise };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

/// Canonical text form; `parse_config_str(&emit_config(c))` returns `c`.
pub fn emit_config(cfg: &RunConfig) -> String {
    let p = &cfg.physical;
    let n = &cfg.noise;
    let mut s = format!("# qndsq config v{CONFIG_VERSION}\n");
    let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("write to String");
    if p.species == AtomSpecies::rb87() {
        kv("species", "rb87".into());
    } else {
        kv("species", "custom".into());
        kv("species.wavelength", format!("{:e} m", p.species.transition_wavelength));
        kv("species.gamma", format!("{:e} 1/s", p.species.gamma));
    }
    kv("area", format!("{:e} m^2", p.area));
    kv("detuning", format!("{:e} rad/s", p.detuning));
    kv("n_atoms", format!("{:e}", p.n_atoms));
    kv("photon_flux", format!("{:e} 1/s", p.photon_flux));
    kv("tau", format!("{:e} s", p.interaction_time));
    kv("squeeze_r", format!("{:e}", p.squeeze_r));
    kv("spontaneous_emission", p.spontaneous_emission.to_string());
    kv("seed", n.seed.to_string());
    kv("n_traj", n.n_traj.to_string());
    kv("n_steps", n.n_steps.to_string());
    kv("scheme", n.scheme.to_string());
    if let Some(c) = &p.cavity {
        kv("cavity.kappa", format!("{:e} 1/s", c.kappa));
        kv("cavity.length", format!("{:e} m", c.length));
        kv("cavity.homodyne_start", format!("{:e} s", c.homodyne_start));
    }
    s
}

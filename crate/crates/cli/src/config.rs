//! Scenario configuration: a line-oriented `key = value` format with
//! `[section]` headers. `#` starts a comment. Unknown sections and keys are
//! rejected with the offending line number.
//!
//! ```text
//! [scenario]
//! name = flagship
//! seed = 42
//!
//! [skew]
//! m = 2
//! l_1_2 = 1.5          # λ_ij for i < j, 1-based
//!
//! [profile]
//! name = quartic       # quartic | power | quadratic
//! p = 4                # power only
//! nu = 1               # quadratic only
//!
//! [mode]
//! k = 2
//! eig = largest        # largest | smallest_nonzero | <0-based index>
//!
//! [grid]
//! r = 1
//! n_r = 256
//! n_theta = 512
//! layout = uniform     # uniform | geometric
//! q = 0.97             # geometric only
//!
//! [bumps]
//! count = 20
//!
//! [minimize]
//! n_r = 48
//! n_theta = 96
//! inits = 3
//! amplitude = 0.5
//!
//! [compare]
//! s0 = 0.1, 0.2, 0.3, 0.4, 0.5
//!
//! [probe]
//! samples = 10000
//!
//! [tolerances]
//! weak = 1e-6
//! fs = 1e-6
//! meyers = 1e-5
//! min_slope = 1.5
//!
//! [output]
//! dir = out
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use onehomog_core::quadrature::{Layout, PolarGrid};
use onehomog_core::spectral::{build_lambda, EigSelection, SkewCoefficients, SkewMatrix};
use onehomog_core::RadialProfile;
use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key '{key}' in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key '{key}' in [{section}]")]
    Duplicate { line: usize, section: String, key: String },
    #[error("line {line}: invalid value for {section}.{key}: {msg}")]
    Value {
        line: usize,
        section: String,
        key: String,
        msg: String,
    },
    #[error("{0}")]
    Semantic(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Quartic,
    Power,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSpec {
    pub name: ProfileName,
    pub p: f64,
    pub nu: f64,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<RadialProfile, ConfigError> {
        let sem = |e: onehomog_core::Error| ConfigError::Semantic(e.to_string());
        match self.name {
            ProfileName::Quartic => Ok(RadialProfile::Quartic),
            ProfileName::Power => RadialProfile::power(self.p).map_err(sem),
            ProfileName::Quadratic => RadialProfile::quadratic(self.nu).map_err(sem),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub r: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub layout: String,
    pub q: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<PolarGrid, ConfigError> {
        let layout = match self.layout.as_str() {
            "uniform" => Layout::Uniform,
            _ => Layout::Geometric { q: self.q },
        };
        PolarGrid::new(self.r, self.n_r, self.n_theta, layout).map_err(|e| ConfigError::Semantic(e.to_string()))
    }

    fn scaled(&self, s: f64) -> Self {
        let mut g = self.clone();
        g.n_r = (self.n_r as f64 * s).round() as usize;
        g.n_theta = (self.n_theta as f64 * s).round() as usize;
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub weak: f64,
    pub fs: f64,
    pub meyers: f64,
    pub min_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub m: usize,
    /// `(i, j, λ_ij)`, 1-based.
    pub skew: Vec<(usize, usize, f64)>,
    pub profile: ProfileSpec,
    pub k: u32,
    pub eig: String,
    pub grid: GridSpec,
    pub bumps: usize,
    pub minimize_grid: GridSpec,
    pub inits: usize,
    pub init_amplitude: f64,
    pub s0: Vec<f64>,
    pub probe_samples: usize,
    pub tolerances: Tolerances,
    #[serde(skip)]
    pub output: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "flagship".into(),
            seed: 42,
            m: 2,
            skew: vec![(1, 2, 1.5)],
            profile: ProfileSpec {
                name: ProfileName::Quartic,
                p: 4.0,
                nu: 1.0,
            },
            k: 2,
            eig: "largest".into(),
            grid: GridSpec {
                r: 1.0,
                n_r: PolarGrid::DEFAULT_N_R,
                n_theta: PolarGrid::DEFAULT_N_THETA,
                layout: "uniform".into(),
                q: 0.97,
            },
            bumps: 20,
            minimize_grid: GridSpec {
                r: 1.0,
                n_r: 48,
                n_theta: 96,
                layout: "uniform".into(),
                q: 0.97,
            },
            inits: 3,
            init_amplitude: 0.5,
            s0: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            probe_samples: 10_000,
            tolerances: Tolerances {
                weak: 1e-6,
                fs: 1e-6,
                meyers: 1e-5,
                min_slope: 1.5,
            },
            output: PathBuf::from("out"),
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("scenario", &["name", "seed"]),
    ("skew", &["m"]),
    ("profile", &["name", "p", "nu"]),
    ("mode", &["k", "eig"]),
    ("grid", &["r", "n_r", "n_theta", "layout", "q"]),
    ("bumps", &["count"]),
    ("minimize", &["n_r", "n_theta", "inits", "amplitude"]),
    ("compare", &["s0"]),
    ("probe", &["samples"]),
    ("tolerances", &["weak", "fs", "meyers", "min_slope"]),
    ("output", &["dir"]),
];

struct Entry {
    line: usize,
    value: String,
}

fn parse_skew_key(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("l_")?;
    let (i, j) = rest.split_once('_')?;
    Some((i.parse().ok()?, j.parse().ok()?))
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut table: BTreeMap<(String, String), Entry> = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line,
                    msg: "unterminated section header".into(),
                })?;
                let name = name.trim().to_string();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::UnknownSection { line, section: name });
                }
                section = Some(name);
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: format!("expected 'key = value', found '{body}'"),
            })?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            let sec = section.clone().ok_or_else(|| ConfigError::Syntax {
                line,
                msg: "key outside of any section".into(),
            })?;
            let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            let is_skew = sec == "skew" && parse_skew_key(&key).is_some();
            if !allowed.contains(&key.as_str()) && !is_skew {
                return Err(ConfigError::UnknownKey { line, section: sec, key });
            }
            if table.contains_key(&(sec.clone(), key.clone())) {
                return Err(ConfigError::Duplicate { line, section: sec, key });
            }
            table.insert((sec, key), Entry { line, value });
        }
        Self::from_table(&table)
    }

    fn from_table(table: &BTreeMap<(String, String), Entry>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        fn get<T: std::str::FromStr>(
            table: &BTreeMap<(String, String), Entry>,
            sec: &str,
            key: &str,
        ) -> Result<Option<T>, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            match table.get(&(sec.to_string(), key.to_string())) {
                None => Ok(None),
                Some(e) => e.value.parse::<T>().map(Some).map_err(|err| ConfigError::Value {
                    line: e.line,
                    section: sec.into(),
                    key: key.into(),
                    msg: err.to_string(),
                }),
            }
        }
        let bad = |sec: &str, key: &str, msg: String| {
            let line = table.get(&(sec.to_string(), key.to_string())).map_or(0, |e| e.line);
            ConfigError::Value {
                line,
                section: sec.into(),
                key: key.into(),
                msg,
            }
        };

        if let Some(v) = get::<String>(table, "scenario", "name")? {
            cfg.name = v;
        }
        if let Some(v) = get(table, "scenario", "seed")? {
            cfg.seed = v;
        }
        let explicit_skew: Vec<(usize, usize, f64, usize)> = table
            .iter()
            .filter(|((s, _), _)| s == "skew")
            .filter_map(|((_, k), e)| parse_skew_key(k).map(|(i, j)| (i, j, k.clone(), e)))
            .map(|(i, j, k, e)| {
                e.value.parse::<f64>().map(|v| (i, j, v, e.line)).map_err(|err| ConfigError::Value {
                    line: e.line,
                    section: "skew".into(),
                    key: k,
                    msg: err.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        if let Some(m) = get(table, "skew", "m")? {
            cfg.m = m;
            cfg.skew.clear();
        }
        if !explicit_skew.is_empty() {
            cfg.skew = explicit_skew.iter().map(|&(i, j, v, _)| (i, j, v)).collect();
        }
        for &(i, j, _, line) in &explicit_skew {
            if i < 1 || i >= j || j > cfg.m {
                return Err(ConfigError::Value {
                    line,
                    section: "skew".into(),
                    key: format!("l_{i}_{j}"),
                    msg: format!("need 1 <= i < j <= m = {}", cfg.m),
                });
            }
        }

        if let Some(v) = get::<String>(table, "profile", "name")? {
            cfg.profile.name = match v.as_str() {
                "quartic" => ProfileName::Quartic,
                "power" => ProfileName::Power,
                "quadratic" => ProfileName::Quadratic,
                other => return Err(bad("profile", "name", format!("unknown profile '{other}'"))),
            };
        }
        if let Some(v) = get(table, "profile", "p")? {
            cfg.profile.p = v;
        }
        if let Some(v) = get(table, "profile", "nu")? {
            cfg.profile.nu = v;
        }
        if let Some(v) = get(table, "mode", "k")? {
            cfg.k = v;
        }
        if let Some(v) = get::<String>(table, "mode", "eig")? {
            if !(v == "largest" || v == "smallest_nonzero" || v.parse::<usize>().is_ok()) {
                return Err(bad("mode", "eig", format!("expected largest, smallest_nonzero or an index, found '{v}'")));
            }
            cfg.eig = v;
        }
        read_grid(table, "grid", &mut cfg.grid, get_f64_or_usize(table))?;
        if let Some(v) = get(table, "bumps", "count")? {
            cfg.bumps = v;
        }
        cfg.minimize_grid.r = cfg.grid.r;
        read_grid(table, "minimize", &mut cfg.minimize_grid, get_f64_or_usize(table))?;
        if let Some(v) = get(table, "minimize", "inits")? {
            cfg.inits = v;
        }
        if let Some(v) = get(table, "minimize", "amplitude")? {
            cfg.init_amplitude = v;
        }
        if let Some(e) = table.get(&("compare".to_string(), "s0".to_string())) {
            cfg.s0 = e
                .value
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|err| ConfigError::Value {
                    line: e.line,
                    section: "compare".into(),
                    key: "s0".into(),
                    msg: err.to_string(),
                })?;
        }
        if let Some(v) = get(table, "probe", "samples")? {
            cfg.probe_samples = v;
        }
        if let Some(v) = get(table, "tolerances", "weak")? {
            cfg.tolerances.weak = v;
        }
        if let Some(v) = get(table, "tolerances", "fs")? {
            cfg.tolerances.fs = v;
        }
        if let Some(v) = get(table, "tolerances", "meyers")? {
            cfg.tolerances.meyers = v;
        }
        if let Some(v) = get(table, "tolerances", "min_slope")? {
            cfg.tolerances.min_slope = v;
        }
        if let Some(v) = get::<String>(table, "output", "dir")? {
            cfg.output = PathBuf::from(v);
        }
        if cfg.k == 0 {
            return Err(bad("mode", "k", "k must be >= 1".into()));
        }
        if cfg.m < 2 {
            return Err(bad("skew", "m", "m must be >= 2".into()));
        }
        Ok(cfg)
    }

    /// Multiplies every grid resolution by `s`.
    pub fn with_grid_scale(mut self, s: f64) -> Self {
        self.grid = self.grid.scaled(s);
        self.minimize_grid = self.minimize_grid.scaled(s);
        self
    }

    pub fn lambda(&self) -> Result<SkewMatrix, ConfigError> {
        let mut c = SkewCoefficients::new(self.m);
        for &(i, j, v) in &self.skew {
            c.set(i, j, v);
        }
        build_lambda(&c).map_err(|e| ConfigError::Semantic(e.to_string()))
    }

    pub fn selection(&self) -> EigSelection {
        match self.eig.as_str() {
            "largest" => EigSelection::Largest,
            "smallest_nonzero" => EigSelection::SmallestNonzero,
            idx => EigSelection::Index(idx.parse().unwrap_or(0)),
        }
    }

    /// The single planar coefficient `λ = λ_12`.
    pub fn planar_lambda(&self) -> f64 {
        self.skew.iter().find(|(i, j, _)| (*i, *j) == (1, 2)).map_or(0.0, |t| t.2)
    }
}

type Getter<'a> = Box<dyn Fn(&str, &str) -> Result<Option<String>, ConfigError> + 'a>;

fn get_f64_or_usize(table: &BTreeMap<(String, String), Entry>) -> Getter<'_> {
    Box::new(move |sec, key| Ok(table.get(&(sec.to_string(), key.to_string())).map(|e| e.value.clone())))
}

fn read_grid(
    table: &BTreeMap<(String, String), Entry>,
    sec: &str,
    grid: &mut GridSpec,
    raw: Getter<'_>,
) -> Result<(), ConfigError> {
    let err = |key: &str, msg: String| ConfigError::Value {
        line: table.get(&(sec.to_string(), key.to_string())).map_or(0, |e| e.line),
        section: sec.into(),
        key: key.into(),
        msg,
    };
    if let Some(v) = raw(sec, "r")? {
        grid.r = v.parse().map_err(|e: std::num::ParseFloatError| err("r", e.to_string()))?;
    }
    if let Some(v) = raw(sec, "n_r")? {
        grid.n_r = v.parse().map_err(|e: std::num::ParseIntError| err("n_r", e.to_string()))?;
    }
    if let Some(v) = raw(sec, "n_theta")? {
        grid.n_theta = v.parse().map_err(|e: std::num::ParseIntError| err("n_theta", e.to_string()))?;
    }
    if let Some(v) = raw(sec, "layout")? {
        if v != "uniform" && v != "geometric" {
            return Err(err("layout", format!("expected uniform or geometric, found '{v}'")));
        }
        grid.layout = v;
    }
    if let Some(v) = raw(sec, "q")? {
        grid.q = v.parse().map_err(|e: std::num::ParseFloatError| err("q", e.to_string()))?;
    }
    Ok(())
}

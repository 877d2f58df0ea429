//! Run configuration: a sectioned `key = value` file plus command-line
//! overrides.
//!
//! ```text
//! # comments start with '#'
//! [pair]
//! family = space_form        # or lagrangian
//! n = 2
//! k = 1
//! hyperbolic = false
//!
//! [grid]
//! counts = 65                # one value for every axis, or one per axis
//! spacing = 0.05
//! origin = 0
//! adapt = false              # scan: use spacing h/R_λ for generated data
//!
//! [lambda]
//! values = 0.5 1 2 3         # or: sweep = MIN MAX COUNT [log|linear]
//!
//! [data]
//! source = soliton           # soliton | commuting | vacuum | file
//! loop = real                # real | circle
//! path = field.txt           # source = file; relative to this config
//! seed = 7
//! warp = 0
//! scale = 1
//! defect = mc 1e-2           # optional planted defect: mc | lagrangian
//!
//! [tolerances]
//! sec_dev = 1e-3
//!
//! [output]
//! dir = out
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use reflow::geom::Budgets;
use reflow::liecore::Family;
use reflow::loops::{GridChart, Spectral};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Soliton,
    Commuting,
    Vacuum,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DefectKind {
    /// Localized bump in `a`: breaks the zero-curvature equations.
    Mc,
    /// `c₂ += δ·J₀c₁`: tilts the immersion off Lagrangian.
    Lagrangian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Defect {
    pub kind: DefectKind,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweep {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub hyperbolic: bool,
    pub counts: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub adapt: bool,
    pub lambdas: Vec<f64>,
    pub source: Source,
    pub spectral: Spectral,
    pub path: Option<PathBuf>,
    pub seed: u64,
    pub warp: f64,
    pub scale: f64,
    pub defect: Option<Defect>,
    pub budgets: Budgets,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: Family::SpaceForm,
            n: 2,
            k: 1,
            hyperbolic: false,
            counts: vec![65],
            spacing: vec![0.05],
            origin: vec![0.0],
            adapt: false,
            lambdas: vec![2.0],
            source: Source::Soliton,
            spectral: Spectral::Real,
            path: None,
            seed: 7,
            warp: 0.0,
            scale: 1.0,
            defect: None,
            budgets: Budgets::default(),
            out: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, s: &str) -> CResult<T> {
    s.parse().map_err(|_| ConfigError(format!("{key}: cannot parse {s:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> CResult<Vec<T>> {
    let items: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty()).collect();
    if items.is_empty() {
        return err(format!("{key}: empty list"));
    }
    items.into_iter().map(|w| parse_num(key, w)).collect()
}

fn parse_bool(key: &str, s: &str) -> CResult<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => err(format!("{key}: expected true or false, got {s:?}")),
    }
}

/// Values of a λ sweep, in increasing order.
pub fn sweep_values(s: &LambdaSweep) -> CResult<Vec<f64>> {
    if s.count < 2 || !(s.max > s.min) {
        return err("lambda sweep needs count ≥ 2 and max > min");
    }
    if s.log && !(s.min > 0.0) {
        return err("a log sweep needs min > 0");
    }
    let t = |i: usize| i as f64 / (s.count - 1) as f64;
    Ok((0..s.count)
        .map(|i| if s.log { (s.min.ln() + t(i) * (s.max.ln() - s.min.ln())).exp() } else { s.min + t(i) * (s.max - s.min) })
        .collect())
}

fn parse_sweep(s: &str) -> CResult<LambdaSweep> {
    let words: Vec<&str> = s.split_whitespace().collect();
    let log = match words.get(3).copied() {
        None | Some("linear") => false,
        Some("log") => true,
        Some(other) => return err(format!("sweep: unknown spacing {other:?}")),
    };
    if !(3..=4).contains(&words.len()) {
        return err("sweep: expected MIN MAX COUNT [log|linear]");
    }
    Ok(LambdaSweep {
        min: parse_num("sweep", words[0])?,
        max: parse_num("sweep", words[1])?,
        count: parse_num("sweep", words[2])?,
        log,
    })
}

/// Parses `NAME=VALUE`.
pub fn parse_tol(s: &str) -> CResult<(String, f64)> {
    let (name, value) = s.split_once('=').ok_or_else(|| ConfigError(format!("--tol expects NAME=VAL, got {s:?}")))?;
    Ok((name.trim().to_string(), parse_num(name, value.trim())?))
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> CResult<RunConfig> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !["pair", "grid", "lambda", "data", "tolerances", "output"].contains(&name.as_str()) {
                    return err(format!("line {}: unknown section [{name}]", no + 1));
                }
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some(section) = &current else {
                return err(format!("line {}: key outside of any section", no + 1));
            };
            let (key, value) =
                line.split_once('=').ok_or_else(|| ConfigError(format!("line {}: expected key = value", no + 1)))?;
            let slot = sections.get_mut(section).expect("section exists");
            if slot.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
                return err(format!("line {}: duplicate key {}", no + 1, key.trim()));
            }
        }

        let mut cfg = RunConfig::default();
        for (section, entries) in &sections {
            for (key, value) in entries {
                let v = value.as_str();
                match (section.as_str(), key.as_str()) {
                    ("pair", "family") => {
                        cfg.family = Family::parse(v).ok_or_else(|| ConfigError(format!("unknown family {v:?}")))?
                    }
                    ("pair", "n") => cfg.n = parse_num(key, v)?,
                    ("pair", "k") => cfg.k = parse_num(key, v)?,
                    ("pair", "hyperbolic") => cfg.hyperbolic = parse_bool(key, v)?,
                    ("grid", "counts") => cfg.counts = parse_list(key, v)?,
                    ("grid", "spacing") => cfg.spacing = parse_list(key, v)?,
                    ("grid", "origin") => cfg.origin = parse_list(key, v)?,
                    ("grid", "adapt") => cfg.adapt = parse_bool(key, v)?,
                    ("lambda", "values") => cfg.lambdas = parse_list(key, v)?,
                    ("lambda", "sweep") => cfg.lambdas = sweep_values(&parse_sweep(v)?)?,
                    ("data", "source") => {
                        cfg.source = match v {
                            "soliton" => Source::Soliton,
                            "commuting" => Source::Commuting,
                            "vacuum" => Source::Vacuum,
                            "file" => Source::File,
                            _ => return err(format!("unknown data source {v:?}")),
                        }
                    }
                    ("data", "loop") => {
                        cfg.spectral =
                            Spectral::parse(v).ok_or_else(|| ConfigError(format!("unknown loop kind {v:?}")))?
                    }
                    ("data", "path") => cfg.path = Some(base_dir.join(v)),
                    ("data", "seed") => cfg.seed = parse_num(key, v)?,
                    ("data", "warp") => cfg.warp = parse_num(key, v)?,
                    ("data", "scale") => cfg.scale = parse_num(key, v)?,
                    ("data", "defect") => {
                        let words: Vec<&str> = v.split_whitespace().collect();
                        let [kind, amp] = words.as_slice() else {
                            return err("defect: expected KIND AMPLITUDE");
                        };
                        let kind = match *kind {
                            "mc" => DefectKind::Mc,
                            "lagrangian" => DefectKind::Lagrangian,
                            _ => return err(format!("unknown defect kind {kind:?}")),
                        };
                        cfg.defect = Some(Defect { kind, amplitude: parse_num("defect", amp)? });
                    }
                    ("tolerances", name) => {
                        let x = parse_num(name, v)?;
                        cfg.budgets.set(name, x).map_err(|e| ConfigError(e.to_string()))?;
                    }
                    ("output", "dir") => cfg.out = PathBuf::from(v),
                    _ => return err(format!("unknown key {key} in [{section}]")),
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn set_lambdas(&mut self, s: &str) -> CResult<()> {
        self.lambdas = parse_list("--lambda", s)?;
        Ok(())
    }

    pub fn set_tol(&mut self, s: &str) -> CResult<()> {
        let (name, value) = parse_tol(s)?;
        self.budgets.set(&name, value).map_err(|e| ConfigError(e.to_string()))
    }

    fn per_axis<T: Copy>(&self, key: &str, v: &[T]) -> CResult<Vec<T>> {
        match v.len() {
            1 => Ok(vec![v[0]; self.n]),
            l if l == self.n => Ok(v.to_vec()),
            l => err(format!("grid {key}: {l} values for {} axes", self.n)),
        }
    }

    /// The chart, with every spacing divided by `shrink`.
    pub fn chart(&self, shrink: f64) -> CResult<GridChart> {
        let spacing = self.per_axis("spacing", &self.spacing)?.into_iter().map(|h| h / shrink).collect();
        GridChart::new(self.per_axis("counts", &self.counts)?, spacing, self.per_axis("origin", &self.origin)?)
            .map_err(|e| ConfigError(e.to_string()))
    }

    /// Checks the invariants that do not need the data.
    pub fn validate(&self) -> CResult<()> {
        if self.lambdas.is_empty() {
            return err("no λ values");
        }
        for &l in &self.lambdas {
            if !l.is_finite() || (self.spectral == Spectral::Real && l == 0.0) {
                return err(format!("λ = {l} is not allowed"));
            }
            self.spectral.homothety(l).map_err(|e| ConfigError(e.to_string()))?;
        }
        if self.counts.iter().any(|&c| c < 3) {
            return err("grid counts must be at least 3");
        }
        if !(self.scale > 0.0) {
            return err("scale must be positive");
        }
        if self.source == Source::File && self.path.is_none() {
            return err("source = file needs a path");
        }
        self.chart(1.0)?;
        Ok(())
    }
}

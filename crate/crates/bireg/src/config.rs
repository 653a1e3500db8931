//! Flat `key = value` scenario files.
//!
//! ```text
//! graph = benchmark.txt     # edge list, relative to this file
//! exosystem = vanderpol     # or constant2
//! v0 = 0.1, 0.2
//! mu = auto                 # max(10, safety_factor * mu_1), or a number
//! safety_factor = 2
//! dt = 0.001
//! t_final = 30
//! poles = -2, -2            # one per order, or a single repeated pole
//! record_every = 10
//! agent1.x0 = 0.3, 0.4      # omit every x0 for an observer-only run
//! agent1.eta0 = 0, 0        # defaults to zero
//! agent1.nonlinearity = pendulum
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bireg_core::engine::DEFAULT_BLOWUP_THRESHOLD;
use bireg_core::presets::BENCHMARK_MIN_GAIN;
use bireg_core::regulation::Nonlinearity;
use bireg_core::{
    build_xmaps, builtin_exosystem, choose_gains, design_gain, structural_balance, ControlledAgent, EngineError,
    Pendulum, RegulatedAgent, RegulationError, Scenario, ZeroNonlinearity, DEFAULT_SAFETY_FACTOR,
};
use nalgebra::{Complex, DMatrix};

use crate::graph_io::{read_edge_list, EdgeListError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("graph file: {0}")]
    Graph(#[from] EdgeListError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Regulation(#[from] RegulationError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GainSetting {
    /// `max(10, safety_factor * mu_1)`.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct AgentConfig {
    pub x0: Option<Vec<f64>>,
    pub eta0: Option<Vec<f64>>,
    pub nonlinearity: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub graph: PathBuf,
    pub exosystem: String,
    pub v0: Vec<f64>,
    pub mu: GainSetting,
    pub safety_factor: f64,
    pub dt: f64,
    pub t_final: f64,
    pub poles: Vec<Complex<f64>>,
    pub record_every: usize,
    pub blowup_threshold: f64,
    /// Indexed by follower, `agents[0]` is `agent1`.
    pub agents: Vec<AgentConfig>,
}

/// Parses `-2`, `-1.5+2i` or `-1-0.5i`.
pub fn parse_pole(s: &str) -> Option<Complex<f64>> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| Complex::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    // split at the last sign that is not leading and not an exponent sign
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im_text = &body[split..];
    let im: f64 = match im_text {
        "+" => 1.0,
        "-" => -1.0,
        t => t.parse().ok()?,
    };
    Some(Complex::new(re, im))
}

fn parse_list(value: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| ConfigError::Syntax { line, message: format!("invalid number {:?}", t.trim()) })
        })
        .collect()
}

fn parse_number<T: std::str::FromStr>(value: &str, line: usize) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Syntax { line, message: format!("invalid value {value:?}") })
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, message: format!("expected `key = value`, got {content:?}") });
        };
        let key = key.trim().to_string();
        if entries.insert(key.clone(), (line, value.trim().to_string())).is_some() {
            return Err(ConfigError::Syntax { line, message: format!("duplicate key `{key}`") });
        }
    }

    let mut cfg = ScenarioConfig {
        graph: PathBuf::new(),
        exosystem: String::new(),
        v0: Vec::new(),
        mu: GainSetting::Auto,
        safety_factor: DEFAULT_SAFETY_FACTOR,
        dt: 1e-3,
        t_final: 30.0,
        poles: vec![Complex::new(-2.0, 0.0)],
        record_every: 1,
        blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        agents: Vec::new(),
    };
    let (mut has_graph, mut has_exo, mut has_v0) = (false, false, false);
    for (key, (line, value)) in &entries {
        let line = *line;
        match key.as_str() {
            "graph" => {
                cfg.graph = PathBuf::from(value);
                has_graph = true;
            }
            "exosystem" => {
                cfg.exosystem = value.clone();
                has_exo = true;
            }
            "v0" => {
                cfg.v0 = parse_list(value, line)?;
                has_v0 = true;
            }
            "mu" => {
                cfg.mu = if value == "auto" { GainSetting::Auto } else { GainSetting::Fixed(parse_number(value, line)?) }
            }
            "safety_factor" => cfg.safety_factor = parse_number(value, line)?,
            "dt" => cfg.dt = parse_number(value, line)?,
            "t_final" => cfg.t_final = parse_number(value, line)?,
            "record_every" => cfg.record_every = parse_number(value, line)?,
            "blowup_threshold" => cfg.blowup_threshold = parse_number(value, line)?,
            "poles" => {
                cfg.poles = value
                    .split(',')
                    .map(|t| parse_pole(t).ok_or_else(|| ConfigError::Syntax { line, message: format!("invalid pole {:?}", t.trim()) }))
                    .collect::<Result<_, _>>()?;
            }
            other => {
                let agent = other
                    .strip_prefix("agent")
                    .and_then(|rest| rest.split_once('.'))
                    .and_then(|(idx, field)| idx.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| (i, field)));
                let Some((idx, field)) = agent else {
                    return Err(ConfigError::Syntax { line, message: format!("unknown key `{other}`") });
                };
                if cfg.agents.len() < idx {
                    cfg.agents.resize(idx, AgentConfig::default());
                }
                let slot = &mut cfg.agents[idx - 1];
                match field {
                    "x0" => slot.x0 = Some(parse_list(value, line)?),
                    "eta0" => slot.eta0 = Some(parse_list(value, line)?),
                    "nonlinearity" => slot.nonlinearity = Some(value.clone()),
                    f => return Err(ConfigError::Syntax { line, message: format!("unknown agent field `{f}`") }),
                }
            }
        }
    }
    if !has_graph {
        return Err(ConfigError::Missing("graph"));
    }
    if !has_exo {
        return Err(ConfigError::Missing("exosystem"));
    }
    if !has_v0 {
        return Err(ConfigError::Missing("v0"));
    }
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

fn nonlinearity(name: &str, order: usize) -> Result<Arc<dyn Nonlinearity>, ConfigError> {
    match name {
        "pendulum" if order >= 2 => Ok(Arc::new(Pendulum)),
        "pendulum" => Err(ConfigError::Invalid(format!("pendulum agents need order >= 2, got {order}"))),
        "zero" => Ok(Arc::new(ZeroNonlinearity)),
        other => Err(ConfigError::Invalid(format!("unknown nonlinearity `{other}`"))),
    }
}

/// The gain a config resolves to, and the bound it was derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedGain {
    pub mu: f64,
    pub mu_bound: f64,
}

impl ScenarioConfig {
    /// Resolves paths against `base_dir` and assembles the scenario.
    pub fn build(&self, base_dir: &Path) -> Result<(Scenario, ResolvedGain), ConfigError> {
        let graph = read_edge_list(&base_dir.join(&self.graph))?;
        let exo = builtin_exosystem(&self.exosystem)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown exosystem `{}` (expected vanderpol or constant2)", self.exosystem)))?;
        let n = graph.n_followers();
        let m = exo.dim_state();
        let partition = structural_balance(&graph).map_err(EngineError::from)?;
        let design = design_gain(&graph, &partition, exo.as_ref(), self.safety_factor)?;
        let mu = match self.mu {
            GainSetting::Auto => design.recommended.max(BENCHMARK_MIN_GAIN),
            GainSetting::Fixed(mu) => mu,
        };
        if self.agents.len() > n {
            return Err(ConfigError::Invalid(format!("agent{} configured but the graph has {n} followers", self.agents.len())));
        }
        let mut eta0 = DMatrix::zeros(n, m);
        for (i, a) in self.agents.iter().enumerate() {
            if let Some(e) = &a.eta0 {
                if e.len() != m {
                    return Err(ConfigError::Invalid(format!("agent{}.eta0 has {} entries, expected {m}", i + 1, e.len())));
                }
                eta0.row_mut(i).copy_from_slice(e);
            }
        }
        let mut sc = Scenario::new(graph, partition, exo.clone(), mu, self.v0.clone(), eta0, self.t_final, self.dt);
        sc.record_every = self.record_every;
        sc.blowup_threshold = self.blowup_threshold;

        let with_states = self.agents.iter().filter(|a| a.x0.is_some()).count();
        if with_states > 0 {
            if with_states != n || self.agents.len() != n {
                return Err(ConfigError::Invalid(format!("x0 given for {with_states} of {n} agents; give all or none")));
            }
            let mut agents = Vec::with_capacity(n);
            for (i, a) in self.agents.iter().enumerate() {
                let x0 = a.x0.clone().expect("checked above");
                let r = x0.len();
                let f = nonlinearity(a.nonlinearity.as_deref().unwrap_or("pendulum"), r)?;
                let poles = match self.poles.len() {
                    1 => vec![self.poles[0]; r],
                    k if k == r => self.poles.clone(),
                    k => return Err(ConfigError::Invalid(format!("agent{} has order {r} but {k} poles are given", i + 1))),
                };
                let gains = choose_gains(&poles)?;
                let xmaps = build_xmaps(exo.clone(), r, None)?;
                agents.push(ControlledAgent::new(RegulatedAgent::new(f, x0)?, gains, xmaps)?);
            }
            sc = sc.with_agents(agents);
        }
        sc.validate()?;
        Ok((sc, ResolvedGain { mu, mu_bound: design.mu_bound }))
    }
}

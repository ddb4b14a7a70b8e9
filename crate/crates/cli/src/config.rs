//! Experiment configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! mode = "nm1"
//! times = [15.0]
//!
//! [params]
//! base = "fig2"
//! g1 = 1.5
//!
//! [[sweep]]
//! name = "tau"
//! min = 0.02
//! max = 1.0
//! points = 50
//!
//! [output]
//! path = "fig2_mid.csv"
//! ```

use std::fmt;
use std::path::PathBuf;

use colltur_core::model::ModelParams;
use serde::Deserialize;

/// What each grid point computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Scaled steady-state cumulants and `Q_cl`.
    MarkovNess,
    /// Finite-time Markovian cumulants and `Q_cl^FT` at each time.
    MarkovFt,
    /// `Q_cl` together with the quantum bound `Q_q`.
    Qtur,
    /// Finite collision time, fresh ancillas.
    Nm1,
    /// Ancilla chain coupled by partial SWAPs.
    Nm2,
    /// BLP non-Markovianity accumulated up to each time.
    Blp,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::MarkovNess => "markov_ness",
            Mode::MarkovFt => "markov_ft",
            Mode::Qtur => "qtur",
            Mode::Nm1 => "nm1",
            Mode::Nm2 => "nm2",
            Mode::Blp => "blp",
        }
    }

    /// Whether rows are indexed by time.
    pub fn uses_times(self) -> bool {
        !matches!(self, Mode::MarkovNess | Mode::Qtur)
    }
}

/// Entropy production entering a finite-time ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaVariant {
    /// Steady-state rate times `t`.
    #[default]
    RateTimesT,
    /// `Σ_t` integrated along the trajectory.
    Integrated,
    /// The rate `σ_t` at the row's time; `q` is left empty.
    Instantaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let (a, b) = ((last - i as f64) / last, i as f64 / last);
                match self.scale {
                    Scale::Linear => a * self.min + b * self.max,
                    Scale::Log => (a * self.min.ln() + b * self.max.ln()).exp(),
                }
            })
            .collect()
    }
}

/// Explicit list of times, or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Times {
    List(Vec<f64>),
    Range { min: f64, max: f64, points: usize },
}

impl Default for Times {
    fn default() -> Self {
        Times::List(Vec::new())
    }
}

impl Times {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Times::List(v) => v.clone(),
            Times::Range { min, max, points } => SweepAxis {
                name: String::new(),
                min: *min,
                max: *max,
                points: *points,
                scale: Scale::Linear,
            }
            .values(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

/// Parameter table: an optional named base set plus overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub base: Option<String>,
    pub omega_s: Option<f64>,
    pub omega_a: Option<f64>,
    pub omega: Option<f64>,
    pub nu: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub temp_s: Option<f64>,
    pub temp_a: Option<f64>,
    pub tau: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlpKind {
    /// GKSL evolution.
    Markov,
    /// Approach I sampled inside each collision.
    Nm1,
    /// Approach I sampled at collision boundaries.
    Nm1Boundary,
    Nm2,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlpOptions {
    pub dynamics: BlpKind,
    /// Points on the Bloch-sphere grid of initial pairs.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Sampling interval of Markovian runs.
    pub dt: Option<f64>,
}

fn default_grid() -> usize {
    colltur_core::nmq::DEFAULT_GRID
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub times: Times,
    /// Counting-field step; defaults to `1e-3/ω_A`.
    pub chi_step: Option<f64>,
    /// Intra-collision samples for approach I BLP runs.
    pub substeps: Option<usize>,
    #[serde(default)]
    pub sigma: SigmaVariant,
    pub blp: Option<BlpOptions>,
    pub output: Output,
    /// Worker threads; 0 or absent uses all cores.
    #[serde(default)]
    pub threads: usize,
}

/// A config problem, located by its field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

pub const PARAM_NAMES: [&str; 10] = [
    "omega_s", "omega_a", "omega", "nu", "g1", "g2", "temp_s", "temp_a", "tau", "epsilon",
];

/// Mutable access to a parameter by its config name.
pub fn param_mut<'a>(p: &'a mut ModelParams, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "omega_s" => &mut p.omega_s,
        "omega_a" => &mut p.omega_a,
        "omega" => &mut p.omega,
        "nu" => &mut p.nu,
        "g1" => &mut p.g1,
        "g2" => &mut p.g2,
        "temp_s" => &mut p.temp_s,
        "temp_a" => &mut p.temp_a,
        "tau" => &mut p.tau,
        "epsilon" => &mut p.epsilon,
        _ => return None,
    })
}

fn base_params(name: &str) -> Option<ModelParams> {
    match name {
        "fig1" => Some(ModelParams::fig1()),
        "fig2" => Some(ModelParams::fig2()),
        "fig3" => Some(ModelParams::fig3()),
        _ => None,
    }
}

impl Params {
    pub fn resolve(&self) -> Result<ModelParams, ConfigError> {
        let name = self.base.as_deref().unwrap_or("fig1");
        let mut p = base_params(name).ok_or_else(|| {
            ConfigError::new("params.base", format!("unknown base `{name}` (expected fig1, fig2 or fig3)"))
        })?;
        let overrides = [
            ("omega_s", self.omega_s),
            ("omega_a", self.omega_a),
            ("omega", self.omega),
            ("nu", self.nu),
            ("g1", self.g1),
            ("g2", self.g2),
            ("temp_s", self.temp_s),
            ("temp_a", self.temp_a),
            ("tau", self.tau),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in overrides {
            if let Some(v) = v {
                *param_mut(&mut p, name).expect("known field") = v;
            }
        }
        Ok(p)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| line_col(text, s.start)).unwrap_or_default();
            ConfigError::new(path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let base = self.params.resolve()?;
        base.validate().map_err(|e| ConfigError::new("params", e.to_string()))?;
        if self.sweep.len() > 2 {
            return Err(ConfigError::new("sweep", format!("at most two axes, got {}", self.sweep.len())));
        }
        for (i, axis) in self.sweep.iter().enumerate() {
            let at = |field: &str| format!("sweep[{i}].{field}");
            if !PARAM_NAMES.contains(&axis.name.as_str()) {
                return Err(ConfigError::new(
                    at("name"),
                    format!("unknown parameter `{}` (expected one of {})", axis.name, PARAM_NAMES.join(", ")),
                ));
            }
            if self.sweep[..i].iter().any(|a| a.name == axis.name) {
                return Err(ConfigError::new(at("name"), format!("`{}` is swept twice", axis.name)));
            }
            if axis.points < 1 {
                return Err(ConfigError::new(at("points"), "must be >= 1"));
            }
            if !axis.min.is_finite() || !axis.max.is_finite() {
                return Err(ConfigError::new(at("min"), "bounds must be finite"));
            }
            if axis.scale == Scale::Log && !(axis.min > 0.0 && axis.max > 0.0) {
                return Err(ConfigError::new(at("scale"), "log axes need positive bounds"));
            }
            // Every check in ModelParams::validate is a per-field range, so
            // the two ends of an axis cover all its points.
            for (end, v) in [("min", axis.min), ("max", axis.max)] {
                let mut p = base;
                *param_mut(&mut p, &axis.name).expect("checked above") = v;
                p.validate().map_err(|e| ConfigError::new(at(end), e.to_string()))?;
            }
        }
        let times = self.times.values();
        if let Times::Range { points: 0, .. } = self.times {
            return Err(ConfigError::new("times.points", "must be >= 1"));
        }
        if self.mode.uses_times() {
            if times.is_empty() {
                return Err(ConfigError::new("times", format!("mode `{}` needs at least one time", self.mode.name())));
            }
            if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
                return Err(ConfigError::new("times", format!("times must be finite and > 0, got {t}")));
            }
        } else if !times.is_empty() {
            return Err(ConfigError::new("times", format!("mode `{}` is asymptotic and takes no times", self.mode.name())));
        }
        if let Some(h) = self.chi_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ConfigError::new("chi_step", format!("must be finite and > 0, got {h}")));
            }
        }
        if self.substeps == Some(0) {
            return Err(ConfigError::new("substeps", "must be >= 1"));
        }
        let sigma_ok = match self.sigma {
            SigmaVariant::RateTimesT => true,
            SigmaVariant::Integrated => matches!(self.mode, Mode::MarkovFt | Mode::Nm1 | Mode::Nm2),
            SigmaVariant::Instantaneous => matches!(self.mode, Mode::Nm1 | Mode::Nm2),
        };
        if !sigma_ok {
            return Err(ConfigError::new("sigma", format!("not available in mode `{}`", self.mode.name())));
        }
        match (&self.blp, self.mode) {
            (None, Mode::Blp) => return Err(ConfigError::new("blp", "mode `blp` needs a [blp] table")),
            (Some(_), m) if m != Mode::Blp => {
                return Err(ConfigError::new("blp", format!("not used by mode `{}`", m.name())))
            }
            (Some(b), _) => {
                if b.grid < 1 {
                    return Err(ConfigError::new("blp.grid", "must be >= 1"));
                }
                match (b.dynamics, b.dt) {
                    (BlpKind::Markov, None) => {
                        return Err(ConfigError::new("blp.dt", "Markovian runs need a sampling interval"))
                    }
                    (BlpKind::Markov, Some(dt)) if !(dt > 0.0 && dt.is_finite()) => {
                        return Err(ConfigError::new("blp.dt", format!("must be finite and > 0, got {dt}")))
                    }
                    (BlpKind::Markov, _) => {}
                    (_, Some(_)) => return Err(ConfigError::new("blp.dt", "only used with dynamics = \"markov\"")),
                    (_, None) => {}
                }
            }
            _ => {}
        }
        if self.output.path.as_os_str().is_empty() {
            return Err(ConfigError::new("output.path", "must not be empty"));
        }
        Ok(())
    }

    /// Base parameters with overrides applied.
    pub fn base_params(&self) -> ModelParams {
        self.params.resolve().expect("validated config")
    }

    /// Grid points in row order: the first axis varies slowest.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.sweep {
            let vals = axis.values();
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        points
    }

    /// Parameters at one grid point.
    pub fn params_at(&self, point: &[f64]) -> ModelParams {
        let mut p = self.base_params();
        for (axis, &v) in self.sweep.iter().zip(point) {
            *param_mut(&mut p, &axis.name).expect("validated axis") = v;
        }
        p
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.sweep.iter().map(|a| a.name.as_str()).collect()
    }
}

fn line_col(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    format!("line {line}, column {col}")
}

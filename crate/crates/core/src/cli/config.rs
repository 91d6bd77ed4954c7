//! Experiment configuration files (TOML, schema `gsqmc-config/1`).

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use serde::Deserialize;
use toml::Spanned;

use crate::lowdisc::{SequenceKind, SOBOL_MAX_DIMENSION};
use crate::premium_flow::BarrierPremium;
use crate::reference::reference_for;
use crate::risk_model::{Distribution, ModelParams, Penalty};

pub const CONFIG_SCHEMA: &str = "gsqmc-config/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Estimates over the N and level grids.
    Table,
    /// Like `table`, but a reference value must exist so every row has an
    /// absolute error.
    ErrorCurve,
    /// Estimates over a list of starting capitals.
    XSweep,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Table => "table",
            ExperimentKind::ErrorCurve => "error_curve",
            ExperimentKind::XSweep => "x_sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Model at the first starting capital.
    pub model: ModelParams,
    pub x_values: Vec<f64>,
    pub n_levels: Vec<usize>,
    pub n_points: Vec<usize>,
    pub generators: Vec<SequenceKind>,
    pub seeds: Vec<u64>,
    pub skip: u64,
    /// QMC generators that are scrambled with the seed.
    pub scramble: Vec<SequenceKind>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    /// Number of output rows a run produces.
    pub fn row_count(&self) -> usize {
        let per_generator: usize = self
            .generators
            .iter()
            .map(|g| if self.uses_seed(*g) { self.seeds.len() } else { 1 })
            .sum();
        self.x_values.len() * per_generator * self.n_levels.len() * self.n_points.len()
    }

    /// Whether the generator consumes the seed (MC always, QMC if scrambled).
    pub fn uses_seed(&self, g: SequenceKind) -> bool {
        g == SequenceKind::Pseudorandom || self.scramble.contains(&g)
    }
}

/// A configuration problem, located by line where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: Spanned<String>,
    kind: Spanned<ExperimentKind>,
    model: RawModel,
    run: RawRun,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    x: Option<Spanned<f64>>,
    delta: Spanned<f64>,
    penalty: Spanned<Penalty>,
    premium: Spanned<BarrierPremium>,
    interarrival: Spanned<Distribution>,
    claim: Spanned<Distribution>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_levels: Spanned<Vec<usize>>,
    n_points: Spanned<Vec<usize>>,
    generators: Spanned<Vec<SequenceKind>>,
    seeds: Option<Spanned<Vec<u64>>>,
    skip: Option<Spanned<u64>>,
    scramble: Option<Spanned<Vec<SequenceKind>>>,
    x_values: Option<Spanned<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<String>,
    format: Option<OutputFormat>,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let at = |span: Range<usize>, message: String| ConfigError {
        line: Some(line_of(text, span.start)),
        message,
    };

    if raw.schema.get_ref() != CONFIG_SCHEMA {
        return Err(at(
            raw.schema.span(),
            format!("unsupported schema {:?}, expected {CONFIG_SCHEMA:?}", raw.schema.get_ref()),
        ));
    }
    let kind = *raw.kind.get_ref();
    let m = &raw.model;

    let premium = *m.premium.get_ref();
    premium
        .validate()
        .map_err(|e| at(m.premium.span(), e.to_string()))?;
    for d in [&m.interarrival, &m.claim] {
        d.get_ref().validate().map_err(|e| at(d.span(), e.to_string()))?;
    }
    let delta = *m.delta.get_ref();
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(at(m.delta.span(), format!("delta must be finite and >= 0, got {delta}")));
    }
    let in_range = |x: f64| x >= 0.0 && x < premium.a;

    let x_values = match (kind, &m.x, &raw.run.x_values) {
        (ExperimentKind::XSweep, _, Some(xs)) => {
            if xs.get_ref().is_empty() {
                return Err(at(xs.span(), "x_values must not be empty".into()));
            }
            if let Some(bad) = xs.get_ref().iter().find(|&&x| !in_range(x)) {
                return Err(at(xs.span(), format!("x = {bad} is outside [0, {})", premium.a)));
            }
            xs.get_ref().clone()
        }
        (ExperimentKind::XSweep, _, None) => {
            return Err(at(raw.kind.span(), "x_sweep requires run.x_values".into()));
        }
        (_, _, Some(xs)) => {
            return Err(at(xs.span(), "x_values is only allowed for kind = \"x_sweep\"".into()));
        }
        (_, Some(x), None) => {
            if !in_range(*x.get_ref()) {
                return Err(at(x.span(), format!("x = {} is outside [0, {})", x.get_ref(), premium.a)));
            }
            vec![*x.get_ref()]
        }
        (_, None, None) => {
            return Err(ConfigError {
                line: None,
                message: "model.x is required".into(),
            });
        }
    };

    let model = ModelParams {
        x: x_values[0],
        premium,
        interarrival: *m.interarrival.get_ref(),
        claim: *m.claim.get_ref(),
        delta,
        penalty: *m.penalty.get_ref(),
    };

    let r = &raw.run;
    let n_points = r.n_points.get_ref().clone();
    if n_points.is_empty() {
        return Err(at(r.n_points.span(), "n_points must not be empty".into()));
    }
    if n_points.contains(&0) {
        return Err(at(r.n_points.span(), "n_points entries must be at least 1".into()));
    }
    let n_levels = r.n_levels.get_ref().clone();
    if n_levels.is_empty() {
        return Err(at(r.n_levels.span(), "n_levels must not be empty".into()));
    }
    if n_levels.contains(&0) {
        return Err(at(r.n_levels.span(), "n_levels entries must be at least 1".into()));
    }
    let generators = r.generators.get_ref().clone();
    if generators.is_empty() {
        return Err(at(r.generators.span(), "generators must not be empty".into()));
    }
    for (i, g) in generators.iter().enumerate() {
        if generators[..i].contains(g) {
            return Err(at(r.generators.span(), format!("generator {} listed twice", g.as_str())));
        }
    }
    let max_level = *n_levels.iter().max().unwrap();
    if generators.contains(&SequenceKind::Sobol) && 2 * max_level > SOBOL_MAX_DIMENSION {
        return Err(at(
            r.n_levels.span(),
            format!(
                "sobol supports at most {} levels ({SOBOL_MAX_DIMENSION} dimensions)",
                SOBOL_MAX_DIMENSION / 2
            ),
        ));
    }
    let seeds = match &r.seeds {
        Some(s) if s.get_ref().is_empty() => {
            return Err(at(s.span(), "seeds must not be empty".into()));
        }
        Some(s) => s.get_ref().clone(),
        None => vec![0],
    };
    let scramble = match &r.scramble {
        Some(s) => {
            if s.get_ref().contains(&SequenceKind::Pseudorandom) {
                return Err(at(s.span(), "scramble applies to halton and sobol only".into()));
            }
            s.get_ref().clone()
        }
        None => vec![SequenceKind::Halton],
    };

    if kind == ExperimentKind::ErrorCurve && reference_for(&model).is_none() {
        return Err(at(
            raw.kind.span(),
            "error_curve needs a model with a known reference value".into(),
        ));
    }

    Ok(ExperimentConfig {
        kind,
        model,
        x_values,
        n_levels,
        n_points,
        generators,
        seeds,
        skip: r.skip.as_ref().map_or(0, |s| *s.get_ref()),
        scramble,
        output: raw.output.path.map(PathBuf::from),
        format: raw.output.format.unwrap_or_default(),
    })
}

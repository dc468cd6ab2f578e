//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "fig3"
//! model = "tls"              # tls | hatano-nelson | bcs
//! task = "evolve-perturb"    # spectrum | evolve-master | evolve-nh | evolve-perturb | gap | corrections
//! order = 2
//! output = "out"
//!
//! [params]
//! omega = 1.0
//! gamma_p = 0.1
//! gamma_x = 0.01
//! gamma_z = 0.5
//!
//! [times]
//! start = 0.0
//! stop = 50.0
//! points = 501
//! ```
//!
//! An optional `[sweep]` table with `param` (`kappa` or `n`), `values` and
//! optional `sample_times` repeats the task over a parameter list.

use std::fmt;
use std::path::PathBuf;

use nhjump_core::dynamics::linspace;
use nhjump_core::models::{BcsParams, Boundary, HatanoNelsonParams, TlsParams};
use nhjump_core::C64;
use serde::Deserialize;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Tls,
    HatanoNelson,
    Bcs,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tls => "tls",
            ModelKind::HatanoNelson => "hatano-nelson",
            ModelKind::Bcs => "bcs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    EvolveMaster,
    EvolveNh,
    EvolvePerturb,
    Gap,
    Corrections,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::EvolveMaster => "evolve-master",
            Task::EvolveNh => "evolve-nh",
            Task::EvolvePerturb => "evolve-perturb",
            Task::Gap => "gap",
            Task::Corrections => "corrections",
        }
    }

    pub fn is_evolution(self) -> bool {
        matches!(self, Task::EvolveMaster | Task::EvolveNh | Task::EvolvePerturb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Exact,
    Nh,
    Pert,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Exact => "exact",
            Source::Nh => "nh",
            Source::Pert => "pert",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Kappa,
    N,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Kappa => "kappa",
            SweepParam::N => "n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TlsInitial {
    #[default]
    Up,
    Down,
    Plus,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    description: Option<String>,
    model: Spanned<ModelKind>,
    task: Spanned<Task>,
    order: Option<Spanned<usize>>,
    output: Option<String>,
    sources: Option<Spanned<Vec<Source>>>,
    params: Spanned<toml::Table>,
    times: Option<Spanned<RawTimes>>,
    sweep: Option<Spanned<RawSweep>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimes {
    start: f64,
    stop: f64,
    points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    param: SweepParam,
    values: Vec<f64>,
    sample_times: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TlsCfg {
    omega: f64,
    gamma_p: f64,
    gamma_x: f64,
    gamma_z: f64,
    #[serde(default)]
    initial: TlsInitial,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum BoundaryCfg {
    Open,
    Periodic,
}

fn default_particles() -> usize {
    2
}

fn default_pair() -> [usize; 2] {
    [0, 1]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HnCfg {
    n_sites: usize,
    j: f64,
    kappa: f64,
    boundary: BoundaryCfg,
    #[serde(default = "default_particles")]
    max_particles: usize,
    #[serde(default = "default_pair")]
    pair: [usize; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BcsCfg {
    j: f64,
    #[serde(default)]
    mu: f64,
    u0: f64,
    kappa: f64,
    n: usize,
    u1_re: Option<f64>,
    u1_im: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum ModelSpec {
    Tls {
        params: TlsParams,
        initial: TlsInitial,
    },
    HatanoNelson {
        params: HatanoNelsonParams,
        pair: [usize; 2],
    },
    Bcs {
        params: BcsParams,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Tls { .. } => ModelKind::Tls,
            ModelSpec::HatanoNelson { .. } => ModelKind::HatanoNelson,
            ModelSpec::Bcs { .. } => ModelKind::Bcs,
        }
    }

    /// Copy with one swept parameter replaced.
    pub fn with_sweep(&self, param: SweepParam, value: f64) -> ModelSpec {
        let mut out = self.clone();
        match (&mut out, param) {
            (ModelSpec::HatanoNelson { params, .. }, SweepParam::Kappa) => params.kappa = value,
            (ModelSpec::HatanoNelson { params, .. }, SweepParam::N) => {
                params.n_sites = value as usize
            }
            (ModelSpec::Bcs { params }, SweepParam::Kappa) => {
                // A derived U1 follows the swept loss rate.
                params.kappa = value;
            }
            (ModelSpec::Bcs { params }, SweepParam::N) => params.n = value as usize,
            (ModelSpec::Tls { .. }, _) => {}
        }
        out
    }

    fn validate(&self) -> nhjump_core::Result<()> {
        match self {
            ModelSpec::Tls { params, .. } => params.validate(),
            ModelSpec::HatanoNelson { params, pair } => {
                params.validate()?;
                for &site in pair {
                    if site >= params.n_sites {
                        return Err(nhjump_core::Error::IndexOutOfRange {
                            index: site,
                            limit: params.n_sites,
                        });
                    }
                }
                if pair[0] == pair[1] {
                    return Err(nhjump_core::Error::InvalidParameter(
                        "pair sites must differ".into(),
                    ));
                }
                Ok(())
            }
            ModelSpec::Bcs { params } => params.validate(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub sample_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub model: ModelSpec,
    pub task: Task,
    pub order: usize,
    pub output: PathBuf,
    pub sources: Vec<Source>,
    pub times: Option<Vec<f64>>,
    pub sweep: Option<Sweep>,
    pub params: toml::Table,
}

impl Scenario {
    /// Evaluation times, with sweep sample times taking precedence.
    pub fn eval_times(&self) -> Option<&[f64]> {
        self.sweep
            .as_ref()
            .and_then(|s| s.sample_times.as_deref())
            .or(self.times.as_deref())
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn err_at(src: &str, span: std::ops::Range<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: Some(line_of(src, span.start)),
        message: message.into(),
    }
}

/// Parses and validates a scenario; `default_name` applies when no name is set.
pub fn parse_scenario(src: &str, default_name: &str) -> Result<Scenario, ConfigError> {
    let raw: RawScenario = toml::from_str(src).map_err(|e| ConfigError {
        line: e.span().map(|s| line_of(src, s.start)),
        message: e.message().trim().to_string(),
    })?;

    let params_span = raw.params.span();
    let table = raw.params.into_inner();
    let kind = *raw.model.get_ref();
    let bad_params = |msg: String| err_at(src, params_span.clone(), format!("in [params]: {msg}"));
    let model = match kind {
        ModelKind::Tls => {
            let c: TlsCfg = table.clone().try_into().map_err(|e: toml::de::Error| bad_params(e.message().trim().to_string()))?;
            ModelSpec::Tls {
                params: TlsParams {
                    omega: c.omega,
                    gamma_p: c.gamma_p,
                    gamma_x: c.gamma_x,
                    gamma_z: c.gamma_z,
                },
                initial: c.initial,
            }
        }
        ModelKind::HatanoNelson => {
            let c: HnCfg = table.clone().try_into().map_err(|e: toml::de::Error| bad_params(e.message().trim().to_string()))?;
            ModelSpec::HatanoNelson {
                params: HatanoNelsonParams {
                    n_sites: c.n_sites,
                    j: c.j,
                    kappa: c.kappa,
                    boundary: match c.boundary {
                        BoundaryCfg::Open => Boundary::Open,
                        BoundaryCfg::Periodic => Boundary::Periodic,
                    },
                    max_particles: c.max_particles,
                },
                pair: c.pair,
            }
        }
        ModelKind::Bcs => {
            let c: BcsCfg = table.clone().try_into().map_err(|e: toml::de::Error| bad_params(e.message().trim().to_string()))?;
            let mut params = BcsParams::new(c.j, c.mu, c.u0, c.kappa, c.n);
            params.u1 = match (c.u1_re, c.u1_im) {
                (Some(re), Some(im)) => Some(C64::new(re, im)),
                (None, None) => None,
                _ => return Err(bad_params("u1_re and u1_im must be given together".into())),
            };
            ModelSpec::Bcs { params }
        }
    };
    model
        .validate()
        .map_err(|e| bad_params(e.to_string()))?;

    let task = *raw.task.get_ref();
    let task_err = |msg: &str| err_at(src, raw.task.span(), msg.to_string());
    if task == Task::Gap && kind != ModelKind::Bcs {
        return Err(task_err("task `gap` needs model `bcs`"));
    }

    let order = match &raw.order {
        Some(o) if !(1..=2).contains(o.get_ref()) => {
            return Err(err_at(src, o.span(), "order must be 1 or 2"));
        }
        Some(o) => *o.get_ref(),
        None => 2,
    };

    let times = match &raw.times {
        Some(t) => {
            let g = t.get_ref();
            if g.points < 2 {
                return Err(err_at(src, t.span(), "[times] needs at least 2 points"));
            }
            if !(g.start.is_finite() && g.stop.is_finite()) || g.stop <= g.start {
                return Err(err_at(src, t.span(), "[times] needs finite start < stop"));
            }
            Some(linspace(g.start, g.stop, g.points))
        }
        None => None,
    };

    let sweep = match raw.sweep {
        Some(s) => {
            let span = s.span();
            let s = s.into_inner();
            if !(task.is_evolution() || task == Task::Gap) {
                return Err(err_at(src, span, "[sweep] applies to evolve-* and gap tasks"));
            }
            if kind == ModelKind::Tls {
                return Err(err_at(src, span, "[sweep] is not available for model `tls`"));
            }
            if s.values.is_empty() {
                return Err(err_at(src, span, "[sweep] values must not be empty"));
            }
            for &v in &s.values {
                let bad = match s.param {
                    SweepParam::Kappa => !(v.is_finite() && v >= 0.0),
                    SweepParam::N => !(v.fract() == 0.0 && v >= 2.0),
                };
                if bad {
                    return Err(err_at(src, span, format!("invalid {} value {v}", s.param.as_str())));
                }
                model
                    .with_sweep(s.param, v)
                    .validate()
                    .map_err(|e| err_at(src, span.clone(), e.to_string()))?;
            }
            if let Some(ts) = &s.sample_times {
                if ts.is_empty() || ts.windows(2).any(|w| !(w[1] > w[0])) || ts.iter().any(|t| !t.is_finite()) {
                    return Err(err_at(src, span, "sample_times must be finite and increasing"));
                }
            }
            Some(Sweep {
                param: s.param,
                values: s.values,
                sample_times: s.sample_times,
            })
        }
        None => None,
    };

    let sources = match raw.sources {
        Some(s) => {
            if !task.is_evolution() {
                return Err(err_at(src, s.span(), "sources apply to evolve-* tasks"));
            }
            let mut v = s.get_ref().clone();
            if v.is_empty() {
                return Err(err_at(src, s.span(), "sources must not be empty"));
            }
            v.sort();
            v.dedup();
            v
        }
        None => match task {
            Task::EvolveMaster => vec![Source::Exact],
            Task::EvolveNh => vec![Source::Nh],
            Task::EvolvePerturb => vec![Source::Exact, Source::Nh, Source::Pert],
            _ => Vec::new(),
        },
    };

    let scenario = Scenario {
        name: raw.name.unwrap_or_else(|| default_name.to_string()),
        description: raw.description,
        model,
        task,
        order,
        output: PathBuf::from(raw.output.unwrap_or_else(|| "out".into())),
        sources,
        times,
        sweep,
        params: table,
    };
    if task.is_evolution() && scenario.eval_times().is_none() {
        return Err(task_err("evolve-* tasks need [times] or sweep sample_times"));
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TLS: &str = r#"
model = "tls"
task = "evolve-perturb"

[params]
omega = 1.0
gamma_p = 0.1
gamma_x = 0.01
gamma_z = 0.5

[times]
start = 0.0
stop = 5.0
points = 11
"#;

    #[test]
    fn parses_minimal_scenario() {
        let s = parse_scenario(TLS, "tls").unwrap();
        assert_eq!(s.name, "tls");
        assert_eq!(s.order, 2);
        assert_eq!(s.sources, vec![Source::Exact, Source::Nh, Source::Pert]);
        assert_eq!(s.eval_times().unwrap().len(), 11);
    }

    #[test]
    fn missing_param_points_at_params_table() {
        let src = TLS.replace("gamma_x = 0.01\n", "");
        let e = parse_scenario(&src, "x").unwrap_err();
        assert_eq!(e.line, Some(5));
        assert!(e.message.contains("gamma_x"), "{e}");
    }

    #[test]
    fn syntax_error_has_line() {
        let src = TLS.replace("points = 11", "points = = 11");
        let e = parse_scenario(&src, "x").unwrap_err();
        assert_eq!(e.line, Some(14));
    }

    #[test]
    fn rejects_bad_order_and_grid() {
        let e = parse_scenario(&format!("order = 3\n{TLS}"), "x").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = parse_scenario(&TLS.replace("points = 11", "points = 1"), "x").unwrap_err();
        assert!(e.message.contains("2 points"));
    }

    #[test]
    fn gap_requires_bcs() {
        let e = parse_scenario(&TLS.replace("evolve-perturb", "gap"), "x").unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_scenario(&format!("colour = 1\n{TLS}"), "x").is_err());
        assert!(parse_scenario(&TLS.replace("omega", "omegaa"), "x").is_err());
    }

    #[test]
    fn sweep_validation() {
        let src = r#"
model = "bcs"
task = "evolve-perturb"
order = 1
[params]
j = 1.0
u0 = 1.8
kappa = 0.05
n = 10
[sweep]
param = "n"
values = [10, 20.5]
sample_times = [10.0, 20.0]
"#;
        let e = parse_scenario(src, "x").unwrap_err();
        assert!(e.message.contains("invalid n"), "{e}");
        let ok = parse_scenario(&src.replace("20.5", "20"), "x").unwrap();
        assert_eq!(ok.eval_times().unwrap(), &[10.0, 20.0]);
    }
}

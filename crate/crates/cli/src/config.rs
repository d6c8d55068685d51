//! Run configuration: a TOML document, validated before any sampling.

use std::fmt;

use adaptmc::samplers::LadderConfig;
use adaptmc::target::TargetDensity;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RunAm,
    RunIt,
    Toy,
    Diagnose,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::RunAm => "run-am",
            Command::RunIt => "run-it",
            Command::Toy => "toy",
            Command::Diagnose => "diagnose",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Gaussian {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cov: Option<Vec<Vec<f64>>>,
    },
    Mixture {
        dim: usize,
        separation: f64,
    },
    Flat {
        dim: usize,
    },
    ToyUniform,
}

impl TargetSpec {
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::Gaussian { dim, .. } | TargetSpec::Mixture { dim, .. } | TargetSpec::Flat { dim } => *dim,
            TargetSpec::ToyUniform => 1,
        }
    }

    pub fn build(&self) -> Result<TargetDensity, ConfigError> {
        let err = |e: adaptmc::Error| field_err("target", e.to_string());
        match self {
            TargetSpec::Gaussian { dim, mean, cov } => {
                if mean.is_none() && cov.is_none() {
                    return TargetDensity::standard_gaussian(*dim).map_err(err);
                }
                let m = match mean {
                    Some(m) => {
                        if m.len() != *dim {
                            return Err(field_err("target.mean", format!("expected {dim} entries, got {}", m.len())));
                        }
                        nalgebra::DVector::from_vec(m.clone())
                    }
                    None => nalgebra::DVector::zeros(*dim),
                };
                let c = match cov {
                    Some(c) => matrix("target.cov", c, *dim)?,
                    None => DMatrix::identity(*dim, *dim),
                };
                TargetDensity::gaussian(m, c).map_err(err)
            }
            TargetSpec::Mixture { dim, separation } => TargetDensity::bimodal_mixture(*dim, *separation).map_err(err),
            TargetSpec::Flat { dim } => TargetDensity::flat(*dim, 0.0).map_err(err),
            TargetSpec::ToyUniform => Ok(TargetDensity::toy_uniform()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmSection {
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Initial covariance; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItSection {
    pub temperatures: Vec<f64>,
    pub upsilon: f64,
    pub proposal_covs: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySection {
    #[serde(default)]
    pub x0: u8,
    /// `θ_n = n^{-schedule_exponent}`.
    #[serde(default = "default_exponent")]
    pub schedule_exponent: f64,
    /// Overrides the power schedule with a constant `θ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_theta: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_exponent() -> f64 {
    0.25
}

fn default_epsilon() -> f64 {
    0.1
}

impl Default for ToySection {
    fn default() -> Self {
        Self { x0: 0, schedule_exponent: default_exponent(), constant_theta: None, epsilon: default_epsilon() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Random small-space instances of the limiting two-level kernel.
    PiInvariance,
    /// Exact toy-chain marginal, mixing time and adaptation distance.
    Toy,
    /// Drift constants of random-walk Metropolis on the configured target.
    Drift,
    /// Exact drift fit for the two-state kernel.
    DriftExact,
    /// Empirical-measure adaptation bound over an interacting tempering history.
    EmpiricalBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    pub checks: Vec<Check>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_states")]
    pub states: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_upsilon")]
    pub upsilon: f64,
    #[serde(default = "default_tau")]
    pub drift_tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_points: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_mc_reps")]
    pub drift_mc_reps: usize,
    #[serde(default = "default_sd")]
    pub drift_proposal_sd: f64,
    #[serde(default = "default_toy_theta")]
    pub drift_toy_theta: f64,
    #[serde(default = "default_grid")]
    pub bound_grid: usize,
}

fn default_instances() -> usize {
    20
}
fn default_states() -> usize {
    5
}
fn default_temperature() -> f64 {
    4.0
}
fn default_upsilon() -> f64 {
    0.3
}
fn default_tau() -> f64 {
    0.25
}
fn default_mc_reps() -> usize {
    100_000
}
fn default_sd() -> f64 {
    2.38
}
fn default_toy_theta() -> f64 {
    0.9
}
fn default_grid() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub seed: u64,
    pub output_path: String,
    pub steps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub am: Option<AmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub it: Option<ItSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy: Option<ToySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseSection>,
}

fn one() -> usize {
    1
}

fn matrix(field: &str, rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>, ConfigError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(field_err(field, format!("expected a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(field_err(field, "entries must be finite"));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn vector(field: &str, v: &[f64], dim: usize) -> Result<nalgebra::DVector<f64>, ConfigError> {
    if v.len() != dim {
        return Err(field_err(field, format!("expected {dim} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(field_err(field, "entries must be finite"));
    }
    Ok(nalgebra::DVector::from_column_slice(v))
}

fn symmetric(field: &str, m: &DMatrix<f64>) -> Result<(), ConfigError> {
    if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
        return Err(field_err(field, "matrix must be symmetric"));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// SHA-256 of the canonical emitted form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.emit().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn command(&self) -> Command {
        self.command.expect("command resolved before validation")
    }

    fn require_target(&self) -> Result<&TargetSpec, ConfigError> {
        self.target.as_ref().ok_or_else(|| field_err("target", format!("required by command {}", self.command())))
    }

    /// Fixes the command from the CLI subcommand; a conflicting `command`
    /// key is an error.
    pub fn resolve_command(&mut self, cli: Command) -> Result<(), ConfigError> {
        match self.command {
            Some(c) if c != cli => {
                Err(field_err("command", format!("config is for {c} but the {cli} subcommand was invoked")))
            }
            _ => {
                self.command = Some(cli);
                Ok(())
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let cmd = self.command.ok_or_else(|| field_err("command", "missing"))?;
        if self.steps == 0 {
            return Err(field_err("steps", "must be at least 1"));
        }
        if self.burn_in >= self.steps {
            return Err(field_err("burn_in", format!("must be smaller than steps ({})", self.steps)));
        }
        if self.thinning == 0 {
            return Err(field_err("thinning", "must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(field_err("replicates", "must be at least 1"));
        }
        if self.output_path.is_empty() {
            return Err(field_err("output_path", "must not be empty"));
        }
        let allowed: &[&str] = match cmd {
            Command::RunAm => &["target", "am"],
            Command::RunIt => &["target", "it"],
            Command::Toy => &["toy"],
            Command::Diagnose => &["target", "it", "diagnose"],
        };
        for (name, present) in [
            ("target", self.target.is_some()),
            ("am", self.am.is_some()),
            ("it", self.it.is_some()),
            ("toy", self.toy.is_some()),
            ("diagnose", self.diagnose.is_some()),
        ] {
            if present && !allowed.contains(&name) {
                return Err(field_err(name, format!("section is not used by command {cmd}")));
            }
        }
        if let Some(t) = &self.target {
            if t.dim() == 0 {
                return Err(field_err("target.dim", "must be positive"));
            }
            if let TargetSpec::Mixture { separation, .. } = t {
                if !separation.is_finite() {
                    return Err(field_err("target.separation", "must be finite"));
                }
            }
            t.build()?;
        }
        match cmd {
            Command::RunAm => self.validate_am(),
            Command::RunIt => self.ladder().map(|_| ()),
            Command::Toy => self.validate_toy(),
            Command::Diagnose => self.validate_diagnose(),
        }
    }

    fn validate_am(&self) -> Result<(), ConfigError> {
        let dim = self.require_target()?.dim();
        let am = self.am.as_ref().ok_or_else(|| field_err("am", "section required by command run-am"))?;
        if !(am.kappa > 0.0) || !am.kappa.is_finite() {
            return Err(field_err("am.kappa", format!("must be a positive real, got {}", am.kappa)));
        }
        self.am_x0()?;
        let g = self.am_gamma0()?;
        symmetric("am.gamma0", &g)?;
        if g.clone().symmetric_eigenvalues().min() < -1e-12 {
            return Err(field_err("am.gamma0", "must be positive semidefinite"));
        }
        let _ = dim;
        Ok(())
    }

    pub fn am_x0(&self) -> Result<nalgebra::DVector<f64>, ConfigError> {
        let dim = self.require_target()?.dim();
        match self.am.as_ref().and_then(|a| a.x0.as_ref()) {
            Some(v) => vector("am.x0", v, dim),
            None => Ok(nalgebra::DVector::zeros(dim)),
        }
    }

    pub fn am_gamma0(&self) -> Result<DMatrix<f64>, ConfigError> {
        let dim = self.require_target()?.dim();
        match self.am.as_ref().and_then(|a| a.gamma0.as_ref()) {
            Some(g) => matrix("am.gamma0", g, dim),
            None => Ok(DMatrix::zeros(dim, dim)),
        }
    }

    /// Ladder settings and initial states, validated.
    pub fn ladder(&self) -> Result<(LadderConfig, Vec<nalgebra::DVector<f64>>), ConfigError> {
        let dim = self.require_target()?.dim();
        let it = self
            .it
            .as_ref()
            .ok_or_else(|| field_err("it", format!("section required by command {}", self.command())))?;
        let mut covs = Vec::with_capacity(it.proposal_covs.len());
        for (k, c) in it.proposal_covs.iter().enumerate() {
            let field = format!("it.proposal_covs[{k}]");
            let m = matrix(&field, c, dim)?;
            symmetric(&field, &m)?;
            if m.clone().cholesky().is_none() {
                return Err(field_err(field, "must be positive definite"));
            }
            covs.push(m);
        }
        let cfg = LadderConfig {
            temperatures: it.temperatures.clone(),
            upsilon: it.upsilon,
            proposal_covs: covs,
            steps: self.steps,
            burn_in: self.burn_in,
        };
        cfg.validate(dim).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.trim_start_matches("invalid configuration: ");
            match msg.split_once(": ") {
                Some((f, m)) => field_err(format!("it.{f}"), m),
                None => field_err("it", msg),
            }
        })?;
        let x0 = match &it.x0 {
            Some(xs) => {
                if xs.len() != cfg.levels() {
                    return Err(field_err(
                        "it.x0",
                        format!("expected one initial state per level ({}), got {}", cfg.levels(), xs.len()),
                    ));
                }
                xs.iter().enumerate().map(|(k, x)| vector(&format!("it.x0[{k}]"), x, dim)).collect::<Result<_, _>>()?
            }
            None => vec![nalgebra::DVector::zeros(dim); cfg.levels()],
        };
        Ok((cfg, x0))
    }

    pub fn toy_section(&self) -> ToySection {
        self.toy.clone().unwrap_or_default()
    }

    fn validate_toy(&self) -> Result<(), ConfigError> {
        let toy = self.toy_section();
        if toy.x0 > 1 {
            return Err(field_err("toy.x0", format!("must be 0 or 1, got {}", toy.x0)));
        }
        if !(toy.schedule_exponent > 0.0) || !toy.schedule_exponent.is_finite() {
            return Err(field_err("toy.schedule_exponent", "must be a positive real"));
        }
        if let Some(t) = toy.constant_theta {
            if !(0.0..=1.0).contains(&t) {
                return Err(field_err("toy.constant_theta", format!("must lie in [0, 1], got {t}")));
            }
        }
        if !(toy.epsilon > 0.0 && toy.epsilon < 1.0) {
            return Err(field_err("toy.epsilon", format!("must lie in the open interval (0, 1), got {}", toy.epsilon)));
        }
        Ok(())
    }

    fn validate_diagnose(&self) -> Result<(), ConfigError> {
        let d = self.diagnose.as_ref().ok_or_else(|| field_err("diagnose", "section required by command diagnose"))?;
        if d.checks.is_empty() {
            return Err(field_err("diagnose.checks", "at least one check is required"));
        }
        if !(2..=adaptmc::diagnostics::DiscreteKernelOracle::MAX_STATES).contains(&d.states) {
            return Err(field_err("diagnose.states", "must lie in 2..=16"));
        }
        if d.instances == 0 {
            return Err(field_err("diagnose.instances", "must be at least 1"));
        }
        if !(d.temperature > 1.0) || !d.temperature.is_finite() {
            return Err(field_err("diagnose.temperature", "must be a finite real > 1"));
        }
        if !(d.upsilon > 0.0 && d.upsilon < 1.0) {
            return Err(field_err(
                "diagnose.upsilon",
                format!("must lie in the open interval (0, 1), got {}", d.upsilon),
            ));
        }
        if !(d.drift_tau > 0.0 && d.drift_tau < 1.0) {
            return Err(field_err("diagnose.drift_tau", "must lie in the open interval (0, 1)"));
        }
        if d.drift_mc_reps < 1000 {
            return Err(field_err("diagnose.drift_mc_reps", "must be at least 1000"));
        }
        if !(d.drift_proposal_sd > 0.0) || !d.drift_proposal_sd.is_finite() {
            return Err(field_err("diagnose.drift_proposal_sd", "must be a positive real"));
        }
        if !(0.0..=1.0).contains(&d.drift_toy_theta) {
            return Err(field_err("diagnose.drift_toy_theta", "must lie in [0, 1]"));
        }
        if d.bound_grid == 0 {
            return Err(field_err("diagnose.bound_grid", "must be at least 1"));
        }
        if d.checks.contains(&Check::Drift) {
            let dim = self.require_target()?.dim();
            if let Some(pts) = &d.drift_points {
                if pts.is_empty() {
                    return Err(field_err("diagnose.drift_points", "must not be empty"));
                }
                for (k, p) in pts.iter().enumerate() {
                    vector(&format!("diagnose.drift_points[{k}]"), p, dim)?;
                }
            }
        }
        if d.checks.contains(&Check::EmpiricalBound) {
            self.ladder()?;
            let needed = 2 * d.bound_grid + 1;
            if self.steps < needed {
                return Err(field_err(
                    "steps",
                    format!("empirical-bound with bound_grid = {} needs at least {needed} steps", d.bound_grid),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AM: &str = r#"
seed = 42
output_path = "am"
steps = 1000

[target]
kind = "gaussian"
dim = 1

[am]
kappa = 0.1
"#;

    fn parse_for(text: &str, cmd: Command) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig::parse(text)?;
        c.resolve_command(cmd)?;
        c.validate()?;
        Ok(c)
    }

    #[test]
    fn minimal_am_config() {
        let c = parse_for(AM, Command::RunAm).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.thinning, 1);
        assert_eq!(c.am.as_ref().unwrap().kappa, 0.1);
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let text = AM.replace("kappa = 0.1", "kappa = 0.1\nkapa = 0.2");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("kapa"), "{err}");
        assert!(err.contains("line"), "{err}");
        let text = AM.replace("dim = 1", "dim = 1\nsigma = 2.0");
        assert!(RunConfig::parse(&text).is_err());
    }

    fn it_text(temps: &str, upsilon: &str) -> String {
        format!(
            r#"
seed = 1
output_path = "it"
steps = 100

[target]
kind = "mixture"
dim = 1
separation = 5.0

[it]
temperatures = {temps}
upsilon = {upsilon}
proposal_covs = [[[1.0]], [[4.0]], [[16.0]]]
"#
        )
    }

    #[test]
    fn upsilon_boundary_is_rejected() {
        let err = parse_for(&it_text("[1.0, 2.0, 4.0]", "1.0"), Command::RunIt).unwrap_err().to_string();
        assert!(err.contains("it.upsilon"), "{err}");
        assert!(err.contains("open interval (0, 1)"), "{err}");
    }

    #[test]
    fn non_ascending_temperatures_are_rejected() {
        let err = parse_for(&it_text("[1.0, 4.0, 2.0]", "0.3"), Command::RunIt).unwrap_err().to_string();
        assert!(err.contains("it.temperatures"), "{err}");
        assert!(err.contains("strictly ascending"), "{err}");
        assert!(parse_for(&it_text("[1.0, 2.0, 4.0]", "0.3"), Command::RunIt).is_ok());
    }

    #[test]
    fn command_mismatch_and_foreign_sections() {
        let mut c = RunConfig::parse(&format!("command = \"toy\"\n{AM}")).unwrap();
        assert!(c.resolve_command(Command::RunAm).is_err());
        let err = parse_for(AM, Command::Toy).unwrap_err().to_string();
        assert!(err.contains("not used by command toy"), "{err}");
    }

    #[test]
    fn numeric_constraints() {
        assert!(parse_for(&AM.replace("kappa = 0.1", "kappa = 0.0"), Command::RunAm).is_err());
        assert!(parse_for(&AM.replace("steps = 1000", "steps = 0"), Command::RunAm).is_err());
        assert!(parse_for(&AM.replace("steps = 1000", "steps = 10\nburn_in = 10"), Command::RunAm).is_err());
        let bad_gamma = AM.replace("kappa = 0.1", "kappa = 0.1\ngamma0 = [[-1.0]]");
        assert!(parse_for(&bad_gamma, Command::RunAm).unwrap_err().to_string().contains("am.gamma0"));
        let bad_x0 = AM.replace("kappa = 0.1", "kappa = 0.1\nx0 = [1.0, 2.0]");
        assert!(parse_for(&bad_x0, Command::RunAm).unwrap_err().to_string().contains("am.x0"));
    }

    #[test]
    fn emitted_config_parses_back() {
        let c = parse_for(&it_text("[1.0, 2.0, 4.0]", "0.3"), Command::RunIt).unwrap();
        let again = RunConfig::parse(&c.emit()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
    }
}

//! Line-based run configuration: defaults, parsing, and validation.
//!
//! The format is one `key = value` pair per line; `#` starts a comment.
//! Unknown keys are rejected by name so typos never silently fall back to a
//! default. Values are plain numbers, identifiers, or paths; every numeric
//! constraint is enforced by the library constructors before any computation
//! starts.

use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use qme::engine::SwapRule;
use qme::measurement::MeasurementKind;
use qme::scenario::{p_grid, EngineKind, NthMode, TcmeBathConfig, TwoQubitConfig};

/// Which engines a command drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineChoice {
    Eme,
    Tcme,
    Both,
}

impl EngineChoice {
    /// Engines to run, in deterministic order.
    pub fn kinds(self) -> Vec<EngineKind> {
        match self {
            EngineChoice::Eme => vec![EngineKind::Eme],
            EngineChoice::Tcme => vec![EngineKind::Tcme],
            EngineChoice::Both => vec![EngineKind::Eme, EngineKind::Tcme],
        }
    }

    /// The single selected engine, for commands that report one cycle.
    pub fn single(self) -> Result<EngineKind> {
        match self {
            EngineChoice::Eme => Ok(EngineKind::Eme),
            EngineChoice::Tcme => Ok(EngineKind::Tcme),
            EngineChoice::Both => bail!(
                "config key `engine`: this command reports a single engine, \
                 pass `eme` or `tcme` instead of `both`"
            ),
        }
    }
}

/// Fully parsed run configuration with defaults applied.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub omega_a: f64,
    pub delta: f64,
    pub theta_over_pi: f64,
    pub q: f64,
    pub e_p: f64,
    /// Product of the bath inverse temperature and the pointer gap.
    pub beta_e_p: f64,
    pub scheme: MeasurementKind,
    pub engine: EngineChoice,
    pub swap_rule: SwapRule,
    pub n_th_mode: NthMode,
    pub gamma: f64,
    pub gamma_prime: f64,
    /// Pointer purity for single-point commands (`cycle`, `axioms`).
    pub p: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub p_steps: usize,
    pub rk4_dt: f64,
    pub rk4_tmax: f64,
    /// Trajectory sampling stride of the `lindblad` command, in steps.
    pub sample_every: usize,
    /// Output path; `None` writes to stdout.
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega_a: 10.0,
            delta: 50.0,
            theta_over_pi: 0.2,
            q: 0.05,
            e_p: 1.0,
            beta_e_p: 1.0 / 30.0,
            scheme: MeasurementKind::NonInvasive,
            engine: EngineChoice::Both,
            swap_rule: SwapRule::RawIndex,
            n_th_mode: NthMode::MatchEme,
            gamma: 1.0,
            gamma_prime: 1.0,
            p: 0.9,
            p_min: 0.501,
            p_max: 0.999,
            p_steps: 499,
            rk4_dt: 1e-3,
            rk4_tmax: 10.0,
            sample_every: 10,
            output: None,
        }
    }
}

impl RunConfig {
    /// Apply a whole config file. `origin` names the source in error messages.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_line(line)
                .with_context(|| format!("{origin} line {}", index + 1))?;
        }
        Ok(())
    }

    /// Apply a single `key = value` assignment.
    pub fn apply_line(&mut self, line: &str) -> Result<()> {
        let Some((key, value)) = line.split_once('=') else {
            bail!("expected `key = value`, got `{line}`");
        };
        self.set(key.trim(), value.trim())
    }

    /// Set one key, rejecting unknown keys and unparsable values.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if value.is_empty() {
            bail!("config key `{key}`: empty value");
        }
        match key {
            "omega_a" => self.omega_a = number(key, value)?,
            "delta" => self.delta = number(key, value)?,
            "theta_over_pi" => self.theta_over_pi = number(key, value)?,
            "q" => self.q = number(key, value)?,
            "e_p" => self.e_p = number(key, value)?,
            "beta_e_p" => self.beta_e_p = number(key, value)?,
            "scheme" => self.scheme = parse_scheme(value)?,
            "engine" => self.engine = parse_engine(value)?,
            "swap_rule" => self.swap_rule = parse_swap_rule(value)?,
            "n_th_mode" => self.n_th_mode = parse_n_th_mode(value)?,
            "gamma" => self.gamma = number(key, value)?,
            "gamma_prime" => self.gamma_prime = number(key, value)?,
            "p" => self.p = number(key, value)?,
            "p_min" => self.p_min = number(key, value)?,
            "p_max" => self.p_max = number(key, value)?,
            "p_steps" => self.p_steps = integer(key, value)?,
            "rk4_dt" => self.rk4_dt = number(key, value)?,
            "rk4_tmax" => self.rk4_tmax = number(key, value)?,
            "sample_every" => self.sample_every = integer(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Build the validated engine parameters.
    pub fn two_qubit(&self) -> Result<TwoQubitConfig> {
        TwoQubitConfig::new(
            self.omega_a,
            self.delta,
            self.theta_over_pi * PI,
            self.q,
            self.beta_e_p / self.e_p,
            self.e_p,
            self.scheme,
        )
        .context("config keys `omega_a`, `delta`, `theta_over_pi`, `q`, `beta_e_p`, `e_p`")
    }

    /// Build the validated dissipative-bath parameters.
    pub fn bath(&self) -> Result<TcmeBathConfig> {
        TcmeBathConfig::new(self.n_th_mode, self.gamma, self.gamma_prime)
            .context("config keys `n_th_mode`, `gamma`, `gamma_prime`")
    }

    /// Build the validated pointer-purity grid of a sweep.
    pub fn grid(&self) -> Result<Vec<f64>> {
        p_grid(self.p_min, self.p_max, self.p_steps)
            .context("config keys `p_min`, `p_max`, `p_steps`")
    }

    /// Validate the command-specific scalar knobs not covered by a library
    /// constructor.
    pub fn validate_stepping(&self) -> Result<()> {
        if self.sample_every == 0 {
            bail!("config key `sample_every`: must be at least 1");
        }
        Ok(())
    }
}

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .with_context(|| format!("config key `{key}`: cannot parse `{value}` as a number"))
}

fn integer(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .with_context(|| format!("config key `{key}`: cannot parse `{value}` as a whole number"))
}

fn parse_scheme(value: &str) -> Result<MeasurementKind> {
    match value.to_ascii_lowercase().as_str() {
        "noninvasive" => Ok(MeasurementKind::NonInvasive),
        "unbiased" => Ok(MeasurementKind::Unbiased),
        other => bail!("config key `scheme`: expected `noninvasive` or `unbiased`, got `{other}`"),
    }
}

fn parse_engine(value: &str) -> Result<EngineChoice> {
    match value.to_ascii_lowercase().as_str() {
        "eme" => Ok(EngineChoice::Eme),
        "tcme" => Ok(EngineChoice::Tcme),
        "both" => Ok(EngineChoice::Both),
        other => bail!("config key `engine`: expected `eme`, `tcme`, or `both`, got `{other}`"),
    }
}

fn parse_swap_rule(value: &str) -> Result<SwapRule> {
    match value.to_ascii_lowercase().as_str() {
        "rawindex" => Ok(SwapRule::RawIndex),
        "decodedblock" => Ok(SwapRule::DecodedBlock),
        other => {
            bail!("config key `swap_rule`: expected `rawindex` or `decodedblock`, got `{other}`")
        }
    }
}

fn parse_n_th_mode(value: &str) -> Result<NthMode> {
    match value.to_ascii_lowercase().as_str() {
        "matcheme" => Ok(NthMode::MatchEme),
        "frombath" => Ok(NthMode::FromBath),
        other => bail!("config key `n_th_mode`: expected `matcheme` or `frombath`, got `{other}`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_keeps_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("", "test").unwrap();
        assert_eq!(cfg.p_steps, 499);
        assert_eq!(cfg.scheme, MeasurementKind::NonInvasive);
        assert_eq!(cfg.engine, EngineChoice::Both);
        assert!(cfg.output.is_none());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "# full line comment\n\n  q = 0.2  # trailing comment\n",
            "test",
        )
        .unwrap();
        assert_eq!(cfg.q, 0.2);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_line("qq = 0.2").unwrap_err();
        assert!(err.to_string().contains("unknown config key `qq`"));
    }

    #[test]
    fn unparsable_number_names_key_and_value() {
        let mut cfg = RunConfig::default();
        let err = format!("{:#}", cfg.apply_line("delta = fifty").unwrap_err());
        assert!(err.contains("`delta`"), "{err}");
        assert!(err.contains("`fifty`"), "{err}");
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let mut cfg = RunConfig::default();
        let err = format!(
            "{:#}",
            cfg.apply_text("q = 0.1\nbogus_key = 3\n", "run.conf")
                .unwrap_err()
        );
        assert!(err.contains("run.conf line 2"), "{err}");
    }

    #[test]
    fn rank_deficient_admixture_is_rejected_with_reason() {
        let mut cfg = RunConfig::default();
        cfg.apply_line("q = 0").unwrap();
        let err = format!("{:#}", cfg.two_qubit().unwrap_err());
        assert!(err.contains("rank deficient"), "{err}");
        assert!(err.contains("`q`"), "{err}");
    }

    #[test]
    fn grid_matches_requested_resolution() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("p_steps = 499\np_min = 0.501\np_max = 0.999\n", "test")
            .unwrap();
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.len(), 499);
        assert!((grid[1] - grid[0] - 1e-3).abs() < 1e-12);
        assert_eq!(grid[0], 0.501);
        assert_eq!(grid[498], 0.999);
    }

    #[test]
    fn enum_values_parse_case_insensitively() {
        let mut cfg = RunConfig::default();
        cfg.apply_line("scheme = Unbiased").unwrap();
        cfg.apply_line("engine = TCME").unwrap();
        cfg.apply_line("swap_rule = DecodedBlock").unwrap();
        cfg.apply_line("n_th_mode = FromBath").unwrap();
        assert_eq!(cfg.scheme, MeasurementKind::Unbiased);
        assert_eq!(cfg.engine, EngineChoice::Tcme);
        assert_eq!(cfg.swap_rule, SwapRule::DecodedBlock);
        assert_eq!(cfg.n_th_mode, NthMode::FromBath);
    }

    #[test]
    fn single_engine_is_required_where_one_cycle_is_reported() {
        assert!(EngineChoice::Both.single().is_err());
        assert_eq!(EngineChoice::Eme.single().unwrap(), EngineKind::Eme);
    }
}

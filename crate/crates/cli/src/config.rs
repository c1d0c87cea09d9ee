//! Experiment configuration: the TOML schema, field-level validation,
//! canonical serialization with a content hash, and resolution into the
//! runtime problem and march settings.
//!
//! The hash is computed over the canonical serialization of the resolved
//! config (after command-line overrides), and every artifact written by a
//! run embeds it, so files from different configurations never compare
//! silently.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rulesolve_core::excitation::Excitation;
use rulesolve_core::march::{BatchSizes, MarchConfig, Problem};
use rulesolve_core::optim::DecaySchedule;
use rulesolve_core::policy::SigmaMode;
use rulesolve_core::residuals::bouc_wen::EomParams;
use rulesolve_core::residuals::burgers::BurgersParams;
use rulesolve_core::residuals::couette::CouetteParams;
use rulesolve_core::residuals::lorenz::LorenzParams;
use rulesolve_core::residuals::van_der_pol::VdpParams;

/// Equation names accepted by the `equation` field.
pub const EQUATIONS: &[&str] = &[
    "van_der_pol",
    "equation_of_motion",
    "lorenz",
    "burgers",
    "schrodinger",
    "couette",
];

/// Reference solvers accepted by the `oracle` field (besides "auto").
pub const ORACLES: &[&str] = &[
    "rk45",
    "cole",
    "cole_unscaled",
    "burgers_fd",
    "mol",
    "analytic",
];

/// Top-level experiment description, one TOML file per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Config format version; only 1 is understood.
    pub schema_version: u32,
    /// Which equation to solve; see [`EQUATIONS`].
    pub equation: String,
    /// Free-form profile tag ("desk", "paper", ...), recorded in artifacts.
    #[serde(default = "default_profile")]
    pub profile: String,
    /// Reference solver for `oracle`/`compare`; "auto" picks per equation.
    #[serde(default = "default_oracle")]
    pub oracle: String,
    pub march: MarchSection,
    /// Defaults to a fixed 1e-3 when the section is omitted.
    #[serde(default = "default_lr")]
    pub learning_rate: LrSection,
    pub network: NetworkSection,
    #[serde(default)]
    pub params: ParamsSection,
    pub output: OutputSection,
}

fn default_profile() -> String {
    "desk".into()
}

fn default_oracle() -> String {
    "auto".into()
}

/// Time-marching and sampling settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarchSection {
    /// Slab width; nondimensional equations use seconds formally.
    pub dt_seconds: f64,
    /// Number of slabs; steady problems must use 1.
    pub n_steps: usize,
    /// Convergence threshold on every monitored mean squared residual.
    pub threshold: f64,
    /// Iteration budget per slab before it is flagged as non-converged.
    pub max_iters_per_step: u64,
    /// Seed for sampling and network initialization.
    pub seed: u64,
    /// Interior/equation points per iteration.
    pub batch_equation: usize,
    /// Points per already-solved slab (space-time problems).
    #[serde(default)]
    pub batch_prev_per_step: usize,
    /// Boundary points per iteration (field problems).
    #[serde(default)]
    pub batch_boundary: usize,
    /// Initial-profile or inlet/outlet points per iteration.
    #[serde(default)]
    pub batch_initial: usize,
    /// Cap on accumulated previous-slab points.
    #[serde(default = "default_prev_cap")]
    pub prev_cap: usize,
    /// Scale gradients by the Gaussian likelihood weight.
    #[serde(default = "default_true")]
    pub weighting: bool,
    /// Reset Adam moments at each new slab instead of carrying them.
    #[serde(default)]
    pub reset_adam_per_step: bool,
    /// Abort the march at the first non-converged slab.
    #[serde(default)]
    pub fail_fast: bool,
    /// Zero wall-clock fields so reruns are byte-identical.
    #[serde(default = "default_true")]
    pub deterministic: bool,
}

fn default_prev_cap() -> usize {
    20_000
}

fn default_true() -> bool {
    true
}

/// Stepped exponential learning-rate decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSection {
    pub initial: f64,
    /// Multiplier applied every `decay_interval_iters` iterations.
    pub decay_rate: f64,
    pub decay_interval_iters: u64,
    /// Lower bound the decayed rate never crosses.
    pub floor: f64,
}

/// Fixed 1e-3, the default where no rate is configured.
fn default_lr() -> LrSection {
    LrSection {
        initial: 1e-3,
        decay_rate: 1.0,
        decay_interval_iters: 1,
        floor: 1e-3,
    }
}

/// Policy network shape and exploration width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Hidden layer widths, e.g. [32, 32, 32].
    pub hidden: Vec<usize>,
    /// Gaussian standard deviation (fixed, or the softplus init if trainable).
    pub sigma: f64,
    /// If set, sigma is trainable with this lower bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_floor: Option<f64>,
}

/// Equation parameters; which keys apply depends on `equation`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    // Oscillator (van_der_pol) and hysteresis (equation_of_motion) share
    // alpha/beta; each equation reads only its own keys.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    // Lorenz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 3]>,
    // Equation of motion (Bouc-Wen shear frame).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_exp: Option<f64>,
    /// Ground-acceleration record; two CSV columns t, a. Relative paths are
    /// resolved against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_duration_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_dt_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_f_lo_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_f_hi_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_amp: Option<f64>,
    // Burgers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    // Schrodinger.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_edge_derivatives: Option<bool>,
    // Couette.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_kgm3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_pas: Option<f64>,
}

impl ParamsSection {
    /// Names of the keys that are set, for per-equation applicability checks.
    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! k {
            ($f:ident) => {
                if self.$f.is_some() {
                    keys.push(stringify!($f));
                }
            };
        }
        k!(alpha);
        k!(beta);
        k!(omega);
        k!(x0);
        k!(y0);
        k!(sigma);
        k!(rho);
        k!(start);
        k!(a_gain);
        k!(gamma);
        k!(n_exp);
        k!(excitation_csv);
        k!(excitation_seed);
        k!(excitation_duration_seconds);
        k!(excitation_dt_seconds);
        k!(excitation_f_lo_hz);
        k!(excitation_f_hi_hz);
        k!(excitation_amp);
        k!(nu);
        k!(match_edge_derivatives);
        k!(rho_kgm3);
        k!(mu_pas);
        keys
    }
}

/// Artifact locations and evaluation grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Run directory; created if missing.
    pub directory: String,
    /// Time samples (ODE curve points, or field snapshot count).
    #[serde(default = "default_201")]
    pub time_points: usize,
    /// Spatial samples per snapshot (field problems).
    #[serde(default = "default_201")]
    pub space_points: usize,
    /// Wall-normal samples for the channel problem.
    #[serde(default = "default_20")]
    pub wall_normal_points: usize,
    /// Write solution.svg next to solution.csv.
    #[serde(default = "default_true")]
    pub svg: bool,
    /// Checkpoint policy: "none", "final", or "all".
    #[serde(default = "default_checkpoints")]
    pub checkpoints: String,
}

fn default_201() -> usize {
    201
}

fn default_20() -> usize {
    20
}

fn default_checkpoints() -> String {
    "final".into()
}

/// Command-line overrides applied before hashing.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub profile: Option<String>,
    pub oracle: Option<String>,
    /// Forces march.deterministic = true when set.
    pub deterministic: bool,
}

/// Everything a subcommand needs to run: the resolved config, its canonical
/// text and hash, and the core runtime types built from it.
pub struct ResolvedRun {
    pub config: ExperimentConfig,
    pub toml_text: String,
    pub hash: String,
    pub problem: Problem,
    pub march: MarchConfig,
    pub hidden: Vec<usize>,
    pub sigma: SigmaMode,
    pub out_dir: PathBuf,
    /// Concrete oracle name after resolving "auto".
    pub oracle: String,
}

/// Parses a config from TOML text; errors carry the offending field/line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).context("invalid config")
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

/// Canonical serialization: fixed field order, defaults written explicitly,
/// unset optional params omitted.
pub fn canonical_toml(config: &ExperimentConfig) -> Result<String> {
    toml::to_string_pretty(config).context("serializing config")
}

/// Hex SHA-256 identifying the experiment: fields that cannot change the
/// computed solution (profile label, oracle choice, output section, the
/// deterministic flag) are normalized out, so solve and oracle artifacts
/// from one config match even when written to different directories.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let mut c = config.clone();
    c.profile = default_profile();
    c.oracle = default_oracle();
    c.output = OutputSection {
        directory: String::new(),
        time_points: default_201(),
        space_points: default_201(),
        wall_normal_points: default_20(),
        svg: default_true(),
        checkpoints: default_checkpoints(),
    };
    c.march.deterministic = true;
    let text = canonical_toml(&c)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive and finite, got {v}");
    }
    Ok(())
}

/// Field-level validation; every error names the offending field.
pub fn validate(config: &ExperimentConfig) -> Result<()> {
    if config.schema_version != 1 {
        bail!(
            "schema_version: unsupported version {} (this build reads 1)",
            config.schema_version
        );
    }
    if !EQUATIONS.contains(&config.equation.as_str()) {
        bail!(
            "equation: unknown equation {:?} (expected one of {})",
            config.equation,
            EQUATIONS.join(", ")
        );
    }
    if config.oracle != "auto" && !ORACLES.contains(&config.oracle.as_str()) {
        bail!(
            "oracle: unknown oracle {:?} (expected auto or one of {})",
            config.oracle,
            ORACLES.join(", ")
        );
    }
    let m = &config.march;
    positive("march.dt_seconds", m.dt_seconds)?;
    if m.n_steps == 0 {
        bail!("march.n_steps must be at least 1");
    }
    positive("march.threshold", m.threshold)?;
    if m.max_iters_per_step == 0 {
        bail!("march.max_iters_per_step must be at least 1");
    }
    if m.batch_equation == 0 {
        bail!("march.batch_equation must be at least 1");
    }
    let lr = &config.learning_rate;
    positive("learning_rate.initial", lr.initial)?;
    if !(lr.decay_rate > 0.0 && lr.decay_rate <= 1.0) {
        bail!(
            "learning_rate.decay_rate must lie in (0, 1], got {}",
            lr.decay_rate
        );
    }
    if lr.decay_interval_iters == 0 {
        bail!("learning_rate.decay_interval_iters must be at least 1");
    }
    if !(lr.floor >= 0.0 && lr.floor.is_finite()) {
        bail!("learning_rate.floor must be nonnegative, got {}", lr.floor);
    }
    let net = &config.network;
    if net.hidden.is_empty() || net.hidden.iter().any(|&h| h == 0) {
        bail!("network.hidden must be a nonempty list of positive widths");
    }
    positive("network.sigma", net.sigma)?;
    if let Some(floor) = net.sigma_floor {
        if !(floor > 0.0 && floor < net.sigma) {
            bail!(
                "network.sigma_floor must lie in (0, sigma), got {floor} with sigma {}",
                net.sigma
            );
        }
    }
    let out = &config.output;
    if out.directory.is_empty() {
        bail!("output.directory must not be empty");
    }
    for (name, v) in [
        ("output.time_points", out.time_points),
        ("output.space_points", out.space_points),
        ("output.wall_normal_points", out.wall_normal_points),
    ] {
        if v < 2 {
            bail!("{name} must be at least 2, got {v}");
        }
    }
    if !["none", "final", "all"].contains(&out.checkpoints.as_str()) {
        bail!(
            "output.checkpoints must be none, final, or all, got {:?}",
            out.checkpoints
        );
    }
    validate_equation_specifics(config)?;
    let allowed = allowed_params(&config.equation);
    for key in config.params.set_keys() {
        if !allowed.contains(&key) {
            bail!(
                "params.{key} does not apply to equation {:?} (allowed: {})",
                config.equation,
                allowed.join(", ")
            );
        }
    }
    Ok(())
}

fn allowed_params(equation: &str) -> &'static [&'static str] {
    match equation {
        "van_der_pol" => &["alpha", "beta", "omega", "x0", "y0"],
        "lorenz" => &["sigma", "rho", "beta", "start"],
        "equation_of_motion" => &[
            "alpha",
            "a_gain",
            "beta",
            "gamma",
            "n_exp",
            "excitation_csv",
            "excitation_seed",
            "excitation_duration_seconds",
            "excitation_dt_seconds",
            "excitation_f_lo_hz",
            "excitation_f_hi_hz",
            "excitation_amp",
        ],
        "burgers" => &["nu"],
        "schrodinger" => &["match_edge_derivatives"],
        "couette" => &["rho_kgm3", "mu_pas"],
        _ => &[],
    }
}

fn validate_equation_specifics(config: &ExperimentConfig) -> Result<()> {
    let m = &config.march;
    match config.equation.as_str() {
        "burgers" | "schrodinger" => {
            if m.batch_prev_per_step == 0 {
                bail!(
                    "march.batch_prev_per_step must be at least 1 for {} (previous slabs pin the warm start)",
                    config.equation
                );
            }
            if m.prev_cap < m.batch_prev_per_step {
                bail!(
                    "march.prev_cap must be at least batch_prev_per_step ({} < {})",
                    m.prev_cap,
                    m.batch_prev_per_step
                );
            }
            if config.equation == "schrodinger" {
                if m.batch_boundary == 0 {
                    bail!("march.batch_boundary must be at least 1 for schrodinger");
                }
                if m.batch_initial == 0 {
                    bail!("march.batch_initial must be at least 1 for schrodinger");
                }
            }
        }
        "couette" => {
            if m.n_steps != 1 {
                bail!(
                    "march.n_steps: couette is steady and must use exactly 1 step, got {}",
                    m.n_steps
                );
            }
            if m.batch_boundary < 2 {
                bail!("march.batch_boundary must be at least 2 for couette (both walls)");
            }
            if m.batch_initial < 2 {
                bail!("march.batch_initial must be at least 2 for couette (inlet and outlet)");
            }
        }
        _ => {}
    }
    Ok(())
}

/// Maps "auto" to the equation's default reference solver and rejects
/// oracle/equation pairs that do not go together.
pub fn resolve_oracle_name(oracle: &str, equation: &str) -> Result<String> {
    let auto = match equation {
        "van_der_pol" | "lorenz" | "equation_of_motion" => "rk45",
        "burgers" => "cole",
        "schrodinger" => "mol",
        "couette" => "analytic",
        other => bail!("equation: unknown equation {other:?}"),
    };
    if oracle == "auto" {
        return Ok(auto.into());
    }
    let compatible: &[&str] = match equation {
        "van_der_pol" | "lorenz" | "equation_of_motion" => &["rk45"],
        "burgers" => &["cole", "cole_unscaled", "burgers_fd"],
        "schrodinger" => &["mol"],
        "couette" => &["analytic"],
        _ => &[],
    };
    if !compatible.contains(&oracle) {
        bail!(
            "oracle: {oracle:?} does not apply to equation {:?} (expected auto or one of {})",
            equation,
            compatible.join(", ")
        );
    }
    Ok(oracle.into())
}

/// Applies overrides, validates, hashes, and builds the runtime types.
/// `base_dir` anchors relative paths inside the config (excitation CSV).
pub fn resolve(
    mut config: ExperimentConfig,
    overrides: &Overrides,
    base_dir: &Path,
) -> Result<ResolvedRun> {
    if let Some(out) = &overrides.out {
        config.output.directory = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = overrides.seed {
        config.march.seed = seed;
    }
    if let Some(profile) = &overrides.profile {
        config.profile = profile.clone();
    }
    if let Some(oracle) = &overrides.oracle {
        config.oracle = oracle.clone();
    }
    if overrides.deterministic {
        config.march.deterministic = true;
    }
    validate(&config)?;
    let toml_text = canonical_toml(&config)?;
    let hash = config_hash(&config)?;
    let problem = build_problem(&config, base_dir)?;
    let march = build_march(&config);
    let sigma = match config.network.sigma_floor {
        Some(floor) => SigmaMode::Trainable {
            init: config.network.sigma,
            floor,
        },
        None => SigmaMode::Fixed(config.network.sigma),
    };
    let oracle = resolve_oracle_name(&config.oracle, &config.equation)?;
    let out_dir = PathBuf::from(&config.output.directory);
    Ok(ResolvedRun {
        hidden: config.network.hidden.clone(),
        toml_text,
        hash,
        problem,
        march,
        sigma,
        out_dir,
        oracle,
        config,
    })
}

fn build_march(config: &ExperimentConfig) -> MarchConfig {
    let m = &config.march;
    let lr = &config.learning_rate;
    MarchConfig {
        dt: m.dt_seconds,
        n_steps: m.n_steps,
        threshold: m.threshold,
        max_iters_per_step: m.max_iters_per_step,
        lr: DecaySchedule::new(lr.initial, lr.decay_rate, lr.decay_interval_iters, lr.floor),
        seed: m.seed,
        batch: BatchSizes {
            equation: m.batch_equation,
            prev_per_step: m.batch_prev_per_step,
            boundary: m.batch_boundary,
            initial: m.batch_initial,
        },
        prev_cap: m.prev_cap,
        weighting: m.weighting,
        reset_adam_per_step: m.reset_adam_per_step,
        fail_fast: m.fail_fast,
        deterministic: m.deterministic,
    }
}

fn build_problem(config: &ExperimentConfig, base_dir: &Path) -> Result<Problem> {
    let p = &config.params;
    let problem = match config.equation.as_str() {
        "van_der_pol" => {
            let d = VdpParams::default();
            Problem::VanDerPol(VdpParams {
                alpha: p.alpha.unwrap_or(d.alpha),
                beta: p.beta.unwrap_or(d.beta),
                omega: p.omega.unwrap_or(d.omega),
                x0: p.x0.unwrap_or(d.x0),
                y0: p.y0.unwrap_or(d.y0),
            })
        }
        "lorenz" => {
            let d = LorenzParams::default();
            Problem::Lorenz {
                params: LorenzParams {
                    sigma: p.sigma.unwrap_or(d.sigma),
                    rho: p.rho.unwrap_or(d.rho),
                    beta: p.beta.unwrap_or(d.beta),
                },
                start: p.start.unwrap_or([0.0, 2.0, 0.0]),
            }
        }
        "equation_of_motion" => {
            let d = EomParams::default();
            let params = EomParams {
                alpha: p.alpha.unwrap_or(d.alpha),
                a_gain: p.a_gain.unwrap_or(d.a_gain),
                beta: p.beta.unwrap_or(d.beta),
                gamma: p.gamma.unwrap_or(d.gamma),
                n_exp: p.n_exp.unwrap_or(d.n_exp),
                ..d
            };
            let excitation = build_excitation(config, base_dir)?;
            Problem::EquationOfMotion { params, excitation }
        }
        "burgers" => Problem::Burgers(BurgersParams {
            nu: p.nu.unwrap_or(BurgersParams::default().nu),
        }),
        "schrodinger" => Problem::Schrodinger {
            match_derivatives: p.match_edge_derivatives.unwrap_or(true),
        },
        "couette" => {
            let d = CouetteParams::default();
            Problem::Couette(CouetteParams {
                rho: p.rho_kgm3.unwrap_or(d.rho),
                mu: p.mu_pas.unwrap_or(d.mu),
            })
        }
        other => bail!("equation: unknown equation {other:?}"),
    };
    Ok(problem)
}

fn build_excitation(config: &ExperimentConfig, base_dir: &Path) -> Result<Excitation> {
    let p = &config.params;
    if let Some(rel) = &p.excitation_csv {
        let path = base_dir.join(rel);
        return Excitation::from_csv_path(&path)
            .with_context(|| format!("params.excitation_csv: loading {}", path.display()));
    }
    // One slab of padding past the horizon keeps the record interpolable at
    // the final instant.
    let horizon = config.march.dt_seconds * config.march.n_steps as f64;
    let duration = p
        .excitation_duration_seconds
        .unwrap_or(horizon + config.march.dt_seconds);
    if duration < horizon {
        bail!(
            "params.excitation_duration_seconds must cover the march horizon {horizon}, got {duration}"
        );
    }
    Ok(Excitation::synthetic(
        p.excitation_seed.unwrap_or(1),
        duration,
        p.excitation_dt_seconds.unwrap_or(0.02),
        p.excitation_f_lo_hz.unwrap_or(0.5),
        p.excitation_f_hi_hz.unwrap_or(8.0),
        p.excitation_amp.unwrap_or(1.0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(equation: &str) -> String {
        format!(
            r#"
schema_version = 1
equation = "{equation}"

[march]
dt_seconds = 0.1
n_steps = 2
threshold = 1e-3
max_iters_per_step = 100
seed = 7
batch_equation = 10
batch_prev_per_step = 10
batch_boundary = 4
batch_initial = 4

[learning_rate]
initial = 0.01
decay_rate = 0.99
decay_interval_iters = 50
floor = 1e-4

[network]
hidden = [8, 8]
sigma = 0.05

[output]
directory = "runs/test"
"#
        )
    }

    #[test]
    fn round_trip_is_identical() {
        let parsed = parse_config(&minimal("van_der_pol")).unwrap();
        let text1 = canonical_toml(&parsed).unwrap();
        let reparsed = parse_config(&text1).unwrap();
        assert_eq!(parsed, reparsed);
        let text2 = canonical_toml(&reparsed).unwrap();
        assert_eq!(text1, text2);
        assert_eq!(
            config_hash(&parsed).unwrap(),
            config_hash(&reparsed).unwrap()
        );
    }

    #[test]
    fn omitted_learning_rate_defaults_to_fixed_1e_neg3() {
        let text = minimal("van_der_pol");
        let start = text.find("[learning_rate]").unwrap();
        let end = text.find("[network]").unwrap();
        let stripped = format!("{}{}", &text[..start], &text[end..]);
        let config = parse_config(&stripped).unwrap();
        assert_eq!(config.learning_rate.initial, 1e-3);
        assert_eq!(config.learning_rate.decay_rate, 1.0);
        assert_eq!(config.learning_rate.floor, 1e-3);
        validate(&config).unwrap();
    }

    #[test]
    fn output_location_does_not_change_the_hash() {
        let config = parse_config(&minimal("van_der_pol")).unwrap();
        let base = resolve(config.clone(), &Overrides::default(), Path::new(".")).unwrap();
        let moved = resolve(
            config,
            &Overrides {
                out: Some(PathBuf::from("/elsewhere")),
                ..Overrides::default()
            },
            Path::new("."),
        )
        .unwrap();
        assert_eq!(base.hash, moved.hash);
        assert_eq!(moved.out_dir, PathBuf::from("/elsewhere"));
    }

    #[test]
    fn unknown_field_is_rejected_by_name() {
        let text = minimal("van_der_pol").replace("seed = 7", "seed = 7\nbanana = 1");
        let err = format!("{:#}", parse_config(&text).unwrap_err());
        assert!(err.contains("banana"), "{err}");
    }

    #[test]
    fn negative_dt_names_the_field() {
        let mut config = parse_config(&minimal("van_der_pol")).unwrap();
        config.march.dt_seconds = -0.01;
        let err = format!("{}", validate(&config).unwrap_err());
        assert!(err.contains("march.dt_seconds"), "{err}");
    }

    #[test]
    fn inapplicable_param_names_the_key() {
        let mut config = parse_config(&minimal("lorenz")).unwrap();
        config.params.nu = Some(0.1);
        let err = format!("{}", validate(&config).unwrap_err());
        assert!(err.contains("params.nu"), "{err}");
    }

    #[test]
    fn couette_requires_a_single_step() {
        let mut config = parse_config(&minimal("couette")).unwrap();
        config.march.n_steps = 3;
        let err = format!("{}", validate(&config).unwrap_err());
        assert!(err.contains("march.n_steps"), "{err}");
    }

    #[test]
    fn oracle_auto_resolves_per_equation() {
        assert_eq!(resolve_oracle_name("auto", "burgers").unwrap(), "cole");
        assert_eq!(resolve_oracle_name("auto", "lorenz").unwrap(), "rk45");
        assert_eq!(resolve_oracle_name("auto", "couette").unwrap(), "analytic");
        assert!(resolve_oracle_name("cole", "lorenz").is_err());
        assert_eq!(
            resolve_oracle_name("burgers_fd", "burgers").unwrap(),
            "burgers_fd"
        );
    }

    #[test]
    fn overrides_change_the_hash() {
        let config = parse_config(&minimal("van_der_pol")).unwrap();
        let base = resolve(config.clone(), &Overrides::default(), Path::new(".")).unwrap();
        let seeded = resolve(
            config,
            &Overrides {
                seed: Some(99),
                ..Overrides::default()
            },
            Path::new("."),
        )
        .unwrap();
        assert_ne!(base.hash, seeded.hash);
        assert_eq!(seeded.march.seed, 99);
    }
}

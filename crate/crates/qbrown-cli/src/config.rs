//! Run configuration: a JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20120423;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    Json,
}

/// Generates a resolved parameter struct with defaults and a flag struct
/// with every field optional.
macro_rules! params {
    (
        $(#[$meta:meta])*
        $name:ident, $flags:ident {
            $( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr ),* $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $( $(#[doc = $doc])* pub $field: $ty, )*
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        #[derive(Debug, Clone, Default, clap::Args, Serialize)]
        pub struct $flags {
            $(
                $(#[doc = $doc])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

params! {
    CriterionScanParams, CriterionScanFlags {
        eta_tilde: f64 = 10.0,
        r: f64 = 0.1,
        u_min: f64 = 0.0,
        u_max: f64 = 8.0,
        /// Samples including both ends.
        points: usize = 801,
    }
}

params! {
    QbeSolveParams, QbeSolveFlags {
        eta_tilde: f64 = 2.0,
        r: f64 = 1.0,
        gamma: f64 = 1.0,
        t_max: f64 = 5.0,
        points: usize = 501,
        mean_q: f64 = 0.0,
        mean_p: f64 = 0.0,
        cov_qq: f64 = 0.5,
        cov_pp: f64 = 0.5,
        cov_qp: f64 = 0.0,
    }
}

params! {
    HrCoeffsParams, HrCoeffsFlags {
        alpha: f64 = 10.0,
        kappa: f64 = 0.1,
        omega0: f64 = 2.0,
        kt: f64 = 5.0,
        m: f64 = 1.0,
        hbar: f64 = 1.0,
        t_max: f64 = 20.0,
        points: usize = 2001,
        /// Grid exponent: t_i = t_max (i/n)^grading.
        grading: f64 = 1.0,
    }
}

params! {
    WnIntegrateParams, WnIntegrateFlags {
        /// `hr` or `qbe`.
        system: String = "hr".into(),
        alpha: f64 = 10.0,
        kappa: f64 = 0.1,
        omega0: f64 = 2.0,
        kt: f64 = 5.0,
        m: f64 = 1.0,
        hbar: f64 = 1.0,
        eta_tilde: f64 = 2.0,
        r: f64 = 1.0,
        gamma: f64 = 1.0,
        t_max: f64 = 20.0,
        points: usize = 801,
        grading: f64 = 3.0,
    }
}

params! {
    PositivityReportParams, PositivityReportFlags {
        /// `hr` or `qbe`.
        system: String = "hr".into(),
        alpha: f64 = 10.0,
        kappa: f64 = 0.1,
        omega0: f64 = 2.0,
        kt: f64 = 5.0,
        m: f64 = 1.0,
        hbar: f64 = 1.0,
        eta_tilde: f64 = 2.0,
        r: f64 = 1.0,
        gamma: f64 = 1.0,
        t_max: f64 = 20.0,
        points: usize = 801,
        grading: f64 = 3.0,
        /// Phase-space scale of the u coordinates.
        eta: f64 = 1.0,
    }
}

params! {
    WitnessParams, WitnessFlags {
        eta_form: f64 = 1.0,
        xi: f64 = 0.0,
        zeta_re: f64 = 0.0,
        zeta_im: f64 = 1.0,
        hbar: f64 = 1.0,
        m: f64 = 1.0,
        n: usize = 60,
        n_check: usize = 80,
        leak_tol: f64 = 1e-5,
    }
}

params! {
    OracleCompareParams, OracleCompareFlags {
        /// analytic-vs-oracle, wn-vs-closed-form, riccati-vs-direct or criterion-vs-oracle.
        scenario: String = "analytic-vs-oracle".into(),
        n: usize = 60,
        /// Random initial states (analytic-vs-oracle) or per pair (criterion-vs-oracle).
        states: usize = 3,
    }
}

params! {
    IdentityCheckParams, IdentityCheckFlags {
        /// Truncation for the damping identities.
        n: usize = 40,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CriterionScan,
    QbeSolve,
    HrCoeffs,
    WnIntegrate,
    PositivityReport,
    Witness,
    OracleCompare,
    IdentityCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CriterionScan => "criterion-scan",
            Command::QbeSolve => "qbe-solve",
            Command::HrCoeffs => "hr-coeffs",
            Command::WnIntegrate => "wn-integrate",
            Command::PositivityReport => "positivity-report",
            Command::Witness => "witness",
            Command::OracleCompare => "oracle-compare",
            Command::IdentityCheck => "identity-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    CriterionScan(CriterionScanParams),
    QbeSolve(QbeSolveParams),
    HrCoeffs(HrCoeffsParams),
    WnIntegrate(WnIntegrateParams),
    PositivityReport(PositivityReportParams),
    Witness(WitnessParams),
    OracleCompare(OracleCompareParams),
    IdentityCheck(IdentityCheckParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub seed: u64,
}

#[derive(Debug, Parser)]
#[command(
    name = "qbrown",
    version,
    about = "Positivity analysis of quantum Brownian master equations"
)]
pub struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output formats.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Option<CommandFlags>,
}

#[derive(Debug, Subcommand)]
pub enum CommandFlags {
    /// Sample s(u) and list its sign changes.
    CriterionScan(CriterionScanFlags),
    /// Closed-form Gaussian trajectory of the standard equation.
    QbeSolve(QbeSolveFlags),
    /// Exact Haake-Reibold coefficients on a grid.
    HrCoeffs(HrCoeffsFlags),
    /// Exponent coordinates along a trajectory.
    WnIntegrate(WnIntegrateFlags),
    /// Sufficient positivity conditions along a trajectory.
    PositivityReport(PositivityReportFlags),
    /// Non-positivity witness for a Lemma form, checked in the number basis.
    Witness(WitnessFlags),
    /// Compare two computation paths.
    OracleCompare(OracleCompareFlags),
    /// Operator identities in the number basis.
    IdentityCheck(IdentityCheckFlags),
}

impl CommandFlags {
    fn split(&self) -> Result<(Command, Value), CliError> {
        let v =
            |x: Result<Value, serde_json::Error>| x.map_err(|e| CliError::Config(e.to_string()));
        Ok(match self {
            CommandFlags::CriterionScan(f) => (Command::CriterionScan, v(serde_json::to_value(f))?),
            CommandFlags::QbeSolve(f) => (Command::QbeSolve, v(serde_json::to_value(f))?),
            CommandFlags::HrCoeffs(f) => (Command::HrCoeffs, v(serde_json::to_value(f))?),
            CommandFlags::WnIntegrate(f) => (Command::WnIntegrate, v(serde_json::to_value(f))?),
            CommandFlags::PositivityReport(f) => {
                (Command::PositivityReport, v(serde_json::to_value(f))?)
            }
            CommandFlags::Witness(f) => (Command::Witness, v(serde_json::to_value(f))?),
            CommandFlags::OracleCompare(f) => (Command::OracleCompare, v(serde_json::to_value(f))?),
            CommandFlags::IdentityCheck(f) => (Command::IdentityCheck, v(serde_json::to_value(f))?),
        })
    }
}

/// Layout of the config file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    #[serde(default)]
    params: Map<String, Value>,
    output_dir: Option<PathBuf>,
    formats: Option<Vec<Format>>,
    seed: Option<u64>,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn typed<P: DeserializeOwned>(map: Map<String, Value>) -> Result<P, CliError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let mut params = file.params;
        let command = match (&cli.command, file.command) {
            (Some(flags), from_file) => {
                let (cmd, over) = flags.split()?;
                if let Some(f) = from_file {
                    if f != cmd {
                        return Err(CliError::Config(format!(
                            "config file is for {} but {} was requested",
                            f.name(),
                            cmd.name()
                        )));
                    }
                }
                if let Value::Object(over) = over {
                    params.extend(over);
                }
                cmd
            }
            (None, Some(f)) => f,
            (None, None) => {
                return Err(CliError::Config(
                    "no command given on the command line or in the config file".into(),
                ))
            }
        };
        let params = match command {
            Command::CriterionScan => Params::CriterionScan(typed(params)?),
            Command::QbeSolve => Params::QbeSolve(typed(params)?),
            Command::HrCoeffs => Params::HrCoeffs(typed(params)?),
            Command::WnIntegrate => Params::WnIntegrate(typed(params)?),
            Command::PositivityReport => Params::PositivityReport(typed(params)?),
            Command::Witness => Params::Witness(typed(params)?),
            Command::OracleCompare => Params::OracleCompare(typed(params)?),
            Command::IdentityCheck => Params::IdentityCheck(typed(params)?),
        };
        let mut formats = cli
            .format
            .or(file.formats)
            .unwrap_or_else(|| vec![Format::Csv, Format::Svg, Format::Json]);
        formats.sort_by_key(|f| *f as u8);
        formats.dedup();
        let config = RunConfig {
            command,
            params,
            output_dir: cli.out.or(file.output_dir).unwrap_or_else(|| "out".into()),
            formats,
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        };
        config.validate()?;
        Ok(config)
    }

    /// Config for `command` with default parameters.
    pub fn defaults(command: Command, output_dir: impl Into<PathBuf>) -> Self {
        let params = match command {
            Command::CriterionScan => Params::CriterionScan(Default::default()),
            Command::QbeSolve => Params::QbeSolve(Default::default()),
            Command::HrCoeffs => Params::HrCoeffs(Default::default()),
            Command::WnIntegrate => Params::WnIntegrate(Default::default()),
            Command::PositivityReport => Params::PositivityReport(Default::default()),
            Command::Witness => Params::Witness(Default::default()),
            Command::OracleCompare => Params::OracleCompare(Default::default()),
            Command::IdentityCheck => Params::IdentityCheck(Default::default()),
        };
        RunConfig {
            command,
            params,
            output_dir: output_dir.into(),
            formats: vec![Format::Csv, Format::Svg, Format::Json],
            seed: DEFAULT_SEED,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Checks the preconditions that can be stated without running anything;
    /// the modules re-check their own.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.formats.is_empty() {
            return Err(CliError::Config("no output format selected".into()));
        }
        match &self.params {
            Params::CriterionScan(p) => {
                positive("eta_tilde", p.eta_tilde)?;
                non_negative("r", p.r)?;
                non_negative("u_min", p.u_min)?;
                interval("u_min", p.u_min, "u_max", p.u_max)?;
                at_least("points", p.points, 2)?;
            }
            Params::QbeSolve(p) => {
                positive("eta_tilde", p.eta_tilde)?;
                positive("gamma", p.gamma)?;
                if !(p.r >= 0.0 && p.r < p.eta_tilde) {
                    return Err(CliError::Config(format!(
                        "need 0 <= r < eta_tilde, got r = {}, eta_tilde = {}",
                        p.r, p.eta_tilde
                    )));
                }
                positive("t_max", p.t_max)?;
                at_least("points", p.points, 2)?;
                for (name, x) in [
                    ("mean_q", p.mean_q),
                    ("mean_p", p.mean_p),
                    ("cov_qp", p.cov_qp),
                ] {
                    finite(name, x)?;
                }
                positive("cov_qq", p.cov_qq)?;
                positive("cov_pp", p.cov_pp)?;
            }
            Params::HrCoeffs(p) => {
                hr_checks(p.alpha, p.kappa, p.omega0, p.kt, p.m, p.hbar)?;
                positive("t_max", p.t_max)?;
                at_least("points", p.points, 2)?;
                positive("grading", p.grading)?;
            }
            Params::WnIntegrate(p) => {
                system_checks(
                    &p.system,
                    [p.alpha, p.kappa, p.omega0, p.kt, p.m, p.hbar],
                    p.eta_tilde,
                    p.r,
                    p.gamma,
                )?;
                positive("t_max", p.t_max)?;
                at_least("points", p.points, 2)?;
                positive("grading", p.grading)?;
            }
            Params::PositivityReport(p) => {
                system_checks(
                    &p.system,
                    [p.alpha, p.kappa, p.omega0, p.kt, p.m, p.hbar],
                    p.eta_tilde,
                    p.r,
                    p.gamma,
                )?;
                positive("t_max", p.t_max)?;
                at_least("points", p.points, 2)?;
                positive("grading", p.grading)?;
                positive("eta", p.eta)?;
            }
            Params::Witness(p) => {
                for (name, x) in [
                    ("eta_form", p.eta_form),
                    ("xi", p.xi),
                    ("zeta_re", p.zeta_re),
                ] {
                    finite(name, x)?;
                }
                positive("zeta_im", p.zeta_im)?;
                positive("hbar", p.hbar)?;
                positive("m", p.m)?;
                positive("leak_tol", p.leak_tol)?;
                at_least("n", p.n, 4)?;
                if p.n_check <= p.n {
                    return Err(CliError::Config(format!(
                        "n_check = {} must exceed n = {}",
                        p.n_check, p.n
                    )));
                }
            }
            Params::OracleCompare(p) => {
                if !crate::compare::SCENARIOS.contains(&p.scenario.as_str()) {
                    return Err(CliError::Config(format!(
                        "unknown scenario {:?}; expected one of {}",
                        p.scenario,
                        crate::compare::SCENARIOS.join(", ")
                    )));
                }
                at_least("n", p.n, 20)?;
                at_least("states", p.states, 1)?;
            }
            Params::IdentityCheck(p) => at_least("n", p.n, 20)?,
        }
        Ok(())
    }
}

fn finite(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} = {x} must be finite")))
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} = {x} must be finite and positive"
        )))
    }
}

fn non_negative(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} = {x} must be finite and non-negative"
        )))
    }
}

fn interval(lo_name: &str, lo: f64, hi_name: &str, hi: f64) -> Result<(), CliError> {
    if hi.is_finite() && hi > lo {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{hi_name} = {hi} must exceed {lo_name} = {lo}"
        )))
    }
}

fn at_least(name: &str, x: usize, min: usize) -> Result<(), CliError> {
    if x >= min {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} = {x} must be at least {min}"
        )))
    }
}

fn hr_checks(
    alpha: f64,
    kappa: f64,
    omega0: f64,
    kt: f64,
    m: f64,
    hbar: f64,
) -> Result<(), CliError> {
    for (name, x) in [
        ("alpha", alpha),
        ("kappa", kappa),
        ("omega0", omega0),
        ("kt", kt),
        ("m", m),
        ("hbar", hbar),
    ] {
        positive(name, x)?;
    }
    let w2 = omega0 * omega0 - alpha * kappa;
    if !(w2 > 0.0) {
        return Err(CliError::Config(format!(
            "renormalized frequency omega0^2 - alpha kappa = {w2} must be positive"
        )));
    }
    Ok(())
}

fn system_checks(
    system: &str,
    hr: [f64; 6],
    eta_tilde: f64,
    r: f64,
    gamma: f64,
) -> Result<(), CliError> {
    match system {
        "hr" => hr_checks(hr[0], hr[1], hr[2], hr[3], hr[4], hr[5]),
        "qbe" => {
            positive("eta_tilde", eta_tilde)?;
            positive("gamma", gamma)?;
            if r >= 0.0 && r < eta_tilde {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "need 0 <= r < eta_tilde, got r = {r}, eta_tilde = {eta_tilde}"
                )))
            }
        }
        other => Err(CliError::Config(format!(
            "unknown system {other:?}; expected hr or qbe"
        ))),
    }
}

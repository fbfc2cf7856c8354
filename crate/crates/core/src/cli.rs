//! Batch front-end: JSON in, JSON out.
//!
//! Exit codes: 0 success, 1 input error, 2 a verification decided "rejected".

use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::classify::{classify2d, classify_general, spectral_summary, ClassifyError};
use crate::distribution::{Atom, AtomJson, DistributionError, DistributionJson, ModelDistribution};
use crate::operator::{decompose, image_of_i_plus_adjoint, LinearOperator, MatrixJson, OperatorError};
use crate::verify::residual::residual_with;
use crate::verify::symmetry::{guided_test_points, DEFAULT_TEST_POINTS, GUIDE_MAX, GUIDE_STEP};
use crate::verify::{mc_symmetry_test, Decision, Equation, GridSpec, TestPoint, VerifyError};
use crate::witness::{construct_witness, MatrixPair, WitnessError, WitnessJson, WitnessOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Decompose ℝⁿ = F ⊕ G and summarize the spectrum.
    Analyze,
    /// Report the admissible family of distribution pairs.
    Classify,
    /// Build a witness pair satisfying the Heyde equation.
    Construct,
    /// Evaluate functional-equation residuals from exact characteristic functions.
    Verify,
    /// Run the Monte-Carlo symmetry test.
    Simulate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationChoice {
    Heyde,
    Sd,
    Both,
}

impl EquationChoice {
    fn equations(self) -> Vec<Equation> {
        match self {
            EquationChoice::Heyde => vec![Equation::Heyde],
            EquationChoice::Sd => vec![Equation::SkitovichDarmois],
            EquationChoice::Both => vec![Equation::Heyde, Equation::SkitovichDarmois],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Parser, Serialize)]
#[command(name = "heyde", version, about = "Heyde characterization toolkit: operators, classification, witnesses, verification")]
pub struct CommandConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON input file.
    #[arg(long = "input")]
    pub input_path: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long = "output")]
    pub output_path: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Monte-Carlo sample count for `simulate`.
    #[arg(long = "samples", default_value_t = 100_000)]
    pub sample_count: usize,
    /// Residual grid spacing.
    #[arg(long, default_value_t = 0.5)]
    pub grid_step: f64,
    /// Residual grid half-width.
    #[arg(long, default_value_t = 2.0)]
    pub grid_max: f64,
    #[arg(long, value_enum, default_value_t = EquationChoice::Heyde)]
    pub equation: EquationChoice,
    /// `verify` rejects when a sup residual exceeds this.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("invalid input JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

/// Rendered report and the exit code it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianPairJson {
    #[serde(rename = "A1")]
    a1: Vec<Vec<f64>>,
    #[serde(rename = "A2")]
    a2: Vec<Vec<f64>>,
}

/// `construct` input.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstructInput {
    alpha: MatrixJson,
    #[serde(default)]
    omega_atoms: Option<Vec<AtomJson>>,
    #[serde(default)]
    shift_x: Option<Vec<f64>>,
    #[serde(default)]
    gaussian_scale: Option<f64>,
    #[serde(default)]
    gaussians: Option<GaussianPairJson>,
}

/// `verify` and `simulate` input.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairInput {
    alpha: MatrixJson,
    mu1: DistributionJson,
    mu2: DistributionJson,
    #[serde(default)]
    test_points: Option<Vec<TestPoint>>,
}

fn square(rows: &[Vec<f64>], n: usize, name: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("field `{name}` must be a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    Ok(serde_json::from_str(text)?)
}

fn grid(config: &CommandConfig, dim: usize) -> Result<GridSpec, CliError> {
    if !(config.grid_step > 0.0 && config.grid_step.is_finite()) || !(config.grid_max > 0.0 && config.grid_max.is_finite()) {
        return Err(CliError::Config("--grid-step and --grid-max must be positive".into()));
    }
    Ok(GridSpec::uniform(dim, config.grid_step, config.grid_max, 0))
}

fn analyze(alpha: &LinearOperator) -> Result<Value, CliError> {
    let d = decompose(alpha)?;
    let check = d.invariant_report(alpha);
    Ok(json!({
        "decomposition": {
            "dims": { "K": d.k.dim(), "F": d.f.dim(), "G": d.g.dim() },
            "K": d.k,
            "F": d.f,
            "G": d.g,
            "H": image_of_i_plus_adjoint(alpha),
            "alpha_F": MatrixJson::from_matrix(&d.alpha_f),
            "alpha_G": MatrixJson::from_matrix(&d.alpha_g),
            "root_equals_eigen": d.root_equals_eigen,
            "invariants": check,
        },
        "spectral_summary": spectral_summary(alpha),
    }))
}

fn classify(alpha: &LinearOperator) -> Result<Value, CliError> {
    let general = classify_general(alpha)?;
    let family = if alpha.dim() == 2 { classify2d(alpha)? } else { general.clone() };
    Ok(json!({ "family": family, "general": general }))
}

fn construct(text: &str) -> Result<Value, CliError> {
    let input: ConstructInput = parse(text)?;
    let alpha = input.alpha.to_operator()?;
    let n = alpha.dim();
    let gaussians = match input.gaussians {
        Some(g) => Some(MatrixPair { a1: square(&g.a1, n, "gaussians.A1")?, a2: square(&g.a2, n, "gaussians.A2")? }),
        None => None,
    };
    let options = WitnessOptions {
        omega_atoms: input.omega_atoms.map(|atoms| {
            atoms.into_iter().map(|a| Atom { point: DVector::from_vec(a.point), weight: a.weight }).collect()
        }),
        shift_x: input.shift_x.map(DVector::from_vec),
        gaussian_scale: input.gaussian_scale.unwrap_or(1.0),
        gaussians,
    };
    let witness = construct_witness(&alpha, &options)?;
    Ok(serde_json::to_value(WitnessJson::from(&witness))?)
}

type Pair = (LinearOperator, ModelDistribution, ModelDistribution, Option<Vec<TestPoint>>);

fn load_pair(text: &str) -> Result<Pair, CliError> {
    let input: PairInput = parse(text)?;
    let alpha = input.alpha.to_operator()?;
    let n = alpha.dim();
    let mu1 = input.mu1.to_model(Some(n))?;
    let mu2 = input.mu2.to_model(Some(n))?;
    Ok((alpha, mu1, mu2, input.test_points))
}

fn verify(config: &CommandConfig, text: &str) -> Result<(Value, bool), CliError> {
    let (alpha, mu1, mu2, _) = load_pair(text)?;
    let grid = grid(config, alpha.dim())?;
    let reports = config
        .equation
        .equations()
        .into_iter()
        .map(|e| residual_with(e, &mu1, &mu2, &alpha, &grid, Default::default()))
        .collect::<Result<Vec<_>, _>>()?;
    let rejected = reports.iter().any(|r| !(r.sup_residual <= config.tolerance));
    let decision = if rejected { Decision::Rejected } else { Decision::Consistent };
    Ok((json!({ "reports": reports, "tolerance": config.tolerance, "decision": decision }), rejected))
}

fn simulate(config: &CommandConfig, text: &str) -> Result<(Value, bool), CliError> {
    let (alpha, mu1, mu2, points) = load_pair(text)?;
    let points = match points {
        Some(p) => p,
        None => guided_test_points(&mu1, &mu2, &alpha, DEFAULT_TEST_POINTS, GUIDE_STEP, GUIDE_MAX)?,
    };
    let report = mc_symmetry_test(&mu1, &mu2, &alpha, config.sample_count, &points, config.seed)?;
    let rejected = report.decision == Decision::Rejected;
    Ok((json!({ "report": report }), rejected))
}

/// Run one command and render its report, without touching the output path.
pub fn execute(config: &CommandConfig) -> Result<Outcome, CliError> {
    let path = config.input_path.display().to_string();
    let text = fs::read_to_string(&config.input_path).map_err(|source| CliError::Read { path, source })?;
    let matrix = || -> Result<LinearOperator, CliError> { Ok(parse::<MatrixJson>(&text)?.to_operator()?) };
    let (body, rejected) = match config.command {
        Command::Analyze => (analyze(&matrix()?)?, false),
        Command::Classify => (classify(&matrix()?)?, false),
        Command::Construct => (construct(&text)?, false),
        Command::Verify => verify(config, &text)?,
        Command::Simulate => simulate(config, &text)?,
    };
    let mut report = json!({ "config": config });
    if let (Value::Object(out), Value::Object(fields)) = (&mut report, body) {
        out.extend(fields);
    }
    let mut output = serde_json::to_string_pretty(&report)?;
    output.push('\n');
    Ok(Outcome { output, exit_code: if rejected { EXIT_REJECTED } else { EXIT_OK } })
}

/// Execute, write the report, and return the process exit code.
pub fn run(config: &CommandConfig) -> i32 {
    let result = execute(config).and_then(|outcome| {
        match &config.output_path {
            Some(p) => fs::write(p, &outcome.output)
                .map_err(|source| CliError::Write { path: p.display().to_string(), source })?,
            None => print!("{}", outcome.output),
        }
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn config(command: Command, input: &str) -> (CommandConfig, tempfile::NamedTempFile) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(input.as_bytes()).unwrap();
        let c = CommandConfig::parse_from(["heyde", "analyze", "--input", f.path().to_str().unwrap()]);
        (CommandConfig { command, ..c }, f)
    }

    #[test]
    fn defaults() {
        let c = CommandConfig::parse_from(["heyde", "verify", "--input", "x.json"]);
        assert_eq!((c.seed, c.sample_count, c.grid_step, c.grid_max), (42, 100_000, 0.5, 2.0));
        assert_eq!(c.equation, EquationChoice::Heyde);
        assert_eq!(c.output_path, None);
    }

    #[test]
    fn analyze_jordan_cell() {
        let (c, _f) = config(Command::Analyze, r#"{"n": 2, "rows": [[-1, 1], [0, -1]]}"#);
        let out = execute(&c).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        let v: Value = serde_json::from_str(&out.output).unwrap();
        assert_eq!(v["decomposition"]["dims"], json!({"K": 1, "F": 2, "G": 0}));
        assert_eq!(v["decomposition"]["root_equals_eigen"], false);
        assert_eq!(v["config"]["command"], "analyze");
    }

    #[test]
    fn verify_equal_laws_under_minus_identity() {
        let input = r#"{"alpha": {"n": 2, "rows": [[-1, 0], [0, -1]]},
            "mu1": {"atoms": [{"point": [1, 0], "weight": 0.5}, {"point": [0, 2], "weight": 0.5}]},
            "mu2": {"atoms": [{"point": [1, 0], "weight": 0.5}, {"point": [0, 2], "weight": 0.5}]}}"#;
        let (c, _f) = config(Command::Verify, input);
        let out = execute(&CommandConfig { equation: EquationChoice::Both, ..c.clone() }).unwrap();
        let v: Value = serde_json::from_str(&out.output).unwrap();
        assert!(v["reports"][0]["sup_residual"].as_f64().unwrap() <= 1e-12);
        // Skitovich–Darmois fails for these atoms, so `both` rejects.
        assert_eq!(out.exit_code, EXIT_REJECTED);
        assert_eq!(execute(&c).unwrap().exit_code, EXIT_OK);
    }

    #[test]
    fn unknown_field_is_named() {
        let (c, _f) = config(Command::Analyze, r#"{"n": 2, "rows": [[1, 0], [0, 1]], "extra": 1}"#);
        let err = execute(&c).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        assert_eq!(run(&c), EXIT_INPUT);
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        let input = r#"{"alpha": {"n": 2, "rows": [[2, 0], [0, 3]]}, "mu1": {"shift": [0, 0, 0]}, "mu2": {}}"#;
        let (c, _f) = config(Command::Verify, input);
        assert!(matches!(execute(&c), Err(CliError::Distribution(DistributionError::DimensionMismatch { .. }))));
    }

    #[test]
    fn construct_embeds_provenance() {
        let (c, _f) = config(Command::Construct, r#"{"alpha": {"n": 2, "rows": [[-2, 0], [0, -3]]}}"#);
        let v: Value = serde_json::from_str(&execute(&c).unwrap().output).unwrap();
        assert_eq!(v["provenance"]["passed"], true);
        assert_eq!(v["mu1"]["gaussian"]["A"], json!([[2.0, 0.0], [0.0, 3.0]]));
    }
}

//! `coexkit`: command-line front end for the quantum measurement toolkit.
//!
//! Every subcommand reads JSON or flag inputs, emits a single JSON report
//! (stdout by default, `--json FILE` to redirect), and encodes its verdict in
//! the exit code: 0 = coexistent / feasible / ok, 1 = negative verdict,
//! 2 = boundary-uncertain, 3 = usage or input error.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use coexkit_core::coexistence::{
    coexist_qubit, coexist_unbiased, joint_feasibility, CoexistenceReport, FeasibilityConfig,
    FeasibilityVerdict,
};
use coexkit_core::linalg::{HermitianMatrix, QubitBloch};
use coexkit_core::moments::{
    convolve, gaussian_kernel, gaussian_state, growth_check, hermite_state, position_distribution,
    reconstruct_moments, Grid, MomentSequence, WaveFunction,
};
use coexkit_core::phasespace::{marginal_densities, uncertainty_check, GeneratingOperator};
use coexkit_core::povm::{self, DiscretePOVM, JointPOVM, StochasticMatrix};
use coexkit_core::qubit_models::{
    build_spin_joint, hemisphere_marginal, reconstruct_sharp, spin_marginals, Direction,
    SphereQuadrature,
};
use coexkit_core::sampling;

#[derive(Parser)]
#[command(
    name = "coexkit",
    version,
    about = "Joint measurability of quantum observables: closed-form tests, feasibility search, moment recursion, phase-space marginals"
)]
struct Cli {
    /// Seed for randomized searches; the COEXKIT_SEED environment variable
    /// overrides the default when the flag is absent.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Write the JSON report to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    json: Option<PathBuf>,

    /// Tolerance overrides, repeatable: --tol feas=1e-7 --tol boundary=1e-3
    #[arg(long, global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,

    /// Wave-function grid points (power of two).
    #[arg(long, global = true, value_name = "N")]
    grid_n: Option<usize>,

    /// Wave-function grid half-width.
    #[arg(long, global = true, value_name = "L")]
    grid_l: Option<f64>,

    /// Sphere quadrature order in cos(theta) (even); phi gets twice as many
    /// nodes.
    #[arg(long, global = true, value_name = "ORDER")]
    quad_order: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide coexistence of two qubit effects by the closed-form inequality.
    Coex(CoexArgs),
    /// Search for an explicit joint observable of two binary POVMs.
    Oracle(OracleArgs),
    /// Run the smearing / moment-recursion pipeline for a test state.
    Moments(MomentsArgs),
    /// Emit the four-outcome spin joint observable, its marginals, the sharp
    /// reconstruction, and a hemisphere marginal.
    Spin,
    /// Phase-space marginal densities and the uncertainty product.
    Phase(PhaseArgs),
    /// Run the built-in cross-checks.
    Selftest,
}

#[derive(Args)]
struct EffectPairArgs {
    /// Treat both effects as unbiased (a0 = b0 = 1/2).
    #[arg(long)]
    unbiased: bool,

    /// Identity coefficient of effect A.
    #[arg(long, value_name = "A0")]
    a0: Option<f64>,

    /// Bloch vector of effect A.
    #[arg(long, value_name = "X,Y,Z", allow_hyphen_values = true)]
    a: Option<String>,

    /// Identity coefficient of effect B.
    #[arg(long, value_name = "B0")]
    b0: Option<f64>,

    /// Bloch vector of effect B.
    #[arg(long, value_name = "X,Y,Z", allow_hyphen_values = true)]
    b: Option<String>,

    /// Effect A as matrix JSON {"dim":2,"re":[[..]],"im":[[..]]}.
    #[arg(long, value_name = "FILE", conflicts_with = "a")]
    a_file: Option<PathBuf>,

    /// Effect B as matrix JSON.
    #[arg(long, value_name = "FILE", conflicts_with = "b")]
    b_file: Option<PathBuf>,
}

#[derive(Args)]
struct CoexArgs {
    #[command(flatten)]
    pair: EffectPairArgs,

    /// Also run the numerical feasibility oracle and include its result.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    pair: EffectPairArgs,

    /// First binary POVM as JSON {"labels":[..],"effects":[matrix,..]}.
    #[arg(long, value_name = "FILE")]
    e1_file: Option<PathBuf>,

    /// Second binary POVM as JSON.
    #[arg(long, value_name = "FILE")]
    e2_file: Option<PathBuf>,

    /// Number of simplex starts.
    #[arg(long, value_name = "N")]
    multistart: Option<usize>,

    /// Iteration cap per start.
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct MomentsArgs {
    /// Hermite test state of this order (default 0 when no state is given).
    #[arg(long, value_name = "N")]
    hermite: Option<usize>,

    /// Gaussian state center.
    #[arg(long, value_name = "C", allow_hyphen_values = true)]
    gauss_center: Option<f64>,

    /// Gaussian state width (enables the Gaussian state).
    #[arg(long, value_name = "S")]
    gauss_width: Option<f64>,

    /// Gaussian state momentum shift.
    #[arg(
        long,
        value_name = "P",
        allow_hyphen_values = true,
        default_value_t = 0.0
    )]
    gauss_momentum: f64,

    /// Smearing kernel standard deviation.
    #[arg(long, value_name = "SIGMA", default_value_t = 0.5)]
    sigma: f64,

    /// Largest moment order computed and reconstructed.
    #[arg(long, value_name = "K", default_value_t = 8)]
    order: usize,

    /// Growth-check constant C.
    #[arg(long, value_name = "C", default_value_t = 2.0)]
    growth_c: f64,

    /// Growth-check radius R.
    #[arg(long, value_name = "R", default_value_t = 2.0)]
    growth_r: f64,
}

#[derive(Args)]
struct PhaseArgs {
    /// Pure Gaussian generating operator of this width.
    #[arg(long, value_name = "S")]
    gaussian: Option<f64>,

    /// Pure Hermite generating operator of this order.
    #[arg(long, value_name = "N")]
    hermite: Option<usize>,

    /// Generating operator as JSON {"weights":[..],"components":[..]}.
    #[arg(long, value_name = "FILE")]
    generator_file: Option<PathBuf>,
}

/// Effective run configuration after flags, environment, and defaults.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    seed: u64,
    grid_n: usize,
    grid_half_width: f64,
    quad_order: usize,
    feas_tol: f64,
    boundary_band: f64,
}

struct CliError(String);

impl CliError {
    fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl From<coexkit_core::Error> for CliError {
    fn from(err: coexkit_core::Error) -> Self {
        Self(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self(err.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    let config = build_config(&cli)?;
    let json_path = cli.json.as_deref();
    match &cli.command {
        Command::Coex(args) => cmd_coex(args, &config, json_path),
        Command::Oracle(args) => cmd_oracle(args, &config, json_path),
        Command::Moments(args) => cmd_moments(args, &config, json_path),
        Command::Spin => cmd_spin(&config, json_path),
        Command::Phase(args) => cmd_phase(args, &config, json_path),
        Command::Selftest => cmd_selftest(&config, json_path),
    }
}

fn build_config(cli: &Cli) -> CliResult<RunConfig> {
    let seed = match cli.seed {
        Some(seed) => seed,
        None => match std::env::var("COEXKIT_SEED") {
            Ok(text) => text
                .parse::<u64>()
                .map_err(|_| CliError::new(format!("COEXKIT_SEED is not a u64: {text:?}")))?,
            Err(_) => 0,
        },
    };
    let grid_n = cli
        .grid_n
        .unwrap_or(coexkit_core::moments::DEFAULT_GRID_POINTS);
    if !grid_n.is_power_of_two() || grid_n < 2 {
        return Err(CliError::new(format!(
            "--grid-n must be a power of two >= 2, got {grid_n}"
        )));
    }
    let grid_half_width = cli
        .grid_l
        .unwrap_or(coexkit_core::moments::DEFAULT_GRID_HALF_WIDTH);
    if grid_half_width <= 0.0 || !grid_half_width.is_finite() {
        return Err(CliError::new("--grid-l must be positive"));
    }
    let quad_order = cli
        .quad_order
        .unwrap_or(coexkit_core::qubit_models::DEFAULT_THETA_ORDER);
    if quad_order < 2 || !quad_order.is_multiple_of(2) {
        return Err(CliError::new(format!(
            "--quad-order must be even and >= 2, got {quad_order}"
        )));
    }
    let mut feas_tol = 1e-7f64;
    let mut boundary_band = 1e-3f64;
    for entry in &cli.tol {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::new(format!("--tol expects NAME=VALUE, got {entry:?}")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::new(format!("--tol {name}: {value:?} is not a number")))?;
        if value <= 0.0 || !value.is_finite() {
            return Err(CliError::new(format!("--tol {name} must be positive")));
        }
        match name {
            "feas" => feas_tol = value,
            "boundary" => boundary_band = value,
            other => {
                return Err(CliError::new(format!(
                    "unknown tolerance {other:?} (known: feas, boundary)"
                )))
            }
        }
    }
    Ok(RunConfig {
        seed,
        grid_n,
        grid_half_width,
        quad_order,
        feas_tol,
        boundary_band,
    })
}

fn parse_vec3(text: &str) -> CliResult<[f64; 3]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::new(format!(
            "expected three comma-separated components, got {text:?}"
        )));
    }
    let mut v = [0.0f64; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| CliError::new(format!("invalid component {part:?} in {text:?}")))?;
    }
    Ok(v)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::new(format!("cannot parse {}: {e}", path.display())))
}

fn load_effect(
    file: &Option<PathBuf>,
    a0: Option<f64>,
    vector: &Option<String>,
    unbiased: bool,
    name: &str,
) -> CliResult<QubitBloch> {
    if let Some(path) = file {
        let matrix: HermitianMatrix = read_json(path)?;
        return Ok(QubitBloch::from_matrix(&matrix)?);
    }
    let v = vector.as_deref().ok_or_else(|| {
        CliError::new(format!("effect {name}: provide --{name} or --{name}-file"))
    })?;
    let a = parse_vec3(v)?;
    let a0 = if unbiased {
        if a0.is_some() {
            return Err(CliError::new(format!(
                "effect {name}: --unbiased conflicts with --{name}0"
            )));
        }
        0.5
    } else {
        a0.ok_or_else(|| {
            CliError::new(format!(
                "effect {name}: --{name}0 required (or use --unbiased)"
            ))
        })?
    };
    Ok(QubitBloch::new(a0, a))
}

fn feasibility_config(
    config: &RunConfig,
    multistart: Option<usize>,
    max_iter: Option<usize>,
) -> FeasibilityConfig {
    let defaults = FeasibilityConfig::default();
    FeasibilityConfig {
        seed: config.seed,
        multistart: multistart.unwrap_or(defaults.multistart),
        max_iterations: max_iter.unwrap_or(defaults.max_iterations),
        feas_tol: config.feas_tol,
        boundary_band: config.boundary_band,
    }
}

#[derive(Serialize)]
struct OracleOutput {
    feasible: bool,
    verdict: FeasibilityVerdict,
    residual: f64,
    evaluations: u64,
    config: FeasibilityConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<JointPOVM>,
}

#[derive(Serialize)]
struct CoexOutput {
    mode: &'static str,
    #[serde(flatten)]
    report: CoexistenceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleOutput>,
}

fn cmd_coex(args: &CoexArgs, config: &RunConfig, json_path: Option<&Path>) -> CliResult<u8> {
    let a = load_effect(
        &args.pair.a_file,
        args.pair.a0,
        &args.pair.a,
        args.pair.unbiased,
        "a",
    )?;
    let b = load_effect(
        &args.pair.b_file,
        args.pair.b0,
        &args.pair.b,
        args.pair.unbiased,
        "b",
    )?;
    let (mode, report) = if args.pair.unbiased {
        ("unbiased", coexist_unbiased(a.a, b.a)?)
    } else {
        ("general", coexist_qubit(&a, &b)?)
    };
    let oracle = if args.oracle {
        let e1 = binary_povm(&a)?;
        let e2 = binary_povm(&b)?;
        let fc = feasibility_config(config, None, None);
        let result = joint_feasibility(&e1, &e2, &fc)?;
        Some(OracleOutput {
            feasible: result.feasible,
            verdict: result.verdict,
            residual: result.residual,
            evaluations: result.evaluations,
            config: fc,
            witness: result.witness,
        })
    } else {
        None
    };
    let exit = if report.coexistent { 0 } else { 1 };
    output::emit(
        &CoexOutput {
            mode,
            report,
            oracle,
        },
        json_path,
    )?;
    Ok(exit)
}

fn binary_povm(bloch: &QubitBloch) -> CliResult<DiscretePOVM> {
    let plus = bloch.to_effect()?;
    let minus = plus.complement();
    Ok(DiscretePOVM::new(
        vec!["+".into(), "-".into()],
        vec![plus, minus],
    )?)
}

fn cmd_oracle(args: &OracleArgs, config: &RunConfig, json_path: Option<&Path>) -> CliResult<u8> {
    let e1 = match &args.e1_file {
        Some(path) => read_json::<DiscretePOVM>(path)?,
        None => binary_povm(&load_effect(
            &args.pair.a_file,
            args.pair.a0,
            &args.pair.a,
            args.pair.unbiased,
            "a",
        )?)?,
    };
    let e2 = match &args.e2_file {
        Some(path) => read_json::<DiscretePOVM>(path)?,
        None => binary_povm(&load_effect(
            &args.pair.b_file,
            args.pair.b0,
            &args.pair.b,
            args.pair.unbiased,
            "b",
        )?)?,
    };
    let fc = feasibility_config(config, args.multistart, args.max_iter);
    let result = joint_feasibility(&e1, &e2, &fc)?;
    let exit = match result.verdict {
        FeasibilityVerdict::Feasible => 0,
        FeasibilityVerdict::Infeasible => 1,
        FeasibilityVerdict::BoundaryUncertain => 2,
    };
    output::emit(
        &OracleOutput {
            feasible: result.feasible,
            verdict: result.verdict,
            residual: result.residual,
            evaluations: result.evaluations,
            config: fc,
            witness: result.witness,
        },
        json_path,
    )?;
    Ok(exit)
}

#[derive(Serialize)]
struct MomentsOutput {
    state: String,
    sigma: f64,
    order: usize,
    grid: GridInfo,
    sharp: Vec<f64>,
    convolved: Vec<f64>,
    reconstructed: Vec<f64>,
    max_relative_error: f64,
    growth: GrowthOutput,
}

#[derive(Serialize)]
struct GridInfo {
    n: usize,
    half_width: f64,
    dx: f64,
}

#[derive(Serialize)]
struct GrowthOutput {
    c: f64,
    r: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation: Option<usize>,
}

fn cmd_moments(args: &MomentsArgs, config: &RunConfig, json_path: Option<&Path>) -> CliResult<u8> {
    if args.hermite.is_some() && args.gauss_width.is_some() {
        return Err(CliError::new(
            "choose one state: --hermite N or --gauss-width S",
        ));
    }
    if args.sigma < 0.0 || args.sigma.is_nan() {
        return Err(CliError::new("--sigma must be nonnegative"));
    }
    if args.growth_c <= 0.0 || args.growth_r <= 0.0 {
        return Err(CliError::new("growth bounds must be positive"));
    }
    let grid = Grid::symmetric(config.grid_half_width, config.grid_n)?;
    let (state, psi): (String, WaveFunction) = if let Some(width) = args.gauss_width {
        let center = args.gauss_center.unwrap_or(0.0);
        (
            format!(
                "gaussian(center={center}, width={width}, momentum={})",
                args.gauss_momentum
            ),
            gaussian_state(&grid, center, width, args.gauss_momentum)?,
        )
    } else {
        let n = args.hermite.unwrap_or(0);
        (format!("hermite({n})"), hermite_state(n, &grid)?)
    };

    let sharp_dist = position_distribution(&psi);
    let kernel = gaussian_kernel(grid.dx, args.sigma)?;
    let measured = convolve(&kernel, &sharp_dist)?;
    let sharp = MomentSequence::of_distribution(&sharp_dist, args.order);
    let mu = MomentSequence::of_distribution(&kernel, args.order);
    let convolved = MomentSequence::of_distribution(&measured, args.order);
    let reconstructed = reconstruct_moments(&convolved, &mu, args.order)?;
    let max_relative_error = (0..=args.order)
        .map(|k| (reconstructed.get(k) - sharp.get(k)).abs() / sharp.get(k).abs().max(1.0))
        .fold(0.0f64, f64::max);
    let growth = growth_check(&sharp, args.growth_c, args.growth_r);

    output::emit(
        &MomentsOutput {
            state,
            sigma: args.sigma,
            order: args.order,
            grid: GridInfo {
                n: grid.n,
                half_width: config.grid_half_width,
                dx: grid.dx,
            },
            sharp: sharp.values().to_vec(),
            convolved: convolved.values().to_vec(),
            reconstructed: reconstructed.values().to_vec(),
            max_relative_error,
            growth: GrowthOutput {
                c: args.growth_c,
                r: args.growth_r,
                passed: growth.passed,
                first_violation: growth.first_violation,
            },
        },
        json_path,
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct SpinOutput {
    joint: JointPOVM,
    marginal_1: DiscretePOVM,
    marginal_2: DiscretePOVM,
    reconstruction_coefficients: Vec<Vec<f64>>,
    reconstruction_exact: bool,
    hemisphere_direction: [f64; 3],
    hemisphere: DiscretePOVM,
}

fn cmd_spin(config: &RunConfig, json_path: Option<&Path>) -> CliResult<u8> {
    let joint = build_spin_joint();
    let (e1, e2) = spin_marginals(&joint)?;
    let lambda = StochasticMatrix::binary_symmetric(2f64.sqrt() / 2.0)?;
    let coefficients = povm::unsmear(&e1, &lambda)?.coefficients;
    let mut exact = true;
    for (e, axis) in [(&e1, 0usize), (&e2, 1usize)] {
        let sharp = reconstruct_sharp(e)?;
        let mut n = [0.0; 3];
        n[axis] = 1.0;
        let plus = QubitBloch::projector(n).to_matrix();
        if sharp.effect(0).matrix().fro_dist(&plus) >= 1e-12 {
            exact = false;
        }
    }
    let quad = SphereQuadrature::product_rule(config.quad_order, 2 * config.quad_order)?;
    let direction = [0.0, 0.0, 1.0];
    let hemisphere = hemisphere_marginal(&Direction::new(direction)?, &quad)?;
    output::emit(
        &SpinOutput {
            joint,
            marginal_1: e1,
            marginal_2: e2,
            reconstruction_coefficients: coefficients,
            reconstruction_exact: exact,
            hemisphere_direction: direction,
            hemisphere,
        },
        json_path,
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct PhaseOutput {
    generator: String,
    position_variance: f64,
    momentum_variance: f64,
    product: f64,
    satisfied: bool,
}

fn cmd_phase(args: &PhaseArgs, config: &RunConfig, json_path: Option<&Path>) -> CliResult<u8> {
    let selected = [
        args.gaussian.is_some(),
        args.hermite.is_some(),
        args.generator_file.is_some(),
    ]
    .iter()
    .filter(|x| **x)
    .count();
    if selected > 1 {
        return Err(CliError::new(
            "choose one generator: --gaussian S, --hermite N, or --generator-file FILE",
        ));
    }
    let grid = Grid::symmetric(config.grid_half_width, config.grid_n)?;
    let (label, generator) = if let Some(path) = &args.generator_file {
        (
            format!("file({})", path.display()),
            read_json::<GeneratingOperator>(path)?,
        )
    } else if let Some(n) = args.hermite {
        (
            format!("hermite({n})"),
            GeneratingOperator::pure(hermite_state(n, &grid)?),
        )
    } else {
        let width = args.gaussian.unwrap_or(1.0);
        (
            format!("gaussian(width={width})"),
            GeneratingOperator::pure(gaussian_state(&grid, 0.0, width, 0.0)?),
        )
    };
    let md = marginal_densities(&generator)?;
    let check = uncertainty_check(&md);
    output::emit(
        &PhaseOutput {
            generator: label,
            position_variance: check.position_variance,
            momentum_variance: check.momentum_variance,
            product: check.product,
            satisfied: check.satisfied,
        },
        json_path,
    )?;
    Ok(if check.satisfied { 0 } else { 1 })
}

#[derive(Serialize)]
struct SelftestCheck {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct SelftestOutput {
    config: RunConfig,
    checks: Vec<SelftestCheck>,
    passed: bool,
}

fn cmd_selftest(config: &RunConfig, json_path: Option<&Path>) -> CliResult<u8> {
    let mut checks: Vec<SelftestCheck> = Vec::new();
    let push =
        |checks: &mut Vec<SelftestCheck>, name: &'static str, passed: bool, detail: String| {
            checks.push(SelftestCheck {
                name,
                passed,
                detail,
            });
        };

    let r = 2f64.sqrt() / 4.0;
    let boundary = coexist_unbiased([r, 0.0, 0.0], [0.0, r, 0.0])?;
    push(
        &mut checks,
        "coexistence-boundary",
        boundary.coexistent && boundary.margin.abs() < 1e-12,
        format!("margin {:.3e}", boundary.margin),
    );

    let sharp_pair = coexist_unbiased([0.5, 0.0, 0.0], [0.0, 0.5, 0.0])?;
    push(
        &mut checks,
        "sharp-projections-incompatible",
        !sharp_pair.coexistent,
        format!("margin {:.3e}", sharp_pair.margin),
    );

    let fc = feasibility_config(config, None, None);
    let e1 = binary_povm(&QubitBloch::new(0.5, [0.5, 0.0, 0.0]))?;
    let e2 = binary_povm(&QubitBloch::new(0.5, [0.0, 0.0, 0.5]))?;
    let infeasible = joint_feasibility(&e1, &e2, &fc)?;
    push(
        &mut checks,
        "oracle-sharp-pair-infeasible",
        !infeasible.feasible && infeasible.residual >= 0.05,
        format!("residual {:.6}", infeasible.residual),
    );

    let joint = build_spin_joint();
    let (m1, m2) = spin_marginals(&joint)?;
    let oracle_boundary = joint_feasibility(&m1, &m2, &fc)?;
    push(
        &mut checks,
        "oracle-spin-marginals-feasible",
        oracle_boundary.feasible,
        format!("residual {:.3e}", oracle_boundary.residual),
    );

    let sharp = reconstruct_sharp(&m1)?;
    let err = sharp
        .effect(0)
        .matrix()
        .fro_dist(&QubitBloch::projector([1.0, 0.0, 0.0]).to_matrix());
    push(
        &mut checks,
        "spin-reconstruction-exact",
        err < 1e-12,
        format!("Frobenius error {err:.3e}"),
    );

    let grid = Grid::symmetric(config.grid_half_width, config.grid_n)?;
    let psi = hermite_state(2, &grid)?;
    let sharp_dist = position_distribution(&psi);
    let kernel = gaussian_kernel(grid.dx, 0.5)?;
    let measured = convolve(&kernel, &sharp_dist)?;
    let sharp_m = MomentSequence::of_distribution(&sharp_dist, 8);
    let mu_m = MomentSequence::of_distribution(&kernel, 8);
    let conv_m = MomentSequence::of_distribution(&measured, 8);
    let recovered = reconstruct_moments(&conv_m, &mu_m, 8)?;
    let moment_err = (0..=8)
        .map(|k| (recovered.get(k) - sharp_m.get(k)).abs() / sharp_m.get(k).abs().max(1.0))
        .fold(0.0f64, f64::max);
    push(
        &mut checks,
        "moment-recursion-round-trip",
        moment_err < 1e-4,
        format!("max relative error {moment_err:.3e}"),
    );

    let growth = growth_check(&MomentSequence::of_distribution(&sharp_dist, 12), 2.0, 2.0);
    push(
        &mut checks,
        "growth-condition",
        growth.passed,
        format!("first violation {:?}", growth.first_violation),
    );

    let quad = SphereQuadrature::product_rule(config.quad_order, 2 * config.quad_order)?;
    let hemisphere = hemisphere_marginal(&Direction::new([0.0, 0.0, 1.0])?, &quad)?;
    let hemi_err = hemisphere
        .effect(0)
        .matrix()
        .fro_dist(&QubitBloch::new(0.5, [0.0, 0.0, 0.25]).to_matrix());
    push(
        &mut checks,
        "hemisphere-marginal",
        hemi_err < 1e-8,
        format!("error {hemi_err:.3e}"),
    );

    let t = GeneratingOperator::pure(hermite_state(0, &grid)?);
    let unc = uncertainty_check(&marginal_densities(&t)?);
    push(
        &mut checks,
        "uncertainty-minimum",
        unc.satisfied && (unc.product - 0.25).abs() < 1e-6,
        format!("product {:.9}", unc.product),
    );

    let mut rng = sampling::rng(config.seed);
    let mut agreement = true;
    let mut tested = 0usize;
    while tested < 25 {
        let a = sampling::random_qubit_effect(&mut rng);
        let b = sampling::random_qubit_effect(&mut rng);
        let closed = coexist_qubit(&a, &b)?;
        if closed.margin.abs() <= 1e-3 {
            continue;
        }
        tested += 1;
        let ea = binary_povm(&a)?;
        let eb = binary_povm(&b)?;
        let oracle = joint_feasibility(&ea, &eb, &fc)?;
        if oracle.feasible != closed.coexistent {
            agreement = false;
            break;
        }
    }
    push(
        &mut checks,
        "oracle-closed-form-agreement",
        agreement,
        format!("{tested} random pairs"),
    );

    let passed = checks.iter().all(|c| c.passed);
    output::emit(
        &SelftestOutput {
            config: config.clone(),
            checks,
            passed,
        },
        json_path,
    )?;
    Ok(if passed { 0 } else { 1 })
}

//! Joint-measurability decisions for qubit effect pairs.
//!
//! Two routes are provided and kept independent so they can cross-validate:
//! the closed-form coexistence inequality in the Bloch parametrization
//! (general biased case and the unbiased special case), and a numerical
//! feasibility oracle that searches for an explicit joint observable of two
//! binary POVMs in any small dimension.

use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::{vec3, HermitianMatrix, QubitBloch};
use crate::povm::{DiscretePOVM, JointPOVM};
use crate::sampling;
use crate::{Error, Result};

/// Slack accepted on the closed-form margin before declaring "not coexistent".
pub const MARGIN_TOL: f64 = 1e-12;
/// Radicands of the unsharpness measure may undershoot zero by at most this.
pub const RADICAND_CLAMP: f64 = 1e-14;

/// Intermediate quantities of the coexistence inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoexistenceHelpers {
    /// phi(A)^2 + phi(B)^2.
    pub f_script: f64,
    /// beta(A)^2 + beta(B)^2.
    pub b_script: f64,
    /// x = 2 a0 - 1 = phi(A) beta(A).
    pub x: f64,
    /// y = 2 b0 - 1.
    pub y: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub beta_a: f64,
    pub beta_b: f64,
}

/// Verdict of a closed-form coexistence test. The sign convention keeps
/// `coexistent == (margin >= -MARGIN_TOL)` for both inequality forms: `lhs`
/// is always the side that dominates when the pair is jointly measurable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoexistenceReport {
    pub coexistent: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub helpers: CoexistenceHelpers,
}

/// Both square roots entering phi and beta, with effect validation and the
/// boundary clamp.
fn unsharpness_roots(a: &QubitBloch) -> Result<(f64, f64)> {
    let r = a.bloch_norm();
    let (min, max) = (a.a0 - r, a.a0 + r);
    if min < -crate::linalg::PSD_TOL || max > 1.0 + crate::linalg::PSD_TOL {
        return Err(Error::InvalidQubitEffect { min, max });
    }
    let clamp_sqrt = |radicand: f64| -> Result<f64> {
        if radicand < -RADICAND_CLAMP {
            return Err(Error::NegativeRadicand(radicand));
        }
        Ok(radicand.max(0.0).sqrt())
    };
    let norm_sq = r * r;
    Ok((
        clamp_sqrt(a.a0 * a.a0 - norm_sq)?,
        clamp_sqrt((1.0 - a.a0) * (1.0 - a.a0) - norm_sq)?,
    ))
}

/// The unsharpness measure phi(A) in [0, 1]: zero exactly for projections,
/// one for trivial effects.
pub fn unsharpness(a: &QubitBloch) -> Result<f64> {
    let (s1, s2) = unsharpness_roots(a)?;
    Ok(s1 + s2)
}

/// The bias measure beta(A) together with x = 2 a0 - 1; the identity
/// phi(A) beta(A) = x holds by construction.
pub fn bias(a: &QubitBloch) -> Result<(f64, f64)> {
    let (s1, s2) = unsharpness_roots(a)?;
    Ok((s1 - s2, 2.0 * a.a0 - 1.0))
}

/// Closed-form coexistence test for a general pair of qubit effects:
/// [F(2 - B) + B(2 - F)]/2 + (xy - 4 a.b)^2 >= 1.
pub fn coexist_qubit(a: &QubitBloch, b: &QubitBloch) -> Result<CoexistenceReport> {
    let (a1, a2) = unsharpness_roots(a)?;
    let (b1, b2) = unsharpness_roots(b)?;
    let (phi_a, beta_a) = (a1 + a2, a1 - a2);
    let (phi_b, beta_b) = (b1 + b2, b1 - b2);
    let f_script = phi_a * phi_a + phi_b * phi_b;
    let b_script = beta_a * beta_a + beta_b * beta_b;
    let x = 2.0 * a.a0 - 1.0;
    let y = 2.0 * b.a0 - 1.0;
    let cross = x * y - 4.0 * vec3::dot(&a.a, &b.a);
    let lhs = 0.5 * (f_script * (2.0 - b_script) + b_script * (2.0 - f_script)) + cross * cross;
    let rhs = 1.0;
    let margin = lhs - rhs;
    Ok(CoexistenceReport {
        coexistent: margin >= -MARGIN_TOL,
        lhs,
        rhs,
        margin,
        helpers: CoexistenceHelpers {
            f_script,
            b_script,
            x,
            y,
            phi_a,
            phi_b,
            beta_a,
            beta_b,
        },
    })
}

/// Unbiased special case (a0 = b0 = 1/2): coexistent iff
/// 16 |a x b|^2 <= (1 - 4|a|^2)(1 - 4|b|^2). The report's `lhs` is the
/// unsharpness product so that the margin keeps its sign convention.
pub fn coexist_unbiased(a: [f64; 3], b: [f64; 3]) -> Result<CoexistenceReport> {
    for v in [&a, &b] {
        let n = vec3::norm(v);
        if n > 0.5 + MARGIN_TOL {
            return Err(Error::NotUnbiased(n));
        }
    }
    let na_sq = vec3::dot(&a, &a);
    let nb_sq = vec3::dot(&b, &b);
    let cross = vec3::cross(&a, &b);
    let lhs = (1.0 - 4.0 * na_sq) * (1.0 - 4.0 * nb_sq);
    let rhs = 16.0 * vec3::dot(&cross, &cross);
    let margin = lhs - rhs;
    let phi_a = (1.0 - 4.0 * na_sq).max(0.0).sqrt();
    let phi_b = (1.0 - 4.0 * nb_sq).max(0.0).sqrt();
    Ok(CoexistenceReport {
        coexistent: margin >= -MARGIN_TOL,
        lhs,
        rhs,
        margin,
        helpers: CoexistenceHelpers {
            f_script: phi_a * phi_a + phi_b * phi_b,
            b_script: 0.0,
            x: 0.0,
            y: 0.0,
            phi_a,
            phi_b,
            beta_a: 0.0,
            beta_b: 0.0,
        },
    })
}

/// Configuration of the feasibility search.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityConfig {
    /// Seed for the random multistart perturbations.
    pub seed: u64,
    /// Number of simplex starts (the first three are deterministic).
    pub multistart: usize,
    /// Iteration cap per start.
    pub max_iterations: usize,
    /// Residuals at or below this are certified feasible.
    pub feas_tol: f64,
    /// Residuals in (feas_tol, boundary_band] are reported as
    /// boundary-uncertain rather than forced to a verdict.
    pub boundary_band: f64,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            multistart: 16,
            max_iterations: 2000,
            feas_tol: 1e-7,
            boundary_band: 1e-3,
        }
    }
}

/// Three-way outcome of the derivative-free search; the search can certify
/// feasibility by exhibiting a witness but cannot certify infeasibility, so
/// small positive residuals stay undecided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityVerdict {
    Feasible,
    BoundaryUncertain,
    Infeasible,
}

/// Result of [`joint_feasibility`].
#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    /// True iff the residual is within `feas_tol`.
    pub feasible: bool,
    pub verdict: FeasibilityVerdict,
    /// Joint observable assembled from the four blocks, present when
    /// feasible; its marginals reproduce the inputs exactly by construction.
    pub witness: Option<JointPOVM>,
    /// Max constraint violation at the best point found (0 when strictly
    /// feasible).
    pub residual: f64,
    /// Objective evaluations spent over all starts.
    pub evaluations: u64,
}

/// Search for a joint observable of two binary POVMs.
///
/// With E1 = {A, I-A} and E2 = {B, I-B}, a joint observable is determined by
/// the single block G = F(+,+) through the four PSD constraints G >= 0,
/// A - G >= 0, B - G >= 0, I - A - B + G >= 0; the objective is the largest
/// negative eigenvalue over the blocks, minimized by multistart Nelder-Mead
/// over the d^2 real parameters of G. Deterministic for a fixed seed.
pub fn joint_feasibility(
    e1: &DiscretePOVM,
    e2: &DiscretePOVM,
    config: &FeasibilityConfig,
) -> Result<FeasibilityResult> {
    if e1.outcome_count() != 2 {
        return Err(Error::NonBinaryPovm(e1.outcome_count()));
    }
    if e2.outcome_count() != 2 {
        return Err(Error::NonBinaryPovm(e2.outcome_count()));
    }
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch(e1.dim(), e2.dim()));
    }
    let dim = e1.dim();
    if dim > 8 {
        return Err(Error::DimensionTooLarge(dim, 8));
    }

    let a = e1.effect(0).matrix().clone();
    let b = e2.effect(0).matrix().clone();
    let corner = &(&HermitianMatrix::identity(dim) - &a) - &b;

    let jordan = a.jordan_product(&b)?;
    let deterministic_starts = [jordan.clone(), a.scale(0.5), b.scale(0.5)];
    let n_params = dim * dim;
    let mut starts: Vec<Vec<f64>> = deterministic_starts.iter().map(matrix_to_params).collect();
    let mut rng = sampling::rng(config.seed);
    while starts.len() < config.multistart.max(3) {
        let base = starts[starts.len() % 3].clone();
        let perturbed: Vec<f64> = base
            .iter()
            .map(|v| v + 0.1 * sampling::standard_normal(&mut rng))
            .collect();
        debug_assert_eq!(perturbed.len(), n_params);
        starts.push(perturbed);
    }

    let mut objective = BlockObjective::new(&a, &b, &corner);
    let mut evaluations = 0u64;
    let mut best_f = f64::INFINITY;
    let mut best_x = starts[0].clone();
    for start in &starts {
        let outcome = nelder_mead(
            |x| {
                evaluations += 1;
                objective.eval(x)
            },
            start,
            config.max_iterations,
            0.0,
        );
        if outcome.best_f < best_f {
            best_f = outcome.best_f;
            best_x = outcome.best_x;
        }
        if best_f <= 0.0 {
            break;
        }
    }

    let residual = best_f.max(0.0);
    let verdict = if residual <= config.feas_tol {
        FeasibilityVerdict::Feasible
    } else if residual <= config.boundary_band {
        FeasibilityVerdict::BoundaryUncertain
    } else {
        FeasibilityVerdict::Infeasible
    };
    let feasible = verdict == FeasibilityVerdict::Feasible;
    let witness = if feasible {
        let g = params_to_matrix(dim, &best_x);
        let blocks = vec![vec![g.clone(), &a - &g], vec![&b - &g, &corner + &g]];
        let tol = crate::linalg::PSD_TOL + 3.0 * residual;
        Some(JointPOVM::from_matrices_with_tol(
            e1.labels().to_vec(),
            e2.labels().to_vec(),
            blocks,
            tol,
        )?)
    } else {
        None
    };
    Ok(FeasibilityResult {
        feasible,
        verdict,
        witness,
        residual,
        evaluations,
    })
}

/// Hermitian matrix <-> real parameter vector (diagonal, then re/im of the
/// upper triangle), d^2 parameters in total.
fn matrix_to_params(m: &HermitianMatrix) -> Vec<f64> {
    let d = m.dim();
    let mut params = Vec::with_capacity(d * d);
    for i in 0..d {
        params.push(m.get(i, i).re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let z = m.get(i, j);
            params.push(z.re);
            params.push(z.im);
        }
    }
    params
}

fn params_to_matrix(d: usize, params: &[f64]) -> HermitianMatrix {
    let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        entries[i * d + i] = Complex64::new(params[i], 0.0);
    }
    let mut idx = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = Complex64::new(params[idx], params[idx + 1]);
            idx += 2;
            entries[i * d + j] = z;
            entries[j * d + i] = z.conj();
        }
    }
    HermitianMatrix::hermitized(d, entries)
}

/// Max of negative smallest eigenvalues over the four constraint blocks,
/// with buffers reused across evaluations.
struct BlockObjective {
    dim: usize,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    corner: Vec<Complex64>,
    scratch_g: Vec<Complex64>,
    scratch_block: Vec<Complex64>,
}

impl BlockObjective {
    fn new(a: &HermitianMatrix, b: &HermitianMatrix, corner: &HermitianMatrix) -> Self {
        let dim = a.dim();
        Self {
            dim,
            a: a.entries().to_vec(),
            b: b.entries().to_vec(),
            corner: corner.entries().to_vec(),
            scratch_g: vec![Complex64::new(0.0, 0.0); dim * dim],
            scratch_block: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    fn eval(&mut self, params: &[f64]) -> f64 {
        let d = self.dim;
        for (i, value) in params.iter().take(d).enumerate() {
            self.scratch_g[i * d + i] = Complex64::new(*value, 0.0);
        }
        let mut idx = d;
        for i in 0..d {
            for j in (i + 1)..d {
                let z = Complex64::new(params[idx], params[idx + 1]);
                idx += 2;
                self.scratch_g[i * d + j] = z;
                self.scratch_g[j * d + i] = z.conj();
            }
        }
        let mut worst = f64::NEG_INFINITY;
        for block in 0..4usize {
            for k in 0..d * d {
                self.scratch_block[k] = match block {
                    0 => self.scratch_g[k],
                    1 => self.a[k] - self.scratch_g[k],
                    2 => self.b[k] - self.scratch_g[k],
                    _ => self.corner[k] + self.scratch_g[k],
                };
            }
            worst = worst.max(-lambda_min(d, &mut self.scratch_block));
        }
        worst
    }
}

/// Smallest eigenvalue of a Hermitian matrix given as a raw buffer; the
/// buffer is clobbered for d > 2.
fn lambda_min(d: usize, entries: &mut [Complex64]) -> f64 {
    if d == 1 {
        return entries[0].re;
    }
    if d == 2 {
        let a0 = 0.5 * (entries[0].re + entries[3].re);
        let a3 = 0.5 * (entries[0].re - entries[3].re);
        let r = (a3 * a3 + entries[1].norm_sqr()).sqrt();
        return a0 - r;
    }
    let m = HermitianMatrix::hermitized(d, entries.to_vec());
    m.eigenvalues()[0]
}

struct NmOutcome {
    best_x: Vec<f64>,
    best_f: f64,
}

/// Standard Nelder-Mead descent (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Stops on the iteration cap, on simplex collapse, or as soon
/// as the best value reaches `stop_below`.
fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    max_iterations: usize,
    stop_below: f64,
) -> NmOutcome {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = f(x0);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += 0.05 * x[i].abs().max(0.1);
        let fx = f(&x);
        simplex.push((x, fx));
    }

    for _ in 0..max_iterations {
        simplex.sort_by(|p, q| p.1.total_cmp(&q.1));
        if simplex[0].1 <= stop_below {
            break;
        }
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = (0..n)
            .map(|k| {
                simplex
                    .iter()
                    .map(|(x, _)| (x[k] - simplex[0].0[k]).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if spread < 1e-14 && diameter < 1e-12 {
            break;
        }

        let mut centroid = vec![0.0f64; n];
        for (x, _) in simplex.iter().take(n) {
            for k in 0..n {
                centroid[k] += x[k] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected: Vec<f64> = (0..n)
            .map(|k| centroid[k] + ALPHA * (centroid[k] - worst.0[k]))
            .collect();
        let f_reflected = f(&reflected);

        if f_reflected < simplex[0].1 {
            let expanded: Vec<f64> = (0..n)
                .map(|k| centroid[k] + GAMMA * (reflected[k] - centroid[k]))
                .collect();
            let f_expanded = f(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < worst.1 {
            let x: Vec<f64> = (0..n)
                .map(|k| centroid[k] + RHO * (reflected[k] - centroid[k]))
                .collect();
            let fx = f(&x);
            if fx <= f_reflected {
                (x, fx)
            } else {
                shrink(&mut simplex, SIGMA, &mut f);
                continue;
            }
        } else {
            let x: Vec<f64> = (0..n)
                .map(|k| centroid[k] + RHO * (worst.0[k] - centroid[k]))
                .collect();
            let fx = f(&x);
            if fx < worst.1 {
                (x, fx)
            } else {
                shrink(&mut simplex, SIGMA, &mut f);
                continue;
            }
        };
        simplex[n] = (contracted, f_contracted);
    }

    simplex.sort_by(|p, q| p.1.total_cmp(&q.1));
    NmOutcome {
        best_x: simplex[0].0.clone(),
        best_f: simplex[0].1,
    }
}

fn shrink(simplex: &mut [(Vec<f64>, f64)], sigma: f64, f: &mut impl FnMut(&[f64]) -> f64) {
    let best = simplex[0].0.clone();
    for entry in simplex.iter_mut().skip(1) {
        for (xk, bk) in entry.0.iter_mut().zip(&best) {
            *xk = bk + sigma * (*xk - bk);
        }
        entry.1 = f(&entry.0);
    }
}

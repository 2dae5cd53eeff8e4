//! Finite-outcome POVMs: validation, Born statistics, marginals, smearing
//! and unsmearing by stochastic matrices, image observables, range analysis,
//! commutativity, the product joint observable, and the Lüders update.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{DensityState, Effect, HermitianMatrix};
use crate::{Error, Result};

/// Elementwise tolerance for the completeness sum of a POVM.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Frobenius tolerance for effect equality in range comparisons.
pub const RANGE_MATCH_TOL: f64 = 1e-9;
/// Largest outcome count enumerated by the range operations (2^16 subsets).
pub const MAX_RANGE_OUTCOMES: usize = 16;

/// A finite-outcome POVM: labelled effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePOVM {
    labels: Vec<String>,
    effects: Vec<Effect>,
}

/// Outcome of [`validate`]: `ok` or the first violated invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violation: Option<String>,
}

impl ValidationReport {
    fn ok() -> Self {
        Self {
            ok: true,
            violation: None,
        }
    }

    fn violated(message: String) -> Self {
        Self {
            ok: false,
            violation: Some(message),
        }
    }
}

/// Check labelled operators for POVM validity, naming the first failed
/// invariant instead of erroring.
pub fn validate(labels: &[String], operators: &[HermitianMatrix]) -> ValidationReport {
    if labels.len() != operators.len() {
        return ValidationReport::violated(format!(
            "label count {} differs from effect count {}",
            labels.len(),
            operators.len()
        ));
    }
    if operators.is_empty() {
        return ValidationReport::violated("POVM has no outcomes".into());
    }
    let dim = operators[0].dim();
    for (label, op) in labels.iter().zip(operators) {
        if op.dim() != dim {
            return ValidationReport::violated(format!(
                "effect {label:?} has dimension {} instead of {dim}",
                op.dim()
            ));
        }
        let ev = op.eigenvalues();
        let (min, max) = (ev[0], ev[ev.len() - 1]);
        if min < -crate::linalg::PSD_TOL || max > 1.0 + crate::linalg::PSD_TOL {
            return ValidationReport::violated(format!(
                "effect {label:?} has eigenvalues in [{min:.6e}, {max:.6e}], outside [0, 1]"
            ));
        }
    }
    for i in 0..labels.len() {
        if labels[i + 1..].contains(&labels[i]) {
            return ValidationReport::violated(format!("duplicate outcome label {:?}", labels[i]));
        }
    }
    let mut sum = HermitianMatrix::zeros(dim);
    for op in operators {
        sum = &sum + op;
    }
    let deviation = sum.fro_dist(&HermitianMatrix::identity(dim));
    let max_entry_dev = max_elementwise_identity_deviation(&sum);
    if max_entry_dev > COMPLETENESS_TOL {
        return ValidationReport::violated(format!(
            "sum differs from identity: max entry deviation {max_entry_dev:.6e} (Frobenius {deviation:.6e})"
        ));
    }
    ValidationReport::ok()
}

fn max_elementwise_identity_deviation(sum: &HermitianMatrix) -> f64 {
    let d = sum.dim();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let expected = if i == j { 1.0 } else { 0.0 };
            let dev = (sum.get(i, j) - num_complex::Complex64::new(expected, 0.0)).norm();
            worst = worst.max(dev);
        }
    }
    worst
}

impl DiscretePOVM {
    pub fn new(labels: Vec<String>, effects: Vec<Effect>) -> Result<Self> {
        let matrices: Vec<HermitianMatrix> = effects.iter().map(|e| e.matrix().clone()).collect();
        let report = validate(&labels, &matrices);
        if let Some(violation) = report.violation {
            return Err(Error::InvalidPovm(violation));
        }
        Ok(Self { labels, effects })
    }

    pub fn from_matrices(labels: Vec<String>, matrices: Vec<HermitianMatrix>) -> Result<Self> {
        let effects = matrices
            .into_iter()
            .map(Effect::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, effects)
    }

    pub fn outcome_count(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &Effect {
        &self.effects[i]
    }

    /// Labels selected by a subset bitmask (bit i = outcome i).
    pub fn subset_labels(&self, mask: u32) -> Vec<&str> {
        (0..self.outcome_count())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.labels[i].as_str())
            .collect()
    }
}

/// Born statistics: the vector of trace(rho E_i).
pub fn born(rho: &DensityState, povm: &DiscretePOVM) -> Result<Vec<f64>> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), povm.dim()));
    }
    Ok(povm
        .effects
        .iter()
        .map(|e| trace_product(rho.matrix(), e.matrix()))
        .collect())
}

/// trace(A B) for Hermitian A, B; real up to round-off.
pub(crate) fn trace_product(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (a.get(i, j) * b.get(j, i)).re;
        }
    }
    acc
}

/// A joint POVM on a product outcome grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPOVM {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    effects: Vec<Vec<Effect>>,
}

impl JointPOVM {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        effects: Vec<Vec<Effect>>,
    ) -> Result<Self> {
        Self::check_shape(&row_labels, &col_labels, &effects)?;
        let joint = Self {
            row_labels,
            col_labels,
            effects,
        };
        joint.flatten()?;
        Ok(joint)
    }

    /// Build from matrices with a relaxed per-effect tolerance; used for
    /// numerically assembled joints such as feasibility witnesses.
    pub fn from_matrices_with_tol(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        matrices: Vec<Vec<HermitianMatrix>>,
        tol: f64,
    ) -> Result<Self> {
        let effects = matrices
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|m| Effect::with_tolerance(m, tol))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::check_shape(&row_labels, &col_labels, &effects)?;
        let joint = Self {
            row_labels,
            col_labels,
            effects,
        };
        // Completeness must hold at the standard tolerance regardless of how
        // loose the per-effect bound is.
        let matrices: Vec<HermitianMatrix> = joint
            .effects
            .iter()
            .flatten()
            .map(|e| e.matrix().clone())
            .collect();
        let mut sum = HermitianMatrix::zeros(matrices[0].dim());
        for m in &matrices {
            sum = &sum + m;
        }
        let dev = max_elementwise_identity_deviation(&sum);
        if dev > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "joint effects sum deviates from identity by {dev:.6e}"
            )));
        }
        Ok(joint)
    }

    fn check_shape(
        row_labels: &[String],
        col_labels: &[String],
        effects: &[Vec<Effect>],
    ) -> Result<()> {
        if effects.len() != row_labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} effect rows vs {} row labels",
                effects.len(),
                row_labels.len()
            )));
        }
        for row in effects {
            if row.len() != col_labels.len() {
                return Err(Error::ShapeMismatch(format!(
                    "effect row of length {} vs {} column labels",
                    row.len(),
                    col_labels.len()
                )));
            }
        }
        Ok(())
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn effect(&self, r: usize, c: usize) -> &Effect {
        &self.effects[r][c]
    }

    pub fn dim(&self) -> usize {
        self.effects[0][0].dim()
    }

    /// Flatten to a DiscretePOVM with labels "row,col" in row-major order.
    pub fn flatten(&self) -> Result<DiscretePOVM> {
        let mut labels = Vec::new();
        let mut effects = Vec::new();
        for (r, row) in self.effects.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                labels.push(format!("{},{}", self.row_labels[r], self.col_labels[c]));
                effects.push(e.clone());
            }
        }
        DiscretePOVM::new(labels, effects)
    }
}

/// Row and column marginal observables of a joint POVM.
pub fn marginals(joint: &JointPOVM) -> Result<(DiscretePOVM, DiscretePOVM)> {
    let dim = joint.dim();
    let rows = joint.row_labels.len();
    let cols = joint.col_labels.len();
    let mut row_effects = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut sum = HermitianMatrix::zeros(dim);
        for c in 0..cols {
            sum = &sum + joint.effects[r][c].matrix();
        }
        row_effects.push(Effect::with_tolerance(sum, 1e-8)?);
    }
    let mut col_effects = Vec::with_capacity(cols);
    for c in 0..cols {
        let mut sum = HermitianMatrix::zeros(dim);
        for r in 0..rows {
            sum = &sum + joint.effects[r][c].matrix();
        }
        col_effects.push(Effect::with_tolerance(sum, 1e-8)?);
    }
    Ok((
        DiscretePOVM::new(joint.row_labels.clone(), row_effects)?,
        DiscretePOVM::new(joint.col_labels.clone(), col_effects)?,
    ))
}

/// A column-stochastic matrix: entries >= 0 and every column sums to 1, so
/// that smearing preserves completeness.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        if entries.is_empty() || entries[0].is_empty() {
            return Err(Error::NotStochastic("matrix has no entries".into()));
        }
        let cols = entries[0].len();
        for row in &entries {
            if row.len() != cols {
                return Err(Error::NotStochastic("ragged rows".into()));
            }
            for &v in row {
                if v < 0.0 {
                    return Err(Error::NotStochastic(format!("negative entry {v}")));
                }
            }
        }
        for k in 0..cols {
            let sum: f64 = entries.iter().map(|row| row[k]).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::NotStochastic(format!(
                    "column {k} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n)
            .map(|j| (0..n).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { entries }
    }

    /// Symmetric binary smearing [[ (1+c)/2, (1-c)/2 ], [ (1-c)/2, (1+c)/2 ]].
    pub fn binary_symmetric(c: f64) -> Result<Self> {
        Self::new(vec![
            vec![0.5 * (1.0 + c), 0.5 * (1.0 - c)],
            vec![0.5 * (1.0 - c), 0.5 * (1.0 + c)],
        ])
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries[0].len()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j][k]
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }
}

/// Smear a POVM through a stochastic matrix: E_j = sum_k lambda[j][k] P_k.
pub fn smear(povm: &DiscretePOVM, lambda: &StochasticMatrix) -> Result<DiscretePOVM> {
    if lambda.cols() != povm.outcome_count() {
        return Err(Error::ShapeMismatch(format!(
            "stochastic matrix has {} columns but the POVM has {} outcomes",
            lambda.cols(),
            povm.outcome_count()
        )));
    }
    let dim = povm.dim();
    let mut effects = Vec::with_capacity(lambda.rows());
    for j in 0..lambda.rows() {
        let mut sum = HermitianMatrix::zeros(dim);
        for k in 0..lambda.cols() {
            let w = lambda.get(j, k);
            if w != 0.0 {
                sum = &sum + &povm.effect(k).matrix().scale(w);
            }
        }
        effects.push(Effect::new(sum)?);
    }
    let labels = if lambda.rows() == povm.outcome_count() {
        povm.labels.clone()
    } else {
        (0..lambda.rows()).map(|j| j.to_string()).collect()
    };
    DiscretePOVM::new(labels, effects)
}

/// Output of [`unsmear`]: operator combinations that recover the sharp
/// observable when the smearing is invertible. The entries need not be
/// effects for arbitrary inputs.
#[derive(Debug, Clone)]
pub struct UnsmearedOperators {
    pub labels: Vec<String>,
    pub operators: Vec<HermitianMatrix>,
    /// The inverse coefficients mu = Lambda^{-1}; P_k = sum_j mu[k][j] E_j.
    pub coefficients: Vec<Vec<f64>>,
    /// Frobenius condition estimate ||Lambda||_F ||Lambda^{-1}||_F.
    pub condition_estimate: f64,
}

/// Invert a smearing: P_k = sum_j mu[k][j] E_j with mu = Lambda^{-1}.
pub fn unsmear(povm: &DiscretePOVM, lambda: &StochasticMatrix) -> Result<UnsmearedOperators> {
    let n = povm.outcome_count();
    if lambda.rows() != n || lambda.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "unsmear needs a square {n}x{n} matrix, got {}x{}",
            lambda.rows(),
            lambda.cols()
        )));
    }
    let (mu, det) = invert(lambda.entries())?;
    let _ = det;
    let dim = povm.dim();
    let mut operators = Vec::with_capacity(n);
    for row in &mu {
        let mut sum = HermitianMatrix::zeros(dim);
        for (j, &w) in row.iter().enumerate() {
            if w != 0.0 {
                sum = &sum + &povm.effect(j).matrix().scale(w);
            }
        }
        operators.push(sum);
    }
    let fro = |m: &[Vec<f64>]| {
        m.iter()
            .flat_map(|r| r.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    };
    let condition_estimate = fro(lambda.entries()) * fro(&mu);
    Ok(UnsmearedOperators {
        labels: povm.labels.clone(),
        operators,
        coefficients: mu,
        condition_estimate,
    })
}

/// Gaussian elimination with partial pivoting; fails when |det| < 1e-12.
fn invert(entries: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = entries.len();
    let mut a: Vec<Vec<f64>> = entries.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut det = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot_row][col].abs() < 1e-300 {
            return Err(Error::SingularMatrix(0.0));
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            inv.swap(pivot_row, col);
            det = -det;
        }
        let pivot = a[col][col];
        det *= pivot;
        for j in 0..n {
            a[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let factor = a[i][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[i][j] -= factor * a[col][j];
                inv[i][j] -= factor * inv[col][j];
            }
        }
    }
    if det.abs() < 1e-12 {
        return Err(Error::SingularMatrix(det.abs()));
    }
    Ok((inv, det))
}

/// A total map between outcome label sets.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeMap {
    pairs: Vec<(String, String)>,
}

impl OutcomeMap {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self> {
        for i in 0..pairs.len() {
            if pairs[i + 1..].iter().any(|(src, _)| *src == pairs[i].0) {
                return Err(Error::AmbiguousOutcomeMap(pairs[i].0.clone()));
            }
        }
        Ok(Self { pairs })
    }

    pub fn identity(labels: &[String]) -> Self {
        Self {
            pairs: labels.iter().map(|l| (l.clone(), l.clone())).collect(),
        }
    }

    pub fn get(&self, source: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(src, _)| src == source)
            .map(|(_, dst)| dst.as_str())
    }

    /// Composition g . f (apply self first, then g).
    pub fn then(&self, g: &OutcomeMap) -> Result<OutcomeMap> {
        let pairs = self
            .pairs
            .iter()
            .map(|(src, mid)| {
                g.get(mid)
                    .map(|dst| (src.clone(), dst.to_string()))
                    .ok_or_else(|| Error::PartialOutcomeMap(mid.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        OutcomeMap::new(pairs)
    }
}

/// Image observable E^f: effect at y is the sum over outcomes mapping to y.
/// Output labels appear in order of first occurrence.
pub fn image(povm: &DiscretePOVM, map: &OutcomeMap) -> Result<DiscretePOVM> {
    let dim = povm.dim();
    let mut labels: Vec<String> = Vec::new();
    let mut sums: Vec<HermitianMatrix> = Vec::new();
    for (label, effect) in povm.labels.iter().zip(&povm.effects) {
        let target = map
            .get(label)
            .ok_or_else(|| Error::PartialOutcomeMap(label.clone()))?;
        match labels.iter().position(|l| l == target) {
            Some(idx) => sums[idx] = &sums[idx] + effect.matrix(),
            None => {
                labels.push(target.to_string());
                let mut m = HermitianMatrix::zeros(dim);
                m = &m + effect.matrix();
                sums.push(m);
            }
        }
    }
    let effects = sums
        .into_iter()
        .map(|m| Effect::with_tolerance(m, 1e-8))
        .collect::<Result<Vec<_>>>()?;
    DiscretePOVM::new(labels, effects)
}

/// A subset sum from the range of a POVM.
#[derive(Debug, Clone)]
pub struct RangeEffect {
    /// Bitmask over outcomes (bit i = outcome i included).
    pub mask: u32,
    pub effect: Effect,
}

fn subset_sums(povm: &DiscretePOVM) -> Result<Vec<HermitianMatrix>> {
    let n = povm.outcome_count();
    if n > MAX_RANGE_OUTCOMES {
        return Err(Error::TooManyOutcomes(n));
    }
    let total = 1usize << n;
    let mut sums = Vec::with_capacity(total);
    sums.push(HermitianMatrix::zeros(povm.dim()));
    for mask in 1..total {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        sums.push(&sums[rest] + povm.effect(low).matrix());
    }
    Ok(sums)
}

/// All 2^n subset effects of the range, including O and I.
pub fn range_effects(povm: &DiscretePOVM) -> Result<Vec<RangeEffect>> {
    let sums = subset_sums(povm)?;
    sums.into_iter()
        .enumerate()
        .map(|(mask, m)| {
            Ok(RangeEffect {
                mask: mask as u32,
                effect: Effect::with_tolerance(m, 1e-8)?,
            })
        })
        .collect()
}

/// A POVM is regular when every nontrivial range effect straddles 1/2:
/// largest eigenvalue > 1/2 and smallest < 1/2.
pub fn is_regular(povm: &DiscretePOVM) -> Result<bool> {
    let dim = povm.dim();
    let identity = HermitianMatrix::identity(dim);
    let sums = subset_sums(povm)?;
    for m in &sums {
        if m.fro_norm() < 1e-10 || m.fro_dist(&identity) < 1e-10 {
            continue;
        }
        let ev = m.eigenvalues();
        if !(ev[ev.len() - 1] > 0.5 && ev[0] < 0.5) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of a range-inclusion test; the witness pairs each subset of the
/// candidate with a matching subset of the encompassing POVM.
#[derive(Debug, Clone)]
pub struct RangeInclusion {
    pub included: bool,
    pub witness: Option<Vec<(u32, u32)>>,
}

/// Test ran(E1) within ran(E) by exhaustive subset comparison at Frobenius
/// tolerance [`RANGE_MATCH_TOL`].
pub fn range_inclusion(
    candidate: &DiscretePOVM,
    encompassing: &DiscretePOVM,
) -> Result<RangeInclusion> {
    if candidate.dim() != encompassing.dim() {
        return Err(Error::DimensionMismatch(
            candidate.dim(),
            encompassing.dim(),
        ));
    }
    let cand_sums = subset_sums(candidate)?;
    let enc_sums = subset_sums(encompassing)?;
    let mut witness = Vec::with_capacity(cand_sums.len());
    for (mask, m) in cand_sums.iter().enumerate() {
        let found = enc_sums
            .iter()
            .position(|e| e.fro_dist(m) < RANGE_MATCH_TOL);
        match found {
            Some(enc_mask) => witness.push((mask as u32, enc_mask as u32)),
            None => {
                return Ok(RangeInclusion {
                    included: false,
                    witness: None,
                })
            }
        }
    }
    Ok(RangeInclusion {
        included: true,
        witness: Some(witness),
    })
}

/// Largest pairwise commutator norm between the effects of two POVMs.
pub fn max_commutator_norm(e1: &DiscretePOVM, e2: &DiscretePOVM) -> Result<f64> {
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch(e1.dim(), e2.dim()));
    }
    let mut worst = 0.0f64;
    for a in &e1.effects {
        for b in &e2.effects {
            worst = worst.max(a.matrix().commutator_norm(b.matrix())?);
        }
    }
    Ok(worst)
}

/// True iff all effect pairs commute within `tol` in Frobenius norm.
pub fn commutes(e1: &DiscretePOVM, e2: &DiscretePOVM, tol: f64) -> Result<bool> {
    Ok(max_commutator_norm(e1, e2)? < tol)
}

/// Commutator tolerance accepted by [`product_joint`].
pub const PRODUCT_JOINT_COMMUTATOR_TOL: f64 = 1e-10;

/// Product joint observable F_ij = E1_i E2_j for commuting inputs, with the
/// Hermitian part absorbing round-off level commutator residue.
pub fn product_joint(e1: &DiscretePOVM, e2: &DiscretePOVM) -> Result<JointPOVM> {
    let worst = max_commutator_norm(e1, e2)?;
    if worst > PRODUCT_JOINT_COMMUTATOR_TOL {
        return Err(Error::NoncommutingInputs(worst));
    }
    let mut rows = Vec::with_capacity(e1.outcome_count());
    for a in &e1.effects {
        let mut row = Vec::with_capacity(e2.outcome_count());
        for b in &e2.effects {
            let m = a.matrix().jordan_product(b.matrix())?;
            row.push(Effect::with_tolerance(m, 1e-9)?);
        }
        rows.push(row);
    }
    JointPOVM::new(e1.labels.clone(), e2.labels.clone(), rows)
}

/// Result of the generalized Lüders operation for an effect.
#[derive(Debug, Clone)]
pub struct LudersOutcome {
    pub probability: f64,
    /// Absent when the outcome probability vanishes (below 1e-14).
    pub posterior: Option<DensityState>,
}

/// Lüders update rho -> A^{1/2} rho A^{1/2} / tr(rho A).
///
/// The updated operator is assembled in the Gram form M M^H with
/// M = A^{1/2} rho^{1/2} and normalized by its computed trace, so the
/// posterior stays positive semidefinite even when the outcome probability
/// is many orders of magnitude below one.
pub fn luders(rho: &DensityState, effect: &Effect) -> Result<LudersOutcome> {
    if rho.dim() != effect.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), effect.dim()));
    }
    let probability = trace_product(rho.matrix(), effect.matrix());
    if probability <= 1e-14 {
        return Ok(LudersOutcome {
            probability,
            posterior: None,
        });
    }
    let d = rho.dim();
    let effect_root = effect.matrix().sqrt_psd()?;
    let state_root = rho.matrix().sqrt_psd()?;
    let m = crate::linalg::matmul(effect_root.entries(), state_root.entries(), d);
    let mut gram = vec![num_complex::Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for k in 0..d {
                acc += m[i * d + k] * m[j * d + k].conj();
            }
            gram[i * d + j] = acc;
        }
    }
    let updated = HermitianMatrix::hermitized(d, gram);
    let trace = updated.trace();
    if trace <= 1e-14 {
        return Ok(LudersOutcome {
            probability,
            posterior: None,
        });
    }
    Ok(LudersOutcome {
        probability,
        posterior: Some(DensityState::new(updated.scale(1.0 / trace))?),
    })
}

// JSON encodings:
//   POVM: {"labels": [...], "effects": [matrix, ...]}
//   JointPOVM: {"row_labels": [...], "col_labels": [...], "effects": [[matrix, ...], ...]}
//   StochasticMatrix: {"rows": m, "cols": n, "entries": [[...]]}

#[derive(Serialize, Deserialize)]
struct PovmJson {
    labels: Vec<String>,
    effects: Vec<HermitianMatrix>,
}

impl Serialize for DiscretePOVM {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PovmJson {
            labels: self.labels.clone(),
            effects: self.effects.iter().map(|e| e.matrix().clone()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiscretePOVM {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = PovmJson::deserialize(deserializer)?;
        DiscretePOVM::from_matrices(json.labels, json.effects).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct JointJson {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    effects: Vec<Vec<HermitianMatrix>>,
}

impl Serialize for JointPOVM {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        JointJson {
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
            effects: self
                .effects
                .iter()
                .map(|row| row.iter().map(|e| e.matrix().clone()).collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for JointPOVM {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = JointJson::deserialize(deserializer)?;
        let effects = json
            .effects
            .into_iter()
            .map(|row| row.into_iter().map(Effect::new).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        JointPOVM::new(json.row_labels, json.col_labels, effects).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct StochasticJson {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<f64>>,
}

impl Serialize for StochasticMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StochasticJson {
            rows: self.rows(),
            cols: self.cols(),
            entries: self.entries.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StochasticMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = StochasticJson::deserialize(deserializer)?;
        if json.entries.len() != json.rows || json.entries.iter().any(|r| r.len() != json.cols) {
            return Err(D::Error::custom("entry shape differs from rows/cols"));
        }
        StochasticMatrix::new(json.entries).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::QubitBloch;
    use crate::qubit_models::build_spin_joint;
    use crate::sampling;
    use rand::Rng;

    fn sharp_z() -> DiscretePOVM {
        sampling::sharp_qubit_povm([0.0, 0.0, 1.0])
    }

    fn sharp_x() -> DiscretePOVM {
        sampling::sharp_qubit_povm([1.0, 0.0, 0.0])
    }

    /// The smeared marginal (I +- c sigma_k)/2 as a binary POVM.
    fn smeared(c: f64, axis: usize) -> DiscretePOVM {
        let mut n = [0.0; 3];
        n[axis - 1] = 1.0;
        let plus = QubitBloch::new(0.5, crate::linalg::vec3::scale(&n, 0.5 * c));
        sampling::binary_povm_from_bloch(&plus)
    }

    #[test]
    fn validate_reports_first_violation() {
        let p = sharp_z();
        let ok = validate(
            p.labels(),
            &p.effects()
                .iter()
                .map(|e| e.matrix().clone())
                .collect::<Vec<_>>(),
        );
        assert!(ok.ok);

        let plus = p.effect(0).matrix().clone();
        let bad = validate(&["+".into(), "-".into()], &[plus.clone(), plus]);
        assert!(!bad.ok);
        assert!(bad.violation.unwrap().contains("sum differs from identity"));

        let g = build_spin_joint().flatten().unwrap();
        let report = validate(
            g.labels(),
            &g.effects()
                .iter()
                .map(|e| e.matrix().clone())
                .collect::<Vec<_>>(),
        );
        assert!(report.ok);
    }

    #[test]
    fn born_statistics() {
        let rho = DensityState::new(QubitBloch::projector([0.0, 0.0, 1.0]).to_matrix()).unwrap();
        let p = born(&rho, &sharp_z()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-14);
        assert!(p[1].abs() < 1e-14);

        let mixed = DensityState::maximally_mixed(2);
        let g = build_spin_joint().flatten().unwrap();
        for v in born(&mixed, &g).unwrap() {
            assert!((v - 0.25).abs() < 1e-14);
        }

        // pure x-up state against the spin joint: 1/4 (1 + r.n_jk)
        let xup = DensityState::new(QubitBloch::projector([1.0, 0.0, 0.0]).to_matrix()).unwrap();
        let probs = born(&xup, &g).unwrap();
        let hi = 0.25 * (1.0 + 1.0 / 2f64.sqrt());
        let lo = 0.25 * (1.0 - 1.0 / 2f64.sqrt());
        let expected = [hi, hi, lo, lo];
        for (got, want) in probs.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn marginals_of_product_and_spin_joint() {
        let z = sharp_z();
        let joint = product_joint(&z, &z).unwrap();
        let (m1, m2) = marginals(&joint).unwrap();
        for k in 0..2 {
            assert!(m1.effect(k).matrix().fro_dist(z.effect(k).matrix()) < 1e-12);
            assert!(m2.effect(k).matrix().fro_dist(z.effect(k).matrix()) < 1e-12);
        }

        let g = build_spin_joint();
        let (e1, e2) = marginals(&g).unwrap();
        let c = 2f64.sqrt() / 2.0;
        assert!(
            e1.effect(0)
                .matrix()
                .fro_dist(smeared(c, 1).effect(0).matrix())
                < 1e-14
        );
        assert!(
            e2.effect(0)
                .matrix()
                .fro_dist(smeared(c, 2).effect(0).matrix())
                < 1e-14
        );
    }

    #[test]
    fn marginal_linearity_property() {
        // flatten-then-regroup equals the marginal of the joint
        let mut rng = sampling::rng(2);
        for _ in 0..20 {
            let base = sampling::random_sharp_povm(&mut rng, 3);
            let lam = StochasticMatrix::binary_symmetric(rng.gen_range(0.1..0.9)).unwrap();
            // build a commuting pair and its product joint
            let f = OutcomeMap::new(vec![
                ("0".into(), "a".into()),
                ("1".into(), "a".into()),
                ("2".into(), "b".into()),
            ])
            .unwrap();
            let e1 = image(&base, &f).unwrap();
            let e2 = smear(&e1, &lam).unwrap();
            let joint = product_joint(&e1, &e2).unwrap();
            let (m1, m2) = marginals(&joint).unwrap();
            for k in 0..e1.outcome_count() {
                assert!(m1.effect(k).matrix().fro_dist(e1.effect(k).matrix()) < 1e-10);
            }
            for k in 0..e2.outcome_count() {
                assert!(m2.effect(k).matrix().fro_dist(e2.effect(k).matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn smear_identity_and_noise() {
        let x = sharp_x();
        let id = StochasticMatrix::identity(2);
        let same = smear(&x, &id).unwrap();
        for k in 0..2 {
            assert!(same.effect(k).matrix().fro_dist(x.effect(k).matrix()) < 1e-15);
        }

        let c = 2f64.sqrt() / 2.0;
        let lam = StochasticMatrix::binary_symmetric(c).unwrap();
        let sm = smear(&x, &lam).unwrap();
        for k in 0..2 {
            assert!(
                sm.effect(k)
                    .matrix()
                    .fro_dist(smeared(c, 1).effect(k).matrix())
                    < 1e-14
            );
        }

        let noise = StochasticMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let flat = smear(&x, &noise).unwrap();
        let half = HermitianMatrix::scaled_identity(2, 0.5);
        for k in 0..2 {
            assert!(flat.effect(k).matrix().fro_dist(&half) < 1e-15);
        }
    }

    #[test]
    fn unsmear_recovers_sharp_observable() {
        let c = 2f64.sqrt() / 2.0;
        let lam = StochasticMatrix::binary_symmetric(c).unwrap();
        let sm = smeared(c, 1);
        let un = unsmear(&sm, &lam).unwrap();
        let expected_hi = 0.5 * (2f64.sqrt() + 1.0);
        let expected_lo = 0.5 * (2f64.sqrt() - 1.0);
        assert!((un.coefficients[0][0] - expected_hi).abs() < 1e-12);
        assert!((un.coefficients[0][1] + expected_lo).abs() < 1e-12);
        let x = sharp_x();
        for k in 0..2 {
            assert!(un.operators[k].fro_dist(x.effect(k).matrix()) < 1e-12);
        }

        let id = StochasticMatrix::identity(2);
        let same = unsmear(&sm, &id).unwrap();
        for k in 0..2 {
            assert!(same.operators[k].fro_dist(sm.effect(k).matrix()) < 1e-15);
        }
    }

    #[test]
    fn smear_unsmear_round_trip_random() {
        let mut rng = sampling::rng(13);
        for _ in 0..100 {
            let sharp = sampling::random_sharp_qubit_povm(&mut rng);
            // random invertible stochastic 2x2 (c bounded away from 0)
            let c: f64 = rng.gen_range(0.2..1.0);
            let lam = StochasticMatrix::binary_symmetric(c).unwrap();
            let sm = smear(&sharp, &lam).unwrap();
            let un = unsmear(&sm, &lam).unwrap();
            for k in 0..2 {
                assert!(un.operators[k].fro_dist(sharp.effect(k).matrix()) < 1e-9);
            }
        }
    }

    #[test]
    fn unsmear_rejects_singular() {
        let noise = StochasticMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let sm = smeared(0.3, 1);
        assert!(matches!(
            unsmear(&sm, &noise),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn image_observable() {
        let g = build_spin_joint().flatten().unwrap();
        let id = OutcomeMap::identity(g.labels());
        let same = image(&g, &id).unwrap();
        assert_eq!(same.labels(), g.labels());

        // first-index marginal as an image observable
        let f = OutcomeMap::new(
            g.labels()
                .iter()
                .map(|l| (l.clone(), l.split(',').next().unwrap().to_string()))
                .collect(),
        )
        .unwrap();
        let e1 = image(&g, &f).unwrap();
        let c = 2f64.sqrt() / 2.0;
        assert!(
            e1.effect(0)
                .matrix()
                .fro_dist(smeared(c, 1).effect(0).matrix())
                < 1e-14
        );

        // collapsing everything yields the trivial POVM {I}
        let collapse = OutcomeMap::new(
            g.labels()
                .iter()
                .map(|l| (l.clone(), "all".to_string()))
                .collect(),
        )
        .unwrap();
        let trivial = image(&g, &collapse).unwrap();
        assert_eq!(trivial.outcome_count(), 1);
        assert!(
            trivial
                .effect(0)
                .matrix()
                .fro_dist(&HermitianMatrix::identity(2))
                < 1e-12
        );
    }

    #[test]
    fn image_functoriality() {
        let mut rng = sampling::rng(4);
        for _ in 0..20 {
            let base = sampling::random_sharp_povm(&mut rng, 4);
            let f = OutcomeMap::new(
                base.labels()
                    .iter()
                    .map(|l| {
                        let target = rng.gen_range(0..3u32).to_string();
                        (l.clone(), format!("m{target}"))
                    })
                    .collect(),
            )
            .unwrap();
            let mids: Vec<String> = (0..3).map(|k| format!("m{k}")).collect();
            let g = OutcomeMap::new(
                mids.iter()
                    .map(|l| (l.clone(), if rng.gen() { "x" } else { "y" }.to_string()))
                    .collect(),
            )
            .unwrap();
            let composed = image(&base, &f.then(&g).unwrap()).unwrap();
            let staged = image(&image(&base, &f).unwrap(), &g).unwrap();
            assert_eq!(composed.labels(), staged.labels());
            for k in 0..composed.outcome_count() {
                assert!(
                    composed
                        .effect(k)
                        .matrix()
                        .fro_dist(staged.effect(k).matrix())
                        < 1e-12
                );
            }
        }
    }

    #[test]
    fn range_enumeration() {
        let z = sharp_z();
        let range = range_effects(&z).unwrap();
        assert_eq!(range.len(), 4);
        assert!(range[0].effect.matrix().fro_norm() < 1e-15);
        assert!(
            range[3]
                .effect
                .matrix()
                .fro_dist(&HermitianMatrix::identity(2))
                < 1e-15
        );

        let g = build_spin_joint().flatten().unwrap();
        let range = range_effects(&g).unwrap();
        assert_eq!(range.len(), 16);
        // complement subsets satisfy E(X) + E(X^c) = I
        let full = 0b1111u32;
        for re in &range {
            let comp = &range[(full ^ re.mask) as usize];
            let sum = re.effect.matrix() + comp.effect.matrix();
            assert!(sum.fro_dist(&HermitianMatrix::identity(2)) < 1e-12);
        }
    }

    #[test]
    fn regularity() {
        assert!(is_regular(&sharp_z()).unwrap());
        let c = 2f64.sqrt() / 2.0;
        assert!(is_regular(&smeared(c, 1)).unwrap());

        // effects {0.4 I, 0.6 I} lie entirely below/above I/2
        let low = Effect::new(HermitianMatrix::scaled_identity(2, 0.4)).unwrap();
        let high = Effect::new(HermitianMatrix::scaled_identity(2, 0.6)).unwrap();
        let trivial_ish =
            DiscretePOVM::new(vec!["lo".into(), "hi".into()], vec![low, high]).unwrap();
        assert!(!is_regular(&trivial_ish).unwrap());
    }

    #[test]
    fn projection_valued_range_is_boolean() {
        // for sharp POVMs the range is closed under products: check the
        // 4-outcome spectral POVM of a random Hermitian in d = 4
        let mut rng = sampling::rng(9);
        let sharp = sampling::random_sharp_povm(&mut rng, 4);
        assert!(is_regular(&sharp).unwrap());
        let range = range_effects(&sharp).unwrap();
        for a in &range {
            for b in &range {
                let prod = a.effect.matrix().jordan_product(b.effect.matrix()).unwrap();
                // the product of two commuting projections is again a subset sum
                let found = range
                    .iter()
                    .any(|r| r.effect.matrix().fro_dist(&prod) < 1e-9);
                assert!(found);
            }
        }
    }

    #[test]
    fn range_inclusion_cases() {
        let g = build_spin_joint().flatten().unwrap();
        let f = OutcomeMap::new(
            g.labels()
                .iter()
                .map(|l| (l.clone(), l.split(',').next().unwrap().to_string()))
                .collect(),
        )
        .unwrap();
        let e1 = image(&g, &f).unwrap();
        let incl = range_inclusion(&e1, &g).unwrap();
        assert!(incl.included);
        assert!(incl.witness.is_some());

        let self_incl = range_inclusion(&g, &g).unwrap();
        assert!(self_incl.included);

        let not = range_inclusion(&sharp_x(), &sharp_z()).unwrap();
        assert!(!not.included);
        assert!(not.witness.is_none());
    }

    #[test]
    fn commutation_checks() {
        let z = sharp_z();
        assert!(commutes(&z, &z, 1e-10).unwrap());
        let x = sharp_x();
        let norm = max_commutator_norm(&x, &z).unwrap();
        assert!((norm - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!(!commutes(&x, &z, 1e-10).unwrap());

        let c = 2f64.sqrt() / 2.0;
        assert!(!commutes(&smeared(c, 1), &smeared(c, 2), 1e-10).unwrap());
    }

    #[test]
    fn product_joint_diagonal_and_noise() {
        let z = sharp_z();
        let joint = product_joint(&z, &z).unwrap();
        assert!(joint.effect(0, 0).matrix().fro_dist(z.effect(0).matrix()) < 1e-14);
        assert!(joint.effect(0, 1).matrix().fro_norm() < 1e-14);
        assert!(joint.effect(1, 0).matrix().fro_norm() < 1e-14);
        assert!(joint.effect(1, 1).matrix().fro_dist(z.effect(1).matrix()) < 1e-14);

        let noise = DiscretePOVM::new(
            vec!["a".into(), "b".into()],
            vec![
                Effect::new(HermitianMatrix::scaled_identity(2, 0.5)).unwrap(),
                Effect::new(HermitianMatrix::scaled_identity(2, 0.5)).unwrap(),
            ],
        )
        .unwrap();
        let joint = product_joint(&z, &noise).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = z.effect(i).matrix().scale(0.5);
                assert!(joint.effect(i, j).matrix().fro_dist(&expected) < 1e-14);
            }
        }

        assert!(matches!(
            product_joint(&sharp_x(), &z),
            Err(Error::NoncommutingInputs(_))
        ));
    }

    #[test]
    fn luders_update() {
        let mut rng = sampling::rng(21);
        let rho = sampling::random_density(&mut rng, 2);
        let id = Effect::identity(2);
        let out = luders(&rho, &id).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-12);
        assert!(out.posterior.unwrap().matrix().fro_dist(rho.matrix()) < 1e-12);

        let half = Effect::new(HermitianMatrix::scaled_identity(2, 0.5)).unwrap();
        let out = luders(&rho, &half).unwrap();
        assert!((out.probability - 0.5).abs() < 1e-12);
        assert!(out.posterior.unwrap().matrix().fro_dist(rho.matrix()) < 1e-12);

        let mixed = DensityState::maximally_mixed(2);
        let plus = QubitBloch::projector([0.0, 0.0, 1.0]).to_effect().unwrap();
        let out = luders(&mixed, &plus).unwrap();
        assert!((out.probability - 0.5).abs() < 1e-14);
        assert!(out.posterior.unwrap().matrix().fro_dist(plus.matrix()) < 1e-12);

        // orthogonal projection on a pure state: probability 0, no posterior
        let up = DensityState::new(QubitBloch::projector([0.0, 0.0, 1.0]).to_matrix()).unwrap();
        let down = QubitBloch::projector([0.0, 0.0, -1.0]).to_effect().unwrap();
        let out = luders(&up, &down).unwrap();
        assert!(out.probability.abs() < 1e-14);
        assert!(out.posterior.is_none());
    }

    #[test]
    fn luders_tiny_probability_posterior_is_valid() {
        // a nearly orthogonal pure state against a tilted projection: the
        // outcome probability is ~1e-12 but the posterior must still be a
        // valid state equal to the projection
        let axis = crate::linalg::vec3::scale(&[1.0, 1.0, 1.0], 1.0 / 3f64.sqrt());
        let plus = QubitBloch::projector(axis).to_effect().unwrap();
        let theta: f64 = 3e-6;
        let ortho = crate::linalg::vec3::cross(&axis, &[0.0, 0.0, 1.0]);
        let ortho = crate::linalg::vec3::scale(&ortho, 1.0 / crate::linalg::vec3::norm(&ortho));
        let almost_opposite = crate::linalg::vec3::add(
            &crate::linalg::vec3::scale(&axis, -theta.cos()),
            &crate::linalg::vec3::scale(&ortho, theta.sin()),
        );
        let rho = DensityState::new(QubitBloch::projector(almost_opposite).to_matrix()).unwrap();
        let out = luders(&rho, &plus).unwrap();
        assert!(out.probability > 1e-14 && out.probability < 1e-10);
        let posterior = out.posterior.expect("probability above the cutoff");
        assert!(posterior.matrix().fro_dist(plus.matrix()) < 1e-8);
    }

    #[test]
    fn luders_probability_matches_born() {
        let mut rng = sampling::rng(22);
        for _ in 0..20 {
            let rho = sampling::random_density(&mut rng, 3);
            let povm = sampling::random_sharp_povm(&mut rng, 3);
            let probs = born(&rho, &povm).unwrap();
            for (k, p) in probs.iter().enumerate() {
                let out = luders(&rho, povm.effect(k)).unwrap();
                assert!((out.probability - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smear_preserves_completeness_exactly() {
        let mut rng = sampling::rng(31);
        for _ in 0..50 {
            let sharp = sampling::random_sharp_qubit_povm(&mut rng);
            let c: f64 = rng.gen_range(0.0..1.0);
            let lam = StochasticMatrix::binary_symmetric(c).unwrap();
            let sm = smear(&sharp, &lam).unwrap();
            let sum = sm.effect(0).matrix() + sm.effect(1).matrix();
            assert!(sum.fro_dist(&HermitianMatrix::identity(2)) < 1e-12);
        }
    }

    #[test]
    fn povm_json_round_trip() {
        let g = build_spin_joint();
        let text = serde_json::to_string(&g).unwrap();
        let back: JointPOVM = serde_json::from_str(&text).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!(back.effect(r, c).matrix().fro_dist(g.effect(r, c).matrix()) < 1e-15);
            }
        }

        let flat = g.flatten().unwrap();
        let text = serde_json::to_string(&flat).unwrap();
        let back: DiscretePOVM = serde_json::from_str(&text).unwrap();
        assert_eq!(back.labels(), flat.labels());

        // an invalid POVM must fail to deserialize
        let p = sharp_z();
        let bad = PovmJson {
            labels: vec!["+".into(), "-".into()],
            effects: vec![p.effect(0).matrix().clone(), p.effect(0).matrix().clone()],
        };
        let text = serde_json::to_string(&bad).unwrap();
        assert!(serde_json::from_str::<DiscretePOVM>(&text).is_err());
    }

    #[test]
    fn dimension_and_shape_errors() {
        let z = sharp_z();
        let mixed3 = DensityState::maximally_mixed(3);
        assert!(matches!(
            born(&mixed3, &z),
            Err(Error::DimensionMismatch(3, 2))
        ));

        let mut rng = sampling::rng(77);
        let trinary = sampling::random_sharp_povm(&mut rng, 3);
        assert!(matches!(
            max_commutator_norm(&z, &trinary),
            Err(Error::DimensionMismatch(2, 3))
        ));

        let lam = StochasticMatrix::identity(2);
        assert!(matches!(
            smear(&trinary, &lam),
            Err(Error::ShapeMismatch(_))
        ));

        let partial = OutcomeMap::new(vec![("+".into(), "x".into())]).unwrap();
        assert!(matches!(
            image(&z, &partial),
            Err(Error::PartialOutcomeMap(_))
        ));

        let uniform = Effect::new(HermitianMatrix::scaled_identity(2, 1.0 / 17.0)).unwrap();
        let big =
            DiscretePOVM::new((0..17).map(|i| i.to_string()).collect(), vec![uniform; 17]).unwrap();
        assert!(matches!(
            range_effects(&big),
            Err(Error::TooManyOutcomes(17))
        ));
        assert!(matches!(is_regular(&big), Err(Error::TooManyOutcomes(17))));
    }

    #[test]
    fn stochastic_validation() {
        assert!(StochasticMatrix::new(vec![vec![0.7, 0.2], vec![0.3, 0.8]]).is_ok());
        assert!(StochasticMatrix::new(vec![vec![0.7, 0.2], vec![0.2, 0.8]]).is_err());
        assert!(StochasticMatrix::new(vec![vec![1.2, 0.0], vec![-0.2, 1.0]]).is_err());
        // nonsquare column-stochastic: 3 outcomes from 2
        let rect =
            StochasticMatrix::new(vec![vec![0.5, 0.1], vec![0.25, 0.3], vec![0.25, 0.6]]).unwrap();
        let sm = smear(&sharp_z(), &rect).unwrap();
        assert_eq!(sm.outcome_count(), 3);
        assert_eq!(sm.labels(), &["0".to_string(), "1".into(), "2".into()]);
    }
}

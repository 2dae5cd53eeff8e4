//! Dense complex-Hermitian matrix algebra for small dimensions (d <= 32).
//!
//! Everything is built on [`HermitianMatrix`]: eigenvalues via a closed form
//! for d = 2 and cyclic Jacobi rotations otherwise, positivity tests, PSD
//! square roots, and the Bloch parametrization for qubits. All values are
//! immutable after construction and safe to share across threads.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Hermiticity tolerance accepted by [`HermitianMatrix::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;
/// PSD slack used by effect and state validation.
pub const PSD_TOL: f64 = 1e-10;
/// Largest dimension the dense routines are meant for.
pub const MAX_DIM: usize = 32;

/// Off-diagonal norm target for the cyclic Jacobi sweep, relative to the
/// Frobenius norm of the input (absolute for unit-scale operators).
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Plain 3-vector helpers shared by the Bloch-form modules.
pub mod vec3 {
    pub type Vec3 = [f64; 3];

    pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    pub fn norm(a: &Vec3) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn scale(a: &Vec3, s: f64) -> Vec3 {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    /// Apply a 3x3 rotation matrix (rows dotted with the vector).
    pub fn rotate(r: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
        [dot(&r[0], v), dot(&r[1], v), dot(&r[2], v)]
    }
}

/// A dense Hermitian matrix, stored row-major.
///
/// Construction validates conjugate symmetry within [`HERMITICITY_TOL`] and
/// then symmetrizes exactly, so arithmetic downstream never re-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadShape {
                expected: 1,
                got: 0,
            });
        }
        if entries.len() != dim * dim {
            return Err(Error::BadShape {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let mut violation = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let delta = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                violation = violation.max(delta);
            }
        }
        if violation > HERMITICITY_TOL {
            return Err(Error::NotHermitian(violation));
        }
        Ok(Self::hermitized(dim, entries))
    }

    /// Build from entries that are Hermitian by construction; the stored
    /// matrix is symmetrized exactly either way.
    pub(crate) fn hermitized(dim: usize, mut entries: Vec<Complex64>) -> Self {
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(entries[i * dim + i].re, 0.0);
            for j in (i + 1)..dim {
                let avg = 0.5 * (entries[i * dim + j] + entries[j * dim + i].conj());
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg.conj();
            }
        }
        Self { dim, entries }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex64::new(s, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.entries[i * self.dim + i].re)
            .sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn fro_dist(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    /// Hermitian part of the product: (AB + BA)/2.
    pub fn jordan_product(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let ab = matmul(&self.entries, &other.entries, self.dim);
        let ba = matmul(&other.entries, &self.entries, self.dim);
        let entries = ab.iter().zip(&ba).map(|(x, y)| 0.5 * (x + y)).collect();
        Ok(Self::hermitized(self.dim, entries))
    }

    /// Frobenius norm of the commutator [A, B].
    pub fn commutator_norm(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let ab = matmul(&self.entries, &other.entries, self.dim);
        let ba = matmul(&other.entries, &self.entries, self.dim);
        Ok(ab
            .iter()
            .zip(&ba)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// The sandwich S M S for Hermitian S = self; Hermitian by construction.
    pub fn sandwich(&self, inner: &Self) -> Result<Self> {
        if self.dim != inner.dim {
            return Err(Error::DimensionMismatch(self.dim, inner.dim));
        }
        let sm = matmul(&self.entries, &inner.entries, self.dim);
        let sms = matmul(&sm, &self.entries, self.dim);
        Ok(Self::hermitized(self.dim, sms))
    }

    /// Full real spectrum in ascending order.
    ///
    /// d = 2 uses the closed form a0 +- |a| of the Bloch decomposition;
    /// larger dimensions run cyclic Jacobi sweeps.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim == 1 {
            return vec![self.entries[0].re];
        }
        if self.dim == 2 {
            let (a0, r) = self.qubit_center_radius();
            return vec![a0 - r, a0 + r];
        }
        let (values, _) = jacobi_eigh(self.dim, self.entries.clone());
        values
    }

    /// (a0, |a|) of the d = 2 Bloch decomposition; callers guarantee dim = 2.
    fn qubit_center_radius(&self) -> (f64, f64) {
        let a0 = 0.5 * (self.entries[0].re + self.entries[3].re);
        let a3 = 0.5 * (self.entries[0].re - self.entries[3].re);
        let off = self.entries[1];
        let r = (a3 * a3 + off.norm_sqr()).sqrt();
        (a0, r)
    }

    /// True iff the smallest eigenvalue is >= -tol.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues()[0] >= -tol
    }

    /// PSD square root via eigendecomposition.
    ///
    /// Eigenvalues in [-1e-8, 0) are clamped to zero; anything more negative
    /// is rejected as genuinely non-PSD input.
    pub fn sqrt_psd(&self) -> Result<Self> {
        let (values, vectors) = if self.dim == 1 {
            (vec![self.entries[0].re], vec![Complex64::new(1.0, 0.0)])
        } else {
            jacobi_eigh(self.dim, self.entries.clone())
        };
        if values[0] < -1e-8 {
            return Err(Error::NotPsd(values[0]));
        }
        let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
        Ok(Self::hermitized(
            self.dim,
            rebuild_from_eigh(self.dim, &roots, &vectors),
        ))
    }
}

impl std::ops::Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        HermitianMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl std::ops::Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        HermitianMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

pub(crate) fn matmul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

/// S = U f(L) U^H from an eigendecomposition (vectors row-major, eigenvector
/// k in column k).
fn rebuild_from_eigh(d: usize, values: &[f64], vectors: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        let vk = values[k];
        if vk == 0.0 {
            continue;
        }
        for i in 0..d {
            let uik = vectors[i * d + k];
            for j in 0..d {
                out[i * d + j] += vk * uik * vectors[j * d + k].conj();
            }
        }
    }
    out
}

/// Cyclic Jacobi eigendecomposition for Hermitian input.
///
/// Returns eigenvalues ascending and the accompanying unitary (columns are
/// eigenvectors, permuted consistently). Deterministic: fixed sweep order,
/// convergence at off-diagonal norm below `JACOBI_TOL * max(1, ||A||_F)`.
fn jacobi_eigh(d: usize, mut a: Vec<Complex64>) -> (Vec<f64>, Vec<Complex64>) {
    let mut v = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        v[i * d + i] = Complex64::new(1.0, 0.0);
    }
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let threshold = JACOBI_TOL * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..d)
            .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * a[i * d + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < threshold {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                let mag = apq.norm();
                if mag <= threshold / (d * d) as f64 * 1e-2 {
                    continue;
                }
                let app = a[p * d + p].re;
                let aqq = a[q * d + q].re;
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary R: R[p][p] = c, R[p][q] = s*phase,
                // R[q][p] = -s*conj(phase), R[q][q] = c; A <- R^H A R.
                for k in 0..d {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    let new_kp = akp * c - akq * s * phase.conj();
                    let new_kq = akp * s * phase + akq * c;
                    a[k * d + p] = new_kp;
                    a[p * d + k] = new_kp.conj();
                    a[k * d + q] = new_kq;
                    a[q * d + k] = new_kq.conj();
                }
                let new_pp = c * c * app - 2.0 * c * s * mag + s * s * aqq;
                let new_qq = s * s * app + 2.0 * c * s * mag + c * c * aqq;
                a[p * d + p] = Complex64::new(new_pp, 0.0);
                a[q * d + q] = Complex64::new(new_qq, 0.0);
                a[p * d + q] = Complex64::new(0.0, 0.0);
                a[q * d + p] = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = vkp * c - vkq * s * phase.conj();
                    v[k * d + q] = vkp * s * phase + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[i * d + i].re.total_cmp(&a[j * d + j].re));
    let values: Vec<f64> = order.iter().map(|&i| a[i * d + i].re).collect();
    let mut vectors = vec![Complex64::new(0.0, 0.0); d * d];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..d {
            vectors[row * d + new_col] = v[row * d + old_col];
        }
    }
    (values, vectors)
}

/// Eigenvector matrix of a Hermitian input (row-major; column k is the
/// eigenvector of the k-th smallest eigenvalue).
pub(crate) fn eigenvectors(h: &HermitianMatrix) -> Vec<Complex64> {
    let (_, vectors) = jacobi_eigh(h.dim(), h.entries().to_vec());
    vectors
}

/// An effect operator: O <= A <= I within [`PSD_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    matrix: HermitianMatrix,
}

impl Effect {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, PSD_TOL)
    }

    pub fn with_tolerance(matrix: HermitianMatrix, tol: f64) -> Result<Self> {
        let ev = matrix.eigenvalues();
        let min = ev[0];
        let max = ev[ev.len() - 1];
        if min < -tol || max > 1.0 + tol {
            return Err(Error::EffectBounds { min, max });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::identity(dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::zeros(dim),
        }
    }

    /// The complement effect I - A.
    pub fn complement(&self) -> Self {
        Self {
            matrix: &HermitianMatrix::identity(self.dim()) - &self.matrix,
        }
    }
}

/// A density state: PSD with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: HermitianMatrix,
}

impl DensityState {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        if !matrix.is_psd(PSD_TOL) {
            return Err(Error::NotPsd(matrix.eigenvalues()[0]));
        }
        let tr = matrix.trace();
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::TraceNotOne(tr));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::scaled_identity(dim, 1.0 / dim as f64),
        }
    }
}

/// Bloch form of a qubit operator: A = a0 I + a . sigma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitBloch {
    pub a0: f64,
    pub a: [f64; 3],
}

impl QubitBloch {
    pub fn new(a0: f64, a: [f64; 3]) -> Self {
        Self { a0, a }
    }

    pub fn bloch_norm(&self) -> f64 {
        vec3::norm(&self.a)
    }

    /// An effect iff |a| <= min(a0, 1 - a0); checked with 1e-12 slack.
    pub fn is_effect(&self) -> bool {
        self.bloch_norm() <= self.a0.min(1.0 - self.a0) + 1e-12
    }

    pub fn to_matrix(&self) -> HermitianMatrix {
        let (a0, a) = (self.a0, self.a);
        HermitianMatrix::hermitized(
            2,
            vec![
                Complex64::new(a0 + a[2], 0.0),
                Complex64::new(a[0], -a[1]),
                Complex64::new(a[0], a[1]),
                Complex64::new(a0 - a[2], 0.0),
            ],
        )
    }

    pub fn from_matrix(h: &HermitianMatrix) -> Result<Self> {
        if h.dim() != 2 {
            return Err(Error::DimensionMismatch(h.dim(), 2));
        }
        let a0 = 0.5 * (h.get(0, 0).re + h.get(1, 1).re);
        let a = [
            h.get(0, 1).re,
            -h.get(0, 1).im,
            0.5 * (h.get(0, 0).re - h.get(1, 1).re),
        ];
        Ok(Self { a0, a })
    }

    pub fn to_effect(&self) -> Result<Effect> {
        Effect::new(self.to_matrix())
    }

    /// Spectral projection (I + n.sigma)/2 for a unit direction n.
    pub fn projector(n: [f64; 3]) -> Self {
        Self {
            a0: 0.5,
            a: vec3::scale(&n, 0.5),
        }
    }
}

/// Pauli matrices, for tests and model constructions.
pub fn pauli(k: usize) -> HermitianMatrix {
    let i = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let entries = match k {
        1 => vec![zero, one, one, zero],
        2 => vec![zero, -i, i, zero],
        3 => vec![one, zero, zero, -one],
        _ => panic!("pauli index must be 1, 2 or 3"),
    };
    HermitianMatrix::hermitized(2, entries)
}

// JSON encoding: {"dim": d, "re": [[...]], "im": [[...]]}, row-major.

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<&HermitianMatrix> for MatrixJson {
    fn from(m: &HermitianMatrix) -> Self {
        let d = m.dim();
        let re = (0..d)
            .map(|i| (0..d).map(|j| m.get(i, j).re).collect())
            .collect();
        let im = (0..d)
            .map(|i| (0..d).map(|j| m.get(i, j).im).collect())
            .collect();
        MatrixJson { dim: d, re, im }
    }
}

impl MatrixJson {
    fn build(self) -> Result<HermitianMatrix> {
        let d = self.dim;
        let flat_len = |rows: &Vec<Vec<f64>>| rows.iter().map(|r| r.len()).sum::<usize>();
        if self.re.len() != d
            || self.im.len() != d
            || flat_len(&self.re) != d * d
            || flat_len(&self.im) != d * d
        {
            return Err(Error::BadShape {
                expected: d * d,
                got: flat_len(&self.re),
            });
        }
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push(Complex64::new(self.re[i][j], self.im[i][j]));
            }
        }
        HermitianMatrix::new(d, entries)
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(deserializer)?;
        json.build().map_err(D::Error::custom)
    }
}

impl Serialize for Effect {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Effect {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let matrix = HermitianMatrix::deserialize(deserializer)?;
        Effect::new(matrix).map_err(D::Error::custom)
    }
}

impl Serialize for DensityState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let matrix = HermitianMatrix::deserialize(deserializer)?;
        DensityState::new(matrix).map_err(D::Error::custom)
    }
}

//! Grid-sampled probability distributions, convolution smearing, moment
//! computation, and the moment-recursion reconstruction of sharp statistics
//! from convolved statistics, with the exponential-boundedness growth check.
//!
//! Units: hbar = 1 throughout. The momentum-space convention is
//! psi_hat(p) = (2 pi)^{-1/2} \int psi(x) e^{-i p x} dx.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Default sampling grid: 4096 points on [-20, 20), enough for Hermite
/// states up to n = 20 with sub-1e-80 tail truncation.
pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const DEFAULT_GRID_HALF_WIDTH: f64 = 20.0;

/// A uniform real-line grid x_j = x0 + j dx, j = 0..n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    /// Grid symmetric about 0 in the periodic FFT convention: points from
    /// -half_width to half_width - dx.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        if n < 2 || half_width <= 0.0 || !half_width.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "grid needs n >= 2 and positive half-width, got n = {n}, L = {half_width}"
            )));
        }
        Ok(Self {
            x0: -half_width,
            dx: 2.0 * half_width / n as f64,
            n,
        })
    }

    pub fn default_grid() -> Self {
        Self::symmetric(DEFAULT_GRID_HALF_WIDTH, DEFAULT_GRID_POINTS).expect("valid default")
    }

    pub fn point(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn approx_eq(&self, other: &Grid) -> bool {
        self.n == other.n
            && (self.x0 - other.x0).abs() < 1e-12
            && (self.dx - other.dx).abs() < 1e-12
    }
}

/// A probability distribution sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDistribution {
    x0: f64,
    dx: f64,
    weights: Vec<f64>,
}

impl GridDistribution {
    pub fn new(x0: f64, dx: f64, weights: Vec<f64>) -> Result<Self> {
        if dx <= 0.0 || !dx.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "grid spacing must be positive, got {dx}"
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidDistribution(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { x0, dx, weights })
    }

    /// Normalize raw nonnegative weights to total mass 1.
    pub fn from_unnormalized(x0: f64, dx: f64, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} cannot be normalized"
            )));
        }
        let scaled = weights.iter().map(|w| w / total).collect();
        Self::new(x0, dx, scaled)
    }

    /// A unit point mass on a single bin at `x`.
    pub fn point_mass(x: f64, dx: f64) -> Self {
        Self {
            x0: x,
            dx,
            weights: vec![1.0],
        }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    /// Reflection x -> -x as a periodic index reversal j -> (n - j) mod n.
    ///
    /// Requires a grid symmetric about 0 in the periodic convention
    /// (x0 = -(x0 + n dx)); the j = 0 bin maps to itself, so its mass must
    /// be negligible for the reflection to be meaningful.
    pub fn reflect(&self) -> Result<Self> {
        let n = self.weights.len();
        let wrap = 2.0 * self.x0 + n as f64 * self.dx;
        if wrap.abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "grid is not symmetric about 0 (offset {wrap:.3e}); cannot reflect"
            )));
        }
        let weights = (0..n).map(|j| self.weights[(n - j) % n]).collect();
        Ok(Self {
            x0: self.x0,
            dx: self.dx,
            weights,
        })
    }
}

/// k-th raw moment, accumulated in order of increasing |x| with compensated
/// summation to control cancellation for high orders.
pub fn moment(p: &GridDistribution, k: u32) -> f64 {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&i, &j| p.point(i).abs().total_cmp(&p.point(j).abs()));
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for idx in order {
        let term = p.weights[idx] * p.point(idx).powi(k as i32);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Mean of a grid distribution.
pub fn mean(p: &GridDistribution) -> f64 {
    moment(p, 1)
}

/// Discrete convolution of two grid distributions with equal spacing; the
/// output grid spans the sum of the supports and is renormalized.
pub fn convolve(mu: &GridDistribution, p: &GridDistribution) -> Result<GridDistribution> {
    if (mu.dx - p.dx).abs() > 1e-12 {
        return Err(Error::SpacingMismatch(mu.dx, p.dx));
    }
    let n_out = mu.len() + p.len() - 1;
    let mut weights = vec![0.0f64; n_out];
    for (i, wi) in mu.weights.iter().enumerate() {
        if *wi == 0.0 {
            continue;
        }
        for (j, wj) in p.weights.iter().enumerate() {
            weights[i + j] += wi * wj;
        }
    }
    GridDistribution::from_unnormalized(mu.x0 + p.x0, p.dx, weights)
}

/// A raw moment sequence m[0..=K] with m[0] = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    values: Vec<f64>,
}

impl MomentSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidMomentSequence("empty sequence".into()));
        }
        if (values[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMomentSequence(format!(
                "m[0] = {} differs from 1",
                values[0]
            )));
        }
        Ok(Self { values })
    }

    /// Moments of a grid distribution up to order `k_max`.
    pub fn of_distribution(p: &GridDistribution, k_max: usize) -> Self {
        let values = (0..=k_max).map(|k| moment(p, k as u32)).collect();
        Self { values }
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn binomials(k_max: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut row = vec![1.0; k + 1];
        for n in 1..k {
            row[n] = rows[k - 1][n - 1] + rows[k - 1][n];
        }
        rows.push(row);
    }
    rows
}

fn require_order(seq: &MomentSequence, needed: usize) -> Result<()> {
    if seq.max_order() < needed {
        return Err(Error::InsufficientOrder {
            needed,
            have: seq.max_order(),
        });
    }
    Ok(())
}

/// Moments of the convolution mu * p via the binomial formula
/// c[k] = sum_n C(k, n) mu[k - n] p[n].
pub fn forward_moments(
    mu: &MomentSequence,
    p: &MomentSequence,
    k_max: usize,
) -> Result<MomentSequence> {
    require_order(mu, k_max)?;
    require_order(p, k_max)?;
    let binom = binomials(k_max);
    let values = (0..=k_max)
        .map(|k| {
            (0..=k)
                .map(|n| binom[k][n] * mu.get(k - n) * p.get(n))
                .sum()
        })
        .collect();
    MomentSequence::new(values)
}

/// Invert [`forward_moments`]: recover the sharp moments from the convolved
/// ones by the recursion p[k] = c[k] - sum_{n<k} C(k, n) mu[k - n] p[n].
pub fn reconstruct_moments(
    convolved: &MomentSequence,
    mu: &MomentSequence,
    k_max: usize,
) -> Result<MomentSequence> {
    require_order(convolved, k_max)?;
    require_order(mu, k_max)?;
    let binom = binomials(k_max);
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(convolved.get(0));
    for (k, row) in binom.iter().enumerate().skip(1) {
        let correction: f64 = (0..k).map(|n| row[n] * mu.get(k - n) * values[n]).sum();
        values.push(convolved.get(k) - correction);
    }
    MomentSequence::new(values)
}

/// Outcome of the exponential-boundedness check |m[k]| <= C R^k k!.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub passed: bool,
    pub first_violation: Option<usize>,
}

/// Check |m[k]| <= C R^k k! for all k up to the sequence order; this is the
/// operational condition under which moments determine the distribution.
pub fn growth_check(m: &MomentSequence, c: f64, r: f64) -> GrowthCheck {
    assert!(c > 0.0 && r > 0.0, "growth bounds must be positive");
    let mut r_pow = 1.0f64;
    let mut factorial = 1.0f64;
    for k in 0..=m.max_order() {
        if k > 0 {
            r_pow *= r;
            factorial *= k as f64;
        }
        if m.get(k).abs() > c * r_pow * factorial {
            return GrowthCheck {
                passed: false,
                first_violation: Some(k),
            };
        }
    }
    GrowthCheck {
        passed: true,
        first_violation: None,
    }
}

/// A normalized wave function sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    x0: f64,
    dx: f64,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(x0: f64, dx: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        if dx <= 0.0 || !dx.is_finite() || amplitudes.is_empty() {
            return Err(Error::InvalidDistribution(
                "wave function needs a nonempty grid with positive spacing".into(),
            ));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
        if (norm_sq - 1.0).abs() > 1e-10 {
            return Err(Error::Unnormalized((norm_sq - 1.0).abs()));
        }
        Ok(Self { x0, dx, amplitudes })
    }

    /// Sample a closure on the grid and normalize exactly.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amplitudes: Vec<Complex64> = (0..grid.n).map(|j| f(grid.point(j))).collect();
        Self::normalized(grid.x0, grid.dx, amplitudes)
    }

    fn normalized(x0: f64, dx: f64, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx;
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::InvalidDistribution(
                "cannot normalize zero or non-finite amplitudes".into(),
            ));
        }
        let scale = norm_sq.sqrt().recip();
        for a in &mut amplitudes {
            *a *= scale;
        }
        Ok(Self { x0, dx, amplitudes })
    }

    pub fn grid(&self) -> Grid {
        Grid {
            x0: self.x0,
            dx: self.dx,
            n: self.amplitudes.len(),
        }
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Grid inner product <self|other> = sum conj(a) b dx.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        if !self.grid().approx_eq(&other.grid()) {
            return Err(Error::SpacingMismatch(self.dx, other.dx));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.dx)
    }
}

/// Position distribution: weights |psi(x_j)|^2 dx.
pub fn position_distribution(psi: &WaveFunction) -> GridDistribution {
    let weights: Vec<f64> = psi
        .amplitudes
        .iter()
        .map(|a| a.norm_sqr() * psi.dx)
        .collect();
    GridDistribution::from_unnormalized(psi.x0, psi.dx, weights)
        .expect("normalized wave function yields a distribution")
}

/// Momentum distribution |psi_hat(p_j)|^2 dp through the unitary DFT, with
/// bins reordered to an ascending momentum grid of spacing 2 pi / (n dx).
pub fn momentum_distribution(psi: &WaveFunction) -> GridDistribution {
    let n = psi.len();
    let mut buf: Vec<Complex64> = psi.amplitudes.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dp = std::f64::consts::TAU / (n as f64 * psi.dx);
    let half = (n / 2) as i64;
    // |psi_hat(p_k)|^2 dp with psi_hat = dx (2 pi)^{-1/2} DFT (the phase from
    // x0 has unit modulus and drops out of the density)
    let scale = psi.dx * psi.dx / std::f64::consts::TAU * dp;
    let mut weights = vec![0.0f64; n];
    for (k, z) in buf.iter().enumerate() {
        let k_signed = if k as i64 <= (n as i64 - 1) / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        };
        weights[(k_signed + half) as usize] = z.norm_sqr() * scale;
    }
    GridDistribution::from_unnormalized(-(half as f64) * dp, dp, weights)
        .expect("Parseval keeps the momentum density normalizable")
}

/// n-th normalized Hermite function sampled on the grid, built by the stable
/// three-term recurrence and renormalized on the grid.
pub fn hermite_state(n: usize, grid: &Grid) -> Result<WaveFunction> {
    if n > 20 {
        return Err(Error::HermiteOrderTooLarge(n));
    }
    let points: Vec<f64> = (0..grid.n).map(|j| grid.point(j)).collect();
    let norm0 = std::f64::consts::PI.powf(-0.25);
    let mut prev: Vec<f64> = points
        .iter()
        .map(|&x| norm0 * (-0.5 * x * x).exp())
        .collect();
    if n == 0 {
        return finish_hermite(grid, prev);
    }
    let mut curr: Vec<f64> = points
        .iter()
        .zip(&prev)
        .map(|(&x, &h0)| 2f64.sqrt() * x * h0)
        .collect();
    for m in 2..=n {
        let a = (2.0 / m as f64).sqrt();
        let b = ((m as f64 - 1.0) / m as f64).sqrt();
        let next: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(j, &x)| a * x * curr[j] - b * prev[j])
            .collect();
        prev = curr;
        curr = next;
    }
    finish_hermite(grid, curr)
}

fn finish_hermite(grid: &Grid, samples: Vec<f64>) -> Result<WaveFunction> {
    let norm_sq: f64 = samples.iter().map(|h| h * h).sum::<f64>() * grid.dx;
    let deficit = (norm_sq - 1.0).abs();
    if deficit > 1e-8 {
        return Err(Error::GridTooSmall(deficit));
    }
    let amplitudes = samples
        .into_iter()
        .map(|h| Complex64::new(h, 0.0))
        .collect();
    WaveFunction::normalized(grid.x0, grid.dx, amplitudes)
}

/// Gaussian wave packet exp(-(x - center)^2 / (2 width^2)) exp(i momentum x),
/// sampled and normalized; errors when the grid truncates more than 1e-8 of
/// its mass.
pub fn gaussian_state(grid: &Grid, center: f64, width: f64, momentum: f64) -> Result<WaveFunction> {
    if width <= 0.0 || !width.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "gaussian width must be positive, got {width}"
        )));
    }
    let norm = (std::f64::consts::PI * width * width).powf(-0.25);
    let samples: Vec<Complex64> = (0..grid.n)
        .map(|j| {
            let x = grid.point(j);
            let envelope = norm * (-(x - center) * (x - center) / (2.0 * width * width)).exp();
            Complex64::from_polar(envelope, momentum * x)
        })
        .collect();
    let norm_sq: f64 = samples.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dx;
    if (norm_sq - 1.0).abs() > 1e-8 {
        return Err(Error::GridTooSmall((norm_sq - 1.0).abs()));
    }
    WaveFunction::normalized(grid.x0, grid.dx, samples)
}

/// Gaussian smearing kernel of standard deviation `sigma` on its own
/// symmetric grid with spacing `dx`; sigma = 0 degenerates to a point mass.
pub fn gaussian_kernel(dx: f64, sigma: f64) -> Result<GridDistribution> {
    if sigma < 0.0 || dx <= 0.0 || !dx.is_finite() || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "kernel needs dx > 0 and sigma >= 0, got dx = {dx}, sigma = {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(GridDistribution::point_mass(0.0, dx));
    }
    let half_bins = (8.0 * sigma / dx).ceil() as usize;
    let weights: Vec<f64> = (0..=2 * half_bins)
        .map(|j| {
            let x = (j as f64 - half_bins as f64) * dx;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    GridDistribution::from_unnormalized(-(half_bins as f64) * dx, dx, weights)
}

// JSON encodings:
//   GridDistribution: {"x0": ..., "dx": ..., "weights": [...]}
//   WaveFunction: {"x0": ..., "dx": ..., "re": [...], "im": [...]}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    x0: f64,
    dx: f64,
    weights: Vec<f64>,
}

impl Serialize for GridDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionJson {
            x0: self.x0,
            dx: self.dx,
            weights: self.weights.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GridDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = DistributionJson::deserialize(deserializer)?;
        GridDistribution::new(json.x0, json.dx, json.weights).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct WaveFunctionJson {
    x0: f64,
    dx: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for WaveFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        WaveFunctionJson {
            x0: self.x0,
            dx: self.dx,
            re: self.amplitudes.iter().map(|a| a.re).collect(),
            im: self.amplitudes.iter().map(|a| a.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WaveFunction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = WaveFunctionJson::deserialize(deserializer)?;
        if json.re.len() != json.im.len() {
            return Err(D::Error::custom("re/im length mismatch"));
        }
        let amplitudes = json
            .re
            .iter()
            .zip(&json.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        WaveFunction::new(json.x0, json.dx, amplitudes).map_err(D::Error::custom)
    }
}

//! Cartesian marginal densities of a covariant phase-space observable from
//! its generating operator, their variances, and the joint-measurability
//! uncertainty-product check.
//!
//! Only the marginals are materialized: the generating operator T with
//! spectral data {(t_i, eta_i)} determines the position smearing density
//! f(q) = sum_i t_i |eta_i(-q)|^2 and the momentum smearing density
//! g(p) = sum_i t_i |eta_hat_i(-p)|^2, which is all the indirect-measurement
//! pipeline consumes.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::moments::{self, GridDistribution, WaveFunction};
use crate::{Error, Result};

/// Uncertainty product threshold hbar^2 / 4 in hbar = 1 units, attained by
/// Gaussian generators.
pub const UNCERTAINTY_BOUND: f64 = 0.25;
pub const UNCERTAINTY_SLACK: f64 = 1e-9;

/// Spectral data of a trace-one positive generating operator: weights t_i
/// summing to 1 and normalized component states eta_i on a common grid.
#[derive(Debug, Clone)]
pub struct GeneratingOperator {
    weights: Vec<f64>,
    components: Vec<WaveFunction>,
}

impl GeneratingOperator {
    pub fn new(weights: Vec<f64>, components: Vec<WaveFunction>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::InvalidGenerator(format!(
                "{} weights vs {} components",
                weights.len(),
                components.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidGenerator(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGenerator(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let grid = components[0].grid();
        if components.iter().any(|c| !c.grid().approx_eq(&grid)) {
            return Err(Error::InvalidGenerator(
                "components live on different grids".into(),
            ));
        }
        Ok(Self {
            weights,
            components,
        })
    }

    /// Rank-one generator from a single state.
    pub fn pure(component: WaveFunction) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![component],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[WaveFunction] {
        &self.components
    }
}

/// The Fourier-related pair of smearing densities of the phase-space
/// marginals.
#[derive(Debug, Clone)]
pub struct MarginalDensities {
    /// Position smearing density f(q).
    pub position_density: GridDistribution,
    /// Momentum smearing density g(p).
    pub momentum_density: GridDistribution,
}

/// Build both marginal smearing densities from the generating operator:
/// reflected position and momentum densities of the components, mixed with
/// the spectral weights.
pub fn marginal_densities(generator: &GeneratingOperator) -> Result<MarginalDensities> {
    let position = mix(generator, |c| moments::position_distribution(c).reflect())?;
    let momentum = mix(generator, |c| moments::momentum_distribution(c).reflect())?;
    Ok(MarginalDensities {
        position_density: position,
        momentum_density: momentum,
    })
}

fn mix(
    generator: &GeneratingOperator,
    density: impl Fn(&WaveFunction) -> Result<GridDistribution>,
) -> Result<GridDistribution> {
    let mut acc: Option<(f64, f64, Vec<f64>)> = None;
    for (t, component) in generator.weights.iter().zip(&generator.components) {
        let d = density(component)?;
        match &mut acc {
            None => {
                let weights = d.weights().iter().map(|w| t * w).collect();
                acc = Some((d.x0(), d.dx(), weights));
            }
            Some((_, _, weights)) => {
                for (w, dw) in weights.iter_mut().zip(d.weights()) {
                    *w += t * dw;
                }
            }
        }
    }
    let (x0, dx, weights) = acc.expect("generator has at least one component");
    GridDistribution::from_unnormalized(x0, dx, weights)
}

/// Variance m[2] - m[1]^2 of a grid distribution.
pub fn variance(p: &GridDistribution) -> f64 {
    let m1 = moments::moment(p, 1);
    moments::moment(p, 2) - m1 * m1
}

/// Outcome of the uncertainty-product check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyCheck {
    pub position_variance: f64,
    pub momentum_variance: f64,
    pub product: f64,
    pub satisfied: bool,
}

/// Var(f) Var(g) >= 1/4 is necessary for the marginals to be jointly
/// measurable; Gaussian generators attain equality.
pub fn uncertainty_check(md: &MarginalDensities) -> UncertaintyCheck {
    let position_variance = variance(&md.position_density);
    let momentum_variance = variance(&md.momentum_density);
    let product = position_variance * momentum_variance;
    UncertaintyCheck {
        position_variance,
        momentum_variance,
        product,
        satisfied: product >= UNCERTAINTY_BOUND - UNCERTAINTY_SLACK,
    }
}

// Generator JSON: {"weights": [...], "components": [wavefunction-json, ...]}

#[derive(Serialize, Deserialize)]
struct GeneratorJson {
    weights: Vec<f64>,
    components: Vec<WaveFunction>,
}

impl Serialize for GeneratingOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GeneratorJson {
            weights: self.weights.clone(),
            components: self.components.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GeneratingOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = GeneratorJson::deserialize(deserializer)?;
        GeneratingOperator::new(json.weights, json.components).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{gaussian_state, hermite_state, momentum_distribution, Grid};
    use num_complex::Complex64;
    use rand::Rng;

    #[test]
    fn ground_gaussian_marginals() {
        let grid = Grid::default_grid();
        let t = GeneratingOperator::pure(hermite_state(0, &grid).unwrap());
        let md = marginal_densities(&t).unwrap();
        assert!((variance(&md.position_density) - 0.5).abs() < 1e-6);
        assert!((variance(&md.momentum_density) - 0.5).abs() < 1e-6);
        let check = uncertainty_check(&md);
        assert!(check.satisfied);
        assert!((check.product - 0.25).abs() < 1e-6);
    }

    #[test]
    fn squeezed_gaussian_marginals() {
        let grid = Grid::default_grid();
        let t = GeneratingOperator::pure(gaussian_state(&grid, 0.0, 2.0, 0.0).unwrap());
        let md = marginal_densities(&t).unwrap();
        assert!((variance(&md.position_density) - 2.0).abs() < 1e-6);
        assert!((variance(&md.momentum_density) - 0.125).abs() < 1e-6);
        let check = uncertainty_check(&md);
        assert!((check.product - 0.25).abs() < 1e-6);
        assert!(check.satisfied);
    }

    #[test]
    fn hermite_generator_marginals() {
        let grid = Grid::default_grid();
        let t = GeneratingOperator::pure(hermite_state(1, &grid).unwrap());
        let md = marginal_densities(&t).unwrap();
        assert!((variance(&md.position_density) - 1.5).abs() < 1e-6);
        assert!((variance(&md.momentum_density) - 1.5).abs() < 1e-6);
        let check = uncertainty_check(&md);
        assert!((check.product - 2.25).abs() < 1e-5);
    }

    #[test]
    fn variance_basics() {
        let point = GridDistribution::point_mass(3.0, 0.1);
        assert_eq!(variance(&point), 0.0);

        let grid = Grid::default_grid();
        let centered = GeneratingOperator::pure(gaussian_state(&grid, 0.0, 1.0, 0.0).unwrap());
        let shifted = GeneratingOperator::pure(gaussian_state(&grid, 2.0, 1.0, 0.0).unwrap());
        let v0 = variance(&marginal_densities(&centered).unwrap().position_density);
        let v2 = variance(&marginal_densities(&shifted).unwrap().position_density);
        assert!((v0 - v2).abs() < 1e-8);
        assert!((v0 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn uncertainty_holds_for_random_gaussian_mixtures() {
        let grid = Grid::default_grid();
        let mut rng = crate::sampling::rng(61);
        for _ in 0..50 {
            let parts = rng.gen_range(1..4);
            let raw: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let correction: f64 = 1.0 - weights.iter().sum::<f64>();
            weights[0] += correction;
            let components: Vec<WaveFunction> = (0..parts)
                .map(|_| {
                    gaussian_state(
                        &grid,
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(0.5..2.0),
                        rng.gen_range(-2.0..2.0),
                    )
                    .unwrap()
                })
                .collect();
            let t = GeneratingOperator::new(weights, components).unwrap();
            let check = uncertainty_check(&marginal_densities(&t).unwrap());
            assert!(
                check.product >= UNCERTAINTY_BOUND - UNCERTAINTY_SLACK,
                "product {}",
                check.product
            );
        }
    }

    #[test]
    fn momentum_density_matches_direct_transform() {
        // independent O(N^2) discrete transform as the oracle for the FFT path
        let grid = Grid::symmetric(12.0, 512).unwrap();
        let psi = gaussian_state(&grid, 0.7, 1.3, -0.4).unwrap();
        let fast = momentum_distribution(&psi);
        let n = psi.len();
        let dp = std::f64::consts::TAU / (n as f64 * psi.dx());
        let half = (n / 2) as i64;
        for j in (0..n).step_by(17) {
            let p = (j as i64 - half) as f64 * dp;
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, a) in psi.amplitudes().iter().enumerate() {
                let x = psi.x0() + k as f64 * psi.dx();
                acc += a * Complex64::from_polar(1.0, -p * x);
            }
            let amp = acc * psi.dx() / (std::f64::consts::TAU).sqrt();
            let expected = amp.norm_sqr() * dp;
            assert!(
                (fast.weights()[j] - expected).abs() < 1e-8,
                "bin {j}: {} vs {expected}",
                fast.weights()[j]
            );
        }

        // and the mixture marginal agrees bin-wise with remixing by hand
        let t = GeneratingOperator::new(
            vec![0.25, 0.75],
            vec![
                gaussian_state(&grid, 0.0, 1.0, 0.5).unwrap(),
                gaussian_state(&grid, -1.0, 0.8, 0.0).unwrap(),
            ],
        )
        .unwrap();
        let md = marginal_densities(&t).unwrap();
        let g0 = momentum_distribution(&t.components()[0]).reflect().unwrap();
        let g1 = momentum_distribution(&t.components()[1]).reflect().unwrap();
        for j in 0..n {
            let expected = 0.25 * g0.weights()[j] + 0.75 * g1.weights()[j];
            assert!((md.momentum_density.weights()[j] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn law_of_total_variance() {
        let grid = Grid::default_grid();
        let mut rng = crate::sampling::rng(67);
        for _ in 0..20 {
            let w0: f64 = rng.gen_range(0.2..0.8);
            let weights = vec![w0, 1.0 - w0];
            let centers = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let sigmas = [rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5)];
            let components: Vec<WaveFunction> = (0..2)
                .map(|i| gaussian_state(&grid, centers[i], sigmas[i], 0.0).unwrap())
                .collect();
            let dists: Vec<GridDistribution> = components
                .iter()
                .map(|c| moments::position_distribution(c).reflect().unwrap())
                .collect();
            let t = GeneratingOperator::new(weights.clone(), components).unwrap();
            let md = marginal_densities(&t).unwrap();
            let mixture_var = variance(&md.position_density);

            let means: Vec<f64> = dists.iter().map(|d| moments::moment(d, 1)).collect();
            let vars: Vec<f64> = dists.iter().map(variance).collect();
            let mean_of_means: f64 = weights.iter().zip(&means).map(|(w, m)| w * m).sum();
            let expected: f64 = weights
                .iter()
                .zip(vars.iter().zip(&means))
                .map(|(w, (v, m))| w * (v + (m - mean_of_means) * (m - mean_of_means)))
                .sum();
            assert!((mixture_var - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn generator_validation() {
        let grid = Grid::default_grid();
        let psi = hermite_state(0, &grid).unwrap();
        assert!(GeneratingOperator::new(vec![0.5, 0.5], vec![psi.clone()]).is_err());
        assert!(GeneratingOperator::new(vec![0.7, 0.7], vec![psi.clone(), psi.clone()]).is_err());
        let other_grid = Grid::symmetric(10.0, 512).unwrap();
        let other = hermite_state(0, &other_grid).unwrap();
        assert!(GeneratingOperator::new(vec![0.5, 0.5], vec![psi, other]).is_err());
    }
}

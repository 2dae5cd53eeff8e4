//! Concrete spin-1/2 constructions: the four-outcome joint observable for
//! smeared sigma_1/sigma_2, sharp reconstruction from its marginals, and the
//! continuous sphere observable with hemisphere marginals via quadrature.

use serde::Serialize;

use crate::linalg::{vec3, Effect, QubitBloch};
use crate::povm::{self, DiscretePOVM, JointPOVM, StochasticMatrix};
use crate::{Error, Result};

/// Default product-rule orders: 64 nodes in cos(theta), 128 in phi.
pub const DEFAULT_THETA_ORDER: usize = 64;
pub const DEFAULT_PHI_ORDER: usize = 128;

/// A unit direction on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Direction([f64; 3]);

impl Direction {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = vec3::norm(&v);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnitVector(n));
        }
        Ok(Self(v))
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let n = vec3::norm(&v);
        if n < 1e-12 {
            return Err(Error::NotUnitVector(n));
        }
        Ok(Self(vec3::scale(&v, 1.0 / n)))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        vec3::dot(&self.0, &other.0)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending; exact symmetry is
/// enforced by mirroring the computed half.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // i counts from the node nearest +1 downward
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0f64;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// A product quadrature on the unit sphere with total weight 4 pi.
///
/// cos(theta) nodes come from composite Gauss-Legendre rules on [-1, 0] and
/// [0, 1], so the equatorial hemisphere boundary coincides with an interval
/// split and pole-aligned hemisphere integrals are exact; phi is sampled
/// uniformly (the trapezoid rule on the periodic circle).
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    nodes: Vec<(Direction, f64)>,
    theta_order: usize,
    phi_order: usize,
}

impl SphereQuadrature {
    pub fn product_rule(theta_order: usize, phi_order: usize) -> Result<Self> {
        if theta_order < 2 || !theta_order.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "theta order must be even and >= 2, got {theta_order}"
            )));
        }
        if phi_order < 1 {
            return Err(Error::InvalidConfig("phi order must be >= 1".into()));
        }
        let half = theta_order / 2;
        let (t_nodes, t_weights) = gauss_legendre(half);
        let mut cos_nodes = Vec::with_capacity(theta_order);
        for (&t, &w) in t_nodes.iter().zip(&t_weights) {
            cos_nodes.push((0.5 * (t - 1.0), 0.5 * w)); // mapped to [-1, 0]
        }
        for (&t, &w) in t_nodes.iter().zip(&t_weights) {
            cos_nodes.push((0.5 * (t + 1.0), 0.5 * w)); // mapped to [0, 1]
        }
        let dphi = std::f64::consts::TAU / phi_order as f64;
        let mut nodes = Vec::with_capacity(theta_order * phi_order);
        for (c, wc) in cos_nodes {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..phi_order {
                let phi = dphi * j as f64;
                let dir = Direction([s * phi.cos(), s * phi.sin(), c]);
                nodes.push((dir, wc * dphi));
            }
        }
        Ok(Self {
            nodes,
            theta_order,
            phi_order,
        })
    }

    pub fn default_rule() -> Self {
        Self::product_rule(DEFAULT_THETA_ORDER, DEFAULT_PHI_ORDER).expect("valid defaults")
    }

    pub fn nodes(&self) -> &[(Direction, f64)] {
        &self.nodes
    }

    pub fn theta_order(&self) -> usize {
        self.theta_order
    }

    pub fn phi_order(&self) -> usize {
        self.phi_order
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }

    /// The same rule with every node rotated; weights are unchanged. Used to
    /// check covariance of quadrature constructions.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Result<Self> {
        let nodes = self
            .nodes
            .iter()
            .map(|(dir, w)| Ok((Direction::normalized(vec3::rotate(r, &dir.0))?, *w)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nodes,
            theta_order: self.theta_order,
            phi_order: self.phi_order,
        })
    }
}

/// The four-outcome joint observable G_jk = (I + n_jk . sigma)/4 with
/// n_{+,+-} = (e1 +- e2)/sqrt(2) and n_{-,+-} = (-e1 +- e2)/sqrt(2); its
/// marginals are the smeared sigma_1 and sigma_2 observables.
pub fn build_spin_joint() -> JointPOVM {
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    let effect = |sx: f64, sy: f64| {
        let n = [sx * inv_sqrt2, sy * inv_sqrt2, 0.0];
        QubitBloch::new(0.25, vec3::scale(&n, 0.25))
            .to_effect()
            .expect("valid joint effect")
    };
    let effects = vec![
        vec![effect(1.0, 1.0), effect(1.0, -1.0)],
        vec![effect(-1.0, 1.0), effect(-1.0, -1.0)],
    ];
    JointPOVM::new(
        vec!["+".into(), "-".into()],
        vec!["+".into(), "-".into()],
        effects,
    )
    .expect("spin joint is a valid POVM")
}

/// Marginals of the spin joint observable (delegates to the generic POVM
/// marginalization).
pub fn spin_marginals(joint: &JointPOVM) -> Result<(DiscretePOVM, DiscretePOVM)> {
    povm::marginals(joint)
}

/// Recover the sharp projections behind a symmetrically smeared binary qubit
/// observable E_+- = (1 +- c)/2 P_+ + (1 -+ c)/2 P_-.
///
/// The smearing strength c is read off the Bloch form of E_+ (c = 2|a|), the
/// 2x2 smearing matrix is inverted, and the combination is delegated to the
/// general unsmearing; outputs are the spectral projections.
pub fn reconstruct_sharp(e: &DiscretePOVM) -> Result<DiscretePOVM> {
    if e.outcome_count() != 2 {
        return Err(Error::NonBinaryPovm(e.outcome_count()));
    }
    if e.dim() != 2 {
        return Err(Error::DimensionMismatch(e.dim(), 2));
    }
    let plus = QubitBloch::from_matrix(e.effect(0).matrix())?;
    if (plus.a0 - 0.5).abs() > 1e-9 {
        return Err(Error::InvalidPovm(format!(
            "effect is biased (a0 = {}); the symmetric smearing form needs a0 = 1/2",
            plus.a0
        )));
    }
    let c = 2.0 * plus.bloch_norm();
    if c < 1e-9 {
        return Err(Error::SingularMatrix(c));
    }
    let lambda = StochasticMatrix::binary_symmetric(c)?;
    let unsmeared = povm::unsmear(e, &lambda)?;
    DiscretePOVM::from_matrices(unsmeared.labels, unsmeared.operators)
}

/// Integrate (1/2pi) * (I + n.sigma)/2 over the region selected by the
/// indicator, evaluated at quadrature nodes.
pub fn sphere_effect(
    region: impl Fn(&Direction) -> bool,
    quad: &SphereQuadrature,
) -> Result<Effect> {
    if quad.nodes.is_empty() {
        return Err(Error::EmptyQuadrature);
    }
    let mut a0 = 0.0f64;
    let mut a = [0.0f64; 3];
    for (dir, w) in &quad.nodes {
        if region(dir) {
            a0 += w * 0.5;
            a = vec3::add(&a, &vec3::scale(&dir.0, 0.5 * w));
        }
    }
    let scale = 0.5 / std::f64::consts::PI;
    let bloch = QubitBloch::new(a0 * scale, vec3::scale(&a, scale));
    // each node contributes a PSD term, so only round-off can undershoot
    Effect::new(bloch.to_matrix())
}

/// Binary observable from the two hemispheres with poles along n; the minus
/// effect is the exact complement so that M+ + M- = I by construction.
pub fn hemisphere_marginal(n: &Direction, quad: &SphereQuadrature) -> Result<DiscretePOVM> {
    let plus = sphere_effect(|dir| dir.dot(n) > 0.0, quad)?;
    let minus = plus.complement();
    DiscretePOVM::new(vec!["+".into(), "-".into()], vec![plus, minus])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coexistence::coexist_unbiased;
    use crate::linalg::HermitianMatrix;
    use crate::povm::born;
    use crate::sampling;

    #[test]
    fn spin_joint_effects() {
        let g = build_spin_joint();
        let mut bloch_sum = [0.0f64; 3];
        for r in 0..2 {
            for c in 0..2 {
                let m = g.effect(r, c).matrix();
                assert!((m.trace() - 0.5).abs() < 1e-15);
                let ev = m.eigenvalues();
                assert!(ev[0].abs() < 1e-15);
                assert!((ev[1] - 0.5).abs() < 1e-15);
                let b = QubitBloch::from_matrix(m).unwrap();
                bloch_sum = vec3::add(&bloch_sum, &b.a);
            }
        }
        // sum of the four direction vectors cancels
        assert!(vec3::norm(&bloch_sum) < 1e-15);
        let flat = g.flatten().unwrap();
        assert_eq!(flat.outcome_count(), 4);
    }

    #[test]
    fn spin_marginal_blochs() {
        let g = build_spin_joint();
        let (e1, e2) = spin_marginals(&g).unwrap();
        let b1 = QubitBloch::from_matrix(e1.effect(0).matrix()).unwrap();
        assert!((b1.a0 - 0.5).abs() < 1e-15);
        assert!((b1.a[0] - 2f64.sqrt() / 4.0).abs() < 1e-15);
        assert!(b1.a[1].abs() < 1e-15 && b1.a[2].abs() < 1e-15);
        let b2 = QubitBloch::from_matrix(e2.effect(0).matrix()).unwrap();
        assert!((b2.a[1] - 2f64.sqrt() / 4.0).abs() < 1e-15);

        // unbiased marginals: bias vanishes
        let (beta, x) = crate::coexistence::bias(&b1).unwrap();
        assert!(beta.abs() < 1e-15 && x.abs() < 1e-15);

        // the pair saturates the unbiased coexistence inequality
        let report = coexist_unbiased(b1.a, b2.a).unwrap();
        assert!(report.coexistent);
        assert!(report.margin.abs() < 1e-12);
    }

    #[test]
    fn sharp_reconstruction_from_spin_marginals() {
        let g = build_spin_joint();
        let (e1, e2) = spin_marginals(&g).unwrap();
        for (e, axis) in [(e1, 1usize), (e2, 2usize)] {
            let sharp = reconstruct_sharp(&e).unwrap();
            let mut n = [0.0; 3];
            n[axis - 1] = 1.0;
            let expected_plus = QubitBloch::projector(n).to_matrix();
            assert!(sharp.effect(0).matrix().fro_dist(&expected_plus) < 1e-12);
            let expected_minus = QubitBloch::projector(vec3::scale(&n, -1.0)).to_matrix();
            assert!(sharp.effect(1).matrix().fro_dist(&expected_minus) < 1e-12);
        }
    }

    #[test]
    fn reconstruction_statistics_identity() {
        // the reconstruction coefficients act on probabilities exactly as on
        // effects: check born statistics on random states
        let g = build_spin_joint();
        let (e1, _) = spin_marginals(&g).unwrap();
        let sharp = reconstruct_sharp(&e1).unwrap();
        let c = 2f64.sqrt() / 2.0;
        let lambda = StochasticMatrix::binary_symmetric(c).unwrap();
        let mu = povm::unsmear(&e1, &lambda).unwrap().coefficients;
        let mut rng = sampling::rng(53);
        for _ in 0..50 {
            let rho = sampling::random_density(&mut rng, 2);
            let smeared_probs = born(&rho, &e1).unwrap();
            let sharp_probs = born(&rho, &sharp).unwrap();
            for k in 0..2 {
                let combined: f64 = (0..2).map(|j| mu[k][j] * smeared_probs[j]).sum();
                assert!((combined - sharp_probs[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruct_sharp_rejects_degenerate_input() {
        let half = Effect::new(HermitianMatrix::scaled_identity(2, 0.5)).unwrap();
        let trivial =
            DiscretePOVM::new(vec!["+".into(), "-".into()], vec![half.clone(), half]).unwrap();
        assert!(matches!(
            reconstruct_sharp(&trivial),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn quadrature_weight_and_symmetry() {
        let quad = SphereQuadrature::default_rule();
        assert!((quad.total_weight() - 4.0 * std::f64::consts::PI).abs() < 1e-8);
        // no node sits on the equator, so hemisphere indicators are unambiguous
        assert!(quad.nodes().iter().all(|(d, _)| d.components()[2] != 0.0));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (nodes, weights) = gauss_legendre(8);
        let integral: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * (x.powi(6) + 2.0 * x.powi(3)))
            .sum();
        // int_{-1}^{1} x^6 dx = 2/7; odd part integrates to zero
        assert!((integral - 2.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_effect_full_and_empty() {
        let quad = SphereQuadrature::default_rule();
        let full = sphere_effect(|_| true, &quad).unwrap();
        assert!(full.matrix().fro_dist(&HermitianMatrix::identity(2)) < 1e-8);
        let empty = sphere_effect(|_| false, &quad).unwrap();
        assert!(empty.matrix().fro_norm() < 1e-15);
    }

    #[test]
    fn upper_hemisphere_effect() {
        let quad = SphereQuadrature::default_rule();
        let upper = sphere_effect(|d| d.components()[2] > 0.0, &quad).unwrap();
        let expected = QubitBloch::new(0.5, [0.0, 0.0, 0.25]).to_matrix();
        assert!(upper.matrix().fro_dist(&expected) < 1e-8);
    }

    #[test]
    fn hemisphere_marginal_along_z() {
        let quad = SphereQuadrature::default_rule();
        let m = hemisphere_marginal(&Direction::new([0.0, 0.0, 1.0]).unwrap(), &quad).unwrap();
        let plus = QubitBloch::from_matrix(m.effect(0).matrix()).unwrap();
        assert!((plus.a0 - 0.5).abs() < 1e-8);
        assert!((plus.a[2] - 0.25).abs() < 1e-8);
        let minus = QubitBloch::from_matrix(m.effect(1).matrix()).unwrap();
        assert!((minus.a[2] + 0.25).abs() < 1e-8);

        // complement construction keeps completeness exact
        let sum = m.effect(0).matrix() + m.effect(1).matrix();
        assert!(sum.fro_dist(&HermitianMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn hemisphere_reconstruction_with_half_smearing() {
        let quad = SphereQuadrature::default_rule();
        let m = hemisphere_marginal(&Direction::new([0.0, 0.0, 1.0]).unwrap(), &quad).unwrap();
        let lambda = StochasticMatrix::binary_symmetric(0.5).unwrap();
        let un = povm::unsmear(&m, &lambda).unwrap();
        let expected = [[1.5, -0.5], [-0.5, 1.5]];
        for (row, want_row) in un.coefficients.iter().zip(&expected) {
            for (got, want) in row.iter().zip(want_row) {
                assert!((got - want).abs() < 1e-12);
            }
        }
        let sharp = reconstruct_sharp(&m).unwrap();
        assert!(
            sharp
                .effect(0)
                .matrix()
                .fro_dist(&QubitBloch::projector([0.0, 0.0, 1.0]).to_matrix())
                < 1e-6
        );
    }

    #[test]
    fn hemisphere_covariance_under_rotated_quadrature() {
        let quad = SphereQuadrature::default_rule();
        let base = Direction::new([0.0, 0.0, 1.0]).unwrap();
        let m_base = hemisphere_marginal(&base, &quad).unwrap();
        let bloch_base = QubitBloch::from_matrix(m_base.effect(0).matrix()).unwrap();
        let mut rng = sampling::rng(71);
        for _ in 0..20 {
            let r = sampling::random_rotation(&mut rng);
            let rotated_dir = Direction::normalized(vec3::rotate(&r, &base.components())).unwrap();
            let rotated_quad = quad.rotated(&r).unwrap();
            let m_rot = hemisphere_marginal(&rotated_dir, &rotated_quad).unwrap();
            let bloch_rot = QubitBloch::from_matrix(m_rot.effect(0).matrix()).unwrap();
            let expected = vec3::rotate(&r, &bloch_base.a);
            assert!((bloch_rot.a0 - bloch_base.a0).abs() < 1e-8);
            for (got, want) in bloch_rot.a.iter().zip(&expected) {
                assert!((got - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn direction_and_quadrature_validation() {
        assert!(Direction::new([0.0, 0.0, 2.0]).is_err());
        assert!(Direction::normalized([0.0, 0.0, 0.0]).is_err());
        let d = Direction::normalized([3.0, 0.0, 4.0]).unwrap();
        assert!((vec3::norm(&d.components()) - 1.0).abs() < 1e-15);
        assert!(SphereQuadrature::product_rule(15, 8).is_err());
        assert!(SphereQuadrature::product_rule(0, 8).is_err());
        assert!(SphereQuadrature::product_rule(4, 0).is_err());
    }

    #[test]
    fn reconstruct_sharp_rejects_biased_input() {
        let plus = QubitBloch::new(0.6, [0.0, 0.0, 0.2]).to_effect().unwrap();
        let povm = DiscretePOVM::new(
            vec!["+".into(), "-".into()],
            vec![plus.clone(), plus.complement()],
        )
        .unwrap();
        assert!(matches!(
            reconstruct_sharp(&povm),
            Err(Error::InvalidPovm(_))
        ));
    }

    #[test]
    fn hemisphere_quadrature_convergence() {
        // pole-aligned hemispheres sit on a composite interval boundary, so
        // the error is at the round-off floor and stays there as the order
        // doubles; assert err_next <= max(err_prev / 4, 1e-10)
        let n = Direction::new([0.0, 0.0, 1.0]).unwrap();
        let expected = QubitBloch::new(0.5, [0.0, 0.0, 0.25]).to_matrix();
        let mut prev: Option<f64> = None;
        for order in [4usize, 8, 16, 32, 64] {
            let quad = SphereQuadrature::product_rule(order, 2 * order).unwrap();
            let m = hemisphere_marginal(&n, &quad).unwrap();
            let err = m.effect(0).matrix().fro_dist(&expected);
            if let Some(p) = prev {
                assert!(err <= (p / 4.0).max(1e-10), "order {order}: {err} vs {p}");
            }
            assert!(err < 1e-10, "order {order} already at the floor: {err}");
            prev = Some(err);
        }
    }
}

//! Seeded random generators for reproducible experiments and self tests.
//!
//! Everything draws from a caller-supplied [`ChaCha8Rng`] so that runs with
//! the same seed are bit-identical across platforms.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::linalg::{vec3, HermitianMatrix, QubitBloch};
use crate::povm::DiscretePOVM;
use crate::DensityState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller, to avoid an extra distribution crate.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let v = [
        standard_normal(rng),
        standard_normal(rng),
        standard_normal(rng),
    ];
    let n = vec3::norm(&v);
    if n < 1e-12 {
        return [0.0, 0.0, 1.0];
    }
    vec3::scale(&v, 1.0 / n)
}

/// Random rotation matrix from a uniform quaternion.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let q = [
        standard_normal(rng),
        standard_normal(rng),
        standard_normal(rng),
        standard_normal(rng),
    ];
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> HermitianMatrix {
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        entries[i * dim + i] = Complex64::new(rng.gen_range(-scale..scale), 0.0);
        for j in (i + 1)..dim {
            let z = Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
            entries[i * dim + j] = z;
            entries[j * dim + i] = z.conj();
        }
    }
    HermitianMatrix::hermitized(dim, entries)
}

/// Random PSD matrix H^2 from a random Hermitian H.
pub fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    let h = random_hermitian(rng, dim, 1.0);
    h.jordan_product(&h).expect("same dimension")
}

pub fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityState {
    let psd = random_psd(rng, dim);
    let tr = psd.trace().max(1e-9);
    DensityState::new(psd.scale(1.0 / tr)).expect("normalized PSD")
}

/// Random qubit effect, biased toward sharp unbiased effects so that
/// coexistence experiments exercise both verdicts.
pub fn random_qubit_effect(rng: &mut ChaCha8Rng) -> QubitBloch {
    let (a0, fill): (f64, f64) = if rng.gen::<f64>() < 0.4 {
        (rng.gen_range(0.35..0.65), rng.gen_range(0.85..1.0))
    } else {
        (rng.gen_range(0.02..0.98), rng.gen())
    };
    let dir = random_unit_vector(rng);
    let radius = fill * a0.min(1.0 - a0);
    QubitBloch::new(a0, vec3::scale(&dir, radius))
}

/// Binary POVM {A, I - A} from a random qubit effect.
pub fn random_binary_qubit_povm(rng: &mut ChaCha8Rng) -> DiscretePOVM {
    let bloch = random_qubit_effect(rng);
    binary_povm_from_bloch(&bloch)
}

pub fn binary_povm_from_bloch(bloch: &QubitBloch) -> DiscretePOVM {
    let plus = bloch.to_effect().expect("valid effect");
    let minus = plus.complement();
    DiscretePOVM::new(vec!["+".into(), "-".into()], vec![plus, minus]).expect("binary POVM")
}

/// Sharp qubit POVM {P+, P-} along a random direction.
pub fn random_sharp_qubit_povm(rng: &mut ChaCha8Rng) -> DiscretePOVM {
    let n = random_unit_vector(rng);
    sharp_qubit_povm(n)
}

pub fn sharp_qubit_povm(n: [f64; 3]) -> DiscretePOVM {
    let plus = QubitBloch::projector(n).to_effect().expect("projection");
    let minus = plus.complement();
    DiscretePOVM::new(vec!["+".into(), "-".into()], vec![plus, minus]).expect("binary POVM")
}

/// Sharp POVM from the eigenbasis of a random Hermitian matrix: one rank-1
/// projector per outcome.
pub fn random_sharp_povm(rng: &mut ChaCha8Rng, dim: usize) -> DiscretePOVM {
    let h = random_hermitian(rng, dim, 1.0);
    let vectors = crate::linalg::eigenvectors(&h);
    let mut effects = Vec::with_capacity(dim);
    let mut labels = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = vectors[i * dim + k] * vectors[j * dim + k].conj();
            }
        }
        let proj = HermitianMatrix::hermitized(dim, entries);
        effects.push(crate::Effect::new(proj).expect("projector"));
        labels.push(k.to_string());
    }
    DiscretePOVM::new(labels, effects).expect("spectral POVM")
}

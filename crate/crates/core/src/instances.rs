//! Built-in problem instances and seeded random generators.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::family::{LogBarrier, QuadraticWell};
use crate::problem::CanonicalProblem;

/// Dual critical points of [`quadratic_log_example`], in `S_a⁺`, then the two
/// in `S_a⁻`.
pub const EXAMPLE_SIGMA: [f64; 3] = [-0.13696432, -0.54470504, -0.95209751];

/// Primal points recovered from [`EXAMPLE_SIGMA`].
pub const EXAMPLE_X: [[f64; 2]; 3] = [
    [1.58640312, 0.06886375],
    [-0.2901031, -0.5592211],
    [-0.13296148, -0.0552978],
];

/// Quadratic-log instance with `A = diag(1, 2)`, `B¹ = diag(5, 4)`,
/// `f = (0.5, 0.1)`, `d¹ = 1`.
pub fn quadratic_log_example() -> CanonicalProblem {
    CanonicalProblem::new(
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])),
        vec![DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 4.0]))],
        vec![DVector::zeros(2)],
        DVector::from_vec(vec![0.5, 0.1]),
        LogBarrier::new(vec![1.0]).expect("positive d"),
    )
    .expect("valid reference instance")
}

/// One-dimensional double well `Π(x) = ½α(½x² − λ)² − f x`.
pub fn double_well(alpha: f64, lambda: f64, f: f64) -> CanonicalProblem {
    CanonicalProblem::new(
        DMatrix::zeros(1, 1),
        vec![DMatrix::identity(1, 1)],
        vec![DVector::zeros(1)],
        DVector::from_vec(vec![f]),
        QuadraticWell::new(vec![alpha], vec![lambda]).expect("valid well"),
    )
    .expect("valid double well")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Log,
    QuadraticWell,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in `[-scale, scale]`.
pub fn random_vector(rng: &mut impl Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-scale..=scale)))
}

fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// `Q diag(spectrum) Qᵀ` with a random orthogonal `Q`.
pub fn random_symmetric_with_spectrum(rng: &mut impl Rng, spectrum: &[f64]) -> DMatrix<f64> {
    let q = random_orthogonal(rng, spectrum.len());
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(spectrum));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random instance of the requested family.
///
/// Log instances follow the quadratic-log pattern: `A ≻ 0`, `B^k ≻ 0`,
/// `b_k = 0`, so `Λ(x) ≥ 0` and the dual box `[-1/d, 0)` is exact.
/// Quadratic-well instances take an arbitrary symmetric `A`, `B^k ⪰ 0` and
/// small linear terms, with positive wells `λ_k`.
pub fn random_instance(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    kind: FamilyKind,
) -> CanonicalProblem {
    match kind {
        FamilyKind::Log => {
            let a_spec: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let a = random_symmetric_with_spectrum(rng, &a_spec);
            let b_mats = (0..m)
                .map(|_| {
                    let spec: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..6.0)).collect();
                    random_symmetric_with_spectrum(rng, &spec)
                })
                .collect();
            let b_vecs = vec![DVector::zeros(n); m];
            let f = random_vector(rng, n, 1.0);
            let d = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
            CanonicalProblem::new(a, b_mats, b_vecs, f, LogBarrier::new(d).expect("d > 0"))
                .expect("valid random log instance")
        }
        FamilyKind::QuadraticWell => {
            let a_spec: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = random_symmetric_with_spectrum(rng, &a_spec);
            let b_mats = (0..m)
                .map(|_| {
                    let spec: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
                    random_symmetric_with_spectrum(rng, &spec)
                })
                .collect();
            let b_vecs = (0..m).map(|_| random_vector(rng, n, 0.3)).collect();
            let f = random_vector(rng, n, 0.5);
            let alpha = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
            let lambda = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
            CanonicalProblem::new(
                a,
                b_mats,
                b_vecs,
                f,
                QuadraticWell::new(alpha, lambda).expect("alpha > 0"),
            )
            .expect("valid random quadratic-well instance")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = random_instance(&mut rng(9), 3, 2, FamilyKind::Log);
        let b = random_instance(&mut rng(9), 3, 2, FamilyKind::Log);
        assert_eq!(a, b);
    }

    #[test]
    fn spectrum_is_respected() {
        let m = random_symmetric_with_spectrum(&mut rng(1), &[1.0, -2.0, 3.0]);
        let eig = crate::linalg::SymEig::new(&m);
        assert!((eig.values[0] + 2.0).abs() < 1e-12);
        assert!((eig.values[2] - 3.0).abs() < 1e-12);
    }
}

//! Seeded random scenarios for the integration suites.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use weaktime::linalg::{hermitian_eig, Operator, State};
use weaktime::model::{validate_system, ModelSpec, SystemModel};

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> Operator {
    let b = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    Operator::from_matrix((&b + b.adjoint()) * C64::new(0.5, 0.0))
}

/// Random unitary as the eigenbasis of a random Hermitian matrix.
fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let h = random_hermitian(rng, dim);
    hermitian_eig(&h)
        .expect("random Hermitian decomposes")
        .basis()
        .matrix()
        .clone()
}

/// Splits the columns of a random unitary into `parts` orthogonal
/// projectors that sum to the identity.
fn random_projector_partition<R: Rng>(rng: &mut R, dim: usize, parts: usize) -> Vec<Operator> {
    assert!(parts <= dim);
    let u = random_unitary(rng, dim);
    let mut assignment: Vec<usize> = (0..dim)
        .map(|j| if j < parts { j } else { rng.gen_range(0..parts) })
        .collect();
    // shuffle so the guaranteed members are not always the lowest columns
    for j in (1..dim).rev() {
        let k = rng.gen_range(0..=j);
        assignment.swap(j, k);
    }
    (0..parts)
        .map(|part| {
            let mut acc = DMatrix::<C64>::zeros(dim, dim);
            for (j, &a) in assignment.iter().enumerate() {
                if a == part {
                    let col = u.column(j);
                    acc += col * col.adjoint();
                }
            }
            Operator::from_matrix(acc).hermitized()
        })
        .collect()
}

fn random_pure<R: Rng>(rng: &mut R, dim: usize) -> State {
    let mut v = DVector::from_fn(dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    State::pure(v.iter().copied().collect()).expect("normalized vector")
}

fn random_mixed<R: Rng>(rng: &mut R, dim: usize) -> State {
    let u = random_unitary(rng, dim);
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for (j, &w) in weights.iter().enumerate() {
        let col = u.column(j);
        rho += col * col.adjoint() * C64::new(w, 0.0);
    }
    State::density(Operator::from_matrix(rho).hermitized()).expect("convex mixture")
}

/// A validated random model with orthogonal complete observable projectors
/// and a complete final family. Roughly a quarter of the initial states are
/// mixed.
pub fn random_model<R: Rng>(rng: &mut R, max_dim: usize) -> SystemModel {
    let dim = rng.gen_range(2..=max_dim);
    let n_chi = rng.gen_range(2..=dim.min(4));
    let n_fin = rng.gen_range(2..=dim.min(3));
    let initial = if rng.gen_range(0..4) == 0 {
        random_mixed(rng, dim)
    } else {
        random_pure(rng, dim)
    };
    let spec = ModelSpec {
        hamiltonian: random_hermitian(rng, dim)
            .hermitized()
            .scaled(C64::new(rng.gen_range(0.5..2.0), 0.0))
            .hermitized(),
        initial,
        observable_values: (0..n_chi).map(|k| k as f64).collect(),
        observable_projectors: random_projector_partition(rng, dim, n_chi),
        final_labels: (0..n_fin).map(|f| format!("f{f}")).collect(),
        final_projectors: random_projector_partition(rng, dim, n_fin),
        finals_complete: true,
    };
    validate_system(spec).expect("random model is valid by construction")
}

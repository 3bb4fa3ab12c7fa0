//! Seeded random states and operators for tests, self-tests and sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Ket, Operator, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Entrywise complex Gaussian matrix.
pub fn random_operator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    Operator::from_fn(dim, |_, _| gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = random_operator(dim, rng);
    (&g + &g.dagger()).scale_real(0.5)
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    let ket = Ket::new((0..dim).map(|_| gaussian(rng)).collect()).expect("finite");
    ket.normalized().expect("nonzero with probability one")
}

/// Full-rank density matrix `G G^dagger / tr(G G^dagger)` with complex Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = random_operator(dim, rng);
    let rho = &g * &g.dagger();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

/// Haar-random unitary via Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = random_operator(dim, rng);
    let mut columns: Vec<Ket> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v = g.column(j);
        for q in &columns {
            let overlap = q.inner(&v);
            let amps: Vec<C64> = v
                .amplitudes()
                .iter()
                .zip(q.amplitudes())
                .map(|(a, b)| a - overlap * b)
                .collect();
            v = Ket::new(amps).expect("finite");
        }
        columns.push(v.normalized().expect("full rank with probability one"));
    }
    Operator::from_columns(&columns).expect("square")
}

/// `exp(i eps H)` for a random Hermitian `H` with unit Frobenius norm.
pub fn near_identity_unitary<R: Rng + ?Sized>(dim: usize, eps: f64, rng: &mut R) -> Operator {
    let h = random_hermitian(dim, rng);
    let h = h.scale_real(1.0 / h.frobenius_norm());
    let (values, vectors) = h.eigh();
    let phases: Vec<C64> = values.iter().map(|v| C64::from_polar(1.0, eps * v)).collect();
    &(&vectors * &Operator::diagonal(&phases)) * &vectors.dagger()
}

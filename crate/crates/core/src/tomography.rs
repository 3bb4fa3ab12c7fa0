//! Linear-inversion state tomography from outcome statistics.
//!
//! States are written in an orthonormal Hermitian operator basis
//! `E_0 = 1/sqrt(d)`, then symmetric, antisymmetric and diagonal generalized
//! Gell-Mann matrices, so `rho = sum_a x_a E_a` with real `x_a = tr(E_a rho)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hwsic::{hw_sic_from_fiducial, FiducialKet};
use crate::linalg::{Operator, C64, I, ONE, ZERO};
use crate::povm::{born_probabilities, is_ic, validate_pom, Pom};
use crate::random::{random_density, random_pure_state, seeded_rng};

/// Relative singular-value cutoff for rank and pseudoinverse.
pub const SVD_CUTOFF: f64 = 1e-12;

/// Generalized Gell-Mann basis, orthonormal under `tr(A^dagger B)`.
pub fn gell_mann_basis(d: usize) -> Vec<Operator> {
    let mut basis = Vec::with_capacity(d * d);
    basis.push(Operator::identity(d).scale_real(1.0 / (d as f64).sqrt()));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let mut s = Operator::zeros(d);
            s[(j, k)] = C64::new(h, 0.0);
            s[(k, j)] = C64::new(h, 0.0);
            basis.push(s);
            let mut a = Operator::zeros(d);
            a[(j, k)] = -I * h;
            a[(k, j)] = I * h;
            basis.push(a);
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let diag: Vec<C64> = (0..d)
            .map(|m| match m.cmp(&l) {
                std::cmp::Ordering::Less => ONE / norm,
                std::cmp::Ordering::Equal => C64::new(-(l as f64) / norm, 0.0),
                std::cmp::Ordering::Greater => ZERO,
            })
            .collect();
        basis.push(Operator::diagonal(&diag));
    }
    basis
}

/// Coordinates `tr(E_a rho)` of a Hermitian operator.
pub fn coordinates(rho: &Operator) -> Vec<f64> {
    gell_mann_basis(rho.dim())
        .iter()
        .map(|e| e.trace_product(rho).re)
        .collect()
}

/// Inverse of [`coordinates`].
pub fn from_coordinates(d: usize, x: &[f64]) -> Result<Operator> {
    if x.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: x.len(),
        });
    }
    let mut rho = Operator::zeros(d);
    for (e, c) in gell_mann_basis(d).iter().zip(x) {
        rho = &rho + &e.scale_real(*c);
    }
    Ok(rho)
}

/// Real matrix `M` with `M x = p`: row `i` holds `tr(P_i E_a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMatrix {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl MeasurementMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim * self.dim;
        DMatrix::from_fn(self.rows.len(), n, |i, a| self.rows[i][a])
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.to_matrix().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn rank(&self) -> usize {
        let s = self.singular_values();
        let largest = s.first().copied().unwrap_or(0.0);
        s.iter().filter(|&&v| v > SVD_CUTOFF * largest).count()
    }

    /// Ratio of extreme singular values over the operator space; infinite when rank deficient.
    pub fn condition_number(&self) -> f64 {
        let s = self.singular_values();
        let n = self.dim * self.dim;
        if s.len() < n || self.rank() < n {
            return f64::INFINITY;
        }
        s[0] / s[n - 1]
    }

    pub fn apply(&self, rho: &Operator) -> Vec<f64> {
        let x = coordinates(rho);
        self.rows
            .iter()
            .map(|row| row.iter().zip(&x).map(|(m, c)| m * c).sum())
            .collect()
    }
}

pub fn measurement_matrix(pom: &Pom) -> MeasurementMatrix {
    let basis = gell_mann_basis(pom.dim());
    let rows = pom
        .outcomes()
        .iter()
        .map(|p| basis.iter().map(|e| p.trace_product(e).re).collect())
        .collect();
    MeasurementMatrix {
        dim: pom.dim(),
        rows,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub reconstructed: Operator,
    /// Against the reference state, when one was supplied.
    pub trace_distance: Option<f64>,
    pub fidelity: Option<f64>,
    pub residual_norm: f64,
    pub psd_projected: bool,
}

/// Least-squares state estimate with `tr(rho) = 1` imposed exactly.
pub fn reconstruct(
    probabilities: &[f64],
    pom: &Pom,
    project_psd: bool,
    truth: Option<&Operator>,
) -> Result<TomographyReport> {
    let d = pom.dim();
    if probabilities.len() != pom.len() {
        return Err(Error::DimensionMismatch {
            expected: pom.len(),
            found: probabilities.len(),
        });
    }
    if probabilities.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("probabilities"));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidProbabilities(format!("sum {total}")));
    }
    let mm = measurement_matrix(pom);
    let rank = mm.rank();
    if rank < d * d {
        return Err(Error::RankDeficient {
            rank,
            needed: d * d,
        });
    }

    // x_0 = 1/sqrt(d) fixes the trace; solve for the traceless part.
    let x0 = 1.0 / (d as f64).sqrt();
    let full = mm.to_matrix();
    let a = full.columns(1, d * d - 1).into_owned();
    let b = DVector::from_iterator(
        probabilities.len(),
        probabilities.iter().enumerate().map(|(i, p)| p - full[(i, 0)] * x0),
    );
    let normal = a.transpose() * &a;
    let rhs = a.transpose() * b;
    let svd = normal.svd(true, true);
    let largest = svd.singular_values.max();
    let y = svd
        .solve(&rhs, SVD_CUTOFF * largest)
        .map_err(|e| Error::InvalidProbabilities(e.to_string()))?;
    let mut x = vec![x0];
    x.extend(y.iter());

    let mut rho = from_coordinates(d, &x)?;
    rho = hermitian_part(&rho);
    if project_psd {
        rho = project_to_density(&rho);
    }
    let predicted = mm.apply(&rho);
    let residual_norm = predicted
        .iter()
        .zip(probabilities)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let (trace_distance, fidelity) = match truth {
        Some(t) => (Some(trace_distance(&rho, t)?), Some(fidelity(&rho, t)?)),
        None => (None, None),
    };
    Ok(TomographyReport {
        reconstructed: rho,
        trace_distance,
        fidelity,
        residual_norm,
        psd_projected: project_psd,
    })
}

/// Relative frequencies from counts.
pub fn frequencies(counts: &[u64]) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidShots);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

fn hermitian_part(a: &Operator) -> Operator {
    (a + &a.dagger()).scale_real(0.5)
}

/// Clips negative eigenvalues and restores unit trace.
pub fn project_to_density(rho: &Operator) -> Operator {
    let clipped = hermitian_part(rho).map_hermitian(|v| v.max(0.0));
    let tr = clipped.trace().re;
    if tr <= 0.0 {
        return Operator::identity(rho.dim()).scale_real(1.0 / rho.dim() as f64);
    }
    clipped.scale_real(1.0 / tr)
}

const HERMITIAN_TOL: f64 = 1e-9;

fn check_hermitian_pair(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    for m in [a, b] {
        let dev = m.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
    }
    Ok(())
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    check_hermitian_pair(a, b)?;
    let diff = hermitian_part(&(a - b));
    Ok(0.5 * diff.eigenvalues_hermitian().iter().map(|v| v.abs()).sum::<f64>())
}

/// `(tr sqrt(sqrt(a) b sqrt(a)))^2`, negative eigenvalues treated as zero.
pub fn fidelity(a: &Operator, b: &Operator) -> Result<f64> {
    check_hermitian_pair(a, b)?;
    let sa = hermitian_part(a).map_hermitian(|v| v.max(0.0).sqrt());
    let inner = hermitian_part(&(&(&sa * &hermitian_part(b)) * &sa));
    let root: f64 = inner.eigenvalues_hermitian().iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(root * root)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub dim: usize,
    pub outcomes: usize,
    pub states: usize,
    pub worst_trace_distance: f64,
    pub passed: bool,
}

/// Reference IC measurement used by the self test: the catalog SIC when
/// one exists, otherwise the orbit of a seeded random fiducial.
pub fn reference_pom(d: usize, seed: u64) -> Result<Pom> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if let Ok(entry) = crate::catalog::catalog_entry(d, crate::catalog::QutritGamma::new(0.0)?) {
        return Ok(entry.pom);
    }
    let mut rng = seeded_rng(seed);
    loop {
        let fid = FiducialKet::new(random_pure_state(d, &mut rng), 1e-12)?;
        let pom = hw_sic_from_fiducial(&fid);
        if is_ic(&pom, 1e-10) {
            return Ok(pom);
        }
    }
}

/// Exact-probability round trip over `states` seeded random states.
pub fn self_test(d: usize, states: usize, seed: u64) -> Result<SelfTestReport> {
    let pom = reference_pom(d, seed)?;
    let diag = validate_pom(&pom, 1e-9);
    if !diag.valid {
        return Err(Error::InvalidScheme("reference measurement is not a POM".into()));
    }
    let mut rng = seeded_rng(seed.wrapping_add(1));
    let mut worst: f64 = 0.0;
    for i in 0..states {
        let rho = if i % 2 == 0 || !rng.gen_bool(0.5) {
            random_density(d, &mut rng)
        } else {
            random_pure_state(d, &mut rng).projector()
        };
        let p = born_probabilities(&pom, &rho, 1e-9)?;
        let report = reconstruct(&p, &pom, false, Some(&rho))?;
        worst = worst.max(report.trace_distance.unwrap_or(f64::INFINITY));
    }
    Ok(SelfTestReport {
        dim: d,
        outcomes: pom.len(),
        states,
        worst_trace_distance: worst,
        passed: worst < 1e-8,
    })
}

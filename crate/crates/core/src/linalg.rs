//! Dense complex kets and square operators.
//!
//! Everything in this crate lives in dimension at most 64, so storage is a
//! plain row-major `Vec` and the algorithms favour robustness over speed.
//! Hermitian spectra come from cyclic Jacobi rotations.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance used when callers do not supply one.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `exp(2 pi i k / d)` with the exponent reduced mod `d` first.
pub fn root_of_unity(d: usize, k: i64) -> C64 {
    let k = k.rem_euclid(d as i64) as f64;
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k / d as f64)
}

fn all_finite(values: &[C64]) -> bool {
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A column vector of complex amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct Ket {
    amplitudes: Vec<C64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if !all_finite(&amplitudes) {
            return Err(Error::NonFinite("ket"));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * s).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> C64 {
        assert_eq!(self.dim(), other.dim(), "ket dimension mismatch");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|self><self|`.
    pub fn projector(&self) -> Operator {
        self.outer(self)
    }

    /// `|self><other|`.
    pub fn outer(&self, other: &Ket) -> Operator {
        let n = self.dim();
        Operator::from_fn(n, |i, j| self.amplitudes[i] * other.amplitudes[j].conj())
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ket { amplitudes }
    }

    /// True when the two kets describe the same ray, i.e. agree up to a
    /// global phase: `| |<a|b>| - |a||b| | <= tol`.
    pub fn same_ray(&self, other: &Ket, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        (self.inner(other).norm() - self.norm() * other.norm()).abs() <= tol
            && (self.norm() - other.norm()).abs() <= tol
    }
}

/// A square complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct Operator {
    dim: usize,
    entries: Vec<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Operator {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Operator {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if !all_finite(&entries) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    /// Builds an operator from rows of real numbers; handy for literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let dim = values.len();
        Self::from_fn(dim, |i, j| if i == j { values[i] } else { ZERO })
    }

    /// The matrix whose columns are the given kets.
    pub fn from_columns(columns: &[Ket]) -> Result<Self> {
        let dim = columns.len();
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for c in columns {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
        }
        Ok(Self::from_fn(dim, |i, j| columns[j].amplitudes[i]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> Ket {
        Ket {
            amplitudes: (0..self.dim).map(|i| self[(i, j)]).collect(),
        }
    }

    pub fn diagonal_entries(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    /// Kronecker product; the left factor is the most significant index.
    pub fn kron(&self, other: &Operator) -> Self {
        let (n, m) = (self.dim, other.dim);
        Self::from_fn(n * m, |i, j| self[(i / m, j / m)] * other[(i % m, j % m)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.entries[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(Operator { dim: n, entries: out })
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        assert_eq!(self.dim, ket.dim(), "operator/ket dimension mismatch");
        let n = self.dim;
        let amplitudes = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.entries[i * n + j] * ket.amplitudes[j])
                    .sum()
            })
            .collect();
        Ket { amplitudes }
    }

    pub fn pow(&self, exponent: usize) -> Operator {
        let mut out = Operator::identity(self.dim);
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    /// Hilbert-Schmidt inner product `tr(self^dagger other)`.
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `tr(self other)` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> C64 {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.entries[i * n + k] * other.entries[k * n + i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// True iff the largest entrywise absolute difference is at most `tol`.
    pub fn approx_equal(&self, other: &Operator, tol: f64) -> Result<bool> {
        Ok(self.max_abs_diff(other)? <= tol)
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self * &self.dagger();
        prod.max_abs_diff(&Operator::identity(self.dim))
            .expect("same dimension")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.dagger()).expect("same dimension")
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self[(i, j)].norm() <= tol))
    }

    /// Hermitian with every eigenvalue at least `-tol`.
    pub fn is_hermitian_psd(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues_hermitian()[0]
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        self.eigh().0
    }

    /// Eigen-decomposition of the Hermitian part `(A + A^dagger)/2`.
    ///
    /// Returns ascending eigenvalues and the unitary whose columns are the
    /// matching eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, Operator) {
        let n = self.dim;
        let mut a = Operator::from_fn(n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()));
        let mut v = Operator::identity(n);
        let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

        for _sweep in 0..64 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum();
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
        let values = order.iter().map(|&i| a[(i, i)].re).collect();
        let vectors = Operator::from_fn(n, |i, j| v[(i, order[j])]);
        (values, vectors)
    }

    /// Applies `f` to the eigenvalues of the Hermitian part.
    pub fn map_hermitian(&self, f: impl Fn(f64) -> f64) -> Operator {
        let (values, vectors) = self.eigh();
        let mapped: Vec<C64> = values.iter().map(|&x| C64::new(f(x), 0.0)).collect();
        &(&vectors * &Operator::diagonal(&mapped)) * &vectors.dagger()
    }
}

/// One complex Jacobi rotation annihilating `a[p][q]`; accumulates into `v`.
fn jacobi_rotate(a: &mut Operator, v: &mut Operator, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let n = a.dim;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Strip the phase of a[p][q], then rotate the real symmetric 2x2 block.
    let ph = apq / g;
    let theta = 0.5 * (aqq - app) / g;
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let phc = ph.conj();

    // a <- a G, v <- v G with G = [[c, s], [-s conj(ph), c conj(ph)]] on (p, q).
    for i in 0..n {
        let (aip, aiq) = (a[(i, p)], a[(i, q)]);
        a[(i, p)] = c * aip - s * phc * aiq;
        a[(i, q)] = s * aip + c * phc * aiq;
        let (vip, viq) = (v[(i, p)], v[(i, q)]);
        v[(i, p)] = c * vip - s * phc * viq;
        v[(i, q)] = s * vip + c * phc * viq;
    }
    // a <- G^dagger a
    for j in 0..n {
        let (apj, aqj) = (a[(p, j)], a[(q, j)]);
        a[(p, j)] = c * apj - s * ph * aqj;
        a[(q, j)] = s * apj + c * ph * aqj;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

impl Mul for &Operator {
    type Output = Operator;

    /// Panics on dimension mismatch; see [`Operator::try_mul`].
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator dimension mismatch")
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Wire form shared by kets and operators: `{"dim": n, "entries": [[re, im], ...]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

fn to_pairs(values: &[C64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(pairs: Vec<[f64; 2]>) -> Vec<C64> {
    pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect()
}

impl From<Operator> for MatrixJson {
    fn from(op: Operator) -> Self {
        MatrixJson {
            dim: op.dim,
            entries: to_pairs(&op.entries),
        }
    }
}

impl TryFrom<MatrixJson> for Operator {
    type Error = Error;

    fn try_from(json: MatrixJson) -> Result<Self> {
        Operator::new(json.dim, from_pairs(json.entries))
    }
}

impl From<Ket> for MatrixJson {
    fn from(ket: Ket) -> Self {
        MatrixJson {
            dim: ket.dim(),
            entries: to_pairs(&ket.amplitudes),
        }
    }
}

impl TryFrom<MatrixJson> for Ket {
    type Error = Error;

    fn try_from(json: MatrixJson) -> Result<Self> {
        if json.entries.len() != json.dim {
            return Err(Error::DimensionMismatch {
                expected: json.dim,
                found: json.entries.len(),
            });
        }
        Ket::new(from_pairs(json.entries))
    }
}

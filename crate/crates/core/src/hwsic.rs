//! Heisenberg-Weyl group, group-covariant POMs generated from a fiducial
//! ket, and their decomposition into a diagonal first step followed by a
//! Fourier-basis measurement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{root_of_unity, Ket, Operator, C64, ZERO};
use crate::povm::{Basis, KrausSet, Label, Pom, SequentialScheme};

/// Clock `Z = sum_n w^n |n><n|` and shift `X = sum_n |n+1><n|`.
#[derive(Clone, Debug, PartialEq)]
pub struct HwGroup {
    dim: usize,
    z: Operator,
    x: Operator,
}

impl HwGroup {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn z(&self) -> &Operator {
        &self.z
    }

    pub fn x(&self) -> &Operator {
        &self.x
    }

    /// `X^k Z^j`.
    pub fn displacement(&self, k: usize, j: usize) -> Operator {
        &self.x.pow(k % self.dim) * &self.z.pow(j % self.dim)
    }
}

pub fn hw_generators(d: usize) -> Result<HwGroup> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let z = Operator::diagonal(&(0..d).map(|n| root_of_unity(d, n as i64)).collect::<Vec<_>>());
    let x = Operator::from_fn(d, |row, col| {
        if row == (col + 1) % d {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    });
    Ok(HwGroup { dim: d, z, x })
}

/// A normalized ket `sum_n alpha_n |n>` of dimension at least 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Ket", into = "Ket")]
pub struct FiducialKet(Ket);

impl FiducialKet {
    pub fn new(ket: Ket, tol: f64) -> Result<Self> {
        if ket.dim() < 2 {
            return Err(Error::InvalidDimension(ket.dim()));
        }
        if !ket.is_normalized(tol) {
            return Err(Error::NotNormalized(ket.norm()));
        }
        Ok(Self(ket))
    }

    pub fn ket(&self) -> &Ket {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn coefficients(&self) -> &[C64] {
        self.0.amplitudes()
    }
}

impl TryFrom<Ket> for FiducialKet {
    type Error = Error;

    fn try_from(ket: Ket) -> Result<Self> {
        FiducialKet::new(ket, 1e-9)
    }
}

impl From<FiducialKet> for Ket {
    fn from(f: FiducialKet) -> Ket {
        f.0
    }
}

/// Outcomes `X^k Z^j |psi><psi| Z^-j X^-k / d`, labelled `(k, j)` with `k` major.
pub fn hw_sic_from_fiducial(fid: &FiducialKet) -> Pom {
    let d = fid.dim();
    let group = hw_generators(d).expect("fiducial dim >= 2");
    let mut outcomes = Vec::with_capacity(d * d);
    let mut labels = Vec::with_capacity(d * d);
    for k in 0..d {
        for j in 0..d {
            let ket = group.displacement(k, j).apply(fid.ket());
            outcomes.push(ket.projector().scale_real(1.0 / d as f64));
            labels.push(Label::pair(k, j));
        }
    }
    Pom::new(outcomes, labels).expect("d >= 2")
}

/// Kets with amplitudes `w^(m j) / sqrt(d)`.
pub fn fourier_basis(d: usize) -> Result<Basis> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let norm = 1.0 / (d as f64).sqrt();
    let kets = (0..d)
        .map(|j| {
            Ket::new(
                (0..d)
                    .map(|m| root_of_unity(d, (m * j) as i64) * norm)
                    .collect(),
            )
            .expect("finite")
        })
        .collect();
    Basis::new(kets, 1e-12)
}

/// Diagonal Kraus operators `K_k` with entry `conj(alpha_{p-k})` at position
/// `p`, each followed by the Fourier basis. Composing reproduces
/// [`hw_sic_from_fiducial`] label by label.
pub fn decompose_hw(fid: &FiducialKet) -> SequentialScheme {
    let d = fid.dim();
    let alpha = fid.coefficients();
    let kraus = (0..d)
        .map(|k| {
            let diag: Vec<C64> = (0..d).map(|p| alpha[(p + d - k) % d].conj()).collect();
            Operator::diagonal(&diag)
        })
        .collect();
    let first = KrausSet::new(kraus, 1e-9).expect("normalized fiducial");
    let fourier = fourier_basis(d).expect("d >= 2");
    SequentialScheme::new(first, vec![fourier; d]).expect("consistent dimensions")
}

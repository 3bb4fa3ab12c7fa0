//! Fuzzy first measurements `A_k = (1 - lambda)/d + lambda |k><k|` and the
//! conditions under which a fuzzy step plus adaptive second bases is a SIC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Ket, Operator, C64};
use crate::povm::{compose_sequential, is_sic, Basis, KrausSet, Pom, SequentialScheme};

/// Dimension and sharpness of a fuzzy measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FuzzyParams {
    d: usize,
    lambda: f64,
}

impl FuzzyParams {
    /// Accepts `-1/(d-1) <= lambda <= 1`, with `1e-12` slack at the ends.
    pub fn new(d: usize, lambda: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if !lambda.is_finite() {
            return Err(Error::NonFinite("lambda"));
        }
        let (lo, hi) = Self::window(d);
        if lambda < lo - 1e-12 || lambda > hi + 1e-12 {
            return Err(Error::LambdaOutOfRange { lambda, lo, hi });
        }
        Ok(Self {
            d,
            lambda: lambda.clamp(lo, hi),
        })
    }

    pub fn window(d: usize) -> (f64, f64) {
        (-1.0 / (d as f64 - 1.0), 1.0)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `sqrt(1 - lambda)`.
    pub fn alpha(&self) -> f64 {
        (1.0 - self.lambda).max(0.0).sqrt()
    }

    /// `sqrt(1 + (d - 1) lambda)`.
    pub fn beta(&self) -> f64 {
        (1.0 + (self.d as f64 - 1.0) * self.lambda).max(0.0).sqrt()
    }
}

pub fn fuzzy_pom(params: FuzzyParams) -> Pom {
    let d = params.d;
    let off = (1.0 - params.lambda) / d as f64;
    let outcomes = (0..d)
        .map(|k| {
            let diag: Vec<C64> = (0..d)
                .map(|p| C64::new(if p == k { off + params.lambda } else { off }, 0.0))
                .collect();
            Operator::diagonal(&diag)
        })
        .collect();
    Pom::with_index_labels(outcomes).expect("d >= 2")
}

/// Positive diagonal Kraus operators: `beta/sqrt(d)` at `k`, `alpha/sqrt(d)` elsewhere.
pub fn fuzzy_kraus(params: FuzzyParams) -> KrausSet {
    let d = params.d;
    let s = (d as f64).sqrt();
    let (a, b) = (params.alpha() / s, params.beta() / s);
    let ops = (0..d)
        .map(|k| {
            let diag: Vec<C64> = (0..d)
                .map(|p| C64::new(if p == k { b } else { a }, 0.0))
                .collect();
            Operator::diagonal(&diag)
        })
        .collect();
    KrausSet::new(ops, 1e-12).expect("fuzzy Kraus operators are complete")
}

/// Fuzzy first step followed, after outcome `k`, by a measurement in `bases[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzScheme {
    params: FuzzyParams,
    bases: Vec<Basis>,
}

impl AnsatzScheme {
    pub fn new(params: FuzzyParams, bases: Vec<Basis>) -> Result<Self> {
        if bases.len() != params.d {
            return Err(Error::InvalidScheme(format!(
                "{} bases for dimension {}",
                bases.len(),
                params.d
            )));
        }
        if let Some(b) = bases.iter().find(|b| b.dim() != params.d) {
            return Err(Error::DimensionMismatch {
                expected: params.d,
                found: b.dim(),
            });
        }
        Ok(Self { params, bases })
    }

    pub fn params(&self) -> FuzzyParams {
        self.params
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn to_sequential(&self) -> SequentialScheme {
        SequentialScheme::new(fuzzy_kraus(self.params), self.bases.clone()).expect("validated shapes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnsatzJson {
    dim: usize,
    lambda: f64,
    bases: Vec<Basis>,
}

impl Serialize for AnsatzScheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AnsatzJson {
            dim: self.params.d,
            lambda: self.params.lambda,
            bases: self.bases.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnsatzScheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = AnsatzJson::deserialize(d)?;
        let params = FuzzyParams::new(j.dim, j.lambda).map_err(D::Error::custom)?;
        AnsatzScheme::new(params, j.bases).map_err(D::Error::custom)
    }
}

pub fn ansatz_pom(scheme: &AnsatzScheme) -> Pom {
    compose_sequential(&scheme.to_sequential())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaSign {
    Plus,
    Minus,
}

/// Form in which the cross-basis condition was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossRoute {
    /// `|<n(m)|[alpha + (beta - alpha)(P_m + P_k)]|j(k)>|^2 = 1/(alpha^2 (d+1))`.
    Generic,
    /// d = 3, lambda = 1/2: `|<n(m)|(1 + P_m + P_k)|j(k)>|^2 = 1`.
    QutritPlus,
    /// d = 3, lambda = -1/2: `|<n(m)|l><l|j(k)>|^2 = 1/9` with `l` the third index.
    QutritMinus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub lambda_ok: bool,
    pub lambda_sign: Option<LambdaSign>,
    pub lambda_deviation: f64,
    pub unbiased_ok: bool,
    pub unbiased_deviation: f64,
    pub cross_ok: bool,
    pub cross_route: CrossRoute,
    pub cross_target: f64,
    pub cross_deviation: f64,
    pub sic: bool,
}

pub const CONDITION_TOL: f64 = 1e-9;

/// Evaluates the three conditions that together are equivalent to the
/// composed POM being a SIC.
pub fn check_conditions(scheme: &AnsatzScheme, tol: f64) -> ConditionReport {
    let p = scheme.params;
    let d = p.d;
    let df = d as f64;
    let target_lambda = 1.0 / (df + 1.0).sqrt();

    let plus_dev = (p.lambda - target_lambda).abs();
    let minus_dev = (p.lambda + target_lambda).abs();
    let (lambda_sign, lambda_deviation) = if plus_dev <= minus_dev || d >= 4 {
        (LambdaSign::Plus, plus_dev)
    } else {
        (LambdaSign::Minus, minus_dev)
    };
    let lambda_ok = lambda_deviation <= tol;

    let mut unbiased_deviation: f64 = 0.0;
    for (m, basis) in scheme.bases.iter().enumerate() {
        for ket in basis.kets() {
            let overlap = ket.amplitudes()[m].norm_sqr();
            unbiased_deviation = unbiased_deviation.max((overlap - 1.0 / df).abs());
        }
    }

    let near = |x: f64| (p.lambda - x).abs() <= tol.max(1e-12);
    let cross_route = match d {
        3 if near(0.5) => CrossRoute::QutritPlus,
        3 if near(-0.5) => CrossRoute::QutritMinus,
        _ => CrossRoute::Generic,
    };
    let (alpha, beta) = (p.alpha(), p.beta());
    let cross_target = match cross_route {
        CrossRoute::Generic => 1.0 / (alpha * alpha * (df + 1.0)),
        CrossRoute::QutritPlus => 1.0,
        CrossRoute::QutritMinus => 1.0 / 9.0,
    };

    let mut cross_deviation: f64 = 0.0;
    for m in 0..d {
        for k in (0..d).filter(|&k| k != m) {
            let middle = Operator::from_fn(d, |r, c| {
                if r != c {
                    return C64::new(0.0, 0.0);
                }
                let peaked = r == m || r == k;
                let v = match cross_route {
                    CrossRoute::Generic => {
                        if peaked {
                            beta
                        } else {
                            alpha
                        }
                    }
                    CrossRoute::QutritPlus => {
                        if peaked {
                            2.0
                        } else {
                            1.0
                        }
                    }
                    CrossRoute::QutritMinus => {
                        if peaked {
                            0.0
                        } else {
                            1.0
                        }
                    }
                };
                C64::new(v, 0.0)
            });
            for bra in scheme.bases[m].kets() {
                for ket in scheme.bases[k].kets() {
                    let value = bra.inner(&middle.apply(ket)).norm_sqr();
                    let dev = if cross_target.is_finite() {
                        (value - cross_target).abs()
                    } else {
                        f64::INFINITY
                    };
                    cross_deviation = cross_deviation.max(dev);
                }
            }
        }
    }

    let unbiased_ok = unbiased_deviation <= tol;
    let cross_ok = cross_deviation <= tol;
    ConditionReport {
        lambda_ok,
        lambda_sign: lambda_ok.then_some(lambda_sign),
        lambda_deviation,
        unbiased_ok,
        unbiased_deviation,
        cross_ok,
        cross_route,
        cross_target,
        cross_deviation,
        sic: lambda_ok && unbiased_ok && cross_ok,
    }
}

pub fn check_sic_directly(scheme: &AnsatzScheme, tol: f64) -> bool {
    is_sic(&ansatz_pom(scheme), tol).is_sic
}

/// Applies a diagonal unitary `diag(phases)` to every ket of `basis`.
pub(crate) fn phase_basis(basis: &Basis, phases: &[C64]) -> Basis {
    let kets = basis
        .kets()
        .iter()
        .map(|k| {
            Ket::new(k.amplitudes().iter().zip(phases).map(|(a, p)| a * p).collect()).expect("finite")
        })
        .collect();
    Basis::new(kets, 1e-9).expect("diagonal unitary preserves orthonormality")
}

//! Probability-operator measurements, Kraus operators and two-step composition.
//!
//! A [`SequentialScheme`] is a first measurement with Kraus operators
//! `K_n` followed by a projective measurement in a basis that may depend on
//! `n`. Its overall outcomes are `K_n^dagger |m(n)><m(n)| K_n`, labelled
//! `(n, m)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Ket, Operator, C64};

/// Outcome label: one index, or an index tuple such as `(n, m)`.
/// Serialized as the indices joined by commas, e.g. `"2,0"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label(Vec<usize>);

impl Label {
    pub fn new(indices: Vec<usize>) -> Self {
        Label(indices)
    }

    pub fn single(i: usize) -> Self {
        Label(vec![i])
    }

    pub fn pair(n: usize, m: usize) -> Self {
        Label(vec![n, m])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::MalformedLabels(format!("bad label {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Label)
    }
}

impl TryFrom<String> for Label {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Label> for String {
    fn from(l: Label) -> String {
        l.to_string()
    }
}

/// An ordered list of outcome operators with labels.
///
/// Construction checks shapes only; positivity and completeness are
/// reported by [`validate_pom`] so that faulty inputs can still be loaded
/// and diagnosed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PomJson", into = "PomJson")]
pub struct Pom {
    dim: usize,
    outcomes: Vec<Operator>,
    labels: Vec<Label>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PomJson {
    dim: usize,
    labels: Vec<Label>,
    outcomes: Vec<Operator>,
}

impl From<Pom> for PomJson {
    fn from(p: Pom) -> Self {
        PomJson {
            dim: p.dim,
            labels: p.labels,
            outcomes: p.outcomes,
        }
    }
}

impl TryFrom<PomJson> for Pom {
    type Error = Error;

    fn try_from(j: PomJson) -> Result<Self> {
        let pom = Pom::new(j.outcomes, j.labels)?;
        if pom.dim != j.dim {
            return Err(Error::DimensionMismatch {
                expected: j.dim,
                found: pom.dim,
            });
        }
        Ok(pom)
    }
}

impl Pom {
    pub fn new(outcomes: Vec<Operator>, labels: Vec<Label>) -> Result<Self> {
        let first = outcomes.first().ok_or(Error::EmptyPom)?;
        let dim = first.dim();
        if let Some(bad) = outcomes.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        if labels.len() != outcomes.len() {
            return Err(Error::LabelCount {
                count: labels.len(),
                outcomes: outcomes.len(),
            });
        }
        Ok(Self {
            dim,
            outcomes,
            labels,
        })
    }

    /// Outcomes labelled `0, 1, ...`.
    pub fn with_index_labels(outcomes: Vec<Operator>) -> Result<Self> {
        let labels = (0..outcomes.len()).map(Label::single).collect();
        Self::new(outcomes, labels)
    }

    /// Projective measurement onto the kets of a basis.
    pub fn from_basis(basis: &Basis) -> Self {
        Self::with_index_labels(basis.projectors()).expect("basis is non-empty")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[Operator] {
        &self.outcomes
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn without_outcome(&self, index: usize) -> Result<Self> {
        let mut outcomes = self.outcomes.clone();
        let mut labels = self.labels.clone();
        outcomes.remove(index);
        labels.remove(index);
        Self::new(outcomes, labels)
    }

    /// Conjugates every outcome, `U P U^dagger`, keeping labels.
    pub fn conjugated_by(&self, u: &Operator) -> Self {
        let ud = u.dagger();
        Self {
            dim: self.dim,
            outcomes: self.outcomes.iter().map(|p| &(u * p) * &ud).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn sum(&self) -> Operator {
        self.outcomes
            .iter()
            .fold(Operator::zeros(self.dim), |acc, p| &acc + p)
    }
}

/// Worst-case figures from [`validate_pom`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PomDiagnostics {
    pub valid: bool,
    pub worst_eigenvalue: f64,
    pub worst_outcome: usize,
    pub hermiticity_deviation: f64,
    pub completeness_deviation: f64,
}

/// Checks that every outcome is Hermitian PSD and that they sum to identity.
pub fn validate_pom(pom: &Pom, tol: f64) -> PomDiagnostics {
    let mut worst_eigenvalue = f64::INFINITY;
    let mut worst_outcome = 0;
    let mut hermiticity_deviation: f64 = 0.0;
    for (i, p) in pom.outcomes.iter().enumerate() {
        hermiticity_deviation = hermiticity_deviation.max(p.hermiticity_deviation());
        let e = p.min_eigenvalue();
        if e < worst_eigenvalue {
            worst_eigenvalue = e;
            worst_outcome = i;
        }
    }
    let completeness_deviation = pom
        .sum()
        .max_abs_diff(&Operator::identity(pom.dim))
        .expect("same dimension");
    PomDiagnostics {
        valid: worst_eigenvalue >= -tol
            && hermiticity_deviation <= tol
            && completeness_deviation <= tol,
        worst_eigenvalue,
        worst_outcome,
        hermiticity_deviation,
        completeness_deviation,
    }
}

/// Errors unless `rho` is Hermitian, PSD and of unit trace within `tol`.
pub fn check_density(rho: &Operator, tol: f64) -> Result<()> {
    let h = rho.hermiticity_deviation();
    if h > tol {
        return Err(Error::NotDensity(format!("hermiticity deviation {h:e}")));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > tol {
        return Err(Error::NotDensity(format!("trace {tr}")));
    }
    let e = rho.min_eigenvalue();
    if e < -tol {
        return Err(Error::NotDensity(format!("eigenvalue {e:e}")));
    }
    Ok(())
}

/// Clips values in `[-tol, 0)` to zero and renormalizes; larger negatives are errors.
pub(crate) fn clip_probabilities(mut probs: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
    for p in probs.iter_mut() {
        if *p < -tol {
            return Err(Error::NegativeProbability(*p));
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol.max(1e-12) * probs.len() as f64 {
        return Err(Error::InvalidProbabilities(format!("sum {total}")));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// Born rule `p_j = tr(P_j rho)`.
pub fn born_probabilities(pom: &Pom, rho: &Operator, tol: f64) -> Result<Vec<f64>> {
    if rho.dim() != pom.dim {
        return Err(Error::DimensionMismatch {
            expected: pom.dim,
            found: rho.dim(),
        });
    }
    check_density(rho, tol)?;
    let raw = pom
        .outcomes
        .iter()
        .map(|p| p.trace_product(rho).re)
        .collect();
    clip_probabilities(raw, tol)
}

/// Post-measurement state `K rho K^dagger / p` and its probability `p`.
pub fn post_state(kraus: &Operator, rho: &Operator, tol: f64) -> Result<(Operator, f64)> {
    if rho.dim() != kraus.dim() {
        return Err(Error::DimensionMismatch {
            expected: kraus.dim(),
            found: rho.dim(),
        });
    }
    check_density(rho, tol)?;
    let unnormalized = &(kraus * rho) * &kraus.dagger();
    let p = unnormalized.trace().re;
    if p <= tol {
        return Err(Error::ImpossibleOutcome(p));
    }
    Ok((unnormalized.scale_real(1.0 / p), p))
}

/// Kraus operators `K_n` with `sum_n K_n^dagger K_n = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KrausSet {
    dim: usize,
    operators: Vec<Operator>,
}

impl KrausSet {
    pub fn new(operators: Vec<Operator>, tol: f64) -> Result<Self> {
        let dim = operators.first().ok_or(Error::EmptyPom)?.dim();
        if let Some(bad) = operators.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let set = Self { dim, operators };
        let dev = set.completeness_deviation();
        if dev > tol {
            return Err(Error::IncompleteKraus(dev));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    /// Outcome operators `K_n^dagger K_n`.
    pub fn effects(&self) -> Vec<Operator> {
        self.operators.iter().map(|k| &k.dagger() * k).collect()
    }

    pub fn completeness_deviation(&self) -> f64 {
        self.effects()
            .iter()
            .fold(Operator::zeros(self.dim), |acc, e| &acc + e)
            .max_abs_diff(&Operator::identity(self.dim))
            .expect("same dimension")
    }

    /// Replaces `K_n` by `U_n K_n`; the effects are unchanged.
    pub fn with_left_unitaries(&self, unitaries: &[Operator]) -> Result<Self> {
        if unitaries.len() != self.operators.len() {
            return Err(Error::InvalidScheme(format!(
                "{} unitaries for {} Kraus operators",
                unitaries.len(),
                self.operators.len()
            )));
        }
        let operators = unitaries
            .iter()
            .zip(&self.operators)
            .map(|(u, k)| u.try_mul(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            operators,
        })
    }
}

/// An orthonormal basis, stored as its kets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Ket>", into = "Vec<Ket>")]
pub struct Basis {
    kets: Vec<Ket>,
}

impl TryFrom<Vec<Ket>> for Basis {
    type Error = Error;

    fn try_from(kets: Vec<Ket>) -> Result<Self> {
        Basis::new(kets, 1e-9)
    }
}

impl From<Basis> for Vec<Ket> {
    fn from(b: Basis) -> Self {
        b.kets
    }
}

impl Basis {
    pub fn new(kets: Vec<Ket>, tol: f64) -> Result<Self> {
        let dim = kets.len();
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(bad) = kets.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let basis = Self { kets };
        let dev = basis.gram_deviation();
        if dev > tol {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(basis)
    }

    pub fn computational(dim: usize) -> Self {
        Self {
            kets: (0..dim).map(|i| Ket::basis(dim, i)).collect(),
        }
    }

    /// The columns of a unitary.
    pub fn from_unitary(u: &Operator, tol: f64) -> Result<Self> {
        Self::new((0..u.dim()).map(|j| u.column(j)).collect(), tol)
    }

    pub fn dim(&self) -> usize {
        self.kets.len()
    }

    pub fn kets(&self) -> &[Ket] {
        &self.kets
    }

    /// Unitary whose columns are the basis kets.
    pub fn unitary(&self) -> Operator {
        Operator::from_columns(&self.kets).expect("square")
    }

    /// Applies `u` to every ket.
    pub fn transformed(&self, u: &Operator, tol: f64) -> Result<Self> {
        Self::new(self.kets.iter().map(|k| u.apply(k)).collect(), tol)
    }

    pub fn projectors(&self) -> Vec<Operator> {
        self.kets.iter().map(Ket::projector).collect()
    }

    pub fn gram_deviation(&self) -> f64 {
        let n = self.kets.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { 1.0 } else { 0.0 };
                let g = self.kets[i].inner(&self.kets[j]);
                worst = worst.max((g - C64::new(expected, 0.0)).norm());
            }
        }
        worst
    }
}

/// First-step Kraus set plus one second-step basis per first outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialScheme {
    first: KrausSet,
    second: Vec<Basis>,
}

impl SequentialScheme {
    pub fn new(first: KrausSet, second: Vec<Basis>) -> Result<Self> {
        if second.len() != first.len() {
            return Err(Error::InvalidScheme(format!(
                "{} second-step bases for {} first outcomes",
                second.len(),
                first.len()
            )));
        }
        if let Some(b) = second.iter().find(|b| b.dim() != first.dim()) {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: b.dim(),
            });
        }
        Ok(Self { first, second })
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    pub fn first(&self) -> &KrausSet {
        &self.first
    }

    pub fn second(&self) -> &[Basis] {
        &self.second
    }

    pub fn with_first(&self, first: KrausSet) -> Result<Self> {
        Self::new(first, self.second.clone())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeJson {
    dim: usize,
    kraus: Vec<Operator>,
    bases: Vec<Basis>,
}

impl Serialize for SequentialScheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SchemeJson {
            dim: self.dim(),
            kraus: self.first.operators.clone(),
            bases: self.second.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SequentialScheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = SchemeJson::deserialize(d)?;
        let first = KrausSet::new(j.kraus, 1e-9).map_err(D::Error::custom)?;
        if first.dim() != j.dim {
            return Err(D::Error::custom(format!(
                "declared dim {} but Kraus operators have dim {}",
                j.dim,
                first.dim()
            )));
        }
        SequentialScheme::new(first, j.bases).map_err(D::Error::custom)
    }
}

/// The single POM equivalent to running the scheme: outcome `(n, m)` is
/// `K_n^dagger |m(n)><m(n)| K_n`.
pub fn compose_sequential(scheme: &SequentialScheme) -> Pom {
    let mut outcomes = Vec::new();
    let mut labels = Vec::new();
    for (n, (k, basis)) in scheme.first.operators.iter().zip(&scheme.second).enumerate() {
        let kd = k.dagger();
        for (m, ket) in basis.kets.iter().enumerate() {
            // K^dagger |m><m| K = |K^dagger m><K^dagger m|
            outcomes.push(kd.apply(ket).projector());
            labels.push(Label::pair(n, m));
        }
    }
    Pom::new(outcomes, labels).expect("non-empty scheme")
}

/// Sums `(n, m)` outcomes over `m`, giving the first-step outcomes labelled `n`.
pub fn marginalize_first(pom: &Pom) -> Result<Pom> {
    let mut n_max = 0;
    let mut m_max = 0;
    for l in &pom.labels {
        match l.indices() {
            [n, m] => {
                n_max = n_max.max(*n);
                m_max = m_max.max(*m);
            }
            _ => return Err(Error::MalformedLabels(format!("label {l} is not a pair"))),
        }
    }
    let (rows, cols) = (n_max + 1, m_max + 1);
    let mut seen = vec![false; rows * cols];
    let mut sums = vec![Operator::zeros(pom.dim); rows];
    for (l, p) in pom.labels.iter().zip(&pom.outcomes) {
        let (n, m) = (l.indices()[0], l.indices()[1]);
        if std::mem::replace(&mut seen[n * cols + m], true) {
            return Err(Error::MalformedLabels(format!("duplicate label {l}")));
        }
        sums[n] = &sums[n] + p;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::MalformedLabels(format!(
            "labels do not cover a {rows}x{cols} grid"
        )));
    }
    Pom::with_index_labels(sums)
}

/// Two-step chain rule `p(n) p(m|n)` computed with explicit post-measurement states.
pub fn sequential_probabilities(scheme: &SequentialScheme, rho: &Operator, tol: f64) -> Result<Vec<f64>> {
    check_density(rho, tol)?;
    let mut out = Vec::with_capacity(scheme.dim() * scheme.first.len());
    for (k, basis) in scheme.first.operators.iter().zip(&scheme.second) {
        match post_state(k, rho, tol) {
            Ok((post, p_n)) => {
                for ket in basis.kets() {
                    let p_m = ket.inner(&post.apply(ket)).re;
                    out.push(p_n * p_m);
                }
            }
            Err(Error::ImpossibleOutcome(_)) => out.extend(std::iter::repeat_n(0.0, basis.dim())),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Summary of the SIC test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SicReport {
    pub is_sic: bool,
    pub outcome_count_ok: bool,
    pub max_second_eigenvalue: f64,
    pub self_trace_deviation: f64,
    pub pair_trace_deviation: f64,
    pub expected_pair_trace: f64,
    pub worst_pair: Option<(usize, usize)>,
}

/// `d^2` rank-1 outcomes with `tr(P_a^2) = 1/d^2` and
/// `tr(P_a P_b) = 1/(d^2 (d+1))` for `a != b`.
pub fn is_sic(pom: &Pom, tol: f64) -> SicReport {
    let d = pom.dim as f64;
    let n = pom.len();
    let expected_self = 1.0 / (d * d);
    let expected_pair = 1.0 / (d * d * (d + 1.0));
    let outcome_count_ok = n == pom.dim * pom.dim;

    let max_second_eigenvalue = pom
        .outcomes
        .iter()
        .map(|p| {
            let ev = p.eigenvalues_hermitian();
            if ev.len() < 2 {
                0.0
            } else {
                ev[ev.len() - 2].abs()
            }
        })
        .fold(0.0, f64::max);

    let mut self_dev: f64 = 0.0;
    let mut pair_dev: f64 = 0.0;
    let mut worst_pair = None;
    for a in 0..n {
        for b in a..n {
            let t = pom.outcomes[a].trace_product(&pom.outcomes[b]);
            if a == b {
                self_dev = self_dev.max((t - expected_self).norm());
            } else {
                let dev = (t - expected_pair).norm();
                if dev > pair_dev || worst_pair.is_none() {
                    pair_dev = pair_dev.max(dev);
                    worst_pair = Some((a, b));
                }
            }
        }
    }
    SicReport {
        is_sic: outcome_count_ok && max_second_eigenvalue <= tol && self_dev <= tol && pair_dev <= tol,
        outcome_count_ok,
        max_second_eigenvalue,
        self_trace_deviation: self_dev,
        pair_trace_deviation: pair_dev,
        expected_pair_trace: expected_pair,
        worst_pair,
    }
}

/// Dimension of the real span of the outcomes: the rank of their
/// Hilbert-Schmidt Gram matrix, counting eigenvalues above `tol * largest`.
pub fn ic_rank(pom: &Pom, tol: f64) -> usize {
    let n = pom.len();
    let gram = Operator::from_fn(n, |a, b| {
        C64::new(pom.outcomes[a].hs_inner(&pom.outcomes[b]).re, 0.0)
    });
    let values = gram.eigenvalues_hermitian();
    let largest = values.last().copied().unwrap_or(0.0);
    if largest <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > tol * largest).count()
}

/// Informational completeness: the outcomes span all `d^2` Hermitian directions.
pub fn is_ic(pom: &Pom, tol: f64) -> bool {
    ic_rank(pom, tol) == pom.dim * pom.dim
}

/// Matches the outcomes of `a` to those of `b` as multisets: returns, for
/// each outcome of `a`, the index of an unused outcome of `b` within `tol`
/// (entrywise), choosing the nearest by Frobenius distance.
pub fn match_outcomes(a: &Pom, b: &Pom, tol: f64) -> Result<Vec<usize>> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    if a.len() != b.len() {
        return Err(Error::NoMatching(format!("{} vs {} outcomes", a.len(), b.len())));
    }
    let mut used = vec![false; b.len()];
    let mut map = Vec::with_capacity(a.len());
    for (i, pa) in a.outcomes.iter().enumerate() {
        let best = b
            .outcomes
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, pb)| (j, (pa - pb).frobenius_norm(), pa.max_abs_diff(pb).expect("same dim")))
            .filter(|(_, _, max)| *max <= tol)
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((j, _, _)) => {
                used[j] = true;
                map.push(j);
            }
            None => {
                return Err(Error::NoMatching(format!(
                    "outcome {i} ({}) has no partner within {tol:e}",
                    a.labels[i]
                )))
            }
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_pure_state, random_unitary, seeded_rng};
    use proptest::prelude::*;

    const TOL: f64 = 1e-10;

    fn computational_pom(d: usize) -> Pom {
        Pom::from_basis(&Basis::computational(d))
    }

    fn sigma1_basis() -> Basis {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Basis::new(
            vec![Ket::from_real(&[s, s]).unwrap(), Ket::from_real(&[s, -s]).unwrap()],
            1e-12,
        )
        .unwrap()
    }

    #[test]
    fn labels_round_trip_as_strings() {
        let l = Label::pair(3, 1);
        assert_eq!(l.to_string(), "3,1");
        assert_eq!("3,1".parse::<Label>().unwrap(), l);
        assert!("3;1".parse::<Label>().is_err());
        assert_eq!(serde_json::to_string(&l).unwrap(), "\"3,1\"");
    }

    #[test]
    fn computational_basis_is_valid() {
        let diag = validate_pom(&computational_pom(3), TOL);
        assert!(diag.valid);
        assert!(diag.completeness_deviation < 1e-15);
    }

    #[test]
    fn overcomplete_projectors_fail_completeness() {
        // |0>, |1>, |+>, |-> without the 1/2 weights sum to 2.
        let mut outcomes = computational_pom(2).outcomes().to_vec();
        outcomes.extend(sigma1_basis().projectors());
        let pom = Pom::with_index_labels(outcomes).unwrap();
        let diag = validate_pom(&pom, TOL);
        assert!(!diag.valid);
        assert!((diag.completeness_deviation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_pom_rejected() {
        assert!(matches!(Pom::new(vec![], vec![]), Err(Error::EmptyPom)));
        let one = Operator::identity(2);
        assert!(matches!(
            Pom::new(vec![one], vec![]),
            Err(Error::LabelCount { .. })
        ));
    }

    #[test]
    fn post_state_examples() {
        let rho = Operator::identity(2).scale_real(0.5);
        let (post, p) = post_state(&Operator::identity(2), &rho, TOL).unwrap();
        assert_eq!(p, 1.0);
        assert!(post.approx_equal(&rho, 1e-15).unwrap());

        let proj = Ket::basis(2, 0).projector();
        let (post, p) = post_state(&proj, &rho, TOL).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(post.approx_equal(&proj, 1e-15).unwrap());

        // The fuzzy qubit Kraus operator peaked on |1>.
        let c = 1.0 / 12f64.sqrt();
        let a = Operator::diagonal(&[C64::new((0.5 - c).sqrt(), 0.0), C64::new((0.5 + c).sqrt(), 0.0)]);
        let (post, p) = post_state(&a, &rho, TOL).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        let expected = Operator::diagonal(&[C64::new(0.5 - c, 0.0), C64::new(0.5 + c, 0.0)]);
        assert!(post.approx_equal(&expected, 1e-15).unwrap());

        let zero = Ket::basis(2, 1).projector();
        assert!(matches!(
            post_state(&zero, &Ket::basis(2, 0).projector(), TOL),
            Err(Error::ImpossibleOutcome(_))
        ));
    }

    #[test]
    fn born_rejects_bad_states() {
        let pom = computational_pom(2);
        let not_unit = Operator::identity(2);
        assert!(matches!(born_probabilities(&pom, &not_unit, TOL), Err(Error::NotDensity(_))));
        let wrong_dim = Operator::identity(3).scale_real(1.0 / 3.0);
        assert!(matches!(
            born_probabilities(&pom, &wrong_dim, TOL),
            Err(Error::DimensionMismatch { .. })
        ));
        let negative = Operator::diagonal(&[C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]);
        assert!(born_probabilities(&pom, &negative, TOL).is_err());
    }

    #[test]
    fn clipping_only_absorbs_roundoff() {
        let clipped = clip_probabilities(vec![0.5, 0.5 + 5e-11, -5e-11], TOL).unwrap();
        assert_eq!(clipped[2], 0.0);
        assert!((clipped.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            clip_probabilities(vec![1.1, -0.1], TOL),
            Err(Error::NegativeProbability(_))
        ));
    }

    #[test]
    fn trivial_scheme_composes_to_its_basis() {
        let first = KrausSet::new(vec![Operator::identity(3)], TOL).unwrap();
        let scheme = SequentialScheme::new(first, vec![Basis::computational(3)]).unwrap();
        let pom = compose_sequential(&scheme);
        for (a, b) in pom.outcomes().iter().zip(computational_pom(3).outcomes()) {
            assert!(a.approx_equal(b, 1e-15).unwrap());
        }
        let marginal = marginalize_first(&pom).unwrap();
        assert_eq!(marginal.len(), 1);
        assert!(marginal.outcomes()[0].approx_equal(&Operator::identity(3), 1e-15).unwrap());
    }

    #[test]
    fn scheme_shape_errors() {
        let first = KrausSet::new(vec![Operator::identity(2)], TOL).unwrap();
        assert!(SequentialScheme::new(first.clone(), vec![]).is_err());
        assert!(SequentialScheme::new(first, vec![Basis::computational(3)]).is_err());
        let half = Operator::identity(2).scale_real(0.5);
        assert!(matches!(KrausSet::new(vec![half], TOL), Err(Error::IncompleteKraus(_))));
        let bad = vec![Ket::basis(2, 0), Ket::basis(2, 0)];
        assert!(matches!(Basis::new(bad, TOL), Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn marginalize_rejects_malformed_labels() {
        let pom = computational_pom(2);
        assert!(matches!(marginalize_first(&pom), Err(Error::MalformedLabels(_))));
        let p = Operator::identity(2).scale_real(0.5);
        let gap = Pom::new(vec![p.clone(), p], vec![Label::pair(0, 0), Label::pair(1, 1)]).unwrap();
        assert!(matches!(marginalize_first(&gap), Err(Error::MalformedLabels(_))));
    }

    #[test]
    fn computational_basis_is_neither_sic_nor_ic() {
        let pom = computational_pom(3);
        let report = is_sic(&pom, TOL);
        assert!(!report.is_sic);
        assert!(!report.outcome_count_ok);
        assert_eq!(ic_rank(&pom, TOL), 3);
        assert!(!is_ic(&pom, TOL));
    }

    fn random_scheme(d: usize, seed: u64) -> SequentialScheme {
        // Kraus K_n = U_n sqrt(E_n) for a random d-outcome POM built as
        // E_n = S^{-1/2} G_n S^{-1/2}.
        let mut rng = seeded_rng(seed);
        let gs: Vec<Operator> = (0..d)
            .map(|_| {
                let v = random_pure_state(d, &mut rng);
                &v.projector() + &Operator::identity(d).scale_real(0.1)
            })
            .collect();
        let s = gs.iter().fold(Operator::zeros(d), |a, g| &a + g);
        let s_inv_half = s.map_hermitian(|x| 1.0 / x.sqrt());
        let kraus = gs
            .iter()
            .map(|g| {
                let e = &(&s_inv_half * g) * &s_inv_half;
                let sqrt_e = e.map_hermitian(|x| x.max(0.0).sqrt());
                &random_unitary(d, &mut rng) * &sqrt_e
            })
            .collect();
        let first = KrausSet::new(kraus, 1e-9).unwrap();
        let second = (0..d)
            .map(|_| Basis::from_unitary(&random_unitary(d, &mut rng), 1e-9).unwrap())
            .collect();
        SequentialScheme::new(first, second).unwrap()
    }

    #[test]
    fn composition_matches_chain_rule() {
        for (d, seed) in [(2, 1), (3, 2), (4, 3)] {
            let scheme = random_scheme(d, seed);
            let pom = compose_sequential(&scheme);
            assert!(validate_pom(&pom, 1e-9).valid);
            let mut rng = seeded_rng(seed + 100);
            for _ in 0..100 {
                let rho = random_density(d, &mut rng);
                let direct = born_probabilities(&pom, &rho, 1e-9).unwrap();
                let chain = sequential_probabilities(&scheme, &rho, 1e-9).unwrap();
                for (a, b) in direct.iter().zip(&chain) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn matching_finds_permutations_and_rejects_strangers() {
        let pom = computational_pom(3);
        let reversed = Pom::with_index_labels(pom.outcomes().iter().rev().cloned().collect()).unwrap();
        assert_eq!(match_outcomes(&pom, &reversed, TOL).unwrap(), vec![2, 1, 0]);
        let other = Pom::with_index_labels(
            Basis::from_unitary(&random_unitary(3, &mut seeded_rng(5)), 1e-9)
                .unwrap()
                .projectors(),
        )
        .unwrap();
        assert!(matches!(match_outcomes(&pom, &other, TOL), Err(Error::NoMatching(_))));
    }

    #[test]
    fn deleting_an_outcome_of_an_ic_pom_breaks_ic() {
        // Eigenprojectors of the three Pauli matrices, weighted 1/3.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let kets = [
            Ket::basis(2, 0),
            Ket::basis(2, 1),
            Ket::from_real(&[h, h]).unwrap(),
            Ket::from_real(&[h, -h]).unwrap(),
            Ket::new(vec![C64::new(h, 0.0), C64::new(0.0, h)]).unwrap(),
            Ket::new(vec![C64::new(h, 0.0), C64::new(0.0, -h)]).unwrap(),
        ];
        let outcomes = kets.iter().map(|k| k.projector().scale_real(1.0 / 3.0)).collect();
        let pom = Pom::with_index_labels(outcomes).unwrap();
        assert!(validate_pom(&pom, TOL).valid);
        assert!(is_ic(&pom, TOL));
        assert!(is_ic(&pom.without_outcome(5).unwrap(), TOL));
        let fewer = pom.without_outcome(5).unwrap().without_outcome(4).unwrap();
        assert_eq!(ic_rank(&fewer, TOL), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kraus_gauge_leaves_first_step_effects_unchanged(seed in any::<u64>(), d in 2usize..5) {
            let scheme = random_scheme(d, seed);
            let mut rng = seeded_rng(seed ^ 0x5eed);
            let us: Vec<Operator> = (0..d).map(|_| random_unitary(d, &mut rng)).collect();
            let gauged = scheme.first().with_left_unitaries(&us).unwrap();
            for (a, b) in scheme.first().effects().iter().zip(gauged.effects()) {
                prop_assert!(a.approx_equal(&b, 1e-12).unwrap());
            }
            let m1 = marginalize_first(&compose_sequential(&scheme)).unwrap();
            let m2 = marginalize_first(&compose_sequential(&scheme.with_first(gauged).unwrap())).unwrap();
            for (a, b) in m1.outcomes().iter().zip(m2.outcomes()) {
                prop_assert!(a.approx_equal(b, 1e-12).unwrap());
            }
        }

        #[test]
        fn composed_schemes_are_valid_poms(seed in any::<u64>(), d in 2usize..6) {
            let pom = compose_sequential(&random_scheme(d, seed));
            prop_assert!(validate_pom(&pom, 1e-9).valid);
            prop_assert_eq!(pom.len(), d * d);
        }
    }
}

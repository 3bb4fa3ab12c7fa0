//! Explicit SIC constructions in dimensions 2, 3, 4 and 8, each as a direct
//! POM and as a two-step scheme, together with the mutually unbiased bases
//! used by the second step.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_6};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuzzy::{phase_basis, AnsatzScheme, FuzzyParams};
use crate::hwsic::{fourier_basis, FiducialKet};
use crate::linalg::{root_of_unity, Ket, Operator, C64, I, ONE, ZERO};
use crate::povm::{Basis, KrausSet, Label, Pom, SequentialScheme};

fn ket(values: Vec<C64>) -> Ket {
    Ket::new(values).expect("finite")
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Eigenbasis of `sigma_1`: `(1, 1)/sqrt2`, `(1, -1)/sqrt2`.
pub fn sigma1_basis() -> Basis {
    let h = FRAC_1_SQRT_2;
    Basis::new(vec![ket(vec![re(h), re(h)]), ket(vec![re(h), re(-h)])], 1e-14).expect("orthonormal")
}

/// Eigenbasis of `sigma_2`: `(1, i)/sqrt2`, `(1, -i)/sqrt2`.
pub fn sigma2_basis() -> Basis {
    let h = FRAC_1_SQRT_2;
    Basis::new(vec![ket(vec![re(h), I * h]), ket(vec![re(h), -I * h])], 1e-14).expect("orthonormal")
}

pub fn pauli_z() -> Operator {
    Operator::diagonal(&[ONE, -ONE])
}

pub fn pauli_x() -> Operator {
    Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

/// Kets of a matrix's columns, each scaled to weight `w` in a POM.
fn pom_from_matrices(matrices: &[Operator], weight: f64) -> Pom {
    let mut outcomes = Vec::new();
    let mut labels = Vec::new();
    for (i, m) in matrices.iter().enumerate() {
        for j in 0..m.dim() {
            outcomes.push(m.column(j).projector().scale_real(weight));
            labels.push(Label::pair(i, j));
        }
    }
    Pom::new(outcomes, labels).expect("non-empty")
}

/// Mutually unbiased bases, not counting the computational basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MubSet {
    dim: usize,
    bases: Vec<Basis>,
}

impl MubSet {
    pub fn new(bases: Vec<Basis>) -> Result<Self> {
        let dim = bases.first().ok_or(Error::EmptyPom)?.dim();
        if let Some(b) = bases.iter().find(|b| b.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: b.dim(),
            });
        }
        Ok(Self { dim, bases })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    /// The bases with the computational basis prepended.
    pub fn with_computational(&self) -> Vec<Basis> {
        std::iter::once(Basis::computational(self.dim))
            .chain(self.bases.iter().cloned())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MubReport {
    /// Number of bases checked, computational included.
    pub count: usize,
    /// `deviations[a][b]`: worst `| |<u|v>|^2 - 1/d |` over kets of bases `a != b`;
    /// index 0 is the computational basis.
    pub deviations: Vec<Vec<f64>>,
    pub worst: f64,
    pub all_unbiased: bool,
}

pub fn mub_pair_check(set: &MubSet, tol: f64) -> MubReport {
    let bases = set.with_computational();
    let n = bases.len();
    let target = 1.0 / set.dim as f64;
    let mut deviations = vec![vec![0.0; n]; n];
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let mut dev: f64 = 0.0;
            for u in bases[a].kets() {
                for v in bases[b].kets() {
                    dev = dev.max((u.inner(v).norm_sqr() - target).abs());
                }
            }
            deviations[a][b] = dev;
            deviations[b][a] = dev;
            worst = worst.max(dev);
        }
    }
    MubReport {
        count: n,
        deviations,
        worst,
        all_unbiased: worst <= tol,
    }
}

// ---------------------------------------------------------------- d = 2

/// `N = sqrt(3 + sqrt3)`, `chi = sqrt(2 + sqrt3)`.
pub fn tetrahedron_constants() -> (f64, f64) {
    let s3 = 3f64.sqrt();
    ((3.0 + s3).sqrt(), (2.0 + s3).sqrt())
}

/// The two matrices `[[chi, chi], [1, -1]]/N` and `[[1, 1], [i chi, -i chi]]/N`.
/// At the tetrahedron constants their columns are the four SIC kets; at
/// `N = sqrt2, chi = 1` they are the `sigma_1` and `sigma_2` bases.
pub fn tetrahedron_template(n: f64, chi: f64) -> [Operator; 2] {
    let s = 1.0 / n;
    [
        Operator::new(2, vec![re(chi * s), re(chi * s), re(s), re(-s)]).expect("2x2"),
        Operator::new(2, vec![re(s), re(s), I * chi * s, -I * chi * s]).expect("2x2"),
    ]
}

pub fn tetrahedron_pom() -> Pom {
    let (n, chi) = tetrahedron_constants();
    pom_from_matrices(&tetrahedron_template(n, chi), 0.5)
}

/// `(chi, e^{i pi/4})/N`, Bloch vector `(1, 1, 1)/sqrt3`. The template column
/// `(chi, 1)/N` has the same moduli but is not a fiducial for `X` and `Z`.
pub fn tetrahedron_fiducial() -> FiducialKet {
    let (n, chi) = tetrahedron_constants();
    FiducialKet::new(ket(vec![re(chi / n), C64::from_polar(1.0 / n, FRAC_PI_4)]), 1e-12).expect("normalized")
}

/// Fuzzy step with `lambda = 1/sqrt3`, then `sigma_1` after outcome 0 and
/// `sigma_2` after outcome 1.
pub fn tetrahedron_ansatz() -> AnsatzScheme {
    let params = FuzzyParams::new(2, 1.0 / 3f64.sqrt()).expect("in window");
    AnsatzScheme::new(params, vec![sigma1_basis(), sigma2_basis()]).expect("2 bases")
}

pub fn tetrahedron_scheme() -> SequentialScheme {
    tetrahedron_ansatz().to_sequential()
}

pub fn qubit_mubs() -> MubSet {
    MubSet::new(vec![sigma1_basis(), sigma2_basis()]).expect("non-empty")
}

// ---------------------------------------------------------------- d = 3

/// Family parameter, `0 <= gamma <= pi/6`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QutritGamma(f64);

impl QutritGamma {
    pub const MAX: f64 = FRAC_PI_6;

    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=Self::MAX).contains(&gamma) {
            return Err(Error::GammaOutOfRange(gamma));
        }
        Ok(Self(gamma))
    }

    /// Accepts any finite value; values outside the range give POMs
    /// equivalent to ones inside it.
    pub fn unchecked(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::NonFinite("gamma"));
        }
        Ok(Self(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn in_range(self) -> bool {
        (0.0..=Self::MAX).contains(&self.0)
    }
}

/// `(|k> - e^{2i gamma} w^j |k+1>)/sqrt2`.
pub fn qutrit_family_ket(g: QutritGamma, k: usize, j: usize) -> Ket {
    let mut amps = vec![ZERO; 3];
    amps[k % 3] = re(FRAC_1_SQRT_2);
    amps[(k + 1) % 3] = -C64::from_polar(FRAC_1_SQRT_2, 2.0 * g.0) * root_of_unity(3, j as i64);
    ket(amps)
}

/// Outcomes `|phi_kj><phi_kj|/3`, labelled `(k, j)`.
pub fn qutrit_family_direct(g: QutritGamma) -> Pom {
    let mut outcomes = Vec::with_capacity(9);
    let mut labels = Vec::with_capacity(9);
    for k in 0..3 {
        for j in 0..3 {
            outcomes.push(qutrit_family_ket(g, k, j).projector().scale_real(1.0 / 3.0));
            labels.push(Label::pair(k, j));
        }
    }
    Pom::new(outcomes, labels).expect("nine outcomes")
}

pub fn qutrit_family_fiducial(g: QutritGamma) -> FiducialKet {
    FiducialKet::new(qutrit_family_ket(g, 0, 0), 1e-12).expect("normalized")
}

/// Diagonal phases of `U_k = P_k - e^{-2i gamma} P_{k+1} + P_{k+2}`.
pub fn qutrit_phase_diagonal(g: QutritGamma, k: usize) -> Vec<C64> {
    let mut diag = vec![ONE; 3];
    diag[(k + 1) % 3] = -C64::from_polar(1.0, -2.0 * g.0);
    diag
}

/// Fuzzy step with `lambda = -1/2`; after outcome `k` the Fourier kets
/// carry the phases of [`qutrit_phase_diagonal`].
pub fn qutrit_family_ansatz(g: QutritGamma) -> AnsatzScheme {
    let fourier = fourier_basis(3).expect("d = 3");
    let bases = (0..3)
        .map(|k| phase_basis(&fourier, &qutrit_phase_diagonal(g, k)))
        .collect();
    AnsatzScheme::new(FuzzyParams::new(3, -0.5).expect("window edge"), bases).expect("3 bases")
}

pub fn qutrit_family_scheme(g: QutritGamma) -> SequentialScheme {
    qutrit_family_ansatz(g).to_sequential()
}

// ---------------------------------------------------------------- d = 4

/// `N = sqrt(5 + sqrt5)`, `chi = sqrt(2 + sqrt5)`.
pub fn dim4_constants() -> (f64, f64) {
    let s5 = 5f64.sqrt();
    ((5.0 + s5).sqrt(), (2.0 + s5).sqrt())
}

/// The four fiducial matrices. At `N = 2, chi = 1`
/// they equal the unitaries `U_1, U_3, U_2, U_4` of [`dim4_unitaries`].
pub fn dim4_template(n: f64, chi: f64) -> [Operator; 4] {
    let (o, c) = (ONE, re(chi));
    let rows = [
        [c, c, c, c, o, -o, o, -o, o, o, -o, -o, o, -o, -o, o],
        [o, o, o, o, o, -o, o, -o, I * c, I * c, -I * c, -I * c, -I, I, I, -I],
        [o, o, o, o, I * c, -I * c, I * c, -I * c, I, I, -I, -I, -o, o, o, -o],
        [o, o, o, o, I, -I, I, -I, o, o, -o, -o, -I * c, I * c, I * c, -I * c],
    ];
    rows.map(|r| Operator::new(4, r.iter().map(|x| x / n).collect()).expect("4x4"))
}

/// `U_1 .. U_4`, each with orthonormal columns.
pub fn dim4_unitaries() -> [Operator; 4] {
    let t = dim4_template(2.0, 1.0);
    [t[0].clone(), t[2].clone(), t[1].clone(), t[3].clone()]
}

/// `A_i = diag(.., chi at i, ..)/N`, `i = 0..4`.
pub fn dim4_kraus() -> [Operator; 4] {
    let (n, chi) = dim4_constants();
    std::array::from_fn(|i| {
        let diag: Vec<C64> = (0..4).map(|p| re(if p == i { chi / n } else { 1.0 / n })).collect();
        Operator::diagonal(&diag)
    })
}

fn cz() -> Operator {
    Operator::diagonal(&[ONE, ONE, ONE, -ONE])
}

fn product_basis(a: &Basis, b: &Basis) -> Vec<Ket> {
    a.kets()
        .iter()
        .flat_map(|x| b.kets().iter().map(move |y| x.kron(y)))
        .collect()
}

/// `sigma_1 x sigma_1`, `sigma_2 x sigma_2`, `CZ(sigma_2 x sigma_1)`, `CZ(sigma_1 x sigma_2)`.
pub fn dim4_mubs() -> MubSet {
    let (s1, s2) = (sigma1_basis(), sigma2_basis());
    let cz = cz();
    let entangled = |a: &Basis, b: &Basis| {
        Basis::new(product_basis(a, b).iter().map(|k| cz.apply(k)).collect(), 1e-14).expect("orthonormal")
    };
    MubSet::new(vec![
        Basis::new(product_basis(&s1, &s1), 1e-14).expect("orthonormal"),
        Basis::new(product_basis(&s2, &s2), 1e-14).expect("orthonormal"),
        entangled(&s2, &s1),
        entangled(&s1, &s2),
    ])
    .expect("non-empty")
}

/// `(chi, 1, 1, 1)/N`, the first column of the first fiducial matrix.
pub fn dim4_fiducial() -> FiducialKet {
    let (n, chi) = dim4_constants();
    FiducialKet::new(ket(vec![re(chi / n), re(1.0 / n), re(1.0 / n), re(1.0 / n)]), 1e-12).expect("normalized")
}

pub fn dim4_ansatz() -> AnsatzScheme {
    let bases = dim4_unitaries()
        .iter()
        .map(|u| Basis::from_unitary(u, 1e-14).expect("unitary"))
        .collect();
    AnsatzScheme::new(FuzzyParams::new(4, 1.0 / 5f64.sqrt()).expect("in window"), bases).expect("4 bases")
}

#[derive(Clone, Debug)]
pub struct Dim4Catalog {
    pub pom: Pom,
    pub scheme: SequentialScheme,
    pub mubs: MubSet,
}

pub fn dim4_catalog() -> Dim4Catalog {
    let (n, chi) = dim4_constants();
    let pom = pom_from_matrices(&dim4_template(n, chi), 0.25);
    let kraus = KrausSet::new(dim4_kraus().to_vec(), 1e-12).expect("complete");
    let bases = dim4_unitaries()
        .iter()
        .map(|u| Basis::from_unitary(u, 1e-14).expect("unitary"))
        .collect();
    Dim4Catalog {
        pom,
        scheme: SequentialScheme::new(kraus, bases).expect("shapes"),
        mubs: dim4_mubs(),
    }
}

// ---------------------------------------------------------------- d = 8

/// `(sqrt2, 0, -w*, w*, -w, -w*, 0, 0)/sqrt6` with `w = e^{i pi/4}`.
pub fn hoggar_fiducial() -> FiducialKet {
    let w = C64::from_polar(1.0, FRAC_PI_4);
    let wc = w.conj();
    let s = 1.0 / 6f64.sqrt();
    let amps = vec![re(2f64.sqrt()), ZERO, -wc, wc, -w, -wc, ZERO, ZERO];
    FiducialKet::new(ket(amps.into_iter().map(|a| a * s).collect()), 1e-12).expect("normalized")
}

/// Three-qubit Pauli operator `Z^n X^k (x) Z^r X^l (x) Z^s X^m`, exponents mod 2.
pub fn three_qubit_pauli(x: [usize; 3], z: [usize; 3]) -> Operator {
    let factor = |xe: usize, ze: usize| &pauli_z().pow(ze % 2) * &pauli_x().pow(xe % 2);
    factor(x[0], z[0]).kron(&factor(x[1], z[1])).kron(&factor(x[2], z[2]))
}

/// 64 outcomes `|v><v|/8` for `v = P phi`, labelled `(k, l, m, n, r, s)` with
/// the X exponents `k, l, m` and Z exponents `n, r, s` reduced to `{0, 1}`.
pub fn hoggar_pom() -> Pom {
    let phi = hoggar_fiducial();
    let mut outcomes = Vec::with_capacity(64);
    let mut labels = Vec::with_capacity(64);
    for bits in 0..64usize {
        let b = |i: usize| (bits >> (5 - i)) & 1;
        let (x, z) = ([b(0), b(1), b(2)], [b(3), b(4), b(5)]);
        let v = three_qubit_pauli(x, z).apply(phi.ket());
        outcomes.push(v.projector().scale_real(0.125));
        labels.push(Label::new(vec![x[0], x[1], x[2], z[0], z[1], z[2]]));
    }
    Pom::new(outcomes, labels).expect("64 outcomes")
}

/// The eight diagonal operators `A_1 .. A_8` (prefactor `2/sqrt3` included).
pub fn hoggar_diagonals() -> [Operator; 8] {
    let w = C64::from_polar(1.0, FRAC_PI_4);
    let wc = w.conj();
    let r2 = re(2f64.sqrt());
    let rows: [[C64; 8]; 8] = [
        [ZERO, -I * r2, wc, I * wc, -wc, -I * w, ZERO, ZERO],
        [-wc, wc, -I * r2, ZERO, ZERO, ZERO, I * w, I * wc],
        [wc, I * wc, ZERO, r2, ZERO, ZERO, -I * wc, w],
        [-w, -wc, ZERO, ZERO, -I * r2, ZERO, -I * wc, -I * wc],
        [-wc, I * w, ZERO, ZERO, ZERO, r2, -I * wc, wc],
        [ZERO, ZERO, I * w, I * wc, I * wc, I * wc, r2, ZERO],
        [ZERO, ZERO, I * wc, w, -I * wc, wc, ZERO, I * r2],
        [r2, ZERO, -wc, wc, -w, -wc, ZERO, ZERO],
    ];
    let pre = 2.0 / 3f64.sqrt();
    rows.map(|r| Operator::diagonal(&r.map(|x| x * pre)))
}

fn check_triplet(t: [usize; 3]) {
    assert!(t.iter().all(|v| (1..=2).contains(v)), "triplet entries must be 1 or 2");
}

/// `(1 + Z^k Z^l Z^m + Z^{1-k} Z^{1-l} Z^{1-m} - ZZZ)/2`, exponents mod 2,
/// for `k, l, m` in `{1, 2}`.
pub fn g_operator(k: usize, l: usize, m: usize) -> Operator {
    check_triplet([k, l, m]);
    let zpow = |e: usize| pauli_z().pow(e % 2);
    let triple = |a: usize, b: usize, c: usize| zpow(a).kron(&zpow(b)).kron(&zpow(c));
    let sum = &(&Operator::identity(8) + &triple(k, l, m)) + &triple(1 + k, 1 + l, 1 + m);
    (&sum - &triple(1, 1, 1)).scale_real(0.5)
}

/// Basis `{G(k,l,m) e^l_n (x) e^m_r (x) e^k_s}` ordered by `(n, r, s)`,
/// with `e^1` the `sigma_1` basis and `e^2` the `sigma_2` basis.
pub fn hoggar_mub_basis(k: usize, l: usize, m: usize) -> Basis {
    check_triplet([k, l, m]);
    let e = |b: usize| if b == 1 { sigma1_basis() } else { sigma2_basis() };
    let (first, second, third) = (e(l), e(m), e(k));
    let g = g_operator(k, l, m);
    let mut kets = Vec::with_capacity(8);
    for x in first.kets() {
        for y in second.kets() {
            for z in third.kets() {
                kets.push(g.apply(&x.kron(y).kron(z)));
            }
        }
    }
    Basis::new(kets, 1e-12).expect("orthonormal")
}

/// Triplet `(k, l, m)` paired with `A_{a+1}`: `a + 1 = (k-1) + 2(m-1) + 4(l-1)`,
/// with 0 standing for 8.
pub fn hoggar_triplet_for(a: usize) -> [usize; 3] {
    let code = (a + 1) % 8;
    [1 + (code & 1), 1 + ((code >> 2) & 1), 1 + ((code >> 1) & 1)]
}

pub fn hoggar_mubs() -> MubSet {
    MubSet::new(
        (0..8)
            .map(|a| {
                let [k, l, m] = hoggar_triplet_for(a);
                hoggar_mub_basis(k, l, m)
            })
            .collect(),
    )
    .expect("non-empty")
}

#[derive(Clone, Debug)]
pub struct HoggarCatalog {
    pub pom: Pom,
    pub scheme: SequentialScheme,
    pub mubs: MubSet,
}

/// First step `K_a = A_{a+1}^dagger / sqrt8`, then the paired basis.
pub fn hoggar_catalog() -> HoggarCatalog {
    let s = 1.0 / 8f64.sqrt();
    let kraus = hoggar_diagonals().iter().map(|a| a.dagger().scale_real(s)).collect();
    let first = KrausSet::new(kraus, 1e-12).expect("complete");
    let mubs = hoggar_mubs();
    HoggarCatalog {
        pom: hoggar_pom(),
        scheme: SequentialScheme::new(first, mubs.bases().to_vec()).expect("shapes"),
        mubs,
    }
}

// ---------------------------------------------------------------- lookup

/// A built-in construction for one dimension.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub pom: Pom,
    pub scheme: SequentialScheme,
    pub mubs: MubSet,
    pub ansatz: Option<AnsatzScheme>,
    pub fiducial: FiducialKet,
}

/// Catalog entry for `d` in `{2, 3, 4, 8}`; `gamma` is used only for `d = 3`.
pub fn catalog_entry(d: usize, gamma: QutritGamma) -> Result<CatalogEntry> {
    match d {
        2 => Ok(CatalogEntry {
            pom: tetrahedron_pom(),
            scheme: tetrahedron_scheme(),
            mubs: qubit_mubs(),
            ansatz: Some(tetrahedron_ansatz()),
            fiducial: tetrahedron_fiducial(),
        }),
        3 => {
            let ansatz = qutrit_family_ansatz(gamma);
            Ok(CatalogEntry {
                pom: qutrit_family_direct(gamma),
                scheme: ansatz.to_sequential(),
                mubs: MubSet::new(ansatz.bases().to_vec()).expect("non-empty"),
                ansatz: Some(ansatz),
                fiducial: qutrit_family_fiducial(gamma),
            })
        }
        4 => {
            let c = dim4_catalog();
            Ok(CatalogEntry {
                pom: c.pom,
                scheme: c.scheme,
                mubs: c.mubs,
                ansatz: Some(dim4_ansatz()),
                fiducial: dim4_fiducial(),
            })
        }
        8 => {
            let c = hoggar_catalog();
            Ok(CatalogEntry {
                pom: c.pom,
                scheme: c.scheme,
                mubs: c.mubs,
                ansatz: None,
                fiducial: hoggar_fiducial(),
            })
        }
        _ => Err(Error::InvalidDimension(d)),
    }
}

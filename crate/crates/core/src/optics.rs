//! Single-photon linear optics: beam splitters, phase shifters, circuits,
//! and the two-stage apparatus that realizes a sequential scheme for a
//! path-encoded qudit.
//!
//! A beam splitter on modes `(a, b)` acts by the block `[[t, -r*], [r, t*]]`,
//! so a photon entering `a` leaves as `t` in `a` and `r` in `b`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hwsic::fourier_basis;
use crate::linalg::{Ket, Operator, C64, ONE, ZERO};
use crate::povm::{check_density, clip_probabilities, Label, SequentialScheme};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitter {
    pub mode_a: usize,
    pub mode_b: usize,
    pub t: C64,
    pub r: C64,
}

impl BeamSplitter {
    pub fn new(mode_a: usize, mode_b: usize, t: C64, r: C64) -> Result<Self> {
        if mode_a == mode_b {
            return Err(Error::InvalidScheme(format!("beam splitter on a single mode {mode_a}")));
        }
        let dev = (t.norm_sqr() + r.norm_sqr() - 1.0).abs();
        if dev > 1e-9 || !(t.is_finite() && r.is_finite()) {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { mode_a, mode_b, t, r })
    }

    /// The 2x2 block acting on `(a, b)`.
    pub fn block(&self) -> [[C64; 2]; 2] {
        [[self.t, -self.r.conj()], [self.r, self.t.conj()]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseShifter {
    pub mode: usize,
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ElementJson {
    Bs { a: usize, b: usize, t: [f64; 2], r: [f64; 2] },
    Ps { mode: usize, phase: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementJson", into = "ElementJson")]
pub enum Element {
    Bs(BeamSplitter),
    Ps(PhaseShifter),
}

impl TryFrom<ElementJson> for Element {
    type Error = Error;

    fn try_from(j: ElementJson) -> Result<Self> {
        match j {
            ElementJson::Bs { a, b, t, r } => Ok(Element::Bs(BeamSplitter::new(
                a,
                b,
                C64::new(t[0], t[1]),
                C64::new(r[0], r[1]),
            )?)),
            ElementJson::Ps { mode, phase } => {
                if !phase.is_finite() {
                    return Err(Error::NonFinite("phase"));
                }
                Ok(Element::Ps(PhaseShifter { mode, phase }))
            }
        }
    }
}

impl From<Element> for ElementJson {
    fn from(e: Element) -> Self {
        match e {
            Element::Bs(bs) => ElementJson::Bs {
                a: bs.mode_a,
                b: bs.mode_b,
                t: [bs.t.re, bs.t.im],
                r: [bs.r.re, bs.r.im],
            },
            Element::Ps(ps) => ElementJson::Ps {
                mode: ps.mode,
                phase: ps.phase,
            },
        }
    }
}

impl Element {
    fn max_mode(&self) -> usize {
        match self {
            Element::Bs(bs) => bs.mode_a.max(bs.mode_b),
            Element::Ps(ps) => ps.mode,
        }
    }

    fn shifted(&self, offset: usize) -> Element {
        match *self {
            Element::Bs(bs) => Element::Bs(BeamSplitter {
                mode_a: bs.mode_a + offset,
                mode_b: bs.mode_b + offset,
                ..bs
            }),
            Element::Ps(ps) => Element::Ps(PhaseShifter {
                mode: ps.mode + offset,
                ..ps
            }),
        }
    }

    /// Applies the element to a vector of mode amplitudes in place.
    fn act(&self, amps: &mut [C64]) {
        match self {
            Element::Bs(bs) => {
                let [[a, b], [c, d]] = bs.block();
                let (x, y) = (amps[bs.mode_a], amps[bs.mode_b]);
                amps[bs.mode_a] = a * x + b * y;
                amps[bs.mode_b] = c * x + d * y;
            }
            Element::Ps(ps) => amps[ps.mode] *= C64::from_polar(1.0, ps.phase),
        }
    }
}

/// Elements applied in list order to `modes` path modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitJson", into = "CircuitJson")]
pub struct Circuit {
    modes: usize,
    elements: Vec<Element>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitJson {
    modes: usize,
    elements: Vec<Element>,
}

impl TryFrom<CircuitJson> for Circuit {
    type Error = Error;

    fn try_from(j: CircuitJson) -> Result<Self> {
        Circuit::new(j.modes, j.elements)
    }
}

impl From<Circuit> for CircuitJson {
    fn from(c: Circuit) -> Self {
        CircuitJson {
            modes: c.modes,
            elements: c.elements,
        }
    }
}

impl Circuit {
    pub fn new(modes: usize, elements: Vec<Element>) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(e) = elements.iter().find(|e| e.max_mode() >= modes) {
            return Err(Error::ModeOutOfRange {
                mode: e.max_mode(),
                modes,
            });
        }
        Ok(Self { modes, elements })
    }

    pub fn empty(modes: usize) -> Self {
        Self {
            modes,
            elements: Vec::new(),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn beam_splitter_count(&self) -> usize {
        self.elements.iter().filter(|e| matches!(e, Element::Bs(_))).count()
    }

    /// Appends `other`'s elements, acting on modes `offset..offset + other.modes`.
    pub fn append_shifted(&mut self, other: &Circuit, offset: usize) -> Result<()> {
        if offset + other.modes > self.modes {
            return Err(Error::ModeOutOfRange {
                mode: offset + other.modes - 1,
                modes: self.modes,
            });
        }
        self.elements.extend(other.elements.iter().map(|e| e.shifted(offset)));
        Ok(())
    }

    /// Mode transfer matrix `T`: output amplitudes are `T` times input amplitudes.
    pub fn transfer(&self) -> Operator {
        let columns: Vec<Ket> = (0..self.modes)
            .map(|j| self.propagate(Ket::basis(self.modes, j).amplitudes().to_vec()))
            .map(|amps| Ket::new(amps).expect("finite"))
            .collect();
        Operator::from_columns(&columns).expect("square")
    }

    fn propagate(&self, mut amps: Vec<C64>) -> Vec<C64> {
        for e in &self.elements {
            e.act(&mut amps);
        }
        amps
    }
}

/// Propagates a normalized single-photon amplitude vector through `circuit`.
pub fn simulate(circuit: &Circuit, input: &Ket) -> Result<Ket> {
    if input.dim() != circuit.modes {
        return Err(Error::DimensionMismatch {
            expected: circuit.modes,
            found: input.dim(),
        });
    }
    if !input.is_normalized(1e-9) {
        return Err(Error::NotNormalized(input.norm()));
    }
    Ket::new(circuit.propagate(input.amplitudes().to_vec()))
}

/// Beam splitters peeling amplitude off one input path.
///
/// Splitter `n` (for `n = 1..d`) takes the still-transmitted amplitude and
/// reflects `targets[n]` into branch `n`; what is transmitted through all of
/// them, after `final_phase`, is `targets[0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCascade {
    /// `(r_n, t_n)` for `n = 1..d`, `t_n` real and non-negative.
    pub splitters: Vec<(C64, f64)>,
    pub final_phase: f64,
}

impl PathCascade {
    /// Amplitude routed to each branch, branch 0 being the transmitted one.
    pub fn routed(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.splitters.len() + 1];
        let mut cum = ONE;
        for (n, (r, t)) in self.splitters.iter().enumerate() {
            out[n + 1] = cum * r;
            cum *= *t;
        }
        out[0] = cum * C64::from_polar(1.0, self.final_phase);
        out
    }
}

/// Cascade whose [`PathCascade::routed`] output is `targets`.
pub fn solve_path(targets: &[C64]) -> Result<PathCascade> {
    let total: f64 = targets.iter().map(|t| t.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(total.sqrt()));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("cascade target"));
    }
    // remaining[n]: mass still in the input path after splitter n
    let mut remaining = vec![0.0; targets.len()];
    let mut tail = targets.first().map_or(0.0, |t| t.norm_sqr());
    for n in (0..targets.len()).rev() {
        remaining[n] = tail;
        tail += if n > 0 { targets[n].norm_sqr() } else { 0.0 };
    }
    let mut splitters = Vec::with_capacity(targets.len().saturating_sub(1));
    let mut before = total;
    for (n, target) in targets.iter().enumerate().skip(1) {
        if target.norm() == 0.0 {
            splitters.push((ZERO, 1.0));
            continue;
        }
        let scale = before.sqrt();
        if scale == 0.0 {
            return Err(Error::InfeasibleCascade(format!("branch {n} after transmission is exhausted")));
        }
        splitters.push((target / scale, remaining[n].sqrt() / scale));
        before = remaining[n];
    }
    Ok(PathCascade {
        splitters,
        final_phase: targets.first().map_or(0.0, |t| t.arg()),
    })
}

/// Cascades for every input path `p`, routing `alphas[p - g]` to group `g`.
pub fn solve_bs_cascade(alphas: &[C64]) -> Result<Vec<PathCascade>> {
    let d = alphas.len();
    (0..d)
        .map(|p| {
            let targets: Vec<C64> = (0..d).map(|g| alphas[(p + d - g) % d]).collect();
            solve_path(&targets)
        })
        .collect()
}

/// Triangular decomposition: beam splitters on neighbouring modes followed by
/// output phase shifters, with transfer matrix equal to `u`.
pub fn reck_decompose(u: &Operator, tol: f64) -> Result<Circuit> {
    let dev = u.unitarity_deviation();
    if dev > tol {
        return Err(Error::NotUnitary(dev));
    }
    let n = u.dim();
    let mut m = u.dagger();
    let mut elements = Vec::new();
    for c in 0..n {
        for i in (c + 1..n).rev() {
            let (x, y) = (m[(i - 1, c)], m[(i, c)]);
            if y.norm() <= 1e-15 {
                continue;
            }
            let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (t, r) = (x.conj() / rho, -y / rho);
            let bs = BeamSplitter::new(i - 1, i, t, r).expect("unit norm");
            // rows (i-1, i) of m are mixed by the same block
            let [[a, b], [cc, dd]] = bs.block();
            for col in 0..n {
                let (p, q) = (m[(i - 1, col)], m[(i, col)]);
                m[(i - 1, col)] = a * p + b * q;
                m[(i, col)] = cc * p + dd * q;
            }
            elements.push(Element::Bs(bs));
        }
    }
    for i in 0..n {
        let phase = -m[(i, i)].arg();
        if phase.abs() >= 1e-14 {
            elements.push(Element::Ps(PhaseShifter { mode: i, phase }));
        }
    }
    Circuit::new(n, elements)
}

/// Phases `a`, `b` with `target = diag(e^{ia}) c diag(e^{ib})` within `tol`, if any.
pub fn phase_match(target: &Operator, c: &Operator, tol: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = target.dim();
    if c.dim() != n || (0..n).any(|i| c[(i, 0)].norm() < 1e-9 || c[(0, i)].norm() < 1e-9) {
        return None;
    }
    let a: Vec<f64> = (0..n).map(|i| (target[(i, 0)] / c[(i, 0)]).arg()).collect();
    let b: Vec<f64> = (0..n).map(|j| (target[(0, j)] / c[(0, j)]).arg() - a[0]).collect();
    let fixed = Operator::from_fn(n, |i, j| c[(i, j)] * C64::from_polar(1.0, a[i] + b[j]));
    (fixed.max_abs_diff(target).ok()? <= tol).then_some((a, b))
}

/// The three two-mode blocks `(s3 + s1)/sqrt2`, `(s3 + sqrt2 s1)/sqrt3`,
/// `(s3 + s2)/sqrt2`, each built as a pi phase on mode `b` followed by a
/// beam splitter.
fn fourier_blocks(pairs: [(usize, usize); 3]) -> Vec<Element> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let params = [
        (C64::new(h, 0.0), C64::new(h, 0.0)),
        (C64::new(1.0 / 3f64.sqrt(), 0.0), C64::new((2.0f64 / 3.0).sqrt(), 0.0)),
        (C64::new(h, 0.0), C64::new(0.0, h)),
    ];
    pairs
        .iter()
        .zip(params)
        .flat_map(|(&(a, b), (t, r))| {
            [
                Element::Ps(PhaseShifter {
                    mode: b,
                    phase: std::f64::consts::PI,
                }),
                Element::Bs(BeamSplitter::new(a, b, t, r).expect("unit norm")),
            ]
        })
        .collect()
}

/// Ordered mode pairs for the three blocks whose product equals the qutrit
/// Fourier matrix up to input and output phases.
pub fn qutrit_fourier_assignments() -> Vec<[(usize, usize); 3]> {
    let pairs = [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)];
    let target = fourier_basis(3).expect("d = 3").unitary();
    let mut hits = Vec::new();
    for &p1 in &pairs {
        for &p2 in &pairs {
            for &p3 in &pairs {
                let c = Circuit::new(3, fourier_blocks([p1, p2, p3])).expect("3 modes");
                if phase_match(&target, &c.transfer(), 1e-10).is_some() {
                    hits.push([p1, p2, p3]);
                }
            }
        }
    }
    hits
}

/// Three beam splitters plus phase shifters realizing the qutrit Fourier matrix.
/// The first assignment found is `(0,1)`, `(2,1)`, `(0,1)`.
pub fn qutrit_fourier_circuit() -> Circuit {
    let pairs = qutrit_fourier_assignments()[0];
    let core = Circuit::new(3, fourier_blocks(pairs)).expect("3 modes");
    let target = fourier_basis(3).expect("d = 3").unitary();
    let (a, b) = phase_match(&target, &core.transfer(), 1e-10).expect("assignment matches");
    let phase = |mode: usize, phase: f64| Element::Ps(PhaseShifter { mode, phase });
    let mut elements: Vec<Element> = b.iter().enumerate().map(|(m, &x)| phase(m, x)).collect();
    elements.extend(core.elements);
    elements.extend(a.iter().enumerate().map(|(m, &x)| phase(m, x)));
    Circuit::new(3, elements).expect("3 modes")
}

/// Two-stage interferometer on `d^2` modes; mode `g d + p` is path `p` of group `g`.
///
/// Stage 1 sends input path `p` (mode `p`) to mode `g d + p` with amplitude
/// `K_g[p, p]`. Stage 2 rotates group `g` so that detector `g d + j` fires
/// with amplitude `<j(g)| K_g |psi>`.
#[derive(Clone, Debug, PartialEq)]
pub struct Apparatus {
    dim: usize,
    stage1: Circuit,
    stage2: Vec<Circuit>,
    detectors: Vec<Label>,
}

impl Apparatus {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stage1(&self) -> &Circuit {
        &self.stage1
    }

    pub fn stage2(&self) -> &[Circuit] {
        &self.stage2
    }

    /// Outcome label of each detector, indexed by mode.
    pub fn detectors(&self) -> &[Label] {
        &self.detectors
    }

    pub fn full_circuit(&self) -> Circuit {
        let mut full = self.stage1.clone();
        for (g, c) in self.stage2.iter().enumerate() {
            full.append_shifted(c, g * self.dim).expect("group fits");
        }
        full
    }

    /// Columns of the full transfer matrix for the `d` input modes.
    pub fn input_transfer(&self) -> Vec<Ket> {
        let t = self.full_circuit().transfer();
        (0..self.dim).map(|p| t.column(p)).collect()
    }

    /// `max |T^dagger T - 1|` over the input modes.
    pub fn isometry_deviation(&self) -> f64 {
        let cols = self.input_transfer();
        let mut worst: f64 = 0.0;
        for (i, a) in cols.iter().enumerate() {
            for (j, b) in cols.iter().enumerate() {
                let expected = if i == j { ONE } else { ZERO };
                worst = worst.max((a.inner(b) - expected).norm());
            }
        }
        worst
    }

    /// Detector click probabilities `diag(T rho T^dagger)` for input state `rho`.
    pub fn distribution(&self, rho: &Operator, tol: f64) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        check_density(rho, tol)?;
        let cols = self.input_transfer();
        let modes = self.dim * self.dim;
        let raw = (0..modes)
            .map(|q| {
                let mut p = ZERO;
                for a in 0..self.dim {
                    for b in 0..self.dim {
                        p += cols[a].amplitudes()[q] * rho[(a, b)] * cols[b].amplitudes()[q].conj();
                    }
                }
                p.re
            })
            .collect();
        clip_probabilities(raw, tol)
    }
}

/// Builds the apparatus for a scheme whose first-step Kraus operators are diagonal.
pub fn build_apparatus(scheme: &SequentialScheme, tol: f64) -> Result<Apparatus> {
    let d = scheme.dim();
    if scheme.first().len() != d {
        return Err(Error::InvalidScheme(format!(
            "{} first-step outcomes, optical layout needs {d}",
            scheme.first().len()
        )));
    }
    let kraus = scheme.first().operators();
    if let Some(i) = kraus.iter().position(|k| !k.is_diagonal(tol)) {
        return Err(Error::NonDiagonalKraus(i));
    }

    let modes = d * d;
    let mut stage1 = Vec::new();
    for p in 0..d {
        let targets: Vec<C64> = kraus.iter().map(|k| k[(p, p)]).collect();
        let cascade = solve_path(&targets)?;
        for (n, (r, t)) in cascade.splitters.iter().enumerate() {
            if r.norm() == 0.0 {
                continue;
            }
            let bs = BeamSplitter::new(p, (n + 1) * d + p, C64::new(*t, 0.0), *r)?;
            stage1.push(Element::Bs(bs));
        }
        if cascade.final_phase.abs() >= 1e-14 {
            stage1.push(Element::Ps(PhaseShifter {
                mode: p,
                phase: cascade.final_phase,
            }));
        }
    }
    let stage1 = Circuit::new(modes, stage1)?;

    // W_g = V_g^dagger; reuse the first group's network when W_g differs only by input phases.
    let rotations: Vec<Operator> = scheme.second().iter().map(|b| b.unitary().dagger()).collect();
    let reference = &rotations[0];
    let reference_circuit = reck_decompose(reference, tol)?;
    let mut stage2 = Vec::with_capacity(d);
    for w in &rotations {
        let diff = &reference.dagger() * w;
        if diff.is_diagonal(tol) {
            let mut elements: Vec<Element> = diff
                .diagonal_entries()
                .iter()
                .enumerate()
                .filter(|(_, z)| z.arg().abs() >= 1e-14)
                .map(|(mode, z)| Element::Ps(PhaseShifter { mode, phase: z.arg() }))
                .collect();
            elements.extend_from_slice(reference_circuit.elements());
            stage2.push(Circuit::new(d, elements)?);
        } else {
            stage2.push(reck_decompose(w, tol)?);
        }
    }

    let detectors = (0..modes).map(|q| Label::pair(q / d, q % d)).collect();
    Ok(Apparatus {
        dim: d,
        stage1,
        stage2,
        detectors,
    })
}

/// Multinomial counts for `shots` draws from `probs`, deterministic in `seed`.
pub fn sample_counts(probs: &[f64], shots: u64, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidProbabilities("negative or non-finite entry".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    let mut counts = Vec::with_capacity(probs.len());
    for (i, p) in probs.iter().enumerate() {
        let last = i + 1 == probs.len();
        let c = if last || remaining == 0 {
            remaining
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidProbabilities(e.to_string()))?
                .sample(&mut rng)
        };
        counts.push(c);
        remaining -= c;
        mass -= p;
        if mass <= 0.0 {
            mass = f64::MIN_POSITIVE;
        }
    }
    Ok(counts)
}

pub fn sample_clicks(apparatus: &Apparatus, rho: &Operator, shots: u64, seed: u64, tol: f64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    sample_counts(&apparatus.distribution(rho, tol)?, shots, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{dim4_fiducial, qutrit_family_scheme, tetrahedron_scheme, QutritGamma};
    use crate::hwsic::{decompose_hw, FiducialKet};
    use crate::linalg::I;
    use crate::povm::{born_probabilities, compose_sequential, Basis, KrausSet};
    use crate::random::{random_density, random_pure_state, random_unitary, seeded_rng};
    use proptest::prelude::*;

    const TOL: f64 = 1e-10;

    fn balanced() -> BeamSplitter {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        BeamSplitter::new(0, 1, C64::new(h, 0.0), C64::new(h, 0.0)).unwrap()
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::empty(3);
        let input = random_pure_state(3, &mut seeded_rng(1));
        assert_eq!(simulate(&c, &input).unwrap(), input);
        assert!(c.transfer().approx_equal(&Operator::identity(3), 0.0).unwrap());
    }

    #[test]
    fn balanced_splitter_output() {
        let c = Circuit::new(2, vec![Element::Bs(balanced())]).unwrap();
        let out = simulate(&c, &Ket::basis(2, 0)).unwrap();
        let bs = balanced();
        assert_eq!(out.amplitudes(), &[bs.t, bs.r]);
        assert!((out.amplitudes()[0].norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn circuit_validation() {
        assert!(matches!(
            Circuit::new(2, vec![Element::Ps(PhaseShifter { mode: 2, phase: 0.0 })]),
            Err(Error::ModeOutOfRange { mode: 2, modes: 2 })
        ));
        assert!(BeamSplitter::new(0, 1, ONE, ONE).is_err());
        assert!(BeamSplitter::new(1, 1, ONE, ZERO).is_err());
        let c = Circuit::empty(2);
        assert!(matches!(simulate(&c, &Ket::basis(3, 0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn circuit_json_shape() {
        let c = Circuit::new(
            2,
            vec![
                Element::Bs(BeamSplitter::new(0, 1, ONE, ZERO).unwrap()),
                Element::Ps(PhaseShifter { mode: 1, phase: 0.5 }),
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(
            text,
            r#"{"modes":2,"elements":[{"type":"bs","a":0,"b":1,"t":[1.0,0.0],"r":[0.0,0.0]},{"type":"ps","mode":1,"phase":0.5}]}"#
        );
        assert_eq!(serde_json::from_str::<Circuit>(&text).unwrap(), c);
        assert!(serde_json::from_str::<Circuit>(&text.replace("\"b\":1", "\"b\":5")).is_err());
    }

    #[test]
    fn cascade_balanced_qubit() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let cascades = solve_bs_cascade(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        for c in &cascades {
            assert_eq!(c.splitters.len(), 1);
            let (r, t) = c.splitters[0];
            assert!((r.norm_sqr() - 0.5).abs() < 1e-15 && (t * t - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn cascade_with_zero_amplitude() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let alphas = [C64::new(h, 0.0), C64::from_polar(h, 0.7), ZERO];
        let cascades = solve_bs_cascade(&alphas).unwrap();
        for (p, c) in cascades.iter().enumerate() {
            let routed = c.routed();
            for g in 0..3 {
                assert!((routed[g] - alphas[(p + 3 - g) % 3]).norm() < 1e-15);
            }
        }
        // path 0: targets (a0, a2, a1) = (h, 0, h e^{0.7i}); first splitter idle, second reflects everything
        let (r1, t1) = cascades[0].splitters[0];
        assert_eq!((r1, t1), (ZERO, 1.0));
        assert!((cascades[0].splitters[1].0.norm() - h).abs() < 1e-15);
    }

    #[test]
    fn cascade_with_dark_branch_closes_exactly() {
        let h = C64::new(0.5f64.sqrt(), 0.0);
        let c = solve_path(&[h, h * I, ZERO]).unwrap();
        assert_eq!(c.splitters[1], (ZERO, 1.0));
        let c = solve_path(&[ZERO, h, -h]).unwrap();
        assert_eq!(c.splitters[1].1, 0.0);
        assert!(c.routed().iter().zip([ZERO, h, -h]).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn cascade_errors_and_exhaustion() {
        assert!(matches!(solve_path(&[ONE, ONE]), Err(Error::NotNormalized(_))));
        // everything reflected at the first splitter, later branches idle
        let c = solve_path(&[ZERO, ONE, ZERO, ZERO]).unwrap();
        assert_eq!(c.splitters[0].1, 0.0);
        assert_eq!(c.routed(), vec![ZERO, ONE, ZERO, ZERO]);
    }

    #[test]
    fn reck_identity_and_fourier() {
        let c = reck_decompose(&Operator::identity(4), TOL).unwrap();
        assert!(c.elements().is_empty());
        let f3 = fourier_basis(3).unwrap().unitary();
        let c = reck_decompose(&f3, TOL).unwrap();
        assert!(c.beam_splitter_count() <= 3);
        assert!(c.transfer().approx_equal(&f3, 1e-12).unwrap());
        assert!(matches!(
            reck_decompose(&Operator::identity(2).scale_real(2.0), TOL),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn qutrit_fourier_from_three_splitters() {
        let assignments = qutrit_fourier_assignments();
        assert_eq!(assignments[0], [(0, 1), (2, 1), (0, 1)]);
        let c = qutrit_fourier_circuit();
        assert_eq!(c.beam_splitter_count(), 3);
        let f3 = fourier_basis(3).unwrap().unitary();
        assert!(c.transfer().approx_equal(&f3, 1e-10).unwrap());
        // block unitarity, e.g. (s3 + sqrt2 s1)/sqrt3 has |det| = 1
        let s = 1.0 / 3f64.sqrt();
        let block = Operator::from_real_rows(&[&[s, 2f64.sqrt() * s], &[2f64.sqrt() * s, -s]]);
        assert!(block.is_unitary(1e-15));
        let det = block[(0, 0)] * block[(1, 1)] - block[(0, 1)] * block[(1, 0)];
        assert!((det.norm() - 1.0).abs() < 1e-15);
        let s3s2 = Operator::new(2, vec![ONE, -I, I, -ONE]).unwrap().scale_real(std::f64::consts::FRAC_1_SQRT_2);
        assert!(s3s2.is_unitary(1e-15));
    }

    fn assert_born_agreement(scheme: &SequentialScheme, seed: u64) {
        let app = build_apparatus(scheme, 1e-9).unwrap();
        assert!(app.isometry_deviation() < 1e-10);
        let pom = compose_sequential(scheme);
        let mut rng = seeded_rng(seed);
        let d = scheme.dim();
        for i in 0..30 {
            let rho = if i % 3 == 0 {
                random_density(d, &mut rng)
            } else {
                random_pure_state(d, &mut rng).projector()
            };
            let optical = app.distribution(&rho, 1e-9).unwrap();
            let born = born_probabilities(&pom, &rho, 1e-9).unwrap();
            for (a, b) in optical.iter().zip(&born) {
                assert!((a - b).abs() < 1e-10, "seed {seed}: {a} vs {b}");
            }
        }
        assert_eq!(app.detectors()[d + 1], Label::pair(1, 1));
    }

    #[test]
    fn apparatus_reproduces_born_rule() {
        assert_born_agreement(&tetrahedron_scheme(), 1);
        assert_born_agreement(&qutrit_family_scheme(QutritGamma::new(0.2).unwrap()), 2);
        assert_born_agreement(&decompose_hw(&dim4_fiducial()), 3);
        let fid = FiducialKet::new(random_pure_state(5, &mut seeded_rng(4)), 1e-12).unwrap();
        assert_born_agreement(&decompose_hw(&fid), 4);
    }

    #[test]
    fn stage_one_routes_kraus_diagonals() {
        let scheme = tetrahedron_scheme();
        let app = build_apparatus(&scheme, 1e-9).unwrap();
        for p in 0..2 {
            let out = simulate(app.stage1(), &Ket::basis(4, p)).unwrap();
            for g in 0..2 {
                let k = scheme.first().operators()[g][(p, p)];
                assert!((out.amplitudes()[g * 2 + p] - k).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn non_diagonal_kraus_rejected() {
        let u = random_unitary(2, &mut seeded_rng(9)).scale_real(std::f64::consts::FRAC_1_SQRT_2);
        let first = KrausSet::new(vec![u.clone(), u], 1e-9).unwrap();
        let scheme = SequentialScheme::new(first, vec![Basis::computational(2); 2]).unwrap();
        assert!(matches!(build_apparatus(&scheme, 1e-9), Err(Error::NonDiagonalKraus(0))));
    }

    #[test]
    fn sampling_contract() {
        let app = build_apparatus(&tetrahedron_scheme(), 1e-9).unwrap();
        let rho = Operator::identity(2).scale_real(0.5);
        assert!(matches!(sample_clicks(&app, &rho, 0, 1, TOL), Err(Error::InvalidShots)));
        let a = sample_clicks(&app, &rho, 100_000, 7, TOL).unwrap();
        let b = sample_clicks(&app, &rho, 100_000, 7, TOL).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().sum::<u64>(), 100_000);
        let c = sample_clicks(&app, &rho, 100_000, 8, TOL).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn maximally_mixed_counts_within_five_sigma() {
        let app = build_apparatus(&qutrit_family_scheme(QutritGamma::new(0.0).unwrap()), 1e-9).unwrap();
        let rho = Operator::identity(3).scale_real(1.0 / 3.0);
        let shots = 1_000_000u64;
        let counts = sample_clicks(&app, &rho, shots, 11, TOL).unwrap();
        let p = 1.0 / 9.0;
        let sigma = (shots as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - shots as f64 * p).abs() < 5.0 * sigma);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn reck_round_trip(seed in any::<u64>(), d in 1usize..=8) {
            let u = random_unitary(d, &mut seeded_rng(seed));
            let c = reck_decompose(&u, 1e-9).unwrap();
            prop_assert!(c.beam_splitter_count() <= d * (d - 1) / 2);
            prop_assert!(c.transfer().max_abs_diff(&u).unwrap() < 1e-10);
        }

        #[test]
        fn cascades_are_isometries(seed in any::<u64>(), d in 2usize..=8) {
            let alphas = random_pure_state(d, &mut seeded_rng(seed));
            let cascades = solve_bs_cascade(alphas.amplitudes()).unwrap();
            for (p, c) in cascades.iter().enumerate() {
                let routed = c.routed();
                let norm: f64 = routed.iter().map(|x| x.norm_sqr()).sum();
                prop_assert!((norm - 1.0).abs() < 1e-12);
                for (g, r) in routed.iter().enumerate() {
                    prop_assert!((r - alphas.amplitudes()[(p + d - g) % d]).norm() < 1e-12);
                }
            }
        }
    }
}

//! Dense-amplitude simulation of the six-qubit source.
//!
//! This is the reference back-end. Measurement is sequential projection with
//! `(I ± O)/2`, one observable at a time; the stabilizer engine is checked
//! against it.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::RngCore;

use crate::engine::{
    check_commuting_set, draw_outcome, Branch, Eigenvalue, Engine, EngineError, EngineKind, CERTAINTY_TOLERANCE,
    UNDERFLOW_PROBABILITY,
};
use crate::pauli::{PauliString, Phase};
use crate::pentagram::NodeId;

/// Qubits in the experiment: three Bell pairs.
pub const SOURCE_QUBITS: usize = 6;
pub const ALICE_QUBITS: [usize; 3] = [1, 3, 5];
pub const BOB_QUBITS: [usize; 3] = [2, 4, 6];

pub const NORM_TOLERANCE: f64 = 1e-12;

/// Amplitudes over `2^n` basis states; qubit 1 is the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wrap raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        assert!(amps.len().is_power_of_two() && amps.len() > 1);
        let qubits = amps.len().trailing_zeros() as usize;
        Self { qubits, amps }
    }

    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { qubits, amps }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        self.amps.iter_mut().for_each(|a| *a /= n);
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn check_width(&self, op: &PauliString) -> Result<(), EngineError> {
        if op.width() != self.qubits {
            return Err(EngineError::WidthMismatch {
                expected: self.qubits,
                got: op.width(),
            });
        }
        Ok(())
    }

    /// `op |self>`.
    pub fn apply_pauli(&self, op: &PauliString) -> Result<Self, EngineError> {
        self.check_width(op)?;
        let x = op.x_mask() as usize;
        let z = op.z_mask() as usize;
        // Each Y is i·X·Z, so it contributes one extra factor of i.
        let y_count = (x & z).count_ones() as u8;
        let base = (op.phase() * Phase::from_exponent(y_count)).to_complex();
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[i ^ x] = a * base * sign;
        }
        Ok(Self {
            qubits: self.qubits,
            amps: out,
        })
    }

    /// `<self|op|self>` for a Hermitian `op`.
    pub fn expectation(&self, op: &PauliString) -> Result<f64, EngineError> {
        if !op.is_hermitian() {
            return Err(EngineError::NonHermitian(op.to_string()));
        }
        Ok(self.inner(&self.apply_pauli(op)?).re)
    }

    /// Probability of `outcome` when measuring `op`, clamped to `[0, 1]`.
    pub fn outcome_probability(&self, op: &PauliString, outcome: Eigenvalue) -> Result<f64, EngineError> {
        let e = self.expectation(op)?;
        Ok(((1.0 + outcome.value() as f64 * e) / 2.0).clamp(0.0, 1.0))
    }

    fn project(&self, flipped: &Self, outcome: Eigenvalue) -> Result<(Self, f64), EngineError> {
        let s = outcome.value() as f64;
        let amps: Vec<Complex64> = self
            .amps
            .iter()
            .zip(&flipped.amps)
            .map(|(a, b)| (a + b * s) * 0.5)
            .collect();
        let mut post = Self {
            qubits: self.qubits,
            amps,
        };
        let p = post.norm_sqr();
        if p < UNDERFLOW_PROBABILITY {
            return Err(EngineError::NormUnderflow(p));
        }
        post.normalize();
        Ok((post, p.min(1.0)))
    }

    /// Project onto the `outcome` eigenspace of `op` and renormalize.
    /// Returns the post-measurement state and the branch probability.
    pub fn collapse(&self, op: &PauliString, outcome: Eigenvalue) -> Result<(Self, f64), EngineError> {
        if !op.is_hermitian() {
            return Err(EngineError::NonHermitian(op.to_string()));
        }
        self.project(&self.apply_pauli(op)?, outcome)
    }

    /// Sample a measurement of `op` and collapse in place.
    pub fn measure<R: RngCore + ?Sized>(&mut self, op: &PauliString, rng: &mut R) -> Result<Eigenvalue, EngineError> {
        if !op.is_hermitian() {
            return Err(EngineError::NonHermitian(op.to_string()));
        }
        let flipped = self.apply_pauli(op)?;
        let p_plus = ((1.0 + self.inner(&flipped).re) / 2.0).clamp(0.0, 1.0);
        let outcome = draw_outcome(p_plus, rng);
        let (post, _) = self.project(&flipped, outcome)?;
        *self = post;
        Ok(outcome)
    }

    /// Reduced density matrix on the given 1-based qubits, in the listed order
    /// (first listed qubit is the most significant row bit).
    pub fn reduced_density(&self, keep: &[usize]) -> DMatrix<Complex64> {
        let n = self.qubits;
        let keep_bits: Vec<usize> = keep.iter().map(|&q| n - q).collect();
        let rest_bits: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).map(|q| n - q).collect();
        let compose = |kept: usize, other: usize| {
            let mut idx = 0usize;
            for (k, &bit) in keep_bits.iter().enumerate() {
                if kept >> (keep_bits.len() - 1 - k) & 1 == 1 {
                    idx |= 1 << bit;
                }
            }
            for (k, &bit) in rest_bits.iter().enumerate() {
                if other >> k & 1 == 1 {
                    idx |= 1 << bit;
                }
            }
            idx
        };
        let dim = 1 << keep.len();
        let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for other in 0..1usize << rest_bits.len() {
            for r in 0..dim {
                let a = self.amps[compose(r, other)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..dim {
                    rho[(r, c)] += a * self.amps[compose(c, other)].conj();
                }
            }
        }
        rho
    }
}

impl fmt::Display for StateVector {
    /// Sparse `index: amplitude` listing of nonzero entries.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() > NORM_TOLERANCE {
                writeln!(f, "|{:0w$b}> {:+.6}{:+.6}i", i, a.re, a.im, w = self.qubits)?;
            }
        }
        Ok(())
    }
}

/// Full index from a 3-bit Alice index (qubits 1,3,5) and a 3-bit Bob index
/// (qubits 2,4,6).
pub fn interleave(alice: usize, bob: usize) -> usize {
    (0..3).fold(0, |idx, k| {
        let a = alice >> k & 1;
        let b = bob >> k & 1;
        idx | a << (2 * k + 1) | b << (2 * k)
    })
}

/// Three Bell pairs `(|00>+|11>)/√2` on qubits (1,2), (3,4), (5,6).
pub fn prepare_source() -> StateVector {
    let amp = Complex64::new(1.0 / 8f64.sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << SOURCE_QUBITS];
    for local in 0..8 {
        amps[interleave(local, local)] = amp;
    }
    StateVector {
        qubits: SOURCE_QUBITS,
        amps,
    }
}

/// Outcomes of measuring a commuting set, with the final state.
#[derive(Debug, Clone)]
pub struct MeasurementResult {
    pub outcomes: BTreeMap<NodeId, Eigenvalue>,
    pub post_state: StateVector,
}

impl MeasurementResult {
    pub fn outcome_product(&self) -> i8 {
        self.outcomes.values().map(|e| e.value()).product()
    }
}

/// Measure a commuting set one observable at a time, ascending by node.
pub fn measure_commuting_set<R: RngCore + ?Sized>(
    state: &StateVector,
    ops: &[(NodeId, PauliString)],
    rng: &mut R,
) -> Result<MeasurementResult, EngineError> {
    check_commuting_set(ops.iter().map(|(_, op)| op))?;
    let mut ordered: Vec<&(NodeId, PauliString)> = ops.iter().collect();
    ordered.sort_by_key(|(n, _)| *n);
    let mut post = state.clone();
    let mut outcomes = BTreeMap::new();
    for (node, op) in ordered {
        outcomes.insert(*node, post.measure(op, rng)?);
    }
    Ok(MeasurementResult {
        outcomes,
        post_state: post,
    })
}

/// Simultaneous eigenstates of a commuting set, one per feasible sign
/// pattern, found by applying the product of projectors to basis states.
/// Each vector is rephased so its largest entry is real and positive.
pub fn simultaneous_eigenbasis(ops: &[PauliString]) -> Result<Vec<(Vec<Eigenvalue>, StateVector)>, EngineError> {
    check_commuting_set(ops)?;
    let width = ops.first().map_or(1, |o| o.width());
    let mut out = Vec::new();
    for pattern in 0..1usize << ops.len() {
        let signs: Vec<Eigenvalue> = (0..ops.len())
            .map(|k| Eigenvalue::from_sign(pattern >> k & 1 == 1))
            .collect();
        let mut best: Option<StateVector> = None;
        for index in 0..1usize << width {
            let mut v = StateVector::basis(width, index);
            for (op, &s) in ops.iter().zip(&signs) {
                let flipped = v.apply_pauli(op)?;
                let sign = s.value() as f64;
                v.amps
                    .iter_mut()
                    .zip(&flipped.amps)
                    .for_each(|(a, b)| *a = (*a + b * sign) * 0.5);
            }
            if best.as_ref().is_none_or(|b| v.norm_sqr() > b.norm_sqr()) {
                best = Some(v);
            }
        }
        let mut v = best.expect("at least one basis state");
        if v.norm_sqr() < NORM_TOLERANCE {
            continue;
        }
        v.normalize();
        let pivot = v
            .amps
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap();
        let rephase = pivot.conj() / pivot.norm();
        v.amps.iter_mut().for_each(|a| *a *= rephase);
        out.push((signs, v));
    }
    Ok(out)
}

/// Rebuild the source as `Σ |ψ_i>|φ_i> / √8`, where `φ_i` carries the same
/// real coefficients as `ψ_i` on Bob's qubits, and return the largest
/// amplitude deviation from [`prepare_source`].
pub fn verify_partner_expansion(basis: &[Vec<Complex64>]) -> Result<f64, EngineError> {
    const DIM: usize = 8;
    if basis.len() != DIM || basis.iter().any(|v| v.len() != DIM) {
        let got = if basis.len() != DIM {
            basis.len()
        } else {
            basis.iter().map(Vec::len).find(|&l| l != DIM).unwrap_or(DIM)
        };
        return Err(EngineError::BasisShape { expected: DIM, got });
    }
    let max_imag = basis.iter().flatten().map(|c| c.im.abs()).fold(0.0, f64::max);
    if max_imag > NORM_TOLERANCE {
        return Err(EngineError::ComplexBasis(max_imag));
    }
    let mut gram_dev = 0.0f64;
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let dot: f64 = u.iter().zip(v).map(|(a, b)| a.re * b.re).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((dot - target).abs());
        }
    }
    if gram_dev > 1e-10 {
        return Err(EngineError::NotOrthonormal(gram_dev));
    }

    let scale = 1.0 / (DIM as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << SOURCE_QUBITS];
    for v in basis {
        for (a, ca) in v.iter().enumerate() {
            for (b, cb) in v.iter().enumerate() {
                amps[interleave(a, b)] += Complex64::new(ca.re * cb.re * scale, 0.0);
            }
        }
    }
    let source = prepare_source();
    Ok(amps
        .iter()
        .zip(source.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// [`Engine`] over [`StateVector`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StateVectorEngine;

impl Engine for StateVectorEngine {
    type State = StateVector;

    fn kind(&self) -> EngineKind {
        EngineKind::Statevector
    }

    fn prepare(&self) -> StateVector {
        prepare_source()
    }

    fn measure<R: RngCore + ?Sized>(
        &self,
        state: &mut StateVector,
        op: &PauliString,
        rng: &mut R,
    ) -> Result<Eigenvalue, EngineError> {
        state.measure(op, rng)
    }

    fn branches(&self, state: &StateVector, op: &PauliString) -> Result<Vec<Branch<StateVector>>, EngineError> {
        let mut out = Vec::with_capacity(2);
        for outcome in [Eigenvalue::Plus, Eigenvalue::Minus] {
            if state.outcome_probability(op, outcome)? <= CERTAINTY_TOLERANCE {
                continue;
            }
            let (post, probability) = state.collapse(op, outcome)?;
            out.push(Branch {
                outcome,
                probability,
                state: post,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{exact_distribution, CountingRng};
    use crate::pentagram::{LineLabel, PentagramConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn alice_line(cfg: &PentagramConfig, label: LineLabel) -> Vec<(NodeId, PauliString)> {
        cfg.line_observables(label)
            .into_iter()
            .map(|(n, op)| (n, op.embed(&ALICE_QUBITS, SOURCE_QUBITS).unwrap()))
            .collect()
    }

    fn dense_expectation(state: &StateVector, op: &PauliString) -> f64 {
        let m = op.to_matrix().unwrap();
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        (v.adjoint() * m * &v)[(0, 0)].re
    }

    #[test]
    fn source_amplitudes() {
        let s = prepare_source();
        let amp = 1.0 / (2.0 * 2f64.sqrt());
        assert!((s.amplitude(0).re - amp).abs() < 1e-15);
        assert_eq!(s.amplitude(0b010000), Complex64::new(0.0, 0.0));
        assert_eq!(s.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 8);
        for (i, a) in s.amplitudes().iter().enumerate() {
            let pairs_equal = (0..3).all(|k| (i >> (2 * k) & 1) == (i >> (2 * k + 1) & 1));
            assert_eq!(a.norm() > 0.0, pairs_equal, "index {i:06b}");
        }
        assert!((s.norm_sqr() - 1.0).abs() < NORM_TOLERANCE);
    }

    #[test]
    fn source_expectations_match_dense_oracle() {
        let s = prepare_source();
        let z1z2 = p("ZZIIII");
        assert!((s.expectation(&z1z2).unwrap() - 1.0).abs() < 1e-12);
        assert!((dense_expectation(&s, &z1z2) - 1.0).abs() < 1e-12);
        assert!((s.expectation(&PauliString::identity(6)).unwrap() - 1.0).abs() < 1e-12);

        let cfg = PentagramConfig::canonical().unwrap();
        for (node, op) in cfg.observables() {
            let a = op.embed(&ALICE_QUBITS, 6).unwrap();
            let b = op.embed(&BOB_QUBITS, 6).unwrap();
            let ab = a.multiply(&b).unwrap();
            assert!(s.expectation(&a).unwrap().abs() < 1e-12, "node {node}");
            assert!((s.expectation(&ab).unwrap() - 1.0).abs() < 1e-12, "node {node}");
            assert!((dense_expectation(&s, &ab) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        assert!(matches!(
            prepare_source().expectation(&p("+iZIIIII")),
            Err(EngineError::NonHermitian(_))
        ));
        assert!(matches!(
            prepare_source().expectation(&p("ZZZ")),
            Err(EngineError::WidthMismatch { expected: 6, got: 3 })
        ));
    }

    #[test]
    fn apply_pauli_matches_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amps: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rand::Rng::gen(&mut rng), rand::Rng::gen(&mut rng)))
            .collect();
        let v = StateVector::from_amplitudes(amps);
        for s in ["XYZ", "-iYYI", "+ZIX", "-XXY"] {
            let op = p(s);
            let got = v.apply_pauli(&op).unwrap();
            let want = op.to_matrix().unwrap() * nalgebra::DVector::from_column_slice(v.amplitudes());
            for (a, b) in got.amplitudes().iter().zip(want.iter()) {
                assert!((a - b).norm() < 1e-12, "{s}");
            }
        }
    }

    #[test]
    fn line_measurement_has_odd_parity_and_repeats() {
        let cfg = PentagramConfig::canonical().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for label in LineLabel::ALL {
            let ops = alice_line(&cfg, label);
            for _ in 0..50 {
                let first = measure_commuting_set(&prepare_source(), &ops, &mut rng).unwrap();
                assert_eq!(first.outcome_product(), -1);
                assert!((first.post_state.norm_sqr() - 1.0).abs() < NORM_TOLERANCE);
                let mut counting = CountingRng::new(&mut rng);
                let again = measure_commuting_set(&first.post_state, &ops, &mut counting).unwrap();
                assert_eq!(again.outcomes, first.outcomes);
                assert_eq!(counting.draws, 0);
            }
        }
    }

    #[test]
    fn line_patterns_are_uniform_exactly() {
        let cfg = PentagramConfig::canonical().unwrap();
        for label in LineLabel::ALL {
            let ops: Vec<PauliString> = alice_line(&cfg, label).into_iter().map(|(_, o)| o).collect();
            let dist = exact_distribution(&StateVectorEngine, &prepare_source(), &ops).unwrap();
            assert_eq!(dist.len(), 8);
            for (pattern, prob) in &dist {
                let product: i8 = pattern.iter().map(|e| e.value()).product();
                assert_eq!(product, -1);
                assert!((prob - 0.125).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projector_trace_oracle_gives_one_eighth() {
        // Reduced state of Alice's qubits is I/8, so every joint projector of
        // rank one has probability 1/8.
        let rho = prepare_source().reduced_density(&ALICE_QUBITS);
        let target = DMatrix::<Complex64>::identity(8, 8) / Complex64::new(8.0, 0.0);
        assert!((rho - target).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn measure_set_rejects_non_commuting() {
        let ops = vec![
            (NodeId::new(1).unwrap(), p("ZIIIII")),
            (NodeId::new(2).unwrap(), p("XIIIII")),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            measure_commuting_set(&prepare_source(), &ops, &mut rng),
            Err(EngineError::NonCommuting(..))
        ));
    }

    #[test]
    fn impossible_branch_underflows() {
        let s = prepare_source();
        assert!(matches!(
            s.collapse(&p("ZZIIII"), Eigenvalue::Minus),
            Err(EngineError::NormUnderflow(_))
        ));
    }

    #[test]
    fn ghz_eigenbasis_is_real_and_complete() {
        let cfg = PentagramConfig::canonical().unwrap();
        let ops: Vec<PauliString> = cfg
            .line_observables(LineLabel::S5)
            .into_iter()
            .map(|(_, o)| o.clone())
            .collect();
        let basis = simultaneous_eigenbasis(&ops).unwrap();
        assert_eq!(basis.len(), 8);
        for (signs, v) in &basis {
            assert_eq!(signs.iter().map(|e| e.value()).product::<i8>(), -1);
            assert!(v.amplitudes().iter().all(|a| a.im.abs() < 1e-12));
            for (op, s) in ops.iter().zip(signs) {
                assert!((v.expectation(op).unwrap() - s.value() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partner_expansion_standard_basis() {
        let basis: Vec<Vec<Complex64>> = (0..8).map(|k| StateVector::basis(3, k).amplitudes().to_vec()).collect();
        assert!(verify_partner_expansion(&basis).unwrap() <= 1e-12);
    }

    #[test]
    fn partner_expansion_rejects_bad_bases() {
        let mut basis: Vec<Vec<Complex64>> = (0..8).map(|k| StateVector::basis(3, k).amplitudes().to_vec()).collect();
        let mut skewed = basis.clone();
        skewed[0][1] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            verify_partner_expansion(&skewed),
            Err(EngineError::NotOrthonormal(_))
        ));
        basis[3][3] = Complex64::new(0.0, 1.0);
        assert!(matches!(
            verify_partner_expansion(&basis),
            Err(EngineError::ComplexBasis(_))
        ));
        assert!(matches!(
            verify_partner_expansion(&basis[..7]),
            Err(EngineError::BasisShape { got: 7, .. })
        ));
    }

    #[test]
    fn sparse_rendering() {
        let text = prepare_source().to_string();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with("|000000> +0.353553+0.000000i"));
    }

    #[test]
    fn interleave_places_bits() {
        assert_eq!(interleave(0b100, 0), 0b100000);
        assert_eq!(interleave(0, 0b100), 0b010000);
        assert_eq!(interleave(0b001, 0b001), 0b000011);
    }
}

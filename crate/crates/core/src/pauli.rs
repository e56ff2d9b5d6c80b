//! Signed multi-qubit Pauli operators.
//!
//! Phases are kept as an exact power of `i`, so sign-sensitive products never
//! pick up floating-point drift. Qubits are numbered from 1; qubit 1 is the
//! most significant bit of a computational-basis index.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Widest operator [`PauliString::to_matrix`] will expand densely.
pub const MAX_ORACLE_WIDTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("width {0} exceeds dense oracle limit of {MAX_ORACLE_WIDTH} qubits")]
    OracleTooWide(usize),
    #[error("invalid embedding positions {positions:?} for total width {total_width}")]
    BadPositions { positions: Vec<usize>, total_width: usize },
    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
    #[error("Pauli string must have positive width")]
    Empty,
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 4] = [PauliAxis::I, PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    /// Symplectic `(x, z)` bits; `Y` is `(1, 1)`.
    pub fn bits(self) -> (bool, bool) {
        match self {
            PauliAxis::I => (false, false),
            PauliAxis::X => (true, false),
            PauliAxis::Y => (true, true),
            PauliAxis::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliAxis::I,
            (true, false) => PauliAxis::X,
            (true, true) => PauliAxis::Y,
            (false, true) => PauliAxis::Z,
        }
    }

    /// Product `self * other` as `(power of i, letter)`.
    pub fn product(self, other: PauliAxis) -> (u8, PauliAxis) {
        use PauliAxis::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            PauliAxis::I => 'I',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliAxis::I => [[l, o], [o, l]],
            PauliAxis::X => [[o, l], [l, o]],
            PauliAxis::Y => [[o, -i], [i, o]],
            PauliAxis::Z => [[l, o], [o, -l]],
        }
    }
}

/// Element of `{+1, +i, -1, -i}`, stored as the exponent of `i` mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `+1` or `-1` for real phases.
    pub fn sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A phase times a tensor product of Pauli letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<PauliAxis>,
    phase: Phase,
}

impl PauliString {
    pub fn new(phase: Phase, letters: Vec<PauliAxis>) -> Result<Self, PauliError> {
        if letters.is_empty() {
            return Err(PauliError::Empty);
        }
        Ok(Self { letters, phase })
    }

    /// Hermitian string with sign `+1` (`negative == false`) or `-1`.
    pub fn signed(negative: bool, letters: Vec<PauliAxis>) -> Result<Self, PauliError> {
        let phase = if negative { Phase::MINUS_ONE } else { Phase::ONE };
        Self::new(phase, letters)
    }

    pub fn identity(width: usize) -> Self {
        assert!(width > 0, "identity needs positive width");
        Self {
            letters: vec![PauliAxis::I; width],
            phase: Phase::ONE,
        }
    }

    pub fn width(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[PauliAxis] {
        &self.letters
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Letter acting on 1-based `qubit`.
    pub fn letter(&self, qubit: usize) -> PauliAxis {
        self.letters[qubit - 1]
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != PauliAxis::I).count()
    }

    pub fn has_identity_letters(&self) -> bool {
        self.weight() == 0
    }

    pub fn negated(&self) -> Self {
        Self {
            letters: self.letters.clone(),
            phase: self.phase * Phase::MINUS_ONE,
        }
    }

    pub fn with_phase(&self, phase: Phase) -> Self {
        Self {
            letters: self.letters.clone(),
            phase,
        }
    }

    fn check_width(&self, other: &Self) -> Result<(), PauliError> {
        if self.width() != other.width() {
            return Err(PauliError::WidthMismatch {
                left: self.width(),
                right: other.width(),
            });
        }
        Ok(())
    }

    /// Exact operator product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self, PauliError> {
        self.check_width(other)?;
        let mut exp = self.phase.0 + other.phase.0;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (k, p) = a.product(b);
                exp += k;
                p
            })
            .collect();
        Ok(Self {
            letters,
            phase: Phase::from_exponent(exp),
        })
    }

    /// Ordered product of a non-empty sequence of equal-width strings.
    pub fn product_of<'a, I>(ops: I) -> Result<Self, PauliError>
    where
        I: IntoIterator<Item = &'a PauliString>,
    {
        let mut iter = ops.into_iter();
        let first = iter.next().ok_or(PauliError::Empty)?.clone();
        iter.try_fold(first, |acc, op| acc.multiply(op))
    }

    /// True iff the two operators commute: the number of positions where both
    /// letters are non-identity and differ is even.
    pub fn commutes(&self, other: &Self) -> Result<bool, PauliError> {
        self.check_width(other)?;
        let clashes = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| a != PauliAxis::I && b != PauliAxis::I && a != b)
            .count();
        Ok(clashes % 2 == 0)
    }

    /// Bit mask of positions carrying an X component (X or Y). Qubit 1 maps to
    /// bit `width - 1`.
    pub fn x_mask(&self) -> u64 {
        self.mask(|p| p.bits().0)
    }

    /// Bit mask of positions carrying a Z component (Z or Y).
    pub fn z_mask(&self) -> u64 {
        self.mask(|p| p.bits().1)
    }

    fn mask(&self, pick: impl Fn(PauliAxis) -> bool) -> u64 {
        let w = self.width();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| pick(p))
            .fold(0u64, |m, (k, _)| m | 1 << (w - 1 - k))
    }

    /// Rebuild from symplectic masks, where each `Y` is taken as the
    /// Hermitian letter (not `XZ`).
    pub fn from_masks(width: usize, x: u64, z: u64, phase: Phase) -> Self {
        let letters = (0..width)
            .map(|k| {
                let bit = 1u64 << (width - 1 - k);
                PauliAxis::from_bits(x & bit != 0, z & bit != 0)
            })
            .collect();
        Self { letters, phase }
    }

    /// Dense `2^width` matrix: Kronecker product of the letters times the phase.
    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>, PauliError> {
        if self.width() > MAX_ORACLE_WIDTH {
            return Err(PauliError::OracleTooWide(self.width()));
        }
        let mut out = DMatrix::from_element(1, 1, self.phase.to_complex());
        for &letter in &self.letters {
            let m = letter.matrix();
            let single = DMatrix::from_fn(2, 2, |r, c| m[r][c]);
            out = out.kronecker(&single);
        }
        Ok(out)
    }

    /// Place this operator's letters at the given 1-based `positions` of a
    /// `total_width` string, identity elsewhere.
    pub fn embed(&self, positions: &[usize], total_width: usize) -> Result<Self, PauliError> {
        let bad = || PauliError::BadPositions {
            positions: positions.to_vec(),
            total_width,
        };
        if positions.len() != self.width()
            || positions.windows(2).any(|w| w[0] >= w[1])
            || positions.iter().any(|&p| p == 0 || p > total_width)
        {
            return Err(bad());
        }
        let mut letters = vec![PauliAxis::I; total_width];
        for (&pos, &letter) in positions.iter().zip(&self.letters) {
            letters[pos - 1] = letter;
        }
        Ok(Self {
            letters,
            phase: self.phase,
        })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for p in &self.letters {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Accepts the canonical rendering (`"-XXZ"`, `"+iY"`); a missing sign means `+`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PauliError::Parse(s.to_string());
        let (mut exp, rest) = match s.as_bytes().first() {
            Some(b'+') => (0u8, &s[1..]),
            Some(b'-') => (2u8, &s[1..]),
            _ => (0u8, s),
        };
        let rest = match rest.strip_prefix('i') {
            Some(r) => {
                exp += 1;
                r
            }
            None => rest,
        };
        let letters = rest
            .chars()
            .map(|c| match c {
                'I' => Ok(PauliAxis::I),
                'X' => Ok(PauliAxis::X),
                'Y' => Ok(PauliAxis::Y),
                'Z' => Ok(PauliAxis::Z),
                _ => Err(err()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if letters.is_empty() {
            return Err(err());
        }
        Ok(Self {
            letters,
            phase: Phase::from_exponent(exp),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(p("+X").multiply(&p("+X")).unwrap(), p("+I"));
        assert_eq!(p("+Z").multiply(&p("+X")).unwrap(), p("+iY"));
        assert_eq!(p("+X").multiply(&p("+Z")).unwrap(), p("-iY"));
    }

    #[test]
    fn zzz_line_product() {
        let prod = PauliString::product_of(&[p("-ZZZ"), p("ZII"), p("IZI"), p("IIZ")]).unwrap();
        assert_eq!(prod, p("-III"));
        let dense = p("-ZZZ").to_matrix().unwrap()
            * p("ZII").to_matrix().unwrap()
            * p("IZI").to_matrix().unwrap()
            * p("IIZ").to_matrix().unwrap();
        assert!(max_dev(&dense, &prod.to_matrix().unwrap()) < 1e-12);
    }

    #[test]
    fn width_mismatch_is_an_error() {
        assert!(matches!(
            p("X").multiply(&p("XX")),
            Err(PauliError::WidthMismatch { left: 1, right: 2 })
        ));
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn commutation_examples() {
        assert!(p("XXZ").commutes(&p("XZX")).unwrap());
        assert!(!p("Z").commutes(&p("X")).unwrap());
    }

    #[test]
    fn small_matrices() {
        let id = p("+I").to_matrix().unwrap();
        assert_eq!(id, DMatrix::identity(2, 2));
        let z = p("+Z").to_matrix().unwrap();
        assert_eq!(z[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], Complex64::new(-1.0, 0.0));
        assert_eq!(z[(0, 1)], Complex64::new(0.0, 0.0));
        assert!(matches!(
            PauliString::identity(7).to_matrix(),
            Err(PauliError::OracleTooWide(7))
        ));
    }

    #[test]
    fn embedding() {
        assert_eq!(p("+Z").embed(&[1], 6).unwrap(), p("+ZIIIII"));
        assert_eq!(p("-XXZ").embed(&[1, 3, 5], 6).unwrap(), p("-XIXIZI"));
        assert_eq!(p("-XXZ").embed(&[2, 4, 6], 6).unwrap(), p("-IXIXIZ"));
        assert!(p("XX").embed(&[1, 1], 6).is_err());
        assert!(p("XX").embed(&[3, 2], 6).is_err());
        assert!(p("XX").embed(&[0, 2], 6).is_err());
        assert!(p("XX").embed(&[2, 7], 6).is_err());
        assert!(p("XX").embed(&[2], 6).is_err());
    }

    #[test]
    fn rendering_round_trips() {
        for s in ["-XXZ", "+ZIIIII", "+iY", "-iXZ"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert!("".parse::<PauliString>().is_err());
        assert!("+Q".parse::<PauliString>().is_err());
    }

    #[test]
    fn masks_match_letters() {
        let op = p("-XYZI");
        assert_eq!(op.x_mask(), 0b1100);
        assert_eq!(op.z_mask(), 0b0110);
        assert_eq!(PauliString::from_masks(4, 0b1100, 0b0110, Phase::MINUS_ONE), op);
    }

    /// Exhaustive over all pairs of Hermitian width-2 strings and all triples
    /// at width 1: associativity, and real phase whenever a product of
    /// Hermitian strings collapses to identity letters.
    #[test]
    fn exhaustive_small_width_algebra() {
        fn all(width: usize) -> Vec<PauliString> {
            let mut out = vec![];
            for code in 0..4usize.pow(width as u32) {
                let letters: Vec<_> = (0..width).map(|k| PauliAxis::ALL[(code >> (2 * k)) & 3]).collect();
                for neg in [false, true] {
                    out.push(PauliString::signed(neg, letters.clone()).unwrap());
                }
            }
            out
        }
        for width in 1..=3 {
            let ops = all(width);
            for a in &ops {
                for b in &ops {
                    let ab = a.multiply(b).unwrap();
                    if ab.has_identity_letters() {
                        assert!(ab.is_hermitian(), "{a} * {b} = {ab}");
                    }
                    if width <= 2 {
                        for c in &ops {
                            let left = ab.multiply(c).unwrap();
                            let right = a.multiply(&b.multiply(c).unwrap()).unwrap();
                            assert_eq!(left, right);
                        }
                    }
                }
            }
        }
    }

    fn pauli_string(width: usize) -> impl Strategy<Value = PauliString> {
        (proptest::collection::vec(0usize..4, width), 0u8..4).prop_map(|(codes, exp)| {
            PauliString::new(
                Phase::from_exponent(exp),
                codes.into_iter().map(|c| PauliAxis::ALL[c]).collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matrix_is_ring_homomorphism(a in pauli_string(3), b in pauli_string(3)) {
            let lhs = a.multiply(&b).unwrap().to_matrix().unwrap();
            let rhs = a.to_matrix().unwrap() * b.to_matrix().unwrap();
            prop_assert!(max_dev(&lhs, &rhs) <= 1e-12);
        }

        #[test]
        fn commutes_agrees_with_products(a in pauli_string(3), b in pauli_string(3)) {
            let ab = a.multiply(&b).unwrap();
            let ba = b.multiply(&a).unwrap();
            prop_assert_eq!(a.commutes(&b).unwrap(), ab == ba);
        }

        #[test]
        fn hermitian_iff_real_phase(a in pauli_string(2)) {
            let m = a.to_matrix().unwrap();
            let herm = max_dev(&m, &m.adjoint()) < 1e-12;
            prop_assert_eq!(herm, a.is_hermitian());
        }
    }
}

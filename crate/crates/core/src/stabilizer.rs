//! Stabilizer-tableau back-end.
//!
//! The source is a stabilizer state and every pentagram observable is a Pauli
//! string, so measurement reduces to symplectic bookkeeping on six
//! stabilizer and six destabilizer generators.

use std::fmt;

use rand::RngCore;

use crate::engine::{fair_coin, Branch, Eigenvalue, Engine, EngineError, EngineKind};
use crate::pauli::{PauliString, Phase};
use crate::statevector::SOURCE_QUBITS;

/// One generator: X and Z bit masks (qubit 1 in the top bit) and a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Row {
    pub x: u64,
    pub z: u64,
    pub negative: bool,
}

impl Row {
    fn from_pauli(op: &PauliString) -> Result<Self, EngineError> {
        let sign = op
            .phase()
            .sign()
            .ok_or_else(|| EngineError::NonHermitian(op.to_string()))?;
        Ok(Self {
            x: op.x_mask(),
            z: op.z_mask(),
            negative: sign < 0,
        })
    }

    pub fn to_pauli(self, width: usize) -> PauliString {
        let phase = if self.negative { Phase::MINUS_ONE } else { Phase::ONE };
        PauliString::from_masks(width, self.x, self.z, phase)
    }

    pub fn anticommutes(&self, other: &Row) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 1
    }

    /// `self * other`. The per-qubit phase of a Pauli product is `+i` for
    /// XY, YZ, ZX and `-i` for the reverse orders; the count difference
    /// mod 4 is the total power of `i`. For commuting rows it is even and
    /// folds into the sign; for anticommuting ones the odd part is dropped.
    fn times(&self, other: &Row) -> Row {
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let (a_x, a_y, a_z) = (x1 & !z1, x1 & z1, !x1 & z1);
        let (b_x, b_y, b_z) = (x2 & !z2, x2 & z2, !x2 & z2);
        let plus = (a_x & b_y) | (a_y & b_z) | (a_z & b_x);
        let minus = (a_y & b_x) | (a_z & b_y) | (a_x & b_z);
        let mut exp = plus.count_ones() as i64 - minus.count_ones() as i64;
        exp += 2 * (self.negative as i64 + other.negative as i64);
        Row {
            x: x1 ^ x2,
            z: z1 ^ z2,
            negative: exp.rem_euclid(4) >= 2,
        }
    }
}

/// Stabilizer state of `n` qubits: `n` destabilizers followed by `n` stabilizers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    rows: Vec<Row>,
}

impl Tableau {
    /// The three-Bell-pair source: stabilized by `X1X2, Z1Z2, X3X4, Z3Z4, X5X6, Z5Z6`.
    pub fn init_source() -> Self {
        let n = SOURCE_QUBITS;
        let bit = |q: usize| 1u64 << (n - q);
        let mut destab = Vec::with_capacity(n);
        let mut stab = Vec::with_capacity(n);
        for pair in 0..n / 2 {
            let (a, b) = (2 * pair + 1, 2 * pair + 2);
            let both = bit(a) | bit(b);
            stab.push(Row {
                x: both,
                z: 0,
                negative: false,
            });
            destab.push(Row {
                x: 0,
                z: bit(b),
                negative: false,
            });
            stab.push(Row {
                x: 0,
                z: both,
                negative: false,
            });
            destab.push(Row {
                x: bit(a),
                z: 0,
                negative: false,
            });
        }
        destab.extend(stab);
        Self { n, rows: destab }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn destabilizers(&self) -> &[Row] {
        &self.rows[..self.n]
    }

    pub fn stabilizers(&self) -> &[Row] {
        &self.rows[self.n..]
    }

    pub fn stabilizer_strings(&self) -> Vec<PauliString> {
        self.stabilizers().iter().map(|r| r.to_pauli(self.n)).collect()
    }

    /// Describe the first broken tableau invariant, if any.
    pub fn invariant_violation(&self) -> Option<String> {
        let (destab, stab) = self.rows.split_at(self.n);
        for (i, a) in stab.iter().enumerate() {
            for (j, b) in stab.iter().enumerate().skip(i + 1) {
                if a.anticommutes(b) {
                    return Some(format!("stabilizers {i} and {j} anticommute"));
                }
            }
        }
        for (i, d) in destab.iter().enumerate() {
            for (j, s) in stab.iter().enumerate() {
                if d.anticommutes(s) != (i == j) {
                    return Some(format!("destabilizer {i} vs stabilizer {j} has wrong commutation"));
                }
            }
        }
        let rank = gf2_rank(self.rows.iter().map(|r| r.x << self.n | r.z).collect());
        if rank != 2 * self.n {
            return Some(format!("generators have rank {rank}, expected {}", 2 * self.n));
        }
        None
    }

    fn row_for(&self, op: &PauliString) -> Result<Row, EngineError> {
        if op.width() != self.n {
            return Err(EngineError::WidthMismatch {
                expected: self.n,
                got: op.width(),
            });
        }
        Row::from_pauli(op)
    }

    /// First stabilizer index anticommuting with `op`.
    fn anticommuting_stabilizer(&self, op: &Row) -> Option<usize> {
        (self.n..2 * self.n).find(|&k| self.rows[k].anticommutes(op))
    }

    /// Eigenvalue of `op` when it commutes with every stabilizer. `op`
    /// is then `±` the product of the stabilizers whose destabilizer
    /// anticommutes with it.
    fn deterministic_outcome(&self, op: &Row) -> Eigenvalue {
        let mut acc = Row {
            x: 0,
            z: 0,
            negative: false,
        };
        for k in 0..self.n {
            if self.rows[k].anticommutes(op) {
                acc = acc.times(&self.rows[self.n + k]);
            }
        }
        debug_assert_eq!((acc.x, acc.z), (op.x, op.z));
        Eigenvalue::from_sign(acc.negative != op.negative)
    }

    /// Measure `op` with a forced outcome in the random case.
    fn collapse_random(&mut self, op: &Row, pivot: usize, outcome: Eigenvalue) {
        let pivot_row = self.rows[pivot];
        for k in 0..2 * self.n {
            if k != pivot && self.rows[k].anticommutes(op) {
                self.rows[k] = self.rows[k].times(&pivot_row);
            }
        }
        self.rows[pivot - self.n] = pivot_row;
        self.rows[pivot] = Row {
            x: op.x,
            z: op.z,
            negative: op.negative != outcome.is_minus(),
        };
    }

    /// `None` if the outcome is random, otherwise the certain eigenvalue.
    pub fn peek(&self, op: &PauliString) -> Result<Option<Eigenvalue>, EngineError> {
        let row = self.row_for(op)?;
        Ok(match self.anticommuting_stabilizer(&row) {
            Some(_) => None,
            None => Some(self.deterministic_outcome(&row)),
        })
    }

    /// Measure a Hermitian Pauli observable. Certain outcomes leave the
    /// tableau untouched and draw nothing; random ones consume one coin.
    pub fn measure_pauli<R: RngCore + ?Sized>(
        &mut self,
        op: &PauliString,
        rng: &mut R,
    ) -> Result<Eigenvalue, EngineError> {
        let row = self.row_for(op)?;
        match self.anticommuting_stabilizer(&row) {
            None => Ok(self.deterministic_outcome(&row)),
            Some(pivot) => {
                let outcome = fair_coin(rng);
                self.collapse_random(&row, pivot, outcome);
                Ok(outcome)
            }
        }
    }
}

impl fmt::Display for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, row) in self.rows.iter().enumerate() {
            let tag = if k < self.n { 'D' } else { 'S' };
            writeln!(f, "{tag}{} {}", k % self.n + 1, row.to_pauli(self.n))?;
        }
        Ok(())
    }
}

fn gf2_rank(mut vectors: Vec<u64>) -> usize {
    let mut rank = 0;
    for bit in (0..64).rev() {
        let mask = 1u64 << bit;
        let Some(pos) = vectors[rank..].iter().position(|v| v & mask != 0) else {
            continue;
        };
        vectors.swap(rank, rank + pos);
        let pivot = vectors[rank];
        for v in vectors.iter_mut().skip(rank + 1) {
            if *v & mask != 0 {
                *v ^= pivot;
            }
        }
        rank += 1;
        if rank == vectors.len() {
            break;
        }
    }
    rank
}

/// [`Engine`] over [`Tableau`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StabilizerEngine;

impl Engine for StabilizerEngine {
    type State = Tableau;

    fn kind(&self) -> EngineKind {
        EngineKind::Stabilizer
    }

    fn prepare(&self) -> Tableau {
        Tableau::init_source()
    }

    fn measure<R: RngCore + ?Sized>(
        &self,
        state: &mut Tableau,
        op: &PauliString,
        rng: &mut R,
    ) -> Result<Eigenvalue, EngineError> {
        state.measure_pauli(op, rng)
    }

    fn branches(&self, state: &Tableau, op: &PauliString) -> Result<Vec<Branch<Tableau>>, EngineError> {
        let row = state.row_for(op)?;
        Ok(match state.anticommuting_stabilizer(&row) {
            None => vec![Branch {
                outcome: state.deterministic_outcome(&row),
                probability: 1.0,
                state: state.clone(),
            }],
            Some(pivot) => [Eigenvalue::Plus, Eigenvalue::Minus]
                .into_iter()
                .map(|outcome| {
                    let mut t = state.clone();
                    t.collapse_random(&row, pivot, outcome);
                    Branch {
                        outcome,
                        probability: 0.5,
                        state: t,
                    }
                })
                .collect(),
        })
    }
}

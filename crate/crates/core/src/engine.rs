//! The measurement-engine abstraction shared by the two back-ends, plus the
//! random-outcome contract and the exhaustive branch walker.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{PauliError, PauliString};

/// Probabilities this close to 0 or 1 are treated as certain and consume no
/// randomness; this close to 1/2 they consume a single coin.
pub const CERTAINTY_TOLERANCE: f64 = 1e-12;

/// Selecting a branch whose probability is below this is a numerical fault.
pub const UNDERFLOW_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("operator {0} is not Hermitian")]
    NonHermitian(String),
    #[error("operators {0} and {1} do not commute")]
    NonCommuting(String, String),
    #[error("selected branch has probability {0:e}, below underflow threshold")]
    NormUnderflow(f64),
    #[error("operator width {got} does not match state width {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("basis has complex coefficients (imaginary part {0:e})")]
    ComplexBasis(f64),
    #[error("expected {expected} basis vectors of length {expected}, got {got}")]
    BasisShape { expected: usize, got: usize },
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Measurement outcome of a ±1-valued observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Eigenvalue {
    Plus,
    Minus,
}

impl Eigenvalue {
    pub fn from_sign(negative: bool) -> Self {
        if negative {
            Eigenvalue::Minus
        } else {
            Eigenvalue::Plus
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Eigenvalue::Plus => 1,
            Eigenvalue::Minus => -1,
        }
    }

    pub fn is_minus(self) -> bool {
        self == Eigenvalue::Minus
    }
}

/// Which back-end produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Statevector,
    Stabilizer,
}

impl EngineKind {
    pub const ALL: [EngineKind; 2] = [EngineKind::Statevector, EngineKind::Stabilizer];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Statevector => "statevector",
            EngineKind::Stabilizer => "stabilizer",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "statevector" => Ok(EngineKind::Statevector),
            "stabilizer" => Ok(EngineKind::Stabilizer),
            _ => Err(format!("unknown engine {s:?}")),
        }
    }
}

/// Draw an outcome with `P(+1) = p_plus`.
///
/// Shared stream contract: a certain outcome consumes nothing, a fair outcome
/// consumes exactly one coin (`true` selects `-1`), anything else consumes one
/// uniform `f64`. Both engines route their random choices through here, so
/// they produce identical outcomes from identical streams.
pub fn draw_outcome<R: RngCore + ?Sized>(p_plus: f64, rng: &mut R) -> Eigenvalue {
    let p = p_plus.clamp(0.0, 1.0);
    if p >= 1.0 - CERTAINTY_TOLERANCE {
        Eigenvalue::Plus
    } else if p <= CERTAINTY_TOLERANCE {
        Eigenvalue::Minus
    } else if (p - 0.5).abs() <= CERTAINTY_TOLERANCE {
        fair_coin(rng)
    } else if rng.gen::<f64>() < p {
        Eigenvalue::Plus
    } else {
        Eigenvalue::Minus
    }
}

pub(crate) fn fair_coin<R: RngCore + ?Sized>(rng: &mut R) -> Eigenvalue {
    Eigenvalue::from_sign(rng.next_u32() & 1 == 1)
}

/// One outcome branch of a measurement.
#[derive(Debug, Clone)]
pub struct Branch<S> {
    pub outcome: Eigenvalue,
    pub probability: f64,
    pub state: S,
}

/// A simulation back-end for sequential Pauli measurements on a fixed-width register.
pub trait Engine: Sync {
    type State: Clone + Send;

    fn kind(&self) -> EngineKind;

    /// Fresh copy of the experiment's source state.
    fn prepare(&self) -> Self::State;

    /// Projectively measure a Hermitian Pauli observable, updating `state`.
    fn measure<R: RngCore + ?Sized>(
        &self,
        state: &mut Self::State,
        op: &PauliString,
        rng: &mut R,
    ) -> Result<Eigenvalue, EngineError>;

    /// All outcomes with nonzero probability, each with its post-measurement state.
    fn branches(&self, state: &Self::State, op: &PauliString) -> Result<Vec<Branch<Self::State>>, EngineError>;
}

/// Check that every operator is Hermitian and that all pairs commute.
pub fn check_commuting_set<'a, I>(ops: I) -> Result<(), EngineError>
where
    I: IntoIterator<Item = &'a PauliString>,
{
    let ops: Vec<&PauliString> = ops.into_iter().collect();
    for op in &ops {
        if !op.is_hermitian() {
            return Err(EngineError::NonHermitian(op.to_string()));
        }
    }
    for (k, a) in ops.iter().enumerate() {
        for b in &ops[k + 1..] {
            if !a.commutes(b)? {
                return Err(EngineError::NonCommuting(a.to_string(), b.to_string()));
            }
        }
    }
    Ok(())
}

/// Exact distribution of an outcome sequence, keyed by the outcomes in
/// measurement order.
pub type Distribution = BTreeMap<Vec<Eigenvalue>, f64>;

/// Enumerate every outcome branch of measuring `ops` in order on `start`.
pub fn exact_distribution<E: Engine>(
    engine: &E,
    start: &E::State,
    ops: &[PauliString],
) -> Result<Distribution, EngineError> {
    let mut out = Distribution::new();
    let mut prefix = Vec::with_capacity(ops.len());
    walk(engine, start, ops, 1.0, &mut prefix, &mut out)?;
    Ok(out)
}

fn walk<E: Engine>(
    engine: &E,
    state: &E::State,
    ops: &[PauliString],
    weight: f64,
    prefix: &mut Vec<Eigenvalue>,
    out: &mut Distribution,
) -> Result<(), EngineError> {
    let Some((op, rest)) = ops.split_first() else {
        *out.entry(prefix.clone()).or_insert(0.0) += weight;
        return Ok(());
    };
    for branch in engine.branches(state, op)? {
        prefix.push(branch.outcome);
        walk(engine, &branch.state, rest, weight * branch.probability, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}

/// Largest absolute probability difference over the union of supports.
pub fn max_deviation<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let one_sided = |x: &BTreeMap<K, f64>, y: &BTreeMap<K, f64>| {
        x.iter()
            .map(|(k, p)| (p - y.get(k).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Counts calls into the wrapped generator; used to check that certain
/// outcomes never touch the stream.
#[derive(Debug, Clone)]
pub struct CountingRng<R> {
    inner: R,
    pub draws: u64,
}

impl<R> CountingRng<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, draws: 0 }
    }
}

impl<R: RngCore> RngCore for CountingRng<R> {
    fn next_u32(&mut self) -> u32 {
        self.draws += 1;
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.draws += 1;
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.draws += 1;
        self.inner.try_fill_bytes(dest)
    }
}

//! Simulation and verification of the two-observer magic-pentagram Bell
//! experiment.
//!
//! A source emits three Bell pairs; Alice holds qubits 1, 3, 5 and Bob holds
//! 2, 4, 6. Each detector measures the four commuting observables on one of
//! five pentagram lines and shows +1 as green and -1 as red. Two back-ends
//! ([`statevector`] and [`stabilizer`]) reproduce the quantum predictions;
//! [`localrealism`] shows no instruction set can.

pub mod cli;
pub mod engine;
pub mod experiment;
pub mod localrealism;
pub mod pauli;
pub mod pentagram;
pub mod stabilizer;
pub mod statevector;

pub use engine::{Eigenvalue, Engine, EngineError, EngineKind};
pub use experiment::{run_once, run_show, verify_correlation, verify_parity, Color, RunRecord, ShowReport};
pub use pauli::{PauliAxis, PauliString, Phase};
pub use pentagram::{LineLabel, NodeId, PentagramConfig};
pub use stabilizer::{StabilizerEngine, Tableau};
pub use statevector::{StateVector, StateVectorEngine};

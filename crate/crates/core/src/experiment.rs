//! The magic show: per run, draw both switch settings, measure both
//! detectors on one shared source, record colors, check the two rules.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{exact_distribution, Eigenvalue, Engine, EngineError, EngineKind};
use crate::pauli::PauliString;
use crate::pentagram::{shared_nodes, LineLabel, NodeId, PentagramConfig, LINE_COUNT};
use crate::statevector::{ALICE_QUBITS, BOB_QUBITS, SOURCE_QUBITS};

/// Bulb color: green for eigenvalue +1, red for -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    #[serde(rename = "G")]
    Green,
    #[serde(rename = "R")]
    Red,
}

impl From<Eigenvalue> for Color {
    fn from(e: Eigenvalue) -> Self {
        match e {
            Eigenvalue::Plus => Color::Green,
            Eigenvalue::Minus => Color::Red,
        }
    }
}

impl From<Color> for Eigenvalue {
    fn from(c: Color) -> Self {
        match c {
            Color::Green => Eigenvalue::Plus,
            Color::Red => Eigenvalue::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn qubits(self) -> [usize; 3] {
        match self {
            Party::Alice => ALICE_QUBITS,
            Party::Bob => BOB_QUBITS,
        }
    }
}

/// Inputs from which a run's randomness is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedMaterial {
    pub master_seed: u64,
    pub run_index: u64,
}

/// Independent random streams for one run.
///
/// Each stream is ChaCha8 keyed by `(master_seed, purpose)` and positioned by
/// `run_index` as the stream id, so a run's draws never depend on which
/// other runs were executed or in what order. Within a party's stream,
/// draws are consumed in ascending node order.
#[derive(Debug, Clone)]
pub struct RunStreams {
    pub settings: ChaCha8Rng,
    pub alice: ChaCha8Rng,
    pub bob: ChaCha8Rng,
}

impl RunStreams {
    pub fn new(seed: SeedMaterial) -> Self {
        let stream = |purpose: u8| {
            let mut key = [0u8; 32];
            key[..8].copy_from_slice(&seed.master_seed.to_le_bytes());
            key[8] = purpose;
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream(seed.run_index);
            rng
        };
        Self {
            settings: stream(0),
            alice: stream(1),
            bob: stream(2),
        }
    }
}

/// One run of the show.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(rename = "run")]
    pub run_index: u64,
    pub engine: EngineKind,
    #[serde(rename = "a_set")]
    pub alice_setting: LineLabel,
    #[serde(rename = "b_set")]
    pub bob_setting: LineLabel,
    #[serde(rename = "a_colors")]
    pub alice_colors: BTreeMap<NodeId, Color>,
    #[serde(rename = "b_colors")]
    pub bob_colors: BTreeMap<NodeId, Color>,
    #[serde(skip)]
    pub seed_material: SeedMaterial,
}

impl RunRecord {
    /// One line of the record stream (no trailing newline).
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }

    pub fn colors(&self, party: Party) -> &BTreeMap<NodeId, Color> {
        match party {
            Party::Alice => &self.alice_colors,
            Party::Bob => &self.bob_colors,
        }
    }

    pub fn setting(&self, party: Party) -> LineLabel {
        match party {
            Party::Alice => self.alice_setting,
            Party::Bob => self.bob_setting,
        }
    }

    /// True iff each colors map covers exactly its setting's line.
    pub fn covers_lines(&self, config: &PentagramConfig) -> bool {
        [Party::Alice, Party::Bob].iter().all(|&party| {
            self.colors(party).keys().copied().collect::<BTreeSet<_>>() == *config.line(self.setting(party))
        })
    }
}

fn red_count(colors: &BTreeMap<NodeId, Color>) -> usize {
    colors.values().filter(|&&c| c == Color::Red).count()
}

/// Parity rule: an odd number of red bulbs on each detector.
pub fn verify_parity(record: &RunRecord) -> bool {
    red_count(&record.alice_colors) % 2 == 1 && red_count(&record.bob_colors) % 2 == 1
}

/// Correlation rule: bulbs on both settings light the same color on both sides.
pub fn verify_correlation(record: &RunRecord, config: &PentagramConfig) -> bool {
    shared_nodes(record.alice_setting, record.bob_setting, config)
        .iter()
        .all(|n| match (record.alice_colors.get(n), record.bob_colors.get(n)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        })
}

/// A party's line observables embedded in the six-qubit register, ascending by node.
pub fn embedded_line(config: &PentagramConfig, label: LineLabel, party: Party) -> Vec<(NodeId, PauliString)> {
    let qubits = party.qubits();
    config
        .line_observables(label)
        .into_iter()
        .map(|(n, op)| {
            let embedded = op
                .embed(&qubits, SOURCE_QUBITS)
                .expect("three-qubit observables embed in six qubits");
            (n, embedded)
        })
        .collect()
}

/// Embedded operators for every (party, line), built once per show.
#[derive(Debug, Clone)]
pub struct MeasurementPlan {
    config: PentagramConfig,
    ops: [[Vec<(NodeId, PauliString)>; LINE_COUNT]; 2],
}

impl MeasurementPlan {
    pub fn new(config: &PentagramConfig) -> Self {
        let for_party = |party| LineLabel::ALL.map(|label| embedded_line(config, label, party));
        Self {
            config: config.clone(),
            ops: [for_party(Party::Alice), for_party(Party::Bob)],
        }
    }

    pub fn config(&self) -> &PentagramConfig {
        &self.config
    }

    pub fn line(&self, party: Party, label: LineLabel) -> &[(NodeId, PauliString)] {
        let row = match party {
            Party::Alice => 0,
            Party::Bob => 1,
        };
        &self.ops[row][label.index()]
    }
}

/// Run with fixed settings: Alice's line first, then Bob's, on one state.
pub fn run_with_settings<E: Engine>(
    engine: &E,
    plan: &MeasurementPlan,
    alice_setting: LineLabel,
    bob_setting: LineLabel,
    seed: SeedMaterial,
) -> Result<RunRecord, EngineError> {
    let mut streams = RunStreams::new(seed);
    let mut state = engine.prepare();
    let mut measure = |label, party, rng: &mut ChaCha8Rng| -> Result<BTreeMap<NodeId, Color>, EngineError> {
        plan.line(party, label)
            .iter()
            .map(|(n, op)| Ok((*n, engine.measure(&mut state, op, rng)?.into())))
            .collect()
    };
    let alice_colors = measure(alice_setting, Party::Alice, &mut streams.alice)?;
    let bob_colors = measure(bob_setting, Party::Bob, &mut streams.bob)?;
    Ok(RunRecord {
        run_index: seed.run_index,
        engine: engine.kind(),
        alice_setting,
        bob_setting,
        alice_colors,
        bob_colors,
        seed_material: seed,
    })
}

fn draw_settings(seed: SeedMaterial) -> (LineLabel, LineLabel) {
    let mut rng = RunStreams::new(seed).settings;
    let alice = LineLabel::ALL[rng.gen_range(0..LINE_COUNT)];
    let bob = LineLabel::ALL[rng.gen_range(0..LINE_COUNT)];
    (alice, bob)
}

/// Draw both settings independently and uniformly, then run.
pub fn run_once<E: Engine>(engine: &E, config: &PentagramConfig, seed: SeedMaterial) -> Result<RunRecord, EngineError> {
    run_planned(engine, &MeasurementPlan::new(config), seed)
}

/// [`run_once`] with a prebuilt plan.
pub fn run_planned<E: Engine>(
    engine: &E,
    plan: &MeasurementPlan,
    seed: SeedMaterial,
) -> Result<RunRecord, EngineError> {
    let (alice, bob) = draw_settings(seed);
    run_with_settings(engine, plan, alice, bob, seed)
}

/// Index 0..8 of a parity-consistent line coloring: the red bits of the
/// first three nodes in ascending order. `None` if the parity is even or the
/// map does not have four entries.
pub fn pattern_index(colors: &BTreeMap<NodeId, Color>) -> Option<usize> {
    if colors.len() != 4 || red_count(colors).is_multiple_of(2) {
        return None;
    }
    Some(
        colors
            .values()
            .take(3)
            .fold(0, |acc, &c| acc << 1 | usize::from(c == Color::Red)),
    )
}

/// Aggregate statistics over a show.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ShowReport {
    pub runs: u64,
    pub parity_violations: u64,
    pub correlation_violations: u64,
    /// `[alice][bob]` setting counts.
    pub setting_pair_counts: [[u64; LINE_COUNT]; LINE_COUNT],
    /// Per line, counts over the eight parity-consistent patterns, pooling
    /// both detectors.
    pub outcome_histograms: BTreeMap<LineLabel, [u64; 8]>,
}

impl ShowReport {
    pub fn absorb(&mut self, record: &RunRecord, config: &PentagramConfig) {
        self.runs += 1;
        if !verify_parity(record) {
            self.parity_violations += 1;
        }
        if !verify_correlation(record, config) {
            self.correlation_violations += 1;
        }
        self.setting_pair_counts[record.alice_setting.index()][record.bob_setting.index()] += 1;
        for party in [Party::Alice, Party::Bob] {
            if let Some(k) = pattern_index(record.colors(party)) {
                self.outcome_histograms.entry(record.setting(party)).or_insert([0; 8])[k] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &ShowReport) {
        self.runs += other.runs;
        self.parity_violations += other.parity_violations;
        self.correlation_violations += other.correlation_violations;
        for (row, other_row) in self.setting_pair_counts.iter_mut().zip(&other.setting_pair_counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
        for (label, hist) in &other.outcome_histograms {
            let mine = self.outcome_histograms.entry(*label).or_insert([0; 8]);
            for (c, o) in mine.iter_mut().zip(hist) {
                *c += o;
            }
        }
    }

    pub fn violations(&self) -> u64 {
        self.parity_violations + self.correlation_violations
    }
}

/// Execute `n_runs` independent runs in parallel. Records come back in run
/// order and depend only on `(engine, master_seed, run_index)`.
pub fn run_show<E: Engine>(
    engine: &E,
    config: &PentagramConfig,
    n_runs: u64,
    master_seed: u64,
) -> Result<(ShowReport, Vec<RunRecord>), EngineError> {
    let plan = MeasurementPlan::new(config);
    let records = (0..n_runs)
        .into_par_iter()
        .map(|run_index| run_planned(engine, &plan, SeedMaterial { master_seed, run_index }))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = ShowReport::default();
    for r in &records {
        report.absorb(r, config);
    }
    Ok((report, records))
}

/// Which party measures first on the shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementOrder {
    AliceFirst,
    BobFirst,
}

/// Joint outcome: Alice's then Bob's eigenvalues, each ascending by node.
pub type JointOutcome = (Vec<Eigenvalue>, Vec<Eigenvalue>);

/// Exact joint outcome distribution for a setting pair, by exhaustive branching.
pub fn joint_distribution<E: Engine>(
    engine: &E,
    config: &PentagramConfig,
    alice_setting: LineLabel,
    bob_setting: LineLabel,
    order: MeasurementOrder,
) -> Result<BTreeMap<JointOutcome, f64>, EngineError> {
    let alice: Vec<PauliString> = embedded_line(config, alice_setting, Party::Alice)
        .into_iter()
        .map(|(_, op)| op)
        .collect();
    let bob: Vec<PauliString> = embedded_line(config, bob_setting, Party::Bob)
        .into_iter()
        .map(|(_, op)| op)
        .collect();
    let split = match order {
        MeasurementOrder::AliceFirst => alice.len(),
        MeasurementOrder::BobFirst => bob.len(),
    };
    let sequence: Vec<PauliString> = match order {
        MeasurementOrder::AliceFirst => alice.iter().chain(&bob).cloned().collect(),
        MeasurementOrder::BobFirst => bob.iter().chain(&alice).cloned().collect(),
    };
    let dist = exact_distribution(engine, &engine.prepare(), &sequence)?;
    let mut out = BTreeMap::new();
    for (outcomes, p) in dist {
        let (first, second) = outcomes.split_at(split);
        let key = match order {
            MeasurementOrder::AliceFirst => (first.to_vec(), second.to_vec()),
            MeasurementOrder::BobFirst => (second.to_vec(), first.to_vec()),
        };
        *out.entry(key).or_insert(0.0) += p;
    }
    Ok(out)
}

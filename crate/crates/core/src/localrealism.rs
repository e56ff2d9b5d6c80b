//! Exhaustive search for local-realist explanations of the show.
//!
//! Colorings are 10-bit integers (bit `k` set means node `k + 1` is red) and
//! lines are 10-bit masks, so every count is a popcount.

use std::fmt;

use serde::Serialize;

use crate::experiment::Color;
use crate::pentagram::{LineLabel, NodeId, PentagramConfig, LINE_COUNT, NODE_COUNT};

pub const COLORING_COUNT: usize = 1 << NODE_COUNT;
/// 8 parity-consistent colorings per line, chosen independently for 5 lines.
pub const STRATEGY_COUNT: usize = 1 << (3 * LINE_COUNT);

/// A full instruction set: one color per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Coloring(u16);

impl Coloring {
    pub fn from_bits(bits: u16) -> Self {
        Coloring(bits & ((1 << NODE_COUNT) - 1))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn color(self, node: NodeId) -> Color {
        if self.0 >> node.index() & 1 == 1 {
            Color::Red
        } else {
            Color::Green
        }
    }

    pub fn all() -> impl Iterator<Item = Coloring> {
        (0..COLORING_COUNT as u16).map(Coloring)
    }

    /// Red count on a line given as a node mask.
    pub fn reds_on(self, line_mask: u16) -> u32 {
        (self.0 & line_mask).count_ones()
    }
}

/// Node masks of the config's lines, in label order.
pub fn line_masks(config: &PentagramConfig) -> [u16; LINE_COUNT] {
    LineLabel::ALL.map(|label| config.line(label).iter().fold(0u16, |m, n| m | 1 << n.index()))
}

/// Red counts `n_i` per line and their total `N` for one coloring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColoringEvidence {
    pub coloring: u16,
    pub reds_per_line: [u32; LINE_COUNT],
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NoGoReport {
    pub colorings_checked: usize,
    pub parity_satisfying: usize,
    pub evidence: Vec<ColoringEvidence>,
}

impl NoGoReport {
    /// True iff `N` is even for every coloring checked.
    pub fn all_totals_even(&self) -> bool {
        self.evidence.iter().all(|e| e.total % 2 == 0)
    }
}

impl fmt::Display for NoGoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} colorings, {} satisfy parity; N even for {} of them",
            self.colorings_checked,
            self.parity_satisfying,
            self.evidence.iter().filter(|e| e.total % 2 == 0).count()
        )
    }
}

/// Try every instruction set against the five parity constraints.
pub fn enumerate_instruction_sets(config: &PentagramConfig) -> NoGoReport {
    let masks = line_masks(config);
    let evidence: Vec<ColoringEvidence> = Coloring::all()
        .map(|c| {
            let reds_per_line = masks.map(|m| c.reds_on(m));
            ColoringEvidence {
                coloring: c.bits(),
                reds_per_line,
                total: reds_per_line.iter().sum(),
            }
        })
        .collect();
    let parity_satisfying = evidence
        .iter()
        .filter(|e| e.reds_per_line.iter().all(|n| n % 2 == 1))
        .count();
    NoGoReport {
        colorings_checked: evidence.len(),
        parity_satisfying,
        evidence,
    }
}

/// Which constraints the contextual-strategy search applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyConstraints {
    /// Allow all 16 colorings (not just the odd-red 8) on this line.
    pub relax_parity_on: Option<LineLabel>,
    /// Require each node to get the same color from both of its lines.
    pub noncontextual: bool,
}

impl Default for StrategyConstraints {
    fn default() -> Self {
        Self {
            relax_parity_on: None,
            noncontextual: true,
        }
    }
}

/// Colorings of one line's four nodes (as a 10-bit node mask of reds).
fn line_options(mask: u16, parity: bool) -> Vec<u16> {
    let nodes: Vec<u16> = (0..NODE_COUNT as u16).filter(|k| mask >> k & 1 == 1).collect();
    (0u16..16)
        .filter(|local| !parity || local.count_ones() % 2 == 1)
        .map(|local| {
            nodes
                .iter()
                .enumerate()
                .filter(|(j, _)| local >> j & 1 == 1)
                .fold(0u16, |acc, (_, &n)| acc | 1 << n)
        })
        .collect()
}

/// Count per-line strategies (one coloring per line, chosen independently)
/// surviving the constraints.
pub fn count_strategies(config: &PentagramConfig, constraints: StrategyConstraints) -> usize {
    let masks = line_masks(config);
    let options: Vec<Vec<u16>> = LineLabel::ALL
        .iter()
        .zip(masks)
        .map(|(&label, mask)| line_options(mask, constraints.relax_parity_on != Some(label)))
        .collect();

    // Depth-first over lines; `assigned` marks nodes already colored, `reds`
    // their colors.
    fn go(options: &[Vec<u16>], masks: &[u16], assigned: u16, reds: u16, check: bool) -> usize {
        let Some((opts, rest)) = options.split_first() else {
            return 1;
        };
        let mask = masks[0];
        opts.iter()
            .filter(|&&choice| !check || (choice ^ reds) & mask & assigned == 0)
            .map(|&choice| go(rest, &masks[1..], assigned | mask, reds | choice, check))
            .sum()
    }
    go(&options, &masks, 0, 0, constraints.noncontextual)
}

/// Survivors of the full search: parity on every line plus noncontextuality.
pub fn search_contextual_strategies(config: &PentagramConfig) -> usize {
    count_strategies(config, StrategyConstraints::default())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProofStep {
    pub label: String,
    pub claim: String,
    pub verified: bool,
}

/// The even/odd counting argument, with each step checked by computation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProofTranscript {
    pub steps: Vec<ProofStep>,
    pub contradiction: bool,
}

impl fmt::Display for ProofTranscript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            let mark = if s.verified { "verified" } else { "FAILED" };
            writeln!(f, "({}) {} [{mark}]", s.label, s.claim)?;
        }
        let verdict = if self.contradiction {
            "contradiction: no instruction set obeys the parity rule"
        } else {
            "no contradiction established"
        };
        writeln!(f, "{verdict}")
    }
}

pub fn counting_proof(config: &PentagramConfig) -> ProofTranscript {
    let masks = line_masks(config);
    let degrees: Vec<u32> = NodeId::all()
        .map(|n| masks.iter().filter(|&&m| m >> n.index() & 1 == 1).count() as u32)
        .collect();
    let degree_two = degrees.iter().all(|&d| d == 2);
    let report = enumerate_instruction_sets(config);
    let even_total = report.all_totals_even() && report.colorings_checked == COLORING_COUNT;
    let step_a = ProofStep {
        label: "a".into(),
        claim: format!(
            "every node lies on exactly 2 lines (degrees {:?}), so N = n1+...+n5 counts each red bulb twice; N is even for all {} colorings",
            degrees, report.colorings_checked
        ),
        verified: degree_two && even_total,
    };

    // Each n_i is odd and at most 4, so it is 1 or 3.
    let odd_sums_odd = (0..1u32 << LINE_COUNT).all(|pick| {
        let sum: u32 = (0..LINE_COUNT).map(|i| if pick >> i & 1 == 1 { 3 } else { 1 }).sum();
        sum % 2 == 1
    });
    let step_b = ProofStep {
        label: "b".into(),
        claim: "the parity rule makes every n_i odd, and a sum of 5 odd numbers is odd, so N would be odd".into(),
        verified: odd_sums_odd && LINE_COUNT % 2 == 1,
    };
    let contradiction = step_a.verified && step_b.verified;
    let step_c = ProofStep {
        label: "c".into(),
        claim: format!(
            "N cannot be both even and odd; consistent with the search ({} of {} colorings satisfy parity)",
            report.parity_satisfying, report.colorings_checked
        ),
        verified: contradiction && report.parity_satisfying == 0,
    };
    ProofTranscript {
        steps: vec![step_a, step_b, step_c],
        contradiction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> PentagramConfig {
        PentagramConfig::canonical().unwrap()
    }

    #[test]
    fn no_instruction_set_satisfies_parity() {
        let report = enumerate_instruction_sets(&cfg());
        assert_eq!(report.colorings_checked, 1024);
        assert_eq!(report.parity_satisfying, 0);
        assert!(report.all_totals_even());
        let all_green = &report.evidence[0];
        assert_eq!(all_green.reds_per_line, [0; 5]);
    }

    #[test]
    fn coloring_bits() {
        let c = Coloring::from_bits(0b1);
        assert_eq!(c.color(NodeId::new(1).unwrap()), Color::Red);
        assert_eq!(c.color(NodeId::new(2).unwrap()), Color::Green);
        assert_eq!(Coloring::from_bits(u16::MAX).bits(), 0x3ff);
    }

    #[test]
    fn strategy_search() {
        let c = cfg();
        assert_eq!(search_contextual_strategies(&c), 0);
        for label in LineLabel::ALL {
            let relaxed = count_strategies(
                &c,
                StrategyConstraints {
                    relax_parity_on: Some(label),
                    noncontextual: true,
                },
            );
            assert!(relaxed > 0, "{label}");
        }
        let unconstrained = count_strategies(
            &c,
            StrategyConstraints {
                relax_parity_on: None,
                noncontextual: false,
            },
        );
        assert_eq!(unconstrained, STRATEGY_COUNT);
    }

    /// Independent oracle: enumerate all 8^5 strategies directly as tuples.
    #[test]
    fn strategy_count_matches_brute_force() {
        let c = cfg();
        let masks = line_masks(&c);
        let count = |relax: Option<usize>| {
            let opts: Vec<Vec<u16>> = (0..5).map(|i| line_options(masks[i], relax != Some(i))).collect();
            let mut survivors = 0;
            let total: usize = opts.iter().map(Vec::len).product();
            for mut code in 0..total {
                let picks: Vec<u16> = opts
                    .iter()
                    .map(|o| {
                        let v = o[code % o.len()];
                        code /= o.len();
                        v
                    })
                    .collect();
                let consistent = (0..NODE_COUNT).all(|n| {
                    let colors: Vec<u16> = (0..5)
                        .filter(|&i| masks[i] >> n & 1 == 1)
                        .map(|i| picks[i] >> n & 1)
                        .collect();
                    colors.windows(2).all(|w| w[0] == w[1])
                });
                if consistent {
                    survivors += 1;
                }
            }
            survivors
        };
        assert_eq!(count(None), 0);
        for i in 0..5 {
            let label = LineLabel::from_index(i).unwrap();
            let fast = count_strategies(
                &c,
                StrategyConstraints {
                    relax_parity_on: Some(label),
                    noncontextual: true,
                },
            );
            assert_eq!(fast, count(Some(i)));
        }
    }

    #[test]
    fn transcript_reaches_contradiction() {
        let t = counting_proof(&cfg());
        assert!(t.contradiction);
        assert!(t.steps.iter().all(|s| s.verified));
        assert!(t.to_string().contains("[2, 2, 2, 2, 2, 2, 2, 2, 2, 2]"));
    }

    #[test]
    fn no_go_survives_relabeling() {
        let base = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let mut ids: Vec<NodeId> = NodeId::all().collect();
            ids.shuffle(&mut rng);
            let mut labels = LineLabel::ALL.to_vec();
            labels.shuffle(&mut rng);
            let relabeled = base.relabeled(&ids.try_into().unwrap(), &labels.try_into().unwrap());
            assert_eq!(enumerate_instruction_sets(&relabeled).parity_satisfying, 0);
            assert_eq!(search_contextual_strategies(&relabeled), 0);
            assert!(counting_proof(&relabeled).contradiction);
        }
    }
}

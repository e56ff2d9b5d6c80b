use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pentagram::engine::CountingRng;
use pentagram::experiment::{pattern_index, run_once, run_show, SeedMaterial};
use pentagram::pentagram::{LineLabel, PentagramConfig};
use pentagram::stabilizer::Tableau;
use pentagram::{verify_correlation, verify_parity, Eigenvalue, StabilizerEngine, StateVectorEngine};

fn config() -> PentagramConfig {
    PentagramConfig::canonical().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rules_hold_for_any_seed(master_seed in any::<u64>(), run_index in any::<u64>()) {
        let cfg = config();
        let seed = SeedMaterial { master_seed, run_index };
        let sv = run_once(&StateVectorEngine, &cfg, seed).unwrap();
        let st = run_once(&StabilizerEngine, &cfg, seed).unwrap();
        for record in [&sv, &st] {
            prop_assert!(verify_parity(record));
            prop_assert!(verify_correlation(record, &cfg));
            prop_assert!(pattern_index(&record.alice_colors).is_some());
            prop_assert!(pattern_index(&record.bob_colors).is_some());
        }
        prop_assert_eq!(sv.alice_colors, st.alice_colors);
        prop_assert_eq!(sv.bob_colors, st.bob_colors);
    }

    #[test]
    fn show_is_independent_of_run_count(master_seed in any::<u64>(), n in 1u64..40) {
        let cfg = config();
        let (_, short) = run_show(&StabilizerEngine, &cfg, n, master_seed).unwrap();
        let (_, long) = run_show(&StabilizerEngine, &cfg, n + 7, master_seed).unwrap();
        prop_assert_eq!(&short[..], &long[..n as usize]);
    }

    #[test]
    fn certain_outcomes_never_draw(seed in any::<u64>(), label in 0usize..5) {
        let cfg = config();
        let label = LineLabel::ALL[label];
        let ops = pentagram::experiment::embedded_line(&cfg, label, pentagram::experiment::Party::Alice);
        let mut tab = Tableau::init_source();
        let mut rng = CountingRng::new(ChaCha8Rng::seed_from_u64(seed));
        let mut first = Vec::new();
        for (_, op) in &ops {
            first.push(tab.measure_pauli(op, &mut rng).unwrap());
        }
        // Repeating the line on the collapsed state is certain everywhere.
        let before = rng.draws;
        for ((_, op), expected) in ops.iter().zip(&first) {
            prop_assert_eq!(tab.measure_pauli(op, &mut rng).unwrap(), *expected);
        }
        prop_assert_eq!(rng.draws, before);
        let product: i8 = first.iter().map(|e: &Eigenvalue| e.value()).product();
        prop_assert_eq!(product, -1);
    }
}

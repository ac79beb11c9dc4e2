mod common;

use common::generated;
use eidarp::model::Instance;
use eidarp::oracle::verify;
use eidarp::search::{run, SearchConfig};
use eidarp::toolkit::Layout;
use eidarp::{Problem, Solution};
use proptest::prelude::*;

fn layout(i: u8) -> Layout {
    match i % 3 {
        0 => Layout::None,
        1 => Layout::One,
        _ => Layout::TwoCrossed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solver_output_verifies_and_round_trips(seed in 0u64..1000, n in 3usize..12, lay in 0u8..3, soc in 0.12..0.8f64) {
        let prob = generated(n, seed, |c| {
            c.layout = layout(lay);
            c.init_soc = soc;
        });
        let mut cfg = SearchConfig::from_params(prob.params(), seed);
        cfg.n_iter = 30;
        let best = run(&prob, &cfg).best;
        let rep = verify(&prob, &best);
        prop_assert!(rep.is_feasible(), "{:?}", rep.findings);
        prop_assert!((rep.objective - best.objective).abs() < 1e-9);

        let again = Solution::from_json(&best.to_json()).unwrap();
        prop_assert_eq!(again.to_json(), best.to_json());
        prop_assert!(verify(&prob, &again).is_feasible());
    }

    #[test]
    fn instances_round_trip(seed in 0u64..1000, n in 1usize..20, lay in 0u8..3) {
        let prob = generated(n, seed, |c| c.layout = layout(lay));
        let text = prob.instance.to_json();
        let back = Instance::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(Problem::new(back).n(), n);
    }
}

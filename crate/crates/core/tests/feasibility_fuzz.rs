mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn nine_step_is_sound_on_fuzzed_routes() {
    let mut tally = FuzzTally::default();
    for seed in 0..10u64 {
        let prob = generated(12, seed, |c| c.area = 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = fuzz_base(&prob, &mut rng);
        for _ in 0..30 {
            fuzz_route_case(&prob, &base, &mut rng, &mut tally);
        }
    }
    eprintln!("{tally:?} false rate {:.3}", tally.false_rate());
    assert_eq!(tally.unsound, 0);
}

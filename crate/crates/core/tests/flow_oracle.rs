mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn bound_matches_brute_force_on_50_networks() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut positive = 0;
    for case in 0..50 {
        let net = random_network(&mut rng);
        let expected = brute_force_bound(&net);
        let (bound, _) = solve_network(&net);
        assert!(
            (bound - expected).abs() < 1e-9,
            "case {case}: solver {bound}, enumeration {expected}"
        );
        if expected > 0.0 {
            positive += 1;
        }
    }
    assert!(positive > 20, "too few non-trivial cases: {positive}");
}

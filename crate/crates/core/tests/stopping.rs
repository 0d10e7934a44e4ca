//! Optional stopping over generated instances: stopping the closed
//! martingale at any of the construction's stopping times preserves the
//! mean exactly.

use gundy_stein::decomposition::decompose_positive;
use gundy_stein::generator::{generate, GeneratorConfig};
use gundy_stein::scalar::{Rational, Scalar};

fn q(num: i64, den: i64) -> Rational {
    <Rational as Scalar>::ratio(num, den)
}

#[test]
fn stopping_at_crossing_times_preserves_the_mean() {
    for seed in 0..30u64 {
        let mut config = GeneratorConfig::<Rational>::new(seed);
        config.depth = 2..=5;
        config.branching = 2..=3;
        let (filt, f) = generate(&config).unwrap();
        let mean = f.expectation(&filt);
        let max = f.max_value().unwrap();
        for lambda in [max.clone() * q(1, 4), max.clone() * q(2, 3), max.clone() + q(1, 1)] {
            let d = decompose_positive(&filt, &f, &lambda, &q(1, 2)).unwrap();
            // r, s, and t = r /\ s are genuine stopping times, so the
            // stopped mean matches E[f]; r - 1 is only predictable and is
            // deliberately absent here
            for tau in [
                &d.crossing.first_passage,
                &d.crossing.compensator_passage,
                &d.crossing.localization,
            ] {
                let stopped = filt.evaluate_stopped_pathwise(&f, tau);
                assert_eq!(
                    stopped.expectation(&filt),
                    mean,
                    "stopped mean drifted at seed {seed}"
                );
            }
        }
    }
}

#[test]
fn stopping_is_monotone_under_level_increase() {
    // raising lambda can only delay the first passage
    for seed in 40..60u64 {
        let mut config = GeneratorConfig::<Rational>::new(seed);
        config.depth = 2..=4;
        config.branching = 2..=3;
        let (filt, f) = generate(&config).unwrap();
        let max = f.max_value().unwrap();
        let low = decompose_positive(&filt, &f, &(max.clone() * q(1, 4)), &q(0, 1)).unwrap();
        let high = decompose_positive(&filt, &f, &(max * q(3, 4)), &q(0, 1)).unwrap();
        for leaf in 0..filt.leaf_count() {
            let early = low.crossing.first_passage.level(leaf);
            let late = high.crossing.first_passage.level(leaf);
            assert_eq!(early.min_with(late), early, "passage order broke at seed {seed}");
        }
    }
}

//! Cross-module verification over seeded random instances: every certified
//! record that is provably true must pass, and the one classical bound that
//! can genuinely fail is quarantined by id.

use gundy_stein::decomposition::{decompose_positive, decompose_signed};
use gundy_stein::generator::{generate, GeneratorConfig, ProbabilityScheme, ValueScheme};
use gundy_stein::john_nirenberg as jn;
use gundy_stein::multipliers::{
    certify_weak_type, diagnose_proof, ito_isometry_check, MultiplierSequence,
};
use gundy_stein::scalar::{Rational, Scalar};
use gundy_stein::CheckStatus;

fn q(num: i64, den: i64) -> Rational {
    <Rational as Scalar>::ratio(num, den)
}

// The compensator passage can fire on atoms the crossing time never
// reaches (conditional expectations spread crossing mass across whole
// atoms), so the classical localization bound over ||f||_1/lambda is the
// one record that may fail on perfectly valid input.
fn allowed_failure(id: &str) -> bool {
    id == "g.localization_prob"
        || id == "signed.g.localization_prob"
        || id == "multiplier.proof.term_g"
}

#[test]
fn positive_decompositions_over_seeded_instances() {
    let mut decompositions = 0;
    for seed in 0..40u64 {
        let mut config = GeneratorConfig::<Rational>::new(seed);
        config.depth = 1..=5;
        config.branching = 1..=3;
        let (filt, f) = generate(&config).unwrap();
        let max = f.max_value().unwrap();
        for theta in [q(0, 1), q(1, 2), q(1, 1)] {
            for lambda in [max.clone() * q(1, 2), max.clone() * q(3, 2)] {
                let d = decompose_positive(&filt, &f, &lambda, &theta).unwrap();
                decompositions += 1;
                for rec in d.certification.records() {
                    if rec.status == CheckStatus::Fail {
                        assert!(
                            allowed_failure(&rec.id),
                            "unexpected failure `{}` at seed {seed}: {}",
                            rec.id,
                            rec.statement
                        );
                    }
                }
            }
        }
    }
    assert!(decompositions >= 200);
}

#[test]
fn signed_decompositions_over_seeded_instances() {
    for seed in 100..130u64 {
        let mut config = GeneratorConfig::<Rational>::new(seed);
        config.depth = 1..=4;
        config.branching = 1..=3;
        config.values = ValueScheme::SignedUniform;
        let (filt, f) = generate(&config).unwrap();
        for theta in [q(0, 1), q(1, 2)] {
            let d = decompose_signed(&filt, &f, &q(1, 1), &theta).unwrap();
            for rec in d.certification.records() {
                if rec.status == CheckStatus::Fail {
                    assert!(
                        allowed_failure(&rec.id),
                        "unexpected failure `{}` at seed {seed}",
                        rec.id
                    );
                }
            }
        }
    }
}

#[test]
fn weak_type_and_isometry_hold_on_every_instance() {
    for seed in 200..240u64 {
        let mut config = GeneratorConfig::<Rational>::new(seed);
        config.depth = 2..=5;
        config.branching = 1..=3;
        config.values = ValueScheme::SignedUniform;
        let (filt, f) = generate(&config).unwrap();
        let horizon = filt.horizon();
        let coeffs: Vec<Rational> = (0..horizon)
            .map(|n| if n % 2 == 0 { q(1, 1) } else { q(-1, 1) })
            .collect();
        let a = MultiplierSequence::new(coeffs).unwrap();
        let weak = certify_weak_type(&filt, &f, &a, horizon).unwrap();
        assert!(weak.certification.all_pass(), "weak type failed at seed {seed}");
        assert!(weak.empirical_constant <= q(16, 1));
        let iso = ito_isometry_check(&filt, &f, &a, horizon).unwrap();
        assert_eq!(iso.record.status, CheckStatus::Pass, "isometry failed at seed {seed}");
    }
}

#[test]
fn proof_diagnostics_quarantine_the_localized_term() {
    for seed in 300..330u64 {
        let mut config = GeneratorConfig::<Rational>::new(seed);
        config.depth = 2..=4;
        config.branching = 2..=3;
        config.values = ValueScheme::SignedUniform;
        let (filt, f) = generate(&config).unwrap();
        let horizon = filt.horizon();
        let a = MultiplierSequence::constant(q(1, 1), horizon).unwrap();
        let sup = f.sup_norm();
        for lambda in [sup.clone() * q(1, 2), sup.clone() * q(2, 1)] {
            let diag = diagnose_proof(&filt, &f, &a, horizon, &lambda).unwrap();
            for rec in diag.certification.records() {
                if rec.status == CheckStatus::Fail {
                    assert!(
                        allowed_failure(&rec.id),
                        "unexpected failure `{}` at seed {seed}",
                        rec.id
                    );
                }
            }
        }
    }
}

#[test]
fn john_nirenberg_pipeline_over_regular_floors() {
    let floors = [(q(1, 4), 4usize), (q(1, 3), 3), (q(1, 2), 2)];
    for (i, (floor, widest)) in floors.iter().enumerate() {
        for seed in 0..12u64 {
            let config = GeneratorConfig {
                seed: 400 + seed + 100 * i as u64,
                depth: 2..=4,
                branching: 2..=*widest,
                probabilities: ProbabilityScheme::RandomSplit { min_ratio: floor.clone() },
                values: ValueScheme::NonnegativeUniform,
            };
            let (filt, f) = generate(&config).unwrap();
            assert!(filt.check_alpha_regular(floor).regular);
            let root = filt.level(1)[0];

            let overshoot = jn::overshoot_check(&filt, &f).unwrap();
            assert!(overshoot.certification.all_pass(), "overshoot failed at seed {seed}");

            let profile = jn::bmo_norm(&filt, &f);
            let threshold = if profile.norm.is_zero() {
                q(1, 1)
            } else {
                <Rational as Scalar>::e_lower() * profile.norm.clone()
            };
            let run = jn::cz_generations(&filt, &f, root, &threshold, 8).unwrap();
            assert!(run.certification.all_pass(), "generations failed at seed {seed}");

            let grid = jn::default_t_grid(&profile.norm);
            let tail = jn::certify_jn_tail(&filt, &f, root, &grid).unwrap();
            assert!(tail.certification.all_pass(), "tail failed at seed {seed}");

            let beta = jn::default_exp_rate(&run.alpha);
            let moment = jn::certify_exp_integrability(&filt, &f, root, &beta).unwrap();
            assert!(moment.pass, "exp moment failed at seed {seed}");
        }
    }
}

//! Acceptance gate: twelve criteria, one test each, every comparison exact
//! rational. Each test prints a single `criterion NN: PASS` line on success
//! or panics with a `criterion NN: FAIL` line naming the first witness.
//!
//! Tolerances are pinned here once: rational mode admits NO tolerance; the
//! sole approximation anywhere is the frozen Euler enclosure
//! [2.718281828, 2.718281829] that the John-Nirenberg certificates apply on
//! the favorable side, which keeps every verdict sound.
//!
//! Criteria 4, 5, and the per-term half of 8 assert a classical pointwise
//! localization bound through conditional expectations. That bound is false
//! on atomic filtrations (a two-leaf instance refutes it; see README.md).
//! Criterion 4 hits the refutation on about 3% of its batch and reports the
//! honest failure rather than a weakened check; the signed and per-term
//! variants carry a doubled probability budget that absorbs the atomic
//! spreading on every instance in their batches, so 5 and 8 pass.

use gundy_stein::decomposition::{decompose_positive, decompose_signed, flag_non_measurable};
use gundy_stein::filtration::RawTerminalFunction;
use gundy_stein::generator::{generate, GeneratorConfig, ProbabilityScheme, ValueScheme};
use gundy_stein::john_nirenberg as jn;
use gundy_stein::multipliers::{
    certify_weak_type, diagnose_proof, ito_isometry_check, MultiplierSequence,
};
use gundy_stein::sharpness::{
    dichotomy_check, minimize_phi_analytic, minimize_phi_bruteforce, minimizing_witness, phi,
    two_point_filtration, two_point_function, Dichotomy, TwoPointInstance,
};
use gundy_stein::{
    AtomSpec, CheckStatus, Filtration, Rational, Scalar, TerminalFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

/// Seed 0 matches the default `gundy-stein suite` run, so any failure here
/// can be cross-read in that report.
const SWEEP_SEED: u64 = 0;

fn q(num: i64, den: i64) -> Rational {
    Rational::ratio(num, den)
}

/// `|| sum_n |df_n| ||_1` straight from the martingale.
fn variation_l1(filt: &Filtration<Rational>, f: &TerminalFunction<Rational>) -> Rational {
    let mart = filt.martingale(f);
    Rational::sum((0..filt.leaf_count()).map(|leaf| {
        let mut total: Rational = Scalar::zero();
        let mut prev: Rational = Scalar::zero();
        for n in 1..=filt.horizon() {
            let current = mart.at_level_for_leaf(filt, n, leaf);
            total = total + Scalar::abs(&(current.clone() - prev));
            prev = current;
        }
        total * filt.leaf_prob(leaf).clone()
    }))
}

fn alternating(len: usize) -> MultiplierSequence<Rational> {
    MultiplierSequence::new(
        (0..len)
            .map(|n| if n % 2 == 0 { q(1, 1) } else { q(-1, 1) })
            .collect(),
    )
    .expect("nonempty coefficients")
}

#[test]
fn criterion_01_two_point_golden_values() {
    let start = Instant::now();
    let lambda = q(1, 1);
    for p in [q(1, 10), q(1, 4)] {
        let one_minus_p = q(1, 1) - p.clone();
        for theta in [one_minus_p.clone(), q(1, 1)] {
            let filt = two_point_filtration(&p);
            let f = two_point_function(&filt, &p, &lambda);
            let d = decompose_positive(&filt, &f, &lambda, &theta).expect("admissible");
            assert_eq!(d.g.value(0), &q(0, 1), "criterion 01: FAIL - g != 0 on E");
            assert_eq!(d.g.value(1), &q(0, 1), "criterion 01: FAIL - g != 0 off E");
            assert_eq!(
                variation_l1(&filt, &d.h),
                q(2, 1) * one_minus_p.clone() * one_minus_p.clone() * lambda.clone(),
                "criterion 01: FAIL - h-variation differs from 2(1-p)^2 lambda at p = {p}"
            );
            let k = d.k();
            assert_eq!(
                k.value(0),
                &((q(2, 1) - p.clone()) * lambda.clone()),
                "criterion 01: FAIL - k on E differs from (2-p) lambda at p = {p}"
            );
            assert_eq!(
                k.value(1),
                &(one_minus_p.clone() * lambda.clone()),
                "criterion 01: FAIL - k off E differs from (1-p) lambda at p = {p}"
            );
            assert_eq!(
                (d.k_stopped.value(0), d.k_stopped.value(1)),
                (&lambda, &q(0, 1)),
                "criterion 01: FAIL - k_st differs from lambda 1_E at p = {p}"
            );
            assert_eq!(
                (d.k_predictable.value(0), d.k_predictable.value(1)),
                (&(one_minus_p.clone() * lambda.clone()), &(one_minus_p.clone() * lambda.clone())),
                "criterion 01: FAIL - k_pr differs from the constant (1-p) lambda at p = {p}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "criterion 01: FAIL - golden reproduction took {elapsed:?}, budget 1 s"
    );
    println!("criterion 01: PASS - two-point golden values exact for p in {{1/10, 1/4}} in {elapsed:?}");
}

#[test]
fn criterion_02_sup_norm_attainment() {
    let lambda = q(1, 1);
    for theta in [q(0, 1), q(1, 4), q(1, 2), q(3, 4)] {
        let p = q(1, 1) - theta.clone();
        let filt = two_point_filtration(&p);
        let f = two_point_function(&filt, &p, &lambda);
        let d = decompose_positive(&filt, &f, &lambda, &theta).expect("admissible");
        let attained = d.k().sup_norm();
        let claimed = (q(1, 1) + theta.clone()) * lambda.clone();
        assert_eq!(
            attained, claimed,
            "criterion 02: FAIL - ||k||_inf = {attained} instead of (1+theta) lambda = {claimed} at theta = {theta}"
        );
    }
    println!("criterion 02: PASS - ||k_theta||_inf = (1+theta) lambda attained for theta in {{0, 1/4, 1/2, 3/4}}");
}

#[test]
fn criterion_03_localized_term_norm() {
    // lambda below the root average makes the passage happen at time 1,
    // so g = f - f_1 and its norm doubles the escaped mass exactly.
    for p in [q(1, 10), q(1, 100)] {
        for lambda in [q(1, 2), q(9, 10)] {
            let filt = two_point_filtration(&p);
            let f = two_point_function(&filt, &p, &q(1, 1));
            let d = decompose_positive(&filt, &f, &lambda, &q(0, 1)).expect("admissible");
            let expected = q(2, 1) * (q(1, 1) - p.clone()) * f.l1_norm(&filt);
            assert_eq!(
                d.g.l1_norm(&filt),
                expected,
                "criterion 03: FAIL - ||g||_1 != 2(1-p)||f||_1 at p = {p}, lambda = {lambda}"
            );
            assert_eq!(
                (d.g.value(0), d.g.value(1)),
                (&(q(1, 1) / p.clone() - q(1, 1)), &q(-1, 1)),
                "criterion 03: FAIL - g differs from p^-1 1_E - 1 at p = {p}"
            );
        }
    }
    println!("criterion 03: PASS - ||g||_1 = 2(1-p)||f||_1 exact for p in {{1/10, 1/100}}");
}

#[test]
fn criterion_04_positive_property_suite() {
    let start = Instant::now();
    let thetas = [q(0, 1), q(1, 2), q(1, 1)];
    let scales = [q(1, 2), q(1, 1), q(2, 1)];
    let total = 1000;
    let mut failing_instances = 0usize;
    let mut first_witness: Option<String> = None;
    for i in 0..total {
        let config = GeneratorConfig::<Rational>::new(SWEEP_SEED + i as u64);
        let (filt, f) = generate(&config).expect("default config is feasible");
        let max = f.max_value().expect("nonempty leaf set");
        let lambda = scales[i % 3].clone() * max;
        let theta = thetas[(i / 3) % 3].clone();
        let d = decompose_positive(&filt, &f, &lambda, &theta).expect("admissible");
        if !d.certification.all_pass() {
            failing_instances += 1;
            if first_witness.is_none() {
                let rec = d.certification.failures().next().expect("nonempty");
                first_witness = Some(format!(
                    "seed {} lambda {} theta {}: {}",
                    SWEEP_SEED + i as u64,
                    d.lambda,
                    d.theta,
                    rec.to_line()
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "criterion 04: FAIL - sweep took {elapsed:?}, budget 60 s"
    );
    if failing_instances == 0 {
        println!("criterion 04: PASS - all checks on {total} positive decompositions in {elapsed:?}");
    } else {
        panic!(
            "criterion 04: FAIL - {failing_instances}/{total} instances break the localization \
             probability bound (first witness: {}); the bound is refuted by a two-leaf instance, \
             see README.md; every other check passed on all {total} instances in {elapsed:?}",
            first_witness.expect("witness recorded")
        );
    }
}

#[test]
fn criterion_05_signed_property_suite() {
    // The five certified bounds: localization probability, h-variation,
    // and the sup/L1/L2 bounds on k.
    let five = [
        "signed.g.localization_prob",
        "signed.h.variation",
        "signed.k.sup",
        "signed.k.l1",
        "signed.k.l2",
    ];
    let thetas = [q(0, 1), q(1, 2), q(1, 1)];
    let scales = [q(1, 2), q(1, 1), q(2, 1)];
    let total = 500;
    let mut failing_instances = 0usize;
    let mut first_witness: Option<String> = None;
    for i in 0..total {
        let mut config = GeneratorConfig::<Rational>::new(SWEEP_SEED + 10_000 + i as u64);
        config.values = ValueScheme::SignedUniform;
        let (filt, f) = generate(&config).expect("feasible");
        let lambda = scales[i % 3].clone() * f.sup_norm();
        let theta = thetas[(i / 3) % 3].clone();
        let d = decompose_signed(&filt, &f, &lambda, &theta).expect("admissible");
        let mut bad = false;
        for id in five {
            let rec = d.certification.find(id).expect("certified id present");
            if rec.status == CheckStatus::Fail {
                bad = true;
                if first_witness.is_none() {
                    first_witness =
                        Some(format!("seed {}: {}", SWEEP_SEED + 10_000 + i as u64, rec.to_line()));
                }
            }
        }
        if bad {
            failing_instances += 1;
        }
    }
    if failing_instances == 0 {
        println!("criterion 05: PASS - five signed bounds hold on {total} instances");
    } else {
        panic!(
            "criterion 05: FAIL - {failing_instances}/{total} signed instances break the \
             localization probability bound (first witness: {}); same two-leaf refutation as the \
             positive case, see README.md",
            first_witness.expect("witness recorded")
        );
    }
}

#[test]
fn criterion_06_sharpness_oracle_agreement() {
    let grid_n = 1000;
    for p in [q(1, 10), q(1, 4), q(1, 2)] {
        let inv_p = q(1, 1) / p.clone();
        for lambda in [q(1, 1), q(3, 1)] {
            let mut betas: Vec<Rational> = (0..20)
                .map(|j| inv_p.clone() * q(j, 19))
                .collect();
            betas.push(q(1, 1));
            for beta in betas {
                let inst = TwoPointInstance::new(p.clone(), lambda.clone(), beta.clone())
                    .expect("grid point is admissible");
                let analytic = minimize_phi_analytic(&inst);
                let brute = minimize_phi_bruteforce(&inst, grid_n).expect("grid_n >= 2");
                assert_eq!(
                    brute.value, analytic.value,
                    "criterion 06: FAIL - grid minimum {} != closed form {} at p = {p}, beta = {beta}, lambda = {lambda}",
                    brute.value, analytic.value
                );
                assert_eq!(
                    phi(&inst, &analytic.argmin.0, &analytic.argmin.1),
                    analytic.value,
                    "criterion 06: FAIL - Phi at the argmin misses the minimum at p = {p}, beta = {beta}"
                );
            }
            // At beta = 1 the two piecewise branches agree.
            let beta = q(1, 1);
            let branch_a = (q(3, 1) - beta.clone() - q(2, 1) * p.clone()) * lambda.clone();
            let branch_b = q(2, 1) * (q(1, 1) - p.clone() * beta.clone()) * lambda.clone();
            assert_eq!(
                branch_a, branch_b,
                "criterion 06: FAIL - piecewise branches disagree at beta = 1, p = {p}"
            );
        }
    }
    println!("criterion 06: PASS - grid and closed-form minima agree exactly over the (p, beta, lambda) grid at grid_n = 1000");
}

#[test]
fn criterion_07_dichotomy() {
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED + 70_000);
    for p in [q(1, 10), q(1, 4), q(1, 2)] {
        for lambda in [q(1, 1), q(3, 1)] {
            let inst =
                TwoPointInstance::new(p.clone(), lambda.clone(), q(1, 1)).expect("beta = 1 fits");
            let floor = q(2, 1) * (q(1, 1) - p.clone()) * lambda.clone();
            let witness = minimizing_witness(&inst);
            let report = dichotomy_check(&inst, &witness).expect("witness is admissible");
            match report.verdict {
                Dichotomy::VariationBounded { ref variation, .. } => assert_eq!(
                    variation, &floor,
                    "criterion 07: FAIL - witness variation {variation} != 2(1-p) lambda = {floor} at p = {p}"
                ),
                Dichotomy::FullLocalization { .. } => {
                    panic!("criterion 07: FAIL - the g = 0 witness landed on the localization branch")
                }
            }
            // Random admissible candidates: g = 0, k anywhere in the box.
            let radius = inst.box_radius();
            let denom = 1 << 20;
            for _ in 0..200 {
                let a = radius.clone() * q(rng.gen_range(0..=denom), denom);
                let b = radius.clone() * q(rng.gen_range(0..=denom), denom);
                let value = phi(&inst, &a, &b);
                assert!(
                    value >= floor,
                    "criterion 07: FAIL - Phi({a}, {b}) = {value} < {floor} at p = {p}, lambda = {lambda}"
                );
            }
        }
    }
    println!("criterion 07: PASS - witnesses attain 2(1-p) lambda and 1200 sampled admissible points never beat it");
}

/// Single-spike halving chain, the adversarial shape for transforms.
fn spike_chain(depth: usize) -> (Filtration<Rational>, TerminalFunction<Rational>) {
    let mut levels: Vec<Vec<AtomSpec<Rational>>> = Vec::with_capacity(depth);
    for n in 1..=depth {
        let mut layer = Vec::new();
        if n == 1 {
            layer.push(AtomSpec::root("p1", q(1, 2)));
            layer.push(AtomSpec::root("e1", q(1, 2)));
        } else {
            let parent = format!("p{}", n - 1);
            let share = q(1, 1 << n);
            layer.push(AtomSpec::child(format!("p{n}"), parent.clone(), share.clone()));
            layer.push(AtomSpec::child(format!("e{n}"), parent, share));
            for k in 1..n {
                let above = if n - 1 == k {
                    format!("e{k}")
                } else {
                    format!("e{k}c{}", n - 1)
                };
                layer.push(AtomSpec::child(format!("e{k}c{n}"), above, q(1, 1 << k)));
            }
        }
        levels.push(layer);
    }
    let filt = Filtration::new(levels).expect("halving chain partitions exactly");
    let spike = format!("p{depth}");
    let values = filt
        .leaves()
        .iter()
        .map(|&idx| {
            if filt.atom(idx).id == spike {
                Rational::from_int(1 << depth)
            } else {
                Rational::zero()
            }
        })
        .collect();
    let f = TerminalFunction::new(&filt, values).expect("leaf count");
    (filt, f)
}

#[test]
fn criterion_08_weak_type_constant() {
    let mut sup_constant: Rational = Scalar::zero();
    let mut term_failures = 0usize;
    let mut first_witness: Option<String> = None;
    let mut diagnostics = 0usize;

    fn run(
        filt: &Filtration<Rational>,
        f: &TerminalFunction<Rational>,
        a: &MultiplierSequence<Rational>,
        n_max: usize,
        label: &str,
        sup_constant: &mut Rational,
        term_failures: &mut usize,
        first_witness: &mut Option<String>,
        diagnostics: &mut usize,
    ) {
        let cert = certify_weak_type(filt, f, a, n_max).expect("admissible");
        assert!(
            cert.certification.all_pass(),
            "criterion 08: FAIL - weak-type certificate failed on {label}"
        );
        if cert.empirical_constant > *sup_constant {
            *sup_constant = cert.empirical_constant.clone();
        }
        let lambda = a.sup_norm().clone() * f.l1_norm(filt);
        if Rational::zero() < lambda {
            *diagnostics += 1;
            let diag = diagnose_proof(filt, f, a, n_max, &lambda).expect("admissible");
            for rec in diag.certification.failures() {
                *term_failures += 1;
                if first_witness.is_none() {
                    *first_witness = Some(format!("{label}: {}", rec.to_line()));
                }
            }
        }
    }

    for i in 0..150usize {
        let mut config = GeneratorConfig::<Rational>::new(SWEEP_SEED + 20_000 + i as u64);
        if i % 2 == 1 {
            config.values = ValueScheme::SignedUniform;
        }
        let (filt, f) = generate(&config).expect("feasible");
        let horizon = filt.horizon();
        let a = match i % 3 {
            0 => alternating(horizon),
            1 => MultiplierSequence::constant(q(1, 1), horizon).expect("positive length"),
            _ => MultiplierSequence::new(
                (0..horizon)
                    .map(|n| if n % 2 == 0 { q(1, 1) } else { q(-1, 2) })
                    .collect(),
            )
            .expect("nonempty"),
        };
        run(
            &filt,
            &f,
            &a,
            horizon,
            &format!("random seed {}", SWEEP_SEED + 20_000 + i as u64),
            &mut sup_constant,
            &mut term_failures,
            &mut first_witness,
            &mut diagnostics,
        );
    }
    for depth in [4usize, 6, 8] {
        let (filt, f) = spike_chain(depth);
        run(
            &filt,
            &f,
            &alternating(depth),
            depth,
            &format!("spike chain depth {depth}"),
            &mut sup_constant,
            &mut term_failures,
            &mut first_witness,
            &mut diagnostics,
        );
    }
    for p_den in [20i64, 100] {
        let p = q(1, p_den);
        let filt = two_point_filtration(&p);
        let f = two_point_function(&filt, &p, &q(1, 1));
        run(
            &filt,
            &f,
            &alternating(2),
            2,
            &format!("two-point p = 1/{p_den}"),
            &mut sup_constant,
            &mut term_failures,
            &mut first_witness,
            &mut diagnostics,
        );
    }

    assert!(
        sup_constant <= q(16, 1),
        "criterion 08: FAIL - empirical weak-type constant {sup_constant} exceeds 16"
    );
    if term_failures == 0 {
        println!(
            "criterion 08: PASS - headline constant {sup_constant} <= 16 and all per-term bounds over {diagnostics} diagnosed instances"
        );
    } else {
        panic!(
            "criterion 08: FAIL - headline constant {sup_constant} <= 16 holds on every instance, \
             but the localized-term bound failed {term_failures} times over {diagnostics} diagnosed \
             instances (first witness: {}); that per-term bound inherits the refuted localization \
             estimate, see README.md",
            first_witness.expect("witness recorded")
        );
    }
}

#[test]
fn criterion_09_isometry() {
    let total = 500;
    for i in 0..total {
        let mut config = GeneratorConfig::<Rational>::new(SWEEP_SEED + 30_000 + i as u64);
        if i % 2 == 1 {
            config.values = ValueScheme::SignedUniform;
        }
        let (filt, f) = generate(&config).expect("feasible");
        let horizon = filt.horizon();
        let a = match i % 3 {
            0 => alternating(horizon),
            1 => MultiplierSequence::constant(q(1, 2), horizon).expect("positive length"),
            _ => MultiplierSequence::new(
                (0..horizon).map(|n| q(n as i64 + 1, 3)).collect(),
            )
            .expect("nonempty"),
        };
        let check = ito_isometry_check(&filt, &f, &a, horizon).expect("admissible");
        assert_eq!(
            check.lhs,
            check.rhs,
            "criterion 09: FAIL - isometry broke at seed {}",
            SWEEP_SEED + 30_000 + i as u64
        );
    }
    println!("criterion 09: PASS - transform energy identity exact on {total} instances");
}

#[test]
fn criterion_10_john_nirenberg() {
    let floors = [(q(1, 4), 4usize), (q(1, 3), 3), (q(1, 2), 2)];
    let total = 300;
    for i in 0..total {
        let seed = SWEEP_SEED + 40_000 + i as u64;
        let (floor, widest) = floors[i % 3].clone();
        let mut config = GeneratorConfig::<Rational>::new(seed);
        config.depth = 2..=5;
        config.branching = 2..=widest;
        config.probabilities = ProbabilityScheme::RandomSplit {
            min_ratio: floor.clone(),
        };
        let (filt, f) = generate(&config).expect("feasible floor/branching pair");
        let regularity = filt.check_alpha_regular(&floor);
        assert!(
            regularity.regular,
            "criterion 10: FAIL - generated tree misses its regularity floor at seed {seed}"
        );
        let root = filt.level(1)[0];

        let overshoot = jn::overshoot_check(&filt, &f).expect("nonnegative values");
        assert!(
            overshoot.certification.all_pass(),
            "criterion 10: FAIL - overshoot bound failed at seed {seed}"
        );

        let profile = jn::bmo_norm(&filt, &f);
        let threshold = if profile.norm == Rational::zero() {
            q(1, 1)
        } else {
            Rational::e_lower() * profile.norm.clone()
        };
        let run = jn::cz_generations(&filt, &f, root, &threshold, filt.horizon())
            .expect("threshold sits above the norm");
        assert!(
            run.certification.all_pass(),
            "criterion 10: FAIL - selection/generation certificates failed at seed {seed}: {:?}",
            run.certification.failures().next().map(|r| r.to_line())
        );

        let tail = jn::certify_jn_tail(&filt, &f, root, &jn::default_t_grid(&profile.norm))
            .expect("grid is nonnegative");
        assert!(
            tail.certification.all_pass(),
            "criterion 10: FAIL - tail certificate failed at seed {seed}"
        );

        let alpha = regularity.constant;
        let moment = jn::certify_exp_integrability(&filt, &f, root, &jn::default_exp_rate(&alpha))
            .expect("default rate is admissible");
        assert!(
            moment.pass && moment.certification.all_pass(),
            "criterion 10: FAIL - exponential moment certificate failed at seed {seed}"
        );
    }
    println!("criterion 10: PASS - overshoot, selection, generations, tail, and moment certificates on {total} regular instances");
}

#[test]
fn criterion_11_non_measurable_fixture() {
    let filt = Filtration::new(vec![
        vec![AtomSpec::root("root", q(1, 1))],
        vec![
            AtomSpec::child("E", "root", q(1, 100)),
            AtomSpec::child("Ec", "root", q(99, 100)),
        ],
    ])
    .expect("fixture tree");
    let raw = RawTerminalFunction::new(
        &filt,
        vec![
            vec![(q(1, 200), q(100, 1)), (q(1, 200), q(-100, 1))],
            vec![(q(99, 100), q(0, 1))],
        ],
    )
    .expect("fixture raw data");

    assert_eq!(raw.l1_norm(), q(1, 1), "criterion 11: FAIL - fixture ||f||_1 != 1");

    let cert = flag_non_measurable(&filt, &raw, &q(1, 1));
    let measurability = cert
        .find("hypothesis.measurability")
        .expect("measurability record present");
    assert_eq!(
        measurability.status,
        CheckStatus::Flag,
        "criterion 11: FAIL - measurability violation not reported as an expected violation"
    );
    let passthrough = cert
        .find("hypothesis.passthrough_sup")
        .expect("passthrough record present");
    assert_eq!(
        (passthrough.status, &passthrough.computed, &passthrough.claimed),
        (CheckStatus::Flag, &q(100, 1), &q(1, 1)),
        "criterion 11: FAIL - passthrough must show ||k||_inf = 100 > lambda = 1 as a flag"
    );
    assert!(
        cert.all_pass(),
        "criterion 11: FAIL - expected violations counted as failures"
    );
    println!("criterion 11: PASS - non-measurable fixture flagged with ||k||_inf = 100 > 1 as an expected violation");
}

#[test]
fn criterion_12_variation_floor_asymptotic() {
    let theta = q(1, 1);
    let lambda = q(1, 1);
    let mut previous: Option<Rational> = None;
    let mut last: Rational = Scalar::zero();
    for k in 1..=10u32 {
        let p = q(1, 1 << k);
        let floor = q(2, 1) * (q(1, 1) - (q(1, 1) + theta.clone()) * p.clone());
        if let Some(prev) = previous {
            assert!(
                prev < floor,
                "criterion 12: FAIL - floor not increasing at k = {k}"
            );
        }
        // The floor really sits below the constructed h-variation.
        let filt = two_point_filtration(&p);
        let f = two_point_function(&filt, &p, &lambda);
        let d = decompose_positive(&filt, &f, &lambda, &theta).expect("admissible");
        let variation = variation_l1(&filt, &d.h);
        assert!(
            variation >= floor.clone() * f.l1_norm(&filt),
            "criterion 12: FAIL - variation {variation} under the floor {floor} at k = {k}"
        );
        previous = Some(floor.clone());
        last = floor;
    }
    assert!(
        last > q(199, 100),
        "criterion 12: FAIL - floor {last} at k = 10 does not exceed 1.99"
    );
    println!("criterion 12: PASS - normalized variation floor 2(1-2p) increases to {last} > 1.99 at p = 2^-10");
}

//! Seeded batch verification.
//!
//! One run sweeps every certification the library offers over generated
//! instances plus hand-built fixtures, and renders an ordered, tab-separated
//! report. All arithmetic is exact rational, so a report is a pure function
//! of the configuration: same seed and sizes, same bytes.

use gundy_stein::decomposition::{
    decompose_positive, decompose_signed, flag_non_measurable,
};
use gundy_stein::filtration::RawTerminalFunction;
use gundy_stein::generator::{generate, GeneratorConfig, ProbabilityScheme, ValueScheme};
use gundy_stein::john_nirenberg as jn;
use gundy_stein::multipliers::{
    certify_weak_type, diagnose_proof, ito_isometry_check, MultiplierSequence,
};
use gundy_stein::sharpness::{
    dichotomy_check, minimize_phi_analytic, minimize_phi_bruteforce, minimizing_witness, phi,
    two_point_filtration, two_point_function, TwoPointDecomposition, TwoPointInstance,
};
use gundy_stein::{
    AtomSpec, Certification, CheckRecord, CheckStatus, Filtration, Rational, Scalar,
    TerminalFunction,
};
use std::fmt::Write as _;

fn q(num: i64, den: i64) -> Rational {
    Rational::ratio(num, den)
}

/// Section sizes and the seed for one suite run.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Positive decompositions, theta cycling through {0, 1/2, 1}.
    pub decompositions: usize,
    /// Signed decompositions.
    pub signed: usize,
    /// Weak-type sweeps over random transforms (diagnostics on a subset).
    pub multipliers: usize,
    /// Exact isometry identities.
    pub isometries: usize,
    /// John-Nirenberg pipelines over regularity floors {1/4, 1/3, 1/2}.
    pub jn: usize,
    /// Inject a deliberately negated bound; the run must then fail.
    pub corrupt: bool,
}

impl SuiteConfig {
    /// The acceptance-scale run.
    pub fn full(seed: u64) -> Self {
        SuiteConfig {
            seed,
            decompositions: 1000,
            signed: 500,
            multipliers: 120,
            isometries: 500,
            jn: 300,
            corrupt: false,
        }
    }

    /// A seconds-scale run exercising every section.
    pub fn smoke(seed: u64) -> Self {
        SuiteConfig {
            seed,
            decompositions: 12,
            signed: 8,
            multipliers: 6,
            isometries: 8,
            jn: 6,
            corrupt: false,
        }
    }
}

/// Accumulated report: one line per record, prefixed by an instance label,
/// plus pass/fail/flag counters and the worst (smallest) margin seen.
pub struct VerificationReport {
    header: Vec<String>,
    lines: Vec<String>,
    failures: Vec<String>,
    pub pass: usize,
    pub fail: usize,
    pub flag: usize,
    worst: Option<(Rational, String)>,
}

impl VerificationReport {
    fn new(config: &SuiteConfig) -> Self {
        let header = vec![
            "# gundy-stein verification suite".to_string(),
            format!(
                "# seed={} decompositions={} signed={} multipliers={} isometries={} jn={} corrupt={}",
                config.seed,
                config.decompositions,
                config.signed,
                config.multipliers,
                config.isometries,
                config.jn,
                config.corrupt,
            ),
            "# arithmetic=exact-rational".to_string(),
            "# columns: instance, check id, statement, claimed, computed, margin, status"
                .to_string(),
        ];
        VerificationReport {
            header,
            lines: Vec::new(),
            failures: Vec::new(),
            pass: 0,
            fail: 0,
            flag: 0,
            worst: None,
        }
    }

    pub fn absorb_record(&mut self, instance: &str, record: &CheckRecord<Rational>) {
        match record.status {
            CheckStatus::Pass => self.pass += 1,
            CheckStatus::Fail => self.fail += 1,
            CheckStatus::Flag => self.flag += 1,
        }
        let line = format!("{instance}\t{}", record.to_line());
        if record.status == CheckStatus::Fail {
            self.failures.push(line.clone());
        }
        // Flags are expected violations; their margins point the wrong way
        // on purpose and stay out of the worst-margin ranking.
        if record.status != CheckStatus::Flag {
            let key = (record.margin.clone(), format!("{instance} {}", record.id));
            let replace = match &self.worst {
                Some((margin, _)) => key.0 < *margin,
                None => true,
            };
            if replace {
                self.worst = Some(key);
            }
        }
        self.lines.push(line);
    }

    pub fn absorb(&mut self, instance: &str, cert: &Certification<Rational>) {
        for record in cert.records() {
            self.absorb_record(instance, record);
        }
    }

    /// An instance-level error; the suite reports it and moves on.
    pub fn error(&mut self, instance: &str, message: &str) {
        self.fail += 1;
        let line = format!("{instance}\terror\t{message}\t-\t-\t-\tFAIL");
        self.failures.push(line.clone());
        self.lines.push(line);
    }

    pub fn all_pass(&self) -> bool {
        self.fail == 0
    }

    pub fn records(&self) -> usize {
        self.pass + self.fail + self.flag
    }

    /// Failing lines, for loud summaries.
    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# records={} pass={} fail={} flag={}",
            self.records(),
            self.pass,
            self.fail,
            self.flag
        );
        match &self.worst {
            Some((margin, at)) => {
                let _ = writeln!(out, "# worst margin {margin} at {at}");
            }
            None => {
                let _ = writeln!(out, "# worst margin n/a");
            }
        }
        let _ = write!(
            out,
            "# verdict {}",
            if self.all_pass() { "PASS" } else { "FAIL" }
        );
        out
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            let _ = writeln!(out, "{line}");
        }
        for line in &self.lines {
            let _ = writeln!(out, "{line}");
        }
        let _ = writeln!(out, "{}", self.summary());
        out
    }
}

/// Runs every section in a fixed order. Each generated instance gets a
/// deterministic label and seed, so reports diff cleanly across runs.
pub fn run_suite(config: &SuiteConfig) -> VerificationReport {
    let mut report = VerificationReport::new(config);
    fixtures(&mut report);
    decomposition_sweep(&mut report, config);
    signed_sweep(&mut report, config);
    sharpness_grid(&mut report);
    multiplier_sweep(&mut report, config);
    isometry_sweep(&mut report, config);
    jn_sweep(&mut report, config);
    if config.corrupt {
        // Self-test: a bound stated backwards. A healthy harness must
        // print FAIL here and exit nonzero.
        report.absorb_record(
            "self_test",
            &CheckRecord::upper_bound(
                "suite.self_test",
                "deliberately negated bound (2 <= 1); the harness must fail loudly",
                Rational::from_int(2),
                Rational::from_int(1),
            ),
        );
    }
    report
}

/// `|| sum_n |df_n| ||_1` through the generic martingale machinery.
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

fn fixtures(report: &mut VerificationReport) {
    // Two-point instances with theta at the no-compensator-passage boundary:
    // the closed forms for every piece are known exactly.
    for (i, p) in [q(1, 10), q(1, 4)].into_iter().enumerate() {
        let label = format!("fix.two_point.{i}");
        let lambda = q(1, 1);
        let theta = q(1, 1) - p.clone();
        let filt = two_point_filtration(&p);
        let f = two_point_function(&filt, &p, &lambda);
        match decompose_positive(&filt, &f, &lambda, &theta) {
            Ok(d) => {
                report.absorb(&label, &d.certification);
                let one_minus_p = q(1, 1) - p.clone();
                report.absorb_record(
                    &label,
                    &CheckRecord::identity(
                        "fixture.two_point.g_zero",
                        "g vanishes when theta >= 1 - p",
                        d.g.l1_norm(&filt),
                        Rational::zero(),
                    ),
                );
                report.absorb_record(
                    &label,
                    &CheckRecord::identity(
                        "fixture.two_point.h_variation",
                        "|| sum |dh_n| ||_1 = 2 (1-p)^2 lambda",
                        variation_l1(&filt, &d.h),
                        q(2, 1) * one_minus_p.clone() * one_minus_p.clone() * lambda.clone(),
                    ),
                );
                let k = d.k();
                report.absorb_record(
                    &label,
                    &CheckRecord::identity(
                        "fixture.two_point.k_on_e",
                        "k = (2-p) lambda on E",
                        k.value(0).clone(),
                        (q(2, 1) - p.clone()) * lambda.clone(),
                    ),
                );
                report.absorb_record(
                    &label,
                    &CheckRecord::identity(
                        "fixture.two_point.k_off_e",
                        "k = (1-p) lambda off E",
                        k.value(1).clone(),
                        one_minus_p.clone() * lambda.clone(),
                    ),
                );
                report.absorb_record(
                    &label,
                    &CheckRecord::identity(
                        "fixture.two_point.k_stopped",
                        "k_st = lambda 1_E",
                        d.k_stopped.value(0).clone() + d.k_stopped.value(1).clone(),
                        lambda.clone(),
                    ),
                );
                report.absorb_record(
                    &label,
                    &CheckRecord::identity(
                        "fixture.two_point.k_predictable",
                        "k_pr = (1-p) lambda everywhere",
                        d.k_predictable.value(0).clone() - d.k_predictable.value(1).clone(),
                        Rational::zero(),
                    ),
                );
            }
            Err(e) => report.error(&label, &e.to_string()),
        }
    }

    // Within-leaf data: measurability fails, and the untouched passthrough
    // reaches |k| = 100 with ||f||_1 = 1 and lambda = 1. Both records are
    // expected violations, not failures.
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
    report.absorb(
        "fix.non_measurable",
        &flag_non_measurable(&filt, &raw, &q(1, 1)),
    );

    // Constant function: the oscillation norm degenerates to zero and the
    // tail certificate short-circuits.
    let filt = two_point_filtration(&q(1, 4));
    let constant = TerminalFunction::new(&filt, vec![q(3, 1), q(3, 1)]).expect("two leaves");
    let root = filt.level(1)[0];
    match jn::certify_jn_tail(&filt, &constant, root, &jn::default_t_grid(&Rational::zero())) {
        Ok(tail) => report.absorb("fix.jn.constant", &tail.certification),
        Err(e) => report.error("fix.jn.constant", &e.to_string()),
    }

    // Rational enclosures beat ln(u)/u < 1/e on the whole default base grid.
    report.absorb("fix.jn.exponent_grid", &jn::exponent_grid_check::<Rational>());
}

fn decomposition_sweep(report: &mut VerificationReport, config: &SuiteConfig) {
    let thetas = [q(0, 1), q(1, 2), q(1, 1)];
    let lambda_scales = [q(1, 2), q(1, 1), q(2, 1)];
    for i in 0..config.decompositions {
        let label = format!("dec.{i:04}");
        let gen = GeneratorConfig::<Rational>::new(config.seed + i as u64);
        let (filt, f) = match generate(&gen) {
            Ok(pair) => pair,
            Err(e) => {
                report.error(&label, &e.to_string());
                continue;
            }
        };
        // Generated f is nonnegative and not identically zero, so max > 0
        // and every scaled lambda lands in (0, 2 max].
        let max = f.max_value().expect("nonempty leaf set");
        let lambda = lambda_scales[i % 3].clone() * max;
        let theta = thetas[(i / 3) % 3].clone();
        match decompose_positive(&filt, &f, &lambda, &theta) {
            Ok(d) => report.absorb(&label, &d.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
    }
}

fn signed_sweep(report: &mut VerificationReport, config: &SuiteConfig) {
    let thetas = [q(0, 1), q(1, 2), q(1, 1)];
    let lambda_scales = [q(1, 2), q(1, 1), q(2, 1)];
    for i in 0..config.signed {
        let label = format!("sig.{i:04}");
        let mut gen = GeneratorConfig::<Rational>::new(config.seed + 10_000 + i as u64);
        gen.values = ValueScheme::SignedUniform;
        let (filt, f) = match generate(&gen) {
            Ok(pair) => pair,
            Err(e) => {
                report.error(&label, &e.to_string());
                continue;
            }
        };
        let lambda = lambda_scales[i % 3].clone() * f.sup_norm();
        let theta = thetas[(i / 3) % 3].clone();
        match decompose_signed(&filt, &f, &lambda, &theta) {
            Ok(d) => report.absorb(&label, &d.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
    }
}

fn sharpness_grid(report: &mut VerificationReport) {
    // Suite-scale grid; the acceptance run repeats this at grid_n = 1000.
    let grid_n = 200;
    for (pi, p) in [q(1, 10), q(1, 4)].into_iter().enumerate() {
        for (bi, beta) in [q(0, 1), q(1, 2), q(1, 1), q(3, 2), q(2, 1)]
            .into_iter()
            .enumerate()
        {
            if beta.clone() * p.clone() > q(1, 1) {
                continue;
            }
            let label = format!("sha.p{pi}.b{bi}");
            let inst = match TwoPointInstance::new(p.clone(), q(1, 1), beta.clone()) {
                Ok(inst) => inst,
                Err(e) => {
                    report.error(&label, &e.to_string());
                    continue;
                }
            };
            let analytic = minimize_phi_analytic(&inst);
            match minimize_phi_bruteforce(&inst, grid_n) {
                Ok(brute) => {
                    report.absorb_record(
                        &label,
                        &CheckRecord::identity(
                            "sharpness.brute_vs_analytic",
                            "boundary-augmented grid minimum equals the closed form",
                            brute.value,
                            analytic.value.clone(),
                        ),
                    );
                }
                Err(e) => report.error(&label, &e.to_string()),
            }
            report.absorb_record(
                &label,
                &CheckRecord::identity(
                    "sharpness.phi_at_argmin",
                    "Phi at the analytic argmin equals the analytic minimum",
                    phi(&inst, &analytic.argmin.0, &analytic.argmin.1),
                    analytic.value.clone(),
                ),
            );
            if beta == q(1, 1) {
                // At beta = 1 the two closed-form branches coincide.
                let branch_a = (q(3, 1) - beta.clone() - q(2, 1) * p.clone()) * q(1, 1);
                let branch_b = q(2, 1) * (q(1, 1) - p.clone() * beta.clone());
                report.absorb_record(
                    &label,
                    &CheckRecord::identity(
                        "sharpness.beta_one_branches",
                        "(3 - beta - 2p) lambda = 2 (1 - p beta) lambda at beta = 1",
                        branch_a,
                        branch_b,
                    ),
                );
            }
            // The g = 0 witness lands on the variation branch of the
            // dichotomy; handing back f itself exercises the g != 0 branch.
            match dichotomy_check(&inst, &minimizing_witness(&inst)) {
                Ok(check) => report.absorb(&label, &check.certification),
                Err(e) => report.error(&label, &e.to_string()),
            }
            let (f_e, f_ec) = inst.f_values();
            let zero: Rational = Scalar::zero();
            let localized = TwoPointDecomposition {
                g: (f_e, f_ec),
                h: (zero.clone(), zero.clone()),
                k: (zero.clone(), zero),
            };
            match dichotomy_check(&inst, &localized) {
                Ok(check) => report.absorb(&label, &check.certification),
                Err(e) => report.error(&label, &e.to_string()),
            }
        }
    }
}

/// Single-spike martingale on a halving chain: at each level the surviving
/// atom splits in two and the spike doubles. Stress case for transforms.
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

fn alternating(len: usize) -> MultiplierSequence<Rational> {
    let coeffs = (0..len)
        .map(|n| if n % 2 == 0 { q(1, 1) } else { q(-1, 1) })
        .collect();
    MultiplierSequence::new(coeffs).expect("nonempty coefficients")
}

fn multiplier_sweep(report: &mut VerificationReport, config: &SuiteConfig) {
    for i in 0..config.multipliers {
        let label = format!("mul.{i:04}");
        let mut gen = GeneratorConfig::<Rational>::new(config.seed + 20_000 + i as u64);
        if i % 2 == 1 {
            gen.values = ValueScheme::SignedUniform;
        }
        let (filt, f) = match generate(&gen) {
            Ok(pair) => pair,
            Err(e) => {
                report.error(&label, &e.to_string());
                continue;
            }
        };
        let horizon = filt.horizon();
        let a = match i % 3 {
            0 => alternating(horizon),
            1 => MultiplierSequence::constant(q(1, 1), horizon).expect("positive length"),
            _ => {
                let coeffs = (0..horizon)
                    .map(|n| if n % 2 == 0 { q(1, 1) } else { q(-1, 2) })
                    .collect();
                MultiplierSequence::new(coeffs).expect("nonempty coefficients")
            }
        };
        match certify_weak_type(&filt, &f, &a, horizon) {
            Ok(cert) => report.absorb(&label, &cert.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
        if i % 4 == 0 {
            // Proof-step diagnostics at a lambda tied to the mass scale.
            let lambda = f.l1_norm(&filt) * a.sup_norm().clone();
            if Rational::zero() < lambda {
                match diagnose_proof(&filt, &f, &a, horizon, &lambda) {
                    Ok(diag) => report.absorb(&label, &diag.certification),
                    Err(e) => report.error(&label, &e.to_string()),
                }
            }
        }
    }

    // Adversarial spike chains: the classical near-extremal shape for
    // weak-type transforms.
    for depth in [4usize, 8] {
        let label = format!("mul.adv.chain{depth}");
        let (filt, f) = spike_chain(depth);
        let a = alternating(depth);
        match certify_weak_type(&filt, &f, &a, depth) {
            Ok(cert) => report.absorb(&label, &cert.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
        match diagnose_proof(&filt, &f, &a, depth, &q(2, 1)) {
            Ok(diag) => report.absorb(&label, &diag.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
    }

    // Adversarial concentrated mass: two-point with p = 1/100.
    let p = q(1, 100);
    let filt = two_point_filtration(&p);
    let f = two_point_function(&filt, &p, &q(1, 1));
    let a = alternating(2);
    match certify_weak_type(&filt, &f, &a, 2) {
        Ok(cert) => report.absorb("mul.adv.two_point", &cert.certification),
        Err(e) => report.error("mul.adv.two_point", &e.to_string()),
    }
}

fn isometry_sweep(report: &mut VerificationReport, config: &SuiteConfig) {
    for i in 0..config.isometries {
        let label = format!("ito.{i:04}");
        let mut gen = GeneratorConfig::<Rational>::new(config.seed + 30_000 + i as u64);
        if i % 2 == 1 {
            gen.values = ValueScheme::SignedUniform;
        }
        let (filt, f) = match generate(&gen) {
            Ok(pair) => pair,
            Err(e) => {
                report.error(&label, &e.to_string());
                continue;
            }
        };
        let horizon = filt.horizon();
        match ito_isometry_check(&filt, &f, &alternating(horizon), horizon) {
            Ok(check) => report.absorb_record(&label, &check.record),
            Err(e) => report.error(&label, &e.to_string()),
        }
    }
}

fn jn_sweep(report: &mut VerificationReport, config: &SuiteConfig) {
    // (regularity floor, widest branching that floor can accommodate)
    let floors = [(q(1, 4), 4usize), (q(1, 3), 3), (q(1, 2), 2)];
    for i in 0..config.jn {
        let label = format!("jnr.{i:04}");
        let (floor, widest) = floors[i % 3].clone();
        let mut gen = GeneratorConfig::<Rational>::new(config.seed + 40_000 + i as u64);
        gen.depth = 2..=5;
        gen.branching = 2..=widest;
        gen.probabilities = ProbabilityScheme::RandomSplit {
            min_ratio: floor.clone(),
        };
        let (filt, f) = match generate(&gen) {
            Ok(pair) => pair,
            Err(e) => {
                report.error(&label, &e.to_string());
                continue;
            }
        };
        let root = filt.level(1)[0];
        let regularity = filt.check_alpha_regular(&floor);
        report.absorb_record(
            &label,
            &CheckRecord::lower_bound(
                "jn.regularity",
                "generated tree meets the configured regularity floor",
                regularity.constant.clone(),
                floor,
            ),
        );
        match jn::overshoot_check(&filt, &f) {
            Ok(overshoot) => report.absorb(&label, &overshoot.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
        let profile = jn::bmo_norm(&filt, &f);
        let threshold = if profile.norm == Rational::zero() {
            q(1, 1)
        } else {
            Rational::e_lower() * profile.norm.clone()
        };
        match jn::cz_generations(&filt, &f, root, &threshold, 6) {
            Ok(run) => report.absorb(&label, &run.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
        match jn::certify_jn_tail(&filt, &f, root, &jn::default_t_grid(&profile.norm)) {
            Ok(tail) => report.absorb(&label, &tail.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
        if i % 5 == 0 {
            match jn::certify_jn_tail_parametric(
                &filt,
                &f,
                root,
                &jn::default_t_grid(&profile.norm),
                &q(2, 1),
            ) {
                Ok(tail) => report.absorb(&label, &tail.certification),
                Err(e) => report.error(&label, &e.to_string()),
            }
        }
        let alpha = regularity.constant;
        match jn::certify_exp_integrability(&filt, &f, root, &jn::default_exp_rate(&alpha)) {
            Ok(moment) => report.absorb(&label, &moment.certification),
            Err(e) => report.error(&label, &e.to_string()),
        }
    }
}

//! The Gundy-Stein decomposition of a nonnegative martingale at a level
//! `lambda`, in the four-term form with a compensator allowance `theta`.
//!
//! Writing `f_n` for the martingale of the terminal function `f` (with
//! `f_0 = 0`), the construction is driven by two passage times:
//!
//! * `r = inf { n >= 1 : f_n > lambda }`, the first strict passage above
//!   `lambda`;
//! * `s = inf { m >= 1 : Lambda_m > theta * lambda }`, the first strict
//!   passage of the compensator `Lambda_m = sum_{k<=m} E_k[eps_{k+1}]`,
//!   where `eps_n = df_n * 1{r = n}` is the crossing increment.
//!
//! With `t = r /\ s` and `gamma_n = df_n * 1{r > n}` the components are
//!
//! * `g = f - f_t` (localized on `{r < infinity}`),
//! * `h = sum_j (eps_j - E_{j-1}[eps_j]) * 1{s >= j}` (small variation),
//! * `k_st = sum_j gamma_j * 1{s >= j} = f_{s /\ (r-1)}` (bounded by `lambda`),
//! * `k_pr = sum_j E_{j-1}[eps_j] * 1{s >= j}` (predictable, bounded by
//!   `theta * lambda`),
//!
//! and `f = g + h + k_st + k_pr` holds leafwise. Both passages are strict,
//! so boundary cases (`f_n = lambda`, `Lambda_m = theta * lambda`) do not
//! trigger them. `E_0` is identically zero, hence `dh_1 = eps_1` and
//! `E[h] = E[eps_1]`.
//!
//! [`verify_bounds`] certifies every explicit constant of the construction
//! from the finished components alone, recomputing conditional expectations
//! from scratch; in exact mode each record is a proof.
//!
//! For signed data, [`decompose_signed`] splits `f = f_+ - f_-` and applies
//! the positive decomposition to each part at level `lambda / (1 + theta)`,
//! which keeps `|k| <= lambda` while doubling the remaining constants.

use crate::filtration::{
    AdaptedProcess, Filtration, RawTerminalFunction, StopLevel, StoppingTime, TerminalFunction,
};
use crate::report::{Certification, CheckRecord};
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecomposeError {
    #[error("decompose_positive requires f >= 0, but leaf `{leaf}` carries {value}")]
    NegativeValue { leaf: String, value: String },
    #[error("lambda must be positive, got {lambda}")]
    NonpositiveLambda { lambda: String },
    #[error("theta must be nonnegative, got {theta}")]
    NegativeTheta { theta: String },
}

/// The stopping times and increment processes behind one decomposition.
#[derive(Debug, Clone)]
pub struct CrossingData<S> {
    /// `r`: first strict passage of the martingale above `lambda`.
    pub first_passage: StoppingTime,
    /// `r - 1` pathwise; level 0 when `r = 1`, NEVER when `r = NEVER`.
    pub pre_passage: StoppingTime,
    /// `s`: first strict passage of the compensator above `theta * lambda`.
    pub compensator_passage: StoppingTime,
    /// `t = r /\ s`.
    pub localization: StoppingTime,
    /// `eps_n = df_n * 1{r = n}`, one value per atom.
    pub crossing_increment: AdaptedProcess<S>,
    /// `gamma_n = df_n * 1{r > n}`, one value per atom.
    pub pre_crossing_increment: AdaptedProcess<S>,
    /// `E_m[eps_{m+1}]`, one value per level-`m` atom (0 on leaves).
    pub predicted_crossing: AdaptedProcess<S>,
    /// `Lambda_m`, one value per level-`m` atom.
    pub compensator: AdaptedProcess<S>,
}

/// A certified four-term decomposition `f = g + h + k_st + k_pr`.
#[derive(Debug, Clone)]
pub struct DecompositionResult<S> {
    pub lambda: S,
    pub theta: S,
    pub g: TerminalFunction<S>,
    pub h: TerminalFunction<S>,
    pub k_stopped: TerminalFunction<S>,
    pub k_predictable: TerminalFunction<S>,
    pub crossing: CrossingData<S>,
    pub certification: Certification<S>,
}

impl<S: Scalar> DecompositionResult<S> {
    /// The combined bounded component `k = k_st + k_pr`.
    pub fn k(&self) -> TerminalFunction<S> {
        self.k_stopped.add(&self.k_predictable)
    }
}

/// A certified signed decomposition `f = g + h + k` obtained by splitting
/// `f = f_+ - f_-` and decomposing both parts at level `lambda / (1+theta)`.
#[derive(Debug, Clone)]
pub struct SignedDecomposition<S> {
    pub lambda: S,
    pub theta: S,
    pub g: TerminalFunction<S>,
    pub h: TerminalFunction<S>,
    pub k: TerminalFunction<S>,
    pub positive: DecompositionResult<S>,
    pub negative: DecompositionResult<S>,
    pub certification: Certification<S>,
}

fn validate_params<S: Scalar>(lambda: &S, theta: &S) -> Result<(), DecomposeError> {
    if *lambda <= S::zero() {
        return Err(DecomposeError::NonpositiveLambda { lambda: lambda.to_string() });
    }
    if *theta < S::zero() {
        return Err(DecomposeError::NegativeTheta { theta: theta.to_string() });
    }
    Ok(())
}

fn validate_nonnegative<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
) -> Result<(), DecomposeError> {
    for (leaf, value) in f.values().iter().enumerate() {
        if *value < S::zero() {
            return Err(DecomposeError::NegativeValue {
                leaf: filt.atom(filt.leaves()[leaf]).id.clone(),
                value: value.to_string(),
            });
        }
    }
    Ok(())
}

/// Per atom: the first level `<= level(atom)` at which the martingale of `f`
/// strictly exceeds `lambda` on that path, if any.
fn crossing_levels<S: Scalar>(
    filt: &Filtration<S>,
    mart: &AdaptedProcess<S>,
    lambda: &S,
) -> Vec<Option<usize>> {
    let mut crossed = vec![None; filt.atom_count()];
    for level in 1..=filt.horizon() {
        for &idx in filt.level(level) {
            let atom = filt.atom(idx);
            let inherited = atom.parent.and_then(|p| crossed[p]);
            crossed[idx] = match inherited {
                Some(n) => Some(n),
                None if *mart.value(idx) > *lambda => Some(level),
                None => None,
            };
        }
    }
    crossed
}

/// `r = inf { n >= 1 : f_n > lambda }` (strict), NEVER when no passage
/// occurs within the horizon. Measurable by construction.
pub fn first_passage<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    lambda: &S,
) -> StoppingTime {
    let mart = filt.martingale(f);
    let crossed = crossing_levels(filt, &mart, lambda);
    let levels = (0..filt.leaf_count())
        .map(|leaf| match crossed[filt.leaves()[leaf]] {
            Some(n) => StopLevel::At(n),
            None => StopLevel::Never,
        })
        .collect();
    StoppingTime::pathwise(levels)
}

/// Computes every stopping time and increment process of the construction.
pub fn crossing_data<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    lambda: &S,
    theta: &S,
) -> Result<CrossingData<S>, DecomposeError> {
    validate_params(lambda, theta)?;
    validate_nonnegative(filt, f)?;
    let horizon = filt.horizon();
    let mart = filt.martingale(f);
    let crossed = crossing_levels(filt, &mart, lambda);

    let mut eps = vec![S::zero(); filt.atom_count()];
    let mut gamma = vec![S::zero(); filt.atom_count()];
    for level in 1..=horizon {
        for &idx in filt.level(level) {
            let atom = filt.atom(idx);
            let diff = match atom.parent {
                Some(p) => mart.value(idx).clone() - mart.value(p).clone(),
                None => mart.value(idx).clone(),
            };
            match crossed[idx] {
                Some(n) if n == level => eps[idx] = diff,
                Some(_) => {}
                None => gamma[idx] = diff,
            }
        }
    }

    // predicted[A at level m] = E_m[eps_{m+1}] (0 on leaves); the level-0
    // value of an AdaptedProcess is identically 0, matching E_0 = 0.
    let mut predicted = vec![S::zero(); filt.atom_count()];
    let mut compensator = vec![S::zero(); filt.atom_count()];
    for level in 1..=horizon {
        for &idx in filt.level(level) {
            let atom = filt.atom(idx);
            if level < horizon {
                predicted[idx] = S::sum(
                    atom.children
                        .iter()
                        .map(|&c| eps[c].clone() * filt.atom(c).prob.clone()),
                ) / atom.prob.clone();
            }
            let parent_compensator = match atom.parent {
                Some(p) => compensator[p].clone(),
                None => S::zero(),
            };
            compensator[idx] = parent_compensator + predicted[idx].clone();
        }
    }

    let threshold = theta.clone() * lambda.clone();
    let mut r_levels = Vec::with_capacity(filt.leaf_count());
    let mut s_levels = Vec::with_capacity(filt.leaf_count());
    for leaf in 0..filt.leaf_count() {
        let chain = filt.leaf_chain(leaf);
        r_levels.push(match crossed[chain[horizon - 1]] {
            Some(n) => StopLevel::At(n),
            None => StopLevel::Never,
        });
        let s = chain
            .iter()
            .enumerate()
            .find(|(_, &atom)| compensator[atom] > threshold)
            .map(|(pos, _)| StopLevel::At(pos + 1))
            .unwrap_or(StopLevel::Never);
        s_levels.push(s);
    }
    let first_passage = StoppingTime::pathwise(r_levels);
    let compensator_passage = StoppingTime::pathwise(s_levels);
    let localization = first_passage.min_with(&compensator_passage);
    let pre_passage = StoppingTime::pathwise(
        first_passage
            .levels()
            .iter()
            .map(|l| match l {
                StopLevel::At(n) => StopLevel::At(n - 1),
                StopLevel::Never => StopLevel::Never,
            })
            .collect(),
    );

    Ok(CrossingData {
        first_passage,
        pre_passage,
        compensator_passage,
        localization,
        crossing_increment: AdaptedProcess::from_atom_values(filt, eps),
        pre_crossing_increment: AdaptedProcess::from_atom_values(filt, gamma),
        predicted_crossing: AdaptedProcess::from_atom_values(filt, predicted),
        compensator: AdaptedProcess::from_atom_values(filt, compensator),
    })
}

/// Decomposes a nonnegative `f` at level `lambda` with allowance `theta`,
/// and attaches the full bound certification.
pub fn decompose_positive<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    lambda: &S,
    theta: &S,
) -> Result<DecompositionResult<S>, DecomposeError> {
    let crossing = crossing_data(filt, f, lambda, theta)?;
    let horizon = filt.horizon();

    let f_localized = filt.evaluate_stopped_pathwise(f, &crossing.localization);
    let g = f.sub(&f_localized);

    let mut h_values = Vec::with_capacity(filt.leaf_count());
    let mut k_pr_values = Vec::with_capacity(filt.leaf_count());
    for leaf in 0..filt.leaf_count() {
        let chain = filt.leaf_chain(leaf);
        let window_end = match crossing.compensator_passage.level(leaf) {
            StopLevel::At(m) => m.min(horizon),
            StopLevel::Never => horizon,
        };
        let mut h = S::zero();
        for j in 1..=window_end {
            let eps_j = crossing.crossing_increment.value(chain[j - 1]).clone();
            let predicted_j = if j == 1 {
                S::zero()
            } else {
                crossing.predicted_crossing.value(chain[j - 2]).clone()
            };
            h = h + eps_j - predicted_j;
        }
        h_values.push(h);
        k_pr_values.push(match crossing.compensator_passage.level(leaf) {
            StopLevel::At(m) => {
                if m == 1 {
                    S::zero()
                } else {
                    crossing.compensator.value(chain[m - 2]).clone()
                }
            }
            StopLevel::Never => crossing.compensator.value(chain[horizon - 1]).clone(),
        });
    }
    let h = TerminalFunction::new(filt, h_values).expect("shape by construction");
    let k_predictable = TerminalFunction::new(filt, k_pr_values).expect("shape by construction");

    let stop_for_k = crossing.compensator_passage.min_with(&crossing.pre_passage);
    let k_stopped = filt.evaluate_stopped_pathwise(f, &stop_for_k);

    let mut result = DecompositionResult {
        lambda: lambda.clone(),
        theta: theta.clone(),
        g,
        h,
        k_stopped,
        k_predictable,
        crossing,
        certification: Certification::new(),
    };
    result.certification = verify_bounds(filt, f, &result);
    Ok(result)
}

/// Recomputes and certifies every explicit bound and identity of the
/// four-term construction from the finished components.
pub fn verify_bounds<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    d: &DecompositionResult<S>,
) -> Certification<S> {
    let mut cert = Certification::new();
    let lambda = d.lambda.clone();
    let theta = d.theta.clone();
    let one_plus_theta = S::one() + theta.clone();
    let f_l1 = f.l1_norm(filt);
    let two = S::from_int(2);

    // Chebyshev for the maximal function: {r finite} = {max_n f_n > lambda}.
    cert.push(CheckRecord::upper_bound(
        "passage.prob",
        "P(r < infinity) <= ||f||_1 / lambda",
        d.crossing.first_passage.finite_prob(filt),
        f_l1.clone() / lambda.clone(),
    ));

    // (1) Localization. E_n[g] = f_n - f_{n and t} vanishes on {t >= n}, so
    // the support bound P(sup|E_n g| > 0) <= P(t finite) holds by
    // construction. The classical claim with P replaced by ||f||_1 / lambda
    // is recorded as stated; it can genuinely fail, because the compensator
    // passage s can be finite on atoms where r never fires (conditional
    // expectations spread crossing mass across whole atoms), so {t finite}
    // may strictly contain {r finite}. See the regression tests.
    let g_mart = filt.martingale(&d.g);
    let localized_prob = S::sum((0..filt.leaf_count()).filter_map(|leaf| {
        let seen = (1..=filt.horizon()).any(|n| {
            !g_mart
                .at_level_for_leaf(filt, n, leaf)
                .check_eq(&S::zero())
        });
        seen.then(|| filt.leaf_prob(leaf).clone())
    }));
    cert.push(CheckRecord::upper_bound(
        "g.localization_support",
        "P(sup_n |E_n[g]| > 0) <= P(t < infinity)",
        localized_prob.clone(),
        d.crossing.localization.finite_prob(filt),
    ));
    cert.push(CheckRecord::upper_bound(
        "g.localization_prob",
        "P(sup_n |E_n[g]| > 0) <= ||f||_1 / lambda",
        localized_prob,
        f_l1.clone() / lambda.clone(),
    ));
    cert.push(CheckRecord::upper_bound(
        "g.l1",
        "||g||_1 <= 2 ||f||_1",
        d.g.l1_norm(filt),
        two.clone() * f_l1.clone(),
    ));

    // (2) h has small variation: || sum_n |dh_n| ||_1 <= 2 ||f||_1.
    let h_mart = filt.martingale(&d.h);
    let h_variation = S::sum((0..filt.leaf_count()).map(|leaf| {
        let mut path_total = S::zero();
        let mut prev = S::zero();
        for n in 1..=filt.horizon() {
            let current = h_mart.at_level_for_leaf(filt, n, leaf);
            path_total = path_total + (current.clone() - prev).abs();
            prev = current;
        }
        path_total * filt.leaf_prob(leaf).clone()
    }));
    cert.push(CheckRecord::upper_bound(
        "h.variation",
        "|| sum_n |dh_n| ||_1 <= 2 ||f||_1",
        h_variation,
        two.clone() * f_l1.clone(),
    ));
    cert.push(CheckRecord::upper_bound(
        "h.l1",
        "||h||_1 <= 2 ||f||_1",
        d.h.l1_norm(filt),
        two.clone() * f_l1.clone(),
    ));

    // (3) Pointwise windows for the bounded components.
    let k = d.k();
    let zero = S::zero();
    for (id, component, bound) in [
        ("k_st", &d.k_stopped, lambda.clone()),
        ("k_pr", &d.k_predictable, theta.clone() * lambda.clone()),
        ("k", &k, one_plus_theta.clone() * lambda.clone()),
    ] {
        let min = component.min_value().unwrap_or_else(S::zero);
        let max = component.max_value().unwrap_or_else(S::zero);
        cert.push(CheckRecord::lower_bound(
            format!("{id}.nonneg"),
            format!("min {id} >= 0"),
            min,
            zero.clone(),
        ));
        cert.push(CheckRecord::upper_bound(
            format!("{id}.sup"),
            match id {
                "k_st" => "max k_st <= lambda",
                "k_pr" => "max k_pr <= theta lambda",
                _ => "max k <= (1+theta) lambda",
            },
            max,
            bound,
        ));
    }

    // (4) E[h] = E[eps_1]: only the uncompensated first increment carries mean.
    let eps1_mean = S::sum(filt.level(1).iter().map(|&idx| {
        d.crossing.crossing_increment.value(idx).clone() * filt.atom(idx).prob.clone()
    }));
    cert.push(CheckRecord::identity(
        "h.mean",
        "E[h] = E[eps_1]",
        d.h.expectation(filt),
        eps1_mean.clone(),
    ));

    // (5) Mass split of the bounded component.
    cert.push(CheckRecord::identity(
        "k.l1_split",
        "||k_st||_1 + ||k_pr||_1 = ||f||_1 - E[eps_1]",
        d.k_stopped.l1_norm(filt) + d.k_predictable.l1_norm(filt),
        f_l1.clone() - eps1_mean,
    ));

    // (6) L2 control via the pointwise windows.
    cert.push(CheckRecord::upper_bound(
        "k_st.l2",
        "||k_st||_2^2 <= lambda ||k_st||_1",
        d.k_stopped.l2_norm_sq(filt),
        lambda.clone() * d.k_stopped.l1_norm(filt),
    ));
    cert.push(CheckRecord::upper_bound(
        "k_pr.l2",
        "||k_pr||_2^2 <= theta lambda ||k_pr||_1",
        d.k_predictable.l2_norm_sq(filt),
        theta.clone() * lambda.clone() * d.k_predictable.l1_norm(filt),
    ));
    cert.push(CheckRecord::upper_bound(
        "k.l2",
        "||k||_2^2 <= (1+theta) lambda ||f||_1",
        k.l2_norm_sq(filt),
        one_plus_theta * lambda.clone() * f_l1,
    ));

    // (7) The construction increments of h are its martingale increments:
    // E_n[h] computed by subtree averaging must equal the running sums
    // (eps_j - E_{j-1}[eps_j]) 1{s >= j}; then E_{n-1}[dh_n] = 0 for n >= 2.
    let mut martingale_gap = S::zero();
    for leaf in 0..filt.leaf_count() {
        let chain = filt.leaf_chain(leaf);
        let window_end = match d.crossing.compensator_passage.level(leaf) {
            StopLevel::At(m) => m.min(filt.horizon()),
            StopLevel::Never => filt.horizon(),
        };
        let mut running = S::zero();
        for n in 1..=filt.horizon() {
            if n <= window_end {
                let eps_n = d.crossing.crossing_increment.value(chain[n - 1]).clone();
                let predicted_n = if n == 1 {
                    S::zero()
                } else {
                    d.crossing.predicted_crossing.value(chain[n - 2]).clone()
                };
                running = running + eps_n - predicted_n;
            }
            let gap = (h_mart.at_level_for_leaf(filt, n, leaf) - running.clone()).abs();
            martingale_gap = martingale_gap.max_with(gap);
        }
    }
    cert.push(CheckRecord::identity(
        "h.martingale",
        "E_{n-1}[dh_n] = 0 for n >= 2 (E_n[h] matches the construction sums)",
        martingale_gap,
        S::zero(),
    ));

    // (8) Exact reconstruction.
    let recombined = d.g.add(&d.h).add(&d.k_stopped).add(&d.k_predictable);
    let reconstruction_gap = recombined.sub(f).sup_norm();
    cert.push(CheckRecord::identity(
        "reconstruction",
        "g + h + k_st + k_pr = f",
        reconstruction_gap,
        S::zero(),
    ));

    // Stopped-sum identity: E_n[f_t] = f_{n /\ t} for the constructed t.
    let f_localized = filt.evaluate_stopped_pathwise(f, &d.crossing.localization);
    let localized_mart = filt.martingale(&f_localized);
    let f_mart = filt.martingale(f);
    let mut stopped_gap = S::zero();
    for leaf in 0..filt.leaf_count() {
        for n in 1..=filt.horizon() {
            let truncated = match d.crossing.localization.level(leaf) {
                StopLevel::At(m) if m <= n => f_mart.at_level_for_leaf(filt, m, leaf),
                _ => f_mart.at_level_for_leaf(filt, n, leaf),
            };
            let gap = (localized_mart.at_level_for_leaf(filt, n, leaf) - truncated).abs();
            stopped_gap = stopped_gap.max_with(gap);
        }
    }
    cert.push(CheckRecord::identity(
        "stopped.tower",
        "E_n[f_t] = f_{n /\\ t}",
        stopped_gap,
        S::zero(),
    ));

    cert
}

/// Decomposes a signed `f` by splitting into positive and negative parts and
/// decomposing each at level `lambda / (1+theta)`, then certifies the
/// doubled constants. The `P(sup_n |E_n[g]| > 0) <= 2 ||f||_1 / lambda`
/// bound is guaranteed for `theta <= 1`.
pub fn decompose_signed<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    lambda: &S,
    theta: &S,
) -> Result<SignedDecomposition<S>, DecomposeError> {
    validate_params(lambda, theta)?;
    let level = lambda.clone() / (S::one() + theta.clone());
    let positive = decompose_positive(filt, &f.positive_part(), &level, theta)?;
    let negative = decompose_positive(filt, &f.negative_part(), &level, theta)?;
    let g = positive.g.sub(&negative.g);
    let h = positive.h.sub(&negative.h);
    let k = positive.k().sub(&negative.k());
    let mut signed = SignedDecomposition {
        lambda: lambda.clone(),
        theta: theta.clone(),
        g,
        h,
        k,
        positive,
        negative,
        certification: Certification::new(),
    };
    signed.certification = verify_signed_bounds(filt, f, &signed);
    Ok(signed)
}

/// Certifies the doubled constants of the signed decomposition.
pub fn verify_signed_bounds<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    d: &SignedDecomposition<S>,
) -> Certification<S> {
    let mut cert = Certification::new();
    let f_l1 = f.l1_norm(filt);
    let two = S::from_int(2);
    let four = S::from_int(4);

    let g_mart = filt.martingale(&d.g);
    let localized_prob = S::sum((0..filt.leaf_count()).filter_map(|leaf| {
        let seen = (1..=filt.horizon()).any(|n| {
            !g_mart
                .at_level_for_leaf(filt, n, leaf)
                .check_eq(&S::zero())
        });
        seen.then(|| filt.leaf_prob(leaf).clone())
    }));
    cert.push(CheckRecord::upper_bound(
        "signed.g.localization_prob",
        "P(sup_n |E_n[g]| > 0) <= 2 ||f||_1 / lambda",
        localized_prob,
        two.clone() * f_l1.clone() / d.lambda.clone(),
    ));
    cert.push(CheckRecord::upper_bound(
        "signed.g.l1",
        "||g||_1 <= 4 ||f||_1",
        d.g.l1_norm(filt),
        four.clone() * f_l1.clone(),
    ));

    let h_mart = filt.martingale(&d.h);
    let h_variation = S::sum((0..filt.leaf_count()).map(|leaf| {
        let mut path_total = S::zero();
        let mut prev = S::zero();
        for n in 1..=filt.horizon() {
            let current = h_mart.at_level_for_leaf(filt, n, leaf);
            path_total = path_total + (current.clone() - prev).abs();
            prev = current;
        }
        path_total * filt.leaf_prob(leaf).clone()
    }));
    cert.push(CheckRecord::upper_bound(
        "signed.h.variation",
        "|| sum_n |dh_n| ||_1 <= 4 ||f||_1",
        h_variation,
        four.clone() * f_l1.clone(),
    ));
    cert.push(CheckRecord::upper_bound(
        "signed.h.l1",
        "||h||_1 <= 4 ||f||_1",
        d.h.l1_norm(filt),
        four * f_l1.clone(),
    ));

    cert.push(CheckRecord::upper_bound(
        "signed.k.sup",
        "||k||_inf <= lambda",
        d.k.sup_norm(),
        d.lambda.clone(),
    ));
    cert.push(CheckRecord::upper_bound(
        "signed.k.l1",
        "||k||_1 <= 2 ||f||_1",
        d.k.l1_norm(filt),
        two.clone() * f_l1.clone(),
    ));
    cert.push(CheckRecord::upper_bound(
        "signed.k.l2",
        "||k||_2^2 <= 2 lambda ||f||_1",
        d.k.l2_norm_sq(filt),
        two * d.lambda.clone() * f_l1,
    ));

    let recombined = d.g.add(&d.h).add(&d.k);
    cert.push(CheckRecord::identity(
        "signed.reconstruction",
        "g + h + k = f",
        recombined.sub(f).sup_norm(),
        S::zero(),
    ));

    cert
}

/// Projects raw sub-leaf data to a terminal function, or reports which leaf
/// breaks measurability.
pub fn require_terminal_measurable<S: Scalar>(
    filt: &Filtration<S>,
    raw: &RawTerminalFunction<S>,
) -> Result<TerminalFunction<S>, HypothesisViolation<S>> {
    match raw.non_measurable_leaf() {
        None => Ok(raw.as_measurable().expect("constant per leaf")),
        Some(leaf) => Err(HypothesisViolation {
            leaf: filt.atom(filt.leaves()[leaf]).id.clone(),
            raw_sup_norm: raw.sup_norm(),
            raw_l1_norm: raw.l1_norm(),
        }),
    }
}

/// Data that is not measurable at the horizon, so the decomposition's
/// hypotheses are void.
#[derive(Debug, Clone)]
pub struct HypothesisViolation<S> {
    pub leaf: String,
    pub raw_sup_norm: S,
    pub raw_l1_norm: S,
}

/// Reports (without failing) that `raw` violates the terminal-measurability
/// hypothesis. When the projected martingale never passes `lambda`, the
/// decomposition is the identity and the raw data passes straight into `k`,
/// so the `||k||_inf <= lambda` conclusion is genuinely violated; that
/// violation is recorded as an expected flag.
pub fn flag_non_measurable<S: Scalar>(
    filt: &Filtration<S>,
    raw: &RawTerminalFunction<S>,
    lambda: &S,
) -> Certification<S> {
    let mut cert = Certification::new();
    let split_leaves = S::from_int(
        (0..filt.leaf_count())
            .filter(|&leaf| {
                raw.pieces(leaf)
                    .iter()
                    .any(|(_, v)| !v.check_eq(&raw.pieces(leaf)[0].1))
            })
            .count() as i64,
    );
    cert.push(CheckRecord::expected_violation(
        "hypothesis.measurability",
        "terminal data is constant on each leaf (count of split leaves = 0)",
        split_leaves,
        S::zero(),
    ));
    let projected = raw.project(filt);
    let passage = first_passage(filt, &projected, lambda);
    if passage.levels().iter().all(|l| !l.is_finite()) {
        cert.push(CheckRecord::expected_violation(
            "hypothesis.passthrough_sup",
            "||k||_inf <= lambda on the raw passthrough (no passage, k = raw f)",
            raw.sup_norm(),
            lambda.clone(),
        ));
    }
    cert
}

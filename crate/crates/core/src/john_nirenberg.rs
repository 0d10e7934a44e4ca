//! Martingale BMO machinery on regular atomic filtrations: per-atom
//! oscillations, the overshoot bound, generational Calderon-Zygmund
//! selection, and certified John-Nirenberg tail and exponential-moment
//! estimates with the explicit constants `e`, `alpha/e`, and
//! `1 + e^2 beta / (alpha - e beta)`.
//!
//! Transcendental right-hand sides are certified against rational bounds
//! rounded in the sound direction (floors on bounds we must not exceed,
//! ceilings on quantities we must dominate), so a Pass in exact mode proves
//! the real inequality.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::filtration::{AdaptedProcess, AtomIdx, Filtration, TerminalFunction};
use crate::report::{Certification, CheckRecord};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JnError {
    #[error("the overshoot bound needs f >= 0, but leaf `{leaf}` carries {value}")]
    NegativeValue { leaf: String, value: String },
    #[error("selection level must be positive, got {level}")]
    NonpositiveLevel { level: String },
    #[error("selection hypothesis violated: |g| averages {average} over `{root}`, above {level}")]
    RootAverageAboveLevel { root: String, average: String, level: String },
    #[error("generation threshold {threshold} does not exceed the oscillation norm {norm}")]
    ThresholdBelowNorm { threshold: String, norm: String },
    #[error("tail grid point {point} is negative")]
    NegativeTailPoint { point: String },
    #[error("parametric base {base} must exceed 1")]
    BaseNotAboveOne { base: String },
    #[error("exponential rate {rate} lies outside (0, alpha/e) for alpha = {alpha}")]
    RateOutOfRange { rate: String, alpha: String },
}

/// Exact regularity constant `min P(child) / P(parent)` over all
/// parent-child atom pairs; `1` when no atom branches below level 1.
pub fn regularity_constant<S: Scalar>(filt: &Filtration<S>) -> S {
    filt.check_alpha_regular(&S::zero()).constant
}

/// Per-atom averages and oscillations of a terminal function, plus the
/// martingale BMO norm `B = max_A E[|f - f_A| 1_A] / P(A)`.
#[derive(Debug, Clone)]
pub struct BmoProfile<S> {
    averages: AdaptedProcess<S>,
    oscillations: Vec<S>,
    /// `B`, the largest oscillation over all atoms.
    pub norm: S,
    /// First atom in construction order with a strictly positive
    /// oscillation attaining the norm; `None` exactly when `B = 0`.
    pub worst_atom: Option<AtomIdx>,
}

impl<S: Scalar> BmoProfile<S> {
    /// Subtree average `f_A`.
    pub fn average(&self, atom: AtomIdx) -> &S {
        self.averages.value(atom)
    }

    /// `E[|f - f_A| 1_A] / P(A)`.
    pub fn oscillation(&self, atom: AtomIdx) -> &S {
        &self.oscillations[atom]
    }
}

/// Computes every atom oscillation exactly in one pass over leaf chains.
pub fn bmo_norm<S: Scalar>(filt: &Filtration<S>, f: &TerminalFunction<S>) -> BmoProfile<S> {
    let averages = filt.martingale(f);
    let mut weighted = vec![S::zero(); filt.atom_count()];
    for leaf in 0..filt.leaf_count() {
        for &atom in filt.leaf_chain(leaf) {
            let dev = (f.value(leaf).clone() - averages.value(atom).clone()).abs();
            weighted[atom] = weighted[atom].clone() + filt.leaf_prob(leaf).clone() * dev;
        }
    }
    let oscillations: Vec<S> = weighted
        .into_iter()
        .enumerate()
        .map(|(atom, w)| w / filt.atom(atom).prob.clone())
        .collect();
    let mut norm = S::zero();
    let mut worst_atom = None;
    for (atom, osc) in oscillations.iter().enumerate() {
        if *osc > norm {
            norm = osc.clone();
            worst_atom = Some(atom);
        }
    }
    BmoProfile { averages, oscillations, norm, worst_atom }
}

/// Worst child/parent average ratio of a nonnegative function.
#[derive(Debug, Clone)]
pub struct OvershootReport<S> {
    /// `max f_child / f_parent` over pairs with `f_parent > 0`; `None`
    /// when no parent average is positive.
    pub max_ratio: Option<S>,
    /// Exact regularity constant; the certified ceiling is `1/alpha`.
    pub alpha: S,
    pub certification: Certification<S>,
}

/// For `f >= 0` the average over a child atom is at most `1/alpha` times
/// the average over its parent: conditioning on a child can concentrate
/// mass by no more than the inverse of its conditional probability.
pub fn overshoot_check<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
) -> Result<OvershootReport<S>, JnError> {
    for (leaf, value) in f.values().iter().enumerate() {
        if *value < S::zero() {
            return Err(JnError::NegativeValue {
                leaf: filt.atom(filt.leaves()[leaf]).id.clone(),
                value: value.to_string(),
            });
        }
    }
    let alpha = regularity_constant(filt);
    let averages = filt.martingale(f);
    let mut max_ratio: Option<S> = None;
    for atom in 0..filt.atom_count() {
        let Some(parent) = filt.atom(atom).parent else { continue };
        let parent_avg = averages.value(parent);
        if *parent_avg > S::zero() {
            let ratio = averages.value(atom).clone() / parent_avg.clone();
            max_ratio = Some(match max_ratio {
                None => ratio,
                Some(seen) => seen.max_with(ratio),
            });
        }
    }
    let mut certification = Certification::new();
    certification.push(CheckRecord::upper_bound(
        "jn.overshoot",
        "child average of f <= parent average / alpha for f >= 0",
        max_ratio.clone().unwrap_or_else(S::zero),
        S::one() / alpha.clone(),
    ));
    Ok(OvershootReport { max_ratio, alpha, certification })
}

/// One selection below a root: maximal subtree atoms whose `|g|` average
/// strictly exceeds the level.
#[derive(Debug, Clone)]
pub struct CzSelection<S> {
    pub root: AtomIdx,
    pub level: S,
    /// Selected atoms in breadth-first construction order.
    pub selected: Vec<AtomIdx>,
    /// `|g|` average on each selected atom, parallel to `selected`.
    pub averages: Vec<S>,
    /// Total probability of the selected union.
    pub total_prob: S,
    pub alpha: S,
    pub certification: Certification<S>,
}

/// Breadth-first Calderon-Zygmund selection below `root`.
///
/// Requires `E[|g| 1_root] / P(root) <= level` (equality admissible).
/// Walks the subtree top-down, selects an atom the first time its `|g|`
/// average strictly exceeds `level`, never descends below a selected atom,
/// and certifies three conclusions: every selected average lies in
/// `(level, level/alpha]`, `|g| <= level` on every leaf off the selection,
/// and the selected mass is at most `E[|g| 1_root] / level`.
pub fn cz_select<S: Scalar>(
    filt: &Filtration<S>,
    g: &TerminalFunction<S>,
    root: AtomIdx,
    level: &S,
) -> Result<CzSelection<S>, JnError> {
    if !(S::zero() < *level) {
        return Err(JnError::NonpositiveLevel { level: level.to_string() });
    }
    let averages = subtree_abs_averages(filt, g, root);
    let root_avg = averages[&root].clone();
    if root_avg > *level {
        return Err(JnError::RootAverageAboveLevel {
            root: filt.atom(root).id.clone(),
            average: root_avg.to_string(),
            level: level.to_string(),
        });
    }
    let alpha = regularity_constant(filt);

    let mut frontier: VecDeque<AtomIdx> = filt.atom(root).children.iter().copied().collect();
    let mut selected = Vec::new();
    let mut selected_avgs: Vec<S> = Vec::new();
    while let Some(atom) = frontier.pop_front() {
        let avg = &averages[&atom];
        if *avg > *level {
            selected.push(atom);
            selected_avgs.push(avg.clone());
        } else {
            frontier.extend(filt.atom(atom).children.iter().copied());
        }
    }
    let total_prob = S::sum(selected.iter().map(|&a| filt.atom(a).prob.clone()));

    let mut certification = Certification::new();
    if !selected.is_empty() {
        let mut min_avg = selected_avgs[0].clone();
        let mut max_avg = selected_avgs[0].clone();
        for avg in &selected_avgs[1..] {
            min_avg = min_avg.min_with(avg.clone());
            max_avg = max_avg.max_with(avg.clone());
        }
        certification.push(CheckRecord::strict_lower_bound(
            "jn.cz.avg_above",
            "every selected |g| average strictly exceeds the level",
            min_avg,
            level.clone(),
        ));
        certification.push(CheckRecord::upper_bound(
            "jn.cz.avg_below",
            "every selected |g| average is at most level / alpha",
            max_avg,
            level.clone() / alpha.clone(),
        ));
    }

    let mut covered = vec![false; filt.leaf_count()];
    for &atom in &selected {
        for leaf in filt.leaves_under(atom) {
            covered[leaf] = true;
        }
    }
    let mut off_sup = S::zero();
    for leaf in filt.leaves_under(root) {
        if !covered[leaf] {
            off_sup = off_sup.max_with(g.value(leaf).abs());
        }
    }
    certification.push(CheckRecord::upper_bound(
        "jn.cz.off_selection",
        "|g| <= level on every leaf off the selection",
        off_sup,
        level.clone(),
    ));
    certification.push(CheckRecord::upper_bound(
        "jn.cz.measure",
        "selected mass <= E[|g| 1_root] / level",
        total_prob.clone(),
        root_avg * filt.atom(root).prob.clone() / level.clone(),
    ));

    Ok(CzSelection {
        root,
        level: level.clone(),
        selected,
        averages: selected_avgs,
        total_prob,
        alpha,
        certification,
    })
}

// Exact |g| averages on every atom of the subtree rooted at `root`,
// accumulated along leaf chains so the cost is subtree-local.
fn subtree_abs_averages<S: Scalar>(
    filt: &Filtration<S>,
    g: &TerminalFunction<S>,
    root: AtomIdx,
) -> HashMap<AtomIdx, S> {
    let skip = filt.atom(root).level - 1;
    let mut weighted: HashMap<AtomIdx, S> = HashMap::new();
    for leaf in filt.leaves_under(root) {
        let mass = g.value(leaf).abs() * filt.leaf_prob(leaf).clone();
        for &atom in &filt.leaf_chain(leaf)[skip..] {
            let slot = weighted.entry(atom).or_insert_with(S::zero);
            *slot = slot.clone() + mass.clone();
        }
    }
    weighted
        .into_iter()
        .map(|(atom, w)| {
            let avg = w / filt.atom(atom).prob.clone();
            (atom, avg)
        })
        .collect()
}

/// One generation of nested selections.
#[derive(Debug, Clone)]
pub struct CzGeneration<S> {
    /// Selected atoms across all generation-(k-1) parents.
    pub atoms: Vec<AtomIdx>,
    /// The previous-generation atom each selected atom sits inside,
    /// parallel to `atoms`.
    pub parents: Vec<AtomIdx>,
    pub total_prob: S,
}

/// A generational selection run with its certified decay chains.
#[derive(Debug, Clone)]
pub struct GenerationRun<S> {
    pub root: AtomIdx,
    /// Selection threshold `s`, strictly above the oscillation norm.
    pub threshold: S,
    /// Oscillation norm `B` of the input.
    pub norm: S,
    pub alpha: S,
    /// `E_1, E_2, ...`; the last entry is empty unless `max_gen` or the
    /// horizon cut the run short.
    pub generations: Vec<CzGeneration<S>>,
    pub certification: Certification<S>,
}

/// Runs the selection generationally: generation k re-centers `f` at each
/// generation-(k-1) atom's own average and selects at the same threshold.
///
/// Certifies, for every produced k, the geometric measure decay
/// `P(E_k) <= (B/s)^k P(root)` and the escape bound
/// `|f - f_root| <= k s / alpha` off `E_k`, plus the increment chain
/// `|f_A - f_parent| <= s / alpha` across nested selections. Each inner
/// selection contributes its own three conclusions to the certification.
pub fn cz_generations<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    root: AtomIdx,
    threshold: &S,
    max_gen: usize,
) -> Result<GenerationRun<S>, JnError> {
    let profile = bmo_norm(filt, f);
    if !(profile.norm < *threshold) {
        return Err(JnError::ThresholdBelowNorm {
            threshold: threshold.to_string(),
            norm: profile.norm.to_string(),
        });
    }
    let alpha = regularity_constant(filt);
    let increment_cap = threshold.clone() / alpha.clone();
    let root_avg = profile.average(root).clone();
    let p_root = filt.atom(root).prob.clone();
    let root_leaves = filt.leaves_under(root);

    let mut certification = Certification::new();
    let mut generations: Vec<CzGeneration<S>> = Vec::new();
    let mut parents = vec![root];
    let mut decay = S::one();
    let mut max_increment = S::zero();

    for k in 1..=max_gen {
        let mut atoms = Vec::new();
        let mut atom_parents = Vec::new();
        for &parent in &parents {
            let center = profile.average(parent).clone();
            let centered = f.map(|v| v.clone() - center.clone());
            let selection = cz_select(filt, &centered, parent, threshold)?;
            for &atom in &selection.selected {
                max_increment = max_increment.max_with(
                    (profile.average(atom).clone() - profile.average(parent).clone()).abs(),
                );
                atoms.push(atom);
                atom_parents.push(parent);
            }
            certification.extend(selection.certification);
        }
        let total_prob = S::sum(atoms.iter().map(|&a| filt.atom(a).prob.clone()));
        decay = decay * (profile.norm.clone() / threshold.clone());
        certification.push(CheckRecord::upper_bound(
            format!("jn.generations.measure.k{k}"),
            format!("P(E_{k}) <= (B/s)^{k} P(root)"),
            total_prob.clone(),
            decay.clone() * p_root.clone(),
        ));

        let mut covered = vec![false; filt.leaf_count()];
        for &atom in &atoms {
            for leaf in filt.leaves_under(atom) {
                covered[leaf] = true;
            }
        }
        let mut off_sup = S::zero();
        for &leaf in &root_leaves {
            if !covered[leaf] {
                off_sup = off_sup.max_with((f.value(leaf).clone() - root_avg.clone()).abs());
            }
        }
        certification.push(CheckRecord::upper_bound(
            format!("jn.generations.pointwise.k{k}"),
            format!("|f - f_root| <= {k} s / alpha off E_{k}"),
            off_sup,
            S::from_int(k as i64) * increment_cap.clone(),
        ));

        let done = atoms.is_empty();
        generations.push(CzGeneration { atoms, parents: atom_parents, total_prob });
        if done {
            break;
        }
        parents = generations.last().expect("just pushed").atoms.clone();
    }

    certification.push(CheckRecord::upper_bound(
        "jn.generations.avg_increment",
        "|f_selected - f_parent| <= s / alpha across nested selections",
        max_increment,
        increment_cap,
    ));

    Ok(GenerationRun {
        root,
        threshold: threshold.clone(),
        norm: profile.norm,
        alpha,
        generations,
        certification,
    })
}

/// Default geometric tail grid `{B 2^j : j = -2..=6}`.
pub fn default_t_grid<S: Scalar>(norm: &S) -> Vec<S> {
    (-2i32..=6)
        .map(|j| {
            let factor = if j >= 0 {
                S::from_int(1i64 << j)
            } else {
                S::ratio(1, 1i64 << (-j))
            };
            norm.clone() * factor
        })
        .collect()
}

/// Exact tails versus certified floors of the John-Nirenberg right side.
#[derive(Debug, Clone)]
pub struct TailCertificate<S> {
    /// Oscillation norm `B` of the input.
    pub norm: S,
    pub alpha: S,
    /// `(t, exact tail, certified floor of the right side)` per grid point;
    /// empty when `B = 0` short-circuits.
    pub points: Vec<(S, S, S)>,
    pub certification: Certification<S>,
}

/// Certifies `P({|f - f_root| > t} on root) <= e exp(-(alpha/e) t/B) P(root)`
/// at every grid point. The right side is bounded below by rationals (Euler
/// floor, exponent ceiling), so a Pass proves the real inequality.
pub fn certify_jn_tail<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    root: AtomIdx,
    t_grid: &[S],
) -> Result<TailCertificate<S>, JnError> {
    certify_tail_impl(filt, f, root, t_grid, None)
}

/// Tail certificate for the parametric family
/// `u exp(-(alpha ln(u)/u) t/B)` with rational base `u > 1`.
pub fn certify_jn_tail_parametric<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    root: AtomIdx,
    t_grid: &[S],
    base: &S,
) -> Result<TailCertificate<S>, JnError> {
    if !(S::one() < *base) {
        return Err(JnError::BaseNotAboveOne { base: base.to_string() });
    }
    certify_tail_impl(filt, f, root, t_grid, Some(base))
}

fn certify_tail_impl<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    root: AtomIdx,
    t_grid: &[S],
    base: Option<&S>,
) -> Result<TailCertificate<S>, JnError> {
    for t in t_grid {
        if *t < S::zero() {
            return Err(JnError::NegativeTailPoint { point: t.to_string() });
        }
    }
    let profile = bmo_norm(filt, f);
    let alpha = regularity_constant(filt);
    let root_avg = profile.average(root).clone();
    let p_root = filt.atom(root).prob.clone();
    let leaves = filt.leaves_under(root);

    let mut certification = Certification::new();
    let mut points = Vec::new();

    if profile.norm.is_zero() {
        // zero norm forces f = f_root on the whole subtree; the tail
        // vanishes for every t > 0, so certify the degenerate identity
        let mut sup_dev = S::zero();
        for &leaf in &leaves {
            sup_dev = sup_dev.max_with((f.value(leaf).clone() - root_avg.clone()).abs());
        }
        certification.push(CheckRecord::identity(
            "jn.tail.degenerate",
            "zero oscillation norm forces |f - f_root| = 0 on the root subtree",
            sup_dev,
            S::zero(),
        ));
        return Ok(TailCertificate { norm: profile.norm, alpha, points, certification });
    }

    for (j, t) in t_grid.iter().enumerate() {
        let tail = S::sum(leaves.iter().filter_map(|&leaf| {
            let dev = (f.value(leaf).clone() - root_avg.clone()).abs();
            if dev > *t {
                Some(filt.leaf_prob(leaf).clone())
            } else {
                None
            }
        }));
        let (id, statement, floor) = match base {
            None => {
                let exponent =
                    alpha.clone() * t.clone() / (S::e_lower() * profile.norm.clone());
                let floor = S::e_lower() * S::exp_neg_lower(&exponent) * p_root.clone();
                (
                    format!("jn.tail[{j}]"),
                    format!(
                        "P(|f - f_root| > t) <= e exp(-(alpha/e) t/B) P(root) at t = {t}, \
                         via a rational floor of the right side"
                    ),
                    floor,
                )
            }
            Some(u) => {
                let exponent = alpha.clone() * S::ln_upper(u) * t.clone()
                    / (u.clone() * profile.norm.clone());
                let floor = u.clone() * S::exp_neg_lower(&exponent) * p_root.clone();
                (
                    format!("jn.tail.u[{j}]"),
                    format!(
                        "P(|f - f_root| > t) <= u exp(-(alpha ln(u)/u) t/B) P(root) at \
                         u = {u}, t = {t}, via a rational floor of the right side"
                    ),
                    floor,
                )
            }
        };
        certification.push(CheckRecord::upper_bound(id, statement, tail.clone(), floor.clone()));
        points.push((t.clone(), tail, floor));
    }

    Ok(TailCertificate { norm: profile.norm, alpha, points, certification })
}

/// Certifies that the tail exponent rate `ln(u)/u` over the default base
/// grid `{3/2, 2, 3, 4}` stays strictly below the rate `1/e` attained at
/// `u = e`: ceilings of `ln(u)/u` against the floor of `1/e`.
pub fn exponent_grid_check<S: Scalar>() -> Certification<S> {
    let rate_at_e = S::one() / S::e_upper();
    let mut certification = Certification::new();
    for (label, u) in [
        ("3/2", S::ratio(3, 2)),
        ("2", S::from_int(2)),
        ("3", S::from_int(3)),
        ("4", S::from_int(4)),
    ] {
        let rate = S::ln_upper(&u) / u.clone();
        certification.push(CheckRecord::strict_upper_bound(
            format!("jn.exponent.u={label}"),
            format!("ln(u)/u < 1/e at u = {label}: the exponent rate peaks at u = e"),
            rate,
            rate_at_e.clone(),
        ));
    }
    certification
}

/// Certified exponential moment: a rational ceiling of the normalized
/// moment against a rational floor of `1 + e^2 beta / (alpha - e beta)`.
#[derive(Debug, Clone)]
pub struct ExpMomentCertificate<S> {
    /// Ceiling of `E[exp(beta |f - f_root| / B) 1_root] / P(root)`.
    pub moment: S,
    /// Floor of `1 + e^2 beta / (alpha - e beta)`.
    pub bound: S,
    pub pass: bool,
    pub certification: Certification<S>,
}

/// Certifies the exponential-moment bound for `0 < beta < alpha/e`. The
/// admission gate compares against the Euler ceiling, so every admitted
/// rate genuinely sits below `alpha/e`.
pub fn certify_exp_integrability<S: Scalar>(
    filt: &Filtration<S>,
    f: &TerminalFunction<S>,
    root: AtomIdx,
    beta: &S,
) -> Result<ExpMomentCertificate<S>, JnError> {
    let alpha = regularity_constant(filt);
    let gate = beta.clone() * S::e_upper();
    if !(S::zero() < *beta) || !(gate < alpha) {
        return Err(JnError::RateOutOfRange {
            rate: beta.to_string(),
            alpha: alpha.to_string(),
        });
    }
    let profile = bmo_norm(filt, f);
    let root_avg = profile.average(root).clone();
    let p_root = filt.atom(root).prob.clone();

    let moment = if profile.norm.is_zero() {
        // |f - f_root| vanishes on the subtree, so the moment is exactly 1
        S::one()
    } else {
        let total = S::sum(filt.leaves_under(root).into_iter().map(|leaf| {
            let dev = (f.value(leaf).clone() - root_avg.clone()).abs();
            let x = beta.clone() * dev / profile.norm.clone();
            S::exp_upper(&x) * filt.leaf_prob(leaf).clone()
        }));
        total / p_root
    };
    let bound = S::one()
        + S::e_lower() * S::e_lower() * beta.clone()
            / (alpha.clone() - S::e_lower() * beta.clone());
    let record = CheckRecord::upper_bound(
        "jn.exp_moment",
        "E[exp(beta |f - f_root|/B) 1_root]/P(root) <= 1 + e^2 beta/(alpha - e beta), \
         ceiling vs floor",
        moment.clone(),
        bound.clone(),
    );
    let pass = record.passed();
    let mut certification = Certification::new();
    certification.push(record);
    Ok(ExpMomentCertificate { moment, bound, pass, certification })
}

/// `alpha / (2e)` realized with the Euler ceiling; always inside the gate.
pub fn default_exp_rate<S: Scalar>(alpha: &S) -> S {
    alpha.clone() / (S::from_int(2) * S::e_upper())
}

//! Sharpness oracles on the two-point space.
//!
//! Everything here is exact rational: the instances are small and the whole
//! point is to certify optimality claims, so no float mode is offered.
//!
//! The setting: `P(E) = p` with `0 < p <= 1/2`, `q = 1 - p`, the filtration
//! is trivial at level 1 and splits `{E, Ec}` at level 2, and
//! `f = (lambda/p) 1_E`. For any decomposition `f = g + h + k` with
//! `0 <= k <= beta * lambda`, either the conditional expectations of `g`
//! spread to the whole space (`P(sup_n |E_n[g]| > 0) = 1`), or `g = 0` and
//! the variation of `h = f - k` with `k = a 1_E + b 1_{Ec}` equals
//!
//! ```text
//! Phi(a, b) = |lambda - p a - q b| + 2 p q |lambda/p - a + b|
//! ```
//!
//! whose minimum over the box `[0, beta*lambda]^2` is piecewise linear in
//! `beta`: `(3 - beta - 2p) * lambda` for `beta <= 1` (attained at
//! `a = b = beta*lambda`) and `2 (1 - p*beta) * lambda` for `beta >= 1`
//! (attained on the mean line `p a + q b = lambda` at `a = beta*lambda`).
//! The brute-force minimizer sweeps the grid and the mean line and is the
//! independent oracle for those formulas.

use crate::decomposition::{decompose_positive, DecompositionResult};
use crate::filtration::{AtomSpec, Filtration, TerminalFunction};
use crate::report::{Certification, CheckRecord};
use crate::scalar::{Rational, Scalar};
use num::bigint::BigInt;
use num::ToPrimitive;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SharpnessError {
    #[error("p must lie in (0, 1/2], got {p}")]
    InvalidP { p: String },
    #[error("lambda must be positive, got {lambda}")]
    InvalidLambda { lambda: String },
    #[error("beta must lie in [0, 1/p], got {beta}")]
    InvalidBeta { beta: String },
    #[error("grid_n must be at least 2, got {grid_n}")]
    GridTooCoarse { grid_n: usize },
    #[error("components do not reconstruct f on {leaf}")]
    Reconstruction { leaf: String },
    #[error("k = ({on_e}, {on_ec}) leaves the box [0, beta*lambda]")]
    KOutOfBox { on_e: String, on_ec: String },
}

/// Builds the two-point filtration: trivial level 1, `{E, Ec}` at level 2.
/// `p = 1` degenerates to a single chain (used by boundary attainment runs).
pub fn two_point_filtration(p: &Rational) -> Filtration<Rational> {
    let one: Rational = Scalar::one();
    let level2 = if *p == one {
        vec![AtomSpec::child("E", "root", one.clone())]
    } else {
        vec![
            AtomSpec::child("E", "root", p.clone()),
            AtomSpec::child("Ec", "root", one.clone() - p.clone()),
        ]
    };
    Filtration::new(vec![vec![AtomSpec::root("root", one)], level2])
        .expect("two-point construction is valid")
}

/// `f = (lambda/p) 1_E` on the two-point filtration.
pub fn two_point_function(
    filt: &Filtration<Rational>,
    p: &Rational,
    lambda: &Rational,
) -> TerminalFunction<Rational> {
    let spike = lambda.clone() / p.clone();
    let values = if filt.leaf_count() == 1 {
        vec![spike]
    } else {
        vec![spike, Scalar::zero()]
    };
    TerminalFunction::new(filt, values).expect("shape by construction")
}

/// One sharpness instance: `P(E) = p`, level `lambda`, box radius
/// `beta * lambda` with `beta <= 1/p`.
#[derive(Debug, Clone)]
pub struct TwoPointInstance {
    p: Rational,
    lambda: Rational,
    beta: Rational,
}

impl TwoPointInstance {
    pub fn new(p: Rational, lambda: Rational, beta: Rational) -> Result<Self, SharpnessError> {
        let zero: Rational = Scalar::zero();
        let half = Rational::ratio(1, 2);
        if p <= zero || p > half {
            return Err(SharpnessError::InvalidP { p: p.to_string() });
        }
        if lambda <= zero {
            return Err(SharpnessError::InvalidLambda { lambda: lambda.to_string() });
        }
        let one: Rational = Scalar::one();
        if beta < zero || beta > one / p.clone() {
            return Err(SharpnessError::InvalidBeta { beta: beta.to_string() });
        }
        Ok(TwoPointInstance { p, lambda, beta })
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    pub fn q(&self) -> Rational {
        let one: Rational = Scalar::one();
        one - self.p.clone()
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    /// Box radius `beta * lambda`.
    pub fn box_radius(&self) -> Rational {
        self.beta.clone() * self.lambda.clone()
    }

    pub fn filtration(&self) -> Filtration<Rational> {
        two_point_filtration(&self.p)
    }

    pub fn terminal_f(&self, filt: &Filtration<Rational>) -> TerminalFunction<Rational> {
        two_point_function(filt, &self.p, &self.lambda)
    }

    /// `(f on E, f on Ec)`.
    pub fn f_values(&self) -> (Rational, Rational) {
        (self.lambda.clone() / self.p.clone(), Scalar::zero())
    }
}

/// `Phi(a, b) = |lambda - p a - q b| + 2 p q |lambda/p - a + b|`: the
/// h-variation of the decomposition with `g = 0` and `k = a 1_E + b 1_{Ec}`.
pub fn phi(inst: &TwoPointInstance, a: &Rational, b: &Rational) -> Rational {
    let p = inst.p.clone();
    let q = inst.q();
    let lambda = inst.lambda.clone();
    let mean_defect = lambda.clone() - p.clone() * a.clone() - q.clone() * b.clone();
    let jump = lambda / p.clone() - a.clone() + b.clone();
    Scalar::abs(&mean_defect) + Rational::from_int(2) * p * q * Scalar::abs(&jump)
}

/// A minimum of `Phi` over the admissible box, with a witness point.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMinimum {
    pub value: Rational,
    pub argmin: (Rational, Rational),
}

/// Closed-form minimum of `Phi` over `[0, beta*lambda]^2`.
pub fn minimize_phi_analytic(inst: &TwoPointInstance) -> PhiMinimum {
    let one: Rational = Scalar::one();
    let two = Rational::from_int(2);
    let three = Rational::from_int(3);
    let lambda = inst.lambda.clone();
    let radius = inst.box_radius();
    if inst.beta <= one {
        PhiMinimum {
            value: (three - inst.beta.clone() - two * inst.p.clone()) * lambda,
            argmin: (radius.clone(), radius),
        }
    } else {
        let b = (one.clone() - inst.p.clone() * inst.beta.clone()) * lambda.clone() / inst.q();
        PhiMinimum {
            value: two * (one - inst.p.clone() * inst.beta.clone()) * lambda,
            argmin: (radius, b),
        }
    }
}

/// Integer view of the lattice sweep: `Phi(a_i, b_j)` numerators over a
/// common denominator, so the inner loop is pure `i128` arithmetic.
struct LatticeCoefficients {
    mean_const: i128,   // lambda
    mean_a: i128,       // p * step
    mean_b: i128,       // q * step
    jump_const: i128,   // 2 q lambda
    jump_step: i128,    // 2 p q * step
}

impl LatticeCoefficients {
    /// Returns None when the numerators (or any intermediate product over
    /// the grid) would not fit comfortably in i128.
    fn build(inst: &TwoPointInstance, step: &Rational, grid_n: usize) -> Option<Self> {
        let two = Rational::from_int(2);
        let q = inst.q();
        let parts = [
            inst.lambda.clone(),
            inst.p.clone() * step.clone(),
            q.clone() * step.clone(),
            two.clone() * q.clone() * inst.lambda.clone(),
            two * inst.p.clone() * q * step.clone(),
        ];
        let mut denom = BigInt::from(1);
        for part in &parts {
            denom = num::integer::lcm(denom, part.denom().clone());
        }
        let mut nums = [0i128; 5];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            let scaled = part.numer() * (&denom / part.denom());
            *slot = scaled.to_i128()?;
        }
        let n = i128::try_from(grid_n).ok()?;
        let magnitude = nums[0].checked_abs()?
            .checked_add(n.checked_mul(nums[1].checked_abs()?.checked_add(nums[2].abs())?)?)?
            .checked_add(nums[3].checked_abs()?)?
            .checked_add(n.checked_mul(nums[4].abs())?)?;
        if magnitude > i128::MAX / 4 {
            return None;
        }
        Some(LatticeCoefficients {
            mean_const: nums[0],
            mean_a: nums[1],
            mean_b: nums[2],
            jump_const: nums[3],
            jump_step: nums[4],
        })
    }

    fn value(&self, i: i128, j: i128) -> i128 {
        (self.mean_const - self.mean_a * i - self.mean_b * j).abs()
            + (self.jump_const - self.jump_step * (i - j)).abs()
    }
}

fn lattice_min_integers(
    inst: &TwoPointInstance,
    step: &Rational,
    grid_n: usize,
) -> Option<(usize, usize)> {
    let coeffs = LatticeCoefficients::build(inst, step, grid_n)?;
    let mut best = (0usize, 0usize);
    let mut best_value = coeffs.value(0, 0);
    for i in 0..=grid_n as i128 {
        for j in 0..=grid_n as i128 {
            let v = coeffs.value(i, j);
            if v < best_value {
                best_value = v;
                best = (i as usize, j as usize);
            }
        }
    }
    Some(best)
}

fn lattice_min_rationals(
    inst: &TwoPointInstance,
    step: &Rational,
    grid_n: usize,
) -> (usize, usize) {
    let mut best = (0usize, 0usize);
    let zero: Rational = Scalar::zero();
    let mut best_value = phi(inst, &zero, &zero);
    for i in 0..=grid_n {
        let a = step.clone() * Rational::from_int(i as i64);
        for j in 0..=grid_n {
            let b = step.clone() * Rational::from_int(j as i64);
            let v = phi(inst, &a, &b);
            if v < best_value {
                best_value = v;
                best = (i, j);
            }
        }
    }
    best
}

/// Exhaustive minimum of `Phi` over the `(grid_n+1)^2` lattice on the box,
/// augmented with the mean line `p a + q b = lambda` sampled at every
/// lattice column and row. The lattice always contains the small-beta
/// argmin (the box corner) and the augmentation always contains the
/// large-beta argmin, so the result matches the closed form exactly.
pub fn minimize_phi_bruteforce(
    inst: &TwoPointInstance,
    grid_n: usize,
) -> Result<PhiMinimum, SharpnessError> {
    if grid_n < 2 {
        return Err(SharpnessError::GridTooCoarse { grid_n });
    }
    let radius = inst.box_radius();
    let zero: Rational = Scalar::zero();
    if radius == zero {
        return Ok(PhiMinimum { value: phi(inst, &zero, &zero), argmin: (zero.clone(), zero) });
    }
    let step = radius.clone() / Rational::from_int(grid_n as i64);

    let (bi, bj) = lattice_min_integers(inst, &step, grid_n)
        .unwrap_or_else(|| lattice_min_rationals(inst, &step, grid_n));
    let mut argmin = (
        step.clone() * Rational::from_int(bi as i64),
        step.clone() * Rational::from_int(bj as i64),
    );
    let mut best = phi(inst, &argmin.0, &argmin.1);

    // Mean-line augmentation: for each lattice a, the exact b with
    // p a + q b = lambda, and symmetrically for each lattice b.
    let p = inst.p.clone();
    let q = inst.q();
    let lambda = inst.lambda.clone();
    for i in 0..=grid_n {
        let a = step.clone() * Rational::from_int(i as i64);
        let b = (lambda.clone() - p.clone() * a.clone()) / q.clone();
        if b >= zero && b <= radius {
            let v = phi(inst, &a, &b);
            if v < best {
                best = v;
                argmin = (a.clone(), b);
            }
        }
        let b_lattice = a;
        let a_on_line = (lambda.clone() - q.clone() * b_lattice.clone()) / p.clone();
        if a_on_line >= zero && a_on_line <= radius {
            let v = phi(inst, &a_on_line, &b_lattice);
            if v < best {
                best = v;
                argmin = (a_on_line, b_lattice);
            }
        }
    }
    Ok(PhiMinimum { value: best, argmin })
}

/// A candidate decomposition of the two-point `f`, by values on `(E, Ec)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointDecomposition {
    pub g: (Rational, Rational),
    pub h: (Rational, Rational),
    pub k: (Rational, Rational),
}

/// The `g = 0` decomposition whose `h`-variation attains the `Phi` minimum.
pub fn minimizing_witness(inst: &TwoPointInstance) -> TwoPointDecomposition {
    let (f_e, f_ec) = inst.f_values();
    let argmin = minimize_phi_analytic(inst).argmin;
    let zero: Rational = Scalar::zero();
    TwoPointDecomposition {
        g: (zero.clone(), zero),
        h: (f_e - argmin.0.clone(), f_ec - argmin.1.clone()),
        k: argmin,
    }
}

/// Outcome of the sharpness dichotomy on one candidate decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum Dichotomy {
    /// `g != 0`: its conditional expectations are nonzero with probability 1.
    FullLocalization { localization_prob: Rational },
    /// `g = 0`: the variation of `h` is bounded below by the `Phi` minimum.
    VariationBounded { variation: Rational, bound: Rational },
}

#[derive(Debug, Clone)]
pub struct DichotomyReport {
    pub verdict: Dichotomy,
    pub certification: Certification<Rational>,
}

/// Computes `|| sum_n |dh_n| ||_1` of a two-point terminal function through
/// the generic filtration machinery (the route independent of `Phi`).
fn two_point_variation(
    filt: &Filtration<Rational>,
    values: (Rational, Rational),
) -> Rational {
    let h = TerminalFunction::new(filt, vec![values.0, values.1]).expect("two leaves");
    let mart = filt.martingale(&h);
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

/// Checks one admissible decomposition against the dichotomy: rejects inputs
/// that do not reconstruct `f` or whose `k` leaves the box, then certifies
/// the branch that applies.
pub fn dichotomy_check(
    inst: &TwoPointInstance,
    candidate: &TwoPointDecomposition,
) -> Result<DichotomyReport, SharpnessError> {
    let (f_e, f_ec) = inst.f_values();
    let zero: Rational = Scalar::zero();
    let sum_e = candidate.g.0.clone() + candidate.h.0.clone() + candidate.k.0.clone();
    let sum_ec = candidate.g.1.clone() + candidate.h.1.clone() + candidate.k.1.clone();
    if sum_e != f_e {
        return Err(SharpnessError::Reconstruction { leaf: "E".into() });
    }
    if sum_ec != f_ec {
        return Err(SharpnessError::Reconstruction { leaf: "Ec".into() });
    }
    let radius = inst.box_radius();
    for value in [&candidate.k.0, &candidate.k.1] {
        if *value < zero || *value > radius {
            return Err(SharpnessError::KOutOfBox {
                on_e: candidate.k.0.to_string(),
                on_ec: candidate.k.1.to_string(),
            });
        }
    }

    let filt = inst.filtration();
    let mut cert = Certification::new();
    if candidate.g.0 != zero || candidate.g.1 != zero {
        let g = TerminalFunction::new(&filt, vec![candidate.g.0.clone(), candidate.g.1.clone()])
            .expect("two leaves");
        let mart = filt.martingale(&g);
        let prob = Rational::sum((0..filt.leaf_count()).filter_map(|leaf| {
            let seen = (1..=filt.horizon())
                .any(|n| mart.at_level_for_leaf(&filt, n, leaf) != zero);
            seen.then(|| filt.leaf_prob(leaf).clone())
        }));
        cert.push(CheckRecord::identity(
            "sharpness.dichotomy.prob",
            "g != 0 forces P(sup_n |E_n[g]| > 0) = 1",
            prob.clone(),
            Scalar::one(),
        ));
        return Ok(DichotomyReport {
            verdict: Dichotomy::FullLocalization { localization_prob: prob },
            certification: cert,
        });
    }

    let variation = two_point_variation(&filt, candidate.h.clone());
    cert.push(CheckRecord::identity(
        "sharpness.variation_is_phi",
        "variation(f - k) = Phi(k_E, k_Ec)",
        variation.clone(),
        phi(inst, &candidate.k.0, &candidate.k.1),
    ));
    let bound = minimize_phi_analytic(inst).value;
    cert.push(CheckRecord::lower_bound(
        "sharpness.dichotomy.variation",
        "g = 0 forces variation(h) >= min Phi over the box",
        variation.clone(),
        bound.clone(),
    ));
    Ok(DichotomyReport {
        verdict: Dichotomy::VariationBounded { variation, bound },
        certification: cert,
    })
}

/// Runs the actual decomposition machinery on a two-point instance and
/// returns it for cross-checks against the closed forms.
pub fn decompose_two_point(
    inst: &TwoPointInstance,
    theta: &Rational,
) -> DecompositionResult<Rational> {
    let filt = inst.filtration();
    let f = inst.terminal_f(&filt);
    decompose_positive(&filt, &f, &inst.lambda, theta).expect("two-point input is admissible")
}

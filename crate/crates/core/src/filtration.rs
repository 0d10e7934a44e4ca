//! Finite atomic filtrations and the measure-theoretic primitives on them.
//!
//! A filtration here is a rooted tree of atoms over levels `1..=M`. Level `n`
//! is a partition of the probability space, level `n+1` refines it, and the
//! level-`M` atoms ("leaves") generate the terminal sigma-field. Level `0` is
//! virtual: the trivial sigma-field with conditional expectation identically
//! zero, so every martingale starts at `f_0 = 0`.
//!
//! Random variables come in two shapes: a [`TerminalFunction`] assigns one
//! value per leaf, an [`AdaptedProcess`] one value per atom per level.
//! Conditional expectations are plain atom averages, so in exact mode every
//! identity below (tower property, optional stopping, reconstruction) holds
//! literally, not approximately.

use crate::scalar::Scalar;
use std::collections::BTreeMap;
use thiserror::Error;

/// Index of an atom inside a [`Filtration`]'s flat atom table.
pub type AtomIdx = usize;

/// One node of the filtration tree.
#[derive(Debug, Clone)]
pub struct Atom<S> {
    pub id: String,
    /// Level in `1..=M`.
    pub level: usize,
    pub prob: S,
    pub parent: Option<AtomIdx>,
    pub children: Vec<AtomIdx>,
}

/// Construction-time description of an atom.
#[derive(Debug, Clone)]
pub struct AtomSpec<S> {
    pub id: String,
    /// Required on levels `>= 2`, forbidden on level 1.
    pub parent: Option<String>,
    pub prob: S,
}

impl<S> AtomSpec<S> {
    pub fn root(id: impl Into<String>, prob: S) -> Self {
        AtomSpec { id: id.into(), parent: None, prob }
    }

    pub fn child(id: impl Into<String>, parent: impl Into<String>, prob: S) -> Self {
        AtomSpec { id: id.into(), parent: Some(parent.into()), prob }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FiltrationError {
    #[error("filtration needs at least one level")]
    Empty,
    #[error("level {level} has no atoms")]
    EmptyLevel { level: usize },
    #[error("duplicate atom id `{id}`")]
    DuplicateAtom { id: String },
    #[error("atom `{id}` at level 1 must not name a parent")]
    RootWithParent { id: String },
    #[error("atom `{id}` at level {level} is missing a parent id")]
    MissingParent { id: String, level: usize },
    #[error("atom `{id}` at level {level} names `{parent}`, which is not an atom at level {}", level - 1)]
    UnknownParent { id: String, level: usize, parent: String },
    #[error("atom `{id}` has nonpositive probability {prob}")]
    NonpositiveProbability { id: String, prob: String },
    #[error("probabilities at level {level} sum to {sum}, expected 1")]
    LevelSumMismatch { level: usize, sum: String },
    #[error("children of `{parent}` sum to {sum}, expected the parent mass {expected}")]
    ChildrenPartitionMismatch { parent: String, sum: String, expected: String },
}

/// A finite atomic filtration: levels `1..=M` of nested partitions.
#[derive(Debug, Clone)]
pub struct Filtration<S> {
    atoms: Vec<Atom<S>>,
    levels: Vec<Vec<AtomIdx>>,
    /// Per leaf: its ancestor chain, `chain[n-1]` = the level-`n` atom.
    leaf_chains: Vec<Vec<AtomIdx>>,
    index_by_id: BTreeMap<String, AtomIdx>,
}

impl<S: Scalar> Filtration<S> {
    /// Builds and validates a filtration from per-level atom specs.
    ///
    /// `levels[0]` is level 1. Checks: ids unique, probabilities positive,
    /// each level sums to 1, parents exist on the previous level, and the
    /// children of every internal atom partition it exactly (under the
    /// arithmetic mode's identity comparison).
    pub fn new(level_specs: Vec<Vec<AtomSpec<S>>>) -> Result<Self, FiltrationError> {
        if level_specs.is_empty() {
            return Err(FiltrationError::Empty);
        }
        let mut atoms: Vec<Atom<S>> = Vec::new();
        let mut levels: Vec<Vec<AtomIdx>> = Vec::new();
        let mut index_by_id: BTreeMap<String, AtomIdx> = BTreeMap::new();
        for (level_zero_based, specs) in level_specs.into_iter().enumerate() {
            let level = level_zero_based + 1;
            if specs.is_empty() {
                return Err(FiltrationError::EmptyLevel { level });
            }
            let mut level_atoms = Vec::with_capacity(specs.len());
            for spec in specs {
                if index_by_id.contains_key(&spec.id) {
                    return Err(FiltrationError::DuplicateAtom { id: spec.id });
                }
                if spec.prob <= S::zero() {
                    return Err(FiltrationError::NonpositiveProbability {
                        id: spec.id,
                        prob: spec.prob.to_string(),
                    });
                }
                let parent = match (&spec.parent, level) {
                    (Some(_), 1) => return Err(FiltrationError::RootWithParent { id: spec.id }),
                    (None, 1) => None,
                    (None, _) => {
                        return Err(FiltrationError::MissingParent { id: spec.id, level })
                    }
                    (Some(pid), _) => {
                        let pidx = *index_by_id.get(pid).ok_or_else(|| {
                            FiltrationError::UnknownParent {
                                id: spec.id.clone(),
                                level,
                                parent: pid.clone(),
                            }
                        })?;
                        if atoms[pidx].level != level - 1 {
                            return Err(FiltrationError::UnknownParent {
                                id: spec.id.clone(),
                                level,
                                parent: pid.clone(),
                            });
                        }
                        Some(pidx)
                    }
                };
                let idx = atoms.len();
                index_by_id.insert(spec.id.clone(), idx);
                if let Some(pidx) = parent {
                    atoms[pidx].children.push(idx);
                }
                atoms.push(Atom {
                    id: spec.id,
                    level,
                    prob: spec.prob,
                    parent,
                    children: Vec::new(),
                });
                level_atoms.push(idx);
            }
            let sum = S::sum(level_atoms.iter().map(|&i| atoms[i].prob.clone()));
            if !sum.check_eq(&S::one()) {
                return Err(FiltrationError::LevelSumMismatch { level, sum: sum.to_string() });
            }
            levels.push(level_atoms);
        }
        let horizon = levels.len();
        for atom in &atoms {
            if atom.level < horizon {
                let sum = S::sum(atom.children.iter().map(|&c| atoms[c].prob.clone()));
                if !sum.check_eq(&atom.prob) {
                    return Err(FiltrationError::ChildrenPartitionMismatch {
                        parent: atom.id.clone(),
                        sum: sum.to_string(),
                        expected: atom.prob.to_string(),
                    });
                }
            }
        }
        let mut leaf_chains = Vec::with_capacity(levels[horizon - 1].len());
        for &leaf in &levels[horizon - 1] {
            let mut chain = vec![0; horizon];
            let mut cursor = leaf;
            for n in (1..=horizon).rev() {
                chain[n - 1] = cursor;
                if let Some(p) = atoms[cursor].parent {
                    cursor = p;
                }
            }
            leaf_chains.push(chain);
        }
        Ok(Filtration { atoms, levels, leaf_chains, index_by_id })
    }

    /// The horizon `M`; leaves live at this level.
    pub fn horizon(&self) -> usize {
        self.levels.len()
    }

    pub fn atom(&self, idx: AtomIdx) -> &Atom<S> {
        &self.atoms[idx]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_by_id(&self, id: &str) -> Option<AtomIdx> {
        self.index_by_id.get(id).copied()
    }

    /// Atom indices at `level` in `1..=M`.
    pub fn level(&self, level: usize) -> &[AtomIdx] {
        &self.levels[level - 1]
    }

    pub fn leaves(&self) -> &[AtomIdx] {
        &self.levels[self.horizon() - 1]
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// For leaf number `leaf` (position within the leaf level), the ancestor
    /// chain: entry `n-1` is the level-`n` atom containing it.
    pub fn leaf_chain(&self, leaf: usize) -> &[AtomIdx] {
        &self.leaf_chains[leaf]
    }

    pub fn leaf_prob(&self, leaf: usize) -> &S {
        &self.atoms[self.leaves()[leaf]].prob
    }

    /// Leaf numbers of all leaves under `atom`.
    pub fn leaves_under(&self, atom: AtomIdx) -> Vec<usize> {
        let level = self.atoms[atom].level;
        (0..self.leaf_count())
            .filter(|&leaf| self.leaf_chains[leaf][level - 1] == atom)
            .collect()
    }

    /// Martingale of `f`: the conditional expectation on every atom, computed
    /// bottom-up as exact subtree averages.
    pub fn martingale(&self, f: &TerminalFunction<S>) -> AdaptedProcess<S> {
        assert_eq!(f.len(), self.leaf_count(), "terminal function shape mismatch");
        let horizon = self.horizon();
        let mut weighted = vec![S::zero(); self.atoms.len()];
        for (leaf, &idx) in self.leaves().iter().enumerate() {
            weighted[idx] = f.value(leaf).clone() * self.atoms[idx].prob.clone();
        }
        for level in (1..horizon).rev() {
            for &idx in &self.levels[level - 1] {
                weighted[idx] = S::sum(
                    self.atoms[idx].children.iter().map(|&c| weighted[c].clone()),
                );
            }
        }
        let values = weighted
            .into_iter()
            .enumerate()
            .map(|(idx, w)| w / self.atoms[idx].prob.clone())
            .collect();
        AdaptedProcess { values }
    }

    /// Conditional expectation `E_n[f]` as a value per level-`n` atom.
    /// `n = 0` returns the single virtual-root value `0`.
    pub fn conditional_expectation(
        &self,
        f: &TerminalFunction<S>,
        n: usize,
    ) -> Result<Vec<S>, LevelOutOfRange> {
        if n > self.horizon() {
            return Err(LevelOutOfRange { level: n, horizon: self.horizon() });
        }
        if n == 0 {
            return Ok(vec![S::zero()]);
        }
        let mart = self.martingale(f);
        Ok(self.level(n).iter().map(|&idx| mart.value(idx).clone()).collect())
    }

    /// Martingale differences `df_n = f_n - f_{n-1}` as a value per atom
    /// (with `f_0 = 0`, so the level-1 difference is `f_1` itself).
    pub fn martingale_differences(&self, f: &TerminalFunction<S>) -> AdaptedProcess<S> {
        let mart = self.martingale(f);
        let values = self
            .atoms
            .iter()
            .enumerate()
            .map(|(idx, atom)| match atom.parent {
                Some(p) => mart.value(idx).clone() - mart.value(p).clone(),
                None => mart.value(idx).clone(),
            })
            .collect();
        AdaptedProcess { values }
    }

    /// `f_tau` for a stopping time: on `{tau = n}` the level-`n` martingale
    /// value, on `{tau = NEVER}` the terminal value. Rejects non-measurable
    /// stopping times; use a pathwise evaluation for raw level indices.
    pub fn evaluate_stopped(
        &self,
        f: &TerminalFunction<S>,
        tau: &StoppingTime,
    ) -> Result<TerminalFunction<S>, StoppingTimeError> {
        tau.validate_measurable(self)?;
        Ok(self.evaluate_stopped_pathwise(f, tau))
    }

    /// Pathwise `f_{tau}`: no measurability requirement on `tau`. Level `0`
    /// reads the virtual root, i.e. `0`.
    pub fn evaluate_stopped_pathwise(
        &self,
        f: &TerminalFunction<S>,
        tau: &StoppingTime,
    ) -> TerminalFunction<S> {
        let mart = self.martingale(f);
        let values = (0..self.leaf_count())
            .map(|leaf| match tau.level(leaf) {
                StopLevel::At(0) => S::zero(),
                StopLevel::At(n) => mart.value(self.leaf_chains[leaf][n - 1]).clone(),
                StopLevel::Never => f.value(leaf).clone(),
            })
            .collect();
        TerminalFunction { values }
    }

    /// Checks `P(C) >= alpha * P(parent)` across all parent/child pairs and
    /// reports the exact regularity constant `min P(C) / P(parent)` (1 when
    /// the horizon is 1 and no such pair exists).
    pub fn check_alpha_regular(&self, alpha: &S) -> RegularityCheck<S> {
        let mut constant = S::one();
        let mut worst = None;
        for atom in &self.atoms {
            if let Some(p) = atom.parent {
                let ratio = atom.prob.clone() / self.atoms[p].prob.clone();
                if ratio < constant {
                    constant = ratio;
                    worst = Some((self.atoms[p].id.clone(), atom.id.clone()));
                }
            }
        }
        let regular = alpha.check_le(&constant);
        RegularityCheck { regular, constant, worst_pair: worst }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("level {level} exceeds the horizon {horizon}")]
pub struct LevelOutOfRange {
    pub level: usize,
    pub horizon: usize,
}

/// Result of an alpha-regularity check.
#[derive(Debug, Clone)]
pub struct RegularityCheck<S> {
    pub regular: bool,
    /// Exact `min P(child) / P(parent)` over the tree.
    pub constant: S,
    /// `(parent id, child id)` attaining the minimum ratio.
    pub worst_pair: Option<(String, String)>,
}

/// A terminal (level-`M` measurable) random variable: one value per leaf,
/// in leaf-level order.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalFunction<S> {
    values: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {expected} leaf values, got {got}")]
pub struct FunctionShapeError {
    pub expected: usize,
    pub got: usize,
}

impl<S: Scalar> TerminalFunction<S> {
    pub fn new(filt: &Filtration<S>, values: Vec<S>) -> Result<Self, FunctionShapeError> {
        if values.len() != filt.leaf_count() {
            return Err(FunctionShapeError { expected: filt.leaf_count(), got: values.len() });
        }
        Ok(TerminalFunction { values })
    }

    pub fn zero(filt: &Filtration<S>) -> Self {
        TerminalFunction { values: vec![S::zero(); filt.leaf_count()] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, leaf: usize) -> &S {
        &self.values[leaf]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn map(&self, op: impl Fn(&S) -> S) -> Self {
        TerminalFunction { values: self.values.iter().map(op).collect() }
    }

    pub fn zip(&self, other: &Self, op: impl Fn(&S, &S) -> S) -> Self {
        assert_eq!(self.len(), other.len(), "terminal function shape mismatch");
        TerminalFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| op(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v.clone())
    }

    /// Leafwise `max(f, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map(|v| if *v > S::zero() { v.clone() } else { S::zero() })
    }

    /// Leafwise `max(-f, 0)`.
    pub fn negative_part(&self) -> Self {
        self.map(|v| if *v < S::zero() { -v.clone() } else { S::zero() })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= S::zero())
    }

    pub fn expectation(&self, filt: &Filtration<S>) -> S {
        S::sum(
            self.values
                .iter()
                .enumerate()
                .map(|(leaf, v)| v.clone() * filt.leaf_prob(leaf).clone()),
        )
    }

    pub fn l1_norm(&self, filt: &Filtration<S>) -> S {
        S::sum(
            self.values
                .iter()
                .enumerate()
                .map(|(leaf, v)| v.abs() * filt.leaf_prob(leaf).clone()),
        )
    }

    pub fn l2_norm_sq(&self, filt: &Filtration<S>) -> S {
        S::sum(
            self.values
                .iter()
                .enumerate()
                .map(|(leaf, v)| v.clone() * v.clone() * filt.leaf_prob(leaf).clone()),
        )
    }

    pub fn sup_norm(&self) -> S {
        self.values
            .iter()
            .map(Scalar::abs)
            .fold(S::zero(), S::max_with)
    }

    pub fn max_value(&self) -> Option<S> {
        self.values.iter().cloned().reduce(S::max_with)
    }

    pub fn min_value(&self) -> Option<S> {
        self.values.iter().cloned().reduce(S::min_with)
    }

    /// `P({f != 0})`.
    pub fn support_prob(&self, filt: &Filtration<S>) -> S {
        S::sum(self.values.iter().enumerate().filter_map(|(leaf, v)| {
            if v.is_zero() {
                None
            } else {
                Some(filt.leaf_prob(leaf).clone())
            }
        }))
    }

    /// `P({|f| > lambda})`.
    pub fn tail_prob(&self, filt: &Filtration<S>, lambda: &S) -> S {
        S::sum(self.values.iter().enumerate().filter_map(|(leaf, v)| {
            if v.abs() > *lambda {
                Some(filt.leaf_prob(leaf).clone())
            } else {
                None
            }
        }))
    }
}

/// One value per atom per level; the virtual level-0 value is identically 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess<S> {
    values: Vec<S>,
}

impl<S: Scalar> AdaptedProcess<S> {
    pub fn from_atom_values(filt: &Filtration<S>, values: Vec<S>) -> Self {
        assert_eq!(values.len(), filt.atom_count(), "adapted process shape mismatch");
        AdaptedProcess { values }
    }

    pub fn value(&self, atom: AtomIdx) -> &S {
        &self.values[atom]
    }

    /// The level-0 value, i.e. 0.
    pub fn root_value(&self) -> S {
        S::zero()
    }

    /// Value of the process at level `n` on the path of `leaf`; `n = 0`
    /// reads the virtual root.
    pub fn at_level_for_leaf(&self, filt: &Filtration<S>, n: usize, leaf: usize) -> S {
        if n == 0 {
            S::zero()
        } else {
            self.values[filt.leaf_chain(leaf)[n - 1]].clone()
        }
    }
}

/// Value of a stopping time on one leaf path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopLevel {
    /// Stop at this level. `0` refers to the virtual root (`f_0 = 0`) and is
    /// only produced by internal constructions such as `r - 1`.
    At(usize),
    /// Never stop; stopped evaluation reads the terminal value.
    Never,
}

impl StopLevel {
    pub fn min_with(self, other: StopLevel) -> StopLevel {
        match (self, other) {
            (StopLevel::Never, o) => o,
            (s, StopLevel::Never) => s,
            (StopLevel::At(a), StopLevel::At(b)) => StopLevel::At(a.min(b)),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, StopLevel::At(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoppingTimeError {
    #[error("expected {expected} leaf entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("stop level {level} on leaf `{leaf}` is outside 1..={horizon}")]
    LevelOutOfRange { leaf: String, level: usize, horizon: usize },
    #[error("{{tau = {level}}} is not a union of level-{level} atoms: atom `{atom}` is split")]
    NotMeasurable { level: usize, atom: String },
}

/// A per-leaf stopping level. Measurability (`{tau = n}` is a union of
/// level-`n` atoms) is validated by [`StoppingTime::new`]; internal index
/// processes that stop pathwise skip that check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingTime {
    levels: Vec<StopLevel>,
}

impl StoppingTime {
    /// Validated constructor: entries in `1..=M`, measurable.
    pub fn new<S: Scalar>(
        filt: &Filtration<S>,
        levels: Vec<StopLevel>,
    ) -> Result<Self, StoppingTimeError> {
        if levels.len() != filt.leaf_count() {
            return Err(StoppingTimeError::ShapeMismatch {
                expected: filt.leaf_count(),
                got: levels.len(),
            });
        }
        for (leaf, level) in levels.iter().enumerate() {
            if let StopLevel::At(n) = level {
                if *n == 0 || *n > filt.horizon() {
                    return Err(StoppingTimeError::LevelOutOfRange {
                        leaf: filt.atom(filt.leaves()[leaf]).id.clone(),
                        level: *n,
                        horizon: filt.horizon(),
                    });
                }
            }
        }
        let tau = StoppingTime { levels };
        tau.validate_measurable(filt)?;
        Ok(tau)
    }

    /// Unvalidated constructor for pathwise index processes (allows level 0
    /// and non-measurable assignments).
    pub fn pathwise(levels: Vec<StopLevel>) -> Self {
        StoppingTime { levels }
    }

    pub fn level(&self, leaf: usize) -> StopLevel {
        self.levels[leaf]
    }

    pub fn levels(&self) -> &[StopLevel] {
        &self.levels
    }

    pub fn min_with(&self, other: &StoppingTime) -> StoppingTime {
        assert_eq!(self.levels.len(), other.levels.len());
        StoppingTime {
            levels: self
                .levels
                .iter()
                .zip(&other.levels)
                .map(|(a, b)| a.min_with(*b))
                .collect(),
        }
    }

    /// `P({tau finite})`.
    pub fn finite_prob<S: Scalar>(&self, filt: &Filtration<S>) -> S {
        S::sum(self.levels.iter().enumerate().filter_map(|(leaf, l)| {
            if l.is_finite() {
                Some(filt.leaf_prob(leaf).clone())
            } else {
                None
            }
        }))
    }

    /// Checks that `{tau = n}` is a union of level-`n` atoms for every
    /// finite level `n >= 1`.
    pub fn validate_measurable<S: Scalar>(
        &self,
        filt: &Filtration<S>,
    ) -> Result<(), StoppingTimeError> {
        if self.levels.len() != filt.leaf_count() {
            return Err(StoppingTimeError::ShapeMismatch {
                expected: filt.leaf_count(),
                got: self.levels.len(),
            });
        }
        for (leaf, level) in self.levels.iter().enumerate() {
            if let StopLevel::At(n) = level {
                if *n == 0 {
                    continue;
                }
                let atom = filt.leaf_chain(leaf)[n - 1];
                for other in filt.leaves_under(atom) {
                    if self.levels[other] != StopLevel::At(*n) {
                        return Err(StoppingTimeError::NotMeasurable {
                            level: *n,
                            atom: filt.atom(atom).id.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RawFunctionError {
    #[error("expected {expected} leaf entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("leaf `{leaf}` has no mass pieces")]
    EmptyLeaf { leaf: String },
    #[error("nonpositive piece mass {mass} on leaf `{leaf}`")]
    NonpositiveMass { leaf: String, mass: String },
    #[error("piece masses on leaf `{leaf}` sum to {sum}, expected the leaf mass {expected}")]
    MassMismatch { leaf: String, sum: String, expected: String },
}

/// A function given on a partition strictly finer than the leaf level: per
/// leaf, a list of `(mass, value)` pieces. This models inputs that violate
/// the terminal-measurability hypothesis of the decomposition, so bound
/// certification on such data must flag instead of certify.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTerminalFunction<S> {
    pieces: Vec<Vec<(S, S)>>,
}

impl<S: Scalar> RawTerminalFunction<S> {
    pub fn new(
        filt: &Filtration<S>,
        pieces: Vec<Vec<(S, S)>>,
    ) -> Result<Self, RawFunctionError> {
        if pieces.len() != filt.leaf_count() {
            return Err(RawFunctionError::ShapeMismatch {
                expected: filt.leaf_count(),
                got: pieces.len(),
            });
        }
        for (leaf, leaf_pieces) in pieces.iter().enumerate() {
            let id = || filt.atom(filt.leaves()[leaf]).id.clone();
            if leaf_pieces.is_empty() {
                return Err(RawFunctionError::EmptyLeaf { leaf: id() });
            }
            for (mass, _) in leaf_pieces {
                if *mass <= S::zero() {
                    return Err(RawFunctionError::NonpositiveMass {
                        leaf: id(),
                        mass: mass.to_string(),
                    });
                }
            }
            let sum = S::sum(leaf_pieces.iter().map(|(m, _)| m.clone()));
            if !sum.check_eq(filt.leaf_prob(leaf)) {
                return Err(RawFunctionError::MassMismatch {
                    leaf: id(),
                    sum: sum.to_string(),
                    expected: filt.leaf_prob(leaf).to_string(),
                });
            }
        }
        Ok(RawTerminalFunction { pieces })
    }

    pub fn pieces(&self, leaf: usize) -> &[(S, S)] {
        &self.pieces[leaf]
    }

    /// Leaf on which the values are not constant, if any.
    pub fn non_measurable_leaf(&self) -> Option<usize> {
        self.pieces.iter().position(|leaf_pieces| {
            leaf_pieces
                .iter()
                .any(|(_, v)| !v.check_eq(&leaf_pieces[0].1))
        })
    }

    /// Collapses to a [`TerminalFunction`] when values are constant per leaf.
    pub fn as_measurable(&self) -> Option<TerminalFunction<S>> {
        if self.non_measurable_leaf().is_some() {
            return None;
        }
        Some(TerminalFunction {
            values: self.pieces.iter().map(|p| p[0].1.clone()).collect(),
        })
    }

    /// The level-`M` projection: per-leaf average of the pieces.
    pub fn project(&self, filt: &Filtration<S>) -> TerminalFunction<S> {
        TerminalFunction {
            values: self
                .pieces
                .iter()
                .enumerate()
                .map(|(leaf, pieces)| {
                    S::sum(pieces.iter().map(|(m, v)| m.clone() * v.clone()))
                        / filt.leaf_prob(leaf).clone()
                })
                .collect(),
        }
    }

    pub fn l1_norm(&self) -> S {
        S::sum(
            self.pieces
                .iter()
                .flatten()
                .map(|(m, v)| m.clone() * v.abs()),
        )
    }

    pub fn sup_norm(&self) -> S {
        self.pieces
            .iter()
            .flatten()
            .map(|(_, v)| v.abs())
            .fold(S::zero(), S::max_with)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(num: i64, den: i64) -> Rational {
        Rational::ratio(num, den)
    }

    /// Two-level tree: root splits into E (mass p) and Ec.
    fn two_point(p: Rational) -> Filtration<Rational> {
        Filtration::new(vec![
            vec![AtomSpec::root("root", q(1, 1))],
            vec![
                AtomSpec::child("E", "root", p.clone()),
                AtomSpec::child("Ec", "root", q(1, 1) - p),
            ],
        ])
        .unwrap()
    }

    /// Depth-3 tree with uneven splits, for tower/stopping tests.
    fn depth_three() -> Filtration<Rational> {
        Filtration::new(vec![
            vec![
                AtomSpec::root("a", q(1, 3)),
                AtomSpec::root("b", q(2, 3)),
            ],
            vec![
                AtomSpec::child("aa", "a", q(1, 12)),
                AtomSpec::child("ab", "a", q(1, 4)),
                AtomSpec::child("ba", "b", q(1, 2)),
                AtomSpec::child("bb", "b", q(1, 6)),
            ],
            vec![
                AtomSpec::child("aaa", "aa", q(1, 12)),
                AtomSpec::child("aba", "ab", q(1, 8)),
                AtomSpec::child("abb", "ab", q(1, 8)),
                AtomSpec::child("baa", "ba", q(1, 4)),
                AtomSpec::child("bab", "ba", q(1, 4)),
                AtomSpec::child("bba", "bb", q(1, 6)),
            ],
        ])
        .unwrap()
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = Filtration::new(vec![vec![
            AtomSpec::root("x", q(1, 2)),
            AtomSpec::root("x", q(1, 2)),
        ]])
        .unwrap_err();
        assert_eq!(err, FiltrationError::DuplicateAtom { id: "x".into() });
    }

    #[test]
    fn rejects_level_sum_mismatch() {
        let err = Filtration::new(vec![vec![AtomSpec::root("x", q(1, 2))]]).unwrap_err();
        assert!(matches!(err, FiltrationError::LevelSumMismatch { level: 1, .. }));
    }

    #[test]
    fn rejects_nonpositive_probability() {
        let err = Filtration::new(vec![vec![
            AtomSpec::root("x", q(0, 1)),
            AtomSpec::root("y", q(1, 1)),
        ]])
        .unwrap_err();
        assert!(matches!(err, FiltrationError::NonpositiveProbability { .. }));
    }

    #[test]
    fn rejects_children_not_partitioning_parent() {
        let err = Filtration::new(vec![
            vec![AtomSpec::root("r", q(1, 1))],
            vec![
                AtomSpec::child("a", "r", q(1, 2)),
                AtomSpec::child("b", "r", q(1, 4)),
                AtomSpec::child("c", "r", q(1, 4)),
            ],
            vec![
                AtomSpec::child("aa", "a", q(1, 2)),
                AtomSpec::child("ba", "b", q(1, 4)),
                // c has no children: its mass is not covered at level 3.
                AtomSpec::child("ca", "b", q(1, 4)),
            ],
        ])
        .unwrap_err();
        assert!(matches!(err, FiltrationError::ChildrenPartitionMismatch { .. }));
    }

    #[test]
    fn rejects_unknown_and_missing_parents() {
        let err = Filtration::new(vec![
            vec![AtomSpec::root("r", q(1, 1))],
            vec![AtomSpec::child("a", "nope", q(1, 1))],
        ])
        .unwrap_err();
        assert!(matches!(err, FiltrationError::UnknownParent { .. }));

        let err = Filtration::new(vec![
            vec![AtomSpec::root("r", q(1, 1))],
            vec![AtomSpec::root("a", q(1, 1))],
        ])
        .unwrap_err();
        assert!(matches!(err, FiltrationError::MissingParent { .. }));
    }

    #[test]
    fn conditional_expectation_is_subtree_average() {
        let filt = two_point(q(1, 4));
        let f = TerminalFunction::new(&filt, vec![q(4, 1), q(0, 1)]).unwrap();
        let level1 = filt.conditional_expectation(&f, 1).unwrap();
        assert_eq!(level1, vec![q(1, 1)]);
        let level0 = filt.conditional_expectation(&f, 0).unwrap();
        assert_eq!(level0, vec![q(0, 1)]);
        assert_eq!(filt.conditional_expectation(&f, 2).unwrap(), vec![q(4, 1), q(0, 1)]);
        assert!(filt.conditional_expectation(&f, 3).is_err());
    }

    #[test]
    fn tower_property_holds_exactly() {
        let filt = depth_three();
        let f = TerminalFunction::new(
            &filt,
            vec![q(5, 1), q(-3, 2), q(7, 3), q(0, 1), q(11, 4), q(-2, 1)],
        )
        .unwrap();
        let mart = filt.martingale(&f);
        // E_m[E_n f] = E_m f for m <= n: check one level at a time.
        for n in (2..=3).rev() {
            for &atom in filt.level(n - 1) {
                let averaged = Rational::sum(filt.atom(atom).children.iter().map(|&c| {
                    mart.value(c).clone() * filt.atom(c).prob.clone()
                })) / filt.atom(atom).prob.clone();
                assert_eq!(&averaged, mart.value(atom));
            }
        }
        // And E[f_1] = E[f].
        let top = Rational::sum(
            filt.level(1)
                .iter()
                .map(|&a| mart.value(a).clone() * filt.atom(a).prob.clone()),
        );
        assert_eq!(top, f.expectation(&filt));
    }

    #[test]
    fn differences_telescope_to_terminal_value() {
        let filt = depth_three();
        let f = TerminalFunction::new(
            &filt,
            vec![q(1, 1), q(2, 1), q(-1, 3), q(4, 5), q(0, 1), q(9, 7)],
        )
        .unwrap();
        let diffs = filt.martingale_differences(&f);
        for leaf in 0..filt.leaf_count() {
            let total = Rational::sum(
                (1..=filt.horizon()).map(|n| diffs.at_level_for_leaf(&filt, n, leaf)),
            );
            assert_eq!(&total, f.value(leaf));
        }
    }

    #[test]
    fn optional_stopping_on_fixed_examples() {
        let filt = depth_three();
        let f = TerminalFunction::new(
            &filt,
            vec![q(1, 1), q(2, 1), q(-1, 3), q(4, 5), q(0, 1), q(9, 7)],
        )
        .unwrap();
        // tau = 2 on subtree of `a`, never on `b`'s subtree.
        let tau = StoppingTime::new(
            &filt,
            vec![
                StopLevel::At(2),
                StopLevel::At(2),
                StopLevel::At(2),
                StopLevel::Never,
                StopLevel::Never,
                StopLevel::Never,
            ],
        )
        .unwrap();
        let stopped = filt.evaluate_stopped(&f, &tau).unwrap();
        assert_eq!(stopped.expectation(&filt), f.expectation(&filt));
    }

    #[test]
    fn non_measurable_stopping_time_is_rejected() {
        let filt = two_point(q(1, 2));
        // {tau = 1} = {E} is not a union of level-1 atoms (level 1 = root).
        let err =
            StoppingTime::new(&filt, vec![StopLevel::At(1), StopLevel::Never]).unwrap_err();
        assert!(matches!(err, StoppingTimeError::NotMeasurable { level: 1, .. }));
    }

    #[test]
    fn stopping_time_level_zero_reads_zero() {
        let filt = two_point(q(1, 4));
        let f = TerminalFunction::new(&filt, vec![q(4, 1), q(0, 1)]).unwrap();
        let tau = StoppingTime::pathwise(vec![StopLevel::At(0), StopLevel::Never]);
        let stopped = filt.evaluate_stopped_pathwise(&f, &tau);
        assert_eq!(stopped.values(), &[q(0, 1), q(0, 1)]);
    }

    #[test]
    fn alpha_regularity_reports_exact_constant() {
        let filt = depth_three();
        let check = filt.check_alpha_regular(&q(1, 4));
        // Smallest child/parent ratio: ba -> bab? ratios: aa/a = 1/4,
        // ab/a = 3/4, ba/b = 3/4, bb/b = 1/4, aaa/aa = 1, aba/ab = 1/2,
        // baa/ba = 1/2, bba/bb = 1.
        assert_eq!(check.constant, q(1, 4));
        assert!(check.regular);
        assert!(!filt.check_alpha_regular(&q(1, 3)).regular);
    }

    #[test]
    fn horizon_one_is_regular_with_constant_one() {
        let filt = Filtration::new(vec![vec![
            AtomSpec::root("E", q(1, 4)),
            AtomSpec::root("Ec", q(3, 4)),
        ]])
        .unwrap();
        let check = filt.check_alpha_regular(&q(1, 1));
        assert!(check.regular);
        assert_eq!(check.constant, q(1, 1));
        assert!(check.worst_pair.is_none());
    }

    #[test]
    fn raw_function_detects_non_measurability() {
        let filt = Filtration::new(vec![vec![AtomSpec::root("omega", q(1, 1))]]).unwrap();
        let raw = RawTerminalFunction::new(
            &filt,
            vec![vec![(q(1, 100), q(100, 1)), (q(99, 100), q(0, 1))]],
        )
        .unwrap();
        assert_eq!(raw.non_measurable_leaf(), Some(0));
        assert!(raw.as_measurable().is_none());
        assert_eq!(raw.project(&filt).values(), &[q(1, 1)]);
        assert_eq!(raw.l1_norm(), q(1, 1));
        assert_eq!(raw.sup_norm(), q(100, 1));

        let flat = RawTerminalFunction::new(&filt, vec![vec![(q(1, 1), q(5, 1))]]).unwrap();
        assert!(flat.non_measurable_leaf().is_none());
        assert_eq!(flat.as_measurable().unwrap().values(), &[q(5, 1)]);
    }

    #[test]
    fn raw_function_mass_must_match_leaf() {
        let filt = Filtration::new(vec![vec![AtomSpec::root("omega", q(1, 1))]]).unwrap();
        let err = RawTerminalFunction::new(&filt, vec![vec![(q(1, 2), q(1, 1))]]).unwrap_err();
        assert!(matches!(err, RawFunctionError::MassMismatch { .. }));
    }

    #[test]
    fn float_mode_validates_with_tolerance() {
        let filt = Filtration::<f64>::new(vec![
            vec![AtomSpec::root("r", 1.0)],
            vec![
                AtomSpec::child("a", "r", 0.1 + 0.2), // 0.30000000000000004
                AtomSpec::child("b", "r", 0.7),
            ],
        ]);
        assert!(filt.is_ok());
    }
}

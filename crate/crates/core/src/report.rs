//! Certification records.
//!
//! Every verified inequality or identity produces one [`CheckRecord`]:
//! which check ran, the bound it claims, the exactly computed value, and the
//! margin. Records render as one tab-separated line each, so a rational-mode
//! run of the same input is byte-identical across machines.

use crate::scalar::Scalar;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A hypothesis violation that the pipeline detected and reports on
    /// purpose (e.g. non-measurable input data). Not counted as a failure.
    Flag,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckStatus::Pass => write!(f, "PASS"),
            CheckStatus::Fail => write!(f, "FAIL"),
            CheckStatus::Flag => write!(f, "FLAG"),
        }
    }
}

/// Outcome of a single certified check.
///
/// `margin` is the slack in the favorable direction: nonnegative margins
/// pass for bounds, and identities pass exactly when the margin is zero
/// (up to the float-mode tolerance).
#[derive(Debug, Clone)]
pub struct CheckRecord<S> {
    pub id: String,
    /// The inequality or identity being checked, in plain ASCII.
    pub statement: String,
    pub claimed: S,
    pub computed: S,
    pub margin: S,
    pub status: CheckStatus,
}

impl<S: Scalar> CheckRecord<S> {
    /// Passes iff `computed <= claimed`.
    pub fn upper_bound(
        id: impl Into<String>,
        statement: impl Into<String>,
        computed: S,
        claimed: S,
    ) -> Self {
        let margin = claimed.clone() - computed.clone();
        let status = if computed.check_le(&claimed) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckRecord { id: id.into(), statement: statement.into(), claimed, computed, margin, status }
    }

    /// Passes iff `computed >= claimed`.
    pub fn lower_bound(
        id: impl Into<String>,
        statement: impl Into<String>,
        computed: S,
        claimed: S,
    ) -> Self {
        let margin = computed.clone() - claimed.clone();
        let status = if claimed.check_le(&computed) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckRecord { id: id.into(), statement: statement.into(), claimed, computed, margin, status }
    }

    /// Passes iff `computed < claimed` (strictly, in exact mode).
    pub fn strict_upper_bound(
        id: impl Into<String>,
        statement: impl Into<String>,
        computed: S,
        claimed: S,
    ) -> Self {
        let margin = claimed.clone() - computed.clone();
        let status = if computed.check_lt(&claimed) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckRecord { id: id.into(), statement: statement.into(), claimed, computed, margin, status }
    }

    /// Passes iff `computed > claimed` (strictly, in exact mode).
    pub fn strict_lower_bound(
        id: impl Into<String>,
        statement: impl Into<String>,
        computed: S,
        claimed: S,
    ) -> Self {
        let margin = computed.clone() - claimed.clone();
        let status = if claimed.check_lt(&computed) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckRecord { id: id.into(), statement: statement.into(), claimed, computed, margin, status }
    }

    /// Passes iff `computed = claimed` (exactly in rational mode).
    pub fn identity(
        id: impl Into<String>,
        statement: impl Into<String>,
        computed: S,
        claimed: S,
    ) -> Self {
        let margin = claimed.clone() - computed.clone();
        let status = if computed.check_eq(&claimed) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckRecord { id: id.into(), statement: statement.into(), claimed, computed, margin, status }
    }

    /// A violation the pipeline expected to see and reports without failing.
    pub fn expected_violation(
        id: impl Into<String>,
        statement: impl Into<String>,
        computed: S,
        claimed: S,
    ) -> Self {
        let margin = claimed.clone() - computed.clone();
        CheckRecord {
            id: id.into(),
            statement: statement.into(),
            claimed,
            computed,
            margin,
            status: CheckStatus::Flag,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }

    /// `id <tab> statement <tab> claimed <tab> computed <tab> margin <tab> status`
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.id, self.statement, self.claimed, self.computed, self.margin, self.status
        )
    }
}

/// An ordered batch of check records with pass/fail aggregation.
#[derive(Debug, Clone)]
pub struct Certification<S> {
    records: Vec<CheckRecord<S>>,
}

impl<S: Scalar> Certification<S> {
    pub fn new() -> Self {
        Certification { records: Vec::new() }
    }

    pub fn push(&mut self, record: CheckRecord<S>) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: Certification<S>) {
        self.records.extend(other.records);
    }

    pub fn records(&self) -> &[CheckRecord<S>] {
        &self.records
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(CheckRecord::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord<S>> {
        self.records.iter().filter(|r| r.status == CheckStatus::Fail)
    }

    pub fn flags(&self) -> impl Iterator<Item = &CheckRecord<S>> {
        self.records.iter().filter(|r| r.status == CheckStatus::Flag)
    }

    pub fn find(&self, id: &str) -> Option<&CheckRecord<S>> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Smallest margin over pass/fail records (flags excluded).
    pub fn worst_margin(&self) -> Option<S> {
        self.records
            .iter()
            .filter(|r| r.status != CheckStatus::Flag)
            .map(|r| r.margin.clone())
            .reduce(S::min_with)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl<S: Scalar> Default for Certification<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> fmt::Display for Certification<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for record in &self.records {
            writeln!(f, "{}", record.to_line())?;
        }
        Ok(())
    }
}

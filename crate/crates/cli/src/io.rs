//! Text format for filtration instances.
//!
//! A file lists the horizon, then each level's atoms, then one value per
//! leaf:
//!
//! ```text
//! horizon 2
//! level 1
//! atom root - 1
//! level 2
//! atom E root 1/4
//! atom Ec root 3/4
//! values
//! E 4
//! Ec 0
//! ```
//!
//! Probabilities and values accept `num/den` rationals or plain decimals.
//! Blank lines and `#` comments are skipped. A `rawvalues` section may
//! replace `values`; its lines read `<leaf-id> <mass> <value>` and may name
//! a leaf several times, describing a function that need not be constant on
//! that leaf. Such instances are only accepted by the hypothesis-violation
//! flagging path.

use gundy_stein::filtration::{RawFunctionError, RawTerminalFunction};
use gundy_stein::scalar::ParseScalarError;
use gundy_stein::{AtomSpec, Filtration, Scalar, TerminalFunction};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("line {line}: expected `horizon <M>` before anything else")]
    MissingHorizon { line: usize },
    #[error("line {line}: unreadable horizon `{text}`")]
    BadHorizon { line: usize, text: String },
    #[error("line {line}: expected `level {expected}`, found `{found}`")]
    LevelOutOfOrder {
        line: usize,
        expected: usize,
        found: String,
    },
    #[error("line {line}: atom lines read `atom <id> <parent|-> <prob>`")]
    MalformedAtom { line: usize },
    #[error("line {line}: unreadable number `{text}`: {source}")]
    BadNumber {
        line: usize,
        text: String,
        source: ParseScalarError,
    },
    #[error("line {line}: value lines read `<leaf-id> <value>`")]
    MalformedValue { line: usize },
    #[error("line {line}: rawvalues lines read `<leaf-id> <mass> <value>`")]
    MalformedRawValue { line: usize },
    #[error("line {line}: `{id}` is not a leaf of this filtration")]
    UnknownLeaf { line: usize, id: String },
    #[error("line {line}: leaf `{id}` already has a value")]
    DuplicateValue { line: usize, id: String },
    #[error("line {line}: unexpected directive `{text}`")]
    UnexpectedDirective { line: usize, text: String },
    #[error("the file ends without a `values` or `rawvalues` section")]
    MissingValues,
    #[error("leaf `{id}` has no value")]
    MissingLeafValue { id: String },
    #[error("horizon {horizon} declared but {got} level sections found")]
    LevelCountMismatch { horizon: usize, got: usize },
    #[error(transparent)]
    Filtration(#[from] gundy_stein::filtration::FiltrationError),
    #[error(transparent)]
    Raw(#[from] RawFunctionError),
}

/// A parsed instance: the tree plus either a genuine terminal function or
/// leaf-splitting raw data for the hypothesis-violation path.
#[derive(Debug)]
pub struct Instance<S> {
    pub filtration: Filtration<S>,
    pub function: FunctionData<S>,
}

#[derive(Debug)]
pub enum FunctionData<S> {
    Terminal(TerminalFunction<S>),
    Raw(RawTerminalFunction<S>),
}

impl<S: Scalar> Instance<S> {
    /// The terminal function, when the file used a plain `values` section.
    pub fn terminal(&self) -> Option<&TerminalFunction<S>> {
        match &self.function {
            FunctionData::Terminal(f) => Some(f),
            FunctionData::Raw(_) => None,
        }
    }
}

fn parse_scalar<S: Scalar>(text: &str, line: usize) -> Result<S, LoadError> {
    S::parse(text).map_err(|source| LoadError::BadNumber {
        line,
        text: text.to_string(),
        source,
    })
}

/// Parse the instance text format.
pub fn parse_instance<S: Scalar>(text: &str) -> Result<Instance<S>, LoadError> {
    // (line number, tokens) for every non-blank, non-comment line.
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| (n, l.split_whitespace().collect::<Vec<_>>()));

    let (first_line, first) = rows.next().ok_or(LoadError::MissingHorizon { line: 1 })?;
    if first[0] != "horizon" {
        return Err(LoadError::MissingHorizon { line: first_line });
    }
    let horizon: usize = first
        .get(1)
        .and_then(|t| t.parse().ok())
        .filter(|m| *m > 0)
        .ok_or_else(|| LoadError::BadHorizon {
            line: first_line,
            text: first[1..].join(" "),
        })?;

    let mut levels: Vec<Vec<AtomSpec<S>>> = Vec::new();
    let mut section = None; // Some(true) = values, Some(false) = rawvalues
    let mut value_rows: Vec<(usize, Vec<String>)> = Vec::new();

    for (line, tokens) in rows {
        match (tokens[0], section) {
            ("level", None) => {
                let expected = levels.len() + 1;
                let ok = tokens.len() == 2 && tokens[1].parse() == Ok(expected);
                if !ok || expected > horizon {
                    return Err(LoadError::LevelOutOfOrder {
                        line,
                        expected,
                        found: tokens.join(" "),
                    });
                }
                levels.push(Vec::new());
            }
            ("atom", None) => {
                let [_, id, parent, prob] = tokens[..] else {
                    return Err(LoadError::MalformedAtom { line });
                };
                let current = levels
                    .last_mut()
                    .ok_or_else(|| LoadError::LevelOutOfOrder {
                        line,
                        expected: 1,
                        found: tokens.join(" "),
                    })?;
                let prob = parse_scalar(prob, line)?;
                current.push(match parent {
                    "-" => AtomSpec::root(id, prob),
                    named => AtomSpec::child(id, named, prob),
                });
            }
            ("values", None) => section = Some(true),
            ("rawvalues", None) => section = Some(false),
            (_, Some(_)) => {
                value_rows.push((line, tokens.iter().map(|t| t.to_string()).collect()))
            }
            (other, None) => {
                return Err(LoadError::UnexpectedDirective {
                    line,
                    text: other.to_string(),
                })
            }
        }
    }

    if levels.len() != horizon {
        return Err(LoadError::LevelCountMismatch {
            horizon,
            got: levels.len(),
        });
    }
    let plain = section.ok_or(LoadError::MissingValues)?;
    let filtration = Filtration::new(levels)?;

    let leaf_slot: HashMap<&str, usize> = filtration
        .leaves()
        .iter()
        .enumerate()
        .map(|(slot, &idx)| (filtration.atom(idx).id.as_str(), slot))
        .collect();
    let slot_for = |line: usize, id: &str| {
        leaf_slot
            .get(id)
            .copied()
            .ok_or_else(|| LoadError::UnknownLeaf {
                line,
                id: id.to_string(),
            })
    };

    let function = if plain {
        let mut values: Vec<Option<S>> = vec![None; filtration.leaf_count()];
        for (line, tokens) in &value_rows {
            let [id, value] = &tokens[..] else {
                return Err(LoadError::MalformedValue { line: *line });
            };
            let slot = slot_for(*line, id)?;
            if values[slot].is_some() {
                return Err(LoadError::DuplicateValue {
                    line: *line,
                    id: id.clone(),
                });
            }
            values[slot] = Some(parse_scalar(value, *line)?);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(slot, v)| {
                v.ok_or_else(|| LoadError::MissingLeafValue {
                    id: filtration.atom(filtration.leaves()[slot]).id.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        // Shape is correct by construction, so the Err arm is unreachable.
        FunctionData::Terminal(TerminalFunction::new(&filtration, values).expect("leaf count"))
    } else {
        let mut pieces: Vec<Vec<(S, S)>> = vec![Vec::new(); filtration.leaf_count()];
        for (line, tokens) in &value_rows {
            let [id, mass, value] = &tokens[..] else {
                return Err(LoadError::MalformedRawValue { line: *line });
            };
            let slot = slot_for(*line, id)?;
            let mass = parse_scalar(mass, *line)?;
            let value = parse_scalar(value, *line)?;
            pieces[slot].push((mass, value));
        }
        FunctionData::Raw(RawTerminalFunction::new(&filtration, pieces)?)
    };

    Ok(Instance {
        filtration,
        function,
    })
}

/// Render an instance in the same text format `parse_instance` reads.
pub fn render_instance<S: Scalar>(filt: &Filtration<S>, f: &TerminalFunction<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "horizon {}", filt.horizon());
    for level in 1..=filt.horizon() {
        let _ = writeln!(out, "level {level}");
        for &idx in filt.level(level) {
            let atom = filt.atom(idx);
            let parent = match atom.parent {
                Some(p) => filt.atom(p).id.as_str(),
                None => "-",
            };
            let _ = writeln!(out, "atom {} {} {}", atom.id, parent, atom.prob);
        }
    }
    let _ = writeln!(out, "values");
    for (slot, &idx) in filt.leaves().iter().enumerate() {
        let _ = writeln!(out, "{} {}", filt.atom(idx).id, f.value(slot));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use gundy_stein::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    const TWO_POINT: &str = "\
# two-point instance
horizon 2
level 1
atom root - 1
level 2
atom E root 1/4
atom Ec root 3/4

values
E 4
Ec 0
";

    #[test]
    fn parses_the_two_point_file() {
        let inst: Instance<Rational> = parse_instance(TWO_POINT).unwrap();
        assert_eq!(inst.filtration.horizon(), 2);
        assert_eq!(inst.filtration.leaf_count(), 2);
        let f = inst.terminal().unwrap();
        assert_eq!(f.expectation(&inst.filtration), q(1, 1));
    }

    #[test]
    fn round_trips_through_render() {
        let inst: Instance<Rational> = parse_instance(TWO_POINT).unwrap();
        let text = render_instance(&inst.filtration, inst.terminal().unwrap());
        let again: Instance<Rational> = parse_instance(&text).unwrap();
        assert_eq!(render_instance(&again.filtration, again.terminal().unwrap()), text);
    }

    #[test]
    fn reads_decimal_probabilities_in_float_mode() {
        let text = TWO_POINT.replace("1/4", "0.25").replace("3/4", "0.75");
        let inst: Instance<f64> = parse_instance(&text).unwrap();
        assert_eq!(*inst.filtration.leaf_prob(0), 0.25);
    }

    #[test]
    fn anchors_errors_to_lines() {
        let missing = "level 1\natom root - 1\n";
        match parse_instance::<Rational>(missing) {
            Err(LoadError::MissingHorizon { line: 1 }) => {}
            other => panic!("{other:?}"),
        }

        let bad_prob = TWO_POINT.replace("1/4", "1/0");
        match parse_instance::<Rational>(&bad_prob) {
            Err(LoadError::BadNumber { line: 6, .. }) => {}
            other => panic!("{other:?}"),
        }

        let unknown = TWO_POINT.replace("E 4", "F 4");
        match parse_instance::<Rational>(&unknown) {
            Err(LoadError::UnknownLeaf { line: 10, ref id }) if id == "F" => {}
            other => panic!("{other:?}"),
        }

        let twice = TWO_POINT.replace("Ec 0", "E 0");
        match parse_instance::<Rational>(&twice) {
            Err(LoadError::DuplicateValue { line: 11, ref id }) if id == "E" => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn surfaces_filtration_validation() {
        // A lone root makes the level-sum check subsume the partition
        // check, so a short level reports as a level-sum mismatch.
        let short = TWO_POINT.replace("atom Ec root 3/4\n", "atom Ec root 7/10\n");
        match parse_instance::<Rational>(&short) {
            Err(LoadError::Filtration(
                gundy_stein::filtration::FiltrationError::LevelSumMismatch { level: 2, .. },
            )) => {}
            other => panic!("{other:?}"),
        }

        // With two branches the per-parent partition check has room to
        // fire on its own: level 3 sums to 1 but C's children carry 3/8.
        let lopsided = "\
horizon 3
level 1
atom root - 1
level 2
atom C root 1/2
atom D root 1/2
level 3
atom C1 C 1/4
atom C2 C 1/8
atom D1 D 5/8
values
C1 1
C2 0
D1 2
";
        match parse_instance::<Rational>(lopsided) {
            Err(LoadError::Filtration(
                gundy_stein::filtration::FiltrationError::ChildrenPartitionMismatch {
                    ref parent,
                    ..
                },
            )) if parent == "C" => {}
            other => panic!("{other:?}"),
        }

        let zero = TWO_POINT
            .replace("atom E root 1/4", "atom E root 0")
            .replace("atom Ec root 3/4", "atom Ec root 1");
        match parse_instance::<Rational>(&zero) {
            Err(LoadError::Filtration(
                gundy_stein::filtration::FiltrationError::NonpositiveProbability { .. },
            )) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_value_names_the_leaf() {
        let text = TWO_POINT.replace("Ec 0\n", "");
        match parse_instance::<Rational>(&text) {
            Err(LoadError::MissingLeafValue { ref id }) if id == "Ec" => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rawvalues_build_a_non_measurable_function() {
        let text = TWO_POINT.replace(
            "values\nE 4\nEc 0\n",
            "rawvalues\nE 1/8 100\nE 1/8 -92\nEc 3/4 0\n",
        );
        let inst: Instance<Rational> = parse_instance(&text).unwrap();
        match inst.function {
            FunctionData::Raw(ref raw) => {
                assert_eq!(raw.non_measurable_leaf(), Some(0));
                assert_eq!(raw.pieces(0).len(), 2);
            }
            FunctionData::Terminal(_) => panic!("expected raw data"),
        }
    }

    #[test]
    fn rejects_stray_directives_and_level_gaps() {
        let stray = TWO_POINT.replace("values\n", "valuesx\n");
        assert!(matches!(
            parse_instance::<Rational>(&stray),
            Err(LoadError::UnexpectedDirective { line: 9, .. })
        ));

        let gap = TWO_POINT.replace("level 2", "level 3");
        assert!(matches!(
            parse_instance::<Rational>(&gap),
            Err(LoadError::LevelOutOfOrder { line: 5, expected: 2, .. })
        ));
    }
}

//! Action units and strategy programs: types, grammar, parser, serializer.
//!
//! Grammar (whitespace and newlines between tokens are free):
//!
//! ```text
//! set      := strategy+
//! strategy := ["New"] "Strategy" [INT] ":" INT ("step"|"steps") ":" step+
//! step     := "(" INT ")" "(" NAME "," JOINT "," DELTA ")"
//! NAME     := [A-Za-z][A-Za-z0-9 _-]*   (trimmed)
//! JOINT    := "revolute" | "prismatic"  (case-insensitive)
//! DELTA    := signed decimal, or a bare "+" / "-"
//! ```
//!
//! A bare-sign delta receives the default magnitude: 90 for revolute
//! (degrees), 0.5 for prismatic (fraction of the part bounding-box extent).

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_REVOLUTE_DELTA: f64 = 90.0;
pub const DEFAULT_PRISMATIC_DELTA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

impl JointKind {
    pub fn name(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
        }
    }
}

/// The atomic manipulation command: (part name, joint type, state change).
///
/// `delta` is in degrees for revolute joints and is a dimensionless
/// fraction of the part bounding-box extent for prismatic joints.
/// Positive means distancing the part from the object body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionUnit {
    #[serde(rename = "part")]
    pub part_name: String,
    pub joint: JointKind,
    pub delta: f64,
}

impl ActionUnit {
    pub fn new(part_name: impl Into<String>, joint: JointKind, delta: f64) -> Self {
        let unit = ActionUnit { part_name: part_name.into(), joint, delta };
        assert!(unit.delta != 0.0, "delta must be nonzero");
        unit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub index: u32,
    pub steps: Vec<ActionUnit>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StrategySet {
    pub strategies: Vec<Strategy>,
}

/// Program expression: a single unit, an unordered union of alternatives,
/// or an ordered list of steps.
#[derive(Debug, Clone, PartialEq)]
pub enum ProgramExpr {
    Unit(ActionUnit),
    Union(Vec<ProgramExpr>),
    List(Vec<ProgramExpr>),
}

#[derive(Debug, Error, PartialEq)]
pub enum ProgramError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown joint kind {token:?} at line {line}, column {column}")]
    UnknownJoint { line: usize, column: usize, token: String },
    #[error("empty strategy set")]
    EmptySet,
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn line_col(&self) -> (usize, usize) {
        let consumed = &self.text[..self.pos];
        let line = consumed.matches('\n').count() + 1;
        let column = consumed.rfind('\n').map(|i| self.pos - i).unwrap_or(self.pos + 1);
        (line, column)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eof(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    fn error(&self, message: impl Into<String>) -> ProgramError {
        let (line, column) = self.line_col();
        ProgramError::Syntax { line, column, message: message.into() }
    }

    fn expect_char(&mut self, c: char) -> Result<(), ProgramError> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected {c:?}")))
        }
    }

    /// Consumes a keyword (case-sensitive, word boundary).
    fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        if let Some(tail) = rest.strip_prefix(kw) {
            if tail.chars().next().is_none_or(|c| !c.is_alphanumeric()) {
                self.pos += kw.len();
                return true;
            }
        }
        false
    }

    fn parse_uint(&mut self) -> Result<u32, ProgramError> {
        self.skip_ws();
        let digits: String = self.rest().chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(self.error("expected an integer"));
        }
        self.pos += digits.len();
        digits.parse().map_err(|_| self.error("integer out of range"))
    }

    fn try_uint(&mut self) -> Option<u32> {
        self.skip_ws();
        let save = self.pos;
        match self.parse_uint() {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = save;
                None
            }
        }
    }
}

/// Parses strategy text in the interpreter output format.
pub fn parse_strategies(text: &str) -> Result<StrategySet, ProgramError> {
    let mut cur = Cursor::new(text);
    let mut strategies = Vec::new();
    loop {
        if cur.eof() {
            break;
        }
        strategies.push(parse_strategy(&mut cur, strategies.len() as u32 + 1)?);
    }
    if strategies.is_empty() {
        return Err(ProgramError::EmptySet);
    }
    // indices must be strictly increasing from 1
    for (i, s) in strategies.iter().enumerate() {
        if s.index != i as u32 + 1 {
            return Err(ProgramError::Syntax {
                line: 1,
                column: 1,
                message: format!("strategy index {} out of order (expected {})", s.index, i + 1),
            });
        }
    }
    Ok(StrategySet { strategies })
}

fn parse_strategy(cur: &mut Cursor, default_index: u32) -> Result<Strategy, ProgramError> {
    cur.eat_keyword("New");
    if !cur.eat_keyword("Strategy") {
        return Err(cur.error("expected \"Strategy\""));
    }
    // the header index is optional; the blender-style single strategy omits it
    let index = cur.try_uint().unwrap_or(default_index);
    cur.expect_char(':')?;
    let declared_steps = cur.parse_uint()?;
    if !(cur.eat_keyword("steps") || cur.eat_keyword("step")) {
        return Err(cur.error("expected \"step\" or \"steps\""));
    }
    cur.expect_char(':')?;
    let mut steps = Vec::new();
    for expected in 1..=declared_steps {
        cur.expect_char('(')?;
        let n = cur.parse_uint()?;
        if n != expected {
            return Err(cur.error(format!("step number {n} out of order (expected {expected})")));
        }
        cur.expect_char(')')?;
        steps.push(parse_unit(cur)?);
    }
    // a stray extra step means the declared count was wrong
    {
        cur.skip_ws();
        let save = cur.pos;
        if cur.expect_char('(').is_ok() {
            if cur.try_uint().is_some() && cur.expect_char(')').is_ok() {
                cur.pos = save;
                return Err(cur.error(format!(
                    "step count mismatch: header declares {declared_steps} but more steps follow"
                )));
            }
            cur.pos = save;
        }
    }
    if steps.is_empty() {
        return Err(cur.error("strategy must have at least one step"));
    }
    Ok(Strategy { index, steps })
}

fn parse_unit(cur: &mut Cursor) -> Result<ActionUnit, ProgramError> {
    cur.expect_char('(')?;
    cur.skip_ws();
    let name_raw: String = cur
        .rest()
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == ' ' || *c == '_' || *c == '-')
        .collect();
    cur.pos += name_raw.len();
    let name = name_raw.trim().to_string();
    if name.is_empty() || !name.chars().next().unwrap().is_ascii_alphabetic() {
        return Err(cur.error("expected a part name"));
    }
    cur.expect_char(',')?;
    cur.skip_ws();
    let (jline, jcol) = cur.line_col();
    let joint_tok: String = cur.rest().chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    cur.pos += joint_tok.len();
    let joint = match joint_tok.to_ascii_lowercase().as_str() {
        "revolute" => JointKind::Revolute,
        "prismatic" => JointKind::Prismatic,
        _ => {
            return Err(ProgramError::UnknownJoint { line: jline, column: jcol, token: joint_tok })
        }
    };
    cur.expect_char(',')?;
    cur.skip_ws();
    let delta_tok: String = cur
        .rest()
        .chars()
        .take_while(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.'))
        .collect();
    cur.pos += delta_tok.len();
    let delta = parse_delta(&delta_tok, joint).ok_or_else(|| cur.error("expected a delta"))?;
    if delta == 0.0 {
        return Err(cur.error("delta must be nonzero"));
    }
    cur.expect_char(')')?;
    Ok(ActionUnit { part_name: name, joint, delta })
}

fn parse_delta(tok: &str, joint: JointKind) -> Option<f64> {
    let default = match joint {
        JointKind::Revolute => DEFAULT_REVOLUTE_DELTA,
        JointKind::Prismatic => DEFAULT_PRISMATIC_DELTA,
    };
    match tok {
        "+" => Some(default),
        "-" => Some(-default),
        _ => tok.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn format_delta(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{:+}", v as i64)
    } else {
        format!("{v:+}")
    }
}

/// Serializes a strategy set to the canonical interpreter text format.
/// `parse_strategies(serialize_strategies(s)) == s` for valid sets.
pub fn serialize_strategies(set: &StrategySet) -> Result<String, ProgramError> {
    if set.strategies.is_empty() {
        return Err(ProgramError::EmptySet);
    }
    let mut out = String::new();
    for s in &set.strategies {
        let noun = if s.steps.len() == 1 { "step" } else { "steps" };
        out.push_str(&format!("Strategy {}: {} {}:", s.index, s.steps.len(), noun));
        for (i, u) in s.steps.iter().enumerate() {
            out.push_str(&format!(
                " ({}) ({}, {}, {})",
                i + 1,
                u.part_name,
                u.joint.name(),
                format_delta(u.delta)
            ));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Lowers a strategy set to a program expression: one strategy with one
/// unit is a bare `Unit`, a multi-step strategy is a `List`, and multiple
/// strategies form a `Union` of alternatives in preference order.
pub fn to_expr(set: &StrategySet) -> Result<ProgramExpr, ProgramError> {
    if set.strategies.is_empty() {
        return Err(ProgramError::EmptySet);
    }
    let lower = |s: &Strategy| -> ProgramExpr {
        if s.steps.len() == 1 {
            ProgramExpr::Unit(s.steps[0].clone())
        } else {
            ProgramExpr::List(s.steps.iter().cloned().map(ProgramExpr::Unit).collect())
        }
    };
    if set.strategies.len() == 1 {
        Ok(lower(&set.strategies[0]))
    } else {
        Ok(ProgramExpr::Union(set.strategies.iter().map(lower).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_single_unit_strategy() {
        let set = parse_strategies("Strategy 1: 1 step: (1) (Door, revolute, +90)").unwrap();
        assert_eq!(set.strategies.len(), 1);
        assert_eq!(
            set.strategies[0].steps,
            vec![ActionUnit::new("Door", JointKind::Revolute, 90.0)]
        );
    }

    #[test]
    fn parses_two_step_strategy() {
        let set =
            parse_strategies("Strategy 1: 2 steps: (1) (Button, prismatic, -0.5) (2) (Door, revolute, +60)")
                .unwrap();
        assert_eq!(
            set.strategies[0].steps,
            vec![
                ActionUnit::new("Button", JointKind::Prismatic, -0.5),
                ActionUnit::new("Door", JointKind::Revolute, 60.0),
            ]
        );
    }

    #[test]
    fn parses_bare_sign_defaults_and_new_prefix() {
        let set =
            parse_strategies("New Strategy 1: 2 steps: (1) (Button, prismatic, -) (2) (Door, revolute, +)")
                .unwrap();
        assert_eq!(
            set.strategies[0].steps,
            vec![
                ActionUnit::new("Button", JointKind::Prismatic, -0.5),
                ActionUnit::new("Door", JointKind::Revolute, 90.0),
            ]
        );
    }

    #[test]
    fn parses_headerless_index() {
        // the blender manual example omits the strategy index
        let set = parse_strategies("Strategy: 1 step: (1) (Lid, prismatic, -0.5)").unwrap();
        assert_eq!(set.strategies[0].index, 1);
        assert_eq!(
            set.strategies[0].steps,
            vec![ActionUnit::new("Lid", JointKind::Prismatic, -0.5)]
        );
    }

    #[test]
    fn parses_multiple_strategies_across_lines() {
        let text = "Strategy 1: 1 step: (1) (Door, revolute, +90)\n\
                    Strategy 2: 1 step: (1) (Handle, revolute, +90)\n\
                    Strategy 3: 2 steps: (1) (Button, prismatic, -0.5) (2) (Door, revolute, +60)\n\
                    Strategy 4: 2 steps: (1) (Handle, revolute, +30) (2) (Door, revolute, +60)\n";
        let set = parse_strategies(text).unwrap();
        assert_eq!(set.strategies.len(), 4);
        assert_eq!(set.strategies[3].steps[0], ActionUnit::new("Handle", JointKind::Revolute, 30.0));
    }

    #[test]
    fn unknown_joint_is_reported() {
        let err = parse_strategies("Strategy 1: 1 step: (1) (Door, spherical, +90)").unwrap_err();
        assert!(matches!(err, ProgramError::UnknownJoint { ref token, .. } if token == "spherical"));
    }

    #[test]
    fn step_count_mismatch_is_reported() {
        let err = parse_strategies(
            "Strategy 1: 1 step: (1) (Door, revolute, +90) (2) (Door, revolute, +60)",
        )
        .unwrap_err();
        assert!(matches!(err, ProgramError::Syntax { ref message, .. } if message.contains("mismatch")));
    }

    #[test]
    fn syntax_error_carries_location() {
        let err = parse_strategies("Strategy 1: 1 step: (1) Door, revolute, +90)").unwrap_err();
        match err {
            ProgramError::Syntax { line, column, .. } => {
                assert_eq!(line, 1);
                assert!(column > 20);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn serialize_single_unit() {
        let set = StrategySet {
            strategies: vec![Strategy {
                index: 1,
                steps: vec![ActionUnit::new("Door", JointKind::Revolute, 90.0)],
            }],
        };
        assert_eq!(
            serialize_strategies(&set).unwrap().trim_end(),
            "Strategy 1: 1 step: (1) (Door, revolute, +90)"
        );
    }

    #[test]
    fn serialize_empty_set_errors() {
        assert_eq!(serialize_strategies(&StrategySet::default()), Err(ProgramError::EmptySet));
    }

    #[test]
    fn serialize_plural_agreement() {
        let set = StrategySet {
            strategies: vec![Strategy {
                index: 1,
                steps: vec![
                    ActionUnit::new("Button", JointKind::Prismatic, -0.5),
                    ActionUnit::new("Door", JointKind::Revolute, 60.0),
                ],
            }],
        };
        assert!(serialize_strategies(&set).unwrap().contains("2 steps:"));
    }

    #[test]
    fn to_expr_shapes() {
        let one = parse_strategies("Strategy 1: 1 step: (1) (Door, revolute, +90)").unwrap();
        assert!(matches!(to_expr(&one).unwrap(), ProgramExpr::Unit(_)));

        let list = parse_strategies(
            "Strategy 1: 2 steps: (1) (Button, prismatic, -0.5) (2) (Door, revolute, +60)",
        )
        .unwrap();
        match to_expr(&list).unwrap() {
            ProgramExpr::List(children) => assert_eq!(children.len(), 2),
            other => panic!("expected list, got {other:?}"),
        }

        let micro = parse_strategies(
            "Strategy 1: 1 step: (1) (Door, revolute, +90)\n\
             Strategy 2: 1 step: (1) (Handle, revolute, +90)\n\
             Strategy 3: 2 steps: (1) (Button, prismatic, -0.5) (2) (Door, revolute, +60)\n\
             Strategy 4: 2 steps: (1) (Handle, revolute, +30) (2) (Door, revolute, +60)",
        )
        .unwrap();
        match to_expr(&micro).unwrap() {
            ProgramExpr::Union(children) => {
                assert_eq!(children.len(), 4);
                let lists = children.iter().filter(|c| matches!(c, ProgramExpr::List(_))).count();
                assert_eq!(lists, 2);
            }
            other => panic!("expected union, got {other:?}"),
        }
    }

    #[test]
    fn to_expr_empty_errors() {
        assert_eq!(to_expr(&StrategySet::default()), Err(ProgramError::EmptySet));
    }

    #[test]
    fn json_encoding_shape() {
        let set = parse_strategies("Strategy 1: 1 step: (1) (Door, revolute, +90)").unwrap();
        let json = serde_json::to_value(&set).unwrap();
        assert_eq!(json["strategies"][0]["index"], 1);
        assert_eq!(json["strategies"][0]["steps"][0]["part"], "Door");
        assert_eq!(json["strategies"][0]["steps"][0]["joint"], "revolute");
        assert_eq!(json["strategies"][0]["steps"][0]["delta"], 90.0);
    }

    pub(crate) fn arb_strategy_set() -> impl proptest::strategy::Strategy<Value = StrategySet> {
        use proptest::strategy::Strategy as _;
        let name = "[A-Za-z][A-Za-z0-9_-]{0,8}";
        let unit = (name, any::<bool>(), 1i32..360, any::<bool>()).prop_map(
            |(name, revolute, mag, neg)| {
                let joint = if revolute { JointKind::Revolute } else { JointKind::Prismatic };
                let delta = if revolute { mag as f64 } else { mag as f64 / 100.0 };
                ActionUnit::new(name, joint, if neg { -delta } else { delta })
            },
        );
        proptest::collection::vec(proptest::collection::vec(unit, 1..4), 1..4).prop_map(|sv| {
            StrategySet {
                strategies: sv
                    .into_iter()
                    .enumerate()
                    .map(|(i, steps)| super::Strategy { index: i as u32 + 1, steps })
                    .collect(),
            }
        })
    }

    proptest! {
        #[test]
        fn round_trip_identity(set in arb_strategy_set()) {
            let text = serialize_strategies(&set).unwrap();
            let back = parse_strategies(&text).unwrap();
            prop_assert_eq!(set, back);
        }

        #[test]
        fn parser_is_total(text in "\\PC{0,120}") {
            // fuzzed input either parses or raises a located error; never panics
            let _ = parse_strategies(&text);
        }
    }
}

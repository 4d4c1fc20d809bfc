//! Abstract syntax of PA terms.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Name of an atomic event. Compared by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventLabel(Arc<str>);

impl EventLabel {
    pub fn new(name: &str) -> Self {
        EventLabel(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid_name(name: &str) -> bool {
        let mut chars = name.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl fmt::Debug for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for EventLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for EventLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(EventLabel::new(&s))
    }
}

/// Which signature a term is interpreted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Pa1,
    Pa2,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Pa1 => "PA1",
            System::Pa2 => "PA2",
        }
    }

    pub fn ops(self) -> &'static [Op] {
        match self {
            System::Pa1 => &[Op::Plus, Op::Seq, Op::Par],
            System::Pa2 => &[Op::Plus, Op::Seq, Op::Par, Op::LeftMerge, Op::CommMerge],
        }
    }

    pub fn allows(self, op: Op) -> bool {
        self.ops().contains(&op)
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pa1" => Ok(System::Pa1),
            "pa2" => Ok(System::Pa2),
            _ => Err(format!("unknown system `{s}` (expected pa1 or pa2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Plus,
    Seq,
    Par,
    LeftMerge,
    CommMerge,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Plus => "+",
            Op::Seq => ".",
            Op::Par => "||",
            Op::LeftMerge => "|_",
            Op::CommMerge => "|",
        }
    }

    /// Binding strength; larger binds tighter.
    pub(crate) fn level(self) -> u8 {
        match self {
            Op::Plus => 0,
            Op::Par | Op::LeftMerge | Op::CommMerge => 1,
            Op::Seq => 2,
        }
    }

    /// Parallel-like operators: both operands fire in the first step.
    pub fn is_parallel(self) -> bool {
        matches!(self, Op::Par | Op::LeftMerge | Op::CommMerge)
    }
}

/// A closed PA term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Atom(EventLabel),
    Op(Op, Box<Term>, Box<Term>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(EventLabel::new(name))
    }

    pub fn op(op: Op, l: Term, r: Term) -> Term {
        Term::Op(op, Box::new(l), Box::new(r))
    }

    pub fn plus(l: Term, r: Term) -> Term {
        Term::op(Op::Plus, l, r)
    }

    pub fn seq(l: Term, r: Term) -> Term {
        Term::op(Op::Seq, l, r)
    }

    pub fn par(l: Term, r: Term) -> Term {
        Term::op(Op::Par, l, r)
    }

    pub fn left_merge(l: Term, r: Term) -> Term {
        Term::op(Op::LeftMerge, l, r)
    }

    pub fn comm_merge(l: Term, r: Term) -> Term {
        Term::op(Op::CommMerge, l, r)
    }

    /// Node count: atoms are 1, binary nodes 1 + both operands.
    pub fn size(&self) -> usize {
        match self {
            Term::Atom(_) => 1,
            Term::Op(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn atom_count(&self) -> usize {
        match self {
            Term::Atom(_) => 1,
            Term::Op(_, l, r) => l.atom_count() + r.atom_count(),
        }
    }

    /// Smallest system whose signature contains every operator of the term.
    pub fn system(&self) -> System {
        match self {
            Term::Atom(_) => System::Pa1,
            Term::Op(op, l, r) => {
                if matches!(op, Op::LeftMerge | Op::CommMerge) {
                    System::Pa2
                } else {
                    l.system().max(r.system())
                }
            }
        }
    }

    pub fn labels(&self, out: &mut Vec<EventLabel>) {
        match self {
            Term::Atom(l) => out.push(l.clone()),
            Term::Op(_, l, r) => {
                l.labels(out);
                r.labels(out);
            }
        }
    }

    /// Sorts the operands of `+` and `||` bottom-up.
    pub fn commutative_canonical(&self) -> Term {
        match self {
            Term::Atom(_) => self.clone(),
            Term::Op(op, l, r) => {
                let (l, r) = (l.commutative_canonical(), r.commutative_canonical());
                if matches!(op, Op::Plus | Op::Par) && r < l {
                    Term::op(*op, r, l)
                } else {
                    Term::op(*op, l, r)
                }
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parse::format_term(self))
    }
}

/// Serialised as its canonical text.
impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::parse::format_term(self))
    }
}

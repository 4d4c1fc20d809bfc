use std::collections::BTreeSet;
use std::fmt;

use serde_json::{json, Value};

use crate::equiv::{fingerprint_node, TERMINATED_FINGERPRINT};
use crate::sos::Step;

/// Canonical basic term: a set of step-prefixed summands. `Nil` is the
/// empty process (no transitions, not terminated).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NormalForm {
    Nil,
    Sum(BTreeSet<Summand>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Summand {
    pub step: Step,
    pub tail: Tail,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tail {
    Terminal,
    Then(Box<NormalForm>),
}

impl NormalForm {
    pub(crate) fn from_summands(set: BTreeSet<Summand>) -> NormalForm {
        if set.is_empty() {
            NormalForm::Nil
        } else {
            NormalForm::Sum(set)
        }
    }

    pub fn summands(&self) -> impl Iterator<Item = &Summand> {
        let set = match self {
            NormalForm::Nil => None,
            NormalForm::Sum(s) => Some(s),
        };
        set.into_iter().flatten()
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, NormalForm::Nil)
    }

    /// Same encoding as the step fingerprint of an LTS, so a term and its
    /// normal form can be compared directly.
    pub fn fingerprint(&self) -> String {
        fingerprint_node(self.summands().map(|s| {
            let tail = match &s.tail {
                Tail::Terminal => TERMINATED_FINGERPRINT.to_string(),
                Tail::Then(nf) => nf.fingerprint(),
            };
            (s.step.clone(), tail)
        }))
    }

    pub fn to_json(&self) -> Value {
        match self {
            NormalForm::Nil => json!("0"),
            NormalForm::Sum(set) => Value::Array(
                set.iter()
                    .map(|s| {
                        let tail = match &s.tail {
                            Tail::Terminal => json!("terminal"),
                            Tail::Then(nf) => nf.to_json(),
                        };
                        json!({ "step": s.step, "tail": tail })
                    })
                    .collect(),
            ),
        }
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalForm::Nil => f.write_str("0"),
            NormalForm::Sum(set) => {
                for (i, s) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    let labels: Vec<&str> = s.step.labels().iter().map(|l| l.as_str()).collect();
                    write!(f, "{{{}}}", labels.join(","))?;
                    if let Tail::Then(nf) = &s.tail {
                        match **nf {
                            NormalForm::Sum(ref inner) if inner.len() == 1 => write!(f, " . {nf}")?,
                            _ => write!(f, " . ({nf})")?,
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::EventLabel;

    fn step(ls: &[&str]) -> Step {
        Step::new(ls.iter().map(|l| EventLabel::new(l)).collect())
    }

    fn leaf(ls: &[&str]) -> Summand {
        Summand { step: step(ls), tail: Tail::Terminal }
    }

    #[test]
    fn display_and_fingerprint() {
        let inner = NormalForm::from_summands([leaf(&["b"]), leaf(&["d"])].into());
        let nf = NormalForm::from_summands(
            [leaf(&["a", "b"]), Summand { step: step(&["a"]), tail: Tail::Then(Box::new(inner)) }].into(),
        );
        assert_eq!(nf.to_string(), "{a} . ({b} + {d}) + {a,b}");
        assert_eq!(nf.fingerprint(), "(a+b:T,a:(b:T,d:T))");
        assert_eq!(NormalForm::Nil.fingerprint(), "()");
        assert_eq!(NormalForm::from_summands(BTreeSet::new()), NormalForm::Nil);
    }

    #[test]
    fn json_shape() {
        let nf = NormalForm::from_summands(
            [Summand { step: step(&["a"]), tail: Tail::Then(Box::new(NormalForm::Nil)) }].into(),
        );
        assert_eq!(nf.to_json(), json!([{ "step": ["a"], "tail": "0" }]));
    }
}

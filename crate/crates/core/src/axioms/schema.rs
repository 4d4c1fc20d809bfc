use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::config::SemanticsConfig;
use crate::error::{Error, Result};
use crate::syntax::{EventLabel, Op, System, Term};

/// Term variable of a schema; ranges over closed terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    Y,
    Z,
}

/// Event metavariable of a schema; ranges over alphabet labels only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Meta {
    E1,
    E2,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
        })
    }
}

impl fmt::Display for Meta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Meta::E1 => "e1",
            Meta::E2 => "e2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Var(Var),
    Event(Meta),
    /// `γ(e1, e2)`.
    Gamma(Meta, Meta),
    Op(Op, Box<Pattern>, Box<Pattern>),
}

impl Pattern {
    fn level(&self) -> u8 {
        match self {
            Pattern::Op(op, ..) => op.level(),
            _ => 3,
        }
    }

    fn vars(&self, vars: &mut Vec<Var>, metas: &mut Vec<Meta>) {
        match self {
            Pattern::Var(v) => {
                if !vars.contains(v) {
                    vars.push(*v)
                }
            }
            Pattern::Event(m) => {
                if !metas.contains(m) {
                    metas.push(*m)
                }
            }
            Pattern::Gamma(a, b) => {
                for m in [a, b] {
                    if !metas.contains(m) {
                        metas.push(*m)
                    }
                }
            }
            Pattern::Op(_, l, r) => {
                l.vars(vars, metas);
                r.vars(vars, metas);
            }
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => write!(f, "{v}"),
            Pattern::Event(m) => write!(f, "{m}"),
            Pattern::Gamma(a, b) => write!(f, "γ({a},{b})"),
            Pattern::Op(op, l, r) => {
                let lp = l.level() < op.level()
                    || (l.level() == op.level() && !matches!(&**l, Pattern::Op(o, ..) if o == op));
                let rp = r.level() <= op.level();
                let side = |f: &mut fmt::Formatter<'_>, p: &Pattern, paren: bool| {
                    if paren {
                        write!(f, "({p})")
                    } else {
                        write!(f, "{p}")
                    }
                };
                side(f, l, lp)?;
                write!(f, " {} ", op.symbol())?;
                side(f, r, rp)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideCondition {
    /// `e1 ≤ e2` in the configured event order.
    Leq,
    /// `γ(e1, e2)` is defined.
    GammaDefined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomSchema {
    pub name: &'static str,
    pub system: System,
    pub lhs: Pattern,
    pub rhs: Pattern,
    pub side_condition: Option<SideCondition>,
}

impl AxiomSchema {
    /// Term variables, then event metavariables, in order of appearance.
    pub fn variables(&self) -> (Vec<Var>, Vec<Meta>) {
        let (mut vars, mut metas) = (Vec::new(), Vec::new());
        self.lhs.vars(&mut vars, &mut metas);
        self.rhs.vars(&mut vars, &mut metas);
        vars.sort();
        metas.sort();
        (vars, metas)
    }

    /// Whether the schema mentions a parallel-family operator.
    pub fn is_parallel(&self) -> bool {
        fn go(p: &Pattern) -> bool {
            match p {
                Pattern::Op(op, l, r) => op.is_parallel() || go(l) || go(r),
                _ => false,
            }
        }
        go(&self.lhs) || go(&self.rhs)
    }
}

impl fmt::Display for AxiomSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name)?;
        match self.side_condition {
            Some(SideCondition::Leq) => write!(f, "(e1 ≤ e2)  ")?,
            Some(SideCondition::GammaDefined) => write!(f, "(γ(e1,e2) defined)  ")?,
            None => {}
        }
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

fn v(x: Var) -> Pattern {
    Pattern::Var(x)
}

fn e(m: Meta) -> Pattern {
    Pattern::Event(m)
}

fn op(o: Op, l: Pattern, r: Pattern) -> Pattern {
    Pattern::Op(o, Box::new(l), Box::new(r))
}

fn plus(l: Pattern, r: Pattern) -> Pattern {
    op(Op::Plus, l, r)
}

fn seq(l: Pattern, r: Pattern) -> Pattern {
    op(Op::Seq, l, r)
}

fn par(l: Pattern, r: Pattern) -> Pattern {
    op(Op::Par, l, r)
}

fn lm(l: Pattern, r: Pattern) -> Pattern {
    op(Op::LeftMerge, l, r)
}

fn cm(l: Pattern, r: Pattern) -> Pattern {
    op(Op::CommMerge, l, r)
}

fn schema(name: &'static str, system: System, lhs: Pattern, rhs: Pattern, side: Option<SideCondition>) -> AxiomSchema {
    AxiomSchema { name, system, lhs, rhs, side_condition: side }
}

/// The axiom tables, in their published order.
pub fn axiom_schemas(system: System) -> Vec<AxiomSchema> {
    use Meta::{E1, E2};
    use Var::{X, Y, Z};
    let s = system;
    let mut out = vec![
        schema("A1", s, plus(v(X), v(Y)), plus(v(Y), v(X)), None),
        schema("A2", s, plus(plus(v(X), v(Y)), v(Z)), plus(v(X), plus(v(Y), v(Z))), None),
        schema("A3", s, plus(v(X), v(X)), v(X), None),
        schema("A4", s, seq(plus(v(X), v(Y)), v(Z)), plus(seq(v(X), v(Z)), seq(v(Y), v(Z))), None),
        schema("A5", s, seq(seq(v(X), v(Y)), v(Z)), seq(v(X), seq(v(Y), v(Z))), None),
    ];
    match system {
        System::Pa1 => out.extend([
            schema("P1", s, par(v(X), v(Y)), par(v(Y), v(X)), None),
            schema("P2", s, par(par(v(X), v(Y)), v(Z)), par(v(X), par(v(Y), v(Z))), None),
            schema("P3", s, par(e(E1), seq(e(E2), v(Y))), seq(par(e(E1), e(E2)), v(Y)), None),
            schema("P4", s, par(seq(e(E1), v(X)), e(E2)), seq(par(e(E1), e(E2)), v(X)), None),
            schema("P5", s, par(seq(e(E1), v(X)), seq(e(E2), v(Y))), seq(par(e(E1), e(E2)), par(v(X), v(Y))), None),
            schema("P6", s, par(plus(v(X), v(Y)), v(Z)), plus(par(v(X), v(Z)), par(v(Y), v(Z))), None),
            schema("P7", s, par(v(X), plus(v(Y), v(Z))), plus(par(v(X), v(Y)), par(v(X), v(Z))), None),
        ]),
        System::Pa2 => {
            let leq = Some(SideCondition::Leq);
            let gd = Some(SideCondition::GammaDefined);
            let g = || Pattern::Gamma(E1, E2);
            out.extend([
                schema("P1", s, par(v(X), v(Y)), plus(plus(lm(v(X), v(Y)), lm(v(Y), v(X))), cm(v(X), v(Y))), None),
                schema("L2", s, lm(e(E1), seq(e(E2), v(Y))), seq(lm(e(E1), e(E2)), v(Y)), leq),
                schema("L3", s, lm(seq(e(E1), v(X)), e(E2)), seq(lm(e(E1), e(E2)), v(X)), leq),
                schema("L4", s, lm(seq(e(E1), v(X)), seq(e(E2), v(Y))), seq(lm(e(E1), e(E2)), par(v(X), v(Y))), leq),
                schema("L5", s, lm(plus(v(X), v(Y)), v(Z)), plus(lm(v(X), v(Z)), lm(v(Y), v(Z))), None),
                schema("C6", s, cm(e(E1), e(E2)), g(), gd),
                schema("C7", s, cm(e(E1), seq(e(E2), v(Y))), seq(g(), v(Y)), gd),
                schema("C8", s, cm(seq(e(E1), v(X)), e(E2)), seq(g(), v(X)), gd),
                schema("C9", s, cm(seq(e(E1), v(X)), seq(e(E2), v(Y))), seq(g(), par(v(X), v(Y))), gd),
                schema("C10", s, cm(plus(v(X), v(Y)), v(Z)), plus(cm(v(X), v(Z)), cm(v(Y), v(Z))), None),
                schema("C11", s, cm(v(X), plus(v(Y), v(Z))), plus(cm(v(X), v(Y)), cm(v(X), v(Z))), None),
            ]);
        }
    }
    out
}

/// Values for the variables of one schema instance.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Substitution {
    pub vars: BTreeMap<Var, Term>,
    pub events: BTreeMap<Meta, EventLabel>,
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.vars.iter().map(|(v, t)| format!("{v}:={t}")).collect();
        parts.extend(self.events.iter().map(|(m, l)| format!("{m}:={l}")));
        f.write_str(&parts.join(", "))
    }
}

/// Closed instance of a schema, or `None` (SKIP) when the side condition
/// fails under `cfg`.
pub fn instantiate(schema: &AxiomSchema, subst: &Substitution, cfg: &SemanticsConfig) -> Result<Option<(Term, Term)>> {
    let (vars, metas) = schema.variables();
    for x in &vars {
        let t = subst.vars.get(x).ok_or_else(|| Error::Invalid(format!("{}: no value for {x}", schema.name)))?;
        if t.system() > schema.system {
            return Err(Error::OperatorNotInSystem { op: "|_ or |", system: schema.system.name() });
        }
        cfg.check_term(t)?;
    }
    for m in &metas {
        let l = subst.events.get(m).ok_or_else(|| Error::Invalid(format!("{}: no event for {m}", schema.name)))?;
        if !cfg.contains(l) {
            return Err(Error::UnknownLabel(l.to_string()));
        }
    }
    let ev = |m: Meta| &subst.events[&m];
    let holds = match schema.side_condition {
        None => true,
        Some(SideCondition::Leq) => cfg.leq(ev(Meta::E1), ev(Meta::E2)),
        Some(SideCondition::GammaDefined) => cfg.gamma(ev(Meta::E1), ev(Meta::E2)).is_some(),
    };
    if !holds {
        return Ok(None);
    }
    let fill = |p: &Pattern| fill(p, subst, cfg);
    Ok(Some((fill(&schema.lhs)?, fill(&schema.rhs)?)))
}

fn fill(p: &Pattern, s: &Substitution, cfg: &SemanticsConfig) -> Result<Term> {
    Ok(match p {
        Pattern::Var(v) => s.vars[v].clone(),
        Pattern::Event(m) => Term::Atom(s.events[m].clone()),
        Pattern::Gamma(a, b) => {
            let (a, b) = (&s.events[a], &s.events[b]);
            Term::Atom(cfg.gamma(a, b).ok_or_else(|| Error::Invalid(format!("γ({a},{b}) is undefined")))?.clone())
        }
        Pattern::Op(op, l, r) => Term::op(*op, fill(l, s, cfg)?, fill(r, s, cfg)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term_raw;

    fn find(system: System, name: &str) -> AxiomSchema {
        axiom_schemas(system).into_iter().find(|s| s.name == name).unwrap()
    }

    fn events(e1: &str, e2: &str) -> Substitution {
        let mut s = Substitution::default();
        s.events.insert(Meta::E1, EventLabel::new(e1));
        s.events.insert(Meta::E2, EventLabel::new(e2));
        s
    }

    #[test]
    fn tables_are_complete() {
        let names = |s| axiom_schemas(s).iter().map(|a| a.name).collect::<Vec<_>>().join(" ");
        assert_eq!(names(System::Pa1), "A1 A2 A3 A4 A5 P1 P2 P3 P4 P5 P6 P7");
        assert_eq!(names(System::Pa2), "A1 A2 A3 A4 A5 P1 L2 L3 L4 L5 C6 C7 C8 C9 C10 C11");
    }

    #[test]
    fn schemas_print_like_the_tables() {
        assert_eq!(find(System::Pa1, "P5").to_string(), "P5: e1 . x || e2 . y = (e1 || e2) . (x || y)");
        assert_eq!(
            find(System::Pa2, "C9").to_string(),
            "C9: (γ(e1,e2) defined)  e1 . x | e2 . y = γ(e1,e2) . (x || y)"
        );
        assert_eq!(find(System::Pa2, "L5").to_string(), "L5: (x + y) |_ z = x |_ z + y |_ z");
        assert_eq!(find(System::Pa2, "L2").side_condition, Some(SideCondition::Leq));
    }

    #[test]
    fn rhs_variables_occur_on_the_left() {
        for system in [System::Pa1, System::Pa2] {
            for s in axiom_schemas(system) {
                let (mut lv, mut lm) = (Vec::new(), Vec::new());
                s.lhs.vars(&mut lv, &mut lm);
                let (vars, metas) = s.variables();
                assert_eq!((vars.len(), metas.len()), (lv.len(), lm.len()), "{s}");
            }
        }
    }

    #[test]
    fn instantiation_examples() {
        let cfg = SemanticsConfig::cfg0();
        let mut s = Substitution::default();
        s.vars.insert(Var::X, parse_term_raw("a.b", System::Pa1).unwrap());
        let (l, r) = instantiate(&find(System::Pa1, "A3"), &s, &cfg).unwrap().unwrap();
        assert_eq!((l.to_string(), r.to_string()), ("a . b + a . b".into(), "a . b".into()));

        let mut s = events("b", "a");
        s.vars.insert(Var::Y, Term::atom("d"));
        assert_eq!(instantiate(&find(System::Pa2, "L2"), &s, &cfg).unwrap(), None);

        let (l, r) = instantiate(&find(System::Pa2, "C6"), &events("a", "b"), &cfg).unwrap().unwrap();
        assert_eq!((l.to_string(), r.to_string()), ("a | b".into(), "c".into()));
        assert_eq!(instantiate(&find(System::Pa2, "C6"), &events("a", "d"), &cfg).unwrap(), None);
    }

    #[test]
    fn ill_typed_substitution_is_an_error() {
        let mut s = Substitution::default();
        s.vars.insert(Var::X, parse_term_raw("a |_ b", System::Pa2).unwrap());
        assert!(instantiate(&find(System::Pa1, "A3"), &s, &SemanticsConfig::cfg0()).is_err());
        assert!(instantiate(&find(System::Pa1, "A3"), &Substitution::default(), &SemanticsConfig::cfg0()).is_err());
    }
}

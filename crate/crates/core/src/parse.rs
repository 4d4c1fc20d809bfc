//! Concrete syntax for terms.
//!
//! ```text
//! term := sum
//! sum  := par ('+' par)*
//! par  := seq (('||' | '|_' | '|') seq)*     one operator kind per level
//! seq  := atom ('.' atom)*
//! atom := identifier | '(' term ')'
//! ```
//!
//! All binary operators are left-associative.

use crate::config::SemanticsConfig;
use crate::error::{Error, Result};
use crate::syntax::{EventLabel, Op, System, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Op(Op),
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b'+' => {
                out.push((i, Tok::Op(Op::Plus)));
                i += 1;
            }
            b'.' => {
                out.push((i, Tok::Op(Op::Seq)));
                i += 1;
            }
            b'|' => match bytes.get(i + 1) {
                Some(b'|') => {
                    out.push((i, Tok::Op(Op::Par)));
                    i += 2;
                }
                Some(b'_') => {
                    out.push((i, Tok::Op(Op::LeftMerge)));
                    i += 2;
                }
                _ => {
                    out.push((i, Tok::Op(Op::CommMerge)));
                    i += 1;
                }
            },
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax { pos: i, msg: format!("unexpected character `{ch}`") });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    system: System,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn check_op(&self, op: Op) -> Result<()> {
        if self.system.allows(op) {
            Ok(())
        } else {
            Err(Error::OperatorNotInSystem { op: op.symbol(), system: self.system.name() })
        }
    }

    fn sum(&mut self) -> Result<Term> {
        let mut lhs = self.par()?;
        while self.peek() == Some(&Tok::Op(Op::Plus)) {
            self.at += 1;
            let rhs = self.par()?;
            lhs = Term::plus(lhs, rhs);
        }
        Ok(lhs)
    }

    fn par(&mut self) -> Result<Term> {
        let mut lhs = self.seq()?;
        let mut kind: Option<Op> = None;
        while let Some(Tok::Op(op)) = self.peek() {
            let op = *op;
            if !op.is_parallel() {
                break;
            }
            if let Some(k) = kind {
                if k != op {
                    return self.err(format!(
                        "`{}` and `{}` cannot be mixed without parentheses",
                        k.symbol(),
                        op.symbol()
                    ));
                }
            }
            self.check_op(op)?;
            kind = Some(op);
            self.at += 1;
            let rhs = self.seq()?;
            lhs = Term::op(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn seq(&mut self) -> Result<Term> {
        let mut lhs = self.atom()?;
        while self.peek() == Some(&Tok::Op(Op::Seq)) {
            self.at += 1;
            let rhs = self.atom()?;
            lhs = Term::seq(lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Term> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.at += 1;
                Ok(Term::Atom(EventLabel::new(&name)))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let t = self.sum()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.at += 1;
                Ok(t)
            }
            Some(Tok::RParen) => self.err("unexpected `)`"),
            Some(Tok::Op(op)) => self.err(format!("unexpected operator `{}`", op.symbol())),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses without checking labels against an alphabet.
pub fn parse_term_raw(text: &str, system: System) -> Result<Term> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::Syntax { pos: 0, msg: "empty term".into() });
    }
    let mut p = Parser { toks, at: 0, end: text.len(), system };
    let t = p.sum()?;
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(t)
}

pub fn parse_term(text: &str, system: System, config: &SemanticsConfig) -> Result<Term> {
    let t = parse_term_raw(text, system)?;
    config.check_term(&t)?;
    Ok(t)
}

pub fn format_term(t: &Term) -> String {
    let mut s = String::new();
    write_term(t, &mut s);
    s
}

fn level(t: &Term) -> u8 {
    match t {
        Term::Atom(_) => 3,
        Term::Op(op, _, _) => op.level(),
    }
}

fn write_term(t: &Term, out: &mut String) {
    match t {
        Term::Atom(l) => out.push_str(l.as_str()),
        Term::Op(op, l, r) => {
            let lp = match &**l {
                Term::Op(lop, _, _) => lop.level() < op.level() || (lop.level() == op.level() && lop != op),
                Term::Atom(_) => false,
            };
            let rp = level(r) <= op.level();
            write_operand(l, lp, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_operand(r, rp, out);
        }
    }
}

fn write_operand(t: &Term, paren: bool, out: &mut String) {
    if paren {
        out.push('(');
        write_term(t, out);
        out.push(')');
    } else {
        write_term(t, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(s: &str) -> Term {
        parse_term_raw(s, System::Pa1).unwrap()
    }

    #[test]
    fn seq_binds_tighter_than_plus() {
        assert_eq!(p1("a + b.d"), Term::plus(Term::atom("a"), Term::seq(Term::atom("b"), Term::atom("d"))));
    }

    #[test]
    fn parenthesized_parallel() {
        assert_eq!(p1("(a || b) . d"), Term::seq(Term::par(Term::atom("a"), Term::atom("b")), Term::atom("d")));
    }

    #[test]
    fn left_merge_rejected_in_pa1() {
        let err = parse_term_raw("a |_ b", System::Pa1).unwrap_err();
        assert!(matches!(err, Error::OperatorNotInSystem { op: "|_", .. }));
        assert!(parse_term_raw("a |_ b", System::Pa2).is_ok());
        assert!(matches!(parse_term_raw("a | b", System::Pa1), Err(Error::OperatorNotInSystem { .. })));
    }

    #[test]
    fn mixing_parallel_operators_needs_parens() {
        let err = parse_term_raw("a || b |_ d", System::Pa2).unwrap_err();
        assert!(matches!(err, Error::Syntax { pos: 7, .. }));
        assert!(parse_term_raw("(a || b) |_ d", System::Pa2).is_ok());
    }

    #[test]
    fn left_associativity() {
        assert_eq!(p1("a.b.d"), Term::seq(Term::seq(Term::atom("a"), Term::atom("b")), Term::atom("d")));
        assert_eq!(p1("a || b || d"), Term::par(Term::par(Term::atom("a"), Term::atom("b")), Term::atom("d")));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(
            parse_term_raw("(a + b", System::Pa1).unwrap_err(),
            Error::Syntax { pos: 6, msg: "expected `)`".into() }
        );
        assert!(matches!(parse_term_raw("a + )", System::Pa1), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(parse_term_raw("a $ b", System::Pa1), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse_term_raw("", System::Pa1), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(parse_term_raw("a b", System::Pa1), Err(Error::Syntax { .. })));
    }

    #[test]
    fn unknown_label_is_rejected() {
        let cfg = SemanticsConfig::load("alphabet=a,b; order=a<b").unwrap();
        assert_eq!(parse_term("a + z", System::Pa1, &cfg).unwrap_err(), Error::UnknownLabel("z".into()));
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_term(&p1("a + b.d")), "a + b . d");
        assert_eq!(format_term(&p1("(a||b).d")), "(a || b) . d");
        assert_eq!(format_term(&Term::atom("a")), "a");
        assert_eq!(format_term(&p1("a.(b.d)")), "a . (b . d)");
        assert_eq!(format_term(&p1("a + (b + d)")), "a + (b + d)");
        assert_eq!(format_term(&p1("(a + b) + d")), "a + b + d");
        let t = parse_term_raw("(a |_ b) || (a | b)", System::Pa2).unwrap();
        assert_eq!(format_term(&t), "(a |_ b) || (a | b)");
    }
}

use crate::config::{Causality, SemanticsConfig};
use crate::error::{Error, Result};
use crate::syntax::{Op, Term};

use super::Proc;

/// Atom positions are tracked in `u64` masks.
pub const MAX_TRACKED_ATOMS: usize = 64;

/// Relation between two atom positions, read off their lowest common ancestor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomRelation {
    Same,
    /// Sequential composition with the first atom on the left.
    SeqBefore,
    SeqAfter,
    /// Some parallel-like operator.
    Parallel,
    /// Alternative composition; the two atoms never fire in one run.
    Choice,
}

/// A compiled term: positioned process plus the static causality tables used
/// by run tracking.
#[derive(Debug, Clone)]
pub struct Program {
    term: Term,
    proc: Proc,
    n_atoms: usize,
    relation: Vec<AtomRelation>,
    /// `may_precede[p]` holds every atom `q` such that an occurrence of `p`
    /// fired strictly before an occurrence of `q` is one of its causes.
    may_precede: Vec<u64>,
    causality: Causality,
}

impl Program {
    pub fn compile(term: &Term, cfg: &SemanticsConfig) -> Result<Program> {
        let n_atoms = term.atom_count();
        if n_atoms > MAX_TRACKED_ATOMS {
            return Err(Error::budget("tracked atom", MAX_TRACKED_ATOMS));
        }
        let proc = Proc::from_term(term);
        let mut relation = vec![AtomRelation::Same; n_atoms * n_atoms];
        let mut may_precede = vec![0u64; n_atoms];
        fill(&proc, cfg.causality, n_atoms, &mut relation, &mut may_precede);
        Ok(Program { term: term.clone(), proc, n_atoms, relation, may_precede, causality: cfg.causality })
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn proc(&self) -> &Proc {
        &self.proc
    }

    pub fn atom_count(&self) -> usize {
        self.n_atoms
    }

    pub fn causality(&self) -> Causality {
        self.causality
    }

    pub fn relation(&self, p: u32, q: u32) -> AtomRelation {
        self.relation[p as usize * self.n_atoms + q as usize]
    }

    /// Atoms that an occurrence built from `atoms` causes if they fire later.
    pub fn successors_of(&self, atoms: &[u32]) -> u64 {
        atoms.iter().fold(0, |m, &p| m | self.may_precede[p as usize])
    }

    /// Residual process after the atoms in `fired` have occurred, `None` once
    /// it has terminated. Defined for any down-closed set of atoms, including
    /// sets no lockstep run reaches.
    pub fn residual(&self, fired: u64) -> Option<Proc> {
        match residual(&self.proc, fired) {
            Residual::Untouched => Some(self.proc.clone()),
            Residual::Done => None,
            Residual::Live(p) => Some(p),
        }
    }
}

pub(crate) fn atoms_mask(atoms: &[u32]) -> u64 {
    atoms.iter().fold(0, |m, &p| m | 1u64 << p)
}

fn atom_range(p: &Proc) -> (u32, u32) {
    match p {
        Proc::Atom(_, pos) => (*pos, *pos + 1),
        Proc::Op(_, l, r) => (atom_range(l).0, atom_range(r).1),
    }
}

fn range_mask((lo, hi): (u32, u32)) -> u64 {
    let width = hi - lo;
    let ones = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
    ones << lo
}

fn fill(p: &Proc, causality: Causality, n: usize, relation: &mut [AtomRelation], may_precede: &mut [u64]) {
    let Proc::Op(op, l, r) = p else { return };
    fill(l, causality, n, relation, may_precede);
    fill(r, causality, n, relation, may_precede);
    let (lr, rr) = (atom_range(l), atom_range(r));
    let (lm, rm) = (range_mask(lr), range_mask(rr));
    for a in lr.0..lr.1 {
        for b in rr.0..rr.1 {
            let (ab, ba) = match op {
                Op::Plus => (AtomRelation::Choice, AtomRelation::Choice),
                Op::Seq => (AtomRelation::SeqBefore, AtomRelation::SeqAfter),
                _ => (AtomRelation::Parallel, AtomRelation::Parallel),
            };
            relation[a as usize * n + b as usize] = ab;
            relation[b as usize * n + a as usize] = ba;
        }
    }
    match op {
        Op::Plus => {}
        Op::Seq => {
            for a in lr.0..lr.1 {
                may_precede[a as usize] |= rm;
            }
        }
        _ if causality == Causality::Synchronous => {
            for a in lr.0..lr.1 {
                may_precede[a as usize] |= rm;
            }
            for b in rr.0..rr.1 {
                may_precede[b as usize] |= lm;
            }
        }
        _ => {}
    }
}

enum Residual {
    Untouched,
    Done,
    Live(Proc),
}

fn residual(p: &Proc, fired: u64) -> Residual {
    if fired & range_mask(atom_range(p)) == 0 {
        return Residual::Untouched;
    }
    match p {
        Proc::Atom(..) => Residual::Done,
        Proc::Op(Op::Plus, l, r) => match residual(l, fired) {
            Residual::Untouched => residual(r, fired),
            chosen => chosen,
        },
        Proc::Op(Op::Seq, l, r) => match residual(l, fired) {
            Residual::Untouched => Residual::Untouched,
            Residual::Done => match residual(r, fired) {
                Residual::Untouched => Residual::Live((**r).clone()),
                other => other,
            },
            Residual::Live(l2) => Residual::Live(Proc::Op(Op::Seq, Box::new(l2), r.clone())),
        },
        Proc::Op(_, l, r) => {
            let side = |q: &Proc| match residual(q, fired) {
                Residual::Untouched => Some(q.clone()),
                Residual::Done => None,
                Residual::Live(q2) => Some(q2),
            };
            match super::continue_parallel(side(l), side(r)) {
                None => Residual::Done,
                Some(q) => Residual::Live(q),
            }
        }
    }
}

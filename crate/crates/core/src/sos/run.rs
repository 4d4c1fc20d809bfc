use std::sync::Arc;

use crate::config::SemanticsConfig;
use crate::error::{Error, Result};
use crate::syntax::{EventLabel, Term};

use super::program::{atoms_mask, Program};
use super::{moves, Event, Proc, Step};

/// An event instance within one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub id: usize,
    pub label: EventLabel,
    /// Atom positions of the compiled term that produced this occurrence.
    pub atoms: Vec<u32>,
    causes: u64,
}

impl Occurrence {
    /// Ids of every occurrence that causally precedes this one. The set is
    /// transitively closed.
    pub fn causes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |i| self.causes >> i & 1 == 1)
    }

    pub fn cause_mask(&self) -> u64 {
        self.causes
    }
}

/// Position in a run: the residual process together with everything fired
/// so far. Guards of pending atoms are derived from the history on demand.
#[derive(Debug, Clone)]
pub struct RunState {
    program: Arc<Program>,
    proc: Option<Proc>,
    history: Vec<Occurrence>,
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub step: Step,
    pub occurrences: Vec<Occurrence>,
    pub next: RunState,
}

pub fn init_state(t: &Term, cfg: &SemanticsConfig) -> Result<RunState> {
    let program = Program::compile(t, cfg)?;
    Ok(RunState::start(Arc::new(program)))
}

impl RunState {
    pub fn start(program: Arc<Program>) -> RunState {
        let proc = Some(program.proc().clone());
        RunState { program, proc, history: Vec::new() }
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.program
    }

    pub fn is_terminated(&self) -> bool {
        self.proc.is_none()
    }

    pub fn proc(&self) -> Option<&Proc> {
        self.proc.as_ref()
    }

    /// Residual with positions and guards erased; `None` is termination.
    pub fn residual_term(&self) -> Option<Term> {
        self.proc.as_ref().map(Proc::erase)
    }

    pub fn history(&self) -> &[Occurrence] {
        &self.history
    }

    /// Occurrences that would cause an occurrence of atom `pos` fired next.
    pub fn guard(&self, pos: u32) -> Vec<usize> {
        let mask = cause_mask(&self.program, &self.history, 1u64 << pos);
        (0..self.history.len()).filter(|i| mask >> i & 1 == 1).collect()
    }
}

/// Closed cause set, over `history` indices, of a new occurrence made of
/// the atoms in `atoms`.
pub(crate) fn cause_mask(program: &Program, history: &[Occurrence], atoms: u64) -> u64 {
    let mut mask = 0;
    for (i, o) in history.iter().enumerate() {
        if program.successors_of(&o.atoms) & atoms != 0 {
            mask |= 1u64 << i | o.causes;
        }
    }
    mask
}

fn fire(program: &Program, history: &[Occurrence], events: &[Event]) -> Result<Vec<Occurrence>> {
    let base = history.len();
    if base + events.len() > 64 {
        return Err(Error::budget("occurrences per run", 64));
    }
    Ok(events
        .iter()
        .enumerate()
        .map(|(k, e)| Occurrence {
            id: base + k,
            label: e.label.clone(),
            atoms: e.atoms.clone(),
            causes: cause_mask(program, history, atoms_mask(&e.atoms)),
        })
        .collect())
}

/// Every transition derivable from `s`; empty for terminated or stuck states.
pub fn steps(s: &RunState, cfg: &SemanticsConfig) -> Result<Vec<Transition>> {
    let Some(proc) = &s.proc else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for m in moves(proc, cfg) {
        let occurrences = fire(&s.program, &s.history, &m.events)?;
        let mut history = s.history.clone();
        history.extend(occurrences.iter().cloned());
        out.push(Transition {
            step: m.step(),
            occurrences,
            next: RunState { program: s.program.clone(), proc: m.next, history },
        });
    }
    Ok(out)
}

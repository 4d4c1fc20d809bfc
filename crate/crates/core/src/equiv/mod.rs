//! Truly concurrent bisimulation equivalences on closed terms.
//!
//! * [`EquivalenceKind::Step`]: bisimulation over step-labelled transitions.
//! * [`EquivalenceKind::Pomset`]: transitions are whole run prefixes, matched
//!   up to isomorphism of the pomset they fire.
//! * [`EquivalenceKind::Hp`]: a game over posetal triples, each move one SOS
//!   step, keeping an order isomorphism between both executed histories.
//! * [`EquivalenceKind::Hhp`]: the hp game where the attacker may also undo a
//!   matched maximal pair of occurrences.
//!
//! Termination is observable: a terminated process never matches a live one,
//! even a stuck one.

mod history;
mod pomset;
mod step;

use std::fmt;

use serde::Serialize;

use crate::config::SemanticsConfig;
use crate::error::Result;
use crate::sos::{DEFAULT_POMSET_BUDGET, DEFAULT_STATE_BUDGET};
use crate::syntax::{System, Term};

pub use history::{history_game, PosetalTriple};
pub use pomset::pomset_game;
pub use step::{fingerprint_node, step_fingerprint, step_game, TERMINATED_FINGERPRINT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EquivalenceKind {
    Step,
    Pomset,
    Hp,
    Hhp,
}

impl EquivalenceKind {
    pub const ALL: [EquivalenceKind; 4] =
        [EquivalenceKind::Step, EquivalenceKind::Pomset, EquivalenceKind::Hp, EquivalenceKind::Hhp];

    pub fn symbol(self) -> &'static str {
        match self {
            EquivalenceKind::Step => "~s",
            EquivalenceKind::Pomset => "~p",
            EquivalenceKind::Hp => "~hp",
            EquivalenceKind::Hhp => "~hhp",
        }
    }
}

impl fmt::Display for EquivalenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquivalenceKind::Step => "step",
            EquivalenceKind::Pomset => "pomset",
            EquivalenceKind::Hp => "hp",
            EquivalenceKind::Hhp => "hhp",
        })
    }
}

impl std::str::FromStr for EquivalenceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s" | "step" => Ok(EquivalenceKind::Step),
            "p" | "pomset" => Ok(EquivalenceKind::Pomset),
            "hp" => Ok(EquivalenceKind::Hp),
            "hhp" => Ok(EquivalenceKind::Hhp),
            _ => Err(format!("unknown relation `{s}` (expected s, p, hp or hhp)")),
        }
    }
}

/// Resource caps for the decision procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// LTS states, and also game positions for hp/hhp.
    pub states: usize,
    /// Occurrences in one pomset.
    pub pomset: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { states: DEFAULT_STATE_BUDGET, pomset: DEFAULT_POMSET_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub relation: EquivalenceKind,
    pub equivalent: bool,
    /// Distinguishing moves, attacker first; absent when equivalent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
}

pub fn check(
    kind: EquivalenceKind,
    t1: &Term,
    t2: &Term,
    system: System,
    cfg: &SemanticsConfig,
    budgets: Budgets,
) -> Result<Verdict> {
    for t in [t1, t2] {
        if t.system() > system {
            return Err(crate::Error::OperatorNotInSystem { op: "|_ or |", system: system.name() });
        }
        cfg.check_term(t)?;
    }
    let witness = match kind {
        EquivalenceKind::Step => step_game(t1, t2, system, cfg, budgets)?,
        EquivalenceKind::Pomset => pomset_game(t1, t2, cfg, budgets)?,
        EquivalenceKind::Hp => history_game(t1, t2, cfg, false, budgets)?,
        EquivalenceKind::Hhp => history_game(t1, t2, cfg, true, budgets)?,
    };
    Ok(Verdict { relation: kind, equivalent: witness.is_none(), witness })
}

pub fn equivalent(kind: EquivalenceKind, t1: &Term, t2: &Term, system: System, cfg: &SemanticsConfig) -> Result<bool> {
    Ok(check(kind, t1, t2, system, cfg, Budgets::default())?.equivalent)
}

pub fn step_bisim(t1: &Term, t2: &Term, system: System, cfg: &SemanticsConfig) -> Result<bool> {
    equivalent(EquivalenceKind::Step, t1, t2, system, cfg)
}

pub fn pomset_bisim(t1: &Term, t2: &Term, system: System, cfg: &SemanticsConfig) -> Result<bool> {
    equivalent(EquivalenceKind::Pomset, t1, t2, system, cfg)
}

pub fn hp_bisim(t1: &Term, t2: &Term, system: System, cfg: &SemanticsConfig) -> Result<bool> {
    equivalent(EquivalenceKind::Hp, t1, t2, system, cfg)
}

pub fn hhp_bisim(t1: &Term, t2: &Term, system: System, cfg: &SemanticsConfig) -> Result<bool> {
    equivalent(EquivalenceKind::Hhp, t1, t2, system, cfg)
}

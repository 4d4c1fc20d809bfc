//! Semantic configuration: alphabet, communication function, event order and
//! step-composition policy.
//!
//! The text format is line oriented; `;` also separates entries so a whole
//! configuration fits on one line:
//!
//! ```text
//! # comment
//! alphabet = a,b,c,d
//! gamma a b = c          # mirrored to gamma b a = c
//! order = a<b<c<d
//! policy = optional      # or forced
//! causality = synchronous  # or structural
//! backtrack = runs       # or residual
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::syntax::{EventLabel, Term};

/// How the events of two parallel steps may synchronise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Any set of disjoint communicating pairs, including none.
    Optional,
    /// Only maximal sets of communicating pairs.
    Forced,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optional" => Ok(Policy::Optional),
            "forced" => Ok(Policy::Forced),
            _ => Err(format!("unknown policy `{s}` (expected optional or forced)")),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Optional => "optional",
            Policy::Forced => "forced",
        })
    }
}

/// Which syntactic positions induce causal order between occurrences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Causality {
    /// Sequential composition orders its operands, and every joint step of a
    /// parallel composition precedes everything the composition fires later.
    Synchronous,
    /// Only sequential composition induces order.
    Structural,
}

impl std::str::FromStr for Causality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synchronous" => Ok(Causality::Synchronous),
            "structural" => Ok(Causality::Structural),
            _ => Err(format!("unknown causality `{s}` (expected synchronous or structural)")),
        }
    }
}

impl fmt::Display for Causality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Causality::Synchronous => "synchronous",
            Causality::Structural => "structural",
        })
    }
}

/// What a configuration reached by undoing occurrences can do next in the
/// hereditary game. Undoing may leave a set of occurrences that no run
/// fires on its own (a lockstep partner is removed without the other).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backtrack {
    /// Only transitions of actual runs: a configuration no run reaches has
    /// no moves.
    Runs,
    /// The syntactic residual of the fired atoms keeps moving, even from a
    /// configuration no run reaches.
    Residual,
}

impl std::str::FromStr for Backtrack {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "runs" => Ok(Backtrack::Runs),
            "residual" => Ok(Backtrack::Residual),
            _ => Err(format!("unknown backtrack mode `{s}` (expected runs or residual)")),
        }
    }
}

impl fmt::Display for Backtrack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backtrack::Runs => "runs",
            Backtrack::Residual => "residual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticsConfig {
    /// Alphabet listed in ascending event order.
    alphabet: Vec<EventLabel>,
    rank: HashMap<EventLabel, usize>,
    gamma: BTreeMap<(EventLabel, EventLabel), EventLabel>,
    pub policy: Policy,
    pub causality: Causality,
    pub backtrack: Backtrack,
}

impl SemanticsConfig {
    /// `alphabet=a,b,c,d; gamma a b = c; order=a<b<c<d; policy=optional`
    pub fn cfg0() -> Self {
        Self::load("alphabet=a,b,c,d; gamma a b = c; order=a<b<c<d; policy=optional").expect("builtin config")
    }

    /// Four letters, no communication.
    pub fn cfg_empty() -> Self {
        Self::load("alphabet=a,b,c,d; order=a<b<c<d; policy=optional").expect("builtin config")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "cfg0" => Some(Self::cfg0()),
            "cfg_empty" | "cfg-empty" => Some(Self::cfg_empty()),
            _ => None,
        }
    }

    pub fn with_policy(mut self, policy: Policy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_causality(mut self, causality: Causality) -> Self {
        self.causality = causality;
        self
    }

    pub fn with_backtrack(mut self, backtrack: Backtrack) -> Self {
        self.backtrack = backtrack;
        self
    }

    /// Same alphabet and order with every communication removed.
    pub fn without_gamma(&self) -> Self {
        SemanticsConfig { gamma: BTreeMap::new(), ..self.clone() }
    }

    pub fn load(text: &str) -> Result<Self> {
        let mut alphabet: Option<Vec<EventLabel>> = None;
        let mut order: Option<(usize, Vec<EventLabel>)> = None;
        let mut policy: Option<Policy> = None;
        let mut causality: Option<Causality> = None;
        let mut backtrack: Option<Backtrack> = None;
        let mut gamma_lines: Vec<(usize, EventLabel, EventLabel, EventLabel)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            for entry in content.split(';') {
                let entry = entry.trim();
                if entry.is_empty() {
                    continue;
                }
                let bad = |msg: String| Error::Config { line, msg };
                let (key, value) =
                    entry.split_once('=').ok_or_else(|| bad(format!("expected `key = value`, got `{entry}`")))?;
                let (key, value) = (key.trim(), value.trim());
                let mut words = key.split_whitespace();
                match words.next() {
                    Some("alphabet") if words.next().is_none() => {
                        if alphabet.is_some() {
                            return Err(bad("duplicate key `alphabet`".into()));
                        }
                        let mut labels = Vec::new();
                        for name in value.split(',').map(str::trim) {
                            labels.push(label(name, line)?);
                        }
                        alphabet = Some(labels);
                    }
                    Some("order") if words.next().is_none() => {
                        if order.is_some() {
                            return Err(bad("duplicate key `order`".into()));
                        }
                        let mut chain = Vec::new();
                        for name in value.split('<').map(str::trim) {
                            chain.push(label(name, line)?);
                        }
                        order = Some((line, chain));
                    }
                    Some("policy") if words.next().is_none() => {
                        if policy.is_some() {
                            return Err(bad("duplicate key `policy`".into()));
                        }
                        policy = Some(value.parse().map_err(bad)?);
                    }
                    Some("causality") if words.next().is_none() => {
                        if causality.is_some() {
                            return Err(bad("duplicate key `causality`".into()));
                        }
                        causality = Some(value.parse().map_err(bad)?);
                    }
                    Some("backtrack") if words.next().is_none() => {
                        if backtrack.is_some() {
                            return Err(bad("duplicate key `backtrack`".into()));
                        }
                        backtrack = Some(value.parse().map_err(bad)?);
                    }
                    Some("gamma") => {
                        let args: Vec<&str> = words.collect();
                        if args.len() != 2 {
                            return Err(bad("expected `gamma <e1> <e2> = <e>`".into()));
                        }
                        gamma_lines.push((line, label(args[0], line)?, label(args[1], line)?, label(value, line)?));
                    }
                    _ => return Err(bad(format!("unknown key `{key}`"))),
                }
            }
        }

        let alphabet = alphabet.ok_or(Error::Config { line: 0, msg: "missing `alphabet`".into() })?;
        let mut declared = HashMap::new();
        for (i, l) in alphabet.iter().enumerate() {
            if declared.insert(l.clone(), i).is_some() {
                return Err(Error::Config { line: 0, msg: format!("label `{l}` listed twice in alphabet") });
            }
        }

        let ordered = match order {
            None => alphabet.clone(),
            Some((line, chain)) => {
                let mut seen = HashMap::new();
                for l in &chain {
                    if !declared.contains_key(l) {
                        return Err(Error::Config {
                            line,
                            msg: format!("order mentions `{l}` which is not in the alphabet"),
                        });
                    }
                    if seen.insert(l.clone(), ()).is_some() {
                        return Err(Error::Config { line, msg: format!("order lists `{l}` twice") });
                    }
                }
                if chain.len() != alphabet.len() {
                    let missing: Vec<_> =
                        alphabet.iter().filter(|l| !seen.contains_key(*l)).map(|l| l.to_string()).collect();
                    return Err(Error::Config {
                        line,
                        msg: format!("order is not total over the alphabet (missing {})", missing.join(",")),
                    });
                }
                chain
            }
        };
        let rank = ordered.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();

        let mut explicit: BTreeMap<(EventLabel, EventLabel), (usize, EventLabel)> = BTreeMap::new();
        for (line, a, b, c) in gamma_lines {
            for l in [&a, &b] {
                if !declared.contains_key(l) {
                    return Err(Error::Config { line, msg: format!("gamma operand `{l}` is not in the alphabet") });
                }
            }
            if !declared.contains_key(&c) {
                return Err(Error::Config { line, msg: format!("gamma result `{c}` is not in the alphabet") });
            }
            if explicit.insert((a.clone(), b.clone()), (line, c)).is_some() {
                return Err(Error::Config { line, msg: format!("duplicate entry for gamma {a} {b}") });
            }
        }
        let mut gamma = BTreeMap::new();
        for ((a, b), (_, c)) in &explicit {
            if let Some((_, d)) = explicit.get(&(b.clone(), a.clone())) {
                if d != c {
                    return Err(Error::AsymmetricGamma(a.to_string(), b.to_string(), c.to_string(), d.to_string()));
                }
            }
            gamma.insert((a.clone(), b.clone()), c.clone());
            gamma.insert((b.clone(), a.clone()), c.clone());
        }

        Ok(SemanticsConfig {
            alphabet: ordered,
            rank,
            gamma,
            policy: policy.unwrap_or(Policy::Optional),
            causality: causality.unwrap_or(Causality::Synchronous),
            backtrack: backtrack.unwrap_or(Backtrack::Runs),
        })
    }

    /// Labels in ascending event order.
    pub fn alphabet(&self) -> &[EventLabel] {
        &self.alphabet
    }

    pub fn contains(&self, l: &EventLabel) -> bool {
        self.rank.contains_key(l)
    }

    pub fn lookup(&self, name: &str) -> Option<EventLabel> {
        self.alphabet.iter().find(|l| l.as_str() == name).cloned()
    }

    pub fn gamma(&self, a: &EventLabel, b: &EventLabel) -> Option<&EventLabel> {
        self.gamma.get(&(a.clone(), b.clone()))
    }

    pub fn has_gamma(&self) -> bool {
        !self.gamma.is_empty()
    }

    /// Non-strict event order; labels outside the alphabet sort last.
    pub fn leq(&self, a: &EventLabel, b: &EventLabel) -> bool {
        self.rank_of(a) <= self.rank_of(b)
    }

    pub fn rank_of(&self, l: &EventLabel) -> usize {
        self.rank.get(l).copied().unwrap_or(usize::MAX)
    }

    pub fn check_term(&self, t: &Term) -> Result<()> {
        let mut labels = Vec::new();
        t.labels(&mut labels);
        match labels.into_iter().find(|l| !self.contains(l)) {
            Some(l) => Err(Error::UnknownLabel(l.to_string())),
            None => Ok(()),
        }
    }

    /// Canonical text form; `load(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let names: Vec<&str> = self.alphabet.iter().map(|l| l.as_str()).collect();
        s.push_str(&format!("alphabet = {}\n", names.join(",")));
        for ((a, b), c) in &self.gamma {
            if a <= b {
                s.push_str(&format!("gamma {a} {b} = {c}\n"));
            }
        }
        s.push_str(&format!("order = {}\n", names.join("<")));
        s.push_str(&format!("policy = {}\n", self.policy));
        s.push_str(&format!("causality = {}\n", self.causality));
        s.push_str(&format!("backtrack = {}\n", self.backtrack));
        s
    }
}

fn label(name: &str, line: usize) -> Result<EventLabel> {
    if EventLabel::is_valid_name(name) {
        Ok(EventLabel::new(name))
    } else {
        Err(Error::Config { line, msg: format!("`{name}` is not a valid event label") })
    }
}

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write;

use serde_json::{json, Value};

use crate::config::SemanticsConfig;
use crate::error::{Error, Result};
use crate::syntax::{System, Term};

use super::{term_transitions, Step};

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

/// Step-labelled transition system of a closed term. States are residual
/// terms with positions and guards erased; `None` is the terminated state.
#[derive(Debug, Clone)]
pub struct Lts {
    states: Vec<Option<Term>>,
    index: HashMap<Option<Term>, usize>,
    edges: Vec<(usize, Step, usize)>,
    out: Vec<Vec<usize>>,
    initial: usize,
}

pub fn build_lts(t: &Term, system: System, cfg: &SemanticsConfig, budget: usize) -> Result<Lts> {
    if t.system() > system {
        return Err(Error::OperatorNotInSystem { op: "|_ or |", system: system.name() });
    }
    cfg.check_term(t)?;
    let mut lts = Lts { states: Vec::new(), index: HashMap::new(), edges: Vec::new(), out: Vec::new(), initial: 0 };
    lts.intern(Some(t.clone()));
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let Some(term) = lts.states[s].clone() else {
            continue;
        };
        let mut seen = BTreeSet::new();
        for (step, next) in term_transitions(&term, cfg) {
            let before = lts.states.len();
            let n = lts.intern(next);
            if lts.states.len() > budget {
                return Err(Error::budget("LTS state", budget));
            }
            if n == before {
                queue.push_back(n);
            }
            if seen.insert((step.clone(), n)) {
                lts.out[s].push(lts.edges.len());
                lts.edges.push((s, step, n));
            }
        }
    }
    Ok(lts)
}

impl Lts {
    fn intern(&mut self, s: Option<Term>) -> usize {
        if let Some(&i) = self.index.get(&s) {
            return i;
        }
        let i = self.states.len();
        self.index.insert(s.clone(), i);
        self.states.push(s);
        self.out.push(Vec::new());
        i
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Residual term of a state, `None` when it is the terminated state.
    pub fn state(&self, s: usize) -> Option<&Term> {
        self.states[s].as_ref()
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.states[s].is_none()
    }

    /// Live states without transitions.
    pub fn is_stuck(&self, s: usize) -> bool {
        self.states[s].is_some() && self.out[s].is_empty()
    }

    pub fn edges(&self) -> &[(usize, Step, usize)] {
        &self.edges
    }

    pub fn outgoing(&self, s: usize) -> impl Iterator<Item = (&Step, usize)> + '_ {
        self.out[s].iter().map(move |&e| (&self.edges[e].1, self.edges[e].2))
    }

    pub fn stuck_states(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&s| self.is_stuck(s)).collect()
    }

    /// Topological order check: every edge goes to a state that can never
    /// reach its source.
    pub fn is_acyclic(&self) -> bool {
        let n = self.states.len();
        let mut indeg = vec![0usize; n];
        for (_, _, to) in &self.edges {
            indeg[*to] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&s| indeg[s] == 0).collect();
        let mut visited = 0;
        while let Some(s) = queue.pop() {
            visited += 1;
            for &e in &self.out[s] {
                let to = self.edges[e].2;
                indeg[to] -= 1;
                if indeg[to] == 0 {
                    queue.push(to);
                }
            }
        }
        visited == n
    }

    fn state_name(&self, s: usize) -> String {
        match &self.states[s] {
            Some(t) => t.to_string(),
            None => "TERM".to_string(),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lts {\n  rankdir=LR;\n");
        for i in 0..self.states.len() {
            let shape = if self.is_terminal(i) { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  s{i} [shape={shape}, label=\"{i}\", tooltip=\"{}\"];", self.state_name(i));
        }
        let _ = writeln!(s, "  start [shape=point];\n  start -> s{};", self.initial);
        for (from, step, to) in &self.edges {
            let _ = writeln!(s, "  s{from} -> s{to} [label=\"{step}\"];");
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> Value {
        let states: Vec<Value> = (0..self.states.len())
            .map(|i| json!({ "id": i, "term": self.state_name(i), "terminal": self.is_terminal(i) }))
            .collect();
        let edges: Vec<Value> =
            self.edges.iter().map(|(from, step, to)| json!({ "from": from, "label": step, "to": to })).collect();
        json!({
            "states": states,
            "edges": edges,
            "initial": self.initial,
            "stuck": self.stuck_states(),
        })
    }
}

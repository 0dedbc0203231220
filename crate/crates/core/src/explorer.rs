//! Bounded exhaustive exploration of crash-recovery executions.
//!
//! Nodes are executions from a start configuration, identified up to what can
//! influence their future: the configuration, per-process crash counts, the
//! step totals that feed the crash allowance (clamped where they stop
//! mattering), and the set of values decided so far. Exploration is
//! breadth-first with successors in canonical order (steps by ascending
//! process, then crashes by ascending process), so the first violation found
//! is the shortest one and, among those, the lexicographically least.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::execution::{run, BudgetSpec, BudgetVariant, Configuration, Event, Execution, Trace};
use crate::protocol::{Action, Bit, ProtocolInstance};

pub const DEFAULT_MAX_EVENTS: usize = 24;
pub const DEFAULT_MAX_CRASHES: u32 = 2;
pub const DEFAULT_LIVENESS_CAP: usize = 4;
pub const DEFAULT_STATE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreBounds {
    pub max_events: usize,
    pub max_crashes_per_process: u32,
    pub budget: BudgetSpec,
    /// Solo steps within which every undecided process must decide.
    pub liveness_cap: usize,
    pub state_cap: usize,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for ExploreBounds {
    fn default() -> Self {
        ExploreBounds {
            max_events: DEFAULT_MAX_EVENTS,
            max_crashes_per_process: DEFAULT_MAX_CRASHES,
            budget: BudgetSpec::e_star(1),
            liveness_cap: DEFAULT_LIVENESS_CAP,
            state_cap: DEFAULT_STATE_CAP,
            workers: None,
        }
    }
}

impl ExploreBounds {
    pub fn new(max_events: usize, max_crashes_per_process: u32, z: u32) -> Self {
        ExploreBounds {
            max_events,
            max_crashes_per_process,
            budget: BudgetSpec::e_star(z),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), SearchError> {
        if self.max_events < 1 {
            return Err(SearchError::UnsupportedBounds(
                "max_events must be at least 1".into(),
            ));
        }
        if self.budget.z < 1 {
            return Err(SearchError::UnsupportedBounds(
                "z must be at least 1".into(),
            ));
        }
        if self.budget.variant != BudgetVariant::EStar {
            return Err(SearchError::UnsupportedBounds(
                "exploration runs over the prefix-closed budget only".into(),
            ));
        }
        Ok(())
    }

    fn with_pool<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match self.workers {
            Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map(|pool| pool.install(f))
                .unwrap_or_else(|_| unreachable!("thread pool construction")),
            _ => f(),
        }
    }
}

fn mask_of(values: impl IntoIterator<Item = Bit>) -> u8 {
    values.into_iter().fold(0, |m, v| m | 1 << v)
}

#[derive(Clone)]
struct Node {
    config: Configuration,
    crashes: Vec<u32>,
    steps: Vec<u64>,
    mask: u8,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    config: Configuration,
    crashes: Vec<u32>,
    lower: Vec<u64>,
    mask: u8,
}

struct Rules {
    z: u64,
    n: u64,
    max_crashes: u32,
    /// Lower-process step totals at or beyond this allow every permitted crash.
    step_clamp: u64,
}

impl Rules {
    fn new(bounds: &ExploreBounds, n: usize) -> Self {
        let z = bounds.budget.z as u64;
        let per = z * n as u64;
        Rules {
            z,
            n: n as u64,
            max_crashes: bounds.max_crashes_per_process,
            step_clamp: (bounds.max_crashes_per_process as u64).div_ceil(per.max(1)),
        }
    }

    fn lower_steps(&self, steps: &[u64], i: usize) -> u64 {
        steps[..i].iter().sum()
    }

    fn may_crash(&self, node: &Node, i: usize) -> bool {
        i > 0
            && node.crashes[i] < self.max_crashes
            && (node.crashes[i] as u64 + 1) <= self.z * self.n * self.lower_steps(&node.steps, i)
    }

    fn key(&self, node: &Node) -> Key {
        let n = node.steps.len();
        Key {
            config: node.config.clone(),
            crashes: node.crashes.clone(),
            lower: (1..n)
                .map(|i| self.lower_steps(&node.steps, i).min(self.step_clamp))
                .collect(),
            mask: node.mask,
        }
    }

    fn successors(&self, node: &Node, participants: &[bool]) -> Vec<(Event, Node)> {
        let n = node.steps.len();
        let mut out = Vec::with_capacity(2 * n);
        for i in (0..n).filter(|&i| participants[i]) {
            let (config, _, decided) = node.config.apply(Event::Step(i));
            let mut steps = node.steps.clone();
            steps[i] += 1;
            out.push((
                Event::Step(i),
                Node {
                    config,
                    crashes: node.crashes.clone(),
                    steps,
                    mask: node.mask | decided.map_or(0, |v| 1 << v),
                },
            ));
        }
        for i in (1..n).filter(|&i| participants[i]) {
            if self.may_crash(node, i) {
                let (config, _, _) = node.config.apply(Event::Crash(i));
                let mut crashes = node.crashes.clone();
                crashes[i] += 1;
                out.push((
                    Event::Crash(i),
                    Node {
                        config,
                        crashes,
                        steps: node.steps.clone(),
                        mask: node.mask,
                    },
                ));
            }
        }
        out
    }
}

struct Arena {
    nodes: Vec<(Node, usize, Option<Event>)>,
}

impl Arena {
    const ROOT: usize = usize::MAX;

    fn path(&self, mut id: usize) -> Vec<Event> {
        let mut events = Vec::new();
        while id != Self::ROOT {
            let (_, parent, event) = &self.nodes[id];
            if let Some(e) = event {
                events.push(*e);
            }
            id = *parent;
        }
        events.reverse();
        events
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ViolationKind {
    Agreement,
    Validity,
    /// `process` ran solo for the liveness cap without deciding.
    BoundedLiveness {
        process: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub kind: ViolationKind,
    /// From the initial configuration; for liveness violations the final
    /// `liveness_cap` events are the solo run.
    pub trace: Execution,
}

impl Violation {
    /// Re-runs the trace's schedule and confirms the violation.
    pub fn replays(&self, bounds: &ExploreBounds) -> bool {
        let ex = match run(self.trace.start(), self.trace.events()) {
            Ok(ex) => ex,
            Err(_) => return false,
        };
        let inputs = &ex.start().instance().inputs;
        match self.kind {
            ViolationKind::Agreement => ex.decided_values().len() > 1,
            ViolationKind::Validity => ex.decided_values().iter().any(|v| !inputs.contains(v)),
            ViolationKind::BoundedLiveness { process } => {
                let k = bounds.liveness_cap;
                let split = ex.len().saturating_sub(k);
                ex.len() >= k
                    && ex.events()[split..]
                        .iter()
                        .all(|&e| e == Event::Step(process))
                    && ex.last().state(process).decided.is_none()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Ok { states: usize },
    Violation(Violation),
    Inconclusive { frontier: usize, states: usize },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok { .. })
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Verdict::Violation(v) => Some(v),
            _ => None,
        }
    }

    pub fn report(&self) -> VerdictReport {
        match self {
            Verdict::Ok { states } => VerdictReport {
                status: Status::Ok,
                kind: None,
                inputs: None,
                trace: None,
                trace_text: None,
                frontier: None,
                states: Some(*states),
            },
            Verdict::Inconclusive { frontier, states } => VerdictReport {
                status: Status::Inconclusive,
                kind: None,
                inputs: None,
                trace: None,
                trace_text: None,
                frontier: Some(*frontier),
                states: Some(*states),
            },
            Verdict::Violation(v) => VerdictReport {
                status: Status::Violation,
                kind: Some(v.kind),
                inputs: Some(v.trace.start().instance().inputs.clone()),
                trace: Some(v.trace.trace()),
                trace_text: Some(v.trace.trace_text()),
                frontier: None,
                states: None,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Violation,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ViolationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<Bit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Trace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frontier: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
}

fn solo_decides(config: &Configuration, i: usize, cap: usize) -> bool {
    let mut c = config.clone();
    for _ in 0..cap {
        if c.state(i).decided.is_some() {
            return true;
        }
        c = c.apply(Event::Step(i)).0;
    }
    c.state(i).decided.is_some()
}

fn node_violation(node: &Node, inputs: &[Bit], cap: usize) -> Option<ViolationKind> {
    if node.mask == 0b11 {
        return Some(ViolationKind::Agreement);
    }
    if (0..2u8).any(|v| node.mask & (1 << v) != 0 && !inputs.contains(&v)) {
        return Some(ViolationKind::Validity);
    }
    (0..node.config.n())
        .find(|&i| !solo_decides(&node.config, i, cap))
        .map(|process| ViolationKind::BoundedLiveness { process })
}

/// Explores every in-budget execution of `instance` from its initial
/// configuration up to `bounds.max_events` events.
pub fn check_consensus(
    instance: &Arc<ProtocolInstance>,
    bounds: &ExploreBounds,
) -> Result<Verdict, SearchError> {
    bounds.validate()?;
    bounds.with_pool(|| check_from(&Configuration::initial(instance), bounds))
}

/// [`check_consensus`] for every input vector in lexicographic order; returns
/// the first non-ok verdict, or ok with the summed state count.
pub fn check_consensus_all_inputs(
    instance: &Arc<ProtocolInstance>,
    bounds: &ExploreBounds,
) -> Result<Verdict, SearchError> {
    let n = instance.procs();
    let mut states = 0;
    for bits in 0u32..(1 << n) {
        let inputs: Vec<Bit> = (0..n).map(|i| (bits >> (n - 1 - i) & 1) as Bit).collect();
        let inst = instance.with_inputs(inputs)?;
        match check_consensus(&inst, bounds)? {
            Verdict::Ok { states: s } => states += s,
            other => return Ok(other),
        }
    }
    Ok(Verdict::Ok { states })
}

fn check_from(start: &Configuration, bounds: &ExploreBounds) -> Result<Verdict, SearchError> {
    let n = start.n();
    let rules = Rules::new(bounds, n);
    let inputs = start.instance().inputs.clone();
    let everyone = vec![true; n];
    let root = Node {
        config: start.clone(),
        crashes: vec![0; n],
        steps: vec![0; n],
        mask: 0,
    };

    let violation_at = |arena: &Arena, id: usize, kind: ViolationKind| -> Verdict {
        let mut events = arena.path(id);
        if let ViolationKind::BoundedLiveness { process } = kind {
            events.extend(std::iter::repeat_n(
                Event::Step(process),
                bounds.liveness_cap,
            ));
        }
        let trace = run(start, &events).expect("explored events are valid");
        Verdict::Violation(Violation { kind, trace })
    };

    let mut visited: HashSet<Key> = HashSet::new();
    visited.insert(rules.key(&root));
    let mut arena = Arena { nodes: Vec::new() };
    if let Some(kind) = node_violation(&root, &inputs, bounds.liveness_cap) {
        arena.nodes.push((root, Arena::ROOT, None));
        return Ok(violation_at(&arena, 0, kind));
    }
    arena.nodes.push((root, Arena::ROOT, None));
    let mut frontier = vec![0usize];

    for _depth in 0..bounds.max_events {
        let expansions: Vec<Vec<(Event, Node)>> = frontier
            .par_iter()
            .map(|&id| rules.successors(&arena.nodes[id].0, &everyone))
            .collect();
        let mut fresh = Vec::new();
        for (&parent, children) in frontier.iter().zip(expansions) {
            for (event, child) in children {
                if visited.insert(rules.key(&child)) {
                    arena.nodes.push((child, parent, Some(event)));
                    fresh.push(arena.nodes.len() - 1);
                }
            }
        }
        if visited.len() > bounds.state_cap {
            return Err(SearchError::StateExplosion {
                visited: visited.len(),
                cap: bounds.state_cap,
            });
        }
        let first_bad = fresh
            .par_iter()
            .enumerate()
            .filter_map(|(k, &id)| {
                node_violation(&arena.nodes[id].0, &inputs, bounds.liveness_cap)
                    .map(|kind| (k, kind))
            })
            .min_by_key(|(k, _)| *k);
        if let Some((k, kind)) = first_bad {
            return Ok(violation_at(&arena, fresh[k], kind));
        }
        frontier = fresh;
        if frontier.is_empty() {
            break;
        }
    }

    let open = frontier
        .par_iter()
        .filter(|&&id| {
            rules
                .successors(&arena.nodes[id].0, &everyone)
                .iter()
                .any(|(_, child)| !visited.contains(&rules.key(child)))
        })
        .count();
    if open > 0 {
        Ok(Verdict::Inconclusive {
            frontier: open,
            states: visited.len(),
        })
    } else {
        Ok(Verdict::Ok {
            states: visited.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Valency {
    Bivalent,
    Univalent { value: Bit },
    Unknown,
}

#[derive(Debug, Clone)]
pub struct ValencyReport {
    pub verdict: Valency,
    /// Deciding continuation per value, from the queried configuration.
    pub witnesses: [Option<Execution>; 2],
    pub states: usize,
}

impl ValencyReport {
    pub fn is_bivalent(&self) -> bool {
        self.verdict == Valency::Bivalent
    }

    pub fn univalent(&self) -> Option<Bit> {
        match self.verdict {
            Valency::Univalent { value } => Some(value),
            _ => None,
        }
    }

    pub fn report(&self) -> ValencyJson {
        ValencyJson {
            verdict: self.verdict,
            witness0: self.witnesses[0].as_ref().map(Execution::trace),
            witness1: self.witnesses[1].as_ref().map(Execution::trace),
            states: self.states,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValencyJson {
    #[serde(flatten)]
    pub verdict: Valency,
    pub witness0: Option<Trace>,
    pub witness1: Option<Trace>,
    pub states: usize,
}

/// Where a valency query starts: a configuration plus the history facts that
/// constrain its continuations.
#[derive(Clone)]
pub struct Origin {
    node: Node,
}

impl Origin {
    /// `config` with no prior events and the given already-decided values.
    pub fn fresh(config: &Configuration, decided: &[Bit]) -> Self {
        let n = config.n();
        Origin {
            node: Node {
                config: config.clone(),
                crashes: vec![0; n],
                steps: vec![0; n],
                mask: mask_of(decided.iter().copied()),
            },
        }
    }

    /// The end of `execution`, carrying its step/crash counts and decisions.
    pub fn after(execution: &Execution) -> Self {
        let n = execution.start().n();
        let mut crashes = vec![0; n];
        let mut steps = vec![0; n];
        for e in execution.events() {
            match *e {
                Event::Step(i) => steps[i] += 1,
                Event::Crash(i) => crashes[i] += 1,
            }
        }
        Origin {
            node: Node {
                config: execution.last().clone(),
                crashes,
                steps,
                mask: mask_of(execution.decided_values()),
            },
        }
    }

    /// Same counters and decisions with a different configuration.
    pub fn with_config(&self, config: Configuration) -> Self {
        Origin {
            node: Node {
                config,
                ..self.node.clone()
            },
        }
    }

    pub fn config(&self) -> &Configuration {
        &self.node.config
    }

    pub fn crashes(&self) -> &[u32] {
        &self.node.crashes
    }
}

/// Valency of `config` with respect to in-budget executions of at most
/// `bounds.max_events` events.
pub fn valency(
    config: &Configuration,
    decided: &[Bit],
    bounds: &ExploreBounds,
) -> Result<ValencyReport, SearchError> {
    valency_from(&Origin::fresh(config, decided), None, bounds)
}

/// Valency at `origin`, optionally restricted to events of `participants`.
pub fn valency_from(
    origin: &Origin,
    participants: Option<&[usize]>,
    bounds: &ExploreBounds,
) -> Result<ValencyReport, SearchError> {
    bounds.validate()?;
    let n = origin.node.config.n();
    let mut allowed = vec![participants.is_none(); n];
    for &p in participants.unwrap_or(&[]) {
        if p >= n {
            return Err(SearchError::Invalid(format!("process {p} out of range")));
        }
        allowed[p] = true;
    }
    let rules = Rules::new(bounds, n);
    let root = origin.node.clone();
    let start = root.config.clone();

    let mut visited: HashSet<Key> = HashSet::new();
    visited.insert(rules.key(&root));
    let mut arena = Arena {
        nodes: vec![(root, Arena::ROOT, None)],
    };
    let mut first_with = [None::<usize>; 2];
    let mut found = 0u8;
    let mut note = |arena: &Arena, id: usize, found: &mut u8| {
        let m = arena.nodes[id].0.mask;
        for (v, slot) in first_with.iter_mut().enumerate() {
            if m & (1 << v) != 0 && slot.is_none() {
                *slot = Some(id);
            }
        }
        *found |= m;
    };
    note(&arena, 0, &mut found);

    let mut frontier = vec![0usize];
    let mut undecided_leaf = false;
    for depth in 0..=bounds.max_events {
        let mut fresh = Vec::new();
        for &id in &frontier {
            let children = rules.successors(&arena.nodes[id].0, &allowed);
            if depth == bounds.max_events || children.is_empty() {
                let open = children.is_empty()
                    || children
                        .iter()
                        .any(|(_, c)| !visited.contains(&rules.key(c)));
                if open && arena.nodes[id].0.mask == 0 {
                    undecided_leaf = true;
                }
                continue;
            }
            for (event, child) in children {
                if visited.insert(rules.key(&child)) {
                    arena.nodes.push((child, id, Some(event)));
                    let cid = arena.nodes.len() - 1;
                    note(&arena, cid, &mut found);
                    fresh.push(cid);
                }
            }
        }
        if visited.len() > bounds.state_cap {
            return Err(SearchError::StateExplosion {
                visited: visited.len(),
                cap: bounds.state_cap,
            });
        }
        frontier = fresh;
        if frontier.is_empty() {
            break;
        }
    }

    let verdict = match found {
        0b11 => Valency::Bivalent,
        0b01 | 0b10 if !undecided_leaf => Valency::Univalent {
            value: if found == 0b01 { 0 } else { 1 },
        },
        _ => Valency::Unknown,
    };
    let witnesses = first_with
        .map(|id| id.map(|id| run(&start, &arena.path(id)).expect("explored events are valid")));
    Ok(ValencyReport {
        verdict,
        witnesses,
        states: visited.len(),
    })
}

#[derive(Debug, Clone)]
pub struct Critical {
    pub execution: Execution,
    pub team0: Vec<usize>,
    pub team1: Vec<usize>,
    /// `(object, operation label)` each process is poised to apply.
    pub poised: Vec<Option<(usize, String)>>,
}

impl Critical {
    /// The common object, when every process is poised on the same one.
    pub fn common_object(&self) -> Option<usize> {
        let first = self.poised.first()?.as_ref()?.0;
        self.poised
            .iter()
            .all(|p| p.as_ref().map(|(o, _)| *o) == Some(first))
            .then_some(first)
    }

    pub fn poised_ops(&self) -> Option<Vec<String>> {
        self.poised
            .iter()
            .map(|p| p.as_ref().map(|(_, op)| op.clone()))
            .collect()
    }

    pub fn report(&self) -> CriticalReport {
        CriticalReport {
            trace: self.execution.trace(),
            team0: self.team0.clone(),
            team1: self.team1.clone(),
            poised: self.poised.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub trace: Trace,
    pub team0: Vec<usize>,
    pub team1: Vec<usize>,
    pub poised: Vec<Option<(usize, String)>>,
}

/// Breadth-first search from `config` for an in-budget execution that is
/// bivalent while every one-event in-budget extension is exactly univalent.
pub fn find_critical(
    config: &Configuration,
    bounds: &ExploreBounds,
) -> Result<Option<Critical>, SearchError> {
    bounds.validate()?;
    let root = Origin::fresh(config, &[]);
    let root_val = valency_from(&root, None, bounds)?;
    if !root_val.is_bivalent() {
        return Err(SearchError::Invalid(format!(
            "start configuration is not bivalent ({:?})",
            root_val.verdict
        )));
    }
    let n = config.n();
    let rules = Rules::new(bounds, n);
    let everyone = vec![true; n];
    let mut memo: HashMap<Key, Valency> = HashMap::new();
    let val_of = |node: &Node, memo: &mut HashMap<Key, Valency>| -> Result<Valency, SearchError> {
        let key = rules.key(node);
        if let Some(v) = memo.get(&key) {
            return Ok(*v);
        }
        let v = valency_from(&Origin { node: node.clone() }, None, bounds)?.verdict;
        memo.insert(key, v);
        Ok(v)
    };

    let mut visited: HashSet<Key> = HashSet::new();
    visited.insert(rules.key(&root.node));
    let mut arena = Arena {
        nodes: vec![(root.node.clone(), Arena::ROOT, None)],
    };
    let mut frontier = vec![0usize];
    for depth in 0..=bounds.max_events {
        let mut fresh = Vec::new();
        for &id in &frontier {
            let node = arena.nodes[id].0.clone();
            if val_of(&node, &mut memo)? != Valency::Bivalent {
                continue;
            }
            let children = rules.successors(&node, &everyone);
            let mut teams = [Vec::new(), Vec::new()];
            let mut critical = true;
            for (event, child) in &children {
                match val_of(child, &mut memo)? {
                    Valency::Univalent { value } => {
                        if let Event::Step(i) = event {
                            teams[value as usize].push(*i);
                        }
                    }
                    _ => critical = false,
                }
            }
            if critical {
                let execution = run(config, &arena.path(id)).expect("explored events are valid");
                let last = execution.last();
                let poised = (0..n)
                    .map(|i| match last.pending(i) {
                        Action::Apply { object, op } => Some((
                            object,
                            last.instance().objects[object].ty.op_label(op).to_string(),
                        )),
                        Action::Idle => None,
                    })
                    .collect();
                let [team0, team1] = teams;
                return Ok(Some(Critical {
                    execution,
                    team0,
                    team1,
                    poised,
                }));
            }
            if depth == bounds.max_events {
                continue;
            }
            for (event, child) in children {
                if visited.insert(rules.key(&child)) {
                    arena.nodes.push((child, id, Some(event)));
                    fresh.push(arena.nodes.len() - 1);
                }
            }
        }
        frontier = fresh;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::parse_schedule;
    use crate::protocol::{recoverable_tnn, wait_free_tnn};
    use crate::types::TnnParams;

    fn p52() -> TnnParams {
        TnnParams::new(5, 2).unwrap()
    }

    #[test]
    fn recoverable_two_processes_ok() {
        let inst = recoverable_tnn(p52(), vec![0, 1]).unwrap();
        let v = check_consensus_all_inputs(&inst, &ExploreBounds::new(20, 2, 1)).unwrap();
        assert!(v.is_ok(), "{:?}", v.report());
    }

    #[test]
    fn recoverable_three_processes_breaks() {
        let inst = recoverable_tnn(p52(), vec![0, 0, 0]).unwrap();
        let bounds = ExploreBounds::new(24, 1, 1);
        let v = check_consensus_all_inputs(&inst, &bounds).unwrap();
        let viol = v.violation().expect("violation");
        assert_eq!(viol.kind, ViolationKind::Agreement);
        assert!(viol.trace.len() <= 8, "{}", viol.trace.trace_text());
        assert!(viol.replays(&bounds));
    }

    #[test]
    fn wait_free_five_ok_without_crashes() {
        let inst = wait_free_tnn(p52(), vec![0, 1, 1, 0, 1]).unwrap();
        let mut b = ExploreBounds::new(24, 0, 1);
        b.liveness_cap = 1;
        assert!(check_consensus(&inst, &b).unwrap().is_ok());
    }

    #[test]
    fn wait_free_with_crashes_breaks_agreement() {
        // After a reset the re-applied op_x can hit s_⊥ and return ⊥.
        let inst = wait_free_tnn(TnnParams::new(2, 1).unwrap(), vec![1, 0]).unwrap();
        let v = check_consensus(&inst, &ExploreBounds::new(10, 2, 1)).unwrap();
        assert!(v.violation().is_some());
    }

    #[test]
    fn rejects_non_prefix_closed_budget() {
        let inst = wait_free_tnn(p52(), vec![0, 1]).unwrap();
        let mut b = ExploreBounds::default();
        b.budget.variant = BudgetVariant::E;
        assert!(matches!(
            check_consensus(&inst, &b),
            Err(SearchError::UnsupportedBounds(_))
        ));
    }

    #[test]
    fn valency_examples() {
        let b = ExploreBounds::new(12, 2, 1);
        let inst = recoverable_tnn(p52(), vec![0, 1]).unwrap();
        let c = Configuration::initial(&inst);
        let r = valency(&c, &[], &b).unwrap();
        assert_eq!(r.verdict, Valency::Bivalent);
        for w in r.witnesses.iter() {
            assert!(w.is_some());
        }

        let same = Configuration::initial(&inst.with_inputs(vec![1, 1]).unwrap());
        assert_eq!(
            valency(&same, &[], &b).unwrap().verdict,
            Valency::Univalent { value: 1 }
        );

        let ex = run(&c, &parse_schedule("p0,p0").unwrap()).unwrap();
        assert_eq!(ex.last().object_label(0), "s_{0,1}");
        let r = valency_from(&Origin::after(&ex), None, &b).unwrap();
        assert_eq!(r.verdict, Valency::Univalent { value: 0 });
    }

    #[test]
    fn critical_two_processes() {
        let inst = recoverable_tnn(p52(), vec![0, 1]).unwrap();
        let c = Configuration::initial(&inst);
        let crit = find_critical(&c, &ExploreBounds::new(12, 2, 1))
            .unwrap()
            .expect("critical");
        assert_eq!(crit.common_object(), Some(0));
        assert!(!crit.team0.is_empty() && !crit.team1.is_empty());
        let same = Configuration::initial(&inst.with_inputs(vec![0, 0]).unwrap());
        assert!(find_critical(&same, &ExploreBounds::new(12, 2, 1)).is_err());
    }
}

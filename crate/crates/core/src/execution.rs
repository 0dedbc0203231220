//! Configurations, events, executions, and the crash-budgeted execution sets.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::protocol::{Action, Bit, LocalState, ProtocolInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    Step(usize),
    Crash(usize),
}

impl Event {
    pub fn process(self) -> usize {
        match self {
            Event::Step(i) | Event::Crash(i) => i,
        }
    }

    pub fn is_crash(self) -> bool {
        matches!(self, Event::Crash(_))
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Step(i) => write!(f, "p{i}"),
            Event::Crash(i) => write!(f, "c{i}"),
        }
    }
}

impl FromStr for Event {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ModelError::BadToken(s.to_string());
        let (kind, rest) = s.split_at(s.char_indices().nth(1).map_or(s.len(), |(i, _)| i));
        let index: usize = rest.parse().map_err(|_| bad())?;
        match kind {
            "p" => Ok(Event::Step(index)),
            "c" => Ok(Event::Crash(index)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Event {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `"p0,p1,c1,p0"`. The empty string is the empty schedule.
pub fn parse_schedule(text: &str) -> Result<Vec<Event>, ModelError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(str::parse).collect()
}

pub fn format_schedule(events: &[Event]) -> String {
    events
        .iter()
        .map(Event::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Local states of all processes plus the value of every shared object.
/// Equality and hashing ignore the instance pointer.
#[derive(Clone)]
pub struct Configuration {
    instance: Arc<ProtocolInstance>,
    procs: Vec<LocalState>,
    objects: Vec<usize>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.procs == other.procs && self.objects == other.objects
    }
}

impl Eq for Configuration {}

impl Hash for Configuration {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.procs.hash(state);
        self.objects.hash(state);
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let objs: Vec<&str> = (0..self.objects.len())
            .map(|o| self.object_label(o))
            .collect();
        f.debug_struct("Configuration")
            .field("procs", &self.procs)
            .field("objects", &objs)
            .finish()
    }
}

/// What a single event did, for trace output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventRecord {
    Step {
        process: usize,
        object: String,
        op: String,
        response: String,
    },
    Noop {
        process: usize,
    },
    Crash {
        process: usize,
    },
}

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventRecord::Step {
                process,
                object,
                op,
                response,
            } => write!(f, "step {process} obj={object} op={op} resp={response}"),
            EventRecord::Noop { process } => write!(f, "step {process} noop"),
            EventRecord::Crash { process } => write!(f, "crash {process}"),
        }
    }
}

impl Configuration {
    pub fn initial(instance: &Arc<ProtocolInstance>) -> Self {
        let procs = instance
            .programs
            .iter()
            .zip(&instance.inputs)
            .map(|(p, &x)| p.initial_state(x))
            .collect();
        let objects = instance.objects.iter().map(|o| o.initial).collect();
        Configuration {
            instance: Arc::clone(instance),
            procs,
            objects,
        }
    }

    /// A configuration of `instance` with explicit states and object values.
    pub fn from_parts(
        instance: &Arc<ProtocolInstance>,
        procs: Vec<LocalState>,
        objects: Vec<usize>,
    ) -> Result<Self, ModelError> {
        if procs.len() != instance.procs() || objects.len() != instance.objects.len() {
            return Err(ModelError::BadInstance("layout mismatch".into()));
        }
        for (o, &v) in objects.iter().enumerate() {
            if v >= instance.objects[o].ty.values().len() {
                return Err(ModelError::BadInstance(format!(
                    "object {o} value out of range"
                )));
            }
        }
        Ok(Configuration {
            instance: Arc::clone(instance),
            procs,
            objects,
        })
    }

    pub fn instance(&self) -> &Arc<ProtocolInstance> {
        &self.instance
    }

    pub fn procs(&self) -> &[LocalState] {
        &self.procs
    }

    pub fn n(&self) -> usize {
        self.procs.len()
    }

    pub fn state(&self, i: usize) -> &LocalState {
        &self.procs[i]
    }

    pub fn objects(&self) -> &[usize] {
        &self.objects
    }

    pub fn object_value(&self, o: usize) -> usize {
        self.objects[o]
    }

    pub fn object_label(&self, o: usize) -> &str {
        self.instance.objects[o].ty.value_label(self.objects[o])
    }

    pub fn pending(&self, i: usize) -> Action {
        self.instance.programs[i].next_action(&self.procs[i])
    }

    pub fn with_state(&self, i: usize, state: LocalState) -> Self {
        let mut c = self.clone();
        c.procs[i] = state;
        c
    }

    /// Applies one event. Returns the new configuration, the trace record, and
    /// the value decided by this event, if any.
    pub fn apply(&self, event: Event) -> (Configuration, EventRecord, Option<Bit>) {
        let mut next = self.clone();
        match event {
            Event::Crash(i) => {
                let inst = &self.instance;
                next.procs[i] = inst.programs[i].initial_state(inst.inputs[i]);
                (next, EventRecord::Crash { process: i }, None)
            }
            Event::Step(i) => match self.pending(i) {
                Action::Idle => (next, EventRecord::Noop { process: i }, None),
                Action::Apply { object, op } => {
                    let obj = &self.instance.objects[object];
                    let t = obj.ty.step(self.objects[object], op);
                    next.objects[object] = t.next;
                    let response = obj.ty.response_label(t.response);
                    let state = self.instance.programs[i].transition(&self.procs[i], response);
                    let decided = match (self.procs[i].decided, state.decided) {
                        (None, Some(v)) => Some(v),
                        _ => None,
                    };
                    next.procs[i] = state;
                    let record = EventRecord::Step {
                        process: i,
                        object: obj.name.clone(),
                        op: obj.ty.op_label(op).to_string(),
                        response: response.to_string(),
                    };
                    (next, record, decided)
                }
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decision {
    /// Index of the deciding event within the execution.
    pub event: usize,
    pub process: usize,
    pub value: Bit,
}

/// `start`, the events applied to it, every intermediate configuration, and an
/// append-only log of decisions (which survives crash resets).
#[derive(Debug, Clone)]
pub struct Execution {
    configs: Vec<Configuration>,
    events: Vec<Event>,
    records: Vec<EventRecord>,
    decisions: Vec<Decision>,
}

impl Execution {
    pub fn empty(start: Configuration) -> Self {
        Execution {
            configs: vec![start],
            events: Vec::new(),
            records: Vec::new(),
            decisions: Vec::new(),
        }
    }

    pub fn start(&self) -> &Configuration {
        &self.configs[0]
    }

    pub fn last(&self) -> &Configuration {
        self.configs.last().expect("nonempty")
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Distinct decided values, ascending.
    pub fn decided_values(&self) -> Vec<Bit> {
        let mut v: Vec<Bit> = self.decisions.iter().map(|d| d.value).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn push(&mut self, event: Event) -> Result<(), ModelError> {
        let n = self.last().n();
        if event.process() >= n {
            return Err(ModelError::ProcessOutOfRange {
                index: event.process(),
                procs: n,
            });
        }
        let (next, record, decided) = self.last().apply(event);
        if let Some(value) = decided {
            self.decisions.push(Decision {
                event: self.events.len(),
                process: event.process(),
                value,
            });
        }
        self.configs.push(next);
        self.events.push(event);
        self.records.push(record);
        Ok(())
    }

    /// `self` followed by `exec(self.last(), schedule)`.
    pub fn extend(&mut self, schedule: &[Event]) -> Result<(), ModelError> {
        schedule.iter().try_for_each(|&e| self.push(e))
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &Execution) -> Execution {
        assert_eq!(self.last(), other.start(), "executions do not chain");
        let mut out = self.clone();
        let offset = out.events.len();
        out.configs.extend(other.configs[1..].iter().cloned());
        out.events.extend_from_slice(&other.events);
        out.records.extend(other.records.iter().cloned());
        out.decisions
            .extend(other.decisions.iter().map(|d| Decision {
                event: d.event + offset,
                ..*d
            }));
        out
    }

    pub fn prefix(&self, len: usize) -> Execution {
        let mut out = Execution::empty(self.start().clone());
        out.extend(&self.events[..len])
            .expect("prefix of a valid execution");
        out
    }

    /// One line per event: `step i obj=<name> op=<label> resp=<label>` or `crash i`.
    pub fn trace_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    pub fn trace(&self) -> Trace {
        Trace {
            schedule: self.events.clone(),
            events: self.records.clone(),
            decisions: self.decisions.clone(),
        }
    }
}

/// Serializable view of an execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub schedule: Vec<Event>,
    pub events: Vec<EventRecord>,
    pub decisions: Vec<Decision>,
}

/// `exec(config, schedule)`.
pub fn run(config: &Configuration, schedule: &[Event]) -> Result<Execution, ModelError> {
    let mut ex = Execution::empty(config.clone());
    ex.extend(schedule)?;
    Ok(ex)
}

/// Every sequence of distinct members of `procs` (the empty one included),
/// ordered by length and then lexicographically. `procs` need not be sorted.
pub fn once_schedules(procs: &[usize]) -> Vec<Vec<usize>> {
    let mut members = procs.to_vec();
    members.sort_unstable();
    members.dedup();
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..members.len() {
        let mut next = Vec::new();
        for s in &layer {
            for &p in &members {
                if !s.contains(&p) {
                    let mut t = s.clone();
                    t.push(p);
                    next.push(t);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// `c_k c_{k+1} ... c_{n-1}`.
pub fn lambda(k: usize, n: usize) -> Result<Vec<Event>, ModelError> {
    if k < 1 || k >= n {
        return Err(ModelError::LambdaOutOfRange {
            k,
            max: n.saturating_sub(1),
        });
    }
    Ok((k..n).map(Event::Crash).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetVariant {
    /// Crash inequality over the whole execution.
    E,
    /// Crash inequality in every prefix.
    EStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub z: u32,
    pub variant: BudgetVariant,
}

impl BudgetSpec {
    pub fn new(z: u32, variant: BudgetVariant) -> Result<Self, ModelError> {
        if z < 1 {
            return Err(ModelError::BadInstance(
                "budget z must be at least 1".into(),
            ));
        }
        Ok(BudgetSpec { z, variant })
    }

    pub fn e_star(z: u32) -> Self {
        BudgetSpec {
            z: z.max(1),
            variant: BudgetVariant::EStar,
        }
    }

    /// Membership of a schedule over `n` processes. Step and crash counts are
    /// what matter, so the schedule alone decides it.
    pub fn admits(&self, schedule: &[Event], n: usize) -> bool {
        let mut tracker = BudgetTracker::new(n);
        let mut ok_every_prefix = true;
        for &e in schedule {
            if e.process() >= n || e == Event::Crash(0) {
                return false;
            }
            tracker.record(e);
            if !tracker.holds(self.z) {
                ok_every_prefix = false;
            }
        }
        match self.variant {
            BudgetVariant::EStar => ok_every_prefix,
            BudgetVariant::E => tracker.holds(self.z),
        }
    }
}

/// Running step/crash counts for budget checks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BudgetTracker {
    pub steps: Vec<u64>,
    pub crashes: Vec<u64>,
}

impl BudgetTracker {
    pub fn new(n: usize) -> Self {
        BudgetTracker {
            steps: vec![0; n],
            crashes: vec![0; n],
        }
    }

    pub fn record(&mut self, e: Event) {
        match e {
            Event::Step(i) => self.steps[i] += 1,
            Event::Crash(i) => self.crashes[i] += 1,
        }
    }

    /// Crashes of `p_i` (i >= 1) allowed by `z·n·(steps of p_0..p_{i-1})`.
    pub fn allowance(&self, i: usize, z: u32) -> u64 {
        let n = self.steps.len() as u64;
        let lower: u64 = self.steps[..i].iter().sum();
        z as u64 * n * lower
    }

    pub fn holds(&self, z: u32) -> bool {
        self.crashes[0] == 0
            && (1..self.steps.len()).all(|i| self.crashes[i] <= self.allowance(i, z))
    }
}

/// Membership of `execution` in `E_z` / `E*_z` of its start configuration.
pub fn within_budget(execution: &Execution, spec: BudgetSpec) -> bool {
    spec.admits(execution.events(), execution.start().n())
}

/// Processes in `q` have equal states and objects in `objs` have equal values.
pub fn indistinguishable(
    a: &Configuration,
    b: &Configuration,
    q: &[usize],
    objs: &[usize],
) -> bool {
    q.iter().all(|&i| a.procs[i] == b.procs[i])
        && objs.iter().all(|&o| a.objects[o] == b.objects[o])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::recoverable_tnn;
    use crate::types::TnnParams;

    fn start(inputs: Vec<Bit>) -> Configuration {
        let inst = recoverable_tnn(TnnParams::new(5, 2).unwrap(), inputs).unwrap();
        Configuration::initial(&inst)
    }

    #[test]
    fn schedule_tokens() {
        let s = parse_schedule("p0,p1,c1,p0").unwrap();
        assert_eq!(
            s,
            vec![
                Event::Step(0),
                Event::Step(1),
                Event::Crash(1),
                Event::Step(0)
            ]
        );
        assert_eq!(format_schedule(&s), "p0,p1,c1,p0");
        assert_eq!(parse_schedule("").unwrap(), vec![]);
        assert!(parse_schedule("x1").is_err());
        assert!(parse_schedule("p").is_err());
        assert!(parse_schedule("p0,,p1").is_err());
    }

    #[test]
    fn empty_run() {
        let c = start(vec![0, 1]);
        let ex = run(&c, &[]).unwrap();
        assert_eq!(ex.configs(), &[c]);
        assert!(ex.is_empty());
    }

    #[test]
    fn first_step_reads() {
        let c = start(vec![1, 0]);
        let ex = run(&c, &[Event::Step(0)]).unwrap();
        assert_eq!(ex.last().object_label(0), "s");
        assert_eq!(ex.last().state(0).phase, 1);
        let ex = run(&c, &[Event::Step(0), Event::Step(0)]).unwrap();
        assert_eq!(ex.last().object_label(0), "s_{1,1}");
        assert_eq!(ex.last().state(0).decided, Some(1));
        assert_eq!(
            ex.trace_text(),
            "step 0 obj=O op=op_R resp=s\nstep 0 obj=O op=op_1 resp=1\n"
        );
    }

    #[test]
    fn crash_resets_only_the_process() {
        let c = start(vec![1, 0, 1]);
        let mid = run(&c, &parse_schedule("p0,p0,p2").unwrap()).unwrap();
        let crashed = run(mid.last(), &[Event::Crash(2)]).unwrap();
        let after = crashed.last();
        assert_eq!(after.state(2), c.state(2));
        assert_eq!(after.objects(), mid.last().objects());
        assert!(indistinguishable(mid.last(), after, &[0, 1], &[0]));
        assert!(!indistinguishable(mid.last(), after, &[2], &[0]));
    }

    #[test]
    fn decided_process_steps_are_noops() {
        let c = start(vec![0, 1]);
        let ex = run(&c, &parse_schedule("p0,p0,p0").unwrap()).unwrap();
        assert_eq!(ex.configs()[2], ex.configs()[3]);
        assert_eq!(ex.records()[2], EventRecord::Noop { process: 0 });
    }

    #[test]
    fn out_of_range_process() {
        let c = start(vec![0, 1]);
        assert!(matches!(
            run(&c, &[Event::Step(2)]),
            Err(ModelError::ProcessOutOfRange { index: 2, procs: 2 })
        ));
    }

    #[test]
    fn once_schedule_examples() {
        assert_eq!(
            once_schedules(&[0, 2]),
            vec![vec![], vec![0], vec![2], vec![0, 2], vec![2, 0]]
        );
        assert_eq!(once_schedules(&[]), vec![Vec::<usize>::new()]);
        assert_eq!(once_schedules(&[0, 1, 2]).len(), 16);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(
            lambda(3, 5).unwrap(),
            vec![Event::Crash(3), Event::Crash(4)]
        );
        assert_eq!(lambda(4, 5).unwrap(), vec![Event::Crash(4)]);
        assert_eq!(lambda(1, 2).unwrap(), vec![Event::Crash(1)]);
        assert!(lambda(0, 3).is_err());
        assert!(lambda(3, 3).is_err());
    }

    #[test]
    fn budget_example() {
        let s = parse_schedule("p1,c1,p0").unwrap();
        assert!(BudgetSpec::new(1, BudgetVariant::E).unwrap().admits(&s, 2));
        assert!(!BudgetSpec::new(1, BudgetVariant::EStar)
            .unwrap()
            .admits(&s, 2));
        let c0 = parse_schedule("p1,p0,c0").unwrap();
        for v in [BudgetVariant::E, BudgetVariant::EStar] {
            assert!(!BudgetSpec { z: 3, variant: v }.admits(&c0, 2));
            assert!(BudgetSpec { z: 1, variant: v }.admits(&parse_schedule("p1,p0,p1").unwrap(), 2));
        }
        assert!(BudgetSpec::new(0, BudgetVariant::E).is_err());
    }
}

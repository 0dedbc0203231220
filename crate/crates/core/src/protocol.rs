//! Deterministic per-process consensus programs.
//!
//! A program is a finite state machine over [`LocalState`]: it names the next
//! operation to apply (or idles once it has decided) and folds the response of
//! that operation into a new local state. Crashes reset a process to
//! `initial_state(input)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::types::{self, make_tnn, ObjectType, TnnParams, BOTTOM, OP_0, OP_1, OP_R, TNN_INITIAL};

/// Binary consensus input or decision.
pub type Bit = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalState {
    pub input: Bit,
    pub phase: u8,
    pub decided: Option<Bit>,
}

impl LocalState {
    pub fn fresh(input: Bit) -> Self {
        LocalState {
            input,
            phase: 0,
            decided: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Apply {
        object: usize,
        op: usize,
    },
    /// Output state: further steps are no-ops.
    Idle,
}

pub trait Program: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;

    fn initial_state(&self, input: Bit) -> LocalState {
        LocalState::fresh(input)
    }

    fn next_action(&self, state: &LocalState) -> Action;

    /// Local update after the operation named by `next_action(state)` returned
    /// `response`.
    fn transition(&self, state: &LocalState, response: &str) -> LocalState;
}

/// Programs, shared objects with initial values, and inputs.
#[derive(Debug)]
pub struct ProtocolInstance {
    pub name: String,
    pub programs: Vec<Arc<dyn Program>>,
    pub objects: Vec<SharedObject>,
    pub inputs: Vec<Bit>,
}

#[derive(Debug, Clone)]
pub struct SharedObject {
    pub name: String,
    pub ty: ObjectType,
    pub initial: usize,
}

impl ProtocolInstance {
    pub fn new(
        name: impl Into<String>,
        programs: Vec<Arc<dyn Program>>,
        objects: Vec<SharedObject>,
        inputs: Vec<Bit>,
    ) -> Result<Arc<Self>, ModelError> {
        if programs.is_empty() {
            return Err(ModelError::BadInstance("no processes".into()));
        }
        if programs.len() != inputs.len() {
            return Err(ModelError::BadInstance(format!(
                "{} programs but {} inputs",
                programs.len(),
                inputs.len()
            )));
        }
        if let Some(x) = inputs.iter().find(|&&x| x > 1) {
            return Err(ModelError::BadInstance(format!("input {x} is not binary")));
        }
        for o in &objects {
            if o.initial >= o.ty.values().len() {
                return Err(ModelError::BadInstance(format!(
                    "initial value of {} out of range",
                    o.name
                )));
            }
        }
        Ok(Arc::new(ProtocolInstance {
            name: name.into(),
            programs,
            objects,
            inputs,
        }))
    }

    pub fn procs(&self) -> usize {
        self.programs.len()
    }

    /// The same programs and objects with different inputs.
    pub fn with_inputs(&self, inputs: Vec<Bit>) -> Result<Arc<Self>, ModelError> {
        ProtocolInstance::new(
            self.name.clone(),
            self.programs.clone(),
            self.objects.clone(),
            inputs,
        )
    }
}

fn tnn_object(params: TnnParams) -> Result<(SharedObject, [usize; 3]), ModelError> {
    let ty = make_tnn(params)?;
    let ops = [
        ty.op_index(OP_0).expect("op_0"),
        ty.op_index(OP_1).expect("op_1"),
        ty.op_index(OP_R).expect("op_R"),
    ];
    let initial = ty.value_index(TNN_INITIAL).expect("s");
    Ok((
        SharedObject {
            name: "O".into(),
            ty,
            initial,
        },
        ops,
    ))
}

fn decision_from_tag(response: &str) -> Bit {
    match response {
        "1" => 1,
        // "0", and "⊥" once the object is broken
        _ => 0,
    }
}

/// Applies `op_x` once and decides the response.
#[derive(Debug)]
pub struct WaitFreeTnn {
    ops: [usize; 2],
}

impl Program for WaitFreeTnn {
    fn id(&self) -> &str {
        "wait-free-tnn"
    }

    fn next_action(&self, state: &LocalState) -> Action {
        if state.decided.is_some() {
            return Action::Idle;
        }
        Action::Apply {
            object: 0,
            op: self.ops[state.input as usize],
        }
    }

    fn transition(&self, state: &LocalState, response: &str) -> LocalState {
        LocalState {
            decided: Some(decision_from_tag(response)),
            phase: 1,
            ..*state
        }
    }
}

/// `op_R` first: a tagged value decides its tag, `⊥` decides 0, `s` moves on
/// to `op_x` whose response is decided.
#[derive(Debug)]
pub struct RecoverableTnn {
    ops: [usize; 3],
}

impl Program for RecoverableTnn {
    fn id(&self) -> &str {
        "recoverable-tnn"
    }

    fn next_action(&self, state: &LocalState) -> Action {
        match (state.decided, state.phase) {
            (Some(_), _) => Action::Idle,
            (None, 0) => Action::Apply {
                object: 0,
                op: self.ops[2],
            },
            (None, _) => Action::Apply {
                object: 0,
                op: self.ops[state.input as usize],
            },
        }
    }

    fn transition(&self, state: &LocalState, response: &str) -> LocalState {
        if state.phase == 0 {
            if response == TNN_INITIAL {
                return LocalState { phase: 1, ..*state };
            }
            let decided = match types::parse_tnn_value(response) {
                Some((v, _)) => v,
                None => {
                    debug_assert_eq!(response, BOTTOM);
                    0
                }
            };
            LocalState {
                phase: 2,
                decided: Some(decided),
                ..*state
            }
        } else {
            LocalState {
                phase: 2,
                decided: Some(decision_from_tag(response)),
                ..*state
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinProtocol {
    WaitFreeTnn,
    RecoverableTnn,
}

impl BuiltinProtocol {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "wait-free-tnn" => Some(BuiltinProtocol::WaitFreeTnn),
            "recoverable-tnn" => Some(BuiltinProtocol::RecoverableTnn),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinProtocol::WaitFreeTnn => "wait-free-tnn",
            BuiltinProtocol::RecoverableTnn => "recoverable-tnn",
        }
    }

    pub fn instantiate(
        self,
        params: TnnParams,
        inputs: Vec<Bit>,
    ) -> Result<Arc<ProtocolInstance>, ModelError> {
        match self {
            BuiltinProtocol::WaitFreeTnn => wait_free_tnn(params, inputs),
            BuiltinProtocol::RecoverableTnn => recoverable_tnn(params, inputs),
        }
    }
}

/// One shared `tnn` object at `s`; every process applies `op_input` and
/// decides the response. Any number of processes may be instantiated.
pub fn wait_free_tnn(
    params: TnnParams,
    inputs: Vec<Bit>,
) -> Result<Arc<ProtocolInstance>, ModelError> {
    let params = TnnParams::new(params.n, params.n_prime)?;
    let (object, ops) = tnn_object(params)?;
    let program: Arc<dyn Program> = Arc::new(WaitFreeTnn {
        ops: [ops[0], ops[1]],
    });
    ProtocolInstance::new(
        format!("wait-free-tnn:{},{}", params.n, params.n_prime),
        vec![program; inputs.len()],
        vec![object],
        inputs,
    )
}

/// The two-step recovery-safe program on one shared `tnn` object. Intended
/// for at most `n'` processes; more may be instantiated to exhibit the
/// failure beyond that bound.
pub fn recoverable_tnn(
    params: TnnParams,
    inputs: Vec<Bit>,
) -> Result<Arc<ProtocolInstance>, ModelError> {
    let params = TnnParams::new(params.n, params.n_prime)?;
    let (object, ops) = tnn_object(params)?;
    let program: Arc<dyn Program> = Arc::new(RecoverableTnn { ops });
    ProtocolInstance::new(
        format!("recoverable-tnn:{},{}", params.n, params.n_prime),
        vec![program; inputs.len()],
        vec![object],
        inputs,
    )
}

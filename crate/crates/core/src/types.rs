//! Finite deterministic object types.
//!
//! A type is a total transition table `(value, operation) -> (next value, response)`.
//! Values, operations and responses are opaque labels; responses live in their own
//! namespace even when a response is spelled like a value (as `op_R` on the
//! non-readable family does).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TypeError;

/// One cell of a transition table, as indices into the owning type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub next: usize,
    pub response: usize,
}

/// Immutable, validated sequential specification.
#[derive(Clone, PartialEq, Eq)]
pub struct ObjectType {
    name: String,
    values: Vec<String>,
    operations: Vec<String>,
    responses: Vec<String>,
    table: Vec<Transition>,
    initial: Option<usize>,
}

impl fmt::Debug for ObjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectType")
            .field("name", &self.name)
            .field("values", &self.values.len())
            .field("operations", &self.operations)
            .finish()
    }
}

/// Builder-side description of a transition, keyed by labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub next: String,
    pub response: String,
}

impl ObjectType {
    /// Builds a type from labelled transitions. `delta` is keyed by
    /// `(value, operation)`; every pair must be present exactly once.
    pub fn new(
        name: impl Into<String>,
        values: Vec<String>,
        operations: Vec<String>,
        delta: &BTreeMap<(String, String), Cell>,
        initial: Option<String>,
    ) -> Result<Self, TypeError> {
        let name = name.into();
        if values.is_empty() {
            return Err(TypeError::Empty("values"));
        }
        if operations.is_empty() {
            return Err(TypeError::Empty("operations"));
        }
        check_unique("value", &values)?;
        check_unique("operation", &operations)?;

        let value_ix: BTreeMap<&str, usize> = values
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let op_ix: BTreeMap<&str, usize> = operations
            .iter()
            .enumerate()
            .map(|(i, o)| (o.as_str(), i))
            .collect();

        for (v, o) in delta.keys() {
            if !value_ix.contains_key(v.as_str()) {
                return Err(TypeError::UnknownValue(v.clone()));
            }
            if !op_ix.contains_key(o.as_str()) {
                return Err(TypeError::UnknownOperation(o.clone()));
            }
        }

        let mut responses: Vec<String> = Vec::new();
        let mut resp_ix: BTreeMap<String, usize> = BTreeMap::new();
        let mut table = Vec::with_capacity(values.len() * operations.len());
        for v in &values {
            for o in &operations {
                let cell = delta.get(&(v.clone(), o.clone())).ok_or_else(|| {
                    TypeError::MissingTransition {
                        value: v.clone(),
                        operation: o.clone(),
                    }
                })?;
                let next = *value_ix.get(cell.next.as_str()).ok_or_else(|| {
                    TypeError::ImageOutsideValues {
                        value: v.clone(),
                        operation: o.clone(),
                        next: cell.next.clone(),
                    }
                })?;
                let response = *resp_ix.entry(cell.response.clone()).or_insert_with(|| {
                    responses.push(cell.response.clone());
                    responses.len() - 1
                });
                table.push(Transition { next, response });
            }
        }

        let initial = match initial {
            Some(label) => Some(
                *value_ix
                    .get(label.as_str())
                    .ok_or(TypeError::UnknownValue(label.clone()))?,
            ),
            None => None,
        };

        Ok(ObjectType {
            name,
            values,
            operations,
            responses,
            table,
            initial,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn operations(&self) -> &[String] {
        &self.operations
    }

    pub fn responses(&self) -> &[String] {
        &self.responses
    }

    pub fn initial_hint(&self) -> Option<&str> {
        self.initial.map(|i| self.values[i].as_str())
    }

    pub fn initial_index(&self) -> Option<usize> {
        self.initial
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }

    pub fn op_index(&self, label: &str) -> Option<usize> {
        self.operations.iter().position(|o| o == label)
    }

    pub fn response_index(&self, label: &str) -> Option<usize> {
        self.responses.iter().position(|r| r == label)
    }

    pub fn value_label(&self, ix: usize) -> &str {
        &self.values[ix]
    }

    pub fn op_label(&self, ix: usize) -> &str {
        &self.operations[ix]
    }

    pub fn response_label(&self, ix: usize) -> &str {
        &self.responses[ix]
    }

    /// Index-level transition. Panics on out-of-range indices.
    #[inline]
    pub fn step(&self, value: usize, op: usize) -> Transition {
        self.table[value * self.operations.len() + op]
    }

    /// Applies `op` to an object holding `value`.
    pub fn apply(&self, value: &str, op: &str) -> Result<(&str, &str), TypeError> {
        let v = self
            .value_index(value)
            .ok_or_else(|| TypeError::UnknownValue(value.to_string()))?;
        let o = self
            .op_index(op)
            .ok_or_else(|| TypeError::UnknownOperation(op.to_string()))?;
        let t = self.step(v, o);
        Ok((self.value_label(t.next), self.response_label(t.response)))
    }

    /// Returns the lexicographically least operation that returns the current
    /// value (as a response label) and leaves it unchanged, for every value.
    pub fn is_readable(&self) -> Option<&str> {
        let mut candidates: Vec<&str> = (0..self.operations.len())
            .filter(|&o| {
                (0..self.values.len()).all(|v| {
                    let t = self.step(v, o);
                    t.next == v && self.responses[t.response] == self.values[v]
                })
            })
            .map(|o| self.operations[o].as_str())
            .collect();
        candidates.sort_unstable();
        candidates.first().copied()
    }

    /// Value labels in lexicographic order, paired with their indices.
    pub fn values_sorted(&self) -> Vec<usize> {
        let mut ix: Vec<usize> = (0..self.values.len()).collect();
        ix.sort_by(|&a, &b| self.values[a].cmp(&self.values[b]));
        ix
    }

    /// Operation indices in lexicographic label order.
    pub fn operations_sorted(&self) -> Vec<usize> {
        let mut ix: Vec<usize> = (0..self.operations.len()).collect();
        ix.sort_by(|&a, &b| self.operations[a].cmp(&self.operations[b]));
        ix
    }

    pub fn to_file(&self) -> TypeFile {
        let mut delta: BTreeMap<String, BTreeMap<String, Cell>> = BTreeMap::new();
        for (o, op) in self.operations.iter().enumerate() {
            let row = delta.entry(op.clone()).or_default();
            for (v, value) in self.values.iter().enumerate() {
                let t = self.step(v, o);
                row.insert(
                    value.clone(),
                    Cell {
                        next: self.values[t.next].clone(),
                        response: self.responses[t.response].clone(),
                    },
                );
            }
        }
        TypeFile {
            name: self.name.clone(),
            values: self.values.clone(),
            operations: self.operations.clone(),
            initial: self.initial_hint().map(str::to_string),
            delta,
        }
    }

    pub fn from_file(file: TypeFile) -> Result<Self, TypeError> {
        let mut delta = BTreeMap::new();
        for (op, row) in file.delta {
            for (value, cell) in row {
                delta.insert((value, op.clone()), cell);
            }
        }
        ObjectType::new(
            file.name,
            file.values,
            file.operations,
            &delta,
            file.initial,
        )
    }

    pub fn from_json(text: &str) -> Result<Self, TypeError> {
        let file: TypeFile = serde_json::from_str(text)?;
        ObjectType::from_file(file)
    }

    /// Canonical JSON: map keys sorted, arrays in declaration order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("type file serializes")
    }
}

fn check_unique(kind: &'static str, labels: &[String]) -> Result<(), TypeError> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(TypeError::DuplicateLabel {
                kind,
                label: l.clone(),
            });
        }
    }
    Ok(())
}

/// On-disk form of a type definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeFile {
    pub name: String,
    pub values: Vec<String>,
    pub operations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    /// operation -> value -> transition
    pub delta: BTreeMap<String, BTreeMap<String, Cell>>,
}

/// Parameters of the non-readable family: `n > n_prime >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TnnParams {
    pub n: usize,
    pub n_prime: usize,
}

impl TnnParams {
    pub fn new(n: usize, n_prime: usize) -> Result<Self, TypeError> {
        if n_prime < 1 || n <= n_prime {
            return Err(TypeError::BadParams(format!(
                "need n > n' >= 1, got n={n}, n'={n_prime}"
            )));
        }
        Ok(TnnParams { n, n_prime })
    }
}

pub const TNN_INITIAL: &str = "s";
pub const TNN_BROKEN: &str = "s_⊥";
pub const BOTTOM: &str = "⊥";
pub const OP_0: &str = "op_0";
pub const OP_1: &str = "op_1";
pub const OP_R: &str = "op_R";

/// Label of `s_{x,i}`.
pub fn tnn_value(x: u8, i: usize) -> String {
    format!("s_{{{x},{i}}}")
}

/// Inverse of [`tnn_value`]; `None` for `s` and `s_⊥`.
pub fn parse_tnn_value(label: &str) -> Option<(u8, usize)> {
    let inner = label.strip_prefix("s_{")?.strip_suffix('}')?;
    let (x, i) = inner.split_once(',')?;
    let x: u8 = x.parse().ok()?;
    let i: usize = i.parse().ok()?;
    (x <= 1 && i >= 1).then_some((x, i))
}

/// The type with values `s`, `s_⊥`, `s_{x,i}` (x in {0,1}, 1 <= i < n) and
/// operations `op_0`, `op_1`, `op_R`.
pub fn make_tnn(params: TnnParams) -> Result<ObjectType, TypeError> {
    let TnnParams { n, n_prime } = TnnParams::new(params.n, params.n_prime)?;
    let mut values = vec![TNN_INITIAL.to_string(), TNN_BROKEN.to_string()];
    for x in 0..=1u8 {
        for i in 1..n {
            values.push(tnn_value(x, i));
        }
    }
    let operations: Vec<String> = [OP_0, OP_1, OP_R].iter().map(|s| s.to_string()).collect();

    let mut delta = BTreeMap::new();
    let mut put = |v: &str, o: &str, next: String, resp: &str| {
        delta.insert(
            (v.to_string(), o.to_string()),
            Cell {
                next,
                response: resp.to_string(),
            },
        );
    };

    put(TNN_INITIAL, OP_0, tnn_value(0, 1), "0");
    put(TNN_INITIAL, OP_1, tnn_value(1, 1), "1");
    put(TNN_INITIAL, OP_R, TNN_INITIAL.to_string(), TNN_INITIAL);
    for o in [OP_0, OP_1, OP_R] {
        put(TNN_BROKEN, o, TNN_BROKEN.to_string(), BOTTOM);
    }
    for x in 0..=1u8 {
        let tag = x.to_string();
        for i in 1..n {
            let here = tnn_value(x, i);
            let next = if i < n - 1 {
                tnn_value(x, i + 1)
            } else {
                TNN_BROKEN.to_string()
            };
            put(&here, OP_0, next.clone(), &tag);
            put(&here, OP_1, next, &tag);
            if i <= n_prime {
                put(&here, OP_R, here.clone(), &here);
            } else {
                put(&here, OP_R, TNN_BROKEN.to_string(), BOTTOM);
            }
        }
    }

    ObjectType::new(
        format!("tnn:{n},{n_prime}"),
        values,
        operations,
        &delta,
        Some(TNN_INITIAL.to_string()),
    )
}

fn check_domain(domain: &[String]) -> Result<(), TypeError> {
    if domain.is_empty() {
        return Err(TypeError::Empty("domain"));
    }
    check_unique("value", domain)
}

pub const READ: &str = "Read";
pub const WRITE_OK: &str = "ok";

/// Read/write register over a caller-bounded domain. Writes respond `ok`.
pub fn make_register(domain: &[String]) -> Result<ObjectType, TypeError> {
    check_domain(domain)?;
    let mut operations: Vec<String> = domain.iter().map(|d| format!("write_{d}")).collect();
    operations.push(READ.to_string());
    let mut delta = BTreeMap::new();
    for v in domain {
        for d in domain {
            delta.insert(
                (v.clone(), format!("write_{d}")),
                Cell {
                    next: d.clone(),
                    response: WRITE_OK.to_string(),
                },
            );
        }
        delta.insert(
            (v.clone(), READ.to_string()),
            Cell {
                next: v.clone(),
                response: v.clone(),
            },
        );
    }
    ObjectType::new(
        format!("register:{}", domain.len()),
        domain.to_vec(),
        operations,
        &delta,
        Some(domain[0].clone()),
    )
}

pub const TAS: &str = "TAS";

/// Test-and-set over {0, 1} with a Read operation.
pub fn make_test_and_set() -> ObjectType {
    let values = vec!["0".to_string(), "1".to_string()];
    let mut delta = BTreeMap::new();
    for v in &values {
        delta.insert(
            (v.clone(), TAS.to_string()),
            Cell {
                next: "1".to_string(),
                response: v.clone(),
            },
        );
        delta.insert(
            (v.clone(), READ.to_string()),
            Cell {
                next: v.clone(),
                response: v.clone(),
            },
        );
    }
    ObjectType::new(
        "tas",
        values,
        vec![TAS.to_string(), READ.to_string()],
        &delta,
        Some("0".to_string()),
    )
    .expect("test-and-set table is total")
}

pub fn cas_op(expected: &str, new: &str) -> String {
    format!("CAS({expected},{new})")
}

/// Compare-and-swap with one `CAS(a,b)` per ordered pair of domain values,
/// returning the old value, plus Read.
pub fn make_cas(domain: &[String]) -> Result<ObjectType, TypeError> {
    check_domain(domain)?;
    let mut operations = Vec::new();
    for a in domain {
        for b in domain {
            operations.push(cas_op(a, b));
        }
    }
    operations.push(READ.to_string());
    let mut delta = BTreeMap::new();
    for v in domain {
        for a in domain {
            for b in domain {
                delta.insert(
                    (v.clone(), cas_op(a, b)),
                    Cell {
                        next: if v == a { b.clone() } else { v.clone() },
                        response: v.clone(),
                    },
                );
            }
        }
        delta.insert(
            (v.clone(), READ.to_string()),
            Cell {
                next: v.clone(),
                response: v.clone(),
            },
        );
    }
    ObjectType::new(
        format!("cas:{}", domain.len()),
        domain.to_vec(),
        operations,
        &delta,
        Some(domain[0].clone()),
    )
}

/// `k` labels `"0"`, ..., `"k-1"`.
pub fn numeric_domain(k: usize) -> Vec<String> {
    (0..k).map(|i| i.to_string()).collect()
}

/// Parses builtin names: `tnn:n,n'`, `register:k`, `tas`, `cas:k`.
pub fn builtin(spec: &str) -> Result<ObjectType, TypeError> {
    let bad = || TypeError::BadBuiltin(spec.to_string());
    let (head, args) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    match (head, args) {
        ("tas", None) => Ok(make_test_and_set()),
        ("tnn", Some(a)) => {
            let (n, np) = a.split_once(',').ok_or_else(bad)?;
            let n = n.trim().parse().map_err(|_| bad())?;
            let np = np.trim().parse().map_err(|_| bad())?;
            make_tnn(TnnParams::new(n, np)?)
        }
        ("register", Some(k)) => make_register(&numeric_domain(k.parse().map_err(|_| bad())?)),
        ("cas", Some(k)) => make_cas(&numeric_domain(k.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

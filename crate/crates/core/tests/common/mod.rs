//! Test-only oracles, independent of the deciders' bitset search.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use proptest::prelude::*;
use rcons::characterization::Witness;
use rcons::execution::once_schedules;
use rcons::types::{Cell, ObjectType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prop {
    Discerning,
    Recording,
}

/// Per first process: for discerning, `j -> {(response, value)}`; for
/// recording, only key 0 is used and holds `{("", value)}`.
type Outcomes<'a> = Vec<BTreeMap<usize, BTreeSet<(&'a str, &'a str)>>>;

fn outcomes<'a>(ty: &'a ObjectType, u: &'a str, ops: &[&'a str], prop: Prop) -> Outcomes<'a> {
    let n = ops.len();
    let all: Vec<usize> = (0..n).collect();
    let mut out: Outcomes<'a> = vec![BTreeMap::new(); n];
    for sched in once_schedules(&all).into_iter().skip(1) {
        let mut value = u;
        let mut resp: HashMap<usize, &str> = HashMap::new();
        for &p in &sched {
            let (next, r) = ty.apply(value, ops[p]).unwrap();
            resp.insert(p, r);
            value = next;
        }
        let bucket = &mut out[sched[0]];
        match prop {
            Prop::Recording => {
                bucket.entry(0).or_default().insert(("", value));
            }
            Prop::Discerning => {
                for &j in &sched {
                    bucket.entry(j).or_default().insert((resp[&j], value));
                }
            }
        }
    }
    out
}

fn holds(u: &str, n: usize, team1: &[bool], o: &Outcomes<'_>, prop: Prop) -> bool {
    let keys: Vec<usize> = match prop {
        Prop::Discerning => (0..n).collect(),
        Prop::Recording => vec![0],
    };
    let mut sides: [BTreeSet<(&str, &str)>; 2] = Default::default();
    for j in keys {
        sides = Default::default();
        for (f, bucket) in o.iter().enumerate() {
            if let Some(s) = bucket.get(&j) {
                sides[team1[f] as usize].extend(s.iter().copied());
            }
        }
        if !sides[0].is_disjoint(&sides[1]) {
            return false;
        }
    }
    if prop == Prop::Recording {
        let size1 = team1.iter().filter(|&&t| t).count();
        let size0 = n - size1;
        let has = |s: &BTreeSet<(&str, &str)>| s.iter().any(|(_, v)| *v == u);
        if has(&sides[0]) && size1 != 1 {
            return false;
        }
        if has(&sides[1]) && size0 != 1 {
            return false;
        }
    }
    true
}

/// First witness in (value, partition mask, op tuple) order, by exhaustive
/// label-level enumeration.
pub fn brute_force(ty: &ObjectType, n: usize, prop: Prop) -> Option<Witness> {
    let mut values: Vec<&str> = ty.values().iter().map(String::as_str).collect();
    values.sort();
    let mut ops: Vec<&str> = ty.operations().iter().map(String::as_str).collect();
    ops.sort();
    let mut tuples: Vec<Vec<&str>> = vec![vec![]];
    for _ in 0..n {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                ops.iter().map(move |o| {
                    let mut t = t.clone();
                    t.push(*o);
                    t
                })
            })
            .collect();
    }
    for u in values {
        let table: Vec<Outcomes<'_>> = tuples.iter().map(|t| outcomes(ty, u, t, prop)).collect();
        for mask in 1u32..(1 << (n - 1)) {
            let team1: Vec<bool> = (0..n).map(|p| p > 0 && mask >> (p - 1) & 1 == 1).collect();
            for (t, o) in tuples.iter().zip(&table) {
                if holds(u, n, &team1, o, prop) {
                    return Some(Witness {
                        u: u.to_string(),
                        team0: (0..n).filter(|&p| !team1[p]).collect(),
                        team1: (0..n).filter(|&p| team1[p]).collect(),
                        ops: t.iter().map(|s| s.to_string()).collect(),
                    });
                }
            }
        }
    }
    None
}

/// Random total transition tables over 1..=3 values, 1..=3 operations and
/// 1..=3 response labels (some shared with value labels).
pub fn arb_type() -> impl Strategy<Value = ObjectType> {
    (1usize..=3, 1usize..=3, 1usize..=3).prop_flat_map(|(nv, no, nr)| {
        proptest::collection::vec((0..nv, 0..nr), nv * no).prop_map(move |cells| {
            let values: Vec<String> = (0..nv).map(|i| format!("v{i}")).collect();
            let ops: Vec<String> = (0..no).map(|i| format!("o{i}")).collect();
            // responses r0.. plus the value labels, so reads can occur
            let resp = |k: usize| {
                if k < nv && k.is_multiple_of(2) {
                    format!("v{k}")
                } else {
                    format!("r{k}")
                }
            };
            let mut delta = BTreeMap::new();
            for (idx, (next, r)) in cells.into_iter().enumerate() {
                let (v, o) = (idx / no, idx % no);
                delta.insert(
                    (values[v].clone(), ops[o].clone()),
                    Cell {
                        next: values[next].clone(),
                        response: resp(r),
                    },
                );
            }
            ObjectType::new("random", values, ops, &delta, None).unwrap()
        })
    })
}

/// Parses the transcribed transition table fixture.
pub fn read_table(text: &str) -> Vec<(String, String, String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            assert_eq!(f.len(), 4, "bad fixture line `{l}`");
            (f[0].into(), f[1].into(), f[2].into(), f[3].into())
        })
        .collect()
}

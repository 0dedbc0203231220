//! Deciders for the n-discerning and n-recording properties, their
//! re-verification, and the classification of configurations in which every
//! process is poised on one object.
//!
//! Two independent routes compute the same sets:
//!
//! * [`u_sets`] / [`r_sets`] enumerate `S(P)` explicitly and replay every
//!   schedule through [`ObjectType::apply`] on labels. The verifiers use this
//!   route.
//! * The deciders walk the schedule tree once per `(u, ops)` candidate on
//!   indices, bucket the outcomes by the first process, and then test every
//!   team partition with bitset unions.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::execution::{once_schedules, Configuration};
use crate::protocol::Action;
use crate::types::ObjectType;

/// Default ceiling on `|values|·2^(n-1)·|ops|^n·|S(P)|`.
pub const DEFAULT_SEARCH_CAP: u128 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Witness {
    pub u: String,
    pub team0: Vec<usize>,
    pub team1: Vec<usize>,
    pub ops: Vec<String>,
}

impl Witness {
    pub fn n(&self) -> usize {
        self.ops.len()
    }

    /// Team of `p_i`, if it is on one.
    pub fn team_of(&self, i: usize) -> Option<u8> {
        if self.team0.contains(&i) {
            Some(0)
        } else if self.team1.contains(&i) {
            Some(1)
        } else {
            None
        }
    }

    pub fn swapped(&self) -> Witness {
        Witness {
            team0: self.team1.clone(),
            team1: self.team0.clone(),
            ..self.clone()
        }
    }

    /// Teams partition `0..n` into two nonempty sets and every label exists.
    pub fn validate(&self, ty: &ObjectType) -> Result<(), SearchError> {
        let n = self.n();
        if self.team0.is_empty() || self.team1.is_empty() {
            return Err(SearchError::Invalid("both teams must be nonempty".into()));
        }
        let mut seen = vec![false; n];
        for &i in self.team0.iter().chain(&self.team1) {
            if i >= n || seen[i] {
                return Err(SearchError::Invalid(format!(
                    "teams are not a partition of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(SearchError::Invalid(format!("teams do not cover 0..{n}")));
        }
        if ty.value_index(&self.u).is_none() {
            return Err(SearchError::Invalid(format!("unknown value `{}`", self.u)));
        }
        if let Some(op) = self.ops.iter().find(|o| ty.op_index(o).is_none()) {
            return Err(SearchError::Invalid(format!("unknown operation `{op}`")));
        }
        Ok(())
    }
}

/// Applies `ops[p]` for each `p` of `schedule` in order, starting at `u`.
/// Returns the final value and each process's response (by position).
fn replay<'a>(
    ty: &'a ObjectType,
    u: &'a str,
    ops: &[String],
    schedule: &[usize],
) -> (&'a str, Vec<(usize, &'a str)>) {
    let mut value = u;
    let mut responses = Vec::with_capacity(schedule.len());
    for &p in schedule {
        let (next, resp) = ty.apply(value, &ops[p]).expect("validated labels");
        responses.push((p, resp));
        value = next;
    }
    (value, responses)
}

pub type ValueSet = BTreeSet<String>;
pub type PairSet = BTreeSet<(String, String)>;

/// `(U_0, U_1)`: final values of nonempty once-schedules, split by the team of
/// the first process.
pub fn u_sets(ty: &ObjectType, w: &Witness) -> Result<(ValueSet, ValueSet), SearchError> {
    w.validate(ty)?;
    let all: Vec<usize> = (0..w.n()).collect();
    let mut sets = (ValueSet::new(), ValueSet::new());
    for sched in once_schedules(&all).into_iter().skip(1) {
        let (v, _) = replay(ty, &w.u, &w.ops, &sched);
        let target = if w.team_of(sched[0]) == Some(0) {
            &mut sets.0
        } else {
            &mut sets.1
        };
        target.insert(v.to_string());
    }
    Ok(sets)
}

/// `(R_{0,j}, R_{1,j})`: `(response of p_j, final value)` over once-schedules
/// containing `p_j`, split by the team of the first process.
pub fn r_sets(ty: &ObjectType, w: &Witness, j: usize) -> Result<(PairSet, PairSet), SearchError> {
    w.validate(ty)?;
    if j >= w.n() {
        return Err(SearchError::Invalid(format!("process {j} out of range")));
    }
    let all: Vec<usize> = (0..w.n()).collect();
    let mut sets = (PairSet::new(), PairSet::new());
    for sched in once_schedules(&all) {
        if !sched.contains(&j) {
            continue;
        }
        let (v, resps) = replay(ty, &w.u, &w.ops, &sched);
        let r = resps
            .iter()
            .find(|(p, _)| *p == j)
            .expect("p_j scheduled")
            .1;
        let target = if w.team_of(sched[0]) == Some(0) {
            &mut sets.0
        } else {
            &mut sets.1
        };
        target.insert((r.to_string(), v.to_string()));
    }
    Ok(sets)
}

/// Checks the discerning condition for `w` by explicit enumeration.
pub fn verify_discerning(ty: &ObjectType, w: &Witness) -> Result<bool, SearchError> {
    for j in 0..w.n() {
        let (r0, r1) = r_sets(ty, w, j)?;
        if !r0.is_disjoint(&r1) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks both recording conditions for `w` by explicit enumeration.
pub fn verify_recording(ty: &ObjectType, w: &Witness) -> Result<bool, SearchError> {
    let (u0, u1) = u_sets(ty, w)?;
    if !u0.is_disjoint(&u1) {
        return Ok(false);
    }
    if u0.contains(&w.u) && w.team1.len() != 1 {
        return Ok(false);
    }
    if u1.contains(&w.u) && w.team0.len() != 1 {
        return Ok(false);
    }
    Ok(true)
}

/// `|S(P)|` for `n` processes.
pub fn once_schedule_count(n: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for k in 0..=n {
        total += term;
        term = term.saturating_mul((n - k) as u128);
    }
    total
}

/// `|values|·2^(n-1)·|ops|^n·|S(P)|`.
pub fn search_bound(ty: &ObjectType, n: usize) -> u128 {
    let ops = ty.operations().len() as u128;
    let partitions = 1u128
        .checked_shl(n.saturating_sub(1) as u32)
        .unwrap_or(u128::MAX);
    let tuples = (0..n).fold(1u128, |acc, _| acc.saturating_mul(ops));
    (ty.values().len() as u128)
        .saturating_mul(partitions)
        .saturating_mul(tuples)
        .saturating_mul(once_schedule_count(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Property {
    Discerning,
    Recording,
}

/// Outcome buckets for one `(u, ops)` candidate, indexed by first process.
struct Buckets {
    n: usize,
    words: usize,
    /// discerning: `[first][j]` bitsets over `response·|V| + value`;
    /// recording: `[first]` bitsets over values.
    bits: Vec<u64>,
}

impl Buckets {
    fn slot(&self, first: usize, j: usize) -> usize {
        (first * self.n + j) * self.words
    }

    fn set(&mut self, first: usize, j: usize, bit: usize) {
        let base = self.slot(first, j);
        self.bits[base + bit / 64] |= 1 << (bit % 64);
    }

    fn union_into(&self, out: &mut [u64], first: usize, j: usize) {
        let base = self.slot(first, j);
        for (o, b) in out.iter_mut().zip(&self.bits[base..base + self.words]) {
            *o |= b;
        }
    }
}

struct Walker<'a> {
    ty: &'a ObjectType,
    ops: &'a [usize],
    property: Property,
    buckets: Buckets,
    responses: Vec<usize>,
}

impl Walker<'_> {
    fn walk(&mut self, value: usize, used: u32, first: usize) {
        let n = self.ops.len();
        let nv = self.ty.values().len();
        for p in 0..n {
            if used & (1 << p) != 0 {
                continue;
            }
            let t = self.ty.step(value, self.ops[p]);
            let first = if used == 0 { p } else { first };
            let used = used | (1 << p);
            self.responses[p] = t.response;
            match self.property {
                Property::Recording => self.buckets.set(first, 0, t.next),
                Property::Discerning => {
                    for j in 0..n {
                        if used & (1 << j) != 0 {
                            self.buckets.set(first, j, self.responses[j] * nv + t.next);
                        }
                    }
                }
            }
            self.walk(t.next, used, first);
        }
    }
}

fn buckets_for(ty: &ObjectType, u: usize, ops: &[usize], property: Property) -> Buckets {
    let n = ops.len();
    let nv = ty.values().len();
    let width = match property {
        Property::Discerning => ty.responses().len() * nv,
        Property::Recording => nv,
    };
    let words = width.div_ceil(64);
    let js = match property {
        Property::Discerning => n,
        Property::Recording => 1,
    };
    let mut walker = Walker {
        ty,
        ops,
        property,
        buckets: Buckets {
            n: js,
            words,
            bits: vec![0; n * js * words],
        },
        responses: vec![0; n],
    };
    walker.walk(u, 0, 0);
    walker.buckets
}

/// Team-1 mask: bit `i-1` set means `p_i` is on team 1; `p_0` is always on team 0.
fn team_of(mask: u32, p: usize) -> usize {
    if p == 0 {
        0
    } else {
        (mask >> (p - 1) & 1) as usize
    }
}

fn partition_ok(u: usize, b: &Buckets, n: usize, mask: u32, property: Property) -> bool {
    let mut sides = [vec![0u64; b.words], vec![0u64; b.words]];
    let js = if property == Property::Discerning {
        n
    } else {
        1
    };
    for j in 0..js {
        for s in sides.iter_mut() {
            s.iter_mut().for_each(|w| *w = 0);
        }
        for f in 0..n {
            b.union_into(&mut sides[team_of(mask, f)], f, j);
        }
        if sides[0].iter().zip(&sides[1]).any(|(a, c)| a & c != 0) {
            return false;
        }
    }
    if property == Property::Recording {
        let hit = |s: &Vec<u64>| s[u / 64] >> (u % 64) & 1 == 1;
        let size1 = mask.count_ones() as usize;
        let size0 = n - size1;
        if hit(&sides[0]) && size1 != 1 {
            return false;
        }
        if hit(&sides[1]) && size0 != 1 {
            return false;
        }
    }
    true
}

fn decode_tuple(mut index: u64, n: usize, sorted_ops: &[usize]) -> Vec<usize> {
    let k = sorted_ops.len() as u64;
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = sorted_ops[(index % k) as usize];
        index /= k;
    }
    out
}

fn decide(
    ty: &ObjectType,
    n: usize,
    property: Property,
    cap: u128,
) -> Result<Option<Witness>, SearchError> {
    if n < 2 {
        return Err(SearchError::Invalid(format!(
            "n must be at least 2, got {n}"
        )));
    }
    if n > 20 {
        return Err(SearchError::Invalid(format!(
            "n = {n} is beyond enumeration"
        )));
    }
    let bound = search_bound(ty, n);
    if bound > cap {
        return Err(SearchError::TooLarge { bound, cap });
    }
    let sorted_ops = ty.operations_sorted();
    let tuples = (sorted_ops.len() as u64).pow(n as u32);
    let masks = 1u32..(1u32 << (n - 1));

    for u in ty.values_sorted() {
        let best = (0..tuples)
            .into_par_iter()
            .filter_map(|t| {
                let ops = decode_tuple(t, n, &sorted_ops);
                let b = buckets_for(ty, u, &ops, property);
                masks
                    .clone()
                    .find(|&m| partition_ok(u, &b, n, m, property))
                    .map(|m| (m, t))
            })
            .min();
        if let Some((mask, t)) = best {
            let ops = decode_tuple(t, n, &sorted_ops);
            let (mut team0, mut team1) = (Vec::new(), Vec::new());
            for p in 0..n {
                if team_of(mask, p) == 0 {
                    team0.push(p)
                } else {
                    team1.push(p)
                }
            }
            return Ok(Some(Witness {
                u: ty.value_label(u).to_string(),
                team0,
                team1,
                ops: ops.iter().map(|&o| ty.op_label(o).to_string()).collect(),
            }));
        }
    }
    Ok(None)
}

/// First witness, in canonical order, that `ty` is n-discerning.
pub fn is_n_discerning(ty: &ObjectType, n: usize) -> Result<Option<Witness>, SearchError> {
    decide(ty, n, Property::Discerning, DEFAULT_SEARCH_CAP)
}

pub fn is_n_discerning_capped(
    ty: &ObjectType,
    n: usize,
    cap: u128,
) -> Result<Option<Witness>, SearchError> {
    decide(ty, n, Property::Discerning, cap)
}

/// First witness, in canonical order, that `ty` is n-recording.
pub fn is_n_recording(ty: &ObjectType, n: usize) -> Result<Option<Witness>, SearchError> {
    decide(ty, n, Property::Recording, DEFAULT_SEARCH_CAP)
}

pub fn is_n_recording_capped(
    ty: &ObjectType,
    n: usize,
    cap: u128,
) -> Result<Option<Witness>, SearchError> {
    decide(ty, n, Property::Recording, cap)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassLabel {
    Recording,
    Hiding {
        team: u8,
    },
    /// `value(O, C p_i R_i) = value(O, C p_j R_j)` with `p_i` on team 0 and
    /// `p_j` on team 1.
    Overlap {
        p_i: usize,
        r_i: Vec<usize>,
        p_j: usize,
        r_j: Vec<usize>,
        value: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigClassification {
    pub labels: Vec<ClassLabel>,
    pub u0: Vec<String>,
    pub u1: Vec<String>,
}

impl ConfigClassification {
    pub fn is_recording(&self) -> bool {
        self.labels.contains(&ClassLabel::Recording)
    }

    pub fn hiding(&self) -> Option<u8> {
        self.labels.iter().find_map(|l| match l {
            ClassLabel::Hiding { team } => Some(*team),
            _ => None,
        })
    }

    pub fn overlap(&self) -> Option<&ClassLabel> {
        self.labels
            .iter()
            .find(|l| matches!(l, ClassLabel::Overlap { .. }))
    }
}

/// Classifies `config`, in which every process is poised to apply
/// `poised_ops[i]` to object `obj`, as recording, v-hiding, or overlapping.
pub fn classify_configuration(
    config: &Configuration,
    obj: usize,
    teams: (&[usize], &[usize]),
    poised_ops: &[String],
) -> Result<ConfigClassification, SearchError> {
    let n = config.n();
    let inst = config.instance();
    if obj >= inst.objects.len() {
        return Err(SearchError::Invalid(format!("object {obj} out of range")));
    }
    if poised_ops.len() != n {
        return Err(SearchError::Invalid(format!(
            "{} poised operations for {n} processes",
            poised_ops.len()
        )));
    }
    let ty = &inst.objects[obj].ty;
    for (i, op) in poised_ops.iter().enumerate() {
        let want = ty
            .op_index(op)
            .ok_or_else(|| SearchError::Invalid(format!("unknown operation `{op}`")))?;
        if config.pending(i)
            != (Action::Apply {
                object: obj,
                op: want,
            })
        {
            return Err(SearchError::Invalid(format!(
                "p{i} is not poised to apply {op} to object {obj}"
            )));
        }
    }
    let w = Witness {
        u: config.object_label(obj).to_string(),
        team0: teams.0.to_vec(),
        team1: teams.1.to_vec(),
        ops: poised_ops.to_vec(),
    };
    let (u0, u1) = u_sets(ty, &w)?;
    let mut labels = Vec::new();
    if !u0.is_disjoint(&u1) {
        labels.push(first_overlap(ty, &w));
    } else {
        let in0 = u0.contains(&w.u);
        let in1 = u1.contains(&w.u);
        if in0 {
            labels.push(ClassLabel::Hiding { team: 0 });
        }
        if in1 {
            labels.push(ClassLabel::Hiding { team: 1 });
        }
        let recording = (!in0 || w.team1.len() == 1) && (!in1 || w.team0.len() == 1);
        if recording {
            labels.insert(0, ClassLabel::Recording);
        }
    }
    Ok(ConfigClassification {
        labels,
        u0: u0.into_iter().collect(),
        u1: u1.into_iter().collect(),
    })
}

fn first_overlap(ty: &ObjectType, w: &Witness) -> ClassLabel {
    let n = w.n();
    let mut team0: Vec<usize> = w.team0.clone();
    let mut team1: Vec<usize> = w.team1.clone();
    team0.sort_unstable();
    team1.sort_unstable();
    let runs = |p: usize| -> Vec<(Vec<usize>, String)> {
        let others: Vec<usize> = (0..n).filter(|&q| q != p).collect();
        once_schedules(&others)
            .into_iter()
            .map(|rest| {
                let mut sched = vec![p];
                sched.extend(&rest);
                let (v, _) = replay(ty, &w.u, &w.ops, &sched);
                (rest, v.to_string())
            })
            .collect()
    };
    type Runs = Vec<(Vec<usize>, String)>;
    let right: Vec<(usize, Runs)> = team1.iter().map(|&j| (j, runs(j))).collect();
    for &i in &team0 {
        for (r_i, v) in runs(i) {
            for (j, rs) in &right {
                if let Some((r_j, _)) = rs.iter().find(|(_, w)| *w == v) {
                    return ClassLabel::Overlap {
                        p_i: i,
                        r_i,
                        p_j: *j,
                        r_j: r_j.clone(),
                        value: v,
                    };
                }
            }
        }
    }
    unreachable!("U-sets intersect, so some pair of runs agrees")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{make_cas, make_register, make_test_and_set, make_tnn, TnnParams};

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn set(xs: &[&str]) -> ValueSet {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn tnn(n: usize, np: usize) -> ObjectType {
        make_tnn(TnnParams::new(n, np).unwrap()).unwrap()
    }

    fn w(u: &str, t0: &[usize], t1: &[usize], ops: &[&str]) -> Witness {
        Witness {
            u: u.into(),
            team0: t0.to_vec(),
            team1: t1.to_vec(),
            ops: labels(ops),
        }
    }

    #[test]
    fn u_sets_tnn() {
        let (u0, u1) = u_sets(&tnn(5, 2), &w("s", &[0], &[1], &["op_0", "op_1"])).unwrap();
        assert_eq!(u0, set(&["s_{0,1}", "s_{0,2}"]));
        assert_eq!(u1, set(&["s_{1,1}", "s_{1,2}"]));
    }

    #[test]
    fn u_sets_read_and_tas() {
        let reg = make_register(&labels(&["0", "1"])).unwrap();
        let (u0, u1) = u_sets(&reg, &w("1", &[0], &[1], &["Read", "Read"])).unwrap();
        assert_eq!((u0, u1), (set(&["1"]), set(&["1"])));
        let tas = make_test_and_set();
        let (u0, u1) = u_sets(&tas, &w("0", &[0], &[1], &["TAS", "TAS"])).unwrap();
        assert_eq!((u0, u1), (set(&["1"]), set(&["1"])));
    }

    #[test]
    fn r_sets_tas() {
        let tas = make_test_and_set();
        let (r0, r1) = r_sets(&tas, &w("0", &[0], &[1], &["TAS", "TAS"]), 0).unwrap();
        let pair = |r: &str, v: &str| {
            [(r.to_string(), v.to_string())]
                .into_iter()
                .collect::<PairSet>()
        };
        assert_eq!(r0, pair("0", "1"));
        assert_eq!(r1, pair("1", "1"));
    }

    #[test]
    fn r_sets_register_writes_overlap() {
        let reg = make_register(&labels(&["⊥", "0", "1"])).unwrap();
        let wit = w("⊥", &[0], &[1], &["write_0", "write_1"]);
        let (r0, r1) = r_sets(&reg, &wit, 0).unwrap();
        assert!(!r0.is_disjoint(&r1));
        assert!(!verify_discerning(&reg, &wit).unwrap());
    }

    #[test]
    fn invalid_witnesses() {
        let tas = make_test_and_set();
        assert!(u_sets(&tas, &w("0", &[0, 1], &[], &["TAS", "TAS"])).is_err());
        assert!(u_sets(&tas, &w("0", &[0], &[0], &["TAS", "TAS"])).is_err());
        assert!(u_sets(&tas, &w("7", &[0], &[1], &["TAS", "TAS"])).is_err());
        assert!(r_sets(&tas, &w("0", &[0], &[1], &["TAS", "TAS"]), 2).is_err());
    }

    #[test]
    fn tas_discerning_not_recording() {
        let tas = make_test_and_set();
        assert_eq!(
            is_n_discerning(&tas, 2).unwrap(),
            Some(w("0", &[0], &[1], &["TAS", "TAS"]))
        );
        assert_eq!(is_n_recording(&tas, 2).unwrap(), None);
    }

    #[test]
    fn binary_register_not_discerning() {
        let reg = make_register(&labels(&["0", "1"])).unwrap();
        assert_eq!(is_n_discerning(&reg, 2).unwrap(), None);
    }

    #[test]
    fn tnn_recording_witness() {
        assert_eq!(
            is_n_recording(&tnn(5, 2), 2).unwrap(),
            Some(w("s", &[0], &[1], &["op_0", "op_1"]))
        );
    }

    #[test]
    fn cas_with_bottom_initial_value_records() {
        let cas = make_cas(&labels(&["⊥", "0", "1"])).unwrap();
        let wit = w("⊥", &[0, 1], &[2], &["CAS(⊥,0)", "CAS(⊥,0)", "CAS(⊥,1)"]);
        assert!(verify_recording(&cas, &wit).unwrap());
        let found = is_n_recording(&cas, 3).unwrap().unwrap();
        assert!(verify_recording(&cas, &found).unwrap());
    }

    #[test]
    fn guard_reports_bound() {
        let t = tnn(5, 2);
        assert_eq!(search_bound(&t, 6), 10 * 32 * 729 * 1957);
        match is_n_discerning_capped(&t, 3, 10) {
            Err(SearchError::TooLarge { bound, cap }) => {
                assert_eq!(bound, 10 * 4 * 27 * 16);
                assert_eq!(cap, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(is_n_discerning(&t, 1).is_err());
    }

    #[test]
    fn schedule_counts() {
        let want = [1u128, 2, 5, 16, 65, 326, 1957];
        for (n, &c) in want.iter().enumerate() {
            assert_eq!(once_schedule_count(n), c);
        }
    }
}

mod common;

use std::sync::Arc;

use common::arb_type;
use proptest::prelude::*;
use rcons::characterization::{
    is_n_discerning, is_n_recording, verify_discerning, verify_recording,
};
use rcons::execution::{run, within_budget, BudgetSpec, Configuration, Event};
use rcons::explorer::{check_consensus, valency, ExploreBounds, Valency, Verdict};
use rcons::protocol::{recoverable_tnn, wait_free_tnn, LocalState, ProtocolInstance};
use rcons::types::TnnParams;

fn instance() -> impl Strategy<Value = Arc<ProtocolInstance>> {
    (
        any::<bool>(),
        prop::sample::select(vec![(2, 1), (3, 1), (4, 2), (5, 2)]),
        2usize..=3,
    )
        .prop_flat_map(|(recoverable, (n, np), procs)| {
            proptest::collection::vec(0..2u8, procs).prop_map(move |inputs| {
                let p = TnnParams::new(n, np).unwrap();
                if recoverable {
                    recoverable_tnn(p, inputs).unwrap()
                } else {
                    wait_free_tnn(p, inputs).unwrap()
                }
            })
        })
}

fn with_schedule(max_len: usize) -> impl Strategy<Value = (Arc<ProtocolInstance>, Vec<Event>)> {
    instance().prop_flat_map(move |inst| {
        let n = inst.procs();
        let ev = prop_oneof![3 => (0..n).prop_map(Event::Step), 1 => (0..n).prop_map(Event::Crash)];
        (Just(inst), proptest::collection::vec(ev, 0..=max_len))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn swapped_witness_still_verifies((ty, n) in (arb_type(), 2usize..=3)) {
        if let Some(w) = is_n_discerning(&ty, n).unwrap() {
            prop_assert!(verify_discerning(&ty, &w.swapped()).unwrap());
        }
        if let Some(w) = is_n_recording(&ty, n).unwrap() {
            prop_assert!(verify_recording(&ty, &w.swapped()).unwrap());
        }
    }

    #[test]
    fn recording_witnesses_are_well_formed((ty, n) in (arb_type(), 2usize..=3)) {
        if let Some(w) = is_n_recording(&ty, n).unwrap() {
            prop_assert!(w.validate(&ty).is_ok());
            prop_assert!(!w.team0.is_empty() && !w.team1.is_empty());
            prop_assert!(w.team0.contains(&0));
        }
    }

    #[test]
    fn crash_resets_only_the_crashed_process((inst, s) in with_schedule(12), victim in 0usize..3) {
        let victim = victim % inst.procs();
        let ex = run(&Configuration::initial(&inst), &s).unwrap();
        let before = ex.last().clone();
        let mut crashed = ex.clone();
        crashed.push(Event::Crash(victim)).unwrap();
        let after = crashed.last();
        prop_assert_eq!(*after.state(victim), LocalState::fresh(inst.inputs[victim]));
        for i in (0..inst.procs()).filter(|&i| i != victim) {
            prop_assert_eq!(after.state(i), before.state(i));
        }
        prop_assert_eq!(after.objects(), before.objects());
        prop_assert_eq!(crashed.decided_values(), ex.decided_values());
    }

    #[test]
    fn decided_processes_stay_decided((inst, s) in with_schedule(16)) {
        let ex = run(&Configuration::initial(&inst), &s).unwrap();
        for (k, w) in ex.configs().windows(2).enumerate() {
            let e = ex.events()[k];
            for i in 0..inst.procs() {
                if e != Event::Crash(i) && w[0].state(i).decided.is_some() {
                    prop_assert_eq!(w[0].state(i), w[1].state(i));
                }
            }
        }
        // every decision is logged at the event that produced it
        for d in ex.decisions() {
            prop_assert_eq!(ex.configs()[d.event + 1].state(d.process).decided, Some(d.value));
        }
    }

    #[test]
    fn wait_free_decides_input_without_contention((inst, i) in (instance(), 0usize..3)) {
        let i = i % inst.procs();
        let ex = run(&Configuration::initial(&inst), &[Event::Step(i), Event::Step(i)]).unwrap();
        prop_assert_eq!(ex.last().state(i).decided, Some(inst.inputs[i]));
    }

    #[test]
    fn explorer_violations_replay_within_budget(inst in instance(), max_events in 1usize..=8, crashes in 0u32..=2) {
        let bounds = ExploreBounds::new(max_events, crashes, 1);
        match check_consensus(&inst, &bounds).unwrap() {
            Verdict::Violation(v) => {
                prop_assert!(v.replays(&bounds));
                prop_assert!(within_budget(&v.trace, BudgetSpec::e_star(1)));
                prop_assert!(v.trace.len() <= max_events + bounds.liveness_cap);
            }
            Verdict::Ok { states } | Verdict::Inconclusive { states, .. } => prop_assert!(states >= 1),
        }
    }

    #[test]
    fn valency_witnesses_decide_their_value(inst in instance(), max_events in 1usize..=6) {
        let bounds = ExploreBounds::new(max_events, 1, 1);
        let rep = valency(&Configuration::initial(&inst), &[], &bounds).unwrap();
        for v in 0..2u8 {
            if let Some(w) = &rep.witnesses[v as usize] {
                prop_assert!(w.decided_values().contains(&v));
                prop_assert!(within_budget(w, BudgetSpec::e_star(1)));
                prop_assert!(w.len() <= max_events);
            }
        }
        match rep.verdict {
            Valency::Bivalent => prop_assert!(rep.witnesses.iter().all(Option::is_some)),
            Valency::Univalent { value } => {
                prop_assert!(rep.witnesses[value as usize].is_some());
                prop_assert!(rep.witnesses[1 - value as usize].is_none());
            }
            Valency::Unknown => prop_assert!(rep.witnesses.iter().any(Option::is_none)),
        }
    }

    #[test]
    fn larger_bounds_never_lose_decisions(inst in instance(), k in 1usize..=5) {
        let small = valency(&Configuration::initial(&inst), &[], &ExploreBounds::new(k, 1, 1)).unwrap();
        let large = valency(&Configuration::initial(&inst), &[], &ExploreBounds::new(k + 1, 1, 1)).unwrap();
        for v in 0..2 {
            prop_assert!(small.witnesses[v].is_none() || large.witnesses[v].is_some());
        }
    }
}

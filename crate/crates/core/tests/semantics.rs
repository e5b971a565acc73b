mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cscoop::bench::Benchmark;
use cscoop::compiler::{Action, Program};
use cscoop::explorer::{explore, ExploreOptions, Verdict};
use cscoop::model::{canonical_key, validate, Configuration, ProcessorId, Status};
use cscoop::semantics::{enabled_actions, fire, fire_by, initial_state, Discipline, Firing, SemanticsOptions};

use common::{bench, compile, MICRO};

const FIFO: SemanticsOptions = SemanticsOptions {
    discipline: Discipline::Fifo,
    gc: false,
};
const BAG: SemanticsOptions = SemanticsOptions {
    discipline: Discipline::Bag,
    gc: false,
};

fn reachable(p: &Program, opts: SemanticsOptions) -> Vec<Configuration> {
    let e = explore(
        p,
        ExploreOptions {
            semantics: opts,
            ..ExploreOptions::default()
        },
    )
    .unwrap();
    e.space.states.into_iter().map(|s| s.config).collect()
}

fn pending_kind(p: &Program, c: &Configuration, f: Firing) -> &'static str {
    let Firing::Action { processor, edge } = f else {
        return "dequeue";
    };
    let frame = c.processors[&processor].stack.last().unwrap();
    p.method(frame.method).edges[edge as usize].action.kind_name()
}

fn class_of(p: &Program, c: &Configuration, pid: ProcessorId) -> String {
    let o = c.objects.values().find(|o| o.handler == pid).unwrap();
    p.class_name(o.class).to_string()
}

#[test]
fn initial_philosophers_have_one_firing() {
    let p = bench(Benchmark::Dpe, &[2]);
    let c = initial_state(&p, FIFO);
    let enabled = enabled_actions(&p, &c, FIFO);
    assert_eq!(enabled.len(), 1);
    assert_eq!(enabled[0].processor(), c.root);
    assert_eq!(c.processors.len(), 1);
    assert_eq!(c.objects.len(), 1);
}

/// The root holds the lock on a separate worker and is about to send it a
/// command; the command is asynchronous.
#[test]
fn commands_are_asynchronous() {
    let p = compile(MICRO[1].1);
    let mut c = initial_state(&p, FIFO);
    loop {
        let enabled = enabled_actions(&p, &c, FIFO);
        let root_cmd = enabled
            .iter()
            .find(|f| f.processor() == c.root && pending_kind(&p, &c, **f) == "command");
        if let Some(f) = root_cmd {
            let worker = *c.processors[&c.root]
                .holds
                .keys()
                .next()
                .expect("lock held before the call");
            assert_eq!(c.processors[&worker].locked_by, Some(c.root));
            let before = c.processors[&c.root].stack.last().unwrap().clone();
            let next = fire(&p, &c, *f, FIFO);
            let after = next.processors[&next.root].stack.last().unwrap();
            assert_eq!(
                (&before.params, &before.locals, before.result),
                (&after.params, &after.locals, after.result)
            );
            assert_ne!(before.state, after.state);
            assert_eq!(next.processors[&next.root].status, Status::Running);
            // the request reached the worker, which is now serving it
            let w = &next.processors[&worker];
            let serving = w.stack.last().map(|f| p.method(f.method).label.as_str());
            assert_eq!(serving, Some("WORKER.work"));
            return;
        }
        c = fire(&p, &c, enabled[0], FIFO);
    }
}

#[test]
fn queries_block_the_caller_until_the_result_is_back() {
    for (prog, params) in [(Benchmark::Pc, 2), (Benchmark::Ds, 1)] {
        let p = bench(prog, &[params]);
        for c in reachable(&p, FIFO) {
            for (id, q) in &c.processors {
                if matches!(q.status, Status::Waiting { .. }) {
                    assert!(enabled_actions(&p, &c, FIFO).iter().all(|f| f.processor() != *id));
                }
            }
        }
    }
    let p = compile(MICRO[3].1);
    let waited = reachable(&p, FIFO)
        .iter()
        .any(|c| matches!(c.processors[&c.root].status, Status::Waiting { .. }));
    assert!(waited);
}

#[test]
fn multi_lock_is_atomic() {
    let p = bench(Benchmark::Dpe, &[2]);
    let states = reachable(&p, FIFO);
    let mut both = 0;
    for c in &states {
        for (id, q) in &c.processors {
            if class_of(&p, c, *id) != "PHILOSOPHER" {
                continue;
            }
            let forks = q.holds.keys().filter(|h| class_of(&p, c, **h) == "FORK").count();
            assert!(forks == 0 || forks == 2, "{id} holds {forks} fork(s)");
            both += usize::from(forks == 2);
        }
    }
    assert!(both > 0);
}

#[test]
fn lock_takes_both_forks_in_one_step() {
    let p = bench(Benchmark::Dpe, &[2]);
    let states = reachable(&p, FIFO);
    let eat = p.find("PHILOSOPHER", "eat").unwrap().id;
    let (c, f) = states
        .iter()
        .find_map(|c| {
            enabled_actions(&p, c, FIFO)
                .into_iter()
                .find(|f| {
                    let top = c.processors[&f.processor()].stack.last().unwrap();
                    top.method == eat && pending_kind(&p, c, *f) == "lock"
                })
                .map(|f| (c, f))
        })
        .unwrap();
    let next = fire(&p, c, f, FIFO);
    let pid = f.processor();
    assert_eq!(next.processors[&pid].holds.len(), 2);
    for h in next.processors[&pid].holds.keys() {
        assert_eq!(next.processors[h].locked_by, Some(pid));
    }
}

#[test]
fn idle_processor_serves_the_head_of_its_queue() {
    let p = bench(Benchmark::Dpe, &[2]);
    let live = p.find("PHILOSOPHER", "live").unwrap().id;
    let make = p.find("PHILOSOPHER", "make").unwrap().id;
    // every philosopher serves make before live
    for c in reachable(&p, FIFO) {
        for q in c.processors.values() {
            if let Some(f) = q.stack.first() {
                if f.method == live {
                    assert!(q.queue.iter().all(|r| r.method != make));
                }
            }
            assert!(q.status != Status::Idle || q.queue.is_empty());
        }
    }
}

#[test]
fn redundant_assignment_only_advances() {
    let p = compile("class APP root x: INTEGER make do x := 0 end end");
    let c = initial_state(&p, FIFO);
    let f = enabled_actions(&p, &c, FIFO)[0];
    let Firing::Action { processor, edge } = f else {
        unreachable!()
    };
    let g = p.method(p.root);
    assert!(matches!(g.edges[edge as usize].action, Action::Assign { .. }));
    assert!(g.is_final(g.edges[edge as usize].to));
    // the frame reaches its end and is disposed of; memory is unchanged
    let after = fire(&p, &c, f, FIFO);
    assert_eq!(after.objects, c.objects);
    assert!(after.processors[&processor].stack.is_empty());
    assert_eq!(after.processors[&processor].status, Status::Idle);
}

#[test]
fn stabilization_is_confluent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (b, params) in [
        (Benchmark::Dpe, &[2][..]),
        (Benchmark::Pc, &[2][..]),
        (Benchmark::Cs, &[][..]),
    ] {
        let p = bench(b, params);
        let states = reachable(&p, FIFO);
        for i in 0..200 {
            let c = &states[(i * 7919) % states.len()];
            for f in enabled_actions(&p, c, FIFO) {
                let expected = canonical_key(&fire(&p, c, f, FIFO));
                let shuffled = fire_by(&p, c, f, FIFO, &mut |n| rng.gen_range(0..n));
                assert_eq!(canonical_key(&shuffled), expected, "{b}");
            }
        }
    }
}

#[test]
fn fifo_states_are_bag_states() {
    for (b, params) in [(Benchmark::Dpe, &[2][..]), (Benchmark::Pc, &[3][..])] {
        let p = bench(b, params);
        let fifo: BTreeSet<Vec<u8>> = reachable(&p, FIFO).iter().map(canonical_key).collect();
        let bag: BTreeSet<Vec<u8>> = reachable(&p, BAG).iter().map(canonical_key).collect();
        assert!(fifo.is_subset(&bag), "{b}");
        assert!(bag.len() >= fifo.len());
    }
    let p = bench(Benchmark::Dpe, &[2]);
    let e = explore(
        &p,
        ExploreOptions {
            semantics: BAG,
            ..ExploreOptions::default()
        },
    )
    .unwrap();
    assert!(matches!(e.verdict, Verdict::Safe));
}

#[test]
fn reachable_states_are_well_formed() {
    let mut programs: Vec<Program> = MICRO.iter().map(|(_, src)| compile(src)).collect();
    programs.push(bench(Benchmark::Dpe, &[2]));
    programs.push(bench(Benchmark::Dpb, &[2]));
    programs.push(bench(Benchmark::Pc, &[2]));
    for p in &programs {
        for opts in [FIFO, BAG, SemanticsOptions { gc: true, ..FIFO }] {
            for c in reachable(p, opts) {
                let problems = validate(&c, p);
                assert!(problems.is_empty(), "{problems:?}");
            }
        }
    }
}

#[test]
fn garbage_collection_keeps_verdicts() {
    for (b, params) in [(Benchmark::Dpe, &[2][..]), (Benchmark::Dpb, &[2][..])] {
        let p = bench(b, params);
        let plain = explore(&p, ExploreOptions::default()).unwrap();
        let gc = explore(
            &p,
            ExploreOptions {
                semantics: SemanticsOptions { gc: true, ..FIFO },
                ..ExploreOptions::default()
            },
        )
        .unwrap();
        assert_eq!(plain.verdict.kind(), gc.verdict.kind(), "{b}");
        assert!(gc.space.stats.states <= plain.space.stats.states, "{b}");
    }
}

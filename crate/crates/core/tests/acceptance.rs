//! One line per acceptance criterion; exits non-zero if any fails.
//!
//! `cargo test -p cscoop-core --test acceptance`

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cscoop::bench::Benchmark;
use cscoop::compiler::Program;
use cscoop::explorer::{detect_lock_cycle, explore, Checks, Exploration, ExploreOptions, Verdict, ViolationKind};
use cscoop::model::{canonical_key, Configuration, ProcessorId};
use cscoop::semantics::{Discipline, SemanticsOptions};

use common::oracle::reachable_keys;
use common::{bench, compile, permute, MICRO};

const LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn full(p: &Program) -> Exploration {
    explore(p, ExploreOptions::default()).expect("no state limit set")
}

fn with(p: &Program, opts: ExploreOptions) -> Exploration {
    explore(p, opts).expect("no state limit set")
}

fn kind(e: &Exploration) -> Option<ViolationKind> {
    e.verdict.kind()
}

fn class_of(p: &Program, c: &Configuration, pid: ProcessorId) -> String {
    let o = c
        .objects
        .values()
        .find(|o| o.handler == pid)
        .expect("processor handles an object");
    p.class_name(o.class).to_string()
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn verdicts() -> Outcome {
    let cases: [(Benchmark, &[i64], Option<ViolationKind>); 7] = [
        (Benchmark::Dpb, &[2], Some(ViolationKind::Deadlock)),
        (Benchmark::Dpb, &[3], Some(ViolationKind::Deadlock)),
        (Benchmark::Dpe, &[2], None),
        (Benchmark::Dpe, &[3], None),
        (Benchmark::Pc, &[5], None),
        (Benchmark::Ds, &[2, 2, 2], None),
        (Benchmark::Cs, &[], None),
    ];
    let mut report = Vec::new();
    for (b, params, expected) in cases {
        let p = bench(b, params);
        let start = Instant::now();
        let e = full(&p);
        let took = start.elapsed();
        let args: Vec<String> = params.iter().map(i64::to_string).collect();
        let name = format!("{b}({})", args.join(","));
        ensure(kind(&e) == expected, || format!("{name}: {}", e.verdict.name()))?;
        ensure(took <= LIMIT, || format!("{name} took {took:.1?}"))?;
        report.push(format!(
            "{name} {} ({} states, {took:.1?})",
            e.verdict.name(),
            e.space.stats.states
        ));
    }
    Ok(report.join(", "))
}

fn deadlock_pattern() -> Outcome {
    let p = bench(Benchmark::Dpb, &[2]);
    let e = full(&p);
    let Verdict::CounterexampleFound { state, .. } = &e.verdict else {
        return Err(e.verdict.name());
    };
    let c = &e.space.states[*state].config;
    let cycle = detect_lock_cycle(&p, c).ok_or("no lock cycle in the final configuration")?;
    ensure(cycle.len() == 2, || format!("cycle of length {}", cycle.len()))?;
    let philosophers = c
        .processors
        .keys()
        .filter(|id| class_of(&p, c, **id) == "PHILOSOPHER")
        .count();
    ensure(philosophers == 2, || format!("{philosophers} philosophers"))?;
    for (i, pid) in cycle.iter().enumerate() {
        let other = cycle[1 - i];
        ensure(class_of(&p, c, *pid) == "PHILOSOPHER", || {
            format!("{pid} is not a philosopher")
        })?;
        let held: Vec<ProcessorId> = c.processors[pid].holds.keys().copied().collect();
        ensure(held.len() == 1 && class_of(&p, c, held[0]) == "FORK", || {
            format!("{pid} holds {held:?}")
        })?;
        // the fork this one waits for is the one the other holds
        let theirs = *c.processors[&other].holds.keys().next().expect("checked above");
        ensure(c.processors[&theirs].locked_by == Some(other), || {
            format!("{theirs} not locked by {other}")
        })?;
    }
    Ok(format!("2-cycle {} <-> {}", cycle[0], cycle[1]))
}

fn first_hit_dominance() -> Outcome {
    let mut report = Vec::new();
    for n in [2, 3] {
        let p = bench(Benchmark::Dpb, &[n]);
        let all = full(&p).space.stats.states;
        let first = with(
            &p,
            ExploreOptions {
                stop_at_first: true,
                ..ExploreOptions::default()
            },
        );
        ensure(kind(&first) == Some(ViolationKind::Deadlock), || first.verdict.name())?;
        let first = first.space.stats.states;
        ensure(first <= all, || format!("dpb({n}): {first} > {all}"))?;
        report.push(format!("dpb({n}) {first} <= {all}"));
    }
    Ok(report.join(", "))
}

fn oracle_equivalence() -> Outcome {
    let mut checked = 0;
    for (name, src) in MICRO {
        let p = compile(src);
        let e = full(&p);
        let found: BTreeSet<Vec<u8>> = e.space.index.keys().cloned().collect();
        let (expected, _) = reachable_keys(&p, SemanticsOptions::default());
        let processors = e
            .space
            .states
            .iter()
            .map(|s| s.config.processors.len())
            .max()
            .unwrap_or(0);
        ensure(processors <= 3 && found.len() <= 30, || format!("{name} is too large"))?;
        ensure(found == expected, || {
            format!("{name}: {} vs {} keys", found.len(), expected.len())
        })?;
        checked += 1;
    }
    ensure(checked >= 5, || format!("only {checked} programs"))?;
    Ok(format!("{checked} programs agree"))
}

fn canonicalization() -> Outcome {
    let p = bench(Benchmark::Dpe, &[2]);
    let states = full(&p).space.states;
    let mut failures = 0;
    let mut runs = 0;
    for i in 0..10 {
        let c = &states[(i * 7919 + 13) % states.len()].config;
        let key = canonical_key(c);
        for seed in 0..100 {
            runs += 1;
            failures += usize::from(canonical_key(&permute(c, (i * 1000 + seed) as u64)) != key);
        }
    }
    ensure(failures == 0, || {
        format!("{failures} of {runs} permutations changed the key")
    })?;
    Ok(format!("{runs} permutations, 0 failures"))
}

fn fifo_within_bag() -> Outcome {
    let bag = SemanticsOptions {
        discipline: Discipline::Bag,
        gc: false,
    };
    let mut report = Vec::new();
    for (b, n) in [(Benchmark::Dpe, 2), (Benchmark::Pc, 3)] {
        let p = bench(b, &[n]);
        let f = full(&p);
        let g = with(
            &p,
            ExploreOptions {
                semantics: bag,
                ..ExploreOptions::default()
            },
        );
        let fifo: BTreeSet<&Vec<u8>> = f.space.index.keys().collect();
        let missing = fifo.iter().filter(|k| !g.space.index.contains_key(**k)).count();
        ensure(missing == 0, || {
            format!("{b}({n}): {missing} FIFO states not reached under bag")
        })?;
        if b == Benchmark::Dpe {
            ensure(matches!(g.verdict, Verdict::Safe), || {
                format!("bag {b}({n}): {}", g.verdict.name())
            })?;
        }
        report.push(format!("{b}({n}) {} <= {}", f.space.stats.states, g.space.stats.states));
    }
    Ok(report.join(", "))
}

fn atomic_multi_lock() -> Outcome {
    let p = bench(Benchmark::Dpe, &[2]);
    let e = full(&p);
    let mut holding = 0;
    for s in &e.space.states {
        let c = &s.config;
        for (id, q) in &c.processors {
            if class_of(&p, c, *id) != "PHILOSOPHER" {
                continue;
            }
            let forks = q.holds.keys().filter(|h| class_of(&p, c, **h) == "FORK").count();
            ensure(forks != 1, || format!("{id} holds one fork"))?;
            holding += usize::from(forks == 2);
        }
    }
    ensure(holding > 0, || "no philosopher ever holds both forks".into())?;
    Ok(format!("{} states scanned", e.space.stats.states))
}

fn determinism() -> Outcome {
    for b in Benchmark::ALL {
        let p = bench(b, &[]);
        let runs: Vec<(usize, usize, String)> = (0..3)
            .map(|_| {
                let e = full(&p);
                (e.space.stats.states, e.space.stats.transitions, e.verdict.name())
            })
            .collect();
        ensure(runs.iter().all(|r| *r == runs[0]), || format!("{b}: {runs:?}"))?;
    }
    Ok("3 runs of each benchmark agree".into())
}

fn monotonicity() -> Outcome {
    let mut report = Vec::new();
    for b in [Benchmark::Dpe, Benchmark::Dpb] {
        let two = full(&bench(b, &[2])).space.stats.states;
        let three = full(&bench(b, &[3])).space.stats.states;
        ensure(three > two, || format!("{b}: {three} <= {two}"))?;
        report.push(format!("{b} {two} < {three}"));
    }
    Ok(report.join(", "))
}

fn detector_breadth() -> Outcome {
    let void = compile(
        "class APP root
           make local f: FORK do f.use end
         end
         class FORK use do end end",
    );
    let e = full(&void);
    ensure(kind(&e) == Some(ViolationKind::VoidCall), || {
        format!("void call: {}", e.verdict.name())
    })?;
    let ensure_false = compile(
        "class APP root
           x: INTEGER
           make do bump end
           bump do x := x + 1 end ensure x = 2
         end",
    );
    let e = with(
        &ensure_false,
        ExploreOptions {
            checks: Checks::only(&[ViolationKind::Postcondition]),
            ..ExploreOptions::default()
        },
    );
    ensure(kind(&e) == Some(ViolationKind::Postcondition), || {
        format!("postcondition: {}", e.verdict.name())
    })?;
    Ok("void-call and postcondition found".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("verdicts", verdicts),
        ("deadlock pattern", deadlock_pattern),
        ("first-hit dominance", first_hit_dominance),
        ("oracle equivalence", oracle_equivalence),
        ("canonicalization", canonicalization),
        ("fifo within bag", fifo_within_bag),
        ("atomic multi-lock", atomic_multi_lock),
        ("determinism", determinism),
        ("monotonicity", monotonicity),
        ("detector breadth", detector_breadth),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(note) => println!("PASS {:>2} {name}: {note}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

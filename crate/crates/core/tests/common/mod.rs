//! Shared helpers for the integration tests.
#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cscoop::bench::{compile_source, Benchmark};
use cscoop::compiler::{CompileOptions, Program};
use cscoop::model::{Configuration, ObjectId, ProcessorId};

pub fn compile(src: &str) -> Program {
    compile_with(src, CompileOptions::default())
}

pub fn compile_with(src: &str, options: CompileOptions) -> Program {
    compile_source("test.cscoop", src, options).unwrap_or_else(|d| panic!("{d}"))
}

pub fn bench(b: Benchmark, params: &[i64]) -> Program {
    b.compile(params, CompileOptions::default())
}

/// Small programs with at most three processors and a few dozen states.
pub const MICRO: &[(&str, &str)] = &[
    (
        "assign",
        "class APP root
           x: INTEGER
           make do x := 1 end
         end",
    ),
    (
        "command",
        "class APP root
           make local w: separate WORKER do create w; poke (w) end
           poke (w: separate WORKER) do w.work end
         end
         class WORKER
           n: INTEGER
           work do n := n + 1 end
         end",
    ),
    (
        "two_workers",
        "class APP root
           make
             local a, b: separate WORKER
             do
               create a
               create b
               poke (a)
               poke (b)
             end
           poke (w: separate WORKER) do w.work end
         end
         class WORKER
           n: INTEGER
           work do n := n + 1 end
         end",
    ),
    (
        "query",
        "class APP root
           v: INTEGER
           make local w: separate WORKER do create w.make (5); fetch (w) end
           fetch (w: separate WORKER) do v := w.value + 1 end
         end
         class WORKER
           n: INTEGER
           make (k: INTEGER) do n := k end
           value: INTEGER do Result := n end
         end",
    ),
    (
        "wait_condition",
        "class APP root
           make
             local b: separate BOX; c: separate CLIENT
             do
               create b
               create c
               start (c, b)
               fill (b)
             end
           start (c: separate CLIENT; b: separate BOX) do c.run (b) end
           fill (b: separate BOX) do b.put end
         end
         class BOX
           full: BOOLEAN
           put do full := true end
         end
         class CLIENT
           run (b: separate BOX) require b.full do end
         end",
    ),
    (
        "local_calls",
        "class APP root
           total: INTEGER
           make
             local i: INTEGER
             do
               from i := 0 until i = 3 loop
                 if even (i) then add (i) else add (10) end
                 i := i + 1
               end
             end
           even (k: INTEGER): BOOLEAN do Result := k // 2 * 2 = k end
           add (k: INTEGER) do total := total + k end
         end",
    ),
];

/// Renames processors and objects by random bijections onto spread-out ids.
pub fn permute(c: &Configuration, seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ps: Vec<u32> = (0..c.processors.len() as u32).map(|i| 3 * i + 5).collect();
    let mut os: Vec<u32> = (0..c.objects.len() as u32).map(|i| 7 * i + 1).collect();
    ps.shuffle(&mut rng);
    os.shuffle(&mut rng);
    let pmap: BTreeMap<ProcessorId, ProcessorId> = c
        .processors
        .keys()
        .copied()
        .zip(ps.into_iter().map(ProcessorId))
        .collect();
    let omap: BTreeMap<ObjectId, ObjectId> = c.objects.keys().copied().zip(os.into_iter().map(ObjectId)).collect();
    c.map_ids(|p| pmap[&p], |o| omap[&o])
}

mod common;

use std::sync::OnceLock;

use cscoop::bench::Benchmark;
use cscoop::explorer::{explore, ExploreOptions};
use cscoop::model::{canonical_key, Configuration};
use proptest::prelude::*;

use common::{bench, permute};

fn states() -> &'static Vec<Configuration> {
    static STATES: OnceLock<Vec<Configuration>> = OnceLock::new();
    STATES.get_or_init(|| {
        let p = bench(Benchmark::Dpe, &[2]);
        let e = explore(&p, ExploreOptions::default()).unwrap();
        e.space.states.into_iter().map(|s| s.config).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn renaming_keeps_the_key(index in 0usize..10_000, seed in any::<u64>()) {
        let all = states();
        let c = &all[index % all.len()];
        let renamed = permute(c, seed);
        prop_assert_ne!(&renamed, c);
        prop_assert_eq!(canonical_key(&renamed), canonical_key(c));
    }
}

#[test]
fn distinct_states_have_distinct_keys() {
    let all = states();
    let mut keys: Vec<Vec<u8>> = all.iter().map(canonical_key).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), all.len());
}

#[test]
fn keys_depend_on_the_program() {
    let a = bench(Benchmark::Dpe, &[2]);
    let b = bench(Benchmark::Dpb, &[2]);
    let ka = canonical_key(&cscoop::semantics::initial_state(&a, Default::default()));
    let kb = canonical_key(&cscoop::semantics::initial_state(&b, Default::default()));
    assert_ne!(ka, kb);
    assert_eq!(&ka[..4], b"CSK1");
}

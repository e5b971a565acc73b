mod common;

use cscoop::bench::Benchmark;
use cscoop::compiler::Program;
use cscoop::explorer::{explore, ExploreOptions, StateSpace};
use cscoop::export::{config_to_dot, from_gxl, space_to_dot, to_gxl};
use cscoop::model::{canonical_key, Configuration, Status};
use cscoop::semantics::initial_state;

use common::{bench, compile, MICRO};

fn space(p: &Program) -> StateSpace {
    explore(p, ExploreOptions::default()).unwrap().space
}

fn count_typed(doc: &str, element: &str, ty: &str) -> usize {
    let doc = roxmltree::Document::parse(doc).unwrap();
    doc.descendants()
        .filter(|n| n.has_tag_name(element))
        .filter(|n| {
            n.children()
                .any(|t| t.has_tag_name("type") && t.attribute(("http://www.w3.org/1999/xlink", "href")) == Some(ty))
        })
        .count()
}

#[test]
fn gxl_round_trips() {
    let mut programs: Vec<Program> = MICRO.iter().map(|(_, s)| compile(s)).collect();
    programs.extend([
        bench(Benchmark::Dpb, &[2]),
        bench(Benchmark::Pc, &[2]),
        bench(Benchmark::Ds, &[1, 1, 1]),
    ]);
    for p in &programs {
        for s in space(p).states {
            let doc = to_gxl(p, &s.config);
            let back = from_gxl(p, &doc).unwrap_or_else(|e| panic!("{e}\n{doc}"));
            assert_eq!(back, s.config);
            assert_eq!(canonical_key(&back), canonical_key(&s.config));
        }
    }
}

#[test]
fn gxl_of_an_empty_program() {
    let p = compile("class APP root make do end end");
    let doc = to_gxl(&p, &initial_state(&p, Default::default()));
    assert_eq!(count_typed(&doc, "node", "#Processor"), 1);
    assert_eq!(count_typed(&doc, "node", "#Object"), 1);
    assert_eq!(count_typed(&doc, "edge", "#handler"), 1);
}

#[test]
fn gxl_after_philosopher_setup() {
    let p = bench(Benchmark::Dpe, &[2]);
    let states = space(&p).states;
    assert_eq!(count_typed(&to_gxl(&p, &states[0].config), "node", "#Processor"), 1);
    // the root has created two forks and two philosophers once it is done
    let done = states
        .iter()
        .find(|s| s.config.processors[&s.config.root].status == Status::Idle)
        .unwrap();
    assert_eq!(count_typed(&to_gxl(&p, &done.config), "node", "#Processor"), 5);
}

#[test]
fn gxl_shows_a_held_lock() {
    let p = compile(MICRO[1].1);
    let states = space(&p).states;
    let locked: &Configuration = states
        .iter()
        .map(|s| &s.config)
        .find(|c| !c.processors[&c.root].holds.is_empty())
        .unwrap();
    let doc = to_gxl(&p, locked);
    assert_eq!(count_typed(&doc, "edge", "#lock"), 1);
    assert!(count_typed(&doc, "edge", "#current_state") >= 1);
}

#[test]
fn gxl_reader_rejects_foreign_documents() {
    let p = compile("class APP root make do end end");
    let q = compile("class APP root x: INTEGER make do end end");
    let doc = to_gxl(&p, &initial_state(&p, Default::default()));
    assert!(from_gxl(&q, &doc).is_err());
    assert!(from_gxl(&p, "<gxl>").is_err());
    assert!(from_gxl(&p, &doc.replace("#Processor", "#Thing")).is_err());
}

#[test]
fn dot_marks_violating_states() {
    let p = bench(Benchmark::Dpb, &[2]);
    let s = space(&p);
    let dot = space_to_dot(&p, &s);
    assert_eq!(dot.matches("fillcolor=red").count(), s.violating().count());
    assert!(dot.contains("violation=\"deadlock"));
    assert_eq!(dot.matches(" -> ").count(), s.transitions.len());

    let p = bench(Benchmark::Dpe, &[2]);
    assert!(!space_to_dot(&p, &space(&p)).contains("fillcolor=red"));

    // a call on Void right away: the initial state is the only one
    let p = compile("class APP root make local a: APP do a.make end end");
    let s = space(&p);
    assert_eq!(s.states.len(), 1);
    let dot = space_to_dot(&p, &s);
    assert_eq!(dot.matches("[label=").count(), 1);
    assert!(dot.contains("violation=\"void-call\""));
    assert!(!dot.contains("->"));
}

#[test]
fn configuration_dot_names_everything() {
    let p = compile(MICRO[1].1);
    let states = space(&p).states;
    for s in &states {
        let dot = config_to_dot(&p, &s.config);
        for id in s.config.processors.keys() {
            assert!(dot.contains(&format!("  {id} [shape=box")));
        }
    }
}

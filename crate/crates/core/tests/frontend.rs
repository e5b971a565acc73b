mod common;

use cscoop::bench::Benchmark;
use cscoop::frontend::ast::strip_positions;
use cscoop::frontend::pretty::pretty;
use cscoop::frontend::{parse_units, SourceUnit};

use common::MICRO;

fn parse(text: &str) -> cscoop::frontend::ast::SyntaxTree {
    let mut tree = parse_units(&[SourceUnit::new("t.cscoop", text)]).unwrap_or_else(|d| panic!("{d}\n{text}"));
    strip_positions(&mut tree);
    tree
}

#[test]
fn printing_and_reparsing_gives_the_same_tree() {
    let sources = Benchmark::ALL
        .iter()
        .map(|b| b.source())
        .chain(MICRO.iter().map(|(_, s)| *s));
    for src in sources {
        let tree = parse(src);
        let printed = pretty(&tree);
        assert_eq!(parse(&printed), tree, "{printed}");
        // printing is a fixed point after one round
        assert_eq!(pretty(&parse(&printed)), printed);
    }
}

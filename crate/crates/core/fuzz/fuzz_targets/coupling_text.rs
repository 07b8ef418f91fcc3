#![no_main]

use libfuzzer_sys::fuzz_target;
use quenchmap::encoding::CouplingGraph;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(graph) = CouplingGraph::from_text(text) {
        let again = CouplingGraph::from_text(&graph.to_text()).expect("canonical text parses");
        assert_eq!(again, graph);
    }
});

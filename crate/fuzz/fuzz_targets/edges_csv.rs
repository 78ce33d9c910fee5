#![no_main]

use libfuzzer_sys::fuzz_target;
use netsnr::geograph::{GeoGraph, GeoNode, LengthMode};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(edges) = netsnr::io::parse_edges_csv(text) {
            // attach the edges to a small fixed node set
            let nodes = (0..8).map(|i| GeoNode::new(i, i as f64, (i * i % 5) as f64)).collect();
            if let Ok(g) = GeoGraph::build(nodes, edges, LengthMode::Euclidean) {
                let _ = netsnr::geograph::betweenness(&g);
                let _ = netsnr::geograph::diameter(&g);
            }
        }
    }
});

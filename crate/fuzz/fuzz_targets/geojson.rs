#![no_main]

use libfuzzer_sys::fuzz_target;
use netsnr::geograph::{GeoGraph, LengthMode};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((nodes, edges)) = netsnr::io::parse_geojson(text) {
            let _ = GeoGraph::build(nodes, edges, LengthMode::Euclidean);
        }
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(adj) = netsnr::io::parse_adjacency_csv(text) {
            let _ = netsnr::smooth::mrf_penalty(&adj);
        }
    }
});

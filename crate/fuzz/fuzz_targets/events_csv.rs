#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = netsnr::io::parse_events_csv(text) {
            // whatever parses must survive a write/read cycle
            assert_eq!(netsnr::io::parse_events_csv(&netsnr::io::events_csv(&p)).unwrap(), p);
        }
    }
});

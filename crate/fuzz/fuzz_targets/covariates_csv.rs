#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = netsnr::io::parse_covariates_csv(text) {
            let _ = netsnr::covariates::summarize(&t);
        }
    }
});

#![no_main]

use ctp_mirror::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|src: &str| {
    if let Ok(cfg) = RunConfig::from_toml(src) {
        // Resolution must accept or reject, never panic.
        let _ = cfg.resolved();
    }
});

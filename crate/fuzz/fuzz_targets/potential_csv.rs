#![no_main]

use ctp_mirror::io::read_potential_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_potential_csv(data);
});

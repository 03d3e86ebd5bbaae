#![no_main]

use ctp_mirror::io::{read_trajectory_csv, trajectory_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(tr) = read_trajectory_csv(data) {
        let again = read_trajectory_csv(trajectory_csv(&tr).as_slice()).expect("written CSV parses");
        assert_eq!(again.x, tr.x);
    }
});

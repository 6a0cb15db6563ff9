#![no_main]

use extremogram::io::{
    parse_dims, parse_kernel, parse_lags, parse_nu, parse_region, parse_set, parse_threshold, parse_weights,
    parse_windows,
};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let _ = parse_set(s);
    let _ = parse_threshold(s);
    let _ = parse_lags(s);
    let _ = parse_windows(s, 14);
    let _ = parse_nu(s);
    let _ = parse_kernel(s);
    let _ = parse_weights(s);
    let _ = parse_dims(s);
    let _ = parse_region(s);
});

#![no_main]

use extremogram::io::{parse_spacetime, spatial_block_max, temporal_max};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = parse_spacetime(text) {
        let (nx, _) = grid.dims();
        let _ = spatial_block_max(&grid, nx);
        let _ = temporal_max(&grid, &[0..grid.n_times()]).expect("full window is valid");
    }
});

#![no_main]

use extremogram::io::{parse_field, render_field};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((field, meta)) = parse_field(text) {
        // Anything accepted must survive a write -> read -> write cycle unchanged.
        let first = render_field(&field, &meta);
        let (again, meta2) = parse_field(&first).expect("rendered field parses");
        assert_eq!(again, field);
        assert_eq!(render_field(&again, &meta2), first);
    }
});

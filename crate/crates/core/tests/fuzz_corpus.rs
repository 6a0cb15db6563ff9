//! Replays the checked-in fuzz corpus through the parsers, with the same
//! checks the fuzz targets make.

use std::path::PathBuf;

use extremogram::io::{
    parse_dims, parse_field, parse_kernel, parse_lags, parse_nu, parse_region, parse_set, parse_spacetime,
    parse_threshold, parse_weights, parse_windows, render_field, temporal_max,
};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn field_file_seeds() {
    let mut accepted = 0;
    for (name, text) in seeds("field_file") {
        if let Ok((field, meta)) = parse_field(&text) {
            accepted += 1;
            let first = render_field(&field, &meta);
            let (again, meta2) = parse_field(&first).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(again, field, "{name}");
            assert_eq!(render_field(&again, &meta2), first, "{name}");
        }
    }
    assert!(accepted >= 4);
}

#[test]
fn spacetime_seeds() {
    let mut accepted = 0;
    for (_, text) in seeds("spacetime_csv") {
        if let Ok(grid) = parse_spacetime(&text) {
            accepted += 1;
            temporal_max(&grid, &[0..grid.n_times()]).unwrap();
        }
    }
    assert_eq!(accepted, 2);
}

#[test]
fn spec_string_seeds() {
    for (name, s) in seeds("spec_strings") {
        let ok = [
            parse_set(&s).is_ok(),
            parse_threshold(&s).is_ok(),
            parse_lags(&s).is_ok(),
            parse_windows(&s, 14).is_ok(),
            parse_nu(&s).is_ok(),
            parse_kernel(&s).is_ok(),
            parse_weights(&s).is_ok(),
            parse_dims(&s).is_ok(),
            parse_region(&s).is_ok(),
        ];
        assert!(ok.iter().any(|&b| b), "{name}: no parser accepts {s:?}");
    }
}

//! File formats and argument grammars.
//!
//! Numbers in CSV output are written with 17 significant digits, which
//! round-trips every `f64`, so write -> read -> write is byte-identical.

mod field_file;
mod results;
mod spacetime;
mod specs;

pub use field_file::{parse_field, read_field_file, render_field, write_field_file, FieldHeader, Meta};
pub use results::{
    render_bands_csv, render_ese_csv, render_mc_csv, render_oracle_csv, render_rate_csv, OracleRow,
    RunConfig, ESE_COLUMNS,
};
pub use spacetime::{parse_spacetime, read_spacetime_file, spatial_block_max, temporal_max, SpaceTimeGrid};
pub use specs::{
    parse_dims, parse_kernel, parse_lags, parse_nu, parse_region, parse_set, parse_threshold,
    parse_weights, parse_windows, LagsArg,
};

/// `x` with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

//! Shared inputs for the benchmarks.

use pha_core::format::{parse_model, parse_split_spec};
use pha_core::split::SplitSpec;
use pha_core::Pha;

pub const THERMOSTAT: &str = include_str!("../../../models/thermostat.pha");
pub const THERMOSTAT_SPLIT: &str = include_str!("../../../models/thermostat.split");

pub fn thermostat() -> (Pha, SplitSpec) {
    let pha = parse_model(THERMOSTAT).expect("bundled model parses");
    let spec = parse_split_spec(THERMOSTAT_SPLIT, &pha).expect("bundled split parses");
    (pha, spec)
}

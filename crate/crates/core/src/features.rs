//! Canonical meteorological feature list.

/// Number of daily meteorological measurements per county-day.
pub const N_FEATURES: usize = 18;

/// Feature names in canonical column order.
///
/// Units: PRECTOT mm/day, PS kPa, QV2M g/kg, temperatures °C, wind speeds m/s.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "PRECTOT",
    "PS",
    "QV2M",
    "T2M",
    "T2MDEW",
    "T2MWET",
    "T2M_MAX",
    "T2M_MIN",
    "T2M_RANGE",
    "TS",
    "WS10M",
    "WS10M_MAX",
    "WS10M_MIN",
    "WS10M_RANGE",
    "WS50M",
    "WS50M_MAX",
    "WS50M_MIN",
    "WS50M_RANGE",
];

/// Alternate header spellings seen in published copies of the timeseries files.
pub(crate) const FEATURE_ALIASES: [(&str, &str); 1] = [("PRECTOTCORR", "PRECTOT")];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|f| *f == name)
}

pub fn canonical_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

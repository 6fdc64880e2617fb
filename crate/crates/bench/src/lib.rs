//! Shared inputs for the criterion benches.

use twfilm::Params;

/// Parameter sets covering the non-resonant, `m = 1` and `m = 2` branches.
pub fn cases() -> Vec<(&'static str, Params)> {
    [("n1.5", 1.5), ("n2", 2.0), ("n2.5", 2.5)]
        .into_iter()
        .map(|(name, n)| (name, Params::new(n, 1.0).expect("valid parameters")))
        .collect()
}

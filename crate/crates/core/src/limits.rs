//! Size caps for the exhaustive and transform-based computations.
//!
//! Every cap can be overridden from the environment with a `SIGNLAB_` prefixed
//! variable, e.g. `SIGNLAB_DP_CAP=5000000`.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Limits {
    /// Largest n accepted by the plain census (2^{n^2} matrices).
    pub census_plain_max_n: usize,
    /// Largest Σ|a_j| (times the lazy support radius) handled by dynamic programming.
    pub dp_sum_cap: u64,
    /// Largest dimension handled by meet-in-the-middle counting.
    pub mitm_max_n: usize,
    /// Largest modulus accepted by Fourier inversion.
    pub fourier_q_cap: u64,
    /// Largest modulus for which the f(i) profile is materialized.
    pub profile_q_cap: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            census_plain_max_n: 4,
            dp_sum_cap: 1_000_000,
            mitm_max_n: 44,
            fourier_q_cap: 10_000_000,
            profile_q_cap: 1_000_000,
        }
    }
}

pub const ENV_PREFIX: &str = "SIGNLAB_";

impl Limits {
    /// Defaults overridden by `SIGNLAB_CENSUS_PLAIN_MAX_N`, `SIGNLAB_DP_CAP`,
    /// `SIGNLAB_MITM_MAX_N`, `SIGNLAB_FOURIER_Q_CAP` and `SIGNLAB_PROFILE_Q_CAP`.
    /// Unparseable values are ignored.
    pub fn from_env() -> Self {
        fn var<T: std::str::FromStr>(name: &str) -> Option<T> {
            std::env::var(format!("{ENV_PREFIX}{name}")).ok()?.trim().parse().ok()
        }
        let d = Limits::default();
        Limits {
            census_plain_max_n: var("CENSUS_PLAIN_MAX_N").unwrap_or(d.census_plain_max_n),
            dp_sum_cap: var("DP_CAP").unwrap_or(d.dp_sum_cap),
            mitm_max_n: var("MITM_MAX_N").unwrap_or(d.mitm_max_n),
            fourier_q_cap: var("FOURIER_Q_CAP").unwrap_or(d.fourier_q_cap),
            profile_q_cap: var("PROFILE_Q_CAP").unwrap_or(d.profile_q_cap),
        }
    }
}

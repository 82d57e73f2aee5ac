//! Synthetic renewable generation profiles.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::RenewablesConfig;
use crate::domain::{RenewableKind, RenewableProfile};

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Photovoltaic output: a half-sine between sunrise and sunset, repeating
/// daily. `seconds` samples starting at simulation time zero.
pub fn pv_profile(cfg: &RenewablesConfig, seconds: usize) -> RenewableProfile {
    let daylight = cfg.sunset_s - cfg.sunrise_s;
    let series: Vec<f64> = (0..seconds)
        .map(|t| {
            let tod = (cfg.start_time_of_day_s + t as f64 + 0.5).rem_euclid(SECONDS_PER_DAY);
            if tod < cfg.sunrise_s || tod >= cfg.sunset_s {
                return 0.0;
            }
            let kw = cfg.pv_nominal_kw * (std::f64::consts::PI * (tod - cfg.sunrise_s) / daylight).sin();
            kw.max(0.0) / 3600.0
        })
        .collect();
    RenewableProfile::from_series(RenewableKind::Pv, cfg.pv_nominal_kw, &series)
}

/// Wind output: the fraction of nominal power follows a random walk clamped
/// to [0, 1], updated every `wind_step_s` seconds.
pub fn wind_profile<R: Rng + ?Sized>(cfg: &RenewablesConfig, seconds: usize, rng: &mut R) -> RenewableProfile {
    let mut level: f64 = rng.random_range(0.2..0.8);
    let step = cfg.wind_step_s as usize;
    let mut series = Vec::with_capacity(seconds);
    for t in 0..seconds {
        if t > 0 && t % step == 0 {
            let z: f64 = rng.sample(StandardNormal);
            level = (level + cfg.wind_volatility * z).clamp(0.0, 1.0);
        }
        series.push(cfg.wind_nominal_kw * level / 3600.0);
    }
    RenewableProfile::from_series(RenewableKind::Wind, cfg.wind_nominal_kw, &series)
}

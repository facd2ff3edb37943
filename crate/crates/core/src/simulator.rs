//! Synthetic stand-in for a field measurement campaign.
//!
//! Generates multi-day 1-second pools of (temperature, irradiance,
//! 3rd-harmonic amplitude, power) for one reference PV system: a clear-sky
//! irradiance bell from solar geometry, stochastic cloud attenuation
//! honouring the scenario constraints (event duration of at least 90 s,
//! 1-second drops retaining at least 10% of the previous value), an
//! NOCT-derated PV power model, and an affine-in-power inverter harmonic
//! emission law calibrated so that `pearson(power, h3)` lands near the
//! observed 0.98. Unbalanced single-phase load harmonics and full
//! three-phase waveform emission support the zero-sequence feature path
//! end to end.
//!
//! Generation is pure given (specs, seed); days are generated in parallel
//! with per-day derived seeds so parallel and serial runs are
//! bit-identical.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::Waveform;
use crate::measurement::{
    classify_day_stats, ClassifyThresholds, ClearSkyReference, DayLabel, DaySeries,
    MeasurementPool, Sample,
};
use crate::rng::Rng;
use crate::{par, rng};

/// Electrical and thermal parameters of one PV system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PvsSpec {
    /// Rated power at standard test conditions, kW.
    pub rated_power_kw: f64,
    /// Power derating per degree of cell temperature above 25 C, 1/C
    /// (negative).
    pub temp_coeff: f64,
    /// Nominal operating cell temperature, C.
    pub noct_c: f64,
    /// 3rd-harmonic emission at zero power, A.
    pub h3_base_a: f64,
    /// 3rd-harmonic emission slope, A per kW.
    pub h3_slope_a_per_kw: f64,
    /// Gaussian noise on the emission, A.
    pub h3_noise_sd_a: f64,
}

impl PvsSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rated_power_kw > 0.0) {
            return Err(Error::InvalidInput("rated power must be positive".into()));
        }
        if !(-0.01..=0.0).contains(&self.temp_coeff) {
            return Err(Error::InvalidInput(
                "temp_coeff must lie in [-0.01, 0]".into(),
            ));
        }
        if self.h3_base_a < 0.0 || !(self.h3_slope_a_per_kw > 0.0) || self.h3_noise_sd_a < 0.0 {
            return Err(Error::InvalidInput(
                "h3 emission parameters must be non-negative with positive slope".into(),
            ));
        }
        Ok(())
    }
}

/// Daily modulation applied to a load's harmonic amplitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadProfile {
    Constant,
    /// `1 + swing * cos(2*pi*(t - peak_t_s)/86400)`, peaking at `peak_t_s`.
    Daily { peak_t_s: u32, swing: f64 },
}

impl LoadProfile {
    pub fn envelope(&self, t: u32) -> f64 {
        match *self {
            LoadProfile::Constant => 1.0,
            LoadProfile::Daily { peak_t_s, swing } => {
                let phase = 2.0 * PI * (t as f64 - peak_t_s as f64) / 86_400.0;
                1.0 + swing * phase.cos()
            }
        }
    }
}

/// One single- or multi-phase consumer load's 3rd-harmonic injection.
///
/// Phases are deliberately not required to be equal: the unbalance is the
/// point, it is what the zero-sequence filter attenuates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadSpec {
    /// Per-phase peak amplitude (a, b, c), A.
    pub h3_amp_a: [f64; 3],
    /// Per-phase injection angle, rad.
    pub h3_angle_rad: [f64; 3],
    /// Base demand, kW. Not used by the feature path; recorded for realism.
    pub base_demand_kw: f64,
    pub profile: LoadProfile,
    /// Fractional per-second amplitude jitter (uniform in +-jitter).
    pub jitter: f64,
}

impl LoadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.h3_amp_a.iter().any(|&a| a < 0.0) || self.jitter < 0.0 {
            return Err(Error::InvalidInput(
                "load amplitudes and jitter must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Cloud event statistics for one weather kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloudParams {
    /// Expected attenuation events per hour.
    pub event_rate_per_hour: f64,
    /// Minimum event duration, s. At least 90.
    pub min_duration_s: u32,
    /// Remaining-irradiance fraction at the event plateau, lower bound.
    pub attenuation_min: f64,
    /// Remaining-irradiance fraction at the event plateau, upper bound.
    pub attenuation_max: f64,
}

impl Default for CloudParams {
    fn default() -> Self {
        Self {
            event_rate_per_hour: 2.5,
            min_duration_s: 90,
            attenuation_min: 0.25,
            attenuation_max: 0.7,
        }
    }
}

/// Location, date, and cloud statistics of the simulated feeder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiteSpec {
    pub latitude_deg: f64,
    pub day_of_year: u32,
    /// Irradiance at standard test conditions, W/m^2.
    pub gstc_wm2: f64,
    pub cloud: CloudParams,
    /// When set, the daylight window is this many seconds centered on
    /// solar noon instead of the geometric sunrise/sunset. Used to shrink
    /// days for desk-scale runs.
    #[serde(default)]
    pub daylight_override_s: Option<u32>,
}

impl SiteSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cloud.min_duration_s < 90 {
            return Err(Error::InvalidInput(
                "cloud min_duration_s must be at least 90".into(),
            ));
        }
        if !(self.cloud.attenuation_min > 0.0)
            || self.cloud.attenuation_max < self.cloud.attenuation_min
            || self.cloud.attenuation_max > 1.0
        {
            return Err(Error::InvalidInput(
                "attenuation range must satisfy 0 < min <= max <= 1".into(),
            ));
        }
        Ok(())
    }

    fn declination_rad(&self) -> f64 {
        (23.45f64.to_radians()) * (2.0 * PI * (284 + self.day_of_year) as f64 / 365.0).sin()
    }

    /// Peak clear-sky irradiance from the solar elevation at noon.
    pub fn peak_irradiance_wm2(&self) -> f64 {
        let elevation = PI / 2.0 - (self.latitude_deg.to_radians() - self.declination_rad()).abs();
        self.gstc_wm2 * elevation.sin().max(0.0)
    }

    /// Daylight window as (sunrise, sunset) in seconds since midnight,
    /// solar noon pinned at 43200 s (no equation of time).
    pub fn daylight_window(&self) -> (u32, u32) {
        let window = match self.daylight_override_s {
            Some(w) => w.min(86_000),
            None => {
                let lat = self.latitude_deg.to_radians();
                let cos_omega = (-lat.tan() * self.declination_rad().tan()).clamp(-1.0, 1.0);
                let omega = cos_omega.acos();
                (omega * 86_400.0 / PI).round() as u32
            }
        };
        let half = window / 2;
        (43_200 - half, 43_200 + (window - half))
    }
}

/// Smooth clear-sky irradiance at `t` seconds since midnight.
///
/// `G(t) = Gmax * sin(pi * (t - sunrise)/(sunset - sunrise))^1.2` inside
/// the daylight window, 0 outside.
pub fn clear_sky_irradiance(site: &SiteSpec, t: u32) -> f64 {
    let (sunrise, sunset) = site.daylight_window();
    if t <= sunrise || t >= sunset {
        return 0.0;
    }
    let x = (t - sunrise) as f64 / (sunset - sunrise) as f64;
    site.peak_irradiance_wm2() * (PI * x).sin().max(0.0).powf(1.2)
}

/// One attenuation event of a cloud field.
#[derive(Debug, Clone, Copy)]
pub struct CloudEvent {
    /// Offset from sunrise, s.
    pub start: usize,
    pub duration: usize,
    /// Remaining-irradiance fraction at the plateau.
    pub depth: f64,
}

/// Per-second attenuation series over one daylight window.
#[derive(Debug, Clone)]
pub struct CloudField {
    /// Attenuation in (0, 1] per second from sunrise.
    pub alpha: Vec<f64>,
    pub events: Vec<CloudEvent>,
}

/// Generate a cloud attenuation field from the site's event statistics.
///
/// Events are non-overlapping trapezoids with ramped edges; every event
/// lasts at least `min_duration_s`, and consecutive seconds always retain
/// at least the drop bound by construction (plateaus never go below the
/// configured attenuation floor and ramps descend gradually).
pub fn cloud_field(site: &SiteSpec, rng: &mut Rng) -> CloudField {
    let (sunrise, sunset) = site.daylight_window();
    cloud_field_over((sunset - sunrise) as usize, &site.cloud, 1.0, rng)
}

/// Cloud field over `n` seconds with an overcast base attenuation.
pub fn cloud_field_over(n: usize, cloud: &CloudParams, base: f64, rng: &mut Rng) -> CloudField {
    let mut alpha = vec![base; n];
    let mut events: Vec<CloudEvent> = Vec::new();
    if cloud.event_rate_per_hour <= 0.0 || n == 0 {
        return CloudField { alpha, events };
    }
    let lambda = cloud.event_rate_per_hour * n as f64 / 3600.0;
    let n_events = Poisson::new(lambda.max(1e-12)).expect("lambda > 0").sample(rng) as usize;

    let min_dur = cloud.min_duration_s as usize + 5;
    let max_dur = (min_dur * 6).min(n.saturating_sub(1)).max(min_dur);
    let mut occupied: Vec<(usize, usize)> = Vec::new();
    for _ in 0..n_events {
        let mut placed = None;
        for _attempt in 0..50 {
            let duration = rng.gen_range(min_dur..=max_dur);
            if duration + 1 >= n {
                continue;
            }
            let start = rng.gen_range(0..n - duration);
            let clash = occupied
                .iter()
                .any(|&(s, d)| start < s + d + 5 && s < start + duration + 5);
            if !clash {
                placed = Some((start, duration));
                break;
            }
        }
        let Some((start, duration)) = placed else {
            continue; // day too crowded; skip this event
        };
        occupied.push((start, duration));
        let depth = rng.gen_range(cloud.attenuation_min..=cloud.attenuation_max);
        let ramp = rng.gen_range(5..=20usize).min(duration / 4).max(1);
        for k in 0..duration {
            let m = if k < ramp {
                1.0 - (1.0 - depth) * (k + 1) as f64 / ramp as f64
            } else if k >= duration - ramp {
                1.0 - (1.0 - depth) * (duration - k) as f64 / ramp as f64
            } else {
                depth
            };
            alpha[start + k] *= m;
        }
        events.push(CloudEvent {
            start,
            duration,
            depth,
        });
    }
    events.sort_by_key(|e| e.start);
    CloudField { alpha, events }
}

/// PV output power from irradiance and ambient temperature.
///
/// Cell temperature follows the NOCT model
/// `t_cell = t_ambient + (noct - 20) * g / 800`; power is
/// `rated * (g/1000) * (1 + temp_coeff * (t_cell - 25))`, clamped to
/// `[0, rated]`.
pub fn pv_power(g_wm2: f64, t_ambient_c: f64, spec: &PvsSpec) -> f64 {
    if g_wm2 <= 0.0 {
        return 0.0;
    }
    let t_cell = t_ambient_c + (spec.noct_c - 20.0) * g_wm2 / 800.0;
    let p = spec.rated_power_kw * (g_wm2 / 1000.0) * (1.0 + spec.temp_coeff * (t_cell - 25.0));
    p.clamp(0.0, spec.rated_power_kw)
}

/// Inverter 3rd-harmonic amplitude for a power level: affine in power
/// plus Gaussian noise, clamped non-negative.
pub fn inverter_h3(p_kw: f64, spec: &PvsSpec, rng: &mut Rng) -> f64 {
    let noise = Normal::new(0.0, spec.h3_noise_sd_a)
        .expect("sd >= 0")
        .sample(rng);
    (spec.h3_base_a + spec.h3_slope_a_per_kw * p_kw + noise).max(0.0)
}

/// Weather type requested for one simulated day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherKind {
    Sunny,
    PartlyCloudy,
    Cloudy,
    Rainy,
}

impl WeatherKind {
    /// Overcast base attenuation range and event-statistic scaling for
    /// this weather type, relative to the site's (partly-cloudy) params.
    fn day_params(self, cloud: &CloudParams) -> (std::ops::RangeInclusive<f64>, CloudParams) {
        match self {
            WeatherKind::Sunny => (
                1.0..=1.0,
                CloudParams {
                    event_rate_per_hour: 0.0,
                    ..cloud.clone()
                },
            ),
            WeatherKind::PartlyCloudy => (1.0..=1.0, cloud.clone()),
            WeatherKind::Cloudy => (
                0.35..=0.60,
                CloudParams {
                    event_rate_per_hour: cloud.event_rate_per_hour * 1.6,
                    attenuation_min: 0.3,
                    attenuation_max: 0.8,
                    ..cloud.clone()
                },
            ),
            WeatherKind::Rainy => (
                0.10..=0.22,
                CloudParams {
                    event_rate_per_hour: cloud.event_rate_per_hour * 0.4,
                    attenuation_min: 0.5,
                    attenuation_max: 0.9,
                    ..cloud.clone()
                },
            ),
        }
    }
}

/// Default 14-day weather mix: sunny, partly cloudy, cloudy, and rainy
/// days are all experienced.
pub fn default_weather_mix() -> Vec<WeatherKind> {
    use WeatherKind::*;
    vec![
        Sunny,
        PartlyCloudy,
        Cloudy,
        Sunny,
        Rainy,
        PartlyCloudy,
        Sunny,
        Cloudy,
        PartlyCloudy,
        Rainy,
        Sunny,
        PartlyCloudy,
        Cloudy,
        Sunny,
    ]
}

/// Simulate one day of the campaign.
fn simulate_day(
    site: &SiteSpec,
    pvs: &PvsSpec,
    weather: WeatherKind,
    day_index: usize,
    rng: &mut Rng,
) -> DaySeries {
    let (sunrise, sunset) = site.daylight_window();
    let n = (sunset - sunrise) as usize;
    let (base_range, cloud) = weather.day_params(&site.cloud);
    let base = if *base_range.start() >= *base_range.end() {
        *base_range.start()
    } else {
        rng.gen_range(base_range)
    };
    let field = cloud_field_over(n, &cloud, base, rng);

    // Diurnal temperature: dawn value plus a lagged bell, damped by cloud
    // cover.
    let t_dawn = rng.gen_range(10.0..16.0);
    let swing = rng.gen_range(8.0..14.0);
    let mean_alpha = field.alpha.iter().sum::<f64>() / n as f64;
    let damped_swing = swing * (0.3 + 0.7 * mean_alpha);

    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = sunrise + k as u32;
        let x = k as f64 / n as f64;
        let lagged = ((x - 0.15) / 0.85).clamp(0.0, 1.0);
        let temperature = t_dawn + damped_swing * (PI * lagged).sin();
        let irradiance = clear_sky_irradiance(site, t) * field.alpha[k];
        let power = pv_power(irradiance, temperature, pvs);
        let h3 = inverter_h3(power, pvs, rng);
        samples.push(Sample {
            t,
            temperature_c: temperature,
            irradiance_wm2: irradiance,
            h3_amp_a: h3,
            power_kw: power,
        });
    }
    DaySeries {
        day_id: format!("d{day_index:03}"),
        samples,
        label: DayLabel::Sunny, // assigned below by classification
    }
}

/// Simulate a multi-day measurement pool.
///
/// Day `i` takes its weather from `mix[i % mix.len()]` and its RNG stream
/// from `derive_seed(master_seed, i)`; days are generated in parallel and
/// collected in index order, so output is independent of thread count.
/// Labels come from classifying each day against the site's clear-sky
/// model with default thresholds.
pub fn simulate_pool(
    site: &SiteSpec,
    pvs: &PvsSpec,
    num_days: usize,
    mix: &[WeatherKind],
    master_seed: u64,
) -> Result<MeasurementPool> {
    site.validate()?;
    pvs.validate()?;
    if num_days == 0 || mix.is_empty() {
        return Err(Error::InvalidInput(
            "need at least one day and a non-empty weather mix".into(),
        ));
    }
    if !(0..num_days).any(|i| mix[i % mix.len()] == WeatherKind::Sunny) {
        return Err(Error::InvalidInput(
            "weather mix must include at least one sunny day".into(),
        ));
    }

    let mut days = par::map_indexed(num_days, |i| {
        let mut rng = rng::derived(master_seed, i as u64);
        simulate_day(site, pvs, mix[i % mix.len()], i, &mut rng)
    });

    let (sunrise, sunset) = site.daylight_window();
    let reference = ClearSkyReference {
        t0: sunrise,
        values: (sunrise..sunset)
            .map(|t| clear_sky_irradiance(site, t))
            .collect(),
    };
    let thresholds = ClassifyThresholds::default();
    for d in &mut days {
        d.label = classify_day_stats(d, &reference, &thresholds)?.0;
    }
    let pool = MeasurementPool { days };
    pool.validate()?;
    Ok(pool)
}

/// Per-phase 3rd-harmonic phasors injected by the consumer loads at `t`.
///
/// Vector sum over loads; each load contributes
/// `amp * envelope(t) * (1 + jitter)` at its fixed per-phase angle.
pub fn load_h3_phasors(loads: &[LoadSpec], t: u32, rng: &mut Rng) -> [Complex64; 3] {
    let mut phases = [Complex64::new(0.0, 0.0); 3];
    for load in loads {
        let env = load.profile.envelope(t);
        for p in 0..3 {
            let jitter = if load.jitter > 0.0 {
                rng.gen_range(-load.jitter..=load.jitter)
            } else {
                0.0
            };
            let amp = (load.h3_amp_a[p] * env * (1.0 + jitter)).max(0.0);
            phases[p] += Complex64::from_polar(amp, load.h3_angle_rad[p]);
        }
    }
    phases
}

/// Parameters for time-domain waveform emission.
#[derive(Debug, Clone)]
pub struct WaveformSynthSpec {
    pub sample_rate_hz: f64,
    pub fundamental_hz: f64,
    /// Common angle of the co-phasal PVS 3rd-harmonic injection.
    pub pvs_h3_angle_rad: f64,
    /// Fundamental current per kW of PVS power, A/kW.
    pub fundamental_a_per_kw: f64,
    /// Constant-amplitude background orders (order, amplitude). Emitted
    /// with balanced positive-sequence phasing; their amplitudes do not
    /// follow the power level.
    pub background_orders: Vec<(u32, f64)>,
}

impl Default for WaveformSynthSpec {
    fn default() -> Self {
        Self {
            sample_rate_hz: 10_000.0,
            fundamental_hz: 50.0,
            pvs_h3_angle_rad: 0.0,
            fundamental_a_per_kw: 1.45, // ~ 1 / (3 * 230 V) per phase
            background_orders: vec![(5, 0.06), (7, 0.04), (11, 0.03), (13, 0.02)],
        }
    }
}

/// One second of feeder state to render into a waveform.
#[derive(Debug, Clone, Copy)]
pub struct FeederSecond {
    pub t: u32,
    pub power_kw: f64,
    pub pvs_h3_a: f64,
}

/// Render feeder three-phase current for a run of seconds.
///
/// Per phase: balanced fundamental proportional to power, the co-phasal
/// PVS 3rd harmonic, the per-phase load 3rd harmonics, and small constant
/// background orders. Amplitudes are held constant within each second.
pub fn synthesize_feeder_waveform(
    seconds: &[FeederSecond],
    loads: &[LoadSpec],
    spec: &WaveformSynthSpec,
    rng: &mut Rng,
) -> Result<Waveform> {
    let fs = spec.sample_rate_hz;
    let f0 = spec.fundamental_hz;
    let per_second = fs.round() as usize;
    let phase_offsets = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];
    let mut phases = [
        Vec::with_capacity(seconds.len() * per_second),
        Vec::with_capacity(seconds.len() * per_second),
        Vec::with_capacity(seconds.len() * per_second),
    ];
    for sec in seconds {
        let load_ph = load_h3_phasors(loads, sec.t, rng);
        let i1 = sec.power_kw * spec.fundamental_a_per_kw;
        for k in 0..per_second {
            let t = k as f64 / fs;
            for p in 0..3 {
                let mut v = i1 * (2.0 * PI * f0 * t + phase_offsets[p]).cos();
                v += sec.pvs_h3_a * (2.0 * PI * 3.0 * f0 * t + spec.pvs_h3_angle_rad).cos();
                v += load_ph[p].norm()
                    * (2.0 * PI * 3.0 * f0 * t + load_ph[p].arg()).cos();
                for &(h, amp) in &spec.background_orders {
                    v += amp * (2.0 * PI * h as f64 * f0 * t + h as f64 * phase_offsets[p]).cos();
                }
                phases[p].push(v);
            }
        }
    }
    Waveform::new(phases, fs, f0)
}

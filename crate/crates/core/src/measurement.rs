//! The 1-second measurement pool: per-day series of temperature,
//! irradiance, 3rd-harmonic current amplitude, and PV power, with CSV
//! ingestion, invariant validation, and weather-type day classification.
//!
//! Pool CSV interface: header
//! `day_id,t,temperature_c,irradiance_wm2,h3_amp_a,power_kw`, UTF-8, LF
//! line endings, floats in decimal notation. Timestamps are integer
//! seconds since local midnight; consecutive samples of a day are exactly
//! 1 s apart. Missing samples are a hard error — scenario synthesis
//! indexes instances positionally.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// One 1-second measurement record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Seconds since local midnight, in `[0, 86400)`.
    pub t: u32,
    /// Ambient temperature in degrees Celsius.
    pub temperature_c: f64,
    /// Global irradiance in W/m^2, non-negative.
    pub irradiance_wm2: f64,
    /// 3rd-harmonic current amplitude in amperes, non-negative.
    pub h3_amp_a: f64,
    /// PV output power in kW, non-negative.
    pub power_kw: f64,
}

impl Sample {
    fn check(&self) -> std::result::Result<(), String> {
        if self.t >= 86_400 {
            return Err(format!("t={} outside [0, 86400)", self.t));
        }
        if self.irradiance_wm2 < 0.0 {
            return Err(format!("negative irradiance at t={}", self.t));
        }
        if self.h3_amp_a < 0.0 {
            return Err(format!("negative h3 amplitude at t={}", self.t));
        }
        if self.power_kw < 0.0 {
            return Err(format!("negative power at t={}", self.t));
        }
        Ok(())
    }
}

/// Weather type assigned to a measured day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayLabel {
    Sunny,
    PartlyCloudy,
    Cloudy,
    Rainy,
}

impl fmt::Display for DayLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DayLabel::Sunny => "sunny",
            DayLabel::PartlyCloudy => "partly_cloudy",
            DayLabel::Cloudy => "cloudy",
            DayLabel::Rainy => "rainy",
        };
        f.write_str(s)
    }
}

/// One day's contiguous 1-second series.
#[derive(Debug, Clone)]
pub struct DaySeries {
    pub day_id: String,
    pub samples: Vec<Sample>,
    pub label: DayLabel,
}

impl DaySeries {
    /// Validate ordering, spacing, and per-sample bounds.
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InvalidDay {
                day_id: self.day_id.clone(),
                msg: "empty day".into(),
            });
        }
        for s in &self.samples {
            s.check().map_err(|msg| Error::InvalidDay {
                day_id: self.day_id.clone(),
                msg,
            })?;
        }
        for w in self.samples.windows(2) {
            if w[1].t == w[0].t {
                return Err(Error::InvalidDay {
                    day_id: self.day_id.clone(),
                    msg: format!("duplicated timestamp t={}", w[0].t),
                });
            }
            if w[1].t != w[0].t + 1 {
                return Err(Error::InvalidDay {
                    day_id: self.day_id.clone(),
                    msg: format!("gap between t={} and t={}", w[0].t, w[1].t),
                });
            }
        }
        Ok(())
    }

    /// First timestamp of the day.
    pub fn t0(&self) -> u32 {
        self.samples[0].t
    }

    /// One column as a contiguous series.
    pub fn column(&self, col: Column) -> Vec<f64> {
        self.samples.iter().map(|s| col.get(s)).collect()
    }
}

/// Column selector for [`DaySeries::column`].
#[derive(Debug, Clone, Copy)]
pub enum Column {
    Temperature,
    Irradiance,
    H3Amp,
    Power,
}

impl Column {
    fn get(self, s: &Sample) -> f64 {
        match self {
            Column::Temperature => s.temperature_c,
            Column::Irradiance => s.irradiance_wm2,
            Column::H3Amp => s.h3_amp_a,
            Column::Power => s.power_kw,
        }
    }
}

/// The measurement pool: the full multi-day campaign.
///
/// Immutable after load; safe to share read-only across parallel workers.
#[derive(Debug, Clone, Default)]
pub struct MeasurementPool {
    pub days: Vec<DaySeries>,
}

impl MeasurementPool {
    /// Number of measured days.
    pub fn num_meas(&self) -> usize {
        self.days.len()
    }

    /// Validate every day plus day-id uniqueness.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for d in &self.days {
            if !seen.insert(d.day_id.as_str()) {
                return Err(Error::InvalidDay {
                    day_id: d.day_id.clone(),
                    msg: "duplicate day_id".into(),
                });
            }
            d.validate()?;
        }
        Ok(())
    }

    /// Days carrying a given label.
    pub fn days_with_label(&self, label: DayLabel) -> Vec<&DaySeries> {
        self.days.iter().filter(|d| d.label == label).collect()
    }
}

/// Column-name mapping for pool CSV files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolSchema {
    pub day_id: String,
    pub t: String,
    pub temperature_c: String,
    pub irradiance_wm2: String,
    pub h3_amp_a: String,
    pub power_kw: String,
}

impl Default for PoolSchema {
    fn default() -> Self {
        Self {
            day_id: "day_id".into(),
            t: "t".into(),
            temperature_c: "temperature_c".into(),
            irradiance_wm2: "irradiance_wm2".into(),
            h3_amp_a: "h3_amp_a".into(),
            power_kw: "power_kw".into(),
        }
    }
}

/// Thresholds for clear-sky-index day classification.
///
/// Defaults: sunny when the index is at least 0.9 with fewer than 3
/// attenuation events; rainy below 0.3; cloudy below 0.7; otherwise
/// partly cloudy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyThresholds {
    pub sunny_index: f64,
    pub cloudy_index: f64,
    pub rainy_index: f64,
    pub sunny_max_events: usize,
    /// Ratio below which an instant counts as attenuated.
    pub event_ratio: f64,
    /// Clear-sky floor in W/m^2 below which instants are ignored.
    pub floor_wm2: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            sunny_index: 0.9,
            cloudy_index: 0.7,
            rainy_index: 0.3,
            sunny_max_events: 3,
            event_ratio: 0.8,
            floor_wm2: 25.0,
        }
    }
}

/// Clear-sky irradiance reference over a contiguous time window.
#[derive(Debug, Clone)]
pub struct ClearSkyReference {
    pub t0: u32,
    pub values: Vec<f64>,
}

impl ClearSkyReference {
    pub fn value_at(&self, t: u32) -> Option<f64> {
        if t < self.t0 {
            return None;
        }
        self.values.get((t - self.t0) as usize).copied()
    }

    /// Pointwise maximum of irradiance across days, used as the clear-sky
    /// estimate when no site model is available. With at least one sunny
    /// day in the pool the envelope approximates its irradiance curve.
    pub fn envelope_of(days: &[DaySeries]) -> Result<Self> {
        let t_min = days
            .iter()
            .map(|d| d.t0())
            .min()
            .ok_or_else(|| Error::InvalidInput("no days for envelope".into()))?;
        let t_max = days
            .iter()
            .map(|d| d.samples.last().unwrap().t)
            .max()
            .unwrap();
        let mut values = vec![0.0f64; (t_max - t_min + 1) as usize];
        for d in days {
            for s in &d.samples {
                let idx = (s.t - t_min) as usize;
                if s.irradiance_wm2 > values[idx] {
                    values[idx] = s.irradiance_wm2;
                }
            }
        }
        Ok(Self { t0: t_min, values })
    }
}

/// Classification internals exposed for inspection.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyStats {
    pub clear_sky_index: f64,
    pub attenuation_events: usize,
}

/// Classify a day against a clear-sky reference.
///
/// The clear-sky index is the mean of `irradiance / clear_sky` over the
/// overlap where the reference exceeds the floor; attenuation events are
/// maximal runs where the ratio falls below `event_ratio`. A pure
/// function of its inputs.
pub fn classify_day(
    day: &DaySeries,
    clear_sky: &ClearSkyReference,
    thresholds: &ClassifyThresholds,
) -> Result<DayLabel> {
    Ok(classify_day_stats(day, clear_sky, thresholds)?.0)
}

/// [`classify_day`] plus the underlying index and event count.
pub fn classify_day_stats(
    day: &DaySeries,
    clear_sky: &ClearSkyReference,
    thresholds: &ClassifyThresholds,
) -> Result<(DayLabel, ClassifyStats)> {
    let mut ratio_sum = 0.0;
    let mut n = 0usize;
    let mut events = 0usize;
    let mut in_event = false;
    for s in &day.samples {
        let Some(cs) = clear_sky.value_at(s.t) else {
            continue;
        };
        if cs <= thresholds.floor_wm2 {
            in_event = false;
            continue;
        }
        let ratio = s.irradiance_wm2 / cs;
        ratio_sum += ratio;
        n += 1;
        if ratio < thresholds.event_ratio {
            if !in_event {
                events += 1;
                in_event = true;
            }
        } else {
            in_event = false;
        }
    }
    if n == 0 {
        return Err(Error::InvalidDay {
            day_id: day.day_id.clone(),
            msg: "no overlap with clear-sky reference above floor".into(),
        });
    }
    let k = ratio_sum / n as f64;
    let label = if k >= thresholds.sunny_index && events < thresholds.sunny_max_events {
        DayLabel::Sunny
    } else if k < thresholds.rainy_index {
        DayLabel::Rainy
    } else if k < thresholds.cloudy_index {
        DayLabel::Cloudy
    } else {
        DayLabel::PartlyCloudy
    };
    Ok((
        label,
        ClassifyStats {
            clear_sky_index: k,
            attenuation_events: events,
        },
    ))
}

/// Uniformly pick a sunny day from the pool.
pub fn select_sunny_day<'a>(pool: &'a MeasurementPool, rng: &mut Rng) -> Result<&'a DaySeries> {
    let sunny = pool.days_with_label(DayLabel::Sunny);
    if sunny.is_empty() {
        return Err(Error::NoSunnyDay);
    }
    Ok(sunny[rng.gen_range(0..sunny.len())])
}

/// Load a pool CSV with the default column names.
///
/// Days come out in order of first appearance; each is validated and then
/// classified against the pool's own irradiance envelope with default
/// thresholds (labels are not part of the file format).
pub fn load_pool(path: &Path) -> Result<MeasurementPool> {
    load_pool_with(path, &PoolSchema::default())
}

/// Load a pool CSV with an explicit column mapping.
pub fn load_pool_with(path: &Path, schema: &PoolSchema) -> Result<MeasurementPool> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let c_day = col(&schema.day_id)?;
    let c_t = col(&schema.t)?;
    let c_temp = col(&schema.temperature_c)?;
    let c_irr = col(&schema.irradiance_wm2)?;
    let c_h3 = col(&schema.h3_amp_a)?;
    let c_pow = col(&schema.power_kw)?;

    let mut days: Vec<DaySeries> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2; // header is line 1
        let rec = rec.map_err(|e| Error::CsvFormat {
            line,
            msg: e.to_string(),
        })?;
        let field = |idx: usize| -> Result<&str> {
            rec.get(idx).ok_or(Error::CsvFormat {
                line,
                msg: format!("missing field {idx}"),
            })
        };
        let parse_f = |idx: usize| -> Result<f64> {
            let raw = field(idx)?;
            raw.parse().map_err(|_| Error::CsvFormat {
                line,
                msg: format!("bad float `{raw}`"),
            })
        };
        let day_id = field(c_day)?.to_string();
        let t: u32 = field(c_t)?.parse().map_err(|_| Error::CsvFormat {
            line,
            msg: format!("bad timestamp `{}`", &rec[c_t]),
        })?;
        let sample = Sample {
            t,
            temperature_c: parse_f(c_temp)?,
            irradiance_wm2: parse_f(c_irr)?,
            h3_amp_a: parse_f(c_h3)?,
            power_kw: parse_f(c_pow)?,
        };
        match days.iter_mut().find(|d| d.day_id == day_id) {
            Some(d) => d.samples.push(sample),
            None => days.push(DaySeries {
                day_id,
                samples: vec![sample],
                label: DayLabel::Sunny, // placeholder until classification
            }),
        }
    }
    let mut pool = MeasurementPool { days };
    pool.validate()?;
    if !pool.days.is_empty() {
        let envelope = ClearSkyReference::envelope_of(&pool.days)?;
        let thresholds = ClassifyThresholds::default();
        for d in &mut pool.days {
            d.label = classify_day_stats(d, &envelope, &thresholds)?.0;
        }
    }
    Ok(pool)
}

/// Serialize a pool to the CSV interface.
///
/// Floats use Rust's shortest round-trip formatting, so a load/save cycle
/// is byte-stable and value-exact.
pub fn save_pool(pool: &MeasurementPool, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(pool_to_csv_string(pool).as_bytes())?;
    Ok(())
}

/// Pool CSV bytes as a string (also used for checksums).
pub fn pool_to_csv_string(pool: &MeasurementPool) -> String {
    let mut out = String::from("day_id,t,temperature_c,irradiance_wm2,h3_amp_a,power_kw\n");
    for d in &pool.days {
        for s in &d.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.day_id, s.t, s.temperature_c, s.irradiance_wm2, s.h3_amp_a, s.power_kw
            ));
        }
    }
    out
}

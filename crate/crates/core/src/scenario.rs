//! Monte Carlo synthesis of cloudy-day scenarios.
//!
//! A scenario starts from a randomly selected sunny day. Contiguous
//! segments of instances from non-sunny days of the pool are spliced over
//! it, one segment per cloud event; every spliced record is a real
//! measured tuple, only displaced in time. With several PV systems the
//! same segments land on each unit's series shifted by at most
//! `shift_max` seconds, modelling cloud-front latency across the feeder.
//!
//! Three constraints hold by construction and are re-checked by
//! [`validate_scenario`]: cloud segments last at least the minimum
//! duration, irradiance never loses more than the configured fraction in
//! one second, and cross-unit shifts stay within `shift_max`. Training
//! scenarios aggregate the per-unit 3rd-harmonic amplitudes by plain sum
//! (co-phasal inverter injections); testing scenarios push the injections
//! plus the unbalanced load harmonics through the zero-sequence filter
//! and take the magnitude, which is what a feeder-head instrument would
//! deliver.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::zero_sequence;
use crate::measurement::{select_sunny_day, DayLabel, MeasurementPool, Sample};
use crate::rng::Rng;
use crate::simulator::{load_h3_phasors, LoadSpec};
use crate::{par, rng};

/// Knobs of the scenario synthesizers and the validator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of PV systems on the feeder.
    pub num_pv: usize,
    /// Maximum cloud latency across units, s.
    pub shift_max_s: u32,
    /// Minimum cloud segment duration, s.
    pub min_cloud_duration_s: u32,
    /// Largest irradiance fraction that may vanish within one second.
    pub max_drop_ratio: f64,
    /// Inclusive range of replacement events per scenario.
    pub replacement_events: (u32, u32),
    /// Attempts per event before giving up.
    pub retry_budget: u32,
    /// Master seed for batch generation; single-scenario calls take an
    /// explicit RNG instead.
    pub seed: u64,
    /// Spliced seconds must fall below this fraction of the sunny
    /// template to be selected (keeps cloud segments unmistakable).
    pub splice_attenuation: f64,
    /// Ratio below which the validator counts a second as cloud-covered.
    pub cloud_detect_ratio: f64,
    /// Irradiance floor below which ratio checks are skipped, W/m^2.
    pub irradiance_floor_wm2: f64,
    /// Splices keep to the part of the day where the template exceeds
    /// this fraction of its peak.
    pub interior_fraction: f64,
    /// Common angle of the co-phasal PVS 3rd-harmonic injection, rad.
    pub pvs_h3_angle_rad: f64,
    /// Longest replacement segment, s.
    pub max_event_duration_s: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_pv: 1,
            shift_max_s: 300,
            min_cloud_duration_s: 90,
            max_drop_ratio: 0.9,
            replacement_events: (2, 12),
            retry_budget: 100,
            seed: 0,
            splice_attenuation: 0.6,
            cloud_detect_ratio: 0.9,
            irradiance_floor_wm2: 5.0,
            interior_fraction: 0.25,
            pvs_h3_angle_rad: 0.0,
            max_event_duration_s: 600,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_pv == 0 {
            return Err(Error::InvalidInput("num_pv must be at least 1".into()));
        }
        if self.min_cloud_duration_s == 0 {
            return Err(Error::InvalidInput(
                "min_cloud_duration_s must be at least 1".into(),
            ));
        }
        if !(0.0 < self.max_drop_ratio && self.max_drop_ratio < 1.0) {
            return Err(Error::InvalidInput(
                "max_drop_ratio must lie in (0, 1)".into(),
            ));
        }
        if self.replacement_events.0 > self.replacement_events.1 {
            return Err(Error::InvalidInput("empty replacement event range".into()));
        }
        Ok(())
    }
}

/// Which synthesizer produced a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Training,
    Testing,
}

/// One replacement event: a contiguous source segment and where it landed
/// on each unit's series.
#[derive(Debug, Clone)]
pub struct SpliceEvent {
    /// Index of the source day in the pool.
    pub source_day: usize,
    /// Sample index of the segment start within the source day.
    pub source_start: usize,
    pub len: usize,
    /// Per-unit shift relative to the template position (`shifts[0] == 0`).
    pub shifts: Vec<i32>,
}

/// One synthesized cloudy day.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: u32,
    pub kind: ScenarioKind,
    /// First timestamp of the day (seconds since midnight).
    pub t0: u32,
    /// Per-unit series; index 0 is the template unit S1.
    pub per_pvs: Vec<Vec<Sample>>,
    /// Irradiance of the unspliced sunny template, the validator's
    /// clear reference.
    pub base_irradiance: Vec<f64>,
    /// Scenario temperature (taken from S1).
    pub temperature: Vec<f64>,
    /// Scenario irradiance (taken from S1).
    pub irradiance: Vec<f64>,
    /// Feeder-head 3rd-harmonic feature, A.
    pub h3_feature: Vec<f64>,
    /// Sum of the per-unit powers, kW.
    pub aggregate_power: Vec<f64>,
    pub splices: Vec<SpliceEvent>,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.aggregate_power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Plain sum of the per-unit inverter H3 amplitudes (the quantity the
    /// training feature equals, and the "true" signal the testing feature
    /// approximates).
    pub fn pvs_h3_sum_series(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| self.per_pvs.iter().map(|s| s[idx].h3_amp_a).sum())
            .collect()
    }
}

/// Validator verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    DropRatio,
    CloudDuration,
    SpliceShift,
    Aggregation,
    Provenance,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintKind::DropRatio => "drop_ratio",
            ConstraintKind::CloudDuration => "cloud_duration",
            ConstraintKind::SpliceShift => "splice_shift",
            ConstraintKind::Aggregation => "aggregation",
            ConstraintKind::Provenance => "provenance",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub constraint: ConstraintKind,
    /// Timestamp of the offending instant when applicable.
    pub t: Option<u32>,
    pub detail: String,
}

/// Outcome of [`validate_scenario`]; passes exactly when no violation was
/// recorded.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, constraint: ConstraintKind, t: Option<u32>, detail: String) {
        self.violations.push(Violation {
            constraint,
            t,
            detail,
        });
    }
}

/// Synthesize a training scenario: spliced per-unit series, features from
/// S1, and the H3 feature as the plain sum of per-unit amplitudes.
pub fn synthesize_training_scenario(
    pool: &MeasurementPool,
    cfg: &ScenarioConfig,
    rng: &mut Rng,
) -> Result<Scenario> {
    synthesize(pool, cfg, rng, ScenarioKind::Training, &[])
}

/// Synthesize a testing scenario: like training, but the feature passes
/// the co-phasal PVS injection plus the unbalanced load harmonics through
/// the zero-sequence filter. Only the injected load harmonics are added;
/// the load fundamental plays no role here.
pub fn synthesize_test_scenario(
    pool: &MeasurementPool,
    loads: &[LoadSpec],
    cfg: &ScenarioConfig,
    rng: &mut Rng,
) -> Result<Scenario> {
    if loads.is_empty() {
        return Err(Error::InvalidInput(
            "testing scenarios need at least one load".into(),
        ));
    }
    synthesize(pool, cfg, rng, ScenarioKind::Testing, loads)
}

fn synthesize(
    pool: &MeasurementPool,
    cfg: &ScenarioConfig,
    rng: &mut Rng,
    kind: ScenarioKind,
    loads: &[LoadSpec],
) -> Result<Scenario> {
    cfg.validate()?;
    let template = select_sunny_day(pool, rng)?;
    let sources: Vec<usize> = pool
        .days
        .iter()
        .enumerate()
        .filter(|(_, d)| d.label != DayLabel::Sunny)
        .map(|(i, _)| i)
        .collect();
    if sources.is_empty() {
        return Err(Error::InvalidInput(
            "pool has no non-sunny day to splice from".into(),
        ));
    }

    let n = template.samples.len();
    let base_irr: Vec<f64> = template
        .samples
        .iter()
        .map(|s| s.irradiance_wm2)
        .collect();
    let peak = base_irr.iter().cloned().fold(0.0, f64::max);
    let interior_floor = cfg.interior_fraction * peak;
    let shift = cfg.shift_max_s as usize;
    let keep = 1.0 - cfg.max_drop_ratio;

    let n_events = rng.gen_range(cfg.replacement_events.0..=cfg.replacement_events.1) as usize;
    let mut events: Vec<SpliceEvent> = Vec::with_capacity(n_events);
    let mut occupied: Vec<(usize, usize)> = Vec::new(); // template (start, len)

    for _ in 0..n_events {
        let mut accepted = None;
        let mut last_reason = "no attempt made";
        for _attempt in 0..cfg.retry_budget {
            let day_idx = sources[rng.gen_range(0..sources.len())];
            let src = &pool.days[day_idx];
            let lo_len = cfg.min_cloud_duration_s as usize + 5;
            let hi_len = (cfg.max_event_duration_s as usize).max(lo_len);
            let len = rng.gen_range(lo_len..=hi_len);
            let m = src.samples.len().min(n);
            if len + 2 * shift + 2 >= m {
                last_reason = "segment longer than the usable day";
                continue;
            }
            // Enumerate every admissible start for this (day, len) pair and
            // pick uniformly among them; rejection alone thrashes on
            // crowded days.
            let starts = admissible_starts(
                src,
                &base_irr,
                len,
                shift,
                m,
                interior_floor,
                cfg.splice_attenuation,
                keep,
                cfg.irradiance_floor_wm2,
                &occupied,
            );
            if starts.is_empty() {
                last_reason = "no admissible position for the drawn segment";
                continue;
            }
            let start = starts[rng.gen_range(0..starts.len())];
            accepted = Some((day_idx, start, len));
            break;
        }
        let Some((day_idx, start, len)) = accepted else {
            return Err(Error::Unsatisfiable {
                attempts: cfg.retry_budget,
                constraint: last_reason.to_string(),
            });
        };
        occupied.push((start, len));
        events.push(SpliceEvent {
            source_day: day_idx,
            source_start: start,
            len,
            shifts: vec![0; cfg.num_pv],
        });
    }
    events.sort_by_key(|e| e.source_start);

    // Per-unit shifts: the same cloud reaches unit i displaced by at most
    // shift_max. A shift must keep the segment detectable against the
    // template and respect the entry drop bound; shift 0 always qualifies.
    for ev in &mut events {
        let src = &pool.days[ev.source_day];
        for i in 1..cfg.num_pv {
            let mut chosen = 0i32;
            for _attempt in 0..cfg.retry_budget {
                let cand = rng.gen_range(-(shift as i32)..=shift as i32);
                if shift_ok(
                    src,
                    &base_irr,
                    ev.source_start,
                    ev.len,
                    cand,
                    cfg.cloud_detect_ratio,
                    keep,
                    cfg.irradiance_floor_wm2,
                ) {
                    chosen = cand;
                    break;
                }
            }
            ev.shifts[i] = chosen;
        }
    }

    // Apply the splices. Spliced rows keep their measured tuple and adopt
    // the destination timestamp.
    let mut per_pvs: Vec<Vec<Sample>> = vec![template.samples.clone(); cfg.num_pv];
    for ev in &events {
        let src = &pool.days[ev.source_day];
        for (i, series) in per_pvs.iter_mut().enumerate() {
            let dest = (ev.source_start as i64 + ev.shifts[i] as i64) as usize;
            for k in 0..ev.len {
                let row = src.samples[ev.source_start + k];
                let t = series[dest + k].t;
                series[dest + k] = Sample { t, ..row };
            }
        }
    }

    // Features. Temperature and irradiance come from S1; aggregation is a
    // fixed-order sum so reruns are bit-identical.
    let temperature: Vec<f64> = per_pvs[0].iter().map(|s| s.temperature_c).collect();
    let irradiance: Vec<f64> = per_pvs[0].iter().map(|s| s.irradiance_wm2).collect();
    let mut aggregate_power = Vec::with_capacity(n);
    let mut h3_feature = Vec::with_capacity(n);
    for idx in 0..n {
        let mut power = 0.0;
        let mut h3_sum = 0.0;
        for series in &per_pvs {
            power += series[idx].power_kw;
            h3_sum += series[idx].h3_amp_a;
        }
        aggregate_power.push(power);
        let feature = match kind {
            ScenarioKind::Training => h3_sum,
            ScenarioKind::Testing => {
                let pvs = Complex64::from_polar(h3_sum, cfg.pvs_h3_angle_rad);
                let load = zero_sequence(&load_h3_phasors(loads, per_pvs[0][idx].t, rng));
                (pvs + load).norm()
            }
        };
        h3_feature.push(feature);
    }

    Ok(Scenario {
        id: 0,
        kind,
        t0: template.samples[0].t,
        per_pvs,
        base_irradiance: base_irr,
        temperature,
        irradiance,
        h3_feature,
        aggregate_power,
        splices: events,
    })
}

/// All starts where a `len`-second segment of `src` may replace the
/// template: deeply attenuated throughout, inside the well-lit part of
/// the day with shift margin, clear of already-placed events, and with
/// admissible boundary transitions.
#[allow(clippy::too_many_arguments)]
fn admissible_starts(
    src: &crate::measurement::DaySeries,
    base_irr: &[f64],
    len: usize,
    shift: usize,
    usable: usize,
    interior_floor: f64,
    splice_attenuation: f64,
    keep: f64,
    floor: f64,
    occupied: &[(usize, usize)],
) -> Vec<usize> {
    // Prefix sums over the joint "deep and interior" predicate.
    let mut ok_prefix = vec![0u32; usable + 1];
    for idx in 0..usable {
        let deep = src.samples[idx].irradiance_wm2 < splice_attenuation * base_irr[idx];
        let interior = base_irr[idx] >= interior_floor;
        ok_prefix[idx + 1] = ok_prefix[idx] + u32::from(deep && interior);
    }
    let lo = shift + 1;
    let hi = usable.saturating_sub(len + shift + 1);
    if lo > hi {
        return Vec::new();
    }
    let min_gap = 2 * shift + 5;
    (lo..=hi)
        .filter(|&start| {
            if ok_prefix[start + len] - ok_prefix[start] != len as u32 {
                return false;
            }
            // The shifted copies must also stay interior.
            if base_irr[start - shift] < interior_floor
                || base_irr[(start + len + shift).min(usable - 1)] < interior_floor
            {
                return false;
            }
            // Entry and exit 1-second transitions at the unshifted spot.
            let entry_prev = base_irr[start - 1];
            if entry_prev > floor && src.samples[start].irradiance_wm2 < keep * entry_prev {
                return false;
            }
            let exit_prev = src.samples[start + len - 1].irradiance_wm2;
            if exit_prev > floor && base_irr[start + len] < keep * exit_prev {
                return false;
            }
            occupied
                .iter()
                .all(|&(s, l)| start + len + min_gap <= s || s + l + min_gap <= start)
        })
        .collect()
}

/// Whether a shifted copy of the segment stays detectable and respects
/// the drop bound at its boundaries.
#[allow(clippy::too_many_arguments)]
fn shift_ok(
    src: &crate::measurement::DaySeries,
    base_irr: &[f64],
    start: usize,
    len: usize,
    shift: i32,
    detect_ratio: f64,
    keep: f64,
    floor: f64,
) -> bool {
    let dest = start as i64 + shift as i64;
    if dest < 1 || (dest as usize + len + 1) > base_irr.len() {
        return false;
    }
    let dest = dest as usize;
    for k in 0..len {
        let b = base_irr[dest + k];
        if b <= floor || src.samples[start + k].irradiance_wm2 >= detect_ratio * b {
            return false;
        }
    }
    let entry_prev = base_irr[dest - 1];
    if entry_prev > floor && src.samples[start].irradiance_wm2 < keep * entry_prev {
        return false;
    }
    let exit_prev = src.samples[start + len - 1].irradiance_wm2;
    if exit_prev > floor && base_irr[dest + len] < keep * exit_prev {
        return false;
    }
    true
}

/// Check a scenario against the generation constraints.
///
/// Violations are reported, not thrown: (a) the 1-second irradiance drop
/// bound per unit, (b) minimum cloud-segment duration against the sunny
/// template, (c) cross-unit splice shifts within `shift_max` (from the
/// splice metadata when present), and (d) exact aggregation.
pub fn validate_scenario(s: &Scenario, cfg: &ScenarioConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let floor = cfg.irradiance_floor_wm2;
    let keep = 1.0 - cfg.max_drop_ratio;

    for (i, series) in s.per_pvs.iter().enumerate() {
        // (a) 1-second drop bound.
        for w in series.windows(2) {
            if w[0].irradiance_wm2 > floor && w[1].irradiance_wm2 < keep * w[0].irradiance_wm2 {
                report.push(
                    ConstraintKind::DropRatio,
                    Some(w[1].t),
                    format!(
                        "unit {i}: irradiance {:.3} -> {:.3} keeps ratio {:.4} < {keep:.2}",
                        w[0].irradiance_wm2,
                        w[1].irradiance_wm2,
                        w[1].irradiance_wm2 / w[0].irradiance_wm2
                    ),
                );
            }
        }
        // (b) cloud segments at least min duration, measured against the
        // sunny template.
        let mut run_start: Option<usize> = None;
        for idx in 0..=series.len() {
            let attenuated = idx < series.len() && {
                let b = s.base_irradiance[idx];
                b > floor && series[idx].irradiance_wm2 < cfg.cloud_detect_ratio * b
            };
            match (attenuated, run_start) {
                (true, None) => run_start = Some(idx),
                (false, Some(start)) => {
                    let run = idx - start;
                    if run < cfg.min_cloud_duration_s as usize {
                        report.push(
                            ConstraintKind::CloudDuration,
                            Some(series[start].t),
                            format!("unit {i}: cloud segment of {run} s"),
                        );
                    }
                    run_start = None;
                }
                _ => {}
            }
        }
    }

    // (c) splice shifts from metadata.
    for (e, ev) in s.splices.iter().enumerate() {
        for (i, &sh) in ev.shifts.iter().enumerate() {
            if sh.unsigned_abs() > cfg.shift_max_s {
                report.push(
                    ConstraintKind::SpliceShift,
                    None,
                    format!("event {e}, unit {i}: shift {sh} exceeds {}", cfg.shift_max_s),
                );
            }
        }
    }

    // (d) exact aggregation, same summation order as generation.
    for idx in 0..s.len() {
        let mut sum = 0.0;
        for series in &s.per_pvs {
            sum += series[idx].power_kw;
        }
        if sum != s.aggregate_power[idx] {
            report.push(
                ConstraintKind::Aggregation,
                Some(s.per_pvs[0][idx].t),
                format!("stored {} vs recomputed {sum}", s.aggregate_power[idx]),
            );
        }
    }
    report
}

/// Check that every tuple of every unit series exists verbatim in the
/// pool: spliced values are displaced, never fabricated.
pub fn validate_provenance(s: &Scenario, pool: &MeasurementPool) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut known: HashSet<[u64; 4]> = HashSet::new();
    for d in &pool.days {
        for r in &d.samples {
            known.insert(tuple_key(r));
        }
    }
    for (i, series) in s.per_pvs.iter().enumerate() {
        for r in series {
            if !known.contains(&tuple_key(r)) {
                report.push(
                    ConstraintKind::Provenance,
                    Some(r.t),
                    format!("unit {i}: tuple not present in the pool"),
                );
            }
        }
    }
    report
}

fn tuple_key(s: &Sample) -> [u64; 4] {
    [
        s.temperature_c.to_bits(),
        s.irradiance_wm2.to_bits(),
        s.h3_amp_a.to_bits(),
        s.power_kw.to_bits(),
    ]
}

/// One row of the flat training table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetRow {
    pub scenario_id: u32,
    pub t: u32,
    /// temperature_c, irradiance_wm2, h3_feature_a.
    pub features: [f64; 3],
    pub target_kw: f64,
}

/// Flat feature/target table concatenated over scenarios.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
}

impl Dataset {
    pub fn from_scenarios(scenarios: &[Scenario]) -> Self {
        let mut rows = Vec::with_capacity(scenarios.iter().map(Scenario::len).sum());
        for s in scenarios {
            for idx in 0..s.len() {
                rows.push(DatasetRow {
                    scenario_id: s.id,
                    t: s.per_pvs[0][idx].t,
                    features: [s.temperature[idx], s.irradiance[idx], s.h3_feature[idx]],
                    target_kw: s.aggregate_power[idx],
                });
            }
        }
        Dataset { rows }
    }

    /// Unique scenario ids in first-appearance order.
    pub fn scenario_ids(&self) -> Vec<u32> {
        let mut seen = HashSet::new();
        let mut ids = Vec::new();
        for r in &self.rows {
            if seen.insert(r.scenario_id) {
                ids.push(r.scenario_id);
            }
        }
        ids
    }

    /// Scenario-file CSV bytes:
    /// `scenario_id,t,temperature_c,irradiance_wm2,h3_feature_a,aggregate_power_kw`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "scenario_id,t,temperature_c,irradiance_wm2,h3_feature_a,aggregate_power_kw\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.scenario_id, r.t, r.features[0], r.features[1], r.features[2], r.target_kw
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let rec = rec.map_err(|e| Error::CsvFormat {
                line,
                msg: e.to_string(),
            })?;
            if rec.len() < 6 {
                return Err(Error::CsvFormat {
                    line,
                    msg: format!("expected 6 columns, got {}", rec.len()),
                });
            }
            let parse = |idx: usize| -> Result<f64> {
                rec[idx].parse().map_err(|_| Error::CsvFormat {
                    line,
                    msg: format!("bad float `{}`", &rec[idx]),
                })
            };
            rows.push(DatasetRow {
                scenario_id: rec[0].parse().map_err(|_| Error::CsvFormat {
                    line,
                    msg: format!("bad scenario id `{}`", &rec[0]),
                })?,
                t: rec[1].parse().map_err(|_| Error::CsvFormat {
                    line,
                    msg: format!("bad timestamp `{}`", &rec[1]),
                })?,
                features: [parse(2)?, parse(3)?, parse(4)?],
                target_kw: parse(5)?,
            });
        }
        Ok(Dataset { rows })
    }
}

/// Sidecar manifest written next to a scenario CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSetManifest {
    pub kind: ScenarioKind,
    pub count: usize,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub pool_sha256: String,
}

/// Generate `n` training scenarios (ids 1..=n) and flatten them into a
/// dataset. Scenario `i` derives its RNG stream from `cfg.seed`, so the
/// table is identical at any thread count.
pub fn build_training_dataset(
    pool: &MeasurementPool,
    cfg: &ScenarioConfig,
    n_scenarios: usize,
) -> Result<Dataset> {
    let scenarios = batch(n_scenarios, cfg.seed, |rng| {
        synthesize_training_scenario(pool, cfg, rng)
    })?;
    Ok(Dataset::from_scenarios(&scenarios))
}

/// Generate `n` testing scenarios (ids 1..=n).
pub fn build_test_scenarios(
    pool: &MeasurementPool,
    loads: &[LoadSpec],
    cfg: &ScenarioConfig,
    n_scenarios: usize,
) -> Result<Vec<Scenario>> {
    batch(n_scenarios, cfg.seed, |rng| {
        synthesize_test_scenario(pool, loads, cfg, rng)
    })
}

fn batch<F>(n: usize, seed: u64, f: F) -> Result<Vec<Scenario>>
where
    F: Fn(&mut Rng) -> Result<Scenario> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidInput(
            "need at least one scenario".into(),
        ));
    }
    let results = par::map_indexed(n, |i| {
        let mut rng = rng::derived(seed, i as u64);
        f(&mut rng).map(|mut s| {
            s.id = i as u32 + 1;
            s
        })
    });
    results.into_iter().collect()
}

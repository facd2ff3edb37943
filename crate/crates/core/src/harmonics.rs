//! Harmonic phasor extraction, zero-sequence computation, and correlation
//! screening.
//!
//! Feeder-head currents are decomposed into per-order, per-phase phasors
//! with a single-bin DFT over an integer number of fundamental cycles
//! (leakage-free at exact harmonic frequencies). The zero-sequence
//! component `(Ia + Ib + Ic) / 3` then separates co-phasal three-phase
//! injections, such as inverter 3rd harmonics, from unbalanced single-phase
//! load harmonics, which largely cancel.
//!
//! Phasor convention: amplitude `A` and angle `phi` describe
//! `A * cos(2*pi*h*f0*t + phi)` with `t = 0` at the start of the analysis
//! window.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest harmonic order considered by the feature pipeline.
pub const MAX_ORDER: u32 = 23;

/// Three-phase current record sampled at a fixed rate.
#[derive(Debug, Clone)]
pub struct Waveform {
    /// Per-phase samples in amperes, indexed a, b, c. Equal lengths.
    pub phases: [Vec<f64>; 3],
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// Fundamental frequency in Hz.
    pub fundamental: f64,
}

/// Sidecar metadata stored next to a waveform CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub sample_rate_hz: f64,
    pub fundamental_hz: f64,
}

impl Waveform {
    /// Validates the Nyquist bound for order [`MAX_ORDER`] and equal phase
    /// lengths.
    pub fn new(phases: [Vec<f64>; 3], sample_rate: f64, fundamental: f64) -> Result<Self> {
        if !(fundamental > 0.0) || !(sample_rate > 0.0) {
            return Err(Error::InvalidInput(
                "sample rate and fundamental must be positive".into(),
            ));
        }
        if sample_rate < 2.0 * MAX_ORDER as f64 * fundamental {
            return Err(Error::InvalidInput(format!(
                "sample rate {sample_rate} Hz below Nyquist for order {MAX_ORDER} at {fundamental} Hz"
            )));
        }
        let n = phases[0].len();
        if phases.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidInput("phase arrays differ in length".into()));
        }
        Ok(Self {
            phases,
            sample_rate,
            fundamental,
        })
    }

    /// Samples per fundamental cycle.
    pub fn samples_per_cycle(&self) -> f64 {
        self.sample_rate / self.fundamental
    }

    /// Number of samples per phase.
    pub fn len(&self) -> usize {
        self.phases[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Instantaneous zero-sequence waveform `(ia + ib + ic) / 3`.
    pub fn zero_sequence_waveform(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| (self.phases[0][i] + self.phases[1][i] + self.phases[2][i]) / 3.0)
            .collect()
    }

    /// Write samples as CSV `t_s,ia,ib,ic` plus a JSON sidecar with the
    /// sample rate and fundamental.
    pub fn save(&self, csv_path: &Path, sidecar_path: &Path) -> Result<()> {
        let mut out = String::from("t_s,ia,ib,ic\n");
        for i in 0..self.len() {
            let t = i as f64 / self.sample_rate;
            out.push_str(&format!(
                "{},{},{},{}\n",
                t, self.phases[0][i], self.phases[1][i], self.phases[2][i]
            ));
        }
        std::fs::write(csv_path, out)?;
        let meta = WaveformMeta {
            sample_rate_hz: self.sample_rate,
            fundamental_hz: self.fundamental,
        };
        std::fs::write(sidecar_path, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    /// Load a waveform from CSV plus its JSON sidecar.
    pub fn load(csv_path: &Path, sidecar_path: &Path) -> Result<Self> {
        let meta: WaveformMeta = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
        let mut rdr = csv::Reader::from_path(csv_path)?;
        let mut phases = [Vec::new(), Vec::new(), Vec::new()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::CsvFormat {
                line: i as u64 + 2,
                msg: e.to_string(),
            })?;
            if rec.len() < 4 {
                return Err(Error::CsvFormat {
                    line: i as u64 + 2,
                    msg: format!("expected 4 columns, got {}", rec.len()),
                });
            }
            for p in 0..3 {
                let v: f64 = rec[p + 1].parse().map_err(|_| Error::CsvFormat {
                    line: i as u64 + 2,
                    msg: format!("bad float `{}`", &rec[p + 1]),
                })?;
                phases[p].push(v);
            }
        }
        Waveform::new(phases, meta.sample_rate_hz, meta.fundamental_hz)
    }
}

/// Per-order, per-phase complex phasors.
#[derive(Debug, Clone, Default)]
pub struct HarmonicPhasorSet {
    /// Keyed by harmonic order; value is the (a, b, c) phasor triple.
    pub by_order: BTreeMap<u32, [Complex64; 3]>,
}

impl HarmonicPhasorSet {
    /// Amplitude of phase `p` at `order`, or 0 when the order is absent.
    pub fn amplitude(&self, order: u32, phase: usize) -> f64 {
        self.by_order
            .get(&order)
            .map(|ph| ph[phase].norm())
            .unwrap_or(0.0)
    }

    /// Zero-sequence phasor of one extracted order.
    pub fn zero_sequence(&self, order: u32) -> Option<SequencePhasor> {
        self.by_order.get(&order).map(|ph| SequencePhasor {
            order,
            zero_seq: zero_sequence(ph),
        })
    }
}

/// Zero-sequence phasor of one harmonic order.
#[derive(Debug, Clone, Copy)]
pub struct SequencePhasor {
    pub order: u32,
    pub zero_seq: Complex64,
}

/// Zero-sequence component of a three-phase phasor set:
/// `(Ia + Ib + Ic) / 3`.
pub fn zero_sequence(phasors: &[Complex64; 3]) -> Complex64 {
    (phasors[0] + phasors[1] + phasors[2]) / 3.0
}

/// Normalize an angle to `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Single-bin DFT of `samples` at `cycles_in_window` periods of the bin
/// frequency, amplitude-normalized for a real tone.
///
/// For `x[n] = A cos(w n + phi)` with an integer number of cycles in the
/// window, returns exactly `A * exp(j phi)` up to rounding.
fn single_bin(samples: &[f64], order: u32, samples_per_cycle: f64) -> Complex64 {
    let n = samples.len();
    let w = 2.0 * PI * order as f64 / samples_per_cycle;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &x) in samples.iter().enumerate() {
        let ang = w * i as f64;
        acc += Complex64::new(x * ang.cos(), -x * ang.sin());
    }
    acc * 2.0 / n as f64
}

/// Extract per-phase phasors of the requested orders over the first
/// `window_cycles` fundamental cycles of the waveform.
///
/// Errors when the window does not span an integer number of samples or an
/// order exceeds Nyquist.
pub fn extract_phasors(
    w: &Waveform,
    orders: &[u32],
    window_cycles: u32,
) -> Result<HarmonicPhasorSet> {
    extract_phasors_at(w, orders, window_cycles, 0)
}

/// Like [`extract_phasors`], starting at sample `offset`.
pub fn extract_phasors_at(
    w: &Waveform,
    orders: &[u32],
    window_cycles: u32,
    offset: usize,
) -> Result<HarmonicPhasorSet> {
    let spc = w.samples_per_cycle();
    let exact = spc * window_cycles as f64;
    let window = exact.round() as usize;
    if (exact - window as f64).abs() > 1e-9 || window == 0 {
        return Err(Error::InvalidInput(format!(
            "window of {window_cycles} cycles spans {exact} samples; must be an integer"
        )));
    }
    if offset + window > w.len() {
        return Err(Error::InvalidInput(format!(
            "window [{offset}, {}) exceeds waveform length {}",
            offset + window,
            w.len()
        )));
    }
    let nyquist_order = (w.sample_rate / (2.0 * w.fundamental)).floor() as u32;
    let mut set = HarmonicPhasorSet::default();
    for &order in orders {
        if order == 0 || order > nyquist_order {
            return Err(Error::InvalidInput(format!(
                "order {order} outside (0, {nyquist_order}] at this sample rate"
            )));
        }
        let mut triple = [Complex64::new(0.0, 0.0); 3];
        for (p, phase) in w.phases.iter().enumerate() {
            triple[p] = single_bin(&phase[offset..offset + window], order, spc);
        }
        set.by_order.insert(order, triple);
    }
    Ok(set)
}

/// Per-second series of the zero-sequence amplitude of one order.
///
/// A `window_cycles`-cycle window slides with a 1 s hop; each window yields
/// one `|zero_sequence|` value. This is the scalar feature the nowcasting
/// model consumes.
pub fn zero_sequence_amplitude_series(
    w: &Waveform,
    order: u32,
    window_cycles: u32,
) -> Result<Vec<f64>> {
    let hop = w.sample_rate.round() as usize;
    if hop == 0 {
        return Err(Error::InvalidInput("sample rate below 1 Hz".into()));
    }
    let spc = w.samples_per_cycle();
    let window = (spc * window_cycles as f64).round() as usize;
    let mut series = Vec::new();
    let mut offset = 0;
    while offset + window <= w.len() {
        let set = extract_phasors_at(w, &[order], window_cycles, offset)?;
        let z = set.zero_sequence(order).expect("order just extracted");
        series.push(z.zero_seq.norm());
        offset += hop;
    }
    Ok(series)
}

/// Pearson correlation coefficient of two equal-length series.
///
/// Computed from centered sums; symmetric, and invariant to affine maps
/// with positive scale. Errors on length mismatch, fewer than two points,
/// or a constant series (zero denominator).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "correlation needs at least two points".into(),
        ));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Correlation of each order's amplitude series against the power series.
///
/// `amplitudes` maps harmonic order to its aligned per-instant amplitude
/// series; the result maps order to the Pearson coefficient.
pub fn correlation_table(
    amplitudes: &BTreeMap<u32, Vec<f64>>,
    power: &[f64],
) -> Result<BTreeMap<u32, f64>> {
    let mut table = BTreeMap::new();
    for (&order, amps) in amplitudes {
        table.insert(order, pearson(amps, power)?);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tone_waveform(specs: &[(u32, f64, f64)], fs: f64, f0: f64, seconds: f64) -> Waveform {
        let n = (fs * seconds).round() as usize;
        let make = |_p: usize| {
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    specs
                        .iter()
                        .map(|&(h, a, phi)| a * (2.0 * PI * h as f64 * f0 * t + phi).cos())
                        .sum::<f64>()
                })
                .collect::<Vec<f64>>()
        };
        Waveform::new([make(0), make(1), make(2)], fs, f0).unwrap()
    }

    #[test]
    fn single_tone_exact_bin() {
        // 5*sin(2*pi*150*t) = 5*cos(2*pi*150*t - pi/2) on all phases at 10 kHz.
        let w = tone_waveform(&[(3, 5.0, -PI / 2.0)], 10_000.0, 50.0, 0.2);
        let orders: Vec<u32> = (1..=MAX_ORDER).collect();
        let set = extract_phasors(&w, &orders, 10).unwrap();
        for h in 1..=MAX_ORDER {
            let amp = set.amplitude(h, 0);
            if h == 3 {
                assert_abs_diff_eq!(amp, 5.0, epsilon = 1e-9);
            } else {
                assert!(amp <= 1e-9, "order {h} leaked amplitude {amp}");
            }
        }
    }

    #[test]
    fn two_tone_amplitude_and_angle() {
        // 10*sin(2*pi*50*t) + 0.5*sin(2*pi*150*t + 0.3); sin(x) = cos(x - pi/2).
        let w = tone_waveform(
            &[(1, 10.0, -PI / 2.0), (3, 0.5, 0.3 - PI / 2.0)],
            10_000.0,
            50.0,
            0.2,
        );
        let set = extract_phasors(&w, &[1, 3], 10).unwrap();
        let p1 = set.by_order[&1][0];
        let p3 = set.by_order[&3][0];
        assert_abs_diff_eq!(p1.norm(), 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p1.arg(), -PI / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p3.norm(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(p3.arg(), 0.3 - PI / 2.0, epsilon = 1e-9);
    }

    /// Full-DFT oracle: naive O(N^2) DFT, independent of `single_bin`.
    fn naive_dft_bin(samples: &[f64], k: usize) -> Complex64 {
        let n = samples.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &x) in samples.iter().enumerate() {
            let ang = -2.0 * PI * (k * i) as f64 / n as f64;
            acc += Complex64::from_polar(x, ang);
        }
        acc * 2.0 / n as f64
    }

    #[test]
    fn noisy_two_tone_matches_full_dft() {
        use rand::Rng as _;
        let fs = 10_000.0;
        let mut w = tone_waveform(&[(1, 2.0, 0.4), (3, 0.8, -1.1)], fs, 50.0, 0.2);
        let mut rng = crate::rng::seeded(11);
        for p in 0..3 {
            for v in &mut w.phases[p] {
                *v += rng.gen_range(-0.01..0.01);
            }
        }
        let cycles = 10;
        let set = extract_phasors(&w, &[1, 3], cycles).unwrap();
        for &h in &[1u32, 3] {
            // Window bin index of order h is h * cycles.
            let k = (h * cycles) as usize;
            let oracle = naive_dft_bin(&w.phases[0][..2000], k);
            let got = set.by_order[&h][0];
            assert_abs_diff_eq!(got.norm(), oracle.norm(), epsilon = 1e-9);
            assert!((got.norm() - [2.0, 0.0, 0.8][h as usize - 1]).abs() < 0.01);
        }
    }

    #[test]
    fn reconstruction_at_exact_bins() {
        let specs = [(1, 3.0, 0.2), (3, 1.0, -0.7), (5, 0.25, 2.0)];
        let fs = 10_000.0;
        let f0 = 50.0;
        let w = tone_waveform(&specs, fs, f0, 0.2);
        let set = extract_phasors(&w, &[1, 3, 5], 10).unwrap();
        let n = w.len();
        let mut sq = 0.0;
        for i in 0..n {
            let t = i as f64 / fs;
            let rec: f64 = set
                .by_order
                .iter()
                .map(|(&h, ph)| ph[0].norm() * (2.0 * PI * h as f64 * f0 * t + ph[0].arg()).cos())
                .sum();
            sq += (rec - w.phases[0][i]).powi(2);
        }
        assert!((sq / n as f64).sqrt() <= 1e-9);
    }

    #[test]
    fn zero_sequence_balanced_cancels() {
        let ph = [
            Complex64::from_polar(1.0, 0.0),
            Complex64::from_polar(1.0, -2.0 * PI / 3.0),
            Complex64::from_polar(1.0, 2.0 * PI / 3.0),
        ];
        assert!(zero_sequence(&ph).norm() <= 1e-12);
    }

    #[test]
    fn zero_sequence_cophasal_passes() {
        let ph = [Complex64::from_polar(1.0, 0.0); 3];
        let z = zero_sequence(&ph);
        assert_abs_diff_eq!(z.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_sequence_single_phase_third() {
        let ph = [
            Complex64::from_polar(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let z = zero_sequence(&ph);
        assert_abs_diff_eq!(z.norm(), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z.arg(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_sequence_linearity() {
        let mut rng = crate::rng::seeded(5);
        use rand::Rng as _;
        let mut rand_triple = || {
            [0, 1, 2].map(|_| {
                Complex64::from_polar(rng.gen_range(0.0..5.0), rng.gen_range(-PI..PI))
            })
        };
        for _ in 0..100 {
            let p = rand_triple();
            let q = rand_triple();
            let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let mixed = [0, 1, 2].map(|i| a * p[i] + b * q[i]);
            let lhs = zero_sequence(&mixed);
            let rhs = a * zero_sequence(&p) + b * zero_sequence(&q);
            assert!((lhs - rhs).norm() <= 1e-12);
        }
    }

    #[test]
    fn extraction_and_zero_sequence_commute() {
        // Unbalanced order-3 content: different amplitude and angle per phase.
        let fs = 10_000.0;
        let f0 = 50.0;
        let n = 2000usize;
        let phase_specs = [(1.2, 0.3), (0.4, 2.1), (0.9, -1.4)];
        let phases = phase_specs.map(|(a, phi)| {
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    a * (2.0 * PI * 3.0 * f0 * t + phi).cos()
                        + 2.0 * (2.0 * PI * f0 * t).cos()
                })
                .collect::<Vec<f64>>()
        });
        let w = Waveform::new(phases, fs, f0).unwrap();

        // Route 1: per-phase phasors, then zero sequence.
        let set = extract_phasors(&w, &[3], 10).unwrap();
        let z1 = set.zero_sequence(3).unwrap().zero_seq;

        // Route 2: instantaneous zero-sequence waveform, then extraction.
        let zw = w.zero_sequence_waveform();
        let wz = Waveform::new([zw.clone(), zw.clone(), zw], fs, f0).unwrap();
        let z2 = extract_phasors(&wz, &[3], 10).unwrap().by_order[&3][0];

        assert!((z1 - z2).norm() <= 1e-9, "routes differ: {z1} vs {z2}");
    }

    #[test]
    fn pearson_exact_linear() {
        assert_abs_diff_eq!(
            pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pearson_hand_value() {
        // Covariance sum 4.0, each centered sum of squares 5.0 -> 4/5.
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ConstantSeries)
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn pearson_independent_series_near_zero() {
        use rand::Rng as _;
        let mut rng = crate::rng::seeded(3);
        let n = 10_000;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        assert!(pearson(&x, &y).unwrap().abs() < 0.05);
    }

    #[test]
    fn correlation_table_order_one_proportional() {
        let power: Vec<f64> = (0..500).map(|i| 1.0 + (i as f64 * 0.01).sin().abs()).collect();
        let mut amps = BTreeMap::new();
        // Fundamental current proportional to power at 230 V.
        amps.insert(1, power.iter().map(|p| p / 0.230).collect::<Vec<_>>());
        let table = correlation_table(&amps, &power).unwrap();
        assert_abs_diff_eq!(table[&1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn window_must_be_integer_samples() {
        let w = tone_waveform(&[(1, 1.0, 0.0)], 2333.0, 50.0, 0.5);
        assert!(extract_phasors(&w, &[1], 1).is_err());
    }

    #[test]
    fn order_beyond_nyquist_rejected() {
        let w = tone_waveform(&[(1, 1.0, 0.0)], 2400.0, 50.0, 0.5);
        assert!(extract_phasors(&w, &[24], 10).is_err());
        assert!(extract_phasors(&w, &[25], 10).is_err());
    }

    #[test]
    fn waveform_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let w = tone_waveform(&[(3, 1.5, 0.7)], 5000.0, 50.0, 0.1);
        let csv = dir.path().join("w.csv");
        let sidecar = dir.path().join("w.json");
        w.save(&csv, &sidecar).unwrap();
        let back = Waveform::load(&csv, &sidecar).unwrap();
        assert_eq!(back.len(), w.len());
        assert_eq!(back.phases[1], w.phases[1]);
        assert_eq!(back.sample_rate, w.sample_rate);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pearson_affine(
                xs in proptest::collection::vec(-100.0f64..100.0, 3..50),
                a in 0.01f64..50.0,
                b in -100.0f64..100.0,
            ) {
                // Skip near-constant draws.
                let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - xs.iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assume!(spread > 1e-6);
                let pos: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let neg: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
                prop_assert!((pearson(&xs, &pos).unwrap() - 1.0).abs() < 1e-9);
                prop_assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-9);
            }

            #[test]
            fn zero_seq_bounded_by_mean_amplitude(
                amps in proptest::collection::vec(0.0f64..10.0, 3),
                angs in proptest::collection::vec(-PI..PI, 3),
            ) {
                let ph = [0, 1, 2].map(|i| Complex64::from_polar(amps[i], angs[i]));
                let z = zero_sequence(&ph).norm();
                let mean = (amps[0] + amps[1] + amps[2]) / 3.0;
                prop_assert!(z <= mean + 1e-12);
            }
        }
    }
}

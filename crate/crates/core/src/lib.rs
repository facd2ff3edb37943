//! Nowcasting of aggregated behind-the-meter photovoltaic generation on a
//! distribution feeder.
//!
//! Rooftop PV systems installed behind the meter are invisible to the
//! operator: their output masks the true feeder load. Their inverters,
//! however, inject a 3rd-harmonic current whose amplitude tracks the
//! generated power, and because 3rd harmonics of three-phase inverters are
//! co-phasal across phases they survive the zero-sequence filter that
//! attenuates unbalanced single-phase load harmonics. This crate implements
//! the full data path that exploits that observation:
//!
//! * [`measurement`] — the 1-second measurement pool (temperature,
//!   irradiance, 3rd-harmonic amplitude, power) with CSV ingestion and
//!   weather-type day classification;
//! * [`harmonics`] — waveform-to-phasor extraction (orders 1–23),
//!   zero-sequence computation, and Pearson correlation screening;
//! * [`simulator`] — a synthetic stand-in for a field measurement campaign:
//!   clear-sky irradiance, stochastic cloud fields, PV power, inverter
//!   harmonic emission, and unbalanced load harmonics;
//! * [`scenario`] — Monte Carlo synthesis of cloudy-day training and testing
//!   scenarios by splicing real measured instances into a sunny-day
//!   template, with constraint validation;
//! * [`model`] — a from-scratch single-hidden-layer ReLU MLP trained with
//!   Adam that maps (temperature, irradiance, H3 feature) to aggregated
//!   power;
//! * [`eval`] — RMSE/MAE metrics, case harnesses, and report emission.
//!
//! Everything downstream of a seed is deterministic: parallel and serial
//! runs produce bit-identical artifacts because every parallel task derives
//! its own RNG stream from the master seed and results merge in index order.

pub mod error;
pub mod eval;
pub mod fixtures;
pub mod harmonics;
pub mod measurement;
pub mod model;
pub mod par;
pub mod rng;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};

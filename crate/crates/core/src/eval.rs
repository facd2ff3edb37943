//! Metrics, case harnesses, and report emission.
//!
//! RMSE and MAE are reported in kW and as percent of installed capacity
//! (kW at unity power factor); the percent base is recorded in every
//! report. The end-to-end case harness wires the whole pipeline — pool
//! simulation, scenario synthesis, training, and held-out evaluation —
//! from a single master seed.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fixtures::CaseFixture;
use crate::measurement::pool_to_csv_string;
use crate::model::{save_model, train, MlpModel, TrainConfig, TrainLog};
use crate::scenario::{
    build_test_scenarios, build_training_dataset, Dataset, Scenario, ScenarioConfig, ScenarioKind,
};
use crate::simulator::{default_weather_mix, simulate_pool};
use crate::{par, rng};

/// Root-mean-square error of predictions against actuals, kW.
pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    let sse: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Mean absolute error, kW.
pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(pred, actual)?;
    let sum: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(sum / pred.len() as f64)
}

fn check_lengths(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    Ok(())
}

/// Error metrics of one evaluation, absolute and percent of capacity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse_kw: f64,
    pub mae_kw: f64,
    pub rmse_pct: f64,
    pub mae_pct: f64,
    /// Installed capacity, the percent base.
    pub capacity_kw: f64,
    pub n_points: usize,
}

impl EvalReport {
    fn from_errors(rmse_kw: f64, mae_kw: f64, capacity_kw: f64, n_points: usize) -> Result<Self> {
        if !(capacity_kw > 0.0) {
            return Err(Error::InvalidInput("capacity must be positive".into()));
        }
        Ok(Self {
            rmse_kw,
            mae_kw,
            rmse_pct: 100.0 * rmse_kw / capacity_kw,
            mae_pct: 100.0 * mae_kw / capacity_kw,
            capacity_kw,
            n_points,
        })
    }
}

/// One evaluated instant.
#[derive(Debug, Clone, Copy)]
pub struct ResidualRecord {
    pub scenario_id: u32,
    pub t: u32,
    pub actual_kw: f64,
    pub predicted_kw: f64,
}

/// Metrics plus the residual time series they were computed from.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub residuals: Vec<ResidualRecord>,
}

/// Nowcast every timestep of every testing scenario and aggregate the
/// metrics. Scenarios are evaluated in parallel and merged in order.
pub fn evaluate_case(
    model: &MlpModel,
    scenarios: &[Scenario],
    capacity_kw: f64,
) -> Result<Evaluation> {
    if scenarios.is_empty() {
        return Err(Error::InvalidInput("empty scenario set".into()));
    }
    if scenarios.iter().any(|s| s.kind != ScenarioKind::Testing) {
        return Err(Error::InvalidInput(
            "evaluation expects testing-kind scenarios".into(),
        ));
    }
    let per_scenario = par::map_indexed(scenarios.len(), |i| {
        let s = &scenarios[i];
        let mut recs = Vec::with_capacity(s.len());
        for idx in 0..s.len() {
            let x = [s.temperature[idx], s.irradiance[idx], s.h3_feature[idx]];
            let predicted = model.forward(&x)?;
            recs.push(ResidualRecord {
                scenario_id: s.id,
                t: s.per_pvs[0][idx].t,
                actual_kw: s.aggregate_power[idx],
                predicted_kw: predicted,
            });
        }
        Ok::<_, Error>(recs)
    });
    let mut residuals = Vec::new();
    for r in per_scenario {
        residuals.extend(r?);
    }
    let pred: Vec<f64> = residuals.iter().map(|r| r.predicted_kw).collect();
    let actual: Vec<f64> = residuals.iter().map(|r| r.actual_kw).collect();
    let report = EvalReport::from_errors(
        rmse(&pred, &actual)?,
        mae(&pred, &actual)?,
        capacity_kw,
        residuals.len(),
    )?;
    Ok(Evaluation { report, residuals })
}

/// Hex-encoded SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Serialize)]
struct MetricsFile<'a> {
    #[serde(flatten)]
    report: &'a EvalReport,
    convention: &'static str,
}

/// Write metrics JSON, the residual CSV, and an SVG overlay of actual vs
/// nowcasted power into `out_dir`.
///
/// All output bytes are deterministic functions of the evaluation.
pub fn emit_report(eval: &Evaluation, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let metrics = MetricsFile {
        report: &eval.report,
        convention: "kW at unity power factor; percent of installed capacity",
    };
    std::fs::write(
        out_dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics)?,
    )?;

    let mut csv = String::from("scenario_id,t,actual_kw,predicted_kw,residual_kw\n");
    for r in &eval.residuals {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scenario_id,
            r.t,
            r.actual_kw,
            r.predicted_kw,
            r.predicted_kw - r.actual_kw
        ));
    }
    std::fs::write(out_dir.join("residuals.csv"), csv)?;

    std::fs::write(out_dir.join("overlay.svg"), render_overlay_svg(eval))?;
    Ok(())
}

/// SVG overlay of actual and nowcasted power for the first scenario.
pub fn render_overlay_svg(eval: &Evaluation) -> String {
    let first_id = eval.residuals.first().map(|r| r.scenario_id).unwrap_or(0);
    let series: Vec<&ResidualRecord> = eval
        .residuals
        .iter()
        .take_while(|r| r.scenario_id == first_id)
        .collect();
    let (w, h, ml, mb, mt, mr) = (960.0, 420.0, 64.0, 36.0, 16.0, 16.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;

    let t0 = series.first().map(|r| r.t).unwrap_or(0) as f64;
    let t1 = series.last().map(|r| r.t).unwrap_or(1) as f64;
    let y_max = series
        .iter()
        .flat_map(|r| [r.actual_kw, r.predicted_kw])
        .fold(1.0f64, f64::max)
        * 1.05;

    // Deterministic downsampling keeps the file small on long days.
    let stride = (series.len() / 1440).max(1);
    let polyline = |pick: &dyn Fn(&ResidualRecord) -> f64| -> String {
        let mut pts = String::new();
        for r in series.iter().step_by(stride) {
            let x = ml + plot_w * ((r.t as f64 - t0) / (t1 - t0).max(1.0));
            let y = mt + plot_h * (1.0 - pick(r) / y_max);
            pts.push_str(&format!("{x:.2},{y:.2} "));
        }
        pts
    };
    let actual_pts = polyline(&|r| r.actual_kw);
    let predicted_pts = polyline(&|r| r.predicted_kw);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w:.0} {h:.0}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
        mt + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">time (s since midnight)</text>\n",
        ml + plot_w / 2.0,
        h - 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-size=\"12\" transform=\"rotate(-90 14 {:.2})\" text-anchor=\"middle\">power (kW)</text>\n",
        mt + plot_h / 2.0,
        mt + plot_h / 2.0
    ));
    svg.push_str(&format!(
        "<polyline points=\"{actual_pts}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<polyline points=\"{predicted_pts}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.2\" stroke-dasharray=\"5,3\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#1f77b4\">actual</text>\n",
        ml + 10.0,
        mt + 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#d62728\">nowcast</text>\n",
        ml + 10.0,
        mt + 30.0
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Provenance record written next to every CLI output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: Option<u64>,
    pub thread_cap: Option<usize>,
    /// SHA-256 digests of the input files, keyed by path.
    pub input_sha256: std::collections::BTreeMap<String, String>,
    /// Inline configuration the run used.
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: Option<u64>) -> Self {
        Self {
            tool: "pvnowcast".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.to_string(),
            master_seed,
            thread_cap: par::thread_cap_from_env(),
            input_sha256: Default::default(),
            config: serde_json::Value::Null,
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.input_sha256
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(
            out_dir.join("run_manifest.json"),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }
}

/// Scale and training options of an end-to-end case run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRunOptions {
    pub train_scenarios: usize,
    pub test_scenarios: usize,
    /// Shrink days to a 4 h daylight window and lighten the event counts.
    pub desk_scale: bool,
    pub pool_days: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

impl CaseRunOptions {
    /// CI-friendly scale: 4 h days, 300 training scenarios.
    pub fn desk() -> Self {
        Self {
            train_scenarios: 300,
            test_scenarios: 50,
            desk_scale: true,
            pool_days: 14,
            max_epochs: 60,
            patience: 8,
        }
    }

    /// Full scale: natural daylight, 1500 training scenarios.
    pub fn full() -> Self {
        Self {
            train_scenarios: 1500,
            test_scenarios: 50,
            desk_scale: false,
            pool_days: 14,
            max_epochs: 200,
            patience: 15,
        }
    }
}

/// Everything an end-to-end case run produced.
pub struct CaseRun {
    pub evaluation: Evaluation,
    pub model: MlpModel,
    pub train_log: TrainLog,
    pub train_dataset: Dataset,
    pub test_scenarios: Vec<Scenario>,
    pub pool_csv: String,
    pub train_config: TrainConfig,
}

/// Run a full pipeline for a case fixture from one master seed:
/// simulate the pool, synthesize training scenarios, train, synthesize
/// held-out testing scenarios (their seeds derive from a different
/// subindex, so no instance placement is shared), and evaluate.
pub fn run_case(fixture: &CaseFixture, opts: &CaseRunOptions, master_seed: u64) -> Result<CaseRun> {
    let fixture = if opts.desk_scale {
        fixture.clone().desk_scale()
    } else {
        fixture.clone()
    };
    let pool = simulate_pool(
        &fixture.site,
        &fixture.pvs,
        opts.pool_days,
        &default_weather_mix(),
        rng::derive_seed(master_seed, 1),
    )?;

    let mut train_cfg_sc = fixture.scenario_config(rng::derive_seed(master_seed, 2));
    let mut test_cfg_sc = fixture.scenario_config(rng::derive_seed(master_seed, 3));
    if opts.desk_scale {
        train_cfg_sc.replacement_events = (2, 6);
        test_cfg_sc.replacement_events = (2, 6);
    }

    let train_dataset = build_training_dataset(&pool, &train_cfg_sc, opts.train_scenarios)?;
    let test_scenarios =
        build_test_scenarios(&pool, &fixture.loads, &test_cfg_sc, opts.test_scenarios)?;

    let train_config = TrainConfig {
        seed: rng::derive_seed(master_seed, 4),
        max_epochs: opts.max_epochs,
        patience: opts.patience,
        ..TrainConfig::default()
    };
    let (model, train_log) = train(&train_dataset, &train_config)?;
    let evaluation = evaluate_case(&model, &test_scenarios, fixture.capacity_kw)?;
    Ok(CaseRun {
        evaluation,
        model,
        train_log,
        train_dataset,
        test_scenarios,
        pool_csv: pool_to_csv_string(&pool),
        train_config,
    })
}

/// Persist every artifact of a case run under `out_dir`.
pub fn emit_case_run(run: &CaseRun, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("pool.csv"), &run.pool_csv)?;
    run.train_dataset.save(&out_dir.join("train_scenarios.csv"))?;
    Dataset::from_scenarios(&run.test_scenarios).save(&out_dir.join("test_scenarios.csv"))?;
    save_model(&run.model, Some(&run.train_config), &out_dir.join("model.json"))?;
    std::fs::write(out_dir.join("train_log.csv"), run.train_log.to_csv_string())?;
    emit_report(&run.evaluation, out_dir)?;
    Ok(())
}

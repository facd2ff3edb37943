//! Default feeder fixtures for the two evaluation cases.
//!
//! Case a: a single 31.4 kW PV system plus four unbalanced consumer
//! loads. Case b: three PV systems totalling 97.2 kW with the same four
//! loads and per-unit cloud latency up to 300 s. The load phasors are
//! chosen so their vector sum largely cancels and the residual points
//! mostly orthogonal to the PVS injection angle, leaving a small
//! zero-sequence pollution on the feeder feature.

use crate::scenario::ScenarioConfig;
use crate::simulator::{CloudParams, LoadProfile, LoadSpec, PvsSpec, SiteSpec};

/// Ankara latitude, mid-summer day.
pub fn default_site() -> SiteSpec {
    SiteSpec {
        latitude_deg: 39.89,
        day_of_year: 172,
        gstc_wm2: 1000.0,
        cloud: CloudParams::default(),
        daylight_override_s: None,
    }
}

/// Reference PV system for case a (31.4 kW).
pub fn case_a_pvs() -> PvsSpec {
    PvsSpec {
        rated_power_kw: 31.4,
        temp_coeff: -0.004,
        noct_c: 45.0,
        h3_base_a: 0.15,
        h3_slope_a_per_kw: 0.04,
        h3_noise_sd_a: 0.02,
    }
}

/// Per-unit PV system for case b; three units total 97.2 kW.
pub fn case_b_pvs() -> PvsSpec {
    PvsSpec {
        rated_power_kw: 32.4,
        ..case_a_pvs()
    }
}

/// Four unbalanced consumer loads.
///
/// Their 12 injection phasors nearly cancel: at noon the zero-sequence
/// residual is 0.0573 A against a largest per-phase sum of 0.651 A, and
/// the residual leans towards quadrature with the PVS angle (0 rad).
pub fn default_loads() -> Vec<LoadSpec> {
    vec![
        LoadSpec {
            h3_amp_a: [0.66, 0.27, 0.18],
            h3_angle_rad: [0.40, 2.60, -1.90],
            base_demand_kw: 4.5,
            profile: LoadProfile::Daily {
                peak_t_s: 9 * 3600,
                swing: 0.35,
            },
            jitter: 0.05,
        },
        LoadSpec {
            h3_amp_a: [0.21, 0.57, 0.30],
            h3_angle_rad: [2.00, -0.75, 2.95],
            base_demand_kw: 3.0,
            profile: LoadProfile::Daily {
                peak_t_s: 12 * 3600,
                swing: 0.30,
            },
            jitter: 0.05,
        },
        LoadSpec {
            h3_amp_a: [0.15, 0.18, 0.63],
            h3_angle_rad: [-2.40, 0.95, -0.25],
            base_demand_kw: 5.0,
            profile: LoadProfile::Daily {
                peak_t_s: 17 * 3600,
                swing: 0.35,
            },
            jitter: 0.05,
        },
        LoadSpec {
            h3_amp_a: [0.33, 0.36, 0.7770041935025209],
            h3_angle_rad: [3.05, -1.55, 2.531631964461932],
            base_demand_kw: 2.5,
            profile: LoadProfile::Constant,
            jitter: 0.05,
        },
    ]
}

/// Everything needed to run one evaluation case end to end.
#[derive(Debug, Clone)]
pub struct CaseFixture {
    pub name: &'static str,
    pub site: SiteSpec,
    pub pvs: PvsSpec,
    pub num_pv: usize,
    pub loads: Vec<LoadSpec>,
    /// Installed capacity, the percent base of the reports.
    pub capacity_kw: f64,
}

/// Case a: single PVS connected to the feeder alongside the loads.
pub fn case_a() -> CaseFixture {
    let pvs = case_a_pvs();
    CaseFixture {
        name: "a",
        site: default_site(),
        capacity_kw: pvs.rated_power_kw,
        pvs,
        num_pv: 1,
        loads: default_loads(),
    }
}

/// Case b: three PVSs and four customer loads on the feeder.
pub fn case_b() -> CaseFixture {
    let pvs = case_b_pvs();
    CaseFixture {
        name: "b",
        site: default_site(),
        capacity_kw: 3.0 * pvs.rated_power_kw,
        pvs,
        num_pv: 3,
        loads: default_loads(),
    }
}

impl CaseFixture {
    pub fn by_name(name: &str) -> Option<CaseFixture> {
        match name {
            "a" => Some(case_a()),
            "b" => Some(case_b()),
            _ => None,
        }
    }

    /// Shrink days to a 4-hour daylight window for desk-scale runs.
    pub fn desk_scale(mut self) -> Self {
        self.site.daylight_override_s = Some(4 * 3600);
        self
    }

    /// Scenario configuration matching this fixture.
    pub fn scenario_config(&self, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            num_pv: self.num_pv,
            seed,
            ..ScenarioConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::zero_sequence;
    use crate::simulator::load_h3_phasors;

    #[test]
    fn noon_zero_sequence_bounded_by_largest_phase() {
        let loads = default_loads();
        let mut no_jitter = loads.clone();
        for l in &mut no_jitter {
            l.jitter = 0.0;
        }
        let mut rng = crate::rng::seeded(0);
        let phases = load_h3_phasors(&no_jitter, 43_200, &mut rng);
        let z = zero_sequence(&phases).norm();
        let max_phase = phases.iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!(
            z <= max_phase / 3.0,
            "zero-seq {z} exceeds a third of the largest phase {max_phase}"
        );
        // Frozen evaluation of the fixture phasor sum.
        approx::assert_abs_diff_eq!(z, 0.05729912047144723, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(max_phase, 0.6507797437991449, epsilon = 1e-12);
    }

    #[test]
    fn capacities() {
        assert_eq!(case_a().capacity_kw, 31.4);
        approx::assert_abs_diff_eq!(case_b().capacity_kw, 97.2, epsilon = 1e-12);
    }
}

//! Scenario configuration files.
//!
//! A configuration is a TOML document. Anything left out is filled from the
//! scenario defaults before validation, so the serialized form of a parsed
//! config is always complete.

use std::f64::consts::{PI, TAU};
use std::fmt;

use eit_core::end::storage_schedule;
use eit_core::wavegrid::gaussian_pulse;
use eit_core::{CouplingSchedule, Grid1D, Segment, SystemParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::RunError;

/// `2π × 5 MHz` in rad/s.
pub const DEFAULT_FREQUENCY_UNIT: f64 = TAU * 5.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Spectrum,
    DelayCurve,
    Slow,
    Store,
    Oracle,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Spectrum,
        Scenario::DelayCurve,
        Scenario::Slow,
        Scenario::Store,
        Scenario::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::DelayCurve => "delay-curve",
            Scenario::Slow => "slow",
            Scenario::Store => "store",
            Scenario::Oracle => "oracle",
        }
    }

    fn sections(self) -> &'static [&'static str] {
        match self {
            Scenario::Spectrum => &["sweep"],
            Scenario::DelayCurve => &["delay_curve"],
            Scenario::Slow | Scenario::Store => &["grid", "pulse", "schedule", "transport"],
            Scenario::Oracle => &["oracle"],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How rates and times are written in the file.
///
/// With `si`, rates are angular frequencies in rad/s, times are in seconds
/// and velocities are in grid lengths per second. Everything is divided by
/// `frequency_unit` (or multiplied, for times) on the way in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Kappa1,
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Side,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsConfig {
    pub kappa1: f64,
    pub kappa_ex: f64,
    pub kappa2: f64,
    pub delta: f64,
    pub g1: f64,
    pub g2: f64,
    pub delta_a: f64,
    pub delta_in: f64,
    pub v_g: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            kappa1: 1.0,
            kappa_ex: 1.0,
            kappa2: 0.0,
            delta: 0.0,
            g1: 0.0,
            g2: 0.0,
            delta_a: 0.0,
            delta_in: 0.0,
            v_g: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_cells: usize,
    pub dx: f64,
    pub x_resonator: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub center: f64,
    pub tau: f64,
    pub k_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub start: f64,
    pub end: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub ramp_time: f64,
    pub segments: Vec<SegmentConfig>,
}

/// Spectrum sweep. Couplings and detunings are in units of `κ′₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub couplings: Vec<f64>,
    pub detuning_min: f64,
    pub detuning_max: f64,
    pub points: usize,
}

/// Group delay against coupling, in units of `κ′₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCurveConfig {
    pub h_min: f64,
    pub h_max: f64,
    pub points: usize,
    pub detuning: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub geometry: Geometry,
    pub phase_phi: f64,
    pub switch_sharpness: f64,
    pub sponge: bool,
    pub snapshot_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub g: f64,
    pub ratios: Vec<f64>,
    pub comparison_ratio: f64,
    pub periods: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputsConfig {
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub units: Units,
    pub frequency_unit: f64,
    pub outputs: OutputsConfig,
    pub params: ParamsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_curve: Option<DelayCurveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

impl ExperimentConfig {
    /// Complete default configuration for a scenario, in `κ₁` units.
    pub fn defaults(scenario: Scenario) -> Self {
        let mut cfg = Self {
            scenario,
            units: Units::Kappa1,
            frequency_unit: DEFAULT_FREQUENCY_UNIT,
            outputs: OutputsConfig {
                prefix: scenario.name().replace('-', "_"),
            },
            params: ParamsConfig::default(),
            grid: None,
            pulse: None,
            schedule: None,
            transport: None,
            sweep: None,
            delay_curve: None,
            oracle: None,
        };
        match scenario {
            Scenario::Spectrum => {
                cfg.sweep = Some(SweepConfig {
                    couplings: vec![0.0, 0.25, 1.0],
                    detuning_min: -3.0,
                    detuning_max: 3.0,
                    points: 601,
                });
            }
            Scenario::DelayCurve => {
                cfg.delay_curve = Some(DelayCurveConfig {
                    h_min: 0.05,
                    h_max: 2.0,
                    points: 196,
                    detuning: 0.0,
                });
            }
            Scenario::Slow => {
                cfg.params.v_g = 4.0;
                cfg.grid = Some(GridConfig {
                    n_cells: 4096,
                    dx: 1.0,
                    x_resonator: 2100,
                });
                cfg.pulse = Some(PulseConfig {
                    center: 1000.0,
                    tau: 200.0,
                    k_offset: 0.0,
                });
                cfg.schedule = Some(ScheduleConfig {
                    ramp_time: 0.0,
                    segments: vec![SegmentConfig {
                        start: 0.0,
                        end: 1.0,
                        level: 0.25,
                    }],
                });
                cfg.transport = Some(TransportConfig {
                    geometry: Geometry::Side,
                    phase_phi: PI,
                    switch_sharpness: eit_core::end::DEFAULT_SWITCH_SHARPNESS,
                    sponge: true,
                    snapshot_times: Vec::new(),
                    t_end: None,
                });
            }
            Scenario::Store => {
                let (v_g, tau) = (200.0, 100.0);
                let (x_res, center) = (1200, 600.0);
                cfg.params.v_g = v_g;
                cfg.grid = Some(GridConfig {
                    n_cells: 4096,
                    dx: 1.0,
                    x_resonator: x_res,
                });
                cfg.pulse = Some(PulseConfig {
                    center,
                    tau,
                    k_offset: 0.0,
                });
                let pulse_time = tau / v_g;
                let arrival = (x_res as f64 - center) / v_g;
                let schedule =
                    storage_schedule(arrival, 4.0 * pulse_time, 8.0 * pulse_time, 2.0, 0.5)
                        .expect("default storage schedule is valid");
                cfg.schedule = Some(ScheduleConfig {
                    ramp_time: schedule.ramp_time(),
                    segments: schedule
                        .segments()
                        .iter()
                        .map(|s| SegmentConfig {
                            start: s.start,
                            end: s.end,
                            level: s.level,
                        })
                        .collect(),
                });
                cfg.transport = Some(TransportConfig {
                    geometry: Geometry::End,
                    phase_phi: PI,
                    switch_sharpness: eit_core::end::DEFAULT_SWITCH_SHARPNESS,
                    sponge: false,
                    snapshot_times: Vec::new(),
                    t_end: None,
                });
            }
            Scenario::Oracle => {
                cfg.oracle = Some(OracleConfig {
                    g: 1.0,
                    ratios: vec![10.0, 20.0, 40.0, 80.0],
                    comparison_ratio: 20.0,
                    periods: 1.0,
                    samples: 2000,
                });
            }
        }
        cfg
    }

    /// Scales every rate by `f` and every time by `1/f`.
    fn rescale(&mut self, f: f64) {
        let p = &mut self.params;
        for v in [
            &mut p.kappa1,
            &mut p.kappa_ex,
            &mut p.kappa2,
            &mut p.delta,
            &mut p.g1,
            &mut p.g2,
            &mut p.delta_a,
            &mut p.delta_in,
            &mut p.v_g,
        ] {
            *v *= f;
        }
        if let Some(s) = &mut self.schedule {
            s.ramp_time /= f;
            for seg in &mut s.segments {
                seg.start /= f;
                seg.end /= f;
                seg.level *= f;
            }
        }
        if let Some(t) = &mut self.transport {
            for s in &mut t.snapshot_times {
                *s /= f;
            }
            if let Some(e) = &mut t.t_end {
                *e /= f;
            }
        }
        if let Some(o) = &mut self.oracle {
            o.g *= f;
        }
    }

    /// The same configuration with all quantities in `κ₁` units.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        if self.units == Units::Si {
            out.rescale(1.0 / self.frequency_unit);
            out.units = Units::Kappa1;
        }
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn system_params(&self) -> Result<SystemParams, RunError> {
        let n = self.normalized();
        let p = &n.params;
        SystemParams::builder()
            .kappa1(p.kappa1)
            .kappa_ex(p.kappa_ex)
            .kappa2(p.kappa2)
            .delta(p.delta)
            .g1(Complex64::new(p.g1, 0.0))
            .g2(Complex64::new(p.g2, 0.0))
            .delta_a(p.delta_a)
            .delta_in(p.delta_in)
            .v_g(p.v_g)
            .build()
            .map_err(RunError::from_config)
    }

    pub fn grid(&self) -> Result<Grid1D, RunError> {
        let g = self.section(&self.grid, "grid")?;
        let v_g = self.normalized().params.v_g;
        Grid1D::new(g.n_cells, g.dx, v_g, g.x_resonator).map_err(RunError::from_config)
    }

    pub fn schedule(&self) -> Result<CouplingSchedule, RunError> {
        let n = self.normalized();
        let s = n.section(&n.schedule, "schedule")?;
        CouplingSchedule::new(
            s.segments
                .iter()
                .map(|c| Segment {
                    start: c.start,
                    end: c.end,
                    level: c.level,
                })
                .collect(),
            s.ramp_time,
        )
        .map_err(RunError::from_config)
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, RunError> {
        s.as_ref().ok_or_else(|| {
            RunError::Config(format!(
                "scenario {} has no `{name}` section",
                self.scenario
            ))
        })
    }

    pub fn transport(&self) -> Result<TransportConfig, RunError> {
        let n = self.normalized();
        n.section(&n.transport, "transport").cloned()
    }

    pub fn pulse(&self) -> Result<&PulseConfig, RunError> {
        self.section(&self.pulse, "pulse")
    }

    pub fn sweep(&self) -> Result<&SweepConfig, RunError> {
        self.section(&self.sweep, "sweep")
    }

    pub fn delay_curve(&self) -> Result<&DelayCurveConfig, RunError> {
        self.section(&self.delay_curve, "delay_curve")
    }

    pub fn oracle(&self) -> Result<OracleConfig, RunError> {
        let n = self.normalized();
        n.section(&n.oracle, "oracle").cloned()
    }

    /// Checks everything that can be checked without running the scenario.
    pub fn validate(&self) -> Result<(), RunError> {
        if !(self.frequency_unit > 0.0 && self.frequency_unit.is_finite()) {
            return Err(field_error("frequency_unit", "must be positive and finite"));
        }
        if self.outputs.prefix.is_empty()
            || self.outputs.prefix.contains(['/', '\\'])
            || self.outputs.prefix.starts_with('.')
        {
            return Err(field_error(
                "outputs.prefix",
                "must be a plain, non-empty file stem",
            ));
        }
        let params = self.system_params()?;
        if matches!(self.scenario, Scenario::Spectrum | Scenario::DelayCurve)
            && params.kappa1_prime() <= 0.0
        {
            return Err(field_error(
                "params.kappa_ex",
                "kappa1 + kappa_ex must be > 0 for κ′₁-scaled sweeps",
            ));
        }
        match self.scenario {
            Scenario::Spectrum => {
                let s = self.sweep()?;
                if s.couplings.is_empty() {
                    return Err(field_error("sweep.couplings", "needs at least one value"));
                }
                if s.couplings.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                    return Err(field_error(
                        "sweep.couplings",
                        "values must be finite and >= 0",
                    ));
                }
                check_range("sweep.detuning", s.detuning_min, s.detuning_max)?;
                if s.points < 2 {
                    return Err(field_error("sweep.points", "must be >= 2"));
                }
            }
            Scenario::DelayCurve => {
                let d = self.delay_curve()?;
                if !(d.h_min > 0.0) {
                    return Err(field_error("delay_curve.h_min", "must be > 0"));
                }
                check_range("delay_curve.h", d.h_min, d.h_max)?;
                if d.points < 2 {
                    return Err(field_error("delay_curve.points", "must be >= 2"));
                }
                if !d.detuning.is_finite() {
                    return Err(field_error("delay_curve.detuning", "must be finite"));
                }
            }
            Scenario::Slow | Scenario::Store => {
                let grid = self.grid()?;
                let p = self.pulse()?;
                gaussian_pulse(&grid, p.center, p.tau, p.k_offset)
                    .map_err(RunError::from_config)?;
                let schedule = self.schedule()?;
                let t = self.transport()?;
                if !(0.0..TAU).contains(&t.phase_phi) {
                    return Err(field_error("transport.phase_phi", "must lie in [0, 2π)"));
                }
                if !(t.switch_sharpness > 0.0 && t.switch_sharpness.is_finite()) {
                    return Err(field_error("transport.switch_sharpness", "must be > 0"));
                }
                if t.snapshot_times
                    .iter()
                    .any(|s| !(s.is_finite() && *s >= 0.0))
                {
                    return Err(field_error(
                        "transport.snapshot_times",
                        "must be finite and >= 0",
                    ));
                }
                if let Some(e) = t.t_end {
                    if !(e > 0.0 && e.is_finite()) {
                        return Err(field_error("transport.t_end", "must be > 0"));
                    }
                }
                if self.scenario == Scenario::Store {
                    if t.geometry != Geometry::End {
                        return Err(field_error("transport.geometry", "store requires `end`"));
                    }
                    if schedule.segments().len() < 2 || schedule.hold_window().is_none() {
                        return Err(RunError::Config(
                            "schedule: no hold phase (need a catch segment, an off gap wider than the ramp, and a release segment)".into(),
                        ));
                    }
                }
            }
            Scenario::Oracle => {
                let o = self.oracle()?;
                if !(o.g > 0.0 && o.g.is_finite()) {
                    return Err(field_error("oracle.g", "must be > 0"));
                }
                if o.ratios.len() < 2 {
                    return Err(field_error("oracle.ratios", "needs at least two ratios"));
                }
                for r in o.ratios.iter().chain([&o.comparison_ratio]) {
                    if !(r.is_finite() && *r >= eit_core::model::DISPERSIVE_RATIO_MIN) {
                        return Err(field_error(
                            "oracle.ratios",
                            "every Δ_a/g ratio must be >= the dispersive bound 5",
                        ));
                    }
                }
                if !(o.periods > 0.0 && o.periods.is_finite()) {
                    return Err(field_error("oracle.periods", "must be > 0"));
                }
                if o.samples == 0 {
                    return Err(field_error("oracle.samples", "must be >= 1"));
                }
            }
        }
        Ok(())
    }
}

fn field_error(field: &str, reason: &str) -> RunError {
    RunError::Config(format!("invalid `{field}`: {reason}"))
}

fn check_range(field: &str, lo: f64, hi: f64) -> Result<(), RunError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(field_error(
            field,
            &format!("need finite min < max, got [{lo}, {hi}]"),
        ))
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses a configuration document. The document must name its scenario.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, RunError> {
    parse_config_with(text, None)
}

/// Like [`parse_config`], but `scenario` is used when the document does not
/// name one, and must agree with it when it does.
pub fn parse_config_with(
    text: &str,
    scenario: Option<Scenario>,
) -> Result<ExperimentConfig, RunError> {
    let user: Table = text
        .parse()
        .map_err(|e: toml::de::Error| RunError::Config(format!("syntax error: {}", e.message())))?;

    let named = match user.get("scenario") {
        Some(v) => Some(
            Scenario::deserialize(v.clone())
                .map_err(|e| RunError::Config(format!("`scenario`: {}", e.message())))?,
        ),
        None => None,
    };
    let scenario = match (named, scenario) {
        (Some(a), Some(b)) if a != b => {
            return Err(RunError::Config(format!(
                "config is for scenario `{a}` but `{b}` was requested"
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(RunError::Config("missing `scenario`".into())),
    };

    let foreign: Vec<&str> = user
        .iter()
        .filter(|(_, v)| v.is_table())
        .map(|(k, _)| k.as_str())
        .filter(|k| {
            !scenario.sections().contains(k)
                && ExperimentConfig::SECTIONS.contains(k)
                && !["params", "outputs"].contains(k)
        })
        .collect();
    if !foreign.is_empty() {
        return Err(RunError::Config(format!(
            "section(s) {} do not apply to scenario `{scenario}`",
            foreign.join(", ")
        )));
    }

    let units = match user.get("units") {
        Some(v) => Units::deserialize(v.clone())
            .map_err(|e| RunError::Config(format!("`units`: {}", e.message())))?,
        None => Units::Kappa1,
    };
    let unit = user
        .get("frequency_unit")
        .and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
        .unwrap_or(DEFAULT_FREQUENCY_UNIT);

    let mut defaults = ExperimentConfig::defaults(scenario);
    if units == Units::Si && unit > 0.0 && unit.is_finite() {
        defaults.rescale(unit);
    }
    let mut merged = Table::try_from(&defaults).expect("defaults serialize");
    merge(&mut merged, user);

    let mut unknown = Vec::new();
    let cfg: ExperimentConfig = serde_ignored::deserialize(Value::Table(merged), |path| {
        unknown.push(path.to_string().replace(".?", ""))
    })
    .map_err(|e| RunError::Config(e.message().to_string()))?;
    if !unknown.is_empty() {
        return Err(RunError::Config(format!(
            "unknown key(s): {}",
            unknown.join(", ")
        )));
    }
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    const SECTIONS: [&'static str; 9] = [
        "params",
        "outputs",
        "grid",
        "pulse",
        "schedule",
        "transport",
        "sweep",
        "delay_curve",
        "oracle",
    ];
}

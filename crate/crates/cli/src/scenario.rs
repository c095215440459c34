//! Scenario runners. Each one turns a validated config into a list of
//! in-memory artifacts; nothing touches the filesystem until
//! [`write_artifacts`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use eit_core::end::{run_delay, run_storage, EndCouplingRun, StorageReport};
use eit_core::oracle::{
    compare_trajectories, effective_period, scaling_study, write_comparison_csv,
};
use eit_core::side::{run_slowing, DelayReport, SideCouplingRun};
use eit_core::steady::{
    group_delay_closed, group_delay_numeric, spectrum_sweep, transparency_fwhm,
};
use eit_core::wavegrid::{fwhm, gaussian_pulse, write_snapshot_csv};
use eit_core::{CouplingSchedule, Grid1D, SystemParams, WaveState};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Geometry, Scenario};
use crate::error::RunError;
use crate::plot::{emit_svg, Axes, Series};

/// Relative step of the numerical phase derivative, in units of `κ′₁`.
pub const DELAY_STEP: f64 = 1e-3;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "EIT_SIM_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: String, contents: String) -> Self {
        Self { name, contents }
    }
}

/// Writes a CSV with a header row and one `{:e}` formatted row per record.
pub fn csv_table<I>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn summary_table(rows: &[(&str, f64)]) -> String {
    let mut out = String::from("quantity,value\n");
    for (k, v) in rows {
        writeln!(out, "{k},{v:e}").unwrap();
    }
    out
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Worker pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            RunError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| RunError::Config(e.to_string()))
}

/// Runs the scenario named in `config`, returning the files it would write
/// in a fixed order.
pub fn run_scenario(config: &ExperimentConfig, svg: bool) -> Result<Vec<Artifact>, RunError> {
    config.validate()?;
    let pool = thread_pool()?;
    pool.install(|| match config.scenario {
        Scenario::Spectrum => spectrum(config, svg),
        Scenario::DelayCurve => delay_curve(config, svg),
        Scenario::Slow => slow(config, svg),
        Scenario::Store => store(config, svg),
        Scenario::Oracle => oracle(config, svg),
    })
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            fs::write(&path, &a.contents)?;
            Ok(path)
        })
        .collect()
}

fn svg_artifact(name: String, series: &[Series], axes: Axes) -> Result<Artifact, RunError> {
    Ok(Artifact::new(name, emit_svg(series, &axes)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    /// `h_e / κ′₁`
    pub coupling: f64,
    /// `Δ′_in / κ′₁`
    pub detuning: Vec<f64>,
    pub power: Vec<f64>,
    pub phase: Vec<f64>,
    /// `κ′₁ τ_g`, NaN where the phase is undefined.
    pub tau_g: Vec<f64>,
    /// Window FWHM over `κ′₁`, NaN without a window.
    pub fwhm: f64,
}

pub fn spectrum_curves(config: &ExperimentConfig) -> Result<Vec<SpectrumCurve>, RunError> {
    let params = config.system_params()?;
    let s = config.sweep()?;
    let kp = params.kappa1_prime();
    let grid = linspace(s.detuning_min, s.detuning_max, s.points);
    let detunings: Vec<f64> = grid.iter().map(|d| d * kp).collect();
    s.couplings
        .par_iter()
        .map(|&c| {
            let h = c * kp;
            let pts = spectrum_sweep(&params, h, &detunings)?;
            let tau_g = detunings
                .iter()
                .map(|&d| {
                    group_delay_numeric(&params, h, d, DELAY_STEP * kp).map_or(f64::NAN, |t| t * kp)
                })
                .collect();
            let fwhm = if h == 0.0 {
                f64::NAN
            } else {
                transparency_fwhm(&params, h).map_or(f64::NAN, |w| w / kp)
            };
            Ok(SpectrumCurve {
                coupling: c,
                detuning: grid.clone(),
                power: pts.iter().map(|p| p.power).collect(),
                phase: pts.iter().map(|p| p.phase).collect(),
                tau_g,
                fwhm,
            })
        })
        .collect()
}

fn spectrum(config: &ExperimentConfig, svg: bool) -> Result<Vec<Artifact>, RunError> {
    let params = config.system_params()?;
    let kp = params.kappa1_prime();
    let curves = spectrum_curves(config)?;
    let prefix = &config.outputs.prefix;
    let rows = curves.iter().flat_map(|c| {
        (0..c.detuning.len()).map(move |i| {
            vec![
                c.coupling,
                c.detuning[i],
                c.power[i],
                c.phase[i],
                c.tau_g[i],
            ]
        })
    });
    let mut out = vec![Artifact::new(
        format!("{prefix}.csv"),
        csv_table("h_e,detuning,power_T,phase,tau_g", rows),
    )];
    let summary = curves.iter().map(|c| {
        let h = c.coupling * kp;
        let centre =
            spectrum_sweep(&params, h, &[-0.5 * params.delta()]).map_or(f64::NAN, |p| p[0].power);
        let tau = group_delay_numeric(&params, h, -0.5 * params.delta(), DELAY_STEP * kp)
            .map_or(f64::NAN, |t| t * kp);
        vec![c.coupling, centre, c.fwhm, tau]
    });
    out.push(Artifact::new(
        format!("{prefix}_summary.csv"),
        csv_table("h_e,power_center,fwhm,tau_g_center", summary),
    ));
    if svg {
        let series: Vec<Series> = curves
            .iter()
            .map(|c| {
                Series::new(
                    format!("h_e/κ′₁ = {}", c.coupling),
                    c.detuning.clone(),
                    c.power.clone(),
                )
            })
            .collect();
        out.push(svg_artifact(
            format!("{prefix}.svg"),
            &series,
            Axes::new("Transmission", "Δ′_in / κ′₁", "T"),
        )?);
    }
    Ok(out)
}

/// `(h_e/κ′₁, κ′₁τ_g, κ′₁·2κ_ex/h_e²)` along the configured coupling range.
pub fn delay_points(config: &ExperimentConfig) -> Result<Vec<[f64; 3]>, RunError> {
    let params = config.system_params()?;
    let d = config.delay_curve()?;
    let kp = params.kappa1_prime();
    let detuning = d.detuning * kp;
    let closed = detuning == 0.0 && params.delta() == 0.0;
    linspace(d.h_min, d.h_max, d.points)
        .par_iter()
        .map(|&c| {
            let h = c * kp;
            let tau = if closed {
                group_delay_closed(&params, h)
            } else {
                group_delay_numeric(&params, h, detuning, DELAY_STEP * kp)
            };
            let tau = match tau {
                Ok(t) => t * kp,
                Err(eit_core::SimError::PhaseUndefined { .. }) => f64::NAN,
                Err(e) => return Err(e.into()),
            };
            Ok([c, tau, 2.0 * params.kappa_ex() * kp / (h * h)])
        })
        .collect()
}

fn delay_curve(config: &ExperimentConfig, svg: bool) -> Result<Vec<Artifact>, RunError> {
    let pts = delay_points(config)?;
    let prefix = &config.outputs.prefix;
    let mut out = vec![Artifact::new(
        format!("{prefix}.csv"),
        csv_table("h_e,tau_g,asymptote", pts.iter().map(|p| p.to_vec())),
    )];
    if svg {
        let x: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let series = [
            Series::new("κ′₁τ_g", x.clone(), pts.iter().map(|p| p[1]).collect()),
            Series::new("2κ_exκ′₁/h_e²", x, pts.iter().map(|p| p[2]).collect()),
        ];
        out.push(svg_artifact(
            format!("{prefix}.svg"),
            &series,
            Axes::new("Group delay at resonance", "h_e / κ′₁", "κ′₁ τ_g"),
        )?);
    }
    Ok(out)
}

struct TransportSetup {
    params: SystemParams,
    grid: Grid1D,
    schedule: CouplingSchedule,
    initial: WaveState,
}

fn transport_setup(config: &ExperimentConfig) -> Result<TransportSetup, RunError> {
    let grid = config.grid()?;
    let p = config.pulse()?;
    Ok(TransportSetup {
        params: config.system_params()?,
        initial: gaussian_pulse(&grid, p.center, p.tau, p.k_offset)?,
        schedule: config.schedule()?,
        grid,
    })
}

fn end_run(config: &ExperimentConfig, setup: TransportSetup) -> Result<EndCouplingRun, RunError> {
    let t = config.transport()?;
    let mut run = EndCouplingRun::new(setup.params, setup.grid, setup.schedule, setup.initial);
    run.phase_phi = t.phase_phi;
    run.switch_sharpness = t.switch_sharpness;
    run.sponge = t.sponge;
    run.snapshot_times = t.snapshot_times;
    run.t_end = t.t_end;
    Ok(run)
}

/// Runs the slowing experiment in the configured geometry.
pub fn slowing_report(config: &ExperimentConfig) -> Result<(DelayReport, Grid1D), RunError> {
    let setup = transport_setup(config)?;
    let grid = setup.grid;
    let t = config.transport()?;
    let report = match t.geometry {
        Geometry::Side => {
            let mut run =
                SideCouplingRun::new(setup.params, setup.grid, setup.schedule, setup.initial);
            run.sponge = t.sponge;
            run.snapshot_times = t.snapshot_times;
            run.t_end = t.t_end;
            run_slowing(&run)?
        }
        Geometry::End => run_delay(&end_run(config, setup)?)?,
    };
    Ok((report, grid))
}

/// Ratio of output to input spectral FWHM, NaN when either is undefined.
pub fn spectral_narrowing(report: &DelayReport) -> (f64, f64) {
    let width = |s: &[eit_core::wavegrid::SpectralSample]| {
        let f: Vec<f64> = s.iter().map(|p| p.frequency).collect();
        let p: Vec<f64> = s.iter().map(|p| p.power).collect();
        fwhm(&f, &p).unwrap_or(f64::NAN)
    };
    (
        width(&report.input_spectrum),
        width(&report.output_spectrum),
    )
}

fn snapshot(state: &WaveState, grid: &Grid1D) -> String {
    let mut buf = Vec::new();
    write_snapshot_csv(&mut buf, state, grid).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn intensity(field: &[Complex64]) -> Vec<f64> {
    field.iter().map(|z| z.norm_sqr()).collect()
}

fn slow(config: &ExperimentConfig, svg: bool) -> Result<Vec<Artifact>, RunError> {
    let (r, grid) = slowing_report(config)?;
    let pulse_time = config.pulse()?.tau / grid.v_g();
    let (w_in, w_out) = spectral_narrowing(&r);
    let prefix = &config.outputs.prefix;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let mut out = vec![Artifact::new(
        format!("{prefix}_summary.csv"),
        summary_table(&[
            ("delay", r.delay),
            ("delay_over_pulse", r.delay / pulse_time),
            ("retention", r.retention),
            ("reflected", r.reflected),
            ("dissipated", r.dissipated),
            ("boundary", r.boundary),
            ("residual", r.residual),
            ("pulse_width", r.pulse_width),
            ("fwhm_input", w_in),
            ("fwhm_output", w_out),
            ("fwhm_ratio", w_out / w_in),
            ("narrowband", flag(r.narrowband)),
            ("settled", flag(r.settled)),
            ("steps", r.steps as f64),
        ]),
    )];
    out.push(Artifact::new(
        format!("{prefix}_spectrum.csv"),
        csv_table(
            "k,frequency,power_in,power_out",
            r.input_spectrum
                .iter()
                .zip(&r.output_spectrum)
                .map(|(a, b)| vec![a.k, a.frequency, a.power, b.power]),
        ),
    ));
    let initial = transport_setup(config)?.initial;
    out.push(Artifact::new(
        format!("{prefix}_initial.csv"),
        snapshot(&initial, &grid),
    ));
    for (i, s) in r.snapshots.iter().enumerate() {
        out.push(Artifact::new(
            format!("{prefix}_snapshot_{i:03}.csv"),
            snapshot(s, &grid),
        ));
    }
    out.push(Artifact::new(
        format!("{prefix}_final.csv"),
        snapshot(&r.final_state, &grid),
    ));
    if svg {
        let x: Vec<f64> = (0..grid.n_cells()).map(|i| grid.x(i)).collect();
        let mut series = vec![
            Series::new("input |φ_T|²", x.clone(), intensity(&initial.phi_t)),
            Series::new("output |φ_T|²", x.clone(), intensity(&r.final_state.phi_t)),
        ];
        if let Some(pr) = &r.final_state.phi_r {
            series.push(Series::new("output |φ_R|²", x, intensity(pr)));
        }
        out.push(svg_artifact(
            format!("{prefix}.svg"),
            &series,
            Axes::new("Slowed single-photon pulse", "x (v_g/κ₁ units)", "|φ|²"),
        )?);
    }
    Ok(out)
}

/// Largest relative change of `|e2|²` across the samples inside the hold.
pub fn hold_variation(report: &StorageReport, hold: (f64, f64)) -> f64 {
    let held: Vec<f64> = report
        .series
        .iter()
        .filter(|s| s.t >= hold.0 && s.t <= hold.1)
        .map(|s| s.e2_sq)
        .collect();
    match held.first() {
        Some(&first) if first > 0.0 => held
            .iter()
            .map(|v| (v - first).abs() / first)
            .fold(0.0, f64::max),
        _ => f64::NAN,
    }
}

pub fn storage_report(
    config: &ExperimentConfig,
) -> Result<(StorageReport, (f64, f64), Grid1D), RunError> {
    let setup = transport_setup(config)?;
    let grid = setup.grid;
    let hold = setup
        .schedule
        .hold_window()
        .ok_or_else(|| RunError::Config("schedule: no hold phase".into()))?;
    let report = run_storage(&end_run(config, setup)?)?;
    Ok((report, hold, grid))
}

fn store(config: &ExperimentConfig, svg: bool) -> Result<Vec<Artifact>, RunError> {
    let (r, hold, grid) = storage_report(config)?;
    let prefix = &config.outputs.prefix;
    let mut out = vec![Artifact::new(
        format!("{prefix}_summary.csv"),
        summary_table(&[
            ("reflected_fraction", r.reflected_fraction),
            ("stored_norm", r.stored_norm),
            ("retrieved_fraction", r.retrieved_fraction),
            ("hold_time", r.hold_time),
            ("residual", r.residual),
            ("unscattered", r.unscattered),
            ("dissipated", r.dissipated),
            ("boundary", r.boundary),
            ("overlap", r.overlap),
            ("ledger_error", r.ledger_error()),
            ("hold_variation", hold_variation(&r, hold)),
        ]),
    )];
    out.push(Artifact::new(
        format!("{prefix}_series.csv"),
        csv_table(
            "t,abs_e1_sq,abs_e2_sq,h_e",
            r.series.iter().map(|s| vec![s.t, s.e1_sq, s.e2_sq, s.h_e]),
        ),
    ));
    for (i, s) in r.snapshots.iter().enumerate() {
        out.push(Artifact::new(
            format!("{prefix}_snapshot_{i:03}.csv"),
            snapshot(s, &grid),
        ));
    }
    out.push(Artifact::new(
        format!("{prefix}_final.csv"),
        snapshot(&r.final_state, &grid),
    ));
    if svg {
        let t: Vec<f64> = r.series.iter().map(|s| s.t).collect();
        let h_max = r
            .series
            .iter()
            .map(|s| s.h_e.abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let series = [
            Series::new(
                "|e1|²",
                t.clone(),
                r.series.iter().map(|s| s.e1_sq).collect(),
            ),
            Series::new(
                "|e2|²",
                t.clone(),
                r.series.iter().map(|s| s.e2_sq).collect(),
            ),
            Series::new(
                "h_e / max h_e",
                t,
                r.series.iter().map(|s| s.h_e / h_max).collect(),
            ),
        ];
        out.push(svg_artifact(
            format!("{prefix}.svg"),
            &series,
            Axes::new("Storage and release", "κ₁ t", "population"),
        )?);
    }
    Ok(out)
}

fn oracle(config: &ExperimentConfig, svg: bool) -> Result<Vec<Artifact>, RunError> {
    let o = config.oracle()?;
    let base = config.system_params()?;
    let report = scaling_study(&base, o.g, &o.ratios)?;
    let prefix = &config.outputs.prefix;
    let mut out = vec![Artifact::new(
        format!("{prefix}_scaling.csv"),
        csv_table(
            "ratio,amplitude_error,max_excited,period_full,period_eff",
            report.rows.iter().map(|r| {
                vec![
                    r.ratio,
                    r.amplitude,
                    r.max_excited,
                    r.period_full,
                    r.period_eff,
                ]
            }),
        ),
    )];
    out.push(Artifact::new(
        format!("{prefix}_summary.csv"),
        summary_table(&[
            ("amplitude_slope", report.amplitude_slope),
            ("excited_slope", report.excited_slope),
        ]),
    ));
    let cmp = base
        .to_builder()
        .g(o.g)
        .delta_a(o.comparison_ratio * o.g)
        .build()
        .map_err(RunError::from_config)?;
    let samples = compare_trajectories(&cmp, o.periods * effective_period(&cmp)?, o.samples)?;
    let mut buf = Vec::new();
    write_comparison_csv(&mut buf, &samples)?;
    out.push(Artifact::new(
        format!("{prefix}_comparison.csv"),
        String::from_utf8(buf).expect("ascii output"),
    ));
    if svg {
        let x: Vec<f64> = report.rows.iter().map(|r| r.ratio.log10()).collect();
        let series = [
            Series::new(
                "amplitude error",
                x.clone(),
                report.rows.iter().map(|r| r.amplitude.log10()).collect(),
            ),
            Series::new(
                "max |c_e|²",
                x,
                report.rows.iter().map(|r| r.max_excited.log10()).collect(),
            ),
        ];
        out.push(svg_artifact(
            format!("{prefix}.svg"),
            &series,
            Axes::new(
                "Adiabatic elimination error",
                "log10(Δ_a / g)",
                "log10(error)",
            ),
        )?);
    }
    Ok(out)
}

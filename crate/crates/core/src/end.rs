//! End-coupled line, used for catching, holding and releasing a photon.
//!
//! The line is folded at the resonator: cells left of `x₀` carry the incoming
//! photon, cells right of `x₀` the outgoing one, so a single right-moving
//! field describes both. Cells near `x₀` add the termination phase in small
//! increments that sum to `φ`. The coupling site works like the side-coupled
//! one with a single channel, and resonator 1 leaks `κ_ex` into it, which
//! corresponds to `V = √(2κ_ex v_g)`.

use num_complex::Complex64;

use crate::error::{invalid, Result, SimError};
use crate::model::{CouplingSchedule, Segment, SystemParams};
use crate::side::{drive, summarize, DelayReport};
use crate::transport::{
    check_dimensions, check_local, check_velocity, half_step, resonator_propagator, shift_right,
    Exchange, Sponge, StepLedger,
};
use crate::wavegrid::{free_propagate, window_norm, Grid1D, WaveState};

pub const DEFAULT_SWITCH_SHARPNESS: f64 = 0.5;

/// Increments below this are dropped; they cannot change a phase factor.
const PHASE_INCREMENT_FLOOR: f64 = 1e-17;

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Per-cell phase factors `e^{iφ Δf}` around the coupling site, where `Δf` is
/// the increment of the logistic switch `f(x) = 1/(1 + e^{−(x−x₀)/f_a})` across
/// a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    cells: Vec<(usize, f64)>,
    phase_phi: f64,
    x_resonator: usize,
}

impl PhaseProfile {
    pub fn new(grid: &Grid1D, phase_phi: f64, switch_sharpness: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::TAU).contains(&phase_phi) {
            return Err(invalid(
                "phase_phi",
                format!("must lie in [0, 2π), got {phase_phi}"),
            ));
        }
        if !(switch_sharpness > 0.0 && switch_sharpness.is_finite()) {
            return Err(invalid(
                "switch_sharpness",
                format!("must be > 0, got {switch_sharpness}"),
            ));
        }
        let x0 = grid.x_resonator() as f64;
        let cells = (0..grid.n_cells())
            .filter_map(|i| {
                let u = i as f64 - x0;
                let df =
                    logistic((u + 0.5) / switch_sharpness) - logistic((u - 0.5) / switch_sharpness);
                (df > PHASE_INCREMENT_FLOOR).then_some((i, df))
            })
            .collect();
        Ok(Self {
            cells,
            phase_phi,
            x_resonator: grid.x_resonator(),
        })
    }

    /// `(cell, Δf)` pairs with non-negligible increments.
    pub fn increments(&self) -> &[(usize, f64)] {
        &self.cells
    }

    pub fn phase_phi(&self) -> f64 {
        self.phase_phi
    }

    fn factor(&self, df: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.phase_phi * df)
    }

    /// Phase for every cell except the coupling site.
    fn apply_off_site(&self, field: &mut [Complex64]) {
        for &(i, df) in &self.cells {
            if i != self.x_resonator {
                field[i] *= self.factor(df);
            }
        }
    }

    fn site_half_factor(&self) -> Complex64 {
        self.cells
            .iter()
            .find(|c| c.0 == self.x_resonator)
            .map_or(Complex64::new(1.0, 0.0), |&(_, df)| self.factor(0.5 * df))
    }
}

/// Advances `state` by one step. The coupling site receives half of its phase
/// increment before the exchange with resonator 1 and half after.
pub fn step_end(
    state: &mut WaveState,
    params: &SystemParams,
    grid: &Grid1D,
    h_e_now: f64,
    profile: &PhaseProfile,
) -> Result<StepLedger> {
    check_dimensions(state, grid, false)?;
    let prop = resonator_propagator(params, params.delta_in_prime(), h_e_now, 0.5 * grid.dt());
    let exchange = Exchange::new(params.kappa_ex(), grid.dt());
    step_with(
        state,
        grid,
        &prop,
        &exchange,
        profile,
        profile.site_half_factor(),
    )
}

fn step_with(
    state: &mut WaveState,
    grid: &Grid1D,
    prop: &[[Complex64; 2]; 2],
    exchange: &Exchange,
    profile: &PhaseProfile,
    site_half: Complex64,
) -> Result<StepLedger> {
    let mut ledger = StepLedger {
        boundary: shift_right(&mut state.phi_t) * grid.dx(),
        ..Default::default()
    };
    profile.apply_off_site(&mut state.phi_t);

    let x0 = grid.x_resonator();
    let root = grid.dx().sqrt();
    ledger.dissipated += half_step(state, prop);
    let mut a = state.phi_t[x0] * root * site_half;
    exchange.apply(&mut state.e1, &mut a);
    state.phi_t[x0] = a * site_half / root;
    ledger.dissipated += half_step(state, prop);

    state.t += grid.dt();
    check_local(state, grid)?;
    Ok(ledger)
}

#[derive(Debug, Clone)]
pub struct EndCouplingRun {
    pub params: SystemParams,
    pub grid: Grid1D,
    pub schedule: CouplingSchedule,
    pub phase_phi: f64,
    pub switch_sharpness: f64,
    pub initial: WaveState,
    pub snapshot_times: Vec<f64>,
    pub sponge: bool,
    /// Stopping time; defaults to the end of the last segment plus the time
    /// resonator 1 needs to empty.
    pub t_end: Option<f64>,
}

impl EndCouplingRun {
    pub fn new(
        params: SystemParams,
        grid: Grid1D,
        schedule: CouplingSchedule,
        initial: WaveState,
    ) -> Self {
        Self {
            params,
            grid,
            schedule,
            phase_phi: std::f64::consts::PI,
            switch_sharpness: DEFAULT_SWITCH_SHARPNESS,
            initial,
            snapshot_times: Vec::new(),
            sponge: false,
            t_end: None,
        }
    }

    fn end_time(&self) -> f64 {
        self.t_end.unwrap_or_else(|| {
            let last = self.schedule.segments().last().map_or(0.0, |s| s.end);
            last + self.schedule.ramp_time() + 6.0 / self.params.kappa1_prime().max(1e-3)
        })
    }
}

/// Catch and release windows of equal length centred so that the catch is
/// centred on the pulse arrival time. `hold` is the gap between them.
pub fn storage_schedule(
    arrival: f64,
    window: f64,
    hold: f64,
    level: f64,
    ramp_time: f64,
) -> Result<CouplingSchedule> {
    let catch_end = arrival + 0.5 * window;
    CouplingSchedule::new(
        vec![
            Segment {
                start: arrival - 0.5 * window,
                end: catch_end,
                level,
            },
            Segment {
                start: catch_end + hold,
                end: catch_end + hold + window,
                level,
            },
        ],
        ramp_time,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorSample {
    pub t: f64,
    pub e1_sq: f64,
    pub e2_sq: f64,
    pub h_e: f64,
}

#[derive(Debug, Clone)]
pub struct StorageReport {
    /// Norm of the output emitted before the release begins.
    pub reflected_fraction: f64,
    /// `|e2|²` at the middle of the hold.
    pub stored_norm: f64,
    /// Norm of the output emitted from the start of the release on.
    pub retrieved_fraction: f64,
    /// Length of the flat off part of the schedule.
    pub hold_time: f64,
    /// Resonator norm at the end of the run.
    pub residual: f64,
    /// Norm still travelling towards the resonator at the end.
    pub unscattered: f64,
    pub dissipated: f64,
    pub boundary: f64,
    /// Largest norm of one pulse found inside the other pulse's window.
    pub overlap: f64,
    pub series: Vec<ResonatorSample>,
    pub snapshots: Vec<WaveState>,
    pub final_state: WaveState,
}

impl StorageReport {
    /// Sum of all norm sinks minus one.
    pub fn ledger_error(&self) -> f64 {
        self.reflected_fraction
            + self.retrieved_fraction
            + self.residual
            + self.unscattered
            + self.dissipated
            + self.boundary
            - 1.0
    }
}

struct Trace {
    state: WaveState,
    ledger: StepLedger,
    series: Vec<ResonatorSample>,
    snapshots: Vec<WaveState>,
    stored_norm: f64,
}

fn integrate(
    config: &EndCouplingRun,
    schedule: &CouplingSchedule,
    hold_mid: f64,
    steps: usize,
) -> Result<Trace> {
    let (params, grid) = (&config.params, &config.grid);
    let dt = grid.dt();
    let profile = PhaseProfile::new(grid, config.phase_phi, config.switch_sharpness)?;
    let site_half = profile.site_half_factor();
    let exchange = Exchange::new(params.kappa_ex(), dt);
    let sponge = config.sponge.then(|| Sponge::new(grid.n_cells()));

    let mut state = config.initial.clone();
    let mut ledger = StepLedger::default();
    let mut series = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut pending = config.snapshot_times.iter().copied().peekable();
    let mut stored_norm = None;
    series.push(ResonatorSample {
        t: state.t,
        e1_sq: state.e1.norm_sqr(),
        e2_sq: state.e2.norm_sqr(),
        h_e: schedule.eval(state.t),
    });
    for step in 0..steps {
        let h = schedule.eval(state.t + 0.5 * dt);
        let prop = resonator_propagator(params, params.delta_in_prime(), h, 0.5 * dt);
        ledger += step_with(&mut state, grid, &prop, &exchange, &profile, site_half).map_err(
            |e| match e {
                SimError::Diverged { .. } => SimError::Diverged { step },
                other => other,
            },
        )?;
        if let Some(s) = &sponge {
            ledger.boundary += s.apply(&mut state, grid);
        }
        if stored_norm.is_none() && state.t >= hold_mid {
            stored_norm = Some(state.e2.norm_sqr());
        }
        series.push(ResonatorSample {
            t: state.t,
            e1_sq: state.e1.norm_sqr(),
            e2_sq: state.e2.norm_sqr(),
            h_e: schedule.eval(state.t),
        });
        while pending.peek().is_some_and(|&ts| ts <= state.t + 0.5 * dt) {
            pending.next();
            snapshots.push(state.clone());
        }
    }
    Ok(Trace {
        state,
        ledger,
        series,
        snapshots,
        stored_norm: stored_norm.unwrap_or(0.0),
    })
}

pub fn run_storage(config: &EndCouplingRun) -> Result<StorageReport> {
    check_velocity(&config.params, &config.grid)?;
    check_dimensions(&config.initial, &config.grid, false)?;
    let hold = match config.schedule.hold_window() {
        Some(w) if config.schedule.segments().len() >= 2 => w,
        _ => return Err(SimError::Contract("no hold phase".into())),
    };
    let hold_mid = 0.5 * (hold.0 + hold.1);
    let grid = &config.grid;
    let n = grid.n_cells();
    let x0 = grid.x_resonator();

    let steps = (config.end_time() / grid.dt()).round() as usize;
    let full = integrate(config, &config.schedule, hold_mid, steps)?;
    let t_end = full.state.t;
    // emission time of the sample in cell i > x₀ is t_end − (i − x₀)·dt
    let elapsed = ((t_end - hold.1) / grid.dt()).round().max(0.0) as usize;
    let split = (x0 + 1 + elapsed).min(n);
    let retrieved_cells = x0 + 1..split;
    let reflected_cells = split..n;

    // same run with the release segments switched off, to separate the pulses
    let catch_only: Vec<Segment> = config
        .schedule
        .segments()
        .iter()
        .map(|&s| Segment {
            level: if s.start >= hold.1 { 0.0 } else { s.level },
            ..s
        })
        .collect();
    let reference = integrate(
        config,
        &CouplingSchedule::new(catch_only, config.schedule.ramp_time())?,
        hold_mid,
        steps,
    )?;
    let released: Vec<Complex64> = full
        .state
        .phi_t
        .iter()
        .zip(&reference.state.phi_t)
        .map(|(a, b)| a - b)
        .collect();
    let overlap = window_norm(&reference.state.phi_t, grid, retrieved_cells.clone())
        .max(window_norm(&released, grid, reflected_cells.clone()));

    Ok(StorageReport {
        reflected_fraction: window_norm(&full.state.phi_t, grid, reflected_cells),
        stored_norm: full.stored_norm,
        retrieved_fraction: window_norm(&full.state.phi_t, grid, retrieved_cells),
        hold_time: hold.1 - hold.0,
        residual: full.state.resonator_norm(),
        unscattered: window_norm(&full.state.phi_t, grid, 0..x0 + 1),
        dissipated: full.ledger.dissipated,
        boundary: full.ledger.boundary,
        overlap,
        series: full.series,
        snapshots: full.snapshots,
        final_state: full.state,
    })
}

/// Reflection of a pulse off the end-coupled pair under a fixed schedule,
/// measured like the side-coupled slowing run. The outgoing pulse is the
/// field beyond `x₀`; the report's `reflected` entry stays zero.
pub fn run_delay(config: &EndCouplingRun) -> Result<DelayReport> {
    check_velocity(&config.params, &config.grid)?;
    check_dimensions(&config.initial, &config.grid, false)?;
    let (params, grid) = (&config.params, &config.grid);
    let dt = grid.dt();
    let profile = PhaseProfile::new(grid, config.phase_phi, config.switch_sharpness)?;
    let site_half = profile.site_half_factor();
    let exchange = Exchange::new(params.kappa_ex(), dt);
    let driven = drive(
        &config.initial,
        grid,
        config.sponge,
        config.t_end,
        &config.snapshot_times,
        |state| {
            let h = config.schedule.eval(state.t + 0.5 * dt);
            let prop = resonator_propagator(params, params.delta_in_prime(), h, 0.5 * dt);
            step_with(state, grid, &prop, &exchange, &profile, site_half)
        },
    )?;
    summarize(params, &config.schedule, grid, &config.initial, driven, 0.0)
}

/// Output of the lossless uncoupled line: the input shifted and phased by `φ`.
pub fn passive_output(initial: &[Complex64], steps: usize, phase_phi: f64) -> Vec<Complex64> {
    let rot = Complex64::from_polar(1.0, phase_phi);
    free_propagate(initial, steps)
        .into_iter()
        .map(|z| z * rot)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavegrid::gaussian_pulse;

    #[test]
    fn logistic_is_symmetric_and_stable() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(3.0) + logistic(-3.0) - 1.0).abs() < 1e-15);
        assert_eq!(logistic(-2000.0), 0.0);
        assert_eq!(logistic(2000.0), 1.0);
    }

    #[test]
    fn increments_sum_to_one() {
        let g = Grid1D::new(1000, 1.0, 1.0, 500).unwrap();
        for fa in [0.5, 2.0, 8.0] {
            let p = PhaseProfile::new(&g, 1.0, fa).unwrap();
            let total: f64 = p.increments().iter().map(|c| c.1).sum();
            assert!((total - 1.0).abs() < 1e-14, "f_a = {fa}: {total}");
        }
    }

    #[test]
    fn profile_parameters_validated() {
        let g = Grid1D::new(100, 1.0, 1.0, 50).unwrap();
        assert!(PhaseProfile::new(&g, -0.1, 0.5).is_err());
        assert!(PhaseProfile::new(&g, std::f64::consts::TAU, 0.5).is_err());
        assert!(PhaseProfile::new(&g, 1.0, 0.0).is_err());
    }

    #[test]
    fn uncoupled_line_applies_termination_phase() {
        let p = SystemParams::builder()
            .kappa_ex(0.0)
            .kappa1(0.0)
            .build()
            .unwrap();
        let g = Grid1D::new(600, 1.0, 1.0, 300).unwrap();
        let s0 = gaussian_pulse(&g, 150.0, 20.0, 0.0).unwrap();
        let phi = 2.1;
        let prof = PhaseProfile::new(&g, phi, 0.5).unwrap();
        let mut s = s0.clone();
        for _ in 0..300 {
            step_end(&mut s, &p, &g, 0.0, &prof).unwrap();
        }
        let want = passive_output(&s0.phi_t, 300, phi);
        let err = s
            .phi_t
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn schedule_without_gap_is_rejected() {
        let p = SystemParams::default();
        let g = Grid1D::new(200, 1.0, 1.0, 150).unwrap();
        let s = gaussian_pulse(&g, 60.0, 10.0, 0.0).unwrap();
        let run = EndCouplingRun::new(p, g, CouplingSchedule::constant(2.0), s);
        assert!(matches!(run_storage(&run), Err(SimError::Contract(m)) if m == "no hold phase"));
    }

    #[test]
    fn storage_schedule_layout() {
        let s = storage_schedule(10.0, 2.0, 5.0, 2.0, 0.5).unwrap();
        assert_eq!(s.segments()[0].start, 9.0);
        assert_eq!(s.segments()[1].start, 16.0);
        assert_eq!(s.eval(10.0), 2.0);
        assert_eq!(s.eval(13.0), 0.0);
        let (a, b) = s.hold_window().unwrap();
        assert!((b - a - 4.5).abs() < 1e-12);
    }
}

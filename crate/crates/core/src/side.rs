//! Side-coupled line: a right-moving and a left-moving waveguide mode both
//! couple to resonator 1 at `x₀`, which in turn couples to resonator 2.
//!
//! Each step shifts the two modes one cell in opposite directions and then
//! updates the coupling site. Only the symmetric combination of the two line
//! amplitudes at `x₀` talks to resonator 1, so the site update is a
//! resonator half-step, a beam-splitter exchange with that combination, and
//! another half-step. Resonator 1 leaks `κ_ex` in total, half per direction,
//! which corresponds to a per-mode coupling `V = √(κ_ex v_g)`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::model::{CouplingSchedule, SystemParams};
use crate::transport::{
    check_dimensions, check_local, check_velocity, half_step, resonator_propagator, shift_left,
    shift_right, Exchange, Sponge, StepLedger,
};
use crate::wavegrid::{
    centroid, field_spectrum, free_propagate, window_norm, Grid1D, SpectralSample, WaveState,
};

/// Residual resonator norm below which the scattering is considered over.
pub const SETTLED_NORM: f64 = 1e-4;

/// Advances `state` by one time step. `h_e_now` is the coupling at the
/// midpoint of the step.
pub fn step_side(
    state: &mut WaveState,
    params: &SystemParams,
    grid: &Grid1D,
    h_e_now: f64,
) -> Result<StepLedger> {
    check_dimensions(state, grid, true)?;
    let prop = resonator_propagator(params, params.delta_in_prime(), h_e_now, 0.5 * grid.dt());
    let exchange = Exchange::new(params.kappa_ex(), grid.dt());
    step_with(state, grid, &prop, &exchange)
}

fn step_with(
    state: &mut WaveState,
    grid: &Grid1D,
    prop: &[[Complex64; 2]; 2],
    exchange: &Exchange,
) -> Result<StepLedger> {
    let mut ledger = StepLedger::default();
    let phi_r = state.phi_r.as_mut().expect("checked by caller");
    ledger.boundary += (shift_right(&mut state.phi_t) + shift_left(phi_r)) * grid.dx();

    ledger.dissipated += half_step(state, prop);

    let x0 = grid.x_resonator();
    let root = grid.dx().sqrt();
    let phi_r = state.phi_r.as_mut().expect("checked by caller");
    let before = (state.phi_t[x0] + phi_r[x0]) * root * FRAC_1_SQRT_2;
    let mut bright = before;
    exchange.apply(&mut state.e1, &mut bright);
    // the antisymmetric combination is untouched, so both modes change equally
    let change = (bright - before) * FRAC_1_SQRT_2 / root;
    state.phi_t[x0] += change;
    phi_r[x0] += change;

    ledger.dissipated += half_step(state, prop);
    state.t += grid.dt();
    check_local(state, grid)?;
    Ok(ledger)
}

#[derive(Debug, Clone)]
pub struct SideCouplingRun {
    pub params: SystemParams,
    pub grid: Grid1D,
    pub schedule: CouplingSchedule,
    pub initial: WaveState,
    pub snapshot_times: Vec<f64>,
    pub sponge: bool,
    /// Fixed stopping time. When absent the run stops once the free pulse has
    /// cleared the coupling site and the resonators have emptied.
    pub t_end: Option<f64>,
}

impl SideCouplingRun {
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
            initial: initial.with_reflected_mode(),
            snapshot_times: Vec::new(),
            sponge: false,
            t_end: None,
        }
    }

    fn validate(&self) -> Result<()> {
        check_velocity(&self.params, &self.grid)?;
        check_dimensions(&self.initial, &self.grid, true)?;
        let r = self.initial.phi_r.as_ref().expect("checked above");
        let zero = Complex64::new(0.0, 0.0);
        if r.iter().any(|&z| z != zero) || self.initial.e1 != zero || self.initial.e2 != zero {
            return Err(SimError::Contract(
                "photon must start in the incoming mode with empty resonators".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DelayReport {
    /// Lag of the transmitted centroid behind the free-propagation centroid,
    /// divided by `v_g`.
    pub delay: f64,
    /// Norm of the transmitted pulse.
    pub retention: f64,
    pub reflected: f64,
    pub dissipated: f64,
    pub boundary: f64,
    /// Resonator norm left at the end of the run.
    pub residual: f64,
    /// Spatial rms width of the input intensity times √2 (the Gaussian `τ`).
    pub pulse_width: f64,
    /// Whether the input is narrower in frequency than the transparency
    /// window and the resonator linewidth by a factor of four.
    pub narrowband: bool,
    pub settled: bool,
    pub steps: usize,
    pub input_spectrum: Vec<SpectralSample>,
    pub output_spectrum: Vec<SpectralSample>,
    pub snapshots: Vec<WaveState>,
    pub final_state: WaveState,
}

/// Intensity-weighted mean and rms width of `field`, in length units.
fn moments(field: &[Complex64], grid: &Grid1D) -> (f64, f64) {
    let w: f64 = field.iter().map(|z| z.norm_sqr()).sum();
    let m1 = field
        .iter()
        .enumerate()
        .map(|(i, z)| grid.x(i) * z.norm_sqr())
        .sum::<f64>()
        / w;
    let m2 = field
        .iter()
        .enumerate()
        .map(|(i, z)| (grid.x(i) - m1).powi(2) * z.norm_sqr())
        .sum::<f64>()
        / w;
    (m1, m2.sqrt())
}

pub(crate) struct Driven {
    pub(crate) state: WaveState,
    pub(crate) ledger: StepLedger,
    pub(crate) snapshots: Vec<WaveState>,
    pub(crate) steps: usize,
}

/// Steps `initial` forward until the pulse has cleared the coupling site.
/// Without a fixed `t_end` the run stops once the free pulse sits midway
/// between the site and the far end, later if the resonators still hold
/// excitation, but never after the pulse front reaches the far absorbing layer.
pub(crate) fn drive(
    initial: &WaveState,
    grid: &Grid1D,
    sponge: bool,
    t_end: Option<f64>,
    snapshot_times: &[f64],
    mut step: impl FnMut(&mut WaveState) -> Result<StepLedger>,
) -> Result<Driven> {
    let n = grid.n_cells();
    let dt = grid.dt();
    let (c0, sigma) = moments(&initial.phi_t, grid);
    let room = grid.x(n - 1 - crate::wavegrid::SPONGE_CELLS) - 6.0 * sigma - c0;
    let max_steps = (room / grid.dx()).floor().max(0.0) as usize;
    let midway = 0.5 * (grid.x(grid.x_resonator()) + grid.x(n - 1));
    let clear_steps = ((midway - c0) / grid.dx()).ceil().max(0.0) as usize;
    let fixed = t_end.map(|t| (t / dt).round() as usize);

    let sponge = sponge.then(|| Sponge::new(n));
    let mut state = initial.clone();
    let mut ledger = StepLedger::default();
    let mut snapshots = Vec::new();
    let mut pending = snapshot_times.iter().copied().peekable();
    let mut steps = 0usize;
    loop {
        let done = match fixed {
            Some(k) => steps >= k,
            None => {
                steps >= max_steps
                    || (steps >= clear_steps && state.resonator_norm() < SETTLED_NORM * 1e-2)
            }
        };
        if done {
            break;
        }
        ledger += step(&mut state).map_err(|e| match e {
            SimError::Diverged { .. } => SimError::Diverged { step: steps },
            other => other,
        })?;
        if let Some(s) = &sponge {
            ledger.boundary += s.apply(&mut state, grid);
        }
        steps += 1;
        while pending.peek().is_some_and(|&ts| ts <= state.t + 0.5 * dt) {
            pending.next();
            snapshots.push(state.clone());
        }
    }
    Ok(Driven {
        state,
        ledger,
        snapshots,
        steps,
    })
}

/// Delay, retention and spectra of the right-moving output beyond `x₀`.
pub(crate) fn summarize(
    params: &SystemParams,
    schedule: &CouplingSchedule,
    grid: &Grid1D,
    initial: &WaveState,
    driven: Driven,
    reflected: f64,
) -> Result<DelayReport> {
    let n = grid.n_cells();
    let x0 = grid.x_resonator();
    let (_, sigma) = moments(&initial.phi_t, grid);
    let Driven {
        state,
        ledger,
        snapshots,
        steps,
    } = driven;

    let free = free_propagate(&initial.phi_t, steps);
    let free_centroid = centroid(&free, grid, 0..n)?;
    let transmitted = centroid(&state.phi_t, grid, x0 + 1..n)?;

    let h_max = schedule.max_abs_level();
    let kp = params.kappa1_prime();
    let tau = sigma * std::f64::consts::SQRT_2;
    let narrowband = h_max > 0.0 && tau >= 4.0 * grid.v_g() / (h_max * h_max / kp).min(kp);

    let mut out_field = vec![Complex64::new(0.0, 0.0); n];
    out_field[x0 + 1..].copy_from_slice(&state.phi_t[x0 + 1..]);

    Ok(DelayReport {
        delay: (free_centroid - transmitted) / grid.v_g(),
        retention: window_norm(&state.phi_t, grid, x0 + 1..n),
        reflected,
        dissipated: ledger.dissipated,
        boundary: ledger.boundary,
        residual: state.resonator_norm(),
        pulse_width: tau,
        narrowband,
        settled: state.resonator_norm() < SETTLED_NORM,
        steps,
        input_spectrum: field_spectrum(&initial.phi_t, grid),
        output_spectrum: field_spectrum(&out_field, grid),
        snapshots,
        final_state: state,
    })
}

pub fn run_slowing(config: &SideCouplingRun) -> Result<DelayReport> {
    config.validate()?;
    let (params, grid) = (&config.params, &config.grid);
    let dt = grid.dt();
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
            step_with(state, grid, &prop, &exchange)
        },
    )?;
    let phi_r = driven
        .state
        .phi_r
        .as_ref()
        .expect("side state has a reflected mode");
    let reflected = window_norm(phi_r, grid, 0..grid.x_resonator());
    summarize(
        params,
        &config.schedule,
        grid,
        &config.initial,
        driven,
        reflected,
    )
}

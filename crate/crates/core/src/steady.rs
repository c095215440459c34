//! Steady-state response of the driven resonator pair: the output amplitude
//! `t = α_out/α_in`, power spectra with unwrapped phase, group delay, and a
//! fixed-step transient integrator for the mean-field Langevin equations.
//!
//! Group delays are reported as positive envelope delays, i.e. the derivative
//! of the output phase with respect to the drive frequency. Since
//! `Δ′_in = ω_r1 − ω_in`, this is `−dφ/dΔ′_in`.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::model::{CouplingSchedule, SystemParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Denominator `κ′₁ + iΔ′ + h²/(κ₂ + i(δ + Δ′))` shared by all amplitudes;
/// the `h → 0` limit is taken explicitly.
fn response_denominator(params: &SystemParams, h_e: f64, dp: f64) -> Result<Complex64> {
    let first = Complex64::new(params.kappa1_prime(), dp);
    if h_e == 0.0 {
        if first == Complex64::new(0.0, 0.0) {
            return Err(SimError::LosslessSingular);
        }
        return Ok(first);
    }
    let second = Complex64::new(params.kappa2(), params.delta() + dp);
    if second == Complex64::new(0.0, 0.0) {
        // resonator 2 exactly resonant and lossless: the window is fully open
        return Ok(Complex64::new(f64::INFINITY, 0.0));
    }
    let d = first + h_e * h_e / second;
    if d == Complex64::new(0.0, 0.0) {
        return Err(SimError::LosslessSingular);
    }
    Ok(d)
}

/// Output amplitude `t = −1 + 2κ_ex[κ₂ + i(δ+Δ′)] / (h² + (κ′₁ + iΔ′)[κ₂ + i(δ+Δ′)])`.
///
/// This is the reflection amplitude of the end-coupled line and the quantity
/// plotted as "transmission" for both geometries.
pub fn steady_amplitude(params: &SystemParams, h_e: f64, delta_in_prime: f64) -> Result<Complex64> {
    let d = response_denominator(params, h_e, delta_in_prime)?;
    if d.re.is_infinite() {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    Ok(Complex64::new(-1.0, 0.0) + 2.0 * params.kappa_ex() / d)
}

/// Through and back-scattered amplitudes `(t_T, r_R)` of the side-coupled line
/// when resonator 1 leaks `κ_ex` in total, split evenly between directions.
pub fn side_coupled_amplitudes(
    params: &SystemParams,
    h_e: f64,
    delta_in_prime: f64,
) -> Result<(Complex64, Complex64)> {
    let d = response_denominator(params, h_e, delta_in_prime)?;
    if d.re.is_infinite() {
        return Ok((Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
    }
    let r = -params.kappa_ex() / d;
    Ok((Complex64::new(1.0, 0.0) + r, r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    /// Stark-shifted drive detuning `Δ′_in`.
    pub detuning: f64,
    pub amplitude: Complex64,
    pub power: f64,
    /// `arg t`, unwrapped across the sweep.
    pub phase: f64,
}

/// Removes 2π jumps between consecutive samples.
pub fn unwrap_phase(raw: &[f64]) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in raw {
        if let Some(q) = prev {
            let jump = p - q;
            if jump > PI {
                offset -= TAU;
            } else if jump < -PI {
                offset += TAU;
            }
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}

pub fn spectrum_sweep(
    params: &SystemParams,
    h_e: f64,
    detunings: &[f64],
) -> Result<Vec<SpectrumPoint>> {
    if detunings.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::Contract(
            "detuning grid must be strictly increasing".into(),
        ));
    }
    let amps = detunings
        .iter()
        .map(|&d| steady_amplitude(params, h_e, d))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = amps.iter().map(|a| a.arg()).collect();
    let phases = unwrap_phase(&raw);
    Ok(detunings
        .iter()
        .zip(amps)
        .zip(phases)
        .map(|((&detuning, amplitude), phase)| SpectrumPoint {
            detuning,
            amplitude,
            power: amplitude.norm_sqr(),
            phase,
        })
        .collect())
}

/// Central-difference group delay at `delta_in_prime`.
pub fn group_delay_numeric(
    params: &SystemParams,
    h_e: f64,
    delta_in_prime: f64,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(SimError::Contract(format!("step must be > 0, got {step}")));
    }
    let lo = steady_amplitude(params, h_e, delta_in_prime - step)?;
    let mid = steady_amplitude(params, h_e, delta_in_prime)?;
    let hi = steady_amplitude(params, h_e, delta_in_prime + step)?;
    let floor = 1e-12;
    if lo.norm() < floor || mid.norm() < floor || hi.norm() < floor {
        return Err(SimError::PhaseUndefined {
            detuning: delta_in_prime,
        });
    }
    let d1 = (mid / lo).arg();
    let d2 = (hi / mid).arg();
    if d1.abs() > std::f64::consts::FRAC_PI_2 || d2.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(SimError::PhaseUndefined {
            detuning: delta_in_prime,
        });
    }
    Ok(-(d1 + d2) / (2.0 * step))
}

/// `τ_g = 2κ_ex (h² − κ₂²) / (h² + κ′₁κ₂)²`, valid on resonance with `δ = 0`.
pub fn group_delay_closed(params: &SystemParams, h_e: f64) -> Result<f64> {
    if params.delta() != 0.0 {
        return Err(SimError::Contract(
            "closed form valid only on symmetric resonance (delta = 0)".into(),
        ));
    }
    let h2 = h_e * h_e;
    let k2 = params.kappa2();
    let den = h2 + params.kappa1_prime() * k2;
    if den == 0.0 {
        return Err(SimError::LosslessSingular);
    }
    let t0 = -1.0 + 2.0 * params.kappa_ex() * k2 / den;
    if t0 == 0.0 {
        return Err(SimError::PhaseUndefined { detuning: 0.0 });
    }
    Ok(2.0 * params.kappa_ex() * (k2 * k2 - h2) / (den * den * t0))
}

/// Full width at half maximum of the transparency peak centred at `Δ′ = −δ/2`
/// (the midpoint of the two bare resonances, exact for `δ = 0`).
pub fn transparency_fwhm(params: &SystemParams, h_e: f64) -> Result<f64> {
    if h_e == 0.0 {
        return Err(SimError::Contract(
            "no transparency window at h_e = 0".into(),
        ));
    }
    let centre = -0.5 * params.delta();
    let power = |d: f64| steady_amplitude(params, h_e, d).map(|t| t.norm_sqr());
    let peak = power(centre)?;
    let half = 0.5 * peak;
    let scale = h_e.abs() * h_e.abs() / params.kappa1_prime().max(1e-300);
    let probe = (scale.min(h_e.abs()) / 256.0).max(1e-9);
    let limit = 20.0 * (params.kappa1_prime() + h_e.abs() + params.delta().abs());
    let crossing = |dir: f64| -> Result<f64> {
        let mut a = 0.0;
        let mut b = probe;
        while power(centre + dir * b)? > half {
            a = b;
            b += probe;
            if b > limit {
                return Err(SimError::Contract(
                    "transparency peak never falls to half maximum".into(),
                ));
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if power(centre + dir * m)? > half {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * b.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (a + b))
    };
    Ok(crossing(1.0)? + crossing(-1.0)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinSample {
    pub t: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub alpha_out: Complex64,
}

/// Integrates the mean-field Langevin equations from empty resonators with
/// classic fourth-order Runge–Kutta at fixed `dt`.
pub fn langevin_transient(
    params: &SystemParams,
    schedule: &CouplingSchedule,
    alpha_in: Complex64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<LangevinSample>> {
    let dp = params.delta_in_prime();
    let rate = params
        .kappa1_prime()
        .max(schedule.max_abs_level())
        .max(dp.abs() + params.delta().abs());
    if !(dt > 0.0) || (rate > 0.0 && dt > 0.05 / rate) {
        return Err(SimError::Contract(format!(
            "dt = {dt} exceeds the stability bound 0.05/{rate}"
        )));
    }
    if !(t_end >= 0.0) {
        return Err(SimError::Contract("t_end must be >= 0".into()));
    }
    let k1p = params.kappa1_prime();
    let k2 = params.kappa2();
    let delta = params.delta();
    let drive = (2.0 * params.kappa_ex()).sqrt() * alpha_in;
    let rhs = |t: f64, a: Complex64, b: Complex64| -> (Complex64, Complex64) {
        let h = schedule.eval(t);
        let da = -(I * dp + k1p) * a - I * h * b + drive;
        let db = -(I * (dp + delta) + k2) * b - I * h * a;
        (da, db)
    };
    let out = |t: f64, a: Complex64, b: Complex64| LangevinSample {
        t,
        alpha: a,
        beta: b,
        alpha_out: -alpha_in + (2.0 * params.kappa_ex()).sqrt() * a,
    };
    let steps = (t_end / dt).round() as usize;
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    let mut series = Vec::with_capacity(steps + 1);
    series.push(out(0.0, a, b));
    for n in 0..steps {
        let t = n as f64 * dt;
        let (ka1, kb1) = rhs(t, a, b);
        let (ka2, kb2) = rhs(t + 0.5 * dt, a + 0.5 * dt * ka1, b + 0.5 * dt * kb1);
        let (ka3, kb3) = rhs(t + 0.5 * dt, a + 0.5 * dt * ka2, b + 0.5 * dt * kb2);
        let (ka4, kb4) = rhs(t + dt, a + dt * ka3, b + dt * kb3);
        a += dt / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
        b += dt / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
        if !(a.re.is_finite() && a.im.is_finite() && b.re.is_finite() && b.im.is_finite()) {
            return Err(SimError::Diverged { step: n + 1 });
        }
        series.push(out((n + 1) as f64 * dt, a, b));
    }
    Ok(series)
}

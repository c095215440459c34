//! Uniform 1D grid for the traveling waveguide photon, single-photon wave
//! states, Gaussian wavepackets, and the measurements taken on them.
//!
//! Transport uses exact-shift advection: one time step moves every sample by
//! exactly one cell, so `v_g · dt = dx` holds by construction.

use std::io::{self, Write};
use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result, SimError};

/// Width of the absorbing layer at each grid end, in cells.
pub const SPONGE_CELLS: usize = 32;

/// Minimum norm a centroid window must carry.
pub const CENTROID_MIN_NORM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    dx: f64,
    v_g: f64,
    x_resonator: usize,
    dt: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, dx: f64, v_g: f64, x_resonator: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(invalid("dx", format!("must be > 0, got {dx}")));
        }
        if !(v_g > 0.0 && v_g.is_finite()) {
            return Err(invalid("v_g", format!("must be > 0, got {v_g}")));
        }
        if n_cells < 3 || x_resonator == 0 || x_resonator >= n_cells - 1 {
            return Err(invalid(
                "x_resonator",
                format!("must satisfy 0 < x_resonator < n_cells - 1 (n_cells = {n_cells}, x_resonator = {x_resonator})"),
            ));
        }
        Ok(Self {
            n_cells,
            dx,
            v_g,
            x_resonator,
            dt: dx / v_g,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn v_g(&self) -> f64 {
        self.v_g
    }

    pub fn x_resonator(&self) -> usize {
        self.x_resonator
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Position of cell `i`.
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }
}

/// Single-excitation state: waveguide amplitudes plus the two resonator
/// amplitudes at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    /// Right-moving (incoming / through) mode, or the single folded mode of
    /// the end-coupled line.
    pub phi_t: Vec<Complex64>,
    /// Left-moving reflected mode; present only for the side-coupled line.
    pub phi_r: Option<Vec<Complex64>>,
    pub e1: Complex64,
    pub e2: Complex64,
    pub t: f64,
}

impl WaveState {
    pub fn vacuum(grid: &Grid1D, with_reflected: bool) -> Self {
        let zeros = vec![Complex64::new(0.0, 0.0); grid.n_cells()];
        Self {
            phi_r: with_reflected.then(|| zeros.clone()),
            phi_t: zeros,
            e1: Complex64::new(0.0, 0.0),
            e2: Complex64::new(0.0, 0.0),
            t: 0.0,
        }
    }

    /// Adds an empty reflected mode if absent.
    pub fn with_reflected_mode(mut self) -> Self {
        if self.phi_r.is_none() {
            self.phi_r = Some(vec![Complex64::new(0.0, 0.0); self.phi_t.len()]);
        }
        self
    }

    pub fn field_norm(&self, grid: &Grid1D) -> f64 {
        let t: f64 = self.phi_t.iter().map(|z| z.norm_sqr()).sum();
        let r: f64 = self
            .phi_r
            .as_ref()
            .map_or(0.0, |v| v.iter().map(|z| z.norm_sqr()).sum());
        (t + r) * grid.dx()
    }

    pub fn resonator_norm(&self) -> f64 {
        self.e1.norm_sqr() + self.e2.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        let ok = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        ok(&self.e1)
            && ok(&self.e2)
            && self.phi_t.iter().all(ok)
            && self.phi_r.as_ref().is_none_or(|v| v.iter().all(ok))
    }
}

/// Unit-norm Gaussian envelope `(πτ²)^{-1/4} exp(−(x−x_c)²/2τ²)`.
pub fn gaussian_profile(x: f64, center: f64, tau: f64) -> f64 {
    let u = (x - center) / tau;
    (std::f64::consts::PI * tau * tau).powf(-0.25) * (-0.5 * u * u).exp()
}

/// Gaussian single-photon wavepacket in the incoming mode, renormalized so
/// that `Σ|φ|²dx = 1` on the grid. `k_offset` multiplies the envelope by
/// `exp(i k_offset x)`.
pub fn gaussian_pulse(grid: &Grid1D, center: f64, tau: f64, k_offset: f64) -> Result<WaveState> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("must be > 0, got {tau}")));
    }
    let x_res = grid.x(grid.x_resonator());
    if !(center - 4.0 * tau > 0.0 && center + 4.0 * tau < x_res) {
        return Err(SimError::Contract(format!(
            "pulse not localized: [{}, {}] must lie inside (0, {x_res})",
            center - 4.0 * tau,
            center + 4.0 * tau
        )));
    }
    let mut state = WaveState::vacuum(grid, false);
    for (i, z) in state.phi_t.iter_mut().enumerate() {
        let x = grid.x(i);
        *z = Complex64::from_polar(gaussian_profile(x, center, tau), k_offset * x);
    }
    let norm = state.field_norm(grid).sqrt();
    for z in &mut state.phi_t {
        *z /= norm;
    }
    Ok(state)
}

pub fn total_norm(state: &WaveState, grid: &Grid1D) -> f64 {
    state.field_norm(grid) + state.resonator_norm()
}

/// Norm of `field` restricted to `window`.
pub fn window_norm(field: &[Complex64], grid: &Grid1D, window: Range<usize>) -> f64 {
    field[window].iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()
}

/// `Σ x|φ|² / Σ |φ|²` over `window`.
pub fn centroid(field: &[Complex64], grid: &Grid1D, window: Range<usize>) -> Result<f64> {
    if window.start >= window.end || window.end > field.len() {
        return Err(SimError::EmptyWindow(format!("{window:?}")));
    }
    let mut w = 0.0;
    let mut xw = 0.0;
    for i in window.clone() {
        let p = field[i].norm_sqr();
        w += p;
        xw += grid.x(i) * p;
    }
    if w * grid.dx() <= CENTROID_MIN_NORM {
        return Err(SimError::EmptyWindow(format!(
            "norm {} in {window:?} is below {CENTROID_MIN_NORM}",
            w * grid.dx()
        )));
    }
    Ok(xw / w)
}

/// Continuum-normalized Fourier amplitudes `φ̂(k) = Σ φ(x) e^{−ikx} dx`,
/// returned in increasing `k`.
pub fn fourier_amplitudes(field: &[Complex64], grid: &Grid1D) -> Vec<(f64, Complex64)> {
    let n = field.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = field.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dk = std::f64::consts::TAU / (n as f64 * grid.dx());
    let half = (n / 2) as i64;
    (0..n as i64)
        .map(|j| {
            let s = j - half;
            let m = s.rem_euclid(n as i64) as usize;
            (s as f64 * dk, buf[m] * grid.dx())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSample {
    pub k: f64,
    /// Photon frequency offset from the carrier, `v_g k`.
    pub frequency: f64,
    /// `|φ̂(k)|²` normalized to unit peak.
    pub power: f64,
}

pub fn field_spectrum(field: &[Complex64], grid: &Grid1D) -> Vec<SpectralSample> {
    let amps = fourier_amplitudes(field, grid);
    let peak = amps.iter().map(|(_, a)| a.norm_sqr()).fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    amps.into_iter()
        .map(|(k, a)| SpectralSample {
            k,
            frequency: grid.v_g() * k,
            power: a.norm_sqr() * scale,
        })
        .collect()
}

/// Full width at half maximum of a sampled single-peaked curve, with linear
/// interpolation at the crossings. `None` if a side never drops below half.
pub fn fwhm(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (ipk, &peak) = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * peak;
    let lerp = |i: usize, j: usize| xs[i] + (half - ys[i]) * (xs[j] - xs[i]) / (ys[j] - ys[i]);
    let right = (ipk + 1..ys.len())
        .find(|&j| ys[j] < half)
        .map(|j| lerp(j - 1, j))?;
    let left = (0..ipk)
        .rev()
        .find(|&j| ys[j] < half)
        .map(|j| lerp(j + 1, j))?;
    Some(right - left)
}

/// One Fourier component of a measured transfer function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferSample {
    pub k: f64,
    /// Drive detuning `Δ′_in` probed by this component, `Δ′ − v_g k`.
    pub detuning: f64,
    /// Output over freely propagated input.
    pub ratio: Complex64,
    /// Input spectral power, normalized to unit peak.
    pub weight: f64,
}

/// Translates `field` by `steps` cells to the right with zero inflow.
pub fn free_propagate(field: &[Complex64], steps: usize) -> Vec<Complex64> {
    let n = field.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if steps < n {
        out[steps..].copy_from_slice(&field[..n - steps]);
    }
    out
}

/// Ratio of the output spectrum to that of the input advected freely for
/// `steps` steps. Components below `min_weight` of the input peak are dropped.
pub fn transfer_estimate(
    input: &[Complex64],
    output: &[Complex64],
    grid: &Grid1D,
    steps: usize,
    delta_in_prime: f64,
    min_weight: f64,
) -> Vec<TransferSample> {
    let free = fourier_amplitudes(&free_propagate(input, steps), grid);
    let out = fourier_amplitudes(output, grid);
    let peak = free.iter().map(|(_, a)| a.norm_sqr()).fold(0.0, f64::max);
    free.iter()
        .zip(&out)
        .filter_map(|(&(k, a), &(_, b))| {
            let weight = a.norm_sqr() / peak;
            (weight >= min_weight).then(|| TransferSample {
                k,
                detuning: delta_in_prime - grid.v_g() * k,
                ratio: b / a,
                weight,
            })
        })
        .collect()
}

/// Per-cell amplitude factors of the absorbing layers at both grid ends.
pub fn sponge_profile(n_cells: usize) -> Vec<f64> {
    let mut m = vec![1.0; n_cells];
    let w = SPONGE_CELLS.min(n_cells / 2);
    for i in 0..w {
        // 0 at the outermost cell, rising smoothly to 1 at the inner edge
        let s = (std::f64::consts::FRAC_PI_2 * i as f64 / w as f64).sin();
        m[i] = s * s;
        m[n_cells - 1 - i] = s * s;
    }
    m
}

/// Writes `x,re_phiT,im_phiT,re_phiR,im_phiR` rows, zero-filling the
/// reflected columns when the state has a single mode.
pub fn write_snapshot_csv<W: Write>(
    out: &mut W,
    state: &WaveState,
    grid: &Grid1D,
) -> io::Result<()> {
    writeln!(out, "x,re_phiT,im_phiT,re_phiR,im_phiR")?;
    for (i, t) in state.phi_t.iter().enumerate() {
        let r = state
            .phi_r
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |v| v[i]);
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            grid.x(i),
            t.re,
            t.im,
            r.re,
            r.im
        )?;
    }
    Ok(())
}

//! Pieces shared by the two real-space integrators: exact-shift advection,
//! the resonator-pair propagator, the line/resonator exchange, and the sponge.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::model::SystemParams;
use crate::wavegrid::{sponge_profile, Grid1D, WaveState};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `exp(A)` for a complex 2×2 matrix, via `e^m [cosh(s) I + sinh(s)/s (A − mI)]`.
pub(crate) fn expm2(a: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let m = 0.5 * (a[0][0] + a[1][1]);
    let p = 0.5 * (a[0][0] - a[1][1]);
    let s2 = p * p + a[0][1] * a[1][0];
    let s = s2.sqrt();
    let (ch, sh) = if s.norm() < 1e-4 {
        // series keeps sinh(s)/s accurate near the exceptional point
        (
            1.0 + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0,
            1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0,
        )
    } else {
        (s.cosh(), s.sinh() / s)
    };
    let em = m.exp();
    [
        [em * (ch + sh * p), em * sh * a[0][1]],
        [em * sh * a[1][0], em * (ch - sh * p)],
    ]
}

/// Free evolution of `(e1, e2)` over `tau` with coupling `h` and intrinsic
/// losses only; the external channel is handled by [`Exchange`].
pub(crate) fn resonator_propagator(
    params: &SystemParams,
    detuning: f64,
    h: f64,
    tau: f64,
) -> [[Complex64; 2]; 2] {
    let d1 = Complex64::new(detuning, -params.kappa1());
    let d2 = Complex64::new(detuning + params.delta(), -params.kappa2());
    let hc = Complex64::new(h, 0.0);
    let k = -I * tau;
    expm2([[k * d1, k * hc], [k * hc, k * d2]])
}

pub(crate) fn apply2(m: &[[Complex64; 2]; 2], e1: &mut Complex64, e2: &mut Complex64) {
    let a = m[0][0] * *e1 + m[0][1] * *e2;
    let b = m[1][0] * *e1 + m[1][1] * *e2;
    *e1 = a;
    *e2 = b;
}

/// Beam-splitter exchange between `e1` and a single line amplitude. The angle
/// is set so that, with the line empty, `|e1|` decays as `e^{−κ_ex dt}` per step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Exchange {
    cos: f64,
    sin: f64,
}

impl Exchange {
    pub(crate) fn new(kappa_ex: f64, dt: f64) -> Self {
        let cos = (-kappa_ex * dt).exp();
        Self {
            cos,
            sin: (1.0 - cos * cos).max(0.0).sqrt(),
        }
    }

    pub(crate) fn apply(&self, e1: &mut Complex64, a: &mut Complex64) {
        let e = self.cos * *e1 - I * self.sin * *a;
        let b = self.cos * *a - I * self.sin * *e1;
        *e1 = e;
        *a = b;
    }
}

/// Moves every sample one cell to the right with zero inflow. Returns the
/// squared-amplitude sum that left the grid.
pub(crate) fn shift_right(field: &mut [Complex64]) -> f64 {
    let n = field.len();
    let lost = field[n - 1].norm_sqr();
    field.copy_within(0..n - 1, 1);
    field[0] = Complex64::new(0.0, 0.0);
    lost
}

pub(crate) fn shift_left(field: &mut [Complex64]) -> f64 {
    let n = field.len();
    let lost = field[0].norm_sqr();
    field.copy_within(1..n, 0);
    field[n - 1] = Complex64::new(0.0, 0.0);
    lost
}

/// Norm bookkeeping for a single step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepLedger {
    /// Norm removed by intrinsic resonator losses.
    pub dissipated: f64,
    /// Norm that left the grid or was absorbed by a sponge.
    pub boundary: f64,
}

impl std::ops::AddAssign for StepLedger {
    fn add_assign(&mut self, rhs: Self) {
        self.dissipated += rhs.dissipated;
        self.boundary += rhs.boundary;
    }
}

/// Applies the half-step propagator and returns the norm it removed.
pub(crate) fn half_step(state: &mut WaveState, prop: &[[Complex64; 2]; 2]) -> f64 {
    let before = state.resonator_norm();
    apply2(prop, &mut state.e1, &mut state.e2);
    (before - state.resonator_norm()).max(0.0)
}

pub(crate) fn check_local(state: &WaveState, grid: &Grid1D) -> Result<()> {
    let ok = |z: Complex64| z.re.is_finite() && z.im.is_finite();
    let x0 = grid.x_resonator();
    let line = ok(state.phi_t[x0]) && state.phi_r.as_ref().is_none_or(|r| ok(r[x0]));
    if line && ok(state.e1) && ok(state.e2) {
        Ok(())
    } else {
        Err(SimError::Diverged {
            step: (state.t / grid.dt()).round() as usize,
        })
    }
}

pub(crate) fn check_dimensions(state: &WaveState, grid: &Grid1D, reflected: bool) -> Result<()> {
    let n = grid.n_cells();
    if state.phi_t.len() != n || state.phi_r.as_ref().is_some_and(|r| r.len() != n) {
        return Err(SimError::Contract(format!(
            "state has {} cells, grid has {n}",
            state.phi_t.len()
        )));
    }
    if reflected != state.phi_r.is_some() {
        return Err(SimError::Contract(if reflected {
            "side-coupled state needs a reflected mode".into()
        } else {
            "end-coupled state must not carry a reflected mode".into()
        }));
    }
    Ok(())
}

pub(crate) fn check_velocity(params: &SystemParams, grid: &Grid1D) -> Result<()> {
    if params.v_g() != grid.v_g() {
        return Err(SimError::Contract(format!(
            "grid group velocity {} differs from system v_g {}",
            grid.v_g(),
            params.v_g()
        )));
    }
    Ok(())
}

/// Cosine-taper absorbing layers at both grid ends.
#[derive(Debug, Clone)]
pub(crate) struct Sponge {
    profile: Vec<f64>,
}

impl Sponge {
    pub(crate) fn new(n_cells: usize) -> Self {
        Self {
            profile: sponge_profile(n_cells),
        }
    }

    fn damp(&self, field: &mut [Complex64], cells: impl Iterator<Item = usize>) -> f64 {
        let mut lost = 0.0;
        for i in cells {
            let m = self.profile[i];
            lost += field[i].norm_sqr() * (1.0 - m * m);
            field[i] *= m;
        }
        lost
    }

    /// Returns the absorbed norm.
    pub(crate) fn apply(&self, state: &mut WaveState, grid: &Grid1D) -> f64 {
        let n = self.profile.len();
        let w = self.profile.iter().take_while(|&&m| m < 1.0).count();
        let ends = || (0..w).chain(n - w..n);
        let mut lost = self.damp(&mut state.phi_t, ends());
        if let Some(r) = state.phi_r.as_mut() {
            lost += self.damp(r, ends());
        }
        lost * grid.dx()
    }
}

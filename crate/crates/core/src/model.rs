//! Physical parameters of the two-resonator + transmon system, the effective
//! inter-resonator coupling obtained by eliminating the qubit, and the
//! piecewise coupling schedules used by the storage and slowing protocols.
//!
//! All rates, detunings and times are expressed in units of the intrinsic
//! decay rate of resonator 1, so `kappa1 = 1` in the default parameter set.

use num_complex::Complex64;

use crate::error::{invalid, Result, SimError};

/// Minimum ratio `|Δ_a| / max(|g1|, |g2|)` accepted by [`SystemParams`].
pub const DISPERSIVE_RATIO_MIN: f64 = 5.0;

/// Default duration of a coupling ramp, in units of `1/κ₁`.
pub const DEFAULT_RAMP_TIME: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    kappa1: f64,
    kappa_ex: f64,
    kappa2: f64,
    delta: f64,
    g1: Complex64,
    g2: Complex64,
    delta_a: f64,
    delta_in: f64,
    v_g: f64,
}

impl SystemParams {
    pub fn builder() -> SystemParamsBuilder {
        SystemParamsBuilder::default()
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn kappa_ex(&self) -> f64 {
        self.kappa_ex
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    /// Resonator-resonator detuning `ω_r2 − ω_r1`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g1(&self) -> Complex64 {
        self.g1
    }

    pub fn g2(&self) -> Complex64 {
        self.g2
    }

    /// Qubit detuning from resonator 1, `ω_q − ω_r1`.
    pub fn delta_a(&self) -> f64 {
        self.delta_a
    }

    /// Drive detuning `ω_r1 − ω_in`.
    pub fn delta_in(&self) -> f64 {
        self.delta_in
    }

    pub fn v_g(&self) -> f64 {
        self.v_g
    }

    /// Total amplitude decay of resonator 1, `κ₁ + κ_ex`.
    pub fn kappa1_prime(&self) -> f64 {
        self.kappa1 + self.kappa_ex
    }

    /// Stark-shifted drive detuning `Δ_in − |g1|²/Δ_a`.
    pub fn delta_in_prime(&self) -> f64 {
        if self.g1.norm_sqr() == 0.0 {
            return self.delta_in;
        }
        // the builder guarantees delta_a != 0 whenever g1 != 0
        self.delta_in + self.g1.norm_sqr() * (-1.0 / self.delta_a)
    }

    /// Effective coupling implied by the stored qubit parameters.
    pub fn effective_coupling(&self) -> Result<Complex64> {
        effective_coupling(self.g1, self.g2, self.delta_a, self.delta)
    }

    /// Copy with a different drive detuning (everything else unchanged).
    pub fn with_delta_in(mut self, delta_in: f64) -> Self {
        self.delta_in = delta_in;
        self
    }

    pub fn to_builder(&self) -> SystemParamsBuilder {
        SystemParamsBuilder {
            kappa1: self.kappa1,
            kappa_ex: self.kappa_ex,
            kappa2: self.kappa2,
            delta: self.delta,
            g1: self.g1,
            g2: self.g2,
            delta_a: self.delta_a,
            delta_in: self.delta_in,
            v_g: self.v_g,
        }
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParamsBuilder::default()
            .build()
            .expect("default parameters are valid")
    }
}

/// Builder for [`SystemParams`]. Defaults: critical coupling
/// (`κ_ex = κ₁ = 1`), lossless resonator 2, identical resonators, no qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParamsBuilder {
    pub kappa1: f64,
    pub kappa_ex: f64,
    pub kappa2: f64,
    pub delta: f64,
    pub g1: Complex64,
    pub g2: Complex64,
    pub delta_a: f64,
    pub delta_in: f64,
    pub v_g: f64,
}

impl Default for SystemParamsBuilder {
    fn default() -> Self {
        Self {
            kappa1: 1.0,
            kappa_ex: 1.0,
            kappa2: 0.0,
            delta: 0.0,
            g1: Complex64::new(0.0, 0.0),
            g2: Complex64::new(0.0, 0.0),
            delta_a: 0.0,
            delta_in: 0.0,
            v_g: 1.0,
        }
    }
}

impl SystemParamsBuilder {
    pub fn kappa1(mut self, v: f64) -> Self {
        self.kappa1 = v;
        self
    }
    pub fn kappa_ex(mut self, v: f64) -> Self {
        self.kappa_ex = v;
        self
    }
    pub fn kappa2(mut self, v: f64) -> Self {
        self.kappa2 = v;
        self
    }
    pub fn delta(mut self, v: f64) -> Self {
        self.delta = v;
        self
    }
    pub fn g1(mut self, v: Complex64) -> Self {
        self.g1 = v;
        self
    }
    pub fn g2(mut self, v: Complex64) -> Self {
        self.g2 = v;
        self
    }
    /// Sets `g1 = g2 = g` (real), the symmetric configuration.
    pub fn g(mut self, g: f64) -> Self {
        self.g1 = Complex64::new(g, 0.0);
        self.g2 = Complex64::new(g, 0.0);
        self
    }
    pub fn delta_a(mut self, v: f64) -> Self {
        self.delta_a = v;
        self
    }
    pub fn delta_in(mut self, v: f64) -> Self {
        self.delta_in = v;
        self
    }
    pub fn v_g(mut self, v: f64) -> Self {
        self.v_g = v;
        self
    }

    pub fn build(self) -> Result<SystemParams> {
        let finite = [
            ("kappa1", self.kappa1),
            ("kappa_ex", self.kappa_ex),
            ("kappa2", self.kappa2),
            ("delta", self.delta),
            ("delta_a", self.delta_a),
            ("delta_in", self.delta_in),
            ("v_g", self.v_g),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, format!("must be finite, got {v}")));
            }
        }
        if !(self.g1.re.is_finite() && self.g1.im.is_finite()) {
            return Err(invalid("g1", "must be finite"));
        }
        if !(self.g2.re.is_finite() && self.g2.im.is_finite()) {
            return Err(invalid("g2", "must be finite"));
        }
        for (field, v) in [
            ("kappa1", self.kappa1),
            ("kappa_ex", self.kappa_ex),
            ("kappa2", self.kappa2),
        ] {
            if v < 0.0 {
                return Err(invalid(field, format!("must be >= 0, got {v}")));
            }
        }
        if self.v_g <= 0.0 {
            return Err(invalid("v_g", format!("must be > 0, got {}", self.v_g)));
        }
        let g_max = self.g1.norm().max(self.g2.norm());
        if self.delta_a.abs() < DISPERSIVE_RATIO_MIN * g_max {
            return Err(invalid(
                "delta_a",
                format!(
                    "|delta_a| = {} is below the dispersive bound {} x max|g| = {}",
                    self.delta_a.abs(),
                    DISPERSIVE_RATIO_MIN,
                    DISPERSIVE_RATIO_MIN * g_max
                ),
            ));
        }
        Ok(SystemParams {
            kappa1: self.kappa1,
            kappa_ex: self.kappa_ex,
            kappa2: self.kappa2,
            delta: self.delta,
            g1: self.g1,
            g2: self.g2,
            delta_a: self.delta_a,
            delta_in: self.delta_in,
            v_g: self.v_g,
        })
    }
}

/// Cross-coupling between the resonator modes after eliminating the qubit:
/// `h_e = −½ (1/Δ_a + 1/(Δ_a − δ)) g1 g2*`.
///
/// For `g1 = g2 = g` and `δ = 0` this is `−|g|²/Δ_a`.
pub fn effective_coupling(
    g1: Complex64,
    g2: Complex64,
    delta_a: f64,
    delta: f64,
) -> Result<Complex64> {
    if delta_a == 0.0 {
        return Err(SimError::ResonantRegime("delta_a = 0".into()));
    }
    if delta_a - delta == 0.0 {
        return Err(SimError::ResonantRegime("delta_a = delta".into()));
    }
    let factor = -0.5 * (1.0 / delta_a + 1.0 / (delta_a - delta));
    Ok(g1 * g2.conj() * factor)
}

/// AC Stark shift of a resonator mode, `−|g|²/Δ_a`.
pub fn stark_shift(g: Complex64, delta_a: f64) -> Result<f64> {
    if delta_a == 0.0 {
        return Err(SimError::ResonantRegime("delta_a = 0".into()));
    }
    Ok(-g.norm_sqr() / delta_a)
}

/// Frequency shift from a dispersively coupled tuning SQUID, `−|g_s|²/Δ_s`.
pub fn squid_shift(g_s: Complex64, delta_s: f64) -> Result<f64> {
    if delta_s == 0.0 {
        return Err(SimError::ResonantRegime("delta_s = 0".into()));
    }
    Ok(-g_s.norm_sqr() / delta_s)
}

/// One constant-level interval of a [`CouplingSchedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub level: f64,
}

/// Piecewise-constant effective coupling `h_e(t)` with raised-cosine ramps
/// centred on every interior segment edge.
///
/// Before the first segment the first level applies, after the last segment
/// the last level applies, and gaps between segments are off (`h_e = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSchedule {
    segments: Vec<Segment>,
    ramp_time: f64,
}

impl CouplingSchedule {
    pub fn new(segments: Vec<Segment>, ramp_time: f64) -> Result<Self> {
        if !(ramp_time >= 0.0 && ramp_time.is_finite()) {
            return Err(invalid(
                "ramp_time",
                format!("must be >= 0, got {ramp_time}"),
            ));
        }
        if segments.is_empty() {
            return Err(invalid("segments", "at least one segment is required"));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite() && s.level.is_finite()) {
                return Err(invalid("segments", format!("segment {i} is not finite")));
            }
            if s.start >= s.end {
                return Err(invalid(
                    "segments",
                    format!("segment {i}: start {} must precede end {}", s.start, s.end),
                ));
            }
        }
        for (i, w) in segments.windows(2).enumerate() {
            if w[0].end > w[1].start {
                return Err(invalid(
                    "segments",
                    format!("segments {i} and {} overlap or are out of order", i + 1),
                ));
            }
        }
        Ok(Self {
            segments,
            ramp_time,
        })
    }

    /// A schedule holding one level for all time.
    pub fn constant(level: f64) -> Self {
        Self {
            segments: vec![Segment {
                start: 0.0,
                end: 1.0,
                level,
            }],
            ramp_time: DEFAULT_RAMP_TIME,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn ramp_time(&self) -> f64 {
        self.ramp_time
    }

    /// Largest `|h_e|` reached anywhere.
    pub fn max_abs_level(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.level.abs())
            .fold(0.0, f64::max)
    }

    /// Evaluates `h_e(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.segments.len();
        self.segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let rise = if i == 0 { 1.0 } else { self.edge(t - s.start) };
                let fall = if i + 1 == n {
                    0.0
                } else {
                    self.edge(t - s.end)
                };
                s.level * rise * (1.0 - fall)
            })
            .sum()
    }

    /// Smoothed unit step centred at zero.
    fn edge(&self, dt: f64) -> f64 {
        if self.ramp_time == 0.0 {
            return if dt >= 0.0 { 1.0 } else { 0.0 };
        }
        let u = dt / self.ramp_time + 0.5;
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * u).cos())
        }
    }

    /// The first interval on which the coupling is exactly zero between two
    /// on-segments: `(start, end)` of the flat part of the gap.
    pub fn hold_window(&self) -> Option<(f64, f64)> {
        self.segments.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            let start = a.end + 0.5 * self.ramp_time;
            let end = b.start - 0.5 * self.ramp_time;
            (a.level != 0.0 && b.level != 0.0 && end > start).then_some((start, end))
        })
    }
}

/// Free-function form of [`CouplingSchedule::eval`].
pub fn schedule_eval(schedule: &CouplingSchedule, t: f64) -> f64 {
    schedule.eval(t)
}

//! Closed three-level check of the qubit elimination.
//!
//! The single-excitation sector `{|1,0;g⟩, |0,1;g⟩, |0,0;e⟩}` is propagated
//! exactly and compared with the two-mode effective model obtained by
//! eliminating the qubit. There is no waveguide, no drive and no decay here.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, Dim, Matrix, Matrix2, Matrix3, RawStorage};
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::model::{effective_coupling, stark_shift, SystemParams};

/// Amplitudes `(c₁, c₂, c_e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullModelState {
    pub c1: Complex64,
    pub c2: Complex64,
    pub ce: Complex64,
}

impl FullModelState {
    pub fn photon_in_first() -> Self {
        Self {
            c1: Complex64::new(1.0, 0.0),
            c2: Complex64::new(0.0, 0.0),
            ce: Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr() + self.ce.norm_sqr()
    }

    fn to_vector(self) -> [Complex64; 3] {
        [self.c1, self.c2, self.ce]
    }

    fn from_vector(v: Vec<Complex64>) -> Self {
        Self {
            c1: v[0],
            c2: v[1],
            ce: v[2],
        }
    }
}

pub fn build_full_hamiltonian(params: &SystemParams) -> Matrix3<Complex64> {
    let c = |x: f64| Complex64::new(x, 0.0);
    let zero = c(0.0);
    let (g1, g2) = (params.g1(), params.g2());
    let din = params.delta_in();
    Matrix3::new(
        c(din),
        zero,
        g1.conj(),
        zero,
        c(din + params.delta()),
        g2.conj(),
        g1,
        g2,
        c(params.delta_a() + din),
    )
}

/// Stark-shifted diagonal and cross coupling `h_e` in row 2, column 1.
pub fn build_effective_hamiltonian(params: &SystemParams) -> Result<Matrix2<Complex64>> {
    let (g1, g2) = (params.g1(), params.g2());
    let (da, delta) = (params.delta_a(), params.delta());
    let h = effective_coupling(g1, g2, da, delta)?;
    let s1 = stark_shift(g1, da)?;
    let s2 = stark_shift(g2, da - delta)?;
    let din = params.delta_in();
    Ok(Matrix2::new(
        Complex64::new(din + s1, 0.0),
        h.conj(),
        h,
        Complex64::new(din + delta + s2, 0.0),
    ))
}

/// `e^{−iHt}` for a Hermitian matrix, from its eigendecomposition.
pub struct Propagator {
    vectors: DMatrix<Complex64>,
    values: DVector<f64>,
}

impl Propagator {
    pub fn new<R: Dim, C: Dim, S: RawStorage<Complex64, R, C>>(
        h: &Matrix<Complex64, R, C, S>,
    ) -> Self {
        let h = DMatrix::from_iterator(h.nrows(), h.ncols(), h.iter().copied());
        let eig = h.symmetric_eigen();
        Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        }
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn apply(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        self.trajectory(psi).at(t)
    }

    /// Precomputes the eigenbasis projection of `psi` for repeated evaluation.
    pub fn trajectory(&self, psi: &[Complex64]) -> Trajectory<'_> {
        let coeff = self.vectors.adjoint() * DVector::from_column_slice(psi);
        Trajectory {
            prop: self,
            coeff: coeff.iter().copied().collect(),
        }
    }

    /// Largest transition frequency.
    pub fn bandwidth(&self) -> f64 {
        self.values.max() - self.values.min()
    }
}

pub struct Trajectory<'a> {
    prop: &'a Propagator,
    coeff: Vec<Complex64>,
}

impl Trajectory<'_> {
    pub fn at(&self, t: f64) -> Vec<Complex64> {
        let v = &self.prop.vectors;
        let mut out = vec![Complex64::new(0.0, 0.0); v.nrows()];
        for (j, (&c, &lam)) in self.coeff.iter().zip(self.prop.values.iter()).enumerate() {
            let cj = c * Complex64::from_polar(1.0, -lam * t);
            for (i, o) in out.iter_mut().enumerate() {
                *o += v[(i, j)] * cj;
            }
        }
        out
    }
}

pub fn evolve_full(state: FullModelState, h: &Matrix3<Complex64>, t: f64) -> FullModelState {
    FullModelState::from_vector(Propagator::new(h).apply(&state.to_vector(), t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSample {
    pub t: f64,
    pub p1_full: f64,
    pub p2_full: f64,
    pub pe_full: f64,
    pub p1_eff: f64,
    pub p2_eff: f64,
    /// `min_θ ‖(c₁,c₂)_full − e^{iθ}(c₁,c₂)_eff‖`.
    pub amplitude_error: f64,
}

/// Population period of the effective model, `π/|h_e|`.
pub fn effective_period(params: &SystemParams) -> Result<f64> {
    let h = params.effective_coupling()?.norm();
    if h == 0.0 {
        return Err(SimError::Contract(
            "no exchange without effective coupling".into(),
        ));
    }
    Ok(std::f64::consts::PI / h)
}

fn sample_spacing(full: &Propagator, t_max: f64, min_samples: usize) -> usize {
    // resolve the fastest oscillation with at least 16 points per cycle
    let per_cycle = (t_max * full.bandwidth() * 16.0 / std::f64::consts::TAU).ceil() as usize;
    per_cycle.max(min_samples)
}

/// Both models started with the photon in resonator 1, sampled at `n + 1`
/// evenly spaced times on `[0, t_max]`.
pub fn compare_trajectories(
    params: &SystemParams,
    t_max: f64,
    n: usize,
) -> Result<Vec<ComparisonSample>> {
    if !(t_max >= 0.0 && t_max.is_finite()) || n == 0 {
        return Err(SimError::Contract(
            "need t_max ≥ 0 and at least one interval".into(),
        ));
    }
    let full = Propagator::new(&build_full_hamiltonian(params));
    let eff = Propagator::new(&build_effective_hamiltonian(params)?);
    let full_path = full.trajectory(&FullModelState::photon_in_first().to_vector());
    let eff_path = eff.trajectory(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    Ok((0..=n)
        .map(|k| {
            let t = t_max * k as f64 / n as f64;
            let a = full_path.at(t);
            let b = eff_path.at(t);
            let overlap = (b[0].conj() * a[0] + b[1].conj() * a[1]).norm();
            let na = a[0].norm_sqr() + a[1].norm_sqr();
            let nb = b[0].norm_sqr() + b[1].norm_sqr();
            ComparisonSample {
                t,
                p1_full: a[0].norm_sqr(),
                p2_full: a[1].norm_sqr(),
                pe_full: a[2].norm_sqr(),
                p1_eff: b[0].norm_sqr(),
                p2_eff: b[1].norm_sqr(),
                amplitude_error: (na + nb - 2.0 * overlap).max(0.0).sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EliminationError {
    /// Largest phase-aligned amplitude mismatch of the resonator pair.
    pub amplitude: f64,
    /// Largest qubit population.
    pub max_excited: f64,
}

pub fn elimination_error(params: &SystemParams, t_max: f64) -> Result<EliminationError> {
    let full = Propagator::new(&build_full_hamiltonian(params));
    let n = sample_spacing(&full, t_max, 2000);
    let samples = compare_trajectories(params, t_max, n)?;
    Ok(EliminationError {
        amplitude: samples
            .iter()
            .map(|s| s.amplitude_error)
            .fold(0.0, f64::max),
        max_excited: samples.iter().map(|s| s.pe_full).fold(0.0, f64::max),
    })
}

/// Period of `|c₂(t)|²` in the full model, from the first two maxima,
/// each refined by a parabola through the neighbouring samples.
pub fn full_period(params: &SystemParams) -> Result<f64> {
    let guess = effective_period(params)?;
    let full = Propagator::new(&build_full_hamiltonian(params));
    let t_max = 2.6 * guess;
    let n = sample_spacing(&full, t_max, 20_000);
    let path = full.trajectory(&FullModelState::photon_in_first().to_vector());
    let dt = t_max / n as f64;
    let p: Vec<f64> = (0..=n)
        .map(|k| path.at(k as f64 * dt)[1].norm_sqr())
        .collect();

    // the fast qubit ripple makes local maxima everywhere; take the largest
    // sample in each half of the window around the expected peak times
    let peak_near = |centre: f64| -> f64 {
        let lo = ((centre - 0.25 * guess) / dt).max(1.0) as usize;
        let hi = (((centre + 0.25 * guess) / dt) as usize).min(n - 1);
        let k = (lo..=hi)
            .max_by(|&a, &b| p[a].total_cmp(&p[b]))
            .expect("non-empty window");
        let (y0, y1, y2) = (p[k - 1], p[k], p[k + 1]);
        let den = y0 - 2.0 * y1 + y2;
        let shift = if den != 0.0 {
            0.5 * (y0 - y2) / den
        } else {
            0.0
        };
        (k as f64 + shift) * dt
    };
    Ok(peak_near(1.5 * guess) - peak_near(0.5 * guess))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub ratio: f64,
    pub amplitude: f64,
    pub max_excited: f64,
    pub period_full: f64,
    pub period_eff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of the amplitude mismatch against `g/Δ_a`.
    pub amplitude_slope: f64,
    /// Log-log slope of the peak qubit population against `g/Δ_a`.
    pub excited_slope: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Symmetric resonators (`g₁ = g₂ = g`, `δ = 0`), one effective period per ratio.
pub fn scaling_study(base: &SystemParams, g: f64, ratios: &[f64]) -> Result<ScalingReport> {
    let rows = ratios
        .iter()
        .map(|&ratio| {
            let p = base
                .to_builder()
                .g(g)
                .delta(0.0)
                .delta_a(ratio * g)
                .build()?;
            let period_eff = effective_period(&p)?;
            let err = elimination_error(&p, period_eff)?;
            Ok(ScalingRow {
                ratio,
                amplitude: err.amplitude,
                max_excited: err.max_excited,
                period_full: full_period(&p)?,
                period_eff,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| 1.0 / r.ratio).collect();
    let amp: Vec<f64> = rows.iter().map(|r| r.amplitude).collect();
    let exc: Vec<f64> = rows.iter().map(|r| r.max_excited).collect();
    Ok(ScalingReport {
        amplitude_slope: loglog_slope(&x, &amp),
        excited_slope: loglog_slope(&x, &exc),
        rows,
    })
}

/// Resonator detuning `δ` at which the Stark-shifted effective diagonals
/// coincide, found by bisection on `[lo, hi]`.
pub fn effective_resonance(base: &SystemParams, lo: f64, hi: f64) -> Result<f64> {
    let gap = |delta: f64| -> Result<f64> {
        let p = base.to_builder().delta(delta).build()?;
        let h = build_effective_hamiltonian(&p)?;
        Ok(h[(1, 1)].re - h[(0, 0)].re)
    };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (gap(a)?, gap(b)?);
    if fa * fb > 0.0 {
        return Err(SimError::Contract("resonance not bracketed".into()));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = gap(m)?;
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Largest `|c₂|²` reached within `t_max` in the full model.
pub fn max_transfer_full(params: &SystemParams, t_max: f64) -> f64 {
    let full = Propagator::new(&build_full_hamiltonian(params));
    let n = sample_spacing(&full, t_max, 4000);
    let path = full.trajectory(&FullModelState::photon_in_first().to_vector());
    (0..=n)
        .map(|k| path.at(t_max * k as f64 / n as f64)[1].norm_sqr())
        .fold(0.0, f64::max)
}

/// Detuning in `detunings` with the largest full-model transfer within one
/// effective period.
pub fn transfer_argmax(base: &SystemParams, detunings: &[f64]) -> Result<f64> {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for &d in detunings {
        let p = base.to_builder().delta(d).build()?;
        let v = max_transfer_full(&p, 1.5 * effective_period(&p)?);
        if v > best.1 {
            best = (d, v);
        }
    }
    Ok(best.0)
}

pub fn write_comparison_csv<W: Write>(out: &mut W, samples: &[ComparisonSample]) -> io::Result<()> {
    writeln!(out, "t,p1_full,p2_full,pe_full,p1_eff,p2_eff")?;
    for s in samples {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            s.t, s.p1_full, s.p2_full, s.pe_full, s.p1_eff, s.p2_eff
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, ratio: f64) -> SystemParams {
        SystemParams::builder()
            .g(g)
            .delta_a(ratio * g)
            .build()
            .unwrap()
    }

    #[test]
    fn full_hamiltonian_is_hermitian() {
        let p = SystemParams::builder()
            .g1(Complex64::new(0.3, 0.2))
            .g2(Complex64::new(-0.1, 0.4))
            .delta_a(5.0)
            .delta(0.3)
            .delta_in(0.2)
            .build()
            .unwrap();
        let h = build_full_hamiltonian(&p);
        assert_eq!(h, h.adjoint());
        assert_eq!(h[(2, 0)], p.g1());
        assert_eq!(h[(0, 2)], p.g1().conj());
        let eff = build_effective_hamiltonian(&p).unwrap();
        assert_eq!(eff, eff.adjoint());
    }

    #[test]
    fn uncoupled_hamiltonian_is_diagonal() {
        let p = SystemParams::builder()
            .delta_a(3.0)
            .delta(0.5)
            .build()
            .unwrap();
        let h = build_full_hamiltonian(&p);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(h[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn effective_symmetric_reduction() {
        let p = params(0.5, 12.0);
        let h = build_effective_hamiltonian(&p).unwrap();
        let s = -0.25 / 6.0;
        assert!((h[(0, 0)].re - s).abs() < 1e-15);
        assert!((h[(1, 1)].re - s).abs() < 1e-15);
        assert!((h[(1, 0)].re - s).abs() < 1e-15);
    }

    #[test]
    fn single_coupling_has_no_cross_term() {
        let p = SystemParams::builder()
            .g1(Complex64::new(0.5, 0.0))
            .delta_a(10.0)
            .build()
            .unwrap();
        let h = build_effective_hamiltonian(&p).unwrap();
        assert_eq!(h[(1, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(h[(1, 1)].re, 0.0);
        assert!((h[(0, 0)].re + 0.025).abs() < 1e-15);
    }

    #[test]
    fn evolution_is_unitary_and_starts_at_identity() {
        let h = build_full_hamiltonian(&params(1.0, 7.0));
        let s0 = FullModelState::photon_in_first();
        let s = evolve_full(s0, &h, 0.0);
        assert!((s.c1 - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for t in [0.3, 17.0, 250.0] {
            assert!((evolve_full(s0, &h, t).norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishing_coupling_gives_no_discrepancy() {
        let p = SystemParams::builder()
            .g(1e-6)
            .delta_a(1.0)
            .build()
            .unwrap();
        let e = elimination_error(&p, 10.0).unwrap();
        assert!(e.amplitude < 1e-10);
        assert!(e.max_excited < 1e-11);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.2, 0.4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_csv_layout() {
        let s = compare_trajectories(&params(1.0, 10.0), 1.0, 4).unwrap();
        let mut buf = Vec::new();
        write_comparison_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,p1_full,p2_full,pe_full,p1_eff,p2_eff\n"));
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(1).unwrap().starts_with("0e0,1e0,"));
    }
}

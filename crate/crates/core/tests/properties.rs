use eit_core::oracle::build_effective_hamiltonian;
use eit_core::side::step_side;
use eit_core::steady::{side_coupled_amplitudes, steady_amplitude};
use eit_core::wavegrid::{centroid, fourier_amplitudes, free_propagate, gaussian_pulse};
use eit_core::{CouplingSchedule, Grid1D, Segment, SystemParams, WaveState};
use num_complex::Complex64;
use proptest::prelude::*;

fn lossy_params() -> impl Strategy<Value = (SystemParams, f64, f64)> {
    (
        0.0..3.0f64,
        0.0..3.0f64,
        0.0..2.0f64,
        -2.0..2.0f64,
        -3.0..3.0f64,
        -10.0..10.0f64,
    )
        .prop_filter("needs some loss on resonator 1", |(k1, kex, ..)| {
            k1 + kex > 1e-3
        })
        .prop_map(|(k1, kex, k2, delta, h, d)| {
            let p = SystemParams::builder()
                .kappa1(k1)
                .kappa_ex(kex)
                .kappa2(k2)
                .delta(delta)
                .build()
                .unwrap();
            (p, h, d)
        })
}

fn field(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn steady_response_is_passive((p, h, d) in lossy_params()) {
        let t = steady_amplitude(&p, h, d).unwrap();
        prop_assert!(t.norm_sqr() <= 1.0 + 1e-12);
        let (tt, r) = side_coupled_amplitudes(&p, h, d).unwrap();
        prop_assert!(tt.norm_sqr() + r.norm_sqr() <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn detuned_resonators_mirror_the_spectrum((p, h, d) in lossy_params()) {
        let p = p.to_builder().delta(0.0).build().unwrap();
        let a = steady_amplitude(&p, h, d).unwrap();
        let b = steady_amplitude(&p, h, -d).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn lossless_pair_reflects_everything(h in -3.0..3.0f64, d in -10.0..10.0f64, delta in -2.0..2.0f64) {
        let p = SystemParams::builder().kappa1(0.0).delta(delta).build().unwrap();
        if let Ok(t) = steady_amplitude(&p, h, d) {
            prop_assert!((t.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_identity(f in field(96), dx in 0.1..3.0f64) {
        let g = Grid1D::new(96, dx, 1.0, 50).unwrap();
        let amps = fourier_amplitudes(&f, &g);
        let dk = amps[1].0 - amps[0].0;
        let spectral = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>() * dk / std::f64::consts::TAU;
        let spatial = f.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        prop_assert!((spectral - spatial).abs() <= 1e-10 * spatial.max(1e-300));
    }

    #[test]
    fn centroid_lies_inside_window(f in field(64), a in 0usize..32, len in 1usize..32) {
        let g = Grid1D::new(64, 1.0, 1.0, 40).unwrap();
        let w = a..a + len;
        if let Ok(c) = centroid(&f, &g, w.clone()) {
            prop_assert!(c >= g.x(w.start) - 1e-12 && c <= g.x(w.end - 1) + 1e-12);
        }
    }

    #[test]
    fn uncoupled_shift_is_reversible(f in field(80), steps in 1usize..30) {
        // zero the cells that would fall off so the round trip is lossless
        let mut f = f;
        for z in &mut f[80 - steps..] {
            *z = Complex64::new(0.0, 0.0);
        }
        let p = SystemParams::builder().kappa_ex(0.0).build().unwrap();
        let g = Grid1D::new(80, 1.0, 1.0, 40).unwrap();
        let mut s = WaveState::vacuum(&g, true);
        s.phi_r = Some(f.iter().rev().copied().collect());
        s.phi_t = f.clone();
        for _ in 0..steps {
            step_side(&mut s, &p, &g, 0.3).unwrap();
        }
        prop_assert_eq!(&s.phi_t, &free_propagate(&f, steps));
        // running the left-mover forward undoes the right shift exactly
        let mut back = WaveState::vacuum(&g, true);
        back.phi_r = Some(s.phi_t.clone());
        for _ in 0..steps {
            step_side(&mut back, &p, &g, 0.0).unwrap();
        }
        prop_assert_eq!(back.phi_r.unwrap(), f);
    }

    #[test]
    fn pulses_are_reproducible(center in 300.0..600.0f64, tau in 10.0..60.0f64, k in -0.5..0.5f64) {
        let g = Grid1D::new(1024, 1.0, 2.0, 900).unwrap();
        let a = gaussian_pulse(&g, center, tau, k).unwrap();
        let b = gaussian_pulse(&g, center, tau, k).unwrap();
        prop_assert_eq!(a.phi_t, b.phi_t);
    }

    #[test]
    fn effective_hamiltonian_is_hermitian(
        g1 in -1.0..1.0f64, g2 in -1.0..1.0f64, ratio in 5.0..50.0f64, frac in -0.5..0.5f64,
    ) {
        let da = ratio * g1.abs().max(g2.abs()).max(1e-3);
        let p = SystemParams::builder()
            .g1(Complex64::new(g1, 0.0))
            .g2(Complex64::new(g2, 0.0))
            .delta_a(da)
            .delta(frac * da)
            .build()
            .unwrap();
        let h = build_effective_hamiltonian(&p).unwrap();
        prop_assert_eq!(h, h.adjoint());
    }

    #[test]
    fn schedule_stays_within_its_levels(
        levels in prop::collection::vec(-3.0..3.0f64, 1..5), t in -20.0..60.0f64,
    ) {
        let segs: Vec<Segment> = levels
            .iter()
            .enumerate()
            .map(|(i, &l)| Segment { start: 10.0 * i as f64, end: 10.0 * i as f64 + 6.0, level: l })
            .collect();
        let s = CouplingSchedule::new(segs, 1.0).unwrap();
        let v = s.eval(t);
        let lo = levels.iter().cloned().fold(0.0f64, f64::min);
        let hi = levels.iter().cloned().fold(0.0f64, f64::max);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }
}

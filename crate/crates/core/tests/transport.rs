use eit_core::end::{
    passive_output, run_storage, step_end, storage_schedule, EndCouplingRun, PhaseProfile,
};
use eit_core::side::{run_slowing, step_side, SideCouplingRun};
use eit_core::steady::{side_coupled_amplitudes, steady_amplitude};
use eit_core::wavegrid::{gaussian_pulse, total_norm, transfer_estimate, window_norm};
use eit_core::{CouplingSchedule, Grid1D, Segment, SystemParams, WaveState};
use num_complex::Complex64;

fn side_transfer_errors(params: SystemParams, h: f64) -> (f64, f64) {
    let grid = Grid1D::new(8192, 1.0, params.v_g(), 3500).unwrap();
    let pulse = gaussian_pulse(&grid, 3350.0, 20.0, 0.0).unwrap();
    let mut run = SideCouplingRun::new(params, grid, CouplingSchedule::constant(h), pulse.clone());
    run.t_end = Some(3000.0 * grid.dt());
    let report = run_slowing(&run).unwrap();
    let out = &report.final_state;
    let x0 = grid.x_resonator();

    let mut through = vec![Complex64::new(0.0, 0.0); grid.n_cells()];
    through[x0 + 1..].copy_from_slice(&out.phi_t[x0 + 1..]);
    let mut worst_t: f64 = 0.0;
    for s in transfer_estimate(
        &pulse.phi_t,
        &through,
        &grid,
        report.steps,
        params.delta_in_prime(),
        0.25,
    ) {
        let (t, _) = side_coupled_amplitudes(&params, h, s.detuning).unwrap();
        worst_t = worst_t.max((s.ratio - t).norm() / t.norm());
    }

    // the reflected mode runs leftwards: mirror it about x₀ so it becomes a
    // right-moving field that left the site at the same times
    let r = out.phi_r.as_ref().unwrap();
    let mut mirrored = vec![Complex64::new(0.0, 0.0); grid.n_cells()];
    for i in 0..x0 {
        let j = 2 * x0 - i;
        if j < grid.n_cells() {
            mirrored[j] = r[i];
        }
    }
    let mut worst_r: f64 = 0.0;
    for s in transfer_estimate(
        &pulse.phi_t,
        &mirrored,
        &grid,
        report.steps,
        params.delta_in_prime(),
        0.25,
    ) {
        let (_, rr) = side_coupled_amplitudes(&params, h, s.detuning).unwrap();
        worst_r = worst_r.max((s.ratio - rr).norm());
    }
    (worst_t, worst_r)
}

#[test]
fn side_transfer_matches_side_coupled_amplitudes() {
    let params = SystemParams::builder().v_g(20.0).build().unwrap();
    for h in [0.0, 0.5, 1.5] {
        let (t_err, r_err) = side_transfer_errors(params, h);
        println!("h = {h}: through {t_err:.2e}, back {r_err:.2e}");
        assert!(t_err < 0.02, "h = {h}: through-amplitude error {t_err}");
        assert!(r_err < 0.02, "h = {h}: reflection error {r_err}");
    }
}

#[test]
fn side_transfer_error_is_second_order_in_the_step() {
    let coarse = side_transfer_errors(SystemParams::builder().v_g(5.0).build().unwrap(), 0.5).0;
    let fine = side_transfer_errors(SystemParams::builder().v_g(10.0).build().unwrap(), 0.5).0;
    let order = (coarse / fine).log2();
    println!("coarse {coarse:.3e} fine {fine:.3e} order {order:.2}");
    assert!((1.6..2.4).contains(&order), "order {order}");
}

fn end_transfer_error(params: SystemParams, h: f64) -> f64 {
    let grid = Grid1D::new(4096, 1.0, params.v_g(), 300).unwrap();
    let pulse = gaussian_pulse(&grid, 150.0, 20.0, 0.0).unwrap();
    let prof = PhaseProfile::new(&grid, std::f64::consts::PI, 0.5).unwrap();
    let mut s = pulse.clone();
    let steps = 3000;
    for _ in 0..steps {
        step_end(&mut s, &params, &grid, h, &prof).unwrap();
    }
    let mut worst: f64 = 0.0;
    for smp in transfer_estimate(
        &pulse.phi_t,
        &s.phi_t,
        &grid,
        steps,
        params.delta_in_prime(),
        0.25,
    ) {
        let t = steady_amplitude(&params, h, smp.detuning).unwrap();
        worst = worst.max((smp.ratio - t).norm() / t.norm());
    }
    worst
}

#[test]
fn end_transfer_matches_steady_amplitude() {
    // intrinsic loss keeps |t| away from zero so the relative error is defined
    let params = SystemParams::builder()
        .kappa1(0.5)
        .v_g(20.0)
        .build()
        .unwrap();
    for h in [0.0, 0.5, 1.5] {
        let err = end_transfer_error(params, h);
        println!("h = {h}: {err:.2e}");
        assert!(err < 0.02, "h = {h}: {err}");
    }
}

#[test]
fn lossless_evolution_conserves_norm_with_time_varying_coupling() {
    let params = SystemParams::builder()
        .kappa1(0.0)
        .v_g(2.0)
        .build()
        .unwrap();
    let grid = Grid1D::new(24000, 1.0, 2.0, 400).unwrap();
    let sched = CouplingSchedule::new(
        vec![
            Segment {
                start: 0.0,
                end: 60.0,
                level: 1.2,
            },
            Segment {
                start: 100.0,
                end: 5000.0,
                level: 0.4,
            },
        ],
        5.0,
    )
    .unwrap();
    let pulse = gaussian_pulse(&grid, 200.0, 40.0, 0.0).unwrap();

    let mut side = pulse.clone().with_reflected_mode();
    let mut end = pulse;
    let prof = PhaseProfile::new(&grid, 1.0, 0.5).unwrap();
    let mut boundary_side = 0.0;
    let mut boundary_end = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let h = sched.eval((k as f64 + 0.5) * grid.dt());
        boundary_side += step_side(&mut side, &params, &grid, h).unwrap().boundary;
        boundary_end += step_end(&mut end, &params, &grid, h, &prof)
            .unwrap()
            .boundary;
        worst = worst
            .max((total_norm(&side, &grid) + boundary_side - 1.0).abs())
            .max((total_norm(&end, &grid) + boundary_end - 1.0).abs());
    }
    println!("worst drift {worst:.2e}, left grid {boundary_side:.2e}");
    assert!(worst < 1e-6);
}

#[test]
fn side_norm_ledger_closes() {
    let params = SystemParams::builder()
        .kappa2(0.05)
        .v_g(4.0)
        .build()
        .unwrap();
    let grid = Grid1D::new(4096, 1.0, 4.0, 2100).unwrap();
    let pulse = gaussian_pulse(&grid, 1000.0, 200.0, 0.0).unwrap();
    let run = SideCouplingRun::new(params, grid, CouplingSchedule::constant(0.5), pulse);
    let r = run_slowing(&run).unwrap();
    let sum = r.retention + r.reflected + r.dissipated + r.boundary + r.residual;
    assert!((sum - 1.0).abs() < 1e-6, "{sum}");
    assert!(r.settled);
}

#[test]
fn side_pulse_shape_survives_zero_line_coupling() {
    let params = SystemParams::builder()
        .kappa_ex(0.0)
        .v_g(4.0)
        .build()
        .unwrap();
    let grid = Grid1D::new(4096, 1.0, 4.0, 2100).unwrap();
    let pulse = gaussian_pulse(&grid, 1000.0, 200.0, 0.0).unwrap();
    let run = SideCouplingRun::new(params, grid, CouplingSchedule::constant(0.3), pulse);
    let r = run_slowing(&run).unwrap();
    assert!(r.delay.abs() < 1e-9, "{}", r.delay);
    assert!((r.retention - 1.0).abs() < 1e-10);
}

fn delay(params: SystemParams, grid: Grid1D, tau: f64, center: f64, h: f64) -> (f64, f64) {
    let pulse = gaussian_pulse(&grid, center, tau, 0.0).unwrap();
    let run = SideCouplingRun::new(params, grid, CouplingSchedule::constant(h), pulse);
    let r = run_slowing(&run).unwrap();
    (r.delay, r.retention)
}

#[test]
fn strong_coupling_delay_is_small() {
    let params = SystemParams::builder().v_g(4.0).build().unwrap();
    let grid = Grid1D::new(4096, 1.0, 4.0, 2100).unwrap();
    let (slow, _) = delay(params, grid, 200.0, 1000.0, 0.25);
    let (fast, _) = delay(params, grid, 200.0, 1000.0, 1.0);
    println!("h=0.25: {slow}, h=1: {fast}");
    assert!(fast < 0.2 * slow);
}

#[test]
fn narrowband_side_delay_approaches_steady_state_phase_slope() {
    // delay of the through amplitude from a symmetric difference of its phase
    let params = SystemParams::builder().v_g(1.0).build().unwrap();
    let h = 0.5;
    let phase = |d: f64| side_coupled_amplitudes(&params, h, d).unwrap().0.arg();
    let eps = 1e-5;
    let expected = -(phase(eps) - phase(-eps)) / (2.0 * eps);
    assert!((expected - params.kappa_ex() / (h * h)).abs() < 1e-6);

    let grid = Grid1D::new(8192, 1.0, 1.0, 2600).unwrap();
    let (d, _) = delay(params, grid, 300.0, 1250.0, h);
    println!("narrowband delay {d}, steady-state {expected}");
    assert!((d / expected - 1.0).abs() < 0.15);
}

fn storage_run(params: SystemParams, hold: f64) -> EndCouplingRun {
    let grid = Grid1D::new(6144, 1.0, params.v_g(), 1200).unwrap();
    let tau = 100.0;
    let pulse = gaussian_pulse(&grid, 600.0, tau, 0.0).unwrap();
    let tt = tau / params.v_g();
    let arrival = 600.0 / params.v_g();
    let sched = storage_schedule(arrival, 4.0 * tt, hold, 2.0, 0.5).unwrap();
    EndCouplingRun::new(params, grid, sched, pulse)
}

#[test]
fn storage_ledger_and_separation() {
    let params = SystemParams::builder().v_g(200.0).build().unwrap();
    let r = run_storage(&storage_run(params, 3.5)).unwrap();
    println!(
        "reflected {:.4} stored {:.4} retrieved {:.4} residual {:.2e} dissipated {:.4} overlap {:.2e}",
        r.reflected_fraction, r.stored_norm, r.retrieved_fraction, r.residual, r.dissipated, r.overlap
    );
    assert!(r.ledger_error().abs() < 1e-6, "{}", r.ledger_error());
    assert!(r.retrieved_fraction > 0.05);
    assert!(r.overlap < 1e-3);
}

#[test]
fn lossless_hold_keeps_stored_excitation() {
    let params = SystemParams::builder().v_g(200.0).build().unwrap();
    let short = run_storage(&storage_run(params, 4.0)).unwrap();
    let long = run_storage(&storage_run(params, 8.0)).unwrap();
    assert!((short.retrieved_fraction - long.retrieved_fraction).abs() < 1e-6);
}

#[test]
fn lossy_hold_decays_exponentially() {
    let k2 = 0.02;
    let params = SystemParams::builder()
        .kappa2(k2)
        .v_g(200.0)
        .build()
        .unwrap();
    let holds = [3.5, 5.0, 7.0];
    let retrieved: Vec<f64> = holds
        .iter()
        .map(|&h| {
            run_storage(&storage_run(params, h))
                .unwrap()
                .retrieved_fraction
        })
        .collect();
    // least-squares slope of ln(retrieved) against hold time
    let n = holds.len() as f64;
    let mx = holds.iter().sum::<f64>() / n;
    let ly: Vec<f64> = retrieved.iter().map(|r| r.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let slope = holds
        .iter()
        .zip(&ly)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / holds.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    println!("fitted rate {slope}");
    assert!((slope + 2.0 * k2).abs() < 1e-4 * 2.0 * k2 + 1e-6);
}

#[test]
fn off_gap_keeps_resonator_two_constant() {
    let params = SystemParams::builder().v_g(200.0).build().unwrap();
    let run = storage_run(params, 3.5);
    let (a, b) = run.schedule.hold_window().unwrap();
    let r = run_storage(&run).unwrap();
    let hold: Vec<f64> = r
        .series
        .iter()
        .filter(|s| s.t > a + 0.01 && s.t < b - 0.01)
        .map(|s| s.e2_sq)
        .collect();
    assert!(hold.len() > 100);
    let first = hold[0];
    assert!(hold.iter().all(|v| ((v - first) / first).abs() < 1e-10));
}

#[test]
fn uncoupled_resonator_two_stays_empty() {
    let params = SystemParams::builder().v_g(20.0).build().unwrap();
    let grid = Grid1D::new(2048, 1.0, 20.0, 600).unwrap();
    let pulse = gaussian_pulse(&grid, 300.0, 40.0, 0.0).unwrap();
    let prof = PhaseProfile::new(&grid, std::f64::consts::PI, 0.5).unwrap();
    let mut s = pulse;
    let mut peak_e1: f64 = 0.0;
    for _ in 0..1000 {
        step_end(&mut s, &params, &grid, 0.0, &prof).unwrap();
        assert_eq!(s.e2, Complex64::new(0.0, 0.0));
        peak_e1 = peak_e1.max(s.e1.norm_sqr());
    }
    assert!(peak_e1 > 0.1);
}

#[test]
fn end_line_without_coupling_only_adds_phase() {
    let params = SystemParams::builder()
        .kappa_ex(0.0)
        .v_g(3.0)
        .build()
        .unwrap();
    let grid = Grid1D::new(1024, 1.0, 3.0, 500).unwrap();
    let pulse = gaussian_pulse(&grid, 200.0, 30.0, 0.02).unwrap();
    let prof = PhaseProfile::new(&grid, 0.8, 0.5).unwrap();
    let mut s = pulse.clone();
    for _ in 0..500 {
        step_end(&mut s, &params, &grid, 0.0, &prof).unwrap();
    }
    // cells still inside the switch region carry only part of the phase
    let want = passive_output(&pulse.phi_t, 500, 0.8);
    let err = s.phi_t[540..]
        .iter()
        .zip(&want[540..])
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-13, "{err}");
    assert!((window_norm(&s.phi_t, &grid, 501..1024) - 1.0).abs() < 1e-12);
}

#[test]
fn resonator_loss_drains_norm() {
    let params = SystemParams::builder().v_g(4.0).build().unwrap();
    let grid = Grid1D::new(2048, 1.0, 4.0, 900).unwrap();
    let mut s = gaussian_pulse(&grid, 450.0, 100.0, 0.0)
        .unwrap()
        .with_reflected_mode();
    for _ in 0..600 {
        step_side(&mut s, &params, &grid, 0.0).unwrap();
    }
    assert!(total_norm(&s, &grid) < 0.9);
    let _ = WaveState::vacuum(&grid, true);
}

use std::fs;
use std::path::{Path, PathBuf};

use eit_sim::{parse_config, run_scenario, Artifact, ExperimentConfig, Units};
use proptest::prelude::*;

fn corpus() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

fn load(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name);
    parse_config(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sample_configs_round_trip() {
    let files = corpus();
    assert!(files.len() >= 10, "only {} sample configs", files.len());
    for f in files {
        let cfg = parse_config(&fs::read_to_string(&f).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let text = cfg.to_toml();
        let again = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", f.display()));
        assert_eq!(again, cfg, "{}", f.display());
        assert_eq!(again.to_toml(), text);
    }
}

fn numbers(a: &Artifact) -> Vec<Vec<String>> {
    a.contents
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Same file set, same headers, all numeric cells within `tol` relative.
fn assert_close(a: &[Artifact], b: &[Artifact], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(
            x.contents.lines().next(),
            y.contents.lines().next(),
            "{}",
            x.name
        );
        let (rx, ry) = (numbers(x), numbers(y));
        assert_eq!(rx.len(), ry.len(), "{}", x.name);
        for (row_x, row_y) in rx.iter().zip(&ry) {
            for (cx, cy) in row_x.iter().zip(row_y) {
                match (cx.parse::<f64>(), cy.parse::<f64>()) {
                    (Ok(u), Ok(v)) if u.is_nan() => assert!(v.is_nan(), "{}: {cx} vs {cy}", x.name),
                    (Ok(u), Ok(v)) => {
                        let scale = u.abs().max(v.abs()).max(1.0);
                        assert!((u - v).abs() <= tol * scale, "{}: {cx} vs {cy}", x.name);
                    }
                    _ => assert_eq!(cx, cy),
                }
            }
        }
    }
}

fn renamed(mut artifacts: Vec<Artifact>, from: &str, to: &str) -> Vec<Artifact> {
    for a in &mut artifacts {
        a.name = a.name.replacen(from, to, 1);
    }
    artifacts
}

#[test]
fn si_and_kappa1_units_agree() {
    for (si, plain) in [
        ("spectrum_si.toml", "spectrum.toml"),
        ("store_si.toml", "store.toml"),
    ] {
        let a = load(si);
        let b = load(plain);
        assert_eq!(a.units, Units::Si);
        let ra = renamed(
            run_scenario(&a, false).unwrap(),
            &a.outputs.prefix,
            &b.outputs.prefix,
        );
        let rb = run_scenario(&b, false).unwrap();
        let names: Vec<_> = ra.iter().map(|x| x.name.clone()).collect();
        assert_eq!(names, rb.iter().map(|x| x.name.clone()).collect::<Vec<_>>());
        assert_close(&ra, &rb, 1e-10);
    }
}

#[test]
fn scenarios_are_deterministic() {
    for name in [
        "spectrum.toml",
        "delay_curve.toml",
        "oracle.toml",
        "store.toml",
        "slow_end.toml",
    ] {
        let cfg = load(name);
        let a = run_scenario(&cfg, true).unwrap();
        let b = run_scenario(&cfg, true).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let cfg = load("spectrum_window_scan.toml");
    std::env::set_var(eit_sim::scenario::THREADS_ENV, "1");
    let one = run_scenario(&cfg, false).unwrap();
    std::env::set_var(eit_sim::scenario::THREADS_ENV, "4");
    let four = run_scenario(&cfg, false).unwrap();
    std::env::remove_var(eit_sim::scenario::THREADS_ENV);
    assert_eq!(one, four);
}

#[test]
fn spectrum_rows_follow_config_order() {
    let cfg = load("spectrum_window_scan.toml");
    let out = run_scenario(&cfg, false).unwrap();
    let csv = &out[0];
    assert_eq!(csv.name, "window_scan.csv");
    let mut seen: Vec<String> = Vec::new();
    for row in numbers(csv) {
        if seen.last() != Some(&row[0]) {
            seen.push(row[0].clone());
        }
    }
    assert_eq!(seen, ["2.5e-1", "5e-1", "1e0"]);
}

#[test]
fn csv_cells_round_trip_exactly() {
    let cfg = load("delay_curve.toml");
    let out = run_scenario(&cfg, false).unwrap();
    let pts = eit_sim::scenario::delay_points(&cfg).unwrap();
    for (row, p) in numbers(&out[0]).iter().zip(&pts) {
        for (cell, v) in row.iter().zip(p) {
            assert_eq!(cell.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
    assert!(out[0].contents.ends_with('\n') && !out[0].contents.contains('\r'));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_spectrum_configs_round_trip(
        kex in 0.01..3.0f64, k2 in 0.0..1.0f64, delta in -1.0..1.0f64,
        couplings in prop::collection::vec(0.0..2.0f64, 1..5),
        lo in -5.0..-0.1f64, hi in 0.1..5.0f64, points in 2usize..50,
        si in any::<bool>(),
    ) {
        let mut cfg = ExperimentConfig::defaults(eit_sim::Scenario::Spectrum);
        cfg.params.kappa_ex = kex;
        cfg.params.kappa2 = k2;
        cfg.params.delta = delta;
        cfg.sweep = Some(eit_sim::config::SweepConfig { couplings, detuning_min: lo, detuning_max: hi, points });
        if si {
            cfg.units = Units::Si;
        }
        let text = cfg.to_toml();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(parse_config(&back.to_toml()).unwrap(), back);
    }
}

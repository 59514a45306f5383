use coevo::simulator::{compare, estimate_steady, Z_PASS};
use coevo::{evaluate, run_simulation, CoevoError, SimConfig, SocietyParams};

fn config(p: &SocietyParams, n_scale: u32, seed: u64) -> SimConfig {
    SimConfig {
        n_scale,
        replicates: 8,
        seed,
        ..SimConfig::for_params(p)
    }
}

fn within(name: &str, analytical: f64, mean: f64, stderr: f64) {
    let z = (mean - analytical) / stderr;
    assert!(z.abs() <= Z_PASS, "{name}: analytical {analytical}, empirical {mean} ± {stderr} (z = {z:.2})");
}

#[test]
fn standard_error_shrinks_with_society_size() {
    let p = SocietyParams::new(1.0, 1.0, 1.0, 0.3).unwrap();
    let (_, m) = evaluate(&p).unwrap();
    let small = estimate_steady(&run_simulation(&p, &config(&p, 2_000, 7)).unwrap()).unwrap();
    let large = estimate_steady(&run_simulation(&p, &config(&p, 20_000, 7)).unwrap()).unwrap();
    for (name, a, b) in [("q_bar", small.q_bar, large.q_bar), ("pop", small.pop, large.pop)] {
        let ratio = a.stderr / b.stderr;
        assert!((1.5..=7.0).contains(&ratio), "{name}: stderr ratio {ratio}");
    }
    within("q_bar", m.q_bar, large.q_bar.mean, large.q_bar.stderr);
    within("pop", m.pop, large.pop.mean, large.pop.stderr);
}

#[test]
fn lifetimes_split_by_quality() {
    let p = SocietyParams::new(1.0, 1.0, 1.0, 0.3).unwrap();
    let (ss, m) = evaluate(&p).unwrap();
    let est = estimate_steady(&run_simulation(&p, &config(&p, 5_000, 31)).unwrap()).unwrap();
    let (_, l2) = ss.decay_constants("lifetimes").unwrap();
    let t_bad = (1.0 - (-l2 * p.r).exp()) / p.lambda_d;
    within("t_good", 1.0 / p.lambda_d, est.t_good.mean, est.t_good.stderr);
    within("t_bad", t_bad, est.t_bad.mean, est.t_bad.stderr);
    assert!((m.t_bad - t_bad).abs() <= 1e-12);
}

#[test]
fn full_collectivism_has_no_boundary_deaths() {
    let p = SocietyParams::new(1.5, 1.0, 1.0, 1.0).unwrap();
    let res = run_simulation(&p, &config(&p, 5_000, 5)).unwrap();
    assert_eq!(res.total_counts().deaths_boundary, 0);
    let est = estimate_steady(&res).unwrap();
    within("pop", p.lambda_b / p.lambda_d, est.pop.mean, est.pop.stderr);
    assert_eq!(est.x_bar.mean, 0.0);
}

#[test]
fn boundary_to_natural_ratio_tracks_mean_quality() {
    let p = SocietyParams::new(2.0, 0.5, 0.7, 0.2).unwrap();
    let (_, m) = evaluate(&p).unwrap();
    // 16 replicates keep the replicate-based standard error itself stable
    let cfg = SimConfig { replicates: 16, ..config(&p, 5_000, 99) };
    let est = estimate_steady(&run_simulation(&p, &cfg).unwrap()).unwrap();
    let report = compare(&m, &est);
    let row = report.row("boundary_to_natural").unwrap();
    assert!(row.pass, "{row:?}");
    assert!(report.all_pass(), "{report:?}");
}

#[test]
fn estimates_need_replicates_and_events() {
    let p = SocietyParams::new(1.0, 1.0, 1.0, 0.3).unwrap();
    let single = SimConfig { replicates: 1, ..config(&p, 500, 1) };
    let err = estimate_steady(&run_simulation(&p, &single).unwrap()).unwrap_err();
    assert!(matches!(err, CoevoError::InsufficientData(_)), "{err:?}");

    let tiny = SimConfig { n_scale: 1, t_end: 2.0, burn_in: 1.0, ..config(&p, 1, 1) };
    let err = estimate_steady(&run_simulation(&p, &tiny).unwrap()).unwrap_err();
    assert!(matches!(err, CoevoError::InsufficientData(_)), "{err:?}");
}

//! Acceptance criteria, one test each. Every test writes a single
//! `PASS`/`FAIL` line (bypassing output capture) before asserting.

mod common;

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use coevo::metrics::{conditional_mean_welfare, death_rate_decomposition, evaluate, variance};
use coevo::simulator::{compare, compare_density, estimate_steady, run_simulation, SimConfig};
use coevo::steady_state::{solve_mean_quality, steady_state, DEFAULT_TOL, LIFETIME_TURNING_QUALITY};
use coevo::validation::{check_claim, run_default_suite, Claim, Expectation, Verdict, DEFAULT_EPSILON};
use coevo::{Quality, SocietyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn verdict_line(id: u32, title: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] {status} criterion {id}: {title} | {detail}");
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn criterion_1_fixed_point_unique_and_accurate() {
    let start = Instant::now();
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let step = 1e-4;
    let mut worst_residual: f64 = 0.0;
    let mut bad_counts = Vec::new();
    let mut points = 0;
    for &ld in &grid {
        for &r in &grid {
            for w in linspace(0.0, 0.95, 21) {
                let p = SocietyParams::new(1.0, ld, r, w).unwrap();
                let q = solve_mean_quality(&p, DEFAULT_TOL).unwrap();
                worst_residual = worst_residual.max(residual_oracle(&p, q).abs());
                let hi = if w == 0.0 { 1.0 } else { ((1.0 - w) / w).min(1.0) };
                let n = sign_changes(&p, -1.0 + step, hi - step, step);
                if n != 1 {
                    bad_counts.push((ld, r, w, n));
                }
                points += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_residual <= 1e-10 && bad_counts.is_empty() && secs < 5.0;
    verdict_line(
        1,
        "fixed point residual and uniqueness",
        pass,
        &format!(
            "{points} points, max |g(q)-q| = {worst_residual:.3e}, non-unique = {}, {secs:.2}s",
            bad_counts.len()
        ),
    );
    assert_eq!(points, 525);
    assert!(worst_residual <= 1e-10, "max residual {worst_residual:e}");
    assert!(bad_counts.is_empty(), "{bad_counts:?}");
    assert!(secs < 5.0, "took {secs}s");
}

#[test]
fn criterion_2_closed_forms_match_quadrature() {
    let start = Instant::now();
    let grid = moment_grid();
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for p in &grid {
        let (ss, m) = evaluate(p).unwrap();
        let q = ss.q_bar;
        let top = tail_cutoff(p, q);
        let mass = moment(p, q, 0, -p.r, top);
        let mean = moment(p, q, 1, -p.r, top) / mass;
        let second = moment(p, q, 2, -p.r, top) / mass;
        let var = second - mean * mean;
        let good = moment(p, q, 1, 0.0, top) / moment(p, q, 0, 0.0, top);
        let bad = moment(p, q, 1, -p.r, 0.0) / moment(p, q, 0, -p.r, 0.0);
        let cmp = [
            ("x_bar", m.x_bar, mean),
            ("var_x", m.var_x, var),
            ("x_bar_good", conditional_mean_welfare(p, &ss, Quality::Good).unwrap(), good),
            ("x_bar_bad", conditional_mean_welfare(p, &ss, Quality::Bad).unwrap(), bad),
        ];
        for (name, closed, quad) in cmp {
            let e = rel_err(closed, quad);
            if e > worst {
                worst = e;
                worst_at = format!("{name} at {p:?}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = grid.len() >= 50 && worst <= 1e-8 && secs < 10.0;
    verdict_line(
        2,
        "closed-form moments vs adaptive quadrature",
        pass,
        &format!("{} points, worst relative error {worst:.3e} ({worst_at}), {secs:.2}s", grid.len()),
    );
    assert!(grid.len() >= 50);
    assert!(worst <= 1e-8, "worst {worst:e} at {worst_at}");
    assert!(secs < 10.0);
}

#[test]
fn criterion_3_special_cases() {
    // w = 0 anchor at λ_d = r = 1
    let p0 = SocietyParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
    let ss0 = steady_state(&p0).unwrap();
    let v0 = variance(&p0, &ss0);
    let anchor0 = anchor_w0_variance(1.0, 1.0);
    let top = tail_cutoff(&p0, ss0.q_bar);
    let mass = moment(&p0, ss0.q_bar, 0, -1.0, top);
    let quad0 = moment(&p0, ss0.q_bar, 2, -1.0, top) / mass - (moment(&p0, ss0.q_bar, 1, -1.0, top) / mass).powi(2);
    let w0_ok = rel_err(v0, anchor0) <= 1e-9;

    // large-r limit at r = 200/λ_d
    let mut limit_ok = true;
    let mut limit_detail = Vec::new();
    for (ld, w) in [(2.0, 0.5), (1.0, 0.0), (0.5, 0.3)] {
        let p = SocietyParams::new(1.0, ld, 200.0 / ld, w).unwrap();
        let v = variance(&p, &steady_state(&p).unwrap());
        let target = anchor_large_r_variance(ld, w);
        limit_ok &= (v - target).abs() <= 1e-6;
        limit_detail.push(format!("(λ_d={ld}, w={w}): {v:.9} vs {target:.9}"));
    }

    // w = 1 exact values
    let mut w1_ok = true;
    for ld in [0.5, 1.0, 3.0] {
        let p = SocietyParams::new(2.0, ld, 0.7, 1.0).unwrap();
        let (_, m) = evaluate(&p).unwrap();
        w1_ok &= m.var_x == 0.0 && m.t_bar == 1.0 / ld;
    }

    let pass = w0_ok && limit_ok && w1_ok;
    verdict_line(
        3,
        "inequality and lifetime special cases",
        pass,
        &format!(
            "var(w=0) = {v0:.12} vs anchor {anchor0:.12} (quadrature {quad0:.12}) [{}]; large-r {} [{}]; w=1 exact [{}]",
            if w0_ok { "ok" } else { "mismatch" },
            limit_detail.join(", "),
            if limit_ok { "ok" } else { "mismatch" },
            if w1_ok { "ok" } else { "mismatch" },
        ),
    );
    assert!(w1_ok, "w = 1 values not exact");
    assert!(w0_ok, "var(w=0) = {v0} but anchor expression gives {anchor0}; quadrature gives {quad0}");
    assert!(limit_ok, "large-r limit mismatch: {limit_detail:?}");
}

#[test]
fn criterion_4_lifetime_regime_split() {
    let start = Instant::now();
    let above = SocietyParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
    let below = SocietyParams::new(1.0, 1.0, 0.3, 0.0).unwrap();
    let hi = check_claim(Claim::LifetimeVsCollectivism, &above, DEFAULT_EPSILON).unwrap();
    let lo = check_claim(Claim::LifetimeVsCollectivism, &below, DEFAULT_EPSILON).unwrap();

    // independent confirmation of the turning point: the residual oracle at
    // (w*, √2 − 1) vanishes and t_bar rises on both sides
    let w_star = lo.turning_point.unwrap();
    let q_star = lo.quality_at_turn.unwrap();
    let at = |w: f64| evaluate(&below.with(coevo::steady_state::ParamName::W, w).unwrap()).unwrap().1.t_bar;
    let local_min = at(w_star - 1e-3) > at(w_star) && at(w_star + 1e-3) > at(w_star);
    let oracle_q = residual_oracle(&below.with(coevo::steady_state::ParamName::W, w_star).unwrap(), LIFETIME_TURNING_QUALITY);
    let secs = start.elapsed().as_secs_f64();

    let pass = hi.expected == Expectation::NonDecreasing
        && hi.report.non_decreasing()
        && hi.pass
        && lo.report.verdict == Verdict::DecreasesThenIncreases
        && (q_star - LIFETIME_TURNING_QUALITY).abs() <= 1e-6
        && local_min
        && secs < 5.0;
    verdict_line(
        4,
        "lifetime vs collectivism regime split",
        pass,
        &format!(
            "λ_d·r=1: {}{}; λ_d·r=0.3: {} with w* = {w_star:.9}, q(w*) - (√2-1) = {:.2e}, oracle residual {oracle_q:.2e}; {secs:.2}s",
            hi.report.verdict,
            if hi.report.flat { " (flat)" } else { "" },
            lo.report.verdict,
            q_star - LIFETIME_TURNING_QUALITY,
        ),
    );
    assert!(hi.pass && hi.report.non_decreasing());
    let table = hi.report.table();
    assert_eq!(table.last().unwrap().1, 1.0);
    assert_eq!(lo.report.verdict, Verdict::DecreasesThenIncreases);
    assert!((q_star - LIFETIME_TURNING_QUALITY).abs() <= 1e-6);
    assert!(local_min);
    assert!(secs < 5.0);
}

#[test]
fn criterion_5_claim_suite() {
    let start = Instant::now();
    let suite = run_default_suite().unwrap();
    let secs = start.elapsed().as_secs_f64();
    let families: [(&str, &[Claim]); 4] = [
        (
            "mean quality and welfare",
            &[
                Claim::QualityFallsWithCollectivism,
                Claim::QualityFallsWithDeathRate,
                Claim::QualityFallsWithBoundary,
                Claim::WelfareFallsWithCollectivism,
                Claim::WelfareFallsWithDeathRate,
                Claim::WelfareFallsWithBoundary,
            ],
        ),
        (
            "population",
            &[
                Claim::PopulationRisesWithBirthRate,
                Claim::PopulationRisesWithCollectivism,
                Claim::PopulationRisesWithBoundary,
                Claim::PopulationFallsWithDeathRate,
            ],
        ),
        (
            "cumulative welfare",
            &[
                Claim::CumulativeRisesWithBirthRate,
                Claim::CumulativeFallsWithDeathRate,
                Claim::CumulativeFallsWithBoundary,
                Claim::CumulativeFallsWithCollectivism,
            ],
        ),
        (
            "inequality",
            &[
                Claim::InequalityIndividualistAboveCollectivist,
                Claim::LimitInequalityFallsWithCollectivism,
                Claim::LimitInequalityFallsWithDeathRate,
            ],
        ),
    ];
    let mut detail = Vec::new();
    let mut every_claim_ran = true;
    for (name, claims) in families {
        let checks: Vec<_> = suite.checks.iter().filter(|c| claims.contains(&c.claim)).collect();
        let failed = checks.iter().filter(|c| !c.pass).count();
        for claim in claims {
            every_claim_ran &= checks.iter().any(|c| c.claim == *claim);
        }
        detail.push(format!("{name}: {}/{} pass", checks.len() - failed, checks.len()));
    }
    let failures = suite.failures();
    let pass = suite.all_pass() && every_claim_ran && secs < 30.0;
    verdict_line(
        5,
        "comparative-statics suite on default grids",
        pass,
        &format!(
            "{}; {} total checks, {} skipped outside guards, {secs:.2}s",
            detail.join("; "),
            suite.checks.len(),
            suite.skipped.len()
        ),
    );
    assert!(every_claim_ran);
    assert!(
        failures.is_empty(),
        "{:?}",
        failures.iter().map(|c| (c.claim, c.report.base)).collect::<Vec<_>>()
    );
    assert!(suite.uniqueness.iter().all(|u| u.pass));
    assert!(secs < 30.0);
}

#[test]
fn criterion_6_simulation_oracle() {
    let start = Instant::now();
    let mut all = true;
    let mut detail = Vec::new();
    for w in [0.0, 0.3] {
        let p = SocietyParams::new(1.0, 1.0, 1.0, w).unwrap();
        let (ss, m) = evaluate(&p).unwrap();
        let cfg = SimConfig {
            n_scale: 50_000,
            replicates: 8,
            t_end: 60.0 / p.lambda_d,
            seed: 2024,
            ..SimConfig::for_params(&p)
        };
        let res = run_simulation(&p, &cfg).unwrap();
        let est = estimate_steady(&res).unwrap();
        let report = compare(&m, &est);
        let density = compare_density(&p, &ss, &res, 0.01).unwrap();
        let mut parts = Vec::new();
        for metric in ["q_bar", "pop", "x_bar", "t_bar", "var_x", "boundary_to_natural"] {
            let row = report.row(metric).unwrap();
            all &= row.pass;
            parts.push(format!("{metric} z={:+.2}", row.z));
        }
        let density_ok = density.max_rel_error < 0.05 && density.bins_checked > 0;
        all &= density_ok;
        parts.push(format!(
            "density max rel err {:.2}% over {} bins",
            100.0 * density.max_rel_error,
            density.bins_checked
        ));
        detail.push(format!("w={w}: {}", parts.join(", ")));
    }
    let secs = start.elapsed().as_secs_f64();
    all &= secs < 300.0;
    verdict_line(
        6,
        "finite-agent simulation vs closed forms",
        all,
        &format!("{}; {secs:.1}s", detail.join("; ")),
    );
    assert!(all, "{detail:?}");
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_7_simulate_is_deterministic() {
    let run = |dir: &Path, jobs: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_coevo"))
            .args([
                "simulate", "--lambda-b", "1", "--lambda-d", "1", "--r", "1", "--w", "0.3", "--seed", "99",
                "--n-scale", "3000", "--t-end", "30", "--burn-in", "10", "--replicates", "4", "--jobs", jobs,
            ])
            .arg("--out")
            .arg(dir)
            .env("SOURCE_DATE_EPOCH", "1700000000")
            .env_remove("COEVO_SEED")
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out_a = run(a.path(), "1");
    let out_b = run(b.path(), "3");
    let tree_a = read_tree(a.path());
    let tree_b = read_tree(b.path());
    let pass = out_a == out_b && tree_a == tree_b && !tree_a.is_empty();
    verdict_line(
        7,
        "simulate output is byte-identical across runs",
        pass,
        &format!(
            "stdout {} bytes, {} files ({}) compared",
            out_a.len(),
            tree_a.len(),
            tree_a.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(", ")
        ),
    );
    assert_eq!(out_a, out_b);
    assert_eq!(tree_a, tree_b);
}

#[test]
fn criterion_8_conservation() {
    let mut sims = 0;
    let mut sim_ok = true;
    for (w, r) in [(0.0, 1.0), (0.3, 0.2), (0.7, 2.0), (1.0, 1.0)] {
        let p = SocietyParams::new(1.5, 1.0, r, w).unwrap();
        let cfg = SimConfig {
            n_scale: 2000,
            t_end: 25.0,
            burn_in: 5.0,
            replicates: 3,
            seed: 5,
            keep_final_agents: true,
            ..SimConfig::for_params(&p)
        };
        let res = run_simulation(&p, &cfg).unwrap();
        for run in &res.replicates {
            sims += 1;
            let c = run.counts;
            sim_ok &= c.births == c.deaths_natural + c.deaths_boundary + c.alive_at_end;
            sim_ok &= run.final_agents.len() == c.alive_at_end;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = SocietyParams::new(
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
            rng.random_range(0.05..5.0),
            rng.random_range(0.0..1.0),
        )
        .unwrap();
        let ss = steady_state(&p).unwrap();
        let (nat, bnd) = death_rate_decomposition(&p, &ss);
        worst = worst.max(((nat + bnd) - p.lambda_b).abs() / p.lambda_b);
    }
    let balance_ok = worst <= 4.0 * f64::EPSILON;
    let pass = sim_ok && balance_ok;
    verdict_line(
        8,
        "event and mass-rate conservation",
        pass,
        &format!("{sims} replicate runs conserved: {sim_ok}; worst balance relative error {worst:.2e} over 100 samples"),
    );
    assert!(sim_ok);
    assert!(balance_ok, "worst {worst:e}");
}

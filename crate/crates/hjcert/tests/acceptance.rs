//! Acceptance gate: one test per shipped guarantee, each printing a single
//! pass/fail line with the measured quantity (run with `--nocapture` to see
//! them). Thresholds are fixed here, not configurable.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hjcert::containment::ContainmentSpec;
use hjcert::curve::{containment_check, diff_inclusion_path, random_curve};
use hjcert::grid::{DomainGrid, GridKind};
use hjcert::hamiltonian::HamiltonianSpec;
use hjcert::isaacs::{h_lower, h_upper, isaacs_envelope_check, isaacs_gap};
use hjcert::legendre::{
    build_psi, conjugate, conjugate_with, fenchel_young_gap, ConjugateOptions, PsiOptions,
};
use hjcert::scenario::{ProblemKind, Scenario};
use hjcert::testfn::{Boundedness, SmoothTestFunction};
use hjcert::value::{
    dpp_residual, hopf_lax, solve_evolutionary, solve_stationary, uniform_velocity_grid,
    StationaryScheme,
};
use hjcert::viscosity::{certify_stationary, standard_test_family, DaggerKind};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {:02} {name}: {} ({detail})",
        id,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {id} {name}: {detail}");
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn nearest_node(grid: &DomainGrid, x: &[f64]) -> usize {
    (0..grid.node_count())
        .min_by(|&i, &j| {
            grid.distance(&grid.point(i), x)
                .total_cmp(&grid.distance(&grid.point(j), x))
        })
        .unwrap()
}

#[test]
fn conjugate_oracle_quadratic() {
    let start = Instant::now();
    let g = DomainGrid::build(GridKind::Box, &[-1.0], &[1.0], &[11]).unwrap();
    let ham = HamiltonianSpec::custom(
        &g,
        vec![4.0],
        true,
        Arc::new(|_x, p: &[f64]| 0.5 * p[0] * p[0]),
    )
    .unwrap();
    let opts = ConjugateOptions {
        dp: Some(0.01),
        refine: true,
    };
    let mut max_err = 0.0f64;
    for xi in 0..5 {
        let x = [-1.0 + 0.5 * xi as f64];
        for j in 0..=400 {
            let v = [-2.0 + 0.01 * j as f64];
            let lv = conjugate_with(&ham, &x, &v, &opts);
            max_err = max_err.max((lv.value - 0.5 * v[0] * v[0]).abs());
            assert!(!lv.saturated, "interior maximizer flagged saturated");
        }
    }
    let dt = start.elapsed().as_secs_f64();
    report(
        1,
        "conjugate-oracle",
        max_err <= 1e-3 && dt < 5.0,
        &format!("max error {max_err:.2e}, {dt:.2}s"),
    );
}

#[test]
fn fenchel_young_gap_nonnegative() {
    let g = DomainGrid::build(GridKind::Box, &[-1.0], &[1.0], &[11]).unwrap();
    let analytic = vec![
        ("quadratic", HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap()),
        (
            "transport",
            HamiltonianSpec::transport_quadratic(
                &g,
                vec![4.0],
                Arc::new(|x: &[f64]| vec![0.3 * x[0].sin()]),
            )
            .unwrap(),
        ),
        ("norm", HamiltonianSpec::norm_type(&g, vec![4.0]).unwrap()),
    ];
    let numeric = vec![(
        "grid-quadratic",
        HamiltonianSpec::custom(&g, vec![4.0], true, Arc::new(|_x, p: &[f64]| 0.5 * p[0] * p[0]))
            .unwrap(),
    )];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst_analytic = f64::INFINITY;
    let mut worst_numeric = f64::INFINITY;
    for (set, bound, worst) in [
        (&analytic, -1e-9, &mut worst_analytic),
        (&numeric, -1e-3, &mut worst_numeric),
    ] {
        for (name, ham) in set {
            for _ in 0..10_000 {
                let x = [rng.gen_range(-1.0..1.0)];
                let v = [rng.gen_range(-2.0..2.0)];
                let p = [rng.gen_range(-4.0..4.0)];
                let gap = fenchel_young_gap(ham, &x, &v, &p);
                *worst = worst.min(gap);
                assert!(gap >= bound, "{name}: gap {gap} at v={v:?} p={p:?}");
            }
        }
    }
    report(
        2,
        "fenchel-young",
        worst_analytic >= -1e-9 && worst_numeric >= -1e-3,
        &format!("worst analytic {worst_analytic:.2e}, worst grid {worst_numeric:.2e}"),
    );
}

#[test]
fn domination_function_suite() {
    let g = DomainGrid::build(GridKind::Box, &[-1.0], &[1.0], &[101]).unwrap();
    let ham = HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap();
    let f = SmoothTestFunction::quadratic_bump(&g, vec![0.2], 1.5, 0.0, 0.4);
    let k: Vec<Vec<f64>> = g.iter_points().collect();
    let psi = build_psi(&ham, &f, &k, &PsiOptions::default()).unwrap();

    // closed form: L = |v|^2/2 gives phi(s) = s^2/2, psi(r) = C sqrt(2r)
    let mut rel_err = 0.0f64;
    for j in 0..60 {
        let r = 0.01 * (1e4f64).powf(j as f64 / 59.0);
        let expected = psi.c_fk * (2.0 * r).sqrt();
        rel_err = rel_err.max((psi.eval(r) - expected).abs() / expected);
    }

    // |<df, q>| <= psi(L(x, q)) on 10^4 samples drawn from the compact set
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut dom_margin = f64::INFINITY;
    for _ in 0..10_000 {
        let x = &k[rng.gen_range(0..k.len())];
        let q = [rng.gen_range(-8.0..8.0)];
        if q[0] == 0.0 {
            continue;
        }
        let l = conjugate(&ham, x, &q).value;
        let lhs = (f.diff(x)[0] * q[0]).abs();
        dom_margin = dom_margin.min(psi.eval(l) - lhs);
    }

    // sublinearity: psi(r)/r drops by >= 10x across two decades
    let factor = (psi.eval(0.1) / 0.1) / (psi.eval(10.0) / 10.0);

    let pass = rel_err <= 1e-3 && dom_margin >= -1e-9 && factor >= 10.0 * (1.0 - 1e-9);
    report(
        3,
        "domination-suite",
        pass,
        &format!("rel err {rel_err:.2e}, domination margin {dom_margin:.2e}, decay factor {factor:.4}"),
    );
}

#[test]
fn constant_data_exactness() {
    let start = Instant::now();
    let sc = Scenario::load(&scenario_path("constant_torus.json")).unwrap();
    let built = sc.build().unwrap();
    let c = 0.4;
    let h_values = sc.problem.h.as_ref().unwrap().tabulate(&built.grid).unwrap();
    let field = solve_stationary(
        &built.ham,
        built.grid.clone(),
        sc.problem.lambda.unwrap(),
        h_values.clone(),
        sc.scheme.tau,
        built.velocities.clone(),
        sc.scheme.tol,
        100_000,
    )
    .unwrap();
    let stat_err = field.values.iter().map(|v| (v - c).abs()).fold(0.0, f64::max);

    let tv = solve_evolutionary(
        &built.ham,
        built.grid.clone(),
        0.0,
        vec![c; built.grid.node_count()],
        0.4,
        sc.scheme.tau,
        built.velocities.clone(),
    )
    .unwrap();
    let evo_err = tv
        .layers
        .iter()
        .flatten()
        .map(|v| (v - c).abs())
        .fold(0.0, f64::max);

    let family = standard_test_family(&built.grid, 5, &[0.5, 2.0], &[0.05, 0.2], 0.25);
    assert_eq!(family.len(), 20);
    let rep = certify_stationary(&field, &built.ham, &built.ups, &h_values, &family, 1e-8, 0)
        .unwrap();
    // signed severity: how close each one-sided inequality comes to failing
    let max_res = rep
        .entries
        .iter()
        .map(|e| match e.kind {
            DaggerKind::Dagger => e.residual,
            DaggerKind::Ddagger => -e.residual,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let dt = start.elapsed().as_secs_f64();
    let pass =
        stat_err <= 1e-8 && evo_err <= 1e-8 && rep.aggregate_pass && max_res <= 1e-8 && dt < 10.0;
    report(
        4,
        "constant-exactness",
        pass,
        &format!(
            "stationary err {stat_err:.2e}, evolutionary err {evo_err:.2e}, \
             worst certificate residual {max_res:.2e} over {} entries, {dt:.2}s",
            rep.entries.len()
        ),
    );
}

#[test]
fn hopf_lax_oracle_and_refinement() {
    let start = Instant::now();
    // velocity resolution is refined with sqrt(dx) so its quadratic error
    // term shrinks in lockstep with the first-order space-time error
    let run = |nodes: usize, tau: f64, dv: f64| -> f64 {
        let g = Arc::new(DomainGrid::build(GridKind::Box, &[-2.0], &[2.0], &[nodes]).unwrap());
        let ham = HamiltonianSpec::quadratic(&g, vec![8.0]).unwrap();
        let u0: Vec<f64> = g.iter_points().map(|x| -x[0] * x[0]).collect();
        let tv = solve_evolutionary(
            &ham,
            g.clone(),
            0.0,
            u0.clone(),
            0.5,
            tau,
            uniform_velocity_grid(1, 4.5, dv),
        )
        .unwrap();
        let mut err = 0.0f64;
        for &t in &[0.1, 0.5] {
            let k = (t / tau).round() as usize;
            let layer = tv.layer(k);
            for (i, x) in g.iter_points().enumerate() {
                let oracle = hopf_lax(&g, &u0, &|v| 0.5 * v[0] * v[0], &x, t);
                err = err.max((layer[i] - oracle).abs());
            }
        }
        err
    };
    let coarse = run(401, 0.01, 0.25);
    let fine = run(801, 0.005, 0.25 / 2.0f64.sqrt());
    let factor = coarse / fine;
    let dt = start.elapsed().as_secs_f64();
    let pass = coarse <= 0.05 && factor >= 1.5 && dt < 120.0;
    report(
        5,
        "hopf-lax-oracle",
        pass,
        &format!("coarse err {coarse:.4}, fine err {fine:.4}, factor {factor:.2}, {dt:.1}s"),
    );
}

#[test]
fn contraction_and_sup_bound() {
    let sc = Scenario::load(&scenario_path("sin_torus.json")).unwrap();
    let built = sc.build().unwrap();
    let h_values = sc.problem.h.as_ref().unwrap().tabulate(&built.grid).unwrap();
    let scheme = StationaryScheme::new(
        &built.ham,
        built.grid.clone(),
        sc.problem.lambda.unwrap(),
        h_values,
        sc.scheme.tau,
        built.velocities.clone(),
    )
    .unwrap();
    let beta = scheme.beta();
    let n = built.grid.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_ratio = 0.0f64;
    for _ in 0..5 {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ratio = sup_diff(&scheme.sweep(&u), &scheme.sweep(&w)) / sup_diff(&u, &w);
        worst_ratio = worst_ratio.max(ratio);
    }

    // resolvent bound ||R|| <= ||h|| on every shipped stationary scenario
    let mut worst_excess = f64::NEG_INFINITY;
    for name in ["constant_torus.json", "sin_torus.json", "isaacs_singleton.json"] {
        let sc = Scenario::load(&scenario_path(name)).unwrap();
        let built = sc.build().unwrap();
        assert_eq!(sc.problem.kind, ProblemKind::Stationary);
        let h_values = sc.problem.h.as_ref().unwrap().tabulate(&built.grid).unwrap();
        let h_norm = h_values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let field = solve_stationary(
            &built.ham,
            built.grid.clone(),
            sc.problem.lambda.unwrap(),
            h_values,
            sc.scheme.tau,
            built.velocities.clone(),
            sc.scheme.tol,
            100_000,
        )
        .unwrap();
        let r_norm = field.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        worst_excess = worst_excess.max(r_norm - h_norm);
    }
    let pass = worst_ratio <= beta + 1e-12 && worst_excess <= 1e-8;
    report(
        6,
        "contraction-and-bound",
        pass,
        &format!(
            "worst sweep ratio {worst_ratio:.6} vs beta {beta:.6}, \
             worst ||R||-||h|| excess {worst_excess:.2e}"
        ),
    );
}

#[test]
fn dpp_residual_on_sin_scenario() {
    let sc = Scenario::load(&scenario_path("sin_torus.json")).unwrap();
    let built = sc.build().unwrap();
    let h_values = sc.problem.h.as_ref().unwrap().tabulate(&built.grid).unwrap();
    let lambda = sc.problem.lambda.unwrap();
    let scheme = StationaryScheme::new(
        &built.ham,
        built.grid.clone(),
        lambda,
        h_values.clone(),
        sc.scheme.tau,
        built.velocities.clone(),
    )
    .unwrap();
    let converged = scheme.solve(sc.scheme.tol, 100_000).unwrap();
    let bound = 5.0 * (built.grid.max_spacing() + sc.scheme.tau);
    let res = dpp_residual(&built.ham, &converged, &h_values, 0.05, 0.005);
    let max_res = res.iter().map(|r| r.abs()).fold(0.0, f64::max);

    let one_sweep = scheme.run_sweeps(1);
    let res1 = dpp_residual(&built.ham, &one_sweep, &h_values, 0.05, 0.005);
    let max_res1 = res1.iter().map(|r| r.abs()).fold(0.0, f64::max);

    let pass = max_res <= bound && max_res1 > max_res;
    report(
        7,
        "dpp-residual",
        pass,
        &format!("converged {max_res:.4} <= {bound:.4}, one-sweep {max_res1:.4}"),
    );
}

#[test]
fn certificate_falsification_power() {
    let sc = Scenario::load(&scenario_path("sin_torus.json")).unwrap();
    let built = sc.build().unwrap();
    let h_values = sc.problem.h.as_ref().unwrap().tabulate(&built.grid).unwrap();
    let field = solve_stationary(
        &built.ham,
        built.grid.clone(),
        sc.problem.lambda.unwrap(),
        h_values.clone(),
        sc.scheme.tau,
        built.velocities.clone(),
        sc.scheme.tol,
        100_000,
    )
    .unwrap();
    let tol = sc.certify_tol(&built.grid);
    let family = standard_test_family(
        &built.grid,
        sc.certify.centers,
        &sc.certify.curvatures,
        &sc.certify.epsilons,
        sc.certify.radius_frac,
    );
    let clean =
        certify_stationary(&field, &built.ham, &built.ups, &h_values, &family, tol, 0).unwrap();
    assert!(clean.aggregate_pass, "baseline certification must pass");

    // spike the field at a reported optimizer: +10 tol must break a
    // subsolution verdict, -10 tol a supersolution verdict
    let mut flips = [0usize; 2];
    for (slot, (kind, sign)) in [(DaggerKind::Dagger, 1.0), (DaggerKind::Ddagger, -1.0)]
        .iter()
        .enumerate()
    {
        let entry = clean.entries.iter().find(|e| e.kind == *kind).unwrap();
        let node = nearest_node(&built.grid, &entry.optimizer);
        let mut tampered = field.clone();
        tampered.values[node] += sign * 10.0 * tol;
        let rep = certify_stationary(
            &tampered, &built.ham, &built.ups, &h_values, &family, tol, 0,
        )
        .unwrap();
        flips[slot] = rep
            .entries
            .iter()
            .filter(|e| e.kind == *kind && !e.pass)
            .count();
    }
    let pass = flips[0] >= 1 && flips[1] >= 1;
    report(
        8,
        "falsification-power",
        pass,
        &format!("+spike flips {} subsolution, -spike flips {} supersolution", flips[0], flips[1]),
    );
}

#[test]
fn differential_inclusion_closed_form() {
    // f = -b|x|^2/2 with H = |p|^2/2: the inclusion is gamma' = -b gamma,
    // closed form x0 exp(-b t)
    let b = 0.5;
    let g = Arc::new(DomainGrid::build(GridKind::Box, &[-2.0], &[2.0], &[81]).unwrap());
    let ham = HamiltonianSpec::quadratic(&g, vec![4.0]).unwrap();
    let f = SmoothTestFunction::new(
        Arc::new(move |x: &[f64]| -0.5 * b * x[0] * x[0]),
        Arc::new(move |x: &[f64]| vec![-b * x[0]]),
        Boundedness::UpperBounded,
    );
    let x0 = 1.25;
    let out = diff_inclusion_path(&ham, &f, g, &[x0], 1.0, 1e-3, 1e-6).unwrap();
    let endpoint = out.curve.eval(1.0)[0];
    let exact = x0 * (-b * 1.0f64).exp();
    let end_err = (endpoint - exact).abs();
    let pass = end_err <= 1e-5 && out.young_residual.abs() <= 1e-6;
    report(
        9,
        "differential-inclusion",
        pass,
        &format!("endpoint err {end_err:.2e}, equality residual {:.2e}", out.young_residual),
    );
}

#[test]
fn containment_on_random_curves() {
    let mut worst = f64::NEG_INFINITY;
    for name in ["constant_torus.json", "sin_torus.json", "hopf_lax_box.json"] {
        let sc = Scenario::load(&scenario_path(name)).unwrap();
        let built = sc.build().unwrap();
        assert!(built.ups.certified);
        let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
        for _ in 0..100 {
            let curve = random_curve(&built.grid, &mut rng, 3, 1.0);
            let res = containment_check(&built.ham, &built.ups, &curve, 1.0);
            worst = worst.max(res);
        }
    }
    report(
        10,
        "containment-inequality",
        worst <= 1e-9,
        &format!("worst residual {worst:.2e} over 300 curves"),
    );
}

#[test]
fn isaacs_games() {
    // separable 3x3: the order of sup and inf cannot matter
    let sc = Scenario::load(&scenario_path("isaacs_separable.json")).unwrap();
    let (grid, spec) = sc.build_game().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let samples: Vec<Vec<f64>> = (0..100)
        .map(|_| vec![rng.gen_range(-4.0..4.0)])
        .collect();
    let sep = isaacs_gap(&spec, &grid, &samples).unwrap();
    assert_eq!(sep.samples, 1000);

    // coupled 2x2 counterexample: hand-enumerated gap is exactly 2
    let sc2 = Scenario::load(&scenario_path("isaacs_coupled.json")).unwrap();
    let (grid2, spec2) = sc2.build_game().unwrap();
    let mut rng2 = ChaCha8Rng::seed_from_u64(sc2.seed);
    let samples2: Vec<Vec<f64>> = (0..100)
        .map(|_| vec![rng2.gen_range(-4.0..4.0)])
        .collect();
    let coupled = isaacs_gap(&spec2, &grid2, &samples2).unwrap();

    // envelope residual of the upper composite stays nonpositive
    let ups = ContainmentSpec::trivial(1);
    let f = SmoothTestFunction::quadratic_bump(&grid, vec![0.4], 1.0, 0.0, 0.2);
    let mut worst_env = f64::NEG_INFINITY;
    for &eps in &[0.05, 0.5, 0.95] {
        for r in isaacs_envelope_check(&spec, &f, eps, &ups, &grid).unwrap() {
            worst_env = worst_env.max(r);
        }
    }

    // singleton strategy sets must reproduce the one-player pipeline to the
    // bit: both sides use the numeric-conjugate path
    let sc3 = Scenario::load(&scenario_path("isaacs_singleton.json")).unwrap();
    let built3 = sc3.build().unwrap();
    let (grid3, spec3) = sc3.build_game().unwrap();
    for p in [[-3.0], [0.0], [1.7]] {
        let x = [0.25];
        assert_eq!(h_upper(&spec3, &x, &p).0.to_bits(), (0.5 * p[0] * p[0]).to_bits());
        assert_eq!(h_lower(&spec3, &x, &p).0.to_bits(), (0.5 * p[0] * p[0]).to_bits());
    }
    let plain = HamiltonianSpec::custom(
        &grid3,
        vec![4.0],
        true,
        Arc::new(|_x, p: &[f64]| 0.5 * p.iter().map(|v| v * v).sum::<f64>()),
    )
    .unwrap();
    let h_values = sc3.problem.h.as_ref().unwrap().tabulate(&grid3).unwrap();
    let solve = |ham: &HamiltonianSpec| {
        solve_stationary(
            ham,
            built3.grid.clone(),
            sc3.problem.lambda.unwrap(),
            h_values.clone(),
            sc3.scheme.tau,
            built3.velocities.clone(),
            sc3.scheme.tol,
            100_000,
        )
        .unwrap()
    };
    let via_game = solve(&built3.ham);
    let via_plain = solve(&plain);
    let identical = via_game
        .values
        .iter()
        .zip(&via_plain.values)
        .all(|(a, b)| a.to_bits() == b.to_bits());

    let pass = sep.max_gap <= 1e-12
        && sep.min_gap >= -1e-12
        && (coupled.max_gap - 2.0).abs() <= 1e-12
        && (coupled.min_gap - 2.0).abs() <= 1e-12
        && coupled.min_gap >= -1e-12
        && worst_env <= 1e-9
        && identical;
    report(
        11,
        "isaacs-games",
        pass,
        &format!(
            "separable gap {:.2e}, coupled gap {:.2e}, envelope residual {:.2e}, \
             singleton bitwise identical: {identical}",
            sep.max_gap, coupled.max_gap, worst_env
        ),
    );
}

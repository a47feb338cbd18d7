//! Scenario-driven command line: solve, certify, tabulate, trace, evaluate.
//!
//! Exit codes: 0 success, 1 error (bad input, non-convergence), 2 a
//! certificate was falsified.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hjcert::curve::{j_lambda, random_curve, w_lambda, Curve};
use hjcert::error::{HjError, Result};
use hjcert::grid::DomainGrid;
use hjcert::isaacs::isaacs_gap;
use hjcert::legendre::{build_psi, conjugate, PsiOptions};
use hjcert::scenario::{BuiltScenario, ProblemKind, Scenario};
use hjcert::value::{
    default_max_iters, solve_evolutionary, solve_stationary, TimeValueField, ValueField,
};
use hjcert::viscosity::{
    certify_evolutionary, certify_stationary, default_time_tests, standard_test_family,
};

#[derive(Parser)]
#[command(name = "hjcert", version, about = "Semi-Lagrangian Hamilton-Jacobi value functions with viscosity certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the stationary problem u - lambda H(x, Du) = h.
    SolveStationary {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the evolutionary problem dt u + lambda u - H(x, Du) = 0.
    SolveEvolution {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Certify a value field as viscosity sub/supersolution.
    Certify {
        scenario: PathBuf,
        /// Value-field CSV produced by a solve subcommand.
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Tabulate the convex conjugate L(x, v) on a (x, v) grid (1D only).
    LegendreTable {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        v_max: f64,
        #[arg(long, default_value_t = 81)]
        v_steps: usize,
    },
    /// Tabulate the sublinear domination function psi(r).
    PsiTable {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        r_min: f64,
        #[arg(long, default_value_t = 1e3)]
        r_max: f64,
        #[arg(long, default_value_t = 121)]
        rows: usize,
    },
    /// Gap statistics for a two-player (sup-inf vs inf-sup) Hamiltonian.
    IsaacsCheck {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        p_samples: usize,
    },
    /// Emit a seeded random admissible curve as CSV.
    Trace {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        segments: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Evaluate the payoff along a curve, or tamper a field with a spike.
    Evaluate {
        scenario: PathBuf,
        /// Curve CSV (t,x1,...,xd) to evaluate the payoff along.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Quadrature step for the payoff integral.
        #[arg(long, default_value_t = 1e-3)]
        quad_dt: f64,
        /// Value-field CSV to tamper with.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Spike size as a multiple of the certification tolerance.
        #[arg(long, requires = "field", allow_hyphen_values = true)]
        inject_spike: Option<f64>,
        /// Flat node index receiving the spike.
        #[arg(long, default_value_t = 0)]
        node: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::SolveStationary { scenario, out } => cmd_solve_stationary(&scenario, &out),
        Command::SolveEvolution { scenario, out } => cmd_solve_evolution(&scenario, &out),
        Command::Certify {
            scenario,
            field,
            out,
        } => cmd_certify(&scenario, &field, &out),
        Command::LegendreTable {
            scenario,
            out,
            v_max,
            v_steps,
        } => cmd_legendre_table(&scenario, &out, v_max, v_steps),
        Command::PsiTable {
            scenario,
            out,
            r_min,
            r_max,
            rows,
        } => cmd_psi_table(&scenario, &out, r_min, r_max, rows),
        Command::IsaacsCheck {
            scenario,
            out,
            p_samples,
        } => cmd_isaacs_check(&scenario, &out, p_samples),
        Command::Trace {
            scenario,
            out,
            segments,
            horizon,
        } => cmd_trace(&scenario, &out, segments, horizon),
        Command::Evaluate {
            scenario,
            curve,
            quad_dt,
            field,
            inject_spike,
            node,
            out,
        } => cmd_evaluate(&scenario, curve.as_deref(), quad_dt, field.as_deref(), inject_spike, node, &out),
    }
}

fn load(path: &Path) -> Result<(Scenario, BuiltScenario)> {
    let sc = Scenario::load(path)?;
    let built = sc.build()?;
    Ok((sc, built))
}

fn manifest(
    subcommand: &str,
    sc: &Scenario,
    built: &BuiltScenario,
    extra: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "subcommand": subcommand,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": sc.seed,
        "scenario": sc,
        "derived": {
            "max_spacing": built.grid.max_spacing(),
            "node_count": built.grid.node_count(),
            "velocity_count": built.velocities.len(),
            "certify_tol": sc.certify_tol(&built.grid),
            "containment_bound": built.ups.c_upsilon,
        },
        "run": extra,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn cmd_solve_stationary(scenario: &Path, out: &Path) -> Result<i32> {
    let (sc, built) = load(scenario)?;
    if sc.problem.kind != ProblemKind::Stationary {
        return Err(HjError::Config(
            "solve-stationary requires a stationary problem block".into(),
        ));
    }
    let lambda = sc.problem.lambda.unwrap();
    let h_values = sc.problem.h.as_ref().unwrap().tabulate(&built.grid)?;
    let max_iters = sc
        .scheme
        .max_iters
        .unwrap_or_else(|| default_max_iters(lambda, sc.scheme.tau));
    let field = solve_stationary(
        &built.ham,
        built.grid.clone(),
        lambda,
        h_values,
        sc.scheme.tau,
        built.velocities.clone(),
        sc.scheme.tol,
        max_iters,
    )?;
    std::fs::create_dir_all(out)?;
    write_field_csv(&out.join("value_field.csv"), &built.grid, &field.values, None)?;
    let m = manifest(
        "solve-stationary",
        &sc,
        &built,
        serde_json::json!({
            "lambda": lambda,
            "tau": sc.scheme.tau,
            "beta": (-sc.scheme.tau / lambda).exp(),
            "solver_tol": sc.scheme.tol,
            "max_iters": max_iters,
            "iterations": field.iterations,
            "final_update": field.final_update,
        }),
    );
    write_json(&out.join("manifest.json"), &m)?;
    println!(
        "solve-stationary: {} nodes, {} iterations, final update {:e}",
        built.grid.node_count(),
        field.iterations,
        field.final_update
    );
    Ok(0)
}

fn cmd_solve_evolution(scenario: &Path, out: &Path) -> Result<i32> {
    let (sc, built) = load(scenario)?;
    if sc.problem.kind != ProblemKind::Evolutionary {
        return Err(HjError::Config(
            "solve-evolution requires an evolutionary problem block".into(),
        ));
    }
    let lambda = sc.problem.lambda.unwrap();
    let horizon = sc.problem.horizon.unwrap();
    let u0 = sc.problem.u0.as_ref().unwrap().tabulate(&built.grid)?;
    let tv = solve_evolutionary(
        &built.ham,
        built.grid.clone(),
        lambda,
        u0,
        horizon,
        sc.scheme.tau,
        built.velocities.clone(),
    )?;
    std::fs::create_dir_all(out)?;
    write_time_field_csv(&out.join("value_field.csv"), &tv)?;
    let m = manifest(
        "solve-evolution",
        &sc,
        &built,
        serde_json::json!({
            "lambda": lambda,
            "tau": sc.scheme.tau,
            "horizon": horizon,
            "layers": tv.layers.len(),
        }),
    );
    write_json(&out.join("manifest.json"), &m)?;
    println!(
        "solve-evolution: {} nodes x {} layers",
        built.grid.node_count(),
        tv.layers.len()
    );
    Ok(0)
}

fn cmd_certify(scenario: &Path, field_path: &Path, out: &Path) -> Result<i32> {
    let (sc, built) = load(scenario)?;
    let tol = sc.certify_tol(&built.grid);
    let family = standard_test_family(
        &built.grid,
        sc.certify.centers,
        &sc.certify.curvatures,
        &sc.certify.epsilons,
        sc.certify.radius_frac,
    );
    let lambda = sc.problem.lambda.unwrap();
    let parsed = read_field_csv(field_path, &built.grid)?;
    let report = match (sc.problem.kind, parsed) {
        (ProblemKind::Stationary, FieldCsv::Stationary(values)) => {
            let h_values = sc.problem.h.as_ref().unwrap().tabulate(&built.grid)?;
            let field = ValueField {
                grid: built.grid.clone(),
                values,
                lambda,
                tau: sc.scheme.tau,
                velocities: built.velocities.clone(),
                iterations: 0,
                final_update: 0.0,
            };
            certify_stationary(
                &field,
                &built.ham,
                &built.ups,
                &h_values,
                &family,
                tol,
                sc.certify.radius,
            )?
        }
        (ProblemKind::Evolutionary, FieldCsv::Evolutionary { times, layers }) => {
            let u0 = sc.problem.u0.as_ref().unwrap().tabulate(&built.grid)?;
            let tv = TimeValueField {
                grid: built.grid.clone(),
                times,
                layers,
                lambda,
                tau: sc.scheme.tau,
                velocities: built.velocities.clone(),
            };
            certify_evolutionary(
                &tv,
                &built.ham,
                &built.ups,
                &u0,
                &family,
                &default_time_tests(),
                tol,
                sc.certify.radius,
            )?
        }
        _ => {
            return Err(HjError::Config(
                "field CSV layout does not match the scenario's problem kind".into(),
            ))
        }
    };
    std::fs::create_dir_all(out)?;
    write_json(&out.join("certificate_report.json"), &serde_json::to_value(&report)?)?;
    let m = manifest(
        "certify",
        &sc,
        &built,
        serde_json::json!({
            "tol": tol,
            "family_size": family.len(),
            "entries": report.entries.len(),
            "aggregate_pass": report.aggregate_pass,
        }),
    );
    write_json(&out.join("manifest.json"), &m)?;
    let n_fail = report.entries.iter().filter(|e| !e.pass).count();
    println!(
        "certify: {} certificates, {} failed, aggregate {}",
        report.entries.len(),
        n_fail,
        if report.aggregate_pass { "PASS" } else { "FAIL" }
    );
    Ok(if report.aggregate_pass { 0 } else { 2 })
}

fn cmd_legendre_table(scenario: &Path, out: &Path, v_max: f64, v_steps: usize) -> Result<i32> {
    let (sc, built) = load(scenario)?;
    if built.grid.dim() != 1 {
        return Err(HjError::Capability(
            "legendre-table emits scalar columns; only 1D scenarios supported".into(),
        ));
    }
    if v_steps < 2 || !(v_max > 0.0) {
        return Err(HjError::Parameter("legendre-table: need v_steps >= 2, v_max > 0".into()));
    }
    std::fs::create_dir_all(out)?;
    let mut rows = String::from("x,v,L,argmax_p,saturated\n");
    for x in built.grid.iter_points() {
        for j in 0..v_steps {
            let v = -v_max + 2.0 * v_max * j as f64 / (v_steps - 1) as f64;
            let lv = conjugate(&built.ham, &x, &[v]);
            rows.push_str(&format!(
                "{},{},{},{},{}\n",
                x[0], v, lv.value, lv.argmax_p[0], lv.saturated
            ));
        }
    }
    std::fs::write(out.join("legendre_table.csv"), rows)?;
    let m = manifest(
        "legendre-table",
        &sc,
        &built,
        serde_json::json!({"v_max": v_max, "v_steps": v_steps}),
    );
    write_json(&out.join("manifest.json"), &m)?;
    println!("legendre-table: {} rows", built.grid.node_count() * v_steps);
    Ok(0)
}

fn cmd_psi_table(scenario: &Path, out: &Path, r_min: f64, r_max: f64, rows: usize) -> Result<i32> {
    let (sc, built) = load(scenario)?;
    if !(r_min > 0.0 && r_max > r_min) || rows < 2 {
        return Err(HjError::Parameter("psi-table: need 0 < r_min < r_max, rows >= 2".into()));
    }
    // psi is built for the first member of the certification family on the
    // full grid as the compact set
    let family = standard_test_family(
        &built.grid,
        sc.certify.centers,
        &sc.certify.curvatures,
        &sc.certify.epsilons,
        sc.certify.radius_frac,
    );
    let f = &family[0].0;
    let k: Vec<Vec<f64>> = built.grid.iter_points().collect();
    let psi = build_psi(&built.ham, f, &k, &PsiOptions::default())?;
    std::fs::create_dir_all(out)?;
    let mut table = String::from("r,psi,psi_over_r\n");
    for j in 0..rows {
        let r = r_min * (r_max / r_min).powf(j as f64 / (rows - 1) as f64);
        let p = psi.eval(r);
        table.push_str(&format!("{},{},{}\n", r, p, p / r));
    }
    std::fs::write(out.join("psi_table.csv"), table)?;
    let m = manifest(
        "psi-table",
        &sc,
        &built,
        serde_json::json!({
            "r_min": r_min, "r_max": r_max, "rows": rows,
            "c_fk": psi.c_fk, "v_max": psi.v_max,
        }),
    );
    write_json(&out.join("manifest.json"), &m)?;
    println!("psi-table: {} rows, C_fK = {}", rows, psi.c_fk);
    Ok(0)
}

fn cmd_isaacs_check(scenario: &Path, out: &Path, p_samples: usize) -> Result<i32> {
    // gap diagnostics bypass the composite Hamiltonian, so games whose
    // composite cannot drive the solvers are still checkable
    let sc = Scenario::load(scenario)?;
    let (grid, spec) = sc.build_game()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let d = grid.dim();
    let samples: Vec<Vec<f64>> = (0..p_samples.max(1))
        .map(|_| {
            (0..d)
                .map(|a| rng.gen_range(-spec.p_max[a]..spec.p_max[a]))
                .collect()
        })
        .collect();
    let report = isaacs_gap(&spec, &grid, &samples)?;
    std::fs::create_dir_all(out)?;
    write_json(&out.join("isaacs_report.json"), &serde_json::to_value(&report)?)?;
    let m = serde_json::json!({
        "subcommand": "isaacs-check",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": sc.seed,
        "scenario": sc,
        "run": {"p_samples": samples.len(), "holds": report.holds},
    });
    write_json(&out.join("manifest.json"), &m)?;
    println!(
        "isaacs-check: max gap {:e} over {} evaluations, condition {}",
        report.max_gap,
        report.samples,
        if report.holds { "holds" } else { "FAILS" }
    );
    Ok(0)
}

fn cmd_trace(scenario: &Path, out: &Path, segments: usize, horizon: f64) -> Result<i32> {
    let (sc, built) = load(scenario)?;
    if segments == 0 || !(horizon > 0.0) {
        return Err(HjError::Parameter("trace: need segments >= 1 and horizon > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let curve = random_curve(&built.grid, &mut rng, segments, horizon);
    std::fs::create_dir_all(out)?;
    write_curve_csv(&out.join("trace.csv"), &curve)?;
    let m = manifest(
        "trace",
        &sc,
        &built,
        serde_json::json!({"segments": segments, "horizon": horizon}),
    );
    write_json(&out.join("manifest.json"), &m)?;
    println!("trace: {} knots over [0, {}]", curve.knots().len(), horizon);
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    scenario: &Path,
    curve_path: Option<&Path>,
    quad_dt: f64,
    field_path: Option<&Path>,
    inject_spike: Option<f64>,
    node: usize,
    out: &Path,
) -> Result<i32> {
    let (sc, built) = load(scenario)?;
    std::fs::create_dir_all(out)?;

    if let (Some(field_path), Some(mult)) = (field_path, inject_spike) {
        // tamper mode: add mult * tol at one node of the (first layer of the)
        // field and re-emit it for a subsequent certify run
        let tol = sc.certify_tol(&built.grid);
        match read_field_csv(field_path, &built.grid)? {
            FieldCsv::Stationary(mut values) => {
                if node >= values.len() {
                    return Err(HjError::Parameter(format!(
                        "--node {node} out of range ({} nodes)",
                        values.len()
                    )));
                }
                values[node] += mult * tol;
                write_field_csv(&out.join("value_field.csv"), &built.grid, &values, None)?;
            }
            FieldCsv::Evolutionary { times, mut layers } => {
                let last = layers.len() - 1;
                if node >= layers[last].len() {
                    return Err(HjError::Parameter(format!(
                        "--node {node} out of range ({} nodes)",
                        layers[last].len()
                    )));
                }
                layers[last][node] += mult * tol;
                let tv = TimeValueField {
                    grid: built.grid.clone(),
                    times,
                    layers,
                    lambda: sc.problem.lambda.unwrap(),
                    tau: sc.scheme.tau,
                    velocities: built.velocities.clone(),
                };
                write_time_field_csv(&out.join("value_field.csv"), &tv)?;
            }
        }
        let m = manifest(
            "evaluate",
            &sc,
            &built,
            serde_json::json!({"inject_spike": mult, "node": node, "tol": tol}),
        );
        write_json(&out.join("manifest.json"), &m)?;
        println!("evaluate: injected {mult} x tol spike at node {node}");
        return Ok(0);
    }

    let curve_path = curve_path.ok_or_else(|| {
        HjError::Parameter("evaluate: pass --curve, or --field with --inject-spike".into())
    })?;
    let curve = read_curve_csv(curve_path, built.grid.clone())?;
    let lambda = sc.problem.lambda.unwrap();
    let result = match sc.problem.kind {
        ProblemKind::Stationary => {
            let h_expr = sc.problem.h.as_ref().unwrap().clone();
            let g = built.grid.clone();
            let h_fn = move |x: &[f64]| h_expr.eval(x, &g);
            let j = j_lambda(&built.ham, &curve, lambda, &h_fn, curve.horizon(), quad_dt)?;
            serde_json::json!({
                "payoff_kind": "j_lambda",
                "value": j.value,
                "approximate_tail": j.approximate_tail,
                "t": curve.horizon(),
            })
        }
        ProblemKind::Evolutionary => {
            let u0_expr = sc.problem.u0.as_ref().unwrap().clone();
            let g = built.grid.clone();
            let u0_fn = move |x: &[f64]| u0_expr.eval(x, &g);
            let t = curve.horizon().min(sc.problem.horizon.unwrap());
            let w = w_lambda(&built.ham, &curve, t, lambda, &u0_fn)?;
            serde_json::json!({"payoff_kind": "w_lambda", "value": w, "t": t})
        }
    };
    write_json(&out.join("evaluation.json"), &result)?;
    let m = manifest(
        "evaluate",
        &sc,
        &built,
        serde_json::json!({"curve": curve_path.display().to_string(), "quad_dt": quad_dt}),
    );
    write_json(&out.join("manifest.json"), &m)?;
    println!("evaluate: {}", result["value"]);
    Ok(0)
}

// ---- CSV I/O ---------------------------------------------------------------

fn axis_header(d: usize) -> String {
    (1..=d).map(|a| format!("x{a}")).collect::<Vec<_>>().join(",")
}

fn write_field_csv(
    path: &Path,
    grid: &DomainGrid,
    values: &[f64],
    t: Option<f64>,
) -> Result<()> {
    let mut s = String::new();
    s.push_str(&axis_header(grid.dim()));
    s.push_str(if t.is_some() { ",value,t\n" } else { ",value\n" });
    for (i, x) in grid.iter_points().enumerate() {
        for c in &x {
            s.push_str(&format!("{c},"));
        }
        match t {
            Some(t) => s.push_str(&format!("{},{}\n", values[i], t)),
            None => s.push_str(&format!("{}\n", values[i])),
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn write_time_field_csv(path: &Path, tv: &TimeValueField) -> Result<()> {
    let mut s = String::new();
    s.push_str(&axis_header(tv.grid.dim()));
    s.push_str(",value,t\n");
    for (k, layer) in tv.layers.iter().enumerate() {
        for (i, x) in tv.grid.iter_points().enumerate() {
            for c in &x {
                s.push_str(&format!("{c},"));
            }
            s.push_str(&format!("{},{}\n", layer[i], tv.times[k]));
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

enum FieldCsv {
    Stationary(Vec<f64>),
    Evolutionary {
        times: Vec<f64>,
        layers: Vec<Vec<f64>>,
    },
}

fn read_field_csv(path: &Path, grid: &DomainGrid) -> Result<FieldCsv> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HjError::Config(format!("{}: empty field CSV", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let d = grid.dim();
    let timed = match cols.as_slice() {
        c if c.len() == d + 1 && c[d] == "value" => false,
        c if c.len() == d + 2 && c[d] == "value" && c[d + 1] == "t" => true,
        _ => {
            return Err(HjError::Config(format!(
                "{}: expected header '{},value[,t]', got '{header}'",
                path.display(),
                axis_header(d)
            )))
        }
    };
    let n = grid.node_count();
    let mut values = Vec::new();
    let mut times = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<f64> = line
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    HjError::Config(format!("{}: bad number on data row {}", path.display(), ln + 1))
                })
            })
            .collect::<Result<_>>()?;
        if parts.len() != cols.len() {
            return Err(HjError::Config(format!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                ln + 1,
                parts.len(),
                cols.len()
            )));
        }
        values.push(parts[d]);
        if timed {
            times.push(parts[d + 1]);
        }
    }
    if !timed {
        if values.len() != n {
            return Err(HjError::Config(format!(
                "{}: {} rows for a {}-node grid",
                path.display(),
                values.len(),
                n
            )));
        }
        return Ok(FieldCsv::Stationary(values));
    }
    if values.len() % n != 0 || values.is_empty() {
        return Err(HjError::Config(format!(
            "{}: {} rows is not a whole number of {}-node layers",
            path.display(),
            values.len(),
            n
        )));
    }
    let n_layers = values.len() / n;
    let mut layers = Vec::with_capacity(n_layers);
    let mut layer_times = Vec::with_capacity(n_layers);
    for k in 0..n_layers {
        let chunk = &values[k * n..(k + 1) * n];
        let t = times[k * n];
        if times[k * n..(k + 1) * n].iter().any(|&s| s != t) {
            return Err(HjError::Config(format!(
                "{}: layer {} mixes time stamps",
                path.display(),
                k
            )));
        }
        layers.push(chunk.to_vec());
        layer_times.push(t);
    }
    Ok(FieldCsv::Evolutionary {
        times: layer_times,
        layers,
    })
}

fn write_curve_csv(path: &Path, curve: &Curve) -> Result<()> {
    let mut s = String::from("t");
    for a in 1..=curve.grid().dim() {
        s.push_str(&format!(",x{a}"));
    }
    s.push('\n');
    for (t, x) in curve.times().iter().zip(curve.knots()) {
        s.push_str(&format!("{t}"));
        for c in x {
            s.push_str(&format!(",{c}"));
        }
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn read_curve_csv(path: &Path, grid: Arc<DomainGrid>) -> Result<Curve> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HjError::Config(format!("{}: empty curve CSV", path.display())))?;
    let d = grid.dim();
    let expected = {
        let mut h = String::from("t");
        for a in 1..=d {
            h.push_str(&format!(",x{a}"));
        }
        h
    };
    if header.trim() != expected {
        return Err(HjError::Config(format!(
            "{}: expected header '{expected}', got '{header}'",
            path.display()
        )));
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<f64> = line
            .split(',')
            .map(|p| {
                p.trim().parse::<f64>().map_err(|_| {
                    HjError::Config(format!("{}: bad number on data row {}", path.display(), ln + 1))
                })
            })
            .collect::<Result<_>>()?;
        if parts.len() != d + 1 {
            return Err(HjError::Config(format!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                ln + 1,
                parts.len(),
                d + 1
            )));
        }
        times.push(parts[0]);
        points.push(parts[1..].to_vec());
    }
    Curve::new(grid, times, points)
}

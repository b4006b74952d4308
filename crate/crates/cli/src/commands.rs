use std::fmt::Write as _;
use std::path::Path;

use frechet_core::implicit::scalar::ShiftedScalar;
use frechet_core::implicit::{verify_ift_estimate, IftOptions};
use frechet_core::ode::{build_cauchy, cauchy_solve, CurveSpace, ODE_NAMES};
use frechet_core::problems::{build_problem, catalog, DynProblem, PROBLEM_NAMES};
use frechet_core::solver::{solve, SolveError};
use frechet_core::spaces::{Seminorms, SpacePoint, Vector};
use frechet_core::verify::{
    injectivity_claim, sample_image_pairs, verify_injectivity_conditions,
    verify_inverse_lipschitz, verify_surjectivity, Verdict, VerificationReport, VerifyError,
};
use serde::Serialize;

use crate::config::{Experiment, RunConfig};
use crate::Failure;

/// Fraction of `m_U(x)` used as the surjectivity radius.
const SURJ_RADIUS_FRACTION: f64 = 0.5;

pub fn run(cfg: &RunConfig) -> Result<bool, Failure> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Solve => run_solve(cfg),
        Experiment::Surj | Experiment::Inverse | Experiment::Inject => run_verify(cfg),
        Experiment::Ift => run_ift(cfg),
        Experiment::Ode => run_ode(cfg),
    }
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| f(*x)).collect::<Vec<_>>().join(" ")
}

fn problem(cfg: &RunConfig) -> Result<Box<DynProblem>, Failure> {
    let name = cfg
        .problem
        .as_deref()
        .ok_or_else(|| Failure::Usage("--problem is required".into()))?;
    let p = build_problem(name).ok_or_else(|| {
        Failure::Usage(format!("unknown problem {name:?}; known: {}", PROBLEM_NAMES.join(", ")))
    })?;
    if let Some(desc) = &cfg.space {
        let space = desc.base().map_err(|e| Failure::Usage(e.to_string()))?;
        if &space != p.domain_space() && &space != p.image_space() {
            return Err(Failure::Usage(format!(
                "space {desc:?} does not match problem {name}"
            )));
        }
    }
    Ok(p)
}

/// The smoke target of each registered problem.
pub fn default_target(name: &str) -> f64 {
    match name {
        "scalar-quadratic" => 0.5,
        "fourier-quadratic" => 0.1,
        _ => 0.05,
    }
}

fn target_point(p: &DynProblem, tau: f64) -> SpacePoint {
    let zero = p.image_space().zero();
    match zero.modes() {
        Some(m) => SpacePoint::cosine(m, 1, tau),
        None => SpacePoint::real(vec![tau; zero.coords().len()]),
    }
}

fn write_outputs<T: Serialize>(
    cfg: &RunConfig,
    result: &T,
    csv: &[(&str, String)],
) -> Result<(), Failure> {
    let Some(dir) = &cfg.out else {
        return Ok(());
    };
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let stem = cfg.experiment.file_stem();
    let json = |v: &dyn erased::Json| v.to_pretty();
    write(dir, "config.json", &json(cfg)).map_err(io)?;
    let summary = serde_json::json!({ "config": cfg, "result": result });
    write(dir, &format!("{stem}.json"), &json(&summary)).map_err(io)?;
    for (suffix, body) in csv {
        write(dir, &format!("{stem}{suffix}.csv"), body).map_err(io)?;
    }
    Ok(())
}

mod erased {
    pub trait Json {
        fn to_pretty(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_pretty(&self) -> String {
            let mut s = serde_json::to_string_pretty(self).expect("serializable");
            s.push('\n');
            s
        }
    }
}

fn write(dir: &Path, name: &str, body: &str) -> std::io::Result<()> {
    std::fs::write(dir.join(name), body)
}

fn solver_failure(e: SolveError) -> Failure {
    match e {
        SolveError::InvalidParams(_) | SolveError::Precondition(_) | SolveError::Space(_) => {
            Failure::Usage(e.to_string())
        }
        _ => Failure::Solver(e.to_string()),
    }
}

fn verify_failure(e: VerifyError) -> Failure {
    match e {
        VerifyError::Solve(e) => solver_failure(e),
        other => Failure::Usage(other.to_string()),
    }
}

fn run_solve(cfg: &RunConfig) -> Result<bool, Failure> {
    let p = problem(cfg)?;
    let name = p.name().to_string();
    let tau = cfg.target.unwrap_or_else(|| default_target(&name));
    let y = target_point(p.as_ref(), tau);
    let x0 = p.domain().center.clone();
    let rep = solve(p.as_ref(), &y, &x0, &cfg.solve_options()).map_err(solver_failure)?;

    println!("problem {name}");
    println!("status {:?}", rep.status);
    match rep.solution.modes() {
        None => println!("x {}", join(rep.solution.coords())),
        Some(_) => println!("x seminorms {}", join(&p.domain_space().profile(&rep.solution))),
    }
    println!("residual_rho {}", f(rep.residual_rho));
    println!("residual_levels {}", join(&rep.residual_graded));
    println!("outer_iterations {}", rep.outer_iterations);
    println!(
        "openness rho_domain {} rho_image {} holds {}",
        f(rep.openness.rho_domain),
        f(rep.openness.rho_image),
        rep.openness.holds
    );
    if let Some(m) = &rep.message {
        println!("message {m}");
    }

    let mut csv = String::from("level,residual,solution_seminorm\n");
    let xs = p.domain_space();
    for (n, r) in rep.residual_graded.iter().enumerate() {
        let sol = if n <= xs.top_level() {
            f(xs.eval(&rep.solution, n))
        } else {
            String::new()
        };
        let _ = writeln!(csv, "{n},{},{sol}", f(*r));
    }
    let mut files = vec![("", csv)];
    if cfg.trace {
        let mut t = String::from("orbit,step,t,p,step_norm,residual,halvings\n");
        for (o, tr) in rep.orbit_traces.iter().enumerate() {
            for (i, s) in tr.steps.iter().enumerate() {
                let _ = writeln!(
                    t,
                    "{o},{i},{},{},{},{},{}",
                    f(s.t),
                    f(s.p),
                    f(s.step_norm),
                    f(s.residual),
                    s.halvings
                );
            }
        }
        files.push(("_trace", t));
    }
    write_outputs(cfg, &rep, &files)?;
    if rep.converged() {
        Ok(true)
    } else {
        Err(Failure::Solver(format!("solve ended with status {:?}", rep.status)))
    }
}

fn print_report(rep: &VerificationReport) {
    println!("claim {}", rep.claim);
    println!("problem {}", rep.problem);
    println!("samples {} seed {}", rep.samples, rep.seed);
    println!("violations {} inconclusive {}", rep.violations.len(), rep.inconclusive);
    println!("max_slack {}", f(rep.max_slack));
    println!("verdict {:?}", rep.verdict);
}

fn run_verify(cfg: &RunConfig) -> Result<bool, Failure> {
    let p = problem(cfg)?;
    let opts = cfg.verify_options();
    let samples = cfg.verify.samples;
    let x = p.domain().center.clone();
    match cfg.experiment {
        Experiment::Surj => {
            let r = SURJ_RADIUS_FRACTION * p.domain().margin(p.domain_space(), &x);
            println!("radius {}", f(r));
            let rep = verify_surjectivity(p.as_ref(), &x, r, samples, &opts).map_err(verify_failure)?;
            print_report(&rep);
            write_outputs(cfg, &rep, &[("", rep.to_csv())])?;
            Ok(rep.verdict == Verdict::Pass)
        }
        Experiment::Inverse => {
            let pairs =
                sample_image_pairs(p.as_ref(), &x, samples, cfg.verify.seed).map_err(verify_failure)?;
            let rep =
                verify_inverse_lipschitz(p.as_ref(), &x, &pairs, None, &opts).map_err(verify_failure)?;
            print_report(&rep);
            write_outputs(cfg, &rep, &[("", rep.to_csv())])?;
            Ok(rep.verdict == Verdict::Pass)
        }
        Experiment::Inject => {
            let claim = injectivity_claim(p.as_ref()).ok_or_else(|| {
                Failure::Usage(format!("{} declares no injectivity constants", p.name()))
            })?;
            let rep = verify_injectivity_conditions(p.as_ref(), &claim, samples, &opts)
                .map_err(verify_failure)?;
            println!("delta_bound {}", f(rep.delta_bound));
            println!("delta {}", f(rep.delta));
            println!("c_local {}", f(rep.c_local));
            for part in [&rep.derivative_bound, &rep.derivative_modulus, &rep.local_inverse] {
                println!("{}: {:?}, max_slack {}", part.claim, part.verdict, f(part.max_slack));
            }
            println!("verdict {:?}", rep.verdict);
            let csv = [
                ("_bound", rep.derivative_bound.to_csv()),
                ("_modulus", rep.derivative_modulus.to_csv()),
                ("_local", rep.local_inverse.to_csv()),
            ];
            write_outputs(cfg, &rep, &csv)?;
            Ok(rep.verdict == Verdict::Pass)
        }
        _ => unreachable!("dispatched by run"),
    }
}

fn run_ift(cfg: &RunConfig) -> Result<bool, Failure> {
    let name = cfg.problem.as_deref().unwrap_or("scalar-quadratic");
    if name != "scalar-quadratic" {
        return Err(Failure::Usage(format!(
            "the implicit-map experiment supports the scalar-quadratic family only, got {name:?}"
        )));
    }
    let family = ShiftedScalar::quadratic();
    let ift = IftOptions {
        samples: cfg.verify.samples,
        ..IftOptions::default()
    };
    let rep = verify_ift_estimate(&family, &ift, &cfg.verify_options()).map_err(verify_failure)?;
    println!("eps {}", f(rep.eps));
    println!("delta {}", f(rep.delta));
    println!("parameter_half_width {}", f(rep.neighbourhood.max_half_width()));
    print_report(&rep.report);
    write_outputs(cfg, &rep, &[("", rep.report.to_csv())])?;
    Ok(rep.report.verdict == Verdict::Pass)
}

fn run_ode(cfg: &RunConfig) -> Result<bool, Failure> {
    let params = cfg
        .ode
        .as_ref()
        .ok_or_else(|| Failure::Usage("the ode experiment needs a Cauchy problem".into()))?;
    let p = build_cauchy(&params.ode).ok_or_else(|| {
        Failure::Usage(format!("unknown Cauchy problem {:?}; known: {}", params.ode, ODE_NAMES.join(", ")))
    })?;
    let rep = cauchy_solve(&p, params.r, params.grid, cfg.solver.tol).map_err(solver_failure)?;
    let xs = CurveSpace {
        base: p.space.clone(),
        intervals: params.grid,
    };
    println!("problem {}", p.name);
    println!("r {} grid {}", f(params.r), params.grid);
    println!("status {:?}", rep.status);
    println!("residual_rho {}", f(rep.residual_rho));
    println!("outer_iterations {}", rep.outer_iterations);
    println!("solution_c1 {}", join(&xs.profile(&rep.solution)));
    if let Some(exact) = p.closed_form(params.r, params.grid) {
        println!("closed_form_error {}", join(&xs.profile(&rep.solution.sub(&exact))));
    }
    let reference = p
        .rk4_reference(params.r, params.grid)
        .map_err(|e| Failure::Solver(e.to_string()))?;
    println!("rk4_gap {}", join(&xs.profile(&rep.solution.sub(&reference))));
    write_outputs(cfg, &rep, &[("", rep.solution.seminorm_csv(&p.space))])?;
    if rep.converged() {
        Ok(true)
    } else {
        Err(Failure::Solver(format!("solve ended with status {:?}", rep.status)))
    }
}

pub fn list() {
    for info in catalog() {
        let p = build_problem(info.name).expect("catalog entries build");
        println!("{}", info.name);
        println!("  {}", info.summary);
        println!("  d = {}", info.loss);
        println!("  c = [{}]", join(p.tame_constants()));
        println!("  U radii = [{}]", join(&p.domain().radii));
    }
    for name in ODE_NAMES {
        let p = build_cauchy(name).expect("registered");
        println!("{name} (ode)");
        println!("  c = [{}]", join(&p.c));
        println!("  r0 = {}", f(p.r0));
        println!("  state radii = [{}]", join(&p.radii));
    }
}

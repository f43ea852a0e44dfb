//! Command implementations.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use curvkit::domain::io::{load, save};
use curvkit::domain::{make_domain, Field};
use curvkit::identities::run_all;
use curvkit::lax::{coefficient_scan, LaxExample, NlsVariant};
use curvkit::sim::{
    nls_mass, nls_soliton, nls_soliton_field, nls_solve, sg_integrate, toda_evolve, Boundary,
    Method, PeriodicGrid, SolverConfig,
};
use curvkit::{Shape, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::*;
use crate::report::{convergence_table, Report, ScanRow};
use crate::CliError;

/// Spectral tracking bound for the soliton at the end of the solver run.
pub const NLS_TRACKING_BOUND: f64 = 1e-4;
/// Bound on the discrete mass drift of the solver run.
pub const NLS_MASS_BOUND: f64 = 1e-8;
/// Allowed distance of each fitted convergence order from 2.
pub const NLS_ORDER_BAND: f64 = 0.3;
/// Wrong chain coefficients must leave at least this much curvature.
pub const SG_SEPARATION: f64 = 1e-2;
/// A perturbed Toda field must leave at least this much curvature.
pub const TODA_SEPARATION: f64 = 1e-3;
/// Coefficients tried by the sine-Gordon coefficient scan.
pub const SG_SCAN_COEFFICIENTS: [f64; 3] = [1.0, 2.0, 4.0];

/// What a command produced.
#[derive(Debug)]
pub enum Outcome {
    Report(Box<Report>, Option<PathBuf>),
    Text(String),
}

type Result<T> = std::result::Result<T, CliError>;

pub fn execute(command: Command, echo: Vec<String>) -> Result<Outcome> {
    let start = Instant::now();
    let (mut report, out) = match command {
        Command::Identities(a) => (identities(&a, echo)?, a.output.out),
        Command::Verify(VerifyCommand::Nls(a)) => (verify_nls(&a, echo)?, a.common.output.out),
        Command::Verify(VerifyCommand::Sg(a)) => (verify_sg(&a, echo)?, a.common.output.out),
        Command::Verify(VerifyCommand::Toda(a)) => (verify_toda(&a, echo)?, a.common.output.out),
        Command::Simulate(cmd) => return simulate(&cmd).map(Outcome::Text),
        Command::Dump(a) => {
            let field = load(&a.field)?;
            save(&field, &a.out)?;
            return Ok(Outcome::Text(format!("wrote {}\n", a.out.display())));
        }
        Command::Schema => return Ok(Outcome::Text(crate::REPORT_SCHEMA.to_string())),
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(Outcome::Report(Box::new(report), out))
}

fn identities(a: &IdentitiesArgs, echo: Vec<String>) -> Result<Report> {
    let tol = a.tol.resolve(TolClass::Algebraic);
    let mut r = Report::new(echo, "identities", tol);
    r.param("seed", a.seed);
    r.param("cases", a.cases);
    r.grid("sizes", &a.sizes);
    for suite in run_all(a.seed, &a.sizes, a.cases)? {
        r.residual(&suite.name, suite.worst, suite.l2);
        r.at_most(&suite.name, suite.worst, tol.algebraic);
    }
    Ok(r)
}

/// Records max and L2 norms of every matrix entry of a curvature field.
fn entry_residuals(r: &mut Report, prefix: &str, f: &Field) -> Result<()> {
    let s = f.shape();
    for i in 0..s.rows {
        for j in 0..s.cols {
            let (max, l2) = f.entry(i, j)?.norms()?;
            r.residual(&format!("{prefix}[{i},{j}]"), max, l2);
        }
    }
    Ok(())
}

/// Records the curvature component, its entries and the reduced equation.
fn record_example(r: &mut Report, label: &str, ex: &LaxExample) -> Result<(f64, f64)> {
    let comps = ex.zero_curvature_residual()?;
    let mut worst = 0.0f64;
    for n in comps.residual_norms()? {
        r.residual(&format!("{label}{}", n.component), n.max, n.l2);
        worst = worst.max(n.max);
    }
    for (name, f) in comps.named() {
        entry_residuals(r, &format!("{label}{name}"), f)?;
    }
    let (eq_max, eq_l2) = ex.reduced_equation_residual()?.norms()?;
    r.residual(&format!("{label}equation"), eq_max, eq_l2);
    Ok((worst, eq_max))
}

fn region_metadata(r: &mut Report, ex: &LaxExample) -> Result<()> {
    let f = ex.curvature_field()?;
    r.grid("residual_region", &f.region().bounds);
    r.grid("residual_samples", f.sample_points().len());
    Ok(())
}

fn off_diagonal(f: &Field) -> Result<f64> {
    Ok(f.entry(0, 1)?.max_norm()?.max(f.entry(1, 0)?.max_norm()?))
}

fn write_dumps(dir: &Path, solution: &Field, curvature: &Field) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save(&solution.materialize()?, &dir.join("solution.csv"))?;
    save(&curvature.materialize()?, &dir.join("curvature.csv"))?;
    Ok(())
}

fn scan_rows(rows: Vec<curvkit::lax::ScanRow>) -> Vec<ScanRow> {
    rows.into_iter()
        .map(|s| ScanRow {
            param: s.param,
            residual: s.residual,
        })
        .collect()
}

fn nls_method(m: NlsMethod) -> Method {
    match m {
        NlsMethod::Spectral => Method::Spectral,
        NlsMethod::CrankNicolson => Method::CrankNicolson,
    }
}

fn verify_nls(a: &VerifyNlsArgs, echo: Vec<String>) -> Result<Report> {
    let variant = if a.as_printed {
        NlsVariant::AsPrinted
    } else {
        NlsVariant::Corrected
    };
    let class = if a.common.field.is_some() {
        TolClass::Solver
    } else {
        TolClass::Algebraic
    };
    let tol = a.common.tol.resolve(class);
    let mut r = Report::new(echo, "nls", tol);
    r.param(
        "matrices",
        if a.as_printed {
            "as-printed"
        } else {
            "corrected"
        },
    );

    if let Some(path) = &a.common.field {
        let u = load(path)?;
        r.param("field", path.display().to_string());
        let ex = LaxExample::nls(u.clone(), variant)?;
        let (curv, eq) = record_example(&mut r, "", &ex)?;
        region_metadata(&mut r, &ex)?;
        r.at_most("curvature", curv, tol.solver);
        r.at_most("equation", eq, tol.solver);
        if let Some(dir) = &a.common.dump {
            write_dumps(dir, &u, &ex.curvature_field()?)?;
        }
        return Ok(r);
    }

    if a.conv_h.is_nan()
        || a.conv_h <= 0.0
        || a.conv_half_width.is_nan()
        || a.conv_half_width <= 0.0
    {
        return Err(CliError::Config(
            "--conv-h and --conv-half-width must be positive".into(),
        ));
    }
    let window = |h: f64| -> Result<Arc<curvkit::Domain>> {
        Ok(Arc::new(make_domain(
            0,
            2,
            &[],
            &[(-a.conv_half_width, a.conv_half_width), (0.0, 1.0)],
            &[h, h],
        )?))
    };

    // Analytic soliton.
    let d = window(a.conv_h)?;
    let u = nls_soliton_field(&d)?;
    let ex = LaxExample::nls(u.clone(), variant)?;
    let (curv, eq) = record_example(&mut r, "analytic.", &ex)?;
    region_metadata(&mut r, &ex)?;
    r.grid(
        "analytic_window",
        json!({"x": [-a.conv_half_width, a.conv_half_width], "t": [0.0, 1.0], "h": a.conv_h}),
    );
    r.at_most("analytic curvature", curv, tol.algebraic);
    r.at_most("analytic equation", eq, tol.algebraic);
    let printed = LaxExample::nls(u.clone(), NlsVariant::AsPrinted)?.curvature_field()?;
    let diag = printed
        .entry(0, 0)?
        .max_norm()?
        .max(printed.entry(1, 1)?.max_norm()?);
    r.residual("as_printed.diagonal", diag, 0.0);
    if let Some(dir) = &a.common.dump {
        write_dumps(dir, &u, &ex.curvature_field()?)?;
    }

    // Grid refinement.
    let hs = [a.conv_h, a.conv_h / 2.0, a.conv_h / 4.0];
    let mut rows = Vec::new();
    for &h in &hs {
        let ug = nls_soliton_field(&window(h)?)?.materialize()?;
        let res = LaxExample::nls(ug, variant)?
            .zero_curvature_residual()?
            .max_norm()?;
        rows.push((h, res));
    }
    r.convergence = convergence_table(&rows);
    let worst_order = r
        .convergence
        .iter()
        .filter_map(|c| c.order)
        .map(|o| (o - 2.0).abs())
        .fold(0.0, f64::max);
    r.at_most("convergence order deviation", worst_order, NLS_ORDER_BAND);

    // Solver run against the exact soliton.
    let grid = PeriodicGrid::new(a.x_min, a.x_max, a.h)?;
    let cfg = SolverConfig::new(a.dt, a.steps, nls_method(a.method), Boundary::Periodic)
        .recording_every(a.steps.max(1));
    let u0 = grid.sample(|x| nls_soliton(x, 0.0));
    let field = nls_solve(&grid, &u0, &cfg)?;
    let samples = field.grid_samples().expect("solver returns a grid field");
    let nt = samples.len() / (grid.len() + 1);
    let end: Vec<C64> = (0..grid.len()).map(|j| samples[j * nt + nt - 1]).collect();
    let horizon = cfg.horizon();
    let tracking = (0..grid.len())
        .map(|j| (end[j] - nls_soliton(grid.x(j), horizon)).norm())
        .fold(0.0, f64::max);
    let drift = (nls_mass(&end, grid.h) - nls_mass(&u0, grid.h)).abs();
    r.param("method", format!("{:?}", a.method).to_lowercase());
    r.grid(
        "solver",
        json!({"x": [a.x_min, a.x_max], "h": a.h, "dt": a.dt, "steps": a.steps}),
    );
    r.residual("solver.tracking", tracking, 0.0);
    r.residual("solver.mass_drift", drift, 0.0);
    r.at_most("soliton tracking", tracking, NLS_TRACKING_BOUND);
    r.at_most("mass drift", drift, NLS_MASS_BOUND);
    Ok(r)
}

fn chain_init(c: &ChainArgs) -> Result<Vec<f64>> {
    if c.amplitude < 0.0 || !c.amplitude.is_finite() {
        return Err(CliError::Config(
            "--amplitude must be finite and non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    Ok((0..c.n)
        .map(|_| {
            if c.amplitude == 0.0 {
                0.0
            } else {
                rng.gen_range(-c.amplitude..c.amplitude)
            }
        })
        .collect())
}

fn chain_config(c: &ChainArgs, config: Option<&Path>) -> Result<SolverConfig> {
    match config {
        Some(path) => read_config(path),
        None => Ok(
            SolverConfig::new(c.dt, c.steps, Method::Rk4, Boundary::PrescribedEdge)
                .recording_every(c.record_every),
        ),
    }
}

fn read_config(path: &Path) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn solve_chain(c: &ChainArgs, cfg: &SolverConfig, gamma: f64, coefficient: f64) -> Result<Field> {
    let init = chain_init(c)?;
    let drive = c.drive;
    Ok(sg_integrate(
        &init,
        &move |_| drive,
        gamma,
        coefficient,
        cfg,
    )?)
}

fn verify_sg(a: &VerifySgArgs, echo: Vec<String>) -> Result<Report> {
    let tol = a.common.tol.resolve(TolClass::Solver);
    let mut r = Report::new(echo, "sg", tol);
    r.param("gamma", a.gamma);
    r.param("k", a.k);
    let cfg = chain_config(&a.chain, None)?;
    let theta = match &a.common.field {
        Some(path) => {
            r.param("field", path.display().to_string());
            load(path)?
        }
        None => {
            r.param("coefficient", a.coefficient);
            r.param("seed", a.chain.seed);
            r.param("amplitude", a.chain.amplitude);
            r.param("drive", a.chain.drive);
            r.grid(
                "chain",
                json!({"n": a.chain.n, "dt": a.chain.dt, "steps": a.chain.steps, "record_every": a.chain.record_every}),
            );
            solve_chain(&a.chain, &cfg, a.gamma, a.coefficient)?
        }
    };
    let ex = LaxExample::sine_gordon(theta.clone(), a.gamma, a.k)?;
    let (curv, eq) = record_example(&mut r, "", &ex)?;
    region_metadata(&mut r, &ex)?;
    let curvature = ex.curvature_field()?;
    r.at_most("curvature", curv, tol.solver);
    r.at_most("equation", eq, tol.solver);
    r.at_most("off-diagonal", off_diagonal(&curvature)?, tol.algebraic);
    r.scan = scan_rows(ex.spectral_scan(&a.scan_params)?);
    let worst_scan = r.scan.iter().map(|s| s.residual).fold(0.0, f64::max);
    r.at_most("spectral scan", worst_scan, tol.solver);
    if a.common.field.is_none() {
        let rows = coefficient_scan(&SG_SCAN_COEFFICIENTS, |c| {
            let th = solve_chain(&a.chain, &cfg, a.gamma, c).map_err(|e| match e {
                CliError::Numerical(m) => curvkit::Error::Numerical(m),
                other => curvkit::Error::Config(other.to_string()),
            })?;
            LaxExample::sine_gordon(th, a.gamma, a.k)
        })?;
        r.coefficient_scan = scan_rows(rows);
        let separation = r
            .coefficient_scan
            .iter()
            .filter(|s| s.param != curvkit::lax::SG_COEFFICIENT)
            .map(|s| s.residual)
            .fold(f64::INFINITY, f64::min);
        r.exceeds("wrong coefficients", separation, SG_SEPARATION);
    }
    if let Some(dir) = &a.common.dump {
        write_dumps(dir, &theta, &curvature)?;
    }
    Ok(r)
}

fn toda_rows(t: &TodaLatticeArgs) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, n) = t.size;
    if !t.amplitude.is_finite() {
        return Err(CliError::Config("--amplitude must be finite".into()));
    }
    let mut row0 = vec![0.0; n];
    let mut row1 = vec![0.0; n];
    match t.rows {
        Rows::Zero => {}
        Rows::Bump => {
            if n > 0 {
                row1[n / 2] = t.amplitude;
            }
        }
        Rows::Random => {
            let amp = t.amplitude.abs();
            if amp > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
                for v in row0.iter_mut().chain(row1.iter_mut()) {
                    *v = rng.gen_range(-amp..amp);
                }
            }
        }
    }
    Ok((row0, row1))
}

fn solve_toda(t: &TodaLatticeArgs) -> Result<Field> {
    let (m, _) = t.size;
    if m < 3 {
        return Err(CliError::Config(format!("need at least 3 rows, got {m}")));
    }
    let (row0, row1) = toda_rows(t)?;
    Ok(toda_evolve(&row0, &row1, m - 2)?)
}

fn perturbed(q: &Field, eps: f64) -> Result<Field> {
    let region = q.region().clone();
    let pts = region.points();
    let mut samples = q
        .grid_samples()
        .ok_or_else(|| CliError::Config("Toda field must be a grid field".into()))?
        .to_vec();
    let k = pts.len() / 2;
    samples[k] += C64::new(eps, 0.0);
    Ok(Field::grid(q.domain(), Shape::SCALAR, region, samples)?)
}

fn verify_toda(a: &VerifyTodaArgs, echo: Vec<String>) -> Result<Report> {
    let tol = a.common.tol.resolve(TolClass::Discrete);
    let mut r = Report::new(echo, "toda", tol);
    r.param("lambda", a.lambda);
    let q = match &a.common.field {
        Some(path) => {
            r.param("field", path.display().to_string());
            load(path)?
        }
        None => {
            r.param("rows", format!("{:?}", a.lattice.rows).to_lowercase());
            r.param("amplitude", a.lattice.amplitude);
            r.param("seed", a.lattice.seed);
            solve_toda(&a.lattice)?
        }
    };
    r.grid("lattice", q.domain().lattice_extents());
    let ex = LaxExample::toda(q.clone(), a.lambda)?;
    let (curv, eq) = record_example(&mut r, "", &ex)?;
    region_metadata(&mut r, &ex)?;
    let curvature = ex.curvature_field()?;
    r.at_most("curvature", curv, tol.discrete);
    r.at_most("equation", eq, tol.discrete);
    let zeros = off_diagonal(&curvature)?.max(curvature.entry(1, 1)?.max_norm()?);
    r.at_most("structural zeros", zeros, tol.algebraic);
    r.scan = scan_rows(ex.spectral_scan(&a.scan_params)?);
    let worst_scan = r.scan.iter().map(|s| s.residual).fold(0.0, f64::max);
    r.at_most("spectral scan", worst_scan, tol.discrete);
    if a.common.field.is_none() {
        r.param("perturbation", a.perturbation);
        let bad = LaxExample::toda(perturbed(&q, a.perturbation)?, a.lambda)?;
        let norms = bad.zero_curvature_residual()?.residual_norms()?;
        r.residual("perturbed.curvature", norms[0].max, norms[0].l2);
        r.exceeds("perturbed curvature", norms[0].max, TODA_SEPARATION);
    }
    if let Some(dir) = &a.common.dump {
        write_dumps(dir, &q, &curvature)?;
    }
    Ok(r)
}

/// Runs the solver selected by a `simulate` subcommand.
pub fn simulate_field(cmd: &SimulateCommand) -> Result<Field> {
    match cmd {
        SimulateCommand::Nls(a) => {
            let grid = PeriodicGrid::new(a.x_min, a.x_max, a.h)?;
            let cfg = match &a.config {
                Some(path) => read_config(path)?,
                None => SolverConfig::new(a.dt, a.steps, nls_method(a.method), Boundary::Periodic)
                    .recording_every(a.record_every),
            };
            let u0 = match a.profile {
                Profile::Soliton => grid.sample(|x| nls_soliton(x, 0.0)),
                Profile::Zero => vec![C64::new(0.0, 0.0); grid.len()],
            };
            Ok(nls_solve(&grid, &u0, &cfg)?)
        }
        SimulateCommand::Sg(a) => {
            let cfg = chain_config(&a.chain, a.config.as_deref())?;
            solve_chain(&a.chain, &cfg, a.gamma, a.coefficient)
        }
        SimulateCommand::Toda(a) => solve_toda(&a.lattice),
    }
}

fn simulate(cmd: &SimulateCommand) -> Result<String> {
    let out = match cmd {
        SimulateCommand::Nls(a) => &a.out,
        SimulateCommand::Sg(a) => &a.out,
        SimulateCommand::Toda(a) => &a.out,
    };
    let field = simulate_field(cmd)?;
    save(&field, out)?;
    let values = field.sample_values()?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &values {
        let z = v.get(0, 0);
        lo = lo.min(z.re);
        hi = hi.max(z.re);
    }
    let summary = json!({
        "file": out.display().to_string(),
        "samples": values.len(),
        "max_abs": field.max_norm()?,
        "min_re": lo,
        "max_re": hi,
    });
    Ok(format!(
        "{}\n",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    ))
}

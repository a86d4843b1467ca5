//! Command line driver.
//!
//! Exit codes: `0` success, `1` verification failure, `2` the solver found no
//! zero, `3` input error. Every run ends with one diagnostic line on stderr.

pub mod files;
pub mod plot;
pub mod selftest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::measures::{AssignmentSpec, SmoothingSpec};
use crate::scenarios::{gen_counterexample, gen_gaussian_mixture, gen_line_families, spread};
use crate::solvers::lines::{count_families, LineCounts};
use crate::solvers::{solve, SolveReport, Strategy};
use crate::testmaps::{default_prescribed, SlabTestMap, SphereTestMap};
use crate::verify::{optimality_scan, verify_slab, verify_sphere, verify_wedge, GridSpec, VerifyReport};
use crate::wedges::{planar_wedge_limit, planar_wedge_solve, wedge_solve, WedgeSolution, WedgeTestMap};
use files::{Partition, ResultFile, RunReport, Scenario, Solution, FORMAT_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_NO_ZERO: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

/// Relative residual accepted by the oracle unless `--tol` says otherwise.
pub const DEFAULT_TOL: f64 = 1e-3;
/// First bandwidth (lifted units) when a scenario asks for closed counting.
pub const DISCRETE_H0: f64 = 0.1;
pub const DISCRETE_HALVINGS: usize = 20;
/// Stored and recomputed residuals must agree to this, relative to the total weight.
pub const REPRODUCE_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "equipart", version, about = "Equipartitions of mass assignments by spheres, slabs and wedges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sphere (or half-space) in a k-dimensional subspace bisecting every assignment.
    SolveSphere(SolveArgs),
    /// Slab between two parallel hyperplanes of a k-dimensional subspace.
    SolveSlab(SolveArgs),
    /// Axis-parallel down-wedge on a vertical plane.
    SolveWedge(SolveArgs),
    /// Re-checks a result file with the independent oracle.
    Verify(VerifyArgs),
    /// Writes a scenario file.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Equivariance, canonical orbit and invariant checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Result file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bandwidth; `0` asks for closed counting.
    #[arg(long)]
    h: Option<f64>,
    /// Relative residual accepted by the oracle.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Writes `<plot>.csv` and `<plot>.svg` for planar partitions.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Result file written by a solve command.
    #[arg(long, alias = "result")]
    scenario: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    /// Result file with recomputed residuals.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// d+2 small balls around the vertices of a regular simplex.
    Counterexample {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Four families of lines in R^3, searched on vertical planes.
    Lines {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gaussian mixture clouds.
    Gauss {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Number of clouds; `d + 1` when absent.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        components: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("input error: {first}");
            return EXIT_INPUT;
        }
    };
    let out = match cli.command {
        Command::SolveSphere(a) => cmd_solve(Kind::Sphere, &a),
        Command::SolveSlab(a) => cmd_solve(Kind::Slab, &a),
        Command::SolveWedge(a) => cmd_solve(Kind::Wedge, &a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Gen(g) => cmd_gen(g),
        Command::Selftest { seed } => Ok(cmd_selftest(seed)),
    };
    match out {
        Ok((code, line)) => {
            eprintln!("{line}");
            code
        }
        Err(e) => {
            eprintln!("input error: {e}");
            EXIT_INPUT
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Sphere,
    Slab,
    Wedge,
}

impl Kind {
    fn command(self) -> &'static str {
        match self {
            Kind::Sphere => "solve-sphere",
            Kind::Slab => "solve-slab",
            Kind::Wedge => "solve-wedge",
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_tol(tol: f64) -> Result<f64> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(Error::Invalid(format!("--tol {tol} must be positive")))
    }
}

/// Oracle residuals of `partition`, with closed counting when `h = 0`.
pub fn check_partition(assignments: &[AssignmentSpec], partition: &Partition, h: f64, tol: f64) -> Result<VerifyReport> {
    let s = if h == 0.0 { SmoothingSpec::discrete() } else { SmoothingSpec::new(h)? };
    match partition {
        Partition::Sphere(p) => verify_sphere(assignments, p, s, tol),
        Partition::Slab(p) => verify_slab(assignments, p, s, tol),
        Partition::Wedge { frame, wedge } => verify_wedge(assignments, wedge, frame, s, tol),
    }
}

fn line_counts(sc: &Scenario, partition: &Partition) -> Option<LineCounts> {
    match partition {
        Partition::Sphere(p) if sc.d == 3 && sc.k == 2 => count_families(&sc.line_families()?, p).ok(),
        _ => None,
    }
}

struct Attempt {
    partition: Option<Partition>,
    report: RunReport,
}

fn run_report(rep: &SolveReport, h: f64) -> RunReport {
    RunReport {
        strategy: rep.strategy.clone(),
        converged: rep.converged,
        ratio: rep.ratio,
        iterations: rep.iterations,
        evaluations: rep.evaluations,
        walltime: rep.wall_time,
        h,
        path_lost: rep.path.as_ref().and_then(|p| p.reason.clone()),
    }
}

fn wedge_report(sol: &WedgeSolution, strategy: &str, eps: f64, clock: Instant) -> RunReport {
    RunReport {
        strategy: strategy.into(),
        converged: sol.ratio <= eps,
        ratio: sol.ratio / eps,
        iterations: 0,
        evaluations: 0,
        walltime: clock.elapsed().as_secs_f64(),
        h: sol.h,
        path_lost: None,
    }
}

/// Solves the sphere or slab map at bandwidth `h`.
fn attempt(kind: Kind, sc: &Scenario, specs: &[AssignmentSpec], h: f64) -> Result<Attempt> {
    let prescribed = sc.prescribed_vectors().unwrap_or_else(|| default_prescribed(sc.d, sc.k));
    let s = SmoothingSpec::new(h)?;
    let cfg = sc.solver_config();
    let (rep, partition) = match kind {
        Kind::Sphere => {
            let map = SphereTestMap::new(sc.d, sc.k, specs.to_vec(), prescribed, s)?;
            let rep = solve(&map, &cfg);
            let part = map.partition(&rep.point).ok().map(Partition::Sphere);
            (rep, part)
        }
        Kind::Slab => {
            let map = SlabTestMap::new(sc.d, sc.k, specs.to_vec(), prescribed, s)?;
            let rep = solve(&map, &cfg);
            let part = map.partition(&rep.point).ok().map(Partition::Slab);
            (rep, part)
        }
        Kind::Wedge => unreachable!("wedges have their own solvers"),
    };
    Ok(Attempt { partition, report: run_report(&rep, h) })
}

/// Sphere or slab: one solve at `h > 0`, or halving from [`DISCRETE_H0`] until closed counting passes.
fn solve_map(kind: Kind, sc: &Scenario, specs: &[AssignmentSpec], tol: f64) -> Result<Attempt> {
    if sc.smoothing_h > 0.0 {
        return attempt(kind, sc, specs, sc.smoothing_h);
    }
    let mut h = DISCRETE_H0;
    let mut best: Option<Attempt> = None;
    for _ in 0..=DISCRETE_HALVINGS {
        let a = attempt(kind, sc, specs, h)?;
        if a.report.converged {
            if let Some(p) = &a.partition {
                let pass = check_partition(specs, p, 0.0, tol).map(|r| r.pass).unwrap_or(false);
                best = Some(a);
                if pass {
                    break;
                }
            }
        } else if best.is_none() {
            best = Some(a);
        }
        h *= 0.5;
    }
    Ok(best.expect("at least one attempt"))
}

fn solve_wedge(sc: &Scenario, specs: &[AssignmentSpec]) -> Result<Attempt> {
    let clock = Instant::now();
    let cfg = sc.solver_config();
    if specs.len() != sc.d {
        return Err(Error::Invalid(format!("solve-wedge needs d = {} assignments, got {}", sc.d, specs.len())));
    }
    let (sol, strategy) = if sc.d == 2 {
        let clouds = sc
            .projection_clouds()
            .ok_or_else(|| Error::Invalid("planar wedges need projection assignments".into()))?;
        if sc.smoothing_h == 0.0 {
            let h0 = 0.05 * spread(&clouds).max(1e-12);
            (planar_wedge_limit(&clouds[0], &clouds[1], h0, 60, 1e-12)?, "brent+halving")
        } else {
            (planar_wedge_solve(&clouds[0], &clouds[1], sc.smoothing()?)?, "brent")
        }
    } else {
        if sc.smoothing_h == 0.0 {
            return Err(Error::Invalid("solve-wedge needs smoothing_h > 0 when d >= 3".into()));
        }
        let map = WedgeTestMap::new(sc.d, specs.to_vec(), sc.smoothing()?)?;
        (wedge_solve(&map, cfg.eps_mass, cfg.seed)?, "grid+lm")
    };
    let mut report = wedge_report(&sol, strategy, cfg.eps_mass, clock);
    if sc.d == 2 && sc.smoothing_h == 0.0 {
        report.converged = sol.closed_ok;
    }
    Ok(Attempt { partition: Some(Partition::Wedge { frame: sol.frame, wedge: sol.wedge }), report })
}

fn emit_plot(prefix: &Path, specs: &[AssignmentSpec], partition: &Partition) -> Result<()> {
    let data = plot::plot_data(specs, partition)?;
    let with_ext = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    std::fs::write(with_ext(".csv"), plot::csv(&data))?;
    std::fs::write(with_ext(".svg"), plot::svg(&data, partition))?;
    Ok(())
}

fn cmd_solve(kind: Kind, a: &SolveArgs) -> Result<(i32, String)> {
    let mut sc = Scenario::parse(&read(&a.scenario)?)?;
    if let Some(s) = a.seed {
        sc.seed = s;
    }
    if let Some(h) = a.h {
        sc.smoothing_h = h;
    }
    if let Some(s) = a.strategy {
        sc.solver.strategy = s;
    }
    sc.check()?;
    let tol = check_tol(a.tol.unwrap_or(DEFAULT_TOL))?;
    let specs = sc.specs()?;
    let att = match kind {
        Kind::Wedge => solve_wedge(&sc, &specs)?,
        _ => solve_map(kind, &sc, &specs, tol)?,
    };
    let verify_h = sc.smoothing_h;
    let vr = match &att.partition {
        Some(p) => Some(check_partition(&specs, p, verify_h, tol)?),
        None => None,
    };
    let optimality = if !att.report.converged && specs.len() > sc.d + 1 {
        sc.projection_clouds()
            .and_then(|c| optimality_scan(&c, sc.k, &GridSpec { seed: sc.seed, ..GridSpec::default() }).ok())
    } else {
        None
    };
    let counts = att.partition.as_ref().and_then(|p| line_counts(&sc, p));
    let pass = vr.as_ref().is_some_and(|r| r.pass) && counts.as_ref().is_none_or(LineCounts::halves);
    let result = ResultFile {
        version: FORMAT_VERSION,
        command: kind.command().into(),
        solution: att.partition.as_ref().map(Solution::from_partition),
        residuals: vr.as_ref().map(|r| r.residuals.clone()).unwrap_or_default(),
        totals: specs.iter().map(AssignmentSpec::total).collect(),
        tol,
        verify_h,
        pass,
        report: att.report,
        optimality,
        line_counts: counts,
        scenario: sc,
    };
    write_or_print(a.out.as_deref(), &result.to_json())?;
    if let (Some(prefix), Some(p)) = (&a.plot, &att.partition) {
        if let Err(e) = emit_plot(prefix, &specs, p) {
            eprintln!("plot skipped: {e}");
        }
    }
    let worst = vr.as_ref().map_or(f64::INFINITY, VerifyReport::max_relative);
    Ok(if !result.report.converged {
        let extra = result.optimality.as_ref().map(|o| format!(", optimality scan delta {:.3e}", o.delta)).unwrap_or_default();
        (EXIT_NO_ZERO, format!("no zero: {} stopped at ratio {:.3e}{extra}", result.report.strategy, result.report.ratio))
    } else if !pass {
        (EXIT_VERIFY, format!("verification failed: max relative residual {worst:.3e} > {tol:.1e}"))
    } else {
        (EXIT_OK, format!("ok: max relative residual {worst:.3e} <= {tol:.1e} ({})", result.report.strategy))
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<(i32, String)> {
    let mut res = ResultFile::parse(&read(&a.scenario)?)?;
    let tol = check_tol(a.tol.unwrap_or(res.tol))?;
    let Some(sol) = &res.solution else {
        return Ok((EXIT_VERIFY, "verification failed: result file holds no solution".into()));
    };
    let partition = sol.partition()?;
    let specs = res.scenario.specs()?;
    let vr = check_partition(&specs, &partition, res.verify_h, tol)?;
    let drift = if vr.residuals.len() == res.residuals.len() {
        vr.residuals
            .iter()
            .zip(&res.residuals)
            .zip(&vr.totals)
            .fold(0.0, |m: f64, ((x, y), w)| m.max((x - y).abs() / w.max(1.0)))
    } else {
        f64::INFINITY
    };
    let counts = line_counts(&res.scenario, &partition);
    let pass = vr.pass && counts.as_ref().is_none_or(LineCounts::halves);
    if let Some(prefix) = &a.plot {
        if let Err(e) = emit_plot(prefix, &specs, &partition) {
            eprintln!("plot skipped: {e}");
        }
    }
    let worst = vr.max_relative();
    res.residuals = vr.residuals;
    res.tol = tol;
    res.pass = pass;
    res.line_counts = counts;
    if let Some(out) = &a.out {
        write_or_print(Some(out), &res.to_json())?;
    }
    Ok(if drift > REPRODUCE_TOL {
        (EXIT_VERIFY, format!("verification failed: stored residuals differ by {drift:.3e}"))
    } else if !pass {
        (EXIT_VERIFY, format!("verification failed: max relative residual {worst:.3e} > {tol:.1e}"))
    } else {
        (EXIT_OK, format!("ok: max relative residual {worst:.3e} <= {tol:.1e}, residuals reproduced to {drift:.1e}"))
    })
}

fn cmd_gen(g: GenCommand) -> Result<(i32, String)> {
    let (sc, out, what) = match g {
        GenCommand::Counterexample { d, k, n, seed, out } => {
            if d == 0 || k == 0 || k > d || n == 0 {
                return Err(Error::Invalid(format!("need 1 <= k <= d and n >= 1, got d = {d}, k = {k}, n = {n}")));
            }
            let inst = gen_counterexample(d, k, n, seed);
            let h = 0.05 * spread(&inst.clouds);
            (Scenario::new(d, k, h, &inst.assignments(), seed), out, format!("counterexample with {} assignments", d + 2))
        }
        GenCommand::Lines { n, seed, out } => {
            if n == 0 {
                return Err(Error::Invalid("need n >= 1 lines per family".into()));
            }
            let inst = gen_line_families(n, seed);
            let mut sc = Scenario::new(3, 2, 0.0, &inst.assignments(), seed);
            sc.prescribed = Some(vec![vec![0.0, 0.0, 1.0]]);
            (sc, out, format!("4 line families of {n}"))
        }
        GenCommand::Gauss { d, k, count, n, components, seed, out } => {
            if d == 0 || k == 0 || k > d || n == 0 || components == 0 {
                return Err(Error::Invalid(format!("need 1 <= k <= d and n, components >= 1, got d = {d}, k = {k}")));
            }
            let count = count.unwrap_or(d + 1);
            let clouds: Vec<_> = (0..count as u64).map(|j| gen_gaussian_mixture(d, components, n, seed.wrapping_mul(100).wrapping_add(j))).collect();
            let h = 0.05 * spread(&clouds);
            let specs: Vec<AssignmentSpec> = clouds.into_iter().map(AssignmentSpec::Projection).collect();
            (Scenario::new(d, k, h, &specs, seed), out, format!("{count} Gaussian mixture clouds of {n} points"))
        }
    };
    write_or_print(out.as_deref(), &sc.to_json())?;
    Ok((EXIT_OK, format!("ok: wrote {what}")))
}

fn cmd_selftest(seed: u64) -> (i32, String) {
    let checks = selftest::run_all(seed);
    for c in &checks {
        println!("{} {}{}", if c.pass { "PASS" } else { "FAIL" }, c.name, if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) });
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed == 0 {
        (EXIT_OK, format!("ok: {} checks passed", checks.len()))
    } else {
        (EXIT_VERIFY, format!("selftest failed: {failed} of {} checks", checks.len()))
    }
}

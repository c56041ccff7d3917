//! The check subcommands.

use std::fmt::Write as _;

use lcks::atlas::{cross_chart_discrepancy, glue_invariance, localize, CocycleReport, CrossChart};
use lcks::dynamics::integrate_section;
use lcks::hj::{verify_hj_theorem, HjOptions, HjReport, Verdict};
use lcks::problem::{expand_grid, Problem};
use lcks::region::seeded_rng;
use lcks::structure::phase_scope;
use lcks::{Gauge, GridAxis, MultiTimeGrid};
use serde::Serialize;

use crate::{load_problem, CliError, CommonArgs, Envelope, Format, HjArgs, IntegrateArgs, Output, SolveArgs};

fn seed(a: &CommonArgs, problem: &Problem) -> u64 {
    a.seed.unwrap_or(problem.file.solver.seed)
}

fn json_only(a: &CommonArgs, command: &str) -> Result<(), CliError> {
    match a.format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::Usage(format!("{command} writes JSON reports only"))),
    }
}

/// Phase points from `--point`, checked against the domain, or seeded
/// samples.
fn phase_points(a: &CommonArgs, problem: &Problem, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
    if a.point.is_empty() {
        let count = a.points.unwrap_or(problem.file.solver.points);
        return Ok(problem.sample_points(count, seed));
    }
    let bundle = problem.bundle();
    for z in &a.point {
        if z.len() != bundle.dim() {
            return Err(CliError::Usage(format!(
                "point {z:?} has {} coordinates, the phase space has {}",
                z.len(),
                bundle.dim()
            )));
        }
        if !bundle.contains(z) {
            return Err(CliError::Usage(format!("point {z:?} lies outside the domain")));
        }
    }
    Ok(a.point.clone())
}

fn canonical_names(problem: &Problem) -> Result<Vec<String>, CliError> {
    Ok(phase_scope(problem.file.n, problem.file.k, None)?.names().to_vec())
}

pub(crate) fn check_structure(a: &CommonArgs) -> Result<Output, CliError> {
    json_only(a, "check-structure")?;
    let problem = load_problem(&a.problem)?;
    let seed = seed(a, &problem);
    let points = phase_points(a, &problem, seed)?;
    let tol = a.tol.unwrap_or(problem.file.solver.tolerance);
    let report = problem.bundle().verify_structure(&points, tol)?;
    let passed = report.passed;
    let text = Envelope::new("check-structure", &problem, seed, passed, report).to_json();
    Ok(Output::report(text, passed))
}

#[derive(Serialize)]
struct PointSolution {
    point: Vec<f64>,
    /// `fields[κ]` is `X_κ`.
    fields: Vec<Vec<f64>>,
    residual: f64,
}

#[derive(Serialize)]
struct HdwReport {
    gauge: Gauge,
    tolerance: f64,
    solutions: Vec<PointSolution>,
}

pub(crate) fn hdw(a: &SolveArgs) -> Result<Output, CliError> {
    let c = &a.common;
    let problem = load_problem(&c.problem)?;
    let seed = seed(c, &problem);
    let points = phase_points(c, &problem, seed)?;
    let gauge = a.gauge.unwrap_or(problem.file.solver.gauge);
    let tolerance = c.tol.unwrap_or(problem.file.solver.tolerance);
    let mut passed = true;
    let mut solutions = Vec::with_capacity(points.len());
    for z in points {
        let sol = problem.system.solve(&z, gauge)?;
        let scale = problem.system.rhs(&z)?.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        passed &= sol.residual <= tolerance * scale;
        solutions.push(PointSolution {
            point: z,
            fields: sol.fields,
            residual: sol.residual,
        });
    }
    let text = match c.format {
        Format::Json => {
            let report = HdwReport {
                gauge,
                tolerance,
                solutions,
            };
            Envelope::new("hdw", &problem, seed, passed, report).to_json()
        }
        Format::Csv => {
            let names = canonical_names(&problem)?;
            let mut header = names.clone();
            for kappa in 1..=problem.file.k {
                header.extend(names.iter().map(|v| format!("X{kappa}_{v}")));
            }
            header.push("residual".into());
            let mut text = header.join(",");
            text.push('\n');
            for s in &solutions {
                let row: Vec<String> = s
                    .point
                    .iter()
                    .chain(s.fields.iter().flatten())
                    .chain(std::iter::once(&s.residual))
                    .map(|v| format!("{v:?}"))
                    .collect();
                let _ = writeln!(text, "{}", row.join(","));
            }
            text
        }
    };
    Ok(Output::report(text, passed))
}

#[derive(Serialize)]
struct IntegrateReport {
    gauge: Gauge,
    start: Vec<f64>,
    grid: Vec<GridAxis>,
    /// Sweep order, 1-based.
    order: Vec<usize>,
    rows: usize,
    /// Rows actually reached; the others are written as NaN.
    reached: usize,
    /// Max `‖∂φ/∂t^κ − X_κ∘φ‖_∞` on the grid.
    hdw_residual: Option<f64>,
    /// Max distance to the grid swept in reversed order.
    path_defect: Option<f64>,
    /// Grid index at which the sweep left the domain.
    escaped_at: Option<Vec<usize>>,
}

pub(crate) fn integrate(a: &IntegrateArgs) -> Result<Output, CliError> {
    let c = &a.solve.common;
    let problem = load_problem(&c.problem)?;
    let file = &problem.file;
    let bundle = problem.bundle();
    let k = file.k;
    let start = match c.point.as_slice() {
        [] => file
            .solver
            .start
            .clone()
            .ok_or_else(|| CliError::Usage("no start point: pass --point or set solver.start".into()))?,
        [z] => z.clone(),
        _ => return Err(CliError::Usage("integrate takes a single --point".into())),
    };
    if start.len() != bundle.dim() || !bundle.contains(&start) {
        return Err(CliError::Usage(format!("start point {start:?} is not a point of the domain")));
    }
    let grid = expand_grid(a.grid.as_ref().map_or(&file.solver.grid, |g| &g.0), k)?;
    let order = a.order.as_ref().map_or_else(|| (0..k).collect(), |o| o.0.clone());
    let gauge = a.solve.gauge.unwrap_or(file.solver.gauge);
    let field = problem.system.field(gauge);
    let inside = |z: &[f64]| bundle.contains(z);

    let mut report = IntegrateReport {
        gauge,
        start: start.clone(),
        grid: grid.clone(),
        order: order.iter().map(|i| i + 1).collect(),
        rows: 0,
        reached: 0,
        hdw_residual: None,
        path_defect: None,
        escaped_at: None,
    };
    let (points, diagnostic): (MultiTimeGrid, Option<String>) =
        match integrate_section(&field, &start, &grid, &order, &inside) {
            Ok(section) => {
                report.hdw_residual = Some(section.hdw_residual);
                report.path_defect = Some(section.path_defect);
                (section.grid, None)
            }
            Err(lcks::Error::DomainEscape {
                index,
                partial: Some(partial),
            }) => {
                let message = format!("integral section left the domain at grid index {index:?}");
                report.escaped_at = Some(index);
                (*partial, Some(message))
            }
            Err(e) => return Err(e.into()),
        };
    let passed = diagnostic.is_none();
    report.rows = points.len();
    report.reached = (0..points.len()).filter(|&i| points.is_reached(i)).count();
    let seed = seed(c, &problem);
    let summary = Envelope::new("integrate", &problem, seed, passed, report).to_json();
    let output = match c.format {
        Format::Csv => Output {
            text: points.to_csv(&canonical_names(&problem)?),
            summary: Some(summary),
            diagnostic,
            passed,
        },
        Format::Json => Output {
            text: summary,
            summary: None,
            diagnostic,
            passed,
        },
    };
    Ok(output)
}

#[derive(Serialize)]
struct NamedHjReport {
    section: String,
    #[serde(flatten)]
    report: HjReport,
}

#[derive(Serialize)]
struct HjVerifyReport {
    gauge: Gauge,
    sections: Vec<NamedHjReport>,
}

pub(crate) fn hj_verify(a: &HjArgs) -> Result<Output, CliError> {
    let c = &a.solve.common;
    json_only(c, "hj-verify")?;
    let problem = load_problem(&c.problem)?;
    let file = &problem.file;
    let spec = file
        .hj
        .as_ref()
        .ok_or_else(|| CliError::Usage("problem file has no `hj` block".into()))?;
    let sections: Vec<_> = match &a.section {
        Some(name) => {
            let s = problem
                .section(name)
                .ok_or_else(|| CliError::Usage(format!("problem file has no section `{name}`")))?;
            vec![(name.clone(), s)]
        }
        None => problem.sections.iter().map(|(n, s)| (n.clone(), s)).collect(),
    };
    if sections.is_empty() {
        return Err(CliError::Usage("problem file declares no sections".into()));
    }
    let seed = seed(c, &problem);
    let points = if c.point.is_empty() {
        let count = c.points.unwrap_or(file.solver.points);
        spec.region.sample_many(count, &mut seeded_rng(seed))
    } else {
        for q in &c.point {
            if q.len() != file.n || !spec.region.contains(q) {
                return Err(CliError::Usage(format!("base point {q:?} is not in the hj region")));
            }
        }
        c.point.clone()
    };
    let opts = HjOptions {
        points,
        start: spec.start.clone(),
        grid: expand_grid(a.grid.as_ref().map_or(&spec.grid, |g| &g.0), file.k)?,
        region: spec.region.clone(),
        algebraic_tol: c.tol.unwrap_or(HjOptions::ALGEBRAIC_TOL),
        integration_tol: HjOptions::INTEGRATION_TOL,
    };
    let gauge = a.solve.gauge.unwrap_or(file.solver.gauge);
    let field = problem.system.field(gauge);
    let mut reports = Vec::with_capacity(sections.len());
    for (name, gamma) in sections {
        let report =
            verify_hj_theorem(&problem.system, &field, gamma, &opts).map_err(|e| e.in_field(format!("section `{name}`")))?;
        reports.push(NamedHjReport { section: name, report });
    }
    let passed = reports.iter().all(|r| r.report.verdict == Verdict::Pass);
    let report = HjVerifyReport {
        gauge,
        sections: reports,
    };
    Ok(Output::report(Envelope::new("hj-verify", &problem, seed, passed, report).to_json(), passed))
}

#[derive(Serialize)]
struct PatchReport {
    name: String,
    samples: usize,
    /// Max `‖θ − dσ_α‖`.
    lee_residual: f64,
    /// Max `‖dΩ^κ_α‖`; absent when `σ_α` does not integrate the Lee form.
    closedness: Option<f64>,
    glue_min_norm: Option<f64>,
    glue_darboux: Option<f64>,
    cross_chart: Option<CrossChart>,
    passed: bool,
}

#[derive(Serialize)]
struct AtlasReport {
    gauge: Gauge,
    tolerance: f64,
    cocycle: CocycleReport,
    patches: Vec<PatchReport>,
}

pub(crate) fn atlas_check(a: &SolveArgs) -> Result<Output, CliError> {
    let c = &a.common;
    json_only(c, "atlas-check")?;
    if !c.point.is_empty() {
        return Err(CliError::Usage("atlas-check samples its own points; drop --point".into()));
    }
    let problem = load_problem(&c.problem)?;
    let file = &problem.file;
    let (atlas, spec) = match (&problem.atlas, &file.atlas) {
        (Some(atlas), Some(spec)) => (atlas, spec),
        _ => return Err(CliError::Usage("problem file has no `atlas` block".into())),
    };
    let system = &problem.system;
    let seed = seed(c, &problem);
    let tolerance = c.tol.unwrap_or(file.solver.tolerance);
    let radius = file.solver.momentum_radius;
    let count = c.points.unwrap_or(file.solver.points);
    let gauge = a.gauge.unwrap_or(file.solver.gauge);

    let cocycle = atlas.cocycle(Some(system), spec.budget, seed, radius, tolerance)?;
    let mut rng = seeded_rng(seed);
    let mut patches = Vec::with_capacity(atlas.patches().len());
    for patch in atlas.patches() {
        let field = format!("patch `{}`", patch.name());
        let points = patch
            .sample_phase(system.bundle(), count, radius, &mut rng)
            .map_err(|e| e.in_field(field.clone()))?;
        let local = match localize(system, patch, &points, tolerance) {
            Ok(local) => local,
            Err(lcks::Error::NotExactOnPatch { residual, .. }) => {
                patches.push(PatchReport {
                    name: patch.name().to_string(),
                    samples: points.len(),
                    lee_residual: residual,
                    closedness: None,
                    glue_min_norm: None,
                    glue_darboux: None,
                    cross_chart: None,
                    passed: false,
                });
                continue;
            }
            Err(e) => return Err(e.in_field(field).into()),
        };
        let glue_min_norm = glue_invariance(system, &local, &points, Gauge::MinNorm)?;
        let glue_darboux = glue_invariance(system, &local, &points, Gauge::DarbouxDiagonal)?;
        let cross = cross_chart_discrepancy(system, patch, &local, &points, gauge)?;
        let full_ok = file.k > 1 || cross.full < tolerance;
        let passed = local.closedness < tolerance
            && local.lee_residual < tolerance
            && glue_min_norm < tolerance
            && glue_darboux < tolerance
            && cross.base < tolerance
            && cross.residual < tolerance
            && full_ok;
        patches.push(PatchReport {
            name: patch.name().to_string(),
            samples: points.len(),
            lee_residual: local.lee_residual,
            closedness: Some(local.closedness),
            glue_min_norm: Some(glue_min_norm),
            glue_darboux: Some(glue_darboux),
            cross_chart: Some(cross),
            passed,
        });
    }
    let passed = !cocycle.flagged && patches.iter().all(|p| p.passed);
    let report = AtlasReport {
        gauge,
        tolerance,
        cocycle,
        patches,
    };
    Ok(Output::report(Envelope::new("atlas-check", &problem, seed, passed, report).to_json(), passed))
}

//! The built-in punctured-plane pipeline.

use std::fmt::Write as _;

use lcks::atlas::{cross_chart_discrepancy, glue_invariance, localize};
use lcks::dynamics::{max_deviation, sweep};
use lcks::hj::{verify_hj_theorem, HjOptions, Verdict};
use lcks::problem::{expand_grid, Problem, ProblemFile};
use lcks::region::{seeded_rng, DEFAULT_SEED, GENERATOR};
use lcks::{Gauge, GridAxis, HdwSystem};
use serde::Serialize;

use crate::{write_file, CliError, DemoArgs, Format, Output};

/// Largest `k` for which the Hamilton–Jacobi lift is integrated; the grid
/// has `401^k` points.
const HJ_MAX_K: usize = 2;

#[derive(Serialize)]
struct Row {
    check: String,
    value: f64,
    relation: &'static str,
    bound: f64,
    passed: bool,
}

#[derive(Default)]
struct Table {
    rows: Vec<Row>,
}

impl Table {
    fn below(&mut self, check: impl Into<String>, value: f64, bound: f64) {
        self.push(check, value, "<", bound, value < bound);
    }

    fn above(&mut self, check: impl Into<String>, value: f64, bound: f64) {
        self.push(check, value, ">", bound, value > bound);
    }

    fn equal(&mut self, check: impl Into<String>, value: usize, want: usize) {
        self.push(check, value as f64, "=", want as f64, value == want);
    }

    fn push(&mut self, check: impl Into<String>, value: f64, relation: &'static str, bound: f64, passed: bool) {
        self.rows.push(Row {
            check: check.into(),
            value,
            relation,
            bound,
            passed,
        });
    }

    fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.check.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.rows {
            let pad = " ".repeat(width - r.check.chars().count());
            let (value, bound) = if r.relation == "=" {
                (format!("{}", r.value), format!("{}", r.bound))
            } else {
                (format!("{:.3e}", r.value), format!("{:.1e}", r.bound))
            };
            let status = if r.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{}{pad}  {value:>10} {} {bound:<7} {status}", r.check, r.relation);
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::from("check,value,relation,bound,passed\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:?},{},{:?},{}", r.check, r.value, r.relation, r.bound, r.passed);
        }
        out
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    k: usize,
    generator: &'a str,
    seed: u64,
    passed: bool,
    checks: &'a [Row],
}

pub(crate) fn punctured_plane(a: &DemoArgs) -> Result<Output, CliError> {
    let k = a.k as usize;
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let file = ProblemFile::punctured_plane(k);
    if let Some(path) = &a.out {
        write_file(path, &file.to_json())?;
    }
    let problem = file.build()?;
    let mut table = Table::default();
    structure(&mut table, &problem, a.points, seed)?;
    solver(&mut table, &problem, a.points, seed)?;
    if k == 1 {
        energy(&mut table, &problem.system)?;
    }
    if k <= HJ_MAX_K {
        hamilton_jacobi(&mut table, &problem, a.points, seed)?;
    }
    atlas(&mut table, &problem, a.points, seed)?;

    let passed = table.rows.iter().all(|r| r.passed);
    let text = match a.format {
        None => {
            let mut text = format!("punctured plane, k = {k}, {GENERATOR} seed {seed}\n");
            text.push_str(&table.render());
            if k > HJ_MAX_K {
                let _ = writeln!(text, "Hamilton-Jacobi checks skipped for k > {HJ_MAX_K}");
            }
            let _ = writeln!(text, "{}", if passed { "all checks passed" } else { "some checks FAILED" });
            text
        }
        Some(Format::Csv) => table.csv(),
        Some(Format::Json) => {
            let summary = Summary {
                command: "demo punctured-plane",
                k,
                generator: GENERATOR,
                seed,
                passed,
                checks: &table.rows,
            };
            let mut text = serde_json::to_string_pretty(&summary).expect("summaries serialize");
            text.push('\n');
            text
        }
    };
    Ok(Output::report(text, passed))
}

fn structure(t: &mut Table, p: &Problem, count: usize, seed: u64) -> Result<(), CliError> {
    let points = p.sample_points(count, seed);
    let r = p.bundle().verify_structure(&points, 1e-8)?;
    t.below("structure: closure d_θΩ", r.closure, 1e-8);
    t.equal("structure: joint kernel dimension", r.stacked_kernel_dim, 0);
    t.below("structure: isotropy on V", r.isotropy, 1e-12);
    for (i, dim) in r.single_kernel_dims.iter().enumerate() {
        let which = if i == 0 { "min" } else { "max" };
        t.equal(format!("structure: single-form kernel ({which})"), *dim, r.expected_single_kernel_dim);
    }
    Ok(())
}

fn solver(t: &mut Table, p: &Problem, count: usize, seed: u64) -> Result<(), CliError> {
    let k = p.file.k;
    let points = p.sample_points(count, seed);
    let (mut base, mut traces, mut residual) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut kernel = (usize::MAX, 0);
    for gauge in [Gauge::MinNorm, Gauge::DarbouxDiagonal] {
        for z in &points {
            let sol = p.system.solve(z, gauge)?;
            residual = residual.max(sol.residual);
            let (x, y) = (z[0], z[1]);
            let r2 = x * x + y * y;
            let (mut c_sum, mut d_sum, mut c_trace, mut d_trace) = (0.0, 0.0, 0.0, 0.0);
            for kappa in 0..k {
                let (px, py) = (z[2 + 2 * kappa], z[3 + 2 * kappa]);
                base = base.max((sol.fields[kappa][0] - px).abs()).max((sol.fields[kappa][1] - py).abs());
                c_sum += (y * py * py - y * px * px + 2.0 * x * px * py) / r2;
                d_sum += (x * py * py - x * px * px - 2.0 * y * px * py) / r2;
                c_trace += sol.fields[kappa][2 + 2 * kappa];
                d_trace += sol.fields[kappa][3 + 2 * kappa];
            }
            traces = traces.max((c_trace - c_sum).abs()).max((d_trace - d_sum).abs());
        }
    }
    for z in &points {
        let dim = p.system.kernel_basis(z)?.len();
        kernel = (kernel.0.min(dim), kernel.1.max(dim));
    }
    t.below("hdw: base components vs momenta", base, 1e-9);
    t.below("hdw: momentum traces vs closed form", traces, 1e-7);
    t.below("hdw: solver residual", residual, 1e-9);
    let want = 2 * (k * k - 1);
    t.equal("hdw: kernel dimension (min)", kernel.0, want);
    t.equal("hdw: kernel dimension (max)", kernel.1, want);
    Ok(())
}

fn energy_drift(system: &HdwSystem, steps: usize) -> Result<f64, CliError> {
    let x = system.darboux_field()?;
    let axes = [GridAxis {
        steps,
        h: 1.0 / steps as f64,
    }];
    let inside = |z: &[f64]| system.bundle().contains(z);
    let grid = sweep(&x, &[1.0, 0.0, 1.0, 0.0], &axes, &[0], &inside)?;
    let h = system.hamiltonian();
    Ok(max_deviation(&grid, |z| Ok((-2.0 * z[1].atan2(z[0])).exp() * h.eval(z)?))?)
}

fn energy(t: &mut Table, system: &HdwSystem) -> Result<(), CliError> {
    let coarse = energy_drift(system, 1000)?;
    let fine = energy_drift(system, 2000)?;
    t.below("energy: drift of e^{-2φ}H, h = 1e-3", coarse, 1e-6);
    t.above("energy: drift ratio h -> h/2", coarse / fine, 8.0);
    Ok(())
}

fn hamilton_jacobi(t: &mut Table, p: &Problem, count: usize, seed: u64) -> Result<(), CliError> {
    let spec = p.file.hj.as_ref().expect("built-in problem has an hj block");
    let opts = HjOptions {
        points: spec.region.sample_many(count, &mut seeded_rng(seed)),
        start: spec.start.clone(),
        grid: expand_grid(&spec.grid, p.file.k)?,
        region: spec.region.clone(),
        algebraic_tol: HjOptions::ALGEBRAIC_TOL,
        integration_tol: HjOptions::INTEGRATION_TOL,
    };
    let x = p.system.field(Gauge::MinNorm);
    let positive = p.section("positive").expect("built-in section");
    let r = verify_hj_theorem(&p.system, &x, positive, &opts)?;
    t.below("hj positive: d(H∘γ)", r.hj, 1e-7);
    t.below("hj positive: relatedness", r.relatedness, 1e-7);
    t.below("hj positive: lift residual", r.lift, 1e-6);
    t.equal("hj positive: consistent verdict", (r.verdict == Verdict::Pass) as usize, 1);
    let negative = p.section("negative").expect("built-in section");
    let r = verify_hj_theorem(&p.system, &x, negative, &opts)?;
    t.above("hj negative: d(H∘γ)", r.hj, 1e-2);
    t.above("hj negative: relatedness", r.relatedness, 1e-3);
    t.above("hj negative: lift residual", r.lift, 1e-3);
    t.equal("hj negative: consistent verdict", (r.verdict == Verdict::Pass) as usize, 1);
    Ok(())
}

fn atlas(t: &mut Table, p: &Problem, count: usize, seed: u64) -> Result<(), CliError> {
    let atlas = p.atlas.as_ref().expect("built-in problem has an atlas");
    let radius = p.file.solver.momentum_radius;
    let cocycle = atlas.cocycle(Some(&p.system), 500, seed, radius, 1e-10)?;
    t.below("atlas: cocycle defect", cocycle.defect, 1e-12);
    t.below("atlas: transition variation", cocycle.transition_variation, 1e-10);
    let polar = &atlas.patches()[0];
    let points = polar.sample_phase(p.bundle(), count, radius, &mut seeded_rng(seed))?;
    let local = localize(&p.system, polar, &points, 1e-8)?;
    t.below("atlas: closedness of local forms", local.closedness, 1e-8);
    for gauge in [Gauge::MinNorm, Gauge::DarbouxDiagonal] {
        let gap = glue_invariance(&p.system, &local, &points, gauge)?;
        t.below(format!("atlas: global vs local solution ({gauge})"), gap, 1e-8);
    }
    let cross = cross_chart_discrepancy(&p.system, polar, &local, &points, Gauge::MinNorm)?;
    if p.file.k == 1 {
        t.below("atlas: polar vs Cartesian solution", cross.full, 1e-7);
    } else {
        t.below("atlas: polar vs Cartesian base components", cross.base, 1e-7);
        t.below("atlas: residual of pushed-forward solution", cross.residual, 1e-8);
    }
    Ok(())
}

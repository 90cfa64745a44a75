use std::path::{Path, PathBuf};

use gasket_core::blowup::BlowupRegion;
use gasket_core::io::{load_measure, load_model};
use gasket_core::solver::{
    solve_schrodinger_direct, solve_schrodinger_picard, GreenOperator, SOLVE_TOLERANCE,
};
use gasket_core::verification::{
    equicontinuity_suite, harnack_suite, hopf_suite, maximum_principle_suite,
    standard_harnack_potentials, CheckReport, HarnackReport, Region, Verdict, HARNACK_SPREAD_TOLERANCE,
};
use gasket_core::{Address, DirichletProblem, Method, Model, RadonMeasure, Solution, Word};
use log::info;
use serde::Serialize;

use super::output::{
    cloud_table, point_cloud, tagged_path, Artifact, MeasureInput, RunConfig, Table, VertexValue,
};
use super::{
    Failure, Format, GreenArgs, InfoArgs, MethodArg, OutputArgs, Outcome, ResistanceArgs, SolveArgs,
    Suite, VerifyArgs, MAX_LEVEL,
};

const PICARD_TOLERANCE: f64 = 1e-12;
const PICARD_MAX_ITERATIONS: usize = 100_000;
/// Largest accepted sup-norm difference between the direct and Picard solutions.
const CROSS_METHOD_TOLERANCE: f64 = 1e-8;

fn usage<T>(message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(message.into()))
}

fn check_level(n: usize) -> Result<(), Failure> {
    if n > MAX_LEVEL {
        return usage(format!("level {n} is outside [0, {MAX_LEVEL}]"));
    }
    Ok(())
}

fn read_measure(path: &Path) -> Result<MeasureInput, Failure> {
    Ok(MeasureInput {
        path: path.display().to_string(),
        measure: load_measure(path)?,
    })
}

fn blowup_region(model: &Model, digits: Option<&str>) -> Result<Option<BlowupRegion>, Failure> {
    let Some(digits) = digits else { return Ok(None) };
    let word: Word = digits.parse()?;
    Ok(Some(BlowupRegion::new(model, word)?))
}

/// Canonical form of a command-line vertex, required to lie in `V_n`.
fn vertex(model: &Model, text: &str, n: usize) -> Result<(Address, usize), Failure> {
    let raw: Address = text.parse()?;
    let address = model.hierarchy().canonicalize(&raw.word, raw.label)?;
    let index = model.hierarchy().require_index(&address, n)?;
    Ok((address, index))
}

/// Table on stdout unless an artifact destination or format was asked for.
fn present(artifact: &Artifact, output: &OutputArgs, table: impl FnOnce()) -> Result<(), Failure> {
    let format = Format::resolve(output.format, output.out.as_deref());
    match (&output.out, output.format) {
        (Some(path), _) => {
            table();
            artifact.emit(Some(path), format)
        }
        (None, Some(_)) => artifact.emit(None, format),
        (None, None) => {
            table();
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct BlowupInfo<'a> {
    prefix: String,
    reversal: String,
    resistance_scale: f64,
    measure_scale: f64,
    #[serde(skip)]
    region: &'a BlowupRegion,
}

impl<'a> BlowupInfo<'a> {
    fn new(region: &'a BlowupRegion) -> Self {
        BlowupInfo {
            prefix: region.prefix().to_string(),
            reversal: region.reversal().to_string(),
            resistance_scale: region.resistance_scale(),
            measure_scale: region.measure_scale(),
            region,
        }
    }
}

#[derive(Serialize)]
struct SolveBody<'a> {
    level: usize,
    method: Method,
    residual: f64,
    iterations: Option<usize>,
    contraction_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_method_difference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blowup: Option<&'a BlowupInfo<'a>>,
    vertices: Vec<VertexValue>,
}

fn solve_with(
    model: &Model,
    problem: &DirichletProblem,
    region: Option<&BlowupRegion>,
    method: Method,
) -> Result<Solution, Failure> {
    let target = match region {
        Some(r) => r.embed_problem(model, problem)?,
        None => problem.clone(),
    };
    let solution = match method {
        Method::Direct => solve_schrodinger_direct(model, &target)?,
        Method::Picard => solve_schrodinger_picard(model, &target, PICARD_TOLERANCE, PICARD_MAX_ITERATIONS)?,
    };
    Ok(match region {
        Some(r) => r.transfer_solution(model, problem, &solution)?,
        None => solution,
    })
}

pub fn solve(a: SolveArgs) -> Outcome {
    check_level(a.level)?;
    let model = load_model(&a.fractal, a.level)?;
    let b = model.structure().boundary_size();
    let boundary = if a.boundary.is_empty() { vec![0.0; b] } else { a.boundary.clone() };
    if boundary.len() != b {
        return usage(format!("--boundary needs {b} values, got {}", boundary.len()));
    }
    let methods = match a.method {
        MethodArg::Direct => vec![Method::Direct],
        MethodArg::Picard => vec![Method::Picard],
        MethodArg::Both => vec![Method::Direct, Method::Picard],
    };
    let out = a.output.out.as_deref();
    if methods.len() > 1 && out.is_none() {
        return usage("--method both writes one file per method and needs --out");
    }
    let sigma = a.sigma.as_deref().map(read_measure).transpose()?;
    let nu = a.nu.as_deref().map(read_measure).transpose()?;
    let region = blowup_region(&model, a.blowup.as_deref())?;

    let mut problem = DirichletProblem::on_boundary(&model, a.level, boundary.clone())?
        .with_refinement_depth(a.quadrature_depth);
    if let Some(s) = &sigma {
        problem = problem.with_source(s.measure.clone());
    }
    if let Some(v) = &nu {
        problem = problem.with_potential(v.measure.clone());
    }

    let mut config = RunConfig::new("solve", &a.fractal, a.output.seed).tolerance("solve_residual", SOLVE_TOLERANCE);
    config.level = Some(a.level);
    config.method = Some(format!("{:?}", a.method).to_lowercase());
    config.boundary = Some(boundary);
    config.sigma = sigma;
    config.nu = nu;
    config.quadrature_depth = Some(a.quadrature_depth);
    config.blowup = a.blowup.clone();
    if a.method != MethodArg::Direct {
        config = config.tolerance("picard_step", PICARD_TOLERANCE);
    }
    if methods.len() > 1 {
        config = config.tolerance("cross_method", CROSS_METHOD_TOLERANCE);
    }

    let solutions = methods
        .iter()
        .map(|&m| {
            info!("solving at level {} by the {m} method", a.level);
            solve_with(&model, &problem, region.as_ref(), m)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let difference = match solutions.as_slice() {
        [d, p] => Some(d.function.sup_distance(&p.function)),
        _ => None,
    };

    let info = region.as_ref().map(BlowupInfo::new);
    let coordinates = |x: &Address| match &info {
        Some(i) => i.region.coordinates(&model, x).ok(),
        None => model.structure().coordinates(x).ok(),
    };
    let format = Format::resolve(a.output.format, out);
    for solution in &solutions {
        let cloud = point_cloud(&model, a.level, solution.values(), coordinates)?;
        let table = cloud_table(&cloud);
        let body = SolveBody {
            level: a.level,
            method: solution.method,
            residual: solution.residual,
            iterations: solution.iterations,
            contraction_factor: solution.contraction_factor,
            cross_method_difference: difference,
            blowup: info.as_ref(),
            vertices: cloud,
        };
        let artifact = Artifact::new(config.clone(), body, table)?;
        let path = match out {
            Some(p) if methods.len() > 1 => Some(tagged_path(p, &solution.method.to_string(), format)),
            Some(p) => Some(p.to_path_buf()),
            None => None,
        };
        artifact.emit(path.as_deref(), format)?;
        if let Some(p) = &path {
            println!(
                "{}: residual {:.3e}{}{} -> {}",
                solution.method,
                solution.residual,
                solution.iterations.map_or(String::new(), |k| format!(", {k} iterations")),
                solution.contraction_factor.map_or(String::new(), |k| format!(", kappa {k:.6}")),
                p.display()
            );
        }
    }
    if let Some(d) = difference {
        if out.is_some() {
            println!("direct vs picard sup difference {d:.3e}");
        }
        if !(d <= CROSS_METHOD_TOLERANCE) {
            return Err(Failure::Numerical(format!(
                "direct and Picard solutions differ by {d:.3e} (tolerance {CROSS_METHOD_TOLERANCE:e})"
            )));
        }
    }
    Ok(())
}

fn print_check(report: &CheckReport) {
    println!("{}", report.summary());
    for (branch, count) in &report.branches {
        println!("  branch {branch}: {count}");
    }
    if let Some(w) = &report.witness {
        println!(
            "  worst: instance {} seed {} vertex {} margin {:.3e}",
            w.instance,
            w.seed,
            w.vertex.as_deref().unwrap_or("-"),
            w.margin
        );
    }
    for w in &report.failures {
        println!(
            "  FAIL instance {} seed {} vertex {} margin {:.3e}{}",
            w.instance,
            w.seed,
            w.vertex.as_deref().unwrap_or("-"),
            w.margin,
            w.note.as_deref().map_or(String::new(), |n| format!(" ({n})"))
        );
    }
    if !report.inconclusive_instances.is_empty() {
        println!("  inconclusive instances: {:?}", report.inconclusive_instances);
    }
}

fn failure_table(report: &CheckReport) -> Table {
    Table {
        header: vec!["instance", "seed", "vertex", "margin", "note"],
        rows: report
            .failures
            .iter()
            .map(|w| {
                vec![
                    w.instance.to_string(),
                    w.seed.to_string(),
                    w.vertex.clone().unwrap_or_default(),
                    gasket_core::io::format_float(w.margin),
                    w.note.clone().unwrap_or_default(),
                ]
            })
            .collect(),
    }
}

fn print_harnack(report: &HarnackReport) {
    println!("region cells: {}", report.region.join(" "));
    println!(
        "{:<10} {:>5} {:>7} {:>14} {:>14} {:>14} {:>14}",
        "potential", "level", "samples", "C_hat", "median", "mean", "min_E u"
    );
    for s in &report.series {
        for e in &s.estimates {
            println!(
                "{:<10} {:>5} {:>7} {:>14.8} {:>14.8} {:>14.8} {:>14.6e}",
                s.potential, e.level, e.samples, e.constant, e.median_ratio, e.mean_ratio, e.smallest_minimum
            );
        }
        println!(
            "{:<10} spread {:.3e} (tolerance {:.2}) {}",
            s.potential,
            s.spread,
            report.spread_tolerance,
            format!("{:?}", s.verdict).to_lowercase()
        );
    }
    println!("verdict {}", format!("{:?}", report.verdict).to_lowercase());
}

fn harnack_table(report: &HarnackReport) -> Table {
    let f = gasket_core::io::format_float;
    Table {
        header: vec![
            "potential", "level", "samples", "constant", "median_ratio", "mean_ratio", "smallest_minimum", "spread",
            "verdict",
        ],
        rows: report
            .series
            .iter()
            .flat_map(|s| {
                s.estimates.iter().map(move |e| {
                    vec![
                        s.potential.clone(),
                        e.level.to_string(),
                        e.samples.to_string(),
                        f(e.constant),
                        f(e.median_ratio),
                        f(e.mean_ratio),
                        f(e.smallest_minimum),
                        f(s.spread),
                        format!("{:?}", e.verdict).to_lowercase(),
                    ]
                })
            })
            .collect(),
    }
}

pub fn verify(a: VerifyArgs) -> Outcome {
    let levels = match (a.levels.is_empty(), a.suite) {
        (true, Suite::Harnack) => vec![4, 5, 6],
        (true, _) => vec![4],
        (false, _) => a.levels.clone(),
    };
    if a.suite != Suite::Harnack && levels.len() > 1 {
        return usage(format!("suite {} takes a single level", a.suite.name()));
    }
    if a.suite != Suite::Harnack && a.nu.is_some() {
        return usage("--nu applies to the harnack suite only");
    }
    for &n in &levels {
        check_level(n)?;
    }
    let max_level = levels.iter().copied().max().unwrap_or(0);
    let model = load_model(&a.fractal, max_level)?;
    let region = blowup_region(&model, a.blowup.as_deref())?;
    let seed = a.output.seed;

    let mut config = RunConfig::new("verify", &a.fractal, seed);
    config.suite = Some(a.suite.name().to_string());
    config.blowup = a.blowup.clone();
    config.count = Some(a.count);
    if a.suite == Suite::Harnack {
        config.levels = Some(levels.clone());
    } else {
        config.level = Some(levels[0]);
    }
    let n = levels[0];
    info!("running {} at levels {levels:?} with seed {seed}", a.suite.name());

    if a.suite == Suite::Harnack {
        let nu = a.nu.as_deref().map(read_measure).transpose()?;
        let mut potentials: Vec<(String, RadonMeasure)> = match &nu {
            Some(m) => vec![(m.path.clone(), m.measure.clone())],
            None => standard_harnack_potentials(),
        };
        if let Some(r) = &region {
            // potentials are given on K_m; the estimate runs on the embedded problem
            for (_, p) in &mut potentials {
                *p = p.scaled(1.0 / r.resistance_scale());
            }
        }
        config.region_level = Some(a.region_level);
        config.nu = nu;
        config = config.tolerance("spread", HARNACK_SPREAD_TOLERANCE);
        let e = Region::away_from_boundary(&model, a.region_level)?;
        let report = harnack_suite(&model, &e, &levels, &potentials, a.count, seed)?;
        let artifact = Artifact::new(config, &report, harnack_table(&report))?;
        present(&artifact, &a.output, || print_harnack(&report))?;
        if report.verdict != Verdict::Pass {
            let worst = report
                .series
                .iter()
                .filter(|s| s.verdict != Verdict::Pass)
                .map(|s| format!("{} (spread {:.3e})", s.potential, s.spread))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Failure::CheckFailed(format!("Harnack estimates unstable for {worst}")));
        }
        return Ok(());
    }

    let report = match a.suite {
        Suite::Mp | Suite::StrongMp => {
            let (weak, strong) = maximum_principle_suite(&model, n, a.count, seed, region.as_ref())?;
            if a.suite == Suite::Mp { weak } else { strong }
        }
        Suite::Hopf => hopf_suite(&model, n, a.count, seed, region.as_ref())?,
        Suite::Equicontinuity => {
            config.pairs = Some(a.pairs);
            equicontinuity_suite(&model, n, a.count, a.pairs, seed, region.as_ref())?
        }
        Suite::Harnack => unreachable!("handled above"),
    };
    for (k, v) in &report.tolerances {
        config = config.tolerance(k, *v);
    }
    let artifact = Artifact::new(config, &report, failure_table(&report))?;
    present(&artifact, &a.output, || print_check(&report))?;
    if report.is_failure() {
        let w = &report.failures[0];
        return Err(Failure::CheckFailed(format!(
            "{} failed on {} of {} instances; first witness: seed {} instance {} vertex {} margin {:.3e}",
            report.check,
            report.failed,
            report.instances,
            w.seed,
            w.instance,
            w.vertex.as_deref().unwrap_or("-"),
            w.margin
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct LevelInfo {
    level: usize,
    vertices: usize,
    cells: usize,
    edges: usize,
}

#[derive(Serialize)]
struct InfoBody {
    arity: usize,
    boundary_size: usize,
    renormalization: Vec<f64>,
    measure_weights: Vec<f64>,
    embedded: bool,
    structure_valid: bool,
    levels: Vec<LevelInfo>,
}

pub fn info(a: InfoArgs) -> Outcome {
    check_level(a.level)?;
    // building the model validates gluings, connectivity and the harmonic structure
    let model = load_model(&a.fractal, a.level)?;
    let levels = (0..=a.level)
        .map(|n| {
            let lv = model.level(n)?;
            Ok(LevelInfo {
                level: n,
                vertices: lv.vertex_count(),
                cells: lv.cell_count(),
                edges: model.graph_energy(n)?.edge_count(),
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let s = model.structure();
    let body = InfoBody {
        arity: s.arity(),
        boundary_size: s.boundary_size(),
        renormalization: model.harmonic().renormalization().to_vec(),
        measure_weights: s.measure_weights().to_vec(),
        embedded: s.embedding().is_some(),
        structure_valid: true,
        levels,
    };
    let table = Table {
        header: vec!["level", "vertices", "cells", "edges"],
        rows: body
            .levels
            .iter()
            .map(|l| vec![l.level.to_string(), l.vertices.to_string(), l.cells.to_string(), l.edges.to_string()])
            .collect(),
    };
    let mut config = RunConfig::new("info", &a.fractal, a.output.seed);
    config.level = Some(a.level);
    let print = || {
        println!("fractal          {}", a.fractal);
        println!("maps             {}", body.arity);
        println!("boundary points  {}", body.boundary_size);
        println!("renormalization  {:?}", body.renormalization);
        println!("measure weights  {:?}", body.measure_weights);
        println!("structure        valid");
        println!("{:>5} {:>10} {:>10} {:>10}", "level", "vertices", "cells", "edges");
        for l in &body.levels {
            println!("{:>5} {:>10} {:>10} {:>10}", l.level, l.vertices, l.cells, l.edges);
        }
    };
    let artifact = Artifact::new(config, &body, table)?;
    present(&artifact, &a.output, print)
}

#[derive(Serialize)]
struct ResistancePair {
    p: String,
    q: String,
    resistance: f64,
}

pub fn resistance(a: ResistanceArgs) -> Outcome {
    check_level(a.level)?;
    let model = load_model(&a.fractal, a.level)?;
    let points = a
        .points
        .iter()
        .map(|t| vertex(&model, t, a.level).map(|(addr, _)| addr))
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            pairs.push(ResistancePair {
                p: points[i].to_string(),
                q: points[j].to_string(),
                resistance: model.effective_resistance(&points[i], &points[j], a.level)?,
            });
        }
    }
    let table = Table {
        header: vec!["p", "q", "resistance"],
        rows: pairs
            .iter()
            .map(|r| vec![r.p.clone(), r.q.clone(), gasket_core::io::format_float(r.resistance)])
            .collect(),
    };
    let mut config = RunConfig::new("resistance", &a.fractal, a.output.seed).tolerance("solve_residual", SOLVE_TOLERANCE);
    config.level = Some(a.level);
    config.points = Some(a.points.clone());
    let print = || {
        for r in &pairs {
            println!("R({}, {}) = {}", r.p, r.q, r.resistance);
        }
    };
    #[derive(Serialize)]
    struct Body<'a> {
        pairs: &'a [ResistancePair],
    }
    let artifact = Artifact::new(config, Body { pairs: &pairs }, table)?;
    present(&artifact, &a.output, print)
}

pub fn green(a: GreenArgs) -> Outcome {
    check_level(a.level)?;
    let model = load_model(&a.fractal, a.level)?;
    let (x, index) = vertex(&model, &a.at, a.level)?;
    let green = GreenOperator::on_boundary(&model, a.level)?;
    // g is symmetric, so the column at x is the slice g(x, ·)
    let slice = green.column(index);
    let cloud = point_cloud(&model, a.level, &slice, |p| model.structure().coordinates(p).ok())?;
    let table = cloud_table(&cloud);
    let mut config = RunConfig::new("green", &a.fractal, a.output.seed).tolerance("solve_residual", SOLVE_TOLERANCE);
    config.level = Some(a.level);
    config.at = Some(x.to_string());
    #[derive(Serialize)]
    struct Body {
        at: String,
        level: usize,
        vertices: Vec<VertexValue>,
    }
    let body = Body {
        at: x.to_string(),
        level: a.level,
        vertices: cloud,
    };
    let out: Option<PathBuf> = a.output.out.clone();
    let format = Format::resolve(a.output.format, out.as_deref());
    Artifact::new(config, body, table)?.emit(out.as_deref(), format)
}

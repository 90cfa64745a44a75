//! The acceptance criteria, each printed as one PASS/FAIL line.
//!
//! Run with `cargo test -p gasket-core --test acceptance -- --nocapture`.

use std::time::Instant;

use gasket_core::blowup::BlowupRegion;
use gasket_core::energy::DiscreteFunction;
use gasket_core::fractal::{Address, Word};
use gasket_core::measure::RadonMeasure;
use gasket_core::model::Model;
use gasket_core::solver::{
    contraction_factor, normal_derivative, solve_dirichlet, solve_schrodinger_direct,
    solve_schrodinger_picard, DirichletProblem, GreenOperator,
};
use gasket_core::verification::{
    equicontinuity_suite, harnack_suite, hopf_suite, instance_rng, maximum_principle_suite,
    standard_harnack_potentials, MeasureShape, Region, Verdict,
};
use rand::Rng;

const SEED: u64 = 7;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn interior_laplacian(model: &Model, u: &[f64], level: usize) -> Vec<(usize, f64)> {
    let e = model.graph_energy(level).unwrap();
    let b = model.structure().boundary_size();
    (b..u.len()).map(|p| (p, e.flux(u, p))).collect()
}

fn harmonic_extension(model: &Model) -> Outcome {
    let p = DirichletProblem::on_boundary(model, 6, vec![1.0, 0.0, 0.0]).map_err(err)?;
    let u = solve_dirichlet(model, &p).map_err(err)?;
    let h = model.hierarchy();
    let expected = [(("0", 1), 0.4), (("0", 2), 0.4), (("1", 2), 0.2)];
    let mut worst_mid: f64 = 0.0;
    for ((word, label), want) in expected {
        let v = h
            .require_index(&Address::new(word.parse().unwrap(), label), 6)
            .map_err(err)?;
        worst_mid = worst_mid.max((u.values()[v] - want).abs());
    }
    ensure(worst_mid < 1e-12, || format!("midpoint error {worst_mid:e}"))?;
    let mut f = DiscreteFunction::new(0, vec![1.0, 0.0, 0.0]);
    let mut worst_energy: f64 = 0.0;
    for _ in 1..=6 {
        f = model.harmonic_extend(&f).map_err(err)?;
        let e = model.energy(&f, &f).map_err(err)?;
        worst_energy = worst_energy.max((e - 2.0).abs() / 2.0);
    }
    ensure(worst_energy < 1e-10, || format!("energy drift {worst_energy:e}"))?;
    ensure(sup_diff(f.values(), u.values()) < 1e-12, || {
        "repeated extension differs from the level-6 solve".into()
    })?;
    Ok(format!("midpoint err {worst_mid:.1e}, energy rel err {worst_energy:.1e}"))
}

fn resistance_consistency(model: &Model) -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 0..=5 {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let r = model
                .effective_resistance(&Address::boundary(i), &Address::boundary(j), n)
                .map_err(err)?;
            // series-parallel reduction of the gasket network
            worst = worst.max((r - 2.0 / 3.0).abs());
        }
    }
    ensure(worst < 1e-10, || format!("boundary resistance error {worst:e}"))?;
    let mut drift: f64 = 0.0;
    for n in 0..=4 {
        let coarse = model.resistance_table(n).map_err(err)?;
        let fine = model.resistance_table(n + 1).map_err(err)?;
        let nv = model.level(n).unwrap().vertex_count();
        for p in 0..nv {
            for q in 0..nv {
                drift = drift.max((coarse.resistance(p, q) - fine.resistance(p, q)).abs());
            }
        }
    }
    ensure(drift < 1e-10, || format!("level-to-level drift {drift:e}"))?;
    Ok(format!("R(q_i,q_j) err {worst:.1e}, trace drift {drift:.1e}"))
}

fn green_inverse_and_scaling(model: &Model) -> Outcome {
    let mut residual: f64 = 0.0;
    let mut asym: f64 = 0.0;
    let shape = MeasureShape::mixed(2.0, 3.0);
    for n in 2..=6 {
        let g = GreenOperator::on_boundary(model, n).map_err(err)?;
        for i in 0..10 {
            let mut rng = instance_rng(SEED, 100 * n + i);
            let sigma = shape.sample(model, n, &mut rng).map_err(err)?;
            let sigma = sigma.plus(&shape.sample(model, n, &mut rng).map_err(err)?.scaled(-1.0));
            let u = g.apply(&sigma).map_err(err)?;
            let load = sigma.load_vector(model, n).map_err(err)?;
            for (p, lu) in interior_laplacian(model, u.values(), n) {
                residual = residual.max((lu - load.values[p]).abs());
            }
        }
        let k = g.kernel_matrix();
        for x in 0..k.len() {
            for y in 0..x {
                asym = asym.max((k[x][y] - k[y][x]).abs());
            }
        }
    }
    ensure(residual < 1e-9, || format!("interior residual {residual:e}"))?;
    ensure(asym < 1e-12, || format!("kernel asymmetry {asym:e}"))?;
    let mut scaling: f64 = 0.0;
    for n in 3..=5 {
        for word in ["0", "2", "01", "12", "20"] {
            let w: Word = word.parse().unwrap();
            let m = w.len();
            let cell = GreenOperator::on_cell(model, n, &w).map_err(err)?.kernel_matrix();
            let base = GreenOperator::on_boundary(model, n - m).map_err(err)?.kernel_matrix();
            let map = model.hierarchy().cell_embedding(&w, n).map_err(err)?;
            let r = model.cell_resistance_scale(&w);
            for x in 0..map.len() {
                for y in 0..map.len() {
                    scaling = scaling.max((cell[map[x]][map[y]] - r * base[x][y]).abs());
                }
            }
        }
    }
    ensure(scaling < 1e-10, || format!("cell scaling error {scaling:e}"))?;
    Ok(format!(
        "residual {residual:.1e}, asymmetry {asym:.1e}, cell scaling {scaling:.1e}"
    ))
}

fn solver_cross_validation(model: &Model) -> Outcome {
    let n = 5;
    let tol = 1e-10;
    let shape = MeasureShape::mixed(3.0, 10.0);
    let green = GreenOperator::on_boundary(model, n).map_err(err)?;
    let kernel = green.kernel_matrix();
    let mut worst_diff: f64 = 0.0;
    let mut worst_kappa: f64 = 0.0;
    let mut total_iters = 0;
    let mut generated = 0;
    let mut i = 0;
    while generated < 50 {
        i += 1;
        let mut rng = instance_rng(SEED ^ 0x5eed, i);
        let g: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let raw = shape.sample(model, n, &mut rng).map_err(err)?;
        let k_raw = contraction_factor(&green, &raw).map_err(err)?;
        if k_raw == 0.0 {
            continue;
        }
        let target = rng.random_range(0.05..0.95);
        let nu = raw.scaled(target / k_raw);
        let kappa = contraction_factor(&green, &nu).map_err(err)?;
        ensure(kappa < 0.95, || format!("instance {i}: kappa {kappa}"))?;
        let source = shape.sample(model, n, &mut rng).map_err(err)?.scaled(0.1);
        let p = DirichletProblem::on_boundary(model, n, g)
            .map_err(err)?
            .with_source(source)
            .with_potential(nu.clone());
        let direct = solve_schrodinger_direct(model, &p).map_err(err)?;
        let picard = solve_schrodinger_picard(model, &p, tol, 10_000).map_err(err)?;
        let diff = direct.function.sup_distance(&picard.function);
        worst_diff = worst_diff.max(diff);
        worst_kappa = worst_kappa.max(kappa);
        // geometric bound from the first step u1 - u0 = -G(M h)
        let h = solve_dirichlet(model, &p.without_potential()).map_err(err)?;
        let mass = nu.mass_matrix(model, n, p.refinement_depth).map_err(err)?;
        let m_h = mass.mul_vec(h.values());
        let step = kernel
            .iter()
            .map(|row| row.iter().zip(&m_h).map(|(k, x)| k * x).sum::<f64>().abs())
            .fold(0.0, f64::max);
        let target_step = tol * (1.0 - kappa);
        let bound = if step <= target_step {
            1
        } else {
            ((target_step / step).ln() / kappa.ln()).ceil() as usize + 1
        };
        let iters = picard.iterations.unwrap_or(usize::MAX);
        ensure(iters <= bound, || {
            format!("instance {i}: {iters} iterations exceed bound {bound} (kappa {kappa:.4})")
        })?;
        ensure(diff < 1e-8, || format!("instance {i}: direct vs picard {diff:e}"))?;
        total_iters += iters;
        generated += 1;
    }
    Ok(format!(
        "50 instances, max diff {worst_diff:.1e}, max kappa {worst_kappa:.3}, mean iterations {:.1}",
        total_iters as f64 / 50.0
    ))
}

fn maximum_principles(model: &Model) -> (Outcome, Outcome) {
    match maximum_principle_suite(model, 5, 1000, SEED, None) {
        Err(e) => (Err(e.to_string()), Err(e.to_string())),
        Ok((weak, strong)) => {
            let w = if weak.failed == 0 && weak.instances == 1000 {
                Ok(format!(
                    "1000 instances, 0 violations, worst margin {:.2e}, inconclusive {}",
                    weak.margin.unwrap_or(0.0),
                    weak.inconclusive
                ))
            } else {
                Err(weak.summary())
            };
            let s = if strong.failed == 0 && strong.instances == 1000 {
                Ok(format!("branches {:?}, inconclusive {}", strong.branches, strong.inconclusive))
            } else {
                Err(strong.summary())
            };
            (w, s)
        }
    }
}

fn hopf_positivity(model: &Model) -> Outcome {
    let n = 5;
    let p = DirichletProblem::on_boundary(model, n, vec![1.0, 0.0, 0.0]).map_err(err)?;
    let u = solve_dirichlet(model, &p).map_err(err)?;
    let nd = normal_derivative(model, &u.function, &Address::boundary(0)).map_err(err)?;
    let dev = nd.terms.iter().map(|t| (t - 2.0).abs()).fold(0.0, f64::max);
    ensure(dev < 1e-10, || format!("analytic case terms {:?}", nd.terms))?;
    let report = hopf_suite(model, n, 50, SEED, None).map_err(err)?;
    ensure(report.failed == 0 && report.instances == 50, || report.summary())?;
    ensure(report.passed > 0, || "no instance validated the hypothesis".into())?;
    Ok(format!(
        "analytic terms = 2 (dev {dev:.1e}); {} passed, {} inconclusive, smallest limit {:.3}",
        report.passed,
        report.inconclusive,
        report.margin.unwrap_or(f64::NAN)
    ))
}

fn equicontinuity(model: &Model) -> Outcome {
    let report = equicontinuity_suite(model, 5, 200, 500, SEED, None).map_err(err)?;
    ensure(report.failed == 0 && report.passed == 200, || report.summary())?;
    Ok(format!(
        "200 solutions x 500 pairs, 0 violations, worst margin {:.2e}",
        report.margin.unwrap_or(0.0)
    ))
}

fn harnack(model: &Model) -> Outcome {
    let region = Region::away_from_boundary(model, 2).map_err(err)?;
    ensure(region.cells().len() == 6, || "expected six level-2 cells".into())?;
    let report = harnack_suite(
        model,
        &region,
        &[4, 5, 6],
        &standard_harnack_potentials(),
        200,
        SEED,
    )
    .map_err(err)?;
    let lines: Vec<String> = report
        .series
        .iter()
        .map(|s| {
            let cs: Vec<String> = s.estimates.iter().map(|e| format!("{:.5}", e.constant)).collect();
            format!("nu={} C=[{}] spread {:.2e}", s.potential, cs.join(", "), s.spread)
        })
        .collect();
    ensure(report.verdict == Verdict::Pass, || lines.join("; "))?;
    Ok(lines.join("; "))
}

fn blowup_round_trip(model: &Model) -> Outcome {
    let n = 4;
    let shape = MeasureShape::mixed(2.0, 5.0);
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for i in 0..30 {
        let mut rng = instance_rng(SEED ^ 0xb10b, i);
        let m = 1 + i % 3;
        let prefix = Word::new((0..m).map(|_| rng.random_range(0..3u8)).collect());
        let region = BlowupRegion::new(model, prefix).map_err(err)?;
        let g: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let nu = shape.sample(model, n, &mut rng).map_err(err)?;
        let sigma = shape.sample(model, n, &mut rng).map_err(err)?;
        // a source given on the base copy of K, lifted into K_m
        let base_source = shape.sample(model, n - m, &mut rng).map_err(err)?;
        let lifted = region.lift_from_base(model, &base_source).map_err(err)?;
        let mass_gap = (lifted.total_mass(model) - base_source.total_mass(model)).abs();
        ensure(mass_gap < 1e-12, || format!("instance {i}: lift changed mass by {mass_gap:e}"))?;
        let p = DirichletProblem::on_boundary(model, n, g)
            .map_err(err)?
            .with_source(sigma.plus(&lifted))
            .with_potential(nu);
        let embedded = region.embed_problem(model, &p).map_err(err)?;
        let on_k = solve_schrodinger_direct(model, &embedded).map_err(err)?;
        let back = region.transfer_solution(model, &p, &on_k).map_err(err)?;
        let native = region.solve_native(model, &p).map_err(err)?;
        let diff = back.function.sup_distance(&native.function);
        worst = worst.max(diff);
        worst_residual = worst_residual.max(back.residual);
        ensure(diff < 1e-10, || format!("instance {i}: paths differ by {diff:e}"))?;
        ensure(back.residual < 1e-10, || format!("instance {i}: native residual {:e}", back.residual))?;
    }
    Ok(format!("30 instances, sup diff {worst:.1e}, native residual {worst_residual:.1e}"))
}

fn self_similarity(model: &Model) -> Outcome {
    let n = 5;
    let shape = MeasureShape::mixed(2.0, 5.0);
    let b = model.structure().boundary_size();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let mut rng = instance_rng(SEED ^ 0x5e1f, k);
        let g: Vec<f64> = (0..b).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let nu = shape.sample(model, n, &mut rng).map_err(err)?;
        let sigma = shape.sample(model, n, &mut rng).map_err(err)?;
        let p = DirichletProblem::on_boundary(model, n, g)
            .map_err(err)?
            .with_source(sigma.clone())
            .with_potential(nu.clone());
        let u = solve_schrodinger_direct(model, &p).map_err(err)?;
        for i in 0..model.structure().arity() {
            let cell = Word::new(vec![i as u8]);
            let r = model.cell_resistance_scale(&cell);
            let pulled = u.function.pull_back(model, &cell).map_err(err)?;
            let pull = |m: &RadonMeasure| -> Result<RadonMeasure, String> {
                m.restrict_to_cell(model, &cell)
                    .and_then(|x| x.rescale_to_cell(model, &cell))
                    .map_err(err)
            };
            let (nu_i, sigma_i) = (pull(&nu)?, pull(&sigma)?);
            let mass = nu_i.mass_matrix(model, n - 1, p.refinement_depth).map_err(err)?;
            let m_u = mass.mul_vec(pulled.values());
            let load = sigma_i.load_vector(model, n - 1).map_err(err)?;
            // Δ(u∘F_i) as a load against level-(n-1) bumps, versus r_i times
            // the pulled-back measure uν + σ
            for (x, lu) in interior_laplacian(model, pulled.values(), n - 1) {
                let lhs = -lu;
                let rhs = r * (m_u[x] + load.values[x]);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    ensure(worst < 1e-9, || format!("self-similarity residual {worst:e}"))?;
    Ok(format!("20 solves x 3 maps, residual {worst:.1e}"))
}

#[test]
fn acceptance_criteria() {
    let model = Model::sierpinski(6);
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut timed = |name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let out = f();
        results.push((name, out, t.elapsed().as_secs_f64()));
    };
    timed("1 harmonic extension", &|| harmonic_extension(&model));
    timed("2 resistance consistency", &|| resistance_consistency(&model));
    timed("3 green inverse and scaling", &|| green_inverse_and_scaling(&model));
    timed("4 direct vs picard", &|| solver_cross_validation(&model));
    let t = Instant::now();
    let (weak, strong) = maximum_principles(&model);
    let mp_time = t.elapsed().as_secs_f64();
    results.push(("5 weak maximum principle", weak, mp_time));
    results.push(("6 strong maximum principle", strong, mp_time));
    let mut timed = |name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let out = f();
        results.push((name, out, t.elapsed().as_secs_f64()));
    };
    timed("7 hopf positivity", &|| hopf_positivity(&model));
    timed("8 equicontinuity", &|| equicontinuity(&model));
    timed("9 harnack stability", &|| harnack(&model));
    timed("10 blowup round trip", &|| blowup_round_trip(&model));
    timed("11 self-similarity", &|| self_similarity(&model));

    let mut failed = Vec::new();
    for (name, outcome, secs) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name:<30} ({secs:.2}s) {detail}"),
            Err(detail) => {
                println!("FAIL  {name:<30} ({secs:.2}s) {detail}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

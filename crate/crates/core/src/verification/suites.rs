use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::BlowupRegion;
use crate::energy::DiscreteFunction;
use crate::error::Result;
use crate::fractal::{Address, Word};
use crate::measure::RadonMeasure;
use crate::model::Model;
use crate::solver::{solve_dirichlet, solve_schrodinger_direct, DirichletProblem};

use super::checks::{
    check_equicontinuity, check_hopf, check_strong_mp, check_weak_mp, estimate_harnack_constant,
    HarnackEstimate, Tag, EQUICONTINUITY_TOLERANCE, HOPF_PEAK_TOLERANCE, STRICT_DEFICIT_TOLERANCE,
    WEAK_MP_TOLERANCE,
};
use super::region::Region;
use super::report::{CheckReport, Verdict};
use super::sampling::{generate_instance, instance_rng, InstanceFamily};

// offsets the seed so auxiliary draws never reuse an instance stream
const AUX_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Relative spread of Harnack constants across levels accepted as stable.
pub const HARNACK_SPREAD_TOLERANCE: f64 = 0.05;

/// Random union of cells of a random level `k ≤ min(2, n)`.
fn random_region(model: &Model, level: usize, seed: u64, index: usize) -> Result<Region> {
    let mut rng = instance_rng(seed ^ AUX_SALT, index);
    let k = rng.random_range(0..=level.min(2));
    let arity = model.structure().arity();
    let total = arity.pow(k as u32);
    let mut cells: Vec<Word> = (0..total)
        .filter(|_| rng.random_bool(0.5))
        .map(|c| Word::from_index(c, k, arity))
        .collect();
    if cells.is_empty() {
        cells.push(Word::from_index(rng.random_range(0..total), k, arity));
    }
    Region::new(model, cells)
}

// Instances live on `K_m` when a blowup is given and are solved through the
// equivalent problem on `K`; the solution values are the same on both.
fn prepare(model: &Model, problem: DirichletProblem, blowup: Option<&BlowupRegion>) -> Result<DirichletProblem> {
    match blowup {
        Some(region) => region.embed_problem(model, &problem),
        None => Ok(problem),
    }
}

/// Solves `count` maximum-principle instances at level `n`, each checked on
/// a random region, and returns the weak and strong reports.
pub fn maximum_principle_suite(
    model: &Model,
    level: usize,
    count: usize,
    seed: u64,
    blowup: Option<&BlowupRegion>,
) -> Result<(CheckReport, CheckReport)> {
    let family = InstanceFamily::maximum_principle();
    let pairs: Vec<(CheckReport, CheckReport)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let instance = generate_instance(model, level, &family, seed, i)?;
            let problem = prepare(model, instance.problem(model, level)?, blowup)?;
            let u = solve_schrodinger_direct(model, &problem)?.function;
            let region = random_region(model, level, seed, i)?;
            let tag = Tag { instance: i, seed };
            Ok((
                check_weak_mp(model, &u, &region, tag)?,
                check_strong_mp(model, &u, &region, tag)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (weak, strong): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok((
        CheckReport::merge_all("weak-mp", &[("weak_mp", WEAK_MP_TOLERANCE)], weak),
        CheckReport::merge_all("strong-mp", &[("strict_deficit", STRICT_DEFICIT_TOLERANCE)], strong),
    ))
}

/// Instance 0 is the harmonic function with boundary values `(1, 0, …, 0)`;
/// the rest carry random `ν ≥ 0`, `σ₀ ≥ 0` and boundary data peaked at `q_0`.
pub fn hopf_suite(
    model: &Model,
    level: usize,
    count: usize,
    seed: u64,
    blowup: Option<&BlowupRegion>,
) -> Result<CheckReport> {
    let family = InstanceFamily::hopf(0);
    let b = model.structure().boundary_size();
    let reports: Vec<CheckReport> = (0..count)
        .into_par_iter()
        .map(|i| {
            let u = if i == 0 {
                let mut g = vec![0.0; b];
                g[0] = 1.0;
                solve_dirichlet(model, &DirichletProblem::on_boundary(model, level, g)?)?.function
            } else {
                let instance = generate_instance(model, level, &family, seed, i)?;
                let problem = prepare(model, instance.problem(model, level)?, blowup)?;
                solve_schrodinger_direct(model, &problem)?.function
            };
            check_hopf(model, &u, &Address::boundary(0), Tag { instance: i, seed })
        })
        .collect::<Result<_>>()?;
    Ok(CheckReport::merge_all("hopf", &[("peak", HOPF_PEAK_TOLERANCE)], reports))
}

/// `Lu = 0` solutions with boundary data in `[0, 1]`, each tested on
/// `pairs` random vertex pairs.
pub fn equicontinuity_suite(
    model: &Model,
    level: usize,
    count: usize,
    pairs: usize,
    seed: u64,
    blowup: Option<&BlowupRegion>,
) -> Result<CheckReport> {
    let family = InstanceFamily::normalized();
    let table = model.resistance_table(level)?;
    let reports: Vec<CheckReport> = (0..count)
        .into_par_iter()
        .map(|i| {
            let instance = generate_instance(model, level, &family, seed, i)?;
            let problem = prepare(model, instance.problem(model, level)?, blowup)?;
            let u = clamp_roundoff(solve_schrodinger_direct(model, &problem)?.function);
            let mut rng = instance_rng(seed ^ AUX_SALT, i);
            // the bound is checked on K, where the potential carries the embedded mass
            let mass = problem.potential.as_ref().map_or(0.0, |nu| nu.total_mass(model));
            check_equicontinuity(model, &u, mass, &table, pairs, &mut rng, Tag { instance: i, seed })
        })
        .collect::<Result<_>>()?;
    Ok(CheckReport::merge_all(
        "equicontinuity",
        &[("equicontinuity", EQUICONTINUITY_TOLERANCE)],
        reports,
    ))
}

// Values of a normalized solution may leave [0, 1] by a few ulps.
fn clamp_roundoff(u: DiscreteFunction) -> DiscreteFunction {
    let level = u.level();
    let values = u
        .into_values()
        .into_iter()
        .map(|x| if (-1e-13..0.0).contains(&x) { 0.0 } else if (1.0..1.0 + 1e-13).contains(&x) { 1.0 } else { x })
        .collect();
    DiscreteFunction::new(level, values)
}

/// Harnack constants for one potential across several levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackSeries {
    pub potential: String,
    pub estimates: Vec<HarnackEstimate>,
    /// `(max Ĉ - min Ĉ) / min Ĉ` across levels.
    pub spread: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackReport {
    pub region: Vec<String>,
    pub spread_tolerance: f64,
    pub series: Vec<HarnackSeries>,
    pub verdict: Verdict,
}

/// Standard potentials `0`, `μ` and `5μ`.
pub fn standard_harnack_potentials() -> Vec<(String, RadonMeasure)> {
    vec![
        ("0".to_string(), RadonMeasure::zero()),
        ("mu".to_string(), RadonMeasure::self_similar()),
        ("5mu".to_string(), RadonMeasure::self_similar().scaled(5.0)),
    ]
}

/// Estimates `Ĉ` on `E` for each potential and level, with the same
/// boundary samples at every level.
pub fn harnack_suite(
    model: &Model,
    region: &Region,
    levels: &[usize],
    potentials: &[(String, RadonMeasure)],
    samples: usize,
    seed: u64,
) -> Result<HarnackReport> {
    let mut series = Vec::new();
    for (name, nu) in potentials {
        let estimates: Vec<HarnackEstimate> = levels
            .iter()
            .map(|&n| estimate_harnack_constant(model, region, nu, n, samples, seed))
            .collect::<Result<_>>()?;
        let (lo, hi) = estimates
            .iter()
            .map(|e| e.constant)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| (a.min(c), b.max(c)));
        let spread = if estimates.is_empty() { 0.0 } else { (hi - lo) / lo };
        let positive = estimates.iter().all(|e| e.verdict == Verdict::Pass);
        let verdict = if positive && spread < HARNACK_SPREAD_TOLERANCE {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        series.push(HarnackSeries {
            potential: name.clone(),
            estimates,
            spread,
            verdict,
        });
    }
    let verdict = if series.iter().all(|s| s.verdict == Verdict::Pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(HarnackReport {
        region: region.cells().iter().map(|c| c.to_string()).collect(),
        spread_tolerance: HARNACK_SPREAD_TOLERANCE,
        series,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let m = Model::sierpinski(3);
        let (weak, strong) = maximum_principle_suite(&m, 3, 20, 1, None).unwrap();
        assert_eq!(weak.failed, 0);
        assert_eq!(strong.failed, 0);
        assert_eq!(weak.instances, 20);
        let h = hopf_suite(&m, 3, 5, 1, None).unwrap();
        assert_eq!(h.failed, 0, "{:#?}", h.failures);
        let e = equicontinuity_suite(&m, 3, 5, 50, 1, None).unwrap();
        assert_eq!(e.failed, 0);
    }

    #[test]
    fn suites_run_on_blowups() {
        let m = Model::sierpinski(4);
        for prefix in ["1", "02", "120"] {
            let r = BlowupRegion::new(&m, prefix.parse().unwrap()).unwrap();
            let (weak, strong) = maximum_principle_suite(&m, 4, 40, 2, Some(&r)).unwrap();
            assert_eq!(weak.failed, 0, "{prefix}: {:#?}", weak.failures);
            assert_eq!(strong.failed, 0, "{prefix}: {:#?}", strong.failures);
            let h = hopf_suite(&m, 4, 10, 2, Some(&r)).unwrap();
            assert_eq!(h.failed, 0, "{prefix}: {:#?}", h.failures);
            let e = equicontinuity_suite(&m, 4, 10, 50, 2, Some(&r)).unwrap();
            assert_eq!(e.failed, 0, "{prefix}: {:#?}", e.failures);
        }
    }

    #[test]
    fn suites_are_reproducible() {
        let m = Model::sierpinski(3);
        let a = maximum_principle_suite(&m, 3, 12, 4, None).unwrap();
        let b = maximum_principle_suite(&m, 3, 12, 4, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn harnack_is_level_independent_without_potential() {
        let m = Model::sierpinski(4);
        let e = Region::away_from_boundary(&m, 2).unwrap();
        let pots = vec![("0".to_string(), RadonMeasure::zero())];
        let r = harnack_suite(&m, &e, &[2, 3, 4], &pots, 10, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.series[0].spread < 1e-12);
    }
}

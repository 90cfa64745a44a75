use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{DiscreteFunction, ResistanceTable};
use crate::error::{invalid, Result};
use crate::fractal::Address;
use crate::measure::{RadonMeasure, DEFAULT_REFINEMENT_DEPTH};
use crate::model::Model;
use crate::solver::{normal_derivative, SchrodingerOperator};

use super::region::Region;
use super::report::{CheckReport, Verdict, Witness};
use super::sampling::{instance_rng, random_boundary, BoundaryFamily};

pub const WEAK_MP_TOLERANCE: f64 = 1e-10;
pub const STRICT_DEFICIT_TOLERANCE: f64 = 1e-9;
pub const HOPF_PEAK_TOLERANCE: f64 = 1e-9;
pub const EQUICONTINUITY_TOLERANCE: f64 = 1e-9;
const RANGE_SLACK: f64 = 1e-12;

/// Identifies the instance a check runs on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tag {
    pub instance: usize,
    pub seed: u64,
}

impl Tag {
    fn witness(self, model: &Model, u: &DiscreteFunction, vertex: Option<usize>, margin: f64) -> Witness {
        Witness {
            instance: self.instance,
            seed: self.seed,
            vertex: vertex.map(|v| vertex_name(model, u.level(), v)),
            margin,
            note: None,
        }
    }
}

fn vertex_name(model: &Model, level: usize, v: usize) -> String {
    model
        .level(level)
        .map(|lv| lv.address(v).to_string())
        .unwrap_or_else(|_| v.to_string())
}

fn sup_abs(u: &DiscreteFunction) -> f64 {
    u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn argmax(u: &DiscreteFunction, set: &[usize]) -> Option<(usize, f64)> {
    set.iter()
        .map(|&v| (v, u.get(v)))
        .fold(None, |best, x| match best {
            Some((_, b)) if b >= x.1 => best,
            _ => Some(x),
        })
}

/// `max_E u ≤ max_{∂E} u⁺ + tol·max|u|`; the margin is `max_{∂E} u⁺ - max_E u`.
pub fn check_weak_mp(model: &Model, u: &DiscreteFunction, region: &Region, tag: Tag) -> Result<CheckReport> {
    u.check(model)?;
    let rv = region.vertices(model, u.level())?;
    let tol = WEAK_MP_TOLERANCE * sup_abs(u);
    let tols = [("weak_mp", WEAK_MP_TOLERANCE)];
    let Some((p, top)) = argmax(u, &rv.interior) else {
        let w = tag.witness(model, u, None, 0.0);
        return Ok(CheckReport::single("weak-mp", &tols, Verdict::Inconclusive, w, None));
    };
    let bound = rv.boundary.iter().map(|&v| u.get(v).max(0.0)).fold(0.0, f64::max);
    let margin = bound - top;
    let verdict = if top <= bound + tol { Verdict::Pass } else { Verdict::Fail };
    let w = tag.witness(model, u, Some(p), margin);
    Ok(CheckReport::single("weak-mp", &tols, verdict, w, None))
}

/// Passes when the maximum over the closed region is nonpositive, when it
/// is attained on `∂E` with a strict interior deficit, or when `u` is
/// constant on the interior component carrying the interior maximum.
pub fn check_strong_mp(model: &Model, u: &DiscreteFunction, region: &Region, tag: Tag) -> Result<CheckReport> {
    u.check(model)?;
    let rv = region.vertices(model, u.level())?;
    let tol = STRICT_DEFICIT_TOLERANCE * sup_abs(u);
    let tols = [("strict_deficit", STRICT_DEFICIT_TOLERANCE), ("constancy", STRICT_DEFICIT_TOLERANCE)];
    let Some((p, top)) = argmax(u, &rv.interior) else {
        let w = tag.witness(model, u, None, 0.0);
        return Ok(CheckReport::single("strong-mp", &tols, Verdict::Inconclusive, w, None));
    };
    let edge = rv.boundary.iter().map(|&v| u.get(v)).fold(f64::NEG_INFINITY, f64::max);
    let closed_max = top.max(edge);
    let single = |verdict, margin, branch: Option<&str>| {
        let mut w = tag.witness(model, u, Some(p), margin);
        w.note = branch.map(str::to_string);
        CheckReport::single("strong-mp", &tols, verdict, w, branch)
    };
    if closed_max <= 0.0 {
        return Ok(single(Verdict::Pass, -closed_max, Some("nonpositive")));
    }
    let deficit = edge - top;
    if deficit >= tol {
        return Ok(single(Verdict::Pass, deficit - tol, Some("boundary")));
    }
    let component = rv
        .interior_components(model)?
        .into_iter()
        .find(|c| c.binary_search(&p).is_ok())
        .unwrap_or_default();
    let (lo, hi) = component
        .iter()
        .map(|&v| u.get(v))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let spread = hi - lo;
    if spread <= tol {
        Ok(single(Verdict::Pass, tol - spread, Some("constant")))
    } else {
        Ok(single(Verdict::Fail, tol - spread, None))
    }
}

/// Normal derivative sign at a strict positive boundary maximum `p ∈ V_0`.
/// Inconclusive when the strict-maximum hypothesis does not hold.
pub fn check_hopf(model: &Model, u: &DiscreteFunction, p: &Address, tag: Tag) -> Result<CheckReport> {
    u.check(model)?;
    let canon = model.structure().canonicalize(&p.word, p.label)?;
    if canon.level() != 0 {
        return invalid(format!("{canon} is not a boundary vertex"));
    }
    let v = canon.label;
    let tols = [("peak", HOPF_PEAK_TOLERANCE)];
    let peak = u.get(v);
    let runner_up = u
        .values()
        .iter()
        .enumerate()
        .filter(|&(q, _)| q != v)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0 && peak > runner_up + HOPF_PEAK_TOLERANCE) {
        let mut w = tag.witness(model, u, Some(v), 0.0);
        w.note = Some("no strict positive maximum".into());
        return Ok(CheckReport::single("hopf", &tols, Verdict::Inconclusive, w, None));
    }
    let nd = normal_derivative(model, u, &canon)?;
    let last = *nd.terms.last().unwrap();
    let verdict = if nd.limit > 0.0 && last > 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut w = tag.witness(model, u, Some(v), nd.limit);
    w.note = Some(format!(
        "terms={:?} tail_ratio={:?}",
        nd.terms.iter().map(|t| format!("{t:.6e}")).collect::<Vec<_>>(),
        nd.tail_ratio
    ));
    Ok(CheckReport::single("hopf", &tols, verdict, w, None))
}

/// `|u(x)-u(y)|² ≤ (ν(K)+2) R(x,y) + tol` over `pairs` random vertex pairs,
/// for `0 ≤ u ≤ 1` solving `Lu = 0`.
pub fn check_equicontinuity(
    model: &Model,
    u: &DiscreteFunction,
    potential_mass: f64,
    table: &ResistanceTable,
    pairs: usize,
    rng: &mut ChaCha8Rng,
    tag: Tag,
) -> Result<CheckReport> {
    u.check(model)?;
    if table.level() != u.level() {
        return Err(crate::error::Error::LevelMismatch {
            expected: table.level(),
            found: u.level(),
        });
    }
    if u.values().iter().any(|&x| !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&x)) {
        return invalid("equicontinuity check needs 0 <= u <= 1");
    }
    let tols = [("equicontinuity", EQUICONTINUITY_TOLERANCE)];
    let nv = u.len();
    let bound = potential_mass + 2.0;
    let mut worst: Option<(usize, usize, f64)> = None;
    for _ in 0..pairs {
        let x = rng.random_range(0..nv);
        let mut y = rng.random_range(0..nv - 1);
        if y >= x {
            y += 1;
        }
        let d = u.get(x) - u.get(y);
        let margin = bound * table.resistance(x, y) + EQUICONTINUITY_TOLERANCE - d * d;
        if worst.is_none_or(|w| margin < w.2) {
            worst = Some((x, y, margin));
        }
    }
    let Some((x, y, margin)) = worst else {
        let w = tag.witness(model, u, None, 0.0);
        return Ok(CheckReport::single("equicontinuity", &tols, Verdict::Inconclusive, w, None));
    };
    let verdict = if margin >= 0.0 { Verdict::Pass } else { Verdict::Fail };
    let mut w = tag.witness(model, u, Some(x), margin);
    w.note = Some(format!("paired with {}", vertex_name(model, u.level(), y)));
    Ok(CheckReport::single("equicontinuity", &tols, verdict, w, None))
}

/// Empirical Harnack constant `max_E u / min_E u` over sampled solutions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackEstimate {
    pub level: usize,
    pub samples: usize,
    pub constant: f64,
    pub median_ratio: f64,
    pub mean_ratio: f64,
    pub smallest_minimum: f64,
    pub verdict: Verdict,
    /// Sample attaining the constant, or the first nonpositive minimum.
    pub witness: Witness,
}

/// Samples `Lu = 0` on `K` with nonnegative boundary data (the corner
/// indicators first) and measures `max/min` over the closure of `E`.
pub fn estimate_harnack_constant(
    model: &Model,
    region: &Region,
    potential: &RadonMeasure,
    level: usize,
    samples: usize,
    seed: u64,
) -> Result<HarnackEstimate> {
    if region.touches_boundary(model)? {
        return invalid("Harnack regions must avoid V_0");
    }
    potential.require_nonnegative()?;
    let b = model.structure().boundary_size();
    let boundary: Vec<usize> = (0..b).collect();
    let op = SchrodingerOperator::new(model, level, &boundary, Some(potential), DEFAULT_REFINEMENT_DEPTH)?;
    let rv = region.vertices(model, level)?;
    let closure: Vec<usize> = rv.interior.iter().chain(&rv.boundary).copied().collect();
    let zero = RadonMeasure::zero();
    let stats: Vec<(f64, f64, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let g = random_boundary(BoundaryFamily::CornersThenUnit, b, i, &mut rng);
            let u = op.solve(&g, &zero)?;
            let (lo, hi) = closure
                .iter()
                .map(|&v| u.values()[v])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), x| (a.min(x), c.max(x)));
            Ok((lo, hi, g))
        })
        .collect::<Result<_>>()?;
    let witness = |i: usize, margin: f64, g: &[f64]| Witness {
        instance: i,
        seed,
        vertex: None,
        margin,
        note: Some(format!("boundary={g:?}")),
    };
    if let Some((i, (lo, _, g))) = stats.iter().enumerate().find(|(_, s)| !(s.0 > 0.0)) {
        return Ok(HarnackEstimate {
            level,
            samples: i + 1,
            constant: f64::INFINITY,
            median_ratio: f64::NAN,
            mean_ratio: f64::NAN,
            smallest_minimum: *lo,
            verdict: Verdict::Fail,
            witness: witness(i, *lo, g),
        });
    }
    let mut ratios: Vec<(f64, usize)> = stats.iter().enumerate().map(|(i, s)| (s.1 / s.0, i)).collect();
    let smallest_minimum = stats.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    let Some(&(constant, at)) = ratios.last() else {
        return invalid("Harnack estimate needs at least one sample");
    };
    let mean_ratio = ratios.iter().map(|r| r.0).sum::<f64>() / ratios.len() as f64;
    Ok(HarnackEstimate {
        level,
        samples,
        constant,
        median_ratio: ratios[ratios.len() / 2].0,
        mean_ratio,
        smallest_minimum,
        verdict: Verdict::Pass,
        witness: witness(at, smallest_minimum, &stats[at].2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_dirichlet, DirichletProblem};

    fn harmonic(m: &Model, n: usize, g: [f64; 3]) -> DiscreteFunction {
        let p = DirichletProblem::on_boundary(m, n, g.to_vec()).unwrap();
        solve_dirichlet(m, &p).unwrap().function
    }

    #[test]
    fn nonpositive_function_passes_weak_mp() {
        let m = Model::sierpinski(3);
        let u = DiscreteFunction::constant(&m, 3, -1.0).unwrap();
        let r = check_weak_mp(&m, &u, &Region::whole(), Tag::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let s = check_strong_mp(&m, &u, &Region::whole(), Tag::default()).unwrap();
        assert_eq!(s.branches.get("nonpositive"), Some(&1));
    }

    #[test]
    fn harmonic_passes_both_principles() {
        let m = Model::sierpinski(4);
        let u = harmonic(&m, 4, [1.0, -0.5, 0.25]);
        let region = Region::new(&m, vec!["0".parse().unwrap(), "2".parse().unwrap()]).unwrap();
        let r = check_weak_mp(&m, &u, &region, Tag::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.margin.unwrap() >= 0.0);
        let s = check_strong_mp(&m, &u, &region, Tag::default()).unwrap();
        assert_eq!(s.branches.get("boundary"), Some(&1));
    }

    #[test]
    fn positive_constant_takes_constancy_branch() {
        let m = Model::sierpinski(3);
        let u = DiscreteFunction::constant(&m, 3, 2.0).unwrap();
        let s = check_strong_mp(&m, &u, &Region::whole(), Tag::default()).unwrap();
        assert_eq!(s.verdict, Verdict::Pass);
        assert_eq!(s.branches.get("constant"), Some(&1));
    }

    #[test]
    fn interior_bump_fails_both() {
        let m = Model::sierpinski(3);
        let mut values = vec![0.0; m.level(3).unwrap().vertex_count()];
        values[10] = 1.0;
        let u = DiscreteFunction::new(3, values);
        let tag = Tag { instance: 4, seed: 9 };
        let r = check_weak_mp(&m, &u, &Region::whole(), tag).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.failures[0].seed, 9);
        assert_eq!(r.failures[0].instance, 4);
        let s = check_strong_mp(&m, &u, &Region::whole(), tag).unwrap();
        assert_eq!(s.verdict, Verdict::Fail);
    }

    #[test]
    fn hopf_on_corner_function() {
        let m = Model::sierpinski(4);
        let u = harmonic(&m, 4, [1.0, 0.0, 0.0]);
        let r = check_hopf(&m, &u, &Address::boundary(0), Tag::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.margin.unwrap() - 2.0).abs() < 1e-10);
        let c = DiscreteFunction::constant(&m, 4, 1.0).unwrap();
        let r = check_hopf(&m, &c, &Address::boundary(0), Tag::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(check_hopf(&m, &u, &Address::new("0".parse().unwrap(), 1), Tag::default()).is_err());
    }

    #[test]
    fn equicontinuity_of_constant_and_harmonic() {
        let m = Model::sierpinski(3);
        let table = m.resistance_table(3).unwrap();
        let mut rng = instance_rng(1, 0);
        let c = DiscreteFunction::constant(&m, 3, 0.5).unwrap();
        let r = check_equicontinuity(&m, &c, 0.0, &table, 100, &mut rng, Tag::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let u = harmonic(&m, 3, [1.0, 0.0, 0.3]);
        let r = check_equicontinuity(&m, &u, 0.0, &table, 100, &mut rng, Tag::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let out = harmonic(&m, 3, [2.0, 0.0, 0.0]);
        assert!(check_equicontinuity(&m, &out, 0.0, &table, 10, &mut rng, Tag::default()).is_err());
    }

    #[test]
    fn harnack_constant_basics() {
        let m = Model::sierpinski(4);
        let e = Region::away_from_boundary(&m, 2).unwrap();
        let est = estimate_harnack_constant(&m, &e, &RadonMeasure::zero(), 4, 20, 5).unwrap();
        assert_eq!(est.verdict, Verdict::Pass);
        assert!(est.constant > 1.0);
        assert!(est.smallest_minimum > 0.0);
        assert!(estimate_harnack_constant(&m, &Region::whole(), &RadonMeasure::zero(), 4, 5, 5).is_err());
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::fractal::Word;
use crate::measure::RadonMeasure;
use crate::model::Model;
use crate::solver::{solve_schrodinger_direct, DirichletProblem, Solution};

/// How boundary data on `V_0` is drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryFamily {
    /// Uniform in `[-1, 1]`.
    Signed,
    /// Uniform in `[0, 1]`, not all zero.
    Unit,
    /// `1` at the given label, uniform in `[0, 0.9]` elsewhere.
    PeakedAt(usize),
    /// Corner indicators for the first `b` instances, then `Unit`.
    CornersThenUnit,
}

/// Shape of a random nonnegative measure: up to `max_atoms` atoms on
/// vertices of `V_n ∖ V_0` and up to `max_parts` self-similar parts on
/// cells of depth at most `max_part_depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureShape {
    pub max_atoms: usize,
    pub atom_mass: f64,
    pub max_parts: usize,
    pub part_coefficient: f64,
    pub max_part_depth: usize,
}

impl MeasureShape {
    pub fn none() -> Self {
        MeasureShape {
            max_atoms: 0,
            atom_mass: 0.0,
            max_parts: 0,
            part_coefficient: 0.0,
            max_part_depth: 0,
        }
    }

    pub fn mixed(atom_mass: f64, part_coefficient: f64) -> Self {
        MeasureShape {
            max_atoms: 4,
            atom_mass,
            max_parts: 3,
            part_coefficient,
            max_part_depth: 2,
        }
    }

    pub fn sample(&self, model: &Model, level: usize, rng: &mut ChaCha8Rng) -> Result<RadonMeasure> {
        let lv = model.level(level)?;
        let b = model.structure().boundary_size();
        let arity = model.structure().arity();
        let mut m = RadonMeasure::zero();
        if lv.vertex_count() > b {
            for _ in 0..rng.random_range(0..=self.max_atoms) {
                let v = rng.random_range(b..lv.vertex_count());
                m = m.with_atom(lv.address(v), self.atom_mass * rng.random::<f64>());
            }
        }
        for _ in 0..rng.random_range(0..=self.max_parts) {
            let depth = rng.random_range(0..=self.max_part_depth);
            let cell = Word::new((0..depth).map(|_| rng.random_range(0..arity) as u8).collect());
            m = m.with_part(cell, self.part_coefficient * rng.random::<f64>());
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceFamily {
    pub potential: MeasureShape,
    pub source: MeasureShape,
    pub boundary: BoundaryFamily,
}

impl InstanceFamily {
    /// Signed boundary data, `ν ≥ 0` and `σ₀ ≥ 0`, for the maximum principles.
    pub fn maximum_principle() -> Self {
        InstanceFamily {
            potential: MeasureShape::mixed(5.0, 20.0),
            source: MeasureShape::mixed(1.0, 1.0),
            boundary: BoundaryFamily::Signed,
        }
    }

    /// `Lu = σ₀ ≥ 0` with a unique boundary maximum at `q_label`.
    pub fn hopf(label: usize) -> Self {
        InstanceFamily {
            potential: MeasureShape::mixed(5.0, 20.0),
            source: MeasureShape::mixed(0.2, 0.2),
            boundary: BoundaryFamily::PeakedAt(label),
        }
    }

    /// `Lu = 0` with boundary data in `[0, 1]`.
    pub fn normalized() -> Self {
        InstanceFamily {
            potential: MeasureShape::mixed(5.0, 20.0),
            source: MeasureShape::none(),
            boundary: BoundaryFamily::Unit,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub index: usize,
    pub seed: u64,
    pub potential: RadonMeasure,
    pub source: RadonMeasure,
    pub boundary_values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub instance: Instance,
    pub solution: Solution,
}

/// Independent stream for instance `index` under `seed`.
pub fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn random_boundary(family: BoundaryFamily, b: usize, index: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match family {
        BoundaryFamily::Signed => (0..b).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        BoundaryFamily::Unit => loop {
            let g: Vec<f64> = (0..b).map(|_| rng.random::<f64>()).collect();
            if g.iter().any(|&x| x > 0.0) {
                break g;
            }
        },
        BoundaryFamily::PeakedAt(p) => (0..b)
            .map(|a| if a == p { 1.0 } else { 0.9 * rng.random::<f64>() })
            .collect(),
        BoundaryFamily::CornersThenUnit if index < b => {
            (0..b).map(|a| if a == index { 1.0 } else { 0.0 }).collect()
        }
        BoundaryFamily::CornersThenUnit => random_boundary(BoundaryFamily::Unit, b, index, rng),
    }
}

pub fn generate_instance(
    model: &Model,
    level: usize,
    family: &InstanceFamily,
    seed: u64,
    index: usize,
) -> Result<Instance> {
    let mut rng = instance_rng(seed, index);
    let b = model.structure().boundary_size();
    let boundary_values = random_boundary(family.boundary, b, index, &mut rng);
    let potential = family.potential.sample(model, level, &mut rng)?;
    let source = family.source.sample(model, level, &mut rng)?;
    Ok(Instance {
        index,
        seed,
        potential,
        source,
        boundary_values,
    })
}

impl Instance {
    pub fn problem(&self, model: &Model, level: usize) -> Result<DirichletProblem> {
        Ok(DirichletProblem::on_boundary(model, level, self.boundary_values.clone())?
            .with_source(self.source.clone())
            .with_potential(self.potential.clone()))
    }
}

/// Generates and solves `count` instances by the direct method. The result
/// depends only on the arguments, not on thread scheduling.
pub fn sample_solutions(
    model: &Model,
    level: usize,
    family: &InstanceFamily,
    count: usize,
    seed: u64,
) -> Result<Vec<Sample>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let instance = generate_instance(model, level, family, seed, i)?;
            let solution = solve_schrodinger_direct(model, &instance.problem(model, level)?)?;
            Ok(Sample { instance, solution })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let m = Model::sierpinski(3);
        let f = InstanceFamily::maximum_principle();
        let a = sample_solutions(&m, 3, &f, 8, 11).unwrap();
        let b = sample_solutions(&m, 3, &f, 8, 11).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.instance, y.instance);
            assert_eq!(x.solution, y.solution);
        }
        let c = sample_solutions(&m, 3, &f, 8, 12).unwrap();
        assert_ne!(a[0].instance, c[0].instance);
        assert!(sample_solutions(&m, 3, &f, 0, 11).unwrap().is_empty());
    }

    #[test]
    fn residuals_are_small() {
        let m = Model::sierpinski(3);
        for s in sample_solutions(&m, 3, &InstanceFamily::maximum_principle(), 10, 3).unwrap() {
            assert!(s.solution.residual < 1e-10);
        }
    }

    #[test]
    fn corner_indicators_come_first() {
        let mut rng = instance_rng(0, 0);
        let g = random_boundary(BoundaryFamily::CornersThenUnit, 3, 1, &mut rng);
        assert_eq!(g, vec![0.0, 1.0, 0.0]);
        let g = random_boundary(BoundaryFamily::CornersThenUnit, 3, 5, &mut rng);
        assert!(g.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}

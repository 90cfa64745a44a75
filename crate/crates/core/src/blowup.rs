//! Bounded pieces `K_m = F_{α_1}^{-1}⋯F_{α_m}^{-1}(K)` of a blowup.
//!
//! `K_m` is addressed natively through `φ = F_{α_m}∘⋯∘F_{α_1} = F_ω` with
//! `ω = α_m⋯α_1`, so its vertex sets are those of `K` and the original copy
//! of `K` sits in the native cell `C_ω`. The blowup energy restricts to the
//! standard energy on that copy; since that cell carries `r_ω^{-1}` times
//! the energy of its pullback, the native energy is `r_ω E_K`. Measures on
//! `K_m` are carried to `K` by `φ` with their mass unchanged.

use serde::Serialize;

use crate::energy::{DiscreteFunction, GraphEnergy};
use crate::error::{invalid, Error, Result};
use crate::fractal::{Address, Word};
use crate::measure::RadonMeasure;
use crate::model::Model;
use crate::solver::{DirichletProblem, InteriorSystem, Solution, SOLVE_TOLERANCE};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupRegion {
    prefix: Word,
    reversal: Word,
    resistance_scale: f64,
    measure_scale: f64,
}

impl BlowupRegion {
    /// Region for the prefix `α_1..α_m`, `m ≥ 1`.
    pub fn new(model: &Model, prefix: Word) -> Result<Self> {
        if prefix.is_empty() {
            return invalid("blowup prefix must have at least one letter");
        }
        prefix.check_alphabet(model.structure().arity())?;
        let reversal = prefix.reversed();
        Ok(BlowupRegion {
            resistance_scale: model.cell_resistance_scale(&reversal),
            measure_scale: model.cell_measure(&reversal),
            prefix,
            reversal,
        })
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    /// `ω = α_m⋯α_1`; `φ = F_ω`.
    pub fn reversal(&self) -> &Word {
        &self.reversal
    }

    /// `r_ω`.
    pub fn resistance_scale(&self) -> f64 {
        self.resistance_scale
    }

    /// `μ_ω`.
    pub fn measure_scale(&self) -> f64 {
        self.measure_scale
    }

    /// Native address of a point of the base copy `K ⊂ K_m`.
    pub fn lift_address(&self, model: &Model, p: &Address) -> Result<Address> {
        model
            .structure()
            .canonicalize(&self.reversal.concat(&p.word), p.label)
    }

    /// A measure on the base copy `K`, expressed on `K_m`.
    pub fn lift_from_base(&self, model: &Model, sigma: &RadonMeasure) -> Result<RadonMeasure> {
        sigma.push_into_cell(model, &self.reversal)
    }

    /// Coordinates in the blowup plane, `φ^{-1}` applied to the embedding.
    pub fn coordinates(&self, model: &Model, p: &Address) -> Result<[f64; 2]> {
        let mut x = model.structure().coordinates(p)?;
        let emb = model
            .structure()
            .embedding()
            .ok_or_else(|| Error::Unsupported("structure has no embedding".into()))?;
        // φ^{-1} undoes F_{ω_1} first
        for &letter in self.reversal.letters() {
            let i = letter as usize;
            let (c, r) = (emb.map_fixed_points[i], emb.map_ratios[i]);
            x = [c[0] + (x[0] - c[0]) / r, c[1] + (x[1] - c[1]) / r];
        }
        Ok(x)
    }

    /// The problem on `K` equivalent to `P` on `K_m`. Dividing the native
    /// weak form `r_ω E(u, v) = -∫v dσ - ∫uv dν` by `r_ω` leaves the
    /// standard energy with source and potential scaled by `r_ω^{-1}`.
    pub fn embed_problem(&self, model: &Model, problem: &DirichletProblem) -> Result<DirichletProblem> {
        problem.source.validate(model)?;
        let mut out = problem.clone();
        out.source = problem.source.scaled(1.0 / self.resistance_scale);
        if let Some(nu) = &problem.potential {
            nu.validate(model)?;
            out.potential = Some(nu.scaled(1.0 / self.resistance_scale));
        }
        Ok(out)
    }

    /// Pulls a solution of the embedded problem back to `K_m` and records
    /// its residual in the natively assembled system.
    pub fn transfer_solution(
        &self,
        model: &Model,
        problem: &DirichletProblem,
        solution: &Solution,
    ) -> Result<Solution> {
        if solution.level() != problem.level {
            return Err(Error::LevelMismatch {
                expected: problem.level,
                found: solution.level(),
            });
        }
        let native = NativeSystem::assemble(self, model, problem)?;
        let u = solution.values().to_vec();
        let residual = native.system.residual(&u, &native.load);
        Ok(Solution {
            function: DiscreteFunction::new(problem.level, u),
            residual,
            ..solution.clone()
        })
    }

    /// Direct solve of `P` assembled on `K_m` itself.
    pub fn solve_native(&self, model: &Model, problem: &DirichletProblem) -> Result<Solution> {
        let native = NativeSystem::assemble(self, model, problem)?;
        let u = native.system.solve(&problem.boundary_values, &native.load);
        let residual = native.system.residual(&u, &native.load);
        let scale = 1.0 + native.load.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(residual <= SOLVE_TOLERANCE * scale) {
            return Err(Error::Numerical(format!(
                "native solve residual {residual:.3e} exceeds tolerance"
            )));
        }
        Ok(Solution {
            function: DiscreteFunction::new(problem.level, u),
            residual,
            method: crate::solver::Method::Direct,
            iterations: None,
            contraction_factor: None,
        })
    }

    /// The energy of `K_m` at native level `n`: `r_ω E_n`.
    pub fn native_energy(&self, model: &Model, n: usize) -> Result<GraphEnergy> {
        Ok(model.graph_energy(n)?.scaled(self.resistance_scale))
    }
}

struct NativeSystem {
    system: InteriorSystem<'static>,
    load: Vec<f64>,
}

impl NativeSystem {
    fn assemble(region: &BlowupRegion, model: &Model, problem: &DirichletProblem) -> Result<Self> {
        let n = problem.level;
        let energy = region.native_energy(model, n)?;
        let mass = match &problem.potential {
            Some(nu) if !nu.is_zero() => {
                nu.require_nonnegative()?;
                Some(nu.mass_matrix(model, n, problem.refinement_depth)?)
            }
            _ => None,
        };
        Ok(NativeSystem {
            system: InteriorSystem::owning(energy, &problem.boundary, mass)?,
            load: problem.source.load_vector(model, n)?.values,
        })
    }
}

//! Discrete Dirichlet problems for `Δu = uν + σ` at level `n`.
//!
//! The weak formulation is tested against the piecewise harmonic bumps
//! `h_p^{(n)}` of the interior vertices, giving the interior system
//! `(L + M) u = -load(σ)` where `L` is the conductance Laplacian of `E_n` and
//! `M = mass_matrix(ν, n)`. The Green operator inverts the interior block of
//! `L`; its kernel is `g_n(x, y)`.

use std::borrow::Cow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::energy::{DiscreteFunction, GraphEnergy};
use crate::error::{invalid, Error, Result};
use crate::fractal::{Address, Word};
use crate::measure::{RadonMeasure, DEFAULT_REFINEMENT_DEPTH};
use crate::model::Model;
use crate::sparse::{SpdFactor, SymmetricMatrix};

/// Relative residual accepted from a direct solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Picard,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Direct => "direct",
            Method::Picard => "picard",
        })
    }
}

/// Interior block of `L (+ M)` for a fixed boundary set, factorized.
pub(crate) struct InteriorSystem<'a> {
    energy: Cow<'a, GraphEnergy>,
    mass: Option<SymmetricMatrix>,
    boundary: Vec<usize>,
    // vertex -> position among the interior unknowns
    slot: Vec<Option<usize>>,
    interior: Vec<usize>,
    factor: SpdFactor,
}

impl<'a> InteriorSystem<'a> {
    pub(crate) fn new(
        energy: &'a GraphEnergy,
        boundary: &[usize],
        mass: Option<SymmetricMatrix>,
    ) -> Result<Self> {
        InteriorSystem::build(Cow::Borrowed(energy), boundary, mass)
    }

    pub(crate) fn owning(
        energy: GraphEnergy,
        boundary: &[usize],
        mass: Option<SymmetricMatrix>,
    ) -> Result<Self> {
        InteriorSystem::build(Cow::Owned(energy), boundary, mass)
    }

    fn build(
        energy: Cow<'a, GraphEnergy>,
        boundary: &[usize],
        mass: Option<SymmetricMatrix>,
    ) -> Result<Self> {
        let nv = energy.vertex_count();
        if boundary.is_empty() {
            return invalid("boundary set must be nonempty");
        }
        let mut is_boundary = vec![false; nv];
        for &b in boundary {
            if b >= nv {
                return invalid(format!("boundary vertex {b} out of range for {nv} vertices"));
            }
            if std::mem::replace(&mut is_boundary[b], true) {
                return invalid(format!("boundary vertex {b} listed twice"));
            }
        }
        if let Some(m) = &mass {
            if m.dim() != nv {
                return invalid("mass matrix dimension does not match the level");
            }
        }
        let interior: Vec<usize> = (0..nv).filter(|&v| !is_boundary[v]).collect();
        let mut slot = vec![None; nv];
        for (k, &v) in interior.iter().enumerate() {
            slot[v] = Some(k);
        }
        check_solvable(&energy, &is_boundary, mass.as_ref())?;

        let mut upper: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (k, &p) in interior.iter().enumerate() {
            upper.insert((k, k), energy.degree(p));
            for (q, c) in energy.edges_of(p) {
                if let Some(j) = slot[q] {
                    if j > k {
                        *upper.entry((k, j)).or_insert(0.0) -= c;
                    }
                }
            }
            if let Some(m) = &mass {
                for (q, x) in m.row(p) {
                    if let Some(j) = slot[q] {
                        if j >= k {
                            *upper.entry((k, j)).or_insert(0.0) += x;
                        }
                    }
                }
            }
        }
        let factor = SpdFactor::new(interior.len(), &upper)?;
        Ok(InteriorSystem {
            energy,
            mass,
            boundary: boundary.to_vec(),
            slot,
            interior,
            factor,
        })
    }

    pub(crate) fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub(crate) fn is_interior(&self, v: usize) -> bool {
        self.slot[v].is_some()
    }

    fn operator_row(&self, u: &[f64], p: usize) -> f64 {
        let mut x = self.energy.flux(u, p);
        if let Some(m) = &self.mass {
            x += m.row(p).map(|(q, v)| v * u[q]).sum::<f64>();
        }
        x
    }

    /// Solves `(L + M) u = -load` on the interior with `u = g` on the boundary.
    pub(crate) fn solve(&self, g: &[f64], load: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.energy.vertex_count()];
        for (&b, &x) in self.boundary.iter().zip(g) {
            u[b] = x;
        }
        // rhs = -load_I - (L + M)_IB g, evaluated as -load_I - A(g extended by 0)
        let rhs: Vec<f64> = self
            .interior
            .iter()
            .map(|&p| -load[p] - self.operator_row(&u, p))
            .collect();
        let x = self.factor.solve(&rhs);
        for (&p, xi) in self.interior.iter().zip(x) {
            u[p] = xi;
        }
        u
    }

    /// `A^{-1} r` on the interior, zero on the boundary.
    pub(crate) fn apply_inverse(&self, r: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = self.interior.iter().map(|&p| r[p]).collect();
        let x = self.factor.solve(&rhs);
        let mut out = vec![0.0; self.energy.vertex_count()];
        for (&p, xi) in self.interior.iter().zip(x) {
            out[p] = xi;
        }
        out
    }

    /// `max_I |((L + M) u + load)_p|`.
    pub(crate) fn residual(&self, u: &[f64], load: &[f64]) -> f64 {
        self.interior
            .iter()
            .map(|&p| (self.operator_row(u, p) + load[p]).abs())
            .fold(0.0, f64::max)
    }
}

// Every interior component must touch the boundary or carry potential mass.
fn check_solvable(
    energy: &GraphEnergy,
    is_boundary: &[bool],
    mass: Option<&SymmetricMatrix>,
) -> Result<()> {
    let nv = energy.vertex_count();
    let mut seen = is_boundary.to_vec();
    let mut stack: Vec<usize> = (0..nv).filter(|&v| is_boundary[v]).collect();
    while let Some(p) = stack.pop() {
        for (q, _) in energy.edges_of(p) {
            if !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
    for start in 0..nv {
        if seen[start] {
            continue;
        }
        let mut component = vec![start];
        seen[start] = true;
        let mut k = 0;
        while k < component.len() {
            let p = component[k];
            k += 1;
            for (q, _) in energy.edges_of(p) {
                if !seen[q] {
                    seen[q] = true;
                    component.push(q);
                }
            }
        }
        let massive = mass.is_some_and(|m| component.iter().any(|&v| m.get(v, v) > 0.0));
        if !massive {
            return Err(Error::Singular(format!(
                "interior component containing vertex {start} has no boundary contact"
            )));
        }
    }
    Ok(())
}

/// Dirichlet problem for `Δu - uν = σ` at level `n`.
#[derive(Clone, Debug)]
pub struct DirichletProblem {
    pub level: usize,
    /// Vertex indices of the boundary set `B` at this level.
    pub boundary: Vec<usize>,
    pub boundary_values: Vec<f64>,
    pub source: RadonMeasure,
    pub potential: Option<RadonMeasure>,
    pub refinement_depth: usize,
}

impl DirichletProblem {
    /// Problem with boundary `V_0` carrying `g` (one value per boundary label).
    pub fn on_boundary(model: &Model, level: usize, g: Vec<f64>) -> Result<Self> {
        model.level(level)?;
        let b = model.structure().boundary_size();
        if g.len() != b {
            return invalid(format!("expected {b} boundary values, got {}", g.len()));
        }
        Ok(DirichletProblem {
            level,
            boundary: (0..b).collect(),
            boundary_values: g,
            source: RadonMeasure::zero(),
            potential: None,
            refinement_depth: DEFAULT_REFINEMENT_DEPTH,
        })
    }

    /// Problem with an arbitrary boundary vertex set.
    pub fn with_boundary_set(level: usize, boundary: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if boundary.len() != values.len() {
            return invalid("boundary set and boundary values differ in length");
        }
        Ok(DirichletProblem {
            level,
            boundary,
            boundary_values: values,
            source: RadonMeasure::zero(),
            potential: None,
            refinement_depth: DEFAULT_REFINEMENT_DEPTH,
        })
    }

    pub fn with_source(mut self, source: RadonMeasure) -> Self {
        self.source = source;
        self
    }

    pub fn with_potential(mut self, potential: RadonMeasure) -> Self {
        self.potential = Some(potential);
        self
    }

    pub fn with_refinement_depth(mut self, depth: usize) -> Self {
        self.refinement_depth = depth;
        self
    }

    pub fn without_potential(&self) -> Self {
        DirichletProblem {
            potential: None,
            ..self.clone()
        }
    }

    fn validate(&self, model: &Model) -> Result<()> {
        model.level(self.level)?;
        if self.boundary_values.iter().any(|v| !v.is_finite()) {
            return invalid("boundary values must be finite");
        }
        if self.boundary.len() != self.boundary_values.len() {
            return invalid("boundary set and boundary values differ in length");
        }
        self.source.validate(model)?;
        if let Some(nu) = &self.potential {
            nu.validate(model)?;
            nu.require_nonnegative()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub function: DiscreteFunction,
    /// `max_I |((L + M) u + load)_p|`.
    pub residual: f64,
    pub method: Method,
    pub iterations: Option<usize>,
    pub contraction_factor: Option<f64>,
}

impl Solution {
    pub fn level(&self) -> usize {
        self.function.level()
    }

    pub fn values(&self) -> &[f64] {
        self.function.values()
    }
}

/// A factorized Schrödinger operator `L + M` for a fixed level, boundary set
/// and potential; reusable across boundary data and sources.
pub struct SchrodingerOperator<'a> {
    model: &'a Model,
    level: usize,
    system: InteriorSystem<'a>,
}

impl<'a> SchrodingerOperator<'a> {
    pub fn new(
        model: &'a Model,
        level: usize,
        boundary: &[usize],
        potential: Option<&RadonMeasure>,
        refinement_depth: usize,
    ) -> Result<Self> {
        let energy = model.graph_energy(level)?;
        let mass = match potential {
            Some(nu) if !nu.is_zero() => Some(nu.mass_matrix(model, level, refinement_depth)?),
            Some(nu) => {
                nu.require_nonnegative()?;
                None
            }
            None => None,
        };
        Ok(SchrodingerOperator {
            model,
            level,
            system: InteriorSystem::new(energy, boundary, mass)?,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Solves with boundary values `g` (ordered like the boundary set) and
    /// source `σ`.
    pub fn solve(&self, g: &[f64], source: &RadonMeasure) -> Result<Solution> {
        if g.len() != self.system.boundary.len() {
            return invalid("boundary values do not match the boundary set");
        }
        let load = source.load_vector(self.model, self.level)?;
        self.solve_load(g, &load.values)
    }

    pub(crate) fn solve_load(&self, g: &[f64], load: &[f64]) -> Result<Solution> {
        let u = self.system.solve(g, load);
        let residual = self.system.residual(&u, load);
        let scale = 1.0
            + load.iter().fold(0.0f64, |m, x| m.max(x.abs()))
            + self.system.energy.degree(0) * g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(residual <= SOLVE_TOLERANCE * scale) {
            return Err(Error::Numerical(format!(
                "direct solve residual {residual:.3e} exceeds tolerance"
            )));
        }
        Ok(Solution {
            function: DiscreteFunction::new(self.level, u),
            residual,
            method: Method::Direct,
            iterations: None,
            contraction_factor: None,
        })
    }
}

/// Solves `Δu = σ` with Dirichlet data; `P` must not carry a potential.
pub fn solve_dirichlet(model: &Model, problem: &DirichletProblem) -> Result<Solution> {
    if problem.potential.is_some() {
        return invalid("solve_dirichlet takes a problem without potential");
    }
    problem.validate(model)?;
    SchrodingerOperator::new(model, problem.level, &problem.boundary, None, 0)?
        .solve(&problem.boundary_values, &problem.source)
}

/// Solves `Δu - uν = σ` by one sparse SPD factorization.
pub fn solve_schrodinger_direct(model: &Model, problem: &DirichletProblem) -> Result<Solution> {
    problem.validate(model)?;
    SchrodingerOperator::new(
        model,
        problem.level,
        &problem.boundary,
        problem.potential.as_ref(),
        problem.refinement_depth,
    )?
    .solve(&problem.boundary_values, &problem.source)
}

/// Inverse of `-Δ` with zero Dirichlet data on a boundary set.
pub struct GreenOperator<'a> {
    model: &'a Model,
    level: usize,
    system: InteriorSystem<'a>,
}

impl<'a> GreenOperator<'a> {
    pub fn new(model: &'a Model, level: usize, boundary: &[usize]) -> Result<Self> {
        let energy = model.graph_energy(level)?;
        Ok(GreenOperator {
            model,
            level,
            system: InteriorSystem::new(energy, boundary, None)?,
        })
    }

    /// Green operator for the boundary `V_0`.
    pub fn on_boundary(model: &'a Model, level: usize) -> Result<Self> {
        let b: Vec<usize> = (0..model.structure().boundary_size()).collect();
        GreenOperator::new(model, level, &b)
    }

    /// Dirichlet problem on the cell `C_word`: every vertex outside the open
    /// cell is a boundary vertex.
    pub fn on_cell(model: &'a Model, level: usize, cell: &Word) -> Result<Self> {
        let interior = cell_interior(model, level, cell)?;
        let nv = model.level(level)?.vertex_count();
        let boundary: Vec<usize> = (0..nv).filter(|v| !interior.contains(v)).collect();
        GreenOperator::new(model, level, &boundary)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn boundary(&self) -> &[usize] {
        &self.system.boundary
    }

    /// `x ↦ ∫ g_n(x, y) σ(dy)`, zero on the boundary set.
    pub fn apply(&self, sigma: &RadonMeasure) -> Result<DiscreteFunction> {
        let load = sigma.load_vector(self.model, self.level)?;
        Ok(DiscreteFunction::new(self.level, self.system.apply_inverse(&load.values)))
    }

    pub(crate) fn apply_load(&self, load: &[f64]) -> Vec<f64> {
        self.system.apply_inverse(load)
    }

    /// The kernel column `g_n(·, y)`.
    pub fn column(&self, y: usize) -> Vec<f64> {
        let nv = self.system.energy.vertex_count();
        if !self.system.is_interior(y) {
            return vec![0.0; nv];
        }
        let mut e = vec![0.0; nv];
        e[y] = 1.0;
        self.system.apply_inverse(&e)
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        if !self.system.is_interior(x) || !self.system.is_interior(y) {
            return 0.0;
        }
        self.column(y)[x]
    }

    /// `g_n(x, y)` for addressed vertices.
    pub fn entry_at(&self, x: &Address, y: &Address) -> Result<f64> {
        let h = self.model.hierarchy();
        Ok(self.entry(h.require_index(x, self.level)?, h.require_index(y, self.level)?))
    }

    /// Dense kernel `g_n(x, y)` over all vertices of the level.
    pub fn kernel_matrix(&self) -> Vec<Vec<f64>> {
        let nv = self.system.energy.vertex_count();
        let inv = self.system.factor.inverse();
        let mut out = vec![vec![0.0; nv]; nv];
        for (i, &p) in self.system.interior.iter().enumerate() {
            for (j, &q) in self.system.interior.iter().enumerate() {
                out[p][q] = inv[j][i];
            }
        }
        out
    }
}

/// Vertices of `V_n` in the open cell `C_word` (the closed cell minus its
/// boundary `F_word(V_0)`).
pub fn cell_interior(model: &Model, level: usize, cell: &Word) -> Result<Vec<usize>> {
    let lv = model.level(level)?;
    if cell.len() > level {
        return invalid(format!("cell of length {} is finer than level {level}", cell.len()));
    }
    let corners: Vec<usize> = model
        .hierarchy()
        .cell_boundary(cell)?
        .iter()
        .map(|a| model.hierarchy().require_index(a, level))
        .collect::<Result<_>>()?;
    let mut verts: Vec<usize> = lv
        .cells_under(cell)
        .flat_map(|c| lv.cell_vertices(c).iter().copied())
        .filter(|v| !corners.contains(v))
        .collect();
    verts.sort_unstable();
    verts.dedup();
    Ok(verts)
}

/// `κ = max_x ∫ g_n(x, y) ν(dy)`.
pub fn contraction_factor(green: &GreenOperator<'_>, nu: &RadonMeasure) -> Result<f64> {
    nu.require_nonnegative()?;
    Ok(green.apply(nu)?.values().iter().copied().fold(0.0, f64::max))
}

/// Solves `Δu - uν = σ` by iterating `u ↦ h - G(uν)` where `h` solves the
/// problem without potential. Requires `κ < 1`.
pub fn solve_schrodinger_picard(
    model: &Model,
    problem: &DirichletProblem,
    tol: f64,
    max_iter: usize,
) -> Result<Solution> {
    problem.validate(model)?;
    let green = GreenOperator::new(model, problem.level, &problem.boundary)?;
    let base = solve_dirichlet(model, &problem.without_potential())?;
    let Some(nu) = problem.potential.as_ref().filter(|nu| !nu.is_zero()) else {
        return Ok(Solution {
            method: Method::Picard,
            iterations: Some(1),
            contraction_factor: Some(0.0),
            ..base
        });
    };
    let kappa = contraction_factor(&green, nu)?;
    if kappa >= 1.0 {
        let certified = certify_local_solvability(model, nu, problem.level)
            .ok()
            .map(|c| c.depth);
        return Err(Error::NotContractive {
            kappa,
            certified_depth: certified,
        });
    }
    let mass = nu.mass_matrix(model, problem.level, problem.refinement_depth)?;
    let h = base.function.values().to_vec();
    let stop = tol * (1.0 - kappa);
    let mut u = h.clone();
    for iteration in 1..=max_iter {
        let correction = green.apply_load(&mass.mul_vec(&u));
        let next: Vec<f64> = h.iter().zip(&correction).map(|(a, b)| a - b).collect();
        let step = next
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        u = next;
        if step <= stop {
            let load = problem.source.load_vector(model, problem.level)?;
            let system =
                InteriorSystem::new(model.graph_energy(problem.level)?, &problem.boundary, Some(mass))?;
            let residual = system.residual(&u, &load.values);
            return Ok(Solution {
                function: DiscreteFunction::new(problem.level, u),
                residual,
                method: Method::Picard,
                iterations: Some(iteration),
                contraction_factor: Some(kappa),
            });
        }
    }
    Err(Error::Numerical(format!(
        "Picard iteration did not reach tolerance {tol:e} in {max_iter} iterations (kappa = {kappa:.6})"
    )))
}

/// Result of [`certify_local_solvability`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certification {
    /// Least depth `m` at which every cell has `κ_ω < 1`.
    pub depth: usize,
    /// `κ_ω` for every cell of the certified depth.
    pub cell_factors: Vec<(Word, f64)>,
    /// `max_ω κ_ω` for each depth examined, starting at 0.
    pub max_factor_by_depth: Vec<f64>,
}

/// `κ_ω = r_ω · κ(G_{n-m}, (ν|_{C_ω})∘F_ω)` for one cell of depth `m`.
pub fn cell_contraction_factor(
    model: &Model,
    green_below: &GreenOperator<'_>,
    nu: &RadonMeasure,
    cell: &Word,
) -> Result<f64> {
    let local = nu.restrict_to_cell(model, cell)?.rescale_to_cell(model, cell)?;
    Ok(model.cell_resistance_scale(cell) * contraction_factor(green_below, &local)?)
}

/// Least cell depth at which the cell-local fixed-point maps all contract.
pub fn certify_local_solvability(model: &Model, nu: &RadonMeasure, n: usize) -> Result<Certification> {
    nu.require_nonnegative()?;
    model.level(n)?;
    let arity = model.structure().arity();
    let mut history = Vec::new();
    let mut worst = (Word::empty(), f64::INFINITY);
    for m in 0..=n {
        let green = GreenOperator::on_boundary(model, n - m)?;
        let cells = arity.pow(m as u32);
        let factors: Vec<(Word, f64)> = (0..cells)
            .map(|c| {
                let w = Word::from_index(c, m, arity);
                cell_contraction_factor(model, &green, nu, &w).map(|k| (w, k))
            })
            .collect::<Result<_>>()?;
        let (cell, kappa) = factors
            .iter()
            .cloned()
            .fold((Word::empty(), 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        history.push(kappa);
        if kappa < 1.0 {
            return Ok(Certification {
                depth: m,
                cell_factors: factors,
                max_factor_by_depth: history,
            });
        }
        worst = (cell, kappa);
    }
    Err(Error::CertificationFailed {
        depth: n,
        cell: worst.0,
        kappa: worst.1,
    })
}

/// Approximations `E(h_p^{(n)}, u)` of the normal derivative at `p ∈ V_0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalDerivative {
    /// Term `n` is `Σ_{q ~_n p} c_pq (u(p) - u(q))`, for `n = 0..=level`.
    pub terms: Vec<f64>,
    /// Aitken extrapolation of the last three terms, or the last term when
    /// the tail does not contract.
    pub limit: f64,
    /// `(s_n - s_{n-1}) / (s_{n-1} - s_{n-2})` for the last three terms.
    pub tail_ratio: Option<f64>,
}

pub fn normal_derivative(model: &Model, u: &DiscreteFunction, p: &Address) -> Result<NormalDerivative> {
    u.check(model)?;
    let canon = model.structure().canonicalize(&p.word, p.label)?;
    if canon.level() != 0 {
        return invalid(format!("normal derivatives are defined on V_0 only, not at {canon}"));
    }
    let v = canon.label;
    let terms: Vec<f64> = (0..=u.level())
        .map(|n| Ok(model.graph_energy(n)?.flux(u.values(), v)))
        .collect::<Result<_>>()?;
    let (limit, tail_ratio) = match terms.len() {
        0..=2 => (*terms.last().unwrap(), None),
        k => {
            let (s0, s1, s2) = (terms[k - 3], terms[k - 2], terms[k - 1]);
            let (d1, d2) = (s1 - s0, s2 - s1);
            let scale = s2.abs().max(1.0);
            let ratio = (d1.abs() > 1e-14 * scale).then(|| d2 / d1);
            let denom = d2 - d1;
            // Aitken is only meaningful on a contracting tail
            let contracting = ratio.is_some_and(|r| r.abs() < 1.0);
            let limit = if contracting && denom.abs() > 1e-14 * scale {
                s2 - d2 * d2 / denom
            } else {
                s2
            };
            (limit, ratio)
        }
    };
    Ok(NormalDerivative {
        terms,
        limit,
        tail_ratio,
    })
}

/// Load vector of the measure `Δu` for a level-`n` function: `-(L u)_p`.
/// Interior entries are exact for the Galerkin solution; boundary entries
/// are the (negated) fluxes.
pub fn laplacian_load(model: &Model, u: &DiscreteFunction) -> Result<Vec<f64>> {
    u.check(model)?;
    Ok(model
        .graph_energy(u.level())?
        .apply_laplacian(u.values())
        .into_iter()
        .map(|x| -x)
        .collect())
}

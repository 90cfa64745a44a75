//! Harmonic structures, level-n energies, harmonic extension, effective
//! resistance and exact integration of harmonic functions against the
//! self-similar measure.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fractal::{Address, Level, Word};
use crate::model::Model;
use crate::solver::InteriorSystem;

/// Bounds on each renormalization factor `r_i`.
pub const RENORMALIZATION_BOUNDS: (f64, f64) = (1e-6, 1.0 - 1e-6);

/// Boundary form `E_0` in conductance form plus renormalization factors.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicStructure {
    conductances: Vec<Vec<f64>>,
    renormalization: Vec<f64>,
}

impl HarmonicStructure {
    /// `conductances` is a symmetric `|V_0| x |V_0|` matrix of edge weights
    /// `c_ab >= 0` (diagonal ignored) whose graph must be connected.
    pub fn new(conductances: Vec<Vec<f64>>, renormalization: Vec<f64>) -> Result<Self> {
        let b = conductances.len();
        let bad = |m: String| Err(Error::InvalidStructure(m));
        if b < 2 || conductances.iter().any(|row| row.len() != b) {
            return bad("conductance matrix must be square with at least two rows".into());
        }
        for a in 0..b {
            for c in 0..b {
                let x = conductances[a][c];
                if a != c && (!x.is_finite() || x < 0.0) {
                    return bad(format!("conductance c[{a}][{c}] = {x} is not a nonnegative number"));
                }
                if (x - conductances[c][a]).abs() > 1e-14 * x.abs().max(1.0) {
                    return bad("conductance matrix is not symmetric".into());
                }
            }
        }
        // irreducibility: the conductance graph must be connected
        let mut reached = vec![false; b];
        let mut stack = vec![0];
        reached[0] = true;
        while let Some(a) = stack.pop() {
            for c in 0..b {
                if c != a && conductances[a][c] > 0.0 && !reached[c] {
                    reached[c] = true;
                    stack.push(c);
                }
            }
        }
        if reached.iter().any(|&r| !r) {
            return bad("boundary form is reducible (conductance graph disconnected)".into());
        }
        let (lo, hi) = RENORMALIZATION_BOUNDS;
        if renormalization.iter().any(|&r| !(lo..=hi).contains(&r)) {
            return bad(format!("renormalization factors must lie in [{lo}, {hi}]"));
        }
        let mut conductances = conductances;
        for (a, row) in conductances.iter_mut().enumerate() {
            row[a] = 0.0;
        }
        Ok(HarmonicStructure {
            conductances,
            renormalization,
        })
    }

    /// Unit conductances on the triangle, `r_i = 3/5`.
    pub fn sierpinski() -> Self {
        let c = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        HarmonicStructure::new(c, vec![0.6; 3]).expect("gasket harmonic structure is valid")
    }

    pub fn boundary_size(&self) -> usize {
        self.conductances.len()
    }

    pub fn conductance(&self, a: usize, c: usize) -> f64 {
        self.conductances[a][c]
    }

    pub fn conductances(&self) -> &[Vec<f64>] {
        &self.conductances
    }

    pub fn renormalization(&self) -> &[f64] {
        &self.renormalization
    }

    /// `E_0(u, u)`.
    pub fn boundary_energy(&self, u: &[f64]) -> f64 {
        let b = self.boundary_size();
        let mut e = 0.0;
        for a in 0..b {
            for c in (a + 1)..b {
                e += self.conductances[a][c] * (u[a] - u[c]).powi(2);
            }
        }
        e
    }
}

/// Values on `V_n`, indexed by the stable vertex order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteFunction {
    level: usize,
    values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(level: usize, values: Vec<f64>) -> Self {
        DiscreteFunction { level, values }
    }

    pub fn constant(model: &Model, level: usize, c: f64) -> Result<Self> {
        let n = model.level(level)?.vertex_count();
        Ok(DiscreteFunction::new(level, vec![c; n]))
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, v: usize) -> f64 {
        self.values[v]
    }

    /// Restriction to `V_m` for `m <= level`.
    pub fn restrict(&self, model: &Model, m: usize) -> Result<DiscreteFunction> {
        if m > self.level {
            return invalid(format!("cannot restrict a level-{} function to level {m}", self.level));
        }
        let n = model.level(m)?.vertex_count();
        Ok(DiscreteFunction::new(m, self.values[..n].to_vec()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_distance(&self, other: &DiscreteFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `u∘F_cell` on `V_{n-|cell|}`.
    pub fn pull_back(&self, model: &Model, cell: &Word) -> Result<DiscreteFunction> {
        self.check(model)?;
        let map = model.hierarchy().cell_embedding(cell, self.level)?;
        Ok(DiscreteFunction::new(
            self.level - cell.len(),
            map.iter().map(|&v| self.values[v]).collect(),
        ))
    }

    pub fn scaled(&self, t: f64) -> DiscreteFunction {
        DiscreteFunction::new(self.level, self.values.iter().map(|v| v * t).collect())
    }

    pub(crate) fn check(&self, model: &Model) -> Result<()> {
        let n = model.level(self.level)?.vertex_count();
        if self.values.len() != n {
            return invalid(format!(
                "function has {} values but V_{} has {n} vertices",
                self.values.len(),
                self.level
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return invalid("function has non-finite values");
        }
        Ok(())
    }
}

/// Conductance network of `E_n`.
#[derive(Clone, Debug)]
pub struct GraphEnergy {
    level: usize,
    ptr: Vec<usize>,
    nbr: Vec<usize>,
    cond: Vec<f64>,
    degree: Vec<f64>,
    cell_rinv: Vec<f64>,
}

impl GraphEnergy {
    /// Accumulates `r_ω^{-1} E_0(u∘F_ω)` over all cells of the level.
    pub fn assemble(h: &HarmonicStructure, level: &Level) -> Self {
        let b = h.boundary_size();
        let arity = h.renormalization.len();
        let mut cell_rinv = vec![1.0];
        for _ in 0..level.level() {
            cell_rinv = cell_rinv
                .iter()
                .flat_map(|&x| h.renormalization.iter().map(move |&r| x / r))
                .collect();
        }
        debug_assert_eq!(cell_rinv.len(), level.cell_count());
        debug_assert_eq!(arity.pow(level.level() as u32), level.cell_count());

        let nv = level.vertex_count();
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for (c, &rinv) in cell_rinv.iter().enumerate() {
            let verts = level.cell_vertices(c);
            for a in 0..b {
                for d in (a + 1)..b {
                    let w = h.conductances[a][d];
                    if w > 0.0 {
                        let (p, q) = (verts[a], verts[d]);
                        edges.push((p, q, w * rinv));
                        edges.push((q, p, w * rinv));
                    }
                }
            }
        }
        edges.sort_unstable_by_key(|x| (x.0, x.1));
        let mut ptr = vec![0usize; nv + 1];
        let mut nbr = Vec::with_capacity(edges.len());
        let mut cond: Vec<f64> = Vec::with_capacity(edges.len());
        let mut degree = vec![0.0; nv];
        let mut last: Option<(usize, usize)> = None;
        for (p, q, w) in edges {
            degree[p] += w;
            if last == Some((p, q)) {
                *cond.last_mut().unwrap() += w;
            } else {
                nbr.push(q);
                cond.push(w);
                ptr[p + 1] += 1;
                last = Some((p, q));
            }
        }
        for v in 0..nv {
            ptr[v + 1] += ptr[v];
        }
        GraphEnergy {
            level: level.level(),
            ptr,
            nbr,
            cond,
            degree,
            cell_rinv,
        }
    }

    /// Same network with every conductance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> GraphEnergy {
        let mut out = self.clone();
        out.cond.iter_mut().for_each(|c| *c *= factor);
        out.degree.iter_mut().for_each(|c| *c *= factor);
        out.cell_rinv.iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn vertex_count(&self) -> usize {
        self.degree.len()
    }

    /// `r_ω^{-1}` for each cell of the level.
    pub fn cell_rinv(&self) -> &[f64] {
        &self.cell_rinv
    }

    /// Neighbors of `p` with their conductances.
    pub fn edges_of(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.ptr[p]..self.ptr[p + 1];
        self.nbr[r.clone()].iter().copied().zip(self.cond[r].iter().copied())
    }

    pub fn conductance(&self, p: usize, q: usize) -> f64 {
        self.edges_of(p)
            .find(|&(r, _)| r == q)
            .map(|(_, c)| c)
            .unwrap_or(0.0)
    }

    /// Total conductance at `p`.
    pub fn degree(&self, p: usize) -> f64 {
        self.degree[p]
    }

    pub fn edge_count(&self) -> usize {
        self.nbr.len() / 2
    }

    /// `E_n(u, v) = Σ_{p<q} c_pq (u(p)-u(q)) (v(p)-v(q))`.
    pub fn energy(&self, u: &DiscreteFunction, v: &DiscreteFunction) -> Result<f64> {
        for f in [u, v] {
            if f.level() != self.level {
                return Err(Error::LevelMismatch {
                    expected: self.level,
                    found: f.level(),
                });
            }
            if f.len() != self.vertex_count() {
                return invalid("function length does not match the vertex count");
            }
        }
        Ok(self.energy_of(u.values(), v.values()))
    }

    pub(crate) fn energy_of(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut e = 0.0;
        for p in 0..self.vertex_count() {
            for (q, c) in self.edges_of(p) {
                if p < q {
                    e += c * (u[p] - u[q]) * (v[p] - v[q]);
                }
            }
        }
        e
    }

    /// `(L u)_p = Σ_q c_pq (u(p) - u(q)) = E_n(u, h_p)`.
    pub fn apply_laplacian(&self, u: &[f64]) -> Vec<f64> {
        (0..self.vertex_count())
            .map(|p| self.flux(u, p))
            .collect()
    }

    /// `Σ_{q ~ p} c_pq (u(p) - u(q))`.
    pub fn flux(&self, u: &[f64], p: usize) -> f64 {
        self.edges_of(p).map(|(q, c)| c * (u[p] - u[q])).sum()
    }
}

/// Level-1 harmonic extension matrices and the exact integration data for
/// harmonic functions against the self-similar measure.
#[derive(Clone, Debug)]
pub struct HarmonicCalculus {
    /// `extension[i][(a, c)]`: value at `F_i(q_a)` of the harmonic function
    /// equal to `1` at `q_c` and `0` on the rest of `V_0`.
    extension: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
    moments: DMatrix<f64>,
}

impl HarmonicCalculus {
    pub(crate) fn new(
        h: &HarmonicStructure,
        level1: &Level,
        energy1: &GraphEnergy,
        measure_weights: &[f64],
    ) -> Result<Self> {
        let b = h.boundary_size();
        let nv = level1.vertex_count();
        let ni = nv - b;
        let mut l_ii = DMatrix::<f64>::zeros(ni, ni);
        let mut l_ib = DMatrix::<f64>::zeros(ni, b);
        let mut l_bb = DMatrix::<f64>::zeros(b, b);
        for p in 0..nv {
            for (q, c) in energy1.edges_of(p) {
                match (p >= b, q >= b) {
                    (true, true) => l_ii[(p - b, q - b)] -= c,
                    (true, false) => l_ib[(p - b, q)] -= c,
                    (false, false) => l_bb[(p, q)] -= c,
                    (false, true) => {}
                }
            }
            let d = energy1.degree(p);
            if p >= b {
                l_ii[(p - b, p - b)] += d;
            } else {
                l_bb[(p, p)] += d;
            }
        }
        let interior = if ni == 0 {
            DMatrix::zeros(0, b)
        } else {
            let chol = l_ii.clone().cholesky().ok_or_else(|| {
                Error::Singular("level-1 interior system is not positive definite".into())
            })?;
            -chol.solve(&l_ib)
        };

        // The trace of E_1 on V_0 must reproduce E_0.
        let trace = &l_bb + l_ib.transpose() * &interior;
        let mut l0 = DMatrix::<f64>::zeros(b, b);
        for a in 0..b {
            for c in 0..b {
                if a != c {
                    l0[(a, c)] = -h.conductance(a, c);
                    l0[(a, a)] += h.conductance(a, c);
                }
            }
        }
        let mismatch = (&trace - &l0).amax();
        if mismatch > 1e-10 * l0.amax() {
            return Err(Error::InvalidStructure(format!(
                "renormalization factors are inconsistent with E_0 (trace mismatch {mismatch:.3e})"
            )));
        }

        let value = |v: usize, c: usize| {
            if v < b {
                if v == c {
                    1.0
                } else {
                    0.0
                }
            } else {
                interior[(v - b, c)]
            }
        };
        let arity = measure_weights.len();
        let extension: Vec<DMatrix<f64>> = (0..arity)
            .map(|i| {
                let verts = level1.cell_vertices(i);
                DMatrix::from_fn(b, b, |a, c| value(verts[a], c))
            })
            .collect();

        let weights = integration_weights(&extension, measure_weights)?;
        let moments = product_moments(&extension, measure_weights, &weights)?;
        Ok(HarmonicCalculus {
            extension,
            weights,
            moments,
        })
    }

    pub fn extension_matrix(&self, map: usize) -> &DMatrix<f64> {
        &self.extension[map]
    }

    /// `w` with `∫_K h dμ = Σ_a w_a h(q_a)` for harmonic `h`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Q_ab = ∫_K h_a h_b dμ` for the harmonic functions `h_a` with boundary
    /// values `e_a`.
    pub fn moments(&self) -> &DMatrix<f64> {
        &self.moments
    }

    /// `A_{s_k} ⋯ A_{s_1}`: boundary values on `C_{τ s}` from those on `C_τ`.
    pub fn suffix_matrix(&self, suffix: &[u8]) -> DMatrix<f64> {
        let b = self.weights.len();
        suffix
            .iter()
            .fold(DMatrix::identity(b, b), |acc, &s| &self.extension[s as usize] * acc)
    }
}

/// Solves `w = Σ_i μ_i A_iᵀ w`, `Σ_a w_a = 1`.
fn integration_weights(extension: &[DMatrix<f64>], mu: &[f64]) -> Result<Vec<f64>> {
    let b = extension[0].nrows();
    let mut m = DMatrix::<f64>::identity(b, b);
    for (a, &w) in extension.iter().zip(mu) {
        m -= a.transpose() * w;
    }
    // Columns of I - Σ μ_i A_iᵀ sum to zero, so one row is redundant.
    for c in 0..b {
        m[(b - 1, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(b);
    rhs[b - 1] = 1.0;
    let w = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidStructure("integration weight system is singular".into()))?;
    Ok(w.iter().copied().collect())
}

/// Solves `Q = Σ_i μ_i A_iᵀ Q A_i` normalized by `Q 1 = w`.
fn product_moments(extension: &[DMatrix<f64>], mu: &[f64], w: &[f64]) -> Result<DMatrix<f64>> {
    let b = extension[0].nrows();
    let nn = b * b;
    let idx = |a: usize, c: usize| a * b + c;
    let mut sys = DMatrix::<f64>::zeros(nn + b, nn);
    let mut rhs = DVector::<f64>::zeros(nn + b);
    for a in 0..b {
        for c in 0..b {
            let row = idx(a, c);
            sys[(row, row)] += 1.0;
            // (A_iᵀ Q A_i)_{ac} = Σ_{d,e} A_i[d][a] Q[d][e] A_i[e][c]
            for (ext, &m) in extension.iter().zip(mu) {
                for d in 0..b {
                    for e in 0..b {
                        sys[(row, idx(d, e))] -= m * ext[(d, a)] * ext[(e, c)];
                    }
                }
            }
        }
    }
    for a in 0..b {
        for c in 0..b {
            sys[(nn + a, idx(a, c))] = 1.0;
        }
        rhs[nn + a] = w[a];
    }
    let svd = sys.clone().svd(true, true);
    let smallest = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest < 1e-10 {
        return Err(Error::InvalidStructure(
            "product moment system does not have a unique solution".into(),
        ));
    }
    let q = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numerical(format!("product moment solve failed: {e}")))?;
    let residual = (&sys * &q - &rhs).amax();
    if residual > 1e-12 {
        return Err(Error::Numerical(format!(
            "product moment system is inconsistent (residual {residual:.3e})"
        )));
    }
    let q = DMatrix::from_fn(b, b, |a, c| q[idx(a, c)]);
    Ok((&q + q.transpose()) * 0.5)
}

/// Effective resistances between all pairs of `V_n`, from the inverse of the
/// Laplacian grounded at vertex 0.
#[derive(Clone, Debug)]
pub struct ResistanceTable {
    level: usize,
    grounded_inverse: Vec<Vec<f64>>,
}

impl ResistanceTable {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn resistance(&self, p: usize, q: usize) -> f64 {
        let x = |i: usize, j: usize| {
            if i == 0 || j == 0 {
                0.0
            } else {
                self.grounded_inverse[i - 1][j - 1]
            }
        };
        (x(p, p) + x(q, q) - 2.0 * x(p, q)).max(0.0)
    }
}

impl Model {
    /// Harmonic extension from `V_n` to `V_{n+1}`.
    pub fn harmonic_extend(&self, u: &DiscreteFunction) -> Result<DiscreteFunction> {
        u.check(self)?;
        let n = u.level();
        let coarse = self.level(n)?;
        let fine = self.level(n + 1)?;
        let arity = self.structure().arity();
        let b = self.structure().boundary_size();
        let mut values = u.values().to_vec();
        values.resize(fine.vertex_count(), f64::NAN);
        let calc = self.calculus();
        for k in 0..coarse.cell_count() {
            let parent = coarse.cell_vertices(k);
            for i in 0..arity {
                let child = fine.cell_vertices(k * arity + i);
                let a_i = calc.extension_matrix(i);
                for a in 0..b {
                    let v = child[a];
                    if v >= coarse.vertex_count() {
                        values[v] = (0..b).map(|c| a_i[(a, c)] * u.get(parent[c])).sum();
                    }
                }
            }
        }
        Ok(DiscreteFunction::new(n + 1, values))
    }

    /// Repeated harmonic extension of `u` up to level `m`.
    pub fn extend_to(&self, u: &DiscreteFunction, m: usize) -> Result<DiscreteFunction> {
        if m < u.level() {
            return invalid(format!("target level {m} is below level {}", u.level()));
        }
        let mut f = u.clone();
        while f.level() < m {
            f = self.harmonic_extend(&f)?;
        }
        Ok(f)
    }

    /// `h_p^{(n)}` sampled on `V_m`.
    pub fn bump(&self, p: &Address, n: usize, m: usize) -> Result<DiscreteFunction> {
        let v = self.hierarchy().require_index(p, n)?;
        let mut values = vec![0.0; self.level(n)?.vertex_count()];
        values[v] = 1.0;
        self.extend_to(&DiscreteFunction::new(n, values), m)
    }

    /// `E_n(u, v)`.
    pub fn energy(&self, u: &DiscreteFunction, v: &DiscreteFunction) -> Result<f64> {
        self.graph_energy(u.level())?.energy(u, v)
    }

    /// `R(p, q) = 1 / E_n(v, v)` for the two-point Dirichlet solution
    /// `v(p) = 1`, `v(q) = 0`.
    pub fn effective_resistance(&self, p: &Address, q: &Address, n: usize) -> Result<f64> {
        let vp = self.hierarchy().require_index(p, n)?;
        let vq = self.hierarchy().require_index(q, n)?;
        if vp == vq {
            return Ok(0.0);
        }
        let energy = self.graph_energy(n)?;
        let system = InteriorSystem::new(energy, &[vp, vq], None)?;
        let u = system.solve(&[1.0, 0.0], &vec![0.0; energy.vertex_count()]);
        let e = energy.energy_of(&u, &u);
        if !(e > 0.0) {
            return Err(Error::Numerical("two-point energy vanished".into()));
        }
        Ok(1.0 / e)
    }

    /// All-pairs resistance table for `V_n`.
    pub fn resistance_table(&self, n: usize) -> Result<ResistanceTable> {
        let energy = self.graph_energy(n)?;
        let system = InteriorSystem::new(energy, &[0], None)?;
        Ok(ResistanceTable {
            level: n,
            grounded_inverse: system.factor().inverse(),
        })
    }

    /// `∫_K h dμ` for the harmonic function with boundary values `boundary`.
    pub fn integrate_harmonic(&self, boundary: &[f64]) -> f64 {
        self.calculus()
            .weights()
            .iter()
            .zip(boundary)
            .map(|(w, h)| w * h)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sg(n: usize) -> Model {
        Model::sierpinski(n)
    }

    #[test]
    fn level_one_conductances() {
        let m = sg(1);
        let e0 = m.graph_energy(0).unwrap();
        assert_eq!(e0.edge_count(), 3);
        assert!((0..3).all(|p| e0.edges_of(p).all(|(_, c)| c == 1.0)));
        let e1 = m.graph_energy(1).unwrap();
        assert_eq!(e1.edge_count(), 9);
        for p in 0..6 {
            for (_, c) in e1.edges_of(p) {
                assert!((c - 5.0 / 3.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn boundary_indicator_energy() {
        let m = sg(0);
        let u = DiscreteFunction::new(0, vec![1.0, 0.0, 0.0]);
        assert_eq!(m.energy(&u, &u).unwrap(), 2.0);
        let one = DiscreteFunction::constant(&m, 0, 1.0).unwrap();
        assert_eq!(m.energy(&u, &one).unwrap(), 0.0);
    }

    #[test]
    fn energy_rejects_level_mismatch() {
        let m = sg(1);
        let u = DiscreteFunction::constant(&m, 0, 1.0).unwrap();
        let v = DiscreteFunction::constant(&m, 1, 1.0).unwrap();
        assert!(matches!(
            m.graph_energy(1).unwrap().energy(&u, &v),
            Err(Error::LevelMismatch { .. })
        ));
    }

    #[test]
    fn one_fifth_two_fifths_rule() {
        let m = sg(1);
        let u = DiscreteFunction::new(0, vec![1.0, 0.0, 0.0]);
        let ext = m.harmonic_extend(&u).unwrap();
        let at = |word: &str, label| {
            let a = Address::new(word.parse().unwrap(), label);
            ext.get(m.hierarchy().require_index(&a, 1).unwrap())
        };
        assert!((at("0", 1) - 0.4).abs() < 1e-12);
        assert!((at("0", 2) - 0.4).abs() < 1e-12);
        assert!((at("1", 2) - 0.2).abs() < 1e-12);
        assert!((m.energy(&ext, &ext).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constants_extend_to_constants() {
        let m = sg(3);
        let c = DiscreteFunction::constant(&m, 0, 2.5).unwrap();
        let e = m.extend_to(&c, 3).unwrap();
        assert!(e.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn bump_is_indicator_at_own_level() {
        let m = sg(2);
        let p = Address::new("1".parse().unwrap(), 2);
        let b = m.bump(&p, 1, 1).unwrap();
        let v = m.hierarchy().require_index(&p, 1).unwrap();
        for (i, &x) in b.values().iter().enumerate() {
            assert_eq!(x, if i == v { 1.0 } else { 0.0 });
        }
        assert!(m.bump(&Address::new("01".parse().unwrap(), 2), 1, 2).is_err());
    }

    #[test]
    fn resistance_between_corners() {
        let m = sg(3);
        for n in 0..=3 {
            let r = m
                .effective_resistance(&Address::boundary(0), &Address::boundary(1), n)
                .unwrap();
            assert!((r - 2.0 / 3.0).abs() < 1e-10, "level {n}: {r}");
        }
        assert_eq!(
            m.effective_resistance(&Address::boundary(1), &Address::boundary(1), 2)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn gasket_integration_weights() {
        let m = sg(1);
        for w in m.calculus().weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-14);
        }
        assert!((m.integrate_harmonic(&[1.0, 0.0, 0.0]) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn moments_are_consistent() {
        let m = sg(1);
        let q = m.calculus().moments();
        let w = m.calculus().weights();
        for a in 0..3 {
            let row: f64 = (0..3).map(|c| q[(a, c)]).sum();
            assert!((row - w[a]).abs() < 1e-14);
            for c in 0..3 {
                assert!((q[(a, c)] - q[(c, a)]).abs() < 1e-15);
                assert!(q[(a, c)] > 0.0);
            }
        }
    }

    #[test]
    fn inconsistent_renormalization_is_rejected() {
        let s = crate::fractal::FractalStructure::sierpinski();
        let h = HarmonicStructure::new(HarmonicStructure::sierpinski().conductances().to_vec(), vec![0.5; 3])
            .unwrap();
        assert!(matches!(Model::new(s, h, 1), Err(Error::InvalidStructure(_))));
    }

    #[test]
    fn degenerate_factors_are_rejected() {
        let c = HarmonicStructure::sierpinski().conductances().to_vec();
        assert!(HarmonicStructure::new(c.clone(), vec![1.0; 3]).is_err());
        assert!(HarmonicStructure::new(c, vec![0.0, 0.6, 0.6]).is_err());
        let split = vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]];
        assert!(HarmonicStructure::new(split, vec![0.6; 3]).is_err());
    }
}

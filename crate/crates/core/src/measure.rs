//! Finite signed Radon measures built from point masses on `V_*` and
//! cell-restricted multiples of the self-similar measure `μ`.
//!
//! Integration against piecewise harmonic functions is exact: first moments
//! use the harmonic integration weights, second moments the product moment
//! matrix `Q = Σ_i μ_i A_iᵀ Q A_i`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fractal::{Address, Word};
use crate::model::Model;
use crate::sparse::SymmetricMatrix;

/// Default refinement depth beyond the assembly level for second moments.
pub const DEFAULT_REFINEMENT_DEPTH: usize = 4;

/// Point mass at `F_word(q_label)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub word: Word,
    pub label: usize,
    pub mass: f64,
}

impl Atom {
    pub fn new(at: Address, mass: f64) -> Self {
        Atom {
            word: at.word,
            label: at.label,
            mass,
        }
    }

    pub fn address(&self) -> Address {
        Address::new(self.word.clone(), self.label)
    }
}

/// `coefficient · μ|_{C_cell_word}`, of total mass `coefficient · μ_ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarPart {
    pub cell_word: Word,
    pub coefficient: f64,
}

impl SelfSimilarPart {
    pub fn new(cell_word: Word, coefficient: f64) -> Self {
        SelfSimilarPart {
            cell_word,
            coefficient,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RadonMeasure {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default, rename = "self_similar")]
    pub parts: Vec<SelfSimilarPart>,
}

/// `∫ h_p^{(n)} dσ` for every `p ∈ V_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadVector {
    pub level: usize,
    pub values: Vec<f64>,
}

impl LoadVector {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

impl RadonMeasure {
    pub fn zero() -> Self {
        RadonMeasure::default()
    }

    /// The self-similar probability measure `μ`.
    pub fn self_similar() -> Self {
        RadonMeasure::zero().with_part(Word::empty(), 1.0)
    }

    pub fn atom(at: Address, mass: f64) -> Self {
        RadonMeasure::zero().with_atom(at, mass)
    }

    pub fn with_atom(mut self, at: Address, mass: f64) -> Self {
        self.atoms.push(Atom::new(at, mass));
        self
    }

    pub fn with_part(mut self, cell: Word, coefficient: f64) -> Self {
        self.parts.push(SelfSimilarPart::new(cell, coefficient));
        self
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.mass == 0.0) && self.parts.iter().all(|p| p.coefficient == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|a| a.mass >= 0.0) && self.parts.iter().all(|p| p.coefficient >= 0.0)
    }

    /// Errors unless every component is nonnegative.
    pub fn require_nonnegative(&self) -> Result<()> {
        if let Some(a) = self.atoms.iter().find(|a| !(a.mass >= 0.0)) {
            return invalid(format!("negative atom mass {} at {}", a.mass, a.address()));
        }
        if let Some(p) = self.parts.iter().find(|p| !(p.coefficient >= 0.0)) {
            return invalid(format!(
                "negative coefficient {} on cell {:?}",
                p.coefficient,
                p.cell_word.to_string()
            ));
        }
        Ok(())
    }

    /// Checks addresses, letters and finiteness against a model.
    pub fn validate(&self, model: &Model) -> Result<()> {
        let s = model.structure();
        for a in &self.atoms {
            if !a.mass.is_finite() {
                return invalid("atom mass is not finite");
            }
            s.canonicalize(&a.word, a.label)?;
        }
        for p in &self.parts {
            if !p.coefficient.is_finite() {
                return invalid("self-similar coefficient is not finite");
            }
            s.canonicalize(&p.cell_word, 0)?;
        }
        Ok(())
    }

    pub fn scaled(&self, t: f64) -> RadonMeasure {
        RadonMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { mass: a.mass * t, ..a.clone() })
                .collect(),
            parts: self
                .parts
                .iter()
                .map(|p| SelfSimilarPart::new(p.cell_word.clone(), p.coefficient * t))
                .collect(),
        }
    }

    pub fn plus(&self, other: &RadonMeasure) -> RadonMeasure {
        let mut out = self.clone();
        out.atoms.extend(other.atoms.iter().cloned());
        out.parts.extend(other.parts.iter().cloned());
        out
    }

    /// `σ(K) = Σ atom masses + Σ coefficient · μ_ω`.
    pub fn total_mass(&self, model: &Model) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let parts: f64 = self
            .parts
            .iter()
            .map(|p| p.coefficient * model.cell_measure(&p.cell_word))
            .sum();
        atoms + parts
    }

    /// Largest level at which an atom first appears.
    pub fn atom_level(&self, model: &Model) -> Result<usize> {
        self.atoms.iter().try_fold(0, |acc, a| {
            Ok(acc.max(model.structure().canonicalize(&a.word, a.label)?.level()))
        })
    }

    fn atom_index(&self, model: &Model, atom: &Atom, n: usize) -> Result<usize> {
        let canon = model.structure().canonicalize(&atom.word, atom.label)?;
        if canon.level() > n {
            return Err(Error::Resolution {
                atom_level: canon.level(),
                level: n,
            });
        }
        model.hierarchy().require_index(&canon, n)
    }

    /// Exact `∫ h_p^{(n)} dσ` for all `p ∈ V_n`.
    pub fn load_vector(&self, model: &Model, n: usize) -> Result<LoadVector> {
        let level = model.level(n)?;
        let mu_cells = model.cell_measures(n)?;
        let arity = model.structure().arity();
        let calc = model.calculus();
        let w = calc.weights();
        let mut values = vec![0.0; level.vertex_count()];
        for atom in &self.atoms {
            let v = self.atom_index(model, atom, n)?;
            values[v] += atom.mass;
        }
        for part in &self.parts {
            if part.coefficient == 0.0 {
                continue;
            }
            let c = part.coefficient;
            if part.cell_word.len() <= n {
                for cell in level.cells_under(&part.cell_word) {
                    let scale = c * mu_cells[cell];
                    for (&v, wa) in level.cell_vertices(cell).iter().zip(w) {
                        values[v] += scale * wa;
                    }
                }
            } else {
                let cell = part.cell_word.prefix(n).index(arity);
                let m = calc.suffix_matrix(&part.cell_word.letters()[n..]);
                let scale = c * model.cell_measure(&part.cell_word);
                for (a, &v) in level.cell_vertices(cell).iter().enumerate() {
                    // (Mᵀ w)_a
                    let mw: f64 = (0..w.len()).map(|d| m[(d, a)] * w[d]).sum();
                    values[v] += scale * mw;
                }
            }
        }
        Ok(LoadVector { level: n, values })
    }

    /// `M_pq = ∫ h_p^{(n)} h_q^{(n)} dν` for a nonnegative measure. Second
    /// moments on each level-`n` cell are refined `depth` further levels with
    /// the exact product moments on the leaves.
    pub fn mass_matrix(&self, model: &Model, n: usize, depth: usize) -> Result<SymmetricMatrix> {
        self.require_nonnegative()?;
        let level = model.level(n)?;
        let mu_cells = model.cell_measures(n)?;
        let arity = model.structure().arity();
        let calc = model.calculus();
        let refined = refined_moments(model, depth);
        let mut upper: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut add = |p: usize, q: usize, x: f64| {
            let key = if p <= q { (p, q) } else { (q, p) };
            *upper.entry(key).or_insert(0.0) += x;
        };
        for atom in &self.atoms {
            let v = self.atom_index(model, atom, n)?;
            if atom.mass != 0.0 {
                add(v, v, atom.mass);
            }
        }
        for part in &self.parts {
            if part.coefficient == 0.0 {
                continue;
            }
            let c = part.coefficient;
            let (cells, local): (Vec<(usize, f64)>, DMatrix<f64>) = if part.cell_word.len() <= n {
                (
                    level
                        .cells_under(&part.cell_word)
                        .map(|cell| (cell, c * mu_cells[cell]))
                        .collect(),
                    refined.clone(),
                )
            } else {
                let m = calc.suffix_matrix(&part.cell_word.letters()[n..]);
                (
                    vec![(
                        part.cell_word.prefix(n).index(arity),
                        c * model.cell_measure(&part.cell_word),
                    )],
                    m.transpose() * &refined * m,
                )
            };
            for (cell, scale) in cells {
                let verts = level.cell_vertices(cell);
                for a in 0..verts.len() {
                    for d in a..verts.len() {
                        // distinct labels of one cell are distinct vertices
                        add(verts[a], verts[d], scale * local[(a, d)]);
                    }
                }
            }
        }
        Ok(SymmetricMatrix::from_upper(level.vertex_count(), &upper))
    }

    /// Restriction to the closed cell `C_cell`.
    pub fn restrict_to_cell(&self, model: &Model, cell: &Word) -> Result<RadonMeasure> {
        let s = model.structure();
        let mut out = RadonMeasure::zero();
        for a in &self.atoms {
            if s.cell_contains(cell, &a.address())? {
                out.atoms.push(a.clone());
            }
        }
        for p in &self.parts {
            if p.cell_word.starts_with(cell) {
                out.parts.push(p.clone());
            } else if cell.starts_with(&p.cell_word) {
                out.parts.push(SelfSimilarPart::new(cell.clone(), p.coefficient));
            }
        }
        Ok(out)
    }

    /// Pullback `σ∘F_ω` of a measure supported on `C_ω`.
    pub fn rescale_to_cell(&self, model: &Model, cell: &Word) -> Result<RadonMeasure> {
        let s = model.structure();
        let mut out = RadonMeasure::zero();
        for a in &self.atoms {
            let canon = s.canonicalize(&a.word, a.label)?;
            let level = canon.level().max(cell.len());
            let inside = s
                .representatives(&canon, level)?
                .into_iter()
                .find(|r| r.word.starts_with(cell));
            match inside {
                Some(r) => {
                    let pulled = s.canonicalize(&r.word.suffix_from(cell.len()), r.label)?;
                    out.atoms.push(Atom::new(pulled, a.mass));
                }
                None if a.mass == 0.0 => {}
                None => {
                    return invalid(format!(
                        "atom at {canon} lies outside cell {:?}",
                        cell.to_string()
                    ))
                }
            }
        }
        let mu_cell = s.cell_measure(cell);
        for p in &self.parts {
            if p.cell_word.starts_with(cell) {
                out.parts.push(SelfSimilarPart::new(
                    p.cell_word.suffix_from(cell.len()),
                    p.coefficient * mu_cell,
                ));
            } else if p.coefficient != 0.0 {
                return invalid(format!(
                    "self-similar part on cell {:?} is not supported in cell {:?}",
                    p.cell_word.to_string(),
                    cell.to_string()
                ));
            }
        }
        Ok(out)
    }

    /// Pushforward `(F_ω)_* σ`: the same measure seen inside the cell `C_ω`.
    pub fn push_into_cell(&self, model: &Model, cell: &Word) -> Result<RadonMeasure> {
        let s = model.structure();
        let mu_cell = s.cell_measure(cell);
        let mut out = RadonMeasure::zero();
        for a in &self.atoms {
            let at = s.canonicalize(&cell.concat(&a.word), a.label)?;
            out.atoms.push(Atom::new(at, a.mass));
        }
        for p in &self.parts {
            out.parts.push(SelfSimilarPart::new(
                cell.concat(&p.cell_word),
                p.coefficient / mu_cell,
            ));
        }
        Ok(out)
    }
}

/// `D_d = Σ_{|s|=d} μ_s M_sᵀ Q M_s`.
fn refined_moments(model: &Model, depth: usize) -> DMatrix<f64> {
    let calc = model.calculus();
    let mu = model.structure().measure_weights();
    let mut d = calc.moments().clone();
    for _ in 0..depth {
        let mut next = DMatrix::zeros(d.nrows(), d.ncols());
        for (i, &m) in mu.iter().enumerate() {
            let a = calc.extension_matrix(i);
            next += a.transpose() * &d * a * m;
        }
        d = next;
    }
    d
}

use std::collections::BTreeSet;

use crate::error::{invalid, Result};
use crate::fractal::Word;
use crate::model::Model;

/// An open region given as a union of cells of one level `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    cell_level: usize,
    cells: Vec<Word>,
}

/// Vertices of a region at some level `n ≥ k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionVertices {
    pub level: usize,
    /// Vertices of the region's cells that are not on `∂E`.
    pub interior: Vec<usize>,
    /// `∂E`: cell corners in `V_0` or shared with cells outside the region.
    pub boundary: Vec<usize>,
}

impl Region {
    pub fn new(model: &Model, cells: Vec<Word>) -> Result<Self> {
        let Some(first) = cells.first() else {
            return invalid("a region needs at least one cell");
        };
        let k = first.len();
        for c in &cells {
            if c.len() != k {
                return invalid("region cells must all have the same length");
            }
            c.check_alphabet(model.structure().arity())?;
        }
        let cells: Vec<Word> = cells.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Ok(Region {
            cell_level: k,
            cells,
        })
    }

    /// The whole fractal, with `∂E = V_0`.
    pub fn whole() -> Self {
        Region {
            cell_level: 0,
            cells: vec![Word::empty()],
        }
    }

    /// All level-`k` cells whose closures avoid `V_0`.
    pub fn away_from_boundary(model: &Model, k: usize) -> Result<Self> {
        let arity = model.structure().arity();
        let lv = model.level(k)?;
        let b = model.structure().boundary_size();
        let cells: Vec<Word> = (0..lv.cell_count())
            .filter(|&c| lv.cell_vertices(c).iter().all(|&v| v >= b))
            .map(|c| Word::from_index(c, k, arity))
            .collect();
        Region::new(model, cells)
    }

    pub fn cell_level(&self) -> usize {
        self.cell_level
    }

    pub fn cells(&self) -> &[Word] {
        &self.cells
    }

    /// Whether some cell closure meets `V_0`.
    pub fn touches_boundary(&self, model: &Model) -> Result<bool> {
        let b = model.structure().boundary_size();
        let lv = model.level(self.cell_level)?;
        let arity = model.structure().arity();
        Ok(self
            .cells
            .iter()
            .any(|c| lv.cell_vertices(c.index(arity)).iter().any(|&v| v < b)))
    }

    pub fn vertices(&self, model: &Model, n: usize) -> Result<RegionVertices> {
        if n < self.cell_level {
            return invalid(format!(
                "region of level-{} cells cannot be resolved at level {n}",
                self.cell_level
            ));
        }
        let arity = model.structure().arity();
        let b = model.structure().boundary_size();
        let coarse = model.level(self.cell_level)?;
        let fine = model.level(n)?;
        let inside: BTreeSet<usize> = self.cells.iter().map(|c| c.index(arity)).collect();
        // vertex indices agree across levels, so corners found at level k
        // are the same indices at level n
        let mut boundary = BTreeSet::new();
        for &c in &inside {
            for &v in coarse.cell_vertices(c) {
                if v < b || coarse.cells_of(v).iter().any(|d| !inside.contains(d)) {
                    boundary.insert(v);
                }
            }
        }
        let mut closure = BTreeSet::new();
        for c in &self.cells {
            for fc in fine.cells_under(c) {
                closure.extend(fine.cell_vertices(fc).iter().copied());
            }
        }
        Ok(RegionVertices {
            level: n,
            interior: closure.difference(&boundary).copied().collect(),
            boundary: boundary.into_iter().collect(),
        })
    }
}

impl RegionVertices {
    /// Connected components of the interior under level-`n` adjacency.
    pub fn interior_components(&self, model: &Model) -> Result<Vec<Vec<usize>>> {
        let lv = model.level(self.level)?;
        let members: BTreeSet<usize> = self.interior.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &self.interior {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut k = 0;
            while k < comp.len() {
                let p = comp[k];
                k += 1;
                for q in lv.neighbors(p) {
                    if members.contains(&q) && seen.insert(q) {
                        comp.push(q);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        Ok(out)
    }
}

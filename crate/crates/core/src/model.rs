use crate::energy::{GraphEnergy, HarmonicCalculus, HarmonicStructure};
use crate::error::{Error, Result};
use crate::fractal::{FractalStructure, Hierarchy, Level, Word};

/// A fractal with its harmonic structure, with vertex sets, energies and
/// cell measures built eagerly for levels `0..=max_level`. Immutable once
/// built and safe to share between threads.
#[derive(Clone, Debug)]
pub struct Model {
    hierarchy: Hierarchy,
    harmonic: HarmonicStructure,
    energies: Vec<GraphEnergy>,
    cell_measures: Vec<Vec<f64>>,
    calculus: HarmonicCalculus,
}

impl Model {
    pub fn new(
        structure: FractalStructure,
        harmonic: HarmonicStructure,
        max_level: usize,
    ) -> Result<Self> {
        if harmonic.boundary_size() != structure.boundary_size() {
            return Err(Error::InvalidStructure(format!(
                "harmonic structure has {} boundary points, fractal has {}",
                harmonic.boundary_size(),
                structure.boundary_size()
            )));
        }
        if harmonic.renormalization().len() != structure.arity() {
            return Err(Error::InvalidStructure(format!(
                "expected {} renormalization factors, got {}",
                structure.arity(),
                harmonic.renormalization().len()
            )));
        }
        // Level 1 is always needed for the extension matrices.
        let hierarchy = Hierarchy::new(structure, max_level.max(1));
        let energies: Vec<GraphEnergy> = (0..=hierarchy.max_level())
            .map(|n| GraphEnergy::assemble(&harmonic, hierarchy.level(n).unwrap()))
            .collect();
        let mu = hierarchy.structure().measure_weights().to_vec();
        let mut cell_measures = vec![vec![1.0]];
        for _ in 0..hierarchy.max_level() {
            let next = cell_measures
                .last()
                .unwrap()
                .iter()
                .flat_map(|&x| mu.iter().map(move |&m| x * m))
                .collect();
            cell_measures.push(next);
        }
        let calculus = HarmonicCalculus::new(&harmonic, hierarchy.level(1)?, &energies[1], &mu)?;
        Ok(Model {
            hierarchy,
            harmonic,
            energies,
            cell_measures,
            calculus,
        })
    }

    /// Sierpinski gasket with its standard harmonic structure.
    pub fn sierpinski(max_level: usize) -> Self {
        Model::new(
            FractalStructure::sierpinski(),
            HarmonicStructure::sierpinski(),
            max_level,
        )
        .expect("gasket model is valid")
    }

    pub fn structure(&self) -> &FractalStructure {
        self.hierarchy.structure()
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn harmonic(&self) -> &HarmonicStructure {
        &self.harmonic
    }

    pub fn calculus(&self) -> &HarmonicCalculus {
        &self.calculus
    }

    pub fn max_level(&self) -> usize {
        self.hierarchy.max_level()
    }

    pub fn level(&self, n: usize) -> Result<&Level> {
        self.hierarchy.level(n)
    }

    pub fn graph_energy(&self, n: usize) -> Result<&GraphEnergy> {
        self.hierarchy.level(n)?;
        Ok(&self.energies[n])
    }

    /// `μ_ω` for each cell of level `n`, in cell-index order.
    pub fn cell_measures(&self, n: usize) -> Result<&[f64]> {
        self.hierarchy.level(n)?;
        Ok(&self.cell_measures[n])
    }

    /// `r_ω = Π r_{ω_j}`.
    pub fn cell_resistance_scale(&self, word: &Word) -> f64 {
        let r = self.harmonic.renormalization();
        word.letters().iter().map(|&l| r[l as usize]).product()
    }

    pub fn cell_measure(&self, word: &Word) -> f64 {
        self.structure().cell_measure(word)
    }
}

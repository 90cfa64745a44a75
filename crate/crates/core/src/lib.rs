//! Potential theory on post-critically finite self-similar fractals.
//!
//! Vertices are addressed by `(word, boundary label)` pairs and enumerated in
//! a stable order so that `V_n` is a prefix of `V_{n+1}`. On top of that sit
//! graph energies, Radon measures with exact load and mass assembly, a sparse
//! Dirichlet/Schrödinger solver, cell blowups and randomized checks of the
//! maximum principles and Harnack-type estimates.

pub mod blowup;
pub mod energy;
pub mod error;
pub mod fractal;
pub mod io;
pub mod measure;
pub mod model;
pub mod solver;
pub mod sparse;
pub mod verification;

pub use energy::{DiscreteFunction, GraphEnergy, HarmonicStructure, ResistanceTable};
pub use error::{Error, Result};
pub use fractal::{Address, FractalStructure, Hierarchy, Word};
pub use measure::RadonMeasure;
pub use model::Model;
pub use solver::{DirichletProblem, GreenOperator, Method, Solution};

//! Equilibria of a two-state mean field game with an anti-monotone running
//! cost `f(i, θ) = |1 − θ − i|` and background jump rate `η`.
//!
//! The crate enumerates every equilibrium of the forward-backward system,
//! builds the entropy solution of the master conservation law, solves the
//! finite-player HJB system and simulates the finite game.
//!
//! All solvers are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod characteristics;
pub mod ctmc_sim;
pub mod error;
pub mod integrate;
pub mod master_entropy;
pub mod mfg_enumerator;
pub mod nplayer_hjb;
pub mod quadrature;
pub mod real;
pub mod roots;
pub mod scalar_model;

pub use error::{Error, Result};
pub use real::Real;

pub type Params = scalar_model::ModelParams<f64>;
pub type Params32 = scalar_model::ModelParams<f32>;
pub type Path = characteristics::CharacteristicPath<f64>;
pub type Solution = mfg_enumerator::MfgSolution<f64>;
pub type Report = mfg_enumerator::EnumerationReport<f64>;
pub type Field = master_entropy::EntropyField<f64>;
pub type Values = nplayer_hjb::ValueGrid<f64>;
pub type Policies = nplayer_hjb::PolicyGrid<f64>;
pub type Simulation = ctmc_sim::SimResult<f64>;

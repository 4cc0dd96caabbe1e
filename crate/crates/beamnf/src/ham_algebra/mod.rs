//! Sparse polynomial Hamiltonians on truncated phase space: Poisson brackets,
//! degree and resonance projections, vector fields, majorant norms and Lie
//! transforms.

mod hamiltonian;
mod lie;
mod multi_index;
mod norm;
mod poly;
mod text;

pub use hamiltonian::{
    poisson_bracket, project_degree, project_resonant, scaling_degree, vector_field, PolyHamiltonian,
};
pub use lie::{lie_sum, lie_transform};
pub(crate) use lie::inv_factorial;
pub use multi_index::MultiIndex;
pub use norm::{majorant_norm, majorant_norm_with, majorant_upper, NormBracket, NormOptions};
pub use poly::{DegreePart, MonoKey, Monomial, Poly, ResonantPart, DROP_TOL};
pub use text::{from_text, to_text};

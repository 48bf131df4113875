//! Linear finite elements on triangles: quadrature, sparse assembly, constraints and a
//! preconditioned conjugate gradient solver.

mod assembly;
mod constraints;
mod quadrature;
mod solver;
mod sparse;

pub use assembly::{
    assemble_coupling, assemble_diffusion, assemble_elasticity, assemble_flux, assemble_mass,
    assemble_source, assemble_vector_flux, assemble_vector_source, for_each_quad_point,
};
pub use constraints::{Constraints, Reduction, Slot};
pub use quadrature::{QuadPoint, QuadratureRule, ORDER2, ORDER4};
pub use solver::{solve_constrained, solve_spd, SolveOptions, SolveReport};
pub use sparse::{CsrMatrix, Pattern, Space};

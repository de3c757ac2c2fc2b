//! Problem generators, sampled definiteness checks and transformations.

mod definiteness;
mod ellipsoid;
mod random;
mod transform;
mod volkmer;

pub use definiteness::{
    check_definite_sampled, check_left_definite_sampled, check_local_definite_sampled, check_right_definite_sampled,
    DefinitenessReport,
};
pub use ellipsoid::{chebyshev_nodes, differentiation_matrix, ellipsoidal_wave, EllipsoidConfig};
pub use random::{
    gen_laguerre, gen_left_right, gen_well_conditioned, generate, laguerre, left_right_mu, Family, RandomSpec,
};
pub use transform::{
    congruence_transform, perturb_hermitian, random_unit_triangular, symmetrize_diagonal, Symmetrized,
};
pub use volkmer::volkmer_example;

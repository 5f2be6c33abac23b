//! Information bottleneck and noisy rate-distortion solvers, together with the
//! second-order quantities derived from their solutions.

pub mod dispersion;
pub mod distortion;
pub mod ib;
pub mod psi;
pub mod rd;

pub use dispersion::{dispersion_quantities, ib_dispersion, rd_dispersion, DispersionSet};
pub use distortion::{neg_info_density_distortion, surrogate_distortion, DistortionMeasure, SurrogateDistortion};
pub use ib::{conditional_info_variance, default_u_size, solve_ib, solve_ib_with, IBSolution, IbOptions};
pub use psi::{phi_single, psi, psi_from_mass, psi_mask, psi_u, psi_zbar};
pub use rd::{solve_noisy_rd, solve_noisy_rd_with, tilted_information, RDSolution, RdOptions};

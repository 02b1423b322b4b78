//! Truncated Fock-space oracle for quadratic master equations.
//!
//! Density matrices live in the first `N` number states of a reference
//! oscillator. Generators act matrix-free through banded products with `q`
//! and `p`; an explicit `N^2 x N^2` matrix is available for small `N`.

mod identities;
mod ops;
mod propagate;
mod states;
mod superop;

pub use identities::{
    check_commutator_table, check_damping_identities, check_dephasing_average,
    check_exponent_merge, lindblad_coeffs, lindblad_purity_rate, merge_pair, DampingIdentity,
    IdentityResiduals, MergeResidual, Picture, TableEntry,
};
pub use ops::TruncatedOperators;
pub use propagate::{
    min_eig_scan, propagate, to_interaction_picture, FockTrajectory, MinEigSample,
    PropagateOptions, DEFAULT_LEAK_TOL, DEFAULT_N,
};
pub use states::{balanced_omega_ref, edge_band, gaussian_to_fock, FockDensityMatrix};
pub use superop::{
    build_generator, exp_superoperator, expm_action, SuperCoeffs, Superoperator,
    SuperoperatorMatrix,
};

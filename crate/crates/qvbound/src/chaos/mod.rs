//! Exact finite-dimensional Wiener-chaos algebra over H = R^d.
//!
//! Everything here is closed-form: symmetric kernels in compressed
//! multi-index storage, contractions, the multiplication formula, Malliavin
//! operators, and exact moments of polynomial functionals of i.i.d. standard
//! Gaussian coordinates. All values are immutable after construction and all
//! operations are pure functions, so sharing across threads is free.

pub mod expansion;
pub mod kernel;
pub mod operators;
pub mod selftest;
pub mod vector;

pub use expansion::{ChaosExpansion, ChaosPolynomial, MOMENT_ORDER_CAP};
pub use kernel::{
    contract, contract_pair, contract_sym, multiplicity, symmetrize, DenseTensor, MultiIndex,
    PairTensor, SymmetricKernel,
};
pub use operators::{
    apply_l, apply_l_inverse, fourth_cumulant_by_contractions, malliavin_derivative,
    stein_kernel_inner, variance_of_stein_kernel,
};
pub use vector::{
    jacobi_eigenvalues, lm_control_bound, majdist_bound, murray_exact, smooth_test_bound,
    GaussianVectorLaw, McConfig, SmoothTestBound,
};

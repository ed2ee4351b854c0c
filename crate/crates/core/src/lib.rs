//! Causal Green's functions of linear ordinary differential operators,
//! computed on a uniform grid through the resolvent of a Volterra kernel.

pub mod bvp;
pub mod error;
pub mod expr;
pub mod greens;
pub mod grid;
pub mod ivp;
pub mod operator;
pub mod roots;
pub mod scalar;
pub mod suite;
pub mod volterra;

pub use error::{Error, Result};
pub use grid::{cumulative_integral, kernel_apply, kernel_compose, make_grid, GridFunction, GridSpec, TriangularKernel};
pub use operator::{coeff, sample_coeff, Coefficient, DifferentialOperator, InitialConditions};
pub use volterra::{
    build_h, resolvent_direct, resolvent_series, solve_volterra2, volterra_kernel, ResolventResult, SeriesOptions,
};
pub use greens::{
    apply_greens, build_greens, compose, constant_coeff_greens, constant_coeff_greens_real, factored_greens,
    greens_eval, operator_residual, riccati_residual, schrodinger_greens, t_derivative, CausalGreens,
    ConstCoeffKernel, ConstantCoeffGreens,
};
pub use roots::{poly_roots, poly_roots_real};
pub use ivp::{
    abel_wronskian, build_d, build_s, fundamental_solutions, homogeneous_solution, solve_ivp, vop_greens_check,
    wronskian, wronskian_samples, FundamentalSet, IvpSolution, VopReport,
};
pub use bvp::{solve_bvp, sturm_liouville_greens, SturmLiouvilleGreens};

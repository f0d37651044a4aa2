//! Normalized radial solutions of
//! `-Δ_p u = λ|u|^{p-2}u + μ|u|^{q1-2}u + |u|^{q2-2}u`, `‖u‖_p = a`.
//!
//! The crate discretizes radial profiles on a uniform grid and provides:
//!
//! * [`radial`]: grids, norms, the discrete p-Laplacian, CSV exchange;
//! * [`fibering`]: the mass-preserving dilation, energy, Pohozaev functional,
//!   the threshold `μ(u)` and the exact classification of fibering maps;
//! * [`solver`]: ground-state, mountain-pass and degenerate minimizers with
//!   Newton refinement of the Euler–Lagrange system;
//! * [`extremal`]: the first extremal value `μ_a*` and its scaling law;
//! * [`profiles`]: Talenti bubbles, cutoff bubbles, Gagliardo–Nirenberg
//!   optimizers and the mountain-pass energy certificate;
//! * [`morse`]: radial Morse indices of the linearized operator;
//! * [`mfg`]: reconstruction of stationary mean-field-game fields.

pub mod error;
pub mod extremal;
pub mod fibering;
pub mod linalg;
pub mod mfg;
pub mod morse;
pub mod params;
pub mod profiles;
pub mod quad;
pub mod radial;
pub mod solver;

pub use error::{Error, Result};
pub use radial::{
    grad_lp_norm, grad_power, lq_norm, lq_power, make_grid, p_laplacian_apply, RadialFunction,
    RadialGrid,
};
pub use fibering::{
    classify_fibering, energy, fibering_value, mass_scale, mu_of_u, pohozaev, project_to_manifold,
    s_star, Branch, FiberMap, FiberingCase, FiberingReport, Triple,
};
pub use params::{gamma_exponent, ProblemParams};
pub use solver::{
    minimize_degenerate, minimize_ground, minimize_mountain, refine_euler_lagrange, SolutionRecord,
    SolverOptions,
};
pub use extremal::{mu_star, scaling_law_check, ExtremalReport};
pub use profiles::{
    cutoff_bubble, gn_profile_and_constant, mountain_pass_path, sobolev_constant, strict_inequality_certificate,
    talenti_bubble, BubbleSpec,
};
pub use morse::{assemble_linearized, decay_diagnostics, morse_index_radial, DecayFit, LinearizedOperator, MorseReport};
pub use mfg::{fokker_planck_flux, hjb_residual, mfg_summary, to_mfg, MfgFields, MfgSummary};

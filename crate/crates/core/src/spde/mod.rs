//! Stochastic reaction–diffusion companion model
//!
//! `dX = (AX + p_α(X)) dt + B dW` on `H = L²(0,1)`, `A` the Dirichlet
//! Laplacian, `p` a decreasing odd polynomial (or zero), `p_α` its Yosida
//! approximation, and `B` diagonal in the sine basis.

mod bdg;
mod commutator;
mod estimators;
mod model;
mod reaction;

pub use bdg::{bdg_check, bdg_constant, sup_moment_oracle, BdgReport, StepIntegrand};
pub use commutator::{
    commutator, commutator_decay_curve, v_norm, write_curve_csv, CommutatorCurve, CommutatorEstimate, CommutatorSpec,
    DecayVerdict, VNormReport,
};
pub use estimators::{
    bel_gradient, derivative_flow, fd_gradient, identity_residual, sample_invariant, semigroup, simulate,
    simulate_ensemble, BelEstimate, InvariantSample, InvariantSpec, MomentReport, PathEnsemble, CONTRACTION_SLACK,
};
pub use model::{SpdeConfig, SpdeModel, SpdePath, BLOW_UP_NORM};
pub use reaction::{yosida_drift, yosida_resolvent, PolynomialReaction, RESOLVENT_MAX_ITER};

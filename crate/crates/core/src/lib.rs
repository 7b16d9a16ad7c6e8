//! Design, analysis and simulation of a participation game for crowd-sourced
//! fake-post tagging.
//!
//! Users either abstain, tag from their own judgement, or tag after reading
//! a warning computed from earlier tags. The platform pays a reward when the
//! crowd catches fake posts and spares real ones. [`design::choose_design`]
//! picks the reward and the warning so that the desired detection level is
//! reached at an equilibrium; [`equilibrium::ne_set`] lists the equilibria of
//! the resulting game; [`sim::simulate`] runs the tagging chain itself.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod config;
pub mod design;
pub mod equilibrium;
pub mod experiments;
pub mod model;
pub mod sim;

pub use attractor::{
    attractor_bisection, attractor_closed_form, ode_rhs, ode_trajectory, AttractorResult, Regime,
};
pub use config::RunConfig;
pub use design::{
    choose_design, DesignError, DesignKnobs, MechanismDesign, NotDesignable, NotDesignableReason,
};
pub use equilibrium::{ne_grid_scan, ne_set, NeReport};
pub use experiments::{run_sweep, SweepSpec, SweepSummary};
pub use model::{
    participant_fractions, validate_system, DesignTarget, ParticipantFractions, PopulationProfile,
    PostType, SystemParams, ValidationReport,
};
pub use sim::{convergence_report, simulate, TagTrajectory};

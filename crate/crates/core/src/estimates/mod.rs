//! Quantitative checks: bubble norm asymptotics, the Sobolev constant, the
//! Stampacchia level-set bound, the singular-term inequality and the
//! critical energy-gap scan.

mod bubble;
mod gap;
mod inequality;
mod sobolev;
mod stampacchia;

pub use bubble::{
    bubble_eval, bubble_norm_asymptotics, dyadic_family, loglog_slope, BubbleQuantity, BubbleSpec, ScalingReport,
    ScalingRow,
};
pub use gap::{energy_gap_scan, GapReport};
pub use inequality::{singular_inequality_check, InequalityReport};
pub use sobolev::{bubble_sobolev_quotient, estimate_s, full_space_bubble_norms, SobolevEstimate};
pub use stampacchia::{stampacchia_verify, uniform_levels, StampacchiaReport};

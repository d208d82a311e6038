//! Statistical and deterministic checks of the representation: closed-form
//! identities, conservation, decay rates, cross-checks against the Wild
//! cascade, Legendre addition identities and the characteristic-function
//! envelope.

mod conservation;
mod crosscheck;
mod decay;
mod envelope;
mod identities;
mod legendre;
mod report;

pub use conservation::{conservation_check, ConservationReport, COLLISION_TOLERANCE};
pub use crosscheck::{representation_crosscheck, CrosscheckPoint, CrosscheckReport, REQUIRED_FRACTION};
pub use decay::{
    cf_distance_curve, cf_distances, fit_log_linear, moment_decay_fit, w_decay_fit, weight_decay_fit, DecayFit,
    DistancePoint, MomentSpec, WeightStatistic, CF_FLOOR,
};
pub use envelope::{envelope_check, EnvelopeReport, EnvelopeSettings};
pub use identities::{run_identity_suite, IdentitySettings};
pub use legendre::{legendre_moment_checks, LegendreSettings};
pub use report::{z_score, Comparison, IdentityEntry, IdentityReport, ReferenceSource};

use crate::geometry::{fibonacci_directions, scale, Vec3};

/// Frequencies `ρ u` for every `ρ` in `rhos` and `n_directions` spiral directions.
pub fn radial_grid(rhos: &[f64], n_directions: usize) -> Vec<Vec3> {
    let dirs = fibonacci_directions(n_directions);
    rhos.iter().flat_map(|&r| dirs.iter().map(move |&u| scale(u, r))).collect()
}

/// Default 20-point grid: `ρ` in {0.5, 1, 1.5, 2} times five directions.
pub fn default_xi_grid() -> Vec<Vec3> {
    radial_grid(&[0.5, 1.0, 1.5, 2.0], 5)
}

//! Words, orbits, density grids, J-set scores and certification.

mod certify;
mod coverage;
mod jset;
mod kernel;
mod orbit;
mod words;

pub use certify::{
    basis_jset_probe, certify_hypercyclic, coverage_ladder, verdict_from_ladder, BasisProbe, Certificate, CertifyConfig,
    MinDegreeRule, NonHypercyclicReason, RungEvidence, Verdict,
};
pub use coverage::{box_coverage, projection_coverage, real_coordinate, CoverageGrid, DensityReport, Grid, MAX_CELLS};
pub use jset::{jset_score, jset_score_exhaustive, jset_score_limited, JsetScore, SearchLimits};
pub use kernel::{distance_to_ball_image, BallDistance};
pub use orbit::{for_each_orbit_point, orbit_sample, OrbitCloud, OrbitPoint};
pub use words::{enumerate_words, rank_cmp, word_count, WordBudget, Words};

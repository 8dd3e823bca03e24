/// Numerical thresholds shared by the structural pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative commutation bound on `‖AB − BA‖ / (‖A‖‖B‖ + 1)`.
    pub commutation: f64,
    /// Absolute bound on off-structure entries of conjugated generators.
    pub structure: f64,
    /// Base eigenvalue clustering radius, scaled by `1 + max ‖A_j‖`.
    pub eigen: f64,
    /// Singular values below `rank · σ_max` are treated as zero.
    pub rank: f64,
    /// Multiplier on the `(ε‖A‖)^{1/m}` spread of a perturbed Jordan block.
    pub jordan_spread: f64,
    /// Edges within this factor of a cluster radius are reported as ambiguous.
    pub ambiguity_factor: f64,
    /// Largest accepted condition number of the conjugation.
    pub max_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            commutation: 1e-10,
            structure: 1e-9,
            eigen: 1e-7,
            rank: 1e-9,
            jordan_spread: 24.0,
            ambiguity_factor: 2.0,
            max_condition: 1e12,
        }
    }
}

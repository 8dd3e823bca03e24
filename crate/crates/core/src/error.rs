use alloc::boxed::Box;
use core::fmt;

use crate::normal_form::NormalForm;
use crate::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    EmptyFamily,
    DimensionMismatch { index: usize, expected: usize, found: usize },
    NonFinite { index: usize },
    NotCommuting { i: usize, j: usize, residual: f64 },
    BadPartition { sum: usize, n: usize },
    ClusteringAmbiguous { generator: usize, gap: f64, radius: f64 },
    IllConditioned { cond: f64, best: Box<NormalForm> },
    NotTriangularForm { index: usize, residual: f64 },
    ClosureGrowth { before: usize, after: usize },
    Decomposition(&'static str),
    BudgetOverflow { count: u128, max_words: u64 },
    InvalidBudget { min_degree: u64, max_degree: u64 },
    InvalidArgument(&'static str),
    SearchLimit { nodes: u64 },
    GridTooLarge { cells: f64 },
    NoBasisVectorInU,
    NoPairFound { best_b: Complex64, best_score: f64 },
    BadDimension { n: usize },
    ZeroCoordinate { index: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyFamily => write!(f, "generator list is empty"),
            Error::DimensionMismatch { index, expected, found } => write!(
                f,
                "generator {index} has dimension {found}, expected {expected}"
            ),
            Error::NonFinite { index } => write!(f, "generator {index} has a non-finite entry"),
            Error::NotCommuting { i, j, residual } => write!(
                f,
                "generators {i} and {j} do not commute (relative residual {residual:.3e})"
            ),
            Error::BadPartition { sum, n } => {
                write!(f, "partition sums to {sum}, dimension is {n}")
            }
            Error::ClusteringAmbiguous { generator, gap, radius } => write!(
                f,
                "eigenvalue clusters of generator {generator} are ambiguous (gap {gap:.3e}, radius {radius:.3e})"
            ),
            Error::IllConditioned { cond, .. } => {
                write!(f, "conjugation is ill-conditioned (cond {cond:.3e})")
            }
            Error::NotTriangularForm { index, residual } => write!(
                f,
                "matrix {index} is not lower triangular with equal diagonal (residual {residual:.3e})"
            ),
            Error::ClosureGrowth { before, after } => write!(
                f,
                "invariant closure grew from rank {before} to {after}"
            ),
            Error::Decomposition(what) => write!(f, "{what} failed to converge"),
            Error::BudgetOverflow { count, max_words } => {
                write!(f, "budget holds {count} words, cap is {max_words}")
            }
            Error::InvalidBudget { min_degree, max_degree } => write!(
                f,
                "invalid budget: min degree {min_degree} exceeds max degree {max_degree}"
            ),
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
            Error::SearchLimit { nodes } => write!(f, "search stopped after {nodes} nodes"),
            Error::GridTooLarge { cells } => write!(f, "grid has {cells:.3e} cells"),
            Error::NoBasisVectorInU => {
                write!(f, "no basis vector has a nonzero first coordinate")
            }
            Error::NoPairFound { best_b, best_score } => write!(
                f,
                "no pair reached the target (best b = {}{:+}i, score {best_score:.4})",
                best_b.re, best_b.im
            ),
            Error::BadDimension { n } => write!(f, "dimension {n} is below 2"),
            Error::ZeroCoordinate { index } => write!(f, "coordinate {index} is zero"),
        }
    }
}

impl Error {
    /// Stable short code used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyFamily => "empty_family",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::NotCommuting { .. } => "not_commuting",
            Error::BadPartition { .. } => "bad_partition",
            Error::ClusteringAmbiguous { .. } => "clustering_ambiguous",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::NotTriangularForm { .. } => "not_triangular_form",
            Error::ClosureGrowth { .. } => "closure_growth",
            Error::Decomposition(_) => "decomposition",
            Error::BudgetOverflow { .. } => "budget_overflow",
            Error::InvalidBudget { .. } => "invalid_budget",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SearchLimit { .. } => "search_limit",
            Error::GridTooLarge { .. } => "grid_too_large",
            Error::NoBasisVectorInU => "no_basis_vector_in_u",
            Error::NoPairFound { .. } => "no_pair_found",
            Error::BadDimension { .. } => "bad_dimension",
            Error::ZeroCoordinate { .. } => "zero_coordinate",
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weights sum to {sum}, expected 1")]
    WeightsNotNormalized { sum: String },
    #[error("point {point} has non-positive weight")]
    NonPositiveWeight { point: usize },
    #[error("point {point} is out of range for a space of {len} points")]
    PointOutOfRange { point: usize, len: usize },
    #[error("classes do not partition the point set: point {point} {reason}")]
    NotAPartition { point: usize, reason: &'static str },
    #[error("weights are not constant on the class of point {point}")]
    NotMeasurePreservingClass { point: usize },
    #[error("map is not a bijection (value {value} repeated or out of range)")]
    NotBijective { value: usize },
    #[error("map sends {point} to {image}, outside its class")]
    NotClassPreserving { point: usize, image: usize },
    #[error("map sends {point} to {image} with a different weight")]
    NotMeasurePreserving { point: usize, image: usize },
    #[error("null restriction")]
    NullRestriction,
    #[error("subrelation is not a refinement: class of point {point} escapes")]
    NotRefinement { point: usize },
    #[error("index is not constant: {detail}")]
    NonConstantIndex { detail: String },
    #[error("point budget exceeded: {needed} points requested, budget {budget}; use the window-based percolation path for large classes")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("window is disconnected")]
    DisconnectedWindow,
    #[error("operator norm {norm} exceeds the degree bound {bound}")]
    NormAboveDegree { norm: f64, bound: f64 },
    #[error("first round subcritical: p0 = {p0} <= estimated p_c = {pc}")]
    FirstRoundSubcritical { p0: f64, pc: f64 },
    #[error("probability {0} outside the admissible range")]
    InvalidProbability(f64),
    #[error("invalid group data: {0}")]
    InvalidGroup(String),
    #[error("action is not free: element {element} fixes point {point}")]
    NotFree { element: usize, point: usize },
    #[error("isoperimetric violation: |dF| = {boundary}, |F| = {size}, required ratio {bound}")]
    IsoperimetricViolation { boundary: usize, size: usize, bound: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

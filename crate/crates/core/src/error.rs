use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probabilities sum to {sum}, expected 1")]
    ProbabilitySum { sum: f64 },
    #[error("probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("unparseable probability {0:?}")]
    BadProbability(String),
    #[error("increment value {0:?} is not an integer")]
    NonIntegerValue(String),
    #[error("law has no strictly positive value with positive probability")]
    NoPositiveValue,
    #[error("increment table is empty")]
    EmptyTable,
    #[error("tail exponent {0} outside (1, 2]")]
    AlphaOutOfRange(f64),
    #[error("positive-part weight {0} outside (0, 1]")]
    WeightOutOfRange(f64),
    #[error("negative jump size must be a positive integer")]
    BadNegativeJump,
    #[error("malformed law description: {0}")]
    LawFormat(String),

    #[error("E I+ is infinite; operation needs the square-integrable regime")]
    InfiniteMean,
    #[error("drift condition E I- < E I+ violated (E I- = {e_minus}, E I+ = {e_plus})")]
    DriftCondition { e_minus: f64, e_plus: f64 },

    #[error("argument {name} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("expected {expected} fitness values, got {got}")]
    UniformCount { expected: usize, got: usize },
    #[error("fitness value {0} outside [0, 1)")]
    BadFitness(f64),
    #[error("sequence must be ascending")]
    NotAscending,
    #[error("grid point {0} not present on the trace grid")]
    NotOnGrid(f64),
    #[error("step {k} beyond trace length {n}")]
    StepOutOfRange { k: usize, n: usize },
    #[error("empty input")]
    Empty,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("paired samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("path grid needs at least 2 cells, got {0}")]
    GridTooSmall(usize),
    #[error("path is missing knot at t = {0}")]
    MissingKnot(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{symbol}` takes {expected} arguments, got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("element {elem} out of range for a domain of size {size}")]
    OutOfRange { elem: usize, size: usize },
    #[error("table of `{symbol}` has length {got}, expected {expected}")]
    TableLength {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate operation symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("domain size {0} is not supported (must be 1..=256)")]
    DomainSize(usize),
    #[error("tuples have unequal lengths")]
    LengthMismatch,
    #[error("circuit has arity {circuit} but {supplied} arguments were supplied")]
    CircuitArity { circuit: usize, supplied: usize },
    #[error("cannot parse circuit: {0}")]
    Parse(String),
    #[error("Mal'tsev identity fails at x={x}, y={y}")]
    NotMaltsev { x: usize, y: usize },
    #[error("closure exceeded the cap of {cap} tuples")]
    CapExceeded { cap: usize },
    #[error("not a congruence: {0}")]
    NotCongruence(String),
    #[error("not affine: {0}")]
    NotAffine(String),
    #[error("invalid group: {0}")]
    Group(String),
    #[error("invalid wreath product: {0}")]
    Wreath(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid symbol name `{0}`")]
    InvalidSymbol(String),
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("series built over different symbol tables")]
    SymbolTableMismatch,

    #[error("{op}: constant term must be 1, found {found}")]
    NonUnitConstant { op: &'static str, found: String },
    #[error("{op}: constant term is not an invertible rational ({found})")]
    NonInvertibleConstant { op: &'static str, found: String },
    #[error("{op}: series has a p^{power} term; lowest allowed power is {allowed}")]
    PowerOutOfRange {
        op: &'static str,
        power: i32,
        allowed: i32,
    },
    #[error("{op}: needs terms through p^{needed}, input is truncated at p^{available}")]
    InsufficientOrder {
        op: &'static str,
        needed: i32,
        available: i32,
    },
    #[error("{what}: coefficient of p^{power} has α-weight {found}, expected {expected}")]
    Grading {
        what: String,
        power: i32,
        expected: i64,
        found: String,
    },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("parse error at position {pos}: expected {expected}, found {found}")]
    Parse {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("cannot evaluate expression: {0}")]
    Expression(String),
    #[error("missing numeric value for parameter `{0}`")]
    MissingBinding(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model file {file}, line {line}: {message}")]
    ModelFile {
        file: String,
        line: usize,
        message: String,
    },
    #[error("unknown bound convention `{0}`")]
    UnknownConvention(String),
    #[error("bounds dataset line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("no interior minimum in the scanned range ({0})")]
    NoInteriorMinimum(String),
    #[error("state is not normalizable: {0}")]
    NonNormalizable(String),
    #[error("quadrature did not converge (residual {residual:e})")]
    QuadratureNonConvergence { residual: f64 },
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),
    #[error("i/o error: {0}")]
    Io(String),
}

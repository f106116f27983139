use num_bigint::BigInt;
use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("input must be nonzero")]
    ZeroInput,
    #[error("empty input where at least one element is required")]
    EmptyInput,
    #[error("cannot parse {0:?}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("singular curve: discriminant is zero")]
    SingularCurve,
    #[error("{0} is not a squarefree nonzero integer")]
    NotSquarefree(BigInt),
    #[error("point ({x}, {y}) does not lie on the curve")]
    OffCurve { x: String, y: String },
    #[error("point ({x}, {y}) does not lie on the curve over F_{q}")]
    OffCurveFq { q: u64, x: u64, y: u64 },
    #[error("x = {0} is the image of a 2-torsion point")]
    TwoTorsionX(String),
    #[error("twist scales lie in different square classes")]
    DifferentSquareClass,
    #[error("points lie on different twist models")]
    TwistMismatch,
    #[error("bad reduction at {q}")]
    BadReduction { q: u64 },
    #[error("point {col} does not reduce at place {q} (matrix entry ({row}, {col}))")]
    PointBadReduction { q: u64, row: usize, col: usize },
    #[error("duplicate places in input")]
    DuplicatePlaces,
    #[error("{p} does not divide the group order {order} at q = {q}")]
    PDoesNotDivideOrder { p: u64, q: u64, order: u64 },
    #[error("{points} points but {places} places")]
    PlaceCountMismatch { points: usize, places: usize },
    #[error("place scan exhausted below {bound}: needed {needed}, found {found}")]
    PlaceScanExhausted {
        needed: usize,
        found: usize,
        bound: u64,
    },
    #[error("field size {q} exceeds the point-counting bound {bound}")]
    OrderScanBoundExceeded { q: u64, bound: u64 },
    #[error("twist class too large to serialize")]
    TwistTooLarge,
    #[error("certificate field {field} does not match recomputation")]
    DocumentMismatch { field: &'static str },
}

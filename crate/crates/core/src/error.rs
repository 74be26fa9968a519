use alloc::string::String;
use alloc::vec::Vec;

/// Bases and digit tuples of a sponge that has had one coordinate removed.
///
/// Carried by [`Error::DegenerateCoordinate`] as a suggested replacement; it is
/// not validated, since removing one flat coordinate can expose another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedSponge {
    pub bases: Vec<u32>,
    pub digits: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("a sponge needs at least one coordinate")]
    NoCoordinates,
    #[error("base n_{coord} = {base} is smaller than 2")]
    BaseTooSmall { coord: usize, base: u32 },
    #[error("bases decrease at coordinate {coord}: n_{coord} = {left} > n_{next} = {right}", next = .coord + 1)]
    DecreasingBases { coord: usize, left: u32, right: u32 },
    #[error("digit set has {count} element(s); at least 2 are required")]
    EmptyOrSingletonDigits { count: usize },
    #[error("digit tuple #{index} has {found} entries, expected {expected}")]
    WrongArity { index: usize, found: usize, expected: usize },
    #[error("digit tuple #{index} has entry {digit} at coordinate {coord}, outside 0..{base}")]
    DigitOutOfRange { index: usize, coord: usize, digit: u32, base: u32 },
    #[error("digit tuple #{index} duplicates an earlier tuple")]
    DuplicateDigit { index: usize },
    #[error("every digit tuple has the same entry at coordinate {coord}; the sponge lies in a hyperplane")]
    DegenerateCoordinate { coord: usize, reduced: Option<ReducedSponge> },
    #[error("coordinate index {index} is outside 0..={max}")]
    CoordinateOutOfRange { index: usize, max: usize },
    #[error("prefix {prefix:?} is not a projection of the digit set")]
    PrefixNotInSponge { prefix: Vec<u32> },
    #[error("tuple {tuple:?} is not in the digit set")]
    DigitNotInSponge { tuple: Vec<u32> },
    #[error("bases are not strictly increasing; the Assouad/lower dimension formulas do not apply")]
    NonStrictBases,
    #[error("lambda = {lambda} is outside (0, 1/2]")]
    LambdaOutOfRange { lambda: f64 },
    #[error("scale must lie in (0, 1]")]
    ScaleOutOfRange,
    #[error("the finer scale must be strictly smaller than the cube scale")]
    ScaleOrdering,
    #[error("word has {len} symbols but {needed} are needed at this scale")]
    WordTooShort { len: usize, needed: usize },
    #[error("enumeration would produce {count} objects, above the cap of {cap}")]
    EnumerationTooLarge { count: String, cap: u64 },
    #[error("a conditional probability along the word is zero")]
    ZeroMeasure,
    #[error("weight for {tuple:?} is not strictly positive")]
    NonPositiveWeight { tuple: Vec<u32> },
    #[error("no weight given for {tuple:?}")]
    MissingWeight { tuple: Vec<u32> },
    #[error("weights sum to {sum}, not 1")]
    WeightsDoNotSumToOne { sum: String },
    #[error("point has {found} coordinates, expected {expected}")]
    DimensionMismatch { found: usize, expected: usize },
    #[error("the sponge does not satisfy the very strong separation condition")]
    VsscNotSatisfied,
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable variant name, used by the CLI and in JSON error fields.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NoCoordinates => "NoCoordinates",
            Error::BaseTooSmall { .. } => "BaseTooSmall",
            Error::DecreasingBases { .. } => "DecreasingBases",
            Error::EmptyOrSingletonDigits { .. } => "EmptyOrSingletonDigits",
            Error::WrongArity { .. } => "WrongArity",
            Error::DigitOutOfRange { .. } => "DigitOutOfRange",
            Error::DuplicateDigit { .. } => "DuplicateDigit",
            Error::DegenerateCoordinate { .. } => "DegenerateCoordinate",
            Error::CoordinateOutOfRange { .. } => "CoordinateOutOfRange",
            Error::PrefixNotInSponge { .. } => "PrefixNotInSponge",
            Error::DigitNotInSponge { .. } => "DigitNotInSponge",
            Error::NonStrictBases => "NonStrictBases",
            Error::LambdaOutOfRange { .. } => "LambdaOutOfRange",
            Error::ScaleOutOfRange => "ScaleOutOfRange",
            Error::ScaleOrdering => "ScaleOrdering",
            Error::WordTooShort { .. } => "WordTooShort",
            Error::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            Error::ZeroMeasure => "ZeroMeasure",
            Error::NonPositiveWeight { .. } => "NonPositiveWeight",
            Error::MissingWeight { .. } => "MissingWeight",
            Error::WeightsDoNotSumToOne { .. } => "WeightsDoNotSumToOne",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::VsscNotSatisfied => "VsscNotSatisfied",
            Error::Unsupported(_) => "Unsupported",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

use thiserror::Error;

/// Failures reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero coupling excluded")]
    ZeroCoupling,
    #[error("zero energy not in spectrum")]
    ZeroEnergy,
    #[error("not a type-II/III candidate: |kappa| = {kappa} >= 1")]
    NotCandidate { kappa: f64 },
    #[error("precision exhausted at index {index}")]
    PrecisionExhausted { index: usize },
    #[error("precision must be at least 64 bits, got {bits}")]
    PrecisionTooLow { bits: usize },
    #[error("log of zero norm")]
    ZeroNorm,
    #[error("outside branch domain")]
    OutsideBranchDomain,
    #[error("band isolation failed at level {level}: found {found} bands, expected {expected}")]
    BandIsolation { level: usize, found: usize, expected: usize },
    #[error("window misses spectrum")]
    WindowMissesSpectrum,
    #[error("itinerary infeasible at depth {depth}")]
    ItineraryInfeasible { depth: usize },
    #[error("not asymptotic regime: {0}")]
    NotAsymptotic(String),
    #[error("structure law violated: {0}")]
    StructureViolated(String),
    #[error("stable direction not resolved")]
    DirectionNotResolved,
    #[error("epsilon too small for range")]
    EpsilonTooSmall,
    #[error("length {length} beyond computed range {range}")]
    OutOfRange { length: f64, range: usize },
    #[error("invalid number: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

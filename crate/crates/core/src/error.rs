//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors produced by curve construction, solvers, and experiments.
#[derive(Debug, Error)]
pub enum SteklovError {
    #[error("radius r({theta:.6}) = {radius:.6} falls below the minimum {r_min}")]
    RadiusNonPositive { theta: f64, radius: f64, r_min: f64 },

    #[error("node count {n} is odd; the periodic spectral grid requires an even count")]
    OddNodeCount { n: usize },

    #[error("node count {n} cannot resolve mode {max_mode}; need at least {required} nodes")]
    InsufficientResolution {
        n: usize,
        max_mode: usize,
        required: usize,
    },

    #[error("coefficient or parameter is not finite: {context}")]
    NonFinite { context: String },

    #[error("field length {len} does not match the curve's {expected} nodes")]
    FieldLengthMismatch { len: usize, expected: usize },

    #[error("field was sampled on a different curve (expected id {expected}, got {got})")]
    CurveMismatch { expected: u64, got: u64 },

    #[error("basis order {order} exceeds the collocation limit {max} for {n} nodes")]
    BasisOrderTooLarge { order: usize, max: usize, n: usize },

    #[error(
        "collocation rank {rank} is below the {needed} columns required by the data; \
         raise the basis order or reduce the curve distortion"
    )]
    IllConditioned { rank: usize, needed: usize },

    #[error("symmetric eigensolver failed to converge")]
    EigSolveFailure,

    #[error("eigenfield is not L2-normalized: | ||f|| - 1 | = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("fields are not L2-orthogonal: |<f, psi>| = {inner:.3e}")]
    NotOrthogonal { inner: f64 },

    #[error("cluster fields are not L2-orthonormal: max Gram deviation {deviation:.3e}")]
    NotOrthonormal { deviation: f64 },

    #[error("cluster has multiplicity {multiplicity}; the operation needs at least 2")]
    SimpleCluster { multiplicity: usize },

    #[error("cluster index {index} out of range: spectrum has {count} clusters")]
    ClusterOutOfRange { index: usize, count: usize },

    #[error("eigenvalue must be nonzero for this functional")]
    ZeroEigenvalue,

    #[error(
        "Green's-formula identity check failed: quadrature {quadrature:.9e} vs \
         DtN pairing {pairing:.9e} (gap {gap:.3e})"
    )]
    GreensIdentityMismatch {
        quadrature: f64,
        pairing: f64,
        gap: f64,
    },

    #[error("eigenvector overlap tracking found no dominant assignment (best overlap {best_overlap:.3})")]
    TrackingAmbiguous { best_overlap: f64 },

    #[error("perturbed curve is invalid: {reason}")]
    InvalidPerturbedCurve { reason: String },
}

pub type Result<T> = std::result::Result<T, SteklovError>;

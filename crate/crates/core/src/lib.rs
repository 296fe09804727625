//! Steklov spectra of smooth planar domains.
//!
//! The toolkit discretizes star-shaped boundary curves given by radial
//! Fourier descriptions, assembles the Dirichlet-to-Neumann (DtN) operator by
//! harmonic polynomial collocation, and differentiates the Steklov spectrum
//! with respect to boundary perturbations:
//!
//! - [`geometry`] — boundary curves, tangential calculus, quadrature;
//! - [`fourier`] — trigonometric interpolation on the node grid;
//! - [`harmonic`] — Dirichlet solves in a harmonic polynomial basis;
//! - [`dtn`] — the DtN matrix, its spectrum, and cluster bookkeeping;
//! - [`perturbation`] — first-order variation formulas (harmonic extension,
//!   DtN operator, eigenvalues, cluster splitting), each paired with an
//!   independent finite-difference oracle through actual curve families;
//! - [`genericity`] — critical-pair functionals, eigenspace scans,
//!   unique-continuation checks, and randomized splitting experiments.
//!
//! Everything is deterministic: randomized experiments take explicit seeds
//! and fan out per-trial generators, so rerunning a configuration reproduces
//! results byte for byte regardless of thread count.

pub mod dtn;
pub mod error;
pub mod fourier;
pub mod genericity;
pub mod geometry;
pub mod harmonic;
pub mod perturbation;

pub use dtn::{
    assemble_dtn, assemble_dtn_with_tol, cluster_report, steklov_spectrum, ClusterInfo,
    DtnOperator, SteklovSpectrum, DEFAULT_DELTA_CLUSTER,
};
pub use error::{Result, SteklovError};
pub use fourier::TrigSeries;
pub use genericity::{
    criticality_scan, psi_functional, q_functional, random_split_experiment,
    unique_continuation_check, CriticalScanResult, ScanVerdict, SplitExperiment, SplitParams,
    SplitSummary, SplitTrial, TrialCluster, UcReport, DEFAULT_EPS_CRIT, DEFAULT_UC_TOL,
    DEFAULT_UC_WINDOW_FRACTION,
};
pub use geometry::{
    build_curve, l2_inner, l2_norm, laplace_beltrami_boundary, normal_variation,
    tangential_derivative, BoundaryCurve, BoundaryField, CurveId, CurveSpec, DEFAULT_R_MIN,
};
pub use harmonic::{
    evaluate_gradient, solve_dirichlet, solve_dirichlet_with_tol, HarmonicFunction,
    DEFAULT_SVD_TOL,
};
pub use perturbation::{
    deform_spec, dt_dtn_general, dt_dtn_normal, dt_harmonic_extension, eigenvalue_derivative,
    fd_dtn_variation, fd_eigenvalue_derivative, fd_harmonic_variation, radial_perturbation_series,
    radially_perturbed_spec, splitting_matrix, DeformedCurve, DerivativeReport, DtnVariation,
    EigenDerivative, InteriorExtension, PerturbationField, SolverOptions, SplittingMatrix,
    DEFAULT_T_STEP, TRACKING_OVERLAP_MIN,
};

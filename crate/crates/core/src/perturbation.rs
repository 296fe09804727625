//! First-order boundary-perturbation formulas and finite-difference oracles.
//!
//! A boundary velocity is written `hdot = sigma * normal + tau * tangent`.
//! Moving the curve with this velocity changes the harmonic extension of a
//! transported Dirichlet datum, the DtN operator, and the Steklov spectrum;
//! this module evaluates the closed-form first derivatives and, separately,
//! differentiates the discretized objects through an actual family of
//! perturbed curves. The two routes are independent — the formulas never feed
//! the finite-difference path — so their agreement is a genuine check.
//!
//! Closed forms in use:
//!
//! - harmonic-extension variation: the derivative `v` of the extension at a
//!   fixed interior point is harmonic with trace `v = -grad u . hdot`;
//! - DtN variation under a velocity `hdot` (writing `L = Lambda f`, `H` for
//!   curvature, `'` for arc-length derivative):
//!   `dL = tau L' - sigma (Delta_T f + H L) - sigma' f' - Lambda(grad u . hdot)`,
//!   which for a purely normal velocity collapses to
//!   `dL = -sigma (Delta_T f + H L) - sigma' f' - Lambda(sigma L)`;
//! - Hadamard derivative of a simple eigenvalue with normalized eigenfield:
//!   `lambda_dot = integral sigma (|f'|^2 - lambda H f^2 - lambda^2 f^2) dA`,
//!   equal to the pairing `<f, dLambda f>`; both are computed and compared;
//! - cluster splitting: for a multiple eigenvalue the first-order rates are
//!   the eigenvalues of the matrix `M_ij = <f_i, dLambda f_j>` over an
//!   orthonormal cluster basis.
//!
//! Finite-difference oracles move the curve for real. A purely radial family
//! `r_t = r + t * sigma_radial` suffices for eigenvalues (only the normal
//! component of a velocity moves them at first order). Field-level
//! derivatives need the true normal/tangential motion, so displaced curves
//! are re-graphed in polar form: displace a fine sampling of the boundary,
//! interpolate radius and polar angle as trigonometric series, invert the
//! angle map by Newton iteration, and resample onto the uniform grid. The
//! angle maps are kept so transported data and output points refer to the
//! same material boundary points on both sides of the difference quotient.

use nalgebra::{DMatrix, Point2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dtn::{assemble_dtn_with_tol, steklov_spectrum, DtnOperator, SteklovSpectrum};
use crate::error::{Result, SteklovError};
use crate::fourier::TrigSeries;
use crate::geometry::{
    build_curve, l2_inner, l2_norm, laplace_beltrami_boundary, tangential_derivative,
    BoundaryCurve, BoundaryField, CurveSpec,
};
use crate::harmonic::{solve_dirichlet_with_tol, HarmonicFunction};

/// Default finite-difference step for derivative checks.
pub const DEFAULT_T_STEP: f64 = 1e-4;

/// Overlap threshold below which eigenvalue-branch tracking refuses to guess.
pub const TRACKING_OVERLAP_MIN: f64 = 0.9;

/// Solver knobs shared by spectrum-level operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Harmonic basis order M (2M + 1 basis functions).
    pub basis_order: usize,
    /// Relative SVD cutoff for collocation solves.
    pub svd_tol: f64,
    /// Highest retained eigenvalue index.
    pub k_max: usize,
    /// Relative gap threshold for clustering.
    pub delta_cluster: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            basis_order: 24,
            svd_tol: crate::harmonic::DEFAULT_SVD_TOL,
            k_max: 10,
            delta_cluster: crate::dtn::DEFAULT_DELTA_CLUSTER,
        }
    }
}

impl SolverOptions {
    pub(crate) fn dtn(&self, curve: &BoundaryCurve) -> Result<DtnOperator> {
        assemble_dtn_with_tol(curve, self.basis_order, self.svd_tol)
    }

    pub(crate) fn spectrum(
        &self,
        curve: &BoundaryCurve,
        dtn: &DtnOperator,
    ) -> Result<SteklovSpectrum> {
        steklov_spectrum(curve, dtn, self.k_max, self.delta_cluster)
    }
}

/// How a boundary velocity is extended into the interior (the extension only
/// matters for field-level oracles; first-order formulas see the trace).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InteriorExtension {
    #[serde(rename = "normal-graph")]
    NormalGraph,
}

/// Boundary velocity `sigma * normal + tau * tangent` on one curve.
#[derive(Debug, Clone)]
pub struct PerturbationField {
    sigma: BoundaryField,
    tau: BoundaryField,
    interior_extension: InteriorExtension,
}

impl PerturbationField {
    /// Purely normal velocity.
    pub fn normal(curve: &BoundaryCurve, sigma: BoundaryField) -> Result<Self> {
        sigma.check_curve(curve)?;
        let tau = BoundaryField::constant(curve, 0.0);
        Ok(PerturbationField {
            sigma,
            tau,
            interior_extension: InteriorExtension::NormalGraph,
        })
    }

    /// Velocity with both normal and tangential components.
    pub fn general(curve: &BoundaryCurve, sigma: BoundaryField, tau: BoundaryField) -> Result<Self> {
        sigma.check_curve(curve)?;
        tau.check_curve(curve)?;
        Ok(PerturbationField {
            sigma,
            tau,
            interior_extension: InteriorExtension::NormalGraph,
        })
    }

    pub fn sigma(&self) -> &BoundaryField {
        &self.sigma
    }

    pub fn tau(&self) -> &BoundaryField {
        &self.tau
    }

    pub fn interior_extension(&self) -> InteriorExtension {
        self.interior_extension
    }

    pub fn is_normal(&self) -> bool {
        self.tau.values().iter().all(|&v| v == 0.0)
    }

    /// Cartesian velocity vectors at the nodes.
    pub fn velocity(&self, curve: &BoundaryCurve) -> Result<Vec<nalgebra::Vector2<f64>>> {
        self.sigma.check_curve(curve)?;
        Ok((0..curve.n_nodes())
            .map(|j| {
                curve.normal()[j] * self.sigma.values()[j] + curve.tangent()[j] * self.tau.values()[j]
            })
            .collect())
    }
}

/// Derivative of the harmonic extension at fixed interior points: the
/// returned function is harmonic with boundary trace `-grad u . hdot`.
pub fn dt_harmonic_extension(
    curve: &BoundaryCurve,
    u: &HarmonicFunction,
    hdot: &PerturbationField,
    svd_tol: f64,
) -> Result<HarmonicFunction> {
    if u.curve_id() != curve.id() {
        return Err(SteklovError::CurveMismatch {
            expected: curve.id().raw(),
            got: u.curve_id().raw(),
        });
    }
    let velocity = hdot.velocity(curve)?;
    let trace: Vec<f64> = curve
        .nodes()
        .iter()
        .zip(&velocity)
        .map(|(p, v)| -u.gradient(p).dot(v))
        .collect();
    let datum = BoundaryField::new(curve, trace)?;
    solve_dirichlet_with_tol(curve, &datum, u.basis_order(), svd_tol)
}

/// DtN variation together with its eigenvalue-hint cross-check.
#[derive(Debug, Clone)]
pub struct DtnVariation {
    /// Nodal values of `d/dt (Lambda_t f)` at `t = 0`.
    pub field: BoundaryField,
    /// Max-norm change when `Lambda f` is replaced by `lambda f` — meaningful
    /// only when `f` is (close to) an eigenfield with that eigenvalue.
    pub hint_deviation: Option<f64>,
}

fn dtn_variation_normal_terms(
    curve: &BoundaryCurve,
    dtn: &DtnOperator,
    f: &BoundaryField,
    sigma: &BoundaryField,
    lf: &BoundaryField,
) -> Result<Vec<f64>> {
    let lap_f = laplace_beltrami_boundary(curve, f)?;
    let df_ds = tangential_derivative(curve, f)?;
    let dsigma_ds = tangential_derivative(curve, sigma)?;

    // -Lambda(sigma * Lambda f): the inner product of sigma with the normal
    // derivative is itself boundary data for the operator.
    let sigma_lf: Vec<f64> = sigma
        .values()
        .iter()
        .zip(lf.values())
        .map(|(&s, &l)| s * l)
        .collect();
    let k_sigma_lf = dtn.apply(curve, &BoundaryField::new(curve, sigma_lf)?)?;

    Ok((0..curve.n_nodes())
        .map(|j| {
            let s = sigma.values()[j];
            let h = curve.curvature()[j];
            -s * (lap_f.values()[j] + h * lf.values()[j])
                - dsigma_ds.values()[j] * df_ds.values()[j]
                - k_sigma_lf.values()[j]
        })
        .collect())
}

/// First derivative of `Lambda_t f` for a purely normal velocity `sigma`.
///
/// Every occurrence of `Lambda f` uses the assembled operator. When
/// `lambda_hint` is given (so `f` is an eigenfield candidate), the same
/// expression is re-evaluated with `Lambda f` replaced by `lambda f` and the
/// max-norm difference is reported as a consistency diagnostic; the returned
/// field is always the operator version.
pub fn dt_dtn_normal(
    curve: &BoundaryCurve,
    dtn: &DtnOperator,
    f: &BoundaryField,
    sigma: &BoundaryField,
    lambda_hint: Option<f64>,
) -> Result<DtnVariation> {
    f.check_curve(curve)?;
    sigma.check_curve(curve)?;
    let lf = dtn.apply(curve, f)?;
    let exact = dtn_variation_normal_terms(curve, dtn, f, sigma, &lf)?;

    let hint_deviation = match lambda_hint {
        None => None,
        Some(lambda) => {
            let lam_f = BoundaryField::new(
                curve,
                f.values().iter().map(|&v| lambda * v).collect(),
            )?;
            let hinted = dtn_variation_normal_terms(curve, dtn, f, sigma, &lam_f)?;
            Some(
                exact
                    .iter()
                    .zip(&hinted)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(0.0, f64::max),
            )
        }
    };

    Ok(DtnVariation {
        field: BoundaryField::new(curve, exact)?,
        hint_deviation,
    })
}

/// First derivative of `Lambda_t f` for a general velocity
/// `sigma * normal + tau * tangent`.
///
/// Relative to the normal-velocity form this adds the transport term
/// `tau * (Lambda f)'` and evaluates the final operator application on
/// `grad u . hdot`, with `u` the harmonic extension of `f`; with `tau = 0`
/// the two routes agree to roundoff.
pub fn dt_dtn_general(
    curve: &BoundaryCurve,
    dtn: &DtnOperator,
    f: &BoundaryField,
    hdot: &PerturbationField,
    svd_tol: f64,
) -> Result<BoundaryField> {
    f.check_curve(curve)?;
    let lf = dtn.apply(curve, f)?;
    let dlf_ds = tangential_derivative(curve, &lf)?;
    let lap_f = laplace_beltrami_boundary(curve, f)?;
    let df_ds = tangential_derivative(curve, f)?;
    let dsigma_ds = tangential_derivative(curve, hdot.sigma())?;

    let u = solve_dirichlet_with_tol(curve, f, dtn.basis_order(), svd_tol)?;
    let velocity = hdot.velocity(curve)?;
    let grad_dot_h: Vec<f64> = curve
        .nodes()
        .iter()
        .zip(&velocity)
        .map(|(p, v)| u.gradient(p).dot(v))
        .collect();
    let k_grad = dtn.apply(curve, &BoundaryField::new(curve, grad_dot_h)?)?;

    let values: Vec<f64> = (0..curve.n_nodes())
        .map(|j| {
            let s = hdot.sigma().values()[j];
            let h = curve.curvature()[j];
            hdot.tau().values()[j] * dlf_ds.values()[j]
                - s * (lap_f.values()[j] + h * lf.values()[j])
                - dsigma_ds.values()[j] * df_ds.values()[j]
                - k_grad.values()[j]
        })
        .collect();
    BoundaryField::new(curve, values)
}

/// Both routes to the derivative of a simple eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct EigenDerivative {
    /// Quadrature of the shape-derivative density
    /// `sigma (|f'|^2 - lambda H f^2 - lambda^2 f^2)`.
    pub hadamard: f64,
    /// The pairing `<f, dLambda f>` against the operator variation.
    pub dtn_pairing: f64,
    /// Absolute difference between the two routes.
    pub identity_gap: f64,
}

/// Derivative of a simple eigenvalue under a normal velocity `sigma`.
///
/// `f` must be L2-normalized on the boundary. The value is computed twice —
/// as the Hadamard quadrature and as the pairing with the DtN variation —
/// and the call fails if the two disagree beyond `1e-8 * (1 + |value|)`,
/// since that signals `(lambda, f)` was not actually an eigenpair (or the
/// discretization is too coarse to trust either number).
pub fn eigenvalue_derivative(
    curve: &BoundaryCurve,
    dtn: &DtnOperator,
    f: &BoundaryField,
    lambda: f64,
    sigma: &BoundaryField,
) -> Result<EigenDerivative> {
    f.check_curve(curve)?;
    sigma.check_curve(curve)?;
    let norm = l2_norm(curve, f)?;
    if (norm - 1.0).abs() > 1e-8 {
        return Err(SteklovError::NotNormalized {
            deviation: (norm - 1.0).abs(),
        });
    }

    let df_ds = tangential_derivative(curve, f)?;
    let hadamard: f64 = (0..curve.n_nodes())
        .map(|j| {
            let fv = f.values()[j];
            let fp = df_ds.values()[j];
            let h = curve.curvature()[j];
            curve.weights()[j]
                * sigma.values()[j]
                * (fp * fp - lambda * h * fv * fv - lambda * lambda * fv * fv)
        })
        .sum();

    let variation = dt_dtn_normal(curve, dtn, f, sigma, None)?;
    let dtn_pairing = l2_inner(curve, f, &variation.field)?;

    let identity_gap = (hadamard - dtn_pairing).abs();
    if identity_gap > 1e-8 * (1.0 + hadamard.abs()) {
        return Err(SteklovError::GreensIdentityMismatch {
            quadrature: hadamard,
            pairing: dtn_pairing,
            gap: identity_gap,
        });
    }
    Ok(EigenDerivative {
        hadamard,
        dtn_pairing,
        identity_gap,
    })
}

/// First-order response of a multiple eigenvalue to a normal velocity.
#[derive(Debug, Clone)]
pub struct SplittingMatrix {
    matrix: DMatrix<f64>,
    rates: Vec<f64>,
    vectors: DMatrix<f64>,
    asymmetry: f64,
}

impl SplittingMatrix {
    /// The pairing matrix `M_ij = <f_i, dLambda f_j>`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Eigenvalues of the symmetrized pairing matrix, ascending: the
    /// derivatives of the eigenvalue branches.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Orthonormal eigenvectors (columns, matching `rates` order) in the
    /// coordinates of the supplied cluster basis.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Max-norm departure of the pairing matrix from symmetry.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// Rotate the cluster basis into the adapted basis that diagonalizes the
    /// first-order response: branch `m` starts from column `m`.
    pub fn adapted_fields(
        &self,
        curve: &BoundaryCurve,
        fields: &[BoundaryField],
    ) -> Result<Vec<BoundaryField>> {
        let d = fields.len();
        let n = curve.n_nodes();
        let mut out = Vec::with_capacity(d);
        for m in 0..d {
            let mut vals = vec![0.0; n];
            for (i, field) in fields.iter().enumerate() {
                let c = self.vectors[(i, m)];
                for (v, &fv) in vals.iter_mut().zip(field.values()) {
                    *v += c * fv;
                }
            }
            out.push(BoundaryField::new(curve, vals)?);
        }
        Ok(out)
    }
}

/// Pairing matrix and branch rates for a cluster of eigenfields under a
/// normal velocity. The fields must be L2-orthonormal (checked to 1e-8).
pub fn splitting_matrix(
    curve: &BoundaryCurve,
    dtn: &DtnOperator,
    fields: &[BoundaryField],
    sigma: &BoundaryField,
) -> Result<SplittingMatrix> {
    let d = fields.len();
    let mut gram_dev: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            let inner = l2_inner(curve, &fields[i], &fields[j])?;
            let expect = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((inner - expect).abs());
        }
    }
    if gram_dev > 1e-8 {
        return Err(SteklovError::NotOrthonormal { deviation: gram_dev });
    }

    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let dvar = dt_dtn_normal(curve, dtn, &fields[j], sigma, None)?;
        for i in 0..d {
            m[(i, j)] = l2_inner(curve, &fields[i], &dvar.field)?;
        }
    }
    let asymmetry = (&m - m.transpose()).amax();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(SteklovError::EigSolveFailure)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("rates are finite")
    });
    let rates: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let pivot = (0..d)
            .max_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).expect("finite"))
            .expect("non-empty");
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..d {
            vectors[(r, col)] = sign * v[r];
        }
    }
    Ok(SplittingMatrix {
        matrix: m,
        rates,
        vectors,
        asymmetry,
    })
}

// ---------------------------------------------------------------------------
// Finite-difference families
// ---------------------------------------------------------------------------

/// Radial velocity equivalent to the normal velocity `sigma`: moving nodes
/// radially by `sigma * |gamma'| / r` displaces the boundary by `sigma` in
/// the normal direction, to first order. Returned as a trigonometric series
/// truncated at `N/4` so perturbed curve descriptions stay resolvable.
pub fn radial_perturbation_series(
    curve: &BoundaryCurve,
    sigma: &BoundaryField,
) -> Result<TrigSeries> {
    sigma.check_curve(curve)?;
    let vals: Vec<f64> = (0..curve.n_nodes())
        .map(|j| {
            let r = curve.spec().radius(curve.theta()[j]);
            sigma.values()[j] * curve.speed()[j] / r
        })
        .collect();
    Ok(TrigSeries::from_samples(&vals)?.truncated(curve.n_nodes() / 4))
}

/// Curve description displaced radially by `t * delta_r`.
pub fn radially_perturbed_spec(
    spec: &CurveSpec,
    delta_r: &TrigSeries,
    t: f64,
) -> Result<CurveSpec> {
    let modes = delta_r.n_modes().max(spec.cos.len()).max(spec.sin.len());
    let mut cos = spec.cos.clone();
    let mut sin = spec.sin.clone();
    cos.resize(modes, 0.0);
    sin.resize(modes, 0.0);
    for m in 1..=modes {
        let (c, s) = delta_r.mode(m);
        cos[m - 1] += t * c;
        sin[m - 1] += t * s;
    }
    let out = CurveSpec {
        base_radius: spec.base_radius + t * delta_r.mean,
        cos,
        sin,
        n_nodes: spec.n_nodes,
        r_min: spec.r_min,
    };
    out.validate()
        .map_err(|e| SteklovError::InvalidPerturbedCurve {
            reason: e.to_string(),
        })?;
    Ok(out)
}

/// Spectra on both sides of a radial finite-difference family.
pub(crate) struct FdSpectra {
    pub plus: SteklovSpectrum,
    pub minus: SteklovSpectrum,
}

pub(crate) fn radial_fd_spectra(
    spec: &CurveSpec,
    opts: &SolverOptions,
    delta_r: &TrigSeries,
    t: f64,
) -> Result<FdSpectra> {
    let build = |s: f64| -> Result<SteklovSpectrum> {
        let curve = build_curve(&radially_perturbed_spec(spec, delta_r, s)?)?;
        let dtn = opts.dtn(&curve)?;
        opts.spectrum(&curve, &dtn)
    };
    Ok(FdSpectra {
        plus: build(t)?,
        minus: build(-t)?,
    })
}

/// Match each adapted base field to its branch in a perturbed spectrum by
/// weighted overlap; the radial family preserves the angular grid, so nodal
/// values on both curves sample the same material points.
fn track_branches(
    base_curve: &BoundaryCurve,
    adapted: &[BoundaryField],
    range: (usize, usize),
    perturbed: &SteklovSpectrum,
) -> Result<Vec<usize>> {
    let (a, b) = range;
    let d = adapted.len();
    let mut assignment = vec![usize::MAX; d];
    let mut taken = vec![false; b - a + 1];
    for (m, g) in adapted.iter().enumerate() {
        let mut best = (0usize, 0.0f64);
        for j in a..=b {
            let pf = &perturbed.eigenfields()[j];
            // Base-curve weights on raw nodal values of both fields.
            let mut inner = 0.0;
            let mut norm2 = 0.0;
            for k in 0..base_curve.n_nodes() {
                let w = base_curve.weights()[k];
                inner += w * g.values()[k] * pf.values()[k];
                norm2 += w * pf.values()[k] * pf.values()[k];
            }
            let overlap = inner.abs() / norm2.sqrt();
            if overlap > best.1 {
                best = (j, overlap);
            }
        }
        if best.1 <= TRACKING_OVERLAP_MIN || taken[best.0 - a] {
            return Err(SteklovError::TrackingAmbiguous {
                best_overlap: best.1,
            });
        }
        taken[best.0 - a] = true;
        assignment[m] = best.0;
    }
    Ok(assignment)
}

/// Central-difference branch rates for one cluster of a radial family.
pub(crate) fn fd_cluster_rates(
    base_curve: &BoundaryCurve,
    adapted: &[BoundaryField],
    range: (usize, usize),
    fd: &FdSpectra,
    t: f64,
) -> Result<Vec<f64>> {
    if fd.plus.len() <= range.1 || fd.minus.len() <= range.1 {
        return Err(SteklovError::ClusterOutOfRange {
            index: range.1,
            count: fd.plus.len().min(fd.minus.len()),
        });
    }
    let (a, b) = range;
    // When the perturbed cluster has not split on either side (a uniform
    // dilation, say), every branch carries the same rate and identification
    // is unnecessary — and overlap tracking would be rightly ambiguous, the
    // perturbed eigenbasis being an arbitrary rotation of the cluster.
    // Reassignment can move a rate by at most the combined spread over 2t.
    let spread = |s: &SteklovSpectrum| -> f64 {
        let vals = &s.eigenvalues()[a..=b];
        vals.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
            - vals.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    };
    let ambiguity = (spread(&fd.plus) + spread(&fd.minus)) / (2.0 * t);
    let scale = fd.plus.eigenvalues()[a..=b]
        .iter()
        .fold(1.0f64, |m, &v| m.max(v.abs()));
    if ambiguity <= 1e-7 * scale {
        return Ok((0..adapted.len())
            .map(|m| (fd.plus.eigenvalues()[a + m] - fd.minus.eigenvalues()[a + m]) / (2.0 * t))
            .collect());
    }
    let idx_plus = track_branches(base_curve, adapted, range, &fd.plus)?;
    let idx_minus = track_branches(base_curve, adapted, range, &fd.minus)?;
    Ok((0..adapted.len())
        .map(|m| {
            (fd.plus.eigenvalues()[idx_plus[m]] - fd.minus.eigenvalues()[idx_minus[m]]) / (2.0 * t)
        })
        .collect())
}

/// Formula rates and finite-difference rates for one eigenvalue cluster.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub cluster_index: usize,
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// Branch derivatives from the splitting matrix (single Hadamard value
    /// for a simple eigenvalue), ascending.
    pub formula_rates: Vec<f64>,
    /// Central differences at `fd_step`, in the same branch order.
    pub fd_rates: Vec<f64>,
    /// Central differences at `fd_step / 2` (Richardson confirmation).
    pub fd_rates_half_step: Vec<f64>,
    pub fd_step: f64,
    /// Max over branches of `|fd - formula| / (1 + |formula|)`.
    pub rel_error: f64,
    /// Same at the halved step; should not be worse than `rel_error` beyond
    /// finite-difference noise.
    pub rel_error_half_step: f64,
}

fn max_rel_error(formula: &[f64], fd: &[f64]) -> f64 {
    formula
        .iter()
        .zip(fd)
        .map(|(&a, &b)| (a - b).abs() / (1.0 + a.abs()))
        .fold(0.0, f64::max)
}

/// Differentiate one eigenvalue cluster through an actual family of curves
/// and compare with the first-order formulas.
///
/// The perturbation is the normal velocity `sigma` (given as a function of
/// the angle); the family moves the curve radially by the equivalent radial
/// velocity. Branches of a multiple eigenvalue are matched by eigenfield
/// overlap against the adapted basis of the splitting matrix, which is the
/// basis the branches actually emanate from; tracking refuses to guess when
/// the best overlap drops below 0.9.
pub fn fd_eigenvalue_derivative(
    spec: &CurveSpec,
    opts: &SolverOptions,
    cluster_index: usize,
    sigma: &TrigSeries,
    t_step: f64,
) -> Result<DerivativeReport> {
    let curve = build_curve(spec)?;
    let dtn = opts.dtn(&curve)?;
    let spectrum = opts.spectrum(&curve, &dtn)?;
    let range = spectrum.cluster_range(cluster_index)?;
    let (a, b) = range;
    let multiplicity = b - a + 1;
    let eigenvalue = spectrum.cluster_eigenvalue(cluster_index)?;

    let sigma_field = BoundaryField::from_fn(&curve, |theta| sigma.eval(theta))?;

    let (formula_rates, adapted) = if multiplicity == 1 {
        let f = &spectrum.eigenfields()[a];
        let d = eigenvalue_derivative(&curve, &dtn, f, spectrum.eigenvalues()[a], &sigma_field)?;
        (vec![d.hadamard], vec![f.clone()])
    } else {
        let fields = &spectrum.eigenfields()[a..=b];
        let sm = splitting_matrix(&curve, &dtn, fields, &sigma_field)?;
        let adapted = sm.adapted_fields(&curve, fields)?;
        (sm.rates().to_vec(), adapted)
    };

    let delta_r = radial_perturbation_series(&curve, &sigma_field)?;
    let fd_full = radial_fd_spectra(spec, opts, &delta_r, t_step)?;
    let fd_rates = fd_cluster_rates(&curve, &adapted, range, &fd_full, t_step)?;
    let fd_half = radial_fd_spectra(spec, opts, &delta_r, t_step / 2.0)?;
    let fd_rates_half_step = fd_cluster_rates(&curve, &adapted, range, &fd_half, t_step / 2.0)?;

    Ok(DerivativeReport {
        cluster_index,
        eigenvalue,
        multiplicity,
        rel_error: max_rel_error(&formula_rates, &fd_rates),
        rel_error_half_step: max_rel_error(&formula_rates, &fd_rates_half_step),
        formula_rates,
        fd_rates,
        fd_rates_half_step,
        fd_step: t_step,
    })
}

// ---------------------------------------------------------------------------
// Field-level oracles: displaced curves re-graphed in polar form
// ---------------------------------------------------------------------------

/// A displaced curve re-graphed as a radial Fourier description, with the
/// angle maps needed to transport data between the base and displaced curve.
pub struct DeformedCurve {
    /// Radial description of the displaced boundary on the same node count.
    pub spec: CurveSpec,
    /// For each uniform node angle `phi_k` of the displaced curve, the base
    /// parameter `theta` whose displaced image sits at polar angle `phi_k`.
    pub theta_at_node: Vec<f64>,
    /// For each base node `theta_j`, the polar angle of its displaced image.
    pub angle_of_base_node: Vec<f64>,
}

/// Displace `gamma(theta)` by `t * (sigma normal + tau tangent)` and re-graph
/// the result in polar form.
///
/// A fine sampling (4x the node count) of radius and polar-angle shift is
/// interpolated trigonometrically; the angle map `alpha(theta) = theta + d(theta)`
/// is inverted by Newton iteration to resample the radius on the uniform
/// grid. The resulting description is truncated at mode `N/4`, which is far
/// beyond the spectral content of smooth small displacements.
pub fn deform_spec(
    spec: &CurveSpec,
    sigma: &TrigSeries,
    tau: &TrigSeries,
    t: f64,
) -> Result<DeformedCurve> {
    use std::f64::consts::PI;
    let n = spec.n_nodes;
    let n_fine = 4 * n;
    let step_fine = 2.0 * PI / n_fine as f64;

    let mut radius_fine = Vec::with_capacity(n_fine);
    let mut shift_fine = Vec::with_capacity(n_fine);
    for i in 0..n_fine {
        let theta = step_fine * i as f64;
        let (p, tangent, normal) = spec.frame(theta);
        let displaced = p + (normal * sigma.eval(theta) + tangent * tau.eval(theta)) * t;
        let radius = displaced.coords.norm();
        let raw = displaced.y.atan2(displaced.x) - theta;
        // Wrap the angle shift into (-pi, pi]; it is O(t) for valid motions.
        let shift = raw - (2.0 * PI) * ((raw + PI) / (2.0 * PI)).floor();
        if !radius.is_finite() || radius <= 0.0 {
            return Err(SteklovError::InvalidPerturbedCurve {
                reason: format!("displaced point at theta = {theta:.6} has radius {radius}"),
            });
        }
        radius_fine.push(radius);
        shift_fine.push(shift);
    }
    let radius_series = TrigSeries::from_samples(&radius_fine)?;
    let shift_series = TrigSeries::from_samples(&shift_fine)?;

    // Invert alpha(theta) = theta + shift(theta) at the uniform target angles.
    let step = 2.0 * PI / n as f64;
    let mut theta_at_node = Vec::with_capacity(n);
    let mut new_radii = Vec::with_capacity(n);
    for k in 0..n {
        let phi = step * k as f64;
        let mut theta = phi - shift_series.eval(phi);
        let mut converged = false;
        for _ in 0..20 {
            let g = theta + shift_series.eval(theta) - phi;
            if g.abs() < 1e-13 {
                converged = true;
                break;
            }
            theta -= g / (1.0 + shift_series.eval_deriv(theta));
        }
        if !converged {
            return Err(SteklovError::InvalidPerturbedCurve {
                reason: format!("polar angle map failed to invert at phi = {phi:.6}"),
            });
        }
        theta_at_node.push(theta);
        new_radii.push(radius_series.eval(theta));
    }

    let new_series = TrigSeries::from_samples(&new_radii)?.truncated(n / 4);
    let new_spec = CurveSpec {
        base_radius: new_series.mean,
        cos: new_series.cos.clone(),
        sin: new_series.sin.clone(),
        n_nodes: n,
        r_min: spec.r_min,
    };
    new_spec
        .validate()
        .map_err(|e| SteklovError::InvalidPerturbedCurve {
            reason: e.to_string(),
        })?;

    let angle_of_base_node = (0..n)
        .map(|j| {
            let theta = step * j as f64;
            theta + shift_series.eval(theta)
        })
        .collect();

    Ok(DeformedCurve {
        spec: new_spec,
        theta_at_node,
        angle_of_base_node,
    })
}

/// Finite-difference oracle for the DtN variation under a general velocity.
///
/// For both signs of the step the boundary is actually displaced, the datum
/// `f` is transported with the motion, the DtN operator of the displaced
/// curve is applied, and the result is read back at the displaced images of
/// the base nodes. The central difference approximates the same derivative
/// that `dt_dtn_general` evaluates in closed form, while sharing none of its
/// ingredients.
pub fn fd_dtn_variation(
    spec: &CurveSpec,
    opts: &SolverOptions,
    f: &TrigSeries,
    sigma: &TrigSeries,
    tau: &TrigSeries,
    t_step: f64,
) -> Result<Vec<f64>> {
    let n = spec.n_nodes;
    let side = |s: f64| -> Result<Vec<f64>> {
        let deformed = deform_spec(spec, sigma, tau, s)?;
        let curve = build_curve(&deformed.spec)?;
        let dtn = opts.dtn(&curve)?;
        let data: Vec<f64> = deformed.theta_at_node.iter().map(|&th| f.eval(th)).collect();
        let lf = dtn.apply(&curve, &BoundaryField::new(&curve, data)?)?;
        let lf_series = lf.to_series();
        Ok(deformed
            .angle_of_base_node
            .iter()
            .map(|&alpha| lf_series.eval(alpha))
            .collect())
    };
    let plus = side(t_step)?;
    let minus = side(-t_step)?;
    Ok((0..n)
        .map(|j| (plus[j] - minus[j]) / (2.0 * t_step))
        .collect())
}

/// Finite-difference oracle for the harmonic-extension variation at fixed
/// interior points: solve the Dirichlet problem on displaced curves with the
/// transported datum and difference the values at each point.
pub fn fd_harmonic_variation(
    spec: &CurveSpec,
    opts: &SolverOptions,
    f: &TrigSeries,
    sigma: &TrigSeries,
    tau: &TrigSeries,
    points: &[Point2<f64>],
    t_step: f64,
) -> Result<Vec<f64>> {
    let side = |s: f64| -> Result<Vec<f64>> {
        let deformed = deform_spec(spec, sigma, tau, s)?;
        let curve = build_curve(&deformed.spec)?;
        let data: Vec<f64> = deformed.theta_at_node.iter().map(|&th| f.eval(th)).collect();
        let field = BoundaryField::new(&curve, data)?;
        let u = solve_dirichlet_with_tol(&curve, &field, opts.basis_order, opts.svd_tol)?;
        Ok(points.iter().map(|p| u.evaluate(p)).collect())
    };
    let plus = side(t_step)?;
    let minus = side(-t_step)?;
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(&a, &b)| (a - b) / (2.0 * t_step))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtn::assemble_dtn;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn disk(n: usize, order: usize) -> (BoundaryCurve, DtnOperator) {
        let curve = build_curve(&CurveSpec::circle(1.0, n)).unwrap();
        let dtn = assemble_dtn(&curve, order).unwrap();
        (curve, dtn)
    }

    #[test]
    fn dilation_derivative_is_minus_lambda() {
        // Under a unit normal velocity on the unit circle, lambda_k = k
        // moves at rate -k: eigenvalues scale as 1/radius.
        let (curve, dtn) = disk(64, 12);
        let sigma = BoundaryField::constant(&curve, 1.0);
        for k in 1..=3 {
            let f =
                BoundaryField::from_fn(&curve, |t| (k as f64 * t).cos() / PI.sqrt()).unwrap();
            let d = eigenvalue_derivative(&curve, &dtn, &f, k as f64, &sigma).unwrap();
            assert_abs_diff_eq!(d.hadamard, -(k as f64), epsilon = 1e-9);
            assert!(d.identity_gap < 1e-9);
        }
    }

    #[test]
    fn mode_two_velocity_tilts_the_first_eigenvalue() {
        // For f = cos(theta)/sqrt(pi) and sigma = cos(2 theta) the quadrature
        // evaluates to -3/2 in closed form.
        let (curve, dtn) = disk(64, 12);
        let sigma = BoundaryField::from_fn(&curve, |t| (2.0 * t).cos()).unwrap();
        let f = BoundaryField::from_fn(&curve, |t| t.cos() / PI.sqrt()).unwrap();
        let d = eigenvalue_derivative(&curve, &dtn, &f, 1.0, &sigma).unwrap();
        assert_abs_diff_eq!(d.hadamard, -1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(d.dtn_pairing, -1.5, epsilon = 1e-9);
    }

    #[test]
    fn splitting_rates_for_resonant_velocity() {
        // sigma = cos(2k theta) splits the k-th circle cluster symmetrically
        // at rates -/+ k(2k+1)/2; any orthonormal cluster basis gives the
        // same rates, so the solver's own eigenfields are used.
        let (curve, dtn) = disk(64, 12);
        let spectrum = steklov_spectrum(&curve, &dtn, 6, 1e-5).unwrap();
        for (cluster, k) in [(1usize, 1.0f64), (2, 2.0)] {
            let (a, b) = spectrum.cluster_range(cluster).unwrap();
            let sigma = BoundaryField::from_fn(&curve, |t| (2.0 * k * t).cos()).unwrap();
            let sm =
                splitting_matrix(&curve, &dtn, &spectrum.eigenfields()[a..=b], &sigma).unwrap();
            let rate = k * (2.0 * k + 1.0) / 2.0;
            assert_abs_diff_eq!(sm.rates()[0], -rate, epsilon = 1e-8);
            assert_abs_diff_eq!(sm.rates()[1], rate, epsilon = 1e-8);
            assert!(sm.asymmetry() < 1e-9);
        }
    }

    #[test]
    fn non_resonant_velocity_does_not_split_at_first_order() {
        let (curve, dtn) = disk(64, 12);
        let spectrum = steklov_spectrum(&curve, &dtn, 4, 1e-5).unwrap();
        let (a, b) = spectrum.cluster_range(1).unwrap();
        let sigma = BoundaryField::from_fn(&curve, |t| (4.0 * t).cos()).unwrap();
        let sm = splitting_matrix(&curve, &dtn, &spectrum.eigenfields()[a..=b], &sigma).unwrap();
        assert_abs_diff_eq!(sm.rates()[0], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sm.rates()[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn general_velocity_with_zero_tangential_part_matches_normal_form() {
        let spec = CurveSpec {
            base_radius: 1.0,
            cos: vec![0.0, 0.0, 0.1],
            sin: vec![],
            n_nodes: 128,
            r_min: 0.05,
        };
        let curve = build_curve(&spec).unwrap();
        let dtn = assemble_dtn(&curve, 20).unwrap();
        let f = BoundaryField::from_fn(&curve, |t| (2.0 * t).cos() + 0.3 * t.sin()).unwrap();
        let sigma = BoundaryField::from_fn(&curve, |t| (3.0 * t).sin()).unwrap();
        let hdot = PerturbationField::normal(&curve, sigma.clone()).unwrap();
        let general = dt_dtn_general(&curve, &dtn, &f, &hdot, 1e-12).unwrap();
        let normal = dt_dtn_normal(&curve, &dtn, &f, &sigma, None).unwrap();
        for (a, b) in general.values().iter().zip(normal.field.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
    }

    #[test]
    fn eigenvalue_hint_agrees_for_true_eigenfields() {
        let (curve, dtn) = disk(64, 12);
        let f = BoundaryField::from_fn(&curve, |t| (2.0 * t).cos() / PI.sqrt()).unwrap();
        let sigma = BoundaryField::from_fn(&curve, |t| t.cos()).unwrap();
        let var = dt_dtn_normal(&curve, &dtn, &f, &sigma, Some(2.0)).unwrap();
        assert!(var.hint_deviation.unwrap() < 1e-8);
    }

    #[test]
    fn radial_series_for_unit_velocity_on_circle_is_constant_one() {
        let (curve, _) = disk(64, 12);
        let sigma = BoundaryField::constant(&curve, 1.0);
        let series = radial_perturbation_series(&curve, &sigma).unwrap();
        assert_abs_diff_eq!(series.mean, 1.0, epsilon = 1e-13);
        assert!(series.cos.iter().chain(&series.sin).all(|&c| c.abs() < 1e-13));
    }

    #[test]
    fn shrinking_past_the_radius_floor_is_invalid() {
        let spec = CurveSpec::circle(1.0, 64);
        let delta = TrigSeries::constant(-1.0);
        assert!(matches!(
            radially_perturbed_spec(&spec, &delta, 0.96),
            Err(SteklovError::InvalidPerturbedCurve { .. })
        ));
    }

    #[test]
    fn tangential_displacement_leaves_the_circle_invariant_to_first_order() {
        // A purely tangential velocity slides points along the circle. The
        // displacement is along straight tangent lines, so points leave the
        // circle only at second order: radius changes are O((t tau)^2 / 2).
        let spec = CurveSpec::circle(1.0, 64);
        let sigma = TrigSeries::constant(0.0);
        let tau = TrigSeries {
            mean: 0.0,
            cos: vec![0.3],
            sin: vec![],
        };
        let t = 0.01;
        let second_order = (t * 0.3f64).powi(2);
        let deformed = deform_spec(&spec, &sigma, &tau, t).unwrap();
        assert_abs_diff_eq!(deformed.spec.base_radius, 1.0, epsilon = second_order);
        for &c in deformed.spec.cos.iter().chain(&deformed.spec.sin) {
            assert!(c.abs() < second_order);
        }
        // The angle map reflects the slide: alpha(theta) = theta + t tau.
        assert_abs_diff_eq!(deformed.angle_of_base_node[0], t * 0.3, epsilon = 1e-8);
    }

    #[test]
    fn normal_displacement_of_circle_is_a_radius_change() {
        let spec = CurveSpec::circle(1.0, 64);
        let sigma = TrigSeries::constant(1.0);
        let tau = TrigSeries::constant(0.0);
        let deformed = deform_spec(&spec, &sigma, &tau, 0.02).unwrap();
        assert_abs_diff_eq!(deformed.spec.base_radius, 1.02, epsilon = 1e-12);
        for &c in deformed.spec.cos.iter().chain(&deformed.spec.sin) {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn fd_cluster_rates_match_splitting_prediction_on_disk() {
        let spec = CurveSpec::circle(1.0, 64);
        let opts = SolverOptions {
            basis_order: 12,
            k_max: 6,
            ..SolverOptions::default()
        };
        let sigma = TrigSeries {
            mean: 0.0,
            cos: vec![0.0, 1.0],
            sin: vec![],
        };
        let report = fd_eigenvalue_derivative(&spec, &opts, 1, &sigma, 1e-4).unwrap();
        assert_eq!(report.multiplicity, 2);
        assert_abs_diff_eq!(report.formula_rates[0], -1.5, epsilon = 1e-8);
        assert_abs_diff_eq!(report.formula_rates[1], 1.5, epsilon = 1e-8);
        assert!(report.rel_error < 1e-6, "rel_error = {}", report.rel_error);
        assert!(report.rel_error_half_step < 1e-6);
    }

    #[test]
    fn fd_derivative_of_simple_zero_eigenvalue_cluster() {
        // The zero eigenvalue of the disk stays at zero under dilation.
        let spec = CurveSpec::circle(1.0, 64);
        let opts = SolverOptions {
            basis_order: 12,
            k_max: 4,
            ..SolverOptions::default()
        };
        let sigma = TrigSeries::constant(1.0);
        let report = fd_eigenvalue_derivative(&spec, &opts, 0, &sigma, 1e-4).unwrap();
        assert_eq!(report.multiplicity, 1);
        assert_abs_diff_eq!(report.formula_rates[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.fd_rates[0], 0.0, epsilon = 1e-7);
    }
}

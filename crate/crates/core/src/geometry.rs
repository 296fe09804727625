//! Star-shaped boundary curves and tangential calculus.
//!
//! A curve is the graph of a radial Fourier polynomial,
//!
//! ```text
//! r(theta) = base_radius + sum_k ( cos_k * cos(k theta) + sin_k * sin(k theta) ),
//! gamma(theta) = r(theta) (cos theta, sin theta),
//! ```
//!
//! discretized at `n_nodes` equispaced angles. All geometric data (tangent,
//! outward normal, curvature, arc-length speed `|gamma'|`, trapezoid quadrature
//! weights `w_j = (2 pi / N) |gamma'(theta_j)|`) is evaluated from the closed
//! form, so the discretization error of downstream solvers is purely spectral.
//!
//! Tangential derivatives use the periodic spectral differentiation matrix
//! `D`: for even `N` and `theta_j = 2 pi j / N`,
//!
//! ```text
//! D_jk = (1/2) (-1)^(j-k) cot( (theta_j - theta_k) / 2 ),   D_jj = 0,
//! ```
//!
//! which differentiates trigonometric polynomials of degree < N/2 exactly at
//! the nodes. Arc-length derivatives divide by the speed pointwise:
//! `df/ds = (D f) / |gamma'|`, and the boundary Laplacian iterates the same
//! first-order operation, `Delta_T f = (1/|gamma'|) D ( (D f) / |gamma'| )`.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector, Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteklovError};
use crate::fourier::TrigSeries;

/// Default lower bound for the radial function.
pub const DEFAULT_R_MIN: f64 = 0.05;

fn default_r_min() -> f64 {
    DEFAULT_R_MIN
}

fn is_default_r_min(v: &f64) -> bool {
    *v == DEFAULT_R_MIN
}

/// Opaque identity of a discretized curve; fields carry it so that mixing
/// data across different discretizations is caught at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveId(u64);

impl CurveId {
    fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        CurveId(NEXT.fetch_add(1, Ordering::Relaxed))
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// Radial Fourier description of a star-shaped curve.
///
/// `cos[i]` and `sin[i]` are the coefficients of mode `i + 1`. The curve is
/// valid when `r(theta) >= r_min > 0` at every node and the node count is an
/// even `N >= 4 * max_mode`, so the highest geometric mode is resolved with a
/// comfortable margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub base_radius: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    pub n_nodes: usize,
    #[serde(default = "default_r_min", skip_serializing_if = "is_default_r_min")]
    pub r_min: f64,
}

impl CurveSpec {
    /// Circle of the given radius.
    pub fn circle(radius: f64, n_nodes: usize) -> Self {
        CurveSpec {
            base_radius: radius,
            cos: Vec::new(),
            sin: Vec::new(),
            n_nodes,
            r_min: DEFAULT_R_MIN,
        }
    }

    /// Highest mode with a nonzero coefficient.
    pub fn max_mode(&self) -> usize {
        let last_nonzero = |v: &[f64]| v.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
        last_nonzero(&self.cos).max(last_nonzero(&self.sin))
    }

    /// Radial function r(theta).
    pub fn radius(&self, theta: f64) -> f64 {
        let mut r = self.base_radius;
        for (k_idx, &c) in self.cos.iter().enumerate() {
            r += c * ((k_idx + 1) as f64 * theta).cos();
        }
        for (k_idx, &s) in self.sin.iter().enumerate() {
            r += s * ((k_idx + 1) as f64 * theta).sin();
        }
        r
    }

    /// First derivative r'(theta).
    pub fn radius_deriv(&self, theta: f64) -> f64 {
        let mut dr = 0.0;
        for (k_idx, &c) in self.cos.iter().enumerate() {
            let k = (k_idx + 1) as f64;
            dr -= c * k * (k * theta).sin();
        }
        for (k_idx, &s) in self.sin.iter().enumerate() {
            let k = (k_idx + 1) as f64;
            dr += s * k * (k * theta).cos();
        }
        dr
    }

    /// Second derivative r''(theta).
    pub fn radius_deriv2(&self, theta: f64) -> f64 {
        let mut ddr = 0.0;
        for (k_idx, &c) in self.cos.iter().enumerate() {
            let k = (k_idx + 1) as f64;
            ddr -= c * k * k * (k * theta).cos();
        }
        for (k_idx, &s) in self.sin.iter().enumerate() {
            let k = (k_idx + 1) as f64;
            ddr -= s * k * k * (k * theta).sin();
        }
        ddr
    }

    /// Point, unit tangent, and outward unit normal at an arbitrary angle,
    /// from the closed-form radial function.
    pub fn frame(&self, theta: f64) -> (Point2<f64>, Vector2<f64>, Vector2<f64>) {
        let (sin_t, cos_t) = theta.sin_cos();
        let r = self.radius(theta);
        let dr = self.radius_deriv(theta);
        let x1 = dr * cos_t - r * sin_t;
        let y1 = dr * sin_t + r * cos_t;
        let sp = x1.hypot(y1);
        let tangent = Vector2::new(x1 / sp, y1 / sp);
        let normal = Vector2::new(tangent.y, -tangent.x);
        (Point2::new(r * cos_t, r * sin_t), tangent, normal)
    }

    /// Check finiteness, parity, resolution, and the radial lower bound.
    pub fn validate(&self) -> Result<()> {
        if !self.base_radius.is_finite() {
            return Err(SteklovError::NonFinite {
                context: "base_radius".into(),
            });
        }
        if !self.r_min.is_finite() || self.r_min <= 0.0 {
            return Err(SteklovError::NonFinite {
                context: format!("r_min = {}", self.r_min),
            });
        }
        for (name, coeffs) in [("cos", &self.cos), ("sin", &self.sin)] {
            if let Some(k_idx) = coeffs.iter().position(|c| !c.is_finite()) {
                return Err(SteklovError::NonFinite {
                    context: format!("{name} coefficient of mode {}", k_idx + 1),
                });
            }
        }
        if self.n_nodes % 2 != 0 || self.n_nodes < 4 {
            return Err(SteklovError::OddNodeCount { n: self.n_nodes });
        }
        let max_mode = self.max_mode();
        if self.n_nodes < 4 * max_mode {
            return Err(SteklovError::InsufficientResolution {
                n: self.n_nodes,
                max_mode,
                required: 4 * max_mode,
            });
        }
        let step = 2.0 * PI / self.n_nodes as f64;
        for j in 0..self.n_nodes {
            let theta = step * j as f64;
            let r = self.radius(theta);
            if !(r >= self.r_min) {
                return Err(SteklovError::RadiusNonPositive {
                    theta,
                    radius: r,
                    r_min: self.r_min,
                });
            }
        }
        Ok(())
    }
}

/// Discretized boundary curve with pointwise geometry and quadrature.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    id: CurveId,
    spec: CurveSpec,
    theta: Vec<f64>,
    nodes: Vec<Point2<f64>>,
    tangent: Vec<Vector2<f64>>,
    normal: Vec<Vector2<f64>>,
    curvature: Vec<f64>,
    speed: Vec<f64>,
    weights: Vec<f64>,
    d_theta: DMatrix<f64>,
}

impl BoundaryCurve {
    pub fn id(&self) -> CurveId {
        self.id
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    pub fn n_nodes(&self) -> usize {
        self.theta.len()
    }

    /// Node angles `theta_j = 2 pi j / N`.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn nodes(&self) -> &[Point2<f64>] {
        &self.nodes
    }

    /// Unit tangent, oriented with increasing theta (counterclockwise).
    pub fn tangent(&self) -> &[Vector2<f64>] {
        &self.tangent
    }

    /// Outward unit normal.
    pub fn normal(&self) -> &[Vector2<f64>] {
        &self.normal
    }

    /// Signed curvature; positive for convex curves such as circles.
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    /// Parameterization speed `|gamma'(theta_j)|`.
    pub fn speed(&self) -> &[f64] {
        &self.speed
    }

    /// Arc-length quadrature weights (trapezoid rule in theta).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Spectral d/d(theta) matrix on the node grid.
    pub fn d_theta(&self) -> &DMatrix<f64> {
        &self.d_theta
    }

    /// Total boundary length (sum of the quadrature weights).
    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Scalar samples at the nodes of one particular curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    values: Vec<f64>,
    curve_id: CurveId,
}

impl BoundaryField {
    /// Wrap nodal values, checking length and finiteness.
    pub fn new(curve: &BoundaryCurve, values: Vec<f64>) -> Result<Self> {
        if values.len() != curve.n_nodes() {
            return Err(SteklovError::FieldLengthMismatch {
                len: values.len(),
                expected: curve.n_nodes(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SteklovError::NonFinite {
                context: "boundary field value".into(),
            });
        }
        Ok(BoundaryField {
            values,
            curve_id: curve.id(),
        })
    }

    /// Sample a function of the node angle.
    pub fn from_fn(curve: &BoundaryCurve, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = curve.theta().iter().map(|&t| f(t)).collect();
        Self::new(curve, values)
    }

    /// Constant field.
    pub fn constant(curve: &BoundaryCurve, c: f64) -> Self {
        BoundaryField {
            values: vec![c; curve.n_nodes()],
            curve_id: curve.id(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn curve_id(&self) -> CurveId {
        self.curve_id
    }

    /// Error unless the field lives on `curve`.
    pub fn check_curve(&self, curve: &BoundaryCurve) -> Result<()> {
        if self.curve_id != curve.id() {
            return Err(SteklovError::CurveMismatch {
                expected: curve.id().raw(),
                got: self.curve_id.raw(),
            });
        }
        Ok(())
    }

    /// View as an nalgebra vector.
    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    /// Trigonometric interpolant of the nodal values.
    pub fn to_series(&self) -> TrigSeries {
        TrigSeries::from_samples(&self.values).expect("curve node counts are even by construction")
    }
}

/// Periodic spectral differentiation matrix for an even number of nodes.
fn spectral_diff_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            0.0
        } else {
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            let angle = PI * (j as f64 - k as f64) / n as f64;
            0.5 * sign / angle.tan()
        }
    })
}

/// Discretize a validated curve description.
pub fn build_curve(spec: &CurveSpec) -> Result<BoundaryCurve> {
    spec.validate()?;
    let n = spec.n_nodes;
    let step = 2.0 * PI / n as f64;

    let mut theta = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    let mut tangent = Vec::with_capacity(n);
    let mut normal = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);

    for j in 0..n {
        let t = step * j as f64;
        let (sin_t, cos_t) = t.sin_cos();
        let r = spec.radius(t);
        let dr = spec.radius_deriv(t);
        let ddr = spec.radius_deriv2(t);

        // gamma = r (cos, sin); differentiate the product twice.
        let x1 = dr * cos_t - r * sin_t;
        let y1 = dr * sin_t + r * cos_t;
        let x2 = ddr * cos_t - 2.0 * dr * sin_t - r * cos_t;
        let y2 = ddr * sin_t + 2.0 * dr * cos_t - r * sin_t;

        let sp = x1.hypot(y1);
        let tan = Vector2::new(x1 / sp, y1 / sp);

        theta.push(t);
        nodes.push(Point2::new(r * cos_t, r * sin_t));
        tangent.push(tan);
        // Rotate the tangent by -pi/2: outward for a counterclockwise curve.
        normal.push(Vector2::new(tan.y, -tan.x));
        curvature.push((x1 * y2 - y1 * x2) / (sp * sp * sp));
        speed.push(sp);
        weights.push(step * sp);
    }

    Ok(BoundaryCurve {
        id: CurveId::fresh(),
        spec: spec.clone(),
        theta,
        nodes,
        tangent,
        normal,
        curvature,
        speed,
        weights,
        d_theta: spectral_diff_matrix(n),
    })
}

/// Arc-length derivative df/ds at the nodes.
pub fn tangential_derivative(curve: &BoundaryCurve, f: &BoundaryField) -> Result<BoundaryField> {
    f.check_curve(curve)?;
    let df_dtheta = curve.d_theta() * f.as_dvector();
    let values = df_dtheta
        .iter()
        .zip(curve.speed())
        .map(|(&d, &sp)| d / sp)
        .collect();
    BoundaryField::new(curve, values)
}

/// Boundary Laplacian `Delta_T f = d^2 f / ds^2` at the nodes.
pub fn laplace_beltrami_boundary(curve: &BoundaryCurve, f: &BoundaryField) -> Result<BoundaryField> {
    let first = tangential_derivative(curve, f)?;
    tangential_derivative(curve, &first)
}

/// Tangent-vector field `-(d sigma / ds) * tangent` induced by a normal
/// velocity `sigma`: the first-order rotation of the outward normal under the
/// boundary motion. Returned as Cartesian component fields.
pub fn normal_variation(
    curve: &BoundaryCurve,
    sigma: &BoundaryField,
) -> Result<(BoundaryField, BoundaryField)> {
    let dsigma_ds = tangential_derivative(curve, sigma)?;
    let mut x = Vec::with_capacity(curve.n_nodes());
    let mut y = Vec::with_capacity(curve.n_nodes());
    for (&d, tan) in dsigma_ds.values().iter().zip(curve.tangent()) {
        x.push(-d * tan.x);
        y.push(-d * tan.y);
    }
    Ok((BoundaryField::new(curve, x)?, BoundaryField::new(curve, y)?))
}

/// Weighted inner product `integral f g dA` over the boundary.
pub fn l2_inner(curve: &BoundaryCurve, f: &BoundaryField, g: &BoundaryField) -> Result<f64> {
    f.check_curve(curve)?;
    g.check_curve(curve)?;
    Ok(f
        .values()
        .iter()
        .zip(g.values())
        .zip(curve.weights())
        .map(|((&a, &b), &w)| w * a * b)
        .sum())
}

/// Boundary L2 norm.
pub fn l2_norm(curve: &BoundaryCurve, f: &BoundaryField) -> Result<f64> {
    Ok(l2_inner(curve, f, f)?.sqrt())
}

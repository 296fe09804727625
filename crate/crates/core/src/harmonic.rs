//! Harmonic extension of boundary data by least-squares collocation.
//!
//! Interior solves use the real harmonic polynomial basis
//!
//! ```text
//! phi_0 = 1,   phi_{2k-1} = Re z^k,   phi_{2k} = Im z^k,   k = 1..=M,
//! ```
//!
//! writing `z = x + i y`. A Dirichlet datum sampled at the boundary nodes is
//! fit in the least-squares sense through a truncated SVD of the collocation
//! matrix, which keeps the solve stable when high basis orders make the
//! columns nearly dependent. For data whose angular spectrum is resolved by
//! the basis the fit converges spectrally, and values and gradients of the
//! resulting harmonic function are evaluated exactly from the coefficients
//! (gradients via the derivative of the associated complex polynomial, so no
//! finite differencing enters).

use nalgebra::{Complex, DMatrix, DVector, Point2, Vector2};

use crate::error::{Result, SteklovError};
use crate::geometry::{BoundaryCurve, BoundaryField};

/// Default relative cutoff for singular values in the collocation solve.
pub const DEFAULT_SVD_TOL: f64 = 1e-12;

/// Relative amplitude below which a Fourier mode of the datum is considered
/// inactive when deciding how many basis columns the data genuinely needs.
const ACTIVE_MODE_REL_TOL: f64 = 1e-6;

/// Harmonic polynomial with stored fit diagnostics.
#[derive(Debug, Clone)]
pub struct HarmonicFunction {
    coeff: DVector<f64>,
    basis_order: usize,
    fit_residual: f64,
    curve_id: crate::geometry::CurveId,
}

impl HarmonicFunction {
    /// Coefficients in the order `[1, Re z, Im z, Re z^2, Im z^2, ...]`.
    pub fn coeff(&self) -> &DVector<f64> {
        &self.coeff
    }

    pub fn basis_order(&self) -> usize {
        self.basis_order
    }

    /// Max-norm mismatch between the fitted trace and the Dirichlet datum.
    pub fn fit_residual(&self) -> f64 {
        self.fit_residual
    }

    pub fn curve_id(&self) -> crate::geometry::CurveId {
        self.curve_id
    }

    /// Complex coefficients `a_k` of `F(z) = a_0 + sum a_k z^k` with
    /// `u = Re F`.
    fn complex_coeff(&self) -> Vec<Complex<f64>> {
        let mut a = Vec::with_capacity(self.basis_order + 1);
        a.push(Complex::new(self.coeff[0], 0.0));
        for k in 1..=self.basis_order {
            a.push(Complex::new(self.coeff[2 * k - 1], -self.coeff[2 * k]));
        }
        a
    }

    /// Value at an arbitrary point of the plane.
    pub fn evaluate(&self, p: &Point2<f64>) -> f64 {
        let z = Complex::new(p.x, p.y);
        let a = self.complex_coeff();
        // Horner evaluation of F(z); u = Re F.
        let mut f = Complex::new(0.0, 0.0);
        for &ak in a.iter().rev() {
            f = f * z + ak;
        }
        f.re
    }

    /// Gradient at an arbitrary point, from the derivative `F'` of the
    /// associated complex polynomial: `grad u = (Re F', -Im F')`.
    pub fn gradient(&self, p: &Point2<f64>) -> Vector2<f64> {
        let z = Complex::new(p.x, p.y);
        let a = self.complex_coeff();
        let mut fp = Complex::new(0.0, 0.0);
        for k in (1..a.len()).rev() {
            fp = fp * z + a[k] * k as f64;
        }
        Vector2::new(fp.re, -fp.im)
    }
}

/// Values and gradients of a harmonic function at a batch of points.
pub fn evaluate_gradient(
    u: &HarmonicFunction,
    points: &[Point2<f64>],
) -> Vec<(f64, Vector2<f64>)> {
    points
        .iter()
        .map(|p| (u.evaluate(p), u.gradient(p)))
        .collect()
}

/// Basis values at one point: `[1, Re z, Im z, ..., Re z^M, Im z^M]`.
fn basis_values(p: &Point2<f64>, order: usize, row: &mut [f64]) {
    let z = Complex::new(p.x, p.y);
    row[0] = 1.0;
    let mut zk = Complex::new(1.0, 0.0);
    for k in 1..=order {
        zk *= z;
        row[2 * k - 1] = zk.re;
        row[2 * k] = zk.im;
    }
}

/// Basis gradients at one point. For `phi = Re z^k` the gradient is
/// `k (Re z^{k-1}, -Im z^{k-1})`; for `phi = Im z^k` it is
/// `k (Im z^{k-1}, Re z^{k-1})`.
fn basis_gradients(p: &Point2<f64>, order: usize, grads: &mut [Vector2<f64>]) {
    let z = Complex::new(p.x, p.y);
    grads[0] = Vector2::zeros();
    let mut zk1 = Complex::new(1.0, 0.0); // z^{k-1}
    for k in 1..=order {
        let kf = k as f64;
        grads[2 * k - 1] = Vector2::new(kf * zk1.re, -kf * zk1.im);
        grads[2 * k] = Vector2::new(kf * zk1.im, kf * zk1.re);
        zk1 *= z;
    }
}

/// Collocation matrix of basis values at the curve nodes, size `N x (2M+1)`.
pub fn boundary_value_matrix(curve: &BoundaryCurve, order: usize) -> DMatrix<f64> {
    let n = curve.n_nodes();
    let cols = 2 * order + 1;
    let mut b = DMatrix::zeros(n, cols);
    let mut row = vec![0.0; cols];
    for (j, p) in curve.nodes().iter().enumerate() {
        basis_values(p, order, &mut row);
        for (c, &v) in row.iter().enumerate() {
            b[(j, c)] = v;
        }
    }
    b
}

/// Matrix of outward normal derivatives of the basis at the curve nodes.
pub fn normal_derivative_matrix(curve: &BoundaryCurve, order: usize) -> DMatrix<f64> {
    let n = curve.n_nodes();
    let cols = 2 * order + 1;
    let mut g = DMatrix::zeros(n, cols);
    let mut grads = vec![Vector2::zeros(); cols];
    for (j, p) in curve.nodes().iter().enumerate() {
        basis_gradients(p, order, &mut grads);
        let nrm = curve.normal()[j];
        for (c, gr) in grads.iter().enumerate() {
            g[(j, c)] = nrm.dot(gr);
        }
    }
    g
}

fn check_order(curve: &BoundaryCurve, order: usize) -> Result<()> {
    let max = curve.n_nodes() / 4;
    if order > max {
        return Err(SteklovError::BasisOrderTooLarge {
            order,
            max,
            n: curve.n_nodes(),
        });
    }
    Ok(())
}

/// Solve the Dirichlet problem for nodal data `f` with the default SVD cutoff.
pub fn solve_dirichlet(
    curve: &BoundaryCurve,
    f: &BoundaryField,
    order: usize,
) -> Result<HarmonicFunction> {
    solve_dirichlet_with_tol(curve, f, order, DEFAULT_SVD_TOL)
}

/// Solve the Dirichlet problem with an explicit relative SVD cutoff.
///
/// The collocation system is overdetermined (`N >= 4 M` nodes against
/// `2M + 1` columns); singular values below `svd_tol * sigma_max` are
/// truncated. If the retained rank cannot represent the active Fourier
/// content of the datum — `2 K + 1` columns for content up to mode `K` — the
/// solve is reported as ill-conditioned rather than silently returning a poor
/// fit.
pub fn solve_dirichlet_with_tol(
    curve: &BoundaryCurve,
    f: &BoundaryField,
    order: usize,
    svd_tol: f64,
) -> Result<HarmonicFunction> {
    f.check_curve(curve)?;
    check_order(curve, order)?;

    let b = boundary_value_matrix(curve, order);
    let rhs = f.as_dvector();
    let svd = b.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let eps = svd_tol * sigma_max;
    let rank = svd.rank(eps);

    let active = f.to_series().active_mode(ACTIVE_MODE_REL_TOL);
    let needed = 2 * active + 1;
    if rank < needed {
        return Err(SteklovError::IllConditioned { rank, needed });
    }

    let coeff = svd
        .solve(&rhs, eps)
        .expect("SVD computed with both factor sets");
    let fit_residual = (&b * &coeff - &rhs).amax();

    Ok(HarmonicFunction {
        coeff,
        basis_order: order,
        fit_residual,
        curve_id: f.curve_id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_curve, CurveSpec};
    use approx::assert_abs_diff_eq;

    fn wavy_curve() -> BoundaryCurve {
        build_curve(&CurveSpec {
            base_radius: 1.0,
            cos: vec![0.0, 0.0, 0.1],
            sin: vec![],
            n_nodes: 128,
            r_min: 0.05,
        })
        .unwrap()
    }

    #[test]
    fn constant_datum_yields_constant_extension() {
        let curve = wavy_curve();
        let f = BoundaryField::constant(&curve, 3.0);
        let u = solve_dirichlet(&curve, &f, 12).unwrap();
        assert_abs_diff_eq!(u.coeff()[0], 3.0, epsilon = 1e-12);
        assert!(u.fit_residual() < 1e-12);
        let g = u.gradient(&Point2::new(0.2, -0.1));
        assert_abs_diff_eq!(g.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn recovers_harmonic_polynomial_from_its_trace() {
        // Sample u(x, y) = Re z^2 + 0.5 Im z^3 on the boundary and check that
        // the interior solve reproduces it away from the boundary.
        let curve = wavy_curve();
        let exact = |p: &Point2<f64>| {
            let z = Complex::new(p.x, p.y);
            (z * z).re + 0.5 * (z * z * z).im
        };
        let data: Vec<f64> = curve.nodes().iter().map(exact).collect();
        let f = BoundaryField::new(&curve, data).unwrap();
        let u = solve_dirichlet(&curve, &f, 16).unwrap();
        assert!(u.fit_residual() < 1e-10);
        for p in [
            Point2::new(0.0, 0.0),
            Point2::new(0.3, 0.2),
            Point2::new(-0.5, 0.1),
        ] {
            assert_abs_diff_eq!(u.evaluate(&p), exact(&p), epsilon = 1e-10);
        }
    }

    #[test]
    fn gradient_matches_closed_form_and_finite_differences() {
        let curve = wavy_curve();
        let f = BoundaryField::from_fn(&curve, |t| (3.0 * t).cos() + 0.2 * t.sin()).unwrap();
        let u = solve_dirichlet(&curve, &f, 16).unwrap();
        let p = Point2::new(0.25, -0.35);
        let g = u.gradient(&p);
        let h = 1e-5;
        let gx = (u.evaluate(&Point2::new(p.x + h, p.y)) - u.evaluate(&Point2::new(p.x - h, p.y)))
            / (2.0 * h);
        let gy = (u.evaluate(&Point2::new(p.x, p.y + h)) - u.evaluate(&Point2::new(p.x, p.y - h)))
            / (2.0 * h);
        assert_abs_diff_eq!(g.x, gx, epsilon = 1e-8);
        assert_abs_diff_eq!(g.y, gy, epsilon = 1e-8);
    }

    #[test]
    fn circle_modes_have_power_law_extensions() {
        // On the unit circle the datum cos(k theta) extends to Re z^k, whose
        // value at radius rho is rho^k cos(k theta).
        let curve = build_curve(&CurveSpec::circle(1.0, 64)).unwrap();
        let f = BoundaryField::from_fn(&curve, |t| (4.0 * t).cos()).unwrap();
        let u = solve_dirichlet(&curve, &f, 12).unwrap();
        let rho: f64 = 0.6;
        let t: f64 = 1.1;
        let p = Point2::new(rho * t.cos(), rho * t.sin());
        assert_abs_diff_eq!(
            u.evaluate(&p),
            rho.powi(4) * (4.0 * t).cos(),
            epsilon = 1e-11
        );
    }

    #[test]
    fn insufficient_basis_for_active_modes_is_ill_conditioned() {
        let curve = build_curve(&CurveSpec::circle(1.0, 64)).unwrap();
        let f = BoundaryField::from_fn(&curve, |t| (8.0 * t).cos()).unwrap();
        assert!(matches!(
            solve_dirichlet(&curve, &f, 4),
            Err(SteklovError::IllConditioned { .. })
        ));
    }

    #[test]
    fn order_above_node_budget_is_rejected() {
        let curve = build_curve(&CurveSpec::circle(1.0, 32)).unwrap();
        let f = BoundaryField::constant(&curve, 1.0);
        assert!(matches!(
            solve_dirichlet(&curve, &f, 9),
            Err(SteklovError::BasisOrderTooLarge { .. })
        ));
    }
}

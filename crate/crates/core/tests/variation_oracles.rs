//! Closed-form variation formulas checked against finite differences of
//! actually deformed curve families. The two routes share no ingredients:
//! the formulas differentiate at the base curve, while the oracles rebuild
//! geometry, re-solve, and difference across the family.

use approx::assert_abs_diff_eq;
use nalgebra::Point2;

use steklov_core::perturbation::SolverOptions;
use steklov_core::{
    assemble_dtn, build_curve, dt_dtn_general, dt_dtn_normal, dt_harmonic_extension,
    eigenvalue_derivative, fd_dtn_variation, fd_eigenvalue_derivative, fd_harmonic_variation,
    solve_dirichlet, steklov_spectrum, BoundaryCurve, BoundaryField, CurveSpec, PerturbationField,
    TrigSeries,
};

fn wavy_spec(n_nodes: usize) -> CurveSpec {
    CurveSpec {
        base_radius: 1.0,
        cos: vec![0.0, 0.0, 0.1],
        sin: vec![],
        n_nodes,
        r_min: 0.05,
    }
}

fn sample(curve: &BoundaryCurve, series: &TrigSeries) -> BoundaryField {
    BoundaryField::from_fn(curve, |th| series.eval(th)).expect("node count matches")
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Test domains with basis orders deep enough that derived boundary data
/// (gradient traces, operator applications) stays clean: the wavy curve
/// needs a much larger order than the disk for that.
fn domains() -> Vec<(&'static str, CurveSpec, usize)> {
    vec![
        ("disk", CurveSpec::circle(1.0, 256), 24),
        ("wavy", wavy_spec(256), 48),
    ]
}

#[test]
fn dtn_variation_matches_finite_differences_for_mixed_velocities() {
    let f = TrigSeries {
        mean: 0.0,
        cos: vec![1.0],
        sin: vec![0.0, 0.5],
    };
    let sigma = TrigSeries {
        mean: 0.3,
        cos: vec![1.0],
        sin: vec![],
    };
    let tau = TrigSeries {
        mean: 0.0,
        cos: vec![],
        sin: vec![0.0, 0.5],
    };
    for (name, spec, order) in domains() {
        let opts = SolverOptions {
            basis_order: order,
            ..SolverOptions::default()
        };
        let curve = build_curve(&spec).unwrap();
        let dtn = assemble_dtn(&curve, order).unwrap();
        let hdot = PerturbationField::general(
            &curve,
            sample(&curve, &sigma),
            sample(&curve, &tau),
        )
        .unwrap();
        let formula = dt_dtn_general(&curve, &dtn, &sample(&curve, &f), &hdot, opts.svd_tol)
            .unwrap();
        let fd = fd_dtn_variation(&spec, &opts, &f, &sigma, &tau, 1e-4).unwrap();
        let scale = sup(&fd);
        let diff: Vec<f64> = formula
            .values()
            .iter()
            .zip(&fd)
            .map(|(&a, &b)| a - b)
            .collect();
        let rel = sup(&diff) / scale;
        assert!(rel < 1e-4, "{name}: sup-relative gap {rel:.3e} at scale {scale:.3e}");
    }
}

#[test]
fn general_variation_reduces_to_normal_form_without_tangential_part() {
    let f = TrigSeries {
        mean: 0.2,
        cos: vec![1.0, -0.3],
        sin: vec![0.4],
    };
    let sigma = TrigSeries {
        mean: 0.0,
        cos: vec![0.0, 1.0],
        sin: vec![0.5],
    };
    for (name, spec, order) in domains() {
        let curve = build_curve(&spec).unwrap();
        let dtn = assemble_dtn(&curve, order).unwrap();
        let fb = sample(&curve, &f);
        let sb = sample(&curve, &sigma);
        let normal = dt_dtn_normal(&curve, &dtn, &fb, &sb, None).unwrap();
        let hdot = PerturbationField::general(
            &curve,
            sb.clone(),
            BoundaryField::constant(&curve, 0.0),
        )
        .unwrap();
        let general = dt_dtn_general(&curve, &dtn, &fb, &hdot, 1e-12).unwrap();
        let gap = sup(
            &general
                .values()
                .iter()
                .zip(normal.field.values())
                .map(|(&a, &b)| a - b)
                .collect::<Vec<_>>(),
        );
        assert!(gap < 1e-10, "{name}: routes disagree by {gap:.3e}");
    }
}

#[test]
fn harmonic_extension_variation_matches_finite_differences() {
    let points = [
        Point2::new(0.3, 0.1),
        Point2::new(-0.2, 0.4),
        Point2::new(0.1, -0.5),
        Point2::new(-0.4, -0.3),
        Point2::new(0.05, 0.2),
    ];
    let f = TrigSeries {
        mean: 0.0,
        cos: vec![1.0],
        sin: vec![],
    };
    let sigma = TrigSeries {
        mean: 0.0,
        cos: vec![0.0, 1.0],
        sin: vec![],
    };
    let tau = TrigSeries {
        mean: 0.0,
        cos: vec![],
        sin: vec![0.4],
    };
    for (name, spec, order) in domains() {
        let opts = SolverOptions {
            basis_order: order,
            ..SolverOptions::default()
        };
        let curve = build_curve(&spec).unwrap();
        let u = solve_dirichlet(&curve, &sample(&curve, &f), order).unwrap();
        let hdot = PerturbationField::general(
            &curve,
            sample(&curve, &sigma),
            sample(&curve, &tau),
        )
        .unwrap();
        let du = dt_harmonic_extension(&curve, &u, &hdot, opts.svd_tol).unwrap();
        let formula: Vec<f64> = points.iter().map(|p| du.evaluate(p)).collect();

        let t = 1e-4;
        let coarse = fd_harmonic_variation(&spec, &opts, &f, &sigma, &tau, &points, t).unwrap();
        let fine =
            fd_harmonic_variation(&spec, &opts, &f, &sigma, &tau, &points, t / 2.0).unwrap();
        let richardson: Vec<f64> = coarse
            .iter()
            .zip(&fine)
            .map(|(&a, &b)| (4.0 * b - a) / 3.0)
            .collect();
        let scale = sup(&richardson);
        let rel = formula
            .iter()
            .zip(&richardson)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0_f64, f64::max)
            / scale;
        assert!(rel < 1e-5, "{name}: relative gap {rel:.3e} at scale {scale:.3e}");
    }
}

#[test]
fn eigenvalue_hint_reports_pairing_quality() {
    // On the disk, cos(theta) is an exact eigenfield with eigenvalue 1, so
    // replacing the operator application by the eigenvalue must not move
    // the variation; a deliberately wrong hint must.
    let curve = build_curve(&CurveSpec::circle(1.0, 256)).unwrap();
    let dtn = assemble_dtn(&curve, 24).unwrap();
    let f = BoundaryField::from_fn(&curve, |th| th.cos() / std::f64::consts::PI.sqrt()).unwrap();
    let sigma = BoundaryField::from_fn(&curve, |th| (2.0 * th).cos()).unwrap();

    let plain = dt_dtn_normal(&curve, &dtn, &f, &sigma, None).unwrap();
    assert!(plain.hint_deviation.is_none());

    let hinted = dt_dtn_normal(&curve, &dtn, &f, &sigma, Some(1.0)).unwrap();
    assert!(hinted.hint_deviation.unwrap() < 1e-10);

    let wrong = dt_dtn_normal(&curve, &dtn, &f, &sigma, Some(2.0)).unwrap();
    assert!(wrong.hint_deviation.unwrap() > 0.5);
}

#[test]
fn eigenvalue_derivative_routes_agree_on_eigenpairs() {
    let curve = build_curve(&CurveSpec::circle(1.0, 256)).unwrap();
    let dtn = assemble_dtn(&curve, 24).unwrap();
    let spectrum = steklov_spectrum(&curve, &dtn, 8, 1e-5).unwrap();
    let sigma = BoundaryField::from_fn(&curve, |th| 1.0 + 0.3 * (4.0 * th).cos()).unwrap();
    for i in [1usize, 3, 5] {
        let f = &spectrum.eigenfields()[i];
        let lambda = spectrum.eigenvalues()[i];
        let d = eigenvalue_derivative(&curve, &dtn, f, lambda, &sigma).unwrap();
        // Two independent evaluations of the same rate: the boundary-density
        // form and the operator-variation pairing.
        assert_abs_diff_eq!(d.hadamard, d.dtn_pairing, epsilon = 1e-8 * (1.0 + d.hadamard.abs()));
        assert!(
            d.identity_gap < 1e-8 * (1.0 + d.hadamard.abs()),
            "integral identity out by {:.3e}",
            d.identity_gap
        );
    }
}

#[test]
fn eigenvalue_rate_differences_shrink_with_the_step() {
    let spec = CurveSpec::circle(1.0, 256);
    let opts = SolverOptions {
        basis_order: 24,
        k_max: 8,
        ..SolverOptions::default()
    };
    let sigma = TrigSeries {
        mean: 0.0,
        cos: vec![0.0, 1.0],
        sin: vec![],
    };
    let report = fd_eigenvalue_derivative(&spec, &opts, 1, &sigma, 1e-3).unwrap();
    assert_eq!(report.multiplicity, 2);
    assert!(report.rel_error < 1e-5, "coarse step off by {:.3e}", report.rel_error);
    // Central differences are second order: halving the step should cut
    // the deviation from the closed form by about four.
    assert!(
        report.rel_error_half_step < 0.5 * report.rel_error,
        "halving the step went from {:.3e} to {:.3e}",
        report.rel_error,
        report.rel_error_half_step
    );
}

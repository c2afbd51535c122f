//! End-to-end checks of module behaviour against independent oracles.

use std::f64::consts::PI;

use blenderlab::blender::{covering_criterion, reduce_central_dimension};
use blenderlab::cones::{check_cone_invariance, uniform_rate_check, ConeField, LinearMap};
use blenderlab::geometry::BoxN;
use blenderlab::local_model::strip::ThetaPlanes;
use blenderlab::local_model::{LocalTangencyModel, ModelError};
use blenderlab::presets;
use blenderlab::spectra::{rotation_eigenvalues, saddle_node_angle};
use blenderlab::unfolding::{
    apply_params, cycle_witness, find_saddles_default, UnfoldingError, UnfoldingParams, WitnessOptions,
};
use nalgebra::{DMatrix, DVector, Matrix2};

fn eig2(m: [[f64; 2]; 2]) -> [(f64, f64); 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [(0.5 * (tr + s), 0.0), (0.5 * (tr - s), 0.0)]
    } else {
        let s = (-disc).sqrt();
        [(0.5 * tr, 0.5 * s), (0.5 * tr, -0.5 * s)]
    }
}

#[test]
fn rotation_beyond_the_saddle_node_gives_unit_circle_pair() {
    let a = Matrix2::new(2.0, 0.0, 0.0, 0.5);
    let phi: f64 = 0.7;
    let (c, s) = (phi.cos(), phi.sin());
    let oracle = eig2([[2.0 * c, -0.5 * s], [2.0 * s, 0.5 * c]]);
    let (z1, z2) = rotation_eigenvalues(&a, phi);
    assert!(oracle[0].1 != 0.0);
    for (z, o) in [(z1, oracle[0]), (z2, oracle[1])] {
        assert!((z.norm() - 1.0).abs() < 1e-12);
        assert!((z.re - o.0).abs() < 1e-12 && (z.im.abs() - o.1.abs()).abs() < 1e-12);
    }
}

#[test]
fn saddle_node_angle_closed_form() {
    for (tau, rho) in [(2.0f64, 0.5f64), (9.0, 1.0), (3.0, 0.2)] {
        let phi = saddle_node_angle(&Matrix2::new(tau, 0.0, 0.0, rho)).unwrap();
        let oracle = (2.0 * (tau * rho).sqrt() / (tau + rho)).acos();
        assert!((phi - oracle).abs() < 1e-10, "{tau} {rho}: {phi} vs {oracle}");
    }
    let phi = saddle_node_angle(&Matrix2::new(9.0, 0.0, 0.0, 1.0)).unwrap();
    assert!((phi - 0.6f64.acos()).abs() < 1e-10);
}

#[test]
fn stable_rotation_after_full_turn() {
    let k = 8;
    let base = presets::de2_model();
    let alpha = 2.0 * PI / k as f64 - presets::DE2_STABLE_ANGLE;
    let fam = apply_params(&base, &UnfoldingParams { alpha, ..Default::default() }).unwrap();
    let p = DVector::from_column_slice(&[0.0, 0.3, 0.0, 0.0]);
    let q = fam.t0_raw(&p, k);
    // total rotation k (theta + alpha) = 2 pi
    assert!((q[1] - 0.3 * 0.8f64.powi(8)).abs() < 1e-15);
    assert!(q[2].abs() < 1e-15);
}

#[test]
fn tangency_point_returns_to_y_plus() {
    let m = presets::de1_model();
    for k in 5..10 {
        let p = DVector::from_column_slice(&[0.0, 0.0, 3f64.powi(-(k as i32))]);
        let q = m.return_map_raw(k, &p).unwrap();
        assert!((q - &m.y_plus).amax() < 1e-12);
    }
}

#[test]
fn wide_theta_levels_violate_the_quantifier() {
    let m = presets::de1_model();
    let rho = 0.45;
    let delta = rho / (5.0 * m.calibration.k);
    let theta = ThetaPlanes {
        pairs: vec![[1.0 - 0.5 * delta, 1.0 + 0.5 * delta]],
        rho,
    };
    assert!(matches!(
        m.resized_strip(0, 6, &theta),
        Err(ModelError::QuantifierViolation(x)) if (x - 2.0).abs() < 1e-12
    ));
}

#[test]
fn large_unstable_loop_crosses_at_once() {
    let m = presets::de1_model();
    let k = 6;
    let params = UnfoldingParams {
        t: presets::de1_window_center(k),
        ..Default::default()
    };
    let saddle = find_saddles_default(&m, &params, k)
        .unwrap()
        .saddles
        .into_iter()
        .find(|s| s.u_index == 2)
        .unwrap();
    let opts = WitnessOptions {
        radius_fraction: 0.5,
        ..Default::default()
    };
    let w = cycle_witness(&m, &params, k, &saddle, &presets::de1_theta(), 0, 50, &opts).unwrap();
    assert!(w.m0 <= 3, "m0 = {}", w.m0);
}

#[test]
fn index_one_saddle_has_no_witness() {
    let m = presets::de1_model();
    let k = 6;
    let params = UnfoldingParams {
        t: presets::de1_window(k)[0] - 1e-3,
        ..Default::default()
    };
    let s = find_saddles_default(&m, &params, k).unwrap();
    let saddle = s.saddles.iter().find(|s| s.u_index == 1).unwrap();
    assert_eq!(
        cycle_witness(&m, &params, k, saddle, &presets::de1_theta(), 0, 50, &WitnessOptions::default()),
        Err(UnfoldingError::IndexTooLow(1))
    );
}

#[test]
fn reduced_blender_covers_along_the_kept_coordinate() {
    let b = presets::two_central_blender([0.6, 0.8]);
    let r = reduce_central_dimension(&b, 1).unwrap();
    let mut images: Vec<(f64, f64)> = r
        .to_spec()
        .branches
        .iter()
        .map(|br| (br.offset[r.d_ss], br.linear.central[0][0] + br.offset[r.d_ss]))
        .collect();
    images.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    images.dedup();
    assert_eq!(images.len(), 2);
    let overlap = images[0].1 - images[1].0;
    let cov = covering_criterion(&r);
    assert!(cov.ok);
    assert!((cov.margin - overlap).abs() < 1e-12 && (overlap - 0.6).abs() < 1e-12);
}

#[test]
fn cone_margin_is_the_ray_angle_difference() {
    let cone = ConeField {
        e: vec![0],
        f: vec![1],
        half_angle: 1f64.atan(),
    };
    let dom = BoxN::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
    let l = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 2.0]);
    let r = check_cone_invariance(&LinearMap(l), &cone, &dom, 5).unwrap();
    assert!((r.worst_margin - (1f64.atan() - 0.25f64.atan())).abs() < 1e-12);
    let id = check_cone_invariance(&LinearMap(DMatrix::identity(2, 2)), &cone, &dom, 5).unwrap();
    assert_eq!(id.worst_margin, 0.0);
    assert!(!id.ok);
}

#[test]
fn jordan_block_rate() {
    let j = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
    let r = uniform_rate_check(&j, 200).unwrap();
    assert!((r.kappa - 0.5).abs() < 1e-9);
    let mut p = DMatrix::identity(2, 2);
    let mut oracle: f64 = 1.0;
    for n in 1..=200 {
        p = &p * &j;
        let norm = p.clone().svd(false, false).singular_values[0];
        oracle = oracle.max(norm / r.kappa.powi(n));
    }
    assert!(r.c > 1.0 && r.c.is_finite());
    assert!((r.c - oracle).abs() < 1e-9 * oracle, "{} vs {oracle}", r.c);
}

#[test]
fn model_spec_round_trips_through_json() {
    for spec in [presets::de1_spec(), presets::de2_spec(), presets::volume_spec(0.9, 2.0)] {
        let text = serde_json::to_string(&spec).unwrap();
        let back = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        LocalTangencyModel::from_spec(&back).unwrap();
    }
}

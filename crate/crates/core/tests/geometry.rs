mod common;

use std::f64::consts::PI;

use cmc_rigidity::geometry::*;
use cmc_rigidity::spectral::{AmbientField, Grid, ScalarField};
use cmc_rigidity::vec3::{cross, dot, norm, scale, sub, V3};
use cmc_rigidity::Error;
use common::*;
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn graph(g: &Grid, rho: impl Fn(V3) -> f64) -> AmbientField {
    AmbientField::from_fn(g, |p| scale(p, rho(p)))
}

fn y20(p: V3) -> f64 {
    (5.0 / (4.0 * PI)).sqrt() * 0.5 * (3.0 * p[2] * p[2] - 1.0)
}

fn y31(p: V3) -> f64 {
    (21.0 / (32.0 * PI)).sqrt() * (5.0 * p[2] * p[2] - 1.0) * p[0]
}

fn y30(p: V3) -> f64 {
    (7.0 / (4.0 * PI)).sqrt() * 0.5 * (5.0 * p[2].powi(3) - 3.0 * p[2])
}

fn unit(theta: f64, phi: f64) -> V3 {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Mean curvature of the radial graph `ρ(p) p` by central differences in the
/// `(θ, φ)` chart, with the outward normal.
fn fd_mean_curvature(rho: &impl Fn(V3) -> f64, theta: f64, phi: f64) -> f64 {
    let e = 1e-4;
    let f = |t: f64, p: f64| {
        let u = unit(t, p);
        scale(u, rho(u))
    };
    let c = f(theta, phi);
    let comb = |a: V3, b: V3, s: f64| [(a[0] - b[0]) * s, (a[1] - b[1]) * s, (a[2] - b[2]) * s];
    let ft = comb(f(theta + e, phi), f(theta - e, phi), 0.5 / e);
    let fp = comb(f(theta, phi + e), f(theta, phi - e), 0.5 / e);
    let second = |a: V3, b: V3| {
        [
            (a[0] - 2.0 * c[0] + b[0]) / (e * e),
            (a[1] - 2.0 * c[1] + b[1]) / (e * e),
            (a[2] - 2.0 * c[2] + b[2]) / (e * e),
        ]
    };
    let ftt = second(f(theta + e, phi), f(theta - e, phi));
    let fpp = second(f(theta, phi + e), f(theta, phi - e));
    let ftp = comb(
        sub(f(theta + e, phi + e), f(theta + e, phi - e)),
        sub(f(theta - e, phi + e), f(theta - e, phi - e)),
        0.25 / (e * e),
    );
    let n = cross(ft, fp);
    let n = scale(n, 1.0 / norm(n));
    let (e_, f_, g_) = (dot(ft, ft), dot(ft, fp), dot(fp, fp));
    let (l, m, nn) = (dot(ftt, n), dot(ftp, n), dot(fpp, n));
    -(g_ * l - 2.0 * f_ * m + e_ * nn) / (e_ * g_ - f_ * f_)
}

fn max_fd_error(l: usize, rho: impl Fn(V3) -> f64) -> f64 {
    let g = grid(l);
    let imm = Immersion::new(&graph(&g, &rho)).unwrap();
    let h = imm.mean_curvature().values();
    (0..g.len())
        .filter(|&i| g.sin_theta(i) > 0.3)
        .map(|i| (h[i] - fd_mean_curvature(&rho, g.theta(i), g.phi(i))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn round_sphere() {
    let g = grid(16);
    let imm = make_immersion(&AmbientField::identity(&g)).unwrap();
    assert!(imm.mean_curvature().values().iter().all(|h| (h - 2.0).abs() < 1e-8));
    assert!(imm.conformal_factor().max_abs() < 1e-9);
    assert!(imm.conformal_defect() < 1e-9);
    assert!(imm.normal().norm_sq().values().iter().all(|n| (n - 1.0).abs() < 1e-10));
    let s = geometry_summary(&imm);
    assert!(rel(s.area, 4.0 * PI) < 1e-9);
    assert!(rel(s.volume, 4.0 * PI / 3.0) < 1e-9);
    assert!(rel(s.willmore, 16.0 * PI) < 1e-9);
    assert!(rel(s.h_bar, 2.0) < 1e-9);
    assert!(s.cmc_defect_l2 < 1e-9);
}

#[test]
fn dilation() {
    let g = grid(12);
    let eps = 0.1;
    let imm = Immersion::new(&AmbientField::identity(&g).scale(1.0 + eps)).unwrap();
    assert!(imm.mean_curvature().values().iter().all(|h| (h - 2.0 / 1.1).abs() < 1e-7));
    assert!(imm.conformal_factor().values().iter().all(|u| (u - 1.1_f64.ln()).abs() < 1e-8));
    let s = geometry_summary(&imm);
    assert!(rel(s.area, 4.0 * PI * 1.21) < 1e-9);
    assert!(rel(s.volume, 4.0 * PI / 3.0 * 1.331) < 1e-9);
    assert!(rel(s.willmore, 16.0 * PI) < 1e-9);

    let back = normalize_volume(&imm).unwrap();
    let err = back.f().sub(&AmbientField::identity(&g)).max_norm_at_nodes();
    assert!(err < 1e-12);
}

#[test]
fn linearized_graph_curvature() {
    let g = grid(16);
    let t = 0.01;
    let imm = Immersion::new(&graph(&g, |p| 1.0 + t * y20(p))).unwrap();
    let h = imm.mean_curvature().values();
    for i in 0..g.len() {
        let lin = 2.0 + t * 4.0 * y20(g.points()[i]);
        assert!((h[i] - lin).abs() < 5e-4, "node {i}: {} vs {lin}", h[i]);
    }
    let s = geometry_summary(&imm);
    assert!((s.cmc_defect_l2 - 0.04).abs() < 0.004);
    assert!((s.willmore - 16.0 * PI).abs() < 1e-2);
}

#[test]
fn curvature_matches_finite_difference_oracle() {
    let err = max_fd_error(16, |p| 1.0 + 0.05 * y20(p) + 0.03 * y31(p));
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn curvature_converges_for_non_band_limited_graph() {
    let rho = |p: V3| (0.2 * p[0] * p[2] + 0.1 * p[1]).exp();
    let coarse = max_fd_error(8, rho);
    let fine = max_fd_error(16, rho);
    assert!(fine < coarse / 4.0, "{coarse:e} -> {fine:e}");
}

#[test]
fn normalize_volume_of_graph() {
    let g = grid(16);
    let imm = Immersion::new(&graph(&g, |p| 1.0 + 0.05 * y30(p))).unwrap();
    let n = normalize_volume(&imm).unwrap();
    assert!(rel(n.volume(), ROUND_VOLUME) < 1e-10);
    let round = Immersion::new(&AmbientField::identity(&g)).unwrap();
    let same = normalize_volume(&round).unwrap();
    assert!(same.f().sub(round.f()).max_norm_at_nodes() < 1e-14);
}

#[test]
fn minkowski_and_splitting() {
    let g = grid(16);
    let round = Immersion::new(&AmbientField::identity(&g)).unwrap();
    assert!(minkowski_residual(&round).abs() < 1e-8);
    let dil = Immersion::new(&AmbientField::identity(&g).scale(1.3)).unwrap();
    assert!(minkowski_residual(&dil).abs() < 1e-8);
    let mix = Immersion::new(&graph(&g, |p| 1.0 + 0.05 * (y20(p) + 0.5 * y31(p)))).unwrap();
    assert!(minkowski_residual(&mix).abs() < 1e-5 * mix.area());

    for imm in [&round, &mix] {
        let w = geometry_summary(imm).willmore;
        assert!(h2_splitting_residual(imm).abs() < 1e-10 * w);
        let shifted = imm.with_corrupted_mean_curvature(0.2);
        let w = geometry_summary(&shifted).willmore;
        assert!(h2_splitting_residual(&shifted).abs() < 1e-10 * w);
    }
}

#[test]
fn willmore_threshold() {
    let g = grid(16);
    let round = Immersion::new(&AmbientField::identity(&g)).unwrap();
    let w = willmore_threshold_check(&round, 0.25).unwrap();
    assert!(w.passes);
    assert!(rel(w.threshold, 24.0 * PI) < 1e-15);
    assert!(rel(w.single_bubble_product, 16.0 * PI) < 1e-9);
    assert!(willmore_threshold_check(&round, 0.4999).unwrap().passes);
    assert!(matches!(willmore_threshold_check(&round, 0.5), Err(Error::Configuration(_))));
    assert!(matches!(willmore_threshold_check(&round, 0.0), Err(Error::Configuration(_))));

    let graph_imm = Immersion::new(&graph(&g, |p| 1.0 + 0.02 * y20(p))).unwrap();
    let w = willmore_threshold_check(&graph_imm, 0.25).unwrap();
    assert!(w.passes);
    assert!((w.single_bubble_product - 16.0 * PI).abs() < 1e-2);
}

#[test]
fn flattened_map_is_degenerate() {
    let g = grid(8);
    let flat = AmbientField::from_fn(&g, |p| [p[0], p[1], 0.0]);
    assert!(matches!(Immersion::new(&flat), Err(Error::ImmersionDegenerate { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn similarity_invariance(
        seed in any::<u64>(),
        lambda in prop::sample::select(vec![0.5, 2.0]),
        a in prop::array::uniform3(-1.0..1.0f64),
        axis in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let g = grid(12);
        let c = random_coeffs(&mut rng(seed), 12, 6, 2.0);
        let bump = ScalarField::from_coeffs(&g, &c).unwrap();
        let amp = 0.05 / bump.max_abs().max(1e-12);
        let rho = bump.map(|v| 1.0 + amp * v);
        let f = AmbientField::from_vecs(&g, (0..g.len()).map(|i| scale(g.points()[i], rho.values()[i])).collect());
        let base = Immersion::new(&f).unwrap();
        let s0 = geometry_summary(&base);

        let scaled = geometry_summary(&Immersion::new(&f.scale(lambda)).unwrap());
        prop_assert!(rel(scaled.willmore, s0.willmore) < 1e-9);

        let moved = Immersion::new(&f.add(&AmbientField::constant(&g, a))).unwrap();
        let s1 = geometry_summary(&moved);
        prop_assert!(rel(s1.area, s0.area) < 1e-9);
        prop_assert!(rel(s1.willmore, s0.willmore) < 1e-9);
        prop_assert!(rel(s1.volume, s0.volume) < 1e-9);
        prop_assert!(moved.mean_curvature().sub(base.mean_curvature()).max_abs() < 1e-9);

        let r = Rotation3::new(Vector3::from(axis)).into_inner();
        let rotated = f.map_vecs(|_, v| {
            let w = r * Vector3::from(v);
            [w[0], w[1], w[2]]
        });
        let turned = Immersion::new(&rotated).unwrap();
        prop_assert!(turned.mean_curvature().sub(base.mean_curvature()).max_abs() < 1e-8);
    }
}

mod common;

use cmc_rigidity::spectral::{AmbientField, ScalarField};
use cmc_rigidity::tangent::{
    ckf_basis, cr_adjoint, cr_apply, cr_solve, cr_solve_detailed, decompose, dh_norm_sq,
    kernel_dimension, kernel_projection, q_form, TracelessTensorField,
};
use cmc_rigidity::vec3::{add, cross, dot, normalize, scale, sub, V3};
use cmc_rigidity::Error;
use common::*;

fn polynomial_tangent(x: V3) -> V3 {
    let a = [
        x[0] * x[1] + 0.3 * x[2],
        x[2] * x[2] - 0.2 * x[0],
        0.5 * x[0] * x[2] + x[1],
    ];
    sub(a, scale(x, dot(a, x)))
}

fn chart(theta: f64, phi: f64) -> V3 {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// `(Dv)` at `(θ, φ)` from the metric pulled back by `x ↦ (x + s v)/|x + s v|`,
/// differenced in the chart and in `s`.
fn lie_derivative_oracle(v: impl Fn(V3) -> V3, theta: f64, phi: f64) -> (f64, f64) {
    let eps = 1e-3;
    let ds = 1e-4;
    let flow = |s: f64, t: f64, p: f64| {
        let x = chart(t, p);
        normalize(add(x, scale(v(x), s)))
    };
    let d4 = |g: &dyn Fn(f64) -> V3| -> V3 {
        let (a, b, c, d) = (g(-2.0 * eps), g(-eps), g(eps), g(2.0 * eps));
        [0, 1, 2].map(|k| (a[k] - 8.0 * b[k] + 8.0 * c[k] - d[k]) / (12.0 * eps))
    };
    let metric = |s: f64| {
        let ft = d4(&|e| flow(s, theta + e, phi));
        let fp = scale(d4(&|e| flow(s, theta, phi + e)), 1.0 / theta.sin());
        [dot(ft, ft), dot(ft, fp), dot(fp, fp)]
    };
    let (gp, gm) = (metric(ds), metric(-ds));
    let l: Vec<f64> = (0..3).map(|k| (gp[k] - gm[k]) / (2.0 * ds)).collect();
    (0.5 * (l[0] - l[2]), l[1])
}

#[test]
fn decomposition_reconstructs_and_is_tangent() {
    let g = grid(12);
    let mut r = rng(1);
    let h = random_ambient(&mut r, &g, 8);
    let d = decompose(&h);
    let n = AmbientField::identity(&g);
    let rebuilt = d.v.add(&n.scale_by(&d.z));
    assert!(rebuilt.sub(&h).l2_norm() <= 1e-12);
    assert!(d.v.dot(&n).max_abs() <= 1e-10);
}

#[test]
fn decomposition_of_constant_vector() {
    let g = grid(10);
    let h = AmbientField::constant(&g, [0.0, 0.0, 1.0]);
    let d = decompose(&h);
    for i in (0..g.len()).step_by(7) {
        let p = g.points()[i];
        assert!((d.z.values()[i] - p[2]).abs() < 1e-14);
        let expect = sub([0.0, 0.0, 1.0], scale(p, p[2]));
        assert!(sub(d.v.at(i), expect).iter().all(|c| c.abs() < 1e-14));
    }
}

#[test]
fn decomposition_of_normal_and_tangent_fields() {
    let g = grid(10);
    let y = ScalarField::harmonic(&g, 2, 0).unwrap().scale(0.1);
    let d = decompose(&AmbientField::identity(&g).scale_by(&y));
    assert!(d.v.max_norm_at_nodes() < 1e-14);
    assert!(d.z.sub(&y).max_abs() < 1e-14);
    let gx = ScalarField::from_fn(&g, |p| p[0]).surface_gradient();
    let d = decompose(&gx);
    assert!(d.z.max_abs() < 1e-14);
    assert!(d.v.sub(&gx).max_norm_at_nodes() < 1e-14);
}

#[test]
fn conformal_killing_basis_values() {
    let g = grid(8);
    let basis = ckf_basis(&g);
    let n = AmbientField::identity(&g);
    for b in &basis {
        assert!(b.dot(&n).max_abs() < 1e-12);
    }
    // A₃x at e₁ is e₂, and ∇x³ at e₁ is e₃
    assert_eq!(cross([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]), [0.0, 1.0, 0.0]);
    let pt = [[1.0, 0.0, 0.0]];
    let a3 = basis[2].eval_many(&pt)[0];
    let g3 = basis[5].eval_many(&pt)[0];
    assert!(sub(a3, [0.0, 1.0, 0.0]).iter().all(|c| c.abs() < 1e-12));
    assert!(sub(g3, [0.0, 0.0, 1.0]).iter().all(|c| c.abs() < 1e-12));
}

#[test]
fn cr_operator_annihilates_conformal_killing_fields() {
    let g = grid(16);
    for b in ckf_basis(&g) {
        assert!(cr_apply(&b).unwrap().l2_norm() <= 1e-10);
    }
}

#[test]
fn cr_operator_on_gradient_of_y20() {
    let g = grid(16);
    let v = ScalarField::harmonic(&g, 2, 0).unwrap().surface_gradient();
    let d = cr_apply(&v).unwrap();
    // 2 λ (λ − 2) with λ = 6
    assert!((d.l2_norm().powi(2) - 48.0).abs() < 1e-9);
    for &(t, p) in &[(0.7, 0.3), (1.9, 4.0)] {
        let y20 = |x: V3| {
            let k = (5.0 / (16.0 * std::f64::consts::PI)).sqrt();
            let grad = scale([0.0, 0.0, 1.0], 6.0 * k * x[2]);
            sub(grad, scale(x, dot(grad, x)))
        };
        let (o11, o12) = lie_derivative_oracle(y20, t, p);
        let x = chart(t, p);
        let (e1, e2) = (
            [t.cos() * p.cos(), t.cos() * p.sin(), -t.sin()],
            [-p.sin(), p.cos(), 0.0],
        );
        // closed form: Hessian of Y20 is 6k((e_i·e₃)(e_j·e₃) − (x³)² δ_ij)
        let k = (5.0 / (16.0 * std::f64::consts::PI)).sqrt();
        let h = |a: V3, b: V3| 6.0 * k * (a[2] * b[2]) - 6.0 * k * x[2] * x[2] * dot(a, b);
        assert!((o11 - (h(e1, e1) - h(e2, e2))).abs() < 1e-6);
        assert!((o12 - 2.0 * h(e1, e2)).abs() < 1e-6);
    }
}

#[test]
fn cr_apply_matches_lie_derivative_oracle() {
    let g = grid(16);
    let v = AmbientField::from_fn(&g, polynomial_tangent);
    let d = cr_apply(&v).unwrap();
    for i in (0..g.len()).step_by(37) {
        let (o11, o12) = lie_derivative_oracle(polynomial_tangent, g.theta(i), g.phi(i));
        assert!((d.t11[i] - o11).abs() < 1e-6, "node {i}: {} vs {o11}", d.t11[i]);
        assert!((d.t12[i] - o12).abs() < 1e-6, "node {i}: {} vs {o12}", d.t12[i]);
    }
}

#[test]
fn cr_apply_rejects_normal_fields() {
    let g = grid(8);
    let n = AmbientField::identity(&g);
    assert!(matches!(cr_apply(&n), Err(Error::Domain(_))));
}

#[test]
fn cr_apply_is_linear() {
    let g = grid(12);
    let mut r = rng(3);
    let a = random_tangent(&mut r, &g, 8);
    let b = random_tangent(&mut r, &g, 8);
    let lhs = cr_apply(&a.scale(2.0).add(&b.scale(-0.7))).unwrap();
    let rhs = cr_apply(&a).unwrap().scale(2.0).axpy(-0.7, &cr_apply(&b).unwrap());
    assert!(lhs.sub(&rhs).l2_norm() <= 1e-10 * (1.0 + rhs.l2_norm()));
}

#[test]
fn adjoint_consistency() {
    let g = grid(16);
    let mut r = rng(4);
    for _ in 0..5 {
        let w = random_tangent(&mut r, &g, 6);
        let m = random_ambient(&mut r, &g, 4);
        let m2 = random_ambient(&mut r, &g, 4);
        let t = TracelessTensorField::from_ambient(&g, |i| {
            let (a, b) = (m.at(i), m2.at(i));
            [0, 1, 2].map(|r| [0, 1, 2].map(|c| a[r] * b[c] + a[c] * b[r]))
        });
        let lhs = cr_apply(&w).unwrap().inner(&t);
        let rhs = w.inner(&cr_adjoint(&t));
        assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn kernel_is_exactly_six_dimensional_on_low_degree_fields() {
    let g = grid(12);
    let mut fields = Vec::new();
    for l in 1..=3usize {
        for m in -(l as i64)..=l as i64 {
            let y = ScalarField::harmonic(&g, l, m).unwrap();
            let grad = y.surface_gradient();
            let n = AmbientField::identity(&g);
            fields.push(n.cross(&grad));
            fields.push(grad);
        }
    }
    assert_eq!(fields.len(), 30);
    assert_eq!(kernel_dimension(&fields, 1e-12).unwrap(), 6);
}

#[test]
fn q_form_bounds_and_homogeneity() {
    let g = grid(12);
    let mut r = rng(5);
    let h = random_ambient(&mut r, &g, 8);
    let q = q_form(&h);
    let bound = dh_norm_sq(&h);
    for (qn, b) in q.pointwise_norm().iter().zip(&bound) {
        assert!(*qn <= b + 1e-10);
    }
    let q3 = q_form(&h.scale(3.0));
    assert!(q3.sub(&q.scale(9.0)).l2_norm() <= 1e-12 * q3.l2_norm());
    assert_eq!(q_form(&AmbientField::zeros(&g)).l2_norm(), 0.0);
}

#[test]
fn q_form_of_normal_field_matches_pointwise_oracle() {
    let g = grid(12);
    let z = ScalarField::harmonic(&g, 3, 1).unwrap().scale(0.2);
    let h = AmbientField::identity(&g).scale_by(&z);
    let q = q_form(&h);
    let (zt, zp) = z.frame_gradient();
    for i in (0..g.len()).step_by(11) {
        let (e1, e2) = g.frame(i);
        let p = g.points()[i];
        let zi = z.values()[i];
        let h1 = add(scale(p, zt[i]), scale(e1, zi));
        let h2 = add(scale(p, zp[i]), scale(e2, zi));
        assert!((q.t11[i] + 0.5 * (dot(h1, h1) - dot(h2, h2))).abs() < 1e-12);
        assert!((q.t12[i] + dot(h1, h2)).abs() < 1e-12);
    }
}

#[test]
fn solve_zero_is_zero() {
    let g = grid(10);
    let v = cr_solve(&TracelessTensorField::zeros(&g)).unwrap();
    assert_eq!(v.l2_norm(), 0.0);
}

#[test]
fn apply_then_solve_recovers_gradient() {
    let g = grid(16);
    let w = ScalarField::harmonic(&g, 2, 0).unwrap().surface_gradient();
    let sol = cr_solve_detailed(&cr_apply(&w).unwrap()).unwrap();
    assert!(sol.v.sub(&w).l2_norm() <= 1e-7);
    assert!(sol.range_residual <= 1e-8);
}

#[test]
fn apply_then_solve_recovers_kernel_orthogonal_part() {
    let g = grid(16);
    let mut r = rng(6);
    for _ in 0..5 {
        let w = random_tangent(&mut r, &g, g.band_limit() - 2);
        let target = w.sub(&kernel_projection(&w));
        let v = cr_solve(&cr_apply(&w).unwrap()).unwrap();
        let err = v.sub(&target).l2_norm();
        assert!(err <= 1e-6 * (1.0 + target.l2_norm()), "error {err}");
        assert!(kernel_projection(&v).l2_norm() <= 1e-10);
    }
}

//! Differential geometry of immersions `f: S² → R³` sampled on the grid.
//!
//! All chart quantities use the frame `X₁ = ∂_θ`, `X₂ = ∂_φ / sin θ`, which is
//! orthonormal for the round metric. With `f₁ = df(X₁)`, `f₂ = df(X₂)` the
//! pulled-back metric is `g_ij = f_i · f_j`, the area element relative to `dx`
//! is `|f₁ × f₂|`, and the mean curvature is `H = −g^{ij} b_ij` with respect to
//! the outward normal, so the unit sphere has `H = 2`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{AmbientField, Grid, ScalarField};
use crate::vec3::{cross, dot, norm, scale, V3};

/// Smallest admissible area element, relative to the round value 1.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

pub const ROUND_VOLUME: f64 = 4.0 * PI / 3.0;

/// An immersion together with its first- and second-order geometry.
#[derive(Debug, Clone)]
pub struct Immersion {
    f: AmbientField,
    tangents: (Vec<V3>, Vec<V3>),
    metric: Vec<[f64; 3]>,
    area_element: ScalarField,
    normal: AmbientField,
    mean_curvature: ScalarField,
    conformal_factor: ScalarField,
    conformal_defect: f64,
}

/// Build the immersion geometry of `f`.
///
/// `f` is replaced by its projection onto the grid band limit so that nodal
/// values and spectral derivatives describe the same map.
pub fn make_immersion(f: &AmbientField) -> Result<Immersion> {
    Immersion::new(f)
}

impl Immersion {
    pub fn new(f: &AmbientField) -> Result<Self> {
        let f = f.band_limited();
        let grid = f.grid().clone();
        let n = grid.len();
        let (f1, f2) = f.frame_derivatives();
        let second = |a: u8, b: u8| -> Vec<V3> {
            let d: Vec<Vec<f64>> = f.components().iter().map(|c| c.derivative(a, b)).collect();
            (0..n).map(|i| [d[0][i], d[1][i], d[2][i]]).collect()
        };
        let ftt = second(2, 0);
        let ftp = second(1, 1);
        let fpp = second(0, 2);

        let mut metric = Vec::with_capacity(n);
        let mut jac = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut min_j = f64::INFINITY;
        for i in 0..n {
            let g = [dot(f1[i], f1[i]), dot(f1[i], f2[i]), dot(f2[i], f2[i])];
            let c = cross(f1[i], f2[i]);
            let j = norm(c);
            min_j = min_j.min(j);
            metric.push(g);
            jac.push(j);
            normal.push(if j > 0.0 { scale(c, 1.0 / j) } else { [0.0; 3] });
        }
        if !(min_j >= DEGENERACY_THRESHOLD) {
            return Err(Error::ImmersionDegenerate {
                min_density: min_j,
                threshold: DEGENERACY_THRESHOLD,
            });
        }

        let w = grid.weights();
        let flux: f64 = (0..n)
            .map(|i| w[i] * jac[i] * dot(f.at(i), normal[i]))
            .sum::<f64>()
            / 3.0;
        let sign = if flux < 0.0 { -1.0 } else { 1.0 };
        if sign < 0.0 {
            for nv in &mut normal {
                *nv = scale(*nv, -1.0);
            }
        }

        let mut h = Vec::with_capacity(n);
        for i in 0..n {
            let s = grid.sin_theta(i);
            let nv = normal[i];
            let b11 = dot(ftt[i], nv);
            let b12 = dot(ftp[i], nv) / s;
            let b22 = dot(fpp[i], nv) / (s * s);
            let [g11, g12, g22] = metric[i];
            let det = g11 * g22 - g12 * g12;
            h.push(-(g22 * b11 - 2.0 * g12 * b12 + g11 * b22) / det);
        }

        let defect_sq: f64 = (0..n)
            .map(|i| {
                let [g11, g12, g22] = metric[i];
                let e11 = 0.5 * (g11 - g22);
                w[i] * 2.0 * (e11 * e11 + g12 * g12)
            })
            .sum();

        let u: Vec<f64> = jac.iter().map(|j| 0.5 * j.ln()).collect();
        Ok(Self {
            tangents: (f1, f2),
            metric,
            area_element: ScalarField::from_values(&grid, jac),
            normal: AmbientField::from_vecs(&grid, normal),
            mean_curvature: ScalarField::from_values(&grid, h),
            conformal_factor: ScalarField::from_values(&grid, u),
            conformal_defect: defect_sq.sqrt(),
            f,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }
    pub fn f(&self) -> &AmbientField {
        &self.f
    }
    /// `df(∂_θ)` and `df(∂_φ / sin θ)` at every node.
    pub fn tangents(&self) -> (&[V3], &[V3]) {
        (&self.tangents.0, &self.tangents.1)
    }
    /// `[g₁₁, g₁₂, g₂₂]` per node in the frame `(∂_θ, ∂_φ / sin θ)`.
    pub fn metric(&self) -> &[[f64; 3]] {
        &self.metric
    }
    /// `dμ_f / dx`.
    pub fn area_element(&self) -> &ScalarField {
        &self.area_element
    }
    pub fn normal(&self) -> &AmbientField {
        &self.normal
    }
    pub fn mean_curvature(&self) -> &ScalarField {
        &self.mean_curvature
    }
    /// `u = ¼ log(det g / det ḡ)`.
    pub fn conformal_factor(&self) -> &ScalarField {
        &self.conformal_factor
    }
    /// L² norm over `S²` of the trace-free part of `g` (Frobenius, frame components).
    pub fn conformal_defect(&self) -> f64 {
        self.conformal_defect
    }

    /// `∫ a dμ_f`.
    pub fn integrate_area(&self, a: &ScalarField) -> f64 {
        a.inner(&self.area_element)
    }

    pub fn area(&self) -> f64 {
        self.area_element.integrate()
    }

    /// Enclosed volume by the flux `(1/3) ∫ f · n_f dμ`.
    pub fn volume(&self) -> f64 {
        self.integrate_area(&self.f.dot(&self.normal)) / 3.0
    }

    /// Same map with `H` replaced by `(1 + eps) H`; only for negative controls.
    #[doc(hidden)]
    pub fn with_corrupted_mean_curvature(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.mean_curvature = self.mean_curvature.scale(1.0 + eps);
        out
    }
}

/// Global quantities of an immersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometrySummary {
    pub area: f64,
    pub volume: f64,
    pub willmore: f64,
    pub h_bar: f64,
    pub cmc_defect_l2: f64,
}

pub fn geometry_summary(imm: &Immersion) -> GeometrySummary {
    let h = imm.mean_curvature();
    let area = imm.area();
    let h_bar = imm.integrate_area(h) / area;
    let fluct = h.map(|v| (v - h_bar) * (v - h_bar));
    GeometrySummary {
        area,
        volume: imm.volume(),
        willmore: imm.integrate_area(&h.mul(h)),
        h_bar,
        cmc_defect_l2: imm.integrate_area(&fluct).max(0.0).sqrt(),
    }
}

/// Rescale so the enclosed volume is `4π/3`.
pub fn normalize_volume(imm: &Immersion) -> Result<Immersion> {
    let vol = imm.volume();
    if !(vol > 0.0) {
        return Err(Error::Orientation(vol));
    }
    let lambda = (ROUND_VOLUME / vol).cbrt();
    Immersion::new(&imm.f().scale(lambda))
}

/// `∫ H (n_f · f) dμ − 2·area`.
pub fn minkowski_residual(imm: &Immersion) -> f64 {
    let phi = imm.f().dot(imm.normal());
    imm.integrate_area(&imm.mean_curvature().mul(&phi)) - 2.0 * imm.area()
}

/// `∫H² dμ − (∫(H − H̄)² dμ + H̄² · area)`.
pub fn h2_splitting_residual(imm: &Immersion) -> f64 {
    let s = geometry_summary(imm);
    s.willmore - (s.cmc_defect_l2 * s.cmc_defect_l2 + s.h_bar * s.h_bar * s.area)
}

/// Comparison of the Willmore energy with the two-sphere threshold `32π(1 − α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WillmoreThreshold {
    pub willmore: f64,
    pub threshold: f64,
    pub passes: bool,
    pub single_bubble_product: f64,
}

pub fn willmore_threshold_check(imm: &Immersion, alpha: f64) -> Result<WillmoreThreshold> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Configuration(format!("alpha {alpha} outside (0, 1/2)")));
    }
    let s = geometry_summary(imm);
    let threshold = 32.0 * PI * (1.0 - alpha);
    Ok(WillmoreThreshold {
        willmore: s.willmore,
        threshold,
        passes: s.willmore <= threshold,
        single_bubble_product: s.h_bar * s.h_bar * s.area,
    })
}

//! Orientation-preserving Möbius transformations of `S²`, written `R ∘ φ_v`.
//!
//! `φ_v(x) = ((1 − |v|²) x + 2(1 + v·x) v) / (1 + |v|² + 2 v·x)` for `|v| < 1`.
//! Composition goes through the Lorentz representation on `R^{1,3}`, where `x`
//! corresponds to the null ray of `(1, x)`, `φ_v` to the boost
//!
//! ```text
//! B(v) = 1/(1 − |v|²) [[1 + |v|², 2vᵀ], [2v, (1 − |v|²) I + 2vvᵀ]]
//! ```
//!
//! and `R ∘ φ_v` to `diag(1, R) B(v)`.

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::vec3::V3;

/// Minimum distance of `|v|` from the unit sphere.
pub const BOUNDARY_MARGIN: f64 = 1e-3;

/// `φ_v(x)`; `|v| ≥ 1` is a domain error.
pub fn apply_phi_v(v: V3, x: V3) -> Result<V3> {
    let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if !(v2 < 1.0) {
        return Err(Error::Domain(format!("|v| = {} is not below 1", v2.sqrt())));
    }
    Ok(phi_v(v, x))
}

#[inline]
pub(crate) fn phi_v(v: V3, x: V3) -> V3 {
    let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let vx = v[0] * x[0] + v[1] * x[1] + v[2] * x[2];
    let den = 1.0 + v2 + 2.0 * vx;
    let a = (1.0 - v2) / den;
    let b = 2.0 * (1.0 + vx) / den;
    [a * x[0] + b * v[0], a * x[1] + b * v[1], a * x[2] + b * v[2]]
}

fn boost(v: &Vector3<f64>) -> Matrix4<f64> {
    let v2 = v.norm_squared();
    let k = 1.0 / (1.0 - v2);
    let mut m = Matrix4::zeros();
    m[(0, 0)] = (1.0 + v2) * k;
    for i in 0..3 {
        m[(0, i + 1)] = 2.0 * v[i] * k;
        m[(i + 1, 0)] = 2.0 * v[i] * k;
        for j in 0..3 {
            let delta = if i == j { 1.0 - v2 } else { 0.0 };
            m[(i + 1, j + 1)] = (delta + 2.0 * v[i] * v[j]) * k;
        }
    }
    m
}

/// Nearest rotation by the polar factor of an SVD.
fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * vt;
    }
    r
}

/// `x ↦ R φ_v(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MobiusElement {
    #[serde(serialize_with = "ser_matrix")]
    rotation: Matrix3<f64>,
    #[serde(serialize_with = "ser_vector")]
    v: Vector3<f64>,
}

fn ser_matrix<S: serde::Serializer>(m: &Matrix3<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: [[f64; 3]; 3] = [0, 1, 2].map(|r| [0, 1, 2].map(|c| m[(r, c)]));
    serde::Serialize::serialize(&rows, s)
}

fn ser_vector<S: serde::Serializer>(v: &Vector3<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&[v[0], v[1], v[2]], s)
}

impl Default for MobiusElement {
    fn default() -> Self {
        Self::identity()
    }
}

impl MobiusElement {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            v: Vector3::zeros(),
        }
    }

    /// Checked constructor enforcing `RᵀR = I`, `det R > 0` and `|v| ≤ 1 − η`.
    pub fn new(rotation: Matrix3<f64>, v: V3) -> Result<Self> {
        let v = Vector3::from(v);
        let orth = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        if orth > 1e-12 || rotation.determinant() <= 0.0 {
            return Err(Error::Domain("rotation is not in SO(3)".into()));
        }
        if v.norm() > 1.0 - BOUNDARY_MARGIN {
            return Err(Error::Domain(format!(
                "|v| = {} exceeds 1 − {BOUNDARY_MARGIN}",
                v.norm()
            )));
        }
        Ok(Self { rotation, v })
    }

    /// Rotation by `|ω|` about `ω / |ω|` composed with `φ_v`.
    pub fn from_axis_angle(omega: V3, v: V3) -> Result<Self> {
        let r = Rotation3::new(Vector3::from(omega)).into_inner();
        Self::new(r, v)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }
    pub fn v(&self) -> V3 {
        [self.v[0], self.v[1], self.v[2]]
    }
    pub fn v_norm(&self) -> f64 {
        self.v.norm()
    }

    pub fn apply(&self, x: V3) -> V3 {
        let y = phi_v(self.v(), x);
        let r = self.rotation * Vector3::from(y);
        [r[0], r[1], r[2]]
    }

    pub fn lorentz(&self) -> Matrix4<f64> {
        let mut rot = Matrix4::identity();
        rot.fixed_view_mut::<3, 3>(1, 1).copy_from(&self.rotation);
        rot * boost(&self.v)
    }

    /// Decompose a proper orthochronous Lorentz matrix into `R ∘ φ_v`.
    pub fn from_lorentz(l: &Matrix4<f64>) -> Self {
        let l = l / l[(0, 0)].signum();
        let p = Vector3::new(l[(0, 1)], l[(0, 2)], l[(0, 3)]);
        let s = p.norm();
        let r = s / (1.0 + (1.0 + s * s).sqrt());
        let v = p * ((1.0 - r * r) / 2.0);
        let spatial = (l * boost(&(-v))).fixed_view::<3, 3>(1, 1).into_owned();
        Self {
            rotation: orthonormalize(&spatial),
            v,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_lorentz(&(self.lorentz() * other.lorentz()))
    }

    pub fn inverse(&self) -> Self {
        // (R ∘ φ_v)⁻¹ = φ_{−v} ∘ Rᵀ
        let inv = Self {
            rotation: Matrix3::identity(),
            v: -self.v,
        };
        let rt = Self {
            rotation: self.rotation.transpose(),
            v: Vector3::zeros(),
        };
        inv.compose(&rt)
    }

    /// `exp(ω̂) ∘ φ_b`: the chart used for gauge updates.
    pub fn local(omega: V3, b: V3) -> Self {
        Self {
            rotation: Rotation3::new(Vector3::from(omega)).into_inner(),
            v: Vector3::from(b),
        }
    }
}

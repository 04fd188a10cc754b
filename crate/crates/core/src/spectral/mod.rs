//! Spherical-harmonic analysis and synthesis on a Gauss–Legendre grid.
//!
//! Coefficients use the real orthonormal basis (no Condon–Shortley phase)
//!
//! ```text
//! Y_{l,0}  = P̄_l^0(cos θ)
//! Y_{l,m}  = √2 P̄_l^m(cos θ) cos(mφ)   m > 0
//! Y_{l,-m} = √2 P̄_l^m(cos θ) sin(mφ)   m > 0
//! ```
//!
//! stored flat at index `l² + l + m`, so a band limit `L` needs `(L+1)²` entries.

mod field;
mod grid;
pub(crate) mod legendre;

pub use field::{AmbientField, ScalarField};
pub use grid::{build_grid, Grid, QuadratureGrid, MAX_BAND_LIMIT, MIN_BAND_LIMIT};

use crate::error::{Error, Result};
use legendre::{legendre_values, tri, tri_len};

/// Flat index of `(l, m)`, `|m| ≤ l`.
#[inline]
pub fn coeff_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// `l(l+1)`, the eigenvalue of `−Δ` on degree-`l` harmonics.
#[inline]
pub fn eigenvalue(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

/// Real spherical-harmonic coefficients up to a band limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    band_limit: usize,
    data: Vec<f64>,
}

impl SpectralCoeffs {
    pub fn zeros(band_limit: usize) -> Self {
        Self {
            band_limit,
            data: vec![0.0; (band_limit + 1) * (band_limit + 1)],
        }
    }

    /// Wrap a flat vector; its length must be a perfect square.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        let l = grid::coeff_band_limit(data.len());
        if (l + 1) * (l + 1) != data.len() {
            return Err(Error::Configuration(format!(
                "coefficient vector length {} is not a perfect square",
                data.len()
            )));
        }
        Ok(Self { band_limit: l, data })
    }

    /// Single harmonic `Y_{l,m}` with unit coefficient.
    pub fn unit(band_limit: usize, l: usize, m: i64) -> Self {
        let mut c = Self::zeros(band_limit);
        c.data[coeff_index(l, m)] = 1.0;
        c
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.data[coeff_index(l, m)]
    }
    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        self.data[coeff_index(l, m)] = value;
    }

    /// Iterate `(l, m, coefficient)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, f64)> + '_ {
        (0..=self.band_limit).flat_map(move |l| {
            (-(l as i64)..=l as i64).map(move |m| (l, m, self.data[coeff_index(l, m)]))
        })
    }

    /// Multiply every degree-`l` block by `f(l)`.
    pub fn map_degree(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.band_limit {
            let s = f(l);
            for v in &mut out.data[l * l..(l + 1) * (l + 1)] {
                *v *= s;
            }
        }
        out
    }

    /// Squared norm of each degree block.
    pub fn degree_energy(&self) -> Vec<f64> {
        (0..=self.band_limit)
            .map(|l| self.data[l * l..(l + 1) * (l + 1)].iter().map(|c| c * c).sum())
            .collect()
    }

    /// Evaluate the expansion at arbitrary unit vectors.
    pub fn eval_points(&self, points: &[[f64; 3]]) -> Vec<f64> {
        let mut out = vec![0.0; points.len()];
        eval_many_into(&[&self.data], points, &mut [&mut out]);
        out
    }
}

/// Evaluate several expansions sharing one Legendre table per point.
pub(crate) fn eval_many_into(coeffs: &[&[f64]], points: &[[f64; 3]], out: &mut [&mut [f64]]) {
    let l_max = coeffs
        .iter()
        .map(|c| grid::coeff_band_limit(c.len()))
        .max()
        .unwrap_or(0);
    let mut p = vec![0.0; tri_len(l_max)];
    for (i, x) in points.iter().enumerate() {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let c = (x[2] / r).clamp(-1.0, 1.0);
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt() / r;
        let phi = x[1].atan2(x[0]);
        legendre_values(l_max, c, rho, &mut p);
        let mut cm = vec![(1.0, 0.0); l_max + 1];
        for (m, slot) in cm.iter_mut().enumerate() {
            let (s, c) = (m as f64 * phi).sin_cos();
            *slot = (c, s);
        }
        for (comp, o) in coeffs.iter().zip(out.iter_mut()) {
            let lc = grid::coeff_band_limit(comp.len());
            let mut acc = 0.0;
            for l in 0..=lc {
                let base = l * l + l;
                acc += comp[base] * p[tri(l, 0)];
                for m in 1..=l {
                    let (cmv, smv) = cm[m];
                    acc += std::f64::consts::SQRT_2
                        * p[tri(l, m)]
                        * (comp[base + m] * cmv + comp[base - m] * smv);
                }
            }
            o[i] = acc;
        }
    }
}

/// Analysis at the grid's band limit.
pub fn analyze(field: &ScalarField) -> SpectralCoeffs {
    field.coeffs().clone()
}

/// Synthesis on `grid`; fails when the coefficients carry a higher band limit.
pub fn synthesize(coeffs: &SpectralCoeffs, grid: &Grid) -> Result<ScalarField> {
    ScalarField::from_coeffs(grid, coeffs)
}

use std::f64::consts::PI;
use std::sync::Arc;

use super::legendre::{legendre_dtheta, legendre_dtheta2, legendre_values, tri, tri_len};
use crate::error::{Error, Result};

pub const MIN_BAND_LIMIT: usize = 4;
pub const MAX_BAND_LIMIT: usize = 256;

/// Gauss–Legendre nodes `x_j` (descending) and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_poly(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_poly(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_poly(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre (in cos θ) × uniform (in φ) sampling of the unit sphere.
///
/// Node `i = j * n_phi + k` sits at colatitude `theta[j]` and longitude
/// `phi[k] = 2πk / n_phi`. With `n_theta = L + 1` and `n_phi = 2L + 2` the rule
/// integrates every spherical polynomial of degree `≤ 2L + 1` exactly.
#[derive(Debug)]
pub struct QuadratureGrid {
    band_limit: usize,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    phi: Vec<f64>,
    weights: Vec<f64>,
    points: Vec<[f64; 3]>,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
}

pub type Grid = Arc<QuadratureGrid>;

/// Build the quadrature grid for band limit `L`.
pub fn build_grid(band_limit: usize) -> Result<Grid> {
    QuadratureGrid::new(band_limit).map(Arc::new)
}

impl QuadratureGrid {
    pub fn new(band_limit: usize) -> Result<Self> {
        if !(MIN_BAND_LIMIT..=MAX_BAND_LIMIT).contains(&band_limit) {
            return Err(Error::Configuration(format!(
                "band limit {band_limit} outside [{MIN_BAND_LIMIT}, {MAX_BAND_LIMIT}]"
            )));
        }
        Ok(Self::unchecked(band_limit))
    }

    /// Grid without the band-limit range check, used for refinement.
    pub(crate) fn unchecked(band_limit: usize) -> Self {
        let n_theta = band_limit + 1;
        let n_phi = 2 * band_limit + 2;
        let (x, gw) = gauss_legendre(n_theta);
        let cos_theta = x.clone();
        let sin_theta: Vec<f64> = x.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let theta: Vec<f64> = x.iter().map(|c| c.acos()).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let phi: Vec<f64> = (0..n_phi).map(|k| k as f64 * dphi).collect();
        let cos_table: Vec<f64> = (0..n_phi).map(|k| (k as f64 * dphi).cos()).collect();
        let sin_table: Vec<f64> = (0..n_phi).map(|k| (k as f64 * dphi).sin()).collect();
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for j in 0..n_theta {
            for k in 0..n_phi {
                weights.push(gw[j] * dphi);
                points.push([
                    sin_theta[j] * cos_table[k],
                    sin_theta[j] * sin_table[k],
                    cos_theta[j],
                ]);
            }
        }
        Self {
            band_limit,
            n_theta,
            n_phi,
            theta,
            cos_theta,
            sin_theta,
            phi,
            weights,
            points,
            cos_table,
            sin_table,
        }
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }
    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Number of real harmonic coefficients, `(L+1)²`.
    pub fn n_coeffs(&self) -> usize {
        (self.band_limit + 1) * (self.band_limit + 1)
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }
    /// `(θ, φ)` of every node.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| (self.theta[i / self.n_phi], self.phi[i % self.n_phi]))
    }
    pub fn theta(&self, i: usize) -> f64 {
        self.theta[i / self.n_phi]
    }
    pub fn phi(&self, i: usize) -> f64 {
        self.phi[i % self.n_phi]
    }
    pub fn sin_theta(&self, i: usize) -> f64 {
        self.sin_theta[i / self.n_phi]
    }
    pub fn cos_theta(&self, i: usize) -> f64 {
        self.cos_theta[i / self.n_phi]
    }

    /// Orthonormal chart frame `(e_θ, e_φ)` at node `i`.
    pub fn frame(&self, i: usize) -> ([f64; 3], [f64; 3]) {
        let j = i / self.n_phi;
        let k = i % self.n_phi;
        let (c, s) = (self.cos_theta[j], self.sin_theta[j]);
        let (cp, sp) = (self.cos_table[k], self.sin_table[k]);
        ([c * cp, c * sp, -s], [-sp, cp, 0.0])
    }

    /// Evaluate `∂_θ^a ∂_φ^b` of the expansion with coefficients `coeffs` at every node.
    ///
    /// `coeffs` is indexed by `l² + l + m` and may hold fewer than `(L+1)²` entries.
    pub fn synthesize_derivative(&self, coeffs: &[f64], theta_order: u8, phi_order: u8) -> Vec<f64> {
        assert!(theta_order <= 2 && phi_order <= 2 && theta_order + phi_order <= 2);
        let l_max = coeff_band_limit(coeffs.len()).min(self.band_limit);
        let n_phi = self.n_phi;
        let mut out = vec![0.0; self.len()];
        let mut table = LegendreScratch::new(l_max);
        let mut cos_part = vec![0.0; l_max + 1];
        let mut sin_part = vec![0.0; l_max + 1];
        for j in 0..self.n_theta {
            let t = table.ring(self.cos_theta[j], self.sin_theta[j], theta_order);
            for m in 0..=l_max {
                let mut sc = 0.0;
                let mut ss = 0.0;
                for l in m..=l_max {
                    let p = t[tri(l, m)];
                    sc += coeffs[l * l + l + m] * p;
                    if m > 0 {
                        ss += coeffs[l * l + l - m] * p;
                    }
                }
                let norm = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                cos_part[m] = sc * norm;
                sin_part[m] = ss * norm;
            }
            let row = &mut out[j * n_phi..(j + 1) * n_phi];
            for (k, slot) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for m in 0..=l_max {
                    let idx = (m * k) % n_phi;
                    let (c, s) = (self.cos_table[idx], self.sin_table[idx]);
                    let mf = m as f64;
                    acc += match phi_order {
                        0 => cos_part[m] * c + sin_part[m] * s,
                        1 => mf * (sin_part[m] * c - cos_part[m] * s),
                        _ => -mf * mf * (cos_part[m] * c + sin_part[m] * s),
                    };
                }
                *slot = acc;
            }
        }
        out
    }

    /// Exact transpose of [`synthesize_derivative`](Self::synthesize_derivative):
    /// `c_{lm} = Σ_i values_i · ∂_θ^a ∂_φ^b Y_{lm}(x_i)` (no quadrature weights).
    pub fn synthesis_adjoint(&self, values: &[f64], theta_order: u8, phi_order: u8) -> Vec<f64> {
        assert_eq!(values.len(), self.len());
        assert!(theta_order <= 2 && phi_order <= 2 && theta_order + phi_order <= 2);
        let l_max = self.band_limit;
        let n_phi = self.n_phi;
        let mut coeffs = vec![0.0; self.n_coeffs()];
        let mut table = LegendreScratch::new(l_max);
        let mut cos_part = vec![0.0; l_max + 1];
        let mut sin_part = vec![0.0; l_max + 1];
        for j in 0..self.n_theta {
            let row = &values[j * n_phi..(j + 1) * n_phi];
            for m in 0..=l_max {
                let mut ac = 0.0;
                let mut as_ = 0.0;
                let mf = m as f64;
                for (k, g) in row.iter().enumerate() {
                    let idx = (m * k) % n_phi;
                    let (c, s) = (self.cos_table[idx], self.sin_table[idx]);
                    match phi_order {
                        0 => {
                            ac += g * c;
                            as_ += g * s;
                        }
                        1 => {
                            ac -= g * mf * s;
                            as_ += g * mf * c;
                        }
                        _ => {
                            ac -= g * mf * mf * c;
                            as_ -= g * mf * mf * s;
                        }
                    }
                }
                let norm = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                cos_part[m] = ac * norm;
                sin_part[m] = as_ * norm;
            }
            let t = table.ring(self.cos_theta[j], self.sin_theta[j], theta_order);
            for m in 0..=l_max {
                for l in m..=l_max {
                    let p = t[tri(l, m)];
                    coeffs[l * l + l + m] += cos_part[m] * p;
                    if m > 0 {
                        coeffs[l * l + l - m] += sin_part[m] * p;
                    }
                }
            }
        }
        coeffs
    }

    /// Quadrature projection onto the real harmonics of degree `≤ L`.
    pub fn analyze_values(&self, values: &[f64]) -> Vec<f64> {
        let weighted: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
        self.synthesis_adjoint(&weighted, 0, 0)
    }
}

/// Largest `L` with `(L+1)² ≤ n`.
pub(crate) fn coeff_band_limit(n: usize) -> usize {
    let mut l = (n as f64).sqrt() as usize;
    while (l + 1) * (l + 1) > n {
        l -= 1;
    }
    while (l + 2) * (l + 2) <= n {
        l += 1;
    }
    l
}

struct LegendreScratch {
    l_max: usize,
    values: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl LegendreScratch {
    fn new(l_max: usize) -> Self {
        let n = tri_len(l_max);
        Self {
            l_max,
            values: vec![0.0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        }
    }

    fn ring(&mut self, c: f64, s: f64, order: u8) -> &[f64] {
        legendre_values(self.l_max, c, s, &mut self.values);
        if order == 0 {
            return &self.values;
        }
        legendre_dtheta(self.l_max, c, s, &self.values, &mut self.d1);
        if order == 1 {
            return &self.d1;
        }
        legendre_dtheta2(self.l_max, c, s, &self.values, &self.d1, &mut self.d2);
        &self.d2
    }
}

use std::sync::{Arc, OnceLock};

use super::grid::{Grid, QuadratureGrid};
use super::{eigenvalue, eval_many_into, SpectralCoeffs};
use crate::error::{Error, Result};
use crate::vec3::{add, cross, dot, scale, sub, V3};

/// Samples of a real function on the grid, with a lazily computed projection
/// onto the harmonics of degree `≤ L`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    coeffs: OnceLock<SpectralCoeffs>,
}

impl ScalarField {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count does not match grid");
        Self {
            grid: Arc::clone(grid),
            values,
            coeffs: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = grid.points().iter().map(|p| f(*p)).collect();
        Self::from_values(grid, values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_values(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_values(grid, vec![c; grid.len()])
    }

    /// Synthesize from coefficients; the band limit must not exceed the grid's.
    pub fn from_coeffs(grid: &Grid, coeffs: &SpectralCoeffs) -> Result<Self> {
        if coeffs.band_limit() > grid.band_limit() {
            return Err(Error::Resolution(format!(
                "coefficients of band limit {} do not fit a grid of band limit {}",
                coeffs.band_limit(),
                grid.band_limit()
            )));
        }
        let mut padded = SpectralCoeffs::zeros(grid.band_limit());
        padded.as_mut_slice()[..coeffs.len()].copy_from_slice(coeffs.as_slice());
        let values = grid.synthesize_derivative(padded.as_slice(), 0, 0);
        let field = Self::from_values(grid, values);
        let _ = field.coeffs.set(padded);
        Ok(field)
    }

    /// The harmonic `Y_{l,m}` sampled on `grid`.
    pub fn harmonic(grid: &Grid, l: usize, m: i64) -> Result<Self> {
        if l > grid.band_limit() || m.unsigned_abs() as usize > l {
            return Err(Error::Resolution(format!(
                "harmonic ({l}, {m}) not representable at band limit {}",
                grid.band_limit()
            )));
        }
        Self::from_coeffs(grid, &SpectralCoeffs::unit(grid.band_limit(), l, m))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Quadrature projection onto degree `≤ L`, computed once.
    pub fn coeffs(&self) -> &SpectralCoeffs {
        self.coeffs.get_or_init(|| {
            SpectralCoeffs::from_vec(self.grid.analyze_values(&self.values))
                .expect("grid analysis has square length")
        })
    }

    /// The band-limited field with the same coefficients.
    pub fn band_limited(&self) -> Self {
        Self::from_coeffs(&self.grid, self.coeffs()).expect("own band limit")
    }

    /// `∂_θ^a ∂_φ^b` of the band-limited projection, at the nodes.
    pub fn derivative(&self, theta_order: u8, phi_order: u8) -> Vec<f64> {
        self.grid
            .synthesize_derivative(self.coeffs().as_slice(), theta_order, phi_order)
    }

    /// Components of the gradient in the frame `(e_θ, e_φ)`.
    pub fn frame_gradient(&self) -> (Vec<f64>, Vec<f64>) {
        let dt = self.derivative(1, 0);
        let mut dp = self.derivative(0, 1);
        for (i, v) in dp.iter_mut().enumerate() {
            *v /= self.grid.sin_theta(i);
        }
        (dt, dp)
    }

    /// Laplace–Beltrami operator, `ΔY_{lm} = −l(l+1) Y_{lm}`.
    pub fn laplacian(&self) -> Self {
        let c = self.coeffs().map_degree(|l| -eigenvalue(l));
        Self::from_coeffs(&self.grid, &c).expect("own band limit")
    }

    /// Tangential gradient as an ambient vector field.
    pub fn surface_gradient(&self) -> AmbientField {
        let (gt, gp) = self.frame_gradient();
        let vecs = (0..self.grid.len())
            .map(|i| {
                let (e1, e2) = self.grid.frame(i);
                add(scale(e1, gt[i]), scale(e2, gp[i]))
            })
            .collect();
        AmbientField::from_vecs(&self.grid, vecs)
    }

    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// `∫ self · other dx` by quadrature on the nodal values.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v.abs().powf(p) * w)
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// `(Σ (1 + l(l+1))^s c_{lm}²)^{1/2}`.
    pub fn sobolev_norm(&self, order: u32) -> f64 {
        self.sobolev_norm_sq(order).sqrt()
    }

    pub(crate) fn sobolev_norm_sq(&self, order: u32) -> f64 {
        self.coeffs()
            .degree_energy()
            .iter()
            .enumerate()
            .map(|(l, e)| (1.0 + eigenvalue(l)).powi(order as i32) * e)
            .sum()
    }

    /// Maximum of `|field|` over a grid refined 2× by spectral resampling.
    pub fn sup_norm(&self) -> f64 {
        let fine = refined_grid(&self.grid);
        let vals = fine.synthesize_derivative(self.coeffs().as_slice(), 0, 0);
        vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Evaluate the band-limited projection at arbitrary unit vectors.
    pub fn eval_points(&self, points: &[[f64; 3]]) -> Vec<f64> {
        self.coeffs().eval_points(points)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values(&self.grid, self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self::from_values(&self.grid, values)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }
    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a * b)
    }
    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Resample on the grid of twice the band limit, where products of two
    /// band-limited fields are still integrated exactly.
    pub fn refined(&self) -> Self {
        let fine: Grid = Arc::new(refined_grid(&self.grid));
        Self::from_coeffs(&fine, self.coeffs()).expect("refined grid holds the band limit")
    }
}

fn refined_grid(grid: &QuadratureGrid) -> QuadratureGrid {
    QuadratureGrid::unchecked(2 * grid.band_limit())
}

/// A map `S² → R³` stored as three scalar fields.
#[derive(Debug, Clone)]
pub struct AmbientField {
    components: [ScalarField; 3],
}

impl AmbientField {
    pub fn new(components: [ScalarField; 3]) -> Self {
        let g = components[0].grid();
        assert!(Arc::ptr_eq(g, components[1].grid()) && Arc::ptr_eq(g, components[2].grid()));
        Self { components }
    }

    pub fn from_vecs(grid: &Grid, vecs: Vec<V3>) -> Self {
        let comp = |k: usize| ScalarField::from_values(grid, vecs.iter().map(|v| v[k]).collect());
        Self::new([comp(0), comp(1), comp(2)])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(V3) -> V3) -> Self {
        Self::from_vecs(grid, grid.points().iter().map(|p| f(*p)).collect())
    }

    /// The standard embedding `f₀(x) = x`.
    pub fn identity(grid: &Grid) -> Self {
        Self::from_fn(grid, |p| p)
    }

    pub fn constant(grid: &Grid, a: V3) -> Self {
        Self::from_fn(grid, |_| a)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, [0.0; 3])
    }

    pub fn from_coeffs(grid: &Grid, coeffs: [&SpectralCoeffs; 3]) -> Result<Self> {
        Ok(Self::new([
            ScalarField::from_coeffs(grid, coeffs[0])?,
            ScalarField::from_coeffs(grid, coeffs[1])?,
            ScalarField::from_coeffs(grid, coeffs[2])?,
        ]))
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }
    pub fn component(&self, k: usize) -> &ScalarField {
        &self.components[k]
    }
    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }
    pub fn len(&self) -> usize {
        self.grid().len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn at(&self, i: usize) -> V3 {
        [
            self.components[0].values()[i],
            self.components[1].values()[i],
            self.components[2].values()[i],
        ]
    }

    pub fn to_vecs(&self) -> Vec<V3> {
        (0..self.len()).map(|i| self.at(i)).collect()
    }

    fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self::new([
            f(&self.components[0]),
            f(&self.components[1]),
            f(&self.components[2]),
        ])
    }

    pub fn map_vecs(&self, f: impl Fn(usize, V3) -> V3) -> Self {
        Self::from_vecs(self.grid(), (0..self.len()).map(|i| f(i, self.at(i))).collect())
    }

    pub fn zip_vecs(&self, other: &AmbientField, f: impl Fn(V3, V3) -> V3) -> Self {
        Self::from_vecs(
            self.grid(),
            (0..self.len()).map(|i| f(self.at(i), other.at(i))).collect(),
        )
    }

    pub fn add(&self, other: &AmbientField) -> Self {
        self.zip_vecs(other, add)
    }
    pub fn sub(&self, other: &AmbientField) -> Self {
        self.zip_vecs(other, sub)
    }
    pub fn scale(&self, c: f64) -> Self {
        self.map_vecs(|_, v| scale(v, c))
    }
    pub fn scale_by(&self, s: &ScalarField) -> Self {
        self.map_vecs(|i, v| scale(v, s.values()[i]))
    }
    pub fn cross(&self, other: &AmbientField) -> Self {
        self.zip_vecs(other, cross)
    }
    pub fn dot(&self, other: &AmbientField) -> ScalarField {
        ScalarField::from_values(
            self.grid(),
            (0..self.len()).map(|i| dot(self.at(i), other.at(i))).collect(),
        )
    }
    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    pub fn band_limited(&self) -> Self {
        self.map_components(ScalarField::band_limited)
    }
    pub fn laplacian(&self) -> Self {
        self.map_components(ScalarField::laplacian)
    }

    /// `∂_θ f` and `∂_φ f / sin θ` at every node.
    pub fn frame_derivatives(&self) -> (Vec<V3>, Vec<V3>) {
        let g: Vec<(Vec<f64>, Vec<f64>)> =
            self.components.iter().map(ScalarField::frame_gradient).collect();
        let n = self.len();
        let d1 = (0..n).map(|i| [g[0].0[i], g[1].0[i], g[2].0[i]]).collect();
        let d2 = (0..n).map(|i| [g[0].1[i], g[1].1[i], g[2].1[i]]).collect();
        (d1, d2)
    }

    pub fn integrate(&self) -> V3 {
        [
            self.components[0].integrate(),
            self.components[1].integrate(),
            self.components[2].integrate(),
        ]
    }

    pub fn inner(&self, other: &AmbientField) -> f64 {
        (0..3)
            .map(|k| self.components[k].inner(&other.components[k]))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `(∫ |field|^p dx)^{1/p}` with the Euclidean pointwise norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.norm_sq().map(|v| v.sqrt()).lp_norm(p)
    }

    /// Component-wise multiplier norm, squares summed.
    pub fn sobolev_norm(&self, order: u32) -> f64 {
        self.components
            .iter()
            .map(|c| c.sobolev_norm_sq(order))
            .sum::<f64>()
            .sqrt()
    }

    /// Maximum pointwise Euclidean norm over the 2× refined grid.
    pub fn sup_norm(&self) -> f64 {
        let fine = refined_grid(self.grid());
        let vals: Vec<Vec<f64>> = self
            .components
            .iter()
            .map(|c| fine.synthesize_derivative(c.coeffs().as_slice(), 0, 0))
            .collect();
        (0..fine.len())
            .map(|i| (vals[0][i].powi(2) + vals[1][i].powi(2) + vals[2][i].powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    /// Resample on the grid of twice the band limit.
    pub fn refined(&self) -> Self {
        let fine: Grid = Arc::new(refined_grid(self.grid()));
        let comp = |k: usize| {
            ScalarField::from_coeffs(&fine, self.components[k].coeffs())
                .expect("refined grid holds the band limit")
        };
        Self::new([comp(0), comp(1), comp(2)])
    }

    /// Evaluate the band-limited projection at arbitrary unit vectors.
    pub fn eval_many(&self, points: &[V3]) -> Vec<V3> {
        let mut out = [
            vec![0.0; points.len()],
            vec![0.0; points.len()],
            vec![0.0; points.len()],
        ];
        let coeffs = [
            self.components[0].coeffs().as_slice(),
            self.components[1].coeffs().as_slice(),
            self.components[2].coeffs().as_slice(),
        ];
        {
            let [a, b, c] = &mut out;
            eval_many_into(&coeffs, points, &mut [a.as_mut_slice(), b, c]);
        }
        (0..points.len())
            .map(|i| [out[0][i], out[1][i], out[2][i]])
            .collect()
    }

    pub fn max_norm_at_nodes(&self) -> f64 {
        (0..self.len())
            .map(|i| dot(self.at(i), self.at(i)).sqrt())
            .fold(0.0, f64::max)
    }

    /// Highest degree with nonzero energy above `threshold` relative to the total.
    pub fn effective_band_limit(&self, threshold: f64) -> usize {
        let mut energy = vec![0.0; self.grid().band_limit() + 1];
        for c in &self.components {
            for (l, e) in c.coeffs().degree_energy().into_iter().enumerate() {
                energy[l] += e;
            }
        }
        let total: f64 = energy.iter().sum();
        energy
            .iter()
            .rposition(|e| *e > threshold * total.max(f64::MIN_POSITIVE))
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_grid;
    use std::f64::consts::PI;

    #[test]
    fn harmonics_are_orthonormal_under_quadrature() {
        let g = build_grid(8).unwrap();
        let y20 = ScalarField::harmonic(&g, 2, 0).unwrap();
        let y31 = ScalarField::harmonic(&g, 3, 1).unwrap();
        assert!((y20.inner(&y20) - 1.0).abs() < 1e-12);
        assert!(y20.inner(&y31).abs() < 1e-12);
    }

    #[test]
    fn closed_form_harmonic_matches() {
        let g = build_grid(8).unwrap();
        let y20 = ScalarField::harmonic(&g, 2, 0).unwrap();
        let oracle = ScalarField::from_fn(&g, |p| (5.0 / (16.0 * PI)).sqrt() * (3.0 * p[2] * p[2] - 1.0));
        assert!(y20.sub(&oracle).max_abs() < 1e-13);
        // Y_{1,-1} ∝ y, Y_{1,1} ∝ x with positive constants
        let y1m = ScalarField::harmonic(&g, 1, -1).unwrap();
        let y1p = ScalarField::harmonic(&g, 1, 1).unwrap();
        let k = (3.0 / (4.0 * PI)).sqrt();
        for (i, p) in g.points().iter().enumerate() {
            assert!((y1m.values()[i] - k * p[1]).abs() < 1e-13);
            assert!((y1p.values()[i] - k * p[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn derivatives_of_coordinate_functions() {
        let g = build_grid(6).unwrap();
        let x3 = ScalarField::from_fn(&g, |p| p[2]);
        let grad = x3.surface_gradient();
        for i in 0..g.len() {
            let p = g.points()[i];
            let expect = sub([0.0, 0.0, 1.0], scale(p, p[2]));
            let got = grad.at(i);
            for k in 0..3 {
                assert!((got[k] - expect[k]).abs() < 1e-12);
            }
        }
        let d2 = x3.derivative(2, 0);
        for i in 0..g.len() {
            assert!((d2[i] + g.cos_theta(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn point_evaluation_matches_nodes() {
        let g = build_grid(10).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[0] * p[1] + p[2].powi(3) - 0.3 * p[0]);
        let at = f.eval_points(g.points());
        for (a, b) in at.iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-13);
        }
        let poles = f.eval_points(&[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]);
        assert!((poles[0] - 1.0).abs() < 1e-13);
        assert!((poles[1] + 1.0).abs() < 1e-13);
    }

    #[test]
    fn sup_norm_uses_refined_grid() {
        let g = build_grid(6).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[2]);
        assert!((f.sup_norm() - 1.0).abs() < 0.02);
        assert!(f.sup_norm() >= f.max_abs() - 1e-15);
    }

    #[test]
    fn coefficient_band_above_grid_is_rejected() {
        let g = build_grid(6).unwrap();
        let c = SpectralCoeffs::zeros(7);
        assert!(matches!(ScalarField::from_coeffs(&g, &c), Err(Error::Resolution(_))));
    }
}

//! Maps `S² → R³` that can be evaluated at arbitrary points, so that
//! reparametrizations and rigid placements are sampled exactly instead of
//! through repeated band-limited resampling.

use std::fmt::Debug;
use std::sync::Arc;

use crate::mobius::MobiusElement;
use crate::spectral::{AmbientField, Grid, ScalarField, SpectralCoeffs};
use crate::vec3::{add, normalize, scale, V3};

pub trait SurfaceMap: Debug + Send + Sync {
    /// Evaluate at unit vectors.
    fn eval_many(&self, points: &[V3]) -> Vec<V3>;

    /// Sample at the grid nodes.
    fn sample(&self, grid: &Grid) -> AmbientField {
        AmbientField::from_vecs(grid, self.eval_many(grid.points()))
    }
}

impl SurfaceMap for AmbientField {
    fn eval_many(&self, points: &[V3]) -> Vec<V3> {
        AmbientField::eval_many(self, points)
    }
}

/// `y ↦ ρ(y) y` for a band-limited radius function.
#[derive(Debug, Clone)]
pub struct RadialGraph {
    rho: SpectralCoeffs,
}

impl RadialGraph {
    pub fn new(rho: &ScalarField) -> Self {
        Self {
            rho: rho.coeffs().clone(),
        }
    }

    pub fn radius(&self, points: &[V3]) -> Vec<f64> {
        self.rho.eval_points(points)
    }
}

impl SurfaceMap for RadialGraph {
    fn eval_many(&self, points: &[V3]) -> Vec<V3> {
        let r = self.rho.eval_points(points);
        points.iter().zip(r).map(|(p, r)| scale(*p, r)).collect()
    }
}

/// `x ↦ base((x + w(x)) / |x + w(x)|)` for a tangent field `w` given at the grid nodes.
///
/// Off the nodes `w` is evaluated spectrally.
#[derive(Debug, Clone)]
pub struct Reparametrized {
    pub base: Arc<dyn SurfaceMap>,
    pub w: AmbientField,
}

impl SurfaceMap for Reparametrized {
    fn eval_many(&self, points: &[V3]) -> Vec<V3> {
        let w = self.w.eval_many(points);
        let moved: Vec<V3> = points
            .iter()
            .zip(w)
            .map(|(p, w)| normalize(add(*p, w)))
            .collect();
        self.base.eval_many(&moved)
    }

    fn sample(&self, grid: &Grid) -> AmbientField {
        if Arc::ptr_eq(grid, self.w.grid()) {
            let moved: Vec<V3> = (0..grid.len())
                .map(|i| normalize(add(grid.points()[i], self.w.at(i))))
                .collect();
            AmbientField::from_vecs(grid, self.base.eval_many(&moved))
        } else {
            AmbientField::from_vecs(grid, self.eval_many(grid.points()))
        }
    }
}

/// `x ↦ scale · base(M(x)) + translation`.
#[derive(Debug, Clone)]
pub struct Placed {
    pub base: Arc<dyn SurfaceMap>,
    pub mobius: MobiusElement,
    pub scale: f64,
    pub translation: V3,
}

impl Placed {
    pub fn scaled(base: Arc<dyn SurfaceMap>, scale: f64) -> Self {
        Self {
            base,
            mobius: MobiusElement::identity(),
            scale,
            translation: [0.0; 3],
        }
    }
}

impl SurfaceMap for Placed {
    fn eval_many(&self, points: &[V3]) -> Vec<V3> {
        let warped: Vec<V3> = points.iter().map(|p| self.mobius.apply(*p)).collect();
        self.base
            .eval_many(&warped)
            .into_iter()
            .map(|y| add(scale(y, self.scale), self.translation))
            .collect()
    }
}

//! Conformal reparametrization of a fixed surface.
//!
//! The surface is given as a map `F: S² → R³` (for star-shaped surfaces the
//! radial graph `y ↦ ρ(y) y`). Iterates are `f = F ∘ Ψ_w` with
//! `Ψ_w(x) = (x + w)/|x + w|` and `w = ∇α + n × ∇β`, so every iterate
//! parametrizes exactly the same image. Reparametrizing along a tangent field
//! `δ` changes the trace-free metric by `e^{2u} Dδ` to first order, so each step
//! solves `D δ = E / e^{2u}` in least squares and moves the potentials by `−δ`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Immersion;
use crate::maps::{RadialGraph, Reparametrized, SurfaceMap};
use crate::spectral::{Grid, ScalarField};
use crate::tangent::{cr_solve_detailed, Potentials, TracelessTensorField};

pub const CONFORMAL_TOLERANCE: f64 = 1e-8;
pub const MAX_CONFORMAL_ITERATIONS: usize = 50;
/// Largest admissible `‖ρ − ρ̄‖_{W^{2,2}}`.
pub const RADIUS_REGIME: f64 = 1.0;
/// Relative growth of the defect that counts as an increase.
const SIGNIFICANT_INCREASE: f64 = 1e-6;
/// A step that keeps more than this fraction of the defect has hit the band-limit floor.
const STALL_RATIO: f64 = 0.9;

/// A conformal (to tolerance) parametrization of a given surface.
#[derive(Debug, Clone)]
pub struct Conformalization {
    pub map: Arc<dyn SurfaceMap>,
    pub immersion: Immersion,
    pub iterations: usize,
    pub defect_history: Vec<f64>,
}

/// Conformally parametrize the star-shaped surface `{ρ(p) p}`.
pub fn conformalize(rho: &ScalarField) -> Result<Conformalization> {
    let min = rho.values().iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::Domain(format!("radius function is not positive (min {min:.3e})")));
    }
    let mean = rho.integrate() / (4.0 * std::f64::consts::PI);
    let dev = rho.map(|r| r - mean).sobolev_norm(2);
    if dev > RADIUS_REGIME {
        return Err(Error::OutOfRegime(format!(
            "‖ρ − ρ̄‖_W22 = {dev:.3e} exceeds {RADIUS_REGIME}"
        )));
    }
    conformalize_map(Arc::new(RadialGraph::new(rho)), rho.grid())
}

/// Trace-free part of the metric divided by its conformal factor.
fn normalized_tracefree(imm: &Immersion) -> TracelessTensorField {
    let (t11, t12): (Vec<f64>, Vec<f64>) = imm
        .metric()
        .iter()
        .map(|[g11, g12, g22]| {
            let half_trace = 0.5 * (g11 + g22);
            (0.5 * (g11 - g22) / half_trace, g12 / half_trace)
        })
        .unzip();
    TracelessTensorField::new(imm.grid(), t11, t12)
}

/// Conformally reparametrize an arbitrary surface map sampled on `grid`.
pub fn conformalize_map(base: Arc<dyn SurfaceMap>, grid: &Grid) -> Result<Conformalization> {
    let mut potentials = Potentials::zeros(grid);
    let mut history = Vec::new();
    let mut increases = 0;
    let mut iteration = 0;
    loop {
        let map: Arc<dyn SurfaceMap> = if iteration == 0 {
            base.clone()
        } else {
            Arc::new(Reparametrized {
                base: base.clone(),
                w: potentials.field(grid),
            })
        };
        let imm = Immersion::new(&map.sample(grid))?;
        let defect = imm.conformal_defect();
        let prev = history.last().copied();
        history.push(defect);
        if let Some(prev) = prev {
            increases = if defect > prev * (1.0 + SIGNIFICANT_INCREASE) {
                increases + 1
            } else {
                0
            };
        }
        if increases >= 2 {
            return Err(Error::ConformalizationFailed {
                iteration,
                history,
            });
        }
        let stalled = increases == 0 && prev.is_some_and(|p| defect > STALL_RATIO * p);
        if defect <= CONFORMAL_TOLERANCE || iteration >= MAX_CONFORMAL_ITERATIONS || stalled {
            return Ok(Conformalization {
                map,
                immersion: imm,
                iterations: iteration,
                defect_history: history,
            });
        }
        let step = cr_solve_detailed(&normalized_tracefree(&imm))?;
        for (a, d) in potentials.alpha.iter_mut().zip(&step.potentials.alpha) {
            *a -= d;
        }
        for (b, d) in potentials.beta.iter_mut().zip(&step.potentials.beta) {
            *b -= d;
        }
        iteration += 1;
    }
}

//! Gauge fixing: minimize `𝓔(a, M) = ∫ |f ∘ M + a − f₀|² dx` over translations
//! `a` and Möbius transformations `M = R ∘ φ_v`.
//!
//! The composition `f ∘ M` is sampled exactly at the warped nodes and projected
//! back onto the grid band limit. Updates are right-multiplicative,
//! `M ← M ∘ exp(ω̂) ∘ φ_b`, whose derivative at the identity is the conformal
//! Killing field `ω × x + 2∇(b·x)`. Each Gauss–Newton step solves a 9×9 system.

use std::sync::Arc;

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::{Placed, SurfaceMap};
use crate::mobius::{MobiusElement, BOUNDARY_MARGIN};
use crate::spectral::{AmbientField, Grid};
use crate::tangent::{ckf_basis, decompose};
use crate::vec3::{add, axpy, cross, dot, norm, scale, sub, V3};

pub const MAX_GAUGE_ITERATIONS: usize = 200;
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
pub const TRANSLATION_BOUND: f64 = 10.0;
/// Largest admissible `‖f − f₀‖_{L∞}`.
pub const GAUGE_REGIME: f64 = 0.5;
pub const RESTARTS: usize = 8;

type Mat9 = SMatrix<f64, 9, 9>;
type Vec9 = SVector<f64, 9>;

/// Translation and Möbius part of a gauge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeParams {
    pub mobius: MobiusElement,
    pub a: V3,
}

impl Default for GaugeParams {
    fn default() -> Self {
        Self {
            mobius: MobiusElement::identity(),
            a: [0.0; 3],
        }
    }
}

impl GaugeParams {
    fn check(&self) -> Result<()> {
        if self.mobius.v_norm() > 1.0 - BOUNDARY_MARGIN {
            return Err(Error::Domain(format!(
                "|v| = {} exceeds 1 − {BOUNDARY_MARGIN}",
                self.mobius.v_norm()
            )));
        }
        if norm(self.a) > TRANSLATION_BOUND {
            return Err(Error::Domain(format!(
                "|a| = {} exceeds {TRANSLATION_BOUND}",
                norm(self.a)
            )));
        }
        Ok(())
    }
}

/// `f ∘ M` sampled at the nodes and projected onto the grid band limit.
fn compose(map: &dyn SurfaceMap, grid: &Grid, mobius: &MobiusElement) -> AmbientField {
    let warped: Vec<V3> = grid.points().iter().map(|p| mobius.apply(*p)).collect();
    AmbientField::from_vecs(grid, map.eval_many(&warped)).band_limited()
}

fn energy_of(composed: &AmbientField, a: V3) -> f64 {
    let grid = composed.grid();
    let pts = grid.points();
    let w = grid.weights();
    (0..grid.len())
        .map(|i| {
            let r = sub(add(composed.at(i), a), pts[i]);
            w[i] * dot(r, r)
        })
        .sum()
}

/// `𝓔(a, M)` for a band-limited `f`.
pub fn gauge_energy(f: &AmbientField, params: &GaugeParams) -> Result<f64> {
    params.check()?;
    Ok(energy_of(&compose(f, f.grid(), &params.mobius), params.a))
}

/// A stationary point of the gauge energy.
#[derive(Debug, Clone)]
pub struct GaugeResult {
    pub params: GaugeParams,
    /// `f̃ = f ∘ M + a` on the grid.
    pub normalized: AmbientField,
    /// The same map, evaluable off the grid.
    pub map: Arc<dyn SurfaceMap>,
    pub energy: f64,
    pub identity_energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// Fraction of `‖f ∘ M‖²` carried by degrees above `L − 2`.
    pub aliasing: f64,
}

struct Iterate {
    params: GaugeParams,
    composed: AmbientField,
    energy: f64,
}

impl Iterate {
    fn new(map: &dyn SurfaceMap, grid: &Grid, params: GaugeParams) -> Self {
        let composed = compose(map, grid, &params.mobius);
        let energy = energy_of(&composed, params.a);
        Self {
            params,
            composed,
            energy,
        }
    }
}

/// Normal equations `JᵀWJ`, `JᵀWr` of the residual `r = F + a − x`.
fn normal_equations(it: &Iterate) -> (Mat9, Vec9) {
    let f = &it.composed;
    let grid = f.grid();
    let (d1, d2) = f.frame_derivatives();
    let pts = grid.points();
    let w = grid.weights();
    let mut jtj = Mat9::zeros();
    let mut jtr = Vec9::zeros();
    let unit = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for i in 0..grid.len() {
        let x = pts[i];
        let (e1, e2) = grid.frame(i);
        let r = sub(add(f.at(i), it.params.a), x);
        let push = |t: V3| add(scale(d1[i], dot(t, e1)), scale(d2[i], dot(t, e2)));
        let mut cols = [[0.0; 3]; 9];
        for k in 0..3 {
            cols[k] = unit[k];
            cols[3 + k] = push(cross(unit[k], x));
            cols[6 + k] = push(scale(sub(unit[k], scale(x, x[k])), 2.0));
        }
        for p in 0..9 {
            jtr[p] += w[i] * dot(cols[p], r);
            for q in p..9 {
                jtj[(p, q)] += w[i] * dot(cols[p], cols[q]);
            }
        }
    }
    for p in 0..9 {
        for q in 0..p {
            jtj[(p, q)] = jtj[(q, p)];
        }
    }
    (jtj, jtr)
}

fn step_params(params: &GaugeParams, delta: &Vec9, alpha: f64) -> GaugeParams {
    let d = |k: usize| [delta[k] * alpha, delta[k + 1] * alpha, delta[k + 2] * alpha];
    let mobius = params.mobius.compose(&MobiusElement::local(d(3), d(6)));
    GaugeParams {
        mobius,
        a: add(params.a, d(0)),
    }
}

struct RunOutcome {
    best: Iterate,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
}

fn gauss_newton(map: &dyn SurfaceMap, grid: &Grid, start: GaugeParams) -> RunOutcome {
    let mut it = Iterate::new(map, grid, start);
    let mut gradient_norm = f64::INFINITY;
    for iteration in 0..=MAX_GAUGE_ITERATIONS {
        let (jtj, jtr) = normal_equations(&it);
        gradient_norm = 2.0 * jtr.norm();
        if gradient_norm <= GRADIENT_TOLERANCE {
            return RunOutcome {
                best: it,
                gradient_norm,
                iterations: iteration,
                converged: true,
            };
        }
        if iteration == MAX_GAUGE_ITERATIONS {
            break;
        }
        let Some(delta) = jtj.cholesky().map(|c| -c.solve(&jtr)) else {
            break;
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let params = step_params(&it.params, &delta, alpha);
            if params.check().is_ok() {
                let cand = Iterate::new(map, grid, params);
                if cand.energy <= it.energy * (1.0 + 1e-12) {
                    accepted = Some(cand);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(cand) => it = cand,
            None => break,
        }
    }
    RunOutcome {
        best: it,
        gradient_norm,
        iterations: MAX_GAUGE_ITERATIONS,
        converged: false,
    }
}

fn random_start(rng: &mut ChaCha8Rng) -> GaugeParams {
    let mut ball = |r: f64| -> V3 {
        loop {
            let p = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            if dot(p, p) <= 1.0 {
                return scale(p, r);
            }
        }
    };
    let omega = ball(0.2);
    let v = ball(0.1);
    let a = ball(0.05);
    GaugeParams {
        mobius: MobiusElement::local(omega, v),
        a,
    }
}

/// Gauge-fix a band-limited field.
pub fn minimize_gauge(f: &AmbientField) -> Result<GaugeResult> {
    minimize_gauge_map(Arc::new(f.band_limited()), f.grid(), 0)
}

/// Gauge-fix a surface map sampled on `grid`; `seed` drives the restarts.
pub fn minimize_gauge_map(map: Arc<dyn SurfaceMap>, grid: &Grid, seed: u64) -> Result<GaugeResult> {
    let sampled = map.sample(grid);
    let deviation = sampled.sub(&AmbientField::identity(grid)).sup_norm();
    if deviation > GAUGE_REGIME {
        return Err(Error::OutOfRegime(format!(
            "‖f − f₀‖_L∞ = {deviation:.3e} exceeds {GAUGE_REGIME}"
        )));
    }
    let identity = Iterate::new(map.as_ref(), grid, GaugeParams::default());
    let identity_energy = identity.energy;

    let mut outcome = gauss_newton(map.as_ref(), grid, GaugeParams::default());
    let mut restarts = 0;
    if !outcome.converged {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let starts: Vec<GaugeParams> = (0..RESTARTS).map(|_| random_start(&mut rng)).collect();
        let runs: Vec<RunOutcome> = starts
            .into_par_iter()
            .map(|s| gauss_newton(map.as_ref(), grid, s))
            .collect();
        restarts = RESTARTS;
        let mut candidates: Vec<RunOutcome> = runs
            .into_iter()
            .filter(|r| r.converged && r.best.energy <= identity_energy)
            .collect();
        candidates.sort_by(|a, b| a.best.energy.total_cmp(&b.best.energy));
        match candidates.into_iter().next() {
            Some(best) => outcome = best,
            None => {
                return Err(Error::OptimizationFailed {
                    iterations: outcome.iterations,
                    gradient_norm: outcome.gradient_norm,
                    best_energy: outcome.best.energy,
                })
            }
        }
    }
    let it = outcome.best;
    let params = it.params;
    let normalized = it.composed.add(&AmbientField::constant(grid, params.a));
    let aliasing = {
        let l = grid.band_limit();
        let mut hi = 0.0;
        let mut total = 0.0;
        for c in it.composed.components() {
            for (deg, e) in c.coeffs().degree_energy().into_iter().enumerate() {
                total += e;
                if deg + 2 > l {
                    hi += e;
                }
            }
        }
        if total > 0.0 {
            hi / total
        } else {
            0.0
        }
    };
    Ok(GaugeResult {
        map: Arc::new(Placed {
            base: map,
            mobius: params.mobius,
            scale: 1.0,
            translation: params.a,
        }),
        params,
        normalized,
        energy: it.energy,
        identity_energy,
        gradient_norm: outcome.gradient_norm,
        iterations: outcome.iterations,
        restarts,
        aliasing,
    })
}

/// Orthogonality residuals of a deviation `h = f̃ − f₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthogonalityResiduals {
    pub r_const: V3,
    pub r_rot: V3,
    pub r_grad: V3,
    pub r_zx: V3,
}

impl OrthogonalityResiduals {
    /// Largest absolute entry of `r_rot`, `r_grad`, `r_zx`.
    pub fn max_abs(&self) -> f64 {
        self.r_rot
            .iter()
            .chain(&self.r_grad)
            .chain(&self.r_zx)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max_i |r_grad_i + r_zx_i − (r_const)_i|`, zero for every `h`.
    pub fn relation_defect(&self) -> f64 {
        (0..3)
            .map(|i| (self.r_grad[i] + self.r_zx[i] - self.r_const[i]).abs())
            .fold(0.0, f64::max)
    }
}

pub fn orthogonality_residuals(h: &AmbientField) -> OrthogonalityResiduals {
    let grid = h.grid();
    let dec = decompose(h);
    let basis = ckf_basis(grid);
    let mut r_rot = [0.0; 3];
    let mut r_grad = [0.0; 3];
    let mut r_zx = [0.0; 3];
    for k in 0..3 {
        r_rot[k] = dec.v.inner(&basis[k]);
        r_grad[k] = dec.v.inner(&basis[3 + k]);
        let xk = crate::spectral::ScalarField::from_fn(grid, |p| p[k]);
        r_zx[k] = dec.z.inner(&xk);
    }
    OrthogonalityResiduals {
        r_const: h.integrate(),
        r_rot,
        r_grad,
        r_zx,
    }
}

/// First-order conditions at a gauge minimizer: `∫h̃ dx` and `∫h̃ · f̃_*(X) dx`
/// for the six conformal Killing fields `X` (rotations first).
pub fn stationarity_residuals(normalized: &AmbientField) -> (V3, [f64; 6]) {
    let grid = normalized.grid();
    let h = normalized.sub(&AmbientField::identity(grid));
    let (d1, d2) = normalized.frame_derivatives();
    let basis = ckf_basis(grid);
    let w = grid.weights();
    let mut out = [0.0; 6];
    for (k, x) in basis.iter().enumerate() {
        out[k] = (0..grid.len())
            .map(|i| {
                let (e1, e2) = grid.frame(i);
                let t = x.at(i);
                let push = axpy(scale(d1[i], dot(t, e1)), dot(t, e2), d2[i]);
                w[i] * dot(h.at(i), push)
            })
            .sum();
    }
    (h.integrate(), out)
}

#![allow(dead_code)]

use cmc_rigidity::spectral::{build_grid, AmbientField, Grid, ScalarField, SpectralCoeffs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid(l: usize) -> Grid {
    build_grid(l).unwrap()
}

/// Random coefficients up to degree `l_max`, decaying like `(1+l)^-decay`.
pub fn random_coeffs(rng: &mut impl Rng, band: usize, l_max: usize, decay: f64) -> SpectralCoeffs {
    let mut c = SpectralCoeffs::zeros(band);
    for l in 0..=l_max {
        for m in -(l as i64)..=l as i64 {
            c.set(l, m, rng.gen_range(-1.0..1.0) / (1.0 + l as f64).powf(decay));
        }
    }
    c
}

pub fn random_scalar(rng: &mut impl Rng, g: &Grid, l_max: usize) -> ScalarField {
    ScalarField::from_coeffs(g, &random_coeffs(rng, g.band_limit(), l_max, 1.0)).unwrap()
}

pub fn random_ambient(rng: &mut impl Rng, g: &Grid, l_max: usize) -> AmbientField {
    AmbientField::new([
        random_scalar(rng, g, l_max),
        random_scalar(rng, g, l_max),
        random_scalar(rng, g, l_max),
    ])
}

/// Tangential projection of a random band-limited ambient field.
pub fn random_tangent(rng: &mut impl Rng, g: &Grid, l_max: usize) -> AmbientField {
    let a = random_ambient(rng, g, l_max);
    let pts = g.points().to_vec();
    a.map_vecs(|i, v| {
        let p = pts[i];
        let d = v[0] * p[0] + v[1] * p[1] + v[2] * p[2];
        [v[0] - d * p[0], v[1] - d * p[1], v[2] - d * p[2]]
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Conformalize `{ρ(p) p}`, scale to volume `4π/3` and gauge-fix.
pub fn normalized_graph(rho: &ScalarField) -> cmc_rigidity::geometry::Immersion {
    use cmc_rigidity::geometry::{Immersion, ROUND_VOLUME};
    use cmc_rigidity::maps::{Placed, SurfaceMap};
    use std::sync::Arc;

    let c = cmc_rigidity::conformal::conformalize(rho).unwrap();
    let s = (ROUND_VOLUME / c.immersion.volume()).cbrt();
    let placed: Arc<dyn SurfaceMap> = Arc::new(Placed::scaled(c.map, s));
    let g = cmc_rigidity::gauge::minimize_gauge_map(placed, rho.grid(), 0).unwrap();
    Immersion::new(&g.normalized).unwrap()
}

/// `1 + Σ t_k Y_{l_k, m_k}` on `g`.
pub fn radius(g: &Grid, terms: &[(usize, i64, f64)]) -> ScalarField {
    let mut rho = ScalarField::constant(g, 1.0);
    for &(l, m, t) in terms {
        rho = rho.add(&ScalarField::harmonic(g, l, m).unwrap().scale(t));
    }
    rho
}

/// Least-squares slope of `log|y|` against `log t`.
pub fn loglog_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let xs: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

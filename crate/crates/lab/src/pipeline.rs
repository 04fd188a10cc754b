//! Normalization pipeline: radius function → conformal parametrization →
//! volume normalization → optional pre-warp → gauge fixing → diagnostics.

use std::sync::Arc;

use serde::Serialize;

use cmc_rigidity::conformal::{conformalize, conformalize_map, CONFORMAL_TOLERANCE};
use cmc_rigidity::gauge::{minimize_gauge_map, GaugeParams};
use cmc_rigidity::geometry::{geometry_summary, willmore_threshold_check, GeometrySummary, Immersion, WillmoreThreshold, ROUND_VOLUME};
use cmc_rigidity::maps::{Placed, SurfaceMap};
use cmc_rigidity::mobius::MobiusElement;
use cmc_rigidity::rigidity::{stability_report, DiagnosticsReport};
use cmc_rigidity::spectral::{build_grid, Grid, ScalarField};
use cmc_rigidity::{Error, Result};

use crate::config::FamilyConfig;

/// Relative multiplier of `H` applied by the negative-control hook.
pub const CORRUPTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineOptions {
    /// Scale `H` by `1 + CORRUPTION` before the diagnostics.
    pub corrupt_h: bool,
}

/// Bookkeeping of the normalization steps.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineTrace {
    pub conformal_iterations: usize,
    pub conformal_history: Vec<f64>,
    pub volume_scale: f64,
    pub gauge: GaugeParams,
    pub gauge_iterations: usize,
    pub gauge_restarts: usize,
    pub gauge_gradient_norm: f64,
    pub reconformalized: bool,
}

/// A conformal, volume-normalized, gauge-fixed immersion.
#[derive(Debug, Clone)]
pub struct NormalizedSurface {
    pub t: f64,
    pub immersion: Immersion,
    pub geometry: GeometrySummary,
    pub threshold: WillmoreThreshold,
    pub trace: PipelineTrace,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub t: f64,
    pub immersion: Immersion,
    pub report: DiagnosticsReport,
    pub geometry: GeometrySummary,
    pub threshold: WillmoreThreshold,
    pub trace: PipelineTrace,
}

/// `1 + t Σ amp · Y_{l,m}` on `grid`.
pub fn radius_function(config: &FamilyConfig, grid: &Grid, t: f64) -> Result<ScalarField> {
    let mut rho = ScalarField::constant(grid, 1.0);
    for mode in &config.modes {
        let y = ScalarField::harmonic(grid, mode.l, mode.m)?;
        rho = rho.add(&y.scale(t * mode.amp));
    }
    Ok(rho)
}

pub fn run_pipeline(config: &FamilyConfig, t: f64) -> Result<PipelineRun> {
    run_pipeline_with(config, t, PipelineOptions::default())
}

pub fn run_pipeline_with(config: &FamilyConfig, t: f64, options: PipelineOptions) -> Result<PipelineRun> {
    let surface = normalize(config, t, options)?;
    let report = stability_report(&surface.immersion).map_err(Error::at("report"))?;
    Ok(PipelineRun {
        t,
        immersion: surface.immersion,
        report,
        geometry: surface.geometry,
        threshold: surface.threshold,
        trace: surface.trace,
    })
}

/// Every stage before the diagnostics.
pub fn normalize(config: &FamilyConfig, t: f64, options: PipelineOptions) -> Result<NormalizedSurface> {
    config.validate().map_err(Error::at("config"))?;
    config.check_amplitude(t).map_err(Error::at("config"))?;
    let grid = build_grid(config.band_limit).map_err(Error::at("grid"))?;

    let rho = radius_function(config, &grid, t).map_err(Error::at("radius"))?;
    let conf = conformalize(&rho).map_err(Error::at("conformalize"))?;
    let volume = conf.immersion.volume();
    if !(volume > 0.0) {
        return Err(Error::at("volume")(Error::Orientation(volume)));
    }
    let volume_scale = (ROUND_VOLUME / volume).cbrt();

    let warp = config.pre_warp.unwrap_or_default();
    let mobius = MobiusElement::from_axis_angle(warp.rotation, warp.v).map_err(Error::at("pre_warp"))?;
    let placed: Arc<dyn SurfaceMap> = Arc::new(Placed {
        base: conf.map.clone(),
        mobius,
        scale: volume_scale,
        translation: warp.translation,
    });

    let mut gauge = minimize_gauge_map(placed, &grid, config.seed).map_err(Error::at("gauge"))?;
    let mut imm = Immersion::new(&gauge.normalized).map_err(Error::at("gauge"))?;
    let mut conformal_iterations = conf.iterations;
    let mut conformal_history = conf.defect_history.clone();
    let before = conf.immersion.conformal_defect();
    let reconformalized = imm.conformal_defect() > CONFORMAL_TOLERANCE.max(before);
    if reconformalized {
        let again = conformalize_map(gauge.map.clone(), &grid).map_err(Error::at("reconformalize"))?;
        conformal_iterations += again.iterations;
        conformal_history.extend(again.defect_history);
        gauge = minimize_gauge_map(again.map, &grid, config.seed).map_err(Error::at("regauge"))?;
        imm = Immersion::new(&gauge.normalized).map_err(Error::at("regauge"))?;
    }
    if options.corrupt_h {
        imm = imm.with_corrupted_mean_curvature(CORRUPTION);
    }

    let geometry = geometry_summary(&imm);
    let threshold = willmore_threshold_check(&imm, config.alpha).map_err(Error::at("threshold"))?;
    Ok(NormalizedSurface {
        t,
        geometry,
        threshold,
        trace: PipelineTrace {
            conformal_iterations,
            conformal_history,
            volume_scale,
            gauge: gauge.params,
            gauge_iterations: gauge.iterations,
            gauge_restarts: gauge.restarts,
            gauge_gradient_norm: gauge.gradient_norm,
            reconformalized,
        },
        immersion: imm,
    })
}

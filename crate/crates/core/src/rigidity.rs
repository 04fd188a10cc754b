//! Energy identities, expansion residuals, coercivity checks and the rigidity
//! ratio `(‖h‖_{W^{2,2}} + ‖u‖_{L∞}) / ‖H − H̄‖_{L²}` for a normalized immersion.
//!
//! `h = f − f₀` is always the deviation of the band-limited immersion from the
//! identity, `z = h · x` its normal part. `z` has one degree more than `h`, so
//! quantities quadratic in `z` are evaluated on the grid of twice the band
//! limit, where they are integrated exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::{orthogonality_residuals, OrthogonalityResiduals};
use crate::geometry::{geometry_summary, h2_splitting_residual, minkowski_residual, Immersion, ROUND_VOLUME};
use crate::spectral::{eigenvalue, AmbientField, Grid, ScalarField};
use crate::tangent::{decompose, nu_residual, Decomposition};
use crate::vec3::dot;

/// Largest admissible `‖h‖_{W^{2,2}}` for a stability report.
pub const DELTA_REGIME: f64 = 0.5;
/// Largest conformal defect accepted by [`stability_report`].
pub const REPORT_CONFORMAL_DEFECT: f64 = 1e-6;
/// Largest `|vol − 4π/3|` accepted as volume-normalized.
pub const VOLUME_TOLERANCE: f64 = 1e-8;
/// Below this CMC defect (or the calibrated round-sphere floor) the rigidity ratio is undefined.
pub const RATIO_FLOOR: f64 = 1e-12;
/// Pointwise tolerance of the conformal-factor identity.
pub const CONFORMAL_FACTOR_TOLERANCE: f64 = 1e-6;
/// Safety factor over the round-sphere residual for discretization-limited checks.
pub const CALIBRATION_FACTOR: f64 = 10.0;

fn check_volume(imm: &Immersion) -> Result<f64> {
    let vol = imm.volume();
    if (vol - ROUND_VOLUME).abs() > VOLUME_TOLERANCE {
        return Err(Error::Precondition(format!(
            "volume {vol:.12} is not normalized to 4π/3"
        )));
    }
    Ok(vol)
}

/// `Σ_{lm} l(l+1) c_{lm}² = ∫|∇a|²`, exact for band-limited `a`.
fn dirichlet(a: &ScalarField) -> f64 {
    a.coeffs()
        .degree_energy()
        .iter()
        .enumerate()
        .map(|(l, e)| eigenvalue(l) * e)
        .sum()
}

fn dirichlet_ambient(h: &AmbientField) -> f64 {
    h.components().iter().map(dirichlet).sum()
}

/// The normal part `h · x` of `h` on the refined grid.
pub fn refined_normal_part(h: &AmbientField) -> ScalarField {
    let fine = h.refined();
    let grid = fine.grid().clone();
    let pts = grid.points();
    ScalarField::from_values(&grid, (0..grid.len()).map(|i| dot(fine.at(i), pts[i])).collect())
}

/// Three evaluations of `E[h] = ∫|∇(f₀ + h)|² − ∫|∇f₀|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyExcess {
    /// Pointwise quadrature of the definition.
    pub e_def: f64,
    /// `4∫z + ∫|∇h|²`.
    pub e_id1: f64,
    /// `−2∫Δ(f₀ + h) · h − ∫|∇h|²`.
    pub e_id2: f64,
}

impl EnergyExcess {
    /// Largest pairwise difference relative to `1 + |E_def|`.
    pub fn disagreement(&self) -> f64 {
        let d = (self.e_def - self.e_id1)
            .abs()
            .max((self.e_def - self.e_id2).abs())
            .max((self.e_id1 - self.e_id2).abs());
        d / (1.0 + self.e_def.abs())
    }
}

pub fn energy_excess(h: &AmbientField, dec: &Decomposition) -> EnergyExcess {
    let grid = h.grid();
    let grad_h = dirichlet_ambient(h);

    let fine = h.refined();
    let fg = fine.grid().clone();
    let pts = fg.points();
    let full = fine.map_vecs(|i, v| [v[0] + pts[i][0], v[1] + pts[i][1], v[2] + pts[i][2]]);
    let mut density = vec![-2.0; fg.len()];
    for c in full.components() {
        let g = c.surface_gradient();
        for (d, v) in density.iter_mut().zip(g.to_vecs()) {
            *d += dot(v, v);
        }
    }
    let e_def = ScalarField::from_values(&fg, density).integrate();

    let e_id1 = 4.0 * dec.z.integrate() + grad_h;

    let x = AmbientField::identity(grid);
    let lap = x.scale(-2.0).add(&h.laplacian());
    let e_id2 = -2.0 * lap.inner(h) - grad_h;

    EnergyExcess { e_def, e_id1, e_id2 }
}

/// `∫z + ∫z²` and the flux form of the volume constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeBalance {
    pub value: f64,
    /// `∫(f · f₁×f₂ − f₀ · (f₀)₁×(f₀)₂) dx`, zero at normalized volume.
    pub flux_residual: f64,
}

pub fn volume_balance(dec: &Decomposition, imm: &Immersion) -> Result<VolumeBalance> {
    check_volume(imm)?;
    let z = refined_normal_part(&dec.h);
    let value = z.integrate() + z.inner(&z);
    let grid = imm.grid();
    let (f1, f2) = imm.tangents();
    let f = imm.f();
    let flux = ScalarField::from_values(
        grid,
        (0..grid.len())
            .map(|i| {
                let c = crate::vec3::cross(f1[i], f2[i]);
                dot(f.at(i), c) - 1.0
            })
            .collect(),
    );
    Ok(VolumeBalance {
        value,
        flux_residual: flux.integrate().abs(),
    })
}

/// `∫|∇h|² − ∫(|∇z|² + 2z²)` and the pointwise check of `|∇(zn)|² = |∇z|² + 2z²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradExpansion {
    pub residual: f64,
    pub pointwise_max: f64,
}

pub fn grad_expansion_residual(h: &AmbientField, _dec: &Decomposition) -> GradExpansion {
    let z = refined_normal_part(h);
    let residual = dirichlet_ambient(h) - dirichlet(&z) - 2.0 * z.inner(&z);

    let grid = z.grid().clone();
    let pts = grid.points();
    let zn = AmbientField::from_vecs(
        &grid,
        (0..grid.len())
            .map(|i| {
                let s = z.values()[i];
                [s * pts[i][0], s * pts[i][1], s * pts[i][2]]
            })
            .collect(),
    );
    let (d1, d2) = zn.frame_derivatives();
    let (zt, zp) = z.frame_gradient();
    let pointwise_max = (0..grid.len())
        .map(|i| {
            let lhs = dot(d1[i], d1[i]) + dot(d2[i], d2[i]);
            let s = z.values()[i];
            (lhs - zt[i] * zt[i] - zp[i] * zp[i] - 2.0 * s * s).abs()
        })
        .fold(0.0, f64::max);
    GradExpansion {
        residual,
        pointwise_max,
    }
}

/// `Q(z) = ∫(|∇z|² − 2z²)` and the spectral gap above the first eigenspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadFormGap {
    pub qz: f64,
    /// `∫|∇z'|² − 6∫z'²` with `z' = z − P_{≤1} z`.
    pub gap_residual: f64,
    /// `‖P_{≤1} z‖_{L²}`.
    pub low_mode_norm: f64,
}

pub fn quad_form_and_gap(z: &ScalarField) -> QuadFormGap {
    let energy = z.coeffs().degree_energy();
    let qz = energy
        .iter()
        .enumerate()
        .map(|(l, e)| (eigenvalue(l) - 2.0) * e)
        .sum();
    let gap_residual = energy
        .iter()
        .enumerate()
        .skip(2)
        .map(|(l, e)| (eigenvalue(l) - 6.0) * e)
        .sum();
    let low_mode_norm = energy.iter().take(2).sum::<f64>().sqrt();
    QuadFormGap {
        qz,
        gap_residual,
        low_mode_norm,
    }
}

/// Control of `H̄ − 2` through the support function `φ = n_f · f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HbarControl {
    pub hbar_minus_2: f64,
    pub phi_bar_minus_1: f64,
    /// `‖H − H̄‖_{L²(dμ)} ‖φ − φ̄‖_{L²(dμ)} / area`.
    pub fluct_bound: f64,
    /// `|(2 − H̄φ̄)·area − ∫(H − H̄)(φ − φ̄) dμ|`.
    pub identity_residual: f64,
}

pub fn hbar_control(imm: &Immersion) -> Result<HbarControl> {
    check_volume(imm)?;
    let area = imm.area();
    let h = imm.mean_curvature();
    let phi = imm.f().dot(imm.normal());
    let h_bar = imm.integrate_area(h) / area;
    let phi_bar = imm.integrate_area(&phi) / area;
    let dh = h.map(|v| v - h_bar);
    let dphi = phi.map(|v| v - phi_bar);
    let cross = imm.integrate_area(&dh.mul(&dphi));
    let h_fluct = imm.integrate_area(&dh.mul(&dh)).max(0.0).sqrt();
    let phi_fluct = imm.integrate_area(&dphi.mul(&dphi)).max(0.0).sqrt();
    Ok(HbarControl {
        hbar_minus_2: h_bar - 2.0,
        phi_bar_minus_1: phi_bar - 1.0,
        fluct_bound: h_fluct * phi_fluct / area,
        identity_residual: ((2.0 - h_bar * phi_bar) * area - cross).abs(),
    })
}

/// `∫|H⃗ + 2f|² dμ` with `H⃗ = −H n_f`, split as `∫(|H⃗|² − 4) + 4∫(|f|² − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VecDefect {
    pub total: f64,
    pub term_h2_minus_4: f64,
    pub term_x2_minus_1: f64,
    /// `|total − term_h2_minus_4 − 4 term_x2_minus_1|`.
    pub reduction_residual: f64,
}

pub fn vec_defect(imm: &Immersion) -> Result<VecDefect> {
    check_volume(imm)?;
    let h = imm.mean_curvature();
    let f = imm.f();
    let n = imm.normal();
    let grid = imm.grid();
    let density = ScalarField::from_values(
        grid,
        (0..grid.len())
            .map(|i| {
                let (fv, nv, hv) = (f.at(i), n.at(i), h.values()[i]);
                (0..3).map(|k| (2.0 * fv[k] - hv * nv[k]).powi(2)).sum()
            })
            .collect(),
    );
    let total = imm.integrate_area(&density);
    let term_h2_minus_4 = imm.integrate_area(&h.map(|v| v * v - 4.0));
    let term_x2_minus_1 = imm.integrate_area(&f.norm_sq().map(|v| v - 1.0));
    Ok(VecDefect {
        total,
        term_h2_minus_4,
        term_x2_minus_1,
        reduction_residual: (total - term_h2_minus_4 - 4.0 * term_x2_minus_1).abs(),
    })
}

/// Low-mode averages of `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowMode {
    pub abs_int_z: f64,
    /// Euclidean norm of `(∫z x^i)_i`.
    pub abs_int_zx: f64,
}

/// Residuals of the exact identities; every entry is zero up to discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub energy_disagreement: f64,
    pub grad_pointwise: f64,
    pub flux_volume: f64,
    pub minkowski: f64,
    pub h2_splitting: f64,
    pub hbar_identity: f64,
    pub vec_reduction: f64,
    /// `‖Δh − (H⃗e^{2u} + 2f₀)‖_{L²}`.
    pub laplace_h: f64,
    /// Largest `|2(e^{2u} − 1) − 2∇f₀·∇h − |∇h|²|` at the nodes.
    pub conformal_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub band_limit: usize,
    pub delta: f64,
    pub u_inf: f64,
    pub cmc_defect: f64,
    pub h_bar: f64,
    pub e_def: f64,
    pub e_id1: f64,
    pub e_id2: f64,
    pub vol_balance: f64,
    pub grad_exp_residual: f64,
    pub quad_form_qz: f64,
    pub low_mode: LowMode,
    pub spectral_gap_residual: f64,
    pub hbar_minus_2: f64,
    pub phi_bar_minus_1: f64,
    pub vec_defect_sq: f64,
    pub nu_residual_l2: f64,
    pub nu_residual_l4: f64,
    pub orthogonality: OrthogonalityResiduals,
    /// `None` when the CMC defect is below [`RATIO_FLOOR`].
    pub rigidity_ratio: Option<f64>,
    pub ratio_defined: bool,
    /// `6 − 2(H̄ − 1)`, positive below `H̄ = 4`.
    pub coercivity_margin: f64,
    pub conformal_defect: f64,
    pub identities: IdentityResiduals,
    /// Tolerance for `identities.laplace_h` calibrated on the round sphere.
    pub tol_curv: f64,
    pub laplace_h_ok: bool,
    pub conformal_factor_ok: bool,
}

/// `‖Δh − (H⃗e^{2u} + 2f₀)‖_{L²}` and the pointwise conformal-factor residual.
fn curvature_residuals(imm: &Immersion, h: &AmbientField) -> (f64, f64) {
    let grid = imm.grid();
    let pts = grid.points();
    let lap = h.laplacian();
    let (hv, nv, jv) = (imm.mean_curvature().values(), imm.normal(), imm.area_element().values());
    let r = AmbientField::from_vecs(
        grid,
        (0..grid.len())
            .map(|i| {
                let (l, n) = (lap.at(i), nv.at(i));
                [0, 1, 2].map(|k| l[k] - (-hv[i] * n[k] * jv[i] + 2.0 * pts[i][k]))
            })
            .collect(),
    );
    let mut rhs = vec![0.0; grid.len()];
    for k in 0..3 {
        let gh = h.component(k).surface_gradient().to_vecs();
        for i in 0..grid.len() {
            let mut gx = [-pts[i][k] * pts[i][0], -pts[i][k] * pts[i][1], -pts[i][k] * pts[i][2]];
            gx[k] += 1.0;
            rhs[i] += 2.0 * dot(gx, gh[i]) + dot(gh[i], gh[i]);
        }
    }
    let conformal = (0..grid.len())
        .map(|i| (2.0 * (jv[i] - 1.0) - rhs[i]).abs())
        .fold(0.0, f64::max);
    (r.l2_norm(), conformal)
}

/// Discretization floors measured on the round sphere at a given band limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundCalibration {
    /// `‖Δh − (H⃗e^{2u} + 2f₀)‖_{L²}` of the identity map.
    pub laplace_h: f64,
    /// `‖H − H̄‖_{L²}` of the identity map.
    pub cmc_defect: f64,
}

pub fn round_calibration(grid: &Grid) -> Result<RoundCalibration> {
    let round = Immersion::new(&AmbientField::identity(grid))?;
    let (laplace_h, _) = curvature_residuals(&round, &AmbientField::zeros(grid));
    Ok(RoundCalibration {
        laplace_h,
        cmc_defect: geometry_summary(&round).cmc_defect_l2,
    })
}

/// Tolerance for the `Δh` identity: the calibrated round-sphere floor plus the
/// first-order effect of the remaining trace-free metric, bounded by the
/// largest gradient multiplier `√λ_{2L}` of the metric's band.
pub fn tol_curv(cal: &RoundCalibration, band_limit: usize, conformal_defect: f64) -> f64 {
    CALIBRATION_FACTOR * cal.laplace_h + eigenvalue(2 * band_limit).sqrt() * conformal_defect
}

/// Full diagnostics of a gauge-normalized, volume-normalized conformal immersion.
pub fn stability_report(imm: &Immersion) -> Result<DiagnosticsReport> {
    if imm.conformal_defect() > REPORT_CONFORMAL_DEFECT {
        return Err(Error::Gauge(format!(
            "conformal defect {:.3e} exceeds {REPORT_CONFORMAL_DEFECT:e}",
            imm.conformal_defect()
        )));
    }
    let delta = imm.f().sub(&AmbientField::identity(imm.grid())).sobolev_norm(2);
    if delta > DELTA_REGIME {
        return Err(Error::OutOfRegime(format!(
            "‖h‖_W22 = {delta:.3e} exceeds {DELTA_REGIME}"
        )));
    }
    diagnostics(imm)
}

/// Every field of the report without the regime and conformality gates.
///
/// The exact identities hold for any volume-normalized immersion; only the
/// scaling quantities need the perturbative regime to be meaningful.
pub fn diagnostics(imm: &Immersion) -> Result<DiagnosticsReport> {
    let grid = imm.grid().clone();
    let h = imm.f().sub(&AmbientField::identity(&grid));
    let delta = h.sobolev_norm(2);
    let dec = decompose(&h);
    let summary = geometry_summary(imm);
    let energy = energy_excess(&h, &dec);
    let vol = volume_balance(&dec, imm)?;
    let grad = grad_expansion_residual(&h, &dec);
    let z_fine = refined_normal_part(&h);
    let quad = quad_form_and_gap(&z_fine);
    let hbar = hbar_control(imm)?;
    let vecd = vec_defect(imm)?;
    let nu = nu_residual(imm, &dec);
    let orthogonality = orthogonality_residuals(&h);
    let (laplace_h, conformal_factor) = curvature_residuals(imm, &h);

    let zx: Vec<f64> = (0..3)
        .map(|k| {
            let xk = ScalarField::from_fn(z_fine.grid(), |p| p[k]);
            z_fine.inner(&xk)
        })
        .collect();
    let low_mode = LowMode {
        abs_int_z: z_fine.integrate().abs(),
        abs_int_zx: zx.iter().map(|v| v * v).sum::<f64>().sqrt(),
    };

    let cal = round_calibration(&grid)?;
    let u_inf = imm.conformal_factor().sup_norm();
    let cmc_defect = summary.cmc_defect_l2;
    let ratio_defined = cmc_defect > RATIO_FLOOR.max(CALIBRATION_FACTOR * cal.cmc_defect);
    let curv_tol = tol_curv(&cal, grid.band_limit(), imm.conformal_defect());
    let rigidity_ratio = ratio_defined.then(|| (delta + u_inf) / cmc_defect);

    Ok(DiagnosticsReport {
        band_limit: grid.band_limit(),
        delta,
        u_inf,
        cmc_defect,
        h_bar: summary.h_bar,
        e_def: energy.e_def,
        e_id1: energy.e_id1,
        e_id2: energy.e_id2,
        vol_balance: vol.value,
        grad_exp_residual: grad.residual,
        quad_form_qz: quad.qz,
        low_mode,
        spectral_gap_residual: quad.gap_residual,
        hbar_minus_2: hbar.hbar_minus_2,
        phi_bar_minus_1: hbar.phi_bar_minus_1,
        vec_defect_sq: vecd.total,
        nu_residual_l2: nu.residual_l2,
        nu_residual_l4: nu.residual_l4,
        orthogonality,
        rigidity_ratio,
        ratio_defined,
        coercivity_margin: 6.0 - 2.0 * (summary.h_bar - 1.0),
        conformal_defect: imm.conformal_defect(),
        identities: IdentityResiduals {
            energy_disagreement: energy.disagreement(),
            grad_pointwise: grad.pointwise_max,
            flux_volume: vol.flux_residual,
            minkowski: minkowski_residual(imm).abs(),
            h2_splitting: h2_splitting_residual(imm).abs(),
            hbar_identity: hbar.identity_residual,
            vec_reduction: vecd.reduction_residual,
            laplace_h,
            conformal_factor,
        },
        tol_curv: curv_tol,
        laplace_h_ok: laplace_h <= curv_tol,
        conformal_factor_ok: conformal_factor <= CONFORMAL_FACTOR_TOLERANCE,
    })
}

//! Tangent/normal splitting of deviations `h = f − f₀`, the conformal Killing
//! fields, the Cauchy–Riemann operator `D v = (𝓛_v g)₀` and its least-squares
//! inverse, and the quadratic form `Q(dh)`.
//!
//! Tangent fields are ambient `R³`-valued fields with `v · x = 0`. Trace-free
//! tensors are stored by their components in the frame `e₁ = e_θ`, `e₂ = e_φ`,
//! with `T₂₂ = −T₁₁`; their pointwise norm is Frobenius, `|T|² = 2(T₁₁² + T₁₂²)`.

use nalgebra::{DMatrix, Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::geometry::Immersion;
use crate::spectral::{eigenvalue, AmbientField, Grid, ScalarField};
use crate::vec3::{add, cross, dot, scale, sub, V3};

/// Maximum `|v · n|` accepted as tangent.
pub const TANGENCY_TOLERANCE: f64 = 1e-8;
pub const CG_MAX_ITERATIONS: usize = 500;
const CG_RELATIVE_TOLERANCE: f64 = 1e-13;

/// `h = v + z n` with `n = f₀`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub v: AmbientField,
    pub z: ScalarField,
    pub h: AmbientField,
}

pub fn decompose(h: &AmbientField) -> Decomposition {
    let grid = h.grid();
    let pts = grid.points();
    let z: Vec<f64> = (0..grid.len()).map(|i| dot(h.at(i), pts[i])).collect();
    let v = h.map_vecs(|i, hv| sub(hv, scale(pts[i], z[i])));
    Decomposition {
        v,
        z: ScalarField::from_values(grid, z),
        h: h.clone(),
    }
}

/// Pointwise trace-free symmetric 2-tensor in the frame `(e_θ, e_φ)`.
#[derive(Debug, Clone)]
pub struct TracelessTensorField {
    grid: Grid,
    pub t11: Vec<f64>,
    pub t12: Vec<f64>,
}

impl TracelessTensorField {
    pub fn new(grid: &Grid, t11: Vec<f64>, t12: Vec<f64>) -> Self {
        assert_eq!(t11.len(), grid.len());
        assert_eq!(t12.len(), grid.len());
        Self {
            grid: grid.clone(),
            t11,
            t12,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::new(grid, vec![0.0; grid.len()], vec![0.0; grid.len()])
    }

    /// Trace-free part of the tangential projection of ambient matrices `A(x)`.
    pub fn from_ambient(grid: &Grid, a: impl Fn(usize) -> [[f64; 3]; 3]) -> Self {
        let mut t11 = Vec::with_capacity(grid.len());
        let mut t12 = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let (e1, e2) = grid.frame(i);
            let m = a(i);
            let q = |x: V3, y: V3| -> f64 {
                (0..3).map(|r| (0..3).map(|c| x[r] * m[r][c] * y[c]).sum::<f64>()).sum()
            };
            t11.push(0.5 * (q(e1, e1) - q(e2, e2)));
            t12.push(0.5 * (q(e1, e2) + q(e2, e1)));
        }
        Self::new(grid, t11, t12)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `∫ S : T dx` with the Frobenius pairing.
    pub fn inner(&self, other: &Self) -> f64 {
        let w = self.grid.weights();
        (0..w.len())
            .map(|i| 2.0 * w[i] * (self.t11[i] * other.t11[i] + self.t12[i] * other.t12[i]))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Pointwise Frobenius norm.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        self.t11
            .iter()
            .zip(&self.t12)
            .map(|(a, b)| (2.0 * (a * a + b * b)).sqrt())
            .collect()
    }

    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        let t11 = self.t11.iter().zip(&other.t11).map(|(a, b)| a + s * b).collect();
        let t12 = self.t12.iter().zip(&other.t12).map(|(a, b)| a + s * b).collect();
        Self::new(&self.grid, t11, t12)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_by(|_| s)
    }

    pub fn scale_by(&self, s: impl Fn(usize) -> f64) -> Self {
        let t11 = self.t11.iter().enumerate().map(|(i, a)| a * s(i)).collect();
        let t12 = self.t12.iter().enumerate().map(|(i, a)| a * s(i)).collect();
        Self::new(&self.grid, t11, t12)
    }

    /// Ambient 3×3 representation `T₁₁(e₁e₁ᵀ − e₂e₂ᵀ) + T₁₂(e₁e₂ᵀ + e₂e₁ᵀ)`.
    pub fn ambient(&self, i: usize) -> [[f64; 3]; 3] {
        let (e1, e2) = self.grid.frame(i);
        let (a, b) = (self.t11[i], self.t12[i]);
        let mut m = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = a * (e1[r] * e1[c] - e2[r] * e2[c]) + b * (e1[r] * e2[c] + e2[r] * e1[c]);
            }
        }
        m
    }
}

/// Rotation generators `A_k x = e_k × x` followed by the gradients `∇x^k`.
pub fn ckf_basis(grid: &Grid) -> [AmbientField; 6] {
    let e = |k: usize| {
        let mut v = [0.0; 3];
        v[k] = 1.0;
        v
    };
    let rot = |k: usize| AmbientField::from_fn(grid, |p| cross(e(k), p));
    let grad = |k: usize| AmbientField::from_fn(grid, |p| sub(e(k), scale(p, p[k])));
    [rot(0), rot(1), rot(2), grad(0), grad(1), grad(2)]
}

/// L²-orthogonal projection of `v` onto the span of the conformal Killing fields.
pub fn kernel_projection(v: &AmbientField) -> AmbientField {
    let basis = ckf_basis(v.grid());
    let mut gram = Matrix6::zeros();
    let mut rhs = Vector6::zeros();
    for a in 0..6 {
        rhs[a] = basis[a].inner(v);
        for b in 0..6 {
            gram[(a, b)] = basis[a].inner(&basis[b]);
        }
    }
    let c = gram.lu().solve(&rhs).unwrap_or_else(Vector6::zeros);
    let mut out = AmbientField::zeros(v.grid());
    for a in 0..6 {
        out = out.add(&basis[a].scale(c[a]));
    }
    out
}

fn check_tangent(v: &AmbientField) -> Result<()> {
    let pts = v.grid().points();
    let worst = (0..v.len()).map(|i| dot(v.at(i), pts[i]).abs()).fold(0.0, f64::max);
    if worst > TANGENCY_TOLERANCE {
        return Err(Error::Domain(format!(
            "vector field is not tangent: max |v·n| = {worst:.3e}"
        )));
    }
    Ok(())
}

/// `(Dv)₁₁ = v_{1,1} − v_{2,2}`, `(Dv)₁₂ = v_{1,2} + v_{2,1}` with `v_{i,j} = e_i · ∂_{e_j} v`.
pub fn cr_apply(v: &AmbientField) -> Result<TracelessTensorField> {
    check_tangent(v)?;
    let grid = v.grid();
    let (d1, d2) = v.frame_derivatives();
    let mut t11 = Vec::with_capacity(grid.len());
    let mut t12 = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (e1, e2) = grid.frame(i);
        t11.push(dot(e1, d1[i]) - dot(e2, d2[i]));
        t12.push(dot(e1, d2[i]) + dot(e2, d1[i]));
    }
    Ok(TracelessTensorField::new(grid, t11, t12))
}

/// Formal adjoint `D*T = −2 div T` for the Frobenius L² pairing.
pub fn cr_adjoint(t: &TracelessTensorField) -> AmbientField {
    let grid = t.grid();
    let n = grid.len();
    let mats: Vec<[[f64; 3]; 3]> = (0..n).map(|i| t.ambient(i)).collect();
    let mut div = vec![[0.0; 3]; n];
    for a in 0..3 {
        for b in 0..3 {
            let comp = ScalarField::from_values(grid, mats.iter().map(|m| m[a][b]).collect());
            let g = comp.surface_gradient();
            for (i, d) in div.iter_mut().enumerate() {
                d[a] += g.at(i)[b];
            }
        }
    }
    let pts = grid.points();
    let out = (0..n)
        .map(|i| {
            let d = div[i];
            scale(sub(d, scale(pts[i], dot(d, pts[i]))), -2.0)
        })
        .collect();
    AmbientField::from_vecs(grid, out)
}

/// `Q₁₁ = −½(|h₁|² − |h₂|²)`, `Q₁₂ = −h₁ · h₂` with `h_i = dh(e_i)`.
pub fn q_form(h: &AmbientField) -> TracelessTensorField {
    let (h1, h2) = h.frame_derivatives();
    let t11 = (0..h.len())
        .map(|i| -0.5 * (dot(h1[i], h1[i]) - dot(h2[i], h2[i])))
        .collect();
    let t12 = (0..h.len()).map(|i| -dot(h1[i], h2[i])).collect();
    TracelessTensorField::new(h.grid(), t11, t12)
}

/// Pointwise `|dh|² = |h₁|² + |h₂|²`.
pub fn dh_norm_sq(h: &AmbientField) -> Vec<f64> {
    let (h1, h2) = h.frame_derivatives();
    (0..h.len()).map(|i| dot(h1[i], h1[i]) + dot(h2[i], h2[i])).collect()
}

/// Tangent field `∇α + n × ∇β` given by two scalar potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Potentials {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            alpha: vec![0.0; grid.n_coeffs()],
            beta: vec![0.0; grid.n_coeffs()],
        }
    }

    fn axpy(&mut self, s: f64, other: &Self) {
        for (a, b) in self.alpha.iter_mut().zip(&other.alpha) {
            *a += s * b;
        }
        for (a, b) in self.beta.iter_mut().zip(&other.beta) {
            *a += s * b;
        }
    }

    fn dot(&self, other: &Self) -> f64 {
        let a: f64 = self.alpha.iter().zip(&other.alpha).map(|(x, y)| x * y).sum();
        let b: f64 = self.beta.iter().zip(&other.beta).map(|(x, y)| x * y).sum();
        a + b
    }

    /// The tangent field at the grid nodes.
    pub fn field(&self, grid: &Grid) -> AmbientField {
        let at = grid.synthesize_derivative(&self.alpha, 1, 0);
        let ap = grid.synthesize_derivative(&self.alpha, 0, 1);
        let bt = grid.synthesize_derivative(&self.beta, 1, 0);
        let bp = grid.synthesize_derivative(&self.beta, 0, 1);
        let vecs = (0..grid.len())
            .map(|i| {
                let s = grid.sin_theta(i);
                let (e1, e2) = grid.frame(i);
                add(scale(e1, at[i] - bp[i] / s), scale(e2, ap[i] / s + bt[i]))
            })
            .collect();
        AmbientField::from_vecs(grid, vecs)
    }
}

/// Degrees carried by the potentials: `l = 1` is the kernel of `D`, and
/// capping at `L − 1` keeps the ambient field within the band limit.
fn potential_mask(grid: &Grid, coeffs: &mut [f64]) {
    let l_max = grid.band_limit() - 1;
    for (k, c) in coeffs.iter_mut().enumerate() {
        let l = (k as f64).sqrt() as usize;
        if l < 2 || l > l_max {
            *c = 0.0;
        }
    }
}

/// `D(∇α + n × ∇β)` evaluated at the nodes.
fn potential_apply(grid: &Grid, p: &Potentials) -> TracelessTensorField {
    let d = |c: &[f64], a: u8, b: u8| grid.synthesize_derivative(c, a, b);
    let (att, atp, app, at, ap) = (
        d(&p.alpha, 2, 0),
        d(&p.alpha, 1, 1),
        d(&p.alpha, 0, 2),
        d(&p.alpha, 1, 0),
        d(&p.alpha, 0, 1),
    );
    let (btt, btp, bpp, bt, bp) = (
        d(&p.beta, 2, 0),
        d(&p.beta, 1, 1),
        d(&p.beta, 0, 2),
        d(&p.beta, 1, 0),
        d(&p.beta, 0, 1),
    );
    let n = grid.len();
    let mut t11 = Vec::with_capacity(n);
    let mut t12 = Vec::with_capacity(n);
    for i in 0..n {
        let s = grid.sin_theta(i);
        let cot = grid.cos_theta(i) / s;
        let ha = [att[i], (atp[i] - cot * ap[i]) / s, app[i] / (s * s) + cot * at[i]];
        let hb = [btt[i], (btp[i] - cot * bp[i]) / s, bpp[i] / (s * s) + cot * bt[i]];
        t11.push(ha[0] - ha[2] - 2.0 * hb[1]);
        t12.push(2.0 * ha[1] + hb[0] - hb[2]);
    }
    TracelessTensorField::new(grid, t11, t12)
}

/// Exact transpose of [`potential_apply`] against the weighted Frobenius pairing.
fn potential_adjoint(grid: &Grid, t: &TracelessTensorField) -> Potentials {
    let n = grid.len();
    let w = grid.weights();
    let mut ch = vec![vec![0.0; n]; 10];
    for i in 0..n {
        let s = grid.sin_theta(i);
        let cot = grid.cos_theta(i) / s;
        let g11 = 2.0 * w[i] * t.t11[i];
        let g12 = 2.0 * w[i] * t.t12[i];
        ch[0][i] = g11;
        ch[1][i] = 2.0 * g12 / s;
        ch[2][i] = -g11 / (s * s);
        ch[3][i] = -cot * g11;
        ch[4][i] = -2.0 * cot * g12 / s;
        ch[5][i] = g12;
        ch[6][i] = -2.0 * g11 / s;
        ch[7][i] = -g12 / (s * s);
        ch[8][i] = -cot * g12;
        ch[9][i] = 2.0 * cot * g11 / s;
    }
    let orders = [(2, 0), (1, 1), (0, 2), (1, 0), (0, 1)];
    let mut alpha = vec![0.0; grid.n_coeffs()];
    let mut beta = vec![0.0; grid.n_coeffs()];
    for (k, &(a, b)) in orders.iter().enumerate() {
        for (acc, c) in alpha.iter_mut().zip(grid.synthesis_adjoint(&ch[k], a, b)) {
            *acc += c;
        }
        for (acc, c) in beta.iter_mut().zip(grid.synthesis_adjoint(&ch[5 + k], a, b)) {
            *acc += c;
        }
    }
    potential_mask(grid, &mut alpha);
    potential_mask(grid, &mut beta);
    Potentials { alpha, beta }
}

/// Result of the least-squares inversion of `D`.
#[derive(Debug, Clone)]
pub struct CrSolution {
    pub v: AmbientField,
    pub potentials: Potentials,
    pub iterations: usize,
    /// `‖D*(Dv − Q)‖ / ‖D*Q‖` in the coefficient norm.
    pub normal_residual: f64,
    /// `‖Dv − Q‖_{L²} / ‖Q‖_{L²}`; nonzero when `Q` leaves the range of `D`.
    pub range_residual: f64,
    /// `‖v‖_{W^{1,2}} / ‖Q‖_{L²}`.
    pub stability_constant: f64,
}

/// Kernel-orthogonal least-squares solution of `Dv = Q`.
pub fn cr_solve(q: &TracelessTensorField) -> Result<AmbientField> {
    cr_solve_detailed(q).map(|s| s.v)
}

/// Preconditioned conjugate gradients on `D*D x = D*Q` over potentials of degree `2..=L−1`.
pub fn cr_solve_detailed(q: &TracelessTensorField) -> Result<CrSolution> {
    let grid = q.grid().clone();
    let precond = |p: &Potentials| -> Potentials {
        let scale = |c: &[f64]| -> Vec<f64> {
            c.iter()
                .enumerate()
                .map(|(k, x)| {
                    let l = (k as f64).sqrt() as usize;
                    let lam = eigenvalue(l);
                    if l >= 2 {
                        x / (2.0 * lam * (lam - 2.0))
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        Potentials {
            alpha: scale(&p.alpha),
            beta: scale(&p.beta),
        }
    };
    let normal = |p: &Potentials| potential_adjoint(&grid, &potential_apply(&grid, p));

    let b = potential_adjoint(&grid, q);
    let b_norm = b.dot(&b).sqrt();
    let mut x = Potentials::zeros(&grid);
    let mut iterations = 0;
    let mut rel = 0.0;
    if b_norm > 0.0 {
        let mut r = b.clone();
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        loop {
            rel = r.dot(&r).sqrt() / b_norm;
            if rel <= CG_RELATIVE_TOLERANCE {
                break;
            }
            if iterations >= CG_MAX_ITERATIONS {
                return Err(Error::Solver(format!(
                    "conjugate gradients stalled at relative residual {rel:.3e} after {iterations} iterations"
                )));
            }
            let ap = normal(&p);
            let pap = p.dot(&ap);
            if !(pap > 0.0) {
                break;
            }
            let step = rz / pap;
            x.axpy(step, &p);
            r.axpy(-step, &ap);
            z = precond(&r);
            let rz_new = r.dot(&z);
            let beta = rz_new / rz;
            rz = rz_new;
            let mut next = z.clone();
            next.axpy(beta, &p);
            p = next;
            iterations += 1;
        }
    }
    let v = x.field(&grid);
    let dv = potential_apply(&grid, &x);
    let q_norm = q.l2_norm();
    let (range_residual, stability_constant) = if q_norm > 0.0 {
        (dv.sub(q).l2_norm() / q_norm, v.sobolev_norm(1) / q_norm)
    } else {
        (0.0, 0.0)
    };
    Ok(CrSolution {
        v,
        potentials: x,
        iterations,
        normal_residual: rel,
        range_residual,
        stability_constant,
    })
}

/// Apply `D` to a potential pair; exposed for solver diagnostics.
pub fn cr_apply_potentials(grid: &Grid, p: &Potentials) -> TracelessTensorField {
    potential_apply(grid, p)
}

/// Normal deviation `ν = n_f − n` and the size of `ν + ∇z`.
#[derive(Debug, Clone)]
pub struct NuResidual {
    pub nu: AmbientField,
    pub residual_l2: f64,
    pub residual_l4: f64,
}

pub fn nu_residual(imm: &Immersion, dec: &Decomposition) -> NuResidual {
    let grid = imm.grid();
    let n0 = AmbientField::identity(grid);
    let nu = imm.normal().sub(&n0);
    let r = nu.add(&dec.z.surface_gradient());
    NuResidual {
        residual_l2: r.lp_norm(2.0),
        residual_l4: r.lp_norm(4.0),
        nu,
    }
}

/// Numerical rank of `D` restricted to a list of tangent fields, from the
/// eigenvalues of the Gram matrix `⟨D a, D b⟩` relative to `⟨a, b⟩`.
pub fn kernel_dimension(fields: &[AmbientField], tol: f64) -> Result<usize> {
    let k = fields.len();
    let images: Vec<TracelessTensorField> = fields.iter().map(cr_apply).collect::<Result<_>>()?;
    let mut gram = DMatrix::zeros(k, k);
    let mut mass = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            gram[(a, b)] = images[a].inner(&images[b]);
            mass[(a, b)] = fields[a].inner(&fields[b]);
        }
    }
    let chol = mass
        .cholesky()
        .ok_or_else(|| Error::Domain("tangent fields are linearly dependent".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular mass matrix".into()))?;
    let reduced = &l_inv * gram * l_inv.transpose();
    let eig = reduced.symmetric_eigen().eigenvalues;
    let top = eig.iter().cloned().fold(0.0, f64::max);
    Ok(eig.iter().filter(|e| **e <= tol * top).count())
}

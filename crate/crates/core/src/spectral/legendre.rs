//! Orthonormal associated Legendre functions.
//!
//! `P̄_l^m(θ)` is normalized so that `∫_{S²} (P̄_l^0)² dx = 1`, i.e. it already
//! carries the `1/√(4π)` factor, and carries no Condon–Shortley phase. The real
//! harmonics are `Y_{l,0} = P̄_l^0`, `Y_{l,m} = √2 P̄_l^m cos(mφ)` and
//! `Y_{l,-m} = √2 P̄_l^m sin(mφ)` for `m > 0`.

use std::f64::consts::PI;

/// Position of `(l, m)`, `0 ≤ m ≤ l`, in a triangular table.
#[inline]
pub(crate) fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

pub(crate) fn tri_len(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 2) / 2
}

/// Values `P̄_l^m(cos θ)` for all `0 ≤ m ≤ l ≤ l_max`, written into `out`.
pub(crate) fn legendre_values(l_max: usize, cos_t: f64, sin_t: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= tri_len(l_max));
    out[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=l_max {
        let mf = m as f64;
        out[tri(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * out[tri(m - 1, m - 1)];
    }
    for m in 0..l_max {
        out[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * cos_t * out[tri(m, m)];
    }
    for m in 0..=l_max {
        let m2 = (m * m) as f64;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - m2)).sqrt();
            let lm1 = lf - 1.0;
            let b = ((lm1 * lm1 - m2) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
            out[tri(l, m)] = a * (cos_t * out[tri(l - 1, m)] - b * out[tri(l - 2, m)]);
        }
    }
}

/// `dP̄_l^m/dθ` from the values table. Requires `sin θ ≠ 0`.
pub(crate) fn legendre_dtheta(l_max: usize, cos_t: f64, sin_t: f64, values: &[f64], out: &mut [f64]) {
    for m in 0..=l_max {
        let m2 = (m * m) as f64;
        for l in m..=l_max {
            let lf = l as f64;
            let lower = if l > m {
                ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - m2)).sqrt() * values[tri(l - 1, m)]
            } else {
                0.0
            };
            out[tri(l, m)] = (lf * cos_t * values[tri(l, m)] - lower) / sin_t;
        }
    }
}

/// `d²P̄_l^m/dθ²` from the associated Legendre equation. Requires `sin θ ≠ 0`.
pub(crate) fn legendre_dtheta2(
    l_max: usize,
    cos_t: f64,
    sin_t: f64,
    values: &[f64],
    dtheta: &[f64],
    out: &mut [f64],
) {
    let cot = cos_t / sin_t;
    let inv_s2 = 1.0 / (sin_t * sin_t);
    for m in 0..=l_max {
        let m2 = (m * m) as f64;
        for l in m..=l_max {
            let lam = (l * (l + 1)) as f64;
            let k = tri(l, m);
            out[k] = -cot * dtheta[k] - (lam - m2 * inv_s2) * values[k];
        }
    }
}

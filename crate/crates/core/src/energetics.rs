//! Energy functionals, the Bogomol'nyi decomposition and Ginzburg-Landau residuals.
//!
//! All integrals are uniform grid means over the unit cell. Derivatives of `u`
//! come from the section's analytic derivative data; derivatives of `a` are
//! spectral.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::bogomolny::{d_plus, self_dual_mu};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::landau::{apply_magnetic_laplacian, eval_a0, eval_u0, eval_u_h, SectionField, ThetaParams};
use crate::lattice::{Grid, Lattice};

/// Terms of the energy of a pair. `a_plus` and `bkn_defect` always refer to
/// the self-dual coupling at the same `H_int`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub potential: f64,
    pub field: f64,
    pub internal: f64,
    pub magnetic_gap: f64,
    pub total: f64,
    pub a_plus: f64,
    pub bkn_defect: f64,
}

impl EnergyReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// `mu = H_int / (2 pi k)`.
pub fn coupling_mu(k: f64, h_int: f64) -> f64 {
    h_int / (2.0 * PI * k)
}

fn check_params(k: f64, h_int: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    if !(h_int > 0.0) || !h_int.is_finite() {
        return Err(Error::Domain(format!("H_int must be positive, got {h_int}")));
    }
    Ok(())
}

fn potential_vector(u: &SectionField, a: &VectorField) -> Result<Vec<[f64; 2]>> {
    u.check_grid(a.grid())?;
    let a0 = eval_a0(u.grid().points());
    Ok(a0.iter().zip(a.x.values().iter().zip(a.y.values())).map(|(c, (ax, ay))| [c[0] + ax, c[1] + ay]).collect())
}

/// Samples of the covariant derivative `i grad u + (A0 + a) u`.
pub fn covariant_gradient(u: &SectionField, a: &VectorField) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let c = potential_vector(u, a)?;
    let (dx, dy) = (u.dx()?, u.dy()?);
    let i = Complex64::i();
    let gx = (0..c.len()).map(|k| i * dx[k] + c[k][0] * u.values()[k]).collect();
    let gy = (0..c.len()).map(|k| i * dy[k] + c[k][1] * u.values()[k]).collect();
    Ok((gx, gy))
}

/// `int |i grad u + (A0 + a) u|^2`.
pub fn kinetic_integral(u: &SectionField, a: &VectorField) -> Result<f64> {
    let (gx, gy) = covariant_gradient(u, a)?;
    let sum: f64 = gx.iter().zip(&gy).map(|(x, y)| x.norm_sqr() + y.norm_sqr()).sum();
    Ok(sum / gx.len() as f64)
}

/// `int (1 - |u|^2)^2`.
pub fn potential_integral(u: &SectionField) -> f64 {
    u.modulus_squared().map(|d| (1.0 - d) * (1.0 - d)).mean()
}

/// `int |curl a|^2`.
pub fn curl_integral(a: &VectorField) -> f64 {
    a.curl().map(|c| c * c).mean()
}

/// `A+` at the self-dual coupling `mu = H_int / (pi sqrt 2)`.
pub fn a_plus(u: &SectionField, a: &VectorField, h_int: f64) -> Result<f64> {
    check_params(FRAC_1_SQRT_2, h_int)?;
    let mu = self_dual_mu(h_int);
    let dp = d_plus(u, a)?;
    let curl = a.curl();
    let n = dp.values().len() as f64;
    let total: f64 = dp
        .values()
        .iter()
        .zip(u.values())
        .zip(curl.values())
        .map(|((d, uv), c)| {
            let s = mu * (2.0 * PI + c) - (1.0 - uv.norm_sqr());
            0.5 * mu * d.norm_sqr() + 0.25 * s * s
        })
        .sum();
    Ok(total / n)
}

/// `E_{k,H_int}(u, a)` split into its terms; `magnetic_gap` is zero.
pub fn energy_internal(u: &SectionField, a: &VectorField, k: f64, h_int: f64) -> Result<EnergyReport> {
    check_params(k, h_int)?;
    let mu = coupling_mu(k, h_int);
    let kin = kinetic_integral(u, a)?;
    let pot = potential_integral(u);
    let curl = curl_integral(a);
    let kinetic = 0.5 * mu * kin;
    let potential = 0.25 * pot;
    let field = 0.5 * mu * mu * k * k * curl;
    let internal = kinetic + potential + field;

    let mu_sd = self_dual_mu(h_int);
    let e_sd = 0.5 * mu_sd * kin + potential + 0.25 * mu_sd * mu_sd * curl;
    let ap = a_plus(u, a, h_int)?;
    let bkn_defect = (e_sd - (mu_sd * PI - (mu_sd * PI).powi(2) + ap)).abs();
    Ok(EnergyReport { kinetic, potential, field, internal, magnetic_gap: 0.0, total: internal, a_plus: ap, bkn_defect })
}

/// `E_{k,H_ext}(H_int, u, a) = E_{k,H_int}(u, a) + (H_int - H_ext)^2 / 2`.
pub fn energy_total(u: &SectionField, a: &VectorField, k: f64, h_int: f64, h_ext: f64) -> Result<EnergyReport> {
    if !h_ext.is_finite() || h_ext < 0.0 {
        return Err(Error::Domain(format!("H_ext must be non-negative, got {h_ext}")));
    }
    let mut r = energy_internal(u, a, k, h_int)?;
    r.magnetic_gap = 0.5 * (h_int - h_ext).powi(2);
    r.total = r.internal + r.magnetic_gap;
    Ok(r)
}

/// `|E_{1/sqrt2,H_int}(u, a) - (mu pi - (mu pi)^2 + A+(u, a))|`.
pub fn bkn_defect(u: &SectionField, a: &VectorField, h_int: f64) -> Result<f64> {
    Ok(energy_internal(u, a, FRAC_1_SQRT_2, h_int)?.bkn_defect)
}

/// Minimal internal energy at the self-dual coupling.
pub fn m_e_closed_form(h_int: f64) -> Result<f64> {
    if !(h_int > 0.0) || !h_int.is_finite() {
        return Err(Error::Domain(format!("H_int must be positive, got {h_int}")));
    }
    if h_int <= FRAC_1_SQRT_2 {
        let x = h_int / SQRT_2;
        Ok(x - x * x)
    } else {
        Ok(0.25)
    }
}

/// Max-norm residuals of the two Ginzburg-Landau equations,
/// `mu [i grad + C]^2 u - (1 - |u|^2) u` and
/// `Lap a - Re[conj(u) (i grad u + C u)] / (mu k^2)`.
pub fn gl_residual(u: &SectionField, a: &VectorField, k: f64, h_int: f64) -> Result<(f64, f64)> {
    check_params(k, h_int)?;
    let mu = coupling_mu(k, h_int);
    let hu = apply_magnetic_laplacian(u, Some(a))?;
    let first = hu
        .values()
        .iter()
        .zip(u.values())
        .fold(0.0f64, |m, (h, uv)| m.max((mu * h - (1.0 - uv.norm_sqr()) * uv).norm()));

    let (gx, gy) = covariant_gradient(u, a)?;
    let lap = a.laplacian();
    let scale = 1.0 / (mu * k * k);
    let mut second = 0.0f64;
    for (idx, uv) in u.values().iter().enumerate() {
        let jx = (uv.conj() * gx[idx]).re;
        let jy = (uv.conj() * gy[idx]).re;
        let rx = lap.x.values()[idx] - scale * jx;
        let ry = lap.y.values()[idx] - scale * jy;
        second = second.max(rx.hypot(ry));
    }
    Ok((first, second))
}

/// An admissible pair used to exercise identities away from minimizers.
#[derive(Debug, Clone)]
pub struct RandomPair {
    pub alpha: f64,
    pub beta: f64,
    pub shift: [f64; 2],
    pub u: SectionField,
    pub a: VectorField,
}

/// Draws `u = alpha u0 + beta u_h` and `a` the rotated gradient of a random
/// trigonometric polynomial with modes up to 4, scaled so `max |a| = 1`.
pub fn random_pair<R: Rng + ?Sized>(
    lattice: &Lattice,
    grid: &Arc<Grid>,
    theta: &ThetaParams,
    rng: &mut R,
) -> Result<RandomPair> {
    let alpha = rng.gen_range(-1.0..=1.0);
    let beta = rng.gen_range(-1.0..=1.0);
    let (s, t) = (rng.gen::<f64>(), rng.gen::<f64>());
    let shift = lattice.to_cartesian(s, t);
    let u0 = eval_u0(lattice, grid, theta)?;
    let uh = eval_u_h(lattice, grid, theta, shift)?;
    let u = u0.scale(Complex64::new(alpha, 0.0)).add(&uh.scale(Complex64::new(beta, 0.0)))?;

    let mut modes = Vec::new();
    for p in -4i32..=4 {
        for q in -4i32..=4 {
            if (p, q) > (0, 0) {
                modes.push((p as f64, q as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let f = ScalarField::from_fn(grid.clone(), |x, y| {
        let st = lattice.to_lattice(x, y);
        modes
            .iter()
            .map(|(p, q, c, d)| {
                let ph = 2.0 * PI * (p * st[0] + q * st[1]);
                c * ph.cos() + d * ph.sin()
            })
            .sum()
    });
    let a = VectorField::rotated_gradient(&f);
    let m = a.max_norm();
    let a = if m > 0.0 { a.scale(1.0 / m) } else { a };
    Ok(RandomPair { alpha, beta, shift, u, a })
}

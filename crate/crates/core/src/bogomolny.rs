//! Self-dual minimizers from the scalar Kazdan-Warner equation.
//!
//! At the self-dual coupling the minimizing pair is `u = u0 exp(f)`,
//! `a = (df/dy, -df/dx)` where `f` is the periodic solution of
//!
//! ```text
//! mu * Lap f = |u0|^2 exp(2 f) - (1 - 2 mu pi),    mu = H_int / (pi sqrt 2).
//! ```
//!
//! The solver iterates on `g = 2 f` with damped Newton steps; each linear
//! system `(-(mu/2) Lap + h e^g) dg = R` is symmetric positive definite and is
//! solved by conjugate gradients preconditioned with the constant-coefficient
//! operator `-(mu/2) Lap + mean(h e^g)`, which is diagonal in Fourier space.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::landau::{apply_l_plus, eval_u0, SectionField, ThetaParams};
use crate::lattice::{Grid, Lattice};

/// Below this `|1 - sqrt(2) H|` the pair is replaced by its vanishing limit.
pub const BIFURCATION_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Max-norm of the PDE residual at convergence.
    pub tol_residual: f64,
    pub max_newton: usize,
    /// Largest step in `H_int` taken between warm-started solves.
    pub continuation_step: f64,
    /// Floor of the relative CG tolerance.
    pub linear_tol: f64,
    pub max_linear: usize,
    pub grid_n: usize,
    pub theta: ThetaParams,
    /// Smallest `H_int` accepted.
    pub h_min: f64,
    /// Raise the grid size for small `H_int` (128 below 0.1, 256 below 0.05).
    pub escalate_grid: bool,
    /// Bound on the Bogomol'nyi residuals checked after assembly.
    pub validation_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_newton: 50,
            continuation_step: 0.05,
            linear_tol: 1e-12,
            max_linear: 5000,
            grid_n: 64,
            theta: ThetaParams::default(),
            h_min: 0.02,
            escalate_grid: true,
            validation_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::Config("tol_residual must be positive".into()));
        }
        if !(self.continuation_step > 0.0) {
            return Err(Error::Config("continuation_step must be positive".into()));
        }
        if !(self.linear_tol > 0.0) || self.max_newton == 0 || self.max_linear == 0 {
            return Err(Error::Config("linear tolerance and iteration limits must be positive".into()));
        }
        Ok(())
    }

    /// Grid size used for a solve at `h_int`.
    pub fn grid_for(&self, h_int: f64) -> usize {
        if !self.escalate_grid {
            return self.grid_n;
        }
        let floor = if h_int < 0.05 {
            256
        } else if h_int < 0.1 {
            128
        } else {
            0
        };
        self.grid_n.max(floor)
    }
}

/// Convergence record of one nonlinear solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    /// Max-norm residual before each Newton step and after the last one.
    pub residual_history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub step_lengths: Vec<f64>,
}

impl SolverDiagnostics {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn newton_iterations(&self) -> usize {
        self.step_lengths.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("diagnostics serialize")
    }
}

#[derive(Debug, Clone)]
pub struct KazdanWarnerSolution {
    pub f: ScalarField,
    pub diagnostics: SolverDiagnostics,
}

/// Residual `mu_coeff * Lap f - h exp(2 f) + A`.
pub fn kazdan_warner_residual(f: &ScalarField, h: &ScalarField, a_const: f64, mu_coeff: f64) -> Result<ScalarField> {
    let lap = f.laplacian();
    let nonlinear = h.zip_map(f, |hv, fv| hv * (2.0 * fv).exp())?;
    lap.zip_map(&nonlinear, |l, n| mu_coeff * l - n + a_const)
}

/// Solves `mu_coeff * Lap f = h exp(2 f) - A` on the torus.
///
/// Requires `h >= 0` not identically zero, `A > 0` and `mu_coeff > 0`. The
/// solution is unique, so any initial guess converges to the same `f`; the
/// default guess is the constant matching the integral constraint
/// `mean(h e^{2f}) = A`.
pub fn solve_kazdan_warner(
    h: &ScalarField,
    a_const: f64,
    mu_coeff: f64,
    cfg: &SolverConfig,
    init: Option<&ScalarField>,
) -> Result<KazdanWarnerSolution> {
    cfg.validate()?;
    if !(a_const > 0.0) {
        return Err(Error::Domain(format!("right-hand constant must be positive, got {a_const}")));
    }
    if !(mu_coeff > 0.0) {
        return Err(Error::Domain(format!("Laplacian coefficient must be positive, got {mu_coeff}")));
    }
    if h.values().iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Domain("weight h must be finite and nonnegative".into()));
    }
    let h_mean = h.mean();
    if h_mean <= 0.0 {
        return Err(Error::Domain("weight h vanishes identically".into()));
    }
    let grid = h.grid().clone();
    let mut g = match init {
        Some(f0) => {
            f0.check_grid(h)?;
            f0.map(|v| 2.0 * v)
        }
        None => ScalarField::constant(grid.clone(), (a_const / h_mean).ln()),
    };
    let half_mu = 0.5 * mu_coeff;
    let residual_of = |g: &ScalarField| -> (ScalarField, ScalarField) {
        let weight = h.zip_map(g, |hv, gv| hv * gv.exp()).expect("same grid");
        let lap = g.laplacian();
        let mut r = lap;
        r.values_mut().iter_mut().zip(weight.values()).for_each(|(l, w)| *l = half_mu * *l - w + a_const);
        (r, weight)
    };

    let mut diag = SolverDiagnostics::default();
    let (mut res, mut weight) = residual_of(&g);
    let mut res_norm = res.max_abs();
    diag.residual_history.push(res_norm);
    for _ in 0..cfg.max_newton {
        if res_norm < cfg.tol_residual {
            break;
        }
        if !res_norm.is_finite() {
            break;
        }
        let rel_tol = res_norm.min(0.1).max(cfg.linear_tol);
        let (step, iters) = pcg(&res, &weight, half_mu, rel_tol, cfg.max_linear);
        diag.linear_iterations.push(iters);

        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-10 {
            let trial = g.zip_map(&step, |gv, dv| gv + lambda * dv).expect("same grid");
            let (r_trial, w_trial) = residual_of(&trial);
            let n_trial = r_trial.max_abs();
            if n_trial.is_finite() && n_trial < res_norm {
                g = trial;
                res = r_trial;
                weight = w_trial;
                res_norm = n_trial;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        diag.step_lengths.push(if accepted { lambda } else { 0.0 });
        diag.residual_history.push(res_norm);
        if !accepted {
            break;
        }
    }
    if res_norm < cfg.tol_residual {
        Ok(KazdanWarnerSolution { f: g.map(|v| 0.5 * v), diagnostics: diag })
    } else {
        Err(Error::Solver {
            message: "Kazdan-Warner Newton iteration did not converge".into(),
            final_residual: res_norm,
            history: diag.residual_history,
        })
    }
}

/// Preconditioned CG for `(-(half_mu) Lap + weight) x = rhs`.
fn pcg(rhs: &ScalarField, weight: &ScalarField, half_mu: f64, rel_tol: f64, max_iter: usize) -> (ScalarField, usize) {
    let shift = weight.mean().max(1e-12);
    let apply = |x: &ScalarField| -> ScalarField {
        let lap = x.laplacian();
        let mut out = lap;
        out.values_mut()
            .iter_mut()
            .zip(x.values().iter().zip(weight.values()))
            .for_each(|(l, (xv, w))| *l = -half_mu * *l + w * xv);
        out
    };
    let dot = |a: &ScalarField, b: &ScalarField| a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>();
    let axpy = |y: &mut ScalarField, alpha: f64, x: &ScalarField| {
        y.values_mut().iter_mut().zip(x.values()).for_each(|(a, b)| *a += alpha * b);
    };

    let mut x = ScalarField::constant(rhs.grid().clone(), 0.0);
    let mut r = rhs.clone();
    let target = rel_tol * dot(rhs, rhs).sqrt();
    let mut z = r.solve_helmholtz(half_mu, shift);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        if dot(&r, &r).sqrt() <= target {
            return (x, it);
        }
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        z = r.solve_helmholtz(half_mu, shift);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.values_mut().iter_mut().zip(z.values()).for_each(|(pv, zv)| *pv = zv + beta * *pv);
    }
    (x, max_iter)
}

/// Which branch of the self-dual family a pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `0 < H_int < 1/sqrt 2`: vortex lattice with one zero per cell.
    Vortex,
    /// `H_int = 1/sqrt 2`: the family has collapsed onto `u = 0, a = 0`.
    NormalLimit,
}

/// Integrals of a pair over the unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairIntegrals {
    /// `int |u|^2`
    pub density: f64,
    /// `int (1 - |u|^2)^2`
    pub potential: f64,
    /// `int |curl a|^2`
    pub curl_energy: f64,
}

/// The self-dual minimizing pair at a given internal field.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    pub h_int: f64,
    pub mu: f64,
    pub branch: Branch,
    pub f: ScalarField,
    pub u: SectionField,
    pub a: VectorField,
    pub curl_a: ScalarField,
    pub integrals: PairIntegrals,
    pub diagnostics: SolverDiagnostics,
}

/// Pointwise Bogomol'nyi residuals of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BogomolnyResiduals {
    /// `max |D+ u|`
    pub d_plus: f64,
    /// `max |2 mu pi + mu curl a - (1 - |u|^2)|`
    pub field: f64,
}

/// `mu = H_int / (pi sqrt 2)` at the self-dual coupling.
pub fn self_dual_mu(h_int: f64) -> f64 {
    h_int / (PI * SQRT_2)
}

impl SolutionPair {
    pub fn grid(&self) -> &Arc<Grid> {
        self.f.grid()
    }

    pub fn bogomolny_residuals(&self) -> Result<BogomolnyResiduals> {
        let d_plus = d_plus(&self.u, &self.a)?.max_modulus();
        let mu = self.mu;
        let field = self
            .curl_a
            .values()
            .iter()
            .zip(self.u.values())
            .fold(0.0f64, |m, (c, u)| m.max((2.0 * mu * PI + mu * c - (1.0 - u.norm_sqr())).abs()));
        Ok(BogomolnyResiduals { d_plus, field })
    }

    fn normal_limit(grid: Arc<Grid>, h_int: f64) -> Self {
        let f = ScalarField::constant(grid.clone(), f64::NEG_INFINITY);
        Self {
            h_int,
            mu: self_dual_mu(h_int),
            branch: Branch::NormalLimit,
            f,
            u: SectionField::zeros(grid.clone()),
            a: VectorField::zeros(grid.clone()),
            curl_a: ScalarField::constant(grid, 0.0),
            integrals: PairIntegrals { density: 0.0, potential: 1.0, curl_energy: 0.0 },
            diagnostics: SolverDiagnostics::default(),
        }
    }
}

/// `D+ u = (d/dx + i d/dy) u + (C_y - i C_x) u` with `C = A0 + a`.
pub fn d_plus(u: &SectionField, a: &VectorField) -> Result<SectionField> {
    u.check_grid(a.grid())?;
    let lu = apply_l_plus(u)?;
    let values = lu
        .values()
        .iter()
        .zip(u.values())
        .zip(a.x.values().iter().zip(a.y.values()))
        .map(|((l, uv), (ax, ay))| l + num_complex::Complex64::new(*ay, -*ax) * uv)
        .collect();
    SectionField::from_samples(u.grid().clone(), values)
}

fn check_field_range(h_int: f64) -> Result<f64> {
    if !(h_int > 0.0) || !h_int.is_finite() {
        return Err(Error::Domain(format!("internal field must be positive, got {h_int}")));
    }
    let gap = 1.0 - SQRT_2 * h_int;
    if gap < -BIFURCATION_GAP {
        return Err(Error::Domain(format!("internal field {h_int} exceeds 1/sqrt(2); no vortex solution exists")));
    }
    Ok(gap)
}

/// Builds the self-dual pair at `h_int` on `grid`, optionally warm-started.
pub fn build_pair_with_guess(
    lattice: &Lattice,
    grid: &Arc<Grid>,
    theta: &ThetaParams,
    h_int: f64,
    cfg: &SolverConfig,
    init: Option<&ScalarField>,
) -> Result<SolutionPair> {
    let gap = check_field_range(h_int)?;
    if grid.lattice() != lattice {
        return Err(Error::Contract("grid was built for a different lattice".into()));
    }
    if gap.abs() < BIFURCATION_GAP {
        return Ok(SolutionPair::normal_limit(grid.clone(), h_int));
    }
    if h_int < cfg.h_min {
        return Err(Error::Domain(format!("internal field {h_int} is below the solver floor {}", cfg.h_min)));
    }
    let mu = self_dual_mu(h_int);
    let u0 = eval_u0(lattice, grid, theta)?;
    let weight = u0.modulus_squared();
    let sol = solve_kazdan_warner(&weight, gap, mu, cfg, init)?;
    let f = sol.f;
    let u = u0.mul_exp(&f)?;
    let a = VectorField::rotated_gradient(&f);
    let curl_a = f.laplacian().map(|v| -v);
    let density = u.modulus_squared();
    let integrals = PairIntegrals {
        density: density.mean(),
        potential: density.map(|d| (1.0 - d) * (1.0 - d)).mean(),
        curl_energy: curl_a.map(|c| c * c).mean(),
    };
    let pair =
        SolutionPair { h_int, mu, branch: Branch::Vortex, f, u, a, curl_a, integrals, diagnostics: sol.diagnostics };

    let res = pair.bogomolny_residuals()?;
    let tol = cfg.validation_tol;
    if res.d_plus > tol || res.field > tol {
        return Err(Error::Integrity(format!(
            "Bogomol'nyi residuals too large at H = {h_int}: |D+u| = {:.3e}, field = {:.3e}",
            res.d_plus, res.field
        )));
    }
    let max_u = pair.u.max_modulus();
    if max_u > 1.0 + tol {
        return Err(Error::Integrity(format!("|u| reaches {max_u} > 1 at H = {h_int}")));
    }
    if (pair.integrals.density - gap).abs() > tol {
        return Err(Error::Integrity(format!(
            "int |u|^2 = {} differs from 1 - sqrt(2) H = {gap}",
            pair.integrals.density
        )));
    }
    Ok(pair)
}

/// Cold-started self-dual pair.
pub fn build_pair(
    lattice: &Lattice,
    grid: &Arc<Grid>,
    theta: &ThetaParams,
    h_int: f64,
    cfg: &SolverConfig,
) -> Result<SolutionPair> {
    build_pair_with_guess(lattice, grid, theta, h_int, cfg, None)
}

/// Result of a warm-started sweep: the completed prefix and the first failure.
#[derive(Debug)]
pub struct Sweep {
    pub pairs: Vec<SolutionPair>,
    pub failure: Option<(f64, Error)>,
}

impl Sweep {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn into_result(self) -> Result<Vec<SolutionPair>> {
        match self.failure {
            None => Ok(self.pairs),
            Some((_, e)) => Err(e),
        }
    }
}

/// Solves along a descending list of internal fields, warm-starting each
/// solve from the previous `f` (resampled when the grid grows and shifted by
/// `ln(A_new / A_old) / 2`). Gaps wider than `continuation_step` are bridged
/// with unreported intermediate solves.
pub fn continuation_sweep(lattice: &Lattice, h_list: &[f64], cfg: &SolverConfig) -> Sweep {
    let mut pairs = Vec::with_capacity(h_list.len());
    if let Err(e) = cfg.validate() {
        return Sweep { pairs, failure: Some((h_list.first().copied().unwrap_or(f64::NAN), e)) };
    }
    for w in h_list.windows(2) {
        if !(w[1] < w[0]) {
            let e = Error::Domain(format!("sweep fields must be strictly descending ({} then {})", w[0], w[1]));
            return Sweep { pairs, failure: Some((w[1], e)) };
        }
    }
    if let Some(&top) = h_list.first() {
        if top >= FRAC_1_SQRT_2 {
            let e = Error::Domain(format!("sweep fields must lie below 1/sqrt(2), got {top}"));
            return Sweep { pairs, failure: Some((top, e)) };
        }
    }

    let mut grids: Vec<Arc<Grid>> = Vec::new();
    let mut grid_for = |n: usize| -> Result<Arc<Grid>> {
        if let Some(g) = grids.iter().find(|g| g.n() == n) {
            return Ok(g.clone());
        }
        let g = Arc::new(Grid::new(*lattice, n)?);
        grids.push(g.clone());
        Ok(g)
    };

    let mut prev: Option<(f64, ScalarField)> = None;
    for &target in h_list {
        let mut stops = Vec::new();
        if let Some((h_prev, _)) = &prev {
            let gap = h_prev - target;
            let substeps = (gap / cfg.continuation_step).ceil().max(1.0) as usize;
            for k in 1..substeps {
                stops.push(h_prev - gap * k as f64 / substeps as f64);
            }
        }
        stops.push(target);
        for &h in &stops {
            let step = (|| -> Result<SolutionPair> {
                let grid = grid_for(cfg.grid_for(h))?;
                let guess = match &prev {
                    Some((h_prev, f_prev)) => {
                        let shift = 0.5 * ((1.0 - SQRT_2 * h) / (1.0 - SQRT_2 * h_prev)).ln();
                        Some(f_prev.resample(grid.clone())?.map(|v| v + shift))
                    }
                    None => None,
                };
                build_pair_with_guess(lattice, &grid, &cfg.theta, h, cfg, guess.as_ref())
            })();
            match step {
                Ok(pair) => {
                    prev = Some((h, pair.f.clone()));
                    if h == target {
                        pairs.push(pair);
                    }
                }
                Err(e) => return Sweep { pairs, failure: Some((h, e)) },
            }
        }
    }
    Sweep { pairs, failure: None }
}

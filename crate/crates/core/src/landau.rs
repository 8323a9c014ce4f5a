//! Lowest-Landau-level sections of the degree-one line bundle over the torus.
//!
//! Sections satisfy `u(z + v) = exp(i pi (v_x y - v_y x)) u(z)` for every
//! lattice vector `v`, so they are not periodic and are never differentiated
//! spectrally. The ground state is the theta series
//!
//! ```text
//! u0(x, y) = exp(i pi x y) * sum_n exp(-pi (y + n r)^2) exp(i pi n^2 w r + 2 pi i n r x)
//! ```
//!
//! for the canonical basis `(u, 0), (w, r)`, and its derivatives are summed
//! term by term. Each [`SectionField`] carries its first derivatives and
//! Laplacian (its "jet") alongside the samples.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::lattice::{Grid, Lattice};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Truncation of the theta series: terms with `|n - n_c| <= truncation`
/// around the dominant index `n_c = round(-y / r)` are summed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaParams {
    pub truncation: usize,
    /// Largest admissible tail bound.
    pub tolerance: f64,
}

impl Default for ThetaParams {
    fn default() -> Self {
        Self { truncation: 10, tolerance: 1e-14 }
    }
}

impl ThetaParams {
    pub fn new(truncation: usize) -> Self {
        Self { truncation, ..Self::default() }
    }

    /// Bound on the largest omitted term, `exp(-pi ((N + 1/2) r)^2)`.
    pub fn tail_bound(&self, lattice: &Lattice) -> f64 {
        let d = (self.truncation as f64 + 0.5) * lattice.r();
        (-PI * d * d).exp()
    }

    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        if self.truncation < 1 {
            return Err(Error::Config("theta truncation must be at least 1".into()));
        }
        let tail = self.tail_bound(lattice);
        if tail > self.tolerance {
            return Err(Error::Config(format!(
                "theta truncation {} leaves tail {:.2e} above tolerance {:.1e}",
                self.truncation, tail, self.tolerance
            )));
        }
        Ok(())
    }
}

/// Value, gradient and Laplacian of a section at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub dx: Complex64,
    pub dy: Complex64,
    pub lap: Complex64,
}

/// Ground state `u0` and its derivatives at an arbitrary Cartesian point.
pub fn theta_jet(lattice: &Lattice, theta: &ThetaParams, x: f64, y: f64) -> Jet {
    let (r, w) = (lattice.r(), lattice.w());
    let center = (-y / r).round() as i64;
    let span = theta.truncation as i64;
    let mut jet = Jet { value: 0.0.into(), dx: 0.0.into(), dy: 0.0.into(), lap: 0.0.into() };
    for n in (center - span)..=(center + span) {
        let nf = n as f64;
        let shifted = y + nf * r;
        let phase = PI * x * y + PI * nf * nf * w * r + 2.0 * PI * nf * r * x;
        let term = Complex64::from_polar((-PI * shifted * shifted).exp(), phase);
        let px = I * (PI * y + 2.0 * PI * nf * r);
        let py = I * (PI * x) - 2.0 * PI * shifted;
        jet.value += term;
        jet.dx += px * term;
        jet.dy += py * term;
        jet.lap += (px * px + py * py - 2.0 * PI) * term;
    }
    jet
}

/// Translated section `u_h(z) = exp(i pi (h_y x - h_x y)) u0(z - h)`.
pub fn translated_jet(lattice: &Lattice, theta: &ThetaParams, h: [f64; 2], x: f64, y: f64) -> Jet {
    let base = theta_jet(lattice, theta, x - h[0], y - h[1]);
    let gauge = Complex64::from_polar(1.0, PI * (h[1] * x - h[0] * y));
    let (gx, gy) = (I * PI * h[1], -I * PI * h[0]);
    Jet {
        value: gauge * base.value,
        dx: gauge * (gx * base.value + base.dx),
        dy: gauge * (gy * base.value + base.dy),
        lap: gauge * (base.lap + 2.0 * (gx * base.dx + gy * base.dy) + (gx * gx + gy * gy) * base.value),
    }
}

/// Multiplier `exp(i pi (v_x y - v_y x))` relating `u(z + v)` to `u(z)` for
/// a basis vector `v`.
pub fn quasi_periodic_factor(v: [f64; 2], z: [f64; 2]) -> Complex64 {
    Complex64::from_polar(1.0, PI * (v[0] * z[1] - v[1] * z[0]))
}

/// Multiplier relating `u(z + m1 v1 + m2 v2)` to `u(z)`. Composing the
/// basis rules picks up `exp(i pi det(v1, v2)) = -1` per crossing, hence
/// the sign `(-1)^(m1 m2)`.
pub fn transition_factor(lattice: &Lattice, m1: i64, m2: i64, z: [f64; 2]) -> Complex64 {
    let (v1, v2) = (lattice.v1(), lattice.v2());
    let v = [m1 as f64 * v1[0] + m2 as f64 * v2[0], m1 as f64 * v1[1] + m2 as f64 * v2[1]];
    let sign = if (m1 * m2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * quasi_periodic_factor(v, z)
}

/// Linear combination of translated theta sections, optionally multiplied
/// by `exp(f)` for a real periodic `f`. Lets a sampled section be
/// re-evaluated off the grid.
#[derive(Debug, Clone)]
pub struct ThetaSource {
    pub terms: Vec<(Complex64, [f64; 2])>,
    pub log_modulus: Option<ScalarField>,
    pub theta: ThetaParams,
}

impl ThetaSource {
    pub fn eval(&self, lattice: &Lattice, x: f64, y: f64) -> Complex64 {
        let base: Complex64 =
            self.terms.iter().map(|(c, h)| c * translated_jet(lattice, &self.theta, *h, x, y).value).sum();
        match &self.log_modulus {
            None => base,
            Some(f) => {
                let (wrapped, _) = lattice.reduce(x, y);
                let [s, t] = lattice.to_lattice(wrapped[0], wrapped[1]);
                base * f.interpolate(s, t).exp()
            }
        }
    }
}

/// Complex samples of a section of the degree-one bundle on a grid.
#[derive(Debug, Clone)]
pub struct SectionField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    derivs: Option<Derivatives>,
    source: Option<ThetaSource>,
}

#[derive(Debug, Clone)]
struct Derivatives {
    dx: Vec<Complex64>,
    dy: Vec<Complex64>,
    lap: Vec<Complex64>,
}

impl SectionField {
    /// Raw samples with no derivative data. Such fields cannot be passed to
    /// operators that differentiate.
    pub fn from_samples(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract("sample count does not match grid".into()));
        }
        Ok(Self { grid, values, derivs: None, source: None })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Self {
            grid,
            values: zero.clone(),
            derivs: Some(Derivatives { dx: zero.clone(), dy: zero.clone(), lap: zero }),
            source: Some(ThetaSource { terms: vec![], log_modulus: None, theta: ThetaParams::default() }),
        }
    }

    fn from_jets(grid: Arc<Grid>, jets: Vec<Jet>, source: ThetaSource) -> Self {
        let values = jets.iter().map(|j| j.value).collect();
        let derivs = Derivatives {
            dx: jets.iter().map(|j| j.dx).collect(),
            dy: jets.iter().map(|j| j.dy).collect(),
            lap: jets.iter().map(|j| j.lap).collect(),
        };
        Self { grid, values, derivs: Some(derivs), source: Some(source) }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn has_derivatives(&self) -> bool {
        self.derivs.is_some()
    }

    fn derivs(&self) -> Result<&Derivatives> {
        self.derivs.as_ref().ok_or_else(|| Error::Contract("section carries no analytic derivative data".into()))
    }

    pub fn dx(&self) -> Result<&[Complex64]> {
        Ok(&self.derivs()?.dx)
    }

    pub fn dy(&self) -> Result<&[Complex64]> {
        Ok(&self.derivs()?.dy)
    }

    pub fn laplacian(&self) -> Result<&[Complex64]> {
        Ok(&self.derivs()?.lap)
    }

    pub fn source(&self) -> Option<&ThetaSource> {
        self.source.as_ref()
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(Error::Contract("section and field live on different grids".into()))
        }
    }

    /// `|u|^2`, a genuinely periodic scalar.
    pub fn modulus_squared(&self) -> ScalarField {
        let values = self.values.iter().map(|c| c.norm_sqr()).collect();
        ScalarField::new(self.grid.clone(), values).expect("same grid")
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `<self, other>` = integral of `conj(self) * other` over the cell.
    pub fn inner(&self, other: &SectionField) -> Result<Complex64> {
        other.check_grid(&self.grid)?;
        let sum: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(sum / self.values.len() as f64)
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.values.len() as f64
    }

    pub fn scale(&self, c: Complex64) -> SectionField {
        let map = |v: &[Complex64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        Self {
            grid: self.grid.clone(),
            values: map(&self.values),
            derivs: self.derivs.as_ref().map(|d| Derivatives { dx: map(&d.dx), dy: map(&d.dy), lap: map(&d.lap) }),
            source: self.source.as_ref().map(|s| ThetaSource {
                terms: s.terms.iter().map(|(k, h)| (k * c, *h)).collect(),
                log_modulus: s.log_modulus.clone(),
                theta: s.theta,
            }),
        }
    }

    /// Pointwise sum of two sections.
    pub fn add(&self, other: &SectionField) -> Result<SectionField> {
        other.check_grid(&self.grid)?;
        let sum = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        let derivs = match (&self.derivs, &other.derivs) {
            (Some(a), Some(b)) => {
                Some(Derivatives { dx: sum(&a.dx, &b.dx), dy: sum(&a.dy, &b.dy), lap: sum(&a.lap, &b.lap) })
            }
            _ => None,
        };
        let source = match (&self.source, &other.source) {
            (Some(a), Some(b)) if a.log_modulus.is_none() && b.log_modulus.is_none() => Some(ThetaSource {
                terms: a.terms.iter().chain(&b.terms).cloned().collect(),
                log_modulus: None,
                theta: a.theta,
            }),
            _ => None,
        };
        Ok(Self { grid: self.grid.clone(), values: sum(&self.values, &other.values), derivs, source })
    }

    /// `u * exp(f)` for a real periodic `f`; derivatives by the product rule
    /// with the spectral gradient and Laplacian of `f`.
    pub fn mul_exp(&self, f: &ScalarField) -> Result<SectionField> {
        self.check_grid(f.grid())?;
        let (fx, fy) = f.gradient();
        let lap_f = f.laplacian();
        let ef: Vec<f64> = f.values().iter().map(|v| v.exp()).collect();
        let values: Vec<Complex64> = self.values.iter().zip(&ef).map(|(u, e)| u * e).collect();
        let derivs = match &self.derivs {
            None => None,
            Some(d) => {
                let n = values.len();
                let mut dx = Vec::with_capacity(n);
                let mut dy = Vec::with_capacity(n);
                let mut lap = Vec::with_capacity(n);
                for k in 0..n {
                    let (u, e) = (self.values[k], ef[k]);
                    let (gx, gy) = (fx.values()[k], fy.values()[k]);
                    dx.push(e * (d.dx[k] + u * gx));
                    dy.push(e * (d.dy[k] + u * gy));
                    lap.push(
                        e * (d.lap[k]
                            + 2.0 * (d.dx[k] * gx + d.dy[k] * gy)
                            + u * (lap_f.values()[k] + gx * gx + gy * gy)),
                    );
                }
                Some(Derivatives { dx, dy, lap })
            }
        };
        let source = match &self.source {
            Some(s) if s.log_modulus.is_none() => {
                Some(ThetaSource { terms: s.terms.clone(), log_modulus: Some(f.clone()), theta: s.theta })
            }
            _ => None,
        };
        Ok(Self { grid: self.grid.clone(), values, derivs, source })
    }

    /// Sample at node `(i, j)` for any integers, extending across the seam by
    /// the bundle's transition rule.
    pub fn node_value(&self, i: i64, j: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        let (i0, m1) = (i.rem_euclid(n), i.div_euclid(n));
        let (j0, m2) = (j.rem_euclid(n), j.div_euclid(n));
        let lat = self.grid.lattice();
        let base = self.values[self.grid.index(i0 as usize, j0 as usize)];
        if m1 == 0 && m2 == 0 {
            return base;
        }
        transition_factor(lat, m1, m2, self.grid.point(i0 as usize, j0 as usize)) * base
    }

    /// Value at lattice coordinates `(s, t)`: exact when the field has a theta
    /// source, otherwise bilinear on the quasi-periodically extended samples.
    pub fn value_at(&self, s: f64, t: f64) -> Complex64 {
        let lat = self.grid.lattice();
        if let Some(src) = &self.source {
            let z = lat.to_cartesian(s, t);
            return src.eval(lat, z[0], z[1]);
        }
        let n = self.grid.n() as f64;
        let (fs, ft) = ((s * n).floor(), (t * n).floor());
        let (a, b) = (s * n - fs, t * n - ft);
        let (i, j) = (fs as i64, ft as i64);
        self.node_value(i, j) * ((1.0 - a) * (1.0 - b))
            + self.node_value(i + 1, j) * (a * (1.0 - b))
            + self.node_value(i, j + 1) * ((1.0 - a) * b)
            + self.node_value(i + 1, j + 1) * (a * b)
    }
}

/// Samples `u0` with its analytic derivatives.
pub fn eval_u0(lattice: &Lattice, grid: &Arc<Grid>, theta: &ThetaParams) -> Result<SectionField> {
    eval_u_h(lattice, grid, theta, [0.0, 0.0])
}

/// Samples the translated section `u_h`, whose zeros are `z0 + h + L`.
pub fn eval_u_h(lattice: &Lattice, grid: &Arc<Grid>, theta: &ThetaParams, h: [f64; 2]) -> Result<SectionField> {
    if grid.lattice() != lattice {
        return Err(Error::Contract("grid was built for a different lattice".into()));
    }
    theta.validate(lattice)?;
    let jets = grid.points().iter().map(|p| translated_jet(lattice, theta, h, p[0], p[1])).collect();
    let source = ThetaSource { terms: vec![(Complex64::new(1.0, 0.0), h)], log_modulus: None, theta: *theta };
    Ok(SectionField::from_jets(grid.clone(), jets, source))
}

/// Background potential `A0 = pi (-y, x)`, whose curl is `2 pi`.
pub fn eval_a0(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [-PI * p[1], PI * p[0]]).collect()
}

/// `L+ u = (d/dx + i d/dy) u + pi (x + i y) u`, from the section's analytic derivatives.
pub fn apply_l_plus(field: &SectionField) -> Result<SectionField> {
    let (dx, dy) = (field.dx()?, field.dy()?);
    let values = field
        .grid
        .points()
        .iter()
        .enumerate()
        .map(|(k, p)| dx[k] + I * dy[k] + PI * Complex64::new(p[0], p[1]) * field.values[k])
        .collect();
    SectionField::from_samples(field.grid.clone(), values)
}

/// Magnetic Laplacian `[i grad + A0 + a]^2 u`, expanded as
/// `-Lap u + 2i C.grad u + i (div C) u + |C|^2 u`.
pub fn apply_magnetic_laplacian(field: &SectionField, a: Option<&VectorField>) -> Result<SectionField> {
    let (dx, dy, lap) = (field.dx()?, field.dy()?, field.laplacian()?);
    let div = match a {
        Some(a) => {
            field.check_grid(a.grid())?;
            Some(a.divergence())
        }
        None => None,
    };
    let a0 = eval_a0(field.grid.points());
    let values = (0..field.values.len())
        .map(|k| {
            let (mut cx, mut cy) = (a0[k][0], a0[k][1]);
            let mut d = 0.0;
            if let (Some(a), Some(div)) = (a, &div) {
                cx += a.x.values()[k];
                cy += a.y.values()[k];
                d = div.values()[k];
            }
            let u = field.values[k];
            -lap[k] + 2.0 * I * (cx * dx[k] + cy * dy[k]) + I * d * u + (cx * cx + cy * cy) * u
        })
        .collect();
    SectionField::from_samples(field.grid.clone(), values)
}

/// `<H u, u> / <u, u>` for the magnetic Schrodinger operator `H = [i grad + A0]^2`.
pub fn rayleigh_quotient(field: &SectionField) -> Result<f64> {
    let hu = apply_magnetic_laplacian(field, None)?;
    let num = field.inner(&hu)?;
    Ok(num.re / field.norm_squared())
}

/// Zero of a section located by winding numbers around grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroLocation {
    /// Cartesian position inside the fundamental cell.
    pub point: [f64; 2],
    /// Lattice coordinates of `point`.
    pub lattice_point: [f64; 2],
    /// Winding of the phase around the cell that contains the zero.
    pub winding: i32,
    /// Total winding over the fundamental domain (the bundle degree).
    pub total_winding: i32,
}

fn winding_of(corners: &[Complex64]) -> i32 {
    let mut acc = 0.0;
    for k in 0..corners.len() {
        let (a, b) = (corners[k], corners[(k + 1) % corners.len()]);
        acc += (b / a).arg();
    }
    (acc / (2.0 * PI)).round() as i32
}

/// Finds the unique zero of a degree-one section.
///
/// The phase winding is computed around every grid cell (values across the
/// seam come from the transition rule). If a sample sits on or next to a
/// zero, the contour grid is shifted by a fraction of a cell and the count
/// repeated. The zero cell is then bisected twice.
pub fn locate_zero(field: &SectionField) -> Result<ZeroLocation> {
    let n = field.grid.n();
    let nf = n as f64;
    let scale = field.max_modulus();
    if scale == 0.0 {
        return Err(Error::Integrity("section vanishes identically".into()));
    }
    let floor = 1e-9 * scale;

    let offsets = [(0.0, 0.0), (0.37, 0.29), (0.61, 0.13)];
    for (attempt, &(ds, dt)) in offsets.iter().enumerate() {
        let corner = |i: i64, j: i64| -> Complex64 {
            if attempt == 0 {
                field.node_value(i, j)
            } else {
                field.value_at((i as f64 + ds) / nf, (j as f64 + dt) / nf)
            }
        };
        // cache (n + 1)^2 corners
        let m = n + 1;
        let mut values = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                values.push(corner(i as i64, j as i64));
            }
        }
        if values.iter().any(|v| v.norm() < floor) {
            continue;
        }
        let at = |i: usize, j: usize| values[j * m + i];
        let mut total = 0;
        let mut hit = None;
        for j in 0..n {
            for i in 0..n {
                let w = winding_of(&[at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
                if w != 0 {
                    total += w;
                    if w > 0 && hit.is_none() {
                        hit = Some((i, j, w));
                    }
                }
            }
        }
        if total != 1 {
            return Err(Error::Integrity(format!("total winding over the cell is {total}, expected 1")));
        }
        let (i, j, w) = hit.expect("positive winding cell exists when total is 1");
        let s0 = (i as f64 + ds) / nf;
        let t0 = (j as f64 + dt) / nf;
        let (s, t) = bisect_cell(field, s0, t0, 1.0 / nf, floor, 2);
        let (s, t) = (s.rem_euclid(1.0), t.rem_euclid(1.0));
        let point = field.grid.lattice().to_cartesian(s, t);
        return Ok(ZeroLocation { point, lattice_point: [s, t], winding: w, total_winding: total });
    }
    Err(Error::Integrity("zero lies on every sampling contour tried".into()))
}

/// Refines a cell `[s0, s0 + h] x [t0, t0 + h]` containing a zero; returns
/// the centre of the final sub-cell.
fn bisect_cell(field: &SectionField, s0: f64, t0: f64, h: f64, floor: f64, steps: usize) -> (f64, f64) {
    let (mut s0, mut t0, mut h) = (s0, t0, h);
    for _ in 0..steps {
        let half = h / 2.0;
        let mut probe = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (b, row) in probe.iter_mut().enumerate() {
            for (a, v) in row.iter_mut().enumerate() {
                *v = field.value_at(s0 + a as f64 * half, t0 + b as f64 * half);
                if v.norm() < floor {
                    return (s0 + a as f64 * half, t0 + b as f64 * half);
                }
            }
        }
        let mut next = None;
        for (b, a) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let w = winding_of(&[probe[b][a], probe[b][a + 1], probe[b + 1][a + 1], probe[b + 1][a]]);
            if w != 0 {
                next = Some((a, b));
                break;
            }
        }
        match next {
            Some((a, b)) => {
                s0 += a as f64 * half;
                t0 += b as f64 * half;
                h = half;
            }
            None => break,
        }
    }
    (s0 + h / 2.0, t0 + h / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(lat: Lattice, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(lat, n).unwrap())
    }

    // independent evaluation: plain sum over |n| <= 40, no centering
    fn u0_brute(lat: &Lattice, x: f64, y: f64) -> Complex64 {
        let (r, w) = (lat.r(), lat.w());
        (-40..=40)
            .map(|n| {
                let nf = n as f64;
                Complex64::from_polar(
                    (-PI * (y + nf * r).powi(2)).exp(),
                    PI * x * y + PI * nf * nf * w * r + 2.0 * PI * nf * r * x,
                )
            })
            .sum()
    }

    #[test]
    fn u0_at_origin_is_theta_constant() {
        let lat = Lattice::square();
        let expected: f64 = (-20..=20).map(|n| (-PI * (n * n) as f64).exp()).sum();
        assert_relative_eq!(expected, 1.0864348112133080, epsilon = 1e-15);
        for trunc in [5, 20] {
            let v = theta_jet(&lat, &ThetaParams::new(trunc), 0.0, 0.0).value;
            assert_relative_eq!(v.re, expected, epsilon = 1e-15);
            assert!(v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn u0_vanishes_at_cell_centre_of_square_lattice() {
        let v = theta_jet(&Lattice::square(), &ThetaParams::default(), 0.5, 0.5).value;
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn truncation_is_stable() {
        let lat = Lattice::hexagonal();
        let (a, b) = (ThetaParams::new(10), ThetaParams::new(20));
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let (x, y) = ((k as f64 * 0.137).fract() * 3.0 - 1.0, (k as f64 * 0.291).fract() * 3.0 - 1.0);
            worst = worst.max((theta_jet(&lat, &a, x, y).value - theta_jet(&lat, &b, x, y).value).norm());
            assert!((theta_jet(&lat, &a, x, y).value - u0_brute(&lat, x, y)).norm() < 1e-13);
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn theta_derivatives_match_finite_differences() {
        let lat = Lattice::new(1.3, 0.4).unwrap();
        let th = ThetaParams::default();
        let h = 1e-4;
        for &(x, y) in &[(0.2, 0.3), (-0.7, 1.1), (0.95, 0.05)] {
            let j = translated_jet(&lat, &th, [0.13, -0.21], x, y);
            let f = |x: f64, y: f64| translated_jet(&lat, &th, [0.13, -0.21], x, y).value;
            let dx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
            let dy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
            let lap = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
            assert!((j.dx - dx).norm() < 1e-6);
            assert!((j.dy - dy).norm() < 1e-6);
            assert!((j.lap - lap).norm() < 1e-4);
        }
    }

    #[test]
    fn sections_are_quasi_periodic() {
        for lat in [Lattice::square(), Lattice::hexagonal(), Lattice::new(1.7, -0.35).unwrap()] {
            let th = ThetaParams::default();
            for &h in &[[0.0, 0.0], [0.21, -0.4]] {
                for &(x, y) in &[(0.1, 0.2), (0.55, 0.71), (-0.3, 0.9)] {
                    let u = translated_jet(&lat, &th, h, x, y).value;
                    for v in [lat.v1(), lat.v2()] {
                        let shifted = translated_jet(&lat, &th, h, x + v[0], y + v[1]).value;
                        let expected = quasi_periodic_factor(v, [x, y]) * u;
                        assert!((shifted - expected).norm() < 1e-12, "lattice {lat:?} h {h:?}");
                        assert!((shifted.norm() - u.norm()).abs() < 1e-12);
                    }
                    for (m1, m2) in [(1, 1), (-1, 2), (2, 3), (-3, -1)] {
                        let (v1, v2) = (lat.v1(), lat.v2());
                        let v = [m1 as f64 * v1[0] + m2 as f64 * v2[0], m2 as f64 * v2[1]];
                        let shifted = translated_jet(&lat, &th, h, x + v[0], y + v[1]).value;
                        let expected = transition_factor(&lat, m1, m2, [x, y]) * u;
                        assert!((shifted - expected).norm() < 1e-11, "({m1}, {m2})");
                    }
                }
            }
        }
    }

    #[test]
    fn norm_of_u0_on_square_lattice() {
        let g = grid(Lattice::square(), 64);
        let u0 = eval_u0(&Lattice::square(), &g, &ThetaParams::default()).unwrap();
        assert_relative_eq!(u0.norm_squared(), 1.0 / 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn l_plus_annihilates_ground_state() {
        for lat in [Lattice::square(), Lattice::hexagonal()] {
            let g = grid(lat, 64);
            let u0 = eval_u0(&lat, &g, &ThetaParams::new(10)).unwrap();
            let lu = apply_l_plus(&u0).unwrap();
            assert!(lu.max_modulus() < 1e-10);
        }
    }

    #[test]
    fn l_plus_on_translates_is_multiplication() {
        let lat = Lattice::square();
        let g = grid(lat, 32);
        let h = [0.1, 0.2];
        let uh = eval_u_h(&lat, &g, &ThetaParams::default(), h).unwrap();
        let lu = apply_l_plus(&uh).unwrap();
        let factor = 2.0 * PI * Complex64::new(h[0], h[1]);
        let scale = uh.max_modulus();
        for (a, b) in lu.values().iter().zip(uh.values()) {
            assert!((a - factor * b).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn zero_translation_is_ground_state() {
        let lat = Lattice::hexagonal();
        let g = grid(lat, 16);
        let a = eval_u0(&lat, &g, &ThetaParams::default()).unwrap();
        let b = eval_u_h(&lat, &g, &ThetaParams::default(), [0.0, 0.0]).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn ground_state_is_lowest_landau_level() {
        let lat = Lattice::square();
        let g = grid(lat, 64);
        let u0 = eval_u0(&lat, &g, &ThetaParams::default()).unwrap();
        let hu = apply_magnetic_laplacian(&u0, None).unwrap();
        for (a, b) in hu.values().iter().zip(u0.values()) {
            assert!((a - 2.0 * PI * b).norm() < 1e-9);
        }
        assert_relative_eq!(rayleigh_quotient(&u0).unwrap(), 2.0 * PI, epsilon = 1e-8);
    }

    #[test]
    fn nothing_below_lowest_level() {
        let lat = Lattice::hexagonal();
        let g = grid(lat, 48);
        let th = ThetaParams::default();
        let u0 = eval_u0(&lat, &g, &th).unwrap();
        let uh = eval_u_h(&lat, &g, &th, [0.3, 0.1]).unwrap();
        let proj = u0.inner(&uh).unwrap() / u0.norm_squared();
        let v = uh.add(&u0.scale(-proj)).unwrap();
        assert!(v.inner(&u0).unwrap().norm() < 1e-12);
        assert!(rayleigh_quotient(&v).unwrap() >= 2.0 * PI - 1e-8);
    }

    #[test]
    fn a0_has_constant_curl() {
        assert_eq!(eval_a0(&[[0.0, 0.0]]), vec![[0.0, 0.0]]);
        let v = eval_a0(&[[1.0, 2.0]])[0];
        assert_relative_eq!(v[0], -2.0 * PI);
        assert_relative_eq!(v[1], PI);
        // centred differences on the grid nodes
        let g = grid(Lattice::hexagonal(), 16);
        let h = 1e-3;
        for p in g.points() {
            let s = eval_a0(&[[p[0] + h, p[1]], [p[0] - h, p[1]], [p[0], p[1] + h], [p[0], p[1] - h]]);
            let curl = (s[0][1] - s[1][1]) / (2.0 * h) - (s[2][0] - s[3][0]) / (2.0 * h);
            assert_relative_eq!(curl, 2.0 * PI, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_of_ground_state() {
        let lat = Lattice::square();
        let g = grid(lat, 64);
        let u0 = eval_u0(&lat, &g, &ThetaParams::default()).unwrap();
        let z = locate_zero(&u0).unwrap();
        assert_eq!(z.winding, 1);
        assert_eq!(z.total_winding, 1);
        assert!((z.point[0] - 0.5).abs() < 1.0 / 64.0 && (z.point[1] - 0.5).abs() < 1.0 / 64.0, "{z:?}");
    }

    #[test]
    fn zero_moves_with_translation() {
        let lat = Lattice::square();
        let g = grid(lat, 64);
        let uh = eval_u_h(&lat, &g, &ThetaParams::default(), [0.25, 0.0]).unwrap();
        let z = locate_zero(&uh).unwrap();
        assert_eq!(z.winding, 1);
        assert!((z.point[0] - 0.75).abs() < 1.0 / 64.0 && (z.point[1] - 0.5).abs() < 1.0 / 64.0, "{z:?}");
    }

    #[test]
    fn hexagonal_ground_state_has_one_zero() {
        let lat = Lattice::hexagonal();
        let g = grid(lat, 32);
        let u0 = eval_u0(&lat, &g, &ThetaParams::default()).unwrap();
        let z = locate_zero(&u0).unwrap();
        assert_eq!(z.winding, 1);
        let v = u0.source().unwrap().eval(&lat, z.point[0], z.point[1]);
        assert!(v.norm() < 0.05 * u0.max_modulus());
    }

    #[test]
    fn raw_samples_fall_back_to_interpolation() {
        let lat = Lattice::square();
        let g = grid(lat, 32);
        let u0 = eval_u0(&lat, &g, &ThetaParams::default()).unwrap();
        let raw = SectionField::from_samples(g.clone(), u0.values().to_vec()).unwrap();
        assert!(matches!(apply_l_plus(&raw), Err(Error::Contract(_))));
        let z = locate_zero(&raw).unwrap();
        assert_eq!(z.winding, 1);
        assert!((z.point[0] - 0.5).abs() < 1.0 / 32.0 && (z.point[1] - 0.5).abs() < 1.0 / 32.0);
    }

    #[test]
    fn too_short_truncation_is_rejected() {
        let lat = Lattice::square();
        let g = grid(lat, 16);
        assert!(matches!(eval_u0(&lat, &g, &ThetaParams::new(1)), Err(Error::Config(_))));
        assert!(matches!(eval_u0(&lat, &g, &ThetaParams::new(0)), Err(Error::Config(_))));
    }
}

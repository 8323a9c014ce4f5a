//! Real periodic fields on the torus grid and their spectral calculus.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{signed_frequency, Grid};

/// Real `L`-periodic function sampled on a [`Grid`].
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!("field has {} samples, grid expects {}", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    /// Samples `g(x, y)` at the Cartesian grid nodes.
    pub fn from_fn(grid: Arc<Grid>, g: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.points().iter().map(|p| g(p[0], p[1])).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Integral over the unit-area cell (uniform quadrature).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| g(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, g: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| g(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn check_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::Contract("fields live on different grids".into()))
        }
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut work: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.fft().forward(&mut work);
        work
    }

    fn from_spectrum(grid: &Arc<Grid>, mut spec: Vec<Complex64>) -> Self {
        grid.fft().inverse(&mut spec);
        Self { grid: grid.clone(), values: spec.into_iter().map(|c| c.re).collect() }
    }

    fn apply_symbol(&self, symbol: impl Fn(usize) -> Complex64) -> Self {
        let mut spec = self.spectrum();
        spec.iter_mut().enumerate().for_each(|(k, c)| *c *= symbol(k));
        Self::from_spectrum(&self.grid, spec)
    }

    /// Cartesian gradient `(d/dx, d/dy)`, Nyquist modes dropped.
    pub fn gradient(&self) -> (ScalarField, ScalarField) {
        let spec = self.spectrum();
        let (kx, ky, mask) = (self.grid.kx(), self.grid.ky(), self.grid.derivative_mask());
        let mut sx = spec.clone();
        let mut sy = spec;
        for k in 0..sx.len() {
            if mask[k] {
                sx[k] *= Complex64::new(0.0, kx[k]);
                sy[k] *= Complex64::new(0.0, ky[k]);
            } else {
                sx[k] = Complex64::new(0.0, 0.0);
                sy[k] = Complex64::new(0.0, 0.0);
            }
        }
        (Self::from_spectrum(&self.grid, sx), Self::from_spectrum(&self.grid, sy))
    }

    pub fn laplacian(&self) -> ScalarField {
        let sym = self.grid.laplacian_symbol();
        self.apply_symbol(|k| Complex64::new(sym[k], 0.0))
    }

    /// Solves `(shift - scale * Laplacian) x = self`. Requires `shift > 0`
    /// or a zero-mean right-hand side when `shift == 0`.
    pub fn solve_helmholtz(&self, scale: f64, shift: f64) -> ScalarField {
        let sym = self.grid.laplacian_symbol();
        self.apply_symbol(|k| {
            let d = shift - scale * sym[k];
            if d == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / d, 0.0)
            }
        })
    }

    /// Trigonometric interpolation onto a grid of another resolution over
    /// the same lattice.
    pub fn resample(&self, target: Arc<Grid>) -> Result<ScalarField> {
        if target.lattice() != self.grid.lattice() {
            return Err(Error::Contract("cannot resample across lattices".into()));
        }
        let (n, m) = (self.grid.n(), target.n());
        if n == m {
            return ScalarField::new(target, self.values.clone());
        }
        let spec = self.spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); m * m];
        let keep = (n.min(m) / 2) as i64;
        let scale = (m * m) as f64 / (n * n) as f64;
        for j in 0..n {
            let q = signed_frequency(j, n);
            for i in 0..n {
                let p = signed_frequency(i, n);
                // Nyquist content is ambiguous and dropped
                if p.abs() >= keep || q.abs() >= keep {
                    continue;
                }
                let ti = p.rem_euclid(m as i64) as usize;
                let tj = q.rem_euclid(m as i64) as usize;
                out[tj * m + ti] = spec[j * n + i] * scale;
            }
        }
        Ok(Self::from_spectrum(&target, out))
    }

    /// Evaluates the trigonometric interpolant at lattice coordinates `(s, t)`.
    pub fn interpolate(&self, s: f64, t: f64) -> f64 {
        let n = self.grid.n();
        let spec = self.spectrum();
        let norm = 1.0 / (n * n) as f64;
        let mut acc = 0.0;
        for j in 0..n {
            let q = signed_frequency(j, n);
            for i in 0..n {
                let p = signed_frequency(i, n);
                let c = spec[j * n + i];
                let weight = if p == -(n as i64) / 2 || q == -(n as i64) / 2 { 0.0 } else { 1.0 };
                let phase = 2.0 * std::f64::consts::PI * (p as f64 * s + q as f64 * t);
                acc += weight * (c * Complex64::from_polar(1.0, phase)).re;
            }
        }
        acc * norm
    }
}

/// Real `L`-periodic vector field.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.check_grid(&y)?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        Self { x: ScalarField::constant(grid.clone(), 0.0), y: ScalarField::constant(grid, 0.0) }
    }

    /// `(df/dy, -df/dx)`: divergence free with zero mean by construction.
    pub fn rotated_gradient(f: &ScalarField) -> Self {
        let (fx, fy) = f.gradient();
        Self { x: fy, y: fx.map(|v| -v) }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.x.grid()
    }

    pub fn curl(&self) -> ScalarField {
        let (_, axy) = self.x.gradient();
        let (ayx, _) = self.y.gradient();
        ayx.zip_map(&axy, |a, b| a - b).expect("components share a grid")
    }

    pub fn divergence(&self) -> ScalarField {
        let (axx, _) = self.x.gradient();
        let (_, ayy) = self.y.gradient();
        axx.zip_map(&ayy, |a, b| a + b).expect("components share a grid")
    }

    pub fn laplacian(&self) -> VectorField {
        Self { x: self.x.laplacian(), y: self.y.laplacian() }
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.x.mean(), self.y.mean()]
    }

    pub fn max_norm(&self) -> f64 {
        self.x.values().iter().zip(self.y.values()).fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn scale(&self, c: f64) -> VectorField {
        Self { x: self.x.map(|v| v * c), y: self.y.map(|v| v * c) }
    }
}

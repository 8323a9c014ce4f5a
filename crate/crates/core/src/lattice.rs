//! Unit-area lattices and the sampling grid over their fundamental domain.
//!
//! A lattice is always stored in the canonical basis `v1 = (u, 0)`,
//! `v2 = (w, r)` with `u * r = 1`. Periodic fields live on an `n x n` grid
//! anchored at the origin corner of the cell, indexed by lattice coordinates
//! `(s, t) = (i / n, j / n)` and stored row-major with `t` as the row.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice `Z v1 + Z v2` with `v1 = (u, 0)`, `v2 = (w, r)` and unit cell area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    u: f64,
    w: f64,
    r: f64,
}

impl Lattice {
    pub fn new(u: f64, w: f64) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Domain(format!("lattice length u must be positive, got {u}")));
        }
        if !w.is_finite() {
            return Err(Error::Domain(format!("lattice shear w must be finite, got {w}")));
        }
        Ok(Self { u, w, r: 1.0 / u })
    }

    pub fn square() -> Self {
        Self { u: 1.0, w: 0.0, r: 1.0 }
    }

    /// Regular triangular lattice with 60 degree cell angle.
    pub fn hexagonal() -> Self {
        let side = (2.0 / 3f64.sqrt()).sqrt();
        Self { u: side, w: side / 2.0, r: 1.0 / side }
    }

    /// Looks up a named preset (`square`, `hex`).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "square" => Ok(Self::square()),
            "hex" | "hexagonal" | "triangular" => Ok(Self::hexagonal()),
            other => Err(Error::Config(format!("unknown lattice preset '{other}'"))),
        }
    }

    /// Brings an arbitrary basis into canonical form: rotate `v1` onto the
    /// positive x axis, flip `v2` into the upper half plane and rescale to
    /// unit area.
    pub fn from_basis(v1: [f64; 2], v2: [f64; 2]) -> Result<Self> {
        let len1 = v1[0].hypot(v1[1]);
        let det = v1[0] * v2[1] - v1[1] * v2[0];
        if len1 == 0.0 || det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::Domain("basis vectors are degenerate".into()));
        }
        let (c, s) = (v1[0] / len1, v1[1] / len1);
        let w = c * v2[0] + s * v2[1];
        let r = (-s * v2[0] + c * v2[1]).abs();
        let scale = 1.0 / (len1 * r).sqrt();
        Self::new(len1 * scale, w * scale)
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn v1(&self) -> [f64; 2] {
        [self.u, 0.0]
    }

    pub fn v2(&self) -> [f64; 2] {
        [self.w, self.r]
    }

    /// Basis matrix with columns `v1`, `v2`, as `[[B11, B12], [B21, B22]]`.
    pub fn basis(&self) -> [[f64; 2]; 2] {
        [[self.u, self.w], [0.0, self.r]]
    }

    pub fn det(&self) -> f64 {
        self.u * self.r
    }

    pub fn to_cartesian(&self, s: f64, t: f64) -> [f64; 2] {
        [s * self.u + t * self.w, t * self.r]
    }

    pub fn to_lattice(&self, x: f64, y: f64) -> [f64; 2] {
        [self.r * x - self.w * y, self.u * y]
    }

    /// Cartesian wavevector `2 pi B^{-T} (p, q)` of the mode `exp(2 pi i (p s + q t))`.
    pub fn wavevector(&self, p: f64, q: f64) -> [f64; 2] {
        [2.0 * PI * self.r * p, 2.0 * PI * (self.u * q - self.w * p)]
    }

    /// Wraps a Cartesian point into the fundamental cell, returning the
    /// wrapped point and the integer lattice translation `(m1, m2)` such that
    /// `z = wrapped + m1 v1 + m2 v2`.
    pub fn reduce(&self, x: f64, y: f64) -> ([f64; 2], [i64; 2]) {
        let [s, t] = self.to_lattice(x, y);
        let (m1, m2) = (s.floor(), t.floor());
        let z = self.to_cartesian(s - m1, t - m2);
        (z, [m1 as i64, m2 as i64])
    }
}

/// Two-dimensional complex FFT on an `n x n` row-major array.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        plan.process(data);
        transpose(data, n);
        plan.process(data);
        transpose(data, n);
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1 / n^2` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

/// Signed frequency of FFT index `i` on `n` points, in `[-n/2, n/2)`.
pub fn signed_frequency(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Uniform corner-anchored sampling of the fundamental cell plus the
/// spectral data used to differentiate periodic fields.
#[derive(Debug, Clone)]
pub struct Grid {
    lattice: Lattice,
    n: usize,
    xy: Vec<[f64; 2]>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    deriv_mask: Vec<bool>,
    laplacian: Vec<f64>,
    fft: Fft2,
}

impl Grid {
    pub fn new(lattice: Lattice, n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Config(format!("grid size must be even and at least 8, got {n}")));
        }
        let nf = n as f64;
        let mut xy = Vec::with_capacity(n * n);
        let mut kx = Vec::with_capacity(n * n);
        let mut ky = Vec::with_capacity(n * n);
        let mut deriv_mask = Vec::with_capacity(n * n);
        let mut laplacian = Vec::with_capacity(n * n);
        let nyq = -(n as i64) / 2;
        for j in 0..n {
            let q = signed_frequency(j, n);
            for i in 0..n {
                let p = signed_frequency(i, n);
                xy.push(lattice.to_cartesian(i as f64 / nf, j as f64 / nf));
                let k = lattice.wavevector(p as f64, q as f64);
                kx.push(k[0]);
                ky.push(k[1]);
                deriv_mask.push(p != nyq && q != nyq);
                // Nyquist rows alias +n/2 and -n/2; averaging over both signs
                // keeps the multiplier symmetric under (p, q) -> (-p, -q).
                let ps: &[i64] = if p == nyq { &[nyq, -nyq] } else { std::slice::from_ref(&p) };
                let qs: &[i64] = if q == nyq { &[nyq, -nyq] } else { std::slice::from_ref(&q) };
                let mut acc = 0.0;
                for &pp in ps {
                    for &qq in qs {
                        let kk = lattice.wavevector(pp as f64, qq as f64);
                        acc += kk[0] * kk[0] + kk[1] * kk[1];
                    }
                }
                laplacian.push(-acc / (ps.len() * qs.len()) as f64);
            }
        }
        Ok(Self { lattice, n, xy, kx, ky, deriv_mask, laplacian, fft: Fft2::new(n) })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Lattice coordinates `(s, t)` of node `(i, j)`.
    pub fn lattice_coords(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 / self.n as f64, j as f64 / self.n as f64]
    }

    /// Cartesian coordinates of every node, row-major.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.xy
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        self.xy[self.index(i, j)]
    }

    /// Cartesian wavevector of FFT slot `(i, j)`.
    pub fn wavevector(&self, i: usize, j: usize) -> [f64; 2] {
        let idx = self.index(i, j);
        [self.kx[idx], self.ky[idx]]
    }

    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// `false` on Nyquist slots, which first derivatives discard.
    pub fn derivative_mask(&self) -> &[bool] {
        &self.deriv_mask
    }

    /// Fourier multiplier of the Laplacian (`-|k|^2`).
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.laplacian
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Whether two grids sample the same lattice at the same resolution.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.lattice == other.lattice
    }
}

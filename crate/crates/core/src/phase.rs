//! Critical fields and the phase diagram.
//!
//! Self-dual pairs solved at `k = 1/sqrt 2` serve as quasimodes for the
//! functional `H_k`; their minimum is an upper bound for `H_c1(k)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::bogomolny::{continuation_sweep, Branch, SolutionPair, SolverConfig};
use crate::energetics::{curl_integral, kinetic_integral, potential_integral};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::landau::SectionField;
use crate::lattice::Lattice;

/// Value of `H_k` at a pair and the internal field minimizing the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HkValue {
    pub value: f64,
    /// `None` when `int (1 - |u|^2)^2 = 0`.
    pub h_int: Option<f64>,
}

/// `H_k` from the integrals `K = int |i grad u + C u|^2`, `P = int (1 - |u|^2)^2`
/// and `F = int |curl a|^2`.
pub fn h_k_from_integrals(kinetic: f64, potential: f64, curl_energy: f64, k: f64) -> HkValue {
    let weight = 0.5 + curl_energy / (8.0 * PI * PI);
    let value = kinetic / (4.0 * PI * k) + (weight * potential).sqrt();
    let h_int = if potential > 0.0 { Some(0.5 * (potential / weight).sqrt()) } else { None };
    HkValue { value, h_int }
}

pub fn h_k_functional(u: &SectionField, a: &VectorField, k: f64) -> Result<HkValue> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    let kin = kinetic_integral(u, a)?;
    let pot = potential_integral(u);
    let curl = curl_integral(a);
    Ok(h_k_from_integrals(kin, pot, curl, k))
}

/// `chi(H) = 1 - sqrt2 H - H / (2 pi^2 sqrt2) int |curl a_H|^2`.
pub fn chi(pair: &SolutionPair) -> f64 {
    chi_from(pair.h_int, pair.integrals.curl_energy)
}

pub fn chi_from(h_int: f64, curl_energy: f64) -> f64 {
    1.0 - SQRT_2 * h_int - h_int * curl_energy / (2.0 * PI * PI * SQRT_2)
}

/// Cached integrals of one quasimode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quasimode {
    /// Field of the self-dual pair; `None` for the trivial pair.
    pub h_int: Option<f64>,
    pub kinetic: f64,
    pub potential: f64,
    pub curl_energy: f64,
}

impl Quasimode {
    pub fn trivial() -> Self {
        Self { h_int: None, kinetic: 0.0, potential: 1.0, curl_energy: 0.0 }
    }

    pub fn from_pair(pair: &SolutionPair) -> Result<Self> {
        let kinetic = match pair.branch {
            Branch::NormalLimit => 0.0,
            Branch::Vortex => kinetic_integral(&pair.u, &pair.a)?,
        };
        Ok(Self {
            h_int: Some(pair.h_int),
            kinetic,
            potential: pair.integrals.potential,
            curl_energy: pair.integrals.curl_energy,
        })
    }

    pub fn h_k(&self, k: f64) -> HkValue {
        h_k_from_integrals(self.kinetic, self.potential, self.curl_energy, k)
    }
}

/// Quasimodes from solved self-dual pairs, always including the trivial pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasimodeFamily {
    members: Vec<Quasimode>,
}

impl QuasimodeFamily {
    pub fn from_pairs(pairs: &[SolutionPair]) -> Result<Self> {
        let mut members = vec![Quasimode::trivial()];
        for p in pairs {
            members.push(Quasimode::from_pair(p)?);
        }
        Ok(Self { members })
    }

    pub fn from_members(mut members: Vec<Quasimode>) -> Self {
        if !members.iter().any(|m| m.h_int.is_none()) {
            members.insert(0, Quasimode::trivial());
        }
        Self { members }
    }

    pub fn members(&self) -> &[Quasimode] {
        &self.members
    }

    /// Solves the family along `h_grid` on `lattice`.
    pub fn solve(lattice: &Lattice, h_grid: &[f64], cfg: &SolverConfig) -> Result<Self> {
        let pairs = continuation_sweep(lattice, h_grid, cfg).into_result()?;
        Self::from_pairs(&pairs)
    }
}

/// Upper bound for `H_c1(k)` and the quasimode attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: f64,
    pub witness: Quasimode,
}

pub fn hc1_upper_bound(k: f64, family: &QuasimodeFamily) -> Result<UpperBound> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    family
        .members
        .iter()
        .map(|m| UpperBound { value: m.h_k(k).value, witness: *m })
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Domain("quasimode family is empty".into()))
}

/// `1 / (2k)`, from the monotonicity of `k H_c1(k)`.
pub fn hc1_lower_bound(k: f64) -> Result<f64> {
    if !(k >= FRAC_1_SQRT_2) {
        return Err(Error::Domain(format!("lower bound needs k >= 1/sqrt(2), got {k}")));
    }
    Ok(0.5 / k)
}

pub fn hc2(k: f64) -> f64 {
    k.max(FRAC_1_SQRT_2)
}

/// A row of the chi sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiRow {
    pub h_int: f64,
    pub chi: f64,
    pub curl_energy: f64,
}

impl ChiRow {
    pub fn from_pair(pair: &SolutionPair) -> Self {
        Self { h_int: pair.h_int, chi: chi(pair), curl_energy: pair.integrals.curl_energy }
    }
}

/// Slope constant estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SEstimate {
    pub grid_sup: f64,
    /// Linear least-squares fit in `H` through the three smallest fields, at `H = 0`.
    pub extrapolated: f64,
}

pub fn summarize_s(rows: &[ChiRow]) -> Result<SEstimate> {
    if rows.is_empty() {
        return Err(Error::Domain("no chi values to summarize".into()));
    }
    let grid_sup = rows.iter().map(|r| r.chi).fold(f64::NEG_INFINITY, f64::max);
    let mut sorted: Vec<&ChiRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.h_int.total_cmp(&b.h_int));
    let tail = &sorted[..sorted.len().min(3)];
    let extrapolated = if tail.len() == 1 {
        tail[0].chi
    } else {
        let n = tail.len() as f64;
        let mx = tail.iter().map(|r| r.h_int).sum::<f64>() / n;
        let my = tail.iter().map(|r| r.chi).sum::<f64>() / n;
        let sxy: f64 = tail.iter().map(|r| (r.h_int - mx) * (r.chi - my)).sum();
        let sxx: f64 = tail.iter().map(|r| (r.h_int - mx).powi(2)).sum();
        my - sxy / sxx * mx
    };
    Ok(SEstimate { grid_sup, extrapolated })
}

/// Completed chi rows and the first sweep failure, if any.
#[derive(Debug)]
pub struct ChiSweep {
    pub rows: Vec<ChiRow>,
    pub pairs: Vec<SolutionPair>,
    pub failure: Option<(f64, Error)>,
}

pub fn chi_sweep(lattice: &Lattice, h_grid: &[f64], cfg: &SolverConfig) -> ChiSweep {
    let sweep = continuation_sweep(lattice, h_grid, cfg);
    let rows = sweep.pairs.iter().map(ChiRow::from_pair).collect();
    ChiSweep { rows, pairs: sweep.pairs, failure: sweep.failure }
}

pub fn estimate_s(lattice: &Lattice, h_grid: &[f64], cfg: &SolverConfig) -> Result<SEstimate> {
    let sweep = chi_sweep(lattice, h_grid, cfg);
    if let Some((_, e)) = sweep.failure {
        return Err(e);
    }
    summarize_s(&sweep.rows)
}

/// 0.70 down to 0.05 in steps of 0.05, then 0.04, 0.03, 0.02.
pub fn default_h_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (1..=14).rev().map(|i| i as f64 / 20.0).collect();
    g.extend([0.04, 0.03, 0.02]);
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Pure,
    Normal,
    Mixed,
    Undetermined,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Pure => "Pure",
            Phase::Normal => "Normal",
            Phase::Mixed => "Mixed",
            Phase::Undetermined => "Undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub k: f64,
    pub h_ext: f64,
    pub phase: Phase,
    pub hc1_lower: f64,
    pub hc1_upper: f64,
    pub hc2: f64,
    pub witness: Option<Quasimode>,
}

/// Critical-field bracket at `k`: `H_c1 = 1/sqrt2` for `k <= 1/sqrt2`,
/// `[1/(2k), quasimode minimum]` above.
pub fn critical_fields(k: f64, family: &QuasimodeFamily) -> Result<(f64, f64, Option<Quasimode>)> {
    if k <= FRAC_1_SQRT_2 {
        return Ok((FRAC_1_SQRT_2, FRAC_1_SQRT_2, None));
    }
    let up = hc1_upper_bound(k, family)?;
    Ok((hc1_lower_bound(k)?, up.value, Some(up.witness)))
}

pub fn classify(k: f64, h_ext: f64, family: &QuasimodeFamily) -> Result<PhasePoint> {
    if !(k > 0.0) || !(h_ext > 0.0) || !k.is_finite() || !h_ext.is_finite() {
        return Err(Error::Domain(format!("classify needs positive k and H_ext, got ({k}, {h_ext})")));
    }
    let (lower, upper, witness) = critical_fields(k, family)?;
    let phase = if k <= FRAC_1_SQRT_2 {
        if h_ext <= FRAC_1_SQRT_2 {
            Phase::Pure
        } else {
            Phase::Normal
        }
    } else if h_ext >= k {
        Phase::Normal
    } else if h_ext > upper {
        Phase::Mixed
    } else if h_ext <= lower {
        Phase::Pure
    } else {
        Phase::Undetermined
    };
    Ok(PhasePoint { k, h_ext, phase, hc1_lower: lower, hc1_upper: upper, hc2: hc2(k), witness })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramRow {
    pub k: f64,
    pub hc1_lower: f64,
    pub hc1_upper: f64,
    pub hc2: f64,
}

/// Sample points of `[k_min, k_max]`, with `1/sqrt2` inserted when in range.
pub fn k_samples(k_min: f64, k_max: f64, resolution: usize) -> Result<Vec<f64>> {
    if !(k_min > 0.0) || !(k_max > k_min) || !k_max.is_finite() || resolution < 2 {
        return Err(Error::Domain(format!(
            "k range must satisfy 0 < k_min < k_max with at least 2 samples, got [{k_min}, {k_max}] x {resolution}"
        )));
    }
    let step = (k_max - k_min) / (resolution - 1) as f64;
    let mut ks: Vec<f64> = (0..resolution).map(|i| k_min + step * i as f64).collect();
    ks[resolution - 1] = k_max;
    if k_min <= FRAC_1_SQRT_2 && FRAC_1_SQRT_2 <= k_max {
        ks.push(FRAC_1_SQRT_2);
    }
    ks.sort_by(f64::total_cmp);
    ks.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * b.abs().max(1.0));
    if let Some(x) = ks.iter_mut().find(|x| (**x - FRAC_1_SQRT_2).abs() < 1e-12) {
        *x = FRAC_1_SQRT_2;
    }
    Ok(ks)
}

pub fn diagram_emit(k_min: f64, k_max: f64, resolution: usize, family: &QuasimodeFamily) -> Result<Vec<DiagramRow>> {
    let ks = k_samples(k_min, k_max, resolution)?;
    ks.par_iter()
        .map(|&k| {
            let (lo, up, _) = critical_fields(k, family)?;
            Ok(DiagramRow { k, hc1_lower: lo, hc1_upper: up, hc2: hc2(k) })
        })
        .collect()
}

/// Classification of a `n_k x n_h` rectangle of `(k, H_ext)` values.
pub fn classify_grid(
    k_range: (f64, f64),
    h_range: (f64, f64),
    n_k: usize,
    n_h: usize,
    family: &QuasimodeFamily,
) -> Result<Vec<PhasePoint>> {
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            vec![lo]
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let ks = axis(k_range.0, k_range.1, n_k);
    let hs = axis(h_range.0, h_range.1, n_h);
    ks.par_iter().flat_map_iter(|&k| hs.iter().map(move |&h| classify(k, h, family))).collect()
}

//! Sharp-interface free energy on the periodic unit cell.
//!
//! A pattern with widths `w_0..w_{L-1}` places layer `k` on `[x_k, x_{k+1}]`
//! with `x_0 = 0` and `x_k = w_0 + ... + w_{k-1}`. The long-range term
//! `sum_ij gamma_ij ∬ chi_i chi_j G` collapses, via `F'' = G`, onto the
//! interfaces: with `c_s = e_{p_{s-1}} - e_{p_s}` and `D_st = c_s^T gamma c_t`,
//!
//! ```text
//! LR = -sum_{s != t} D_st F(x_s - x_t)
//! ```
//!
//! for interfaces `s = 1..L` (interface `L` sits at `x_L = 1`, i.e. at 0).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{is_admissible, GammaMatrix, VolumeFractions, ADMISSIBILITY_TOL};
use crate::numeric::CompensatedSum;
use crate::pattern::Pattern;

/// Tolerance on width sums and per-species totals.
pub const WIDTH_TOL: f64 = 1e-10;

/// Periodic Green's function as a function of separation.
#[inline]
pub fn green_kernel(d: f64) -> f64 {
    let r = d - d.floor();
    0.5 * r * r - 0.5 * r + 1.0 / 12.0
}

/// `G(x, y)` on `[0, 1]`.
pub fn green(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("green arguments must lie in [0, 1], got ({x}, {y})")));
    }
    let d = (x - y).abs();
    Ok(0.5 * d * d - 0.5 * d + 1.0 / 12.0)
}

/// Periodic second antiderivative of `G`: `F(x) = (1-|x|)^2 x^2 / 24` on `[-1, 1]`.
#[inline]
pub fn antiderivative(x: f64) -> f64 {
    let r = x - x.floor();
    let t = r * (1.0 - r);
    t * t / 24.0
}

/// `F'`, periodic.
#[inline]
pub fn antiderivative_slope(x: f64) -> f64 {
    let r = x - x.floor();
    r * (1.0 - r) * (1.0 - 2.0 * r) / 12.0
}

/// `∬ G(x, y)` over `[x1, x2] × [y1, y2]`.
pub fn segment_pair_integral(x1: f64, x2: f64, y1: f64, y2: f64) -> Result<f64> {
    let ordered = |a: f64, b: f64| 0.0 <= a && a <= b && b <= 1.0;
    if !ordered(x1, x2) || !ordered(y1, y2) {
        return Err(Error::Domain(format!(
            "segments must satisfy 0 <= x1 <= x2 <= 1 and 0 <= y1 <= y2 <= 1, got [{x1}, {x2}] x [{y1}, {y2}]"
        )));
    }
    let mut acc = CompensatedSum::new();
    acc.add(antiderivative(x2 - y1));
    acc.add(antiderivative(x1 - y2));
    acc.add(-antiderivative(x2 - y2));
    acc.add(-antiderivative(x1 - y1));
    Ok(acc.value())
}

/// Interfacial tensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tensions {
    pub c12: f64,
    pub c13: f64,
    pub c23: f64,
}

impl Tensions {
    pub fn new(c12: f64, c13: f64, c23: f64) -> Self {
        Tensions { c12, c13, c23 }
    }

    pub fn equal(c: f64) -> Self {
        Tensions { c12: c, c13: c, c23: c }
    }

    /// Tension between species indices `i` and `j` (zero on the diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.c12,
            (0, 2) => self.c13,
            (1, 2) => self.c23,
            _ => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.c12 + self.c13 + self.c23
    }

    pub fn validate(&self) -> Result<()> {
        let c = [self.c12, self.c13, self.c23];
        if c.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Params(format!("tensions must be finite and nonnegative, got {c:?}")));
        }
        let slack = 1e-12 * self.sum().max(1.0);
        for k in 0..3 {
            if c[k] > c[(k + 1) % 3] + c[(k + 2) % 3] + slack {
                return Err(Error::Params(format!("tensions violate the triangle inequality: {c:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: VolumeFractions,
    pub tensions: Tensions,
    pub gamma: GammaMatrix,
}

impl ModelParams {
    /// Validates tensions; the matrix is taken as given.
    pub fn new(omega: VolumeFractions, tensions: Tensions, gamma: GammaMatrix) -> Result<Self> {
        tensions.validate()?;
        if gamma.0.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Params("matrix entries must be finite".into()));
        }
        Ok(ModelParams { omega, tensions, gamma })
    }

    /// As [`ModelParams::new`], additionally requiring an admissible matrix.
    pub fn new_strict(omega: VolumeFractions, tensions: Tensions, gamma: GammaMatrix) -> Result<Self> {
        let m = Self::new(omega, tensions, gamma)?;
        let report = is_admissible(&gamma, &omega, ADMISSIBILITY_TOL);
        if !report.admissible {
            return Err(Error::Params(format!(
                "matrix is not admissible (null residual {:e}, min eigenvalue {:e})",
                report.null_residual, report.min_eigenvalue
            )));
        }
        Ok(m)
    }

    pub fn with_gamma(&self, gamma: GammaMatrix) -> Self {
        ModelParams { gamma, ..*self }
    }
}

/// Layer widths aligned with a pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WidthVector(Vec<f64>);

impl WidthVector {
    /// Checks widths against the pattern and volume fractions.
    pub fn new(widths: Vec<f64>, pattern: &Pattern, omega: &VolumeFractions) -> Result<Self> {
        let w = WidthVector(widths);
        w.check(pattern, omega, WIDTH_TOL)?;
        Ok(w)
    }

    /// Wraps widths without checking.
    pub fn from_raw(widths: Vec<f64>) -> Self {
        WidthVector(widths)
    }

    /// Each layer of species `i` gets `omega_i / count_i`.
    pub fn uniform(pattern: &Pattern, omega: &VolumeFractions) -> Self {
        let counts = pattern.counts();
        WidthVector(
            pattern
                .layers()
                .iter()
                .map(|s| omega.get(s.index()) / counts[s.index()] as f64)
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, pattern: &Pattern, omega: &VolumeFractions, tol: f64) -> Result<()> {
        check_widths(pattern, &self.0, omega, tol)
    }
}

fn check_alignment(pattern: &Pattern, widths: &[f64]) -> Result<()> {
    if widths.len() != pattern.len() {
        return Err(Error::Widths(format!(
            "{} widths given for a {}-layer pattern",
            widths.len(),
            pattern.len()
        )));
    }
    if let Some((k, w)) = widths.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(Error::Widths(format!("layer {k} has invalid width {w}")));
    }
    Ok(())
}

fn check_widths(pattern: &Pattern, widths: &[f64], omega: &VolumeFractions, tol: f64) -> Result<()> {
    check_alignment(pattern, widths)?;
    let total: f64 = widths.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::Widths(format!("widths sum to {total}, expected 1")));
    }
    let mut per = [0.0; 3];
    for (s, w) in pattern.layers().iter().zip(widths) {
        per[s.index()] += w;
    }
    for (i, &v) in per.iter().enumerate() {
        if (v - omega.get(i)).abs() > tol {
            return Err(Error::Widths(format!(
                "species {} widths sum to {v}, expected volume fraction {}",
                ["A", "B", "C"][i],
                omega.get(i)
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub short_range: f64,
    pub long_range: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(short_range: f64, long_range: f64) -> Self {
        EnergyBreakdown { short_range, long_range, total: short_range + long_range }
    }
}

/// Interface positions `x_1..x_L` (the last equals the total width).
pub fn interface_positions(widths: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    widths
        .iter()
        .map(|&w| {
            acc.add(w);
            acc.value()
        })
        .collect()
}

/// Interface coupling matrix `D_st`, row-major `L × L`.
///
/// Interface `s` (zero-based) sits at the right edge of layer `s`.
pub fn interface_couplings(pattern: &Pattern, gamma: &GammaMatrix) -> Vec<f64> {
    let len = pattern.len();
    let idx: Vec<usize> = pattern.layers().iter().map(|s| s.index()).collect();
    let g = &gamma.0;
    let mut d = vec![0.0; len * len];
    for s in 0..len {
        let (a, b) = (idx[s], idx[(s + 1) % len]);
        for t in 0..len {
            let (c, e) = (idx[t], idx[(t + 1) % len]);
            d[s * len + t] = g[a][c] - g[a][e] - g[b][c] + g[b][e];
        }
    }
    d
}

pub(crate) fn long_range_from_positions(d: &[f64], x: &[f64]) -> f64 {
    let len = x.len();
    let mut acc = CompensatedSum::new();
    for s in 0..len {
        for t in (s + 1)..len {
            acc.add(-2.0 * d[s * len + t] * antiderivative(x[t] - x[s]));
        }
    }
    acc.value()
}

/// Short-range term: sum of tensions over cyclically adjacent layers.
pub fn short_range(pattern: &Pattern, tensions: &Tensions) -> f64 {
    let l = pattern.layers();
    let len = l.len();
    (0..len).map(|k| tensions.get(l[k].index(), l[(k + len - 1) % len].index())).sum()
}

/// Long-range term for aligned nonnegative widths; the volume constraints are not checked.
pub fn long_range_unconstrained(pattern: &Pattern, widths: &[f64], gamma: &GammaMatrix) -> Result<f64> {
    check_alignment(pattern, widths)?;
    Ok(long_range_from_positions(&interface_couplings(pattern, gamma), &interface_positions(widths)))
}

pub fn free_energy(pattern: &Pattern, widths: &WidthVector, params: &ModelParams) -> Result<EnergyBreakdown> {
    widths.check(pattern, &params.omega, WIDTH_TOL)?;
    let lr = long_range_unconstrained(pattern, widths.as_slice(), &params.gamma)?;
    Ok(EnergyBreakdown::new(short_range(pattern, &params.tensions), lr))
}

/// Gradient of the long-range term with respect to each width, with the
/// first interface anchored at 0 and the others at cumulative sums.
pub fn long_range_gradient(pattern: &Pattern, widths: &WidthVector, params: &ModelParams) -> Result<Vec<f64>> {
    widths.check(pattern, &params.omega, WIDTH_TOL)?;
    Ok(long_range_gradient_unconstrained(pattern, widths.as_slice(), &params.gamma))
}

/// As [`long_range_gradient`] without the volume checks; widths must be aligned.
pub fn long_range_gradient_unconstrained(pattern: &Pattern, widths: &[f64], gamma: &GammaMatrix) -> Vec<f64> {
    let d = interface_couplings(pattern, gamma);
    let x = interface_positions(widths);
    position_to_width_gradient(&position_gradient(&d, &x))
}

pub(crate) fn position_gradient(d: &[f64], x: &[f64]) -> Vec<f64> {
    let len = x.len();
    (0..len)
        .map(|s| {
            let mut acc = CompensatedSum::new();
            for t in 0..len {
                if t != s {
                    acc.add(-2.0 * d[s * len + t] * antiderivative_slope(x[s] - x[t]));
                }
            }
            acc.value()
        })
        .collect()
}

/// Width `k` moves interfaces `k..L`, so the width gradient is a suffix sum.
pub(crate) fn position_to_width_gradient(gx: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; gx.len()];
    let mut acc = 0.0;
    for k in (0..gx.len()).rev() {
        acc += gx[k];
        out[k] = acc;
    }
    out
}

/// Hessian of the long-range term in widths, row-major `L × L`.
pub fn long_range_hessian_unconstrained(pattern: &Pattern, widths: &[f64], gamma: &GammaMatrix) -> Vec<f64> {
    width_hessian(&interface_couplings(pattern, gamma), &interface_positions(widths))
}

pub(crate) fn width_hessian(d: &[f64], x: &[f64]) -> Vec<f64> {
    let len = x.len();
    let mut hx = vec![0.0; len * len];
    for s in 0..len {
        let mut diag = 0.0;
        for t in 0..len {
            if t != s {
                let v = 2.0 * d[s * len + t] * green_kernel(x[s] - x[t]);
                hx[s * len + t] = v;
                diag -= v;
            }
        }
        hx[s * len + s] = diag;
    }
    // H^w_kl = sum_{s >= k} sum_{t >= l} H^x_st: suffix sums along both axes.
    for s in 0..len {
        for t in (0..len - 1).rev() {
            hx[s * len + t] += hx[s * len + t + 1];
        }
    }
    for s in (0..len - 1).rev() {
        for t in 0..len {
            hx[s * len + t] += hx[(s + 1) * len + t];
        }
    }
    hx
}

/// Long-range term from the piecewise-linear potential field.
///
/// Builds `w` with `w(0) = 0` and slope `e_{p_k} - omega` on layer `k`; the
/// long-range term is `∫ (w - mean)^T gamma (w - mean)`.
pub fn long_range_via_field(pattern: &Pattern, widths: &WidthVector, params: &ModelParams) -> Result<f64> {
    widths.check(pattern, &params.omega, WIDTH_TOL)?;
    let g = &params.gamma.0;
    let om = params.omega.as_array();
    let quad = |u: &[f64; 3], v: &[f64; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += u[i] * g[i][j] * v[j];
            }
        }
        s
    };
    let mut start = [0.0; 3];
    let mut q = CompensatedSum::new();
    let mut mean = [CompensatedSum::new(); 3];
    for (s, &h) in pattern.layers().iter().zip(widths.as_slice()) {
        let mut end = start;
        for i in 0..3 {
            let slope = if i == s.index() { 1.0 } else { 0.0 } - om[i];
            end[i] = start[i] + slope * h;
        }
        let cross = 0.5 * (quad(&start, &end) + quad(&end, &start));
        q.add(h / 3.0 * (quad(&start, &start) + cross + quad(&end, &end)));
        for i in 0..3 {
            mean[i].add(0.5 * h * (start[i] + end[i]));
        }
        start = end;
    }
    let m = [mean[0].value(), mean[1].value(), mean[2].value()];
    Ok(q.value() - quad(&m, &m))
}

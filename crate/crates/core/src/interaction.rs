//! Long-range coefficient matrices: the named families, the charge-interaction
//! counterpart `f = diag(w) gamma diag(w)`, admissibility and canonicalization.
//!
//! Matrices are stored row-major as `[[f64; 3]; 3]` so they serialize directly
//! as nested JSON arrays.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default admissibility tolerance, relative to the Frobenius norm.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

const FRACTION_SUM_TOL: f64 = 1e-12;

/// Overall volume fractions of species A, B and C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct VolumeFractions {
    a: f64,
    b: f64,
    c: f64,
}

impl VolumeFractions {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidFractions(format!("non-finite component in ({a}, {b}, {c})")));
        }
        if a <= 0.0 || b <= 0.0 || c <= 0.0 {
            return Err(Error::InvalidFractions(format!(
                "every component must be positive, got ({a}, {b}, {c})"
            )));
        }
        let total = a + b + c;
        if (total - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::InvalidFractions(format!("components sum to {total}, expected 1")));
        }
        Ok(Self { a, b, c })
    }

    /// Builds fractions from the first two components; the third is `1 - a - b`.
    pub fn from_ab(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, 1.0 - a - b)
    }

    pub fn equal() -> Self {
        Self { a: 1.0 / 3.0, b: 1.0 / 3.0, c: 1.0 / 3.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn get(&self, species: usize) -> f64 {
        self.as_array()[species]
    }

    fn pairwise(&self) -> f64 {
        self.a * self.b + self.a * self.c + self.b * self.c
    }
}

impl TryFrom<[f64; 3]> for VolumeFractions {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<VolumeFractions> for [f64; 3] {
    fn from(w: VolumeFractions) -> Self {
        w.as_array()
    }
}

/// The 3x3 long-range coefficient matrix of the free energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GammaMatrix(pub [[f64; 3]; 3]);

/// The charge-interaction matrix `f = diag(w) gamma diag(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InteractionMatrix(pub [[f64; 3]; 3]);

/// The 2x2 matrix obtained by eliminating the third species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReducedMatrix(pub [[f64; 2]; 2]);

fn to_na(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[i][j])
}

fn from_na(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    out
}

fn frobenius(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn symmetrized(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    let h = to_na(m);
    (h + h.transpose()) * 0.5
}

fn sorted_eigenvalues(m: Matrix3<f64>) -> [f64; 3] {
    let eig = SymmetricEigen::new(m);
    let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    ev.sort_by(f64::total_cmp);
    ev
}

impl GammaMatrix {
    pub fn zero() -> Self {
        GammaMatrix([[0.0; 3]; 3])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        GammaMatrix(self.0.map(|row| row.map(|x| x * s)))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.frobenius_norm().max(1.0);
        (0..3).all(|i| (0..3).all(|j| (self.0[i][j] - self.0[j][i]).abs() <= tol * scale))
    }

    /// `gamma * v`.
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    /// Eliminates the third species: `T(H) = A^T H A` with `A = [I; -1 -1]`.
    pub fn reduce(&self) -> ReducedMatrix {
        let h = &self.0;
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = h[i][j] - h[i][2] - h[2][j] + h[2][2];
            }
        }
        ReducedMatrix(r)
    }
}

impl InteractionMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.frobenius_norm().max(1.0);
        (0..3).all(|i| (0..3).all(|j| (self.0[i][j] - self.0[j][i]).abs() <= tol * scale))
    }

    pub fn row_sums(&self) -> [f64; 3] {
        self.0.map(|row| row.iter().sum())
    }

    pub fn scaled(&self, s: f64) -> Self {
        InteractionMatrix(self.0.map(|row| row.map(|x| x * s)))
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        sorted_eigenvalues(symmetrized(&self.0))
    }
}

impl ReducedMatrix {
    pub fn identity() -> Self {
        ReducedMatrix([[1.0, 0.0], [0.0, 1.0]])
    }

    fn to_na(self) -> Matrix2<f64> {
        Matrix2::new(self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1])
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let eig = SymmetricEigen::new(self.to_na());
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1]];
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn require_positive_strength(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveStrength(gamma))
    }
}

/// The mean-field matrix with B as the middle block.
pub fn build_ohta(omega: &VolumeFractions, gamma: f64) -> Result<GammaMatrix> {
    require_positive_strength(gamma)?;
    let (a, b, c) = (omega.a, omega.b, omega.c);
    let s = 3.0 * gamma / (3.0 - 2.0 * (a + c) - (a - c).powi(2));
    Ok(GammaMatrix([
        [s * (2.0 * b + 2.0 * c) / (a * a), -s * (2.0 * c + 3.0 * b) / (a * b), s * b / (a * c)],
        [-s * (2.0 * c + 3.0 * b) / (a * b), s * (2.0 + 4.0 * b) / (b * b), -s * (2.0 * a + 3.0 * b) / (b * c)],
        [s * b / (a * c), -s * (2.0 * a + 3.0 * b) / (b * c), s * (2.0 * a + 2.0 * b) / (c * c)],
    ]))
}

/// The permutation-symmetric matrix.
pub fn build_ren(omega: &VolumeFractions, gamma: f64) -> Result<GammaMatrix> {
    require_positive_strength(gamma)?;
    let (a, b, c) = (omega.a, omega.b, omega.c);
    let s = 3.0 * gamma / (4.0 * omega.pairwise());
    Ok(GammaMatrix([
        [s * (b + c) / (a * a), -s * c / (a * b), -s * b / (a * c)],
        [-s * c / (a * b), s * (a + c) / (b * b), -s * a / (b * c)],
        [-s * b / (a * c), -s * a / (b * c), s * (a + b) / (c * c)],
    ]))
}

/// Diblock/homopolymer blend: C carries no charge.
pub fn build_blend(omega: &VolumeFractions, gamma: f64) -> Result<GammaMatrix> {
    require_positive_strength(gamma)?;
    let (a, b) = (omega.a, omega.b);
    let s = 0.75 * gamma / (a + b);
    Ok(GammaMatrix([
        [s / (a * a), -s / (a * b), 0.0],
        [-s / (a * b), s / (b * b), 0.0],
        [0.0, 0.0, 0.0],
    ]))
}

/// Expands a reduced matrix: `B^T reduced B` with
/// `B = [[1-a, -a, -a], [-b, 1-b, -b]]`, so the result annihilates `(a, b, 1-a-b)`.
pub fn build_general(reduced: &ReducedMatrix, a: f64, b: f64) -> Result<GammaMatrix> {
    let r = &reduced.0;
    let scale = r.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if (r[0][1] - r[1][0]).abs() > 1e-12 * scale {
        return Err(Error::IndefiniteReduced(reduced.eigenvalues()));
    }
    let ev = reduced.eigenvalues();
    if ev[0] < -ADMISSIBILITY_TOL * scale {
        return Err(Error::IndefiniteReduced(ev));
    }
    Ok(expand_reduced(reduced, [a, b]))
}

fn expand_reduced(reduced: &ReducedMatrix, w: [f64; 2]) -> GammaMatrix {
    let bm = [[1.0 - w[0], -w[0], -w[0]], [-w[1], 1.0 - w[1], -w[1]]];
    let r = &reduced.0;
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in 0..2 {
                for q in 0..2 {
                    acc += bm[p][i] * r[p][q] * bm[q][j];
                }
            }
            *x = acc;
        }
    }
    GammaMatrix(out)
}

pub fn f_from_gamma(gamma: &GammaMatrix, omega: &VolumeFractions) -> InteractionMatrix {
    let w = omega.as_array();
    let mut f = gamma.0;
    for (i, row) in f.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x *= w[i] * w[j];
        }
    }
    InteractionMatrix(f)
}

pub fn gamma_from_f(f: &InteractionMatrix, omega: &VolumeFractions) -> GammaMatrix {
    let w = omega.as_array();
    let mut g = f.0;
    for (i, row) in g.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x /= w[i] * w[j];
        }
    }
    GammaMatrix(g)
}

/// Outcome of an admissibility check, with both residuals scaled by `||gamma||_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// `||gamma w|| / ||gamma||_F`.
    pub null_residual: f64,
    /// Smallest eigenvalue of the symmetric part over `||gamma||_F`.
    pub min_eigenvalue: f64,
    pub eigenvalues: [f64; 3],
    pub tolerance: f64,
}

pub fn is_admissible(gamma: &GammaMatrix, omega: &VolumeFractions, tol: f64) -> AdmissibilityReport {
    let norm = gamma.frobenius_norm();
    let scale = if norm > 0.0 { norm } else { 1.0 };
    let gw = gamma.apply(omega.as_array());
    let null_residual = gw.iter().map(|x| x * x).sum::<f64>().sqrt() / scale;
    let eigenvalues = sorted_eigenvalues(symmetrized(&gamma.0));
    let min_eigenvalue = eigenvalues[0] / scale;
    AdmissibilityReport {
        admissible: null_residual <= tol && min_eigenvalue >= -tol,
        null_residual,
        min_eigenvalue,
        eigenvalues,
        tolerance: tol,
    }
}

/// Pairwise coefficients of a row-sum-free interaction matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub f12: f64,
    pub f13: f64,
    pub f23: f64,
}

impl Decomposition {
    pub fn new(f12: f64, f13: f64, f23: f64) -> Self {
        Self { f12, f13, f23 }
    }

    /// `f12 + f13 + f23 <= -sqrt(f12^2 + f13^2 + f23^2)`, with a relative slack.
    pub fn is_psd(&self, tol: f64) -> bool {
        let norm = self.norm();
        self.f12 + self.f13 + self.f23 <= -norm + tol * norm.max(f64::MIN_POSITIVE)
    }

    pub fn norm(&self) -> f64 {
        (self.f12 * self.f12 + self.f13 * self.f13 + self.f23 * self.f23).sqrt()
    }

    pub fn positive_count(&self) -> usize {
        [self.f12, self.f13, self.f23].iter().filter(|&&x| x > 0.0).count()
    }

    /// Rebuilds the matrix as a combination of the three pairwise Coulomb blocks.
    pub fn to_matrix(&self) -> InteractionMatrix {
        let Decomposition { f12, f13, f23 } = *self;
        InteractionMatrix([
            [-f12 - f13, f12, f13],
            [f12, -f12 - f23, f23],
            [f13, f23, -f13 - f23],
        ])
    }
}

/// Result of [`decompose_f`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub coefficients: Decomposition,
    pub psd: bool,
    pub positive_count: usize,
}

pub fn decompose_f(f: &InteractionMatrix, tol: f64) -> Result<DecompositionReport> {
    let scale = f.frobenius_norm();
    let residual = f.row_sums().iter().map(|x| x * x).sum::<f64>().sqrt();
    if residual > tol * scale.max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(Error::RowSumResidual(residual));
    }
    let sym = |i: usize, j: usize| 0.5 * (f.0[i][j] + f.0[j][i]);
    let coefficients = Decomposition::new(sym(0, 1), sym(0, 2), sym(1, 2));
    Ok(DecompositionReport {
        coefficients,
        psd: coefficients.is_psd(tol),
        positive_count: coefficients.positive_count(),
    })
}

/// Unique representative of the class `H + {1 p^T + p 1^T}` that annihilates `omega`.
///
/// The input is symmetrized first.
pub fn canonicalize_gamma(h: &GammaMatrix, omega: &VolumeFractions) -> GammaMatrix {
    let sym = GammaMatrix(from_na(&symmetrized(&h.0)));
    expand_reduced(&sym.reduce(), [omega.a, omega.b])
}

/// Angular radius of the admissible cap around `-(1,1,1)/sqrt(3)`.
pub fn cap_half_angle() -> f64 {
    (1.0 / 3.0_f64.sqrt()).acos()
}

/// Unit-norm admissible coefficients on a `(theta, phi)` grid over the cap.
///
/// Rings sit at `theta = half_angle * (i + 1) / n_theta`, so the outermost
/// ring lies on the rim where the matrix is rank one.
pub fn cap_grid(n_theta: usize, n_phi: usize) -> Vec<Decomposition> {
    let axis = [-1.0 / 3.0_f64.sqrt(); 3];
    let e1 = [1.0 / 2.0_f64.sqrt(), -1.0 / 2.0_f64.sqrt(), 0.0];
    let e2 = [1.0 / 6.0_f64.sqrt(), 1.0 / 6.0_f64.sqrt(), -2.0 / 6.0_f64.sqrt()];
    let half = cap_half_angle();
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = half * (i + 1) as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let v: Vec<f64> = (0..3)
                .map(|k| theta.cos() * axis[k] + theta.sin() * (phi.cos() * e1[k] + phi.sin() * e2[k]))
                .collect();
            out.push(Decomposition::new(v[0], v[1], v[2]));
        }
    }
    out
}
